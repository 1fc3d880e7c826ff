//! Split / collapse / tangential smoothing on closed polylines.

use super::{ActiveRegion, RemeshParams, COLLAPSE_FACTOR, SPLIT_FACTOR};
use crate::geometry::Point;
use crate::mesh::SurfaceMesh;

const MIN_LOOP: usize = 3;

struct Work {
    pos: Vec<Point<2>>,
    segs: Vec<[usize; 2]>,
    seg_alive: Vec<bool>,
    seg_region: Vec<bool>,
    vert_alive: Vec<bool>,
    out_seg: Vec<usize>,
    in_seg: Vec<usize>,
    loop_of: Vec<usize>,
    loop_len: Vec<usize>,
    loop_area: Vec<f64>,
}

fn cross(a: &Point<2>, b: &Point<2>) -> f64 {
    a.x * b.y - a.y * b.x
}

impl Work {
    fn new(mesh: &SurfaceMesh<2>, region: &ActiveRegion) -> Self {
        let nv = mesh.vertices.len();
        let mut out_seg = vec![usize::MAX; nv];
        let mut in_seg = vec![usize::MAX; nv];
        for (s, &[a, b]) in mesh.elements.iter().enumerate() {
            out_seg[a] = s;
            in_seg[b] = s;
        }
        let mut loop_of = vec![usize::MAX; nv];
        let mut loop_len = Vec::new();
        for start in 0..nv {
            if loop_of[start] != usize::MAX || out_seg[start] == usize::MAX {
                continue;
            }
            let id = loop_len.len();
            let mut len = 0;
            let mut v = start;
            while loop_of[v] == usize::MAX {
                loop_of[v] = id;
                len += 1;
                let s = out_seg[v];
                if s == usize::MAX {
                    break;
                }
                v = mesh.elements[s][1];
            }
            loop_len.push(len);
        }
        Self {
            pos: mesh.vertices.clone(),
            segs: mesh.elements.clone(),
            seg_alive: vec![true; mesh.elements.len()],
            seg_region: region.mask(mesh.elements.len()),
            vert_alive: vec![true; nv],
            out_seg,
            in_seg,
            loop_area: vec![0.0; loop_len.len()],
            loop_of,
            loop_len,
        }
    }

    fn refresh_areas(&mut self) {
        self.loop_area.iter_mut().for_each(|a| *a = 0.0);
        for (s, &[a, b]) in self.segs.iter().enumerate() {
            let id = self.loop_of[a];
            if self.seg_alive[s] && id != usize::MAX {
                self.loop_area[id] += 0.5 * cross(&self.pos[a], &self.pos[b]);
            }
        }
    }

    fn order(&self) -> Vec<usize> {
        let mut keyed: Vec<([usize; 2], usize)> = self
            .segs
            .iter()
            .enumerate()
            .filter(|(s, _)| self.seg_alive[*s])
            .map(|(s, &[a, b])| ([a.min(b), a.max(b)], s))
            .collect();
        keyed.sort_unstable();
        keyed.into_iter().map(|(_, s)| s).collect()
    }

    fn length(&self, s: usize) -> f64 {
        let [a, b] = self.segs[s];
        (self.pos[a] - self.pos[b]).norm()
    }

    fn closed(&self, v: usize) -> bool {
        self.in_seg[v] != usize::MAX && self.out_seg[v] != usize::MAX
    }

    fn split(&mut self, s: usize) {
        let [a, b] = self.segs[s];
        let m = self.pos.len();
        let g = self.segs.len();
        self.pos.push((self.pos[a] + self.pos[b]) * 0.5);
        self.vert_alive.push(true);
        self.segs[s] = [a, m];
        self.segs.push([m, b]);
        self.seg_alive.push(true);
        self.seg_region.push(true);
        self.in_seg.push(s);
        self.out_seg.push(g);
        self.in_seg[b] = g;
        let id = self.loop_of[a];
        self.loop_of.push(id);
        if id != usize::MAX {
            self.loop_len[id] += 1;
        }
    }

    fn collapse(&mut self, s: usize, h: f64) -> bool {
        let [a, b] = self.segs[s];
        if !self.closed(a) || !self.closed(b) {
            return false;
        }
        let (prev_seg, next_seg) = (self.in_seg[a], self.out_seg[b]);
        let id = self.loop_of[a];
        if id == usize::MAX || self.loop_len[id] <= MIN_LOOP {
            return false;
        }
        if !self.seg_region[prev_seg] || !self.seg_region[next_seg] {
            return false;
        }
        let (p, n) = (self.segs[prev_seg][0], self.segs[next_seg][1]);
        let m = (self.pos[a] + self.pos[b]) * 0.5;
        let limit = SPLIT_FACTOR * h;
        if (m - self.pos[p]).norm() > limit || (self.pos[n] - m).norm() > limit {
            return false;
        }
        // Neither neighbouring segment may reverse direction.
        if (m - self.pos[p]).dot(&(self.pos[a] - self.pos[p])) <= 0.0
            || (self.pos[n] - m).dot(&(self.pos[n] - self.pos[b])) <= 0.0
        {
            return false;
        }
        let chord = self.pos[n] - self.pos[p];
        if (m - self.pos[p]).dot(&chord) <= 0.0 || (self.pos[n] - m).dot(&chord) <= 0.0 {
            return false;
        }
        // The loop must keep its orientation.
        let (pp, pa, pb, pn) = (self.pos[p], self.pos[a], self.pos[b], self.pos[n]);
        let delta = 0.5 * (cross(&pp, &m) + cross(&m, &pn) - cross(&pp, &pa) - cross(&pa, &pb) - cross(&pb, &pn));
        let area = self.loop_area[id];
        if (area + delta) * area <= 0.0 {
            return false;
        }
        self.loop_area[id] += delta;
        self.pos[a] = m;
        self.segs[next_seg] = [a, n];
        self.out_seg[a] = next_seg;
        self.seg_alive[s] = false;
        self.vert_alive[b] = false;
        self.loop_len[id] -= 1;
        true
    }

    fn smooth(&mut self, lambda: f64) {
        let mut updates = Vec::new();
        for v in 0..self.pos.len() {
            if !self.vert_alive[v] || !self.closed(v) {
                continue;
            }
            let (si, so) = (self.in_seg[v], self.out_seg[v]);
            if !self.seg_region[si] || !self.seg_region[so] {
                continue;
            }
            let (prev, next) = (self.pos[self.segs[si][0]], self.pos[self.segs[so][1]]);
            let x = self.pos[v];
            let (l1, l2) = ((x - prev).norm(), (next - x).norm());
            let tangent = next - prev;
            let tl = tangent.norm();
            if !(l1 + l2 > 0.0) || !(tl > 0.0) {
                continue;
            }
            let centroid = ((prev + x) * (0.5 * l1) + (x + next) * (0.5 * l2)) / (l1 + l2);
            let t = tangent / tl;
            updates.push((v, x + t * (t.dot(&(centroid - x)) * lambda)));
        }
        for (v, p) in updates {
            self.pos[v] = p;
        }
    }

    fn finish(self) -> SurfaceMesh<2> {
        let mut map = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for (v, p) in self.pos.iter().enumerate() {
            if self.vert_alive[v] {
                map[v] = vertices.len();
                vertices.push(*p);
            }
        }
        let elements = self
            .segs
            .iter()
            .zip(&self.seg_alive)
            .filter(|(_, &alive)| alive)
            .map(|(s, _)| s.map(|v| map[v]))
            .collect();
        SurfaceMesh::new(vertices, elements)
    }
}

/// Remesh closed loops inside `region`; segments outside it are kept as is.
pub fn remesh(mesh: &SurfaceMesh<2>, region: &ActiveRegion, params: &RemeshParams) -> SurfaceMesh<2> {
    if region.is_empty() {
        return mesh.clone();
    }
    let h = params.h;
    let mut work = Work::new(mesh, region);
    for _ in 0..params.iterations {
        for s in work.order() {
            if work.seg_region[s] && work.length(s) > SPLIT_FACTOR * h {
                work.split(s);
            }
        }
        work.refresh_areas();
        for s in work.order() {
            if work.seg_alive[s] && work.seg_region[s] && work.length(s) < COLLAPSE_FACTOR * h {
                work.collapse(s, h);
            }
        }
        work.smooth(params.smoothing);
    }
    work.finish()
}
