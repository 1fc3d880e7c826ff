//! Split / collapse / flip / tangential smoothing on closed triangle meshes.

use std::collections::BTreeSet;

use nalgebra::Vector3;

use super::{ActiveRegion, RemeshParams, COLLAPSE_FACTOR, SPLIT_FACTOR};
use crate::geometry::Point;
use crate::mesh::SurfaceMesh;

struct Work {
    pos: Vec<Point<3>>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    face_region: Vec<bool>,
    vert_alive: Vec<bool>,
    incident: Vec<Vec<usize>>,
}

fn normal(p: &[Point<3>], f: &[usize; 3]) -> Vector3<f64> {
    (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]))
}

impl Work {
    fn new(mesh: &SurfaceMesh<3>, region: &ActiveRegion) -> Self {
        let mut incident = vec![Vec::new(); mesh.vertices.len()];
        for (f, el) in mesh.elements.iter().enumerate() {
            for &v in el {
                incident[v].push(f);
            }
        }
        Self {
            pos: mesh.vertices.clone(),
            faces: mesh.elements.clone(),
            face_alive: vec![true; mesh.elements.len()],
            face_region: region.mask(mesh.elements.len()),
            vert_alive: vec![true; mesh.vertices.len()],
            incident,
        }
    }

    fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .flat_map(|(f, _)| (0..3).map(move |k| [f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3])]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    fn edge_faces(&self, a: usize, b: usize) -> Vec<usize> {
        if !self.vert_alive[a] || !self.vert_alive[b] {
            return Vec::new();
        }
        self.incident[a].iter().copied().filter(|&f| self.faces[f].contains(&b)).collect()
    }

    fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.incident[v].iter().flat_map(|&f| self.faces[f]).filter(|&u| u != v).collect()
    }

    fn all_region(&self, faces: &[usize]) -> bool {
        faces.iter().all(|&f| self.face_region[f])
    }

    fn length(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).norm()
    }

    fn opposite(&self, f: usize, a: usize, b: usize) -> usize {
        self.faces[f].iter().copied().find(|&v| v != a && v != b).expect("triangle")
    }

    fn split(&mut self, a: usize, b: usize) -> bool {
        let faces = self.edge_faces(a, b);
        if faces.len() != 2 || !self.all_region(&faces) {
            return false;
        }
        let m = self.pos.len();
        self.pos.push((self.pos[a] + self.pos[b]) * 0.5);
        self.vert_alive.push(true);
        self.incident.push(Vec::new());
        for f in faces {
            let face = self.faces[f];
            let k = (0..3)
                .find(|&k| {
                    let (x, y) = (face[k], face[(k + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("edge in face");
            let (x, y, z) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
            let g = self.faces.len();
            self.faces[f] = [x, m, z];
            self.faces.push([m, y, z]);
            self.face_alive.push(true);
            self.face_region.push(true);
            self.incident[y].retain(|&h| h != f);
            self.incident[y].push(g);
            self.incident[z].push(g);
            self.incident[m].push(f);
            self.incident[m].push(g);
        }
        true
    }

    fn collapse(&mut self, a: usize, b: usize, h: f64) -> bool {
        let shared = self.edge_faces(a, b);
        if shared.len() != 2 {
            return false;
        }
        let c = self.opposite(shared[0], a, b);
        let d = self.opposite(shared[1], a, b);
        if c == d {
            return false;
        }
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: BTreeSet<usize> = na.intersection(&nb).copied().collect();
        if common != BTreeSet::from([c, d]) {
            return false;
        }
        if self.neighbors(c).len() <= 3 || self.neighbors(d).len() <= 3 || na.len() + nb.len() < 7 {
            return false;
        }
        let ring: Vec<usize> = self.incident[a].iter().chain(&self.incident[b]).copied().collect();
        if !self.all_region(&ring) {
            return false;
        }
        let m = (self.pos[a] + self.pos[b]) * 0.5;
        let limit = SPLIT_FACTOR * h;
        if na.union(&nb).any(|&x| x != a && x != b && (self.pos[x] - m).norm() > limit) {
            return false;
        }
        let moved = |v: usize| if v == a || v == b { m } else { self.pos[v] };
        for &f in &ring {
            if shared.contains(&f) {
                continue;
            }
            let face = self.faces[f];
            let before = normal(&self.pos, &face);
            let [p0, p1, p2] = face.map(moved);
            let after = (p1 - p0).cross(&(p2 - p0));
            if before.dot(&after) <= 0.0 {
                return false;
            }
        }
        self.pos[a] = m;
        for f in shared.iter().copied() {
            self.face_alive[f] = false;
            for v in self.faces[f] {
                self.incident[v].retain(|&g| g != f);
            }
        }
        for f in std::mem::take(&mut self.incident[b]) {
            for v in self.faces[f].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            self.incident[a].push(f);
        }
        self.vert_alive[b] = false;
        true
    }

    fn flip(&mut self, a: usize, b: usize) -> bool {
        let shared = self.edge_faces(a, b);
        if shared.len() != 2 || !self.all_region(&shared) {
            return false;
        }
        let directed = |f: &[usize; 3], x: usize, y: usize| (0..3).any(|k| f[k] == x && f[(k + 1) % 3] == y);
        let (f1, f2) = if directed(&self.faces[shared[0]], a, b) {
            (shared[0], shared[1])
        } else {
            (shared[1], shared[0])
        };
        if !directed(&self.faces[f1], a, b) || !directed(&self.faces[f2], b, a) {
            return false;
        }
        let c = self.opposite(f1, a, b);
        let d = self.opposite(f2, a, b);
        if c == d || self.neighbors(c).contains(&d) {
            return false;
        }
        let val = |v: usize| self.neighbors(v).len() as i64;
        let (va, vb, vc, vd) = (val(a), val(b), val(c), val(d));
        if va <= 3 || vb <= 3 {
            return false;
        }
        let dev = |x: i64| (x - 6).abs();
        let before = dev(va) + dev(vb) + dev(vc) + dev(vd);
        let after = dev(va - 1) + dev(vb - 1) + dev(vc + 1) + dev(vd + 1);
        if after >= before {
            return false;
        }
        let old = normal(&self.pos, &self.faces[f1]) + normal(&self.pos, &self.faces[f2]);
        let g1 = [c, a, d];
        let g2 = [d, b, c];
        if normal(&self.pos, &g1).dot(&old) <= 0.0 || normal(&self.pos, &g2).dot(&old) <= 0.0 {
            return false;
        }
        self.faces[f1] = g1;
        self.faces[f2] = g2;
        self.incident[b].retain(|&f| f != f1);
        self.incident[a].retain(|&f| f != f2);
        self.incident[d].push(f1);
        self.incident[c].push(f2);
        true
    }

    fn smooth(&mut self, lambda: f64) {
        let mut updates = Vec::new();
        for v in 0..self.pos.len() {
            if !self.vert_alive[v] || self.incident[v].is_empty() || !self.all_region(&self.incident[v]) {
                continue;
            }
            let mut n = Vector3::zeros();
            let mut weighted = Vector3::zeros();
            let mut total = 0.0;
            for &f in &self.incident[v] {
                let face = self.faces[f];
                let fn_ = normal(&self.pos, &face);
                let area = 0.5 * fn_.norm();
                n += fn_;
                // Each face contributes its area to the two neighbours it holds.
                for &u in &face {
                    if u != v {
                        weighted += self.pos[u] * area;
                        total += area;
                    }
                }
            }
            let len = n.norm();
            if !(total > 0.0) || !(len > 0.0) {
                continue;
            }
            let n = n / len;
            let delta = weighted / total - self.pos[v];
            let tangential = delta - n * n.dot(&delta);
            updates.push((v, self.pos[v] + tangential * lambda));
        }
        for (v, p) in updates {
            self.pos[v] = p;
        }
    }

    fn finish(self) -> SurfaceMesh<3> {
        let mut map = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for (v, p) in self.pos.iter().enumerate() {
            if self.vert_alive[v] && !self.incident[v].is_empty() {
                map[v] = vertices.len();
                vertices.push(*p);
            }
        }
        let elements = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| f.map(|v| map[v]))
            .collect();
        SurfaceMesh::new(vertices, elements)
    }
}

/// Remesh a closed triangle mesh inside `region`. Every operation that would
/// change a face outside the region is skipped, so the rest of the surface
/// is carried over untouched.
pub fn remesh(mesh: &SurfaceMesh<3>, region: &ActiveRegion, params: &RemeshParams) -> SurfaceMesh<3> {
    if region.is_empty() {
        return mesh.clone();
    }
    let h = params.h;
    let mut work = Work::new(mesh, region);
    for _ in 0..params.iterations {
        for [a, b] in work.edges() {
            if work.edge_faces(a, b).len() == 2 && work.length(a, b) > SPLIT_FACTOR * h {
                work.split(a, b);
            }
        }
        for [a, b] in work.edges() {
            if work.vert_alive[a] && work.vert_alive[b] && work.length(a, b) < COLLAPSE_FACTOR * h {
                work.collapse(a, b, h);
            }
        }
        for [a, b] in work.edges() {
            work.flip(a, b);
        }
        work.smooth(params.smoothing);
    }
    work.finish()
}
