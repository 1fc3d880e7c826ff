use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sphere_reach::io::{read_mesh, read_samples, write_mesh};
use sphere_reach::{SampleKind, SurfaceMesh};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphere-reach")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn circle(&self) -> PathBuf {
        let p = self.path("circle.obj");
        write_mesh(&p, &SurfaceMesh::circle(256, 0.5)).unwrap();
        p
    }

    fn sphere(&self) -> PathBuf {
        let p = self.path("sphere.obj");
        write_mesh(&p, &SurfaceMesh::icosphere(3, 0.5)).unwrap();
        p
    }
}

#[test]
fn grid_sample_file_layout() {
    let f = Files::new();
    let out = f.path("s.txt");
    let o = bin(&["sample", s(&f.sphere()), "--grid", "10", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sdfsamples 3 1000 signed");
    assert!(lines.next().unwrap().starts_with("grid 10 10 10 "));
    let set = read_samples::<3>(&out).unwrap();
    assert_eq!(set.len(), 1000);
    assert!(set.grid().is_some());
}

#[test]
fn cloud_sampling_is_reproducible() {
    let f = Files::new();
    let gt = f.sphere();
    let run = |name: &str, seed: &str| {
        let out = f.path(name);
        let o = bin(&["sample", s(&gt), "--cloud", "500", "--noise-pos", "0.05", "--seed", seed, "--out", s(&out)]);
        assert!(o.status.success());
        fs::read(out).unwrap()
    };
    let (a, b, c) = (run("a", "7"), run("b", "7"), run("c", "8"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn unsigned_circle_is_recovered() {
    let f = Files::new();
    let samples = f.path("u.txt");
    let mesh = f.path("u.obj");
    let report = f.path("u.csv");
    let summary = f.path("u.json");
    assert!(bin(&["sample", s(&f.circle()), "--grid", "20", "--kind", "unsigned", "--out", s(&samples)]).status.success());
    assert_eq!(read_samples::<2>(&samples).unwrap().kind(), SampleKind::Unsigned);
    let o = bin(&[
        "reconstruct",
        s(&samples),
        "--variant",
        "unsigned",
        "--out",
        s(&mesh),
        "--report",
        s(&report),
        "--summary",
        s(&summary),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_mesh::<2>(&mesh).unwrap();
    let v = m.validate();
    assert!(v.is_valid() && v.components == 1);
    // Normalized circle of radius 1/2 in the unit box.
    let r: f64 = m.vertices.iter().map(|p| p.norm()).sum::<f64>() / m.vertices.len() as f64;
    assert!((r - 0.5).abs() < 0.02, "{r}");
    let csv = fs::read_to_string(report).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("round,stage,iteration,h,tau,energy"));
    assert!(csv.lines().count() > 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert!(json["final_energy"].as_f64().unwrap() >= 0.0);
    assert!(json["aborted"].is_null());
}

#[test]
fn signed_sphere_with_mc_start() {
    let f = Files::new();
    let samples = f.path("s.txt");
    let mesh = f.path("s.obj");
    assert!(bin(&["sample", s(&f.sphere()), "--grid", "8", "--out", s(&samples)]).status.success());
    let o = bin(&["reconstruct", s(&samples), "--init", "mc", "--out", s(&mesh)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_mesh::<3>(&mesh).unwrap();
    assert!(m.validate().is_valid());
    assert_eq!(m.validate().euler_characteristic, 2);
}

#[test]
fn clamped_variant_runs() {
    let f = Files::new();
    let samples = f.path("c.txt");
    let mesh = f.path("c.obj");
    assert!(bin(&["sample", s(&f.circle()), "--grid", "12", "--kind", "clamped:0.2", "--out", s(&samples)]).status.success());
    let o = bin(&["reconstruct", s(&samples), "--variant", "clamped:0.2", "--out", s(&mesh)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read_mesh::<2>(&mesh).unwrap().validate().is_valid());
}

#[test]
fn baseline_outputs() {
    let f = Files::new();
    let samples = f.path("b.txt");
    let mesh = f.path("b.obj");
    assert!(bin(&["sample", s(&f.circle()), "--grid", "16", "--out", s(&samples)]).status.success());
    assert!(bin(&["baseline", s(&samples), "--out", s(&mesh)]).status.success());
    let text = fs::read_to_string(&mesh).unwrap();
    assert!(text.lines().any(|l| l.starts_with("l ")));
    assert!(!text.lines().any(|l| l.starts_with("f ")));

    // A tiny circle between grid points: every value is positive.
    let tiny = f.path("tiny.obj");
    write_mesh(&tiny, &SurfaceMesh::circle(32, 0.01).map_vertices(|p| p + sphere_reach::Point::<2>::new(0.1, 0.1))).unwrap();
    let tiny_samples = f.path("tiny.txt");
    assert!(bin(&["sample", s(&tiny), "--grid", "4", "--no-normalize", "--out", s(&tiny_samples)]).status.success());
    let o = bin(&["baseline", s(&tiny_samples), "--out", s(&mesh)]);
    assert!(o.status.success());
    assert!(!o.stderr.is_empty());
    assert!(read_mesh::<2>(&mesh).unwrap().is_empty());

    let cloud = f.path("cloud.txt");
    assert!(bin(&["sample", s(&f.circle()), "--cloud", "50", "--out", s(&cloud)]).status.success());
    assert_eq!(bin(&["baseline", s(&cloud), "--out", s(&mesh)]).status.code(), Some(1));
}

#[test]
fn compare_ground_truth_with_itself() {
    let f = Files::new();
    let gt = f.circle();
    let samples = f.path("s.txt");
    let out = f.path("cmp.csv");
    assert!(bin(&["sample", s(&gt), "--grid", "10", "--out", s(&samples)]).status.success());
    // The ground truth is normalized by both commands, so compare it against
    // its own normalized form.
    let normalized = f.path("n.obj");
    let m = sphere_reach::sampling::normalize_to_unit_box(&read_mesh::<2>(&gt).unwrap()).unwrap();
    write_mesh(&normalized, &m).unwrap();
    let o = bin(&["compare", s(&gt), s(&samples), s(&normalized), s(&normalized), "--points", "2000", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].iter().skip(1).collect::<Vec<_>>(), rows[1].iter().skip(1).collect::<Vec<_>>());
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    for name in ["hausdorff", "chamfer", "sdf_energy"] {
        let v: f64 = rows[0][col(name)].parse().unwrap();
        assert!(v < 1e-9, "{name} = {v}");
    }
}

#[test]
fn exit_codes() {
    let f = Files::new();
    let missing = f.path("nope.obj");
    let o = bin(&["sample", s(&missing), "--grid", "4", "--out", s(&f.path("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.obj"));
    assert_eq!(bin(&["reconstruct"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    let o = bin(&["reconstruct", s(&f.path("nope.txt")), "--out", s(&f.path("o.obj"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.txt"));
}
