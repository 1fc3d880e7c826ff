use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::samples::SampleKind;

fn corr3(sample: usize, p: Point<3>, s: f64, c: Point<3>, sd: f64) -> Correspondence<3> {
    let cp = ClosestPointResult { point: c, element: 0, barycentric: [1.0, 0.0, 0.0], distance: (c - p).norm(), side: Side::Outside };
    Correspondence { sample, cp, signed_distance: sd, sigma: 1.0, tangent: c, active: true, violation: (sd - s).abs() }
}

fn random_rows(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (Vec<BarycentricRow<3>>, Vec<Point<3>>, Vec<Point<3>>) {
    let rows = (0..n)
        .map(|_| {
            let a = rng.random_range(0..m);
            let b = (a + rng.random_range(1..m)) % m;
            let mut c = rng.random_range(0..m);
            while c == a || c == b {
                c = rng.random_range(0..m);
            }
            let w: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let sum: f64 = w.iter().sum();
            BarycentricRow { vertices: [a, b, c], weights: w.map(|x| x / sum) }
        })
        .collect();
    let mut point = || Point::<3>::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let v = (0..m).map(|_| point()).collect();
    let s = (0..n).map(|_| point()).collect();
    (rows, v, s)
}

fn random_system(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (FlowSystem<3>, Vec<Point<3>>) {
    let (rows, v, targets) = random_rows(rng, m, n);
    let mass = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let tau = rng.random_range(0.01..10.0);
    (FlowSystem { rows, targets, mass, tau }, v)
}

fn fit(sys: &FlowSystem<3>, v: &[Point<3>]) -> f64 {
    0.5 * sys.residuals(v).iter().map(|r| r.norm_squared()).sum::<f64>()
}

#[test]
fn orientation_table() {
    assert_eq!(orientation(true, -0.3), 1.0);
    assert_eq!(orientation(false, 0.3), 1.0);
    assert_eq!(orientation(true, 0.3), -1.0);
    assert_eq!(orientation(false, -0.3), -1.0);
}

#[test]
fn tangent_lies_on_the_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let p = Point::<3>::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let c = Point::<3>::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let s: f64 = rng.random_range(-1.0..1.0);
        let sigma = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let t = tangent_point(&p, s, &c, sigma, &Point::<3>::z());
        assert!(((t - p).norm() - s.abs()).abs() <= 1e-12 * s.abs().max(f64::MIN_POSITIVE));
        // On the line through p and c, on the near side for sigma = +1.
        let (d, u) = (c - p, t - p);
        assert!(d.cross(&u).norm() <= 1e-12 * d.norm().max(1.0));
        assert_eq!(d.dot(&u) >= 0.0, sigma > 0.0);
    }
}

#[test]
fn tangent_at_the_sample_uses_the_normal() {
    let p = Point::<3>::new(0.1, 0.2, 0.3);
    let t = tangent_point(&p, 0.5, &p, 1.0, &Point::<3>::x());
    assert_eq!(t, p - Point::<3>::x() * 0.5);
}

#[test]
fn correspondence_examples() {
    let mesh = SurfaceMesh::icosphere(2, 0.5);
    let bvh = Bvh::build(&mesh).unwrap();
    let o = Point::<3>::zeros();
    let samples = SdfSampleSet::new(vec![o, o], vec![-0.5, -0.25], SampleKind::Signed).unwrap();
    let c = compute_correspondences(&mesh, &bvh, &samples);
    let inradius = c[0].cp.distance;
    assert!(c[0].signed_distance < -0.45);
    assert_eq!(c[0].sigma, 1.0);
    assert!(c[0].violation < 0.5 - inradius + 1e-12);
    assert_eq!(c[1].sigma, 1.0);
    assert!(((c[1].tangent - o).norm() - 0.25).abs() < 1e-12);
    assert!((c[1].violation - (inradius - 0.25)).abs() < 1e-12);

    let unit = SurfaceMesh::icosphere(2, 1.0);
    let bvh = Bvh::build(&unit).unwrap();
    let far = Point::<3>::new(2.0, 0.0, 0.0);
    let inner = Point::<3>::new(0.1, 0.0, 0.0);
    let samples = SdfSampleSet::new(vec![far, inner], vec![1.0, 0.2], SampleKind::Signed).unwrap();
    let c = compute_correspondences(&unit, &bvh, &samples);
    assert_eq!(c[0].sigma, 1.0);
    let expect = far + (c[0].cp.point - far) / (c[0].cp.point - far).norm();
    assert!((c[0].tangent - expect).norm() < 1e-12);
    // Inside with a positive value: the target is on the far side.
    assert_eq!(c[1].sigma, -1.0);
    assert!((c[1].tangent - inner).dot(&(c[1].cp.point - inner)) < 0.0);
}

#[test]
fn mass_examples() {
    let h = 3f64.sqrt() / 2.0;
    let pair = SurfaceMesh::new(
        vec![Point::<3>::new(0.0, 0.0, 0.0), Point::<3>::new(1.0, 0.0, 0.0), Point::<3>::new(0.5, h, 0.0), Point::<3>::new(0.5, -h, 0.0)],
        vec![[0, 1, 2], [1, 0, 3]],
    );
    let a = h / 2.0;
    let m = compute_mass_matrix(&pair);
    for (got, want) in m.iter().zip([2.0 * a / 3.0, 2.0 * a / 3.0, a / 3.0, a / 3.0]) {
        assert!((got - want).abs() < 1e-15);
    }

    let square = SurfaceMesh::circle(4, 1.0);
    let perimeter = 4.0 * 2f64.sqrt();
    for w in compute_mass_matrix(&square) {
        assert!((w - perimeter / 4.0).abs() < 1e-15);
    }

    let ico = SurfaceMesh::icosphere(1, 1.0);
    let total: f64 = compute_mass_matrix(&ico).iter().sum();
    assert!((total - ico.total_measure()).abs() < 1e-12);
}

#[test]
fn zero_mass_is_regularized() {
    let mut m = vec![1.0, 0.0, 2.0, 0.0];
    regularize_mass(&mut m);
    assert_eq!(m[0], 1.0);
    assert!(m[1] > 0.0 && m[1] < 1e-11);
}

#[test]
fn mask_examples() {
    let mesh = SurfaceMesh::icosphere(1, 1.0);
    let p = Point::<3>::zeros();
    let c = Point::<3>::x();
    let clamped = SdfSampleSet::new(vec![p, p], vec![0.5, 0.5], SampleKind::Clamped(0.2)).unwrap();
    let mut corrs = vec![corr3(0, p, 0.5, c, 0.7), corr3(1, p, 0.5, c, 0.3)];
    apply_variant_mask(&mut corrs, &mesh, &clamped, Variant::Clamped { sigma: None }).unwrap();
    assert_eq!((corrs[0].active, corrs[1].active), (false, true));

    let swept = SdfSampleSet::new(vec![p, p], vec![-0.3, 0.3], SampleKind::ConservativeInterior).unwrap();
    let mut corrs = vec![corr3(0, p, -0.3, c, -0.4), corr3(1, p, 0.3, c, 0.4)];
    apply_variant_mask(&mut corrs, &mesh, &swept, Variant::SweptVolume).unwrap();
    assert_eq!((corrs[0].active, corrs[1].active), (false, true));

    let signed = SdfSampleSet::new(vec![p, p], vec![-0.3, 0.3], SampleKind::Signed).unwrap();
    let before = vec![corr3(0, p, -0.3, c, -0.4), corr3(1, p, 0.3, c, 0.9)];
    let mut after = before.clone();
    apply_variant_mask(&mut after, &mesh, &signed, Variant::Signed).unwrap();
    assert_eq!(before, after);

    let mut corrs = before.clone();
    assert!(apply_variant_mask(&mut corrs, &mesh, &signed, Variant::Clamped { sigma: None }).is_err());
}

#[test]
fn unsigned_mask_always_attracts() {
    let mesh = SurfaceMesh::icosphere(2, 1.0);
    let bvh = Bvh::build(&mesh).unwrap();
    let inner = Point::<3>::new(0.2, 0.1, 0.0);
    let samples = SdfSampleSet::new(vec![inner], vec![0.5], SampleKind::Unsigned).unwrap();
    let mut corrs = compute_correspondences(&mesh, &bvh, &samples);
    apply_variant_mask(&mut corrs, &mesh, &samples, Variant::Unsigned).unwrap();
    assert_eq!(corrs[0].sigma, 1.0);
    assert!((corrs[0].tangent - inner).dot(&(corrs[0].cp.point - inner)) > 0.0);
    assert!((corrs[0].violation - (corrs[0].cp.distance - 0.5).abs()).abs() < 1e-15);
}

#[test]
fn masked_sample_is_the_same_as_no_sample() {
    let mesh = SurfaceMesh::icosphere(2, 0.6);
    let bvh = Bvh::build(&mesh).unwrap();
    let pts = vec![Point::<3>::new(0.9, 0.0, 0.0), Point::<3>::new(0.0, 0.7, 0.1), Point::<3>::zeros()];
    // The interior sample at the origin claims a sphere smaller than its distance: masked.
    let with = SdfSampleSet::new(pts.clone(), vec![0.2, 0.05, -0.1], SampleKind::ConservativeInterior).unwrap();
    let without = SdfSampleSet::new(pts[..2].to_vec(), vec![0.2, 0.05], SampleKind::ConservativeInterior).unwrap();
    let cfg = ReconstructionConfig { variant: Variant::SweptVolume, ..ReconstructionConfig::for_dim::<3>() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = flow_step(&mesh, &bvh, &with, &cfg, &mut rng).unwrap();
    let b = flow_step(&mesh, &bvh, &without, &cfg, &mut rng).unwrap();
    assert!(!a.correspondences[2].active);
    assert_eq!(a.vertices, b.vertices);
}

#[test]
fn batch_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = vec![Point::<3>::zeros(); 50];
    let small = SdfSampleSet::new(pts.clone(), vec![0.1; 50], SampleKind::Signed).unwrap();
    assert_eq!(select_batch(&small, 100, &mut rng), (0..50).collect::<Vec<_>>());
    let inside = SdfSampleSet::new(pts, vec![-0.1; 50], SampleKind::Signed).unwrap();
    assert_eq!(select_batch(&inside, 1, &mut rng).len(), 50);

    let n = 1_000_000;
    let values: Vec<f64> = (0..n + 100).map(|i| if i < 100 { -0.1 } else { 0.1 }).collect();
    let big = SdfSampleSet::new(vec![Point::<3>::zeros(); n + 100], values, SampleKind::Signed).unwrap();
    let batch = select_batch(&big, 20_000, &mut rng);
    assert_eq!(batch.len(), 20_000);
    assert_eq!(batch.iter().filter(|&&i| i < 100).count(), 100);
    assert!(batch.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn batch_inclusion_is_uniform() {
    let n_ext = 40;
    let values: Vec<f64> = (0..n_ext + 5).map(|i| if i < 5 { -1.0 } else { 1.0 }).collect();
    let set = SdfSampleSet::new(vec![Point::<3>::zeros(); n_ext + 5], values, SampleKind::Signed).unwrap();
    let (trials, batch) = (4000, 15);
    let mut hits = vec![0usize; n_ext + 5];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..trials {
        for i in select_batch(&set, batch, &mut rng) {
            hits[i] += 1;
        }
    }
    assert!(hits[..5].iter().all(|&h| h == trials));
    let p = (batch - 5) as f64 / n_ext as f64;
    let (mean, sd) = (trials as f64 * p, (trials as f64 * p * (1.0 - p)).sqrt());
    for &h in &hits[5..] {
        assert!((h as f64 - mean).abs() <= 3.0 * sd + 1.0, "{h} vs {mean} ± {sd}");
    }
}

#[test]
fn step_size_examples() {
    let row = [BarycentricRow { vertices: [0], weights: [1.0] }];
    let tau = step_size(&row, &[Point::<1>::new(0.0)], &[Point::<1>::new(2.0)], 1e-6, 50.0, 0.01);
    assert!((tau - 0.99).abs() < 1e-15);
    let stationary = step_size(&row, &[Point::<1>::new(2.0)], &[Point::<1>::new(2.0)], 1e-6, 50.0, 0.01);
    assert_eq!(stationary, 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (rows, v, s) = random_rows(&mut rng, 8, 20);
    let rho = 1.0 / rows.len() as f64;
    let direct = |targets: &[Point<3>]| {
        let sys = FlowSystem { rows: rows.clone(), targets: targets.to_vec(), mass: vec![], tau: 0.0 };
        let r = sys.residuals(&v);
        let p: Vec<Point<3>> = sys.transpose_apply(&r, v.len()).into_iter().map(|g| -g * rho).collect();
        let ap: Vec<Point<3>> = rows.iter().map(|row| row.apply(&p)).collect();
        let num = rho * r.iter().zip(&ap).map(|(a, b)| a.dot(b)).sum::<f64>() + 0.01 * p.iter().map(|x| x.norm_squared()).sum::<f64>();
        let den = rho * ap.iter().map(|x| x.norm_squared()).sum::<f64>();
        rho * (-num / den).clamp(1e-6, 50.0)
    };
    let doubled: Vec<Point<3>> = s.iter().map(|t| t * 2.0).collect();
    for targets in [&s, &doubled] {
        let got = step_size(&rows, &v, targets, 1e-6, 50.0, 0.01);
        assert!((got - direct(targets)).abs() <= 1e-12 * got);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (sys, v) = random_system(&mut rng, 6, 12);
        let grad = sys.transpose_apply(&sys.residuals(&v), v.len());
        let h = 1e-6;
        for i in 0..v.len() {
            for k in 0..3 {
                let (mut plus, mut minus) = (v.clone(), v.clone());
                plus[i][k] += h;
                minus[i][k] -= h;
                let fd = (fit(&sys, &plus) - fit(&sys, &minus)) / (2.0 * h);
                assert!((fd - grad[i][k]).abs() <= 1e-5 * grad[i][k].abs().max(1.0), "{fd} vs {}", grad[i][k]);
            }
        }
    }
}

#[test]
fn solve_is_the_constrained_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        let (sys, v_prev) = random_system(&mut rng, 7, 15);
        let (v, _) = sys.solve(&v_prev).unwrap();
        let q = sys.q_matrix();
        assert!(q.is_symmetric(1e-12));
        let b = sys.rhs(&v_prev);
        let mut res2 = 0.0;
        let mut b2 = 0.0;
        for k in 0..3 {
            let x: Vec<f64> = v.iter().map(|p| p[k]).collect();
            let mut qx = vec![0.0; x.len()];
            q.mul_vec(&x, &mut qx);
            res2 += qx.iter().zip(&b).map(|(a, bb)| (a - bb[k]).powi(2)).sum::<f64>();
            b2 += b.iter().map(|bb| bb[k] * bb[k]).sum::<f64>();
        }
        assert!(res2.sqrt() <= 1e-8 * b2.sqrt());
        let best = sys.objective(&v, &v_prev);
        for i in 0..v.len() {
            for k in 0..3 {
                for d in [-1e-3, 1e-3] {
                    let mut w = v.clone();
                    w[i][k] += d;
                    assert!(sys.objective(&w, &v_prev) >= best);
                }
            }
        }
        assert!(best <= sys.objective(&v_prev, &v_prev));
    }
}

#[test]
fn dense_cross_check() {
    let tri = SurfaceMesh::new(
        vec![Point::<3>::new(0.0, 0.0, 0.0), Point::<3>::new(1.0, 0.0, 0.0), Point::<3>::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    );
    let bvh = Bvh::build(&tri).unwrap();
    let samples = SdfSampleSet::new(vec![Point::<3>::new(0.3, 0.3, 2.0)], vec![0.5], SampleKind::Signed).unwrap();
    let corrs = compute_correspondences(&tri, &bvh, &samples);
    let rows: Vec<&Correspondence<3>> = corrs.iter().collect();
    let sys = FlowSystem::assemble(&tri, &rows, 0.7);
    let (v, _) = sys.solve(&tri.vertices).unwrap();
    let q = sys.q_matrix().to_dense();
    let b = sys.rhs(&tri.vertices);
    let lu = q.lu();
    for k in 0..3 {
        let bk = nalgebra::DVector::from_iterator(3, b.iter().map(|p| p[k]));
        let x = lu.solve(&bk).unwrap();
        for i in 0..3 {
            assert!((x[i] - v[i][k]).abs() < 1e-9);
        }
    }
    // The triangle moves up toward the tangent point at height 1.5.
    assert!(v.iter().all(|p| p.z > 0.0));
}

#[test]
fn tiny_tau_keeps_the_surface() {
    let mesh = SurfaceMesh::icosphere(1, 1.0);
    let bvh = Bvh::build(&mesh).unwrap();
    let samples = SdfSampleSet::new(vec![Point::<3>::zeros()], vec![-0.5], SampleKind::Signed).unwrap();
    let corrs = compute_correspondences(&mesh, &bvh, &samples);
    let rows: Vec<&Correspondence<3>> = corrs.iter().collect();
    let (v, _) = FlowSystem::assemble(&mesh, &rows, 1e-14).solve(&mesh.vertices).unwrap();
    for (a, b) in v.iter().zip(&mesh.vertices) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn no_rows_is_a_no_op() {
    let mesh = SurfaceMesh::icosphere(1, 1.0);
    let cfg = ReconstructionConfig::for_dim::<3>();
    let (v, tau, _) = implicit_step(&mesh, &[], &cfg).unwrap();
    assert_eq!(v, mesh.vertices);
    assert_eq!(tau, 0.0);
}

#[test]
fn first_step_lowers_the_energy() {
    let gt = SurfaceMesh::icosphere(3, 0.25);
    let samples = crate::sampling::sample_grid(&gt, &crate::samples::GridSpec::unit_cube(8).unwrap()).unwrap();
    let mesh = SurfaceMesh::icosphere(2, 1.0);
    let bvh = Bvh::build(&mesh).unwrap();
    let cfg = ReconstructionConfig::for_dim::<3>();
    let step = flow_step(&mesh, &bvh, &samples, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let before = sdf_energy(&mesh, &bvh, &samples);
    assert!((before - step.diagnostics.energy_before).abs() <= 1e-12 * before);
    let moved = SurfaceMesh::new(step.vertices, mesh.elements.clone());
    let after = sdf_energy(&moved, &Bvh::build(&moved).unwrap(), &samples);
    assert!(after < before, "{after} vs {before}");
    assert!(step.diagnostics.tau > 0.0 && step.diagnostics.solver_residual <= SOLVER_TOLERANCE);
}

#[test]
fn energy_examples() {
    let mesh = SurfaceMesh::icosphere(3, 1.0);
    let bvh = Bvh::build(&mesh).unwrap();
    let samples = SdfSampleSet::new(vec![Point::<3>::zeros()], vec![0.5], SampleKind::Signed).unwrap();
    assert!((sdf_energy(&mesh, &bvh, &samples) - 1.125).abs() < 0.02);

    let own = SdfSampleSet::new(mesh.vertices.clone(), vec![0.0; mesh.vertices.len()], SampleKind::Signed).unwrap();
    assert!(sdf_energy(&mesh, &bvh, &own) < 1e-20);
}

#[test]
fn batch_estimate_is_exact_without_batching() {
    let values = vec![-0.2, 0.1, 0.3];
    let set = SdfSampleSet::new(vec![Point::<3>::zeros(); 3], values, SampleKind::Signed).unwrap();
    let corrs: Vec<Correspondence<3>> = (0..3).map(|i| corr3(i, Point::<3>::zeros(), 0.0, Point::<3>::x(), 0.0)).collect();
    assert_eq!(batch_estimate(&corrs, &set, |_| 1.0), 3.0);
    // One of two exterior samples seen: it counts twice.
    assert_eq!(batch_estimate(&corrs[..2], &set, |_| 1.0), 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn frozen_step_never_increases_the_objective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(4..10);
        let n = rng.random_range(1..25);
        let (sys, v_prev) = random_system(&mut rng, m, n);
        let (v, _) = sys.solve(&v_prev).unwrap();
        prop_assert!(sys.objective(&v, &v_prev) <= sys.objective(&v_prev, &v_prev) * (1.0 + 1e-12));
        prop_assert!(fit(&sys, &v) <= fit(&sys, &v_prev) * (1.0 + 1e-12));
    }
}
