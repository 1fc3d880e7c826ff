use sphere_reach::driver::reconstruct_with_resampling;
use sphere_reach::prelude::*;
use sphere_reach::sampling::{conservative_interior, normalize_to_unit_box};

fn circle_samples(k: usize) -> (SurfaceMesh<2>, SdfSampleSet<2>) {
    let gt = SurfaceMesh::circle(256, 0.3);
    let samples = sample_grid(&gt, &GridSpec::unit_cube(k).unwrap()).unwrap();
    (gt, samples)
}

#[test]
fn runs_are_deterministic() {
    let (_, samples) = circle_samples(16);
    let config = ReconstructionConfig { rng_seed: 3, ..ReconstructionConfig::for_dim::<2>() };
    let (a, ra) = reconstruct(&samples, &config, None).unwrap();
    let (b, rb) = reconstruct(&samples, &config, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.final_energy, rb.final_energy);
    assert_eq!(ra.iterations.len(), rb.iterations.len());
}

#[test]
fn report_is_consistent() {
    let (gt, samples) = circle_samples(16);
    let (mesh, report) = reconstruct(&samples, &ReconstructionConfig::for_dim::<2>(), None).unwrap();
    assert!(report.validity.as_ref().unwrap().is_valid());
    assert_eq!(report.sample_count, samples.len());
    let hs: Vec<f64> = report.stages.iter().map(|s| s.h).collect();
    assert!(hs.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(*hs.last().unwrap(), report.h_min);
    assert_eq!(report.stages.iter().map(|s| s.iterations).sum::<usize>(), report.iterations.len());
    let m = evaluate(&mesh, &gt, &samples, report.total_seconds, 5000, 0).unwrap();
    assert!((m.sdf_energy - report.final_energy).abs() <= 1e-12);
    assert!(m.hausdorff < 0.02, "{}", m.hausdorff);
}

#[test]
fn sphere_beats_marching_cubes() {
    let gt = normalize_to_unit_box(&SurfaceMesh::icosphere(3, 1.0)).unwrap();
    let samples = sample_grid(&gt, &GridSpec::unit_cube(8).unwrap()).unwrap();
    let (mesh, report) = reconstruct(&samples, &ReconstructionConfig::for_dim::<3>(), None).unwrap();
    let mc = marching_cubes(&GridField::from_samples(&samples).unwrap(), 0.0);
    let e_mc = sphere_reach::flow::sdf_energy(&mc, &Bvh::build(&mc).unwrap(), &samples);
    assert!(report.final_energy < e_mc / 5.0, "{} vs {e_mc}", report.final_energy);
    assert_eq!(mesh.validate().euler_characteristic, 2);
}

#[test]
fn resampling_adds_samples_and_keeps_the_surface_valid() {
    let (gt, samples) = circle_samples(10);
    let oracle = MeshOracle::new(gt.clone()).unwrap();
    let config = ReconstructionConfig::for_dim::<2>();
    let (mesh, report) = reconstruct_with_resampling(&samples, &oracle, 2, &config, None).unwrap();
    assert_eq!(report.resample_rounds, 2);
    assert!(report.sample_count > samples.len());
    assert!(mesh.validate().is_valid());
    assert!(report.iterations.iter().any(|it| it.round == 2));
}

#[test]
fn watchdog_returns_the_last_surface() {
    let (_, samples) = circle_samples(12);
    let config = ReconstructionConfig { watchdog_bound: 0.5, ..ReconstructionConfig::for_dim::<2>() };
    let aborted = reconstruct(&samples, &config, None).unwrap_err();
    assert!(matches!(aborted.error, Error::Watchdog { .. }));
    assert!(aborted.error.is_numerical());
    assert!(!aborted.mesh.is_empty());
    assert!(aborted.report.aborted.is_some());
}

#[test]
fn start_surface_must_enclose_interior_samples() {
    let (_, samples) = circle_samples(12);
    let small = SurfaceMesh::circle(16, 0.05);
    let config = ReconstructionConfig::for_dim::<2>();
    assert!(reconstruct(&samples, &config, Some(&small)).is_err());
    let relaxed = ReconstructionConfig { require_enclosure: false, ..config };
    let (mesh, _) = reconstruct(&samples, &relaxed, Some(&small)).unwrap();
    assert!(mesh.validate().is_valid());
}

#[test]
fn swept_volume_reconstructs() {
    let (gt, exact) = circle_samples(16);
    let swept = conservative_interior(&exact, 0.5).unwrap();
    let config = ReconstructionConfig { variant: Variant::SweptVolume, ..ReconstructionConfig::for_dim::<2>() };
    let (mesh, _) = reconstruct(&swept, &config, None).unwrap();
    assert!(mesh.validate().is_valid());
    let h = hausdorff(&mesh, &gt, 5000, 0).unwrap();
    assert!(h < 0.1, "{h}");
}

#[test]
fn variant_must_match_the_data() {
    let (_, samples) = circle_samples(8);
    let config = ReconstructionConfig { variant: Variant::Clamped { sigma: None }, ..ReconstructionConfig::for_dim::<2>() };
    assert!(reconstruct(&samples, &config, None).is_err());
}
