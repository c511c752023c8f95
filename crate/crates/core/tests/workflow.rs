use hexcassi::aperture::{gen_complementary_set, Family};
use hexcassi::cube::SpectralCube;
use hexcassi::experiment::{run_family, sweep_offset, PipelineConfig, TauGrid};
use hexcassi::forward::{measure, ForwardOperator, NoiseModel};
use hexcassi::gpsr::SolverConfig;
use hexcassi::hex::modulation_masks;
use hexcassi::io;
use hexcassi::scene::{synth_scene, SceneKind};

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("hexcassi-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn quick_cfg() -> PipelineConfig {
    PipelineConfig {
        seeds: vec![0, 1],
        tau: TauGrid::Relative(vec![0.01, 0.03, 0.1]),
        solver: SolverConfig {
            max_iters: 80,
            ..SolverConfig::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = scratch_dir("files");
    let cube = synth_scene(SceneKind::TextEdges, 16, 16, 6, 2).unwrap();
    io::save_cube(dir.join("scene.scub"), &cube).unwrap();
    let back = io::load_cube(dir.join("scene.scub")).unwrap();
    // voxels are stored as f32
    let f32_view: Vec<f64> = cube.as_slice().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(back.as_slice(), &f32_view[..]);
    assert_eq!(back.wavelengths(), cube.wavelengths());

    let set = gen_complementary_set(Family::BlueNoiseHex, 16, 16, 2, 9).unwrap();
    io::save_aperture_set(dir.join("set.sapt"), &set).unwrap();
    let set_back = io::load_aperture_set(dir.join("set.sapt")).unwrap();
    assert_eq!(set_back.apertures, set.apertures);
    assert!(set_back.complementary);

    let op = ForwardOperator::new(6, &modulation_masks(&set, 0.2).unwrap()).unwrap();
    let y = measure(&back, &op, NoiseModel::None).unwrap();
    io::save_measurements(dir.join("y.smea"), &y).unwrap();
    let y_back = io::load_measurements(dir.join("y.smea")).unwrap();
    let y32: Vec<f64> = y.as_vector().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(y_back.as_vector(), &y32[..]);

    let truncated = std::fs::read(dir.join("scene.scub")).unwrap();
    std::fs::write(dir.join("bad.scub"), &truncated[..truncated.len() - 3]).unwrap();
    assert!(io::load_cube(dir.join("bad.scub")).is_err());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn pipeline_is_reproducible_and_scored() {
    let scene = synth_scene(SceneKind::SmoothBlobs, 32, 32, 6, 0).unwrap();
    let cfg = quick_cfg();
    let a = run_family(&scene, Family::BlueNoiseHex, &cfg).unwrap();
    let b = run_family(&scene, Family::BlueNoiseHex, &cfg).unwrap();
    assert_eq!(a.mean_psnr_db, b.mean_psnr_db);
    assert_eq!(a.band_mean_psnr_db.len(), 6);
    for run in &a.runs {
        assert_eq!(run.tau_curve.len(), 3);
        assert!(run
            .report
            .band_psnr_db
            .iter()
            .all(|p| p.is_finite() && *p > 10.0));
        assert!(run.report.iterations >= 1);
    }
}

#[test]
fn sweep_at_zero_offset_equals_pipeline() {
    let scene = synth_scene(SceneKind::SpectralRamps, 32, 32, 6, 0).unwrap();
    let cfg = quick_cfg();
    let sweep = sweep_offset(&scene, &cfg, &[0.0, 0.4]).unwrap();
    let direct = run_family(&scene, Family::BlueNoiseHex, &cfg).unwrap();
    assert_eq!(sweep.points.len(), 2);
    assert_eq!(sweep.points[0].mean_psnr_db, direct.mean_psnr_db);
    assert_eq!(sweep.runs[0].runs[0].estimate, direct.runs[0].estimate);
}

#[test]
fn mismatched_complementary_request_fails_before_work() {
    let scene = SpectralCube::zeros(16, 16, 2).unwrap();
    let cfg = PipelineConfig {
        k: 3,
        g: 0.5,
        ..quick_cfg()
    };
    assert!(run_family(&scene, Family::RandomSquare, &cfg).is_err());
}
