use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use hexcassi::aperture::{gen_complementary_set_checked, Aperture, ApertureSet, Family};
use hexcassi::cube::SpectralCube;
use hexcassi::experiment::{
    band_csv, offset_csv, run_pipeline, summary_csv, sweep_offset, tau_csv, FamilyRun,
    PipelineConfig, TauGrid,
};
use hexcassi::gpsr::SolverConfig;
use hexcassi::hex::A_MAX;
use hexcassi::io;
use hexcassi::rip::{
    complementarity_constant, verify_ordering_of, FamilyTag, OrderingConfig, OrderingReport,
};
use hexcassi::scene::synth_scene;
use serde::Serialize;
use serde_json::json;

use crate::args::{Command, Common};
use crate::output::{write, write_band_pngs, write_json};
use crate::Failure;

type Outcome = Result<u8, Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Generate(c) => generate(&c),
        Command::Pipeline(c) => pipeline(&c),
        Command::SweepOffset { common, a_grid } => sweep(&common, a_grid),
        Command::RipVerify {
            common,
            samples,
            n_seeds,
            control,
        } => rip_verify(&common, samples, n_seeds, control),
        Command::SynthScene(c) => scene_cmd(&c),
        Command::Info { path, json } => info(path.as_deref(), json),
    }
}

fn print_json(value: &impl Serialize) {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    // a closed pipe on stdout is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn generate(c: &Common) -> Outcome {
    if c.family.is_empty() {
        return Err(Failure::usage("generate needs --family"));
    }
    let mut files = Vec::new();
    for family in c.families() {
        for seed in c.seeds() {
            let set = if c.complementary {
                let set = gen_complementary_set_checked(family, c.n, c.m, c.k, c.g, seed)?;
                let report = complementarity_constant(&set, 0.0)?;
                let exact = report
                    .hex_elements_complementary
                    .unwrap_or_else(|| report.per_position.iter().all(|&v| v == 1.0));
                if !exact {
                    return Err(Failure::numeric(format!(
                        "{family} seed {seed}: set is not complementary"
                    )));
                }
                set
            } else {
                ApertureSet::independent(family, c.n, c.m, c.k, c.g, seed)?
            };
            let path = c.out.join(format!("{family}-seed{seed}.sapt"));
            write(&path, io::encode_aperture_set(&set)?)?;
            let transmittance: Vec<f64> =
                set.apertures.iter().map(Aperture::transmittance).collect();
            if !c.json {
                let shown: Vec<String> = transmittance.iter().map(|t| format!("{t:.4}")).collect();
                println!(
                    "{}  {} masks, transmittance {}",
                    path.display(),
                    set.len(),
                    shown.join(" ")
                );
            }
            files.push(json!({
                "path": path.display().to_string(),
                "family": family,
                "seed": seed,
                "masks": set.len(),
                "complementary": set.complementary,
                "transmittance": transmittance,
            }));
        }
    }
    if c.json {
        print_json(&files);
    }
    Ok(0)
}

fn load_scene(c: &Common) -> Result<SpectralCube, Failure> {
    match &c.scene_file {
        Some(path) => Ok(io::load_cube(path)?),
        None => Ok(synth_scene(c.scene.into(), c.n, c.m, c.l, c.scene_seed)?),
    }
}

fn pipeline_config(c: &Common) -> PipelineConfig {
    PipelineConfig {
        k: c.k,
        g: c.g,
        complementary: c.complementary,
        offset_a: c.offset_a,
        sigma: c.sigma,
        tau: if c.tau.is_empty() {
            TauGrid::default()
        } else {
            TauGrid::Absolute(c.tau.clone())
        },
        seeds: c.seeds(),
        solver: SolverConfig {
            max_iters: c.max_iters,
            ..SolverConfig::default()
        },
        levels: c.levels,
    }
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    best_tau: f64,
    band_psnr_db: Vec<f64>,
    mean_psnr_db: f64,
    iterations: usize,
    final_objective: f64,
    tau_curve: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct FamilySummary {
    family: Family,
    k: usize,
    g: f64,
    offset_a: f64,
    mean_psnr_db: f64,
    stderr_psnr_db: f64,
    band_mean_psnr_db: Vec<f64>,
    seeds: Vec<SeedSummary>,
}

fn summarize(run: &FamilyRun) -> FamilySummary {
    FamilySummary {
        family: run.family,
        k: run.k,
        g: run.g,
        offset_a: run.offset_a,
        mean_psnr_db: run.mean_psnr_db,
        stderr_psnr_db: run.stderr_psnr_db,
        band_mean_psnr_db: run.band_mean_psnr_db.clone(),
        seeds: run
            .runs
            .iter()
            .map(|s| SeedSummary {
                seed: s.seed,
                best_tau: s.best_tau,
                band_psnr_db: s.report.band_psnr_db.clone(),
                mean_psnr_db: s.report.mean_psnr_db,
                iterations: s.report.iterations,
                final_objective: s.report.final_objective,
                tau_curve: s.tau_curve.clone(),
            })
            .collect(),
    }
}

fn write_estimates(out: &Path, runs: &[FamilyRun]) -> Result<(), Failure> {
    for run in runs {
        for s in &run.runs {
            let dir = out.join(run.family.name()).join(format!("seed-{}", s.seed));
            write_band_pngs(&dir, &s.estimate)?;
        }
    }
    Ok(())
}

fn pipeline(c: &Common) -> Outcome {
    let cfg = pipeline_config(c);
    cfg.validate()?;
    let scene = load_scene(c)?;
    let start = Instant::now();
    let runs = run_pipeline(&scene, &c.families(), &cfg)?;
    eprintln!("reconstructed in {:.2} s", start.elapsed().as_secs_f64());

    write(&c.out.join("bands.csv"), band_csv(&runs, &scene))?;
    write(&c.out.join("summary.csv"), summary_csv(&runs))?;
    write(&c.out.join("tau.csv"), tau_csv(&runs))?;
    write_band_pngs(&c.out.join("scene"), &scene)?;
    write_estimates(&c.out, &runs)?;
    let summaries: Vec<FamilySummary> = runs.iter().map(summarize).collect();
    let report = json!({ "config": cfg, "scene_dims": scene.dims(), "families": summaries });
    write_json(&c.out.join("report.json"), &report)?;

    if c.json {
        print_json(&report);
    } else {
        println!("family    mean PSNR (dB)   stderr");
        for r in &runs {
            println!(
                "{:<9} {:>14.3} {:>8.3}",
                r.family.name(),
                r.mean_psnr_db,
                r.stderr_psnr_db
            );
        }
    }
    Ok(0)
}

fn sweep(c: &Common, a_grid: Vec<f64>) -> Outcome {
    if c.family
        .iter()
        .any(|&f| Family::from(f) != Family::BlueNoiseHex)
    {
        return Err(Failure::usage("sweep-offset only supports --family bn-hex"));
    }
    let grid = if a_grid.is_empty() {
        (0..=8).map(|i| i as f64 / 10.0).collect()
    } else {
        a_grid
    };
    if let Some(a) = grid.iter().find(|a| !(0.0..A_MAX).contains(*a)) {
        return Err(Failure::usage(format!(
            "offset {a} outside [0, {A_MAX:.4})"
        )));
    }
    let cfg = pipeline_config(c);
    cfg.validate()?;
    let scene = load_scene(c)?;
    let result = sweep_offset(&scene, &cfg, &grid)?;
    write(&c.out.join("offset.csv"), offset_csv(&result))?;
    write_json(&c.out.join("offset.json"), &result)?;
    if c.json {
        print_json(&result);
    } else {
        for p in &result.points {
            println!(
                "a = {:.3}  {:.3} ± {:.3} dB",
                p.offset_a, p.mean_psnr_db, p.stderr_psnr_db
            );
        }
        println!(
            "best a = {} (inside (0, 0.6): {})",
            result.argmax_a, result.argmax_in_expected_range
        );
    }
    Ok(0)
}

fn rip_verify(c: &Common, samples: usize, n_seeds: usize, control: bool) -> Outcome {
    if n_seeds == 0 {
        return Err(Failure::usage("--n-seeds must be at least 1"));
    }
    if !c.complementary && (c.k as f64 * c.g - 1.0).abs() > 1e-9 {
        return Err(Failure::usage(format!(
            "rip-verify uses complementary sets and needs K·g = 1, got K = {}, g = {}",
            c.k, c.g
        )));
    }
    let cfg = OrderingConfig {
        n_rows: c.n,
        n_cols: c.m,
        n_bands: c.l,
        g: c.g,
        k: c.k,
        n_seeds,
        n_samples: samples,
        offset_a: c.offset_a,
        base_seed: c.seed.first().copied().unwrap_or(0),
    };
    let order: &[FamilyTag] = if control {
        &[FamilyTag::SR, FamilyTag::SR]
    } else {
        &[FamilyTag::SR, FamilyTag::SB, FamilyTag::HB]
    };
    let report: OrderingReport = verify_ordering_of(order, &cfg)?;
    let set =
        gen_complementary_set_checked(Family::BlueNoiseHex, c.n, c.m, c.k, c.g, cfg.base_seed)?;
    let comp = complementarity_constant(&set, c.offset_a)?;
    let rows: Vec<_> = report
        .stats
        .iter()
        .map(|s| {
            json!({
                "family": s.family,
                "K": s.k,
                "g": s.g,
                "samples": s.samples,
                "mean_r": s.mean_r,
                "stderr": s.stderr,
            })
        })
        .collect();
    let doc = json!({
        "families": rows,
        "verdict": report.verdict,
        "hb_complementarity": {
            "min": comp.min,
            "mean": comp.mean,
            "max": comp.max,
            "hex_elements_complementary": comp.hex_elements_complementary,
        },
    });
    write_json(&c.out.join("rip.json"), &doc)?;
    let mut csv = String::from("family,K,g,samples,mean_r,stderr\n");
    for s in &report.stats {
        csv.push_str(&format!(
            "{:?},{},{},{},{},{}\n",
            s.family, s.k, s.g, s.samples, s.mean_r, s.stderr
        ));
    }
    write(&c.out.join("rip.csv"), csv)?;
    if c.json {
        print_json(&doc);
    } else {
        for s in &report.stats {
            println!("{:?}  mean r {:.5} ± {:.5}", s.family, s.mean_r, s.stderr);
        }
        println!("verdict: {}", report.verdict);
    }
    Ok(if report.verdict { 0 } else { 1 })
}

fn scene_cmd(c: &Common) -> Outcome {
    let kind = c.scene.into();
    let cube = synth_scene(kind, c.n, c.m, c.l, c.scene_seed)?;
    let path = c.out.join(format!("{kind}.scub"));
    write(&path, io::encode_cube(&cube)?)?;
    write_band_pngs(&c.out.join(kind.name()), &cube)?;
    if c.json {
        print_json(&json!({ "path": path.display().to_string(), "dims": cube.dims() }));
    } else {
        println!("{}  {}x{}x{}", path.display(), c.n, c.m, c.l);
    }
    Ok(0)
}

fn info(path: Option<&Path>, as_json: bool) -> Outcome {
    let doc = match path {
        None => json!({
            "version": env!("CARGO_PKG_VERSION"),
            "families": Family::ALL.iter().map(|f| f.name()).collect::<Vec<_>>(),
            "offset_a_max": A_MAX,
            "default_wavelengths_nm": hexcassi::cube::SIX_BAND_WAVELENGTHS_NM,
            "defaults": { "n": 64, "m": 64, "l": 6, "k": 2, "g": 0.5 },
        }),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| Failure::io(p, e))?;
            let magic = bytes.get(..5).unwrap_or(&[]);
            if magic == io::CUBE_MAGIC {
                let cube = io::decode_cube(&bytes)?;
                json!({ "kind": "cube", "dims": cube.dims(), "wavelengths_nm": cube.wavelengths() })
            } else if magic == io::MEASUREMENT_MAGIC {
                let y = io::decode_measurements(&bytes)?;
                json!({ "kind": "measurements", "shots": y.n_shots(), "rows": y.n_rows(), "det_cols": y.n_det_cols() })
            } else if magic == io::APERTURE_MAGIC {
                let set = io::decode_aperture_set(&bytes)?;
                let t: Vec<f64> = set.apertures.iter().map(Aperture::transmittance).collect();
                json!({
                    "kind": "aperture-set",
                    "family": set.family,
                    "n": set.n_rows,
                    "m": set.n_cols,
                    "masks": set.len(),
                    "transmittance": t,
                    "complementary": set.complementary,
                })
            } else if magic == io::GREY_MAGIC {
                let grey = io::decode_grey(&bytes)?;
                json!({ "kind": "grey-aperture", "rows": grey.rows(), "cols": grey.cols(), "offset_a": grey.offset_a(), "mean": grey.mean() })
            } else {
                return Err(Failure::usage(format!(
                    "{}: unrecognized file",
                    p.display()
                )));
            }
        }
    };
    if as_json {
        print_json(&doc);
    } else if let serde_json::Value::Object(map) = &doc {
        for (k, v) in map {
            println!("{k}: {v}");
        }
    }
    Ok(0)
}
