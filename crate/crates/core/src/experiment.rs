//! End-to-end experiments: generate apertures, simulate snapshots,
//! reconstruct with a `τ` line search and score against the scene.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aperture::{gen_complementary_set_checked, ApertureSet, Family};
use crate::basis::{BasisConfig, SparsityBasis};
use crate::cube::{mean_psnr, ReconReport, SpectralCube};
use crate::error::{Error, Result};
use crate::forward::{measure, ForwardOperator, NoiseModel};
use crate::gpsr::{line_search_tau, SolverConfig};
use crate::hex::{modulation_masks, A_MAX};
use crate::operator::LinearOperator;
use crate::rip::{brute_force_delta_s, RipProbeResult, SubsetPolicy};

/// Regularization weights to try.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauGrid {
    Absolute(Vec<f64>),
    /// Fractions of `‖ΨᵀHᵀy‖∞`, the smallest `τ` giving `θ̂ = 0`.
    Relative(Vec<f64>),
}

impl TauGrid {
    pub fn len(&self) -> usize {
        match self {
            TauGrid::Absolute(v) | TauGrid::Relative(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn resolve(
        &self,
        y: &[f64],
        forward: &dyn LinearOperator,
        basis: &dyn LinearOperator,
    ) -> Vec<f64> {
        match self {
            TauGrid::Absolute(v) => v.clone(),
            TauGrid::Relative(v) => {
                let aty = basis.apply_adjoint_vec(&forward.apply_adjoint_vec(y));
                let max = aty.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                v.iter().map(|f| f * max).collect()
            }
        }
    }
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid::Relative(vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub g: f64,
    /// Partition the valid cells across shots (requires `K·g = 1`).
    pub complementary: bool,
    pub offset_a: f64,
    pub sigma: f64,
    pub tau: TauGrid,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub solver: SolverConfig,
    /// Wavelet depth; `None` picks the default for the plane size.
    pub levels: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 2,
            g: 0.5,
            complementary: true,
            offset_a: 0.0,
            sigma: 0.0,
            tau: TauGrid::default(),
            seeds: (0..5).collect(),
            solver: SolverConfig::default(),
            levels: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::param("seeds", "need at least one seed"));
        }
        if self.tau.is_empty() {
            return Err(Error::param("tau", "empty grid"));
        }
        if !(0.0..A_MAX).contains(&self.offset_a) {
            return Err(Error::param(
                "offset_a",
                format!("{} outside [0, {A_MAX})", self.offset_a),
            ));
        }
        if self.k == 0 {
            return Err(Error::param("k", "need at least one snapshot"));
        }
        if self.complementary && (self.k as f64 * self.g - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "g",
                format!(
                    "complementary sets need K·g = 1, got K = {}, g = {}",
                    self.k, self.g
                ),
            ));
        }
        NoiseModel::gaussian(self.sigma, 0)?;
        Ok(())
    }
}

/// Aperture set for one run; independent sets draw one seed per shot.
pub fn generate_set(
    family: Family,
    n: usize,
    m: usize,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<ApertureSet> {
    if cfg.complementary {
        gen_complementary_set_checked(family, n, m, cfg.k, cfg.g, seed)
    } else {
        ApertureSet::independent(family, n, m, cfg.k, cfg.g, seed)
    }
}

fn noise_seed(seed: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973_6500).gen()
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub best_tau: f64,
    /// `(τ, mean PSNR)` in grid order.
    pub tau_curve: Vec<(f64, f64)>,
    pub report: ReconReport,
    #[serde(skip)]
    pub estimate: SpectralCube,
}

/// One seed: generate, grey-convert, measure, reconstruct, score.
pub fn run_seed(
    scene: &SpectralCube,
    family: Family,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<SeedRun> {
    let (n, m, l) = scene.dims();
    let set = generate_set(family, n, m, cfg, seed).map_err(|e| e.in_stage("generate"))?;
    let masks = modulation_masks(&set, cfg.offset_a).map_err(|e| e.in_stage("grey"))?;
    let op = ForwardOperator::new(l, &masks).map_err(|e| e.in_stage("forward"))?;
    let noise = NoiseModel::gaussian(cfg.sigma, noise_seed(seed))?;
    let y = measure(scene, &op, noise).map_err(|e| e.in_stage("measure"))?;
    let basis_cfg = match cfg.levels {
        Some(levels) => BasisConfig {
            n_rows: n,
            n_cols: m,
            n_bands: l,
            levels,
        },
        None => BasisConfig::with_default_levels(n, m, l).map_err(|e| e.in_stage("basis"))?,
    };
    let basis = SparsityBasis::new(basis_cfg).map_err(|e| e.in_stage("basis"))?;
    let grid = cfg.tau.resolve(y.as_vector(), &op, &basis);
    let search = line_search_tau(y.as_vector(), &op, &basis, &grid, scene, &cfg.solver)
        .map_err(|e| e.in_stage("solve"))?;
    Ok(SeedRun {
        seed,
        best_tau: search.best_tau,
        tau_curve: search.curve,
        report: search.best_report,
        estimate: search.best_estimate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyRun {
    pub family: Family,
    pub k: usize,
    pub g: f64,
    pub offset_a: f64,
    pub runs: Vec<SeedRun>,
    /// Per-band PSNR averaged over seeds.
    pub band_mean_psnr_db: Vec<f64>,
    /// Mean over seeds of the per-seed mean PSNR.
    pub mean_psnr_db: f64,
    pub stderr_psnr_db: f64,
}

/// All seeds of one family, run in parallel and reduced in seed order.
pub fn run_family(scene: &SpectralCube, family: Family, cfg: &PipelineConfig) -> Result<FamilyRun> {
    cfg.validate()?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed(scene, family, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let l = scene.n_bands();
    let ns = runs.len() as f64;
    let band_mean_psnr_db = (0..l)
        .map(|b| runs.iter().map(|r| r.report.band_psnr_db[b]).sum::<f64>() / ns)
        .collect();
    let means: Vec<f64> = runs
        .iter()
        .map(|r| mean_psnr(&r.report.band_psnr_db))
        .collect();
    let mean = means.iter().sum::<f64>() / ns;
    let stderr = if runs.len() > 1 {
        (means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ns - 1.0) / ns).sqrt()
    } else {
        0.0
    };
    Ok(FamilyRun {
        family,
        k: cfg.k,
        g: cfg.g,
        offset_a: cfg.offset_a,
        runs,
        band_mean_psnr_db,
        mean_psnr_db: mean,
        stderr_psnr_db: stderr,
    })
}

pub fn run_pipeline(
    scene: &SpectralCube,
    families: &[Family],
    cfg: &PipelineConfig,
) -> Result<Vec<FamilyRun>> {
    cfg.validate()?;
    families
        .iter()
        .map(|&f| run_family(scene, f, cfg))
        .collect()
}

/// `family,band,wavelength_nm,mean_psnr_db` rows.
pub fn band_csv(runs: &[FamilyRun], scene: &SpectralCube) -> String {
    let mut out = String::from("family,band,wavelength_nm,mean_psnr_db\n");
    for run in runs {
        for (b, p) in run.band_mean_psnr_db.iter().enumerate() {
            let w = scene
                .wavelengths()
                .map(|w| w[b].to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", run.family, b, w, p);
        }
    }
    out
}

/// `family,k,g,offset_a,seeds,mean_psnr_db,stderr_psnr_db` rows.
pub fn summary_csv(runs: &[FamilyRun]) -> String {
    let mut out = String::from("family,k,g,offset_a,seeds,mean_psnr_db,stderr_psnr_db\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.family,
            r.k,
            r.g,
            r.offset_a,
            r.runs.len(),
            r.mean_psnr_db,
            r.stderr_psnr_db
        );
    }
    out
}

/// `family,seed,tau,mean_psnr_db,iterations` rows for every grid point.
pub fn tau_csv(runs: &[FamilyRun]) -> String {
    let mut out = String::from("family,seed,tau,mean_psnr_db,selected\n");
    for r in runs {
        for s in &r.runs {
            for &(tau, p) in &s.tau_curve {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.family,
                    s.seed,
                    tau,
                    p,
                    tau == s.best_tau
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OffsetPoint {
    pub offset_a: f64,
    pub mean_psnr_db: f64,
    pub stderr_psnr_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OffsetSweep {
    pub points: Vec<OffsetPoint>,
    pub argmax_a: f64,
    /// Whether the best offset lies strictly inside `(0, 0.6)`.
    pub argmax_in_expected_range: bool,
    #[serde(skip)]
    pub runs: Vec<FamilyRun>,
}

/// Blue-noise hex PSNR as a function of the lattice offset `a`.
pub fn sweep_offset(
    scene: &SpectralCube,
    cfg: &PipelineConfig,
    a_grid: &[f64],
) -> Result<OffsetSweep> {
    if a_grid.is_empty() {
        return Err(Error::param("a_grid", "empty grid"));
    }
    let runs = a_grid
        .iter()
        .map(|&a| {
            run_family(
                scene,
                Family::BlueNoiseHex,
                &PipelineConfig {
                    offset_a: a,
                    ..cfg.clone()
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<OffsetPoint> = runs
        .iter()
        .map(|r| OffsetPoint {
            offset_a: r.offset_a,
            mean_psnr_db: r.mean_psnr_db,
            stderr_psnr_db: r.stderr_psnr_db,
        })
        .collect();
    let best = (0..points.len())
        .reduce(|b, i| {
            if points[i].mean_psnr_db > points[b].mean_psnr_db {
                i
            } else {
                b
            }
        })
        .expect("non-empty grid");
    let argmax_a = points[best].offset_a;
    Ok(OffsetSweep {
        points,
        argmax_a,
        argmax_in_expected_range: argmax_a > 0.0 && argmax_a < 0.6,
        runs,
    })
}

pub fn offset_csv(sweep: &OffsetSweep) -> String {
    let mut out = String::from("offset_a,mean_psnr_db,stderr_psnr_db\n");
    for p in &sweep.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            p.offset_a, p.mean_psnr_db, p.stderr_psnr_db
        );
    }
    out
}

/// Dense `H` of a complementary set at `g = 1/K`, for RIP probes.
pub fn dense_system(
    family: Family,
    n: usize,
    m: usize,
    l: usize,
    k: usize,
    offset_a: f64,
    seed: u64,
) -> Result<nalgebra::DMatrix<f64>> {
    let set = gen_complementary_set_checked(family, n, m, k, 1.0 / k as f64, seed)?;
    let masks = modulation_masks(&set, offset_a)?;
    ForwardOperator::new(l, &masks)?.materialize_h()
}

#[derive(Debug, Clone, Serialize)]
pub struct TinyProbe {
    pub seed: u64,
    pub family: Family,
    pub result: RipProbeResult,
}

/// Exhaustive `δ_S` on the `6×6×3`, `K = 2` system.
///
/// The wavelet basis needs planes of at least 16, so the probe uses the
/// canonical basis (`A = H`).
pub fn tiny_cassi_probe(family: Family, s: usize, seed: u64) -> Result<TinyProbe> {
    let h = dense_system(family, 6, 6, 3, 2, 0.0, seed)?;
    Ok(TinyProbe {
        seed,
        family,
        result: brute_force_delta_s(&h, s, SubsetPolicy::Exhaustive)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synth_scene, SceneKind};

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            seeds: vec![1, 2],
            tau: TauGrid::Relative(vec![0.01, 0.05]),
            solver: SolverConfig {
                max_iters: 60,
                ..SolverConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn rejects_mismatched_complementary_g() {
        let cfg = PipelineConfig {
            k: 2,
            g: 0.25,
            ..small_cfg()
        };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            seeds: vec![],
            ..small_cfg()
        };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            offset_a: 0.9,
            ..small_cfg()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn family_run_is_deterministic_and_shaped() {
        let scene = synth_scene(SceneKind::SmoothBlobs, 16, 16, 3, 0).unwrap();
        let cfg = PipelineConfig {
            levels: Some(1),
            ..small_cfg()
        };
        let a = run_family(&scene, Family::BlueNoiseHex, &cfg).unwrap();
        let b = run_family(&scene, Family::BlueNoiseHex, &cfg).unwrap();
        assert_eq!(a.mean_psnr_db.to_bits(), b.mean_psnr_db.to_bits());
        assert_eq!(a.runs.len(), 2);
        assert_eq!(a.band_mean_psnr_db.len(), 3);
        assert!(a.mean_psnr_db.is_finite() && a.mean_psnr_db > 5.0);
        let csv = band_csv(std::slice::from_ref(&a), &scene);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("bn-hex,0,450,"));
    }

    #[test]
    fn stage_tag_on_failure() {
        // 12 is not a power of two, so the basis stage fails
        let scene = synth_scene(SceneKind::SmoothBlobs, 12, 12, 2, 0).unwrap();
        match run_seed(&scene, Family::RandomSquare, &small_cfg(), 0) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "basis"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tiny_probe_is_exhaustive() {
        let p = tiny_cassi_probe(Family::RandomSquare, 2, 0).unwrap();
        assert_eq!(p.result.subsets_evaluated, 108 * 107 / 2);
        assert!(p.result.delta_s > 0.0);
    }
}
