//! ℓ1-regularized least squares by gradient projection (GPSR-BB, monotone).
//!
//! Minimizes `Φ(θ) = ½‖y − HΨθ‖² + τ‖θ‖₁` over the nonnegative split
//! `θ = u − v`. Each iteration takes a projected gradient step with a
//! Barzilai–Borwein length, minimizes the quadratic exactly along that
//! direction (clamped to `[0, 1]`) and then re-splits `θ` so that
//! `u = max(θ, 0)`, `v = max(−θ, 0)`, which keeps the trace of `Φ`
//! monotone non-increasing.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cube::{band_psnrs, mean_psnr, ReconReport, SpectralCube};
use crate::error::{Error, Result};
use crate::operator::{norm2_sq, Composed, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub max_iters: usize,
    pub tol_rel_objective: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Warm-start through a geometric sequence of larger `τ` values first.
    pub continuation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            max_iters: 500,
            tol_rel_objective: 1e-5,
            alpha_min: 1e-30,
            alpha_max: 1e30,
            continuation: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param(
                "tau",
                format!("must be positive, got {}", self.tau),
            ));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max) {
            return Err(Error::param("alpha_min", "need 0 < alpha_min < alpha_max"));
        }
        if !(self.tol_rel_objective > 0.0) {
            return Err(Error::param("tol_rel_objective", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// One solver iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    /// Barzilai–Borwein step length used for the projected step.
    pub step: f64,
    pub nonzeros: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub theta: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.objective)
    }
}

/// Trace as CSV: `iteration,objective,step,nonzeros`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,objective,step,nonzeros\n");
    for t in trace {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t.iteration, t.objective, t.step, t.nonzeros
        );
    }
    out
}

/// `Φ(θ)` for the composed sensing operator.
pub fn objective(y: &[f64], sensing: &dyn LinearOperator, theta: &[f64], tau: f64) -> f64 {
    let r: Vec<f64> = sensing
        .apply_vec(theta)
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .collect();
    0.5 * norm2_sq(&r) + tau * theta.iter().map(|t| t.abs()).sum::<f64>()
}

/// Solves for `θ̂` from measurements `y`, system `forward` (`H`) and basis (`Ψ`).
pub fn solve(
    y: &[f64],
    forward: &dyn LinearOperator,
    basis: &dyn LinearOperator,
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    if forward.n_out() != y.len() || forward.n_in() != basis.n_out() {
        return Err(Error::mismatch(
            format!("y of {} and H in = Ψ out", forward.n_out()),
            format!(
                "y of {}, H in {}, Ψ out {}",
                y.len(),
                forward.n_in(),
                basis.n_out()
            ),
        ));
    }
    let sensing = Composed {
        outer: forward,
        inner: basis,
    };
    let aty = sensing.apply_adjoint_vec(y);
    let mut theta = aty.clone();

    if cfg.continuation {
        let tau_max = aty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut stage_tau = 0.5 * tau_max;
        while stage_tau > cfg.tau {
            let stage = SolverConfig {
                tau: stage_tau,
                max_iters: cfg.max_iters / 4 + 1,
                tol_rel_objective: cfg.tol_rel_objective * 10.0,
                continuation: false,
                ..*cfg
            };
            theta = run(y, &sensing, theta, &stage)?.theta;
            stage_tau *= 0.2;
        }
    }
    run(y, &sensing, theta, cfg)
}

fn run(y: &[f64], a: &dyn LinearOperator, mut x: Vec<f64>, cfg: &SolverConfig) -> Result<Solution> {
    let tau = cfg.tau;
    let n = x.len();
    let mut r: Vec<f64> = a.apply_vec(&x).iter().zip(y).map(|(p, q)| p - q).collect();
    let mut grad = a.apply_adjoint_vec(&r);
    let l1 = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>();
    let mut f_val = 0.5 * norm2_sq(&r) + tau * l1(&x);

    // initial step: exact minimizer along the free projected gradient
    let mut alpha = {
        let mut gx = vec![0.0; n];
        let mut gg = 0.0;
        for i in 0..n {
            let (u, v) = (x[i].max(0.0), (-x[i]).max(0.0));
            let gu = grad[i] + tau;
            let gv = -grad[i] + tau;
            let gu = if u > 0.0 || gu < 0.0 { gu } else { 0.0 };
            let gv = if v > 0.0 || gv < 0.0 { gv } else { 0.0 };
            gx[i] = gu - gv;
            gg += gu * gu + gv * gv;
        }
        let agx = norm2_sq(&a.apply_vec(&gx));
        if agx > 0.0 {
            (gg / agx).clamp(cfg.alpha_min, cfg.alpha_max)
        } else {
            1.0
        }
    };

    let mut trace = Vec::new();
    let mut dx = vec![0.0; n];
    let mut small_changes = 0;
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let mut slope = 0.0;
        let mut dd = 0.0;
        for i in 0..n {
            let (u, v) = (x[i].max(0.0), (-x[i]).max(0.0));
            let gu = grad[i] + tau;
            let gv = -grad[i] + tau;
            let du = (u - alpha * gu).max(0.0) - u;
            let dv = (v - alpha * gv).max(0.0) - v;
            dx[i] = du - dv;
            slope += gu * du + gv * dv;
            dd += du * du + dv * dv;
        }

        if slope >= 0.0 || dd == 0.0 {
            // no descent direction left: stationary
            trace.push(TraceRow {
                iteration,
                objective: f_val,
                step: alpha,
                nonzeros: x.iter().filter(|v| **v != 0.0).count(),
            });
            converged = true;
            break;
        }

        let adx = a.apply_vec(&dx);
        let curvature = norm2_sq(&adx);
        let mut lambda = if curvature > 0.0 {
            (-slope / curvature).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..40 {
            let x_new: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + lambda * di).collect();
            let r_new: Vec<f64> = r
                .iter()
                .zip(&adx)
                .map(|(ri, ai)| ri + lambda * ai)
                .collect();
            let f_new = 0.5 * norm2_sq(&r_new) + tau * l1(&x_new);
            if !f_new.is_finite() {
                return Err(Error::Diverged { iteration, trace });
            }
            if f_new <= f_val {
                accepted = Some((x_new, r_new, f_new));
                break;
            }
            lambda *= 0.5;
        }

        let Some((x_new, r_new, f_new)) = accepted else {
            // round-off floor: no representable decrease along this direction
            trace.push(TraceRow {
                iteration,
                objective: f_val,
                step: alpha,
                nonzeros: x.iter().filter(|v| **v != 0.0).count(),
            });
            converged = true;
            break;
        };

        let rel = (f_val - f_new).abs() / f_new.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        r = r_new;
        f_val = f_new;
        grad = a.apply_adjoint_vec(&r);

        alpha = if curvature > 0.0 {
            (dd / curvature).clamp(cfg.alpha_min, cfg.alpha_max)
        } else {
            cfg.alpha_max
        };

        trace.push(TraceRow {
            iteration,
            objective: f_val,
            step: alpha,
            nonzeros: x.iter().filter(|v| **v != 0.0).count(),
        });

        if rel < cfg.tol_rel_objective {
            small_changes += 1;
            if small_changes >= 3 {
                converged = true;
                break;
            }
        } else {
            small_changes = 0;
        }
    }

    Ok(Solution {
        theta: x,
        trace,
        converged,
    })
}

/// Solves and scores one reconstruction against a known cube.
pub fn reconstruct_and_score(
    y: &[f64],
    forward: &dyn LinearOperator,
    basis: &dyn LinearOperator,
    cfg: &SolverConfig,
    truth: &SpectralCube,
) -> Result<(ReconReport, SpectralCube)> {
    let start = Instant::now();
    let sol = solve(y, forward, basis, cfg)?;
    let f = basis.apply_vec(&sol.theta);
    let (n, m, l) = truth.dims();
    let estimate = SpectralCube::from_estimate(n, m, l, &f)?;
    let psnrs = band_psnrs(truth, &estimate)?;
    let report = ReconReport::new(
        psnrs,
        sol.iterations(),
        sol.objective(),
        cfg.tau,
        start.elapsed().as_secs_f64(),
    );
    Ok((report, estimate))
}

/// PSNR-vs-`τ` curve and its maximizer.
#[derive(Debug, Clone, Serialize)]
pub struct TauSearch {
    pub best_tau: f64,
    /// `(τ, mean PSNR)` in grid order.
    pub curve: Vec<(f64, f64)>,
    pub best_report: ReconReport,
    #[serde(skip)]
    pub best_estimate: SpectralCube,
}

/// Runs the solver at every `τ` in the grid and keeps the best mean PSNR.
pub fn line_search_tau(
    y: &[f64],
    forward: &dyn LinearOperator,
    basis: &dyn LinearOperator,
    tau_grid: &[f64],
    truth: &SpectralCube,
    base: &SolverConfig,
) -> Result<TauSearch> {
    if tau_grid.is_empty() {
        return Err(Error::param("tau_grid", "empty grid"));
    }
    let reports = tau_grid
        .par_iter()
        .map(|&tau| {
            let cfg = SolverConfig { tau, ..*base };
            reconstruct_and_score(y, forward, basis, &cfg, truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let curve: Vec<(f64, f64)> = tau_grid
        .iter()
        .zip(&reports)
        .map(|(&t, (r, _))| (t, mean_psnr(&r.band_psnr_db)))
        .collect();
    // first maximum wins ties
    let best = (0..curve.len())
        .reduce(|b, i| if curve[i].1 > curve[b].1 { i } else { b })
        .expect("non-empty grid");
    let (best_report, best_estimate) = reports.into_iter().nth(best).expect("index in range");
    Ok(TauSearch {
        best_tau: tau_grid[best],
        curve,
        best_report,
        best_estimate,
    })
}
