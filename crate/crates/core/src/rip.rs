//! Empirical RIP diagnostics for coded-aperture sets.
//!
//! The off-diagonal Gram entries of the CASSI sensing matrix are driven by
//! `r = Σ_k tᵏ_m tᵏ_n`, the per-snapshot products of aperture entries at two
//! positions that land on the same detector pixel. Two voxels collide when
//! they sit in the same row and their columns differ by a band shift, so the
//! sampler draws same-row pairs displaced by `1..=L−1` columns. Lower mean
//! `r` means smaller expected coherence.
//!
//! The sub-Gaussian tail bound that turns `r` into a recovery probability
//! uses constants (the entry bound of the basis products, the universal
//! constant of the tail, and `ρ`) that have no prescribed values; they are
//! not computed here. [`brute_force_delta_s`] instead measures `δ_S` directly
//! on small dense matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aperture::{gen_complementary_set_checked, Aperture, ApertureSet, Family};
use crate::error::{Error, Result};
use crate::hex::{modulation_masks, GreyAperture};

/// Family labels used in r-statistic reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FamilyTag {
    /// Random square.
    SR,
    /// Blue-noise square.
    SB,
    /// Random hexagonal (grey-equivalent).
    HR,
    /// Blue-noise hexagonal (grey-equivalent).
    HB,
}

impl From<Family> for FamilyTag {
    fn from(f: Family) -> Self {
        match f {
            Family::RandomSquare => FamilyTag::SR,
            Family::BlueNoiseSquare => FamilyTag::SB,
            Family::RandomHex => FamilyTag::HR,
            Family::BlueNoiseHex => FamilyTag::HB,
        }
    }
}

impl FamilyTag {
    pub fn family(self) -> Family {
        match self {
            FamilyTag::SR => Family::RandomSquare,
            FamilyTag::SB => Family::BlueNoiseSquare,
            FamilyTag::HR => Family::RandomHex,
            FamilyTag::HB => Family::BlueNoiseHex,
        }
    }
}

/// How `(m, n)` position pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSampler {
    /// Same row, column displacement uniform in `1..=max_shift` (`L − 1`).
    BandShift { max_shift: usize },
    /// Same row, fixed column displacement.
    FixedShift(usize),
}

impl PairSampler {
    fn shifts(&self) -> (usize, usize) {
        match *self {
            PairSampler::BandShift { max_shift } => (1, max_shift),
            PairSampler::FixedShift(d) => (d, d),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RStatReport {
    pub family: FamilyTag,
    pub k: usize,
    pub g: f64,
    pub samples: usize,
    pub mean_r: f64,
    pub stderr: f64,
    /// Mean `r` per column displacement, `(shift, mean)`.
    pub by_shift: Vec<(usize, f64)>,
    /// Fraction of (pair, shot) products that vanish among pairs closer than
    /// the blue-noise principal wavelength `1/√g` (or `1/√(1−g)` above 1/2).
    pub close_pair_zero_fraction: Option<f64>,
}

/// Per-snapshot real masks used by the statistics (grey equivalents for hex).
fn entry_masks(set: &ApertureSet, offset_a: f64) -> Result<Vec<GreyAperture>> {
    modulation_masks(set, offset_a)
}

/// Monte Carlo estimate of `E[r]` for one aperture set.
pub fn r_statistic(
    set: &ApertureSet,
    offset_a: f64,
    sampler: PairSampler,
    n_samples: usize,
    seed: u64,
) -> Result<RStatReport> {
    if n_samples < 100 {
        return Err(Error::param(
            "n_samples",
            format!("need >= 100, got {n_samples}"),
        ));
    }
    let masks = entry_masks(set, offset_a)?;
    let (n, m) = (masks[0].rows(), masks[0].cols());
    let (lo, hi) = sampler.shifts();
    if lo == 0 || hi >= m {
        return Err(Error::param(
            "sampler",
            format!("shifts {lo}..={hi} do not fit {m} columns"),
        ));
    }

    let g = set.g;
    let principal_wavelength = 1.0 / if g <= 0.5 { g.sqrt() } else { (1.0 - g).sqrt() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift_sum = vec![0.0; hi + 1];
    let mut shift_count = vec![0usize; hi + 1];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let (mut close_zero, mut close_total) = (0usize, 0usize);

    for _ in 0..n_samples {
        let d = rng.gen_range(lo..=hi);
        let row = rng.gen_range(0..n);
        let col = rng.gen_range(0..m - d);
        let mut r = 0.0;
        for mask in &masks {
            let p = mask.get(row, col) * mask.get(row, col + d);
            r += p;
            if (d as f64) < principal_wavelength {
                close_total += 1;
                close_zero += usize::from(p == 0.0);
            }
        }
        sum += r;
        sum_sq += r * r;
        shift_sum[d] += r;
        shift_count[d] += 1;
    }

    let ns = n_samples as f64;
    let mean = sum / ns;
    let var = ((sum_sq - ns * mean * mean) / (ns - 1.0)).max(0.0);
    Ok(RStatReport {
        family: set.family.into(),
        k: set.len(),
        g,
        samples: n_samples,
        mean_r: mean,
        stderr: (var / ns).sqrt(),
        by_shift: (lo..=hi)
            .filter(|&d| shift_count[d] > 0)
            .map(|d| (d, shift_sum[d] / shift_count[d] as f64))
            .collect(),
        close_pair_zero_fraction: (close_total > 0).then(|| close_zero as f64 / close_total as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Spectral bands; pairs are displaced by `1..=L−1` columns.
    pub n_bands: usize,
    pub g: f64,
    pub k: usize,
    pub n_seeds: usize,
    /// Pairs drawn per seed.
    pub n_samples: usize,
    pub offset_a: f64,
    pub base_seed: u64,
}

impl Default for OrderingConfig {
    fn default() -> Self {
        Self {
            n_rows: 64,
            n_cols: 64,
            n_bands: 6,
            g: 0.5,
            k: 2,
            n_seeds: 5,
            n_samples: 100_000,
            offset_a: 0.0,
            base_seed: 0,
        }
    }
}

/// Mean `r` of one family over all seeds. `stderr` is the larger of the
/// pooled-sample and between-seed standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyStat {
    pub family: FamilyTag,
    pub k: usize,
    pub g: f64,
    pub samples: usize,
    pub mean_r: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub stats: Vec<FamilyStat>,
    /// True iff the means strictly decrease along the requested order with
    /// every gap above two combined standard errors.
    pub verdict: bool,
}

/// Two-standard-error significance gate for `a > b`.
pub fn significantly_greater(a: &FamilyStat, b: &FamilyStat) -> bool {
    a.mean_r - b.mean_r > 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

/// Mean `r` of one family, pooled over `n_seeds` complementary sets.
pub fn family_stat(family: FamilyTag, cfg: &OrderingConfig) -> Result<FamilyStat> {
    let sampler = PairSampler::BandShift {
        max_shift: cfg.n_bands.saturating_sub(1),
    };
    let per_seed = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = cfg.base_seed.wrapping_add(s);
            let set = gen_complementary_set_checked(
                family.family(),
                cfg.n_rows,
                cfg.n_cols,
                cfg.k,
                cfg.g,
                seed,
            )?;
            r_statistic(&set, cfg.offset_a, sampler, cfg.n_samples, seed ^ 0x5eed)
        })
        .collect::<Result<Vec<_>>>()?;
    if per_seed.is_empty() {
        return Err(Error::param("n_seeds", "need at least one seed"));
    }
    // pool raw moments across seeds
    let (mut n_tot, mut sum, mut sum_sq) = (0.0, 0.0, 0.0);
    for r in &per_seed {
        let n = r.samples as f64;
        let var = r.stderr.powi(2) * n;
        n_tot += n;
        sum += r.mean_r * n;
        sum_sq += var * (n - 1.0) + n * r.mean_r * r.mean_r;
    }
    let mean = sum / n_tot;
    let var = ((sum_sq - n_tot * mean * mean) / (n_tot - 1.0)).max(0.0);
    let pooled_se = (var / n_tot).sqrt();
    // pairs within one seed share an aperture, so seeds are the independent
    // unit; the spread of per-seed means carries the aperture-to-aperture part
    let ns = per_seed.len() as f64;
    let between_se = if per_seed.len() > 1 {
        let v = per_seed
            .iter()
            .map(|r| (r.mean_r - mean).powi(2))
            .sum::<f64>()
            / (ns - 1.0);
        (v / ns).sqrt()
    } else {
        0.0
    };
    Ok(FamilyStat {
        family,
        k: cfg.k,
        g: cfg.g,
        samples: n_tot as usize,
        mean_r: mean,
        stderr: pooled_se.max(between_se),
    })
}

/// Checks `E[r]` strictly decreases along `order` (e.g. SR, SB, HB).
pub fn verify_ordering_of(order: &[FamilyTag], cfg: &OrderingConfig) -> Result<OrderingReport> {
    let stats = order
        .iter()
        .map(|&f| family_stat(f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let verdict = stats.len() >= 2
        && stats
            .windows(2)
            .all(|w| significantly_greater(&w[0], &w[1]));
    Ok(OrderingReport { stats, verdict })
}

/// `E[r]_SR > E[r]_SB > E[r]_HB` under complementary sets with `K·g = 1`.
pub fn verify_ordering(cfg: &OrderingConfig) -> Result<OrderingReport> {
    verify_ordering_of(&[FamilyTag::SR, FamilyTag::SB, FamilyTag::HB], cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplementarityReport {
    /// `C_n = Σ_k (tᵏ_n)²` per square position, row-major.
    pub per_position: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// For hex sets, whether `Σ_k (hex element)² = 1` on every valid cell.
    pub hex_elements_complementary: Option<bool>,
}

/// Per-position normalization constant of a set.
pub fn complementarity_constant(set: &ApertureSet, offset_a: f64) -> Result<ComplementarityReport> {
    let masks = entry_masks(set, offset_a)?;
    let len = masks[0].entries().len();
    let per_position: Vec<f64> = (0..len)
        .map(|p| masks.iter().map(|t| t.entries()[p].powi(2)).sum())
        .collect();
    let min = per_position.iter().copied().fold(f64::INFINITY, f64::min);
    let max = per_position
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mean = per_position.iter().sum::<f64>() / len as f64;

    let hex_elements_complementary = match &set.apertures[0] {
        Aperture::Hex(h) => {
            let valid = h.valid_mask();
            Some((0..valid.len()).filter(|&p| valid[p]).all(|p| {
                set.apertures
                    .iter()
                    .map(|a| (a.grid_bits()[p] as u32).pow(2))
                    .sum::<u32>()
                    == 1
            }))
        }
        Aperture::Square(_) => None,
    };

    Ok(ComplementarityReport {
        per_position,
        min,
        mean,
        max,
        hex_elements_complementary,
    })
}

/// Which column subsets of size `S` a δ_S probe examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubsetPolicy {
    Exhaustive,
    Random { count: usize, seed: u64 },
}

/// Most subsets an exhaustive probe may enumerate.
pub const MAX_EXHAUSTIVE_SUBSETS: u128 = 5_000_000;
/// Most columns a probe accepts.
pub const MAX_PROBE_COLUMNS: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct RipProbeResult {
    pub s: usize,
    pub policy: SubsetPolicy,
    pub subsets_evaluated: usize,
    /// `max_τ max|λ(B_τ − I)|` with `B = AᵀA / C`.
    pub delta_s: f64,
    /// Normalization `C`: mean of the Gram diagonal.
    pub c: f64,
    /// Largest absolute off-diagonal row sum of `B` (coherence proxy for α,
    /// taking the basis-product bound as 1).
    pub alpha_estimate: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Restricted isometry constant of `A` by eigen-decomposition of Gram
/// submatrices.
///
/// Only subsets of size exactly `min(S, Q₂)` are examined: by eigenvalue
/// interlacing their extremes bound those of every smaller subset.
pub fn brute_force_delta_s(
    a: &DMatrix<f64>,
    s: usize,
    policy: SubsetPolicy,
) -> Result<RipProbeResult> {
    let q2 = a.ncols();
    if q2 == 0 || s == 0 {
        return Err(Error::param("s", "need S >= 1 and at least one column"));
    }
    if q2 > MAX_PROBE_COLUMNS {
        return Err(Error::TooLarge(format!(
            "{q2} columns (limit {MAX_PROBE_COLUMNS})"
        )));
    }
    let size = s.min(q2);
    if policy == SubsetPolicy::Exhaustive && binomial(q2, size) > MAX_EXHAUSTIVE_SUBSETS {
        return Err(Error::TooLarge(format!(
            "C({q2}, {size}) subsets exceed the exhaustive limit {MAX_EXHAUSTIVE_SUBSETS}"
        )));
    }

    let gram = a.transpose() * a;
    let c = (0..q2).map(|j| gram[(j, j)]).sum::<f64>() / q2 as f64;
    if !(c > 0.0) {
        return Err(Error::Degenerate(
            "zero matrix has no RIP normalization".into(),
        ));
    }
    let b = gram / c;

    let eval = |cols: &[usize]| -> f64 {
        let sub = DMatrix::from_fn(cols.len(), cols.len(), |i, j| {
            b[(cols[i], cols[j])] - if i == j { 1.0 } else { 0.0 }
        });
        SymmetricEigen::new(sub)
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()))
    };

    let (delta, evaluated) = match policy {
        SubsetPolicy::Exhaustive => {
            // parallel over the first index, then lexicographic combinations
            let results: Vec<(f64, usize)> = (0..q2)
                .into_par_iter()
                .map(|first| {
                    let mut best = 0.0f64;
                    let mut count = 0;
                    let mut rest: Vec<usize> = (first + 1..first + size).collect();
                    if size == 1 {
                        return (eval(&[first]), 1);
                    }
                    if rest.last().is_none_or(|&l| l >= q2) {
                        return (0.0, 0);
                    }
                    let mut cols = vec![0; size];
                    loop {
                        cols[0] = first;
                        cols[1..].copy_from_slice(&rest);
                        best = best.max(eval(&cols));
                        count += 1;
                        if !next_combination(&mut rest, q2) {
                            break;
                        }
                    }
                    (best, count)
                })
                .collect();
            results
                .into_iter()
                .fold((0.0f64, 0), |(m, c), (b, n)| (m.max(b), c + n))
        }
        SubsetPolicy::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = 0.0f64;
            for _ in 0..count {
                let cols = sample(&mut rng, q2, size).into_vec();
                best = best.max(eval(&cols));
            }
            (best, count)
        }
    };

    let alpha_estimate = (0..q2)
        .map(|j| {
            (0..q2)
                .filter(|&i| i != j)
                .map(|i| b[(i, j)].abs())
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);

    Ok(RipProbeResult {
        s,
        policy,
        subsets_evaluated: evaluated,
        delta_s: delta,
        c,
        alpha_estimate,
    })
}

/// Advances a strictly increasing index vector over values `< n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - (k - pos) {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}
