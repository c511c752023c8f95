//! Discrete CASSI forward model.
//!
//! Snapshot `k` codes every band with mask `Tᵏ`, shears band `l` (0-based)
//! right by `l` detector columns and integrates over bands:
//!
//! ```text
//! Yᵏ(i, j) = Σ_l F(i, j − l, l) · Tᵏ(i, j − l),   j ∈ [0, M + L − 1)
//! ```
//!
//! with out-of-range spatial indices contributing zero. Each snapshot yields
//! `V = N·(M + L − 1)` detector values; snapshots are concatenated in order.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cube::{MeasurementSet, SpectralCube};
use crate::error::{Error, Result};
use crate::hex::GreyAperture;
use crate::operator::LinearOperator;

/// Largest dense system matrix `materialize_h` will build, in entries.
pub const DENSE_ENTRY_LIMIT: usize = 10_000_000;

/// Implicit system matrix `H` for `K` snapshots.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    n_rows: usize,
    n_cols: usize,
    n_bands: usize,
    // one column-major N x M mask per snapshot
    masks: Vec<Vec<f64>>,
}

impl ForwardOperator {
    pub fn new(n_bands: usize, masks: &[GreyAperture]) -> Result<Self> {
        let first = masks
            .first()
            .ok_or_else(|| Error::param("masks", "need at least one snapshot"))?;
        if n_bands == 0 {
            return Err(Error::InvalidDimensions("L must be >= 1".into()));
        }
        let (n, m) = (first.rows(), first.cols());
        let mut col_major = Vec::with_capacity(masks.len());
        for mask in masks {
            if (mask.rows(), mask.cols()) != (n, m) {
                return Err(Error::mismatch(
                    format!("{n}x{m}"),
                    format!("{}x{}", mask.rows(), mask.cols()),
                ));
            }
            let mut t = vec![0.0; n * m];
            for i in 0..n {
                for j in 0..m {
                    t[j * n + i] = mask.get(i, j);
                }
            }
            col_major.push(t);
        }
        Ok(Self {
            n_rows: n,
            n_cols: m,
            n_bands,
            masks: col_major,
        })
    }

    pub fn n_shots(&self) -> usize {
        self.masks.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_rows, self.n_cols, self.n_bands)
    }

    pub fn n_det_cols(&self) -> usize {
        self.n_cols + self.n_bands - 1
    }

    /// Detector pixels per snapshot, `V`.
    pub fn plane_len(&self) -> usize {
        self.n_rows * self.n_det_cols()
    }

    /// Mask entry `Tᵏ(i, j)`.
    pub fn mask(&self, k: usize, i: usize, j: usize) -> f64 {
        self.masks[k][j * self.n_rows + i]
    }

    fn check_len(&self, what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::param(
                what,
                format!("expected length {expected}, got {got}"),
            ));
        }
        Ok(())
    }

    /// `y = H f`.
    pub fn apply_h(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len("f", self.n_in(), f.len())?;
        Ok(self.apply_vec(f))
    }

    /// `f = Hᵀ y`.
    pub fn apply_ht(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len("y", self.n_out(), y.len())?;
        Ok(self.apply_adjoint_vec(y))
    }

    /// Dense `(K·V) × (N·M·L)` copy of `H`; small instances only.
    pub fn materialize_h(&self) -> Result<DMatrix<f64>> {
        let (rows, cols) = (self.n_out(), self.n_in());
        if rows.saturating_mul(cols) > DENSE_ENTRY_LIMIT {
            return Err(Error::TooLarge(format!(
                "dense H would have {rows}x{cols} entries (limit {DENSE_ENTRY_LIMIT})"
            )));
        }
        let (n, m) = (self.n_rows, self.n_cols);
        let mut h = DMatrix::zeros(rows, cols);
        for (k, mask) in self.masks.iter().enumerate() {
            for l in 0..self.n_bands {
                for j in 0..m {
                    for i in 0..n {
                        let row = k * self.plane_len() + (j + l) * n + i;
                        let col = l * n * m + j * n + i;
                        h[(row, col)] = mask[j * n + i];
                    }
                }
            }
        }
        Ok(h)
    }
}

impl LinearOperator for ForwardOperator {
    fn n_in(&self) -> usize {
        self.n_rows * self.n_cols * self.n_bands
    }

    fn n_out(&self) -> usize {
        self.n_shots() * self.plane_len()
    }

    fn apply(&self, f: &[f64], y: &mut [f64]) {
        let (n, m, nb) = (self.n_rows, self.n_cols, self.n_bands);
        let plane = n * m;
        y.par_chunks_mut(self.plane_len())
            .zip(self.masks.par_iter())
            .for_each(|(yk, t)| {
                yk.fill(0.0);
                for l in 0..nb {
                    let band = &f[l * plane..(l + 1) * plane];
                    let shifted = &mut yk[l * n..(l + m) * n];
                    for ((out, &fv), &tv) in shifted.iter_mut().zip(band).zip(t) {
                        *out += fv * tv;
                    }
                }
            });
    }

    fn apply_adjoint(&self, y: &[f64], f: &mut [f64]) {
        let (n, m) = (self.n_rows, self.n_cols);
        let plane = n * m;
        let v = self.plane_len();
        f.par_chunks_mut(plane).enumerate().for_each(|(l, band)| {
            band.fill(0.0);
            for (k, t) in self.masks.iter().enumerate() {
                let shifted = &y[k * v + l * n..k * v + (l + m) * n];
                for ((out, &yv), &tv) in band.iter_mut().zip(shifted).zip(t) {
                    *out += yv * tv;
                }
            }
        });
    }
}

/// Additive detector noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// I.i.d. zero-mean Gaussian with standard deviation `sigma`, seeded.
    Gaussian {
        sigma: f64,
        seed: u64,
    },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        Ok(NoiseModel::Gaussian { sigma, seed })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma, .. } => *sigma,
        }
    }
}

/// Simulates the detector readout of `cube` through `op`, then adds noise.
pub fn measure(
    cube: &SpectralCube,
    op: &ForwardOperator,
    noise: NoiseModel,
) -> Result<MeasurementSet> {
    if cube.dims() != op.dims() {
        return Err(Error::mismatch(
            format!("{:?}", op.dims()),
            format!("{:?}", cube.dims()),
        ));
    }
    let mut y = op.apply_vec(cube.as_slice());
    let mut seed = 0;
    if let NoiseModel::Gaussian { sigma, seed: s } = noise {
        seed = s;
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma validated");
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            for v in &mut y {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let mut set = MeasurementSet::new(op.n_shots(), op.dims().0, op.n_det_cols(), y)?;
    set.noise_sigma = noise.sigma();
    set.seed = seed;
    Ok(set)
}
