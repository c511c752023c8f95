//! Separable 3D sparsity basis: 2D Symmlet-8 wavelets in space, DCT along bands.
//!
//! `synthesize` maps coefficients to a cube (`f = Ψθ`) and `analyze` is its
//! adjoint and inverse. Coefficients share the cube's vector layout: index
//! `s·N·M + q`, where `s` is the DCT frequency and `q` the column-major
//! position in the Mallat wavelet layout of a plane.

pub mod symlet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use symlet::{dwt2_forward, dwt2_inverse, FilterBank};

/// Smallest admissible plane size at `J` levels is `8·2^J`.
const MIN_SIZE_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_bands: usize,
    pub levels: usize,
}

impl BasisConfig {
    /// Default depth `log2(min(N, M)) − 3`: 2 at 32, 3 at 64, 5 at 256.
    pub fn with_default_levels(n_rows: usize, n_cols: usize, n_bands: usize) -> Result<Self> {
        let min = n_rows.min(n_cols);
        if !n_rows.is_power_of_two() || !n_cols.is_power_of_two() {
            return Err(Error::InvalidDimensions(format!(
                "wavelet basis needs power-of-two plane dims, got {n_rows}x{n_cols}"
            )));
        }
        let levels = (min.trailing_zeros() as usize).saturating_sub(3);
        let cfg = Self {
            n_rows,
            n_cols,
            n_bands,
            levels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_rows, self.n_cols);
        if !n.is_power_of_two() || !m.is_power_of_two() {
            return Err(Error::InvalidDimensions(format!(
                "wavelet basis needs power-of-two plane dims, got {n}x{m}"
            )));
        }
        if self.n_bands == 0 {
            return Err(Error::InvalidDimensions("L must be >= 1".into()));
        }
        if self.levels == 0 {
            return Err(Error::param("levels", "need at least one wavelet level"));
        }
        let need = MIN_SIZE_FACTOR << self.levels;
        if n.min(m) < need {
            return Err(Error::param(
                "levels",
                format!(
                    "{} levels need planes of at least {need}, got {n}x{m}",
                    self.levels
                ),
            ));
        }
        Ok(())
    }
}

/// Orthonormal DCT-II matrix, row `s` = frequency.
fn dct_matrix(len: usize) -> Vec<f64> {
    let mut d = vec![0.0; len * len];
    for s in 0..len {
        let scale = if s == 0 {
            (1.0 / len as f64).sqrt()
        } else {
            (2.0 / len as f64).sqrt()
        };
        for l in 0..len {
            d[s * len + l] = scale
                * (std::f64::consts::PI * (2 * l + 1) as f64 * s as f64 / (2 * len) as f64).cos();
        }
    }
    d
}

/// The basis `Ψ = Ψ_wavelet ⊗ Ψ_dct` as a matrix-free operator.
#[derive(Debug, Clone)]
pub struct SparsityBasis {
    cfg: BasisConfig,
    bank: FilterBank,
    dct: Vec<f64>,
}

impl SparsityBasis {
    pub fn new(cfg: BasisConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            bank: FilterBank::default(),
            dct: dct_matrix(cfg.n_bands),
        })
    }

    pub fn config(&self) -> BasisConfig {
        self.cfg
    }

    fn len(&self) -> usize {
        self.cfg.n_rows * self.cfg.n_cols * self.cfg.n_bands
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::mismatch(self.len(), v.len()));
        }
        Ok(())
    }

    /// `f = Ψθ`.
    pub fn synthesize(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        Ok(self.apply_vec(theta))
    }

    /// `θ = Ψᵀf`.
    pub fn analyze(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok(self.apply_adjoint_vec(f))
    }

    /// Applies `D` (forward) or `Dᵀ` (inverse) along the band axis.
    pub fn spectral(&self, input: &[f64], out: &mut [f64], inverse: bool) {
        let nb = self.cfg.n_bands;
        let plane = self.cfg.n_rows * self.cfg.n_cols;
        out.par_chunks_mut(plane).enumerate().for_each(|(s, dst)| {
            dst.fill(0.0);
            for l in 0..nb {
                let w = if inverse {
                    self.dct[l * nb + s]
                } else {
                    self.dct[s * nb + l]
                };
                for (o, v) in dst.iter_mut().zip(&input[l * plane..(l + 1) * plane]) {
                    *o += w * v;
                }
            }
        });
    }

    /// Forward (`inverse = false`) or inverse wavelet transform of every band, in place.
    pub fn spatial(&self, data: &mut [f64], inverse: bool) {
        let BasisConfig {
            n_rows,
            n_cols,
            levels,
            ..
        } = self.cfg;
        data.par_chunks_mut(n_rows * n_cols).for_each(|plane| {
            if inverse {
                dwt2_inverse(&self.bank, plane, n_rows, n_cols, levels);
            } else {
                dwt2_forward(&self.bank, plane, n_rows, n_cols, levels);
            }
        });
    }

    /// True for coefficient positions in a detail (non-approximation) subband.
    pub fn is_detail(&self, q: usize) -> bool {
        let plane = self.cfg.n_rows * self.cfg.n_cols;
        let q = q % plane;
        let (i, j) = (q % self.cfg.n_rows, q / self.cfg.n_rows);
        i >= self.cfg.n_rows >> self.cfg.levels || j >= self.cfg.n_cols >> self.cfg.levels
    }
}

impl LinearOperator for SparsityBasis {
    fn n_in(&self) -> usize {
        self.len()
    }

    fn n_out(&self) -> usize {
        self.len()
    }

    fn apply(&self, theta: &[f64], out: &mut [f64]) {
        self.spectral(theta, out, true);
        self.spatial(out, true);
    }

    fn apply_adjoint(&self, f: &[f64], out: &mut [f64]) {
        let mut tmp = f.to_vec();
        self.spatial(&mut tmp, false);
        self.spectral(&tmp, out, false);
    }
}
