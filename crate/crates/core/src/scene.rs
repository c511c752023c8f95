//! Deterministic synthetic spectral scenes.
//!
//! Every scene is a sum of spatial components, each carrying a smooth
//! spectral signature built from the first three DCT modes along the bands.
//! The result is scaled so its maximum is 1, then clipped to `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cube::{SpectralCube, SIX_BAND_WAVELENGTHS_NM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// Overlapping Gaussian blobs on a gentle gradient.
    SmoothBlobs,
    /// Flat rectangles and thin bars with hard edges.
    TextEdges,
    /// Linear ramps whose slope varies with band, plus hard-edged disks.
    SpectralRamps,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [
        SceneKind::SmoothBlobs,
        SceneKind::TextEdges,
        SceneKind::SpectralRamps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::SmoothBlobs => "smooth-blobs",
            SceneKind::TextEdges => "text-edges",
            SceneKind::SpectralRamps => "spectral-ramps",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("scene", format!("unknown scene kind {s:?}")))
    }
}

/// Positive spectrum `1 + c1·cos(π(l+½)/L) + c2·cos(2π(l+½)/L)`, `|c1|+|c2| < 1`.
fn signature(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    let c1 = rng.gen_range(-0.6..0.6);
    let c2 = rng.gen_range(-0.3..0.3);
    (0..l)
        .map(|b| {
            let x = std::f64::consts::PI * (b as f64 + 0.5) / l as f64;
            1.0 + c1 * x.cos() + c2 * (2.0 * x).cos()
        })
        .collect()
}

/// Wavelength labels: the six-band set for `L = 6`, else an even spread over
/// the same range.
pub fn default_wavelengths(l: usize) -> Vec<f64> {
    if l == 6 {
        return SIX_BAND_WAVELENGTHS_NM.to_vec();
    }
    let (lo, hi) = (SIX_BAND_WAVELENGTHS_NM[0], SIX_BAND_WAVELENGTHS_NM[5]);
    if l == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..l)
        .map(|b| lo + (hi - lo) * b as f64 / (l - 1) as f64)
        .collect()
}

pub fn synth_scene(
    kind: SceneKind,
    n: usize,
    m: usize,
    l: usize,
    seed: u64,
) -> Result<SpectralCube> {
    if n == 0 || m == 0 || l == 0 {
        return Err(Error::InvalidDimensions(format!("{n}x{m}x{l} scene")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64) << 56);
    let mut raw = vec![0.0; n * m * l];
    let (nf, mf) = (n as f64, m as f64);
    let add = |raw: &mut [f64], spectrum: &[f64], spatial: &dyn Fn(f64, f64) -> f64| {
        for j in 0..m {
            for i in 0..n {
                let v = spatial(i as f64, j as f64);
                if v != 0.0 {
                    for (b, s) in spectrum.iter().enumerate() {
                        raw[b * n * m + j * n + i] += v * s;
                    }
                }
            }
        }
    };

    match kind {
        SceneKind::SmoothBlobs => {
            let bg = signature(&mut rng, l);
            let (gx, gy) = (rng.gen_range(0.0..0.15), rng.gen_range(0.0..0.15));
            add(&mut raw, &bg, &|i, j| 0.1 + gx * i / nf + gy * j / mf);
            for _ in 0..10 {
                let spectrum = signature(&mut rng, l);
                let (ci, cj) = (rng.gen_range(0.0..nf), rng.gen_range(0.0..mf));
                let s = rng.gen_range(0.08..0.2) * nf.min(mf);
                let amp = rng.gen_range(0.3..1.0);
                add(&mut raw, &spectrum, &|i, j| {
                    amp * (-((i - ci).powi(2) + (j - cj).powi(2)) / (2.0 * s * s)).exp()
                });
            }
        }
        SceneKind::TextEdges => {
            let bg = signature(&mut rng, l);
            add(&mut raw, &bg, &|_, _| 0.15);
            for _ in 0..6 {
                let spectrum = signature(&mut rng, l);
                let (h, w) = (rng.gen_range(0.1..0.4) * nf, rng.gen_range(0.1..0.4) * mf);
                let (i0, j0) = (rng.gen_range(0.0..nf - h), rng.gen_range(0.0..mf - w));
                let amp = rng.gen_range(0.3..0.8);
                add(&mut raw, &spectrum, &|i, j| {
                    if (i0..i0 + h).contains(&i) && (j0..j0 + w).contains(&j) {
                        amp
                    } else {
                        0.0
                    }
                });
            }
            // glyph-like strokes two or three pixels thick
            for _ in 0..12 {
                let spectrum = signature(&mut rng, l);
                let vertical = rng.gen_bool(0.5);
                let len = rng.gen_range(0.15..0.5) * if vertical { nf } else { mf };
                let thick = rng.gen_range(2.0..4.0);
                let (i0, j0) = (rng.gen_range(0.0..nf), rng.gen_range(0.0..mf));
                let amp = rng.gen_range(0.4..1.0);
                add(&mut raw, &spectrum, &|i, j| {
                    let (along, across) = if vertical {
                        (i - i0, j - j0)
                    } else {
                        (j - j0, i - i0)
                    };
                    if (0.0..len).contains(&along) && (0.0..thick).contains(&across) {
                        amp
                    } else {
                        0.0
                    }
                });
            }
        }
        SceneKind::SpectralRamps => {
            // slopes vary across bands through the first DCT modes
            let sx = signature(&mut rng, l);
            let sy = signature(&mut rng, l);
            add(&mut raw, &sx, &|i, _| 0.4 * i / nf);
            add(&mut raw, &sy, &|_, j| 0.4 * j / mf);
            for _ in 0..5 {
                let spectrum = signature(&mut rng, l);
                let (ci, cj) = (rng.gen_range(0.0..nf), rng.gen_range(0.0..mf));
                let rad = rng.gen_range(0.05..0.15) * nf.min(mf);
                let amp = rng.gen_range(0.2..0.6);
                add(&mut raw, &spectrum, &|i, j| {
                    if (i - ci).powi(2) + (j - cj).powi(2) <= rad * rad {
                        amp
                    } else {
                        0.0
                    }
                });
            }
        }
    }

    SpectralCube::normalized(n, m, l, raw)?.with_wavelengths(default_wavelengths(l))
}
