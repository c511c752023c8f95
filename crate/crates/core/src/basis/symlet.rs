//! Symmlet-8 (least-asymmetric Daubechies, 16 taps) periodic DWT.

/// Symmlet-8 scaling (low-pass) filter, solved to double precision from the
/// orthonormality and eight-vanishing-moment conditions.
pub const SYM8_LOWPASS: [f64; 16] = [
    0.001889950332767689,
    -0.0003029205147241331,
    -0.014952258337062199,
    0.0038087520138944896,
    0.04913717967373029,
    -0.027219029917103486,
    -0.0519458381078818,
    0.36444189483617895,
    0.777185751699628,
    0.4813596512590534,
    -0.061273359067811076,
    -0.14329423835127267,
    0.007607487324976609,
    0.03169508781152599,
    -0.0005421323318000107,
    -0.0033824159510050028,
];

/// Quadrature-mirror high-pass partner, `g[t] = (−1)^t h[15 − t]`.
pub fn sym8_highpass() -> [f64; 16] {
    let mut g = [0.0; 16];
    for (t, gt) in g.iter_mut().enumerate() {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        *gt = sign * SYM8_LOWPASS[15 - t];
    }
    g
}

/// Orthonormal two-channel periodic filter bank.
#[derive(Debug, Clone)]
pub struct FilterBank {
    lo: [f64; 16],
    hi: [f64; 16],
}

impl Default for FilterBank {
    fn default() -> Self {
        Self {
            lo: SYM8_LOWPASS,
            hi: sym8_highpass(),
        }
    }
}

impl FilterBank {
    /// One analysis step on `x` (even length `n`): `out = [approx; detail]`.
    pub fn analyze(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let half = n / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for t in 0..16 {
                let v = x[(2 * k + t) % n];
                a += self.lo[t] * v;
                d += self.hi[t] * v;
            }
            out[k] = a;
            out[half + k] = d;
        }
    }

    /// Exact inverse (and adjoint) of [`FilterBank::analyze`].
    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = coeffs.len();
        let half = n / 2;
        out.fill(0.0);
        for k in 0..half {
            let (a, d) = (coeffs[k], coeffs[half + k]);
            for t in 0..16 {
                out[(2 * k + t) % n] += self.lo[t] * a + self.hi[t] * d;
            }
        }
    }
}

/// Multi-level separable 2D transform of a column-major `rows × cols` plane.
///
/// Each level filters the columns then the rows of the current approximation
/// block, leaving the Mallat layout with the coarsest approximation in the
/// top-left `rows/2^J × cols/2^J` corner.
pub fn dwt2_forward(bank: &FilterBank, plane: &mut [f64], rows: usize, cols: usize, levels: usize) {
    let mut buf_in = vec![0.0; rows.max(cols)];
    let mut buf_out = vec![0.0; rows.max(cols)];
    let (mut nr, mut nc) = (rows, cols);
    for _ in 0..levels {
        for c in 0..nc {
            let col = &mut plane[c * rows..c * rows + nr];
            buf_in[..nr].copy_from_slice(col);
            bank.analyze(&buf_in[..nr], &mut buf_out[..nr]);
            col.copy_from_slice(&buf_out[..nr]);
        }
        for r in 0..nr {
            for c in 0..nc {
                buf_in[c] = plane[c * rows + r];
            }
            bank.analyze(&buf_in[..nc], &mut buf_out[..nc]);
            for c in 0..nc {
                plane[c * rows + r] = buf_out[c];
            }
        }
        nr /= 2;
        nc /= 2;
    }
}

/// Inverse of [`dwt2_forward`].
pub fn dwt2_inverse(bank: &FilterBank, plane: &mut [f64], rows: usize, cols: usize, levels: usize) {
    let mut buf_in = vec![0.0; rows.max(cols)];
    let mut buf_out = vec![0.0; rows.max(cols)];
    for level in (0..levels).rev() {
        let (nr, nc) = (rows >> level, cols >> level);
        for r in 0..nr {
            for c in 0..nc {
                buf_in[c] = plane[c * rows + r];
            }
            bank.synthesize(&buf_in[..nc], &mut buf_out[..nc]);
            for c in 0..nc {
                plane[c * rows + r] = buf_out[c];
            }
        }
        for c in 0..nc {
            let col = &mut plane[c * rows..c * rows + nr];
            buf_in[..nr].copy_from_slice(col);
            bank.synthesize(&buf_in[..nr], &mut buf_out[..nr]);
            col.copy_from_slice(&buf_out[..nr]);
        }
    }
}
