#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Horizontal depth of the hexagon points, in pixel widths.
pub const SLANT: f64 = 0.288_675_134_594_812_9; // 1 / (2√3)

/// Hex grid cell `(row, col)` containing the point `(x, y)`, with `x` along
/// columns and `y` along rows, both in pixel units.
///
/// Column `c` owns the strip `[c, c+1−SLANT]`; in `[c+1−SLANT, c+1]` its
/// hexagons taper to a point and the gaps belong to column `c+1`.
pub fn hex_cell_at(x: f64, y: f64) -> (usize, usize) {
    let c = x.floor();
    let cell_in = |col: f64| -> (usize, f64) {
        if (col as i64) % 2 == 0 {
            let r = y.floor();
            (r as usize, r + 0.5)
        } else {
            let e = (y + 0.5).floor();
            (e as usize, e)
        }
    };
    let t = x - (c + 1.0 - SLANT);
    let (row, centre) = cell_in(c);
    if t <= 0.0 || (y - centre).abs() <= 0.5 * (1.0 - t / SLANT) {
        (row, c as usize)
    } else {
        (cell_in(c + 1.0).0, c as usize + 1)
    }
}

/// Fraction of pixel `(r, c)` (shifted right by `a`) covered by each hex
/// cell, estimated from `side²` jittered samples. Indexed `[row][col]` on the
/// `(rows+1) × (cols+1)` grid.
pub fn pixel_overlap(
    r: usize,
    c: usize,
    a: f64,
    rows: usize,
    cols: usize,
    side: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; cols + 1]; rows + 1];
    let step = 1.0 / side as f64;
    for u in 0..side {
        for v in 0..side {
            let x = c as f64 + a + (u as f64 + rng.gen::<f64>()) * step;
            let y = r as f64 + (v as f64 + rng.gen::<f64>()) * step;
            let (hr, hc) = hex_cell_at(x, y);
            counts[hr][hc] += 1;
        }
    }
    let total = (side * side) as f64;
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|n| n as f64 / total).collect())
        .collect()
}

/// One periodic analysis level of a two-channel bank as an `n × n` matrix.
pub fn analysis_matrix(lo: &[f64], n: usize) -> DMatrix<f64> {
    let taps = lo.len();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        for t in 0..taps {
            let hi = if t % 2 == 0 { 1.0 } else { -1.0 } * lo[taps - 1 - t];
            a[(k, (2 * k + t) % n)] += lo[t];
            a[(n / 2 + k, (2 * k + t) % n)] += hi;
        }
    }
    a
}

/// Orthonormal DCT-II with row `s` the frequency.
pub fn dct2(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |s, l| {
        let w = if s == 0 {
            1.0 / n as f64
        } else {
            2.0 / n as f64
        };
        w.sqrt() * (std::f64::consts::PI * s as f64 * (l as f64 + 0.5) / n as f64).cos()
    })
}

pub fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// FISTA on `½‖y − Ax‖² + τ‖x‖₁`, run for a fixed number of iterations.
pub fn fista(a: &DMatrix<f64>, y: &[f64], tau: f64, iters: usize) -> Vec<f64> {
    let lip = (a.transpose() * a).symmetric_eigenvalues().max();
    let step = 1.0 / lip;
    let yv = nalgebra::DVector::from_column_slice(y);
    let n = a.ncols();
    let mut x = nalgebra::DVector::zeros(n);
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let grad = a.transpose() * (a * &z - &yv);
        let w = &z - grad * step;
        let x_new = w.map(|v| v.signum() * (v.abs() - tau * step).max(0.0));
        let t_new = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
        x = x_new;
        t = t_new;
    }
    x.as_slice().to_vec()
}
