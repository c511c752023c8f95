use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::Aperture;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlueNoiseScore {
    /// Periodogram energy within half the principal frequency, over all AC energy.
    pub low_freq_energy_ratio: f64,
    /// Mean toroidal distance from each one to its nearest other one.
    pub mean_nn_distance: f64,
}

/// Spectral and spatial blue-noise diagnostics for a binary aperture.
pub fn bluenoise_score(aperture: &Aperture) -> Result<BlueNoiseScore> {
    let (rows, cols) = aperture.grid_dims();
    let valid = aperture.valid_mask().iter().filter(|&&v| v).count();
    score_grid(rows, cols, aperture.grid_bits(), valid)
}

/// Diagnostics on a raw row-major binary grid; `g` is measured over `n_valid` cells.
pub fn score_grid(rows: usize, cols: usize, bits: &[u8], n_valid: usize) -> Result<BlueNoiseScore> {
    let ones = bits.iter().filter(|&&b| b == 1).count();
    if ones == 0 || ones == n_valid {
        return Err(Error::Degenerate(
            "all-zero or all-one mask has no AC spectrum".into(),
        ));
    }
    let g = ones as f64 / n_valid as f64;
    let principal = if g <= 0.5 { g.sqrt() } else { (1.0 - g).sqrt() };
    let cutoff = 0.5 * principal;

    let power = periodogram(rows, cols, bits);
    let (mut low, mut total) = (0.0, 0.0);
    for u in 0..rows {
        for v in 0..cols {
            if u == 0 && v == 0 {
                continue;
            }
            let fu = signed_freq(u, rows);
            let fv = signed_freq(v, cols);
            let p = power[u * cols + v];
            total += p;
            if (fu * fu + fv * fv).sqrt() < cutoff {
                low += p;
            }
        }
    }

    Ok(BlueNoiseScore {
        low_freq_energy_ratio: low / total,
        mean_nn_distance: mean_nn_distance(rows, cols, bits)?,
    })
}

fn signed_freq(k: usize, n: usize) -> f64 {
    let k = if 2 * k >= n {
        k as f64 - n as f64
    } else {
        k as f64
    };
    k / n as f64
}

fn periodogram(rows: usize, cols: usize, bits: &[u8]) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut data: Vec<Complex<f64>> = bits.iter().map(|&b| Complex::new(b as f64, 0.0)).collect();
    let row_fft = planner.plan_fft_forward(cols);
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(rows);
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    let scale = (rows * cols) as f64;
    data.iter().map(|z| z.norm_sqr() / scale).collect()
}

/// Ring search outward from each one; stops once the ring's minimum possible
/// distance exceeds the best found.
fn mean_nn_distance(rows: usize, cols: usize, bits: &[u8]) -> Result<f64> {
    let points: Vec<(usize, usize)> = (0..rows * cols)
        .filter(|&p| bits[p] == 1)
        .map(|p| (p / cols, p % cols))
        .collect();
    if points.len() < 2 {
        return Err(Error::Degenerate(
            "nearest-neighbour distance needs at least two ones".into(),
        ));
    }
    let max_ring = rows.max(cols) / 2 + 1;
    let mut sum = 0.0;
    for &(r0, c0) in &points {
        let mut best = f64::INFINITY;
        for ring in 1..=max_ring {
            if ring as f64 > best {
                break;
            }
            let ring = ring as isize;
            for dr in -ring..=ring {
                for dc in -ring..=ring {
                    if dr.abs() != ring && dc.abs() != ring {
                        continue;
                    }
                    let r = (r0 as isize + dr).rem_euclid(rows as isize) as usize;
                    let c = (c0 as isize + dc).rem_euclid(cols as isize) as usize;
                    if (r, c) == (r0, c0) || bits[r * cols + c] != 1 {
                        continue;
                    }
                    let d = toroidal(r0, r, rows).hypot(toroidal(c0, c, cols));
                    best = best.min(d);
                }
            }
        }
        sum += best;
    }
    Ok(sum / points.len() as f64)
}

fn toroidal(a: usize, b: usize, n: usize) -> f64 {
    let d = a.abs_diff(b);
    d.min(n - d) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aperture::{gen_bluenoise_square, gen_random_square, SquareAperture};

    fn sq(a: SquareAperture) -> Aperture {
        Aperture::Square(a)
    }

    #[test]
    fn single_point_is_degenerate() {
        let mut bits = vec![0u8; 64];
        bits[4 * 8 + 4] = 1;
        let a = sq(SquareAperture::from_bits(8, 8, bits).unwrap());
        assert!(matches!(bluenoise_score(&a), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_masks_are_degenerate() {
        for v in [0u8, 1] {
            let a = sq(SquareAperture::from_bits(8, 8, vec![v; 64]).unwrap());
            assert!(bluenoise_score(&a).is_err());
        }
    }

    #[test]
    fn checkerboard_neighbours_are_diagonal() {
        let bits = (0..64).map(|p| ((p / 8 + p % 8) % 2) as u8).collect();
        let a = sq(SquareAperture::from_bits(8, 8, bits).unwrap());
        let s = bluenoise_score(&a).unwrap();
        assert!((s.mean_nn_distance - std::f64::consts::SQRT_2).abs() < 1e-9);
        // all AC energy sits at (1/2, 1/2), far outside the low band
        assert!(s.low_freq_energy_ratio < 1e-12);
    }

    #[test]
    fn nn_search_matches_brute_force() {
        let a = gen_random_square(20, 17, 0.1, 3).unwrap();
        let pts: Vec<(usize, usize)> = (0..20 * 17)
            .filter(|&p| a.bits()[p] == 1)
            .map(|p| (p / 17, p % 17))
            .collect();
        let mut sum = 0.0;
        for (i, &(r0, c0)) in pts.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, &(r, c)) in pts.iter().enumerate() {
                if i != j {
                    best = best.min(toroidal(r0, r, 20).hypot(toroidal(c0, c, 17)));
                }
            }
            sum += best;
        }
        let got = mean_nn_distance(20, 17, a.bits()).unwrap();
        assert!((got - sum / pts.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn bluenoise_suppresses_low_frequencies_at_half() {
        let (mut bn, mut rnd) = (0.0, 0.0);
        for seed in 0..10 {
            bn += bluenoise_score(&sq(gen_bluenoise_square(64, 64, 0.5, seed).unwrap()))
                .unwrap()
                .low_freq_energy_ratio;
            rnd += bluenoise_score(&sq(gen_random_square(64, 64, 0.5, seed).unwrap()))
                .unwrap()
                .low_freq_energy_ratio;
        }
        assert!(bn < 0.5 * rnd, "bn {bn} vs random {rnd}");
    }

    #[test]
    fn bluenoise_spreads_points_apart() {
        let (mut bn, mut rnd) = (0.0, 0.0);
        for seed in 0..10 {
            bn += bluenoise_score(&sq(gen_bluenoise_square(64, 64, 0.5, seed).unwrap()))
                .unwrap()
                .mean_nn_distance;
            rnd += bluenoise_score(&sq(gen_random_square(64, 64, 0.5, seed).unwrap()))
                .unwrap()
                .mean_nn_distance;
        }
        assert!(bn > rnd, "bn {bn} vs random {rnd}");
    }

    #[test]
    fn bluenoise_beats_random_pairwise_at_quarter() {
        let wins = (0..10)
            .filter(|&seed| {
                let b = bluenoise_score(&sq(gen_bluenoise_square(64, 64, 0.25, seed).unwrap()))
                    .unwrap();
                let r = bluenoise_score(&sq(gen_random_square(64, 64, 0.25, seed + 100).unwrap()))
                    .unwrap();
                b.low_freq_energy_ratio < r.low_freq_energy_ratio
            })
            .count();
        assert!(wins >= 9, "{wins}/10");
    }
}
