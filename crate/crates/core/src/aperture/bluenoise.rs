//! Void-and-cluster binary pattern generation on a torus.

use rand::seq::SliceRandom;
use rand::Rng;

/// Gaussian energy kernel width, in pixels.
pub const SIGMA: f64 = 1.5;

/// Kernel support radius; `exp(-r²/2σ²)` is below 4e-4 past it.
const RADIUS: isize = 6;

/// Cell-centre geometry used for kernel distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    Square,
    /// Hex storage grid: even columns are centred half a row lower than odd
    /// ones, so `(r, c)` touches `(r, c±1)` and `(r+1, c±1)` for even `c`.
    Hex,
}

struct Kernel {
    // (row offset, col offset, weight) already reduced modulo the grid,
    // indexed by origin column parity.
    taps: [Vec<(usize, usize, f64)>; 2],
}

impl Kernel {
    fn new(rows: usize, cols: usize, lattice: Lattice) -> Self {
        let axis = |n: usize| -> Vec<isize> {
            let n = n as isize;
            if 2 * RADIUS < n {
                (-RADIUS..=RADIUS).collect()
            } else {
                // every residue once, measured by its shortest toroidal offset
                (0..n).map(|d| if d > n / 2 { d - n } else { d }).collect()
            }
        };
        let build = |parity: isize| {
            let mut taps = Vec::new();
            for &dr in &axis(rows) {
                for &dc in &axis(cols) {
                    let dy = match lattice {
                        Lattice::Square => dr as f64,
                        Lattice::Hex => {
                            let centre = |c: isize| if c.rem_euclid(2) == 0 { 0.5 } else { 0.0 };
                            dr as f64 + centre(parity + dc) - centre(parity)
                        }
                    };
                    let d2 = dy * dy + (dc * dc) as f64;
                    let w = (-d2 / (2.0 * SIGMA * SIGMA)).exp();
                    taps.push((
                        dr.rem_euclid(rows as isize) as usize,
                        dc.rem_euclid(cols as isize) as usize,
                        w,
                    ));
                }
            }
            taps
        };
        Self {
            taps: [build(0), build(1)],
        }
    }

    fn splat(&self, energy: &mut [f64], rows: usize, cols: usize, at: usize, sign: f64) {
        let (r0, c0) = (at / cols, at % cols);
        for &(dr, dc, w) in &self.taps[c0 % 2] {
            let r = (r0 + dr) % rows;
            let c = (c0 + dc) % cols;
            energy[r * cols + c] += sign * w;
        }
    }
}

/// Places exactly `count` ones on the `allowed` cells of a `rows × cols`
/// torus with void-and-cluster relaxation, measuring distances between cell
/// centres of `lattice`.
///
/// A random seed pattern covering a tenth of the cells is relaxed by moving
/// the tightest-cluster one into the largest void until the move would put
/// the pixel back where it came from. The pattern then grows by filling the
/// largest remaining void until it holds `count` ones. When `count` exceeds
/// half of the allowed cells the zeros are placed this way instead.
pub fn void_and_cluster<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    lattice: Lattice,
    allowed: &[bool],
    count: usize,
    rng: &mut R,
) -> Vec<u8> {
    assert_eq!(allowed.len(), rows * cols);
    let cells: Vec<usize> = (0..rows * cols).filter(|&p| allowed[p]).collect();
    assert!(count <= cells.len(), "count exceeds allowed cells");

    let minority_is_one = 2 * count <= cells.len();
    let minority = if minority_is_one {
        count
    } else {
        cells.len() - count
    };

    // sparse seed pattern, relaxed, then grown one largest void at a time
    let seed_count = minority.min((cells.len() / 10).max(1));
    let mut on = vec![false; rows * cols];
    let mut pool = cells.clone();
    pool.shuffle(rng);
    for &p in &pool[..seed_count] {
        on[p] = true;
    }

    if minority > 0 && minority < cells.len() {
        let kernel = Kernel::new(rows, cols, lattice);
        let mut energy = vec![0.0; rows * cols];
        for &p in &cells {
            if on[p] {
                kernel.splat(&mut energy, rows, cols, p, 1.0);
            }
        }
        relax(
            rows,
            cols,
            &kernel,
            &cells,
            &mut on,
            &mut energy,
            seed_count,
        );
        for _ in seed_count..minority {
            let void = argbest(&cells, |p| !on[p], &energy, |a, b| a < b);
            on[void] = true;
            kernel.splat(&mut energy, rows, cols, void, 1.0);
        }
    }

    let mut bits = vec![0u8; rows * cols];
    for &p in &cells {
        bits[p] = u8::from(on[p] == minority_is_one);
    }
    bits
}

fn relax(
    rows: usize,
    cols: usize,
    kernel: &Kernel,
    cells: &[usize],
    on: &mut [bool],
    energy: &mut [f64],
    minority: usize,
) {
    // VAC converges in far fewer moves; the cap only bounds pathological cycling.
    let max_moves = 64 * minority + 1024;
    for _ in 0..max_moves {
        let cluster = argbest(cells, |p| on[p], energy, |a, b| a > b);
        on[cluster] = false;
        kernel.splat(energy, rows, cols, cluster, -1.0);

        let void = argbest(cells, |p| !on[p], energy, |a, b| a < b);
        on[void] = true;
        kernel.splat(energy, rows, cols, void, 1.0);
        if void == cluster {
            break;
        }
    }
}

fn argbest(
    cells: &[usize],
    keep: impl Fn(usize) -> bool,
    energy: &[f64],
    better: impl Fn(f64, f64) -> bool,
) -> usize {
    let mut best = usize::MAX;
    let mut best_e = 0.0;
    for &p in cells {
        if keep(p) && (best == usize::MAX || better(energy[p], best_e)) {
            best = p;
            best_e = energy[p];
        }
    }
    best
}
