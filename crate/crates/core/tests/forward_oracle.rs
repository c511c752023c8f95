mod common;

use common::{random_vec, rel_err};
use hexcassi::aperture::{gen_bluenoise_hex, gen_random_square, Aperture, ApertureSet, Family};
use hexcassi::cube::SpectralCube;
use hexcassi::forward::{measure, ForwardOperator, NoiseModel};
use hexcassi::hex::{hex_to_grey, modulation_masks, GreyAperture};
use hexcassi::operator::{dot, LinearOperator};
use nalgebra::DVector;

fn random_masks(n: usize, m: usize, k: usize, seed: u64) -> Vec<GreyAperture> {
    (0..k)
        .map(|s| {
            GreyAperture::from_square(&gen_random_square(n, m, 0.5, seed * 10 + s as u64).unwrap())
        })
        .collect()
}

/// Detector readout by the shear-and-sum definition, one pixel at a time.
fn direct_readout(f: &[f64], masks: &[GreyAperture], n: usize, m: usize, l: usize) -> Vec<f64> {
    let w = m + l - 1;
    let mut y = vec![0.0; masks.len() * n * w];
    for (k, t) in masks.iter().enumerate() {
        for i in 0..n {
            for j in 0..w {
                let mut acc = 0.0;
                for band in 0..l {
                    if j >= band && j - band < m {
                        let src = j - band;
                        acc += f[band * n * m + src * n + i] * t.get(i, src);
                    }
                }
                y[k * n * w + j * n + i] = acc;
            }
        }
    }
    y
}

#[test]
fn implicit_operator_matches_direct_sum() {
    for &(n, m, l, k) in &[(6, 6, 3, 2), (5, 7, 4, 3), (8, 8, 1, 1)] {
        let masks = random_masks(n, m, k, 3);
        let op = ForwardOperator::new(l, &masks).unwrap();
        for seed in 0..5 {
            let f = random_vec(n * m * l, seed);
            let oracle = direct_readout(&f, &masks, n, m, l);
            assert!(rel_err(&op.apply_h(&f).unwrap(), &oracle) < 1e-14);
        }
    }
}

#[test]
fn dense_matrix_has_band_diagonal_structure() {
    let (n, m, l, k) = (6, 6, 3, 2);
    let masks = random_masks(n, m, k, 11);
    let op = ForwardOperator::new(l, &masks).unwrap();
    let h = op.materialize_h().unwrap();
    assert_eq!(h.shape(), (k * n * (m + l - 1), n * m * l));
    for seed in 0..50 {
        let f = random_vec(n * m * l, seed);
        let dense = &h * DVector::from_column_slice(&f);
        assert!(rel_err(dense.as_slice(), &op.apply_h(&f).unwrap()) <= 1e-12);
    }
    let v = n * (m + l - 1);
    let mut nonzeros = 0;
    for row in 0..h.nrows() {
        let cols: Vec<usize> = (0..h.ncols()).filter(|&c| h[(row, c)] != 0.0).collect();
        assert!(cols.len() <= l);
        nonzeros += cols.len();
        // each nonzero sits on the diagonal of its band block
        let det = row % v;
        for c in cols {
            let band = c / (n * m);
            assert_eq!(c % (n * m) + band * n, det);
        }
    }
    let ones: usize = masks
        .iter()
        .map(|t| t.entries().iter().filter(|&&e| e != 0.0).count())
        .sum();
    assert_eq!(nonzeros, l * ones);
}

#[test]
fn hex_grey_entries_stay_in_unit_interval() {
    let hex = gen_bluenoise_hex(6, 6, 0.5, 2).unwrap();
    let grey = hex_to_grey(&hex, 0.3).unwrap();
    let h = ForwardOperator::new(3, &[grey])
        .unwrap()
        .materialize_h()
        .unwrap();
    assert!(h.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!(h.iter().any(|&v| v > 0.0 && v < 1.0));
}

#[test]
fn adjoint_identity_for_every_family() {
    let (n, m, l) = (8, 8, 3);
    for family in Family::ALL {
        let set = ApertureSet::independent(family, n, m, 2, 0.5, 4).unwrap();
        let masks = modulation_masks(&set, 0.2).unwrap();
        let op = ForwardOperator::new(l, &masks).unwrap();
        for seed in 0..20 {
            let f = random_vec(op.n_in(), seed);
            let y = random_vec(op.n_out(), seed + 100);
            let lhs = dot(&op.apply_h(&f).unwrap(), &y);
            let rhs = dot(&f, &op.apply_ht(&y).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{family}");
        }
    }
}

#[test]
fn two_band_hand_example() {
    let cube = SpectralCube::from_fn(2, 2, 2, |i, j, l| match (i, j, l) {
        (0, 0, 0) | (1, 1, 1) => 1.0,
        _ => 0.0,
    })
    .unwrap();
    let ones = GreyAperture::new(2, 2, vec![1.0; 4], 0.0).unwrap();
    let op = ForwardOperator::new(2, &[ones]).unwrap();
    let y = measure(&cube, &op, NoiseModel::None).unwrap();
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..3).map(|j| y.get(0, i, j)).collect())
        .collect();
    assert_eq!(rows, vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
}

#[test]
fn energy_bound_holds() {
    let (n, m, l) = (16, 16, 6);
    let set = ApertureSet::independent(Family::BlueNoiseHex, n, m, 2, 0.5, 1).unwrap();
    let op = ForwardOperator::new(l, &modulation_masks(&set, 0.4).unwrap()).unwrap();
    let f: Vec<f64> = random_vec(n * m * l, 5).iter().map(|v| v.abs()).collect();
    let max_f = f.iter().copied().fold(0.0, f64::max);
    let y = op.apply_h(&f).unwrap();
    assert!(y.iter().all(|&v| v <= l as f64 * max_f + 1e-12));
    assert!(matches!(set.apertures[0], Aperture::Hex(_)));
}
