//! Spectral cubes, detector measurements and reconstruction metrics.
//!
//! Every operator in the crate shares one vectorization convention: voxel
//! `(i, j, l)` (row, column, band) lives at `q = l·N·M + j·N + i`. Detector
//! planes use the same column-major layout, `p = j·N + i`, and multishot
//! measurement vectors concatenate the planes snapshot by snapshot.

use serde::Serialize;

use crate::error::{Error, Result};

/// Band centres (nm) of the six-band visible configuration.
pub const SIX_BAND_WAVELENGTHS_NM: [f64; 6] = [450.0, 485.0, 520.0, 554.0, 589.0, 624.0];

/// A normalized `N × M × L` spectral data cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    n_rows: usize,
    n_cols: usize,
    n_bands: usize,
    voxels: Vec<f64>,
    wavelengths: Option<Vec<f64>>,
}

impl SpectralCube {
    pub fn zeros(n_rows: usize, n_cols: usize, n_bands: usize) -> Result<Self> {
        check_dims(n_rows, n_cols, n_bands)?;
        Ok(Self {
            n_rows,
            n_cols,
            n_bands,
            voxels: vec![0.0; n_rows * n_cols * n_bands],
            wavelengths: None,
        })
    }

    /// Builds a cube from `f(i, j, l)`.
    pub fn from_fn(
        n_rows: usize,
        n_cols: usize,
        n_bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(n_rows, n_cols, n_bands)?;
        let mut voxels = Vec::with_capacity(n_rows * n_cols * n_bands);
        for l in 0..n_bands {
            for j in 0..n_cols {
                for i in 0..n_rows {
                    voxels.push(f(i, j, l));
                }
            }
        }
        Self::devectorize(n_rows, n_cols, n_bands, voxels)
    }

    /// Inverse of [`SpectralCube::vectorize`]. Values must be finite and in `[0, 1]`.
    pub fn devectorize(
        n_rows: usize,
        n_cols: usize,
        n_bands: usize,
        voxels: Vec<f64>,
    ) -> Result<Self> {
        check_dims(n_rows, n_cols, n_bands)?;
        let len = n_rows * n_cols * n_bands;
        if voxels.len() != len {
            return Err(Error::mismatch(len, voxels.len()));
        }
        if let Some(q) = voxels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param(
                "voxels",
                format!("value {} at index {q} is outside [0, 1]", voxels[q]),
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            n_bands,
            voxels,
            wavelengths: None,
        })
    }

    /// Divides raw non-negative radiance by its maximum so the peak becomes 1.
    pub fn normalized(n_rows: usize, n_cols: usize, n_bands: usize, raw: Vec<f64>) -> Result<Self> {
        if let Some(v) = raw.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(
                "raw",
                format!("non-finite or negative value {v}"),
            ));
        }
        let peak = raw.iter().copied().fold(0.0, f64::max);
        let scaled = if peak > 0.0 {
            raw.into_iter().map(|v| (v / peak).min(1.0)).collect()
        } else {
            raw
        };
        Self::devectorize(n_rows, n_cols, n_bands, scaled)
    }

    /// Builds an estimate cube, clamping the solver output into `[0, 1]`.
    pub fn from_estimate(n_rows: usize, n_cols: usize, n_bands: usize, f: &[f64]) -> Result<Self> {
        if let Some(v) = f.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("estimate", format!("non-finite value {v}")));
        }
        Self::devectorize(
            n_rows,
            n_cols,
            n_bands,
            f.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        )
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.n_bands {
            return Err(Error::mismatch(self.n_bands, wavelengths.len()));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_rows, self.n_cols, self.n_bands)
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        l * self.n_rows * self.n_cols + j * self.n_rows + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.voxels[self.index(i, j, l)]
    }

    /// The cube as a flat vector in `q = l·N·M + j·N + i` order.
    pub fn vectorize(&self) -> Vec<f64> {
        self.voxels.clone()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.voxels
    }

    /// Band `l` as a column-major `N × M` slice.
    pub fn band(&self, l: usize) -> &[f64] {
        let plane = self.n_rows * self.n_cols;
        &self.voxels[l * plane..(l + 1) * plane]
    }
}

fn check_dims(n_rows: usize, n_cols: usize, n_bands: usize) -> Result<()> {
    if n_rows == 0 || n_cols == 0 || n_bands == 0 {
        return Err(Error::InvalidDimensions(format!(
            "cube dims must be >= 1, got {n_rows}x{n_cols}x{n_bands}"
        )));
    }
    Ok(())
}

/// Detector readouts for `K` snapshots, each `N × (M + L − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    n_shots: usize,
    n_rows: usize,
    n_det_cols: usize,
    values: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn new(n_shots: usize, n_rows: usize, n_det_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_shots == 0 || n_rows == 0 || n_det_cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "measurement dims must be >= 1, got K={n_shots} N={n_rows} Mc={n_det_cols}"
            )));
        }
        let len = n_shots * n_rows * n_det_cols;
        if values.len() != len {
            return Err(Error::mismatch(len, values.len()));
        }
        Ok(Self {
            n_shots,
            n_rows,
            n_det_cols,
            values,
            noise_sigma: 0.0,
            seed: 0,
        })
    }

    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_det_cols(&self) -> usize {
        self.n_det_cols
    }

    /// Pixels per snapshot, `V = N·(M + L − 1)`.
    pub fn plane_len(&self) -> usize {
        self.n_rows * self.n_det_cols
    }

    /// Concatenated vector `y = [y¹; …; yᴷ]`.
    pub fn as_vector(&self) -> &[f64] {
        &self.values
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        let v = self.plane_len();
        &self.values[k * v..(k + 1) * v]
    }

    /// Detector pixel `(i, j)` of snapshot `k`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[k * self.plane_len() + j * self.n_rows + i]
    }
}

/// PSNR (dB) of one band against a reference normalized to peak 1.
///
/// Returns `f64::INFINITY` when the band is reproduced exactly.
pub fn psnr(reference: &SpectralCube, estimate: &SpectralCube, band: usize) -> Result<f64> {
    if reference.dims() != estimate.dims() {
        return Err(Error::mismatch(
            format!("{:?}", reference.dims()),
            format!("{:?}", estimate.dims()),
        ));
    }
    if band >= reference.n_bands() {
        return Err(Error::param(
            "band",
            format!("{band} out of range for {} bands", reference.n_bands()),
        ));
    }
    let (a, b) = (reference.band(band), estimate.band(band));
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Per-band PSNR for every band of the cube.
pub fn band_psnrs(reference: &SpectralCube, estimate: &SpectralCube) -> Result<Vec<f64>> {
    (0..reference.n_bands())
        .map(|l| psnr(reference, estimate, l))
        .collect()
}

/// Arithmetic mean of per-band PSNRs.
pub fn mean_psnr(band_psnr: &[f64]) -> f64 {
    band_psnr.iter().sum::<f64>() / band_psnr.len() as f64
}

/// Outcome of one reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct ReconReport {
    pub band_psnr_db: Vec<f64>,
    pub mean_psnr_db: f64,
    /// Set when the estimate equals the ground truth and PSNR is infinite.
    pub exact: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub tau: f64,
    pub wall_time_secs: f64,
}

impl ReconReport {
    pub fn new(
        band_psnr_db: Vec<f64>,
        iterations: usize,
        final_objective: f64,
        tau: f64,
        wall_time_secs: f64,
    ) -> Self {
        let exact = band_psnr_db.iter().any(|p| p.is_infinite());
        Self {
            mean_psnr_db: mean_psnr(&band_psnr_db),
            band_psnr_db,
            exact,
            iterations: iterations.max(1),
            final_objective,
            tau,
            wall_time_secs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(n: usize, m: usize, l: usize, seed: u64) -> SpectralCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralCube::from_fn(n, m, l, |_, _, _| rng.gen::<f64>()).unwrap()
    }

    #[test]
    fn single_voxel_vectorizes_to_itself() {
        let c = SpectralCube::from_fn(1, 1, 1, |_, _, _| 0.7).unwrap();
        assert_eq!(c.vectorize(), vec![0.7]);
    }

    #[test]
    fn index_formula_is_column_major_within_band() {
        let c = SpectralCube::from_fn(2, 2, 1, |i, j, _| if (i, j) == (1, 0) { 1.0 } else { 0.0 })
            .unwrap();
        assert_eq!(c.vectorize(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(SpectralCube::zeros(0, 3, 2).is_err());
        assert!(SpectralCube::zeros(3, 3, 0).is_err());
    }

    #[test]
    fn out_of_range_voxel_rejected() {
        assert!(SpectralCube::devectorize(1, 1, 2, vec![0.5, 1.5]).is_err());
        assert!(SpectralCube::devectorize(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn normalization_scales_peak_to_one() {
        let c = SpectralCube::normalized(1, 2, 1, vec![2.0, 4.0]).unwrap();
        assert_eq!(c.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn identical_cubes_give_infinite_psnr() {
        let c = random_cube(3, 3, 2, 1);
        assert!(psnr(&c, &c, 0).unwrap().is_infinite());
        let report = ReconReport::new(band_psnrs(&c, &c).unwrap(), 1, 0.0, 1.0, 0.0);
        assert!(report.exact);
    }

    #[test]
    fn constant_error_psnr_closed_form() {
        let r = SpectralCube::from_fn(4, 4, 1, |_, _, _| 1.0).unwrap();
        let e = SpectralCube::from_fn(4, 4, 1, |_, _, _| 0.5).unwrap();
        let p = psnr(&r, &e, 0).unwrap();
        assert!((p - 6.020599913279624).abs() < 1e-12, "{p}");
    }

    #[test]
    fn psnr_matches_two_loop_mse() {
        let r = random_cube(5, 7, 3, 2);
        let e = random_cube(5, 7, 3, 3);
        for l in 0..3 {
            let mut se = 0.0;
            for i in 0..5 {
                for j in 0..7 {
                    let d = r.get(i, j, l) - e.get(i, j, l);
                    se += d * d;
                }
            }
            let oracle = 10.0 * (35.0 / se).log10();
            let got = psnr(&r, &e, l).unwrap();
            assert!(((got - oracle) / oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = random_cube(2, 2, 1, 0);
        let b = random_cube(2, 3, 1, 0);
        assert!(matches!(
            psnr(&a, &b, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn measurement_vector_length() {
        let m = MeasurementSet::new(2, 3, 5, vec![0.0; 30]).unwrap();
        assert_eq!(m.as_vector().len(), 2 * 3 * 5);
        assert!(MeasurementSet::new(2, 3, 5, vec![0.0; 29]).is_err());
    }

    proptest! {
        #[test]
        fn vectorize_roundtrip(seed in any::<u64>()) {
            let c = random_cube(3, 4, 2, seed);
            let back = SpectralCube::devectorize(3, 4, 2, c.vectorize()).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn psnr_symmetric_in_error_sign(seed in any::<u64>(), e in 0.001f64..0.25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = SpectralCube::from_fn(4, 3, 1, |_, _, _| rng.gen_range(0.25..0.75)).unwrap();
            let plus = SpectralCube::from_fn(4, 3, 1, |i, j, l| r.get(i, j, l) + e).unwrap();
            let minus = SpectralCube::from_fn(4, 3, 1, |i, j, l| r.get(i, j, l) - e).unwrap();
            let a = psnr(&r, &plus, 0).unwrap();
            let b = psnr(&r, &minus, 0).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
