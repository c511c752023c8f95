//! Binary coded apertures on square and hexagonal lattices.
//!
//! Four families are supported: Bernoulli-random and blue-noise patterns on
//! the square detector lattice, and the same two on a hexagonal lattice. A
//! hexagonal aperture for an `N × M` target lives on an `(N+1) × (M+1)` grid
//! whose columns are hexagon columns: odd columns (1-based) hold `N` elements
//! and even columns hold `N + 1`, shifted down by half an element. The last
//! cell of every odd column is therefore invalid and always zero.

pub mod bluenoise;
mod diagnostics;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use bluenoise::Lattice;
pub use diagnostics::{bluenoise_score, BlueNoiseScore};

/// Aperture family, with the byte tag used by the aperture file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    #[serde(rename = "rand-sq")]
    RandomSquare,
    #[serde(rename = "bn-sq")]
    BlueNoiseSquare,
    #[serde(rename = "rand-hex")]
    RandomHex,
    #[serde(rename = "bn-hex")]
    BlueNoiseHex,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::RandomSquare,
        Family::BlueNoiseSquare,
        Family::RandomHex,
        Family::BlueNoiseHex,
    ];

    pub fn code(self) -> u8 {
        match self {
            Family::RandomSquare => 0,
            Family::BlueNoiseSquare => 1,
            Family::RandomHex => 2,
            Family::BlueNoiseHex => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn is_hex(self) -> bool {
        matches!(self, Family::RandomHex | Family::BlueNoiseHex)
    }

    pub fn is_blue_noise(self) -> bool {
        matches!(self, Family::BlueNoiseSquare | Family::BlueNoiseHex)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomSquare => "rand-sq",
            Family::BlueNoiseSquare => "bn-sq",
            Family::RandomHex => "rand-hex",
            Family::BlueNoiseHex => "bn-hex",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param("family", format!("unknown family `{s}`")))
    }
}

/// Binary mask on the square lattice, row-major, `1` = pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareAperture {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl SquareAperture {
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!("{rows}x{cols} aperture")));
        }
        if bits.len() != rows * cols {
            return Err(Error::mismatch(rows * cols, bits.len()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::param("bits", "entries must be 0 or 1"));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.bits[r * self.cols + c]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn transmittance(&self) -> f64 {
        self.ones() as f64 / self.bits.len() as f64
    }

    /// Entries as reals, row-major.
    pub fn to_real(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }
}

/// Binary hexagonal-lattice mask for an `N × M` target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HexAperture {
    n_rows: usize,
    n_cols: usize,
    // (N+1) x (M+1), row-major
    bits: Vec<u8>,
}

impl HexAperture {
    /// Builds from a full `(N+1) × (M+1)` grid; invalid cells must be zero.
    pub fn from_grid(n_rows: usize, n_cols: usize, bits: Vec<u8>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{n_rows}x{n_cols} hex aperture"
            )));
        }
        let (gr, gc) = (n_rows + 1, n_cols + 1);
        if bits.len() != gr * gc {
            return Err(Error::mismatch(gr * gc, bits.len()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::param("bits", "entries must be 0 or 1"));
        }
        let hex = Self {
            n_rows,
            n_cols,
            bits,
        };
        for r in 0..gr {
            for c in 0..gc {
                if !hex.is_valid(r, c) && hex.get(r, c) != 0 {
                    return Err(Error::param(
                        "bits",
                        format!("invalid hex cell ({r}, {c}) is set"),
                    ));
                }
            }
        }
        Ok(hex)
    }

    /// Target rows `N`; the grid has `N + 1`.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Target columns `M`; the grid has `M + 1`.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn grid_rows(&self) -> usize {
        self.n_rows + 1
    }

    pub fn grid_cols(&self) -> usize {
        self.n_cols + 1
    }

    /// Odd 1-based columns (even 0-based `c`) lose their last element.
    #[inline]
    pub fn is_valid(&self, r: usize, c: usize) -> bool {
        hex_cell_valid(self.n_rows, r, c)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.bits[r * self.grid_cols() + c]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        hex_valid_mask(self.n_rows, self.n_cols)
    }

    pub fn valid_count(&self) -> usize {
        hex_valid_count(self.n_rows, self.n_cols)
    }

    pub fn invalid_count(&self) -> usize {
        self.grid_rows() * self.grid_cols() - self.valid_count()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Fraction of valid cells that pass.
    pub fn transmittance(&self) -> f64 {
        self.ones() as f64 / self.valid_count() as f64
    }
}

#[inline]
pub(crate) fn hex_cell_valid(n_rows: usize, r: usize, c: usize) -> bool {
    c % 2 == 1 || r < n_rows
}

pub(crate) fn hex_valid_mask(n_rows: usize, n_cols: usize) -> Vec<bool> {
    let (gr, gc) = (n_rows + 1, n_cols + 1);
    (0..gr * gc)
        .map(|p| hex_cell_valid(n_rows, p / gc, p % gc))
        .collect()
}

pub(crate) fn hex_valid_count(n_rows: usize, n_cols: usize) -> usize {
    let gc = n_cols + 1;
    (n_rows + 1) * gc - gc.div_ceil(2)
}

/// One member of an [`ApertureSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aperture {
    Square(SquareAperture),
    Hex(HexAperture),
}

impl Aperture {
    /// Rows and columns of the underlying binary grid.
    pub fn grid_dims(&self) -> (usize, usize) {
        match self {
            Aperture::Square(a) => (a.rows(), a.cols()),
            Aperture::Hex(h) => (h.grid_rows(), h.grid_cols()),
        }
    }

    pub fn grid_bits(&self) -> &[u8] {
        match self {
            Aperture::Square(a) => a.bits(),
            Aperture::Hex(h) => h.bits(),
        }
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        match self {
            Aperture::Square(a) => vec![true; a.rows() * a.cols()],
            Aperture::Hex(h) => h.valid_mask(),
        }
    }

    pub fn transmittance(&self) -> f64 {
        match self {
            Aperture::Square(a) => a.transmittance(),
            Aperture::Hex(h) => h.transmittance(),
        }
    }

    pub fn as_square(&self) -> Option<&SquareAperture> {
        match self {
            Aperture::Square(a) => Some(a),
            Aperture::Hex(_) => None,
        }
    }

    pub fn as_hex(&self) -> Option<&HexAperture> {
        match self {
            Aperture::Hex(h) => Some(h),
            Aperture::Square(_) => None,
        }
    }
}

/// `K` same-family apertures, one per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureSet {
    pub family: Family,
    pub n_rows: usize,
    pub n_cols: usize,
    pub apertures: Vec<Aperture>,
    /// Requested transmittance.
    pub g: f64,
    pub complementary: bool,
    pub seed: u64,
}

impl ApertureSet {
    pub fn len(&self) -> usize {
        self.apertures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apertures.is_empty()
    }

    /// True when every valid cell passes in exactly one aperture.
    pub fn is_partition(&self) -> bool {
        let Some(first) = self.apertures.first() else {
            return false;
        };
        let valid = first.valid_mask();
        (0..valid.len()).all(|p| {
            let hits: u32 = self.apertures.iter().map(|a| a.grid_bits()[p] as u32).sum();
            if valid[p] {
                hits == 1
            } else {
                hits == 0
            }
        })
    }

    /// `K` statistically independent apertures at transmittance `g`.
    pub fn independent(
        family: Family,
        n_rows: usize,
        n_cols: usize,
        k: usize,
        g: f64,
        seed: u64,
    ) -> Result<Self> {
        check_g(g)?;
        if k == 0 {
            return Err(Error::param("k", "need at least one snapshot"));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let apertures = (0..k)
            .map(|_| {
                let s: u64 = master.gen();
                Ok(match family {
                    Family::RandomSquare => {
                        Aperture::Square(gen_random_square(n_rows, n_cols, g, s)?)
                    }
                    Family::BlueNoiseSquare => {
                        Aperture::Square(gen_bluenoise_square(n_rows, n_cols, g, s)?)
                    }
                    Family::RandomHex => Aperture::Hex(gen_random_hex(n_rows, n_cols, g, s)?),
                    Family::BlueNoiseHex => Aperture::Hex(gen_bluenoise_hex(n_rows, n_cols, g, s)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            n_rows,
            n_cols,
            apertures,
            g,
            complementary: false,
            seed,
        })
    }
}

fn check_g(g: f64) -> Result<()> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::param(
            "g",
            format!("transmittance must lie in (0, 1), got {g}"),
        ));
    }
    Ok(())
}

fn check_dims(n_rows: usize, n_cols: usize) -> Result<()> {
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{n_rows}x{n_cols} aperture"
        )));
    }
    Ok(())
}

/// I.i.d. Bernoulli(`g`) square aperture.
pub fn gen_random_square(
    n_rows: usize,
    n_cols: usize,
    g: f64,
    seed: u64,
) -> Result<SquareAperture> {
    check_g(g)?;
    check_dims(n_rows, n_cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..n_rows * n_cols)
        .map(|_| u8::from(rng.gen_bool(g)))
        .collect();
    SquareAperture::from_bits(n_rows, n_cols, bits)
}

/// Blue-noise square aperture with exactly `round(g·N·M)` ones.
pub fn gen_bluenoise_square(
    n_rows: usize,
    n_cols: usize,
    g: f64,
    seed: u64,
) -> Result<SquareAperture> {
    check_g(g)?;
    check_dims(n_rows, n_cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let allowed = vec![true; n_rows * n_cols];
    let count = (g * (n_rows * n_cols) as f64).round() as usize;
    let bits =
        bluenoise::void_and_cluster(n_rows, n_cols, Lattice::Square, &allowed, count, &mut rng);
    SquareAperture::from_bits(n_rows, n_cols, bits)
}

/// I.i.d. Bernoulli(`g`) hexagonal aperture over the valid cells.
pub fn gen_random_hex(n_rows: usize, n_cols: usize, g: f64, seed: u64) -> Result<HexAperture> {
    check_g(g)?;
    check_dims(n_rows, n_cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = hex_valid_mask(n_rows, n_cols)
        .into_iter()
        .map(|valid| u8::from(valid && rng.gen_bool(g)))
        .collect();
    HexAperture::from_grid(n_rows, n_cols, bits)
}

/// Blue-noise hexagonal aperture.
///
/// The `(N+1) × (M+1)` square blue-noise pattern is relaxed with the
/// withdrawn cells (last row of odd 1-based columns) already excluded, so the
/// valid cells carry exactly `round(g·#valid)` ones. The columns are then read
/// as hexagon columns.
pub fn gen_bluenoise_hex(n_rows: usize, n_cols: usize, g: f64, seed: u64) -> Result<HexAperture> {
    gen_bluenoise_hex_on(Lattice::Square, n_rows, n_cols, g, seed)
}

/// [`gen_bluenoise_hex`] with a choice of relaxation metric. `Lattice::Hex`
/// measures distances between true hexagon centres instead of storage cells.
pub fn gen_bluenoise_hex_on(
    lattice: Lattice,
    n_rows: usize,
    n_cols: usize,
    g: f64,
    seed: u64,
) -> Result<HexAperture> {
    check_g(g)?;
    check_dims(n_rows, n_cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valid = hex_valid_mask(n_rows, n_cols);
    let count = (g * hex_valid_count(n_rows, n_cols) as f64).round() as usize;
    let bits =
        bluenoise::void_and_cluster(n_rows + 1, n_cols + 1, lattice, &valid, count, &mut rng);
    HexAperture::from_grid(n_rows, n_cols, bits)
}

/// `K` complementary apertures at `g = 1/K`: every valid cell passes in
/// exactly one snapshot.
///
/// Random families assign each cell to a uniformly drawn snapshot. Blue-noise
/// families stack: shot `k` is a blue-noise pattern relaxed over the cells not
/// yet taken by shots `0..k`, and the last shot takes the remainder. The
/// stacking is inherently sequential.
pub fn gen_complementary_set(
    family: Family,
    n_rows: usize,
    n_cols: usize,
    k: usize,
    seed: u64,
) -> Result<ApertureSet> {
    if k < 2 {
        return Err(Error::param(
            "k",
            format!("complementary sets need K >= 2, got {k}"),
        ));
    }
    check_dims(n_rows, n_cols)?;
    let (gr, gc) = if family.is_hex() {
        (n_rows + 1, n_cols + 1)
    } else {
        (n_rows, n_cols)
    };
    let valid = if family.is_hex() {
        hex_valid_mask(n_rows, n_cols)
    } else {
        vec![true; gr * gc]
    };
    let n_valid = valid.iter().filter(|&&v| v).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut owner = vec![usize::MAX; gr * gc];
    if family.is_blue_noise() {
        let mut free = valid.clone();
        for shot in 0..k - 1 {
            // spread the n_valid mod K leftover cells over the first shots
            let count = n_valid / k + usize::from(shot < n_valid % k);
            let bits = bluenoise::void_and_cluster(gr, gc, Lattice::Square, &free, count, &mut rng);
            for p in 0..gr * gc {
                if bits[p] == 1 {
                    owner[p] = shot;
                    free[p] = false;
                }
            }
        }
        for p in 0..gr * gc {
            if free[p] {
                owner[p] = k - 1;
            }
        }
    } else {
        for p in 0..gr * gc {
            if valid[p] {
                owner[p] = rng.gen_range(0..k);
            }
        }
    }

    let apertures = (0..k)
        .map(|shot| {
            let bits = owner.iter().map(|&o| u8::from(o == shot)).collect();
            Ok(if family.is_hex() {
                Aperture::Hex(HexAperture::from_grid(n_rows, n_cols, bits)?)
            } else {
                Aperture::Square(SquareAperture::from_bits(n_rows, n_cols, bits)?)
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ApertureSet {
        family,
        n_rows,
        n_cols,
        apertures,
        g: 1.0 / k as f64,
        complementary: true,
        seed,
    })
}

/// Complementary set for an explicit `(K, g)` request; rejects `K·g ≠ 1`.
pub fn gen_complementary_set_checked(
    family: Family,
    n_rows: usize,
    n_cols: usize,
    k: usize,
    g: f64,
    seed: u64,
) -> Result<ApertureSet> {
    check_g(g)?;
    if ((k as f64) * g - 1.0).abs() > 1e-9 {
        return Err(Error::param(
            "g",
            format!("complementary sets require K·g = 1, got K={k}, g={g}"),
        ));
    }
    gen_complementary_set(family, n_rows, n_cols, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_square_rejects_degenerate_g() {
        assert!(gen_random_square(4, 4, 0.0, 1).is_err());
        assert!(gen_random_square(4, 4, 1.0, 1).is_err());
        assert!(gen_bluenoise_square(4, 4, 1.0, 1).is_err());
        assert!(gen_bluenoise_hex(4, 4, 0.0, 1).is_err());
    }

    #[test]
    fn random_square_deterministic() {
        let a = gen_random_square(16, 16, 0.5, 42).unwrap();
        let b = gen_random_square(16, 16, 0.5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_random_square(16, 16, 0.5, 43).unwrap());
    }

    #[test]
    fn random_square_transmittance_256() {
        // Binomial(65536, 0.5): sd = 128, so [0.48, 0.52] is a ±10 sd window
        // (failure probability < 1e-22).
        for seed in 0..3 {
            let t = gen_random_square(256, 256, 0.5, seed)
                .unwrap()
                .transmittance();
            assert!((0.48..=0.52).contains(&t), "{t}");
        }
    }

    #[test]
    fn bluenoise_square_exact_count() {
        let a = gen_bluenoise_square(64, 64, 0.25, 3).unwrap();
        assert_eq!(a.ones(), 1024);
        let b = gen_bluenoise_square(64, 64, 0.75, 3).unwrap();
        assert_eq!(b.ones(), 3072);
    }

    #[test]
    fn hex_invalid_cells_follow_column_parity() {
        let h = gen_bluenoise_hex(4, 4, 0.5, 11).unwrap();
        assert_eq!(h.invalid_count(), 3);
        for c in 0..5 {
            assert_eq!(h.is_valid(4, c), c % 2 == 1);
            assert!(h.is_valid(3, c));
        }
        for c in [0, 2, 4] {
            assert_eq!(h.get(4, c), 0);
        }
    }

    #[test]
    fn withdrawal_never_exceeds_half_the_columns() {
        for m in 1..12 {
            let gc = m + 1;
            let removed = (10 + 1) * gc - hex_valid_count(10, m);
            assert!(removed <= gc.div_ceil(2));
        }
    }

    #[test]
    fn bluenoise_hex_transmittance() {
        let h = gen_bluenoise_hex(32, 32, 0.5, 5).unwrap();
        assert!((h.transmittance() - 0.5).abs() <= 1.5 / (32.0 * 32.0));
        assert_eq!(h.ones(), (0.5 * h.valid_count() as f64).round() as usize);
    }

    #[test]
    fn hex_generators_deterministic() {
        assert_eq!(
            gen_bluenoise_hex(16, 16, 0.5, 8).unwrap(),
            gen_bluenoise_hex(16, 16, 0.5, 8).unwrap()
        );
        assert_eq!(
            gen_random_hex(16, 16, 0.3, 8).unwrap(),
            gen_random_hex(16, 16, 0.3, 8).unwrap()
        );
    }

    #[test]
    fn hex_from_grid_rejects_set_invalid_cell() {
        let mut bits = vec![0u8; 5 * 5];
        bits[4 * 5] = 1; // row N of column 0
        assert!(HexAperture::from_grid(4, 4, bits).is_err());
    }

    #[test]
    fn complementary_pair_is_elementwise_inverse() {
        for fam in Family::ALL {
            let set = gen_complementary_set(fam, 12, 10, 2, 4).unwrap();
            let (a, b) = (&set.apertures[0], &set.apertures[1]);
            let valid = a.valid_mask();
            for p in 0..valid.len() {
                if valid[p] {
                    assert_eq!(b.grid_bits()[p], 1 - a.grid_bits()[p]);
                }
            }
        }
    }

    #[test]
    fn complementary_four_shots_partition() {
        for fam in Family::ALL {
            let set = gen_complementary_set(fam, 16, 16, 4, 9).unwrap();
            assert!(set.is_partition(), "{fam}");
            assert_eq!(set.g, 0.25);
        }
    }

    #[test]
    fn complementary_rejects_bad_k_and_g() {
        assert!(gen_complementary_set(Family::BlueNoiseHex, 8, 8, 1, 0).is_err());
        assert!(gen_complementary_set_checked(Family::RandomSquare, 8, 8, 2, 0.25, 0).is_err());
        assert!(gen_complementary_set_checked(Family::RandomSquare, 8, 8, 4, 0.25, 0).is_ok());
    }

    #[test]
    fn bluenoise_complementary_counts_are_balanced() {
        let set = gen_complementary_set(Family::BlueNoiseSquare, 10, 10, 3, 2).unwrap();
        let counts: Vec<usize> = set
            .apertures
            .iter()
            .map(|a| a.as_square().unwrap().ones())
            .collect();
        assert_eq!(counts, vec![34, 33, 33]);
    }

    #[test]
    fn family_names_roundtrip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(Family::from_code(f.code()), Some(f));
        }
        assert!("hex".parse::<Family>().is_err());
    }
}
