//! Equivalent grey-scale square apertures for hexagonal binary masks.
//!
//! Each square pixel of the detector lattice overlaps exactly three hexagon
//! elements, so a binary hexagonal mask acts on the scene like a grey-scale
//! square mask whose entries are area-weighted sums of those three elements.
//! The weights depend only on column parity and on the horizontal offset `a`
//! (in pixel widths) between the two lattices.

use std::collections::BTreeMap;

use crate::aperture::{Aperture, ApertureSet, HexAperture, SquareAperture};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Largest usable offset: the Type I left weight `1 − √3/12 − a` hits zero here.
pub const A_MAX: f64 = 1.0 - SQRT3 / 12.0;

/// Overlap pattern of a square pixel with the hexagon lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Odd 1-based column: left, top-right and bottom-right elements.
    TypeI,
    /// Even 1-based column: top-left, bottom-left and right elements.
    TypeII,
}

impl Parity {
    /// Parity of 0-based pixel column `c`.
    pub fn of_column(c: usize) -> Self {
        if c % 2 == 0 {
            Parity::TypeI
        } else {
            Parity::TypeII
        }
    }
}

fn check_offset(a: f64) -> Result<()> {
    if !(0.0..A_MAX).contains(&a) {
        return Err(Error::param(
            "offset_a",
            format!("offset ratio must lie in [0, {A_MAX:.4}), got {a}"),
        ));
    }
    Ok(())
}

/// Area fractions `(w1, w2, w3)` of the three overlapping hexagon elements.
pub fn type_weights(parity: Parity, a: f64) -> Result<[f64; 3]> {
    check_offset(a)?;
    Ok(match parity {
        Parity::TypeI => {
            let side = SQRT3 / 24.0 + a / 2.0;
            [1.0 - SQRT3 / 12.0 - a, side, side]
        }
        Parity::TypeII => {
            let left = 0.5 - SQRT3 / 24.0 - a / 2.0;
            [left, left, SQRT3 / 12.0 + a]
        }
    })
}

/// Hex grid cells `(row, col)` feeding 0-based pixel `(r, c)`, in weight order.
#[inline]
pub fn contributing_cells(r: usize, c: usize) -> [(usize, usize); 3] {
    match Parity::of_column(c) {
        Parity::TypeI => [(r, c), (r, c + 1), (r + 1, c + 1)],
        Parity::TypeII => [(r, c), (r + 1, c), (r, c + 1)],
    }
}

/// Real-valued `N × M` square aperture, row-major, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyAperture {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    offset_a: f64,
}

impl GreyAperture {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, offset_a: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{rows}x{cols} grey aperture"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::mismatch(rows * cols, entries.len()));
        }
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("entries", format!("{v} outside [0, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            offset_a,
        })
    }

    /// A binary square aperture seen as a grey one.
    pub fn from_square(sq: &SquareAperture) -> Self {
        Self {
            rows: sq.rows(),
            cols: sq.cols(),
            entries: sq.to_real(),
            offset_a: 0.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn offset_a(&self) -> f64 {
        self.offset_a
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / self.entries.len() as f64
    }
}

/// Converts a binary hexagonal mask into its `N × M` grey-scale equivalent.
pub fn hex_to_grey(hex: &HexAperture, a: f64) -> Result<GreyAperture> {
    let w1 = type_weights(Parity::TypeI, a)?;
    let w2 = type_weights(Parity::TypeII, a)?;
    let (n, m) = (hex.n_rows(), hex.n_cols());
    let mut entries = Vec::with_capacity(n * m);
    for r in 0..n {
        for c in 0..m {
            let w = if c % 2 == 0 { &w1 } else { &w2 };
            let cells = contributing_cells(r, c);
            let mut t = 0.0;
            for (wk, &(hr, hc)) in w.iter().zip(&cells) {
                debug_assert!(hex.is_valid(hr, hc), "pixel ({r},{c}) reads invalid cell");
                t += wk * hex.get(hr, hc) as f64;
            }
            // weights sum to 1 only up to rounding
            entries.push(t.clamp(0.0, 1.0));
        }
    }
    Ok(GreyAperture {
        rows: n,
        cols: m,
        entries,
        offset_a: a,
    })
}

/// Per-snapshot modulation masks: grey equivalents for hex families at
/// offset `a`, the binary masks themselves for square families.
pub fn modulation_masks(set: &ApertureSet, a: f64) -> Result<Vec<GreyAperture>> {
    set.apertures
        .iter()
        .map(|ap| match ap {
            Aperture::Square(sq) => Ok(GreyAperture::from_square(sq)),
            Aperture::Hex(h) => hex_to_grey(h, a),
        })
        .collect()
}

/// Distinct grey values with their counts, ascending.
pub fn grey_histogram(grey: &GreyAperture) -> Vec<(f64, usize)> {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &v in grey.entries() {
        // non-negative floats order like their bit patterns; fold -0.0 into 0.0
        *counts.entry((v + 0.0).to_bits()).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(bits, n)| (f64::from_bits(bits), n))
        .collect()
}
