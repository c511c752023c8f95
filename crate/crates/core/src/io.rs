//! Binary file formats: cubes (SCUB1), measurements (SMEA1), aperture sets
//! (SAPT1) and grey apertures (SGRY1).
//!
//! All integers are 32-bit little-endian unsigned and all payload samples are
//! 32-bit little-endian floats, except the SGRY1 offset which is a 64-bit
//! float. Values are stored as `f32`, so a round trip is bit-exact for any
//! `f32`-representable input. Decoders report the byte offset at which a
//! header or payload went wrong and never return partial objects.

use std::fs;
use std::path::Path;

use crate::aperture::{Aperture, ApertureSet, Family, HexAperture, SquareAperture};
use crate::cube::{MeasurementSet, SpectralCube};
use crate::error::{Error, Result};
use crate::hex::GreyAperture;

pub const CUBE_MAGIC: &[u8; 5] = b"SCUB1";
pub const MEASUREMENT_MAGIC: &[u8; 5] = b"SMEA1";
pub const APERTURE_MAGIC: &[u8; 5] = b"SAPT1";
pub const GREY_MAGIC: &[u8; 5] = b"SGRY1";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn fail<T>(&self, offset: usize, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => self.fail(
                self.pos,
                format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.buf.len() - self.pos
                ),
            ),
        }
    }

    fn magic(&mut self, magic: &[u8; 5]) -> Result<()> {
        let got = self.take(5, "magic")?;
        if got != magic {
            return self.fail(0, format!("bad magic {:?}", String::from_utf8_lossy(got)));
        }
        Ok(())
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    /// Header dimension that must be at least 1.
    fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = self.u32(what)?;
        if v == 0 {
            return self.fail(at, format!("{what} must be >= 1"));
        }
        Ok(v)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let Some(n) = count.checked_mul(4) else {
            return self.fail(self.pos, format!("{what} size overflows"));
        };
        let bytes = self.take(n, what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return self.fail(
                self.pos,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            );
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::TooLarge(format!("{what} = {v} exceeds u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn product(dims: &[usize], r: &Reader, at: usize) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .map_or_else(|| r.fail(at, "dimensions overflow"), Ok)
}

pub fn encode_cube(cube: &SpectralCube) -> Result<Vec<u8>> {
    let (n, m, l) = cube.dims();
    let mut out = Vec::with_capacity(25 + 4 * (l + n * m * l));
    out.extend_from_slice(CUBE_MAGIC);
    put_u32(&mut out, n, "N")?;
    put_u32(&mut out, m, "M")?;
    put_u32(&mut out, l, "L")?;
    match cube.wavelengths() {
        Some(w) => {
            put_u32(&mut out, l, "W")?;
            put_f32s(&mut out, w);
        }
        None => put_u32(&mut out, 0, "W")?,
    }
    put_f32s(&mut out, cube.as_slice());
    Ok(out)
}

pub fn decode_cube(bytes: &[u8]) -> Result<SpectralCube> {
    let mut r = Reader::new(bytes);
    r.magic(CUBE_MAGIC)?;
    let n = r.dim("N")?;
    let m = r.dim("M")?;
    let l = r.dim("L")?;
    let at = r.pos;
    let w = r.u32("W")?;
    if w != 0 && w != l {
        return r.fail(at, format!("wavelength count {w} must be 0 or L = {l}"));
    }
    let wavelengths = r.f32s(w, "wavelengths")?;
    let at = r.pos;
    let len = product(&[n, m, l], &r, at)?;
    let voxels = r.f32s(len, "voxels")?;
    r.finish()?;
    let cube = SpectralCube::devectorize(n, m, l, voxels).map_err(|e| Error::Parse {
        offset: at,
        reason: e.to_string(),
    })?;
    if w == 0 {
        Ok(cube)
    } else {
        cube.with_wavelengths(wavelengths)
    }
}

pub fn save_cube(path: impl AsRef<Path>, cube: &SpectralCube) -> Result<()> {
    fs::write(path, encode_cube(cube)?)?;
    Ok(())
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<SpectralCube> {
    decode_cube(&fs::read(path)?)
}

pub fn encode_measurements(y: &MeasurementSet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(17 + 4 * y.as_vector().len());
    out.extend_from_slice(MEASUREMENT_MAGIC);
    put_u32(&mut out, y.n_shots(), "K")?;
    put_u32(&mut out, y.n_rows(), "N")?;
    put_u32(&mut out, y.n_det_cols(), "Mc")?;
    put_f32s(&mut out, y.as_vector());
    Ok(out)
}

/// Noise level and seed are not stored and come back as zero.
pub fn decode_measurements(bytes: &[u8]) -> Result<MeasurementSet> {
    let mut r = Reader::new(bytes);
    r.magic(MEASUREMENT_MAGIC)?;
    let k = r.dim("K")?;
    let n = r.dim("N")?;
    let mc = r.dim("Mc")?;
    let at = r.pos;
    let len = product(&[k, n, mc], &r, at)?;
    let values = r.f32s(len, "planes")?;
    r.finish()?;
    MeasurementSet::new(k, n, mc, values)
}

pub fn save_measurements(path: impl AsRef<Path>, y: &MeasurementSet) -> Result<()> {
    fs::write(path, encode_measurements(y)?)?;
    Ok(())
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<MeasurementSet> {
    decode_measurements(&fs::read(path)?)
}

/// Packs bits MSB-first; the mask is padded with zero bits to a whole byte.
fn pack_bits(bits: &[u8], out: &mut Vec<u8>) {
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - i);
        }
        out.push(byte);
    }
}

fn unpack_bits(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len)
        .map(|p| (bytes[p / 8] >> (7 - p % 8)) & 1)
        .collect()
}

pub fn encode_aperture_set(set: &ApertureSet) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(APERTURE_MAGIC);
    out.push(set.family.code());
    put_u32(&mut out, set.n_rows, "N")?;
    put_u32(&mut out, set.n_cols, "M")?;
    put_u32(&mut out, set.len(), "K")?;
    for a in &set.apertures {
        pack_bits(a.grid_bits(), &mut out);
    }
    Ok(out)
}

/// `g` is restored as the mean achieved transmittance and `seed` as zero.
pub fn decode_aperture_set(bytes: &[u8]) -> Result<ApertureSet> {
    let mut r = Reader::new(bytes);
    r.magic(APERTURE_MAGIC)?;
    let at = r.pos;
    let code = r.u8("family")?;
    let Some(family) = Family::from_code(code) else {
        return r.fail(at, format!("unknown family byte {code}"));
    };
    let n = r.dim("N")?;
    let m = r.dim("M")?;
    let k = r.dim("K")?;
    let (gr, gc) = if family.is_hex() {
        (n + 1, m + 1)
    } else {
        (n, m)
    };
    let bits_len = gr * gc;
    let mut apertures = Vec::with_capacity(k);
    for shot in 0..k {
        let at = r.pos;
        let bytes = r.take(bits_len.div_ceil(8), "mask")?;
        let bits = unpack_bits(bytes, bits_len);
        let ap = if family.is_hex() {
            HexAperture::from_grid(n, m, bits).map(Aperture::Hex)
        } else {
            SquareAperture::from_bits(n, m, bits).map(Aperture::Square)
        };
        apertures.push(ap.map_err(|e| Error::Parse {
            offset: at,
            reason: format!("mask {shot}: {e}"),
        })?);
    }
    r.finish()?;
    let g = apertures.iter().map(Aperture::transmittance).sum::<f64>() / k as f64;
    let mut set = ApertureSet {
        family,
        n_rows: n,
        n_cols: m,
        apertures,
        g,
        complementary: false,
        seed: 0,
    };
    set.complementary = k >= 2 && set.is_partition();
    Ok(set)
}

pub fn save_aperture_set(path: impl AsRef<Path>, set: &ApertureSet) -> Result<()> {
    fs::write(path, encode_aperture_set(set)?)?;
    Ok(())
}

pub fn load_aperture_set(path: impl AsRef<Path>) -> Result<ApertureSet> {
    decode_aperture_set(&fs::read(path)?)
}

pub fn encode_grey(grey: &GreyAperture) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(21 + 4 * grey.entries().len());
    out.extend_from_slice(GREY_MAGIC);
    put_u32(&mut out, grey.rows(), "N")?;
    put_u32(&mut out, grey.cols(), "M")?;
    out.extend_from_slice(&grey.offset_a().to_le_bytes());
    put_f32s(&mut out, grey.entries());
    Ok(out)
}

pub fn decode_grey(bytes: &[u8]) -> Result<GreyAperture> {
    let mut r = Reader::new(bytes);
    r.magic(GREY_MAGIC)?;
    let n = r.dim("N")?;
    let m = r.dim("M")?;
    let a = r.f64("offset a")?;
    let at = r.pos;
    let len = product(&[n, m], &r, at)?;
    let entries = r.f32s(len, "entries")?;
    r.finish()?;
    GreyAperture::new(n, m, entries, a).map_err(|e| Error::Parse {
        offset: at,
        reason: e.to_string(),
    })
}

pub fn save_grey(path: impl AsRef<Path>, grey: &GreyAperture) -> Result<()> {
    fs::write(path, encode_grey(grey)?)?;
    Ok(())
}

pub fn load_grey(path: impl AsRef<Path>) -> Result<GreyAperture> {
    decode_grey(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aperture::gen_complementary_set;
    use crate::cube::SIX_BAND_WAVELENGTHS_NM;
    use crate::hex::hex_to_grey;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f32_cube(n: usize, m: usize, l: usize, seed: u64) -> SpectralCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * m * l).map(|_| rng.gen::<f32>() as f64).collect();
        SpectralCube::devectorize(n, m, l, v).unwrap()
    }

    #[test]
    fn cube_round_trip_is_exact() {
        let c = f32_cube(4, 5, 3, 1);
        assert_eq!(decode_cube(&encode_cube(&c).unwrap()).unwrap(), c);
        let c6 = f32_cube(2, 3, 6, 2)
            .with_wavelengths(SIX_BAND_WAVELENGTHS_NM.to_vec())
            .unwrap();
        let back = decode_cube(&encode_cube(&c6).unwrap()).unwrap();
        assert_eq!(back, c6);
        assert_eq!(back.wavelengths().unwrap()[3], 554.0);
    }

    #[test]
    fn cube_header_layout() {
        let c = SpectralCube::from_fn(1, 1, 1, |_, _, _| 0.5).unwrap();
        let b = encode_cube(&c).unwrap();
        assert_eq!(&b[..5], b"SCUB1");
        assert_eq!(&b[5..9], &1u32.to_le_bytes());
        assert_eq!(&b[17..21], &0u32.to_le_bytes());
        assert_eq!(&b[21..25], &0.5f32.to_le_bytes());
        assert_eq!(b.len(), 25);
    }

    #[test]
    fn truncated_cube_fails_with_offset() {
        let b = encode_cube(&f32_cube(4, 5, 3, 3)).unwrap();
        for cut in [3, 10, 20, b.len() - 1] {
            match decode_cube(&b[..cut]) {
                Err(Error::Parse { offset, .. }) => assert!(offset <= cut),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn zero_bands_rejected_before_payload() {
        let mut b = encode_cube(&f32_cube(2, 2, 1, 4)).unwrap();
        b[13..17].copy_from_slice(&0u32.to_le_bytes());
        // payload intact, still rejected at the L field
        match decode_cube(&b) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_trailing_bytes() {
        let mut b = encode_cube(&f32_cube(2, 2, 1, 5)).unwrap();
        b.push(0);
        assert!(matches!(decode_cube(&b), Err(Error::Parse { .. })));
        b.pop();
        b[0] = b'X';
        assert!(matches!(
            decode_cube(&b),
            Err(Error::Parse { offset: 0, .. })
        ));
    }

    #[test]
    fn out_of_range_voxels_rejected() {
        let mut b = encode_cube(&f32_cube(1, 1, 1, 6)).unwrap();
        b[21..25].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(
            decode_cube(&b),
            Err(Error::Parse { offset: 21, .. })
        ));
    }

    #[test]
    fn measurement_round_trip() {
        let vals: Vec<f64> = (0..2 * 3 * 7).map(|v| v as f64 * 0.25).collect();
        let y = MeasurementSet::new(2, 3, 7, vals).unwrap();
        let back = decode_measurements(&encode_measurements(&y).unwrap()).unwrap();
        assert_eq!(back.as_vector(), y.as_vector());
        assert_eq!(back.n_det_cols(), 7);
    }

    #[test]
    fn aperture_set_round_trip() {
        for fam in Family::ALL {
            let set = gen_complementary_set(fam, 9, 11, 3, 5).unwrap();
            let bytes = encode_aperture_set(&set).unwrap();
            assert_eq!(bytes[5], fam.code());
            let back = decode_aperture_set(&bytes).unwrap();
            assert_eq!(back.apertures, set.apertures);
            assert!(back.complementary);
            assert_eq!(back.family, fam);
        }
    }

    #[test]
    fn aperture_mask_with_invalid_hex_bit_rejected() {
        let set = gen_complementary_set(Family::RandomHex, 4, 4, 2, 1).unwrap();
        let mut bytes = encode_aperture_set(&set).unwrap();
        // cell (N, 0) is invalid; its bit is number 4·5 = 20 of the first mask
        let header = 5 + 1 + 12;
        bytes[header + 20 / 8] |= 1 << (7 - 20 % 8);
        assert!(matches!(
            decode_aperture_set(&bytes),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn grey_round_trip() {
        let set = gen_complementary_set(Family::BlueNoiseHex, 8, 8, 2, 2).unwrap();
        let grey = hex_to_grey(set.apertures[0].as_hex().unwrap(), 0.25).unwrap();
        let back = decode_grey(&encode_grey(&grey).unwrap()).unwrap();
        assert_eq!(back.offset_a(), 0.25);
        for (a, b) in back.entries().iter().zip(grey.entries()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }
}
