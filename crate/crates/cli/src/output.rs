use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use hexcassi::cube::SpectralCube;
use serde::Serialize;

use crate::Failure;

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::io(path, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write(path, text)
}

#[derive(Serialize)]
struct BandScale {
    band: usize,
    wavelength_nm: Option<f64>,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct Sidecar {
    rows: usize,
    cols: usize,
    scaling: &'static str,
    bands: Vec<BandScale>,
}

/// One 8-bit greyscale PNG per band, min-max scaled, plus `bands.json`.
pub fn write_band_pngs(dir: &Path, cube: &SpectralCube) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let (n, m, l) = cube.dims();
    let mut bands = Vec::with_capacity(l);
    for b in 0..l {
        let data = cube.band(b);
        let min = data.iter().copied().fold(f64::INFINITY, f64::min);
        let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if max > min { max - min } else { 1.0 };
        let mut pixels = vec![0u8; n * m];
        for j in 0..m {
            for i in 0..n {
                let v = (data[j * n + i] - min) / span;
                pixels[i * m + j] = (v * 255.0).round().clamp(0.0, 255.0) as u8;
            }
        }
        let path = dir.join(format!("band-{b}.png"));
        let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
        let mut enc = png::Encoder::new(BufWriter::new(file), m as u32, n as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header()
            .and_then(|mut w| w.write_image_data(&pixels))
            .map_err(|e| Failure::numeric(format!("{}: {e}", path.display())))?;
        bands.push(BandScale {
            band: b,
            wavelength_nm: cube.wavelengths().map(|w| w[b]),
            min,
            max,
        });
    }
    write_json(
        &dir.join("bands.json"),
        &Sidecar {
            rows: n,
            cols: m,
            scaling: "min-max per band to 0..255",
            bands,
        },
    )
}
