use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexcassi::aperture::Family;
use hexcassi::scene::SceneKind;

#[derive(Debug, Parser)]
#[command(
    name = "hexcassi",
    version,
    about = "Hexagonal blue-noise coded aperture CASSI simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write aperture sets (one SAPT1 file per family and seed).
    Generate(Common),
    /// Simulate, reconstruct and score every requested family.
    Pipeline(Common),
    /// Blue-noise hex PSNR as a function of the lattice offset.
    SweepOffset {
        #[command(flatten)]
        common: Common,
        /// Offset ratios to evaluate (default 0, 0.1, …, 0.8).
        #[arg(long = "a", value_name = "A")]
        a_grid: Vec<f64>,
    },
    /// Monte Carlo check of the r-statistic ordering SR > SB > HB.
    RipVerify {
        #[command(flatten)]
        common: Common,
        /// Sampled pairs per seed.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Aperture sets per family, seeded from the first --seed upward.
        #[arg(long, default_value_t = 5)]
        n_seeds: usize,
        /// Compare SR against itself instead.
        #[arg(long)]
        control: bool,
    },
    /// Write a synthetic scene as SCUB1 plus one PNG per band.
    SynthScene(Common),
    /// Describe a cube, measurement or aperture file, or the build defaults.
    Info {
        path: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    RandSq,
    BnSq,
    RandHex,
    BnHex,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::RandSq => Family::RandomSquare,
            FamilyArg::BnSq => Family::BlueNoiseSquare,
            FamilyArg::RandHex => Family::RandomHex,
            FamilyArg::BnHex => Family::BlueNoiseHex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    SmoothBlobs,
    TextEdges,
    SpectralRamps,
}

impl From<SceneArg> for SceneKind {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::SmoothBlobs => SceneKind::SmoothBlobs,
            SceneArg::TextEdges => SceneKind::TextEdges,
            SceneArg::SpectralRamps => SceneKind::SpectralRamps,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 6)]
    pub l: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Transmittance, strictly between 0 and 1.
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub g: f64,
    /// Aperture family; repeat for several (default: all four).
    #[arg(long, value_enum)]
    pub family: Vec<FamilyArg>,
    #[arg(long, default_value_t = 0.0)]
    pub offset_a: f64,
    /// Detector noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Absolute regularization weight; repeat for a line search grid. Without
    /// it a relative grid is used.
    #[arg(long)]
    pub tau: Vec<f64>,
    /// Seed; repeat for several (default 0..5).
    #[arg(long)]
    pub seed: Vec<u64>,
    /// Partition the cells across the K shots (requires K·g = 1).
    #[arg(long)]
    pub complementary: bool,
    #[arg(long, value_enum, default_value_t = SceneArg::TextEdges)]
    pub scene: SceneArg,
    /// Load the scene from a SCUB1 file instead of synthesizing it.
    #[arg(long)]
    pub scene_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
    /// Wavelet levels (default log2(min(N, M)) − 3).
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value = "hexcassi-out")]
    pub out: PathBuf,
    /// Print the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

impl Common {
    pub fn families(&self) -> Vec<Family> {
        if self.family.is_empty() {
            Family::ALL.to_vec()
        } else {
            self.family.iter().map(|&f| f.into()).collect()
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seed.is_empty() {
            (0..5).collect()
        } else {
            self.seed.clone()
        }
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("transmittance must lie in (0, 1), got {v}"))
    }
}
