//! Hexagonal blue-noise coded apertures for CASSI: aperture generation, the
//! discrete forward model, a wavelet/DCT sparsity basis, GPSR reconstruction
//! and Monte Carlo diagnostics of the sensing matrix.

pub mod aperture;
pub mod basis;
pub mod cube;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod gpsr;
pub mod hex;
pub mod io;
pub mod operator;
pub mod rip;
pub mod scene;

pub use aperture::{
    gen_bluenoise_hex, gen_bluenoise_square, gen_complementary_set, gen_random_hex,
    gen_random_square, Aperture, ApertureSet, Family, HexAperture, SquareAperture,
};
pub use basis::{BasisConfig, SparsityBasis};
pub use cube::{psnr, MeasurementSet, ReconReport, SpectralCube};
pub use error::{Error, Result};
pub use forward::{measure, ForwardOperator, NoiseModel};
pub use gpsr::{line_search_tau, solve, SolverConfig};
pub use hex::{hex_to_grey, type_weights, GreyAperture, Parity};
pub use operator::LinearOperator;
