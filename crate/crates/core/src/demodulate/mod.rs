//! Subspace phase demodulation.
//!
//! The pipeline is: normalized fringe -> row-wise analytic signal -> sliding
//! `S x S` window, each fitted with a linear phase plane from the leading
//! singular vectors -> wrapped phase -> carrier removal. Unwrapping lives in
//! [`crate::unwrap`].

mod analytic;
mod carrier;
mod subspace;
mod svd;
mod window;

use thiserror::Error;

pub use analytic::analytic_signal;
pub use carrier::{estimate_carrier, remove_carrier, MIN_CARRIER_SIZE};
pub(crate) use carrier::estimate_carrier_real;
pub use subspace::{demodulate_subspace, demodulate_subspace_map, Boundary, CarrierSpec, SubspaceConfig, SubspaceMap};
pub use svd::{dominant_svd, jacobi_svd, DominantTriple, FullSvd, SvdMode, POWER_TOL};
pub use window::{estimate_window, WindowEstimate};

#[derive(Debug, Error)]
pub enum DemodError {
    #[error("window matrix is rank deficient (sigma_1 = 0)")]
    RankDeficient,
    #[error("non-finite value in window")]
    NonFinite,
    #[error("window side {0} is too small or not odd")]
    WindowTooSmall(usize),
    #[error("field {width}x{height} is smaller than the required {window}x{window}")]
    FieldTooSmall { width: usize, height: usize, window: usize },
    #[error("no spectral peak found")]
    NoPeak,
    #[error("bad configuration: {0}")]
    BadConfig(String),
}
