//! Reference demodulators: Fourier-transform sideband filtering and
//! windowed-Fourier ridges.

mod ft;
mod wft;

use thiserror::Error;

pub use ft::{ft_demodulate, ft_sideband, FtConfig};
pub use wft::{wft_demodulate, WftConfig, WftResult};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no resolvable carrier")]
    NoCarrier,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("field {width}x{height} is smaller than {min}x{min}")]
    FieldTooSmall { width: usize, height: usize, min: usize },
}
