//! End-to-end demodulation: normalize, demodulate, remove the carrier,
//! unwrap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{ft_demodulate, wft_demodulate, BaselineError, FtConfig, WftConfig};
use crate::demodulate::{
    analytic_signal, demodulate_subspace, estimate_carrier_real, remove_carrier, DemodError, SubspaceConfig,
};
use crate::normalize::{classical_normalize, unet_tiled, ModelWeights, NormError, BACKGROUND_RADIUS};
use crate::raster::RealField;
use crate::unwrap::{unwrap2d, UnwrapError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Subspace,
    Ft,
    Wft,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Subspace, Method::Ft, Method::Wft];

    pub fn name(self) -> &'static str {
        match self {
            Method::Subspace => "subspace",
            Method::Ft => "ft",
            Method::Wft => "wft",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method '{s}' (subspace, ft, wft)"))
    }
}

/// What the windowed-Fourier baseline sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WftInput {
    /// Analytic signal of the normalized fringe.
    #[default]
    Normalized,
    /// The degraded image itself, mean removed, searched over `wx > 0`.
    Raw,
}

impl FromStr for WftInput {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(WftInput::Normalized),
            "raw" => Ok(WftInput::Raw),
            _ => Err(format!("unknown WFT input '{s}' (normalized, raw)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Normalizer<'a> {
    Classical,
    Learned(&'a ModelWeights),
    /// Mean removal only.
    None,
}

impl Normalizer<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Normalizer::Classical => "classical",
            Normalizer::Learned(_) => "learned",
            Normalizer::None => "none",
        }
    }

    pub fn apply(&self, img: &RealField) -> Result<RealField, NormError> {
        match self {
            Normalizer::Classical => Ok(classical_normalize(img)?.into_field()),
            Normalizer::Learned(w) => Ok(unet_tiled(w, img)?.into_field()),
            Normalizer::None => {
                let m = img.mean();
                Ok(img.map(|v| v - m)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub method: Method,
    pub subspace: SubspaceConfig,
    pub ft: FtConfig,
    pub wft: WftConfig,
    pub wft_input: WftInput,
    /// Carrier in cycles/pixel; estimated from the normalized fringe if absent.
    pub carrier: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Subspace,
            subspace: SubspaceConfig::default(),
            ft: FtConfig::default(),
            wft: WftConfig::default(),
            wft_input: WftInput::Normalized,
            carrier: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Normalize(#[from] NormError),
    #[error(transparent)]
    Demodulate(#[from] DemodError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Unwrap(#[from] UnwrapError),
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Normalizer output fed to the demodulator.
    pub normalized: RealField,
    /// Wrapped phase with the carrier removed.
    pub wrapped: RealField,
    pub phase: RealField,
    /// Carrier used, cycles/pixel.
    pub fx: f64,
}

pub fn run_pipeline(img: &RealField, normalizer: Normalizer<'_>, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let normalized = normalizer.apply(img)?;
    let fx = match cfg.carrier {
        Some(f) => f,
        None => estimate_carrier_real(&normalized, BACKGROUND_RADIUS).map_err(|_| NormError::NoCarrier)?,
    };
    let wrapped = match cfg.method {
        Method::Subspace => {
            let (a0, _) = demodulate_subspace(&analytic_signal(&normalized), &cfg.subspace)?;
            remove_carrier(&a0, fx)
        }
        Method::Ft => {
            let ft = FtConfig { band_center: cfg.ft.band_center.or(Some(fx)), ..cfg.ft };
            ft_demodulate(&normalized, &ft)?
        }
        Method::Wft => {
            let r = match cfg.wft_input {
                WftInput::Normalized => wft_demodulate(&analytic_signal(&normalized), &cfg.wft)?,
                WftInput::Raw => {
                    let m = img.mean();
                    let lo = cfg.wft.wx_range.0.max(cfg.wft.step);
                    let wft = WftConfig { wx_range: (lo, cfg.wft.wx_range.1.max(lo)), ..cfg.wft };
                    wft_demodulate(&img.map(|v| v - m).map_err(NormError::from)?.to_complex(), &wft)?
                }
            };
            remove_carrier(&r.phase, fx)
        }
    };
    let phase = unwrap2d(&wrapped)?;
    Ok(PipelineOutput { normalized, wrapped, phase, fx })
}
