//! Monte-Carlo sweeps of pipeline accuracy over noise level or speckle size.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EvalOptions, EvalReport};
use crate::pipeline::{run_pipeline, Method, Normalizer, PipelineConfig, PipelineError};
use crate::rng::derive_seed;
use crate::simulate::{build_scene, synth_fringe, SceneParams, SimError};

pub const SWEEP_CSV_HEADER: &str = "axis_value,method,rmse_mean,rmse_sd,ssim_mean,ssim_sd,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// SNR in dB.
    Snr,
    /// Speckle size in pixels.
    Speckle,
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "snr" | "snr_db" => Ok(SweepAxis::Snr),
            "speckle" | "speckle_px" => Ok(SweepAxis::Speckle),
            _ => Err(format!("unknown axis '{s}' (snr, speckle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: Method,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
    pub ssim_mean: f64,
    pub ssim_sd: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least one axis value, one method and one trial")]
    Empty,
    #[error(transparent)]
    Simulate(#[from] SimError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] super::MetricsError),
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Runs `trials` scenes per axis value through every method.
///
/// Trial `k` uses scene seed `derive_seed(seed, k)` at every axis value, so
/// the values differ only in the swept degradation. The carrier is taken from
/// the scene. Rows come out ordered by axis value, then method.
#[allow(clippy::too_many_arguments)]
pub fn sweep_eval(
    methods: &[Method],
    scene: &SceneParams,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    seed: u64,
    pipeline: &PipelineConfig,
    normalizer: Normalizer<'_>,
) -> Result<Vec<SweepRow>, SweepError> {
    if values.is_empty() || methods.is_empty() || trials == 0 {
        return Err(SweepError::Empty);
    }
    let opts = EvalOptions::default();
    let mut rows = Vec::with_capacity(values.len() * methods.len());
    for &v in values {
        let mut p = scene.clone();
        match axis {
            SweepAxis::Snr => p.snr_db = Some(v),
            SweepAxis::Speckle => p.speckle_px = Some(v),
        }
        let reports: Vec<Vec<EvalReport>> = (0..trials)
            .into_par_iter()
            .map(|k| -> Result<Vec<EvalReport>, SweepError> {
                let s = build_scene(&p, derive_seed(seed, k as u64))?;
                let img = synth_fringe(&s)?;
                methods
                    .iter()
                    .map(|&m| {
                        let cfg = PipelineConfig { method: m, carrier: Some(s.fx), ..*pipeline };
                        let out = run_pipeline(&img, normalizer, &cfg)?;
                        Ok(evaluate(&out.phase, &s.phase, &opts)?)
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        for (i, &m) in methods.iter().enumerate() {
            let rmse: Vec<f64> = reports.iter().map(|r| r[i].rmse).collect();
            let ssim: Vec<f64> = reports.iter().map(|r| r[i].ssim).collect();
            let (rmse_mean, rmse_sd) = mean_sd(&rmse);
            let (ssim_mean, ssim_sd) = mean_sd(&ssim);
            rows.push(SweepRow { axis_value: v, method: m, rmse_mean, rmse_sd, ssim_mean, ssim_sd, trials, seed });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.9},{:.9},{:.9},{:.9},{},{}",
            r.axis_value, r.method, r.rmse_mean, r.rmse_sd, r.ssim_mean, r.ssim_sd, r.trials, r.seed
        );
    }
    s
}
