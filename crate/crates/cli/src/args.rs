use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fringebos", version, about = "Carrier fringe simulation, normalization and phase demodulation")]
pub struct Cli {
    /// Worker threads; 0 picks one per core. FRINGEBOS_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Render a test scene, or a paired training set with --dataset.
    Simulate(SimulateArgs),
    /// Normalize, demodulate and unwrap one fringe image.
    Demodulate(DemodulateArgs),
    /// Accuracy of each method over SNR or speckle size.
    Sweep(SweepArgs),
    /// Phase frames of a planted diffusion front.
    SynthDiffusion(SynthDiffusionArgs),
    /// Fit the diffusion coefficient from two phase frames.
    FitDiffusion(FitDiffusionArgs),
    /// Compare the network forward pass with reference outputs.
    Parity(ParityArgs),
    /// Write randomly initialised FNW1 weights.
    RandomWeights(RandomWeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerArg {
    Classical,
    Learned,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdArg {
    Power,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WftInputArg {
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MethodArgs {
    /// Half window W of the subspace demodulator (window side 2W + 1).
    #[arg(long, default_value_t = 5)]
    pub half_window: usize,
    #[arg(long, value_enum, default_value_t = SvdArg::Power)]
    pub svd: SvdArg,
    #[arg(long, default_value_t = 30)]
    pub power_iters: usize,
    /// FT band half width, cycles/pixel (default 0.8 x carrier).
    #[arg(long)]
    pub ft_halfwidth: Option<f64>,
    /// WFT window sigma, pixels.
    #[arg(long, default_value_t = 10.0)]
    pub wft_sigma: f64,
    /// WFT frequency step, rad/pixel.
    #[arg(long, default_value_t = 0.025)]
    pub wft_step: f64,
    /// WFT search half range, rad/pixel.
    #[arg(long, default_value_t = 2.0)]
    pub wft_range: f64,
    #[arg(long, value_enum, default_value_t = WftInputArg::Normalized)]
    pub wft_input: WftInputArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NormalizerArgs {
    #[arg(long, value_enum, default_value_t = NormalizerArg::Classical)]
    pub normalizer: NormalizerArg,
    /// FNW1 weights for --normalizer learned.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// clean, <mod>-clean or <mod>-<snr>db with <mod> in m1, m2, uniform.
    #[arg(long, default_value = "clean")]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Square image side, pixels.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Carrier, cycles/pixel.
    #[arg(long)]
    pub fx: Option<f64>,
    #[arg(long)]
    pub speckle: Option<f64>,
    /// Fixed noise standard deviation instead of the preset SNR.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Write this many (degraded, normalized) pairs plus a manifest instead.
    #[arg(long)]
    pub dataset: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DemodulateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "subspace")]
    pub method: String,
    #[command(flatten)]
    pub norm: NormalizerArgs,
    /// Carrier, cycles/pixel; estimated when absent.
    #[arg(long)]
    pub carrier: Option<f64>,
    /// Ground-truth phase raster; adds metrics.json.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub method_args: MethodArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// snr or speckle.
    #[arg(long)]
    pub axis: String,
    /// Comma list (0,5,10) or inclusive integer range (3..12).
    #[arg(long)]
    pub values: String,
    /// Modulation of the test scenes: m1, m2 or uniform.
    #[arg(long = "mod", default_value = "m1")]
    pub modulation: String,
    #[arg(long, default_value = "subspace,ft,wft")]
    pub methods: String,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Fixed noise standard deviation (speckle axis).
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Fixed SNR in dB (speckle axis).
    #[arg(long)]
    pub snr: Option<f64>,
    #[command(flatten)]
    pub norm: NormalizerArgs,
    #[command(flatten)]
    pub method_args: MethodArgs,
    /// Output CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Optional line chart of mean RMSE against the axis.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthDiffusionArgs {
    /// Diffusion coefficient, m^2/s.
    #[arg(long, default_value_t = 1.47e-9)]
    pub d: f64,
    /// Frame times in seconds, comma separated.
    #[arg(long, default_value = "120,240,360,480,600,900,1200,1500,1800")]
    pub times: String,
    /// Metres per pixel.
    #[arg(long, default_value_t = 9.1e-6)]
    pub px: f64,
    #[arg(long, default_value_t = 2048)]
    pub width: usize,
    #[arg(long, default_value_t = 1024)]
    pub height: usize,
    /// Peak-to-valley of the first frame, radians.
    #[arg(long, default_value_t = 6.0)]
    pub first_pv: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitDiffusionArgs {
    /// Directory written by synth-diffusion (frame_XX.fpr and sequence.json).
    #[arg(long)]
    pub frames: PathBuf,
    /// Frame indices (t1, t2).
    #[arg(long, default_value = "0,5")]
    pub pair: String,
    #[arg(long, default_value = "150,350,502,650,800")]
    pub rows: String,
    /// Fit columns, half-open range a..b.
    #[arg(long, default_value = "900..1300")]
    pub window: String,
    /// Far-field columns for piston removal; leftmost 10% when absent.
    #[arg(long)]
    pub band: Option<String>,
    /// Metres per pixel; read from sequence.json when absent.
    #[arg(long)]
    pub px: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ParityArgs {
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Directory of parity_input_k.fpr / parity_output_k.fpr.
    #[arg(long)]
    pub dir: PathBuf,
    /// Write the canonical inputs instead of checking.
    #[arg(long)]
    pub emit_inputs: bool,
    /// Side of the canonical inputs written by --emit-inputs.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RandomWeightsArgs {
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    #[arg(long, default_value_t = 16)]
    pub base_channels: usize,
    #[arg(long, default_value_t = 256)]
    pub input_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}
