use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use fringebos::baselines::{FtConfig, WftConfig};
use fringebos::demodulate::{SubspaceConfig, SvdMode};
use fringebos::diffusion::{default_band, fit_sequence, fits_csv, DiffusionSummary, FitSetup};
use fringebos::metrics::{evaluate, sweep_csv, sweep_eval, EvalOptions, SweepAxis};
use fringebos::normalize::{
    check_parity, load_weights, save_weights, write_canonical_inputs, Arch, ModelWeights, PARITY_COUNT,
};
use fringebos::pipeline::{run_pipeline, Method, Normalizer, PipelineConfig, WftInput};
use fringebos::raster::{export_png, read_real, write_real, RealField};
use fringebos::simulate::{
    build_scene, gen_dataset, preset, synth_diffusion_sequence, synth_fringe, DatasetParams, DiffusionSequence,
    ModulationKind, SceneParams,
};

use crate::args::*;
use crate::chart::line_chart;
use crate::error::{usage, NumericFailure};

pub const RUN_CONFIG: &str = "run_config.json";
pub const SEQUENCE_JSON: &str = "sequence.json";

#[derive(Serialize)]
struct RunRecord<'a> {
    version: &'static str,
    threads: usize,
    #[serde(flatten)]
    command: &'a Command,
}

/// Writes the resolved configuration next to the outputs.
pub fn write_sidecar(cmd: &Command, threads: usize, path: &Path) -> Result<()> {
    let rec = RunRecord { version: env!("CARGO_PKG_VERSION"), threads, command: cmd };
    fs::write(path, serde_json::to_string_pretty(&rec)? + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Sidecar location for a command: inside its output directory, or beside
/// its output file.
pub fn sidecar_path(cmd: &Command) -> PathBuf {
    let beside = |f: &Path| {
        let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        f.with_file_name(format!("{name}.{RUN_CONFIG}"))
    };
    match cmd {
        Command::Simulate(a) => a.out.join(RUN_CONFIG),
        Command::Demodulate(a) => a.out.join(RUN_CONFIG),
        Command::Sweep(a) => beside(&a.out),
        Command::SynthDiffusion(a) => a.out.join(RUN_CONFIG),
        Command::FitDiffusion(a) => a.out.join(RUN_CONFIG),
        Command::Parity(a) => a.dir.join(RUN_CONFIG),
        Command::RandomWeights(a) => beside(&a.out),
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// `0,5,10` or an inclusive integer range `3..12`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: i64 = a.trim().parse().map_err(|_| usage(format!("bad range start in '{s}'")))?;
        let b: i64 = b.trim().parse().map_err(|_| usage(format!("bad range end in '{s}'")))?;
        if b < a {
            return Err(usage(format!("empty range '{s}'")));
        }
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    let v: Vec<f64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad value '{t}'"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(usage("values list is empty"));
    }
    Ok(v)
}

fn parse_usizes(s: &str, what: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad {what} '{t}'"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(usage(format!("{what} list is empty")));
    }
    Ok(v)
}

/// Half-open `a..b`.
fn parse_range(s: &str) -> Result<std::ops::Range<usize>> {
    let (a, b) = s.split_once("..").ok_or_else(|| usage(format!("expected a..b, got '{s}'")))?;
    let a: usize = a.trim().parse().map_err(|_| usage(format!("bad range '{s}'")))?;
    let b: usize = b.trim().parse().map_err(|_| usage(format!("bad range '{s}'")))?;
    if b <= a {
        return Err(usage(format!("empty range '{s}'")));
    }
    Ok(a..b)
}

fn pipeline_config(method: Method, m: &MethodArgs, carrier: Option<f64>) -> PipelineConfig {
    PipelineConfig {
        method,
        subspace: SubspaceConfig {
            half_window: m.half_window,
            svd_mode: match m.svd {
                SvdArg::Power => SvdMode::PowerIteration,
                SvdArg::Full => SvdMode::Full,
            },
            power_iters: m.power_iters,
            ..Default::default()
        },
        ft: FtConfig { band_center: None, band_halfwidth: m.ft_halfwidth },
        wft: WftConfig {
            sigma: m.wft_sigma,
            step: m.wft_step,
            wx_range: (-m.wft_range, m.wft_range),
            wy_range: (-m.wft_range, m.wft_range),
        },
        wft_input: match m.wft_input {
            WftInputArg::Normalized => WftInput::Normalized,
            WftInputArg::Raw => WftInput::Raw,
        },
        carrier,
    }
}

fn load_normalizer_weights(n: &NormalizerArgs) -> Result<Option<ModelWeights>> {
    match (n.normalizer, &n.weights) {
        (NormalizerArg::Learned, Some(p)) => Ok(Some(load_weights(p).with_context(|| format!("loading {}", p.display()))?)),
        (NormalizerArg::Learned, None) => Err(usage("--normalizer learned needs --weights")),
        _ => Ok(None),
    }
}

fn normalizer<'a>(n: &NormalizerArgs, w: &'a Option<ModelWeights>) -> Normalizer<'a> {
    match (n.normalizer, w) {
        (NormalizerArg::Learned, Some(w)) => Normalizer::Learned(w),
        (NormalizerArg::None, _) => Normalizer::None,
        _ => Normalizer::Classical,
    }
}

fn png_full_range(f: &RealField, path: &Path) -> Result<()> {
    let (lo, hi) = f.min_max();
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    export_png(f, path, lo, hi).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct SceneManifest<'a> {
    preset: &'a str,
    seed: u64,
    width: usize,
    height: usize,
    fx: f64,
    snr_db: Option<f64>,
    noise_sigma: Option<f64>,
    speckle_px: Option<f64>,
    files: [&'static str; 5],
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    mkdir(&a.out)?;
    if let Some(n) = a.dataset {
        let p = DatasetParams { width: a.size, height: a.size, ..Default::default() };
        let recs = gen_dataset(n, &a.out, &p, a.seed)?;
        println!("wrote {} pairs to {}", recs.len(), a.out.display());
        return Ok(());
    }
    let mut p: SceneParams = preset(&a.preset).map_err(|e| usage(e.to_string()))?;
    p.width = a.size;
    p.height = a.size;
    if let Some(fx) = a.fx {
        p.fx = fx;
    }
    if a.speckle.is_some() {
        p.speckle_px = a.speckle;
    }
    if a.noise_sigma.is_some() {
        p.noise_sigma = a.noise_sigma;
        p.snr_db = None;
    }
    let scene = build_scene(&p, a.seed)?;
    let img = synth_fringe(&scene)?;
    let files = ["degraded.fpr", "truth_phase.fpr", "normalized_truth.fpr", "background.fpr", "modulation.fpr"];
    let fields = [&img, &scene.phase, &scene.normalized_truth(), &scene.background, &scene.modulation];
    for (name, f) in files.iter().zip(fields) {
        write_real(f, a.out.join(name))?;
    }
    png_full_range(&img, &a.out.join("degraded.png"))?;
    write_json(
        &SceneManifest {
            preset: &a.preset,
            seed: a.seed,
            width: scene.width,
            height: scene.height,
            fx: scene.fx,
            snr_db: scene.snr_db,
            noise_sigma: scene.noise_sigma,
            speckle_px: scene.speckle_px,
            files,
        },
        &a.out.join("manifest.json"),
    )?;
    println!("wrote scene to {}", a.out.display());
    Ok(())
}

pub fn demodulate(a: &DemodulateArgs) -> Result<()> {
    let method: Method = a.method.parse().map_err(usage)?;
    let weights = load_normalizer_weights(&a.norm)?;
    let img = read_real(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let truth = match &a.truth {
        Some(p) => Some(read_real(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let cfg = pipeline_config(method, &a.method_args, a.carrier);
    let out = run_pipeline(&img, normalizer(&a.norm, &weights), &cfg)?;
    mkdir(&a.out)?;
    write_real(&out.phase, a.out.join("phase.fpr"))?;
    write_real(&out.wrapped, a.out.join("wrapped.fpr"))?;
    write_real(&out.normalized, a.out.join("normalized.fpr"))?;
    png_full_range(&out.phase, &a.out.join("phase.png"))?;
    if let Some(t) = truth {
        let r = evaluate(&out.phase, &t, &EvalOptions::default())?;
        write_json(&r, &a.out.join("metrics.json"))?;
        println!("rmse {:.6} rad, ssim {:.6}", r.rmse, r.ssim);
    }
    println!("{method}: carrier {:.6} cycles/px, phase written to {}", out.fx, a.out.display());
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let axis: SweepAxis = a.axis.parse().map_err(usage)?;
    let values = parse_values(&a.values)?;
    let methods: Vec<Method> =
        a.methods.split(',').map(|m| m.trim().parse::<Method>().map_err(usage)).collect::<Result<_>>()?;
    let modulation: ModulationKind = a.modulation.parse().map_err(|e: String| usage(e))?;
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    if a.noise_sigma.is_some() && a.snr.is_some() {
        return Err(usage("--noise-sigma and --snr are exclusive"));
    }
    let weights = load_normalizer_weights(&a.norm)?;
    let scene = SceneParams {
        width: a.size,
        height: a.size,
        modulation,
        noise_sigma: a.noise_sigma,
        snr_db: a.snr,
        ..Default::default()
    };
    let cfg = pipeline_config(Method::Subspace, &a.method_args, None);
    let rows = sweep_eval(&methods, &scene, axis, &values, a.trials, a.seed, &cfg, normalizer(&a.norm, &weights))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    fs::write(&a.out, sweep_csv(&rows)).with_context(|| format!("cannot write {}", a.out.display()))?;
    if let Some(png) = &a.png {
        let series: Vec<Vec<(f64, f64)>> = methods
            .iter()
            .map(|m| rows.iter().filter(|r| r.method == *m).map(|r| (r.axis_value, r.rmse_mean)).collect())
            .collect();
        line_chart(&series, png)?;
    }
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

pub fn synth_diffusion(a: &SynthDiffusionArgs) -> Result<()> {
    let times = parse_values(&a.times)?;
    let p = DiffusionSequence {
        d: a.d,
        times,
        px: a.px,
        width: a.width,
        height: a.height,
        first_pv: a.first_pv,
        noise_sd: a.noise_sd,
        seed: a.seed,
    };
    let frames = synth_diffusion_sequence(&p)?;
    mkdir(&a.out)?;
    for (k, f) in frames.iter().enumerate() {
        write_real(f, a.out.join(format!("frame_{k:02}.fpr")))?;
    }
    write_json(&p, &a.out.join(SEQUENCE_JSON))?;
    println!("wrote {} frames to {}", frames.len(), a.out.display());
    Ok(())
}

pub fn fit_diffusion(a: &FitDiffusionArgs) -> Result<()> {
    let seq_path = a.frames.join(SEQUENCE_JSON);
    if !seq_path.is_file() {
        return Err(usage(format!("{} not found", seq_path.display())));
    }
    let seq: DiffusionSequence = serde_json::from_str(&fs::read_to_string(&seq_path)?)
        .with_context(|| format!("parsing {}", seq_path.display()))?;
    let pair = parse_usizes(&a.pair, "frame index")?;
    if pair.len() != 2 {
        return Err(usage("--pair takes two frame indices"));
    }
    let mut frames = Vec::with_capacity(seq.times.len());
    for k in 0..seq.times.len() {
        let p = a.frames.join(format!("frame_{k:02}.fpr"));
        if !p.is_file() {
            return Err(usage(format!("missing frame {}", p.display())));
        }
        frames.push(read_real(&p).with_context(|| format!("reading {}", p.display()))?);
    }
    let width = frames.first().map(|f| f.width()).ok_or_else(|| usage("no frames"))?;
    let setup = FitSetup {
        px: a.px.unwrap_or(seq.px),
        t1: 0.0,
        t2: 0.0,
        rows: parse_usizes(&a.rows, "row")?,
        window: parse_range(&a.window)?,
        band: match &a.band {
            Some(b) => parse_range(b)?,
            None => default_band(width),
        },
    };
    let agg = fit_sequence(&frames, &seq.times, (pair[0], pair[1]), setup)?;
    mkdir(&a.out)?;
    fs::write(a.out.join("fits.csv"), fits_csv(&agg))?;
    write_json(&DiffusionSummary::from(&agg), &a.out.join("summary.json"))?;
    println!("D = {:.4e} +- {:.2e} m^2/s over {} rows", agg.mean_d, agg.sd_d, agg.fits.len());
    Ok(())
}

pub fn parity(a: &ParityArgs) -> Result<()> {
    if a.emit_inputs {
        let paths = write_canonical_inputs(&a.dir, a.size)?;
        println!("wrote {} canonical inputs to {}", paths.len(), a.dir.display());
        return Ok(());
    }
    let wp = a.weights.as_ref().ok_or_else(|| usage("--weights is required unless --emit-inputs is given"))?;
    let w = load_weights(wp).with_context(|| format!("loading {}", wp.display()))?;
    let r = check_parity(&w, &a.dir)?;
    for (k, d) in r.max_abs.iter().enumerate() {
        println!("input {k}: max |diff| = {d:.3e} {}", if *d <= r.tolerance { "ok" } else { "FAIL" });
    }
    if !r.passed() {
        return Err(NumericFailure(format!("parity above {:e} on some of {PARITY_COUNT} inputs", r.tolerance)).into());
    }
    Ok(())
}

pub fn random_weights(a: &RandomWeightsArgs) -> Result<()> {
    let arch = Arch { depth: a.depth, base_channels: a.base_channels, input_size: a.input_size };
    let w = ModelWeights::random(arch, a.seed).map_err(|e| usage(e.to_string()))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    save_weights(&w, &a.out)?;
    println!("wrote {} parameters to {}", arch.parameter_count(), a.out.display());
    Ok(())
}
