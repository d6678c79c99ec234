//! Acceptance criteria P1-P10. Prints one line per criterion and exits
//! non-zero if any of them fails.

#![allow(clippy::type_complexity, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use fringebos::demodulate::{
    analytic_signal, demodulate_subspace, dominant_svd, estimate_window, jacobi_svd, SubspaceConfig, SvdMode,
};
use fringebos::diffusion::{default_band, fit_sequence, FitSetup, DEFAULT_ROWS};
use fringebos::metrics::{evaluate, rmse_phase, ssim_phase, ssim_with_range, sweep_eval, EvalOptions, SweepAxis};
use fringebos::normalize::{load_weights, parity_paths, unet_forward, ModelWeights, PARITY_COUNT};
use fringebos::phase::wrap;
use fringebos::pipeline::{run_pipeline, Method, Normalizer, PipelineConfig};
use fringebos::raster::{read_real, write_real, ComplexField, RealField};
use fringebos::rng::{derive_seed, stream_rng};
use fringebos::simulate::{
    build_scene, preset, random_phase, synth_diffusion_sequence, synth_fringe, DiffusionSequence, ModulationKind,
    SceneParams, SPECKLE_STUDY_SIGMA,
};
use fringebos::unwrap::unwrap2d;

const SEED: u64 = 20_240_917;
const WEIGHTS_ENV: &str = "FRINGEBOS_WEIGHTS";

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn p1_window_exactness() -> Outcome {
    let mut rng = stream_rng(SEED, 1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let half = 5.0;
    for _ in 0..50 {
        let a0 = rng.random_range(-3.0..3.0);
        let a1 = rng.random_range(-1.0..=1.0);
        let a2 = rng.random_range(-1.0..=1.0);
        let win = ComplexField::from_fn(11, 11, |x, y| {
            Complex64::from_polar(1.0, a0 + a1 * (x as f64 - half) + a2 * (y as f64 - half))
        });
        let e = estimate_window(&win, SvdMode::PowerIteration, 30).expect("window estimate");
        worst = worst.max(wrap(e.a0 - a0).abs()).max((e.a1 - a1).abs()).max((e.a2 - a2).abs());
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-8 && t < Duration::from_secs(1),
        format!("window exactness: max coefficient error {worst:.2e} over 50 triples in {}", secs(t)),
    )
}

fn p2_noiseless_end_to_end() -> Outcome {
    let p = preset("clean").unwrap();
    let scene = build_scene(&p, derive_seed(SEED, 2)).unwrap();
    let img = synth_fringe(&scene).unwrap();
    let start = Instant::now();
    let cfg = PipelineConfig { carrier: Some(scene.fx), ..Default::default() };
    let out = single_thread(|| run_pipeline(&img, Normalizer::Classical, &cfg));
    let t = start.elapsed();
    let out = out.expect("pipeline");
    let rmse = rmse_phase(&out.phase, &scene.phase, &EvalOptions::default()).unwrap();
    outcome(
        rmse < 0.05 && t < Duration::from_secs(10),
        format!("noiseless 256x256 end-to-end: RMSE {rmse:.4} rad, single-threaded {}", secs(t)),
    )
}

type Scores = HashMap<(ModulationKind, Method), Vec<(f64, f64)>>;

fn zero_db_scores(normalizer: Normalizer<'_>, methods: &[Method]) -> Scores {
    let mut scores = Scores::new();
    for name in ["m1-0db", "m2-0db"] {
        let p = preset(name).unwrap();
        for k in 0..5 {
            let scene = build_scene(&p, derive_seed(SEED, 100 + k)).unwrap();
            let img = synth_fringe(&scene).unwrap();
            for &m in methods {
                let cfg = PipelineConfig { method: m, carrier: Some(scene.fx), ..Default::default() };
                let out = run_pipeline(&img, normalizer, &cfg).expect("pipeline");
                let r = evaluate(&out.phase, &scene.phase, &EvalOptions::default()).unwrap();
                scores.entry((p.modulation, m)).or_default().push((r.rmse, r.ssim));
            }
        }
    }
    scores
}

fn means(v: &[(f64, f64)]) -> (f64, f64) {
    let n = v.len() as f64;
    (v.iter().map(|s| s.0).sum::<f64>() / n, v.iter().map(|s| s.1).sum::<f64>() / n)
}

fn severe_noise_clause(scores: &Scores, ssim_floor: f64) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ModulationKind::M1, ModulationKind::M2] {
        let v = &scores[&(kind, Method::Subspace)];
        let worst = v.iter().map(|s| s.0).fold(0.0, f64::max);
        let (_, ssim) = means(v);
        pass &= worst < 1.0 && ssim >= ssim_floor;
        parts.push(format!("{kind:?} worst RMSE {worst:.3} rad, mean SSIM {ssim:.3}"));
    }
    (pass, parts.join("; "))
}

fn p3_severe_noise(classical: &Scores) -> Outcome {
    let (pass, detail) = severe_noise_clause(classical, 0.85);
    let mut line = format!("0 dB subspace, classical normalizer: {detail}");
    let mut all = pass;
    match std::env::var(WEIGHTS_ENV) {
        Ok(path) if !path.is_empty() => {
            let w = load_weights(&path).expect("learned weights");
            let learned = zero_db_scores(Normalizer::Learned(&w), &[Method::Subspace]);
            let (lp, ld) = severe_noise_clause(&learned, 0.88);
            all &= lp;
            line.push_str(&format!(" | learned: {ld} ({})", if lp { "pass" } else { "FAIL" }));
        }
        _ => line.push_str(&format!(" | learned clause SKIPPED ({WEIGHTS_ENV} not set)")),
    }
    outcome(all, line)
}

fn p4_ordering(scores: &Scores) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ModulationKind::M1, ModulationKind::M2] {
        let [s, w, f] = [Method::Subspace, Method::Wft, Method::Ft].map(|m| means(&scores[&(kind, m)]));
        pass &= s.0 < w.0 && w.0 < f.0 && s.1 > w.1 && w.1 > f.1;
        parts.push(format!(
            "{kind:?} RMSE subspace/wft/ft {:.3}/{:.3}/{:.3}, SSIM {:.3}/{:.3}/{:.3}",
            s.0, w.0, f.0, s.1, w.1, f.1
        ));
    }
    outcome(pass, format!("0 dB ordering: {}", parts.join("; ")))
}

fn p5_speckle_sweep() -> Outcome {
    let scene = SceneParams { noise_sigma: Some(SPECKLE_STUDY_SIGMA), ..Default::default() };
    let sizes = [3.0, 6.0, 9.0, 12.0];
    let methods = [Method::Subspace, Method::Wft, Method::Ft];
    let start = Instant::now();
    let rows = sweep_eval(
        &methods,
        &scene,
        SweepAxis::Speckle,
        &sizes,
        3,
        SEED,
        &PipelineConfig::default(),
        Normalizer::Classical,
    )
    .expect("sweep");
    let t = start.elapsed();
    let mut pass = t < Duration::from_secs(15 * 60);
    let mut parts = Vec::new();
    for &s in &sizes {
        let r = |m: Method| rows.iter().find(|r| r.axis_value == s && r.method == m).unwrap().rmse_mean;
        let (sub, wft, ft) = (r(Method::Subspace), r(Method::Wft), r(Method::Ft));
        pass &= sub < 1.0 && sub < wft && sub < ft;
        parts.push(format!("{s} px {sub:.3}/{wft:.3}/{ft:.3}"));
    }
    outcome(pass, format!("speckle sweep RMSE subspace/wft/ft: {}; {}", parts.join(", "), secs(t)))
}

fn p6_unwrap_round_trip() -> Outcome {
    let mut rng = stream_rng(SEED, 6);
    let mut worst: f64 = 0.0;
    let mut max_pv: f64 = 0.0;
    for _ in 0..20 {
        let pv = rng.random_range(20.0..=60.0);
        let truth = random_phase(256, 256, 20, pv, 2.5, &mut rng).unwrap();
        let (lo, hi) = truth.min_max();
        max_pv = max_pv.max(hi - lo);
        let wrapped = truth.map(wrap).unwrap();
        let u = unwrap2d(&wrapped).unwrap();
        let d: Vec<f64> = u.data().iter().zip(truth.data()).map(|(a, b)| a - b).collect();
        let piston = d.iter().sum::<f64>() / d.len() as f64;
        worst = worst.max(d.iter().map(|v| (v - piston).abs()).fold(0.0, f64::max));
    }
    outcome(worst < 1e-6, format!("unwrap round trip: max error {worst:.2e} rad over 20 maps, PV up to {max_pv:.1} rad"))
}

fn p7_diffusion_fit() -> Outcome {
    let seq = DiffusionSequence { d: 1.47e-9, noise_sd: 0.05, seed: SEED, ..Default::default() };
    let start = Instant::now();
    let frames = synth_diffusion_sequence(&seq).unwrap();
    let pair = (0, seq.times.iter().position(|&t| t == 900.0).expect("900 s frame"));
    let setup = FitSetup {
        px: seq.px,
        t1: 0.0,
        t2: 0.0,
        rows: DEFAULT_ROWS.to_vec(),
        window: 900..1300,
        band: default_band(seq.width),
    };
    let agg = fit_sequence(&frames, &seq.times, pair, setup);
    let t = start.elapsed();
    let agg = match agg {
        Ok(a) => a,
        Err(e) => return outcome(false, format!("diffusion fit failed: {e}")),
    };
    let rel = (agg.mean_d / seq.d - 1.0).abs();
    let spread = agg.sd_d / agg.mean_d;
    let min_r2 = agg.fits.iter().map(|f| f.r2).fold(1.0, f64::min);
    let plausible = (1.2e-9..=1.7e-9).contains(&agg.mean_d);
    outcome(
        rel < 0.03 && spread < 0.03 && min_r2 > 0.98 && t < Duration::from_secs(30),
        format!(
            "diffusion fit: D = {:.4e} m^2/s ({:.2}% off), sd/mean {:.2}%, min r2 {min_r2:.4}, {}, literature band {}",
            agg.mean_d,
            100.0 * rel,
            100.0 * spread,
            secs(t),
            if plausible { "ok" } else { "outside" }
        ),
    )
}

/// Window-by-window SSIM with explicit loops over every window position.
fn naive_ssim(a: &RealField, b: &RealField, l: f64) -> f64 {
    let (w, h) = a.dims();
    let mut g = [[0.0; 11]; 11];
    let mut sum = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            sum += *v;
        }
    }
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, row) in g.iter().enumerate() {
                for (j, &wt) in row.iter().enumerate() {
                    let wt = wt / sum;
                    let (p, q) = (a.get(x0 + j, y0 + i), b.get(x0 + j, y0 + i));
                    mx += wt * p;
                    my += wt * q;
                    sxx += wt * p * p;
                    syy += wt * q * q;
                    sxy += wt * p * q;
                }
            }
            let (vx, vy, cxy) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}

fn p8_metric_oracles() -> Outcome {
    let mut rng = stream_rng(SEED, 8);
    let mut ssim_err: f64 = 0.0;
    let mut rmse_err: f64 = 0.0;
    let raw = EvalOptions { margin: 0, symmetric: false };
    for _ in 0..20 {
        let a = RealField::from_fn(64, 64, |_, _| normal(&mut rng));
        let b = RealField::from_fn(64, 64, |x, y| a.get(x, y) + 0.5 * normal(&mut rng));
        let (lo, hi) = a.min_max();
        ssim_err = ssim_err.max((ssim_with_range(&b, &a, hi - lo).unwrap() - naive_ssim(&b, &a, hi - lo)).abs());
        let d: Vec<f64> = b.data().iter().zip(a.data()).map(|(p, q)| p - q).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let direct = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        rmse_err = rmse_err.max((rmse_phase(&b, &a, &raw).unwrap() - direct).abs());
    }
    let x = RealField::from_fn(64, 64, |x, y| ((x * y) as f64 * 0.01).sin());
    let self_ssim = ssim_phase(&x, &x, &EvalOptions::default()).unwrap();
    let shifted_rmse = rmse_phase(&x.map(|v| v + 1.7).unwrap(), &x, &EvalOptions::default()).unwrap();
    outcome(
        ssim_err < 1e-6 && rmse_err < 1e-12 && (self_ssim - 1.0).abs() < 1e-12 && shifted_rmse < 1e-12,
        format!(
            "metric oracles: SSIM vs naive {ssim_err:.1e}, RMSE vs direct {rmse_err:.1e}, SSIM(x,x) = {self_ssim}, RMSE(x,x+c) = {shifted_rmse:.1e}"
        ),
    )
}

fn cli(threads: &str, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_fringebos"))
        .env_remove("FRINGEBOS_THREADS")
        .arg("--threads")
        .arg(threads)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn collect_files(dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>, root: &Path) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect_files(&p, out, root);
        } else if !p.file_name().unwrap().to_string_lossy().ends_with("run_config.json") {
            out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
}

/// Every subcommand, run into `root`.
fn run_all(threads: &str, root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    cli(threads, &["simulate", "--preset", "m1-10db", "--speckle", "4", "--size", "192", "--seed", "9", "--out", &p("sim")])?;
    cli(threads, &["simulate", "--dataset", "3", "--size", "64", "--seed", "2", "--out", &p("dataset")])?;
    let input = p("sim/degraded.fpr");
    for m in ["subspace", "ft", "wft"] {
        cli(threads, &["demodulate", "--input", &input, "--truth", &p("sim/truth_phase.fpr"), "--method", m, "--out", &p(m)])?;
    }
    cli(threads, &["demodulate", "--input", &input, "--normalizer", "none", "--svd", "full", "--out", &p("full")])?;
    cli(threads, &["random-weights", "--depth", "4", "--base-channels", "4", "--input-size", "64", "--seed", "3", "--out", &p("w.fnw")])?;
    cli(threads, &["demodulate", "--input", &input, "--normalizer", "learned", "--weights", &p("w.fnw"), "--out", &p("learned")])?;
    cli(threads, &[
        "sweep", "--axis", "snr", "--values", "0,20", "--methods", "subspace,ft", "--trials", "3", "--size", "96",
        "--seed", "5", "--out", &p("sweep.csv"), "--png", &p("sweep.png"),
    ])?;
    cli(threads, &["synth-diffusion", "--noise-sd", "0.05", "--seed", "4", "--out", &p("seq")])?;
    cli(threads, &["fit-diffusion", "--frames", &p("seq"), "--out", &p("fit")])?;
    cli(threads, &["parity", "--emit-inputs", "--dir", &p("parity"), "--size", "64"])?;
    let w = load_weights(p("w.fnw")).map_err(|e| e.to_string())?;
    write_parity_outputs(&w, &root.join("parity"));
    cli(threads, &["parity", "--weights", &p("w.fnw"), "--dir", &p("parity")])
}

fn write_parity_outputs(w: &ModelWeights, dir: &Path) {
    for k in 0..PARITY_COUNT {
        let (pi, po) = parity_paths(dir, k);
        write_real(unet_forward(w, &read_real(&pi).unwrap()).unwrap().field(), &po).unwrap();
    }
}

fn p9_cli_determinism() -> Outcome {
    let t = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for threads in ["1", "8"] {
        let root = t.path().join(format!("t{threads}"));
        if let Err(e) = run_all(threads, &root) {
            return outcome(false, format!("CLI determinism: run failed: {e}"));
        }
        let mut files = BTreeMap::new();
        collect_files(&root, &mut files, &root);
        trees.push(files);
    }
    let differing: Vec<String> = trees[0]
        .iter()
        .filter(|(k, v)| trees[1].get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let same_set = trees[0].len() == trees[1].len();
    outcome(
        differing.is_empty() && same_set,
        format!(
            "CLI determinism: {} output files compared across --threads 1 and 8, {} differ{}",
            trees[0].len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" ({})", differing.join(", ")) }
        ),
    )
}

fn p10_power_vs_full() -> Outcome {
    let mut rng = stream_rng(SEED, 10);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 1000 {
        let boost = rng.random_range(0.0..3.0);
        let p: Vec<Complex64> = (0..11).map(|_| Complex64::new(normal(&mut rng), normal(&mut rng))).collect();
        let q: Vec<Complex64> = (0..11).map(|_| Complex64::new(normal(&mut rng), normal(&mut rng))).collect();
        let m: Vec<Complex64> = (0..121)
            .map(|i| Complex64::new(normal(&mut rng), normal(&mut rng)) + boost * p[i / 11] * q[i % 11].conj())
            .collect();
        let mut sv = jacobi_svd(&m, 11, 11).sigma;
        sv.sort_by(|a, b| b.total_cmp(a));
        if sv[0] / sv[1] <= 1.5 {
            continue;
        }
        let full = dominant_svd(&m, 11, 11, SvdMode::Full, 0).unwrap().sigma;
        let power = dominant_svd(&m, 11, 11, SvdMode::PowerIteration, 30).unwrap().sigma;
        worst = worst.max((full - power).abs());
        tested += 1;
    }
    let scene = build_scene(&preset("m1-20db").unwrap(), derive_seed(SEED, 10)).unwrap();
    let field = analytic_signal(&synth_fringe(&scene).unwrap());
    let time = |mode| {
        let cfg = SubspaceConfig { svd_mode: mode, ..Default::default() };
        let start = Instant::now();
        single_thread(|| demodulate_subspace(&field, &cfg).unwrap());
        start.elapsed()
    };
    let (tp, tf) = (time(SvdMode::PowerIteration), time(SvdMode::Full));
    let speedup = tf.as_secs_f64() / tp.as_secs_f64();
    outcome(
        worst < 1e-8 && speedup >= 3.0,
        format!(
            "power vs full SVD: max sigma1 gap {worst:.1e} on 1000 windows; 256x256 demodulation {} vs {} ({speedup:.1}x)",
            secs(tp),
            secs(tf)
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filter.is_empty() || filter.iter().any(|f| id.contains(f.as_str()) || f == "acceptance");
    let mut failed = Vec::new();
    let mut report = |id: &str, o: Outcome| {
        println!("{id} {} {}", if o.pass { "pass" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(id.to_string());
        }
    };
    let simple: [(&str, fn() -> Outcome); 4] =
        [("P1", p1_window_exactness), ("P2", p2_noiseless_end_to_end), ("P6", p6_unwrap_round_trip), ("P8", p8_metric_oracles)];
    for (id, f) in simple {
        if wanted(id) {
            report(id, f());
        }
    }
    if wanted("P3") || wanted("P4") {
        let scores = zero_db_scores(Normalizer::Classical, &[Method::Subspace, Method::Wft, Method::Ft]);
        if wanted("P3") {
            report("P3", p3_severe_noise(&scores));
        }
        if wanted("P4") {
            report("P4", p4_ordering(&scores));
        }
    }
    let rest: [(&str, fn() -> Outcome); 4] =
        [("P5", p5_speckle_sweep), ("P7", p7_diffusion_fit), ("P9", p9_cli_determinism), ("P10", p10_power_vs_full)];
    for (id, f) in rest {
        if wanted(id) {
            report(id, f());
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed ({})", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
