use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fringebos::normalize::{load_weights, parity_paths, unet_forward, PARITY_COUNT};
use fringebos::raster::{read_real, write_real};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fringebos"));
    c.env_remove("FRINGEBOS_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn ok(args: &[&str]) {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let t = tempfile::tempdir().unwrap();
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    for (dir, seed) in [(&a, "4"), (&b, "4"), (&c, "5")] {
        ok(&["simulate", "--preset", "m1-20db", "--size", "128", "--seed", seed, "--out", s(dir)]);
    }
    let read = |d: &Path| fs::read(d.join("degraded.fpr")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    for f in ["truth_phase.fpr", "degraded.png", "manifest.json", "run_config.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(a.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["subcommand"], "simulate");
    assert_eq!(cfg["seed"], 4);
}

#[test]
fn usage_errors_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let csv = t.path().join("x.csv");
    assert_eq!(code(&["sweep", "--axis", "snr", "--values", "", "--out", s(&csv)]), 2);
    assert_eq!(code(&["sweep", "--axis", "blur", "--values", "1", "--out", s(&csv)]), 2);
    assert_eq!(code(&["simulate", "--no-such-flag"]), 2);
    assert_eq!(code(&["fit-diffusion", "--frames", s(&t.path().join("none")), "--out", s(t.path())]), 2);
    let img = t.path().join("img");
    ok(&["simulate", "--size", "128", "--out", s(&img)]);
    let input = img.join("degraded.fpr");
    let out = t.path().join("d");
    assert_eq!(code(&["demodulate", "--input", s(&input), "--out", s(&out), "--normalizer", "learned"]), 2);
    assert_eq!(code(&["demodulate", "--input", s(&input), "--out", s(&out), "--method", "wavelet"]), 2);
}

#[test]
fn missing_frame_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let seq = t.path().join("seq");
    ok(&["synth-diffusion", "--width", "512", "--height", "64", "--times", "100,200,300", "--out", s(&seq)]);
    fs::remove_file(seq.join("frame_01.fpr")).unwrap();
    let args = ["fit-diffusion", "--frames", s(&seq), "--pair", "0,2", "--rows", "10,20", "--window", "200..312"];
    assert_eq!(code(&[&args[..], &["--out", s(&t.path().join("fit"))]].concat()), 2);
}

#[test]
fn data_and_numeric_errors() {
    let t = tempfile::tempdir().unwrap();
    let bogus = t.path().join("bogus.fpr");
    fs::write(&bogus, b"not a raster").unwrap();
    assert_eq!(code(&["demodulate", "--input", s(&bogus), "--out", s(t.path())]), 3);
    assert_eq!(code(&["demodulate", "--input", s(&t.path().join("absent.fpr")), "--out", s(t.path())]), 3);
    let flat = t.path().join("flat.fpr");
    write_real(&fringebos::raster::RealField::filled(128, 128, 0.4), &flat).unwrap();
    assert_eq!(code(&["demodulate", "--input", s(&flat), "--out", s(&t.path().join("o"))]), 4);
}

#[test]
fn diffusion_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let (seq, fit) = (t.path().join("seq"), t.path().join("fit"));
    ok(&["synth-diffusion", "--d", "1.5e-9", "--out", s(&seq)]);
    ok(&["fit-diffusion", "--frames", s(&seq), "--out", s(&fit)]);
    let sum: serde_json::Value = serde_json::from_slice(&fs::read(fit.join("summary.json")).unwrap()).unwrap();
    let d = sum["mean_D"].as_f64().unwrap();
    assert!((d / 1.5e-9 - 1.0).abs() < 0.01, "{d}");
    let csv = fs::read_to_string(fit.join("fits.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("row,D,A,x0,r2"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn learned_normalizer_and_parity() {
    let t = tempfile::tempdir().unwrap();
    let w = t.path().join("w.fnw");
    ok(&["random-weights", "--depth", "4", "--base-channels", "4", "--input-size", "64", "--seed", "2", "--out", s(&w)]);
    assert!(t.path().join("w.run_config.json").is_file());

    let img = t.path().join("img");
    ok(&["simulate", "--size", "96", "--out", s(&img)]);
    let out = t.path().join("d");
    let input = img.join("degraded.fpr");
    ok(&["demodulate", "--input", s(&input), "--out", s(&out), "--normalizer", "learned", "--weights", s(&w)]);
    let n = read_real(out.join("normalized.fpr")).unwrap();
    assert_eq!(n.dims(), (96, 96));
    assert!(n.data().iter().all(|v| v.abs() <= 1.0));

    let par = t.path().join("parity");
    ok(&["parity", "--emit-inputs", "--dir", s(&par), "--size", "64"]);
    assert_eq!(code(&["parity", "--weights", s(&w), "--dir", s(&par)]), 3);
    let weights = load_weights(&w).unwrap();
    for k in 0..PARITY_COUNT {
        let (pi, po) = parity_paths(&par, k);
        write_real(unet_forward(&weights, &read_real(&pi).unwrap()).unwrap().field(), &po).unwrap();
    }
    ok(&["parity", "--weights", s(&w), "--dir", s(&par)]);
    let (_, po) = parity_paths(&par, 3);
    let bumped = read_real(&po).unwrap().map(|v| v + 5e-4).unwrap();
    write_real(&bumped, &po).unwrap();
    assert_eq!(code(&["parity", "--weights", s(&w), "--dir", s(&par)]), 4);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let t = tempfile::tempdir().unwrap();
    let img = t.path().join("img");
    ok(&["simulate", "--preset", "m2-20db", "--size", "128", "--out", s(&img)]);
    let input = img.join("degraded.fpr");
    let mut results = Vec::new();
    for threads in ["1", "4"] {
        let out = t.path().join(format!("d{threads}"));
        ok(&["--threads", threads, "demodulate", "--input", s(&input), "--out", s(&out), "--method", "wft"]);
        results.push(fs::read(out.join("wrapped.fpr")).unwrap());
    }
    assert_eq!(results[0], results[1]);
    let out = t.path().join("env");
    let o = bin()
        .env("FRINGEBOS_THREADS", "3")
        .args(["--threads", "1", "demodulate", "--input", s(&input), "--out", s(&out), "--method", "wft"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["threads"], 3);
    assert_eq!(fs::read(out.join("wrapped.fpr")).unwrap(), results[0]);
}
