use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn xpdrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xpdrsim"))
        .args(args)
        .env("XPDRSIM_THREADS", "2")
        .output()
        .expect("spawn xpdrsim")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("run");
    let mut args = vec!["simulate", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = xpdrsim(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

/// Bundled linear scenario with `edit` applied to its TOML text.
fn edited_scenario(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let base = simulate_text(dir);
    let path = dir.join(name);
    fs::write(&path, edit(base)).unwrap();
    path
}

fn simulate_text(dir: &Path) -> String {
    let run = dir.join("base");
    if !run.exists() {
        let o = xpdrsim(&["simulate", "--scenario", "linear_paper", "--pulses", "1", "--out", run.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    fs::read_to_string(run.join("scenario.toml")).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn same_seed_gives_identical_manifests() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["linear_paper.scenario", "--seed", "7", "--pulses", "20"];
    let ra = simulate(a.path(), &args);
    let rb = simulate(b.path(), &args);
    let ma = fs::read(ra.join("manifest.json")).unwrap();
    let mb = fs::read(rb.join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(fs::read(ra.join("pulses.xpdr")).unwrap(), fs::read(rb.join("pulses.xpdr")).unwrap());

    let c = TempDir::new().unwrap();
    let rc = simulate(c.path(), &["--scenario", "linear_paper", "--seed", "8", "--pulses", "20"]);
    assert_ne!(fs::read(rc.join("pulses.xpdr")).unwrap(), fs::read(ra.join("pulses.xpdr")).unwrap());
}

#[test]
fn pulses_override_sets_dump_and_truth_length() {
    let d = TempDir::new().unwrap();
    let run = simulate(d.path(), &["--scenario", "circular_paper", "--pulses", "7"]);
    let truth = fs::read_to_string(run.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 8);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["pulse_count"], 7);
    // 32-byte header, then 28125 complex f32 samples per pulse.
    let bytes = fs::metadata(run.join("pulses.xpdr")).unwrap().len();
    assert_eq!(bytes, 32 + 7 * 28125 * 8);
}

#[test]
fn invalid_scenario_exits_2_and_names_the_invariant() {
    let d = TempDir::new().unwrap();
    let bad = edited_scenario(d.path(), "bad.toml", |t| t.replace("shift2_hz = 25000000.0", "shift2_hz = 20000000.0"));
    let o = xpdrsim(&["simulate", "--scenario", bad.to_str().unwrap(), "--out", d.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("transponder.shift2_hz"), "{err}");
    assert!(err.contains("two-tone"), "{err}");

    let garbage = d.path().join("garbage.toml");
    fs::write(&garbage, "pulse_count = \"many\"\n").unwrap();
    let o = xpdrsim(&["simulate", "--scenario", garbage.to_str().unwrap(), "--out", d.path().join("y").to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let o = xpdrsim(&["simulate", "--scenario", "no_such_file.toml", "--out", d.path().join("z").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_plan_exit_codes() {
    let o = xpdrsim(&["validate-plan", "--scenario", "linear_paper"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("plan OK"));
    let o = xpdrsim(&["validate-plan", "--scenario", "circular_paper"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let d = TempDir::new().unwrap();
    let wide = edited_scenario(d.path(), "wide.toml", |t| t.replace("9615000000.0", "9600000000.0"));
    let o = xpdrsim(&["validate-plan", "--scenario", wide.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("plan FAILED: (a)"), "{out}");

    let o = xpdrsim(&["validate-plan", "--scenario", "linear_paper", "--max-range-m", "1500"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL (b)"), "{out}");
    assert!(!out.contains("FAIL (a)"), "{out}");
}

#[test]
fn estimate_report_and_spectrogram() {
    let d = TempDir::new().unwrap();
    let run = simulate(d.path(), &["--scenario", "linear_paper", "--pulses", "24"]);
    let est = d.path().join("est");
    let o = xpdrsim(&["estimate", "--run", run.to_str().unwrap(), "--out", est.to_str().unwrap(), "--window", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["track_transponder.csv", "track_corner0.csv", "track_corner1.csv", "report.csv", "mstd.csv", "spectrogram.csv", "spectrogram.pgm", "manifest.json"] {
        assert!(est.join(f).exists(), "missing {f}");
    }

    let track = fs::read_to_string(est.join("track_transponder.csv")).unwrap();
    let truth: Vec<f64> = column(&track, "truth_m").iter().map(|v| v.parse().unwrap()).collect();
    let abs: Vec<f64> = column(&track, "r_abs_m").iter().map(|v| v.parse().unwrap()).collect();
    let rel: Vec<f64> = column(&track, "r_rel_m").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(abs.len(), 24);
    for i in 0..24 {
        assert!((abs[i] - truth[i]).abs() < 1.0, "pulse {i}: {} vs {}", abs[i], truth[i]);
        assert!((rel[i] - truth[i]).abs() < 1.0);
    }

    let report = fs::read_to_string(est.join("report.csv")).unwrap();
    assert_eq!(column(&report, "target"), ["transponder", "corner0", "corner1"]);
    assert_eq!(column(&report, "valid_pulses"), ["24", "24", "24"]);
    // 24 pulses, window 8: 17 windows per target.
    let mstd = fs::read_to_string(est.join("mstd.csv")).unwrap();
    assert_eq!(column(&mstd, "target").iter().filter(|t| *t == "transponder").count(), 17);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(est.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert!(manifest["inputs"].as_array().unwrap().iter().any(|e| e["file"] == "pulses.xpdr"));

    let rep = d.path().join("rep");
    let o = xpdrsim(&[
        "report",
        "--track",
        est.join("track_transponder.csv").to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
        "--window",
        "8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Recomputed from the rounded CSV track, so agreement is to the printed precision.
    let again = fs::read_to_string(rep.join("report.csv")).unwrap();
    let a: Vec<&str> = again.lines().nth(1).unwrap().split(',').collect();
    let b: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(a[..6], b[..6]);
    for (x, y) in a[6..].iter().zip(&b[6..]) {
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }

    let sp = d.path().join("sp");
    let o = xpdrsim(&["spectrogram", "--run", run.to_str().unwrap(), "--out", sp.to_str().unwrap(), "--fft-size", "512"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pgm = fs::read(sp.join("spectrogram.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    let csv = fs::read_to_string(sp.join("spectrogram.csv")).unwrap();
    assert_eq!(csv.lines().count(), 25);
}

#[test]
fn relative_range_ignores_transponder_clock_noise() {
    let d = TempDir::new().unwrap();
    // Corner and clutter returns leak into the tone fit with a phase that
    // moves with the clock, so only the transponder is kept.
    let quiet = |t: String, strength: &str| {
        let (head, tail) = t.split_once("[[corners]]").unwrap();
        let t = format!("{head}{}", &tail[tail.find("[clutter]").unwrap()..]);
        t.replace("thermal_noise = true", "thermal_noise = false")
            .replace("scatterer_count = 16", "scatterer_count = 0")
            .replace("strength = 10.0", &format!("strength = {strength}"))
    };
    let off = edited_scenario(d.path(), "off.toml", |t| quiet(t, "0.0"));
    let on = edited_scenario(d.path(), "on.toml", |t| quiet(t, "1000.0"));
    let mut rel = Vec::new();
    for (name, sc) in [("off", &off), ("on", &on)] {
        let run = d.path().join(format!("run_{name}"));
        let est = d.path().join(format!("est_{name}"));
        let o = xpdrsim(&["simulate", "--scenario", sc.to_str().unwrap(), "--pulses", "30", "--out", run.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = xpdrsim(&["estimate", "--run", run.to_str().unwrap(), "--out", est.to_str().unwrap(), "--window", "10"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let track = fs::read_to_string(est.join("track_transponder.csv")).unwrap();
        rel.push(column(&track, "r_rel_m").iter().map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>());
    }
    for (a, b) in rel[0].iter().zip(&rel[1]) {
        // f32 dump samples round differently once the tone phases move.
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn malformed_run_directory_exits_2() {
    let d = TempDir::new().unwrap();
    let o = xpdrsim(&["estimate", "--run", d.path().to_str().unwrap(), "--out", d.path().join("e").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
