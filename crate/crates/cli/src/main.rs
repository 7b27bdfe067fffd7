//! `xpdrsim` command-line driver.
//!
//! Exit codes: 0 success, 1 a check failed (plan validation), 2 bad input
//! (unreadable or invalid scenario, malformed run directory, I/O failure).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use xpdrsim::dsp::Window;
use xpdrsim::estim::RangeTrack;
use xpdrsim::pipeline::{self, PipelineConfig, PulseAnalysis};
use xpdrsim::report::{self, ErrorReport, Spectrogram, SpectrogramConfig, DEFAULT_MSTD_WINDOW};
use xpdrsim::scenario::{self, bundled, Scenario};
use xpdrsim::synth::dump::{DumpHeader, DumpReader, DumpWriter};
use xpdrsim::synth::Synthesizer;
use xpdrsim::Sample;

const DUMP_FILE: &str = "pulses.xpdr";
const SCENARIO_FILE: &str = "scenario.toml";
const MANIFEST_FILE: &str = "manifest.json";
/// Pulses synthesized or analysed per parallel batch.
const BATCH: usize = 64;

#[derive(Parser)]
#[command(name = "xpdrsim", version, about = "Two-tone transponder FMCW SAR simulator and range estimator")]
struct Cli {
    /// Worker threads for pulse-level parallelism (default: all cores).
    #[arg(long, global = true, env = "XPDRSIM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize raw pulses, truth track and manifest into a run directory.
    Simulate(SimulateArgs),
    /// Estimate range tracks from a simulated run; writes tracks, reports and
    /// a spectrogram.
    Estimate(EstimateArgs),
    /// Check a scenario's frequency plan; exit 1 if any rule fails.
    ValidatePlan(ValidatePlanArgs),
    /// Moving-std and summary reports from track CSV files.
    Report(ReportArgs),
    /// Spectrogram of a simulated run.
    Spectrogram(SpectrogramArgs),
}

/// Scenario file, or the name of a bundled scenario (linear_paper,
/// circular_paper), given positionally or with --scenario.
#[derive(Args)]
struct ScenarioArg {
    #[arg(value_name = "SCENARIO", required_unless_present = "scenario", conflicts_with = "scenario")]
    positional: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
}

impl ScenarioArg {
    fn get(&self) -> &str {
        self.scenario.as_deref().or(self.positional.as_deref()).expect("clap requires one")
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Run directory to create or overwrite.
    #[arg(long, short)]
    out: PathBuf,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's pulse count.
    #[arg(long)]
    pulses: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Run directory written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Moving-std window, pulses.
    #[arg(long, default_value_t = DEFAULT_MSTD_WINDOW)]
    window: usize,
    #[command(flatten)]
    spectrum: SpectrumArgs,
}

#[derive(Args)]
struct ValidatePlanArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Largest range the plan must cover (default: farthest target over the
    /// whole trajectory).
    #[arg(long)]
    max_range_m: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Track CSV files; each file's stem names its target.
    #[arg(long, required = true, num_args = 1..)]
    track: Vec<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MSTD_WINDOW)]
    window: usize,
}

#[derive(Args)]
struct SpectrogramArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    spectrum: SpectrumArgs,
}

#[derive(Args, Clone)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 1024)]
    fft_size: usize,
    #[arg(long, default_value_t = 0.0)]
    band_lo_hz: f64,
    #[arg(long, default_value_t = 30e6)]
    band_hi_hz: f64,
    /// Range below the peak mapped to black in the PGM.
    #[arg(long, default_value_t = 60.0)]
    dynamic_db: f64,
}

impl SpectrumArgs {
    fn config(&self) -> Result<SpectrogramConfig> {
        if self.fft_size < 2 {
            bail!("--fft-size must be >= 2");
        }
        if !(self.band_hi_hz > self.band_lo_hz) {
            bail!("--band-hi-hz must exceed --band-lo-hz");
        }
        Ok(SpectrogramConfig {
            fft_size: self.fft_size,
            window: Window::Hann,
            band_hz: (self.band_lo_hz, self.band_hi_hz),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct OutputEntry {
    file: String,
    bytes: u64,
    sha256: String,
}

/// Run record. Holds no wall-clock time so that identical inputs give a
/// byte-identical manifest.
#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: String,
    scenario_sha256: String,
    master_seed: u64,
    pulse_count: usize,
    inputs: Vec<OutputEntry>,
    outputs: Vec<OutputEntry>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_entry(dir: &Path, name: &str) -> Result<OutputEntry> {
    let path = dir.join(name);
    let mut hasher = Sha256::new();
    let mut f = File::open(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(OutputEntry {
        file: name.to_string(),
        bytes,
        sha256: hex(&hasher.finalize()),
    })
}

fn write_manifest(dir: &Path, command: &str, scenario: &Scenario, inputs: Vec<OutputEntry>, outputs: &[String]) -> Result<()> {
    let text = scenario.to_toml()?;
    let manifest = Manifest {
        tool: "xpdrsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        scenario_sha256: hex(&Sha256::digest(text.as_bytes())),
        master_seed: scenario.master_seed,
        pulse_count: scenario.pulse_count,
        inputs,
        outputs: outputs.iter().map(|o| file_entry(dir, o)).collect::<Result<_>>()?,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(())
}

/// Reads a scenario from a path or a bundled name, without validating.
fn read_scenario_arg(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if !path.exists() {
        match arg.strip_suffix(".scenario").unwrap_or(arg) {
            "linear_paper" => return Ok(bundled::linear_paper()),
            "circular_paper" => return Ok(bundled::circular_paper()),
            _ => {}
        }
    }
    Ok(scenario::read_scenario(path)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn buffered(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let mut s = read_scenario_arg(args.scenario.get())?;
    if let Some(seed) = args.seed {
        s.master_seed = seed;
    }
    if let Some(n) = args.pulses {
        s.pulse_count = n;
    }
    s.validate()?;
    let synth = Synthesizer::new(&s)?;
    create_dir(&args.out)?;
    scenario::save_scenario(&s, args.out.join(SCENARIO_FILE))?;

    let header = DumpHeader {
        pulse_count: u32::try_from(s.pulse_count).context("pulse count exceeds the dump format limit")?,
        samples_per_pulse: u32::try_from(s.radar.samples_per_pulse()).context("pulse length exceeds the dump format limit")?,
        sample_rate_hz: s.radar.sample_rate_hz,
    };
    let mut dump = DumpWriter::new(buffered(&args.out.join(DUMP_FILE))?, header)?;
    for start in (0..s.pulse_count).step_by(BATCH) {
        let end = (start + BATCH).min(s.pulse_count);
        let batch = (start..end).into_par_iter().map(|k| synth.pulse::<f64>(k)).collect::<Result<Vec<_>, _>>()?;
        for p in &batch {
            dump.write_pulse(&p.samples)?;
        }
        info!("synthesized {end}/{} pulses", s.pulse_count);
    }
    dump.finish()?.flush()?;

    let mut truth = buffered(&args.out.join("truth.csv"))?;
    write!(truth, "pulse_index,time_s,platform_x_m,platform_y_m,platform_z_m")?;
    let names = target_names(&s);
    for n in &names {
        write!(truth, ",{n}_range_m,{n}_azimuth_deg")?;
    }
    writeln!(truth)?;
    for g in &synth.geometry {
        write!(truth, "{},{:.6},{:.6},{:.6},{:.6}", g.pulse_index, g.time_s, g.platform[0], g.platform[1], g.platform[2])?;
        for (r, a) in g.slant_range_m.iter().zip(&g.look_azimuth_deg) {
            write!(truth, ",{r:.9},{a:.6}")?;
        }
        writeln!(truth)?;
    }
    truth.flush()?;

    let outputs = [SCENARIO_FILE, DUMP_FILE, "truth.csv"].map(String::from);
    write_manifest(&args.out, "simulate", &s, Vec::new(), &outputs)?;
    println!("wrote {} pulses to {}", s.pulse_count, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn target_names(s: &Scenario) -> Vec<String> {
    let mut n = vec!["transponder".to_string()];
    n.extend((0..s.corners.len()).map(|i| format!("corner{i}")));
    n
}

struct Run {
    scenario: Scenario,
    reader: DumpReader<BufReader<File>>,
    inputs: Vec<OutputEntry>,
}

fn open_run(dir: &Path) -> Result<Run> {
    let s = scenario::load_scenario(dir.join(SCENARIO_FILE))?;
    let path = dir.join(DUMP_FILE);
    let reader = DumpReader::new(BufReader::new(File::open(&path).with_context(|| format!("opening {}", path.display()))?))?;
    let h = reader.header();
    if h.pulse_count as usize != s.pulse_count || h.samples_per_pulse as usize != s.radar.samples_per_pulse() || h.sample_rate_hz != s.radar.sample_rate_hz {
        bail!(
            "{} ({} pulses x {} samples at {} Hz) does not match {SCENARIO_FILE}",
            path.display(),
            h.pulse_count,
            h.samples_per_pulse,
            h.sample_rate_hz
        );
    }
    let inputs = vec![file_entry(dir, SCENARIO_FILE)?, file_entry(dir, DUMP_FILE)?];
    Ok(Run { scenario: s, reader, inputs })
}

/// Streams the dump in batches, handing each batch to `f`.
fn for_each_batch(run: &mut Run, mut f: impl FnMut(usize, Vec<Vec<Sample>>) -> Result<()>) -> Result<()> {
    let n = run.scenario.pulse_count;
    for start in (0..n).step_by(BATCH) {
        let end = (start + BATCH).min(n);
        let mut batch = Vec::with_capacity(end - start);
        for _ in start..end {
            batch.push(run.reader.read_pulse::<f64>()?.context("dump ended early")?);
        }
        f(start, batch)?;
        info!("processed {end}/{n} pulses");
    }
    Ok(())
}

fn write_spectrogram(dir: &Path, sg: &Spectrogram<f64>, dynamic_db: f64) -> Result<Vec<String>> {
    let mut csv = buffered(&dir.join("spectrogram.csv"))?;
    sg.write_csv(&mut csv)?;
    csv.flush()?;
    let mut pgm = buffered(&dir.join("spectrogram.pgm"))?;
    sg.write_pgm(&mut pgm, dynamic_db)?;
    pgm.flush()?;
    Ok(vec!["spectrogram.csv".into(), "spectrogram.pgm".into()])
}

fn write_reports(dir: &Path, named: &[(String, &RangeTrack<f64>)], window: usize) -> Result<Vec<String>> {
    let reports: Vec<(String, ErrorReport<f64>)> = named.iter().map(|(n, t)| (n.clone(), ErrorReport::from_track(t, window))).collect();
    let refs: Vec<(&str, &ErrorReport<f64>)> = reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let mut out = buffered(&dir.join("report.csv"))?;
    report::write_report_csv(&refs, &mut out)?;
    out.flush()?;
    let mut out = buffered(&dir.join("mstd.csv"))?;
    report::write_mstd_csv(&refs, &mut out)?;
    out.flush()?;
    Ok(vec!["report.csv".into(), "mstd.csv".into()])
}

fn cmd_estimate(args: &EstimateArgs) -> Result<ExitCode> {
    if args.window < 2 {
        bail!("--window must be >= 2");
    }
    let sg_cfg = args.spectrum.config()?;
    let mut run = open_run(&args.run)?;
    let s = run.scenario.clone();
    let synth = Synthesizer::new(&s)?;
    let cfg = PipelineConfig::default();
    let mut analyses: Vec<PulseAnalysis<f64>> = Vec::with_capacity(s.pulse_count);
    let mut rows = Vec::with_capacity(s.pulse_count);
    for_each_batch(&mut run, |start, batch| {
        let (a, sg): (Vec<_>, Vec<_>) = batch
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let a = pipeline::analyze_pulse(&s, &synth.geometry[start + i], x, &cfg);
                let sg = report::spectrogram([x.as_slice()], s.radar.sample_rate_hz, &sg_cfg);
                (a, sg)
            })
            .unzip();
        analyses.extend(a);
        rows.extend(sg);
        Ok(())
    })?;
    let (transponder, corners) = pipeline::assemble_tracks(&s, &synth.geometry, &analyses, &cfg);

    create_dir(&args.out)?;
    let names = target_names(&s);
    let mut named: Vec<(String, &RangeTrack<f64>)> = Vec::new();
    if let Some(t) = &transponder {
        named.push((names[0].clone(), t));
    }
    named.extend(corners.iter().enumerate().map(|(i, c)| (names[i + 1].clone(), c)));
    let mut outputs = Vec::new();
    for (name, track) in &named {
        let file = format!("track_{name}.csv");
        let mut out = buffered(&args.out.join(&file))?;
        report::write_track_csv(track, &mut out)?;
        out.flush()?;
        outputs.push(file);
        if !track.warnings.is_empty() {
            log::warn!("{name}: {} unwrap-ambiguity warnings", track.warnings.len());
        }
    }
    outputs.extend(write_reports(&args.out, &named, args.window)?);

    let sg = Spectrogram {
        freqs_hz: rows.first().map(|r| r.freqs_hz.clone()).unwrap_or_default(),
        rows_db: rows.into_iter().flat_map(|r| r.rows_db).collect(),
    };
    outputs.extend(write_spectrogram(&args.out, &sg, args.spectrum.dynamic_db)?);
    write_manifest(&args.out, "estimate", &s, run.inputs, &outputs)?;
    for (name, t) in &named {
        println!("{name}: {}/{} valid pulses, {} gaps", t.valid_count(), t.rows.len(), t.gaps().len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_spectrogram(args: &SpectrogramArgs) -> Result<ExitCode> {
    let cfg = args.spectrum.config()?;
    let mut run = open_run(&args.run)?;
    let fs = run.scenario.radar.sample_rate_hz;
    let mut sg = Spectrogram {
        freqs_hz: Vec::new(),
        rows_db: Vec::new(),
    };
    for_each_batch(&mut run, |_, batch| {
        let part = report::spectrogram(batch.iter().map(Vec::as_slice), fs, &cfg);
        sg.freqs_hz = part.freqs_hz;
        sg.rows_db.extend(part.rows_db);
        Ok(())
    })?;
    create_dir(&args.out)?;
    let outputs = write_spectrogram(&args.out, &sg, args.spectrum.dynamic_db)?;
    let s = run.scenario.clone();
    write_manifest(&args.out, "spectrogram", &s, run.inputs, &outputs)?;
    println!("{} pulses x {} bins", sg.rows_db.len(), sg.freqs_hz.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate_plan(args: &ValidatePlanArgs) -> Result<ExitCode> {
    let s = read_scenario_arg(args.scenario.get())?;
    s.validate_structure()?;
    let max_r = args.max_range_m.unwrap_or_else(|| s.max_slant_range_m());
    let r = scenario::validate_plan(&s.radar, &s.transponder, max_r);
    print!("{r}");
    if r.passed() {
        println!("plan OK");
        Ok(ExitCode::SUCCESS)
    } else {
        let names: Vec<&str> = r.failures().map(|c| c.rule.label()).collect();
        println!("plan FAILED: {}", names.join(", "));
        Ok(ExitCode::from(1))
    }
}

#[derive(Deserialize)]
struct TrackCsvRow {
    pulse_index: usize,
    time_s: f64,
    truth_m: Option<f64>,
    r_abs_m: Option<f64>,
    r_rel_m: Option<f64>,
    valid: u8,
    snr1_db: Option<f64>,
    snr2_db: Option<f64>,
}

fn read_track(path: &Path) -> Result<RangeTrack<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for r in rdr.deserialize::<TrackCsvRow>() {
        let r = r.with_context(|| format!("parsing {}", path.display()))?;
        rows.push(xpdrsim::estim::TrackRow {
            pulse_index: r.pulse_index,
            time_s: r.time_s,
            truth_m: r.truth_m,
            r_abs_m: r.r_abs_m,
            r_rel_m: r.r_rel_m,
            valid: r.valid != 0,
            snr1_db: r.snr1_db,
            snr2_db: r.snr2_db,
        });
    }
    Ok(RangeTrack {
        rows,
        ambiguity_m: f64::NAN,
        rel_anchored: true,
        warnings: Vec::new(),
    })
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    if args.window < 2 {
        bail!("--window must be >= 2");
    }
    let mut tracks = Vec::new();
    for p in &args.track {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("track");
        let name = name.strip_prefix("track_").unwrap_or(name).to_string();
        tracks.push((name, read_track(p)?));
    }
    create_dir(&args.out)?;
    let named: Vec<(String, &RangeTrack<f64>)> = tracks.iter().map(|(n, t)| (n.clone(), t)).collect();
    write_reports(&args.out, &named, args.window)?;
    println!("wrote report.csv and mstd.csv to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Error chain joined with ": ", skipping causes already quoted by the
/// message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !out.ends_with(&c) {
            out.push_str(": ");
            out.push_str(&c);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::ValidatePlan(a) => cmd_validate_plan(a),
        Command::Report(a) => cmd_report(a),
        Command::Spectrogram(a) => cmd_spectrogram(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
