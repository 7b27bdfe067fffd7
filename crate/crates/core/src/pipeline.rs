//! End-to-end run: synthesis, per-pulse detection, track assembly.
//!
//! Pulses are independent once the synthesizer has been built, so synthesis
//! and detection run as a parallel map over pulse indices; unwrapping and
//! reporting are sequential passes over the collected observations. Results
//! do not depend on the thread count.

use num_complex::Complex;
use rayon::prelude::*;

use crate::estim::{self, DetectConfig, DetectError, PointObservation, RangeTrack, RelativeOptions, ToneObservation};
use crate::geometry::PulseGeometry;
use crate::scenario::Scenario;
use crate::synth::{PulseRecord, SynthError, Synthesizer};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub detect: DetectConfig,
    pub relative: RelativeOptions,
    /// Corner search band is the geometric range prediction ± this margin.
    pub corner_margin_m: f64,
    /// Keep every synthesized pulse in the output.
    pub keep_pulses: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detect: DetectConfig::default(),
            relative: RelativeOptions::default(),
            corner_margin_m: 10.0,
            keep_pulses: false,
        }
    }
}

/// Detections for one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseAnalysis<T> {
    pub transponder: Option<Result<ToneObservation<T>, DetectError>>,
    pub corners: Vec<Result<PointObservation<T>, DetectError>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub transponder: Option<RangeTrack<T>>,
    pub corners: Vec<RangeTrack<T>>,
    pub pulses: Vec<PulseRecord<T>>,
}

/// Runs detection on one pulse. `geometry` supplies the predicted corner
/// ranges that centre each corner's search band.
pub fn analyze_pulse<T: Scalar>(scenario: &Scenario, geometry: &PulseGeometry<f64>, samples: &[Complex<T>], cfg: &PipelineConfig) -> PulseAnalysis<T> {
    let k = geometry.pulse_index;
    let transponder = scenario
        .transponder
        .enabled
        .then(|| estim::detect_tones(samples, k, &scenario.transponder, &scenario.radar, &cfg.detect));
    let corners = (0..scenario.corners.len())
        .map(|i| {
            let r = geometry.slant_range_m[i + 1];
            let band = estim::point_band_hz(&scenario.radar, r - cfg.corner_margin_m, r + cfg.corner_margin_m);
            estim::detect_point_tone(samples, k, &scenario.radar, band, &cfg.detect)
        })
        .collect();
    PulseAnalysis { transponder, corners }
}

/// Builds the transponder and corner tracks from per-pulse analyses.
pub fn assemble_tracks<T: Scalar>(scenario: &Scenario, geometry: &[PulseGeometry<f64>], analyses: &[PulseAnalysis<T>], cfg: &PipelineConfig) -> (Option<RangeTrack<T>>, Vec<RangeTrack<T>>) {
    let times: Vec<T> = geometry.iter().map(|g| T::of(g.time_s)).collect();
    let truth = |i: usize| -> Vec<T> { geometry.iter().map(|g| T::of(g.slant_range_m[i])).collect() };
    let transponder = scenario.transponder.enabled.then(|| {
        let det: Vec<_> = analyses.iter().map(|a| a.transponder.clone().expect("transponder analysed")).collect();
        estim::transponder_track(&det, &times, Some(&truth(0)), &scenario.transponder, &scenario.radar, &cfg.relative)
    });
    let corners = (0..scenario.corners.len())
        .map(|i| {
            let det: Vec<_> = analyses.iter().map(|a| a.corners[i].clone()).collect();
            estim::point_track(&det, &times, Some(&truth(i + 1)), &scenario.radar, &cfg.relative)
        })
        .collect();
    (transponder, corners)
}

/// Synthesizes and processes every pulse of the scenario in memory.
pub fn run<T: Scalar>(synth: &Synthesizer<'_>, cfg: &PipelineConfig) -> Result<RunOutput<T>, SynthError> {
    let scenario = synth.scenario;
    let results: Vec<(PulseAnalysis<T>, Option<PulseRecord<T>>)> = (0..synth.pulse_count())
        .into_par_iter()
        .map(|k| {
            let p = synth.pulse::<T>(k)?;
            let a = analyze_pulse(scenario, &synth.geometry[k], &p.samples, cfg);
            Ok((a, cfg.keep_pulses.then_some(p)))
        })
        .collect::<Result<_, SynthError>>()?;
    let (analyses, pulses): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (transponder, corners) = assemble_tracks(scenario, &synth.geometry, &analyses, cfg);
    Ok(RunOutput {
        transponder,
        corners,
        pulses: pulses.into_iter().flatten().collect(),
    })
}

/// [`run`] on a freshly built synthesizer.
pub fn run_scenario<T: Scalar>(scenario: &Scenario, cfg: &PipelineConfig) -> Result<RunOutput<T>, SynthError> {
    run(&Synthesizer::new(scenario)?, cfg)
}
