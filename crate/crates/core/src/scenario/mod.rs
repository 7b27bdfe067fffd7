//! Scenario configuration: radar, transponder, targets, clutter, trajectory.
//!
//! Scenario files are TOML. All frequencies are in Hz, lengths in m, times in
//! s and gains in dB. [`load_scenario`] parses and validates; [`parse_scenario`]
//! only parses, which is what the plan checker wants so that it can report
//! rule violations itself.

mod plan;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plan::{validate_plan, validate_plan_with_margin, PlanCheck, PlanReport, PlanRule, DEFAULT_STABILITY_MARGIN_DB};

pub use crate::geometry::{AntennaKind, AntennaPattern, Assembly, CornerTarget, TrajectorySpec, Vec3};
pub use crate::synth::ClutterSpec;
pub use crate::txmodel::{IfFilterSpec, PhaseNoiseKind, PhaseNoiseSpec};
use crate::SPEED_OF_LIGHT;

/// A named invariant violation, with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(Violation),
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    pub carrier_hz: f64,
    pub chirp_bandwidth_hz: f64,
    pub pulse_width_s: f64,
    #[serde(default = "default_prf")]
    pub prf_hz: f64,
    pub if_band_hz: [f64; 2],
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    #[serde(default)]
    pub rx_hardware_delay_s: f64,
    /// Add receiver thermal noise to synthesized pulses.
    #[serde(default = "default_true")]
    pub thermal_noise: bool,
}

fn default_prf() -> f64 {
    1000.0
}

fn default_sample_rate() -> f64 {
    62.5e6
}

fn default_true() -> bool {
    true
}

impl RadarParams {
    /// Chirp slope B/T in Hz/s.
    pub fn chirp_slope(&self) -> f64 {
        self.chirp_bandwidth_hz / self.pulse_width_s
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Lowest RF frequency of the sweep; the chirp runs from here up by B.
    pub fn sweep_start_hz(&self) -> f64 {
        self.carrier_hz - self.chirp_bandwidth_hz / 2.0
    }

    pub fn samples_per_pulse(&self) -> usize {
        (self.pulse_width_s * self.sample_rate_hz).round() as usize
    }

    /// Dechirped beat frequency of a point at range `r_m`: (B/T)(2R/c).
    pub fn beat_hz(&self, r_m: f64) -> f64 {
        self.chirp_slope() * 2.0 * r_m / SPEED_OF_LIGHT
    }

    /// Range whose beat is `f_hz`.
    pub fn range_of_beat(&self, f_hz: f64) -> f64 {
        f_hz * SPEED_OF_LIGHT / (2.0 * self.chirp_slope())
    }

    /// Receiver thermal noise power per complex sample, W.
    pub fn noise_power_w(&self) -> f64 {
        crate::BOLTZMANN * crate::T0_KELVIN * 10f64.powf(self.noise_figure_db / 10.0) * self.sample_rate_hz
    }

    fn check(&self, out: &mut Vec<Violation>) {
        let mut bad = |field: &str, rule: &str| {
            out.push(Violation {
                field: format!("radar.{field}"),
                rule: rule.into(),
            })
        };
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            bad("carrier_hz", "carrier must be positive");
        }
        if !(self.chirp_bandwidth_hz > 0.0 && self.pulse_width_s > 0.0) || !(self.chirp_slope().is_finite() && self.chirp_slope() > 0.0) {
            bad("chirp_bandwidth_hz", "chirp slope B/T must be finite and positive");
        }
        if !(self.chirp_bandwidth_hz < 2.0 * self.carrier_hz) {
            bad("chirp_bandwidth_hz", "sweep must stay above 0 Hz");
        }
        if !(self.prf_hz > 0.0) {
            bad("prf_hz", "PRF must be positive");
        } else if self.pulse_width_s > 1.0 / self.prf_hz {
            bad("pulse_width_s", "pulse width must not exceed the pulse repetition interval");
        }
        let [lo, hi] = self.if_band_hz;
        if !(lo >= 0.0 && hi > lo) {
            bad("if_band_hz", "IF band must satisfy high > low >= 0");
        }
        if !(self.sample_rate_hz >= hi) {
            bad("sample_rate_hz", "complex sample rate must be >= IF band high edge");
        }
        if self.samples_per_pulse() < 8 {
            bad("sample_rate_hz", "pulse must contain at least 8 samples");
        }
        if !(self.rx_hardware_delay_s >= 0.0) {
            bad("rx_hardware_delay_s", "hardware delay must be >= 0");
        }
        for (f, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                bad(f, "must be finite");
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransponderParams {
    /// Include the transponder echo in synthesized pulses.
    #[serde(default = "default_true")]
    pub enabled: bool,
    pub position_m: Vec3,
    /// RF slice the transponder receives (low, high).
    pub rx_slice_hz: [f64; 2],
    /// Post-dechirp offset of tone 1.
    pub shift1_hz: f64,
    /// Post-dechirp offset of tone 2.
    pub shift2_hz: f64,
    #[serde(default)]
    pub if_filter: IfFilterSpec,
    pub chain_gain_db: f64,
    #[serde(default = "default_xo")]
    pub xo_freq_hz: f64,
    #[serde(default)]
    pub phase_noise: PhaseNoiseSpec,
    pub antenna: AntennaPattern,
    #[serde(default)]
    pub hardware_delay_s: f64,
}

fn default_xo() -> f64 {
    100e6
}

impl TransponderParams {
    /// Center of the received slice, f_Rx.
    pub fn f_rx(&self) -> f64 {
        (self.rx_slice_hz[0] + self.rx_slice_hz[1]) / 2.0
    }

    pub fn slice_width_hz(&self) -> f64 {
        self.rx_slice_hz[1] - self.rx_slice_hz[0]
    }

    pub fn shifts(&self) -> [f64; 2] {
        [self.shift1_hz, self.shift2_hz]
    }

    /// Transmitted tone frequencies f_Tx,k = f_Rx + s_k.
    pub fn f_tx(&self) -> [f64; 2] {
        [self.f_rx() + self.shift1_hz, self.f_rx() + self.shift2_hz]
    }

    /// Tone weight ratio s1/s2 used by the phase combination.
    pub fn tone_ratio(&self) -> f64 {
        self.shift1_hz / self.shift2_hz
    }

    /// Time within the pulse at which the chirp enters the received slice;
    /// also the phase reference instant of the tones.
    pub fn gate_start_s(&self, radar: &RadarParams) -> f64 {
        (self.rx_slice_hz[0] - radar.sweep_start_hz()) / radar.chirp_slope()
    }

    /// Time the chirp spends inside the received slice, T × (slice / B).
    pub fn gate_duration_s(&self, radar: &RadarParams) -> f64 {
        self.slice_width_hz() / radar.chirp_slope()
    }

    /// Range bias produced by radar and transponder hardware delays.
    pub fn delay_bias_m(&self, radar: &RadarParams) -> f64 {
        SPEED_OF_LIGHT * (radar.rx_hardware_delay_s + self.hardware_delay_s) / 2.0
    }

    fn check(&self, radar: &RadarParams, strict_plan: bool, out: &mut Vec<Violation>) {
        let mut bad = |field: &str, rule: &str| {
            out.push(Violation {
                field: format!("transponder.{field}"),
                rule: rule.into(),
            })
        };
        let [lo, hi] = self.rx_slice_hz;
        if !(lo > 0.0 && hi >= lo) {
            bad("rx_slice_hz", "slice must satisfy high >= low > 0");
        }
        if lo < radar.sweep_start_hz() || hi > radar.sweep_start_hz() + radar.chirp_bandwidth_hz {
            bad("rx_slice_hz", "slice must lie inside the radar sweep");
        }
        if !(self.shift1_hz > 0.0 && self.shift2_hz > 0.0) {
            bad("shift1_hz", "tone shifts must be positive post-dechirp offsets");
        }
        if self.shift1_hz == self.shift2_hz {
            bad("shift2_hz", "two-tone constraint: shift1 and shift2 must differ");
        }
        if strict_plan && !(self.slice_width_hz() < self.shift1_hz.abs().min(self.shift2_hz.abs())) {
            bad("rx_slice_hz", "bandwidth<shift rule: slice width must be narrower than the smallest shift");
        }
        if !(self.xo_freq_hz > 0.0) {
            bad("xo_freq_hz", "reference clock frequency must be positive");
        }
        if !self.chain_gain_db.is_finite() {
            bad("chain_gain_db", "chain gain must be finite");
        }
        if !(self.hardware_delay_s >= 0.0) {
            bad("hardware_delay_s", "hardware delay must be >= 0");
        }
        if let Err(e) = self.if_filter.check() {
            bad("if_filter", e);
        }
        if !(self.phase_noise.strength >= 0.0 && self.phase_noise.strength.is_finite()) {
            bad("phase_noise.strength", "phase-noise strength must be >= 0");
        }
        if let Err(e) = check_antenna(&self.antenna) {
            bad("antenna", e);
        }
    }
}

fn check_antenna(a: &AntennaPattern) -> Result<(), &'static str> {
    if !a.peak_gain_dbi.is_finite() {
        return Err("peak gain must be finite");
    }
    if a.kind == AntennaKind::Horn && !matches!(a.hpbw_deg, Some(w) if w > 0.0 && w <= 360.0) {
        return Err("horn requires hpbw_deg in (0, 360]");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pulse_count: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub radar: RadarParams,
    pub transponder: TransponderParams,
    #[serde(default)]
    pub corners: Vec<CornerTarget>,
    #[serde(default)]
    pub clutter: ClutterSpec,
    pub trajectory: TrajectorySpec,
}

impl Scenario {
    /// Every invariant violation, in a stable order.
    pub fn violations(&self) -> Vec<Violation> {
        self.collect_violations(true)
    }

    fn collect_violations(&self, strict_plan: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.pulse_count < 1 {
            out.push(Violation {
                field: "pulse_count".into(),
                rule: "pulse_count must be >= 1".into(),
            });
        }
        self.radar.check(&mut out);
        self.transponder.check(&self.radar, strict_plan, &mut out);
        for (i, c) in self.corners.iter().enumerate() {
            if let Err(e) = c.check() {
                out.push(Violation {
                    field: format!("corners[{i}]"),
                    rule: e.into(),
                });
            }
        }
        let mut positions = vec![self.transponder.position_m];
        positions.extend(self.corners.iter().map(|c| c.position_m));
        for i in 0..positions.len() {
            for j in 0..i {
                if positions[i] == positions[j] {
                    out.push(Violation {
                        field: "corners".into(),
                        rule: "all target positions must be distinct".into(),
                    });
                }
            }
        }
        if let Err(e) = self.trajectory.check() {
            out.push(Violation {
                field: "trajectory".into(),
                rule: e.to_string(),
            });
        }
        if let TrajectorySpec::Linear {
            path_length_m,
            speed_mps,
            ..
        } = self.trajectory
        {
            let covered = self.pulse_count.saturating_sub(1) as f64 * speed_mps / self.radar.prf_hz;
            if covered > path_length_m {
                out.push(Violation {
                    field: "pulse_count".into(),
                    rule: format!("trajectory overrun: pulses cover {covered:.2} m of a {path_length_m} m path"),
                });
            }
        }
        if let Err(e) = self.clutter.check() {
            out.push(Violation {
                field: "clutter".into(),
                rule: e.into(),
            });
        } else if self.clutter.scatterer_count > 0 && self.radar.chirp_slope() > 0.0 {
            let origin = self.transponder.position_m;
            let far = self.trajectory.max_distance_to(origin, origin) + self.clutter.extent_m;
            let beat = self.radar.beat_hz(far + SPEED_OF_LIGHT * self.radar.rx_hardware_delay_s / 2.0);
            let lowest = self.transponder.shift1_hz.min(self.transponder.shift2_hz);
            if beat >= lowest {
                out.push(Violation {
                    field: "clutter.extent_m".into(),
                    rule: format!("clutter beats reach {:.3} MHz, must stay below the transponder band at {:.3} MHz", beat / 1e6, lowest / 1e6),
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self.violations().into_iter().next() {
            Some(v) => Err(ScenarioError::Invalid(v)),
            None => Ok(()),
        }
    }

    /// Validation minus the frequency-plan rules that [`validate_plan`] reports.
    pub fn validate_structure(&self) -> Result<(), ScenarioError> {
        match self.collect_violations(false).into_iter().next() {
            Some(v) => Err(ScenarioError::Invalid(v)),
            None => Ok(()),
        }
    }

    /// All target positions: transponder first, then corners.
    pub fn target_positions(&self) -> Vec<Vec3> {
        let mut p = vec![self.transponder.position_m];
        p.extend(self.corners.iter().map(|c| c.position_m));
        p
    }

    /// Largest slant range from any point of the trajectory to any target.
    pub fn max_slant_range_m(&self) -> f64 {
        let center = self.transponder.position_m;
        self.target_positions()
            .into_iter()
            .map(|p| self.trajectory.max_distance_to(center, p))
            .fold(0.0, f64::max)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string_pretty(self).map_err(|e| ScenarioError::Serialize(e.to_string()))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let s = read_scenario(path)?;
    s.validate()?;
    Ok(s)
}

/// Reads and parses a scenario file without validating it.
pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml()?).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Bundled replica scenarios. Values not given by the experiment description
/// (PRF, sample rate, powers, clock, platform speed) are guesses.
pub mod bundled {
    pub const LINEAR_PAPER: &str = include_str!("../../scenarios/linear_paper.scenario");
    pub const CIRCULAR_PAPER: &str = include_str!("../../scenarios/circular_paper.scenario");

    pub fn linear_paper() -> super::Scenario {
        super::parse_scenario(LINEAR_PAPER).expect("bundled scenario parses")
    }

    pub fn circular_paper() -> super::Scenario {
        super::parse_scenario(CIRCULAR_PAPER).expect("bundled scenario parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_validate() {
        let lin = bundled::linear_paper();
        lin.validate().unwrap();
        assert_eq!(lin.radar.chirp_bandwidth_hz, 500e6);
        assert_eq!(lin.radar.pulse_width_s, 450e-6);
        assert_eq!(lin.transponder.shifts(), [20e6, 25e6]);
        bundled::circular_paper().validate().unwrap();
    }

    #[test]
    fn bundled_gate_timing() {
        let s = bundled::linear_paper();
        let x = &s.transponder;
        assert!((x.gate_duration_s(&s.radar) - 9e-6).abs() < 1e-15);
        assert!((x.gate_start_s(&s.radar) - 103.5e-6).abs() < 1e-12);
        assert_eq!(x.f_rx(), 9.62e9);
        assert_eq!(s.radar.samples_per_pulse(), 28125);
    }

    #[test]
    fn equal_shifts_rejected() {
        let mut s = bundled::linear_paper();
        s.transponder.shift2_hz = s.transponder.shift1_hz;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("two-tone"), "{err}");
    }

    #[test]
    fn wide_slice_rejected() {
        let mut s = bundled::linear_paper();
        s.transponder.rx_slice_hz = [9.6e9, 9.625e9];
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("bandwidth<shift"), "{err}");
        s.validate_structure().unwrap();
    }

    #[test]
    fn duplicate_positions_rejected() {
        let mut s = bundled::linear_paper();
        s.corners[0].position_m = s.transponder.position_m;
        assert!(s.violations().iter().any(|v| v.rule.contains("distinct")));
    }

    #[test]
    fn overrun_rejected() {
        let mut s = bundled::linear_paper();
        s.pulse_count = 1_000_000;
        assert!(s.violations().iter().any(|v| v.rule.contains("overrun")));
    }

    #[test]
    fn malformed_text_is_parse_error() {
        assert!(matches!(parse_scenario("pulse_count = \"x\""), Err(ScenarioError::Parse(_))));
        assert!(matches!(parse_scenario("not toml ]["), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn toml_round_trip() {
        for s in [bundled::linear_paper(), bundled::circular_paper()] {
            let back = parse_scenario(&s.to_toml().unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }
}
