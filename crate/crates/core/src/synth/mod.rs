//! Per-pulse synthesis of dechirped complex IF samples.
//!
//! Signals are generated directly in the dechirped domain. A passive point at
//! range `R` is one tone at `(B/T)(2R/c)` starting at phase
//! `4π R f_c / c − π (B/T)(2R/c)²` at the pulse start. The transponder
//! contributes two tones, gated to the interval in which the chirp sweeps its
//! received slice. Tone `k` sits at `s_k + (B/T)(2R/c)` and, at the instant
//! the chirp enters the slice, has phase
//!
//! ```text
//! (f_Rx + f_Tx,k) 2πR/c + (s_k / f_XO) φ_n − π (B/T)(2R/c)²,   f_Tx,k = f_Rx + s_k
//! ```
//!
//! Hardware delays enter as a range bias `c τ / 2`. Phases are accumulated in
//! `f64` regardless of the output scalar.

pub mod dump;

use std::f64::consts::TAU;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{corner_rcs_dbsm, gen_trajectory, CornerTarget, GeometryError, PulseGeometry, Vec3};
use crate::scenario::{RadarParams, Scenario, TransponderParams};
use crate::txmodel::{gen_phase_noise, if_filter_gain_db, transponder_rcs_dbsm, PhaseNoiseTrack};
use crate::{rng, Scalar, SPEED_OF_LIGHT};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("transponder tone {tone} at {freq_hz:.0} Hz falls outside the IF band {lo:.0}..{hi:.0} Hz (frequency plan not validated for this range)")]
    ToneOutOfBand { tone: usize, freq_hz: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    #[serde(default)]
    pub scatterer_count: usize,
    /// Radius of the disc, centered on the transponder's ground position,
    /// that holds the scatterers.
    #[serde(default)]
    pub extent_m: f64,
    /// Mean of the exponentially distributed scatterer RCS.
    #[serde(default)]
    pub mean_rcs_dbsm: f64,
    #[serde(default = "default_clutter_label")]
    pub seed_label: String,
}

fn default_clutter_label() -> String {
    "clutter".into()
}

impl Default for ClutterSpec {
    fn default() -> Self {
        ClutterSpec {
            scatterer_count: 0,
            extent_m: 0.0,
            mean_rcs_dbsm: 0.0,
            seed_label: default_clutter_label(),
        }
    }
}

impl ClutterSpec {
    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.extent_m >= 0.0 && self.extent_m.is_finite()) {
            return Err("clutter extent must be >= 0");
        }
        if !self.mean_rcs_dbsm.is_finite() {
            return Err("clutter mean RCS must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position_m: Vec3,
    pub rcs_m2: f64,
}

/// Scatterers drawn uniformly over the clutter disc with exponential RCS.
pub fn gen_clutter(spec: &ClutterSpec, origin: Vec3, master_seed: u64) -> Vec<Scatterer> {
    let mut rng = rng::stream(master_seed, &spec.seed_label, 0);
    let mean = 10f64.powf(spec.mean_rcs_dbsm / 10.0);
    let exp = Exp::new(1.0).expect("unit rate");
    (0..spec.scatterer_count)
        .map(|_| {
            let r = spec.extent_m * rng.random::<f64>().sqrt();
            let a = TAU * rng.random::<f64>();
            let rcs: f64 = rng.sample(exp);
            Scatterer {
                position_m: [origin[0] + r * a.cos(), origin[1] + r * a.sin(), origin[2]],
                rcs_m2: mean * rcs,
            }
        })
        .collect()
}

/// Per-source contributions retained alongside the composite pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Components<T> {
    pub transponder: Vec<Complex<T>>,
    pub corners: Vec<Complex<T>>,
    pub clutter: Vec<Complex<T>>,
    pub noise: Vec<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseRecord<T> {
    pub pulse_index: usize,
    pub geometry: PulseGeometry<T>,
    pub samples: Vec<Complex<T>>,
    pub components: Option<Components<T>>,
}

/// Received power in W from the monostatic radar equation.
pub fn received_power_w(radar: &RadarParams, rcs_dbsm: f64, range_m: f64) -> f64 {
    let pt = 10f64.powf((radar.tx_power_dbm - 30.0) / 10.0);
    let g = 10f64.powf(radar.antenna_gain_dbi / 10.0);
    let lambda = radar.wavelength_m();
    let sigma = 10f64.powf(rcs_dbsm / 10.0);
    pt * g * g * lambda * lambda * sigma / ((4.0 * std::f64::consts::PI).powi(3) * range_m.powi(4))
}

/// Adds `amp · exp(i(phase0 + 2π f (n/fs − t0)))` for `n` in `range`.
///
/// Phases are re-anchored exactly every 256 samples; in between, a unit
/// phasor is rotated.
fn add_tone<T: Scalar>(buf: &mut [Complex<T>], range: std::ops::Range<usize>, amp: f64, phase0: f64, freq: f64, t0: f64, fs: f64) {
    const BLOCK: usize = 256;
    let p0 = phase0.rem_euclid(TAU);
    let step = Complex::from_polar(1.0, TAU * freq / fs);
    let mut n = range.start;
    while n < range.end {
        let cycles = freq * (n as f64 / fs - t0);
        let mut ph = Complex::from_polar(amp, p0 + TAU * (cycles - cycles.floor()));
        let stop = (n + BLOCK).min(range.end);
        for s in &mut buf[n..stop] {
            *s = *s + Complex::new(T::of(ph.re), T::of(ph.im));
            ph *= step;
        }
        n = stop;
    }
}

/// Clock phase seen by the transponder during one pulse.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClockPhase {
    pub phase_rad: f64,
    pub drift_rad_s: f64,
}

/// Parameters of one transponder tone, as synthesized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneTruth {
    pub freq_hz: f64,
    /// Phase at the gate reference instant, unwrapped.
    pub phase_rad: f64,
    pub amplitude: f64,
}

/// The two tones a transponder at `range_m` returns, plus the sample interval
/// they occupy.
pub fn transponder_tones(range_m: f64, radar: &RadarParams, xpdr: &TransponderParams, clock: ClockPhase, amplitude: f64) -> ([ToneTruth; 2], std::ops::Range<usize>) {
    let r_eff = range_m + xpdr.delay_bias_m(radar);
    let tau = 2.0 * r_eff / SPEED_OF_LIGHT;
    let slope = radar.chirp_slope();
    let f_rx = xpdr.f_rx();
    let rvp = std::f64::consts::PI * slope * tau * tau;
    let tones = xpdr.shifts().map(|s| {
        let scale = s / xpdr.xo_freq_hz;
        ToneTruth {
            freq_hz: s + slope * tau + scale * clock.drift_rad_s / TAU,
            phase_rad: (2.0 * f_rx + s) * TAU * r_eff / SPEED_OF_LIGHT + scale * clock.phase_rad - rvp,
            amplitude,
        }
    });
    let fs = radar.sample_rate_hz;
    let start = xpdr.gate_start_s(radar) + tau;
    let stop = start + xpdr.gate_duration_s(radar);
    let n = radar.samples_per_pulse();
    let a = ((start * fs).ceil().max(0.0) as usize).min(n);
    let b = ((stop * fs).ceil().max(0.0) as usize).min(n);
    (tones, a..b)
}

fn transponder_amplitude(range_m: f64, look_azimuth_deg: f64, radar: &RadarParams, xpdr: &TransponderParams) -> f64 {
    let g_ant = xpdr.antenna.gain_towards_db(look_azimuth_deg);
    let rcs = transponder_rcs_dbsm(g_ant, xpdr.chain_gain_db, radar.wavelength_m());
    // the retransmitted slice sits at the filter center
    let filt = 10f64.powf(if_filter_gain_db(&xpdr.if_filter, 0.0f64) / 20.0);
    received_power_w(radar, rcs, range_m).sqrt() * filt
}

fn add_transponder_echo<T: Scalar>(buf: &mut [Complex<T>], range_m: f64, look_azimuth_deg: f64, radar: &RadarParams, xpdr: &TransponderParams, clock: ClockPhase) -> Result<(), SynthError> {
    let amp = transponder_amplitude(range_m, look_azimuth_deg, radar, xpdr);
    let (tones, span) = transponder_tones(range_m, radar, xpdr, clock, amp);
    let [lo, hi] = radar.if_band_hz;
    for (k, t) in tones.iter().enumerate() {
        if t.freq_hz < lo || t.freq_hz > hi {
            return Err(SynthError::ToneOutOfBand {
                tone: k + 1,
                freq_hz: t.freq_hz,
                lo,
                hi,
            });
        }
    }
    let t_ref = xpdr.gate_start_s(radar);
    for t in &tones {
        add_tone(buf, span.clone(), t.amplitude, t.phase_rad, t.freq_hz, t_ref, radar.sample_rate_hz);
    }
    Ok(())
}

/// Two-tone transponder echo for one pulse.
pub fn synth_transponder_echo<T: Scalar>(range_m: f64, look_azimuth_deg: f64, radar: &RadarParams, xpdr: &TransponderParams, clock: ClockPhase) -> Result<Vec<Complex<T>>, SynthError> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); radar.samples_per_pulse()];
    add_transponder_echo(&mut buf, range_m, look_azimuth_deg, radar, xpdr, clock)?;
    Ok(buf)
}

/// Start phase and frequency of a passive point echo at `range_m`.
pub fn point_tone(range_m: f64, radar: &RadarParams) -> (f64, f64) {
    let r_eff = range_m + SPEED_OF_LIGHT * radar.rx_hardware_delay_s / 2.0;
    let tau = 2.0 * r_eff / SPEED_OF_LIGHT;
    let slope = radar.chirp_slope();
    let phase = 2.0 * TAU * r_eff * radar.carrier_hz / SPEED_OF_LIGHT - std::f64::consts::PI * slope * tau * tau;
    (slope * tau, phase)
}

fn add_point_echo<T: Scalar>(buf: &mut [Complex<T>], range_m: f64, rcs_dbsm: f64, radar: &RadarParams) {
    let amp = received_power_w(radar, rcs_dbsm, range_m).sqrt();
    let (freq, phase) = point_tone(range_m, radar);
    let n = buf.len();
    add_tone(buf, 0..n, amp, phase, freq, 0.0, radar.sample_rate_hz);
}

/// Single-tone echo of a passive point target over the whole pulse.
pub fn synth_point_echo<T: Scalar>(range_m: f64, rcs_dbsm: f64, radar: &RadarParams) -> Vec<Complex<T>> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); radar.samples_per_pulse()];
    add_point_echo(&mut buf, range_m, rcs_dbsm, radar);
    buf
}

/// Echo of a corner reflector seen from `look_azimuth_deg`.
pub fn synth_corner_echo<T: Scalar>(corner: &CornerTarget, range_m: f64, look_azimuth_deg: f64, radar: &RadarParams) -> Vec<Complex<T>> {
    let rcs = corner_rcs_dbsm(corner, look_azimuth_deg, radar.wavelength_m());
    synth_point_echo(range_m, rcs, radar)
}

fn add_noise<T: Scalar>(buf: &mut [Complex<T>], power_w: f64, master_seed: u64, pulse_index: usize) {
    let mut rng = rng::stream(master_seed, "thermal", pulse_index as u64);
    let sd = (power_w / 2.0).sqrt();
    for s in buf.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s = *s + Complex::new(T::of(re * sd), T::of(im * sd));
    }
}

/// Complex white Gaussian noise of total variance `power_w` per sample,
/// drawn from the thermal stream of `pulse_index`.
pub fn synth_noise<T: Scalar>(len: usize, power_w: f64, master_seed: u64, pulse_index: usize) -> Vec<Complex<T>> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    add_noise(&mut buf, power_w, master_seed, pulse_index);
    buf
}

/// Precomputed state for synthesizing every pulse of a scenario.
///
/// Construction runs the sequential passes (trajectory, clutter draw, clock
/// phase track); [`Synthesizer::pulse`] is then independent per pulse.
#[derive(Debug, Clone)]
pub struct Synthesizer<'a> {
    pub scenario: &'a Scenario,
    pub geometry: Vec<PulseGeometry<f64>>,
    pub clutter: Vec<Scatterer>,
    pub phase_noise: PhaseNoiseTrack<f64>,
    keep_components: bool,
}

impl<'a> Synthesizer<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, SynthError> {
        let targets = scenario.target_positions();
        let geometry = gen_trajectory::<f64>(&scenario.trajectory, scenario.radar.prf_hz, scenario.pulse_count, scenario.transponder.position_m, &targets)?;
        let clutter = gen_clutter(&scenario.clutter, scenario.transponder.position_m, scenario.master_seed);
        let times: Vec<f64> = geometry.iter().map(|g| g.time_s).collect();
        let phase_noise = gen_phase_noise(&scenario.transponder.phase_noise, &times, scenario.master_seed);
        Ok(Synthesizer {
            scenario,
            geometry,
            clutter,
            phase_noise,
            keep_components: false,
        })
    }

    /// Replace the generated clock phase track.
    pub fn with_phase_noise(mut self, track: PhaseNoiseTrack<f64>) -> Self {
        assert_eq!(track.len(), self.geometry.len());
        self.phase_noise = track;
        self
    }

    pub fn keep_components(mut self, keep: bool) -> Self {
        self.keep_components = keep;
        self
    }

    pub fn pulse_count(&self) -> usize {
        self.geometry.len()
    }

    pub fn clock(&self, k: usize) -> ClockPhase {
        ClockPhase {
            phase_rad: self.phase_noise.phase_rad[k],
            drift_rad_s: self.phase_noise.drift_rad_s[k],
        }
    }

    /// Composite pulse `k`: transponder + corners + clutter + thermal noise.
    pub fn pulse<T: Scalar>(&self, k: usize) -> Result<PulseRecord<T>, SynthError> {
        let s = self.scenario;
        let radar = &s.radar;
        let g = &self.geometry[k];
        let n = radar.samples_per_pulse();
        let zero = || vec![Complex::new(T::zero(), T::zero()); n];

        let mut xp = zero();
        if s.transponder.enabled {
            add_transponder_echo(&mut xp, g.slant_range_m[0], g.look_azimuth_deg[0], radar, &s.transponder, self.clock(k))?;
        }
        let mut corners = zero();
        for (i, c) in s.corners.iter().enumerate() {
            let rcs = corner_rcs_dbsm(c, g.look_azimuth_deg[i + 1], radar.wavelength_m());
            add_point_echo(&mut corners, g.slant_range_m[i + 1], rcs, radar);
        }
        let mut clutter = zero();
        for sc in &self.clutter {
            let p = g.platform;
            let d = [p[0] - sc.position_m[0], p[1] - sc.position_m[1], p[2] - sc.position_m[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            add_point_echo(&mut clutter, r, 10.0 * sc.rcs_m2.log10(), radar);
        }
        let mut noise = zero();
        if radar.thermal_noise {
            add_noise(&mut noise, radar.noise_power_w(), s.master_seed, k);
        }

        let samples = (0..n).map(|i| xp[i] + corners[i] + clutter[i] + noise[i]).collect();
        let components = self.keep_components.then_some(Components {
            transponder: xp,
            corners,
            clutter,
            noise,
        });
        Ok(PulseRecord {
            pulse_index: k,
            geometry: cast_geometry(g),
            samples,
            components,
        })
    }
}

pub fn cast_geometry<T: Scalar>(g: &PulseGeometry<f64>) -> PulseGeometry<T> {
    PulseGeometry {
        pulse_index: g.pulse_index,
        time_s: T::of(g.time_s),
        platform: g.platform.map(T::of),
        slant_range_m: g.slant_range_m.iter().map(|&r| T::of(r)).collect(),
        look_azimuth_deg: g.look_azimuth_deg.iter().map(|&a| T::of(a)).collect(),
    }
}

/// Synthesizes pulse `pulse_index` of `scenario` from scratch.
pub fn synth_pulse<T: Scalar>(scenario: &Scenario, pulse_index: usize) -> Result<PulseRecord<T>, SynthError> {
    Synthesizer::new(scenario)?.pulse(pulse_index)
}
