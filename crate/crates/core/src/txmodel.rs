//! Behavioral transponder model: equivalent RCS, IF filter magnitude response
//! and the shared reference-clock phase-noise process.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::AntennaPattern;
use crate::rng;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfFilterSpec {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub rolloff_order: u32,
    pub cascade_count: u32,
    pub ultimate_rejection_db: f64,
}

impl Default for IfFilterSpec {
    fn default() -> Self {
        IfFilterSpec {
            center_hz: 480e6,
            bandwidth_hz: 10e6,
            rolloff_order: 6,
            cascade_count: 2,
            ultimate_rejection_db: 40.0,
        }
    }
}

impl IfFilterSpec {
    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.bandwidth_hz > 0.0) {
            return Err("IF filter bandwidth must be positive");
        }
        if self.rolloff_order < 1 {
            return Err("IF filter rolloff order must be >= 1");
        }
        if self.cascade_count < 1 {
            return Err("IF filter cascade count must be >= 1");
        }
        if !(self.ultimate_rejection_db >= 0.0) {
            return Err("IF filter ultimate rejection must be >= 0 dB");
        }
        Ok(())
    }
}

/// Equivalent RCS of an amplifying transponder, `λ² G_ant² G_amp / 4π`, in dBsm.
///
/// `antenna_gain_dbi` is the gain towards the radar; the same antenna is used
/// for reception and retransmission.
pub fn transponder_rcs_dbsm<T: Scalar>(antenna_gain_dbi: T, chain_gain_db: T, wavelength_m: T) -> T {
    let ten = T::of(10.0);
    let base = wavelength_m * wavelength_m / (T::of(4.0) * T::PI());
    ten * base.log10() + T::of(2.0) * antenna_gain_dbi + chain_gain_db
}

/// Same as [`transponder_rcs_dbsm`] using the antenna's peak gain.
pub fn transponder_peak_rcs_dbsm(antenna: &AntennaPattern, chain_gain_db: f64, wavelength_m: f64) -> f64 {
    transponder_rcs_dbsm(antenna.peak_gain_dbi, chain_gain_db, wavelength_m)
}

/// Relative gain of the IF filter cascade at `offset_hz` from its center.
///
/// Flat (0 dB) for `|offset| <= bw/2`. Beyond, each stage attenuates
/// `10 log10(1 + x^(2n))` dB with `x = (|offset| - bw/2) / (bw/2)` and `n` the
/// rolloff order, saturating at the ultimate rejection. Stages add in dB.
pub fn if_filter_gain_db<T: Scalar>(spec: &IfFilterSpec, offset_hz: T) -> T {
    let half = T::of(spec.bandwidth_hz / 2.0);
    let off = offset_hz.abs();
    if off <= half {
        return T::zero();
    }
    let x = (off - half) / half;
    let stage = (T::of(10.0) * (T::one() + x.powi(2 * spec.rolloff_order as i32)).log10())
        .min(T::of(spec.ultimate_rejection_db));
    -(T::of(spec.cascade_count as f64) * stage)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseNoiseKind {
    #[default]
    Off,
    RandomWalk,
    OneOverF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseSpec {
    pub kind: PhaseNoiseKind,
    /// Random-walk diffusion in rad²/s. For `one_over_f` this is the total
    /// variance rate of the approximating process bank at its fastest pole.
    #[serde(default)]
    pub strength: f64,
    #[serde(default = "default_pn_label")]
    pub seed_label: String,
    /// Model a linear phase drift inside each pulse equal to the local slope
    /// of the track. Off by default.
    #[serde(default)]
    pub intra_pulse_drift: bool,
}

fn default_pn_label() -> String {
    "xo-phase-noise".into()
}

impl Default for PhaseNoiseSpec {
    fn default() -> Self {
        PhaseNoiseSpec {
            kind: PhaseNoiseKind::Off,
            strength: 0.0,
            seed_label: default_pn_label(),
            intra_pulse_drift: false,
        }
    }
}

impl PhaseNoiseSpec {
    pub fn random_walk(strength: f64) -> Self {
        PhaseNoiseSpec {
            kind: PhaseNoiseKind::RandomWalk,
            strength,
            ..Default::default()
        }
    }
}

/// Clock phase φ_n at each pulse start.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseTrack<T> {
    pub phase_rad: Vec<T>,
    /// Intra-pulse drift in rad/s; all zero unless drift is modeled.
    pub drift_rad_s: Vec<T>,
}

impl<T: Scalar> PhaseNoiseTrack<T> {
    pub fn zeros(n: usize) -> Self {
        PhaseNoiseTrack {
            phase_rad: vec![T::zero(); n],
            drift_rad_s: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.phase_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_rad.is_empty()
    }
}

/// Scale applied to the clock phase on a tone shifted by `shift_hz` when the
/// reference oscillator runs at `xo_hz`.
pub fn phase_noise_scale(shift_hz: f64, xo_hz: f64) -> f64 {
    shift_hz / xo_hz
}

/// Generates the clock phase track in one sequential pass.
///
/// Random walk: `φ(t₀) = 0`, `φ(t_{k+1}) = φ(t_k) + N(0, strength·Δt)`.
/// One-over-f: a bank of five Ornstein-Uhlenbeck processes with poles spaced
/// a decade apart from `1/Δt_mean` downwards, each with equal per-decade
/// variance, which approximates a 1/f spectrum over those decades.
pub fn gen_phase_noise<T: Scalar>(spec: &PhaseNoiseSpec, pulse_times: &[T], master_seed: u64) -> PhaseNoiseTrack<T> {
    let n = pulse_times.len();
    if spec.kind == PhaseNoiseKind::Off || spec.strength == 0.0 || n == 0 {
        return PhaseNoiseTrack::zeros(n);
    }
    debug_assert!(pulse_times.windows(2).all(|w| w[1] > w[0]), "pulse times must increase");
    let mut rng = rng::stream(master_seed, &spec.seed_label, 0);
    let mut phase = Vec::with_capacity(n);
    match spec.kind {
        PhaseNoiseKind::Off => unreachable!(),
        PhaseNoiseKind::RandomWalk => {
            let mut acc = 0.0f64;
            phase.push(0.0);
            for w in pulse_times.windows(2) {
                let dt = (w[1] - w[0]).to_f64_lossy();
                let z: f64 = rng.sample(StandardNormal);
                acc += z * (spec.strength * dt).sqrt();
                phase.push(acc);
            }
        }
        PhaseNoiseKind::OneOverF => {
            let span = (pulse_times[n - 1] - pulse_times[0]).to_f64_lossy();
            let mean_dt = if n > 1 { span / (n - 1) as f64 } else { 1.0 };
            let poles: Vec<f64> = (0..5).map(|d| 1.0 / (mean_dt * 10f64.powi(d))).collect();
            let mut state = [0.0f64; 5];
            phase.push(0.0);
            for w in pulse_times.windows(2) {
                let dt = (w[1] - w[0]).to_f64_lossy();
                let mut sum = 0.0;
                for (s, &lambda) in state.iter_mut().zip(&poles) {
                    // exact OU update; stationary variance strength / (2 λ) per pole
                    let a = (-lambda * dt).exp();
                    let var = spec.strength / (2.0 * lambda) * (1.0 - a * a);
                    let z: f64 = rng.sample(StandardNormal);
                    *s = a * *s + z * var.sqrt();
                    sum += *s;
                }
                phase.push(sum);
            }
        }
    }

    let drift = if spec.intra_pulse_drift && n > 1 {
        (0..n)
            .map(|k| {
                let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
                let dt = (pulse_times[b] - pulse_times[a]).to_f64_lossy();
                T::of((phase[b] - phase[a]) / dt)
            })
            .collect()
    } else {
        vec![T::zero(); n]
    };

    PhaseNoiseTrack {
        phase_rad: phase.into_iter().map(T::of).collect(),
        drift_rad_s: drift,
    }
}
