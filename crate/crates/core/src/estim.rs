//! Tone detection and range estimation.
//!
//! Per pulse, the transponder gate is cropped, windowed and transformed; the
//! strongest peak in each tone's search band gives a coarse frequency, and a
//! weighted least-squares fit over the interval the tones actually occupy
//! refines frequencies and start phases.
//!
//! Absolute range comes from the tone frequencies. Relative range comes from
//! the start phases combined as `(φ1 − k φ2) / (1 − k)` with `k = s1/s2`,
//! which cancels the transponder clock phase, plus the residual video phase
//! computed from the absolute range. The phase-derived range is ambiguous
//! modulo `c / (2 f_Rx)` and is unwrapped pulse to pulse.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{self, Window};
use crate::scenario::{RadarParams, TransponderParams};
use crate::{Scalar, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub window: Window,
    /// Search band of tone k is `[s_k − below_shift_hz, s_k + beat_budget_hz]`.
    pub beat_budget_hz: f64,
    pub below_shift_hz: f64,
    pub snr_threshold_db: f64,
    /// Extra time after the nominal gate kept in the coarse crop, covering
    /// the round-trip delay.
    pub coarse_margin_s: f64,
    /// Samples within this distance of the estimated tone edges are dropped
    /// from the fine fit.
    pub edge_guard_s: f64,
    pub coarse_pad: usize,
    pub fine_pad: usize,
    pub max_iter: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            window: Window::Hann,
            beat_budget_hz: 5e6,
            below_shift_hz: 0.5e6,
            snr_threshold_db: 10.0,
            coarse_margin_s: 4e-6,
            edge_guard_s: 50e-9,
            coarse_pad: 4,
            fine_pad: 16,
            max_iter: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("tone {tone} not found (SNR {snr_db:.1} dB below threshold)")]
    ToneNotFound { tone: usize, snr_db: f64, snrs_db: [f64; 2] },
    #[error("tone spacing {spacing_hz:.0} Hz deviates more than 20% from the planned {planned_hz:.0} Hz")]
    Spacing { spacing_hz: f64, planned_hz: f64, snrs_db: [f64; 2] },
    #[error("analysis window holds only {0} samples")]
    Window(usize),
    #[error("tone fit did not converge")]
    Fit,
}

impl DetectError {
    /// Per-tone SNR measured before the detection was rejected.
    pub fn snrs_db(&self) -> [f64; 2] {
        match *self {
            DetectError::ToneNotFound { snrs_db, .. } | DetectError::Spacing { snrs_db, .. } => snrs_db,
            _ => [f64::NAN; 2],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EstimError {
    #[error("relative ranging needs at least 2 valid observations, got {0}")]
    TooFewObservations(usize),
}

/// Frequencies and start phases of the two transponder tones in one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneObservation<T> {
    pub pulse_index: usize,
    pub f1_hz: T,
    pub f2_hz: T,
    /// Phase at the gate reference instant, in (−π, π].
    pub phi1_rad: T,
    pub phi2_rad: T,
    pub snr1_db: T,
    pub snr2_db: T,
}

/// Single-tone observation of a passive point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointObservation<T> {
    pub pulse_index: usize,
    pub freq_hz: T,
    /// Phase at the pulse start, in (−π, π].
    pub phase_rad: T,
    pub snr_db: T,
}

fn bin_range(lo_hz: f64, hi_hz: f64, fs: f64, len: usize) -> (usize, usize) {
    let nyq = len / 2;
    let lo = ((lo_hz.max(0.0) * len as f64 / fs).ceil() as usize).min(nyq);
    let hi = ((hi_hz.max(0.0) * len as f64 / fs).floor() as usize + 1).min(nyq);
    (lo, hi.max(lo))
}

struct Peak<T> {
    freq_hz: T,
    snr_db: T,
}

fn band_peak<T: Scalar>(power: &[T], lo_hz: f64, hi_hz: f64, fs: f64) -> Option<Peak<T>> {
    let len = power.len();
    let (lo, hi) = bin_range(lo_hz, hi_hz, fs, len);
    let k = dsp::peak_index(power, lo, hi)?;
    let floor = dsp::noise_floor(&power[lo..hi]);
    let snr_db = if floor > T::zero() {
        dsp::to_db(power[k] / floor)
    } else {
        T::infinity()
    };
    Some(Peak {
        freq_hz: dsp::interpolate_log_peak(power, k) * T::of(fs / len as f64),
        snr_db,
    })
}

/// Detects both transponder tones in one pulse.
pub fn detect_tones<T: Scalar>(samples: &[Complex<T>], pulse_index: usize, xpdr: &TransponderParams, radar: &RadarParams, cfg: &DetectConfig) -> Result<ToneObservation<T>, DetectError> {
    let fs = radar.sample_rate_hz;
    let n_total = samples.len();
    let t_ref = xpdr.gate_start_s(radar);
    let gate = xpdr.gate_duration_s(radar);
    let hw_delay = radar.rx_hardware_delay_s + xpdr.hardware_delay_s;
    let shifts = xpdr.shifts();

    let idx = |t: f64| ((t * fs).ceil().max(0.0) as usize).min(n_total);
    let c0 = idx(t_ref + hw_delay);
    let c1 = idx(t_ref + hw_delay + gate + cfg.coarse_margin_s);
    if c1 - c0 < 16 {
        return Err(DetectError::Window(c1 - c0));
    }

    let bands = shifts.map(|s| (s - cfg.below_shift_hz, s + cfg.beat_budget_hz));
    let coarse = {
        let seg = &samples[c0..c1];
        let w = cfg.window.coefficients::<T>(seg.len());
        let p = dsp::power_spectrum(seg, &w, dsp::next_pow2(seg.len() * cfg.coarse_pad));
        let peaks: Vec<Peak<T>> = bands
            .iter()
            .map(|&(lo, hi)| band_peak(&p, lo, hi, fs))
            .collect::<Option<_>>()
            .ok_or(DetectError::Window(seg.len()))?;
        peaks
    };
    let snrs = [coarse[0].snr_db.to_f64_lossy(), coarse[1].snr_db.to_f64_lossy()];
    for (k, &snr) in snrs.iter().enumerate() {
        if !(snr >= cfg.snr_threshold_db) {
            return Err(DetectError::ToneNotFound {
                tone: k + 1,
                snr_db: snr,
                snrs_db: snrs,
            });
        }
    }
    let planned = shifts[1] - shifts[0];
    let spacing = (coarse[1].freq_hz - coarse[0].freq_hz).to_f64_lossy();
    if (spacing - planned).abs() > 0.2 * planned.abs() {
        return Err(DetectError::Spacing {
            spacing_hz: spacing,
            planned_hz: planned,
            snrs_db: snrs,
        });
    }

    // Crop to where the tones are: the gate delayed by the round trip.
    let beat = coarse.iter().zip(shifts).map(|(p, s)| p.freq_hz.to_f64_lossy() - s).sum::<f64>() / 2.0;
    let tau = (beat / radar.chirp_slope()).max(0.0);
    let f0 = idx(t_ref + tau + cfg.edge_guard_s);
    let f1 = ((t_ref + tau + gate - cfg.edge_guard_s) * fs).floor().max(0.0) as usize + 1;
    let f1 = f1.min(n_total);
    if f1 <= f0 || f1 - f0 < 16 {
        return Err(DetectError::Window(f1.saturating_sub(f0)));
    }
    let seg = &samples[f0..f1];
    let w = cfg.window.coefficients::<T>(seg.len());
    let fine_len = dsp::next_pow2(seg.len() * cfg.fine_pad);
    let p = dsp::power_spectrum(seg, &w, fine_len);
    let bin = fs / seg.len() as f64;
    let mut init = [T::zero(); 2];
    let mut fine_snr = [T::zero(); 2];
    for k in 0..2 {
        let c = coarse[k].freq_hz.to_f64_lossy();
        let local = band_peak(&p, c - 2.0 * bin, c + 2.0 * bin, fs).ok_or(DetectError::Fit)?;
        init[k] = local.freq_hz;
        let (lo, hi) = bands[k];
        fine_snr[k] = band_peak(&p, lo, hi, fs).map(|b| b.snr_db).unwrap_or(local.snr_db);
    }

    let t: Vec<T> = (f0..f1).map(|n| T::of(n as f64 / fs - t_ref)).collect();
    let fit = dsp::refine_tones(seg, &t, &w, &init, T::of(bin / 4.0), cfg.max_iter).ok_or(DetectError::Fit)?;
    Ok(ToneObservation {
        pulse_index,
        f1_hz: fit[0].freq_hz,
        f2_hz: fit[1].freq_hz,
        phi1_rad: dsp::wrap_phase(fit[0].amplitude.arg()),
        phi2_rad: dsp::wrap_phase(fit[1].amplitude.arg()),
        snr1_db: fine_snr[0],
        snr2_db: fine_snr[1],
    })
}

/// Detects a single passive-target tone over the whole pulse inside
/// `band_hz`.
pub fn detect_point_tone<T: Scalar>(samples: &[Complex<T>], pulse_index: usize, radar: &RadarParams, band_hz: (f64, f64), cfg: &DetectConfig) -> Result<PointObservation<T>, DetectError> {
    let fs = radar.sample_rate_hz;
    let n = samples.len();
    if n < 16 {
        return Err(DetectError::Window(n));
    }
    let w = cfg.window.coefficients::<T>(n);
    let len = dsp::next_pow2(2 * n);
    let p = dsp::power_spectrum(samples, &w, len);
    let peak = band_peak(&p, band_hz.0, band_hz.1, fs).ok_or(DetectError::Window(n))?;
    let snr = peak.snr_db.to_f64_lossy();
    if !(snr >= cfg.snr_threshold_db) {
        return Err(DetectError::ToneNotFound {
            tone: 1,
            snr_db: snr,
            snrs_db: [snr, f64::NAN],
        });
    }
    let t: Vec<T> = (0..n).map(|i| T::of(i as f64 / fs)).collect();
    let bin = fs / n as f64;
    let fit = dsp::refine_tones(samples, &t, &w, &[peak.freq_hz], T::of(bin / 4.0), cfg.max_iter).ok_or(DetectError::Fit)?;
    Ok(PointObservation {
        pulse_index,
        freq_hz: fit[0].freq_hz,
        phase_rad: dsp::wrap_phase(fit[0].amplitude.arg()),
        snr_db: peak.snr_db,
    })
}

fn c<T: Scalar>() -> T {
    T::of(SPEED_OF_LIGHT)
}

/// Absolute range from the tone frequencies.
///
/// Both tones carry the same beat `(B/T)(2R/c)` on top of their shifts, so
/// `R = cT/(4B) · ((f1 − s1) + (f2 − s2))`. Using `cT/(2B)` with the summed
/// beats would double the range. The hardware-delay bias is removed.
pub fn estimate_absolute<T: Scalar>(obs: &ToneObservation<T>, xpdr: &TransponderParams, radar: &RadarParams) -> T {
    let [s1, s2] = xpdr.shifts().map(T::of);
    let k = c::<T>() / (T::of(4.0) * T::of(radar.chirp_slope()));
    k * ((obs.f1_hz - s1) + (obs.f2_hz - s2)) - T::of(xpdr.delay_bias_m(radar))
}

/// Absolute range of a passive point, `R = f c T / (2B)`, less the radar
/// hardware-delay bias.
pub fn estimate_point_absolute<T: Scalar>(obs: &PointObservation<T>, radar: &RadarParams) -> T {
    obs.freq_hz * c::<T>() / (T::of(2.0) * T::of(radar.chirp_slope())) - T::of(SPEED_OF_LIGHT * radar.rx_hardware_delay_s / 2.0)
}

/// Residual video phase `π (B/T) (2R/c)²` in radians.
pub fn rvp_phase_rad<T: Scalar>(range_m: T, radar: &RadarParams) -> T {
    let tau = T::of(2.0) * range_m / c::<T>();
    T::PI() * T::of(radar.chirp_slope()) * tau * tau
}

/// Range-equivalent of the residual video phase at carrier `f_rx_hz`.
pub fn rvp_correction_m<T: Scalar>(r_abs_m: T, radar: &RadarParams, f_rx_hz: f64) -> T {
    c::<T>() / (T::of(4.0) * T::PI() * T::of(f_rx_hz)) * rvp_phase_rad(r_abs_m, radar)
}

/// Clock-independent phase `(φ1 − k φ2) / (1 − k)`, `k = s1/s2`.
pub fn combined_phase<T: Scalar>(obs: &ToneObservation<T>, xpdr: &TransponderParams) -> T {
    let k = T::of(xpdr.tone_ratio());
    (obs.phi1_rad - k * obs.phi2_rad) / (T::one() - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeOptions {
    pub rvp_compensation: bool,
    /// Length of the local linear fit that smooths the range fed to the
    /// residual video phase. 1 disables smoothing.
    pub rvp_smoothing_pulses: usize,
    /// Residual inter-pulse jumps above this fraction of the ambiguity raise
    /// a warning.
    pub warn_fraction: f64,
}

impl Default for RelativeOptions {
    fn default() -> Self {
        RelativeOptions {
            rvp_compensation: true,
            rvp_smoothing_pulses: 101,
            warn_fraction: 0.4,
        }
    }
}

/// Range from the clock-immune beat `(s2 (f1 − s1) − s1 (f2 − s2)) / (s2 − s1)`.
///
/// A clock frequency error moves tone k by an amount proportional to s_k;
/// this combination removes it, at the cost of more thermal noise than
/// [`estimate_absolute`]. Used as the residual-video-phase argument.
pub fn clock_immune_range<T: Scalar>(obs: &ToneObservation<T>, xpdr: &TransponderParams, radar: &RadarParams) -> T {
    let [s1, s2] = xpdr.shifts().map(T::of);
    let beat = (s2 * (obs.f1_hz - s1) - s1 * (obs.f2_hz - s2)) / (s2 - s1);
    beat * c::<T>() / (T::of(2.0) * T::of(radar.chirp_slope())) - T::of(xpdr.delay_bias_m(radar))
}

/// Centered local linear fit over `window` positions, skipping `None`.
/// Positions with fewer than 2 valid neighbours keep their own value.
pub fn smooth_track<T: Scalar>(values: &[Option<T>], window: usize) -> Vec<Option<T>> {
    if window <= 1 {
        return values.to_vec();
    }
    let n = values.len();
    let half = window / 2;
    // prefix sums of 1, i, i², y, i·y over valid entries
    let mut acc = vec![[T::zero(); 5]; n + 1];
    for (i, v) in values.iter().enumerate() {
        let mut a = acc[i];
        if let Some(y) = *v {
            let x = T::of_usize(i);
            a[0] = a[0] + T::one();
            a[1] = a[1] + x;
            a[2] = a[2] + x * x;
            a[3] = a[3] + y;
            a[4] = a[4] + x * y;
        }
        acc[i + 1] = a;
    }
    (0..n)
        .map(|i| {
            let y0 = values[i]?;
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let s: Vec<T> = (0..5).map(|k| acc[hi][k] - acc[lo][k]).collect();
            if s[0] < T::of(2.0) {
                return Some(y0);
            }
            // center on i so the sums stay well conditioned
            let xi = T::of_usize(i);
            let sx = s[1] - s[0] * xi;
            let sxx = s[2] - T::of(2.0) * xi * s[1] + s[0] * xi * xi;
            let sxy = s[4] - xi * s[3];
            let det = s[0] * sxx - sx * sx;
            if det.abs() <= T::epsilon() * s[0] * sxx {
                return Some(s[3] / s[0]);
            }
            Some((sxx * s[3] - sx * sxy) / det)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnwrapWarning<T> {
    /// Position in the sequence where the jump ends.
    pub index: usize,
    pub jump_m: T,
}

/// Unwraps a sequence known modulo `period`, choosing at each valid element
/// the multiple that minimises the jump from the previous valid element.
/// Invalid elements stay `None` and are bridged.
pub fn unwrap_ranges<T: Scalar>(values: &[Option<T>], period: T, warn_fraction: T) -> (Vec<Option<T>>, Vec<UnwrapWarning<T>>) {
    let mut out = Vec::with_capacity(values.len());
    let mut warnings = Vec::new();
    let mut prev: Option<T> = None;
    let mut offset = T::zero();
    for (i, v) in values.iter().enumerate() {
        let Some(v) = *v else {
            out.push(None);
            continue;
        };
        let u = match prev {
            None => v,
            Some(p) => {
                let diff = v + offset - p;
                let m = (diff / period).round();
                offset = offset - m * period;
                let jump = diff - m * period;
                if jump.abs() > warn_fraction * period {
                    warnings.push(UnwrapWarning { index: i, jump_m: jump });
                }
                v + offset
            }
        };
        prev = Some(u);
        out.push(Some(u));
    }
    (out, warnings)
}

/// Phase-derived relative range track.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeTrack<T> {
    /// Unwrapped, starting from the first valid pulse's raw value.
    pub unanchored_m: Vec<Option<T>>,
    /// Shifted so its mean over valid pulses equals the mean of the smoothed
    /// absolute track. This offset is a reporting convention; only
    /// differences are measured.
    pub anchored_m: Vec<Option<T>>,
    pub ambiguity_m: T,
    pub warnings: Vec<UnwrapWarning<T>>,
}

fn finish_relative<T: Scalar>(raw: Vec<Option<T>>, anchor: &[Option<T>], ambiguity: T, opts: &RelativeOptions) -> Result<RelativeTrack<T>, EstimError> {
    let valid = raw.iter().filter(|v| v.is_some()).count();
    if valid < 2 {
        return Err(EstimError::TooFewObservations(valid));
    }
    let (unanchored, warnings) = unwrap_ranges(&raw, ambiguity, T::of(opts.warn_fraction));
    let (mut sum_rel, mut sum_abs, mut n) = (T::zero(), T::zero(), T::zero());
    for (u, a) in unanchored.iter().zip(anchor) {
        if let (Some(u), Some(a)) = (u, a) {
            sum_rel = sum_rel + *u;
            sum_abs = sum_abs + *a;
            n = n + T::one();
        }
    }
    let shift = (sum_abs - sum_rel) / n;
    let anchored = unanchored.iter().map(|u| u.map(|u| u + shift)).collect();
    Ok(RelativeTrack {
        unanchored_m: unanchored,
        anchored_m: anchored,
        ambiguity_m: ambiguity,
        warnings,
    })
}

/// Relative range from the two-tone phases.
///
/// The residual video phase is evaluated at the smoothed clock-immune range
/// (see [`clock_immune_range`]), and the same series anchors the output, so
/// clock noise reaches neither. Pulses with no observation are skipped.
/// Requires inter-pulse range changes below half the ambiguity
/// `c / (2 f_Rx)`.
pub fn estimate_relative<T: Scalar>(obs: &[Option<ToneObservation<T>>], xpdr: &TransponderParams, radar: &RadarParams, opts: &RelativeOptions) -> Result<RelativeTrack<T>, EstimError> {
    let f_rx = xpdr.f_rx();
    let scale = c::<T>() / (T::of(4.0) * T::PI() * T::of(f_rx));
    let bias = T::of(xpdr.delay_bias_m(radar));
    let immune: Vec<Option<T>> = obs.iter().map(|o| o.as_ref().map(|o| clock_immune_range(o, xpdr, radar))).collect();
    let smoothed = smooth_track(&immune, opts.rvp_smoothing_pulses);
    let raw: Vec<Option<T>> = obs
        .iter()
        .zip(&smoothed)
        .map(|(o, r)| {
            let (o, r) = (o.as_ref()?, (*r)?);
            let mut phi = combined_phase(o, xpdr);
            if opts.rvp_compensation {
                phi = phi + rvp_phase_rad(r + bias, radar);
            }
            Some(scale * phi)
        })
        .collect();
    finish_relative(raw, &smoothed, c::<T>() / (T::of(2.0) * T::of(f_rx)), opts)
}

/// Relative range of a passive point from its single-tone phase
/// `4π R f_c / c − RVP`; ambiguous modulo `c / (2 f_c)`.
pub fn estimate_point_relative<T: Scalar>(obs: &[Option<PointObservation<T>>], r_abs: &[Option<T>], radar: &RadarParams, opts: &RelativeOptions) -> Result<RelativeTrack<T>, EstimError> {
    assert_eq!(obs.len(), r_abs.len());
    let fc = radar.carrier_hz;
    let scale = c::<T>() / (T::of(4.0) * T::PI() * T::of(fc));
    let bias = T::of(SPEED_OF_LIGHT * radar.rx_hardware_delay_s / 2.0);
    let rvp_range = smooth_track(r_abs, opts.rvp_smoothing_pulses);
    let raw: Vec<Option<T>> = obs
        .iter()
        .zip(&rvp_range)
        .map(|(o, r_rvp)| {
            let (o, r_rvp) = (o.as_ref()?, (*r_rvp)?);
            let mut phi = o.phase_rad;
            if opts.rvp_compensation {
                phi = phi + rvp_phase_rad(r_rvp + bias, radar);
            }
            Some(scale * phi)
        })
        .collect();
    finish_relative(raw, &rvp_range, c::<T>() / (T::of(2.0) * T::of(fc)), opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow<T> {
    pub pulse_index: usize,
    pub time_s: T,
    pub truth_m: Option<T>,
    pub r_abs_m: Option<T>,
    pub r_rel_m: Option<T>,
    pub valid: bool,
    pub snr1_db: Option<T>,
    pub snr2_db: Option<T>,
}

/// Per-pulse range estimates for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeTrack<T> {
    pub rows: Vec<TrackRow<T>>,
    pub ambiguity_m: T,
    /// `r_rel_m` is shifted to the mean absolute range (a reporting
    /// convention, not a measurement).
    pub rel_anchored: bool,
    pub warnings: Vec<UnwrapWarning<T>>,
}

impl<T: Scalar> RangeTrack<T> {
    pub fn valid_count(&self) -> usize {
        self.rows.iter().filter(|r| r.valid).count()
    }

    pub fn r_abs(&self) -> Vec<Option<T>> {
        self.rows.iter().map(|r| r.r_abs_m).collect()
    }

    pub fn r_rel(&self) -> Vec<Option<T>> {
        self.rows.iter().map(|r| r.r_rel_m).collect()
    }

    /// Maximal runs of invalid pulses as `(first, len)`.
    pub fn gaps(&self) -> Vec<(usize, usize)> {
        let mut gaps = Vec::new();
        let mut start = None;
        for (i, r) in self.rows.iter().enumerate() {
            match (r.valid, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    gaps.push((s, i - s));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            gaps.push((s, self.rows.len() - s));
        }
        gaps
    }
}

fn opt_snr<T: Scalar>(x: f64) -> Option<T> {
    x.is_finite().then(|| T::of(x))
}

/// Assembles the transponder track from per-pulse detections.
pub fn transponder_track<T: Scalar>(detections: &[Result<ToneObservation<T>, DetectError>], times: &[T], truth: Option<&[T]>, xpdr: &TransponderParams, radar: &RadarParams, opts: &RelativeOptions) -> RangeTrack<T> {
    let obs: Vec<Option<ToneObservation<T>>> = detections.iter().map(|d| d.as_ref().ok().copied()).collect();
    let r_abs: Vec<Option<T>> = obs.iter().map(|o| o.as_ref().map(|o| estimate_absolute(o, xpdr, radar))).collect();
    let rel = estimate_relative(&obs, xpdr, radar, opts).ok();
    let ambiguity = T::of(SPEED_OF_LIGHT / (2.0 * xpdr.f_rx()));
    build_track(detections.len(), times, truth, &r_abs, rel, ambiguity, |i| match &detections[i] {
        Ok(o) => (Some(o.snr1_db), Some(o.snr2_db)),
        Err(e) => {
            let s = e.snrs_db();
            (opt_snr(s[0]), opt_snr(s[1]))
        }
    })
}

/// Assembles a passive point-target track from per-pulse detections.
pub fn point_track<T: Scalar>(detections: &[Result<PointObservation<T>, DetectError>], times: &[T], truth: Option<&[T]>, radar: &RadarParams, opts: &RelativeOptions) -> RangeTrack<T> {
    let obs: Vec<Option<PointObservation<T>>> = detections.iter().map(|d| d.as_ref().ok().copied()).collect();
    let r_abs: Vec<Option<T>> = obs.iter().map(|o| o.as_ref().map(|o| estimate_point_absolute(o, radar))).collect();
    let rel = estimate_point_relative(&obs, &r_abs, radar, opts).ok();
    let ambiguity = T::of(SPEED_OF_LIGHT / (2.0 * radar.carrier_hz));
    build_track(detections.len(), times, truth, &r_abs, rel, ambiguity, |i| match &detections[i] {
        Ok(o) => (Some(o.snr_db), None),
        Err(e) => (opt_snr(e.snrs_db()[0]), None),
    })
}

fn build_track<T: Scalar>(n: usize, times: &[T], truth: Option<&[T]>, r_abs: &[Option<T>], rel: Option<RelativeTrack<T>>, ambiguity: T, snr: impl Fn(usize) -> (Option<T>, Option<T>)) -> RangeTrack<T> {
    let rows = (0..n)
        .map(|i| {
            let (snr1_db, snr2_db) = snr(i);
            TrackRow {
                pulse_index: i,
                time_s: times[i],
                truth_m: truth.map(|t| t[i]),
                r_abs_m: r_abs[i],
                r_rel_m: rel.as_ref().and_then(|r| r.anchored_m[i]),
                valid: r_abs[i].is_some(),
                snr1_db,
                snr2_db,
            }
        })
        .collect();
    RangeTrack {
        rows,
        ambiguity_m: rel.as_ref().map(|r| r.ambiguity_m).unwrap_or(ambiguity),
        rel_anchored: true,
        warnings: rel.map(|r| r.warnings).unwrap_or_default(),
    }
}

/// Search band for a passive point expected between `r_lo` and `r_hi`.
pub fn point_band_hz(radar: &RadarParams, r_lo_m: f64, r_hi_m: f64) -> (f64, f64) {
    let bias = SPEED_OF_LIGHT * radar.rx_hardware_delay_s / 2.0;
    (radar.beat_hz(r_lo_m.max(0.0) + bias), radar.beat_hz(r_hi_m + bias))
}
