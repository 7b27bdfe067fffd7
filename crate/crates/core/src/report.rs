//! Error metrics, spectrograms and their text exports.

use std::io::{self, Write};

use num_complex::Complex;

use crate::dsp::{self, Window};
use crate::estim::RangeTrack;
use crate::Scalar;

pub const DEFAULT_MSTD_WINDOW: usize = 100;

/// Moving standard deviation of linearly detrended windows.
///
/// Entry `j` covers `series[j..j + window]`; the output has
/// `len − window + 1` entries (empty when the series is shorter than the
/// window). Each window gets its own least-squares line removed, then the
/// sample standard deviation (divisor `window − 1`) of the residuals is
/// taken. Windows holding any `None` give `None`.
pub fn moving_std<T: Scalar>(series: &[Option<T>], window: usize) -> Vec<Option<T>> {
    assert!(window >= 2, "moving_std window must be >= 2");
    if series.len() < window {
        return Vec::new();
    }
    let w = T::of_usize(window);
    let xm = (w - T::one()) / T::of(2.0);
    let sxx: T = (0..window).map(|i| (T::of_usize(i) - xm).powi(2)).sum();
    let mut buf = vec![T::zero(); window];
    series
        .windows(window)
        .map(|win| {
            for (b, v) in buf.iter_mut().zip(win) {
                *b = (*v)?;
            }
            let mean = buf.iter().copied().sum::<T>() / w;
            let sxy: T = buf.iter().enumerate().map(|(i, &y)| (T::of_usize(i) - xm) * (y - mean)).sum();
            let slope = sxy / sxx;
            let ss: T = buf
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let r = y - mean - slope * (T::of_usize(i) - xm);
                    r * r
                })
                .sum();
            Some((ss / (w - T::one())).sqrt())
        })
        .collect()
}

/// Percentile with linear interpolation between order statistics; `q` in
/// [0, 100]. `None` for an empty input.
pub fn percentile<T: Scalar>(values: &[T], q: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let pos = q.clamp(0.0, 100.0) / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::of(pos - lo as f64);
    Some(v[lo] + (v[hi] - v[lo]) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub count: usize,
    pub median: T,
    pub p10: T,
    pub p90: T,
    pub max: T,
}

impl<T: Scalar> Summary<T> {
    pub fn of(values: &[Option<T>]) -> Option<Self> {
        let v: Vec<T> = values.iter().flatten().copied().collect();
        Some(Summary {
            count: v.len(),
            median: percentile(&v, 50.0)?,
            p10: percentile(&v, 10.0)?,
            p90: percentile(&v, 90.0)?,
            max: percentile(&v, 100.0)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GapStats {
    pub count: usize,
    pub longest: usize,
    pub invalid_pulses: usize,
}

impl GapStats {
    pub fn from_runs(runs: &[(usize, usize)]) -> Self {
        GapStats {
            count: runs.len(),
            longest: runs.iter().map(|r| r.1).max().unwrap_or(0),
            invalid_pulses: runs.iter().map(|r| r.1).sum(),
        }
    }
}

/// Precision metrics of one range track.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport<T> {
    pub window: usize,
    pub total_pulses: usize,
    pub valid_pulses: usize,
    pub mstd_abs_m: Vec<Option<T>>,
    pub mstd_rel_m: Vec<Option<T>>,
    pub abs: Option<Summary<T>>,
    pub rel: Option<Summary<T>>,
    pub gaps: GapStats,
    pub unwrap_warnings: usize,
}

impl<T: Scalar> ErrorReport<T> {
    pub fn from_track(track: &RangeTrack<T>, window: usize) -> Self {
        let mstd_abs_m = moving_std(&track.r_abs(), window);
        let mstd_rel_m = moving_std(&track.r_rel(), window);
        ErrorReport {
            window,
            total_pulses: track.rows.len(),
            valid_pulses: track.valid_count(),
            abs: Summary::of(&mstd_abs_m),
            rel: Summary::of(&mstd_rel_m),
            mstd_abs_m,
            mstd_rel_m,
            gaps: GapStats::from_runs(&track.gaps()),
            unwrap_warnings: track.warnings.len(),
        }
    }
}

/// Pulse-by-frequency power matrix in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    /// Ascending bin frequencies, Hz.
    pub freqs_hz: Vec<T>,
    /// One row per pulse.
    pub rows_db: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramConfig {
    pub fft_size: usize,
    pub window: Window,
    /// Inclusive frequency band kept, Hz.
    pub band_hz: (f64, f64),
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            fft_size: 1024,
            window: Window::Hann,
            band_hz: (0.0, 31.25e6),
        }
    }
}

/// Averaged periodogram of one pulse, in FFT bin order.
///
/// The pulse is cut into non-overlapping `fft_size` segments (a short tail
/// is dropped). Bin power is `Σ_seg |X_k|² / (n_seg · L · Σ w²)`, so the bins
/// sum to the mean sample power for a rectangular window and white noise of
/// variance σ² sits at σ²/L per bin for any window.
pub fn pulse_spectrum<T: Scalar>(samples: &[Complex<T>], fft_size: usize, window: Window) -> Vec<T> {
    let l = fft_size.max(1);
    let w = window.coefficients::<T>(l);
    let norm = T::of_usize(l) * w.iter().map(|&x| x * x).sum::<T>();
    let segs = samples.len() / l;
    let mut acc = vec![T::zero(); l];
    for s in 0..segs {
        let p = dsp::power_spectrum(&samples[s * l..(s + 1) * l], &w, l);
        for (a, v) in acc.iter_mut().zip(p) {
            *a = *a + v;
        }
    }
    let d = norm * T::of_usize(segs.max(1));
    acc.into_iter().map(|a| a / d).collect()
}

/// Bin indices inside `band`, ordered by ascending frequency, with their
/// frequencies.
fn band_bins(l: usize, fs: f64, band: (f64, f64)) -> Vec<(usize, f64)> {
    let mut bins: Vec<(usize, f64)> = (0..l)
        .map(|k| {
            let f = if k < l.div_ceil(2) { k as f64 } else { k as f64 - l as f64 } * fs / l as f64;
            (k, f)
        })
        .filter(|&(_, f)| f >= band.0 && f <= band.1)
        .collect();
    bins.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    bins
}

/// Spectrogram over a pulse sequence, clipped to the configured band.
pub fn spectrogram<'a, T: Scalar, I>(pulses: I, sample_rate_hz: f64, cfg: &SpectrogramConfig) -> Spectrogram<T>
where
    I: IntoIterator<Item = &'a [Complex<T>]>,
{
    let bins = band_bins(cfg.fft_size, sample_rate_hz, cfg.band_hz);
    let rows_db = pulses
        .into_iter()
        .map(|x| {
            let p = pulse_spectrum(x, cfg.fft_size, cfg.window);
            bins.iter().map(|&(k, _)| dsp::to_db(p[k].max(T::min_positive_value()))).collect()
        })
        .collect();
    Spectrogram {
        freqs_hz: bins.iter().map(|&(_, f)| T::of(f)).collect(),
        rows_db,
    }
}

impl<T: Scalar> Spectrogram<T> {
    /// CSV with a header `pulse_index,<f0>,<f1>,…` (Hz), one row per pulse.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "pulse_index")?;
        for f in &self.freqs_hz {
            write!(out, ",{}", f)?;
        }
        writeln!(out)?;
        for (i, row) in self.rows_db.iter().enumerate() {
            write!(out, "{i}")?;
            for v in row {
                write!(out, ",{:.4}", v.to_f64_lossy())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Binary 8-bit PGM (P5), pulses down, frequency across; `dynamic_db`
    /// below the matrix maximum maps to black.
    pub fn write_pgm<W: Write>(&self, mut out: W, dynamic_db: f64) -> io::Result<()> {
        let h = self.rows_db.len();
        let w = self.freqs_hz.len();
        let max = self
            .rows_db
            .iter()
            .flatten()
            .map(|v| v.to_f64_lossy())
            .fold(f64::NEG_INFINITY, f64::max);
        write!(out, "P5\n{w} {h}\n255\n")?;
        let lo = max - dynamic_db;
        for row in &self.rows_db {
            let bytes: Vec<u8> = row
                .iter()
                .map(|v| (((v.to_f64_lossy() - lo) / dynamic_db).clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            out.write_all(&bytes)?;
        }
        Ok(())
    }
}

fn opt<T: Scalar>(v: Option<T>, prec: usize) -> String {
    v.map(|x| format!("{:.*}", prec, x.to_f64_lossy())).unwrap_or_default()
}

pub const TRACK_HEADER: &str = "pulse_index,time_s,truth_m,r_abs_m,r_rel_m,valid,snr1_db,snr2_db";

/// Track CSV; absent values are empty fields, `valid` is 0 or 1.
pub fn write_track_csv<T: Scalar, W: Write>(track: &RangeTrack<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACK_HEADER}")?;
    for r in &track.rows {
        writeln!(
            out,
            "{},{:.6},{},{},{},{},{},{}",
            r.pulse_index,
            r.time_s.to_f64_lossy(),
            opt(r.truth_m, 9),
            opt(r.r_abs_m, 9),
            opt(r.r_rel_m, 9),
            u8::from(r.valid),
            opt(r.snr1_db, 3),
            opt(r.snr2_db, 3),
        )?;
    }
    Ok(())
}

pub const MSTD_HEADER: &str = "target,window_end_pulse,mstd_abs_m,mstd_rel_m";

/// Long-format moving-std CSV for several targets. `window_end_pulse` is the
/// last pulse of the window.
pub fn write_mstd_csv<T: Scalar, W: Write>(reports: &[(&str, &ErrorReport<T>)], mut out: W) -> io::Result<()> {
    writeln!(out, "{MSTD_HEADER}")?;
    for (name, r) in reports {
        for (j, (a, b)) in r.mstd_abs_m.iter().zip(&r.mstd_rel_m).enumerate() {
            writeln!(out, "{name},{},{},{}", j + r.window - 1, opt(*a, 9), opt(*b, 9))?;
        }
    }
    Ok(())
}

pub const REPORT_HEADER: &str = "target,total_pulses,valid_pulses,gap_count,longest_gap,window,mstd_abs_median_m,mstd_abs_p90_m,mstd_rel_median_m,mstd_rel_p90_m,unwrap_warnings";

pub fn write_report_csv<T: Scalar, W: Write>(reports: &[(&str, &ErrorReport<T>)], mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for (name, r) in reports {
        writeln!(
            out,
            "{name},{},{},{},{},{},{},{},{},{},{}",
            r.total_pulses,
            r.valid_pulses,
            r.gaps.count,
            r.gaps.longest,
            r.window,
            opt(r.abs.map(|s| s.median), 9),
            opt(r.abs.map(|s| s.p90), 9),
            opt(r.rel.map(|s| s.median), 9),
            opt(r.rel.map(|s| s.p90), 9),
            r.unwrap_warnings,
        )?;
    }
    Ok(())
}
