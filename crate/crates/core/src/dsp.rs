//! Spectral helpers shared by tone detection and the spectrogram.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rect,
}

impl Window {
    /// Window coefficients. The Hann taper is `sin²(π (n+1) / (N+1))`, which
    /// keeps every coefficient strictly positive so it can double as a
    /// least-squares weight.
    pub fn coefficients<T: Scalar>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rect => vec![T::one(); n],
            Window::Hann => {
                let d = T::of_usize(n + 1);
                (0..n)
                    .map(|i| {
                        let s = (T::PI() * T::of_usize(i + 1) / d).sin();
                        s * s
                    })
                    .collect()
            }
        }
    }
}

/// |FFT|² of the windowed samples, zero-padded to `fft_len`.
pub fn power_spectrum<T: Scalar>(samples: &[Complex<T>], window: &[T], fft_len: usize) -> Vec<T> {
    assert!(fft_len >= samples.len());
    assert_eq!(window.len(), samples.len());
    let mut buf = vec![Complex::new(T::zero(), T::zero()); fft_len];
    for (b, (&x, &w)) in buf.iter_mut().zip(samples.iter().zip(window)) {
        *b = x * w;
    }
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);
    buf.iter().map(|z| z.norm_sqr()).collect()
}

/// Index of the largest value in `lo..hi`; on exact ties the lowest index wins.
pub fn peak_index<T: Scalar>(values: &[T], lo: usize, hi: usize) -> Option<usize> {
    let hi = hi.min(values.len());
    let mut best: Option<usize> = None;
    for i in lo..hi {
        match best {
            Some(b) if values[i] <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Vertex offset of the parabola through three equally spaced points, in
/// units of the spacing, clamped to [-0.5, 0.5].
pub fn parabolic_offset<T: Scalar>(left: T, center: T, right: T) -> T {
    let denom = left - T::of(2.0) * center + right;
    if denom.abs() <= T::epsilon() * center.abs().max(T::one()) {
        return T::zero();
    }
    let half = T::of(0.5);
    (half * (left - right) / denom).max(-half).min(half)
}

/// Fractional bin of the peak at `k`, interpolating the log magnitude.
pub fn interpolate_log_peak<T: Scalar>(power: &[T], k: usize) -> T {
    if k == 0 || k + 1 >= power.len() {
        return T::of_usize(k);
    }
    let tiny = T::min_positive_value();
    // log |X| = ½ log |X|²; the factor cancels in the vertex offset
    let l = power[k - 1].max(tiny).ln();
    let c = power[k].max(tiny).ln();
    let r = power[k + 1].max(tiny).ln();
    T::of_usize(k) + parabolic_offset(l, c, r)
}

/// Mean noise power per bin estimated from the median of `band`
/// (an exponential variate's median is `ln 2` times its mean).
pub fn noise_floor<T: Scalar>(band: &[T]) -> T {
    if band.is_empty() {
        return T::zero();
    }
    let mut v = band.to_vec();
    let mid = v.len() / 2;
    v.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v[mid] / T::LN_2()
}

pub fn to_db<T: Scalar>(x: T) -> T {
    T::of(10.0) * x.max(T::min_positive_value()).log10()
}

/// Wraps a phase to (-π, π].
pub fn wrap_phase<T: Scalar>(p: T) -> T {
    let two_pi = T::TAU();
    let mut w = (p + T::PI()) % two_pi;
    if w <= T::zero() {
        w = w + two_pi;
    }
    w - T::PI()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedTone<T> {
    pub freq_hz: T,
    /// Complex amplitude at `t = 0` of the supplied time axis.
    pub amplitude: Complex<T>,
}

/// Solves the small dense complex system `a x = b` by Gaussian elimination
/// with partial pivoting. Returns `None` when singular.
fn solve_complex<T: Scalar>(mut a: Vec<Vec<Complex<T>>>, mut b: Vec<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())?;
        if a[piv][col].norm() == T::zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, &v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x = *x - f * v;
            }
            let v = b[col];
            b[row] = b[row] - f * v;
        }
    }
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn basis<T: Scalar>(freq: T, t: &[T]) -> Vec<Complex<T>> {
    let w = T::TAU() * freq;
    t.iter().map(|&ti| Complex::from_polar(T::one(), w * ti)).collect()
}

fn joint_amplitudes<T: Scalar>(x: &[Complex<T>], weights: &[T], bases: &[Vec<Complex<T>>]) -> Option<Vec<Complex<T>>> {
    let k = bases.len();
    let mut g = vec![vec![Complex::new(T::zero(), T::zero()); k]; k];
    let mut b = vec![Complex::new(T::zero(), T::zero()); k];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = bases[i]
                .iter()
                .zip(&bases[j])
                .zip(weights)
                .map(|((ei, ej), &w)| ei.conj() * ej * w)
                .fold(Complex::new(T::zero(), T::zero()), |a, v| a + v);
        }
        b[i] = bases[i]
            .iter()
            .zip(x)
            .zip(weights)
            .map(|((e, &xv), &w)| e.conj() * xv * w)
            .fold(Complex::new(T::zero(), T::zero()), |a, v| a + v);
    }
    solve_complex(g, b)
}

/// Weighted least-squares fit of `Σ a_k exp(i 2π f_k t)` to `x`.
///
/// Amplitudes are solved jointly for the current frequencies; each frequency
/// then takes a Gauss-Newton step on the residual with every other tone
/// removed. Steps are clamped to `max_step_hz`. For data that is exactly a sum
/// of the modeled tones the fixed point is the true parameter set.
pub fn refine_tones<T: Scalar>(x: &[Complex<T>], t: &[T], weights: &[T], init_hz: &[T], max_step_hz: T, max_iter: usize) -> Option<Vec<FittedTone<T>>> {
    assert_eq!(x.len(), t.len());
    assert_eq!(x.len(), weights.len());
    let k = init_hz.len();
    let mut freqs = init_hz.to_vec();
    let wsum: T = weights.iter().copied().sum();
    let tbar = t.iter().zip(weights).map(|(&ti, &w)| ti * w).sum::<T>() / wsum;
    let sxx: T = t.iter().zip(weights).map(|(&ti, &w)| w * (ti - tbar) * (ti - tbar)).sum();
    let tol = T::of(1e-11) * max_step_hz.max(T::one());

    for _ in 0..max_iter {
        let bases: Vec<_> = freqs.iter().map(|&f| basis(f, t)).collect();
        let amps = joint_amplitudes(x, weights, &bases)?;
        let mut largest = T::zero();
        for i in 0..k {
            let a = amps[i];
            let mag2 = a.norm_sqr();
            if mag2 == T::zero() {
                return None;
            }
            let mut num = T::zero();
            for n in 0..x.len() {
                let mut y = x[n];
                for j in 0..k {
                    if j != i {
                        y = y - amps[j] * bases[j][n];
                    }
                }
                let z = y * bases[i][n].conj();
                num = num + weights[n] * (t[n] - tbar) * (a.conj() * z).im;
            }
            let step = (num / (T::TAU() * mag2 * sxx)).max(-max_step_hz).min(max_step_hz);
            freqs[i] = freqs[i] + step;
            largest = largest.max(step.abs());
        }
        if largest <= tol {
            break;
        }
    }
    let bases: Vec<_> = freqs.iter().map(|&f| basis(f, t)).collect();
    let amps = joint_amplitudes(x, weights, &bases)?;
    Some(freqs.into_iter().zip(amps).map(|(freq_hz, amplitude)| FittedTone { freq_hz, amplitude }).collect())
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
