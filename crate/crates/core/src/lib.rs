//! Simulation and range estimation for an FMCW SAR observing a two-tone
//! frequency-translating transponder and passive corner reflectors.
//!
//! The crate is organised as a pipeline:
//!
//! - [`scenario`]: configuration types, validation, scenario files and the
//!   frequency-plan checker.
//! - [`geometry`]: platform trajectories, slant ranges, antenna and corner
//!   reflector angular responses.
//! - [`txmodel`]: transponder link budget, IF filter magnitude model and the
//!   reference clock phase-noise process.
//! - [`synth`]: dechirped IF sample synthesis per pulse, plus the raw dump
//!   file format.
//! - [`estim`]: tone detection, absolute (frequency) and relative (phase)
//!   range estimation, residual video phase compensation, unwrapping.
//! - [`report`]: moving standard deviation, error summaries, spectrograms.
//! - [`pipeline`]: end-to-end in-memory runs used by the CLI and the tests.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`). The
//! configuration layer is `f64`; the aliases at the crate root fix the
//! pipeline to [`Real`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod estim;
pub mod geometry;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod synth;
pub mod txmodel;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const T0_KELVIN: f64 = 290.0;

/// Floating-point scalar used by the numeric kernels.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Scalar type used by the end-to-end pipeline.
pub type Real = f64;
/// Complex sample of the pipeline scalar.
pub type Sample = num_complex::Complex<Real>;

pub type PulseRecord = synth::PulseRecord<Real>;
pub type PulseGeometry = geometry::PulseGeometry<Real>;
pub type ToneObservation = estim::ToneObservation<Real>;
pub type RangeTrack = estim::RangeTrack<Real>;
pub type RelativeTrack = estim::RelativeTrack<Real>;
pub type ErrorReport = report::ErrorReport<Real>;
pub type Spectrogram = report::Spectrogram<Real>;
pub type PhaseNoiseTrack = txmodel::PhaseNoiseTrack<Real>;

pub use scenario::{load_scenario, save_scenario, validate_plan, PlanReport, Scenario, ScenarioError};
