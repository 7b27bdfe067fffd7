use std::fmt;

use super::{RadarParams, TransponderParams};
use crate::txmodel::if_filter_gain_db;

pub const DEFAULT_STABILITY_MARGIN_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanRule {
    /// (a) received slice narrower than the smallest shift.
    SliceNarrowerThanShift,
    /// (b) both tones inside the radar IF band for every range up to the limit.
    TonesInsideIfBand,
    /// (c) IF filter rejection one shift away exceeds the chain gain plus margin.
    IfRejectionExceedsGain,
}

impl PlanRule {
    pub fn label(self) -> &'static str {
        match self {
            PlanRule::SliceNarrowerThanShift => "(a) slice-narrower-than-shift",
            PlanRule::TonesInsideIfBand => "(b) tones-inside-if-band",
            PlanRule::IfRejectionExceedsGain => "(c) if-rejection-exceeds-gain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanCheck {
    pub rule: PlanRule,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub checks: Vec<PlanCheck>,
}

impl PlanReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PlanCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, rule: PlanRule) -> &PlanCheck {
        self.checks.iter().find(|c| c.rule == rule).expect("every rule is reported")
    }
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.rule.label(), c.detail)?;
        }
        Ok(())
    }
}

pub fn validate_plan(radar: &RadarParams, xpdr: &TransponderParams, max_range_m: f64) -> PlanReport {
    validate_plan_with_margin(radar, xpdr, max_range_m, DEFAULT_STABILITY_MARGIN_DB)
}

/// Frequency-plan checks. Tone k sits at `s_k + 2BR/(cT)`, with `R` including
/// the hardware-delay bias.
pub fn validate_plan_with_margin(radar: &RadarParams, xpdr: &TransponderParams, max_range_m: f64, margin_db: f64) -> PlanReport {
    let min_shift = xpdr.shift1_hz.abs().min(xpdr.shift2_hz.abs());
    let max_shift = xpdr.shift1_hz.abs().max(xpdr.shift2_hz.abs());
    let width = xpdr.slice_width_hz();

    let a = PlanCheck {
        rule: PlanRule::SliceNarrowerThanShift,
        passed: width < min_shift,
        detail: format!("slice width {:.3} MHz vs smallest shift {:.3} MHz", width / 1e6, min_shift / 1e6),
    };

    let bias = xpdr.delay_bias_m(radar);
    let lowest = min_shift + radar.beat_hz(bias);
    let highest = max_shift + radar.beat_hz(max_range_m + bias);
    let [if_lo, if_hi] = radar.if_band_hz;
    let b = PlanCheck {
        rule: PlanRule::TonesInsideIfBand,
        passed: lowest >= if_lo && highest <= if_hi,
        detail: format!(
            "tones span {:.3}..{:.3} MHz for R <= {:.1} m, IF band {:.3}..{:.3} MHz",
            lowest / 1e6,
            highest / 1e6,
            max_range_m,
            if_lo / 1e6,
            if_hi / 1e6
        ),
    };

    let rejection = -if_filter_gain_db(&xpdr.if_filter, min_shift);
    let needed = xpdr.chain_gain_db + margin_db;
    let c = PlanCheck {
        rule: PlanRule::IfRejectionExceedsGain,
        passed: rejection >= needed,
        detail: format!(
            "IF rejection {:.1} dB at {:.3} MHz offset vs chain gain {:.1} dB + margin {:.1} dB",
            rejection,
            min_shift / 1e6,
            xpdr.chain_gain_db,
            margin_db
        ),
    };

    PlanReport { checks: vec![a, b, c] }
}
