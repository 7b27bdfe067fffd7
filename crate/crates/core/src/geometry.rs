//! Platform trajectories, slant ranges and angular responses.
//!
//! The platform is treated as stationary within a pulse (stop-and-go), so a
//! pulse carries exactly one platform position and one slant range per
//! target. Azimuths are in degrees, counter-clockwise from +x, measured at
//! the target towards the platform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub type Vec3 = [f64; 3];

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("trajectory overrun: {pulses} pulses at {speed_mps} m/s and PRF {prf_hz} Hz cover {covered_m:.3} m > path length {path_m} m")]
    Overrun {
        pulses: usize,
        speed_mps: f64,
        prf_hz: f64,
        covered_m: f64,
        path_m: f64,
    },
    #[error("invalid trajectory: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectorySpec {
    /// Straight pass parallel to +x at `ground_standoff_m` from the reference
    /// target along +y, centered on the target's broadside point.
    Linear {
        path_length_m: f64,
        altitude_m: f64,
        ground_standoff_m: f64,
        speed_mps: f64,
    },
    /// Circle around the reference target's ground position.
    Circular {
        radius_m: f64,
        altitude_m: f64,
        angular_rate_deg_s: f64,
        #[serde(default)]
        start_azimuth_deg: f64,
    },
}

impl TrajectorySpec {
    pub fn altitude_m(&self) -> f64 {
        match *self {
            TrajectorySpec::Linear { altitude_m, .. } | TrajectorySpec::Circular { altitude_m, .. } => altitude_m,
        }
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        match *self {
            TrajectorySpec::Linear {
                path_length_m,
                altitude_m,
                ground_standoff_m,
                speed_mps,
            } => {
                if !(altitude_m > 0.0) {
                    return Err(GeometryError::Invalid("altitude must be positive"));
                }
                if !(path_length_m > 0.0 && path_length_m.is_finite()) {
                    return Err(GeometryError::Invalid("path length must be positive"));
                }
                if !(ground_standoff_m >= 0.0) {
                    return Err(GeometryError::Invalid("ground standoff must be non-negative"));
                }
                if !(speed_mps >= 0.0 && speed_mps.is_finite()) {
                    return Err(GeometryError::Invalid("speed must be non-negative"));
                }
            }
            TrajectorySpec::Circular {
                radius_m,
                altitude_m,
                angular_rate_deg_s,
                ..
            } => {
                if !(altitude_m > 0.0) {
                    return Err(GeometryError::Invalid("altitude must be positive"));
                }
                if !(radius_m >= 0.0 && radius_m.is_finite()) {
                    return Err(GeometryError::Invalid("radius must be non-negative"));
                }
                if !angular_rate_deg_s.is_finite() {
                    return Err(GeometryError::Invalid("angular rate must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Largest platform-to-point distance over the whole trajectory (not just
    /// the simulated pulses).
    pub fn max_distance_to(&self, center: Vec3, point: Vec3) -> f64 {
        match *self {
            TrajectorySpec::Linear {
                path_length_m,
                altitude_m,
                ground_standoff_m,
                ..
            } => {
                let half = path_length_m / 2.0;
                [-half, half]
                    .iter()
                    .map(|&dx| {
                        let p = [center[0] + dx, center[1] + ground_standoff_m, center[2] + altitude_m];
                        distance(p, point)
                    })
                    .fold(0.0, f64::max)
            }
            TrajectorySpec::Circular { radius_m, altitude_m, .. } => {
                let dx = point[0] - center[0];
                let dy = point[1] - center[1];
                let ground = (dx * dx + dy * dy).sqrt() + radius_m;
                let dz = center[2] + altitude_m - point[2];
                (ground * ground + dz * dz).sqrt()
            }
        }
    }
}

fn distance(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Platform state for one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseGeometry<T> {
    pub pulse_index: usize,
    pub time_s: T,
    pub platform: [T; 3],
    /// One entry per target, in the order the targets were given.
    pub slant_range_m: Vec<T>,
    pub look_azimuth_deg: Vec<T>,
}

/// Generates one platform position per pulse and the slant range and look
/// azimuth to each target.
///
/// `center` is the reference target (the transponder); linear passes are
/// centered on its broadside point and circles on its ground position.
pub fn gen_trajectory<T: Scalar>(
    spec: &TrajectorySpec,
    prf_hz: f64,
    pulse_count: usize,
    center: Vec3,
    targets: &[Vec3],
) -> Result<Vec<PulseGeometry<T>>, GeometryError> {
    spec.check()?;
    if !(prf_hz > 0.0) {
        return Err(GeometryError::Invalid("PRF must be positive"));
    }
    let pri = T::of(1.0 / prf_hz);
    let mid = T::of(pulse_count.saturating_sub(1) as f64 / 2.0) * pri;
    let c = center.map(T::of);
    let tg: Vec<[T; 3]> = targets.iter().map(|p| p.map(T::of)).collect();

    let position = |t: T| -> [T; 3] {
        match *spec {
            TrajectorySpec::Linear {
                altitude_m,
                ground_standoff_m,
                speed_mps,
                ..
            } => [
                c[0] + T::of(speed_mps) * (t - mid),
                c[1] + T::of(ground_standoff_m),
                c[2] + T::of(altitude_m),
            ],
            TrajectorySpec::Circular {
                radius_m,
                altitude_m,
                angular_rate_deg_s,
                start_azimuth_deg,
            } => {
                let az = (T::of(start_azimuth_deg) + T::of(angular_rate_deg_s) * t).to_radians();
                [
                    c[0] + T::of(radius_m) * az.cos(),
                    c[1] + T::of(radius_m) * az.sin(),
                    c[2] + T::of(altitude_m),
                ]
            }
        }
    };

    if let TrajectorySpec::Linear {
        path_length_m,
        speed_mps,
        ..
    } = *spec
    {
        let covered = pulse_count.saturating_sub(1) as f64 * speed_mps / prf_hz;
        if covered > path_length_m {
            return Err(GeometryError::Overrun {
                pulses: pulse_count,
                speed_mps,
                prf_hz,
                covered_m: covered,
                path_m: path_length_m,
            });
        }
    }

    Ok((0..pulse_count)
        .map(|k| {
            let t = T::of_usize(k) * pri;
            let p = position(t);
            let (slant_range_m, look_azimuth_deg) = tg
                .iter()
                .map(|q| {
                    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    (r, d[1].atan2(d[0]).to_degrees())
                })
                .unzip();
            PulseGeometry {
                pulse_index: k,
                time_s: t,
                platform: p,
                slant_range_m,
                look_azimuth_deg,
            }
        })
        .collect())
}

/// Wraps an angle in degrees to (-180, 180].
pub fn wrap_deg<T: Scalar>(a: T) -> T {
    let full = T::of(360.0);
    let half = T::of(180.0);
    let mut w = (a + half) % full;
    if w <= T::zero() {
        w = w + full;
    }
    w - half
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKind {
    Horn,
    Dipole,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: AntennaKind,
    pub peak_gain_dbi: f64,
    /// Half-power beamwidth; horn only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hpbw_deg: Option<f64>,
    /// Azimuth the horn points at.
    #[serde(default)]
    pub boresight_azimuth_deg: f64,
}

impl AntennaPattern {
    pub fn horn(peak_gain_dbi: f64, hpbw_deg: f64) -> Self {
        AntennaPattern {
            kind: AntennaKind::Horn,
            peak_gain_dbi,
            hpbw_deg: Some(hpbw_deg),
            boresight_azimuth_deg: 0.0,
        }
    }

    pub fn dipole(peak_gain_dbi: f64) -> Self {
        AntennaPattern {
            kind: AntennaKind::Dipole,
            peak_gain_dbi,
            hpbw_deg: None,
            boresight_azimuth_deg: 0.0,
        }
    }

    pub fn isotropic() -> Self {
        AntennaPattern {
            kind: AntennaKind::Isotropic,
            peak_gain_dbi: 0.0,
            hpbw_deg: None,
            boresight_azimuth_deg: 0.0,
        }
    }

    /// Gain towards a look azimuth, accounting for the boresight direction.
    pub fn gain_towards_db<T: Scalar>(&self, look_azimuth_deg: T) -> T {
        antenna_gain_db(self, wrap_deg(look_azimuth_deg - T::of(self.boresight_azimuth_deg)))
    }
}

/// Gain in dBi at an angle off boresight.
///
/// Horns use a Gaussian mainlobe, `peak - 3 (θ / (hpbw/2))²` dB, with no
/// sidelobes. Dipoles and isotropic radiators are constant in azimuth.
pub fn antenna_gain_db<T: Scalar>(pattern: &AntennaPattern, off_boresight_deg: T) -> T {
    let peak = T::of(pattern.peak_gain_dbi);
    match pattern.kind {
        AntennaKind::Horn => {
            let half = T::of(pattern.hpbw_deg.unwrap_or(f64::INFINITY) / 2.0);
            let x = off_boresight_deg / half;
            peak - T::of(3.0) * x * x
        }
        AntennaKind::Dipole | AntennaKind::Isotropic => peak,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assembly {
    Single,
    QuadBackToBack,
}

impl Assembly {
    pub fn faces(self) -> usize {
        match self {
            Assembly::Single => 1,
            Assembly::QuadBackToBack => 4,
        }
    }
}

/// Floor applied to the corner response outside every face lobe.
pub const CORNER_NULL_FLOOR_DB: f64 = -100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerTarget {
    pub position_m: Vec3,
    pub edge_length_m: f64,
    pub assembly: Assembly,
    pub boresight_azimuths_deg: Vec<f64>,
    pub usable_halfwidth_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_rcs_dbsm: Option<f64>,
}

impl CornerTarget {
    /// Four back-to-back faces whose lobe boundaries fall at `first_null_deg`
    /// and every 90° from it.
    pub fn quad(position_m: Vec3, edge_length_m: f64, first_null_deg: f64, usable_halfwidth_deg: f64) -> Self {
        CornerTarget {
            position_m,
            edge_length_m,
            assembly: Assembly::QuadBackToBack,
            boresight_azimuths_deg: (0..4).map(|k| first_null_deg + 45.0 + 90.0 * k as f64).collect(),
            usable_halfwidth_deg,
            peak_rcs_dbsm: None,
        }
    }

    pub fn single(position_m: Vec3, edge_length_m: f64, boresight_deg: f64, usable_halfwidth_deg: f64) -> Self {
        CornerTarget {
            position_m,
            edge_length_m,
            assembly: Assembly::Single,
            boresight_azimuths_deg: vec![boresight_deg],
            usable_halfwidth_deg,
            peak_rcs_dbsm: None,
        }
    }

    /// Peak RCS in dBsm: the explicit value when given, otherwise the
    /// triangular trihedral `4π a⁴ / (3 λ²)`.
    pub fn peak_rcs_dbsm(&self, wavelength_m: f64) -> f64 {
        self.peak_rcs_dbsm
            .unwrap_or_else(|| 10.0 * trihedral_rcs_m2(self.edge_length_m, wavelength_m).log10())
    }

    /// Azimuths midway between adjacent faces; for a single face, the
    /// direction opposite its boresight.
    pub fn null_azimuths_deg(&self) -> Vec<f64> {
        let mut b = self.boresight_azimuths_deg.clone();
        if b.len() == 1 {
            return vec![wrap_deg(b[0] + 180.0)];
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        (0..b.len())
            .map(|i| {
                let a = b[i];
                let next = if i + 1 < b.len() { b[i + 1] } else { b[0] + 360.0 };
                wrap_deg((a + next) / 2.0)
            })
            .collect()
    }

    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.edge_length_m > 0.0) {
            return Err("edge length must be positive");
        }
        if self.boresight_azimuths_deg.len() != self.assembly.faces() {
            return Err("boresight count must match the assembly face count");
        }
        if !(self.usable_halfwidth_deg > 0.0 && self.usable_halfwidth_deg <= 180.0) {
            return Err("usable halfwidth must be in (0, 180] degrees");
        }
        if self.assembly == Assembly::QuadBackToBack && self.usable_halfwidth_deg > 45.0 {
            return Err("quad assembly lobes must not overlap (halfwidth <= 45 degrees)");
        }
        Ok(())
    }
}

pub fn trihedral_rcs_m2(edge_m: f64, wavelength_m: f64) -> f64 {
    4.0 * std::f64::consts::PI * edge_m.powi(4) / (3.0 * wavelength_m * wavelength_m)
}

/// Relative RCS in dB (0 at a face boresight).
///
/// Each face contributes a raised-cosine power lobe `cos²(π/2 · Δ/w)` for
/// `|Δ| < w`, where `w` is the usable halfwidth; outside every lobe the
/// response sits at [`CORNER_NULL_FLOOR_DB`].
pub fn corner_response_db<T: Scalar>(target: &CornerTarget, look_azimuth_deg: T) -> T {
    let w = T::of(target.usable_halfwidth_deg);
    let half_pi = T::FRAC_PI_2();
    let best = target
        .boresight_azimuths_deg
        .iter()
        .map(|&b| {
            let d = wrap_deg(look_azimuth_deg - T::of(b)).abs();
            if d < w {
                let c = (half_pi * d / w).cos();
                c * c
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max);
    let floor = T::of(10f64.powf(CORNER_NULL_FLOOR_DB / 10.0));
    T::of(10.0) * best.max(floor).log10()
}

/// Absolute corner RCS in dBsm towards a look azimuth.
pub fn corner_rcs_dbsm<T: Scalar>(target: &CornerTarget, look_azimuth_deg: T, wavelength_m: f64) -> T {
    T::of(target.peak_rcs_dbsm(wavelength_m)) + corner_response_db(target, look_azimuth_deg)
}
