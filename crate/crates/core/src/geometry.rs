//! Polar coordinates and distances in the hyperbolic plane of curvature `-ζ²`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// A point in native polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    /// Builds a point, wrapping `theta` into `[0, 2π)`.
    pub fn new(r: f64, theta: f64) -> Self {
        PolarPoint { r, theta: normalize_angle(theta) }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angular separation `π - |π - |θa - θb||`, in `[0, π]`.
#[inline]
pub fn angular_separation(a: f64, b: f64) -> f64 {
    PI - (PI - (a - b).abs()).abs()
}

/// Exact hyperbolic distance.
///
/// Evaluates `arccosh(cosh ζra cosh ζrb - sinh ζra sinh ζrb cos θ) / ζ`. The argument
/// minus one is formed as `2 sinh²(ζ(ra-rb)/2) + 2 sinh ζra sinh ζrb sin²(θ/2)`, which
/// does not cancel for nearby points, and is clamped to `>= 0` (argument `>= 1`).
pub fn hyperbolic_distance(a: PolarPoint, b: PolarPoint, zeta: f64) -> f64 {
    let dtheta = angular_separation(a.theta, b.theta);
    let half = (0.5 * dtheta).sin();
    let sd = (0.5 * zeta * (a.r - b.r)).sinh();
    let excess = 2.0 * sd * sd + 2.0 * (zeta * a.r).sinh() * (zeta * b.r).sinh() * half * half;
    acosh1p(excess) / zeta
}

/// `arccosh(1 + y)` for `y >= 0`, accurate for small `y`.
#[inline]
pub(crate) fn acosh1p(y: f64) -> f64 {
    let y = y.max(0.0);
    (y + (y * (y + 2.0)).sqrt()).ln_1p()
}

/// The additive approximation `ra + rb + (2/ζ) ln(θ/2)`. Only meant for tests and
/// diagnostics; every computation in the crate uses [`hyperbolic_distance`].
pub fn approximate_distance(a: PolarPoint, b: PolarPoint, zeta: f64) -> f64 {
    let dtheta = angular_separation(a.theta, b.theta);
    a.r + b.r + 2.0 / zeta * (0.5 * dtheta).ln()
}

/// `(sin θ/2, cos θ/2)`, from which `sin((θa - θb)/2)` follows without losing
/// precision for nearly equal angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HalfAngle {
    pub s: f64,
    pub c: f64,
}

impl HalfAngle {
    #[inline]
    pub fn new(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        HalfAngle { s, c }
    }

    /// `sin((θa - θb)/2)`; its square is `sin²(θab/2)` for the angular separation `θab`.
    #[inline]
    pub fn sin_half_diff(self, other: HalfAngle) -> f64 {
        self.s * other.c - self.c * other.s
    }
}

/// Precomputed hyperbolic functions of a pair of radii, so that the distance for many
/// trial angles costs one `acosh`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialPair {
    /// `cosh ζ(ra - rb) - 1`
    pub radial_excess: f64,
    /// `2 sinh ζra sinh ζrb`
    pub sinh_prod: f64,
}

impl RadialPair {
    #[inline]
    pub fn new(ra: f64, rb: f64, zeta: f64) -> Self {
        let sd = (0.5 * zeta * (ra - rb)).sinh();
        RadialPair {
            radial_excess: 2.0 * sd * sd,
            sinh_prod: 2.0 * (zeta * ra).sinh() * (zeta * rb).sinh(),
        }
    }

    /// `ζ·x` given `sin` of half the angular difference.
    #[inline]
    pub fn scaled_distance(&self, sin_half: f64) -> f64 {
        acosh1p(self.radial_excess + self.sinh_prod * sin_half * sin_half)
    }

    #[inline]
    pub fn distance(&self, sin_half: f64, zeta: f64) -> f64 {
        self.scaled_distance(sin_half) / zeta
    }
}
