//! Closed-form quantities of the popularity×similarity growth models.
//!
//! Birth indices are accepted as reals `i >= 1` wherever the formula allows it, since
//! several of these expressions come from integrating over continuous time.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{ModelParams, BETA_BRANCH_TOL};

/// Probabilities are clamped to `[ε, 1-ε]` with this `ε` before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// `ln(PROB_FLOOR)`.
pub const LN_PROB_FLOOR: f64 = -690.7755278982137;

/// Radial coordinate at birth, `r_i = (2/ζ) ln i`.
pub fn radial_coordinate(i: f64, zeta: f64) -> Result<f64> {
    if !(i >= 1.0) {
        return Err(Error::InvalidIndex { index: i, min: 1.0 });
    }
    Ok(2.0 / zeta * i.ln())
}

/// Radius of a node born at `r_initial` once the rim has grown to `r_current_rim`.
#[inline]
pub fn drifted_radius(r_initial: f64, r_current_rim: f64, beta: f64) -> f64 {
    beta * r_initial + (1.0 - beta) * r_current_rim
}

/// `expm1(a·x)/a`, continuous at `a = 0` where it equals `x`.
#[inline]
fn expm1_ratio(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        x
    } else {
        (a * x).exp_m1() / a
    }
}

/// `I_i = (1 - i^{-(1-β)})/(1-β)`, with the `β → 1` limit `ln i`.
pub fn attraction_integral(i: f64, beta: f64) -> f64 {
    let eps = 1.0 - beta;
    if eps.abs() < BETA_BRANCH_TOL {
        i.ln()
    } else {
        expm1_ratio(-eps, i.ln())
    }
}

/// `2T / sin(Tπ)`, with its `T → 0` limit `2/π`.
fn temperature_factor(temperature: f64) -> Result<f64> {
    if temperature == 0.0 {
        return Ok(2.0 / PI);
    }
    if !(temperature > 0.0 && temperature < 1.0) {
        return Err(Error::TemperatureOutOfRange(temperature));
    }
    Ok(2.0 * temperature / (temperature * PI).sin())
}

/// Connection radius `R_i = r_i - (2/ζ) ln[(2T/sin Tπ)(I_i/m̄_i)]`.
///
/// With `mbar = m` this is the basic model's radius; pass `m̄_i(t)` for the
/// external-links-only variant.
pub fn connection_radius(i: f64, params: &ModelParams, mbar: f64) -> Result<f64> {
    if !(i >= 2.0) {
        return Err(Error::InvalidIndex { index: i, min: 2.0 });
    }
    if !(mbar > 0.0) {
        return Err(Error::InvalidParameter(format!("expected link count must be > 0, got {mbar}")));
    }
    let factor = temperature_factor(params.temperature)?;
    let r_i = 2.0 / params.zeta * i.ln();
    let ii = attraction_integral(i, params.beta());
    Ok(r_i - 2.0 / params.zeta * (factor * ii / mbar).ln())
}

/// Logistic connection probability `1/(1 + exp((ζ/2T)(x - R)))`; a step at `T = 0`.
pub fn connection_probability(x: f64, radius: f64, temperature: f64, zeta: f64) -> f64 {
    if temperature == 0.0 {
        return if x <= radius { 1.0 } else { 0.0 };
    }
    let z = zeta / (2.0 * temperature) * (x - radius);
    logistic_of_exponent(z)
}

/// `1/(1 + e^z)` without overflow.
#[inline]
pub fn logistic_of_exponent(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `(ln p, ln(1-p))` for `p = 1/(1 + e^z)`, clamped to `p ∈ [ε, 1-ε]`.
#[inline]
pub fn log_probabilities_of_exponent(z: f64) -> (f64, f64) {
    (clamp_ln(-softplus(z)), clamp_ln(-softplus(-z)))
}

/// Clamps a log-probability into `[ln ε, ln(1-ε)]`.
#[inline]
pub fn clamp_ln(lp: f64) -> f64 {
    // ln(1 - 1e-300) rounds to -1e-300
    lp.clamp(LN_PROB_FLOOR, -PROB_FLOOR)
}

/// `(ln p, ln(1-p))` for the connection probability at distance `x`.
pub fn log_connection_probability(x: f64, radius: f64, temperature: f64, zeta: f64) -> (f64, f64) {
    if temperature == 0.0 {
        return if x <= radius {
            (clamp_ln(0.0), LN_PROB_FLOOR)
        } else {
            (LN_PROB_FLOOR, clamp_ln(0.0))
        };
    }
    log_probabilities_of_exponent(zeta / (2.0 * temperature) * (x - radius))
}

/// Expected number of internal links node `i` accumulates with older nodes by time `t`,
/// with the closed-form limits at `β = 1/2` and `β = 1`.
pub fn expected_internal_links(i: f64, params: &ModelParams) -> f64 {
    let beta = params.beta();
    let t = params.t as f64;
    let l = params.l;
    if l == 0.0 {
        return 0.0;
    }
    if (beta - 0.5).abs() < BETA_BRANCH_TOL {
        let d = 1.0 - t.powf(-0.5);
        return (l * (1.0 - i.powf(-0.5)) / (d * d) * (t / i).ln()).max(0.0);
    }
    if (beta - 1.0).abs() < BETA_BRANCH_TOL {
        let lt = t.ln();
        return (2.0 * l * (t - i) * i.ln() / (i * lt * lt)).max(0.0);
    }
    expected_internal_links_general(i, params)
}

/// The general-β expression for [`expected_internal_links`], without the limit
/// branches. Written with `expm1` so that it stays accurate close to the branch points.
pub fn expected_internal_links_general(i: f64, params: &ModelParams) -> f64 {
    let beta = params.beta();
    let t = params.t as f64;
    // 2L(1-β)/((1-t^{-(1-β)})²(2β-1)) [(t/i)^{2β-1} - 1][1 - i^{-(1-β)}]
    //   = 2L · E(2β-1, ln t/i) · g(1-β, ln i) / g(1-β, ln t)²
    let growth = expm1_ratio(2.0 * beta - 1.0, (t / i).ln());
    let eps = 1.0 - beta;
    let gi = expm1_ratio(-eps, i.ln());
    let gt = expm1_ratio(-eps, t.ln());
    (2.0 * params.l * growth * gi / (gt * gt)).max(0.0)
}

/// `m̄_i(t) = m + L̄_i(t)`.
pub fn expected_initial_links(i: f64, params: &ModelParams) -> f64 {
    params.m + expected_internal_links(i, params)
}

/// Density of the radial coordinate at time `t`, `(ζ/2β) exp((ζ/2β)(r - r_t))`.
pub fn radial_density(r: f64, params: &ModelParams) -> f64 {
    let k = params.zeta / (2.0 * params.beta());
    k * (k * (r - params.rim_radius())).exp()
}

/// Cumulative distribution matching [`radial_density`], `exp((ζ/2β)(r - r_t))` for
/// `r <= r_t`.
pub fn radial_cdf(r: f64, params: &ModelParams) -> f64 {
    let k = params.zeta / (2.0 * params.beta());
    (k * (r - params.rim_radius())).exp().min(1.0)
}

/// Expected degree of node `i` at time `t`: initial links plus links attracted from
/// later nodes, using the large-`t` approximation `I_l ≈ I_t`.
pub fn expected_degree(i: f64, params: &ModelParams) -> f64 {
    let beta = params.beta();
    let t = params.t as f64;
    let it = attraction_integral(t, beta);
    let u = i / t;
    let z = (t / i).ln();
    let external = params.m / (it * beta) * (u.powf(-beta) - 1.0);
    let internal = if (beta - 1.0).abs() < BETA_BRANCH_TOL {
        // limit of the bracket / (1-β) at β = 1
        2.0 * params.l / (it * it) * ((t / i) * z - t / i + 1.0)
    } else {
        let bracket = u.powf(-beta) - 1.0 - beta * expm1_ratio(2.0 * beta - 1.0, z);
        2.0 * params.l / (it * it) * bracket / (beta * (1.0 - beta))
    };
    expected_initial_links(i, params) + external + internal
}
