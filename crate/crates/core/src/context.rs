//! Precomputed quantities behind the global connection probability `p̃(x)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    attraction_integral, clamp_ln, connection_radius, expected_initial_links, log_probabilities_of_exponent,
    logistic_of_exponent, LN_PROB_FLOOR,
};
use crate::params::{ModelParams, BETA_BRANCH_TOL};

/// How `p̃(x)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GlobalProbability {
    /// Average over the youngest node's birth time `i_min..=t`.
    #[default]
    Exact,
    /// Only the `i = t` term, `1/(1 + e^{(ζ/2T)(x - R_t)})`.
    FirstTerm,
}

#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    params: ModelParams,
    r_t: f64,
    /// `delta[i]` holds `Δ_i(t)` for `i` in `2..=t`; slots 0 and 1 are unused.
    delta: Vec<f64>,
    a: Option<f64>,
}

impl LikelihoodContext {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        if params.t < 2 {
            return Err(Error::InvalidParameter("the global connection probability needs t >= 2".into()));
        }
        let t = params.t as f64;
        let beta = params.beta();
        let r_t = connection_radius(t, &params, params.m)?;
        let ln_it = attraction_integral(t, beta).ln();
        let mut delta = vec![0.0; params.t + 1];
        for i in 2..params.t {
            let fi = i as f64;
            let s = (2.0 * beta - 1.0) * (t / fi).ln() + params.m.ln() + attraction_integral(fi, beta).ln()
                - expected_initial_links(fi, &params).ln()
                - ln_it;
            delta[i] = 2.0 / params.zeta * s;
        }
        // exact at i = t: m̄_t = m and I_i = I_t
        delta[params.t] = 0.0;
        let a = taylor_constant(&params);
        Ok(LikelihoodContext { params, r_t, delta, a })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Connection radius at the final time, `R_t`.
    pub fn r_t(&self) -> f64 {
        self.r_t
    }

    /// `Δ_i(t)` for `2 <= i <= t`.
    pub fn delta(&self, i: usize) -> f64 {
        assert!(i >= 2 && i <= self.params.t, "delta index {i} out of range");
        self.delta[i]
    }

    /// The Taylor constant `A`; `None` at `β = 1/2` where it is undefined.
    pub fn taylor_constant(&self) -> Option<f64> {
        self.a
    }

    /// Whether `|1 - A| <= 1`, the regime where the first-term form is expected to be accurate.
    pub fn first_term_regime(&self) -> Option<bool> {
        self.a.map(|a| (1.0 - a).abs() <= 1.0)
    }

    /// Smallest birth time of the younger node for which `x(i) >= 0`.
    pub fn i_min(&self, x: f64) -> usize {
        let t = self.params.t;
        let eps = 1.0 - self.params.beta();
        if eps.abs() < BETA_BRANCH_TOL {
            return if x > 0.0 { 2 } else { t };
        }
        let v = (t as f64 * (-self.params.zeta * x / (4.0 * eps)).exp()).ceil();
        if v.is_nan() {
            return t;
        }
        (v as usize).clamp(2, t)
    }

    fn exponent_scale(&self) -> f64 {
        self.params.zeta / (2.0 * self.params.temperature)
    }

    /// `p̃(x)`.
    pub fn global_connection_probability(&self, x: f64, mode: GlobalProbability) -> f64 {
        let temp = self.params.temperature;
        match mode {
            GlobalProbability::FirstTerm => {
                if temp == 0.0 {
                    return if x <= self.r_t { 1.0 } else { 0.0 };
                }
                logistic_of_exponent(self.exponent_scale() * (x - self.r_t))
            }
            GlobalProbability::Exact => {
                let lo = self.i_min(x);
                let t = self.params.t;
                let mut s = 0.0;
                for i in lo..=t {
                    let e = x - self.r_t + self.delta[i];
                    s += if temp == 0.0 {
                        if e <= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        logistic_of_exponent(self.exponent_scale() * e)
                    };
                }
                s / (t - lo + 1) as f64
            }
        }
    }

    /// `(ln p̃(x), ln(1 - p̃(x)))`, clamped.
    pub fn log_global_connection_probability(&self, x: f64, mode: GlobalProbability) -> (f64, f64) {
        let temp = self.params.temperature;
        if temp == 0.0 {
            let p = self.global_connection_probability(x, mode);
            let ln = |v: f64| if v > 0.0 { clamp_ln(v.ln()) } else { LN_PROB_FLOOR };
            return (ln(p), ln(1.0 - p));
        }
        let scale = self.exponent_scale();
        match mode {
            GlobalProbability::FirstTerm => log_probabilities_of_exponent(scale * (x - self.r_t)),
            GlobalProbability::Exact => {
                let lo = self.i_min(x);
                let t = self.params.t;
                let n = (t - lo + 1) as f64;
                let mut lp = LogSumExp::default();
                let mut lq = LogSumExp::default();
                for i in lo..=t {
                    let z = scale * (x - self.r_t + self.delta[i]);
                    lp.push(-crate::model::softplus(z));
                    lq.push(-crate::model::softplus(-z));
                }
                (clamp_ln(lp.value() - n.ln()), clamp_ln(lq.value() - n.ln()))
            }
        }
    }
}

/// `(ln p̃, ln(1 - p̃))` in [`GlobalProbability::Exact`] mode, sampled on a uniform grid
/// and interpolated linearly. Only distances at which every birth time contributes
/// (`i_min = 2`) are tabulated; shorter ones are evaluated directly.
pub(crate) struct LogProbabilityTable<'a> {
    ctx: &'a LikelihoodContext,
    step: f64,
    first: usize,
    values: Vec<(f64, f64)>,
}

impl<'a> LogProbabilityTable<'a> {
    pub const STEP: f64 = 1e-4;

    /// Table covering distances up to `x_max`.
    pub fn new(ctx: &'a LikelihoodContext, x_max: f64) -> Self {
        use rayon::prelude::*;
        let p = &ctx.params;
        let eps = 1.0 - p.beta();
        let smooth_from = if eps.abs() < BETA_BRANCH_TOL { 0.0 } else { 4.0 * eps / p.zeta * (p.t as f64 / 2.0).ln() };
        let step = Self::STEP;
        let first = (smooth_from.max(0.0) / step).ceil() as usize + 1;
        let last = (x_max / step).ceil() as usize + 1;
        let values = (first..=last.max(first))
            .into_par_iter()
            .map(|k| ctx.log_global_connection_probability(k as f64 * step, GlobalProbability::Exact))
            .collect();
        LogProbabilityTable { ctx, step, first, values }
    }

    #[inline]
    pub fn get(&self, x: f64) -> (f64, f64) {
        let u = x / self.step;
        let k = u.floor();
        if k < self.first as f64 || k + 1.0 >= (self.first + self.values.len()) as f64 {
            return self.ctx.log_global_connection_probability(x, GlobalProbability::Exact);
        }
        let j = k as usize - self.first;
        let w = u - k;
        let (a, b) = (self.values[j], self.values[j + 1]);
        (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
    }
}

/// `A = (k̄ - 2m)(1-β) / [m(2β-1)(1 - t^{-(1-β)})]` with `k̄ = 2(m + L)`.
fn taylor_constant(params: &ModelParams) -> Option<f64> {
    let beta = params.beta();
    let c = 2.0 * beta - 1.0;
    if c.abs() < BETA_BRANCH_TOL {
        return None;
    }
    let kbar = params.average_degree();
    let eps = 1.0 - beta;
    let lt = (params.t as f64).ln();
    // (1 - t^{-(1-β)})/(1-β), with its β = 1 limit ln t
    let g = if eps.abs() < BETA_BRANCH_TOL { lt } else { -(-eps * lt).exp_m1() / eps };
    Some((kbar - 2.0 * params.m) / (params.m * c * g))
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    pub(crate) fn push(&mut self, v: f64) {
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}
