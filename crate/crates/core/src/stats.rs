//! Small statistics helpers: Kolmogorov–Smirnov distance, power-law tail fit,
//! rank correlation, least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencySnapshot;
use crate::params::ModelParams;

/// One-sample KS statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Exponent of `P(k) ~ k^-γ`.
    pub gamma: f64,
    pub k_min: usize,
    /// Observations with `k >= k_min`.
    pub n_tail: usize,
    /// KS distance between the tail and the fitted law.
    pub ks: f64,
}

/// Smallest tail the fit will consider.
const MIN_TAIL: usize = 50;

/// Maximum-likelihood power-law fit to the upper tail of integer data.
///
/// For each candidate `k_min` the exponent is the discrete MLE in its continuous
/// approximation, `1 + n / Σ ln(k / (k_min - 1/2))`; the `k_min` whose fit is closest
/// to the data in KS distance wins.
pub fn fit_power_law_tail(values: &[usize]) -> Result<PowerLawFit> {
    let mut ks: Vec<usize> = values.iter().copied().filter(|&k| k > 0).collect();
    ks.sort_unstable();
    if ks.len() < MIN_TAIL {
        return Err(Error::InvalidParameter(format!("{} positive values; a tail fit needs {MIN_TAIL}", ks.len())));
    }
    let mut candidates: Vec<usize> = ks.clone();
    candidates.dedup();
    let mut best: Option<PowerLawFit> = None;
    for &k_min in &candidates {
        let start = ks.partition_point(|&k| k < k_min);
        let tail = &ks[start..];
        if tail.len() < MIN_TAIL {
            break;
        }
        let shift = k_min as f64 - 0.5;
        let s: f64 = tail.iter().map(|&k| (k as f64 / shift).ln()).sum();
        if s <= 0.0 {
            continue;
        }
        let n = tail.len() as f64;
        let gamma = 1.0 + n / s;
        // P(K >= k) ≈ ((k - 1/2)/(k_min - 1/2))^(1 - γ)
        let ccdf = |k: usize| ((k as f64 - 0.5) / shift).powf(1.0 - gamma);
        let mut d: f64 = 0.0;
        let mut idx = 0;
        while idx < tail.len() {
            let k = tail[idx];
            let run = tail[idx..].partition_point(|&v| v == k);
            let emp_ge = (tail.len() - idx) as f64 / n;
            let emp_gt = (tail.len() - idx - run) as f64 / n;
            d = d.max((emp_ge - ccdf(k)).abs()).max((emp_gt - ccdf(k + 1)).abs());
            idx += run;
        }
        if best.is_none_or(|b| d < b.ks) {
            best = Some(PowerLawFit { gamma, k_min, n_tail: tail.len(), ks: d });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no tail with a positive log sum".into()))
}

/// Estimates the model parameters that are not given: `m` as the minimum degree,
/// `L = (k̄ - 2m)/2` floored at 0, `γ` from the degree tail. Returns the parameters
/// and a note per estimated value.
pub fn estimate_params(
    net: &AdjacencySnapshot,
    m: Option<f64>,
    l: Option<f64>,
    gamma: Option<f64>,
    temperature: f64,
    zeta: f64,
) -> Result<(ModelParams, serde_json::Map<String, serde_json::Value>)> {
    let mut notes = serde_json::Map::new();
    let degrees = net.degrees();
    let m = match m {
        Some(m) => m,
        None => {
            let v = degrees.iter().copied().min().unwrap_or(0).max(1) as f64;
            notes.insert("m".into(), serde_json::json!({"estimated": v, "rule": "minimum observed degree, at least 1"}));
            v
        }
    };
    let l = match l {
        Some(l) => l,
        None => {
            let v = ((net.average_degree() - 2.0 * m) / 2.0).max(0.0);
            notes.insert("L".into(), serde_json::json!({"estimated": v, "rule": "(mean degree - 2m)/2, floored at 0"}));
            v
        }
    };
    let gamma = match gamma {
        Some(g) => g,
        None => {
            let fit = fit_power_law_tail(&degrees)?;
            notes.insert(
                "gamma".into(),
                serde_json::json!({
                    "estimated": fit.gamma,
                    "rule": "discrete power-law MLE on the degree tail, k_min by minimum KS distance",
                    "k_min": fit.k_min,
                    "n_tail": fit.n_tail,
                    "ks": fit.ks,
                }),
            );
            fit.gamma
        }
    };
    let params = ModelParams::new(m, l, gamma, temperature, zeta, net.node_count())?;
    Ok((params, notes))
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k + 1;
        while e < idx.len() && v[idx[e]] == v[idx[k]] {
            e += 1;
        }
        let mean = (k + e + 1) as f64 / 2.0;
        for &i in &idx[k..e] {
            r[i] = mean;
        }
        k = e;
    }
    r
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares `(slope, intercept)` of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
