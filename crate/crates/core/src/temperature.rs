//! Temperature estimation from a family of embeddings.
//!
//! The network is embedded once per grid temperature. Curves from temperatures at or
//! below the true one come out nearly identical, so the family is scanned from the
//! smallest temperature while successive curves stay within [`CONVERGENCE_SUP`]; the
//! pooled curve of that run is then compared, over its tail, with the theoretical
//! connection probability at every grid temperature.

use serde::{Deserialize, Serialize};

use crate::context::{GlobalProbability, LikelihoodContext};
use crate::embed::{embed, EmbedOptions};
use crate::error::{Error, Result};
use crate::graph::AdjacencySnapshot;
use crate::metrics::{connection_curve, ConnectionCurve, MIN_BIN_PAIRS};
use crate::params::ModelParams;

/// Successive curves closer than this (sup-norm) count as converged.
pub const CONVERGENCE_SUP: f64 = 0.02;

/// Distance range compared against theory. `lo = None` starts the window two units
/// before the first bin where the converged curve falls below 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailWindow {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub min_pairs: u64,
}

impl Default for TailWindow {
    fn default() -> Self {
        TailWindow { lo: None, hi: None, min_pairs: MIN_BIN_PAIRS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InferenceStatus {
    Converged,
    /// A single grid value; nothing to check convergence against.
    Unverified,
    /// No two successive curves from the smallest temperature agree.
    NoStableEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureInference {
    pub status: InferenceStatus,
    pub estimate: Option<f64>,
    /// Grid in ascending order; curves and errors follow it.
    pub grid: Vec<f64>,
    pub curves: Vec<ConnectionCurve>,
    /// Sup-norm distance between curves `k` and `k + 1`.
    pub successive_sup: Vec<Option<f64>>,
    /// Number of grid values in the converged run.
    pub converged: usize,
    /// `(lo, hi)` distance range used for the fit.
    pub window: Option<(f64, f64)>,
    /// Squared error per grid temperature over the window.
    pub squared_error: Vec<f64>,
}

/// Embeds `net` at each grid temperature and picks the best-matching one.
pub fn infer_temperature(
    net: &AdjacencySnapshot,
    params: &ModelParams,
    grid: &[f64],
    window: TailWindow,
    options: &EmbedOptions,
) -> Result<TemperatureInference> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("temperature grid is empty".into()));
    }
    if let Some(&t) = grid.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::TemperatureOutOfRange(t));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut curves = Vec::with_capacity(grid.len());
    let mut contexts = Vec::with_capacity(grid.len());
    for &t in &grid {
        let p = params.with_temperature(t).with_size(net.node_count());
        let ctx = LikelihoodContext::new(p)?;
        let e = embed(net, &p, options)?;
        curves.push(connection_curve(&e, net, &ctx)?);
        contexts.push(ctx);
        log::info!("embedded at T = {t}");
    }
    Ok(select(grid, curves, &contexts, window))
}

/// Fit step of [`infer_temperature`] on precomputed curves.
pub fn select(
    grid: Vec<f64>,
    curves: Vec<ConnectionCurve>,
    contexts: &[LikelihoodContext],
    window: TailWindow,
) -> TemperatureInference {
    let successive_sup: Vec<Option<f64>> =
        curves.windows(2).map(|w| w[0].sup_distance(&w[1], window.min_pairs)).collect();
    let converged = 1 + successive_sup.iter().take_while(|d| d.is_some_and(|d| d < CONVERGENCE_SUP)).count();
    let mut out = TemperatureInference {
        status: InferenceStatus::NoStableEstimate,
        estimate: None,
        grid,
        curves,
        successive_sup,
        converged,
        window: None,
        squared_error: Vec::new(),
    };
    if out.grid.len() > 1 && converged < 2 {
        return out;
    }
    let pooled = pool(&out.curves[..converged]);
    let centers: Vec<f64> = (0..pooled.0.len()).map(|b| (b as f64 + 0.5) * out.curves[0].bin_width).collect();
    let lo = window.lo.unwrap_or_else(|| {
        let half = (0..pooled.0.len())
            .find(|&b| pooled.0[b] >= window.min_pairs && pooled.1[b] < 0.5)
            .map_or(0.0, |b| centers[b]);
        half - 2.0
    });
    let hi = window.hi.unwrap_or(f64::INFINITY);
    let bins: Vec<usize> =
        (0..centers.len()).filter(|&b| pooled.0[b] >= window.min_pairs && centers[b] >= lo && centers[b] <= hi).collect();
    out.window = Some((lo, hi.min(centers.last().copied().unwrap_or(lo))));
    out.squared_error = contexts
        .iter()
        .map(|ctx| {
            bins.iter()
                .map(|&b| {
                    let d = ctx.global_connection_probability(centers[b], GlobalProbability::Exact) - pooled.1[b];
                    d * d
                })
                .sum()
        })
        .collect();
    let best = (0..out.grid.len()).min_by(|&a, &b| out.squared_error[a].total_cmp(&out.squared_error[b]));
    out.estimate = best.map(|k| out.grid[k]);
    out.status = if out.grid.len() == 1 { InferenceStatus::Unverified } else { InferenceStatus::Converged };
    out
}

/// Pair counts (in every curve) and pooled linked fraction per bin.
fn pool(curves: &[ConnectionCurve]) -> (Vec<u64>, Vec<f64>) {
    let n = curves.iter().map(|c| c.bin_count()).min().unwrap_or(0);
    let mut pairs = vec![u64::MAX; n];
    let mut total = vec![0u64; n];
    let mut linked = vec![0u64; n];
    for c in curves {
        for b in 0..n {
            pairs[b] = pairs[b].min(c.pair_counts[b]);
            total[b] += c.pair_counts[b];
            linked[b] += c.linked_counts[b];
        }
    }
    let frac = (0..n).map(|b| if total[b] > 0 { linked[b] as f64 / total[b] as f64 } else { 0.0 }).collect();
    (pairs, frac)
}
