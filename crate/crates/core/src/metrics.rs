//! Model-fit measures of an embedding: empirical connection probability and
//! logarithmic loss.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{GlobalProbability, LikelihoodContext, LogProbabilityTable};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::AdjacencySnapshot;
use crate::rng;

/// Rows handed to one parallel task. Fixed so that reductions do not depend on the
/// worker count.
const ROW_CHUNK: usize = 64;

/// Pairs required before a bin takes part in curve comparisons by default.
pub const MIN_BIN_PAIRS: u64 = 100;

/// Network size from which exact-mode log-likelihoods use a tabulated `p̃`.
pub const TABULATE_FROM: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCurve {
    pub bin_width: f64,
    /// `n + 1` edges for `n` bins starting at 0.
    pub bin_edges: Vec<f64>,
    pub pair_counts: Vec<u64>,
    pub linked_counts: Vec<u64>,
    /// Fraction of pairs in the bin that are linked; 0 for empty bins.
    pub empirical: Vec<f64>,
    /// `p̃` at the bin centre, averaged over birth times.
    pub theoretical: Vec<f64>,
    /// `p̃` at the bin centre from the `i = t` term alone.
    pub theoretical_first_term: Vec<f64>,
}

impl ConnectionCurve {
    pub fn bin_count(&self) -> usize {
        self.pair_counts.len()
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        0.5 * (self.bin_edges[b] + self.bin_edges[b + 1])
    }

    /// Largest `|empirical - theory|` over bins with at least `min_pairs` pairs.
    pub fn max_deviation(&self, mode: GlobalProbability, min_pairs: u64) -> f64 {
        let theory = match mode {
            GlobalProbability::Exact => &self.theoretical,
            GlobalProbability::FirstTerm => &self.theoretical_first_term,
        };
        (0..self.bin_count())
            .filter(|&b| self.pair_counts[b] >= min_pairs)
            .map(|b| (self.empirical[b] - theory[b]).abs())
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance between two empirical curves over bins where both have at
    /// least `min_pairs` pairs. `None` when no bin qualifies or bin widths differ.
    pub fn sup_distance(&self, other: &ConnectionCurve, min_pairs: u64) -> Option<f64> {
        if self.bin_width != other.bin_width {
            return None;
        }
        let n = self.bin_count().min(other.bin_count());
        let mut best: Option<f64> = None;
        for b in 0..n {
            if self.pair_counts[b] >= min_pairs && other.pair_counts[b] >= min_pairs {
                let d = (self.empirical[b] - other.empirical[b]).abs();
                best = Some(best.map_or(d, |v| v.max(d)));
            }
        }
        best
    }

    /// Tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut s = String::from("bin_lo\tbin_hi\tpairs\tlinked\tempirical\ttheoretical\ttheoretical_first_term\n");
        for b in 0..self.bin_count() {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.10}\t{:.10}\t{:.10}\n",
                self.bin_edges[b],
                self.bin_edges[b + 1],
                self.pair_counts[b],
                self.linked_counts[b],
                self.empirical[b],
                self.theoretical[b],
                self.theoretical_first_term[b]
            ));
        }
        s
    }
}

/// Empirical connection probability in bins of width 1.
pub fn connection_curve(embedding: &Embedding, net: &AdjacencySnapshot, ctx: &LikelihoodContext) -> Result<ConnectionCurve> {
    connection_curve_with_width(embedding, net, ctx, 1.0)
}

pub fn connection_curve_with_width(
    embedding: &Embedding,
    net: &AdjacencySnapshot,
    ctx: &LikelihoodContext,
    bin_width: f64,
) -> Result<ConnectionCurve> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {bin_width}")));
    }
    embedding.check_matches(net)?;
    let t = net.node_count();
    let table = embedding.distance_table();
    let starts: Vec<usize> = (0..t).step_by(ROW_CHUNK).collect();
    let partial: Vec<(Vec<u64>, Vec<u64>)> = starts
        .par_iter()
        .map(|&lo| {
            let mut pairs: Vec<u64> = Vec::new();
            let mut linked: Vec<u64> = Vec::new();
            let mut mark = vec![false; t];
            for a in lo..(lo + ROW_CHUNK).min(t) {
                for &v in net.neighbors(a) {
                    mark[v] = true;
                }
                for b in a + 1..t {
                    let bin = (table.distance(a, b) / bin_width) as usize;
                    if bin >= pairs.len() {
                        pairs.resize(bin + 1, 0);
                        linked.resize(bin + 1, 0);
                    }
                    pairs[bin] += 1;
                    linked[bin] += mark[b] as u64;
                }
                for &v in net.neighbors(a) {
                    mark[v] = false;
                }
            }
            (pairs, linked)
        })
        .collect();
    let n = partial.iter().map(|(p, _)| p.len()).max().unwrap_or(0);
    let mut pair_counts = vec![0u64; n];
    let mut linked_counts = vec![0u64; n];
    for (p, l) in &partial {
        for (b, (&pc, &lc)) in p.iter().zip(l).enumerate() {
            pair_counts[b] += pc;
            linked_counts[b] += lc;
        }
    }
    let bin_edges: Vec<f64> = (0..=n).map(|b| b as f64 * bin_width).collect();
    let empirical =
        (0..n).map(|b| if pair_counts[b] > 0 { linked_counts[b] as f64 / pair_counts[b] as f64 } else { 0.0 }).collect();
    let centers: Vec<f64> = (0..n).map(|b| (b as f64 + 0.5) * bin_width).collect();
    let theoretical = centers.iter().map(|&x| ctx.global_connection_probability(x, GlobalProbability::Exact)).collect();
    let theoretical_first_term =
        centers.iter().map(|&x| ctx.global_connection_probability(x, GlobalProbability::FirstTerm)).collect();
    Ok(ConnectionCurve { bin_width, bin_edges, pair_counts, linked_counts, empirical, theoretical, theoretical_first_term })
}

/// `Σ_{i<j} α_ij ln p̃(x_ij) + (1 - α_ij) ln(1 - p̃(x_ij))` over final-time distances.
///
/// [`GlobalProbability::Exact`] costs `O(t)` per distance; from [`TABULATE_FROM`] nodes
/// on it is read from a table with spacing 1e-4 and linear interpolation.
pub fn global_log_likelihood(
    embedding: &Embedding,
    net: &AdjacencySnapshot,
    ctx: &LikelihoodContext,
    mode: GlobalProbability,
) -> Result<f64> {
    embedding.check_matches(net)?;
    Ok(log_likelihood_with_angles(embedding, net, ctx, mode, embedding.angles()))
}

fn log_likelihood_with_angles(
    embedding: &Embedding,
    net: &AdjacencySnapshot,
    ctx: &LikelihoodContext,
    mode: GlobalProbability,
    angles: &[f64],
) -> f64 {
    let t = net.node_count();
    let table = crate::embedding::DistanceTable::new(embedding.radii(), angles, embedding.params().zeta);
    let max_r = embedding.radii().iter().copied().fold(0.0, f64::max);
    let lookup = (mode == GlobalProbability::Exact && t >= TABULATE_FROM)
        .then(|| LogProbabilityTable::new(ctx, 2.0 * max_r + 1.0));
    let starts: Vec<usize> = (0..t).step_by(ROW_CHUNK).collect();
    let partial: Vec<f64> = starts
        .par_iter()
        .map(|&lo| {
            let mut mark = vec![false; t];
            let mut sum = 0.0;
            for a in lo..(lo + ROW_CHUNK).min(t) {
                for &v in net.neighbors(a) {
                    mark[v] = true;
                }
                for b in a + 1..t {
                    let x = table.distance(a, b);
                    let (lp, lq) = match &lookup {
                        Some(tab) => tab.get(x),
                        None => ctx.log_global_connection_probability(x, mode),
                    };
                    sum += if mark[b] { lp } else { lq };
                }
                for &v in net.neighbors(a) {
                    mark[v] = false;
                }
            }
            sum
        })
        .collect();
    partial.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLossReport {
    /// `-ln L` with the inferred angles.
    pub ll_inf: f64,
    /// Mean of `-ln L` over the random-angle draws.
    pub ll_rand: f64,
    /// `ll_rand - ll_inf`, the exponent of the likelihood ratio.
    pub r_ll_exponent: f64,
    pub n_rand: usize,
    pub seed: u64,
    pub mode: GlobalProbability,
}

/// Log loss of the inferred angles against `n_rand` uniform random angle sets, with
/// radii kept.
pub fn logloss_report(
    embedding: &Embedding,
    net: &AdjacencySnapshot,
    ctx: &LikelihoodContext,
    n_rand: usize,
    seed: u64,
    mode: GlobalProbability,
) -> Result<LogLossReport> {
    if n_rand == 0 {
        return Err(Error::InvalidParameter("n_rand must be at least 1".into()));
    }
    let t = embedding.node_count();
    let draws: Vec<Vec<f64>> = (0..n_rand as u64)
        .map(|d| {
            let mut r = rng::substream(seed, rng::RANDOM_ANGLES, d);
            (0..t).map(|_| r.random_range(0.0..TAU)).collect()
        })
        .collect();
    let mut report = logloss_against(embedding, net, ctx, &draws, mode)?;
    report.seed = seed;
    Ok(report)
}

/// As [`logloss_report`] with explicit replacement angle sets.
pub fn logloss_against(
    embedding: &Embedding,
    net: &AdjacencySnapshot,
    ctx: &LikelihoodContext,
    draws: &[Vec<f64>],
    mode: GlobalProbability,
) -> Result<LogLossReport> {
    embedding.check_matches(net)?;
    if draws.is_empty() {
        return Err(Error::InvalidParameter("at least one angle set is required".into()));
    }
    if let Some(d) = draws.iter().find(|d| d.len() != embedding.node_count()) {
        return Err(Error::Mismatch(format!("angle set has {} entries for {} nodes", d.len(), embedding.node_count())));
    }
    let ll_inf = -log_likelihood_with_angles(embedding, net, ctx, mode, embedding.angles());
    let ll_rand =
        draws.iter().map(|a| -log_likelihood_with_angles(embedding, net, ctx, mode, a)).sum::<f64>() / draws.len() as f64;
    Ok(LogLossReport { ll_inf, ll_rand, r_ll_exponent: ll_rand - ll_inf, n_rand: draws.len(), seed: 0, mode })
}
