//! Missing-link experiments: probe/training splits, pair scorers, AUC and ROC.

use std::collections::HashSet;
use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{DistanceTable, Embedding};
use crate::error::{Error, Result};
use crate::graph::{pair_key, AdjacencySnapshot};
use crate::rng;

/// Source rows handed to one parallel task.
const ROW_CHUNK: usize = 32;

/// Missing-pair scores and nonexistent-pair scores of one block of rows.
type RowScores = (Vec<(usize, usize, f64)>, Vec<f64>);

#[derive(Debug, Clone)]
pub struct LinkSplit {
    /// The graph with probe edges removed; same nodes and labels as the input.
    pub training: AdjacencySnapshot,
    /// Removed edges `(a, b)`, `a < b`, sorted.
    pub probe: Vec<(usize, usize)>,
    pub p: f64,
    pub seed: u64,
    /// Keys of every edge of the full graph.
    all_edges: HashSet<u64>,
}

impl LinkSplit {
    /// Whether `(a, b)` is an edge of the full graph.
    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.all_edges.contains(&pair_key(a, b))
    }
}

/// Moves `round(p·|E|)` uniformly chosen edges into the probe set.
pub fn split(net: &AdjacencySnapshot, p: f64, seed: u64) -> Result<LinkSplit> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("removal fraction must be in (0, 1), got {p}")));
    }
    let mut edges = net.edges();
    let n_probe = (p * edges.len() as f64).round() as usize;
    if n_probe < 1 {
        return Err(Error::InvalidParameter(format!("p = {p} removes no edge out of {}", edges.len())));
    }
    let all_edges = edges.iter().map(|&(a, b)| pair_key(a, b)).collect();
    let mut r = rng::substream(seed, rng::SPLIT, 0);
    let (probe, _) = edges.partial_shuffle(&mut r, n_probe);
    let mut probe = probe.to_vec();
    probe.sort_unstable();
    let probe_set: HashSet<u64> = probe.iter().map(|&(a, b)| pair_key(a, b)).collect();
    let training_edges: Vec<(usize, usize)> =
        edges.iter().copied().filter(|&(a, b)| !probe_set.contains(&pair_key(a, b))).collect();
    let mut training_edges = training_edges;
    training_edges.sort_unstable();
    Ok(LinkSplit { training: net.with_edges(&training_edges), probe, p, seed, all_edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    SmallerIsBetter,
    LargerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Baseline {
    /// Common neighbours.
    Cn,
    /// Degree product.
    Dp,
    /// Inverse shortest-path length, 0 when disconnected.
    Isp,
    /// Truncated walk sum `Σ_{l=2}^{l_max} ε^l (A^l)_ij`.
    Katz { epsilon: f64, l_max: usize },
}

impl Baseline {
    pub fn katz() -> Self {
        Baseline::Katz { epsilon: 0.005, l_max: 6 }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cn" => Ok(Baseline::Cn),
            "dp" => Ok(Baseline::Dp),
            "isp" => Ok(Baseline::Isp),
            "katz" => Ok(Baseline::katz()),
            other => Err(Error::InvalidParameter(format!("unknown scorer {other:?}"))),
        }
    }
}

/// A pair scorer over the nodes of a training graph.
pub enum Scorer<'a> {
    Hyperbolic(DistanceTable),
    Baseline(Baseline, &'a AdjacencySnapshot),
}

impl<'a> Scorer<'a> {
    /// Hyperbolic distance between the training graph's inferred coordinates.
    pub fn hyperbolic(split: &LinkSplit, embedding: &Embedding) -> Result<Scorer<'a>> {
        embedding.check_matches(&split.training)?;
        Ok(Scorer::Hyperbolic(embedding.distance_table()))
    }

    pub fn baseline(split: &'a LinkSplit, method: Baseline) -> Result<Scorer<'a>> {
        if let Baseline::Katz { epsilon, l_max } = method {
            if !(epsilon > 0.0) || l_max < 2 {
                return Err(Error::InvalidParameter(format!("Katz needs ε > 0 and l_max >= 2, got {epsilon}, {l_max}")));
            }
        }
        Ok(Scorer::Baseline(method, &split.training))
    }

    pub fn name(&self) -> String {
        match self {
            Scorer::Hyperbolic(_) => "hyperbolic".into(),
            Scorer::Baseline(Baseline::Cn, _) => "CN".into(),
            Scorer::Baseline(Baseline::Dp, _) => "DP".into(),
            Scorer::Baseline(Baseline::Isp, _) => "ISP".into(),
            Scorer::Baseline(Baseline::Katz { epsilon, l_max }, _) => format!("Katz(epsilon={epsilon},l_max={l_max})"),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Scorer::Hyperbolic(_) => Orientation::SmallerIsBetter,
            Scorer::Baseline(..) => Orientation::LargerIsBetter,
        }
    }

    /// Scores of `(a, b)` for every `b`, written to `out`.
    fn row(&self, a: usize, out: &mut [f64], work: &mut RowWork) {
        match self {
            Scorer::Hyperbolic(table) => {
                for (b, o) in out.iter_mut().enumerate() {
                    *o = table.distance(a, b);
                }
            }
            Scorer::Baseline(method, g) => match *method {
                Baseline::Cn => common_neighbor_row(g, a, out),
                Baseline::Dp => {
                    let ka = g.degree(a) as f64;
                    for (b, o) in out.iter_mut().enumerate() {
                        *o = ka * g.degree(b) as f64;
                    }
                }
                Baseline::Isp => {
                    bfs_into(g, a, &mut work.dist, &mut work.queue);
                    for (o, &d) in out.iter_mut().zip(&work.dist) {
                        *o = if d == u32::MAX || d == 0 { 0.0 } else { 1.0 / d as f64 };
                    }
                }
                Baseline::Katz { epsilon, l_max } => katz_row(g, a, epsilon, l_max, out, &mut work.walk),
            },
        }
    }

    /// Score of a single pair.
    pub fn score(&self, a: usize, b: usize) -> f64 {
        match self {
            Scorer::Hyperbolic(table) => table.distance(a, b),
            Scorer::Baseline(Baseline::Cn, g) => g.common_neighbors(a, b) as f64,
            Scorer::Baseline(Baseline::Dp, g) => (g.degree(a) * g.degree(b)) as f64,
            Scorer::Baseline(..) => {
                let n = self.node_count();
                let mut out = vec![0.0; n];
                self.row(a, &mut out, &mut RowWork::new(n));
                out[b]
            }
        }
    }

    fn node_count(&self) -> usize {
        match self {
            Scorer::Hyperbolic(t) => t.len(),
            Scorer::Baseline(_, g) => g.node_count(),
        }
    }
}

struct RowWork {
    dist: Vec<u32>,
    queue: VecDeque<usize>,
    walk: (Vec<f64>, Vec<f64>),
    cn: Vec<f64>,
}

impl RowWork {
    fn new(n: usize) -> Self {
        RowWork { dist: vec![0; n], queue: VecDeque::new(), walk: (vec![0.0; n], vec![0.0; n]), cn: vec![0.0; n] }
    }
}

fn common_neighbor_row(g: &AdjacencySnapshot, a: usize, out: &mut [f64]) {
    out.fill(0.0);
    for &u in g.neighbors(a) {
        for &w in g.neighbors(u) {
            out[w] += 1.0;
        }
    }
    out[a] = 0.0;
}

fn bfs_into(g: &AdjacencySnapshot, s: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(u32::MAX);
    dist[s] = 0;
    queue.clear();
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
}

fn katz_row(g: &AdjacencySnapshot, a: usize, eps: f64, l_max: usize, out: &mut [f64], walk: &mut (Vec<f64>, Vec<f64>)) {
    let (cur, next) = walk;
    out.fill(0.0);
    cur.fill(0.0);
    cur[a] = 1.0;
    let mut w = 1.0;
    for l in 1..=l_max {
        next.fill(0.0);
        for (v, &c) in cur.iter().enumerate() {
            if c != 0.0 {
                for &u in g.neighbors(v) {
                    next[u] += c;
                }
            }
        }
        w *= eps;
        if l >= 2 {
            for (o, &x) in out.iter_mut().zip(next.iter()) {
                *o += w * x;
            }
        }
        std::mem::swap(cur, next);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stratum", rename_all = "kebab-case")]
pub enum Stratum {
    All,
    /// Pairs without common neighbours in the training graph.
    HardNoCommonNeighbor,
    /// Pairs whose training degrees are both below `k_max`.
    LowDegree { k_max: usize },
}

impl Stratum {
    pub fn name(&self) -> String {
        match self {
            Stratum::All => "all".into(),
            Stratum::HardNoCommonNeighbor => "hard-no-common-neighbor".into(),
            Stratum::LowDegree { k_max } => format!("low-degree-{k_max}"),
        }
    }
}

/// Scores of the probe pairs and of the nonexistent pairs of one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPairs {
    pub scorer: String,
    pub orientation: Orientation,
    pub stratum: Stratum,
    /// Probe pairs in the stratum with their scores.
    pub missing: Vec<(usize, usize, f64)>,
    /// Scores of nonexistent pairs (not edges of the full graph) in the stratum.
    pub nonexistent: Vec<f64>,
}

/// Scores every probe pair and every nonexistent pair in `stratum`.
pub fn score_pairs(split: &LinkSplit, scorer: &Scorer, stratum: Stratum) -> ScoredPairs {
    let g = &split.training;
    let n = g.node_count();
    let probe: HashSet<u64> = split.probe.iter().map(|&(a, b)| pair_key(a, b)).collect();
    let starts: Vec<usize> = (0..n).step_by(ROW_CHUNK).collect();
    let parts: Vec<RowScores> = starts
        .par_iter()
        .map(|&lo| {
            let mut work = RowWork::new(n);
            let mut row = vec![0.0; n];
            let mut missing = Vec::new();
            let mut nonexistent = Vec::new();
            for a in lo..(lo + ROW_CHUNK).min(n) {
                if let Stratum::LowDegree { k_max } = stratum {
                    if g.degree(a) >= k_max {
                        continue;
                    }
                }
                scorer.row(a, &mut row, &mut work);
                if stratum == Stratum::HardNoCommonNeighbor {
                    common_neighbor_row(g, a, &mut work.cn);
                }
                for b in a + 1..n {
                    let keep = match stratum {
                        Stratum::All => true,
                        Stratum::HardNoCommonNeighbor => work.cn[b] == 0.0,
                        Stratum::LowDegree { k_max } => g.degree(b) < k_max,
                    };
                    if !keep {
                        continue;
                    }
                    let key = pair_key(a, b);
                    if probe.contains(&key) {
                        missing.push((a, b, row[b]));
                    } else if !split.all_edges.contains(&key) {
                        nonexistent.push(row[b]);
                    }
                }
            }
            (missing, nonexistent)
        })
        .collect();
    let mut missing = Vec::new();
    let mut nonexistent = Vec::new();
    for (m, x) in parts {
        missing.extend(m);
        nonexistent.extend(x);
    }
    ScoredPairs { scorer: scorer.name(), orientation: scorer.orientation(), stratum, missing, nonexistent }
}

/// Writes `a b class score` rows for every probe and nonexistent pair of the stratum,
/// `class` being `probe` or `nonexistent`, with a header row.
pub fn write_scores(
    split: &LinkSplit,
    scorer: &Scorer,
    stratum: Stratum,
    out: &mut impl std::io::Write,
) -> std::io::Result<()> {
    let g = &split.training;
    let n = g.node_count();
    let probe: HashSet<u64> = split.probe.iter().map(|&(a, b)| pair_key(a, b)).collect();
    let mut work = RowWork::new(n);
    let mut row = vec![0.0; n];
    writeln!(out, "a\tb\tclass\tscore")?;
    for a in 0..n {
        scorer.row(a, &mut row, &mut work);
        common_neighbor_row(g, a, &mut work.cn);
        for b in a + 1..n {
            let keep = match stratum {
                Stratum::All => true,
                Stratum::HardNoCommonNeighbor => work.cn[b] == 0.0,
                Stratum::LowDegree { k_max } => g.degree(a) < k_max && g.degree(b) < k_max,
            };
            let key = pair_key(a, b);
            let class = if probe.contains(&key) {
                "probe"
            } else if split.all_edges.contains(&key) {
                continue;
            } else {
                "nonexistent"
            };
            if keep {
                writeln!(out, "{}\t{}\t{class}\t{:e}", g.label(a), g.label(b), row[b])?;
            }
        }
    }
    Ok(())
}

/// Score mapped so that larger is better.
#[inline]
fn key(o: Orientation, s: f64) -> f64 {
    match o {
        Orientation::LargerIsBetter => s,
        Orientation::SmallerIsBetter => -s,
    }
}

fn check_defined(scored: &ScoredPairs) -> Result<()> {
    if scored.missing.is_empty() || scored.nonexistent.is_empty() {
        return Err(Error::UndefinedAuc { missing: scored.missing.len() as u64, nonexistent: scored.nonexistent.len() as u64 });
    }
    Ok(())
}

/// `(#missing better + ½ #ties) / (#missing · #nonexistent)`.
pub fn auc(scored: &ScoredPairs) -> Result<f64> {
    check_defined(scored)?;
    let o = scored.orientation;
    let mut neg: Vec<f64> = scored.nonexistent.iter().map(|&s| key(o, s)).collect();
    neg.sort_by(f64::total_cmp);
    let mut better: u128 = 0;
    let mut ties: u128 = 0;
    for &(_, _, s) in &scored.missing {
        let k = key(o, s);
        let lo = neg.partition_point(|&v| v < k);
        let hi = neg.partition_point(|&v| v <= k);
        better += lo as u128;
        ties += (hi - lo) as u128;
    }
    let total = scored.missing.len() as u128 * neg.len() as u128;
    Ok((better as f64 + 0.5 * ties as f64) / total as f64)
}

/// ROC points `(FPR, TPR)` from `(0, 0)` to `(1, 1)`, one per distinct score.
pub fn roc_curve(scored: &ScoredPairs) -> Result<Vec<(f64, f64)>> {
    check_defined(scored)?;
    let o = scored.orientation;
    // (key, is_missing), best first
    let mut all: Vec<(f64, bool)> = scored
        .missing
        .iter()
        .map(|m| (key(o, m.2), true))
        .chain(scored.nonexistent.iter().map(|&s| (key(o, s), false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let np = scored.missing.len() as f64;
    let nn = scored.nonexistent.len() as f64;
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut k = 0;
    while k < all.len() {
        let v = all[k].0;
        while k < all.len() && all[k].0 == v {
            if all[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        pts.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(pts)
}

/// Trapezoidal area under a curve given by points sorted by the first coordinate.
pub fn trapezoid_area(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Monte Carlo AUC from `n` draws of one probe pair and one nonexistent pair of the
/// stratum. Nonexistent pairs are drawn uniformly with rejection.
pub fn auc_sampled(split: &LinkSplit, scorer: &Scorer, stratum: Stratum, n: usize, seed: u64) -> Result<f64> {
    let g = &split.training;
    let t = g.node_count();
    let in_stratum = |a: usize, b: usize| match stratum {
        Stratum::All => true,
        Stratum::HardNoCommonNeighbor => g.common_neighbors(a, b) == 0,
        Stratum::LowDegree { k_max } => g.degree(a) < k_max && g.degree(b) < k_max,
    };
    let missing: Vec<(usize, usize)> = split.probe.iter().copied().filter(|&(a, b)| in_stratum(a, b)).collect();
    if missing.is_empty() || n == 0 || t < 2 {
        return Err(Error::UndefinedAuc { missing: missing.len() as u64, nonexistent: 0 });
    }
    let mut r = rng::substream(seed, rng::AUC_SAMPLE, 0);
    let cap = n.saturating_mul(1000).max(1_000_000);
    let mut draws: Vec<((usize, usize), (usize, usize))> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while draws.len() < n {
        attempts += 1;
        if attempts > cap {
            return Err(Error::UndefinedAuc { missing: missing.len() as u64, nonexistent: 0 });
        }
        let a = r.random_range(0..t);
        let b = r.random_range(0..t);
        if a == b || split.is_edge(a, b) || !in_stratum(a, b) {
            continue;
        }
        let m = missing[r.random_range(0..missing.len())];
        draws.push((m, (a.min(b), a.max(b))));
    }
    // group by source row so row-based scorers run once per source
    let mut needed: Vec<(usize, usize, usize)> = Vec::with_capacity(2 * n);
    for (k, (m, x)) in draws.iter().enumerate() {
        needed.push((m.0, m.1, 2 * k));
        needed.push((x.0, x.1, 2 * k + 1));
    }
    needed.sort_unstable();
    let mut scores = vec![0.0; 2 * n];
    let mut row = vec![0.0; t];
    let mut work = RowWork::new(t);
    let mut current = usize::MAX;
    for &(a, b, slot) in &needed {
        if a != current {
            scorer.row(a, &mut row, &mut work);
            current = a;
        }
        scores[slot] = row[b];
    }
    let o = scorer.orientation();
    let mut total = 0.0;
    for k in 0..n {
        let (m, x) = (key(o, scores[2 * k]), key(o, scores[2 * k + 1]));
        total += if m > x {
            1.0
        } else if m == x {
            0.5
        } else {
            0.0
        };
    }
    Ok(total / n as f64)
}
