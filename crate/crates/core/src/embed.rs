//! Maximum-likelihood embedding by replaying the growth of the network (HyperMap).

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{final_radius, Embedding, EmbeddingProvenance};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, HalfAngle, RadialPair};
use crate::graph::{compare_labels, AdjacencySnapshot};
use crate::kernel::{self, PairBlock};
use crate::model::{connection_radius, expected_initial_links};
use crate::params::ModelParams;

/// Ranks covered by the early-node landscape diagnostic.
const LANDSCAPE_RANKS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedOptions {
    /// A correction sweep runs right after the last node of degree `>= k` is placed,
    /// for each `k` listed.
    pub correction_degrees: Vec<usize>,
    /// Sweeps per correction step.
    pub passes: usize,
    /// Angle of the first node.
    pub theta1: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions { correction_degrees: vec![60, 40, 20, 10], passes: 4, theta1: 0.0 }
    }
}

impl EmbedOptions {
    pub fn without_corrections() -> Self {
        EmbedOptions { correction_degrees: Vec::new(), ..Default::default() }
    }
}

/// Degree-descending order; equal degrees are ordered by label (see
/// [`compare_labels`]). `result[k]` is the node at rank `k + 1`.
pub fn infer_birth_order(net: &AdjacencySnapshot) -> Vec<usize> {
    let mut order: Vec<usize> = (0..net.node_count()).collect();
    order.sort_by(|&a, &b| net.degree(b).cmp(&net.degree(a)).then_with(|| compare_labels(net.label(a), net.label(b))));
    order
}

/// Ranks after which correction sweeps run: for each threshold `k`, the number of
/// nodes with degree `>= k`. Ranks below 2 are skipped; duplicates are merged.
pub fn correction_ranks(net: &AdjacencySnapshot, degrees: &[usize]) -> Vec<usize> {
    let mut ranks: Vec<usize> = degrees
        .iter()
        .map(|&k| (0..net.node_count()).filter(|&v| net.degree(v) >= k).count())
        .filter(|&r| r >= 2)
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

/// Expected degree at which the likelihood is stationary in the radius, `k - T/β`.
pub fn ml_expected_degree(degree: usize, params: &ModelParams) -> f64 {
    degree as f64 - params.temperature / params.beta()
}

/// Angle of grid point `k` out of `n`.
#[inline]
pub fn grid_angle(k: usize, n: usize) -> f64 {
    TAU * k as f64 / n as f64
}

/// Number of grid angles at time `i`, `⌈2π i⌉`.
#[inline]
pub fn grid_size(i: usize) -> usize {
    (TAU * i as f64).ceil() as usize
}

/// Outcome of one correction step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub rank: usize,
    pub passes: usize,
    pub moves: usize,
    /// Sum over node updates of the objective increase.
    pub gain: f64,
}

/// A partially replayed growth.
#[derive(Debug)]
pub struct EmbedState<'a> {
    net: &'a AdjacencySnapshot,
    params: ModelParams,
    order: Vec<usize>,
    rank_of: Vec<usize>,
    /// Angles by rank (index `rank - 1`).
    theta: Vec<f64>,
    placed: usize,
    /// `ζ R_i` by rank; unused at rank 1.
    zr: Vec<f64>,
    inv_two_t: Option<f64>,
}

impl<'a> EmbedState<'a> {
    /// Orders the nodes and places rank 1 at `theta1`. `params.t` is taken from the graph.
    pub fn new(net: &'a AdjacencySnapshot, params: &ModelParams, theta1: f64) -> Result<Self> {
        let t = net.node_count();
        if t == 0 {
            return Err(Error::EmptyInput("graph has no nodes".into()));
        }
        let params = params.with_size(t);
        params.validate()?;
        let order = infer_birth_order(net);
        let mut rank_of = vec![0; t];
        for (k, &v) in order.iter().enumerate() {
            rank_of[v] = k + 1;
        }
        let mut zr = vec![0.0; t];
        for i in 2..=t {
            let mbar = expected_initial_links(i as f64, &params);
            zr[i - 1] = params.zeta * connection_radius(i as f64, &params, mbar)?;
        }
        let inv_two_t = (params.temperature > 0.0).then(|| 1.0 / (2.0 * params.temperature));
        let mut theta = vec![0.0; t];
        theta[0] = normalize_angle(theta1);
        Ok(EmbedState { net, params, order, rank_of, theta, placed: 1, zr, inv_two_t })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn placed(&self) -> usize {
        self.placed
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Angle of the node at `rank`.
    pub fn angle(&self, rank: usize) -> f64 {
        self.theta[rank - 1]
    }

    /// Sets the angle of an already placed rank.
    pub fn set_angle(&mut self, rank: usize, theta: f64) {
        assert!(rank <= self.placed);
        self.theta[rank - 1] = normalize_angle(theta);
    }

    #[inline]
    fn initial_radius(&self, rank: usize) -> f64 {
        2.0 / self.params.zeta * (rank as f64).ln()
    }

    /// Radius of `rank` at time `time >= rank`.
    #[inline]
    pub fn radius_at(&self, rank: usize, time: usize) -> f64 {
        let beta = self.params.beta();
        beta * self.initial_radius(rank) + (1.0 - beta) * self.initial_radius(time)
    }

    fn linked(&self, ra: usize, rb: usize) -> bool {
        self.net.has_edge(self.order[ra - 1], self.order[rb - 1])
    }

    /// Pairs between a new node at rank `i` and ranks `1..i`.
    fn local_block(&self, i: usize) -> PairBlock {
        let zeta = self.params.zeta;
        let ri = self.initial_radius(i);
        let mut older = vec![false; i];
        let node = self.order[i - 1];
        for &v in self.net.neighbors(node) {
            let r = self.rank_of[v];
            if r < i {
                older[r] = true;
            }
        }
        let mut block = PairBlock::with_capacity(i - 1);
        for j in 1..i {
            let pair = RadialPair::new(ri, self.radius_at(j, i), zeta);
            block.push(HalfAngle::new(self.theta[j - 1]), pair.radial_excess, pair.sinh_prod, self.zr[i - 1], older[j]);
        }
        block.finish();
        block
    }

    /// Pairs between `j` and every other rank `l <= i`, each evaluated when the younger
    /// of the two appeared and with the younger node's connection radius.
    fn correction_block(&self, j: usize, i: usize) -> PairBlock {
        let zeta = self.params.zeta;
        let mut block = PairBlock::with_capacity(i - 1);
        for l in 1..=i {
            if l == j {
                continue;
            }
            let y = j.max(l);
            let pair = RadialPair::new(self.radius_at(j, y), self.radius_at(l, y), zeta);
            block.push(
                HalfAngle::new(self.theta[l - 1]),
                pair.radial_excess,
                pair.sinh_prod,
                self.zr[y - 1],
                self.linked(j, l),
            );
        }
        block.finish();
        block
    }

    /// Log-likelihood of the links and non-links of rank `i` to ranks `1..i` with rank
    /// `i` at angle `theta`. Requires ranks `1..i` to be placed.
    pub fn local_log_likelihood(&self, i: usize, theta: f64) -> Result<f64> {
        self.check_new_rank(i)?;
        let block = self.local_block(i);
        Ok(kernel::log_likelihood(&block, HalfAngle::new(theta), self.inv_two_t))
    }

    fn check_new_rank(&self, i: usize) -> Result<()> {
        if i < 2 {
            return Err(Error::InvalidIndex { index: i as f64, min: 2.0 });
        }
        if i > self.placed + 1 || i > self.params.t {
            return Err(Error::InvalidParameter(format!("rank {i} needs ranks 1..{i} placed; {} are", self.placed)));
        }
        Ok(())
    }

    /// Log-likelihood at every angle of an `n`-point grid.
    fn grid_scores(&self, block: &PairBlock, n: usize) -> Vec<f64> {
        let c = self.inv_two_t;
        (0..n)
            .into_par_iter()
            .with_min_len(16)
            .map(|k| kernel::log_likelihood(block, HalfAngle::new(grid_angle(k, n)), c))
            .collect()
    }

    /// Grid argmax of the local likelihood of rank `i` over `⌈2π i⌉` angles, returning
    /// `(θ, log-likelihood)`. Ties go to the smallest angle.
    pub fn maximize_angle(&self, i: usize) -> Result<(f64, f64)> {
        self.maximize_angle_on_grid(i, grid_size(i))
    }

    /// As [`maximize_angle`](Self::maximize_angle) with an explicit grid size.
    pub fn maximize_angle_on_grid(&self, i: usize, n: usize) -> Result<(f64, f64)> {
        self.check_new_rank(i)?;
        let scores = self.grid_scores(&self.local_block(i), n);
        let k = argmax(&scores);
        Ok((grid_angle(k, n), scores[k]))
    }

    /// Full local-likelihood landscape of rank `i` on an `n`-point grid.
    pub fn landscape(&self, i: usize, n: usize) -> Result<Vec<(f64, f64)>> {
        self.check_new_rank(i)?;
        let scores = self.grid_scores(&self.local_block(i), n);
        Ok(scores.into_iter().enumerate().map(|(k, s)| (grid_angle(k, n), s)).collect())
    }

    /// Places the next rank at its grid argmax; returns the full score vector.
    fn place_next_with_scores(&mut self) -> Result<Vec<f64>> {
        let i = self.placed + 1;
        self.check_new_rank(i)?;
        let n = grid_size(i);
        let scores = self.grid_scores(&self.local_block(i), n);
        let k = argmax(&scores);
        self.theta[i - 1] = grid_angle(k, n);
        self.placed = i;
        Ok(scores)
    }

    pub fn place_next(&mut self) -> Result<f64> {
        self.place_next_with_scores()?;
        Ok(self.theta[self.placed - 1])
    }

    /// Correction objective of rank `j` at angle `theta` against all other placed ranks.
    pub fn correction_objective(&self, j: usize, theta: f64) -> f64 {
        let block = self.correction_block(j, self.placed);
        kernel::log_likelihood(&block, HalfAngle::new(theta), self.inv_two_t)
    }

    /// Runs `passes` sweeps over ranks `1..=placed` in rank order. Each node moves to the
    /// best grid angle only when that strictly improves its objective.
    pub fn correction_step(&mut self, passes: usize) -> CorrectionReport {
        let i = self.placed;
        let n = grid_size(i);
        let mut report = CorrectionReport { rank: i, passes, ..Default::default() };
        if i < 2 {
            return report;
        }
        for _ in 0..passes {
            for j in 1..=i {
                let block = self.correction_block(j, i);
                let current = kernel::log_likelihood(&block, HalfAngle::new(self.theta[j - 1]), self.inv_two_t);
                let scores = self.grid_scores(&block, n);
                let k = argmax(&scores);
                if scores[k] > current {
                    report.moves += 1;
                    report.gain += scores[k] - current;
                    self.theta[j - 1] = grid_angle(k, n);
                }
            }
        }
        report
    }

    /// Final-time embedding of the placed ranks (all of them once `placed == t`).
    pub fn to_embedding(&self, provenance: EmbeddingProvenance) -> Result<Embedding> {
        if self.placed != self.params.t {
            return Err(Error::InvalidParameter(format!("{} of {} nodes placed", self.placed, self.params.t)));
        }
        let t = self.params.t;
        let mut radii = vec![0.0; t];
        let mut angles = vec![0.0; t];
        for (k, &v) in self.order.iter().enumerate() {
            radii[v] = final_radius(k + 1, &self.params);
            angles[v] = self.theta[k];
        }
        Embedding::new(self.net.labels().to_vec(), self.order.clone(), radii, angles, self.params, provenance)
    }
}

/// Index of the maximum; first index among ties.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in v.iter().enumerate().skip(1) {
        if s > v[best] {
            best = k;
        }
    }
    best
}

/// Fraction of grid angles within one log-likelihood unit of the maximum.
fn landscape_width(scores: &[f64]) -> f64 {
    let best = scores[argmax(scores)];
    scores.iter().filter(|&&s| s >= best - 1.0).count() as f64 / scores.len() as f64
}

/// Embeds `net`. `params.t` is replaced by the node count of the graph.
pub fn embed(net: &AdjacencySnapshot, params: &ModelParams, options: &EmbedOptions) -> Result<Embedding> {
    let mut state = EmbedState::new(net, params, options.theta1)?;
    let t = net.node_count();
    if !net.is_connected() {
        log::warn!(
            "graph is disconnected (giant component {} of {} nodes); embedding all nodes",
            net.giant_component().len(),
            t
        );
    }
    let schedule = if options.passes > 0 { correction_ranks(net, &options.correction_degrees) } else { Vec::new() };
    let mut reports = Vec::new();
    let mut widths = Vec::new();
    for i in 2..=t {
        let scores = state.place_next_with_scores()?;
        if i <= LANDSCAPE_RANKS {
            widths.push(landscape_width(&scores));
        }
        if schedule.binary_search(&i).is_ok() {
            let r = state.correction_step(options.passes);
            log::info!("correction at rank {i}: {} moves, gain {:.3}", r.moves, r.gain);
            reports.push(r);
        }
        if i % 500 == 0 {
            log::info!("placed {i} of {t} nodes");
        }
    }
    let mut provenance = EmbeddingProvenance {
        method: "hypermap".into(),
        correction_ranks: schedule,
        passes: options.passes,
        theta1: state.angle(1),
        grid: "ceil(2*pi*i) equally spaced angles from 0".into(),
        graph_fingerprint: Some(net.fingerprint()),
        notes: Default::default(),
    };
    provenance.notes.insert("corrections".into(), serde_json::to_value(&reports)?);
    provenance.notes.insert("early_landscape_width".into(), serde_json::to_value(&widths)?);
    state.to_embedding(provenance)
}
