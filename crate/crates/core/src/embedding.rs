//! Node coordinates in the hyperbolic disk together with the birth order they came from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_distance, normalize_angle, HalfAngle, PolarPoint, RadialPair};
use crate::graph::AdjacencySnapshot;
use crate::params::ModelParams;

/// Where an embedding came from and how it was computed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProvenance {
    /// `hypermap`, `ground-truth`, or whatever a file declared.
    pub method: String,
    /// Ranks after which a correction sweep ran.
    #[serde(default)]
    pub correction_ranks: Vec<usize>,
    #[serde(default)]
    pub passes: usize,
    #[serde(default)]
    pub theta1: f64,
    /// Description of the angular grid.
    #[serde(default)]
    pub grid: String,
    /// Fingerprint of the graph the coordinates were inferred on.
    #[serde(default)]
    pub graph_fingerprint: Option<String>,
    /// Free-form notes such as how missing parameters were estimated.
    #[serde(default)]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    labels: Vec<String>,
    /// `order[k]` is the node at rank `k + 1`.
    order: Vec<usize>,
    rank: Vec<usize>,
    radii: Vec<f64>,
    angles: Vec<f64>,
    params: ModelParams,
    pub provenance: EmbeddingProvenance,
}

/// Final-time radius of the node at `rank` in a network of `t` nodes.
#[inline]
pub fn final_radius(rank: usize, params: &ModelParams) -> f64 {
    let beta = params.beta();
    let c = 2.0 / params.zeta;
    beta * c * (rank as f64).ln() + (1.0 - beta) * c * (params.t as f64).ln()
}

impl Embedding {
    /// Assembles an embedding from per-node coordinates; `order[k]` is the node at rank
    /// `k + 1`.
    pub fn new(
        labels: Vec<String>,
        order: Vec<usize>,
        radii: Vec<f64>,
        angles: Vec<f64>,
        params: ModelParams,
        provenance: EmbeddingProvenance,
    ) -> Result<Self> {
        let n = labels.len();
        if order.len() != n || radii.len() != n || angles.len() != n {
            return Err(Error::Mismatch("labels, order, radii and angles differ in length".into()));
        }
        let mut rank = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(Error::Mismatch(format!("order is not a permutation (node {v} at rank {})", k + 1)));
            }
            rank[v] = k + 1;
        }
        for (i, &a) in angles.iter().enumerate() {
            if !(a.is_finite() && (0.0..std::f64::consts::TAU).contains(&a)) {
                return Err(Error::Mismatch(format!("angle {a} of node {} is outside [0, 2π)", labels[i])));
            }
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Mismatch(format!("invalid radius {r}")));
        }
        Ok(Embedding { labels, order, rank, radii, angles, params, provenance })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Nodes by rank: `order()[k]` holds rank `k + 1`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of a node.
    pub fn rank(&self, node: usize) -> usize {
        self.rank[node]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn point(&self, node: usize) -> PolarPoint {
        PolarPoint { r: self.radii[node], theta: self.angles[node] }
    }

    /// Final-time hyperbolic distance between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        hyperbolic_distance(self.point(a), self.point(b), self.params.zeta)
    }

    /// Copy with every angle shifted by `delta`.
    pub fn rotated(&self, delta: f64) -> Embedding {
        let mut e = self.clone();
        for a in &mut e.angles {
            *a = normalize_angle(*a + delta);
        }
        e
    }

    /// Copy with the given angles.
    pub fn with_angles(&self, angles: Vec<f64>) -> Result<Embedding> {
        Embedding::new(
            self.labels.clone(),
            self.order.clone(),
            self.radii.clone(),
            angles,
            self.params,
            self.provenance.clone(),
        )
    }

    /// Errors unless the embedding covers exactly the nodes of `net`, by label and index.
    pub fn check_matches(&self, net: &AdjacencySnapshot) -> Result<()> {
        if self.node_count() != net.node_count() {
            return Err(Error::Mismatch(format!(
                "embedding has {} nodes, graph has {}",
                self.node_count(),
                net.node_count()
            )));
        }
        if let Some(i) = (0..self.node_count()).find(|&i| self.labels[i] != net.label(i)) {
            return Err(Error::Mismatch(format!(
                "node {i} is {:?} in the embedding and {:?} in the graph",
                self.labels[i],
                net.label(i)
            )));
        }
        Ok(())
    }

    /// Reindexes to follow the label order of `net` (same label set required).
    pub fn aligned_to(&self, net: &AdjacencySnapshot) -> Result<Embedding> {
        if self.node_count() != net.node_count() {
            return Err(Error::Mismatch(format!(
                "embedding has {} nodes, graph has {}",
                self.node_count(),
                net.node_count()
            )));
        }
        let index = net.label_index();
        let mut map = vec![0usize; self.node_count()];
        for (i, l) in self.labels.iter().enumerate() {
            map[i] = *index
                .get(l.as_str())
                .ok_or_else(|| Error::Mismatch(format!("label {l:?} is not in the graph")))?;
        }
        let n = self.node_count();
        let mut radii = vec![0.0; n];
        let mut angles = vec![0.0; n];
        for i in 0..n {
            radii[map[i]] = self.radii[i];
            angles[map[i]] = self.angles[i];
        }
        let order = self.order.iter().map(|&v| map[v]).collect();
        Embedding::new(net.labels().to_vec(), order, radii, angles, self.params, self.provenance.clone())
    }

    /// Coordinates of the nodes of `net` only, in its index order. Ranks keep their
    /// relative order and are renumbered from 1; radii are unchanged.
    pub fn restricted_to(&self, net: &AdjacencySnapshot) -> Result<Embedding> {
        let index: std::collections::HashMap<&str, usize> =
            self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let n = net.node_count();
        let mut src = Vec::with_capacity(n);
        for l in net.labels() {
            src.push(*index.get(l.as_str()).ok_or_else(|| Error::Mismatch(format!("label {l:?} has no coordinates")))?);
        }
        let mut by_rank: Vec<usize> = (0..n).collect();
        by_rank.sort_by_key(|&k| self.rank[src[k]]);
        Embedding::new(
            net.labels().to_vec(),
            by_rank,
            src.iter().map(|&i| self.radii[i]).collect(),
            src.iter().map(|&i| self.angles[i]).collect(),
            self.params,
            self.provenance.clone(),
        )
    }

    /// Precomputed per-node data for fast all-pairs distance loops.
    pub fn distance_table(&self) -> DistanceTable {
        DistanceTable::new(&self.radii, &self.angles, self.params.zeta)
    }
}

/// Per-node half-angle terms; pairs evaluated with the same kernel as the embedder.
pub struct DistanceTable {
    zeta: f64,
    radii: Vec<f64>,
    half: Vec<HalfAngle>,
}

impl DistanceTable {
    pub fn new(radii: &[f64], angles: &[f64], zeta: f64) -> Self {
        DistanceTable { zeta, radii: radii.to_vec(), half: angles.iter().map(|&a| HalfAngle::new(a)).collect() }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let pair = RadialPair::new(self.radii[a], self.radii[b], self.zeta);
        pair.distance(self.half[a].sin_half_diff(self.half[b]), self.zeta)
    }
}
