//! Growing synthetic networks under PSO, generalized PSO and E-PSO.

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{final_radius, Embedding, EmbeddingProvenance};
use crate::error::{Error, Result};
use crate::geometry::{HalfAngle, RadialPair};
use crate::graph::{pair_key, AdjacencySnapshot};
use crate::model::{connection_probability, connection_radius, expected_degree, expected_initial_links, radial_coordinate};
use crate::params::ModelParams;
use crate::rng::{self, substream};

/// Attempts allowed per internal link before a generalized-PSO step gives up.
pub const INTERNAL_ATTEMPT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Pso,
    GeneralizedPso,
    Epso,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pso" => Ok(ModelKind::Pso),
            "gpso" | "generalized-pso" | "generalizedpso" => Ok(ModelKind::GeneralizedPso),
            "epso" | "e-pso" => Ok(ModelKind::Epso),
            _ => Err(Error::InvalidParameter(format!("unknown model {s:?} (pso, gpso, epso)"))),
        }
    }
}

/// Ground truth for one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthNode {
    pub birth: usize,
    /// Radius at birth, `(2/ζ) ln i`.
    pub r_initial: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct GrownNetwork {
    pub params: ModelParams,
    pub kind: ModelKind,
    pub seed: u64,
    /// Node `k` is born at time `k + 1`; labels are a seeded shuffle of `0..t` so they
    /// carry no information about birth order.
    pub labels: Vec<String>,
    /// Edges `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub truth: Vec<TruthNode>,
    /// Internal links placed (generalized PSO only).
    pub internal_links: usize,
    /// Internal links skipped because too few disconnected pairs existed.
    pub internal_skipped: usize,
    /// Internal links that could not be placed within the attempt cap.
    pub internal_shortfall: usize,
}

impl GrownNetwork {
    pub fn snapshot(&self) -> AdjacencySnapshot {
        AdjacencySnapshot::from_edges(self.labels.clone(), &self.edges).expect("generated edges are valid").0
    }

    /// True coordinates at the final time, with birth order as rank.
    pub fn truth_embedding(&self) -> Embedding {
        let t = self.truth.len();
        let angles = self.truth.iter().map(|n| n.theta).collect();
        let radii = (1..=t).map(|i| final_radius(i, &self.params)).collect();
        let provenance = EmbeddingProvenance { method: "ground-truth".into(), ..Default::default() };
        Embedding::new(self.labels.clone(), (0..t).collect(), radii, angles, self.params, provenance)
            .expect("truth is consistent")
    }
}

/// Grows a network of `params.t` nodes.
pub fn grow(params: &ModelParams, kind: ModelKind, seed: u64) -> Result<GrownNetwork> {
    params.validate()?;
    let internal_per_step = if kind == ModelKind::GeneralizedPso {
        if params.l.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "generalized PSO needs an integer number of internal links, got L = {}",
                params.l
            )));
        }
        params.l as usize
    } else {
        0
    };
    if params.t >= 2 && params.temperature >= 1.0 {
        return Err(Error::TemperatureOutOfRange(params.temperature));
    }
    let t = params.t;
    let zeta = params.zeta;
    let beta = params.beta();

    let mut truth = Vec::with_capacity(t);
    for i in 1..=t {
        let theta = TAU * substream(seed, rng::ANGLE, i as u64).random::<f64>();
        truth.push(TruthNode { birth: i, r_initial: radial_coordinate(i as f64, zeta)?, theta });
    }
    let half: Vec<HalfAngle> = truth.iter().map(|n| HalfAngle::new(n.theta)).collect();

    let mut edge_set: HashSet<u64> = HashSet::new();
    let mut edges = Vec::new();
    let mut shortfall = 0;
    let mut internal_links = 0;
    let mut skipped = 0;
    for i in 2..=t {
        let r_i = truth[i - 1].r_initial;
        let mbar = match kind {
            ModelKind::Epso => expected_initial_links(i as f64, params),
            _ => params.m,
        };
        let big_r = connection_radius(i as f64, params, mbar)?;
        let mut draws = substream(seed, rng::EDGE, i as u64);
        let uniforms: Vec<f64> = (1..i).map(|_| draws.random::<f64>()).collect();
        let hi = half[i - 1];
        let linked: Vec<usize> = (1..i)
            .into_par_iter()
            .filter(|&j| {
                let r_j = beta * truth[j - 1].r_initial + (1.0 - beta) * r_i;
                let x = RadialPair::new(r_i, r_j, zeta).distance(hi.sin_half_diff(half[j - 1]), zeta);
                uniforms[j - 1] < connection_probability(x, big_r, params.temperature, zeta)
            })
            .collect();
        for j in linked {
            edge_set.insert(pair_key(j - 1, i - 1));
            edges.push((j - 1, i - 1));
        }

        if internal_per_step > 0 {
            let mut rng = substream(seed, rng::INTERNAL, i as u64);
            let possible = i * (i - 1) / 2;
            let mut added = 0;
            let mut attempts = 0;
            while added < internal_per_step {
                let disconnected = possible - edge_set.len();
                if disconnected < internal_per_step - added {
                    skipped += internal_per_step - added;
                    break;
                }
                if attempts >= INTERNAL_ATTEMPT_CAP {
                    shortfall += internal_per_step - added;
                    log::warn!("node {i}: placed {added} of {internal_per_step} internal links within the attempt cap");
                    break;
                }
                attempts += 1;
                let a = rng.random_range(1..=i);
                let b = rng.random_range(1..=i);
                let u = rng.random::<f64>();
                if a == b || edge_set.contains(&pair_key(a - 1, b - 1)) {
                    continue;
                }
                let ra = beta * truth[a - 1].r_initial + (1.0 - beta) * r_i;
                let rb = beta * truth[b - 1].r_initial + (1.0 - beta) * r_i;
                let x = RadialPair::new(ra, rb, zeta).distance(half[a - 1].sin_half_diff(half[b - 1]), zeta);
                if u < connection_probability(x, big_r, params.temperature, zeta) {
                    edge_set.insert(pair_key(a - 1, b - 1));
                    edges.push(((a - 1).min(b - 1), (a - 1).max(b - 1)));
                    added += 1;
                }
            }
            internal_links += added;
        }
    }
    edges.sort_unstable();

    let mut perm: Vec<usize> = (0..t).collect();
    perm.shuffle(&mut substream(seed, rng::LABELS, 0));
    let labels = perm.into_iter().map(|v| v.to_string()).collect();

    Ok(GrownNetwork {
        params: *params,
        kind,
        seed,
        labels,
        edges,
        truth,
        internal_links,
        internal_skipped: skipped,
        internal_shortfall: shortfall,
    })
}

/// `(i, k̄_i(t))` for `i = 1..=t`.
pub fn expected_degree_curve(params: &ModelParams) -> Vec<(usize, f64)> {
    (1..=params.t).map(|i| (i, expected_degree(i as f64, params))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: f64, l: f64, gamma: f64, temp: f64, t: usize) -> ModelParams {
        ModelParams::new(m, l, gamma, temp, 1.0, t).unwrap()
    }

    #[test]
    fn single_node() {
        for kind in [ModelKind::Pso, ModelKind::GeneralizedPso, ModelKind::Epso] {
            let g = grow(&p(1.0, 1.0, 2.5, 0.5, 1), kind, 3).unwrap();
            assert_eq!(g.truth.len(), 1);
            assert!(g.edges.is_empty());
        }
    }

    #[test]
    fn deterministic() {
        let a = grow(&p(1.5, 2.5, 2.1, 0.4, 400), ModelKind::Epso, 11).unwrap();
        let b = grow(&p(1.5, 2.5, 2.1, 0.4, 400), ModelKind::Epso, 11).unwrap();
        let c = grow(&p(1.5, 2.5, 2.1, 0.4, 400), ModelKind::Epso, 12).unwrap();
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.truth, b.truth);
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn prefix_stability() {
        // substreams make the first nodes independent of the final size
        let a = grow(&p(1.5, 0.0, 2.1, 0.4, 200), ModelKind::Pso, 5).unwrap();
        let b = grow(&p(1.5, 0.0, 2.1, 0.4, 300), ModelKind::Pso, 5).unwrap();
        assert_eq!(a.truth[..200], b.truth[..200]);
        assert_eq!(a.edges, b.edges.iter().copied().filter(|&(_, v)| v < 200).collect::<Vec<_>>());
    }

    #[test]
    fn invariants() {
        let g = grow(&p(2.0, 1.0, 2.3, 0.3, 300), ModelKind::GeneralizedPso, 1).unwrap();
        let mut seen = HashSet::new();
        for &(a, b) in &g.edges {
            assert!(a < b);
            assert!(seen.insert((a, b)));
        }
        assert!(g.truth.windows(2).all(|w| w[0].r_initial < w[1].r_initial));
        assert_eq!(g.truth.iter().map(|n| n.birth).collect::<Vec<_>>(), (1..=300).collect::<Vec<_>>());
        assert_eq!(g.internal_shortfall, 0);
        let mut labels = g.labels.clone();
        labels.sort_by_key(|l| l.parse::<usize>().unwrap());
        assert_eq!(labels, (0..300).map(|i| i.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn generalized_pso_adds_exactly_l_internal_links() {
        for l in [1.0, 3.0] {
            let with = grow(&p(2.0, l, 2.3, 0.3, 200), ModelKind::GeneralizedPso, 4).unwrap();
            let without = grow(&p(2.0, 0.0, 2.3, 0.3, 200), ModelKind::GeneralizedPso, 4).unwrap();
            assert_eq!(without.internal_links, 0);
            assert_eq!(with.internal_shortfall, 0);
            // every step from i = 2 places L links unless the graph is nearly complete
            assert_eq!(with.internal_links + with.internal_skipped, 199 * l as usize);
            assert!(with.internal_skipped <= 3 * l as usize);
            // external draws use their own streams, so the external edges are unchanged
            let external: HashSet<_> = without.edges.iter().copied().collect();
            let all: HashSet<_> = with.edges.iter().copied().collect();
            assert!(external.is_subset(&all));
            assert_eq!(all.len(), external.len() + with.internal_links);
        }
    }

    #[test]
    fn rejects_fractional_internal_links() {
        assert!(grow(&p(1.5, 2.5, 2.1, 0.4, 10), ModelKind::GeneralizedPso, 0).is_err());
        assert!(grow(&p(1.5, 2.5, 2.1, 1.0, 10), ModelKind::Epso, 0).is_err());
    }

    #[test]
    fn zero_temperature_pso_average_degree() {
        // k̄ → 2m = 2 over 20 seeds
        let mut total = 0.0;
        for seed in 0..20 {
            let g = grow(&p(1.0, 0.0, 2.5, 0.0, 2000), ModelKind::Pso, seed).unwrap();
            total += 2.0 * g.edges.len() as f64 / 2000.0;
        }
        let kbar = total / 20.0;
        assert!((kbar - 2.0).abs() < 0.2, "k̄ = {kbar}");
    }

    #[test]
    fn zero_temperature_links_are_within_radius() {
        let params = p(1.0, 0.0, 2.5, 0.0, 300);
        let g = grow(&params, ModelKind::Pso, 9).unwrap();
        let set: HashSet<(usize, usize)> = g.edges.iter().copied().collect();
        let beta = params.beta();
        for i in 2..=300usize {
            let ri = g.truth[i - 1].r_initial;
            let big_r = connection_radius(i as f64, &params, 1.0).unwrap();
            for j in 1..i {
                let rj = beta * g.truth[j - 1].r_initial + (1.0 - beta) * ri;
                let x = RadialPair::new(ri, rj, 1.0)
                    .distance(HalfAngle::new(g.truth[i - 1].theta).sin_half_diff(HalfAngle::new(g.truth[j - 1].theta)), 1.0);
                assert_eq!(set.contains(&(j - 1, i - 1)), x <= big_r);
            }
        }
    }

    #[test]
    fn curve_endpoint() {
        let params = p(1.5, 2.5, 2.1, 0.4, 1000);
        let c = expected_degree_curve(&params);
        assert_eq!(c.len(), 1000);
        assert!((c[999].1 - 1.5).abs() < 1e-9);
    }
}
