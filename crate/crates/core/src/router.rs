//! Greedy routing over an embedded network.
//!
//! A packet at node `c` moves to the neighbour of `c` closest to the destination,
//! whether or not it is closer than `c` itself. It is dropped when that neighbour is
//! the node it just came from. Distance ties go to the neighbour with the smallest
//! rank. A hop limit of `t` guards against cycles longer than two.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{DistanceTable, Embedding};
use crate::error::{Error, Result};
use crate::graph::{AdjacencySnapshot, UNREACHABLE};
use crate::rng;

/// Sources handed to one parallel task.
const SOURCE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Delivered,
    /// The best neighbour was the previous hop.
    LocalMinimum,
    /// The packet exceeded the hop limit.
    HopLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub outcome: Outcome,
    /// Visited nodes, starting at the source.
    pub path: Vec<usize>,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }
}

pub struct Router<'a> {
    net: &'a AdjacencySnapshot,
    table: DistanceTable,
    rank: Vec<usize>,
    max_hops: usize,
}

impl<'a> Router<'a> {
    pub fn new(net: &'a AdjacencySnapshot, embedding: &Embedding) -> Result<Self> {
        embedding.check_matches(net)?;
        let rank = (0..net.node_count()).map(|i| embedding.rank(i)).collect();
        Ok(Router { net, table: embedding.distance_table(), rank, max_hops: net.node_count() })
    }

    pub fn with_max_hops(mut self, max_hops: usize) -> Self {
        self.max_hops = max_hops;
        self
    }

    /// Next hop from `c` towards `dst`, or `None` if `c` has no neighbours.
    fn next_hop(&self, c: usize, dst: usize) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None;
        for &u in self.net.neighbors(c) {
            let d = if u == dst { 0.0 } else { self.table.distance(u, dst) };
            let better = match best {
                None => true,
                Some((bd, br, _)) => d < bd || (d == bd && self.rank[u] < br),
            };
            if better {
                best = Some((d, self.rank[u], u));
            }
        }
        best.map(|b| b.2)
    }

    pub fn route(&self, src: usize, dst: usize) -> Route {
        let mut path = vec![src];
        let mut prev: Option<usize> = None;
        let mut c = src;
        while c != dst {
            if path.len() > self.max_hops {
                return Route { outcome: Outcome::HopLimit, path };
            }
            let Some(next) = self.next_hop(c, dst) else {
                return Route { outcome: Outcome::LocalMinimum, path };
            };
            if Some(next) == prev {
                return Route { outcome: Outcome::LocalMinimum, path };
            }
            prev = Some(c);
            c = next;
            path.push(c);
        }
        Route { outcome: Outcome::Delivered, path }
    }
}

/// Routes one packet; see [`Router`].
pub fn greedy_route(net: &AdjacencySnapshot, embedding: &Embedding, src: usize, dst: usize) -> Result<Route> {
    if src >= net.node_count() || dst >= net.node_count() {
        return Err(Error::InvalidParameter(format!("nodes {src}, {dst} out of range")));
    }
    Ok(Router::new(net, embedding)?.route(src, dst))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pairs", rename_all = "kebab-case")]
pub enum PairSelection {
    /// Every ordered pair of distinct giant-component nodes.
    All,
    /// `n` ordered pairs drawn uniformly with replacement; `n` at or above the number of
    /// ordered pairs selects all of them.
    Sample { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingStats {
    /// Success ratio.
    pub p_s: f64,
    /// Mean hops of delivered packets.
    pub h_bar: f64,
    /// Mean ratio of delivered hops to the shortest-path length.
    pub stretch: f64,
    pub n_pairs: usize,
    pub delivered: usize,
    pub local_minimum_drops: usize,
    pub hop_limit_drops: usize,
    pub selection: PairSelection,
    /// Size of the giant component the pairs were drawn from.
    pub giant_component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub src: usize,
    pub dst: usize,
    pub route: Route,
    /// Breadth-first hop distance.
    pub shortest: u32,
}

/// Greedy routing over pairs of the giant component.
pub fn evaluate_routing(
    net: &AdjacencySnapshot,
    embedding: &Embedding,
    selection: PairSelection,
) -> Result<(RoutingStats, Vec<PairRecord>)> {
    let router = Router::new(net, embedding)?;
    let giant = net.giant_component();
    if giant.len() < 2 {
        return Err(Error::EmptyInput("giant component has fewer than two nodes".into()));
    }
    // (src, dsts) grouped by source so each source runs one BFS
    let total = giant.len() * (giant.len() - 1);
    let effective = match selection {
        PairSelection::Sample { n, .. } if n >= total => {
            log::info!("{n} sampled pairs requested, {total} exist; routing all pairs");
            PairSelection::All
        }
        s => s,
    };
    let mut by_source: Vec<(usize, Vec<usize>)> = match effective {
        PairSelection::All => giant
            .iter()
            .map(|&s| (s, giant.iter().copied().filter(|&d| d != s).collect()))
            .collect(),
        PairSelection::Sample { n, seed } => {
            if n == 0 {
                return Err(Error::InvalidParameter("pair sample size must be positive".into()));
            }
            let mut r = rng::substream(seed, rng::ROUTE_PAIRS, 0);
            let mut pairs = Vec::with_capacity(n);
            while pairs.len() < n {
                let s = giant[r.random_range(0..giant.len())];
                let d = giant[r.random_range(0..giant.len())];
                if s != d {
                    pairs.push((s, d));
                }
            }
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut sorted: Vec<(usize, usize, usize)> =
                pairs.iter().enumerate().map(|(k, &(s, d))| (s, k, d)).collect();
            sorted.sort_unstable();
            for (s, _, d) in sorted {
                match groups.last_mut() {
                    Some((gs, ds)) if *gs == s => ds.push(d),
                    _ => groups.push((s, vec![d])),
                }
            }
            groups
        }
    };
    by_source.retain(|g| !g.1.is_empty());
    let records: Vec<PairRecord> = by_source
        .par_chunks(SOURCE_CHUNK)
        .flat_map_iter(|chunk| {
            chunk
                .iter()
                .flat_map(|(s, dsts)| {
                    let dist = net.bfs_distances(*s);
                    dsts.iter()
                        .map(|&d| {
                            PairRecord { src: *s, dst: d, route: router.route(*s, d), shortest: dist[d] }
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok((summarize(&records, effective, giant.len()), records))
}

fn summarize(records: &[PairRecord], selection: PairSelection, giant_component: usize) -> RoutingStats {
    let mut delivered = 0;
    let (mut lm, mut hl) = (0, 0);
    let (mut hops, mut stretch) = (0.0, 0.0);
    for rec in records {
        let (h, shortest) = (rec.route.hops(), rec.shortest);
        match rec.route.outcome {
            Outcome::Delivered => {
                delivered += 1;
                hops += h as f64;
                debug_assert!(shortest != UNREACHABLE && shortest > 0);
                stretch += h as f64 / shortest as f64;
            }
            Outcome::LocalMinimum => lm += 1,
            Outcome::HopLimit => hl += 1,
        }
    }
    if hl > 0 {
        log::warn!("{hl} packets hit the hop limit");
    }
    let n = records.len();
    let mean = |x: f64| if delivered > 0 { x / delivered as f64 } else { f64::NAN };
    RoutingStats {
        p_s: delivered as f64 / n as f64,
        h_bar: mean(hops),
        stretch: mean(stretch),
        n_pairs: n,
        delivered,
        local_minimum_drops: lm,
        hop_limit_drops: hl,
        selection,
        giant_component,
    }
}

/// Distinct sources in a record set.
pub fn sources(records: &[PairRecord]) -> usize {
    records.iter().map(|r| r.src).collect::<HashSet<_>>().len()
}

/// Tab-separated trace dump: source and destination labels, outcome, hops, shortest
/// path length and the visited labels joined by commas.
pub fn trace_table(net: &AdjacencySnapshot, records: &[PairRecord]) -> String {
    let mut s = String::from("src\tdst\toutcome\thops\tshortest\tpath\n");
    for r in records {
        let outcome = match r.route.outcome {
            Outcome::Delivered => "delivered",
            Outcome::LocalMinimum => "local-minimum",
            Outcome::HopLimit => "hop-limit",
        };
        let path: Vec<&str> = r.route.path.iter().map(|&v| net.label(v)).collect();
        s.push_str(&format!(
            "{}\t{}\t{outcome}\t{}\t{}\t{}\n",
            net.label(r.src),
            net.label(r.dst),
            r.route.hops(),
            r.shortest,
            path.join(",")
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    fn net(n: usize, edges: &[(usize, usize)]) -> AdjacencySnapshot {
        AdjacencySnapshot::from_edges((0..n).map(|i| i.to_string()).collect(), edges).unwrap().0
    }

    fn embed(angles: &[f64]) -> Embedding {
        let n = angles.len();
        let p = ModelParams::new(1.0, 0.0, 2.5, 0.5, 1.0, n).unwrap();
        Embedding::new(
            (0..n).map(|i| i.to_string()).collect(),
            (0..n).collect(),
            vec![10.0; n],
            angles.to_vec(),
            p,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn path_on_a_ring() {
        // ring of 6 with points placed in ring order
        let g = net(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let e = embed(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let r = greedy_route(&g, &e, 0, 2).unwrap();
        assert_eq!((r.outcome, r.path), (Outcome::Delivered, vec![0, 1, 2]));
        let (stats, recs) = evaluate_routing(&g, &e, PairSelection::All).unwrap();
        assert_eq!(recs.len(), 30);
        assert_eq!(stats.p_s, 1.0);
        assert_eq!(stats.stretch, 1.0);
        assert_eq!(sources(&recs), 6);
    }

    fn embed_ordered(angles: &[f64], order: Vec<usize>) -> Embedding {
        let e = embed(angles);
        Embedding::new(e.labels().to_vec(), order, e.radii().to_vec(), angles.to_vec(), *e.params(), Default::default())
            .unwrap()
    }

    #[test]
    fn dead_end_drops() {
        // path 2 - 1 - 0 - 3
        let g = net(4, &[(0, 1), (1, 2), (0, 3)]);
        let e = embed(&[0.5, 1.0, 1.5, 0.0]);
        let r = greedy_route(&g, &e, 2, 3).unwrap();
        assert_eq!((r.outcome, r.path), (Outcome::Delivered, vec![2, 1, 0, 3]));
        // leaf 2 sits angularly next to 3, so the packet bounces back
        let e = embed(&[1.0, 2.0, 0.2, 0.0]);
        let r = greedy_route(&g, &e, 1, 3).unwrap();
        assert_eq!((r.outcome, r.path), (Outcome::LocalMinimum, vec![1, 2]));
    }

    #[test]
    fn hop_limit_guard() {
        let g = net(3, &[(0, 1), (1, 2)]);
        let e = embed(&[0.0, 1.0, 2.0]);
        let r = Router::new(&g, &e).unwrap().with_max_hops(1).route(0, 2);
        assert_eq!(r.outcome, Outcome::HopLimit);
    }

    #[test]
    fn ties_go_to_smaller_rank() {
        let g = net(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        // 1 and 2 coincide; node 2 has the smaller rank
        let e = embed_ordered(&[0.0, 1.0, 1.0, 2.0], vec![0, 2, 1, 3]);
        assert_eq!(greedy_route(&g, &e, 0, 3).unwrap().path, vec![0, 2, 3]);
        let e = embed_ordered(&[0.0, 1.0, 1.0, 2.0], vec![0, 1, 2, 3]);
        assert_eq!(greedy_route(&g, &e, 0, 3).unwrap().path, vec![0, 1, 3]);
    }

    #[test]
    fn sampled_pairs_are_reproducible() {
        let edges: Vec<(usize, usize)> = (0..20).map(|i| (i, (i + 1) % 20)).collect();
        let g = net(20, &edges);
        let angles: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let e = embed(&angles);
        let a = evaluate_routing(&g, &e, PairSelection::Sample { n: 50, seed: 3 }).unwrap();
        let b = evaluate_routing(&g, &e, PairSelection::Sample { n: 50, seed: 3 }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.n_pairs, 50);
    }
}
