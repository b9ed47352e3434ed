//! Structural statistics of a graph: degree distribution, clustering, neighbour
//! degree, shortest-path lengths and betweenness, and links to older nodes under a
//! birth order.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{AdjacencySnapshot, UNREACHABLE};

/// Sources handed to one parallel task.
const SOURCE_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub k: usize,
    pub count: usize,
    /// `P(k)`.
    pub fraction: f64,
    /// Mean local clustering of nodes of degree `k` (0 for `k < 2`).
    pub clustering: f64,
    /// Mean neighbour degree (0 for `k = 0`).
    pub knn: f64,
    /// Mean normalized betweenness.
    pub betweenness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: f64,
    pub average_clustering: f64,
    pub giant_component: usize,
    pub by_degree: Vec<DegreeRow>,
    /// `(l, fraction of giant-component node pairs at hop distance l)`.
    pub path_lengths: Vec<(u32, f64)>,
    pub average_path_length: f64,
    /// Normalized betweenness per node; 0 outside the giant component.
    pub betweenness: Vec<f64>,
    /// Moving average of links to older nodes, degree-descending order; see
    /// [`links_to_older`].
    pub m_tilde: Vec<LinksToOlder>,
}

impl TopologyStats {
    /// Tab-separated per-degree table.
    pub fn degree_table(&self) -> String {
        let mut s = String::from("k\tcount\tP(k)\tclustering\tknn\tbetweenness\n");
        for r in &self.by_degree {
            s.push_str(&format!(
                "{}\t{}\t{:.10}\t{:.10}\t{:.10}\t{:.10e}\n",
                r.k, r.count, r.fraction, r.clustering, r.knn, r.betweenness
            ));
        }
        s
    }

    pub fn path_length_table(&self) -> String {
        let mut s = String::from("l\tfraction\n");
        for (l, f) in &self.path_lengths {
            s.push_str(&format!("{l}\t{f:.10}\n"));
        }
        s
    }

    pub fn m_tilde_table(&self) -> String {
        let mut s = String::from("rank\tlinks_to_older\tm_tilde\n");
        for r in &self.m_tilde {
            s.push_str(&format!("{}\t{}\t{:.10}\n", r.rank, r.links, r.m_tilde));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinksToOlder {
    /// Position in the order, from 2.
    pub rank: usize,
    /// `m_i`: neighbours earlier in the order.
    pub links: usize,
    /// `m̃_i = (1/(i-1)) Σ_{j=2..i} m_j`.
    pub m_tilde: f64,
}

/// `m_i` and its moving average for nodes visited in `order` (`order[k]` at rank
/// `k + 1`).
pub fn links_to_older(net: &AdjacencySnapshot, order: &[usize]) -> Vec<LinksToOlder> {
    let mut rank = vec![0usize; net.node_count()];
    for (k, &v) in order.iter().enumerate() {
        rank[v] = k + 1;
    }
    let mut out = Vec::with_capacity(order.len().saturating_sub(1));
    let mut total = 0usize;
    for (k, &v) in order.iter().enumerate().skip(1) {
        let i = k + 1;
        let links = net.neighbors(v).iter().filter(|&&u| rank[u] < i).count();
        total += links;
        out.push(LinksToOlder { rank: i, links, m_tilde: total as f64 / (i - 1) as f64 });
    }
    out
}

/// Local clustering coefficient of every node.
pub fn local_clustering(net: &AdjacencySnapshot) -> Vec<f64> {
    let n = net.node_count();
    let mut mark = vec![false; n];
    let mut out = vec![0.0; n];
    for (v, c) in out.iter_mut().enumerate() {
        let nb = net.neighbors(v);
        let k = nb.len();
        if k < 2 {
            continue;
        }
        for &u in nb {
            mark[u] = true;
        }
        let mut tri = 0usize;
        for &u in nb {
            tri += net.neighbors(u).iter().filter(|&&w| mark[w]).count();
        }
        for &u in nb {
            mark[u] = false;
        }
        // each triangle counted twice
        *c = tri as f64 / (k * (k - 1)) as f64;
    }
    out
}

/// Normalized betweenness (pairs through a node over `(n-1)(n-2)/2`, endpoints
/// excluded) on the subgraph induced by `nodes`, returned for every node of `net`.
pub fn betweenness(net: &AdjacencySnapshot, nodes: &[usize]) -> Vec<f64> {
    let (sub, map) = net.induced(nodes);
    let n = sub.node_count();
    let starts: Vec<usize> = (0..n).step_by(SOURCE_CHUNK).collect();
    let partial: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&lo| {
            let mut acc = vec![0.0; n];
            let mut sigma = vec![0.0f64; n];
            let mut dist = vec![-1i64; n];
            let mut delta = vec![0.0f64; n];
            let mut stack = Vec::with_capacity(n);
            let mut queue = VecDeque::with_capacity(n);
            for s in lo..(lo + SOURCE_CHUNK).min(n) {
                sigma.fill(0.0);
                dist.fill(-1);
                delta.fill(0.0);
                stack.clear();
                sigma[s] = 1.0;
                dist[s] = 0;
                queue.push_back(s);
                while let Some(v) = queue.pop_front() {
                    stack.push(v);
                    for &w in sub.neighbors(v) {
                        if dist[w] < 0 {
                            dist[w] = dist[v] + 1;
                            queue.push_back(w);
                        }
                        if dist[w] == dist[v] + 1 {
                            sigma[w] += sigma[v];
                        }
                    }
                }
                while let Some(w) = stack.pop() {
                    for &v in sub.neighbors(w) {
                        if dist[v] == dist[w] - 1 {
                            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                        }
                    }
                    if w != s {
                        acc[w] += delta[w];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in &partial {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    let mut out = vec![0.0; net.node_count()];
    if n >= 3 {
        // every unordered pair was visited from both ends
        let norm = ((n - 1) * (n - 2)) as f64;
        for (k, &v) in map.iter().enumerate() {
            out[v] = total[k] / norm;
        }
    }
    out
}

/// Counts of ordered node pairs by hop distance within `nodes` (index `l`).
pub fn hop_distance_counts(net: &AdjacencySnapshot, nodes: &[usize]) -> Vec<u64> {
    let (sub, _) = net.induced(nodes);
    let n = sub.node_count();
    let starts: Vec<usize> = (0..n).step_by(SOURCE_CHUNK).collect();
    let partial: Vec<Vec<u64>> = starts
        .par_iter()
        .map(|&lo| {
            let mut counts = Vec::new();
            for s in lo..(lo + SOURCE_CHUNK).min(n) {
                for d in sub.bfs_distances(s) {
                    if d != UNREACHABLE && d > 0 {
                        let d = d as usize;
                        if d >= counts.len() {
                            counts.resize(d + 1, 0);
                        }
                        counts[d] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut total: Vec<u64> = Vec::new();
    for p in partial {
        if p.len() > total.len() {
            total.resize(p.len(), 0);
        }
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    total
}

/// All statistics; path lengths and betweenness use the giant component.
pub fn topology_stats(net: &AdjacencySnapshot) -> TopologyStats {
    let n = net.node_count();
    let giant = net.giant_component();
    let clustering = local_clustering(net);
    let bc = betweenness(net, &giant);
    let counts = hop_distance_counts(net, &giant);
    let pairs: u64 = counts.iter().sum();
    let path_lengths: Vec<(u32, f64)> =
        counts.iter().enumerate().skip(1).map(|(l, &c)| (l as u32, if pairs > 0 { c as f64 / pairs as f64 } else { 0.0 })).collect();
    let average_path_length = if pairs > 0 {
        counts.iter().enumerate().map(|(l, &c)| l as f64 * c as f64).sum::<f64>() / pairs as f64
    } else {
        0.0
    };
    // k -> (count, clustering sum, knn sum, betweenness sum)
    let mut rows: BTreeMap<usize, (usize, f64, f64, f64)> = BTreeMap::new();
    for v in 0..n {
        let k = net.degree(v);
        let knn = if k > 0 { net.neighbors(v).iter().map(|&u| net.degree(u) as f64).sum::<f64>() / k as f64 } else { 0.0 };
        let e = rows.entry(k).or_default();
        e.0 += 1;
        e.1 += clustering[v];
        e.2 += knn;
        e.3 += bc[v];
    }
    let by_degree = rows
        .into_iter()
        .map(|(k, (c, cl, knn, b))| DegreeRow {
            k,
            count: c,
            fraction: c as f64 / n as f64,
            clustering: cl / c as f64,
            knn: knn / c as f64,
            betweenness: b / c as f64,
        })
        .collect();
    let order = crate::embed::infer_birth_order(net);
    TopologyStats {
        nodes: n,
        edges: net.edge_count(),
        average_degree: net.average_degree(),
        average_clustering: if n > 0 { clustering.iter().sum::<f64>() / n as f64 } else { 0.0 },
        giant_component: giant.len(),
        by_degree,
        path_lengths,
        average_path_length,
        betweenness: bc,
        m_tilde: links_to_older(net, &order),
    }
}
