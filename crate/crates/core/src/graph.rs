//! Immutable undirected graph with dense node indices and external labels.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Marker for unreachable nodes in BFS distance vectors.
pub const UNREACHABLE: u32 = u32::MAX;

#[inline]
pub(crate) fn pair_key(a: usize, b: usize) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

/// Counts of input edges that were discarded while building a snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Dropped {
    pub duplicates: usize,
    pub self_loops: usize,
}

#[derive(Debug, Clone)]
pub struct AdjacencySnapshot {
    labels: Vec<String>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_set: HashSet<u64>,
}

impl AdjacencySnapshot {
    /// Builds a snapshot over `labels.len()` nodes; duplicate edges and self-loops are
    /// dropped and counted.
    pub fn from_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<(Self, Dropped)> {
        let n = labels.len();
        let mut dropped = Dropped::default();
        let mut edge_set = HashSet::with_capacity(edges.len());
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) references a node outside 0..{n}")));
            }
            if a == b {
                dropped.self_loops += 1;
                continue;
            }
            if !edge_set.insert(pair_key(a, b)) {
                dropped.duplicates += 1;
                continue;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edge_set.len());
        offsets.push(0);
        for mut row in adj {
            row.sort_unstable();
            targets.extend_from_slice(&row);
            offsets.push(targets.len());
        }
        let mut seen = HashSet::with_capacity(n);
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate node label {l:?}")));
            }
        }
        Ok((AdjacencySnapshot { labels, offsets, targets, edge_set }, dropped))
    }

    /// Builds a snapshot from labelled edges, assigning indices in order of first appearance.
    pub fn from_labeled_edges<S: AsRef<str>>(edges: &[(S, S)]) -> (Self, Dropped) {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut idx = |s: &str| -> usize {
            if let Some(&i) = index.get(s) {
                return i;
            }
            labels.push(s.to_string());
            index.insert(s.to_string(), labels.len() - 1);
            labels.len() - 1
        };
        let pairs: Vec<(usize, usize)> = edges.iter().map(|(a, b)| (idx(a.as_ref()), idx(b.as_ref()))).collect();
        AdjacencySnapshot::from_edges(labels, &pairs).expect("indices are in range and labels unique")
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_set.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label_index(&self) -> HashMap<&str, usize> {
        self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree(i)).collect()
    }

    /// Sorted neighbour list of `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edge_set.contains(&pair_key(a, b))
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for a in 0..self.node_count() {
            for &b in self.neighbors(a) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn average_degree(&self) -> f64 {
        if self.node_count() == 0 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    /// Number of common neighbours of `a` and `b`.
    pub fn common_neighbors(&self, a: usize, b: usize) -> usize {
        let (na, nb) = (self.neighbors(a), self.neighbors(b));
        let (mut i, mut j, mut c) = (0, 0, 0);
        while i < na.len() && j < nb.len() {
            match na[i].cmp(&nb[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    }

    /// Component id per node, with ids assigned in order of the smallest member index.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Nodes of the largest connected component, ascending. Ties go to the component
    /// holding the smallest index.
    pub fn giant_component(&self) -> Vec<usize> {
        let comp = self.components();
        let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; ncomp];
        for &c in &comp {
            sizes[c] += 1;
        }
        let Some(best) = (0..ncomp).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))) else {
            return Vec::new();
        };
        (0..self.node_count()).filter(|&i| comp[i] == best).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.giant_component().len() == self.node_count()
    }

    /// Hop distances from `src`; [`UNREACHABLE`] where there is no path.
    pub fn bfs_distances(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u] + 1;
            for &v in self.neighbors(u) {
                if dist[v] == UNREACHABLE {
                    dist[v] = du;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Subgraph induced by `nodes` (given in any order); returns the subgraph and, for
    /// each of its nodes, the index in `self`.
    pub fn induced(&self, nodes: &[usize]) -> (AdjacencySnapshot, Vec<usize>) {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut new_index = vec![usize::MAX; self.node_count()];
        for (k, &v) in keep.iter().enumerate() {
            new_index[v] = k;
        }
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let mut edges = Vec::new();
        for &a in &keep {
            for &b in self.neighbors(a) {
                if a < b && new_index[b] != usize::MAX {
                    edges.push((new_index[a], new_index[b]));
                }
            }
        }
        let (g, _) = AdjacencySnapshot::from_edges(labels, &edges).expect("induced subgraph is well formed");
        (g, keep)
    }

    /// Keeps nodes whose degree is strictly greater than `k`.
    pub fn filter_min_degree(&self, k: usize) -> (AdjacencySnapshot, Vec<usize>) {
        let keep: Vec<usize> = (0..self.node_count()).filter(|&i| self.degree(i) > k).collect();
        self.induced(&keep)
    }

    /// Drops nodes without links, as an edge list would.
    pub fn without_isolated(&self) -> (AdjacencySnapshot, Vec<usize>) {
        self.filter_min_degree(0)
    }

    /// Same node set and labels, different edges.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> AdjacencySnapshot {
        AdjacencySnapshot::from_edges(self.labels.clone(), edges).expect("same node set").0
    }

    /// SHA-256 over the sorted labels and the edge list expressed in that order; equal
    /// for the same graph under any indexing.
    pub fn fingerprint(&self) -> String {
        let mut by_label: Vec<usize> = (0..self.node_count()).collect();
        by_label.sort_by(|&a, &b| self.labels[a].cmp(&self.labels[b]));
        let mut pos = vec![0usize; self.node_count()];
        for (k, &v) in by_label.iter().enumerate() {
            pos[v] = k;
        }
        let mut h = Sha256::new();
        h.update((self.node_count() as u64).to_le_bytes());
        for &v in &by_label {
            let l = &self.labels[v];
            h.update((l.len() as u64).to_le_bytes());
            h.update(l.as_bytes());
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (pos[a].min(pos[b]), pos[a].max(pos[b])))
            .collect();
        edges.sort_unstable();
        for (a, b) in edges {
            h.update((a as u64).to_le_bytes());
            h.update((b as u64).to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Total order on labels: decimal integers first, by value, then everything else
/// lexicographically.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    fn numeric(s: &str) -> Option<&str> {
        if !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) {
            Some(s.trim_start_matches('0'))
        } else {
            None
        }
    }
    match (numeric(a), numeric(b)) {
        (Some(x), Some(y)) => x.len().cmp(&y.len()).then_with(|| x.cmp(y)).then_with(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> AdjacencySnapshot {
        AdjacencySnapshot::from_labeled_edges(&[("a", "b"), ("b", "c")]).0
    }

    #[test]
    fn drops_duplicates_and_loops() {
        let (g, d) = AdjacencySnapshot::from_labeled_edges(&[("a", "b"), ("b", "a"), ("a", "a")]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.node_count(), 2);
        assert_eq!(d, Dropped { duplicates: 1, self_loops: 1 });
    }

    #[test]
    fn basic_queries() {
        let g = path3();
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0) && !g.has_edge(0, 2) && !g.has_edge(0, 0));
        assert_eq!(g.common_neighbors(0, 2), 1);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.bfs_distances(0), vec![0, 1, 2]);
        assert!(g.is_connected());
    }

    #[test]
    fn giant_component_and_filter() {
        let (g, _) = AdjacencySnapshot::from_edges(
            (0..6).map(|i| i.to_string()).collect(),
            &[(0, 1), (2, 3), (3, 4), (2, 4)],
        )
        .unwrap();
        assert_eq!(g.giant_component(), vec![2, 3, 4]);
        assert!(!g.is_connected());
        assert_eq!(g.bfs_distances(0)[2], UNREACHABLE);
        let (f, map) = g.filter_min_degree(1);
        assert_eq!(map, vec![2, 3, 4]);
        assert_eq!(f.edge_count(), 3);
        assert_eq!(f.labels(), &["2", "3", "4"]);
    }

    #[test]
    fn label_order() {
        let mut v = vec!["b", "10", "2", "a", "02", "x1"];
        v.sort_by(|a, b| compare_labels(a, b));
        assert_eq!(v, vec!["02", "2", "10", "a", "b", "x1"]);
        assert_eq!(compare_labels("a", "a"), Ordering::Equal);
    }

    #[test]
    fn fingerprint_tracks_edges() {
        let g = path3();
        let h = g.with_edges(&[(0, 1)]);
        assert_ne!(g.fingerprint(), h.fingerprint());
        assert_eq!(g.fingerprint(), path3().fingerprint());
        let relabeled = AdjacencySnapshot::from_labeled_edges(&[("c", "b"), ("b", "a")]).0;
        assert_eq!(relabeled.labels(), &["c", "b", "a"]);
        assert_eq!(g.fingerprint(), relabeled.fingerprint());
    }

    #[test]
    fn rejects_duplicate_labels() {
        assert!(AdjacencySnapshot::from_edges(vec!["a".into(), "a".into()], &[]).is_err());
    }
}
