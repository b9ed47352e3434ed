//! Edge-list and coordinate file formats.
//!
//! Edge lists hold two whitespace-separated labels per line; `#` starts a comment
//! line. Coordinate files start with a `# {json}` header carrying the parameters and
//! provenance, followed by `label rank radius angle` lines in rank order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, EmbeddingProvenance};
use crate::error::{Error, Result};
use crate::graph::{AdjacencySnapshot, Dropped};
use crate::params::ModelParams;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::File { path: path.display().to_string(), source })
}

pub fn parse_edge_list(text: &str) -> Result<(AdjacencySnapshot, Dropped)> {
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => edges.push((a, b)),
            _ => return Err(Error::Parse { line: n + 1, message: format!("expected two labels, got {line:?}") }),
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput("edge list has no edges".into()));
    }
    let (net, dropped) = AdjacencySnapshot::from_labeled_edges(&edges);
    if dropped.duplicates + dropped.self_loops > 0 {
        log::warn!("dropped {} duplicate edges and {} self-loops", dropped.duplicates, dropped.self_loops);
    }
    Ok((net, dropped))
}

pub fn read_edge_list(path: &Path) -> Result<(AdjacencySnapshot, Dropped)> {
    parse_edge_list(&read(path)?)
}

/// One line per edge, endpoints in index order. Isolated nodes are not represented.
pub fn format_edge_list(net: &AdjacencySnapshot) -> String {
    let mut s = String::with_capacity(net.edge_count() * 12);
    for (a, b) in net.edges() {
        s.push_str(net.label(a));
        s.push(' ');
        s.push_str(net.label(b));
        s.push('\n');
    }
    s
}

pub fn write_edge_list(net: &AdjacencySnapshot, path: &Path) -> Result<()> {
    write(path, &format_edge_list(net))
}

#[derive(Serialize, Deserialize)]
struct CoordinateHeader {
    params: ModelParams,
    provenance: EmbeddingProvenance,
}

pub fn format_coordinates(e: &Embedding) -> Result<String> {
    let header = CoordinateHeader { params: *e.params(), provenance: e.provenance.clone() };
    let mut s = format!("# {}\n# label rank radius angle\n", serde_json::to_string(&header)?);
    for (k, &v) in e.order().iter().enumerate() {
        s.push_str(&format!("{} {} {:.16e} {:.16e}\n", e.labels()[v], k + 1, e.radii()[v], e.angles()[v]));
    }
    Ok(s)
}

pub fn write_coordinates(e: &Embedding, path: &Path) -> Result<()> {
    write(path, &format_coordinates(e)?)
}

pub fn parse_coordinates(text: &str) -> Result<Embedding> {
    let mut header: Option<CoordinateHeader> = None;
    let mut rows: Vec<(String, usize, f64, f64)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim_start();
            if header.is_none() && c.starts_with('{') {
                header = Some(
                    serde_json::from_str(c)
                        .map_err(|e| Error::Parse { line: n + 1, message: format!("bad header: {e}") })?,
                );
            }
            continue;
        }
        let bad = |m: String| Error::Parse { line: n + 1, message: m };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(format!("expected label, rank, radius and angle, got {line:?}")));
        }
        let rank = f[1].parse::<usize>().map_err(|e| bad(format!("rank {:?}: {e}", f[1])))?;
        let r = f[2].parse::<f64>().map_err(|e| bad(format!("radius {:?}: {e}", f[2])))?;
        let a = f[3].parse::<f64>().map_err(|e| bad(format!("angle {:?}: {e}", f[3])))?;
        rows.push((f[0].to_string(), rank, r, a));
    }
    let header = header.ok_or_else(|| Error::Parse { line: 1, message: "missing JSON header".into() })?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyInput("coordinate file has no nodes".into()));
    }
    let mut order = vec![usize::MAX; n];
    for (i, row) in rows.iter().enumerate() {
        if row.1 == 0 || row.1 > n {
            return Err(Error::Mismatch(format!("rank {} of {:?} is outside 1..={n}", row.1, row.0)));
        }
        if order[row.1 - 1] != usize::MAX {
            return Err(Error::Mismatch(format!("rank {} is used twice", row.1)));
        }
        order[row.1 - 1] = i;
    }
    let labels = rows.iter().map(|r| r.0.clone()).collect();
    let radii = rows.iter().map(|r| r.2).collect();
    let angles = rows.iter().map(|r| r.3).collect();
    Embedding::new(labels, order, radii, angles, header.params, header.provenance)
}

pub fn read_coordinates(path: &Path) -> Result<Embedding> {
    parse_coordinates(&read(path)?)
}

/// Coordinates read from `path`, reindexed to the nodes of `net`.
pub fn read_coordinates_for(path: &Path, net: &AdjacencySnapshot) -> Result<Embedding> {
    read_coordinates(path)?.aligned_to(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let (g, d) = parse_edge_list("a b\nb c\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(d, Dropped::default());
    }

    #[test]
    fn duplicates_and_loops_counted() {
        let (g, d) = parse_edge_list("# x\na b\nb a\na a\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(d, Dropped { duplicates: 1, self_loops: 1 });
    }

    #[test]
    fn malformed_lines() {
        match parse_edge_list("a b\nb c d\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_edge_list("# only a comment\n").is_err());
        assert!(parse_edge_list("").is_err());
    }

    fn sample() -> Embedding {
        let p = ModelParams::new(1.5, 2.5, 2.1, 0.4, 1.0, 3).unwrap();
        Embedding::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![1, 0, 2],
            vec![0.1 + 0.2, std::f64::consts::PI, 1e-17],
            vec![0.0, 6.283185307179585, 1.0 / 3.0],
            p,
            EmbeddingProvenance { method: "test".into(), ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn coordinates_round_trip_bit_exactly() {
        let e = sample();
        let back = parse_coordinates(&format_coordinates(&e).unwrap()).unwrap();
        for i in 0..3 {
            let j = back.labels().iter().position(|l| *l == e.labels()[i]).unwrap();
            assert_eq!(e.radii()[i].to_bits(), back.radii()[j].to_bits());
            assert_eq!(e.angles()[i].to_bits(), back.angles()[j].to_bits());
            assert_eq!(e.rank(i), back.rank(j));
        }
        assert_eq!(back.provenance, e.provenance);
    }

    #[test]
    fn rejects_rank_collision_and_bad_angle() {
        let text = format_coordinates(&sample()).unwrap();
        let collide = text.replace("\nz 3 ", "\nz 2 ");
        assert!(parse_coordinates(&collide).is_err());
        let lines: Vec<&str> = text.lines().collect();
        let mut bad = lines[..lines.len() - 1].join("\n");
        bad.push_str("\nz 3 1.0 7.0\n");
        assert!(parse_coordinates(&bad).is_err());
    }
}
