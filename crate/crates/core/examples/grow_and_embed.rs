//! Grows an E-PSO network, embeds it, and writes the edge list, ground truth and
//! inferred coordinates: `grow_and_embed <t> <T> <gamma> <seed> <out-dir>`.

use std::path::PathBuf;
use std::time::Instant;

use hypermap_core::embed::{embed, EmbedOptions};
use hypermap_core::io::{write_coordinates, write_edge_list};
use hypermap_core::{grow, ModelKind, ModelParams};

fn main() {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let t: usize = a[0].parse().unwrap();
    let temp: f64 = a[1].parse().unwrap();
    let gamma: f64 = a[2].parse().unwrap();
    let seed: u64 = a[3].parse().unwrap();
    let out = PathBuf::from(&a[4]);
    std::fs::create_dir_all(&out).unwrap();
    let params = ModelParams::new(1.5, 2.5, gamma, temp, 1.0, t).unwrap();
    let g = grow(&params, ModelKind::Epso, seed).unwrap();
    let (net, _) = g.snapshot().without_isolated();
    write_edge_list(&net, &out.join("edges.txt")).unwrap();
    write_coordinates(&g.truth_embedding().restricted_to(&net).unwrap(), &out.join("truth.txt")).unwrap();
    let start = Instant::now();
    let e = embed(&net, &params, &EmbedOptions::default()).unwrap();
    println!("embedded {} nodes in {:.1}s", net.node_count(), start.elapsed().as_secs_f64());
    write_coordinates(&e, &out.join("inferred.txt")).unwrap();
}
