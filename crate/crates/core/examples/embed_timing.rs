//! Times growth and embedding of an E-PSO network: `embed_timing [t] [seed]`.

use std::time::Instant;

use hypermap_core::embed::{embed, EmbedOptions};
use hypermap_core::{grow, ModelKind, ModelParams};

fn main() {
    let mut args = std::env::args().skip(1);
    let t: usize = args.next().map_or(1000, |s| s.parse().expect("t"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let params = ModelParams::new(1.5, 2.5, 2.1, 0.4, 1.0, t).unwrap();
    let start = Instant::now();
    let net = grow(&params, ModelKind::Epso, seed).unwrap().snapshot();
    println!("grow: {:.2}s, {} edges", start.elapsed().as_secs_f64(), net.edge_count());
    let start = Instant::now();
    let e = embed(&net, &params, &EmbedOptions::without_corrections()).unwrap();
    println!("embed without corrections: {:.2}s", start.elapsed().as_secs_f64());
    let start = Instant::now();
    let _ = embed(&net, &params, &EmbedOptions::default()).unwrap();
    println!("embed with corrections: {:.2}s", start.elapsed().as_secs_f64());
    let _ = e;
}
