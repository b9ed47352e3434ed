use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use hypermap_core::context::{GlobalProbability, LikelihoodContext};
use hypermap_core::embed::{embed, EmbedOptions};
use hypermap_core::io::{format_coordinates, format_edge_list, read_coordinates_for, read_edge_list};
use hypermap_core::linkpred::{self, Baseline, Scorer, Stratum};
use hypermap_core::metrics::{connection_curve_with_width, logloss_report, MIN_BIN_PAIRS};
use hypermap_core::router::{evaluate_routing, trace_table, PairSelection};
use hypermap_core::stats::{estimate_params, fit_power_law_tail};
use hypermap_core::temperature::{infer_temperature, TailWindow};
use hypermap_core::topology::topology_stats;
use hypermap_core::{grow, AdjacencySnapshot, Embedding, Error, ModelKind, ModelParams, Result};

use crate::config::{resolve, Run};
use crate::{
    Command, Common, EmbedArgs, EmbedOpts, GenerateArgs, InferTempArgs, LinkpredArgs, ModelArgs, RouteArgs, StatsArgs,
    ValidateArgs,
};

pub fn run(command: Command) -> Result<Value> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Embed(a) => embed_cmd(a),
        Command::Validate(a) => validate(a),
        Command::Linkpred(a) => linkpred_cmd(a),
        Command::Route(a) => route(a),
        Command::InferTemp(a) => infer_temp(a),
        Command::Stats(a) => stats(a),
    }
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required")))
}

/// Sets up the worker pool and returns the output directory.
fn prepare(common: &mut Common) -> Result<PathBuf> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    required(&common.out, "out")
}

fn read_net(path: &Option<PathBuf>) -> Result<AdjacencySnapshot> {
    let path = required(path, "edges")?;
    let (net, dropped) = read_edge_list(&path)?;
    if dropped.duplicates + dropped.self_loops > 0 {
        log::warn!("{}: {} duplicate edges, {} self-loops dropped", path.display(), dropped.duplicates, dropped.self_loops);
    }
    Ok(net)
}

fn embed_options(o: &mut EmbedOpts) -> EmbedOptions {
    let d = EmbedOptions::default();
    EmbedOptions {
        correction_degrees: o.corrections.get_or_insert(d.correction_degrees).clone(),
        passes: *o.passes.get_or_insert(d.passes),
        theta1: *o.theta1.get_or_insert(d.theta1),
    }
}

/// Parameters for `net`, estimating `m`, `L` and `γ` when absent.
fn model_params(model: &mut ModelArgs, net: &AdjacencySnapshot, temperature: f64) -> Result<(ModelParams, Value)> {
    let zeta = *model.zeta.get_or_insert(1.0);
    let (p, notes) = estimate_params(net, model.m, model.l, model.gamma, temperature, zeta)?;
    Ok((p, Value::Object(notes)))
}

fn generate(args: GenerateArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let kind: ModelKind = a.kind.get_or_insert("epso".into()).parse()?;
    let seed = *a.common.seed.get_or_insert(1);
    let m = required(&a.model.m, "m")?;
    let l = *a.model.l.get_or_insert(0.0);
    let gamma = required(&a.model.gamma, "gamma")?;
    let temperature = required(&a.model.temperature, "T")?;
    let zeta = *a.model.zeta.get_or_insert(1.0);
    let t = required(&a.t, "t")?;
    let params = ModelParams::new(m, l, gamma, temperature, zeta, t)?;
    let mut run = Run::start("generate", &out)?;
    let g = grow(&params, kind, seed)?;
    let full = g.snapshot();
    let (net, _) = full.without_isolated();
    run.write("edges.txt", &format_edge_list(&net))?;
    run.write("truth.txt", &format_coordinates(&g.truth_embedding().restricted_to(&net)?)?)?;
    let summary = json!({
        "nodes": t,
        "isolated": t - net.node_count(),
        "edges": full.edge_count(),
        "average_degree": full.average_degree(),
        "expected_average_degree": params.average_degree(),
        "internal_links": g.internal_links,
        "internal_skipped": g.internal_skipped,
        "internal_shortfall": g.internal_shortfall,
        "graph_fingerprint": net.fingerprint(),
    });
    run.write_json("generate.json", &summary)?;
    run.note("isolated_nodes", "omitted from edges.txt and truth.txt")?;
    run.finish(&a, json!({ "generate": seed }))?;
    Ok(summary)
}

fn embed_cmd(args: EmbedArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let net = read_net(&a.edges)?;
    let temperature = required(&a.model.temperature, "T")?;
    let (params, estimated) = model_params(&mut a.model, &net, temperature)?;
    let options = embed_options(&mut a.embed);
    let mut run = Run::start("embed", &out)?;
    let start = std::time::Instant::now();
    let mut e = embed(&net, &params, &options)?;
    let seconds = start.elapsed().as_secs_f64();
    e.provenance.notes.insert("estimated_params".into(), estimated.clone());
    run.write("coords.txt", &format_coordinates(&e)?)?;
    run.note("estimated_params", &estimated)?;
    run.note("embed_seconds", seconds)?;
    run.finish(&a, json!({}))?;
    Ok(json!({
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "params": params,
        "estimated": estimated,
        "correction_ranks": e.provenance.correction_ranks,
        "seconds": seconds,
    }))
}

fn load_map(edges: &Option<PathBuf>, coords: &Option<PathBuf>) -> Result<(AdjacencySnapshot, Embedding)> {
    let net = read_net(edges)?;
    let e = read_coordinates_for(&required(coords, "coords")?, &net)?;
    Ok((net, e))
}

fn parse_mode(s: &str) -> Result<GlobalProbability> {
    match s {
        "exact" => Ok(GlobalProbability::Exact),
        "first-term" => Ok(GlobalProbability::FirstTerm),
        _ => Err(Error::InvalidParameter(format!("unknown mode {s:?} (exact, first-term)"))),
    }
}

fn validate(args: ValidateArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let (net, e) = load_map(&a.edges, &a.coords)?;
    let bin_width = *a.bin_width.get_or_insert(1.0);
    let min_pairs = *a.min_pairs.get_or_insert(MIN_BIN_PAIRS);
    let n_rand = *a.n_rand.get_or_insert(1);
    let mode = parse_mode(a.mode.get_or_insert("exact".into()))?;
    let seed = *a.common.seed.get_or_insert(1);
    let ctx = LikelihoodContext::new(e.params().with_size(net.node_count()))?;
    let mut run = Run::start("validate", &out)?;
    let curve = connection_curve_with_width(&e, &net, &ctx, bin_width)?;
    run.write("curve.tsv", &curve.to_table())?;
    let ll = logloss_report(&e, &net, &ctx, n_rand, seed, mode)?;
    let summary = json!({
        "nodes": net.node_count(),
        "bins_used": curve.pair_counts.iter().filter(|&&c| c >= min_pairs).count(),
        "min_pairs": min_pairs,
        "max_deviation_exact": curve.max_deviation(GlobalProbability::Exact, min_pairs),
        "max_deviation_first_term": curve.max_deviation(GlobalProbability::FirstTerm, min_pairs),
        "logloss": ll,
    });
    run.write_json("validate.json", &summary)?;
    run.finish(&a, json!({ "random_angles": seed }))?;
    Ok(summary)
}

fn parse_stratum(s: &str, k: usize) -> Result<Stratum> {
    match s {
        "all" => Ok(Stratum::All),
        "hard" | "hard-no-common-neighbor" => Ok(Stratum::HardNoCommonNeighbor),
        "low-degree" => Ok(Stratum::LowDegree { k_max: k }),
        _ => Err(Error::InvalidParameter(format!("unknown stratum {s:?} (all, hard, low-degree)"))),
    }
}

/// Keeps points that move at least `1/max` along either axis, plus both ends.
fn thin(points: &[(f64, f64)], max: usize) -> Vec<(f64, f64)> {
    if points.len() <= max || max < 2 {
        return points.to_vec();
    }
    let step = 1.0 / max as f64;
    let mut out = vec![points[0]];
    for &p in &points[1..points.len() - 1] {
        let last = out[out.len() - 1];
        if p.0 - last.0 >= step || p.1 - last.1 >= step {
            out.push(p);
        }
    }
    out.push(points[points.len() - 1]);
    out
}

fn linkpred_cmd(args: LinkpredArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let mut net = read_net(&a.edges)?;
    if let Some(k) = a.k_min {
        net = net.filter_min_degree(k).0;
    }
    let p = *a.p.get_or_insert(0.1);
    let seed = *a.common.seed.get_or_insert(1);
    let scorers = a.scorers.get_or_insert(["hyperbolic", "cn", "dp", "isp", "katz"].map(String::from).to_vec()).clone();
    let low_k = *a.low_degree_k.get_or_insert(6);
    let strata: Vec<Stratum> = a
        .strata
        .get_or_insert(["all", "hard", "low-degree"].map(String::from).to_vec())
        .iter()
        .map(|s| parse_stratum(s, low_k))
        .collect::<Result<_>>()?;
    let katz = Baseline::Katz { epsilon: *a.katz_epsilon.get_or_insert(0.005), l_max: *a.katz_l_max.get_or_insert(6) };
    let sampled = match a.auc_mode.get_or_insert("exact".into()).as_str() {
        "exact" => false,
        "sampled" => true,
        m => return Err(Error::InvalidParameter(format!("unknown AUC mode {m:?} (exact, sampled)"))),
    };
    let samples = *a.samples.get_or_insert(1_000_000);
    let roc_points = *a.roc_points.get_or_insert(2000);
    let dump = *a.dump_scores.get_or_insert(false);

    let mut run = Run::start("linkpred", &out)?;
    let split = linkpred::split(&net, p, seed)?;
    run.write("training.txt", &format_edge_list(&split.training))?;
    let probe_net = split.training.with_edges(&split.probe);
    run.write("probe.txt", &format_edge_list(&probe_net))?;

    let mut embedding = None;
    if scorers.iter().any(|s| s == "hyperbolic") {
        let e = match &a.training_coords {
            Some(path) => {
                let e = read_coordinates_for(path, &split.training)?;
                match &e.provenance.graph_fingerprint {
                    Some(f) if *f != split.training.fingerprint() => {
                        return Err(Error::Mismatch(format!("{} was not computed on this training graph", path.display())))
                    }
                    None => log::warn!("{} carries no graph fingerprint; assuming it maps the training graph", path.display()),
                    _ => {}
                }
                e
            }
            None => {
                let temperature = required(&a.model.temperature, "T")?;
                let (params, estimated) = model_params(&mut a.model, &split.training, temperature)?;
                let options = embed_options(&mut a.embed);
                let e = embed(&split.training, &params, &options)?;
                run.note("estimated_params", &estimated)?;
                run.write("training_coords.txt", &format_coordinates(&e)?)?;
                e
            }
        };
        embedding = Some(e);
    }

    let mut results = Vec::new();
    for name in &scorers {
        let scorer = match name.as_str() {
            "hyperbolic" => Scorer::hyperbolic(&split, embedding.as_ref().expect("embedded above"))?,
            "katz" => Scorer::baseline(&split, katz)?,
            other => Scorer::baseline(&split, Baseline::parse(other)?)?,
        };
        if dump {
            let file = format!("scores_{name}.tsv");
            write_streamed(&mut run, &file, |w| linkpred::write_scores(&split, &scorer, Stratum::All, w))?;
        }
        for &stratum in &strata {
            let entry = if sampled {
                match linkpred::auc_sampled(&split, &scorer, stratum, samples, seed) {
                    Ok(v) => json!({"scorer": scorer.name(), "stratum": stratum.name(), "auc": v, "samples": samples}),
                    Err(e @ Error::UndefinedAuc { .. }) => {
                        json!({"scorer": scorer.name(), "stratum": stratum.name(), "auc": null, "undefined": e.to_string()})
                    }
                    Err(e) => return Err(e),
                }
            } else {
                let scored = linkpred::score_pairs(&split, &scorer, stratum);
                let (m, n) = (scored.missing.len(), scored.nonexistent.len());
                match linkpred::auc(&scored) {
                    Ok(v) => {
                        let roc = thin(&linkpred::roc_curve(&scored)?, roc_points);
                        let mut t = String::from("fpr\ttpr\n");
                        for (x, y) in roc {
                            t.push_str(&format!("{x:.10}\t{y:.10}\n"));
                        }
                        run.write(&format!("roc_{name}_{}.tsv", stratum.name()), &t)?;
                        json!({"scorer": scorer.name(), "stratum": stratum.name(), "auc": v, "missing": m, "nonexistent": n})
                    }
                    Err(e @ Error::UndefinedAuc { .. }) => json!({
                        "scorer": scorer.name(), "stratum": stratum.name(), "auc": null,
                        "missing": m, "nonexistent": n, "undefined": e.to_string(),
                    }),
                    Err(e) => return Err(e),
                }
            };
            results.push(entry);
        }
    }
    let summary = json!({
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "probe_edges": split.probe.len(),
        "p": p,
        "auc_mode": if sampled { "sampled" } else { "exact" },
        "results": results,
    });
    run.write_json("linkpred.json", &summary)?;
    run.finish(&a, json!({ "split": seed, "auc_sample": if sampled { Some(seed) } else { None } }))?;
    Ok(summary)
}

/// Streams a large output file while hashing it.
fn write_streamed(
    run: &mut Run,
    name: &str,
    body: impl FnOnce(&mut HashingWriter<BufWriter<File>>) -> std::io::Result<()>,
) -> Result<()> {
    let path = run.path(name);
    let io = |source| Error::File { path: path.display().to_string(), source };
    let file = File::create(&path).map_err(io)?;
    let mut w = HashingWriter { inner: BufWriter::new(file), hasher: Sha256::new() };
    body(&mut w).map_err(io)?;
    w.inner.flush().map_err(io)?;
    run.record(name, w.hasher.finalize().as_slice());
    Ok(())
}

pub struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn route(args: RouteArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let (net, e) = load_map(&a.edges, &a.coords)?;
    let seed = *a.common.seed.get_or_insert(1);
    let n = *a.pairs.get_or_insert(10_000);
    let selection = if *a.all_pairs.get_or_insert(false) { PairSelection::All } else { PairSelection::Sample { n, seed } };
    let mut run = Run::start("route", &out)?;
    let (stats, records) = evaluate_routing(&net, &e, selection)?;
    if *a.trace.get_or_insert(false) {
        run.write("trace.tsv", &trace_table(&net, &records))?;
    }
    let summary = serde_json::to_value(&stats)?;
    run.write_json("route.json", &summary)?;
    run.finish(&a, json!({ "route_pairs": seed }))?;
    Ok(summary)
}

fn infer_temp(args: InferTempArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let net = read_net(&a.edges)?;
    if a.model.temperature.is_some() {
        return Err(Error::InvalidParameter("--T conflicts with infer-temp; use --grid".into()));
    }
    let grid = a.grid.get_or_insert((1..=9).map(|k| k as f64 / 10.0).collect()).clone();
    let (params, estimated) = model_params(&mut a.model, &net, grid[0])?;
    let options = embed_options(&mut a.embed);
    let window = TailWindow { lo: a.window_lo, hi: a.window_hi, min_pairs: *a.min_pairs.get_or_insert(MIN_BIN_PAIRS) };
    let mut run = Run::start("infer-temp", &out)?;
    let r = infer_temperature(&net, &params, &grid, window, &options)?;
    for (t, c) in r.grid.iter().zip(&r.curves) {
        run.write(&format!("curve_T{t}.tsv"), &c.to_table())?;
    }
    let summary = json!({
        "status": r.status,
        "estimate": r.estimate,
        "grid": r.grid,
        "successive_sup": r.successive_sup,
        "converged": r.converged,
        "window": r.window,
        "squared_error": r.squared_error,
        "estimated_params": estimated,
    });
    run.write_json("infer_temp.json", &summary)?;
    run.finish(&a, json!({}))?;
    Ok(summary)
}

fn stats(args: StatsArgs) -> Result<Value> {
    let mut a = resolve(&args, args.common.config.as_deref())?;
    let out = prepare(&mut a.common)?;
    let net = read_net(&a.edges)?;
    let mut run = Run::start("stats", &out)?;
    let s = topology_stats(&net);
    run.write("degree.tsv", &s.degree_table())?;
    run.write("paths.tsv", &s.path_length_table())?;
    run.write("m_tilde.tsv", &s.m_tilde_table())?;
    let fit = match fit_power_law_tail(&net.degrees()) {
        Ok(f) => serde_json::to_value(f)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "nodes": s.nodes,
        "edges": s.edges,
        "average_degree": s.average_degree,
        "average_clustering": s.average_clustering,
        "giant_component": s.giant_component,
        "average_path_length": s.average_path_length,
        "degree_tail": fit,
    });
    run.write_json("stats.json", &summary)?;
    run.finish(&a, json!({}))?;
    Ok(summary)
}
