//! WebAssembly bindings for the browser demo in `www/`.
//!
//! A [`Demo`] holds one grown network with its true coordinates and, once
//! [`Demo::embed`] has run, the inferred ones. Coordinates cross the boundary as flat
//! `Float64Array`s indexed by node.

use hypermap_core::embed::{embed, EmbedOptions};
use hypermap_core::router::{evaluate_routing, greedy_route, PairSelection};
use hypermap_core::{grow, AdjacencySnapshot, Embedding, ModelKind, ModelParams};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    net: AdjacencySnapshot,
    params: ModelParams,
    truth: Embedding,
    inferred: Option<Embedding>,
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    /// Grows an E-PSO network of `t` nodes; isolated nodes are dropped.
    #[wasm_bindgen(constructor)]
    pub fn new(t: usize, m: f64, l: f64, gamma: f64, temperature: f64, seed: u64) -> Result<Demo, JsError> {
        let params = ModelParams::new(m, l, gamma, temperature, 1.0, t).map_err(js)?;
        let g = grow(&params, ModelKind::Epso, seed).map_err(js)?;
        let (net, _) = g.snapshot().without_isolated();
        let truth = g.truth_embedding().restricted_to(&net).map_err(js)?;
        Ok(Demo { net, params, truth, inferred: None })
    }

    pub fn node_count(&self) -> usize {
        self.net.node_count()
    }

    /// Endpoints of every edge, flattened.
    pub fn edges(&self) -> Vec<u32> {
        self.net.edges().into_iter().flat_map(|(a, b)| [a as u32, b as u32]).collect()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.net.degrees().into_iter().map(|d| d as u32).collect()
    }

    pub fn radii(&self, inferred: bool) -> Result<Vec<f64>, JsError> {
        Ok(self.map(inferred)?.radii().to_vec())
    }

    pub fn angles(&self, inferred: bool) -> Result<Vec<f64>, JsError> {
        Ok(self.map(inferred)?.angles().to_vec())
    }

    /// Infers coordinates from the topology alone.
    pub fn embed(&mut self, corrections: bool) -> Result<(), JsError> {
        let options = if corrections { EmbedOptions::default() } else { EmbedOptions::without_corrections() };
        let e = embed(&self.net, &self.params, &options).map_err(js)?;
        // align the inferred map with the true one for display; maps are only
        // defined up to rotation and reflection
        let mirrored = e.with_angles(e.angles().iter().map(|a| (-a).rem_euclid(std::f64::consts::TAU)).collect()).map_err(js)?;
        let (shift, fit) = mean_offset(&self.truth, &e);
        let (mshift, mfit) = mean_offset(&self.truth, &mirrored);
        self.inferred = Some(if mfit > fit { mirrored.rotated(mshift) } else { e.rotated(shift) });
        Ok(())
    }

    pub fn has_inferred(&self) -> bool {
        self.inferred.is_some()
    }

    /// Greedy route as JSON: `{"outcome": ..., "path": [...]}`.
    pub fn route(&self, src: usize, dst: usize, inferred: bool) -> Result<String, JsError> {
        if src >= self.node_count() || dst >= self.node_count() {
            return Err(JsError::new("node index out of range"));
        }
        let r = greedy_route(&self.net, self.map(inferred)?, src, dst).map_err(js)?;
        Ok(serde_json::json!({ "outcome": r.outcome, "path": r.path, "hops": r.hops() }).to_string())
    }

    /// Success ratio, mean hops and stretch over `pairs` sampled pairs, as JSON.
    pub fn routing_stats(&self, inferred: bool, pairs: usize, seed: u64) -> Result<String, JsError> {
        let (stats, _) =
            evaluate_routing(&self.net, self.map(inferred)?, PairSelection::Sample { n: pairs, seed }).map_err(js)?;
        serde_json::to_string(&stats).map_err(js)
    }
}

impl Demo {
    fn map(&self, inferred: bool) -> Result<&Embedding, JsError> {
        if inferred {
            self.inferred.as_ref().ok_or_else(|| JsError::new("no inferred map yet"))
        } else {
            Ok(&self.truth)
        }
    }
}

/// Circular mean of the angle differences between two maps of the same nodes, and
/// its resultant length.
fn mean_offset(truth: &Embedding, e: &Embedding) -> (f64, f64) {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in truth.angles().iter().zip(e.angles()) {
        let d = a - b;
        s += d.sin();
        c += d.cos();
    }
    (s.atan2(c), s.hypot(c))
}
