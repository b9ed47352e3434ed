//! `hypermap`: grow synthetic networks, embed networks into the hyperbolic plane, and
//! evaluate the maps.
//!
//! Every subcommand takes `--config <file>` with a JSON object of option values (flags
//! win), `--threads` and `--seed`, writes its outputs plus `provenance.json` into
//! `--out`, and prints a JSON summary. Failures print `{"error": {...}}` on stderr and
//! exit nonzero.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "hypermap", version, about = "Hyperbolic maps of complex networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a synthetic network (PSO, generalized PSO or E-PSO)
    Generate(GenerateArgs),
    /// Infer hyperbolic coordinates for an edge list
    Embed(EmbedArgs),
    /// Connection-probability curve and logarithmic loss of a map
    Validate(ValidateArgs),
    /// Missing-link prediction with hyperbolic and baseline scorers
    Linkpred(LinkpredArgs),
    /// Greedy routing success, hop length and stretch
    Route(RouteArgs),
    /// Estimate the temperature from embeddings over a grid
    InferTemp(InferTempArgs),
    /// Degree, clustering, path-length and betweenness statistics
    Stats(StatsArgs),
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct Common {
    /// JSON file with option values; flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads (outputs do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for every random draw of the command
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct ModelArgs {
    /// Expected links of a new node to older nodes
    #[arg(long)]
    pub m: Option<f64>,
    /// Expected internal links per time step
    #[arg(long = "L", id = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Degree-distribution exponent; estimated from the degree tail when omitted
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Temperature
    #[arg(long = "T", id = "T")]
    #[serde(rename = "T")]
    pub temperature: Option<f64>,
    /// Curvature scale, sqrt(-K)
    #[arg(long)]
    pub zeta: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct EmbedOpts {
    /// Degrees after whose last node a correction step runs (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub corrections: Option<Vec<usize>>,
    /// Sweeps per correction step; 0 disables corrections
    #[arg(long)]
    pub passes: Option<usize>,
    /// Angle of the first node
    #[arg(long)]
    pub theta1: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// pso, gpso or epso
    #[arg(long = "model", id = "model-kind")]
    #[serde(rename = "model")]
    pub kind: Option<String>,
    /// Number of nodes
    #[arg(long)]
    pub t: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub embed: EmbedOpts,
    /// Edge list
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Coordinate file
    #[arg(long)]
    pub coords: Option<PathBuf>,
    /// Distance bin width of the connection-probability curve
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Bins with fewer pairs are left out of the deviation summary
    #[arg(long)]
    pub min_pairs: Option<u64>,
    /// Random-angle draws for the log-loss baseline
    #[arg(long)]
    pub n_rand: Option<usize>,
    /// exact or first-term evaluation of the global connection probability
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct LinkpredArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub embed: EmbedOpts,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Fraction of edges moved to the probe set
    #[arg(long)]
    pub p: Option<f64>,
    /// Keep only nodes of degree greater than this before splitting
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Scorers: hyperbolic, cn, dp, isp, katz (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub scorers: Option<Vec<String>>,
    /// Strata: all, hard, low-degree (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub strata: Option<Vec<String>>,
    /// Degree bound of the low-degree stratum
    #[arg(long)]
    pub low_degree_k: Option<usize>,
    #[arg(long)]
    pub katz_epsilon: Option<f64>,
    #[arg(long)]
    pub katz_l_max: Option<usize>,
    /// exact or sampled
    #[arg(long)]
    pub auc_mode: Option<String>,
    /// Draws in sampled mode
    #[arg(long)]
    pub samples: Option<usize>,
    /// Coordinates of the training graph, skipping the embedding step
    #[arg(long)]
    pub training_coords: Option<PathBuf>,
    /// Largest number of points per ROC table
    #[arg(long)]
    pub roc_points: Option<usize>,
    /// Also write every scored pair
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump_scores: Option<bool>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct RouteArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub coords: Option<PathBuf>,
    /// Ordered pairs to sample
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Route every ordered pair of the giant component
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub all_pairs: Option<bool>,
    /// Write the per-pair trace table
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trace: Option<bool>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct InferTempArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub embed: EmbedOpts,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Temperatures to embed at (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Lower end of the fitted distance window
    #[arg(long)]
    pub window_lo: Option<f64>,
    /// Upper end of the fitted distance window
    #[arg(long)]
    pub window_hi: Option<f64>,
    #[arg(long)]
    pub min_pairs: Option<u64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = serde_json::json!({"error": {"kind": "usage", "message": e.to_string().trim_end()}});
            eprintln!("{report}");
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match commands::run(cli.command) {
        Ok(summary) => {
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
