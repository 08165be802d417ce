use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Single-edge perturbation bounds for consensus over weighted digraphs.
#[derive(Debug, Parser)]
#[command(name = "edgemargin", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge-list file (`tail head weight` per line, `#` comments)
    pub file: PathBuf,
    /// Root of the in-branching; defaults to the first globally reachable
    /// node in input order
    #[arg(long, value_name = "LABEL")]
    pub root: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound every edge and report the graph class
    Analyze {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Bound one edge
    Bound {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, num_args = 2, value_names = ["TAIL", "HEAD"], required = true)]
        edge: Vec<String>,
    },
    /// Rank edges from most to least vulnerable
    Rank {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Integrate the (perturbed) consensus dynamics and classify the outcome
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, num_args = 2, value_names = ["TAIL", "HEAD"])]
        edge: Option<Vec<String>>,
        /// Perturbation added to the edge weight
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        /// Initial state as comma-separated values in node order, or
        /// `spread` for evenly spaced values centred on zero
        #[arg(long, default_value = "spread")]
        x0: String,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Single-linkage gap used to count clusters
        #[arg(long, default_value_t = edgemargin::dynamics::CLUSTER_GAP)]
        cluster_gap: f64,
        /// Trajectory CSV (`t,x_1,...,x_n,spread`)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Sample the loop gain -delta*M(j omega) for one edge
    Nyquist {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, num_args = 2, value_names = ["TAIL", "HEAD"], required = true)]
        edge: Vec<String>,
        /// Perturbation; defaults to the edge's lower bound
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        /// Points on the logarithmic frequency grid
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// CSV (`omega,re,im`); written to stdout when omitted
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Randomized internal consistency checks (seed from EDGEMARGIN_SEED)
    #[command(hide = true)]
    Selftest {
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}
