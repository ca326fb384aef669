//! `redfeat`: evolve redundant features for a dataset and evaluate the
//! augmented result as a feature-selection benchmark.
//!
//! Subcommands: `augment` (run the evolution and write an augmented CSV plus
//! a provenance sidecar), `mi` (normalized pairwise MI matrix), `rank`
//! (information-gain ranking), `select` (SFFS wrapper selection), `classify`
//! (KNN/NB test accuracies), `cluster` (k-means++ ARI), and `plot` (scatter
//! CSV/SVG per source–r.f pair).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 run failure.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use redfeat::Error;

use crate::commands::InputSpec;
use crate::config::{Overrides, RunConfig, WrapperKind};

#[derive(Parser)]
#[command(
    name = "redfeat",
    version,
    about = "Evolve redundant features and evaluate augmented datasets"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Input dataset (.csv with a header row, or .arff).
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Output path: stem of the augmented files (augment) or directory (plot).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE.json")]
    config: Option<PathBuf>,

    /// Master seed; every component seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Label column of a CSV input (default: a column named "class", if any).
    #[arg(long, global = true, value_name = "NAME")]
    label_col: Option<String>,

    /// Treat every CSV column as a feature, even one named "class".
    #[arg(long, global = true)]
    no_labels: bool,

    /// Emit a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve redundant features per source feature; write CSV + provenance.
    Augment(AugmentArgs),
    /// Print the normalized pairwise MI matrix (with psi per column).
    Mi(MiArgs),
    /// Rank features by information gain.
    Rank,
    /// Select features with SFFS and a wrapper classifier.
    Select(SelectArgs),
    /// KNN and naive Bayes test accuracies on a stratified split.
    Classify(ClassifyArgs),
    /// k-means++ clustering agreement (ARI) with the class labels.
    Cluster(ClusterArgs),
    /// Export scatter CSV + SVG per (source, r.f) pair of an augmented CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct AugmentArgs {
    /// Redundant features to create per source feature.
    #[arg(long)]
    trees: Option<usize>,
    /// Feasibility threshold on the weakest normalized source MI.
    #[arg(long)]
    theta: Option<f64>,
    /// Population size.
    #[arg(long)]
    pop: Option<usize>,
    /// Generation count.
    #[arg(long)]
    gens: Option<usize>,
    /// k for the MI estimator's nearest-neighbour statistic.
    #[arg(long)]
    k_neighbors: Option<usize>,
    /// Conditioning offset added to the scaled source feature.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct MiArgs {
    /// Columns to include (comma-separated); default: all features.
    #[arg(long, value_delimiter = ',', value_name = "A,B,...")]
    cols: Option<Vec<String>>,
    /// Estimate on a seeded subsample of this many rows.
    #[arg(long, value_name = "N")]
    mi_subsample: Option<usize>,
    /// k for the MI estimator's nearest-neighbour statistic.
    #[arg(long)]
    k_neighbors: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    /// Wrapper classifier for the search.
    #[arg(long, value_enum)]
    wrapper: Option<WrapperKind>,
    /// Train,validation,test fractions (e.g. 60,20,20).
    #[arg(long, value_name = "A,B,C")]
    split: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Train,validation,test fractions (e.g. 60,20,20).
    #[arg(long, value_name = "A,B,C")]
    split: Option<String>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Cluster count (default: the number of classes).
    #[arg(long)]
    k: Option<usize>,
    /// Restarts; the best-inertia run is reported.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Add a small rendering-only jitter to the SVG points.
    #[arg(long)]
    jitter: bool,
    /// Also print each r.f's tree as an s-expression.
    #[arg(long)]
    dump_trees: bool,
}

/// Restore default SIGPIPE handling so piping into `head` & co. terminates
/// the process quietly instead of panicking on a failed stdout write.
#[cfg(unix)]
fn reset_sigpipe() {
    extern "C" {
        fn signal(signum: i32, handler: usize) -> usize;
    }
    const SIGPIPE: i32 = 13;
    const SIG_DFL: usize = 0;
    unsafe {
        signal(SIGPIPE, SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(jobs) = cli.global.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// Usage errors are 1, run failures 3, everything else (I/O, parsing,
/// malformed or degenerate data) 2.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::DigammaDomain(_)
        | Error::DegenerateBaseline(_)
        | Error::NonPositivePsi(_)
        | Error::DegenerateRf
        | Error::RunFailure { .. } => 3,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> redfeat::Result<()> {
    let mut over = Overrides {
        seed: cli.global.seed,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Augment(a) => {
            over.trees = a.trees;
            over.theta = a.theta;
            over.pop = a.pop;
            over.gens = a.gens;
            over.k_neighbors = a.k_neighbors;
            over.epsilon = a.epsilon;
        }
        Command::Mi(a) => {
            over.mi_subsample = a.mi_subsample;
            over.k_neighbors = a.k_neighbors;
        }
        Command::Select(a) => {
            over.wrapper = a.wrapper;
            over.split = a.split.clone();
        }
        Command::Classify(a) => {
            over.split = a.split.clone();
        }
        Command::Cluster(a) => {
            over.cluster_k = a.k;
            over.restarts = a.restarts;
        }
        Command::Rank | Command::Plot(_) => {}
    }
    let cfg = RunConfig::resolve(cli.global.config.as_deref(), &over)?;

    let input = cli
        .global
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--input is required".into()))?;
    let data = commands::load_input(&InputSpec {
        path: input,
        label_col: cli.global.label_col.as_deref(),
        no_labels: cli.global.no_labels,
    })?;
    let json = cli.global.json;

    match &cli.command {
        Command::Augment(_) => {
            let out = cli
                .global
                .out
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("augment needs --out".into()))?;
            commands::cmd_augment(&data, &cfg, input, out, json)
        }
        Command::Mi(a) => commands::cmd_mi(&data, &cfg, a.cols.as_deref(), json),
        Command::Rank => commands::cmd_rank(&data, &cfg, json),
        Command::Select(_) => commands::cmd_select(&data, &cfg, json),
        Command::Classify(_) => commands::cmd_classify(&data, &cfg, json),
        Command::Cluster(_) => commands::cmd_cluster(&data, &cfg, json),
        Command::Plot(a) => plot::cmd_plot(
            &data,
            &cfg,
            input,
            cli.global.out.as_deref(),
            a.jitter,
            a.dump_trees,
            json,
        ),
    }
}
