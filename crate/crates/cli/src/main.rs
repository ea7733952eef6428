mod commands;
mod experiment;
mod failure;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;

use loosetree::instances::GenKind;
use loosetree::Vertex;

use commands::{Construct, DecomposeArgs, EmbedArgs, OracleArgs};
use failure::Outcome;

const CONFIG_HELP: &str = "JSON file with the slack constants of the pipeline (rationals as \"p/q\" strings). \
Defaults: gamma=1/10 mu=1/8 epsilon=1/800 eta=1/320 xi=1/40 alpha=1/400 beta=1/80 zeta=1/2000";

#[derive(Parser)]
#[command(name = "loosetree", version, about = "Embed spanning loose hypertrees in dense k-graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a tree or graph file and report what it holds.
    Validate { path: PathBuf },
    /// Degree, leaf and path statistics of a tree or graph file.
    Stats {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Split a tree into levels and audit the result.
    Decompose {
        tree: PathBuf,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value = "1/8")]
        mu: Rational64,
        #[arg(long)]
        r1: Option<Vertex>,
        #[arg(long)]
        r2: Option<Vertex>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed a spanning tree, or an almost spanning one with --almost.
    Embed {
        graph: PathBuf,
        tree: PathBuf,
        #[arg(long, default_value_t = 0)]
        root: Vertex,
        #[arg(long, default_value_t = 0)]
        image: Vertex,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, long_help = CONFIG_HELP)]
        config: Option<PathBuf>,
        /// Second root and its image, as R2:V2.
        #[arg(long, value_parser = parse_pair)]
        almost: Option<(Vertex, Vertex)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive embedding search.
    Oracle {
        graph: PathBuf,
        tree: PathBuf,
        #[arg(long, requires = "image")]
        root: Option<Vertex>,
        #[arg(long, requires = "root")]
        image: Option<Vertex>,
        #[arg(long)]
        budget: Option<u64>,
        /// Where to write the embedding when one is found.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an instance.
    Construct {
        #[command(subcommand)]
        what: ConstructCmd,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Seeded experiment sweeps with a JSON report.
    Experiment {
        #[arg(value_enum)]
        kind: experiment::Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
        /// Vertex counts (comma separated).
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Uniformities (comma separated).
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// Host densities (comma separated); 1 means complete.
        #[arg(long, value_delimiter = ',')]
        density: Vec<f64>,
        /// Sampling probability for the concentration check.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value = "1/10")]
        gamma: Rational64,
        /// Degree level for the concentration check; k−1 when omitted.
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, long_help = CONFIG_HELP)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "counterexamples")]
        counterexamples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// A host above the degree threshold with no spanning star at the apex.
    Tightness {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        n: usize,
    },
    /// A dense k-graph without a perfect matching.
    PmBarrier {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    /// A random rooted hypertree.
    Tree {
        #[arg(long, value_enum, default_value_t = TreeKind::Uniform)]
        kind: TreeKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A random host graph.
    Graph {
        #[arg(long, value_enum, default_value_t = GraphKind::Density)]
        kind: GraphKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Edge density, or the minimum normalised degree for min-degree.
        #[arg(long, default_value_t = 0.9)]
        param: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeKind {
    Uniform,
    PathHeavy,
    StarHeavy,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Density,
    MinDegree,
    Complete,
}

impl From<TreeKind> for GenKind {
    fn from(k: TreeKind) -> Self {
        match k {
            TreeKind::Uniform => GenKind::UniformAttachment,
            TreeKind::PathHeavy => GenKind::PathHeavy,
            TreeKind::StarHeavy => GenKind::StarHeavy,
        }
    }
}

impl From<GraphKind> for GenKind {
    fn from(k: GraphKind) -> Self {
        match k {
            GraphKind::Density => GenKind::Density,
            GraphKind::MinDegree => GenKind::MinDegree,
            GraphKind::Complete => GenKind::Complete,
        }
    }
}

fn parse_pair(s: &str) -> Result<(Vertex, Vertex), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected R:V, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<Vertex>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { path } => commands::validate(&path),
        Command::Stats { path, json } => commands::stats(&path, json),
        Command::Decompose { tree, d, mu, r1, r2, out } => commands::decompose(&DecomposeArgs { tree, d, mu, r1, r2, out }),
        Command::Embed { graph, tree, root, image, seed, config, almost, out } => {
            commands::embed(&EmbedArgs { graph, tree, root, image, seed, config, almost, out })
        }
        Command::Oracle { graph, tree, root, image, budget, out } => {
            let constraints = root.zip(image).into_iter().collect();
            commands::oracle(&OracleArgs { graph, tree, constraints, budget, out })
        }
        Command::Construct { what, out } => {
            let c = match what {
                ConstructCmd::Tightness { k, level, n } => Construct::Tightness { k, level, n },
                ConstructCmd::PmBarrier { k, n } => Construct::PmBarrier { k, n },
                ConstructCmd::Tree { kind, n, k, bias, seed } => Construct::Tree { kind: kind.into(), n, k, bias, seed },
                ConstructCmd::Graph { kind, n, k, param, seed } => Construct::Graph { kind: kind.into(), n, k, param, seed },
            };
            commands::construct(&c, out.as_deref())
        }
        Command::Experiment { kind, seed, trials, jobs, n, k, density, p, gamma, level, config, counterexamples, out } => {
            let params = experiment::Params {
                kind,
                seed,
                trials,
                jobs,
                n,
                k,
                p,
                gamma,
                level,
                density,
                config: commands::load_config(config.as_deref())?,
                counterexamples,
            };
            experiment::run(&params, out.as_deref())
        }
    }
}

fn main() {
    if let Err(f) = run(Cli::parse()) {
        eprintln!("{f}");
        std::process::exit(f.code());
    }
}
