mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Bad input: missing file, parse failure, precondition violated.
#[derive(Debug)]
pub struct InputError(pub String);

/// An experiment ran but its pass criterion did not hold.
#[derive(Debug)]
pub struct CriterionFailed(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for CriterionFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "criterion failed: {}", self.0)
    }
}

impl std::error::Error for InputError {}

impl std::error::Error for CriterionFailed {}

#[derive(Parser)]
#[command(name = "archegraph", version, about = "Vertex similarity by archetypes and graph similarity by Laplacian pencils")]
pub struct Cli {
    /// Master seed; every random stream is split from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Spectral embedding of a graph as JSON.
    Embed(EmbedArgs),
    /// Embed, fit the minimum-volume simplex, and write the mixture index.
    Vertexsim(VertexsimArgs),
    /// Most similar or dissimilar vertices from a mixture index.
    Query(QueryArgs),
    /// Condition number of the Laplacian pencil of two graphs.
    Kappa(KappaArgs),
    /// Greedy transposition descent on the condition number.
    Match(MatchArgs),
    /// Metropolis chain over alignments, samples as CSV.
    Metropolis(MetropolisArgs),
    /// Synthetic data generators.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Experiment harnesses; exit code 1 when the pass criterion fails.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args, Serialize)]
pub struct EmbedArgs {
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Embed only the largest connected component.
    #[arg(long)]
    pub largest_component: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct VertexsimArgs {
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long)]
    pub largest_component: bool,
    /// Fit dump (JSON); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Mixture table (CSV) for `query`.
    #[arg(long)]
    pub index: PathBuf,
}

#[derive(Args, Serialize)]
pub struct QueryArgs {
    /// Mixture table written by `vertexsim --index`.
    pub index: PathBuf,
    /// Vertex label to query.
    #[arg(long)]
    pub vertex: String,
    #[arg(long, short = 't', default_value_t = 5)]
    pub top: usize,
    /// Report the most dissimilar vertices instead.
    #[arg(long)]
    pub dissimilar: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Shifted,
}

#[derive(Args, Serialize)]
pub struct KappaArgs {
    pub graph_a: PathBuf,
    pub graph_b: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Shift size for `--method shifted`.
    #[arg(long, default_value_t = archegraph::pencil::DEFAULT_SHIFT)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct MatchArgs {
    pub graph_a: PathBuf,
    pub graph_b: PathBuf,
    /// Maximum number of descent iterations.
    #[arg(long, default_value_t = archegraph::matching::DEFAULT_MAX_ITERS)]
    pub q: usize,
    /// Minimum improvement for a step to be accepted.
    #[arg(long, default_value_t = archegraph::matching::DEFAULT_TOLERANCE)]
    pub epsilon: f64,
    /// Initial alignment: `label_a label_b` per line; unlisted vertices fill the free slots.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct MetropolisArgs {
    pub graph_a: PathBuf,
    pub graph_b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum GenCommand {
    /// Erdős–Rényi G(n, p).
    Er(GenErArgs),
    /// R-MAT graph on 2^levels vertices.
    Rmat(GenRmatArgs),
    /// Age-stratified network.
    Stratified(GenStratifiedArgs),
    /// Noisy point cloud on a random simplex.
    Cloud(GenCloudArgs),
    /// Uniform random permutation with a given number of cycles.
    Perm(GenPermArgs),
}

#[derive(Args, Serialize)]
pub struct GenErArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Output prefix; writes PREFIX.edges and PREFIX.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GenRmatArgs {
    #[arg(long)]
    pub levels: u32,
    /// Edge attempts; defaults to 8 per vertex.
    #[arg(long)]
    pub attempts: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = archegraph::synth::RMAT_DEFAULT)]
    pub probs: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GenStratifiedArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p0: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GenCloudArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    /// Writes PREFIX.points.csv, PREFIX.simplex.csv and PREFIX.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GenPermArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub cycles: usize,
    /// Writes PREFIX.perm (alignment format) and PREFIX.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Er,
    Rmat,
}

#[derive(Subcommand)]
pub enum ExperimentCommand {
    /// Simplex recovery error over k on noisy clouds.
    Fig3(Fig3Args),
    /// Same-age against different-age similarity on stratified networks.
    Fig4(Fig4Args),
    /// Alignment recovery by number of cycles of the hidden permutation.
    Table2(Table2Args),
    /// Exact against shifted condition numbers.
    ShiftAccuracy(ShiftArgs),
    /// Minimum condition number of the cospectral pair over all alignments.
    Cospectral(CospectralArgs),
}

#[derive(Args, Serialize)]
pub struct Fig3Args {
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5])]
    pub ks: Vec<usize>,
    /// Repetitions per k.
    #[arg(long, default_value_t = 5)]
    pub reps: u64,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct Fig4Args {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p0: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub reps: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct Table2Args {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long = "type", value_enum, default_value_t = GraphKind::Er)]
    pub graph_type: GraphKind,
    #[arg(long, default_value_t = archegraph::matching::DEFAULT_MAX_ITERS)]
    pub q: usize,
    #[arg(long, default_value_t = archegraph::matching::DEFAULT_TOLERANCE)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 3)]
    pub batches: u64,
    /// Successes a batch needs to count as good.
    #[arg(long, default_value_t = 4)]
    pub min_successes: usize,
    /// Good batches needed to pass.
    #[arg(long, default_value_t = 2)]
    pub min_batches: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ShiftArgs {
    /// Generated graph pairs.
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Extra edge-list files, each compared against a random relabeling of itself.
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct CospectralArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn init_threads() -> Result<(), InputError> {
    if let Ok(v) = std::env::var("ARCHEGRAPH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| InputError(format!("ARCHEGRAPH_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(InputError("ARCHEGRAPH_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| InputError(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads().map_err(anyhow::Error::from).and_then(|_| commands::run(&cli));
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<CriterionFailed>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
