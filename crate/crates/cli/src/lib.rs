//! Command implementations behind the `d2cluster` binary.

pub mod io;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use d2cluster::config::{Config, Segmenter};
use d2cluster::data::{DataObject, DistShape, GroundMetric, WeightedDataset};
use d2cluster::metrics::DbiDistance;
use d2cluster::parallel::HierarchyTrace;
use d2cluster::synth::SynthParams;
use d2cluster::Assignment;

/// Exit code for rejected input.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for solver failures.
pub const EXIT_SOLVER: i32 = 3;

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }

    pub fn io(err: std::io::Error) -> Self {
        CliError {
            message: err.to_string(),
            code: EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<d2cluster::Error> for CliError {
    fn from(err: d2cluster::Error) -> Self {
        let code = if err.is_solver_failure() {
            EXIT_SOLVER
        } else {
            EXIT_INPUT
        };
        CliError {
            message: err.to_string(),
            code,
        }
    }
}

/// Ground metric selection: squared Euclidean or a matrix file shared by
/// every super-dimension.
#[derive(Debug, Clone)]
pub enum GroundArg {
    Euclidean,
    Matrix(PathBuf),
}

impl std::str::FromStr for GroundArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "euclidean" {
            Ok(GroundArg::Euclidean)
        } else if let Some(path) = s.strip_prefix("matrix:") {
            Ok(GroundArg::Matrix(PathBuf::from(path)))
        } else {
            Err(format!(
                "unknown ground metric {s:?}; use \"euclidean\" or \"matrix:PATH\""
            ))
        }
    }
}

fn build_metrics(ground: &GroundArg, dataset: &WeightedDataset) -> Result<Vec<GroundMetric>, CliError> {
    let metrics = match ground {
        GroundArg::Euclidean => {
            vec![GroundMetric::SquaredEuclidean; dataset.super_dims()]
        }
        GroundArg::Matrix(path) => {
            let (_, matrix) = io::read_symbol_matrix(path)?;
            vec![GroundMetric::SymbolicMatrix(matrix); dataset.super_dims()]
        }
    };
    d2cluster::data::check_metrics(dataset, &metrics)?;
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Parallel,
    Sequential,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SegmenterArg {
    Split,
    Vq,
}

#[derive(Debug, clap::Args)]
pub struct ClusterArgs {
    /// Dataset file (JSON lines).
    #[arg(long)]
    pub input: PathBuf,
    /// Target (upper bound) cluster count.
    #[arg(long)]
    pub k: usize,
    /// Maximum segment size.
    #[arg(long, default_value_t = 50)]
    pub tau: usize,
    /// Target entries represented by each local centroid.
    #[arg(long, default_value_t = 5)]
    pub e: usize,
    /// Worker count.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = SegmenterArg::Split)]
    pub segmenter: SegmenterArg,
    /// Ground metric: "euclidean" or "matrix:PATH".
    #[arg(long, default_value = "euclidean")]
    pub ground: GroundArg,
    /// Keep centroid supports fixed.
    #[arg(long)]
    pub fix_supports: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap for both the labeling and centroid loops.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Relative convergence tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Output prefix; writes PREFIX.labels, PREFIX.centroids,
    /// PREFIX.trace.json.
    #[arg(long)]
    pub out: String,
}

/// Run report written next to the labels and centroids.
#[derive(Serialize)]
struct TraceReport<'a> {
    mode: &'a str,
    clusters: usize,
    objective: f64,
    elapsed_ms: f64,
    hierarchy: Option<&'a HierarchyTrace>,
}

fn config_from(args: &ClusterArgs) -> Config {
    Config {
        k: args.k,
        tau: args.tau,
        entries_per_cluster: args.e,
        workers: args.workers,
        max_iters_centroid: args.max_iters,
        max_iters_labeling: args.max_iters,
        rel_tol: args.tol,
        seed: args.seed,
        fix_supports: args.fix_supports,
        segmenter: match args.segmenter {
            SegmenterArg::Split => Segmenter::BinarySplit,
            SegmenterArg::Vq => Segmenter::Vq,
        },
    }
}

fn write_outputs(
    args: &ClusterArgs,
    dataset: &WeightedDataset,
    alphabet: Option<&[String]>,
    assignment: &Assignment,
    trace: Option<&HierarchyTrace>,
    elapsed_ms: f64,
    mode: &str,
) -> Result<(), CliError> {
    let labels_path = PathBuf::from(format!("{}.labels", args.out));
    io::write_labels(&labels_path, &dataset.objects, &assignment.labels)?;

    let total_weight = dataset.total_weight();
    let centroid_weights: Vec<f64> = assignment
        .proportions
        .iter()
        .map(|p| p * total_weight)
        .collect();
    let centroids_path = PathBuf::from(format!("{}.centroids", args.out));
    io::write_dataset(&centroids_path, &assignment.centroids, &centroid_weights, alphabet)?;

    let report = TraceReport {
        mode,
        clusters: assignment.centroids.len(),
        objective: assignment.objective,
        elapsed_ms,
        hierarchy: trace,
    };
    let trace_path = PathBuf::from(format!("{}.trace.json", args.out));
    std::fs::write(
        &trace_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(CliError::io)?;
    Ok(())
}

pub fn run_cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let file = io::read_dataset(&args.input)?;
    let metrics = build_metrics(&args.ground, &file.dataset)?;
    let config = config_from(args);
    config.validate()?;
    let start = Instant::now();
    match args.mode {
        Mode::Parallel => {
            let (assignment, trace) =
                d2cluster::parallel::parallel_d2_cluster(&file.dataset, &metrics, &config)?;
            write_outputs(
                args,
                &file.dataset,
                file.alphabet.as_deref(),
                &assignment,
                Some(&trace),
                start.elapsed().as_secs_f64() * 1e3,
                "parallel",
            )?;
        }
        Mode::Sequential => {
            let assignment =
                d2cluster::parallel::sequential_d2_cluster(&file.dataset, &metrics, &config)?;
            write_outputs(
                args,
                &file.dataset,
                file.alphabet.as_deref(),
                &assignment,
                None,
                start.elapsed().as_secs_f64() * 1e3,
                "sequential",
            )?;
        }
        Mode::Constrained => {
            let assignment = d2cluster::parallel::sequential_constrained_cluster(
                &file.dataset,
                &metrics,
                &config,
            )?;
            write_outputs(
                args,
                &file.dataset,
                file.alphabet.as_deref(),
                &assignment,
                None,
                start.elapsed().as_secs_f64() * 1e3,
                "constrained",
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct DistanceArgs {
    /// First dataset file.
    #[arg(long)]
    pub a: PathBuf,
    /// Second dataset file.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "euclidean")]
    pub ground: GroundArg,
}

/// Pairwise combined distances between two dataset files; one matrix row
/// per object of the first file, written to stdout.
pub fn run_distance(args: &DistanceArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let fa = io::read_dataset(&args.a)?;
    let fb = io::read_dataset(&args.b)?;
    let metrics = build_metrics(&args.ground, &fa.dataset)?;
    for x in &fa.dataset.objects {
        let row: Result<Vec<String>, CliError> = fb
            .dataset
            .objects
            .iter()
            .map(|y| {
                Ok(format!(
                    "{}",
                    d2cluster::transport::object_distance(x, y, &metrics)?
                ))
            })
            .collect();
        writeln!(out, "{}", row?.join(" ")).map_err(CliError::io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricArg {
    Msd,
    Mm,
    Categorical,
    Dbi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DbiDistanceArg {
    SquaredMallows,
    SquaredL2,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Dataset file (msd, dbi).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label table (msd, dbi, categorical).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Second label table (categorical).
    #[arg(long)]
    pub labels_b: Option<PathBuf>,
    /// Centroid dataset file (msd, mm, dbi); weights act as cluster masses.
    #[arg(long)]
    pub centroids: Option<PathBuf>,
    /// Second centroid dataset file (mm).
    #[arg(long)]
    pub centroids_b: Option<PathBuf>,
    #[arg(long, default_value = "euclidean")]
    pub ground: GroundArg,
    #[arg(long, value_enum, default_value_t = DbiDistanceArg::SquaredMallows)]
    pub dbi_distance: DbiDistanceArg,
}

fn require<'a, T>(opt: &'a Option<T>, flag: &str, metric: &str) -> Result<&'a T, CliError> {
    opt.as_ref()
        .ok_or_else(|| CliError::input(format!("--{flag} is required for {metric}")))
}

/// Align a label table to a dataset's object order.
fn aligned_labels(
    dataset: &WeightedDataset,
    pairs: &[(String, usize)],
) -> Result<Vec<usize>, CliError> {
    let by_id: std::collections::HashMap<&str, usize> = pairs
        .iter()
        .map(|(id, l)| (id.as_str(), *l))
        .collect();
    dataset
        .objects
        .iter()
        .map(|o| {
            by_id
                .get(o.id.as_str())
                .copied()
                .ok_or_else(|| CliError::input(format!("no label for object {}", o.id)))
        })
        .collect()
}

fn assignment_from(
    dataset: &WeightedDataset,
    labels: Vec<usize>,
    centroids: &DatasetFileParts,
) -> Result<Assignment, CliError> {
    let k = centroids.objects.len();
    for (&l, obj) in labels.iter().zip(&dataset.objects) {
        if l >= k {
            return Err(CliError::input(format!(
                "object {} labeled {l}, but only {k} centroids",
                obj.id
            )));
        }
    }
    let total: f64 = centroids.weights.iter().sum();
    Ok(Assignment {
        labels,
        centroids: centroids.objects.clone(),
        proportions: centroids.weights.iter().map(|w| w / total).collect(),
        objective: 0.0,
    })
}

struct DatasetFileParts {
    objects: Vec<DataObject>,
    weights: Vec<f64>,
    shape: Vec<DistShape>,
}

fn read_centroids(path: &Path) -> Result<DatasetFileParts, CliError> {
    let file = io::read_dataset(path)?;
    Ok(DatasetFileParts {
        objects: file.dataset.objects,
        weights: file.dataset.weights,
        shape: file.dataset.shape,
    })
}

pub fn run_eval(args: &EvalArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let value = match args.metric {
        MetricArg::Msd => {
            let data = io::read_dataset(require(&args.data, "data", "msd")?)?;
            let labels = aligned_labels(
                &data.dataset,
                &io::read_labels(require(&args.labels, "labels", "msd")?)?,
            )?;
            let centroids = read_centroids(require(&args.centroids, "centroids", "msd")?)?;
            let metrics = build_metrics(&args.ground, &data.dataset)?;
            let assignment = assignment_from(&data.dataset, labels, &centroids)?;
            let v = d2cluster::metrics::mean_squared_dispersion(
                &data.dataset.objects,
                &assignment,
                &metrics,
            )?;
            serde_json::json!({ "metric": "msd", "value": v })
        }
        MetricArg::Mm => {
            let a = read_centroids(require(&args.centroids, "centroids", "mm")?)?;
            let b = read_centroids(require(&args.centroids_b, "centroids-b", "mm")?)?;
            let fake = WeightedDataset {
                objects: a.objects.clone(),
                weights: a.weights.clone(),
                shape: a.shape.clone(),
            };
            let metrics = build_metrics(&args.ground, &fake)?;
            let pa: Vec<f64> = {
                let t: f64 = a.weights.iter().sum();
                a.weights.iter().map(|w| w / t).collect()
            };
            let pb: Vec<f64> = {
                let t: f64 = b.weights.iter().sum();
                b.weights.iter().map(|w| w / t).collect()
            };
            let v = d2cluster::metrics::mm_distance_sq(&a.objects, &pa, &b.objects, &pb, &metrics)?;
            serde_json::json!({ "metric": "mm", "value": v })
        }
        MetricArg::Categorical => {
            let pa = io::read_labels(require(&args.labels, "labels", "categorical")?)?;
            let pb = io::read_labels(require(&args.labels_b, "labels-b", "categorical")?)?;
            let by_id: std::collections::HashMap<&str, usize> =
                pb.iter().map(|(id, l)| (id.as_str(), *l)).collect();
            if pa.len() != pb.len() {
                return Err(CliError::input(format!(
                    "partitions cover {} and {} objects",
                    pa.len(),
                    pb.len()
                )));
            }
            let mut la = Vec::with_capacity(pa.len());
            let mut lb = Vec::with_capacity(pa.len());
            for (id, l) in &pa {
                let Some(&other) = by_id.get(id.as_str()) else {
                    return Err(CliError::input(format!("object {id} missing from --labels-b")));
                };
                la.push(*l);
                lb.push(other);
            }
            let v = d2cluster::metrics::categorical_distance(&la, &lb)?;
            serde_json::json!({ "metric": "categorical", "value": v })
        }
        MetricArg::Dbi => {
            let data = io::read_dataset(require(&args.data, "data", "dbi")?)?;
            let labels = aligned_labels(
                &data.dataset,
                &io::read_labels(require(&args.labels, "labels", "dbi")?)?,
            )?;
            let centroids = read_centroids(require(&args.centroids, "centroids", "dbi")?)?;
            let metrics = build_metrics(&args.ground, &data.dataset)?;
            let assignment = assignment_from(&data.dataset, labels, &centroids)?;
            let distance = match args.dbi_distance {
                DbiDistanceArg::SquaredMallows => DbiDistance::SquaredMallows,
                DbiDistanceArg::SquaredL2 => DbiDistance::SquaredL2Flattened,
            };
            let report = d2cluster::metrics::davies_bouldin(
                &data.dataset.objects,
                &assignment,
                &metrics,
                distance,
                &data.dataset.shape,
            )?;
            for &(j, l) in &report.coincident {
                eprintln!("warning: centroids {j} and {l} coincide; ratio is infinite");
            }
            serde_json::json!({ "metric": "dbi", "value": report.value })
        }
    };
    writeln!(out, "{value}").map_err(CliError::io)?;
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 25)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub supports: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional true-label table output.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

pub fn run_synth(args: &SynthArgs) -> Result<(), CliError> {
    let params = SynthParams {
        clusters: args.clusters,
        per_cluster: args.per_cluster,
        dim: args.dim,
        supports: args.supports,
        noise: args.noise,
        separation: args.separation,
        seed: args.seed,
    };
    let (dataset, labels) = d2cluster::synth::generate(&params)?;
    io::write_dataset(&args.out, &dataset.objects, &dataset.weights, None)?;
    if let Some(path) = &args.labels_out {
        io::write_labels(path, &dataset.objects, &labels)?;
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct PamConvertArgs {
    /// Mutation-probability matrix file.
    #[arg(long)]
    pub input: PathBuf,
    /// Distance matrix output file.
    #[arg(long)]
    pub output: PathBuf,
}

/// Convert a mutation-probability matrix into a valid ground-distance
/// matrix: distances are the negated sum of the two conditional
/// log-probabilities, shifted so the smallest self-distance is zero.
///
/// The raw formula yields negative values with a non-zero diagonal, so the
/// result is negated and shifted; any residual positive diagonal entries
/// (non-constant self-mutation probabilities) are clamped to zero to
/// satisfy the ground-metric invariants, preserving the off-diagonal
/// ordering exactly.
pub fn run_pam_convert(args: &PamConvertArgs) -> Result<(), CliError> {
    let (symbols, rows) = io::read_matrix(&args.input)?;
    let n = symbols.len();
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::input(format!(
                    "mutation probability ({i},{j}) = {p} outside (0, 1]",
                )));
            }
        }
    }
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = -(rows[i][j].ln() + rows[j][i].ln());
        }
    }
    let shift = (0..n).map(|i| dist[i][i]).fold(f64::INFINITY, f64::min);
    let mut clamped_diagonal = false;
    for i in 0..n {
        for j in 0..n {
            dist[i][j] -= shift;
            if i == j {
                if dist[i][j] > 1e-12 {
                    clamped_diagonal = true;
                }
                dist[i][j] = 0.0;
            } else if dist[i][j] < 0.0 {
                return Err(CliError::input(format!(
                    "pair ({},{}) maps to a negative distance; self-mutation is not dominant",
                    symbols[i], symbols[j]
                )));
            }
        }
    }
    if clamped_diagonal {
        eprintln!(
            "warning: self-mutation probabilities are not constant; residual diagonal entries were clamped to zero"
        );
    }
    io::write_matrix(&args.output, &symbols, &dist)
}
