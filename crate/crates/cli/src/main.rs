use clap::{Parser, Subcommand};

use d2cluster_cli::{
    run_cluster, run_distance, run_eval, run_pam_convert, run_synth, ClusterArgs, DistanceArgs,
    EvalArgs, PamConvertArgs, SynthArgs,
};

/// Clustering for bags of weighted vectors under the Mallows distance.
#[derive(Parser)]
#[command(name = "d2cluster", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset and write labels, centroids, and a trace report.
    Cluster(ClusterArgs),
    /// Pairwise distances between two dataset files, as a matrix on stdout.
    Distance(DistanceArgs),
    /// Evaluate clustering quality or compare clusterings.
    Eval(EvalArgs),
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Convert a mutation-probability matrix into a distance matrix.
    PamConvert(PamConvertArgs),
}

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    let result = match &cli.command {
        Command::Cluster(args) => run_cluster(args),
        Command::Distance(args) => run_distance(args, &mut stdout),
        Command::Eval(args) => run_eval(args, &mut stdout),
        Command::Synth(args) => run_synth(args),
        Command::PamConvert(args) => run_pam_convert(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.code);
    }
}
