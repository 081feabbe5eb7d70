use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nqs_experiments::{run_experiment, ExperimentConfig, ExperimentKind, Profile};

#[derive(Parser, Debug)]
#[command(name = "nqs-lab", author, version, about = "RBM basis-dependence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy gap over a (lambda, theta) grid.
    PhaseDiagram(CommonArgs),
    /// Near-degenerate doublet: RBM against the ground state and its superpositions.
    Degeneracy(CommonArgs),
    /// Training at theta and theta + pi, plus the exact parameter map between them.
    PiCompare(CommonArgs),
    /// Accuracy against rotation angle.
    Uniformity(CommonArgs),
    /// Truncated cumulant expansions of exact and trained states.
    Cumulant(CommonArgs),
    /// Cumulant truncation curves across chain lengths.
    SizeScaling(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML file merged over the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Profile::Ci)]
    profile: Profile,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::PhaseDiagram(a) => (ExperimentKind::PhaseDiagram, a),
        Command::Degeneracy(a) => (ExperimentKind::Degeneracy, a),
        Command::PiCompare(a) => (ExperimentKind::PiCompare, a),
        Command::Uniformity(a) => (ExperimentKind::Uniformity, a),
        Command::Cumulant(a) => (ExperimentKind::Cumulant, a),
        Command::SizeScaling(a) => (ExperimentKind::SizeScaling, a),
    };
    match run(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(kind: ExperimentKind, args: CommonArgs) -> anyhow::Result<bool> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = ExperimentConfig::load(kind, args.profile, args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.dry_run {
        print!("{}", toml::to_string_pretty(&cfg)?);
        return Ok(true);
    }
    let summary = run_experiment(kind, &cfg, &args.out)?;
    println!(
        "{}: {} records in {}/{} ({} hard failures, {} refused)",
        kind,
        summary.n_records,
        args.out.display(),
        summary.invocation,
        summary.hard_failures,
        summary.refused
    );
    Ok(summary.hard_failures == 0)
}
