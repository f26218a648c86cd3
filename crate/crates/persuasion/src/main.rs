use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use persuasion::commands::{self, Outcome};
use persuasion::error::read_file;
use persuasion::report::{PriceFile, SignalFile};
use persuasion::{parse_instance, CliError, Instance, Options};
use persuasion_core::Belief;

/// Solve and certify finite-state Bayesian persuasion instances.
#[derive(Debug, Parser)]
#[command(name = "persuasion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// Simplex mesh resolution for candidate posteriors.
    #[arg(long, global = true)]
    mesh_k: Option<usize>,
    /// Duality-gap target.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cutting-plane iteration cap.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Worker threads for objective evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the random off-grid probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Slope a of the revealed score w2 + a*w1.
    #[arg(long, global = true)]
    rs_a: Option<f64>,
    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Concavify on the candidate grid and certify the result.
    Solve { instance: PathBuf },
    /// Check an external signal and price against an instance.
    Certify {
        instance: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        price: PathBuf,
    },
    /// Solve in moment space and map the solution back to beliefs.
    MomentSolve { instance: PathBuf },
    /// Certify revelation of the linear score with the closed-form price.
    RsCertify { instance: PathBuf },
    /// Solve with the instance's side constraints.
    ConstrainedSolve { instance: PathBuf },
    /// Kantorovich-Rubinstein distance from the prior to a target belief.
    Kr {
        instance: PathBuf,
        /// JSON array with the target belief.
        #[arg(long)]
        target: PathBuf,
    },
    /// CSV of t, V, V_hat and the price line for a binary state.
    PlotData { instance: PathBuf },
}

fn load(path: &Path, flags: &Flags) -> Result<Instance, CliError> {
    let file = parse_instance(&read_file(path)?)?;
    let mut o = Options::from_file(&file.options);
    o.mesh_k = flags.mesh_k.unwrap_or(o.mesh_k);
    o.tol = flags.tol.unwrap_or(o.tol);
    o.max_iters = flags.max_iters.unwrap_or(o.max_iters);
    o.jobs = flags.jobs.unwrap_or(o.jobs);
    o.seed = flags.seed.unwrap_or(o.seed);
    o.rs_a = flags.rs_a.unwrap_or(o.rs_a);
    file.resolve_with(o)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let f = &cli.flags;
    match &cli.command {
        Command::Solve { instance } => commands::solve(&load(instance, f)?),
        Command::Certify { instance, signal, price } => {
            let inst = load(instance, f)?;
            let signal = SignalFile::parse(&read_file(signal)?)?;
            let price = PriceFile::parse(&read_file(price)?)?;
            commands::certify_pair(&inst, &signal, &price)
        }
        Command::MomentSolve { instance } => commands::moment_solve(&load(instance, f)?),
        Command::RsCertify { instance } => commands::rs_certify(&load(instance, f)?),
        Command::ConstrainedSolve { instance } => commands::constrained_solve(&load(instance, f)?),
        Command::Kr { instance, target } => {
            let inst = load(instance, f)?;
            let probs: Vec<f64> = serde_json::from_str(&read_file(target)?)
                .map_err(|e| CliError::Schema(format!("target: {e}")))?;
            let target = Belief::new(probs).map_err(|e| CliError::Schema(format!("target: {e}")))?;
            commands::kr(&inst, &target)
        }
        Command::PlotData { instance } => commands::plot_data(&load(instance, f)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the exit status of schema errors; 2 is
            // reserved for failed certificates.
            return ExitCode::from(if e.use_stderr() { persuasion::EXIT_INPUT as u8 } else { 0 });
        }
    };
    let level = if cli.flags.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Error };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(out) => {
            for line in &out.stderr {
                eprintln!("{line}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(persuasion::EXIT_INPUT as u8);
            }
            ExitCode::from(out.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
