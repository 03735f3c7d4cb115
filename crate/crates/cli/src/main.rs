//! Command-line experiments for abstention-based robust nearest-neighbor
//! classification under random feature-subspace attacks.
//!
//! Every stochastic subcommand requires an explicit `--seed`; identical
//! arguments produce byte-identical output regardless of `--threads`.
//! Exit codes: 0 success, 1 usage error, 2 runtime or convergence error.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abstain-nn", version, about)]
struct Cli {
    /// Worker threads for Monte Carlo evaluation (0 = rayon default). The
    /// output does not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Gen(commands::GenArgs),
    /// Run separation preprocessing and save a model file.
    Preprocess(commands::PreprocessArgs),
    /// Classify query points with a saved model.
    Predict(commands::PredictArgs),
    /// Attack test points with the exact or approximate adversary.
    Attack(commands::AttackArgs),
    /// Natural error, abstention rate and Monte Carlo robust error.
    Eval(commands::EvalArgs),
    /// Exact piecewise-constant curves of E_adv, D_nat and g versus tau.
    Curve(commands::CurveArgs),
    /// Online threshold tuning with the exponential forecaster.
    Tune(commands::TuneArgs),
    /// Closed-form bounds with Monte Carlo verification.
    Bounds(commands::BoundsArgs),
    /// Toy two-segment geometry: closed forms and the optimal threshold.
    Toy(commands::ToyArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Preprocess(args) => commands::preprocess(args),
        Command::Predict(args) => commands::predict(args),
        Command::Attack(args) => commands::attack(args),
        Command::Eval(args) => commands::eval(args),
        Command::Curve(args) => commands::curve(args),
        Command::Tune(args) => commands::tune(args),
        Command::Bounds(args) => commands::bounds(args),
        Command::Toy(args) => commands::toy(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
