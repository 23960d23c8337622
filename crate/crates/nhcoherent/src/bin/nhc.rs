use std::path::PathBuf;

use clap::{Parser, Subcommand};

use nhcoherent::cli::{cmd_example, cmd_project, cmd_propagate, cmd_validate, ExampleParams};

/// Evolve complexified Gaussian wave packets under quadratic
/// non-Hermitian Hamiltonians and cross-check the two equivalent routes.
#[derive(Parser)]
#[command(name = "nhc", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a JSON scenario and write trajectory files
    Propagate {
        /// Scenario config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output path, overrides output.path from the config
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format (csv or jsonl), overrides the config
        #[arg(long)]
        format: Option<String>,
    },
    /// Project a scenario's initial complex state to its real equivalent
    Project {
        /// Scenario config (JSON)
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a reference example and compare against its closed form
    Example {
        /// One of contraction, blowup, damped_oscillator, pt_shifted
        id: String,
        /// Contraction rate (one value) or gain vector (two values)
        #[arg(long, num_args = 1..=2, allow_negative_numbers = true)]
        gamma: Option<Vec<f64>>,
        /// Blowup horizon
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        /// Unimodular damping parameter, as real and imaginary parts
        #[arg(long, num_args = 2, allow_negative_numbers = true)]
        delta: Option<Vec<f64>>,
        /// Oscillator frequency
        #[arg(long)]
        omega: Option<f64>,
        /// Initial centre (p, q)
        #[arg(long, num_args = 2, allow_negative_numbers = true)]
        z0: Option<Vec<f64>>,
        /// Final time
        #[arg(long, allow_negative_numbers = true)]
        t1: Option<f64>,
        /// Base path for the emitted trajectory files
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format (csv or jsonl)
        #[arg(long)]
        format: Option<String>,
    },
    /// Run the deterministic self-validation suite
    Validate {
        /// fast (default) or full
        level: Option<String>,
        /// Seed for the randomized checks
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Inject a known defect to prove the suite catches it
        #[arg(long)]
        inject: Option<String>,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Propagate {
            config,
            out,
            format,
        } => cmd_propagate(&config, out.as_deref(), format.as_deref()),
        Command::Project { config } => cmd_project(&config),
        Command::Example {
            id,
            gamma,
            b,
            delta,
            omega,
            z0,
            t1,
            out,
            format,
        } => {
            let params = ExampleParams {
                gamma,
                b,
                delta,
                omega,
                z0,
                t1,
            };
            cmd_example(&id, &params, out.as_deref(), format.as_deref())
        }
        Command::Validate {
            level,
            seed,
            inject,
        } => cmd_validate(level.as_deref().unwrap_or("fast"), seed, inject.as_deref()),
    };
    std::process::exit(code);
}
