use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locnot::commands::{
    cmd_bell, cmd_counts, cmd_fringe, cmd_report, cmd_tomo, cmd_truth_table, to_report_json, CircuitSource,
    CommandError, Mode, RunConfig,
};
use locnot::density::BellState;

#[derive(Parser)]
#[command(
    name = "locnot",
    version,
    about = "Simulate a post-selected linear-optical CNOT gate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logical-basis truth table and success probabilities
    TruthTable(Common),
    /// Target-analyzer fringes behind the singlet input, control at D and H
    Fringe(Common),
    /// Tomography of the four Bell-producing inputs
    Bell(Common),
    /// Truth table, fringes and Bell states in one report
    Report(Common),
    /// Reconstruct a state from a counts CSV (setting_c,setting_t,counts)
    Tomo {
        counts_csv: PathBuf,
        /// Bell state to report the fidelity against
        #[arg(long, value_parser = parse_bell)]
        target: Option<BellState>,
        #[command(flatten)]
        common: Common,
    },
    /// Write tomography counts for the gate output on a Bell-producing input
    Counts {
        #[arg(long, value_parser = parse_bell, default_value = "psi-minus")]
        state: BellState,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// `conceptual`, `experimental`, or a circuit file
    #[arg(long, default_value = "conceptual")]
    circuit: CircuitSource,
    /// Mode overlap between the two photons, in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Counts per input, scan angle or tomography setting
    #[arg(long, default_value_t = 100_000)]
    counts: u64,
    /// Directory for JSON/CSV output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Unequal-mixing plate angle in degrees (experimental circuit)
    #[arg(long)]
    theta_third: Option<f64>,
    /// Control phase in radians (experimental circuit)
    #[arg(long)]
    phi_c: Option<f64>,
    /// Exact probabilities (default)
    #[arg(long, conflicts_with = "sampled")]
    analytic: bool,
    /// Poisson-sampled counts
    #[arg(long)]
    sampled: bool,
    /// Bootstrap resamples for tomography uncertainties
    #[arg(long, default_value_t = 50)]
    resamples: usize,
    /// Points per fringe scan over 0..90 degrees
    #[arg(long, default_value_t = 19)]
    scan_points: usize,
    /// Iteration cap for maximum-likelihood reconstruction
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            circuit: self.circuit.clone(),
            xi: self.xi,
            seed: self.seed,
            counts: self.counts,
            out_dir: self.out.clone(),
            phi_c: self.phi_c,
            theta_third: self.theta_third,
            mode: if self.sampled { Mode::Sampled } else { Mode::Analytic },
            resamples: self.resamples,
            scan_points: self.scan_points,
            max_iterations: self.max_iterations,
        }
    }
}

fn parse_bell(s: &str) -> Result<BellState, String> {
    BellState::from_name(s)
        .ok_or_else(|| format!("unknown Bell state {s:?} (psi-minus, psi-plus, phi-minus, phi-plus)"))
}

fn run(cli: Cli) -> Result<String, CommandError> {
    Ok(match cli.command {
        Command::TruthTable(c) => to_report_json(&cmd_truth_table(&c.config())?),
        Command::Fringe(c) => to_report_json(&cmd_fringe(&c.config())?),
        Command::Bell(c) => to_report_json(&cmd_bell(&c.config())?),
        Command::Report(c) => to_report_json(&cmd_report(&c.config())?),
        Command::Tomo {
            counts_csv,
            target,
            common,
        } => to_report_json(&cmd_tomo(&common.config(), &counts_csv, target)?),
        Command::Counts { state, common } => cmd_counts(&common.config(), state)?,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
