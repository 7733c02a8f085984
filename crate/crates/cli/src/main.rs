mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dryer_core::efficiency::{SweepMode, SweepQuantity};
use dryer_core::sim::CompensatorSource;
use dryer_core::{DryerError, ModelVariant};

#[derive(Parser, Debug)]
#[command(
    name = "dryer",
    version,
    about = "Rotary pebble dryer: steady state, linear models, loop tuning, simulation and efficiency surfaces"
)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured model variant.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Paper,
    Consistent,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Paper => ModelVariant::PaperVerbatim,
            VariantArg::Consistent => ModelVariant::MassConsistent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Paper,
    Jacobian,
}

impl From<SourceArg> for CompensatorSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Paper => CompensatorSource::Paper,
            SourceArg::Jacobian => CompensatorSource::Jacobian,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LoopArg {
    G1,
    G2,
    G3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    FixTamb,
    FixTe,
    FixTin,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixTamb => SweepMode::FixTamb,
            ModeArg::FixTe => SweepMode::FixTe,
            ModeArg::FixTin => SweepMode::FixTin,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QuantityArg {
    Eta,
    DEtaDTin,
    DEtaDTe,
}

impl From<QuantityArg> for SweepQuantity {
    fn from(q: QuantityArg) -> Self {
        match q {
            QuantityArg::Eta => SweepQuantity::Eta,
            QuantityArg::DEtaDTin => SweepQuantity::DEtaDTin,
            QuantityArg::DEtaDTe => SweepQuantity::DEtaDTe,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the operating point and report residuals.
    Steady {
        /// Also run the Newton solver from the closed-form point and report the gap.
        #[arg(long)]
        newton: bool,
    },
    /// Write A and B of the linear model plus the paper-vs-Jacobian discrepancy report.
    Linearize {
        #[arg(long, value_enum, default_value = "paper")]
        source: SourceArg,
        /// Operating point unknowns (JSON as written by `steady`) instead of the closed form.
        #[arg(long)]
        op: Option<PathBuf>,
    },
    /// Design one loop compensator.
    Tune {
        #[arg(value_enum)]
        r#loop: LoopArg,
        #[arg(long, value_enum, default_value = "paper")]
        source: SourceArg,
    },
    /// Run the closed-loop scenario and write the trace and figures of merit.
    Simulate {
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        /// Scenario JSON; overrides the configured one.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Start at the operating point and apply no events.
        #[arg(long)]
        no_events: bool,
        /// Rerun at half the step and warn when states move by more than 1e-3 relative.
        #[arg(long)]
        stiffness_check: bool,
    },
    /// Figures of merit of an existing trace CSV.
    Foms {
        #[arg(long)]
        trace: PathBuf,
        /// Evaluation window start and end, s.
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        window: Option<Vec<f64>>,
    },
    /// Efficiency or sensitivity surface over a temperature grid.
    Surface {
        #[arg(long, value_enum, default_value = "fix-tamb")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "eta")]
        quantity: QuantityArg,
        /// Value of the fixed temperature, K.
        #[arg(long)]
        fixed: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &DryerError) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
