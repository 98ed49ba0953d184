use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cogradio::cli::csv::write_rows;
use cogradio::cli::{parse_scenario, run_experiment_with, Experiment, RunOptions};

#[derive(Parser)]
#[command(name = "cogradio", version, about = "Beamforming and rate allocation experiments for cognitive radio networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Power minimization for the scenario's SINR targets
    Powermin(Common),
    /// Common-rate maximization with single-user receivers
    Rateopt(Common),
    /// Common-rate maximization with joint receivers
    Mld(Common),
    /// Group-decoder rate allocation on channel-matching beams
    UgdAlloc(Common),
    /// Optimized vs matching beams, minimum rate
    Fig1(Common),
    /// Optimized vs matching beams, sum rate
    Fig2(Common),
    /// Optimized vs matching beams, sum power
    Fig3(Common),
    /// Joint-receiver rates, optimized vs matching beams
    Fig4(Common),
    /// Decoder comparison, minimum rate
    Fig5(Common),
    /// Decoder comparison, sum rate
    Fig6(Common),
    /// Run the experiment named in the scenario file
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Added to every seed of the scenario
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Overrides the bisection tolerance of the rate searches
    #[arg(long)]
    tol: Option<f64>,
    /// Record wall times (output is no longer reproducible byte for byte)
    #[arg(long)]
    timing: bool,
    /// Write message logs of distributed runs (powermin, ugd-alloc) as JSON lines
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Powermin(a) => (Some(Experiment::Powermin), a),
        Command::Rateopt(a) => (Some(Experiment::Rateopt), a),
        Command::Mld(a) => (Some(Experiment::Mld), a),
        Command::UgdAlloc(a) => (Some(Experiment::UgdAlloc), a),
        Command::Fig1(a) => (Some(Experiment::Fig1), a),
        Command::Fig2(a) => (Some(Experiment::Fig2), a),
        Command::Fig3(a) => (Some(Experiment::Fig3), a),
        Command::Fig4(a) => (Some(Experiment::Fig4), a),
        Command::Fig5(a) => (Some(Experiment::Fig5), a),
        Command::Fig6(a) => (Some(Experiment::Fig6), a),
        Command::Run(a) => (None, a),
    };

    let mut scenario = match parse_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(experiment) = experiment.or(scenario.experiment) else {
        eprintln!("error: the scenario names no experiment; use a subcommand other than `run`");
        return ExitCode::from(2);
    };
    if let Some(tol) = args.tol {
        if !tol.is_finite() || tol <= 0.0 {
            eprintln!("error: --tol must be positive and finite");
            return ExitCode::from(2);
        }
        scenario.tolerances.bisection_delta = tol;
    }
    for s in &mut scenario.seeds {
        *s = s.wrapping_add(args.seed_offset);
    }

    let opts = RunOptions {
        timing: args.timing,
        distributed: args.log.is_some(),
    };
    if args.log.is_some() && !matches!(experiment, Experiment::Powermin | Experiment::UgdAlloc) {
        eprintln!("warning: --log only applies to powermin and ugd-alloc; no log is written");
    }
    let out = run_experiment_with(&scenario, experiment, &opts);

    let written = match &args.out {
        Some(path) => cogradio::cli::write_csv(&out.rows, path),
        None => write_rows(&out.rows, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write results: {e}");
        return ExitCode::FAILURE;
    }
    if let Some(path) = &args.log {
        if let Err(e) = write_logs(path, &out.logs) {
            eprintln!("error: cannot write message log: {e}");
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

fn write_logs(path: &PathBuf, logs: &[(u64, cogradio::distsim::RunLog)]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (seed, log) in logs {
        for mut record in log.records() {
            record["seed"] = (*seed).into();
            serde_json::to_writer(&mut f, &record)?;
            f.write_all(b"\n")?;
        }
    }
    f.flush()
}
