use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectrum_queue::sim::{self, SimConfig, StopRule};
use spectrum_queue::{analytic, JoiningStrategy, SystemParams};
use spectrum_queue_cli::sweep::{self, Scale, SweepSpec};
use spectrum_queue_cli::{
    exit_code, report, simulate, validate, EXIT_BAD_INPUT, EXIT_CHECK_FAILED, EXIT_OK,
};

#[derive(Parser)]
#[command(name = "spectrum-queue", version)]
#[command(
    about = "Equilibrium, social optimum and pricing for secondary spectrum access with PU dismissal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium, social optimum and optimal fee at one parameter point
    Analytic {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep the reward and tabulate q_e, q_s, welfare and fee as CSV
    Sweep {
        #[command(flatten)]
        params: RateArgs,
        #[arg(long, default_value_t = 0.1)]
        reward_min: f64,
        #[arg(long, default_value_t = 70.0)]
        reward_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = ScaleArg::Linear)]
        scale: ScaleArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate the queue and compare with the analytic predictions
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Joining probability; defaults to the equilibrium q_e
        #[arg(long)]
        q: Option<f64>,
        /// Events per replication
        #[arg(long, conflicts_with = "horizon")]
        events: Option<u64>,
        /// Simulated time per replication
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, env = "SPECTRUM_QUEUE_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        replications: usize,
        #[arg(long, default_value_t = sim::DEFAULT_WARMUP_FRACTION)]
        warmup: f64,
        /// Write the event trace of the first run to stderr as time,kind,N,I
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the closed forms against the numerical oracle
    Validate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Also check this many random parameter draws
        #[arg(long, default_value_t = 0)]
        draws: usize,
        #[arg(long, env = "SPECTRUM_QUEUE_SEED", default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct RateArgs {
    #[arg(long, default_value_t = 7.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, default_value_t = 3.0)]
    mu: f64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 2.0)]
    cost: f64,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value_t = 3.0)]
    reward: f64,
}

impl RateArgs {
    fn with_reward(self, reward: f64) -> spectrum_queue::Result<SystemParams> {
        SystemParams::new(self.lambda, self.xi, self.mu, self.eta, self.cost, reward)
    }
}

impl ParamArgs {
    fn build(self) -> spectrum_queue::Result<SystemParams> {
        self.rates.with_reward(self.reward)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Emit machine-readable JSON
    #[arg(long)]
    json: bool,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

enum Failure {
    Input(String),
    Check,
}

impl From<spectrum_queue::Error> for Failure {
    fn from(e: spectrum_queue::Error) -> Self {
        if exit_code(&e) == EXIT_CHECK_FAILED {
            eprintln!("error: {e}");
            Failure::Check
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(format!("i/o: {e}"))
    }
}

fn sink(output: &OutputArgs) -> io::Result<Box<dyn Write>> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize + std::fmt::Display>(output: &OutputArgs, value: &T) -> Result<(), Failure> {
    let mut w = sink(output)?;
    if output.json {
        serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
        writeln!(w)?;
    } else {
        write!(w, "{value}")?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analytic { params, output } => {
            let report = report::analytic_report(&params.build()?)?;
            emit(&output, &report)?;
        }
        Command::Sweep {
            params,
            reward_min,
            reward_max,
            steps,
            scale,
            output,
        } => {
            let spec = SweepSpec {
                base: params.with_reward(reward_min.max(0.0))?,
                reward_min,
                reward_max,
                steps,
                scale: match scale {
                    ScaleArg::Linear => Scale::Linear,
                    ScaleArg::Log => Scale::Log,
                },
            };
            let rows = sweep::sweep(&spec)?;
            let mut w = sink(&output)?;
            if output.json {
                serde_json::to_writer_pretty(&mut w, &rows).map_err(io::Error::from)?;
                writeln!(w)?;
            } else {
                sweep::write_csv(&mut w, &rows)?;
            }
            w.flush()?;
        }
        Command::Simulate {
            params,
            q,
            events,
            horizon,
            seed,
            replications,
            warmup,
            trace,
            output,
        } => {
            let params = params.build()?;
            let q = match q {
                Some(q) => q,
                None if params.lambda > 0.0 => analytic::individual_equilibrium(&params)?.q_star,
                None => 0.0,
            };
            let stop = match (events, horizon) {
                (_, Some(h)) => StopRule::Horizon(h),
                (Some(n), None) => StopRule::Events(n),
                (None, None) => StopRule::Events(100_000),
            };
            let config =
                SimConfig::new(params, JoiningStrategy::new(q)?, stop, seed).with_warmup(warmup);
            let report = simulate::run(&config, replications)?;
            if trace {
                let first = if replications > 1 {
                    config.with_seed(sim::replication_seed(seed, 0))
                } else {
                    config
                };
                let stderr = io::stderr();
                let mut w = BufWriter::new(stderr.lock());
                let mut result = Ok(());
                sim::simulate_traced(&first, |r| {
                    if result.is_ok() {
                        result = writeln!(w, "{r}");
                    }
                })?;
                result?;
                w.flush()?;
            }
            emit(&output, &report)?;
        }
        Command::Validate {
            params,
            tolerance,
            draws,
            seed,
            output,
        } => {
            let report = validate::run(&params.build()?, tolerance, draws, seed)?;
            emit(&output, &report)?;
            if !report.passed {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BAD_INPUT)
        }
        Err(Failure::Check) => ExitCode::from(EXIT_CHECK_FAILED),
    }
}
