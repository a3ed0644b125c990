//! `rumorlab`: command-line front end for the truth-versus-rumor model.
//!
//! Settings are layered: built-in defaults, then `--config <file>` (flat
//! `key = value` lines, keys named like the long flags), then flags.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver non-convergence,
//! 3 oracle disagreement.

mod commands;
mod heatmap;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rumorlab::Error;

use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "rumorlab", version, about = "Truth-versus-rumor diffusion with costly verification")]
struct Cli {
    /// Flat `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Meetings per instant.
    #[arg(long)]
    k: Option<u32>,
    /// Transmission rate per meeting.
    #[arg(long)]
    nu: Option<f64>,
    /// Death (forgetting) rate.
    #[arg(long)]
    delta: Option<f64>,
    /// Share of meetings within one's own group.
    #[arg(long)]
    beta: Option<f64>,
    /// Prior that one's bias is the truth, in (0.5, 1).
    #[arg(long)]
    y: Option<f64>,
    /// Marginal verification cost.
    #[arg(long)]
    c: Option<f64>,
    /// Share of partisans in each group.
    #[arg(long)]
    gamma: Option<f64>,
    /// Cap of the verification technology (1 = no cap).
    #[arg(long)]
    xbar: Option<f64>,
    /// Verification family: exp_cap or rational.
    #[arg(long = "fn", value_name = "FAMILY")]
    family: Option<String>,
}

#[derive(Args, Debug, Default)]
struct RateArgs {
    /// Verification rate for bias-confirming messages (default: equilibrium).
    #[arg(long)]
    l: Option<f64>,
    /// Verification rate for opposing messages (default: equilibrium).
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct OutArgs {
    /// CSV destination (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state prevalences, ratio and stability for given rates.
    Steady {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rates: RateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Equilibrium verification rates.
    Equilibrium {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Also write the cost and prior thresholds to this CSV file.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Mean-field trajectory by RK4 integration.
    Trajectory {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rates: RateArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Time horizon (default 400/delta).
        #[arg(long)]
        horizon: Option<f64>,
        /// Step (default 0.01/delta).
        #[arg(long)]
        dt: Option<f64>,
        /// Keep every n-th step.
        #[arg(long)]
        record_every: Option<usize>,
        /// Initial state `rho00,rho01,rho11`.
        #[arg(long)]
        start: Option<String>,
        /// Stop once the state is at rest.
        #[arg(long)]
        stop_on_converge: Option<bool>,
    },
    /// Agent-based Monte Carlo runs.
    Abm {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        rates: RateArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Population size (even).
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Record every n-th step.
        #[arg(long)]
        record_every: Option<usize>,
        /// Expected initial prevalences `rho00,rho01,rho11`.
        #[arg(long)]
        start: Option<String>,
        /// First seed; replicas use consecutive seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Across-seed mean and standard deviation CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Closed-form cases against the generic solver on a (c, y) grid.
    RegionMap {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Cells along c.
        #[arg(long)]
        nc: Option<usize>,
        /// Cells along y.
        #[arg(long)]
        ny: Option<usize>,
        /// `lo:hi`, default 0:0.5.
        #[arg(long)]
        c_range: Option<String>,
        /// `lo:hi`, default 0.5:0.995.
        #[arg(long)]
        y_range: Option<String>,
        /// Cells closer than this to a threshold are not compared.
        #[arg(long)]
        band: Option<f64>,
        /// Rate tolerance for agreement.
        #[arg(long)]
        tol: Option<f64>,
        /// Largest tolerated share of disagreeing cells.
        #[arg(long)]
        max_disagreement: Option<f64>,
        /// Binary PPM heatmap of the cases.
        #[arg(long)]
        ppm: Option<PathBuf>,
        /// Pixels per cell side in the heatmap.
        #[arg(long)]
        ppm_scale: Option<usize>,
    },
    /// Equilibria across one or two swept parameters.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// `name=v1,v2,...` or `name=start:end:count`; repeat for a second axis.
        /// Names: k, nu, delta, beta, y, c, gamma, xbar, lk.
        #[arg(long)]
        sweep: Vec<String>,
    },
    /// Invariance of the ratio to the share of partisans.
    PartisanCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Partisan shares, list or `start:end:count`.
        #[arg(long)]
        gammas: Option<String>,
        /// Largest tolerated spread of the ratio.
        #[arg(long)]
        tol: Option<f64>,
    },
}

type Flags = Vec<(&'static str, Option<String>)>;

fn text<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn path(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

impl ModelArgs {
    fn flags(&self) -> Flags {
        vec![
            ("k", text(&self.k)),
            ("nu", text(&self.nu)),
            ("delta", text(&self.delta)),
            ("beta", text(&self.beta)),
            ("y", text(&self.y)),
            ("c", text(&self.c)),
            ("gamma", text(&self.gamma)),
            ("xbar", text(&self.xbar)),
            ("fn", self.family.clone()),
        ]
    }
}

impl RateArgs {
    fn flags(&self) -> Flags {
        vec![("l", text(&self.l)), ("h", text(&self.h))]
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Steady { model, rates, out } => {
            let mut flags = model.flags();
            flags.extend(rates.flags());
            flags.push(("out", path(&out.out)));
            commands::steady(&Settings::load(config, flags)?)
        }
        Command::Equilibrium {
            model,
            out,
            thresholds,
        } => {
            let mut flags = model.flags();
            flags.push(("out", path(&out.out)));
            flags.push(("thresholds", path(&thresholds)));
            commands::equilibrium(&Settings::load(config, flags)?)
        }
        Command::Trajectory {
            model,
            rates,
            out,
            horizon,
            dt,
            record_every,
            start,
            stop_on_converge,
        } => {
            let mut flags = model.flags();
            flags.extend(rates.flags());
            flags.extend([
                ("out", path(&out.out)),
                ("horizon", text(&horizon)),
                ("dt", text(&dt)),
                ("record-every", text(&record_every)),
                ("start", start),
                ("stop-on-converge", text(&stop_on_converge)),
            ]);
            commands::trajectory(&Settings::load(config, flags)?)
        }
        Command::Abm {
            model,
            rates,
            out,
            population,
            dt,
            horizon,
            record_every,
            start,
            seed,
            replicas,
            summary,
        } => {
            let mut flags = model.flags();
            flags.extend(rates.flags());
            flags.extend([
                ("out", path(&out.out)),
                ("population", text(&population)),
                ("dt", text(&dt)),
                ("horizon", text(&horizon)),
                ("record-every", text(&record_every)),
                ("start", start),
                ("seed", text(&seed)),
                ("replicas", text(&replicas)),
                ("summary", path(&summary)),
            ]);
            commands::abm(&Settings::load(config, flags)?)
        }
        Command::RegionMap {
            model,
            out,
            nc,
            ny,
            c_range,
            y_range,
            band,
            tol,
            max_disagreement,
            ppm,
            ppm_scale,
        } => {
            let mut flags = model.flags();
            flags.extend([
                ("out", path(&out.out)),
                ("nc", text(&nc)),
                ("ny", text(&ny)),
                ("c-range", c_range),
                ("y-range", y_range),
                ("band", text(&band)),
                ("tol", text(&tol)),
                ("max-disagreement", text(&max_disagreement)),
                ("ppm", path(&ppm)),
                ("ppm-scale", text(&ppm_scale)),
            ]);
            commands::region_map(&Settings::load(config, flags)?)
        }
        Command::Sweep { model, out, sweep } => {
            let mut flags = model.flags();
            flags.push(("out", path(&out.out)));
            if !sweep.is_empty() {
                flags.push(("sweep", Some(sweep.join(";"))));
            }
            commands::sweep(&Settings::load(config, flags)?)
        }
        Command::PartisanCheck {
            model,
            out,
            gammas,
            tol,
        } => {
            let mut flags = model.flags();
            flags.extend([
                ("out", path(&out.out)),
                ("gammas", gammas),
                ("tol", text(&tol)),
            ]);
            commands::partisan_check(&Settings::load(config, flags)?)
        }
    }
}

const EXIT_INVALID: u8 = 1;
const EXIT_NONCONVERGENCE: u8 = 2;
const EXIT_DISAGREEMENT: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(core) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        return EXIT_INVALID;
    };
    match core {
        Error::NonConvergence { .. }
        | Error::EmptySolutionSet
        | Error::Divergence { .. }
        | Error::NoRoot(_)
        | Error::Eigen(_) => EXIT_NONCONVERGENCE,
        Error::OracleDisagreement(_) => EXIT_DISAGREEMENT,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
