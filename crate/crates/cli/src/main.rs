use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2pp::commands::{self, CalibratePArgs, CalibrateQArgs, ProjectArgs, RpArgs, ScenarioFormat, SimulateArgs};
use g2pp::config::Config;
use g2pp::{CliError, Context};
use g2pp_core::measure::PremiumKind;
use g2pp_core::Measure;

/// Two-factor Gaussian short-rate model under risk-neutral and real-world
/// measures.
#[derive(Parser, Debug)]
#[command(name = "g2pp", version)]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Simulation seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Horizon of the short forecasts, in months
    #[arg(long = "tau-months", global = true)]
    tau_months: Option<u32>,
    /// Premium variant
    #[arg(long, global = true, value_enum)]
    kind: Option<Kind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Constant,
    Step,
    Linear,
}

impl From<Kind> for PremiumKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Constant => PremiumKind::Constant,
            Kind::Step => PremiumKind::Step,
            Kind::Linear => PremiumKind::Linear,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    Q,
    P,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Bin,
    Both,
}

#[derive(Args, Debug)]
struct Grid {
    /// Last horizon in years [default: 40]
    #[arg(long)]
    horizon: Option<f64>,
    /// Grid step in years [default: 1/12]
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the risk-neutral parameters to swaption quotes
    CalibrateQ {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        swaptions: Option<PathBuf>,
        /// Use these parameters instead of calibrating
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        extrapolate: bool,
    },
    /// Fit premium functions to rate forecasts
    CalibrateP {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        forecasts: PathBuf,
        #[arg(long)]
        extrapolate: bool,
    },
    /// Expected rates under both measures over a horizon grid
    Project {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        premium: Option<PathBuf>,
        /// Comma-separated tenors in years [default: 0.25,10,20]
        #[arg(long, value_delimiter = ',')]
        tenors: Option<Vec<f64>>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        extrapolate: bool,
    },
    /// Absolute risk premium of each variant over time
    RpTrajectory {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        premium: PathBuf,
        #[command(flatten)]
        grid: Grid,
    },
    /// Simulate factor paths
    Simulate {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        premium: Option<PathBuf>,
        #[arg(long)]
        paths: Option<usize>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum)]
        measure: Option<MeasureArg>,
        #[arg(long)]
        antithetic: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        extrapolate: bool,
    },
    /// Replay a manifest of calibration snapshots
    Backtest {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Mean of every numeric column of a rate history
    Average {
        #[arg(long)]
        history: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let ctx = Context {
        config,
        seed: cli.seed,
        out: cli.out,
        tau_months: cli.tau_months,
        kind: cli.kind.map(Into::into),
    };
    match cli.command {
        Command::CalibrateQ {
            curve,
            swaptions,
            params,
            extrapolate,
        } => {
            let o = commands::cmd_calibrate_q(
                &ctx,
                &CalibrateQArgs {
                    curve,
                    swaptions,
                    params,
                    extrapolate,
                },
            )?;
            eprintln!("objective {:?} after {} iterations", o.objective, o.iterations);
        }
        Command::CalibrateP {
            curve,
            params,
            forecasts,
            extrapolate,
        } => {
            commands::cmd_calibrate_p(
                &ctx,
                &CalibratePArgs {
                    curve,
                    params,
                    forecasts,
                    extrapolate,
                },
            )?;
        }
        Command::Project {
            curve,
            params,
            premium,
            tenors,
            grid,
            extrapolate,
        } => commands::cmd_project(
            &ctx,
            &ProjectArgs {
                curve,
                params,
                premium,
                tenors,
                horizon_years: grid.horizon,
                step_years: grid.step,
                extrapolate,
            },
        )?,
        Command::RpTrajectory { params, premium, grid } => commands::cmd_rp_trajectory(
            &ctx,
            &RpArgs {
                params,
                premium,
                horizon_years: grid.horizon,
                step_years: grid.step,
            },
        )?,
        Command::Simulate {
            curve,
            params,
            premium,
            paths,
            grid,
            measure,
            antithetic,
            format,
            extrapolate,
        } => {
            commands::cmd_simulate(
                &ctx,
                &SimulateArgs {
                    curve,
                    params,
                    premium,
                    n_paths: paths,
                    horizon_years: grid.horizon,
                    step_years: grid.step,
                    measure: measure.map(|m| match m {
                        MeasureArg::Q => Measure::Q,
                        MeasureArg::P => Measure::P,
                    }),
                    antithetic,
                    format: match format {
                        FormatArg::Csv => ScenarioFormat::Csv,
                        FormatArg::Bin => ScenarioFormat::Binary,
                        FormatArg::Both => ScenarioFormat::Both,
                    },
                    extrapolate,
                },
            )?;
        }
        Command::Backtest { manifest } => {
            let r = commands::cmd_backtest(&ctx, &manifest)?;
            for v in &r.summary {
                eprintln!("{}: dispersion {}", v.kind, v.dispersion());
            }
        }
        Command::Average { history } => {
            commands::cmd_average(&ctx, &history)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
