use clap::{Args, Parser, Subcommand, ValueEnum};
use osmp_cli::{
    analyze, parse_list, read_config, run_sweep, simulate, validate, write_analyze, write_simulate,
    write_validate, CliError, Grid, SimSettings, SweepSpec,
};
use osmp_core::sim::{OnOff, PredictorKind, TrafficKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "osmp",
    version,
    about = "Sleep-mode EPON ONU: Markov analysis and simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical efficiency per load.
    Analyze(Common),
    /// Simulated metrics per (seed, load), with per-load means.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Compare simulation with the analytical model; exit 1 on any gap above tolerance.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimFlags,
        #[arg(long, default_value_t = 0.03)]
        tolerance: f64,
    },
    /// Run a sweep document; writes one CSV per scenario plus the design studies.
    Sweep {
        /// Sweep specification (TOML).
        spec: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out.csv")]
    out: PathBuf,
    /// Comma-separated loads, e.g. 0.1,0.5.
    #[arg(long)]
    loads: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Simulated seconds per run.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Predictor {
    Oracle,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum Traffic {
    Poisson,
    Selfsimilar,
}

#[derive(Args)]
struct SimFlags {
    #[arg(long, value_enum, default_value = "oracle")]
    predictor: Predictor,
    #[arg(long, value_enum, default_value = "poisson")]
    traffic: Traffic,
    #[arg(long, default_value_t = 0.8)]
    hurst: f64,
    /// Same sleep logic without dozing in active periods.
    #[arg(long)]
    baseline_no_mda: bool,
}

impl Common {
    fn grid(&self) -> Result<Grid, CliError> {
        let d = Grid::default();
        let g = Grid {
            loads: self
                .loads
                .as_deref()
                .map(parse_list)
                .transpose()?
                .unwrap_or(d.loads),
            seeds: self
                .seeds
                .as_deref()
                .map(parse_list)
                .transpose()?
                .unwrap_or(d.seeds),
            duration: self.duration.unwrap_or(d.duration),
        };
        g.check()?;
        Ok(g)
    }
}

impl SimFlags {
    fn settings(&self) -> Result<SimSettings, CliError> {
        if !(self.hurst > 0.5 && self.hurst < 1.0) {
            return Err(CliError::Usage(format!(
                "--hurst must lie in (0.5, 1), got {}",
                self.hurst
            )));
        }
        Ok(SimSettings {
            predictor: match self.predictor {
                Predictor::Oracle => PredictorKind::Oracle,
                Predictor::Mean => PredictorKind::Mean,
            },
            traffic: match self.traffic {
                Traffic::Poisson => TrafficKind::Poisson,
                Traffic::Selfsimilar => TrafficKind::SelfSimilar(OnOff::new(self.hurst)),
            },
            mda: !self.baseline_no_mda,
        })
    }
}

/// `Ok(true)` on success, `Ok(false)` when validation found a failing point.
fn execute(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Analyze(c) => {
            let cfg = read_config(c.config.as_deref())?;
            let rows = analyze(&cfg, &c.grid()?.loads)?;
            write_analyze(&c.out, &rows)?;
            Ok(true)
        }
        Command::Simulate { common, sim } => {
            let cfg = read_config(common.config.as_deref())?;
            let rows = simulate(&cfg, &common.grid()?, &sim.settings()?)?;
            write_simulate(&common.out, &rows)?;
            Ok(true)
        }
        Command::Validate {
            common,
            sim,
            tolerance,
        } => {
            if !(tolerance >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--tolerance must be non-negative, got {tolerance}"
                )));
            }
            let cfg = read_config(common.config.as_deref())?;
            let rows = validate(&cfg, &common.grid()?, &sim.settings()?, tolerance)?;
            write_validate(&common.out, &rows)?;
            for r in rows.iter().filter(|r| !r.pass) {
                eprintln!(
                    "load {}: |eta_sim - eta_dtmc| = {:.4} exceeds {tolerance}",
                    r.load, r.gap
                );
            }
            Ok(rows.iter().all(|r| r.pass))
        }
        Command::Sweep { spec, config, out } => {
            let cfg = read_config(config.as_deref())?;
            let text = std::fs::read_to_string(&spec).map_err(|e| CliError::io(&spec, e))?;
            let spec = SweepSpec::parse(&text)?;
            for p in run_sweep(&cfg, &spec, &out)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
