use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use greenhouse_core::ControlInput;
use harness::config::ExperimentConfig;
use harness::pipeline::{self, Policy};
use harness::{Error, Result};
use mpc::{MpcConfig, OraclePredictor};
use seqnet::CellKind;

/// Greenhouse climate-control lab.
#[derive(Parser)]
#[command(name = "ghlab", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// 2-day episodes, 2 epochs and small solver budgets.
    #[arg(long, global = true)]
    smoke: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training trajectories with MPC over the physical model.
    GenerateData,
    /// Train the surrogate grid on the generated data.
    Train,
    /// Closed-loop evaluation of the trained surrogates and baselines.
    Evaluate,
    /// One closed-loop run on the evaluation scenario.
    Simulate(SimulateArgs),
    /// Rebuild the report and plots from the evaluation logs.
    Report,
    /// Generate data, train and evaluate.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Zero,
    Constant,
    OracleMpc,
    SurrogateMpc,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Input for the constant policy: CO₂, ventilation, heating.
    #[arg(long, value_delimiter = ',')]
    input: Option<Vec<f64>>,
    /// Cell kind of the surrogate; its best trained checkpoint is used.
    #[arg(long, default_value = "gru")]
    kind: CellKind,
    /// Surrogate checkpoint, instead of the best trained one.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Window length of an explicit checkpoint.
    #[arg(long, default_value_t = 24)]
    window: usize,
    /// Prediction horizon of the controller.
    #[arg(long, default_value_t = 24)]
    horizon: usize,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if c.smoke {
        cfg = cfg.smoke();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(cfg: &ExperimentConfig, a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let mpc = MpcConfig { horizon: a.horizon, ..cfg.evaluation.mpc.clone() };
    match a.policy {
        PolicyArg::Zero => pipeline::cmd_simulate(cfg, &Policy::Zero, "zero"),
        PolicyArg::Constant => {
            let v = match a.input.as_deref() {
                Some(v) if v.len() == 3 => v,
                _ => return Err(Error::Config("--policy constant needs --input u1,u2,u3".into())),
            };
            let u = ControlInput::new(v[0], v[1], v[2]);
            if !u.within_bounds() {
                return Err(Error::Config(format!("constant input {v:?} is outside the actuator limits")));
            }
            pipeline::cmd_simulate(cfg, &Policy::Constant(u), "constant")
        }
        PolicyArg::OracleMpc => {
            let oracle = OraclePredictor::default();
            pipeline::cmd_simulate(cfg, &Policy::Mpc { predictor: &oracle, mpc }, &format!("ORACLE{}", a.horizon))
        }
        PolicyArg::SurrogateMpc => {
            let (path, window) = match &a.checkpoint {
                Some(p) => (p.clone(), a.window),
                None => pipeline::best_checkpoint(cfg, a.kind)?,
            };
            let sur = pipeline::load_surrogate(&path, window)?;
            let label = pipeline::surrogate_label(sur.weights.kind(), a.horizon);
            pipeline::cmd_simulate(cfg, &Policy::Mpc { predictor: &sur, mpc }, &label)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    match &cli.command {
        Command::GenerateData => {
            let paths = pipeline::cmd_generate_data(&cfg)?;
            println!("wrote {} files under {}", paths.len(), cfg.out_dir.display());
        }
        Command::Train => {
            let results = pipeline::cmd_train(&cfg)?;
            for r in &results {
                println!("{}{} batch {}: test RMSE {:.4}", r.kind, r.window, r.batch_size, r.test_rmse);
            }
        }
        Command::Evaluate => {
            let runs = pipeline::cmd_evaluate(&cfg)?;
            for r in &runs {
                println!("{}: EPI {:.4}, dry matter {:.2} g/m², solve time {:.1} s", r.label, r.stats.epi, r.stats.dry_matter, r.stats.total_time_s);
            }
        }
        Command::Simulate(a) => {
            let paths = simulate(&cfg, a)?;
            println!("wrote {}", paths[0].display());
        }
        Command::Report => {
            let paths = pipeline::cmd_report(&cfg)?;
            println!("wrote {}", paths[0].display());
        }
        Command::All => {
            pipeline::cmd_generate_data(&cfg)?;
            pipeline::cmd_train(&cfg)?;
            pipeline::cmd_evaluate(&cfg)?;
            println!("wrote {}", pipeline::Layout::new(&cfg.out_dir).report().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
