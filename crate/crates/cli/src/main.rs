use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fk_ratchet::dynamics::DynamicsMode;
use fk_ratchet::harness::run::error_status;
use fk_ratchet::harness::{execute, load_model, run_config, Command, ExitStatus, RunSpec};
use fk_ratchet::numtheory::RhoInput;
use fk_ratchet::potentials::{ModelSpec, PulseSpec};
use fk_ratchet::Result;

/// Overdamped pulsating Frenkel-Kontorova chains: simulation, transport
/// speed and its lower bounds.
#[derive(Parser)]
#[command(name = "fk-ratchet", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a few pulse periods and write per-sample statistics.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Mean spacing: `p/q`, an integer, `golden`, `sqrt2` or a decimal.
        #[arg(long)]
        rho: RhoInput,
        #[arg(long, default_value_t = 10)]
        periods: u64,
        /// Interior sample times per half period.
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Measure the transport speed for each (rho, tau).
    Speed {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        rho: Vec<RhoInput>,
        #[arg(long, default_value_t = 50)]
        transient: u64,
        #[arg(long, default_value_t = 2048)]
        max_periods: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Speed and bound over a (rho, tau) grid, as CSV.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        rho: Vec<RhoInput>,
        /// Worker threads (0: one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print the lower bounds and the number-theoretic inputs.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        rho: Vec<RhoInput>,
        #[arg(long, default_value_t = 4096)]
        grid_n: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Continued-fraction expansion and convergents.
    Cfrac {
        rho: RhoInput,
        #[arg(long, default_value_t = 40)]
        max_terms: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the measure-level inequalities along one pulse cycle.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        rho: Vec<RhoInput>,
        #[arg(long, default_value_t = 50)]
        transient: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a config file.
    Run { config: PathBuf },
}

#[derive(Args)]
struct ModelArgs {
    /// Model file with `[model]`/`[pulse]` sections; defaults to the built-in ratchet.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Half period(s); overrides the model's `pulse.tau`.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// `pulsating_potential` or `pulsating_interaction`.
    #[arg(long, default_value = "pulsating_potential")]
    mode: DynamicsMode,
    #[arg(long)]
    dt_max: Option<f64>,
    /// Denominator cap for irrational targets.
    #[arg(long, default_value_t = 233)]
    q_max: i64,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write a JSON summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn base_spec(command: Command, m: &ModelArgs) -> Result<RunSpec> {
    let mut model = match &m.model {
        Some(path) => load_model(path)?,
        None => ModelSpec::default_ratchet(100.0),
    };
    let tau = match m.tau[..] {
        [t] => t,
        _ => model.pulse.tau,
    };
    let kappa = m.kappa.unwrap_or(model.pulse.kappa);
    model = ModelSpec::new(model.interaction, model.site, PulseSpec::new(tau, kappa)?)?;
    let mut spec = RunSpec::new(command, model);
    spec.mode = m.mode;
    spec.q_max = m.q_max;
    spec.tau_list = m.tau.clone();
    if let Some(dt) = m.dt_max {
        spec.integrator.dt_max = dt;
    }
    spec.integrator.validate()?;
    Ok(spec)
}

fn with_output(mut spec: RunSpec, out: OutputArgs) -> RunSpec {
    spec.output = out.output;
    spec.summary = out.summary;
    spec
}

fn build(cmd: Cmd) -> Result<RunSpec> {
    Ok(match cmd {
        Cmd::Simulate {
            model,
            rho,
            periods,
            samples,
            out,
            checkpoint,
            resume,
        } => {
            let mut spec = base_spec(Command::Simulate, &model)?;
            spec.rho_list = vec![rho];
            spec.periods = periods;
            spec.samples_per_phase = samples;
            spec.checkpoint = checkpoint;
            spec.resume = resume;
            with_output(spec, out)
        }
        Cmd::Speed {
            model,
            rho,
            transient,
            max_periods,
            out,
        } => {
            let mut spec = base_spec(Command::Speed, &model)?;
            spec.rho_list = rho;
            spec.speed.transient_periods = transient;
            spec.speed.max_periods = max_periods;
            with_output(spec, out)
        }
        Cmd::Sweep {
            model,
            rho,
            workers,
            out,
        } => {
            let mut spec = base_spec(Command::Sweep, &model)?;
            spec.rho_list = rho;
            spec.workers = workers;
            with_output(spec, out)
        }
        Cmd::Bound {
            model,
            rho,
            grid_n,
            out,
        } => {
            let mut spec = base_spec(Command::Bound, &model)?;
            spec.rho_list = rho;
            spec.grid_n = grid_n;
            with_output(spec, out)
        }
        Cmd::Cfrac { rho, max_terms, out } => {
            let mut spec = RunSpec::new(Command::Cfrac, ModelSpec::default_ratchet(100.0));
            spec.rho_list = vec![rho];
            spec.max_terms = max_terms;
            with_output(spec, out)
        }
        Cmd::Verify {
            model,
            rho,
            transient,
            out,
        } => {
            let mut spec = base_spec(Command::Verify, &model)?;
            spec.rho_list = rho;
            spec.speed.transient_periods = transient;
            with_output(spec, out)
        }
        Cmd::Run { .. } => unreachable!("handled before building a spec"),
    })
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit(ExitStatus::ConfigError)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Cmd::Run { config } = &cli.command {
        return exit(run_config(config));
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let status = match build(cli.command).and_then(|spec| execute(&spec, &mut out)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    };
    let _ = out.flush();
    exit(status)
}
