use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sde_lasso::alasso::{select, Penalty, SolverOptions};
use sde_lasso::io::{
    load_csv, parse_mc_config, read_selection, save_trajectory, workers_override, write_estimates,
    write_json, write_kde, write_summary, write_trajectory, DataSource, FitReport, SelectReport,
    SelectionReport,
};
use sde_lasso::models::{builtin, ckls_reduce, DiffusionModel, ParamVector};
use sde_lasso::montecarlo::run_mc;
use sde_lasso::qmle::{default_init, fit, FitOptions, FitResult};
use sde_lasso::simulate::{simulate, Scheme, SimConfig};
use sde_lasso::Error;

/// Adaptive-LASSO estimation and selection for scalar diffusions.
#[derive(Parser)]
#[command(name = "sde-lasso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and write it as `t,x` CSV.
    Simulate {
        #[arg(long)]
        model: String,
        /// Comma-separated parameters, drift first.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        refine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "milstein2")]
        scheme: Scheme,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasi-likelihood fit; writes a JSON report.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit, then adaptive-LASSO selection; writes both as JSON.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma0: f64,
        #[arg(long, default_value_t = 1.0)]
        delta1: f64,
        #[arg(long, default_value_t = 1.0)]
        delta2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo run described by a `key = value` config file.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Name the CKLS sub-model selected in a `select` report.
    Reduce {
        #[arg(long)]
        result: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    /// Observation step; required for single-column files.
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated starting point; moment-based if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => Failure::Usage(e.to_string()),
            e if e.is_data_error() => Failure::Data(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    match out {
        Some(p) => write_json(p, value)?,
        None => println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?),
    }
    Ok(())
}

fn run_fit(args: &DataArgs) -> Result<(std::sync::Arc<dyn DiffusionModel>, FitResult), Failure> {
    let model = builtin(&args.model)?;
    let data = load_csv(&DataSource::new(&args.data, args.delta))?;
    let init = match &args.init {
        Some(v) => ParamVector::for_model(model.as_ref(), v)?,
        None => default_init(model.as_ref(), &data)?,
    };
    let opts = FitOptions {
        seed: args.seed,
        ..FitOptions::default()
    };
    let f = fit(model.as_ref(), &data, &init, &opts)?;
    Ok((model, f))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate {
            model,
            theta,
            n,
            delta,
            refine,
            seed,
            scheme,
            x0,
            out,
        } => {
            let model = builtin(&model)?;
            let theta = ParamVector::for_model(model.as_ref(), &theta)?;
            let x0 = x0.unwrap_or_else(|| model.default_x0(&theta));
            let cfg = SimConfig {
                refine,
                scheme,
                ..SimConfig::new(n, delta, x0, seed)
            };
            let path = simulate(model.as_ref(), &theta, &cfg)?;
            match out {
                Some(p) => save_trajectory(&p, &path)?,
                None => write_trajectory(std::io::stdout().lock(), &path)?,
            }
        }
        Command::Fit { data, out } => {
            let (_, f) = run_fit(&data)?;
            emit_json(out.as_deref(), &FitReport::from(&f))?;
            if !f.converged {
                return Err(Failure::Numerical("optimizer did not converge".into()));
            }
        }
        Command::Select {
            data,
            lambda0,
            gamma0,
            delta1,
            delta2,
            out,
        } => {
            let (model, f) = run_fit(&data)?;
            if !f.converged {
                emit_json(out.as_deref(), &FitReport::from(&f))?;
                return Err(Failure::Numerical(
                    "optimizer did not converge; selection skipped".into(),
                ));
            }
            let penalty = Penalty {
                lambda0,
                gamma0,
                delta1,
                delta2,
            };
            let s = select(model.as_ref(), &f, &penalty, &SolverOptions::default())?;
            let report = SelectReport {
                fit: FitReport::from(&f),
                selection: SelectionReport::new(model.name(), &s),
            };
            emit_json(out.as_deref(), &report)?;
            if !s.converged {
                return Err(Failure::Numerical("penalized solver hit its sweep limit".into()));
            }
        }
        Command::Mc { config, workers } => {
            let text = std::fs::read_to_string(&config).map_err(Error::from)?;
            let mut file = parse_mc_config(&text)?;
            if let Some(w) = workers_override()? {
                file.config.workers = w;
            }
            if let Some(w) = workers {
                file.config.workers = w;
            }
            let summary = run_mc(&file.config)?;
            let create = |p: &Path| std::fs::File::create(p).map_err(Error::from);
            match &file.estimates {
                Some(p) => write_estimates(create(p)?, &summary)?,
                None => write_estimates(std::io::stdout().lock(), &summary)?,
            }
            if let Some(p) = &file.kde {
                write_kde(create(p)?, &summary)?;
            }
            match &file.summary {
                Some(p) => write_summary(create(p)?, &summary)?,
                None => write_summary(std::io::stderr().lock(), &summary)?,
            }
        }
        Command::Reduce { result } => {
            let report = read_selection(&result)?;
            if report.model != "ckls" {
                return Err(Error::InvalidReduction(format!(
                    "reduction applies to ckls fits, not `{}`",
                    report.model
                ))
                .into());
            }
            let variant = ckls_reduce(&report.theta_hat()?, &report.zero_set)?;
            println!("{}", variant.label());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
