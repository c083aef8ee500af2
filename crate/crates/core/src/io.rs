//! CSV and JSON formats: observed series, simulated trajectories, fit and
//! selection reports, Monte Carlo tables and config files.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alasso::{Penalty, SelectionResult};
use crate::error::{Error, Result};
use crate::models::{builtin, ParamVector};
use crate::montecarlo::{Density, McConfig, McSummary};
use crate::qmle::FitResult;
use crate::simulate::{Scheme, SimConfig, Trajectory};

pub const SCHEMA_VERSION: &str = "1";
/// Environment variable overriding the Monte Carlo worker count.
pub const WORKERS_ENV: &str = "SDE_LASSO_WORKERS";
/// Relative tolerance on the time spacing of two-column input.
pub const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// One value per row; `delta` must be given.
    SingleColumn,
    /// `t,x` rows; `delta` is checked against the spacing, or inferred.
    TwoColumn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub path: PathBuf,
    pub format: Option<DataFormat>,
    pub delta: Option<f64>,
    /// `None` detects a header from the first row.
    pub header: Option<bool>,
}

impl DataSource {
    pub fn new(path: impl Into<PathBuf>, delta: Option<f64>) -> Self {
        Self {
            path: path.into(),
            format: None,
            delta,
            header: None,
        }
    }
}

fn parse_field(s: &str, line: u64) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{}` is not a number", s.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value `{}`", s.trim()),
        });
    }
    Ok(v)
}

/// Reads a series from CSV text.
pub fn read_series<R: Read>(
    reader: R,
    format: Option<DataFormat>,
    delta: Option<f64>,
    header: Option<bool>,
) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    let skip_header = match header {
        Some(h) => h,
        None => rows
            .first()
            .is_some_and(|(_, f)| f.iter().any(|s| s.parse::<f64>().is_err())),
    };
    if skip_header && !rows.is_empty() {
        rows.remove(0);
    }
    let width = rows.first().map_or(1, |(_, f)| f.len());
    let format = format.unwrap_or(if width >= 2 {
        DataFormat::TwoColumn
    } else {
        DataFormat::SingleColumn
    });
    let want = match format {
        DataFormat::SingleColumn => 1,
        DataFormat::TwoColumn => 2,
    };
    let mut t = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        if fields.len() != want {
            return Err(Error::Parse {
                line: *line,
                msg: format!("expected {want} field(s), found {}", fields.len()),
            });
        }
        match format {
            DataFormat::SingleColumn => x.push(parse_field(&fields[0], *line)?),
            DataFormat::TwoColumn => {
                t.push(parse_field(&fields[0], *line)?);
                x.push(parse_field(&fields[1], *line)?);
            }
        }
    }
    if x.len() < 3 {
        return Err(Error::Precondition(format!(
            "a series needs at least 3 observations, found {}",
            x.len()
        )));
    }
    match format {
        DataFormat::SingleColumn => {
            let delta = delta.ok_or_else(|| {
                Error::Argument("single-column data needs an explicit delta".into())
            })?;
            Trajectory::new(x, delta)
        }
        DataFormat::TwoColumn => {
            let n = t.len() - 1;
            let delta = delta.unwrap_or((t[n] - t[0]) / n as f64);
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::Argument(format!("delta must be positive, got {delta}")));
            }
            for (i, w) in t.windows(2).enumerate() {
                let spacing = w[1] - w[0];
                if (spacing - delta).abs() > GRID_TOL * delta {
                    return Err(Error::Grid {
                        row: rows[i + 1].0,
                        spacing,
                        delta,
                    });
                }
            }
            Trajectory::with_start(x, delta, t[0])
        }
    }
}

pub fn load_csv(src: &DataSource) -> Result<Trajectory> {
    let file = std::fs::File::open(&src.path)?;
    read_series(file, src.format, src.delta, src.header)
}

/// `t,x` rows with 17 significant digits, so values read back bit-exactly.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,x")?;
    for (i, x) in traj.values().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", traj.time(i), x)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_trajectory(std::io::BufWriter::new(std::fs::File::create(path)?), traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: String,
    pub model: String,
    pub p: usize,
    pub theta_tilde: Vec<f64>,
    pub std_err: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restarts_used: usize,
    pub ridge: Option<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub n: usize,
    pub delta: f64,
}

impl From<&FitResult> for FitReport {
    fn from(f: &FitResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            model: f.model.clone(),
            p: f.theta_tilde.p(),
            theta_tilde: f.theta_tilde.as_slice().to_vec(),
            std_err: f.std_err.clone(),
            value: f.value,
            converged: f.converged,
            iterations: f.iterations,
            restarts_used: f.restarts_used,
            ridge: f.ridge,
            hessian: f
                .hess_pd
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            n: f.n,
            delta: f.delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: String,
    pub model: String,
    pub p: usize,
    pub theta_hat: Vec<f64>,
    pub zero_set: Vec<usize>,
    pub active_std_err: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub penalty: Penalty,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_max_excess: f64,
    pub kkt_satisfied: bool,
    pub reduced_model: Option<String>,
}

impl SelectionReport {
    pub fn new(model: &str, s: &SelectionResult) -> Self {
        let w = &s.weights;
        Self {
            schema_version: SCHEMA_VERSION.into(),
            model: model.to_string(),
            p: s.theta_hat.p(),
            theta_hat: s.theta_hat.as_slice().to_vec(),
            zero_set: s.zero_set.clone(),
            active_std_err: s.active_std_err.clone(),
            lambda: w.lambda.clone(),
            gamma: w.gamma.clone(),
            penalty: Penalty {
                lambda0: w.lambda0,
                gamma0: w.gamma0,
                delta1: w.delta1,
                delta2: w.delta2,
            },
            objective: s.objective,
            sweeps: s.sweeps,
            converged: s.converged,
            kkt_max_excess: s.kkt.max_excess,
            kkt_satisfied: s.kkt.satisfied,
            reduced_model: s.reduced_model.clone(),
        }
    }

    pub fn theta_hat(&self) -> Result<ParamVector> {
        ParamVector::from_vec(self.theta_hat.clone(), self.p)
    }
}

/// Output of `select`: the unpenalized fit and the selection built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub fit: FitReport,
    pub selection: SelectionReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads a selection report, either bare or inside a [`SelectReport`].
pub fn read_selection(path: &Path) -> Result<SelectionReport> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = value.get("selection").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner)?)
}

/// `rep,theta_1,...,theta_d,converged`.
pub fn write_estimates<W: Write>(w: W, summary: &McSummary) -> Result<()> {
    let d = summary.params.len();
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["rep".to_string()];
    head.extend((1..=d).map(|j| format!("theta_{j}")));
    head.push("converged".into());
    out.write_record(&head)?;
    for row in &summary.rows {
        let mut rec = vec![row.rep.to_string()];
        rec.extend(row.theta_hat.iter().map(|v| format!("{v:.16e}")));
        rec.push(row.converged.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `param,grid,density` for every parameter with a smooth density.
pub fn write_kde<W: Write>(w: W, summary: &McSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "grid", "density"])?;
    for (j, p) in summary.params.iter().enumerate() {
        if let Density::Smooth(k) = &p.density {
            for (g, d) in k.grid.iter().zip(&k.density) {
                out.write_record([format!("theta_{}", j + 1), format!("{g:.10e}"), format!("{d:.10e}")])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// `param,mean,median,std,fraction_zero,failures`.
pub fn write_summary<W: Write>(w: W, summary: &McSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "mean", "median", "std", "fraction_zero", "failures"])?;
    for (j, p) in summary.params.iter().enumerate() {
        out.write_record([
            format!("theta_{}", j + 1),
            p.mean.to_string(),
            p.median.to_string(),
            p.std.to_string(),
            p.fraction_zero.to_string(),
            summary.failure_count().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// A parsed `mc` config file: the run itself plus output locations.
#[derive(Debug, Clone, PartialEq)]
pub struct McFile {
    pub config: McConfig,
    pub estimates: Option<PathBuf>,
    pub kde: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn parse_list(value: &str, line: u64) -> Result<Vec<f64>> {
    value.split(',').map(|s| parse_field(s, line)).collect()
}

fn parse_num<T: std::str::FromStr>(value: &str, line: u64, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value `{value}` for `{key}`"),
    })
}

/// Parses flat `key = value` lines; `#` starts a comment.
///
/// Keys: `model`, `truth` (comma list), `n`, `delta`, `refine`, `x0`,
/// `scheme`, `reps`, `lambda0`, `gamma0`, `delta1`, `delta2`, `master_seed`,
/// `workers`, `estimates`, `kde`, `summary`. `model`, `truth`, `n`, `delta`
/// and `reps` are required; `x0` defaults to the model's own choice.
pub fn parse_mc_config(text: &str) -> Result<McFile> {
    let mut kv: Vec<(u64, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `key = value`, found `{content}`"),
        })?;
        kv.push((line, k.trim().to_string(), v.trim().to_string()));
    }
    let get = |key: &str| kv.iter().rev().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
    let need = |key: &str| {
        get(key).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing required key `{key}`"),
        })
    };
    const KNOWN: &[&str] = &[
        "model", "truth", "n", "delta", "refine", "x0", "scheme", "reps", "lambda0", "gamma0",
        "delta1", "delta2", "master_seed", "workers", "estimates", "kde", "summary",
    ];
    if let Some((line, k, _)) = kv.iter().find(|(_, k, _)| !KNOWN.contains(&k.as_str())) {
        return Err(Error::Parse {
            line: *line,
            msg: format!("unknown key `{k}`"),
        });
    }

    let (_, model_name) = need("model")?;
    let model = builtin(model_name)?;
    let (line, truth) = need("truth")?;
    let truth = parse_list(truth, line)?;
    let theta = ParamVector::for_model(model.as_ref(), &truth)?;
    let (line, n) = need("n")?;
    let n: usize = parse_num(n, line, "n")?;
    let (line, delta) = need("delta")?;
    let delta: f64 = parse_num(delta, line, "delta")?;
    let (line, reps) = need("reps")?;
    let reps: usize = parse_num(reps, line, "reps")?;
    let x0 = match get("x0") {
        Some((line, v)) => parse_num(v, line, "x0")?,
        None => model.default_x0(&theta),
    };
    let mut sim = SimConfig::new(n, delta, x0, 0);
    if let Some((line, v)) = get("refine") {
        sim.refine = parse_num(v, line, "refine")?;
    }
    if let Some((line, v)) = get("scheme") {
        sim.scheme = v.parse::<Scheme>().map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    let master_seed = match get("master_seed") {
        Some((line, v)) => parse_num(v, line, "master_seed")?,
        None => 0,
    };
    let mut config = McConfig::new(model_name, &truth, sim, reps, master_seed);
    let mut penalty = Penalty::default();
    for (key, slot) in [
        ("lambda0", &mut penalty.lambda0),
        ("gamma0", &mut penalty.gamma0),
        ("delta1", &mut penalty.delta1),
        ("delta2", &mut penalty.delta2),
    ] {
        if let Some((line, v)) = get(key) {
            *slot = parse_num(v, line, key)?;
        }
    }
    config.penalty = penalty;
    if let Some((line, v)) = get("workers") {
        config.workers = parse_num(v, line, "workers")?;
    }
    let path = |key: &str| get(key).map(|(_, v)| PathBuf::from(v));
    Ok(McFile {
        estimates: path("estimates"),
        kde: path("kde"),
        summary: path("summary"),
        config,
    })
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_override() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Argument(format!("{WORKERS_ENV} must be a non-negative integer, got `{v}`"))
        }),
        Err(_) => Ok(None),
    }
}
