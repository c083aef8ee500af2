//! Path simulation: Euler–Maruyama and a weak second-order Milstein scheme,
//! run on a fine grid and subsampled to the observation step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DiffusionModel, ParamVector};

/// Fresh draws tried for a step that leaves the admissible region.
pub const MAX_STEP_RETRIES: usize = 5;

/// Equispaced observations `X_{t_0}, ..., X_{t_n}` with `t_i = t0 + i * delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    x: Vec<f64>,
    delta: f64,
    t0: f64,
}

impl Trajectory {
    pub fn new(x: Vec<f64>, delta: f64) -> Result<Self> {
        Self::with_start(x, delta, 0.0)
    }

    pub fn with_start(x: Vec<f64>, delta: f64, t0: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Precondition(format!(
                "a trajectory needs at least 2 points, got {}",
                x.len()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Argument(format!("delta must be positive, got {delta}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("trajectory entry {i}")));
        }
        Ok(Self { x, delta, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of increments (one less than the number of points).
    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.delta
    }

    pub fn last(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Mean of the observed levels.
    pub fn mean_level(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Milstein2,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "milstein2" | "milstein" => Ok(Scheme::Milstein2),
            other => Err(Error::Argument(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of observation intervals; the path has `n + 1` points.
    pub n: usize,
    pub delta: f64,
    /// Fine steps per observation interval.
    pub refine: usize,
    pub x0: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(n: usize, delta: f64, x0: f64, seed: u64) -> Self {
        Self {
            n,
            delta,
            refine: 10,
            x0,
            seed,
            scheme: Scheme::Milstein2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Argument("n must be at least 1".into()));
        }
        if self.refine < 1 {
            return Err(Error::Argument("refine must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Argument(format!("delta must be positive, got {}", self.delta)));
        }
        if !self.x0.is_finite() {
            return Err(Error::Argument("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn fine_step(&self) -> f64 {
        self.delta / self.refine as f64
    }
}

/// Deterministic normal stream for path `path_id` of a run seeded by `seed`.
pub fn normal_stream(seed: u64, path_id: u64) -> impl FnMut() -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    move || rng.sample(StandardNormal)
}

fn check_state(model: &dyn DiffusionModel, theta: &ParamVector, x: f64) -> Result<()> {
    if model.admissible(theta, x) {
        Ok(())
    } else {
        Err(Error::Domain {
            x,
            term: format!("{} is not admissible here", model.name()),
        })
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// One Euler–Maruyama step `x + b dt + sigma sqrt(dt) z`.
pub fn step_euler(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    x: f64,
    dt: f64,
    z: f64,
) -> Result<f64> {
    check_state(model, theta, x)?;
    let b = model.drift(theta.alpha(), x);
    let s = model.diffusion(theta.beta(), x);
    finite(x + b * dt + s * dt.sqrt() * z, "euler step")
}

/// One step of the weak second-order Milstein scheme:
///
/// ```text
/// x + (b - s s_x / 2) dt + s z sqrt(dt) + s s_x dt z^2 / 2
///   + dt^{3/2} (b s_x / 2 + b_x s / 2 + s^2 s_xx / 4) z
///   + dt^2 (b b_x / 2 + b_xx s^2 / 4)
/// ```
pub fn step_milstein2(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    x: f64,
    dt: f64,
    z: f64,
) -> Result<f64> {
    check_state(model, theta, x)?;
    let (alpha, beta) = (theta.alpha(), theta.beta());
    let b = model.drift(alpha, x);
    let b_x = model.drift_x(alpha, x);
    let b_xx = model.drift_xx(alpha, x);
    let s = model.diffusion(beta, x);
    let s_x = model.diffusion_x(beta, x);
    let s_xx = model.diffusion_xx(beta, x);

    let sq = dt.sqrt();
    let next = x
        + (b - 0.5 * s * s_x) * dt
        + s * z * sq
        + 0.5 * s * s_x * dt * z * z
        + dt * sq * (0.5 * b * s_x + 0.5 * b_x * s + 0.25 * s * s * s_xx) * z
        + dt * dt * (0.5 * b * b_x + 0.25 * b_xx * s * s);
    finite(next, "milstein2 step")
}

fn step(
    scheme: Scheme,
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    x: f64,
    dt: f64,
    z: f64,
) -> Result<f64> {
    match scheme {
        Scheme::Euler => step_euler(model, theta, x, dt, z),
        Scheme::Milstein2 => step_milstein2(model, theta, x, dt, z),
    }
}

/// Simulates path 0 of `cfg.seed`.
pub fn simulate(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    simulate_path(model, theta, cfg, 0)
}

/// Simulates `n * refine` fine steps of size `delta / refine` on substream
/// `path_id` and keeps every `refine`-th point.
///
/// A fine step that lands outside the admissible region is redrawn up to
/// [`MAX_STEP_RETRIES`] times before the path is abandoned.
pub fn simulate_path(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    cfg: &SimConfig,
    path_id: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_state(model, theta, cfg.x0)?;
    let dt = cfg.fine_step();
    let mut draw = normal_stream(cfg.seed, path_id);
    let mut out = Vec::with_capacity(cfg.n + 1);
    out.push(cfg.x0);
    let mut x = cfg.x0;
    for k in 0..cfg.n * cfg.refine {
        let mut next = None;
        for _ in 0..=MAX_STEP_RETRIES {
            match step(cfg.scheme, model, theta, x, dt, draw()) {
                Ok(v) if model.admissible(theta, v) => {
                    next = Some(v);
                    break;
                }
                Ok(_) | Err(Error::NonFinite(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        x = next.ok_or(Error::PathExit { step: k, x })?;
        if (k + 1) % cfg.refine == 0 {
            out.push(x);
        }
    }
    Trajectory::new(out, cfg.delta)
}
