//! Unpenalized quasi-likelihood estimation: BFGS with backtracking line
//! search on the analytic contrast gradient, restarted from several
//! perturbed starting points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contrast::{
    evaluate, inverse_diag_sqrt, quasi_hess, quasi_value_grad, repair_positive_definite,
    ContrastEval,
};
use crate::error::{Error, Result};
use crate::models::{DiffusionModel, ParamVector};
use crate::simulate::Trajectory;

/// A smooth objective that may be undefined at some points.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Value and gradient, or `None` where the objective is undefined.
    fn value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;

    /// Optional curvature estimate used to seed the inverse-Hessian
    /// approximation.
    fn curvature(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Total number of starts, including the initial point.
    pub starts: usize,
    pub max_iter: usize,
    /// Converged when `max |grad| <= grad_tol * (1 + |value|)`.
    pub grad_tol: f64,
    /// Stop when the accepted step is shorter than this (sup norm).
    pub step_tol: f64,
    pub seed: u64,
    /// Optional box constraints; points outside are treated as inadmissible.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            max_iter: 500,
            grad_tol: 1e-6,
            step_tol: 1e-10,
            seed: 0x5eed,
            bounds: None,
        }
    }
}

/// Outcome of one local minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn initial_inverse(obj: &dyn Objective, x: &[f64], g: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    if let Some(h) = obj.curvature(x) {
        let (h, _) = repair_positive_definite(&h);
        if let Some(inv) = h.cholesky().map(|c| c.inverse()) {
            if inv.iter().all(|v| v.is_finite()) {
                return inv;
            }
        }
    }
    let scale = 1.0 / sup_norm(g).max(1.0);
    DMatrix::identity(d, d) * scale
}

/// BFGS from `x0`. Returns `None` when `x0` is not admissible.
///
/// Accepted iterates satisfy the Armijo condition, so the objective never
/// increases. When the line search stalls before the gradient test passes,
/// the inverse-Hessian approximation is rebuilt from [`Objective::curvature`]
/// (at most three times).
pub fn minimize(obj: &dyn Objective, x0: &[f64], opts: &FitOptions) -> Option<Minimum> {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;
    const MAX_RESETS: usize = 3;

    let (mut f, mut g) = obj.value_grad(x0)?;
    let mut x = DVector::from_column_slice(x0);
    let mut hinv = initial_inverse(obj, x0, &g);
    let converged = |f: f64, g: &[f64]| sup_norm(g) <= opts.grad_tol * (1.0 + f.abs());
    let mut iterations = 0;
    let mut resets = 0;

    while iterations < opts.max_iter {
        if converged(f, &g) {
            break;
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut dir = -(&hinv * &gv);
        let mut slope = gv.dot(&dir);
        if !(slope < 0.0) || !slope.is_finite() {
            hinv = initial_inverse(obj, x.as_slice(), &g);
            dir = -(&hinv * &gv);
            slope = gv.dot(&dir);
            if !(slope < 0.0) {
                dir = -gv.clone();
                slope = -gv.dot(&gv);
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &dir * t;
            if let Some((ft, gt)) = obj.value_grad(trial.as_slice()) {
                if ft <= f + ARMIJO * t * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }

        let Some((xn, fnew, gnew)) = accepted else {
            if resets < MAX_RESETS {
                resets += 1;
                hinv = initial_inverse(obj, x.as_slice(), &g);
                continue;
            }
            break;
        };

        let s = &xn - &x;
        let y = DVector::from_column_slice(&gnew) - &gv;
        let step = s.amax();
        x = xn;
        f = fnew;
        g = gnew;

        if step < opts.step_tol {
            if converged(f, &g) || resets >= MAX_RESETS {
                break;
            }
            resets += 1;
            hinv = initial_inverse(obj, x.as_slice(), &g);
            continue;
        }

        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let d = x.len();
            let left = DMatrix::identity(d, d) - &s * y.transpose() * rho;
            hinv = &left * &hinv * left.transpose() + &s * s.transpose() * rho;
        }
    }

    Some(Minimum {
        converged: converged(f, &g),
        x: x.as_slice().to_vec(),
        value: f,
        grad: g,
        iterations,
    })
}

/// Outcome of a multi-start run.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub best: Minimum,
    /// Final value of each start, `None` for starts that never became admissible.
    pub start_values: Vec<Option<f64>>,
    pub starts_used: usize,
}

/// Starting points: `init`, then `starts - 1` perturbations
/// `init_j + (0.5 |init_j| + 0.1) u_j` with `u_j` uniform on `[-1, 1]`.
pub fn start_points(init: &[f64], starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = vec![init.to_vec()];
    for k in 1..starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        out.push(
            init.iter()
                .map(|&v| v + (0.5 * v.abs() + 0.1) * rng.random_range(-1.0..=1.0))
                .collect(),
        );
    }
    out
}

/// Minimizes from every start point and keeps the lowest converged value;
/// unconverged starts count only when none converged. Ties go to the
/// earlier start. Inadmissible perturbed starts are redrawn up to 20
/// times.
pub fn multistart(obj: &dyn Objective, init: &[f64], opts: &FitOptions) -> Result<MultiStart> {
    let starts = opts.starts.max(1);
    let mut best: Option<Minimum> = None;
    let mut start_values = Vec::with_capacity(starts);
    for k in 0..starts {
        let mut result = None;
        for attempt in 0..=20u64 {
            let x0 = if k == 0 {
                if attempt > 0 {
                    break;
                }
                init.to_vec()
            } else {
                let seed = opts.seed.wrapping_add(1000 * attempt);
                start_points(init, k + 1, seed).pop().unwrap()
            };
            result = minimize(obj, &x0, opts);
            if result.is_some() {
                break;
            }
        }
        start_values.push(result.as_ref().map(|m| m.value));
        if let Some(m) = result {
            let better = best.as_ref().is_none_or(|b| {
                (m.converged && !b.converged) || (m.converged == b.converged && m.value < b.value)
            });
            if better {
                best = Some(m);
            }
        }
    }
    let starts_used = start_values.iter().filter(|v| v.is_some()).count();
    Ok(MultiStart {
        best: best.ok_or(Error::NoAdmissibleStart)?,
        start_values,
        starts_used,
    })
}

/// The contrast of `model` on `data` as an [`Objective`].
pub struct ContrastObjective<'a> {
    pub model: &'a dyn DiffusionModel,
    pub data: &'a Trajectory,
    pub shape: ParamVector,
    pub bounds: Option<&'a [(f64, f64)]>,
}

impl ContrastObjective<'_> {
    fn point(&self, x: &[f64]) -> Option<ParamVector> {
        if let Some(b) = self.bounds {
            if x.iter().zip(b).any(|(v, (lo, hi))| v < lo || v > hi) {
                return None;
            }
        }
        self.shape.with_values(x).ok()
    }
}

impl Objective for ContrastObjective<'_> {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let theta = self.point(x)?;
        quasi_value_grad(self.model, &theta, self.data).ok()
    }

    fn curvature(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let theta = self.point(x)?;
        quasi_hess(self.model, &theta, self.data).ok()
    }
}

/// Unpenalized estimate and everything the selection stage needs from it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub theta_tilde: ParamVector,
    pub value: f64,
    pub eval: ContrastEval,
    /// Hessian used downstream: `eval.hess`, ridge-repaired if needed.
    pub hess_pd: DMatrix<f64>,
    /// Ridge added to make the Hessian positive definite, if any.
    pub ridge: Option<f64>,
    /// `sqrt(diag(hess_pd^{-1}))` in natural parameter units.
    pub std_err: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restarts_used: usize,
    pub start_values: Vec<Option<f64>>,
    pub n: usize,
    pub delta: f64,
}

/// Moment-based starting point.
///
/// Drift: least squares of `dX_i / delta` on the model's drift regressors
/// when the drift is linear in its parameters, or on `(1, x)` mapped through
/// [`DiffusionModel::drift_from_affine`]; `0.1` per parameter otherwise.
/// Diffusion: [`DiffusionModel::diffusion_init`] fed with the realized
/// volatility `sqrt(sum dX^2 / (n delta))`.
pub fn default_init(model: &dyn DiffusionModel, data: &Trajectory) -> Result<ParamVector> {
    if data.values().len() < 3 {
        return Err(Error::Precondition("default_init needs at least 3 observations".into()));
    }
    let (p, _) = model.dims();
    let xs = data.values();
    let n = data.n();
    let delta = data.delta();
    let response = DVector::from_iterator(n, xs.windows(2).map(|w| (w[1] - w[0]) / delta));

    let mut alpha = vec![0.1; p];
    let mut regressors = vec![0.0; p];
    if p > 0 && model.drift_regressors(xs[0], &mut regressors) {
        let design = DMatrix::from_fn(n, p, |i, j| {
            model.drift_regressors(xs[i], &mut regressors);
            regressors[j]
        });
        if let Ok(coef) = design.svd(true, true).solve(&response, 1e-12) {
            alpha = coef.as_slice().to_vec();
        }
    } else if p > 0 {
        let (intercept, slope) = affine_least_squares(&xs[..n], response.as_slice());
        if let Some(a) = model.drift_from_affine(intercept, slope) {
            if a.len() == p {
                alpha = a;
            }
        }
    }
    for a in alpha.iter_mut() {
        if !a.is_finite() {
            *a = 0.1;
        }
    }

    let qv: f64 = xs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let realized_vol = (qv / (n as f64 * delta)).sqrt();
    let mut beta = model.diffusion_init(realized_vol, data.mean_level());
    for b in beta.iter_mut() {
        if !b.is_finite() {
            *b = 0.5;
        }
    }
    ParamVector::new(&alpha, &beta)
}

/// OLS of `y` on `(1, x)`.
fn affine_least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Minimizes the contrast from `init` and its perturbations, then evaluates
/// the Hessian and standard errors at the best point.
pub fn fit(
    model: &dyn DiffusionModel,
    data: &Trajectory,
    init: &ParamVector,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (p, q) = model.dims();
    if init.p() != p || init.q() != q {
        return Err(Error::Dimension {
            expected: p + q,
            found: init.len(),
        });
    }
    if data.n() < p + q {
        return Err(Error::Precondition(format!(
            "need at least {} increments to fit {} parameters, got {}",
            p + q,
            p + q,
            data.n()
        )));
    }
    if let Some(b) = &opts.bounds {
        if b.len() != p + q {
            return Err(Error::Dimension {
                expected: p + q,
                found: b.len(),
            });
        }
    }
    let objective = ContrastObjective {
        model,
        data,
        shape: init.clone(),
        bounds: opts.bounds.as_deref(),
    };
    let run = multistart(&objective, init.as_slice(), opts)?;
    let theta_tilde = init.with_values(&run.best.x)?;
    let eval = evaluate(model, &theta_tilde, data)?;
    let (hess_pd, ridge) = repair_positive_definite(&eval.hess);
    let std_err = inverse_diag_sqrt(&hess_pd)?;
    Ok(FitResult {
        model: model.name().to_string(),
        theta_tilde,
        value: run.best.value,
        eval,
        hess_pd,
        ridge,
        std_err,
        converged: run.best.converged,
        iterations: run.best.iterations,
        restarts_used: run.starts_used,
        start_values: run.start_values,
        n: data.n(),
        delta: data.delta(),
    })
}
