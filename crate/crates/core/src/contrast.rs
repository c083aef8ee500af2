//! Euler quasi-likelihood contrast
//!
//! ```text
//! l_n(theta) = 1/2 sum_i { log S_{i-1} + (dX_i - delta b_{i-1})^2 / (delta S_{i-1}) },  S = sigma^2
//! ```
//!
//! with its analytic gradient, a finite-difference Hessian, and the diagonal
//! rate scaling `diag(1/(n delta) I_p, 1/n I_q)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DiffusionModel, ParamVector};
use crate::simulate::Trajectory;

/// Objective value assigned to inadmissible points inside optimizers.
pub const INADMISSIBLE: f64 = 1e12;

fn domain_error(model: &dyn DiffusionModel, theta: &ParamVector, x: f64) -> Error {
    Error::Domain {
        x,
        term: format!(
            "{} rejects theta = {:?} at this state",
            model.name(),
            theta.as_slice()
        ),
    }
}

fn check_shape(model: &dyn DiffusionModel, theta: &ParamVector) -> Result<()> {
    let (p, q) = model.dims();
    if theta.p() != p || theta.q() != q {
        return Err(Error::Dimension {
            expected: p + q,
            found: theta.len(),
        });
    }
    Ok(())
}

/// The contrast `l_n(theta)`.
pub fn quasi_loglik(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<f64> {
    check_shape(model, theta)?;
    let delta = data.delta();
    let xs = data.values();
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (x, dx) = (w[0], w[1] - w[0]);
        if !model.admissible(theta, x) {
            return Err(domain_error(model, theta, x));
        }
        let s = model.diffusion(theta.beta(), x);
        let s2 = s * s;
        let r = dx - delta * model.drift(theta.alpha(), x);
        total += s2.ln() + r * r / (delta * s2);
    }
    let value = 0.5 * total;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("quasi-likelihood".into()))
    }
}

/// Value and gradient in one pass.
///
/// Drift coordinates: `-sum r_i (db/dalpha_j) / S_i`.
/// Diffusion coordinates: `sum (dsigma/dbeta_k / sigma_i) (1 - r_i^2 / (delta S_i))`.
pub fn quasi_value_grad(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<(f64, Vec<f64>)> {
    check_shape(model, theta)?;
    let (p, q) = (theta.p(), theta.q());
    let delta = data.delta();
    let mut db = vec![0.0; p];
    let mut ds = vec![0.0; q];
    let mut grad = vec![0.0; p + q];
    let mut total = 0.0;
    for w in data.values().windows(2) {
        let (x, dx) = (w[0], w[1] - w[0]);
        if !model.admissible(theta, x) {
            return Err(domain_error(model, theta, x));
        }
        let s = model.diffusion(theta.beta(), x);
        let s2 = s * s;
        let r = dx - delta * model.drift(theta.alpha(), x);
        let z2 = r * r / (delta * s2);
        total += s2.ln() + z2;

        model.drift_grad(theta.alpha(), x, &mut db);
        for j in 0..p {
            grad[j] -= r * db[j] / s2;
        }
        model.diffusion_grad(theta.beta(), x, &mut ds);
        let factor = (1.0 - z2) / s;
        for k in 0..q {
            grad[p + k] += ds[k] * factor;
        }
    }
    let value = 0.5 * total;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("quasi-likelihood gradient".into()));
    }
    Ok((value, grad))
}

/// Gradient of [`quasi_loglik`] with respect to `theta`.
pub fn quasi_grad(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<Vec<f64>> {
    quasi_value_grad(model, theta, data).map(|(_, g)| g)
}

/// Per-coordinate step used for the finite-difference Hessian.
pub fn hess_step(v: f64) -> f64 {
    f64::EPSILON.cbrt() * v.abs().max(1.0)
}

/// Finite-difference Hessian of the contrast before symmetrization: column
/// `j` is the central difference of the analytic gradient along `theta_j`.
/// Falls back to a one-sided difference when one neighbour is inadmissible.
pub fn quasi_hess_unsymmetrized(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<DMatrix<f64>> {
    let d = theta.len();
    let base = theta.as_slice();
    let mut h = DMatrix::zeros(d, d);
    let mut center: Option<Vec<f64>> = None;
    let mut center_grad = || -> Result<Vec<f64>> {
        if center.is_none() {
            center = Some(quasi_grad(model, theta, data)?);
        }
        Ok(center.clone().unwrap())
    };
    let mut work = base.to_vec();
    for j in 0..d {
        let step = hess_step(base[j]);
        work[j] = base[j] + step;
        let up = quasi_grad(model, &theta.with_values(&work)?, data);
        work[j] = base[j] - step;
        let down = quasi_grad(model, &theta.with_values(&work)?, data);
        work[j] = base[j];
        let column: Vec<f64> = match (up, down) {
            (Ok(u), Ok(l)) => u.iter().zip(&l).map(|(a, b)| (a - b) / (2.0 * step)).collect(),
            (Ok(u), Err(_)) => {
                let c = center_grad()?;
                u.iter().zip(&c).map(|(a, b)| (a - b) / step).collect()
            }
            (Err(_), Ok(l)) => {
                let c = center_grad()?;
                c.iter().zip(&l).map(|(a, b)| (a - b) / step).collect()
            }
            (Err(e), Err(_)) => return Err(e),
        };
        for (i, v) in column.into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    Ok(h)
}

/// Symmetrized finite-difference Hessian `(H + H^T) / 2`.
pub fn quasi_hess(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<DMatrix<f64>> {
    let h = quasi_hess_unsymmetrized(model, theta, data)?;
    Ok(symmetrize(&h))
}

pub fn symmetrize(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

/// Diagonal rate matrix `phi(n) = diag(1/(n delta) I_p, 1/n I_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub n: usize,
    pub delta: f64,
    pub p: usize,
    pub q: usize,
}

impl RateMatrix {
    pub fn new(n: usize, delta: f64, p: usize, q: usize) -> Self {
        Self { n, delta, p, q }
    }

    pub fn for_data(data: &Trajectory, p: usize, q: usize) -> Self {
        Self::new(data.n(), data.delta(), p, q)
    }

    /// Diagonal entries of `phi(n)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n as f64;
        let mut d = vec![1.0 / (n * self.delta); self.p];
        d.extend(std::iter::repeat_n(1.0 / n, self.q));
        d
    }

    /// Diagonal of `phi(n)^{1/2}`.
    pub fn sqrt_diagonal(&self) -> Vec<f64> {
        self.diagonal().into_iter().map(f64::sqrt).collect()
    }
}

/// `phi(n)^{1/2} H phi(n)^{1/2}`: drift block divided by `n delta`,
/// diffusion block by `n`, cross blocks by `n sqrt(delta)`.
pub fn scaled_hess(hess: &DMatrix<f64>, rate: &RateMatrix) -> Result<DMatrix<f64>> {
    let d = rate.p + rate.q;
    if hess.nrows() != d || hess.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            found: hess.nrows().max(hess.ncols()),
        });
    }
    let s = rate.sqrt_diagonal();
    Ok(DMatrix::from_fn(d, d, |i, j| hess[(i, j)] * s[i] * s[j]))
}

/// Contrast summary at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
    pub scaled_hess: DMatrix<f64>,
}

/// Value, gradient, symmetrized Hessian and rate-scaled Hessian at `theta`.
pub fn evaluate(
    model: &dyn DiffusionModel,
    theta: &ParamVector,
    data: &Trajectory,
) -> Result<ContrastEval> {
    let (value, grad) = quasi_value_grad(model, theta, data)?;
    let hess = quasi_hess(model, theta, data)?;
    let rate = RateMatrix::for_data(data, theta.p(), theta.q());
    let scaled_hess = scaled_hess(&hess, &rate)?;
    Ok(ContrastEval {
        value,
        grad,
        hess,
        scaled_hess,
    })
}

/// Returns `hess` unchanged when Cholesky succeeds; otherwise adds `tau I`
/// with `tau = max(1e-8, 1.1 |lambda_min|)` and reports `tau`.
pub fn repair_positive_definite(hess: &DMatrix<f64>) -> (DMatrix<f64>, Option<f64>) {
    if hess.clone().cholesky().is_some() {
        return (hess.clone(), None);
    }
    let lambda_min = hess
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let tau = (1.1 * lambda_min.abs()).max(1e-8);
    let d = hess.nrows();
    (hess + DMatrix::identity(d, d) * tau, Some(tau))
}

/// `sqrt(diag(H^{-1}))` for a positive definite `H`.
pub fn inverse_diag_sqrt(hess: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = hess
        .clone()
        .cholesky()
        .ok_or_else(|| first_nonpositive(hess))?;
    let inv = chol.inverse();
    Ok((0..hess.nrows()).map(|i| inv[(i, i)].sqrt()).collect())
}

fn first_nonpositive(hess: &DMatrix<f64>) -> Error {
    let index = (0..hess.nrows())
        .find(|&i| hess[(i, i)] <= 0.0)
        .unwrap_or(0);
    Error::NotPositiveDefinite {
        index,
        value: hess[(index, index)],
    }
}
