//! Parametric scalar diffusions `dX = b(alpha, X) dt + sigma(beta, X) dW`.
//!
//! A model is anything implementing [`DiffusionModel`]. Only the drift and
//! diffusion coefficients are required; state derivatives and parameter
//! gradients fall back to central finite differences when a model does not
//! supply them analytically. The built-in families are addressable by name
//! through [`builtin`].

mod ckls;
mod mean_reverting;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ckls::{ckls_reduce, ckls_reduce_with_tol, CklsFamily, CklsVariant};
pub use mean_reverting::{MeanRevertingPower, OrnsteinUhlenbeck};

/// Names accepted by [`builtin`].
pub const BUILTIN_MODELS: &[&str] = &[
    "ckls",
    "fig1",
    "ou",
    "vasicek",
    "cir85",
    "gbm",
    "cev",
    "merton",
    "dothan",
    "brennan-schwartz",
    "cir80",
];

/// Parameter vector `theta = (alpha, beta)` split into `p` drift and `q`
/// diffusion coordinates. The split is fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    p: usize,
}

impl ParamVector {
    pub fn new(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        let mut values = alpha.to_vec();
        values.extend_from_slice(beta);
        Self::from_vec(values, alpha.len())
    }

    /// Builds from a concatenated `(alpha, beta)` vector with `p` drift entries.
    pub fn from_vec(values: Vec<f64>, p: usize) -> Result<Self> {
        if p > values.len() || values.len() == p {
            return Err(Error::Argument(format!(
                "parameter vector of length {} needs at least one diffusion parameter after {p} drift parameters",
                values.len()
            )));
        }
        Ok(Self { values, p })
    }

    /// Builds a vector shaped for `model`.
    pub fn for_model(model: &dyn DiffusionModel, values: &[f64]) -> Result<Self> {
        let (p, q) = model.dims();
        if values.len() != p + q {
            return Err(Error::Dimension {
                expected: p + q,
                found: values.len(),
            });
        }
        Self::from_vec(values.to_vec(), p)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.values[..self.p]
    }

    pub fn beta(&self) -> &[f64] {
        &self.values[self.p..]
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.values.len() - self.p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Same partition, new values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension {
                expected: self.values.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            values: values.to_vec(),
            p: self.p,
        })
    }

    /// Copy with the listed coordinates set to exactly zero.
    pub fn masked(&self, zeros: &[usize]) -> Self {
        let mut out = self.clone();
        for &j in zeros {
            out.values[j] = 0.0;
        }
        out
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Step for central differences in the state variable.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

fn central_diff(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = fd_step(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn central_diff2(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    // fourth root of eps balances truncation and rounding for second differences
    let h = f64::EPSILON.powf(0.25) * x.abs().max(1.0);
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

fn param_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], out: &mut [f64]) {
    let mut work = params.to_vec();
    for j in 0..params.len() {
        let h = fd_step(params[j]);
        work[j] = params[j] + h;
        let up = f(&work);
        work[j] = params[j] - h;
        let down = f(&work);
        work[j] = params[j];
        out[j] = (up - down) / (2.0 * h);
    }
}

/// A scalar diffusion known up to its drift and diffusion parameters.
///
/// `diffusion` returns `sigma`, not `sigma^2`. Implementations must be pure:
/// the same arguments always give the same result.
pub trait DiffusionModel: Send + Sync {
    fn name(&self) -> &str;

    /// `(p, q)`: number of drift and diffusion parameters.
    fn dims(&self) -> (usize, usize);

    fn drift(&self, alpha: &[f64], x: f64) -> f64;

    fn diffusion(&self, beta: &[f64], x: f64) -> f64;

    /// Domain guard: both coefficients finite and `sigma > 0`.
    fn admissible(&self, theta: &ParamVector, x: f64) -> bool {
        let s = self.diffusion(theta.beta(), x);
        s.is_finite() && s > 0.0 && self.drift(theta.alpha(), x).is_finite()
    }

    fn drift_x(&self, alpha: &[f64], x: f64) -> f64 {
        central_diff(|y| self.drift(alpha, y), x)
    }

    fn drift_xx(&self, alpha: &[f64], x: f64) -> f64 {
        central_diff2(|y| self.drift(alpha, y), x)
    }

    fn diffusion_x(&self, beta: &[f64], x: f64) -> f64 {
        central_diff(|y| self.diffusion(beta, y), x)
    }

    fn diffusion_xx(&self, beta: &[f64], x: f64) -> f64 {
        central_diff2(|y| self.diffusion(beta, y), x)
    }

    /// Writes `d b / d alpha` into `out` (length `p`).
    fn drift_grad(&self, alpha: &[f64], x: f64, out: &mut [f64]) {
        param_gradient(|a| self.drift(a, x), alpha, out);
    }

    /// Writes `d sigma / d beta` into `out` (length `q`).
    fn diffusion_grad(&self, beta: &[f64], x: f64, out: &mut [f64]) {
        param_gradient(|b| self.diffusion(b, x), beta, out);
    }

    /// For drifts linear in alpha, `b(alpha, x) = sum_j alpha_j r_j(x)`:
    /// writes the regressors `r_j(x)` and returns true.
    fn drift_regressors(&self, _x: f64, _out: &mut [f64]) -> bool {
        false
    }

    /// Maps a fitted affine drift `a + c x` to drift parameters, for models
    /// whose drift is affine in the state but not in alpha.
    fn drift_from_affine(&self, _intercept: f64, _slope: f64) -> Option<Vec<f64>> {
        None
    }

    /// Diffusion starting values given the realized volatility and the mean
    /// level of the data. Default: realized volatility in the first slot and
    /// 0.5 elsewhere.
    fn diffusion_init(&self, realized_vol: f64, _level: f64) -> Vec<f64> {
        let (_, q) = self.dims();
        let mut out = vec![0.5; q];
        out[0] = realized_vol;
        out
    }

    /// Starting state used when the caller does not give one.
    fn default_x0(&self, _theta: &ParamVector) -> f64 {
        1.0
    }
}

pub type SharedModel = Arc<dyn DiffusionModel>;

/// Looks up a built-in model by name.
pub fn builtin(name: &str) -> Result<SharedModel> {
    let model: SharedModel = match name {
        "fig1" => Arc::new(MeanRevertingPower),
        "ou" => Arc::new(OrnsteinUhlenbeck),
        other => match CklsVariant::from_id(other) {
            Some(v) => Arc::new(CklsFamily::new(v)),
            None => return Err(Error::UnknownModel(other.to_string())),
        },
    };
    Ok(model)
}

fn check_dims(model: &dyn DiffusionModel, theta: &ParamVector) -> Result<()> {
    let (p, q) = model.dims();
    if theta.p() != p || theta.q() != q {
        return Err(Error::Dimension {
            expected: p + q,
            found: theta.len(),
        });
    }
    Ok(())
}

/// `b(alpha, x)`, after checking the domain guard.
pub fn eval_drift(model: &dyn DiffusionModel, theta: &ParamVector, x: f64) -> Result<f64> {
    check_dims(model, theta)?;
    let b = model.drift(theta.alpha(), x);
    if !b.is_finite() {
        return Err(Error::Domain {
            x,
            term: format!("drift of {} is {b}", model.name()),
        });
    }
    if !model.admissible(theta, x) {
        return Err(Error::Domain {
            x,
            term: format!("{} rejects theta = {:?}", model.name(), theta.as_slice()),
        });
    }
    Ok(b)
}

/// `sigma(beta, x) > 0`, after checking the domain guard.
pub fn eval_diffusion(model: &dyn DiffusionModel, theta: &ParamVector, x: f64) -> Result<f64> {
    check_dims(model, theta)?;
    let s = model.diffusion(theta.beta(), x);
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain {
            x,
            term: format!("diffusion of {} is {s}", model.name()),
        });
    }
    if !model.admissible(theta, x) {
        return Err(Error::Domain {
            x,
            term: format!("{} rejects theta = {:?}", model.name(), theta.as_slice()),
        });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    // random admissible (theta, x) for each built-in
    fn sample_point(name: &str, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let u = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.random_range(lo..hi);
        match name {
            "fig1" => (
                vec![u(rng, 0.2, 3.0), u(rng, 2.0, 15.0), u(rng, 0.0, 2.0), u(rng, 0.5, 5.0), u(rng, 0.2, 1.5)],
                u(rng, 0.5, 20.0),
            ),
            "ou" => (vec![u(rng, 0.1, 3.0), u(rng, -5.0, 5.0), u(rng, 0.1, 3.0)], u(rng, -10.0, 10.0)),
            _ => {
                let model = builtin(name).unwrap();
                let (p, q) = model.dims();
                let mut v: Vec<f64> = (0..p).map(|_| u(rng, -2.0, 2.0)).collect();
                v.push(u(rng, 0.05, 1.0));
                if q == 2 {
                    v.push(u(rng, 0.0, 2.0));
                }
                (v, u(rng, 0.2, 10.0))
            }
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &name in BUILTIN_MODELS {
            let model = builtin(name).unwrap();
            for _ in 0..100 {
                let (v, x) = sample_point(name, &mut rng);
                let theta = ParamVector::for_model(model.as_ref(), &v).unwrap();
                assert!(model.admissible(&theta, x), "{name} {v:?} {x}");
                let (a, b) = (theta.alpha(), theta.beta());
                let m = model.as_ref();
                assert!(close(m.drift_x(a, x), fd(|y| m.drift(a, y), x), 1e-4), "{name} b_x");
                assert!(close(m.drift_xx(a, x), fd(|y| m.drift_x(a, y), x), 1e-4), "{name} b_xx");
                assert!(close(m.diffusion_x(b, x), fd(|y| m.diffusion(b, y), x), 1e-4), "{name} s_x");
                assert!(close(m.diffusion_xx(b, x), fd(|y| m.diffusion_x(b, y), x), 1e-4), "{name} s_xx");

                let mut g = vec![0.0; a.len()];
                m.drift_grad(a, x, &mut g);
                for j in 0..a.len() {
                    let f = |t: f64| {
                        let mut w = a.to_vec();
                        w[j] = t;
                        m.drift(&w, x)
                    };
                    assert!(close(g[j], fd(f, a[j]), 1e-4), "{name} db/dalpha_{j}");
                }
                let mut g = vec![0.0; b.len()];
                m.diffusion_grad(b, x, &mut g);
                for k in 0..b.len() {
                    let f = |t: f64| {
                        let mut w = b.to_vec();
                        w[k] = t;
                        m.diffusion(&w, x)
                    };
                    assert!(close(g[k], fd(f, b[k]), 1e-4), "{name} dsigma/dbeta_{k}");
                }
            }
        }
    }

    #[test]
    fn ckls_drift_at_table_values() {
        let m = builtin("ckls").unwrap();
        let theta = ParamVector::new(&[2.0822, -0.2756], &[0.1322, 1.4392]).unwrap();
        let b = eval_drift(m.as_ref(), &theta, 5.0).unwrap();
        assert!((b - 0.7042).abs() < 1e-12);
        let s = eval_diffusion(m.as_ref(), &theta, 1.0).unwrap();
        assert_eq!(s, 0.1322);
    }

    #[test]
    fn merton_drift_is_flat() {
        let m = builtin("merton").unwrap();
        let theta = ParamVector::new(&[0.7], &[0.3]).unwrap();
        assert_eq!(
            eval_drift(m.as_ref(), &theta, 0.0).unwrap(),
            eval_drift(m.as_ref(), &theta, 100.0).unwrap()
        );
    }

    #[test]
    fn fig1_values_and_domain() {
        let m = builtin("fig1").unwrap();
        let theta = ParamVector::new(&[1.0, 10.0], &[0.0, 4.0, 0.5]).unwrap();
        assert_eq!(eval_drift(m.as_ref(), &theta, 10.0).unwrap(), 0.0);
        assert_eq!(eval_diffusion(m.as_ref(), &theta, 4.0).unwrap(), 4.0);

        let bad = ParamVector::new(&[1.0, 10.0], &[-1.0, 0.0, 0.5]).unwrap();
        for x in [-3.0, 0.0, 2.0, 50.0] {
            assert!(matches!(
                eval_diffusion(m.as_ref(), &bad, x),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn partition_is_fixed() {
        let theta = ParamVector::new(&[1.0, 2.0], &[3.0]).unwrap();
        let moved = theta.with_values(&[4.0, 5.0, 6.0]).unwrap();
        assert_eq!((moved.p(), moved.q()), (2, 1));
        assert!(theta.with_values(&[1.0]).is_err());
        assert!(ParamVector::from_vec(vec![1.0, 2.0], 2).is_err());
        for &name in BUILTIN_MODELS {
            let m = builtin(name).unwrap();
            let d0 = m.dims();
            let (v, x) = sample_point(name, &mut ChaCha8Rng::seed_from_u64(1));
            let t = ParamVector::for_model(m.as_ref(), &v).unwrap();
            let _ = eval_drift(m.as_ref(), &t, x);
            assert_eq!(m.dims(), d0);
        }
    }

    #[test]
    fn unknown_model_name() {
        assert!(matches!(builtin("heston"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = builtin("ou").unwrap();
        let theta = ParamVector::new(&[1.0], &[1.0]).unwrap();
        assert!(matches!(
            eval_drift(m.as_ref(), &theta, 0.0),
            Err(Error::Dimension { .. })
        ));
    }
}
