//! A user-defined diffusion: logistic growth with square-root noise,
//! `dX = a1 X (1 - X / a2) dt + b1 sqrt(X) dW`. Only `drift` and
//! `diffusion` are required; partial derivatives fall back to finite
//! differences.

use sde_lasso::alasso::{select, Penalty, SolverOptions};
use sde_lasso::models::{DiffusionModel, ParamVector};
use sde_lasso::qmle::{fit, FitOptions};
use sde_lasso::simulate::{simulate, SimConfig};

struct Logistic;

impl DiffusionModel for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dims(&self) -> (usize, usize) {
        (2, 1)
    }

    fn drift(&self, a: &[f64], x: f64) -> f64 {
        a[0] * x * (1.0 - x / a[1])
    }

    fn diffusion(&self, b: &[f64], x: f64) -> f64 {
        b[0] * x.sqrt()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = Logistic;
    let truth = ParamVector::new(&[0.8, 50.0], &[0.6])?;
    let data = simulate(&model, &truth, &SimConfig::new(4000, 0.05, 40.0, 9))?;

    let init = ParamVector::new(&[0.5, 40.0], &[1.0])?;
    let f = fit(&model, &data, &init, &FitOptions::default())?;
    println!("QMLE {:?} (converged {})", f.theta_tilde.as_slice(), f.converged);
    println!("s.e. {:?}", f.std_err);

    let s = select(&model, &f, &Penalty::default(), &SolverOptions::default())?;
    println!("LASSO {:?}, zeros {:?}", s.theta_hat.as_slice(), s.zero_set);
    Ok(())
}
