//! Quasi-likelihood fit of an Ornstein-Uhlenbeck path
//! `dX = -a1 (X - a2) dt + b1 dW`, with standard errors.

use sde_lasso::models::{builtin, ParamVector};
use sde_lasso::qmle::{default_init, fit, FitOptions};
use sde_lasso::simulate::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("ou")?;
    let truth = ParamVector::new(&[1.0, 10.0], &[1.0])?;
    let data = simulate(model.as_ref(), &truth, &SimConfig::new(5000, 0.05, 10.0, 7))?;

    let init = default_init(model.as_ref(), &data)?;
    println!("moment start: {:?}", init.as_slice());

    let f = fit(model.as_ref(), &data, &init, &FitOptions::default())?;
    println!("converged: {} after {} iterations", f.converged, f.iterations);
    println!("contrast value: {:.6}", f.value);
    for (j, ((est, se), t)) in f
        .theta_tilde
        .as_slice()
        .iter()
        .zip(&f.std_err)
        .zip(truth.as_slice())
        .enumerate()
    {
        println!("theta_{}: {est:>9.5} (s.e. {se:.5})  truth {t}", j + 1);
    }
    println!("rate-scaled Hessian:\n{:.4}", f.eval.scaled_hess);
    Ok(())
}
