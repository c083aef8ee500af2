//! Evaluates the Euler contrast, its gradient and Hessian, and the
//! rate-scaled Hessian at a few points of a CIR path.

use sde_lasso::contrast::{evaluate, repair_positive_definite, RateMatrix};
use sde_lasso::models::{builtin, ParamVector};
use sde_lasso::simulate::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("cir85")?;
    let truth = ParamVector::new(&[0.6, -0.1], &[0.3])?;
    let data = simulate(model.as_ref(), &truth, &SimConfig::new(3000, 1.0 / 12.0, 6.0, 5))?;
    let rate = RateMatrix::for_data(&data, 2, 1);
    println!("rate diagonal {:?}", rate.diagonal());

    for scale in [0.8, 1.0, 1.25] {
        let theta = truth.with_values(&truth.as_slice().iter().map(|v| v * scale).collect::<Vec<_>>())?;
        let e = evaluate(model.as_ref(), &theta, &data)?;
        let (_, ridge) = repair_positive_definite(&e.hess);
        println!(
            "theta {:?}: l_n = {:.4}, |grad| = {:.3e}, ridge {:?}",
            theta.as_slice(),
            e.value,
            e.grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
            ridge
        );
        println!("scaled Hessian:{:.4}", e.scaled_hess);
    }
    Ok(())
}
