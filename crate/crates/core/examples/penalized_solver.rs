//! The penalized quadratic program on its own: a hand-made Hessian and
//! anchor, solved for a range of penalty intensities.

use nalgebra::DMatrix;
use sde_lasso::alasso::{make_weights, solve_penalized, Penalty, SolverOptions};
use sde_lasso::models::ParamVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hess = DMatrix::from_row_slice(
        4,
        4,
        &[
            40.0, 8.0, 0.0, 0.0, //
            8.0, 6.0, 0.5, 0.0, //
            0.0, 0.5, 900.0, 60.0, //
            0.0, 0.0, 60.0, 20.0,
        ],
    );
    let anchor = ParamVector::new(&[1.2, -0.15], &[0.3, 0.05])?;
    println!("anchor {:?}", anchor.as_slice());
    for c in [0.0, 0.1, 1.0, 5.0, 20.0] {
        let w = make_weights(&anchor, &Penalty::new(c, c))?;
        let s = solve_penalized(&hess, &anchor, &w, &SolverOptions::default())?;
        println!(
            "c = {c:>5}: theta_hat {:?}  zeros {:?}  F = {:.6}  sweeps {}  KKT {}",
            s.theta_hat.as_slice().iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
            s.zero_set,
            s.objective,
            s.sweeps,
            s.kkt.satisfied
        );
    }
    Ok(())
}
