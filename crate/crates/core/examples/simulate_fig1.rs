//! Simulates the mean-reverting power model with the weak second-order
//! Milstein scheme and writes the path as CSV.
//!
//! Usage: `cargo run --example simulate_fig1 -- [out.csv]`

use sde_lasso::io::save_trajectory;
use sde_lasso::models::{builtin, ParamVector};
use sde_lasso::simulate::{simulate, Scheme, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("fig1")?;
    let theta = ParamVector::new(&[1.0, 10.0], &[0.0, 4.0, 0.5])?;
    let cfg = SimConfig {
        refine: 10,
        scheme: Scheme::Milstein2,
        ..SimConfig::new(1000, 0.1, 10.0, 1)
    };
    let path = simulate(model.as_ref(), &theta, &cfg)?;

    let x = path.values();
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{} observations over T = {}", x.len(), path.time(path.n()));
    println!("mean {:.4}, min {lo:.4}, max {hi:.4}", path.mean_level());

    if let Some(out) = std::env::args().nth(1) {
        save_trajectory(out.as_ref(), &path)?;
        println!("wrote {out}");
    }
    Ok(())
}
