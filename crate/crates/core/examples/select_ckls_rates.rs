//! CKLS fit and adaptive-LASSO selection on monthly U.S. short rates,
//! 06/1964 to 12/1989 (307 observations, percent).
//!
//! Usage: `cargo run --release --example select_ckls_rates -- [data.csv]`

use sde_lasso::alasso::{select, Penalty, SolverOptions};
use sde_lasso::io::{load_csv, DataSource};
use sde_lasso::models::builtin;
use sde_lasso::qmle::{default_init, fit, FitOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/irates_1964_1989.csv").to_string()
    });
    let data = load_csv(&DataSource::new(path, Some(1.0 / 12.0)))?;
    let model = builtin("ckls")?;
    let init = default_init(model.as_ref(), &data)?;
    let f = fit(model.as_ref(), &data, &init, &FitOptions::default())?;

    let names = ["alpha", "beta", "sigma", "gamma"];
    println!("{:<26} {:>9} {:>9} {:>9} {:>9}  model", "", names[0], names[1], names[2], names[3]);
    let row = |label: &str, v: &[f64], tag: &str| {
        println!("{label:<26} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {tag}", v[0], v[1], v[2], v[3]);
    };
    row("QMLE", f.theta_tilde.as_slice(), "");
    row("  s.e.", &f.std_err, "");

    for (label, c) in [("LASSO, lambda0 = gamma0 = 1", 1.0), ("LASSO, lambda0 = gamma0 = 10", 10.0)] {
        let s = select(model.as_ref(), &f, &Penalty::new(c, c), &SolverOptions::default())?;
        row(label, s.theta_hat.as_slice(), s.reduced_model.as_deref().unwrap_or("-"));
        let mut se = vec![f64::NAN; 4];
        for (j, v) in s.active_set().into_iter().zip(&s.active_std_err) {
            se[j] = *v;
        }
        row("  s.e. (active)", &se, "");
    }
    Ok(())
}
