//! Maps zero patterns of the CKLS parameters `(alpha, beta, sigma, gamma)`
//! to the named sub-models of the family.

use sde_lasso::models::{ckls_reduce, ckls_reduce_with_tol, CklsVariant, ParamVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<34} alpha  beta  gamma", "family member");
    for v in CklsVariant::ALL {
        let (a, b, g) = v.pattern();
        let free = |f: bool| if f { "free" } else { "0" };
        let gamma = g.map_or("free".to_string(), |x| x.to_string());
        println!("{:<34} {:<6} {:<5} {gamma}", v.label(), free(a), free(b));
    }
    println!();

    let cases: [(&[f64], &[usize]); 5] = [
        (&[0.5, -0.1, 0.2, 0.0], &[]),
        (&[0.5, -0.1, 0.2, 0.5], &[]),
        (&[0.5, -0.1, 0.2, 1.45], &[1]),
        (&[0.5, -0.1, 0.2, 1.0], &[0, 1]),
        (&[0.5, -0.1, 0.2, 1.3], &[0]),
    ];
    for (values, zeros) in cases {
        let theta = ParamVector::from_vec(values.to_vec(), 2)?;
        println!("{values:?} zeros {zeros:?} -> {}", ckls_reduce(&theta, zeros)?.label());
    }
    let near = ParamVector::from_vec(vec![0.5, -0.1, 0.2, 0.98], 2)?;
    println!(
        "gamma = 0.98 with tolerance 0.05 -> {}",
        ckls_reduce_with_tol(&near, &[], 0.05)?.label()
    );
    Ok(())
}
