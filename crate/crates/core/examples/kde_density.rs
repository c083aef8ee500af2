//! Gaussian kernel density with Silverman's bandwidth, and the split of
//! exact zeros from the smooth part.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sde_lasso::montecarlo::kde::{kde, nonzero_density, Density};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let samples: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let k = kde(&samples, None)?;
    let mid = k.grid.partition_point(|&g| g < 0.0);
    println!("bandwidth {:.4}, integral {:.6}", k.bandwidth, k.integral());
    println!(
        "density near 0: {:.4} (normal: {:.4})",
        k.density[mid],
        1.0 / (2.0 * std::f64::consts::PI).sqrt()
    );

    let mut with_atom = samples[..300].to_vec();
    with_atom.extend(std::iter::repeat_n(0.0, 700));
    let zeros = with_atom.iter().filter(|&&v| v == 0.0).count();
    println!("{} of {} samples are exact zeros", zeros, with_atom.len());
    match nonzero_density(&with_atom) {
        Density::Smooth(k) => println!("nonzero part: smooth, h = {:.4}", k.bandwidth),
        Density::PointMass { value } => println!("nonzero part: point mass at {value}"),
        Density::Empty => println!("nonzero part: empty"),
    }
    Ok(())
}
