//! Gaussian kernel density estimates for summarizing replicated estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde {
    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

/// Smoothed part of a per-parameter summary. Exact zeros are never part of
/// the smoothed sample; their share is reported separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Smooth(Kde),
    /// All nonzero samples share one value.
    PointMass { value: f64 },
    /// Fewer than two nonzero samples.
    Empty,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `0.9 min(sd, IQR / 1.34) m^(-1/5)`; falls back to `sd` when the IQR is 0.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (_, sd) = mean_std(samples);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (samples.len() as f64).powf(-0.2)
}

/// Gaussian-kernel density on [`GRID_POINTS`] points spanning
/// `[min - 3h, max + 3h]`, rescaled so that its trapezoid integral is 1.
pub fn kde(samples: &[f64], bandwidth: Option<f64>) -> Result<Kde> {
    if samples.len() < 2 || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(
            "kde needs at least two finite samples".into(),
        ));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::DegenerateSample {
            count: samples.len(),
            value: lo,
        });
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Argument(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(samples),
    };
    let (a, b) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| a + step * i as f64).collect();
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| (-0.5 * ((g - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    let total = trapezoid(&grid, &density);
    for d in density.iter_mut() {
        *d /= total;
    }
    Ok(Kde {
        grid,
        density,
        bandwidth: h,
    })
}

/// Density of the nonzero samples, classified.
pub fn nonzero_density(samples: &[f64]) -> Density {
    let nonzero: Vec<f64> = samples.iter().copied().filter(|&x| x != 0.0).collect();
    match kde(&nonzero, None) {
        Ok(k) => Density::Smooth(k),
        Err(Error::DegenerateSample { value, .. }) => Density::PointMass { value },
        Err(_) => Density::Empty,
    }
}
