//! The CKLS short-rate family `dX = (alpha + beta X) dt + sigma X^gamma dW`
//! and its named one-factor special cases.

use super::{DiffusionModel, ParamVector};
use crate::error::{Error, Result};

/// A member of the CKLS family, identified by which of `(alpha, beta, gamma)`
/// are free. `sigma` is always free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CklsVariant {
    Merton,
    Vasicek,
    Cir85,
    Dothan,
    Gbm,
    BrennanSchwartz,
    Cir80,
    Cev,
    Ckls,
}

impl CklsVariant {
    /// Table order; ties in [`ckls_reduce`] go to the earlier row.
    pub const ALL: [CklsVariant; 9] = [
        CklsVariant::Merton,
        CklsVariant::Vasicek,
        CklsVariant::Cir85,
        CklsVariant::Dothan,
        CklsVariant::Gbm,
        CklsVariant::BrennanSchwartz,
        CklsVariant::Cir80,
        CklsVariant::Cev,
        CklsVariant::Ckls,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CklsVariant::Merton => "merton",
            CklsVariant::Vasicek => "vasicek",
            CklsVariant::Cir85 => "cir85",
            CklsVariant::Dothan => "dothan",
            CklsVariant::Gbm => "gbm",
            CklsVariant::BrennanSchwartz => "brennan-schwartz",
            CklsVariant::Cir80 => "cir80",
            CklsVariant::Cev => "cev",
            CklsVariant::Ckls => "ckls",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CklsVariant::Merton => "Merton (1973)",
            CklsVariant::Vasicek => "Vasicek (1977)",
            CklsVariant::Cir85 => "Cox, Ingersoll and Ross (1985)",
            CklsVariant::Dothan => "Dothan (1978)",
            CklsVariant::Gbm => "Geometric Brownian Motion",
            CklsVariant::BrennanSchwartz => "Brennan and Schwartz (1980)",
            CklsVariant::Cir80 => "Cox, Ingersoll and Ross (1980)",
            CklsVariant::Cev => "Constant Elasticity Variance",
            CklsVariant::Ckls => "CKLS (1992)",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.id() == id)
    }

    /// `(alpha free, beta free, fixed gamma or None when free)`.
    pub fn pattern(self) -> (bool, bool, Option<f64>) {
        match self {
            CklsVariant::Merton => (true, false, Some(0.0)),
            CklsVariant::Vasicek => (true, true, Some(0.0)),
            CklsVariant::Cir85 => (true, true, Some(0.5)),
            CklsVariant::Dothan => (false, false, Some(1.0)),
            CklsVariant::Gbm => (false, true, Some(1.0)),
            CklsVariant::BrennanSchwartz => (true, true, Some(1.0)),
            CklsVariant::Cir80 => (false, false, Some(1.5)),
            CklsVariant::Cev => (false, true, None),
            CklsVariant::Ckls => (true, true, None),
        }
    }

    fn free_count(self) -> usize {
        let (a, b, g) = self.pattern();
        a as usize + b as usize + 1 + g.is_none() as usize
    }

    /// Drops the coordinates of a full `(alpha, beta, sigma, gamma)` vector
    /// that this variant fixes.
    pub fn project(self, full: &ParamVector) -> Result<ParamVector> {
        if full.p() != 2 || full.q() != 2 {
            return Err(Error::Argument(
                "expected a CKLS vector (alpha, beta | sigma, gamma)".into(),
            ));
        }
        let v = full.as_slice();
        let (a, b, g) = self.pattern();
        let mut alpha = Vec::new();
        if a {
            alpha.push(v[0]);
        }
        if b {
            alpha.push(v[1]);
        }
        let mut beta = vec![v[2]];
        if g.is_none() {
            beta.push(v[3]);
        }
        ParamVector::new(&alpha, &beta)
    }
}

/// Names the CKLS sub-model matching a zero pattern, with exact `gamma`
/// matching. See [`ckls_reduce_with_tol`].
pub fn ckls_reduce(theta: &ParamVector, zeros: &[usize]) -> Result<CklsVariant> {
    ckls_reduce_with_tol(theta, zeros, 0.0)
}

/// Names the most parsimonious CKLS sub-model that can represent `theta`
/// once the coordinates in `zeros` (indices into `(alpha, beta, sigma,
/// gamma)`) are set to zero. A row with a fixed elasticity matches when
/// `|gamma - fixed| <= gamma_tol`. Falls back to the full CKLS model.
pub fn ckls_reduce_with_tol(
    theta: &ParamVector,
    zeros: &[usize],
    gamma_tol: f64,
) -> Result<CklsVariant> {
    if theta.p() != 2 || theta.q() != 2 {
        return Err(Error::Argument(
            "expected a CKLS vector (alpha, beta | sigma, gamma)".into(),
        ));
    }
    if let Some(&bad) = zeros.iter().find(|&&j| j > 3) {
        return Err(Error::Argument(format!("zero index {bad} out of range")));
    }
    let masked = theta.masked(zeros);
    let v = masked.as_slice();
    if v[2] == 0.0 {
        return Err(Error::InvalidReduction(
            "sigma selected to zero leaves a degenerate diffusion".into(),
        ));
    }
    let alpha_zero = v[0] == 0.0;
    let beta_zero = v[1] == 0.0;
    let gamma = v[3];

    let fits = |variant: CklsVariant| {
        let (a, b, g) = variant.pattern();
        (a || alpha_zero)
            && (b || beta_zero)
            && g.is_none_or(|fixed| (gamma - fixed).abs() <= gamma_tol)
    };
    Ok(CklsVariant::ALL
        .into_iter()
        .filter(|&v| fits(v))
        .min_by_key(|v| v.free_count())
        .unwrap_or(CklsVariant::Ckls))
}

/// A CKLS family member as a [`DiffusionModel`]. Drift parameters are the
/// free subset of `(alpha, beta)`; diffusion parameters are `sigma` and,
/// when free, `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct CklsFamily {
    variant: CklsVariant,
}

impl CklsFamily {
    pub fn new(variant: CklsVariant) -> Self {
        Self { variant }
    }

    pub fn variant(&self) -> CklsVariant {
        self.variant
    }

    fn coefficients(&self, alpha: &[f64]) -> (f64, f64) {
        let (a, b, _) = self.variant.pattern();
        match (a, b) {
            (true, true) => (alpha[0], alpha[1]),
            (true, false) => (alpha[0], 0.0),
            (false, true) => (0.0, alpha[0]),
            (false, false) => (0.0, 0.0),
        }
    }

    fn elasticity(&self, beta: &[f64]) -> f64 {
        self.variant.pattern().2.unwrap_or_else(|| beta[1])
    }
}

impl DiffusionModel for CklsFamily {
    fn name(&self) -> &str {
        self.variant.id()
    }

    fn dims(&self) -> (usize, usize) {
        let (a, b, g) = self.variant.pattern();
        (a as usize + b as usize, 1 + g.is_none() as usize)
    }

    fn drift(&self, alpha: &[f64], x: f64) -> f64 {
        let (a, b) = self.coefficients(alpha);
        a + b * x
    }

    fn diffusion(&self, beta: &[f64], x: f64) -> f64 {
        beta[0] * x.powf(self.elasticity(beta))
    }

    fn drift_x(&self, alpha: &[f64], _x: f64) -> f64 {
        self.coefficients(alpha).1
    }

    fn drift_xx(&self, _alpha: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn diffusion_x(&self, beta: &[f64], x: f64) -> f64 {
        let g = self.elasticity(beta);
        if g == 0.0 {
            return 0.0;
        }
        beta[0] * g * x.powf(g - 1.0)
    }

    fn diffusion_xx(&self, beta: &[f64], x: f64) -> f64 {
        let g = self.elasticity(beta);
        if g == 0.0 || g == 1.0 {
            return 0.0;
        }
        beta[0] * g * (g - 1.0) * x.powf(g - 2.0)
    }

    fn drift_grad(&self, _alpha: &[f64], x: f64, out: &mut [f64]) {
        self.drift_regressors(x, out);
    }

    fn diffusion_grad(&self, beta: &[f64], x: f64, out: &mut [f64]) {
        let g = self.elasticity(beta);
        let xg = x.powf(g);
        out[0] = xg;
        if out.len() > 1 {
            out[1] = beta[0] * xg * x.ln();
        }
    }

    fn drift_regressors(&self, x: f64, out: &mut [f64]) -> bool {
        let (a, b, _) = self.variant.pattern();
        let mut k = 0;
        if a {
            out[k] = 1.0;
            k += 1;
        }
        if b {
            out[k] = x;
        }
        true
    }

    fn diffusion_init(&self, realized_vol: f64, level: f64) -> Vec<f64> {
        let g0 = self.variant.pattern().2.unwrap_or(0.5);
        let level = if level.abs() > 1e-8 { level.abs() } else { 1.0 };
        let sigma = realized_vol / level.powf(g0);
        match self.variant.pattern().2 {
            Some(_) => vec![sigma],
            None => vec![sigma, g0],
        }
    }

    fn default_x0(&self, theta: &ParamVector) -> f64 {
        let (a, b) = self.coefficients(theta.alpha());
        if b < 0.0 && -a / b > 0.0 {
            -a / b
        } else {
            1.0
        }
    }
}
