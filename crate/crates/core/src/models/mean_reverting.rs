use super::{DiffusionModel, ParamVector};

/// `dX = -theta1 (X - theta2) dt + sigma dW`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OrnsteinUhlenbeck;

impl DiffusionModel for OrnsteinUhlenbeck {
    fn name(&self) -> &str {
        "ou"
    }

    fn dims(&self) -> (usize, usize) {
        (2, 1)
    }

    fn drift(&self, alpha: &[f64], x: f64) -> f64 {
        -alpha[0] * (x - alpha[1])
    }

    fn diffusion(&self, beta: &[f64], _x: f64) -> f64 {
        beta[0]
    }

    fn drift_x(&self, alpha: &[f64], _x: f64) -> f64 {
        -alpha[0]
    }

    fn drift_xx(&self, _alpha: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn diffusion_x(&self, _beta: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn diffusion_xx(&self, _beta: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn drift_grad(&self, alpha: &[f64], x: f64, out: &mut [f64]) {
        out[0] = -(x - alpha[1]);
        out[1] = alpha[0];
    }

    fn diffusion_grad(&self, _beta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn drift_from_affine(&self, intercept: f64, slope: f64) -> Option<Vec<f64>> {
        mean_reversion_from_affine(intercept, slope)
    }

    fn default_x0(&self, theta: &ParamVector) -> f64 {
        theta.alpha()[1]
    }
}

/// `dX = -theta1 (X - theta2) dt + (theta3 + theta4 X)^theta5 dW`, the
/// five-parameter mean-reverting model with power-affine volatility. The
/// domain guard requires `theta3 + theta4 X > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanRevertingPower;

impl MeanRevertingPower {
    fn base(beta: &[f64], x: f64) -> f64 {
        beta[0] + beta[1] * x
    }
}

impl DiffusionModel for MeanRevertingPower {
    fn name(&self) -> &str {
        "fig1"
    }

    fn dims(&self) -> (usize, usize) {
        (2, 3)
    }

    fn drift(&self, alpha: &[f64], x: f64) -> f64 {
        -alpha[0] * (x - alpha[1])
    }

    fn diffusion(&self, beta: &[f64], x: f64) -> f64 {
        Self::base(beta, x).powf(beta[2])
    }

    fn admissible(&self, theta: &ParamVector, x: f64) -> bool {
        let beta = theta.beta();
        let u = Self::base(beta, x);
        if !(u > 0.0 && u.is_finite()) {
            return false;
        }
        let s = u.powf(beta[2]);
        s.is_finite() && s > 0.0 && self.drift(theta.alpha(), x).is_finite()
    }

    fn drift_x(&self, alpha: &[f64], _x: f64) -> f64 {
        -alpha[0]
    }

    fn drift_xx(&self, _alpha: &[f64], _x: f64) -> f64 {
        0.0
    }

    fn diffusion_x(&self, beta: &[f64], x: f64) -> f64 {
        let u = Self::base(beta, x);
        beta[2] * beta[1] * u.powf(beta[2] - 1.0)
    }

    fn diffusion_xx(&self, beta: &[f64], x: f64) -> f64 {
        let u = Self::base(beta, x);
        beta[2] * (beta[2] - 1.0) * beta[1] * beta[1] * u.powf(beta[2] - 2.0)
    }

    fn drift_grad(&self, alpha: &[f64], x: f64, out: &mut [f64]) {
        out[0] = -(x - alpha[1]);
        out[1] = alpha[0];
    }

    fn diffusion_grad(&self, beta: &[f64], x: f64, out: &mut [f64]) {
        let u = Self::base(beta, x);
        let d = beta[2] * u.powf(beta[2] - 1.0);
        out[0] = d;
        out[1] = d * x;
        out[2] = u.powf(beta[2]) * u.ln();
    }

    fn drift_from_affine(&self, intercept: f64, slope: f64) -> Option<Vec<f64>> {
        mean_reversion_from_affine(intercept, slope)
    }

    /// `theta3 = theta5 = 0.5`, `theta4` chosen so the volatility matches
    /// the realized volatility at the mean level.
    fn diffusion_init(&self, realized_vol: f64, level: f64) -> Vec<f64> {
        let level = if level.abs() > 1e-8 { level } else { 1.0 };
        let slope = ((realized_vol * realized_vol - 0.5) / level).max(1e-3 / level.abs());
        vec![0.5, slope, 0.5]
    }

    fn default_x0(&self, theta: &ParamVector) -> f64 {
        theta.alpha()[1]
    }
}

// a + c x = -theta1 (x - theta2)
fn mean_reversion_from_affine(intercept: f64, slope: f64) -> Option<Vec<f64>> {
    if slope < 0.0 {
        Some(vec![-slope, -intercept / slope])
    } else {
        None
    }
}
