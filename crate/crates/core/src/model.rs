use crate::distributions::JumpLaw;
use crate::error::{invalid, Result};

/// Utilization `rho` and jump law; together they fix the process
/// `X(t) = X0 + sum of jumps - t` with arrival rate `lambda = rho / E[B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    rho: f64,
    law: JumpLaw,
    lambda: f64,
}

impl ModelParams {
    pub fn new(rho: f64, law: JumpLaw) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(ModelParams { rho, law, lambda: rho / law.mean() })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn drift_gap(&self) -> f64 {
        1.0 - self.rho
    }

    /// Mean of the excess law, `E[B^2] / (2 E[B])`.
    pub fn mu(&self) -> f64 {
        self.law.moments().mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_times_mean_is_rho() {
        let p = ModelParams::new(0.9, JumpLaw::lomax(2.5).unwrap()).unwrap();
        assert!((p.lambda() * p.law().mean() - 0.9).abs() < 1e-15);
        assert!((p.drift_gap() - 0.1).abs() < 1e-15);
        assert!(ModelParams::new(1.0, *p.law()).is_err());
        assert!(ModelParams::new(0.0, *p.law()).is_err());
        assert!(ModelParams::new(f64::NAN, *p.law()).is_err());
    }
}
