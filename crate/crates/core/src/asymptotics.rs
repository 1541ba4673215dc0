//! Closed-form heavy-tail approximations, transition thresholds,
//! heavy-traffic limits and a deviation bound.
//!
//! With `mu = E[B^2] / (2 E[B])` and tail index `alpha`, the thresholds are
//!
//! * `x_rho(k)      = k mu (alpha-1) / (1-rho) · log(1/(1-rho))`
//! * `x_tilde       = mu (alpha-2) / (1-rho) · log(1/(1-rho))`
//! * `x_rho*(k*)    = log(1/(1-rho))^{k*} / (1-rho)^2`
//! * `a_rho*(k*)    = k* mu (alpha-1) / (1-rho) · log(1/(1-rho))`

use crate::error::{invalid, Result};
use crate::model::ModelParams;
use crate::special::normal_sf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub x_rho: f64,
    pub x_tilde: f64,
    pub x_rho_star: f64,
    pub a_rho_star: f64,
}

pub fn thresholds(params: &ModelParams, k: f64, k_star: f64) -> Result<Thresholds> {
    let law = params.law();
    let alpha = law.alpha().ok_or_else(|| invalid("thresholds need a regularly varying law"))?;
    if !(k >= 1.0) {
        return Err(invalid("k must be at least 1"));
    }
    if k == 1.0 && !law.slowly_varying_dominates_log_power() {
        return Err(invalid("k = 1 needs a slowly varying factor dominating (log x)^alpha"));
    }
    if !(k_star > 2.0) {
        return Err(invalid("k_star must exceed 2"));
    }
    let gap = params.drift_gap();
    let log = (1.0 / gap).ln();
    let mu = params.mu();
    Ok(Thresholds {
        x_rho: k * mu * (alpha - 1.0) / gap * log,
        x_tilde: mu * (alpha - 2.0) / gap * log,
        x_rho_star: log.powf(k_star) / (gap * gap),
        a_rho_star: k_star * mu * (alpha - 1.0) / gap * log,
    })
}

/// `rho (1-rho) / E[B] · ∫_x^∞ P(B > t) dt = rho (1-rho) P(B* > x)`, taken literally.
pub fn approx_supremum_global(params: &ModelParams, x: f64) -> f64 {
    let rho = params.rho();
    rho * (1.0 - rho) * params.law().excess().tail(x)
}

/// `rho / (1-rho) · P(B* > x)`, the standard heavy-tailed estimate of `P(M > x)`.
pub fn classical_global(params: &ModelParams, x: f64) -> f64 {
    let rho = params.rho();
    rho / (1.0 - rho) * params.law().excess().tail(x)
}

/// `rho / (1-rho) · P(B* ∈ [x, x+T))`.
pub fn approx_supremum_local(params: &ModelParams, x: f64, window: f64) -> f64 {
    if window <= 0.0 {
        return 0.0;
    }
    let rho = params.rho();
    rho / (1.0 - rho) * params.law().excess().mass(x, x + window)
}

/// `rho / (1-rho) · P(B > x)`, approximating `P(M_tau > x)`.
pub fn approx_mtau(params: &ModelParams, x: f64) -> f64 {
    let rho = params.rho();
    rho / (1.0 - rho) * params.law().tail(x)
}

/// `P(B > x) / (1-rho)`, approximating `P(B_tau > x)`.
pub fn approx_bmax(params: &ModelParams, x: f64) -> f64 {
    params.law().tail(x) / (1.0 - params.rho())
}

/// `rho / (1-rho) · P(B > (1-rho) x)`, approximating `P(tau > x)`.
pub fn approx_tau(params: &ModelParams, x: f64) -> f64 {
    approx_mtau(params, (1.0 - params.rho()) * x)
}

/// Heavy-traffic exponential limit of `P((1-rho) M > y)`: `exp(-y / E[B*])`.
pub fn kingman_tail(params: &ModelParams, y: f64) -> f64 {
    (-y.max(0.0) / params.mu()).exp()
}

/// Density of the limit in [`kingman_tail`].
pub fn kingman_local_density(params: &ModelParams, y: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    (-y / params.mu()).exp() / params.mu()
}

/// `f_R(t) = t^{-1/2} sqrt(2/pi) e^{-t/2} - 2 P(Z > sqrt t)`.
pub fn abate_whitt_density(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t must be positive"));
    }
    let s = t.sqrt();
    Ok((2.0 / std::f64::consts::PI).sqrt() / s * (-0.5 * t).exp() - 2.0 * normal_sf(s))
}

/// Both forms of the deviation bound for sums of independent, zero-mean
/// variables bounded by `c` with total variance `var_sum`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProkhorovBound {
    /// `exp(-(y / 2c) asinh(y c / (2 var_sum)))`
    pub arcsinh: f64,
    /// `(c y / var_sum)^{-y / (2c)}`
    pub simplified: f64,
}

pub fn prokhorov_bound(y: f64, c: f64, var_sum: f64) -> Result<ProkhorovBound> {
    if !(y > 0.0 && c > 0.0 && var_sum > 0.0) {
        return Err(invalid("y, c and var_sum must be positive"));
    }
    let e = y / (2.0 * c);
    Ok(ProkhorovBound {
        arcsinh: (-e * (y * c / (2.0 * var_sum)).asinh()).exp(),
        simplified: (c * y / var_sum).powf(-e),
    })
}
