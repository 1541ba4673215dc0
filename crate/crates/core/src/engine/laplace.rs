use crate::model::ModelParams;
use crate::quadrature::bisect;

use super::StationaryTable;

/// `psi(beta) = beta - lambda (1 - E[e^{-beta B}])`, the Laplace exponent of
/// the drift-down process.
pub fn laplace_exponent(params: &ModelParams, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    beta - params.lambda() * (1.0 - params.law().laplace(beta))
}

/// Largest root `Phi(q)` of `psi(Phi) = q`. Since `(1-rho) beta <= psi(beta) <= beta`,
/// the root lies in `[q, q / (1 - rho)]`.
pub fn right_inverse(params: &ModelParams, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let hi = q / params.drift_gap();
    bisect(|b| laplace_exponent(params, b) - q, q, hi, 0.0, 1e-14).unwrap_or(hi)
}

/// `∫_0^∞ e^{-s x} f_M(x) dx` for the absolutely continuous part of the law
/// of `M`: `rho (1-rho) B*(s) / (1 - rho B*(s))` with `B*(s)` the excess transform.
pub fn supremum_density_transform(params: &ModelParams, s: f64) -> f64 {
    let rho = params.rho();
    let b = params.law().excess().laplace(s);
    rho * (1.0 - rho) * b / (1.0 - rho * b)
}

fn table_transform(values: &[f64], h: f64, s: f64) -> f64 {
    let n = values.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let x0 = i as f64 * h;
        acc += 0.5 * h * (values[i] * (-s * x0).exp() + values[i + 1] * (-s * (x0 + h)).exp());
    }
    acc
}

impl StationaryTable {
    /// Trapezoid transform of the density table, with the part beyond
    /// `x_max` approximated by a flat continuation of the last value.
    pub fn density_transform(&self, s: f64) -> f64 {
        let d = self.density_values();
        let x = self.x_max();
        table_transform(d, self.h(), s) + d[d.len() - 1] * (-s * x).exp() / s
    }

    /// `∫_0^∞ e^{-beta x} W(x) dx` from the table, which should equal `1 / psi(beta)`.
    pub fn w_transform(&self, beta: f64) -> f64 {
        let w = self.w_values();
        let x = self.x_max();
        table_transform(w, self.h(), beta) + w[w.len() - 1] * (-beta * x).exp() / beta
    }
}
