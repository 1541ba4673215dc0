//! Thin wrappers over the special functions the crate needs.

use statrs::function::gamma;

/// Standard normal survival function `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(a, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_tail_values() {
        assert_relative_eq!(normal_sf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(normal_sf(1.0), 0.158_655_253_931_457_05, max_relative = 1e-13);
        assert_relative_eq!(normal_sf(5.0), 2.866_515_718_791_939e-7, max_relative = 1e-12);
    }

    #[test]
    fn gamma_q_integer_order() {
        // Q(5, x) = e^{-x} sum_{k<5} x^k / k!
        let x: f64 = 2.5;
        let s: f64 = (0..5).map(|k| x.powi(k) / (1..=k).product::<i32>().max(1) as f64).sum();
        assert_relative_eq!(gamma_q(5.0, x), (-x).exp() * s, max_relative = 1e-13);
    }
}
