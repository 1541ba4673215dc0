mod common;

use common::{bisection, simpson};
use htcp::bmax::{bmax_curve, boxma_map, solve_bmax_tail};
use htcp::{JumpLaw, ModelParams};
use proptest::prelude::*;

/// Root of `p - T(p)` on `[P(B > x), 1]` with `T` built from Simpson.
fn bisection_oracle(law: &JumpLaw, lambda: f64, x: f64) -> f64 {
    let t = |p: f64| law.tail(x) + simpson(|s| -(-lambda * p * s).exp_m1() * law.density(s), 0.0, x, 20_000);
    bisection(|p| p - t(p), law.tail(x), 1.0, 60)
}

#[test]
fn exponential_fixed_point_closed_form() {
    // With Exp(1) jumps the integral is elementary:
    // T(p) = 1 - (1 - e^{-(1 + lambda p) x}) / (1 + lambda p).
    let (rho, x) = (0.5, 3.0);
    let lambda = rho;
    let t = |p: f64| 1.0 - (1.0 - (-(1.0 + lambda * p) * x).exp()) / (1.0 + lambda * p);
    let oracle = bisection(|p| p - t(p), 0.0, 1.0, 80);
    let params = ModelParams::new(rho, JumpLaw::exponential(1.0).unwrap()).unwrap();
    let s = solve_bmax_tail(&params, x, 1e-12).unwrap();
    assert!((s.p - oracle).abs() < 1e-10, "{} vs {oracle}", s.p);
}

#[test]
fn picard_agrees_with_bisection() {
    let law = JumpLaw::lomax(2.5).unwrap();
    for (rho, x) in [(0.8, 5.0), (0.9, 10.0), (0.95, 20.0), (0.99, 100.0)] {
        let params = ModelParams::new(rho, law).unwrap();
        let s = solve_bmax_tail(&params, x, 1e-12).unwrap();
        let oracle = bisection_oracle(&law, params.lambda(), x);
        assert!((s.p - oracle).abs() < 1e-9, "rho={rho}: {} vs {oracle}", s.p);
    }
}

#[test]
fn map_is_a_contraction() {
    let law = JumpLaw::lomax(2.5).unwrap();
    let params = ModelParams::new(0.9, law).unwrap();
    let (p, q) = (0.2, 0.6);
    let a = boxma_map(&law, params.lambda(), 8.0, p, 1e-13);
    let b = boxma_map(&law, params.lambda(), 8.0, q, 1e-13);
    assert!((a - b).abs() <= 0.9 * (p - q).abs());
}

#[test]
fn curve_and_bracket() {
    let params = ModelParams::new(0.95, JumpLaw::lomax(2.5).unwrap()).unwrap();
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 2.5).collect();
    let c = bmax_curve(&params, &grid, 1e-11).unwrap();
    for (i, &x) in grid.iter().enumerate() {
        let lo = params.law().tail(x);
        assert!(c.p[i] >= lo && c.p[i] <= (lo / 0.05).min(1.0));
        assert!(c.residual[i] < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn bracket_invariant(rho in 0.3f64..0.99, x in 0.1f64..300.0, alpha in 2.1f64..6.0) {
        let params = ModelParams::new(rho, JumpLaw::lomax(alpha).unwrap()).unwrap();
        let s = solve_bmax_tail(&params, x, 1e-10).unwrap();
        let lo = params.law().tail(x);
        prop_assert!(s.p >= lo - 1e-10);
        prop_assert!(s.p <= (lo / (1.0 - rho)).min(1.0) + 1e-10);
        prop_assert!(s.residual < 1e-10);
    }
}
