//! Tail of the largest jump `B_tau` before the first hitting time of zero,
//! from the fixed-point equation
//!
//! `p = P(B > x) + ∫_0^x (1 - e^{-lambda p t}) dP(B <= t)`.
//!
//! The right-hand side is a contraction in `p` with constant at most
//! `lambda E[B] = rho`, so Picard iteration from `P(B > x)` converges
//! geometrically.

use std::io::Write;

use crate::distributions::JumpLaw;
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::quadrature::integrate_with_breaks;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmaxSolution {
    pub p: f64,
    /// `|p - T(p)|` at the returned value.
    pub residual: f64,
    pub iterations: usize,
}

/// The map `T(p)` on the right-hand side of the fixed-point equation.
pub fn boxma_map(law: &JumpLaw, lambda: f64, x: f64, p: f64, tol: f64) -> f64 {
    let tail = law.tail(x);
    if x <= 0.0 || lambda == 0.0 || p == 0.0 {
        return tail;
    }
    let knee = 1.0 / (lambda * p);
    let breaks = [knee, law.support_start()];
    let q = integrate_with_breaks(|t| -(-lambda * p * t).exp_m1() * law.density(t), 0.0, x, &breaks, tol, 1e-13);
    tail + q.value
}

/// Picard iteration for rate `lambda >= 0`. Exposed separately from
/// [`solve_bmax_tail`] so the degenerate `lambda = 0` case is reachable.
pub fn solve_boxma(law: &JumpLaw, lambda: f64, x: f64, tol: f64, start: Option<f64>) -> Result<BmaxSolution> {
    if !(x >= 0.0) || !(tol > 0.0) || !(lambda >= 0.0) {
        return Err(invalid("need x >= 0, tol > 0 and lambda >= 0"));
    }
    let contraction = lambda * law.mean();
    if contraction >= 1.0 {
        return Err(invalid("lambda E[B] must be below 1"));
    }
    let qtol = tol / 10.0;
    let mut p = start.unwrap_or_else(|| law.tail(x)).clamp(0.0, 1.0);
    // Stopping rule: |p_{k+1} - p_k| small enough that the residual,
    // at most rho |p_{k+1} - p_k|, is below tol.
    let step_tol = if contraction > 0.0 { tol / contraction } else { f64::INFINITY };
    let mut iterations = 0;
    loop {
        let next = boxma_map(law, lambda, x, p, qtol);
        iterations += 1;
        let step = (next - p).abs();
        p = next;
        if step < step_tol.min(1.0) * 0.5 || iterations >= 10_000 {
            break;
        }
    }
    let residual = (p - boxma_map(law, lambda, x, p, qtol)).abs();
    if residual >= tol {
        return Err(Error::Numerical(format!("fixed point residual {residual:e} above tol {tol:e}")));
    }
    Ok(BmaxSolution { p, residual, iterations })
}

/// `P(B_tau > x)`.
pub fn solve_bmax_tail(params: &ModelParams, x: f64, tol: f64) -> Result<BmaxSolution> {
    solve_boxma(params.law(), params.lambda(), x, tol, None)
}

#[derive(Debug, Clone)]
pub struct BmaxCurve {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Solves along an ascending grid, warm-starting each level from the
/// previous solution, then checks monotonicity and the bracket
/// `P(B > x) <= p <= min(1, P(B > x) / (1-rho))`.
pub fn bmax_curve(params: &ModelParams, grid: &[f64], tol: f64) -> Result<BmaxCurve> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("grid must be strictly ascending"));
    }
    let mut curve = BmaxCurve { x: vec![], p: vec![], residual: vec![], iterations: vec![] };
    let mut prev: Option<f64> = None;
    let law = params.law();
    for &x in grid {
        let s = solve_boxma(law, params.lambda(), x, tol, prev)?;
        let lo = law.tail(x);
        let hi = (lo / params.drift_gap()).min(1.0);
        if s.p < lo - tol || s.p > hi + tol {
            return Err(Error::Numerical(format!("p = {} at x = {x} outside [{lo}, {hi}]", s.p)));
        }
        if let Some(q) = prev {
            if s.p > q + tol {
                return Err(Error::Numerical(format!("curve increases at x = {x}")));
            }
        }
        prev = Some(s.p);
        curve.x.push(x);
        curve.p.push(s.p);
        curve.residual.push(s.residual);
        curve.iterations.push(s.iterations);
    }
    Ok(curve)
}

impl BmaxCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,p,residual,iterations")?;
        for i in 0..self.x.len() {
            writeln!(out, "{},{},{:e},{}", self.x[i], self.p[i], self.residual[i], self.iterations[i])?;
        }
        Ok(())
    }
}
