use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lattice::interpolate;
use crate::model::ModelParams;

/// Uniform grid `0, h, 2h, ..., x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub h: f64,
    pub x_max: f64,
}

impl Grid {
    pub fn new(h: f64, x_max: f64) -> Self {
        Grid { h, x_max }
    }
}

/// Law of the all-time supremum `M` on a grid.
///
/// `tail[i] = P(M > i h)` is the primary array; `cdf`, `w` and `logw` are
/// derived from it so that small tail probabilities keep full precision.
#[derive(Debug, Clone)]
pub struct StationaryTable {
    params: ModelParams,
    h: f64,
    tail: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
    w: Vec<f64>,
    logw: Vec<f64>,
    err_bound: f64,
}

/// Builds the table from the renewal equation for the tail of `M`,
///
/// `T(x) = rho F*(x) + rho ∫_0^x T(x - y) dF*(y)`,  `F* = P(B* > ·)`,
///
/// discretized with the exact excess mass of each cell and the trapezoid
/// rule for `T` inside the cell, so the recursion is explicit in `T(i h)`.
/// The density comes from the companion equation for the absolutely
/// continuous part of the law of `M`, with the analytic excess density as
/// kernel. `err_bound` is the largest change of `T` between steps `h` and
/// `2h`, a conservative estimate for a second-order scheme.
pub fn build_stationary(params: &ModelParams, grid: Grid, tol: f64) -> Result<StationaryTable> {
    let Grid { h, x_max } = grid;
    if !(h > 0.0 && h.is_finite()) || !(x_max > h && x_max.is_finite()) {
        return Err(invalid("need 0 < h < x_max"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol must lie in (0, 1)"));
    }
    let rho = params.rho();
    if rho >= 0.95 && x_max < 10.0 / (1.0 - rho) {
        return Err(Error::GridTooShort(format!(
            "rho = {rho} needs x_max >= 10/(1-rho) = {}, got {x_max}",
            10.0 / (1.0 - rho)
        )));
    }
    let n = (x_max / h).round() as usize;
    if n < 4 {
        return Err(invalid("grid needs at least four cells"));
    }
    let excess = params.law().excess();
    let masses: Vec<f64> = (0..n).into_par_iter().map(|k| excess.mass(k as f64 * h, (k + 1) as f64 * h)).collect();
    // Summing cell masses from the far end keeps small tails accurate.
    let mut excess_tail = vec![0.0; n + 1];
    excess_tail[n] = excess.tail(n as f64 * h);
    for k in (0..n).rev() {
        excess_tail[k] = excess_tail[k + 1] + masses[k];
    }
    excess_tail[0] = 1.0;

    let tail = renewal_tail(rho, &masses, &excess_tail);

    let coarse_masses: Vec<f64> = masses.chunks_exact(2).map(|c| c[0] + c[1]).collect();
    let coarse_tail: Vec<f64> = excess_tail.iter().step_by(2).take(coarse_masses.len() + 1).copied().collect();
    let coarse = renewal_tail(rho, &coarse_masses, &coarse_tail);
    let err_bound = coarse.iter().enumerate().map(|(i, &c)| (c - tail[2 * i]).abs()).fold(0.0, f64::max);
    if err_bound > 10.0 * tol {
        return Err(Error::ToleranceNotMet { err_bound, tol });
    }

    let kernel: Vec<f64> = (0..=n).map(|i| excess.density(i as f64 * h)).collect();
    let density: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut s = (1.0 - rho) * kernel[i];
            for k in 0..i {
                s += (tail[k] - tail[k + 1]) * 0.5 * (kernel[i - k] + kernel[i - k - 1]);
            }
            (rho * s).max(0.0)
        })
        .collect();

    let cdf: Vec<f64> = tail.iter().map(|t| 1.0 - t).collect();
    let w: Vec<f64> = cdf.iter().map(|c| c / (1.0 - rho)).collect();
    let logw: Vec<f64> = tail.iter().map(|t| (-t).ln_1p() - (1.0 - rho).ln()).collect();
    Ok(StationaryTable { params: *params, h, tail, cdf, density, w, logw, err_bound })
}

fn renewal_tail(rho: f64, masses: &[f64], excess_tail: &[f64]) -> Vec<f64> {
    let n = masses.len();
    // c[k] weights T((i-k) h) for 1 <= k <= i-1.
    let c: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { 0.5 * (masses[k] + masses[k - 1]) }).collect();
    let diag = 1.0 - 0.5 * rho * masses[0];
    let mut t = vec![0.0; n + 1];
    t[0] = rho;
    for i in 1..=n {
        let mut s = 0.5 * masses[i - 1] * t[0];
        if i >= 2 {
            s += c[1..i].iter().zip(t[1..i].iter().rev()).map(|(a, b)| a * b).sum::<f64>();
        }
        t[i] = rho * (excess_tail[i] + s) / diag;
    }
    t
}

impl StationaryTable {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x_max(&self) -> f64 {
        (self.tail.len() - 1) as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tail.is_empty()
    }

    pub fn err_bound(&self) -> f64 {
        self.err_bound
    }

    /// `P(M >= i h)` for `i >= 1` and `rho` at zero.
    pub fn tail_values(&self) -> &[f64] {
        &self.tail
    }

    /// `P(M < i h)`.
    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    /// Scale function `W = cdf / (1 - rho)` on the grid.
    pub fn w_values(&self) -> &[f64] {
        &self.w
    }

    pub fn logw_values(&self) -> &[f64] {
        &self.logw
    }

    pub fn grid_x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    fn check(&self, x: f64, lo: f64, hi: f64) -> Result<()> {
        if x.is_nan() || x < lo - 1e-12 || x > hi + 1e-9 * hi.max(1.0) {
            return Err(Error::OutOfGrid { x, lo, hi, err_bound: self.err_bound });
        }
        Ok(())
    }

    /// `P(M > x)` by linear interpolation.
    pub fn tail_at(&self, x: f64) -> Result<f64> {
        self.check(x, 0.0, self.x_max())?;
        Ok(interpolate(&self.tail, self.h, x))
    }

    /// `P(M < x)` by linear interpolation.
    pub fn cdf_at(&self, x: f64) -> Result<f64> {
        self.check(x, 0.0, self.x_max())?;
        Ok(1.0 - interpolate(&self.tail, self.h, x))
    }

    pub fn density_at(&self, x: f64) -> Result<f64> {
        self.check(x, 0.0, self.x_max())?;
        Ok(interpolate(&self.density, self.h, x))
    }

    /// `W(x)`, zero for `x < 0`.
    pub fn w_at(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        self.check(x, 0.0, self.x_max())?;
        Ok(interpolate(&self.w, self.h, x))
    }

    /// `P(M ∈ [x, x + window))`.
    pub fn stationary_local(&self, x: f64, window: f64) -> Result<f64> {
        if !(window >= 0.0) {
            return Err(invalid("window must be non-negative"));
        }
        self.check(x, 0.0, self.x_max())?;
        self.check(x + window, 0.0, self.x_max())?;
        if window == 0.0 {
            return Ok(0.0);
        }
        Ok(interpolate(&self.tail, self.h, x) - interpolate(&self.tail, self.h, x + window))
    }

    /// `P(M_tau > x) = (1/lambda) d/dx log P(M < x)`, from the density table.
    pub fn mtau_tail(&self, x: f64) -> Result<f64> {
        self.check(x, self.h, self.x_max() - self.h)?;
        let f = interpolate(&self.density, self.h, x);
        let c = 1.0 - interpolate(&self.tail, self.h, x);
        Ok(f / (self.params.lambda() * c))
    }

    /// Writes `x,cdf,density,w,logw` rows after a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# rho={}; law={}; h={}; x_max={}; err_bound={:e}",
            self.params.rho(),
            self.params.law(),
            self.h,
            self.x_max(),
            self.err_bound
        )?;
        writeln!(out, "x,cdf,density,w,logw")?;
        for i in 0..self.len() {
            writeln!(out, "{},{},{},{},{}", self.grid_x(i), self.cdf[i], self.density[i], self.w[i], self.logw[i])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::JumpLaw;

    fn mm1(rho: f64, h: f64, x_max: f64) -> StationaryTable {
        let p = ModelParams::new(rho, JumpLaw::exponential(1.0).unwrap()).unwrap();
        build_stationary(&p, Grid::new(h, x_max), 1e-4).unwrap()
    }

    #[test]
    fn mm1_closed_form() {
        let t = mm1(0.5, 0.005, 20.0);
        let exact = 1.0 - 0.5 * (-1.0f64).exp();
        assert!((t.cdf_at(2.0).unwrap() - exact).abs() < 1e-6);
        assert_eq!(t.cdf_at(0.0).unwrap(), 0.5);
        assert!(t.err_bound() < 1e-5);
        // density of the continuous part: rho (1 - rho) e^{-(1-rho) x}
        let d = t.density_at(2.0).unwrap();
        assert!((d - 0.25 * (-1.0f64).exp()).abs() < 1e-6, "{d}");
    }

    #[test]
    fn local_probability_and_mtau() {
        let t = mm1(0.5, 0.01, 20.0);
        let local = t.stationary_local(2.0, 1.0).unwrap();
        assert!((local - 0.5 * ((-1.0f64).exp() - (-1.5f64).exp())).abs() < 1e-6);
        assert_eq!(t.stationary_local(2.0, 0.0).unwrap(), 0.0);
        let e = (-1.0f64).exp();
        let m = t.mtau_tail(2.0).unwrap();
        assert!((m - 0.5 * e / (1.0 - 0.5 * e)).abs() < 1e-5, "{m}");
    }

    #[test]
    fn out_of_grid_is_reported() {
        let t = mm1(0.5, 0.1, 10.0);
        assert!(matches!(t.cdf_at(11.0), Err(Error::OutOfGrid { .. })));
        assert!(matches!(t.mtau_tail(0.0), Err(Error::OutOfGrid { .. })));
        assert!(t.stationary_local(9.5, 1.0).is_err());
    }

    #[test]
    fn near_critical_grid_rule() {
        let p = ModelParams::new(0.96, JumpLaw::exponential(1.0).unwrap()).unwrap();
        assert!(matches!(build_stationary(&p, Grid::new(0.1, 200.0), 1e-3), Err(Error::GridTooShort(_))));
        assert!(build_stationary(&p, Grid::new(0.1, 250.0), 1e-3).is_ok());
    }

    #[test]
    fn coarse_step_fails_tolerance() {
        let p = ModelParams::new(0.9, JumpLaw::lomax(2.5).unwrap()).unwrap();
        assert!(matches!(build_stationary(&p, Grid::new(1.0, 100.0), 1e-12), Err(Error::ToleranceNotMet { .. })));
    }
}
