use crate::error::{invalid, Error, Result};
use crate::lattice::{trapezoid_convolution, ConvolutionMethod};

use super::StationaryTable;

/// Exact integral over `[a, b]` of the piecewise-linear interpolant of
/// samples `v(i h)`.
fn integrate_samples(v: &[f64], h: f64, a: f64, b: f64) -> f64 {
    let at = |x: f64| crate::lattice::interpolate(v, h, x);
    let ia = (a / h).ceil() as usize;
    let ib = (b / h).floor() as usize;
    if ia > ib {
        return 0.5 * (b - a) * (at(a) + at(b));
    }
    let mut s = 0.5 * (ia as f64 * h - a) * (at(a) + v[ia]);
    for i in ia..ib {
        s += 0.5 * h * (v[i] + v[i + 1]);
    }
    s + 0.5 * (b - ib as f64 * h) * (v[ib] + at(b))
}

impl StationaryTable {
    /// `P(S*_n ∈ [x, x+T)) / (n P(B* ∈ [x - (n-1) mu, x - (n-1) mu + T)))`
    /// where `S*_n` sums `n` independent excess variables.
    ///
    /// The density of `S*_n` is built by repeated trapezoid convolution of
    /// the excess density on this table's step.
    pub fn local_sum_ratio(&self, n: usize, x: f64, window: f64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(window > 0.0) || !(x >= 0.0) {
            return Err(invalid("need x >= 0 and a positive window"));
        }
        let law = self.params().law();
        let excess = law.excess();
        let shifted = x - (n as f64 - 1.0) * law.moments().mu;
        if shifted < 0.0 {
            return Err(invalid(format!("x - (n-1) mu = {shifted} is negative")));
        }
        if n == 1 {
            return Ok(1.0);
        }
        let h = self.h();
        let m = ((x + window) / h).ceil() as usize + 2;
        if (m - 1) as f64 * h > self.x_max() + 1e-9 {
            return Err(Error::OutOfGrid { x: x + window, lo: 0.0, hi: self.x_max(), err_bound: self.err_bound() });
        }
        let kernel: Vec<f64> = (0..m).map(|i| excess.density(i as f64 * h)).collect();
        let mut dens = kernel.clone();
        for _ in 1..n {
            dens = trapezoid_convolution(&dens, &kernel, h, ConvolutionMethod::Fft);
        }
        let num = integrate_samples(&dens, h, x, x + window);
        let den = n as f64 * excess.mass(shifted, shifted + window);
        Ok(num / den)
    }
}
