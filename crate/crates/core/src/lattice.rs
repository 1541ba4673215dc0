//! Distributions discretized on a uniform grid, and grid convolutions.
//!
//! Two kinds of convolution live here. [`LatticeDistribution::convolve`] acts
//! on cell masses (a probability mass function on `{0, h, 2h, ...}` with an
//! explicit mass beyond the grid). [`trapezoid_convolution`] acts on sampled
//! functions and approximates `∫_0^x a(y) b(x-y) dy` by the trapezoid rule.
//! Both have a direct `O(n^2)` path and an FFT path.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::distributions::ExcessLaw;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    #[default]
    Direct,
    Fft,
}

/// Cell masses over `[i h, (i+1) h)` plus the mass beyond `n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    h: f64,
    masses: Vec<f64>,
    tail_mass: f64,
}

impl LatticeDistribution {
    pub fn new(h: f64, masses: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("grid step must be positive"));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) || !(tail_mass >= 0.0) {
            return Err(invalid("lattice masses must be non-negative"));
        }
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("lattice masses sum to {total}, not 1")));
        }
        Ok(LatticeDistribution { h, masses, tail_mass })
    }

    /// Exact cell masses of an excess law on `n` cells.
    pub fn from_excess(law: &ExcessLaw, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || n == 0 {
            return Err(invalid("need h > 0 and at least one cell"));
        }
        let masses: Vec<f64> = (0..n).map(|i| law.mass(i as f64 * h, (i + 1) as f64 * h)).collect();
        let tail_mass = law.tail(n as f64 * h);
        // Per-cell quadrature can leave a residue of order 1e-15 per cell.
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        let scale = 1.0 / total;
        Ok(LatticeDistribution { h, masses: masses.into_iter().map(|m| m * scale).collect(), tail_mass: tail_mass * scale })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Unit mass at zero on `n` cells.
    pub fn point_mass_at_zero(h: f64, n: usize) -> Self {
        let mut masses = vec![0.0; n.max(1)];
        masses[0] = 1.0;
        LatticeDistribution { h, masses, tail_mass: 0.0 }
    }

    /// Distribution of the sum of independent copies, truncated to this
    /// lattice's length; mass pushed past the grid joins `tail_mass`.
    pub fn convolve(&self, other: &LatticeDistribution, method: ConvolutionMethod) -> Result<Self> {
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(invalid("lattices have different steps"));
        }
        let n = self.len();
        let mut masses = match method {
            ConvolutionMethod::Direct => convolve_direct(&self.masses, &other.masses, n),
            ConvolutionMethod::Fft => convolve_fft(&self.masses, &other.masses, n),
        };
        for m in &mut masses {
            *m = m.max(0.0);
        }
        let inside: f64 = masses.iter().sum();
        Ok(LatticeDistribution { h: self.h, masses, tail_mass: (1.0 - inside).max(0.0) })
    }

    /// `P(X < i h)` for `i = 0..=n`.
    pub fn cdf_at_nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &m in &self.masses {
            acc += m;
            out.push(acc);
        }
        out
    }
}

/// Result of [`geometric_compound`].
#[derive(Debug, Clone)]
pub struct CompoundSeries {
    /// `P(M < i h)` for `i = 0..=n`.
    pub cdf: Vec<f64>,
    pub terms: usize,
    pub err_bound: f64,
}

/// Geometric compound `sum_{n>=0} (1-rho) rho^n P(S_n < x)` of a lattice law.
///
/// Truncates at the first `N` with `rho^{N+1} / (1-rho) < tol`. The error
/// bound adds that remainder to `N` times the base law's beyond-grid mass.
pub fn geometric_compound(
    base: &LatticeDistribution,
    rho: f64,
    tol: f64,
    method: ConvolutionMethod,
) -> Result<CompoundSeries> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho must lie in (0, 1)"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol must lie in (0, 1)"));
    }
    let n = base.len();
    let mut cdf = vec![0.0; n + 1];
    let mut power = LatticeDistribution::point_mass_at_zero(base.h, n);
    let mut weight = 1.0 - rho;
    let mut terms = 0usize;
    loop {
        for (c, p) in cdf.iter_mut().zip(power.cdf_at_nodes()) {
            *c += weight * p;
        }
        let remainder = rho.powi(terms as i32 + 1) / (1.0 - rho);
        if remainder < tol {
            break;
        }
        if terms > 100_000 {
            return Err(Error::Numerical("geometric series did not reach tolerance".into()));
        }
        power = power.convolve(base, method)?;
        weight *= rho;
        terms += 1;
    }
    let remainder = rho.powi(terms as i32 + 1) / (1.0 - rho);
    Ok(CompoundSeries { cdf, terms, err_bound: remainder + terms as f64 * base.tail_mass })
}

/// First `n_out` entries of the discrete convolution of `a` and `b`.
pub fn convolve_direct(a: &[f64], b: &[f64], n_out: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_out];
    if a.is_empty() || b.is_empty() {
        return out;
    }
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(b.len() - 1);
        let hi = i.min(a.len() - 1);
        if lo > hi {
            continue;
        }
        *o = (lo..=hi).map(|j| a[j] * b[i - j]).sum();
    }
    out
}

/// Same as [`convolve_direct`] through a zero-padded FFT.
pub fn convolve_fft(a: &[f64], b: &[f64], n_out: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() || n_out == 0 {
        return vec![0.0; n_out];
    }
    let la = a.len().min(n_out);
    let lb = b.len().min(n_out);
    let size = (la + lb - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a[..la].iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b[..lb].iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    let mut out: Vec<f64> = fa.iter().take(n_out).map(|c| c.re * scale).collect();
    out.resize(n_out, 0.0);
    out
}

/// Trapezoid approximation of `c(x_i) = ∫_0^{x_i} a(y) b(x_i - y) dy` for
/// functions sampled at `x_i = i h`, `i = 0..n` (`n = min(len)`).
pub fn trapezoid_convolution(a: &[f64], b: &[f64], h: f64, method: ConvolutionMethod) -> Vec<f64> {
    let n = a.len().min(b.len());
    let d = match method {
        ConvolutionMethod::Direct => convolve_direct(&a[..n], &b[..n], n),
        ConvolutionMethod::Fft => convolve_fft(&a[..n], &b[..n], n),
    };
    (0..n).map(|i| h * (d[i] - 0.5 * a[0] * b[i] - 0.5 * a[i] * b[0])).collect()
}

/// Cumulative trapezoid integral `∫_0^{x_i} f` of samples `f(i h)`.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    for (i, &v) in f.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (f[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Linear interpolation of grid samples at `x ∈ [0, (len-1) h]`.
pub fn interpolate(values: &[f64], h: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = (x / h).max(0.0);
    let i = pos.floor() as usize;
    if i + 1 >= n {
        return values[n - 1];
    }
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}
