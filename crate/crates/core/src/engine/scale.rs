//! `q`-scale functions and two-sided exit identities.

use crate::error::{invalid, Error, Result};
use crate::lattice::{cumulative_trapezoid, interpolate, trapezoid_convolution, ConvolutionMethod};
use crate::quadrature::integrate_with_breaks;

use super::StationaryTable;

/// `W^(q)` and `Z^(q)` sampled on the table grid up to some level.
#[derive(Debug, Clone)]
pub struct QScale {
    pub q: f64,
    pub h: f64,
    pub wq: Vec<f64>,
    pub zq: Vec<f64>,
    /// Number of convolution powers summed.
    pub terms: usize,
}

impl QScale {
    pub fn wq_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            interpolate(&self.wq, self.h, x)
        }
    }

    pub fn zq_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else {
            interpolate(&self.zq, self.h, x)
        }
    }
}

// Beyond this the summands overflow long before they start to shrink.
const MAX_EXPONENT: f64 = 700.0;
const MAX_TERMS: usize = 5000;

impl StationaryTable {
    /// `W^(q) = sum_k q^k W^{(k+1)*}` on `[0, x_up]`, truncated once a term's
    /// supremum over the grid drops below `tol`.
    pub fn q_scale_series(&self, q: f64, x_up: f64, tol: f64, method: ConvolutionMethod) -> Result<QScale> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(invalid("q must be non-negative"));
        }
        if !(x_up >= 0.0) || x_up > self.x_max() + 1e-9 {
            return Err(Error::OutOfGrid { x: x_up, lo: 0.0, hi: self.x_max(), err_bound: self.err_bound() });
        }
        let h = self.h();
        let m = ((x_up / h).ceil() as usize + 2).min(self.len());
        let w = &self.w_values()[..m];
        let integral = cumulative_trapezoid(w, h)[m - 1];
        if q * integral > MAX_EXPONENT {
            return Err(Error::Divergence(format!(
                "q * ∫W = {} over [0, {}] is too large for the series",
                q * integral,
                (m - 1) as f64 * h
            )));
        }
        let mut wq = w.to_vec();
        let mut terms = 1;
        if q > 0.0 {
            let mut term = w.to_vec();
            loop {
                term = trapezoid_convolution(&term, w, h, method);
                for t in &mut term {
                    *t *= q;
                }
                for (a, b) in wq.iter_mut().zip(&term) {
                    *a += b;
                }
                terms += 1;
                let sup = term.iter().fold(0.0f64, |s, &v| s.max(v.abs()));
                if sup < tol {
                    break;
                }
                if terms > MAX_TERMS || !sup.is_finite() {
                    return Err(Error::Divergence(format!("no convergence after {terms} terms")));
                }
            }
        }
        let iw = cumulative_trapezoid(&wq, h);
        let zq = iw.iter().map(|v| 1.0 + q * v).collect();
        Ok(QScale { q, h, wq, zq, terms })
    }

    /// `(W^(q)(x), Z^(q)(x))`.
    pub fn q_scale(&self, q: f64, x: f64) -> Result<(f64, f64)> {
        if x < 0.0 {
            return Ok((0.0, 1.0));
        }
        let s = self.q_scale_series(q, x, 1e-13, ConvolutionMethod::Fft)?;
        Ok((s.wq_at(x), s.zq_at(x)))
    }

    /// `P_y(sigma(a) < tau) = 1 - W(a - y) / W(a)`.
    pub fn passage_prob(&self, y: f64, a: f64) -> Result<f64> {
        if !(a > 0.0) || a > self.x_max() + 1e-9 {
            return Err(Error::OutOfGrid { x: a, lo: 0.0, hi: self.x_max(), err_bound: self.err_bound() });
        }
        if !(y > 0.0) {
            return Err(invalid("initial level must be positive"));
        }
        if y >= a {
            return Ok(1.0);
        }
        // (W(a) - W(a - y)) / W(a) written through tails for precision.
        let ta = self.tail_at(a)?;
        let tb = self.tail_at(a - y)?;
        Ok(((tb - ta) / (1.0 - ta)).max(0.0))
    }

    /// Precomputes `W * W` and `∫W` for the exit-time identities.
    pub fn exit_problem(&self) -> ExitProblem<'_> {
        let w = self.w_values();
        let h = self.h();
        ExitProblem {
            table: self,
            w2: trapezoid_convolution(w, w, h, ConvolutionMethod::Fft),
            iw: cumulative_trapezoid(w, h),
        }
    }

    /// `E_y[sigma(a) | sigma(a) < tau]`.
    pub fn expected_passage(&self, y: f64, a: f64) -> Result<f64> {
        self.exit_problem().expected_passage(y, a)
    }

    /// `E[sigma(a) | sigma(a) < tau]` with `X0 ~ B`.
    pub fn expected_passage_random_start(&self, a: f64) -> Result<f64> {
        self.exit_problem().expected_passage_random_start(a)
    }
}

/// Scale-function data for first passage above `a` before hitting zero.
pub struct ExitProblem<'a> {
    table: &'a StationaryTable,
    w2: Vec<f64>,
    iw: Vec<f64>,
}

const NEAR_NULL: f64 = 1e-12;

impl ExitProblem<'_> {
    fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            interpolate(self.table.w_values(), self.table.h(), x)
        }
    }

    fn at(&self, v: &[f64], x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            interpolate(v, self.table.h(), x)
        }
    }

    fn check_a(&self, a: f64) -> Result<()> {
        let t = self.table;
        if !(a > 0.0) || a > t.x_max() + 1e-9 {
            return Err(Error::OutOfGrid { x: a, lo: 0.0, hi: t.x_max(), err_bound: t.err_bound() });
        }
        Ok(())
    }

    /// `P_y(sigma(a) < tau) E_y[sigma(a) | sigma(a) < tau]`, i.e.
    /// `(W(a-y) J(a) / W(a) - J(a-y)) / W(a)` with
    /// `J(u) = W(a) ∫_0^u W - (W * W)(u)`.
    fn weighted_time(&self, y: f64, a: f64) -> f64 {
        if y >= a {
            return 0.0;
        }
        let wa = self.w(a);
        let j = |u: f64| wa * self.at(&self.iw, u) - self.at(&self.w2, u);
        (self.w(a - y) * j(a) / wa - j(a - y)) / wa
    }

    pub fn expected_passage(&self, y: f64, a: f64) -> Result<f64> {
        self.check_a(a)?;
        if !(y > 0.0 && y < a) {
            return Err(invalid("expected passage needs 0 < y < a"));
        }
        let p = self.table.passage_prob(y, a)?;
        if p < NEAR_NULL {
            return Err(Error::NearNullEvent { probability: p });
        }
        Ok((self.weighted_time(y, a) / p).max(0.0))
    }

    /// Averages over `X0 ~ B`; starts at or above `a` count as immediate
    /// passage with zero time.
    pub fn expected_passage_random_start(&self, a: f64) -> Result<f64> {
        self.check_a(a)?;
        let law = *self.table.params().law();
        let wa = self.w(a);
        let breaks = [law.support_start()];
        let time = integrate_with_breaks(|y| self.weighted_time(y, a) * law.density(y), 0.0, a, &breaks, 1e-13, 1e-9);
        let miss = integrate_with_breaks(|y| self.w(a - y) / wa * law.density(y), 0.0, a, &breaks, 1e-14, 1e-10);
        let p = 1.0 - miss.value;
        if p < NEAR_NULL {
            return Err(Error::NearNullEvent { probability: p });
        }
        Ok((time.value / p).max(0.0))
    }
}
