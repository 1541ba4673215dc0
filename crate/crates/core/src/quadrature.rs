//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite ranges.
//!
//! Finite intervals use a globally adaptive G7/K15 pair. Semi-infinite
//! ranges are cut into geometrically growing panels; once successive panel
//! contributions decay at a stable ratio (the signature of a power-law or
//! faster tail) the remaining geometric series is added in closed form.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Single G7/K15 panel: returns (Kronrod estimate, |K15 - G7|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * hl, ((resk - resg) * hl).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate falls below
/// `max(abs_tol, rel_tol * |I|)` or the panel budget is spent.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    if b < a {
        let q = integrate(f, b, a, abs_tol, rel_tol);
        return Quadrature { value: -q.value, error: q.error };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut panels = 1usize;
    while err > abs_tol.max(rel_tol * total.abs()) && panels < 4000 {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
    // Resum to shed accumulated cancellation in the running total.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error }
}

/// Integral of `f` over `[a, b]` split at interior `breaks` (ignored if outside).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Quadrature {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(b);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in pts.windows(2) {
        let q = integrate(&f, w[0], w[1], abs_tol / (pts.len() as f64), rel_tol);
        value += q.value;
        error += q.error;
    }
    Quadrature { value, error }
}

/// Integral of `f` over `[a, ∞)` for integrands that are eventually monotone
/// and decay at least like a power `t^{-p}` with `p > 1`.
///
/// `scale` sets the width of the first panel.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, rel_tol: f64) -> Quadrature {
    let mut width = scale.max(1e-3);
    let mut lo = a;
    let mut total = 0.0;
    let mut error = 0.0;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    for _ in 0..400 {
        let hi = lo + width;
        let q = integrate(&f, lo, hi, 0.0, rel_tol * 0.1);
        total += q.value;
        error += q.error;
        let p = q.value;
        if let Some(pp) = prev {
            if pp != 0.0 {
                let r = p / pp;
                let stable = prev_ratio.map(|r0| (r - r0).abs() < 0.02 * r0.abs().max(1e-3)).unwrap_or(false);
                if r > 0.0 && r < 0.999 && stable {
                    let remainder = p * r / (1.0 - r);
                    if remainder.abs() <= rel_tol * total.abs() || p.abs() <= 1e-300 {
                        return Quadrature { value: total + remainder, error: error + remainder.abs() * 0.1 };
                    }
                } else if p.abs() <= 1e-3 * rel_tol * total.abs() && pp.abs() <= 1e-3 * rel_tol * total.abs() {
                    return Quadrature { value: total, error };
                }
                prev_ratio = Some(r);
            }
        }
        if p == 0.0 && total != 0.0 && prev == Some(0.0) {
            return Quadrature { value: total, error };
        }
        prev = Some(p);
        lo = hi;
        width *= 2.0;
    }
    Quadrature { value: total, error: error + total.abs() * rel_tol }
}

/// Bisection for a root of `f` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
/// Iterates until the bracket is below `x_tol` (absolute) or `rel_tol` relative.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64, rel_tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol.max(rel_tol * mid.abs()) || mid <= lo || mid >= hi {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
