//! Oracles shared by the integration tests. Deliberately independent of the
//! library's own quadrature and series code.
#![allow(dead_code)]

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_x^∞ g` through `t = ln(1 + u - x)`, suited to power-law integrands.
/// The range in `t` is cut at `t_max`.
pub fn simpson_log_tail<F: Fn(f64) -> f64>(g: F, x: f64, t_max: f64, n: usize) -> f64 {
    simpson(|t| g(x + t.exp_m1()) * t.exp(), 0.0, t_max, n)
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisection<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let flo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `W^(q)(x)` for Exp(1) jumps at rate `lambda` under unit drain, from the
/// two roots of `psi(beta) = q` with `psi(beta) = beta - lambda beta / (1 + beta)`.
pub fn exp_q_scale(lambda: f64, q: f64, x: f64) -> f64 {
    // (beta + 1)(psi - q) = beta^2 + (1 - lambda - q) beta - q
    let b = 1.0 - lambda - q;
    let d = (b * b + 4.0 * q).sqrt();
    let roots = [(-b + d) / 2.0, (-b - d) / 2.0];
    roots
        .iter()
        .map(|&r| {
            let dpsi = 1.0 - lambda / ((r + 1.0) * (r + 1.0));
            (r * x).exp() / dpsi
        })
        .sum()
}
