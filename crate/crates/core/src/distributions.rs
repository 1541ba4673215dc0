//! Jump-size laws `B`, their excess (integrated-tail) laws `B*`, and samplers.
//!
//! All laws live on `(0, ∞)` with `P(B > 0) = 1`. Regularly varying variants
//! require a tail index `alpha > 2` so that `E[B^2]` is finite; `alpha = 3`
//! is accepted but reported through [`JumpLaw::flags`].
//!
//! Laws are written and parsed in a small config grammar:
//!
//! ```
//! use htcp::distributions::JumpLaw;
//! let law: JumpLaw = "lomax(alpha=2.5)".parse().unwrap();
//! assert_eq!(law.to_string(), "lomax(alpha=2.5)");
//! assert!("pareto(alpha=2.5, xm=1)".parse::<JumpLaw>().is_ok());
//! assert!("lomax(alpha=1.5)".parse::<JumpLaw>().is_err());
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{bisect, integrate, integrate_to_infinity};
use crate::special::gamma_q;

const QUAD_TOL: f64 = 1e-10;

/// The parametric family of a jump law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    /// Tail `(1+x)^{-alpha}`.
    Lomax { alpha: f64 },
    /// Tail `(x/x_m)^{-alpha}` for `x >= x_m`, one below.
    Pareto { alpha: f64, x_m: f64 },
    /// Density proportional to `(1 + log(1+x))^beta (1+x)^{-alpha-1}`, so the
    /// tail is regularly varying with index `alpha` and slowly varying factor
    /// asymptotic to a multiple of `(1 + log(1+x))^beta`.
    LogPerturbedPareto { alpha: f64, beta: f64 },
    /// Exponential with the given mean. Validation only: not regularly varying.
    Exponential { mean: f64 },
}

/// First two moments of a jump law and the excess mean `mu = E[B^2] / (2 E[B])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub mu: f64,
}

/// Diagnostics attached to a law at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawFlag {
    /// `alpha == 3`: formulas apply, but the supporting proofs exclude this index.
    AlphaEqualsThree,
    /// Not regularly varying; the heavy-tail approximations do not apply.
    NotRegularlyVarying,
}

/// A validated jump-size law with cached moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpLaw {
    kind: LawKind,
    moments: Moments,
    // Q(beta + 1, alpha) for the log-perturbed family, 1 otherwise.
    norm: f64,
}

impl JumpLaw {
    pub fn new(kind: LawKind) -> Result<Self> {
        let check_alpha = |alpha: f64| -> Result<()> {
            if !alpha.is_finite() || alpha <= 2.0 {
                return Err(invalid("alpha must exceed 2"));
            }
            Ok(())
        };
        let mut norm = 1.0;
        let moments = match kind {
            LawKind::Lomax { alpha } => {
                check_alpha(alpha)?;
                let mean = 1.0 / (alpha - 1.0);
                let second = 2.0 / ((alpha - 1.0) * (alpha - 2.0));
                Moments { mean, second_moment: second, mu: second / (2.0 * mean) }
            }
            LawKind::Pareto { alpha, x_m } => {
                check_alpha(alpha)?;
                if !(x_m.is_finite() && x_m > 0.0) {
                    return Err(invalid("xm must be positive"));
                }
                let mean = alpha * x_m / (alpha - 1.0);
                let second = alpha * x_m * x_m / (alpha - 2.0);
                Moments { mean, second_moment: second, mu: second / (2.0 * mean) }
            }
            LawKind::LogPerturbedPareto { alpha, beta } => {
                check_alpha(alpha)?;
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(invalid("beta must be non-negative"));
                }
                norm = gamma_q(beta + 1.0, alpha);
                let partial = JumpLaw { kind, moments: Moments { mean: 1.0, second_moment: 1.0, mu: 1.0 }, norm };
                let mean = partial.log_perturbed_integrated_tail(0.0);
                let second = 2.0 * integrate_to_infinity(|t| t * partial.tail(t), 0.0, 1.0, QUAD_TOL).value;
                Moments { mean, second_moment: second, mu: second / (2.0 * mean) }
            }
            LawKind::Exponential { mean } => {
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(invalid("mean must be positive"));
                }
                Moments { mean, second_moment: 2.0 * mean * mean, mu: mean }
            }
        };
        Ok(JumpLaw { kind, moments, norm })
    }

    /// `∫_x^∞ P(B > t) dt` for the log-perturbed family. Integrating by
    /// parts against `(1+t)` and substituting `s = 1 + log(1+t)` leaves an
    /// incomplete gamma function.
    fn log_perturbed_integrated_tail(&self, x: f64) -> f64 {
        let LawKind::LogPerturbedPareto { alpha, beta } = self.kind else {
            unreachable!("log-perturbed law expected")
        };
        let s0 = 1.0 + x.ln_1p();
        let scale = ((beta + 1.0) * (alpha / (alpha - 1.0)).ln() - 1.0).exp();
        scale * gamma_q(beta + 1.0, (alpha - 1.0) * s0) / self.norm - (1.0 + x) * self.tail(x)
    }

    pub fn lomax(alpha: f64) -> Result<Self> {
        Self::new(LawKind::Lomax { alpha })
    }

    pub fn pareto(alpha: f64, x_m: f64) -> Result<Self> {
        Self::new(LawKind::Pareto { alpha, x_m })
    }

    pub fn log_perturbed_pareto(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(LawKind::LogPerturbedPareto { alpha, beta })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(LawKind::Exponential { mean })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean
    }

    /// Tail index, `None` for the exponential law.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            LawKind::Lomax { alpha } | LawKind::Pareto { alpha, .. } | LawKind::LogPerturbedPareto { alpha, .. } => {
                Some(alpha)
            }
            LawKind::Exponential { .. } => None,
        }
    }

    pub fn flags(&self) -> Vec<LawFlag> {
        match self.alpha() {
            Some(a) if a == 3.0 => vec![LawFlag::AlphaEqualsThree],
            Some(_) => vec![],
            None => vec![LawFlag::NotRegularlyVarying],
        }
    }

    /// Whether the slowly varying factor dominates `(log x)^alpha`, which is
    /// what the `k = 1` threshold requires.
    pub fn slowly_varying_dominates_log_power(&self) -> bool {
        matches!(self.kind, LawKind::LogPerturbedPareto { alpha, beta } if beta > alpha)
    }

    /// Lomax and exponential densities are completely monotone; Pareto has a
    /// jump at `x_m` and the log-perturbed family is not guaranteed to be.
    pub fn has_completely_monotone_density(&self) -> bool {
        matches!(self.kind, LawKind::Lomax { .. } | LawKind::Exponential { .. })
    }

    /// `P(B > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self.kind {
            LawKind::Lomax { alpha } => (1.0 + x).powf(-alpha),
            LawKind::Pareto { alpha, x_m } => {
                if x < x_m {
                    1.0
                } else {
                    (x / x_m).powf(-alpha)
                }
            }
            LawKind::LogPerturbedPareto { alpha, beta } => {
                gamma_q(beta + 1.0, alpha * (1.0 + x.ln_1p())) / self.norm
            }
            LawKind::Exponential { mean } => (-x / mean).exp(),
        }
    }

    /// Density `f_B(x)`; zero for `x < 0`.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.kind {
            LawKind::Lomax { alpha } => alpha * (1.0 + x).powf(-alpha - 1.0),
            LawKind::Pareto { alpha, x_m } => {
                if x < x_m {
                    0.0
                } else {
                    alpha / x_m * (x / x_m).powf(-alpha - 1.0)
                }
            }
            LawKind::LogPerturbedPareto { alpha, beta } => {
                let v = x.ln_1p();
                let ln_c = (beta + 1.0) * alpha.ln() - alpha - ln_gamma(beta + 1.0) - self.norm.ln();
                (ln_c + beta * (1.0 + v).ln() - (alpha + 1.0) * v).exp()
            }
            LawKind::Exponential { mean } => (-x / mean).exp() / mean,
        }
    }

    /// Left end of the support.
    pub fn support_start(&self) -> f64 {
        match self.kind {
            LawKind::Pareto { x_m, .. } => x_m,
            _ => 0.0,
        }
    }

    /// The `x` with `P(B > x) = u`, for `u ∈ (0, 1]`.
    pub fn inverse_tail(&self, u: f64) -> f64 {
        let u = u.clamp(f64::MIN_POSITIVE, 1.0);
        match self.kind {
            LawKind::Lomax { alpha } => u.powf(-1.0 / alpha) - 1.0,
            LawKind::Pareto { alpha, x_m } => x_m * u.powf(-1.0 / alpha),
            LawKind::Exponential { mean } => -mean * u.ln(),
            LawKind::LogPerturbedPareto { alpha, beta } => {
                if u >= 1.0 {
                    return 0.0;
                }
                // Solve in v = log(1+x), where the tail decays exponentially.
                let g = |v: f64| gamma_q(beta + 1.0, alpha * (1.0 + v)) / self.norm - u;
                let mut hi = 1.0;
                while g(hi) > 0.0 && hi < 1e4 {
                    hi *= 2.0;
                }
                let v = bisect(g, 0.0, hi, 0.0, 1e-14).unwrap_or(hi);
                v.exp_m1()
            }
        }
    }

    /// Exact inverse-transform sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.inverse_tail(u)
    }

    /// `E[e^{-s B}]`.
    pub fn laplace(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        match self.kind {
            LawKind::Exponential { mean } => 1.0 / (1.0 + mean * s),
            _ => {
                let a = self.support_start();
                integrate_to_infinity(|t| (-s * t).exp() * self.density(t), a, 1.0, 1e-12).value
            }
        }
    }

    pub fn excess(&self) -> ExcessLaw {
        ExcessLaw { parent: *self }
    }
}

/// The excess (integrated-tail) law `B*` with density `P(B > x) / E[B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessLaw {
    parent: JumpLaw,
}

impl ExcessLaw {
    pub fn parent(&self) -> &JumpLaw {
        &self.parent
    }

    /// `E[B*] = mu`.
    pub fn mean(&self) -> f64 {
        self.parent.moments.mu
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.parent.tail(x) / self.parent.moments.mean
    }

    /// `P(B* > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let m = self.parent.moments.mean;
        match self.parent.kind {
            LawKind::Lomax { alpha } => (1.0 + x).powf(1.0 - alpha),
            LawKind::Pareto { alpha, x_m } => {
                if x < x_m {
                    1.0 - x / m
                } else {
                    (x / x_m).powf(1.0 - alpha) / alpha
                }
            }
            LawKind::Exponential { mean } => (-x / mean).exp(),
            LawKind::LogPerturbedPareto { .. } => (self.parent.log_perturbed_integrated_tail(x) / m).clamp(0.0, 1.0),
        }
    }

    /// `P(a < B* <= b)` for `0 <= a <= b`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match self.parent.kind {
            LawKind::LogPerturbedPareto { .. } => {
                let p = &self.parent;
                integrate(|t| p.tail(t), a, b, 0.0, 1e-13).value / p.moments.mean
            }
            LawKind::Pareto { x_m, .. } if b <= x_m => (b - a) / self.parent.moments.mean,
            _ => (self.tail(a) - self.tail(b)).max(0.0),
        }
    }

    /// `E[e^{-s B*}]`.
    pub fn laplace(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        match self.parent.kind {
            LawKind::Exponential { mean } => 1.0 / (1.0 + mean * s),
            _ => {
                let p = &self.parent;
                integrate_to_infinity(|t| (-s * t).exp() * p.tail(t), 0.0, 1.0, 1e-12).value / p.moments.mean
            }
        }
    }

    /// The `x` with `P(B* > x) = u`.
    pub fn inverse_tail(&self, u: f64) -> f64 {
        let u = u.clamp(f64::MIN_POSITIVE, 1.0);
        match self.parent.kind {
            LawKind::Lomax { alpha } => u.powf(-1.0 / (alpha - 1.0)) - 1.0,
            LawKind::Pareto { alpha, x_m } => {
                if u >= 1.0 / alpha {
                    (1.0 - u) * self.parent.moments.mean
                } else {
                    x_m * (alpha * u).powf(-1.0 / (alpha - 1.0))
                }
            }
            LawKind::Exponential { mean } => -mean * u.ln(),
            LawKind::LogPerturbedPareto { .. } => {
                if u >= 1.0 {
                    return 0.0;
                }
                // Bracket in log(1+x) and bisect on the quadrature tail.
                let g = |v: f64| self.tail(v.exp_m1()) - u;
                let mut hi = 1.0;
                while g(hi) > 0.0 && hi < 1e3 {
                    hi *= 2.0;
                }
                bisect(g, 0.0, hi, 0.0, 1e-13).unwrap_or(hi).exp_m1()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.inverse_tail(u)
    }
}

impl fmt::Display for JumpLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LawKind::Lomax { alpha } => write!(f, "lomax(alpha={alpha})"),
            LawKind::Pareto { alpha, x_m } => write!(f, "pareto(alpha={alpha},xm={x_m})"),
            LawKind::LogPerturbedPareto { alpha, beta } => write!(f, "logpareto(alpha={alpha},beta={beta})"),
            LawKind::Exponential { mean } => write!(f, "exp(mean={mean})"),
        }
    }
}

impl FromStr for JumpLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_law(s)
    }
}

/// Parses `name(key=value, ...)`.
pub fn parse_law(input: &str) -> Result<JumpLaw> {
    let syntax = |reason: &str| Error::LawSyntax { input: input.to_string(), reason: reason.to_string() };
    let s = input.trim();
    let open = s.find('(').ok_or_else(|| syntax("expected `name(key=value,...)`"))?;
    if !s.ends_with(')') {
        return Err(syntax("missing closing parenthesis"));
    }
    let name = s[..open].trim().to_ascii_lowercase();
    let body = &s[open + 1..s.len() - 1];
    let mut params: Vec<(String, f64)> = Vec::new();
    for part in body.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part.split_once('=').ok_or_else(|| syntax("parameter must be `key=value`"))?;
        let key = k.trim().to_ascii_lowercase();
        let value: f64 = v.trim().parse().map_err(|_| syntax(&format!("`{}` is not a number", v.trim())))?;
        if !value.is_finite() {
            return Err(syntax(&format!("`{key}` must be finite")));
        }
        if params.iter().any(|(p, _)| *p == key) {
            return Err(syntax(&format!("duplicate parameter `{key}`")));
        }
        params.push((key, value));
    }
    let allowed: &[&str] = match name.as_str() {
        "lomax" => &["alpha"],
        "pareto" => &["alpha", "xm"],
        "logpareto" => &["alpha", "beta"],
        "exp" => &["mean"],
        _ => return Err(syntax(&format!("unknown law `{name}`"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(syntax(&format!("unknown parameter `{k}` for {name}")));
    }
    let get = |key: &str| -> Result<f64> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| syntax(&format!("missing parameter `{key}`")))
    };
    let kind = match name.as_str() {
        "lomax" => LawKind::Lomax { alpha: get("alpha")? },
        "pareto" => LawKind::Pareto { alpha: get("alpha")?, x_m: get("xm")? },
        "logpareto" => LawKind::LogPerturbedPareto { alpha: get("alpha")?, beta: get("beta")? },
        _ => LawKind::Exponential { mean: get("mean")? },
    };
    JumpLaw::new(kind)
}
