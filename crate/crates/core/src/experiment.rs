//! Batch sweeps comparing exact, asymptotic and simulated values.
//!
//! An experiment file is flat `key = value` text. `#` starts a comment and
//! `[name]` opens a section:
//!
//! ```text
//! law = lomax(alpha=2.5)
//! rho = 0.8, 0.9, 0.95
//! quantities = local, mtau
//! seed = 7
//!
//! [grid]
//! mode = threshold      # absolute | scaled | threshold
//! threshold = x_rho     # x_rho | x_tilde | x_rho_star | a_rho_star
//! k = 1.5
//! points = 20
//! span = 5
//!
//! [engine]
//! h = 0.05
//!
//! [sim]
//! replications = 100000
//! ```
//!
//! In `scaled` mode the grid values are multiplied by `1/(1-rho)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::asymptotics::{self, Thresholds};
use crate::bmax::solve_bmax_tail;
use crate::distributions::{parse_law, JumpLaw};
use crate::engine::{build_stationary, Grid, StationaryTable};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{estimate, estimate_m_infinity_vec, estimate_vec, Estimate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `P(M ∈ [x, x + window))` against its heavy-tail estimate.
    Local,
    /// `P(M > x)` against `rho/(1-rho) P(B* > x)`.
    Global,
    /// `P(M > x)` against `rho (1-rho) P(B* > x)`.
    GlobalLiteral,
    Mtau,
    Bmax,
    Tau,
    /// Scaled density `(1/(1-rho)) f_M(x)` against the exponential limit at `(1-rho) x`.
    Kingman,
    /// Mean first passage time above `x` from `X0 ~ B`, given it precedes `tau`.
    Passage,
    Thresholds,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Local => "local",
            Quantity::Global => "global",
            Quantity::GlobalLiteral => "global_literal",
            Quantity::Mtau => "mtau",
            Quantity::Bmax => "bmax",
            Quantity::Tau => "tau",
            Quantity::Kingman => "kingman",
            Quantity::Passage => "passage",
            Quantity::Thresholds => "thresholds",
        }
    }

    const ALL: [Quantity; 9] = [
        Quantity::Local,
        Quantity::Global,
        Quantity::GlobalLiteral,
        Quantity::Mtau,
        Quantity::Bmax,
        Quantity::Tau,
        Quantity::Kingman,
        Quantity::Passage,
        Quantity::Thresholds,
    ];

    fn needs_engine(self) -> bool {
        !matches!(self, Quantity::Bmax | Quantity::Thresholds)
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Quantity::ALL.into_iter().find(|q| q.name() == s).ok_or_else(|| format!("unknown quantity `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    XRho,
    XTilde,
    XRhoStar,
    ARhoStar,
}

impl ThresholdKind {
    fn pick(self, t: &Thresholds) -> f64 {
        match self {
            ThresholdKind::XRho => t.x_rho,
            ThresholdKind::XTilde => t.x_tilde,
            ThresholdKind::XRhoStar => t.x_rho_star,
            ThresholdKind::ARhoStar => t.a_rho_star,
        }
    }
}

impl FromStr for ThresholdKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "x_rho" => Ok(ThresholdKind::XRho),
            "x_tilde" => Ok(ThresholdKind::XTilde),
            "x_rho_star" => Ok(ThresholdKind::XRhoStar),
            "a_rho_star" => Ok(ThresholdKind::ARhoStar),
            _ => Err(format!("unknown threshold `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum XGrid {
    Absolute(Vec<f64>),
    /// Values in units of `1/(1-rho)`.
    Scaled(Vec<f64>),
    /// `points` log-spaced levels on `[t, span t]`, `t` the chosen threshold.
    Threshold { kind: ThresholdKind, points: usize, span: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub law: JumpLaw,
    pub rhos: Vec<f64>,
    pub quantities: Vec<Quantity>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub grid: XGrid,
    pub k: f64,
    pub k_star: f64,
    pub window: f64,
    pub h: f64,
    pub tol: f64,
    pub x_max: Option<f64>,
    pub replications: u64,
    pub workers: Option<usize>,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::SpecSyntax { line, message: message.into() }
}

fn number<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| syntax(line, format!("`{key}` expects a number, got `{v}`")))
}

fn finite(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = number(line, key, v)?;
    if !x.is_finite() {
        return Err(syntax(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn list<T>(line: usize, v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(syntax(line, "empty list entry"));
    }
    items.into_iter().map(f).collect()
}

pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut seen = std::collections::HashMap::new();
    let mut section = String::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| syntax(line, "unterminated section header"))?.trim();
            if !matches!(name, "grid" | "engine" | "sim") {
                return Err(syntax(line, format!("unknown section `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| syntax(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(syntax(line, "expected `key = value`"));
        }
        let known: &[&str] = match section.as_str() {
            "" => &["law", "rho", "quantities", "seed", "output"],
            "grid" => &["mode", "values", "threshold", "k", "k_star", "points", "span", "window"],
            "engine" => &["h", "tol", "x_max"],
            _ => &["replications", "workers"],
        };
        if !known.contains(&key) {
            return Err(syntax(line, format!("unknown key `{key}`")));
        }
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if seen.insert(full.clone(), (line, value.to_string())).is_some() {
            return Err(syntax(line, format!("duplicate key `{full}`")));
        }
    }
    let eof = last + 1;
    let get = |k: &str| seen.get(k).map(|(l, v)| (*l, v.as_str()));
    let need = |k: &str| get(k).ok_or_else(|| syntax(eof, format!("missing required key `{k}`")));

    let (l, v) = need("law")?;
    let law = parse_law(v).map_err(|e| match e {
        Error::LawSyntax { reason, .. } | Error::InvalidParameter(reason) => syntax(l, reason),
        other => syntax(l, other.to_string()),
    })?;

    let (l, v) = need("rho")?;
    let rhos = list(l, v, |s| {
        let r = finite(l, "rho", s)?;
        if !(r > 0.0 && r < 1.0) {
            return Err(syntax(l, "rho must lie in (0, 1)"));
        }
        Ok(r)
    })?;

    let (l, v) = need("quantities")?;
    let mut quantities = list(l, v, |s| s.parse::<Quantity>().map_err(|m| syntax(l, m)))?;
    quantities.sort();
    quantities.dedup();

    let seed = match get("seed") {
        Some((l, v)) => number(l, "seed", v)?,
        None => 0,
    };
    let output = get("output").map(|(_, v)| PathBuf::from(v));

    let positive = |k: &str, default: f64| -> Result<f64> {
        match get(k) {
            Some((l, v)) => {
                let x = finite(l, k, v)?;
                if !(x > 0.0) {
                    return Err(syntax(l, format!("`{k}` must be positive")));
                }
                Ok(x)
            }
            None => Ok(default),
        }
    };
    let k = positive("grid.k", 1.5)?;
    let k_star = positive("grid.k_star", 2.5)?;
    let window = positive("grid.window", 1.0)?;
    let h = positive("engine.h", 0.05)?;
    let tol = positive("engine.tol", 1e-3)?;
    if tol >= 1.0 {
        let (l, _) = get("engine.tol").expect("set when out of range");
        return Err(syntax(l, "`tol` must be below 1"));
    }
    let x_max = match get("engine.x_max") {
        Some(_) => Some(positive("engine.x_max", 0.0)?),
        None => None,
    };

    let values = |mode_line: usize| -> Result<Vec<f64>> {
        let (l, v) = get("grid.values").ok_or_else(|| syntax(mode_line, "this grid mode needs `values`"))?;
        let xs = list(l, v, |s| {
            let x = finite(l, "values", s)?;
            if !(x > 0.0) {
                return Err(syntax(l, "grid values must be positive"));
            }
            Ok(x)
        })?;
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(syntax(l, "grid values must be strictly ascending"));
        }
        Ok(xs)
    };
    let grid = match get("grid.mode") {
        None if quantities == [Quantity::Thresholds] => XGrid::Absolute(vec![]),
        None => return Err(syntax(eof, "missing required key `grid.mode`")),
        Some((l, "absolute")) => XGrid::Absolute(values(l)?),
        Some((l, "scaled")) => XGrid::Scaled(values(l)?),
        Some((l, "threshold")) => {
            let kind = match get("grid.threshold") {
                Some((tl, v)) => v.parse().map_err(|m| syntax(tl, m))?,
                None => ThresholdKind::XRho,
            };
            let points = match get("grid.points") {
                Some((pl, v)) => {
                    let n: usize = number(pl, "points", v)?;
                    if n == 0 {
                        return Err(syntax(pl, "`points` must be at least 1"));
                    }
                    n
                }
                None => return Err(syntax(l, "threshold mode needs `points`")),
            };
            let span = positive("grid.span", 5.0)?;
            if span < 1.0 {
                return Err(syntax(get("grid.span").map_or(l, |p| p.0), "`span` must be at least 1"));
            }
            XGrid::Threshold { kind, points, span }
        }
        Some((l, m)) => return Err(syntax(l, format!("unknown grid mode `{m}`"))),
    };

    let replications = match get("sim.replications") {
        Some((l, v)) => number(l, "replications", v)?,
        None => 0,
    };
    let workers = match get("sim.workers") {
        Some((l, v)) => {
            let w: usize = number(l, "workers", v)?;
            if w == 0 {
                return Err(syntax(l, "`workers` must be at least 1"));
            }
            Some(w)
        }
        None => None,
    };

    Ok(ExperimentSpec {
        law,
        rhos,
        quantities,
        seed,
        output,
        grid,
        k,
        k_star,
        window,
        h,
        tol,
        x_max,
        replications,
        workers,
    })
}

impl FromStr for ExperimentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_spec(s)
    }
}

/// One CSV row. Ratios are derived from the cells on output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub rho: f64,
    pub x: f64,
    pub exact: Option<f64>,
    pub asymptotic: Option<f64>,
    pub simulated: Option<f64>,
    pub ci_half_width: Option<f64>,
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d != 0.0 => Some(n / d),
        _ => None,
    }
}

impl Row {
    pub fn ratio_exact_asym(&self) -> Option<f64> {
        ratio(self.exact, self.asymptotic)
    }

    pub fn ratio_sim_asym(&self) -> Option<f64> {
        ratio(self.simulated, self.asymptotic)
    }
}

pub const ROW_HEADER: &str = "rho,x,exact,asymptotic,simulated,ci_half_width,ratio_exact_asym,ratio_sim_asym";

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn rows_csv(rows: &[Row]) -> String {
    let mut s = String::from(ROW_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.rho,
            r.x,
            cell(r.exact),
            cell(r.asymptotic),
            cell(r.simulated),
            cell(r.ci_half_width),
            cell(r.ratio_exact_asym()),
            cell(r.ratio_sim_asym())
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityTable {
    pub quantity: Quantity,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub rho: f64,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub quantity: Quantity,
    pub rho: f64,
    /// Levels below this are excluded from the maxima.
    pub threshold: f64,
    pub max_dev_exact: Option<f64>,
    pub max_dev_sim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub k: f64,
    pub k_star: f64,
    pub tables: Vec<QuantityTable>,
    pub thresholds: Option<Vec<ThresholdRow>>,
    pub summaries: Vec<SweepSummary>,
}

struct RhoResult {
    rows: Vec<(Quantity, Vec<Row>)>,
    thresholds: Option<Thresholds>,
    cutoff: f64,
}

fn levels(spec: &ExperimentSpec, params: &ModelParams, thr: Option<&Thresholds>) -> Result<Vec<f64>> {
    let gap = params.drift_gap();
    Ok(match &spec.grid {
        XGrid::Absolute(v) => v.clone(),
        XGrid::Scaled(v) => v.iter().map(|y| y / gap).collect(),
        XGrid::Threshold { kind, points, span } => {
            let t = thr.ok_or_else(|| Error::InvalidParameter("threshold grids need a regularly varying law".into()))?;
            let t = kind.pick(t);
            if *points == 1 {
                vec![t]
            } else {
                (0..*points).map(|i| t * span.powf(i as f64 / (*points - 1) as f64)).collect()
            }
        }
    })
}

fn engine_reach(q: Quantity, x: f64, window: f64, gap: f64) -> f64 {
    match q {
        Quantity::Local => x + window,
        Quantity::Tau => gap * x,
        _ => x,
    }
}

fn run_rho(spec: &ExperimentSpec, rho: f64) -> Result<RhoResult> {
    let params = ModelParams::new(rho, spec.law)?;
    let gap = params.drift_gap();
    let thresholds = asymptotics::thresholds(&params, spec.k, spec.k_star).ok();
    let wants_thresholds = spec.quantities.contains(&Quantity::Thresholds);
    if wants_thresholds && thresholds.is_none() {
        asymptotics::thresholds(&params, spec.k, spec.k_star)?;
    }
    let xs = levels(spec, &params, thresholds.as_ref())?;
    let cutoff = match &spec.grid {
        XGrid::Threshold { kind, .. } => thresholds.as_ref().map_or(0.0, |t| kind.pick(t)),
        _ => 0.0,
    };

    let sweeps: Vec<Quantity> = spec.quantities.iter().copied().filter(|&q| q != Quantity::Thresholds).collect();
    let table = if sweeps.iter().any(|q| q.needs_engine()) {
        let reach = sweeps
            .iter()
            .filter(|q| q.needs_engine())
            .flat_map(|&q| xs.iter().map(move |&x| engine_reach(q, x, spec.window, gap)))
            .fold(0.0f64, f64::max);
        let mut x_max = spec.x_max.unwrap_or(1.02 * reach + 2.0 * spec.h + 1.0);
        if spec.x_max.is_none() && rho >= 0.95 {
            x_max = x_max.max(10.0 / gap + 1.0);
        }
        Some(build_stationary(&params, Grid::new(spec.h, x_max), spec.tol)?)
    } else {
        None
    };

    let sims = simulate(spec, &params, &sweeps, &xs)?;
    let mut rows = Vec::new();
    for &q in &sweeps {
        let sim = sims.iter().find(|(s, _)| *s == q).map(|(_, v)| v.as_slice());
        let mut out = Vec::with_capacity(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            let (exact, asymptotic) = evaluate(q, &params, table.as_ref(), x, spec)?;
            let est = sim.and_then(|s| s[i].as_ref().ok());
            out.push(Row {
                rho,
                x,
                exact: Some(exact),
                asymptotic,
                simulated: est.map(|e| e.mean),
                ci_half_width: est.map(|e| e.half_width),
            });
        }
        rows.push((q, out));
    }
    Ok(RhoResult { rows, thresholds: if wants_thresholds { thresholds } else { None }, cutoff })
}

fn evaluate(
    q: Quantity,
    params: &ModelParams,
    table: Option<&StationaryTable>,
    x: f64,
    spec: &ExperimentSpec,
) -> Result<(f64, Option<f64>)> {
    let t = || table.expect("engine table built for this quantity");
    let gap = params.drift_gap();
    Ok(match q {
        Quantity::Local => {
            (t().stationary_local(x, spec.window)?, Some(asymptotics::approx_supremum_local(params, x, spec.window)))
        }
        Quantity::Global => (t().tail_at(x)?, Some(asymptotics::classical_global(params, x))),
        Quantity::GlobalLiteral => (t().tail_at(x)?, Some(asymptotics::approx_supremum_global(params, x))),
        Quantity::Mtau => (t().mtau_tail(x)?, Some(asymptotics::approx_mtau(params, x))),
        // The exact column is the engine's P(M_tau > (1-rho) x), the quantity
        // the busy-period tail is compared against.
        Quantity::Tau => (t().mtau_tail(gap * x)?, Some(asymptotics::approx_tau(params, x))),
        Quantity::Bmax => (solve_bmax_tail(params, x, 1e-10)?.p, Some(asymptotics::approx_bmax(params, x))),
        Quantity::Kingman => {
            (t().density_at(x)? / gap, Some(asymptotics::kingman_local_density(params, gap * x)))
        }
        Quantity::Passage => (t().expected_passage_random_start(x)?, None),
        Quantity::Thresholds => unreachable!("thresholds are not swept"),
    })
}

type SimColumn = Vec<Result<Estimate>>;

fn simulate(spec: &ExperimentSpec, params: &ModelParams, sweeps: &[Quantity], xs: &[f64]) -> Result<Vec<(Quantity, SimColumn)>> {
    if spec.replications == 0 || xs.is_empty() {
        return Ok(vec![]);
    }
    let mut config = SimConfig::new(*params, spec.replications, spec.seed);
    if let Some(w) = spec.workers {
        config = config.with_workers(w);
    }
    let n = xs.len();
    let mut out = Vec::new();

    let stationary: Vec<Quantity> = sweeps
        .iter()
        .copied()
        .filter(|q| matches!(q, Quantity::Local | Quantity::Global | Quantity::GlobalLiteral))
        .collect();
    if !stationary.is_empty() {
        let window = spec.window;
        let mut all = estimate_m_infinity_vec(&config, 2 * n, |m, slots| {
            for (i, &x) in xs.iter().enumerate() {
                slots[i] = Some(f64::from(u8::from(m > x)));
                slots[n + i] = Some(f64::from(u8::from(m >= x && m < x + window)));
            }
        })?;
        let local = all.split_off(n);
        for q in stationary {
            let col = if q == Quantity::Local { local.clone() } else { all.clone() };
            out.push((q, col));
        }
    }

    let path: Vec<Quantity> =
        sweeps.iter().copied().filter(|q| matches!(q, Quantity::Mtau | Quantity::Bmax | Quantity::Tau)).collect();
    if !path.is_empty() {
        let k = path.len();
        let cols = estimate_vec(&config, k * n, |p, slots| {
            for (j, q) in path.iter().enumerate() {
                for (i, &x) in xs.iter().enumerate() {
                    let hit = match q {
                        Quantity::Mtau => p.m_tau > x,
                        Quantity::Bmax => p.b_tau > x,
                        _ => p.tau > x,
                    };
                    slots[j * n + i] = Some(f64::from(u8::from(hit)));
                }
            }
        })?;
        let mut cols = cols.into_iter();
        for q in path {
            out.push((q, cols.by_ref().take(n).collect()));
        }
    }

    if sweeps.contains(&Quantity::Passage) {
        let col = xs
            .iter()
            .map(|&a| estimate(&config.with_passage_level(a), |p| p.sigma_a))
            .collect();
        out.push((Quantity::Passage, col));
    }
    Ok(out)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let per_rho: Vec<Result<RhoResult>> = spec.rhos.par_iter().map(|&rho| run_rho(spec, rho)).collect();
    let per_rho: Vec<RhoResult> = per_rho.into_iter().collect::<Result<_>>()?;

    let mut tables: Vec<QuantityTable> = spec
        .quantities
        .iter()
        .filter(|&&q| q != Quantity::Thresholds)
        .map(|&q| QuantityTable { quantity: q, rows: vec![] })
        .collect();
    let mut summaries = Vec::new();
    for (rho, r) in spec.rhos.iter().zip(&per_rho) {
        for (q, rows) in &r.rows {
            let kept = rows.iter().filter(|row| row.x >= r.cutoff * (1.0 - 1e-12));
            let dev = |f: fn(&Row) -> Option<f64>| {
                kept.clone().filter_map(f).map(|v| (v - 1.0).abs()).reduce(f64::max)
            };
            summaries.push(SweepSummary {
                quantity: *q,
                rho: *rho,
                threshold: r.cutoff,
                max_dev_exact: dev(Row::ratio_exact_asym),
                max_dev_sim: dev(Row::ratio_sim_asym),
            });
            let t = tables.iter_mut().find(|t| t.quantity == *q).expect("table per quantity");
            t.rows.extend_from_slice(rows);
        }
    }
    let thresholds = spec.quantities.contains(&Quantity::Thresholds).then(|| {
        spec.rhos
            .iter()
            .zip(&per_rho)
            .filter_map(|(&rho, r)| r.thresholds.map(|thresholds| ThresholdRow { rho, thresholds }))
            .collect()
    });
    Ok(ExperimentOutput { k: spec.k, k_star: spec.k_star, tables, thresholds, summaries })
}

impl ExperimentOutput {
    pub fn thresholds_csv(&self) -> Option<String> {
        let rows = self.thresholds.as_ref()?;
        let mut s = String::from("rho,k,k_star,x_rho,x_tilde,x_rho_star,a_rho_star\n");
        for r in rows {
            let t = &r.thresholds;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.rho, self.k, self.k_star, t.x_rho, t.x_tilde, t.x_rho_star, t.a_rho_star
            );
        }
        Some(s)
    }

    /// One line per (quantity, rho) sweep.
    pub fn summary_lines(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        self.summaries
            .iter()
            .map(|s| {
                format!(
                    "{} rho={} x>={:.6}: max|exact/asym-1|={} max|sim/asym-1|={}",
                    s.quantity.name(),
                    s.rho,
                    s.threshold,
                    f(s.max_dev_exact),
                    f(s.max_dev_sim)
                )
            })
            .collect()
    }

    /// Writes `<quantity>.csv` per sweep, `thresholds.csv` and `summary.txt`
    /// into `dir`, returning the paths in write order.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        for t in &self.tables {
            put(format!("{}.csv", t.quantity.name()), rows_csv(&t.rows))?;
        }
        if let Some(s) = self.thresholds_csv() {
            put("thresholds.csv".into(), s)?;
        }
        let mut summary = self.summary_lines().join("\n");
        summary.push('\n');
        put("summary.txt".into(), summary)?;
        Ok(written)
    }
}
