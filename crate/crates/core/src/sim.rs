//! Exact event-driven simulation of `X(t) = X0 + sum of jumps - t` up to the
//! first hitting time of zero, and a direct sampler for the all-time
//! supremum.
//!
//! Replication `i` draws from its own ChaCha8 stream: the generator is keyed
//! by `master_seed` and the stream id is set to `i`. Replications are grouped
//! in fixed chunks whose partial statistics are merged in chunk order, so an
//! estimate depends only on `(master_seed, replications)` and not on the
//! number of worker threads.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

const CHUNK: u64 = 4096;

/// Functionals of one path on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionals {
    pub tau: f64,
    /// `sup X(t)` over `[0, tau]`.
    pub m_tau: f64,
    /// Largest jump, counting the initial level when it is a jump `B0`.
    pub b_tau: f64,
    /// Jumps after time zero.
    pub n_jumps: u64,
    pub x0: f64,
    /// `X0` plus the sum of all jumps; equals `tau` under unit drain.
    pub total_input: f64,
    /// First time the level is at or above the passage level, when that
    /// happens before `tau`.
    pub sigma_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialLevel {
    /// `X0 ~ B`, counted as jump zero.
    #[default]
    Jump,
    /// Deterministic start `y > 0`; no jump at time zero.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub replications: u64,
    pub master_seed: u64,
    pub passage_level: Option<f64>,
    pub initial: InitialLevel,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn new(params: ModelParams, replications: u64, master_seed: u64) -> Self {
        SimConfig { params, replications, master_seed, passage_level: None, initial: InitialLevel::Jump, workers: None }
    }

    pub fn with_passage_level(mut self, a: f64) -> Self {
        self.passage_level = Some(a);
        self
    }

    pub fn with_initial(mut self, initial: InitialLevel) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if let InitialLevel::Fixed(y) = self.initial {
            if !(y > 0.0 && y.is_finite()) {
                return Err(invalid("fixed initial level must be positive"));
            }
        }
        if let Some(a) = self.passage_level {
            if !(a.is_finite()) {
                return Err(invalid("passage level must be finite"));
            }
        }
        Ok(())
    }
}

/// The random stream of replication `rep`.
pub fn replication_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

/// Simulates one path with `X0 ~ B`.
pub fn simulate_path<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> PathFunctionals {
    simulate_path_with(params, InitialLevel::Jump, None, rng)
}

pub fn simulate_path_with<R: Rng + ?Sized>(
    params: &ModelParams,
    initial: InitialLevel,
    passage_level: Option<f64>,
    rng: &mut R,
) -> PathFunctionals {
    let law = params.law();
    let lambda = params.lambda();
    let (x0, b0) = match initial {
        InitialLevel::Jump => {
            let b = law.sample(rng);
            (b, b)
        }
        InitialLevel::Fixed(y) => (y, 0.0),
    };
    let mut level = x0;
    let mut t = 0.0;
    let mut m = x0;
    let mut b = b0;
    let mut n = 0u64;
    let mut input = x0;
    let mut sigma = passage_level.and_then(|a| if x0 >= a { Some(0.0) } else { None });
    loop {
        let gap: f64 = rng.sample::<f64, _>(Exp1) / lambda;
        if gap >= level {
            t += level;
            break;
        }
        t += gap;
        level -= gap;
        let jump = law.sample(rng);
        level += jump;
        input += jump;
        n += 1;
        if level > m {
            m = level;
        }
        if jump > b {
            b = jump;
        }
        if sigma.is_none() {
            if let Some(a) = passage_level {
                if level >= a {
                    sigma = Some(t);
                }
            }
        }
    }
    PathFunctionals { tau: t, m_tau: m, b_tau: b, n_jumps: n, x0, total_input: input, sigma_a: sigma }
}

/// One draw of `M = B*_1 + ... + B*_G` with `P(G = n) = (1-rho) rho^n`.
pub fn sample_m_infinity<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> f64 {
    let excess = params.law().excess();
    let mut m = 0.0;
    while rng.random::<f64>() < params.rho() {
        m += excess.sample(rng);
    }
    m
}

/// Mean with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `1.96 · sd / sqrt(n)`.
    pub half_width: f64,
    /// Replications that contributed (the conditioning event held).
    pub n: u64,
}

impl Estimate {
    /// Whether `value` lies within `k` half-widths of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.half_width
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64,
        }
    }

    fn finish(self, attempted: u64) -> Result<Estimate> {
        if self.n < 2 {
            return Err(Error::ZeroSupport { attempted, hits: self.n });
        }
        let var = self.m2 / (self.n - 1) as f64;
        Ok(Estimate { mean: self.mean, half_width: 1.96 * (var / self.n as f64).sqrt(), n: self.n })
    }
}

fn run_chunks<T: Send, F: Fn(u64, u64) -> T + Sync>(config: &SimConfig, chunk: F) -> Vec<T> {
    let chunks = config.replications.div_ceil(CHUNK);
    let body = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| chunk(c * CHUNK, ((c + 1) * CHUNK).min(config.replications)))
            .collect::<Vec<T>>()
    };
    match config.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
            Ok(pool) => pool.install(body),
            Err(_) => body(),
        },
        None => body(),
    }
}

/// Estimates `K` functionals from the same paths. `f` returns `None` for a
/// component when the path falls outside that component's conditioning
/// event.
pub fn estimate_many<const K: usize, F>(config: &SimConfig, f: F) -> Result<[Result<Estimate>; K]>
where
    F: Fn(&PathFunctionals) -> [Option<f64>; K] + Sync,
{
    let v = estimate_vec(config, K, |p, out| out.copy_from_slice(&f(p)))?;
    let mut it = v.into_iter();
    Ok(std::array::from_fn(|_| it.next().expect("length K")))
}

/// Runtime-sized form of [`estimate_many`]: `f` fills `k` slots per path.
pub fn estimate_vec<F>(config: &SimConfig, k: usize, f: F) -> Result<Vec<Result<Estimate>>>
where
    F: Fn(&PathFunctionals, &mut [Option<f64>]) + Sync,
{
    config.validate()?;
    let parts = run_chunks(config, |lo, hi| {
        let mut acc = vec![Moments::default(); k];
        let mut slots = vec![None; k];
        for rep in lo..hi {
            let mut rng = replication_rng(config.master_seed, rep);
            let path = simulate_path_with(&config.params, config.initial, config.passage_level, &mut rng);
            slots.iter_mut().for_each(|s| *s = None);
            f(&path, &mut slots);
            for (a, v) in acc.iter_mut().zip(&slots) {
                if let Some(v) = v {
                    a.push(*v);
                }
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); k];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.into_iter().map(|m| m.finish(config.replications)).collect())
}

/// Estimates `E[f(path) | f(path) is Some]`.
pub fn estimate<F>(config: &SimConfig, f: F) -> Result<Estimate>
where
    F: Fn(&PathFunctionals) -> Option<f64> + Sync,
{
    let [e] = estimate_many(config, |p| [f(p)])?;
    e
}

/// Estimates `E[f(M) | f(M) is Some]` from i.i.d. draws of `M`, on the same
/// stream layout as the path estimators.
pub fn estimate_m_infinity<F>(config: &SimConfig, f: F) -> Result<Estimate>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let mut v = estimate_m_infinity_vec(config, 1, |m, out| out[0] = f(m))?;
    v.pop().expect("one slot")
}

/// Runtime-sized form of [`estimate_m_infinity`].
pub fn estimate_m_infinity_vec<F>(config: &SimConfig, k: usize, f: F) -> Result<Vec<Result<Estimate>>>
where
    F: Fn(f64, &mut [Option<f64>]) + Sync,
{
    config.validate()?;
    let parts = run_chunks(config, |lo, hi| {
        let mut acc = vec![Moments::default(); k];
        let mut slots = vec![None; k];
        for rep in lo..hi {
            let mut rng = replication_rng(config.master_seed, rep);
            slots.iter_mut().for_each(|s| *s = None);
            f(sample_m_infinity(&config.params, &mut rng), &mut slots);
            for (a, v) in acc.iter_mut().zip(&slots) {
                if let Some(v) = v {
                    a.push(*v);
                }
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); k];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.into_iter().map(|m| m.finish(config.replications)).collect())
}

/// Streams `rep,tau,m_tau,b_tau,n_jumps[,sigma_a]` rows.
pub fn write_raw_csv<W: Write>(config: &SimConfig, mut out: W) -> Result<()> {
    config.validate()?;
    let with_sigma = config.passage_level.is_some();
    if with_sigma {
        writeln!(out, "rep,tau,m_tau,b_tau,n_jumps,sigma_a")?;
    } else {
        writeln!(out, "rep,tau,m_tau,b_tau,n_jumps")?;
    }
    for rep in 0..config.replications {
        let mut rng = replication_rng(config.master_seed, rep);
        let p = simulate_path_with(&config.params, config.initial, config.passage_level, &mut rng);
        write!(out, "{rep},{},{},{},{}", p.tau, p.m_tau, p.b_tau, p.n_jumps)?;
        if with_sigma {
            match p.sigma_a {
                Some(s) => write!(out, ",{s}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
