use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use htcp::asymptotics::{approx_mtau, approx_supremum_local, classical_global, thresholds};
use htcp::bmax::bmax_curve;
use htcp::experiment::{parse_spec, run_experiment};
use htcp::sim::{estimate, estimate_vec, write_raw_csv, Estimate, SimConfig};
use htcp::{build_stationary, Grid, JumpLaw, ModelParams};

#[derive(Parser)]
#[command(name = "htcp", version, about = "Exact and asymptotic functionals of a compound Poisson process with unit drain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write one CSV per quantity.
    Run {
        spec: PathBuf,
        /// Output directory. Defaults to the file's `output` key, then
        /// `$HTCP_OUT_DIR`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the transition thresholds as CSV.
    Thresholds {
        #[arg(long)]
        law: JumpLaw,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        k: f64,
        #[arg(long, default_value_t = 2.5)]
        kstar: f64,
    },
    /// Evaluate the law of the supremum at given levels.
    Exact {
        #[arg(long)]
        law: JumpLaw,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        /// Also write the whole table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo estimates of path functionals.
    Simulate {
        #[arg(long)]
        law: JumpLaw,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Levels for tail probabilities of tau, M_tau and B_tau.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Track the first passage above this level.
        #[arg(long)]
        passage: Option<f64>,
        /// Stream raw per-path functionals here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve for the tail of the largest jump before tau.
    Bmax {
        #[arg(long)]
        law: JumpLaw,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match dispatch(Cli::parse()) {
        // A closed pipe (`htcp ... | head`) is not a failure.
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => Ok(()),
        r => r,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run { spec, out: dir } => run(&spec, dir, &mut out),
        Command::Thresholds { law, rho, k, kstar } => {
            writeln!(out, "rho,k,k_star,x_rho,x_tilde,x_rho_star,a_rho_star")?;
            for r in rho {
                let t = thresholds(&ModelParams::new(r, law)?, k, kstar)?;
                writeln!(out, "{r},{k},{kstar},{},{},{},{}", t.x_rho, t.x_tilde, t.x_rho_star, t.a_rho_star)?;
            }
            Ok(())
        }
        Command::Exact { law, rho, x, h, tol, x_max, window, csv } => {
            let params = ModelParams::new(rho, law)?;
            let reach = x.iter().fold(0.0f64, |m, &v| m.max(v + window));
            let mut x_max = x_max.unwrap_or(1.02 * reach + 1.0);
            if rho >= 0.95 {
                x_max = x_max.max(10.0 / (1.0 - rho) + 1.0);
            }
            let table = build_stationary(&params, Grid::new(h, x_max), tol)?;
            writeln!(out, "# err_bound={:e}", table.err_bound())?;
            writeln!(out, "x,tail,density,local,approx_local,approx_tail,mtau,approx_mtau")?;
            for v in x {
                let mtau = table.mtau_tail(v).map(|m| m.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{v},{},{},{},{},{},{mtau},{}",
                    table.tail_at(v)?,
                    table.density_at(v)?,
                    table.stationary_local(v, window)?,
                    approx_supremum_local(&params, v, window),
                    classical_global(&params, v),
                    approx_mtau(&params, v)
                )?;
            }
            if let Some(path) = csv {
                table.write_csv(create(&path)?)?;
            }
            Ok(())
        }
        Command::Simulate { law, rho, reps, seed, workers, x, passage, csv } => {
            let mut config = SimConfig::new(ModelParams::new(rho, law)?, reps, seed);
            if let Some(w) = workers {
                config = config.with_workers(w);
            }
            if let Some(a) = passage {
                config = config.with_passage_level(a);
            }
            writeln!(out, "quantity,mean,ci_half_width,n")?;
            let means = estimate_vec(&config, 3, |p, s| {
                s[0] = Some(p.tau);
                s[1] = Some(p.m_tau);
                s[2] = Some(p.b_tau);
            })?;
            for (name, e) in ["E[tau]", "E[m_tau]", "E[b_tau]"].iter().zip(means) {
                line(&mut out, name, e)?;
            }
            let n = x.len();
            let tails = estimate_vec(&config, 3 * n, |p, s| {
                for (i, &v) in x.iter().enumerate() {
                    s[i] = Some(f64::from(u8::from(p.tau > v)));
                    s[n + i] = Some(f64::from(u8::from(p.m_tau > v)));
                    s[2 * n + i] = Some(f64::from(u8::from(p.b_tau > v)));
                }
            })?;
            for (j, e) in tails.into_iter().enumerate() {
                let name = ["P(tau>{})", "P(m_tau>{})", "P(b_tau>{})"][j / n].replace("{}", &x[j % n].to_string());
                line(&mut out, &name, e)?;
            }
            if passage.is_some() {
                line(&mut out, "P(sigma<tau)", estimate(&config, |p| Some(f64::from(u8::from(p.sigma_a.is_some())))))?;
                line(&mut out, "E[sigma|sigma<tau]", estimate(&config, |p| p.sigma_a))?;
            }
            if let Some(path) = csv {
                write_raw_csv(&config, create(&path)?)?;
            }
            Ok(())
        }
        Command::Bmax { law, rho, x, tol, csv } => {
            let mut x = x;
            x.sort_by(f64::total_cmp);
            x.dedup();
            let curve = bmax_curve(&ModelParams::new(rho, law)?, &x, tol)?;
            match csv {
                Some(path) => curve.write_csv(create(&path)?)?,
                None => curve.write_csv(&mut out)?,
            }
            Ok(())
        }
    }
}

fn line(out: &mut impl Write, name: &str, e: htcp::Result<Estimate>) -> Result<()> {
    match e {
        Ok(e) => writeln!(out, "{name},{},{},{}", e.mean, e.half_width, e.n)?,
        Err(err) => writeln!(out, "{name},,,0 # {err}")?,
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(spec_path: &Path, dir: Option<PathBuf>, out: &mut impl Write) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = parse_spec(&text).with_context(|| format!("in {}", spec_path.display()))?;
    let env = std::env::var_os("HTCP_OUT_DIR").map(PathBuf::from);
    let dir = match dir.or_else(|| spec.output.clone()).or(env) {
        Some(d) => d,
        None => bail!("no output directory: pass --out, set HTCP_OUT_DIR or add `output = ...` to the file"),
    };
    let result = run_experiment(&spec)?;
    for path in result.write_to_dir(&dir)? {
        writeln!(out, "wrote {}", path.display())?;
    }
    for s in result.summary_lines() {
        writeln!(out, "{s}")?;
    }
    Ok(())
}
