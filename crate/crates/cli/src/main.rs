use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resalg::cohomology::{self, GaugeEntry, GaugeFunction, Lattice};
use resalg::config::{Config, CorruptXi};
use resalg::expr::{parse, simplify};
use resalg::fock::{export, schur_constant_with, Evaluator, OperatorExpr, SchurOptions};
use resalg::symplectic::TestVector;
use resalg::verify::run_suite;
use serde_json::json;

#[derive(Parser)]
#[command(name = "resalg", version, about = "Resolvent algebra engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical form of an expression
    Simplify { expr: String },
    /// Run the relation suite
    Verify(Common),
    /// Run the cocycle/coboundary correction pipeline
    Cohomology {
        #[command(flatten)]
        common: Common,
        /// Gauge file (JSON list of {"f": [..], "c": x}), or one of zero, quadratic, random
        #[arg(long, default_value = "zero")]
        gauge: String,
        /// Perturb ξ(e1, e2) by 1e-3 after extraction
        #[arg(long)]
        corrupt_xi: bool,
    },
    /// Extract the scalar of -i[G_f, G_g], or of an expression
    Schur {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "g", conflicts_with = "expr")]
        f: Option<String>,
        #[arg(long, requires = "f")]
        g: Option<String>,
        #[arg(long)]
        expr: Option<String>,
        /// Probe cutoff (levels per mode); defaults to N-2
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Evaluate an expression in the Fock representation and export it
    Eval {
        expr: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "binary")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated truncation levels, e.g. "64,128,256"
    #[arg(long)]
    trunc: Option<String>,
    #[arg(long)]
    compress: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Compact JSON output (default)
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON output
    #[arg(long)]
    pretty: bool,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Common {
    /// `clamp` lowers the compression to the smallest truncation for
    /// commands that do not use it.
    fn config(&self, clamp: bool) -> Result<Config, Failure> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = &self.trunc {
            c.truncations = t
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Usage(format!("--trunc: {e}")))?;
        }
        if let Some(m) = self.compress {
            c.compression = m;
        } else if clamp {
            if let Some(&n) = c.truncations.first() {
                c.compression = c.compression.min(n);
            }
        }
        if let Some(t) = self.tol {
            c.tolerance = t;
        }
        c.validate()?;
        Ok(c)
    }

    fn emit(&self, value: &impl serde::Serialize) -> Result<(), Failure> {
        let mut text = if self.pretty {
            serde_json::to_string_pretty(value)?
        } else {
            serde_json::to_string(value)?
        };
        text.push('\n');
        write_out(self.out.as_deref(), text.as_bytes())
    }

    fn levels(&self, c: &Config) -> usize {
        *c.truncations.last().expect("validated nonempty")
    }
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn vector(text: &str) -> Result<TestVector, Failure> {
    let v: Vec<f64> = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad vector {text:?}: {e}")))?;
    Ok(TestVector::new(v))
}

fn load_gauge(spec: &str, lattice: Lattice, seed: u64) -> Result<GaugeFunction, Failure> {
    Ok(match spec {
        "zero" => GaugeFunction::zero(lattice),
        "quadratic" => GaugeFunction::quadratic(lattice),
        "random" => GaugeFunction::random(lattice, seed),
        path => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            let entries: Vec<GaugeEntry> = serde_json::from_str(&text)?;
            GaugeFunction::from_entries(lattice, &entries)?
        }
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simplify { expr } => {
            let e = parse(&expr)?;
            println!("{}", simplify(&e));
        }
        Command::Verify(common) => {
            let config = common.config(false)?;
            let report = run_suite(&config)?;
            common.emit(&report)?;
            let failed = report.checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(Failure::Check(format!(
                    "{failed} of {} checks failed",
                    report.checks.len()
                )));
            }
        }
        Command::Cohomology {
            common,
            gauge,
            corrupt_xi,
        } => {
            let mut config = common.config(true)?;
            let dim = config.space()?.dim();
            if corrupt_xi {
                if dim < 2 {
                    return Err(Failure::Usage("--corrupt-xi needs dimension >= 2".into()));
                }
                let lattice = Lattice::new(dim, 1);
                config.cohomology.corrupt_xi = Some(CorruptXi {
                    f: lattice.basis(0),
                    g: lattice.basis(1),
                    delta: 1e-3,
                });
            }
            let lattice = Lattice::new(dim, config.cohomology.bound);
            let gauge = load_gauge(&gauge, lattice, config.seed)?;
            let report = cohomology::run_pipeline(&config, &gauge)?;
            common.emit(&report)?;
            if let Some(stage) = &report.failed_stage {
                return Err(Failure::Check(format!("stage {stage} failed")));
            }
        }
        Command::Schur {
            common,
            f,
            g,
            expr,
            cutoff,
        } => {
            let config = common.config(true)?;
            let levels = common.levels(&config);
            let rep = config.rep(levels)?;
            let cutoff = cutoff.unwrap_or(levels.saturating_sub(2).max(1));
            let opts = SchurOptions::new(cutoff)
                .seed(config.seed)
                .tolerance(config.schur_tolerance);
            let (op, sigma) = match (f, g, expr) {
                (Some(f), Some(g), None) => {
                    let (f, g) = (vector(&f)?, vector(&g)?);
                    let sigma = config.space()?.pair(&f, &g)?;
                    let k = OperatorExpr::commutator(&OperatorExpr::generator(f), &OperatorExpr::generator(g))
                        .scale(resalg::Complex64::new(0.0, -1.0));
                    (k, Some(sigma))
                }
                (None, None, Some(e)) => (OperatorExpr::from_expr(&parse(&e)?), None),
                _ => return Err(Failure::Usage("give either --f and --g, or --expr".into())),
            };
            let mut ev = Evaluator::new(&rep);
            let report = schur_constant_with(&rep, &opts, |phi| ev.apply(&op, phi))?;
            common.emit(&json!({
                "truncation": levels,
                "cutoff": cutoff,
                "report": report,
                "sigma": sigma,
            }))?;
            if !report.is_c_number() {
                return Err(Failure::Check(format!(
                    "not a scalar: deviation {:e} above {:e}",
                    report.max_deviation, report.tolerance
                )));
            }
        }
        Command::Eval { expr, common, format } => {
            let config = common.config(true)?;
            let rep = config.rep(common.levels(&config))?;
            let op = OperatorExpr::from_expr(&parse(&expr)?);
            let mut ev = Evaluator::new(&rep);
            let m = match common.compress {
                Some(c) => ev.compressed(&op, c)?,
                None => ev.full(&op)?,
            };
            match format {
                Format::Binary => {
                    let path = common
                        .out
                        .as_deref()
                        .ok_or_else(|| Failure::Usage("binary export needs --out".into()))?;
                    let mut buf = Vec::new();
                    export::write_binary(&m, &mut buf)?;
                    write_out(Some(path), &buf)?;
                }
                Format::Json => common.emit(&export::MatrixJson::from(&m))?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
