use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ptf_prg::exec::Execution;
use ptf_prg::harness::{fooling_test, FoolingConfig, FoolingReport, Ptf};
use ptf_prg::poly::{parse_corpus, random_corpus, Basis};
use ptf_prg::prg::{plan_params, seed_length, MasterSeed, Overrides, Prg, PrgParams, SeedLayout, DEFAULT_MASTER_SEED};
use ptf_prg::report::{Check, Document, Header};

mod config;
mod lab;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] ptf_prg::Error),
    /// A verdict failed; the report has already been written.
    #[error("one or more checks failed")]
    CheckFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed => 1,
            CliError::Usage(_) | CliError::Core(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

/// Generator and verification lab for Gaussian polynomial threshold functions.
#[derive(Parser)]
#[command(name = "ptfprg", version)]
struct Cli {
    /// Flat key = value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed as hex.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// File holding the master seed as hex.
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,
    /// Output file (binary stream for gen, JSON otherwise; default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Override any configuration key, e.g. --set N=256.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print planned generator parameters and the seed layout.
    Plan(ParamArgs),
    /// Write generator draws as little-endian f64, draw-major.
    Gen {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of draws.
        #[arg(long)]
        count: Option<u64>,
    },
    /// Measure how well the generator fools a corpus of threshold functions.
    Fool {
        #[command(flatten)]
        params: ParamArgs,
        /// Corpus file (text or JSON).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        draws_prg: Option<u64>,
        #[arg(long)]
        draws_gauss: Option<u64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Always estimate the Gaussian side by Monte Carlo.
        #[arg(long)]
        no_analytic: bool,
    },
    /// Run named verification checks.
    Lab {
        /// Comma-separated check names, or "all".
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        corpus_size: Option<usize>,
        /// Also write the check's grid table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a corpus of random unit-norm polynomials.
    Corpus {
        #[arg(long)]
        n: Option<usize>,
        /// Degrees cycle through 1..=d.
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        corpus_size: Option<usize>,
        /// monomial or hermite.
        #[arg(long)]
        basis: Option<String>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Use M = w when the required precision exceeds the field width.
    #[arg(long)]
    accept_capped_precision: bool,
}

impl ParamArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.set_opt("n", self.n);
        cfg.set_opt("d", self.d);
        cfg.set_opt("eps", self.eps);
        cfg.set_opt("c", self.c);
        if self.accept_capped_precision {
            cfg.set_opt("accept_capped_precision", Some(true));
        }
    }
}

/// Default slack exponent when none is configured.
const DEFAULT_C: f64 = 4.0;

fn overrides(cfg: &RunConfig) -> Result<Overrides, CliError> {
    Ok(Overrides {
        blocks: cfg.get("N")?,
        k: cfg.get("k")?,
        precision: cfg.get("M")?,
        w: cfg.get("w")?,
        base: cfg.get("B")?,
        c0: cfg.get("c0")?,
        accept_capped_precision: cfg.get_or("accept_capped_precision", false)?,
    })
}

fn params(cfg: &RunConfig, n: Option<usize>, accept_capped: bool) -> Result<PrgParams, CliError> {
    let n = match n {
        Some(n) => n,
        None => cfg.require("n")?,
    };
    let mut ov = overrides(cfg)?;
    ov.accept_capped_precision |= accept_capped;
    Ok(plan_params(
        n,
        cfg.require("d")?,
        cfg.require("eps")?,
        cfg.get_or("c", DEFAULT_C)?,
        &ov,
    )?)
}

fn master_seed(cfg: &RunConfig) -> Result<MasterSeed, CliError> {
    if let Some(path) = cfg.raw("seed_file") {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read seed file {path}: {e}")))?;
        return Ok(MasterSeed::from_hex(text.trim())?);
    }
    Ok(MasterSeed::from_hex(cfg.raw("seed").unwrap_or(DEFAULT_MASTER_SEED))?)
}

fn execution(cfg: &RunConfig) -> Result<Execution, CliError> {
    match cfg.raw("exec").unwrap_or("parallel") {
        "parallel" => Ok(Execution::Parallel),
        "sequential" => Ok(Execution::Sequential),
        other => Err(CliError::Usage(format!(
            "exec must be parallel or sequential, got '{other}'"
        ))),
    }
}

fn write_text(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn emit<T: Serialize>(cfg: &RunConfig, header: Header, body: T) -> Result<(), CliError> {
    write_text(cfg.raw("out"), &Document { header, body }.to_json())
}

fn header(cmd: &str, cfg: &RunConfig, seed: &MasterSeed) -> Header {
    Header::new(cmd, cfg.values().clone(), &seed.to_hex())
}

#[derive(Serialize)]
struct PlanBody<'a> {
    params: &'a PrgParams,
    layout: SeedLayout,
    /// k·N·M, the order-of-magnitude seed count next to the exact total.
    nominal_bits: u64,
}

#[derive(Serialize)]
struct GenBody<'a> {
    params: &'a PrgParams,
    layout: &'a SeedLayout,
    count: u64,
    bytes: u64,
    format: &'static str,
    out: &'a str,
}

#[derive(Serialize)]
struct FoolBody<'a> {
    params: &'a PrgParams,
    config: FoolingConfig,
    corpus: &'a str,
    reports: Vec<FoolingReport>,
    all_pass: bool,
}

#[derive(Serialize)]
struct LabBody {
    checks: Vec<Check>,
    all_pass: bool,
}

/// Draws generated per write while streaming to disk.
const GEN_CHUNK: u64 = 4096;

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.set_opt("seed", cli.seed.as_deref());
    cfg.set_opt("seed_file", cli.seed_file.as_ref().map(|p| p.display()));
    cfg.set_opt("out", cli.out.as_ref().map(|p| p.display()));
    if cli.sequential {
        cfg.set_opt("exec", Some("sequential"));
    }
    let cmd = &cli.command;
    match cmd {
        Command::Plan(p) | Command::Gen { params: p, .. } | Command::Fool { params: p, .. } => p.apply(&mut cfg),
        Command::Lab {
            check,
            n,
            d,
            theta,
            samples,
            corpus_size,
            csv,
        } => {
            cfg.set_opt("check", check.as_deref());
            cfg.set_opt("n", *n);
            cfg.set_opt("d", *d);
            cfg.set_opt("theta", *theta);
            cfg.set_opt("samples", *samples);
            cfg.set_opt("corpus_size", *corpus_size);
            cfg.set_opt("csv", csv.as_ref().map(|p| p.display()));
        }
        Command::Corpus {
            n,
            d,
            corpus_size,
            basis,
        } => {
            cfg.set_opt("n", *n);
            cfg.set_opt("d", *d);
            cfg.set_opt("corpus_size", *corpus_size);
            cfg.set_opt("basis", basis.as_deref());
        }
    }
    if let Command::Gen { count, .. } = cmd {
        cfg.set_opt("count", *count);
    }
    if let Command::Fool {
        corpus,
        draws_prg,
        draws_gauss,
        threshold,
        no_analytic,
        ..
    } = cmd
    {
        cfg.set_opt("corpus", corpus.as_ref().map(|p| p.display()));
        cfg.set_opt("draws_prg", *draws_prg);
        cfg.set_opt("draws_gauss", *draws_gauss);
        cfg.set_opt("threshold", *threshold);
        if *no_analytic {
            cfg.set_opt("analytic", Some(false));
        }
    }
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }

    let seed = master_seed(&cfg)?;
    let exec = execution(&cfg)?;

    match cmd {
        Command::Plan(_) => {
            // Printing a plan never consumes it, so an over-wide precision
            // is reported through the capped flag rather than refused.
            let params = params(&cfg, None, true)?;
            let layout = seed_length(&params);
            let body = PlanBody {
                nominal_bits: SeedLayout::nominal_bits(&params),
                layout,
                params: &params,
            };
            let h = header("plan", &cfg, &seed).with_provenance(params.provenance.clone());
            emit(&cfg, h, body)
        }
        Command::Gen { .. } => {
            let params = params(&cfg, None, false)?;
            let out = cfg
                .raw("out")
                .ok_or_else(|| CliError::Usage("gen needs --out for the binary stream".into()))?
                .to_string();
            let count: u64 = cfg.get_or("count", 1)?;
            let prg = Prg::new(params.clone())?;
            write_stream(&prg, &seed, count, exec, Path::new(&out))?;
            let body = GenBody {
                params: &params,
                layout: prg.layout(),
                count,
                bytes: count * params.n as u64 * 8,
                format: "f64-le, draw-major",
                out: &out,
            };
            let h = header("gen", &cfg, &seed).with_provenance(params.provenance.clone());
            write_text(None, &Document { header: h, body }.to_json())?;
            Ok(())
        }
        Command::Fool { .. } => {
            let path = cfg
                .raw("corpus")
                .ok_or_else(|| CliError::Usage("fool needs --corpus".into()))?
                .to_string();
            let text =
                std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("cannot read corpus {path}: {e}")))?;
            let corpus = parse_corpus(&text)?;
            let n = corpus.entries.first().map(|e| e.poly.n());
            let n = if cfg.contains("n") { None } else { n };
            let params = params(&cfg, n, false)?;
            let prg = Prg::new(params.clone())?;
            let defaults = FoolingConfig::default();
            let fc = FoolingConfig {
                draws_prg: cfg.get_or("draws_prg", defaults.draws_prg)?,
                draws_gauss: cfg.get_or("draws_gauss", defaults.draws_gauss)?,
                threshold: cfg.get_or("threshold", defaults.threshold)?,
                gauss_seed: cfg.get_or("gauss_seed", seed.sub_seed(0))?,
                analytic: cfg.get_or("analytic", true)?,
            };
            let reports = fooling_test(&prg, &seed, &Ptf::from_corpus(&corpus), &fc, exec)?;
            let all_pass = reports.iter().all(|r| r.verdict);
            let h = header("fool", &cfg, &seed).with_provenance(params.provenance.clone());
            emit(
                &cfg,
                h,
                FoolBody {
                    params: &params,
                    config: fc,
                    corpus: &path,
                    reports,
                    all_pass,
                },
            )?;
            if all_pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed)
            }
        }
        Command::Lab { .. } => {
            let names = lab::parse_checks(cfg.raw("check").unwrap_or("all"))?;
            let ctx = lab::LabContext {
                cfg: &cfg,
                seed: seed.sub_seed(1),
                exec,
            };
            let mut checks = Vec::new();
            let mut tables = Vec::new();
            for name in names {
                let out = lab::run(name, &ctx)?;
                checks.extend(out.checks);
                if let Some(t) = out.csv {
                    tables.push(format!("# {name}\n{t}"));
                }
            }
            if let Some(path) = cfg.raw("csv") {
                std::fs::write(path, tables.join("\n"))
                    .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?;
            }
            let all_pass = checks.iter().all(|c| c.verdict);
            emit(&cfg, header("lab", &cfg, &seed), LabBody { checks, all_pass })?;
            if all_pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed)
            }
        }
        Command::Corpus { .. } => {
            let basis = match cfg.raw("basis").unwrap_or("hermite") {
                "hermite" => Basis::Hermite,
                "monomial" => Basis::Monomial,
                other => {
                    return Err(CliError::Usage(format!(
                        "basis must be hermite or monomial, got '{other}'"
                    )))
                }
            };
            let corpus = random_corpus(
                cfg.require("n")?,
                cfg.require("d")?,
                cfg.get_or("corpus_size", 10)?,
                seed.sub_seed(2),
                basis,
            )?;
            write_text(cfg.raw("out"), &corpus.to_json())
        }
    }
}

fn write_stream(prg: &Prg, seed: &MasterSeed, count: u64, exec: Execution, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let mut start = 0;
    while start < count {
        let end = (start + GEN_CHUNK).min(count);
        for x in prg.stream_range(seed, start..end, exec) {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
        start = end;
    }
    w.flush().map_err(io)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
