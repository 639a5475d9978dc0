//! The `modscat` command-line front end.
//!
//! Every subcommand writes CSV (comma-separated, header row, `.` decimal
//! point) or JSON to standard output or `--out`. Exit codes: 0 success,
//! 2 invalid arguments, 3 precondition violation, 4 resource cap exceeded.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use serde::Serialize;

use crate::arith::{brute_force_s, crt_solutions, factorize, s_of_q};
use crate::counting::{max_denominator, segmented_sums, AsymptoticReport, CountKind};
use crate::error::{Error, Result};
use crate::hyperbolic::{trace_sojourn, DEFAULT_TAIL_FACTOR};
use crate::lfunction::{compare_routes, residue_constant};
use crate::scatterset::{build_gq, equivalent, iterate_g, GeodesicRecord, Rational};

const SEGMENT_LEN: usize = 1 << 16;

#[derive(Debug, Parser)]
#[command(name = "modscat", version, about = "Scattering geodesics on the modular surface")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunConfig {
    /// Height T0 > 1 of the compact core
    #[arg(long = "t0", global = true, default_value_t = 2.0)]
    pub t0: f64,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Output file (default: standard output)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for parallel sieving (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Cap on the size of any single request (q, N, x or sqrt(Y)/T0)
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    pub limit: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// s_q and the solutions of p^2 = -1 (mod q). Columns: q,s_q,solutions,note
    Sq {
        /// A modulus `q` or an inclusive range `a..b`
        target: String,
        /// Use exhaustive search instead of the CRT construction
        #[arg(long)]
        brute: bool,
    },
    /// Members of G_q. Columns: q,p,sojourn,class
    Gq { q: u64 },
    /// The first N elements of G in order. Columns: q,p,sojourn,class
    #[command(name = "G", alias = "g")]
    G {
        #[arg(long)]
        first: usize,
    },
    /// Exact counts against main terms at 10, 100, ... and the final point.
    /// Columns: x,exact,predicted,ratio,abs_error
    Count {
        /// One of S, tau, psi, pi
        kind: String,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long = "Y")]
        y: Option<f64>,
    },
    /// Histogram of the first N elements of G on [0, 1).
    /// Columns: bin_left,bin_right,count,density
    Histogram {
        #[arg(long)]
        first: usize,
        #[arg(long)]
        bins: usize,
    },
    /// Measured against predicted sojourn time of the geodesic ending at w.
    /// Columns: w,q,t0,step,measured,predicted,gap
    Trace {
        w: String,
        #[arg(long, default_value_t = 0.001)]
        step: f64,
        #[arg(long = "tail-factor", default_value_t = DEFAULT_TAIL_FACTOR)]
        tail_factor: f64,
        /// Also write samples (t,x_lift,y_lift,x_reduced,y_reduced,in_core) here
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Equivalence witness for two endpoints. Columns: w1,w2,status,witness
    Equiv { w1: String, w2: String },
    /// F(s) by series, Euler product and closed form.
    /// Columns: s,f_direct,f_euler,f_closed,max_pairwise_gap
    Lfun {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 2.5, 3.0, 4.0])]
        s: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000, value_parser = parse_count)]
        truncation: u64,
    },
    /// Residue constant 4 L(1, chi) / pi^2. Columns: residue,one_over_pi,gap
    Residue,
}

/// Parses `p/q` (or an integer) into a reduced fraction in `[0, 1)`.
pub fn parse_endpoint(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidArgument(format!("expected p/q with 0 <= p/q < 1, got {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (
            p.trim().parse::<i64>().map_err(|_| bad())?,
            q.trim().parse::<i64>().map_err(|_| bad())?,
        ),
        None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
    };
    if q <= 0 || p < 0 || p >= q {
        return Err(bad());
    }
    let g = p.gcd(&q);
    Ok(Rational::new_raw(p / g, q / g))
}

/// Non-negative integer, also accepted in scientific notation (`1e6`).
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("expected a non-negative integer, got {s:?}")),
    }
}

fn parse_target(s: &str) -> Result<(u64, u64)> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| Error::InvalidArgument(format!("expected a modulus or range a..b, got {s:?}")))
    };
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let q = num(s)?;
            (q, q)
        }
    };
    if a == 0 || a > b {
        return Err(Error::InvalidArgument(format!("empty or zero-based range {s:?}")));
    }
    Ok((a, b))
}

fn check_limit(what: &str, value: u64, limit: u64) -> Result<()> {
    if value > limit {
        return Err(Error::Limit {
            what: what.into(),
            value,
            limit,
        });
    }
    Ok(())
}

fn check_t0(t0: f64) -> Result<()> {
    if !(t0 > 1.0) || !t0.is_finite() {
        return Err(Error::CoreHeight(t0));
    }
    Ok(())
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<R: Serialize>(rows: &[R], format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SqCsvRow {
    q: u64,
    s_q: u64,
    solutions: String,
    note: &'static str,
}

#[derive(Serialize)]
struct SqJsonRow {
    q: u64,
    s_q: u64,
    solutions: Vec<u64>,
    note: &'static str,
}

fn sq_row(q: u64, brute: bool) -> Result<SqJsonRow> {
    let note = if q == 1 {
        "s_1 = 1 by convention; empty residue range"
    } else {
        ""
    };
    let (s_q, solutions) = if brute {
        let w = brute_force_s(q)?;
        (if q == 1 { 1 } else { w.len() as u64 }, w.solutions)
    } else {
        let f = factorize(q)?;
        let solutions = match crt_solutions(&f) {
            Ok(w) => w.solutions,
            Err(Error::Vanishing(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        (s_of_q(q)?, solutions)
    };
    Ok(SqJsonRow {
        q,
        s_q,
        solutions,
        note,
    })
}

#[derive(Serialize)]
struct CountRow {
    x: f64,
    exact: u64,
    predicted: f64,
    ratio: f64,
    abs_error: f64,
}

impl From<&AsymptoticReport> for CountRow {
    fn from(r: &AsymptoticReport) -> Self {
        CountRow {
            x: r.x,
            exact: r.exact,
            predicted: r.predicted,
            ratio: r.ratio,
            abs_error: r.abs_error,
        }
    }
}

/// Powers of ten below `x`, then `x` itself.
fn log_checkpoints(x: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut p = 10.0;
    while p < x {
        pts.push(p);
        p *= 10.0;
    }
    pts.push(x);
    pts
}

/// Reports for `kind` at log-spaced checkpoints up to `arg`, from a
/// segmented sieve so memory stays bounded.
pub fn count_reports(kind: CountKind, arg: f64, t0: f64, limit: u64) -> Result<Vec<AsymptoticReport>> {
    if !arg.is_finite() || arg < 1.0 {
        return Err(Error::OutOfRange {
            value: arg.to_string(),
            range: "x >= 1".into(),
        });
    }
    let points = log_checkpoints(arg);
    let index = |v: f64| -> Result<u64> {
        match kind {
            CountKind::Pi => max_denominator(v, t0),
            _ => Ok(v.floor() as u64),
        }
    };
    let indices = points.iter().map(|&v| index(v)).collect::<Result<Vec<_>>>()?;
    let top = indices.iter().copied().max().unwrap_or(0);
    check_limit("sieve bound", top, limit)?;
    let sums = segmented_sums(&indices, SEGMENT_LEN)?;
    let lookup = |i: u64| sums.iter().find(|c| c.x == i).copied();
    points
        .iter()
        .zip(&indices)
        .map(|(&v, &i)| {
            let exact = match (kind, lookup(i)) {
                (_, None) => 0,
                (CountKind::S, Some(c)) => c.s,
                (CountKind::Tau, Some(c)) => c.tau,
                (CountKind::Psi | CountKind::Pi, Some(c)) => c.psi,
            };
            let t0 = (kind == CountKind::Pi).then_some(t0);
            Ok(AsymptoticReport::new(kind, v, exact, kind.main_term(v, t0)?))
        })
        .collect()
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
    pub density: f64,
}

/// Equal-width histogram of the first `n` elements of `G` on `[0, 1)`.
pub fn histogram(n: usize, bins: usize) -> Result<Vec<HistogramRow>> {
    if n == 0 || bins == 0 {
        return Err(Error::InvalidArgument("--first and --bins must be positive".into()));
    }
    let mut counts = vec![0u64; bins];
    for g in iterate_g(n) {
        let i = ((g.as_f64() * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let width = 1.0 / bins as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            bin_left: i as f64 / bins as f64,
            bin_right: (i + 1) as f64 / bins as f64,
            count,
            density: count as f64 / (n as f64 * width),
        })
        .collect())
}

#[derive(Serialize)]
struct TraceSummary {
    w: String,
    q: u64,
    t0: f64,
    step: f64,
    measured: f64,
    predicted: f64,
    gap: f64,
}

#[derive(Serialize)]
struct EquivRow {
    w1: String,
    w2: String,
    status: &'static str,
    witness: String,
}

#[derive(Serialize)]
struct ResidueRow {
    residue: f64,
    one_over_pi: f64,
    gap: f64,
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = &cli.config;
    check_t0(cfg.t0)?;
    if let Some(n) = cfg.threads {
        // an already-initialized global pool is fine to keep
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Sq { target, brute } => {
            let (a, b) = parse_target(target)?;
            check_limit("range length", b - a + 1, cfg.limit)?;
            if *brute {
                check_limit("brute-force modulus", b, cfg.limit)?;
            }
            let rows = (a..=b).map(|q| sq_row(q, *brute)).collect::<Result<Vec<_>>>()?;
            match cfg.format {
                OutputFormat::Json => emit(&rows, cfg.format, out),
                OutputFormat::Csv => {
                    let csv_rows: Vec<SqCsvRow> = rows
                        .into_iter()
                        .map(|r| SqCsvRow {
                            q: r.q,
                            s_q: r.s_q,
                            solutions: r.solutions.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                            note: r.note,
                        })
                        .collect();
                    emit(&csv_rows, cfg.format, out)
                }
            }
        }
        Command::Gq { q } => {
            check_limit("q", *q, cfg.limit)?;
            emit(&build_gq(*q)?.records(cfg.t0)?, cfg.format, out)
        }
        Command::G { first } => {
            check_limit("--first", *first as u64, cfg.limit)?;
            let rows = iterate_g(*first)
                .map(|g| g.record(cfg.t0))
                .collect::<Result<Vec<GeodesicRecord>>>()?;
            emit(&rows, cfg.format, out)
        }
        Command::Count { kind, x, y } => {
            let kind: CountKind = kind.parse()?;
            let arg = match (kind, x, y) {
                (CountKind::Pi, _, Some(y)) => *y,
                (CountKind::Pi, _, None) => return Err(Error::InvalidArgument("count pi requires --Y".into())),
                (_, Some(x), _) => *x,
                (_, None, _) => return Err(Error::InvalidArgument(format!("count {kind} requires --x"))),
            };
            let reports = count_reports(kind, arg, cfg.t0, cfg.limit)?;
            match cfg.format {
                OutputFormat::Json => emit(&reports, cfg.format, out),
                OutputFormat::Csv => emit(&reports.iter().map(CountRow::from).collect::<Vec<_>>(), cfg.format, out),
            }
        }
        Command::Histogram { first, bins } => {
            check_limit("--first", *first as u64, cfg.limit)?;
            check_limit("--bins", *bins as u64, cfg.limit)?;
            emit(&histogram(*first, *bins)?, cfg.format, out)
        }
        Command::Trace {
            w,
            step,
            tail_factor,
            samples,
        } => {
            let w = parse_endpoint(w)?;
            check_limit("q", *w.denom() as u64, cfg.limit)?;
            let trace = trace_sojourn(w, cfg.t0, *step, *tail_factor)?;
            if let Some(path) = samples {
                let mut f = open_output(&Some(path.clone()))?;
                emit(&trace.rows().collect::<Vec<_>>(), cfg.format, &mut *f)?;
            }
            let summary = TraceSummary {
                w: w.to_string(),
                q: trace.q,
                t0: cfg.t0,
                step: *step,
                measured: trace.measured_sojourn,
                predicted: trace.predicted_sojourn(),
                gap: trace.gap(),
            };
            emit(&[summary], cfg.format, out)
        }
        Command::Equiv { w1, w2 } => {
            let (a, b) = (parse_endpoint(w1)?, parse_endpoint(w2)?);
            let row = match equivalent(a, b)? {
                Some(m) => EquivRow {
                    w1: a.to_string(),
                    w2: b.to_string(),
                    status: "equivalent",
                    witness: m.to_string(),
                },
                None => EquivRow {
                    w1: a.to_string(),
                    w2: b.to_string(),
                    status: "distinct",
                    witness: String::new(),
                },
            };
            emit(&[row], cfg.format, out)
        }
        Command::Lfun { s, truncation } => {
            check_limit("--truncation", *truncation, cfg.limit)?;
            emit(&compare_routes(s, *truncation)?, cfg.format, out)
        }
        Command::Residue => {
            let c: f64 = residue_constant();
            let inv = std::f64::consts::FRAC_1_PI;
            emit(
                &[ResidueRow {
                    residue: c,
                    one_over_pi: inv,
                    gap: (c - inv).abs(),
                }],
                cfg.format,
                out,
            )
        }
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = open_output(&cli.config.out).and_then(|mut out| {
        execute(&cli, &mut *out)?;
        out.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
