//! `bdm` command-line front end.
//!
//! Every subcommand writes CSV to `--out` or standard output; summaries go to
//! standard error. Exit codes: 0 success, 1 usage, 2 verification mismatch
//! (or a violated bound under `--strict`), 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    bv_rhs, direct_bound_constant, estimate_class_constant, fit_rate, fmt_real, kappa_tail,
    lip_bound, uniform_grid, write_bound_reports, BoundReport, BvVariant, DirectConstant,
    LipParams, DEFAULT_GRID, TAIL_CONSTANT,
};
use crate::error::{Error, Result};
use crate::exactness::verify_moment_identities;
use crate::functions::parse_function_spec;
use crate::modified_basis::ModWeightConfig;
use crate::operator::{kappa, BezierDurrmeyer, OperatorParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "BDM_THREADS";
/// Errors below this make a fitted slope meaningless.
pub const NEGLIGIBLE_ERROR: f64 = 1e-10;
/// Grid used to calibrate the Lipschitz class constant when none is given.
const CLASS_GRID: usize = 401;

#[derive(Parser, Debug)]
#[command(
    name = "bdm",
    version,
    about = "Order-II Durrmeyer operators and their Bézier variant"
)]
pub struct Cli {
    /// Output file for the CSV table (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the moment identities exactly over a range of degrees.
    Verify {
        /// Degree range, e.g. `3..15`.
        #[arg(long)]
        n: String,
        /// Weight sequences: `default` or `bernstein-reduction`.
        #[arg(long, default_value = "default")]
        config: String,
    },
    /// Evaluate the operator on a uniform grid.
    Eval {
        #[arg(long)]
        f: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value = "default")]
        config: String,
    },
    /// Sup-norm errors over a list of degrees and the fitted log-log slope.
    Converge {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Degree list: `16,32,64`, `3..15` or `16..512x2`.
        #[arg(long)]
        n: String,
        /// Write a log-log SVG plot to this path.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare measured errors with theorem right-hand sides.
    Bounds {
        #[command(subcommand)]
        kind: BoundsKind,
    },
    /// Tabulate the cumulative kernel against its tail estimates.
    Kappa {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        x: f64,
        /// Number of uniformly spaced y values in [0, 1].
        #[arg(long, default_value_t = 101)]
        y_grid: usize,
        /// Constant of the tail estimate.
        #[arg(long, default_value_t = TAIL_CONSTANT)]
        c: f64,
    },
}

#[derive(Args, Debug)]
pub struct BoundsCommon {
    #[arg(long)]
    f: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Degree list.
    #[arg(long)]
    n: String,
    /// Exit with code 2 when any bound is violated.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
pub enum BoundsKind {
    /// Sup error against the Ditzian–Totik modulus at step (n+2)^(-1/2).
    Direct {
        #[command(flatten)]
        common: BoundsCommon,
    },
    /// Pointwise error against the Lipschitz-class estimate.
    Lip {
        #[command(flatten)]
        common: BoundsCommon,
        /// Comma-separated evaluation points.
        #[arg(long)]
        x: String,
        #[arg(long)]
        zeta: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha1: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha2: f64,
        /// Class constant; estimated on a grid when omitted.
        #[arg(long)]
        m_constant: Option<f64>,
    },
    /// Pointwise error against the bounded-variation estimate.
    Bv {
        #[command(flatten)]
        common: BoundsCommon,
        #[arg(long)]
        x: String,
        #[arg(long, value_enum, default_value_t = VariantChoice::Both)]
        variant: VariantChoice,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Statement,
    Proof,
    Both,
}

impl VariantChoice {
    fn variants(self) -> Vec<BvVariant> {
        match self {
            Self::Statement => vec![BvVariant::Statement],
            Self::Proof => vec![BvVariant::Proof],
            Self::Both => vec![BvVariant::Statement, BvVariant::Proof],
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::QuadratureNonconvergence { .. } | Error::TooFewPoints { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// `16,32,64`, `3..15` (inclusive) or `16..512x2` (geometric); items may be mixed.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(Error::Parse(format!("empty entry in degree list `{s}`")));
        }
        match item.split_once("..") {
            None => out.push(parse_usize(item)?),
            Some((a, rest)) => {
                let from = parse_usize(a)?;
                let (to, factor) = match rest.split_once('x') {
                    Some((b, f)) => (parse_usize(b)?, Some(parse_usize(f)?)),
                    None => (parse_usize(rest)?, None),
                };
                if from > to {
                    return Err(Error::InvalidRange(format!("`{item}` is empty")));
                }
                match factor {
                    None => out.extend(from..=to),
                    Some(f) if f >= 2 && from >= 1 => {
                        let mut v = from;
                        while v <= to {
                            out.push(v);
                            v *= f;
                        }
                    }
                    Some(_) => {
                        return Err(Error::Parse(format!(
                            "geometric ladder `{item}` needs start >= 1 and factor >= 2"
                        )))
                    }
                }
            }
        }
    }
    Ok(out)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a nonnegative integer")))
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{v}` is not a number")))
        })
        .collect()
}

/// Thread count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV} must be an integer >= 1, got `{v}`"
            ))),
        },
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match threads_from_env() {
        Ok(Some(t)) => {
            // Already-initialized pools (repeated in-process runs) keep their size.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
        Ok(None) => {}
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    }
    let mut buf = Vec::new();
    let result = execute(&cli.command, &mut buf, stderr);
    if let Err(e) = emit(cli.out.as_deref(), &buf) {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_USAGE;
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    if bytes.is_empty() && out.is_none() {
        return Ok(());
    }
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(bytes)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            w.write_all(bytes)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Runs a subcommand, writing CSV into `out`.
pub fn execute(cmd: &Command, out: &mut Vec<u8>, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Verify { n, config } => cmd_verify(n, config, out, stderr),
        Command::Eval {
            f,
            n,
            mu,
            grid,
            config,
        } => cmd_eval(f, *n, *mu, *grid, config, out),
        Command::Converge { f, mu, n, plot } => {
            cmd_converge(f, *mu, n, plot.as_deref(), out, stderr)
        }
        Command::Bounds { kind } => cmd_bounds(kind, out, stderr),
        Command::Kappa {
            n,
            mu,
            x,
            y_grid,
            c,
        } => cmd_kappa(*n, *mu, *x, *y_grid, *c, out),
    }
}

fn cmd_verify(n: &str, config: &str, out: &mut Vec<u8>, stderr: &mut dyn Write) -> Result<i32> {
    let (from, to) = match n.split_once("..") {
        Some((a, b)) => (parse_usize(a)?, parse_usize(b)?),
        None => {
            let v = parse_usize(n)?;
            (v, v)
        }
    };
    let cfg = ModWeightConfig::by_name(config)?;
    let report = verify_moment_identities(from..=to, &cfg)?;
    report.write_csv(&mut *out)?;
    write!(stderr, "{}", report.to_text())?;
    Ok(if report.all_hold() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

fn cmd_eval(
    spec: &str,
    n: usize,
    mu: f64,
    grid: usize,
    config: &str,
    out: &mut Vec<u8>,
) -> Result<i32> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid must have at least 2 points, got {grid}"
        )));
    }
    let f = parse_function_spec(spec)?;
    let params = OperatorParams::new(n, mu, ModWeightConfig::by_name(config)?)?;
    let op = BezierDurrmeyer::new(&f, &params)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(["x", "f", "value", "error"])?;
    let mut negative = false;
    for x in uniform_grid(grid) {
        let e = op.eval(x)?;
        negative |= e.negative_base;
        let fx = f.eval(x);
        w.write_record([
            fmt_real(x),
            fmt_real(fx),
            fmt_real(e.value),
            fmt_real(e.value - fx),
        ])?;
    }
    w.flush()?;
    if negative {
        log::warn!("negative tail sums met a non-integer exponent; values use the signed power");
    }
    Ok(EXIT_OK)
}

fn cmd_converge(
    spec: &str,
    mu: f64,
    n: &str,
    plot: Option<&Path>,
    out: &mut Vec<u8>,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let f = parse_function_spec(spec)?;
    let ns = parse_n_list(n)?;
    if ns.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: ns.len(),
        });
    }
    let rows = direct_bound_constant(&f, mu, &ns)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(["n", "sup_error", "modulus", "empirical_c"])?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            fmt_real(r.sup_error),
            fmt_real(r.modulus),
            fmt_real(r.empirical_c),
        ])?;
    }
    w.flush()?;
    let max_err = rows.iter().map(|r| r.sup_error).fold(0.0, f64::max);
    if max_err < NEGLIGIBLE_ERROR {
        writeln!(
            stderr,
            "slope: not-meaningful (all errors below {NEGLIGIBLE_ERROR:e})"
        )?;
    } else {
        let fit = fit_rate(&rows.iter().map(|r| (r.n, r.sup_error)).collect::<Vec<_>>())?;
        writeln!(
            stderr,
            "slope: {:.6} intercept: {:.6} r2: {:.6}",
            fit.slope, fit.intercept, fit.r2
        )?;
    }
    if let Some(path) = plot {
        std::fs::write(path, convergence_svg(f.name(), mu, &rows))?;
    }
    Ok(EXIT_OK)
}

fn cmd_bounds(kind: &BoundsKind, out: &mut Vec<u8>, stderr: &mut dyn Write) -> Result<i32> {
    let (common, reports) = match kind {
        BoundsKind::Direct { common } => (common, direct_reports(common)?),
        BoundsKind::Lip {
            common,
            x,
            zeta,
            alpha1,
            alpha2,
            m_constant,
        } => {
            let f = parse_function_spec(&common.f)?;
            let m = match m_constant {
                Some(m) => *m,
                None => {
                    let m = estimate_class_constant(&f, *zeta, *alpha1, *alpha2, CLASS_GRID);
                    writeln!(
                        stderr,
                        "class constant estimated on a {CLASS_GRID}-point grid: {m:.6}"
                    )?;
                    m
                }
            };
            let lip = LipParams::new(*zeta, *alpha1, *alpha2, m)?;
            let mut reports = Vec::new();
            for n in parse_n_list(&common.n)? {
                let params = OperatorParams::with_mu(n, common.mu)?;
                for &xv in &parse_reals(x)? {
                    reports.push(lip_bound(&f, &lip, &params, xv)?);
                }
            }
            (common, reports)
        }
        BoundsKind::Bv { common, x, variant } => {
            let f = parse_function_spec(&common.f)?;
            f.require_structure()?;
            let mut reports = Vec::new();
            for n in parse_n_list(&common.n)? {
                let params = OperatorParams::with_mu(n, common.mu)?;
                for &xv in &parse_reals(x)? {
                    for v in variant.variants() {
                        reports.push(bv_rhs(&f, &params, xv, v)?);
                    }
                }
            }
            (common, reports)
        }
    };
    write_bound_reports(&mut *out, &reports)?;
    let violations = reports.iter().filter(|r| !r.holds()).count();
    if violations > 0 {
        writeln!(
            stderr,
            "{violations} of {} rows have negative slack",
            reports.len()
        )?;
    }
    Ok(if common.strict && violations > 0 {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    })
}

/// Rows use `rhs = C·ω_φ(f, (n+2)^{-1/2})` with `C` the largest empirical
/// constant of the batch; each row's own constant is listed in its flags.
fn direct_reports(common: &BoundsCommon) -> Result<Vec<BoundReport>> {
    let f = parse_function_spec(&common.f)?;
    let ns = parse_n_list(&common.n)?;
    let rows = direct_bound_constant(&f, common.mu, &ns)?;
    let calibrated = rows.iter().map(|r| r.empirical_c).fold(0.0, f64::max);
    rows.iter()
        .map(|r| {
            let params = OperatorParams::with_mu(r.n, common.mu)?;
            let rhs = if calibrated > 0.0 {
                calibrated * r.modulus
            } else {
                r.modulus
            };
            let mut report = BoundReport::new(f.name(), &params, None, "direct", r.sup_error, rhs);
            report
                .flags
                .push(format!("empirical_C={}", fmt_real(r.empirical_c)));
            report
                .flags
                .push(format!("calibrated_C={}", fmt_real(calibrated)));
            if !report.holds() {
                report.flags.push("violation".into());
            }
            Ok(report)
        })
        .collect()
}

fn cmd_kappa(n: usize, mu: f64, x: f64, y_grid: usize, c: f64, out: &mut Vec<u8>) -> Result<i32> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in (0, 1), got {x}"
        )));
    }
    if y_grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "y grid must have at least 2 points, got {y_grid}"
        )));
    }
    let params = OperatorParams::with_mu(n, mu)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(["y", "kappa", "bound_left", "bound_right"])?;
    for y in uniform_grid(y_grid) {
        let k = kappa(&params, x, y)?;
        let (left, right) = match kappa_tail(&params, x, y, c)? {
            Some((_, b)) if y < x => (fmt_real(b), String::new()),
            Some((_, b)) => (String::new(), fmt_real(b)),
            None => (String::new(), String::new()),
        };
        w.write_record([fmt_real(y), fmt_real(k), left, right])?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

/// Log-log plot of sup error against `n`.
pub fn convergence_svg(name: &str, mu: f64, rows: &[DirectConstant]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_error > 0.0 && r.sup_error.is_finite())
        .map(|r| ((r.n as f64).log10(), r.sup_error.log10()))
        .collect();
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n");
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += &format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">sup error of {} (mu = {})</text>\n",
        W / 2.0,
        xml_escape(name),
        mu
    );
    svg += &format!(
        "<line x1=\"{PAD}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - PAD,
        W - PAD
    );
    svg += &format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">log10 n</text>\n",
        W / 2.0,
        H - 15.0
    );
    svg += &format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">log10 error</text>\n",
        H / 2.0,
        H / 2.0
    );
    if pts.is_empty() {
        svg += "</svg>\n";
        return svg;
    }
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{v:.2}</text>\n",
            sx(v),
            H - PAD + 16.0
        );
    }
    for v in [y0, y1] {
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n",
            PAD - 6.0,
            sy(v) + 4.0
        );
    }
    let path: Vec<String> = pts
        .iter()
        .map(|&(a, b)| format!("{:.2},{:.2}", sx(a), sy(b)))
        .collect();
    svg += &format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n",
        path.join(" ")
    );
    for &(a, b) in &pts {
        svg += &format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"steelblue\"/>\n",
            sx(a),
            sy(b)
        );
    }
    svg += "</svg>\n";
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
