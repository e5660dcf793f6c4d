//! Command-line front end. Each subcommand writes its result (CSV or JSON) to
//! `--out` or stdout, and a run manifest to `<out>.manifest.json` or stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{
    default_points, fit_expansion, orbit_counts, point, residual_analysis, write_counts_csv,
    write_residuals_csv, ExpansionTerm,
};
use crate::moebius::length_from_trace;
use crate::schottky::{validate_schottky, GroupFile, SchottkyGroup};
use crate::thermo::{default_n_max, hausdorff_dimension_with, DEFAULT_TOL};
use crate::trace_formula::{
    cylinder_resonances, mean_square_g, multiplicity_moments, resonance_check, tail_height, with_conjugates,
    write_report_csv, TestFunction, TraceCheckOptions,
};
use crate::words::{length_spectrum, DEFAULT_BIN_TOL};
use crate::zeta::{
    default_order, dimension_by_eigenvalue, find_resonances, strip_census, theorem_strip,
    write_resonances_csv, zeta_cycle, zeta_fredholm, zeta_product, FredholmEvaluator, Rect,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "resonance-lab", version, about = "Zeta functions, resonances and orbit counts of Schottky surfaces")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ZetaMethod {
    Cycle,
    Fredholm,
    Product,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Group file (TOML).
    #[arg(long)]
    group: PathBuf,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Structural checks of the group.
    Validate(Common),
    /// Dimension of the limit set by two routes.
    Dim {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Word length for the pressure sums.
        #[arg(long)]
        n_max: Option<usize>,
        /// Basis order of the transfer matrix.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Length spectrum with multiplicities up to `--t-max`.
    Lengths {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = DEFAULT_BIN_TOL)]
        bin_tol: f64,
    },
    /// Zeta values at the given points.
    ZetaEval {
        #[command(flatten)]
        common: Common,
        /// Point `re,im`; repeatable.
        #[arg(long = "s", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long, value_enum, default_value = "fredholm")]
        method: ZetaMethod,
        /// Word-length cutoff (cycle) or basis order (fredholm).
        #[arg(long)]
        order: Option<usize>,
        /// Prime length cutoff (product).
        #[arg(long, default_value_t = 12.0)]
        t_cut: f64,
        /// Largest `k` in the product over `1 - e^{-(s+k)l}`.
        #[arg(long, default_value_t = 8)]
        n_cut: usize,
    },
    /// Zeros of the zeta function in a rectangle `re_min,re_max,im_min,im_max`.
    Resonances {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        rect: String,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Gap bounds and resonance counts in `Re s >= sigma, 0 <= Im s <= T`.
    Strip {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long = "t")]
        t: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Both sides of the approximate trace formula on a ladder of `T`.
    TraceCheck {
        #[command(flatten)]
        common: Common,
        /// `T` values: `a,b,c` or `start:stop:step`.
        #[arg(long = "t")]
        ts: String,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xi: f64,
        /// Height of the resonance search; cylinders use the closed form up to
        /// the height the tail tolerance requires.
        #[arg(long)]
        height: Option<f64>,
        #[arg(long, default_value_t = crate::trace_formula::DEFAULT_TAIL_TOL)]
        tail_tol: f64,
        #[arg(long, default_value_t = crate::trace_formula::DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Gaussian mean square of the windowed length sums.
    MeanSquare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: f64,
        #[arg(long = "t")]
        t: f64,
    },
    /// Multiplicity moments over windows `[T-1, T+1]`.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long = "t")]
        ts: String,
    },
    /// Orbit counts `N(T; z, z')`.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long = "t")]
        ts: String,
        #[command(flatten)]
        points: PointArgs,
    },
    /// Residuals of the counts against a fitted exponential expansion.
    Residuals {
        #[command(flatten)]
        common: Common,
        #[arg(long = "t")]
        ts: String,
        #[command(flatten)]
        points: PointArgs,
        /// Fit window `a,b`.
        #[arg(long)]
        fit_window: String,
        /// Exponents `re,im,degree` separated by `;` (default: `δ,0,0`).
        #[arg(long, allow_hyphen_values = true)]
        exponents: Option<String>,
        /// Weights `β` for `sup |R| e^{-βT}`.
        #[arg(long, default_value = "0,0.1,0.2,0.3")]
        betas: String,
    },
}

#[derive(Debug, Args, Serialize)]
struct PointArgs {
    /// Base point `re,im` in the group's model.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Orbit point `re,im` in the group's model.
    #[arg(long = "z-prime", allow_hyphen_values = true)]
    z_prime: Option<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Dim { .. } => "dim",
            Command::Lengths { .. } => "lengths",
            Command::ZetaEval { .. } => "zeta-eval",
            Command::Resonances { .. } => "resonances",
            Command::Strip { .. } => "strip",
            Command::TraceCheck { .. } => "trace-check",
            Command::MeanSquare { .. } => "mean-square",
            Command::Moments { .. } => "moments",
            Command::Count { .. } => "count",
            Command::Residuals { .. } => "residuals",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate(c) => c,
            Command::Dim { common, .. }
            | Command::Lengths { common, .. }
            | Command::ZetaEval { common, .. }
            | Command::Resonances { common, .. }
            | Command::Strip { common, .. }
            | Command::TraceCheck { common, .. }
            | Command::MeanSquare { common, .. }
            | Command::Moments { common, .. }
            | Command::Count { common, .. }
            | Command::Residuals { common, .. } => common,
        }
    }
}

/// Bad argument values found after clap parsing.
struct Usage(String);

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Usage> {
    Err(Usage(msg.into()))
}

fn parse_f64(s: &str) -> std::result::Result<f64, Usage> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Usage(format!("not a number: {s:?}")))
}

fn parse_complex(s: &str) -> std::result::Result<C64, Usage> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return usage(format!("expected re,im but got {s:?}"));
    }
    Ok(C64::new(parse_f64(parts[0])?, parse_f64(parts[1])?))
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
fn parse_ladder(s: &str) -> std::result::Result<Vec<f64>, Usage> {
    let v: Vec<f64> = if s.contains(':') {
        let p: Vec<f64> = s.split(':').map(parse_f64).collect::<std::result::Result<_, _>>()?;
        if p.len() != 3 || !(p[2] > 0.0) || p[1] < p[0] {
            return usage(format!("bad ladder {s:?}; expected start:stop:step"));
        }
        let n = ((p[1] - p[0]) / p[2] + 1e-9).floor() as usize;
        (0..=n).map(|k| p[0] + k as f64 * p[2]).collect()
    } else {
        s.split(',').map(parse_f64).collect::<std::result::Result<_, _>>()?
    };
    if v.is_empty() || v.iter().any(|t| !(*t >= 0.0)) {
        return usage(format!("ladder {s:?} must hold nonnegative values"));
    }
    Ok(v)
}

fn positive(name: &str, x: f64) -> std::result::Result<(), Usage> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be positive, got {x}"))
    }
}

struct Output {
    csv: Option<Vec<u8>>,
    json: Value,
    warnings: Vec<String>,
    estimates: Value,
    failed: bool,
}

impl Output {
    fn json(json: Value) -> Self {
        Output {
            csv: None,
            json,
            warnings: Vec::new(),
            estimates: Value::Null,
            failed: false,
        }
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// `δ` from the leading eigenvalue of the transfer matrix; 0 for cylinders.
fn group_delta(g: &SchottkyGroup) -> Result<f64> {
    if g.rank() < 2 {
        return Ok(0.0);
    }
    dimension_by_eigenvalue(g, default_order(g), 1e-12)
}

fn points(g: &SchottkyGroup, a: &PointArgs) -> std::result::Result<Result<(crate::moebius::PointH, crate::moebius::PointH)>, Usage> {
    let (dz, dzp) = default_points();
    let z = a.z.as_deref().map(parse_complex).transpose()?;
    let zp = a.z_prime.as_deref().map(parse_complex).transpose()?;
    Ok((|| {
        let z = z.map_or(Ok(dz), |v| point(g, v))?;
        let zp = zp.map_or(Ok(dzp), |v| point(g, v))?;
        Ok((z, zp))
    })())
}

enum Failure {
    Usage(String),
    Numeric(Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

fn execute(cmd: &Command, g: &SchottkyGroup) -> std::result::Result<Output, Failure> {
    Ok(match cmd {
        Command::Validate(_) => {
            let rep = validate_schottky(g);
            let mut out = Output::json(serde_json::to_value(&rep).map_err(Error::from)?);
            out.failed = !rep.passed;
            out
        }
        Command::Dim { tol, n_max, order, .. } => {
            positive("tol", *tol)?;
            let n = n_max.unwrap_or_else(|| default_n_max(g.rank()));
            let m = order.unwrap_or_else(|| default_order(g));
            let d = hausdorff_dimension_with(g, *tol, n, m)?;
            let mut out = Output::json(serde_json::to_value(&d).map_err(Error::from)?);
            out.estimates = json!({
                "pressure_error_bar": d.pressure_at_delta.error_bar,
                "route_difference": (d.delta - d.eigenvalue_delta).abs(),
            });
            out
        }
        Command::Lengths { t_max, bin_tol, .. } => {
            positive("t-max", *t_max)?;
            positive("bin-tol", *bin_tol)?;
            let spec = length_spectrum(g, *t_max, *bin_tol);
            let mut out = Output::json(serde_json::to_value(&spec).map_err(Error::from)?);
            out.csv = Some(csv_bytes(|b| spec.write_csv(b))?);
            out.warnings = spec.warnings.clone();
            out.estimates = json!({ "certified": spec.certified, "max_word_len": spec.max_word_len });
            out
        }
        Command::ZetaEval {
            points,
            method,
            order,
            t_cut,
            n_cut,
            ..
        } => {
            let ss: Vec<C64> = points.iter().map(|p| parse_complex(p)).collect::<std::result::Result<_, _>>()?;
            let mut evals = Vec::new();
            match method {
                ZetaMethod::Cycle => {
                    let n = order.unwrap_or_else(|| default_n_max(g.rank()).min(12));
                    for &s in &ss {
                        evals.push(zeta_cycle(g, s, n)?);
                    }
                }
                ZetaMethod::Fredholm => {
                    let m = order.unwrap_or_else(|| default_order(g));
                    for &s in &ss {
                        evals.push(zeta_fredholm(g, s, m)?);
                    }
                }
                ZetaMethod::Product => {
                    positive("t-cut", *t_cut)?;
                    let delta = group_delta(g)?;
                    for &s in &ss {
                        evals.push(zeta_product(g, s, *t_cut, *n_cut, delta)?);
                    }
                }
            }
            let csv = csv_bytes(|b| {
                let mut wr = csv::Writer::from_writer(b);
                wr.write_record(["re", "im", "value_re", "value_im", "abs", "method", "order", "error_estimate"])?;
                for e in &evals {
                    wr.write_record([
                        format!("{:.15e}", e.s.re),
                        format!("{:.15e}", e.s.im),
                        format!("{:.15e}", e.value.re),
                        format!("{:.15e}", e.value.im),
                        format!("{:.15e}", e.value.norm()),
                        e.method.name().to_string(),
                        e.order.to_string(),
                        format!("{:.3e}", e.error_estimate),
                    ])?;
                }
                wr.flush()?;
                Ok(())
            })?;
            let mut out = Output::json(serde_json::to_value(&evals).map_err(Error::from)?);
            out.warnings = evals.iter().flat_map(|e| e.warnings.clone()).collect();
            out.estimates = json!(evals.iter().map(|e| e.error_estimate).collect::<Vec<_>>());
            out.csv = Some(csv);
            out
        }
        Command::Resonances { rect, step, order, .. } => {
            let rect = Rect::parse(rect).map_err(|e| Failure::Usage(e.to_string()))?;
            positive("step", *step)?;
            let m = order.unwrap_or_else(|| default_order(g));
            let res = find_resonances(g, &rect, *step, m)?;
            let mut out = Output::json(serde_json::to_value(&res).map_err(Error::from)?);
            out.csv = Some(csv_bytes(|b| write_resonances_csv(&res.zeros, m, b))?);
            out.warnings = res.warnings.clone();
            out.estimates = json!({
                "winding": res.winding,
                "zero_count": res.zero_count,
                "max_newton_residual": res.zeros.iter().map(|z| z.newton_residual).fold(0.0, f64::max),
            });
            out.failed = !res.consistent;
            out
        }
        Command::Strip { sigma, t, step, order, .. } => {
            positive("t", *t)?;
            positive("step", *step)?;
            let delta = group_delta(g)?;
            let bound = theorem_strip(delta)?;
            let m = order.unwrap_or_else(|| default_order(g));
            let rect = Rect::new(*sigma, (delta + 0.1).max(*sigma + *step), 0.0, *t)?;
            let res = find_resonances(g, &rect, *step, m)?;
            let census = strip_census(&res.zeros, *sigma, *t);
            let mut out = Output::json(json!({
                "delta": delta,
                "bound": bound,
                "census": census,
                "search_consistent": res.consistent,
            }));
            out.warnings = res.warnings.clone();
            out.failed = !res.consistent;
            out
        }
        Command::TraceCheck {
            ts,
            rho,
            xi,
            height,
            tail_tol,
            eps,
            step,
            order,
            ..
        } => {
            let ts = parse_ladder(ts)?;
            positive("tail-tol", *tail_tol)?;
            positive("eps", *eps)?;
            let t_top = ts.iter().cloned().fold(0.0, f64::max);
            let spec = length_spectrum(g, t_top + 2.0, DEFAULT_BIN_TOL);
            let delta = group_delta(g)?;
            let height = match height {
                Some(h) => {
                    positive("height", *h)?;
                    *h
                }
                None if g.is_cylinder() => {
                    let sigma = delta.max(rho + 2.0 * eps);
                    ts.iter()
                        .map(|&t| tail_height(&TestFunction::new(*xi, t), sigma, *tail_tol))
                        .fold(0.0, f64::max)
                        + 1.0
                }
                None => 20.0,
            };
            let mut warnings = spec.warnings.clone();
            let (zeros, evaluator) = if g.is_cylinder() {
                let l0 = length_from_trace(g.generators()[0].trace().abs());
                (cylinder_resonances(l0, *rho, height), None)
            } else {
                let m = order.unwrap_or_else(|| default_order(g));
                let rect = Rect::new(*rho, delta + 0.1, 0.0, height)?;
                let res = find_resonances(g, &rect, *step, m)?;
                if !res.consistent {
                    warnings.push("resonance search is inconsistent; the zero list may be incomplete".into());
                }
                warnings.extend(res.warnings.iter().cloned());
                (with_conjugates(&res.zeros), Some(FredholmEvaluator::new(g, m)?))
            };
            let mut opts = TraceCheckOptions::new(delta, height);
            opts.tail_tol = *tail_tol;
            opts.eps = *eps;
            let zf = evaluator.as_ref().map(|ev| move |s: C64| ev.value(s));
            let zref: Option<&(dyn Fn(C64) -> C64 + Sync)> = zf.as_ref().map(|f| f as _);
            let mut rows = Vec::new();
            for &t in &ts {
                rows.push(resonance_check(&spec, &TestFunction::new(*xi, t), *rho, &zeros, &opts, zref)?);
            }
            let mut out = Output::json(serde_json::to_value(&rows).map_err(Error::from)?);
            out.csv = Some(csv_bytes(|b| write_report_csv(&rows, b))?);
            out.estimates = json!(rows
                .iter()
                .map(|r| json!({"T": r.t, "residual_abs": r.residual.norm(), "bound_estimate": r.bound_estimate}))
                .collect::<Vec<_>>());
            out.warnings = warnings;
            out
        }
        Command::MeanSquare { sigma, t, .. } => {
            positive("sigma", *sigma)?;
            positive("t", *t)?;
            Output::json(serde_json::to_value(mean_square_g(g, *sigma, *t)?).map_err(Error::from)?)
        }
        Command::Moments { ts, .. } => {
            let ts = parse_ladder(ts)?;
            let ladder = multiplicity_moments(g, &ts)?;
            let csv = csv_bytes(|b| {
                let mut wr = csv::Writer::from_writer(b);
                wr.write_record(["T", "m_sum", "m2_sum", "distinct", "cluster_max"])?;
                for w in &ladder.windows {
                    wr.write_record([
                        format!("{}", w.t),
                        w.m_sum.to_string(),
                        w.m2_sum.to_string(),
                        w.distinct.to_string(),
                        w.cluster_max.map_or(String::new(), |c| c.to_string()),
                    ])?;
                }
                wr.flush()?;
                Ok(())
            })?;
            let mut out = Output::json(serde_json::to_value(&ladder).map_err(Error::from)?);
            out.estimates = json!({
                "m_exponent": ladder.m_exponent,
                "m2_exponent": ladder.m2_exponent,
                "distinct_exponent": ladder.distinct_exponent,
            });
            out.csv = Some(csv);
            out
        }
        Command::Count { ts, points: pa, .. } => {
            let ts = parse_ladder(ts)?;
            let (z, zp) = points(g, pa)?.map_err(Failure::Numeric)?;
            let counts = orbit_counts(g, z, zp, &ts)?;
            let mut out = Output::json(serde_json::to_value(&counts).map_err(Error::from)?);
            out.csv = Some(csv_bytes(|b| write_counts_csv(&counts, b))?);
            out
        }
        Command::Residuals {
            ts,
            points: pa,
            fit_window,
            exponents,
            betas,
            ..
        } => {
            let ts = parse_ladder(ts)?;
            let win = parse_ladder(fit_window)?;
            if win.len() != 2 || win[1] <= win[0] {
                return Err(Failure::Usage(format!("bad --fit-window {fit_window:?}; expected a,b with a < b")));
            }
            let betas = parse_ladder(betas)?;
            let delta = group_delta(g)?;
            let terms: Vec<ExpansionTerm> = match exponents {
                None => vec![ExpansionTerm {
                    exponent: C64::new(delta, 0.0),
                    degree: 0,
                }],
                Some(spec) => spec
                    .split(';')
                    .map(|e| {
                        let p: Vec<&str> = e.split(',').collect();
                        if p.len() != 3 {
                            return usage(format!("bad exponent {e:?}; expected re,im,degree"));
                        }
                        let degree = p[2]
                            .trim()
                            .parse::<usize>()
                            .map_err(|_| Usage(format!("bad degree in {e:?}")))?;
                        Ok(ExpansionTerm {
                            exponent: C64::new(parse_f64(p[0])?, parse_f64(p[1])?),
                            degree,
                        })
                    })
                    .collect::<std::result::Result<_, _>>()?,
            };
            let (z, zp) = points(g, pa)?.map_err(Failure::Numeric)?;
            let counts = orbit_counts(g, z, zp, &ts)?;
            let model = fit_expansion(&counts, &terms, (win[0], win[1]), delta)?;
            let test: Vec<_> = counts.iter().filter(|c| c.t > win[1]).cloned().collect();
            let report = residual_analysis(if test.is_empty() { &counts } else { &test }, &model, &betas);
            let mut out = Output::json(json!({ "model": model, "report": report }));
            out.csv = Some(csv_bytes(|b| write_residuals_csv(&report, b))?);
            out.estimates = json!({ "weighted_sup": report.weighted_sup, "sign_changes": report.sign_changes });
            if test.is_empty() {
                out.warnings.push("no ladder values beyond the fit window; residuals shown on the fit window".into());
            }
            out
        }
    })
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let common = cli.command.common();
    let text = match std::fs::read_to_string(&common.group) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.group.display());
            return EXIT_USAGE;
        }
    };
    let (file, group) = match GroupFile::parse(&text).and_then(|f| f.build().map(|g| (f, g))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = execute(&cli.command, &group);
    let out = match result {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let format = common
        .format
        .unwrap_or(if out.csv.is_some() { Format::Csv } else { Format::Json });
    let body = match (format, &out.csv) {
        (Format::Csv, Some(c)) => c.clone(),
        _ => {
            let mut v = serde_json::to_vec_pretty(&out.json).expect("serializable");
            v.push(b'\n');
            v
        }
    };
    let manifest = json!({
        "command": cli.command.name(),
        "group_hash": file.hash(),
        "group_file": common.group.display().to_string(),
        "params": &cli.command,
        "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "error_estimates": out.estimates,
        "warnings": out.warnings,
    });
    let written = write_out(common.out.as_deref(), &body).and_then(|_| {
        let text = serde_json::to_string_pretty(&manifest)?;
        match &common.out {
            Some(p) => std::fs::write(manifest_path(p), text + "\n")?,
            None => eprintln!("{text}"),
        }
        Ok(())
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    if out.failed {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}
