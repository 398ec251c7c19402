//! Command-line front end.
//!
//! Every invocation writes its data files and a manifest into `--out-dir`.
//! The run id depends only on the parameter echo; wall time appears only in
//! the manifest.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::curve::{CurveModel, Sheet};
use crate::degeneration::{
    self, collar_integral, collar_metric_check, gram_asymptotics, nonsep_sweep, sep_sweep,
    CollarChart, FamilyInstance, PinchFamily, SepProbes,
};
use crate::metric::{MetricEvaluator, SurfaceConfig};
use crate::periods::{QuadratureConfig, RiemannMatrix};
use crate::poly::{parse_polynomial, parse_roots};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "hypercurv", version, about = "Periods, canonical metric and curvature of hyperelliptic curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Riemann matrix and the A/B period matrices.
    Periods(CurveArgs),
    /// Density and curvature on a rectangular grid of x values, both sheets.
    Curvature {
        #[command(flatten)]
        curve: CurveArgs,
        /// Grid `re_min,re_max,im_min,im_max,n_re,n_im`.
        #[arg(long, default_value = "-2,2,-2,2,21,21", allow_hyphen_values = true)]
        grid: String,
    },
    /// Area, total curvature and the Gram matrix against `Im Omega`.
    Area(CurveArgs),
    /// Scaling sweep along a pinching family.
    Pinch(PinchArgs),
    /// Curvature at the branch points and at generic points.
    Weierstrass {
        #[command(flatten)]
        curve: CurveArgs,
        /// Number of generic sample points.
        #[arg(long, default_value_t = 50)]
        generic: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Relative tolerance of the contour quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Gauss-Legendre order of the contour quadrature.
    #[arg(long, default_value_t = 24)]
    pub gl_order: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write only the JSON data file.
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Write only the CSV data file.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Monic polynomial in x, e.g. "x^6 - 1".
    #[arg(long, conflicts_with = "roots", required_unless_present = "roots")]
    pub curve: Option<String>,
    /// Comma separated branch points, e.g. "1,-1,2+i,2-i".
    #[arg(long, allow_hyphen_values = true)]
    pub roots: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Nonsep,
    Sep,
}

#[derive(Debug, Clone, Args)]
pub struct PinchArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Descending comma list of |t| values.
    #[arg(long, default_value = "1e-2,3.1622776601683794e-3,1e-3,3.1622776601683794e-4,1e-4")]
    pub t_grid: String,
    #[arg(long, default_value_t = 64)]
    pub angles: usize,
    /// Override of the fixed branch points.
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_roots: Option<String>,
    /// Override of the colliding cluster at unit scale (separating family).
    #[arg(long, allow_hyphen_values = true)]
    pub cluster: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value <= threshold, value, threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value >= threshold, value, threshold }
    }

    fn flag(name: &str, pass: bool) -> Self {
        Check { name: name.into(), pass, value: f64::from(u8::from(pass)), threshold: 1.0 }
    }
}

/// What a command produced before it is written out.
struct Output {
    json: Option<Value>,
    csv: Option<String>,
    checks: Vec<Check>,
    notes: Value,
}

/// Paths and verdict of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub all_pass: bool,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) if summary.all_pass => 0,
        Ok(summary) => {
            eprintln!("checks failed; see {}", summary.manifest.display());
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Periods(c) | Command::Area(c) => &c.common,
        Command::Curvature { curve, .. } | Command::Weierstrass { curve, .. } => &curve.common,
        Command::Pinch(p) => &p.common,
    }
}

pub fn execute(cli: &Cli) -> Result<RunSummary> {
    let common = common_of(&cli.command);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let (name, params, output) = pool.install(|| dispatch(&cli.command))?;
    write_outputs(name, &params, output, common, started)
}

fn quadrature(common: &Common) -> Result<QuadratureConfig> {
    let config = QuadratureConfig { gl_order: common.gl_order, rel_tol: common.tol, ..QuadratureConfig::default() };
    config.validate()?;
    Ok(config)
}

/// Branch points of a curve argument, and whether the root finder was used.
fn load_curve(args: &CurveArgs) -> Result<(CurveModel, bool)> {
    match (&args.curve, &args.roots) {
        (Some(poly), None) => {
            let roots = parse_polynomial(poly)?.roots()?;
            Ok((CurveModel::from_roots(&roots)?, true))
        }
        (None, Some(list)) => Ok((CurveModel::from_roots(&parse_roots(list)?)?, false)),
        _ => Err(Error::InvalidConfig("exactly one of --curve or --roots is required".into())),
    }
}

fn curve_echo(args: &CurveArgs) -> Value {
    json!({
        "curve": args.curve,
        "roots": args.roots,
        "tol": args.common.tol,
        "gl_order": args.common.gl_order,
    })
}

fn dispatch(cmd: &Command) -> Result<(&'static str, Value, Output)> {
    match cmd {
        Command::Periods(args) => Ok(("periods", curve_echo(args), cmd_periods(args)?)),
        Command::Curvature { curve, grid } => {
            let mut echo = curve_echo(curve);
            echo["grid"] = json!(grid);
            Ok(("curvature", echo, cmd_curvature(curve, grid)?))
        }
        Command::Area(args) => Ok(("area", curve_echo(args), cmd_area(args)?)),
        Command::Pinch(args) => {
            let echo = json!({
                "kind": args.kind,
                "t_grid": args.t_grid,
                "angles": args.angles,
                "fixed_roots": args.fixed_roots,
                "cluster": args.cluster,
                "tol": args.common.tol,
                "gl_order": args.common.gl_order,
            });
            Ok(("pinch", echo, cmd_pinch(args)?))
        }
        Command::Weierstrass { curve, generic } => {
            let mut echo = curve_echo(curve);
            echo["generic"] = json!(generic);
            Ok(("weierstrass", echo, cmd_weierstrass(curve, *generic)?))
        }
    }
}

fn complex_matrix(m: &nalgebra::DMatrix<C>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn cmd_periods(args: &CurveArgs) -> Result<Output> {
    let (curve, used_finder) = load_curve(args)?;
    let rm = RiemannMatrix::compute(&curve, &quadrature(&args.common)?)?;
    let json = json!({
        "genus": rm.genus(),
        "branch_points": curve.branch_points().iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        "P": complex_matrix(&rm.p),
        "Q": complex_matrix(&rm.q),
        "omega": complex_matrix(&rm.omega),
        "symmetry_residual": rm.symmetry_residual,
        "min_eig_im": rm.min_eig_im,
    });
    let checks = vec![
        Check::at_most("symmetry_residual", rm.symmetry_residual, 1e-8),
        Check { name: "min_eig_im_positive".into(), pass: rm.min_eig_im > 0.0, value: rm.min_eig_im, threshold: 0.0 },
    ];
    Ok(Output { json: Some(json), csv: None, checks, notes: json!({ "root_finder": used_finder }) })
}

fn parse_grid(spec: &str) -> Result<([f64; 4], usize, usize)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::Parse(format!("grid {spec:?} must be re_min,re_max,im_min,im_max,n_re,n_im"));
    if parts.len() != 6 {
        return Err(bad());
    }
    let mut b = [0.0; 4];
    for (slot, p) in b.iter_mut().zip(&parts[..4]) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    let n_re: usize = parts[4].parse().map_err(|_| bad())?;
    let n_im: usize = parts[5].parse().map_err(|_| bad())?;
    if n_re == 0 || n_im == 0 || !(b[0] <= b[1] && b[2] <= b[3]) {
        return Err(bad());
    }
    Ok((b, n_re, n_im))
}

fn lerp(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * k as f64 / (n - 1) as f64
    }
}

fn cmd_curvature(args: &CurveArgs, grid: &str) -> Result<Output> {
    use rayon::prelude::*;
    let (b, n_re, n_im) = parse_grid(grid)?;
    let (curve, used_finder) = load_curve(args)?;
    let ev = MetricEvaluator::compute(curve, &quadrature(&args.common)?)?;
    let mut points = Vec::with_capacity(2 * n_re * n_im);
    for j in 0..n_im {
        for i in 0..n_re {
            let x = C::new(lerp(b[0], b[1], i, n_re), lerp(b[2], b[3], j, n_im));
            if ev.curve().distance_to_branch(x).1 > ev.curve().r_chart() {
                points.push((x, Sheet::One));
                points.push((x, Sheet::Two));
            }
        }
    }
    let rows: Vec<(C, Sheet, f64, f64)> = points
        .par_iter()
        .map(|&(x, sheet)| {
            let s = ev.curvature(&ev.curve().point_x(x, sheet)?)?;
            Ok((x, sheet, s.rho, s.k))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("re_x,im_x,sheet,rho,K\n");
    let mut max_k = f64::NEG_INFINITY;
    for (x, sheet, rho, k) in &rows {
        max_k = max_k.max(*k);
        let _ = writeln!(csv, "{},{},{},{},{}", num(x.re), num(x.im), sheet.index(), num(*rho), num(*k));
    }
    let checks = vec![Check::at_most("max_curvature_nonpositive", max_k, 1e-9)];
    let json = json!({ "samples": rows.len(), "skipped": 2 * n_re * n_im - rows.len(), "max_k": max_k });
    Ok(Output { json: Some(json), csv: Some(csv), checks, notes: json!({ "root_finder": used_finder }) })
}

fn cmd_area(args: &CurveArgs) -> Result<Output> {
    let (curve, used_finder) = load_curve(args)?;
    let ev = MetricEvaluator::compute(curve, &quadrature(&args.common)?)?;
    let s = ev.surface_integrals(&SurfaceConfig::default())?;
    let g = ev.genus() as f64;
    let gb = 2.0 * std::f64::consts::PI * (2.0 - 2.0 * g);
    let im = ev.riemann_matrix().im_omega();
    let mut gram_err: f64 = 0.0;
    for i in 0..ev.genus() {
        for j in 0..ev.genus() {
            let scale = (im[(i, i)] * im[(j, j)]).sqrt();
            gram_err = gram_err.max((s.gram[(i, j)] - C::new(im[(i, j)], 0.0)).norm() / scale);
        }
    }
    let gb_err = if ev.genus() == 1 { s.total_curvature.abs() } else { ((s.total_curvature - gb) / gb).abs() };
    let json = json!({
        "area": s.area,
        "expected_g": g,
        "total_curvature": s.total_curvature,
        "expected_gauss_bonnet": gb,
        "gram_vs_imomega_maxerr": gram_err,
    });
    let checks = vec![
        Check::at_most("area_relative_error", ((s.area - g) / g).abs(), 0.01),
        Check::at_most("gauss_bonnet_error", gb_err, if ev.genus() == 1 { 0.05 } else { 0.02 }),
        Check::at_most("gram_relative_error", gram_err, 0.01),
    ];
    Ok(Output { json: Some(json), csv: None, checks, notes: json!({ "root_finder": used_finder }) })
}

fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad t value {s:?}"))))
        .collect()
}

fn cmd_pinch(args: &PinchArgs) -> Result<Output> {
    let grid = parse_t_grid(&args.t_grid)?;
    let config = quadrature(&args.common)?;
    let t0 = C::new(*grid.first().ok_or_else(|| Error::InvalidConfig("empty t grid".into()))?, 0.0);
    match args.kind {
        Kind::Nonsep => {
            let fixed = match &args.fixed_roots {
                Some(s) => parse_roots(s)?,
                None => degeneration::default_nonsep_roots(),
            };
            let base = PinchFamily::nonsep_with(t0, fixed)?;
            pinch_nonsep(&base, &grid, args.angles, &config)
        }
        Kind::Sep => {
            let fixed = match &args.fixed_roots {
                Some(s) => parse_roots(s)?,
                None => degeneration::default_sep_roots(),
            };
            let cluster = match &args.cluster {
                Some(s) => parse_roots(s)?,
                None => degeneration::default_sep_cluster(),
            };
            let base = PinchFamily::sep_with(t0, cluster, fixed)?;
            let probes = SepProbes { n_neck: args.angles, ..SepProbes::default() };
            let report = sep_sweep(&base, &grid, &probes, &config)?;
            let mut csv = String::from("eps,max_abs_k,max_rho,max_rho_x_neck,max_k\n");
            for r in &report.rows {
                let _ = writeln!(csv, "{},{},{},{},{}", num(r.eps), num(r.max_abs_k), num(r.max_rho), num(r.max_rho_x_neck), num(r.max_k));
            }
            let checks = vec![
                Check::at_most("max_abs_k_band", report.k_band, 2.0),
                Check::at_most("max_rho_band", report.rho_band, 2.0),
                Check::at_most("max_k", report.rows.iter().map(|r| r.max_k).fold(f64::NEG_INFINITY, f64::max), 1e-9),
            ];
            let json = to_value(&report)?;
            Ok(Output { json: Some(json), csv: Some(csv), checks, notes: json!({ "root_finder": false }) })
        }
    }
}

fn pinch_nonsep(base: &PinchFamily, grid: &[f64], angles: usize, config: &QuadratureConfig) -> Result<Output> {
    let report = nonsep_sweep(base, grid, angles, config)?;
    let gram = gram_asymptotics(base, grid, config)?;
    let mut collar = Vec::with_capacity(grid.len());
    let mut csv = String::from("t,region,radius,theta,rho,K\n");
    for &t in grid {
        let inst = FamilyInstance::new(base.at(C::new(t, 0.0))?, config)?;
        let chart = CollarChart::new(inst.family.clone())?;
        let bounds = collar_metric_check(&chart, &inst.evaluator, 32, angles)?;
        let integral = collar_integral(&chart, &inst.evaluator, &SurfaceConfig::default())?;
        let l = chart.l;
        collar.push(json!({
            "t": t,
            "l": l,
            "bounds": bounds,
            "collar_integral": integral,
            "integral_over_l_minus_log_l": integral / (l - l.ln()),
        }));
        let regions = [("outer", 0.9 * chart.u_max), ("mid", chart.mid_radius()), ("inner", 2.0 * t)];
        for (name, r) in regions {
            for th in degeneration::angular_grid(angles, 0.0) {
                let (h0, h1) = chart.frame(C::from_polar(r, th))?;
                let (rho, k) = inst.evaluator.metric_of_frame(&h0, &h1)?;
                let _ = writeln!(csv, "{},{name},{},{},{},{}", num(t), num(r), num(th), num(rho), num(k));
            }
        }
    }
    let ratios: Vec<f64> = collar.iter().map(|c| c["integral_over_l_minus_log_l"].as_f64().unwrap_or(f64::NAN)).collect();
    let lows: Vec<f64> = collar.iter().map(|c| c["bounds"]["c_low"].as_f64().unwrap_or(f64::NAN)).collect();
    let highs: Vec<f64> = collar.iter().map(|c| c["bounds"]["c_high"].as_f64().unwrap_or(f64::NAN)).collect();
    let checks = vec![
        Check::flag("m_mid_increasing", report.mid_increasing),
        Check::at_most("m_mid_over_l_band", report.mid_ratio_band, 1.3),
        Check::at_most("m_outer_band", report.outer_band, 2.0),
        Check::flag("m_inner_decreasing", report.inner_decreasing),
        Check::at_most("m_inner_envelope_band", report.inner_ratio_band, 3.0),
        Check::at_least("collar_c_low", lows.iter().copied().fold(f64::INFINITY, f64::min), 1.0 / 20.0),
        Check::at_most("collar_c_high", highs.iter().copied().fold(f64::NEG_INFINITY, f64::max), 20.0),
        Check::at_least("collar_integral_ratio_min", ratios.iter().copied().fold(f64::INFINITY, f64::min), 1.0 / 3.0),
        Check::at_most("collar_integral_ratio_max", ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max), 3.0),
        Check::at_most("max_k", report.rows.iter().map(|r| r.max_k).fold(f64::NEG_INFINITY, f64::max), 1e-9),
    ];
    let json = json!({
        "scaling": to_value(&report)?,
        "gram": to_value(&gram)?,
        "collar": collar,
    });
    Ok(Output { json: Some(json), csv: Some(csv), checks, notes: json!({ "root_finder": false }) })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Deterministic well-spread points in the disk of radius `r` around `c`.
pub fn generic_points(c: C, r: f64, n: usize) -> Vec<C> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n).map(|k| c + C::from_polar(r * ((k as f64 + 0.5) / n as f64).sqrt(), golden * k as f64 + 0.3)).collect()
}

/// `n` spiral points in the disk that keep a distance `2 r_chart` from
/// every branch point, spread over the whole disk.
pub fn spread_points(curve: &CurveModel, c: C, r: f64, n: usize) -> Vec<C> {
    let mut m = n.max(1);
    loop {
        let ok: Vec<C> = generic_points(c, r, m)
            .into_iter()
            .filter(|&x| curve.distance_to_branch(x).1 > 2.0 * curve.r_chart())
            .collect();
        if ok.len() >= n || m > 1 << 20 {
            return (0..n.min(ok.len())).map(|i| ok[i * ok.len() / n]).collect();
        }
        m *= 2;
    }
}

fn cmd_weierstrass(args: &CurveArgs, generic: usize) -> Result<Output> {
    let (curve, used_finder) = load_curve(args)?;
    let ev = MetricEvaluator::compute(curve, &quadrature(&args.common)?)?;
    let pts = ev.curve().branch_points().to_vec();
    let mut branch = Vec::with_capacity(pts.len());
    let mut max_branch: f64 = 0.0;
    for (j, l) in pts.iter().enumerate() {
        let s = ev.curvature(&ev.curve().point_branch(j, C::new(0.0, 0.0))?)?;
        max_branch = max_branch.max(s.k.abs());
        branch.push(json!({ "x": [l.re, l.im], "abs_k": s.k.abs() }));
    }
    let center = pts.iter().sum::<C>() / pts.len() as f64;
    let radius = 1.2 * pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let xs = spread_points(ev.curve(), center, radius, generic);
    let ks: Vec<f64> = xs
        .iter()
        .map(|&x| Ok(ev.curvature(&ev.curve().point_x(x, Sheet::One)?)?.k))
        .collect::<Result<_>>()?;
    let max_generic = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_generic = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let json = json!({
        "branch_points": branch,
        "max_abs_k_branch": max_branch,
        "generic": { "count": ks.len(), "max_k": max_generic, "min_k": min_generic },
    });
    let checks = vec![
        Check::at_most("max_abs_k_branch", max_branch, 1e-6),
        Check::at_most("generic_max_k", max_generic, -f64::MIN_POSITIVE),
    ];
    Ok(Output { json: Some(json), csv: None, checks, notes: json!({ "root_finder": used_finder }) })
}

/// A float with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// Serializes a JSON value with every float written by [`num`], two-space
/// indentation and `\n` line endings.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&num(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// First 16 hex digits of the SHA-256 of the canonical parameter echo.
pub fn run_id(command: &str, params: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(to_json_string(params).as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::InvalidConfig(format!("writing {}: {e}", path.display())))
}

fn write_outputs(command: &str, params: &Value, output: Output, common: &Common, started: Instant) -> Result<RunSummary> {
    std::fs::create_dir_all(&common.out_dir)
        .map_err(|e| Error::InvalidConfig(format!("creating {}: {e}", common.out_dir.display())))?;
    let id = run_id(command, params);
    let want_json = !common.csv;
    let want_csv = !common.json;
    let mut files = Vec::new();
    if let (true, Some(v)) = (want_json, &output.json) {
        let mut body = v.clone();
        if let Value::Object(map) = &mut body {
            map.insert("run_id".into(), json!(id));
        }
        let path = common.out_dir.join(format!("{command}-{id}.json"));
        write_file(&path, &to_json_string(&body))?;
        files.push(path);
    }
    if let (true, Some(text)) = (want_csv, &output.csv) {
        let path = common.out_dir.join(format!("{command}-{id}.csv"));
        write_file(&path, text)?;
        files.push(path);
    }
    let all_pass = output.checks.iter().all(|c| c.pass);
    let manifest = json!({
        "run_id": id,
        "command": command,
        "parameters": params,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "tolerances": { "contour_rel_tol": common.tol, "gl_order": common.gl_order, "surface": format!("{:?}", SurfaceConfig::default()) },
        "threads": common.threads,
        "notes": output.notes,
        "checks": output.checks,
        "all_pass": all_pass,
        "files": files.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect::<Vec<_>>(),
    });
    let manifest_path = common.out_dir.join(format!("{id}.manifest.json"));
    write_file(&manifest_path, &to_json_string(&manifest))?;
    Ok(RunSummary { run_id: id, files, manifest: manifest_path, all_pass })
}
