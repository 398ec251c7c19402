//! Pinching families, the collar chart of the opening node, and scaling
//! reports measured along the families.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{Chart, CurveModel, Segment, SurfacePoint, continue_root_along};
use crate::metric::{MetricEvaluator, SurfaceConfig};
use crate::periods::QuadratureConfig;
use crate::quadrature::{GaussRule, RectCubature};
use crate::{Error, Result};

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// Outer radius of the collar annulus in the `u` coordinate.
pub const U_MAX: f64 = 0.5;
/// Smallest admissible `|t|`.
pub const T_FLOOR: f64 = 1e-6;
/// Largest `|t|` for which the collar regions are ordered.
pub const T_COLLAR_MAX: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Nonsep,
    Sep,
}

/// A one-parameter family of curves degenerating by branch-point collision.
///
/// * `Nonsep` (genus 3): `f = (x^2 - t^2) prod (x - beta_j)`, six `beta`.
/// * `Sep` (genus 4): `f = prod (x - t alpha_i) prod (x - beta_j)`, five of each.
#[derive(Debug, Clone, PartialEq)]
pub struct PinchFamily {
    pub kind: FamilyKind,
    pub t: C,
    /// The colliding cluster at unit scale (`+-1` for `Nonsep`).
    pub cluster: Vec<C>,
    /// Branch points held fixed as `t` varies.
    pub fixed: Vec<C>,
}

pub fn default_nonsep_roots() -> Vec<C> {
    vec![
        C::new(2.0, 0.0),
        C::new(-2.0, 0.0),
        C::new(3.0, 0.0),
        C::new(-3.0, 0.0),
        C::new(2.0, 2.0),
        C::new(2.0, -2.0),
    ]
}

pub fn default_sep_cluster() -> Vec<C> {
    (0..5).map(|k| C::from_polar(0.8, 2.0 * std::f64::consts::PI * k as f64 / 5.0)).collect()
}

pub fn default_sep_roots() -> Vec<C> {
    [2.0, 3.0, -2.0, -3.0, 4.0].iter().map(|&x| C::new(x, 0.0)).collect()
}

impl PinchFamily {
    pub fn nonsep(t: C) -> Result<Self> {
        PinchFamily::nonsep_with(t, default_nonsep_roots())
    }

    pub fn nonsep_with(t: C, fixed: Vec<C>) -> Result<Self> {
        let family = PinchFamily { kind: FamilyKind::Nonsep, t, cluster: vec![ONE, -ONE], fixed };
        family.validate()?;
        Ok(family)
    }

    pub fn sep(eps: C) -> Result<Self> {
        PinchFamily::sep_with(eps, default_sep_cluster(), default_sep_roots())
    }

    pub fn sep_with(eps: C, cluster: Vec<C>, fixed: Vec<C>) -> Result<Self> {
        let family = PinchFamily { kind: FamilyKind::Sep, t: eps, cluster, fixed };
        family.validate()?;
        Ok(family)
    }

    /// The same family at another parameter value.
    pub fn at(&self, t: C) -> Result<Self> {
        let family = PinchFamily { t, ..self.clone() };
        family.validate()?;
        Ok(family)
    }

    fn validate(&self) -> Result<()> {
        let tn = self.t.norm();
        if !(tn >= T_FLOOR && tn < 1.0) {
            return Err(Error::InvalidConfig(format!("|t| = {tn} outside [{T_FLOOR}, 1)")));
        }
        let (nc, nf) = match self.kind {
            FamilyKind::Nonsep => (2, 6),
            FamilyKind::Sep => (5, 5),
        };
        if self.cluster.len() != nc || self.fixed.len() != nf {
            return Err(Error::InvalidConfig(format!(
                "{:?} needs {nc} cluster and {nf} fixed roots, got {} and {}",
                self.kind,
                self.cluster.len(),
                self.fixed.len()
            )));
        }
        if self.cluster.iter().any(|a| a.norm() > 1.0) {
            return Err(Error::InvalidConfig("cluster roots must satisfy |alpha| <= 1".into()));
        }
        if self.fixed.iter().any(|b| b.norm() < 2.0) {
            return Err(Error::InvalidConfig("fixed roots must satisfy |beta| >= 2".into()));
        }
        Ok(())
    }

    pub fn branch_points(&self) -> Vec<C> {
        self.cluster.iter().map(|a| a * self.t).chain(self.fixed.iter().copied()).collect()
    }

    pub fn curve(&self) -> Result<CurveModel> {
        CurveModel::from_roots(&self.branch_points())
    }

    pub fn genus(&self) -> usize {
        (self.cluster.len() + self.fixed.len()) / 2 - 1
    }

    /// Plumbing parameter of the opened node.
    pub fn plumbing(&self) -> C {
        match self.kind {
            FamilyKind::Nonsep => self.t * self.t,
            FamilyKind::Sep => self.t.sqrt(),
        }
    }

    /// `L = |log |t_p||`.
    pub fn log_scale(&self) -> f64 {
        self.plumbing().norm().ln().abs()
    }

    /// Genera of the normalized limit components at `t = 0`.
    pub fn limit_genera(&self) -> Vec<usize> {
        let nc = self.cluster.len();
        let nf = self.fixed.len();
        match self.kind {
            FamilyKind::Nonsep => vec![nf / 2 - 1],
            FamilyKind::Sep => vec![(nc + 1) / 2 - 1, (nf + 1) / 2 - 1],
        }
    }
}

/// The collar `|t| < |u| < U_MAX` around the node of a `Nonsep` family,
/// with `x = (u + t^2/u)/2` and local root `w = (u - t^2/u)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarChart {
    pub family: PinchFamily,
    pub u_max: f64,
    /// `L = |log |t_p|| = 2 |log |t||`.
    pub l: f64,
}

impl CollarChart {
    pub fn new(family: PinchFamily) -> Result<Self> {
        if family.kind != FamilyKind::Nonsep {
            return Err(Error::InvalidConfig("collar chart needs a nonseparating family".into()));
        }
        let l = family.log_scale();
        Ok(CollarChart { family, u_max: U_MAX, l })
    }

    pub fn t(&self) -> C {
        self.family.t
    }

    /// Radius `L^(-1/2)` separating the inner region from the outer one.
    pub fn mid_radius(&self) -> f64 {
        self.l.powf(-0.5)
    }

    pub fn contains(&self, u: C) -> bool {
        let r = u.norm();
        r >= self.t().norm() * (1.0 - 1e-12) && r < self.u_max
    }

    fn check(&self, u: C) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::OutOfCollar(u.norm()))
        }
    }

    /// `(x, w)` at `u`.
    pub fn to_x(&self, u: C) -> (C, C) {
        let v = self.t() * self.t() / u;
        ((u + v) * 0.5, (u - v) * 0.5)
    }

    /// Inverse map `u = x + sqrt(x^2 - t^2)`, continued radially inward from
    /// `|u| = u_max` where the root is close to `x`.
    pub fn from_x(&self, x: C) -> Result<C> {
        let t2 = self.t() * self.t();
        let far = x * (self.u_max / x.norm().max(1e-300));
        let seg = Segment::Line { start: far, end: x };
        let w0 = (far * far - t2).sqrt();
        let w0 = if (w0 - far).norm() < (w0 + far).norm() { w0 } else { -w0 };
        let roots = [self.t(), -self.t()];
        let samples = continue_root_along(&seg, w0, &roots, |a, b| (b * b - t2) / (a * a - t2))?;
        Ok(x + samples.last().expect("sample").y)
    }

    /// `sqrt(prod (x - beta_j))`, continued from its principal value at 0.
    fn fixed_root(&self, x: C) -> Result<C> {
        let beta = &self.family.fixed;
        let q0 = beta.iter().map(|b| -b).product::<C>().sqrt();
        if x == ZERO {
            return Ok(q0);
        }
        let seg = Segment::Line { start: ZERO, end: x };
        let samples = continue_root_along(&seg, q0, beta, |a, b| beta.iter().map(|&r| (b - r) / (a - r)).product())?;
        Ok(samples.last().expect("sample").y)
    }

    /// Raw differentials `x^(k-1) dx / y` in the `u` coordinate and their
    /// `u`-derivatives. Sheet invariant quantities only.
    pub fn frame(&self, u: C) -> Result<(Vec<C>, Vec<C>)> {
        self.check(u)?;
        Ok(self.frame_unchecked(u))
    }

    fn frame_unchecked(&self, u: C) -> (Vec<C>, Vec<C>) {
        let g = self.family.genus();
        let (x, w) = self.to_x(u);
        let q = self.family.fixed.iter().map(|&b| x - b).product::<C>().sqrt();
        let xu = w / u;
        let half_lq: C = self.family.fixed.iter().map(|&b| (x - b).inv()).sum::<C>() * 0.5;
        let base = (u * q).inv();
        let tail = u.inv() + xu * half_lq;
        let mut h0 = Vec::with_capacity(g);
        let mut h1 = Vec::with_capacity(g);
        let mut pow_km2 = ZERO;
        let mut pow_km1 = ONE;
        for k in 1..=g {
            h0.push(pow_km1 * base);
            h1.push((pow_km2 * xu * (k as f64 - 1.0) - pow_km1 * tail) * base);
            pow_km2 = pow_km1;
            pow_km1 *= x;
        }
        (h0, h1)
    }

    /// The surface point over `u`: an x-chart point, or a branch-chart point
    /// when `x` is within the branch chart radius of `+-t`.
    pub fn to_surface(&self, curve: &CurveModel, u: C) -> Result<SurfacePoint> {
        self.check(u)?;
        let (x, w) = self.to_x(u);
        let y = w * self.fixed_root(x)?;
        let (j, d) = curve.distance_to_branch(x);
        if d <= curve.r_chart() {
            let lam = curve.branch_points()[j];
            let s = (x - lam).sqrt();
            let p = curve.point_branch(j, s)?;
            if (p.y - y).norm() <= (p.y + y).norm() {
                return Ok(p);
            }
            return curve.point_branch(j, -s);
        }
        curve.point_x_with_y(x, y)
    }
}

/// `collar_to_surface` for a family.
pub fn collar_to_surface(family: &PinchFamily, curve: &CurveModel, u: C) -> Result<SurfacePoint> {
    CollarChart::new(family.clone())?.to_surface(curve, u)
}

/// Max and median of `|K|` on one circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleStats {
    pub radius: f64,
    pub max_abs_k: f64,
    pub median_abs_k: f64,
    /// Largest `K` seen (should be `<= 0`).
    pub max_k: f64,
    pub min_rho: f64,
}

/// Angles `2 pi (k + phase) / n`.
pub fn angular_grid(n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|k| 2.0 * std::f64::consts::PI * (k as f64 + phase) / n as f64).collect()
}

/// Curvature statistics on circles `|u| = r` of the collar.
pub fn curvature_profile(
    chart: &CollarChart,
    ev: &MetricEvaluator,
    radii: &[f64],
    n_angles: usize,
    phase: f64,
) -> Result<Vec<CircleStats>> {
    if n_angles == 0 {
        return Err(Error::InvalidConfig("n_angles must be positive".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let samples: Vec<(f64, f64)> = angular_grid(n_angles, phase)
                .par_iter()
                .map(|&th| {
                    let (h0, h1) = chart.frame(C::from_polar(r, th))?;
                    ev.metric_of_frame(&h0, &h1)
                })
                .collect::<Result<_>>()?;
            let mut abs: Vec<f64> = samples.iter().map(|s| s.1.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let n = abs.len();
            let median = if n % 2 == 1 { abs[n / 2] } else { 0.5 * (abs[n / 2 - 1] + abs[n / 2]) };
            Ok(CircleStats {
                radius: r,
                max_abs_k: abs[n - 1],
                median_abs_k: median,
                max_k: samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
                min_rho: samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

/// One `t` of a nonseparating sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub t: f64,
    pub l: f64,
    pub m_outer: f64,
    pub m_mid: f64,
    pub m_inner: f64,
    /// `M_mid / L`.
    pub mid_ratio: f64,
    /// `M_inner / (|t_p| L^2)`.
    pub inner_ratio: f64,
    /// Largest `K` over all samples of the row.
    pub max_k: f64,
    pub min_rho: f64,
}

/// Max over min of a positive series.
pub fn band(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub kind: FamilyKind,
    pub n_angles: usize,
    pub rows: Vec<ScalingRow>,
    pub mid_increasing: bool,
    pub mid_ratio_band: f64,
    pub outer_band: f64,
    pub inner_decreasing: bool,
    pub inner_ratio_band: f64,
    /// Largest `M_inner / (|t_p| L^2)` across the grid.
    pub envelope_constant: f64,
}

/// A family instance together with its metric.
pub struct FamilyInstance {
    pub family: PinchFamily,
    pub evaluator: MetricEvaluator,
}

impl FamilyInstance {
    pub fn new(family: PinchFamily, config: &QuadratureConfig) -> Result<Self> {
        let evaluator = MetricEvaluator::compute(family.curve()?, config)?;
        Ok(FamilyInstance { family, evaluator })
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidConfig("empty t grid".into()));
    }
    if !strictly_decreasing(t_grid) {
        return Err(Error::InvalidConfig("t grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Curvature maxima on the outer (`0.9 u_max`), middle (`L^(-1/2)`) and
/// inner (`2|t|`) circles of the collar for every `t`.
pub fn nonsep_sweep(
    base: &PinchFamily,
    t_grid: &[f64],
    n_angles: usize,
    config: &QuadratureConfig,
) -> Result<ScalingReport> {
    check_grid(t_grid)?;
    if t_grid[0] >= T_COLLAR_MAX {
        return Err(Error::InvalidConfig(format!("|t| must stay below {T_COLLAR_MAX}")));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let inst = FamilyInstance::new(base.at(C::new(t, 0.0))?, config)?;
        let chart = CollarChart::new(inst.family.clone())?;
        let radii = [0.9 * chart.u_max, chart.mid_radius(), 2.0 * t];
        let stats = curvature_profile(&chart, &inst.evaluator, &radii, n_angles, 0.0)?;
        let l = chart.l;
        let tp = inst.family.plumbing().norm();
        rows.push(ScalingRow {
            t,
            l,
            m_outer: stats[0].max_abs_k,
            m_mid: stats[1].max_abs_k,
            m_inner: stats[2].max_abs_k,
            mid_ratio: stats[1].max_abs_k / l,
            inner_ratio: stats[2].max_abs_k / (tp * l * l),
            max_k: stats.iter().map(|s| s.max_k).fold(f64::NEG_INFINITY, f64::max),
            min_rho: stats.iter().map(|s| s.min_rho).fold(f64::INFINITY, f64::min),
        });
    }
    let col = |f: fn(&ScalingRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let inner_ratio = col(|r| r.inner_ratio);
    Ok(ScalingReport {
        kind: FamilyKind::Nonsep,
        n_angles,
        mid_increasing: strictly_increasing(&col(|r| r.m_mid)),
        mid_ratio_band: band(&col(|r| r.mid_ratio)),
        outer_band: band(&col(|r| r.m_outer)),
        inner_decreasing: strictly_decreasing(&col(|r| r.m_inner)),
        inner_ratio_band: band(&inner_ratio),
        envelope_constant: inner_ratio.iter().copied().fold(0.0, f64::max),
        rows,
    })
}

/// Extremes of the scaled density over the two collar regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarBounds {
    /// `min` and `max` of `rho |u|^2 L` over `|t| < |u| < L^(-1/2)`.
    pub c_low: f64,
    pub c_high: f64,
    /// `min` and `max` of `rho` over `L^(-1/2) < |u| < u_max`.
    pub outer_low: f64,
    pub outer_high: f64,
}

impl CollarBounds {
    pub fn within(&self, c: f64) -> bool {
        self.c_low >= 1.0 / c && self.c_high <= c
    }
}

/// Samples the `u`-chart density on log-spaced circles of both regions.
pub fn collar_metric_check(
    chart: &CollarChart,
    ev: &MetricEvaluator,
    n_radii: usize,
    n_angles: usize,
) -> Result<CollarBounds> {
    if n_radii < 2 || n_angles == 0 {
        return Err(Error::InvalidConfig("need at least 2 radii and 1 angle".into()));
    }
    let t = chart.t().norm();
    let mid = chart.mid_radius();
    let sample = |lo: f64, hi: f64, scaled: bool| -> Result<(f64, f64)> {
        let (a, b) = (lo.ln(), hi.ln());
        let values: Vec<f64> = (0..n_radii)
            .flat_map(|i| {
                let r = (a + (b - a) * (i as f64 + 0.5) / n_radii as f64).exp();
                angular_grid(n_angles, 0.0).into_iter().map(move |th| C::from_polar(r, th))
            })
            .collect::<Vec<C>>()
            .par_iter()
            .map(|&u| {
                let (h0, _) = chart.frame(u)?;
                let rho = ev.density_of_frame(&h0);
                Ok(if scaled { rho * u.norm_sqr() * chart.l } else { rho })
            })
            .collect::<Result<_>>()?;
        Ok((
            values.iter().copied().fold(f64::INFINITY, f64::min),
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    };
    let (c_low, c_high) = sample(t, mid, true)?;
    let (outer_low, outer_high) = sample(mid, chart.u_max, false)?;
    Ok(CollarBounds { c_low, c_high, outer_low, outer_high })
}

/// `I(t) = L int rho d^2u` over `|t| < |u| < L^(-1/2)`, in log-polar
/// coordinates.
pub fn collar_integral(chart: &CollarChart, ev: &MetricEvaluator, config: &SurfaceConfig) -> Result<f64> {
    config.validate()?;
    let rule = GaussRule::new(config.gl_order);
    let scale = [chart.l];
    let cub = RectCubature { rule: &rule, rel_tol: config.rel_tol, max_depth: config.max_depth, scale: &scale };
    let a = chart.t().norm().ln();
    let b = chart.mid_radius().ln();
    let f = |sigma: f64, th: f64| -> Vec<f64> {
        let r = sigma.exp();
        let u = C::from_polar(r, th);
        let (h0, _) = chart.frame_unchecked(u);
        vec![chart.l * ev.density_of_frame(&h0) * r * r]
    };
    let tau = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    for q in 0..4 {
        total += cub.integrate([a, b], [tau * q as f64 / 4.0, tau * (q + 1) as f64 / 4.0], &f)?[0];
    }
    Ok(total)
}

/// Entries of `Im Omega` and its inverse along a nonseparating sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramRow {
    pub t: f64,
    pub l: f64,
    pub im_omega_11: f64,
    pub im_omega_11_over_l: f64,
    pub a11_l: f64,
    /// `max_{j != k} |a^{jk}| L`.
    pub offdiag_l: f64,
    /// `max_{k > 1} |a^{1k}| L`.
    pub pivot_row_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramTable {
    /// Basis index (zero based) moved to the first position.
    pub pivot: usize,
    pub rows: Vec<GramRow>,
}

/// The pivot is the index whose `Im Omega` diagonal grows most between the
/// first and last grid value.
pub fn gram_asymptotics(base: &PinchFamily, t_grid: &[f64], config: &QuadratureConfig) -> Result<GramTable> {
    check_grid(t_grid)?;
    if base.kind != FamilyKind::Nonsep {
        return Err(Error::InvalidConfig("Gram asymptotics need a nonseparating family".into()));
    }
    let mut mats = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let family = base.at(C::new(t, 0.0))?;
        let rm = crate::periods::RiemannMatrix::compute(&family.curve()?, config)?;
        mats.push((family.log_scale(), rm.im_omega(), rm.a_inv_im.clone()));
    }
    let g = base.genus();
    let (first, last) = (&mats[0].1, &mats[mats.len() - 1].1);
    let pivot = (0..g)
        .max_by(|&i, &j| (last[(i, i)] - first[(i, i)]).total_cmp(&(last[(j, j)] - first[(j, j)])))
        .expect("genus > 0");
    let rows = t_grid
        .iter()
        .zip(&mats)
        .map(|(&t, (l, im, a))| {
            let mut offdiag: f64 = 0.0;
            let mut pivot_row: f64 = 0.0;
            for j in 0..g {
                for k in 0..g {
                    if j != k {
                        offdiag = offdiag.max(a[(j, k)].abs());
                        if j == pivot {
                            pivot_row = pivot_row.max(a[(j, k)].abs());
                        }
                    }
                }
            }
            GramRow {
                t,
                l: *l,
                im_omega_11: im[(pivot, pivot)],
                im_omega_11_over_l: im[(pivot, pivot)] / l,
                a11_l: a[(pivot, pivot)] * l,
                offdiag_l: offdiag * l,
                pivot_row_l: pivot_row * l,
            }
        })
        .collect();
    Ok(GramTable { pivot, rows })
}

/// Probe circles for a separating family.
#[derive(Debug, Clone, PartialEq)]
pub struct SepProbes {
    /// Radius of the generic probe circle in `x`.
    pub generic_radius: f64,
    pub n_generic: usize,
    pub n_neck: usize,
}

impl Default for SepProbes {
    fn default() -> Self {
        SepProbes { generic_radius: 1.5, n_generic: 16, n_neck: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SepRow {
    pub eps: f64,
    pub max_abs_k: f64,
    /// Largest density: `x` chart on the generic circle, `s` chart with
    /// `x = s^2` on the neck circle `|x| = sqrt(eps)`.
    pub max_rho: f64,
    /// Largest density on the neck circle in the `x` chart.
    pub max_rho_x_neck: f64,
    pub max_k: f64,
    pub min_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SepReport {
    pub rows: Vec<SepRow>,
    pub k_band: f64,
    pub rho_band: f64,
}

/// Curvature and density at fixed generic points and on the neck of a
/// separating family.
pub fn sep_sweep(base: &PinchFamily, eps_grid: &[f64], probes: &SepProbes, config: &QuadratureConfig) -> Result<SepReport> {
    check_grid(eps_grid)?;
    if base.kind != FamilyKind::Sep {
        return Err(Error::InvalidConfig("sep_sweep needs a separating family".into()));
    }
    if probes.n_generic == 0 || probes.n_neck == 0 {
        return Err(Error::InvalidConfig("probe counts must be positive".into()));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let inst = FamilyInstance::new(base.at(C::new(eps, 0.0))?, config)?;
        let curve = inst.evaluator.curve();
        let mut samples: Vec<(f64, f64, bool)> = angular_grid(probes.n_generic, 0.5)
            .par_iter()
            .map(|&th| {
                let p = curve.raw_point(Chart::X { sheet: crate::curve::Sheet::One }, C::from_polar(probes.generic_radius, th));
                let (h0, h1) = curve.frame_unchecked(&p);
                let (rho, k) = inst.evaluator.metric_of_frame(&h0, &h1)?;
                Ok((rho, k, false))
            })
            .collect::<Result<_>>()?;
        let s_neck = eps.powf(0.25);
        let neck: Vec<(f64, f64, bool)> = angular_grid(probes.n_neck, 0.0)
            .par_iter()
            .map(|&th| {
                let s = C::from_polar(s_neck, 0.5 * th);
                let (h0, h1) = neck_frame(curve, s);
                let (rho, k) = inst.evaluator.metric_of_frame(&h0, &h1)?;
                Ok((rho, k, true))
            })
            .collect::<Result<_>>()?;
        let max_rho_x_neck = neck.iter().map(|v| v.0 / (4.0 * s_neck * s_neck)).fold(0.0, f64::max);
        samples.extend(neck);
        rows.push(SepRow {
            eps,
            max_abs_k: samples.iter().map(|v| v.1.abs()).fold(0.0, f64::max),
            max_rho: samples.iter().map(|v| v.0).fold(0.0, f64::max),
            max_rho_x_neck,
            max_k: samples.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max),
            min_rho: samples.iter().map(|v| v.0).fold(f64::INFINITY, f64::min),
        });
    }
    Ok(SepReport {
        k_band: band(&rows.iter().map(|r| r.max_abs_k).collect::<Vec<_>>()),
        rho_band: band(&rows.iter().map(|r| r.max_rho).collect::<Vec<_>>()),
        rows,
    })
}

/// Frame in the coordinate `s` with `x = s^2`, from the x-chart frame.
fn neck_frame(curve: &CurveModel, s: C) -> (Vec<C>, Vec<C>) {
    let p = curve.raw_point(Chart::X { sheet: crate::curve::Sheet::One }, s * s);
    let (h0, h1) = curve.frame_unchecked(&p);
    let xs = s * 2.0;
    let g0 = h0.iter().map(|h| h * xs).collect();
    let g1 = h0.iter().zip(&h1).map(|(a, b)| a * 2.0 + b * xs * xs).collect();
    (g0, g1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Sheet;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn instance(t: f64) -> (CollarChart, MetricEvaluator) {
        let family = PinchFamily::nonsep(c(t, 0.0)).unwrap();
        let ev = MetricEvaluator::compute(family.curve().unwrap(), &QuadratureConfig::default()).unwrap();
        (CollarChart::new(family).unwrap(), ev)
    }

    #[test]
    fn family_shapes() {
        let n = PinchFamily::nonsep(c(1e-3, 0.0)).unwrap();
        assert_eq!(n.genus(), 3);
        assert_eq!(n.branch_points().len(), 8);
        assert_eq!(n.limit_genera(), vec![2]);
        assert!((n.log_scale() - 2.0 * 1e-3f64.ln().abs()).abs() < 1e-12);
        let s = PinchFamily::sep(c(1e-3, 0.0)).unwrap();
        assert_eq!(s.genus(), 4);
        assert_eq!(s.limit_genera(), vec![2, 2]);
        assert!((s.log_scale() - 0.5 * 1e-3f64.ln().abs()).abs() < 1e-12);
        assert!(PinchFamily::nonsep(c(0.0, 0.0)).is_err());
        assert!(PinchFamily::nonsep_with(c(1e-2, 0.0), vec![c(1.0, 0.0); 6]).is_err());
        assert!(CollarChart::new(s).is_err());
    }

    #[test]
    fn collar_map_limits() {
        let (chart, _) = instance(1e-3);
        let t = chart.t();
        let (x, w) = chart.to_x(t);
        assert!((x - t).norm() < 1e-18 && w.norm() < 1e-18);
        let u = c(0.3, 0.2);
        let (x, w) = chart.to_x(u);
        assert!((x * x - w * w - t * t).norm() < 1e-15);
        assert!((x - u * 0.5).norm() / x.norm() < (t / u).norm_sqr());
        assert!(matches!(chart.frame(c(0.6, 0.0)), Err(Error::OutOfCollar(_))));
        assert!(matches!(chart.frame(t * 0.5), Err(Error::OutOfCollar(_))));
    }

    #[test]
    fn collar_round_trip() {
        let (chart, _) = instance(1e-2);
        for (r, th) in [(0.4, 0.3), (0.05, 2.0), (0.012, -1.0), (0.011, 3.0)] {
            let u = C::from_polar(r, th);
            let back = chart.from_x(chart.to_x(u).0).unwrap();
            assert!((back - u).norm() < 1e-10, "{u} -> {back}");
        }
    }

    #[test]
    fn collar_frame_matches_x_chart() {
        let (chart, ev) = instance(1e-2);
        let curve = ev.curve().clone();
        for u in [c(0.3, 0.1), c(-0.05, 0.2), c(0.02, -0.015)] {
            let (h0, h1) = chart.frame(u).unwrap();
            let (rho_u, k_u) = ev.metric_of_frame(&h0, &h1).unwrap();
            let p = chart.to_surface(&curve, u).unwrap();
            let (x, w) = chart.to_x(u);
            assert!((p.y * p.y - curve.eval_poly(x).0).norm() < 1e-10 * p.y.norm_sqr().max(1e-300));
            let s = ev.curvature(&p).unwrap();
            let jac = (w / u).norm_sqr() / curve.chart_jacobian(&p).norm_sqr();
            assert!(((s.rho * jac - rho_u) / rho_u).abs() < 1e-9, "{} {}", s.rho * jac, rho_u);
            assert!(((s.k - k_u) / k_u).abs() < 1e-8, "{} {}", s.k, k_u);
        }
    }

    #[test]
    fn neck_frame_is_chart_invariant() {
        let family = PinchFamily::sep(c(1e-3, 0.0)).unwrap();
        let ev = MetricEvaluator::compute(family.curve().unwrap(), &QuadratureConfig::default()).unwrap();
        let s = C::from_polar(1e-3f64.powf(0.25), 0.37);
        let (g0, g1) = neck_frame(ev.curve(), s);
        let (rho_s, k_s) = ev.metric_of_frame(&g0, &g1).unwrap();
        let p = ev.curve().point_x(s * s, Sheet::One).unwrap();
        let sample = ev.curvature(&p).unwrap();
        assert!(((sample.k - k_s) / k_s).abs() < 1e-8);
        assert!(((sample.rho * (s * 2.0).norm_sqr() - rho_s) / rho_s).abs() < 1e-10);
    }

    #[test]
    fn profile_resampling_is_stable() {
        let (chart, ev) = instance(1e-3);
        let radii = [0.45, chart.mid_radius(), 2e-3];
        let a = curvature_profile(&chart, &ev, &radii, 64, 0.0).unwrap();
        let b = curvature_profile(&chart, &ev, &radii, 64, 0.5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.max_abs_k - y.max_abs_k).abs() < 0.05 * x.max_abs_k);
            assert!(x.max_k <= 1e-9 && x.min_rho > 0.0);
        }
    }

    #[test]
    fn collar_integral_refines() {
        let (chart, ev) = instance(1e-3);
        let coarse = collar_integral(&chart, &ev, &SurfaceConfig::default()).unwrap();
        let fine = collar_integral(&chart, &ev, &SurfaceConfig { rel_tol: 1e-4, ..SurfaceConfig::default() }).unwrap();
        assert!(coarse > 0.0);
        assert!(((coarse - fine) / fine).abs() < 0.01);
    }

    #[test]
    fn grid_validation() {
        let base = PinchFamily::nonsep(c(1e-2, 0.0)).unwrap();
        let q = QuadratureConfig::default();
        assert!(nonsep_sweep(&base, &[1e-3, 1e-2], 8, &q).is_err());
        assert!(nonsep_sweep(&base, &[0.05], 8, &q).is_err());
        assert!(gram_asymptotics(&base, &[], &q).is_err());
        assert!(sep_sweep(&base, &[1e-2], &SepProbes::default(), &q).is_err());
    }

    #[test]
    fn band_helpers() {
        assert_eq!(band(&[2.0, 1.0, 4.0]), 4.0);
        assert!(strictly_increasing(&[1.0, 2.0]) && !strictly_increasing(&[1.0, 1.0]));
        assert!(strictly_decreasing(&[2.0, 1.0]));
    }
}
