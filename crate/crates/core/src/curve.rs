//! Hyperelliptic curves `y^2 = f(x) = prod (x - lambda_i)` with an even
//! number of finite branch points, their charts, and analytic continuation
//! of `y` along contours.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::{Error, Result};

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Continuation steps keep `|dx| * sum 1/|x - r|` below this bound, which
/// caps the change of `arg f` per step at roughly half a radian.
const STEP_FACTOR: f64 = 0.5;
const MAX_CONTINUATION_STEPS: usize = 1_000_000;

/// Branch points in canonical order (ascending real part, ties by
/// imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    points: Vec<C>,
    min_gap: f64,
}

impl BranchSet {
    pub fn new(mut points: Vec<C>) -> Result<Self> {
        if points.len() < 4 || points.len() % 2 != 0 {
            return Err(Error::InvalidBranchSet(format!(
                "need an even count >= 4, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidBranchSet("non-finite branch point".into()));
        }
        points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let mut min_gap = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                min_gap = min_gap.min((points[i] - points[j]).norm());
            }
        }
        if min_gap <= 0.0 {
            return Err(Error::InvalidBranchSet("repeated branch point".into()));
        }
        Ok(BranchSet { points, min_gap })
    }

    pub fn points(&self) -> &[C] {
        &self.points
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn genus(&self) -> usize {
        (self.points.len() - 2) / 2
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// Which square-root branch an x- or infinity-chart point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::One => 1.0,
            Sheet::Two => -1.0,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Sheet::One => 1,
            Sheet::Two => 2,
        }
    }
}

/// Local coordinate systems on the surface.
///
/// * `X`: the coordinate `x`, away from branch points.
/// * `Branch`: `x = lambda_j + s^2`, `y = s q(s)`.
/// * `Infinity`: `x = 1/xi`, `y = x^(g+1) eta(xi)`, `eta(0) = +-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    X { sheet: Sheet },
    Branch { index: usize },
    Infinity { sheet: Sheet },
}

/// A point of the surface expressed in one chart. `x` and `y` are cached;
/// at `xi = 0` in the infinity chart both are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub chart: Chart,
    pub coord: C,
    pub x: C,
    pub y: C,
    /// `y` in the x chart, `q(s)` in a branch chart, `eta(xi)` at infinity.
    root: C,
}

impl SurfacePoint {
    pub fn local_root(&self) -> C {
        self.root
    }
}

/// A straight line or circular arc in the x-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line { start: C, end: C },
    /// Points `center + radius * exp(i (start_angle + u * sweep))`, `u` in `[0, 1]`.
    Arc { center: C, radius: f64, start_angle: f64, sweep: f64 },
}

impl Segment {
    pub fn point(&self, u: f64) -> C {
        match *self {
            Segment::Line { start, end } => start + (end - start) * u,
            Segment::Arc { center, radius, start_angle, sweep } => {
                center + C::from_polar(radius, start_angle + u * sweep)
            }
        }
    }

    /// `dx/du`.
    pub fn derivative(&self, u: f64) -> C {
        match *self {
            Segment::Line { start, end } => end - start,
            Segment::Arc { radius, start_angle, sweep, .. } => {
                C::i() * sweep * C::from_polar(radius, start_angle + u * sweep)
            }
        }
    }

    pub fn start(&self) -> C {
        self.point(0.0)
    }

    pub fn end(&self) -> C {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => (end - start).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { start, end } => Segment::Line { start: end, end: start },
            Segment::Arc { center, radius, start_angle, sweep } => Segment::Arc {
                center,
                radius,
                start_angle: start_angle + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Euclidean distance from `p` to the segment.
    pub fn distance_to(&self, p: C) -> f64 {
        match *self {
            Segment::Line { start, end } => point_line_distance(p, start, end),
            Segment::Arc { center, radius, start_angle, sweep } => {
                let d = p - center;
                if d.norm() > 0.0 {
                    let u = arc_parameter(d.arg(), start_angle, sweep);
                    if let Some(u) = u {
                        return (d.norm() - radius).abs().min(
                            (p - self.point(u)).norm(),
                        );
                    }
                }
                (p - self.start()).norm().min((p - self.end()).norm())
            }
        }
    }
}

/// Parameter `u` in `[0, 1]` at which an arc reaches angle `theta`, if any.
pub(crate) fn arc_parameter(theta: f64, start_angle: f64, sweep: f64) -> Option<f64> {
    let turn = 2.0 * PI;
    let rel = if sweep >= 0.0 {
        (theta - start_angle).rem_euclid(turn)
    } else {
        (start_angle - theta).rem_euclid(turn)
    };
    let u = rel / sweep.abs();
    (u <= 1.0).then_some(u)
}

pub(crate) fn point_line_distance(p: C, a: C, b: C) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let u = ((p - a) * d.conj()).re / len2;
    (p - (a + d * u.clamp(0.0, 1.0))).norm()
}

/// An ordered chain of segments sharing endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    segments: Vec<Segment>,
}

impl Contour {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidConfig("empty contour".into()));
        }
        for w in segments.windows(2) {
            let (e, s) = (w[0].end(), w[1].start());
            let scale = 1.0 + e.norm().max(s.norm());
            if (e - s).norm() > 1e-12 * scale {
                return Err(Error::InvalidConfig(format!(
                    "contour gap between {e} and {s}"
                )));
            }
        }
        Ok(Contour { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> C {
        self.segments[0].start()
    }

    pub fn end(&self) -> C {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn is_closed(&self) -> bool {
        let scale = 1.0 + self.start().norm();
        (self.start() - self.end()).norm() <= 1e-12 * scale
    }

    pub fn reversed(&self) -> Contour {
        Contour {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// Circle of radius `r` about `center`, counterclockwise from angle `phase`.
    pub fn circle(center: C, r: f64, phase: f64) -> Contour {
        Contour {
            segments: vec![Segment::Arc { center, radius: r, start_angle: phase, sweep: 2.0 * PI }],
        }
    }
}

/// One sample of a continuation: parameter on the segment, point, value.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RootSample {
    pub u: f64,
    pub x: C,
    pub y: C,
}

/// The curve `y^2 = prod (x - lambda_i)` together with its sheet anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel {
    branch: BranchSet,
    genus: usize,
    anchor_x: C,
    anchor_y: C,
}

impl CurveModel {
    pub fn new(branch: BranchSet) -> Result<Self> {
        let genus = branch.genus();
        let pts = branch.points();
        let n = pts.len() as f64;
        let center = pts.iter().sum::<C>() / n;
        let radius = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
        let anchor_x = center - C::i() * (radius + 2.0 * branch.min_gap().max(radius));
        let mut curve = CurveModel { branch, genus, anchor_x, anchor_y: ZERO };
        curve.anchor_y = curve.eval_poly(anchor_x).0.sqrt();
        Ok(curve)
    }

    pub fn from_roots(roots: &[C]) -> Result<Self> {
        CurveModel::new(BranchSet::new(roots.to_vec())?)
    }

    pub fn branch(&self) -> &BranchSet {
        &self.branch
    }

    pub fn branch_points(&self) -> &[C] {
        self.branch.points()
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn anchor(&self) -> (C, C) {
        (self.anchor_x, self.anchor_y)
    }

    /// Chart radius: branch charts never reach another branch point.
    pub fn r_chart(&self) -> f64 {
        self.branch.min_gap() / 3.0
    }

    /// Minimum clearance of integration contours from branch points.
    pub fn d_safe(&self) -> f64 {
        self.branch.min_gap() / 10.0
    }

    /// Radius (in the `s` coordinate) of a branch chart disk.
    pub fn branch_chart_radius(&self) -> f64 {
        (2.0 * self.r_chart()).sqrt()
    }

    /// Radius of the infinity chart disk in `xi = 1/x`.
    pub fn infinity_chart_radius(&self) -> f64 {
        1.0 / (self.branch.max_modulus() + self.r_chart())
    }

    /// `f(x)` and `f'(x)` in one pass.
    pub fn eval_poly(&self, x: C) -> (C, C) {
        let mut f = ONE;
        let mut df = ZERO;
        for &l in self.branch.points() {
            df = df * (x - l) + f;
            f *= x - l;
        }
        (f, df)
    }

    /// `f'(x) / f(x)`.
    pub fn log_derivative(&self, x: C) -> C {
        self.branch.points().iter().map(|&l| (x - l).inv()).sum()
    }

    pub fn distance_to_branch(&self, x: C) -> (usize, f64) {
        self.branch
            .points()
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, (x - l).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty branch set")
    }

    /// Continues `sqrt f` along `contour` from `y_seed`.
    pub fn continue_y(&self, contour: &Contour, y_seed: C) -> Result<C> {
        let mut y = y_seed;
        for seg in contour.segments() {
            let samples = self.continuation_samples(seg, y)?;
            y = samples.last().expect("at least one sample").y;
        }
        Ok(y)
    }

    /// Samples of the continuation of `sqrt f` along one segment. Between
    /// consecutive samples `y(x) = y_k * sqrt(f(x) / f(x_k))` with the
    /// principal root is the continuation.
    pub(crate) fn continuation_samples(&self, seg: &Segment, y_start: C) -> Result<Vec<RootSample>> {
        let roots = self.branch.points();
        continue_root_along(seg, y_start, roots, |a, b| {
            roots.iter().map(|&l| (b - l) / (a - l)).product()
        })
    }

    /// Path from the anchor to `x`: a straight segment with arcs of radius
    /// `d_safe` replacing the pieces that pass too close to a branch point.
    pub fn path_from_anchor(&self, x: C) -> Result<Contour> {
        let a = self.anchor_x;
        let r = self.d_safe();
        let dir = x - a;
        let len2 = dir.norm_sqr();
        let mut hits: Vec<(f64, f64, C)> = Vec::new();
        for &l in self.branch.points() {
            if point_line_distance(l, a, x) >= r {
                continue;
            }
            // Solve |a + u dir - l| = r for u.
            let w = a - l;
            let b = (w * dir.conj()).re / len2;
            let c = (w.norm_sqr() - r * r) / len2;
            let disc = (b * b - c).max(0.0);
            let (u1, u2) = (-b - disc.sqrt(), -b + disc.sqrt());
            if u2 >= 1.0 {
                return Err(Error::ChartViolation(format!(
                    "x = {x} lies within d_safe of branch point {l}"
                )));
            }
            if u1 <= 0.0 {
                return Err(Error::ChartViolation("anchor too close to a branch point".into()));
            }
            hits.push((u1, u2, l));
        }
        hits.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut segments = Vec::new();
        let mut cursor = a;
        for (u1, u2, l) in hits {
            let p1 = a + dir * u1;
            let p2 = a + dir * u2;
            let start_angle = (p1 - l).arg();
            segments.push(Segment::Line { start: cursor, end: l + C::from_polar(r, start_angle) });
            let mut sweep = ((p2 - l) / (p1 - l)).arg();
            if sweep.abs() > PI - 1e-9 {
                sweep = PI;
            }
            segments.push(Segment::Arc { center: l, radius: r, start_angle, sweep });
            cursor = l + C::from_polar(r, start_angle + sweep);
        }
        segments.push(Segment::Line { start: cursor, end: x });
        Contour::new(segments)
    }

    /// The sheet-one value of `y` at `x`.
    pub fn sheet_one_y(&self, x: C) -> Result<C> {
        let path = self.path_from_anchor(x)?;
        self.continue_y(&path, self.anchor_y)
    }

    pub fn point_x(&self, x: C, sheet: Sheet) -> Result<SurfacePoint> {
        let (_, d) = self.distance_to_branch(x);
        if d <= self.r_chart() {
            return Err(Error::ChartViolation(format!(
                "x = {x} is within r_chart of a branch point"
            )));
        }
        let y = self.sheet_one_y(x)? * sheet.sign();
        Ok(SurfacePoint { chart: Chart::X { sheet }, coord: x, x, y, root: y })
    }

    /// An x-chart point with an explicitly supplied `y` (no continuation).
    pub fn point_x_with_y(&self, x: C, y: C) -> Result<SurfacePoint> {
        let (_, d) = self.distance_to_branch(x);
        if d <= self.r_chart() {
            return Err(Error::ChartViolation(format!(
                "x = {x} is within r_chart of a branch point"
            )));
        }
        let f = self.eval_poly(x).0;
        if (y * y - f).norm() > 1e-10 * (1.0 + f.norm()) {
            return Err(Error::InvalidConfig(format!("y = {y} is not a root of f({x})")));
        }
        let sheet = match self.sheet_one_y(x) {
            Ok(y1) if (y - y1).norm() > (y + y1).norm() => Sheet::Two,
            _ => Sheet::One,
        };
        Ok(SurfacePoint { chart: Chart::X { sheet }, coord: x, x, y, root: y })
    }

    /// `q(s)` with `q^2 = prod_{i != j} (x - lambda_i)`, continued radially
    /// from its principal value at `s = 0`.
    fn branch_root(&self, index: usize, x: C) -> Result<C> {
        let pts = self.branch.points();
        let lam = pts[index];
        let others: Vec<C> = pts.iter().enumerate().filter(|&(i, _)| i != index).map(|(_, &p)| p).collect();
        let q0 = others.iter().map(|&p| lam - p).product::<C>().sqrt();
        if x == lam {
            return Ok(q0);
        }
        let seg = Segment::Line { start: lam, end: x };
        let samples = continue_root_along(&seg, q0, &others, |a, b| {
            others.iter().map(|&p| (b - p) / (a - p)).product()
        })?;
        Ok(samples.last().expect("sample").y)
    }

    pub fn point_branch(&self, index: usize, s: C) -> Result<SurfacePoint> {
        if index >= self.branch.len() {
            return Err(Error::ChartViolation(format!("no branch point {index}")));
        }
        if s.norm() >= self.branch_chart_radius() {
            return Err(Error::ChartViolation(format!(
                "|s| = {} outside branch chart {index}",
                s.norm()
            )));
        }
        let x = self.branch.points()[index] + s * s;
        let q = self.branch_root(index, x)?;
        Ok(SurfacePoint { chart: Chart::Branch { index }, coord: s, x, y: s * q, root: q })
    }

    fn infinity_root(&self, xi: C, sheet: Sheet) -> Result<C> {
        let seed = C::new(sheet.sign(), 0.0);
        if xi == ZERO {
            return Ok(seed);
        }
        let pts: Vec<C> = self.branch.points().iter().filter(|p| p.norm() > 0.0).map(|p| p.inv()).collect();
        let lams = self.branch.points();
        let seg = Segment::Line { start: ZERO, end: xi };
        let samples = continue_root_along(&seg, seed, &pts, |a, b| {
            lams.iter().map(|&l| (ONE - l * b) / (ONE - l * a)).product()
        })?;
        Ok(samples.last().expect("sample").y)
    }

    pub fn point_infinity(&self, xi: C, sheet: Sheet) -> Result<SurfacePoint> {
        if xi.norm() >= self.infinity_chart_radius() {
            return Err(Error::ChartViolation(format!("|xi| = {} outside infinity chart", xi.norm())));
        }
        let eta = self.infinity_root(xi, sheet)?;
        let (x, y) = if xi == ZERO {
            let inf = C::new(f64::INFINITY, 0.0);
            (inf, inf)
        } else {
            let x = xi.inv();
            (x, x.powi(self.genus as i32 + 1) * eta)
        };
        Ok(SurfacePoint { chart: Chart::Infinity { sheet }, coord: xi, x, y, root: eta })
    }

    /// Re-expresses `p` in the given chart, choosing the local coordinate
    /// whose `y` matches `p.y`.
    pub fn to_chart(&self, p: &SurfacePoint, chart: Chart) -> Result<SurfacePoint> {
        let matches = |q: &SurfacePoint| (q.y - p.y).norm() <= (q.y + p.y).norm();
        match chart {
            Chart::X { .. } => {
                let q = self.point_x_with_y(p.x, p.y)?;
                Ok(q)
            }
            Chart::Branch { index } => {
                let s = (p.x - self.branch.points()[index]).sqrt();
                let q = self.point_branch(index, s)?;
                if matches(&q) {
                    Ok(q)
                } else {
                    self.point_branch(index, -s)
                }
            }
            Chart::Infinity { .. } => {
                let xi = p.x.inv();
                let q = self.point_infinity(xi, Sheet::One)?;
                if matches(&q) {
                    Ok(q)
                } else {
                    self.point_infinity(xi, Sheet::Two)
                }
            }
        }
    }

    /// Checks that a point satisfies its chart's validity disk.
    pub fn check_chart(&self, p: &SurfacePoint) -> Result<()> {
        match p.chart {
            Chart::X { .. } => {
                if self.distance_to_branch(p.coord).1 <= self.r_chart() {
                    return Err(Error::ChartViolation(format!("x = {} too close to a branch point", p.coord)));
                }
            }
            Chart::Branch { index } => {
                if p.coord.norm() >= self.branch_chart_radius() || index >= self.branch.len() {
                    return Err(Error::ChartViolation(format!("s = {} outside branch chart", p.coord)));
                }
            }
            Chart::Infinity { .. } => {
                if p.coord.norm() >= self.infinity_chart_radius() {
                    return Err(Error::ChartViolation(format!("xi = {} outside infinity chart", p.coord)));
                }
            }
        }
        Ok(())
    }

    /// Coefficients of the monomial differentials `x^(k-1) dx / y` in the
    /// chart coordinate of `p` (`h0`) and their chart derivatives (`h1`).
    pub fn differential_frame(&self, p: &SurfacePoint) -> Result<(Vec<C>, Vec<C>)> {
        self.check_chart(p)?;
        Ok(self.frame_unchecked(p))
    }

    /// A point whose local root is the principal square root, without
    /// continuation. Only sheet-invariant quantities may be derived from it.
    pub(crate) fn raw_point(&self, chart: Chart, coord: C) -> SurfacePoint {
        match chart {
            Chart::X { .. } => {
                let y = self.eval_poly(coord).0.sqrt();
                SurfacePoint { chart, coord, x: coord, y, root: y }
            }
            Chart::Branch { index } => {
                let pts = self.branch.points();
                let x = pts[index] + coord * coord;
                let q = pts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != index)
                    .map(|(_, &l)| x - l)
                    .product::<C>()
                    .sqrt();
                SurfacePoint { chart, coord, x, y: coord * q, root: q }
            }
            Chart::Infinity { .. } => {
                let eta = self.branch.points().iter().map(|&l| ONE - l * coord).product::<C>().sqrt();
                let x = coord.inv();
                SurfacePoint { chart, coord, x, y: x.powi(self.genus as i32 + 1) * eta, root: eta }
            }
        }
    }

    pub(crate) fn frame_unchecked(&self, p: &SurfacePoint) -> (Vec<C>, Vec<C>) {
        let g = self.genus;
        let mut h0 = Vec::with_capacity(g);
        let mut h1 = Vec::with_capacity(g);
        match p.chart {
            Chart::X { .. } => {
                let x = p.x;
                let yinv = p.y.inv();
                let half_ld = self.log_derivative(x) * 0.5;
                let mut pow_km2 = ZERO; // x^(k-2)
                let mut pow_km1 = ONE; // x^(k-1)
                for k in 1..=g {
                    h0.push(pow_km1 * yinv);
                    h1.push((pow_km2 * (k as f64 - 1.0) - pow_km1 * half_ld) * yinv);
                    pow_km2 = pow_km1;
                    pow_km1 *= x;
                }
            }
            Chart::Branch { index } => {
                let s = p.coord;
                let x = p.x;
                let qinv = p.root.inv();
                let lg: C = self
                    .branch
                    .points()
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != index)
                    .map(|(_, &l)| (x - l).inv())
                    .sum();
                let mut pow_km2 = ZERO;
                let mut pow_km1 = ONE;
                for k in 1..=g {
                    h0.push(pow_km1 * qinv * 2.0);
                    h1.push(s * qinv * 2.0 * (pow_km2 * (2.0 * (k as f64 - 1.0)) - pow_km1 * lg));
                    pow_km2 = pow_km1;
                    pow_km1 *= x;
                }
            }
            Chart::Infinity { .. } => {
                let xi = p.coord;
                let etainv = p.root.inv();
                let half_lf: C = self
                    .branch
                    .points()
                    .iter()
                    .map(|&l| -l / (ONE - l * xi))
                    .sum::<C>()
                    * 0.5;
                for k in 1..=g {
                    let m = (g - k) as i32;
                    let pm = if m == 0 { ONE } else { xi.powi(m) };
                    let pm1 = match m {
                        0 => ZERO,
                        1 => ONE,
                        _ => xi.powi(m - 1),
                    };
                    h0.push(-pm * etainv);
                    h1.push((-pm1 * f64::from(m) + pm * half_lf) * etainv);
                }
            }
        }
        (h0, h1)
    }

    /// `dx / d(coord)` at `p`; zero at a branch point or at infinity.
    pub fn chart_jacobian(&self, p: &SurfacePoint) -> C {
        match p.chart {
            Chart::X { .. } => ONE,
            Chart::Branch { .. } => p.coord * 2.0,
            Chart::Infinity { .. } => -(p.coord * p.coord).inv(),
        }
    }
}

/// Continues `sqrt P` along a segment, where `ratio(a, b) = P(b) / P(a)` and
/// `roots` are the zeros of `P` (used only for step control).
pub(crate) fn continue_root_along<R>(seg: &Segment, y_start: C, roots: &[C], ratio: R) -> Result<Vec<RootSample>>
where
    R: Fn(C, C) -> C,
{
    let len = seg.length();
    let mut samples = vec![RootSample { u: 0.0, x: seg.start(), y: y_start }];
    if len == 0.0 {
        return Ok(samples);
    }
    let mut u = 0.0;
    let mut x = seg.start();
    let mut y = y_start;
    for _ in 0..MAX_CONTINUATION_STEPS {
        if u >= 1.0 {
            return Ok(samples);
        }
        let rate: f64 = roots.iter().map(|&r| (x - r).norm().recip()).sum();
        let du = if rate > 0.0 { STEP_FACTOR / (rate * len) } else { 1.0 };
        if !(du > 1e-15) {
            return Err(Error::ContinuationStall { at: x });
        }
        let u_next = (u + du).min(1.0);
        let x_next = if u_next == 1.0 { seg.end() } else { seg.point(u_next) };
        let r = ratio(x, x_next);
        if !(r.re.is_finite() && r.im.is_finite()) || r == ZERO {
            return Err(Error::ContinuationStall { at: x_next });
        }
        y *= r.sqrt();
        u = u_next;
        x = x_next;
        samples.push(RootSample { u, x, y });
    }
    Err(Error::ContinuationStall { at: x })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn quartic() -> CurveModel {
        CurveModel::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]).unwrap()
    }

    fn sextic() -> CurveModel {
        let roots: Vec<C> = (0..6).map(|k| C::from_polar(1.0, PI * k as f64 / 3.0)).collect();
        CurveModel::from_roots(&roots).unwrap()
    }

    #[test]
    fn eval_poly_examples() {
        // BranchSet requires >= 4 points, so the two-point examples use a
        // bare evaluation with the same product rule.
        let two = CurveModel {
            branch: BranchSet { points: vec![c(-1.0, 0.0), c(1.0, 0.0)], min_gap: 2.0 },
            genus: 0,
            anchor_x: c(0.0, -5.0),
            anchor_y: ONE,
        };
        let (f, df) = two.eval_poly(ZERO);
        assert_eq!(f, c(-1.0, 0.0));
        assert_eq!(df, ZERO);
        let curve = CurveModel::from_roots(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(curve.eval_poly(c(4.0, 0.0)).0, c(24.0, 0.0));
    }

    #[test]
    fn branch_set_validation() {
        assert!(BranchSet::new(vec![ONE, -ONE, C::i()]).is_err());
        assert!(BranchSet::new(vec![ONE, ONE, C::i(), -C::i()]).is_err());
        let b = BranchSet::new(vec![ONE, C::i(), ZERO, c(1.0, 1.0)]).unwrap();
        assert_eq!(b.points(), &[ZERO, C::i(), ONE, c(1.0, 1.0)]);
        assert_eq!(b.genus(), 1);
    }

    #[test]
    fn anchor_is_far_and_consistent() {
        for curve in [quartic(), sextic()] {
            let (ax, ay) = curve.anchor();
            let f = curve.eval_poly(ax).0;
            assert!((ay * ay - f).norm() <= 1e-12 * f.norm());
            assert!(curve.distance_to_branch(ax).1 >= 2.0 * curve.branch().min_gap());
        }
    }

    #[test]
    fn trivial_monodromy_without_enclosed_points() {
        let curve = quartic();
        let contour = Contour::circle(c(3.0, 3.0), 1.0, 0.3);
        let seed = curve.eval_poly(contour.start()).0.sqrt();
        let end = curve.continue_y(&contour, seed).unwrap();
        assert!((end - seed).norm() < 1e-12 * seed.norm());
    }

    #[test]
    fn sign_flip_around_one_branch_point() {
        let curve = sextic();
        let lam = curve.branch_points()[2];
        let contour = Contour::circle(lam, 0.2, 0.1);
        let seed = curve.eval_poly(contour.start()).0.sqrt();
        let end = curve.continue_y(&contour, seed).unwrap();
        assert!((end + seed).norm() < 1e-12 * seed.norm());

        // dense fixed-step oracle: 10^4 samples, nearest root each time
        let mut y = seed;
        for k in 1..=10_000 {
            let x = lam + C::from_polar(0.2, 0.1 + 2.0 * PI * k as f64 / 10_000.0);
            let r = curve.eval_poly(x).0.sqrt();
            y = if (r - y).norm() < (r + y).norm() { r } else { -r };
        }
        assert!((y + seed).norm() < 1e-9 * seed.norm());
    }

    #[test]
    fn even_monodromy_around_two_points() {
        let curve = quartic();
        let contour = Contour::circle(c(0.5, 0.5), 0.9, 0.0);
        let seed = curve.eval_poly(contour.start()).0.sqrt();
        let end = curve.continue_y(&contour, seed).unwrap();
        assert!((end - seed).norm() < 1e-12 * seed.norm());
    }

    #[test]
    fn continuation_through_branch_point_stalls() {
        let curve = quartic();
        let seg = Segment::Line { start: c(0.0, 0.0), end: c(2.0, 0.0) };
        let seed = curve.eval_poly(ZERO).0.sqrt();
        let err = curve.continue_y(&Contour::new(vec![seg]).unwrap(), seed);
        assert!(matches!(err, Err(Error::ContinuationStall { .. })));
    }

    #[test]
    fn detour_path_keeps_clearance() {
        let curve = sextic();
        // straight path from the anchor (below) to above the origin passes
        // near the branch points on the imaginary axis direction
        for &target in &[c(0.0, 0.5), c(0.5, 0.0), c(2.0, 2.0), c(-0.999, 0.9)] {
            let path = curve.path_from_anchor(target).unwrap();
            assert!((path.end() - target).norm() < 1e-12);
            for seg in path.segments() {
                for &l in curve.branch_points() {
                    assert!(seg.distance_to(l) >= curve.d_safe() * (1.0 - 1e-9));
                }
            }
        }
    }

    #[test]
    fn frame_example_quartic_at_origin() {
        let curve = CurveModel::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        // f(0) = -1 for x^4 - 1
        let p = curve.point_x_with_y(ZERO, C::i()).unwrap();
        let (h0, _) = curve.differential_frame(&p).unwrap();
        assert!((h0[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn branch_chart_at_branch_point_is_finite() {
        let curve = quartic();
        let idx = curve.branch_points().iter().position(|&l| (l - ONE).norm() < 1e-12).unwrap();
        let p = curve.point_branch(idx, ZERO).unwrap();
        let (h0, h1) = curve.differential_frame(&p).unwrap();
        // series oracle: f = (x-1)(x+1)(x^2+1), q(0)^2 = 2 * 2 = 4
        let q0 = 2.0;
        assert!((h0[0].norm() - 2.0 / q0).abs() < 1e-14);
        assert_eq!(h1[0], ZERO);
    }

    #[test]
    fn chart_compatibility_on_overlaps() {
        let curve = sextic();
        let r = curve.r_chart();
        for j in 0..6 {
            let lam = curve.branch_points()[j];
            for k in 0..5 {
                let x = lam + C::from_polar(1.5 * r, 0.7 + k as f64);
                let px = curve.point_x(x, Sheet::One).unwrap();
                let pb = curve.to_chart(&px, Chart::Branch { index: j }).unwrap();
                let (hx, _) = curve.differential_frame(&px).unwrap();
                let (hb, _) = curve.differential_frame(&pb).unwrap();
                let jac = curve.chart_jacobian(&pb);
                for (a, b) in hx.iter().zip(&hb) {
                    assert!((a * jac - b).norm() <= 1e-8 * b.norm());
                }
            }
        }
        // infinity overlap
        let x = c(3.0, 1.0);
        let px = curve.point_x(x, Sheet::Two).unwrap();
        let pi = curve.to_chart(&px, Chart::Infinity { sheet: Sheet::One }).unwrap();
        let (hx, _) = curve.differential_frame(&px).unwrap();
        let (hi, _) = curve.differential_frame(&pi).unwrap();
        let jac = curve.chart_jacobian(&pi);
        for (a, b) in hx.iter().zip(&hi) {
            assert!((a * jac - b).norm() <= 1e-8 * b.norm());
        }
    }

    fn fd_check(curve: &CurveModel, p: &SurfacePoint, h: f64) {
        let (_, h1) = curve.differential_frame(p).unwrap();
        let shift = |d: C| -> Vec<C> {
            let q = match p.chart {
                Chart::X { .. } => {
                    let x = p.coord + d;
                    let y = curve.eval_poly(x).0.sqrt();
                    let y = if (y - p.y).norm() < (y + p.y).norm() { y } else { -y };
                    curve.point_x_with_y(x, y).unwrap()
                }
                Chart::Branch { index } => curve.point_branch(index, p.coord + d).unwrap(),
                Chart::Infinity { sheet } => curve.point_infinity(p.coord + d, sheet).unwrap(),
            };
            curve.differential_frame(&q).unwrap().0
        };
        let fp = shift(C::new(h, 0.0));
        let fm = shift(C::new(-h, 0.0));
        for k in 0..h1.len() {
            let fd = (fp[k] - fm[k]) / (2.0 * h);
            let scale = h1[k].norm().max(1e-3 * fp[k].norm() / curve.r_chart());
            assert!((fd - h1[k]).norm() <= 1e-7 * scale, "k={k} fd={fd} h1={}", h1[k]);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let curve = sextic();
        let h = 1e-5 * curve.r_chart();
        for &x in &[c(0.3, 0.1), c(-0.2, 0.55), c(1.7, -0.4)] {
            fd_check(&curve, &curve.point_x(x, Sheet::One).unwrap(), h);
        }
        for j in 0..6 {
            fd_check(&curve, &curve.point_branch(j, c(0.2, 0.1)).unwrap(), h);
        }
        fd_check(&curve, &curve.point_infinity(c(0.2, -0.1), Sheet::One).unwrap(), h);
    }

    #[test]
    fn chart_violation_errors() {
        let curve = quartic();
        assert!(matches!(curve.point_x(c(1.01, 0.0), Sheet::One), Err(Error::ChartViolation(_))));
        assert!(matches!(curve.point_branch(0, c(2.0, 0.0)), Err(Error::ChartViolation(_))));
        assert!(matches!(curve.point_infinity(c(0.9, 0.0), Sheet::One), Err(Error::ChartViolation(_))));
    }
}
