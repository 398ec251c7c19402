//! Cut system, candidate cycles, intersection numbers and the integer
//! symplectic reduction that turns candidates into an `A`/`B` basis.
//!
//! Candidates are "stadium" loops: the boundary of the `r`-neighbourhood
//! of a segment joining two consecutive branch points. Loops around the
//! cuts `(lambda_1 lambda_2), (lambda_3 lambda_4), ...` each enclose two
//! branch points; the dumbbell loops around the gaps
//! `(lambda_2 lambda_3), ...` link consecutive cuts through both sheets.
//! Together the `2g + 1` loops span the first homology with one relation.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::curve::{arc_parameter, point_line_distance, BranchSet, Contour, CurveModel, RootSample, Segment, Sheet};
use crate::{Error, Result};

/// A branch cut between two consecutive branch points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub index: usize,
    pub start: C,
    pub end: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    /// Loop around cut `i`.
    CutLoop(usize),
    /// Loop around the gap between cut `i` and cut `i + 1`.
    Dumbbell(usize),
}

/// A closed cycle on the surface: a closed contour together with the branch
/// of `y` carried along each segment.
#[derive(Debug, Clone)]
pub struct Cycle {
    pub kind: CycleKind,
    pub contour: Contour,
    /// Sheet (relative to the anchor labeling) of each straight run; an arc
    /// inherits the sheet of the run entering it.
    pub sheet_pattern: Vec<Sheet>,
    pub(crate) samples: Vec<Vec<RootSample>>,
}

impl Cycle {
    pub fn seed(&self) -> C {
        self.samples[0][0].y
    }

    /// `y` at the start of each segment.
    pub fn segment_seeds(&self) -> Vec<C> {
        self.samples.iter().map(|s| s[0].y).collect()
    }

    /// Value of `y` on this cycle at parameter `u` of segment `seg`.
    fn y_at(&self, curve: &CurveModel, seg: usize, u: f64) -> C {
        let samples = &self.samples[seg];
        let k = samples.partition_point(|s| s.u <= u).saturating_sub(1);
        let s = samples[k];
        let x = self.contour.segments()[seg].point(u);
        s.y * (curve.eval_poly(x).0 / curve.eval_poly(s.x).0).sqrt()
    }
}

/// Integer combinations of candidate cycles forming a symplectic basis.
#[derive(Debug, Clone)]
pub struct CycleBasis {
    pub candidates: Vec<Cycle>,
    /// `2g` rows; rows `0..g` are the `A` cycles, rows `g..2g` the `B` cycles.
    pub transform: Vec<Vec<i64>>,
    pub intersection: Vec<Vec<i64>>,
    pub dropped: usize,
}

impl CycleBasis {
    pub fn genus(&self) -> usize {
        self.transform.len() / 2
    }

    pub fn a_combination(&self, i: usize) -> &[i64] {
        &self.transform[i]
    }

    pub fn b_combination(&self, i: usize) -> &[i64] {
        &self.transform[self.genus() + i]
    }
}

/// Standard symplectic form `[[0, I], [-I, 0]]` of size `2g`.
pub fn standard_form(g: usize) -> Vec<Vec<i64>> {
    let mut j = vec![vec![0; 2 * g]; 2 * g];
    for i in 0..g {
        j[i][g + i] = 1;
        j[g + i][i] = -1;
    }
    j
}

/// Pairs consecutive branch points into `g + 1` cuts.
pub fn build_cuts(branch: &BranchSet) -> Result<Vec<Cut>> {
    let pts = branch.points();
    let cuts: Vec<Cut> = pts
        .chunks(2)
        .enumerate()
        .map(|(index, p)| Cut { index, start: p[0], end: p[1] })
        .collect();
    for i in 0..cuts.len() {
        for j in i + 1..cuts.len() {
            if segments_intersect(cuts[i].start, cuts[i].end, cuts[j].start, cuts[j].end) {
                return Err(Error::CutCollision(i, j));
            }
        }
    }
    Ok(cuts)
}

fn cross(a: C, b: C) -> f64 {
    (a.conj() * b).im
}

fn segments_intersect(a: C, b: C, c: C, d: C) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: C, q: C, r: C| point_line_distance(r, p, q) == 0.0;
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

/// Stadium loop around `[a, b]` at distance `r`, counterclockwise, starting
/// at the midpoint of the run on the right-hand side of `a -> b`.
fn stadium(a: C, b: C, r: f64) -> Result<Contour> {
    let d = (b - a) / (b - a).norm();
    let n = C::i() * d;
    let mid = 0.5 * (a + b) - n * r;
    let right = (-n).arg();
    let left = n.arg();
    Contour::new(vec![
        Segment::Line { start: mid, end: b - n * r },
        Segment::Arc { center: b, radius: r, start_angle: right, sweep: PI },
        Segment::Line { start: b + n * r, end: a + n * r },
        Segment::Arc { center: a, radius: r, start_angle: left, sweep: PI },
        Segment::Line { start: a - n * r, end: mid },
    ])
}

/// Distance from segment `[a, b]` to the nearest branch point other than
/// its endpoints.
fn clearance(curve: &CurveModel, a: C, b: C) -> f64 {
    curve
        .branch_points()
        .iter()
        .filter(|&&l| l != a && l != b)
        .map(|&l| point_line_distance(l, a, b))
        .fold(f64::INFINITY, f64::min)
}

fn make_cycle(curve: &CurveModel, kind: CycleKind, contour: Contour) -> Result<Cycle> {
    let seed = curve.sheet_one_y(contour.start())?;
    let mut samples = Vec::with_capacity(contour.segments().len());
    let mut sheet_pattern = Vec::with_capacity(contour.segments().len());
    let mut y = seed;
    let mut current = Sheet::One;
    for seg in contour.segments() {
        let s = curve.continuation_samples(seg, y)?;
        if let Segment::Line { .. } = seg {
            let mid = seg.point(0.5);
            let k = s.partition_point(|r| r.u <= 0.5).saturating_sub(1);
            let ym = s[k].y * (curve.eval_poly(mid).0 / curve.eval_poly(s[k].x).0).sqrt();
            let y1 = curve.sheet_one_y(mid)?;
            current = if (ym - y1).norm() <= (ym + y1).norm() { Sheet::One } else { Sheet::Two };
        }
        sheet_pattern.push(current);
        y = s.last().expect("sample").y;
        samples.push(s);
    }
    if (y - seed).norm() > 1e-8 * seed.norm() {
        return Err(Error::InvalidConfig(format!("{kind:?} does not close on the surface")));
    }
    Ok(Cycle { kind, contour, sheet_pattern, samples })
}

/// `2g + 1` candidate cycles: `g + 1` cut loops then `g` dumbbells.
pub fn candidate_cycles(curve: &CurveModel, cuts: &[Cut]) -> Result<Vec<Cycle>> {
    candidate_cycles_jittered(curve, cuts, 1)
}

/// As [`candidate_cycles`], with dumbbell radii enlarged by `jitter / 7` of
/// the base radius.
pub fn candidate_cycles_jittered(curve: &CurveModel, cuts: &[Cut], jitter: u32) -> Result<Vec<Cycle>> {
    let d_safe = curve.d_safe();
    let mut out = Vec::with_capacity(2 * cuts.len() - 1);
    for cut in cuts {
        let r = d_safe.min(clearance(curve, cut.start, cut.end) / 3.0);
        out.push(make_cycle(curve, CycleKind::CutLoop(cut.index), stadium(cut.start, cut.end, r)?)?);
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0].end, w[1].start);
        for cut in cuts {
            if segments_intersect(a, b, cut.start, cut.end) && a != cut.end && b != cut.start {
                return Err(Error::CutCollision(w[0].index, cut.index));
            }
        }
        let base = d_safe.min(clearance(curve, a, b) / 4.0);
        let r = base * (1.0 + f64::from(jitter) / 7.0);
        out.push(make_cycle(curve, CycleKind::Dumbbell(w[0].index), stadium(a, b, r)?)?);
    }
    Ok(out)
}

/// A transversal crossing of two segments: parameters and tangents.
struct Crossing {
    u: f64,
    v: f64,
    tu: C,
    tv: C,
}

const JOINT_EPS: f64 = 1e-9;

fn crossings(s: &Segment, t: &Segment) -> std::result::Result<Vec<Crossing>, ()> {
    let mut out = Vec::new();
    let mut push = |u: f64, v: f64| -> std::result::Result<(), ()> {
        if !(-JOINT_EPS..1.0 + JOINT_EPS).contains(&u) || !(-JOINT_EPS..1.0 + JOINT_EPS).contains(&v) {
            return Ok(());
        }
        if u < JOINT_EPS || u > 1.0 - JOINT_EPS || v < JOINT_EPS || v > 1.0 - JOINT_EPS {
            return Err(());
        }
        let (tu, tv) = (s.derivative(u), t.derivative(v));
        if cross(tu, tv).abs() <= 1e-8 * tu.norm() * tv.norm() {
            return Err(());
        }
        out.push(Crossing { u, v, tu, tv });
        Ok(())
    };
    match (*s, *t) {
        (Segment::Line { start: a, end: b }, Segment::Line { start: c, end: d }) => {
            let den = cross(b - a, d - c);
            if den.abs() <= 1e-14 * (b - a).norm() * (d - c).norm() {
                if point_line_distance(c, a, b).min(point_line_distance(d, a, b)) < 1e-12 {
                    return Err(());
                }
                return Ok(out);
            }
            let u = cross(c - a, d - c) / den;
            let v = cross(c - a, b - a) / den;
            push(u, v)?;
        }
        (Segment::Line { start, end }, arc @ Segment::Arc { .. }) => {
            for (u, v) in line_arc(start, end, &arc) {
                push(u, v)?;
            }
        }
        (arc @ Segment::Arc { .. }, Segment::Line { start, end }) => {
            for (v, u) in line_arc(start, end, &arc) {
                push(u, v)?;
            }
        }
        (
            Segment::Arc { center: c1, radius: r1, start_angle: a1, sweep: s1 },
            Segment::Arc { center: c2, radius: r2, start_angle: a2, sweep: s2 },
        ) => {
            let dv = c2 - c1;
            let dist = dv.norm();
            if dist <= 1e-14 * (r1 + r2) {
                if (r1 - r2).abs() <= 1e-12 * (r1 + r2) {
                    return Err(());
                }
                return Ok(out);
            }
            if dist > r1 + r2 || dist < (r1 - r2).abs() {
                return Ok(out);
            }
            let along = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
            let h = (r1 * r1 - along * along).max(0.0).sqrt();
            let e = dv / dist;
            for sign in [1.0, -1.0] {
                let p = c1 + e * along + C::i() * e * (sign * h);
                let u = arc_parameter((p - c1).arg(), a1, s1);
                let v = arc_parameter((p - c2).arg(), a2, s2);
                if let (Some(u), Some(v)) = (u, v) {
                    push(u, v)?;
                }
                if h == 0.0 {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Intersections of a line `[a, b]` with an arc: `(u_line, v_arc)` pairs.
fn line_arc(a: C, b: C, arc: &Segment) -> Vec<(f64, f64)> {
    let Segment::Arc { center, radius, start_angle, sweep } = *arc else {
        return Vec::new();
    };
    let dir = b - a;
    let len2 = dir.norm_sqr();
    let w = a - center;
    let bq = (w * dir.conj()).re / len2;
    let cq = (w.norm_sqr() - radius * radius) / len2;
    let disc = bq * bq - cq;
    if disc < 0.0 {
        return Vec::new();
    }
    let root = disc.sqrt();
    let mut out = Vec::new();
    for u in [-bq - root, -bq + root] {
        let p = a + dir * u;
        if let Some(v) = arc_parameter((p - center).arg(), start_angle, sweep) {
            out.push((u, v));
        }
        if root == 0.0 {
            break;
        }
    }
    out
}

/// Antisymmetric matrix of algebraic intersection numbers: each planar
/// crossing counts `sign(tangent_i x tangent_j)` when both strands carry the
/// same value of `y` there, and zero otherwise.
pub fn intersection_numbers(curve: &CurveModel, cycles: &[Cycle]) -> Result<Vec<Vec<i64>>> {
    let n = cycles.len();
    let mut m = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut total = 0i64;
            for (si, s) in cycles[i].contour.segments().iter().enumerate() {
                for (sj, t) in cycles[j].contour.segments().iter().enumerate() {
                    let found = crossings(s, t).map_err(|_| Error::DegenerateCrossing(i, j))?;
                    for c in found {
                        let yi = cycles[i].y_at(curve, si, c.u);
                        let yj = cycles[j].y_at(curve, sj, c.v);
                        if (yi - yj).norm() < (yi + yj).norm() {
                            total += if cross(c.tu, c.tv) > 0.0 { 1 } else { -1 };
                        }
                    }
                }
            }
            m[i][j] = total;
            m[j][i] = -total;
        }
    }
    Ok(m)
}

fn det_bareiss(m: &[Vec<i64>]) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| i128::from(v)).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                    .ok_or(Error::IntegerOverflow)?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

fn form(m: &[Vec<i64>], a: &[i64], b: &[i64]) -> Result<i64> {
    let mut total = 0i128;
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if bj == 0 || m[i][j] == 0 {
                continue;
            }
            total += i128::from(ai) * i128::from(m[i][j]) * i128::from(bj);
        }
    }
    i64::try_from(total).map_err(|_| Error::IntegerOverflow)
}

fn axpy(target: &mut [i64], coef: i64, source: &[i64]) -> Result<()> {
    for (t, &s) in target.iter_mut().zip(source) {
        *t = coef
            .checked_mul(s)
            .and_then(|v| t.checked_add(v))
            .ok_or(Error::IntegerOverflow)?;
    }
    Ok(())
}

/// Integer symplectic Gram-Schmidt over candidate combinations.
///
/// One dependent candidate is dropped first (the smallest index whose
/// removal leaves a unimodular form), then vectors are paired by Euclidean
/// reduction so that `A_i . B_j = delta_ij` and `A.A = B.B = 0` exactly.
pub fn symplectic_reduce(cycles: Vec<Cycle>, m: &[Vec<i64>]) -> Result<CycleBasis> {
    let (transform, dropped) = symplectic_transform(m)?;
    let g = transform.len() / 2;
    let mut intersection = vec![vec![0; 2 * g]; 2 * g];
    for i in 0..2 * g {
        for j in 0..2 * g {
            intersection[i][j] = form(m, &transform[i], &transform[j])?;
        }
    }
    debug_assert_eq!(intersection, standard_form(g));
    Ok(CycleBasis { candidates: cycles, transform, intersection, dropped })
}

/// The integer part of [`symplectic_reduce`]: rows of combination
/// coefficients (A rows first) and the dropped candidate index.
pub fn symplectic_transform(m: &[Vec<i64>]) -> Result<(Vec<Vec<i64>>, usize)> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n || (0..n).any(|j| row[j] != -m[j][i]) {
            return Err(Error::InvalidConfig("intersection matrix is not antisymmetric".into()));
        }
    }
    let keep_all = n % 2 == 0 && det_bareiss(m)? == 1;
    let dropped = if keep_all {
        n
    } else {
        let mut found = None;
        for skip in 0..n {
            let sub: Vec<Vec<i64>> = (0..n)
                .filter(|&i| i != skip)
                .map(|i| (0..n).filter(|&j| j != skip).map(|j| m[i][j]).collect())
                .collect();
            if det_bareiss(&sub)? == 1 {
                found = Some(skip);
                break;
            }
        }
        found.ok_or(Error::RankDeficient(n - 1))?
    };
    let mut remaining: Vec<Vec<i64>> = (0..n)
        .filter(|&i| i != dropped)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 1;
            e
        })
        .collect();
    let rank = remaining.len();
    let mut a_rows = Vec::new();
    let mut b_rows = Vec::new();
    while !remaining.is_empty() {
        let e = remaining.remove(0);
        // Euclidean reduction of the row <e, .> over the remaining vectors.
        let pivot = loop {
            let vals: Vec<i64> = remaining.iter().map(|v| form(m, &e, v)).collect::<Result<_>>()?;
            let Some((p, &d)) = vals.iter().enumerate().filter(|(_, &v)| v != 0).min_by_key(|(_, &v)| v.abs()) else {
                return Err(Error::RankDeficient(rank));
            };
            let mut done = true;
            for k in 0..remaining.len() {
                if k == p || vals[k] == 0 {
                    continue;
                }
                let q = vals[k].div_euclid(d);
                let src = remaining[p].clone();
                axpy(&mut remaining[k], -q, &src)?;
                if vals[k] - q * d != 0 {
                    done = false;
                }
            }
            if done {
                break p;
            }
        };
        let f = remaining.remove(pivot);
        let d = form(m, &e, &f)?;
        let (a, b) = match d {
            1 => (e, f),
            -1 => (f, e),
            _ => return Err(Error::RankDeficient(rank)),
        };
        for v in remaining.iter_mut() {
            let sa = form(m, &a, v)?;
            let sb = form(m, &b, v)?;
            // v' = v + <b, v> a - <a, v> b is orthogonal to both a and b.
            axpy(v, sb, &a)?;
            axpy(v, -sa, &b)?;
        }
        a_rows.push(a);
        b_rows.push(b);
    }
    a_rows.extend(b_rows);
    Ok((a_rows, dropped))
}

/// Cuts, candidates, intersection numbers and reduction in one call,
/// retrying with jittered dumbbell radii on a degenerate crossing.
pub fn cycle_basis(curve: &CurveModel) -> Result<CycleBasis> {
    let cuts = build_cuts(curve.branch())?;
    let mut last = None;
    for jitter in 1..=3 {
        let cycles = candidate_cycles_jittered(curve, &cuts, jitter)?;
        match intersection_numbers(curve, &cycles) {
            Ok(m) => return symplectic_reduce(cycles, &m),
            Err(e @ Error::DegenerateCrossing(..)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
