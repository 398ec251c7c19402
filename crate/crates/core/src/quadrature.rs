//! Adaptive Gauss-Legendre quadrature along contour segments, with the
//! square root tracked by continuation.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C;

use crate::curve::{CurveModel, Segment};
use crate::summation::pairwise_sum_vecs;
use crate::{Error, Result};

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub(crate) struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("non-zero");
        let rule = GaussLegendre::new(order);
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect(),
            weights: pairs.iter().map(|p| 0.5 * p.1).collect(),
        }
    }

    /// Integral of a real vector function over `[a, b]`.
    #[cfg(test)]
    pub fn integrate_real<F>(&self, a: f64, b: f64, width: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        let h = b - a;
        let mut acc = vec![0.0; width];
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(a + h * t);
            for (s, x) in acc.iter_mut().zip(v) {
                *s += w * h * x;
            }
        }
        acc
    }
}

pub(crate) struct SegmentQuadrature<'a> {
    pub curve: &'a CurveModel,
    pub rule: &'a GaussRule,
    pub rel_tol: f64,
    pub max_depth: usize,
    pub width: usize,
}

struct Piece {
    u0: f64,
    x0: C,
    y0: C,
    f0: C,
}

impl SegmentQuadrature<'_> {
    /// Integrates `integrand(x, y) dx` along `seg`, starting on the branch
    /// `y_start`. Returns the integral and the continued `y` at the end.
    pub fn integrate<F>(&self, seg: &Segment, y_start: C, integrand: &F) -> Result<(Vec<C>, C)>
    where
        F: Fn(C, C) -> Vec<C>,
    {
        let samples = self.curve.continuation_samples(seg, y_start)?;
        let mut parts = Vec::with_capacity(samples.len());
        for w in samples.windows(2) {
            let piece = Piece { u0: w[0].u, x0: w[0].x, y0: w[0].y, f0: self.curve.eval_poly(w[0].x).0 };
            let (coarse, scale) = self.estimate(seg, &piece, w[0].u, w[1].u, integrand);
            parts.push(self.refine(seg, &piece, w[0].u, w[1].u, coarse, scale, 0, integrand)?);
        }
        let end_y = samples.last().expect("sample").y;
        Ok((pairwise_sum_vecs(&parts, self.width), end_y))
    }

    fn estimate<F>(&self, seg: &Segment, piece: &Piece, a: f64, b: f64, integrand: &F) -> (Vec<C>, f64)
    where
        F: Fn(C, C) -> Vec<C>,
    {
        let h = b - a;
        let mut acc = vec![C::new(0.0, 0.0); self.width];
        let mut l1 = 0.0;
        for (&t, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let u = a + h * t;
            let x = seg.point(u);
            let ratio = self.curve.eval_poly(x).0 / piece.f0;
            let y = piece.y0 * ratio.sqrt();
            let dx = seg.derivative(u) * (w * h);
            for (s, v) in acc.iter_mut().zip(integrand(x, y)) {
                let term = v * dx;
                l1 += term.norm();
                *s += term;
            }
        }
        debug_assert!(piece.u0 <= a && (piece.x0 - seg.point(piece.u0)).norm() <= 1e-9 * (1.0 + piece.x0.norm()));
        (acc, l1)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F>(
        &self,
        seg: &Segment,
        piece: &Piece,
        a: f64,
        b: f64,
        coarse: Vec<C>,
        scale: f64,
        depth: usize,
        integrand: &F,
    ) -> Result<Vec<C>>
    where
        F: Fn(C, C) -> Vec<C>,
    {
        let mid = 0.5 * (a + b);
        let (left, _) = self.estimate(seg, piece, a, mid, integrand);
        let (right, _) = self.estimate(seg, piece, mid, b, integrand);
        let fine: Vec<C> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let err = fine.iter().zip(&coarse).map(|(f, c)| (f - c).norm()).fold(0.0, f64::max);
        let size = fine.iter().map(|f| f.norm()).fold(0.0, f64::max).max(scale);
        if err <= self.rel_tol * size {
            return Ok(fine);
        }
        if depth + 1 >= self.max_depth {
            return Err(Error::QuadratureDivergence(format!(
                "segment {seg:?} on u in [{a}, {b}]"
            )));
        }
        let l = self.refine(seg, piece, a, mid, left, scale * 0.5, depth + 1, integrand)?;
        let r = self.refine(seg, piece, mid, b, right, scale * 0.5, depth + 1, integrand)?;
        Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
    }
}

/// Adaptive tensor-product Gauss-Legendre cubature over a rectangle.
///
/// `scale` gives per-component absolute magnitudes; a cell is accepted when
/// the four-child refinement changes every component by less than
/// `rel_tol * scale[k] * (cell area / domain area)` or `rel_tol` relative.
pub(crate) struct RectCubature<'a> {
    pub rule: &'a GaussRule,
    pub rel_tol: f64,
    pub max_depth: usize,
    pub scale: &'a [f64],
}

impl RectCubature<'_> {
    pub fn integrate<F>(&self, x: [f64; 2], y: [f64; 2], f: &F) -> Result<Vec<f64>>
    where
        F: Fn(f64, f64) -> Vec<f64> + Sync,
    {
        let domain = (x[1] - x[0]) * (y[1] - y[0]);
        let coarse = self.tensor(x, y, f);
        let mut leaves = Vec::new();
        self.refine(x, y, coarse, domain, 0, f, &mut leaves)?;
        Ok(pairwise_sum_vecs(&leaves, self.scale.len()))
    }

    fn tensor<F>(&self, x: [f64; 2], y: [f64; 2], f: &F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> Vec<f64>,
    {
        let (hx, hy) = (x[1] - x[0], y[1] - y[0]);
        let mut acc = vec![0.0; self.scale.len()];
        for (&tx, &wx) in self.rule.nodes.iter().zip(&self.rule.weights) {
            for (&ty, &wy) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let w = wx * wy * hx * hy;
                for (a, v) in acc.iter_mut().zip(f(x[0] + hx * tx, y[0] + hy * ty)) {
                    *a += w * v;
                }
            }
        }
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F>(
        &self,
        x: [f64; 2],
        y: [f64; 2],
        coarse: Vec<f64>,
        domain: f64,
        depth: usize,
        f: &F,
        leaves: &mut Vec<Vec<f64>>,
    ) -> Result<()>
    where
        F: Fn(f64, f64) -> Vec<f64> + Sync,
    {
        let xm = 0.5 * (x[0] + x[1]);
        let ym = 0.5 * (y[0] + y[1]);
        let cells = [
            ([x[0], xm], [y[0], ym]),
            ([xm, x[1]], [y[0], ym]),
            ([x[0], xm], [ym, y[1]]),
            ([xm, x[1]], [ym, y[1]]),
        ];
        let parts: Vec<Vec<f64>> = cells.iter().map(|&(cx, cy)| self.tensor(cx, cy, f)).collect();
        let fine = pairwise_sum_vecs(&parts, self.scale.len());
        let frac = (x[1] - x[0]) * (y[1] - y[0]) / domain;
        let converged = fine.iter().zip(&coarse).zip(self.scale).all(|((a, b), s)| {
            let err = (a - b).abs();
            err <= self.rel_tol * s * frac || err <= 1e-3 * self.rel_tol * a.abs()
        });
        if converged {
            leaves.push(fine);
            return Ok(());
        }
        if depth + 1 >= self.max_depth {
            return Err(Error::QuadratureDivergence(format!(
                "cell [{}, {}] x [{}, {}]",
                x[0], x[1], y[0], y[1]
            )));
        }
        for (&(cx, cy), part) in cells.iter().zip(parts) {
            self.refine(cx, cy, part, domain, depth + 1, f, leaves)?;
        }
        Ok(())
    }
}
