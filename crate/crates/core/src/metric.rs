//! The canonical metric density and its Gaussian curvature.
//!
//! With `w = C^T h` the A-normalized holomorphic frame at a point and
//! `A = (Im Omega)^-1`, the density is `rho = <w, w>_A` and the curvature is
//! `K = -2 <w'_perp, w'_perp>_A / rho^2`, where `w'_perp` is the chart
//! derivative of the frame with its component along `w` removed.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::curve::{Chart, CurveModel, Sheet, SurfacePoint};
use crate::periods::{QuadratureConfig, RiemannMatrix};
use crate::quadrature::{GaussRule, RectCubature};
use crate::summation::pairwise_sum_vecs;
use crate::{Error, Result};

/// Density and curvature at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub point: SurfacePoint,
    /// Density in the chart coordinate of `point`.
    pub rho: f64,
    /// Gaussian curvature (chart independent).
    pub k: f64,
}

/// Settings for surface integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConfig {
    pub gl_order: usize,
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig { gl_order: 8, rel_tol: 2e-4, max_depth: 14 }
    }
}

impl SurfaceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gl_order < 2 || self.gl_order > 64 {
            return Err(Error::InvalidConfig(format!("gl_order {} not in [2, 64]", self.gl_order)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidConfig(format!("rel_tol {} not in (0, 1)", self.rel_tol)));
        }
        if self.max_depth == 0 || self.max_depth > 30 {
            return Err(Error::InvalidConfig(format!("max_depth {} not in [1, 30]", self.max_depth)));
        }
        Ok(())
    }
}

/// Global integrals over the whole surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceIntegrals {
    pub area: f64,
    pub total_curvature: f64,
    /// `(i/2) int w_i ^ conj(w_j)`.
    pub gram: DMatrix<C>,
}

#[derive(Debug, Clone)]
pub struct MetricEvaluator {
    curve: CurveModel,
    rm: RiemannMatrix,
    /// Upper factor `U` with `A = U^T U`, so `<u, v>_A = (U u) . conj(U v)`.
    factor: DMatrix<f64>,
}

impl MetricEvaluator {
    pub fn new(curve: CurveModel, rm: RiemannMatrix) -> Result<Self> {
        if curve.genus() != rm.genus() {
            return Err(Error::InvalidConfig(format!(
                "curve genus {} but Riemann matrix of size {}",
                curve.genus(),
                rm.genus()
            )));
        }
        let a = rm.a_inv_im.clone();
        let a = (&a + a.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(a).ok_or_else(|| {
            Error::RiemannRelationViolation("(Im Omega)^-1 is not positive definite".into())
        })?;
        let factor = chol.l().transpose();
        Ok(MetricEvaluator { curve, rm, factor })
    }

    /// Computes the Riemann matrix of `curve` and wraps both.
    pub fn compute(curve: CurveModel, config: &QuadratureConfig) -> Result<Self> {
        let rm = RiemannMatrix::compute(&curve, config)?;
        MetricEvaluator::new(curve, rm)
    }

    pub fn curve(&self) -> &CurveModel {
        &self.curve
    }

    pub fn riemann_matrix(&self) -> &RiemannMatrix {
        &self.rm
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    /// `U C^T h`: the normalized frame in Euclidean coordinates of `A`.
    fn whiten(&self, h: &[C]) -> Vec<C> {
        let w = self.rm.normalize(h);
        let g = w.len();
        (0..g).map(|i| (i..g).map(|j| w[j] * self.factor[(i, j)]).sum()).collect()
    }

    /// Density of a frame given by its raw coefficients `h0`.
    pub fn density_of_frame(&self, h0: &[C]) -> f64 {
        self.whiten(h0).iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(rho, K)` from raw frame coefficients and their chart derivatives.
    pub fn metric_of_frame(&self, h0: &[C], h1: &[C]) -> Result<(f64, f64)> {
        let z0 = self.whiten(h0);
        let z1 = self.whiten(h1);
        let rho: f64 = z0.iter().map(|z| z.norm_sqr()).sum();
        if !(rho >= 1e-14) {
            return Err(Error::DegenerateDensity(rho));
        }
        let cross: C = z1.iter().zip(&z0).map(|(a, b)| a * b.conj()).sum::<C>() / rho;
        let perp: f64 = z1.iter().zip(&z0).map(|(a, b)| (a - cross * b).norm_sqr()).sum();
        Ok((rho, -2.0 * perp / (rho * rho)))
    }

    pub fn rho(&self, p: &SurfacePoint) -> Result<f64> {
        let (h0, _) = self.curve.differential_frame(p)?;
        Ok(self.density_of_frame(&h0))
    }

    pub fn curvature(&self, p: &SurfacePoint) -> Result<CurvatureSample> {
        let (h0, h1) = self.curve.differential_frame(p)?;
        let (rho, k) = self.metric_of_frame(&h0, &h1)?;
        Ok(CurvatureSample { point: *p, rho, k })
    }

    /// Five-point finite-difference curvature `-(2/rho) d dbar log rho`.
    pub fn curvature_fd(&self, p: &SurfacePoint, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("step {h} must be positive")));
        }
        let log_rho = |dz: C| -> Result<f64> {
            let q = self.point_in_chart(p, p.coord + dz)?;
            Ok(self.rho(&q)?.ln())
        };
        let centre = log_rho(C::new(0.0, 0.0))?;
        let mut ring = 0.0;
        for dz in [C::new(h, 0.0), C::new(-h, 0.0), C::new(0.0, h), C::new(0.0, -h)] {
            ring += log_rho(dz)?;
        }
        let lap = (ring - 4.0 * centre) / (4.0 * h * h);
        Ok(-2.0 * lap / centre.exp())
    }

    /// Richardson combination of the finite-difference curvature at `h` and
    /// `h / 2`.
    pub fn curvature_fd_richardson(&self, p: &SurfacePoint, h: f64) -> Result<f64> {
        let coarse = self.curvature_fd(p, h)?;
        let fine = self.curvature_fd(p, 0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    fn point_in_chart(&self, p: &SurfacePoint, coord: C) -> Result<SurfacePoint> {
        let q = match p.chart {
            Chart::X { sheet } => self.curve.point_x(coord, sheet)?,
            Chart::Branch { index } => self.curve.point_branch(index, coord)?,
            Chart::Infinity { sheet } => self.curve.point_infinity(coord, sheet)?,
        };
        self.curve.check_chart(&q)?;
        Ok(q)
    }

    pub fn surface_area(&self, config: &SurfaceConfig) -> Result<f64> {
        Ok(self.surface_integrals(config)?.area)
    }

    pub fn total_curvature(&self, config: &SurfaceConfig) -> Result<f64> {
        Ok(self.surface_integrals(config)?.total_curvature)
    }

    /// Pairing of the normalized differentials `i` and `j` (zero based).
    pub fn gram_pairing(&self, i: usize, j: usize, config: &SurfaceConfig) -> Result<C> {
        let g = self.genus();
        if i >= g || j >= g {
            return Err(Error::InvalidConfig(format!("pairing index ({i}, {j}) out of range for genus {g}")));
        }
        Ok(self.surface_integrals(config)?.gram[(i, j)])
    }

    /// Integrand components at a chart point: density, `K rho`, and the
    /// real and imaginary parts of `w_i conj(w_j)`.
    fn integrand(&self, chart: Chart, coord: C, weight: f64) -> Vec<f64> {
        let g = self.genus();
        let mut out = vec![0.0; 2 + 2 * g * g];
        if weight == 0.0 {
            return out;
        }
        let p = self.curve.raw_point(chart, coord);
        let (h0, h1) = self.curve.frame_unchecked(&p);
        let w = self.rm.normalize(&h0);
        let (rho, k) = match self.metric_of_frame(&h0, &h1) {
            Ok(v) => v,
            Err(_) => (self.density_of_frame(&h0), 0.0),
        };
        out[0] = weight * rho;
        out[1] = weight * k * rho;
        for i in 0..g {
            for j in 0..g {
                let z = w[i] * w[j].conj() * weight;
                out[2 + 2 * (i * g + j)] = z.re;
                out[3 + 2 * (i * g + j)] = z.im;
            }
        }
        out
    }

    /// Area, total curvature and Gram matrix from one partition-of-unity
    /// cubature: polar disks in each branch chart, a polar cap in each
    /// infinity chart, and an adaptive quadtree over the bulk of both
    /// x-sheets.
    pub fn surface_integrals(&self, config: &SurfaceConfig) -> Result<SurfaceIntegrals> {
        config.validate()?;
        let g = self.genus();
        let pts = self.curve.branch_points().to_vec();
        let radii: Vec<f64> = (0..pts.len())
            .map(|j| {
                let d = pts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, p)| (p - pts[j]).norm())
                    .fold(f64::INFINITY, f64::min);
                0.45 * d
            })
            .collect();
        let r_in = 1.05 * pts.iter().zip(&radii).map(|(p, r)| p.norm() + r).fold(0.0, f64::max);
        let rule = GaussRule::new(config.gl_order);
        let im = self.rm.im_omega();
        let mut scale = vec![g as f64, 4.0 * std::f64::consts::PI * (g as f64).max(1.0)];
        for i in 0..g {
            for j in 0..g {
                let s = (im[(i, i)] * im[(j, j)]).sqrt();
                scale.push(s);
                scale.push(s);
            }
        }
        let cub = RectCubature { rule: &rule, rel_tol: config.rel_tol, max_depth: config.max_depth, scale: &scale };
        let width = scale.len();

        let disk_weight = |x: C, j: usize| 1.0 - smooth_step(2.0 * (x - pts[j]).norm() / radii[j] - 1.0);
        let cap_weight = |x: C| smooth_step(x.norm() / r_in - 1.0);

        let mut parts = Vec::new();
        for j in 0..pts.len() {
            let s_max = radii[j].sqrt();
            let polar = |r: f64, th: f64| -> Vec<f64> {
                let s = C::from_polar(r, th);
                let x = pts[j] + s * s;
                self.integrand(Chart::Branch { index: j }, s, r * disk_weight(x, j))
            };
            parts.push(integrate_polar(&cub, s_max, &polar)?);
        }
        let xi_max = 1.0 / r_in;
        let cap = |r: f64, th: f64| -> Vec<f64> {
            let xi = C::from_polar(r, th);
            let wgt = if r == 0.0 { 1.0 } else { cap_weight(xi.inv()) };
            self.integrand(Chart::Infinity { sheet: Sheet::One }, xi, 2.0 * r * wgt)
        };
        parts.push(integrate_polar(&cub, xi_max, &cap)?);
        let half = 2.0 * r_in;
        let bulk = |a: f64, b: f64| -> Vec<f64> {
            let x = C::new(a, b);
            let mut wgt = 1.0 - cap_weight(x);
            for j in 0..pts.len() {
                wgt -= disk_weight(x, j);
            }
            if wgt <= 0.0 {
                return vec![0.0; width];
            }
            self.integrand(Chart::X { sheet: Sheet::One }, x, 2.0 * wgt)
        };
        parts.push(cub.integrate([-half, half], [-half, half], &bulk)?);
        let total = pairwise_sum_vecs(&parts, width);
        let mut gram = DMatrix::zeros(g, g);
        for i in 0..g {
            for j in 0..g {
                gram[(i, j)] = C::new(total[2 + 2 * (i * g + j)], total[3 + 2 * (i * g + j)]);
            }
        }
        Ok(SurfaceIntegrals { area: total[0], total_curvature: total[1], gram })
    }
}

fn integrate_polar<F>(cub: &RectCubature, r_max: f64, f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Vec<f64> + Sync,
{
    let tau = 2.0 * std::f64::consts::PI;
    let quarters: Vec<Vec<f64>> = (0..4)
        .map(|q| cub.integrate([0.0, r_max], [tau * q as f64 / 4.0, tau * (q + 1) as f64 / 4.0], f))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum_vecs(&quarters, cub.scale.len()))
}

/// `C^infinity` step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}
