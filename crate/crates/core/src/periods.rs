//! Period integrals and the Riemann matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::curve::CurveModel;
use crate::homology::{cycle_basis, Cycle, CycleBasis};
use crate::quadrature::{GaussRule, SegmentQuadrature};
use crate::summation::pairwise_sum_vecs;
use crate::{Error, Result};

/// Settings of the adaptive Gauss-Legendre contour quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub gl_order: usize,
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { gl_order: 24, rel_tol: 1e-10, max_depth: 12 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gl_order < 4 {
            return Err(Error::InvalidConfig(format!("gl_order {} < 4", self.gl_order)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::InvalidConfig(format!("rel_tol {} outside (0, 1e-4]", self.rel_tol)));
        }
        if self.max_depth < 4 {
            return Err(Error::InvalidConfig(format!("max_depth {} < 4", self.max_depth)));
        }
        Ok(())
    }
}

/// A- and B-periods of the monomial basis and the normalized Riemann matrix.
#[derive(Debug, Clone)]
pub struct RiemannMatrix {
    /// `P[i][j] = int_{A_i} x^j dx / y`.
    pub p: DMatrix<C>,
    /// `Q[i][j] = int_{B_i} x^j dx / y`.
    pub q: DMatrix<C>,
    /// `Omega = Q P^-1`.
    pub omega: DMatrix<C>,
    /// `(Im Omega)^-1`.
    pub a_inv_im: DMatrix<f64>,
    /// `C = P^-1`; the normalized differentials are `sum_j omega_j C[j][k]`.
    pub c: DMatrix<C>,
    pub symmetry_residual: f64,
    pub min_eig_im: f64,
}

impl RiemannMatrix {
    /// Builds the homology basis and the Riemann matrix of `curve`.
    pub fn compute(curve: &CurveModel, config: &QuadratureConfig) -> Result<Self> {
        let basis = cycle_basis(curve)?;
        riemann_matrix(curve, &basis, config)
    }

    pub fn genus(&self) -> usize {
        self.omega.nrows()
    }

    pub fn im_omega(&self) -> DMatrix<f64> {
        let im = self.omega.map(|z| z.im);
        (&im + im.transpose()) * 0.5
    }

    /// Normalized frame `C^T h`.
    pub fn normalize(&self, h: &[C]) -> Vec<C> {
        let g = self.genus();
        (0..g).map(|k| (0..g).map(|j| self.c[(j, k)] * h[j]).sum()).collect()
    }
}

/// Integrals of `x^(k-1) dx / y`, `k = 1..g`, over a closed cycle.
pub fn integrate_over_cycle(curve: &CurveModel, cycle: &Cycle, config: &QuadratureConfig) -> Result<Vec<C>> {
    config.validate()?;
    let rule = GaussRule::new(config.gl_order);
    integrate_with_rule(curve, cycle, config, &rule)
}

fn integrate_with_rule(curve: &CurveModel, cycle: &Cycle, config: &QuadratureConfig, rule: &GaussRule) -> Result<Vec<C>> {
    let g = curve.genus();
    let quad = SegmentQuadrature { curve, rule, rel_tol: config.rel_tol, max_depth: config.max_depth, width: g };
    let integrand = |x: C, y: C| -> Vec<C> {
        let yinv = y.inv();
        let mut out = Vec::with_capacity(g);
        let mut pow = C::new(1.0, 0.0);
        for _ in 0..g {
            out.push(pow * yinv);
            pow *= x;
        }
        out
    };
    let seeds = cycle.segment_seeds();
    let mut parts = Vec::with_capacity(seeds.len());
    for (seg, &y0) in cycle.contour.segments().iter().zip(&seeds) {
        parts.push(quad.integrate(seg, y0, &integrand)?.0);
    }
    Ok(pairwise_sum_vecs(&parts, g))
}

/// Assembles `P`, `Q`, `Omega` from the reduced basis and validates the
/// Riemann bilinear relations.
pub fn riemann_matrix(curve: &CurveModel, basis: &CycleBasis, config: &QuadratureConfig) -> Result<RiemannMatrix> {
    config.validate()?;
    let g = curve.genus();
    if basis.genus() != g {
        return Err(Error::InvalidConfig("basis genus does not match curve".into()));
    }
    let rule = GaussRule::new(config.gl_order);
    let candidate_periods: Vec<Vec<C>> = basis
        .candidates
        .par_iter()
        .map(|cy| integrate_with_rule(curve, cy, config, &rule))
        .collect::<Result<_>>()?;
    let combine = |row: &[i64]| -> Vec<C> {
        let terms: Vec<Vec<C>> = row
            .iter()
            .zip(&candidate_periods)
            .filter(|(&k, _)| k != 0)
            .map(|(&k, v)| v.iter().map(|z| z * k as f64).collect())
            .collect();
        pairwise_sum_vecs(&terms, g)
    };
    let mut p = DMatrix::<C>::zeros(g, g);
    let mut q = DMatrix::<C>::zeros(g, g);
    for i in 0..g {
        let a = combine(basis.a_combination(i));
        let b = combine(basis.b_combination(i));
        for j in 0..g {
            p[(i, j)] = a[j];
            q[(i, j)] = b[j];
        }
    }
    from_periods(p, q)
}

/// Normalizes raw period matrices into a [`RiemannMatrix`].
pub fn from_periods(p: DMatrix<C>, q: DMatrix<C>) -> Result<RiemannMatrix> {
    let g = p.nrows();
    let sv = p.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(Error::SingularAperiod(cond));
    }
    let c = p.clone().try_inverse().ok_or(Error::SingularAperiod(f64::INFINITY))?;
    let omega = &q * &c;
    let diff = &omega - omega.transpose();
    let symmetry_residual = diff.norm() / omega.norm();
    if symmetry_residual > 1e-6 {
        return Err(Error::RiemannRelationViolation(format!("symmetry residual {symmetry_residual:e}")));
    }
    let im = omega.map(|z| z.im);
    let im = (&im + im.transpose()) * 0.5;
    let chol = im.clone().cholesky().ok_or_else(|| {
        Error::RiemannRelationViolation("Im Omega is not positive definite".into())
    })?;
    let min_eig_im = im.clone().symmetric_eigen().eigenvalues.min();
    let a_inv_im = chol.inverse();
    let a_inv_im = (&a_inv_im + a_inv_im.transpose()) * 0.5;
    debug_assert_eq!(a_inv_im.nrows(), g);
    Ok(RiemannMatrix { p, q, omega, a_inv_im, c, symmetry_residual, min_eig_im })
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind `K(k)` (modulus `k`).
pub fn complete_elliptic_k(k: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
}

/// `tau = i K(k') / K(k)`: the period ratio of the lattice `(2K, 2iK')`.
pub fn agm_period_oracle(k: f64) -> C {
    let kp = (1.0 - k * k).sqrt();
    C::new(0.0, complete_elliptic_k(kp) / complete_elliptic_k(k))
}

/// Period ratio of `y^2 = (1 - x^2)(1 - k^2 x^2)`, whose lattice of
/// `dx / y` periods is `(4K, 2iK')`: `tau = i K(k') / (2 K(k))`.
pub fn quartic_period_ratio(k: f64) -> C {
    agm_period_oracle(k) * 0.5
}

/// Reduces `tau` (upper half plane) into the standard fundamental domain
/// of `SL(2, Z)`.
pub fn reduce_modular(mut tau: C) -> C {
    for _ in 0..1000 {
        tau.re -= tau.re.round();
        if tau.norm_sqr() < 1.0 - 1e-14 {
            tau = -tau.inv();
        } else {
            break;
        }
    }
    tau
}

/// `P C` for checking the A-normalization: should be the identity.
pub fn normalization_residual(rm: &RiemannMatrix) -> f64 {
    let id = DMatrix::<C>::identity(rm.genus(), rm.genus());
    (&rm.p * &rm.c - id).norm()
}

/// Smallest eigenvalue of `Im Omega` (convenience for reports).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{build_cuts, candidate_cycles};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn agm_limits() {
        assert!((complete_elliptic_k(1e-12) - PI / 2.0).abs() < 1e-12);
        let tau = agm_period_oracle(0.5f64.sqrt());
        assert!((tau - C::i()).norm() < 1e-14);
    }

    #[test]
    fn agm_matches_real_quadrature() {
        // K(k) = int_0^1 dx / sqrt((1-x^2)(1-k^2 x^2)); substitute x = sin t.
        let k: f64 = 0.5;
        let rule = GaussRule::new(40);
        let kk = rule.integrate_real(0.0, PI / 2.0, 1, |t| vec![1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt()])[0];
        let kp = (1.0 - k * k).sqrt();
        let kkp = rule.integrate_real(0.0, PI / 2.0, 1, |t| vec![1.0 / (1.0 - kp * kp * t.sin().powi(2)).sqrt()])[0];
        assert!((complete_elliptic_k(k) - kk).abs() < 1e-13);
        assert!((agm_period_oracle(k) - C::new(0.0, kkp / kk)).norm() < 1e-13);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        assert!(QuadratureConfig { gl_order: 3, ..Default::default() }.validate().is_err());
        assert!(QuadratureConfig { rel_tol: 1e-3, ..Default::default() }.validate().is_err());
        assert!(QuadratureConfig { max_depth: 2, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn contractible_cycle_integrates_to_zero() {
        use crate::curve::Contour;
        use crate::homology::{Cycle, CycleKind};
        let cv = CurveModel::from_roots(&[c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let contour = Contour::circle(c(3.0, 3.0), 1.0, 0.0);
        let seed = cv.sheet_one_y(contour.start()).unwrap();
        let samples = vec![cv.continuation_samples(&contour.segments()[0], seed).unwrap()];
        let cycle = Cycle { kind: CycleKind::CutLoop(0), contour, sheet_pattern: vec![crate::curve::Sheet::One], samples };
        let v = integrate_over_cycle(&cv, &cycle, &QuadratureConfig::default()).unwrap();
        for z in v {
            assert!(z.norm() < 1e-10);
        }
    }

    #[test]
    fn reversed_cycle_negates() {
        use crate::homology::Cycle;
        let cv = CurveModel::from_roots(&[c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        let cuts = build_cuts(cv.branch()).unwrap();
        let cycles = candidate_cycles(&cv, &cuts).unwrap();
        let cfg = QuadratureConfig::default();
        for cy in &cycles {
            let fwd = integrate_over_cycle(&cv, cy, &cfg).unwrap();
            let contour = cy.contour.reversed();
            let seed = cy.seed();
            let mut samples = Vec::new();
            let mut y = seed;
            for seg in contour.segments() {
                let s = cv.continuation_samples(seg, y).unwrap();
                y = s.last().unwrap().y;
                samples.push(s);
            }
            let rev = Cycle { kind: cy.kind, contour, sheet_pattern: cy.sheet_pattern.clone(), samples };
            let back = integrate_over_cycle(&cv, &rev, &cfg).unwrap();
            for (a, b) in fwd.iter().zip(&back) {
                assert!((a + b).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn quartic_a_cycle_matches_real_integral() {
        // f = x^4 - 1; the loop around the cut [-i, i] ... choose the cut
        // (-1, -i) ordering from canonical sort: -1, -i, i, 1.
        let cv = CurveModel::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        let cuts = build_cuts(cv.branch()).unwrap();
        let cycles = candidate_cycles(&cv, &cuts).unwrap();
        let cfg = QuadratureConfig::default();
        // dumbbell around the gap [-i, i]: twice the integral of dx/y along
        // the imaginary axis, |int_{-i}^{i} dx / sqrt(x^4-1)| = 2 int_0^1 dt / sqrt(1 - t^4)
        let d = integrate_over_cycle(&cv, &cycles[2], &cfg).unwrap()[0];
        let rule = GaussRule::new(60);
        // int_0^1 dt/sqrt(1-t^4), t = sin(theta)^(1/2) smoothing: use t = 1 - s^2
        let half = rule.integrate_real(0.0, 1.0, 1, |s| {
            let t: f64 = 1.0 - s * s;
            vec![2.0 * s / (1.0 - t.powi(4)).sqrt()]
        })[0];
        assert!((d.norm() - 4.0 * half).abs() < 1e-9 * d.norm(), "{} vs {}", d.norm(), 4.0 * half);
    }
}
