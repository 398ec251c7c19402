#![allow(dead_code)]

use hypercurv::curve::Sheet;
use hypercurv::{Complex64 as C, CurveModel, MetricEvaluator, QuadratureConfig, SurfacePoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `2g + 2` branch points uniform in the disk of radius `r`, pairwise at
/// least `gap` apart.
pub fn random_roots(rng: &mut ChaCha8Rng, genus: usize, r: f64, gap: f64) -> Vec<C> {
    let mut pts: Vec<C> = Vec::with_capacity(2 * genus + 2);
    while pts.len() < 2 * genus + 2 {
        let z = C::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if z.norm() < r && pts.iter().all(|p| (p - z).norm() >= gap) {
            pts.push(z);
        }
    }
    pts
}

pub fn roots_of_unity(n: usize) -> Vec<C> {
    (0..n).map(|k| C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect()
}

pub fn evaluator(roots: &[C]) -> MetricEvaluator {
    MetricEvaluator::compute(CurveModel::from_roots(roots).unwrap(), &QuadratureConfig::default()).unwrap()
}

/// A point of the x chart at least `2 r_chart` from every branch point.
pub fn random_x_point(rng: &mut ChaCha8Rng, curve: &CurveModel, r: f64) -> SurfacePoint {
    loop {
        let x = C::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        if curve.distance_to_branch(x).1 > 2.0 * curve.r_chart() {
            let sheet = if rng.gen_bool(0.5) { Sheet::One } else { Sheet::Two };
            return curve.point_x(x, sheet).unwrap();
        }
    }
}

/// Curvature from the five-point Laplacian of `log rho` in the x chart,
/// Richardson-extrapolated over `h` and `h / 2`.
pub fn fd_curvature_x(ev: &MetricEvaluator, x: C, sheet: Sheet, h: f64) -> f64 {
    let log_rho = |z: C| ev.rho(&ev.curve().point_x(z, sheet).unwrap()).unwrap().ln();
    let at = |h: f64| {
        let centre = log_rho(x);
        let ring: f64 = [C::new(h, 0.0), C::new(-h, 0.0), C::new(0.0, h), C::new(0.0, -h)]
            .iter()
            .map(|d| log_rho(x + d))
            .sum();
        -2.0 * (ring - 4.0 * centre) / (4.0 * h * h) / centre.exp()
    };
    (4.0 * at(0.5 * h) - at(h)) / 3.0
}

pub fn band(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}
