mod common;

use common::{evaluator, roots_of_unity};
use hypercurv::curve::Sheet;
use hypercurv::{Complex64 as C, CurveModel, Error, MetricEvaluator, QuadratureConfig, RiemannMatrix, SurfaceConfig};

#[test]
fn stencil_leaving_the_chart_is_an_error() {
    let ev = evaluator(&roots_of_unity(6));
    let curve = ev.curve();
    let x = C::new(1.0 + 1.05 * curve.r_chart(), 0.0);
    let p = curve.point_x(x, Sheet::One).unwrap();
    assert!(matches!(ev.curvature_fd(&p, 0.2 * curve.r_chart()), Err(Error::ChartViolation(_))));
    assert!(ev.curvature_fd(&p, 1e-3 * curve.r_chart()).is_ok());
    assert!(matches!(ev.curvature_fd(&p, 0.0), Err(Error::InvalidConfig(_))));
}

#[test]
fn genus_mismatch_is_rejected() {
    let sextic = CurveModel::from_roots(&roots_of_unity(6)).unwrap();
    let octic = CurveModel::from_roots(&roots_of_unity(8)).unwrap();
    let rm = RiemannMatrix::compute(&octic, &QuadratureConfig::default()).unwrap();
    assert!(MetricEvaluator::new(sextic, rm).is_err());
}

#[test]
fn gram_pairing_indices_are_checked() {
    let ev = evaluator(&roots_of_unity(6));
    let cfg = SurfaceConfig::default();
    assert!(matches!(ev.gram_pairing(2, 0, &cfg), Err(Error::InvalidConfig(_))));
    let g01 = ev.gram_pairing(0, 1, &cfg).unwrap();
    let g10 = ev.gram_pairing(1, 0, &cfg).unwrap();
    assert!((g01 - g10.conj()).norm() < 1e-9);
}

#[test]
fn density_transforms_between_sheets_and_infinity() {
    let ev = evaluator(&roots_of_unity(8));
    let curve = ev.curve();
    let x = C::new(3.5, -1.0);
    let px = curve.point_x(x, Sheet::Two).unwrap();
    let pi = curve.to_chart(&px, hypercurv::Chart::Infinity { sheet: Sheet::One }).unwrap();
    let (kx, ki) = (ev.curvature(&px).unwrap(), ev.curvature(&pi).unwrap());
    assert!((kx.k - ki.k).abs() <= 1e-9 * kx.k.abs());
    assert!((kx.rho * curve.chart_jacobian(&pi).norm_sqr() - ki.rho).abs() <= 1e-9 * ki.rho);
    let other = curve.point_x(x, Sheet::One).unwrap();
    assert_eq!(ev.rho(&other).unwrap(), ev.rho(&px).unwrap());
}

#[test]
fn surface_config_is_validated() {
    let ev = evaluator(&roots_of_unity(6));
    let bad = SurfaceConfig { gl_order: 1, ..SurfaceConfig::default() };
    assert!(ev.surface_integrals(&bad).is_err());
}
