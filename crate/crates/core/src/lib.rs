//! Numerical Riemann surfaces for hyperelliptic curves `y^2 = f(x)`.
//!
//! The crate computes period matrices from a combinatorially reduced
//! symplectic homology basis, evaluates the canonical (Bergman) metric and
//! its Gaussian curvature at arbitrary surface points, integrates global
//! quantities (area, total curvature, the Gram matrix of the normalized
//! differentials) and sweeps degenerating families of curves to measure how
//! the curvature scales as a node forms.
//!
//! Module map:
//!
//! * [`curve`]: branch data, charts, analytic continuation of `y`, the
//!   holomorphic differential frame.
//! * [`homology`]: cut system, candidate cycles, intersection numbers and
//!   integer symplectic reduction.
//! * [`periods`]: adaptive Gauss-Legendre contour quadrature and the
//!   Riemann matrix.
//! * [`metric`]: density, curvature, finite-difference curvature and
//!   surface integrals.
//! * [`degeneration`]: pinching families, the collar chart and scaling
//!   reports.
//! * [`cli`]: the command-line front end (report writers, manifest).

pub mod cli;
pub mod curve;
pub mod degeneration;
pub mod homology;
pub mod metric;
pub mod periods;
pub mod poly;
mod quadrature;
mod summation;

pub use num_complex::Complex64;

pub use curve::{BranchSet, Chart, Contour, CurveModel, Segment, SurfacePoint};

pub use homology::{CycleBasis, Cycle, Cut};

pub use degeneration::{CollarChart, FamilyKind, PinchFamily};

pub use metric::{CurvatureSample, MetricEvaluator, SurfaceConfig};

pub use periods::{QuadratureConfig, RiemannMatrix};

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid branch set: {0}")]
    InvalidBranchSet(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("analytic continuation stalled near x = {at}")]
    ContinuationStall { at: Complex64 },
    #[error("point outside chart validity: {0}")]
    ChartViolation(String),
    #[error("branch cuts {0} and {1} intersect")]
    CutCollision(usize, usize),
    #[error("non-transversal crossing between cycles {0} and {1}")]
    DegenerateCrossing(usize, usize),
    #[error("candidate cycles do not span a unimodular lattice of rank {0}")]
    RankDeficient(usize),
    #[error("integer overflow during symplectic reduction")]
    IntegerOverflow,
    #[error("adaptive quadrature exceeded max depth on {0}")]
    QuadratureDivergence(String),
    #[error("A-period matrix is numerically singular (condition {0:e})")]
    SingularAperiod(f64),
    #[error("Riemann relations violated: {0}")]
    RiemannRelationViolation(String),
    #[error("metric density degenerate ({0:e})")]
    DegenerateDensity(f64),
    #[error("collar coordinate |u| = {0} outside the annulus")]
    OutOfCollar(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
