use thiserror::Error;

/// Errors produced by the geometry, embedding and energy pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} outside metric domain: {reason}")]
    Domain { point: [f64; 4], reason: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("metric is not Lorentzian (-,+,+,+) at {point:?}: eigenvalues {eigenvalues:?}")]
    Signature {
        point: [f64; 4],
        eigenvalues: [f64; 4],
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("induced metric not positive definite at theta={theta}, phi={phi}")]
    NotImmersed { theta: f64, phi: f64 },

    #[error("mean curvature not spacelike at theta={theta}, phi={phi} (<H,H> = {norm_sq:e})")]
    NotSpacelike { theta: f64, phi: f64, norm_sq: f64 },

    #[error("degenerate normal bundle at theta={theta}, phi={phi}")]
    DegenerateNormal { theta: f64, phi: f64 },

    #[error("surface metric is not axisymmetric (relative spread {spread:e} at theta={theta})")]
    NotAxisymmetric { theta: f64, spread: f64 },

    #[error("metric not embeddable in R^3: radicand {radicand:e} at theta={theta}")]
    Embeddability { theta: f64, radicand: f64 },

    #[error("degenerate embedding profile at theta={theta}")]
    DegenerateProfile { theta: f64 },

    #[error("asymptotic regime violated: |H|/|H0| = {ratio} at theta={theta}")]
    RegimeGuard { theta: f64, ratio: f64 },

    #[error("rank-deficient extrapolation: {0}")]
    RankDeficient(String),

    #[error("ladder did not converge: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NonConvergent { residual: f64, tolerance: f64 },

    #[error("energy-momentum not future-timelike: e = {e}, |p| = {p_norm}")]
    NotTimelike { e: f64, p_norm: f64 },

    #[error(transparent)]
    Expr(#[from] crate::dsl::ExprError),
}

pub type Result<T> = std::result::Result<T, Error>;
