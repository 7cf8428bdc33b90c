//! `H²` of finite simplicial complexes with `ℤ^k` and `ℝ` coefficients, the
//! first Chern class of a torus bundle from Čech transition data, and the
//! horizontal class of a bundle form as a vector of periods.

mod chern;
mod complex;
mod horizontal;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chern::{chern_class, CechCocycle, CocycleSpec, EdgeLift, TriangleLift};
pub use complex::{h2, ComplexSpec, H2Basis, H2Group, SimplicialComplex};
pub use horizontal::{
    basic_part, flat_connection, gauge_shift, gauss_legendre, horizontal_class, Cycle, CycleSpec, HorizontalOptions,
    HorizontalReport, Patch, PatchSpec,
};

use crate::expr::ExprError;
use crate::form::FormError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohomError {
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("invalid cocycle data: {0}")]
    InvalidCocycle(String),
    #[error("no lift given for edge {edge:?}")]
    MissingLift { edge: (i64, i64) },
    #[error("coboundary of the lifts is {value} on {triangle:?}, not an integer")]
    NonIntegralCoboundary { triangle: Vec<i64>, value: String },
    #[error("σ − d⟨ψ∘π, A⟩ is not basic (residual {residual:.3e})")]
    NotBasic { residual: f64 },
    #[error("quadrature did not converge (last change {error:.3e})")]
    Quadrature { error: f64 },
    #[error("classes live in different bases: {0}")]
    BasisMismatch(String),
    #[error("integer coordinate does not fit in 64 bits")]
    Overflow,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub(crate) fn small(x: &BigInt) -> Result<i64, CohomError> {
    x.to_i64().ok_or(CohomError::Overflow)
}

/// A class in `H²(W; ℤ^k)` or `H²(W; ℝ)` in a computed basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CochainClass {
    /// Identifies the complex and coefficients, or the cycle list, the
    /// coordinates refer to.
    pub basis: String,
    pub free_part: Vec<i64>,
    /// `(order, coordinate mod order)`.
    pub torsion_part: Vec<(i64, i64)>,
    pub real_part: Vec<f64>,
}

impl CochainClass {
    /// A real class given by its periods over `basis`.
    pub fn from_periods(basis: impl Into<String>, periods: Vec<f64>) -> CochainClass {
        CochainClass { basis: basis.into(), free_part: vec![], torsion_part: vec![], real_part: periods }
    }
}

pub const PERIOD_TOL: f64 = 1e-6;

fn same_basis(a: &CochainClass, b: &CochainClass) -> Result<(), CohomError> {
    if a.basis != b.basis
        || a.free_part.len() != b.free_part.len()
        || a.real_part.len() != b.real_part.len()
        || a.torsion_part.iter().map(|t| t.0).ne(b.torsion_part.iter().map(|t| t.0))
    {
        return Err(CohomError::BasisMismatch(format!("`{}` vs `{}`", a.basis, b.basis)));
    }
    Ok(())
}

/// Whether two bundle forms with invariants `(c1a, chora)` and `(c1b, chorb)`
/// are isomorphic: integral parts equal exactly, periods within 1e-6.
pub fn classify_pair(
    c1a: &CochainClass,
    chora: &CochainClass,
    c1b: &CochainClass,
    chorb: &CochainClass,
) -> Result<bool, CohomError> {
    same_basis(c1a, c1b)?;
    same_basis(chora, chorb)?;
    Ok(c1a.free_part == c1b.free_part
        && c1a.torsion_part == c1b.torsion_part
        && chora.real_part.iter().zip(&chorb.real_part).all(|(x, y)| (x - y).abs() <= PERIOD_TOL))
}
