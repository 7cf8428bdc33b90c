//! Fold singularities of equidimensional maps: certification from seeds,
//! numerical factorization into the fold normal form, and the χ-Morse test
//! for sections of a line bundle with connection.

mod factor;
mod fold;
mod morse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factor::{fold_factorization, FactorOptions, FactorReport};
pub(crate) use fold::canonical_sign;
pub use fold::{det_and_gradient, is_fold_map, is_fold_map_from_seeds, FoldCertificate, FoldPoint, FoldVerdict, NotFoldReason};
pub use morse::{chi_morse_check, CriticalPoint, MorseReport};

use crate::expr::ExprError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldTolerances {
    /// A located point counts as a zero of `det df` below this.
    pub abs_tol: f64,
    /// Minimal `|∇det · k|` and minimal stratum-projected `|∇det|`.
    pub margin_tol: f64,
    /// Singular values below this are zero.
    pub sigma_zero: f64,
    /// The second-smallest singular value must exceed this.
    pub sigma_gap: f64,
}

impl Default for FoldTolerances {
    fn default() -> Self {
        FoldTolerances { abs_tol: 1e-8, margin_tol: 1e-4, sigma_zero: 1e-6, sigma_gap: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingularityError {
    #[error("map is not square: {rows} components in {cols} variables")]
    NotSquare { rows: usize, cols: usize },
    #[error("domain variables {domain:?} differ from map variables {map:?}")]
    VariableMismatch { domain: Vec<String>, map: Vec<String> },
    #[error("the differential at the given point does not have corank exactly 1 (singular values {0:?})")]
    NotCorankOne(Vec<f64>),
    #[error("kernel direction is not transverse: |coker · F(x,0)| = {margin:.3e}")]
    KernelNotTransverse { margin: f64 },
    #[error("factorization residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}
