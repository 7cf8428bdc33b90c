use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FormError, FormField, OneForm};
use crate::linalg;

const KERNEL_SIGMA: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionSolution {
    pub x: Vec<f64>,
    /// `|σ_p(X, ·) - β_p|`.
    pub residual: f64,
    pub on_fold: bool,
    /// Ratio of extreme singular values of `σ_p`; infinite on the fold.
    pub condition: f64,
}

/// Solve `σ_p(X, ·) = β_p`, i.e. `Σ_i X_i σ_ij = β_j`. Off the fold the
/// solution is unique. On the fold (`|Pf| ≤ fold_tol`) `β_p` must vanish on
/// `ker σ_p`, and the minimal-norm solution is returned.
pub fn solve_contraction(
    sigma: &FormField,
    beta: &OneForm,
    p: &[f64],
    fold_tol: f64,
) -> Result<ContractionSolution, FormError> {
    if sigma.vars() != beta.vars() {
        return Err(FormError::VariableMismatch(sigma.vars().to_vec(), beta.vars().to_vec()));
    }
    let m = sigma.matrix(p)?;
    let a: DMatrix<f64> = m.transpose();
    let b = DVector::from_vec(beta.eval(p)?);
    let pf = sigma.pfaffian(p)?;
    let (s, _) = linalg::right_svd(&a);
    let condition = match s.last() {
        Some(&min) if min > 0.0 => s[0] / min,
        Some(_) => f64::INFINITY,
        None => 1.0,
    };
    let residual_of = |x: &DVector<f64>| (&a * x - &b).norm();
    if pf.abs() > fold_tol {
        let x = a.clone().lu().solve(&b).ok_or(FormError::SingularSolveFailure(f64::INFINITY))?;
        let residual = residual_of(&x);
        return Ok(ContractionSolution { x: x.iter().copied().collect(), residual, on_fold: false, condition });
    }
    let kernel = linalg::null_space(&m, KERNEL_SIGMA);
    let scale = b.norm().max(1.0);
    for c in 0..kernel.ncols() {
        let k = kernel.column(c);
        let pairing = k.dot(&b);
        if pairing.abs() > fold_tol * scale {
            return Err(FormError::Unsolvable { kernel_vector: k.iter().copied().collect(), pairing });
        }
    }
    let x = linalg::min_norm_solve(&a, &b, KERNEL_SIGMA);
    let residual = residual_of(&x);
    if residual > 1e-8 * scale {
        return Err(FormError::SingularSolveFailure(residual));
    }
    Ok(ContractionSolution { x: x.iter().copied().collect(), residual, on_fold: true, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma() -> FormField {
        FormField::parse(&["x1", "x2"], &[(0, 1, "x1")]).unwrap()
    }

    #[test]
    fn solvable_off_fold() {
        let beta = OneForm::parse(&["x1", "x2"], &["x1", "0"]).unwrap();
        for p in [[0.5, 0.1], [-2.0, 3.0]] {
            let sol = solve_contraction(&sigma(), &beta, &p, 1e-9).unwrap();
            assert!((sol.x[0]).abs() < 1e-12 && (sol.x[1] + 1.0).abs() < 1e-12);
            assert!(sol.residual < 1e-10);
        }
        let on = solve_contraction(&sigma(), &beta, &[0.0, 0.4], 1e-9).unwrap();
        assert!(on.on_fold && on.residual == 0.0);
    }

    #[test]
    fn obstruction_at_fold() {
        let beta = OneForm::parse(&["x1", "x2"], &["1", "0"]).unwrap();
        let e = solve_contraction(&sigma(), &beta, &[0.0, 0.0], 1e-9).unwrap_err();
        assert!(matches!(e, FormError::Unsolvable { .. }));
    }

    #[test]
    fn zero_right_hand_side() {
        let beta = OneForm::zero(&["x1", "x2"]);
        let sol = solve_contraction(&sigma(), &beta, &[0.0, 0.0], 1e-9).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
    }
}
