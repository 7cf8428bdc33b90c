//! Torus actions given by their generating vector fields, moment-map
//! verification, weighted moment maps of linear actions, and the
//! classification of zero levels for folded-symplectic reduction.

mod reduce;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reduce::{classify_zero_level, ReduceOptions, ReducedForm, ReductionReport, ReductionVerdict};

use crate::expr::{parse_with_vars, ExprError, VectorExpression};
use crate::form::{FormError, FormField};
use crate::lattice::LatticeMatrix;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("could not project seed {seed} onto the zero level: {message}")]
    Projection { seed: usize, message: String },
    #[error("inconsistent evidence on the level set: {0}")]
    MixedEvidence(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Induced vector fields `X_M` of a basis of the Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusAction {
    pub generators: Vec<VectorExpression>,
}

impl TorusAction {
    pub fn new(generators: Vec<VectorExpression>) -> Result<TorusAction, HamiltonianError> {
        if let Some(first) = generators.first() {
            for g in &generators {
                if g.vars() != first.vars() || g.len() != g.dim() {
                    return Err(HamiltonianError::DimensionMismatch("generators must be vector fields on one chart".into()));
                }
            }
        }
        Ok(TorusAction { generators })
    }

    pub fn parse<S: AsRef<str>>(vars: &[S], generators: &[Vec<&str>]) -> Result<TorusAction, HamiltonianError> {
        let g = generators.iter().map(|c| VectorExpression::parse(c, vars)).collect::<Result<Vec<_>, _>>()?;
        TorusAction::new(g)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Generator values at `p` as columns.
    pub fn matrix(&self, p: &[f64]) -> Result<nalgebra::DMatrix<f64>, ExprError> {
        let cols = self.generators.iter().map(|g| g.eval(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(nalgebra::DMatrix::from_fn(p.len(), cols.len(), |i, j| cols[j][i]))
    }

    pub fn spec(&self) -> ActionSpec {
        ActionSpec {
            vars: self.generators.first().map(|g| g.vars().to_vec()).unwrap_or_default(),
            generators: self.generators.iter().map(|g| g.components().iter().map(|e| e.to_string()).collect()).collect(),
        }
    }

    pub fn from_spec(s: &ActionSpec) -> Result<TorusAction, HamiltonianError> {
        let g: Vec<Vec<&str>> = s.generators.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
        TorusAction::parse(&s.vars, &g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub vars: Vec<String>,
    pub generators: Vec<Vec<String>>,
}

/// Components `⟨μ, e_a⟩` for the chosen basis of the Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMap {
    pub components: VectorExpression,
}

impl MomentMap {
    pub fn parse<S: AsRef<str>>(vars: &[S], components: &[&str]) -> Result<MomentMap, HamiltonianError> {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let c = components.iter().map(|e| parse_with_vars(e, &names)).collect::<Result<Vec<_>, _>>()?;
        Ok(MomentMap { components: VectorExpression::new(c, vars)? })
    }

    pub fn spec(&self) -> MomentSpec {
        MomentSpec {
            vars: self.components.vars().to_vec(),
            components: self.components.components().iter().map(|e| e.to_string()).collect(),
        }
    }

    pub fn from_spec(s: &MomentSpec) -> Result<MomentMap, HamiltonianError> {
        let c: Vec<&str> = s.components.iter().map(String::as_str).collect();
        MomentMap::parse(&s.vars, &c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub vars: Vec<String>,
    pub components: Vec<String>,
}

pub const HAMILTONIAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianReport {
    /// `max |i_{X_a} σ + d μ_a|`.
    pub moment_residual: f64,
    /// `max |L_{X_a} σ|`.
    pub invariance_residual: f64,
    /// `max |[X_a, X_b]|`.
    pub bracket_residual: f64,
    /// `max |X_b(μ_a)|`.
    pub equivariance_residual: f64,
    pub samples: usize,
    pub passed: bool,
}

fn check_dims(sigma: &FormField, action: &TorusAction, mu: &MomentMap) -> Result<(), HamiltonianError> {
    if action.rank() != mu.components.len() {
        return Err(HamiltonianError::DimensionMismatch(format!(
            "{} generators but {} moment components",
            action.rank(),
            mu.components.len()
        )));
    }
    if mu.components.vars() != sigma.vars() || action.generators.iter().any(|g| g.vars() != sigma.vars()) {
        return Err(HamiltonianError::DimensionMismatch("form, action and moment use different coordinates".into()));
    }
    Ok(())
}

pub fn verify_hamiltonian(
    sigma: &FormField,
    action: &TorusAction,
    mu: &MomentMap,
    samples: &[Vec<f64>],
) -> Result<HamiltonianReport, HamiltonianError> {
    check_dims(sigma, action, mu)?;
    let n = sigma.dim();
    let (mut moment, mut invariance, mut bracket, mut equivariance) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in samples {
        let dmu = mu.components.jacobian(p)?;
        let m = sigma.matrix(p)?;
        let fields: Vec<Vec<f64>> = action.generators.iter().map(|g| g.eval(p)).collect::<Result<_, _>>()?;
        let jacs: Vec<_> = action.generators.iter().map(|g| g.jacobian(p)).collect::<Result<_, _>>()?;
        for (a, x) in fields.iter().enumerate() {
            let c = sigma.contract(x, p)?;
            for j in 0..n {
                moment = moment.max((c[j] + dmu[(a, j)]).abs());
            }
            // (L_X σ)_jk = X^i ∂_i σ_jk + σ_ik ∂_j X^i + σ_ji ∂_k X^i
            let ds = sigma.derivative_along(p, x)?;
            let jx = &jacs[a];
            for j in 0..n {
                for k in j + 1..n {
                    let mut l = ds[(j, k)];
                    for i in 0..n {
                        l += m[(i, k)] * jx[(i, j)] + m[(j, i)] * jx[(i, k)];
                    }
                    invariance = invariance.max(l.abs());
                }
            }
            for (b, y) in fields.iter().enumerate() {
                let d: f64 = (0..n).map(|i| dmu[(a, i)] * y[i]).sum();
                equivariance = equivariance.max(d.abs());
                if b > a {
                    let br: Vec<f64> = (0..n)
                        .map(|i| (0..n).map(|k| jacs[b][(i, k)] * x[k] - jx[(i, k)] * y[k]).sum())
                        .collect();
                    bracket = bracket.max(linalg::norm(&br));
                }
            }
        }
    }
    let passed = moment < HAMILTONIAN_TOL && invariance < HAMILTONIAN_TOL;
    Ok(HamiltonianReport {
        moment_residual: moment,
        invariance_residual: invariance,
        bracket_residual: bracket,
        equivariance_residual: equivariance,
        samples: samples.len(),
        passed,
    })
}

/// `μ(z) = Σ |z_i|² β_i` for the linear action with weights `β_i` (rows);
/// complex coordinates are `(re, im)` pairs.
pub fn weighted_moment(weights: &LatticeMatrix, z: &[(f64, f64)]) -> Result<Vec<f64>, HamiltonianError> {
    if z.len() != weights.nrows() {
        return Err(HamiltonianError::DimensionMismatch(format!(
            "{} weights but {} complex coordinates",
            weights.nrows(),
            z.len()
        )));
    }
    let mut out = vec![0.0; weights.ncols()];
    for (i, &(re, im)) in z.iter().enumerate() {
        let r2 = re * re + im * im;
        for (o, w) in out.iter_mut().zip(weights.row_f64(i)) {
            *o += r2 * w;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const V4: [&str; 4] = ["x1", "x2", "x3", "x4"];

    fn pts() -> Vec<Vec<f64>> {
        vec![vec![0.1, 0.2, 0.3, 0.4], vec![-1.0, 0.5, 2.0, -0.7], vec![0.0, 0.0, 0.0, 1.5]]
    }

    #[test]
    fn rotation_in_second_plane() {
        let s = FormField::parse(&V4, &[(2, 3, "1")]).unwrap();
        let a = TorusAction::parse(&V4, &[vec!["0", "0", "-x4", "x3"]]).unwrap();
        let mu = MomentMap::parse(&V4, &["(x3^2 + x4^2)/2"]).unwrap();
        let r = verify_hamiltonian(&s, &a, &mu, &pts()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.moment_residual, 0.0);
        let bad = MomentMap::parse(&V4, &["x3"]).unwrap();
        let r = verify_hamiltonian(&s, &a, &bad, &pts()).unwrap();
        assert!(!r.passed);
        assert!(r.moment_residual >= 1.5);
    }

    #[test]
    fn zero_action() {
        let s = FormField::parse(&V4, &[(0, 1, "x1"), (2, 3, "1")]).unwrap();
        let a = TorusAction::parse(&V4, &[vec!["0", "0", "0", "0"]]).unwrap();
        let mu = MomentMap::parse(&V4, &["1"]).unwrap();
        assert!(verify_hamiltonian(&s, &a, &mu, &pts()).unwrap().passed);
    }

    #[test]
    fn non_invariant_form_is_flagged() {
        let s = FormField::parse(&["x", "y"], &[(0, 1, "1 + x")]).unwrap();
        let a = TorusAction::parse(&["x", "y"], &[vec!["1", "0"]]).unwrap();
        let mu = MomentMap::parse(&["x", "y"], &["-(y + x*y)"]).unwrap();
        let r = verify_hamiltonian(&s, &a, &mu, &[vec![0.2, 0.3]]).unwrap();
        assert!(r.invariance_residual > 0.5);
    }

    #[test]
    fn weighted_moments() {
        let w = LatticeMatrix::from_rows(vec![vec![1, 0], vec![0, 1]], 2).unwrap();
        assert_eq!(weighted_moment(&w, &[(1.0, 0.0), (0.0, 2.0)]).unwrap(), vec![1.0, 4.0]);
        assert_eq!(weighted_moment(&w, &[(0.0, 0.0), (0.0, 0.0)]).unwrap(), vec![0.0, 0.0]);
        let w = LatticeMatrix::from_rows(vec![vec![1, 1]], 2).unwrap();
        let r = weighted_moment(&w, &[(2f64.sqrt(), 0.0)]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-15 && (r[1] - 2.0).abs() < 1e-15);
        assert!(weighted_moment(&w, &[]).is_err());
    }
}
