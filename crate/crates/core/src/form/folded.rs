use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{exterior_derivative_is_zero, induced_orientation, FormError, FormField};
use crate::domain::{self, newton_least_norm, Domain, NewtonOptions, ACTIVE_TOL};
use crate::expr::{ExprError, VectorExpression};
use crate::linalg;
use crate::singularity::FoldTolerances;

#[derive(Clone, Debug)]
pub struct FoldedOptions {
    pub tolerances: FoldTolerances,
    pub samples: usize,
    pub seed: u64,
    /// Optional null section whose orientation is reported at every fold point.
    pub candidate: Option<VectorExpression>,
}

impl Default for FoldedOptions {
    fn default() -> Self {
        FoldedOptions { tolerances: FoldTolerances::default(), samples: 24, seed: 0, candidate: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFoldPoint {
    pub point: Vec<f64>,
    pub pfaffian: f64,
    pub gradient: Vec<f64>,
    pub kernel_dim: usize,
    /// Spans `ker σ ∩ TZ`, positively oriented.
    pub k_tangent: Vec<f64>,
    /// In `ker σ`, transverse to `Z`, pointing to `Pf > 0`.
    pub k_transverse: Vec<f64>,
    pub orientation_sign: Option<i8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldData {
    pub fold_points: Vec<FormFoldPoint>,
    pub closed_residual: f64,
    pub seeds: usize,
}

impl FoldData {
    /// No fold points were found and the Pfaffian never changed sign.
    pub fn is_symplectic(&self) -> bool {
        self.fold_points.is_empty()
    }

    pub fn kernel_frames(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.fold_points.iter().map(|p| (p.k_tangent.clone(), p.k_transverse.clone())).collect()
    }

    pub fn orientation_signs(&self) -> Vec<Option<i8>> {
        self.fold_points.iter().map(|p| p.orientation_sign).collect()
    }
}

pub fn verify_folded(sigma: &FormField, domain: &Domain, opts: &FoldedOptions) -> Result<FoldData, FormError> {
    let n = sigma.dim();
    if n % 2 == 1 {
        return Err(FormError::OddDimension(n));
    }
    if sigma.vars() != domain.vars() {
        return Err(FormError::VariableMismatch(sigma.vars().to_vec(), domain.vars().to_vec()));
    }
    let tol = &opts.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds = domain.sample(opts.samples, &mut rng);
    let pts: Vec<Vec<f64>> = seeds.iter().map(|s| s.point.clone()).collect();
    let closed = exterior_derivative_is_zero(sigma, &pts)?;
    if !closed.closed {
        return Err(FormError::NotClosed { residual: closed.max_residual });
    }

    let newton = NewtonOptions { accept: tol.abs_tol, ..NewtonOptions::default() };
    let mut located = Vec::new();
    let mut signs: BTreeMap<Vec<usize>, (bool, bool)> = BTreeMap::new();
    for s in &seeds {
        if let Ok(v) = sigma.pfaffian(&s.point) {
            let e = signs.entry(s.stratum.clone()).or_insert((false, false));
            if v > tol.abs_tol {
                e.0 = true;
            } else if v < -tol.abs_tol {
                e.1 = true;
            }
        }
        let system = |x: &[f64]| -> Result<(Vec<f64>, DMatrix<f64>), ExprError> {
            let (v, g) = sigma.pfaffian_and_gradient(x).map_err(|e| match e {
                FormError::Expr(e) => e,
                other => ExprError::Domain(other.to_string()),
            })?;
            let (gv, gj) = domain.active_system(x, &s.stratum)?;
            let mut r = vec![v];
            r.extend(gv);
            let mut j = DMatrix::zeros(r.len(), n);
            for c in 0..n {
                j[(0, c)] = g[c];
                for row in 0..gj.nrows() {
                    j[(row + 1, c)] = gj[(row, c)];
                }
            }
            Ok((r, j))
        };
        if let Ok(p) = newton_least_norm(s.point.clone(), system, &newton) {
            if domain.contains(&p, 1e-7) {
                located.push(p);
            }
        }
    }

    let mut fold_points = Vec::new();
    for p in domain::dedup_sorted(located, 1e-6) {
        let (pf, grad) = sigma.pfaffian_and_gradient(&p)?;
        if pf.abs() >= tol.abs_tol {
            continue;
        }
        let stratum = domain.stratum(&p, ACTIVE_TOL);
        let tangent = domain.stratum_tangent(&p, &stratum)?;
        let g = DVector::from_vec(grad.clone());
        let stratum_gradient = (tangent.transpose() * &g).norm();
        if stratum_gradient <= tol.margin_tol {
            return Err(FormError::DegenerateVanishing { point: p, gradient: stratum_gradient });
        }
        let m = sigma.matrix(&p)?;
        let kernel = linalg::null_space(&m, tol.sigma_zero);
        let nullity = kernel.ncols();
        if nullity != 2 {
            return Err(FormError::KernelTooLarge {
                point: p,
                nullity,
                detail: format!("null space has dimension {nullity}, expected 2"),
            });
        }
        let normal = g.normalize();
        let k1: DVector<f64> = kernel.column(0).into();
        let k2: DVector<f64> = kernel.column(1).into();
        let (a, b) = (k1.dot(&normal), k2.dot(&normal));
        if a.hypot(b) < tol.sigma_zero {
            return Err(FormError::KernelTooLarge {
                point: p,
                nullity,
                detail: "kernel lies in the tangent space of the fold".into(),
            });
        }
        let tangent_k = (&k1 * b - &k2 * a).normalize();
        let mut transverse = (&k1 * a + &k2 * b).normalize();
        if transverse.dot(&normal) < 0.0 {
            transverse = -transverse;
        }
        let mut k_tangent: Vec<f64> = tangent_k.iter().copied().collect();
        let k_transverse: Vec<f64> = transverse.iter().copied().collect();
        if induced_orientation(sigma, &p, &k_tangent, &k_transverse)? < 0 {
            k_tangent.iter_mut().for_each(|x| *x = -*x);
        }
        let orientation_sign = match &opts.candidate {
            None => None,
            Some(c) => Some(induced_orientation(sigma, &p, &c.eval(&p)?, &k_transverse)?),
        };
        fold_points.push(FormFoldPoint {
            point: p,
            pfaffian: pf,
            gradient: grad,
            kernel_dim: nullity,
            k_tangent,
            k_transverse,
            orientation_sign,
        });
    }
    if fold_points.is_empty() && signs.values().any(|&(pos, neg)| pos && neg) {
        return Err(FormError::Inconclusive);
    }
    Ok(FoldData { fold_points, closed_residual: closed.max_residual, seeds: seeds.len() })
}
