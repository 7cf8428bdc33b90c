use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, HamiltonianError, MomentMap, TorusAction};
use crate::domain::{newton_least_norm, NewtonOptions};
use crate::form::FormField;
use crate::linalg;

#[derive(Clone, Debug)]
pub struct ReduceOptions {
    /// Threshold below which `|Pf σ|` counts as zero.
    pub pf_tol: f64,
    /// Singular-value threshold for rank decisions on `dμ`, its Hessian and
    /// the generator matrix.
    pub rank_tol: f64,
    pub walk_steps: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions { pf_tol: 1e-8, rank_tol: 1e-6, walk_steps: 40, step: 0.1, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedForm {
    Symplectic,
    Folded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ReductionVerdict {
    /// Every sample of the level lies on the fold.
    ContainedInFold,
    /// The level crosses the fold transversally.
    TransverseToFold,
    /// The sampled level never meets the fold.
    DisjointFromFold,
    NotRegular { point: Vec<f64>, detail: String },
    NotFree { point: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub verdict: ReductionVerdict,
    pub reduced: Option<ReducedForm>,
    /// Number of level points visited; the verdict speaks for this cloud only.
    pub cloud_size: usize,
    pub pfaffian_range: (f64, f64),
    /// Located points of the level on the fold, each with its transversality margin.
    pub fold_crossings: Vec<(Vec<f64>, f64)>,
}

impl ReductionReport {
    fn stop(verdict: ReductionVerdict, cloud: usize) -> ReductionReport {
        ReductionReport { verdict, reduced: None, cloud_size: cloud, pfaffian_range: (0.0, 0.0), fold_crossings: vec![] }
    }
}

enum Local {
    /// Orthonormal basis of the tangent space of the level.
    Manifold(DMatrix<f64>),
    Singular(String),
}

fn residual(mu: &MomentMap) -> impl Fn(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>), crate::expr::ExprError> + '_ {
    move |x: &[f64]| Ok((mu.components.eval(x)?, mu.components.jacobian(x)?))
}

fn project(mu: &MomentMap, p: Vec<f64>) -> Result<Vec<f64>, String> {
    newton_least_norm(p, residual(mu), &NewtonOptions::default()).map_err(|e| e.to_string())
}

// Where dμ drops rank on a one-dimensional moment, the level can still be a
// hypersurface when μ vanishes to second order along it: the Hessian must be
// semidefinite of rank one and μ must vanish along its kernel.
fn local_structure(mu: &MomentMap, p: &[f64], opts: &ReduceOptions) -> Result<Local, HamiltonianError> {
    let j = mu.components.jacobian(p)?;
    let r = mu.components.len();
    let (s, _) = linalg::right_svd(&j);
    if s.iter().take(r).all(|&x| x >= opts.rank_tol) {
        return Ok(Local::Manifold(linalg::null_space(&j, opts.rank_tol)));
    }
    if r != 1 {
        return Ok(Local::Singular(format!("dμ has rank < {r}")));
    }
    let h = mu.components.hessian(0, p)?;
    let eig = SymmetricEigen::new(h.clone());
    let pos = eig.eigenvalues.iter().filter(|&&l| l > opts.rank_tol).count();
    let neg = eig.eigenvalues.iter().filter(|&&l| l < -opts.rank_tol).count();
    if pos > 0 && neg > 0 {
        return Ok(Local::Singular("dμ = 0 with indefinite Hessian: the level crosses itself".into()));
    }
    if pos + neg != 1 {
        return Ok(Local::Singular(format!("dμ = 0 with Hessian of rank {}", pos + neg)));
    }
    let tangent = linalg::null_space(&h, opts.rank_tol);
    let delta = 0.05;
    for c in 0..tangent.ncols() {
        for sgn in [-1.0, 1.0] {
            let q: Vec<f64> = p.iter().enumerate().map(|(i, x)| x + sgn * delta * tangent[(i, c)]).collect();
            if mu.components.eval(&q)?[0].abs() > opts.pf_tol {
                return Ok(Local::Singular("dμ = 0 and μ does not vanish along the Hessian kernel".into()));
            }
        }
    }
    Ok(Local::Manifold(tangent))
}

/// Classify the reduced space of the component(s) of `μ⁻¹(0)` reached from
/// `seeds` by random walks on the level set.
///
/// Regularity of the level and freeness of the action are checked at every
/// visited point only.
pub fn classify_zero_level(
    sigma: &FormField,
    action: &TorusAction,
    mu: &MomentMap,
    seeds: &[Vec<f64>],
    opts: &ReduceOptions,
) -> Result<ReductionReport, HamiltonianError> {
    check_dims(sigma, action, mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cloud: Vec<(Vec<f64>, DMatrix<f64>)> = Vec::new();
    for (k, s) in seeds.iter().enumerate() {
        if s.len() != sigma.dim() {
            return Err(HamiltonianError::DimensionMismatch(format!("seed {k} has {} coordinates", s.len())));
        }
        let mut p = project(mu, s.clone()).map_err(|message| HamiltonianError::Projection { seed: k, message })?;
        for step in 0..=opts.walk_steps {
            let tangent = match local_structure(mu, &p, opts)? {
                Local::Manifold(t) => t,
                Local::Singular(detail) => {
                    return Ok(ReductionReport::stop(ReductionVerdict::NotRegular { point: p, detail }, cloud.len() + 1))
                }
            };
            let g = action.matrix(&p)?;
            if linalg::right_svd(&g).0.iter().take(action.rank()).any(|&x| x < opts.rank_tol) {
                return Ok(ReductionReport::stop(ReductionVerdict::NotFree { point: p }, cloud.len() + 1));
            }
            cloud.push((p.clone(), tangent.clone()));
            if step == opts.walk_steps || tangent.ncols() == 0 {
                break;
            }
            let coef = DVector::from_fn(tangent.ncols(), |_, _| rng.gen_range(-1.0..1.0));
            let dir = &tangent * coef;
            let len = dir.norm().max(1e-300);
            let q: Vec<f64> = p.iter().zip(dir.iter()).map(|(x, d)| x + opts.step * d / len).collect();
            match project(mu, q) {
                Ok(q) => p = q,
                Err(_) => break,
            }
        }
    }

    let mut pf = Vec::with_capacity(cloud.len());
    for (p, _) in &cloud {
        pf.push(sigma.pfaffian(p)?);
    }
    let lo = pf.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zero = pf.iter().filter(|v| v.abs() < opts.pf_tol).count();
    let mut report = ReductionReport {
        verdict: ReductionVerdict::ContainedInFold,
        reduced: Some(ReducedForm::Symplectic),
        cloud_size: cloud.len(),
        pfaffian_range: (lo, hi),
        fold_crossings: vec![],
    };
    if cloud.is_empty() {
        return Err(HamiltonianError::MixedEvidence("no level points were reached".into()));
    }
    if zero == cloud.len() {
        return Ok(report);
    }
    if lo < -opts.pf_tol && hi > opts.pf_tol {
        report.fold_crossings = locate_crossings(sigma, mu, &cloud, &pf, opts)?;
        if report.fold_crossings.is_empty() {
            return Err(HamiltonianError::MixedEvidence("Pf changes sign but no fold point was located".into()));
        }
        if let Some((p, m)) = report.fold_crossings.iter().find(|(_, m)| *m < 1e-4) {
            return Err(HamiltonianError::MixedEvidence(format!("level is tangent to the fold at {p:?} (margin {m:.2e})")));
        }
        report.verdict = ReductionVerdict::TransverseToFold;
        report.reduced = Some(ReducedForm::Folded);
        return Ok(report);
    }
    if zero == 0 {
        report.verdict = ReductionVerdict::DisjointFromFold;
        return Ok(report);
    }
    Err(HamiltonianError::MixedEvidence(format!(
        "{zero} of {} samples lie on the fold without a sign change",
        cloud.len()
    )))
}

// Solve [μ; Pf] = 0 starting from the level points of smallest |Pf| on each
// side and report the size of the Pf gradient projected on the level tangent.
fn locate_crossings(
    sigma: &FormField,
    mu: &MomentMap,
    cloud: &[(Vec<f64>, DMatrix<f64>)],
    pf: &[f64],
    opts: &ReduceOptions,
) -> Result<Vec<(Vec<f64>, f64)>, HamiltonianError> {
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| pf[a].abs().total_cmp(&pf[b].abs()));
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for &i in order.iter().take(6) {
        let sys = |x: &[f64]| {
            let (v, g) = sigma.pfaffian_and_gradient(x).map_err(|e| match e {
                crate::form::FormError::Expr(e) => e,
                other => crate::expr::ExprError::Domain(other.to_string()),
            })?;
            let mut r = mu.components.eval(x)?;
            r.push(v);
            let j = mu.components.jacobian(x)?;
            let n = x.len();
            let m = DMatrix::from_fn(j.nrows() + 1, n, |a, b| if a < j.nrows() { j[(a, b)] } else { g[b] });
            Ok((r, m))
        };
        let Ok(z) = newton_least_norm(cloud[i].0.clone(), sys, &NewtonOptions::default()) else { continue };
        if found.iter().any(|(q, _)| linalg::norm(&q.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6) {
            continue;
        }
        let tangent = match local_structure(mu, &z, opts)? {
            Local::Manifold(t) => t,
            Local::Singular(_) => continue,
        };
        let (_, g) = sigma.pfaffian_and_gradient(&z)?;
        let proj = tangent.transpose() * DVector::from_vec(g);
        found.push((z, proj.norm()));
    }
    Ok(found)
}
