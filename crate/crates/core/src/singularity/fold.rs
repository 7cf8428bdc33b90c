use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FoldTolerances, SingularityError};
use crate::domain::{self, newton_least_norm, Domain, NewtonOptions, Sample, ACTIVE_TOL};
use crate::expr::{ExprError, VectorExpression};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NotFoldReason {
    /// The differential drops rank by more than one.
    CorankTooHigh { point: Vec<f64>, singular_values: Vec<f64> },
    /// `∇det · k` vanishes: the kernel is tangent to the critical set.
    KernelTangentToFold { point: Vec<f64>, margin: f64 },
    /// `det df` vanishes to second order along the stratum through the point.
    NotTransverseInStratum { point: Vec<f64>, stratum: Vec<usize>, gradient: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FoldVerdict {
    IsFold,
    NotFold(NotFoldReason),
    /// `det df` changes sign between samples of one stratum but no zero was located.
    Inconclusive,
    /// No critical points found and no sign change: a local diffeomorphism on the samples.
    Regular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub point: Vec<f64>,
    pub stratum: Vec<usize>,
    pub det: f64,
    /// Unit vector spanning the smallest singular direction of `df`.
    pub kernel: Vec<f64>,
    /// `|∇det · kernel|`.
    pub margin: f64,
    /// Norm of `∇det` projected to the tangent space of the stratum.
    pub stratum_gradient: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldCertificate {
    pub fold_points: Vec<FoldPoint>,
    pub verdict: FoldVerdict,
    pub seeds: usize,
    /// Seeds whose Newton iteration failed; not fatal.
    pub newton_failures: Vec<SeedFailure>,
}

impl FoldCertificate {
    pub fn transversality_margins(&self) -> Vec<f64> {
        self.fold_points.iter().map(|p| p.margin).collect()
    }

    pub fn kernel_vectors(&self) -> Vec<Vec<f64>> {
        self.fold_points.iter().map(|p| p.kernel.clone()).collect()
    }

    pub fn is_fold(&self) -> bool {
        self.verdict == FoldVerdict::IsFold
    }
}

/// `det df_p` and its gradient.
pub fn det_and_gradient(f: &VectorExpression, p: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
    let n = f.dim();
    let mut grad = vec![0.0; n];
    let mut j0 = None;
    for (c, g) in grad.iter_mut().enumerate() {
        let e: Vec<f64> = (0..n).map(|i| (i == c) as u8 as f64).collect();
        let (j, dj) = f.jacobian_with_derivative(p, &e)?;
        *g = linalg::det_derivative(&j, &dj);
        j0 = Some(j);
    }
    let j = match j0 {
        Some(j) => j,
        None => f.jacobian(p)?,
    };
    Ok((linalg::det(&j), grad))
}

/// Sign-normalize a direction so that its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let idx = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()));
    if let Some(i) = idx {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn is_fold_map(
    f: &VectorExpression,
    domain: &Domain,
    tol: &FoldTolerances,
    samples: usize,
    seed: u64,
) -> Result<FoldCertificate, SingularityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = domain.sample(samples, &mut rng);
    is_fold_map_from_seeds(f, domain, tol, &seeds)
}

pub fn is_fold_map_from_seeds(
    f: &VectorExpression,
    domain: &Domain,
    tol: &FoldTolerances,
    seeds: &[Sample],
) -> Result<FoldCertificate, SingularityError> {
    if f.len() != f.dim() {
        return Err(SingularityError::NotSquare { rows: f.len(), cols: f.dim() });
    }
    if f.vars() != domain.vars() {
        return Err(SingularityError::VariableMismatch { domain: domain.vars().to_vec(), map: f.vars().to_vec() });
    }
    let n = f.dim();
    let opts = NewtonOptions { accept: tol.abs_tol, ..NewtonOptions::default() };
    let mut located = Vec::new();
    let mut failures = Vec::new();
    // Sign of det per stratum, for the sign-change test.
    let mut signs: BTreeMap<Vec<usize>, (bool, bool)> = BTreeMap::new();

    for (i, s) in seeds.iter().enumerate() {
        if let Ok((d, _)) = det_and_gradient(f, &s.point) {
            let e = signs.entry(s.stratum.clone()).or_insert((false, false));
            if d > tol.abs_tol {
                e.0 = true;
            } else if d < -tol.abs_tol {
                e.1 = true;
            }
        }
        let system = |x: &[f64]| -> Result<(Vec<f64>, DMatrix<f64>), ExprError> {
            let (d, g) = det_and_gradient(f, x)?;
            let (gv, gj) = domain.active_system(x, &s.stratum)?;
            let mut r = vec![d];
            r.extend(gv);
            let mut j = DMatrix::zeros(r.len(), n);
            for c in 0..n {
                j[(0, c)] = g[c];
            }
            for row in 0..gj.nrows() {
                for c in 0..n {
                    j[(row + 1, c)] = gj[(row, c)];
                }
            }
            Ok((r, j))
        };
        match newton_least_norm(s.point.clone(), system, &opts) {
            Ok(p) if domain.contains(&p, 1e-7) => located.push(p),
            Ok(_) => failures.push(SeedFailure { seed: i, message: "converged outside the domain".into() }),
            Err(e) => failures.push(SeedFailure { seed: i, message: e.to_string() }),
        }
    }

    let points = domain::dedup_sorted(located, 1e-6);
    let mut fold_points = Vec::with_capacity(points.len());
    let mut verdict = FoldVerdict::IsFold;
    for p in points {
        let fp = analyse_point(f, domain, &p)?;
        if fp.det.abs() >= tol.abs_tol {
            continue;
        }
        if verdict == FoldVerdict::IsFold {
            verdict = judge(&fp, tol);
        }
        fold_points.push(fp);
    }
    if fold_points.is_empty() {
        verdict = if signs.values().any(|&(pos, neg)| pos && neg) {
            FoldVerdict::Inconclusive
        } else {
            FoldVerdict::Regular
        };
    }
    Ok(FoldCertificate { fold_points, verdict, seeds: seeds.len(), newton_failures: failures })
}

fn analyse_point(f: &VectorExpression, domain: &Domain, p: &[f64]) -> Result<FoldPoint, ExprError> {
    let j = f.jacobian(p)?;
    let (s, v) = linalg::right_svd(&j);
    let n = s.len();
    let mut k: Vec<f64> = v.column(n - 1).iter().copied().collect();
    canonical_sign(&mut k);
    let (det, grad) = det_and_gradient(f, p)?;
    let stratum = domain.stratum(p, ACTIVE_TOL);
    let tangent = domain.stratum_tangent(p, &stratum)?;
    let g = nalgebra::DVector::from_vec(grad.clone());
    let stratum_gradient = (tangent.transpose() * &g).norm();
    Ok(FoldPoint {
        point: p.to_vec(),
        stratum,
        det,
        margin: linalg::dot(&grad, &k).abs(),
        kernel: k,
        stratum_gradient,
        singular_values: s,
    })
}

fn judge(fp: &FoldPoint, tol: &FoldTolerances) -> FoldVerdict {
    let n = fp.singular_values.len();
    let corank_one = fp.singular_values[n - 1] < tol.sigma_zero && (n < 2 || fp.singular_values[n - 2] > tol.sigma_gap);
    if !corank_one {
        return FoldVerdict::NotFold(NotFoldReason::CorankTooHigh {
            point: fp.point.clone(),
            singular_values: fp.singular_values.clone(),
        });
    }
    if fp.margin <= tol.margin_tol {
        return FoldVerdict::NotFold(NotFoldReason::KernelTangentToFold { point: fp.point.clone(), margin: fp.margin });
    }
    if fp.stratum_gradient <= tol.margin_tol {
        return FoldVerdict::NotFold(NotFoldReason::NotTransverseInStratum {
            point: fp.point.clone(),
            stratum: fp.stratum.clone(),
            gradient: fp.stratum_gradient,
        });
    }
    FoldVerdict::IsFold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn map(c: &[&str], v: &[&str]) -> VectorExpression {
        VectorExpression::parse(c, v).unwrap()
    }

    fn check(f: &VectorExpression, d: &Domain) -> FoldCertificate {
        is_fold_map(f, d, &FoldTolerances::default(), 16, 1).unwrap()
    }

    #[test]
    fn standard_fold() {
        let f = map(&["x", "y^2"], &["x", "y"]);
        let c = check(&f, &Domain::unit_box(&["x", "y"]));
        assert_eq!(c.verdict, FoldVerdict::IsFold);
        assert!(!c.fold_points.is_empty());
        for p in &c.fold_points {
            assert!(p.point[1].abs() < 1e-8);
            assert!((p.margin - 2.0).abs() < 1e-9);
            assert!((p.kernel[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cusp_like_cube_is_not_fold() {
        let f = map(&["x", "y^3"], &["x", "y"]);
        let c = check(&f, &Domain::unit_box(&["x", "y"]));
        assert!(matches!(c.verdict, FoldVerdict::NotFold(NotFoldReason::KernelTangentToFold { .. })));
    }

    #[test]
    fn boundary_stratum_is_not_fold() {
        let f = map(&["x", "y^2"], &["x", "y"]);
        let d = Domain::unit_box(&["x", "y"]).with_inequalities(vec![parse("y").unwrap()]).unwrap();
        let c = check(&f, &d);
        assert!(matches!(c.verdict, FoldVerdict::NotFold(NotFoldReason::NotTransverseInStratum { .. })));
    }

    #[test]
    fn identity_is_regular() {
        let f = map(&["x", "y"], &["x", "y"]);
        assert_eq!(check(&f, &Domain::unit_box(&["x", "y"])).verdict, FoldVerdict::Regular);
    }

    #[test]
    fn determinant_gradient() {
        let f = map(&["x*y", "x + y^2"], &["x", "y"]);
        // det = 2 y^2 - x
        let (d, g) = det_and_gradient(&f, &[0.5, 2.0]).unwrap();
        assert!((d - 7.5).abs() < 1e-12);
        assert!((g[0] + 1.0).abs() < 1e-12 && (g[1] - 8.0).abs() < 1e-12);
    }
}
