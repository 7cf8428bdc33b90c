//! Coordinate domains: a bounding box, inequalities `g ≥ 0` whose zero sets
//! cut the domain into strata, and side filters that restrict the domain
//! without creating strata. Also the seeded sampler and the least-norm
//! Newton iteration shared by every locator in the crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_with_vars, Expr, ExprError, VectorExpression};
use crate::linalg;

/// Tolerance for deciding that an inequality is active at a point.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Domain {
    vars: Vec<String>,
    bounds: Vec<(f64, f64)>,
    inequalities: Option<VectorExpression>,
    filters: Option<VectorExpression>,
}

/// File form of a domain. Missing bounds default to `[-1, 1]` per variable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inequalities: Vec<String>,
}

impl DomainSpec {
    pub fn build<S: AsRef<str>>(&self, vars: &[S]) -> Result<Domain, ExprError> {
        let bounds = match &self.bounds {
            Some(b) if b.len() != vars.len() => {
                return Err(ExprError::DimensionMismatch { expected: vars.len(), got: b.len() })
            }
            Some(b) => b.clone(),
            None => vec![(-1.0, 1.0); vars.len()],
        };
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let g = self.inequalities.iter().map(|e| parse_with_vars(e, &names)).collect::<Result<Vec<_>, _>>()?;
        Domain::new(vars, bounds).with_inequalities(g)
    }
}

/// A sampled point labelled with the indices of the inequalities that are
/// active there (empty for the open stratum).
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub point: Vec<f64>,
    pub stratum: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonFailure {
    #[error("Newton iteration did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("Newton iteration left the domain")]
    LeftDomain,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl Domain {
    /// The box `∏ [lo_i, hi_i]` with no further constraints.
    pub fn new<S: AsRef<str>>(vars: &[S], bounds: Vec<(f64, f64)>) -> Domain {
        assert_eq!(vars.len(), bounds.len(), "one bound per variable");
        Domain {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            bounds,
            inequalities: None,
            filters: None,
        }
    }

    /// The box `[-1, 1]^n`.
    pub fn unit_box<S: AsRef<str>>(vars: &[S]) -> Domain {
        Domain::new(vars, vec![(-1.0, 1.0); vars.len()])
    }

    pub fn with_inequalities(mut self, g: Vec<Expr>) -> Result<Domain, ExprError> {
        let mut all = self.inequalities.take().map(|v| v.components().to_vec()).unwrap_or_default();
        all.extend(g);
        self.inequalities = if all.is_empty() { None } else { Some(VectorExpression::new(all, &self.vars)?) };
        Ok(self)
    }

    pub fn with_side_filters(mut self, h: Vec<Expr>) -> Result<Domain, ExprError> {
        let mut all = self.filters.take().map(|v| v.components().to_vec()).unwrap_or_default();
        all.extend(h);
        self.filters = if all.is_empty() { None } else { Some(VectorExpression::new(all, &self.vars)?) };
        Ok(self)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn inequalities(&self) -> &[Expr] {
        self.inequalities.as_ref().map(|v| v.components()).unwrap_or(&[])
    }

    pub fn side_filters(&self) -> &[Expr] {
        self.filters.as_ref().map(|v| v.components()).unwrap_or(&[])
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            bounds: Some(self.bounds.clone()),
            inequalities: self.inequalities().iter().map(|e| e.to_string()).collect(),
        }
    }

    fn in_box(&self, p: &[f64], tol: f64) -> bool {
        p.iter().zip(&self.bounds).all(|(&x, &(lo, hi))| x >= lo - tol && x <= hi + tol)
    }

    /// Membership with slack `tol` on every constraint. Points where a
    /// constraint cannot be evaluated are outside.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.len() != self.dim() || !self.in_box(p, tol) {
            return false;
        }
        let ok = |c: &Option<VectorExpression>| match c {
            None => true,
            Some(g) => g.eval(p).map(|v| v.iter().all(|&x| x >= -tol)).unwrap_or(false),
        };
        ok(&self.inequalities) && ok(&self.filters)
    }

    /// Indices of the inequalities that vanish at `p` within `tol`.
    pub fn stratum(&self, p: &[f64], tol: f64) -> Vec<usize> {
        match &self.inequalities {
            None => Vec::new(),
            Some(g) => match g.eval(p) {
                Ok(v) => v.iter().enumerate().filter(|(_, x)| x.abs() <= tol).map(|(i, _)| i).collect(),
                Err(_) => Vec::new(),
            },
        }
    }

    /// Orthonormal basis (columns) of the tangent space at `p` of the stratum
    /// cut out by the inequalities in `active`.
    pub fn stratum_tangent(&self, p: &[f64], active: &[usize]) -> Result<DMatrix<f64>, ExprError> {
        let n = self.dim();
        if active.is_empty() {
            return Ok(DMatrix::identity(n, n));
        }
        let g = self.inequalities.as_ref().expect("active constraints exist");
        let jac = g.jacobian(p)?;
        let rows = DMatrix::from_fn(active.len(), n, |r, c| jac[(active[r], c)]);
        Ok(linalg::null_space(&rows, 1e-9))
    }

    /// Residuals and Jacobian rows of the active inequalities, used to keep a
    /// Newton iteration on a boundary stratum.
    pub fn active_system(&self, p: &[f64], active: &[usize]) -> Result<(Vec<f64>, DMatrix<f64>), ExprError> {
        let n = self.dim();
        if active.is_empty() {
            return Ok((Vec::new(), DMatrix::zeros(0, n)));
        }
        let g = self.inequalities.as_ref().expect("active constraints exist");
        let val = g.eval(p)?;
        let jac = g.jacobian(p)?;
        Ok((
            active.iter().map(|&i| val[i]).collect(),
            DMatrix::from_fn(active.len(), n, |r, c| jac[(active[r], c)]),
        ))
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    }

    /// Up to `count` uniformly drawn points of the open stratum.
    pub fn sample_interior(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < count * 200 + 100 {
            attempts += 1;
            let p = self.uniform(rng);
            if self.contains(&p, 0.0) && self.stratum(&p, ACTIVE_TOL).is_empty() {
                out.push(p);
            }
        }
        out
    }

    /// Up to `count` points on the stratum where exactly the inequalities in
    /// `active` vanish, obtained by projecting uniform points.
    pub fn sample_stratum(&self, active: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        if active.is_empty() {
            return self.sample_interior(count, rng);
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < count * 50 + 50 {
            attempts += 1;
            let p = self.uniform(rng);
            let projected = newton_least_norm(p, |x| self.active_system(x, active), &NewtonOptions::default());
            if let Ok(q) = projected {
                if self.contains(&q, ACTIVE_TOL) && self.stratum(&q, ACTIVE_TOL) == active {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Seeds for every stratum of codimension at most `dim`: `count` interior
    /// points followed by `count` points per boundary stratum, in a fixed order.
    pub fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
        let mut out: Vec<Sample> = self
            .sample_interior(count, rng)
            .into_iter()
            .map(|point| Sample { point, stratum: Vec::new() })
            .collect();
        let m = self.inequalities().len();
        for k in 1..=m.min(self.dim()) {
            for subset in subsets(m, k) {
                for point in self.sample_stratum(&subset, count, rng) {
                    out.push(Sample { point, stratum: subset.clone() });
                }
            }
        }
        out
    }

    /// Points on `{h = 0}` inside the domain, for a wall `h`.
    pub fn sample_on_hypersurface(
        &self,
        h: &VectorExpression,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < count * 50 + 50 {
            attempts += 1;
            let p = self.uniform(rng);
            let projected = newton_least_norm(p, |x| Ok((h.eval(x)?, h.jacobian(x)?)), &NewtonOptions::default());
            if let Ok(q) = projected {
                if self.contains(&q, ACTIVE_TOL) {
                    out.push(q);
                }
            }
        }
        out
    }
}

/// All `k`-element subsets of `0..m` in lexicographic order.
pub(crate) fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Accept the final iterate when the residual norm is below this.
    pub accept: f64,
    /// Stop once a step is shorter than this.
    pub step_tol: f64,
    /// Steps are scaled down to at most this length.
    pub max_step: f64,
    /// Give up when an iterate moves farther than this from the start.
    pub max_travel: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 200, accept: 1e-10, step_tol: 1e-14, max_step: 0.5, max_travel: 10.0 }
    }
}

/// Gauss-Newton with minimal-norm steps for an under- or well-determined
/// system `F(x) = 0`. Keeps iterating past the acceptance threshold until
/// steps stall, so double roots are resolved as far as rounding allows.
pub fn newton_least_norm<F>(x0: Vec<f64>, mut f: F, opts: &NewtonOptions) -> Result<Vec<f64>, NewtonFailure>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>), ExprError>,
{
    let start = x0.clone();
    let mut x = x0;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let (r, j) = f(&x)?;
        residual = linalg::norm(&r);
        if r.is_empty() || residual == 0.0 {
            return Ok(x);
        }
        let rhs = -DVector::from_vec(r);
        let smax = linalg::right_svd(&j).0.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            break;
        }
        let mut step = linalg::min_norm_solve(&j, &rhs, smax * 1e-13);
        let len = step.norm();
        if len > opts.max_step {
            step *= opts.max_step / len;
        }
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi += si;
        }
        if linalg::norm(&x.iter().zip(&start).map(|(a, b)| a - b).collect::<Vec<_>>()) > opts.max_travel {
            return Err(NewtonFailure::LeftDomain);
        }
        if step.norm() < opts.step_tol {
            let (r, _) = f(&x)?;
            residual = linalg::norm(&r);
            break;
        }
    }
    if residual <= opts.accept {
        Ok(x)
    } else {
        let (r, _) = f(&x)?;
        let last = linalg::norm(&r);
        if last <= opts.accept {
            Ok(x)
        } else {
            Err(NewtonFailure::NoConvergence { residual: last })
        }
    }
}

/// Deduplicate points closer than `tol` and sort lexicographically.
pub(crate) fn dedup_sorted(mut pts: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in pts.drain(..) {
        let dup = kept.iter().any(|q| {
            linalg::norm(&p.iter().zip(q).map(|(a, b)| a - b).collect::<Vec<_>>()) < tol
        });
        if !dup {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    kept
}
