//! Explicit local models: the canonical bundle fold form `d⟨ψ∘π, A⟩ + π*β`
//! and its kernel, the folded cotangent model, minimal coupling, and the
//! local cutting maps.

mod cut;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cut::{
    canonical_representative, cut_moment, cut_section_and_alpha, cut_transition, CutChart, CutPoint, LEVEL_TOL,
};

use crate::expr::{parse_with_vars, Expr, ExprError, VectorExpression};
use crate::form::{FormError, FormField, OneForm};
use crate::hamiltonian::{MomentMap, TorusAction};
use crate::lattice::LatticeError;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid bundle chart: {0}")]
    InvalidChart(String),
    #[error("β is not closed (residual {residual:.3e})")]
    NotClosed { residual: f64 },
    #[error("annihilator of the image of dψ is not one-dimensional (singular values {singular_values:?})")]
    AnnihilatorNotRank1 { singular_values: Vec<f64> },
    #[error("kernel vector leaves residual {residual:.3e}")]
    KernelResidual { residual: f64 },
    #[error("point lies outside the cone at w (pairing {pairing:.3e} on normal {index})")]
    OutsideCone { index: usize, pairing: f64 },
    #[error("point is off the level set (residual {residual:.3e})")]
    NotOnLevelSet { residual: f64 },
    #[error("pairing {pairing:.3e} on normal {index} must be positive")]
    NonPositivePairing { index: usize, pairing: f64 },
    #[error("incompatible cut charts: {0}")]
    IncompatibleCharts(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A trivialised chart `U × Tⁿ` of a principal torus bundle with the map
/// `ψ: U → 𝔤*` and a connection `A = (A_1, …, A_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleChart {
    pub base_vars: Vec<String>,
    pub fiber_vars: Vec<String>,
    pub psi: VectorExpression,
    pub connection: Vec<OneForm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub base_vars: Vec<String>,
    pub fiber_vars: Vec<String>,
    pub psi: Vec<String>,
    /// Coefficients of each `A_a` over base then fiber variables; `dθ_a` when absent.
    #[serde(default)]
    pub connection: Option<Vec<Vec<String>>>,
}

impl BundleChart {
    pub fn new(
        base_vars: Vec<String>,
        fiber_vars: Vec<String>,
        psi: VectorExpression,
        connection: Vec<OneForm>,
    ) -> Result<BundleChart, ModelError> {
        let chart: Vec<String> = base_vars.iter().chain(&fiber_vars).cloned().collect();
        let bad = |m: &str| Err(ModelError::InvalidChart(m.to_string()));
        if psi.len() != fiber_vars.len() || connection.len() != fiber_vars.len() {
            return bad("ψ, A and the fiber must have the same number of components");
        }
        if psi.vars() != base_vars.as_slice() {
            return bad("ψ must be written in the base variables");
        }
        for (a, form) in connection.iter().enumerate() {
            if form.vars() != chart.as_slice() {
                return bad("connection components must be written in base then fiber variables");
            }
            for c in form.coeffs() {
                if c.variables().iter().any(|v| fiber_vars.contains(v)) {
                    return bad("connection coefficients must not depend on the fiber angles");
                }
            }
            for b in 0..fiber_vars.len() {
                let c = &form.coeffs()[base_vars.len() + b];
                let ok = if a == b { c.is_one() } else { c.is_zero() };
                if !ok {
                    return Err(ModelError::InvalidChart(format!("A_{a}(∂{}) must be {}", fiber_vars[b], (a == b) as u8)));
                }
            }
        }
        Ok(BundleChart { base_vars, fiber_vars, psi, connection })
    }

    /// Chart with the flat connection `A = (dθ_1, …, dθ_n)`.
    pub fn flat(base_vars: Vec<String>, fiber_vars: Vec<String>, psi: VectorExpression) -> Result<BundleChart, ModelError> {
        let chart: Vec<String> = base_vars.iter().chain(&fiber_vars).cloned().collect();
        let a = (0..fiber_vars.len()).map(|i| OneForm::basis(&chart, base_vars.len() + i)).collect();
        BundleChart::new(base_vars, fiber_vars, psi, a)
    }

    /// `θ1, …, θn` fibers and a flat connection over `ψ`.
    pub fn standard(psi: VectorExpression) -> Result<BundleChart, ModelError> {
        let fiber = (1..=psi.len()).map(|i| format!("theta{i}")).collect();
        BundleChart::flat(psi.vars().to_vec(), fiber, psi)
    }

    pub fn from_spec(s: &BundleSpec) -> Result<BundleChart, ModelError> {
        let psi = VectorExpression::parse(&s.psi, &s.base_vars)?;
        match &s.connection {
            None => BundleChart::flat(s.base_vars.clone(), s.fiber_vars.clone(), psi),
            Some(rows) => {
                let chart = chart_vars(&s.base_vars, &s.fiber_vars);
                let a = rows
                    .iter()
                    .map(|r| OneForm::parse(&chart, &r.iter().map(String::as_str).collect::<Vec<_>>()))
                    .collect::<Result<Vec<_>, _>>()?;
                BundleChart::new(s.base_vars.clone(), s.fiber_vars.clone(), psi, a)
            }
        }
    }

    pub fn spec(&self) -> BundleSpec {
        BundleSpec {
            base_vars: self.base_vars.clone(),
            fiber_vars: self.fiber_vars.clone(),
            psi: self.psi.components().iter().map(|e| e.to_string()).collect(),
            connection: Some(self.connection.iter().map(|a| a.coeffs().iter().map(|c| c.to_string()).collect()).collect()),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        chart_vars(&self.base_vars, &self.fiber_vars)
    }

    pub fn rank(&self) -> usize {
        self.fiber_vars.len()
    }

    /// `∂θ_a` for each fiber angle.
    pub fn action(&self) -> TorusAction {
        let vars = self.vars();
        let n = vars.len();
        let gens = (0..self.rank())
            .map(|a| {
                let c = (0..n).map(|i| if i == self.base_vars.len() + a { Expr::one() } else { Expr::zero() }).collect();
                VectorExpression::new(c, &vars).expect("constant field")
            })
            .collect();
        TorusAction { generators: gens }
    }

    /// `ψ∘π`, the moment map of the canonical form.
    pub fn moment(&self) -> MomentMap {
        MomentMap { components: VectorExpression::new(self.psi.components().to_vec(), &self.vars()).expect("base vars in chart") }
    }

    fn split(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        let n = self.base_vars.len() + self.rank();
        if p.len() != n {
            return Err(ModelError::DimensionMismatch(format!("point has {} coordinates, chart has {n}", p.len())));
        }
        Ok(p[..self.base_vars.len()].to_vec())
    }
}

fn chart_vars(base: &[String], fiber: &[String]) -> Vec<String> {
    base.iter().chain(fiber).cloned().collect()
}

// Closedness is checked at a fixed scatter of points; points where a
// coefficient is undefined are skipped.
fn check_closed(beta: &FormField) -> Result<(), ModelError> {
    let n = beta.dim();
    let mut worst: f64 = 0.0;
    for k in 0..7 {
        let p: Vec<f64> = (0..n).map(|i| (((k * 7 + i * 13) % 17) as f64 / 17.0) * 1.6 - 0.7).collect();
        match beta.exterior_derivative_at(&p) {
            Ok(d) => worst = d.iter().fold(worst, |m, x| m.max(x.abs())),
            Err(ExprError::Domain(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    if worst > 1e-9 {
        return Err(ModelError::NotClosed { residual: worst });
    }
    Ok(())
}

/// `d⟨ψ∘π, A⟩ + π*β` on the chart `base × fiber`.
pub fn canonical_form(b: &BundleChart, beta: Option<&FormField>) -> Result<FormField, ModelError> {
    let vars = b.vars();
    let mut pairing = OneForm::zero(&vars);
    for (a, psi_a) in b.connection.iter().zip(b.psi.components()) {
        pairing = pairing.add(&a.scale(psi_a))?;
    }
    let mut sigma = pairing.exterior_derivative();
    if let Some(beta) = beta {
        if beta.vars() != b.base_vars.as_slice() {
            return Err(ModelError::DimensionMismatch("β must be written in the base variables".into()));
        }
        check_closed(beta)?;
        sigma = sigma.add(&beta.pull_back_to(&vars)?)?;
    }
    Ok(sigma)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFrame {
    /// `V_P`, the fundamental field of `V ∈ (im dψ)°`.
    pub vertical: Vec<f64>,
    /// `X̃ + η_P` for `X ∈ ker dψ`.
    pub horizontal: Vec<f64>,
    pub annihilator: Vec<f64>,
    pub base_kernel: Vec<f64>,
    pub eta: Vec<f64>,
    /// `⟨D²ψ(X, X), V⟩`, positive by the choice of sign of `V`.
    pub second_derivative_pairing: f64,
    pub residual: f64,
}

pub const KERNEL_RESIDUAL_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-8;

/// Kernel of the canonical form at a point over the fold of `ψ`.
pub fn canonical_kernel(b: &BundleChart, beta: Option<&FormField>, p: &[f64]) -> Result<KernelFrame, ModelError> {
    let x = b.split(p)?;
    let n = b.rank();
    let m = b.base_vars.len();
    let total = m + n;
    let j = b.psi.jacobian(&x)?;

    let (sl, left) = linalg::left_svd(&j);
    let (sr, right) = linalg::right_svd(&j);
    let small_left = (0..n).filter(|&i| sl.get(i).copied().unwrap_or(0.0) < RANK_TOL).count();
    let small_right = (0..m).filter(|&i| sr.get(i).copied().unwrap_or(0.0) < RANK_TOL).count();
    if small_left != 1 || small_right != 1 {
        return Err(ModelError::AnnihilatorNotRank1 { singular_values: sl });
    }
    let mut v: Vec<f64> = left.column(n - 1).iter().copied().collect();
    let mut xk: Vec<f64> = right.column(m - 1).iter().copied().collect();
    crate::singularity::canonical_sign(&mut xk);
    let d2 = b.psi.second_derivative(&x, &xk, &xk)?;
    let mut pairing = linalg::dot(&d2, &v);
    if pairing.abs() < RANK_TOL {
        return Err(ModelError::AnnihilatorNotRank1 { singular_values: sl });
    }
    if pairing < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
        pairing = -pairing;
    }

    let sigma = canonical_form(b, beta)?;
    let mut vertical = vec![0.0; total];
    vertical[m..].copy_from_slice(&v);

    // Horizontal lift: A(X̃) = 0 with X̃ = (X, w).
    let a_vals: Vec<Vec<f64>> = b.connection.iter().map(|a| a.eval(p)).collect::<Result<_, _>>()?;
    let a_fib = DMatrix::from_fn(n, n, |r, c| a_vals[r][m + c]);
    let a_base = DVector::from_fn(n, |r, _| (0..m).map(|i| a_vals[r][i] * xk[i]).sum::<f64>());
    let w = a_fib.lu().solve(&(-a_base)).ok_or_else(|| ModelError::InvalidChart("A restricted to the fiber is singular".into()))?;
    let mut lift = xk.clone();
    lift.extend(w.iter());

    // Correction η: i_{η_P} σ = −i_{X̃} σ, minimal norm.
    let c = sigma.contract(&lift, p)?;
    let s = sigma.matrix(p)?;
    let cols = DMatrix::from_fn(total, n, |i, a| s[(m + a, i)]);
    let eta = linalg::min_norm_solve(&cols, &(-DVector::from_vec(c)), 1e-12);
    let mut horizontal = lift;
    for a in 0..n {
        horizontal[m + a] += eta[a];
    }

    let r1 = sigma.contract(&vertical, p)?;
    let r2 = sigma.contract(&horizontal, p)?;
    let residual = r1.iter().chain(&r2).fold(0.0f64, |acc, v| acc.max(v.abs()));
    if residual > KERNEL_RESIDUAL_TOL {
        return Err(ModelError::KernelResidual { residual });
    }
    Ok(KernelFrame {
        vertical,
        horizontal,
        annihilator: v,
        base_kernel: xk,
        eta: eta.iter().copied().collect(),
        second_derivative_pairing: pairing,
        residual,
    })
}

/// `Σ_{i<n} dp_i∧dx_i + t dp_n∧dt` on `(x_1, …, x_{n−1}, t, p_1, …, p_n)`.
pub fn folded_cotangent_form(n: usize) -> Result<FormField, ModelError> {
    if n == 0 {
        return Err(ModelError::DimensionMismatch("n must be at least 1".into()));
    }
    let mut vars: Vec<String> = (1..n).map(|i| format!("x{i}")).collect();
    vars.push("t".into());
    vars.extend((1..=n).map(|i| format!("p{i}")));
    let mut entries: Vec<((usize, usize), Expr)> = (0..n - 1).map(|i| ((n + i, i), Expr::one())).collect();
    entries.push(((2 * n - 1, n - 1), Expr::var("t")));
    Ok(FormField::new(&vars, entries)?)
}

/// The minimal coupling form with its torus action and moment map.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingModel {
    pub form: FormField,
    pub action: TorusAction,
    pub moment: MomentMap,
}

/// `Ω_A = π*σ − d⟨pr₂, A⟩` on `(base, θ, η)`. The connection is written in
/// `(base, θ)`; `None` means flat.
pub fn minimal_coupling(
    sigma: &FormField,
    fiber: &[String],
    connection: Option<&[OneForm]>,
    moment_vars: &[String],
) -> Result<CouplingModel, ModelError> {
    if moment_vars.len() != fiber.len() {
        return Err(ModelError::DimensionMismatch("one moment coordinate per fiber angle".into()));
    }
    let principal = chart_vars(sigma.vars(), fiber);
    let flat: Vec<OneForm>;
    let a = match connection {
        Some(a) => a,
        None => {
            flat = (0..fiber.len()).map(|i| OneForm::basis(&principal, sigma.dim() + i)).collect();
            &flat
        }
    };
    if a.len() != fiber.len() {
        return Err(ModelError::DimensionMismatch("one connection component per fiber angle".into()));
    }
    let vars = chart_vars(&principal, moment_vars);
    let mut pairing = OneForm::zero(&vars);
    for (ai, eta) in a.iter().zip(moment_vars) {
        pairing = pairing.add(&ai.pull_back_to(&vars)?.scale(&Expr::var(eta.as_str())))?;
    }
    let form = sigma.pull_back_to(&vars)?.sub(&pairing.exterior_derivative())?;
    let n = vars.len();
    let gens = (0..fiber.len())
        .map(|k| {
            let c = (0..n).map(|i| if i == sigma.dim() + k { Expr::one() } else { Expr::zero() }).collect();
            VectorExpression::new(c, &vars)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mu = moment_vars
        .iter()
        .map(|e| parse_with_vars(&format!("-{e}"), &vars.iter().map(String::as_str).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CouplingModel { form, action: TorusAction { generators: gens }, moment: MomentMap { components: VectorExpression::new(mu, &vars)? } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::exterior_derivative_is_zero;
    use crate::hamiltonian::verify_hamiltonian;

    fn strip() -> BundleChart {
        BundleChart::standard(VectorExpression::parse(&["x", "t^2"], &["x", "t"]).unwrap()).unwrap()
    }

    fn pts(n: usize) -> Vec<Vec<f64>> {
        (0..5).map(|k| (0..n).map(|i| ((k * 5 + i * 3) % 11) as f64 / 11.0 - 0.4).collect()).collect()
    }

    #[test]
    fn canonical_strip_form() {
        let s = canonical_form(&strip(), None).unwrap();
        let expect = FormField::parse(&["x", "t", "theta1", "theta2"], &[(0, 2, "1"), (1, 3, "2*t")]).unwrap();
        assert_eq!(s, expect);
        assert!(exterior_derivative_is_zero(&s, &pts(4)).unwrap().closed);
        assert!(verify_hamiltonian(&s, &strip().action(), &strip().moment(), &pts(4)).unwrap().passed);
    }

    #[test]
    fn basic_term_keeps_fold() {
        let beta = FormField::parse(&["x", "t"], &[(0, 1, "1")]).unwrap();
        let s0 = canonical_form(&strip(), None).unwrap();
        let s1 = canonical_form(&strip(), Some(&beta)).unwrap();
        for p in pts(4) {
            assert!((s0.pfaffian(&p).unwrap().abs() - s1.pfaffian(&p).unwrap().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_map_is_symplectic() {
        let b = BundleChart::standard(VectorExpression::parse(&["x", "y"], &["x", "y"]).unwrap()).unwrap();
        let s = canonical_form(&b, None).unwrap();
        for p in pts(4) {
            assert!((s.pfaffian(&p).unwrap().abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_kernel() {
        let k = canonical_kernel(&strip(), None, &[0.3, 0.0, 0.5, 1.0]).unwrap();
        assert_eq!(k.vertical, vec![0.0, 0.0, 0.0, 1.0]);
        assert!((k.horizontal[1] - 1.0).abs() < 1e-12);
        assert!(k.horizontal.iter().enumerate().all(|(i, v)| i == 1 || v.abs() < 1e-12));
        assert!((k.second_derivative_pairing - 2.0).abs() < 1e-12);
        assert!(matches!(
            canonical_kernel(&strip(), None, &[0.3, 0.4, 0.0, 0.0]),
            Err(ModelError::AnnihilatorNotRank1 { .. })
        ));
    }

    #[test]
    fn perturbed_connection_kernel() {
        let vars = ["x", "t", "theta1", "theta2"];
        let a = vec![OneForm::parse(&vars, &["0", "x", "1", "0"]).unwrap(), OneForm::parse(&vars, &["0", "0", "0", "1"]).unwrap()];
        let psi = VectorExpression::parse(&["x", "t^2"], &["x", "t"]).unwrap();
        let b = BundleChart::new(vec!["x".into(), "t".into()], vec!["theta1".into(), "theta2".into()], psi, a).unwrap();
        let x = 0.7;
        let k = canonical_kernel(&b, None, &[x, 0.0, 0.2, 0.1]).unwrap();
        let expect = [0.0, 1.0, -2.0 * x, 0.0];
        for (a, e) in k.horizontal.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12, "{:?}", k.horizontal);
        }
        assert!(k.residual < KERNEL_RESIDUAL_TOL);
    }

    #[test]
    fn connection_must_be_invariant() {
        let vars = ["x", "t", "theta1", "theta2"];
        let psi = VectorExpression::parse(&["x", "t^2"], &["x", "t"]).unwrap();
        let a = vec![OneForm::parse(&vars, &["theta1", "0", "1", "0"]).unwrap(), OneForm::parse(&vars, &["0", "0", "0", "1"]).unwrap()];
        assert!(BundleChart::new(vec!["x".into(), "t".into()], vec!["theta1".into(), "theta2".into()], psi.clone(), a).is_err());
        let a = vec![OneForm::parse(&vars, &["0", "0", "2", "0"]).unwrap(), OneForm::parse(&vars, &["0", "0", "0", "1"]).unwrap()];
        assert!(BundleChart::new(vec!["x".into(), "t".into()], vec!["theta1".into(), "theta2".into()], psi, a).is_err());
    }

    #[test]
    fn cotangent_models() {
        let s1 = folded_cotangent_form(1).unwrap();
        assert_eq!(s1.vars(), ["t", "p1"]);
        assert_eq!(s1.pfaffian(&[0.5, 3.0]).unwrap().abs(), 0.5);
        let s2 = folded_cotangent_form(2).unwrap();
        assert_eq!(s2.vars(), ["x1", "t", "p1", "p2"]);
        let z = [0.4, 0.0, -0.3, 0.8];
        let k = s2.contract(&[0.0, 0.0, 0.0, 1.0], &z).unwrap();
        assert!(k.iter().all(|v| v.abs() < 1e-15));
        assert!(folded_cotangent_form(0).is_err());
    }

    #[test]
    fn coupling_of_folded_base() {
        let base = FormField::parse(&["x1", "x2"], &[(0, 1, "x1")]).unwrap();
        let m = minimal_coupling(&base, &["theta".into()], None, &["eta".into()]).unwrap();
        let expect = FormField::parse(&["x1", "x2", "theta", "eta"], &[(0, 1, "x1"), (3, 2, "-1")]).unwrap();
        assert_eq!(m.form, expect);
        for p in pts(4) {
            assert!((m.form.pfaffian(&p).unwrap().abs() - p[0].abs()).abs() < 1e-12);
            let c = m.form.contract(&[0.0, 0.0, 1.0, 0.0], &p).unwrap();
            assert_eq!(c, vec![0.0, 0.0, 0.0, 1.0]);
        }
        assert!(verify_hamiltonian(&m.form, &m.action, &m.moment, &pts(4)).unwrap().passed);
    }
}
