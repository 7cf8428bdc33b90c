//! Differential 2-forms with expression coefficients: closedness, the
//! Pfaffian, folded-symplectic verification, the canonical orientation of
//! the null line, and pointwise solvability of `i_X σ = β`.

mod contraction;
mod folded;
mod orientation;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contraction::{solve_contraction, ContractionSolution};
pub use folded::{verify_folded, FoldData, FoldedOptions, FormFoldPoint};
pub use orientation::{induced_orientation, induced_orientation_with_extensions};

use crate::expr::{parse_with_vars, Dual, Expr, ExprError, Scalar, VectorExpression};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("odd dimension {0}: the Pfaffian needs an even number of variables")]
    OddDimension(usize),
    #[error("form is not closed: max |dσ| = {residual:.3e}")]
    NotClosed { residual: f64 },
    #[error("Pfaffian vanishes non-transversally at {point:?} (stratum gradient {gradient:.3e})")]
    DegenerateVanishing { point: Vec<f64>, gradient: f64 },
    #[error("kernel at {point:?} is too large: {detail}")]
    KernelTooLarge { point: Vec<f64>, nullity: usize, detail: String },
    #[error("Pfaffian changes sign between samples but no zero was located")]
    Inconclusive,
    #[error("{which} is not in the kernel of σ (|σ·{which}| = {residual:.3e})")]
    NotInKernel { which: &'static str, residual: f64 },
    #[error("transverse section is tangent to the fold")]
    NotTransverse,
    #[error("null vector is not tangent to the fold")]
    NotTangent,
    #[error("orientation derivative vanishes ({0:.3e})")]
    DegenerateOrientation(f64),
    #[error("β does not vanish on ker σ: pairing {pairing:.3e} with kernel vector {kernel_vector:?}")]
    Unsolvable { kernel_vector: Vec<f64>, pairing: f64 },
    #[error("singular solve left residual {0:.3e}")]
    SingularSolveFailure(f64),
    #[error("variables differ: {0:?} vs {1:?}")]
    VariableMismatch(Vec<String>, Vec<String>),
    #[error("invalid form: {0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `σ = Σ_{i<j} c_ij dx_i ∧ dx_j` stored as the full antisymmetric matrix.
#[derive(Clone, Debug)]
pub struct FormField {
    vars: Vec<String>,
    coeffs: Vec<Vec<Expr>>,
    upper: VectorExpression,
}

impl PartialEq for FormField {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.coeffs == other.coeffs
    }
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

impl FormField {
    /// Build from entries `((i, j), c)`; `(j, i)` entries are negated and
    /// repeated pairs are summed. Diagonal entries must be zero.
    pub fn new<S: AsRef<str>>(
        vars: &[S],
        entries: impl IntoIterator<Item = ((usize, usize), Expr)>,
    ) -> Result<FormField, FormError> {
        let n = vars.len();
        let mut upper: Vec<Vec<Expr>> = vec![vec![Expr::zero(); n]; n];
        for ((i, j), c) in entries {
            if i >= n || j >= n {
                return Err(FormError::Invalid(format!("index ({i},{j}) out of range for {n} variables")));
            }
            if i == j {
                if c.is_zero() {
                    continue;
                }
                return Err(FormError::Invalid(format!("diagonal coefficient ({i},{i}) must vanish")));
            }
            let (a, b, c) = if i < j { (i, j, c) } else { (j, i, -c) };
            let prev = std::mem::replace(&mut upper[a][b], Expr::zero());
            upper[a][b] = prev + c;
        }
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let mut coeffs = vec![vec![Expr::zero(); n]; n];
        for (i, j) in upper_pairs(n) {
            coeffs[i][j] = upper[i][j].clone();
            coeffs[j][i] = -upper[i][j].clone();
        }
        let flat: Vec<Expr> = upper_pairs(n).map(|(i, j)| coeffs[i][j].clone()).collect();
        let upper = VectorExpression::new(flat, &vars)?;
        Ok(FormField { vars, coeffs, upper })
    }

    pub fn zero<S: AsRef<str>>(vars: &[S]) -> FormField {
        FormField::new(vars, std::iter::empty()).expect("zero form")
    }

    /// Entries given as `(i, j, "expression")` and parsed against `vars`.
    pub fn parse<S: AsRef<str>>(vars: &[S], entries: &[(usize, usize, &str)]) -> Result<FormField, FormError> {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let parsed = entries
            .iter()
            .map(|&(i, j, e)| Ok(((i, j), parse_with_vars(e, &names)?)))
            .collect::<Result<Vec<_>, ExprError>>()?;
        FormField::new(vars, parsed)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn coeff(&self, i: usize, j: usize) -> &Expr {
        &self.coeffs[i][j]
    }

    /// Nonzero upper-triangular entries.
    pub fn entries(&self) -> Vec<((usize, usize), Expr)> {
        upper_pairs(self.dim())
            .filter(|&(i, j)| !self.coeffs[i][j].is_zero())
            .map(|(i, j)| ((i, j), self.coeffs[i][j].clone()))
            .collect()
    }

    pub fn matrix_generic<S: Scalar>(&self, p: &[S]) -> Result<Vec<Vec<S>>, ExprError> {
        let n = self.dim();
        let vals = self.upper.eval_generic(p)?;
        let mut m = vec![vec![S::from_f64(0.0); n]; n];
        for ((i, j), v) in upper_pairs(n).zip(vals) {
            m[j][i] = -v.clone();
            m[i][j] = v;
        }
        Ok(m)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        let m = self.matrix_generic(p)?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |i, j| m[i][j]))
    }

    /// `∂_w σ_ij` at `p`.
    pub fn derivative_along(&self, p: &[f64], w: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        let seed: Vec<Dual> = p.iter().zip(w).map(|(&x, &d)| Dual::new(x, d)).collect();
        let m = self.matrix_generic(&seed)?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |i, j| m[i][j].d))
    }

    /// `(i_X σ)_j = Σ_i X_i σ_ij`.
    pub fn contract(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>, ExprError> {
        let m = self.matrix(p)?;
        Ok((0..self.dim()).map(|j| (0..self.dim()).map(|i| x[i] * m[(i, j)]).sum()).collect())
    }

    /// `σ_p(u, v)`.
    pub fn pair(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64, ExprError> {
        let c = self.contract(u, p)?;
        Ok(c.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    pub fn pfaffian(&self, p: &[f64]) -> Result<f64, FormError> {
        let n = self.dim();
        if n % 2 == 1 {
            return Err(FormError::OddDimension(n));
        }
        Ok(pfaffian_of(&self.matrix_generic(p)?))
    }

    /// Pfaffian and its gradient by forward differentiation.
    pub fn pfaffian_and_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>), FormError> {
        let n = self.dim();
        if n % 2 == 1 {
            return Err(FormError::OddDimension(n));
        }
        let mut grad = vec![0.0; n];
        let mut value = 0.0;
        for (c, g) in grad.iter_mut().enumerate() {
            let seed: Vec<Dual> = p.iter().enumerate().map(|(i, &x)| Dual::new(x, (i == c) as u8 as f64)).collect();
            let pf = pfaffian_of(&self.matrix_generic(&seed)?);
            *g = pf.d;
            value = pf.v;
        }
        if n == 0 {
            value = 1.0;
        }
        Ok((value, grad))
    }

    /// Components `(dσ)_{ijk} = ∂_i c_jk - ∂_j c_ik + ∂_k c_ij`, `i < j < k`.
    pub fn exterior_derivative_at(&self, p: &[f64]) -> Result<Vec<f64>, ExprError> {
        let n = self.dim();
        let jac = self.upper.jacobian(p)?;
        let row = |i: usize, j: usize| upper_pairs(n).position(|q| q == (i, j)).expect("upper pair");
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    out.push(jac[(row(j, k), i)] - jac[(row(i, k), j)] + jac[(row(i, j), k)]);
                }
            }
        }
        Ok(out)
    }

    /// Sum of two forms on the same coordinates.
    pub fn add(&self, other: &FormField) -> Result<FormField, FormError> {
        if self.vars != other.vars {
            return Err(FormError::VariableMismatch(self.vars.clone(), other.vars.clone()));
        }
        FormField::new(&self.vars, self.entries().into_iter().chain(other.entries()))
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField, FormError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, c: &Expr) -> FormField {
        FormField::new(&self.vars, self.entries().into_iter().map(|(ij, e)| (ij, c.clone() * e))).expect("same shape")
    }

    /// Pull back along the coordinate projection onto a subset of `vars`:
    /// every variable of `self` must appear in `vars`.
    pub fn pull_back_to<S: AsRef<str>>(&self, vars: &[S]) -> Result<FormField, FormError> {
        let names: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let index = |v: &String| {
            names.iter().position(|n| n == v).ok_or_else(|| FormError::VariableMismatch(self.vars.clone(), names.clone()))
        };
        let map: Vec<usize> = self.vars.iter().map(index).collect::<Result<_, _>>()?;
        FormField::new(&names, self.entries().into_iter().map(|((i, j), e)| ((map[i], map[j]), e)))
    }

    pub fn spec(&self) -> FormSpec {
        FormSpec {
            vars: self.vars.clone(),
            coeffs: self.entries().into_iter().map(|((i, j), e)| (format!("{i},{j}"), e.to_string())).collect(),
        }
    }

    pub fn from_spec(spec: &FormSpec) -> Result<FormField, FormError> {
        let names: Vec<&str> = spec.vars.iter().map(String::as_str).collect();
        let index = |s: &str| -> Result<usize, FormError> {
            let s = s.trim();
            if let Ok(i) = s.parse::<usize>() {
                return Ok(i);
            }
            names.iter().position(|v| *v == s).ok_or_else(|| FormError::Invalid(format!("unknown index `{s}`")))
        };
        let mut entries = Vec::new();
        for (key, text) in &spec.coeffs {
            let (a, b) = key.split_once(',').ok_or_else(|| FormError::Invalid(format!("bad key `{key}`")))?;
            entries.push(((index(a)?, index(b)?), parse_with_vars(text, &names)?));
        }
        FormField::new(&spec.vars, entries)
    }
}

/// File form: `{"vars": [...], "coeffs": {"i,j": "expr"}}`, indices 0-based
/// or variable names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    pub vars: Vec<String>,
    pub coeffs: BTreeMap<String, String>,
}

/// Pfaffian by expansion along the first row; `Pf([[0,1],[-1,0]]) = 1`.
pub fn pfaffian_of<S: Scalar>(a: &[Vec<S>]) -> S {
    fn rec<S: Scalar>(a: &[Vec<S>], idx: &[usize]) -> S {
        if idx.is_empty() {
            return S::from_f64(1.0);
        }
        let i0 = idx[0];
        let mut total = S::from_f64(0.0);
        for k in 1..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(p, _)| p != 0 && p != k).map(|(_, &i)| i).collect();
            let term = a[i0][idx[k]].clone() * rec(a, &rest);
            total = if k % 2 == 1 { total + term } else { total - term };
        }
        total
    }
    if a.len() % 2 == 1 {
        return S::from_f64(0.0);
    }
    let idx: Vec<usize> = (0..a.len()).collect();
    rec(a, &idx)
}

/// A 1-form `Σ a_i dx_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    vars: Vec<String>,
    coeffs: Vec<Expr>,
    compiled: VectorExpression,
}

impl OneForm {
    pub fn new<S: AsRef<str>>(vars: &[S], coeffs: Vec<Expr>) -> Result<OneForm, FormError> {
        if coeffs.len() != vars.len() {
            return Err(FormError::Invalid(format!("{} coefficients for {} variables", coeffs.len(), vars.len())));
        }
        let compiled = VectorExpression::new(coeffs.clone(), vars)?;
        Ok(OneForm { vars: compiled.vars().to_vec(), coeffs, compiled })
    }

    pub fn parse<S: AsRef<str>>(vars: &[S], coeffs: &[&str]) -> Result<OneForm, FormError> {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let c = coeffs.iter().map(|e| parse_with_vars(e, &names)).collect::<Result<Vec<_>, _>>()?;
        OneForm::new(vars, c)
    }

    pub fn zero<S: AsRef<str>>(vars: &[S]) -> OneForm {
        OneForm::new(vars, vec![Expr::zero(); vars.len()]).expect("zero form")
    }

    /// `dx_i`.
    pub fn basis<S: AsRef<str>>(vars: &[S], i: usize) -> OneForm {
        let c = (0..vars.len()).map(|k| if k == i { Expr::one() } else { Expr::zero() }).collect();
        OneForm::new(vars, c).expect("basis form")
    }

    /// `d f`.
    pub fn exact<S: AsRef<str>>(vars: &[S], f: &Expr) -> Result<OneForm, FormError> {
        let c = vars.iter().map(|v| f.diff(v.as_ref())).collect();
        OneForm::new(vars, c)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.compiled.eval(p)
    }

    pub fn add(&self, other: &OneForm) -> Result<OneForm, FormError> {
        if self.vars != other.vars {
            return Err(FormError::VariableMismatch(self.vars.clone(), other.vars.clone()));
        }
        OneForm::new(&self.vars, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect())
    }

    pub fn scale(&self, c: &Expr) -> OneForm {
        OneForm::new(&self.vars, self.coeffs.iter().map(|a| c.clone() * a.clone()).collect()).expect("same shape")
    }

    /// `d(Σ a_i dx_i) = Σ_{i<j} (∂_i a_j - ∂_j a_i) dx_i ∧ dx_j`.
    pub fn exterior_derivative(&self) -> FormField {
        let n = self.vars.len();
        let entries = upper_pairs(n).map(|(i, j)| {
            ((i, j), self.coeffs[j].diff(&self.vars[i]) - self.coeffs[i].diff(&self.vars[j]))
        });
        FormField::new(&self.vars, entries).expect("well-formed")
    }

    /// Pull back along the coordinate projection onto a superset of variables.
    pub fn pull_back_to<S: AsRef<str>>(&self, vars: &[S]) -> Result<OneForm, FormError> {
        let names: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let mut c = vec![Expr::zero(); names.len()];
        for (v, a) in self.vars.iter().zip(&self.coeffs) {
            let i = names.iter().position(|n| n == v).ok_or_else(|| FormError::VariableMismatch(self.vars.clone(), names.clone()))?;
            c[i] = a.clone();
        }
        OneForm::new(&names, c)
    }

    pub fn spec(&self) -> OneFormSpec {
        OneFormSpec { vars: self.vars.clone(), coeffs: self.coeffs.iter().map(|e| e.to_string()).collect() }
    }

    pub fn from_spec(spec: &OneFormSpec) -> Result<OneForm, FormError> {
        let c: Vec<&str> = spec.coeffs.iter().map(String::as_str).collect();
        OneForm::parse(&spec.vars, &c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormSpec {
    pub vars: Vec<String>,
    pub coeffs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedReport {
    pub closed: bool,
    pub max_residual: f64,
    pub samples: usize,
}

pub const CLOSED_TOL: f64 = 1e-9;

pub fn exterior_derivative_is_zero(sigma: &FormField, samples: &[Vec<f64>]) -> Result<ClosedReport, FormError> {
    let mut max_residual: f64 = 0.0;
    for p in samples {
        for c in sigma.exterior_derivative_at(p)? {
            max_residual = max_residual.max(c.abs());
        }
    }
    Ok(ClosedReport { closed: max_residual < CLOSED_TOL, max_residual, samples: samples.len() })
}
