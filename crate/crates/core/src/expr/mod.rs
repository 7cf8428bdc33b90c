//! Scalar expressions in named variables: parsing, printing, evaluation and
//! forward-mode differentiation up to second order.

mod ast;
mod parse;
mod print;
pub mod scalar;

use nalgebra::DMatrix;
use thiserror::Error;

pub use ast::{Expr, Func};
pub use parse::{parse, parse_with_vars};
pub use scalar::{Dual, HyperDual, Scalar};

pub(crate) use ast::rational_to_f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// An expression with variables resolved to slot indices and constants
/// converted to `f64`.
#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    fn compile(e: &Expr, vars: &[String]) -> Result<Node, ExprError> {
        let bin = |a: &Expr, b: &Expr| -> Result<(Box<Node>, Box<Node>), ExprError> {
            Ok((Box::new(Node::compile(a, vars)?), Box::new(Node::compile(b, vars)?)))
        };
        Ok(match e {
            Expr::Const(c) => Node::Const(rational_to_f64(c)),
            Expr::Var(v) => Node::Var(
                vars.iter()
                    .position(|x| x == v)
                    .ok_or_else(|| ExprError::UnknownVariable(v.clone()))?,
            ),
            Expr::Neg(a) => Node::Neg(Box::new(Node::compile(a, vars)?)),
            Expr::Add(a, b) => {
                let (a, b) = bin(a, b)?;
                Node::Add(a, b)
            }
            Expr::Sub(a, b) => {
                let (a, b) = bin(a, b)?;
                Node::Sub(a, b)
            }
            Expr::Mul(a, b) => {
                let (a, b) = bin(a, b)?;
                Node::Mul(a, b)
            }
            Expr::Div(a, b) => {
                let (a, b) = bin(a, b)?;
                Node::Div(a, b)
            }
            Expr::Pow(a, n) => Node::Pow(Box::new(Node::compile(a, vars)?), *n),
            Expr::Call(f, a) => Node::Call(*f, Box::new(Node::compile(a, vars)?)),
        })
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S, ExprError> {
        Ok(match self {
            Node::Const(c) => S::from_f64(*c),
            Node::Var(i) => x[*i].clone(),
            Node::Neg(a) => -a.eval(x)?,
            Node::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Node::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Node::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Node::Div(a, b) => {
                let d = b.eval(x)?;
                if d.value() == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                a.eval(x)? / d
            }
            Node::Pow(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(ExprError::Domain("negative power of zero".into()));
                }
                base.powi(*n)
            }
            Node::Call(f, a) => {
                let v = a.eval(x)?;
                match f {
                    Func::Sqrt if v.value() < 0.0 => {
                        return Err(ExprError::Domain(format!("sqrt of {}", v.value())))
                    }
                    Func::Log if v.value() <= 0.0 => {
                        return Err(ExprError::Domain(format!("log of {}", v.value())))
                    }
                    Func::Sqrt => v.sqrt(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                }
            }
        })
    }
}

/// An ordered tuple of expressions over an ordered list of coordinates:
/// a map `ℝ^vars → ℝ^components`.
#[derive(Clone, Debug)]
pub struct VectorExpression {
    components: Vec<Expr>,
    vars: Vec<String>,
    compiled: Vec<Node>,
}

impl PartialEq for VectorExpression {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.vars == other.vars
    }
}

impl VectorExpression {
    pub fn new<S: AsRef<str>>(components: Vec<Expr>, vars: &[S]) -> Result<Self, ExprError> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let compiled = components
            .iter()
            .map(|c| Node::compile(c, &vars))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorExpression { components, vars, compiled })
    }

    /// Parse each component against the declared variables.
    pub fn parse<S: AsRef<str>, T: AsRef<str>>(components: &[S], vars: &[T]) -> Result<Self, ExprError> {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        let exprs = components
            .iter()
            .map(|c| parse_with_vars(c.as_ref(), &names))
            .collect::<Result<Vec<_>, _>>()?;
        VectorExpression::new(exprs, vars)
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    fn check_point(&self, n: usize) -> Result<(), ExprError> {
        if n != self.vars.len() {
            return Err(ExprError::DimensionMismatch { expected: self.vars.len(), got: n });
        }
        Ok(())
    }

    pub fn eval_generic<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, ExprError> {
        self.check_point(p.len())?;
        let out = self.compiled.iter().map(|c| c.eval(p)).collect::<Result<Vec<S>, _>>()?;
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(ExprError::Domain("non-finite value or derivative".into()))
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.eval_generic(p)
    }

    /// Value of component `i` only.
    pub fn eval_component(&self, i: usize, p: &[f64]) -> Result<f64, ExprError> {
        self.check_point(p.len())?;
        let v = self.compiled[i].eval(p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain("non-finite value".into()))
        }
    }

    /// `J[i][j] = ∂f_i/∂x_j` by forward-mode dual numbers, one pass per column.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        self.check_point(p.len())?;
        let (m, n) = (self.len(), self.dim());
        let mut j = DMatrix::zeros(m, n);
        for col in 0..n {
            let seed: Vec<Dual> =
                p.iter().enumerate().map(|(i, &x)| Dual::new(x, (i == col) as u8 as f64)).collect();
            let vals = self.eval_generic(&seed)?;
            for (row, v) in vals.iter().enumerate() {
                j[(row, col)] = v.d;
            }
        }
        Ok(j)
    }

    /// Directional derivative `df_p(u)`.
    pub fn directional(&self, p: &[f64], u: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.check_point(u.len())?;
        let seed: Vec<Dual> = p.iter().zip(u).map(|(&x, &d)| Dual::new(x, d)).collect();
        Ok(self.eval_generic(&seed)?.into_iter().map(|v| v.d).collect())
    }

    /// The bilinear second derivative `D²f_p(u, v)`.
    pub fn second_derivative(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.check_point(p.len())?;
        self.check_point(u.len())?;
        self.check_point(v.len())?;
        let seed: Vec<HyperDual> = (0..p.len()).map(|i| HyperDual::new(p[i], u[i], v[i], 0.0)).collect();
        Ok(self.eval_generic(&seed)?.into_iter().map(|h| h.ab).collect())
    }

    /// Jacobian at `p` together with its derivative along `k`,
    /// i.e. `d/ds J(p + s k)` at `s = 0`.
    pub fn jacobian_with_derivative(
        &self,
        p: &[f64],
        k: &[f64],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), ExprError> {
        self.check_point(p.len())?;
        self.check_point(k.len())?;
        let (m, n) = (self.len(), self.dim());
        let mut j = DMatrix::zeros(m, n);
        let mut dj = DMatrix::zeros(m, n);
        for col in 0..n {
            let seed: Vec<HyperDual> = (0..n)
                .map(|i| HyperDual::new(p[i], (i == col) as u8 as f64, k[i], 0.0))
                .collect();
            for (row, h) in self.eval_generic(&seed)?.iter().enumerate() {
                j[(row, col)] = h.a;
                dj[(row, col)] = h.ab;
            }
        }
        Ok((j, dj))
    }

    /// Hessian of component `i`.
    pub fn hessian(&self, i: usize, p: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        self.check_point(p.len())?;
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let seed: Vec<HyperDual> = (0..n)
                    .map(|k| HyperDual::new(p[k], (k == a) as u8 as f64, (k == b) as u8 as f64, 0.0))
                    .collect();
                let v = self.compiled[i].eval(&seed)?;
                if !v.is_finite() {
                    return Err(ExprError::Domain("non-finite second derivative".into()));
                }
                h[(a, b)] = v.ab;
                h[(b, a)] = v.ab;
            }
        }
        Ok(h)
    }
}

/// Evaluate a single expression at a point given in the order of `vars`.
pub fn eval_at<S: AsRef<str>>(e: &Expr, vars: &[S], p: &[f64]) -> Result<f64, ExprError> {
    let f = VectorExpression::new(vec![e.clone()], vars)?;
    Ok(f.eval(p)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vx(c: &[&str], v: &[&str]) -> VectorExpression {
        VectorExpression::parse(c, v).unwrap()
    }

    #[test]
    fn eval_quadratic() {
        let f = vx(&["x1*x1 + 2"], &["x1"]);
        assert_eq!(f.eval(&[3.0]).unwrap(), vec![11.0]);
    }

    #[test]
    fn sphere_chart_value_and_jacobian() {
        let f = vx(&["sqrt(1 - y^2 - z^2)", "y"], &["y", "z"]);
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap()[0], 1.0);
        let j = f.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(j.determinant(), 0.0);
    }

    #[test]
    fn jacobian_of_fold_model() {
        let f = vx(&["x", "y^2"], &["x", "y"]);
        let j = f.jacobian(&[1.0, 3.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 6.0]));
    }

    #[test]
    fn second_derivative_examples() {
        let f = vx(&["x", "y^2"], &["x", "y"]);
        assert_eq!(f.second_derivative(&[0.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap(), vec![0.0, 2.0]);
        let g = vx(&["x", "y^3"], &["x", "y"]);
        assert_eq!(g.second_derivative(&[0.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn domain_errors() {
        let f = vx(&["sqrt(x)"], &["x"]);
        assert!(matches!(f.eval(&[-1.0]), Err(ExprError::Domain(_))));
        let g = vx(&["1/x"], &["x"]);
        assert!(matches!(g.jacobian(&[0.0]), Err(ExprError::Domain(_))));
        let h = vx(&["log(x)"], &["x"]);
        assert!(matches!(h.eval(&[0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(f.eval(&[1.0, 2.0]), Err(ExprError::DimensionMismatch { .. })));
    }

    #[test]
    fn jacobian_derivative_matches_second_derivative() {
        let f = vx(&["x*y^2", "sin(x)*exp(y)"], &["x", "y"]);
        let p = [0.3, -0.7];
        let k = [0.2, 0.9];
        let (j, dj) = f.jacobian_with_derivative(&p, &k).unwrap();
        assert_eq!(j, f.jacobian(&p).unwrap());
        for col in 0..2 {
            let e: Vec<f64> = (0..2).map(|i| (i == col) as u8 as f64).collect();
            let d2 = f.second_derivative(&p, &e, &k).unwrap();
            for row in 0..2 {
                assert!((dj[(row, col)] - d2[row]).abs() < 1e-14);
            }
        }
    }
}
