use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    pub const ALL: [Func; 5] = [Func::Sqrt, Func::Sin, Func::Cos, Func::Exp, Func::Log];
}

/// Scalar expression tree. Constants are exact rationals.
///
/// Canonical trees never contain `Neg(Const)` or `Div(Const, Const)` with a
/// nonzero denominator; the parser and the operator overloads fold both.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(BigRational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    pub fn powi(self, n: i32) -> Expr {
        match n {
            0 => Expr::one(),
            1 => self,
            _ => match self {
                Expr::Const(c) if !(c.is_zero() && n < 0) => Expr::Const(pow_rational(&c, n)),
                e => Expr::Pow(Box::new(e), n),
            },
        }
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Names of every variable that occurs, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(v.clone()),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Symbolic partial derivative with respect to `var`, lightly simplified.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => -a.diff(var),
            Expr::Add(a, b) => a.diff(var) + b.diff(var),
            Expr::Sub(a, b) => a.diff(var) - b.diff(var),
            Expr::Mul(a, b) => a.diff(var) * (**b).clone() + (**a).clone() * b.diff(var),
            Expr::Div(a, b) => {
                let num = a.diff(var) * (**b).clone() - (**a).clone() * b.diff(var);
                num / (**b).clone().powi(2)
            }
            Expr::Pow(a, n) => Expr::int(*n as i64) * (**a).clone().powi(n - 1) * a.diff(var),
            Expr::Call(f, a) => {
                let inner = a.diff(var);
                if inner.is_zero() {
                    return Expr::zero();
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sqrt => Expr::rational(1, 2) / a.sqrt(),
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => -Expr::call(Func::Sin, a),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Log => Expr::one() / a,
                };
                outer * inner
            }
        }
    }

    /// Replace variables by expressions.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => -a.substitute(map),
            Expr::Add(a, b) => a.substitute(map) + b.substitute(map),
            Expr::Sub(a, b) => a.substitute(map) - b.substitute(map),
            Expr::Mul(a, b) => a.substitute(map) * b.substitute(map),
            Expr::Div(a, b) => a.substitute(map) / b.substitute(map),
            Expr::Pow(a, n) => a.substitute(map).powi(*n),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(map)),
        }
    }

    /// Exact evaluation over the rationals.
    ///
    /// Returns `None` when a transcendental function or a division by zero is
    /// met, or when a variable is missing from `env`.
    pub fn eval_exact(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        Some(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(v) => env(v)?,
            Expr::Neg(a) => -a.eval_exact(env)?,
            Expr::Add(a, b) => a.eval_exact(env)? + b.eval_exact(env)?,
            Expr::Sub(a, b) => a.eval_exact(env)? - b.eval_exact(env)?,
            Expr::Mul(a, b) => a.eval_exact(env)? * b.eval_exact(env)?,
            Expr::Div(a, b) => {
                let d = b.eval_exact(env)?;
                if d.is_zero() {
                    return None;
                }
                a.eval_exact(env)? / d
            }
            Expr::Pow(a, n) => {
                let base = a.eval_exact(env)?;
                if base.is_zero() && *n < 0 {
                    return None;
                }
                pow_rational(&base, *n)
            }
            Expr::Call(..) => return None,
        })
    }
}

pub(crate) fn pow_rational(c: &BigRational, n: i32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n.unsigned_abs() {
        acc *= c;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

pub(crate) fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        // Ratios of huge integers: divide as floats after scaling down.
        let n = c.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = c.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b,
            (a, Expr::Neg(b)) => Expr::Sub(Box::new(a), b),
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (Expr::Const(c), b) if c == -BigRational::one() => -b,
            (a, Expr::Const(c)) if c == -BigRational::one() => -a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) if !b.is_zero() => Expr::Const(a / b),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::zero(),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::to_canonical_string(self))
    }
}

pub(crate) fn is_negative_const(c: &BigRational) -> bool {
    c.is_negative()
}
