//! Exact integer-lattice algebra: primitivity, unimodular bases and their
//! completion, unimodular cones, and folded templates with the attach
//! procedure that assigns a stabilizer subtorus to each point.

mod cone;
mod matrix;
mod template;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use cone::{cone_contains, ConeMembership, UnimodularCone};
pub use matrix::{smith_normal_form, LatticeMatrix, SmithForm};
pub use template::{
    attach, attach_in, validate_template, AttachResult, FoldWall, FoldedTemplate, Region, TemplateCheck,
    TemplateFailure, TemplateReport, TemplateSpec, WallFold, FACET_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("zero vector")]
    ZeroVector,
    #[error("rows are linearly dependent over Q (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("rows do not form a Z-basis of a saturated sublattice")]
    NotUnimodular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies in no region of the template")]
    PointOutsideTemplate(Vec<f64>),
    #[error("inconsistent template at wall {wall}: region {region_a} gives {normals_a}, region {region_b} gives {normals_b}")]
    InconsistentTemplate { wall: usize, region_a: i64, normals_a: String, region_b: i64, normals_b: String },
    #[error("chart image {image:?} of region {region} lies outside its cone")]
    ImageOutsideCone { region: i64, image: Vec<f64> },
    #[error("invalid rational `{0}`")]
    InvalidRational(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

/// `gcd(|v_1|, …, |v_n|) = 1`.
pub fn is_primitive(v: &[BigInt]) -> Result<bool, LatticeError> {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    Ok(g.is_one())
}

pub fn is_primitive_i64(v: &[i64]) -> Result<bool, LatticeError> {
    is_primitive(&v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
}

/// True iff the rows of `b` are a ℤ-basis of the integral points of the
/// subspace they span, i.e. the Smith normal form of `b` is `[I_k | 0]`.
pub fn is_unimodular_basis(b: &LatticeMatrix) -> Result<bool, LatticeError> {
    let snf = smith_normal_form(b);
    let rank = snf.rank();
    if rank < b.nrows() {
        return Err(LatticeError::RankDeficient { rank, rows: b.nrows() });
    }
    Ok(snf.diagonal.iter().all(|d| d.is_one()))
}

/// Complete a unimodular `k × n` basis to an `n × n` matrix of determinant
/// `±1` whose first `k` rows are `b`.
pub fn extend_to_basis(b: &LatticeMatrix) -> Result<LatticeMatrix, LatticeError> {
    match is_unimodular_basis(b) {
        Ok(true) => {}
        Ok(false) | Err(LatticeError::RankDeficient { .. }) => return Err(LatticeError::NotUnimodular),
        Err(e) => return Err(e),
    }
    let (k, n) = (b.nrows(), b.ncols());
    // U B V = [I | 0] gives B = U⁻¹ [I | 0] V⁻¹, so the last n - k rows of V⁻¹
    // complete B and the result is diag(U⁻¹, I) V⁻¹.
    let snf = smith_normal_form(b);
    let mut rows: Vec<Vec<BigInt>> = b.rows().to_vec();
    rows.extend((k..n).map(|i| snf.v_inv.row(i).to_vec()));
    LatticeMatrix::from_big_rows(rows, n)
}

/// Inverse of an integer matrix with determinant `±1`.
pub fn unimodular_inverse(m: &LatticeMatrix) -> Result<LatticeMatrix, LatticeError> {
    let n = m.ncols();
    if m.nrows() != n {
        return Err(LatticeError::DimensionMismatch { expected: n, got: m.nrows() });
    }
    let snf = smith_normal_form(m);
    if !snf.diagonal.iter().all(|d| d.is_one()) {
        return Err(LatticeError::NotUnimodular);
    }
    // U M V = I, so M⁻¹ = V U.
    Ok(snf.v.mul(&snf.u))
}

/// Parse `"p/q"`, `"p"` or a finite decimal such as `"-0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, LatticeError> {
    let err = || LatticeError::InvalidRational(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("{}{}", if int.is_empty() { "0" } else { int }, frac).parse().map_err(|_| err())?;
    let r = BigRational::new(digits, num_traits::pow(BigInt::from(10), frac.len()));
    Ok(if neg { -r } else { r })
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn lm(rows: &[&[i64]]) -> LatticeMatrix {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        LatticeMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect(), n).unwrap()
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive_i64(&[1, 2]).unwrap());
        assert!(!is_primitive_i64(&[2, 4]).unwrap());
        assert!(is_primitive_i64(&[0, 0, -1]).unwrap());
        assert_eq!(is_primitive_i64(&[0, 0]), Err(LatticeError::ZeroVector));
    }

    #[test]
    fn unimodular_examples() {
        assert!(is_unimodular_basis(&lm(&[&[1, 0, 0], &[0, 1, 0]])).unwrap());
        assert!(!is_unimodular_basis(&lm(&[&[2, 0], &[0, 1]])).unwrap());
        assert!(is_unimodular_basis(&lm(&[&[1, 1], &[1, 2]])).unwrap());
        assert!(matches!(
            is_unimodular_basis(&lm(&[&[1, 2], &[2, 4]])),
            Err(LatticeError::RankDeficient { rank: 1, rows: 2 })
        ));
    }

    #[test]
    fn extension_examples() {
        let e = extend_to_basis(&lm(&[&[1, 0]])).unwrap();
        assert_eq!(e.row(0), lm(&[&[1, 0]]).row(0));
        assert_eq!(e.det().abs(), BigInt::one());
        let e = extend_to_basis(&lm(&[&[1, 1]])).unwrap();
        assert_eq!(e.row(0), lm(&[&[1, 1]]).row(0));
        assert_eq!(e.det().abs(), BigInt::one());
        assert_eq!(extend_to_basis(&lm(&[&[2, 0]])), Err(LatticeError::NotUnimodular));
    }

    #[test]
    fn inverse_of_unimodular() {
        let m = lm(&[&[1, 1], &[1, 2]]);
        assert_eq!(m.mul(&unimodular_inverse(&m).unwrap()), LatticeMatrix::identity(2));
        assert_eq!(unimodular_inverse(&lm(&[&[2, 0], &[0, 1]])), Err(LatticeError::NotUnimodular));
    }

    #[test]
    fn rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("3/6").unwrap(), r(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), r(-4, 1));
        assert_eq!(parse_rational("-0.25").unwrap(), r(-1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&r(-1, 4)), "-1/4");
    }
}
