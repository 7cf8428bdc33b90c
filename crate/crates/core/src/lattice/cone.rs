use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{format_rational, is_primitive, is_unimodular_basis, parse_rational, LatticeError, LatticeMatrix};

/// `{η : ⟨η − ε, v_i⟩ ≥ 0 for all i}` with inward normals `v_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeSpec", into = "ConeSpec")]
pub struct UnimodularCone {
    pub normals: LatticeMatrix,
    pub apex: Vec<BigRational>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConeSpec {
    normals: Vec<Vec<i64>>,
    apex: Vec<String>,
}

impl TryFrom<ConeSpec> for UnimodularCone {
    type Error = LatticeError;
    fn try_from(s: ConeSpec) -> Result<Self, LatticeError> {
        let apex = s.apex.iter().map(|a| parse_rational(a)).collect::<Result<Vec<_>, _>>()?;
        let normals = LatticeMatrix::from_rows(s.normals, apex.len())?;
        Ok(UnimodularCone { normals, apex })
    }
}

impl From<UnimodularCone> for ConeSpec {
    fn from(c: UnimodularCone) -> Self {
        ConeSpec { normals: c.normals.into(), apex: c.apex.iter().map(format_rational).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub member: bool,
    /// Indices of the normals whose facet contains the point.
    pub facets: Vec<usize>,
}

impl UnimodularCone {
    pub fn new(normals: LatticeMatrix, apex: Vec<BigRational>) -> Result<UnimodularCone, LatticeError> {
        if normals.ncols() != apex.len() {
            return Err(LatticeError::DimensionMismatch { expected: apex.len(), got: normals.ncols() });
        }
        Ok(UnimodularCone { normals, apex })
    }

    /// Cone with integer normals and apex at the origin.
    pub fn at_origin(normals: &[&[i64]], n: usize) -> Result<UnimodularCone, LatticeError> {
        let m = LatticeMatrix::from_rows(normals.iter().map(|r| r.to_vec()).collect(), n)?;
        UnimodularCone::new(m, vec![BigRational::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.apex.len()
    }

    /// Every normal primitive and the normals a unimodular basis.
    pub fn check(&self) -> Result<(), String> {
        for i in 0..self.normals.nrows() {
            match is_primitive(self.normals.row(i)) {
                Ok(true) => {}
                Ok(false) => return Err(format!("normal {i} is not primitive")),
                Err(e) => return Err(format!("normal {i}: {e}")),
            }
        }
        match is_unimodular_basis(&self.normals) {
            Ok(true) => Ok(()),
            Ok(false) => Err("normals are not a unimodular basis".into()),
            Err(e) => Err(e.to_string()),
        }
    }

    /// Exact pairings `⟨η − ε, v_i⟩`.
    pub fn pairings(&self, eta: &[BigRational]) -> Result<Vec<BigRational>, LatticeError> {
        if eta.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch { expected: self.dim(), got: eta.len() });
        }
        Ok((0..self.normals.nrows())
            .map(|i| {
                self.normals
                    .row(i)
                    .iter()
                    .zip(eta.iter().zip(&self.apex))
                    .fold(BigRational::zero(), |acc, (v, (e, a))| acc + (e - a) * BigRational::from(v.clone()))
            })
            .collect())
    }

    /// Floating-point pairings, for chart images that are not exact.
    pub fn pairings_f64(&self, eta: &[f64]) -> Result<Vec<f64>, LatticeError> {
        if eta.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch { expected: self.dim(), got: eta.len() });
        }
        let apex = self.apex_f64();
        Ok((0..self.normals.nrows())
            .map(|i| {
                let v = self.normals.row_f64(i);
                v.iter().zip(eta.iter().zip(&apex)).map(|(v, (e, a))| v * (e - a)).sum()
            })
            .collect())
    }

    pub fn apex_f64(&self) -> Vec<f64> {
        self.apex.iter().map(crate::expr::rational_to_f64).collect()
    }

    pub fn normal(&self, i: usize) -> &[BigInt] {
        self.normals.row(i)
    }
}

pub fn cone_contains(c: &UnimodularCone, eta: &[BigRational]) -> Result<ConeMembership, LatticeError> {
    let p = c.pairings(eta)?;
    Ok(ConeMembership {
        member: p.iter().all(|x| !x.is_negative()),
        facets: p.iter().enumerate().filter(|(_, x)| x.is_zero()).map(|(i, _)| i).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
    }

    #[test]
    fn quadrant_membership() {
        let c = UnimodularCone::at_origin(&[&[1, 0], &[0, 1]], 2).unwrap();
        assert_eq!(cone_contains(&c, &q(&[0, 3])).unwrap(), ConeMembership { member: true, facets: vec![0] });
        assert_eq!(cone_contains(&c, &q(&[0, 0])).unwrap(), ConeMembership { member: true, facets: vec![0, 1] });
        assert!(!cone_contains(&c, &q(&[-1, 1])).unwrap().member);
        assert!(matches!(cone_contains(&c, &q(&[1])), Err(LatticeError::DimensionMismatch { .. })));
    }

    #[test]
    fn shifted_apex_is_exact() {
        let c = UnimodularCone::new(
            LatticeMatrix::from_rows(vec![vec![1, 1]], 2).unwrap(),
            vec![parse_rational("1/3").unwrap(), parse_rational("0").unwrap()],
        )
        .unwrap();
        let eta = vec![parse_rational("1/6").unwrap(), parse_rational("1/6").unwrap()];
        assert_eq!(cone_contains(&c, &eta).unwrap().facets, vec![0]);
    }

    #[test]
    fn cone_json() {
        let c: UnimodularCone = serde_json::from_str(r#"{"normals": [[1,0]], "apex": ["1/2", "0"]}"#).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.check().is_ok());
        let bad: UnimodularCone = serde_json::from_str(r#"{"normals": [[2,0]], "apex": ["0", "0"]}"#).unwrap();
        assert!(bad.check().is_err());
    }
}
