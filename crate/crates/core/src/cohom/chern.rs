use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::complex::{H2Basis, SimplicialComplex};
use super::{small, CochainClass, CohomError};
use crate::lattice::{format_rational, parse_rational};

/// Lifts to `𝔤 = ℝ^k` of the transition maps of a principal torus bundle on
/// the cover whose nerve is `nerve`.
///
/// Transition maps are functions on overlaps, so a lift may differ between
/// the triple overlaps an edge belongs to; `triangle_lifts` overrides the
/// edge lift on a given triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct CechCocycle {
    pub nerve: SimplicialComplex,
    pub rank: usize,
    pub lifts: BTreeMap<(i64, i64), Vec<BigRational>>,
    pub triangle_lifts: BTreeMap<(Vec<i64>, (i64, i64)), Vec<BigRational>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeLift {
    pub edge: (i64, i64),
    pub value: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleLift {
    pub triangle: Vec<i64>,
    pub edge: (i64, i64),
    pub value: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleSpec {
    pub simplices: Vec<Vec<i64>>,
    pub rank: usize,
    #[serde(default)]
    pub lifts: Vec<EdgeLift>,
    #[serde(default)]
    pub triangle_lifts: Vec<TriangleLift>,
}

fn parse_vec(v: &[String], rank: usize) -> Result<Vec<BigRational>, CohomError> {
    if v.len() != rank {
        return Err(CohomError::InvalidCocycle(format!("lift {v:?} does not have {rank} components")));
    }
    v.iter().map(|s| parse_rational(s).map_err(|e| CohomError::InvalidCocycle(e.to_string()))).collect()
}

fn neg(v: &[BigRational]) -> Vec<BigRational> {
    v.iter().map(|x| -x).collect()
}

impl CechCocycle {
    pub fn new(nerve: SimplicialComplex, rank: usize) -> CechCocycle {
        CechCocycle { nerve, rank, lifts: BTreeMap::new(), triangle_lifts: BTreeMap::new() }
    }

    /// Set `lift(i, j)`; `lift(j, i)` is its negative.
    pub fn set(&mut self, i: i64, j: i64, value: Vec<BigRational>) {
        if i < j {
            self.lifts.insert((i, j), value);
        } else {
            self.lifts.insert((j, i), neg(&value));
        }
    }

    pub fn set_on_triangle(&mut self, triangle: &[i64], i: i64, j: i64, value: Vec<BigRational>) {
        let mut t = triangle.to_vec();
        t.sort_unstable();
        if i < j {
            self.triangle_lifts.insert((t, (i, j)), value);
        } else {
            self.triangle_lifts.insert((t, (j, i)), neg(&value));
        }
    }

    pub fn from_spec(spec: &CocycleSpec) -> Result<CechCocycle, CohomError> {
        let mut c = CechCocycle::new(SimplicialComplex::new(&spec.simplices)?, spec.rank);
        let mut seen = BTreeMap::new();
        for l in &spec.lifts {
            let v = parse_vec(&l.value, spec.rank)?;
            let (key, oriented) = if l.edge.0 < l.edge.1 { (l.edge, v.clone()) } else { ((l.edge.1, l.edge.0), neg(&v)) };
            if let Some(prev) = seen.insert(key, oriented.clone()) {
                if prev != oriented {
                    return Err(CohomError::InvalidCocycle(format!("lifts on {:?} are not antisymmetric", l.edge)));
                }
            }
            c.set(l.edge.0, l.edge.1, v);
        }
        for l in &spec.triangle_lifts {
            c.set_on_triangle(&l.triangle, l.edge.0, l.edge.1, parse_vec(&l.value, spec.rank)?);
        }
        Ok(c)
    }

    pub fn spec(&self) -> CocycleSpec {
        let fmt = |v: &[BigRational]| v.iter().map(format_rational).collect();
        CocycleSpec {
            simplices: self.nerve.spec().simplices,
            rank: self.rank,
            lifts: self.lifts.iter().map(|(e, v)| EdgeLift { edge: *e, value: fmt(v) }).collect(),
            triangle_lifts: self
                .triangle_lifts
                .iter()
                .map(|((t, e), v)| TriangleLift { triangle: t.clone(), edge: *e, value: fmt(v) })
                .collect(),
        }
    }

    fn lift_on(&self, t: &[i64], i: i64, j: i64) -> Result<Vec<BigRational>, CohomError> {
        if let Some(v) = self.triangle_lifts.get(&(t.to_vec(), (i, j))) {
            return Ok(v.clone());
        }
        self.lifts.get(&(i, j)).cloned().ok_or(CohomError::MissingLift { edge: (i, j) })
    }

    /// `(δ lift)(i,j,k) = lift(j,k) − lift(i,k) + lift(i,j)` on every triangle.
    pub fn coboundary(&self) -> Result<Vec<Vec<BigRational>>, CohomError> {
        let mut out = Vec::new();
        for t in self.nerve.simplices(2) {
            let (i, j, k) = (t[0], t[1], t[2]);
            let (a, b, c) = (self.lift_on(t, j, k)?, self.lift_on(t, i, k)?, self.lift_on(t, i, j)?);
            let v: Vec<BigRational> = (0..self.rank).map(|s| &a[s] - &b[s] + &c[s]).collect();
            if let Some(bad) = v.iter().find(|x| !x.is_integer()) {
                return Err(CohomError::NonIntegralCoboundary {
                    triangle: t.clone(),
                    value: format_rational(bad),
                });
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// First Chern class in `H²(nerve; ℤ^k)`.
pub fn chern_class(c: &CechCocycle) -> Result<CochainClass, CohomError> {
    let values = c.coboundary()?;
    let basis = H2Basis::new(&c.nerve);
    let mut free = Vec::new();
    let mut torsion = Vec::new();
    let mut real = Vec::new();
    for s in 0..c.rank {
        let col: Vec<BigInt> = values.iter().map(|v| v[s].to_integer()).collect();
        if !basis.is_cocycle(&col) {
            return Err(CohomError::InvalidCocycle("lifts are inconsistent on a tetrahedron".into()));
        }
        let (f, t) = basis.coordinates(&col);
        for x in &f {
            free.push(small(x)?);
            real.push(x.to_f64().unwrap_or(f64::NAN));
        }
        for (d, x) in &t {
            torsion.push((small(d)?, small(x)?));
        }
    }
    Ok(CochainClass {
        basis: format!("{} k={}", basis.signature, c.rank),
        free_part: free,
        torsion_part: torsion,
        real_part: real,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn zero_lifts(k: &SimplicialComplex, rank: usize) -> CechCocycle {
        let mut c = CechCocycle::new(k.clone(), rank);
        for e in k.simplices(1) {
            c.set(e[0], e[1], vec![q(0, 1); rank]);
        }
        c
    }

    #[test]
    fn trivial_bundle() {
        let c = zero_lifts(&fixtures::octahedron(), 2);
        let cls = chern_class(&c).unwrap();
        assert_eq!(cls.free_part, vec![0, 0]);
        assert!(cls.torsion_part.is_empty());
    }

    #[test]
    fn unit_winding() {
        let mut c = zero_lifts(&fixtures::octahedron(), 2);
        c.set_on_triangle(&[0, 1, 2], 0, 1, vec![q(1, 1), q(0, 1)]);
        assert_eq!(chern_class(&c).unwrap().free_part, vec![1, 0]);
    }

    #[test]
    fn half_integral_coboundary() {
        let mut c = zero_lifts(&fixtures::octahedron(), 2);
        c.set_on_triangle(&[0, 1, 2], 1, 2, vec![q(1, 2), q(0, 1)]);
        assert!(matches!(chern_class(&c), Err(CohomError::NonIntegralCoboundary { .. })));
    }

    #[test]
    fn missing_lift() {
        let c = CechCocycle::new(fixtures::octahedron(), 1);
        assert!(matches!(chern_class(&c), Err(CohomError::MissingLift { .. })));
    }

    #[test]
    fn projective_plane_torsion_class() {
        let k = fixtures::projective_plane();
        let mut c = zero_lifts(&k, 1);
        c.set_on_triangle(&[1, 2, 4], 1, 2, vec![q(1, 1)]);
        let cls = chern_class(&c).unwrap();
        assert!(cls.free_part.is_empty());
        assert_eq!(cls.torsion_part, vec![(2, 1)]);
        // Shifting one edge lift by an integer changes δ lift by a coboundary.
        c.set(3, 5, vec![q(4, 1)]);
        assert_eq!(chern_class(&c).unwrap().torsion_part, vec![(2, 1)]);
    }

    #[test]
    fn spec_round_trip() {
        let mut c = zero_lifts(&fixtures::octahedron(), 2);
        c.set_on_triangle(&[0, 1, 2], 0, 1, vec![q(1, 1), q(-1, 3)]);
        let back = CechCocycle::from_spec(&c.spec()).unwrap();
        assert_eq!(back, c);
    }
}
