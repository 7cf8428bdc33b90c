use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::CohomError;
use crate::lattice::{smith_normal_form, LatticeMatrix};

pub const MAX_DIM: usize = 3;

/// A finite simplicial complex of dimension at most 3, closed under faces.
/// Simplices are sorted vertex tuples, oriented by vertex order.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Vec<i64>>>,
    index: Vec<BTreeMap<Vec<i64>, usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub simplices: Vec<Vec<i64>>,
}

impl SimplicialComplex {
    pub fn new(simplices: &[Vec<i64>]) -> Result<SimplicialComplex, CohomError> {
        let mut by_dim: Vec<std::collections::BTreeSet<Vec<i64>>> = vec![Default::default(); MAX_DIM + 1];
        for s in simplices {
            let mut s = s.clone();
            s.sort_unstable();
            if s.is_empty() {
                return Err(CohomError::InvalidComplex("empty simplex".into()));
            }
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(CohomError::InvalidComplex(format!("repeated vertex in {s:?}")));
            }
            if s.len() > MAX_DIM + 1 {
                return Err(CohomError::InvalidComplex(format!("{s:?} has dimension above {MAX_DIM}")));
            }
            let k = s.len();
            for mask in 1u32..(1 << k) {
                let face: Vec<i64> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect();
                by_dim[face.len() - 1].insert(face);
            }
        }
        let simplices: Vec<Vec<Vec<i64>>> = by_dim.into_iter().map(|s| s.into_iter().collect()).collect();
        let index = simplices
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(SimplicialComplex { simplices, index })
    }

    pub fn from_spec(spec: &ComplexSpec) -> Result<SimplicialComplex, CohomError> {
        SimplicialComplex::new(&spec.simplices)
    }

    /// Maximal simplices only.
    pub fn spec(&self) -> ComplexSpec {
        let mut out = Vec::new();
        for d in 0..=MAX_DIM {
            for s in &self.simplices[d] {
                let covered = self.simplices.get(d + 1).map_or(false, |up| {
                    up.iter().any(|t| s.iter().all(|v| t.binary_search(v).is_ok()))
                });
                if !covered {
                    out.push(s.clone());
                }
            }
        }
        ComplexSpec { simplices: out }
    }

    pub fn simplices(&self, dim: usize) -> &[Vec<i64>] {
        self.simplices.get(dim).map_or(&[], |s| s.as_slice())
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices(dim).len()
    }

    pub fn index_of(&self, simplex: &[i64]) -> Option<usize> {
        let mut s = simplex.to_vec();
        s.sort_unstable();
        self.index.get(s.len().wrapping_sub(1))?.get(&s).copied()
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=MAX_DIM).map(|d| if d % 2 == 0 { 1 } else { -1 } * self.count(d) as i64).sum()
    }

    /// Matrix of `δ: C^k → C^{k+1}`, `(δc)(s) = Σ_i (-1)^i c(s without vertex i)`.
    pub fn coboundary(&self, k: usize) -> LatticeMatrix {
        let rows = self.simplices(k + 1);
        let n = self.count(k);
        let mut m = vec![vec![BigInt::zero(); n]; rows.len()];
        for (r, s) in rows.iter().enumerate() {
            for i in 0..s.len() {
                let mut face = s.clone();
                face.remove(i);
                let c = self.index[k][&face];
                m[r][c] += if i % 2 == 0 { 1 } else { -1 };
            }
        }
        LatticeMatrix::from_big_rows(m, n).expect("rectangular")
    }

    /// Short label identifying the simplex counts, used to detect classes
    /// computed over different complexes.
    pub fn signature(&self) -> String {
        format!("f=({},{},{},{})", self.count(0), self.count(1), self.count(2), self.count(3))
    }
}

/// `H²` of a complex with coefficients `ℤ^k` and, optionally, `ℝ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Group {
    pub coefficient_rank: usize,
    pub free_rank: usize,
    /// Orders of the cyclic torsion summands, each repeated `k` times.
    pub torsion: Vec<i64>,
    pub real_rank: Option<usize>,
}

/// Integer data for reading off coordinates of 2-cocycles.
///
/// With `U δ¹ V = D` the torsion coordinates are `(U c)_i mod d_i` for
/// `d_i > 1`. The free coordinates pair `c` with integral 2-cycles, sign
/// normalised so each cycle's first nonzero entry is positive.
#[derive(Clone, Debug)]
pub struct H2Basis {
    pub signature: String,
    u: LatticeMatrix,
    orders: Vec<BigInt>,
    cycles: LatticeMatrix,
    delta2: LatticeMatrix,
}

impl H2Basis {
    pub fn new(k: &SimplicialComplex) -> H2Basis {
        let d1 = k.coboundary(1);
        let d2 = k.coboundary(2);
        let n2 = k.count(2);
        let snf = smith_normal_form(&d1);
        let r = snf.rank();
        let orders: Vec<BigInt> = snf.diagonal[..r].to_vec();
        // δ² vanishes on the first r columns of U⁻¹ (they span ℚ ⊗ im δ¹), so
        // the cocycle condition constrains only the tail coordinates.
        let tail: Vec<usize> = (r..n2).collect();
        let u_inv_tail = snf.u_inv.transpose().select_rows(&tail).transpose();
        let q = d2.mul(&u_inv_tail);
        let q_snf = smith_normal_form(&q);
        let rq = q_snf.rank();
        let keep: Vec<usize> = (rq..tail.len()).collect();
        let u_tail = snf.u.select_rows(&tail);
        let cycles = q_snf.v_inv.select_rows(&keep).mul(&u_tail);
        let rows = cycles
            .rows()
            .iter()
            .map(|row| match row.iter().find(|x| !x.is_zero()) {
                Some(x) if x.is_negative() => row.iter().map(|v| -v).collect(),
                _ => row.clone(),
            })
            .collect();
        H2Basis {
            signature: k.signature(),
            u: snf.u,
            orders,
            cycles: LatticeMatrix::from_big_rows(rows, n2).expect("rectangular"),
            delta2: d2,
        }
    }

    pub fn free_rank(&self) -> usize {
        self.cycles.nrows()
    }

    pub fn torsion_orders(&self) -> Vec<BigInt> {
        self.orders.iter().filter(|d| *d > &BigInt::from(1)).cloned().collect()
    }

    /// Integral 2-cycles dual to the free coordinates (rows).
    pub fn cycles(&self) -> &LatticeMatrix {
        &self.cycles
    }

    pub fn is_cocycle(&self, c: &[BigInt]) -> bool {
        mat_vec(&self.delta2, c).iter().all(|x| x.is_zero())
    }

    /// `(free coordinates, [(order, coordinate)])` of an integral 2-cocycle.
    pub fn coordinates(&self, c: &[BigInt]) -> (Vec<BigInt>, Vec<(BigInt, BigInt)>) {
        let free = mat_vec(&self.cycles, c);
        let y = mat_vec(&self.u, c);
        let torsion = self
            .orders
            .iter()
            .zip(&y)
            .filter(|(d, _)| *d > &BigInt::from(1))
            .map(|(d, yi)| (d.clone(), yi.mod_floor(d)))
            .collect();
        (free, torsion)
    }

    /// Coordinates of a real 2-cocycle in `H²(K; ℝ)`.
    pub fn real_coordinates(&self, c: &[f64]) -> Vec<f64> {
        self.cycles
            .rows()
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, x)| a.to_f64().unwrap_or(f64::NAN) * x).sum())
            .collect()
    }
}

pub(crate) fn mat_vec(m: &LatticeMatrix, c: &[BigInt]) -> Vec<BigInt> {
    m.rows().iter().map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect()
}

pub fn h2(k: &SimplicialComplex, coefficient_rank: usize, real: bool) -> H2Group {
    let basis = H2Basis::new(k);
    let torsion: Vec<i64> = basis
        .torsion_orders()
        .iter()
        .flat_map(|d| std::iter::repeat(d.to_i64().unwrap_or(i64::MAX)).take(coefficient_rank))
        .collect();
    H2Group {
        coefficient_rank,
        free_rank: basis.free_rank() * coefficient_rank,
        torsion,
        real_rank: real.then(|| basis.free_rank()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn faces_are_closed() {
        let k = SimplicialComplex::new(&[vec![2, 0, 1]]).unwrap();
        assert_eq!((k.count(0), k.count(1), k.count(2)), (3, 3, 1));
        assert_eq!(k.euler_characteristic(), 1);
        assert!(SimplicialComplex::new(&[vec![1, 1, 2]]).is_err());
        assert!(SimplicialComplex::new(&[vec![0, 1, 2, 3, 4]]).is_err());
        assert_eq!(k.spec().simplices, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn coboundary_squares_to_zero() {
        let k = SimplicialComplex::new(&[vec![0, 1, 2, 3], vec![2, 3, 4]]).unwrap();
        for d in 0..2 {
            let dd = k.coboundary(d + 1).mul(&k.coboundary(d));
            assert!(dd.rows().iter().flatten().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn octahedron() {
        let g = h2(&fixtures::octahedron(), 2, true);
        assert_eq!((g.free_rank, g.torsion.len(), g.real_rank), (2, 0, Some(1)));
    }

    #[test]
    fn simplex_is_acyclic() {
        let k = SimplicialComplex::new(&[vec![0, 1, 2]]).unwrap();
        let g = h2(&k, 1, true);
        assert_eq!((g.free_rank, g.torsion.len(), g.real_rank), (0, 0, Some(0)));
        let k = SimplicialComplex::new(&[vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(h2(&k, 3, false).free_rank, 0);
    }

    #[test]
    fn projective_plane() {
        let g = h2(&fixtures::projective_plane(), 1, true);
        assert_eq!(g.free_rank, 0);
        assert_eq!(g.torsion, vec![2]);
        assert_eq!(g.real_rank, Some(0));
        assert_eq!(h2(&fixtures::projective_plane(), 2, false).torsion.len(), 2);
    }

    #[test]
    fn torus() {
        let t = fixtures::torus();
        assert_eq!(t.euler_characteristic(), 0);
        let g = h2(&t, 1, true);
        assert_eq!((g.free_rank, g.torsion.len(), g.real_rank), (1, 0, Some(1)));
    }

    // On an oriented closed surface the free coordinate is the sum of the
    // cochain over consistently oriented triangles.
    #[test]
    fn octahedron_coordinate_is_degree() {
        let k = fixtures::octahedron();
        let b = H2Basis::new(&k);
        let oriented = [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1], [5, 2, 1], [5, 3, 2], [5, 4, 3], [5, 1, 4]];
        let sign = |t: &[i64; 3]| {
            let inv = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| t[i] > t[j]).count();
            if inv % 2 == 0 { 1 } else { -1 }
        };
        let c: Vec<BigInt> = (0..8).map(|i| BigInt::from(i * 3 - 7)).collect();
        let mut expect = BigInt::zero();
        for t in &oriented {
            let idx = k.index_of(t).unwrap();
            expect += &c[idx] * sign(t);
        }
        assert_eq!(b.coordinates(&c).0, vec![expect]);
    }
}
