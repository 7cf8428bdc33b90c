use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::LatticeError;

/// Integer matrix whose rows are lattice vectors in `ℤⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct LatticeMatrix {
    rows: Vec<Vec<BigInt>>,
    n: usize,
}

impl TryFrom<Vec<Vec<i64>>> for LatticeMatrix {
    type Error = LatticeError;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        LatticeMatrix::from_rows(rows, n)
    }
}

impl From<LatticeMatrix> for Vec<Vec<i64>> {
    fn from(m: LatticeMatrix) -> Self {
        m.rows
            .iter()
            .map(|r| r.iter().map(|x| i64::try_from(x).expect("entry fits in i64")).collect())
            .collect()
    }
}

impl LatticeMatrix {
    /// Rows of length `n`; `n` must be given explicitly so that an empty
    /// matrix still knows its ambient rank.
    pub fn from_rows(rows: Vec<Vec<i64>>, n: usize) -> Result<LatticeMatrix, LatticeError> {
        let big = rows.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect();
        LatticeMatrix::from_big_rows(big, n)
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, n: usize) -> Result<LatticeMatrix, LatticeError> {
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(LatticeError::DimensionMismatch { expected: n, got: r.len() });
        }
        Ok(LatticeMatrix { rows, n })
    }

    pub fn empty(n: usize) -> LatticeMatrix {
        LatticeMatrix { rows: Vec::new(), n }
    }

    pub fn identity(n: usize) -> LatticeMatrix {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        LatticeMatrix { rows, n }
    }

    pub fn zeros(m: usize, n: usize) -> LatticeMatrix {
        LatticeMatrix { rows: vec![vec![BigInt::zero(); n]; m], n }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Ambient rank `n`.
    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.rows[i].iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> LatticeMatrix {
        LatticeMatrix { rows: idx.iter().map(|&i| self.rows[i].clone()).collect(), n: self.n }
    }

    pub fn transpose(&self) -> LatticeMatrix {
        let m = self.nrows();
        let rows = (0..self.n).map(|j| (0..m).map(|i| self.rows[i][j].clone()).collect()).collect();
        LatticeMatrix { rows, n: m }
    }

    pub fn mul(&self, other: &LatticeMatrix) -> LatticeMatrix {
        assert_eq!(self.n, other.nrows(), "inner dimensions agree");
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..other.n)
                    .map(|j| r.iter().enumerate().fold(BigInt::zero(), |acc, (k, a)| acc + a * &other.rows[k][j]))
                    .collect()
            })
            .collect();
        LatticeMatrix { rows, n: other.n }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.nrows();
        assert_eq!(n, self.n, "determinant of a square matrix");
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.rows.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        self.rows.swap(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for r in &mut self.rows {
            r.swap(i, j);
        }
    }

    /// row_i += q * row_t
    fn add_row(&mut self, i: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        let src = self.rows[t].clone();
        for (x, s) in self.rows[i].iter_mut().zip(src) {
            *x += q * s;
        }
    }

    /// col_j += q * col_t
    fn add_col(&mut self, j: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in &mut self.rows {
            let s = r[t].clone();
            r[j] += q * s;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in &mut self.rows[i] {
            *x = -x.clone();
        }
    }

    fn negate_col(&mut self, j: usize) {
        for r in &mut self.rows {
            r[j] = -r[j].clone();
        }
    }
}

impl fmt::Display for LatticeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| format!("({})", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// `U · A · V = D` with `U`, `V` unimodular and `D` diagonal with
/// `d_1 | d_2 | …`, all `d_i ≥ 0`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub u: LatticeMatrix,
    pub u_inv: LatticeMatrix,
    pub v: LatticeMatrix,
    pub v_inv: LatticeMatrix,
}

impl SmithForm {
    /// Number of nonzero invariant factors, i.e. the rank over ℚ.
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }
}

pub fn smith_normal_form(a: &LatticeMatrix) -> SmithForm {
    let (m, n) = (a.nrows(), a.ncols());
    let mut d = a.clone();
    let mut u = LatticeMatrix::identity(m);
    let mut u_inv = LatticeMatrix::identity(m);
    let mut v = LatticeMatrix::identity(n);
    let mut v_inv = LatticeMatrix::identity(n);

    // Row op on D mirrored into U (left) and U⁻¹ (right, inverse op).
    macro_rules! row_add {
        ($i:expr, $t:expr, $q:expr) => {{
            let q: BigInt = $q;
            d.add_row($i, $t, &q);
            u.add_row($i, $t, &q);
            u_inv.add_col($t, $i, &(-q));
        }};
    }
    macro_rules! col_add {
        ($j:expr, $t:expr, $q:expr) => {{
            let q: BigInt = $q;
            d.add_col($j, $t, &q);
            v.add_col($j, $t, &q);
            v_inv.add_row($t, $j, &(-q));
        }};
    }
    macro_rules! row_swap {
        ($i:expr, $j:expr) => {{
            d.swap_rows($i, $j);
            u.swap_rows($i, $j);
            u_inv.swap_cols($i, $j);
        }};
    }
    macro_rules! col_swap {
        ($i:expr, $j:expr) => {{
            d.swap_cols($i, $j);
            v.swap_cols($i, $j);
            v_inv.swap_rows($i, $j);
        }};
    }

    for t in 0..m.min(n) {
        // Smallest nonzero entry of the trailing block becomes the pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let x = d.get(i, j);
                if !x.is_zero() && best.map_or(true, |(bi, bj)| x.abs() < d.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        row_swap!(t, pi);
        col_swap!(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                let q = d.get(i, t).div_floor(d.get(t, t));
                row_add!(i, t, -q);
                if !d.get(i, t).is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..n {
                let q = d.get(t, j).div_floor(d.get(t, t));
                col_add!(j, t, -q);
                if !d.get(t, j).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // A remainder smaller than the pivot exists; make it the pivot.
                let mut best = (t, t);
                for i in t..m {
                    let x = d.get(i, t);
                    if !x.is_zero() && x.abs() < d.get(best.0, best.1).abs() {
                        best = (i, t);
                    }
                }
                for j in t..n {
                    let x = d.get(t, j);
                    if !x.is_zero() && x.abs() < d.get(best.0, best.1).abs() {
                        best = (t, j);
                    }
                }
                row_swap!(t, best.0);
                col_swap!(t, best.1);
                continue;
            }
            let piv = d.get(t, t).clone();
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !d.get(i, j).is_multiple_of(&piv)));
            match bad {
                Some(i) => row_add!(t, i, BigInt::one()),
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
    }
    let diagonal = (0..m.min(n)).map(|i| d.get(i, i).clone()).collect();
    SmithForm { diagonal, u, u_inv, v, v_inv }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm(rows: &[&[i64]]) -> LatticeMatrix {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        LatticeMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect(), n).unwrap()
    }

    fn check(a: &LatticeMatrix) -> SmithForm {
        let s = smith_normal_form(a);
        let d = s.u.mul(a).mul(&s.v);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let want = if i == j { s.diagonal[i].clone() } else { BigInt::zero() };
                assert_eq!(d.get(i, j), &want, "U A V is diagonal");
            }
        }
        assert_eq!(s.u.mul(&s.u_inv), LatticeMatrix::identity(a.nrows()));
        assert_eq!(s.v.mul(&s.v_inv), LatticeMatrix::identity(a.ncols()));
        for w in s.diagonal.windows(2) {
            assert!(w[1].is_zero() || w[1].is_multiple_of(&w[0]));
        }
        s
    }

    #[test]
    fn diag_one_two() {
        let s = check(&lm(&[&[2, 0], &[0, 1]]));
        assert_eq!(s.diagonal, vec![BigInt::from(1), BigInt::from(2)]);
    }

    #[test]
    fn divisibility_is_enforced() {
        let s = check(&lm(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.diagonal, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn rectangular_and_rank_deficient() {
        let s = check(&lm(&[&[2, 4, 6], &[1, 2, 3]]));
        assert_eq!(s.rank(), 1);
        check(&lm(&[&[0, 0], &[0, 0], &[3, 9]]));
        check(&LatticeMatrix::empty(3));
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(lm(&[&[1, 1], &[1, 2]]).det(), BigInt::from(1));
        assert_eq!(lm(&[&[0, 2, 1], &[1, 0, 0], &[3, 1, 4]]).det(), BigInt::from(-7));
        assert_eq!(lm(&[&[1, 2], &[2, 4]]).det(), BigInt::zero());
    }

    #[test]
    fn json_round_trip() {
        let a = lm(&[&[1, -2], &[0, 3]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1,-2],[0,3]]");
        assert_eq!(serde_json::from_str::<LatticeMatrix>(&s).unwrap(), a);
    }
}
