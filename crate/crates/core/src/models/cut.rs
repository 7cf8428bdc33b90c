use std::f64::consts::PI;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{BundleChart, ModelError};
use crate::lattice::{attach, is_unimodular_basis, FoldedTemplate, LatticeMatrix};

pub const LEVEL_TOL: f64 = 1e-9;

/// Local cut data at `w`: the normals `v_1, …, v_k` of the facets through
/// `ψ(w)` and the base value `ψ(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutChart {
    pub chart: BundleChart,
    pub normals: LatticeMatrix,
    pub center: Vec<f64>,
    pub apex: Vec<f64>,
}

/// A point of `P × ℂ^k`: chart coordinates (base then fiber angles) and
/// complex coordinates as `(re, im)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPoint {
    pub p: Vec<f64>,
    pub z: Vec<(f64, f64)>,
}

impl CutChart {
    pub fn new(chart: BundleChart, normals: LatticeMatrix, center: Vec<f64>) -> Result<CutChart, ModelError> {
        if normals.ncols() != chart.rank() || center.len() != chart.base_vars.len() {
            return Err(ModelError::DimensionMismatch("normals, center and chart disagree".into()));
        }
        if normals.nrows() > 0 && !is_unimodular_basis(&normals)? {
            return Err(ModelError::IncompatibleCharts("normals are not a unimodular basis".into()));
        }
        let apex = chart.psi.eval(&center)?;
        Ok(CutChart { chart, normals, center, apex })
    }

    /// Cut chart at `w` from the region of a template containing it, with a
    /// flat bundle chart over that region's map.
    pub fn from_template(t: &FoldedTemplate, w: &[f64]) -> Result<CutChart, ModelError> {
        let a = attach(t, w)?;
        let region = t.region(a.region).ok_or_else(|| ModelError::IncompatibleCharts("unknown region".into()))?;
        CutChart::new(BundleChart::standard(region.chart.clone())?, a.normals, w.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.normals.nrows()
    }

    fn normal(&self, i: usize) -> Vec<f64> {
        self.normals.row(i).iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// `⟨ψ(π(p)) − ψ(w), v_i⟩` for each normal.
    pub fn pairings(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        let base = self.chart.split(p)?;
        let psi = self.chart.psi.eval(&base)?;
        Ok((0..self.rank())
            .map(|i| self.normal(i).iter().zip(psi.iter().zip(&self.apex)).map(|(v, (a, b))| v * (a - b)).sum())
            .collect())
    }
}

/// `Φ_i(p, z) = ⟨ψ(π(p)) − ψ(w), v_i⟩ − |z_i|²`.
pub fn cut_moment(c: &CutChart, x: &CutPoint) -> Result<Vec<f64>, ModelError> {
    if x.z.len() != c.rank() {
        return Err(ModelError::DimensionMismatch(format!("{} complex coordinates for {} normals", x.z.len(), c.rank())));
    }
    let a = c.pairings(&x.p)?;
    Ok(a.iter().zip(&x.z).map(|(a, (re, im))| a - (re * re + im * im)).collect())
}

/// `α_w(p) = (p, s(ξ₀ − ν(p)))` with `s(η)_i = √⟨−η, v_i⟩`.
pub fn cut_section_and_alpha(c: &CutChart, p: &[f64]) -> Result<CutPoint, ModelError> {
    let a = c.pairings(p)?;
    let mut z = Vec::with_capacity(a.len());
    for (i, &ai) in a.iter().enumerate() {
        if ai < -LEVEL_TOL {
            return Err(ModelError::OutsideCone { index: i, pairing: ai });
        }
        z.push((ai.max(0.0).sqrt(), 0.0));
    }
    Ok(CutPoint { p: p.to_vec(), z })
}

fn check_level(c: &CutChart, x: &CutPoint) -> Result<(), ModelError> {
    let r = cut_moment(c, x)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r > LEVEL_TOL {
        return Err(ModelError::NotOnLevelSet { residual: r });
    }
    Ok(())
}

// Rotate z_i to the positive real axis by the K_w-action, which moves the
// fiber angles by −(arg z_i / 2π) v_i.
fn rotate_real(c: &CutChart, x: &mut CutPoint, i: usize) {
    let (re, im) = x.z[i];
    let phase = im.atan2(re);
    if phase == 0.0 {
        return;
    }
    let m = c.chart.base_vars.len();
    for (a, v) in c.normal(i).iter().enumerate() {
        x.p[m + a] -= phase / (2.0 * PI) * v;
    }
    x.z[i] = ((re * re + im * im).sqrt(), 0.0);
}

/// The representative of the `K_w`-orbit of `x` with every `z_i` real and
/// nonnegative.
pub fn canonical_representative(c: &CutChart, x: &CutPoint) -> CutPoint {
    let mut y = x.clone();
    for i in 0..c.rank() {
        rotate_real(c, &mut y, i);
    }
    y
}

/// Transition between the cut charts at `w₁` and `w₂` over their overlap.
///
/// Coordinates of shared normals are kept, coordinates of normals only in
/// `c2` are appended as `√⟨ψ − ψ(w₂), v_i⟩`, and coordinates of normals only
/// in `c1` are dropped after rotating them real.
pub fn cut_transition(c1: &CutChart, c2: &CutChart, x: &CutPoint) -> Result<CutPoint, ModelError> {
    if c1.chart != c2.chart {
        return Err(ModelError::IncompatibleCharts("different bundle charts".into()));
    }
    check_level(c1, x)?;
    let find = |c: &CutChart, row: &[num_bigint::BigInt]| (0..c.rank()).find(|&j| c.normals.row(j) == row);
    let shared: Vec<Option<usize>> = (0..c2.rank()).map(|i| find(c1, c2.normals.row(i))).collect();
    let mut y = x.clone();
    for j in 0..c1.rank() {
        if find(c2, c1.normals.row(j)).is_none() {
            rotate_real(c1, &mut y, j);
        }
    }
    let a2 = c2.pairings(&x.p)?;
    let mut z = Vec::with_capacity(c2.rank());
    for (i, s) in shared.iter().enumerate() {
        match s {
            Some(j) => {
                let offset: f64 = c2.normal(i).iter().zip(c2.apex.iter().zip(&c1.apex)).map(|(v, (a, b))| v * (a - b)).sum();
                if offset.abs() > LEVEL_TOL {
                    return Err(ModelError::IncompatibleCharts(format!(
                        "shared normal {i} has facets at different levels ({offset:.3e})"
                    )));
                }
                z.push(x.z[*j]);
            }
            None => {
                if a2[i] <= 0.0 {
                    return Err(ModelError::NonPositivePairing { index: i, pairing: a2[i] });
                }
                z.push((a2[i].sqrt(), 0.0));
            }
        }
    }
    for j in 0..c1.rank() {
        if find(c2, c1.normals.row(j)).is_none() {
            let a1 = c1.pairings(&x.p)?[j];
            if a1 <= 0.0 {
                return Err(ModelError::NonPositivePairing { index: j, pairing: a1 });
            }
        }
    }
    let out = CutPoint { p: y.p, z };
    check_level(c2, &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VectorExpression;

    fn quadrant_chart() -> BundleChart {
        BundleChart::standard(VectorExpression::parse(&["x", "y"], &["x", "y"]).unwrap()).unwrap()
    }

    fn chart(normals: Vec<Vec<i64>>, w: Vec<f64>) -> CutChart {
        CutChart::new(quadrant_chart(), LatticeMatrix::from_rows(normals, 2).unwrap(), w).unwrap()
    }

    #[test]
    fn moment_examples() {
        let c = chart(vec![vec![1, 0], vec![0, 1]], vec![0.0, 0.0]);
        let at_w = CutPoint { p: vec![0.0, 0.0, 0.3, 0.1], z: vec![(0.0, 0.0); 2] };
        assert_eq!(cut_moment(&c, &at_w).unwrap(), vec![0.0, 0.0]);
        let p = CutPoint { p: vec![4.0, 1.0, 0.0, 0.0], z: vec![(2.0, 0.0), (0.0, 0.0)] };
        assert_eq!(cut_moment(&c, &p).unwrap()[0], 0.0);
        let neg = CutPoint { p: vec![-1.0, 0.5, 0.0, 0.0], z: vec![(0.0, 0.0); 2] };
        assert!(cut_moment(&c, &neg).unwrap()[0] < 0.0);
    }

    #[test]
    fn sections() {
        let psi = VectorExpression::parse(&["x"], &["x"]).unwrap();
        let line = CutChart::new(
            BundleChart::standard(psi).unwrap(),
            LatticeMatrix::from_rows(vec![vec![1]], 1).unwrap(),
            vec![0.0],
        )
        .unwrap();
        assert_eq!(cut_section_and_alpha(&line, &[0.0, 0.4]).unwrap().z, vec![(0.0, 0.0)]);
        assert_eq!(cut_section_and_alpha(&line, &[9.0, 0.4]).unwrap().z, vec![(3.0, 0.0)]);
        assert!(matches!(cut_section_and_alpha(&line, &[-0.5, 0.0]), Err(ModelError::OutsideCone { .. })));
    }

    #[test]
    fn permuted_normals() {
        let c1 = chart(vec![vec![1, 0], vec![0, 1]], vec![0.0, 0.0]);
        let c2 = chart(vec![vec![0, 1], vec![1, 0]], vec![0.0, 0.0]);
        let x = CutPoint { p: vec![0.25, 0.16, 0.0, 0.0], z: vec![(0.3, 0.4), (0.4, 0.0)] };
        let y = cut_transition(&c1, &c2, &x).unwrap();
        assert_eq!(y.z, vec![(0.4, 0.0), (0.3, 0.4)]);
        assert_eq!(y.p, x.p);
    }

    #[test]
    fn corner_edge_interior() {
        let corner = chart(vec![vec![1, 0], vec![0, 1]], vec![0.0, 0.0]);
        let edge = chart(vec![vec![0, 1]], vec![1.0, 0.0]);
        let inside = chart(vec![], vec![1.0, 1.0]);
        let p = vec![0.7, 0.2, 0.4, -1.1];
        let via = cut_transition(&edge, &corner, &cut_section_and_alpha(&edge, &p).unwrap()).unwrap();
        let direct = cut_section_and_alpha(&corner, &p).unwrap();
        for (a, b) in via.z.iter().zip(&direct.z) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        // Start from a non-real representative and go round the triple overlap.
        let mut x = direct.clone();
        x.z[0] = (x.z[0].0 * 0.6, x.z[0].0 * 0.8);
        let back = cut_transition(&edge, &corner, &cut_transition(&inside, &edge, &cut_transition(&corner, &inside, &x).unwrap()).unwrap()).unwrap();
        let want = canonical_representative(&corner, &x);
        for (a, b) in back.p.iter().zip(&want.p) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.z.iter().zip(&want.z) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        let off = CutPoint { p: p.clone(), z: vec![(0.0, 0.0); 2] };
        assert!(matches!(cut_transition(&corner, &edge, &off), Err(ModelError::NotOnLevelSet { .. })));
        let on_edge = cut_section_and_alpha(&edge, &[0.0, 0.2, 0.0, 0.0]).unwrap();
        assert!(matches!(cut_transition(&edge, &corner, &on_edge), Err(ModelError::NonPositivePairing { .. })));
    }
}
