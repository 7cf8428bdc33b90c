use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::fold::canonical_sign;
use super::{FoldTolerances, SingularityError};
use crate::expr::{ExprError, VectorExpression};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    /// The grid covers `[-half_width, half_width]` in every adapted coordinate.
    pub half_width: f64,
    /// Nodes per axis; odd so that `t = 0` is a node.
    pub nodes: usize,
    pub residual_tol: f64,
    pub tolerances: FoldTolerances,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions { half_width: 0.25, nodes: 9, residual_tol: 1e-6, tolerances: FoldTolerances::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: Vec<f64>,
}

/// Result of writing `f(z₀ + B x + t k) = g(x, 0) + t² F(x, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    /// Unit kernel vector `k` of `df_{z₀}`; the `t` axis.
    pub kernel: Vec<f64>,
    /// Unit cokernel vector of `df_{z₀}`.
    pub cokernel: Vec<f64>,
    /// Orthonormal complement of `k`; the `x` axes.
    pub complement: Vec<Vec<f64>>,
    pub spacing: f64,
    /// `F` at the grid nodes.
    pub samples: Vec<FactorSample>,
    /// `F(0, 0) = ½ D²f(k, k)`.
    pub f_at_fold: Vec<f64>,
    /// `|coker · F(0, 0)|`.
    pub transversality_margin: f64,
    /// Max of `|g(x,t) - g(x,0) - t² F̂(x,t)|` over cell midpoints, with `F̂`
    /// the multilinear interpolant of the sampled `F`.
    pub max_residual: f64,
    /// The same maximum restricted to the cells adjacent to `t = 0`.
    pub fold_layer_residual: f64,
    /// Max of `|∂_t g(x, 0)|` over the grid; zero when the fold sits on `t = 0`
    /// in the adapted coordinates. A sampled, not certified, property.
    pub fold_alignment: f64,
}

pub fn fold_factorization(
    f: &VectorExpression,
    z0: &[f64],
    opts: &FactorOptions,
) -> Result<FactorReport, SingularityError> {
    let n = f.dim();
    if f.len() != n {
        return Err(SingularityError::NotSquare { rows: f.len(), cols: n });
    }
    let j = f.jacobian(z0)?;
    let (s, mut v) = linalg::right_svd(&j);
    let tol = &opts.tolerances;
    if !(s[n - 1] < tol.sigma_zero && (n < 2 || s[n - 2] > tol.sigma_gap)) {
        return Err(SingularityError::NotCorankOne(s));
    }
    let mut k: Vec<f64> = v.column(n - 1).iter().copied().collect();
    canonical_sign(&mut k);
    v.set_column(n - 1, &DVector::from_vec(k.clone()));
    if n >= 2 && linalg::det(&v) < 0.0 {
        let c = -v.column(0);
        v.set_column(0, &c);
    }
    let (_, ul) = linalg::left_svd(&j);
    let mut u: Vec<f64> = ul.column(n - 1).iter().copied().collect();
    canonical_sign(&mut u);
    let complement: Vec<Vec<f64>> = (0..n - 1).map(|c| v.column(c).iter().copied().collect()).collect();

    let point = |x: &[f64], t: f64| -> Vec<f64> {
        (0..n)
            .map(|r| z0[r] + (0..n - 1).map(|c| v[(r, c)] * x[c]).sum::<f64>() + t * k[r])
            .collect()
    };
    let g = |x: &[f64], t: f64| f.eval(&point(x, t));
    let big_f = |x: &[f64], t: f64| -> Result<Vec<f64>, ExprError> {
        if t == 0.0 {
            let p = point(x, 0.0);
            Ok(f.second_derivative(&p, &k, &k)?.into_iter().map(|y| 0.5 * y).collect())
        } else {
            let a = g(x, t)?;
            let b = g(x, 0.0)?;
            Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (t * t)).collect())
        }
    };

    let m = opts.nodes.max(3) | 1;
    let h = opts.half_width;
    let spacing = 2.0 * h / (m - 1) as f64;
    let coord = |i: usize| if 2 * i + 1 == m { 0.0 } else { -h + i as f64 * spacing };

    // Nodes in row-major order over (x_1, …, x_{n-1}, t).
    let total = m.pow(n as u32);
    let index = |multi: &[usize]| multi.iter().fold(0, |acc, &i| acc * m + i);
    let unravel = |mut flat: usize, base: usize| {
        let mut multi = vec![0; n];
        for d in (0..n).rev() {
            multi[d] = flat % base;
            flat /= base;
        }
        multi
    };
    let mut values = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(total);
    for flat in 0..total {
        let multi = unravel(flat, m);
        let x: Vec<f64> = multi[..n - 1].iter().map(|&i| coord(i)).collect();
        let t = coord(multi[n - 1]);
        let val = big_f(&x, t)?;
        samples.push(FactorSample { x, t, value: val.clone() });
        values.push(val);
    }

    let mut max_residual: f64 = 0.0;
    let mut fold_layer_residual: f64 = 0.0;
    let cells = (m - 1).pow(n as u32);
    for flat in 0..cells {
        let multi = unravel(flat, m - 1);
        let x: Vec<f64> = multi[..n - 1].iter().map(|&i| coord(i) + 0.5 * spacing).collect();
        let t = coord(multi[n - 1]) + 0.5 * spacing;
        // The multilinear interpolant at a cell midpoint is the corner average.
        let mut interp = vec![0.0; n];
        for corner in 0..(1usize << n) {
            let c: Vec<usize> = (0..n).map(|d| multi[d] + ((corner >> d) & 1)).collect();
            for (acc, y) in interp.iter_mut().zip(&values[index(&c)]) {
                *acc += y / (1usize << n) as f64;
            }
        }
        let a = g(&x, t)?;
        let b = g(&x, 0.0)?;
        let r = (0..n).map(|i| (a[i] - b[i] - t * t * interp[i]).abs()).fold(0.0, f64::max);
        max_residual = max_residual.max(r);
        let mid = (m - 1) / 2;
        if multi[n - 1] == mid || multi[n - 1] + 1 == mid {
            fold_layer_residual = fold_layer_residual.max(r);
        }
    }

    let mut fold_alignment: f64 = 0.0;
    for sample in samples.iter().filter(|s| s.t == 0.0) {
        let d = f.directional(&point(&sample.x, 0.0), &k)?;
        fold_alignment = fold_alignment.max(linalg::norm(&d));
    }

    let zero = vec![0.0; n - 1];
    let f_at_fold = big_f(&zero, 0.0)?;
    let transversality_margin = linalg::dot(&u, &f_at_fold).abs();
    if transversality_margin <= tol.margin_tol {
        return Err(SingularityError::KernelNotTransverse { margin: transversality_margin });
    }
    if max_residual > opts.residual_tol {
        return Err(SingularityError::ResidualTooLarge { residual: max_residual, limit: opts.residual_tol });
    }
    Ok(FactorReport {
        kernel: k,
        cokernel: u,
        complement,
        spacing,
        samples,
        f_at_fold,
        transversality_margin,
        max_residual,
        fold_layer_residual,
        fold_alignment,
    })
}
