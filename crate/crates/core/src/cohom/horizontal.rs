use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CohomError;
use crate::expr::{Expr, VectorExpression};
use crate::form::{FormField, OneForm};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A map from a rectangle in the `(u, v)` plane into base coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub map: VectorExpression,
    pub uv_domain: [[f64; 2]; 2],
}

/// A 2-cycle as a sum of patches.
#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    pub patches: Vec<Patch>,
}

fn default_params() -> [String; 2] {
    ["u".to_string(), "v".to_string()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub map: Vec<String>,
    pub uv_domain: [[f64; 2]; 2],
    #[serde(default = "default_params")]
    pub params: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub patches: Vec<PatchSpec>,
}

impl Cycle {
    pub fn from_spec(spec: &CycleSpec) -> Result<Cycle, CohomError> {
        let patches = spec
            .patches
            .iter()
            .map(|p| Ok(Patch { map: VectorExpression::parse(&p.map, &p.params)?, uv_domain: p.uv_domain }))
            .collect::<Result<Vec<_>, CohomError>>()?;
        Ok(Cycle { patches })
    }
}

#[derive(Clone, Debug)]
pub struct HorizontalOptions {
    pub basic_tol: f64,
    /// Target absolute accuracy of each period.
    pub quad_tol: f64,
    pub order: usize,
    /// Largest number of cells per side before giving up on refinement.
    pub max_cells: usize,
}

impl Default for HorizontalOptions {
    fn default() -> Self {
        HorizontalOptions { basic_tol: 1e-8, quad_tol: 1e-6, order: 8, max_cells: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalReport {
    pub periods: Vec<f64>,
    /// Largest `|i_{∂θ} β*|` and θ-derivative of `β*` seen on the check points.
    pub basic_residual: f64,
    /// Difference between the last two refinement levels, per period.
    pub quadrature_error: Vec<f64>,
}

/// `β* = σ − d⟨ψ∘π, A⟩` on the full chart.
pub fn basic_part(sigma: &FormField, connection: &[OneForm], psi: &VectorExpression) -> Result<FormField, CohomError> {
    let vars = sigma.vars();
    if connection.len() != psi.len() {
        return Err(CohomError::Shape(format!("{} connection components, {} moment components", connection.len(), psi.len())));
    }
    if psi.vars().iter().any(|v| !vars.contains(v)) {
        return Err(CohomError::Shape("ψ uses variables outside the chart".into()));
    }
    let mut pairing = OneForm::zero(vars);
    for (a, psi_a) in connection.iter().zip(psi.components()) {
        if a.vars() != vars {
            return Err(CohomError::Shape("connection and form use different coordinates".into()));
        }
        pairing = pairing.add(&a.scale(psi_a))?;
    }
    Ok(sigma.sub(&pairing.exterior_derivative())?)
}

fn integrate_patch(beta: &FormField, base_idx: &[usize], n: usize, patch: &Patch, cells: usize, order: usize) -> Result<f64, CohomError> {
    let (x, w) = gauss_legendre(order);
    let [[u0, u1], [v0, v1]] = patch.uv_domain;
    let (hu, hv) = ((u1 - u0) / cells as f64, (v1 - v0) / cells as f64);
    let mut total = 0.0;
    let mut p = vec![0.0; n];
    for a in 0..cells {
        for b in 0..cells {
            for (xi, wi) in x.iter().zip(&w) {
                for (xj, wj) in x.iter().zip(&w) {
                    let u = u0 + hu * (a as f64 + 0.5 * (xi + 1.0));
                    let v = v0 + hv * (b as f64 + 0.5 * (xj + 1.0));
                    let img = patch.map.eval(&[u, v])?;
                    let jac = patch.map.jacobian(&[u, v])?;
                    for (k, &i) in base_idx.iter().enumerate() {
                        p[i] = img[k];
                    }
                    let m = beta.matrix(&p)?;
                    let mut val = 0.0;
                    for (k, &i) in base_idx.iter().enumerate() {
                        for (l, &j) in base_idx.iter().enumerate() {
                            val += m[(i, j)] * jac[(k, 0)] * jac[(l, 1)];
                        }
                    }
                    total += wi * wj * val * 0.25 * hu * hv;
                }
            }
        }
    }
    Ok(total)
}

/// Periods of the closed base form `β` determined by `σ = d⟨ψ∘π, A⟩ + π*β`
/// over each cycle. The fiber angles are `fiber`; the remaining chart
/// variables are base coordinates, in chart order, and cycle maps land in
/// those.
pub fn horizontal_class(
    sigma: &FormField,
    connection: &[OneForm],
    psi: &VectorExpression,
    fiber: &[String],
    cycles: &[Cycle],
    opts: &HorizontalOptions,
) -> Result<HorizontalReport, CohomError> {
    let vars = sigma.vars().to_vec();
    let n = vars.len();
    let fiber_idx: Vec<usize> = fiber
        .iter()
        .map(|f| vars.iter().position(|v| v == f).ok_or_else(|| CohomError::Shape(format!("unknown fiber variable `{f}`"))))
        .collect::<Result<_, _>>()?;
    let base_idx: Vec<usize> = (0..n).filter(|i| !fiber_idx.contains(i)).collect();
    if fiber.len() != psi.len() {
        return Err(CohomError::Shape(format!("{} fiber angles, {} moment components", fiber.len(), psi.len())));
    }
    let beta = basic_part(sigma, connection, psi)?;

    // Basic check at cycle points with a few fiber positions.
    let mut residual: f64 = 0.0;
    for cycle in cycles {
        for patch in &cycle.patches {
            if patch.map.len() != base_idx.len() {
                return Err(CohomError::Shape(format!(
                    "cycle map has {} components for {} base coordinates",
                    patch.map.len(),
                    base_idx.len()
                )));
            }
            let [[u0, u1], [v0, v1]] = patch.uv_domain;
            for (s, t) in [(0.31, 0.47), (0.73, 0.19), (0.5, 0.88)] {
                let img = patch.map.eval(&[u0 + s * (u1 - u0), v0 + t * (v1 - v0)])?;
                for angle in [0.0, 0.7, 2.1] {
                    let mut p = vec![angle; n];
                    for (k, &i) in base_idx.iter().enumerate() {
                        p[i] = img[k];
                    }
                    for &f in &fiber_idx {
                        let mut e = vec![0.0; n];
                        e[f] = 1.0;
                        residual = residual.max(beta.contract(&e, &p)?.iter().fold(0.0, |m, x| m.max(x.abs())));
                        residual = residual.max(beta.derivative_along(&p, &e)?.iter().fold(0.0, |m, x| m.max(x.abs())));
                    }
                }
            }
        }
    }
    if residual > opts.basic_tol {
        return Err(CohomError::NotBasic { residual });
    }

    let mut periods = Vec::new();
    let mut errors = Vec::new();
    for cycle in cycles {
        let (mut total, mut err) = (0.0, 0.0);
        for patch in &cycle.patches {
            let mut cells = 1;
            let mut prev = integrate_patch(&beta, &base_idx, n, patch, cells, opts.order)?;
            let mut diff = f64::INFINITY;
            while cells < opts.max_cells {
                cells *= 2;
                let next = integrate_patch(&beta, &base_idx, n, patch, cells, opts.order)?;
                diff = (next - prev).abs();
                prev = next;
                if diff < opts.quad_tol * 1e-2 {
                    break;
                }
            }
            if diff > opts.quad_tol {
                return Err(CohomError::Quadrature { error: diff });
            }
            total += prev;
            err += diff;
        }
        periods.push(total);
        errors.push(err);
    }
    Ok(HorizontalReport { periods, basic_residual: residual, quadrature_error: errors })
}

/// Flat connection `(dθ_1, …, dθ_k)` on a chart.
pub fn flat_connection<S: AsRef<str>>(vars: &[S], fiber: &[S]) -> Vec<OneForm> {
    fiber
        .iter()
        .map(|f| {
            let i = vars.iter().position(|v| v.as_ref() == f.as_ref()).expect("fiber variable in chart");
            OneForm::basis(vars, i)
        })
        .collect()
}

/// `A + d f_a` componentwise, with `f_a` functions of the base.
pub fn gauge_shift<S: AsRef<str>>(a: &[OneForm], vars: &[S], f: &[Expr]) -> Result<Vec<OneForm>, CohomError> {
    a.iter().zip(f).map(|(ai, fi)| Ok(ai.add(&OneForm::exact(vars, fi)?)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_to_degree_15() {
        let (x, w) = gauss_legendre(8);
        for d in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {d}: {q} vs {exact}");
        }
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15 && (w[2] - 128.0 / 225.0).abs() < 1e-14);
    }
}
