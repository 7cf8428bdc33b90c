use super::{FormError, FormField};
use crate::expr::{Dual, VectorExpression};
use crate::linalg;

const KERNEL_TOL: f64 = 1e-6;

fn check_frame(sigma: &FormField, z: &[f64], v: &[f64], w: &[f64]) -> Result<(), FormError> {
    for (which, x) in [("v", v), ("w", w)] {
        let scale = linalg::norm(x);
        if scale == 0.0 {
            return Err(FormError::NotInKernel { which, residual: 0.0 });
        }
        let r = linalg::norm(&sigma.contract(x, z)?);
        if r > KERNEL_TOL * scale.max(1.0) {
            return Err(FormError::NotInKernel { which, residual: r });
        }
    }
    let (_, grad) = sigma.pfaffian_and_gradient(z)?;
    let gn = linalg::norm(&grad);
    if linalg::dot(&grad, w).abs() <= KERNEL_TOL * gn * linalg::norm(w) {
        return Err(FormError::NotTransverse);
    }
    if linalg::dot(&grad, v).abs() > KERNEL_TOL * gn * linalg::norm(v) {
        return Err(FormError::NotTangent);
    }
    Ok(())
}

fn sign_of(d: f64) -> Result<i8, FormError> {
    if d.abs() < 1e-12 {
        Err(FormError::DegenerateOrientation(d))
    } else {
        Ok(if d > 0.0 { 1 } else { -1 })
    }
}

/// Sign of `∂_w [σ(w̃, ṽ)]` at a fold point `z`, with constant extensions of
/// the null vector `v ∈ ker σ ∩ TZ` and the transverse kernel vector `w`.
/// `+1` means `v` is positively oriented.
pub fn induced_orientation(sigma: &FormField, z: &[f64], v: &[f64], w: &[f64]) -> Result<i8, FormError> {
    check_frame(sigma, z, v, w)?;
    let dsigma = sigma.derivative_along(z, w)?;
    let n = sigma.dim();
    let d: f64 = (0..n).map(|i| (0..n).map(|j| w[i] * dsigma[(i, j)] * v[j]).sum::<f64>()).sum();
    sign_of(d)
}

/// As [`induced_orientation`] with arbitrary extensions `w̃`, `ṽ` given as
/// vector fields; their values at `z` are the frame being tested.
pub fn induced_orientation_with_extensions(
    sigma: &FormField,
    z: &[f64],
    w_ext: &VectorExpression,
    v_ext: &VectorExpression,
) -> Result<i8, FormError> {
    let w = w_ext.eval(z)?;
    let v = v_ext.eval(z)?;
    check_frame(sigma, z, &v, &w)?;
    let seed: Vec<Dual> = z.iter().zip(&w).map(|(&x, &d)| Dual::new(x, d)).collect();
    let m = sigma.matrix_generic(&seed)?;
    let wt = w_ext.eval_generic(&seed)?;
    let vt = v_ext.eval_generic(&seed)?;
    let n = sigma.dim();
    let mut total = Dual::constant(0.0);
    for i in 0..n {
        for j in 0..n {
            total = total + m[i][j] * wt[i] * vt[j];
        }
    }
    sign_of(total.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs3() -> FormField {
        FormField::parse(&["x1", "x2", "x3", "x4"], &[(0, 1, "x1"), (2, 3, "1")]).unwrap()
    }

    const Z: [f64; 4] = [0.0, 0.3, -0.2, 0.5];

    #[test]
    fn recipe_signs() {
        let s = fs3();
        assert_eq!(induced_orientation(&s, &Z, &[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap(), 1);
        assert_eq!(induced_orientation(&s, &Z, &[0.0, -1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap(), -1);
        assert_eq!(induced_orientation(&s, &Z, &[0.0, 1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn frame_errors() {
        let s = fs3();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            induced_orientation(&s, &Z, &[0.0, 0.0, 1.0, 0.0], &e1),
            Err(FormError::NotInKernel { which: "v", .. })
        ));
        assert!(matches!(induced_orientation(&s, &Z, &e1, &[0.0, 1.0, 0.0, 0.0]), Err(FormError::NotTransverse)));
    }

    #[test]
    fn extensions_do_not_matter() {
        let s = fs3();
        let vars = ["x1", "x2", "x3", "x4"];
        let w = VectorExpression::parse(&["3 + x1*x2", "x1^2", "0", "x1*x4"], &vars).unwrap();
        let v = VectorExpression::parse(&["x1", "1 + x1*x3", "sin(x1)", "0"], &vars).unwrap();
        assert_eq!(induced_orientation_with_extensions(&s, &Z, &w, &v).unwrap(), 1);
        let w = VectorExpression::parse(&["-2 - x1", "0", "x1", "0"], &vars).unwrap();
        assert_eq!(induced_orientation_with_extensions(&s, &Z, &w, &v).unwrap(), 1);
    }
}
