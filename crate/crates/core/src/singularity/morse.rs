use serde::{Deserialize, Serialize};

use crate::domain;
use crate::expr::{Expr, ExprError, VectorExpression};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub s: f64,
    /// `g'(s)`; the point is nondegenerate when this is nonzero.
    pub slope: f64,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    /// The function `g = f' - a(s, f)` printed in canonical form.
    pub g: String,
    pub critical_points: Vec<CriticalPoint>,
    /// `g` vanishes on the whole scanned window.
    pub degenerate: bool,
    pub is_chi_morse: bool,
}

const ROOT_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 1e-8;

/// Critical points of `f` relative to the connection with horizontal slope
/// `a(s, t)`: zeros of `g(s) = f'(s) - a(s, f(s))` in `window`. The section
/// is χ-Morse on the window when `g' ≠ 0` at every zero.
pub fn chi_morse_check(
    f: &Expr,
    a: &Expr,
    s_var: &str,
    t_var: &str,
    window: (f64, f64),
    scan: usize,
) -> Result<MorseReport, ExprError> {
    let a_on_graph = a.substitute(&|v: &str| if v == t_var { Some(f.clone()) } else { None });
    let g = f.diff(s_var) - a_on_graph;
    let dg = g.diff(s_var);
    let field = VectorExpression::new(vec![g.clone(), dg], &[s_var])?;
    let (lo, hi) = window;
    let scan = scan.max(2);
    let grid: Vec<f64> = (0..=scan).map(|i| lo + (hi - lo) * i as f64 / scan as f64).collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&s| field.eval_component(0, &[s]).ok()).collect();

    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if !defined.is_empty() && defined.iter().all(|v| v.abs() < ROOT_TOL) {
        return Ok(MorseReport { g: g.to_string(), critical_points: Vec::new(), degenerate: true, is_chi_morse: false });
    }

    let eval = |s: f64| -> Option<(f64, f64)> {
        let v = field.eval(&[s]).ok()?;
        Some((v[0], v[1]))
    };
    let mut roots = Vec::new();
    for w in 0..grid.len() - 1 {
        if let (Some(ga), Some(gb)) = (values[w], values[w + 1]) {
            if ga == 0.0 {
                roots.push(grid[w]);
            } else if ga * gb < 0.0 {
                let (mut l, mut r, mut gl) = (grid[w], grid[w + 1], ga);
                for _ in 0..200 {
                    let mid = 0.5 * (l + r);
                    let Some((gm, _)) = eval(mid) else { break };
                    if gm == 0.0 || r - l < 1e-15 {
                        l = mid;
                        r = mid;
                        break;
                    }
                    if gm * gl < 0.0 {
                        r = mid;
                    } else {
                        l = mid;
                        gl = gm;
                    }
                }
                roots.push(0.5 * (l + r));
            }
        }
    }
    // Newton from every scan point catches tangential zeros without a sign change.
    for &s0 in &grid {
        let mut s = s0;
        for _ in 0..100 {
            let Some((gv, dv)) = eval(s) else { break };
            if dv == 0.0 {
                break;
            }
            let step = (gv / dv).clamp(-0.5, 0.5);
            s -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        if s >= lo && s <= hi && eval(s).is_some_and(|(gv, _)| gv.abs() < ROOT_TOL) {
            roots.push(s);
        }
    }
    let roots = domain::dedup_sorted(roots.into_iter().map(|s| vec![s]).collect(), 1e-6);
    let mut critical_points = Vec::with_capacity(roots.len());
    for r in roots {
        let (gv, slope) = field.eval(&r).map(|v| (v[0], v[1]))?;
        if gv.abs() < ROOT_TOL {
            critical_points.push(CriticalPoint { s: r[0], slope, nondegenerate: slope.abs() > SLOPE_TOL });
        }
    }
    let is_chi_morse = critical_points.iter().all(|c| c.nondegenerate);
    Ok(MorseReport { g: g.to_string(), critical_points, degenerate: false, is_chi_morse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn run(f: &str, a: &str) -> MorseReport {
        chi_morse_check(&parse(f).unwrap(), &parse(a).unwrap(), "s", "t", (-3.0, 3.0), 60).unwrap()
    }

    #[test]
    fn half_square_with_unit_slope() {
        let r = run("s^2/2", "1");
        assert_eq!(r.critical_points.len(), 1);
        assert!((r.critical_points[0].s - 1.0).abs() < 1e-12);
        assert!((r.critical_points[0].slope - 1.0).abs() < 1e-12);
        assert!(r.is_chi_morse);
    }

    #[test]
    fn identity_section_is_degenerate() {
        let r = run("s", "1");
        assert!(r.degenerate);
        assert!(!r.is_chi_morse);
    }

    #[test]
    fn ordinary_morse() {
        let r = run("s^2/2", "0");
        assert_eq!(r.critical_points.len(), 1);
        assert!(r.critical_points[0].s.abs() < 1e-12);
        assert!(r.is_chi_morse);
    }

    #[test]
    fn tangential_zero_is_degenerate() {
        // g = s^2, touching zero at 0
        let r = run("s^3/3", "0");
        assert_eq!(r.critical_points.len(), 1);
        assert!(!r.is_chi_morse);
    }

    #[test]
    fn slope_depending_on_fibre() {
        // a(s,t) = t: g = f' - f; for f = exp(s) + s, g = 1 - s, zero at s = 1
        let r = run("exp(s) + s", "t");
        assert_eq!(r.critical_points.len(), 1);
        assert!((r.critical_points[0].s - 1.0).abs() < 1e-10);
        assert!((r.critical_points[0].slope + 1.0).abs() < 1e-9);
    }
}
