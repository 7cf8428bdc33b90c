use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{extend_to_basis, unimodular_inverse, LatticeError, LatticeMatrix, UnimodularCone};
use crate::domain::{Domain, DomainSpec};
use crate::expr::{parse_with_vars, Expr, VectorExpression};
use crate::linalg;
use crate::singularity::{is_fold_map, FoldTolerances, FoldVerdict};

/// Pairings within this of zero put a point on a facet; used only when the
/// chart image cannot be evaluated exactly.
pub const FACET_TOL: f64 = 1e-9;
const WALL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub id: i64,
    pub cone: UnimodularCone,
    pub chart: Vec<String>,
    pub vars: Vec<String>,
    #[serde(default)]
    pub domain: DomainSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub regions: (i64, i64),
    pub wall: String,
    pub coorientation: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub dim: usize,
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub fold_walls: Vec<WallSpec>,
}

#[derive(Clone, Debug)]
pub struct Region {
    pub id: i64,
    pub cone: UnimodularCone,
    pub chart: VectorExpression,
    /// The region's own domain together with the side conditions of the
    /// walls separating it from other regions.
    pub domain: Domain,
}

#[derive(Clone, Debug)]
pub struct FoldWall {
    pub regions: (i64, i64),
    pub wall: Expr,
    pub coorientation: i8,
    function: VectorExpression,
}

impl FoldWall {
    pub fn value(&self, p: &[f64]) -> Option<f64> {
        self.function.eval(p).ok().map(|v| v[0])
    }

    pub fn function(&self) -> &VectorExpression {
        &self.function
    }

    pub fn touches(&self, id: i64) -> bool {
        self.regions.0 == id || self.regions.1 == id
    }
}

/// Chart regions with unimodular cones, glued along fold walls. The first
/// region of a wall lies on the side `coorientation · h ≥ 0`, the second on
/// `coorientation · h ≤ 0`; a wall listing one region twice is a fold inside
/// that region.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "TemplateSpec", into = "TemplateSpec")]
pub struct FoldedTemplate {
    pub dim: usize,
    pub regions: Vec<Region>,
    pub fold_walls: Vec<FoldWall>,
    spec: TemplateSpec,
}

impl From<FoldedTemplate> for TemplateSpec {
    fn from(t: FoldedTemplate) -> Self {
        t.spec
    }
}

impl TryFrom<TemplateSpec> for FoldedTemplate {
    type Error = LatticeError;
    fn try_from(spec: TemplateSpec) -> Result<Self, LatticeError> {
        FoldedTemplate::new(spec)
    }
}

impl FoldedTemplate {
    pub fn new(spec: TemplateSpec) -> Result<FoldedTemplate, LatticeError> {
        let n = spec.dim;
        let bad = |m: String| LatticeError::InvalidTemplate(m);
        let mut ids = BTreeSet::new();
        for r in &spec.regions {
            if !ids.insert(r.id) {
                return Err(bad(format!("duplicate region id {}", r.id)));
            }
            if r.cone.dim() != n || r.chart.len() != n || r.vars.len() != n {
                return Err(bad(format!("region {} does not have dimension {n}", r.id)));
            }
        }
        let mut walls = Vec::new();
        for (i, w) in spec.fold_walls.iter().enumerate() {
            let find = |id: i64| {
                spec.regions.iter().find(|r| r.id == id).ok_or_else(|| bad(format!("wall {i} names unknown region {id}")))
            };
            let (a, b) = (find(w.regions.0)?, find(w.regions.1)?);
            if a.vars != b.vars {
                return Err(bad(format!("wall {i} joins regions with different coordinates")));
            }
            if w.coorientation != 1 && w.coorientation != -1 {
                return Err(bad(format!("wall {i} has coorientation {}", w.coorientation)));
            }
            let names: Vec<&str> = a.vars.iter().map(String::as_str).collect();
            let h = parse_with_vars(&w.wall, &names)?;
            walls.push(FoldWall {
                regions: w.regions,
                function: VectorExpression::new(vec![h.clone()], &a.vars)?,
                wall: h,
                coorientation: w.coorientation,
            });
        }
        let mut regions = Vec::new();
        for r in &spec.regions {
            let names: Vec<&str> = r.vars.iter().map(String::as_str).collect();
            let chart = VectorExpression::parse(&r.chart, &names)?;
            let mut filters = Vec::new();
            for w in walls.iter().filter(|w| w.regions.0 != w.regions.1) {
                let s = Expr::int(w.coorientation as i64);
                if w.regions.0 == r.id {
                    filters.push(s * w.wall.clone());
                } else if w.regions.1 == r.id {
                    filters.push(-(s * w.wall.clone()));
                }
            }
            let domain = r.domain.build(&r.vars)?.with_side_filters(filters)?;
            regions.push(Region { id: r.id, cone: r.cone.clone(), chart, domain });
        }
        regions.sort_by_key(|r| r.id);
        Ok(FoldedTemplate { dim: n, regions, fold_walls: walls, spec })
    }

    pub fn from_json(text: &str) -> Result<FoldedTemplate, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn spec(&self) -> &TemplateSpec {
        &self.spec
    }

    pub fn region(&self, id: i64) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachResult {
    pub region: i64,
    /// Indices into the region's cone normals.
    pub facets: Vec<usize>,
    /// The normals `v_i^w` of the facets containing `ψ(w)`.
    pub normals: LatticeMatrix,
    /// The dual basis `(v_i^w)*` taken from a unimodular completion.
    pub weights: LatticeMatrix,
    pub subtorus_rank: usize,
}

/// Exact chart image when every component is a rational function of the
/// (exactly representable) coordinates.
fn exact_image(chart: &VectorExpression, w: &[f64]) -> Option<Vec<BigRational>> {
    let vals: Vec<BigRational> = w.iter().map(|&x| BigRational::from_float(x)).collect::<Option<_>>()?;
    let vars = chart.vars();
    let env = |name: &str| vars.iter().position(|v| v == name).map(|i| vals[i].clone());
    chart.components().iter().map(|c| c.eval_exact(&env)).collect()
}

fn attach_region(region: &Region, w: &[f64]) -> Result<AttachResult, LatticeError> {
    let cone = &region.cone;
    let (member, facets) = match exact_image(&region.chart, w) {
        Some(eta) => {
            let p = cone.pairings(&eta)?;
            let tol = BigRational::from_float(FACET_TOL).expect("finite");
            (
                p.iter().all(|x| *x >= -tol.clone()),
                p.iter().enumerate().filter(|(_, x)| x.abs() <= tol).map(|(i, _)| i).collect::<Vec<_>>(),
            )
        }
        None => {
            let eta = region.chart.eval(w)?;
            let p = cone.pairings_f64(&eta)?;
            (
                p.iter().all(|&x| x >= -FACET_TOL),
                p.iter().enumerate().filter(|(_, x)| x.abs() <= FACET_TOL).map(|(i, _)| i).collect(),
            )
        }
    };
    if !member {
        let image = region.chart.eval(w).unwrap_or_default();
        return Err(LatticeError::ImageOutsideCone { region: region.id, image });
    }
    let normals = cone.normals.select_rows(&facets);
    let k = normals.nrows();
    let weights = if k == 0 {
        LatticeMatrix::empty(cone.dim())
    } else {
        let full = extend_to_basis(&normals)?;
        let inv = unimodular_inverse(&full)?;
        // Column i of the inverse pairs to δ_ij with row j of the completion.
        inv.transpose().select_rows(&(0..k).collect::<Vec<_>>())
    };
    Ok(AttachResult { region: region.id, facets, normals, weights, subtorus_rank: k })
}

fn normal_set(m: &LatticeMatrix) -> BTreeSet<Vec<BigInt>> {
    m.rows().iter().cloned().collect()
}

/// Attach using the lowest-id region containing `w`.
pub fn attach(t: &FoldedTemplate, w: &[f64]) -> Result<AttachResult, LatticeError> {
    attach_in(t, w, None)
}

/// Attach using the given region (or the lowest-id region containing `w`),
/// cross-checking against the other side of every fold wall through `w`.
pub fn attach_in(t: &FoldedTemplate, w: &[f64], region: Option<i64>) -> Result<AttachResult, LatticeError> {
    if w.len() != t.dim {
        return Err(LatticeError::DimensionMismatch { expected: t.dim, got: w.len() });
    }
    let chosen = match region {
        Some(id) => t.region(id).filter(|r| r.domain.contains(w, WALL_TOL)),
        None => t.regions.iter().find(|r| r.domain.contains(w, WALL_TOL)),
    }
    .ok_or_else(|| LatticeError::PointOutsideTemplate(w.to_vec()))?;
    let result = attach_region(chosen, w)?;
    for (i, wall) in t.fold_walls.iter().enumerate() {
        if !wall.touches(chosen.id) || wall.regions.0 == wall.regions.1 {
            continue;
        }
        if wall.value(w).map_or(true, |h| h.abs() > WALL_TOL) {
            continue;
        }
        let other_id = if wall.regions.0 == chosen.id { wall.regions.1 } else { wall.regions.0 };
        let other = t.region(other_id).expect("validated at construction");
        if !other.domain.contains(w, WALL_TOL) {
            continue;
        }
        let theirs = attach_region(other, w)?;
        if normal_set(&theirs.normals) != normal_set(&result.normals) {
            return Err(LatticeError::InconsistentTemplate {
                wall: i,
                region_a: chosen.id,
                normals_a: result.normals.to_string(),
                region_b: other_id,
                normals_b: theirs.normals.to_string(),
            });
        }
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateCheck {
    /// (a) cone normals primitive and unimodular
    ConeUnimodular,
    /// (b) full-rank chart into the cone off the walls
    ChartEmbedding,
    /// (c) fold criterion on the critical set
    FoldCriterion,
    /// (d) attach agrees across walls
    AttachConsistency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateFailure {
    pub region: i64,
    pub sample: Option<usize>,
    pub check: TemplateCheck,
    pub point: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallFold {
    pub region: i64,
    pub point: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateReport {
    pub failures: Vec<TemplateFailure>,
    pub fold_points: Vec<WallFold>,
    pub samples_checked: usize,
}

impl TemplateReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate_template(
    t: &FoldedTemplate,
    samples_per_region: usize,
    seed: u64,
    tol: &FoldTolerances,
) -> TemplateReport {
    let mut failures = Vec::new();
    let mut fold_points = Vec::new();
    let mut checked = 0;
    let samples = samples_per_region.max(1);
    for region in &t.regions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (region.id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let fail = |sample: Option<usize>, check, point: Option<Vec<f64>>, detail: String| TemplateFailure {
            region: region.id,
            sample,
            check,
            point,
            detail,
        };
        if let Err(e) = region.cone.check() {
            failures.push(fail(None, TemplateCheck::ConeUnimodular, None, e));
        }
        let walls: Vec<&FoldWall> = t.fold_walls.iter().filter(|w| w.touches(region.id)).collect();
        let on_wall = |p: &[f64], tol: f64| walls.iter().any(|w| w.value(p).is_some_and(|h| h.abs() <= tol));

        // (b)
        for (i, p) in region.domain.sample_interior(samples, &mut rng).into_iter().enumerate() {
            checked += 1;
            if on_wall(&p, 1e-6) {
                continue;
            }
            match region.chart.jacobian(&p) {
                Ok(j) => {
                    let (s, _) = linalg::right_svd(&j);
                    if s.last().map_or(true, |&m| m < tol.sigma_zero) {
                        failures.push(fail(
                            Some(i),
                            TemplateCheck::ChartEmbedding,
                            Some(p.clone()),
                            format!("chart differential has rank < {} off the fold walls", t.dim),
                        ));
                    }
                }
                Err(e) => failures.push(fail(Some(i), TemplateCheck::ChartEmbedding, Some(p.clone()), e.to_string())),
            }
            if let Ok(eta) = region.chart.eval(&p) {
                if let Ok(pr) = region.cone.pairings_f64(&eta) {
                    if pr.iter().any(|&x| x < -FACET_TOL) {
                        failures.push(fail(
                            Some(i),
                            TemplateCheck::ChartEmbedding,
                            Some(p.clone()),
                            format!("chart image {eta:?} outside the cone"),
                        ));
                    }
                }
            }
        }

        // (c)
        match is_fold_map(&region.chart, &region.domain, tol, samples, seed) {
            Ok(cert) => {
                match &cert.verdict {
                    FoldVerdict::IsFold | FoldVerdict::Regular => {}
                    FoldVerdict::NotFold(reason) => failures.push(fail(
                        None,
                        TemplateCheck::FoldCriterion,
                        None,
                        serde_json::to_string(reason).unwrap_or_default(),
                    )),
                    FoldVerdict::Inconclusive => failures.push(fail(
                        None,
                        TemplateCheck::FoldCriterion,
                        None,
                        "det of the chart differential changes sign but no zero was located".into(),
                    )),
                }
                if cert.verdict == FoldVerdict::IsFold {
                    for (i, fp) in cert.fold_points.iter().enumerate() {
                        if on_wall(&fp.point, 1e-6) {
                            fold_points.push(WallFold { region: region.id, point: fp.point.clone(), margin: fp.margin });
                        } else {
                            failures.push(fail(
                                Some(i),
                                TemplateCheck::FoldCriterion,
                                Some(fp.point.clone()),
                                "chart is critical away from every fold wall".into(),
                            ));
                        }
                    }
                }
            }
            Err(e) => failures.push(fail(None, TemplateCheck::FoldCriterion, None, e.to_string())),
        }
        for w in &walls {
            for (i, p) in region.domain.sample_on_hypersurface(w.function(), samples, &mut rng).into_iter().enumerate() {
                checked += 1;
                match crate::singularity::det_and_gradient(&region.chart, &p) {
                    Ok((d, _)) if d.abs() < tol.abs_tol => {}
                    Ok((d, _)) => failures.push(fail(
                        Some(i),
                        TemplateCheck::FoldCriterion,
                        Some(p.clone()),
                        format!("det of the chart differential is {d:.3e} on a fold wall"),
                    )),
                    Err(e) => failures.push(fail(Some(i), TemplateCheck::FoldCriterion, Some(p.clone()), e.to_string())),
                }
                // (d)
                if let Err(e) = attach_in(t, &p, Some(region.id)) {
                    failures.push(fail(Some(i), TemplateCheck::AttachConsistency, Some(p.clone()), e.to_string()));
                }
            }
        }
    }
    failures.sort_by(|a, b| {
        (a.region, a.sample, a.check).cmp(&(b.region, b.sample, b.check))
    });
    TemplateReport { failures, fold_points, samples_checked: checked }
}
