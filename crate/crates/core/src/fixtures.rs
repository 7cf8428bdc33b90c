//! The closed-form fixtures used by the test suites, benches and CLI
//! examples. JSON sources live in `crates/core/fixtures/`.

use serde::Deserialize;

use crate::cohom::{ComplexSpec, Cycle, CycleSpec, SimplicialComplex};
use crate::domain::Domain;
use crate::expr::VectorExpression;
use crate::models::{BundleChart, BundleSpec};
use crate::form::{FormField, FormSpec};
use crate::hamiltonian::{ActionSpec, MomentMap, MomentSpec, TorusAction};
use crate::lattice::FoldedTemplate;

pub const QUADRANT_JSON: &str = include_str!("../fixtures/quadrant.json");
pub const STRIP_JSON: &str = include_str!("../fixtures/strip.json");
pub const DISK_JSON: &str = include_str!("../fixtures/disk.json");
pub const HALF_PLANE_JSON: &str = include_str!("../fixtures/halfplane_bad.json");
pub const INCONSISTENT_JSON: &str = include_str!("../fixtures/inconsistent.json");

fn template(text: &str) -> FoldedTemplate {
    FoldedTemplate::from_json(text).expect("fixture parses")
}

/// The positive quadrant with the identity chart.
pub fn quadrant_template() -> FoldedTemplate {
    template(QUADRANT_JSON)
}

/// `ψ(x,t) = (x,t²)` on two regions glued along the fold wall `t = 0`.
pub fn strip_template() -> FoldedTemplate {
    template(STRIP_JSON)
}

/// Identity chart on the unit disk, mapping into a cone interior.
pub fn disk_template() -> FoldedTemplate {
    template(DISK_JSON)
}

/// `ψ(x,y) = (x,y²)` on `{y ≥ 0}`: critical on the boundary stratum only.
pub fn half_plane_template() -> FoldedTemplate {
    template(HALF_PLANE_JSON)
}

/// Two regions whose facets through the wall carry normals `(1,0)` and `(1,1)`.
pub fn inconsistent_template() -> FoldedTemplate {
    template(INCONSISTENT_JSON)
}

/// A form, torus action, moment map and level-set seeds.
pub struct ReductionFixture {
    pub sigma: FormField,
    pub action: TorusAction,
    pub moment: MomentMap,
    pub seeds: Vec<Vec<f64>>,
}

macro_rules! reduce_json {
    ($name:literal) => {
        [
            include_str!(concat!("../fixtures/reduce/", $name, "_form.json")),
            include_str!(concat!("../fixtures/reduce/", $name, "_action.json")),
            include_str!(concat!("../fixtures/reduce/", $name, "_moment.json")),
            include_str!(concat!("../fixtures/reduce/", $name, "_seeds.json")),
        ]
    };
}

pub const SPHERE_REDUCTION_JSON: [&str; 4] = reduce_json!("sphere");
pub const ROTATION_REDUCTION_JSON: [&str; 4] = reduce_json!("rotation");
pub const CROSSING_REDUCTION_JSON: [&str; 4] = reduce_json!("crossing");

fn reduction(files: [&str; 4]) -> ReductionFixture {
    let form: FormSpec = serde_json::from_str(files[0]).expect("form fixture");
    let action: ActionSpec = serde_json::from_str(files[1]).expect("action fixture");
    let moment: MomentSpec = serde_json::from_str(files[2]).expect("moment fixture");
    ReductionFixture {
        sigma: FormField::from_spec(&form).expect("form fixture"),
        action: TorusAction::from_spec(&action).expect("action fixture"),
        moment: MomentMap::from_spec(&moment).expect("moment fixture"),
        seeds: serde_json::from_str(files[3]).expect("seeds fixture"),
    }
}

/// Sphere chart `(φ, z)` with the pulled-back area form `z dφ∧dz`, rotation
/// `−∂φ` and `μ = z²/2`; the zero level is the equator, which is the fold.
pub fn sphere_reduction() -> ReductionFixture {
    reduction(SPHERE_REDUCTION_JSON)
}

/// `x1 dx1∧dx2 + dx3∧dx4` with rotation in `(x3, x4)` and
/// `μ = (x3² + x4²)/2 − 1`; the level crosses the fold `x1 = 0`.
pub fn rotation_reduction() -> ReductionFixture {
    reduction(ROTATION_REDUCTION_JSON)
}

/// `(r−1) dy∧dθ + y dr∧dθ + dx∧dy + dx∧dr` with `∂θ` and `μ = y(r−1)`:
/// the zero level is the union of `{y = 0}` and `{r = 1}`.
pub fn crossing_reduction() -> ReductionFixture {
    reduction(CROSSING_REDUCTION_JSON)
}

pub const OCTAHEDRON_JSON: &str = include_str!("../fixtures/complexes/octahedron.json");
pub const PROJECTIVE_PLANE_JSON: &str = include_str!("../fixtures/complexes/rp2.json");
pub const TORUS_JSON: &str = include_str!("../fixtures/complexes/torus.json");

fn complex(text: &str) -> SimplicialComplex {
    let spec: ComplexSpec = serde_json::from_str(text).expect("complex fixture");
    SimplicialComplex::from_spec(&spec).expect("complex fixture")
}

/// Boundary of the octahedron: apexes 0 and 5 over the square 1-2-3-4.
pub fn octahedron() -> SimplicialComplex {
    complex(OCTAHEDRON_JSON)
}

/// The six-vertex real projective plane.
pub fn projective_plane() -> SimplicialComplex {
    complex(PROJECTIVE_PLANE_JSON)
}

/// The 3×3 grid torus, vertex `(i, j)` numbered `3i + j`.
pub fn torus() -> SimplicialComplex {
    complex(TORUS_JSON)
}

pub const SPHERE_CHART_JSON: &str = include_str!("../fixtures/bundle/sphere_chart.json");
pub const SPHERE_CHART_SHIFTED_JSON: &str = include_str!("../fixtures/bundle/sphere_chart_shifted.json");
pub const SPHERE_FORM_JSON: &str = include_str!("../fixtures/bundle/sphere_form.json");
pub const SPHERE_CYCLES_JSON: &str = include_str!("../fixtures/bundle/sphere_cycles.json");

/// Coefficient of the area form in [`sphere_bundle`]; the period is `4πc`.
pub const SPHERE_AREA_COEFFICIENT: f64 = 0.3;

#[derive(Deserialize)]
struct CycleList {
    cycles: Vec<CycleSpec>,
}

pub fn parse_cycles(text: &str) -> Vec<Cycle> {
    let list: CycleList = serde_json::from_str(text).expect("cycle fixture");
    list.cycles.iter().map(|c| Cycle::from_spec(c).expect("cycle fixture")).collect()
}

/// Bundle over a neighbourhood of `S² ⊂ ℝ³` with `ψ = (x, y)`, which folds
/// along the equator, carrying `σ = d⟨ψ∘π, A⟩ + c·(area form)/r³`.
pub struct SphereBundle {
    pub chart: BundleChart,
    /// Same `ψ` with `A' = A + d(xy, z²)`.
    pub shifted: BundleChart,
    pub sigma: FormField,
    pub cycles: Vec<Cycle>,
}

pub fn sphere_bundle() -> SphereBundle {
    let chart = |t: &str| BundleChart::from_spec(&serde_json::from_str::<BundleSpec>(t).expect("chart")).expect("chart");
    let form: FormSpec = serde_json::from_str(SPHERE_FORM_JSON).expect("form fixture");
    SphereBundle {
        chart: chart(SPHERE_CHART_JSON),
        shifted: chart(SPHERE_CHART_SHIFTED_JSON),
        sigma: FormField::from_spec(&form).expect("form fixture"),
        cycles: parse_cycles(SPHERE_CYCLES_JSON),
    }
}

/// Projection of the hemisphere `x > 0` of `S²` to the `(x, y)` plane in
/// the chart `(y, z)`; folds along `z = 0`.
pub fn sphere_projection() -> (VectorExpression, Domain) {
    let f = VectorExpression::parse(&["sqrt(1 - y^2 - z^2)", "y"], &["y", "z"]).expect("chart");
    (f, Domain::new(&["y", "z"], vec![(-0.6, 0.6), (-0.6, 0.6)]))
}
