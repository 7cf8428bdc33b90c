//! Verification and construction toolkit for toric folded-symplectic
//! geometry: fold singularities of maps and 2-forms, unimodular cones and
//! folded templates, moment maps and reduction, and the cohomological
//! invariants that classify toric folded-symplectic bundles.

pub mod expr;
pub mod domain;
pub(crate) mod linalg;
pub mod singularity;
pub mod lattice;
pub mod fixtures;
pub mod form;
pub mod hamiltonian;
pub mod cohom;
pub mod models;

pub use cohom::{CechCocycle, CochainClass, Cycle, SimplicialComplex};
pub use domain::Domain;
pub use expr::{Expr, VectorExpression};
pub use form::{FormField, OneForm};
pub use hamiltonian::{MomentMap, TorusAction};
pub use lattice::{FoldedTemplate, LatticeMatrix, UnimodularCone};
pub use models::{BundleChart, CutChart, CutPoint};
pub use singularity::FoldTolerances;
