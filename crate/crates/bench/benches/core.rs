use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use foldkit_bench::{antisymmetric, integer_matrix};
use foldkit_core::cohom::{chern_class, h2, horizontal_class, CechCocycle, HorizontalOptions};
use foldkit_core::domain::Domain;
use foldkit_core::expr::VectorExpression;
use foldkit_core::fixtures;
use foldkit_core::form::{pfaffian_of, verify_folded, FoldedOptions, FormField};
use foldkit_core::hamiltonian::{classify_zero_level, ReduceOptions};
use foldkit_core::lattice::{extend_to_basis, smith_normal_form, validate_template};
use foldkit_core::singularity::{is_fold_map, FoldTolerances};
use num_rational::BigRational;
use num_traits::{One, Zero};

fn expressions(c: &mut Criterion) {
    let f = VectorExpression::parse(&["sqrt(1 - y^2 - z^2)*exp(y)", "sin(y*z) + z^3"], &["y", "z"]).unwrap();
    c.bench_function("jacobian 2x2", |b| b.iter(|| f.jacobian(black_box(&[0.2, -0.3])).unwrap()));
}

fn folds(c: &mut Criterion) {
    let (f, d) = fixtures::sphere_projection();
    let tol = FoldTolerances::default();
    c.bench_function("is_fold_map sphere chart", |b| b.iter(|| is_fold_map(&f, &d, &tol, 16, 7).unwrap()));
    let sigma = FormField::parse(&["x1", "x2", "x3", "x4"], &[(0, 1, "x1"), (2, 3, "1")]).unwrap();
    let box4 = Domain::unit_box(sigma.vars());
    let opts = FoldedOptions::default();
    c.bench_function("verify_folded 4d", |b| b.iter(|| verify_folded(&sigma, &box4, &opts).unwrap()));
}

fn pfaffians(c: &mut Criterion) {
    for n in [4, 6, 8] {
        let a = antisymmetric(n, n as u64);
        c.bench_function(&format!("pfaffian {n}x{n}"), |b| b.iter(|| pfaffian_of::<f64>(black_box(&a))));
    }
}

fn lattices(c: &mut Criterion) {
    let m = integer_matrix(4, 6);
    c.bench_function("smith normal form 4x6", |b| b.iter(|| smith_normal_form(black_box(&m))));
    let row = foldkit_core::lattice::LatticeMatrix::from_rows(vec![vec![3, 5, 7, 11]], 4).unwrap();
    c.bench_function("extend_to_basis 1x4", |b| b.iter(|| extend_to_basis(black_box(&row)).unwrap()));
    let strip = fixtures::strip_template();
    c.bench_function("validate strip template", |b| b.iter(|| validate_template(&strip, 32, 0, &FoldTolerances::default())));
}

fn cohomology(c: &mut Criterion) {
    let k = fixtures::octahedron();
    c.bench_function("h2 octahedron", |b| b.iter(|| h2(&k, 2, true)));
    let mut cocycle = CechCocycle::new(k.clone(), 2);
    for e in k.simplices(1) {
        cocycle.set(e[0], e[1], vec![BigRational::zero(), BigRational::zero()]);
    }
    cocycle.set_on_triangle(&[0, 1, 2], 0, 1, vec![BigRational::one(), BigRational::zero()]);
    c.bench_function("chern_class octahedron", |b| b.iter(|| chern_class(&cocycle).unwrap()));
    let s = fixtures::sphere_bundle();
    let opts = HorizontalOptions::default();
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("horizontal_class sphere", |b| {
        b.iter(|| horizontal_class(&s.sigma, &s.chart.connection, &s.chart.psi, &s.chart.fiber_vars, &s.cycles, &opts).unwrap())
    });
    let r = fixtures::rotation_reduction();
    group.bench_function("classify_zero_level rotation", |b| {
        b.iter(|| classify_zero_level(&r.sigma, &r.action, &r.moment, &r.seeds, &ReduceOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, expressions, folds, pfaffians, lattices, cohomology);
criterion_main!(benches);
