//! The ten acceptance criteria, each run at its stated tolerance. Every
//! criterion prints one PASS/FAIL line; the test fails if any criterion does.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foldkit_core::cohom::{
    chern_class, classify_pair, h2, horizontal_class, CechCocycle, CochainClass, HorizontalOptions, SimplicialComplex,
};
use foldkit_core::domain::Domain;
use foldkit_core::expr::{parse, VectorExpression};
use foldkit_core::fixtures;
use foldkit_core::form::{
    induced_orientation, induced_orientation_with_extensions, pfaffian_of, solve_contraction, verify_folded, FoldedOptions,
    FormError, FormField, OneForm,
};
use foldkit_core::hamiltonian::{classify_zero_level, verify_hamiltonian, ReduceOptions, ReducedForm, ReductionVerdict};
use foldkit_core::lattice::{
    attach, attach_in, extend_to_basis, is_unimodular_basis, FoldedTemplate, LatticeError, LatticeMatrix,
};
use foldkit_core::models::{
    canonical_form, canonical_representative, cut_moment, cut_section_and_alpha, cut_transition, folded_cotangent_form,
    minimal_coupling, BundleChart, CutChart,
};
use foldkit_core::singularity::{is_fold_map, FoldTolerances, FoldVerdict, NotFoldReason};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fs3(blocks: usize) -> FormField {
    let vars: Vec<String> = (1..=2 * blocks).map(|i| format!("x{i}")).collect();
    let mut e = vec![(0, 1, "x1")];
    for b in 1..blocks {
        e.push((2 * b, 2 * b + 1, "1"));
    }
    FormField::parse(&vars, &e).unwrap()
}

fn box_samples(n: usize, count: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| r.gen_range(-0.9..0.9)).collect()).collect()
}

fn criterion_1() -> Outcome {
    let tol = FoldTolerances::default();
    let plane = Domain::unit_box(&["x", "y"]);
    let (sphere, sphere_domain) = fixtures::sphere_projection();
    let cases: Vec<(&str, VectorExpression, Domain, bool)> = vec![
        ("(x,y^2)", VectorExpression::parse(&["x", "y^2"], &["x", "y"]).unwrap(), plane.clone(), true),
        (
            "(x,y^2) on y>=0",
            VectorExpression::parse(&["x", "y^2"], &["x", "y"]).unwrap(),
            plane.clone().with_inequalities(vec![parse("y").unwrap()]).unwrap(),
            false,
        ),
        ("(x,y^3)", VectorExpression::parse(&["x", "y^3"], &["x", "y"]).unwrap(), plane.clone(), false),
        ("sphere chart", sphere, sphere_domain, true),
    ];
    let mut worst_time: f64 = 0.0;
    for (name, f, d, expect_fold) in cases {
        let start = Instant::now();
        let cert = is_fold_map(&f, &d, &tol, 16, 7).map_err(|e| format!("{name}: {e}"))?;
        let secs = start.elapsed().as_secs_f64();
        worst_time = worst_time.max(secs);
        ensure!(secs < 1.0, "{name} took {secs:.2}s");
        if expect_fold {
            ensure!(cert.verdict == FoldVerdict::IsFold, "{name}: {:?}", cert.verdict);
            ensure!(!cert.fold_points.is_empty(), "{name}: no fold points");
            for p in &cert.fold_points {
                ensure!(p.det.abs() < 1e-8, "{name}: |det| = {:e}", p.det);
                ensure!(p.margin > 1e-4, "{name}: margin {:e}", p.margin);
            }
            if name == "sphere chart" {
                ensure!(cert.fold_points.iter().all(|p| p.point[1].abs() < 1e-8), "sphere fold off z = 0");
            }
        } else {
            ensure!(matches!(cert.verdict, FoldVerdict::NotFold(_)), "{name}: {:?}", cert.verdict);
        }
        if name == "(x,y^2) on y>=0" {
            ensure!(
                matches!(cert.verdict, FoldVerdict::NotFold(NotFoldReason::NotTransverseInStratum { .. })),
                "half plane reason {:?}",
                cert.verdict
            );
        }
    }
    Ok(format!("4 fixtures, slowest {worst_time:.3}s"))
}

fn random_antisymmetric(n: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = r.gen_range(-1.0..1.0);
            a[i][j] = v;
            a[j][i] = -v;
        }
    }
    a
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for n in [4, 6] {
        for _ in 0..1000 {
            let a = random_antisymmetric(n, &mut r);
            let pf: f64 = pfaffian_of(&a);
            let det = DMatrix::from_fn(n, n, |i, j| a[i][j]).lu().determinant();
            let rel = (pf * pf - det).abs() / det.abs().max(1e-300);
            worst = worst.max(rel);
        }
    }
    ensure!(worst < 1e-9, "Pf^2 vs det relative error {worst:e}");

    let opts = FoldedOptions::default();
    let mut passed = Vec::new();
    for blocks in [2, 3] {
        let s = fs3(blocks);
        let d = verify_folded(&s, &Domain::unit_box(s.vars()), &opts).map_err(|e| format!("fs3 n={blocks}: {e}"))?;
        ensure!(!d.fold_points.is_empty(), "fs3 n={blocks}: no fold points");
        passed.push(format!("fs3 n={blocks}"));
    }
    let cyl = FormField::parse(&["t", "theta"], &[(0, 1, "2*t")]).unwrap();
    let d = verify_folded(&cyl, &Domain::new(&["t", "theta"], vec![(-1.0, 1.0), (0.0, 6.0)]), &opts)
        .map_err(|e| format!("cylinder: {e}"))?;
    ensure!(!d.fold_points.is_empty(), "cylinder: no fold points");
    for n in [1, 2] {
        let s = folded_cotangent_form(n).unwrap();
        let d = verify_folded(&s, &Domain::unit_box(s.vars()), &opts).map_err(|e| format!("cotangent n={n}: {e}"))?;
        ensure!(!d.fold_points.is_empty(), "cotangent n={n}: no fold points");
    }
    let bad = FormField::parse(&["x1", "x2", "x3", "x4"], &[(0, 1, "x1^2"), (2, 3, "1")]).unwrap();
    let res = verify_folded(&bad, &Domain::unit_box(bad.vars()), &opts);
    ensure!(matches!(res, Err(FormError::DegenerateVanishing { .. })), "x1^2 form: {res:?}");
    Ok(format!("Pf^2=det worst rel err {worst:.1e}; fs3 n=2,3, cylinder, cotangent n=1,2 pass; x1^2 rejected"))
}

fn constant_form(vars: &[String], c: &[f64]) -> OneForm {
    let coeffs: Vec<String> = c.iter().map(|v| format!("{v:.12}")).collect();
    OneForm::parse(vars, &coeffs.iter().map(String::as_str).collect::<Vec<_>>()).unwrap()
}

fn criterion_3() -> Outcome {
    let base = FormField::parse(&["x1", "x2"], &[(0, 1, "x1")]).unwrap();
    let dx1 = OneForm::parse(&["x1", "x2"], &["1", "0"]).unwrap();
    let mut r = rng(3);
    for _ in 0..50 {
        let fold = [0.0, r.gen_range(-1.0..1.0)];
        ensure!(
            matches!(solve_contraction(&base, &dx1, &fold, 1e-9), Err(FormError::Unsolvable { .. })),
            "dx1 at fold {fold:?} not rejected"
        );
        let mut off = [r.gen_range(0.05..1.0), r.gen_range(-1.0..1.0)];
        if r.gen_bool(0.5) {
            off[0] = -off[0];
        }
        ensure!(solve_contraction(&base, &dx1, &off, 1e-9).is_ok(), "dx1 off the fold at {off:?} rejected");
    }
    let x1dx1 = OneForm::parse(&["x1", "x2"], &["x1", "0"]).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let sol = solve_contraction(&base, &x1dx1, &p, 1e-9).map_err(|e| format!("x1 dx1 at {p:?}: {e}"))?;
        worst = worst.max(sol.residual);
    }
    let sol = solve_contraction(&base, &x1dx1, &[0.0, 0.3], 1e-9).map_err(|e| format!("x1 dx1 on fold: {e}"))?;
    worst = worst.max(sol.residual);
    ensure!(worst < 1e-10, "x1 dx1 residual {worst:e}");

    let s = fs3(2);
    let vars = s.vars().to_vec();
    let (mut solvable, mut rejected) = (0, 0);
    for _ in 0..200 {
        let p = [0.0, r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        // ker σ_p = span(∂1, ∂2) on the fold.
        let good = [0.0, 0.0, r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let sol = solve_contraction(&s, &constant_form(&vars, &good), &p, 1e-9).map_err(|e| format!("good β: {e}"))?;
        ensure!(sol.residual < 1e-10, "good β residual {:e}", sol.residual);
        solvable += 1;
        let mut bad = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        if bad[0].abs() + bad[1].abs() < 0.1 {
            bad[0] = 0.5;
        }
        let res = solve_contraction(&s, &constant_form(&vars, &bad), &p, 1e-9);
        ensure!(matches!(res, Err(FormError::Unsolvable { .. })), "bad β {bad:?} at {p:?}: {res:?}");
        rejected += 1;
    }
    Ok(format!("obstruction exact; x1 dx1 residual {worst:.1e}; {solvable}/200 solvable, {rejected}/200 rejected"))
}

fn criterion_4() -> Outcome {
    let s = fs3(2);
    let vars = s.vars().to_vec();
    let mut r = rng(4);
    let z = [0.0, 0.25, -0.5, 0.125];
    let v = [0.0, 1.0, 0.0, 0.0];
    let w = [1.0, 0.0, 0.0, 0.0];
    let reference = induced_orientation(&s, &z, &v, &w).map_err(|e| e.to_string())?;
    ensure!(induced_orientation(&s, &z, &[0.0, -1.0, 0.0, 0.0], &w).map_err(|e| e.to_string())? == -reference, "no flip");
    // Extensions agree with the frame at z and are otherwise arbitrary.
    let bump = |r: &mut ChaCha8Rng| -> String {
        let (i, j) = (r.gen_range(0..4), r.gen_range(0..4));
        let c: f64 = r.gen_range(-2.0..2.0);
        format!("{c:.6}*(x{} - {:.6})*(1 + x{}^2)", i + 1, z[i], j + 1)
    };
    for _ in 0..50 {
        let mut lambda: f64 = r.gen_range(0.2..5.0);
        if r.gen_bool(0.5) {
            lambda = -lambda;
        }
        let kappa: f64 = r.gen_range(0.2..5.0);
        let w_ext: Vec<String> = (0..4)
            .map(|i| format!("{:.6} + {}", lambda * w[i], bump(&mut r)))
            .collect();
        let v_ext: Vec<String> = (0..4).map(|i| format!("{:.6} + {}", kappa * v[i], bump(&mut r))).collect();
        let w_ext = VectorExpression::parse(&w_ext, &vars).unwrap();
        let v_ext = VectorExpression::parse(&v_ext, &vars).unwrap();
        let sgn = induced_orientation_with_extensions(&s, &z, &w_ext, &v_ext).map_err(|e| e.to_string())?;
        ensure!(sgn == reference, "extension changed the sign");
        let v_neg = VectorExpression::new(v_ext.components().iter().map(|e| -e.clone()).collect(), &vars).unwrap();
        let flipped = induced_orientation_with_extensions(&s, &z, &w_ext, &v_neg).map_err(|e| e.to_string())?;
        ensure!(flipped == -reference, "v -> -v did not flip");
    }
    Ok(format!("sign {reference:+} stable over 50 extensions, flips with v"))
}

fn minors_gcd(rows: &[Vec<i64>]) -> (bool, BigInt) {
    let k = rows.len();
    let n = rows[0].len();
    let mut g = BigInt::zero();
    let cols: Vec<Vec<usize>> = if k == 2 {
        (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).collect()
    } else {
        (0..n).map(|a| vec![a]).collect()
    };
    for c in cols {
        let m = if k == 2 {
            rows[0][c[0]] * rows[1][c[1]] - rows[0][c[1]] * rows[1][c[0]]
        } else {
            rows[0][c[0]]
        };
        g = g.gcd(&BigInt::from(m));
    }
    (!g.is_zero(), g)
}

fn criterion_5() -> Outcome {
    let mut checked = 0usize;
    let mut extended = 0usize;
    for n in [2usize, 3] {
        let total = 7usize.pow(2 * n as u32);
        for code in 0..total {
            let mut c = code;
            let mut flat = Vec::with_capacity(2 * n);
            for _ in 0..2 * n {
                flat.push((c % 7) as i64 - 3);
                c /= 7;
            }
            let rows = vec![flat[..n].to_vec(), flat[n..].to_vec()];
            let (full_rank, g) = minors_gcd(&rows);
            let expect = full_rank && g.is_one();
            let m = LatticeMatrix::from_rows(rows.clone(), n).unwrap();
            let got = match is_unimodular_basis(&m) {
                Ok(b) => b,
                Err(LatticeError::RankDeficient { .. }) => false,
                Err(e) => return Err(format!("{rows:?}: {e}")),
            };
            ensure!(got == expect, "{rows:?}: tool {got}, minors oracle {expect}");
            checked += 1;
            if got {
                let e = extend_to_basis(&m).map_err(|e| format!("{rows:?}: {e}"))?;
                ensure!(e.det().abs().is_one(), "{rows:?}: completion has det {}", e.det());
                ensure!(e.row(0) == m.row(0) && e.row(1) == m.row(1), "{rows:?}: completion changed the rows");
                extended += 1;
            }
        }
    }
    Ok(format!("{checked} matrices agree with the minors oracle; {extended} completions with |det| = 1"))
}

fn strata_attach(t: &FoldedTemplate, r: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut total = 0;
    for region in &t.regions {
        let m = region.domain.inequalities().len();
        for mask in 0u32..(1 << m) {
            let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let pts = if active.is_empty() {
                region.domain.sample_interior(100, r)
            } else {
                region.domain.sample_stratum(&active, 100, r)
            };
            ensure!(pts.len() >= 50, "region {} stratum {active:?}: only {} samples", region.id, pts.len());
            let mut first: Option<LatticeMatrix> = None;
            for p in &pts {
                let a = attach_in(t, p, Some(region.id)).map_err(|e| format!("attach at {p:?}: {e}"))?;
                ensure!(a.normals.nrows() == active.len() || !region.domain.side_filters().is_empty(), "rank mismatch at {p:?}");
                match &first {
                    None => first = Some(a.normals.clone()),
                    Some(f) => ensure!(*f == a.normals, "attach changes along stratum {active:?} at {p:?}"),
                }
                total += 1;
            }
        }
    }
    Ok(total)
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let quadrant = fixtures::quadrant_template();
    let strip = fixtures::strip_template();
    let n1 = strata_attach(&quadrant, &mut r)?;
    let n2 = strata_attach(&strip, &mut r)?;
    let mut wall = 0;
    for _ in 0..100 {
        let w = [r.gen_range(-0.95..0.95), 0.0];
        let a = attach_in(&strip, &w, Some(1)).map_err(|e| e.to_string())?;
        let b = attach_in(&strip, &w, Some(2)).map_err(|e| e.to_string())?;
        ensure!(a.normals == b.normals, "wall sides disagree at {w:?}");
        ensure!(a.normals == LatticeMatrix::from_rows(vec![vec![0, 1]], 2).unwrap(), "wall normals {}", a.normals);
        wall += 1;
    }
    let bad = fixtures::inconsistent_template();
    let res = attach(&bad, &[0.3, 0.0]);
    ensure!(matches!(res, Err(LatticeError::InconsistentTemplate { .. })), "inconsistent template accepted: {res:?}");
    Ok(format!("{} stratum samples constant, {wall} wall points agree, inconsistent template rejected", n1 + n2))
}

fn octahedron_cocycle() -> CechCocycle {
    let k = fixtures::octahedron();
    let mut c = CechCocycle::new(k.clone(), 2);
    let z = || BigRational::zero();
    for e in k.simplices(1) {
        c.set(e[0], e[1], vec![z(), z()]);
    }
    c.set_on_triangle(&[0, 1, 2], 0, 1, vec![BigRational::one(), z()]);
    c
}

fn criterion_7() -> Outcome {
    let s2 = h2(&fixtures::octahedron(), 2, true);
    ensure!(s2.free_rank == 2 && s2.torsion.is_empty() && s2.real_rank == Some(1), "S²: {s2:?}");
    let rp2 = h2(&fixtures::projective_plane(), 1, true);
    ensure!(rp2.free_rank == 0 && rp2.torsion == vec![2], "RP²: {rp2:?}");
    let point = h2(&SimplicialComplex::new(&[vec![0]]).unwrap(), 1, true);
    ensure!(point.free_rank == 0 && point.torsion.is_empty() && point.real_rank == Some(0), "point: {point:?}");

    let base = octahedron_cocycle();
    let reference = chern_class(&base).map_err(|e| e.to_string())?;
    ensure!(reference.free_part == vec![1, 0], "winding class {:?}", reference.free_part);
    let mut r = rng(7);
    let vertices: Vec<i64> = base.nerve.simplices(0).iter().map(|v| v[0]).collect();
    for _ in 0..100 {
        let f: Vec<[i64; 2]> = vertices.iter().map(|_| [r.gen_range(-5..=5), r.gen_range(-5..=5)]).collect();
        let mut c = base.clone();
        let shift = |v: &mut Vec<BigRational>, i: i64, j: i64| {
            let (a, b) = (vertices.iter().position(|&x| x == i).unwrap(), vertices.iter().position(|&x| x == j).unwrap());
            for s in 0..2 {
                v[s] += BigRational::from_integer(BigInt::from(f[b][s] - f[a][s]));
            }
        };
        for ((i, j), v) in c.lifts.iter_mut() {
            shift(v, *i, *j);
        }
        for ((_, (i, j)), v) in c.triangle_lifts.iter_mut() {
            shift(v, *i, *j);
        }
        // An integral 1-cochain changes δ lift by a coboundary; it must hit
        // every copy of an edge, overrides included.
        let m: std::collections::BTreeMap<(i64, i64), i64> =
            c.lifts.keys().map(|e| (*e, r.gen_range(-3..=3))).collect();
        for (e, v) in c.lifts.iter_mut() {
            v[0] += BigRational::from_integer(BigInt::from(m[e]));
        }
        for ((_, e), v) in c.triangle_lifts.iter_mut() {
            v[0] += BigRational::from_integer(BigInt::from(m[e]));
        }
        let cls = chern_class(&c).map_err(|e| e.to_string())?;
        ensure!(cls.free_part == reference.free_part && cls.torsion_part == reference.torsion_part, "class moved");
    }

    let b = fixtures::sphere_bundle();
    let opts = HorizontalOptions::default();
    let p1 = horizontal_class(&b.sigma, &b.chart.connection, &b.chart.psi, &b.chart.fiber_vars, &b.cycles, &opts)
        .map_err(|e| e.to_string())?;
    let p2 = horizontal_class(&b.sigma, &b.shifted.connection, &b.shifted.psi, &b.shifted.fiber_vars, &b.cycles, &opts)
        .map_err(|e| e.to_string())?;
    let expect = 4.0 * PI * fixtures::SPHERE_AREA_COEFFICIENT;
    ensure!((p1.periods[0] - p2.periods[0]).abs() < 1e-6, "periods {:?} vs {:?}", p1.periods, p2.periods);
    ensure!((p1.periods[0] - expect).abs() < 1e-6, "period {} vs 4πc = {expect}", p1.periods[0]);

    let chor = |p: &[f64]| CochainClass::from_periods("sphere", p.to_vec());
    let trivial = chern_class(&{
        let mut c = base.clone();
        c.triangle_lifts.clear();
        c
    })
    .map_err(|e| e.to_string())?;
    let same = classify_pair(&reference, &chor(&p1.periods), &reference, &chor(&p2.periods)).map_err(|e| e.to_string())?;
    let c1_differs = classify_pair(&reference, &chor(&p1.periods), &trivial, &chor(&p1.periods)).map_err(|e| e.to_string())?;
    let shifted = [p1.periods[0] + 1e-3];
    let chor_differs = classify_pair(&reference, &chor(&p1.periods), &reference, &chor(&shifted)).map_err(|e| e.to_string())?;
    ensure!(same && !c1_differs && !chor_differs, "classify_pair: {same} {c1_differs} {chor_differs}");
    Ok(format!(
        "H²(S²;Z²)=Z², H²(RP²;Z)=Z/2, H²(pt)=0; c1 stable under 100 gauge changes; periods {:.9} / {:.9} (4πc = {expect:.9})",
        p1.periods[0], p2.periods[0]
    ))
}

fn criterion_8() -> Outcome {
    let run = |f: fixtures::ReductionFixture| {
        classify_zero_level(&f.sigma, &f.action, &f.moment, &f.seeds, &ReduceOptions::default()).map_err(|e| e.to_string())
    };
    let sphere = run(fixtures::sphere_reduction())?;
    ensure!(
        sphere.verdict == ReductionVerdict::ContainedInFold && sphere.reduced == Some(ReducedForm::Symplectic),
        "sphere: {:?}",
        sphere.verdict
    );
    let rot = run(fixtures::rotation_reduction())?;
    ensure!(
        rot.verdict == ReductionVerdict::TransverseToFold && rot.reduced == Some(ReducedForm::Folded),
        "rotation: {:?}",
        rot.verdict
    );
    let cross = run(fixtures::crossing_reduction())?;
    ensure!(matches!(cross.verdict, ReductionVerdict::NotRegular { .. }), "counterexample: {:?}", cross.verdict);
    Ok("equator ContainedInFold/Symplectic, rotation TransverseToFold/Folded, counterexample NotRegular".into())
}

fn criterion_9() -> Outcome {
    let t = fixtures::quadrant_template();
    let corner = CutChart::from_template(&t, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let edge = CutChart::from_template(&t, &[0.5, 0.0]).map_err(|e| e.to_string())?;
    let inside = CutChart::from_template(&t, &[0.5, 0.5]).map_err(|e| e.to_string())?;
    ensure!((corner.rank(), edge.rank(), inside.rank()) == (2, 1, 0), "chart ranks");
    let mut r = rng(9);
    let (mut level, mut commute, mut cocycle) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = vec![r.gen_range(0.0..1.0), r.gen_range(0.0..1.0), r.gen_range(-PI..PI), r.gen_range(-PI..PI)];
        let a = cut_section_and_alpha(&corner, &p).map_err(|e| e.to_string())?;
        level = cut_moment(&corner, &a).unwrap().iter().fold(level, |m, v| m.max(v.abs()));

        let q = vec![r.gen_range(0.01..1.0), r.gen_range(0.0..1.0), p[2], p[3]];
        let via = cut_transition(&edge, &corner, &cut_section_and_alpha(&edge, &q).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let direct = cut_section_and_alpha(&corner, &q).map_err(|e| e.to_string())?;
        commute = commute.max(distance(&via, &direct));

        let q = vec![r.gen_range(0.01..1.0), r.gen_range(0.01..1.0), p[2], p[3]];
        let mut x = cut_section_and_alpha(&corner, &q).map_err(|e| e.to_string())?;
        for z in x.z.iter_mut() {
            let phase: f64 = r.gen_range(-PI..PI);
            *z = (z.0 * phase.cos(), z.0 * phase.sin());
        }
        let step1 = cut_transition(&corner, &inside, &x).map_err(|e| e.to_string())?;
        let step2 = cut_transition(&inside, &edge, &step1).map_err(|e| e.to_string())?;
        let back = cut_transition(&edge, &corner, &step2).map_err(|e| e.to_string())?;
        cocycle = cocycle.max(distance(&back, &canonical_representative(&corner, &x)));
    }
    ensure!(level < 1e-12, "level residual {level:e}");
    ensure!(commute < 1e-10, "commutation {commute:e}");
    ensure!(cocycle < 1e-10, "triple overlap {cocycle:e}");
    Ok(format!("level {level:.1e}, commutation {commute:.1e}, triple overlap {cocycle:.1e}"))
}

fn distance(a: &foldkit_core::models::CutPoint, b: &foldkit_core::models::CutPoint) -> f64 {
    let dp = a.p.iter().zip(&b.p).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    a.z.iter().zip(&b.z).fold(dp, |m, (x, y)| m.max((x.0 - y.0).abs()).max((x.1 - y.1).abs()))
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let strip = BundleChart::standard(VectorExpression::parse(&["x", "t^2"], &["x", "t"]).unwrap()).unwrap();
    let ident = BundleChart::standard(VectorExpression::parse(&["x", "y"], &["x", "y"]).unwrap()).unwrap();
    let vars = ["x", "t", "theta1", "theta2"];
    let bent = BundleChart::new(
        vec!["x".into(), "t".into()],
        vec!["theta1".into(), "theta2".into()],
        VectorExpression::parse(&["x", "t^2"], &["x", "t"]).unwrap(),
        vec![OneForm::parse(&vars, &["0", "x", "1", "0"]).unwrap(), OneForm::parse(&vars, &["0", "0", "0", "1"]).unwrap()],
    )
    .unwrap();
    let beta = FormField::parse(&["x", "t"], &[(0, 1, "1 + x*t")]).unwrap();
    let sphere = fixtures::sphere_bundle();
    let charts: Vec<(&BundleChart, Option<&FormField>)> =
        vec![(&strip, None), (&strip, Some(&beta)), (&ident, None), (&bent, None), (&bent, Some(&beta)), (&sphere.chart, None), (&sphere.shifted, None)];
    for (chart, beta) in charts {
        let s = canonical_form(chart, beta).map_err(|e| e.to_string())?;
        let rep = verify_hamiltonian(&s, &chart.action(), &chart.moment(), &box_samples(s.dim(), 20, &mut r))
            .map_err(|e| e.to_string())?;
        worst = worst.max(rep.moment_residual).max(rep.invariance_residual);
        count += 1;
    }
    let folded = FormField::parse(&["x1", "x2"], &[(0, 1, "x1")]).unwrap();
    let symplectic = FormField::parse(&["x1", "x2"], &[(0, 1, "1")]).unwrap();
    let principal = ["x1", "x2", "theta"];
    let twisted = OneForm::parse(&principal, &["0", "x1", "1"]).unwrap();
    let fiber = vec!["theta".to_string()];
    let eta = vec!["eta".to_string()];
    for (sigma, a) in [(&folded, None), (&symplectic, None), (&folded, Some(vec![twisted.clone()]))] {
        let m = minimal_coupling(sigma, &fiber, a.as_deref(), &eta).map_err(|e| e.to_string())?;
        let pts = box_samples(4, 20, &mut r);
        let rep = verify_hamiltonian(&m.form, &m.action, &m.moment, &pts).map_err(|e| e.to_string())?;
        worst = worst.max(rep.moment_residual).max(rep.invariance_residual);
        // i_{∂θ} Ω = dη, so the moment is −η.
        for p in &pts {
            let c = m.form.contract(&[0.0, 0.0, 1.0, 0.0], p).unwrap();
            let err = c.iter().zip([0.0, 0.0, 0.0, 1.0]).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            ensure!(err < 1e-12, "i_θ Ω differs from dη by {err:e}");
        }
        count += 1;
    }
    ensure!(worst < 1e-8, "worst residual {worst:e}");
    Ok(format!("{count} fixtures, worst residual {worst:.1e}; coupling moment is -η"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fold criterion", criterion_1),
        ("pfaffian and folded forms", criterion_2),
        ("contraction solvability", criterion_3),
        ("orientation", criterion_4),
        ("lattice", criterion_5),
        ("attach", criterion_6),
        ("classification", criterion_7),
        ("reduction", criterion_8),
        ("cutting", criterion_9),
        ("hamiltonian and minimal coupling", criterion_10),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{name}] ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL [{name}] ({secs:.2}s) {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    println!("acceptance: {}/10 passed in {:.1}s", 10 - failed.len(), start.elapsed().as_secs_f64());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
