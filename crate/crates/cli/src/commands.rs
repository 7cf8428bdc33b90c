use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use foldkit_core::cohom::{
    chern_class, classify_pair, h2, horizontal_class, CechCocycle, CochainClass, CocycleSpec, CohomError, ComplexSpec,
    Cycle, CycleSpec, HorizontalOptions, SimplicialComplex,
};
use foldkit_core::domain::{Domain, DomainSpec};
use foldkit_core::expr::{parse_with_vars, VectorExpression};
use foldkit_core::form::{solve_contraction, verify_folded, FoldedOptions, FormError, FormField, FormSpec, OneForm, OneFormSpec};
use foldkit_core::hamiltonian::{
    classify_zero_level, verify_hamiltonian, ActionSpec, HamiltonianError, MomentMap, MomentSpec, ReduceOptions,
    ReductionVerdict, TorusAction,
};
use foldkit_core::lattice::{
    extend_to_basis, smith_normal_form, validate_template, FoldedTemplate, LatticeError, LatticeMatrix,
};
use foldkit_core::models::{
    canonical_form, cut_moment, cut_section_and_alpha, cut_transition, folded_cotangent_form, minimal_coupling,
    BundleChart, BundleSpec, CutChart, CutPoint, ModelError,
};
use foldkit_core::singularity::{
    chi_morse_check, fold_factorization, is_fold_map, FactorOptions, FoldTolerances, FoldVerdict, SingularityError,
};

use crate::input::{read_json, ClassifyInput, CutPoints, CycleList, InputError, MapSpec, MatrixSpec, MorseSpec};
use crate::render::render_template;
use crate::{
    ClassifyCmd, CohomCmd, Command, CutCmd, ExprCmd, FoldCmd, FormCmd, Global, LatticeCmd, ModelCmd, ModelKind,
    MomentCmd, MorseCmd, Outcome, ReduceCmd, TemplateCmd,
};

type Run = Result<Outcome, InputError>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn outcome(passed: bool, summary: String, report: Value) -> Run {
    Ok(Outcome { report: json!({ "status": if passed { "pass" } else { "fail" }, "report": report }), passed, summary, artifact: None })
}

fn failure(summary: &str, e: &dyn std::fmt::Display) -> Run {
    outcome(false, format!("FAIL {summary}: {e}"), json!({ "error": e.to_string() }))
}

fn bad<E: std::fmt::Display>(e: E) -> InputError {
    InputError(e.to_string())
}

fn samples_or(g: &Global, default: usize) -> usize {
    g.samples.unwrap_or(default)
}

fn fold_tolerances(g: &Global) -> FoldTolerances {
    let mut t = FoldTolerances::default();
    if let Some(tol) = g.tol {
        t.abs_tol = tol;
    }
    t
}

fn domain_for(spec: Option<&DomainSpec>, path: Option<&Path>, vars: &[String]) -> Result<Domain, InputError> {
    let spec = match path {
        Some(p) => read_json::<DomainSpec>(p)?,
        None => spec.cloned().unwrap_or_default(),
    };
    spec.build(vars).map_err(bad)
}

fn load_map(path: &Path) -> Result<(MapSpec, VectorExpression), InputError> {
    let spec: MapSpec = read_json(path)?;
    let f = VectorExpression::parse(&spec.components, &spec.vars).map_err(bad)?;
    Ok((spec, f))
}

fn load_form(path: &Path) -> Result<FormField, InputError> {
    FormField::from_spec(&read_json::<FormSpec>(path)?).map_err(bad)
}

fn load_action(path: &Path) -> Result<TorusAction, InputError> {
    TorusAction::from_spec(&read_json::<ActionSpec>(path)?).map_err(bad)
}

fn load_moment(path: &Path) -> Result<MomentMap, InputError> {
    MomentMap::from_spec(&read_json::<MomentSpec>(path)?).map_err(bad)
}

fn load_template(path: &Path) -> Result<FoldedTemplate, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    FoldedTemplate::from_json(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn cycles(specs: &[CycleSpec]) -> Result<Vec<Cycle>, InputError> {
    specs.iter().map(|c| Cycle::from_spec(c).map_err(bad)).collect()
}

pub fn run(cmd: &Command, g: &Global) -> Run {
    match cmd {
        Command::Expr(ExprCmd::Eval { exprs, vars, at }) => expr_eval(exprs, vars, at),
        Command::Fold(FoldCmd::Check { map, domain }) => fold_check(g, map, domain.as_deref()),
        Command::Fold(FoldCmd::Factor { map, at, nodes, half_width }) => {
            fold_factor(g, map, at.as_deref(), *nodes, *half_width)
        }
        Command::Morse(MorseCmd::Check { input }) => morse_check(g, input),
        Command::Form(FormCmd::Verify { form, domain }) => form_verify(g, form, domain.as_deref()),
        Command::Form(FormCmd::Solve { form, beta, at }) => form_solve(g, form, beta, at),
        Command::Moment(MomentCmd::Verify { form, action, moment, domain }) => {
            moment_verify(g, form, action, moment, domain.as_deref())
        }
        Command::Reduce(ReduceCmd::Classify { form, action, moment, seeds }) => {
            reduce_classify(g, form, action, moment, seeds)
        }
        Command::Lattice(LatticeCmd::Check { matrix }) => lattice_check(matrix),
        Command::Template(TemplateCmd::Validate { template }) => template_validate(g, template),
        Command::Template(TemplateCmd::Render { template }) => template_render(template),
        Command::Cohom(CohomCmd::H2 { complex, rank, real }) => cohom_h2(complex, *rank, *real),
        Command::Classify(ClassifyCmd::C1 { cocycle }) => classify_c1(cocycle),
        Command::Classify(ClassifyCmd::Chor { bundle, form, cycles }) => classify_chor(g, bundle, form, cycles),
        Command::Classify(ClassifyCmd::Compare { a, b }) => classify_compare(g, a, b),
        Command::Model(ModelCmd::Build { kind, bundle, form, n, fiber, moment_vars, connection }) => match kind {
            ModelKind::Canonical => model_canonical(g, bundle.as_deref(), form.as_deref()),
            ModelKind::Cotangent => model_cotangent(g, *n),
            ModelKind::Coupling => model_coupling(g, form.as_deref(), fiber, moment_vars, connection.as_deref()),
        },
        Command::Cut(CutCmd::Check { template, points }) => cut_check(g, template, points),
    }
}

fn expr_eval(exprs: &[String], vars: &[String], at: &[f64]) -> Run {
    let f = VectorExpression::parse(exprs, vars).map_err(bad)?;
    let values = f.eval(at).map_err(bad)?;
    let j = f.jacobian(at).map_err(bad)?;
    let jac: Vec<Vec<f64>> = (0..j.nrows()).map(|i| j.row(i).iter().copied().collect()).collect();
    let canonical: Vec<String> = f.components().iter().map(|e| e.to_string()).collect();
    outcome(true, format!("{values:?}"), json!({ "expressions": canonical, "values": values, "jacobian": jac }))
}

fn fold_check(g: &Global, map: &Path, domain: Option<&Path>) -> Run {
    let (spec, f) = load_map(map)?;
    let d = domain_for(spec.domain.as_ref(), domain, &spec.vars)?;
    let cert = match is_fold_map(&f, &d, &fold_tolerances(g), samples_or(g, 16), g.seed) {
        Ok(c) => c,
        Err(e @ (SingularityError::NotSquare { .. } | SingularityError::VariableMismatch { .. } | SingularityError::Expr(_))) => {
            return Err(bad(e))
        }
        Err(e) => return failure("fold check", &e),
    };
    let passed = matches!(cert.verdict, FoldVerdict::IsFold | FoldVerdict::Regular);
    let summary = format!("{} {:?} ({} fold points)", if passed { "PASS" } else { "FAIL" }, cert.verdict, cert.fold_points.len());
    outcome(passed, summary, to_value(&cert))
}

fn fold_factor(g: &Global, map: &Path, at: Option<&[f64]>, nodes: usize, half_width: f64) -> Run {
    let (spec, f) = load_map(map)?;
    let opts = FactorOptions {
        half_width,
        nodes,
        residual_tol: g.tol.unwrap_or(FactorOptions::default().residual_tol),
        tolerances: FoldTolerances::default(),
    };
    let z0 = match at.map(<[f64]>::to_vec).or(spec.point.clone()) {
        Some(p) => p,
        None => {
            let d = domain_for(spec.domain.as_ref(), None, &spec.vars)?;
            let cert = is_fold_map(&f, &d, &opts.tolerances, samples_or(g, 16), g.seed).map_err(bad)?;
            match cert.fold_points.first() {
                Some(p) => p.point.clone(),
                None => return failure("fold factor", &"no fold point located; pass --at"),
            }
        }
    };
    match fold_factorization(&f, &z0, &opts) {
        Ok(r) => {
            let passed = r.max_residual <= opts.residual_tol && r.transversality_margin > opts.tolerances.margin_tol;
            let summary = format!(
                "{} residual {:.2e}, transversality {:.3e}",
                if passed { "PASS" } else { "FAIL" },
                r.max_residual,
                r.transversality_margin
            );
            outcome(passed, summary, to_value(&r))
        }
        Err(e @ (SingularityError::NotSquare { .. } | SingularityError::Expr(_))) => Err(bad(e)),
        Err(e) => failure("fold factor", &e),
    }
}

fn morse_check(g: &Global, input: &Path) -> Run {
    let spec: MorseSpec = read_json(input)?;
    let names = [spec.s.as_str(), spec.t.as_str()];
    let f = parse_with_vars(&spec.f, &names).map_err(bad)?;
    let a = parse_with_vars(&spec.a, &names).map_err(bad)?;
    let r = chi_morse_check(&f, &a, &spec.s, &spec.t, spec.window, samples_or(g, 400)).map_err(bad)?;
    let summary = format!(
        "{} {} critical point(s){}",
        if r.is_chi_morse { "PASS" } else { "FAIL" },
        r.critical_points.len(),
        if r.degenerate { ", g vanishes identically" } else { "" }
    );
    outcome(r.is_chi_morse, summary, to_value(&r))
}

fn form_input_error(e: &FormError) -> bool {
    matches!(e, FormError::OddDimension(_) | FormError::VariableMismatch(..) | FormError::Invalid(_) | FormError::Expr(_))
}

fn form_verify(g: &Global, form: &Path, domain: Option<&Path>) -> Run {
    let sigma = load_form(form)?;
    let d = domain_for(None, domain, sigma.vars())?;
    let opts = FoldedOptions { tolerances: fold_tolerances(g), samples: samples_or(g, 24), seed: g.seed, candidate: None };
    match verify_folded(&sigma, &d, &opts) {
        Ok(data) => {
            let summary = if data.is_symplectic() {
                "PASS symplectic on the domain".to_string()
            } else {
                format!("PASS folded, {} fold points", data.fold_points.len())
            };
            outcome(true, summary, to_value(&data))
        }
        Err(e) if form_input_error(&e) => Err(bad(e)),
        Err(e) => failure("form verify", &e),
    }
}

fn form_solve(g: &Global, form: &Path, beta: &Path, at: &[f64]) -> Run {
    let sigma = load_form(form)?;
    let beta = OneForm::from_spec(&read_json::<OneFormSpec>(beta)?).map_err(bad)?;
    match solve_contraction(&sigma, &beta, at, g.tol.unwrap_or(1e-9)) {
        Ok(s) => outcome(true, format!("PASS X = {:?}, residual {:.2e}", s.x, s.residual), to_value(&s)),
        Err(e) if form_input_error(&e) => Err(bad(e)),
        Err(e) => failure("form solve", &e),
    }
}

fn hamiltonian_input_error(e: &HamiltonianError) -> bool {
    matches!(e, HamiltonianError::DimensionMismatch(_) | HamiltonianError::Expr(_) | HamiltonianError::Form(_))
}

fn moment_verify(g: &Global, form: &Path, action: &Path, moment: &Path, domain: Option<&Path>) -> Run {
    let sigma = load_form(form)?;
    let action = load_action(action)?;
    let mu = load_moment(moment)?;
    let d = domain_for(None, domain, sigma.vars())?;
    let pts = d.sample_interior(samples_or(g, 32), &mut ChaCha8Rng::seed_from_u64(g.seed));
    match verify_hamiltonian(&sigma, &action, &mu, &pts) {
        Ok(r) => {
            let tol = g.tol.unwrap_or(1e-8);
            let passed = r.moment_residual < tol && r.invariance_residual < tol;
            let summary = format!(
                "{} moment residual {:.2e}, invariance {:.2e}",
                if passed { "PASS" } else { "FAIL" },
                r.moment_residual,
                r.invariance_residual
            );
            outcome(passed, summary, to_value(&r))
        }
        Err(e) if hamiltonian_input_error(&e) => Err(bad(e)),
        Err(e) => failure("moment verify", &e),
    }
}

fn reduce_classify(g: &Global, form: &Path, action: &Path, moment: &Path, seeds: &Path) -> Run {
    let sigma = load_form(form)?;
    let action = load_action(action)?;
    let mu = load_moment(moment)?;
    let seeds: Vec<Vec<f64>> = read_json(seeds)?;
    let mut opts = ReduceOptions { seed: g.seed, ..ReduceOptions::default() };
    if let Some(t) = g.tol {
        opts.pf_tol = t;
    }
    if let Some(n) = g.samples {
        opts.walk_steps = n;
    }
    match classify_zero_level(&sigma, &action, &mu, &seeds, &opts) {
        Ok(r) => {
            let passed = !matches!(r.verdict, ReductionVerdict::NotRegular { .. } | ReductionVerdict::NotFree { .. });
            let summary = format!(
                "{} {:?}{}",
                if passed { "PASS" } else { "FAIL" },
                r.verdict,
                r.reduced.map(|f| format!(", reduced form {f:?}")).unwrap_or_default()
            );
            outcome(passed, summary, to_value(&r))
        }
        Err(e) if hamiltonian_input_error(&e) => Err(bad(e)),
        Err(e) => failure("reduce classify", &e),
    }
}

fn lattice_check(matrix: &Path) -> Run {
    let spec: MatrixSpec = read_json(matrix)?;
    let n = spec.rows.first().map(Vec::len).unwrap_or(0);
    let m = LatticeMatrix::from_rows(spec.rows, n).map_err(bad)?;
    let snf = smith_normal_form(&m);
    let factors: Vec<String> = snf.diagonal.iter().map(|d| d.to_string()).collect();
    let rank = snf.rank();
    match extend_to_basis(&m) {
        Ok(e) => outcome(
            true,
            format!("PASS unimodular; completion {e}"),
            json!({ "unimodular": true, "rank": rank, "invariant_factors": factors, "completion": e }),
        ),
        Err(LatticeError::NotUnimodular) => outcome(
            false,
            format!("FAIL not unimodular (rank {rank}, invariant factors {factors:?})"),
            json!({ "unimodular": false, "rank": rank, "invariant_factors": factors }),
        ),
        Err(e) => Err(bad(e)),
    }
}

fn template_validate(g: &Global, template: &Path) -> Run {
    let t = load_template(template)?;
    let r = validate_template(&t, samples_or(g, 64), g.seed, &fold_tolerances(g));
    let summary = if r.passed() {
        format!("PASS {} samples, {} wall fold points", r.samples_checked, r.fold_points.len())
    } else {
        let first = &r.failures[0];
        format!("FAIL {} failure(s); first: region {} {:?}: {}", r.failures.len(), first.region, first.check, first.detail)
    };
    outcome(r.passed(), summary, to_value(&r))
}

fn template_render(template: &Path) -> Run {
    let t = load_template(template)?;
    let svg = render_template(&t).map_err(bad)?;
    Ok(Outcome { report: json!({}), passed: true, summary: "PASS rendered".into(), artifact: Some(svg) })
}

fn cohom_h2(complex: &Path, rank: usize, real: bool) -> Run {
    let k = SimplicialComplex::from_spec(&read_json::<ComplexSpec>(complex)?).map_err(bad)?;
    let group = h2(&k, rank, real);
    let torsion: Vec<String> = group.torsion.iter().map(|t| format!("Z/{t}")).collect();
    let summary = format!("H2 = Z^{}{}{}", group.free_rank, if torsion.is_empty() { "" } else { " + " }, torsion.join(" + "));
    outcome(true, summary, to_value(&group))
}

fn cohom_failure(e: &CohomError) -> bool {
    matches!(e, CohomError::NonIntegralCoboundary { .. } | CohomError::NotBasic { .. } | CohomError::Quadrature { .. })
}

fn c1_of(spec: &CocycleSpec) -> Result<Result<CochainClass, CohomError>, InputError> {
    let c = CechCocycle::from_spec(spec).map_err(bad)?;
    match chern_class(&c) {
        Err(e) if !cohom_failure(&e) => Err(bad(e)),
        r => Ok(r),
    }
}

fn chor_of(
    g: &Global,
    bundle: &BundleSpec,
    form: &FormSpec,
    cycle_specs: &[CycleSpec],
) -> Result<Result<CochainClass, CohomError>, InputError> {
    let chart = BundleChart::from_spec(bundle).map_err(bad)?;
    let sigma = FormField::from_spec(form).map_err(bad)?;
    let cs = cycles(cycle_specs)?;
    let mut opts = HorizontalOptions::default();
    if let Some(t) = g.tol {
        opts.quad_tol = t;
    }
    match horizontal_class(&sigma, &chart.connection, &chart.psi, &chart.fiber_vars, &cs, &opts) {
        Ok(r) => Ok(Ok(CochainClass::from_periods(format!("{} cycles", cs.len()), r.periods))),
        Err(e) if cohom_failure(&e) => Ok(Err(e)),
        Err(e) => Err(bad(e)),
    }
}

fn classify_c1(cocycle: &Path) -> Run {
    match c1_of(&read_json(cocycle)?)? {
        Ok(c) => outcome(true, format!("PASS c1 free {:?} torsion {:?}", c.free_part, c.torsion_part), to_value(&c)),
        Err(e) => failure("classify c1", &e),
    }
}

fn classify_chor(g: &Global, bundle: &Path, form: &Path, cycle_file: &Path) -> Run {
    let list: CycleList = read_json(cycle_file)?;
    match chor_of(g, &read_json(bundle)?, &read_json(form)?, &list.cycles)? {
        Ok(c) => outcome(true, format!("PASS periods {:?}", c.real_part), to_value(&c)),
        Err(e) => failure("classify chor", &e),
    }
}

fn classify_compare(g: &Global, a: &Path, b: &Path) -> Run {
    let ia: ClassifyInput = read_json(a)?;
    let ib: ClassifyInput = read_json(b)?;
    let mut classes = Vec::new();
    for i in [&ia, &ib] {
        let c1 = match c1_of(&i.cocycle)? {
            Ok(c) => c,
            Err(e) => return failure("classify compare", &e),
        };
        let chor = match chor_of(g, &i.bundle, &i.form, &i.cycles)? {
            Ok(c) => c,
            Err(e) => return failure("classify compare", &e),
        };
        classes.push((c1, chor));
    }
    let same = classify_pair(&classes[0].0, &classes[0].1, &classes[1].0, &classes[1].1).map_err(bad)?;
    let verdict = if same { "isomorphic" } else { "not isomorphic" };
    let side = |(c1, chor): &(CochainClass, CochainClass)| json!({ "c1": c1, "chor": chor });
    outcome(
        same,
        format!("{} {verdict}", if same { "PASS" } else { "FAIL" }),
        json!({ "verdict": verdict, "a": side(&classes[0]), "b": side(&classes[1]) }),
    )
}

fn model_input_error(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::InvalidChart(_)
            | ModelError::DimensionMismatch(_)
            | ModelError::Expr(_)
            | ModelError::Lattice(_)
            | ModelError::Form(FormError::Expr(_) | FormError::VariableMismatch(..) | FormError::Invalid(_))
    )
}

fn check_model(g: &Global, sigma: &FormField, action: &TorusAction, mu: &MomentMap, built: Value) -> Run {
    let d = Domain::unit_box(sigma.vars());
    let pts = d.sample_interior(samples_or(g, 32), &mut ChaCha8Rng::seed_from_u64(g.seed));
    let r = verify_hamiltonian(sigma, action, mu, &pts).map_err(bad)?;
    let tol = g.tol.unwrap_or(1e-8);
    let passed = r.moment_residual < tol && r.invariance_residual < tol;
    let summary = format!(
        "{} built {}-dimensional model; moment residual {:.2e}",
        if passed { "PASS" } else { "FAIL" },
        sigma.dim(),
        r.moment_residual
    );
    let mut report = built;
    report["form"] = to_value(&sigma.spec());
    report["action"] = to_value(&action.spec());
    report["moment"] = to_value(&mu.spec());
    report["hamiltonian"] = to_value(&r);
    outcome(passed, summary, report)
}

fn model_canonical(g: &Global, bundle: Option<&Path>, beta: Option<&Path>) -> Run {
    let bundle = bundle.ok_or_else(|| InputError("--kind canonical needs --bundle".into()))?;
    let chart = BundleChart::from_spec(&read_json(bundle)?).map_err(bad)?;
    let beta = beta.map(load_form).transpose()?;
    match canonical_form(&chart, beta.as_ref()) {
        Ok(sigma) => check_model(g, &sigma, &chart.action(), &chart.moment(), json!({ "kind": "canonical" })),
        Err(e) if model_input_error(&e) => Err(bad(e)),
        Err(e) => failure("model build", &e),
    }
}

fn model_cotangent(g: &Global, n: Option<usize>) -> Run {
    let n = n.ok_or_else(|| InputError("--kind cotangent needs --n".into()))?;
    let sigma = folded_cotangent_form(n).map_err(bad)?;
    let opts = FoldedOptions { tolerances: fold_tolerances(g), samples: samples_or(g, 24), seed: g.seed, candidate: None };
    match verify_folded(&sigma, &Domain::unit_box(sigma.vars()), &opts) {
        Ok(data) => outcome(
            true,
            format!("PASS folded cotangent model of dimension {}, {} fold points", sigma.dim(), data.fold_points.len()),
            json!({ "kind": "cotangent", "form": sigma.spec(), "fold": data }),
        ),
        Err(e) => failure("model build", &e),
    }
}

fn model_coupling(
    g: &Global,
    form: Option<&Path>,
    fiber: &[String],
    moment_vars: &[String],
    connection: Option<&Path>,
) -> Run {
    let form = form.ok_or_else(|| InputError("--kind coupling needs --form".into()))?;
    let sigma = load_form(form)?;
    let a = match connection {
        Some(p) => Some(
            read_json::<Vec<OneFormSpec>>(p)?
                .iter()
                .map(|s| OneForm::from_spec(s).map_err(bad))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    match minimal_coupling(&sigma, fiber, a.as_deref(), moment_vars) {
        Ok(m) => check_model(g, &m.form, &m.action, &m.moment, json!({ "kind": "coupling" })),
        Err(e) if model_input_error(&e) => Err(bad(e)),
        Err(e) => failure("model build", &e),
    }
}

fn distance(a: &CutPoint, b: &CutPoint) -> f64 {
    let dp = a.p.iter().zip(&b.p).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    a.z.iter().zip(&b.z).fold(dp, |m, (x, y)| m.max((x.0 - y.0).abs()).max((x.1 - y.1).abs()))
}

fn cut_check(g: &Global, template: &Path, points: &Path) -> Run {
    let t = load_template(template)?;
    let spec: CutPoints = read_json(points)?;
    let charts = spec
        .centers
        .iter()
        .map(|w| CutChart::from_template(&t, w))
        .collect::<Result<Vec<_>, _>>()
        .map_err(bad)?;
    let tol = g.tol.unwrap_or(1e-10);
    let (mut level, mut commute) = (0.0f64, 0.0f64);
    let mut pairs = 0;
    for p in &spec.points {
        let mut sections = Vec::new();
        for c in &charts {
            match cut_section_and_alpha(c, p) {
                Ok(x) => {
                    level = cut_moment(c, &x).map_err(bad)?.iter().fold(level, |m, v| m.max(v.abs()));
                    sections.push(x);
                }
                Err(e @ ModelError::OutsideCone { .. }) => return failure(&format!("cut check at {p:?}"), &e),
                Err(e) => return Err(bad(e)),
            }
        }
        for i in 0..charts.len() {
            for j in 0..charts.len() {
                if i == j {
                    continue;
                }
                match cut_transition(&charts[i], &charts[j], &sections[i]) {
                    Ok(y) => commute = commute.max(distance(&y, &sections[j])),
                    Err(e) if model_input_error(&e) => return Err(bad(e)),
                    Err(e) => return failure(&format!("cut check at {p:?}"), &e),
                }
                pairs += 1;
            }
        }
    }
    let passed = level <= tol && commute <= tol;
    let ranks: Vec<usize> = charts.iter().map(CutChart::rank).collect();
    outcome(
        passed,
        format!(
            "{} level residual {level:.2e}, commutation {commute:.2e} over {pairs} transitions",
            if passed { "PASS" } else { "FAIL" }
        ),
        json!({ "chart_ranks": ranks, "points": spec.points.len(), "transitions": pairs,
                "level_residual": level, "commutation_residual": commute }),
    )
}
