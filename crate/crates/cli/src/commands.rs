//! Subcommand implementations.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use qd_core::expr::Expr;
use qd_core::geometry::{chord_arc_path, chord_arc_ratio_estimate, Domain, Point, SampleStrategy};
use qd_core::homotopy::{
    deform_convex, dilation_homotopy, dilation_qd_trace, epsilon_criterion, jacobian_representation,
    rescaling_schedule, schedule_breakpoints, schedule_for_family, straight_line_homotopy, DeformationConfig,
    DeformationRecipe, TraceConfig,
};
use qd_core::jets::MultiIndex;
use qd_core::kernels::KernelHandle;
use qd_core::maps::{injectivity_scan, HolomorphicMap, InjectivityReport};
use qd_core::qmc::Halton;
use qd_core::span::{
    centered_lattice, membership_residual_with, MembershipConfig, MembershipTrace, SpanElement, SpanTerm,
};
use qd_core::transport::{extract_quadrature_identity, identity_from_span_of_one, u_repr_discrepancy, QuadratureIdentity};
use qd_core::verify::{monomials, qdp_check, verify_identity, IntegrationScheme, QuadratureRule, TestFunction};
use serde_json::{json, Value};

use crate::scenario::{HomotopySpec, Scenario, VerifySpec};
use crate::svg::{render, Panel};
use crate::{catalog, CliError, Command, Options, Outcome};

type Res<T> = Result<T, CliError>;

const BOUNDARY_POINTS: usize = 720;

fn cj(z: C64) -> Value {
    json!([z.re, z.im])
}

fn pj(p: &[C64]) -> Value {
    Value::Array(p.iter().map(|z| cj(*z)).collect())
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn run(cmd: Command, scenario: Option<&Scenario>, opts: &Options) -> Res<Outcome> {
    if cmd == Command::Catalog {
        return Ok(list_catalog());
    }
    let s = scenario.ok_or_else(|| CliError::SpecParse("a --scenario or --spec is required".into()))?;
    if !s.supports(cmd.name()) {
        return Err(CliError::Unsupported {
            id: s.id.clone(),
            op: cmd.name().into(),
        });
    }
    let seed = opts.seed.unwrap_or(s.seed);
    match cmd {
        Command::Kernel => kernel(s, seed),
        Command::Membership => membership(s),
        Command::Identity => identity(s, seed),
        Command::QdpCheck => qdp(s, opts),
        Command::Homotopy => homotopy(s, opts),
        Command::Deform => deform(s),
        Command::ChordArc => chord_arc(s, seed, opts),
        Command::Catalog => unreachable!(),
    }
}

fn list_catalog() -> Outcome {
    let rows: Vec<Value> = catalog()
        .iter()
        .map(|s| json!({"id": s.id, "description": s.description, "operations": s.operations}))
        .collect();
    Outcome {
        result: json!({"scenarios": rows}),
        pass: true,
        svgs: Vec::new(),
    }
}

/// Polynomial of total degree `deg` with coefficients in the unit square.
fn random_polynomial(dim: usize, deg: usize, seed: u64) -> Expr {
    let halton = Halton::new(2, seed);
    MultiIndex::all_up_to(dim, deg)
        .into_iter()
        .enumerate()
        .fold(Expr::zero(), |acc, (i, alpha)| {
            let u = halton.point(i as u64 + 1);
            let mono = TestFunction::Monomial(alpha).to_expr();
            acc + Expr::constant(c(u[0] - 0.5, u[1] - 0.5)) * mono
        })
}

/// Points of `base` pulled halfway to its center, then mapped.
fn evaluation_points(base: &Domain, map: Option<&HolomorphicMap>, count: usize, seed: u64) -> Res<Vec<Point>> {
    let center = base.center()?;
    let mut out = Vec::with_capacity(count);
    for p in base.sample_interior(SampleStrategy::QuasiRandom, count, seed)? {
        let q: Point = p.iter().zip(&center).map(|(x, o)| o + (x - o) * 0.5).collect();
        out.push(match map {
            Some(f) => f.evaluate(&q)?,
            None => q,
        });
    }
    Ok(out)
}

fn kernel(s: &Scenario, seed: u64) -> Res<Outcome> {
    let spec = s
        .kernel
        .clone()
        .ok_or_else(|| CliError::SpecParse("kernel section missing".into()))?;
    let base = s.base()?;
    let map = s.map()?;
    let target = s.target()?;
    let k = KernelHandle::new(&target)?;
    let zs = evaluation_points(&base, map.as_ref(), spec.points, seed)?;

    let rule = QuadratureRule::tensor(&target, spec.radial, spec.angular)?;
    let p = random_polynomial(target.dim(), spec.degree, seed);
    let nodes: Vec<(Point, f64)> = (0..rule.len()).map(|i| rule.node(i)).collect::<Result<_, _>>()?;
    let pw: Vec<C64> = nodes.iter().map(|(w, _)| p.eval(w)).collect::<Result<_, _>>()?;
    let defects = qd_core::par::map_slice(&zs, |z| -> Res<f64> {
        let mut acc = c(0.0, 0.0);
        for ((w, wt), pv) in nodes.iter().zip(&pw) {
            acc += pv * k.eval(z, w)? * *wt;
        }
        Ok((acc - p.eval(z)?).norm())
    })
    .into_iter()
    .collect::<Res<Vec<f64>>>()?;
    let reproducing = defects.iter().copied().fold(0.0, f64::max);
    let mut pass = reproducing < s.tolerances.kernel;

    let diagonal: Vec<Value> = zs
        .iter()
        .take(5)
        .map(|z| Ok(json!({"z": pj(z), "K(z,z)": cj(k.eval(z, z)?)})))
        .collect::<Res<_>>()?;
    let mut result = json!({
        "domain": target.to_json(),
        "reproducing": {
            "polynomial_degree": spec.degree,
            "points": zs.len(),
            "rule": {"radial": spec.radial, "angular": spec.angular, "nodes": rule.len()},
            "max_defect": reproducing,
            "tolerance": s.tolerances.kernel,
        },
        "diagonal": diagonal,
    });

    if let Some(cf) = &spec.closed_form {
        let expr = Expr::from_json(cf).map_err(|e| CliError::SpecParse(format!("closed_form: {e}")))?;
        let pts = evaluation_points(&base, map.as_ref(), 2 * spec.closed_form_pairs, seed + 1)?;
        let mut worst: f64 = 0.0;
        for pair in pts.chunks(2).filter(|p| p.len() == 2) {
            let (z, w) = (&pair[0], &pair[1]);
            let mut args = z.clone();
            args.extend(w.iter().map(|x| x.conj()));
            let want = expr.eval(&args)?;
            let got = k.eval(z, w)?;
            worst = worst.max((got - want).norm() / want.norm().max(1.0));
        }
        pass &= worst < s.tolerances.closed_form;
        result["closed_form"] = json!({
            "pairs": spec.closed_form_pairs,
            "max_relative_error": worst,
            "tolerance": s.tolerances.closed_form,
        });
    }
    Ok(Outcome {
        result,
        pass,
        svgs: Vec::new(),
    })
}

fn membership_config(max_order: usize) -> MembershipConfig {
    MembershipConfig {
        max_order,
        ..MembershipConfig::default()
    }
}

/// Explicit element: kernel derivatives of order ≤ 2 at 2×2 lattice nodes.
fn positive_control(domain: &Domain) -> Res<SpanElement> {
    let nodes = centered_lattice(domain, 2)?;
    let alphas = MultiIndex::all_up_to(domain.dim(), 2);
    let terms = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let coeff = c(1.0 / (1.0 + i as f64), 0.5 - 0.1 * i as f64);
            SpanTerm::new(nodes[i % nodes.len()].clone(), a.clone(), coeff)
        })
        .collect();
    Ok(SpanElement::new(domain, terms)?)
}

fn tail_floor(t: &MembershipTrace) -> Option<f64> {
    let solved: Vec<f64> = t.levels.iter().filter_map(|l| l.residual).collect();
    solved.iter().rev().take(3).copied().reduce(f64::min)
}

fn membership(s: &Scenario) -> Res<Outcome> {
    let spec = s
        .membership
        .clone()
        .ok_or_else(|| CliError::SpecParse("membership section missing".into()))?;
    let base = s.base()?;
    let candidate = match (&spec.candidate, s.map()?) {
        (Some(v), _) => Expr::from_json(v).map_err(|e| CliError::SpecParse(format!("candidate: {e}")))?,
        (None, Some(f)) => f.jacobian_expr(),
        (None, None) => Expr::one(),
    };
    let cfg = membership_config(spec.max_order);
    let expected = spec.expected_verdict.clone().unwrap_or_else(|| "in_span".into());
    let mut pass = true;
    let mut runs = Vec::new();
    let mut negative_floor = f64::INFINITY;
    for &k in &spec.grids {
        let nodes = centered_lattice(&base, k)?;
        let trace = membership_residual_with(&candidate, &base, &nodes, &cfg)?;
        let matches = trace.verdict.label() == expected;
        pass &= matches;
        if let Some(f) = tail_floor(&trace) {
            negative_floor = negative_floor.min(f);
        }
        runs.push(json!({
            "grid": format!("{k}x{k}"),
            "nodes": nodes.len(),
            "verdict": trace.verdict.label(),
            "expected_verdict": expected,
            "matches_expected": matches,
            "trace": trace.to_json(),
        }));
    }

    let control = positive_control(&base)?;
    let control_trace = membership_residual_with(&control.to_expr()?, &base, &control.nodes(), &membership_config(2))?;
    let control_residual = control_trace.best_residual().unwrap_or(f64::INFINITY);
    pass &= control_trace.verdict.is_in_span();
    let mut result = json!({
        "candidate": candidate.to_json(),
        "runs": runs,
        "positive_control": {
            "verdict": control_trace.verdict.label(),
            "residual": control_residual,
        },
    });
    if expected == "not_in_span" {
        result["separation_orders"] = json!((negative_floor / control_residual.max(f64::MIN_POSITIVE)).log10());
    }
    Ok(Outcome {
        result,
        pass,
        svgs: Vec::new(),
    })
}

fn test_functions(spec: &VerifySpec, dim: usize) -> Res<Vec<TestFunction>> {
    let mut tests = match spec.degree {
        Some(d) => monomials(dim, d),
        None => Vec::new(),
    };
    for t in &spec.tests {
        tests.push(TestFunction::Expr {
            label: t.label.clone(),
            expr: Expr::from_json(&t.expr).map_err(|e| CliError::SpecParse(format!("test {}: {e}", t.label)))?,
        });
    }
    Ok(tests)
}

fn scheme_of(spec: &VerifySpec, domain: &Domain, seed: u64) -> Res<IntegrationScheme> {
    match spec.scheme.as_str() {
        "tensor" => Ok(match (spec.radial, spec.angular) {
            (Some(r), Some(a)) => IntegrationScheme::tensor(r, a),
            _ => IntegrationScheme::default_for(domain),
        }),
        "qmc" => Ok(IntegrationScheme::qmc(spec.samples.unwrap_or(1_000_000), seed)),
        other => Err(CliError::SpecParse(format!("unknown scheme '{other}'"))),
    }
}

fn scan_json(r: &InjectivityReport) -> Value {
    json!({
        "injective_on_sample": r.injective_on_sample,
        "min_pair_separation_ratio": r.min_pair_separation_ratio,
        "witness": r.witness.as_ref().map(|(a, b)| json!([pj(a), pj(b)])),
        "resolution": r.resolution,
        "grid_points": r.grid_points,
        "spacing": r.spacing,
    })
}

fn scan_resolution(dim: usize) -> usize {
    if dim == 1 {
        200
    } else {
        10
    }
}

fn identity_of(s: &Scenario) -> Res<(QuadratureIdentity, SpanElement)> {
    let base = s.base()?;
    let map = s.map()?;
    let u = match (s.u_repr()?, &map) {
        (Some(u), _) => u,
        (None, Some(f)) => jacobian_representation(f, &base, &membership_config(8))?.0,
        (None, None) => {
            let t = membership_residual_with(&Expr::one(), &base, &[base.center()?], &membership_config(4))?;
            t.element.ok_or_else(|| CliError::SpecParse("no representation of 1".into()))?
        }
    };
    let q = match &map {
        Some(f) => extract_quadrature_identity(f, &u, None)?,
        None => identity_from_span_of_one(&u),
    };
    Ok((q, u))
}

fn identity(s: &Scenario, seed: u64) -> Res<Outcome> {
    let (q, u) = identity_of(s)?;
    let dim = q.domain.dim();
    let mut pass = true;
    let mut reports = Vec::new();
    for spec in &s.verify {
        let tests = test_functions(spec, dim)?;
        let scheme = scheme_of(spec, &q.domain, seed)?;
        let r = verify_identity(&q, &tests, &scheme, spec.tolerance)?;
        pass &= r.pass;
        reports.push(r.to_json());
    }
    let mut result = json!({
        "identity": q.to_json(),
        "u_repr": u.to_json(),
        "verification": reports,
    });
    if let Some(f) = s.map()? {
        let base = s.base()?;
        let scan = injectivity_scan(&f, &base, scan_resolution(dim))?;
        pass &= scan.injective_on_sample;
        result["injectivity"] = scan_json(&scan);
        result["u_repr_discrepancy"] = json!(u_repr_discrepancy(&f, &u, 400)?);
    }
    Ok(Outcome {
        result,
        pass,
        svgs: Vec::new(),
    })
}

fn qdp(s: &Scenario, opts: &Options) -> Res<Outcome> {
    let spec = s.qdp.clone().ok_or_else(|| CliError::SpecParse("qdp section missing".into()))?;
    let base = s.base()?;
    let f = s.map()?.unwrap_or_else(|| HolomorphicMap::identity(base.dim()));
    let degree = opts.max_degree.unwrap_or(spec.max_degree);
    let table = qdp_check(&f, &base, degree, &[base.center()?], &membership_config(spec.max_order))?;
    let mut all_match = true;
    let mut negatives = 0;
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let negative = spec
                .expected_negative_if_uses
                .iter()
                .any(|&i| r.alpha.exponents().get(i).is_some_and(|&e| e > 0));
            let expected = if negative { "not_in_span" } else { "in_span" };
            let matches = r.trace.verdict.label() == expected;
            all_match &= matches;
            negatives += usize::from(negative && matches);
            json!({
                "alpha": r.alpha.exponents(),
                "verdict": r.trace.verdict.label(),
                "expected_verdict": expected,
                "matches_expected": matches,
                "best_residual": r.trace.best_residual(),
                "trace": r.trace.to_json(),
            })
        })
        .collect();
    let raw_exit = if table.consistent { 0 } else { 2 };
    let mut result = json!({
        "map": f.to_json(),
        "max_degree": degree,
        "max_order": spec.max_order,
        "qdp": table.consistent,
        "raw_exit_code": raw_exit,
        "rows": rows,
    });
    if negatives > 0 {
        result["annotation"] = json!("expected-negative");
    }
    Ok(Outcome {
        result,
        pass: all_match,
        svgs: Vec::new(),
    })
}

fn t_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn circle(points: usize, r: f64) -> Vec<C64> {
    (0..points)
        .map(|k| C64::from_polar(r, 2.0 * PI * k as f64 / points as f64))
        .collect()
}

fn image_curve(f: &HolomorphicMap, curve: &[C64]) -> Res<Vec<C64>> {
    curve.iter().map(|z| Ok(f.evaluate(&[*z])?[0])).collect()
}

fn frame(title: String, f: &HolomorphicMap) -> Res<String> {
    Ok(render(&[Panel {
        title,
        regions: vec![image_curve(f, &circle(BOUNDARY_POINTS, 1.0))?],
        paths: Vec::new(),
    }]))
}

fn homotopy(s: &Scenario, opts: &Options) -> Res<Outcome> {
    let spec = s
        .homotopy
        .clone()
        .ok_or_else(|| CliError::SpecParse("homotopy section missing".into()))?;
    let mode = opts.mode.clone().unwrap_or_else(|| spec.mode.clone());
    let frames = opts.frames.unwrap_or(spec.frames);
    let want_svg = opts.svg.is_some();
    match mode.as_str() {
        "dilation" => dilation(s, &spec, frames, want_svg),
        "straight-line" => straight_line(s, &spec, frames, want_svg),
        "schedule" => schedule(s, &spec, frames),
        other => Err(CliError::SpecParse(format!("unknown homotopy mode '{other}'"))),
    }
}

fn dilation(s: &Scenario, spec: &HomotopySpec, frames: usize, want_svg: bool) -> Res<Outcome> {
    let f = s.map()?.ok_or_else(|| CliError::SpecParse("dilation needs a map".into()))?;
    let ts = t_grid(frames);
    let cfg = TraceConfig {
        membership: membership_config(spec.max_order),
        ..TraceConfig::default()
    };
    let trace = dilation_qd_trace(&f, &ts, &cfg)?;
    let pass = trace.entries.iter().all(|e| e.report.pass);
    let mut svgs = Vec::new();
    if want_svg {
        for (i, &t) in ts.iter().enumerate() {
            let phi = dilation_homotopy(&f, t)?;
            svgs.push((format!("frame_{i:03}.svg"), frame(format!("t = {t:.4}"), &phi)?));
        }
    }
    Ok(Outcome {
        result: json!({"mode": "dilation", "frames": ts.len(), "trace": trace.to_json()}),
        pass,
        svgs,
    })
}

fn straight_line(s: &Scenario, spec: &HomotopySpec, frames: usize, want_svg: bool) -> Res<Outcome> {
    let base = s.base()?;
    let f = s.map()?.unwrap_or_else(|| HolomorphicMap::identity(base.dim()));
    let g = spec
        .g
        .as_ref()
        .map(HolomorphicMap::from_json)
        .transpose()?
        .ok_or_else(|| CliError::SpecParse("straight-line needs g".into()))?;
    let eps = epsilon_criterion(&f, &base, 256)?;
    let (fp, gp) = (&f.partials()[0][0], &g.partials()[0][0]);
    let mut sup: f64 = 0.0;
    for z in base.boundary_curves(BOUNDARY_POINTS)?.concat() {
        sup = sup.max((gp.eval(&[z])? - fp.eval(&[z])?).norm());
    }
    let mut pass = sup < eps.epsilon;
    let tests = monomials(1, 8);
    let scheme = IntegrationScheme::default_for(&base);
    let mut steps = Vec::new();
    let mut svgs = Vec::new();
    for (i, t) in t_grid(frames).into_iter().enumerate() {
        let phi = straight_line_homotopy(&f, &g, t)?;
        let (u, residual) = jacobian_representation(&phi, &base, &membership_config(spec.max_order))?;
        let q = extract_quadrature_identity(&phi, &u, None)?;
        let r = verify_identity(&q, &tests, &scheme, s.tolerances.identity)?;
        let scan = injectivity_scan(&phi, &base, 200)?;
        pass &= residual < 1e-6 && r.pass && scan.injective_on_sample;
        if want_svg {
            svgs.push((format!("frame_{i:03}.svg"), frame(format!("t = {t:.4}"), &phi)?));
        }
        steps.push(json!({
            "t": t,
            "membership_residual": residual,
            "identity": q.to_json(),
            "verification": r.to_json(),
            "injectivity": scan_json(&scan),
        }));
    }
    Ok(Outcome {
        result: json!({
            "mode": "straight-line",
            "epsilon": {"value": eps.epsilon, "m": eps.m, "chord_arc": eps.chord_arc},
            "sup_derivative_gap": sup,
            "steps": steps,
        }),
        pass,
        svgs,
    })
}

fn schedule(s: &Scenario, spec: &HomotopySpec, frames: usize) -> Res<Outcome> {
    let ts = t_grid(frames);
    let (samples, report) = match &spec.radius_profile {
        Some(p) => {
            let samples: Vec<(f64, f64)> = ts
                .iter()
                .map(|&t| (t, if t >= p.from && t <= p.to { p.dip } else { 1.0 }))
                .collect();
            (samples, json!({"synthetic": {"dip": p.dip, "from": p.from, "to": p.to}}))
        }
        None => {
            let f = s.map()?.ok_or_else(|| CliError::SpecParse("schedule needs a map or a profile".into()))?;
            let h = schedule_for_family(|t| dilation_homotopy(&f, t), &ts, 60, 1e-3)?;
            let samples = h.t_samples.iter().copied().zip(h.r.iter().copied()).collect();
            (samples, json!({"family": "dilation", "estimate": h.to_json()}))
        }
    };
    let k = match schedule_breakpoints(&samples)? {
        Some((t1, t2, m)) => Some(rescaling_schedule(&samples, t1, t2, m)?),
        None => None,
    };
    let ks: Vec<f64> = ts.iter().map(|&t| k.as_ref().map_or(1.0, |k| k.k(t))).collect();
    let pass = samples.iter().zip(&ks).all(|((_, r), k)| k <= r);
    Ok(Outcome {
        result: json!({
            "mode": "schedule",
            "source": report,
            "t": ts,
            "r_hat": samples.iter().map(|s| s.1).collect::<Vec<_>>(),
            "k": ks,
            "t1": k.as_ref().map(|k| k.t1),
            "t2": k.as_ref().map(|k| k.t2),
            "m": k.as_ref().map(|k| k.m),
        }),
        pass,
        svgs: Vec::new(),
    })
}

fn deform(s: &Scenario) -> Res<Outcome> {
    let spec = s.deform.clone().ok_or_else(|| CliError::SpecParse("deform section missing".into()))?;
    let base = s.base()?;
    let recipe = DeformationRecipe {
        base,
        gamma: Expr::from_json(&spec.gamma).map_err(|e| CliError::SpecParse(format!("gamma: {e}")))?,
        g: SpanElement::from_json(&spec.g).map_err(|e| CliError::SpecParse(format!("g: {e}")))?,
    };
    let d = deform_convex(&recipe, &DeformationConfig::default())?;
    let pass = d.report.pass && d.jacobian_residual < 1e-10;
    Ok(Outcome {
        result: d.to_json(),
        pass,
        svgs: Vec::new(),
    })
}

fn chord_arc(s: &Scenario, seed: u64, opts: &Options) -> Res<Outcome> {
    let trials = s.chord_arc.as_ref().map_or(1000, |c| c.trials);
    let target = s.target()?;
    if !target.is_planar() {
        return Err(CliError::Unsupported {
            id: s.id.clone(),
            op: "chord-arc on a non-planar domain".into(),
        });
    }
    let mut result;
    let pass;
    let mut worst_path = Vec::new();
    if let Domain::CircleDomain { .. } = target {
        let pts = target.sample_interior(SampleStrategy::QuasiRandom, 2 * trials, seed)?;
        let mut worst: f64 = 1.0;
        let mut outside = 0usize;
        let mut too_long = 0usize;
        for pair in pts.chunks(2).filter(|p| p.len() == 2) {
            let (z, w) = (pair[0][0], pair[1][0]);
            let path = chord_arc_path(&target, z, w)?;
            let disc = path.discretize(512);
            if disc.iter().any(|p| !target.contains(&[*p]).unwrap_or(false)) {
                outside += 1;
            }
            let d = (z - w).norm();
            if d > 0.0 {
                if path.length() > FRAC_PI_2 * d * (1.0 + 1e-12) {
                    too_long += 1;
                }
                if path.length() / d > worst {
                    worst = path.length() / d;
                    worst_path = disc;
                }
            }
        }
        pass = outside == 0 && too_long == 0;
        result = json!({
            "pairs": trials,
            "paths_leaving_domain": outside,
            "paths_over_bound": too_long,
            "max_ratio": worst,
            "bound": FRAC_PI_2,
        });
    } else {
        let est = chord_arc_ratio_estimate(&target, trials, seed)?;
        pass = est.ratio.is_finite();
        if let Some((z, w)) = est.worst_pair {
            worst_path = vec![z, w];
        }
        result = json!({
            "pairs": trials,
            "max_ratio": est.ratio,
            "worst_pair": est.worst_pair.map(|(z, w)| json!([cj(z), cj(w)])),
        });
    }
    result["domain"] = target.to_json();
    let mut svgs = Vec::new();
    if opts.svg.is_some() {
        let panel = Panel {
            title: format!("{}: worst chord-arc path", s.id),
            regions: target.boundary_curves(BOUNDARY_POINTS)?,
            paths: vec![worst_path],
        };
        svgs.push((format!("{}.svg", s.id), render(&[panel])));
    }
    Ok(Outcome { result, pass, svgs })
}
