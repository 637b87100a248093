//! Homotopies through quadrature domains: dilations, the rescaling schedule,
//! straight-line interpolation with the chord-arc ε criterion, and the
//! deformation of convex domains by a prescribed Jacobian.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::expr::Expr;
use crate::geometry::{chord_arc_ratio_estimate, Domain, Point, SampleStrategy};
use crate::jets::MultiIndex;
use crate::maps::{divided_difference, injectivity_scan, HolomorphicMap};
use crate::span::{membership_residual_with, MembershipConfig, SpanElement};
use crate::transport::{extract_quadrature_identity, QuadratureIdentity};
use crate::verify::{monomials, verify_identity, IntegrationScheme, VerificationReport};

/// Tolerance on `|f(0)|` for origin-fixing maps.
const ORIGIN_TOL: f64 = 1e-12;

/// `r̂(t)` counts as 1 above this value when choosing `t₁, t₂`.
const FULL_RADIUS: f64 = 1.0 - 1e-6;

/// `φ_t(z) = f(tz)/t`, and `φ₀(z) = f'(0)·z`.
pub fn dilation_homotopy(f: &HolomorphicMap, t: f64) -> Result<HolomorphicMap> {
    if f.dim() != 1 {
        return Err(QdError::Unsupported("dilations of planar maps only".into()));
    }
    let zero = [C64::new(0.0, 0.0)];
    let f0 = f.evaluate(&zero)?[0];
    if f0.norm() > ORIGIN_TOL {
        return Err(QdError::NotOriginFixing(f0.norm()));
    }
    let comp = &f.components()[0];
    let expr = if t == 0.0 {
        let d = f.jacobian_determinant(&zero)?;
        Expr::constant(d) * Expr::var(0)
    } else {
        Expr::real(1.0 / t) * comp.compose(&[Expr::real(t) * Expr::var(0)])
    };
    Ok(HolomorphicMap::new(format!("dilation({}, t={t})", f.name()), vec![expr]))
}

/// `(1−t)·f + t·g`.
pub fn straight_line_homotopy(f: &HolomorphicMap, g: &HolomorphicMap, t: f64) -> Result<HolomorphicMap> {
    HolomorphicMap::linear_combination(
        &format!("line({}, {}, t={t})", f.name(), g.name()),
        &[(C64::new(1.0 - t, 0.0), f), (C64::new(t, 0.0), g)],
    )
}

/// Winding number of `g` around 0 along `|z| = rho`, or `None` when `g`
/// vanishes on the circle.
fn winding_number(g: &Expr, rho: f64) -> Result<Option<i64>> {
    const BASE: usize = 512;
    let at = |theta: f64| g.eval(&[C64::from_polar(rho, theta)]);
    let mut total = 0.0;
    let step = 2.0 * PI / BASE as f64;
    let mut stack: Vec<(f64, f64, C64, C64, u32)> = Vec::new();
    let mut prev = at(0.0)?;
    for k in 0..BASE {
        let (a, b) = (step * k as f64, step * (k + 1) as f64);
        let vb = at(b)?;
        stack.push((a, b, prev, vb, 0));
        prev = vb;
        while let Some((a, b, va, vb, depth)) = stack.pop() {
            if va.norm() == 0.0 || vb.norm() == 0.0 {
                return Ok(None);
            }
            let d = (vb / va).arg();
            if d.abs() > FRAC_PI_2 && depth < 40 {
                let m = 0.5 * (a + b);
                let vm = at(m)?;
                stack.push((m, b, vm, vb, depth + 1));
                stack.push((a, m, va, vm, depth + 1));
            } else if d.abs() > FRAC_PI_2 {
                return Ok(None);
            } else {
                total += d;
            }
        }
    }
    Ok(Some((total / (2.0 * PI)).round() as i64))
}

#[derive(Clone, Debug)]
pub struct UnivalenceEstimate {
    pub radius: f64,
    pub resolution: usize,
    pub tolerance: f64,
}

fn critical_free(f: &HolomorphicMap, rho: f64) -> Result<bool> {
    Ok(winding_number(&f.partials()[0][0], rho)? == Some(0))
}

fn scan_passes(f: &HolomorphicMap, rho: f64, resolution: usize) -> Result<bool> {
    let disc = Domain::disc(C64::new(0.0, 0.0), rho)?;
    Ok(injectivity_scan(f, &disc, resolution)?.injective_on_sample)
}

/// Sampled univalence on a neighbourhood of the closed disc `|z| ≤ ρ`: no
/// critical point of `f` there (argument principle for `f'`) and a clean
/// injectivity scan.
pub fn univalent_on(f: &HolomorphicMap, rho: f64, resolution: usize) -> Result<bool> {
    Ok(critical_free(f, rho)? && scan_passes(f, rho, resolution)?)
}

/// Bisection estimate of `sup{ρ ≤ 1 : f univalent on D_ρ}`.
pub fn univalence_radius(f: &HolomorphicMap, resolution: usize, tolerance: f64) -> Result<UnivalenceEstimate> {
    if f.dim() != 1 {
        return Err(QdError::Unsupported("univalence radius of planar maps only".into()));
    }
    let est = |radius| UnivalenceEstimate {
        radius,
        resolution,
        tolerance,
    };
    // f need only be holomorphic on the open unit disc, so ρ = 1 is tested
    // on the open disc rather than a neighbourhood of its closure.
    if critical_free(f, 1.0 - 1e-9)? && scan_passes(f, 1.0, resolution)? {
        return Ok(est(1.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if univalent_on(f, mid, resolution)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(est(lo))
}

/// Piecewise-linear `k(t)`: 1 near the ends, `m/2` on `[t₁, t₂]`, linear
/// ramps in between. `m` is capped at 2.
#[derive(Clone, Debug, PartialEq)]
pub struct RescalingSchedule {
    pub t1: f64,
    pub t2: f64,
    pub m: f64,
}

impl RescalingSchedule {
    pub fn new(t1: f64, t2: f64, m: f64) -> Result<RescalingSchedule> {
        if !(m > 0.0) {
            return Err(QdError::ScheduleInfeasible(format!("m = {m} is not positive")));
        }
        if !(0.0 < t1 && t1 < t2 && t2 < 1.0) {
            return Err(QdError::ScheduleInfeasible(format!("need 0 < t1 < t2 < 1, got {t1}, {t2}")));
        }
        Ok(RescalingSchedule { t1, t2, m: m.min(2.0) })
    }

    pub fn plateau(&self) -> f64 {
        self.m / 2.0
    }

    pub fn k(&self, t: f64) -> f64 {
        let (t1, t2, m) = (self.t1, self.t2, self.m);
        if t <= t1 / 2.0 || t >= (t2 + 1.0) / 2.0 {
            1.0
        } else if t < t1 {
            -((2.0 - m) / t1) * (t - t1 / 2.0) + 1.0
        } else if t <= t2 {
            m / 2.0
        } else {
            ((2.0 - m) / (1.0 - t2)) * (t - (1.0 + t2) / 2.0) + 1.0
        }
    }
}

/// Builds `k` from samples `(t, r̂(t))` and checks `k ≤ r̂` on them.
pub fn rescaling_schedule(samples: &[(f64, f64)], t1: f64, t2: f64, m: f64) -> Result<RescalingSchedule> {
    let s = RescalingSchedule::new(t1, t2, m)?;
    for &(t, r) in samples {
        if s.k(t) > r {
            return Err(QdError::ScheduleInfeasible(format!(
                "k({t}) = {} exceeds r = {r}",
                s.k(t)
            )));
        }
    }
    Ok(s)
}

/// `t₁, t₂, m` from samples: `t₁` ends the longest prefix with `r̂ = 1`,
/// `t₂` starts the longest such suffix, `m` is the sampled minimum.
/// `None` when `r̂ = 1` throughout and no rescaling is needed.
pub fn schedule_breakpoints(samples: &[(f64, f64)]) -> Result<Option<(f64, f64, f64)>> {
    if samples.is_empty() {
        return Err(QdError::ScheduleInfeasible("no samples".into()));
    }
    let m = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if m >= FULL_RADIUS {
        return Ok(None);
    }
    let prefix = samples.iter().take_while(|s| s.1 >= FULL_RADIUS).count();
    let suffix = samples.iter().rev().take_while(|s| s.1 >= FULL_RADIUS).count();
    if prefix == 0 || suffix == 0 {
        return Err(QdError::ScheduleInfeasible("r̂ < 1 at an endpoint".into()));
    }
    Ok(Some((samples[prefix - 1].0, samples[samples.len() - suffix].0, m)))
}

#[derive(Clone, Debug)]
pub struct HomotopySchedule {
    pub t_samples: Vec<f64>,
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub schedule: Option<RescalingSchedule>,
    pub resolution: usize,
}

impl HomotopySchedule {
    pub fn to_json(&self) -> Value {
        json!({
            "t": self.t_samples,
            "r_hat": self.r,
            "k": self.k,
            "t1": self.schedule.as_ref().map(|s| s.t1),
            "t2": self.schedule.as_ref().map(|s| s.t2),
            "m": self.schedule.as_ref().map(|s| s.m),
            "resolution": self.resolution,
        })
    }
}

/// Samples `r̂(t)` for a family of planar maps and builds `k`.
pub fn schedule_for_family<F>(family: F, t_samples: &[f64], resolution: usize, tolerance: f64) -> Result<HomotopySchedule>
where
    F: Fn(f64) -> Result<HolomorphicMap>,
{
    let mut r = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        r.push(univalence_radius(&family(t)?, resolution, tolerance)?.radius);
    }
    let pairs: Vec<(f64, f64)> = t_samples.iter().copied().zip(r.iter().copied()).collect();
    let schedule = match schedule_breakpoints(&pairs)? {
        Some((t1, t2, m)) => Some(rescaling_schedule(&pairs, t1, t2, m)?),
        None => None,
    };
    let k = t_samples
        .iter()
        .map(|&t| schedule.as_ref().map_or(1.0, |s| s.k(t)))
        .collect();
    Ok(HomotopySchedule {
        t_samples: t_samples.to_vec(),
        r,
        k,
        schedule,
        resolution,
    })
}

#[derive(Clone, Debug)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    pub m: f64,
    pub chord_arc: f64,
    pub samples: usize,
}

/// `ε̂ = m̂/M`, with `M = 1` on convex domains, `π/2` on circle domains and
/// an empirical chord-arc estimate otherwise.
pub fn epsilon_criterion(f: &HolomorphicMap, domain: &Domain, samples: usize) -> Result<EpsilonEstimate> {
    let chord_arc = if domain.is_convex() {
        1.0
    } else if matches!(domain, Domain::CircleDomain { .. }) {
        FRAC_PI_2
    } else {
        chord_arc_ratio_estimate(domain, 1000, 0)?.ratio
    };
    let m = divided_difference(f, domain, samples, false)?.estimate;
    Ok(EpsilonEstimate {
        epsilon: m / chord_arc,
        m,
        chord_arc,
        samples,
    })
}

#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub t: f64,
    pub identity: QuadratureIdentity,
    pub report: VerificationReport,
    pub membership_residual: f64,
}

#[derive(Clone, Debug)]
pub struct DilationTrace {
    pub entries: Vec<TraceEntry>,
    /// Largest coefficient change between consecutive samples.
    pub max_jump: f64,
}

impl DilationTrace {
    pub fn to_json(&self) -> Value {
        json!({
            "max_jump": self.max_jump,
            "entries": self.entries.iter().map(|e| json!({
                "t": e.t,
                "membership_residual": e.membership_residual,
                "identity": e.identity.to_json(),
                "verification": e.report.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub membership: MembershipConfig,
    pub test_degree: usize,
    pub tolerance: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            membership: MembershipConfig {
                max_order: 8,
                ..MembershipConfig::default()
            },
            test_degree: 8,
            tolerance: 1e-5,
        }
    }
}

/// Representation of `u = det Jf` in the span of `domain` at its center.
pub fn jacobian_representation(f: &HolomorphicMap, domain: &Domain, cfg: &MembershipConfig) -> Result<(SpanElement, f64)> {
    let trace = membership_residual_with(&f.jacobian_expr(), domain, &[domain.center()?], cfg)?;
    let residual = trace.best_residual().unwrap_or(f64::INFINITY);
    match (trace.verdict.is_in_span(), trace.element) {
        (true, Some(e)) => Ok((e, residual)),
        _ => Err(QdError::URepresentationMismatch(residual)),
    }
}

/// Identity of `φ_t(D)` extracted and verified at every sample `t`.
pub fn dilation_qd_trace(f: &HolomorphicMap, t_samples: &[f64], cfg: &TraceConfig) -> Result<DilationTrace> {
    let disc = Domain::unit_disc();
    let scheme = IntegrationScheme::default_for(&disc);
    let tests = monomials(1, cfg.test_degree);
    let entries = crate::par::map_slice(t_samples, |&t| -> Result<TraceEntry> {
        let phi = dilation_homotopy(f, t)?;
        let (u_repr, membership_residual) = jacobian_representation(&phi, &disc, &cfg.membership)?;
        let identity = extract_quadrature_identity(&phi, &u_repr, None)?;
        let report = verify_identity(&identity, &tests, &scheme, cfg.tolerance)?;
        Ok(TraceEntry {
            t,
            identity,
            report,
            membership_residual,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_jump = entries
        .windows(2)
        .map(|w| identity_distance(&w[0].identity, &w[1].identity))
        .fold(0.0, f64::max);
    Ok(DilationTrace { entries, max_jump })
}

/// Largest coefficient or node displacement between two identities.
pub fn identity_distance(a: &QuadratureIdentity, b: &QuadratureIdentity) -> f64 {
    let mut worst: f64 = 0.0;
    for t in &a.terms {
        worst = worst.max((t.coeff - b.coefficient(&t.node, &t.alpha)).norm());
    }
    for t in &b.terms {
        worst = worst.max((t.coeff - a.coefficient(&t.node, &t.alpha)).norm());
    }
    let (na, nb) = (a.nodes(), b.nodes());
    for p in &na {
        let d = nb.iter().map(|q| crate::maps::dist(p, q)).fold(f64::INFINITY, f64::min);
        if d.is_finite() {
            worst = worst.max(d);
        }
    }
    worst
}

/// Base domain, shadow function `γ(z′)` and target Jacobian `g`.
#[derive(Clone, Debug)]
pub struct DeformationRecipe {
    pub base: Domain,
    pub gamma: Expr,
    pub g: SpanElement,
}

#[derive(Clone, Debug)]
pub struct DeformationConfig {
    pub scan_resolution: usize,
    pub check_points: usize,
    pub test_degree: usize,
    pub tolerance: f64,
    pub scheme: IntegrationScheme,
}

impl Default for DeformationConfig {
    fn default() -> Self {
        // 12 radial × 24 angular nodes per factor integrate the degree ≤ 6
        // pullbacks of a quadratic map exactly.
        DeformationConfig {
            scan_resolution: 10,
            check_points: 500,
            test_degree: 6,
            tolerance: 1e-5,
            scheme: IntegrationScheme::tensor(12, 24),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Deformation {
    pub map: HolomorphicMap,
    pub identity: QuadratureIdentity,
    pub report: VerificationReport,
    /// `sup ‖f(z) − z‖` over the closure sample.
    pub closeness: f64,
    /// `max |det Jf − g|` over the check points.
    pub jacobian_residual: f64,
}

impl Deformation {
    pub fn to_json(&self) -> Value {
        json!({
            "map": self.map.to_json(),
            "closeness": self.closeness,
            "jacobian_residual": self.jacobian_residual,
            "identity": self.identity.to_json(),
            "verification": self.report.to_json(),
        })
    }
}

fn closure_sample(domain: &Domain, count: usize) -> Result<Vec<Point>> {
    let mut pts = domain.sample_interior(SampleStrategy::TensorGrid, count, 0)?;
    pts.extend(domain.distinguished_boundary(64)?);
    Ok(pts)
}

/// `f(z′, z_n) = (z′, ∫_{γ(z′)}^{z_n} g(z′, τ) dτ + γ(z′))`, whose Jacobian
/// determinant is `g`.
pub fn deform_convex(recipe: &DeformationRecipe, cfg: &DeformationConfig) -> Result<Deformation> {
    let base = &recipe.base;
    let n = base.dim();
    if recipe.g.domain().to_json() != base.to_json() {
        return Err(QdError::RecipeInvalid("g must live on the base domain".into()));
    }
    if recipe.gamma.free_vars().iter().any(|&v| v + 1 >= n) {
        return Err(QdError::RecipeInvalid("γ may depend on z′ only".into()));
    }
    let g_expr = recipe.g.to_expr()?;
    let closure = closure_sample(base, cfg.check_points)?;
    let mut sup_dev: f64 = 0.0;
    for z in &closure {
        sup_dev = sup_dev.max((g_expr.eval(z)? - 1.0).norm());
        let mut shadow = z.clone();
        shadow[n - 1] = recipe.gamma.eval(z)?;
        if !base.membership(&shadow)?.eq(&crate::geometry::Membership::Inside) && base.contains(z)? {
            return Err(QdError::RecipeInvalid(format!("(z′, γ(z′)) leaves the base at {z:?}")));
        }
    }
    if sup_dev >= 1.0 {
        return Err(QdError::RecipeInvalid(format!("sup |g − 1| = {sup_dev} is not below 1")));
    }

    let last = g_expr.clone().integrate_from(n - 1, recipe.gamma.clone()) + recipe.gamma.clone();
    let mut components: Vec<Expr> = (0..n - 1).map(Expr::var).collect();
    components.push(last);
    let map = HolomorphicMap::new("convex-deformation", components);

    let scan = injectivity_scan(&map, base, cfg.scan_resolution)?;
    if !scan.injective_on_sample {
        return Err(QdError::UnivalenceSampleFailure(format!("witness {:?}", scan.witness)));
    }

    let checks = base.sample_interior(SampleStrategy::TensorGrid, cfg.check_points, 0)?;
    let mut jacobian_residual: f64 = 0.0;
    for z in &checks {
        let d = map.jacobian_determinant(z)? - recipe.g.evaluate(z)?;
        jacobian_residual = jacobian_residual.max(d.norm());
    }
    let mut closeness: f64 = 0.0;
    for z in &closure {
        let w = map.evaluate(z)?;
        for (a, b) in w.iter().zip(z) {
            closeness = closeness.max((a - b).norm());
        }
    }

    let identity = extract_quadrature_identity(&map, &recipe.g, None)?;
    let report = verify_identity(
        &identity,
        &monomials(n, cfg.test_degree),
        &cfg.scheme,
        cfg.tolerance,
    )?;
    Ok(Deformation {
        map,
        identity,
        report,
        closeness,
        jacobian_residual,
    })
}

/// `π²K(·,0) + ε·π²·∂K/∂w̄₂(·,0)` on the unit bidisc, i.e. `1 + 2εz₂`.
pub fn bidisc_linear_jacobian(eps: f64) -> Result<SpanElement> {
    let bid = Domain::unit_polydisc(2, 1.0)?;
    let o = vec![C64::new(0.0, 0.0); 2];
    SpanElement::new(
        &bid,
        vec![
            crate::span::SpanTerm::new(o.clone(), MultiIndex::zeros(2), C64::new(PI * PI, 0.0)),
            crate::span::SpanTerm::new(o, MultiIndex::new(vec![0, 1]), C64::new(eps * PI * PI, 0.0)),
        ],
    )
}
