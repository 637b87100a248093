//! Integration over domains and residual checks of quadrature identities.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::expr::Expr;
use crate::gauss::legendre_unit;
use crate::geometry::{Disc, Domain, Point, SampleStrategy};
use crate::jets::MultiIndex;
use crate::maps::HolomorphicMap;
use crate::par;
use crate::qmc::Halton;
use crate::span::{membership_residual_with, MembershipConfig, MembershipTrace};
use crate::transport::QuadratureIdentity;

/// Relative tolerance for the total-weight check of a rule.
pub const VOLUME_TOL: f64 = 1e-6;

/// Below this modulus an integral is compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum SchemeKind {
    /// Gauss in the radius times trapezoid in the angle, per planar factor.
    /// Balls use the same orders on the collapsed simplex of squared radii.
    TensorGauss { radial: usize, angular: usize },
    QuasiMonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct IntegrationScheme {
    pub kind: SchemeKind,
    /// Integrate over `φ(domain)` by pulling back with weight `|det Jφ|²`.
    pub change_of_variables: Option<HolomorphicMap>,
}

impl IntegrationScheme {
    pub fn tensor(radial: usize, angular: usize) -> IntegrationScheme {
        IntegrationScheme {
            kind: SchemeKind::TensorGauss { radial, angular },
            change_of_variables: None,
        }
    }

    pub fn qmc(samples: usize, seed: u64) -> IntegrationScheme {
        IntegrationScheme {
            kind: SchemeKind::QuasiMonteCarlo { samples, seed },
            change_of_variables: None,
        }
    }

    pub fn with_change_of_variables(mut self, map: HolomorphicMap) -> IntegrationScheme {
        self.change_of_variables = Some(map);
        self
    }

    /// 64×64 for planar domains; 24×48 per factor in two variables and
    /// 12×24 beyond.
    pub fn default_for(domain: &Domain) -> IntegrationScheme {
        match domain.dim() {
            1 => IntegrationScheme::tensor(64, 64),
            2 => IntegrationScheme::tensor(24, 48),
            _ => IntegrationScheme::tensor(12, 24),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = match &self.kind {
            SchemeKind::TensorGauss { radial, angular } => {
                json!({"kind": "tensor-gauss", "radial": radial, "angular": angular})
            }
            SchemeKind::QuasiMonteCarlo { samples, seed } => {
                json!({"kind": "quasi-monte-carlo", "samples": samples, "seed": seed})
            }
        };
        if let Some(m) = &self.change_of_variables {
            v["change_of_variables"] = json!(m.name());
        }
        v
    }
}

/// A function to integrate: a monomial `ζ^β` or an expression.
#[derive(Clone, Debug)]
pub enum TestFunction {
    Monomial(MultiIndex),
    Expr { label: String, expr: Expr },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::Monomial(b) => format!("z^{b}"),
            TestFunction::Expr { label, .. } => label.clone(),
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            TestFunction::Monomial(b) => b
                .exponents()
                .iter()
                .enumerate()
                .fold(Expr::one(), |acc, (i, &e)| acc * Expr::var(i).powi(e)),
            TestFunction::Expr { expr, .. } => expr.clone(),
        }
    }

    fn eval(&self, p: &[C64]) -> Result<C64> {
        match self {
            TestFunction::Monomial(b) => Ok(b.monomial(p)),
            TestFunction::Expr { expr, .. } => expr.eval(p),
        }
    }
}

pub fn monomials(dim: usize, degree: usize) -> Vec<TestFunction> {
    MultiIndex::all_up_to(dim, degree)
        .into_iter()
        .map(TestFunction::Monomial)
        .collect()
}

/// Polar rule on a disc, with signed weights.
#[derive(Clone, Debug)]
struct PlanarRule {
    points: Vec<C64>,
    weights: Vec<f64>,
}

impl PlanarRule {
    fn disc(d: &Disc, radial: usize, angular: usize, sign: f64) -> PlanarRule {
        let (rho, w) = legendre_unit(radial);
        let mut points = Vec::with_capacity(radial * angular);
        let mut weights = Vec::with_capacity(radial * angular);
        let dtheta = 2.0 * PI / angular as f64;
        for (r, wr) in rho.iter().zip(&w) {
            for k in 0..angular {
                let theta = dtheta * k as f64;
                points.push(d.center + C64::from_polar(d.radius * r, theta));
                weights.push(sign * wr * r * d.radius * d.radius * dtheta);
            }
        }
        PlanarRule { points, weights }
    }

    /// Outer disc minus the holes; the integrand must extend smoothly across
    /// the holes.
    fn planar(domain: &Domain, radial: usize, angular: usize) -> Result<PlanarRule> {
        match domain {
            Domain::Disc(d) => Ok(PlanarRule::disc(d, radial, angular, 1.0)),
            Domain::CircleDomain { outer, holes } => {
                let mut r = PlanarRule::disc(outer, radial, angular, 1.0);
                for h in holes {
                    let hr = PlanarRule::disc(h, radial, angular, -1.0);
                    r.points.extend(hr.points);
                    r.weights.extend(hr.weights);
                }
                Ok(r)
            }
            _ => Err(QdError::Unsupported(format!("{} is not planar", domain.kind_name()))),
        }
    }
}

#[derive(Clone, Debug)]
enum BaseRule {
    Factors(Vec<PlanarRule>),
    Ball {
        center: Point,
        radius: f64,
        s: Vec<f64>,
        ws: Vec<f64>,
        angular: usize,
    },
}

/// Nodes and weights on a canonical domain, optionally pushed forward.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    base: BaseRule,
    map: Option<(HolomorphicMap, Expr)>,
    len: usize,
}

impl QuadratureRule {
    pub fn tensor(domain: &Domain, radial: usize, angular: usize) -> Result<QuadratureRule> {
        if radial == 0 || angular == 0 {
            return Err(QdError::InvalidDomain("rule orders must be positive".into()));
        }
        let (base_domain, map) = match domain {
            Domain::Image { base, map } => (base.as_ref(), Some(map.as_ref().clone())),
            d => (d, None),
        };
        let base = match base_domain {
            Domain::Disc(_) | Domain::CircleDomain { .. } => {
                BaseRule::Factors(vec![PlanarRule::planar(base_domain, radial, angular)?])
            }
            Domain::Polydisc(ds) => BaseRule::Factors(
                ds.iter().map(|d| PlanarRule::disc(d, radial, angular, 1.0)).collect(),
            ),
            Domain::Product(f) => BaseRule::Factors(
                f.iter()
                    .map(|d| PlanarRule::planar(d, radial, angular))
                    .collect::<Result<_>>()?,
            ),
            Domain::Ball { center, radius, .. } => {
                let (s, ws) = legendre_unit(radial);
                BaseRule::Ball {
                    center: center.clone(),
                    radius: *radius,
                    s,
                    ws,
                    angular,
                }
            }
            Domain::Image { .. } => {
                return Err(QdError::Unsupported("nested mapped domains".into()));
            }
        };
        let len = match &base {
            BaseRule::Factors(f) => f.iter().map(|r| r.points.len()).product(),
            BaseRule::Ball { center, s, angular, .. } => (s.len() * angular).pow(center.len() as u32),
        };
        let rule = QuadratureRule {
            base,
            map: map.map(|m| {
                let u = m.jacobian_expr();
                (m, u)
            }),
            len,
        };
        if let Some(vol) = base_domain.volume() {
            let total = rule.base_weight_sum();
            if ((total - vol) / vol).abs() > VOLUME_TOL {
                return Err(QdError::SchemeVolumeMismatch {
                    expected: vol,
                    got: total,
                });
            }
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn base_weight_sum(&self) -> f64 {
        par::sum_real(self.len, |i| self.base_node(i).1)
    }

    fn base_node(&self, mut i: usize) -> (Point, f64) {
        match &self.base {
            BaseRule::Factors(f) => {
                let mut p = Vec::with_capacity(f.len());
                let mut w = 1.0;
                for r in f {
                    let k = i % r.points.len();
                    i /= r.points.len();
                    p.push(r.points[k]);
                    w *= r.weights[k];
                }
                (p, w)
            }
            BaseRule::Ball {
                center,
                radius,
                s,
                ws,
                angular,
            } => {
                let n = center.len();
                let dtheta = 2.0 * PI / *angular as f64;
                let mut used = 0.0;
                let mut w = radius.powi(2 * n as i32) * 0.5f64.powi(n as i32);
                let mut p = Vec::with_capacity(n);
                for c in center {
                    let ks = i % s.len();
                    i /= s.len();
                    let ka = i % angular;
                    i /= angular;
                    let t = (1.0 - used) * s[ks];
                    w *= ws[ks] * (1.0 - used) * dtheta;
                    used += t;
                    p.push(c + C64::from_polar(radius * t.max(0.0).sqrt(), dtheta * ka as f64));
                }
                (p, w)
            }
        }
    }

    /// Node `i` in the target domain and its weight.
    pub fn node(&self, i: usize) -> Result<(Point, f64)> {
        let (z, w) = self.base_node(i);
        match &self.map {
            None => Ok((z, w)),
            Some((m, u)) => {
                let det = u.eval(&z)?;
                Ok((m.evaluate(&z)?, w * det.norm_sqr()))
            }
        }
    }

    /// `∫ f` for every `f`, with a fixed reduction order.
    pub fn integrate_all(&self, fs: &[TestFunction]) -> Result<Vec<C64>> {
        let partial = par::map_chunks(self.len, |range| -> Result<Vec<C64>> {
            let mut acc = vec![C64::new(0.0, 0.0); fs.len()];
            for i in range {
                let (p, w) = self.node(i)?;
                for (a, f) in acc.iter_mut().zip(fs) {
                    *a += w * f.eval(&p)?;
                }
            }
            Ok(acc)
        });
        let mut total = vec![C64::new(0.0, 0.0); fs.len()];
        for chunk in partial {
            for (t, c) in total.iter_mut().zip(chunk?) {
                *t += c;
            }
        }
        Ok(total)
    }
}

/// `∫_domain f` for each test function.
pub fn integrate_many(domain: &Domain, fs: &[TestFunction], scheme: &IntegrationScheme) -> Result<Vec<C64>> {
    let target = match &scheme.change_of_variables {
        Some(m) => Domain::image(domain.clone(), m.clone())?,
        None => domain.clone(),
    };
    match (&scheme.kind, &target) {
        (SchemeKind::TensorGauss { radial, angular }, d) => QuadratureRule::tensor(d, *radial, *angular)?.integrate_all(fs),
        (SchemeKind::QuasiMonteCarlo { samples, seed }, Domain::Image { base, map }) => {
            if scheme.change_of_variables.is_some() {
                qmc_pullback(base, map, fs, *samples, *seed)
            } else {
                DirectSampler::new(&target, *seed)?.integrate(fs, *samples)
            }
        }
        (SchemeKind::QuasiMonteCarlo { samples, seed }, d) => qmc_canonical(d, fs, *samples, *seed),
    }
}

pub fn integrate(domain: &Domain, f: &Expr, scheme: &IntegrationScheme) -> Result<C64> {
    let fs = [TestFunction::Expr {
        label: "f".into(),
        expr: f.clone(),
    }];
    Ok(integrate_many(domain, &fs, scheme)?[0])
}

fn box_point(bounds: &[Disc], u: &[f64]) -> Point {
    bounds
        .iter()
        .enumerate()
        .map(|(i, b)| {
            b.center + C64::new(b.radius * (2.0 * u[2 * i] - 1.0), b.radius * (2.0 * u[2 * i + 1] - 1.0))
        })
        .collect()
}

/// Halton points in the bounding box; weights are the closed-form volume
/// divided by the number of hits.
fn qmc_canonical(domain: &Domain, fs: &[TestFunction], samples: usize, seed: u64) -> Result<Vec<C64>> {
    let bounds = domain.coordinate_bounds()?;
    let halton = Halton::new(2 * domain.dim(), seed);
    let partial = par::map_chunks(samples, |range| -> Result<(usize, Vec<C64>)> {
        let mut acc = vec![C64::new(0.0, 0.0); fs.len()];
        let mut hits = 0;
        for i in range {
            let p = box_point(&bounds, &halton.point(i as u64 + 1));
            if domain.contains(&p)? {
                hits += 1;
                for (a, f) in acc.iter_mut().zip(fs) {
                    *a += f.eval(&p)?;
                }
            }
        }
        Ok((hits, acc))
    });
    let mut hits = 0;
    let mut total = vec![C64::new(0.0, 0.0); fs.len()];
    for chunk in partial {
        let (h, acc) = chunk?;
        hits += h;
        for (t, c) in total.iter_mut().zip(acc) {
            *t += c;
        }
    }
    if hits == 0 {
        return Err(QdError::EmptyDomain {
            found: 0,
            requested: samples,
        });
    }
    let box_volume: f64 = bounds.iter().map(|b| 4.0 * b.radius * b.radius).product();
    let weight = domain.volume().unwrap_or(box_volume * hits as f64 / samples as f64) / hits as f64;
    Ok(total.into_iter().map(|t| t * weight).collect())
}

fn qmc_pullback(
    base: &Domain,
    map: &HolomorphicMap,
    fs: &[TestFunction],
    samples: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    let u = map.jacobian_expr();
    let pulled: Vec<TestFunction> = fs
        .iter()
        .map(|f| TestFunction::Expr {
            label: f.label(),
            expr: f.to_expr().compose(map.components()),
        })
        .collect();
    let bounds = base.coordinate_bounds()?;
    let halton = Halton::new(2 * base.dim(), seed);
    let partial = par::map_chunks(samples, |range| -> Result<(usize, Vec<C64>)> {
        let mut acc = vec![C64::new(0.0, 0.0); fs.len()];
        let mut hits = 0;
        for i in range {
            let p = box_point(&bounds, &halton.point(i as u64 + 1));
            if base.contains(&p)? {
                hits += 1;
                let w = u.eval(&p)?.norm_sqr();
                for (a, f) in acc.iter_mut().zip(&pulled) {
                    *a += w * f.eval(&p)?;
                }
            }
        }
        Ok((hits, acc))
    });
    let mut hits = 0;
    let mut total = vec![C64::new(0.0, 0.0); fs.len()];
    for chunk in partial {
        let (h, acc) = chunk?;
        hits += h;
        for (t, c) in total.iter_mut().zip(acc) {
            *t += c;
        }
    }
    let vol = base
        .volume()
        .ok_or_else(|| QdError::Unsupported("pullback base needs a closed-form volume".into()))?;
    if hits == 0 {
        return Err(QdError::EmptyDomain {
            found: 0,
            requested: samples,
        });
    }
    Ok(total.into_iter().map(|t| t * (vol / hits as f64)).collect())
}

/// Quasi-random integration over a mapped domain that only uses membership
/// of the target, never the pullback weight.
///
/// The domain is covered by axis-aligned cells in real coordinates. Cells
/// are seeded from forward images of base points and grown through
/// neighbours that contain sampled members. Each cell gets its own shifted
/// Halton stream, used in antithetic pairs; cells cut by the boundary
/// receive the remaining budget.
pub struct DirectSampler<'a> {
    domain: &'a Domain,
    cell: f64,
    per_cell: usize,
    seed: u64,
}

type CellKey = Vec<i64>;

struct CellStats {
    samples: usize,
    hits: usize,
    sums: Vec<C64>,
}

impl<'a> DirectSampler<'a> {
    pub fn new(domain: &'a Domain, seed: u64) -> Result<DirectSampler<'a>> {
        let base = match domain {
            Domain::Image { base, .. } => base,
            _ => return Err(QdError::Unsupported("direct sampling is for mapped domains".into())),
        };
        let scale = base.coordinate_bounds()?.iter().map(|d| d.radius).fold(0.0, f64::max);
        Ok(DirectSampler {
            domain,
            cell: 0.15 * scale,
            per_cell: 16,
            seed,
        })
    }

    pub fn with_cell(mut self, cell: f64, per_cell: usize) -> DirectSampler<'a> {
        self.cell = cell;
        self.per_cell = (per_cell.max(2) + 1) & !1;
        self
    }

    fn key_of(&self, p: &[C64]) -> CellKey {
        p.iter()
            .flat_map(|z| [(z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64])
            .collect()
    }

    fn stream(&self, key: &CellKey) -> Halton {
        let mut h: u64 = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for k in key {
            h = (h ^ (*k as u64)).wrapping_mul(0x100_0000_01b3).rotate_left(17);
        }
        Halton::new(key.len(), h)
    }

    fn sample_cell(&self, key: &CellKey, from: usize, to: usize, fs: &[TestFunction]) -> Result<CellStats> {
        let halton = self.stream(key);
        let mut st = CellStats {
            samples: 0,
            hits: 0,
            sums: vec![C64::new(0.0, 0.0); fs.len()],
        };
        for i in from..to {
            // antithetic pairs integrate linear functions exactly per cell
            let mut u = halton.point((i / 2) as u64 + 1);
            if i % 2 == 1 {
                for x in u.iter_mut() {
                    *x = 1.0 - *x;
                }
            }
            let p: Point = (0..key.len() / 2)
                .map(|j| {
                    C64::new(
                        (key[2 * j] as f64 + u[2 * j]) * self.cell,
                        (key[2 * j + 1] as f64 + u[2 * j + 1]) * self.cell,
                    )
                })
                .collect();
            st.samples += 1;
            if self.domain.contains(&p)? {
                st.hits += 1;
                for (s, f) in st.sums.iter_mut().zip(fs) {
                    *s += f.eval(&p)?;
                }
            }
        }
        Ok(st)
    }

    fn neighbours(key: &CellKey) -> Vec<CellKey> {
        let d = key.len();
        let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut k = key.clone();
            let mut zero = true;
            for x in k.iter_mut() {
                let off = (c % 3) as i64 - 1;
                c /= 3;
                if off != 0 {
                    zero = false;
                }
                *x += off;
            }
            if !zero {
                out.push(k);
            }
        }
        out
    }

    fn discover(
        &self,
        mut frontier: BTreeSet<CellKey>,
        cells: &mut BTreeMap<CellKey, CellStats>,
        fs: &[TestFunction],
    ) -> Result<()> {
        frontier.retain(|k| !cells.contains_key(k));
        while !frontier.is_empty() {
            let batch: Vec<CellKey> = std::mem::take(&mut frontier).into_iter().collect();
            let stats = par::map_slice(&batch, |k| self.sample_cell(k, 0, self.per_cell, fs));
            for (k, st) in batch.into_iter().zip(stats) {
                let st = st?;
                if st.hits > 0 {
                    frontier.extend(Self::neighbours(&k));
                }
                cells.insert(k, st);
            }
            frontier.retain(|k| !cells.contains_key(k));
        }
        Ok(())
    }

    /// Integrals of `fs` using roughly `samples` membership tests in total.
    pub fn integrate(&self, fs: &[TestFunction], samples: usize) -> Result<Vec<C64>> {
        let (base, map) = match self.domain {
            Domain::Image { base, map } => (base, map),
            _ => unreachable!(),
        };
        let seeds = base.sample_interior(SampleStrategy::QuasiRandom, 4096, self.seed)?;
        let mut frontier: BTreeSet<CellKey> = BTreeSet::new();
        for z in &seeds {
            frontier.insert(self.key_of(&map.evaluate(z)?));
        }
        let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
        self.discover(frontier, &mut cells, fs)?;

        // Every cell except those that look full together with all their
        // neighbours is re-estimated from fresh samples only, so the choice
        // of cells does not bias their estimates.
        let mut refined: BTreeSet<CellKey> = BTreeSet::new();
        loop {
            let full = |k: &CellKey| cells.get(k).is_some_and(|c| c.hits == c.samples);
            let pending: Vec<CellKey> = cells
                .keys()
                .filter(|k| !refined.contains(*k))
                .filter(|k| !(full(k) && Self::neighbours(k).iter().all(full)))
                .cloned()
                .collect();
            if pending.is_empty() {
                break;
            }
            let used: usize = cells.values().map(|c| c.samples).sum();
            let extra = (samples.saturating_sub(used) / pending.len()).clamp(self.per_cell, 4096) & !1;
            let fresh = par::map_slice(&pending, |k| self.sample_cell(k, self.per_cell, self.per_cell + extra, fs));
            let mut grow = BTreeSet::new();
            for (k, st) in pending.into_iter().zip(fresh) {
                let st = st?;
                if st.hits > 0 && cells[&k].hits == 0 {
                    grow.extend(Self::neighbours(&k));
                }
                refined.insert(k.clone());
                cells.insert(k, st);
            }
            self.discover(grow, &mut cells, fs)?;
        }

        let vol = self.cell.powi(2 * self.domain.dim() as i32);
        let mut total = vec![C64::new(0.0, 0.0); fs.len()];
        for c in cells.values() {
            for (t, s) in total.iter_mut().zip(&c.sums) {
                *t += s * (vol / c.samples as f64);
            }
        }
        Ok(total)
    }
}

#[derive(Clone, Debug)]
pub struct TestResidual {
    pub label: String,
    pub integral: C64,
    pub predicted: C64,
    pub absolute: f64,
    /// Relative when `|∫| > 1e-8`, absolute otherwise.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub claim: String,
    pub scheme: Value,
    pub tolerance: f64,
    pub tests: Vec<TestResidual>,
    pub max_residual: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "claim": self.claim,
            "scheme": self.scheme,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "pass": self.pass,
            "tests": self.tests.iter().map(|t| json!({
                "test": t.label,
                "integral": [t.integral.re, t.integral.im],
                "predicted": [t.predicted.re, t.predicted.im],
                "absolute": t.absolute,
                "residual": t.residual,
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn residual_of(integral: C64, predicted: C64) -> (f64, f64) {
    let abs = (integral - predicted).norm();
    let rel = if integral.norm() > RELATIVE_FLOOR { abs / integral.norm() } else { abs };
    (abs, rel)
}

/// Compares `∫ f` against the identity for every test function.
pub fn verify_identity(
    q: &QuadratureIdentity,
    tests: &[TestFunction],
    scheme: &IntegrationScheme,
    tolerance: f64,
) -> Result<VerificationReport> {
    let integrals = integrate_many(&q.domain, tests, scheme)?;
    let mut out = Vec::with_capacity(tests.len());
    let mut max_residual: f64 = 0.0;
    for (t, integral) in tests.iter().zip(integrals) {
        let predicted = q.apply(&t.to_expr())?;
        let (absolute, residual) = residual_of(integral, predicted);
        max_residual = max_residual.max(residual);
        out.push(TestResidual {
            label: t.label(),
            integral,
            predicted,
            absolute,
            residual,
        });
    }
    Ok(VerificationReport {
        claim: format!("quadrature identity on {}", q.domain.kind_name()),
        scheme: scheme.to_json(),
        tolerance,
        tests: out,
        max_residual,
        pass: max_residual < tolerance,
    })
}

#[derive(Clone, Debug)]
pub struct QdpRow {
    pub alpha: MultiIndex,
    pub trace: MembershipTrace,
}

#[derive(Clone, Debug)]
pub struct QdpTable {
    pub rows: Vec<QdpRow>,
    /// All `u·f^α` accepted.
    pub consistent: bool,
}

impl QdpTable {
    pub fn to_json(&self) -> Value {
        json!({
            "qdp_consistent": self.consistent,
            "rows": self.rows.iter().map(|r| json!({
                "alpha": r.alpha.exponents(),
                "verdict": r.trace.verdict.label(),
                "best_residual": r.trace.best_residual(),
                "trace": r.trace.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// `u·f^α`.
pub fn qdp_candidate(f: &HolomorphicMap, alpha: &MultiIndex) -> Expr {
    alpha
        .exponents()
        .iter()
        .zip(f.components())
        .fold(f.jacobian_expr(), |acc, (&e, c)| if e == 0 { acc } else { acc * c.clone().powi(e) })
}

/// Membership of `u·f^α` in the span of `domain` for every `|α| ≤ max_degree`.
pub fn qdp_check(
    f: &HolomorphicMap,
    domain: &Domain,
    max_degree: usize,
    nodes: &[Point],
    cfg: &MembershipConfig,
) -> Result<QdpTable> {
    let rows = MultiIndex::all_up_to(f.dim(), max_degree)
        .into_iter()
        .map(|alpha| {
            let trace = membership_residual_with(&qdp_candidate(f, &alpha), domain, nodes, cfg)?;
            Ok(QdpRow { alpha, trace })
        })
        .collect::<Result<Vec<_>>>()?;
    let consistent = rows.iter().all(|r| r.trace.verdict.is_in_span());
    Ok(QdpTable { rows, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::named;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn disc_examples() {
        let d = Domain::unit_disc();
        let s = IntegrationScheme::tensor(64, 64);
        let one = integrate(&d, &Expr::one(), &s).unwrap();
        assert!((one - PI).norm() / PI < 1e-10);
        for k in 1..=10 {
            assert!(integrate(&d, &Expr::var(0).powi(k), &s).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn exp_image_volume() {
        let v = Domain::image(Domain::unit_polydisc(2, 1.0).unwrap(), named::exp_map()).unwrap();
        let vol = integrate(&v, &Expr::one(), &IntegrationScheme::default_for(&v)).unwrap();
        assert!((vol - PI * PI).norm() / (PI * PI) < 1e-10);
    }

    #[test]
    fn ball_volume() {
        let b = Domain::unit_ball(2).unwrap();
        let vol = integrate(&b, &Expr::one(), &IntegrationScheme::tensor(16, 16)).unwrap();
        assert!((vol - PI * PI / 2.0).norm() < 1e-8);
        let m = integrate(&b, &(Expr::var(0) * Expr::var(1)), &IntegrationScheme::tensor(16, 16)).unwrap();
        assert!(m.norm() < 1e-12);
    }

    #[test]
    fn annulus_subtraction() {
        let a = Domain::circle_domain(Disc::unit(), vec![Disc::new(c(0.0, 0.0), 0.3)]).unwrap();
        let vol = integrate(&a, &Expr::one(), &IntegrationScheme::tensor(32, 32)).unwrap();
        assert!((vol - PI * 0.91).norm() < 1e-12);
    }

    #[test]
    fn qmc_disc_volume_is_exact_by_scaling() {
        let d = Domain::unit_disc();
        let v = integrate(&d, &Expr::one(), &IntegrationScheme::qmc(10_000, 1)).unwrap();
        assert!((v - PI).norm() < 1e-12);
        let m = integrate(&d, &Expr::var(0), &IntegrationScheme::qmc(100_000, 1)).unwrap();
        assert!(m.norm() < 1e-2);
    }

    #[test]
    fn mean_value_identity_report() {
        let d = Domain::unit_disc();
        let q = QuadratureIdentity::new(
            d.clone(),
            vec![crate::span::SpanTerm::new(vec![c(0.0, 0.0)], MultiIndex::zeros(1), c(PI, 0.0))],
        );
        let r = verify_identity(&q, &monomials(1, 10), &IntegrationScheme::default_for(&d), 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.tests.len(), 11);
    }
}
