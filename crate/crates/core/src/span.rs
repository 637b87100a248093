//! Bergman-span elements and numerical span membership.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::expr::Expr;
use crate::geometry::{complex_json, parse_complex, parse_point, point_json, Domain, Point, SampleStrategy};
use crate::jets::MultiIndex;
use crate::kernels::KernelHandle;
use crate::par;

/// One summand `coeff · ∂^α/∂w̄^α K(·, w)|_{w=node}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanTerm {
    pub node: Point,
    pub alpha: MultiIndex,
    pub coeff: C64,
}

impl SpanTerm {
    pub fn new(node: Point, alpha: MultiIndex, coeff: C64) -> SpanTerm {
        SpanTerm { node, alpha, coeff }
    }
}

/// Finite combination of antiholomorphic kernel derivatives.
#[derive(Clone, Debug)]
pub struct SpanElement {
    kernel: KernelHandle,
    terms: Vec<SpanTerm>,
}

fn node_key(p: &[C64]) -> Vec<(u64, u64)> {
    p.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
}

impl SpanElement {
    pub fn empty(domain: &Domain) -> Result<SpanElement> {
        Ok(SpanElement {
            kernel: KernelHandle::new(domain)?,
            terms: Vec::new(),
        })
    }

    /// Builds an element, merging terms with identical node and index.
    pub fn new(domain: &Domain, terms: Vec<SpanTerm>) -> Result<SpanElement> {
        let mut s = SpanElement::empty(domain)?;
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    /// `c·K(·, node)`.
    pub fn point_mass(domain: &Domain, node: Point, c: C64) -> Result<SpanElement> {
        let dim = domain.dim();
        SpanElement::new(domain, vec![SpanTerm::new(node, MultiIndex::zeros(dim), c)])
    }

    pub fn push(&mut self, t: SpanTerm) -> Result<()> {
        let dim = self.domain().dim();
        if t.node.len() != dim || t.alpha.dim() != dim {
            return Err(QdError::DimensionMismatch {
                expected: dim,
                got: if t.node.len() != dim { t.node.len() } else { t.alpha.dim() },
            });
        }
        let key = node_key(&t.node);
        if let Some(existing) = self
            .terms
            .iter_mut()
            .find(|e| e.alpha == t.alpha && node_key(&e.node) == key)
        {
            existing.coeff += t.coeff;
            return Ok(());
        }
        if !self.domain().contains(&t.node)? {
            return Err(QdError::OutsideDomain);
        }
        self.terms.push(t);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        self.kernel.domain()
    }

    pub fn kernel(&self) -> &KernelHandle {
        &self.kernel
    }

    pub fn terms(&self) -> &[SpanTerm] {
        &self.terms
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.alpha.order()).max().unwrap_or(0)
    }

    /// Distinct nodes in order of first appearance.
    pub fn nodes(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|n| node_key(n) == node_key(&t.node)) {
                out.push(t.node.clone());
            }
        }
        out
    }

    pub fn evaluate(&self, z: &[C64]) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for node in self.nodes() {
            let key = node_key(&node);
            let here: Vec<&SpanTerm> = self.terms.iter().filter(|t| node_key(&t.node) == key).collect();
            let order = here.iter().map(|t| t.alpha.order()).max().unwrap_or(0);
            let jet = self.kernel.derivative_jet(z, &node, order)?;
            for t in here {
                total += t.coeff * jet.derivative_at(&t.alpha)?;
            }
        }
        Ok(total)
    }

    pub fn add(&self, other: &SpanElement) -> Result<SpanElement> {
        if self.domain().to_json() != other.domain().to_json() {
            return Err(QdError::InvalidDomain("span elements live on different domains".into()));
        }
        let mut s = self.clone();
        for t in &other.terms {
            s.push(t.clone())?;
        }
        Ok(s)
    }

    pub fn scale(&self, c: C64) -> SpanElement {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.coeff *= c;
        }
        s
    }

    /// `⟨φ, self⟩ = Σ conj(c)·∂^α φ(node)` for `φ` given as an expression.
    pub fn pair_with(&self, phi: &Expr) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for t in &self.terms {
            let jet = crate::jets::jet_lift(phi, &t.node, t.alpha.order())?;
            total += t.coeff.conj() * jet.derivative_at(&t.alpha)?;
        }
        Ok(total)
    }

    /// Closed form as an expression in `z` (canonical domains only).
    pub fn to_expr(&self) -> Result<Expr> {
        let mut acc = Expr::zero();
        for t in &self.terms {
            acc = acc + Expr::constant(t.coeff) * self.kernel.derivative_expr(&t.node, &t.alpha)?;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "domain": self.domain().to_json(),
            "terms": self.terms.iter().map(|t| json!({
                "node": point_json(&t.node),
                "alpha": t.alpha.exponents(),
                "coeff": complex_json(t.coeff),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<SpanElement> {
        let domain = Domain::from_json(
            v.get("domain")
                .ok_or_else(|| QdError::Parse("span element needs a domain".into()))?,
        )?;
        let mut terms = Vec::new();
        for t in v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| QdError::Parse("span element needs terms".into()))?
        {
            let node = parse_point(t.get("node").unwrap_or(&Value::Null))?;
            let alpha: Vec<u32> = serde_json::from_value(t.get("alpha").cloned().unwrap_or(Value::Null))
                .map_err(|e| QdError::Parse(format!("alpha: {e}")))?;
            let coeff = parse_complex(t.get("coeff").unwrap_or(&Value::Null))?;
            terms.push(SpanTerm::new(node, MultiIndex::new(alpha), coeff));
        }
        SpanElement::new(&domain, terms)
    }
}

pub fn evaluate_span(s: &SpanElement, z: &[C64]) -> Result<C64> {
    s.evaluate(z)
}

/// Element on the product of the factor domains whose value is the product
/// of the factor values.
pub fn product_span(factors: &[SpanElement]) -> Result<SpanElement> {
    if factors.is_empty() {
        return Err(QdError::InvalidDomain("no factors".into()));
    }
    for f in factors {
        if !f.domain().is_planar() {
            return Err(QdError::InvalidDomain("product factors must be planar".into()));
        }
    }
    let domain = if factors.iter().all(|f| matches!(f.domain(), Domain::Disc(_))) {
        Domain::polydisc(
            factors
                .iter()
                .map(|f| match f.domain() {
                    Domain::Disc(d) => *d,
                    _ => unreachable!(),
                })
                .collect(),
        )?
    } else {
        Domain::product(factors.iter().map(|f| f.domain().clone()).collect())?
    };
    let mut partial: Vec<(Point, Vec<u32>, C64)> = vec![(Vec::new(), Vec::new(), C64::new(1.0, 0.0))];
    for f in factors {
        let mut next = Vec::with_capacity(partial.len() * f.terms.len());
        for (node, alpha, c) in &partial {
            for t in &f.terms {
                let mut n = node.clone();
                n.extend_from_slice(&t.node);
                let mut a = alpha.clone();
                a.extend_from_slice(t.alpha.exponents());
                next.push((n, a, c * t.coeff));
            }
        }
        partial = next;
    }
    SpanElement::new(
        &domain,
        partial
            .into_iter()
            .map(|(n, a, c)| SpanTerm::new(n, MultiIndex::new(a), c))
            .collect(),
    )
}

/// `k^n` nodes around the domain center: a `k×k` lattice in the plane for
/// planar domains, a real `k`-point lattice per coordinate otherwise, with
/// half-width half the inradius.
pub fn centered_lattice(domain: &Domain, k: usize) -> Result<Vec<Point>> {
    let center = domain.center()?;
    if k <= 1 {
        return Ok(vec![center]);
    }
    let (base, map) = match domain {
        Domain::Image { base, map } => (base.as_ref(), Some(map)),
        d => (d, None),
    };
    let c = base.center()?;
    let half = 0.5 * base.inradius().ok_or_else(|| QdError::Unsupported("no inradius".into()))?;
    let offsets: Vec<f64> = (0..k)
        .map(|i| -half + 2.0 * half * i as f64 / (k - 1) as f64)
        .collect();
    let mut out = Vec::new();
    if base.is_planar() {
        for &y in &offsets {
            for &x in &offsets {
                out.push(vec![c[0] + C64::new(x, y)]);
            }
        }
    } else {
        let n = base.dim();
        for idx in 0..k.pow(n as u32) {
            let mut rem = idx;
            let mut p = Vec::with_capacity(n);
            for ci in &c {
                p.push(ci + offsets[rem % k]);
                rem /= k;
            }
            out.push(p);
        }
    }
    // keep only lattice points inside (matters for balls and circle domains)
    let mut kept = Vec::new();
    for p in out {
        if base.contains(&p)? {
            kept.push(match map {
                Some(m) => m.evaluate(&p)?,
                None => p,
            });
        }
    }
    Ok(kept)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    InSpan { tol: f64 },
    NotInSpan { floor: f64 },
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::InSpan { .. } => "in_span",
            Verdict::NotInSpan { .. } => "not_in_span",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_in_span(&self) -> bool {
        matches!(self, Verdict::InSpan { .. })
    }

    pub fn is_not_in_span(&self) -> bool {
        matches!(self, Verdict::NotInSpan { .. })
    }
}

#[derive(Clone, Debug)]
pub struct MembershipConfig {
    pub max_order: usize,
    pub accept_tol: f64,
    pub reject_floor: f64,
    pub condition_limit: f64,
    /// Design points per column of the largest basis.
    pub oversampling: usize,
    pub seed: u64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            max_order: 4,
            accept_tol: 1e-6,
            reject_floor: 1e-3,
            condition_limit: 1e12,
            oversampling: 10,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub max_order: usize,
    pub nodes: usize,
    pub basis_dim: usize,
    /// Relative least-squares residual; `None` when the level was skipped.
    pub residual: Option<f64>,
    pub condition: f64,
}

#[derive(Clone, Debug)]
pub struct MembershipTrace {
    pub levels: Vec<LevelRecord>,
    pub design_size: usize,
    pub verdict: Verdict,
    /// Fitted element from the accepting level, else from the last solved one.
    pub element: Option<SpanElement>,
    pub errors: Vec<QdError>,
}

impl MembershipTrace {
    pub fn best_residual(&self) -> Option<f64> {
        self.levels.iter().filter_map(|l| l.residual).reduce(f64::min)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "design_size": self.design_size,
            "verdict": self.verdict.label(),
            "levels": self.levels.iter().map(|l| json!({
                "basis": {"max_order": l.max_order, "nodes": l.nodes, "dim": l.basis_dim},
                "residual": l.residual,
                "condition": l.condition,
                "skipped": l.residual.is_none(),
            })).collect::<Vec<_>>(),
            "errors": self.errors.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        })
    }
}

pub fn membership_residual(
    candidate: &Expr,
    domain: &Domain,
    node_grid: &[Point],
    max_order: usize,
) -> Result<MembershipTrace> {
    let cfg = MembershipConfig {
        max_order,
        ..MembershipConfig::default()
    };
    membership_residual_with(candidate, domain, node_grid, &cfg)
}

/// Least-squares fit of `candidate` by kernel derivatives of order
/// `0..=max_order` at every node, one nested level per order, on a fixed
/// quasi-random design.
pub fn membership_residual_with(
    candidate: &Expr,
    domain: &Domain,
    node_grid: &[Point],
    cfg: &MembershipConfig,
) -> Result<MembershipTrace> {
    let kernel = KernelHandle::new(domain)?;
    let dim = domain.dim();
    let nodes: Vec<Point> = if node_grid.is_empty() {
        vec![domain.center()?]
    } else {
        node_grid.to_vec()
    };
    for n in &nodes {
        if !domain.contains(n)? {
            return Err(QdError::OutsideDomain);
        }
    }
    let indices = MultiIndex::all_up_to(dim, cfg.max_order);
    let full_dim = nodes.len() * indices.len();
    let design_size = cfg.oversampling * full_dim;
    let design = domain.sample_interior(SampleStrategy::QuasiRandom, design_size, cfg.seed)?;

    // rhs and all columns at the largest level, column-major per (node, α)
    let b: Vec<C64> = par::map_slice(&design, |z| candidate.eval(z)).into_iter().collect::<Result<_>>()?;
    let rows = design.len();
    let jets_per_node: Vec<Vec<Vec<C64>>> = nodes
        .iter()
        .map(|node| {
            par::map_slice(&design, |z| {
                let jet = kernel.derivative_jet(z, node, cfg.max_order)?;
                indices.iter().map(|a| jet.derivative_at(a)).collect::<Result<Vec<C64>>>()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let b_norm = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut levels = Vec::new();
    let mut errors = Vec::new();
    let mut accepted: Option<(f64, SpanElement)> = None;
    let mut last_solved: Option<SpanElement> = None;
    let mut inherited_condition: Option<f64> = None;
    for order in 0..=cfg.max_order {
        let cols: Vec<(usize, usize)> = (0..nodes.len())
            .flat_map(|ni| {
                indices
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.order() <= order)
                    .map(move |(ai, _)| (ni, ai))
            })
            .collect();
        let mut rec = LevelRecord {
            max_order: order,
            nodes: nodes.len(),
            basis_dim: cols.len(),
            residual: None,
            condition: f64::INFINITY,
        };
        if let Some(c) = inherited_condition {
            // the condition number of a nested basis can only grow
            rec.condition = c;
            levels.push(rec);
            continue;
        }
        if b_norm == 0.0 {
            rec.residual = Some(0.0);
            rec.condition = 1.0;
            levels.push(rec);
            accepted = Some((0.0, SpanElement::empty(domain)?));
            break;
        }
        let matrix: Vec<Vec<C64>> = cols
            .iter()
            .map(|&(ni, ai)| (0..rows).map(|r| jets_per_node[ni][r][ai]).collect())
            .collect();
        match least_squares(matrix, &b, cfg.condition_limit) {
            Ok(fit) => {
                let residual = fit.residual / b_norm;
                rec.residual = Some(residual);
                rec.condition = fit.condition;
                let terms = cols
                    .iter()
                    .zip(&fit.coeffs)
                    .map(|(&(ni, ai), &c)| SpanTerm::new(nodes[ni].clone(), indices[ai].clone(), c))
                    .collect();
                let element = SpanElement::new(domain, terms)?;
                levels.push(rec);
                if residual < cfg.accept_tol {
                    accepted = Some((residual, element));
                    break;
                }
                last_solved = Some(element);
            }
            Err(QdError::IllConditioned(c)) => {
                rec.condition = c;
                inherited_condition = Some(c);
                errors.push(QdError::IllConditioned(c));
                levels.push(rec);
            }
            Err(e) => return Err(e),
        }
    }

    let solved: Vec<f64> = levels.iter().filter_map(|l| l.residual).collect();
    let (verdict, element) = if let Some((_, e)) = accepted {
        (Verdict::InSpan { tol: cfg.accept_tol }, Some(e))
    } else if solved.len() >= 3 && solved[solved.len() - 3..].iter().all(|&r| r > cfg.reject_floor) {
        (
            Verdict::NotInSpan {
                floor: cfg.reject_floor,
            },
            last_solved,
        )
    } else {
        (Verdict::Inconclusive, last_solved)
    };
    Ok(MembershipTrace {
        levels,
        design_size: rows,
        verdict,
        element,
        errors,
    })
}

pub(crate) struct LeastSquares {
    pub coeffs: Vec<C64>,
    pub residual: f64,
    pub condition: f64,
}

/// Householder QR with column-norm pivoting on unit-normalized columns.
/// Fails with `IllConditioned` once `|R₁₁|/|R_kk|` exceeds `limit`.
pub(crate) fn least_squares(mut cols: Vec<Vec<C64>>, b: &[C64], limit: f64) -> Result<LeastSquares> {
    let n = cols.len();
    let m = b.len();
    if n > m {
        return Err(QdError::IllConditioned(f64::INFINITY));
    }
    let scales: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    for (c, &s) in cols.iter_mut().zip(&scales) {
        if s == 0.0 {
            return Err(QdError::IllConditioned(f64::INFINITY));
        }
        for x in c.iter_mut() {
            *x /= s;
        }
    }
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let mut r00 = 0.0;
    for k in 0..n {
        let norms = par::map_range(n - k, |j| cols[k + j][k..].iter().map(|x| x.norm_sqr()).sum::<f64>());
        let (jmax, &best) = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let piv = k + jmax;
        cols.swap(k, piv);
        perm.swap(k, piv);
        let norm = best.sqrt();
        if k == 0 {
            r00 = norm;
        }
        if norm == 0.0 || r00 / norm > limit {
            return Err(QdError::IllConditioned(if norm == 0.0 { f64::INFINITY } else { r00 / norm }));
        }
        let x0 = cols[k][k];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= vn;
        }
        let reflect = |c: &mut [C64]| {
            let dot: C64 = v.iter().zip(c.iter()).map(|(vi, ci)| vi.conj() * ci).sum();
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= 2.0 * vi * dot;
            }
        };
        let (head, tail) = cols.split_at_mut(k + 1);
        par::for_each_mut(tail, |c| reflect(&mut c[k..]));
        reflect(&mut rhs[k..]);
        diag[k] = alpha;
        head[k][k] = alpha;
    }
    let condition = r00 / diag[n - 1].norm();
    let residual = rhs[n..].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    // back substitution; column j holds R[0..=j][j]
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= cols[j][i] * y[j];
        }
        y[i] = s / diag[i];
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (k, &j) in perm.iter().enumerate() {
        coeffs[j] = y[k] / scales[j];
    }
    Ok(LeastSquares {
        coeffs,
        residual,
        condition,
    })
}

/// Sorted `(node, α) → coefficient` map, handy for comparisons.
pub fn term_table(s: &SpanElement) -> BTreeMap<(Vec<(u64, u64)>, Vec<u32>), C64> {
    s.terms
        .iter()
        .map(|t| ((node_key(&t.node), t.alpha.exponents().to_vec()), t.coeff))
        .collect()
}
