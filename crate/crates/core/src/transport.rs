//! Transporting span elements and quadrature identities through
//! biholomorphisms.
//!
//! For `f: Ω → V` with Jacobian determinant `u`, `Λ₁ g = u·(g∘f)` is unitary
//! from the Bergman space of `V` onto that of `Ω`. Pairing a span element
//! on `Ω` with `Λ₁ h` gives derivatives of `u·(h∘f)` at the nodes, and those
//! expand by the Leibniz and chain rules into derivatives of `h` at the
//! image nodes.

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::expr::Expr;
use crate::geometry::{complex_json, point_json, Domain, Point, SampleStrategy};
use crate::jets::{jet_lift, Jet, MultiIndex};
use crate::maps::HolomorphicMap;
use crate::span::{SpanElement, SpanTerm};

/// Tolerance for matching a span representation of `u` against `u`.
pub const U_REPR_TOL: f64 = 1e-8;

/// Below this modulus the Jacobian at a node counts as singular.
const SINGULAR_U: f64 = 1e-12;

/// `∫_V h = Σ coeff · ∂^α h(node)`.
#[derive(Clone, Debug)]
pub struct QuadratureIdentity {
    pub domain: Domain,
    pub terms: Vec<SpanTerm>,
    pub provenance: Option<Provenance>,
}

/// What an identity was derived from.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub map: HolomorphicMap,
    pub u_repr: SpanElement,
    pub jet_order: usize,
}

impl QuadratureIdentity {
    pub fn new(domain: Domain, terms: Vec<SpanTerm>) -> QuadratureIdentity {
        QuadratureIdentity {
            domain,
            terms,
            provenance: None,
        }
    }

    /// Right-hand side for a test function.
    pub fn apply(&self, h: &Expr) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for t in &self.terms {
            let jet = jet_lift(h, &t.node, t.alpha.order())?;
            total += t.coeff * jet.derivative_at(&t.alpha)?;
        }
        Ok(total)
    }

    pub fn nodes(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|n| n == &t.node) {
                out.push(t.node.clone());
            }
        }
        out
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.alpha.order()).max().unwrap_or(0)
    }

    /// Coefficient of `(node, α)`, zero when absent.
    pub fn coefficient(&self, node: &[C64], alpha: &MultiIndex) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.alpha == *alpha && crate::maps::dist(&t.node, node) < 1e-12)
            .map(|t| t.coeff)
            .sum()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "domain": self.domain.to_json(),
            "terms": self.terms.iter().map(|t| json!({
                "node": point_json(&t.node),
                "alpha": t.alpha.exponents(),
                "coeff": complex_json(t.coeff),
            })).collect::<Vec<_>>(),
        });
        if let Some(p) = &self.provenance {
            v["provenance"] = json!({
                "map": p.map.to_json(),
                "u_repr": p.u_repr.to_json()["terms"].clone(),
                "jet_order": p.jet_order,
            });
        }
        v
    }
}

/// `u·(g∘f)`.
pub fn lambda1(g: &Expr, f: &HolomorphicMap) -> Expr {
    f.jacobian_expr() * g.compose(f.components())
}

/// For a node `ω` and indices `α`, the matrix `D[α][β]` with
/// `∂^α(u·h∘f)(ω) = Σ_β D[α][β]·∂^β h(f(ω))`.
fn chain_coefficients(
    f: &HolomorphicMap,
    node: &[C64],
    node_index: usize,
    alphas: &[&MultiIndex],
    order: usize,
) -> Result<(Point, Vec<MultiIndex>, Vec<Vec<C64>>)> {
    let jets = f.jets(node, order)?;
    let image: Point = jets.iter().map(Jet::value).collect();
    let shifted: Vec<Jet> = jets
        .iter()
        .zip(&image)
        .map(|(j, w)| j.add_constant(-w))
        .collect();
    let u = f.jacobian_jet(node, order)?;
    if u.value().norm() < SINGULAR_U {
        return Err(QdError::SingularJacobianAtNode(node_index));
    }
    let betas = MultiIndex::all_up_to(f.dim(), order);
    let mut d = vec![vec![C64::new(0.0, 0.0); betas.len()]; alphas.len()];
    for (bi, beta) in betas.iter().enumerate() {
        // Taylor term of h∘f belonging to ∂^β h(w)
        let mut p = u.scale(C64::new(1.0 / beta.factorial(), 0.0));
        for (i, &e) in beta.exponents().iter().enumerate() {
            if e > 0 {
                p = p.mul(&shifted[i].powi(e));
            }
        }
        for (ai, alpha) in alphas.iter().enumerate() {
            if beta.order() <= alpha.order() {
                d[ai][bi] = p.derivative_at(alpha)?;
            }
        }
    }
    Ok((image, betas, d))
}

/// Per node of `s`, the expansion of `Σ conj(c)·∂^α(u·h∘f)(ω)` as
/// `Σ_β L_β·∂^β h(f(ω))`.
fn collect_functional(s: &SpanElement, f: &HolomorphicMap, jet_order: usize) -> Result<Vec<(Point, MultiIndex, C64)>> {
    if f.dim() != s.domain().dim() {
        return Err(QdError::DimensionMismatch {
            expected: s.domain().dim(),
            got: f.dim(),
        });
    }
    let needed = s.max_order();
    if jet_order < needed {
        return Err(QdError::OrderOverflow {
            needed,
            order: jet_order,
        });
    }
    let mut out = Vec::new();
    for (ni, node) in s.nodes().iter().enumerate() {
        let here: Vec<&SpanTerm> = s.terms().iter().filter(|t| &t.node == node).collect();
        let alphas: Vec<&MultiIndex> = here.iter().map(|t| &t.alpha).collect();
        let (image, betas, d) = chain_coefficients(f, node, ni, &alphas, jet_order)?;
        for (bi, beta) in betas.iter().enumerate() {
            let l: C64 = here.iter().enumerate().map(|(ai, t)| t.coeff.conj() * d[ai][bi]).sum();
            if l != C64::new(0.0, 0.0) {
                out.push((image.clone(), beta.clone(), l));
            }
        }
    }
    Ok(out)
}

/// The element `Λ₂ s` on `V = f(Ω)`, satisfying
/// `⟨h, Λ₂ s⟩_V = ⟨Λ₁ h, s⟩_Ω` for every `h`.
pub fn pushforward_span(s: &SpanElement, f: &HolomorphicMap, jet_order: usize) -> Result<SpanElement> {
    let target = Domain::image(s.domain().clone(), f.clone())?;
    pushforward_span_into(s, f, &target, jet_order)
}

/// As [`pushforward_span`] with an explicit description of `f(Ω)`.
pub fn pushforward_span_into(
    s: &SpanElement,
    f: &HolomorphicMap,
    target: &Domain,
    jet_order: usize,
) -> Result<SpanElement> {
    let terms = collect_functional(s, f, jet_order)?
        .into_iter()
        .map(|(node, beta, l)| SpanTerm::new(node, beta, l.conj()))
        .collect();
    SpanElement::new(target, terms)
}

/// Checks `u_repr` against `u` on a grid of `points` interior points and
/// returns the largest discrepancy relative to `max(1, |u|)`.
pub fn u_repr_discrepancy(f: &HolomorphicMap, u_repr: &SpanElement, points: usize) -> Result<f64> {
    let grid = u_repr.domain().sample_interior(SampleStrategy::TensorGrid, points, 0)?;
    let mut worst: f64 = 0.0;
    for z in &grid {
        let u = f.jacobian_determinant(z)?;
        let s = u_repr.evaluate(z)?;
        worst = worst.max((u - s).norm() / u.norm().max(1.0));
    }
    Ok(worst)
}

/// `∫_V h = ⟨u·h∘f, u⟩_Ω` expanded at the images of the nodes of `u_repr`.
pub fn extract_quadrature_identity(
    f: &HolomorphicMap,
    u_repr: &SpanElement,
    jet_order: Option<usize>,
) -> Result<QuadratureIdentity> {
    let mismatch = u_repr_discrepancy(f, u_repr, 64)?;
    if !(mismatch <= U_REPR_TOL) {
        return Err(QdError::URepresentationMismatch(mismatch));
    }
    let order = jet_order.unwrap_or_else(|| u_repr.max_order());
    let terms = collect_functional(u_repr, f, order)?
        .into_iter()
        .map(|(node, beta, l)| SpanTerm::new(node, beta, l))
        .collect();
    Ok(QuadratureIdentity {
        domain: Domain::image(u_repr.domain().clone(), f.clone())?,
        terms,
        provenance: Some(Provenance {
            map: f.clone(),
            u_repr: u_repr.clone(),
            jet_order: order,
        }),
    })
}

/// Identity read off from a representation of the constant `1` on a
/// canonical domain: `∫_Ω h = Σ conj(c)·∂^α h(ω)`.
pub fn identity_from_span_of_one(one: &SpanElement) -> QuadratureIdentity {
    QuadratureIdentity::new(
        one.domain().clone(),
        one.terms()
            .iter()
            .map(|t| SpanTerm::new(t.node.clone(), t.alpha.clone(), t.coeff.conj()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::named;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cardioid_u_repr(cc: C64) -> SpanElement {
        SpanElement::new(
            &Domain::unit_disc(),
            vec![
                SpanTerm::new(vec![c(0.0, 0.0)], MultiIndex::new(vec![0]), c(PI, 0.0)),
                SpanTerm::new(vec![c(0.0, 0.0)], MultiIndex::new(vec![1]), cc * PI),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lambda1_examples() {
        let f = named::cardioid(c(0.3, 0.0));
        let g = Expr::var(0);
        let l = lambda1(&g, &f);
        for z in [c(0.2, 0.1), c(-0.5, 0.3)] {
            let want = (1.0 + 0.6 * z) * (z + 0.3 * z * z);
            assert!((l.eval(&[z]).unwrap() - want).norm() < 1e-14);
        }
        let id = HolomorphicMap::identity(1);
        let h = Expr::var(0).powi(3) + Expr::real(2.0);
        let z = [c(0.3, -0.4)];
        assert!((lambda1(&h, &id).eval(&z).unwrap() - h.eval(&z).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn cardioid_identity_coefficients() {
        let cc = c(0.3, 0.0);
        let q = extract_quadrature_identity(&named::cardioid(cc), &cardioid_u_repr(cc), None).unwrap();
        let o = vec![c(0.0, 0.0)];
        let a0 = q.coefficient(&o, &MultiIndex::new(vec![0]));
        let a1 = q.coefficient(&o, &MultiIndex::new(vec![1]));
        assert!((a0 - PI * 1.18).norm() < 1e-13);
        assert!((a1 - 0.3 * PI).norm() < 1e-13);
    }

    #[test]
    fn complex_cardioid_parameter() {
        let cc = c(0.2, 0.15);
        let q = extract_quadrature_identity(&named::cardioid(cc), &cardioid_u_repr(cc), None).unwrap();
        let o = vec![c(0.0, 0.0)];
        assert!((q.coefficient(&o, &MultiIndex::new(vec![0])) - PI * (1.0 + 2.0 * cc.norm_sqr())).norm() < 1e-13);
        assert!((q.coefficient(&o, &MultiIndex::new(vec![1])) - PI * cc.conj()).norm() < 1e-13);
    }

    #[test]
    fn exp_map_identity() {
        let bid = Domain::unit_polydisc(2, 1.0).unwrap();
        let u = SpanElement::point_mass(&bid, vec![c(0.0, 0.0); 2], c(PI * PI, 0.0)).unwrap();
        let q = extract_quadrature_identity(&named::exp_map(), &u, None).unwrap();
        assert_eq!(q.terms.len(), 1);
        assert_eq!(q.terms[0].node, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((q.terms[0].coeff - PI * PI).norm() < 1e-13);
    }

    #[test]
    fn rejects_wrong_u_repr() {
        let cc = c(0.3, 0.0);
        let wrong = SpanElement::point_mass(&Domain::unit_disc(), vec![c(0.0, 0.0)], c(PI, 0.0)).unwrap();
        assert!(matches!(
            extract_quadrature_identity(&named::cardioid(cc), &wrong, None),
            Err(QdError::URepresentationMismatch(_))
        ));
        assert!(matches!(
            pushforward_span(&cardioid_u_repr(cc), &named::cardioid(cc), 0),
            Err(QdError::OrderOverflow { needed: 1, order: 0 })
        ));
    }

    #[test]
    fn pushforward_of_u_is_one() {
        let cc = c(0.3, 0.0);
        let f = named::cardioid(cc);
        let v = pushforward_span(&cardioid_u_repr(cc), &f, 1).unwrap();
        for z in [c(0.1, 0.05), c(-0.3, 0.2)] {
            assert!((v.evaluate(&[z]).unwrap() - 1.0).norm() < 1e-10);
        }
    }
}
