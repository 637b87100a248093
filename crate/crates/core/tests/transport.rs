use proptest::prelude::*;
use qd_core::expr::Expr;
use qd_core::geometry::Domain;
use qd_core::jets::MultiIndex;
use qd_core::maps::{named, HolomorphicMap};
use qd_core::span::{centered_lattice, term_table, SpanElement, SpanTerm};
use qd_core::transport::{extract_quadrature_identity, lambda1, pushforward_span, pushforward_span_into};
use qd_core::verify::{monomials, verify_identity, IntegrationScheme, QuadratureRule};
use qd_core::C64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn arb_c(scale: f64) -> impl Strategy<Value = C64> {
    (-scale..scale, -scale..scale).prop_map(|(a, b)| c(a, b))
}

fn poly(coeffs: &[C64]) -> Expr {
    coeffs
        .iter()
        .enumerate()
        .fold(Expr::zero(), |e, (k, &a)| e + Expr::constant(a) * Expr::var(0).powi(k as u32))
}

/// `∫_V h·conj(g)` over `V = f(𝔻)` as the boundary integral
/// `(1/2i)∮ h·conj(G) dζ` with `G' = g`, trapezoid in the angle.
fn boundary_inner_product(f: &HolomorphicMap, h: &[C64], g: &[C64], m: usize) -> C64 {
    let antiderivative: Vec<C64> = std::iter::once(c(0.0, 0.0))
        .chain(g.iter().enumerate().map(|(k, a)| a / (k + 1) as f64))
        .collect();
    let (hp, gp) = (poly(h), poly(&antiderivative));
    let fp = &f.partials()[0][0];
    let mut acc = c(0.0, 0.0);
    for i in 0..m {
        let e = C64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64);
        let zeta = f.evaluate(&[e]).unwrap();
        let dz = fp.eval(&[e]).unwrap() * c(0.0, 1.0) * e;
        acc += hp.eval(&zeta).unwrap() * gp.eval(&zeta).unwrap().conj() * dz;
    }
    acc * (2.0 * PI / m as f64) / c(0.0, 2.0)
}

fn area_inner_product(rule: &QuadratureRule, a: &Expr, b: &Expr) -> C64 {
    (0..rule.len())
        .map(|i| {
            let (z, w) = rule.node(i).unwrap();
            a.eval(&z).unwrap() * b.eval(&z).unwrap().conj() * w
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn lambda1_is_isometric(
        h in prop::collection::vec(arb_c(1.0), 1..6),
        g in prop::collection::vec(arb_c(1.0), 1..6),
        k in 0.0f64..0.45,
    ) {
        let f = named::cardioid(c(k, 0.0));
        let direct = boundary_inner_product(&f, &h, &g, 512);
        let rule = QuadratureRule::tensor(&Domain::unit_disc(), 32, 64).unwrap();
        let pulled = area_inner_product(&rule, &lambda1(&poly(&h), &f), &lambda1(&poly(&g), &f));
        prop_assert!((direct - pulled).norm() <= 1e-6 * direct.norm().max(1.0), "{direct} {pulled}");
    }

    #[test]
    fn pushforward_round_trip(coeffs in prop::collection::vec(arb_c(1.0), 1..7)) {
        let bidisc = Domain::unit_polydisc(2, 1.0).unwrap();
        let f = named::exp_map();
        let back = HolomorphicMap::new("exp-map-inverse", f.inverse().unwrap().to_vec())
            .with_inverse(f.components().to_vec());
        let nodes = centered_lattice(&bidisc, 2).unwrap();
        let alphas = MultiIndex::all_up_to(2, 2);
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| SpanTerm::new(nodes[i % nodes.len()].clone(), alphas[(3 * i) % alphas.len()].clone(), a))
            .collect();
        let s = SpanElement::new(&bidisc, terms).unwrap();
        let there = pushforward_span(&s, &f, 2).unwrap();
        let home = pushforward_span_into(&there, &back, &bidisc, 2).unwrap();
        let (want, got) = (term_table(&s), term_table(&home));
        for (key, a) in &want {
            let b = got.get(key).copied().unwrap_or_default();
            prop_assert!((a - b).norm() < 1e-8, "{key:?}: {a} vs {b}");
        }
        for (key, b) in &got {
            if !want.contains_key(key) {
                prop_assert!(b.norm() < 1e-8, "extra term {key:?}: {b}");
            }
        }
    }
}

#[test]
fn extracted_identities_match_quadrature() {
    let disc = Domain::unit_disc();
    let o = vec![c(0.0, 0.0)];
    // u = 1 + 0.6z = π·K(·,0) + 0.3π·∂K/∂w̄(·,0)
    let cardioid_u = SpanElement::new(
        &disc,
        vec![
            SpanTerm::new(o.clone(), MultiIndex::zeros(1), c(PI, 0.0)),
            SpanTerm::new(o.clone(), MultiIndex::new(vec![1]), c(0.3 * PI, 0.0)),
        ],
    )
    .unwrap();
    let q = extract_quadrature_identity(&named::cardioid(c(0.3, 0.0)), &cardioid_u, None).unwrap();
    let r = verify_identity(&q, &monomials(1, 6), &IntegrationScheme::default_for(&disc), 1e-5).unwrap();
    assert!(r.pass, "{}", r.max_residual);

    let small = Domain::unit_polydisc(2, 0.4).unwrap();
    let o2 = vec![c(0.0, 0.0); 2];
    // u = 2z₁ + 1 = (π·0.16)²·(K(·,0) + 0.16·∂K/∂w̄₁(·,0)) on the 0.4-bidisc
    let s = (PI * 0.16).powi(2);
    let qdp_u = SpanElement::new(
        &small,
        vec![
            SpanTerm::new(o2.clone(), MultiIndex::zeros(2), c(s, 0.0)),
            SpanTerm::new(o2, MultiIndex::new(vec![1, 0]), c(0.16 * s, 0.0)),
        ],
    )
    .unwrap();
    let q = extract_quadrature_identity(&named::one_point_qdp(), &qdp_u, None).unwrap();
    assert!(q.nodes().iter().all(|n| n.iter().all(|x| x.norm() < 1e-15)));
    let r = verify_identity(&q, &monomials(2, 6), &IntegrationScheme::default_for(&small), 1e-5).unwrap();
    assert!(r.pass, "{}", r.max_residual);
}
