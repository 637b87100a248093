use proptest::prelude::*;
use qd_core::geometry::{Domain, Point};
use qd_core::jets::MultiIndex;
use qd_core::span::{
    centered_lattice, evaluate_span, membership_residual, product_span, SpanElement, SpanTerm,
};
use qd_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn arb_c(scale: f64) -> impl Strategy<Value = C64> {
    (-scale..scale, -scale..scale).prop_map(|(a, b)| c(a, b))
}

/// Element with the given coefficients spread over lattice nodes and orders.
fn element(domain: &Domain, coeffs: &[C64], max_order: usize) -> SpanElement {
    let nodes = centered_lattice(domain, 2).unwrap();
    let alphas = MultiIndex::all_up_to(domain.dim(), max_order);
    let terms = coeffs
        .iter()
        .enumerate()
        .map(|(i, &a)| SpanTerm::new(nodes[i % nodes.len()].clone(), alphas[(i * 7) % alphas.len()].clone(), a))
        .collect();
    SpanElement::new(domain, terms).unwrap()
}

fn grid(domain: &Domain, count: usize) -> Vec<Point> {
    domain
        .sample_interior(qd_core::geometry::SampleStrategy::TensorGrid, count, 0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_linear(
        a in prop::collection::vec(arb_c(2.0), 1..8),
        b in prop::collection::vec(arb_c(2.0), 1..8),
        bidisc in any::<bool>(),
    ) {
        let dom = if bidisc { Domain::unit_polydisc(2, 1.0).unwrap() } else { Domain::unit_disc() };
        let (s, t) = (element(&dom, &a, 3), element(&dom, &b, 2));
        let sum = s.add(&t).unwrap();
        for z in grid(&dom, 100) {
            let lhs = evaluate_span(&sum, &z).unwrap();
            let rhs = evaluate_span(&s, &z).unwrap() + evaluate_span(&t, &z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn product_element_is_product_of_factors(
        a in prop::collection::vec(arb_c(1.0), 1..5),
        b in prop::collection::vec(arb_c(1.0), 1..5),
    ) {
        let d1 = Domain::unit_disc();
        let d2 = Domain::disc(c(0.3, 0.1), 0.7).unwrap();
        let (s, t) = (element(&d1, &a, 2), element(&d2, &b, 2));
        let p = product_span(&[s.clone(), t.clone()]).unwrap();
        for z in grid(p.domain(), 200) {
            let whole = evaluate_span(&p, &z).unwrap();
            let parts = evaluate_span(&s, &z[..1]).unwrap() * evaluate_span(&t, &z[1..]).unwrap();
            prop_assert!((whole - parts).norm() <= 1e-10 * parts.norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constructed_elements_are_in_span(
        a in prop::collection::vec(arb_c(1.0), 1..6),
        bidisc in any::<bool>(),
    ) {
        let dom = if bidisc { Domain::unit_polydisc(2, 1.0).unwrap() } else { Domain::unit_disc() };
        let s = element(&dom, &a, 2);
        let trace = membership_residual(&s.to_expr().unwrap(), &dom, &s.nodes(), 3).unwrap();
        prop_assert!(trace.verdict.is_in_span(), "{:?}", trace.levels);
        let solved: Vec<f64> = trace.levels.iter().filter_map(|l| l.residual).collect();
        for w in solved.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "{solved:?}");
        }
    }
}

#[test]
fn nested_residuals_never_increase() {
    let dom = Domain::unit_polydisc(2, 1.0).unwrap();
    let u = qd_core::maps::named::bergman_coordinate().jacobian_expr();
    for k in [1, 3] {
        let trace = membership_residual(&u, &dom, &centered_lattice(&dom, k).unwrap(), 5).unwrap();
        let solved: Vec<f64> = trace.levels.iter().filter_map(|l| l.residual).collect();
        assert!(solved.len() >= 3);
        for w in solved.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "{solved:?}");
        }
    }
}

#[test]
fn json_round_trip() {
    let dom = Domain::unit_polydisc(2, 1.0).unwrap();
    let s = element(&dom, &[c(1.0, 2.0), c(-0.5, 0.25), c(0.0, 1.0)], 2);
    let back = SpanElement::from_json(&s.to_json()).unwrap();
    assert_eq!(back.to_json(), s.to_json());
}
