use qd_core::expr::Expr;
use qd_core::geometry::{Disc, Domain};
use qd_core::maps::named;
use qd_core::verify::{integrate, integrate_many, monomials, residual_of, IntegrationScheme, TestFunction};
use qd_core::C64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn doubling_tensor_orders_is_stable() {
    let domains = vec![
        Domain::disc(c(0.3, -0.2), 0.9).unwrap(),
        Domain::circle_domain(Disc::unit(), vec![Disc::new(c(0.3, 0.2), 0.25)]).unwrap(),
        Domain::image(Domain::unit_disc(), named::cardioid(c(0.3, 0.0))).unwrap(),
    ];
    let tests = monomials(1, 10);
    for d in &domains {
        let coarse = integrate_many(d, &tests, &IntegrationScheme::tensor(32, 32)).unwrap();
        let fine = integrate_many(d, &tests, &IntegrationScheme::tensor(64, 64)).unwrap();
        for ((a, b), t) in coarse.iter().zip(&fine).zip(&tests) {
            assert!((a - b).norm() < 1e-10, "{} {}: {a} vs {b}", d.kind_name(), t.label());
        }
    }
    let bidisc = Domain::unit_polydisc(2, 1.0).unwrap();
    let tests = monomials(2, 10);
    let coarse = integrate_many(&bidisc, &tests, &IntegrationScheme::tensor(12, 12)).unwrap();
    let fine = integrate_many(&bidisc, &tests, &IntegrationScheme::tensor(24, 24)).unwrap();
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn ball_volume() {
    let ball = Domain::unit_ball(2).unwrap();
    let v = integrate(&ball, &Expr::one(), &IntegrationScheme::default_for(&ball)).unwrap();
    assert!((v - PI * PI / 2.0).norm() < 1e-8, "{v}");
}

#[test]
fn direct_sampling_agrees_with_pullback() {
    let bidisc = Domain::unit_polydisc(2, 1.0).unwrap();
    let v = Domain::image(bidisc, named::exp_map()).unwrap();
    let (z1, z2) = (Expr::var(0), Expr::var(1));
    let tests = vec![
        TestFunction::Expr { label: "1".into(), expr: Expr::one() },
        TestFunction::Expr { label: "z1".into(), expr: z1.clone() },
        TestFunction::Expr { label: "1+z2".into(), expr: Expr::one() + z2.clone() },
        TestFunction::Expr { label: "1+z1+z2".into(), expr: Expr::one() + z1 + z2 },
    ];
    let direct = integrate_many(&v, &tests, &IntegrationScheme::qmc(1_000_000, 11)).unwrap();
    let pulled = integrate_many(&v, &tests, &IntegrationScheme::default_for(&v)).unwrap();
    for ((a, b), t) in direct.iter().zip(&pulled).zip(&tests) {
        let (_, r) = residual_of(*b, *a);
        assert!(r < 1e-3, "{}: direct {a} pullback {b} ({r})", t.label());
    }
}
