use proptest::prelude::*;
use qd_core::expr::Expr;
use qd_core::geometry::Domain;
use qd_core::homotopy::{
    dilation_qd_trace, epsilon_criterion, rescaling_schedule, schedule_breakpoints, straight_line_homotopy,
    TraceConfig,
};
use qd_core::maps::{injectivity_scan, named, HolomorphicMap};
use qd_core::span::membership_residual;
use qd_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `z + a z² + b z³` scaled so that `sup_𝔻 |g′ − 1| = s`.
fn cubic(a: C64, b: C64, s: f64) -> HolomorphicMap {
    let m = (2.0 * a.norm() + 3.0 * b.norm()).max(1e-300);
    let boundary_sup = (0..2048)
        .map(|i| {
            let z = C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / 2048.0);
            (2.0 * a * z + 3.0 * b * z * z).norm()
        })
        .fold(0.0, f64::max)
        .max(m * 1e-12);
    let k = s / boundary_sup;
    HolomorphicMap::new(
        "cubic",
        vec![Expr::var(0) + Expr::constant(k * a) * Expr::var(0).powi(2) + Expr::constant(k * b) * Expr::var(0).powi(3)],
    )
}

#[test]
fn dilation_path_is_continuous() {
    let f = named::cardioid(c(0.3, 0.0));
    let cfg = TraceConfig::default();
    let coarse = dilation_qd_trace(&f, &grid(6), &cfg).unwrap();
    let fine = dilation_qd_trace(&f, &grid(11), &cfg).unwrap();
    for e in coarse.entries.iter().chain(&fine.entries) {
        assert!(e.report.pass, "t = {}: {}", e.t, e.report.max_residual);
    }
    let ratio = fine.max_jump / coarse.max_jump;
    assert!((ratio - 0.5).abs() < 0.05, "{} / {}", fine.max_jump, coarse.max_jump);
}

#[test]
fn accepted_endpoints_give_accepted_interpolants() {
    let disc = Domain::unit_disc();
    let f = HolomorphicMap::identity(1);
    let g = cubic(c(0.2, 0.1), c(-0.1, 0.3), 0.9);
    let o = [disc.center().unwrap()];
    let rho = |m: &HolomorphicMap| {
        let t = membership_residual(&m.partials()[0][0], &disc, &o, 4).unwrap();
        assert!(t.verdict.is_in_span());
        t.best_residual().unwrap()
    };
    let bound = 2.0 * rho(&f).max(rho(&g)).max(1e-16);
    for t in grid(11) {
        let phi = straight_line_homotopy(&f, &g, t).unwrap();
        let z = [c(0.3, -0.4)];
        let lhs = phi.partials()[0][0].eval(&z).unwrap();
        let rhs = (1.0 - t) * f.partials()[0][0].eval(&z).unwrap() + t * g.partials()[0][0].eval(&z).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
        assert!(rho(&phi) <= bound.max(1e-14), "t = {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn perturbations_within_epsilon_stay_injective(
        a in (-1.0f64..1.0, -1.0f64..1.0), b in (-1.0f64..1.0, -1.0f64..1.0), frac in 0.0f64..0.99,
    ) {
        let disc = Domain::unit_disc();
        let eps = epsilon_criterion(&HolomorphicMap::identity(1), &disc, 128).unwrap().epsilon;
        let g = cubic(c(a.0, a.1), c(b.0, b.1), frac * eps);
        let report = injectivity_scan(&g, &disc, 60).unwrap();
        prop_assert!(report.injective_on_sample, "{:?}", report.witness);
    }

    #[test]
    fn schedule_stays_below_radius(
        dip in 0.05f64..0.99, lo in 0.15f64..0.45, hi in 0.55f64..0.85, n in 20usize..200,
    ) {
        let samples: Vec<(f64, f64)> = grid(n)
            .into_iter()
            .map(|t| (t, if (lo..=hi).contains(&t) { dip } else { 1.0 }))
            .collect();
        let (t1, t2, m) = schedule_breakpoints(&samples).unwrap().unwrap();
        let k = rescaling_schedule(&samples, t1, t2, m).unwrap();
        prop_assert_eq!(k.k(0.0), 1.0);
        prop_assert_eq!(k.k(1.0), 1.0);
        for &(t, r) in &samples {
            prop_assert!(k.k(t) <= r, "k({t}) = {} > {r}", k.k(t));
        }
    }
}
