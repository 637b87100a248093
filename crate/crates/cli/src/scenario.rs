//! Scenario descriptions and the bundled catalog.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qd_core::expr::Expr;
use qd_core::geometry::{Disc, Domain};
use qd_core::homotopy::bidisc_linear_jacobian;
use qd_core::jets::MultiIndex;
use qd_core::maps::{named, HolomorphicMap};
use qd_core::span::{product_span, SpanElement, SpanTerm};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_identity_tol")]
    pub identity: f64,
    #[serde(default = "default_kernel_tol")]
    pub kernel: f64,
    #[serde(default = "default_closed_form_tol")]
    pub closed_form: f64,
}

fn default_identity_tol() -> f64 {
    1e-5
}
fn default_kernel_tol() -> f64 {
    1e-7
}
fn default_closed_form_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: default_identity_tol(),
            kernel: default_kernel_tol(),
            closed_form: default_closed_form_tol(),
        }
    }
}

/// A verification pass of an identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifySpec {
    /// `"tensor"` or `"qmc"`.
    pub scheme: String,
    #[serde(default)]
    pub radial: Option<usize>,
    #[serde(default)]
    pub angular: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Monomials of total degree up to this.
    #[serde(default)]
    pub degree: Option<usize>,
    /// Explicit test functions, `{"label": .., "expr": ..}`.
    #[serde(default)]
    pub tests: Vec<LabelledExpr>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelledExpr {
    pub label: String,
    pub expr: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipSpec {
    /// Defaults to the Jacobian determinant of the map (1 without a map).
    #[serde(default)]
    pub candidate: Option<Value>,
    /// Lattice sizes `k` for `k×k` node grids; 1 is the center node.
    pub grids: Vec<usize>,
    pub max_order: usize,
    #[serde(default)]
    pub expected_verdict: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QdpSpec {
    pub max_degree: usize,
    pub max_order: usize,
    /// `u·f^α` is expected outside the span when `α_i > 0` for a listed `i`.
    #[serde(default)]
    pub expected_negative_if_uses: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelSpec {
    pub degree: usize,
    pub points: usize,
    pub radial: usize,
    pub angular: usize,
    /// `K(ζ, ω)` as an expression in `(ζ, conj ω)`.
    #[serde(default)]
    pub closed_form: Option<Value>,
    #[serde(default)]
    pub closed_form_pairs: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiusProfile {
    pub dip: f64,
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomotopySpec {
    /// `"dilation"`, `"straight-line"` or `"schedule"`.
    pub mode: String,
    pub frames: usize,
    /// End map of a straight-line homotopy.
    #[serde(default)]
    pub g: Option<Value>,
    #[serde(default = "default_trace_order")]
    pub max_order: usize,
    #[serde(default)]
    pub radius_profile: Option<RadiusProfile>,
}

fn default_trace_order() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformSpec {
    pub gamma: Value,
    pub g: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChordArcSpec {
    pub trials: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    /// Base domain; the scenario domain is its image when `map` is set.
    pub domain: Value,
    #[serde(default)]
    pub map: Option<Value>,
    pub operations: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Representation of `u` (or of 1 without a map) on the base domain.
    #[serde(default)]
    pub u_repr: Option<Value>,
    #[serde(default)]
    pub verify: Vec<VerifySpec>,
    #[serde(default)]
    pub membership: Option<MembershipSpec>,
    #[serde(default)]
    pub qdp: Option<QdpSpec>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub homotopy: Option<HomotopySpec>,
    #[serde(default)]
    pub deform: Option<DeformSpec>,
    #[serde(default)]
    pub chord_arc: Option<ChordArcSpec>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::SpecParse(e.to_string()))
    }

    pub fn base(&self) -> Result<Domain, CliError> {
        Domain::from_json(&self.domain).map_err(|e| CliError::SpecParse(format!("domain: {e}")))
    }

    pub fn map(&self) -> Result<Option<HolomorphicMap>, CliError> {
        self.map
            .as_ref()
            .map(|m| HolomorphicMap::from_json(m).map_err(|e| CliError::SpecParse(format!("map: {e}"))))
            .transpose()
    }

    /// The domain the scenario is about: the base, or its image.
    pub fn target(&self) -> Result<Domain, CliError> {
        let base = self.base()?;
        Ok(match self.map()? {
            Some(f) => Domain::image(base, f)?,
            None => base,
        })
    }

    pub fn u_repr(&self) -> Result<Option<SpanElement>, CliError> {
        self.u_repr
            .as_ref()
            .map(|v| SpanElement::from_json(v).map_err(|e| CliError::SpecParse(format!("u_repr: {e}"))))
            .transpose()
    }

    pub fn supports(&self, op: &str) -> bool {
        self.operations.iter().any(|o| o == op)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn origin(n: usize) -> Vec<C64> {
    vec![c(0.0, 0.0); n]
}

fn monomial_check(scheme: &str, degree: usize, tolerance: f64) -> VerifySpec {
    VerifySpec {
        scheme: scheme.into(),
        radial: None,
        angular: None,
        samples: None,
        degree: Some(degree),
        tests: Vec::new(),
        tolerance,
    }
}

fn labelled(label: &str, e: Expr) -> LabelledExpr {
    LabelledExpr {
        label: label.into(),
        expr: e.to_json(),
    }
}

fn disc_kernel_check() -> KernelSpec {
    KernelSpec {
        degree: 8,
        points: 20,
        radial: 64,
        angular: 128,
        closed_form: None,
        closed_form_pairs: 0,
    }
}

fn base_scenario(id: &str, description: &str, domain: &Domain, ops: &[&str]) -> Scenario {
    Scenario {
        id: id.into(),
        description: description.into(),
        domain: domain.to_json(),
        map: None,
        operations: ops.iter().map(|s| s.to_string()).collect(),
        seed: 11,
        tolerances: Tolerances::default(),
        u_repr: None,
        verify: Vec::new(),
        membership: None,
        qdp: None,
        kernel: None,
        homotopy: None,
        deform: None,
        chord_arc: None,
    }
}

/// `(ζ, v) ↦ K_V(ζ, conj v)` for the exp-map image of the bidisc.
fn exp_kernel_closed_form() -> Expr {
    let (z1, z2, v1, v2) = (Expr::var(0), Expr::var(1), Expr::var(2), Expr::var(3));
    let a = z1.clone() - z2.clone().exp();
    let b = v1.clone() - v2.clone().exp();
    let p = z2.clone() - z1 + z2.exp();
    let q = v2.clone() - v1 + v2.exp();
    let one = Expr::one();
    Expr::real(1.0 / (PI * PI))
        / ((one.clone() - a * b).powi(2) * (one - p * q).powi(2))
}

/// The bundled catalog, in a fixed order.
pub fn catalog() -> Vec<Scenario> {
    let disc = Domain::unit_disc();
    let bidisc = Domain::unit_polydisc(2, 1.0).unwrap();
    let small = Domain::unit_polydisc(2, 0.4).unwrap();
    let o1 = origin(1);
    let o2 = origin(2);
    let mut out = Vec::new();

    let mut s = base_scenario(
        "disc-mean-value",
        "unit disc: the integral of g equals pi g(0)",
        &disc,
        &["kernel", "membership", "identity"],
    );
    s.u_repr = Some(SpanElement::point_mass(&disc, o1.clone(), c(PI, 0.0)).unwrap().to_json());
    s.verify = vec![monomial_check("tensor", 10, 1e-8)];
    s.membership = Some(MembershipSpec {
        candidate: None,
        grids: vec![1],
        max_order: 4,
        expected_verdict: Some("in_span".into()),
    });
    s.kernel = Some(disc_kernel_check());
    out.push(s);

    let mut s = base_scenario(
        "bidisc-product",
        "unit bidisc: product of the factor mean-value identities",
        &bidisc,
        &["kernel", "identity"],
    );
    let factor = SpanElement::point_mass(&disc, o1.clone(), c(PI, 0.0)).unwrap();
    s.u_repr = Some(product_span(&[factor.clone(), factor]).unwrap().to_json());
    s.verify = vec![monomial_check("tensor", 10, 1e-8)];
    s.kernel = Some(KernelSpec {
        degree: 8,
        points: 20,
        radial: 24,
        angular: 40,
        closed_form: None,
        closed_form_pairs: 0,
    });
    out.push(s);

    let cardioid = named::cardioid(c(0.3, 0.0));
    let mut s = base_scenario(
        "cardioid",
        "image of the unit disc under z + 0.3 z^2",
        &disc,
        &["kernel", "membership", "identity", "qdp-check", "chord-arc"],
    );
    s.map = Some(cardioid.to_json());
    s.u_repr = Some(
        SpanElement::new(
            &disc,
            vec![
                SpanTerm::new(o1.clone(), MultiIndex::zeros(1), c(PI, 0.0)),
                SpanTerm::new(o1.clone(), MultiIndex::new(vec![1]), c(0.3 * PI, 0.0)),
            ],
        )
        .unwrap()
        .to_json(),
    );
    s.verify = vec![monomial_check("tensor", 8, 1e-5)];
    s.membership = Some(MembershipSpec {
        candidate: None,
        grids: vec![1],
        max_order: 4,
        expected_verdict: Some("in_span".into()),
    });
    s.qdp = Some(QdpSpec {
        max_degree: 3,
        max_order: 8,
        expected_negative_if_uses: Vec::new(),
    });
    s.kernel = Some(KernelSpec {
        degree: 6,
        points: 20,
        radial: 64,
        angular: 128,
        closed_form: None,
        closed_form_pairs: 0,
    });
    s.tolerances.kernel = 1e-5;
    s.chord_arc = Some(ChordArcSpec { trials: 1000 });
    out.push(s);

    let mut s = base_scenario(
        "bergman-coordinate-not-qd",
        "Bergman-coordinate image of the bidisc, which is not a quadrature domain",
        &bidisc,
        &["membership"],
    );
    s.map = Some(named::bergman_coordinate().to_json());
    s.membership = Some(MembershipSpec {
        candidate: None,
        grids: vec![1, 3, 5],
        max_order: 6,
        expected_verdict: Some("not_in_span".into()),
    });
    out.push(s);

    let exp = named::exp_map();
    let mut s = base_scenario(
        "exp-qd-not-qdp",
        "exp-map image of the bidisc: a quadrature domain without the QDP",
        &bidisc,
        &["membership", "identity", "qdp-check"],
    );
    s.map = Some(exp.to_json());
    s.u_repr = Some(SpanElement::point_mass(&bidisc, o2.clone(), c(PI * PI, 0.0)).unwrap().to_json());
    let (z1, z2) = (Expr::var(0), Expr::var(1));
    s.verify = vec![
        monomial_check("tensor", 6, 1e-5),
        VerifySpec {
            scheme: "qmc".into(),
            radial: None,
            angular: None,
            samples: Some(1_000_000),
            degree: None,
            tests: vec![
                labelled("1", Expr::one()),
                labelled("z1", z1.clone()),
                labelled("1+z2", Expr::one() + z2.clone()),
                labelled("1+z1+z2", Expr::one() + z1 + z2),
            ],
            tolerance: 1e-3,
        },
    ];
    s.membership = Some(MembershipSpec {
        candidate: None,
        grids: vec![1],
        max_order: 4,
        expected_verdict: Some("in_span".into()),
    });
    s.qdp = Some(QdpSpec {
        max_degree: 3,
        max_order: 6,
        expected_negative_if_uses: vec![0],
    });
    out.push(s);

    let mut s = base_scenario(
        "nonalgebraic-kernel",
        "exp-map image of the bidisc: transformed kernel against its closed form",
        &bidisc,
        &["kernel"],
    );
    s.map = Some(exp.to_json());
    s.kernel = Some(KernelSpec {
        degree: 4,
        points: 20,
        radial: 16,
        angular: 32,
        closed_form: Some(exp_kernel_closed_form().to_json()),
        closed_form_pairs: 100,
    });
    s.tolerances.kernel = 1e-4;
    out.push(s);

    let mut s = base_scenario(
        "one-point-qdp",
        "(z1^2 - z2, z1 + z2) on the bidisc of radius 0.4",
        &small,
        &["membership", "identity", "qdp-check"],
    );
    s.map = Some(named::one_point_qdp().to_json());
    let w = (PI * 0.16).powi(2);
    s.u_repr = Some(
        SpanElement::new(
            &small,
            vec![
                SpanTerm::new(o2.clone(), MultiIndex::zeros(2), c(w, 0.0)),
                SpanTerm::new(o2.clone(), MultiIndex::new(vec![1, 0]), c(0.16 * w, 0.0)),
            ],
        )
        .unwrap()
        .to_json(),
    );
    s.verify = vec![monomial_check("tensor", 6, 1e-5)];
    s.membership = Some(MembershipSpec {
        candidate: None,
        grids: vec![1],
        max_order: 4,
        expected_verdict: Some("in_span".into()),
    });
    s.qdp = Some(QdpSpec {
        max_degree: 2,
        max_order: 6,
        expected_negative_if_uses: Vec::new(),
    });
    out.push(s);

    let mut s = base_scenario(
        "dilation-homotopy",
        "dilations f(tz)/t of z + 0.3 z^2",
        &disc,
        &["homotopy"],
    );
    s.map = Some(cardioid.to_json());
    s.homotopy = Some(HomotopySpec {
        mode: "dilation".into(),
        frames: 50,
        g: None,
        max_order: 8,
        radius_profile: None,
    });
    out.push(s);

    let mut s = base_scenario(
        "straight-line-epsilon",
        "straight line from the identity to a cubic within the epsilon bound",
        &disc,
        &["homotopy"],
    );
    let g = HolomorphicMap::new(
        "z+0.15z^2+0.1z^3",
        vec![Expr::var(0) + Expr::real(0.15) * Expr::var(0).powi(2) + Expr::real(0.1) * Expr::var(0).powi(3)],
    );
    s.homotopy = Some(HomotopySpec {
        mode: "straight-line".into(),
        frames: 11,
        g: Some(g.to_json()),
        max_order: 4,
        radius_profile: None,
    });
    out.push(s);

    let mut s = base_scenario(
        "convex-deform",
        "bidisc deformed to Jacobian 1 + 0.4 z2",
        &bidisc,
        &["deform"],
    );
    s.deform = Some(DeformSpec {
        gamma: Expr::zero().to_json(),
        g: bidisc_linear_jacobian(0.2).unwrap().to_json(),
    });
    out.push(s);

    for (id, holes) in [
        ("annulus-chord-arc", vec![Disc::new(c(0.0, 0.0), 0.3)]),
        (
            "two-hole-chord-arc",
            vec![Disc::new(c(-0.4, 0.0), 0.25), Disc::new(c(0.45, 0.1), 0.2)],
        ),
    ] {
        let d = Domain::circle_domain(Disc::unit(), holes).unwrap();
        let mut s = base_scenario(id, "chord-arc paths around circular holes", &d, &["chord-arc"]);
        s.chord_arc = Some(ChordArcSpec { trials: 1000 });
        out.push(s);
    }
    out
}

pub fn find(id: &str) -> Result<Scenario, CliError> {
    catalog()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| CliError::UnknownScenario(id.to_string()))
}
