//! Domains in ℂⁿ: membership, sampling, boundaries and chord-arc paths.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::maps::HolomorphicMap;
use crate::qmc::Halton;

pub type Point = Vec<C64>;

/// Attempts made by rejection sampling per requested point.
const REJECTION_BUDGET: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: C64,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: C64, radius: f64) -> Disc {
        Disc { center, radius }
    }

    pub fn unit() -> Disc {
        Disc::new(C64::new(0.0, 0.0), 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() || !self.center.is_finite() {
            return Err(QdError::InvalidDomain(format!(
                "disc radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn contains_open(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    pub fn contains_closed(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    fn to_json(self) -> Value {
        json!({"center": [self.center.re, self.center.im], "radius": self.radius})
    }

    fn from_json(v: &Value) -> Result<Disc> {
        let center = parse_complex(v.get("center").unwrap_or(&json!([0.0, 0.0])))?;
        let radius = v
            .get("radius")
            .and_then(Value::as_f64)
            .ok_or_else(|| QdError::Parse(format!("disc radius missing: {v}")))?;
        Ok(Disc::new(center, radius))
    }
}

pub(crate) fn parse_complex(v: &Value) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    let arr = v
        .as_array()
        .ok_or_else(|| QdError::Parse(format!("complex number expected, got {v}")))?;
    let re = arr.first().and_then(Value::as_f64);
    let im = arr.get(1).and_then(Value::as_f64).unwrap_or(0.0);
    re.map(|re| C64::new(re, im))
        .ok_or_else(|| QdError::Parse(format!("complex number expected, got {v}")))
}

pub(crate) fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub(crate) fn point_json(p: &[C64]) -> Value {
    Value::Array(p.iter().map(|z| complex_json(*z)).collect())
}

pub(crate) fn parse_point(v: &Value) -> Result<Point> {
    let arr = v
        .as_array()
        .ok_or_else(|| QdError::Parse(format!("point expected, got {v}")))?;
    arr.iter().map(parse_complex).collect()
}

/// A region of ℂⁿ.
#[derive(Clone, Debug)]
pub enum Domain {
    Disc(Disc),
    Polydisc(Vec<Disc>),
    Ball {
        dim: usize,
        center: Point,
        radius: f64,
    },
    Product(Vec<Domain>),
    /// Outer disc with closed discs removed.
    CircleDomain {
        outer: Disc,
        holes: Vec<Disc>,
    },
    /// `map(base)`, with `map` assumed injective on `base`.
    Image {
        base: Box<Domain>,
        map: Box<HolomorphicMap>,
    },
}

/// Outcome of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    /// No inverse image could be found; treated as outside.
    Unresolved,
}

/// Interior sampling strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    TensorGrid,
    QuasiRandom,
}

impl Domain {
    pub fn disc(center: C64, radius: f64) -> Result<Domain> {
        let d = Disc::new(center, radius);
        d.validate()?;
        Ok(Domain::Disc(d))
    }

    pub fn unit_disc() -> Domain {
        Domain::Disc(Disc::unit())
    }

    pub fn polydisc(discs: Vec<Disc>) -> Result<Domain> {
        if discs.is_empty() {
            return Err(QdError::InvalidDomain("polydisc needs a factor".into()));
        }
        for d in &discs {
            d.validate()?;
        }
        Ok(Domain::Polydisc(discs))
    }

    /// Origin-centered polydisc of the given radius.
    pub fn unit_polydisc(dim: usize, radius: f64) -> Result<Domain> {
        Domain::polydisc(vec![Disc::new(C64::new(0.0, 0.0), radius); dim])
    }

    pub fn ball(center: Point, radius: f64) -> Result<Domain> {
        if center.is_empty() {
            return Err(QdError::InvalidDomain("ball needs dimension ≥ 1".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(QdError::InvalidDomain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Domain::Ball {
            dim: center.len(),
            center,
            radius,
        })
    }

    pub fn unit_ball(dim: usize) -> Result<Domain> {
        Domain::ball(vec![C64::new(0.0, 0.0); dim], 1.0)
    }

    pub fn product(factors: Vec<Domain>) -> Result<Domain> {
        if factors.is_empty() {
            return Err(QdError::InvalidDomain("product needs a factor".into()));
        }
        if let Some(f) = factors.iter().find(|f| f.dim() != 1) {
            return Err(QdError::InvalidDomain(format!(
                "product factors must be planar, got dimension {}",
                f.dim()
            )));
        }
        Ok(Domain::Product(factors))
    }

    pub fn circle_domain(outer: Disc, holes: Vec<Disc>) -> Result<Domain> {
        outer.validate()?;
        for (i, h) in holes.iter().enumerate() {
            h.validate()?;
            if (h.center - outer.center).norm() + h.radius >= outer.radius {
                return Err(QdError::InvalidDomain(format!(
                    "hole {i} is not contained in the outer disc"
                )));
            }
            for (j, k) in holes.iter().enumerate().take(i) {
                if (h.center - k.center).norm() <= h.radius + k.radius {
                    return Err(QdError::InvalidDomain(format!(
                        "holes {j} and {i} intersect"
                    )));
                }
            }
        }
        Ok(Domain::CircleDomain { outer, holes })
    }

    pub fn image(base: Domain, map: HolomorphicMap) -> Result<Domain> {
        if base.dim() != map.dim() {
            return Err(QdError::DimensionMismatch {
                expected: base.dim(),
                got: map.dim(),
            });
        }
        Ok(Domain::Image {
            base: Box::new(base),
            map: Box::new(map),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Disc(_) | Domain::CircleDomain { .. } => 1,
            Domain::Polydisc(d) => d.len(),
            Domain::Ball { dim, .. } => *dim,
            Domain::Product(f) => f.len(),
            Domain::Image { base, .. } => base.dim(),
        }
    }

    pub fn is_planar(&self) -> bool {
        self.dim() == 1
    }

    /// Whether the domain is convex by construction.
    pub fn is_convex(&self) -> bool {
        match self {
            Domain::Disc(_) | Domain::Polydisc(_) | Domain::Ball { .. } => true,
            Domain::Product(f) => f.iter().all(Domain::is_convex),
            Domain::CircleDomain { holes, .. } => holes.is_empty(),
            Domain::Image { .. } => false,
        }
    }

    /// Short identifier of the domain kind.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Disc(_) => "disc",
            Domain::Polydisc(_) => "polydisc",
            Domain::Ball { .. } => "ball",
            Domain::Product(_) => "product",
            Domain::CircleDomain { .. } => "circle_domain",
            Domain::Image { .. } => "image",
        }
    }

    /// A distinguished interior point (image of the base center for mapped
    /// domains).
    pub fn center(&self) -> Result<Point> {
        Ok(match self {
            Domain::Disc(d) => vec![d.center],
            Domain::Polydisc(ds) => ds.iter().map(|d| d.center).collect(),
            Domain::Ball { center, .. } => center.clone(),
            Domain::Product(f) => {
                let mut p = Vec::new();
                for d in f {
                    p.extend(d.center()?);
                }
                p
            }
            Domain::CircleDomain { outer, holes } => {
                let c = outer.center;
                if holes.iter().all(|h| !h.contains_closed(c)) {
                    vec![c]
                } else {
                    // midpoint of the widest radial gap along the positive real axis
                    let mut best = (0.0, c);
                    let n = 64;
                    for k in 0..n {
                        let z = c + C64::new(outer.radius * (k as f64 + 0.5) / n as f64, 0.0);
                        let gap = boundary_distance(outer, holes, z);
                        if gap > best.0 {
                            best = (gap, z);
                        }
                    }
                    vec![best.1]
                }
            }
            Domain::Image { base, map } => map.evaluate(&base.center()?)?,
        })
    }

    /// Radius of a ball around [`Domain::center`] contained in the domain, for
    /// canonical domains.
    pub fn inradius(&self) -> Option<f64> {
        match self {
            Domain::Disc(d) => Some(d.radius),
            Domain::Polydisc(ds) => ds.iter().map(|d| d.radius).reduce(f64::min),
            Domain::Ball { radius, .. } => Some(*radius),
            Domain::Product(f) => f.iter().map(Domain::inradius).try_fold(f64::INFINITY, |a, r| {
                r.map(|r| a.min(r))
            }),
            Domain::CircleDomain { outer, holes } => {
                let c = self.center().ok()?[0];
                Some(boundary_distance(outer, holes, c))
            }
            Domain::Image { .. } => None,
        }
    }

    /// Closed-form Lebesgue volume where available.
    pub fn volume(&self) -> Option<f64> {
        match self {
            Domain::Disc(d) => Some(PI * d.radius * d.radius),
            Domain::Polydisc(ds) => Some(ds.iter().map(|d| PI * d.radius * d.radius).product()),
            Domain::Ball { dim, radius, .. } => {
                let n = *dim as i32;
                Some(PI.powi(n) * radius.powi(2 * n) / crate::jets::factorial(*dim))
            }
            Domain::Product(f) => f.iter().map(Domain::volume).product(),
            Domain::CircleDomain { outer, holes } => Some(
                PI * (outer.radius * outer.radius
                    - holes.iter().map(|h| h.radius * h.radius).sum::<f64>()),
            ),
            Domain::Image { .. } => None,
        }
    }

    fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Membership in the open domain.
    pub fn contains(&self, z: &[C64]) -> Result<bool> {
        Ok(self.membership(z)? == Membership::Inside)
    }

    /// Membership with an explicit unresolved state for mapped domains.
    pub fn membership(&self, z: &[C64]) -> Result<Membership> {
        self.check_dim(z)?;
        let inside = match self {
            Domain::Disc(d) => d.contains_open(z[0]),
            Domain::Polydisc(ds) => ds.iter().zip(z).all(|(d, zi)| d.contains_open(*zi)),
            Domain::Ball { center, radius, .. } => {
                z.iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).norm_sqr())
                    .sum::<f64>()
                    < radius * radius
            }
            Domain::Product(f) => {
                for (d, zi) in f.iter().zip(z) {
                    if !d.contains(std::slice::from_ref(zi))? {
                        return Ok(Membership::Outside);
                    }
                }
                true
            }
            Domain::CircleDomain { outer, holes } => {
                outer.contains_open(z[0]) && holes.iter().all(|h| !h.contains_closed(z[0]))
            }
            Domain::Image { base, map } => return image_membership(base, map, z),
        };
        Ok(if inside {
            Membership::Inside
        } else {
            Membership::Outside
        })
    }

    /// Per-coordinate enclosing discs `(center, radius)`.
    pub fn coordinate_bounds(&self) -> Result<Vec<Disc>> {
        Ok(match self {
            Domain::Disc(d) => vec![*d],
            Domain::Polydisc(ds) => ds.clone(),
            Domain::Ball { center, radius, .. } => {
                center.iter().map(|c| Disc::new(*c, *radius)).collect()
            }
            Domain::Product(f) => {
                let mut out = Vec::new();
                for d in f {
                    out.extend(d.coordinate_bounds()?);
                }
                out
            }
            Domain::CircleDomain { outer, .. } => vec![*outer],
            Domain::Image { base, map } => {
                // Coordinates are holomorphic, so their extent is attained on
                // the distinguished boundary of the base.
                let c = map.evaluate(&base.center()?)?;
                let mut rad = vec![0.0f64; c.len()];
                for p in base.distinguished_boundary(48)? {
                    let w = map.evaluate(&p)?;
                    for (r, (wi, ci)) in rad.iter_mut().zip(w.iter().zip(&c)) {
                        *r = r.max((wi - ci).norm());
                    }
                }
                c.iter()
                    .zip(rad)
                    .map(|(ci, r)| Disc::new(*ci, r * 1.05 + 1e-9))
                    .collect()
            }
        })
    }

    /// Points on the distinguished (Shilov) boundary, `per_circle` samples per
    /// boundary circle and tensor products across coordinates.
    pub fn distinguished_boundary(&self, per_circle: usize) -> Result<Vec<Point>> {
        let circle = |d: &Disc| -> Vec<C64> {
            (0..per_circle)
                .map(|k| {
                    d.center + C64::from_polar(d.radius, 2.0 * PI * k as f64 / per_circle as f64)
                })
                .collect()
        };
        Ok(match self {
            Domain::Disc(d) => circle(d).into_iter().map(|z| vec![z]).collect(),
            Domain::CircleDomain { outer, holes } => {
                let mut pts: Vec<Point> = circle(outer).into_iter().map(|z| vec![z]).collect();
                for h in holes {
                    pts.extend(circle(h).into_iter().map(|z| vec![z]));
                }
                pts
            }
            Domain::Polydisc(_) | Domain::Product(_) => {
                let factors: Vec<Vec<C64>> = match self {
                    Domain::Polydisc(ds) => ds.iter().map(circle).collect(),
                    Domain::Product(fs) => {
                        let mut out = Vec::new();
                        for f in fs {
                            out.push(f.distinguished_boundary(per_circle)?.into_iter().map(|p| p[0]).collect());
                        }
                        out
                    }
                    _ => unreachable!(),
                };
                tensor_points(&factors)
            }
            Domain::Ball { dim, center, radius } => {
                // Fibonacci-style lattice on the sphere S^{2n-1}.
                let count = per_circle.pow((*dim).min(3) as u32);
                let mut h = Halton::new(2 * dim, 11);
                (0..count)
                    .map(|_| {
                        let u = h.next().unwrap();
                        let g: Vec<f64> = u
                            .chunks(2)
                            .flat_map(|p| {
                                let r = (-2.0 * (1.0 - p[0]).max(1e-300).ln()).sqrt();
                                [r * (2.0 * PI * p[1]).cos(), r * (2.0 * PI * p[1]).sin()]
                            })
                            .collect();
                        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                        (0..*dim)
                            .map(|i| center[i] + C64::new(g[2 * i], g[2 * i + 1]) * (radius / norm))
                            .collect()
                    })
                    .collect()
            }
            Domain::Image { base, map } => {
                let mut out = Vec::new();
                for p in base.distinguished_boundary(per_circle)? {
                    out.push(map.evaluate(&p)?);
                }
                out
            }
        })
    }

    /// Boundary curves of a planar domain, each closed curve sampled at
    /// `points` positions (images of circles for mapped domains).
    pub fn boundary_curves(&self, points: usize) -> Result<Vec<Vec<C64>>> {
        let circle = |d: &Disc| -> Vec<C64> {
            (0..points)
                .map(|k| d.center + C64::from_polar(d.radius, 2.0 * PI * k as f64 / points as f64))
                .collect()
        };
        match self {
            Domain::Disc(d) => Ok(vec![circle(d)]),
            Domain::CircleDomain { outer, holes } => {
                let mut v = vec![circle(outer)];
                v.extend(holes.iter().map(circle));
                Ok(v)
            }
            Domain::Image { base, map } if base.is_planar() => base
                .boundary_curves(points)?
                .into_iter()
                .map(|c| {
                    c.into_iter()
                        .map(|z| map.evaluate(&[z]).map(|w| w[0]))
                        .collect::<Result<Vec<C64>>>()
                })
                .collect(),
            _ => Err(QdError::Unsupported(format!(
                "boundary curves of a {} domain of dimension {}",
                self.kind_name(),
                self.dim()
            ))),
        }
    }

    /// Interior sample, reproducible for a given `seed`.
    pub fn sample_interior(
        &self,
        strategy: SampleStrategy,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Point>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        match strategy {
            SampleStrategy::TensorGrid => self.sample_grid(count),
            SampleStrategy::QuasiRandom => self.sample_halton(count, seed),
        }
    }

    fn sample_grid(&self, count: usize) -> Result<Vec<Point>> {
        let bounds = self.coordinate_bounds()?;
        let real_dim = 2 * self.dim();
        let mut m = ((count as f64).powf(1.0 / real_dim as f64).ceil() as usize).max(1);
        for _ in 0..64 {
            let mut inside = Vec::new();
            let total = m.pow(real_dim as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut p = Vec::with_capacity(self.dim());
                let mut coords = [0.0f64; 2];
                for axis in 0..real_dim {
                    let k = rem % m;
                    rem /= m;
                    let b = &bounds[axis / 2];
                    coords[axis % 2] = -b.radius + b.radius * (2.0 * k as f64 + 1.0) / m as f64;
                    if axis % 2 == 1 {
                        p.push(b.center + C64::new(coords[0], coords[1]));
                    }
                }
                if self.contains(&p)? {
                    inside.push(p);
                }
            }
            if inside.len() >= count {
                let stride = inside.len() as f64 / count as f64;
                return Ok((0..count)
                    .map(|i| inside[(i as f64 * stride) as usize].clone())
                    .collect());
            }
            if total > 50_000_000 {
                return Err(QdError::EmptyDomain {
                    found: inside.len(),
                    requested: count,
                });
            }
            m += (m / 4).max(1);
        }
        Err(QdError::EmptyDomain {
            found: 0,
            requested: count,
        })
    }

    fn sample_halton(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        let bounds = self.coordinate_bounds()?;
        let mut seq = Halton::new(2 * self.dim(), seed);
        let mut out = Vec::with_capacity(count);
        let budget = REJECTION_BUDGET * count + 10_000;
        for _ in 0..budget {
            let u = seq.next().unwrap();
            let p: Point = bounds
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    b.center
                        + C64::new(
                            b.radius * (2.0 * u[2 * i] - 1.0),
                            b.radius * (2.0 * u[2 * i + 1] - 1.0),
                        )
                })
                .collect();
            if self.contains(&p)? {
                out.push(p);
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
        Err(QdError::EmptyDomain {
            found: out.len(),
            requested: count,
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            Domain::Disc(d) => {
                let mut v = d.to_json();
                v["kind"] = json!("disc");
                v
            }
            Domain::Polydisc(ds) => json!({
                "kind": "polydisc",
                "discs": ds.iter().map(|d| d.to_json()).collect::<Vec<_>>(),
            }),
            Domain::Ball { center, radius, .. } => json!({
                "kind": "ball",
                "center": point_json(center),
                "radius": radius,
            }),
            Domain::Product(f) => json!({
                "kind": "product",
                "factors": f.iter().map(Domain::to_json).collect::<Vec<_>>(),
            }),
            Domain::CircleDomain { outer, holes } => json!({
                "kind": "circle_domain",
                "outer": outer.to_json(),
                "holes": holes.iter().map(|h| h.to_json()).collect::<Vec<_>>(),
            }),
            Domain::Image { base, map } => json!({
                "kind": "image",
                "base": base.to_json(),
                "map": map.to_json(),
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Domain> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| QdError::Parse(format!("domain kind missing: {v}")))?;
        let list = |key: &str| -> Result<&Vec<Value>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| QdError::Parse(format!("domain field {key} missing")))
        };
        match kind {
            "disc" => {
                let d = Disc::from_json(v)?;
                Domain::disc(d.center, d.radius)
            }
            "polydisc" => {
                if let Some(n) = v.get("dim").and_then(Value::as_u64) {
                    let r = v.get("radius").and_then(Value::as_f64).unwrap_or(1.0);
                    return Domain::unit_polydisc(n as usize, r);
                }
                Domain::polydisc(list("discs")?.iter().map(Disc::from_json).collect::<Result<_>>()?)
            }
            "ball" => {
                let radius = v.get("radius").and_then(Value::as_f64).unwrap_or(1.0);
                let center = match (v.get("center"), v.get("dim").and_then(Value::as_u64)) {
                    (Some(c), _) => parse_point(c)?,
                    (None, Some(n)) => vec![C64::new(0.0, 0.0); n as usize],
                    _ => return Err(QdError::Parse("ball needs center or dim".into())),
                };
                Domain::ball(center, radius)
            }
            "product" => Domain::product(
                list("factors")?
                    .iter()
                    .map(Domain::from_json)
                    .collect::<Result<_>>()?,
            ),
            "circle_domain" => {
                let outer = Disc::from_json(
                    v.get("outer")
                        .ok_or_else(|| QdError::Parse("circle domain needs outer".into()))?,
                )?;
                let holes = match v.get("holes") {
                    Some(h) => h
                        .as_array()
                        .ok_or_else(|| QdError::Parse("holes must be a list".into()))?
                        .iter()
                        .map(Disc::from_json)
                        .collect::<Result<_>>()?,
                    None => Vec::new(),
                };
                Domain::circle_domain(outer, holes)
            }
            "image" => {
                let base = Domain::from_json(
                    v.get("base")
                        .ok_or_else(|| QdError::Parse("image needs base".into()))?,
                )?;
                let map = HolomorphicMap::from_json(
                    v.get("map")
                        .ok_or_else(|| QdError::Parse("image needs map".into()))?,
                )?;
                Domain::image(base, map)
            }
            other => Err(QdError::Parse(format!("unknown domain kind {other}"))),
        }
    }
}

fn tensor_points(factors: &[Vec<C64>]) -> Vec<Point> {
    let mut out: Vec<Point> = vec![Vec::new()];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for p in &out {
            for z in f {
                let mut q = p.clone();
                q.push(*z);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn image_membership(base: &Domain, map: &HolomorphicMap, z: &[C64]) -> Result<Membership> {
    if let Some(pre) = map.apply_inverse(z) {
        let pre = pre?;
        let back = map.evaluate(&pre)?;
        let err: f64 = back.iter().zip(z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err < 1e-9 * (1.0 + z.iter().map(|w| w.norm()).fold(0.0, f64::max)) {
            return Ok(if base.contains(&pre)? {
                Membership::Inside
            } else {
                Membership::Outside
            });
        }
    }
    let mut converged = false;
    for seed in base.seed_lattice()? {
        match map.invert_at(z, &seed, 1e-12) {
            Ok(pre) => {
                converged = true;
                if base.contains(&pre)? {
                    return Ok(Membership::Inside);
                }
            }
            Err(QdError::PoleHit) => {}
            Err(QdError::NoConvergence(_)) | Err(QdError::SingularJacobian) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(if converged {
        Membership::Outside
    } else {
        Membership::Unresolved
    })
}

impl Domain {
    /// Newton seeds used for membership in mapped domains: the center and a
    /// coarse lattice at half and nine-tenths of the coordinate radii.
    pub fn seed_lattice(&self) -> Result<Vec<Point>> {
        let c = self.center()?;
        let bounds = self.coordinate_bounds()?;
        let mut seeds = vec![c.clone()];
        for frac in [0.5, 0.9] {
            let dirs: Vec<Vec<C64>> = bounds
                .iter()
                .map(|b| {
                    (0..4)
                        .map(|k| C64::from_polar(b.radius * frac, FRAC_PI_2 * k as f64))
                        .collect()
                })
                .collect();
            for off in tensor_points(&dirs) {
                let p: Point = c.iter().zip(&off).map(|(a, b)| a + b).collect();
                if self.contains_base_only(&p) {
                    seeds.push(p);
                }
            }
        }
        Ok(seeds)
    }

    fn contains_base_only(&self, p: &[C64]) -> bool {
        match self {
            Domain::Image { .. } => true,
            _ => self.contains(p).unwrap_or(false),
        }
    }
}

fn boundary_distance(outer: &Disc, holes: &[Disc], z: C64) -> f64 {
    let mut d = outer.radius - (z - outer.center).norm();
    for h in holes {
        d = d.min((z - h.center).norm() - h.radius);
    }
    d
}

/// One piece of a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathPiece {
    Segment {
        from: C64,
        to: C64,
    },
    /// `center + radius·e^{iθ}` for θ from `start` to `start + sweep`.
    Arc {
        center: C64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl PathPiece {
    pub fn length(&self) -> f64 {
        match self {
            PathPiece::Segment { from, to } => (to - from).norm(),
            PathPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn start_point(&self) -> C64 {
        match self {
            PathPiece::Segment { from, .. } => *from,
            PathPiece::Arc {
                center,
                radius,
                start,
                ..
            } => center + C64::from_polar(*radius, *start),
        }
    }

    pub fn end_point(&self) -> C64 {
        match self {
            PathPiece::Segment { to, .. } => *to,
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + C64::from_polar(*radius, start + sweep),
        }
    }

    /// Point at parameter `s ∈ [0, 1]`.
    pub fn at(&self, s: f64) -> C64 {
        match self {
            PathPiece::Segment { from, to } => from + (to - from) * s,
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + C64::from_polar(*radius, start + sweep * s),
        }
    }
}

/// Piecewise C¹ path of segments and circular arcs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub pieces: Vec<PathPiece>,
}

impl PathPolyline {
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(PathPiece::length).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Piece endpoints in order.
    pub fn vertices(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.pieces.iter().map(PathPiece::start_point).collect();
        if let Some(last) = self.pieces.last() {
            v.push(last.end_point());
        }
        v
    }

    /// `n` points spread over the path proportionally to arc length,
    /// endpoints included.
    pub fn discretize(&self, n: usize) -> Vec<C64> {
        let total = self.length();
        if self.pieces.is_empty() || n == 0 {
            return Vec::new();
        }
        if total == 0.0 || n == 1 {
            return vec![self.pieces[0].start_point(); n];
        }
        let mut out = Vec::with_capacity(n);
        let mut idx = 0;
        let mut acc = 0.0;
        for k in 0..n {
            let s = total * k as f64 / (n - 1) as f64;
            while idx + 1 < self.pieces.len() && acc + self.pieces[idx].length() < s {
                acc += self.pieces[idx].length();
                idx += 1;
            }
            let len = self.pieces[idx].length();
            let t = if len > 0.0 { ((s - acc) / len).clamp(0.0, 1.0) } else { 0.0 };
            out.push(self.pieces[idx].at(t));
        }
        out
    }
}

/// Path from `z` to `w` of length at most `(π/2)|z − w|` inside a circle
/// domain: the straight segment, with each crossing of an enlarged hole
/// replaced by the shorter arc of the enlarged circle.
pub fn chord_arc_path(domain: &Domain, z: C64, w: C64) -> Result<PathPolyline> {
    let (outer, holes) = match domain {
        Domain::CircleDomain { outer, holes } => (*outer, holes.as_slice()),
        Domain::Disc(d) => (*d, &[][..]),
        other => {
            return Err(QdError::Unsupported(format!(
                "chord-arc paths in a {} domain",
                other.kind_name()
            )))
        }
    };
    for p in [z, w] {
        if !domain.contains(&[p])? {
            return Err(QdError::OutsideDomain);
        }
    }
    if z == w {
        return Ok(PathPolyline::default());
    }
    if holes.is_empty() {
        return Ok(PathPolyline {
            pieces: vec![PathPiece::Segment { from: z, to: w }],
        });
    }
    let eps = 0.5 * minimal_gap(&outer, holes);
    let scale = outer.radius;
    if eps <= 1e-12 * scale {
        return Err(QdError::DegenerateGap(format!(
            "boundary circles are {:.3e} apart",
            2.0 * eps
        )));
    }

    // Crossings of the segment with the enlarged discs, in order along z→w.
    let dir = w - z;
    let mut crossings: Vec<(f64, f64, usize, f64)> = Vec::new();
    for (i, h) in holes.iter().enumerate() {
        let dz = (z - h.center).norm() - h.radius;
        let dw = (w - h.center).norm() - h.radius;
        // shrink locally when an endpoint sits inside the enlarged circle
        let mut e = eps;
        for d in [dz, dw] {
            if d <= e {
                e = 0.5 * d;
            }
        }
        if e <= 1e-15 * scale {
            return Err(QdError::DegenerateGap(format!(
                "endpoint within {:.3e} of hole {i}",
                dz.min(dw)
            )));
        }
        let rho = h.radius + e;
        // |z + t·dir − c|² = ρ²
        let p = z - h.center;
        let a = dir.norm_sqr();
        let b = 2.0 * (p.re * dir.re + p.im * dir.im);
        let c = p.norm_sqr() - rho * rho;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let t0 = (-b - sq) / (2.0 * a);
        let t1 = (-b + sq) / (2.0 * a);
        if t1 < 0.0 || t0 > 1.0 {
            continue;
        }
        crossings.push((t0.max(0.0), t1.min(1.0), i, rho));
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut pieces = Vec::new();
    let mut cursor = z;
    for (t0, t1, i, rho) in crossings {
        let entry = z + dir * t0;
        let exit = z + dir * t1;
        if (entry - cursor).norm() > 0.0 {
            pieces.push(PathPiece::Segment {
                from: cursor,
                to: entry,
            });
        }
        let c = holes[i].center;
        let a0 = (entry - c).arg();
        let a1 = (exit - c).arg();
        let mut sweep = a1 - a0;
        while sweep > PI {
            sweep -= 2.0 * PI;
        }
        while sweep < -PI {
            sweep += 2.0 * PI;
        }
        if sweep != 0.0 {
            pieces.push(PathPiece::Arc {
                center: c,
                radius: rho,
                start: a0,
                sweep,
            });
        }
        cursor = exit;
    }
    if (w - cursor).norm() > 0.0 || pieces.is_empty() {
        pieces.push(PathPiece::Segment {
            from: cursor,
            to: w,
        });
    }
    Ok(PathPolyline { pieces })
}

fn minimal_gap(outer: &Disc, holes: &[Disc]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, h) in holes.iter().enumerate() {
        gap = gap.min(outer.radius - (h.center - outer.center).norm() - h.radius);
        for k in &holes[..i] {
            gap = gap.min((h.center - k.center).norm() - h.radius - k.radius);
        }
    }
    gap
}

/// Sampled chord-arc ratio of a planar domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordArcEstimate {
    pub ratio: f64,
    pub worst_pair: Option<(C64, C64)>,
    pub trials: usize,
}

/// Largest observed `length(path)/|z − w|` over `trials` quasi-random pairs.
///
/// Circle domains use [`chord_arc_path`]; convex domains use segments; mapped
/// domains take the shorter of the straight segment (when it stays inside)
/// and the image of the segment between the preimages.
pub fn chord_arc_ratio_estimate(domain: &Domain, trials: usize, seed: u64) -> Result<ChordArcEstimate> {
    if !domain.is_planar() {
        return Err(QdError::Unsupported("chord-arc ratio of a non-planar domain".into()));
    }
    let pts = domain.sample_interior(SampleStrategy::QuasiRandom, 2 * trials.max(1), seed)?;
    let mut best = ChordArcEstimate {
        ratio: 1.0,
        worst_pair: None,
        trials,
    };
    for pair in pts.chunks(2).take(trials) {
        let (z, w) = (pair[0][0], pair[1][0]);
        let d = (z - w).norm();
        if d == 0.0 {
            continue;
        }
        let len = match domain {
            Domain::Image { base, map } => image_path_length(base, map, z, w)?,
            _ if domain.is_convex() => d,
            _ => chord_arc_path(domain, z, w)?.length(),
        };
        let r = len / d;
        if best.worst_pair.is_none() || r > best.ratio {
            best.ratio = r;
            best.worst_pair = Some((z, w));
        }
    }
    Ok(best)
}

fn image_path_length(base: &Domain, map: &HolomorphicMap, z: C64, w: C64) -> Result<f64> {
    let direct = (z - w).norm();
    let seg = PathPolyline {
        pieces: vec![PathPiece::Segment { from: z, to: w }],
    };
    let domain = Domain::Image {
        base: Box::new(base.clone()),
        map: Box::new(map.clone()),
    };
    let mut straight_ok = true;
    for p in seg.discretize(64) {
        if !domain.contains(&[p])? {
            straight_ok = false;
            break;
        }
    }
    if straight_ok {
        return Ok(direct);
    }
    let seeds = base.seed_lattice()?;
    let pre = |t: C64| -> Result<C64> {
        for s in &seeds {
            if let Ok(p) = map.invert_at(&[t], s, 1e-12) {
                if base.contains(&p)? {
                    return Ok(p[0]);
                }
            }
        }
        Err(QdError::NonConvergedInverse(format!("{t}")))
    };
    let (a, b) = (pre(z)?, pre(w)?);
    let inner = match base {
        Domain::CircleDomain { .. } => chord_arc_path(base, a, b)?,
        _ => PathPolyline {
            pieces: vec![PathPiece::Segment { from: a, to: b }],
        },
    };
    let pts = inner.discretize(257);
    let mut len = 0.0;
    let mut prev = map.evaluate(&[pts[0]])?[0];
    for p in &pts[1..] {
        let q = map.evaluate(&[*p])?[0];
        len += (q - prev).norm();
        prev = q;
    }
    Ok(len)
}
