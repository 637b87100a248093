//! Closed-form holomorphic maps: evaluation, Jacobians, inversion and
//! sampled injectivity.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::expr::{Expr, Scalar};
use crate::geometry::{Domain, Point};
use crate::jets::{jet_lift, Jet, MultiIndex};
use crate::par;

pub const NEWTON_MAX_STEPS: usize = 50;
pub const NEWTON_TOL: f64 = 1e-12;
/// Below this Jacobian determinant modulus Newton steps are halved.
pub const DAMPING_THRESHOLD: f64 = 1e-8;

/// Holomorphic map `ℂⁿ → ℂⁿ` given by closed-form components.
#[derive(Clone, Debug)]
pub struct HolomorphicMap {
    name: String,
    components: Vec<Expr>,
    inverse: Option<Vec<Expr>>,
    declared_domain: Option<Box<Domain>>,
    partials: Arc<OnceLock<Vec<Vec<Expr>>>>,
}

impl HolomorphicMap {
    pub fn new(name: impl Into<String>, components: Vec<Expr>) -> HolomorphicMap {
        HolomorphicMap {
            name: name.into(),
            components,
            inverse: None,
            declared_domain: None,
            partials: Arc::new(OnceLock::new()),
        }
    }

    pub fn identity(dim: usize) -> HolomorphicMap {
        HolomorphicMap::new("identity", (0..dim).map(Expr::var).collect())
            .with_inverse((0..dim).map(Expr::var).collect())
    }

    /// Registers a closed-form inverse used by [`HolomorphicMap::invert_at`].
    pub fn with_inverse(mut self, inverse: Vec<Expr>) -> HolomorphicMap {
        self.inverse = Some(inverse);
        self
    }

    pub fn without_inverse(mut self) -> HolomorphicMap {
        self.inverse = None;
        self
    }

    /// Declares the domain on which the map is meant to be holomorphic and
    /// checks denominators on a sample of it.
    pub fn with_domain(mut self, domain: Domain) -> Result<HolomorphicMap> {
        if domain.dim() != self.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.dim(),
                got: domain.dim(),
            });
        }
        if self.components.iter().any(Expr::has_division) {
            let mut pts = domain.distinguished_boundary(32)?;
            pts.extend(domain.sample_interior(crate::geometry::SampleStrategy::QuasiRandom, 64, 0)?);
            for p in pts {
                self.evaluate(&p)?;
            }
        }
        self.declared_domain = Some(Box::new(domain));
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> HolomorphicMap {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn inverse(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    pub fn declared_domain(&self) -> Option<&Domain> {
        self.declared_domain.as_deref()
    }

    /// Symbolic partials `∂f_i/∂z_j`, computed once.
    pub fn partials(&self) -> &[Vec<Expr>] {
        self.partials.get_or_init(|| {
            self.components
                .iter()
                .map(|c| (0..self.dim()).map(|j| c.derivative(j)).collect())
                .collect()
        })
    }

    pub fn evaluate(&self, z: &[C64]) -> Result<Point> {
        self.check_dim(z)?;
        self.components.iter().map(|c| c.eval(z)).collect()
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

    /// Component jets at `center` through `order`.
    pub fn jets(&self, center: &[C64], order: usize) -> Result<Vec<Jet>> {
        self.check_dim(center)?;
        self.components
            .iter()
            .map(|c| match jet_lift(c, center, order) {
                Err(QdError::PoleAtCenter) => Err(QdError::PoleHit),
                r => r,
            })
            .collect()
    }

    /// Matrix of first holomorphic partials from order-1 jets.
    pub fn jacobian_matrix(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        let n = self.dim();
        let jets = self.jets(z, 1)?;
        Ok(DMatrix::from_fn(n, n, |i, j| {
            jets[i].coefficient(&MultiIndex::unit(n, j))
        }))
    }

    pub fn jacobian_determinant(&self, z: &[C64]) -> Result<C64> {
        Ok(determinant(&self.jacobian_matrix(z)?))
    }

    /// Symbolic Jacobian determinant.
    pub fn jacobian_expr(&self) -> Expr {
        det_generic_expr(self.partials())
    }

    /// Jet of the Jacobian determinant at `center` through `order`.
    pub fn jacobian_jet(&self, center: &[C64], order: usize) -> Result<Jet> {
        let jets = self.jets(center, order + 1)?;
        let n = self.dim();
        let m: Vec<Vec<Jet>> = jets
            .iter()
            .map(|j| (0..n).map(|v| j.partial(v)).collect())
            .collect();
        Ok(det_generic(&m))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &HolomorphicMap) -> Result<HolomorphicMap> {
        if inner.dim() != self.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.dim(),
                got: inner.dim(),
            });
        }
        let comps = self
            .components
            .iter()
            .map(|c| c.compose(&inner.components))
            .collect();
        let mut out = HolomorphicMap::new(format!("{}∘{}", self.name, inner.name), comps);
        if let (Some(a), Some(b)) = (&self.inverse, &inner.inverse) {
            out.inverse = Some(b.iter().map(|e| e.compose(a)).collect());
        }
        Ok(out)
    }

    /// `Σ wₖ fₖ` componentwise.
    pub fn linear_combination(name: &str, terms: &[(C64, &HolomorphicMap)]) -> Result<HolomorphicMap> {
        let dim = terms.first().map_or(0, |t| t.1.dim());
        let mut comps = vec![Expr::zero(); dim];
        for (w, f) in terms {
            if f.dim() != dim {
                return Err(QdError::DimensionMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
            for (c, e) in comps.iter_mut().zip(&f.components) {
                *c = c.clone() + Expr::constant(*w) * e.clone();
            }
        }
        Ok(HolomorphicMap::new(name, comps))
    }

    /// Closed-form inverse at `z`, when registered.
    pub fn apply_inverse(&self, z: &[C64]) -> Option<Result<Point>> {
        self.inverse
            .as_ref()
            .map(|inv| inv.iter().map(|c| c.eval(z)).collect())
    }

    fn jacobian_fast(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        let p = self.partials();
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = p[i][j].eval(z)?;
            }
        }
        Ok(m)
    }

    /// Solves `f(z) = target` by Newton's method from `seed`, or through the
    /// registered inverse.
    pub fn invert_at(&self, target: &[C64], seed: &[C64], tol: f64) -> Result<Point> {
        self.check_dim(target)?;
        self.check_dim(seed)?;
        if let Some(r) = self.apply_inverse(target) {
            let z = r?;
            let back = self.evaluate(&z)?;
            if max_dist(&back, target) < tol.max(1e-14 * (1.0 + max_norm(target))) {
                return Ok(z);
            }
        }
        self.newton(target, seed, tol, NEWTON_MAX_STEPS)
    }

    pub(crate) fn newton(
        &self,
        target: &[C64],
        seed: &[C64],
        tol: f64,
        max_steps: usize,
    ) -> Result<Point> {
        let n = self.dim();
        let floor = tol.max(4.0 * f64::EPSILON * (1.0 + max_norm(target)));
        let mut z: Point = seed.to_vec();
        for _ in 0..max_steps {
            let fz = self.evaluate(&z)?;
            let r: Vec<C64> = fz.iter().zip(target).map(|(a, b)| a - b).collect();
            if r.iter().map(|x| x.norm()).fold(0.0, f64::max) < floor {
                return Ok(z);
            }
            let j = self.jacobian_fast(&z)?;
            let det = determinant(&j);
            if det.norm() == 0.0 || !det.is_finite() {
                return Err(QdError::SingularJacobian);
            }
            let step = if n == 1 {
                vec![r[0] / j[(0, 0)]]
            } else {
                let b = DVector::from_vec(r.clone());
                let s = j.lu().solve(&b).ok_or(QdError::SingularJacobian)?;
                s.iter().copied().collect()
            };
            let damp = if det.norm() < DAMPING_THRESHOLD { 0.5 } else { 1.0 };
            for (zi, si) in z.iter_mut().zip(&step) {
                *zi -= si * damp;
            }
            if z.iter().any(|x| !x.is_finite()) {
                return Err(QdError::NoConvergence(max_steps));
            }
        }
        let fz = self.evaluate(&z)?;
        if max_dist(&fz, target) < floor {
            return Ok(z);
        }
        Err(QdError::NoConvergence(max_steps))
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "components": self.components.iter().map(Expr::to_json).collect::<Vec<_>>(),
        });
        if let Some(inv) = &self.inverse {
            v["inverse"] = Value::Array(inv.iter().map(Expr::to_json).collect());
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<HolomorphicMap> {
        let comps = v
            .get("components")
            .and_then(Value::as_array)
            .ok_or_else(|| QdError::Parse(format!("map components missing: {v}")))?
            .iter()
            .map(Expr::from_json)
            .collect::<Result<Vec<_>>>()?;
        let name = v.get("name").and_then(Value::as_str).unwrap_or("map");
        let mut m = HolomorphicMap::new(name, comps);
        if let Some(inv) = v.get("inverse").and_then(Value::as_array) {
            m.inverse = Some(inv.iter().map(Expr::from_json).collect::<Result<_>>()?);
        }
        Ok(m)
    }
}

fn max_norm(z: &[C64]) -> f64 {
    z.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn max_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Determinant of a small complex matrix.
pub fn determinant(m: &DMatrix<C64>) -> C64 {
    match m.nrows() {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// Cofactor expansion over any [`Scalar`] algebra.
pub fn det_generic<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    match n {
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        _ => {
            let mut acc: Option<S> = None;
            for j in 0..n {
                let minor: Vec<Vec<S>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][j].mul(&det_generic(&minor));
                acc = Some(match acc {
                    None => term,
                    Some(a) if j % 2 == 0 => a.add(&term),
                    Some(a) => a.sub(&term),
                });
            }
            acc.expect("non-empty matrix")
        }
    }
}

fn det_generic_expr(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Expr::zero();
            for j in 0..n {
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][j].clone() * det_generic_expr(&minor);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Outcome of a sampled injectivity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub injective_on_sample: bool,
    pub min_pair_separation_ratio: f64,
    pub witness: Option<(Point, Point)>,
    pub resolution: usize,
    pub grid_points: usize,
    pub spacing: f64,
    pub candidates_checked: usize,
}

/// Candidate pairs confirmed by Newton per scan.
const CONFIRM_LIMIT: usize = 32;
/// Points in the all-pairs subsample used for the separation ratio.
const RATIO_SUBSAMPLE: usize = 1024;

/// Checks injectivity of `f` on a lattice of `domain` with spacing
/// `2R/resolution`, where `R` bounds each coordinate.
///
/// Image points are bucketed spatially; pairs whose images are closer than
/// the local resolution but whose preimages are well separated are confirmed
/// by solving `f(z') = f(w)` from `z`. A confirmed distinct preimage inside
/// the domain is a witness.
pub fn injectivity_scan(f: &HolomorphicMap, domain: &Domain, resolution: usize) -> Result<InjectivityReport> {
    let resolution = resolution.max(2);
    let n = f.dim();
    if domain.dim() != n {
        return Err(QdError::DimensionMismatch {
            expected: n,
            got: domain.dim(),
        });
    }
    let bounds = domain.coordinate_bounds()?;
    let rmax = bounds.iter().map(|b| b.radius).fold(0.0, f64::max);
    let h = 2.0 * rmax / resolution as f64;
    let half = (resolution / 2) as i64;
    let axis: Vec<Vec<f64>> = bounds
        .iter()
        .map(|b| {
            (-half..=half)
                .map(|k| k as f64 * h)
                .filter(|x| x.abs() < b.radius)
                .collect()
        })
        .collect();

    // lattice points inside the domain
    let mut pts: Vec<Point> = vec![Vec::new()];
    for (b, ax) in bounds.iter().zip(&axis) {
        let mut next = Vec::with_capacity(pts.len() * ax.len() * ax.len());
        for p in &pts {
            for &x in ax {
                for &y in ax {
                    if x * x + y * y >= b.radius * b.radius {
                        continue;
                    }
                    let mut q = p.clone();
                    q.push(b.center + C64::new(x, y));
                    next.push(q);
                }
            }
        }
        pts = next;
    }
    let inside: Vec<bool> = par::map_slice(&pts, |p| domain.contains(p).unwrap_or(false));
    let pts: Vec<Point> = pts
        .into_iter()
        .zip(inside)
        .filter_map(|(p, ok)| ok.then_some(p))
        .collect();
    let m = pts.len();
    if m < 2 {
        return Ok(InjectivityReport {
            injective_on_sample: true,
            min_pair_separation_ratio: f64::INFINITY,
            witness: None,
            resolution,
            grid_points: m,
            spacing: h,
            candidates_checked: 0,
        });
    }

    let partials = f.partials();
    let evals: Vec<Result<(Point, f64)>> = par::map_slice(&pts, |p| {
        let w = f.evaluate(p)?;
        let mut fro = 0.0;
        for row in partials {
            for e in row {
                fro += e.eval(p)?.norm_sqr();
            }
        }
        Ok((w, fro.sqrt()))
    });
    let mut images = Vec::with_capacity(m);
    let mut scale = Vec::with_capacity(m);
    for e in evals {
        let (w, s) = e?;
        images.push(w);
        scale.push(s);
    }
    let smax = scale.iter().copied().fold(0.0, f64::max);
    let cell = (1.5 * h * smax).max(1e-300);

    let key = |w: &[C64]| -> Vec<i64> {
        w.iter()
            .flat_map(|z| [(z.re / cell).floor() as i64, (z.im / cell).floor() as i64])
            .collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
    for (i, w) in images.iter().enumerate() {
        buckets.entry(key(w)).or_default().push(i as u32);
    }
    let offsets: Vec<Vec<i64>> = {
        let mut o: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..2 * n {
            o = o
                .into_iter()
                .flat_map(|v| {
                    (-1..=1).map(move |d| {
                        let mut v = v.clone();
                        v.push(d);
                        v
                    })
                })
                .collect();
        }
        o
    };

    // (ratio, i, j) for candidate pairs
    let cand_chunks: Vec<Vec<(f64, u32, u32)>> = par::map_chunks(m, |range| {
        let mut out = Vec::new();
        let mut nk = vec![0i64; 2 * n];
        for i in range {
            let k = key(&images[i]);
            for off in &offsets {
                for (slot, (a, b)) in nk.iter_mut().zip(k.iter().zip(off)) {
                    *slot = a + b;
                }
                if let Some(list) = buckets.get(&nk) {
                    for &j in list {
                        let j = j as usize;
                        if j <= i {
                            continue;
                        }
                        let dz = dist(&pts[i], &pts[j]);
                        if dz <= 2.5 * h {
                            continue;
                        }
                        let dw = dist(&images[i], &images[j]);
                        if dw < 1.5 * h * scale[i].max(scale[j]) {
                            out.push((dw / dz, i as u32, j as u32));
                        }
                    }
                }
            }
        }
        out
    });
    let mut candidates: Vec<(f64, u32, u32)> = cand_chunks.into_iter().flatten().collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut ratio = f64::INFINITY;
    if let Some(c) = candidates.first() {
        ratio = c.0;
    }
    let stride = m.div_ceil(RATIO_SUBSAMPLE).max(1);
    let sub: Vec<usize> = (0..m).step_by(stride).collect();
    let sub_min = par::map_range(sub.len(), |a| {
        let i = sub[a];
        let mut best = f64::INFINITY;
        for &j in &sub[a + 1..] {
            let dz = dist(&pts[i], &pts[j]);
            if dz > 0.0 {
                best = best.min(dist(&images[i], &images[j]) / dz);
            }
        }
        best
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    ratio = ratio.min(sub_min);

    let checked = candidates.len().min(CONFIRM_LIMIT);
    let confirmations: Vec<Option<(Point, Point, f64)>> =
        par::map_slice(&candidates[..checked], |&(_, i, j)| {
            let (i, j) = (i as usize, j as usize);
            let z = f.newton(&images[j], &pts[i], NEWTON_TOL, NEWTON_MAX_STEPS).ok()?;
            if dist(&z, &pts[j]) <= h || !domain.contains(&z).unwrap_or(false) {
                return None;
            }
            let fz = f.evaluate(&z).ok()?;
            let r = dist(&fz, &images[j]) / dist(&z, &pts[j]);
            Some((z, pts[j].clone(), r))
        });
    let witness = confirmations.into_iter().flatten().next();
    if let Some((_, _, r)) = &witness {
        ratio = ratio.min(*r);
    }
    Ok(InjectivityReport {
        injective_on_sample: witness.is_none(),
        min_pair_separation_ratio: ratio,
        witness: witness.map(|(a, b, _)| (a, b)),
        resolution,
        grid_points: m,
        spacing: h,
        candidates_checked: checked,
    })
}

/// Divided-difference bound `inf |f(z) − f(w)|/|z − w|` of a planar map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DividedDifference {
    /// Sampled minimum.
    pub estimate: f64,
    /// Lipschitz-corrected lower bound, for convex domains.
    pub lower_bound: Option<f64>,
    pub minimizer: (C64, C64),
    pub samples: usize,
}

fn divided(f: &Expr, df: &Expr, z: C64, w: C64) -> Result<C64> {
    if (z - w).norm() < 1e-7 {
        df.eval(&[(z + w) * 0.5])
    } else {
        Ok((f.eval(&[z])? - f.eval(&[w])?) / (z - w))
    }
}

/// Minimum of `|F(z, w)|`, `F` the divided difference of `f`, over pairs of
/// boundary samples (with `F(z, z) = f′(z)`).
///
/// For `f` univalent near the closure `F` is holomorphic and zero-free on
/// the closure of the product domain, so its modulus is smallest on the
/// product of boundaries.
pub fn divided_difference_min(f: &HolomorphicMap, domain: &Domain, samples: usize) -> Result<f64> {
    Ok(divided_difference(f, domain, samples, false)?.estimate)
}

/// As [`divided_difference_min`], refining near the minimizer and, on convex
/// domains, subtracting a Lipschitz bound for the unsampled gaps.
pub fn divided_difference(
    f: &HolomorphicMap,
    domain: &Domain,
    samples: usize,
    certify: bool,
) -> Result<DividedDifference> {
    if f.dim() != 1 || !domain.is_planar() {
        return Err(QdError::Unsupported("divided differences of non-planar maps".into()));
    }
    let samples = samples.max(8);
    let g = &f.components()[0];
    let dg = &f.partials()[0][0];
    let bd: Vec<C64> = domain
        .distinguished_boundary(samples)?
        .into_iter()
        .map(|p| p[0])
        .collect();
    let rows: Vec<Result<(f64, usize, usize)>> = par::map_range(bd.len(), |i| {
        let mut best = (f64::INFINITY, i, i);
        for j in i..bd.len() {
            let v = divided(g, dg, bd[i], bd[j])?.norm();
            if v < best.0 {
                best = (v, i, j);
            }
        }
        Ok(best)
    });
    let mut best = (f64::INFINITY, 0, 0);
    for r in rows {
        let r = r?;
        if r.0 < best.0 {
            best = r;
        }
    }
    let mut minimizer = (bd[best.1], bd[best.2]);
    let mut estimate = best.0;
    let mut lower_bound = None;
    if certify {
        if let Domain::Disc(d) = domain {
            // refine in angle around the minimizer
            let ang = |z: C64| (z - d.center).arg();
            let (mut a, mut b) = (ang(minimizer.0), ang(minimizer.1));
            let mut step = 2.0 * std::f64::consts::PI / samples as f64;
            for _ in 0..4 {
                let (mut ba, mut bb) = (a, b);
                for p in -10..=10 {
                    for q in -10..=10 {
                        let ta = a + step * p as f64 / 10.0;
                        let tb = b + step * q as f64 / 10.0;
                        let z = d.center + C64::from_polar(d.radius, ta);
                        let w = d.center + C64::from_polar(d.radius, tb);
                        let v = divided(g, dg, z, w)?.norm();
                        if v < estimate {
                            estimate = v;
                            minimizer = (z, w);
                            ba = ta;
                            bb = tb;
                        }
                    }
                }
                a = ba;
                b = bb;
                step /= 10.0;
            }
            // |∂F/∂z| ≤ sup|f''|/2 on a convex domain; sup attained on the boundary.
            let d2 = dg.derivative(0);
            let mut sup2 = 0.0f64;
            for k in 0..4 * samples {
                let z = d.center
                    + C64::from_polar(d.radius, 2.0 * std::f64::consts::PI * k as f64 / (4 * samples) as f64);
                sup2 = sup2.max(d2.eval(&[z])?.norm());
            }
            let spacing = 2.0 * std::f64::consts::PI * d.radius / samples as f64;
            lower_bound = Some(best.0 - 1.05 * sup2 * 0.5 * spacing);
        }
    }
    Ok(DividedDifference {
        estimate,
        lower_bound,
        minimizer,
        samples,
    })
}

/// Maps used by the worked examples.
pub mod named {
    use super::*;

    fn z(i: usize) -> Expr {
        Expr::var(i)
    }

    /// `z ↦ z + c z²`.
    pub fn cardioid(c: C64) -> HolomorphicMap {
        HolomorphicMap::new(
            format!("z+({c})z^2"),
            vec![z(0) + Expr::constant(c) * z(0).powi(2)],
        )
    }

    /// `(z₁, z₂) ↦ (e^{z₁+z₂} + z₁, z₁ + z₂)` with inverse
    /// `(ζ₁ − e^{ζ₂}, ζ₂ − ζ₁ + e^{ζ₂})`.
    pub fn exp_map() -> HolomorphicMap {
        let s = z(0) + z(1);
        HolomorphicMap::new("exp-map", vec![s.clone().exp() + z(0), s]).with_inverse(vec![
            z(0) - z(1).exp(),
            z(1) - z(0) + z(1).exp(),
        ])
    }

    /// `(z₁, z₂) ↦ (1/(3 − z₁ − z₂), z₁)`.
    pub fn bergman_coordinate() -> HolomorphicMap {
        HolomorphicMap::new(
            "bergman-coordinate",
            vec![Expr::one() / (Expr::real(3.0) - z(0) - z(1)), z(0)],
        )
        .with_inverse(vec![
            z(1),
            Expr::real(3.0) - z(1) - Expr::one() / z(0),
        ])
    }

    /// `(z₁, z₂) ↦ (z₁² − z₂, z₁ + z₂)`.
    pub fn one_point_qdp() -> HolomorphicMap {
        HolomorphicMap::new(
            "one-point-qdp",
            vec![z(0).powi(2) - z(1), z(0) + z(1)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Disc;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn evaluate_examples() {
        let f = named::exp_map();
        assert_eq!(f.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let b = named::bergman_coordinate();
        let v = b.evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((v[0] - c(1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert_eq!(b.evaluate(&[c(1.5, 0.0), c(1.5, 0.0)]).unwrap_err(), QdError::PoleHit);
    }

    #[test]
    fn jacobian_examples() {
        let o = [c(0.0, 0.0), c(0.0, 0.0)];
        assert!((named::exp_map().jacobian_determinant(&[c(0.3, 0.1), c(-0.2, 0.4)]).unwrap() - 1.0).norm() < 1e-14);
        assert!((named::one_point_qdp().jacobian_determinant(&o).unwrap() - 1.0).norm() < 1e-15);
        assert!((named::bergman_coordinate().jacobian_determinant(&o).unwrap() + 1.0 / 9.0).norm() < 1e-15);
    }

    #[test]
    fn jacobian_jet_matches_symbolic() {
        let f = named::one_point_qdp();
        let p = [c(0.1, 0.2), c(-0.3, 0.1)];
        let j = f.jacobian_jet(&p, 3).unwrap();
        let u = f.jacobian_expr();
        assert!((j.value() - u.eval(&p).unwrap()).norm() < 1e-14);
        // u = 2z₁ + 1
        assert!((j.coefficient(&MultiIndex::new(vec![1, 0])) - 2.0).norm() < 1e-14);
    }

    #[test]
    fn inversion_examples() {
        let f = named::exp_map();
        let z = f.invert_at(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0)], 1e-12).unwrap();
        assert!(z.iter().all(|x| x.norm() < 1e-14));
        let g = named::cardioid(c(0.3, 0.0));
        let z = g.invert_at(&[c(0.33, 0.0)], &[c(0.3, 0.0)], 1e-12).unwrap();
        let exact = (-1.0 + (1.0f64 + 4.0 * 0.3 * 0.33).sqrt()) / 0.6;
        assert!((z[0] - exact).norm() < 1e-12);
        // same answer without the closed form
        let z = f
            .clone()
            .without_inverse()
            .invert_at(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.1, 0.0), c(0.0, 0.1)], 1e-12)
            .unwrap();
        assert!(z.iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn scan_examples() {
        let disc = Domain::unit_disc();
        let id = HolomorphicMap::identity(1);
        let r = injectivity_scan(&id, &disc, 40).unwrap();
        assert!(r.injective_on_sample);
        assert!((r.min_pair_separation_ratio - 1.0).abs() < 1e-12);
        let sq = HolomorphicMap::new("square", vec![Expr::var(0).powi(2)]);
        let r = injectivity_scan(&sq, &disc, 40).unwrap();
        assert!(!r.injective_on_sample);
        let (a, b) = r.witness.unwrap();
        assert!((a[0] * a[0] - b[0] * b[0]).norm() < 1e-10);
        let poly = Domain::unit_polydisc(2, 0.4).unwrap();
        let r = injectivity_scan(&named::one_point_qdp(), &poly, 10).unwrap();
        assert!(r.injective_on_sample);
    }

    #[test]
    fn divided_difference_examples() {
        let disc = Domain::unit_disc();
        let id = HolomorphicMap::identity(1);
        assert!((divided_difference_min(&id, &disc, 64).unwrap() - 1.0).abs() < 1e-12);
        let two = HolomorphicMap::new("2z", vec![Expr::real(2.0) * Expr::var(0)]);
        assert!((divided_difference_min(&two, &disc, 64).unwrap() - 2.0).abs() < 1e-12);
        let card = named::cardioid(c(0.3, 0.0));
        let d = divided_difference(&card, &disc, 128, true).unwrap();
        assert!((d.estimate - 0.4).abs() < 1e-9);
        assert!(d.lower_bound.unwrap() <= d.estimate);
        let dom = Domain::circle_domain(Disc::unit(), vec![Disc::new(c(0.0, 0.0), 0.3)]).unwrap();
        assert!((divided_difference_min(&id, &dom, 64).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compose_inverse_chain() {
        let f = named::exp_map();
        let g = f.compose(&HolomorphicMap::identity(2)).unwrap();
        let p = [c(0.2, 0.1), c(-0.1, 0.3)];
        let q = g.evaluate(&p).unwrap();
        let back = g.apply_inverse(&q).unwrap().unwrap();
        assert!(dist(&back, &p) < 1e-13);
    }
}
