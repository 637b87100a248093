//! Truncated multivariate power series over ℂ.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f(c) / α!` of a holomorphic
//! function at a center `c` for every multi-index with `|α| ≤ N`. Coefficients
//! are kept dense over that simplex in graded order, so truncating to a lower
//! order is a prefix slice and products are a precomputed convolution table.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{QdError, Result};
use crate::expr::Expr;

/// Default jet order used by kernel derivatives and transport.
pub const DEFAULT_MAX_ORDER: usize = 8;

/// Tolerance on the constant terms when chaining jets through a composition.
pub const CHAIN_TOL: f64 = 1e-12;

/// Exponent vector `α = (α₁, …, αₙ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `α! = α₁!⋯αₙ!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Concatenates exponent vectors, e.g. for product domains.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut e = self.0.clone();
        e.extend_from_slice(&other.0);
        MultiIndex(e)
    }

    /// `z^α` for a point `z`.
    pub fn monomial(&self, z: &[C64]) -> C64 {
        self.0
            .iter()
            .zip(z)
            .fold(C64::new(1.0, 0.0), |acc, (&e, &zi)| acc * zi.powu(e))
    }

    /// All multi-indices of dimension `dim` with `|α| ≤ order`, graded by
    /// total order and lexicographically descending within an order.
    pub fn all_up_to(dim: usize, order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for d in 0..=order {
            let mut cur = vec![0u32; dim];
            fill_degree(&mut out, &mut cur, 0, d as u32);
        }
        out
    }
}

fn fill_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rem: u32) {
    let dim = cur.len();
    if dim == 0 {
        if rem == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == dim - 1 {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=rem).rev() {
        cur[pos] = e;
        fill_degree(out, cur, pos + 1, rem - e);
    }
    cur[pos] = 0;
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Index bookkeeping shared by all jets of a given dimension and order.
#[derive(Debug)]
pub struct JetLayout {
    dim: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    products: Vec<(u32, u32, u32)>,
    partials: Vec<Vec<(u32, u32, f64)>>,
}

impl JetLayout {
    fn build(dim: usize, order: usize) -> JetLayout {
        let indices = MultiIndex::all_up_to(dim, order);
        let degrees: Vec<usize> = indices.iter().map(MultiIndex::order).collect();
        let lookup: HashMap<MultiIndex, usize> =
            indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degrees[i] + degrees[j] <= order {
                    let k = lookup[&a.add(b)];
                    products.push((i as u32, j as u32, k as u32));
                }
            }
        }
        // ∂/∂z_v maps coefficient of α+e_v (scaled by α_v+1) to α.
        let mut partials = vec![Vec::new(); dim];
        for (v, list) in partials.iter_mut().enumerate() {
            for (i, a) in indices.iter().enumerate() {
                if degrees[i] + 1 > order {
                    continue;
                }
                let up = a.add(&MultiIndex::unit(dim, v));
                let src = lookup[&up];
                list.push((src as u32, i as u32, (a.0[v] + 1) as f64));
            }
        }
        JetLayout {
            dim,
            order,
            indices,
            lookup,
            products,
            partials,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }
}

/// Shared layout for `(dim, order)`; built once per process.
pub fn layout(dim: usize, order: usize) -> &'static JetLayout {
    static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), &'static JetLayout>>> =
        OnceLock::new();
    let reg = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = reg.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((dim, order))
        .or_insert_with(|| Box::leak(Box::new(JetLayout::build(dim, order))))
}

type Coeffs = SmallVec<[C64; 8]>;
type Center = SmallVec<[C64; 3]>;

/// Truncated Taylor expansion at a center.
#[derive(Clone, Debug)]
pub struct Jet {
    center: Center,
    layout: &'static JetLayout,
    coeffs: Coeffs,
}

impl Jet {
    pub fn constant(center: &[C64], order: usize, value: C64) -> Jet {
        let layout = layout(center.len(), order);
        let mut coeffs: Coeffs = SmallVec::from_elem(C64::new(0.0, 0.0), layout.len());
        coeffs[0] = value;
        Jet {
            center: center.iter().copied().collect(),
            layout,
            coeffs,
        }
    }

    /// The coordinate function `z ↦ z_i`.
    pub fn variable(center: &[C64], order: usize, i: usize) -> Jet {
        let mut j = Jet::constant(center, order, center[i]);
        if order >= 1 {
            let p = j.layout.position(&MultiIndex::unit(center.len(), i)).unwrap();
            j.coeffs[p] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from explicit Taylor coefficients; absent entries are zero.
    pub fn from_coefficients<I>(center: &[C64], order: usize, coeffs: I) -> Result<Jet>
    where
        I: IntoIterator<Item = (MultiIndex, C64)>,
    {
        let mut j = Jet::constant(center, order, C64::new(0.0, 0.0));
        for (alpha, c) in coeffs {
            if alpha.dim() != center.len() {
                return Err(QdError::DimensionMismatch {
                    expected: center.len(),
                    got: alpha.dim(),
                });
            }
            let p = j.layout.position(&alpha).ok_or(QdError::OrderExceeded {
                requested: alpha.order(),
                available: order,
            })?;
            j.coeffs[p] += c;
        }
        Ok(j)
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Constant term `f(c)`.
    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `α`, zero when `|α|` exceeds the order.
    pub fn coefficient(&self, alpha: &MultiIndex) -> C64 {
        self.layout
            .position(alpha)
            .map_or(C64::new(0.0, 0.0), |p| self.coeffs[p])
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, C64)> + '_ {
        self.layout.indices.iter().zip(self.coeffs.iter().copied())
    }

    /// `∂^α f(c) = α! · coefficient(α)`.
    pub fn derivative_at(&self, alpha: &MultiIndex) -> Result<C64> {
        if alpha.dim() != self.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.dim(),
                got: alpha.dim(),
            });
        }
        if alpha.order() > self.order() {
            return Err(QdError::OrderExceeded {
                requested: alpha.order(),
                available: self.order(),
            });
        }
        Ok(self.coefficient(alpha) * alpha.factorial())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.dim(), order);
        Jet {
            center: self.center.clone(),
            layout,
            coeffs: self.coeffs[..layout.len()].iter().copied().collect(),
        }
    }

    fn same_center(&self, other: &Jet) -> bool {
        self.center.len() == other.center.len()
            && self
                .center
                .iter()
                .zip(&other.center)
                .all(|(a, b)| (a - b).norm() <= CHAIN_TOL * (1.0 + a.norm()))
    }

    fn check(&self, other: &Jet) -> Result<()> {
        if self.same_center(other) {
            Ok(())
        } else {
            Err(QdError::CenterMismatch)
        }
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        let order = self.order().min(other.order());
        let layout = layout(self.dim(), order);
        Jet {
            center: self.center.clone(),
            layout,
            coeffs: (0..layout.len())
                .map(|i| f(self.coeffs[i], other.coeffs[i]))
                .collect(),
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Cauchy product truncated to the smaller order.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let order = self.order().min(other.order());
        let layout = layout(self.dim(), order);
        let mut coeffs: Coeffs = SmallVec::from_elem(C64::new(0.0, 0.0), layout.len());
        for &(i, j, k) in &layout.products {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            center: self.center.clone(),
            layout,
            coeffs,
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        debug_assert!(self.same_center(other));
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        debug_assert!(self.same_center(other));
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        debug_assert!(self.same_center(other));
        self.mul_unchecked(other)
    }

    pub fn neg(&self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add_constant(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Evaluates `Σ_k series[k] · x^k` with `x` the non-constant part of `self`.
    fn nilpotent_series(&self, series: &[C64]) -> Jet {
        let mut x = self.clone();
        x.coeffs[0] = C64::new(0.0, 0.0);
        let n = series.len().min(self.order() + 1);
        let mut acc = Jet::constant(&self.center, self.order(), series[n - 1]);
        for k in (0..n - 1).rev() {
            acc = acc.mul_unchecked(&x).add_constant(series[k]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if c0.norm() == 0.0 || !c0.is_finite() {
            return Err(QdError::PoleAtCenter);
        }
        let inv = c0.inv();
        let series: Vec<C64> = (0..=self.order())
            .map(|k| inv * (-inv).powu(k as u32))
            .collect();
        Ok(self.nilpotent_series(&series))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e0 = self.coeffs[0].exp();
        let series: Vec<C64> = (0..=self.order())
            .map(|k| e0 / factorial(k))
            .collect();
        self.nilpotent_series(&series)
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut result = Jet::constant(&self.center, self.order(), C64::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        result
    }

    /// `∂f/∂z_v` as a jet of one lower order (order 0 stays order 0 and is zero).
    pub fn partial(&self, v: usize) -> Jet {
        if self.order() == 0 {
            return Jet::constant(&self.center, 0, C64::new(0.0, 0.0));
        }
        let layout_lo = layout(self.dim(), self.order() - 1);
        let mut coeffs: Coeffs = SmallVec::from_elem(C64::new(0.0, 0.0), layout_lo.len());
        for &(src, dst, scale) in &self.layout.partials[v] {
            coeffs[dst as usize] = self.coeffs[src as usize] * scale;
        }
        Jet {
            center: self.center.clone(),
            layout: layout_lo,
            coeffs,
        }
    }

    /// Composition `outer ∘ (inner₁, …, inner_m)`.
    ///
    /// `outer` is a jet at `w₀` in `m` variables; each inner jet is centered at
    /// the common point `c` with constant term `w₀ᵢ`. The result is the jet of
    /// the composition at `c`, of order `min(orders)`, evaluated by nested
    /// Horner sweeps over the truncated algebra.
    pub fn compose(outer: &Jet, inner: &[Jet]) -> Result<Jet> {
        if inner.len() != outer.dim() {
            return Err(QdError::DimensionMismatch {
                expected: outer.dim(),
                got: inner.len(),
            });
        }
        let first = inner.first().ok_or(QdError::DimensionMismatch {
            expected: outer.dim(),
            got: 0,
        })?;
        for j in inner {
            first.check(j)?;
        }
        let mut gap = 0.0f64;
        for (j, w0) in inner.iter().zip(outer.center.iter()) {
            gap = gap.max((j.value() - w0).norm() / (1.0 + w0.norm()));
        }
        if gap > CHAIN_TOL {
            return Err(QdError::CenterChainMismatch(gap));
        }
        let order = inner
            .iter()
            .map(Jet::order)
            .chain(std::iter::once(outer.order()))
            .min()
            .unwrap_or(0);
        let deltas: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut d = j.truncate(order);
                d.coeffs[0] = C64::new(0.0, 0.0);
                d
            })
            .collect();
        let mut prefix = Vec::with_capacity(outer.dim());
        Ok(horner(outer, &deltas, &mut prefix, order as u32, first.center(), order))
    }
}

fn horner(
    outer: &Jet,
    deltas: &[Jet],
    prefix: &mut Vec<u32>,
    remaining: u32,
    center: &[C64],
    order: usize,
) -> Jet {
    let var = prefix.len();
    if var == deltas.len() {
        let alpha = MultiIndex(prefix.clone());
        return Jet::constant(center, order, outer.coefficient(&alpha));
    }
    let mut acc: Option<Jet> = None;
    for k in (0..=remaining).rev() {
        prefix.push(k);
        let inner = horner(outer, deltas, prefix, remaining - k, center, order);
        prefix.pop();
        acc = Some(match acc {
            None => inner,
            Some(a) => a.mul_unchecked(&deltas[var]).add(&inner),
        });
    }
    acc.expect("at least one term")
}

/// Taylor jet of `expr` at `center` through `order`.
pub fn jet_lift(expr: &Expr, center: &[C64], order: usize) -> Result<Jet> {
    let vars: Vec<Jet> = (0..center.len())
        .map(|i| Jet::variable(center, order, i))
        .collect();
    match expr.eval_generic(&vars) {
        Err(QdError::PoleHit) => Err(QdError::PoleAtCenter),
        other => other,
    }
}

pub fn jet_multiply(a: &Jet, b: &Jet) -> Result<Jet> {
    a.try_mul(b)
}

pub fn jet_compose(outer: &Jet, inner: &[Jet]) -> Result<Jet> {
    Jet::compose(outer, inner)
}

pub fn derivative_at(j: &Jet, alpha: &MultiIndex) -> Result<C64> {
    j.derivative_at(alpha)
}
