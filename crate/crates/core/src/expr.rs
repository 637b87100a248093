//! Closed-form holomorphic expressions in `z₁, …, zₙ`.
//!
//! The grammar is closed under `+ − × ÷`, integer powers, `exp`, substitution
//! (composition) and definite integration in one coordinate along a straight
//! segment. Every expression can be evaluated at a point or lifted to a jet.

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::{QdError, Result};
use crate::gauss;
use crate::jets::Jet;

/// Gauss nodes used by [`Expr::LineIntegral`].
pub const LINE_INTEGRAL_NODES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(C64),
    /// Zero-based coordinate index.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    /// `∫_{lower}^{upper} integrand dτ` along the straight segment. Inside
    /// `integrand`, slot `tau` is bound to `τ` and shadows the coordinate of
    /// the same index; every other slot is a free coordinate.
    LineIntegral {
        integrand: Box<Expr>,
        tau: usize,
        lower: Box<Expr>,
        upper: Box<Expr>,
    },
}

/// Arithmetic needed to evaluate an [`Expr`]; implemented for numbers and jets.
pub trait Scalar: Clone {
    fn constant_like(c: C64, like: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, k: u32) -> Self;
    fn exp(&self) -> Self;
    fn scale(&self, s: C64) -> Self;
}

impl Scalar for C64 {
    fn constant_like(c: C64, _: &Self) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if o.norm() == 0.0 {
            return Err(QdError::PoleHit);
        }
        let q = self / o;
        if q.is_finite() {
            Ok(q)
        } else {
            Err(QdError::PoleHit)
        }
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, k: u32) -> Self {
        self.powu(k)
    }
    fn exp(&self) -> Self {
        C64::exp(*self)
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
}

impl Scalar for Jet {
    fn constant_like(c: C64, like: &Self) -> Self {
        Jet::constant(like.center(), like.order(), c)
    }
    fn add(&self, o: &Self) -> Self {
        Jet::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet::mul(self, o)
    }
    fn div(&self, o: &Self) -> Result<Self> {
        Ok(Jet::mul(self, &o.recip()?))
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn powi(&self, k: u32) -> Self {
        Jet::powi(self, k)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn scale(&self, s: C64) -> Self {
        Jet::scale(self, s)
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == C64::new(0.0, 0.0))
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == C64::new(1.0, 0.0))
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(c: C64) -> Expr {
        Expr::Const(c)
    }

    pub fn real(x: f64) -> Expr {
        Expr::Const(C64::new(x, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn powi(self, k: u32) -> Expr {
        match (self, k) {
            (_, 0) => Expr::one(),
            (e, 1) => e,
            (Expr::Const(c), k) => Expr::Const(c.powu(k)),
            (e, k) => Expr::Pow(Box::new(e), k),
        }
    }

    pub fn exp(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.exp()),
            e => Expr::Exp(Box::new(e)),
        }
    }

    /// `∫_{lower}^{z_var} self dτ`, with `τ` in slot `var`.
    pub fn integrate_from(self, var: usize, lower: Expr) -> Expr {
        Expr::LineIntegral {
            integrand: Box::new(self),
            tau: var,
            lower: Box::new(lower),
            upper: Box::new(Expr::Var(var)),
        }
    }

    /// Sorted free coordinate indices.
    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.collect_free(out),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => {
                let mut inner = integrand.free_vars();
                inner.remove(tau);
                out.extend(inner);
                lower.collect_free(out);
                upper.collect_free(out);
            }
        }
    }

    /// Largest free coordinate index plus one.
    pub fn arity(&self) -> usize {
        self.free_vars().last().map_or(0, |i| i + 1)
    }

    /// Largest slot index used anywhere, bound or free, plus one.
    fn slot_bound(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.slot_bound().max(b.slot_bound())
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.slot_bound(),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => integrand
                .slot_bound()
                .max(tau + 1)
                .max(lower.slot_bound())
                .max(upper.slot_bound()),
        }
    }

    /// Whether the expression is built from constants, variables, `+ − ×` and
    /// powers only.
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.is_polynomial() && b.is_polynomial()
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.is_polynomial(),
            Expr::Div(_, b) if matches!(**b, Expr::Const(_)) => {
                if let Expr::Div(a, _) = self {
                    a.is_polynomial()
                } else {
                    unreachable!()
                }
            }
            _ => false,
        }
    }

    /// Whether any denominator appears.
    pub fn has_division(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Div(..) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.has_division() || b.has_division()
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.has_division(),
            Expr::LineIntegral {
                integrand,
                lower,
                upper,
                ..
            } => integrand.has_division() || lower.has_division() || upper.has_division(),
        }
    }

    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        self.eval_generic(z)
    }

    /// Evaluates with the coordinates bound to `vars`.
    pub fn eval_generic<S: Scalar>(&self, vars: &[S]) -> Result<S> {
        let like = vars.first().ok_or(QdError::DimensionMismatch {
            expected: self.arity().max(1),
            got: 0,
        })?;
        self.eval_inner(vars, like)
    }

    fn eval_inner<S: Scalar>(&self, vars: &[S], like: &S) -> Result<S> {
        Ok(match self {
            Expr::Const(c) => S::constant_like(*c, like),
            Expr::Var(i) => vars
                .get(*i)
                .ok_or(QdError::DimensionMismatch {
                    expected: i + 1,
                    got: vars.len(),
                })?
                .clone(),
            Expr::Add(a, b) => a.eval_inner(vars, like)?.add(&b.eval_inner(vars, like)?),
            Expr::Sub(a, b) => a.eval_inner(vars, like)?.sub(&b.eval_inner(vars, like)?),
            Expr::Mul(a, b) => a.eval_inner(vars, like)?.mul(&b.eval_inner(vars, like)?),
            Expr::Div(a, b) => a.eval_inner(vars, like)?.div(&b.eval_inner(vars, like)?)?,
            Expr::Neg(a) => a.eval_inner(vars, like)?.neg(),
            Expr::Pow(a, k) => a.eval_inner(vars, like)?.powi(*k),
            Expr::Exp(a) => a.eval_inner(vars, like)?.exp(),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => {
                let a = lower.eval_inner(vars, like)?;
                let span = upper.eval_inner(vars, like)?.sub(&a);
                let (nodes, weights) = gauss::legendre_unit(LINE_INTEGRAL_NODES);
                let mut local: Vec<S> = vars.to_vec();
                if local.len() <= *tau {
                    local.resize(*tau + 1, S::constant_like(C64::new(0.0, 0.0), like));
                }
                let mut acc = S::constant_like(C64::new(0.0, 0.0), like);
                for (s, w) in nodes.iter().zip(&weights) {
                    local[*tau] = a.add(&span.scale(C64::new(*s, 0.0)));
                    let g = integrand.eval_inner(&local, like)?;
                    acc = acc.add(&g.scale(C64::new(*w, 0.0)));
                }
                acc.mul(&span)
            }
        })
    }

    /// Holomorphic partial derivative `∂/∂z_j`.
    pub fn derivative(&self, j: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => Expr::real(if *i == j { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => a.derivative(j) + b.derivative(j),
            Expr::Sub(a, b) => a.derivative(j) - b.derivative(j),
            Expr::Mul(a, b) => {
                a.derivative(j) * (**b).clone() + (**a).clone() * b.derivative(j)
            }
            Expr::Div(a, b) => {
                let num = a.derivative(j) * (**b).clone() - (**a).clone() * b.derivative(j);
                num / (**b).clone().powi(2)
            }
            Expr::Neg(a) => -a.derivative(j),
            Expr::Pow(a, k) => {
                Expr::real(*k as f64) * (**a).clone().powi(k - 1) * a.derivative(j)
            }
            Expr::Exp(a) => self.clone() * a.derivative(j),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => {
                // Leibniz rule; the integrand does not see coordinate `tau`.
                let inside = if j == *tau {
                    Expr::zero()
                } else {
                    let d = integrand.derivative(j);
                    if is_zero(&d) {
                        Expr::zero()
                    } else {
                        Expr::LineIntegral {
                            integrand: Box::new(d),
                            tau: *tau,
                            lower: lower.clone(),
                            upper: upper.clone(),
                        }
                    }
                };
                let db = upper.derivative(j);
                let da = lower.derivative(j);
                let top = if is_zero(&db) {
                    Expr::zero()
                } else {
                    integrand.substitute(*tau, upper) * db
                };
                let bottom = if is_zero(&da) {
                    Expr::zero()
                } else {
                    integrand.substitute(*tau, lower) * da
                };
                inside + top - bottom
            }
        }
    }

    /// Replaces `z_var` by `e`.
    pub fn substitute(&self, var: usize, e: &Expr) -> Expr {
        let mut subs: Vec<Expr> = (0..self.slot_bound().max(var + 1)).map(Expr::Var).collect();
        subs[var] = e.clone();
        self.compose(&subs)
    }

    /// Composition `self(g₁, …, gₙ)`.
    pub fn compose(&self, g: &[Expr]) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(i) => g.get(*i).cloned().unwrap_or(Expr::Var(*i)),
            Expr::Add(a, b) => a.compose(g) + b.compose(g),
            Expr::Sub(a, b) => a.compose(g) - b.compose(g),
            Expr::Mul(a, b) => a.compose(g) * b.compose(g),
            Expr::Div(a, b) => a.compose(g) / b.compose(g),
            Expr::Neg(a) => -a.compose(g),
            Expr::Pow(a, k) => a.compose(g).powi(*k),
            Expr::Exp(a) => a.compose(g).exp(),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => {
                // Rebind τ to a slot no substituted expression can reach.
                let fresh = self
                    .slot_bound()
                    .max(g.iter().map(Expr::slot_bound).max().unwrap_or(0));
                let mut inner: Vec<Expr> = (0..=fresh.max(*tau))
                    .map(|i| g.get(i).cloned().unwrap_or(Expr::Var(i)))
                    .collect();
                inner[*tau] = Expr::Var(fresh);
                Expr::LineIntegral {
                    integrand: Box::new(integrand.compose(&inner)),
                    tau: fresh,
                    lower: Box::new(lower.compose(g)),
                    upper: Box::new(upper.compose(g)),
                }
            }
        }
    }

    /// Coefficient-wise conjugate: the expression of `z ↦ conj(f(conj z))`.
    pub fn conj_coeffs(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => a.conj_coeffs() + b.conj_coeffs(),
            Expr::Sub(a, b) => a.conj_coeffs() - b.conj_coeffs(),
            Expr::Mul(a, b) => a.conj_coeffs() * b.conj_coeffs(),
            Expr::Div(a, b) => a.conj_coeffs() / b.conj_coeffs(),
            Expr::Neg(a) => -a.conj_coeffs(),
            Expr::Pow(a, k) => a.conj_coeffs().powi(*k),
            Expr::Exp(a) => a.conj_coeffs().exp(),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => Expr::LineIntegral {
                integrand: Box::new(integrand.conj_coeffs()),
                tau: *tau,
                lower: Box::new(lower.conj_coeffs()),
                upper: Box::new(upper.conj_coeffs()),
            },
        }
    }

    /// Parses the JSON expression format used in scenario files.
    pub fn from_json(v: &Value) -> Result<Expr> {
        let bad = |m: &str| QdError::Parse(format!("{m}: {v}"));
        match v {
            Value::Number(n) => Ok(Expr::real(n.as_f64().ok_or_else(|| bad("number"))?)),
            Value::String(s) => parse_var(s).map(Expr::Var).ok_or_else(|| bad("variable")),
            Value::Object(map) if map.len() == 1 => {
                let (k, arg) = map.iter().next().unwrap();
                let list = |min: usize| -> Result<Vec<Expr>> {
                    let arr = arg.as_array().ok_or_else(|| bad("expected array"))?;
                    if arr.len() < min {
                        return Err(bad("too few operands"));
                    }
                    arr.iter().map(Expr::from_json).collect()
                };
                match k.as_str() {
                    "c" => {
                        let arr = arg.as_array().ok_or_else(|| bad("constant"))?;
                        let re = arr.first().and_then(Value::as_f64).ok_or_else(|| bad("re"))?;
                        let im = arr.get(1).and_then(Value::as_f64).unwrap_or(0.0);
                        Ok(Expr::Const(C64::new(re, im)))
                    }
                    "add" => Ok(list(1)?.into_iter().reduce(|a, b| a + b).unwrap()),
                    "mul" => Ok(list(1)?.into_iter().reduce(|a, b| a * b).unwrap()),
                    "sub" | "div" => {
                        let mut l = list(2)?;
                        if l.len() != 2 {
                            return Err(bad("binary operator"));
                        }
                        let b = l.pop().unwrap();
                        let a = l.pop().unwrap();
                        Ok(if k == "sub" { a - b } else { a / b })
                    }
                    "neg" => Ok(-Expr::from_json(arg)?),
                    "exp" => Ok(Expr::from_json(arg)?.exp()),
                    "pow" => {
                        let arr = arg.as_array().ok_or_else(|| bad("pow"))?;
                        let base = Expr::from_json(arr.first().ok_or_else(|| bad("pow"))?)?;
                        let k = arr
                            .get(1)
                            .and_then(Value::as_u64)
                            .ok_or_else(|| bad("pow exponent"))?;
                        Ok(base.powi(k as u32))
                    }
                    "integral" => {
                        let integrand = Expr::from_json(
                            arg.get("integrand").ok_or_else(|| bad("integrand"))?,
                        )?;
                        let var = arg
                            .get("var")
                            .and_then(Value::as_str)
                            .and_then(parse_var)
                            .ok_or_else(|| bad("integral var"))?;
                        let lower = match arg.get("from") {
                            Some(l) => Expr::from_json(l)?,
                            None => Expr::zero(),
                        };
                        let upper = match arg.get("to") {
                            Some(u) => Expr::from_json(u)?,
                            None => Expr::Var(var),
                        };
                        Ok(Expr::LineIntegral {
                            integrand: Box::new(integrand),
                            tau: var,
                            lower: Box::new(lower),
                            upper: Box::new(upper),
                        })
                    }
                    _ => Err(bad("unknown operator")),
                }
            }
            _ => Err(bad("unrecognized expression")),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Expr::Const(c) if c.im == 0.0 => json!(c.re),
            Expr::Const(c) => json!({"c": [c.re, c.im]}),
            Expr::Var(i) => json!(format!("z{}", i + 1)),
            Expr::Add(a, b) => json!({"add": [a.to_json(), b.to_json()]}),
            Expr::Sub(a, b) => json!({"sub": [a.to_json(), b.to_json()]}),
            Expr::Mul(a, b) => json!({"mul": [a.to_json(), b.to_json()]}),
            Expr::Div(a, b) => json!({"div": [a.to_json(), b.to_json()]}),
            Expr::Neg(a) => json!({"neg": a.to_json()}),
            Expr::Pow(a, k) => json!({"pow": [a.to_json(), k]}),
            Expr::Exp(a) => json!({"exp": a.to_json()}),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => json!({"integral": {
                "integrand": integrand.to_json(),
                "var": format!("z{}", tau + 1),
                "from": lower.to_json(),
                "to": upper.to_json(),
            }}),
        }
    }
}

fn parse_var(s: &str) -> Option<usize> {
    let idx: usize = s.strip_prefix('z')?.parse().ok()?;
    idx.checked_sub(1)
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (a, b) if is_zero(&a) => b,
            (a, b) if is_zero(&b) => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (a, b) if is_zero(&b) => a,
            (a, b) if is_zero(&a) => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        match (self, o) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (a, b) if is_zero(&a) || is_zero(&b) => Expr::zero(),
            (a, b) if is_one(&a) => b,
            (a, b) if is_one(&b) => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        match (self, o) {
            (a, b) if is_one(&b) => a,
            (a, b) if is_zero(&a) && !is_zero(&b) => Expr::zero(),
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Const(c) => write!(f, "({}{:+}i)", c.re, c.im),
            Expr::Var(i) => write!(f, "z{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Pow(a, k) => write!(f, "{a}^{k}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::LineIntegral {
                integrand,
                tau,
                lower,
                upper,
            } => write!(f, "int[{lower} -> {upper}] {integrand} dz{}", tau + 1),
        }
    }
}
