//! Bergman kernels of canonical domains and of their biholomorphic images.
//!
//! Kernels are normalized against Lebesgue measure. Writing `v = w̄`, every
//! closed form is holomorphic in `(z, v)`, so antiholomorphic derivatives in
//! `w` are ordinary derivatives in `v` and come from jets centered at the
//! conjugated node.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{QdError, Result};
use crate::expr::{Expr, Scalar};
use crate::geometry::{Disc, Domain, Point};
use crate::jets::{factorial, Jet, MultiIndex};
use crate::maps::HolomorphicMap;

/// Reproducing kernel of a domain.
#[derive(Clone, Debug)]
pub struct KernelHandle {
    domain: Domain,
}

/// Planar factor or ball block of a canonical domain.
enum Block {
    Disc(Disc),
    Ball { center: Point, radius: f64 },
}

fn blocks(domain: &Domain) -> Result<Vec<Block>> {
    Ok(match domain {
        Domain::Disc(d) => vec![Block::Disc(*d)],
        Domain::CircleDomain { outer, holes } if holes.is_empty() => vec![Block::Disc(*outer)],
        Domain::Polydisc(ds) => ds.iter().map(|d| Block::Disc(*d)).collect(),
        Domain::Ball { center, radius, .. } => vec![Block::Ball {
            center: center.clone(),
            radius: *radius,
        }],
        Domain::Product(f) => {
            let mut out = Vec::new();
            for d in f {
                out.extend(blocks(d)?);
            }
            out
        }
        Domain::CircleDomain { .. } => {
            return Err(QdError::Unsupported(
                "no closed-form kernel for circle domains with holes".into(),
            ))
        }
        Domain::Image { .. } => {
            return Err(QdError::Unsupported("mapped domains are not canonical".into()))
        }
    })
}

impl Block {
    fn dim(&self) -> usize {
        match self {
            Block::Disc(_) => 1,
            Block::Ball { center, .. } => center.len(),
        }
    }

    /// `K(z, w)` with `v = w̄` supplied in any scalar algebra.
    fn kernel<S: Scalar>(&self, z: &[C64], v: &[S]) -> Result<S> {
        let like = &v[0];
        let (centers, radius): (Vec<C64>, f64) = match self {
            Block::Disc(d) => (vec![d.center], d.radius),
            Block::Ball { center, radius } => (center.clone(), *radius),
        };
        let n = centers.len();
        let r2 = radius * radius;
        let mut inner = S::constant_like(C64::new(r2, 0.0), like);
        for i in 0..n {
            let shifted = v[i].add(&S::constant_like(-centers[i].conj(), like));
            inner = inner.sub(&shifted.scale(z[i] - centers[i]));
        }
        let constant = factorial(n) * r2 / PI.powi(n as i32);
        let one = S::constant_like(C64::new(1.0, 0.0), like);
        Ok(one.div(&inner.powi(n as u32 + 1))?.scale(C64::new(constant, 0.0)))
    }

    /// `∂^α/∂w̄^α K(z, w)|_{w=node}` as an expression in `z`, with
    /// coordinates starting at `offset`.
    fn derivative_expr(&self, node: &[C64], alpha: &[u32], offset: usize) -> Expr {
        let (centers, radius): (Vec<C64>, f64) = match self {
            Block::Disc(d) => (vec![d.center], d.radius),
            Block::Ball { center, radius } => (center.clone(), *radius),
        };
        let n = centers.len();
        let r2 = radius * radius;
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        let constant = factorial(n + order) * r2 / PI.powi(n as i32);
        let mut num = Expr::real(constant);
        let mut den = Expr::real(r2);
        for i in 0..n {
            let zi = Expr::var(offset + i) - Expr::constant(centers[i]);
            num = num * zi.clone().powi(alpha[i]);
            den = den - zi * Expr::constant((node[i] - centers[i]).conj());
        }
        num / den.powi((n + 1 + order) as u32)
    }
}

fn canonical_kernel<S: Scalar>(blocks: &[Block], z: &[C64], v: &[S]) -> Result<S> {
    let mut off = 0;
    let mut acc: Option<S> = None;
    for b in blocks {
        let d = b.dim();
        let k = b.kernel(&z[off..off + d], &v[off..off + d])?;
        acc = Some(match acc {
            None => k,
            Some(a) => a.mul(&k),
        });
        off += d;
    }
    acc.ok_or(QdError::DimensionMismatch {
        expected: 1,
        got: 0,
    })
}

impl KernelHandle {
    pub fn new(domain: &Domain) -> Result<KernelHandle> {
        match domain {
            Domain::Image { base, map } => {
                blocks(base)?;
                if map.dim() != base.dim() {
                    return Err(QdError::DimensionMismatch {
                        expected: base.dim(),
                        got: map.dim(),
                    });
                }
            }
            d => {
                blocks(d)?;
            }
        }
        Ok(KernelHandle {
            domain: domain.clone(),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn check_inside(&self, p: &[C64]) -> Result<()> {
        if p.len() != self.domain.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.domain.dim(),
                got: p.len(),
            });
        }
        if !self.domain.contains(p)? {
            return Err(QdError::OutsideDomain);
        }
        Ok(())
    }

    /// `K(z, w)`.
    pub fn eval(&self, z: &[C64], w: &[C64]) -> Result<C64> {
        match &self.domain {
            Domain::Image { base, map } => {
                let bz = preimage(base, map, z)?;
                let bw = preimage(base, map, w)?;
                let k = canonical_kernel(&blocks(base)?, &bz, &conj(&bw))?;
                let uz = map.jacobian_determinant(&bz)?;
                let uw = map.jacobian_determinant(&bw)?;
                Ok(k / (uz * uw.conj()))
            }
            d => {
                self.check_inside(z)?;
                self.check_inside(w)?;
                canonical_kernel(&blocks(d)?, z, &conj(w))
            }
        }
    }

    /// Jet in `v = w̄` at `conj(node)` through `order`; its derivative of
    /// index `α` is `∂^α/∂w̄^α K(z, w)|_{w=node}`.
    pub fn derivative_jet(&self, z: &[C64], node: &[C64], order: usize) -> Result<Jet> {
        let v0 = conj(node);
        let vars: Vec<Jet> = (0..v0.len()).map(|i| Jet::variable(&v0, order, i)).collect();
        match &self.domain {
            Domain::Image { base, map } => {
                let bz = preimage(base, map, z)?;
                let bnode = preimage(base, map, node)?;
                let star = HolomorphicMap::new(
                    "conj",
                    map.components().iter().map(Expr::conj_coeffs).collect(),
                );
                // jet of the inverse of f* at v0, i.e. of conj(F(w))
                let g = inverse_jet(&star, &vars, &conj(&bnode), order)?;
                let k = canonical_kernel(&blocks(base)?, &bz, &g)?;
                let ustar = star.jacobian_expr().eval_generic(&g)?;
                let uz = map.jacobian_determinant(&bz)?;
                Ok(Scalar::div(&k, &ustar)?.scale(uz.inv()))
            }
            d => {
                self.check_inside(z)?;
                self.check_inside(node)?;
                canonical_kernel(&blocks(d)?, z, &vars)
            }
        }
    }

    /// `∂^α/∂w̄^α K(z, w)|_{w=node}`.
    pub fn derivative(&self, z: &[C64], node: &[C64], alpha: &MultiIndex) -> Result<C64> {
        if alpha.dim() != self.domain.dim() {
            return Err(QdError::DimensionMismatch {
                expected: self.domain.dim(),
                got: alpha.dim(),
            });
        }
        self.derivative_jet(z, node, alpha.order())?.derivative_at(alpha)
    }

    /// Closed-form expression in `z` of `∂^α/∂w̄^α K(·, w)|_{w=node}`.
    pub fn derivative_expr(&self, node: &[C64], alpha: &MultiIndex) -> Result<Expr> {
        let bl = blocks(&self.domain)?;
        let mut off = 0;
        let mut acc = Expr::one();
        for b in &bl {
            let d = b.dim();
            acc = acc * b.derivative_expr(&node[off..off + d], &alpha.exponents()[off..off + d], off);
            off += d;
        }
        Ok(acc)
    }
}

fn conj(p: &[C64]) -> Point {
    p.iter().map(|z| z.conj()).collect()
}

/// Preimage of `z` inside `base`.
fn preimage(base: &Domain, map: &HolomorphicMap, z: &[C64]) -> Result<Point> {
    if let Some(r) = map.apply_inverse(z) {
        let p = r?;
        if crate::maps::dist(&map.evaluate(&p)?, z) < 1e-10 * (1.0 + crate::maps::dist(z, &vec![C64::new(0.0, 0.0); z.len()])) {
            return if base.contains(&p)? {
                Ok(p)
            } else {
                Err(QdError::OutsideDomain)
            };
        }
    }
    let mut any = false;
    for seed in base.seed_lattice()? {
        if let Ok(p) = map.invert_at(z, &seed, 1e-13) {
            any = true;
            if base.contains(&p)? {
                return Ok(p);
            }
        }
    }
    if any {
        Err(QdError::OutsideDomain)
    } else {
        Err(QdError::NonConvergedInverse(format!("{z:?}")))
    }
}

/// Jet of `g⁻¹` at `vars`' center, where `g(p0) = center`. Each sweep of the
/// simplified Newton iteration fixes at least one more order.
fn inverse_jet(g: &HolomorphicMap, vars: &[Jet], p0: &[C64], order: usize) -> Result<Vec<Jet>> {
    let n = g.dim();
    let jac = g.jacobian_matrix(p0)?;
    let a = jac.try_inverse().ok_or(QdError::SingularJacobian)?;
    let center = vars[0].center().to_vec();
    let mut cur: Vec<Jet> = (0..n).map(|i| Jet::constant(&center, order, p0[i])).collect();
    // linear term
    for i in 0..n {
        for j in 0..n {
            let d = vars[j].add_constant(-center[j]);
            cur[i] = cur[i].add(&d.scale(a[(i, j)]));
        }
    }
    for _ in 0..order + 1 {
        let gv: Vec<Jet> = g
            .components()
            .iter()
            .map(|c| c.eval_generic(&cur))
            .collect::<Result<_>>()?;
        let res: Vec<Jet> = gv.iter().zip(vars).map(|(x, v)| x.sub(v)).collect();
        cur = apply_matrix(&a, &res)
            .into_iter()
            .zip(cur)
            .map(|(d, c)| c.sub(&d))
            .collect();
    }
    Ok(cur)
}

fn apply_matrix(a: &DMatrix<C64>, v: &[Jet]) -> Vec<Jet> {
    (0..a.nrows())
        .map(|i| {
            let mut acc = v[0].scale(a[(i, 0)]);
            for (j, vj) in v.iter().enumerate().skip(1) {
                acc = acc.add(&vj.scale(a[(i, j)]));
            }
            acc
        })
        .collect()
}

pub fn kernel_eval(h: &KernelHandle, z: &[C64], w: &[C64]) -> Result<C64> {
    h.eval(z, w)
}

pub fn kernel_derivative(h: &KernelHandle, z: &[C64], node: &[C64], alpha: &MultiIndex) -> Result<C64> {
    h.derivative(z, node, alpha)
}

/// `K_{f(B)}(ζ, ω) = K_B(F ζ, F ω) / (u(F ζ)·conj(u(F ω)))`.
pub fn transform_kernel(f: &HolomorphicMap, base: &Domain, zeta: &[C64], omega: &[C64]) -> Result<C64> {
    KernelHandle::new(&Domain::image(base.clone(), f.clone())?)?.eval(zeta, omega)
}
