//! Energy density families and their z-gradients.

use crate::expr::Expr;
use crate::geometry::{BoxN, Point};
use crate::mat::ZMat;

/// The density `F(x,z)` of an integrand, by family.
///
/// Weight and exponent fields are expressions over the domain box. Kinked
/// families select the subgradient that is the limit of gradients along rays
/// from `|z| -> 0+`, which is `0` at the kink for every family below.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// `|z|^p`
    PPower { p: f64 },
    /// `a(x) |z|^p` with `a >= 1`
    WeightedPPower { p: f64, weight: Expr },
    /// `sum_i a_i(x) |z_i|^{p_i}` over rows `z_i`
    AnisotropicWeighted { exps: Vec<f64>, weights: Vec<Expr> },
    /// `|z|^p + a(x) |z|^q`
    DoublePhase { p: f64, q: f64, weight: Expr },
    /// `|z|^p + (lambda(x) |z|^2)^{q/2}`, identity coupling
    QuadraticPhase { p: f64, q: f64, lambda: Expr },
    /// `sum_i |z_i|^{p_i(x)}`
    AnisotropicPx { pexps: Vec<Expr> },
    /// `|z|^{p(x)} log(1+|z|)`
    LogGrowth { pexp: Expr },
    /// `|z|^q + a(x) |z_n|` (kink on the last row)
    MaxKink { q: f64, weight: Expr },
    /// `(1+|z|^2)^{p/2} + a(x) (1+|z|^2)^{q/2}`
    SmoothPhase { p: f64, q: f64, weight: Expr },
    /// `|z|^{p(x)}`
    PxLaplacian { pexp: Expr },
    /// `F(x,z) + eps |z|^q`
    Regularized { base: Box<Density>, eps: f64, q: f64 },
}

#[inline]
fn powr(t: f64, e: f64) -> f64 {
    if t == 0.0 && e > 0.0 {
        0.0
    } else {
        t.powf(e)
    }
}

impl Density {
    pub fn eval(&self, x: &Point, z: &ZMat, domain: &BoxN) -> f64 {
        match self {
            Density::PPower { p } => powr(z.norm(), *p),
            Density::WeightedPPower { p, weight } => weight.eval(x, domain) * powr(z.norm(), *p),
            Density::AnisotropicWeighted { exps, weights } => exps
                .iter()
                .zip(weights)
                .enumerate()
                .map(|(i, (p, w))| w.eval(x, domain) * powr(z.row_norm(i), *p))
                .sum(),
            Density::DoublePhase { p, q, weight } => {
                let t = z.norm();
                powr(t, *p) + weight.eval(x, domain) * powr(t, *q)
            }
            Density::QuadraticPhase { p, q, lambda } => {
                let t = z.norm();
                powr(t, *p) + powr(lambda.eval(x, domain) * t * t, q / 2.0)
            }
            Density::AnisotropicPx { pexps } => pexps
                .iter()
                .enumerate()
                .map(|(i, pe)| powr(z.row_norm(i), pe.eval(x, domain)))
                .sum(),
            Density::LogGrowth { pexp } => {
                let t = z.norm();
                powr(t, pexp.eval(x, domain)) * (1.0 + t).ln()
            }
            Density::MaxKink { q, weight } => {
                let t = z.norm();
                powr(t, *q) + weight.eval(x, domain) * z.row_norm(z.n - 1)
            }
            Density::SmoothPhase { p, q, weight } => {
                let s = 1.0 + z.norm_sq();
                s.powf(p / 2.0) + weight.eval(x, domain) * s.powf(q / 2.0)
            }
            Density::PxLaplacian { pexp } => powr(z.norm(), pexp.eval(x, domain)),
            Density::Regularized { base, eps, q } => {
                base.eval(x, z, domain) + eps * powr(z.norm(), *q)
            }
        }
    }

    pub fn grad(&self, x: &Point, z: &ZMat, domain: &BoxN) -> ZMat {
        match self {
            Density::PPower { p } => radial_grad(z, *p, 1.0),
            Density::WeightedPPower { p, weight } => radial_grad(z, *p, weight.eval(x, domain)),
            Density::AnisotropicWeighted { exps, weights } => {
                let mut g = ZMat::zero(z.n, z.m);
                for (i, (p, w)) in exps.iter().zip(weights).enumerate() {
                    row_radial_grad(&mut g, z, i, *p, w.eval(x, domain));
                }
                g
            }
            Density::DoublePhase { p, q, weight } => {
                radial_grad(z, *p, 1.0).add(&radial_grad(z, *q, weight.eval(x, domain)))
            }
            Density::QuadraticPhase { p, q, lambda } => {
                let w = powr(lambda.eval(x, domain), q / 2.0);
                radial_grad(z, *p, 1.0).add(&radial_grad(z, *q, w))
            }
            Density::AnisotropicPx { pexps } => {
                let mut g = ZMat::zero(z.n, z.m);
                for (i, pe) in pexps.iter().enumerate() {
                    row_radial_grad(&mut g, z, i, pe.eval(x, domain), 1.0);
                }
                g
            }
            Density::LogGrowth { pexp } => {
                let t = z.norm();
                if t == 0.0 {
                    return ZMat::zero(z.n, z.m);
                }
                let p = pexp.eval(x, domain);
                // d/dt [ t^p log(1+t) ] = p t^{p-1} log(1+t) + t^p/(1+t)
                let dt = p * powr(t, p - 1.0) * (1.0 + t).ln() + powr(t, p) / (1.0 + t);
                z.scale(dt / t)
            }
            Density::MaxKink { q, weight } => {
                let mut g = radial_grad(z, *q, 1.0);
                let i = z.n - 1;
                let rn = z.row_norm(i);
                if rn > 0.0 {
                    let w = weight.eval(x, domain);
                    for j in 0..z.m {
                        g.add_assign(i, j, w * z.get(i, j) / rn);
                    }
                }
                g
            }
            Density::SmoothPhase { p, q, weight } => {
                let s = 1.0 + z.norm_sq();
                let w = weight.eval(x, domain);
                let c = p * s.powf(p / 2.0 - 1.0) + w * q * s.powf(q / 2.0 - 1.0);
                z.scale(c)
            }
            Density::PxLaplacian { pexp } => radial_grad(z, pexp.eval(x, domain), 1.0),
            Density::Regularized { base, eps, q } => {
                base.grad(x, z, domain).add(&radial_grad(z, *q, *eps))
            }
        }
    }

    /// Whether `F(x, .)` is a function of `|z|` alone for each fixed `x`.
    pub fn is_radial(&self) -> bool {
        match self {
            Density::PPower { .. }
            | Density::WeightedPPower { .. }
            | Density::DoublePhase { .. }
            | Density::QuadraticPhase { .. }
            | Density::LogGrowth { .. }
            | Density::SmoothPhase { .. }
            | Density::PxLaplacian { .. } => true,
            Density::AnisotropicWeighted { .. }
            | Density::AnisotropicPx { .. }
            | Density::MaxKink { .. } => false,
            Density::Regularized { base, .. } => base.is_radial(),
        }
    }

    /// The variable exponent `p(x)` entering the (H1.1) quadratic form.
    pub fn exponent_at(&self, x: &Point, domain: &BoxN, fallback: f64) -> f64 {
        match self {
            Density::PxLaplacian { pexp } | Density::LogGrowth { pexp } => pexp.eval(x, domain),
            Density::Regularized { base, .. } => base.exponent_at(x, domain, fallback),
            _ => fallback,
        }
    }

    /// Per-row exponents `p_i(x)` entering the (H1.2)/(H1.3) quadratic forms.
    pub fn row_exponents_at(&self, x: &Point, domain: &BoxN, n: usize, fallback: f64) -> Vec<f64> {
        match self {
            Density::AnisotropicWeighted { exps, .. } => exps.clone(),
            Density::AnisotropicPx { pexps } => {
                pexps.iter().map(|e| e.eval(x, domain)).collect()
            }
            Density::Regularized { base, .. } => base.row_exponents_at(x, domain, n, fallback),
            _ => vec![fallback; n],
        }
    }

    /// Whether the density has a gradient kink away from smooth radial powers.
    pub fn has_kink(&self) -> bool {
        match self {
            Density::MaxKink { .. } => true,
            Density::Regularized { base, .. } => base.has_kink(),
            _ => false,
        }
    }
}

/// Gradient of `w * |z|^p`: `w p |z|^{p-2} z`, zero at the origin for p > 1.
fn radial_grad(z: &ZMat, p: f64, w: f64) -> ZMat {
    let t = z.norm();
    if t == 0.0 || w == 0.0 {
        return ZMat::zero(z.n, z.m);
    }
    z.scale(w * p * powr(t, p - 2.0))
}

fn row_radial_grad(g: &mut ZMat, z: &ZMat, i: usize, p: f64, w: f64) {
    let t = z.row_norm(i);
    if t == 0.0 || w == 0.0 {
        return;
    }
    let c = w * p * powr(t, p - 2.0);
    for j in 0..z.m {
        g.add_assign(i, j, c * z.get(i, j));
    }
}
