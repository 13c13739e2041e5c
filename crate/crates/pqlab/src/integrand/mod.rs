//! Energy densities `F(x,z)`, their growth hypotheses and the example library.
//!
//! An [`Integrand`] bundles a density family with its growth parameters and
//! the set of hypotheses it declares. Declared ellipticity and growth
//! constants are calibrated at construction on a deterministic sample grid so
//! that the hypothesis audits check a concrete, falsifiable claim.

mod density;
mod hypotheses;
mod library;
mod spec;

pub use density::Density;
pub use hypotheses::{check_hypothesis, HypothesisId, HypothesisReport, SampleSpec, ViolationRecord};
pub use library::example_library;
pub use spec::IntegrandSpec;

use crate::error::{Error, Result};
use crate::geometry::{BoxN, Point};
use crate::mat::ZMat;
use serde::{Deserialize, Serialize};

/// Growth and regularity parameters of an integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    /// Lower growth exponent, `p > 1`.
    pub p: f64,
    /// Upper growth exponent, `q >= p`.
    pub q: f64,
    /// Hoelder exponent of the x-dependence, in `(0, 1]`.
    pub alpha: f64,
    /// Degeneracy parameter of the ellipticity weight, `mu >= 0`.
    pub mu: f64,
    /// Declared ellipticity constant, `nu > 0`.
    pub nu: f64,
    /// Declared growth constant, `Lambda > 0`.
    pub lambda: f64,
    /// Spatial dimension.
    pub n: usize,
    /// Target dimension.
    pub m: usize,
}

impl GrowthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::invalid("p must exceed 1"));
        }
        if !(self.q >= self.p) {
            return Err(Error::invalid("q must be at least p"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha must lie in (0,1]"));
        }
        if !(self.nu > 0.0 && self.lambda > 0.0 && self.mu >= 0.0) {
            return Err(Error::invalid("nu, Lambda must be positive and mu nonnegative"));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        let nf = self.n as f64;
        if self.p < nf && self.q > nf * self.p / (nf - self.p) + 1e-12 {
            return Err(Error::invalid("Sobolev restriction q <= np/(n-p) violated"));
        }
        Ok(())
    }

    /// The exponent threshold `(n+alpha)p/n` below which the theory applies.
    pub fn q_threshold(&self) -> f64 {
        (self.n as f64 + self.alpha) * self.p / self.n as f64
    }

    pub fn below_threshold(&self) -> bool {
        self.q < self.q_threshold()
    }

    /// Hoelder conjugate of `q`.
    pub fn q_conj(&self) -> f64 {
        self.q / (self.q - 1.0)
    }
}

/// Structural flavor of the x/z dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Autonomous,
    XDependent,
    VariableExponent,
    Anisotropic,
    Combined,
}

/// An energy density with growth parameters and declared hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrand {
    pub name: String,
    pub params: GrowthParams,
    pub flavor: Flavor,
    pub density: Density,
    /// Hypotheses this integrand declares; audited by acceptance tests.
    pub declared: Vec<HypothesisId>,
    /// Ball-radius cap for the (H4) surrogate search.
    pub eps0: f64,
    /// The box that weight-field expressions refer to.
    pub domain: BoxN,
}

impl Integrand {
    /// Evaluate `F(x,z)`.
    pub fn eval(&self, x: &Point, z: &ZMat) -> Result<f64> {
        if !z.is_finite() || x[..self.params.n].iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite input to eval"));
        }
        Ok(self.density.eval(x, z, &self.domain))
    }

    /// Evaluate `d/dz F(x,z)`; at kinks the ray-limit subgradient selection.
    pub fn grad_z(&self, x: &Point, z: &ZMat) -> Result<ZMat> {
        if !z.is_finite() || x[..self.params.n].iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite input to grad_z"));
        }
        Ok(self.density.grad(x, z, &self.domain))
    }

    /// Infallible evaluation for inner loops; inputs assumed finite.
    #[inline]
    pub fn eval_raw(&self, x: &Point, z: &ZMat) -> f64 {
        self.density.eval(x, z, &self.domain)
    }

    #[inline]
    pub fn grad_raw(&self, x: &Point, z: &ZMat) -> ZMat {
        self.density.grad(x, z, &self.domain)
    }

    /// The regularized integrand `F_eps(x,z) = F(x,z) + eps |z|^q`.
    ///
    /// Keeps the ellipticity constant and enlarges the growth constant by
    /// `eps`; the declared hypothesis set carries over.
    pub fn regularize(&self, eps: f64) -> Result<Integrand> {
        if !(eps > 0.0) {
            return Err(Error::invalid("regularization weight must be positive"));
        }
        let mut out = self.clone();
        out.name = format!("{}+reg", self.name);
        out.params.lambda += eps;
        out.density = Density::Regularized {
            base: Box::new(self.density.clone()),
            eps,
            q: self.params.q,
        };
        Ok(out)
    }

    pub fn is_radial(&self) -> bool {
        self.density.is_radial()
    }

    /// Fenchel extremal-identity defect along the ray through `z`.
    ///
    /// Computes the conjugate value `F*(x, dF(x,z))` by golden-section
    /// maximization of `t -> <dF, t zhat> - F(x, t zhat)` and returns
    /// `|dF.z - F - F*| / (1 + |dF.z|)`.
    pub fn fenchel_identity_check(&self, x: &Point, z: &ZMat) -> Result<f64> {
        if !self.is_radial() {
            return Err(Error::UnsupportedFlavor(format!(
                "{} is not radial in z",
                self.name
            )));
        }
        let f = self.eval(x, z)?;
        let xi = self.grad_z(x, z)?;
        let pairing = xi.dot(z);
        let t0 = z.norm();
        if t0 == 0.0 {
            // dF = 0 and F* (0) = -min F = -F(x,0); defect reduces to 0 for
            // densities minimized at the origin.
            return Ok((pairing - f - (-f)).abs() / (1.0 + pairing.abs()));
        }
        let dir = z.scale(1.0 / t0);
        let xi_dot_dir = xi.dot(&dir);
        let g = |t: f64| xi_dot_dir * t - self.eval_raw(x, &dir.scale(t));
        // Expand the bracket until g starts decreasing, then golden-section.
        let mut hi = 2.0 * t0.max(1.0);
        for _ in 0..200 {
            if g(hi) < g(0.995 * hi) {
                break;
            }
            hi *= 2.0;
        }
        let conj = golden_max(g, 0.0, hi);
        Ok((pairing - f - conj).abs() / (1.0 + pairing.abs()))
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..120 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
        if (b - a).abs() < 1e-12 * (1.0 + b.abs()) {
            break;
        }
    }
    gc.max(gd)
}

/// `V_{mu,t}(z) = (mu^2 + |z|^2)^{(t-2)/4} z`.
///
/// Requires `t > 0`; for `t = 2` this is the identity.
pub fn v_functional(mu: f64, t: f64, z: &ZMat) -> ZMat {
    debug_assert!(t > 0.0, "V-functional exponent must be positive");
    let s = mu * mu + z.norm_sq();
    if s == 0.0 {
        return *z;
    }
    z.scale(s.powf((t - 2.0) / 4.0))
}

#[cfg(test)]
mod tests;
