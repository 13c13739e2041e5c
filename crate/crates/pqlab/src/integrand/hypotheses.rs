//! Sampled audits of the growth hypotheses.
//!
//! An audit never proves a hypothesis; it hunts for counterexamples on a
//! seeded sample cloud and reports the extremal constants it saw. Violations
//! are judged against the integrand's declared constants. Implicit-constant
//! bounds (the lower bound and the derivative bound) only report fitted
//! constants; their violation records are reserved for sign or finiteness
//! breaches.

use super::Integrand;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mat::ZMat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisId {
    H1,
    H11,
    H12,
    H13,
    H2,
    H3,
    H4,
    LowerBound12,
    DerivativeBound13,
    Lemma213,
}

impl HypothesisId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "H1" => Ok(Self::H1),
            "H1.1" => Ok(Self::H11),
            "H1.2" => Ok(Self::H12),
            "H1.3" => Ok(Self::H13),
            "H2" => Ok(Self::H2),
            "H3" => Ok(Self::H3),
            "H4" => Ok(Self::H4),
            "lower-bound-1.2" => Ok(Self::LowerBound12),
            "derivative-bound-1.3" => Ok(Self::DerivativeBound13),
            "lemma-2.13" => Ok(Self::Lemma213),
            other => Err(Error::invalid(format!("unknown hypothesis id {other:?}"))),
        }
    }
}

impl fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::H1 => "H1",
            Self::H11 => "H1.1",
            Self::H12 => "H1.2",
            Self::H13 => "H1.3",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::LowerBound12 => "lower-bound-1.2",
            Self::DerivativeBound13 => "derivative-bound-1.3",
            Self::Lemma213 => "lemma-2.13",
        };
        f.write_str(s)
    }
}

/// Sampling plan for an audit. Magnitudes of `z` and `w` are drawn
/// log-uniformly over `[z_min, z_max]`, directions uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub seed: u64,
    /// Number of ball centers for the (H4) surrogate.
    pub h4_centers: usize,
    /// Lattice points per axis inside each (H4) ball is `2*h4_lattice + 1`.
    pub h4_lattice: usize,
    /// Number of radii below `eps0` probed per center.
    pub h4_radii: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: 10_000,
            z_min: 1e-3,
            z_max: 1e2,
            seed: 7,
            h4_centers: 16,
            h4_lattice: 6,
            h4_radii: 3,
        }
    }
}

impl SampleSpec {
    pub fn with_seed(seed: u64) -> Self {
        SampleSpec { seed, ..Default::default() }
    }

    /// The `--refine` surrogate: double the lattice resolution.
    pub fn refined(&self) -> Self {
        SampleSpec { h4_lattice: self.h4_lattice * 2, ..*self }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub slack: f64,
}

/// Outcome of a sampled hypothesis audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub sample_count: usize,
    pub skipped: usize,
    pub violation_count: usize,
    /// At most [`HypothesisReport::MAX_RECORDS`] witness records.
    pub violations: Vec<ViolationRecord>,
    pub fitted: BTreeMap<String, f64>,
    pub seed: u64,
}

impl HypothesisReport {
    pub const MAX_RECORDS: usize = 100;

    fn new(id: HypothesisId, seed: u64) -> Self {
        HypothesisReport {
            hypothesis: id.to_string(),
            sample_count: 0,
            skipped: 0,
            violation_count: 0,
            violations: Vec::new(),
            fitted: BTreeMap::new(),
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, x: &Point, nx: usize, z: &ZMat, w: &ZMat, slack: f64) {
        self.record_raw(x[..nx].to_vec(), z.entries().to_vec(), w.entries().to_vec(), slack);
    }

    fn record_raw(&mut self, x: Vec<f64>, z: Vec<f64>, w: Vec<f64>, slack: f64) {
        self.violation_count += 1;
        if self.violations.len() < Self::MAX_RECORDS {
            self.violations.push(ViolationRecord { x, z, w, slack });
        }
    }
}

pub(super) struct Sampler<'a> {
    rng: ChaCha8Rng,
    spec: &'a SampleSpec,
    f: &'a Integrand,
}

impl<'a> Sampler<'a> {
    pub fn new(f: &'a Integrand, spec: &'a SampleSpec) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(spec.seed), spec, f }
    }

    pub fn point(&mut self) -> Point {
        let b = &self.f.domain;
        let mut x = [0.0; crate::geometry::MAX_DIM];
        for d in 0..b.n {
            x[d] = self.rng.gen_range(b.lo[d]..b.hi[d]);
        }
        x
    }

    pub fn matrix(&mut self) -> ZMat {
        let (n, m) = (self.f.params.n, self.f.params.m);
        let mag = self.magnitude();
        loop {
            let dir = ZMat::from_fn(n, m, |_, _| standard_normal(&mut self.rng));
            let nrm = dir.norm();
            if nrm > 1e-9 {
                return dir.scale(mag / nrm);
            }
        }
    }

    fn magnitude(&mut self) -> f64 {
        let (a, b) = (self.spec.z_min.ln(), self.spec.z_max.ln());
        self.rng.gen_range(a..b).exp()
    }

}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Audit hypothesis `id` for `f` under the sampling plan.
pub fn check_hypothesis(
    f: &Integrand,
    id: HypothesisId,
    spec: &SampleSpec,
) -> Result<HypothesisReport> {
    let mut rep = HypothesisReport::new(id, spec.seed);
    let mut s = Sampler::new(f, spec);
    match id {
        HypothesisId::H1 | HypothesisId::H11 | HypothesisId::H12 | HypothesisId::H13 => {
            check_ellipticity(f, id, spec, &mut s, &mut rep)
        }
        HypothesisId::H2 => check_h2(f, spec, &mut s, &mut rep),
        HypothesisId::H3 => check_h3(f, spec, &mut s, &mut rep),
        HypothesisId::H4 => check_h4(f, spec, &mut s, &mut rep),
        HypothesisId::LowerBound12 => check_lower_bound(f, spec, &mut s, &mut rep),
        HypothesisId::DerivativeBound13 => check_derivative_bound(f, spec, &mut s, &mut rep),
        HypothesisId::Lemma213 => check_lemma_213(f, spec, &mut s, &mut rep),
    }
    Ok(rep)
}

/// The (H1)-family weight at a sampled triple.
pub(super) fn ellipticity_weight(f: &Integrand, id: HypothesisId, x: &Point, z: &ZMat, w: &ZMat) -> f64 {
    let mu = f.params.mu;
    match id {
        HypothesisId::H1 => {
            let e = (f.params.p - 2.0) / 2.0;
            (mu * mu + z.norm_sq() + w.norm_sq()).powf(e) * z.sub(w).norm_sq()
        }
        HypothesisId::H11 => {
            let px = f.density.exponent_at(x, &f.domain, f.params.p);
            let e = (px - 2.0) / 2.0;
            (mu * mu + z.norm_sq() + w.norm_sq()).powf(e) * z.sub(w).norm_sq()
        }
        HypothesisId::H12 | HypothesisId::H13 => {
            let ps = f
                .density
                .row_exponents_at(x, &f.domain, f.params.n, f.params.p);
            let mut total = 0.0;
            for (i, pi) in ps.iter().enumerate() {
                let zi = z.row_norm(i);
                let wi = w.row_norm(i);
                let di: f64 = (0..z.m)
                    .map(|j| (z.get(i, j) - w.get(i, j)).powi(2))
                    .sum();
                if mu + zi + wi > 0.0 {
                    total += (mu * mu + zi * zi + wi * wi).powf((pi - 2.0) / 2.0) * di;
                }
            }
            total
        }
        _ => unreachable!("not an ellipticity id"),
    }
}

fn check_ellipticity(
    f: &Integrand,
    id: HypothesisId,
    spec: &SampleSpec,
    s: &mut Sampler,
    rep: &mut HypothesisReport,
) {
    let mut min_ratio = f64::INFINITY;
    for _ in 0..spec.count {
        let x = s.point();
        let z = s.matrix();
        let w = s.matrix();
        // Guard against cancellation noise and the mu = 0 proviso.
        let diff = z.sub(&w).norm();
        if diff < 1e-5 * (f.params.mu + z.norm() + w.norm()) {
            rep.skipped += 1;
            continue;
        }
        let weight = ellipticity_weight(f, id, &x, &z, &w);
        if weight <= 0.0 {
            rep.skipped += 1;
            continue;
        }
        let gap = f.eval_raw(&x, &z)
            - f.eval_raw(&x, &w)
            - f.grad_raw(&x, &w).dot(&z.sub(&w));
        let ratio = gap / weight;
        min_ratio = min_ratio.min(ratio);
        rep.sample_count += 1;
        let bound = f.params.nu * weight;
        if gap < bound * (1.0 - 1e-9) - 1e-12 {
            rep.record(&x, f.params.n, &z, &w, bound - gap);
        }
    }
    rep.fitted.insert("nu".into(), min_ratio);
}

fn check_h2(f: &Integrand, spec: &SampleSpec, s: &mut Sampler, rep: &mut HypothesisReport) {
    let mut max_ratio: f64 = 0.0;
    let zw = ZMat::zero(f.params.n, f.params.m);
    for _ in 0..spec.count {
        let x = s.point();
        let z = s.matrix();
        let ratio = f.eval_raw(&x, &z).abs() / (1.0 + z.norm_sq()).powf(f.params.q / 2.0);
        max_ratio = max_ratio.max(ratio);
        rep.sample_count += 1;
        if ratio > f.params.lambda * (1.0 + 1e-9) {
            rep.record(&x, f.params.n, &z, &zw, ratio - f.params.lambda);
        }
    }
    rep.fitted.insert("Lambda".into(), max_ratio);
}

fn check_h3(f: &Integrand, spec: &SampleSpec, s: &mut Sampler, rep: &mut HypothesisReport) {
    let mut max_ratio: f64 = 0.0;
    for _ in 0..spec.count {
        let x = s.point();
        let y = s.point();
        let z = s.matrix();
        let dist = crate::geometry::norm(&crate::geometry::sub(&x, &y), f.params.n);
        if dist < 1e-9 {
            rep.skipped += 1;
            continue;
        }
        let denom = dist.powf(f.params.alpha) * (1.0 + z.norm_sq()).powf(f.params.q / 2.0);
        let ratio = (f.eval_raw(&x, &z) - f.eval_raw(&y, &z)).abs() / denom;
        max_ratio = max_ratio.max(ratio);
        rep.sample_count += 1;
        if ratio > f.params.lambda * (1.0 + 1e-9) {
            // The w-slot of the record carries the second point y here.
            rep.record_raw(
                x[..f.params.n].to_vec(),
                z.entries().to_vec(),
                y[..f.params.n].to_vec(),
                ratio - f.params.lambda,
            );
        }
    }
    rep.fitted.insert("Lambda".into(), max_ratio);
}

/// Discrete surrogate of (H4): for each sampled center and radius, search a
/// lattice of candidate points for one that minorizes the integrand slice
/// against every lattice point and every sampled `z` simultaneously.
fn check_h4(f: &Integrand, spec: &SampleSpec, s: &mut Sampler, rep: &mut HypothesisReport) {
    let n = f.params.n;
    let z_count = 24.min(spec.count.max(1));
    let zs: Vec<ZMat> = (0..z_count).map(|_| s.matrix()).collect();
    let mut worst_margin: f64 = f64::NEG_INFINITY;
    let zw = ZMat::zero(n, f.params.m);
    for _ in 0..spec.h4_centers {
        let x = s.point();
        for ri in 0..spec.h4_radii {
            let eps = f.eps0 * (ri as f64 + 1.0) / (spec.h4_radii as f64 + 1.0);
            let lattice = h4_lattice(f, &x, eps, spec.h4_lattice);
            if lattice.is_empty() {
                rep.skipped += 1;
                continue;
            }
            rep.sample_count += 1;
            // margin(cand) = max over (y, z) of F(cand,z) - F(y,z); a
            // dominating y-hat has margin <= 0.
            let mut best_margin = f64::INFINITY;
            for cand in &lattice {
                let mut margin = f64::NEG_INFINITY;
                'outer: for z in &zs {
                    let fc = f.eval_raw(cand, z);
                    for y in &lattice {
                        let fy = f.eval_raw(y, z);
                        margin = margin.max(fc - fy - 1e-9 * (1.0 + fy.abs()));
                        if margin > 0.0 {
                            break 'outer;
                        }
                    }
                }
                best_margin = best_margin.min(margin);
                if best_margin <= 0.0 {
                    break;
                }
            }
            worst_margin = worst_margin.max(best_margin);
            if best_margin > 0.0 {
                rep.record(&x, n, &zw, &zw, best_margin);
            }
        }
    }
    if worst_margin.is_finite() {
        rep.fitted.insert("max_defect".into(), worst_margin.max(0.0));
    }
}

fn h4_lattice(f: &Integrand, x: &Point, eps: f64, k: usize) -> Vec<Point> {
    let n = f.params.n;
    let steps = 2 * k + 1;
    let mut pts = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut y = *x;
        for d in 0..n {
            y[d] = x[d] - eps + 2.0 * eps * idx[d] as f64 / (steps - 1) as f64;
            y[d] = y[d].clamp(f.domain.lo[d], f.domain.hi[d]);
        }
        if crate::geometry::norm(&crate::geometry::sub(&y, x), n) <= eps + 1e-12 {
            pts.push(y);
        }
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < steps {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                pts.dedup_by(|a, b| a == b);
                return pts;
            }
        }
    }
}

fn check_lower_bound(f: &Integrand, spec: &SampleSpec, s: &mut Sampler, rep: &mut HypothesisReport) {
    let mut fitted_c: f64 = 0.0;
    let zw = ZMat::zero(f.params.n, f.params.m);
    for _ in 0..spec.count {
        let x = s.point();
        let z = s.matrix();
        let lhs = z.norm().powf(f.params.p) - 1.0;
        let val = f.eval_raw(&x, &z);
        rep.sample_count += 1;
        if lhs <= 0.0 {
            continue;
        }
        if val <= 0.0 {
            rep.record(&x, f.params.n, &z, &zw, lhs - val);
            continue;
        }
        fitted_c = fitted_c.max(lhs / val);
    }
    rep.fitted.insert("C".into(), fitted_c);
}

fn check_derivative_bound(
    f: &Integrand,
    spec: &SampleSpec,
    s: &mut Sampler,
    rep: &mut HypothesisReport,
) {
    let mut fitted_c: f64 = 0.0;
    let zw = ZMat::zero(f.params.n, f.params.m);
    for _ in 0..spec.count {
        let x = s.point();
        let z = s.matrix();
        let g = f.grad_raw(&x, &z);
        let denom = f.params.lambda * (1.0 + z.norm_sq()).powf((f.params.q - 1.0) / 2.0);
        let ratio = g.norm() / denom;
        rep.sample_count += 1;
        if !ratio.is_finite() {
            rep.record(&x, f.params.n, &z, &zw, f64::INFINITY);
            continue;
        }
        fitted_c = fitted_c.max(ratio);
    }
    rep.fitted.insert("C".into(), fitted_c);
}

fn check_lemma_213(f: &Integrand, spec: &SampleSpec, s: &mut Sampler, rep: &mut HypothesisReport) {
    let qc = f.params.q_conj();
    let mut fitted: f64 = f64::INFINITY;
    let zw = ZMat::zero(f.params.n, f.params.m);
    for _ in 0..spec.count {
        let x = s.point();
        let z = s.matrix();
        let g = f.grad_raw(&x, &z);
        let lhs = g.dot(&z);
        let rhs = z.norm().powf(f.params.q) + g.norm().powf(qc) - 1.0;
        rep.sample_count += 1;
        if lhs < -1e-12 {
            rep.record(&x, f.params.n, &z, &zw, -lhs);
            continue;
        }
        if rhs > 0.0 {
            fitted = fitted.min(lhs / rhs);
        }
    }
    if fitted.is_finite() {
        rep.fitted.insert("c".into(), fitted);
    }
}
