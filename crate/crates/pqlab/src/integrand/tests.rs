use super::*;
use crate::geometry::BoxN;
use crate::mat::ZMat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn build(name: &str) -> Integrand {
    example_library(name, &BTreeMap::new(), &BTreeMap::new(), BoxN::unit_square()).unwrap()
}

fn build_with(name: &str, params: &[(&str, f64)], fields: &[(&str, &str)], domain: BoxN) -> Integrand {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let f: BTreeMap<String, String> =
        fields.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    example_library(name, &p, &f, domain).unwrap()
}

const ALL_BUILTINS: &[&str] = &[
    "p-power",
    "weighted-p",
    "anisotropic-weighted",
    "double-phase",
    "quadratic-phase",
    "anisotropic-px",
    "log-growth",
    "F7-max",
    "composed-h",
    "px-laplacian",
    "checkerboard",
];

/// Central finite differences of `eval`, the oracle for `grad_z`.
fn fd_grad(f: &Integrand, x: &crate::geometry::Point, z: &ZMat) -> ZMat {
    let h = 1e-6 * z.norm().max(1.0);
    ZMat::from_fn(z.n, z.m, |i, j| {
        let mut zp = *z;
        let mut zm = *z;
        zp.set(i, j, z.get(i, j) + h);
        zm.set(i, j, z.get(i, j) - h);
        (f.eval_raw(x, &zp) - f.eval_raw(x, &zm)) / (2.0 * h)
    })
}

fn unit_z(n: usize, m: usize) -> ZMat {
    ZMat::from_fn(n, m, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 })
}

#[test]
fn eval_double_phase_at_unit_gradient() {
    let f = build_with("double-phase", &[("p", 2.0), ("q", 3.0)], &[("weight", "0.5")], BoxN::unit_square());
    let z = unit_z(2, 1);
    let v = f.eval(&[0.3, 0.3], &z).unwrap();
    assert!((v - 1.5).abs() < 1e-14);
}

#[test]
fn eval_zero_field_is_zero_for_origin_normalized_families() {
    for name in ALL_BUILTINS {
        if *name == "composed-h" {
            // F8 is not normalized at the origin.
            continue;
        }
        let f = build(name);
        let z = ZMat::zero(f.params.n, f.params.m);
        assert_eq!(f.eval(&[0.4, 0.6], &z).unwrap(), 0.0, "{name}");
    }
}

#[test]
fn eval_quadratic_phase_identity_coupling() {
    // |z|^2 + (1*|z|^2)^{q/2} with q = 2 at |z| = 1 gives 2.
    let f = build_with("quadratic-phase", &[("p", 2.0), ("q", 2.0)], &[("lambda", "1")], BoxN::unit_square());
    let v = f.eval(&[0.5, 0.5], &unit_z(2, 1)).unwrap();
    assert!((v - 2.0).abs() < 1e-14);
}

#[test]
fn eval_rejects_non_finite() {
    let f = build("p-power");
    let mut z = unit_z(2, 1);
    z.set(0, 0, f64::NAN);
    assert!(f.eval(&[0.5, 0.5], &z).is_err());
    assert!(f.eval(&[f64::INFINITY, 0.5], &unit_z(2, 1)).is_err());
    assert!(f.grad_z(&[0.5, 0.5], &z).is_err());
}

#[test]
fn grad_quadratic_is_linear() {
    let f = build_with("p-power", &[("p", 2.0)], &[], BoxN::unit_square());
    let z = ZMat::from_rows(2, 1, &[0.7, -1.3]);
    let g = f.grad_z(&[0.2, 0.9], &z).unwrap();
    assert!((g.get(0, 0) - 1.4).abs() < 1e-14);
    assert!((g.get(1, 0) + 2.6).abs() < 1e-14);
}

#[test]
fn grad_radial_power_vanishes_at_origin() {
    for p in [1.5, 2.0, 3.0] {
        let f = build_with("p-power", &[("p", p)], &[], BoxN::unit_square());
        let g = f.grad_z(&[0.5, 0.5], &ZMat::zero(2, 1)).unwrap();
        assert_eq!(g.norm(), 0.0);
    }
}

#[test]
fn grad_double_phase_matches_difference_oracle() {
    let f = build_with("double-phase", &[("p", 2.0), ("q", 3.0)], &[("weight", "0.5")], BoxN::unit_square());
    let x = [0.3, 0.7];
    let z = unit_z(2, 1);
    let g = f.grad_z(&x, &z).unwrap();
    let fd = fd_grad(&f, &x, &z);
    assert!(g.sub(&fd).norm() < 1e-6 * g.norm());
    // p|z|^{p-2}z + a q |z|^{q-2}z = (2 + 1.5) z at |z| = 1.
    assert!((g.get(0, 0) - 3.5).abs() < 1e-12);
    assert!(g.get(1, 0).abs() < 1e-12);
}

#[test]
fn gradient_consistency_across_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ALL_BUILTINS {
        let f = build(name);
        let (n, m) = (f.params.n, f.params.m);
        let mut checked = 0;
        while checked < 1000 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let mag = rng.gen_range(0.05f64.ln()..10f64.ln()).exp();
            let dir = ZMat::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
            if dir.norm() < 1e-9 {
                continue;
            }
            let z = dir.scale(mag / dir.norm());
            // Keep clear of the kink manifold of the last row.
            if f.density.has_kink() && z.row_norm(n - 1) < 1e-2 {
                continue;
            }
            let g = f.grad_z(&x, &z).unwrap();
            let fd = fd_grad(&f, &x, &z);
            let scale = g.norm().max(1e-9);
            assert!(
                g.sub(&fd).norm() <= 1e-4 * scale,
                "{name}: gradient mismatch {} at |z|={mag}",
                g.sub(&fd).norm() / scale
            );
            checked += 1;
        }
    }
}

#[test]
fn midpoint_convexity_across_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in ALL_BUILTINS {
        let f = build(name);
        let (n, m) = (f.params.n, f.params.m);
        for _ in 0..500 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let z = ZMat::from_fn(n, m, |_, _| rng.gen_range(-5.0..5.0));
            let w = ZMat::from_fn(n, m, |_, _| rng.gen_range(-5.0..5.0));
            let mid = z.add(&w).scale(0.5);
            let lhs = f.eval_raw(&x, &mid);
            let rhs = 0.5 * (f.eval_raw(&x, &z) + f.eval_raw(&x, &w));
            assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{name}");
        }
    }
}

#[test]
fn regularize_adds_q_power() {
    let f = build_with("p-power", &[("p", 2.0)], &[], BoxN::unit_square());
    let r = f.regularize(0.5).unwrap();
    let v = r.eval(&[0.5, 0.5], &unit_z(2, 1)).unwrap();
    assert!((v - 1.5).abs() < 1e-14);

    let dp = build_with("double-phase", &[("p", 2.0), ("q", 3.0)], &[("weight", "0")], BoxN::unit_square());
    let r = dp.regularize(0.1).unwrap();
    let z = unit_z(2, 1).scale(2.0);
    let v = r.eval(&[0.5, 0.5], &z).unwrap();
    assert!((v - 4.8).abs() < 1e-12);
}

#[test]
fn regularize_rejects_nonpositive_weight() {
    let f = build("p-power");
    assert!(f.regularize(0.0).is_err());
    assert!(f.regularize(-1.0).is_err());
}

#[test]
fn regularized_integrand_keeps_hypotheses() {
    let f = build("double-phase");
    let r = f.regularize(0.25).unwrap();
    let spec = SampleSpec { count: 2000, ..SampleSpec::with_seed(5) };
    for id in [HypothesisId::H1, HypothesisId::H2, HypothesisId::H3] {
        let rep = hypotheses::check_hypothesis(&r, id, &spec).unwrap();
        assert!(rep.passed(), "{id} failed after regularization");
    }
    // Ellipticity constant carries over unchanged.
    assert_eq!(r.params.nu, f.params.nu);
    assert!((r.params.lambda - (f.params.lambda + 0.25)).abs() < 1e-15);
}

#[test]
fn h4_stable_under_regularization() {
    let f = build("double-phase");
    let spec = SampleSpec { count: 500, h4_centers: 8, ..SampleSpec::with_seed(3) };
    let base = hypotheses::check_hypothesis(&f, HypothesisId::H4, &spec).unwrap();
    assert!(base.passed());
    let reg = f.regularize(0.1).unwrap();
    let rep = hypotheses::check_hypothesis(&reg, HypothesisId::H4, &spec).unwrap();
    assert!(rep.passed());
}

#[test]
fn h1_quadratic_has_unit_ellipticity() {
    let f = build_with("p-power", &[("p", 2.0)], &[], BoxN::unit_square());
    let rep = hypotheses::check_hypothesis(&f, HypothesisId::H1, &SampleSpec::with_seed(1)).unwrap();
    assert!(rep.passed());
    let nu = rep.fitted["nu"];
    assert!(nu >= 1.0 - 1e-9, "fitted nu {nu}");
    assert!(nu <= 1.0 + 1e-9, "the quadratic gap ratio is identically one");
}

#[test]
fn h3_linear_weight_fits_unit_holder_constant() {
    let f = build_with(
        "double-phase",
        &[("p", 2.0), ("q", 3.0)],
        &[("weight", "abs(x1)")],
        BoxN::unit_square(),
    );
    let spec = SampleSpec { count: 20_000, ..SampleSpec::with_seed(2) };
    let rep = hypotheses::check_hypothesis(&f, HypothesisId::H3, &spec).unwrap();
    assert!(rep.passed());
    let fitted = rep.fitted["Lambda"];
    assert!(fitted <= 1.0 + 1e-9, "fitted {fitted}");
    // Brute-force oracle over a deterministic grid: the true ratio supremum
    // |a(x)-a(y)| |z|^q / (|x-y| (1+|z|^2)^{q/2}) stays below one.
    let mut sup: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            for k in 1..30 {
                let (x, y) = (i as f64 / 19.0, j as f64 / 19.0);
                if (x - y).abs() < 1e-12 {
                    continue;
                }
                let t = 10f64.powf(-2.0 + 4.0 * k as f64 / 29.0);
                let ratio =
                    (x - y).abs() * t.powi(3) / ((x - y).abs() * (1.0 + t * t).powf(1.5));
                sup = sup.max(ratio);
            }
        }
    }
    assert!(sup <= 1.0);
    assert!(fitted <= sup + 0.05);
}

#[test]
fn h4_monotone_weight_on_interval() {
    let f = build_with(
        "weighted-p",
        &[("p", 2.0)],
        &[("weight", "1+x1")],
        BoxN::unit_interval(),
    );
    let spec = SampleSpec { count: 500, h4_centers: 12, ..SampleSpec::with_seed(9) };
    let rep = hypotheses::check_hypothesis(&f, HypothesisId::H4, &spec).unwrap();
    assert!(rep.passed(), "violations: {}", rep.violation_count);
    // Exhaustive minimization over sampled balls picks the left endpoint.
    for center in [0.3, 0.5, 0.8] {
        let eps = 0.1;
        let lo: f64 = (center - eps) as f64;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=50 {
            let y = (center - eps + 2.0 * eps * k as f64 / 50.0).clamp(0.0, 1.0);
            let a = 1.0 + y;
            if a < best.0 {
                best = (a, y);
            }
        }
        assert!((best.1 - lo.max(0.0)).abs() < 1e-9);
    }
}

#[test]
fn broken_ellipticity_is_flagged() {
    let f = build("broken-ellipticity");
    let rep = hypotheses::check_hypothesis(&f, HypothesisId::H1, &SampleSpec::with_seed(4)).unwrap();
    assert!(rep.violation_count >= 1, "expected at least one violation");
    assert!(!rep.violations.is_empty());
}

#[test]
fn declared_sets_pass_for_all_builtins() {
    let spec = SampleSpec { count: 2500, h4_centers: 6, ..SampleSpec::with_seed(17) };
    for name in ALL_BUILTINS {
        let f = build(name);
        for id in f.declared.clone() {
            let rep = hypotheses::check_hypothesis(&f, id, &spec).unwrap();
            assert!(
                rep.passed(),
                "{name} / {id}: {} violations, fitted {:?}",
                rep.violation_count,
                rep.fitted
            );
        }
    }
}

#[test]
fn px_laplacian_dipping_exponent_passes_h11() {
    let f = build("px-laplacian");
    assert_eq!(f.flavor, Flavor::VariableExponent);
    let rep =
        hypotheses::check_hypothesis(&f, HypothesisId::H11, &SampleSpec::with_seed(21)).unwrap();
    assert!(rep.passed());
    // The exponent really dips: q on the left half, p on the right edge.
    let left = f.density.exponent_at(&[0.25, 0.5], &f.domain, f.params.p);
    let right = f.density.exponent_at(&[1.0, 0.5], &f.domain, f.params.p);
    assert!((left - f.params.q).abs() < 1e-12);
    assert!((right - f.params.p).abs() < 1e-12);
}

#[test]
fn lower_bound_fitted_constants_are_positive() {
    let spec = SampleSpec::with_seed(23);
    for name in ["p-power", "double-phase", "checkerboard", "px-laplacian"] {
        let f = build(name);
        let rep = hypotheses::check_hypothesis(&f, HypothesisId::LowerBound12, &spec).unwrap();
        assert!(rep.passed(), "{name}");
        let c = rep.fitted["C"];
        assert!(c > 0.0 && c.is_finite(), "{name}: fitted C = {c}");
    }
}

#[test]
fn lemma_213_ratio_positive_for_two_sided_growth() {
    // Meaningful when the q-power is present from below: regularized and
    // p = q families.
    let spec = SampleSpec { count: 4000, ..SampleSpec::with_seed(29) };
    let reg = build("double-phase").regularize(0.2).unwrap();
    let rep = hypotheses::check_hypothesis(&reg, HypothesisId::Lemma213, &spec).unwrap();
    assert!(rep.passed());
    assert!(rep.fitted["c"] > 0.0);

    let pp = build_with("p-power", &[("p", 2.5)], &[], BoxN::unit_square());
    let rep = hypotheses::check_hypothesis(&pp, HypothesisId::Lemma213, &spec).unwrap();
    assert!(rep.passed());
    assert!(rep.fitted["c"] > 1e-3);
}

#[test]
fn fitted_constants_stable_under_sample_refinement() {
    let f = build("double-phase");
    let coarse = SampleSpec { count: 10_000, ..SampleSpec::with_seed(31) };
    let fine = SampleSpec { count: 20_000, ..SampleSpec::with_seed(31) };
    for id in [HypothesisId::H1, HypothesisId::H2, HypothesisId::H3] {
        let a = hypotheses::check_hypothesis(&f, id, &coarse).unwrap();
        let b = hypotheses::check_hypothesis(&f, id, &fine).unwrap();
        let key = if id == HypothesisId::H1 { "nu" } else { "Lambda" };
        let (ca, cb) = (a.fitted[key], b.fitted[key]);
        assert!(
            (ca - cb).abs() <= 0.10 * ca.abs().max(cb.abs()),
            "{id}: {ca} vs {cb}"
        );
    }
}

#[test]
fn v_functional_special_cases() {
    let z = ZMat::from_rows(2, 1, &[1.0, 0.0]);
    // t = 2 is the identity regardless of mu.
    let v = v_functional(0.7, 2.0, &z);
    assert_eq!(v, z);
    // mu = 0, t = 4: (|z|^2)^{1/2} z = |z| z.
    let z2 = z.scale(2.0);
    let v = v_functional(0.0, 4.0, &z2);
    assert!(v.sub(&z2.scale(2.0)).norm() < 1e-14);
    // mu = 1, t = 3: (1+1)^{1/4} z.
    let v = v_functional(1.0, 3.0, &z);
    assert!((v.get(0, 0) - 2f64.powf(0.25)).abs() < 1e-14);
}

#[test]
fn v_functional_two_sided_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for t in [1.5, 2.5, 3.0] {
        for mu in [0.0, 0.5, 1.0] {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for _ in 0..2000 {
                let z1 = ZMat::from_fn(2, 1, |_, _| rng.gen_range(-3.0..3.0));
                let z2 = ZMat::from_fn(2, 1, |_, _| rng.gen_range(-3.0..3.0));
                if mu + z1.norm() + z2.norm() < 1e-6 || z1.sub(&z2).norm() < 1e-6 {
                    continue;
                }
                let dv = v_functional(mu, t, &z1).sub(&v_functional(mu, t, &z2)).norm_sq();
                let w = (mu * mu + z1.norm_sq() + z2.norm_sq()).powf((t - 2.0) / 2.0)
                    * z1.sub(&z2).norm_sq();
                let ratio = dv / w;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            assert!(lo > 0.0, "t={t} mu={mu}");
            assert!(hi / lo < 50.0, "t={t} mu={mu}: spread {lo}..{hi}");
        }
    }
}

#[test]
fn fenchel_identity_for_scaled_quadratic() {
    let f = build_with("weighted-p", &[("p", 2.0)], &[("weight", "0.5")], BoxN::unit_square());
    for mag in [0.3, 1.0, 4.0] {
        let d = f.fenchel_identity_check(&[0.4, 0.4], &unit_z(2, 1).scale(mag)).unwrap();
        assert!(d < 1e-9, "defect {d} at |z|={mag}");
    }
}

#[test]
fn fenchel_identity_for_cubic_power() {
    let f = build_with(
        "weighted-p",
        &[("p", 3.0)],
        &[("weight", "0.33333333333333333")],
        BoxN::unit_square(),
    );
    let d = f.fenchel_identity_check(&[0.5, 0.5], &unit_z(2, 1).scale(2.0)).unwrap();
    assert!(d <= 1e-6, "defect {d}");
}

#[test]
fn fenchel_identity_for_double_phase() {
    let f = build_with("double-phase", &[("p", 2.0), ("q", 3.0)], &[("weight", "1")], BoxN::unit_square());
    let d = f.fenchel_identity_check(&[0.5, 0.5], &unit_z(2, 1)).unwrap();
    assert!(d <= 1e-5, "defect {d}");
}

#[test]
fn fenchel_defect_small_for_radial_builtins() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for name in ALL_BUILTINS {
        let f = build(name);
        if !f.is_radial() {
            assert!(f
                .fenchel_identity_check(&[0.5, 0.5], &unit_z(f.params.n, f.params.m))
                .is_err());
            continue;
        }
        for _ in 0..24 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let mag = rng.gen_range(0.01f64.ln()..10f64.ln()).exp();
            let d = f.fenchel_identity_check(&x, &unit_z(f.params.n, f.params.m).scale(mag)).unwrap();
            assert!(d <= 1e-5, "{name}: defect {d} at |z|={mag}");
        }
    }
}

#[test]
fn growth_params_validation() {
    let mut gp = GrowthParams {
        p: 2.0,
        q: 2.5,
        alpha: 1.0,
        mu: 0.0,
        nu: 1.0,
        lambda: 1.0,
        n: 2,
        m: 1,
    };
    assert!(gp.validate().is_ok());
    gp.q = 1.5;
    assert!(gp.validate().is_err());
    gp.q = 2.5;
    gp.alpha = 0.0;
    assert!(gp.validate().is_err());
    // Sobolev restriction: p = 1.5 < n = 2 forces q <= np/(n-p) = 6.
    let gp = GrowthParams { p: 1.5, q: 7.0, alpha: 1.0, mu: 0.0, nu: 1.0, lambda: 1.0, n: 2, m: 1 };
    assert!(gp.validate().is_err());
}

#[test]
fn threshold_arithmetic() {
    let f = build("double-phase");
    assert!((f.params.q_threshold() - 3.0).abs() < 1e-12);
    assert!(f.params.below_threshold());
    let c = build_with("checkerboard", &[], &[], BoxN::centered_square());
    assert!((c.params.q_threshold() - 2.55).abs() < 1e-12);
    assert!(!c.params.below_threshold());
}

#[test]
fn unknown_name_and_unknown_hypothesis_are_rejected() {
    assert!(example_library("no-such", &BTreeMap::new(), &BTreeMap::new(), BoxN::unit_square())
        .is_err());
    assert!(HypothesisId::parse("H9").is_err());
    assert_eq!(HypothesisId::parse("lemma-2.13").unwrap(), HypothesisId::Lemma213);
}

#[test]
fn reports_serialize_deterministically() {
    let f = build("double-phase");
    let spec = SampleSpec { count: 300, ..SampleSpec::with_seed(77) };
    let a = hypotheses::check_hypothesis(&f, HypothesisId::H2, &spec).unwrap();
    let b = hypotheses::check_hypothesis(&f, HypothesisId::H2, &spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
