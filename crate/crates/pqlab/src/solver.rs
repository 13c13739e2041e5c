//! Minimization of the discrete energy over the Dirichlet class and the
//! regularization path.
//!
//! The solver runs limited-memory quasi-Newton descent with Armijo
//! backtracking on the free (interior) nodal values; the gradient of the
//! discrete energy at a node is exactly the weak Euler–Lagrange residual
//! against that node's hat function, so the stopping test is the normalized
//! residual itself. Boundary values are pinned by substitution.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::integrand::Integrand;
use crate::mesh::{self, DiscreteField, Mesh};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Lebesgue/Sobolev norms of the solution at a standard exponent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLadder {
    /// `(exponent, ||u||_p)` pairs, ascending.
    pub u_norms: Vec<(f64, f64)>,
    /// `(exponent, ||Du||_p)` pairs, ascending.
    pub du_norms: Vec<(f64, f64)>,
    /// Filled by the difference-quotient diagnostics when requested.
    pub besov_seminorm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    /// Normalized weak residual, absolute.
    pub el_residual: f64,
    /// Residual relative to the initial iterate's.
    pub el_residual_rel: f64,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    pub line_search_failures: usize,
    pub norm_ladder: NormLadder,
}

#[derive(Debug, Clone)]
pub enum Init {
    /// Interpolant of the boundary datum over the whole mesh.
    BoundaryDatum,
    /// Start from a given admissible field.
    Warm(DiscreteField),
    /// Boundary datum plus a seeded random interior perturbation.
    RandomInterior { seed: u64, amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Residual tolerance relative to the initial residual.
    pub tol_rel: f64,
    /// Absolute residual floor that also counts as converged.
    pub tol_abs: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub init: Init,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_rel: 1e-6,
            tol_abs: 1e-12,
            max_iter: 10_000,
            memory: 8,
            armijo_c1: 1e-4,
            shrink: 0.5,
            init: Init::BoundaryDatum,
        }
    }
}

/// Energy and nodal gradient of the discrete functional.
///
/// The gradient entry at node `j`, component `c` is the quadrature value of
/// `∫ dF(x,Du)·Dψ_{j,c} - f·ψ_{j,c}`.
pub fn assemble(
    f: &Integrand,
    u: &DiscreteField,
    source: Option<&DiscreteField>,
) -> (f64, Vec<f64>) {
    let mesh = &u.mesh;
    let m = u.m;
    let mut energy = 0.0;
    let mut grad = vec![0.0; u.values.len()];
    for e in 0..mesh.element_count() {
        let z = mesh::element_gradient(u, e);
        let x = mesh.element_barycenter(e);
        let measure = mesh.element_measure(e);
        energy += measure * f.eval_raw(&x, &z);
        let df = f.grad_raw(&x, &z);
        let (nodes, count) = mesh.element_nodes(e);
        let grads = mesh.element_grads(e);
        for k in 0..count {
            for c in 0..m {
                let mut acc = 0.0;
                for d in 0..mesh.n() {
                    acc += df.get(d, c) * grads[k][d];
                }
                grad[nodes[k] * m + c] += measure * acc;
            }
        }
    }
    if let Some(src) = source {
        for id in 0..mesh.node_count() {
            let w = mesh.node_weight(id);
            let uv = u.node_value(id);
            let fv = src.node_value(id);
            for c in 0..m {
                energy -= w * uv[c] * fv[c];
                grad[id * m + c] -= w * fv[c];
            }
        }
    }
    (energy, grad)
}

/// `W^{1,1}` norms of the nodal hat functions, for residual normalization.
fn hat_norms(mesh: &Mesh) -> Vec<f64> {
    let mut norms = vec![0.0; mesh.node_count()];
    for (id, norm) in norms.iter_mut().enumerate() {
        *norm = mesh.node_weight(id);
    }
    for e in 0..mesh.element_count() {
        let (nodes, count) = mesh.element_nodes(e);
        let grads = mesh.element_grads(e);
        let measure = mesh.element_measure(e);
        for k in 0..count {
            let g = crate::geometry::norm(&[grads[k][0], grads[k][1]], mesh.n());
            norms[nodes[k]] += measure * g;
        }
    }
    norms
}

fn residual_from_grad(u: &DiscreteField, grad: &[f64], hat: &[f64]) -> f64 {
    let m = u.m;
    let mut worst: f64 = 0.0;
    for id in 0..u.mesh.node_count() {
        if u.boundary_mask[id] {
            continue;
        }
        for c in 0..m {
            worst = worst.max(grad[id * m + c].abs() / hat[id]);
        }
    }
    worst
}

/// Max-normalized weak Euler–Lagrange residual of `u`.
pub fn el_residual(f: &Integrand, u: &DiscreteField, source: Option<&DiscreteField>) -> f64 {
    let (_, grad) = assemble(f, u, source);
    residual_from_grad(u, &grad, &hat_norms(&u.mesh))
}

fn mask_boundary(u: &DiscreteField, grad: &mut [f64]) {
    let m = u.m;
    for id in 0..u.mesh.node_count() {
        if u.boundary_mask[id] {
            for c in 0..m {
                grad[id * m + c] = 0.0;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Minimize `∫ F_eps(x,Du) - f·u` over fields with the boundary datum `g`.
///
/// `epsilon >= 0` selects the regularized integrand; the returned report
/// carries the energy of the functional actually minimized.
pub fn minimize(
    f: &Integrand,
    mesh: Mesh,
    g: &[Expr],
    source: Option<&[Expr]>,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<(DiscreteField, SolveReport)> {
    if epsilon < 0.0 {
        return Err(Error::invalid("regularization weight must be nonnegative"));
    }
    if f.params.n != mesh.n() {
        return Err(Error::MeshMismatch("integrand dimension differs from mesh".into()));
    }
    if g.len() < f.params.m {
        return Err(Error::MeshMismatch("boundary datum has too few components".into()));
    }
    let f_eff;
    let f_used = if epsilon > 0.0 {
        f_eff = f.regularize(epsilon)?;
        &f_eff
    } else {
        f
    };
    let m = f.params.m;
    let src_field = source.map(|s| mesh::interpolate_exprs(mesh, m, s));

    let mut u = match &opts.init {
        Init::BoundaryDatum => mesh::interpolate_exprs(mesh, m, g),
        Init::Warm(w) => {
            if w.mesh != mesh || w.m != m {
                return Err(Error::MeshMismatch("warm start lives on a different mesh".into()));
            }
            mesh::apply_boundary(w, g)
        }
        Init::RandomInterior { seed, amplitude } => {
            let mut base = mesh::interpolate_exprs(mesh, m, g);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for id in 0..mesh.node_count() {
                if !base.boundary_mask[id] {
                    for c in 0..m {
                        base.values[id * m + c] += amplitude * rng.gen_range(-1.0..1.0);
                    }
                }
            }
            base
        }
    };

    let hat = hat_norms(&mesh);
    let src_ref = src_field.as_ref();
    let (mut energy, mut grad) = assemble(f_used, &u, src_ref);
    mask_boundary(&u, &mut grad);
    let init_energy = energy;
    // The relative tolerance references the datum interpolant's residual, the
    // problem-intrinsic scale; warm starts would otherwise make the target
    // shrink with every solve of a path.
    let res0 = match &opts.init {
        Init::BoundaryDatum => residual_from_grad(&u, &grad, &hat),
        _ => {
            let datum = mesh::interpolate_exprs(mesh, m, g);
            let (_, mut dg) = assemble(f_used, &datum, src_ref);
            mask_boundary(&datum, &mut dg);
            residual_from_grad(&datum, &dg, &hat)
        }
    }
    .max(1e-300);
    let target = (opts.tol_rel * res0).max(opts.tol_abs);

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut gamma = 1.0;

    let mut iterations = 0;
    let mut failures = 0usize;
    let mut stalls = 0usize;
    let mut residual = residual_from_grad(&u, &grad, &hat);

    while residual > target && iterations < opts.max_iter {
        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &dir);
            alphas[i] = a;
            axpy(&mut dir, -a, &y_hist[i]);
        }
        for v in dir.iter_mut() {
            *v *= gamma;
        }
        for i in 0..k {
            let b = rho_hist[i] * dot(&y_hist[i], &dir);
            axpy(&mut dir, alphas[i] - b, &s_hist[i]);
        }

        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            // quasi-Newton direction lost descent; fall back to steepest
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            gamma = 1.0;
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = false;
        let mut new_u = u.clone();
        for _ in 0..60 {
            new_u.values.copy_from_slice(&u.values);
            axpy(&mut new_u.values, step, &dir);
            let e_trial = energy_only(f_used, &new_u, src_ref);
            if e_trial <= energy + opts.armijo_c1 * step * slope {
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if !accepted {
            failures += 1;
            // With a correct gradient of a convex energy this only happens in
            // the flat bottom; a significantly positive slope means the
            // convexity contract is broken.
            if slope > 1e-10 * (1.0 + energy.abs()) {
                return Err(Error::Diagnostics(
                    "line search failed along an ascent direction; integrand not convex?".into(),
                ));
            }
            break;
        }

        let (e2, mut grad2) = assemble(f_used, &new_u, src_ref);
        mask_boundary(&new_u, &mut grad2);

        let s: Vec<f64> = new_u
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| a - b)
            .collect();
        let y: Vec<f64> = grad2.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * yy.sqrt() * dot(&s, &s).sqrt() {
            gamma = sy / yy;
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / sy);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            stalls = 0;
        } else if yy == 0.0 || step < 1e-7 {
            // The iterate (or its gradient) no longer moves at this floating
            // point scale; a stale curvature history would reproduce the same
            // bad direction forever.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            gamma = 1.0;
            stalls += 1;
            if stalls > 4 {
                break;
            }
        }

        u = new_u;
        energy = e2;
        grad = grad2;
        residual = residual_from_grad(&u, &grad, &hat);
        iterations += 1;
    }

    // Quasi-Newton steps stop certifying progress once global energy
    // differences fall below the floating-point resolution of the total
    // energy. The remaining residual is high-frequency, so nodewise
    // Gauss-Seidel sweeps (whose patch energies see differences at full
    // precision) finish the job.
    if residual > target {
        for _ in 0..40 {
            gauss_seidel_sweep(f_used, &mut u, src_ref);
            iterations += 1;
            let (e3, mut g3) = assemble(f_used, &u, src_ref);
            mask_boundary(&u, &mut g3);
            energy = e3;
            grad = g3;
            let r = residual_from_grad(&u, &grad, &hat);
            let improved = r < 0.9 * residual;
            residual = r;
            if residual <= target || !improved {
                break;
            }
        }
    }

    debug_assert!(energy <= init_energy + 1e-9 * (1.0 + init_energy.abs()));
    let report = SolveReport {
        energy,
        el_residual: residual,
        el_residual_rel: residual / res0,
        iterations,
        converged: residual <= target,
        epsilon,
        line_search_failures: failures,
        norm_ladder: norm_ladder(f, &u),
    };
    Ok((u, report))
}

/// Derivative of the energy with respect to a single nodal component,
/// assembled from the node's element patch only.
fn local_deriv(
    f: &Integrand,
    u: &DiscreteField,
    source: Option<&DiscreteField>,
    patch: &[u32],
    id: usize,
    c: usize,
) -> f64 {
    let mesh = &u.mesh;
    let mut acc = 0.0;
    for &e in patch {
        let e = e as usize;
        let z = mesh::element_gradient(u, e);
        let df = f.grad_raw(&mesh.element_barycenter(e), &z);
        let (nodes, count) = mesh.element_nodes(e);
        let grads = mesh.element_grads(e);
        for k in 0..count {
            if nodes[k] == id {
                for d in 0..mesh.n() {
                    acc += mesh.element_measure(e) * df.get(d, c) * grads[k][d];
                }
            }
        }
    }
    if let Some(src) = source {
        acc -= mesh.node_weight(id) * src.node_value(id)[c];
    }
    acc
}

/// One nonlinear Gauss-Seidel sweep: each interior nodal component is moved
/// to the zero of its patch-local energy derivative by safeguarded 1D Newton.
fn gauss_seidel_sweep(f: &Integrand, u: &mut DiscreteField, source: Option<&DiscreteField>) {
    let mesh = u.mesh;
    let m = u.m;
    // node -> adjacent elements
    let mut patches: Vec<Vec<u32>> = vec![Vec::new(); mesh.node_count()];
    for e in 0..mesh.element_count() {
        let (nodes, count) = mesh.element_nodes(e);
        for k in 0..count {
            patches[nodes[k]].push(e as u32);
        }
    }
    for id in 0..mesh.node_count() {
        if u.boundary_mask[id] {
            continue;
        }
        for c in 0..m {
            let v0 = u.values[id * m + c];
            let d0 = local_deriv(f, u, source, &patches[id], id, c);
            if d0 == 0.0 {
                continue;
            }
            let scale = v0.abs() + 1e-3;
            let h = 1e-7 * scale;
            u.values[id * m + c] = v0 + h;
            let dp = local_deriv(f, u, source, &patches[id], id, c);
            u.values[id * m + c] = v0 - h;
            let dm = local_deriv(f, u, source, &patches[id], id, c);
            u.values[id * m + c] = v0;
            let curv = (dp - dm) / (2.0 * h);
            if !(curv > 0.0) {
                continue;
            }
            let mut t = -d0 / curv;
            let mut best_t = 0.0;
            let mut best_d = d0.abs();
            for _ in 0..8 {
                u.values[id * m + c] = v0 + t;
                let d = local_deriv(f, u, source, &patches[id], id, c);
                if d.abs() < best_d {
                    best_d = d.abs();
                    best_t = t;
                }
                if d.abs() <= 1e-6 * d0.abs() {
                    break;
                }
                // convexity makes the scalar derivative increasing; fall back
                // to halving toward the best point when Newton overshoots
                if d.abs() > d0.abs() {
                    t = 0.5 * (t + best_t);
                } else {
                    t -= d / curv;
                }
            }
            u.values[id * m + c] = v0 + best_t;
        }
    }
}

fn energy_only(f: &Integrand, u: &DiscreteField, source: Option<&DiscreteField>) -> f64 {
    let mesh = &u.mesh;
    let mut energy = 0.0;
    for e in 0..mesh.element_count() {
        let z = mesh::element_gradient(u, e);
        energy += mesh.element_measure(e) * f.eval_raw(&mesh.element_barycenter(e), &z);
    }
    if let Some(src) = source {
        for id in 0..mesh.node_count() {
            let w = mesh.node_weight(id);
            let uv = u.node_value(id);
            let fv = src.node_value(id);
            for c in 0..u.m {
                energy -= w * uv[c] * fv[c];
            }
        }
    }
    energy
}

/// Norms of `u` and `Du` at the exponents the a-priori estimates live on.
pub fn norm_ladder(f: &Integrand, u: &DiscreteField) -> NormLadder {
    let p = f.params.p;
    let q = f.params.q;
    let n = f.params.n as f64;
    let beta = 0.5 * f.params.alpha;
    let target = n * p / (n - beta);
    let mut exps = vec![1.0, p, 2.0, q, target];
    exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    exps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let g = mesh::gradient(u);
    NormLadder {
        u_norms: exps
            .iter()
            .map(|&e| (e, mesh::lp_norm(u, e).unwrap_or(f64::NAN)))
            .collect(),
        du_norms: exps
            .iter()
            .map(|&e| (e, mesh::lp_norm_element(&g, e).unwrap_or(f64::NAN)))
            .collect(),
        besov_seminorm: None,
    }
}

/// Per-step record of a regularization path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathReport {
    pub entries: Vec<(f64, SolveReport)>,
    /// Aitken-extrapolated limit of the energies.
    pub limit_energy_estimate: f64,
    /// `‖Du_k - Du_{k+1}‖_{L^p}` between consecutive minimizers.
    pub cauchy_defects: Vec<f64>,
    pub failed: bool,
}

/// Default schedule `2^{-k}` scaled by the boundary interpolant's q-norm.
pub fn default_epsilon_schedule(
    f: &Integrand,
    mesh: Mesh,
    g: &[Expr],
    ks: std::ops::RangeInclusive<u32>,
) -> Vec<f64> {
    let interp = mesh::interpolate_exprs(mesh, f.params.m, g);
    let gq = mesh::lp_norm_element(&mesh::gradient(&interp), f.params.q).unwrap_or(0.0);
    let scale = 1.0 / (1.0 + gq.powf(f.params.q));
    ks.map(|k| 2f64.powi(-(k as i32)) * scale).collect()
}

/// Solve along a strictly decreasing `epsilons` list, warm-starting each
/// solve from the previous minimizer.
pub fn regularization_path(
    f: &Integrand,
    mesh: Mesh,
    g: &[Expr],
    source: Option<&[Expr]>,
    epsilons: &[f64],
    opts: &SolveOptions,
) -> Result<PathReport> {
    if epsilons.is_empty() {
        return Err(Error::invalid("empty epsilon schedule"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|&e| e <= 0.0) {
        return Err(Error::invalid("epsilons must be strictly decreasing and positive"));
    }
    let mut entries = Vec::new();
    let mut cauchy = Vec::new();
    let mut prev: Option<DiscreteField> = None;
    let mut failed = false;
    for &eps in epsilons {
        let mut o = opts.clone();
        if let Some(w) = &prev {
            o.init = Init::Warm(w.clone());
        }
        match minimize(f, mesh, g, source, eps, &o) {
            Ok((u, rep)) => {
                if let Some(w) = &prev {
                    let diff = field_sub(&u, w);
                    cauchy.push(
                        mesh::lp_norm_element(&mesh::gradient(&diff), f.params.p)
                            .unwrap_or(f64::NAN),
                    );
                }
                let ok = rep.converged;
                entries.push((eps, rep));
                prev = Some(u);
                if !ok {
                    failed = true;
                    break;
                }
            }
            Err(_) => {
                failed = true;
                break;
            }
        }
    }
    let energies: Vec<f64> = entries.iter().map(|(_, r)| r.energy).collect();
    let limit = aitken_limit(&energies);
    Ok(PathReport { entries, limit_energy_estimate: limit, cauchy_defects: cauchy, failed })
}

/// The path's final minimizer alongside its report, for callers that need
/// the field itself.
pub fn path_with_fields(
    f: &Integrand,
    mesh: Mesh,
    g: &[Expr],
    source: Option<&[Expr]>,
    epsilons: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<DiscreteField>, PathReport)> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilons must be strictly decreasing and nonempty"));
    }
    let mut fields = Vec::new();
    let mut entries = Vec::new();
    let mut cauchy = Vec::new();
    let mut failed = false;
    for &eps in epsilons {
        let mut o = opts.clone();
        if let Some(w) = fields.last() {
            o.init = Init::Warm(DiscreteField::clone(w));
        }
        match minimize(f, mesh, g, source, eps, &o) {
            Ok((u, rep)) => {
                if let Some(w) = fields.last() {
                    let diff = field_sub(&u, w);
                    cauchy.push(
                        mesh::lp_norm_element(&mesh::gradient(&diff), f.params.p)
                            .unwrap_or(f64::NAN),
                    );
                }
                let ok = rep.converged;
                entries.push((eps, rep));
                fields.push(u);
                if !ok {
                    failed = true;
                    break;
                }
            }
            Err(_) => {
                failed = true;
                break;
            }
        }
    }
    let energies: Vec<f64> = entries.iter().map(|(_, r)| r.energy).collect();
    let limit = aitken_limit(&energies);
    Ok((fields, PathReport { entries, limit_energy_estimate: limit, cauchy_defects: cauchy, failed }))
}

fn field_sub(a: &DiscreteField, b: &DiscreteField) -> DiscreteField {
    let mut out = a.clone();
    for (v, w) in out.values.iter_mut().zip(&b.values) {
        *v -= w;
    }
    out
}

fn aitken_limit(e: &[f64]) -> f64 {
    if e.len() < 3 {
        return *e.last().unwrap_or(&f64::NAN);
    }
    let k = e.len();
    let (e0, e1, e2) = (e[k - 3], e[k - 2], e[k - 1]);
    let denom = (e2 - e1) - (e1 - e0);
    if denom.abs() < 1e-30 {
        return e2;
    }
    e2 - (e2 - e1) * (e2 - e1) / denom
}

/// Fitted constants of the dual-norm estimate at a solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualNormReport {
    /// `∫ |dF(x,Du)|^{q'}`
    pub sigma_norm: f64,
    /// `1 + ∫ |f|^{q'} + |g|^q + |Dg|^q`
    pub data_norm: f64,
    pub ratio: f64,
}

/// Compare the conjugate-exponent norm of the stress `dF(x,Du)` against the
/// data terms controlling it.
pub fn dual_norm_check(
    f: &Integrand,
    u: &DiscreteField,
    g: &[Expr],
    source: Option<&[Expr]>,
) -> Result<DualNormReport> {
    let qc = f.params.q_conj();
    let mesh = &u.mesh;
    let mut sigma = 0.0;
    for e in 0..mesh.element_count() {
        let z = mesh::element_gradient(u, e);
        let df = f.grad_raw(&mesh.element_barycenter(e), &z);
        sigma += mesh.element_measure(e) * df.norm().powf(qc);
    }
    let ginterp = mesh::interpolate_exprs(*mesh, u.m, g);
    let gq = mesh::lp_norm(&ginterp, f.params.q)?.powf(f.params.q);
    let dgq = mesh::lp_norm_element(&mesh::gradient(&ginterp), f.params.q)?.powf(f.params.q);
    let fq = match source {
        Some(s) => {
            let sf = mesh::interpolate_exprs(*mesh, u.m, s);
            mesh::lp_norm(&sf, qc)?.powf(qc)
        }
        None => 0.0,
    };
    let data = 1.0 + fq + gq + dgq;
    Ok(DualNormReport { sigma_norm: sigma, data_norm: data, ratio: sigma / data })
}
