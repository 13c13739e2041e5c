//! Rectangular-domain discretization: nodal fields, piecewise-affine
//! gradients, quadrature and norms.
//!
//! Cells are split into simplices (intervals in 1D, two triangles per cell in
//! 2D). Gradient-term quadrature is one-point at element barycenters; nodal
//! terms use trapezoidal (mass-lumped) weights. Reductions are fixed-order
//! sums so identical inputs give identical outputs.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{BoxN, Point, MAX_DIM};
use crate::integrand::Integrand;
use crate::mat::ZMat;
use std::io::{Read, Write};

/// Maximum number of field components.
pub const MAX_M: usize = 4;

/// A nodal m-vector.
pub type NodeVal = [f64; MAX_M];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub domain: BoxN,
    /// Cells per axis.
    pub resolution: [usize; MAX_DIM],
}

impl Mesh {
    pub fn new(domain: BoxN, resolution: [usize; MAX_DIM]) -> Result<Self> {
        for d in 0..domain.n {
            if resolution[d] == 0 {
                return Err(Error::invalid("resolution must be positive along every axis"));
            }
        }
        Ok(Mesh { domain, resolution })
    }

    pub fn uniform(domain: BoxN, cells: usize) -> Result<Self> {
        Mesh::new(domain, [cells, cells])
    }

    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn cell_size(&self, d: usize) -> f64 {
        self.domain.side(d) / self.resolution[d] as f64
    }

    pub fn min_cell(&self) -> f64 {
        (0..self.n()).map(|d| self.cell_size(d)).fold(f64::INFINITY, f64::min)
    }

    pub fn nodes_per_axis(&self, d: usize) -> usize {
        self.resolution[d] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.n()).map(|d| self.nodes_per_axis(d)).product()
    }

    pub fn element_count(&self) -> usize {
        match self.n() {
            1 => self.resolution[0],
            _ => 2 * self.resolution[0] * self.resolution[1],
        }
    }

    pub fn node_coords(&self, id: usize) -> Point {
        let mut x = [0.0; MAX_DIM];
        match self.n() {
            1 => {
                x[0] = self.domain.lo[0] + id as f64 * self.cell_size(0);
            }
            _ => {
                let nx = self.nodes_per_axis(0);
                let (i, j) = (id % nx, id / nx);
                x[0] = self.domain.lo[0] + i as f64 * self.cell_size(0);
                x[1] = self.domain.lo[1] + j as f64 * self.cell_size(1);
            }
        }
        x
    }

    pub fn node_id(&self, idx: [usize; MAX_DIM]) -> usize {
        match self.n() {
            1 => idx[0],
            _ => idx[1] * self.nodes_per_axis(0) + idx[0],
        }
    }

    pub fn is_boundary_node(&self, id: usize) -> bool {
        match self.n() {
            1 => id == 0 || id == self.resolution[0],
            _ => {
                let nx = self.nodes_per_axis(0);
                let (i, j) = (id % nx, id / nx);
                i == 0 || i == self.resolution[0] || j == 0 || j == self.resolution[1]
            }
        }
    }

    /// Trapezoidal quadrature weight of a node.
    pub fn node_weight(&self, id: usize) -> f64 {
        match self.n() {
            1 => {
                let h = self.cell_size(0);
                if id == 0 || id == self.resolution[0] {
                    0.5 * h
                } else {
                    h
                }
            }
            _ => {
                let nx = self.nodes_per_axis(0);
                let (i, j) = (id % nx, id / nx);
                let wx = if i == 0 || i == self.resolution[0] { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == self.resolution[1] { 0.5 } else { 1.0 };
                wx * wy * self.cell_size(0) * self.cell_size(1)
            }
        }
    }

    /// Node ids of an element, 2 in 1D and 3 in 2D.
    pub fn element_nodes(&self, e: usize) -> ([usize; 3], usize) {
        match self.n() {
            1 => ([e, e + 1, 0], 2),
            _ => {
                let nx = self.nodes_per_axis(0);
                let cell = e / 2;
                let (ci, cj) = (cell % self.resolution[0], cell / self.resolution[0]);
                let v00 = cj * nx + ci;
                let v10 = v00 + 1;
                let v01 = v00 + nx;
                let v11 = v01 + 1;
                if e % 2 == 0 {
                    ([v00, v10, v01], 3)
                } else {
                    ([v11, v01, v10], 3)
                }
            }
        }
    }

    /// Hat-function gradients of an element's local nodes.
    pub fn element_grads(&self, e: usize) -> [[f64; MAX_DIM]; 3] {
        let hx = self.cell_size(0);
        match self.n() {
            1 => [[-1.0 / hx, 0.0], [1.0 / hx, 0.0], [0.0, 0.0]],
            _ => {
                let hy = self.cell_size(1);
                if e % 2 == 0 {
                    [[-1.0 / hx, -1.0 / hy], [1.0 / hx, 0.0], [0.0, 1.0 / hy]]
                } else {
                    [[1.0 / hx, 1.0 / hy], [-1.0 / hx, 0.0], [0.0, -1.0 / hy]]
                }
            }
        }
    }

    pub fn element_measure(&self, _e: usize) -> f64 {
        match self.n() {
            1 => self.cell_size(0),
            _ => 0.5 * self.cell_size(0) * self.cell_size(1),
        }
    }

    pub fn element_barycenter(&self, e: usize) -> Point {
        let mut x = [0.0; MAX_DIM];
        let hx = self.cell_size(0);
        match self.n() {
            1 => {
                x[0] = self.domain.lo[0] + (e as f64 + 0.5) * hx;
            }
            _ => {
                let hy = self.cell_size(1);
                let cell = e / 2;
                let (ci, cj) = (cell % self.resolution[0], cell / self.resolution[0]);
                let (x0, y0) = (
                    self.domain.lo[0] + ci as f64 * hx,
                    self.domain.lo[1] + cj as f64 * hy,
                );
                if e % 2 == 0 {
                    x = [x0 + hx / 3.0, y0 + hy / 3.0];
                } else {
                    x = [x0 + 2.0 * hx / 3.0, y0 + 2.0 * hy / 3.0];
                }
            }
        }
        x
    }

    /// Cell index containing `x`, clamped into the mesh.
    fn locate_cell(&self, x: &Point) -> [usize; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        for d in 0..self.n() {
            let t = (x[d] - self.domain.lo[d]) / self.cell_size(d);
            c[d] = (t.floor() as isize).clamp(0, self.resolution[d] as isize - 1) as usize;
        }
        c
    }
}

/// Nodal values of a vector-valued function with a Dirichlet mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub mesh: Mesh,
    pub m: usize,
    /// Node-major storage: `values[node * m + component]`.
    pub values: Vec<f64>,
    pub boundary_mask: Vec<bool>,
}

impl DiscreteField {
    pub fn zeros(mesh: Mesh, m: usize) -> Self {
        assert!(m >= 1 && m <= MAX_M, "component count out of range");
        DiscreteField {
            mesh,
            m,
            values: vec![0.0; mesh.node_count() * m],
            boundary_mask: vec![false; mesh.node_count()],
        }
    }

    pub fn from_fn(mesh: Mesh, m: usize, mut f: impl FnMut(&Point) -> NodeVal) -> Self {
        let mut out = Self::zeros(mesh, m);
        for id in 0..mesh.node_count() {
            let v = f(&mesh.node_coords(id));
            out.values[id * m..id * m + m].copy_from_slice(&v[..m]);
        }
        out
    }

    pub fn scalar_from_fn(mesh: Mesh, mut f: impl FnMut(&Point) -> f64) -> Self {
        Self::from_fn(mesh, 1, |x| {
            let mut v = [0.0; MAX_M];
            v[0] = f(x);
            v
        })
    }

    pub fn node_value(&self, id: usize) -> NodeVal {
        let mut v = [0.0; MAX_M];
        v[..self.m].copy_from_slice(&self.values[id * self.m..(id + 1) * self.m]);
        v
    }

    pub fn set_node_value(&mut self, id: usize, v: &NodeVal) {
        self.values[id * self.m..(id + 1) * self.m].copy_from_slice(&v[..self.m]);
    }

    pub fn same_layout(&self, other: &DiscreteField) -> bool {
        self.mesh == other.mesh && self.m == other.m
    }

    /// Piecewise-affine interpolant at `x` (clamped into the domain).
    pub fn interpolate(&self, x: &Point) -> NodeVal {
        let mesh = &self.mesh;
        let c = mesh.locate_cell(x);
        let mut out = [0.0; MAX_M];
        match mesh.n() {
            1 => {
                let h = mesh.cell_size(0);
                let x0 = mesh.domain.lo[0] + c[0] as f64 * h;
                let t = ((x[0] - x0) / h).clamp(0.0, 1.0);
                let (a, b) = (self.node_value(c[0]), self.node_value(c[0] + 1));
                for k in 0..self.m {
                    out[k] = (1.0 - t) * a[k] + t * b[k];
                }
            }
            _ => {
                let (hx, hy) = (mesh.cell_size(0), mesh.cell_size(1));
                let x0 = mesh.domain.lo[0] + c[0] as f64 * hx;
                let y0 = mesh.domain.lo[1] + c[1] as f64 * hy;
                let xi = ((x[0] - x0) / hx).clamp(0.0, 1.0);
                let eta = ((x[1] - y0) / hy).clamp(0.0, 1.0);
                let nx = mesh.nodes_per_axis(0);
                let v00 = self.node_value(c[1] * nx + c[0]);
                let v10 = self.node_value(c[1] * nx + c[0] + 1);
                let v01 = self.node_value((c[1] + 1) * nx + c[0]);
                let v11 = self.node_value((c[1] + 1) * nx + c[0] + 1);
                if xi + eta <= 1.0 {
                    for k in 0..self.m {
                        out[k] = v00[k] + (v10[k] - v00[k]) * xi + (v01[k] - v00[k]) * eta;
                    }
                } else {
                    for k in 0..self.m {
                        out[k] =
                            v11[k] + (v01[k] - v11[k]) * (1.0 - xi) + (v10[k] - v11[k]) * (1.0 - eta);
                    }
                }
            }
        }
        out
    }

    /// Interpolate onto a finer (or any) mesh over the same box.
    pub fn prolong(&self, fine: Mesh) -> DiscreteField {
        let mut out = DiscreteField::zeros(fine, self.m);
        for id in 0..fine.node_count() {
            let v = self.interpolate(&fine.node_coords(id));
            out.set_node_value(id, &v);
            out.boundary_mask[id] = fine.is_boundary_node(id);
        }
        out
    }
}

/// A per-element matrix field, e.g. the gradient of a [`DiscreteField`].
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField {
    pub mesh: Mesh,
    pub m: usize,
    data: Vec<f64>,
}

impl ElementField {
    pub fn mat(&self, e: usize) -> ZMat {
        let nm = self.mesh.n() * self.m;
        ZMat::from_rows(self.mesh.n(), self.m, &self.data[e * nm..(e + 1) * nm])
    }
}

/// Exact gradient of the piecewise-affine interpolant, element by element.
pub fn gradient(u: &DiscreteField) -> ElementField {
    let mesh = u.mesh;
    let n = mesh.n();
    let nm = n * u.m;
    let mut data = vec![0.0; mesh.element_count() * nm];
    for e in 0..mesh.element_count() {
        let (nodes, count) = mesh.element_nodes(e);
        let grads = mesh.element_grads(e);
        let base = e * nm;
        for k in 0..count {
            let val = u.node_value(nodes[k]);
            for d in 0..n {
                let g = grads[k][d];
                if g == 0.0 {
                    continue;
                }
                for c in 0..u.m {
                    data[base + d * u.m + c] += g * val[c];
                }
            }
        }
    }
    ElementField { mesh, m: u.m, data }
}

/// Gradient matrix of `u` on one element, without materializing the field.
#[inline]
pub fn element_gradient(u: &DiscreteField, e: usize) -> ZMat {
    let mesh = &u.mesh;
    let (nodes, count) = mesh.element_nodes(e);
    let grads = mesh.element_grads(e);
    let mut z = ZMat::zero(mesh.n(), u.m);
    for k in 0..count {
        let val = u.node_value(nodes[k]);
        for d in 0..mesh.n() {
            let g = grads[k][d];
            if g == 0.0 {
                continue;
            }
            for c in 0..u.m {
                z.add_assign(d, c, g * val[c]);
            }
        }
    }
    z
}

/// Quadrature value of `∫ F(x,Du) - f·u`.
///
/// The gradient term is integrated with one-point (barycenter) quadrature,
/// the source term with trapezoidal nodal weights.
pub fn energy(f: &Integrand, u: &DiscreteField, source: Option<&DiscreteField>) -> Result<f64> {
    if f.params.n != u.mesh.n() || f.params.m != u.m {
        return Err(Error::MeshMismatch("integrand and field dimensions differ".into()));
    }
    if let Some(src) = source {
        if !src.same_layout(u) {
            return Err(Error::MeshMismatch("source field lives on a different mesh".into()));
        }
    }
    let mesh = &u.mesh;
    let mut total = 0.0;
    for e in 0..mesh.element_count() {
        let z = element_gradient(u, e);
        total += mesh.element_measure(e) * f.eval_raw(&mesh.element_barycenter(e), &z);
    }
    if let Some(src) = source {
        for id in 0..mesh.node_count() {
            let w = mesh.node_weight(id);
            let uv = u.node_value(id);
            let fv = src.node_value(id);
            let mut dot = 0.0;
            for c in 0..u.m {
                dot += uv[c] * fv[c];
            }
            total -= w * dot;
        }
    }
    Ok(total)
}

/// `L^p` norm of a nodal field (trapezoidal weights, pointwise m-vector norm).
pub fn lp_norm(u: &DiscreteField, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid("Lebesgue exponent must be at least 1"));
    }
    let mut acc = 0.0;
    for id in 0..u.mesh.node_count() {
        let v = u.node_value(id);
        let mag = v[..u.m].iter().map(|a| a * a).sum::<f64>().sqrt();
        acc += u.mesh.node_weight(id) * mag.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// `L^p` norm of a per-element matrix field (element-measure weights).
pub fn lp_norm_element(g: &ElementField, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid("Lebesgue exponent must be at least 1"));
    }
    let mut acc = 0.0;
    for e in 0..g.mesh.element_count() {
        acc += g.mesh.element_measure(e) * g.mat(e).norm().powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// `W^{1,p}` norm: `(‖u‖_p^p + ‖Du‖_p^p)^{1/p}`.
pub fn sobolev_norm(u: &DiscreteField, p: f64) -> Result<f64> {
    let a = lp_norm(u, p)?;
    let b = lp_norm_element(&gradient(u), p)?;
    Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
}

/// Overwrite boundary nodes with the datum `g` and set the Dirichlet mask.
pub fn apply_boundary(u: &DiscreteField, g: &[Expr]) -> DiscreteField {
    let mut out = u.clone();
    for id in 0..u.mesh.node_count() {
        if u.mesh.is_boundary_node(id) {
            let x = u.mesh.node_coords(id);
            let mut v = [0.0; MAX_M];
            for (c, e) in g.iter().take(u.m).enumerate() {
                v[c] = e.eval(&x, &u.mesh.domain);
            }
            out.set_node_value(id, &v);
            out.boundary_mask[id] = true;
        }
    }
    out
}

/// Nodal interpolant of expressions over the whole mesh, with mask set.
pub fn interpolate_exprs(mesh: Mesh, m: usize, g: &[Expr]) -> DiscreteField {
    let mut out = DiscreteField::from_fn(mesh, m, |x| {
        let mut v = [0.0; MAX_M];
        for (c, e) in g.iter().take(m).enumerate() {
            v[c] = e.eval(x, &mesh.domain);
        }
        v
    });
    for id in 0..mesh.node_count() {
        out.boundary_mask[id] = mesh.is_boundary_node(id);
    }
    out
}

const BINARY_MAGIC: &[u8; 4] = b"PQF1";

/// Binary dump: magic `PQF1`, then little-endian u32 `n`, `m`,
/// `resolution[0..n]`, then node-major 64-bit float values.
pub fn write_binary(u: &DiscreteField, w: &mut impl Write) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    let n = u.mesh.n() as u32;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&(u.m as u32).to_le_bytes())?;
    for d in 0..u.mesh.n() {
        w.write_all(&(u.mesh.resolution[d] as u32).to_le_bytes())?;
    }
    for d in 0..u.mesh.n() {
        w.write_all(&u.mesh.domain.lo[d].to_le_bytes())?;
        w.write_all(&u.mesh.domain.hi[d].to_le_bytes())?;
    }
    for v in &u.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(r: &mut impl Read) -> Result<DiscreteField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse("bad field-dump magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let n = read_u32(r)? as usize;
    if n == 0 || n > MAX_DIM {
        return Err(Error::Parse("bad dimension in field dump".into()));
    }
    let m = read_u32(r)? as usize;
    let mut resolution = [0usize; MAX_DIM];
    for item in resolution.iter_mut().take(n) {
        *item = read_u32(r)? as usize;
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let (mut lo, mut hi) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    for d in 0..n {
        lo[d] = read_f64(r)?;
        hi[d] = read_f64(r)?;
    }
    let mesh = Mesh::new(BoxN::new(n, lo, hi)?, resolution)?;
    let mut u = DiscreteField::zeros(mesh, m);
    for v in u.values.iter_mut() {
        *v = read_f64(r)?;
    }
    for id in 0..mesh.node_count() {
        u.boundary_mask[id] = mesh.is_boundary_node(id);
    }
    Ok(u)
}

/// CSV export: one row per node, coordinates then components.
pub fn write_csv(u: &DiscreteField, w: &mut impl Write) -> Result<()> {
    let n = u.mesh.n();
    let mut header = (0..n).map(|d| format!("x{}", d + 1)).collect::<Vec<_>>();
    header.extend((0..u.m).map(|c| format!("u{}", c + 1)));
    writeln!(w, "{}", header.join(","))?;
    for id in 0..u.mesh.node_count() {
        let x = u.mesh.node_coords(id);
        let v = u.node_value(id);
        let mut row = (0..n).map(|d| format!("{}", x[d])).collect::<Vec<_>>();
        row.extend((0..u.m).map(|c| format!("{}", v[c])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
