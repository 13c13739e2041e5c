//! Small dense matrices for gradient values z in R^{n x m}.
//!
//! Row `i` holds the i-th partial derivative of a vector field, so `n` is the
//! spatial dimension and `m` the number of field components. Capacity is
//! fixed at [`MAX_ENTRIES`] entries to keep element loops allocation-free.

pub const MAX_ENTRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZMat {
    pub n: usize,
    pub m: usize,
    data: [f64; MAX_ENTRIES],
}

impl ZMat {
    pub fn zero(n: usize, m: usize) -> Self {
        assert!(n * m <= MAX_ENTRIES, "matrix {n}x{m} exceeds capacity");
        ZMat { n, m, data: [0.0; MAX_ENTRIES] }
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut z = ZMat::zero(n, m);
        for i in 0..n {
            for j in 0..m {
                z.data[i * m + j] = f(i, j);
            }
        }
        z
    }

    pub fn from_rows(n: usize, m: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * m);
        let mut z = ZMat::zero(n, m);
        z.data[..n * m].copy_from_slice(rows);
        z
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] = v;
    }

    #[inline]
    pub fn add_assign(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] += v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data[..self.n * self.m]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries().iter().map(|a| a * a).sum()
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        (0..self.m).map(|j| self.get(i, j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &ZMat) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, s: f64) -> ZMat {
        let mut out = *self;
        for v in out.data[..self.n * self.m].iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &ZMat) -> ZMat {
        let mut out = *self;
        for (a, b) in out.data[..self.n * self.m].iter_mut().zip(other.entries()) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &ZMat) -> ZMat {
        let mut out = *self;
        for (a, b) in out.data[..self.n * self.m].iter_mut().zip(other.entries()) {
            *a -= b;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_rows() {
        let z = ZMat::from_rows(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        assert_eq!(z.norm(), 5.0);
        assert_eq!(z.row_norm(0), 3.0);
        assert_eq!(z.row_norm(1), 4.0);
        assert_eq!(z.dot(&z), 25.0);
    }
}
