//! Axis-aligned geometry in dimension 1 or 2: boxes, cubes, distances.
//!
//! All spatial data lives in fixed-size arrays of length [`MAX_DIM`]; in one
//! dimension only the first entry is meaningful.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 2;

/// A point (or vector) in R^n, n <= MAX_DIM.
pub type Point = [f64; MAX_DIM];

pub fn norm(v: &Point, n: usize) -> f64 {
    v[..n].iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Axis-aligned box `[lo_1,hi_1] x ... x [lo_n,hi_n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxN {
    pub n: usize,
    pub lo: Point,
    pub hi: Point,
}

impl BoxN {
    pub fn new(n: usize, lo: Point, hi: Point) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::invalid(format!("dimension {n} not in 1..={MAX_DIM}")));
        }
        for d in 0..n {
            if !(hi[d] - lo[d]).is_finite() || hi[d] <= lo[d] {
                return Err(Error::invalid("box sides must be positive and finite"));
            }
        }
        Ok(BoxN { n, lo, hi })
    }

    pub fn unit_interval() -> Self {
        BoxN { n: 1, lo: [0.0, 0.0], hi: [1.0, 0.0] }
    }

    pub fn unit_square() -> Self {
        BoxN { n: 2, lo: [0.0, 0.0], hi: [1.0, 1.0] }
    }

    /// `(-1,1)^2`, the centered square used by the pinch experiments.
    pub fn centered_square() -> Self {
        BoxN { n: 2, lo: [-1.0, -1.0], hi: [1.0, 1.0] }
    }

    pub fn side(&self, d: usize) -> f64 {
        self.hi[d] - self.lo[d]
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; MAX_DIM];
        for d in 0..self.n {
            c[d] = 0.5 * (self.lo[d] + self.hi[d]);
        }
        c
    }

    pub fn volume(&self) -> f64 {
        (0..self.n).map(|d| self.side(d)).product()
    }

    pub fn diam(&self) -> f64 {
        (0..self.n).map(|d| self.side(d).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.n).all(|d| x[d] >= self.lo[d] && x[d] <= self.hi[d])
    }

    pub fn contains_box(&self, other: &BoxN) -> bool {
        (0..self.n).all(|d| other.lo[d] >= self.lo[d] && other.hi[d] <= self.hi[d])
    }

    /// Distance from an interior point to the boundary (0 outside).
    pub fn dist_to_boundary(&self, x: &Point) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        (0..self.n)
            .map(|d| (x[d] - self.lo[d]).min(self.hi[d] - x[d]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance from a point to this box as a closed set.
    pub fn dist_to_set(&self, x: &Point) -> f64 {
        let mut s = 0.0;
        for d in 0..self.n {
            let g = (self.lo[d] - x[d]).max(x[d] - self.hi[d]).max(0.0);
            s += g * g;
        }
        s.sqrt()
    }

    /// Corner `k` with bit `d` of `k` selecting the high side along axis `d`.
    pub fn corner(&self, k: usize) -> Point {
        let mut c = [0.0; MAX_DIM];
        for d in 0..self.n {
            c[d] = if (k >> d) & 1 == 1 { self.hi[d] } else { self.lo[d] };
        }
        c
    }

    /// The closed quarter-box anchored at corner `k`.
    pub fn quadrant(&self, k: usize) -> BoxN {
        let c = self.center();
        let mut lo = self.lo;
        let mut hi = c;
        for d in 0..self.n {
            if (k >> d) & 1 == 1 {
                lo[d] = c[d];
                hi[d] = self.hi[d];
            }
        }
        BoxN { n: self.n, lo, hi }
    }
}

/// Axis-aligned cube given by center and side length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub n: usize,
    pub center: Point,
    pub side: f64,
}

impl Cube {
    pub fn dilate(&self, factor: f64) -> Cube {
        Cube { n: self.n, center: self.center, side: self.side * factor }
    }

    pub fn as_box(&self) -> BoxN {
        let h = 0.5 * self.side;
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for d in 0..self.n {
            lo[d] = self.center[d] - h;
            hi[d] = self.center[d] + h;
        }
        BoxN { n: self.n, lo, hi }
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.n as i32)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.as_box().contains(x)
    }

    /// Volume of the intersection with another cube (0 when disjoint).
    pub fn intersection_volume(&self, other: &Cube) -> f64 {
        let a = self.as_box();
        let b = other.as_box();
        let mut v = 1.0;
        for d in 0..self.n {
            let w = a.hi[d].min(b.hi[d]) - a.lo[d].max(b.lo[d]);
            if w <= 0.0 {
                return 0.0;
            }
            v *= w;
        }
        v
    }

    pub fn intersects(&self, other: &Cube) -> bool {
        let a = self.as_box();
        let b = other.as_box();
        (0..self.n).all(|d| a.lo[d] <= b.hi[d] && b.lo[d] <= a.hi[d])
    }
}

/// Euclidean distance between two axis-aligned boxes as closed sets.
pub fn box_distance(a: &BoxN, b: &BoxN) -> f64 {
    let mut s = 0.0;
    for d in 0..a.n {
        let g = (b.lo[d] - a.hi[d]).max(a.lo[d] - b.hi[d]).max(0.0);
        s += g * g;
    }
    s.sqrt()
}

/// An open domain for covering construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Box(BoxN),
    /// Outer box minus a closed rectangular obstacle strictly inside it.
    BoxWithHole { outer: BoxN, hole: BoxN },
    /// All of R^n; only valid as an error-path input.
    EntireSpace { n: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.n,
            Domain::BoxWithHole { outer, .. } => outer.n,
            Domain::EntireSpace { n } => *n,
        }
    }

    pub fn bounding_box(&self) -> Option<BoxN> {
        match self {
            Domain::Box(b) => Some(*b),
            Domain::BoxWithHole { outer, .. } => Some(*outer),
            Domain::EntireSpace { .. } => None,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Domain::Box(b) => b.contains(x),
            Domain::BoxWithHole { outer, hole } => outer.contains(x) && !hole.contains(x),
            Domain::EntireSpace { .. } => true,
        }
    }

    /// Distance from an axis-aligned box inside the domain to the domain boundary.
    pub fn dist_box_to_boundary(&self, b: &BoxN) -> f64 {
        match self {
            Domain::Box(outer) => {
                if !outer.contains_box(b) {
                    return 0.0;
                }
                (0..outer.n)
                    .map(|d| (b.lo[d] - outer.lo[d]).min(outer.hi[d] - b.hi[d]))
                    .fold(f64::INFINITY, f64::min)
            }
            Domain::BoxWithHole { outer, hole } => {
                let d_outer = Domain::Box(*outer).dist_box_to_boundary(b);
                if d_outer == 0.0 {
                    return 0.0;
                }
                d_outer.min(box_distance(b, hole))
            }
            Domain::EntireSpace { .. } => f64::INFINITY,
        }
    }

    pub fn dist_point_to_boundary(&self, x: &Point) -> f64 {
        match self {
            Domain::Box(b) => b.dist_to_boundary(x),
            Domain::BoxWithHole { outer, hole } => {
                if !self.contains(x) {
                    return 0.0;
                }
                outer.dist_to_boundary(x).min(hole.dist_to_set(x))
            }
            Domain::EntireSpace { .. } => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_of_unit_square() {
        let b = BoxN::unit_square();
        let q0 = b.quadrant(0);
        assert_eq!(q0.lo, [0.0, 0.0]);
        assert_eq!(q0.hi, [0.5, 0.5]);
        let q3 = b.quadrant(3);
        assert_eq!(q3.lo, [0.5, 0.5]);
        assert_eq!(q3.hi, [1.0, 1.0]);
    }

    #[test]
    fn point_to_quadrant_distance() {
        let b = BoxN::unit_square();
        let q = b.quadrant(0);
        // At (0.75, 0.25) only the x-overshoot counts.
        assert!((q.dist_to_set(&[0.75, 0.25]) - 0.25).abs() < 1e-15);
        // Diagonal overshoot.
        let d = q.dist_to_set(&[0.8, 0.9]);
        assert!((d - (0.3f64.powi(2) + 0.4f64.powi(2)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_with_hole_distances() {
        let outer = BoxN::unit_square();
        let hole = BoxN::new(2, [0.4, 0.4], [0.6, 0.6]).unwrap();
        let dom = Domain::BoxWithHole { outer, hole };
        assert!(!dom.contains(&[0.5, 0.5]));
        assert!(dom.contains(&[0.1, 0.1]));
        let b = BoxN::new(2, [0.05, 0.05], [0.15, 0.15]).unwrap();
        let d = dom.dist_box_to_boundary(&b);
        // Nearer to the outer boundary (0.05) than to the hole.
        assert!((d - 0.05).abs() < 1e-15);
    }
}
