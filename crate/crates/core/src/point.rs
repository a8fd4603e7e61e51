//! Points in R^1 or R^2 and symmetric 2x2 matrices.
//!
//! The catalog only needs d <= 2, so both types are fixed-size and `Copy`.
//! In one dimension the second coordinate is carried as zero and ignored.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: usize,
    c: [f64; 2],
}

impl Point {
    pub fn new1(x: f64) -> Self {
        Point { dim: 1, c: [x, 0.0] }
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point { dim: 2, c: [x, y] }
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        Point { dim, c: [0.0; 2] }
    }

    /// Builds a point from a slice of length 1 or 2.
    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match v {
            [x] => Some(Point::new1(*x)),
            [x, y] => Some(Point::new2(*x, *y)),
            _ => None,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        self.c[0] * other.c[0] + self.c[1] * other.c[1]
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.c[0].is_finite() && self.c[1].is_finite()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Point {
        let mut out = *self;
        for v in out.c[..self.dim].iter_mut() {
            *v = f(*v);
        }
        out
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point { dim: self.dim, c: [self.c[0] + o.c[0], self.c[1] + o.c[1]] }
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        self.c[0] += o.c[0];
        self.c[1] += o.c[1];
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point { dim: self.dim, c: [self.c[0] - o.c[0], self.c[1] - o.c[1]] }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point { dim: self.dim, c: [self.c[0] * s, self.c[1] * s] }
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// Symmetric matrix of size 1x1 or 2x2 (Hessians).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub dim: usize,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn scalar(v: f64) -> Self {
        Sym2 { dim: 1, xx: v, xy: 0.0, yy: 0.0 }
    }

    pub fn new2(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { dim: 2, xx, xy, yy }
    }

    pub fn identity(dim: usize, s: f64) -> Self {
        match dim {
            1 => Sym2::scalar(s),
            _ => Sym2::new2(s, 0.0, s),
        }
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            1 => self.xx,
            _ => self.xx + self.yy,
        }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.xx,
            _ => self.xx * self.yy - self.xy * self.xy,
        }
    }

    /// Eigenvalues in ascending order; in 1D both entries equal the scalar.
    pub fn eigenvalues(&self) -> (f64, f64) {
        if self.dim == 1 {
            return (self.xx, self.xx);
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let rad = half_diff.hypot(self.xy);
        (mean - rad, mean + rad)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// Solves `self * s = rhs`; `None` when the matrix is numerically singular.
    pub fn solve(&self, rhs: &Point) -> Option<Point> {
        let det = self.det();
        let scale = self.xx.abs().max(self.yy.abs()).max(self.xy.abs()).max(1e-300);
        if det.abs() <= 1e-14 * scale * scale.max(1.0) {
            return None;
        }
        match self.dim {
            1 => Some(Point::new1(rhs.x() / self.xx)),
            _ => Some(Point::new2(
                (self.yy * rhs[0] - self.xy * rhs[1]) / det,
                (self.xx * rhs[1] - self.xy * rhs[0]) / det,
            )),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2 { dim: self.dim, xx: self.xx - o.xx, xy: self.xy - o.xy, yy: self.yy - o.yy }
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2 { dim: self.dim, xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }
}
