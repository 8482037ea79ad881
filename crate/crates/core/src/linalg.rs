//! Fixed-size 2-D vector and symmetric 2x2 matrix, generic over [`Scalar`].

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn lift(v: Vec2<f64>) -> Self {
        Self::new(T::cst(v.x), T::cst(v.y))
    }
}

impl Vec2<f64> {
    pub const ZERO: Vec2<f64> = Vec2 { x: 0.0, y: 0.0 };

    pub fn distance(self, o: Self) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2<T = f64> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Scalar> Sym2<T> {
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::cst(0.0), b)
    }

    pub fn lift(m: Sym2<f64>) -> Self {
        Self::new(T::cst(m.xx), T::cst(m.xy), T::cst(m.yy))
    }

    pub fn trace(self) -> T {
        self.xx + self.yy
    }

    pub fn det(self) -> T {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    pub fn add_diag(self, s: T) -> Self {
        Self::new(self.xx + s, self.xy, self.yy + s)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    /// `u^T M u`.
    pub fn quad(self, u: Vec2<T>) -> T {
        u.x * u.x * self.xx + u.x * u.y * self.xy * 2.0 + u.y * u.y * self.yy
    }

    pub fn mul_vec(self, u: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * u.x + self.xy * u.y, self.xy * u.x + self.yy * u.y)
    }

    pub fn inverse(self) -> Self {
        let det = self.det();
        Self::new(self.yy / det, -self.xy / det, self.xx / det)
    }
}

impl Sym2<f64> {
    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        (mean - r, mean + r)
    }

    /// Clips eigenvalues from below at `floor`. Returns whether anything changed.
    pub fn floor_eigenvalues(&mut self, floor: f64) -> bool {
        if !(self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()) {
            *self = Self::identity().scale(floor);
            return true;
        }
        let (lo, hi) = self.eigenvalues();
        if lo >= floor {
            return false;
        }
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        let hi = hi.max(floor);
        if r == 0.0 {
            *self = Self::diag(hi, hi);
            return true;
        }
        // eigenvector of the largest eigenvalue: angle t with cos 2t = half_diff/r
        let c2 = half_diff / r;
        let s2 = self.xy / r;
        let lo = floor;
        let mean = 0.5 * (hi + lo);
        let half = 0.5 * (hi - lo);
        *self = Self::new(mean + half * c2, half * s2, mean - half * c2);
        true
    }
}

/// Full (not necessarily symmetric) 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T = f64> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn from_rows(r0: Vec2<T>, r1: Vec2<T>) -> Self {
        Self {
            m: [[r0.x, r0.y], [r1.x, r1.y]],
        }
    }

    /// `A P A^T` for symmetric `P`.
    pub fn congruence(self, p: Sym2<T>) -> Sym2<T> {
        let a = self.m;
        let r0 = p.mul_vec(Vec2::new(a[0][0], a[0][1]));
        let r1 = p.mul_vec(Vec2::new(a[1][0], a[1][1]));
        Sym2::new(
            a[0][0] * r0.x + a[0][1] * r0.y,
            a[1][0] * r0.x + a[1][1] * r0.y,
            a[1][0] * r1.x + a[1][1] * r1.y,
        )
    }

    pub fn transpose(self) -> Self {
        let a = self.m;
        Self {
            m: [[a[0][0], a[1][0]], [a[0][1], a[1][1]]],
        }
    }

    pub fn mul(self, o: Self) -> Self {
        let (a, b) = (self.m, o.m);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Self {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn mul_vec(self, u: Vec2<T>) -> Vec2<T> {
        let a = self.m;
        Vec2::new(a[0][0] * u.x + a[0][1] * u.y, a[1][0] * u.x + a[1][1] * u.y)
    }

    pub fn sym(p: Sym2<T>) -> Self {
        Self {
            m: [[p.xx, p.xy], [p.xy, p.yy]],
        }
    }
}
