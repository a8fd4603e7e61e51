//! C² two-well spline: quintic Hermite segments on [-1, 0] and [0, 1] joined to
//! convex quartic tails.

use crate::error::{Error, Result};

/// Curvature of the tails beyond the minima, on top of the quadratic term.
const TAIL_QUARTIC: f64 = 0.25;

/// Interior curvature at the barrier top, relative to the barrier height.
const TOP_CURVATURE_PER_BARRIER: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoWellSpline {
    pub h_minus: f64,
    pub h_plus: f64,
    pub barrier: f64,
    left: [f64; 6],
    right: [f64; 6],
}

/// Coefficients of the quintic p on [0, 1] with p, p', p'' prescribed at both ends.
pub(crate) fn quintic_hermite(y0: f64, d0: f64, s0: f64, y1: f64, d1: f64, s1: f64) -> [f64; 6] {
    let dy = y1 - y0;
    [
        y0,
        d0,
        0.5 * s0,
        10.0 * dy - 6.0 * d0 - 4.0 * d1 - 0.5 * (3.0 * s0 - s1),
        -15.0 * dy + 8.0 * d0 + 7.0 * d1 + 0.5 * (3.0 * s0 - 2.0 * s1),
        6.0 * dy - 3.0 * d0 - 3.0 * d1 - 0.5 * (s0 - s1),
    ]
}

#[inline]
fn poly(c: &[f64; 6], t: f64) -> (f64, f64, f64) {
    let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    let d = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
    let s = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
    (v, d, s)
}

impl TwoWellSpline {
    pub fn new(h_minus: f64, h_plus: f64, barrier: f64) -> Result<Self> {
        for (name, v) in [("h_minus", h_minus), ("h_plus", h_plus), ("barrier", barrier)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("spline_twowell: {name} must be positive, got {v}")));
            }
        }
        let top = -TOP_CURVATURE_PER_BARRIER * barrier;
        let spline = TwoWellSpline {
            h_minus,
            h_plus,
            barrier,
            left: quintic_hermite(0.0, 0.0, h_minus, barrier, 0.0, top),
            right: quintic_hermite(barrier, 0.0, top, 0.0, 0.0, h_plus),
        };
        // each segment must be strictly monotone so that -1, 0, 1 are the only
        // critical points
        let n = 4000;
        for i in 1..n {
            let t = i as f64 / n as f64;
            if spline.left_at(t).1 <= 0.0 || spline.right_at(t).1 >= 0.0 {
                return Err(Error::Config(format!(
                    "spline_twowell({h_minus}, {h_plus}, {barrier}) has a non-monotone segment"
                )));
            }
        }
        Ok(spline)
    }

    fn left_at(&self, t: f64) -> (f64, f64, f64) {
        poly(&self.left, t)
    }

    fn right_at(&self, t: f64) -> (f64, f64, f64) {
        poly(&self.right, t)
    }

    /// Value, first and second derivative at x.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        if x <= -1.0 {
            let u = x + 1.0;
            tail(self.h_minus, u)
        } else if x <= 0.0 {
            poly(&self.left, x + 1.0)
        } else if x <= 1.0 {
            poly(&self.right, x)
        } else {
            tail(self.h_plus, x - 1.0)
        }
    }
}

#[inline]
fn tail(h: f64, u: f64) -> (f64, f64, f64) {
    let u2 = u * u;
    (0.5 * h * u2 + TAIL_QUARTIC * u2 * u2, h * u + 4.0 * TAIL_QUARTIC * u2 * u, h + 12.0 * TAIL_QUARTIC * u2)
}
