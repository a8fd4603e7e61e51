use serde::Serialize;

use crate::point::{Point, Sym2};

use super::Potential;

/// `χ(x) = A (L² − |x − x_c|²)³` inside the ball of radius `L`, zero outside.
///
/// The cube makes `χ` C² across the boundary of its support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bump {
    #[serde(serialize_with = "ser_point")]
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

fn ser_point<S: serde::Serializer>(p: &Point, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(p.coords().iter())
}

impl Bump {
    #[inline]
    fn gap(&self, x: &Point) -> (Point, f64) {
        let u = *x - self.center;
        (u, self.radius * self.radius - u.norm2())
    }

    pub fn value(&self, x: &Point) -> f64 {
        let (_, q) = self.gap(x);
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q * q * q
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let (u, q) = self.gap(x);
        if q <= 0.0 {
            Point::zero(x.dim())
        } else {
            u * (-6.0 * self.amplitude * q * q)
        }
    }

    pub fn hessian(&self, x: &Point) -> Sym2 {
        let (u, q) = self.gap(x);
        if q <= 0.0 {
            return Sym2::identity(x.dim(), 0.0);
        }
        let iso = -6.0 * self.amplitude * q * q;
        let outer = 24.0 * self.amplitude * q;
        match x.dim() {
            1 => Sym2::scalar(iso + outer * u[0] * u[0]),
            _ => Sym2::new2(iso + outer * u[0] * u[0], outer * u[0] * u[1], iso + outer * u[1] * u[1]),
        }
    }

    /// Exact oscillation `A L⁶` (χ ≥ 0 and vanishes at the rim).
    pub fn height(&self) -> f64 {
        self.amplitude * self.radius.powi(6)
    }
}

/// The split `V = W + χ` with the convexity constant of `W`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub bump: Option<Bump>,
    pub convexity: f64,
    /// Lipschitz constant of ∇χ (sup of the spectral norm of ∇²χ).
    pub chi_gradient_lipschitz: f64,
}

const SCAN_RADIUS: f64 = 6.0;
const SCAN_STEP: f64 = 1e-3;
const FIT_SAMPLES: usize = 4000;
const RADIUS_TRIALS: usize = 150;

impl Decomposition {
    /// Fits the bump for a potential with Hessian `hess`.
    ///
    /// 1D potentials: arbitrary non-convex interval. 2D potentials must be
    /// radially symmetric about the origin; constraints are sampled along
    /// the positive x-axis where the Hessian is diagonal.
    pub(super) fn fit(dim: usize, convexity: f64, hess: impl Fn(&Point) -> Sym2) -> Self {
        let at = |s: f64| if dim == 1 { Point::new1(s) } else { Point::new2(s, 0.0) };
        let n = (SCAN_RADIUS / SCAN_STEP) as i64;
        let lo_index = if dim == 1 { -n } else { 0 };
        let bad: Vec<f64> = (lo_index..=n)
            .map(|i| i as f64 * SCAN_STEP)
            .filter(|&s| hess(&at(s)).min_eigenvalue() < convexity)
            .collect();
        if bad.is_empty() {
            return Decomposition { bump: None, convexity, chi_gradient_lipschitz: 0.0 };
        }
        let (first, last) = (bad[0], bad[bad.len() - 1]);
        let center = if dim == 1 { 0.5 * (first + last) } else { 0.0 };
        let reach = (last - center).max(center - first) + SCAN_STEP;

        // constraint pairs (v_e, b_e): need v_e − A b_e ≥ c for each entry
        let feasible_range = |radius: f64| -> Option<(f64, f64)> {
            let unit = Bump { center: at(center), radius, amplitude: 1.0 };
            let (mut a_lo, mut a_hi) = (0.0f64, f64::INFINITY);
            for j in 0..FIT_SAMPLES {
                let s = if dim == 1 {
                    center + radius * (2.0 * (j as f64 + 0.5) / FIT_SAMPLES as f64 - 1.0)
                } else {
                    radius * j as f64 / FIT_SAMPLES as f64
                };
                let x = at(s);
                let hv = hess(&x);
                let hb = unit.hessian(&x);
                let entries = if dim == 1 { vec![(hv.xx, hb.xx)] } else { vec![(hv.xx, hb.xx), (hv.yy, hb.yy)] };
                for (v, b) in entries {
                    if b < 0.0 {
                        a_lo = a_lo.max((convexity - v) / -b);
                    } else if b > 0.0 {
                        a_hi = a_hi.min((v - convexity) / b);
                    } else if v < convexity {
                        return None;
                    }
                }
            }
            (a_lo <= a_hi).then_some((a_lo, a_hi))
        };

        let start = if dim == 1 {
            reach * 5f64.sqrt() * (1.0 + 1e-6)
        } else {
            // radial curvature must be fixed inside L/√5; tangential anywhere
            let radial_bad =
                (0..=n).map(|i| i as f64 * SCAN_STEP).filter(|&s| hess(&at(s)).xx < convexity).fold(0.0, f64::max);
            (radial_bad * 5f64.sqrt()).max(reach) * (1.0 + 1e-6)
        };
        let mut best: Option<(f64, f64, f64)> = None;
        for t in 0..RADIUS_TRIALS {
            let radius = start * (1.0 + 0.01 * t as f64);
            if let Some((a_lo, a_hi)) = feasible_range(radius) {
                let amplitude = (1.02 * a_lo).min(0.5 * (a_lo + a_hi));
                let osc = amplitude * radius.powi(6);
                if best.is_none_or(|b| osc < b.0) {
                    best = Some((osc, radius, amplitude));
                }
            }
        }
        let (_, radius, amplitude) = best.expect("no feasible bump radius for catalog potential");
        let bump = Bump { center: at(center), radius, amplitude };
        let lipschitz = (0..=2000)
            .map(|i| {
                let rho = radius * i as f64 / 2000.0;
                let q = radius * radius - rho * rho;
                let iso = 6.0 * amplitude * q * q;
                iso.abs().max((24.0 * amplitude * q * rho * rho - iso).abs())
            })
            .fold(0.0, f64::max);
        Decomposition { bump: Some(bump), convexity, chi_gradient_lipschitz: lipschitz }
    }

    pub fn support_radius(&self) -> f64 {
        self.bump.map_or(0.0, |b| b.center.norm() + b.radius)
    }

    pub fn chi_value(&self, x: &Point) -> f64 {
        self.bump.map_or(0.0, |b| b.value(x))
    }

    pub fn chi_gradient(&self, x: &Point) -> Point {
        self.bump.map_or(Point::zero(x.dim()), |b| b.gradient(x))
    }

    pub fn chi_hessian(&self, x: &Point) -> Sym2 {
        self.bump.map_or(Sym2::identity(x.dim(), 0.0), |b| b.hessian(x))
    }
}

/// `osc(χ) = sup χ − inf χ`, found by a grid scan of the support (step at most
/// 1e-3 of the support radius) followed by golden-section refinement.
pub fn osc_chi(potential: &Potential) -> f64 {
    let dec = potential.decomposition();
    let Some(bump) = dec.bump else {
        return 0.0;
    };
    let dim = potential.dim();
    let chi = |x: &Point| dec.chi_value(x);
    let radius = bump.radius;
    let lo = bump.center.map(|c| c - radius);
    let n: usize = if dim == 1 { 2000 } else { 1000 };
    let step = 2.0 * radius / n as f64;
    let node = |i: usize, j: usize| -> Point {
        if dim == 1 {
            Point::new1(lo[0] + i as f64 * step)
        } else {
            Point::new2(lo[0] + i as f64 * step, lo[1] + j as f64 * step)
        }
    };
    // χ = 0 just outside its support
    let outside = bump.center.map(|c| c + 1.5 * radius);
    let (mut best_hi, mut best_lo) = ((chi(&outside), outside), (chi(&outside), outside));
    let rows = if dim == 1 { 1 } else { n + 1 };
    for j in 0..rows {
        for i in 0..=n {
            let x = node(i, j);
            let v = chi(&x);
            if v > best_hi.0 {
                best_hi = (v, x);
            }
            if v < best_lo.0 {
                best_lo = (v, x);
            }
        }
    }
    let sup = refine(&chi, best_hi.1, step, 1.0);
    let inf = refine(&chi, best_lo.1, step, -1.0);
    sup.max(best_hi.0) - inf.min(best_lo.0)
}

/// Coordinate-wise golden-section search of `sign * f` around `x` within ±step.
fn refine(f: &impl Fn(&Point) -> f64, mut x: Point, step: f64, sign: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _sweep in 0..3 {
        for axis in 0..x.dim() {
            let along = |t: f64| {
                let mut c = [x[0], if x.dim() == 2 { x[1] } else { 0.0 }];
                c[axis] = t;
                Point::from_slice(&c[..x.dim()]).unwrap()
            };
            let (mut a, mut b) = (x[axis] - step, x[axis] + step);
            for _ in 0..80 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if sign * f(&along(c)) > sign * f(&along(d)) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let t = 0.5 * (a + b);
            if sign * f(&along(t)) >= sign * f(&x) {
                x = along(t);
            }
        }
    }
    f(&x)
}
