use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{Point, Sym2};

use super::Potential;

pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const MERGE_RADIUS: f64 = 1e-6;
pub const GLOBAL_VALUE_TOLERANCE: f64 = 1e-9;
const MAX_NEWTON_ITERATIONS: usize = 100;
const EIGEN_TOLERANCE: f64 = 1e-8;

/// Axis-aligned search region `[lo, hi]` per coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub lo: Point,
    pub hi: Point,
}

impl SearchBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        SearchBox { lo: Point::zero(dim).map(|_| -half_width), hi: Point::zero(dim).map(|_| half_width) }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..x.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    LocalMin,
    LocalMax,
    Saddle,
    /// A zero Hessian eigenvalue (e.g. points on a ring of minima).
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    #[serde(serialize_with = "ser_point")]
    pub location: Point,
    pub value: f64,
    pub kind: CriticalKind,
    pub hessian_det: f64,
    pub min_eigenvalue: f64,
    pub is_global_min: bool,
}

fn ser_point<S: serde::Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.coords().iter())
}

/// Refined critical points plus the grid candidates Newton could not resolve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CriticalScan {
    pub points: Vec<CriticalPoint>,
    #[serde(skip)]
    pub unresolved: Vec<Point>,
}

impl CriticalScan {
    pub fn minima(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.kind == CriticalKind::LocalMin)
    }

    pub fn global_minima(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.is_global_min)
    }
}

/// One-dimensional basins of the local minima. The boundary between two
/// adjacent minima is the local maximum between them, or their midpoint when
/// no maximum was resolved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Basins {
    pub minima: Vec<f64>,
    pub boundaries: Vec<f64>,
}

impl Basins {
    pub fn from_scan(scan: &CriticalScan) -> Result<Self> {
        if scan.points.iter().any(|p| p.location.dim() != 1) {
            return Err(Error::Unsupported("basins are defined for one-dimensional potentials".into()));
        }
        let minima: Vec<f64> = scan.minima().map(|p| p.location.x()).collect();
        if minima.is_empty() {
            return Err(Error::Unsupported("potential has no nondegenerate local minimum".into()));
        }
        let boundaries = minima
            .windows(2)
            .map(|w| {
                scan.points
                    .iter()
                    .filter(|p| p.kind == CriticalKind::LocalMax)
                    .map(|p| p.location.x())
                    .find(|&x| x > w[0] && x < w[1])
                    .unwrap_or(0.5 * (w[0] + w[1]))
            })
            .collect();
        Ok(Basins { minima, boundaries })
    }

    /// Index of the basin containing `x`.
    pub fn locate(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn len(&self) -> usize {
        self.minima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minima.is_empty()
    }

    /// Index of the basin whose minimum is closest to `x`.
    pub fn nearest_minimum(&self, x: f64) -> usize {
        (0..self.minima.len())
            .min_by(|&i, &j| (self.minima[i] - x).abs().total_cmp(&(self.minima[j] - x).abs()))
            .unwrap()
    }
}

pub fn classify(h: &Sym2) -> CriticalKind {
    let (lo, hi) = h.eigenvalues();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = EIGEN_TOLERANCE * scale;
    if lo.abs() <= tol || hi.abs() <= tol {
        CriticalKind::Degenerate
    } else if lo > 0.0 {
        CriticalKind::LocalMin
    } else if hi < 0.0 {
        CriticalKind::LocalMax
    } else {
        CriticalKind::Saddle
    }
}

/// Damped Newton on ∇V = 0 with a Levenberg shift for indefinite steps that
/// fail to reduce |∇V|.
fn newton(potential: &Potential, start: Point, bounds: &SearchBox) -> Option<Point> {
    let mut x = start;
    let mut g = potential.gradient(&x);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if g.norm() < NEWTON_TOLERANCE {
            return Some(x);
        }
        let h = potential.hessian(&x);
        let Some(full) = h.solve(&g) else {
            // singular Hessian: fall back to a small gradient step
            x = x - g * 1e-3;
            g = potential.gradient(&x);
            continue;
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x - full * step;
            let gt = potential.gradient(&trial);
            if gt.is_finite() && gt.norm() < g.norm() {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return (g.norm() < 1e3 * NEWTON_TOLERANCE).then_some(x);
        }
        if !bounds.contains(&x) {
            return None;
        }
    }
    (g.norm() < NEWTON_TOLERANCE).then_some(x)
}

/// Grid nodes where |∇V| is a local minimum over the neighbours and small
/// relative to the local Hessian scale.
fn candidates(potential: &Potential, bounds: &SearchBox, step: f64) -> Vec<Point> {
    let dim = potential.dim();
    let counts: Vec<usize> =
        (0..dim).map(|i| ((bounds.hi[i] - bounds.lo[i]) / step).round().max(1.0) as usize + 1).collect();
    let ny = if dim == 2 { counts[1] } else { 1 };
    let node = |i: usize, j: usize| -> Point {
        if dim == 1 {
            Point::new1(bounds.lo[0] + i as f64 * step)
        } else {
            Point::new2(bounds.lo[0] + i as f64 * step, bounds.lo[1] + j as f64 * step)
        }
    };
    let nx = counts[0];
    let grad: Vec<f64> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| potential.gradient(&node(i, j)).norm())
        .collect();
    let at = |i: usize, j: usize| grad[j * nx + i];
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let here = at(i, j);
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if (di, dj) == (0, 0) || (dim == 1 && dj != 0) {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    if at(ii as usize, jj as usize) < here {
                        is_min = false;
                    }
                }
            }
            let x = node(i, j);
            let h = potential.hessian(&x);
            let (lo, hi) = h.eigenvalues();
            let scale = lo.abs().max(hi.abs()).max(1e-3);
            if is_min && here <= 2.0 * step * scale {
                out.push(x);
            }
        }
    }
    out
}

/// Coarse-grid candidate detection, Newton refinement, merging and classification.
pub fn find_critical_points(potential: &Potential, bounds: &SearchBox, step: f64) -> Result<CriticalScan> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("grid step must be positive, got {step}")));
    }
    if bounds.lo.dim() != potential.dim() || bounds.hi.dim() != potential.dim() {
        return Err(Error::Domain("search box dimension does not match potential".into()));
    }
    let cells: f64 = (0..potential.dim()).map(|i| (bounds.hi[i] - bounds.lo[i]) / step + 1.0).product();
    if cells > 1e7 {
        return Err(Error::Config(format!("critical-point grid too large ({cells:.0} nodes)")));
    }
    let mut scan = CriticalScan::default();
    let mut found: Vec<Point> = Vec::new();
    for c in candidates(potential, bounds, step) {
        match newton(potential, c, bounds) {
            Some(x) => {
                if found.iter().all(|y| (*y - x).norm() > MERGE_RADIUS) {
                    found.push(x);
                }
            }
            None => scan.unresolved.push(c),
        }
    }
    found.sort_by(|a, b| a.coords().partial_cmp(b.coords()).unwrap());
    for x in found {
        let h = potential.hessian(&x);
        scan.points.push(CriticalPoint {
            location: x,
            value: potential.value(&x),
            kind: classify(&h),
            hessian_det: h.det(),
            min_eigenvalue: h.min_eigenvalue(),
            is_global_min: false,
        });
    }
    mark_global_minima(&mut scan.points);
    Ok(scan)
}

/// Flags minima within the value tolerance of the lowest minimum; only value
/// differences enter, so the flags are unchanged by an additive constant.
pub fn mark_global_minima(points: &mut [CriticalPoint]) {
    let lowest =
        points.iter().filter(|p| p.kind == CriticalKind::LocalMin).map(|p| p.value).fold(f64::INFINITY, f64::min);
    for p in points.iter_mut() {
        p.is_global_min = p.kind == CriticalKind::LocalMin && p.value - lowest <= GLOBAL_VALUE_TOLERANCE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(p: &Potential) -> CriticalScan {
        p.critical_points().unwrap()
    }

    #[test]
    fn quadratic_has_single_minimum() {
        for dim in [1, 2] {
            let s = scan(&Potential::quadratic(dim, 1.0).unwrap());
            assert_eq!(s.points.len(), 1);
            let p = s.points[0];
            assert_eq!(p.kind, CriticalKind::LocalMin);
            assert!(p.location.norm() < 1e-10 && p.value.abs() < 1e-20 && p.is_global_min);
        }
    }

    #[test]
    fn double_well_min_max_min() {
        let s = scan(&Potential::double_well());
        let kinds: Vec<_> = s.points.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, [CriticalKind::LocalMin, CriticalKind::LocalMax, CriticalKind::LocalMin]);
        // roots of 4x(x² − 1)
        for (p, root) in s.points.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((p.location.x() - root).abs() < 1e-10);
        }
        assert!(s.points[0].is_global_min && s.points[2].is_global_min && !s.points[1].is_global_min);
        assert!((s.points[0].hessian_det - 8.0).abs() < 1e-8);
        assert!(s.unresolved.is_empty());
    }

    #[test]
    fn spline_twowell_construction_values() {
        let s = scan(&Potential::spline_twowell(2.0, 8.0, 1.0).unwrap());
        assert_eq!(s.points.len(), 3);
        let (l, m, r) = (s.points[0], s.points[1], s.points[2]);
        assert!((l.location.x() + 1.0).abs() < 1e-10 && (l.hessian_det - 2.0).abs() < 1e-9);
        assert!((r.location.x() - 1.0).abs() < 1e-10 && (r.hessian_det - 8.0).abs() < 1e-9);
        assert_eq!(m.kind, CriticalKind::LocalMax);
        assert!((m.value - 1.0).abs() < 1e-12);
        assert!(l.is_global_min && r.is_global_min);
    }

    #[test]
    fn tilted_well_minimum_at_center() {
        let s = scan(&Potential::tilted_well(1.0).unwrap());
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0].location.x() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mexican_hat_center_is_max() {
        let s = scan(&Potential::mexican_2d());
        let center = s.points.iter().find(|p| p.location.norm() < 1e-8).unwrap();
        assert_eq!(center.kind, CriticalKind::LocalMax);
        for p in s.points.iter().filter(|p| p.location.norm() > 0.5) {
            assert!((p.location.norm() - 1.0).abs() < 1e-8);
            assert_eq!(p.kind, CriticalKind::Degenerate);
        }
    }

    #[test]
    fn global_flags_ignore_constant_shift() {
        let base = scan(&Potential::double_well());
        let shifted = scan(&Potential::double_well().with_offset(1e4).unwrap());
        let flags = |s: &CriticalScan| s.points.iter().map(|p| p.is_global_min).collect::<Vec<_>>();
        assert_eq!(flags(&base), flags(&shifted));
    }

    #[test]
    fn double_well_basins_split_at_barrier() {
        let b = Basins::from_scan(&scan(&Potential::double_well())).unwrap();
        assert_eq!(b.boundaries.len(), 1);
        assert!(b.boundaries[0].abs() < 1e-10);
        assert_eq!((b.locate(-0.3), b.locate(0.2), b.locate(5.0)), (0, 1, 1));
        assert_eq!(b.nearest_minimum(0.8), 1);
    }

    #[test]
    fn rejects_bad_step() {
        let p = Potential::double_well();
        assert!(find_critical_points(&p, &p.default_search_box(), 0.0).is_err());
    }
}
