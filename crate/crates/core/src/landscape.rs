//! Minimax barrier heights on grid graphs, the maximal height `m(t)` of
//! `V_t = V + |x|²/a(t)`, and the spectral gap of a reversible discretized
//! generator.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::potential::Potential;
use crate::schedule::{annealing_state, Schedule};
use crate::table::CsvTable;
use crate::tridiag::SymTridiagonal;

pub const MAX_NODES: usize = 10_000_000;
/// Relative change of `m` under grid halving above which a warning is raised.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;
pub const STURM_TOLERANCE: f64 = 1e-12;

/// `V_t` sampled on a uniform grid over `[-L, L]^d` with `L` a multiple of `h`;
/// nodes are `(i − n)h`, so the grid is symmetric about the origin.
#[derive(Clone, Debug)]
pub struct GridGraph {
    pub dim: usize,
    pub h: f64,
    /// Nodes per axis on each side of the origin.
    pub half: usize,
    pub values: Vec<f64>,
}

/// Total-order key for heap entries of finite values.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl GridGraph {
    /// Samples `V + |x|²/a` (`a = ∞` allowed) on `[-L, L]^d`.
    pub fn build(potential: &Potential, a: f64, half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_width > 0.0) {
            return Err(Error::Config(format!("grid needs h > 0 and a positive box (got h = {h})")));
        }
        if !(a > 0.0) {
            return Err(Error::Domain(format!("a must be positive, got {a}")));
        }
        let dim = potential.dim();
        let half = (half_width / h).ceil() as usize;
        let side = 2 * half + 1;
        let nodes = if dim == 1 { side } else { side.saturating_mul(side) };
        if nodes >= MAX_NODES {
            return Err(Error::Config(format!("grid with {nodes} nodes exceeds the 1e7 node limit")));
        }
        let mut g = GridGraph { dim, h, half, values: Vec::with_capacity(nodes) };
        for k in 0..nodes {
            let x = g.position(k);
            let conf = if a.is_finite() { x.norm2() / a } else { 0.0 };
            g.values.push(potential.value(&x) + conf);
        }
        Ok(g)
    }

    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, k: usize) -> Point {
        let c = |i: usize| (i as f64 - self.half as f64) * self.h;
        if self.dim == 1 {
            Point::new1(c(k))
        } else {
            Point::new2(c(k % self.side()), c(k / self.side()))
        }
    }

    /// Nearest node to `x` (clamped into the box).
    pub fn snap(&self, x: &Point) -> usize {
        let idx = |v: f64| ((v / self.h).round() + self.half as f64).clamp(0.0, (self.side() - 1) as f64) as usize;
        if self.dim == 1 {
            idx(x[0])
        } else {
            idx(x[0]) + self.side() * idx(x[1])
        }
    }

    pub fn neighbours(&self, k: usize, out: &mut Vec<usize>) {
        out.clear();
        let s = self.side() as i64;
        if self.dim == 1 {
            if k > 0 {
                out.push(k - 1);
            }
            if k + 1 < self.len() {
                out.push(k + 1);
            }
            return;
        }
        let (i, j) = ((k as i64) % s, (k as i64) / s);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (ii, jj) = (i + di, j + dj);
                if (di, dj) != (0, 0) && ii >= 0 && jj >= 0 && ii < s && jj < s {
                    out.push((jj * s + ii) as usize);
                }
            }
        }
    }

    pub fn are_neighbours(&self, a: usize, b: usize) -> bool {
        let mut n = Vec::new();
        self.neighbours(a, &mut n);
        n.contains(&b)
    }

    /// `min over paths of max V_t along the path` from any source to every node,
    /// by best-first search settling nodes in increasing bottleneck order.
    pub fn bottleneck_from(&self, sources: &[usize]) -> Vec<f64> {
        let mut best = vec![f64::INFINITY; self.len()];
        let mut done = vec![false; self.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            best[s] = self.values[s];
            heap.push(Reverse((Key(best[s]), s)));
        }
        let mut nb = Vec::with_capacity(8);
        while let Some(Reverse((Key(b), k))) = heap.pop() {
            if done[k] {
                continue;
            }
            done[k] = true;
            self.neighbours(k, &mut nb);
            for &n in &nb {
                let cand = b.max(self.values[n]);
                if cand < best[n] {
                    best[n] = cand;
                    heap.push(Reverse((Key(cand), n)));
                }
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Nodes within `tol` of the minimum value.
    pub fn argmin_nodes(&self, tol: f64) -> Vec<usize> {
        let m = self.min_value();
        (0..self.len()).filter(|&k| self.values[k] - m <= tol).collect()
    }
}

/// `E(γ) = max V_t` along a connected node path.
pub fn path_energy(grid: &GridGraph, path: &[usize]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::Domain("empty path".into()));
    }
    for w in path.windows(2) {
        if !grid.are_neighbours(w[0], w[1]) {
            return Err(Error::Domain(format!("nodes {} and {} are not adjacent", w[0], w[1])));
        }
    }
    Ok(path.iter().map(|&k| grid.values[k]).fold(f64::NEG_INFINITY, f64::max))
}

/// `H(x, z)`: the smallest achievable path maximum between the nodes nearest to `x` and `z`.
pub fn minimax_height(grid: &GridGraph, x: &Point, z: &Point) -> Result<f64> {
    let (a, b) = (grid.snap(x), grid.snap(z));
    let h = grid.bottleneck_from(&[a])[b];
    if !h.is_finite() {
        return Err(Error::Internal("grid nodes are disconnected".into()));
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalHeight {
    pub m: f64,
    pub h: f64,
    /// Value at half the grid step.
    pub m_refined: f64,
    pub warning: Option<String>,
}

/// `max over K of H(x, z₀) − V_t(x)` from a single bottleneck sweep rooted at
/// the global-minimum node `z₀`.
pub fn maximal_height_on(grid: &GridGraph) -> f64 {
    let z0 = grid.argmin_nodes(0.0)[0];
    maximal_height_from(grid, z0)
}

pub fn maximal_height_from(grid: &GridGraph, z0: usize) -> f64 {
    let h = grid.bottleneck_from(&[z0]);
    h.iter().zip(&grid.values).map(|(hv, v)| hv - v).fold(0.0, f64::max)
}

/// The search region: the support of `χ` and all critical points, plus one unit.
pub fn search_half_width(potential: &Potential) -> f64 {
    potential.characteristic_radius() + 1.0
}

/// `m` for `V + |x|²/a`, checked against the grid at half the step.
pub fn maximal_height_at(potential: &Potential, a: f64, h: f64) -> Result<MaximalHeight> {
    let l = search_half_width(potential);
    let coarse = maximal_height_on(&GridGraph::build(potential, a, l, h)?);
    let fine_grid = GridGraph::build(potential, a, l, 0.5 * h);
    // a halved step may exceed the node budget; then no refinement check is possible
    let fine = match fine_grid {
        Ok(g) => maximal_height_on(&g),
        Err(_) => coarse,
    };
    let change = (fine - coarse).abs();
    let warning = (change > REFINEMENT_TOLERANCE * coarse.abs().max(fine.abs()) && change > 0.0)
        .then(|| format!("grid too coarse at h = {h}: m changes from {coarse} to {fine} when h halves"));
    Ok(MaximalHeight { m: coarse, h, m_refined: fine, warning })
}

/// `m(t)` with `a = a(t)` from the schedule.
pub fn maximal_height(potential: &Potential, schedule: &Schedule, r: f64, t: f64, h: f64) -> Result<MaximalHeight> {
    let st = annealing_state(schedule, r, t)?;
    maximal_height_at(potential, st.a, h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub t: Vec<f64>,
    pub m_t: Vec<f64>,
    pub a_t: Vec<f64>,
    pub m_inf: f64,
    /// `|m(t) − m(∞)| · a(t)` per grid time.
    pub scaled_gap: Vec<f64>,
    /// The fitted constant `C = max scaled_gap`.
    pub fitted_c: f64,
    pub warnings: Vec<String>,
}

impl LandscapeReport {
    /// `t,m_t,a_t,bound_C_over_a`.
    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["t", "m_t", "a_t", "bound_C_over_a"]);
        for i in 0..self.t.len() {
            t.push(vec![self.t[i], self.m_t[i], self.a_t[i], self.fitted_c / self.a_t[i]]);
        }
        t
    }

    /// Whether `|m(t) − m(∞)| ≤ C/a(t)` at every grid time.
    pub fn bound_holds(&self) -> bool {
        (0..self.t.len()).all(|i| (self.m_t[i] - self.m_inf).abs() <= self.fitted_c / self.a_t[i] * (1.0 + 1e-12))
    }
}

pub fn landscape_report(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    t_grid: &[f64],
    h: f64,
) -> Result<LandscapeReport> {
    let inf = maximal_height_at(potential, f64::INFINITY, h)?;
    let mut warnings: Vec<String> = inf.warning.iter().cloned().collect();
    let mut report = LandscapeReport {
        t: Vec::new(),
        m_t: Vec::new(),
        a_t: Vec::new(),
        m_inf: inf.m,
        scaled_gap: Vec::new(),
        fitted_c: 0.0,
        warnings: Vec::new(),
    };
    for &t in t_grid {
        let st = annealing_state(schedule, r, t)?;
        let mh = maximal_height_at(potential, st.a, h)?;
        warnings.extend(mh.warning);
        report.t.push(t);
        report.m_t.push(mh.m);
        report.a_t.push(st.a);
        report.scaled_gap.push((mh.m - inf.m).abs() * st.a);
    }
    report.fitted_c = report.scaled_gap.iter().cloned().fold(0.0, f64::max);
    report.warnings = warnings;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub nodes: usize,
}

/// Symmetrized generator `−D^{1/2} L D^{−1/2}` of the reversible chain with
/// rates `(ε²/2h²)√(π_j/π_i)` to each neighbour, `π ∝ exp(−2V_a/ε²)`.
pub fn generator_matrix(potential: &Potential, eps2: f64, a: f64, half_width: f64, h: f64) -> Result<SymTridiagonal> {
    if potential.dim() != 1 {
        return Err(Error::Unsupported("generator spectrum is one-dimensional".into()));
    }
    if !(eps2 > 0.0) {
        return Err(Error::Domain(format!("ε² must be positive, got {eps2}")));
    }
    if h >= eps2.sqrt() / 5.0 {
        return Err(Error::Resolution(format!("h = {h} does not resolve ε = {}", eps2.sqrt())));
    }
    let grid = GridGraph::build(potential, a, half_width, h)?;
    let rate = eps2 / (2.0 * h * h);
    let v = &grid.values;
    let n = v.len();
    // √(π_j/π_i) = exp(−(V_j − V_i)/ε²)
    let ratio = |i: usize, j: usize| (-(v[j] - v[i]) / eps2).exp();
    let mut diag = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        if i > 0 {
            s += ratio(i, i - 1);
        }
        if i + 1 < n {
            s += ratio(i, i + 1);
        }
        diag[i] = rate * s;
        if !diag[i].is_finite() {
            return Err(Error::Resolution(format!("stationary weights overflow at ε² = {eps2}")));
        }
    }
    Ok(SymTridiagonal::new(diag, vec![-rate; n - 1]))
}

/// The two smallest eigenvalues of the negated generator.
pub fn generator_spectrum_1d(potential: &Potential, eps2: f64, a: f64, half_width: f64, h: f64) -> Result<Spectrum> {
    let m = generator_matrix(potential, eps2, a, half_width, h)?;
    Ok(Spectrum {
        lambda1: m.eigenvalue(0, STURM_TOLERANCE),
        lambda2: m.eigenvalue(1, STURM_TOLERANCE),
        nodes: m.len(),
    })
}

/// Box half-width for the spectrum: the tail of `π` beyond it is below `e^{-60}`.
pub fn spectrum_half_width(potential: &Potential, eps2: f64) -> f64 {
    potential.characteristic_radius() + (60.0 * eps2 / potential.convexity()).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapExponentSweep {
    pub eps2: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub eps2_log_lambda2: Vec<f64>,
}

impl GapExponentSweep {
    /// `eps2,lambda2,eps2_log_lambda2`.
    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["eps2", "lambda2", "eps2_log_lambda2"]);
        for i in 0..self.eps2.len() {
            t.push(vec![self.eps2[i], self.lambda2[i], self.eps2_log_lambda2[i]]);
        }
        t
    }
}

pub fn gap_exponent_sweep(potential: &Potential, eps2_grid: &[f64], h: f64) -> Result<GapExponentSweep> {
    let mut out = GapExponentSweep { eps2: Vec::new(), lambda2: Vec::new(), eps2_log_lambda2: Vec::new() };
    for &e in eps2_grid {
        let s = generator_spectrum_1d(potential, e, f64::INFINITY, spectrum_half_width(potential, e), h)?;
        out.eps2.push(e);
        out.lambda2.push(s.lambda2);
        out.eps2_log_lambda2.push(e * s.lambda2.ln());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_energy_examples() {
        let p = Potential::double_well();
        let g = GridGraph::build(&p, f64::INFINITY, 2.0, 0.01).unwrap();
        let k = g.snap(&Point::new1(0.5));
        assert_eq!(path_energy(&g, &[k]).unwrap(), g.values[k]);
        let (a, b) = (g.snap(&Point::new1(-1.0)), g.snap(&Point::new1(1.0)));
        let path: Vec<usize> = (a..=b).collect();
        assert!((path_energy(&g, &path).unwrap() - 1.0).abs() < 1e-12);
        // descending from 2 into the right well
        let down: Vec<usize> = (g.snap(&Point::new1(1.0))..=g.snap(&Point::new1(2.0))).rev().collect();
        assert_eq!(path_energy(&g, &down).unwrap(), g.values[down[0]]);
        assert!(path_energy(&g, &[a, b]).is_err());
    }

    #[test]
    fn minimax_examples() {
        let p = Potential::double_well();
        let g = GridGraph::build(&p, f64::INFINITY, 2.5, 1e-3).unwrap();
        let (m1, p1) = (Point::new1(-1.0), Point::new1(1.0));
        assert!((minimax_height(&g, &m1, &p1).unwrap() - 1.0).abs() < 1e-12);
        let x = Point::new1(0.4);
        assert_eq!(minimax_height(&g, &x, &x).unwrap(), g.values[g.snap(&x)]);
        let ring = GridGraph::build(&Potential::mexican_2d(), f64::INFINITY, 1.6, 0.02).unwrap();
        let h = minimax_height(&ring, &Point::new2(1.0, 0.0), &Point::new2(-1.0, 0.0)).unwrap();
        assert!(h < 0.05, "{h}");
    }

    #[test]
    fn minimax_symmetric_and_above_endpoints() {
        let ring = GridGraph::build(&Potential::mexican_2d(), 5.0, 1.6, 0.05).unwrap();
        let pts = [Point::new2(0.0, 0.0), Point::new2(1.0, 0.3), Point::new2(-0.7, -0.7), Point::new2(1.5, -1.5)];
        for x in &pts {
            for z in &pts {
                let hxz = minimax_height(&ring, x, z).unwrap();
                assert_eq!(hxz, minimax_height(&ring, z, x).unwrap());
                assert!(hxz >= ring.values[ring.snap(x)].max(ring.values[ring.snap(z)]));
            }
        }
    }

    #[test]
    fn maximal_heights() {
        for q in [
            Potential::quadratic(1, 1.0).unwrap(),
            Potential::quadratic(2, 3.0).unwrap(),
            Potential::tilted_well(1.0).unwrap(),
        ] {
            for h in [0.1, 0.037, 0.01] {
                assert_eq!(maximal_height_at(&q, f64::INFINITY, h).unwrap().m, 0.0);
            }
        }
        let dw = maximal_height_at(&Potential::double_well(), f64::INFINITY, 1e-3).unwrap();
        assert!((dw.m - 1.0).abs() < 0.01 && dw.warning.is_none());
    }

    #[test]
    fn maximal_height_independent_of_root() {
        let p = Potential::double_well();
        for a in [f64::INFINITY, 50.0] {
            let g = GridGraph::build(&p, a, search_half_width(&p), 1e-3).unwrap();
            let roots = g.argmin_nodes(1e-9);
            assert_eq!(roots.len(), 2);
            let ms: Vec<f64> = roots.iter().map(|&z| maximal_height_from(&g, z)).collect();
            assert!((ms[0] - ms[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn confinement_gap_scales_like_inverse_a() {
        let p = Potential::double_well();
        let s = Schedule::with_effective_k(3.0).unwrap();
        let rep = landscape_report(&p, &s, 1.0, &[10.0, 100.0, 1e3], 1e-3).unwrap();
        assert!(rep.bound_holds());
        let (lo, hi) = rep.scaled_gap.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 2.0, "{:?}", rep.scaled_gap);
        assert_eq!(rep.to_table().header, ["t", "m_t", "a_t", "bound_C_over_a"]);
    }

    #[test]
    fn ou_spectral_gap() {
        let q = Potential::quadratic(1, 1.0).unwrap();
        let eps2: f64 = 0.5;
        let l = 8.0 * eps2.sqrt() + 4.0;
        let s = generator_spectrum_1d(&q, eps2, f64::INFINITY, l, 1e-3).unwrap();
        assert!((s.lambda2 - 1.0).abs() < 0.01, "{}", s.lambda2);
        assert!(s.lambda1.abs() < 1e-8 * s.lambda2);
    }

    #[test]
    fn ground_state_is_sqrt_pi() {
        let p = Potential::double_well();
        let eps2 = 0.3;
        let l = spectrum_half_width(&p, eps2);
        let m = generator_matrix(&p, eps2, f64::INFINITY, l, 1e-2).unwrap();
        let g = GridGraph::build(&p, f64::INFINITY, l, 1e-2).unwrap();
        let root: Vec<f64> = g.values.iter().map(|v| (-v / eps2).exp()).collect();
        let residual = m.mul_vec(&root);
        let scale = eps2 / (2.0 * 1e-4);
        assert!(residual.iter().all(|r| r.abs() < 1e-9 * scale));
    }

    #[test]
    fn gap_exponent_trend() {
        let sweep = gap_exponent_sweep(&Potential::double_well(), &[0.5, 0.33, 0.25, 0.2], 1e-3).unwrap();
        let v: Vec<f64> = sweep.eps2_log_lambda2.iter().map(|x| -x).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
        assert!((v[3] - 2.0).abs() < 0.5);
    }

    #[test]
    fn resolution_guard() {
        let q = Potential::quadratic(1, 1.0).unwrap();
        assert!(matches!(generator_spectrum_1d(&q, 1e-4, f64::INFINITY, 3.0, 1e-2), Err(Error::Resolution(_))));
        assert!(matches!(
            generator_spectrum_1d(&Potential::mexican_2d(), 0.1, f64::INFINITY, 3.0, 1e-2),
            Err(Error::Unsupported(_))
        ));
    }
}
