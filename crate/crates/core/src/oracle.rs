//! Brute-force reference computations. They share no numerics with the main
//! code paths (plain trapezoid sums, bisection, classical RK4, exhaustive
//! grids) and produce the frozen values the tests compare against.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::potential::{osc_chi, Potential};
use crate::Point;

pub const TRAPEZOID_POINTS: usize = 1_000_000;

/// `∫ f` over `[lo, hi]` by the composite trapezoid rule on `n` intervals.
pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

/// `log ∫ exp(−2V/ε²)` over `[lo, hi]`, shifted by `min V` for stability.
pub fn log_partition_1d(potential: &Potential, eps2: f64, lo: f64, hi: f64) -> f64 {
    let vmin = grid_min(potential, lo, hi);
    let z = trapezoid(|x| (-2.0 * (potential.value(&Point::new1(x)) - vmin) / eps2).exp(), lo, hi, TRAPEZOID_POINTS);
    z.ln() - 2.0 * vmin / eps2
}

fn grid_min(potential: &Potential, lo: f64, hi: f64) -> f64 {
    let n = TRAPEZOID_POINTS;
    (0..=n).map(|i| potential.value(&Point::new1(lo + (hi - lo) * i as f64 / n as f64))).fold(f64::INFINITY, f64::min)
}

/// Gibbs mass of `x < split` and `x > split`.
pub fn split_masses(potential: &Potential, eps2: f64, lo: f64, hi: f64, split: f64) -> (f64, f64) {
    let vmin = grid_min(potential, lo, hi);
    let w = |x: f64| (-2.0 * (potential.value(&Point::new1(x)) - vmin) / eps2).exp();
    let left = trapezoid(w, lo, split, TRAPEZOID_POINTS / 2);
    let right = trapezoid(w, split, hi, TRAPEZOID_POINTS / 2);
    (left / (left + right), right / (left + right))
}

/// `⟨x²⟩` under `exp(−2V/ε²)`.
pub fn second_moment_1d(potential: &Potential, eps2: f64, lo: f64, hi: f64) -> f64 {
    let vmin = grid_min(potential, lo, hi);
    let w = |x: f64| (-2.0 * (potential.value(&Point::new1(x)) - vmin) / eps2).exp();
    trapezoid(|x| x * x * w(x), lo, hi, TRAPEZOID_POINTS) / trapezoid(w, lo, hi, TRAPEZOID_POINTS)
}

/// Root of an increasing-through-zero `f` on `[lo, hi]` by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `G⁻¹(u)` for `g(t) = k log(s + t)`, with `G` integrated by trapezoid sums.
pub fn logarithmic_inverse(k: f64, shift: f64, u: f64) -> f64 {
    let big_g = |t: f64| trapezoid(|s| k * (shift + s).ln(), 0.0, t, 20_000);
    bisect(|t| big_g(t) - u, 0.0, u / (k * shift.ln()))
}

/// Classical RK4 for `ẏ = f(t, y)` on `[0, t_end]` with step `h`.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t_end: f64, h: f64) -> [f64; N] {
    let steps = (t_end / h).round() as usize;
    let mut y = y0;
    let axpy = |y: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + c * k[i]) };
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

/// Noise-free `(X, μ̄)` with `g ≡ 1`: returns `(X_t, μ̄_t)`.
pub fn deterministic_x(potential: &Potential, r: f64, x0: f64, mu0: f64, t: f64) -> (f64, f64) {
    let rhs = |s: f64, y: &[f64; 2]| {
        let drift = -potential.gradient(&Point::new1(y[0] - y[1])).x();
        [drift, (y[0] - y[1]) / (r + s)]
    };
    let y = rk4(rhs, [x0, mu0], t, 1e-4);
    (y[0], y[1])
}

/// Largest barrier `max_x [max V on the segment to z₀] − V(x)` on a 1D grid,
/// computed directly from running maxima.
pub fn interval_max_height(potential: &Potential, lo: f64, hi: f64, n: usize) -> f64 {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|x| potential.value(&Point::new1(*x))).collect();
    let z0 = (0..vs.len()).min_by(|a, b| vs[*a].total_cmp(&vs[*b])).unwrap();
    let mut best: f64 = 0.0;
    let mut run = vs[z0];
    for i in (0..z0).rev() {
        run = run.max(vs[i]);
        best = best.max(run - vs[i]);
    }
    run = vs[z0];
    for i in z0 + 1..vs.len() {
        run = run.max(vs[i]);
        best = best.max(run - vs[i]);
    }
    best
}

/// Zeros of `V'` by bisection between sign changes on a grid.
pub fn critical_points_1d(potential: &Potential, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let d = |x: f64| potential.gradient(&Point::new1(x)).x();
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (lo + (hi - lo) * i as f64 / n as f64, lo + (hi - lo) * (i + 1) as f64 / n as f64);
        if d(a) == 0.0 {
            roots.push(a);
        } else if d(a) * d(b) < 0.0 {
            roots.push(bisect(d, a, b));
        }
    }
    roots
}

/// All reference values, grouped by golden file name.
pub fn goldens() -> Result<BTreeMap<String, Value>> {
    let dw = Potential::double_well();
    let spline = Potential::spline_twowell(2.0, 8.0, 1.0)?;
    let mut out = BTreeMap::new();

    let laplace = |p: &Potential, eps2: f64, curvatures: &[f64]| {
        let approx: f64 = curvatures.iter().map(|h| (std::f64::consts::PI * eps2 / h).sqrt()).sum();
        log_partition_1d(p, eps2, -4.0, 4.0).exp() / approx
    };
    let sweep = [0.1, 0.05, 0.02, 0.01];
    out.insert(
        "gibbs".into(),
        json!({
            "double_well_log_partition": {
                "eps2": [0.2, 0.05, 0.01],
                "value": ([0.2, 0.05, 0.01].map(|e| log_partition_1d(&dw, e, -4.0, 4.0))),
            },
            "double_well_second_moment_eps2_0.05": second_moment_1d(&dw, 0.05, -4.0, 4.0),
            "double_well_basin_masses_eps2_0.01": split_masses(&dw, 0.01, -4.0, 4.0, 0.0),
            "spline_basin_masses_eps2_0.01": split_masses(&spline, 0.01, -4.0, 4.0, 0.0),
            "laplace_ratio": {
                "eps2": sweep,
                "double_well": sweep.map(|e| laplace(&dw, e, &[8.0, 8.0])),
                "spline_twowell": sweep.map(|e| laplace(&spline, e, &[2.0, 8.0])),
            },
        }),
    );

    let u3 = trapezoid(|s| (std::f64::consts::E + s).ln(), 0.0, 3.0, 20_000);
    out.insert(
        "schedule".into(),
        json!({
            "log_k1_shift_e_G_of_3": u3,
            "log_k1_shift_e_inverse_of_G3": logarithmic_inverse(1.0, std::f64::consts::E, u3),
            "log_k_0.1_shift_e_inverse_at": {
                "u": [10.0, 100.0, 1000.0],
                "value": ([10.0, 100.0, 1000.0].map(|u| logarithmic_inverse(0.1, std::f64::consts::E, u))),
            },
        }),
    );

    let quad = Potential::quadratic(1, 1.0)?;
    let (x5, mu5) = deterministic_x(&quad, 1.0, 2.0, 0.0, 5.0);
    let (xd, mud) = deterministic_x(&dw, 2.0, 0.5, 0.0, 5.0);
    out.insert(
        "sde".into(),
        json!({
            "quadratic_r1_x0_2_t5": {"x": x5, "mu": mu5, "y": x5 - mu5},
            "double_well_r2_x0_0.5_t5": {"x": xd, "mu": mud, "y": xd - mud},
        }),
    );

    out.insert(
        "potential".into(),
        json!({
            "double_well_critical_points": critical_points_1d(&dw, -3.0, 3.0, 6001),
            "spline_critical_points": critical_points_1d(&spline, -3.0, 3.0, 6001),
            "double_well_osc": grid_osc(&dw),
            "spline_osc": grid_osc(&spline),
        }),
    );

    out.insert(
        "landscape".into(),
        json!({
            "double_well_m_inf": interval_max_height(&dw, -3.0, 3.0, 600_000),
            "spline_m_inf": interval_max_height(&spline, -3.0, 3.0, 600_000),
            "quadratic_m_inf": interval_max_height(&quad, -3.0, 3.0, 600_000),
        }),
    );
    Ok(out)
}

/// `sup χ − inf χ` over a fine grid of the fitted bump's support.
fn grid_osc(p: &Potential) -> Value {
    match p.decomposition().bump {
        Some(b) => {
            let n = 200_000;
            let (lo, hi) = (b.center.x() - b.radius, b.center.x() + b.radius);
            let vals = (0..=n).map(|i| b.value(&Point::new1(lo + (hi - lo) * i as f64 / n as f64)));
            let (mn, mx) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), v| (a.min(v), c.max(v)));
            json!({"grid": mx - mn.min(0.0), "library": osc_chi(p)})
        }
        None => json!({"grid": 0.0, "library": osc_chi(p)}),
    }
}

/// Writes one `<name>.json` per golden group into `dir`.
pub fn write_goldens(dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (name, value) in goldens()? {
        let file = format!("{name}.json");
        fs::write(dir.join(&file), serde_json::to_string_pretty(&value)? + "\n")?;
        names.push(file);
    }
    Ok(names)
}
