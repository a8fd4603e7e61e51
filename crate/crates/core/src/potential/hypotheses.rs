use serde::Serialize;

use crate::point::Point;
use crate::rng::RngStream;

use super::Potential;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnulusStats {
    pub inner: f64,
    pub outer: f64,
    /// Smallest a with ΔV ≤ a + bV on this annulus, for the declared b.
    pub fitted_a: f64,
    /// min |∇V|²/V over the annulus (points with V = 0 skipped).
    pub min_growth_ratio: f64,
    pub min_w_eigenvalue: f64,
    pub min_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub declared_a: f64,
    pub declared_b: f64,
    pub fitted_a: f64,
    /// declared a minus fitted a; negative means the declared bound fails.
    pub laplacian_slack: f64,
    pub outer_growth_ratio: f64,
    /// Whether min |∇V|²/V keeps increasing from one annulus to the next.
    pub growth_ratio_diverging: bool,
    pub min_w_eigenvalue: f64,
    pub convexity: f64,
    pub annuli: Vec<AnnulusStats>,
    pub violations: Vec<String>,
}

/// Samples `samples` uniform points in each of the nested annuli
/// `[0, R), [R, 2R), [2R, 4R), [4R, 8R), [8R, 16R)` and reports the growth,
/// Laplacian and convexity hypotheses. Nothing is asserted.
pub fn check_hypotheses(potential: &Potential, samples: usize, seed: u64) -> HypothesisReport {
    let dim = potential.dim();
    let base = (potential.support_radius() + 1.0).max(1.0);
    let edges = [0.0, base, 2.0 * base, 4.0 * base, 8.0 * base, 16.0 * base];
    let growth = potential.growth_constants();
    let mut rng = RngStream::new(seed, 0);
    let mut annuli = Vec::new();
    for w in edges.windows(2) {
        let (inner, outer) = (w[0], w[1]);
        let mut stats = AnnulusStats {
            inner,
            outer,
            fitted_a: f64::NEG_INFINITY,
            min_growth_ratio: f64::INFINITY,
            min_w_eigenvalue: f64::INFINITY,
            min_value: f64::INFINITY,
        };
        for _ in 0..samples.max(1) {
            let x = sample_annulus(&mut rng, dim, inner, outer);
            let v = potential.value(&x);
            let lap = potential.laplacian(&x);
            stats.fitted_a = stats.fitted_a.max(lap - growth.b * v);
            if v > 0.0 {
                stats.min_growth_ratio = stats.min_growth_ratio.min(potential.gradient(&x).norm2() / v);
            }
            stats.min_w_eigenvalue = stats.min_w_eigenvalue.min(potential.w_hessian(&x).min_eigenvalue());
            stats.min_value = stats.min_value.min(v);
        }
        annuli.push(stats);
    }
    let fitted_a = annuli.iter().map(|a| a.fitted_a).fold(f64::NEG_INFINITY, f64::max);
    let min_w = annuli.iter().map(|a| a.min_w_eigenvalue).fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = annuli.iter().skip(1).map(|a| a.min_growth_ratio).collect();
    let diverging = ratios.windows(2).all(|w| w[1] > 1.5 * w[0]);
    let outer_growth_ratio = *ratios.last().unwrap();

    let mut violations = Vec::new();
    if fitted_a > growth.a {
        violations
            .push(format!("laplacian bound: needs a ≥ {fitted_a:.4} with b = {}, declared a = {}", growth.b, growth.a));
    }
    if min_w < potential.convexity() * (1.0 - 1e-9) {
        violations.push(format!("convexity: min eigenvalue of ∇²W is {min_w:.6} < c = {}", potential.convexity()));
    }
    if annuli.iter().any(|a| a.min_value < 0.0) {
        violations.push("positivity: V < 0 at a sampled point".into());
    }
    if !diverging {
        violations.push(format!(
            "growth ratio |∇V|²/V does not diverge across annuli (outermost minimum {outer_growth_ratio:.4})"
        ));
    }
    HypothesisReport {
        declared_a: growth.a,
        declared_b: growth.b,
        fitted_a,
        laplacian_slack: growth.a - fitted_a,
        outer_growth_ratio,
        growth_ratio_diverging: diverging,
        min_w_eigenvalue: min_w,
        convexity: potential.convexity(),
        annuli,
        violations,
    }
}

fn sample_annulus(rng: &mut RngStream, dim: usize, inner: f64, outer: f64) -> Point {
    if dim == 1 {
        let r = inner + (outer - inner) * rng.uniform();
        Point::new1(if rng.uniform() < 0.5 { -r } else { r })
    } else {
        // uniform in area
        let r = (inner * inner + (outer * outer - inner * inner) * rng.uniform()).sqrt();
        let th = std::f64::consts::TAU * rng.uniform();
        Point::new2(r * th.cos(), r * th.sin())
    }
}
