//! Landscape pipeline: maximal heights `m(t)`, the `C/a(t)` bound, and the
//! spectral gap sweep.

use crate::error::Result;
use crate::landscape::{
    generator_spectrum_1d, landscape_report, maximal_height_at, spectrum_half_width, GapExponentSweep,
};

use super::config::ExperimentConfig;
use super::verdict::Criterion;
use super::Artifact;

/// `λ₁` must vanish relative to `λ₂` to this precision.
const GROUND_STATE_TOLERANCE: f64 = 1e-8;
/// Slack for comparing distances in the gap-exponent sweep.
const MONOTONE_SLACK: f64 = 1e-9;

pub(super) fn landscape_spectrum(config: &ExperimentConfig) -> Result<(Vec<Criterion>, Vec<Artifact>)> {
    let potential = config.build_potential()?;
    let schedule = config.build_schedule(&potential)?;
    let th = &config.thresholds;
    let h = config.analysis.grid_step;

    let inf = maximal_height_at(&potential, f64::INFINITY, h)?;
    let change = (inf.m - inf.m_refined).abs();
    let scale = inf.m.abs().max(inf.m_refined.abs());
    let refinement = Criterion::new(
        "height_refinement",
        change <= th.refinement * scale,
        format!("m(∞) at h = {h} against h = {}", 0.5 * h),
    )
    .with("m_inf", inf.m)
    .with("m_refined", inf.m_refined)
    .with("relative_change", if scale > 0.0 { change / scale } else { 0.0 })
    .with("threshold", th.refinement);

    let report = landscape_report(&potential, &schedule, config.r, &config.analysis.t_grid, h)?;
    let lo = report.scaled_gap.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if report.fitted_c == 0.0 { 1.0 } else { report.fitted_c / lo };
    let bound = Criterion::new(
        "height_bound",
        spread <= th.bound_spread,
        "|m(t) − m(∞)|·a(t) stays within a bounded band across the time grid",
    )
    .with("fitted_c", report.fitted_c)
    .with("scaled_gap", report.scaled_gap.clone())
    .with("spread", spread)
    .with("threshold", th.bound_spread);

    let mut eps2_grid = config.analysis.eps2_grid.clone();
    eps2_grid.sort_by(|a, b| b.total_cmp(a));
    let mut sweep = GapExponentSweep { eps2: Vec::new(), lambda2: Vec::new(), eps2_log_lambda2: Vec::new() };
    let mut ground = 0.0f64;
    for &e in &eps2_grid {
        let hs = config.analysis.spectrum_step;
        let s = generator_spectrum_1d(&potential, e, f64::INFINITY, spectrum_half_width(&potential, e), hs)?;
        ground = ground.max(s.lambda1.abs() / s.lambda2);
        sweep.eps2.push(e);
        sweep.lambda2.push(s.lambda2);
        sweep.eps2_log_lambda2.push(e * s.lambda2.ln());
    }
    let ground_state = Criterion::new(
        "spectrum_ground_state",
        ground <= GROUND_STATE_TOLERANCE,
        "λ₁ = 0 relative to λ₂ at every temperature",
    )
    .with("max_lambda1_over_lambda2", ground);

    let target = 2.0 * inf.m;
    let distance: Vec<f64> = sweep.eps2_log_lambda2.iter().map(|v| (-v - target).abs()).collect();
    let monotone = distance.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    let approach =
        Criterion::new("gap_exponent_monotone", monotone, "−ε² log λ₂ approaches 2m monotonically as ε² decreases")
            .with("distance", distance.clone())
            .with("target", target);
    let last = *distance.last().unwrap();
    let (final_ok, measure) = if target > 0.0 {
        (last <= th.gap_exponent_tolerance * target, last / target)
    } else {
        (last <= th.gap_exponent_tolerance, last)
    };
    let exponent = Criterion::new(
        "gap_exponent_final",
        final_ok,
        "final −ε² log λ₂ within tolerance of 2m (relative; absolute when m = 0)",
    )
    .with("final_value", -sweep.eps2_log_lambda2.last().unwrap())
    .with("error", measure)
    .with("threshold", th.gap_exponent_tolerance);

    let artifacts =
        vec![("landscape.csv".to_string(), report.to_table()), ("spectrum.csv".to_string(), sweep.to_table())];
    Ok((vec![refinement, bound, ground_state, approach, exponent], artifacts))
}
