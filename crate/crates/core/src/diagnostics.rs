//! Estimators over trajectories: occupation measures, Cesàro averages,
//! histogram KL/TV against Gibbs targets, decay fits, the mean trackers of the
//! constant-`g` regime and the tightness product.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::GibbsMeasure;
use crate::point::Point;
use crate::potential::{Basins, Potential};
use crate::rng::RngStream;
use crate::schedule::{annealing_state, Schedule};
use crate::sde::{Sample, SampleSink, Trajectory};
use crate::table::CsvTable;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Fraction of the horizon discarded before any fit.
pub const BURN_IN_FRACTION: f64 = 0.1;
pub const FLATNESS_THRESHOLD: f64 = 0.05;
pub const LOG_RATIO_TOLERANCE: f64 = 0.1;

/// `bins` equal-width bin edges on `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Bin index with the outer bins absorbing everything beyond the edges.
fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x).clamp(1, edges.len() - 1) - 1
}

/// Time-weighted (trapezoid) occupation of the first coordinate over a window.
#[derive(Clone, Debug)]
pub struct OccupationAccumulator {
    edges: Vec<f64>,
    basins: Option<Basins>,
    window: (f64, f64),
    bins: Vec<f64>,
    basin_mass: Vec<f64>,
    total: f64,
    last: Option<(f64, f64)>,
}

impl OccupationAccumulator {
    pub fn new(edges: Vec<f64>, basins: Option<Basins>, window: (f64, f64)) -> Self {
        let nb = basins.as_ref().map_or(0, |b| b.len());
        let bins = vec![0.0; edges.len() - 1];
        OccupationAccumulator { edges, basins, window, bins, basin_mass: vec![0.0; nb], total: 0.0, last: None }
    }

    fn deposit(&mut self, x: f64, w: f64) {
        self.bins[bin_of(&self.edges, x)] += w;
        if let Some(b) = &self.basins {
            self.basin_mass[b.locate(x)] += w;
        }
        self.total += w;
    }

    pub fn push(&mut self, t: f64, x: f64) {
        if t < self.window.0 || t > self.window.1 {
            return;
        }
        if let Some((t0, x0)) = self.last {
            let half = 0.5 * (t - t0);
            self.deposit(x0, half);
            self.deposit(x, half);
        }
        self.last = Some((t, x));
    }

    /// Adds another accumulator's raw weights (same edges and basins).
    pub fn merge(&mut self, other: &OccupationAccumulator) {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        for (a, b) in self.basin_mass.iter_mut().zip(&other.basin_mass) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn summary(&self) -> Result<OccupationSummary> {
        if !(self.total > 0.0) {
            return Err(Error::InsufficientData(format!(
                "no samples in occupation window [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        Ok(OccupationSummary {
            edges: self.edges.clone(),
            masses: self.bins.iter().map(|m| m / self.total).collect(),
            basin_masses: self.basin_mass.iter().map(|m| m / self.total).collect(),
            window: self.window,
        })
    }
}

impl SampleSink for OccupationAccumulator {
    fn sample(&mut self, s: &Sample) {
        self.push(s.t, s.x.x());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationSummary {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    /// Mass per local-minimum basin (empty when no basins were given).
    pub basin_masses: Vec<f64>,
    pub window: (f64, f64),
}

/// Occupation over `[t0, t1]` pooled over paths, each path weighted equally.
pub fn occupation(
    paths: &[&Trajectory],
    window: (f64, f64),
    edges: &[f64],
    basins: Option<&Basins>,
) -> Result<OccupationSummary> {
    if paths.is_empty() || window.1 <= window.0 {
        return Err(Error::InsufficientData("empty occupation window".into()));
    }
    if edges.len() < 2 {
        return Err(Error::Config("occupation needs at least one bin".into()));
    }
    let mut pooled: Option<OccupationAccumulator> = None;
    for tr in paths {
        if tr.times.first().is_none_or(|&t| t > window.0) || tr.times.last().is_none_or(|&t| t < window.1) {
            return Err(Error::Domain(format!("window [{}, {}] outside the trajectory span", window.0, window.1)));
        }
        let mut acc = OccupationAccumulator::new(edges.to_vec(), basins.cloned(), window);
        for (t, x) in tr.times.iter().zip(&tr.states) {
            acc.push(*t, x.x());
        }
        // normalize per path before pooling
        let scale = 1.0 / acc.total.max(f64::MIN_POSITIVE);
        acc.bins.iter_mut().for_each(|m| *m *= scale);
        acc.basin_mass.iter_mut().for_each(|m| *m *= scale);
        acc.total = 1.0;
        match pooled.as_mut() {
            Some(p) => p.merge(&acc),
            None => pooled = Some(acc),
        }
    }
    pooled.unwrap().summary()
}

/// `(1/t) ∫₀ᵗ f(Y_s) ds` by the trapezoid rule on the recorded samples, the
/// last interval linearly interpolated.
pub fn cesaro(traj: &Trajectory, f: impl Fn(&Point) -> f64, t: f64) -> Result<f64> {
    let ts = &traj.times;
    if ts.len() < 2 || !(t > ts[0]) || t > *ts.last().unwrap() {
        return Err(Error::Domain(format!("Cesàro time {t} outside the trajectory span")));
    }
    let mut integral = 0.0;
    let mut prev = f(&traj.states[0]);
    for i in 1..ts.len() {
        let cur = f(&traj.states[i]);
        if ts[i] >= t {
            let s = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            let end = prev + s * (cur - prev);
            integral += 0.5 * (t - ts[i - 1]) * (prev + end);
            break;
        }
        integral += 0.5 * (ts[i] - ts[i - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(integral / (t - ts[0]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceEstimate {
    pub kl: f64,
    pub tv: f64,
    pub samples: usize,
    pub bins: usize,
    /// Nonempty bins whose target mass is below 1e-300 (KL reported as +∞).
    pub unsupported_bins: usize,
}

impl DivergenceEstimate {
    /// Pinsker's inequality `TV² ≤ 2 KL + slack`.
    pub fn pinsker_holds(&self, slack: f64) -> bool {
        self.tv * self.tv <= 2.0 * self.kl + slack
    }
}

/// KL and TV between two bin-mass vectors.
pub fn divergence_from_masses(p: &[f64], q: &[f64], samples: usize) -> DivergenceEstimate {
    let mut kl = 0.0;
    let mut tv = 0.0;
    let mut unsupported = 0;
    for (&pi, &qi) in p.iter().zip(q) {
        tv += (pi - qi).abs();
        if pi > 0.0 {
            if qi < 1e-300 {
                unsupported += 1;
            } else {
                kl += pi * (pi / qi).ln();
            }
        }
    }
    DivergenceEstimate {
        kl: if unsupported > 0 { f64::INFINITY } else { kl },
        tv: (0.5 * tv).min(1.0),
        samples,
        bins: p.len(),
        unsupported_bins: unsupported,
    }
}

/// Target masses of bins whose outer bins extend to ±∞.
pub fn gibbs_bin_masses(measure: &GibbsMeasure, edges: &[f64]) -> Vec<f64> {
    let n = edges.len() - 1;
    (0..n)
        .map(|i| {
            let lo = if i == 0 { f64::NEG_INFINITY } else { edges[i] };
            let hi = if i == n - 1 { f64::INFINITY } else { edges[i + 1] };
            measure.interval_mass(lo, hi)
        })
        .collect()
}

/// Histogram of `samples` with the outer bins absorbing the tails.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut counts = vec![0.0; edges.len() - 1];
    for &x in samples {
        counts[bin_of(edges, x)] += 1.0;
    }
    let n = samples.len().max(1) as f64;
    counts.iter().map(|c| c / n).collect()
}

/// `Ĥ(p̂ ‖ Π)` and TV on shared bins; needs at least 1000 samples.
pub fn kl_to_gibbs(samples: &[f64], measure: &GibbsMeasure, edges: &[f64]) -> Result<DivergenceEstimate> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientData(format!("KL estimate needs ≥ 1000 samples, got {}", samples.len())));
    }
    if edges.len() < 2 {
        return Err(Error::Config("KL estimate needs at least one bin".into()));
    }
    let p = histogram(samples, edges);
    let q = gibbs_bin_masses(measure, edges);
    Ok(divergence_from_masses(&p, &q, samples.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points_used: usize,
}

/// Least-squares slope of `log H` against `log t`, optionally after dividing
/// out `(log t)³`. Nonpositive values are skipped.
pub fn decay_rate_fit(t: &[f64], h: &[f64], log_correction: bool) -> Result<DecayFit> {
    if t.len() != h.len() {
        return Err(Error::Config("decay fit: t and H lengths differ".into()));
    }
    if t.len() < 5 {
        return Err(Error::InsufficientData(format!("decay fit needs ≥ 5 grid points, got {}", t.len())));
    }
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(h)
        .filter(|(&ti, &hi)| hi > 0.0 && ti > 1.0 && hi.is_finite())
        .map(|(&ti, &hi)| {
            let y = if log_correction { hi / ti.ln().powi(3) } else { hi };
            (ti.ln(), y.ln())
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("decay fit: only {} positive values", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { slope, intercept, residual, points_used: pts.len() })
}

/// Series `m_t = (1/t)∫₀ᵗ Y`, `μ̄_t` and `μ̄_t / log t` at the recorded times.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeanTracker {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_over_log: Vec<f64>,
}

impl MeanTracker {
    /// Trackers of the first coordinate of a `(Y, μ̄)` trajectory.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        if traj.mu.len() != traj.len() || traj.len() < 2 {
            return Err(Error::Domain("mean trackers need a trajectory with a μ̄ channel".into()));
        }
        let mut tracker = MeanTracker::default();
        let mut integral = 0.0;
        for i in 0..traj.len() {
            let t = traj.times[i];
            if i > 0 {
                integral += 0.5 * (t - traj.times[i - 1]) * (traj.states[i - 1].x() + traj.states[i].x());
            }
            tracker.push(t, integral, traj.mu[i].x());
        }
        Ok(tracker)
    }

    fn push(&mut self, t: f64, integral: f64, mu: f64) {
        self.t.push(t);
        self.m.push(if t > 0.0 { integral / t } else { f64::NAN });
        self.mu.push(mu);
        self.mu_over_log.push(if t > 1.0 { mu / t.ln() } else { f64::NAN });
    }

    /// Pointwise mean over an ensemble sharing one time grid.
    pub fn ensemble_mean(trackers: &[MeanTracker]) -> Result<Self> {
        let first = trackers.first().ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
        let n = trackers.len() as f64;
        let avg = |f: &dyn Fn(&MeanTracker) -> &Vec<f64>| -> Vec<f64> {
            (0..first.t.len()).map(|i| trackers.iter().map(|tr| f(tr)[i]).sum::<f64>() / n).collect()
        };
        if trackers.iter().any(|tr| tr.t != first.t) {
            return Err(Error::Domain("ensemble trackers must share a time grid".into()));
        }
        Ok(MeanTracker {
            t: first.t.clone(),
            m: avg(&|tr| &tr.m),
            mu: avg(&|tr| &tr.mu),
            mu_over_log: avg(&|tr| &tr.mu_over_log),
        })
    }
}

/// Streaming tracker fed by a `(Y, μ̄)` run.
#[derive(Clone, Debug, Default)]
pub struct MeanTrackerSink {
    pub tracker: MeanTracker,
    integral: f64,
    last: Option<(f64, f64)>,
}

impl SampleSink for MeanTrackerSink {
    fn sample(&mut self, s: &Sample) {
        let y = s.x.x();
        if let Some((t0, y0)) = self.last {
            self.integral += 0.5 * (s.t - t0) * (y0 + y);
        }
        self.last = Some((s.t, y));
        self.tracker.push(s.t, self.integral, s.mu.map_or(f64::NAN, |m| m.x()));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanVerdict {
    MeanConverges,
    DivergesLog,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanVerdictReport {
    pub verdict: MeanVerdict,
    /// max − min of `μ̄` over the last time decade.
    pub last_decade_oscillation: f64,
    /// max − min of `μ̄` over the whole run.
    pub range: f64,
    pub final_mu_over_log: f64,
    pub gamma_bar: f64,
}

/// Flatness: last-decade oscillation of `μ̄` below 5% of its range.
/// Logarithmic divergence: final `μ̄/log t` within 10% of `γ̄ ≠ 0`.
pub fn mean_verdict(tracker: &MeanTracker, gamma_bar: f64) -> Result<MeanVerdictReport> {
    let t_end = *tracker.t.last().ok_or_else(|| Error::InsufficientData("empty tracker".into()))?;
    let span = |from: f64| {
        tracker
            .t
            .iter()
            .zip(&tracker.mu)
            .filter(|(t, _)| **t >= from)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &m)| (lo.min(m), hi.max(m)))
    };
    let (lo, hi) = span(f64::NEG_INFINITY);
    let (dlo, dhi) = span(t_end / 10.0);
    let final_ratio = *tracker.mu_over_log.last().unwrap();
    let range = hi - lo;
    let osc = dhi - dlo;
    let verdict = if gamma_bar != 0.0 && ((final_ratio - gamma_bar) / gamma_bar).abs() <= LOG_RATIO_TOLERANCE {
        MeanVerdict::DivergesLog
    } else if range > 0.0 && osc < FLATNESS_THRESHOLD * range {
        MeanVerdict::MeanConverges
    } else {
        MeanVerdict::Undecided
    };
    Ok(MeanVerdictReport { verdict, last_decade_oscillation: osc, range, final_mu_over_log: final_ratio, gamma_bar })
}

/// Mean of `values` over samples with `t ∈ [lo, hi]`.
pub fn window_mean(t: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let picked: Vec<f64> = t.iter().zip(values).filter(|(s, _)| **s >= lo && **s <= hi).map(|(_, v)| *v).collect();
    if picked.is_empty() {
        return Err(Error::InsufficientData(format!("no samples in [{lo}, {hi}]")));
    }
    Ok(picked.iter().sum::<f64>() / picked.len() as f64)
}

/// `Ê[V(Z_t) 1{V ≥ R}] · g(G⁻¹(t))` at each checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessReport {
    pub t: Vec<f64>,
    pub product: Vec<f64>,
    pub max: f64,
}

pub fn tightness_report(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    threshold: f64,
    checkpoints: &[(f64, Vec<Point>)],
) -> Result<TightnessReport> {
    let mut t = Vec::new();
    let mut product = Vec::new();
    for (time, states) in checkpoints {
        if states.is_empty() {
            return Err(Error::InsufficientData(format!("no states at checkpoint {time}")));
        }
        let st = annealing_state(schedule, r, *time)?;
        let tail =
            states.iter().map(|z| potential.value(z)).filter(|v| *v >= threshold).sum::<f64>() / states.len() as f64;
        t.push(*time);
        product.push(tail / st.eps2);
    }
    let max = product.iter().cloned().fold(0.0, f64::max);
    Ok(TightnessReport { t, product, max })
}

/// Percentile bootstrap band (2.5%, 97.5%) for the mean of `values`.
pub fn bootstrap_mean_band(values: &[f64], rng: &mut RngStream) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut means: Vec<f64> =
        (0..BOOTSTRAP_RESAMPLES).map(|_| (0..n).map(|_| values[rng.below(n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (BOOTSTRAP_RESAMPLES - 1) as f64).round()) as usize];
    (at(0.025), at(0.975))
}

/// `t,value[,lo,hi]` series; bands are bootstrap bands of the per-path values.
pub fn series_table(t: &[f64], per_path: &[Vec<f64>], rng: Option<&mut RngStream>) -> CsvTable {
    let mean = |i: usize| per_path.iter().map(|p| p[i]).sum::<f64>() / per_path.len() as f64;
    match rng {
        Some(rng) => {
            let mut table = CsvTable::new(["t", "value", "lo", "hi"]);
            for (i, &ti) in t.iter().enumerate() {
                let col: Vec<f64> = per_path.iter().map(|p| p[i]).collect();
                let (lo, hi) = bootstrap_mean_band(&col, rng);
                table.push(vec![ti, mean(i), lo, hi]);
            }
            table
        }
        None => {
            let mut table = CsvTable::new(["t", "value"]);
            for (i, &ti) in t.iter().enumerate() {
                table.push(vec![ti, mean(i)]);
            }
            table
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::gibbs_sample;
    use crate::sde::ProcessKind;

    fn synthetic(times: Vec<f64>, xs: Vec<f64>) -> Trajectory {
        Trajectory {
            kind: ProcessKind::YMu,
            dt: 1.0,
            seed: 0,
            stream: 0,
            states: xs.iter().map(|&x| Point::new1(x)).collect(),
            mu: xs.iter().map(|_| Point::new1(0.0)).collect(),
            partner: Vec::new(),
            times,
            blow_up: None,
        }
    }

    fn dw_basins() -> Basins {
        Basins::from_scan(&Potential::double_well().critical_points().unwrap()).unwrap()
    }

    #[test]
    fn occupation_of_constant_and_split_paths() {
        let edges = uniform_edges(-2.0, 2.0, 40);
        let b = dw_basins();
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let at_min = synthetic(times.clone(), vec![1.0; 101]);
        let o = occupation(&[&at_min], (0.0, 10.0), &edges, Some(&b)).unwrap();
        assert!(o.basin_masses[0] == 0.0 && (o.basin_masses[1] - 1.0).abs() < 1e-12);
        assert!((o.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // halves at −1 then +1 with the switch in the middle interval
        let xs: Vec<f64> = (0..100).map(|i| if i < 50 { -1.0 } else { 1.0 }).collect();
        let split = synthetic(times[..100].to_vec(), xs);
        let o = occupation(&[&split], (0.0, 9.9), &edges, Some(&b)).unwrap();
        assert!((o.basin_masses[0] - 0.5).abs() < 1e-12);
        assert!(occupation(&[&split], (5.0, 5.0), &edges, None).is_err());
    }

    #[test]
    fn cesaro_examples() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let xs: Vec<f64> = (0..=10).map(|i| if i < 4 { 2.0 } else { -1.0 }).collect();
        let tr = synthetic(times, xs);
        assert_eq!(cesaro(&tr, |_| 1.0, 10.0).unwrap(), 1.0);
        // 3 units at 2, a linear ramp from 2 to −1 over [3, 4], 6 units at −1
        let expected = (3.0 * 2.0 + 0.5 + -6.0) / 10.0;
        assert!((cesaro(&tr, |p| p.x(), 10.0).unwrap() - expected).abs() < 1e-14);
        assert!(cesaro(&tr, |_| 1.0, 11.0).is_err());
    }

    #[test]
    fn two_point_divergence() {
        let d = divergence_from_masses(&[1.0, 0.0], &[0.5, 0.5], 10);
        assert!((d.tv - 0.5).abs() < 1e-15);
        assert!((d.kl - 2f64.ln()).abs() < 1e-15);
        assert!(d.pinsker_holds(0.0));
        let d = divergence_from_masses(&[0.5, 0.5], &[1.0, 0.0], 10);
        assert!(d.kl.is_infinite() && d.unsupported_bins == 1);
    }

    #[test]
    fn self_consistent_kl_and_tv() {
        let m = GibbsMeasure::new(&Potential::double_well(), 0.2, f64::INFINITY).unwrap();
        let mut rng = RngStream::new(21, 0);
        let xs = gibbs_sample(&m, &mut rng, 100_000).unwrap();
        let edges = uniform_edges(-2.0, 2.0, 100);
        let d = kl_to_gibbs(&xs, &m, &edges).unwrap();
        assert!(d.kl < 0.01 && d.tv < 0.03, "{d:?}");
        assert!(d.pinsker_holds(0.01));
        assert!(kl_to_gibbs(&xs[..10], &m, &edges).is_err());
    }

    #[test]
    fn decay_fit_recovers_power_laws() {
        let t: Vec<f64> = (1..=8).map(|i| 10f64.powf(i as f64 * 0.5)).collect();
        let h: Vec<f64> = t.iter().map(|s| s.powf(-1.5)).collect();
        assert!((decay_rate_fit(&t, &h, false).unwrap().slope + 1.5).abs() < 1e-6);
        let h: Vec<f64> = t.iter().map(|s| s.ln().powi(3) * s.powf(-1.5)).collect();
        assert!((decay_rate_fit(&t, &h, true).unwrap().slope + 1.5).abs() < 1e-6);
        let mut bad = h.clone();
        for v in bad.iter_mut().take(6) {
            *v = -1.0;
        }
        assert!(matches!(decay_rate_fit(&t, &bad, true), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn mean_tracker_of_constant_path() {
        // Y ≡ c gives μ̄_t = μ̄₀ + c log(1 + t/r)
        let (c, r, mu0) = (0.7, 2.0, 0.3);
        let times: Vec<f64> = (0..=100_000).map(|i| i as f64 * 1e-3).collect();
        let mut tr = synthetic(times.clone(), vec![c; times.len()]);
        let mut mu = mu0;
        tr.mu[0] = Point::new1(mu0);
        for i in 1..times.len() {
            let (t0, t1) = (times[i - 1], times[i]);
            mu += 0.5 * (t1 - t0) * (c / (r + t0) + c / (r + t1));
            tr.mu[i] = Point::new1(mu);
        }
        let m = MeanTracker::from_trajectory(&tr).unwrap();
        let end = times.len() - 1;
        assert!((m.mu[end] - (mu0 + c * (1.0 + 100.0 / r).ln())).abs() < 1e-6);
        assert!((m.m[end] - c).abs() < 1e-12);
    }

    #[test]
    fn mean_recursion_matches_ode() {
        // dm = (Y − m) dt / t along a smooth synthetic path
        let dt = 1e-3;
        let times: Vec<f64> = (0..=20_000).map(|i| i as f64 * dt).collect();
        let xs: Vec<f64> = times.iter().map(|t| (3.0 * t).sin()).collect();
        let m = MeanTracker::from_trajectory(&synthetic(times.clone(), xs.clone())).unwrap();
        for i in 1000..times.len() - 1 {
            let predicted = m.m[i] + (xs[i] - m.m[i]) * dt / times[i];
            assert!((m.m[i + 1] - predicted).abs() < 10.0 * dt * dt);
        }
    }

    #[test]
    fn verdicts_on_synthetic_trackers() {
        let t: Vec<f64> = (1..=1000).map(|i| i as f64 * 10.0).collect();
        let flat = MeanTracker {
            mu: t.iter().map(|s| 1.0 - 1.0 / s).collect(),
            m: vec![0.0; t.len()],
            mu_over_log: t.iter().map(|s| (1.0 - 1.0 / s) / s.ln()).collect(),
            t: t.clone(),
        };
        assert_eq!(mean_verdict(&flat, 0.0).unwrap().verdict, MeanVerdict::MeanConverges);
        let growing = MeanTracker {
            mu: t.iter().map(|s| s.ln()).collect(),
            m: vec![1.0; t.len()],
            mu_over_log: vec![1.0; t.len()],
            t,
        };
        assert_eq!(mean_verdict(&growing, 1.0).unwrap().verdict, MeanVerdict::DivergesLog);
        assert_eq!(mean_verdict(&growing, 0.0).unwrap().verdict, MeanVerdict::Undecided);
    }

    #[test]
    fn tightness_zero_when_mass_below_threshold() {
        let p = Potential::double_well();
        let s = Schedule::with_effective_k(1.0).unwrap();
        let cps = vec![(10.0, vec![Point::new1(1.0); 8]), (100.0, vec![Point::new1(-0.9); 8])];
        let rep = tightness_report(&p, &s, 1.0, 2.0, &cps).unwrap();
        assert_eq!(rep.product, vec![0.0, 0.0]);
    }

    #[test]
    fn bootstrap_band_brackets_mean() {
        let mut rng = RngStream::new(2, 0);
        let values: Vec<f64> = (0..256).map(|_| rng.normal()).collect();
        let mean = values.iter().sum::<f64>() / 256.0;
        let (lo, hi) = bootstrap_mean_band(&values, &mut RngStream::new(2, 1));
        assert!(lo < mean && mean < hi && hi - lo < 0.5);
        let t = series_table(&[1.0], &[vec![1.0], vec![3.0]], None);
        assert_eq!(t.rows, vec![vec![1.0, 2.0]]);
    }
}
