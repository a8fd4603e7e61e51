//! Constant-`g` pipeline: the running mean `μ̄` of `Y` and the coupling of `Y`
//! with the Kolmogorov process.

use crate::diagnostics::{mean_verdict, series_table, MeanTracker};
use crate::error::{Error, Result};
use crate::gibbs::gamma_stats;
use crate::rng::RngStream;
use crate::sde::{ensemble_map, run_coupled_yz, Sample, SampleSink};
use crate::table::CsvTable;

use super::config::ExperimentConfig;
use super::verdict::Criterion;
use super::{blow_up_criterion, Artifact};

/// `|γ̄|` below this counts as a vanishing mean.
const ZERO_MEAN: f64 = 1e-8;
/// Target number of recorded points per path.
const RECORDED_POINTS: u64 = 10_000;
const BAND_POINTS: usize = 100;

struct MeanGapSink {
    thin: u64,
    seen: u64,
    integral: f64,
    last: Option<(f64, f64, f64)>,
    last_mu: f64,
    early: (f64, f64),
    late: (f64, f64),
    early_integral: f64,
    late_integral: f64,
    t: Vec<f64>,
    m: Vec<f64>,
    mu: Vec<f64>,
    gap2: Vec<f64>,
}

impl MeanGapSink {
    fn record(&mut self, t: f64, mu: f64, gap2: f64) {
        if self.t.last() == Some(&t) {
            return;
        }
        self.t.push(t);
        self.m.push(if t > 0.0 { self.integral / t } else { f64::NAN });
        self.mu.push(mu);
        self.gap2.push(gap2);
    }
}

impl SampleSink for MeanGapSink {
    fn sample(&mut self, s: &Sample) {
        let y = s.x.x();
        let mu = s.mu.map_or(f64::NAN, |m| m.x());
        let gap2 = s.partner.map_or(f64::NAN, |z| (s.x - z).norm2());
        if let Some((t0, y0, g0)) = self.last {
            self.integral += 0.5 * (s.t - t0) * (y0 + y);
            let area = 0.5 * (s.t - t0) * (g0 + gap2);
            if t0 >= self.early.0 && s.t <= self.early.1 {
                self.early_integral += area;
            }
            if t0 >= self.late.0 && s.t <= self.late.1 {
                self.late_integral += area;
            }
        }
        self.last = Some((s.t, y, gap2));
        self.last_mu = mu;
        if self.seen.is_multiple_of(self.thin) {
            self.record(s.t, mu, gap2);
        }
        self.seen += 1;
    }
}

struct PathResult {
    tracker: MeanTracker,
    gap2: Vec<f64>,
    early: f64,
    late: f64,
    blow_up: bool,
}

pub(super) fn constant_g_mean(config: &ExperimentConfig) -> Result<(Vec<Criterion>, Vec<Artifact>)> {
    let potential = config.build_potential()?;
    let cfg = config.sim_config()?;
    let th = &config.thresholds;
    let (x0, mu0, z0) = (config.x0(1)?, config.mu0(1)?, config.z0(1)?);
    let y0 = x0 - mu0;
    let horizon = config.horizon;
    let early = (1.0, 10.0);
    let late = (horizon / 10.0, horizon);
    let thin = (cfg.steps() / cfg.stride as u64 / RECORDED_POINTS).max(1);

    let results = ensemble_map(config.ensemble, config.seed, 0, |_, stream| -> Result<PathResult> {
        let mut sink = MeanGapSink {
            thin,
            seen: 0,
            integral: 0.0,
            last: None,
            last_mu: f64::NAN,
            early,
            late,
            early_integral: 0.0,
            late_integral: 0.0,
            t: Vec::new(),
            m: Vec::new(),
            mu: Vec::new(),
            gap2: Vec::new(),
        };
        let outcome = run_coupled_yz(&potential, config.r, y0, z0, mu0, &cfg, stream, &mut sink)?;
        if let Some((t, _, g)) = sink.last {
            sink.record(t, sink.last_mu, g);
        }
        let mu_over_log =
            sink.t.iter().zip(&sink.mu).map(|(t, m)| if *t > 1.0 { m / t.ln() } else { f64::NAN }).collect();
        Ok(PathResult {
            tracker: MeanTracker { t: sink.t, m: sink.m, mu: sink.mu, mu_over_log },
            gap2: sink.gap2,
            early: sink.early_integral / (early.1 - early.0),
            late: sink.late_integral / (late.1 - late.0),
            blow_up: outcome.blow_up.is_some(),
        })
    });
    let results: Vec<PathResult> = results.into_iter().collect::<Result<_>>()?;
    let blown = results.iter().filter(|r| r.blow_up).count();
    let ok: Vec<&PathResult> = results.iter().filter(|r| !r.blow_up).collect();
    if ok.is_empty() {
        return Err(Error::InsufficientData("every path blew up".into()));
    }

    let trackers: Vec<MeanTracker> = ok.iter().map(|r| r.tracker.clone()).collect();
    let ensemble = MeanTracker::ensemble_mean(&trackers)?;
    let gamma_bar = gamma_stats(&potential)?.mean;
    let report = mean_verdict(&ensemble, if gamma_bar.abs() < ZERO_MEAN { 0.0 } else { gamma_bar })?;
    let mean = if gamma_bar.abs() < ZERO_MEAN {
        Criterion::new(
            "mean_dichotomy",
            report.last_decade_oscillation < th.flatness * report.range,
            "γ̄ = 0: the ensemble-mean μ̄ must flatten over the last time decade",
        )
        .with("last_decade_oscillation", report.last_decade_oscillation)
        .with("range", report.range)
        .with("relative_oscillation", report.last_decade_oscillation / report.range)
        .with("threshold", th.flatness)
    } else {
        let rel = (report.final_mu_over_log - gamma_bar).abs() / gamma_bar.abs();
        Criterion::new(
            "mean_dichotomy",
            rel <= th.log_ratio_tolerance,
            "γ̄ ≠ 0: the ensemble-mean μ̄_T / log T must approach γ̄",
        )
        .with("mu_over_log", report.final_mu_over_log)
        .with("relative_error", rel)
        .with("threshold", th.log_ratio_tolerance)
    }
    .with("gamma_bar", gamma_bar)
    .with("final_mu", *ensemble.mu.last().unwrap());

    let early_gap = ok.iter().map(|r| r.early).sum::<f64>() / ok.len() as f64;
    let late_gap = ok.iter().map(|r| r.late).sum::<f64>() / ok.len() as f64;
    let ratio = early_gap / late_gap;
    let gap = Criterion::new(
        "coupled_gap",
        ratio >= th.gap_drop,
        format!("mean squared gap over [{}, {}] against [{}, {}]", early.0, early.1, late.0, late.1),
    )
    .with("early", early_gap)
    .with("late", late_gap)
    .with("ratio", ratio)
    .with("threshold", th.gap_drop);

    let n = ensemble.t.len();
    let mean_gap: Vec<f64> = (0..n).map(|i| ok.iter().map(|r| r.gap2[i]).sum::<f64>() / ok.len() as f64).collect();
    let mut table = CsvTable::new(["t", "m", "mu", "mu_over_log", "gap2"]);
    for i in 0..n {
        table.push(vec![ensemble.t[i], ensemble.m[i], ensemble.mu[i], ensemble.mu_over_log[i], mean_gap[i]]);
    }
    let picks = band_indices(&ensemble.t);
    let band_t: Vec<f64> = picks.iter().map(|&i| ensemble.t[i]).collect();
    let band_paths: Vec<Vec<f64>> = ok.iter().map(|r| picks.iter().map(|&i| r.tracker.mu[i]).collect()).collect();
    let mut rng = RngStream::new(config.seed, u64::MAX);
    let band = series_table(&band_t, &band_paths, Some(&mut rng));

    let artifacts = vec![("mean.csv".to_string(), table), ("mu_band.csv".to_string(), band)];
    Ok((vec![mean, gap, blow_up_criterion(blown, results.len(), th.max_blow_up_fraction)], artifacts))
}

/// About [`BAND_POINTS`] indices spread geometrically over `t > 0`.
fn band_indices(t: &[f64]) -> Vec<usize> {
    let first = t.iter().position(|&s| s > 0.0).unwrap_or(0);
    let (lo, hi) = (t[first], t[t.len() - 1]);
    let mut picks: Vec<usize> = (0..BAND_POINTS)
        .map(|i| {
            let target = lo * (hi / lo).powf(i as f64 / (BAND_POINTS - 1) as f64);
            t.partition_point(|&s| s < target).min(t.len() - 1)
        })
        .collect();
    picks.dedup();
    picks
}
