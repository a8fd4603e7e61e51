//! Pipelines driven by the annealed process `Z`: convergence to the limit
//! measure, freezing below the threshold, and relative-entropy decay.

use crate::diagnostics::{
    divergence_from_masses, gibbs_bin_masses, kl_to_gibbs, uniform_edges, DivergenceEstimate, OccupationAccumulator,
    BURN_IN_FRACTION,
};
use crate::error::{Error, Result};
use crate::gibbs::{pi0, GibbsMeasure};
use crate::landscape::search_half_width;
use crate::potential::{Basins, Potential};
use crate::schedule::{annealing_state, Schedule};
use crate::sde::{ensemble_map, run_z_annealed, Annealing, ProcessKind, Sample, SampleSink, SimConfig, Trajectory};
use crate::table::CsvTable;

use super::config::ExperimentConfig;
use super::verdict::Criterion;
use super::{blow_up_criterion, Artifact};

/// Burn-in end followed by `n` geometric checkpoints up to the horizon.
pub fn checkpoint_times(horizon: f64, n: usize) -> Vec<f64> {
    let t0 = BURN_IN_FRACTION * horizon;
    (0..=n).map(|i| t0 * (horizon / t0).powf(i as f64 / n as f64)).collect()
}

struct Setup {
    potential: Potential,
    schedule: Schedule,
    r: f64,
    cfg: SimConfig,
    basins: Basins,
    edges: Vec<f64>,
    window: (f64, f64),
    checkpoints: Vec<f64>,
    pools: Vec<(f64, f64)>,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let potential = config.build_potential()?;
        let schedule = config.build_schedule(&potential)?;
        let cfg = config.sim_config()?;
        let basins = Basins::from_scan(&potential.critical_points()?)?;
        let l = search_half_width(&potential);
        let edges = uniform_edges(-l, l, config.analysis.bins);
        let t = config.horizon;
        let window = (t * (1.0 - config.analysis.window_fraction), t);
        let checkpoints = checkpoint_times(t, config.analysis.checkpoints);
        let pools = checkpoints.iter().map(|&c| (c * (1.0 - config.analysis.pool_fraction), c)).collect();
        Ok(Setup { potential, schedule, r: config.r, cfg, basins, edges, window, checkpoints, pools })
    }

    fn gibbs_at(&self, t: f64) -> Result<GibbsMeasure> {
        let st = annealing_state(&self.schedule, self.r, t)?;
        GibbsMeasure::new(&self.potential, st.eps2, st.a)
    }
}

struct AnnealedPath {
    occupation: OccupationAccumulator,
    pooled: Vec<Vec<f64>>,
    final_x: f64,
    blow_up: Option<f64>,
    trace: Option<Trajectory>,
}

struct PathSink<'a> {
    pools: &'a [(f64, f64)],
    path: AnnealedPath,
}

impl SampleSink for PathSink<'_> {
    fn sample(&mut self, s: &Sample) {
        let x = s.x.x();
        self.path.occupation.push(s.t, x);
        for (j, (lo, hi)) in self.pools.iter().enumerate() {
            if s.t >= *lo && s.t <= *hi {
                self.path.pooled[j].push(x);
            }
        }
        self.path.final_x = x;
        if let Some(tr) = self.path.trace.as_mut() {
            tr.sample(s);
        }
    }
}

fn run_ensemble(config: &ExperimentConfig, setup: &Setup) -> Result<Vec<AnnealedPath>> {
    let z0 = config.z0(setup.potential.dim())?;
    let annealing = Annealing::Schedule { schedule: setup.schedule, r: setup.r };
    let results = ensemble_map(config.ensemble, config.seed, 0, |i, stream| -> Result<AnnealedPath> {
        let trace = (i == 0).then(|| Trajectory::empty(ProcessKind::ZAnnealed, setup.cfg.dt, config.seed, 0));
        let mut sink = PathSink {
            pools: &setup.pools,
            path: AnnealedPath {
                occupation: OccupationAccumulator::new(setup.edges.clone(), Some(setup.basins.clone()), setup.window),
                pooled: vec![Vec::new(); setup.pools.len()],
                final_x: z0.x(),
                blow_up: None,
                trace,
            },
        };
        let outcome = run_z_annealed(&setup.potential, &annealing, z0, &setup.cfg, stream, &mut sink)?;
        sink.path.blow_up = outcome.blow_up;
        Ok(sink.path)
    });
    results.into_iter().collect()
}

fn surviving(paths: &[AnnealedPath]) -> impl Iterator<Item = &AnnealedPath> {
    paths.iter().filter(|p| p.blow_up.is_none())
}

/// Pooled-sample KL and TV against the Gibbs measure at each checkpoint.
fn checkpoint_divergences(setup: &Setup, paths: &[AnnealedPath]) -> Result<Vec<DivergenceEstimate>> {
    (0..setup.checkpoints.len())
        .map(|j| {
            let samples: Vec<f64> = surviving(paths).flat_map(|p| p.pooled[j].iter().copied()).collect();
            kl_to_gibbs(&samples, &setup.gibbs_at(setup.checkpoints[j])?, &setup.edges)
        })
        .collect()
}

fn checkpoint_table(setup: &Setup, est: &[DivergenceEstimate], slack: f64) -> Result<CsvTable> {
    let mut table = CsvTable::new(["t", "eps2", "a", "samples", "kl", "tv", "tv2", "pinsker_rhs"]);
    for (t, e) in setup.checkpoints.iter().zip(est) {
        let st = annealing_state(&setup.schedule, setup.r, *t)?;
        table.push(vec![*t, st.eps2, st.a, e.samples as f64, e.kl, e.tv, e.tv * e.tv, 2.0 * e.kl + slack]);
    }
    Ok(table)
}

fn pooled_occupation(setup: &Setup, paths: &[AnnealedPath]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut pooled: Option<OccupationAccumulator> = None;
    for p in surviving(paths) {
        match pooled.as_mut() {
            Some(acc) => acc.merge(&p.occupation),
            None => pooled = Some(p.occupation.clone()),
        }
    }
    let summary = pooled.ok_or_else(|| Error::InsufficientData("every path blew up".into()))?.summary()?;
    let per_path = ((setup.window.1 - setup.window.0) / (setup.cfg.dt * setup.cfg.stride as f64)).round() as usize + 1;
    Ok((summary.masses, summary.basin_masses, per_path * surviving(paths).count()))
}

fn trace_artifact(paths: &[AnnealedPath]) -> Option<Artifact> {
    paths.first().and_then(|p| p.trace.as_ref()).map(|tr| ("trajectory_0.csv".to_string(), tr.to_table()))
}

fn blow_ups(paths: &[AnnealedPath]) -> usize {
    paths.iter().filter(|p| p.blow_up.is_some()).count()
}

pub(super) fn anneal_to_pi0(config: &ExperimentConfig) -> Result<(Vec<Criterion>, Vec<Artifact>)> {
    let setup = Setup::new(config)?;
    let th = &config.thresholds;
    let limit = pi0(&setup.potential)?;
    let mut target = vec![0.0; setup.basins.len()];
    for (atom, w) in limit.atoms.iter().zip(&limit.weights) {
        target[setup.basins.locate(atom[0])] += w;
    }
    let paths = run_ensemble(config, &setup)?;
    let blown = blow_ups(&paths);
    let (masses, basin_masses, samples) = pooled_occupation(&setup, &paths)?;

    let worst = basin_masses.iter().zip(&target).map(|(m, w)| (m - w).abs()).fold(0.0, f64::max);
    let basin = Criterion::new(
        "basin_masses",
        worst <= th.basin_tolerance,
        format!("late-window basin masses {basin_masses:?} against limit weights {target:?}"),
    )
    .with("max_deviation", worst)
    .with("tolerance", th.basin_tolerance)
    .with("basin_masses", basin_masses.clone())
    .with("limit_weights", target.clone());

    let final_measure = setup.gibbs_at(config.horizon)?;
    let q = gibbs_bin_masses(&final_measure, &setup.edges);
    let occ = divergence_from_masses(&masses, &q, samples);
    let tv = Criterion::new(
        "occupation_tv",
        occ.tv < th.occupation_tv,
        "TV between the late-window occupation and the Gibbs measure at the horizon",
    )
    .with("tv", occ.tv)
    .with("kl", occ.kl)
    .with("threshold", th.occupation_tv);

    let est = checkpoint_divergences(&setup, &paths)?;
    let violations = est.iter().filter(|e| !e.pinsker_holds(th.pinsker_slack)).count();
    let pinsker = Criterion::new(
        "pinsker",
        violations == 0,
        format!("TV² ≤ 2 KL + {} at {} checkpoints", th.pinsker_slack, est.len()),
    )
    .with("violations", violations)
    .with("max_tv2_minus_2kl", est.iter().map(|e| e.tv * e.tv - 2.0 * e.kl).fold(f64::NEG_INFINITY, f64::max));

    let mut occupation = CsvTable::new(["bin_lo", "bin_hi", "occupation", "gibbs"]);
    for i in 0..masses.len() {
        occupation.push(vec![setup.edges[i], setup.edges[i + 1], masses[i], q[i]]);
    }
    let mut basins = CsvTable::new(["minimum", "occupation", "limit_weight"]);
    for i in 0..setup.basins.len() {
        basins.push(vec![setup.basins.minima[i], basin_masses[i], target[i]]);
    }
    let mut artifacts = vec![
        ("occupation.csv".to_string(), occupation),
        ("basins.csv".to_string(), basins),
        ("checkpoints.csv".to_string(), checkpoint_table(&setup, &est, th.pinsker_slack)?),
    ];
    artifacts.extend(trace_artifact(&paths));
    let criteria = vec![basin, tv, pinsker, blow_up_criterion(blown, paths.len(), th.max_blow_up_fraction)];
    Ok((criteria, artifacts))
}

pub(super) fn freeze_subcritical(config: &ExperimentConfig) -> Result<(Vec<Criterion>, Vec<Artifact>)> {
    let setup = Setup::new(config)?;
    let th = &config.thresholds;
    let z0 = config.z0(1)?;
    let start = setup.basins.locate(z0.x());
    let paths = run_ensemble(config, &setup)?;
    let blown = blow_ups(&paths);

    let mut table = CsvTable::new(["path", "start_basin_mass", "final_x"]);
    let mut per_path = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        if p.blow_up.is_some() {
            continue;
        }
        let m = p.occupation.summary()?.basin_masses[start];
        table.push(vec![i as f64, m, p.final_x]);
        per_path.push(m);
    }
    if per_path.is_empty() {
        return Err(Error::InsufficientData("every path blew up".into()));
    }
    let mass = per_path.iter().sum::<f64>() / per_path.len() as f64;
    let majority = per_path.iter().filter(|m| **m > 0.5).count() as f64 / per_path.len() as f64;
    let frozen = Criterion::new(
        "frozen_mass",
        mass >= th.freeze_mass,
        format!("final-window mass in the basin of {} (start {})", setup.basins.minima[start], z0.x()),
    )
    .with("mass", mass)
    .with("majority_fraction", majority)
    .with("threshold", th.freeze_mass);

    let mut artifacts = vec![("paths.csv".to_string(), table)];
    artifacts.extend(trace_artifact(&paths));
    Ok((vec![frozen, blow_up_criterion(blown, paths.len(), th.max_blow_up_fraction)], artifacts))
}

pub(super) fn free_energy_decay(config: &ExperimentConfig) -> Result<(Vec<Criterion>, Vec<Artifact>)> {
    let setup = Setup::new(config)?;
    let th = &config.thresholds;
    let paths = run_ensemble(config, &setup)?;
    let blown = blow_ups(&paths);
    let est = checkpoint_divergences(&setup, &paths)?;
    let kl: Vec<f64> = est.iter().map(|e| e.kl).collect();
    let decreases = kl.windows(2).filter(|w| w[1] < w[0]).count();
    let decay = Criterion::new(
        "entropy_decrease",
        decreases >= th.decay_count,
        format!("checkpoints at which Ĥ(p_t ‖ Π_t) fell below its previous value, out of {}", kl.len() - 1),
    )
    .with("decreases", decreases)
    .with("required", th.decay_count)
    .with("kl", kl.clone());
    let mut artifacts = vec![("entropy.csv".to_string(), checkpoint_table(&setup, &est, th.pinsker_slack)?)];
    artifacts.extend(trace_artifact(&paths));
    Ok((vec![decay, blow_up_criterion(blown, paths.len(), th.max_blow_up_fraction)], artifacts))
}
