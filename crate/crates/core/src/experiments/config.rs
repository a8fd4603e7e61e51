//! JSON experiment configuration and its validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::potential::{osc_chi, CatalogParams, Potential};
use crate::schedule::{threshold_check_with, Schedule, ThresholdVerdict};
use crate::sde::{SimConfig, DEFAULT_DT, DEFAULT_STRIDE};

pub const DEFAULT_ENSEMBLE: usize = 256;
pub const DEFAULT_HORIZON: f64 = 1e4;
const MAX_STEPS: f64 = 1e9;
/// Samples a histogram-based KL estimate needs.
const MIN_POOLED: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AnnealToPi0,
    FreezeSubcritical,
    ConstantGMean,
    LandscapeSpectrum,
    FreeEnergyDecay,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::AnnealToPi0,
        ExperimentKind::FreezeSubcritical,
        ExperimentKind::ConstantGMean,
        ExperimentKind::LandscapeSpectrum,
        ExperimentKind::FreeEnergyDecay,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::AnnealToPi0 => "anneal_to_pi0",
            ExperimentKind::FreezeSubcritical => "freeze_subcritical",
            ExperimentKind::ConstantGMean => "constant_g_mean",
            ExperimentKind::LandscapeSpectrum => "landscape_spectrum",
            ExperimentKind::FreeEnergyDecay => "free_energy_decay",
        }
    }

    /// Whether the pipeline relies on annealing above the threshold.
    fn expects_convergence(&self) -> bool {
        matches!(self, ExperimentKind::AnnealToPi0 | ExperimentKind::FreeEnergyDecay)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub id: String,
    #[serde(default)]
    pub params: CatalogParams,
}

/// Schedule as written in a config. A logarithmic schedule takes exactly one of
/// `k` (the coefficient of `g`), `k_effective` (the coefficient in
/// `ε² ~ k_eff / log t`) or `k_relative` (`k_eff` as a multiple of
/// `max{2 osc(χ), d/4}`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_effective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_relative: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

impl ScheduleSpec {
    pub fn relative(k_relative: f64) -> Self {
        ScheduleSpec { family: "logarithmic".into(), k_relative: Some(k_relative), ..Default::default() }
    }

    pub fn constant(g0: f64) -> Self {
        ScheduleSpec { family: "constant".into(), g0: Some(g0), ..Default::default() }
    }

    /// The schedule, given the threshold `max{2 osc(χ), d/4}` of the potential.
    pub fn resolve(&self, threshold: f64) -> Result<Schedule> {
        match self.family.as_str() {
            "constant" => {
                if self.k.is_some() || self.k_effective.is_some() || self.k_relative.is_some() || self.shift.is_some() {
                    return Err(Error::Config("a constant schedule takes only g0".into()));
                }
                Schedule::constant(self.g0.ok_or_else(|| Error::Config("constant schedule needs g0".into()))?)
            }
            "logarithmic" => {
                if self.g0.is_some() {
                    return Err(Error::Config("a logarithmic schedule does not take g0".into()));
                }
                let shift = self.shift.unwrap_or(std::f64::consts::E);
                let k = match (self.k, self.k_effective, self.k_relative) {
                    (Some(k), None, None) => k,
                    (None, Some(ke), None) => 1.0 / positive("schedule.k_effective", ke)?,
                    (None, None, Some(kr)) => 1.0 / (positive("schedule.k_relative", kr)? * threshold),
                    _ => {
                        return Err(Error::Config(
                            "a logarithmic schedule takes exactly one of k, k_effective, k_relative".into(),
                        ))
                    }
                };
                Schedule::logarithmic(k, shift)
            }
            other => Err(Error::Config(format!("unknown schedule family `{other}` (constant, logarithmic)"))),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Allowed deviation of each late-window basin mass from its limit weight.
    pub basin_tolerance: f64,
    pub occupation_tv: f64,
    /// Slack in `TV² ≤ 2 KL + slack`.
    pub pinsker_slack: f64,
    /// Minimum final-window mass in the starting basin when freezing.
    pub freeze_mass: f64,
    pub log_ratio_tolerance: f64,
    /// Last-decade oscillation of `μ̄` as a fraction of its range.
    pub flatness: f64,
    /// Minimum ratio of first-decade to last-decade mean squared gap.
    pub gap_drop: f64,
    /// Minimum number of checkpoints at which the entropy estimate decreased.
    pub decay_count: usize,
    pub refinement: f64,
    /// Largest allowed max/min ratio of `|m(t) − m(∞)|·a(t)` over the grid.
    pub bound_spread: f64,
    pub gap_exponent_tolerance: f64,
    pub max_blow_up_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            basin_tolerance: 0.08,
            occupation_tv: 0.1,
            pinsker_slack: 0.01,
            freeze_mass: 0.9,
            log_ratio_tolerance: 0.1,
            flatness: 0.05,
            gap_drop: 10.0,
            decay_count: 4,
            refinement: 0.01,
            bound_spread: 2.0,
            gap_exponent_tolerance: 0.25,
            max_blow_up_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Analysis {
    /// Histogram bins on the search box; the outer bins extend to ±∞.
    pub bins: usize,
    /// Geometric checkpoints after burn-in.
    pub checkpoints: usize,
    /// Final window as a fraction of the horizon.
    pub window_fraction: f64,
    /// States recorded in `[t(1 − f), t]` are pooled into checkpoint `t`.
    pub pool_fraction: f64,
    /// Grid step of the minimax-height sweeps.
    pub grid_step: f64,
    /// Grid step of the generator discretization. Coarser than `grid_step`
    /// because the absolute rounding error of `λ₁` grows like `ε²/h²`.
    pub spectrum_step: f64,
    pub t_grid: Vec<f64>,
    pub eps2_grid: Vec<f64>,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            bins: 100,
            checkpoints: 5,
            window_fraction: 0.1,
            pool_fraction: 0.02,
            grid_step: 1e-3,
            spectrum_step: 1e-2,
            t_grid: vec![10.0, 100.0, 1e3, 1e4],
            eps2_grid: vec![0.5, 0.33, 0.25, 0.2],
        }
    }
}

fn default_r() -> f64 {
    1.0
}
fn default_ensemble() -> usize {
    DEFAULT_ENSEMBLE
}
fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_stride() -> usize {
    DEFAULT_STRIDE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub analysis: Analysis,
}

const TOP_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "potential",
    "schedule",
    "r",
    "x0",
    "mu0",
    "z0",
    "ensemble",
    "horizon",
    "dt",
    "stride",
    "output_dir",
    "thresholds",
    "analysis",
];
const REQUIRED_KEYS: &[&str] = &["experiment", "seed", "potential"];
const POTENTIAL_KEYS: &[&str] = &["id", "params"];
const PARAM_KEYS: &[&str] = &["dim", "stiffness", "h_minus", "h_plus", "barrier", "center", "offset"];
const SCHEDULE_KEYS: &[&str] = &["family", "g0", "k", "k_effective", "k_relative", "shift"];
const THRESHOLD_KEYS: &[&str] = &[
    "basin_tolerance",
    "occupation_tv",
    "pinsker_slack",
    "freeze_mass",
    "log_ratio_tolerance",
    "flatness",
    "gap_drop",
    "decay_count",
    "refinement",
    "bound_spread",
    "gap_exponent_tolerance",
    "max_blow_up_fraction",
];
const ANALYSIS_KEYS: &[&str] =
    &["bins", "checkpoints", "window_fraction", "pool_fraction", "grid_step", "spectrum_step", "t_grid", "eps2_grid"];

/// Errors and warnings from validating a config; runnable iff `errors` is empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn check_keys(v: &Value, path: &str, allowed: &[&str], errors: &mut Vec<String>) {
    if let Some(map) = v.as_object() {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                errors.push(format!("unknown key `{path}{key}`"));
            }
        }
    }
}

/// Key-level problems of a raw JSON document: every unknown key and every
/// missing required key, not just the first one.
fn structural_errors(v: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    let Some(map) = v.as_object() else {
        return vec!["config must be a JSON object".into()];
    };
    check_keys(v, "", TOP_KEYS, &mut errors);
    for key in REQUIRED_KEYS {
        if !map.contains_key(*key) {
            errors.push(format!("missing required key `{key}`"));
        }
    }
    if let Some(p) = map.get("potential") {
        check_keys(p, "potential.", POTENTIAL_KEYS, &mut errors);
        if p.get("id").is_none() {
            errors.push("missing potential id (`potential.id`)".into());
        }
        if let Some(params) = p.get("params") {
            check_keys(params, "potential.params.", PARAM_KEYS, &mut errors);
        }
    }
    for (key, allowed) in [("schedule", SCHEDULE_KEYS), ("thresholds", THRESHOLD_KEYS), ("analysis", ANALYSIS_KEYS)] {
        if let Some(sub) = map.get(key) {
            check_keys(sub, &format!("{key}."), allowed, &mut errors);
        }
    }
    errors
}

impl ExperimentConfig {
    /// Parses a JSON config, reporting all key-level errors at once.
    pub fn from_json(text: &str) -> std::result::Result<Self, Vec<String>> {
        let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("malformed JSON: {e}")])?;
        let errors = structural_errors(&value);
        if !errors.is_empty() {
            return Err(errors);
        }
        serde_json::from_value(value).map_err(|e| vec![e.to_string()])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_potential(&self) -> Result<Potential> {
        Potential::from_catalog(&self.potential.id, &self.potential.params)
    }

    fn default_schedule(&self) -> ScheduleSpec {
        match self.experiment {
            ExperimentKind::FreezeSubcritical => ScheduleSpec::relative(0.1),
            ExperimentKind::ConstantGMean => ScheduleSpec::constant(1.0),
            _ => ScheduleSpec::relative(4.0),
        }
    }

    pub fn schedule_spec(&self) -> ScheduleSpec {
        self.schedule.clone().unwrap_or_else(|| self.default_schedule())
    }

    pub fn build_schedule(&self, potential: &Potential) -> Result<Schedule> {
        let threshold = (2.0 * osc_chi(potential)).max(potential.dim() as f64 / 4.0);
        self.schedule_spec().resolve(threshold)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        Ok(SimConfig::new(self.dt, self.horizon)?.with_stride(self.stride))
    }

    fn point(&self, name: &str, v: &Option<Vec<f64>>, dim: usize) -> Result<Option<Point>> {
        match v {
            None => Ok(None),
            Some(c) if c.len() == dim && c.iter().all(|x| x.is_finite()) => Ok(Point::from_slice(c)),
            Some(c) => Err(Error::Config(format!("{name} must hold {dim} finite coordinates, got {c:?}"))),
        }
    }

    pub fn x0(&self, dim: usize) -> Result<Point> {
        Ok(self.point("x0", &self.x0, dim)?.unwrap_or(Point::zero(dim)))
    }

    pub fn mu0(&self, dim: usize) -> Result<Point> {
        Ok(self.point("mu0", &self.mu0, dim)?.unwrap_or(Point::zero(dim)))
    }

    pub fn z0(&self, dim: usize) -> Result<Point> {
        Ok(self.point("z0", &self.z0, dim)?.unwrap_or(Point::zero(dim)))
    }

    /// All semantic errors, plus warnings when the schedule contradicts the
    /// behaviour the experiment expects.
    pub fn validate(&self) -> Validation {
        let mut v = Validation::default();
        let mut err = |e: Error| v.errors.push(strip(&e));
        if !(self.r.is_finite() && self.r > 0.0) {
            err(Error::Config(format!("r must be positive, got {}", self.r)));
        }
        if self.ensemble == 0 {
            err(Error::Config("ensemble must be at least 1".into()));
        }
        if self.stride == 0 {
            err(Error::Config("stride must be at least 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        } else if !(self.horizon.is_finite() && self.horizon > self.dt) {
            err(Error::Config(format!("horizon {} must exceed dt {}", self.horizon, self.dt)));
        } else if self.horizon / self.dt >= MAX_STEPS {
            err(Error::Config(format!("horizon/dt = {:e} must stay below 1e9", self.horizon / self.dt)));
        }
        let a = &self.analysis;
        if a.bins < 2 {
            err(Error::Config("analysis.bins must be at least 2".into()));
        }
        if a.checkpoints == 0 {
            err(Error::Config("analysis.checkpoints must be at least 1".into()));
        }
        for (name, f) in [("analysis.window_fraction", a.window_fraction), ("analysis.pool_fraction", a.pool_fraction)]
        {
            if !(f > 0.0 && f < 1.0) {
                err(Error::Config(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        for (name, h) in [("analysis.grid_step", a.grid_step), ("analysis.spectrum_step", a.spectrum_step)] {
            if !(h.is_finite() && h > 0.0) {
                err(Error::Config(format!("{name} must be positive, got {h}")));
            }
        }
        if a.t_grid.is_empty() || a.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            err(Error::Config("analysis.t_grid must be a nonempty list of positive times".into()));
        }
        if a.eps2_grid.len() < 2 || a.eps2_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            err(Error::Config("analysis.eps2_grid must list at least two positive temperatures".into()));
        }
        if matches!(self.experiment, ExperimentKind::AnnealToPi0 | ExperimentKind::FreeEnergyDecay)
            && self.dt > 0.0
            && self.stride > 0
        {
            // the first checkpoint has the shortest pooling window
            let first = crate::diagnostics::BURN_IN_FRACTION * self.horizon * a.pool_fraction;
            let pooled = self.ensemble as f64 * (first / (self.dt * self.stride as f64)).floor();
            if pooled < MIN_POOLED as f64 {
                err(Error::Config(format!(
                    "the first checkpoint pools about {pooled} states; at least {MIN_POOLED} are needed \
                     (raise ensemble or analysis.pool_fraction, or lower stride)"
                )));
            }
        }
        let th = &self.thresholds;
        for (name, x) in [
            ("basin_tolerance", th.basin_tolerance),
            ("occupation_tv", th.occupation_tv),
            ("pinsker_slack", th.pinsker_slack),
            ("freeze_mass", th.freeze_mass),
            ("log_ratio_tolerance", th.log_ratio_tolerance),
            ("flatness", th.flatness),
            ("gap_drop", th.gap_drop),
            ("refinement", th.refinement),
            ("bound_spread", th.bound_spread),
            ("gap_exponent_tolerance", th.gap_exponent_tolerance),
            ("max_blow_up_fraction", th.max_blow_up_fraction),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                err(Error::Config(format!("thresholds.{name} must be finite and nonnegative, got {x}")));
            }
        }
        if th.decay_count > a.checkpoints {
            err(Error::Config(format!(
                "thresholds.decay_count = {} exceeds analysis.checkpoints = {}",
                th.decay_count, a.checkpoints
            )));
        }

        let potential = match self.build_potential() {
            Ok(p) => p,
            Err(e) => {
                err(e);
                return v;
            }
        };
        let dim = potential.dim();
        for r in [self.x0(dim), self.mu0(dim), self.z0(dim)] {
            if let Err(e) = r {
                err(e);
            }
        }
        if self.experiment == ExperimentKind::FreezeSubcritical && self.z0.is_none() {
            err(Error::Config("freeze_subcritical needs an explicit z0".into()));
        }
        if self.experiment == ExperimentKind::LandscapeSpectrum && dim != 1 {
            err(Error::Config("landscape_spectrum needs a one-dimensional potential for the spectrum".into()));
        }
        if self.experiment == ExperimentKind::ConstantGMean {
            if dim != 1 {
                err(Error::Config("constant_g_mean compares with γ̄, which is defined on the line".into()));
            }
            if self.horizon < 100.0 {
                err(Error::Config("constant_g_mean needs horizon ≥ 100 for two disjoint time decades".into()));
            }
        }
        if matches!(
            self.experiment,
            ExperimentKind::AnnealToPi0 | ExperimentKind::FreezeSubcritical | ExperimentKind::FreeEnergyDecay
        ) && dim != 1
        {
            err(Error::Config(format!("{} histograms a one-dimensional state", self.experiment.as_str())));
        }
        let osc = osc_chi(&potential);
        let schedule = match self.build_schedule(&potential) {
            Ok(s) => s,
            Err(e) => {
                err(e);
                return v;
            }
        };
        let report = threshold_check_with(&schedule, osc, dim);
        let constant_expected = self.experiment == ExperimentKind::ConstantGMean;
        if constant_expected && schedule != (Schedule::Constant { g0: 1.0 }) {
            v.errors.push("constant_g_mean needs the constant schedule g0 = 1, matching γ ∝ exp(−2V)".into());
        }
        if !constant_expected && self.experiment != ExperimentKind::LandscapeSpectrum && schedule.is_constant() {
            v.errors.push(format!("{} needs a logarithmic schedule", self.experiment.as_str()));
        }
        if self.experiment.expects_convergence() && report.verdict == ThresholdVerdict::MayFreeze {
            v.warnings.push(format!(
                "k_eff = {} is below the threshold max{{2 osc(χ), d/4}} = {}: the process may freeze",
                report.k_effective.unwrap_or(f64::NAN),
                report.threshold()
            ));
        }
        if self.experiment == ExperimentKind::FreezeSubcritical
            && report.verdict == ThresholdVerdict::ConvergesToGlobalMinima
        {
            v.warnings.push(format!(
                "k_eff = {} exceeds the threshold {}: freezing is not expected",
                report.k_effective.unwrap_or(f64::NAN),
                report.threshold()
            ));
        }
        v
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(s) | Error::Domain(s) => s.clone(),
        other => other.to_string(),
    }
}
