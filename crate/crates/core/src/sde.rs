//! Euler–Maruyama integrators for the diffusion `X`, the centred pair
//! `(Y, μ̄)`, the annealed process `Z`, the unit-temperature Kolmogorov
//! process and the synchronously coupled pair `(Y, Z)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::potential::Potential;
use crate::rng::{NoiseSource, RngStream};
use crate::schedule::{annealing_state_from, Schedule};
use crate::table::CsvTable;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_BLOW_UP_RADIUS: f64 = 1e6;
/// Steps between refreshes of `ε²(t)` and `a(t)` for the annealed process.
pub const COEFFICIENT_REFRESH: u64 = 16;
const MAX_STEPS: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    X,
    YMu,
    ZAnnealed,
    ZKolmogorov,
    CoupledYz,
}

impl ProcessKind {
    pub fn has_mu(&self) -> bool {
        matches!(self, ProcessKind::X | ProcessKind::YMu | ProcessKind::CoupledYz)
    }
}

/// Step size, horizon, thinning stride and blow-up radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
    pub blow_up_radius: f64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if !(horizon.is_finite() && horizon >= dt) {
            return Err(Error::Config(format!("horizon must be at least dt, got {horizon} (dt = {dt})")));
        }
        if horizon / dt >= MAX_STEPS {
            return Err(Error::Config(format!("horizon/dt = {:.3e} exceeds 1e9", horizon / dt)));
        }
        Ok(SimConfig { dt, horizon, stride: DEFAULT_STRIDE, blow_up_radius: DEFAULT_BLOW_UP_RADIUS })
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }
}

/// One recorded state. `mu` is the empirical-mean channel, `partner` the
/// second component of a coupled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Point,
    pub mu: Option<Point>,
    pub partner: Option<Point>,
}

/// Receives the thinned samples of a run.
pub trait SampleSink {
    fn sample(&mut self, s: &Sample);
}

impl<F: FnMut(&Sample)> SampleSink for F {
    fn sample(&mut self, s: &Sample) {
        self(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOutcome {
    pub steps: u64,
    /// Time at which the state left the blow-up ball, if it did.
    pub blow_up: Option<f64>,
}

/// Temperature law of the annealed process: a schedule, or frozen constants
/// (`a = ∞` switches the confinement off).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Annealing {
    Schedule { schedule: Schedule, r: f64 },
    Frozen { eps2: f64, a: f64 },
}

impl Annealing {
    fn validate(&self) -> Result<()> {
        match *self {
            Annealing::Schedule { schedule, r } => {
                schedule.validate()?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::Config(format!("r must be positive, got {r}")));
                }
            }
            Annealing::Frozen { eps2, a } => {
                if !(eps2.is_finite() && eps2 > 0.0) || !(a > 0.0) {
                    return Err(Error::Config(format!("frozen annealing needs ε² > 0 and a > 0 (got {eps2}, {a})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub kind: ProcessKind,
    pub dt: f64,
    pub seed: u64,
    pub stream: u64,
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    pub mu: Vec<Point>,
    pub partner: Vec<Point>,
    pub blow_up: Option<f64>,
}

impl Trajectory {
    pub fn empty(kind: ProcessKind, dt: f64, seed: u64, stream: u64) -> Self {
        Trajectory {
            kind,
            dt,
            seed,
            stream,
            times: Vec::new(),
            states: Vec::new(),
            mu: Vec::new(),
            partner: Vec::new(),
            blow_up: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(1, |p| p.dim())
    }

    /// Squared gaps `|Y − Z|²` of a coupled run.
    pub fn gap2(&self) -> Vec<f64> {
        self.states.iter().zip(&self.partner).map(|(y, z)| (*y - *z).norm2()).collect()
    }

    /// Dump with header `t,x1[,x2],mu1[,mu2]` plus `gap2` for coupled runs.
    pub fn to_table(&self) -> CsvTable {
        let d = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        if self.kind.has_mu() {
            header.extend((1..=d).map(|i| format!("mu{i}")));
        }
        if self.kind == ProcessKind::CoupledYz {
            header.push("gap2".into());
        }
        let gaps = self.gap2();
        let mut table = CsvTable::new(header);
        for i in 0..self.len() {
            let mut row = vec![self.times[i]];
            row.extend_from_slice(self.states[i].coords());
            if self.kind.has_mu() {
                row.extend_from_slice(self.mu[i].coords());
            }
            if self.kind == ProcessKind::CoupledYz {
                row.push(gaps[i]);
            }
            table.push(row);
        }
        table
    }
}

impl SampleSink for Trajectory {
    fn sample(&mut self, s: &Sample) {
        self.times.push(s.t);
        self.states.push(s.x);
        if let Some(m) = s.mu {
            self.mu.push(m);
        }
        if let Some(p) = s.partner {
            self.partner.push(p);
        }
    }
}

#[inline]
fn gaussian<N: NoiseSource>(noise: &mut N, dim: usize, scale: f64) -> Point {
    if dim == 1 {
        Point::new1(scale * noise.standard_normal())
    } else {
        let a = noise.standard_normal();
        Point::new2(scale * a, scale * noise.standard_normal())
    }
}

fn check_start(potential: &Potential, points: &[Point]) -> Result<()> {
    for p in points {
        if p.dim() != potential.dim() || !p.is_finite() {
            return Err(Error::Domain(format!(
                "initial state {:?} does not fit a {}-dimensional potential",
                p.coords(),
                potential.dim()
            )));
        }
    }
    Ok(())
}

/// Trapezoid update of `(r + t) μ̄' = X − μ̄` from `t` to `t + dt`.
#[inline]
fn mean_step(mu: Point, x_old: Point, x_new: Point, r: f64, t: f64, dt: f64) -> Point {
    let (w0, w1) = (dt / (2.0 * (r + t)), dt / (2.0 * (r + t + dt)));
    mu + ((x_old - mu) * w0 + (x_new - mu) * w1) * (1.0 / (1.0 + w1))
}

fn emit<S: SampleSink>(sink: &mut S, n: u64, steps: u64, stride: u64, s: Sample) {
    if n.is_multiple_of(stride) || n == steps {
        sink.sample(&s);
    }
}

/// `dX = dB − g(t)∇V(X − μ̄)dt`, `μ̄` the weighted running mean of `X`.
#[allow(clippy::too_many_arguments)]
pub fn run_x<N: NoiseSource, S: SampleSink>(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    x0: Point,
    mu0: Point,
    cfg: &SimConfig,
    mut noise: N,
    sink: &mut S,
) -> Result<RunOutcome> {
    check_start(potential, &[x0, mu0])?;
    Annealing::Schedule { schedule: *schedule, r }.validate()?;
    let (dt, steps, stride) = (cfg.dt, cfg.steps(), cfg.stride as u64);
    let sq = dt.sqrt();
    let (mut x, mut mu) = (x0, mu0);
    for n in 0..=steps {
        let t = n as f64 * dt;
        emit(sink, n, steps, stride, Sample { t, x, mu: Some(mu), partner: None });
        if n == steps {
            break;
        }
        if !(x.norm2() <= cfg.blow_up_radius.powi(2)) {
            return Ok(RunOutcome { steps: n, blow_up: Some(t) });
        }
        let drift = potential.gradient(&(x - mu)) * (schedule.g(t) * dt);
        let next = x + gaussian(&mut noise, x.dim(), sq) - drift;
        mu = mean_step(mu, x, next, r, t, dt);
        x = next;
    }
    Ok(RunOutcome { steps, blow_up: None })
}

/// `dY = dB − g(t)∇V(Y)dt − Y dt/(r+t)`, `dμ̄ = Y dt/(r+t)`.
#[allow(clippy::too_many_arguments)]
pub fn run_y<N: NoiseSource, S: SampleSink>(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    y0: Point,
    mu0: Point,
    cfg: &SimConfig,
    mut noise: N,
    sink: &mut S,
) -> Result<RunOutcome> {
    check_start(potential, &[y0, mu0])?;
    Annealing::Schedule { schedule: *schedule, r }.validate()?;
    let (dt, steps, stride) = (cfg.dt, cfg.steps(), cfg.stride as u64);
    let sq = dt.sqrt();
    let (mut y, mut mu) = (y0, mu0);
    for n in 0..=steps {
        let t = n as f64 * dt;
        emit(sink, n, steps, stride, Sample { t, x: y, mu: Some(mu), partner: None });
        if n == steps {
            break;
        }
        if !(y.norm2() <= cfg.blow_up_radius.powi(2)) {
            return Ok(RunOutcome { steps: n, blow_up: Some(t) });
        }
        let drift = potential.gradient(&y) * (schedule.g(t) * dt) + y * (dt / (r + t));
        let next = y + gaussian(&mut noise, y.dim(), sq) - drift;
        mu += (y * (1.0 / (r + t)) + next * (1.0 / (r + t + dt))) * (0.5 * dt);
        y = next;
    }
    Ok(RunOutcome { steps, blow_up: None })
}

/// `dZ = ε(t) dB − (∇V(Z) + 2Z/a(t)) dt` in algorithmic time.
pub fn run_z_annealed<N: NoiseSource, S: SampleSink>(
    potential: &Potential,
    annealing: &Annealing,
    z0: Point,
    cfg: &SimConfig,
    mut noise: N,
    sink: &mut S,
) -> Result<RunOutcome> {
    check_start(potential, &[z0])?;
    annealing.validate()?;
    let (dt, steps, stride) = (cfg.dt, cfg.steps(), cfg.stride as u64);
    let sq = dt.sqrt();
    let mut z = z0;
    let (mut eps, mut confine, mut guess) = (0.0, 0.0, None);
    for n in 0..=steps {
        let t = n as f64 * dt;
        emit(sink, n, steps, stride, Sample { t, x: z, mu: None, partner: None });
        if n == steps {
            break;
        }
        if !(z.norm2() <= cfg.blow_up_radius.powi(2)) {
            return Ok(RunOutcome { steps: n, blow_up: Some(t) });
        }
        if n % COEFFICIENT_REFRESH == 0 {
            match *annealing {
                Annealing::Schedule { schedule, r } => {
                    let st = annealing_state_from(&schedule, r, t, guess)?;
                    guess = Some(st.inverse_time);
                    eps = st.eps2.sqrt();
                    confine = 2.0 / st.a;
                }
                Annealing::Frozen { eps2, a } => {
                    eps = eps2.sqrt();
                    confine = if a.is_finite() { 2.0 / a } else { 0.0 };
                }
            }
        }
        let drift = (potential.gradient(&z) + z * confine) * dt;
        z = z + gaussian(&mut noise, z.dim(), eps * sq) - drift;
    }
    Ok(RunOutcome { steps, blow_up: None })
}

/// `dZ = dB − ∇V(Z) dt`.
pub fn run_kolmogorov<N: NoiseSource, S: SampleSink>(
    potential: &Potential,
    z0: Point,
    cfg: &SimConfig,
    noise: N,
    sink: &mut S,
) -> Result<RunOutcome> {
    run_z_annealed(potential, &Annealing::Frozen { eps2: 1.0, a: f64::INFINITY }, z0, cfg, noise, sink)
}

/// `Y` with `g ≡ 1` and the Kolmogorov `Z` driven by the same increments.
/// `Y` carries its `μ̄` channel; `Z` is reported as the partner.
#[allow(clippy::too_many_arguments)]
pub fn run_coupled_yz<N: NoiseSource, S: SampleSink>(
    potential: &Potential,
    r: f64,
    y0: Point,
    z0: Point,
    mu0: Point,
    cfg: &SimConfig,
    mut noise: N,
    sink: &mut S,
) -> Result<RunOutcome> {
    check_start(potential, &[y0, z0, mu0])?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Config(format!("r must be positive, got {r}")));
    }
    let (dt, steps, stride) = (cfg.dt, cfg.steps(), cfg.stride as u64);
    let sq = dt.sqrt();
    let (mut y, mut z, mut mu) = (y0, z0, mu0);
    for n in 0..=steps {
        let t = n as f64 * dt;
        emit(sink, n, steps, stride, Sample { t, x: y, mu: Some(mu), partner: Some(z) });
        if n == steps {
            break;
        }
        if !(y.norm2() <= cfg.blow_up_radius.powi(2) && z.norm2() <= cfg.blow_up_radius.powi(2)) {
            return Ok(RunOutcome { steps: n, blow_up: Some(t) });
        }
        let db = gaussian(&mut noise, y.dim(), sq);
        let next = y + db - (potential.gradient(&y) + y * (1.0 / (r + t))) * dt;
        z = z + db - potential.gradient(&z) * dt;
        mu += (y * (1.0 / (r + t)) + next * (1.0 / (r + t + dt))) * (0.5 * dt);
        y = next;
    }
    Ok(RunOutcome { steps, blow_up: None })
}

fn collect(
    kind: ProcessKind,
    cfg: &SimConfig,
    rng: &RngStream,
    run: impl FnOnce(&mut RngStream, &mut Trajectory) -> Result<RunOutcome>,
) -> Result<Trajectory> {
    let mut traj = Trajectory::empty(kind, cfg.dt, rng.seed(), rng.index());
    let mut stream = rng.clone();
    let out = run(&mut stream, &mut traj)?;
    traj.blow_up = out.blow_up;
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_x(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    x0: Point,
    mu0: Point,
    cfg: &SimConfig,
    rng: &RngStream,
) -> Result<Trajectory> {
    collect(ProcessKind::X, cfg, rng, |s, t| run_x(potential, schedule, r, x0, mu0, cfg, s, t))
}

pub fn simulate_y(
    potential: &Potential,
    schedule: &Schedule,
    r: f64,
    y0: Point,
    mu0: Point,
    cfg: &SimConfig,
    rng: &RngStream,
) -> Result<Trajectory> {
    collect(ProcessKind::YMu, cfg, rng, |s, t| run_y(potential, schedule, r, y0, mu0, cfg, s, t))
}

pub fn simulate_z_annealed(
    potential: &Potential,
    annealing: &Annealing,
    z0: Point,
    cfg: &SimConfig,
    rng: &RngStream,
) -> Result<Trajectory> {
    collect(ProcessKind::ZAnnealed, cfg, rng, |s, t| run_z_annealed(potential, annealing, z0, cfg, s, t))
}

pub fn simulate_kolmogorov(potential: &Potential, z0: Point, cfg: &SimConfig, rng: &RngStream) -> Result<Trajectory> {
    collect(ProcessKind::ZKolmogorov, cfg, rng, |s, t| run_kolmogorov(potential, z0, cfg, s, t))
}

pub fn simulate_coupled_yz(
    potential: &Potential,
    r: f64,
    y0: Point,
    z0: Point,
    cfg: &SimConfig,
    rng: &RngStream,
) -> Result<Trajectory> {
    let mu0 = Point::zero(y0.dim());
    collect(ProcessKind::CoupledYz, cfg, rng, |s, t| run_coupled_yz(potential, r, y0, z0, mu0, cfg, s, t))
}

/// Runs `f(path_index, stream)` for `paths` independent streams in parallel
/// and returns the results in path order. Stream `i` is `(seed, offset + i)`.
pub fn ensemble_map<T: Send>(
    paths: usize,
    seed: u64,
    offset: u64,
    f: impl Fn(usize, RngStream) -> T + Sync + Send,
) -> Vec<T> {
    (0..paths).into_par_iter().map(|i| f(i, RngStream::new(seed, offset + i as u64))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ZeroNoise;

    fn cfg(dt: f64, horizon: f64) -> SimConfig {
        SimConfig::new(dt, horizon).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0).is_err());
        assert!(SimConfig::new(1.0, 0.5).is_err());
        assert!(SimConfig::new(1e-10, 1.0).is_err());
        assert_eq!(cfg(1e-3, 2.0).steps(), 2000);
    }

    #[test]
    fn x_fixed_point_without_noise() {
        let p = Potential::quadratic(1, 1.0).unwrap();
        let s = Schedule::constant(1.0).unwrap();
        let x0 = Point::new1(0.7);
        let mut tr = Trajectory::empty(ProcessKind::X, 1e-3, 0, 0);
        run_x(&p, &s, 1.0, x0, x0, &cfg(1e-3, 3.0), ZeroNoise, &mut tr).unwrap();
        assert!(tr.states.iter().chain(&tr.mu).all(|x| *x == x0));
        assert_eq!(tr.times.len(), 31);
        assert_eq!(*tr.times.last().unwrap(), 3.0);
    }

    #[test]
    fn x_mean_channel_satisfies_integral_identity() {
        let p = Potential::double_well();
        let s = Schedule::constant(1.0).unwrap();
        let (r, mu0, dt) = (2.0, 0.3, 1e-3);
        let c = cfg(dt, 5.0).with_stride(1);
        let tr = simulate_x(&p, &s, r, Point::new1(-0.4), Point::new1(mu0), &c, &RngStream::new(5, 0)).unwrap();
        let mut integral = 0.0;
        for i in 1..tr.len() {
            integral += 0.5 * dt * (tr.states[i - 1].x() + tr.states[i].x());
            let t = tr.times[i];
            let expected = (r * mu0 + integral) / (r + t);
            assert!((tr.mu[i].x() - expected).abs() < 5.0 * dt, "t = {t}");
        }
    }

    #[test]
    fn deterministic_replay() {
        let p = Potential::double_well();
        let s = Schedule::with_effective_k(1.0).unwrap();
        let c = cfg(1e-3, 2.0);
        let a = simulate_x(&p, &s, 1.0, Point::new1(0.1), Point::new1(0.0), &c, &RngStream::new(9, 4)).unwrap();
        let b = simulate_x(&p, &s, 1.0, Point::new1(0.1), Point::new1(0.0), &c, &RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        let other = simulate_x(&p, &s, 1.0, Point::new1(0.1), Point::new1(0.0), &c, &RngStream::new(9, 5)).unwrap();
        assert_ne!(a.states, other.states);
    }

    #[test]
    fn blow_up_truncates() {
        let p = Potential::quadratic(1, 1.0).unwrap();
        let mut c = cfg(1e-3, 1.0);
        c.blow_up_radius = 1.0;
        let tr = simulate_kolmogorov(&p, Point::new1(5.0), &c, &RngStream::new(1, 0)).unwrap();
        assert_eq!(tr.blow_up, Some(0.0));
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn annealed_z_frozen_at_minimum_without_noise() {
        let p = Potential::double_well();
        let frozen = Annealing::Frozen { eps2: 0.3, a: f64::INFINITY };
        let mut tr = Trajectory::empty(ProcessKind::ZAnnealed, 1e-3, 0, 0);
        run_z_annealed(&p, &frozen, Point::new1(1.0), &cfg(1e-3, 2.0), ZeroNoise, &mut tr).unwrap();
        assert!(tr.states.iter().all(|z| z.x() == 1.0));
    }

    #[test]
    fn coupled_table_columns() {
        let p = Potential::mexican_2d();
        let c = cfg(1e-2, 1.0).with_stride(10);
        let tr = simulate_coupled_yz(&p, 1.0, Point::new2(0.5, 0.0), Point::new2(0.0, 0.5), &c, &RngStream::new(3, 0))
            .unwrap();
        let t = tr.to_table();
        assert_eq!(t.header, ["t", "x1", "x2", "mu1", "mu2", "gap2"]);
        assert_eq!(t.rows.len(), 11);
        assert!((t.rows[0][5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ensemble_order_is_deterministic() {
        let a = ensemble_map(16, 3, 0, |i, mut s| (i, s.next_u64()));
        let b = ensemble_map(16, 3, 0, |i, mut s| (i, s.next_u64()));
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (j, _))| i == *j));
    }
}
