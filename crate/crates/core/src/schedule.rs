//! Schedules `g`, their primitive `G`, the generalized inverse `G⁻¹`, and the
//! annealing temperature `ε²(t) = 1/g(G⁻¹(t))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{osc_chi, Potential};

/// Exponent above which `exp` is treated as overflowing.
pub const SATURATION_EXPONENT: f64 = 700.0;
pub const INVERSE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `g ≡ g0`.
    Constant { g0: f64 },
    /// `g(t) = k log(shift + t)` with `shift ≥ e`.
    Logarithmic { k: f64, shift: f64 },
}

impl Schedule {
    pub fn constant(g0: f64) -> Result<Self> {
        let s = Schedule::Constant { g0 };
        s.validate()?;
        Ok(s)
    }

    pub fn logarithmic(k: f64, shift: f64) -> Result<Self> {
        let s = Schedule::Logarithmic { k, shift };
        s.validate()?;
        Ok(s)
    }

    /// Logarithmic schedule whose temperature behaves like `k_eff / log t`.
    pub fn with_effective_k(k_effective: f64) -> Result<Self> {
        if !(k_effective.is_finite() && k_effective > 0.0) {
            return Err(Error::Config(format!("effective k must be positive, got {k_effective}")));
        }
        Schedule::logarithmic(1.0 / k_effective, std::f64::consts::E)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Constant { g0 } => {
                if !(g0.is_finite() && g0 > 0.0) {
                    return Err(Error::Config(format!("schedule.g0 must be positive, got {g0}")));
                }
            }
            Schedule::Logarithmic { k, shift } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::Config(format!("schedule.k must be positive, got {k}")));
                }
                if !(shift.is_finite() && shift >= std::f64::consts::E) {
                    return Err(Error::Config(format!("schedule.shift must be at least e, got {shift}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }

    #[inline]
    pub fn g(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { g0 } => g0,
            Schedule::Logarithmic { k, shift } => k * (shift + t).ln(),
        }
    }

    #[inline]
    pub fn g_prime(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { .. } => 0.0,
            Schedule::Logarithmic { k, shift } => k / (shift + t),
        }
    }

    /// `G(t) = ∫₀ᵗ g`, in closed form.
    pub fn big_g(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { g0 } => g0 * t,
            Schedule::Logarithmic { k, shift } => {
                let w = shift + t;
                // (w ln w − w) − (s ln s − s), arranged to avoid cancellation
                k * (t * (w.ln() - 1.0) + shift * (t / shift).ln_1p())
            }
        }
    }

    /// `G(t)` by adaptive Simpson quadrature of `g`; reference path for the
    /// closed form.
    pub fn big_g_numeric(&self, t: f64) -> f64 {
        crate::quadrature::adaptive_simpson(&|s| self.g(s), 0.0, t, 1e-12)
    }

    /// `G⁻¹(u) = inf{t ≥ 0 : G(t) ≥ u}`.
    pub fn g_inverse(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("G⁻¹ needs a finite u ≥ 0, got {u}")));
        }
        Ok(match *self {
            Schedule::Constant { g0 } => u / g0,
            Schedule::Logarithmic { .. } => self.invert_from(u, None),
        })
    }

    /// Safeguarded Newton iteration on `G(t) = u` inside a shrinking bracket;
    /// `guess` warm-starts it.
    pub(crate) fn invert_from(&self, u: f64, guess: Option<f64>) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, u / self.g(0.0));
        let mut t = guess.filter(|g| *g > lo && *g < hi).unwrap_or(0.5 * hi);
        for _ in 0..200 {
            let r = self.big_g(t) - u;
            if r.abs() <= 1e-15 * u {
                return t;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - r / self.g(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-13 * t.max(1.0) || hi - lo <= INVERSE_TOLERANCE * 1e-3 {
                return next;
            }
            t = next;
        }
        t
    }

    /// `k_eff = lim g(t)⁻¹ log G(t)`, the coefficient in `ε²(t) ~ k_eff / log t`.
    pub fn k_effective(&self) -> Option<f64> {
        match *self {
            Schedule::Constant { .. } => None,
            Schedule::Logarithmic { k, .. } => Some(1.0 / k),
        }
    }
}

/// Temperature and confinement scale at algorithmic time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnealingState {
    pub t: f64,
    /// `G⁻¹(t)`.
    pub inverse_time: f64,
    pub eps2: f64,
    /// `a(t) = (r + G⁻¹(t))·g(G⁻¹(t))`.
    pub a: f64,
    pub r: f64,
}

pub fn annealing_state(schedule: &Schedule, r: f64, t: f64) -> Result<AnnealingState> {
    annealing_state_from(schedule, r, t, None)
}

pub(crate) fn annealing_state_from(schedule: &Schedule, r: f64, t: f64, guess: Option<f64>) -> Result<AnnealingState> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Config(format!("r must be positive, got {r}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
    }
    let inverse_time = match schedule {
        Schedule::Constant { .. } => schedule.g_inverse(t)?,
        Schedule::Logarithmic { .. } => schedule.invert_from(t, guess),
    };
    let g = schedule.g(inverse_time);
    Ok(AnnealingState { t, inverse_time, eps2: 1.0 / g, a: (r + inverse_time) * g, r })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LsiConstant {
    pub value: f64,
    pub saturated: bool,
}

/// `C = 2 exp(2 osc(χ)/ε²)/c`, saturating to `+∞` when the exponent exceeds 700.
pub fn lsi_constant(state: &AnnealingState, osc_chi: f64, c: f64) -> Result<LsiConstant> {
    lsi_constant_at(state.eps2, osc_chi, c)
}

pub fn lsi_constant_at(eps2: f64, osc_chi: f64, c: f64) -> Result<LsiConstant> {
    if !(c > 0.0) || !(osc_chi >= 0.0) || !(eps2 > 0.0) {
        return Err(Error::Domain(format!("lsi constant needs c > 0, osc ≥ 0, ε² > 0 (got {c}, {osc_chi}, {eps2})")));
    }
    let exponent = 2.0 * osc_chi / eps2;
    if exponent > SATURATION_EXPONENT {
        return Ok(LsiConstant { value: f64::INFINITY, saturated: true });
    }
    Ok(LsiConstant { value: 2.0 * exponent.exp() / c, saturated: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVerdict {
    ConvergesToGlobalMinima,
    MayFreeze,
    ConstantGRegime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub verdict: ThresholdVerdict,
    pub k_effective: Option<f64>,
    pub two_osc: f64,
    pub quarter_dim: f64,
}

impl ThresholdReport {
    pub fn threshold(&self) -> f64 {
        self.two_osc.max(self.quarter_dim)
    }
}

/// Compares `k_eff` with `max{2 osc(χ), d/4}`.
pub fn threshold_check(schedule: &Schedule, potential: &Potential) -> ThresholdReport {
    threshold_check_with(schedule, osc_chi(potential), potential.dim())
}

pub fn threshold_check_with(schedule: &Schedule, osc: f64, dim: usize) -> ThresholdReport {
    let two_osc = 2.0 * osc;
    let quarter_dim = dim as f64 / 4.0;
    let k_effective = schedule.k_effective();
    let verdict = match k_effective {
        None => ThresholdVerdict::ConstantGRegime,
        Some(k) if k > two_osc.max(quarter_dim) => ThresholdVerdict::ConvergesToGlobalMinima,
        Some(_) => ThresholdVerdict::MayFreeze,
    };
    ThresholdReport { verdict, k_effective, two_osc, quarter_dim }
}
