//! Cumulative energy curves.
//!
//! Every curve is piecewise linear on `[0, T]` and may jump upward at a
//! breakpoint. A breakpoint stores both the left limit and the (right
//! continuous) value so that packet arrivals are represented exactly.

mod builders;
mod schedule;

pub use builders::{
    dying_battery_scenario, min_energy_from_battery, solar_harvest_rate, BatterySchedule, Packet,
    SOLAR_DAWN, SOLAR_DUSK,
};
pub use schedule::{check_feasible, FeasibilityReport, PowerSchedule, Segment};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TIME_EPS};

/// Default number of breakpoints used when sampling continuous harvest curves.
pub const DEFAULT_RESOLUTION: usize = 1024;

/// Sub-intervals per grid cell used by the trapezoid rule in
/// [`CumulativeCurve::integrate_rate`].
pub const TRAPEZOID_SUBSAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub v_left: f64,
    pub v_right: f64,
}

impl Breakpoint {
    pub fn continuous(t: f64, v: f64) -> Self {
        Self {
            t,
            v_left: v,
            v_right: v,
        }
    }

    pub fn jump(t: f64, v_left: f64, v_right: f64) -> Self {
        Self { t, v_left, v_right }
    }
}

/// A piecewise-linear function with jumps, without any monotonicity
/// requirement. Used for intermediate results and for the leakage-reduced
/// maximum energy curve, which decreases between arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pwl {
    breakpoints: Vec<Breakpoint>,
    horizon: f64,
}

impl Pwl {
    /// Builds a function from breakpoints. Times must be strictly increasing,
    /// start at 0 and end at `horizon`.
    pub fn new(breakpoints: Vec<Breakpoint>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidCurve(
                "at least two breakpoints are required".into(),
            ));
        }
        if breakpoints[0].t != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "first breakpoint must be at t = 0, got {}",
                breakpoints[0].t
            )));
        }
        if breakpoints[breakpoints.len() - 1].t != horizon {
            return Err(Error::InvalidCurve(format!(
                "last breakpoint must be at the horizon {horizon}"
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[0].t < w[1].t) {
                return Err(Error::InvalidCurve(format!(
                    "breakpoint times must be strictly increasing ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        if breakpoints
            .iter()
            .any(|b| !(b.t.is_finite() && b.v_left.is_finite() && b.v_right.is_finite()))
        {
            return Err(Error::InvalidCurve("non-finite breakpoint".into()));
        }
        Ok(Self {
            breakpoints,
            horizon,
        })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(
            vec![
                Breakpoint::continuous(0.0, value),
                Breakpoint::continuous(horizon, value),
            ],
            horizon,
        )
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.iter().map(|b| b.t)
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let slack = TIME_EPS * self.horizon.max(1.0);
        if t.is_nan() || t < -slack || t > self.horizon + slack {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t.clamp(0.0, self.horizon))
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.value_at(t))
    }

    /// Left limit at `t` (the stored left value at a breakpoint).
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.value_left_at(t))
    }

    /// Unchecked variant of [`Pwl::eval`]; `t` is clamped to the horizon.
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        match self.locate(t) {
            Ok(i) => self.breakpoints[i].v_right,
            Err(i) => self.interpolate(i, t),
        }
    }

    pub(crate) fn value_left_at(&self, t: f64) -> f64 {
        match self.locate(t) {
            Ok(i) => self.breakpoints[i].v_left,
            Err(i) => self.interpolate(i, t),
        }
    }

    /// `Ok(i)` when `t` is exactly breakpoint `i`; otherwise `Err(i)` with
    /// `t` inside the open segment `(t_i, t_{i+1})`.
    fn locate(&self, t: f64) -> std::result::Result<usize, usize> {
        let t = t.clamp(0.0, self.horizon);
        let idx = self.breakpoints.partition_point(|b| b.t < t);
        if idx < self.breakpoints.len() && self.breakpoints[idx].t == t {
            Ok(idx)
        } else {
            Err(idx - 1)
        }
    }

    fn interpolate(&self, i: usize, t: f64) -> f64 {
        let a = &self.breakpoints[i];
        let b = &self.breakpoints[i + 1];
        let w = (t - a.t) / (b.t - a.t);
        a.v_right + w * (b.v_left - a.v_right)
    }

    /// Re-expresses the function on a superset of its breakpoint times.
    fn resample(&self, times: &[f64]) -> Vec<Breakpoint> {
        times
            .iter()
            .map(|&t| Breakpoint::jump(t, self.value_left_at(t), self.value_at(t)))
            .collect()
    }

    /// Applies a pointwise map that is affine in each argument. The result is
    /// exact because both inputs are linear between merged breakpoints.
    pub fn zip_linear(&self, other: &Pwl, f: impl Fn(f64, f64) -> f64) -> Result<Pwl> {
        same_horizon(self.horizon, other.horizon)?;
        let times = merged_times(&[self, other]);
        let bps = times
            .iter()
            .map(|&t| {
                Breakpoint::jump(
                    t,
                    f(self.value_left_at(t), other.value_left_at(t)),
                    f(self.value_at(t), other.value_at(t)),
                )
            })
            .collect();
        Pwl::new(bps, self.horizon)
    }

    /// Pointwise maximum, with breakpoints inserted where the inputs cross.
    pub fn max(&self, other: &Pwl) -> Result<Pwl> {
        same_horizon(self.horizon, other.horizon)?;
        let times = merged_times(&[self, other]);
        let a = self.resample(&times);
        let b = other.resample(&times);
        let mut out = Vec::with_capacity(times.len() * 2);
        for k in 0..times.len() {
            out.push(Breakpoint::jump(
                times[k],
                a[k].v_left.max(b[k].v_left),
                a[k].v_right.max(b[k].v_right),
            ));
            if k + 1 < times.len() {
                let d0 = a[k].v_right - b[k].v_right;
                let d1 = a[k + 1].v_left - b[k + 1].v_left;
                if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
                    let w = d0 / (d0 - d1);
                    let t = times[k] + w * (times[k + 1] - times[k]);
                    if t > times[k] && t < times[k + 1] {
                        let v = a[k].v_right + w * (a[k + 1].v_left - a[k].v_right);
                        out.push(Breakpoint::continuous(t, v));
                    }
                }
            }
        }
        Pwl::new(out, self.horizon)
    }

    /// Running maximum `t -> sup_{s <= t} f(s)`, taking left limits into account.
    pub fn running_max(&self) -> Pwl {
        let bps = &self.breakpoints;
        let mut out = Vec::with_capacity(bps.len() * 2);
        let mut level = bps[0].v_left;
        for k in 0..bps.len() {
            let left = level.max(bps[k].v_left);
            level = left.max(bps[k].v_right);
            out.push(Breakpoint::jump(bps[k].t, left, level));
            if k + 1 < bps.len() {
                let start = bps[k].v_right;
                let end = bps[k + 1].v_left;
                if end > level {
                    // The segment starts at or below the running level.
                    if start < level {
                        let w = (level - start) / (end - start);
                        let t = bps[k].t + w * (bps[k + 1].t - bps[k].t);
                        if t > bps[k].t && t < bps[k + 1].t {
                            out.push(Breakpoint::continuous(t, level));
                        }
                    }
                    level = end;
                }
            }
        }
        Pwl {
            breakpoints: out,
            horizon: self.horizon,
        }
    }

    /// Drops breakpoints that carry no information (continuous and collinear
    /// with their neighbours).
    pub fn simplify(&self) -> Pwl {
        let bps = &self.breakpoints;
        let mut out: Vec<Breakpoint> = Vec::with_capacity(bps.len());
        for (k, bp) in bps.iter().enumerate() {
            if k == 0 || k + 1 == bps.len() || bp.v_left != bp.v_right {
                out.push(*bp);
                continue;
            }
            let prev = out[out.len() - 1];
            let next = bps[k + 1];
            let w = (bp.t - prev.t) / (next.t - prev.t);
            let interp = prev.v_right + w * (next.v_left - prev.v_right);
            let scale = 1.0 + bp.v_left.abs();
            if (interp - bp.v_left).abs() > 1e-14 * scale {
                out.push(*bp);
            }
        }
        Pwl {
            breakpoints: out,
            horizon: self.horizon,
        }
    }
}

fn same_horizon(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > TIME_EPS * a.abs().max(1.0) {
        return Err(Error::HorizonMismatch(a, b));
    }
    Ok(())
}

/// Sorted union of the breakpoint times of several functions, with times
/// closer than the time tolerance coalesced.
pub(crate) fn merged_times(fns: &[&Pwl]) -> Vec<f64> {
    let mut times: Vec<f64> = fns.iter().flat_map(|f| f.times()).collect();
    times.sort_by(f64::total_cmp);
    let horizon = fns.iter().map(|f| f.horizon).fold(0.0, f64::max);
    coalesce_times(&mut times, horizon);
    times
}

pub(crate) fn coalesce_times(times: &mut Vec<f64>, horizon: f64) {
    let slack = TIME_EPS * horizon.max(1.0);
    times.dedup_by(|b, a| *b - *a <= slack);
    if let Some(last) = times.last_mut() {
        if (*last - horizon).abs() <= slack {
            *last = horizon;
        }
    }
}

/// Non-decreasing, non-negative cumulative energy curve (`H`, `M`, `E`, `L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Pwl", into = "Pwl")]
pub struct CumulativeCurve(Pwl);

impl TryFrom<Pwl> for CumulativeCurve {
    type Error = Error;

    fn try_from(pwl: Pwl) -> Result<Self> {
        let pwl = Pwl::new(pwl.breakpoints, pwl.horizon)?;
        validate_cumulative(&pwl)?;
        Ok(Self(pwl))
    }
}

impl From<CumulativeCurve> for Pwl {
    fn from(c: CumulativeCurve) -> Pwl {
        c.0
    }
}

fn validate_cumulative(pwl: &Pwl) -> Result<()> {
    let tol = |v: f64| 1e-12 * (1.0 + v.abs());
    let mut prev: Option<f64> = None;
    for b in &pwl.breakpoints {
        if b.v_left < -tol(0.0) {
            return Err(Error::InvalidCurve(format!(
                "negative energy {} at t = {}",
                b.v_left, b.t
            )));
        }
        if b.v_right < b.v_left - tol(b.v_left) {
            return Err(Error::InvalidCurve(format!(
                "downward jump at t = {} ({} -> {})",
                b.t, b.v_left, b.v_right
            )));
        }
        if let Some(p) = prev {
            if b.v_left < p - tol(p) {
                return Err(Error::InvalidCurve(format!(
                    "curve decreases before t = {}",
                    b.t
                )));
            }
        }
        prev = Some(b.v_right);
    }
    Ok(())
}

impl CumulativeCurve {
    pub fn new(breakpoints: Vec<Breakpoint>, horizon: f64) -> Result<Self> {
        Pwl::new(breakpoints, horizon)?.try_into()
    }

    /// Wraps a function that is known to be non-decreasing up to rounding,
    /// clamping rounding-level violations away.
    pub(crate) fn from_pwl_clamped(pwl: Pwl) -> Result<Self> {
        let mut bps = pwl.breakpoints;
        let mut level: f64 = 0.0;
        for b in bps.iter_mut() {
            b.v_left = b.v_left.max(level).max(0.0);
            b.v_right = b.v_right.max(b.v_left);
            level = b.v_right;
        }
        Self::new(bps, pwl.horizon)
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Pwl::constant(0.0, horizon)?.try_into()
    }

    /// `E(t) = slope * t`.
    pub fn linear(slope: f64, horizon: f64) -> Result<Self> {
        Self::new(
            vec![
                Breakpoint::continuous(0.0, 0.0),
                Breakpoint::continuous(horizon, slope * horizon),
            ],
            horizon,
        )
    }

    pub fn as_pwl(&self) -> &Pwl {
        &self.0
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        self.0.breakpoints()
    }

    pub fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.0.eval(t)
    }

    pub fn eval_left(&self, t: f64) -> Result<f64> {
        self.0.eval_left(t)
    }

    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.0.value_at(t)
    }

    pub(crate) fn value_left_at(&self, t: f64) -> f64 {
        self.0.value_left_at(t)
    }

    /// `H(T)`, the right value at the horizon.
    pub fn final_value(&self) -> f64 {
        self.0.breakpoints.last().map(|b| b.v_right).unwrap_or(0.0)
    }

    /// Largest value a continuous curve starting at zero can reach at the
    /// horizon while staying below this one: the left limit at `T`.
    pub fn final_left_value(&self) -> f64 {
        self.0.breakpoints.last().map(|b| b.v_left).unwrap_or(0.0)
    }

    pub fn add(&self, other: &CumulativeCurve) -> Result<CumulativeCurve> {
        Self::from_pwl_clamped(self.0.zip_linear(&other.0, |a, b| a + b)?.simplify())
    }

    pub fn max(&self, other: &CumulativeCurve) -> Result<CumulativeCurve> {
        Self::from_pwl_clamped(self.0.max(&other.0)?.simplify())
    }

    /// Holds the final value constant out to a later horizon. Horizons that
    /// differ only by rounding are snapped.
    pub fn extended_to(&self, horizon: f64) -> Result<CumulativeCurve> {
        let close = (horizon - self.horizon()).abs() <= TIME_EPS * horizon.max(1.0);
        if horizon < self.horizon() && !close {
            return Err(Error::HorizonMismatch(self.horizon(), horizon));
        }
        let mut bps = self.breakpoints().to_vec();
        let last = bps.len() - 1;
        if close {
            bps[last].t = horizon;
        } else {
            bps.push(Breakpoint::continuous(horizon, self.final_value()));
        }
        Self::new(bps, horizon)
    }

    /// Checks every structural invariant; builders call this implicitly.
    pub fn validate(&self) -> Result<()> {
        let pwl = Pwl::new(self.0.breakpoints.clone(), self.0.horizon)?;
        validate_cumulative(&pwl)
    }
}
