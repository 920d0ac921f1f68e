use serde::{Deserialize, Serialize};

use super::{Breakpoint, CumulativeCurve, Pwl};
use crate::{Error, Result, TIME_EPS};

/// Constant transmit power on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub power: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn energy(&self) -> f64 {
        self.power * self.duration()
    }
}

/// Piecewise-constant power profile covering `[0, T]`. Its integral is the
/// transmitted energy curve `E(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct PowerSchedule {
    segments: Vec<Segment>,
    /// `E` at the start of each segment, plus `E(T)` at the end.
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<Segment>> for PowerSchedule {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PowerSchedule> for Vec<Segment> {
    fn from(s: PowerSchedule) -> Vec<Segment> {
        s.segments
    }
}

impl PowerSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
        if first.t_start != 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "schedule must start at t = 0, got {}",
                first.t_start
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.t_start.is_finite() && s.t_end.is_finite() && s.t_end > s.t_start) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has empty or invalid interval [{}, {}]",
                    s.t_start, s.t_end
                )));
            }
            if !(s.power.is_finite() && s.power >= 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has invalid power {}",
                    s.power
                )));
            }
            if i > 0 && segments[i - 1].t_end != s.t_start {
                return Err(Error::InvalidSchedule(format!(
                    "segments {} and {i} are not contiguous",
                    i - 1
                )));
            }
        }
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for s in &segments {
            acc += s.energy();
            cumulative.push(acc);
        }
        Ok(Self {
            segments,
            cumulative,
        })
    }

    pub fn constant(power: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![Segment {
            t_start: 0.0,
            t_end: horizon,
            power,
        }])
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::constant(0.0, horizon)
    }

    /// Schedule whose energy curve interpolates the given `(t, E)` vertices.
    /// The first vertex must be `(0, 0)`. Rounding-level negative slopes are
    /// clamped to zero.
    pub fn from_vertices(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidSchedule(
                "at least two vertices are required".into(),
            ));
        }
        if vertices[0] != (0.0, 0.0) {
            return Err(Error::InvalidSchedule(
                "first vertex must be the origin".into(),
            ));
        }
        let segments = vertices
            .windows(2)
            .map(|w| {
                let (t0, e0) = w[0];
                let (t1, e1) = w[1];
                let mut power = (e1 - e0) / (t1 - t0);
                if power < 0.0 && (e1 - e0).abs() <= 1e-12 * (1.0 + e0.abs()) {
                    power = 0.0;
                }
                Segment {
                    t_start: t0,
                    t_end: t1,
                    power,
                }
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    pub fn total_energy(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Power in force at `t` (right-continuous; the last segment at `T`).
    pub fn power_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        self.segments[idx.min(self.segments.len() - 1)].power
    }

    /// `E(t)`; clamped to `[0, T]`.
    pub fn energy_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon());
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        if idx == self.segments.len() {
            return self.total_energy();
        }
        let s = &self.segments[idx];
        self.cumulative[idx] + s.power * (t - s.t_start)
    }

    /// `(t, E(t))` at every segment boundary, starting with the origin.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push((0.0, 0.0));
        for (s, e) in self.segments.iter().zip(&self.cumulative[1..]) {
            out.push((s.t_end, *e));
        }
        out
    }

    /// Joins neighbouring segments with identical power.
    pub fn merged(&self) -> PowerSchedule {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            match out.last_mut() {
                Some(last) if last.power == s.power => last.t_end = s.t_end,
                _ => out.push(*s),
            }
        }
        PowerSchedule::new(out).expect("merging keeps a valid schedule")
    }

    /// The transmitted energy curve as a cumulative curve.
    pub fn energy_curve(&self) -> Result<CumulativeCurve> {
        let bps = self
            .vertices()
            .into_iter()
            .map(|(t, e)| Breakpoint::continuous(t, e))
            .collect();
        CumulativeCurve::from_pwl_clamped(Pwl::new(bps, self.horizon())?)
    }
}

/// Largest violations of `M(t) <= E(t) <= H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `max(E(t) - H(t))`, using the left limit of `H` at jumps; zero when
    /// `E` never exceeds `H`.
    pub max_upper_violation: f64,
    pub upper_at: Option<f64>,
    /// `max(M(t) - E(t))`; zero when `E` never drops below `M`.
    pub max_lower_violation: f64,
    pub lower_at: Option<f64>,
    pub feasible: bool,
}

/// Checks a schedule against the energy curves. All three objects are
/// linear between their merged breakpoints, so checking those points is
/// exact.
pub fn check_feasible(
    schedule: &PowerSchedule,
    minimum: &CumulativeCurve,
    harvest: &CumulativeCurve,
    tol: f64,
) -> FeasibilityReport {
    let horizon = schedule.horizon();
    let mut times: Vec<f64> = schedule.vertices().iter().map(|v| v.0).collect();
    times.extend(minimum.as_pwl().times().filter(|&t| t <= horizon));
    times.extend(harvest.as_pwl().times().filter(|&t| t <= horizon));
    times.sort_by(f64::total_cmp);
    super::coalesce_times(&mut times, horizon);

    let mut report = FeasibilityReport {
        max_upper_violation: 0.0,
        upper_at: None,
        max_lower_violation: 0.0,
        lower_at: None,
        feasible: true,
    };
    for &t in &times {
        let e = schedule.energy_at(t);
        // E is continuous, so the binding side of a jump is the left limit
        // of H and the right value of M.
        let up = e - harvest.value_left_at(t);
        if up > report.max_upper_violation {
            report.max_upper_violation = up;
            report.upper_at = Some(t);
        }
        let low = minimum.value_at(t) - e;
        if low > report.max_lower_violation {
            report.max_lower_violation = low;
            report.lower_at = Some(t);
        }
    }
    let beyond = (harvest.horizon() - horizon).abs() > TIME_EPS * horizon.max(1.0);
    report.feasible =
        !beyond && report.max_upper_violation <= tol && report.max_lower_violation <= tol;
    report
}
