use serde::{Deserialize, Serialize};

use super::{Breakpoint, CumulativeCurve, Pwl, TRAPEZOID_SUBSAMPLES};
use crate::{Error, Result};

/// An energy packet of size `energy` arriving at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub t: f64,
    #[serde(rename = "e")]
    pub energy: f64,
}

impl Packet {
    pub fn new(t: f64, energy: f64) -> Self {
        Self { t, energy }
    }
}

pub const SOLAR_DAWN: f64 = 6.0;
pub const SOLAR_DUSK: f64 = 18.0;

/// Harvest rate of the solar panel model: a parabola peaking at noon,
/// zero outside daylight hours.
pub fn solar_harvest_rate(t: f64) -> f64 {
    if (SOLAR_DAWN..=SOLAR_DUSK).contains(&t) {
        5.0 - (5.0 / 36.0) * (t - 12.0).powi(2)
    } else {
        0.0
    }
}

impl CumulativeCurve {
    /// Right-continuous staircase from discrete packet arrivals.
    pub fn from_packet_arrivals(packets: &[Packet], horizon: f64) -> Result<CumulativeCurve> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        for (i, p) in packets.iter().enumerate() {
            if !(p.energy.is_finite() && p.energy > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "packet {i} has non-positive energy {}",
                    p.energy
                )));
            }
            if !(p.t >= 0.0 && p.t <= horizon) {
                return Err(Error::InvalidArgument(format!(
                    "packet {i} arrives at {} outside [0, {horizon}]",
                    p.t
                )));
            }
            if i > 0 && !(packets[i - 1].t < p.t) {
                return Err(Error::InvalidArgument(format!(
                    "packet arrival times must be strictly increasing (packet {i})"
                )));
            }
        }
        let mut bps = Vec::with_capacity(packets.len() + 2);
        let mut total = 0.0;
        if packets.first().is_none_or(|p| p.t > 0.0) {
            bps.push(Breakpoint::continuous(0.0, 0.0));
        }
        for p in packets {
            let before = total;
            total += p.energy;
            bps.push(Breakpoint::jump(p.t, before, total));
        }
        if bps.last().is_none_or(|b| b.t < horizon) {
            bps.push(Breakpoint::continuous(horizon, total));
        }
        CumulativeCurve::new(bps, horizon)
    }

    /// Integrates a non-negative harvest rate on a uniform grid of
    /// `resolution` breakpoints. Grid values are composite-trapezoid
    /// integrals over [`TRAPEZOID_SUBSAMPLES`] sub-intervals per cell.
    pub fn integrate_rate(
        rate: impl Fn(f64) -> f64,
        horizon: f64,
        resolution: usize,
    ) -> Result<CumulativeCurve> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let cells = resolution - 1;
        let n = cells * TRAPEZOID_SUBSAMPLES;
        let step = horizon / n as f64;
        let mut samples = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let t = if j == n { horizon } else { j as f64 * step };
            let h = rate(t);
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "harvest rate {h} at t = {t} is negative"
                )));
            }
            samples.push(h);
        }
        let mut bps = Vec::with_capacity(resolution);
        let mut acc = 0.0;
        bps.push(Breakpoint::continuous(0.0, 0.0));
        for c in 0..cells {
            let base = c * TRAPEZOID_SUBSAMPLES;
            for j in base..base + TRAPEZOID_SUBSAMPLES {
                acc += 0.5 * step * (samples[j] + samples[j + 1]);
            }
            let t = if c + 1 == cells {
                horizon
            } else {
                (c + 1) as f64 * horizon / cells as f64
            };
            bps.push(Breakpoint::continuous(t, acc));
        }
        CumulativeCurve::new(bps, horizon)
    }

    /// Integrates uniformly spaced rate samples (first at 0, last at the
    /// horizon) with the trapezoid rule; breakpoints sit at the samples.
    pub fn from_rate_samples(samples: &[f64], horizon: f64) -> Result<CumulativeCurve> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(
                "at least two rate samples are required".into(),
            ));
        }
        if let Some(bad) = samples.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "negative harvest rate sample {bad}"
            )));
        }
        let cells = samples.len() - 1;
        let dt = horizon / cells as f64;
        let mut acc = 0.0;
        let mut bps = vec![Breakpoint::continuous(0.0, 0.0)];
        for k in 0..cells {
            acc += 0.5 * dt * (samples[k] + samples[k + 1]);
            let t = if k + 1 == cells {
                horizon
            } else {
                (k + 1) as f64 * dt
            };
            bps.push(Breakpoint::continuous(t, acc));
        }
        CumulativeCurve::new(bps, horizon)
    }

    /// Harvest curve of the solar model on `[0, horizon]`.
    pub fn solar(horizon: f64, resolution: usize) -> Result<CumulativeCurve> {
        Self::integrate_rate(solar_harvest_rate, horizon, resolution)
    }
}

/// Battery capacity over time, piecewise linear and continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySchedule {
    points: Vec<(f64, f64)>,
}

impl BatterySchedule {
    pub fn constant(capacity: f64, horizon: f64) -> Result<Self> {
        Self::from_points(vec![(0.0, capacity), (horizon, capacity)])
    }

    /// `points` are `(t, capacity)` pairs; the first must be at `t = 0`.
    /// The capacity is held constant after the last point.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points[0].0 != 0.0 {
            return Err(Error::InvalidArgument(
                "battery schedule must start at t = 0".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::InvalidArgument(
                    "battery schedule times must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&(t, b)) = points.iter().find(|(_, b)| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "battery capacity {b} at t = {t} is negative"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn capacity_at(&self, t: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.0 <= t);
        if idx == 0 {
            return self.points[0].1;
        }
        if idx == self.points.len() {
            return self.points[idx - 1].1;
        }
        let (t0, b0) = self.points[idx - 1];
        let (t1, b1) = self.points[idx];
        b0 + (t - t0) / (t1 - t0) * (b1 - b0)
    }

    fn to_pwl(&self, horizon: f64) -> Result<Pwl> {
        let mut bps: Vec<Breakpoint> = self
            .points
            .iter()
            .filter(|(t, _)| *t < horizon)
            .map(|&(t, b)| Breakpoint::continuous(t, b))
            .collect();
        bps.push(Breakpoint::continuous(horizon, self.capacity_at(horizon)));
        Pwl::new(bps, horizon)
    }
}

/// Minimum energy curve induced by a finite battery: the running maximum of
/// `max(H(t) - b(t), 0)`. For a constant capacity the running maximum is the
/// plain overflow curve.
pub fn min_energy_from_battery(
    harvest: &CumulativeCurve,
    battery: &BatterySchedule,
) -> Result<CumulativeCurve> {
    let horizon = harvest.horizon();
    if let Some(&(t, _)) = battery.points.last() {
        if t > horizon * (1.0 + crate::TIME_EPS) {
            return Err(Error::HorizonMismatch(horizon, t));
        }
    }
    let b = battery.to_pwl(horizon)?;
    let overflow = harvest.as_pwl().zip_linear(&b, |h, cap| h - cap)?;
    let zero = Pwl::constant(0.0, horizon)?;
    let m = overflow.max(&zero)?.running_max().simplify();
    let m = CumulativeCurve::from_pwl_clamped(m)?;
    // Rounding in the crossing points must not lift M above H.
    let capped = m
        .breakpoints()
        .iter()
        .map(|bp| {
            Breakpoint::jump(
                bp.t,
                bp.v_left.min(harvest.value_left_at(bp.t)),
                bp.v_right.min(harvest.value_at(bp.t)),
            )
        })
        .collect();
    CumulativeCurve::from_pwl_clamped(Pwl::new(capped, horizon)?)
}

/// Energy curves of a bank of fully charged batteries that die at known times.
///
/// Returns `(H, M)`: `H` is the total stored energy available from `t = 0`
/// and `M` rises by `capacities[i]` at `death_times[i]`. The horizon is the
/// last death time.
pub fn dying_battery_scenario(
    capacities: &[f64],
    death_times: &[f64],
) -> Result<(CumulativeCurve, CumulativeCurve)> {
    if capacities.is_empty() {
        return Err(Error::InvalidArgument("battery list is empty".into()));
    }
    if capacities.len() != death_times.len() {
        return Err(Error::InvalidArgument(format!(
            "{} capacities but {} death times",
            capacities.len(),
            death_times.len()
        )));
    }
    if let Some(b) = capacities.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "battery capacity {b} must be positive"
        )));
    }
    if !(death_times[0] > 0.0) {
        return Err(Error::InvalidArgument(
            "the first battery must die after t = 0".into(),
        ));
    }
    if death_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "death times must be strictly increasing".into(),
        ));
    }
    let horizon = death_times[death_times.len() - 1];
    let total: f64 = capacities.iter().sum();
    let harvest = CumulativeCurve::new(
        vec![
            Breakpoint::jump(0.0, 0.0, total),
            Breakpoint::continuous(horizon, total),
        ],
        horizon,
    )?;
    let mut bps = vec![Breakpoint::continuous(0.0, 0.0)];
    let mut dead = 0.0;
    for (i, (&b, &t)) in capacities.iter().zip(death_times).enumerate() {
        let before = dead;
        dead = if i + 1 == capacities.len() {
            total
        } else {
            dead + b
        };
        bps.push(Breakpoint::jump(t, before, dead));
    }
    let minimum = CumulativeCurve::new(bps, horizon)?;
    Ok((harvest, minimum))
}
