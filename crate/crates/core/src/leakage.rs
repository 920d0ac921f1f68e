//! Transmission from a battery that leaks at a constant rate `epsilon`
//! whenever it holds energy.
//!
//! Leakage makes short, strong bursts attractive: every unit of time the
//! battery is non-empty costs `epsilon`. Energy spent at power `p` buys
//! `f(p) = r(p) / (p + epsilon)` bits per unit, maximized at `p*`.

use serde::{Deserialize, Serialize};

use crate::curves::{Breakpoint, CumulativeCurve, Packet, PowerSchedule, Pwl, Segment};
use crate::rate::{throughput, RateFunction};
use crate::{Error, Result, TIME_EPS};

/// Upper limit for the bracket search in [`p_star`].
const BRACKET_LIMIT: f64 = 1e300;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deadline {
    Finite(f64),
    Unbounded,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeadlineRepr {
    Finite(f64),
    Word(String),
}

impl TryFrom<DeadlineRepr> for Deadline {
    type Error = String;

    fn try_from(r: DeadlineRepr) -> std::result::Result<Self, String> {
        match r {
            DeadlineRepr::Finite(t) => Ok(Deadline::Finite(t)),
            DeadlineRepr::Word(w) if w == "unbounded" => Ok(Deadline::Unbounded),
            DeadlineRepr::Word(w) => Err(format!(
                "deadline must be a number or \"unbounded\", got {w:?}"
            )),
        }
    }
}

impl From<Deadline> for DeadlineRepr {
    fn from(d: Deadline) -> Self {
        match d {
            Deadline::Finite(t) => DeadlineRepr::Finite(t),
            Deadline::Unbounded => DeadlineRepr::Word("unbounded".into()),
        }
    }
}

impl Serialize for Deadline {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DeadlineRepr::from(*self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Deadline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DeadlineRepr::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl Deadline {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Deadline::Finite(t) => Some(t),
            Deadline::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageProblem {
    pub packets: Vec<Packet>,
    pub epsilon: f64,
    pub deadline: Deadline,
    pub rate: RateFunction,
}

impl LeakageProblem {
    pub fn new(
        packets: Vec<Packet>,
        epsilon: f64,
        deadline: Deadline,
        rate: RateFunction,
    ) -> Result<Self> {
        let p = Self {
            packets,
            epsilon,
            deadline,
            rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidProblem(msg));
        let Some(first) = self.packets.first() else {
            return invalid("at least one packet is required".into());
        };
        if first.t != 0.0 {
            return invalid(format!(
                "the first packet must arrive at t = 0, got {}",
                first.t
            ));
        }
        for (i, p) in self.packets.iter().enumerate() {
            if !(p.energy.is_finite() && p.energy > 0.0) {
                return invalid(format!("packet {i} has non-positive energy {}", p.energy));
            }
            if i > 0 && !(self.packets[i - 1].t < p.t && p.t.is_finite()) {
                return invalid(format!(
                    "packet times must be strictly increasing (packet {i})"
                ));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return invalid(format!(
                "leakage rate must be non-negative, got {}",
                self.epsilon
            ));
        }
        if let Deadline::Finite(t) = self.deadline {
            let last = self.packets[self.packets.len() - 1].t;
            if !(t.is_finite() && t > last) {
                return invalid(format!(
                    "deadline {t} must come after the last arrival {last}"
                ));
            }
        } else if self.epsilon == 0.0 {
            return invalid("an unbounded deadline needs a positive leakage rate".into());
        }
        self.rate.validate()
    }

    pub fn total_energy(&self) -> f64 {
        self.packets.iter().map(|p| p.energy).sum()
    }

    /// Interarrival durations; the last one runs to the deadline.
    fn durations(&self) -> Vec<f64> {
        let n = self.packets.len();
        (0..n)
            .map(|i| match (i + 1 < n, self.deadline) {
                (true, _) => self.packets[i + 1].t - self.packets[i].t,
                (false, Deadline::Finite(t)) => t - self.packets[i].t,
                (false, Deadline::Unbounded) => f64::INFINITY,
            })
            .collect()
    }
}

/// Bits per unit of energy when transmitting at power `p`.
pub fn bits_per_energy(rate: &RateFunction, epsilon: f64, p: f64) -> f64 {
    rate.eval(p) / (p + epsilon)
}

/// Maximizer of `r(p) / (p + epsilon)`; zero when nothing leaks.
pub fn p_star(rate: &RateFunction, epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "leakage rate must be non-negative, got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    // n(p) is the numerator of f'(p); it starts at r'(0) epsilon > 0 and
    // decreases strictly, so it has a single root.
    let n = |p: f64| rate.deriv(p) * (p + epsilon) - rate.eval(p);
    let mut hi = 1.0;
    while n(hi) >= 0.0 {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::BracketNotFound(
                "r'(p)(p + epsilon) - r(p) never turns negative".into(),
            ));
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECTION_STEPS {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if n(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Packets `first..=last` are served at a common power; the battery is
/// empty when the block ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub first: usize,
    pub last: usize,
    pub start: f64,
    pub end: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageSolution {
    pub schedule: PowerSchedule,
    pub blocks: Vec<Block>,
    /// Power used after each arrival, one entry per packet.
    pub block_powers: Vec<f64>,
    pub total_data: f64,
    pub transmit_energy: f64,
    pub leaked_energy: f64,
}

/// Single packet of energy `energy` at `t = 0`.
pub fn solve_single_packet(
    energy: f64,
    deadline: Deadline,
    rate: &RateFunction,
    epsilon: f64,
) -> Result<LeakageSolution> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "packet energy must be positive, got {energy}"
        )));
    }
    if let Deadline::Finite(t) = deadline {
        if !(t > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "deadline must be positive, got {t}"
            )));
        }
    }
    let problem = LeakageProblem::new(vec![Packet::new(0.0, energy)], epsilon, deadline, *rate)?;
    let ps = p_star(rate, epsilon)?;
    let power = match deadline {
        Deadline::Finite(t) => ps.max(energy / t - epsilon),
        Deadline::Unbounded => ps,
    };
    realize(&problem, &[(0, 0, power)])
}

/// Highest `k` whose prefix average is no larger than any earlier prefix
/// average, i.e. the last minimizer of the prefix averages.
fn block_end(energies: &[f64], durations: &[f64]) -> (usize, f64) {
    let (mut sum_e, mut sum_t) = (0.0, 0.0);
    let mut running_min = f64::INFINITY;
    let mut best = (0, 0.0);
    for (i, (&e, &d)) in energies.iter().zip(durations).enumerate() {
        sum_e += e;
        sum_t += d;
        let avg = if sum_t.is_infinite() {
            0.0
        } else {
            sum_e / sum_t
        };
        if avg <= running_min + 1e-12 * avg.abs() {
            best = (i, avg);
        }
        running_min = running_min.min(avg);
    }
    best
}

/// Every prefix of packets arrives at least as fast, on average, as the
/// whole set.
pub fn sufficient_condition_holds(problem: &LeakageProblem) -> bool {
    let durations = problem.durations();
    let total_t: f64 = durations.iter().sum();
    if total_t.is_infinite() {
        return true;
    }
    let overall = problem.total_energy() / total_t;
    let (mut sum_e, mut sum_t) = (0.0, 0.0);
    for (p, d) in problem
        .packets
        .iter()
        .zip(&durations)
        .take(problem.packets.len() - 1)
    {
        sum_e += p.energy;
        sum_t += d;
        if sum_e / sum_t < overall - 1e-12 * overall.abs() {
            return false;
        }
    }
    true
}

/// Block decomposition: serve packets in blocks ending at the last
/// minimizer of the prefix averages, each at `max(p*, average - epsilon)`.
pub fn solve_n_packet(problem: &LeakageProblem) -> Result<LeakageSolution> {
    problem.validate()?;
    let ps = p_star(&problem.rate, problem.epsilon)?;
    let energies: Vec<f64> = problem.packets.iter().map(|p| p.energy).collect();
    let durations = problem.durations();
    let mut blocks = Vec::new();
    let mut j = 0;
    while j < energies.len() {
        let (k, avg) = block_end(&energies[j..], &durations[j..]);
        blocks.push((j, j + k, ps.max(avg - problem.epsilon)));
        j += k + 1;
    }
    realize(problem, &blocks)
}

/// Builds the schedule that transmits at the block power whenever the
/// battery holds energy, as early as possible.
fn realize(problem: &LeakageProblem, blocks: &[(usize, usize, f64)]) -> Result<LeakageSolution> {
    let packets = &problem.packets;
    let eps = problem.epsilon;
    let n = packets.len();
    let scale = match problem.deadline {
        Deadline::Finite(t) => t.max(1.0),
        Deadline::Unbounded => packets[n - 1].t.max(1.0),
    };
    let snap = TIME_EPS * scale;
    let mut segments: Vec<Segment> = Vec::new();
    let mut push = |t_start: f64, t_end: f64, power: f64| {
        if t_end <= t_start {
            return;
        }
        match segments.last_mut() {
            Some(last) if last.power == power => last.t_end = t_end,
            _ => segments.push(Segment {
                t_start,
                t_end,
                power,
            }),
        }
    };
    let mut out_blocks = Vec::with_capacity(blocks.len());
    let mut block_powers = vec![0.0; n];
    let mut battery = 0.0;
    let mut busy = 0.0;
    let mut transmit = 0.0;
    for &(first, last, power) in blocks {
        let drain = power + eps;
        if !(drain > 0.0) {
            return Err(Error::InvalidProblem("zero drain rate".into()));
        }
        let start = packets[first].t;
        let mut end = start;
        for i in first..=last {
            block_powers[i] = power;
            let t = packets[i].t;
            battery += packets[i].energy;
            let empty_at = t + battery / drain;
            let next = match (i + 1 < n, problem.deadline) {
                (true, _) => packets[i + 1].t,
                (false, Deadline::Finite(d)) => d,
                (false, Deadline::Unbounded) => empty_at,
            };
            let stop = if empty_at >= next - snap {
                next
            } else {
                empty_at
            };
            push(t, stop, power);
            push(stop, next, 0.0);
            busy += stop - t;
            transmit += power * (stop - t);
            battery = if stop < next || i + 1 == n {
                0.0
            } else {
                (battery - drain * (stop - t)).max(0.0)
            };
            end = next;
        }
        out_blocks.push(Block {
            first,
            last,
            start,
            end,
            power,
        });
    }
    let schedule = PowerSchedule::new(segments)?;
    Ok(LeakageSolution {
        total_data: throughput(&schedule, &problem.rate),
        schedule,
        blocks: out_blocks,
        block_powers,
        transmit_energy: transmit,
        leaked_energy: eps * busy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StNtComparison {
    /// Data with the packets arriving over time.
    pub d_nt: f64,
    /// Data with all energy available at `t = 0`.
    pub d_st: f64,
    pub sufficient_condition: bool,
}

pub fn compare_st_nt(problem: &LeakageProblem) -> Result<StNtComparison> {
    if problem.deadline == Deadline::Unbounded {
        return Err(Error::InvalidProblem(
            "the comparison needs a finite deadline".into(),
        ));
    }
    let nt = solve_n_packet(problem)?;
    let st = solve_single_packet(
        problem.total_energy(),
        problem.deadline,
        &problem.rate,
        problem.epsilon,
    )?;
    Ok(StNtComparison {
        d_nt: nt.total_data,
        d_st: st.total_data,
        sufficient_condition: sufficient_condition_holds(problem),
    })
}

/// Energy curves produced by running a schedule against a leaky battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageTrace {
    pub harvest: CumulativeCurve,
    pub transmitted: CumulativeCurve,
    pub leaked: CumulativeCurve,
    /// `U = H - L`, the energy that could still have been transmitted.
    pub available: Pwl,
    /// First time the schedule asked for power from an empty battery.
    pub infeasible_at: Option<f64>,
    pub transmit_energy: f64,
    pub leaked_energy: f64,
    /// Battery content at the end of the schedule.
    pub residual: f64,
}

impl LeakageTrace {
    /// Battery content just before `t`.
    pub fn battery_left_at(&self, t: f64) -> f64 {
        self.available.value_left_at(t) - self.transmitted.value_at(t)
    }

    pub fn battery_at(&self, t: f64) -> f64 {
        self.available.value_at(t) - self.transmitted.value_at(t)
    }
}

pub fn simulate(schedule: &PowerSchedule, problem: &LeakageProblem) -> Result<LeakageTrace> {
    simulate_packets(schedule, &problem.packets, problem.epsilon)
}

/// Event-driven integration of the battery over the schedule horizon.
/// Arrivals are credited before the power demand at the same instant.
pub fn simulate_packets(
    schedule: &PowerSchedule,
    packets: &[Packet],
    epsilon: f64,
) -> Result<LeakageTrace> {
    let horizon = schedule.horizon();
    let arrivals: Vec<Packet> = packets.iter().copied().filter(|p| p.t <= horizon).collect();
    let harvest = CumulativeCurve::from_packet_arrivals(&arrivals, horizon)?;
    let mut times: Vec<f64> = schedule.vertices().iter().map(|v| v.0).collect();
    times.extend(arrivals.iter().map(|p| p.t));
    times.sort_by(f64::total_cmp);
    crate::curves::coalesce_times(&mut times, horizon);

    let total: f64 = arrivals.iter().map(|p| p.energy).sum();
    let energy_tol = 1e-12 * (1.0 + total);
    let snap = TIME_EPS * horizon.max(1.0);
    let mut e_pts = vec![(0.0, 0.0)];
    let mut l_pts = vec![(0.0, 0.0)];
    let (mut e, mut l, mut battery) = (0.0, 0.0, 0.0);
    let mut infeasible_at = None;
    let mut next_packet = 0;
    for k in 0..times.len() {
        let t = times[k];
        while next_packet < arrivals.len() && arrivals[next_packet].t <= t + snap {
            battery += arrivals[next_packet].energy;
            next_packet += 1;
        }
        if k + 1 == times.len() {
            break;
        }
        let dt = times[k + 1] - t;
        let power = schedule.power_at(0.5 * (t + times[k + 1]));
        let drain = power + epsilon;
        if battery <= energy_tol {
            battery = 0.0;
            if power > 0.0 && infeasible_at.is_none() {
                infeasible_at = Some(t);
            }
        } else {
            let empty_in = if drain > 0.0 {
                battery / drain
            } else {
                f64::INFINITY
            };
            if empty_in >= dt - snap {
                e += power * dt;
                l += epsilon * dt;
                battery = (battery - drain * dt).max(0.0);
            } else {
                e += power * empty_in;
                l += epsilon * empty_in;
                battery = 0.0;
                e_pts.push((t + empty_in, e));
                l_pts.push((t + empty_in, l));
                if power > 0.0 && infeasible_at.is_none() {
                    infeasible_at = Some(t + empty_in);
                }
            }
        }
        e_pts.push((times[k + 1], e));
        l_pts.push((times[k + 1], l));
    }
    let curve = |pts: Vec<(f64, f64)>| -> Result<CumulativeCurve> {
        let mut bps: Vec<Breakpoint> = Vec::with_capacity(pts.len());
        for (t, v) in pts {
            match bps.last_mut() {
                Some(last) if t <= last.t => *last = Breakpoint::continuous(last.t, v),
                _ => bps.push(Breakpoint::continuous(t, v)),
            }
        }
        if bps.len() == 1 {
            bps.push(Breakpoint::continuous(horizon, bps[0].v_right));
        }
        CumulativeCurve::from_pwl_clamped(Pwl::new(bps, horizon)?)
    };
    let transmitted = curve(e_pts)?;
    let leaked = curve(l_pts)?;
    let available = harvest.as_pwl().zip_linear(leaked.as_pwl(), |h, l| h - l)?;
    Ok(LeakageTrace {
        harvest,
        transmitted,
        leaked,
        available,
        infeasible_at,
        transmit_energy: e,
        leaked_energy: l,
        residual: battery,
    })
}
