//! Brute-force reference computations used to cross-check the solvers.
//!
//! None of these share code paths with the solvers beyond curve evaluation:
//! the dynamic programs discretize time and energy, the root finders work on
//! closed forms, and the random schedules are sampled directly from the
//! feasible corridor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{
    dying_battery_scenario, min_energy_from_battery, solar_harvest_rate, BatterySchedule,
    CumulativeCurve, Packet, PowerSchedule, SOLAR_DAWN, SOLAR_DUSK,
};
use crate::leakage::{bits_per_energy, Deadline, LeakageProblem};
use crate::rate::RateFunction;
use crate::{Error, Result, TIME_EPS};

const GOLDEN_STEPS: usize = 40;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub time_slots: usize,
    pub energy_levels: usize,
    /// Largest power a slot may use.
    pub power_cap: f64,
}

impl GridSpec {
    pub fn new(time_slots: usize, energy_levels: usize, power_cap: f64) -> Result<Self> {
        let g = Self {
            time_slots,
            energy_levels,
            power_cap,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_slots < 2 || self.energy_levels < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 slots and 2 levels, got {}x{}",
                self.time_slots, self.energy_levels
            )));
        }
        if !(self.power_cap > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power cap must be positive, got {}",
                self.power_cap
            )));
        }
        Ok(())
    }
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`,
/// also trying both endpoints.
fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mut best = f(a).max(f(b));
    if b - a <= 0.0 {
        return best;
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    best = best.max(f1).max(f2);
    best
}

/// Values on a uniform grid over `[lo, hi]`, linearly interpolated.
struct LevelGrid {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl LevelGrid {
    fn level(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    fn hi(&self) -> f64 {
        self.level(self.values.len() - 1)
    }

    fn interp(&self, x: f64) -> f64 {
        let n = self.values.len();
        if n == 1 || self.step == 0.0 {
            return self.values[0];
        }
        let pos = ((x - self.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            return if w <= 0.0 {
                a
            } else if w >= 1.0 {
                b
            } else {
                f64::NEG_INFINITY
            };
        }
        a + w * (b - a)
    }
}

fn grid_over(lo: f64, hi: f64, levels: usize) -> LevelGrid {
    let n = if hi > lo { levels } else { 1 };
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    LevelGrid {
        lo,
        step,
        values: vec![0.0; n],
    }
}

/// Discretized maximum throughput between `M` and `H`.
///
/// State: cumulative transmitted energy at each slot boundary, on a uniform
/// grid spanning that boundary's window `[M(t), H(t^-)]`. The value function
/// is interpolated between grid points and the per-slot spend is optimized
/// continuously, so the result is a feasible lower bound whenever the curve
/// breakpoints fall on slot boundaries.
pub fn dp_throughput(
    harvest: &CumulativeCurve,
    minimum: &CumulativeCurve,
    rate: &RateFunction,
    grid: &GridSpec,
) -> Result<f64> {
    grid.validate()?;
    let horizon = harvest.horizon();
    let slots = grid.time_slots;
    let dt = horizon / slots as f64;
    let boundary = |k: usize| if k == slots { horizon } else { k as f64 * dt };
    let snap = TIME_EPS * horizon.max(1.0);
    let window = |k: usize| -> Result<(f64, f64)> {
        if k == 0 {
            return Ok((0.0, 0.0));
        }
        let t = boundary(k);
        // A boundary within rounding of an event is taken to coincide with
        // it: energy arriving there is not usable in the slot before.
        let lo = minimum.value_at((t + snap).min(horizon));
        let hi = if k == slots {
            harvest.final_left_value()
        } else {
            harvest.value_left_at(t - snap)
        };
        if lo > hi + crate::ENERGY_TOL {
            return Err(Error::GridInfeasible {
                slot: k,
                reason: format!("M exceeds H by {} at t = {t}", lo - hi),
            });
        }
        Ok((lo.min(hi), hi))
    };
    let max_spend = grid.power_cap * dt;
    let (lo, hi) = window(slots)?;
    let mut next = grid_over(lo, hi, grid.energy_levels);
    for k in (0..slots).rev() {
        let (lo_k, hi_k) = window(k)?;
        let (lo_n, hi_n) = (next.lo, next.hi());
        let mut cur = grid_over(lo_k, hi_k, grid.energy_levels);
        let mut any = false;
        for i in 0..cur.values.len() {
            let e = cur.level(i);
            let a = e.max(lo_n);
            let b = hi_n.min(e + max_spend);
            cur.values[i] = if a > b + 1e-12 * (1.0 + b.abs()) {
                f64::NEG_INFINITY
            } else {
                any = true;
                let b = b.max(a);
                golden_max(
                    |x| dt * rate.eval(((x - e) / dt).max(0.0)) + next.interp(x),
                    a,
                    b,
                )
            };
        }
        if !any {
            return Err(Error::GridInfeasible {
                slot: k,
                reason: "no reachable energy level".into(),
            });
        }
        next = cur;
    }
    Ok(next.values[0])
}

/// Discretized maximum throughput for a leaky battery.
///
/// State: battery content after the arrivals at each slot boundary. Within a
/// slot the transmitter spends `e` at constant power, then the battery loses
/// `epsilon * dt` if anything is left. Packets are credited at the first
/// slot boundary at or after their arrival.
pub fn dp_leakage_throughput(problem: &LeakageProblem, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    problem.validate()?;
    let horizon = match problem.deadline {
        Deadline::Finite(t) => t,
        Deadline::Unbounded => {
            return Err(Error::InvalidProblem(
                "the leakage oracle needs a finite deadline".into(),
            ))
        }
    };
    let slots = grid.time_slots;
    let dt = horizon / slots as f64;
    let leak = problem.epsilon * dt;
    // Energy credited at each boundary.
    let mut credit = vec![0.0; slots + 1];
    for p in &problem.packets {
        let k = ((p.t / dt) * (1.0 - TIME_EPS)).ceil() as usize;
        credit[k.min(slots)] += p.energy;
    }
    let mut cumulative = credit.clone();
    for k in 1..=slots {
        cumulative[k] += cumulative[k - 1];
    }
    let step = cumulative[slots] / (grid.energy_levels - 1) as f64;
    let smallest = problem
        .packets
        .iter()
        .map(|p| p.energy)
        .fold(f64::INFINITY, f64::min);
    if smallest < step {
        return Err(Error::GridTooCoarse(format!(
            "packet of {smallest} is smaller than the energy step {step}"
        )));
    }
    let max_spend = grid.power_cap * dt;
    let rate = &problem.rate;
    // Value after the last slot is zero: energy left at the deadline is lost.
    let mut next = grid_over(0.0, cumulative[slots], grid.energy_levels);
    for k in (0..slots).rev() {
        let arriving = credit[k + 1];
        let mut cur = grid_over(0.0, cumulative[k], grid.energy_levels);
        for i in 0..cur.values.len() {
            let b = cur.level(i);
            let data = |e: f64| dt * rate.eval((e / dt).max(0.0));
            // Spending everything leaves nothing to leak.
            let mut best = if b <= max_spend {
                data(b) + next.interp(arriving)
            } else {
                f64::NEG_INFINITY
            };
            let top = (b - leak).min(max_spend);
            if top >= 0.0 {
                let v = golden_max(|e| data(e) + next.interp(b - e - leak + arriving), 0.0, top);
                best = best.max(v);
            }
            cur.values[i] = best;
        }
        next = cur;
    }
    // The state at t = 0 is the exact initial credit, the top of its grid.
    Ok(next.values[next.values.len() - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridArgmax {
    pub p: f64,
    /// Neighbouring grid points, when they exist.
    pub below: Option<f64>,
    pub above: Option<f64>,
}

/// Maximizer of `r(p) / (p + epsilon)` over a log-spaced grid on
/// `[1e-9 p_max, p_max]`.
pub fn grid_argmax_f(
    rate: &RateFunction,
    epsilon: f64,
    p_max: f64,
    samples: usize,
) -> Result<GridArgmax> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    if !(p_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "p_max must be positive, got {p_max}"
        )));
    }
    let p_min = p_max * 1e-9;
    let point = |i: usize| p_min * (p_max / p_min).powf(i as f64 / (samples - 1) as f64);
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..samples {
        let f = bits_per_energy(rate, epsilon, point(i));
        if f > best.1 {
            best = (i, f);
        }
    }
    let i = best.0;
    Ok(GridArgmax {
        p: point(i),
        below: (i > 0).then(|| point(i - 1)),
        above: (i + 1 < samples).then(|| point(i + 1)),
    })
}

/// Closed-form harvested energy of the solar model.
pub fn solar_energy(t: f64) -> f64 {
    let t = t.clamp(SOLAR_DAWN, SOLAR_DUSK);
    5.0 * (t - SOLAR_DAWN) - (5.0 / 108.0) * ((t - 12.0).powi(3) + 216.0)
}

/// Tangency point of the line from `(T, H(T))` to the solar harvest curve:
/// the root of `g(a) = h(a)(T - a) - (H(T) - H(a))` on the rising part of
/// the harvest rate, `(6, 12)`.
pub fn tangent_root(deadline: f64) -> Result<f64> {
    let g = |a: f64| {
        solar_harvest_rate(a) * (deadline - a) - (solar_energy(deadline) - solar_energy(a))
    };
    let (mut lo, mut hi) = (SOLAR_DAWN, 12.0_f64.min(deadline));
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::BracketNotFound(format!(
            "no tangency from the deadline {deadline}: g({lo}) = {}, g({hi}) = {}",
            g(lo),
            g(hi)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Seeded random schedule between `M` and `H` that ends at `H(T^-)`.
///
/// The energy curve is sampled at every breakpoint plus a few random
/// interior times, each value drawn uniformly from what is still reachable.
pub fn random_feasible_schedule(
    harvest: &CumulativeCurve,
    minimum: &CumulativeCurve,
    seed: u64,
) -> Result<PowerSchedule> {
    let gates = crate::string_solver::gates(harvest, minimum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = harvest.horizon();
    let mut times: Vec<f64> = gates.iter().map(|g| g.t).collect();
    let extra = rng.gen_range(0..=8);
    for _ in 0..extra {
        times.push(rng.gen_range(0.0..horizon));
    }
    times.sort_by(f64::total_cmp);
    crate::curves::coalesce_times(&mut times, horizon);

    let last = times.len() - 1;
    let mut vertices = Vec::with_capacity(times.len());
    let mut e = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let (lo, hi) = if k == 0 {
            (0.0, 0.0)
        } else if k == last {
            let v = harvest.final_left_value();
            (v, v)
        } else {
            (minimum.value_at(t), harvest.value_left_at(t))
        };
        let lo = lo.max(e);
        let hi = hi.max(lo);
        e = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        vertices.push((t, e));
    }
    PowerSchedule::from_vertices(&vertices)
}

/// Energy curve `lambda E_a + (1 - lambda) E_b`; feasible whenever both are,
/// because the feasible set is convex.
pub fn blend_schedules(a: &PowerSchedule, b: &PowerSchedule, lambda: f64) -> Result<PowerSchedule> {
    let horizon = a.horizon();
    let mut times: Vec<f64> = a.vertices().iter().map(|v| v.0).collect();
    times.extend(b.vertices().iter().map(|v| v.0));
    times.sort_by(f64::total_cmp);
    crate::curves::coalesce_times(&mut times, horizon);
    let vertices: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| (t, lambda * a.energy_at(t) + (1.0 - lambda) * b.energy_at(t)))
        .collect();
    PowerSchedule::from_vertices(&vertices)
}

/// A randomized point-to-point instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInstance {
    pub harvest: CumulativeCurve,
    pub minimum: CumulativeCurve,
    pub packets: Vec<Packet>,
    pub battery_cap: Option<f64>,
    /// `(capacity, death time)` of each pre-charged battery.
    pub dying: Vec<(f64, f64)>,
}

/// Random instance with at most 6 packets, an optional battery cap and at
/// most 3 dying batteries. Event times are multiples of `T / 20`, so they
/// fall on the boundaries of any slot grid whose size is a multiple of 20.
pub fn random_instance(seed: u64) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(2.0..8.0_f64);
    let tick = horizon / 20.0;
    let n_packets = rng.gen_range(1..=6);
    let mut ticks: Vec<usize> = Vec::new();
    while ticks.len() < n_packets {
        let k = if ticks.is_empty() && rng.gen_bool(0.5) {
            0
        } else {
            rng.gen_range(0..20)
        };
        if !ticks.contains(&k) {
            ticks.push(k);
        }
    }
    ticks.sort_unstable();
    let packets: Vec<Packet> = ticks
        .iter()
        .map(|&k| Packet::new(k as f64 * tick, rng.gen_range(0.2..5.0)))
        .collect();

    let n_dying = if rng.gen_bool(0.4) {
        rng.gen_range(1..=3)
    } else {
        0
    };
    let mut death_ticks: Vec<usize> = Vec::new();
    while death_ticks.len() < n_dying {
        let k = rng.gen_range(1..=20);
        if !death_ticks.contains(&k) {
            death_ticks.push(k);
        }
    }
    death_ticks.sort_unstable();
    let dying: Vec<(f64, f64)> = death_ticks
        .iter()
        .map(|&k| (rng.gen_range(0.2..3.0), k as f64 * tick))
        .collect();

    let mut harvest = CumulativeCurve::from_packet_arrivals(&packets, horizon)?;
    let mut minimum = CumulativeCurve::zero(horizon)?;
    if !dying.is_empty() {
        let caps: Vec<f64> = dying.iter().map(|d| d.0).collect();
        let deaths: Vec<f64> = dying.iter().map(|d| d.1).collect();
        let (h_bank, m_bank) = dying_battery_scenario(&caps, &deaths)?;
        let h_bank = h_bank.extended_to(horizon)?;
        let m_bank = m_bank.extended_to(horizon)?;
        harvest = harvest.add(&h_bank)?;
        minimum = m_bank;
    }
    let battery_cap = if rng.gen_bool(0.5) {
        let largest = packets.iter().map(|p| p.energy).fold(0.0, f64::max);
        let floor = largest.max(harvest.value_at(0.0));
        Some(floor * rng.gen_range(1.0..2.0))
    } else {
        None
    };
    if let Some(b) = battery_cap {
        let overflow = min_energy_from_battery(&harvest, &BatterySchedule::constant(b, horizon)?)?;
        minimum = minimum.max(&overflow)?;
    }
    Ok(RandomInstance {
        harvest,
        minimum,
        packets,
        battery_cap,
        dying,
    })
}

/// Random leakage instance with at most `max_packets` packets, the first
/// at `t = 0`, on the `T / 20` tick grid.
pub fn random_leakage_problem(
    seed: u64,
    max_packets: usize,
    rate: RateFunction,
) -> Result<LeakageProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(2.0..8.0_f64);
    let tick = horizon / 20.0;
    let n = rng.gen_range(1..=max_packets.max(1));
    let mut ticks = vec![0usize];
    while ticks.len() < n {
        let k = rng.gen_range(1..20);
        if !ticks.contains(&k) {
            ticks.push(k);
        }
    }
    ticks.sort_unstable();
    let packets = ticks
        .iter()
        .map(|&k| Packet::new(k as f64 * tick, rng.gen_range(0.5..6.0)))
        .collect();
    let epsilon = rng.gen_range(0.05..1.0);
    LeakageProblem::new(packets, epsilon, Deadline::Finite(horizon), rate)
}
