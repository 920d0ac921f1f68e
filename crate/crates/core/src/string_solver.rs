//! Taut-string construction of the throughput-optimal energy curve.
//!
//! Between consecutive merged breakpoints of `H` and `M` both curves are
//! linear, so the feasible region for a continuous `E(t)` is a corridor of
//! vertical gates `[M(t_k), H(t_k^-)]` joined by straight walls. The taut
//! string is the shortest path through those gates from `(0, 0)` to
//! `(T, H(T^-))`; it is computed here with a funnel sweep that keeps a convex
//! upper chain and a concave lower chain hanging off a shared apex.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::curves::{merged_times, CumulativeCurve, PowerSchedule, SOLAR_DAWN};
use crate::rate::{throughput, RateFunction};
use crate::{Error, Result, ENERGY_TOL, TIME_EPS};

/// Which envelope a slope change of the string rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactKind {
    /// Touches `H` from below; the slope increases.
    Upper,
    /// Touches `M` from above; the slope decreases.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub t: f64,
    pub e: f64,
    pub contact: Option<ContactKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringSolution {
    pub schedule: PowerSchedule,
    /// Origin, every slope change, and the endpoint.
    pub vertices: Vec<Vertex>,
}

impl StringSolution {
    pub fn total_data(&self, rate: &RateFunction) -> f64 {
        throughput(&self.schedule, rate)
    }

    pub fn contacts(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| v.contact.is_some())
    }

    /// Time at which the string leaves `H` for the last time, i.e. the last
    /// upper contact.
    pub fn departure_time(&self) -> Option<f64> {
        self.vertices
            .iter()
            .rev()
            .find(|v| v.contact == Some(ContactKind::Upper))
            .map(|v| v.t)
    }

    pub fn final_power(&self) -> f64 {
        let segs = self.schedule.segments();
        segs[segs.len() - 1].power
    }

    /// Wraps an arbitrary schedule, tagging every slope change that rests on
    /// the matching envelope.
    pub fn from_schedule(
        schedule: PowerSchedule,
        minimum: &CumulativeCurve,
        harvest: &CumulativeCurve,
    ) -> StringSolution {
        let pts = schedule.vertices();
        let mut vertices: Vec<Vertex> = pts
            .iter()
            .map(|&(t, e)| Vertex {
                t,
                e,
                contact: None,
            })
            .collect();
        for k in 1..pts.len().saturating_sub(1) {
            let delta = slope(pts[k], pts[k + 1]) - slope(pts[k - 1], pts[k]);
            let (t, e) = pts[k];
            if delta > 0.0 && (e - harvest.value_left_at(t)).abs() <= ENERGY_TOL {
                vertices[k].contact = Some(ContactKind::Upper);
            } else if delta < 0.0 && (e - minimum.value_at(t)).abs() <= ENERGY_TOL {
                vertices[k].contact = Some(ContactKind::Lower);
            }
        }
        StringSolution { schedule, vertices }
    }
}

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

/// A vertical window the energy curve must pass through at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gate {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Gates at the merged breakpoints, with the endpoints pinned at `(0, 0)`
/// and `(T, H(T^-))`.
pub(crate) fn gates(harvest: &CumulativeCurve, minimum: &CumulativeCurve) -> Result<Vec<Gate>> {
    let horizon = harvest.horizon();
    if (minimum.horizon() - horizon).abs() > TIME_EPS * horizon.max(1.0) {
        return Err(Error::HorizonMismatch(horizon, minimum.horizon()));
    }
    let m0 = minimum.value_at(0.0);
    if m0 > ENERGY_TOL {
        return Err(Error::NonZeroStart(m0));
    }
    let times = merged_times(&[harvest.as_pwl(), minimum.as_pwl()]);
    let last = times.len() - 1;
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let lo = minimum.value_at(t);
        let hi = if k == last {
            harvest.final_left_value()
        } else {
            harvest.value_left_at(t)
        };
        if lo > hi + ENERGY_TOL {
            return Err(Error::Infeasible { t, excess: lo - hi });
        }
        let gate = match k {
            0 => Gate {
                t,
                lo: 0.0,
                hi: 0.0,
            },
            _ if k == last => Gate { t, lo: hi, hi },
            _ => Gate {
                t,
                lo: lo.min(hi),
                hi,
            },
        };
        out.push(gate);
    }
    Ok(out)
}

type Point = (f64, f64);

/// Positive when `b` lies to the left of (above) the directed line `o -> a`.
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Funnel state. Both chains start at the apex, which is always the last
/// vertex committed to the path.
struct Funnel {
    upper: VecDeque<Point>,
    lower: VecDeque<Point>,
    path: Vec<Vertex>,
}

impl Funnel {
    fn new(origin: Point) -> Self {
        Self {
            upper: VecDeque::from([origin]),
            lower: VecDeque::from([origin]),
            path: vec![Vertex {
                t: origin.0,
                e: origin.1,
                contact: None,
            }],
        }
    }

    fn commit(&mut self, p: Point, kind: ContactKind) {
        self.path.push(Vertex {
            t: p.0,
            e: p.1,
            contact: Some(kind),
        });
    }

    fn add_upper(&mut self, p: Point) {
        let mut moved = false;
        // The new ceiling passes below the lower chain: the string wraps
        // over the lower vertices it can no longer see past.
        while self.lower.len() >= 2 && cross(self.lower[0], self.lower[1], p) < 0.0 {
            self.lower.pop_front();
            self.commit(self.lower[0], ContactKind::Lower);
            moved = true;
        }
        if moved {
            self.upper.clear();
            self.upper.push_back(self.lower[0]);
        } else {
            while self.upper.len() >= 2 {
                let n = self.upper.len();
                if cross(self.upper[n - 2], self.upper[n - 1], p) <= 0.0 {
                    self.upper.pop_back();
                } else {
                    break;
                }
            }
        }
        self.upper.push_back(p);
    }

    fn add_lower(&mut self, p: Point) {
        let mut moved = false;
        while self.upper.len() >= 2 && cross(self.upper[0], self.upper[1], p) > 0.0 {
            self.upper.pop_front();
            self.commit(self.upper[0], ContactKind::Upper);
            moved = true;
        }
        if moved {
            self.lower.clear();
            self.lower.push_back(self.upper[0]);
        } else {
            while self.lower.len() >= 2 {
                let n = self.lower.len();
                if cross(self.lower[n - 2], self.lower[n - 1], p) >= 0.0 {
                    self.lower.pop_back();
                } else {
                    break;
                }
            }
        }
        self.lower.push_back(p);
    }

    fn finish(mut self) -> Vec<Vertex> {
        // Both chains end at the pinned endpoint; the upper one holds the
        // remaining bends.
        let n = self.upper.len();
        for k in 1..n {
            let p = self.upper[k];
            let contact = if k + 1 == n {
                None
            } else {
                Some(ContactKind::Upper)
            };
            self.path.push(Vertex {
                t: p.0,
                e: p.1,
                contact,
            });
        }
        self.path
    }
}

/// Shortest path from `(0, 0)` to `(T, H(T^-))` that stays between `M` and
/// `H`. The result does not depend on the rate function.
pub fn taut_string(harvest: &CumulativeCurve, minimum: &CumulativeCurve) -> Result<StringSolution> {
    let gates = gates(harvest, minimum)?;
    let mut funnel = Funnel::new((0.0, 0.0));
    for g in &gates[1..] {
        funnel.add_upper((g.t, g.hi));
        funnel.add_lower((g.t, g.lo));
    }
    let vertices = funnel.finish();
    let pts: Vec<Point> = vertices.iter().map(|v| (v.t, v.e)).collect();
    let schedule = PowerSchedule::from_vertices(&pts)?;
    Ok(StringSolution { schedule, vertices })
}

/// Optimal schedule for the solar harvesting model with no battery limit.
pub fn solve_solar(deadline: f64, resolution: usize) -> Result<StringSolution> {
    if !(SOLAR_DAWN..=24.0).contains(&deadline) {
        return Err(Error::InvalidArgument(format!(
            "solar deadline must lie in [6, 24], got {deadline}"
        )));
    }
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!(
            "solar resolution must be at least 64, got {resolution}"
        )));
    }
    let harvest = CumulativeCurve::solar(deadline, resolution)?;
    let minimum = CumulativeCurve::zero(deadline)?;
    taut_string(&harvest, &minimum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateViolation {
    /// A feasible straight chord between two vertices that the curve does
    /// not follow, so the curve is not the shortest path.
    Shortcut {
        from: (f64, f64),
        to: (f64, f64),
        deviation: f64,
    },
    /// A slope change that is not supported by the matching envelope.
    MisplacedSlopeChange { t: f64, e: f64, slope_change: f64 },
    /// The curves themselves are inconsistent.
    InfeasibleCurves { t: f64, excess: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub passed: bool,
    pub violation: Option<CertificateViolation>,
}

/// Checks that `sol` is the taut string: no chord between two vertices is
/// a feasible shortcut, and every slope change rests on `H` (increase) or
/// `M` (decrease).
pub fn optimality_certificate(
    sol: &StringSolution,
    minimum: &CumulativeCurve,
    harvest: &CumulativeCurve,
) -> Certificate {
    let fail = |v| Certificate {
        passed: false,
        violation: Some(v),
    };
    let gates = match gates(harvest, minimum) {
        Ok(g) => g,
        Err(Error::Infeasible { t, excess }) => {
            return fail(CertificateViolation::InfeasibleCurves { t, excess })
        }
        Err(_) => {
            return fail(CertificateViolation::InfeasibleCurves {
                t: 0.0,
                excess: f64::NAN,
            })
        }
    };
    let pts: Vec<Point> = sol.vertices.iter().map(|v| (v.t, v.e)).collect();
    if let Some(v) = find_shortcut(&pts, &gates, harvest.final_value()) {
        return fail(v);
    }
    for k in 1..pts.len().saturating_sub(1) {
        let before = slope(pts[k - 1], pts[k]);
        let after = slope(pts[k], pts[k + 1]);
        let delta = after - before;
        if delta.abs() <= 1e-12 * (1.0 + before.abs().max(after.abs())) {
            continue;
        }
        let (t, e) = pts[k];
        let support = if delta > 0.0 {
            harvest.value_left_at(t)
        } else {
            minimum.value_at(t)
        };
        if (e - support).abs() > ENERGY_TOL {
            return fail(CertificateViolation::MisplacedSlopeChange {
                t,
                e,
                slope_change: delta,
            });
        }
    }
    Certificate {
        passed: true,
        violation: None,
    }
}

/// Sweeps the gates forward from each vertex, keeping the cone of feasible
/// chord slopes, and reports the first chord that is feasible but leaves
/// the curve.
fn find_shortcut(pts: &[Point], gates: &[Gate], scale: f64) -> Option<CertificateViolation> {
    let tol = 1e-12 * (1.0 + scale.abs());
    let horizon = gates[gates.len() - 1].t;
    let same_time = TIME_EPS * horizon.max(1.0);
    for i in 0..pts.len() {
        let (ti, ei) = pts[i];
        let mut smin = f64::NEG_INFINITY;
        let mut smax = f64::INFINITY;
        let mut g = gates.partition_point(|g| g.t <= ti + same_time);
        for j in i + 1..pts.len() {
            let (tj, ej) = pts[j];
            while g < gates.len() && gates[g].t < tj - same_time {
                let dt = gates[g].t - ti;
                smin = smin.max((gates[g].lo - tol - ei) / dt);
                smax = smax.min((gates[g].hi + tol - ei) / dt);
                g += 1;
            }
            if smin > smax {
                break;
            }
            let s = (ej - ei) / (tj - ti);
            if j >= i + 2 && s >= smin && s <= smax {
                let deviation = pts[i + 1..j]
                    .iter()
                    .map(|&(t, e)| (e - (ei + s * (t - ti))).abs())
                    .fold(0.0, f64::max);
                if deviation > ENERGY_TOL {
                    return Some(CertificateViolation::Shortcut {
                        from: (ti, ei),
                        to: (tj, ej),
                        deviation,
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{check_feasible, dying_battery_scenario, Breakpoint, Packet};
    use crate::rate::awgn_rate;

    fn staircase(packets: &[(f64, f64)], horizon: f64) -> CumulativeCurve {
        let p: Vec<Packet> = packets.iter().map(|&(t, e)| Packet::new(t, e)).collect();
        CumulativeCurve::from_packet_arrivals(&p, horizon).unwrap()
    }

    fn powers(sol: &StringSolution) -> Vec<f64> {
        sol.schedule.segments().iter().map(|s| s.power).collect()
    }

    #[test]
    fn single_packet_constant_power() {
        let (h, m) = dying_battery_scenario(&[6.0], &[4.0]).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        assert_eq!(powers(&sol), vec![1.5]);
        assert!(sol.contacts().next().is_none());
        let r = awgn_rate(1.0).unwrap();
        assert_eq!(sol.total_data(&r), 4.0 * r.eval(1.5));
    }

    #[test]
    fn two_packets_upper_contact() {
        let h = staircase(&[(0.0, 1.0), (2.0, 3.0)], 4.0);
        let m = CumulativeCurve::zero(4.0).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        assert_eq!(powers(&sol), vec![0.5, 1.5]);
        let contacts: Vec<_> = sol.contacts().collect();
        assert_eq!(contacts.len(), 1);
        assert_eq!(
            (contacts[0].t, contacts[0].contact),
            (2.0, Some(ContactKind::Upper))
        );
        assert_eq!(sol.departure_time(), Some(2.0));
    }

    #[test]
    fn dying_battery_lower_contact() {
        let (h, m) = dying_battery_scenario(&[2.0, 2.0], &[1.0, 4.0]).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        let p = powers(&sol);
        assert_eq!(p.len(), 2);
        assert!((p[0] - 2.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);
        let contacts: Vec<_> = sol.contacts().collect();
        assert_eq!(contacts.len(), 1);
        assert_eq!(contacts[0].contact, Some(ContactKind::Lower));
        assert!(optimality_certificate(&sol, &m, &h).passed);
    }

    #[test]
    fn endpoint_tied_to_harvest() {
        let h = staircase(&[(0.0, 1.0), (1.0, 2.0), (3.0, 0.5)], 5.0);
        let m = CumulativeCurve::zero(5.0).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        let last = sol.vertices.last().unwrap();
        assert_eq!((last.t, last.e), (5.0, 3.5));
        assert!((sol.schedule.total_energy() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_nonzero_start() {
        use crate::curves::Breakpoint;
        let h = staircase(&[(0.0, 1.0)], 4.0);
        let m = CumulativeCurve::new(
            vec![
                Breakpoint::continuous(0.0, 0.0),
                Breakpoint::jump(2.0, 0.0, 2.0),
                Breakpoint::continuous(4.0, 2.0),
            ],
            4.0,
        )
        .unwrap();
        assert!(matches!(taut_string(&h, &m), Err(Error::Infeasible { t, .. }) if t == 2.0));
        let m0 = CumulativeCurve::new(
            vec![
                Breakpoint::continuous(0.0, 0.5),
                Breakpoint::continuous(4.0, 0.5),
            ],
            4.0,
        )
        .unwrap();
        assert!(matches!(taut_string(&h, &m0), Err(Error::NonZeroStart(_))));
    }

    #[test]
    fn upper_and_lower_contacts_alternate() {
        // A late packet caps E(1) at 1, then M forces E(2) up to 6.
        let h = staircase(&[(0.0, 1.0), (1.0, 8.0)], 4.0);
        let m = CumulativeCurve::new(
            vec![
                Breakpoint::continuous(0.0, 0.0),
                Breakpoint::jump(2.0, 0.0, 6.0),
                Breakpoint::continuous(4.0, 6.0),
            ],
            4.0,
        )
        .unwrap();
        let sol = taut_string(&h, &m).unwrap();
        let powers: Vec<f64> = sol.schedule.segments().iter().map(|s| s.power).collect();
        assert_eq!(powers, vec![1.0, 5.0, 1.5]);
        let rep = check_feasible(&sol.schedule, &m, &h, 1e-9);
        assert!(rep.feasible, "{rep:?}");
        assert!(optimality_certificate(&sol, &m, &h).passed);
        let kinds: Vec<_> = sol.contacts().map(|v| v.contact.unwrap()).collect();
        assert_eq!(kinds, vec![ContactKind::Upper, ContactKind::Lower]);
    }

    #[test]
    fn certificate_rejects_suboptimal_schedule() {
        let (h, m) = dying_battery_scenario(&[6.0], &[4.0]).unwrap();
        let sched = PowerSchedule::from_vertices(&[(0.0, 0.0), (2.0, 2.0), (4.0, 6.0)]).unwrap();
        let sol = StringSolution::from_schedule(sched, &m, &h);
        let cert = optimality_certificate(&sol, &m, &h);
        assert!(!cert.passed);
        match cert.violation {
            Some(CertificateViolation::Shortcut { from, to, .. }) => {
                assert_eq!(from, (0.0, 0.0));
                assert_eq!(to, (4.0, 6.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn certificate_passes_constant_power() {
        let (h, m) = dying_battery_scenario(&[4.0], &[4.0]).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        assert!(optimality_certificate(&sol, &m, &h).passed);
    }

    #[test]
    fn rate_independent_geometry() {
        let h = staircase(&[(0.0, 1.0), (1.0, 0.2), (2.5, 3.0)], 4.0);
        let m = CumulativeCurve::zero(4.0).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        let r1 = awgn_rate(1.0).unwrap();
        let r7 = awgn_rate(7.0).unwrap();
        // The geometry never consults the rate; only the data values differ.
        assert!(sol.total_data(&r1) > sol.total_data(&r7));
    }

    #[test]
    fn solar_follows_harvest_then_tangent() {
        let sol = solve_solar(18.0, 1024).unwrap();
        let last = sol.vertices.last().unwrap();
        assert!((last.e - 40.0).abs() < 1e-6);
        // The tangent from (18, 40) touches H where h(a)(18 - a) = H(18) - H(a).
        let a = sol.departure_time().unwrap();
        assert!((a - 9.0).abs() < 0.05, "departure {a}");
        assert!((sol.final_power() - 3.75).abs() < 0.01);
        // Nothing is transmitted before sunrise.
        assert_eq!(sol.schedule.energy_at(5.9), 0.0);
    }

    #[test]
    fn solar_late_deadline_spends_everything() {
        let sol = solve_solar(24.0, 1024).unwrap();
        assert!((sol.schedule.total_energy() - 40.0).abs() < 1e-6);
        for s in sol.schedule.segments() {
            if s.t_start >= 6.0 {
                assert!(s.power > 0.0);
            }
        }
        assert!(solve_solar(5.0, 1024).is_err());
        assert!(solve_solar(18.0, 16).is_err());
    }

    proptest::proptest! {
        #[test]
        fn random_instances_are_solved(seed in 0u64..10_000) {
            let inst = crate::oracle::random_instance(seed).unwrap();
            let (h, m) = (&inst.harvest, &inst.minimum);
            let sol = taut_string(h, m).unwrap();
            proptest::prop_assert!(check_feasible(&sol.schedule, m, h, ENERGY_TOL).feasible);
            proptest::prop_assert!(optimality_certificate(&sol, m, h).passed);
            proptest::prop_assert_eq!(sol.vertices.last().unwrap().e, h.final_left_value());
            let total = sol.schedule.total_energy();
            proptest::prop_assert!((total - h.final_left_value()).abs() <= 1e-12 * (1.0 + total));
        }

        #[test]
        fn slopes_only_rise_without_minimum(seed in 0u64..10_000) {
            let inst = crate::oracle::random_instance(seed).unwrap();
            let h = &inst.harvest;
            let sol = taut_string(h, &CumulativeCurve::zero(h.horizon()).unwrap()).unwrap();
            let p = powers(&sol);
            proptest::prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
            proptest::prop_assert!(sol.contacts().all(|v| v.contact == Some(ContactKind::Upper)));
        }
    }
}
