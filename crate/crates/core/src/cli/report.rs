//! Solving a scenario and summarizing the result.

use serde::{Deserialize, Serialize};

use super::scenario::{Mode, Problem};
use crate::broadcast::{solve_broadcast, PowerSplit};
use crate::curves::{check_feasible, CumulativeCurve, FeasibilityReport, PowerSchedule, Pwl};
use crate::leakage::{
    compare_st_nt, p_star, simulate, solve_n_packet, Block, Deadline, LeakageProblem,
    StNtComparison,
};
use crate::oracle::{
    blend_schedules, dp_leakage_throughput, dp_throughput, random_feasible_schedule, GridSpec,
};
use crate::rate::{throughput, RateFunction};
use crate::string_solver::{
    optimality_certificate, taut_string, Certificate, StringSolution, Vertex,
};
use crate::{Result, ENERGY_TOL};

/// Relative solver/oracle gap accepted by `verify`.
pub const P2P_TOLERANCE: f64 = 0.005;
pub const LEAKAGE_TOLERANCE: f64 = 0.01;
const DOMINANCE_SAMPLES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub harvested: f64,
    pub transmitted: f64,
    pub leaked: f64,
    /// Energy left unused at the end of the schedule.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSchedules {
    pub user1: PowerSchedule,
    pub user2: PowerSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadcastSummary {
    pub split: PowerSplit,
    pub b1: f64,
    pub b2: f64,
    pub weighted_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageSummary {
    pub epsilon: f64,
    pub p_star: f64,
    pub blocks: Vec<Block>,
    /// Present for finite deadlines.
    pub comparison: Option<StNtComparison>,
    /// First time the simulated battery could not supply the schedule.
    pub infeasible_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub seed: u64,
    pub samples: u64,
    /// Best throughput among the random and blended schedules.
    pub best_random: f64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub grid: String,
    pub solver: f64,
    pub oracle: Option<f64>,
    pub relative_gap: Option<f64>,
    pub tolerance: f64,
    pub dominance: Option<DominanceCheck>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub name: String,
    pub mode: Mode,
    pub horizon: f64,
    pub schedule: PowerSchedule,
    pub user_schedules: Option<UserSchedules>,
    pub total_data: f64,
    pub broadcast: Option<BroadcastSummary>,
    pub leakage: Option<LeakageSummary>,
    pub energy: EnergyBalance,
    pub contacts: Vec<Vertex>,
    pub departure_time: Option<f64>,
    pub feasibility: Option<FeasibilityReport>,
    pub certificate: Option<Certificate>,
    pub verification: Option<Verification>,
}

/// Curves for the plot: an upper envelope, an optional lower one, and the
/// transmitted energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub upper: Pwl,
    pub upper_label: &'static str,
    pub lower: Option<Pwl>,
    pub lower_label: &'static str,
    pub energy: Pwl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub report: SolveReport,
    pub plot: PlotData,
}

fn string_report(
    name: &str,
    mode: Mode,
    string: &StringSolution,
    harvest: &CumulativeCurve,
    minimum: &CumulativeCurve,
    total_data: f64,
) -> Result<Solved> {
    let transmitted = string.schedule.total_energy();
    let harvested = harvest.final_value();
    let report = SolveReport {
        name: name.to_string(),
        mode,
        horizon: harvest.horizon(),
        schedule: string.schedule.clone(),
        user_schedules: None,
        total_data,
        broadcast: None,
        leakage: None,
        energy: EnergyBalance {
            harvested,
            transmitted,
            leaked: 0.0,
            residual: harvested - transmitted,
        },
        contacts: string.contacts().copied().collect(),
        departure_time: string.departure_time(),
        feasibility: Some(check_feasible(
            &string.schedule,
            minimum,
            harvest,
            ENERGY_TOL,
        )),
        certificate: Some(optimality_certificate(string, minimum, harvest)),
        verification: None,
    };
    let plot = PlotData {
        upper: harvest.as_pwl().clone(),
        upper_label: "H",
        lower: Some(minimum.as_pwl().clone()),
        lower_label: "M",
        energy: string.schedule.energy_curve()?.as_pwl().clone(),
    };
    Ok(Solved { report, plot })
}

fn leakage_report(name: &str, problem: &LeakageProblem) -> Result<Solved> {
    let sol = solve_n_packet(problem)?;
    let trace = simulate(&sol.schedule, problem)?;
    let comparison = match problem.deadline {
        Deadline::Finite(_) => Some(compare_st_nt(problem)?),
        Deadline::Unbounded => None,
    };
    let report = SolveReport {
        name: name.to_string(),
        mode: Mode::Leakage,
        horizon: sol.schedule.horizon(),
        schedule: sol.schedule.clone(),
        user_schedules: None,
        total_data: sol.total_data,
        broadcast: None,
        leakage: Some(LeakageSummary {
            epsilon: problem.epsilon,
            p_star: p_star(&problem.rate, problem.epsilon)?,
            blocks: sol.blocks.clone(),
            comparison,
            infeasible_at: trace.infeasible_at,
        }),
        energy: EnergyBalance {
            harvested: problem.total_energy(),
            transmitted: trace.transmit_energy,
            leaked: trace.leaked_energy,
            residual: trace.residual,
        },
        contacts: Vec::new(),
        departure_time: None,
        feasibility: None,
        certificate: None,
        verification: None,
    };
    let plot = PlotData {
        upper: trace.harvest.as_pwl().clone(),
        upper_label: "U",
        lower: Some(trace.available.clone()),
        lower_label: "U~",
        energy: trace.transmitted.as_pwl().clone(),
    };
    Ok(Solved { report, plot })
}

/// Runs the solver matching the problem.
pub fn solve(name: &str, problem: &Problem) -> Result<Solved> {
    match problem {
        Problem::PointToPoint {
            harvest,
            minimum,
            rate,
        } => {
            let string = taut_string(harvest, minimum)?;
            let data = string.total_data(rate);
            string_report(name, Mode::P2p, &string, harvest, minimum, data)
        }
        Problem::Broadcast(bp) => {
            let sol = solve_broadcast(bp)?;
            let mut solved = string_report(
                name,
                Mode::Broadcast,
                &sol.string,
                &bp.harvest,
                &bp.minimum,
                sol.b1 + sol.b2,
            )?;
            solved.report.user_schedules = Some(UserSchedules {
                user1: sol.user1_schedule.clone(),
                user2: sol.user2_schedule.clone(),
            });
            solved.report.broadcast = Some(BroadcastSummary {
                split: sol.split,
                b1: sol.b1,
                b2: sol.b2,
                weighted_sum: sol.weighted_sum,
            });
            Ok(solved)
        }
        Problem::Leakage(lp) => leakage_report(name, lp),
    }
}

fn relative_gap(solver: f64, oracle: f64) -> f64 {
    (solver - oracle).abs() / oracle.abs().max(1e-12)
}

/// Grid whose power cap never binds: a single slot may spend everything.
fn uncapped_grid(slots: usize, levels: usize, total: f64, horizon: f64) -> Result<GridSpec> {
    let cap = (total * slots as f64 / horizon).max(1.0);
    GridSpec::new(slots, levels, cap)
}

fn dominance(
    solver: &PowerSchedule,
    harvest: &CumulativeCurve,
    minimum: &CumulativeCurve,
    rate: &RateFunction,
    seed: u64,
) -> Result<DominanceCheck> {
    let best = throughput(solver, rate);
    let mut check = DominanceCheck {
        seed,
        samples: 2 * DOMINANCE_SAMPLES,
        best_random: f64::NEG_INFINITY,
        violations: 0,
    };
    for i in 0..DOMINANCE_SAMPLES {
        let random = random_feasible_schedule(harvest, minimum, seed.wrapping_add(i))?;
        let blend = blend_schedules(solver, &random, 0.5)?;
        for s in [&random, &blend] {
            let d = throughput(s, rate);
            check.best_random = check.best_random.max(d);
            if d > best + 1e-9 * (1.0 + best.abs()) {
                check.violations += 1;
            }
        }
    }
    Ok(check)
}

/// Compares the solver against the brute-force oracle of the mode.
pub fn verify(
    problem: &Problem,
    solved: &Solved,
    slots: usize,
    levels: usize,
    seed: u64,
) -> Result<Verification> {
    let grid_name = format!("{slots}x{levels}");
    let solver = solved.report.total_data;
    let p2p = |harvest: &CumulativeCurve,
               minimum: &CumulativeCurve,
               rate: &RateFunction|
     -> Result<Verification> {
        let grid = uncapped_grid(slots, levels, harvest.final_value(), harvest.horizon())?;
        let oracle = dp_throughput(harvest, minimum, rate, &grid)?;
        let gap = relative_gap(solver, oracle);
        let dom = dominance(&solved.report.schedule, harvest, minimum, rate, seed)?;
        Ok(Verification {
            grid: grid_name.clone(),
            solver,
            oracle: Some(oracle),
            relative_gap: Some(gap),
            tolerance: P2P_TOLERANCE,
            dominance: Some(dom),
            passed: gap <= P2P_TOLERANCE && dom.violations == 0,
            note: None,
        })
    };
    match problem {
        Problem::PointToPoint {
            harvest,
            minimum,
            rate,
        } => p2p(harvest, minimum, rate),
        Problem::Broadcast(bp) => {
            // The oracle optimizes the weighted sum directly.
            let rate = bp.effective_rate()?;
            let mut v = p2p(&bp.harvest, &bp.minimum, &rate)?;
            let weighted = solved.report.broadcast.map_or(solver, |b| b.weighted_sum);
            v.solver = weighted;
            let gap = relative_gap(weighted, v.oracle.unwrap_or(weighted));
            v.relative_gap = Some(gap);
            v.passed = gap <= P2P_TOLERANCE && v.dominance.is_none_or(|d| d.violations == 0);
            Ok(v)
        }
        Problem::Leakage(lp) => {
            let Deadline::Finite(horizon) = lp.deadline else {
                return Ok(Verification {
                    grid: grid_name,
                    solver,
                    oracle: None,
                    relative_gap: None,
                    tolerance: LEAKAGE_TOLERANCE,
                    dominance: None,
                    passed: true,
                    note: Some("no oracle for an unbounded deadline".into()),
                });
            };
            let grid = uncapped_grid(slots, levels, lp.total_energy(), horizon)?;
            let oracle = dp_leakage_throughput(lp, &grid)?;
            let gap = relative_gap(solver, oracle);
            Ok(Verification {
                grid: grid_name,
                solver,
                oracle: Some(oracle),
                relative_gap: Some(gap),
                tolerance: LEAKAGE_TOLERANCE,
                dominance: None,
                passed: gap <= LEAKAGE_TOLERANCE,
                note: None,
            })
        }
    }
}

/// Human-readable summary for stdout.
pub fn summary(report: &SolveReport) -> String {
    let mut out = String::new();
    let mode = match report.mode {
        Mode::P2p => "point-to-point",
        Mode::Broadcast => "broadcast",
        Mode::Leakage => "leaky battery",
    };
    out.push_str(&format!(
        "{} ({mode}), horizon {:.6}\n",
        report.name, report.horizon
    ));
    out.push_str(&format!("total data      {:.6}\n", report.total_data));
    if let Some(b) = &report.broadcast {
        out.push_str(&format!(
            "users           b1 = {:.6}, b2 = {:.6}, weighted sum = {:.6}\n",
            b.b1, b.b2, b.weighted_sum
        ));
    }
    let e = &report.energy;
    out.push_str(&format!(
        "energy          harvested {:.6}, transmitted {:.6}, leaked {:.6}, residual {:.6}\n",
        e.harvested, e.transmitted, e.leaked, e.residual
    ));
    if let Some(t) = report.departure_time {
        out.push_str(&format!("departure       t = {t:.6}\n"));
    }
    if !report.contacts.is_empty() {
        out.push_str(&format!("contacts        {}\n", report.contacts.len()));
    }
    if let Some(l) = &report.leakage {
        out.push_str(&format!("p*              {:.6}\n", l.p_star));
        for b in &l.blocks {
            out.push_str(&format!(
                "block           packets {}..={} on [{:.6}, {:.6}] at power {:.6}\n",
                b.first, b.last, b.start, b.end, b.power
            ));
        }
        if let Some(c) = &l.comparison {
            out.push_str(&format!(
                "all-at-start    {:.6} (sufficient condition {})\n",
                c.d_st,
                if c.sufficient_condition {
                    "holds"
                } else {
                    "fails"
                }
            ));
        }
    }
    out.push_str("schedule\n");
    for s in report.schedule.segments() {
        out.push_str(&format!(
            "  [{:.6}, {:.6})  power {:.6}\n",
            s.t_start, s.t_end, s.power
        ));
    }
    if let Some(c) = &report.certificate {
        out.push_str(&format!(
            "certificate     {}\n",
            if c.passed { "passed" } else { "FAILED" }
        ));
    }
    if let Some(v) = &report.verification {
        match (v.oracle, v.relative_gap) {
            (Some(o), Some(g)) => out.push_str(&format!(
                "oracle ({})  {o:.6}, relative gap {:.3e} (tolerance {:.1e})\n",
                v.grid, g, v.tolerance
            )),
            _ => out.push_str(&format!(
                "oracle          skipped: {}\n",
                v.note.as_deref().unwrap_or("")
            )),
        }
        if let Some(d) = &v.dominance {
            out.push_str(&format!(
                "dominance       {} random schedules, {} above the solver\n",
                d.samples, d.violations
            ));
        }
        out.push_str(&format!(
            "verification    {}\n",
            if v.passed { "passed" } else { "FAILED" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::scenario::{demo_scenario, Scenario};

    fn demo(name: &str) -> (Problem, Solved) {
        let problem = Scenario::parse(demo_scenario(name).unwrap())
            .unwrap()
            .build(1024)
            .unwrap();
        let solved = solve(name, &problem).unwrap();
        (problem, solved)
    }

    #[test]
    fn energy_balances() {
        for name in super::super::scenario::DEMO_NAMES {
            let (_, s) = demo(name);
            let e = s.report.energy;
            let err = e.harvested - e.transmitted - e.leaked - e.residual;
            assert!(err.abs() <= 1e-9, "{name}: {err}");
        }
    }

    #[test]
    fn dying_battery_powers() {
        let (_, s) = demo("dying-battery");
        let powers: Vec<f64> = s
            .report
            .schedule
            .segments()
            .iter()
            .map(|s| s.power)
            .collect();
        assert_eq!(powers.len(), 2);
        assert!((powers[0] - 2.0).abs() < 1e-12);
        assert!((powers[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(s.report.certificate.unwrap().passed);
    }

    #[test]
    fn verify_small_grid() {
        let (problem, s) = demo("dying-battery");
        let v = verify(&problem, &s, 100, 100, 7).unwrap();
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn summary_mentions_blocks() {
        let (_, s) = demo("leakage-counterexample");
        let text = summary(&s.report);
        assert!(text.contains("block"));
        assert!(text.contains("p*"));
    }
}
