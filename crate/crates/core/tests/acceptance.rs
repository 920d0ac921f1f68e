//! Acceptance suite: one pass/fail line per criterion, nonzero exit status
//! if any criterion fails.

use std::f64::consts::E;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use eh_sched::broadcast::{
    composite_rate, power_threshold, solve_broadcast, BroadcastProblem, PowerSplit,
};
use eh_sched::cli::report::SolveReport;
use eh_sched::cli::scenario::{demo_scenario, Problem, Scenario, DEMO_NAMES};
use eh_sched::curves::{check_feasible, CumulativeCurve, Packet, PowerSchedule};
use eh_sched::leakage::{
    compare_st_nt, p_star, simulate, solve_n_packet, solve_single_packet, Deadline, LeakageProblem,
    LeakageSolution,
};
use eh_sched::oracle::{
    blend_schedules, dp_leakage_throughput, dp_throughput, grid_argmax_f, random_feasible_schedule,
    random_instance, random_leakage_problem, solar_energy, tangent_root, GridSpec, RandomInstance,
};
use eh_sched::rate::{awgn_rate, throughput, RateFunction};
use eh_sched::string_solver::{optimality_certificate, solve_solar, taut_string, ContactKind};

const RANDOM_INSTANCES: u64 = 200;
const LEAKAGE_INSTANCES: u64 = 100;
const GRID: usize = 400;

/// Fixtures for the two-packet leakage example, confirmed against the DP
/// oracle before being frozen.
const TWO_PACKET_D_ST: f64 = 2.643856;
const TWO_PACKET_D_NT: f64 = 2.423558;

#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if ok {
            self.notes.push(what.into());
        } else {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn awgn() -> RateFunction {
    awgn_rate(1.0).unwrap()
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn grid_for(total: f64, horizon: f64) -> GridSpec {
    GridSpec::new(GRID, GRID, (total * GRID as f64 / horizon).max(1.0)).unwrap()
}

fn staircase(packets: &[Packet], horizon: f64) -> CumulativeCurve {
    CumulativeCurve::from_packet_arrivals(packets, horizon).unwrap()
}

fn random_instances() -> Vec<RandomInstance> {
    (0..RANDOM_INSTANCES)
        .map(|s| random_instance(s).unwrap())
        .collect()
}

fn constant_power(c: &mut Checks) {
    let rate = awgn();
    let mut worst = f64::NEG_INFINITY;
    for &(e0, t) in &[(3.0, 4.0), (10.0, 2.5), (0.7, 6.0), (16.0, 4.0)] {
        let h = staircase(&[Packet::new(0.0, e0)], t);
        let m = CumulativeCurve::zero(t).unwrap();
        let sol = taut_string(&h, &m).unwrap();
        let segs = sol.schedule.segments();
        c.check(
            segs.len() == 1 && segs[0].power == e0 / t,
            format!("E0 = {e0}, T = {t}: single segment at E0/T"),
        );
        let data = throughput(&sol.schedule, &rate);
        c.check(
            data == t * rate.eval(e0 / t),
            format!("E0 = {e0}, T = {t}: throughput is T r(E0/T)"),
        );
        for seed in 0..1000 {
            let r = random_feasible_schedule(&h, &m, seed).unwrap();
            let mix = blend_schedules(&sol.schedule, &r, 0.5).unwrap();
            for s in [&r, &mix] {
                worst = worst.max(throughput(s, &rate) - data);
            }
        }
    }
    c.check(
        worst <= 1e-12,
        format!("1000 perturbations per instance, max excess {worst:.3e}"),
    );
}

fn slope_certificate(c: &mut Checks, instances: &[RandomInstance]) {
    let mut checked = 0;
    for (seed, inst) in instances.iter().enumerate() {
        let (h, m) = (&inst.harvest, &inst.minimum);
        let sol = taut_string(h, m).unwrap();
        let scale = 1.0 + h.final_value();
        let segs = sol.schedule.segments();
        let max_p = segs.iter().map(|s| s.power).fold(0.0, f64::max);
        let mut bad = None;
        for k in 1..segs.len() {
            let delta = segs[k].power - segs[k - 1].power;
            if delta.abs() <= 1e-9 * (1.0 + max_p) {
                continue;
            }
            checked += 1;
            let t = segs[k].t_start;
            let e = sol.schedule.energy_at(t);
            let on_h = (e - h.eval_left(t).unwrap()).abs() <= 1e-9 * scale;
            let on_m = (e - m.eval(t).unwrap()).abs() <= 1e-9 * scale;
            let tag = sol
                .vertices
                .iter()
                .find(|v| (v.t - t).abs() <= 1e-12 * scale)
                .and_then(|v| v.contact);
            let ok = if delta > 0.0 {
                on_h && tag == Some(ContactKind::Upper)
            } else {
                on_m && tag == Some(ContactKind::Lower)
            };
            if !ok {
                bad = Some(format!(
                    "seed {seed}: slope change {delta:.3e} at t = {t} off its contact"
                ));
                break;
            }
        }
        if let Some(b) = bad {
            c.check(false, b);
        }
        let rep = check_feasible(&sol.schedule, m, h, 1e-9);
        if !rep.feasible {
            c.check(false, format!("seed {seed}: infeasible output {rep:?}"));
        }
        let cert = optimality_certificate(&sol, m, h);
        if !cert.passed {
            c.check(
                false,
                format!("seed {seed}: certificate failed {:?}", cert.violation),
            );
        }
    }
    c.note(format!(
        "{} instances, {checked} slope changes checked",
        instances.len()
    ));
}

fn oracle_equivalence(c: &mut Checks, instances: &[RandomInstance]) {
    let rate = awgn();
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = instances.len().div_ceil(threads);
    let gaps: Vec<(usize, f64, f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .enumerate()
            .map(|(ci, part)| {
                let rate = &rate;
                s.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(i, inst)| {
                            let sol = taut_string(&inst.harvest, &inst.minimum).unwrap();
                            let solver = throughput(&sol.schedule, rate);
                            let grid = grid_for(inst.harvest.final_value(), inst.harvest.horizon());
                            let oracle =
                                dp_throughput(&inst.harvest, &inst.minimum, rate, &grid).unwrap();
                            (ci * chunk + i, solver, oracle, rel_gap(solver, oracle))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect()
    });
    let worst = gaps
        .iter()
        .cloned()
        .fold((0, 0.0, 0.0, 0.0), |a, b| if b.3 > a.3 { b } else { a });
    for &(seed, solver, oracle, gap) in &gaps {
        if gap > 0.005 {
            c.check(
                false,
                format!("seed {seed}: solver {solver:.6}, oracle {oracle:.6}, gap {gap:.3e}"),
            );
        }
    }
    c.note(format!(
        "{} instances at {GRID}x{GRID}, worst gap {:.3e} (seed {})",
        gaps.len(),
        worst.3,
        worst.0
    ));
}

fn solar(c: &mut Checks) {
    let h = CumulativeCurve::solar(18.0, 1024).unwrap();
    let total = h.final_value();
    c.check(
        (solar_energy(18.0) - 40.0).abs() <= 1e-6,
        format!("closed-form H(18) = {:.9}", solar_energy(18.0)),
    );
    c.check(
        (total - 40.0).abs() <= 1e-6,
        format!("integrated H(18) = {total:.9}"),
    );
    let coarse = solve_solar(18.0, 1024).unwrap();
    let fine = solve_solar(18.0, 8192).unwrap();
    let d1024 = coarse.departure_time().unwrap();
    let d8192 = fine.departure_time().unwrap();
    let root = tangent_root(18.0).unwrap();
    c.check(
        (d1024 - 13.58).abs() <= 0.05,
        format!("departure at resolution 1024 is {d1024:.4}, expected 13.58 +- 0.05"),
    );
    c.check(
        (d8192 - root).abs() <= 0.005,
        format!("departure at resolution 8192 is {d8192:.4}, tangent root {root:.4}"),
    );
    let rate = awgn();
    let solver = coarse.total_data(&rate);
    let zero = CumulativeCurve::zero(18.0).unwrap();
    let oracle = dp_throughput(&h, &zero, &rate, &grid_for(total, 18.0)).unwrap();
    let gap = rel_gap(solver, oracle);
    c.check(
        gap <= 0.005,
        format!("throughput {solver:.6} vs oracle {oracle:.6}, gap {gap:.3e}"),
    );
}

/// `max mu1 r1(p1) + mu2 r2(p - p1)` by a dense grid plus golden refinement.
fn inner_max(mu1: f64, mu2: f64, n1: f64, n2: f64, p: f64) -> f64 {
    let g = |p1: f64| {
        let p2 = p - p1;
        mu1 * 0.5 * (1.0 + p1 / n1).log2() + mu2 * 0.5 * (1.0 + p2 / (p1 + n2)).log2()
    };
    let n = 4000;
    let step = p / n as f64;
    let best = (0..=n)
        .map(|i| i as f64 * step)
        .max_by(|a, b| g(*a).total_cmp(&g(*b)))
        .unwrap();
    let (mut lo, mut hi) = ((best - step).max(0.0), (best + step).min(p));
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if g(a) < g(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    g(0.5 * (lo + hi)).max(g(0.0)).max(g(p))
}

fn broadcast(c: &mut Checks) {
    for &(mu1, mu2, n1, n2) in &[
        (1.0, 2.0, 1.0, 3.0),
        (1.0, 1.5, 0.5, 4.0),
        (2.0, 3.0, 1.0, 2.0),
    ] {
        let rate = composite_rate(mu1, mu2, n1, n2).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..=50 {
            let p = 0.25 * i as f64;
            worst = worst.max((rate.eval(p) - inner_max(mu1, mu2, n1, n2, p)).abs());
        }
        c.check(
            worst <= 1e-6,
            format!("({mu1}, {mu2}, {n1}, {n2}): max deviation from inner maximum {worst:.3e}"),
        );
        let dp = 0.05;
        let worst_curv = (1..400)
            .map(|i| {
                let p = i as f64 * dp;
                rate.eval(p + dp) - 2.0 * rate.eval(p) + rate.eval(p - dp)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        c.check(
            worst_curv <= 1e-12,
            format!("({mu1}, {mu2}, {n1}, {n2}): max second difference {worst_curv:.3e}"),
        );
    }
    let split = power_threshold(1.0, 2.0, 1.0, 3.0).unwrap();
    c.check(
        split == PowerSplit::Threshold(1.0),
        format!("p_th for (1, 2, 1, 3) is {split:?}"),
    );
    let r3 = composite_rate(1.0, 2.0, 1.0, 3.0).unwrap().eval(3.0);
    c.check((r3 - 1.08496).abs() <= 1e-4, format!("r(3) = {r3:.6}"));

    let mut identical = 0;
    let total = 2 * 20;
    for &(mu1, mu2) in &[(2.0, 1.0), (1.0, 4.0)] {
        for seed in 0..20 {
            let inst = random_instance(seed).unwrap();
            let bp = BroadcastProblem {
                n1: 1.0,
                n2: 3.0,
                mu1,
                mu2,
                harvest: inst.harvest.clone(),
                minimum: inst.minimum.clone(),
            };
            let b = solve_broadcast(&bp).unwrap();
            let p2p = taut_string(&inst.harvest, &inst.minimum).unwrap();
            let served = if mu2 / mu1 <= 1.0 {
                &b.user1_schedule
            } else {
                &b.user2_schedule
            };
            if b.string.vertices == p2p.vertices && served == &p2p.schedule {
                identical += 1;
            }
        }
    }
    c.check(
        identical == total,
        format!("degenerate regimes: {identical}/{total} bit-identical to point-to-point"),
    );
}

fn p_star_checks(c: &mut Checks) {
    let rate = awgn();
    let ps = p_star(&rate, 1.0).unwrap();
    c.check(
        (ps - (E - 1.0)).abs() <= 1e-9,
        format!("p*(eps = 1) = {ps:.12}"),
    );
    let g = grid_argmax_f(&rate, 1.0, 100.0, 2000).unwrap();
    let step = (g.above.unwrap_or(g.p) - g.p).max(g.p - g.below.unwrap_or(g.p));
    c.check(
        (g.p - ps).abs() <= step,
        format!("grid argmax {:.6}, step {step:.3e}", g.p),
    );
    let eps = [0.0, 0.1, 0.5, 1.0, 2.0];
    let values: Vec<f64> = eps.iter().map(|&e| p_star(&rate, e).unwrap()).collect();
    c.check(
        values.windows(2).all(|w| w[0] <= w[1]),
        format!("p* over {eps:?}: {values:?}"),
    );
    c.check(values[0] == 0.0, "p*(0) = 0 exactly");
}

fn st_closed_forms(c: &mut Checks) {
    let rate = awgn();
    let cases = [
        (16.0, 3.0, 4.0),
        (10.0, E - 1.0, 10.0 * rate.eval(E - 1.0) / E),
    ];
    for &(energy, power, data) in &cases {
        let sol = solve_single_packet(energy, Deadline::Finite(4.0), &rate, 1.0).unwrap();
        let got_power = sol.block_powers[0];
        c.check(
            (got_power - power).abs() <= 1e-9,
            format!("E = {energy}: power {got_power:.12}"),
        );
        c.check(
            (sol.total_data - data).abs() <= 1e-9,
            format!("E = {energy}: data {:.12}", sol.total_data),
        );
        let problem = LeakageProblem::new(
            vec![Packet::new(0.0, energy)],
            1.0,
            Deadline::Finite(4.0),
            rate,
        )
        .unwrap();
        let oracle = dp_leakage_throughput(&problem, &grid_for(energy, 4.0)).unwrap();
        let gap = rel_gap(sol.total_data, oracle);
        c.check(
            gap <= 0.01,
            format!("E = {energy}: oracle {oracle:.6}, gap {gap:.3e}"),
        );
    }
}

fn unbounded(p: &LeakageProblem) -> LeakageProblem {
    LeakageProblem::new(p.packets.clone(), p.epsilon, Deadline::Unbounded, p.rate).unwrap()
}

fn n_packet(c: &mut Checks, solved: &mut Vec<(LeakageProblem, LeakageSolution)>) {
    let rate = awgn();
    let mut all_p_star = 0;
    let mut eps_zero = 0;
    let mut dominance = 0;
    let mut iff = 0;
    let mut sufficient_implies_equal = 0;
    let mut sufficient = 0;
    let mut counterexamples = Vec::new();
    for seed in 0..LEAKAGE_INSTANCES {
        let p = random_leakage_problem(seed, 6, rate).unwrap();
        let horizon = p.deadline.finite().unwrap();

        let u = unbounded(&p);
        let sol = solve_n_packet(&u).unwrap();
        let ps = p_star(&rate, u.epsilon).unwrap();
        if sol.block_powers.iter().all(|&b| b == ps) {
            all_p_star += 1;
        }
        solved.push((u, sol));

        let z = LeakageProblem::new(p.packets.clone(), 0.0, p.deadline, rate).unwrap();
        let zsol = solve_n_packet(&z).unwrap();
        let h = staircase(&p.packets, horizon);
        let string = taut_string(&h, &CumulativeCurve::zero(horizon).unwrap()).unwrap();
        if (zsol.total_data - string.total_data(&rate)).abs() <= 1e-9 {
            eps_zero += 1;
        }
        solved.push((z, zsol));

        let cmp = compare_st_nt(&p).unwrap();
        if cmp.d_st >= cmp.d_nt - 1e-9 {
            dominance += 1;
        }
        let equal = (cmp.d_st - cmp.d_nt).abs() <= 1e-9;
        if equal == cmp.sufficient_condition {
            iff += 1;
        } else if counterexamples.len() < 3 {
            counterexamples.push(format!(
                "seed {seed}: D_ST {:.6}, D_NT {:.6}, condition {}",
                cmp.d_st, cmp.d_nt, cmp.sufficient_condition
            ));
        }
        if cmp.sufficient_condition {
            sufficient += 1;
            if equal {
                sufficient_implies_equal += 1;
            }
        }
        solved.push((p.clone(), solve_n_packet(&p).unwrap()));
    }
    let n = LEAKAGE_INSTANCES;
    c.check(
        all_p_star == n,
        format!("unbounded deadline: {all_p_star}/{n} with every block at p*"),
    );
    c.check(
        eps_zero == n,
        format!("eps = 0: {eps_zero}/{n} equal to the taut string"),
    );
    c.check(dominance == n, format!("D_ST >= D_NT on {dominance}/{n}"));
    c.note(format!(
        "condition => equality on {sufficient_implies_equal}/{sufficient}"
    ));
    c.check(iff == n, format!("equality iff condition on {iff}/{n}"));
    for ce in counterexamples {
        c.note(format!("  {ce}"));
    }

    let two = LeakageProblem::new(
        vec![Packet::new(0.0, 4.0), Packet::new(3.0, 4.0)],
        0.5,
        Deadline::Finite(4.0),
        rate,
    )
    .unwrap();
    let cmp = compare_st_nt(&two).unwrap();
    let grid = grid_for(8.0, 4.0);
    let oracle_nt = dp_leakage_throughput(&two, &grid).unwrap();
    let st = LeakageProblem::new(
        vec![Packet::new(0.0, 8.0)],
        0.5,
        Deadline::Finite(4.0),
        rate,
    )
    .unwrap();
    let oracle_st = dp_leakage_throughput(&st, &grid).unwrap();
    c.check(
        rel_gap(TWO_PACKET_D_NT, oracle_nt) <= 0.01 && rel_gap(TWO_PACKET_D_ST, oracle_st) <= 0.01,
        format!("fixtures confirmed by oracle: D_NT {oracle_nt:.4}, D_ST {oracle_st:.4}"),
    );
    c.check(
        (cmp.d_st - TWO_PACKET_D_ST).abs() <= 1e-3 && (cmp.d_nt - TWO_PACKET_D_NT).abs() <= 1e-3,
        format!(
            "two-packet example: D_ST {:.4}, D_NT {:.4}",
            cmp.d_st, cmp.d_nt
        ),
    );
    solved.push((st.clone(), solve_n_packet(&st).unwrap()));
    solved.push((two.clone(), solve_n_packet(&two).unwrap()));
}

fn conservation(c: &mut Checks, solved: &[(LeakageProblem, LeakageSolution)]) {
    let mut worst_balance: f64 = 0.0;
    let mut worst_boundary: f64 = 0.0;
    let mut events = 0;
    for (problem, sol) in solved {
        let trace = simulate(&sol.schedule, problem).unwrap();
        let balance = trace.transmit_energy + trace.leaked_energy - problem.total_energy();
        worst_balance = worst_balance.max(balance.abs());
        for b in &sol.blocks {
            worst_boundary = worst_boundary.max(trace.battery_left_at(b.end).abs());
        }
        if trace.infeasible_at.is_some() {
            events += 1;
        }
    }
    c.check(
        worst_balance <= 1e-9,
        format!(
            "{} solutions, worst balance error {worst_balance:.3e}",
            solved.len()
        ),
    );
    c.check(
        worst_boundary <= 1e-9,
        format!("worst battery level at a block boundary {worst_boundary:.3e}"),
    );
    c.check(events == 0, format!("{events} infeasibility events"));
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eh-sched"))
        .args(args)
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn cli_round_trip(c: &mut Checks) {
    let dir = std::env::temp_dir().join(format!("eh-sched-acceptance-{}", std::process::id()));
    let dir_s = dir.to_string_lossy().into_owned();
    for name in DEMO_NAMES {
        let (code, text) = run_cli(&["demo", name, "--out", &dir_s]);
        c.check(code == 0, format!("demo {name}: exit {code}"));
        if code != 0 {
            c.note(text);
            continue;
        }
        for file in [
            format!("{name}.report.json"),
            format!("{name}.schedule.csv"),
            format!("{name}.svg"),
        ] {
            c.check(
                Path::new(&dir).join(&file).is_file(),
                format!("demo {name}: wrote {file}"),
            );
        }
        let json = std::fs::read_to_string(dir.join(format!("{name}.report.json"))).unwrap();
        let report: SolveReport = match serde_json::from_str(&json) {
            Ok(r) => r,
            Err(e) => {
                c.check(
                    false,
                    format!("demo {name}: report does not match the schema: {e}"),
                );
                continue;
            }
        };
        let e = report.energy;
        let err = e.harvested - e.transmitted - e.leaked - e.residual;
        c.check(
            err.abs() <= 1e-9,
            format!("demo {name}: energy balance error {err:.3e}"),
        );
        let problem = Scenario::parse(demo_scenario(name).unwrap())
            .unwrap()
            .build(1024)
            .unwrap();
        let schedule: PowerSchedule = report.schedule.clone();
        let ok = match &problem {
            Problem::PointToPoint {
                harvest, minimum, ..
            } => check_feasible(&schedule, minimum, harvest, 1e-9).feasible,
            Problem::Broadcast(bp) => {
                check_feasible(&schedule, &bp.minimum, &bp.harvest, 1e-9).feasible
            }
            Problem::Leakage(lp) => simulate(&schedule, lp).unwrap().infeasible_at.is_none(),
        };
        c.check(ok, format!("demo {name}: reloaded schedule is feasible"));

        let (code, text) = run_cli(&[
            "verify", "demo", name, "--grid", "400x400", "--out", &dir_s, "--format", "json",
        ]);
        let json = std::fs::read_to_string(dir.join(format!("{name}.report.json"))).unwrap();
        let report: SolveReport = serde_json::from_str(&json).unwrap();
        match report.verification {
            Some(v) => {
                let gap = v.relative_gap.unwrap_or(f64::INFINITY);
                c.check(
                    code == 0 && v.passed && gap <= v.tolerance,
                    format!(
                        "verify {name}: exit {code}, gap {gap:.3e} (tolerance {})",
                        v.tolerance
                    ),
                );
            }
            None => {
                c.check(
                    false,
                    format!("verify {name}: no verification section\n{text}"),
                );
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

fn main() {
    let instances = random_instances();
    let mut leakage_solutions = Vec::new();
    type Criterion<'a> = (&'static str, Box<dyn FnMut(&mut Checks) + 'a>);
    let mut criteria: Vec<Criterion> = vec![
        ("constant-power optimality", Box::new(constant_power)),
        (
            "slope-change certificate",
            Box::new(|c: &mut Checks| slope_certificate(c, &instances)),
        ),
        (
            "oracle equivalence",
            Box::new(|c: &mut Checks| oracle_equivalence(c, &instances)),
        ),
        ("solar example", Box::new(solar)),
        ("broadcast reduction", Box::new(broadcast)),
        ("p* correctness", Box::new(p_star_checks)),
        ("single-time closed forms", Box::new(st_closed_forms)),
    ];
    let solutions = &mut leakage_solutions;
    let mut failed = 0;
    let mut run = |index: usize, name: &str, f: &mut dyn FnMut(&mut Checks)| {
        let start = std::time::Instant::now();
        let mut c = Checks::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut c)));
        if let Err(panic) = outcome {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            c.failures.push(format!("panicked: {msg}"));
        }
        let pass = c.failures.is_empty();
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {index:>2}. {name} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for f in &c.failures {
            println!("       FAIL {f}");
        }
        for n in &c.notes {
            println!("       ok   {n}");
        }
    };
    for (i, (name, f)) in criteria.iter_mut().enumerate() {
        run(i + 1, name, f.as_mut());
    }
    run(8, "leaky-battery recursion", &mut |c: &mut Checks| {
        n_packet(c, solutions)
    });
    let solutions = &leakage_solutions;
    run(9, "conservation and dynamics", &mut |c: &mut Checks| {
        conservation(c, solutions)
    });
    run(10, "CLI round-trip", &mut cli_round_trip);
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
