//! Two-user Gaussian broadcast channel.
//!
//! For a fixed total power the weighted sum rate `mu1 r1 + mu2 r2` is
//! maximized by a threshold split: the strong user (noise `n1`) gets all
//! power up to `p_th`, the weak user gets the excess. The optimal weighted
//! rate is then a concave function of the total power alone, so the
//! point-to-point taut string solves the broadcast problem too.

use serde::{Deserialize, Serialize};

use crate::curves::{CumulativeCurve, PowerSchedule, Segment};
use crate::rate::{weighted_awgn_rate, RateFunction};
use crate::string_solver::{taut_string, StringSolution};
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

/// How the total power is shared between the two users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", content = "p_th", rename_all = "snake_case")]
pub enum PowerSplit {
    User1Only,
    User2Only,
    /// User 1 receives `min(p, p_th)`, user 2 the rest.
    Threshold(f64),
}

fn check_params(mu1: f64, mu2: f64, n1: f64, n2: f64) -> Result<()> {
    if !(n1.is_finite() && n2.is_finite() && n1 > 0.0 && n2 > n1) {
        return Err(Error::InvalidArgument(format!(
            "noise powers must satisfy n2 > n1 > 0, got n1 = {n1}, n2 = {n2}"
        )));
    }
    if !(mu1.is_finite() && mu2.is_finite() && mu1 >= 0.0 && mu2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weights must be non-negative, got mu1 = {mu1}, mu2 = {mu2}"
        )));
    }
    if mu1 == 0.0 && mu2 == 0.0 {
        return Err(Error::InvalidArgument(
            "at least one weight must be positive".into(),
        ));
    }
    Ok(())
}

pub fn power_threshold(mu1: f64, mu2: f64, n1: f64, n2: f64) -> Result<PowerSplit> {
    check_params(mu1, mu2, n1, n2)?;
    if mu1 == 0.0 {
        return Ok(PowerSplit::User2Only);
    }
    let mu = mu2 / mu1;
    if mu <= 1.0 {
        Ok(PowerSplit::User1Only)
    } else if mu > n2 / n1 {
        Ok(PowerSplit::User2Only)
    } else {
        Ok(PowerSplit::Threshold(
            ((n2 - mu * n1) / (mu - 1.0)).max(0.0),
        ))
    }
}

/// Optimal weighted sum rate as a function of total power; only defined in
/// the threshold regime `1 < mu2/mu1 <= n2/n1`.
pub fn composite_rate(mu1: f64, mu2: f64, n1: f64, n2: f64) -> Result<RateFunction> {
    match power_threshold(mu1, mu2, n1, n2)? {
        PowerSplit::Threshold(_) => Ok(RateFunction::BroadcastComposite { mu1, mu2, n1, n2 }),
        _ => Err(Error::InvalidRate(format!(
            "weight ratio {} is outside (1, {}]",
            mu2 / mu1,
            n2 / n1
        ))),
    }
}

pub fn split_power(p: f64, split: PowerSplit) -> Result<(f64, f64)> {
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power must be non-negative, got {p}"
        )));
    }
    Ok(match split {
        PowerSplit::User1Only => (p, 0.0),
        PowerSplit::User2Only => (0.0, p),
        PowerSplit::Threshold(pth) => {
            let p1 = p.min(pth);
            (p1, p - p1)
        }
    })
}

/// Unweighted rates of the two users; user 2 treats user 1's signal as noise.
pub fn user_rates(p1: f64, p2: f64, n1: f64, n2: f64) -> (f64, f64) {
    let r1 = 0.5 * (p1 / n1).ln_1p() / LN2;
    let r2 = 0.5 * (p2 / (p1 + n2)).ln_1p() / LN2;
    (r1, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastProblem {
    pub n1: f64,
    pub n2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub harvest: CumulativeCurve,
    pub minimum: CumulativeCurve,
}

impl BroadcastProblem {
    pub fn split(&self) -> Result<PowerSplit> {
        power_threshold(self.mu1, self.mu2, self.n1, self.n2)
    }

    /// Weighted rate seen by the outer (total power) problem.
    pub fn effective_rate(&self) -> Result<RateFunction> {
        match self.split()? {
            PowerSplit::User1Only => weighted_awgn_rate(self.n1, self.mu1),
            PowerSplit::User2Only => weighted_awgn_rate(self.n2, self.mu2),
            PowerSplit::Threshold(_) => composite_rate(self.mu1, self.mu2, self.n1, self.n2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastSolution {
    pub split: PowerSplit,
    pub string: StringSolution,
    pub user1_schedule: PowerSchedule,
    pub user2_schedule: PowerSchedule,
    /// Unweighted data delivered to each user.
    pub b1: f64,
    pub b2: f64,
    pub weighted_sum: f64,
}

impl BroadcastSolution {
    pub fn total_schedule(&self) -> &PowerSchedule {
        &self.string.schedule
    }
}

pub fn solve_broadcast(problem: &BroadcastProblem) -> Result<BroadcastSolution> {
    let split = problem.split()?;
    let string = taut_string(&problem.harvest, &problem.minimum)?;
    let mut seg1 = Vec::new();
    let mut seg2 = Vec::new();
    let (mut b1, mut b2) = (0.0, 0.0);
    for s in string.schedule.segments() {
        let (p1, p2) = split_power(s.power, split)?;
        let (r1, r2) = user_rates(p1, p2, problem.n1, problem.n2);
        b1 += s.duration() * r1;
        b2 += s.duration() * r2;
        seg1.push(Segment { power: p1, ..*s });
        seg2.push(Segment { power: p2, ..*s });
    }
    Ok(BroadcastSolution {
        split,
        user1_schedule: PowerSchedule::new(seg1)?,
        user2_schedule: PowerSchedule::new(seg2)?,
        b1,
        b2,
        weighted_sum: problem.mu1 * b1 + problem.mu2 * b2,
        string,
    })
}
