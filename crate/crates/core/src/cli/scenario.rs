//! Scenario files and the built-in demos.

use serde::{Deserialize, Serialize};

use crate::broadcast::BroadcastProblem;
use crate::curves::{
    dying_battery_scenario, min_energy_from_battery, BatterySchedule, CumulativeCurve, Packet,
};
use crate::leakage::{Deadline, LeakageProblem};
use crate::rate::RateFunction;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    P2p,
    Broadcast,
    Leakage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarvestSpec {
    Packets(Vec<Packet>),
    /// Harvest-rate samples, uniformly spaced from 0 to the deadline.
    Samples(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub t: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyingSpec {
    pub b: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatterySpec {
    #[default]
    None,
    Constant(f64),
    Schedule(Vec<CapacityPoint>),
    /// Pre-charged batteries that become unusable at known times; their
    /// energy is added to the harvest at `t = 0`.
    Dying(DyingSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadcastParams {
    pub n1: f64,
    pub n2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateFunction>,
    pub deadline: Deadline,
    pub harvest: HarvestSpec,
    #[serde(default)]
    pub battery: BatterySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadcast: Option<BroadcastParams>,
    #[serde(default)]
    pub output: OutputOptions,
}

/// A validated problem ready for a solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    PointToPoint {
        harvest: CumulativeCurve,
        minimum: CumulativeCurve,
        rate: RateFunction,
    },
    Broadcast(BroadcastProblem),
    Leakage(LeakageProblem),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("malformed scenario: {e}")))
    }

    fn rate(&self) -> Result<RateFunction> {
        let Some(rate) = self.rate else {
            return invalid("a rate descriptor is required in this mode");
        };
        rate.validate()?;
        Ok(rate)
    }

    fn curves(
        &self,
        horizon: f64,
        resolution: usize,
    ) -> Result<(CumulativeCurve, CumulativeCurve)> {
        let mut harvest = match &self.harvest {
            HarvestSpec::Packets(p) => CumulativeCurve::from_packet_arrivals(p, horizon)?,
            HarvestSpec::Samples(s) => CumulativeCurve::from_rate_samples(s, horizon)?,
            HarvestSpec::Named(name) if name == "solar" => {
                CumulativeCurve::solar(horizon, resolution)?
            }
            HarvestSpec::Named(name) => return invalid(format!("unknown harvest model {name:?}")),
        };
        let minimum = match &self.battery {
            BatterySpec::None => CumulativeCurve::zero(horizon)?,
            BatterySpec::Constant(b) => {
                min_energy_from_battery(&harvest, &BatterySchedule::constant(*b, horizon)?)?
            }
            BatterySpec::Schedule(points) => {
                let pts = points.iter().map(|p| (p.t, p.b)).collect();
                min_energy_from_battery(&harvest, &BatterySchedule::from_points(pts)?)?
            }
            BatterySpec::Dying(d) => {
                let (bank, dead) = dying_battery_scenario(&d.b, &d.t)?;
                if bank.horizon() > horizon {
                    return invalid(format!(
                        "battery death time {} is after the deadline {horizon}",
                        bank.horizon()
                    ));
                }
                harvest = harvest.add(&bank.extended_to(horizon)?)?;
                dead.extended_to(horizon)?
            }
        };
        Ok((harvest, minimum))
    }

    /// Checks the fields required by the mode and builds the problem.
    pub fn build(&self, resolution: usize) -> Result<Problem> {
        if self.mode != Mode::Leakage && self.epsilon.is_some() {
            return invalid("epsilon is only valid in leakage mode");
        }
        if self.mode != Mode::Broadcast && self.broadcast.is_some() {
            return invalid("broadcast parameters are only valid in broadcast mode");
        }
        match self.mode {
            Mode::P2p | Mode::Broadcast => {
                let Deadline::Finite(horizon) = self.deadline else {
                    return invalid("an unbounded deadline is only valid in leakage mode");
                };
                let (harvest, minimum) = self.curves(horizon, resolution)?;
                if self.mode == Mode::P2p {
                    return Ok(Problem::PointToPoint {
                        harvest,
                        minimum,
                        rate: self.rate()?,
                    });
                }
                let Some(b) = self.broadcast else {
                    return invalid("broadcast mode needs n1, n2, mu1 and mu2");
                };
                let problem = BroadcastProblem {
                    n1: b.n1,
                    n2: b.n2,
                    mu1: b.mu1,
                    mu2: b.mu2,
                    harvest,
                    minimum,
                };
                problem.split()?;
                Ok(Problem::Broadcast(problem))
            }
            Mode::Leakage => {
                let HarvestSpec::Packets(packets) = &self.harvest else {
                    return invalid("leakage mode needs packet arrivals");
                };
                if self.battery != BatterySpec::None {
                    return invalid("leakage mode does not support battery constraints");
                }
                let Some(epsilon) = self.epsilon else {
                    return invalid("leakage mode needs epsilon");
                };
                Ok(Problem::Leakage(LeakageProblem::new(
                    packets.clone(),
                    epsilon,
                    self.deadline,
                    self.rate()?,
                )?))
            }
        }
    }
}

pub const DEMO_NAMES: [&str; 4] = [
    "solar",
    "dying-battery",
    "broadcast",
    "leakage-counterexample",
];

/// Scenario text of a built-in demo.
pub fn demo_scenario(name: &str) -> Option<&'static str> {
    Some(match name {
        "solar" => {
            r#"{
  "mode": "p2p",
  "rate": {"type": "awgn", "noise": 1},
  "deadline": 18,
  "harvest": {"named": "solar"}
}"#
        }
        "dying-battery" => {
            r#"{
  "mode": "p2p",
  "rate": {"type": "awgn", "noise": 1},
  "deadline": 4,
  "harvest": {"packets": []},
  "battery": {"dying": {"b": [2, 2], "t": [1, 4]}}
}"#
        }
        "broadcast" => {
            r#"{
  "mode": "broadcast",
  "deadline": 4,
  "harvest": {"packets": [{"t": 0, "e": 1}, {"t": 2, "e": 3}]},
  "broadcast": {"n1": 1, "n2": 3, "mu1": 1, "mu2": 2}
}"#
        }
        "leakage-counterexample" => {
            r#"{
  "mode": "leakage",
  "rate": {"type": "awgn", "noise": 1},
  "deadline": 4,
  "epsilon": 0.5,
  "harvest": {"packets": [{"t": 0, "e": 4}, {"t": 3, "e": 4}]}
}"#
        }
        _ => return None,
    })
}
