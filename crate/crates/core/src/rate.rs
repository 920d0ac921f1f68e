//! Rate-power functions and the throughput functional.

use serde::{Deserialize, Serialize};

use crate::curves::PowerSchedule;
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

fn unit_weight() -> f64 {
    1.0
}

fn is_unit(w: &f64) -> bool {
    *w == 1.0
}

/// Strictly concave increasing rate function with `r(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RateFunction {
    /// `weight * 1/2 log2(1 + p / noise)`.
    Awgn {
        noise: f64,
        #[serde(default = "unit_weight", skip_serializing_if = "is_unit")]
        weight: f64,
    },
    /// Weighted sum rate of a two-user Gaussian broadcast channel with the
    /// total power split optimally between the users.
    BroadcastComposite {
        mu1: f64,
        mu2: f64,
        n1: f64,
        n2: f64,
    },
}

pub fn awgn_rate(noise: f64) -> Result<RateFunction> {
    weighted_awgn_rate(noise, 1.0)
}

pub fn weighted_awgn_rate(noise: f64, weight: f64) -> Result<RateFunction> {
    let r = RateFunction::Awgn { noise, weight };
    r.validate()?;
    Ok(r)
}

impl RateFunction {
    /// Checks the parameters; needed after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateFunction::Awgn { noise, weight } => {
                if !(noise.is_finite() && noise > 0.0) {
                    return Err(Error::InvalidRate(format!(
                        "noise must be positive, got {noise}"
                    )));
                }
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(Error::InvalidRate(format!(
                        "weight must be positive, got {weight}"
                    )));
                }
                Ok(())
            }
            RateFunction::BroadcastComposite { mu1, mu2, n1, n2 } => {
                crate::broadcast::composite_rate(mu1, mu2, n1, n2).map(|_| ())
            }
        }
    }

    /// Power at which the composite rate starts serving user 2.
    fn knee(mu1: f64, mu2: f64, n1: f64, n2: f64) -> f64 {
        let mu = mu2 / mu1;
        ((n2 - mu * n1) / (mu - 1.0)).max(0.0)
    }

    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            RateFunction::Awgn { noise, weight } => 0.5 * weight * (p / noise).ln_1p() / LN2,
            RateFunction::BroadcastComposite { mu1, mu2, n1, n2 } => {
                let pth = Self::knee(mu1, mu2, n1, n2);
                if p <= pth {
                    0.5 * mu1 * (p / n1).ln_1p() / LN2
                } else {
                    0.5 * mu1 * (pth / n1).ln_1p() / LN2
                        + 0.5 * mu2 * ((p - pth) / (pth + n2)).ln_1p() / LN2
                }
            }
        }
    }

    /// `r'(p)`; the right derivative at the composite knee.
    pub fn deriv(&self, p: f64) -> f64 {
        match *self {
            RateFunction::Awgn { noise, weight } => weight / (2.0 * LN2 * (noise + p)),
            RateFunction::BroadcastComposite { mu1, mu2, n1, n2 } => {
                let pth = Self::knee(mu1, mu2, n1, n2);
                if p < pth {
                    mu1 / (2.0 * LN2 * (n1 + p))
                } else {
                    mu2 / (2.0 * LN2 * (n2 + p))
                }
            }
        }
    }

    /// Numerical shape check on a grid of powers: `r(0) = 0`, increasing and
    /// strictly concave.
    pub fn check_shape(&self, powers: &[f64]) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(Error::InvalidRate("r(0) must be zero".into()));
        }
        for w in powers.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let (ra, rb, rc) = (self.eval(a), self.eval(b), self.eval(c));
            if !(rb > ra && rc > rb) {
                return Err(Error::InvalidRate(format!(
                    "rate is not increasing near p = {b}"
                )));
            }
            let chord = ra + (rc - ra) * (b - a) / (c - a);
            if rb < chord {
                return Err(Error::InvalidRate(format!(
                    "rate is not concave near p = {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Total data delivered by a piecewise-constant schedule.
pub fn throughput(schedule: &PowerSchedule, rate: &RateFunction) -> f64 {
    schedule
        .segments()
        .iter()
        .map(|s| s.duration() * rate.eval(s.power))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Segment;
    use proptest::prelude::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn awgn_values() {
        let r = awgn_rate(1.0).unwrap();
        assert_eq!(r.eval(0.0), 0.0);
        assert!((r.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((r.eval(3.0) - 1.0).abs() < 1e-15);
        assert!(awgn_rate(0.0).is_err());
        assert!(awgn_rate(-2.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for r in [
            awgn_rate(1.0).unwrap(),
            weighted_awgn_rate(0.3, 2.0).unwrap(),
            RateFunction::BroadcastComposite {
                mu1: 1.0,
                mu2: 2.0,
                n1: 1.0,
                n2: 3.0,
            },
        ] {
            for p in log_grid(1e-3, 1e3, 200) {
                let h = 1e-6 * p;
                let fd = (r.eval(p + h) - r.eval(p - h)) / (2.0 * h);
                let d = r.deriv(p);
                assert!((fd - d).abs() <= 1e-6 * d, "{r:?} p = {p}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn shape_check() {
        let grid = log_grid(1e-3, 1e3, 400);
        awgn_rate(2.0).unwrap().check_shape(&grid).unwrap();
        RateFunction::BroadcastComposite {
            mu1: 1.0,
            mu2: 2.0,
            n1: 1.0,
            n2: 3.0,
        }
        .check_shape(&grid)
        .unwrap();
    }

    #[test]
    fn throughput_examples() {
        let r = awgn_rate(1.0).unwrap();
        assert_eq!(throughput(&PowerSchedule::zero(4.0).unwrap(), &r), 0.0);
        let s = PowerSchedule::constant(3.0, 4.0).unwrap();
        assert!((throughput(&s, &r) - 4.0).abs() < 1e-12);
        let e0 = 5.0;
        let s = PowerSchedule::constant(e0 / 4.0, 4.0).unwrap();
        assert_eq!(throughput(&s, &r), 4.0 * r.eval(e0 / 4.0));
    }

    #[test]
    fn serde_descriptor() {
        let r: RateFunction = serde_json::from_str(r#"{"type":"awgn","noise":2}"#).unwrap();
        assert_eq!(
            r,
            RateFunction::Awgn {
                noise: 2.0,
                weight: 1.0
            }
        );
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"type":"awgn","noise":2.0}"#
        );
        let b: RateFunction =
            serde_json::from_str(r#"{"type":"broadcast_composite","mu1":1,"mu2":2,"n1":1,"n2":3}"#)
                .unwrap();
        b.validate().unwrap();
        let bad: RateFunction = serde_json::from_str(r#"{"type":"awgn","noise":-1}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    proptest! {
        // Jensen: spreading the same energy unevenly never beats constant power.
        #[test]
        fn jensen_dominance(
            powers in prop::collection::vec(0.0f64..10.0, 2..8),
            widths in prop::collection::vec(0.1f64..2.0, 8),
        ) {
            let r = awgn_rate(1.0).unwrap();
            let mut t = 0.0;
            let segments: Vec<Segment> = powers
                .iter()
                .zip(&widths)
                .map(|(&p, &w)| {
                    let s = Segment { t_start: t, t_end: t + w, power: p };
                    t += w;
                    s
                })
                .collect();
            let sched = PowerSchedule::new(segments).unwrap();
            let horizon = sched.horizon();
            let constant = horizon * r.eval(sched.total_energy() / horizon);
            let spread = powers.iter().cloned().fold(f64::NAN, f64::max)
                - powers.iter().cloned().fold(f64::NAN, f64::min);
            let d = throughput(&sched, &r);
            if spread > 1e-3 {
                prop_assert!(d < constant);
            } else {
                prop_assert!(d <= constant + 1e-12);
            }
        }
    }
}
