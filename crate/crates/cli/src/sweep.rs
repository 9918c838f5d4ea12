//! Reward sweeps of the equilibrium and socially optimal strategies.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use spectrum_queue::par::{self, Execution};
use spectrum_queue::{analytic, Error, Regime, Result, SystemParams};

use crate::format::sig6;

pub const CSV_HEADER: &str = "reward,q_e,q_s,S_qe,S_qs,p_star";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Rates and cost; the reward field is replaced at each sweep point.
    pub base: SystemParams,
    pub reward_min: f64,
    pub reward_max: f64,
    pub steps: usize,
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub reward: f64,
    pub q_e: f64,
    pub q_s: f64,
    #[serde(rename = "S_qe")]
    pub s_qe: f64,
    #[serde(rename = "S_qs")]
    pub s_qs: f64,
    pub p_star: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::Domain { field, reason });
        if !(self.reward_min.is_finite() && self.reward_min > 0.0) {
            return bad(
                "reward_min",
                format!("must be finite and > 0, got {}", self.reward_min),
            );
        }
        if !(self.reward_max.is_finite() && self.reward_max > self.reward_min) {
            return bad(
                "reward_max",
                format!(
                    "must be finite and > reward_min ({}), got {}",
                    self.reward_min, self.reward_max
                ),
            );
        }
        if self.steps < 2 {
            return bad("steps", format!("must be >= 2, got {}", self.steps));
        }
        if self.base.lambda <= 0.0 {
            return bad("lambda", "must be > 0 for a sweep".into());
        }
        Ok(())
    }

    /// Sweep abscissae in ascending order, with both endpoints exact.
    pub fn rewards(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == 0 {
                    return self.reward_min;
                }
                if i + 1 == self.steps {
                    return self.reward_max;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.reward_min + t * (self.reward_max - self.reward_min),
                    Scale::Log => {
                        (self.reward_min.ln() + t * (self.reward_max / self.reward_min).ln()).exp()
                    }
                }
            })
            .collect()
    }
}

pub fn sweep_point(base: &SystemParams, reward: f64) -> Result<SweepRow> {
    let params = base.with_reward(reward)?;
    let e = analytic::individual_equilibrium(&params)?;
    let s = analytic::social_optimum(&params)?;
    let p_star = match s.regime {
        Regime::Mixed => Some(analytic::optimal_price(&params)?),
        _ => None,
    };
    Ok(SweepRow {
        reward,
        q_e: e.q_star,
        q_s: s.q_star,
        s_qe: analytic::social_welfare(&params, e.strategy()),
        s_qs: analytic::social_welfare(&params, s.strategy()),
        p_star,
    })
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep_with(spec, Execution::default())
}

pub fn sweep_with(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let rewards = spec.rewards();
    par::map_slice(&rewards, exec, |&r| sweep_point(&spec.base, r))
        .into_iter()
        .collect()
}

pub fn csv_line(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        sig6(row.reward),
        sig6(row.q_e),
        sig6(row.q_s),
        sig6(row.s_qe),
        sig6(row.s_qs),
        row.p_star.map(sig6).unwrap_or_default()
    )
}

pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(steps: usize, scale: Scale) -> SweepSpec {
        SweepSpec {
            base: SystemParams::new(7.0, 0.5, 3.0, 2.0, 2.0, 1.0).unwrap(),
            reward_min: 0.1,
            reward_max: 70.0,
            steps,
            scale,
        }
    }

    #[test]
    fn grids_are_ascending_with_exact_ends() {
        for scale in [Scale::Linear, Scale::Log] {
            let r = spec(200, scale).rewards();
            assert_eq!(r.len(), 200);
            assert_eq!(r[0], 0.1);
            assert_eq!(r[199], 70.0);
            assert!(r.windows(2).all(|w| w[0] < w[1]));
        }
        let log = spec(3, Scale::Log).rewards();
        assert!((log[1] - (0.1f64 * 70.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(spec(1, Scale::Linear).validate().is_err());
        let mut s = spec(10, Scale::Linear);
        s.reward_max = 0.05;
        assert!(s.validate().is_err());
        s.reward_max = f64::NAN;
        assert!(s.validate().is_err());
        let mut s = spec(10, Scale::Linear);
        s.reward_min = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn csv_has_empty_fee_outside_mixed_regime() {
        let rows = sweep(&spec(200, Scale::Linear)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first = lines.next().unwrap();
        assert!(first.ends_with(','), "{first}");
        assert_eq!(first.split(',').count(), 6);
        let mixed = csv_line(&sweep_point(&spec(2, Scale::Linear).base, 3.0).unwrap());
        assert_eq!(mixed.split(',').nth(5), Some("1.58579"));
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let s = spec(50, Scale::Log);
        assert_eq!(
            sweep_with(&s, Execution::Sequential).unwrap(),
            sweep_with(&s, Execution::Parallel).unwrap()
        );
    }
}
