//! Simulation runs reported next to the analytic predictions.

use std::fmt;

use serde::Serialize;
use spectrum_queue::sim::{self, Estimate, ReplicatedStats, SimConfig, SimStats};
use spectrum_queue::{analytic, Result};

use crate::format::sig6;

/// Analytic values of the simulated statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Predictions {
    pub empirical_p00: f64,
    pub served_fraction: f64,
    pub mean_profit_per_joiner: f64,
    pub welfare_rate: f64,
    pub mean_queue_length: f64,
    pub throughput: f64,
}

impl Predictions {
    pub fn for_config(config: &SimConfig) -> Predictions {
        let p = &config.params;
        let d = analytic::stationary(p, config.strategy);
        Predictions {
            empirical_p00: d.p00,
            served_fraction: analytic::aggregate_service_probability(p, config.strategy),
            mean_profit_per_joiner: analytic::profit_join(p, config.strategy),
            welfare_rate: analytic::social_welfare(p, config.strategy),
            mean_queue_length: d.mean_queue_length(),
            throughput: p.mu * d.su_busy_probability(),
        }
    }

    fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("empirical_p00", self.empirical_p00),
            ("served_fraction", self.served_fraction),
            ("mean_profit_per_joiner", self.mean_profit_per_joiner),
            ("welfare_rate", self.welfare_rate),
            ("mean_queue_length", self.mean_queue_length),
            ("throughput", self.throughput),
        ]
    }
}

/// One statistic: simulated value, analytic value, and the z-score of the
/// difference when replications provide a standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub statistic: &'static str,
    pub simulated: f64,
    pub std_error: Option<f64>,
    pub analytic: f64,
    pub delta: f64,
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Single(SimStats),
    Replicated(ReplicatedStats),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub replications: usize,
    pub predictions: Predictions,
    pub comparisons: Vec<Comparison>,
    pub stats: Outcome,
}

fn single_estimates(s: &SimStats) -> [f64; 6] {
    [
        s.empirical_p00,
        s.served_fraction,
        s.mean_profit_per_joiner,
        s.welfare_rate,
        s.mean_queue_length,
        s.throughput,
    ]
}

fn replicated_estimates(r: &ReplicatedStats) -> [Estimate; 6] {
    [
        r.empirical_p00,
        r.served_fraction,
        r.mean_profit_per_joiner,
        r.welfare_rate,
        r.mean_queue_length,
        r.throughput,
    ]
}

/// Runs one simulation, or `replications` seeded copies when more than one
/// is requested.
pub fn run(config: &SimConfig, replications: usize) -> Result<SimulationReport> {
    let predictions = Predictions::for_config(config);
    let (comparisons, stats) = if replications <= 1 {
        let s = sim::simulate(config)?;
        let comparisons = predictions
            .fields()
            .iter()
            .zip(single_estimates(&s))
            .map(|(&(name, target), value)| Comparison {
                statistic: name,
                simulated: value,
                std_error: None,
                analytic: target,
                delta: value - target,
                z_score: None,
            })
            .collect();
        (comparisons, Outcome::Single(s))
    } else {
        let r = sim::replicate(config, replications)?;
        let comparisons = predictions
            .fields()
            .iter()
            .zip(replicated_estimates(&r))
            .map(|(&(name, target), est)| Comparison {
                statistic: name,
                simulated: est.mean,
                std_error: Some(est.std_error),
                analytic: target,
                delta: est.mean - target,
                z_score: Some(est.z_score(target)),
            })
            .collect();
        (comparisons, Outcome::Replicated(r))
    };
    Ok(SimulationReport {
        config: *config,
        replications: replications.max(1),
        predictions,
        comparisons,
        stats,
    })
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "q={} seed={} replications={}",
            sig6(self.config.strategy.q()),
            self.config.seed,
            self.replications
        )?;
        let counts = match &self.stats {
            Outcome::Single(s) => Some(s),
            Outcome::Replicated(r) => r.runs.first(),
        };
        if let Some(s) = counts {
            writeln!(
                f,
                "first run: events={} joined={} served={} dismissed={} balked={} in_system={}",
                s.events,
                s.joined_count,
                s.served_count,
                s.dismissed_count,
                s.balked_count,
                s.in_system_at_end
            )?;
        }
        writeln!(
            f,
            "{:<24} {:>12} {:>12} {:>12} {:>12} {:>9}",
            "statistic", "simulated", "std_error", "analytic", "delta", "z"
        )?;
        for c in &self.comparisons {
            writeln!(
                f,
                "{:<24} {:>12} {:>12} {:>12} {:>12} {:>9}",
                c.statistic,
                sig6(c.simulated),
                c.std_error.map(sig6).unwrap_or_else(|| "-".into()),
                sig6(c.analytic),
                sig6(c.delta),
                c.z_score
                    .map(|z| format!("{z:.2}"))
                    .unwrap_or_else(|| "-".into())
            )?;
        }
        Ok(())
    }
}
