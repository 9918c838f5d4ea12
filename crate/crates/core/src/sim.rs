//! Discrete-event simulation of the SU queue with PU dismissal.
//!
//! The process is a four-transition CTMC, so a run draws one exponential
//! holding time from the total outgoing rate of the current state and then
//! picks the transition in proportion to its rate.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JoiningStrategy, SystemParams};
use crate::par::{self, Execution};

pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;
/// Sojourn statistics are stratified for observed levels `0..SOJOURN_LEVELS`.
pub const SOJOURN_LEVELS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop at simulated time `t`.
    Horizon(f64),
    /// Stop after this many events (arrivals that balk included).
    Events(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub strategy: JoiningStrategy,
    pub stop: StopRule,
    pub seed: u64,
    /// Leading share of the run (time or events) excluded from statistics.
    pub warmup_fraction: f64,
}

impl SimConfig {
    pub fn new(params: SystemParams, strategy: JoiningStrategy, stop: StopRule, seed: u64) -> Self {
        SimConfig {
            params,
            strategy,
            stop,
            seed,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
        }
    }

    pub fn with_warmup(mut self, warmup_fraction: f64) -> Self {
        self.warmup_fraction = warmup_fraction;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        crate::model::validate(self.params).map_err(|e| Error::Config(e.to_string()))?;
        JoiningStrategy::new(self.strategy.q()).map_err(|e| Error::Config(e.to_string()))?;
        match self.stop {
            StopRule::Horizon(h) if !(h.is_finite() && h > 0.0) => {
                return Err(Error::Config(format!(
                    "horizon must be finite and > 0, got {h}"
                )))
            }
            StopRule::Events(0) => return Err(Error::Config("max_events must be > 0".into())),
            _ => {}
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config(format!(
                "warmup_fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    SuArrival,
    SuService,
    PuArrival,
    PuDeparture,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SuArrival => "SuArrival",
            EventKind::SuService => "SuService",
            EventKind::PuArrival => "PuArrival",
            EventKind::PuDeparture => "PuDeparture",
        }
    }
}

/// State after one transition. Displays as `time,kind,N,I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub queue_length_after: usize,
    /// 1 while the base station serves SUs, 0 during PU service.
    pub server_state_after: u8,
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.time,
            self.kind.as_str(),
            self.queue_length_after,
            self.server_state_after
        )
    }
}

/// Sojourn times of SUs that joined behind a given number of others.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelSojourn {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn summary(&self) -> LevelSojourn {
        LevelSojourn {
            count: self.count,
            mean: self.mean,
            variance: if self.count > 1 {
                self.m2 / (self.count - 1) as f64
            } else {
                0.0
            },
        }
    }
}

/// Statistics of one run, measured after the warmup.
///
/// Counts refer to SUs that arrived after the warmup. Per-SU averages
/// (`served_fraction`, `mean_sojourn_served`, `mean_profit_per_joiner`) are
/// taken over joiners whose fate is known at the end of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub empirical_p00: f64,
    /// Time-average probability of `(n, 1)`, indexed by `n`.
    pub level_histogram: Vec<f64>,
    pub served_fraction: f64,
    pub mean_sojourn_served: f64,
    pub mean_profit_per_joiner: f64,
    pub welfare_rate: f64,
    /// Time-average number of SUs in the system.
    pub mean_queue_length: f64,
    /// Service completions per unit time.
    pub throughput: f64,
    pub joined_count: u64,
    pub served_count: u64,
    pub dismissed_count: u64,
    /// Voluntary and forced balks.
    pub balked_count: u64,
    /// Arrivals turned away because a PU held the channel.
    pub forced_balk_count: u64,
    pub in_system_at_end: u64,
    pub events: u64,
    /// Simulated time at which the run stopped.
    pub horizon: f64,
    /// Length of the measurement window.
    pub observed_time: f64,
    /// Sojourn statistics stratified by the number of SUs found on joining.
    pub sojourn_by_level: Vec<LevelSojourn>,
    /// Number of SUs wiped out by each PU arrival, as a histogram. One sample
    /// per busy period of the SU server, so the samples are independent.
    pub dismissal_levels: Vec<u64>,
}

struct Customer {
    arrival: f64,
    level: usize,
    counted: bool,
}

#[derive(Default)]
struct Tally {
    joined: u64,
    served: u64,
    dismissed: u64,
    balked: u64,
    forced: u64,
    completions: u64,
    sojourn_served: Welford,
    profit: Welford,
    by_level: [Welford; SOJOURN_LEVELS],
    dismissal_levels: Vec<u64>,
}

impl Tally {
    fn resolve(&mut self, c: &Customer, now: f64, served: bool, params: &SystemParams) {
        if !c.counted {
            return;
        }
        let sojourn = now - c.arrival;
        let mut profit = -params.cost * sojourn;
        if served {
            self.served += 1;
            self.sojourn_served.push(sojourn);
            profit += params.reward;
        } else {
            self.dismissed += 1;
        }
        self.profit.push(profit);
        if let Some(w) = self.by_level.get_mut(c.level) {
            w.push(sojourn);
        }
    }
}

#[derive(Default)]
struct Occupancy {
    pu_time: f64,
    level_time: Vec<f64>,
    queue_area: f64,
}

impl Occupancy {
    fn add(&mut self, open: bool, level: usize, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        if open {
            if self.level_time.len() <= level {
                self.level_time.resize(level + 1, 0.0);
            }
            self.level_time[level] += dt;
            self.queue_area += level as f64 * dt;
        } else {
            self.pu_time += dt;
        }
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimStats> {
    simulate_traced(config, |_| {})
}

/// Runs the simulation and hands every transition to `trace`.
pub fn simulate_traced<F>(config: &SimConfig, mut trace: F) -> Result<SimStats>
where
    F: FnMut(&EventRecord),
{
    config.validate()?;
    let params = config.params;
    let q = config.strategy.q();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (horizon, max_events) = match config.stop {
        StopRule::Horizon(h) => (h, u64::MAX),
        StopRule::Events(m) => (f64::INFINITY, m),
    };
    let warmup_events = match config.stop {
        StopRule::Events(m) => (config.warmup_fraction * m as f64).floor() as u64,
        StopRule::Horizon(_) => 0,
    };
    // Start of the measurement window, once known.
    let mut window_start = match config.stop {
        StopRule::Horizon(h) => Some(config.warmup_fraction * h),
        StopRule::Events(_) if warmup_events == 0 => Some(0.0),
        StopRule::Events(_) => None,
    };

    let mut t = 0.0_f64;
    let mut open = true;
    let mut queue: VecDeque<Customer> = VecDeque::new();
    let mut tally = Tally::default();
    let mut occ = Occupancy::default();
    let mut events = 0u64;

    loop {
        let n = queue.len();
        let service = if open && n > 0 { params.mu } else { 0.0 };
        let pu = if open { params.xi } else { params.eta };
        let total = params.lambda + pu + service;
        let e: f64 = rng.sample(Exp1);
        let next = t + e / total;
        let end = next.min(horizon);
        if let Some(w) = window_start {
            occ.add(open, n, end - t.max(w));
        }
        if next >= horizon {
            t = horizon;
            break;
        }
        t = next;
        let in_window = window_start.is_some_and(|w| t >= w);

        let pick = rng.random::<f64>() * total;
        let kind = if pick < params.lambda {
            EventKind::SuArrival
        } else if pick < params.lambda + pu {
            if open {
                EventKind::PuArrival
            } else {
                EventKind::PuDeparture
            }
        } else {
            EventKind::SuService
        };

        match kind {
            EventKind::SuArrival => {
                if !open {
                    if in_window {
                        tally.balked += 1;
                        tally.forced += 1;
                    }
                } else if rng.random::<f64>() < q {
                    if in_window {
                        tally.joined += 1;
                    }
                    queue.push_back(Customer {
                        arrival: t,
                        level: n,
                        counted: in_window,
                    });
                } else if in_window {
                    tally.balked += 1;
                }
            }
            EventKind::SuService => {
                let c = queue
                    .pop_front()
                    .expect("service only fires with a nonempty queue");
                tally.resolve(&c, t, true, &params);
                if in_window {
                    tally.completions += 1;
                }
            }
            EventKind::PuArrival => {
                if in_window {
                    if tally.dismissal_levels.len() <= n {
                        tally.dismissal_levels.resize(n + 1, 0);
                    }
                    tally.dismissal_levels[n] += 1;
                }
                for c in queue.drain(..) {
                    tally.resolve(&c, t, false, &params);
                }
                open = false;
            }
            EventKind::PuDeparture => open = true,
        }

        events += 1;
        trace(&EventRecord {
            time: t,
            kind,
            queue_length_after: queue.len(),
            server_state_after: u8::from(open),
        });
        if window_start.is_none() && events == warmup_events {
            window_start = Some(t);
        }
        if events >= max_events {
            break;
        }
    }

    let start = window_start.unwrap_or(t);
    let observed_time = (t - start).max(0.0);
    let per_time = |v: f64| {
        if observed_time > 0.0 {
            v / observed_time
        } else {
            0.0
        }
    };
    let throughput = per_time(tally.completions as f64);
    let mean_queue_length = per_time(occ.queue_area);
    let resolved = tally.served + tally.dismissed;

    Ok(SimStats {
        empirical_p00: per_time(occ.pu_time),
        level_histogram: occ.level_time.iter().map(|&v| per_time(v)).collect(),
        served_fraction: if resolved > 0 {
            tally.served as f64 / resolved as f64
        } else {
            0.0
        },
        mean_sojourn_served: tally.sojourn_served.mean,
        mean_profit_per_joiner: tally.profit.mean,
        welfare_rate: throughput * params.reward - params.cost * mean_queue_length,
        mean_queue_length,
        throughput,
        joined_count: tally.joined,
        served_count: tally.served,
        dismissed_count: tally.dismissed,
        balked_count: tally.balked,
        forced_balk_count: tally.forced,
        in_system_at_end: queue.iter().filter(|c| c.counted).count() as u64,
        events,
        horizon: t,
        observed_time,
        sojourn_by_level: tally.by_level.iter().map(Welford::summary).collect(),
        dismissal_levels: tally.dismissal_levels,
    })
}

/// Mean and standard error of a statistic across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// `(mean - target) / std_error`; zero when both the spread and the
    /// deviation vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = self.mean - target;
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev == 0.0 {
            0.0
        } else {
            dev.signum() * f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, std_errors: f64) -> bool {
        self.z_score(target).abs() <= std_errors
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatedStats {
    pub seeds: Vec<u64>,
    pub empirical_p00: Estimate,
    pub level_histogram: Vec<Estimate>,
    pub served_fraction: Estimate,
    pub mean_sojourn_served: Estimate,
    pub mean_profit_per_joiner: Estimate,
    pub welfare_rate: Estimate,
    pub mean_queue_length: Estimate,
    pub throughput: Estimate,
    pub runs: Vec<SimStats>,
}

/// Seed of replication `index`: `base + index` passed through SplitMix64.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate(config: &SimConfig, replications: usize) -> Result<ReplicatedStats> {
    replicate_with(config, replications, Execution::default())
}

pub fn replicate_with(
    config: &SimConfig,
    replications: usize,
    exec: Execution,
) -> Result<ReplicatedStats> {
    if replications < 2 {
        return Err(Error::Config(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    config.validate()?;
    let seeds: Vec<u64> = (0..replications as u64)
        .map(|i| replication_seed(config.seed, i))
        .collect();
    let runs = par::map_slice(&seeds, exec, |&seed| simulate(&config.with_seed(seed)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let field = |get: fn(&SimStats) -> f64| {
        Estimate::from_samples(&runs.iter().map(get).collect::<Vec<_>>())
    };
    let levels = runs
        .iter()
        .map(|r| r.level_histogram.len())
        .max()
        .unwrap_or(0);
    let level_histogram = (0..levels)
        .map(|n| {
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| r.level_histogram.get(n).copied().unwrap_or(0.0))
                .collect();
            Estimate::from_samples(&xs)
        })
        .collect();

    Ok(ReplicatedStats {
        empirical_p00: field(|r| r.empirical_p00),
        level_histogram,
        served_fraction: field(|r| r.served_fraction),
        mean_sojourn_served: field(|r| r.mean_sojourn_served),
        mean_profit_per_joiner: field(|r| r.mean_profit_per_joiner),
        welfare_rate: field(|r| r.welfare_rate),
        mean_queue_length: field(|r| r.mean_queue_length),
        throughput: field(|r| r.throughput),
        seeds,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(q: f64, stop: StopRule) -> SimConfig {
        let params = SystemParams::new(7.0, 0.5, 3.0, 2.0, 2.0, 3.0).unwrap();
        SimConfig::new(params, JoiningStrategy::new(q).unwrap(), stop, 42)
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(simulate(&config(0.5, StopRule::Horizon(0.0))).is_err());
        assert!(simulate(&config(0.5, StopRule::Horizon(f64::INFINITY))).is_err());
        assert!(simulate(&config(0.5, StopRule::Events(0))).is_err());
        assert!(simulate(&config(0.5, StopRule::Events(10)).with_warmup(1.0)).is_err());
        assert!(replicate(&config(0.5, StopRule::Events(10)), 1).is_err());
    }

    #[test]
    fn nobody_joins_at_zero() {
        let s = simulate(&config(0.0, StopRule::Horizon(500.0))).unwrap();
        assert_eq!(s.joined_count, 0);
        assert_eq!(s.served_count, 0);
        assert_eq!(s.welfare_rate, 0.0);
        assert!(s.balked_count > 0);
        assert_eq!(s.horizon, 500.0);
        assert!((s.observed_time - 450.0).abs() < 1e-9);
    }

    #[test]
    fn event_budget_is_exact() {
        let s = simulate(&config(0.5, StopRule::Events(12_345))).unwrap();
        assert_eq!(s.events, 12_345);
    }

    #[test]
    fn trace_is_time_ordered_and_consistent() {
        let mut records = Vec::new();
        let s =
            simulate_traced(&config(0.7, StopRule::Events(5000)), |r| records.push(*r)).unwrap();
        assert_eq!(records.len() as u64, s.events);
        assert!(records.windows(2).all(|w| w[0].time <= w[1].time));
        for w in records.windows(2) {
            let (a, b) = (w[0], w[1]);
            match b.kind {
                EventKind::PuArrival => {
                    assert_eq!((b.queue_length_after, b.server_state_after), (0, 0))
                }
                EventKind::PuDeparture => {
                    assert_eq!(a.server_state_after, 0);
                    assert_eq!(b.server_state_after, 1);
                }
                EventKind::SuService => assert_eq!(b.queue_length_after + 1, a.queue_length_after),
                EventKind::SuArrival => assert!(b.queue_length_after >= a.queue_length_after),
            }
        }
        let line = records[0].to_string();
        assert_eq!(line.split(',').count(), 4);
    }

    #[test]
    fn occupancy_sums_to_one() {
        let s = simulate(&config(1.0, StopRule::Events(50_000))).unwrap();
        let total = s.empirical_p00 + s.level_histogram.iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn replication_seeds_are_distinct_and_deterministic() {
        let r = replicate(&config(0.5, StopRule::Events(1000)), 2).unwrap();
        assert_ne!(r.seeds[0], r.seeds[1]);
        assert_eq!(
            r.seeds,
            vec![replication_seed(42, 0), replication_seed(42, 1)]
        );
        assert_ne!(r.runs[0], r.runs[1]);
        let again = replicate_with(
            &config(0.5, StopRule::Events(1000)),
            2,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-15);
        assert!(e.within(2.5, 0.0));
        let flat = Estimate::from_samples(&[1.0, 1.0]);
        assert_eq!(flat.z_score(1.0), 0.0);
        assert_eq!(flat.z_score(0.0), f64::INFINITY);
    }
}
