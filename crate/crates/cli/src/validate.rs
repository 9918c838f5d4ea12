//! Closed form against oracle, at one parameter point and optionally on a
//! batch of random draws.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectrum_queue::oracle::{self, GeneratorMatrix};
use spectrum_queue::par::{self, Execution};
use spectrum_queue::{analytic, search, Error, JoiningStrategy, Regime, Result, SystemParams};

use crate::format::sig6;

const FEE_TOLERANCE: f64 = 1e-12;
const FEE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub check: String,
    pub analytic: Option<f64>,
    pub oracle: Option<f64>,
    pub delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub params: SystemParams,
    pub tolerance: f64,
    pub draws: usize,
    pub rows: Vec<DeltaRow>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Deltas {
    stationary: f64,
    q_e: f64,
    q_s: f64,
    p_star: Option<f64>,
}

/// Fee at which the search-based equilibrium meets the search-based social
/// optimum.
pub fn oracle_price(params: &SystemParams) -> Result<Option<f64>> {
    let target = oracle::numeric_social_optimum(params)?;
    if target <= 0.0 || target >= 1.0 {
        return Ok(None);
    }
    let gap = |fee: f64| {
        let shifted = params
            .with_reward((params.reward - fee).max(0.0))
            .expect("reward stays nonnegative");
        oracle::numeric_equilibrium(&shifted).expect("lambda checked") - target
    };
    Ok(search::bisect(
        gap,
        0.0,
        params.reward,
        FEE_TOLERANCE,
        FEE_MAX_ITER,
    ))
}

fn stationary_delta(params: &SystemParams, q: JoiningStrategy) -> Result<f64> {
    let (gen, pi) = oracle::stationary_vector(params, q)?;
    let d = analytic::stationary(params, q);
    let mut worst = (pi[0] - d.p00).abs();
    for n in 0..=gen.truncation_level() {
        worst = worst.max((pi[GeneratorMatrix::level_index(n)] - d.level_prob(n)).abs());
    }
    Ok(worst)
}

fn point_rows(params: &SystemParams) -> Result<(Vec<DeltaRow>, Deltas)> {
    let e = analytic::individual_equilibrium(params)?;
    let s = analytic::social_optimum(params)?;
    let mut rows = Vec::new();
    let mut deltas = Deltas::default();

    for (label, strategy) in [
        ("q_e", e.strategy()),
        ("q_s", s.strategy()),
        ("1", JoiningStrategy::ALWAYS_JOIN),
    ] {
        let delta = stationary_delta(params, strategy)?;
        deltas.stationary = deltas.stationary.max(delta);
        rows.push(DeltaRow {
            check: format!("stationary states (q = {label})"),
            analytic: None,
            oracle: None,
            delta,
            pass: false,
        });
    }

    let qe = oracle::numeric_equilibrium(params)?;
    deltas.q_e = (qe - e.q_star).abs();
    rows.push(DeltaRow {
        check: "q_e".into(),
        analytic: Some(e.q_star),
        oracle: Some(qe),
        delta: deltas.q_e,
        pass: false,
    });

    let qs = oracle::numeric_social_optimum(params)?;
    deltas.q_s = (qs - s.q_star).abs();
    rows.push(DeltaRow {
        check: "q_s".into(),
        analytic: Some(s.q_star),
        oracle: Some(qs),
        delta: deltas.q_s,
        pass: false,
    });

    let closed = match analytic::optimal_price(params) {
        Ok(fee) => Some(fee),
        Err(Error::NoInteriorOptimum { .. }) => None,
        Err(e) => return Err(e),
    };
    let numeric = oracle_price(params)?;
    let fee_delta = match (closed, numeric) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ if s.regime != Regime::Mixed => 0.0,
        _ => f64::INFINITY,
    };
    if closed.is_some() || numeric.is_some() {
        deltas.p_star = Some(fee_delta);
        rows.push(DeltaRow {
            check: "p_star".into(),
            analytic: closed,
            oracle: numeric,
            delta: fee_delta,
            pass: false,
        });
    }
    Ok((rows, deltas))
}

/// Random parameter draw: rates in `[0.1, 10]`, cost and reward in `[0.1, 20]`.
pub fn random_params(rng: &mut impl Rng) -> SystemParams {
    SystemParams::new(
        rng.random_range(0.1..=10.0),
        rng.random_range(0.1..=10.0),
        rng.random_range(0.1..=10.0),
        rng.random_range(0.1..=10.0),
        rng.random_range(0.1..=20.0),
        rng.random_range(0.1..=20.0),
    )
    .expect("draw within bounds")
}

pub fn run(
    params: &SystemParams,
    tolerance: f64,
    draws: usize,
    seed: u64,
) -> Result<ValidationReport> {
    run_with(params, tolerance, draws, seed, Execution::default())
}

pub fn run_with(
    params: &SystemParams,
    tolerance: f64,
    draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<ValidationReport> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be finite and > 0, got {tolerance}"
        )));
    }
    let (mut rows, _) = point_rows(params)?;

    if draws > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample: Vec<SystemParams> = (0..draws).map(|_| random_params(&mut rng)).collect();
        let batch = par::map_slice(&sample, exec, |p| point_rows(p).map(|(_, d)| d))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let worst =
            |get: fn(&Deltas) -> Option<f64>| batch.iter().filter_map(get).fold(0.0, f64::max);
        for (label, value) in [
            ("stationary states", worst(|d| Some(d.stationary))),
            ("q_e", worst(|d| Some(d.q_e))),
            ("q_s", worst(|d| Some(d.q_s))),
            ("p_star", worst(|d| d.p_star)),
        ] {
            rows.push(DeltaRow {
                check: format!("{draws} draws: max {label}"),
                analytic: None,
                oracle: None,
                delta: value,
                pass: false,
            });
        }
    }

    for row in &mut rows {
        row.pass = row.delta <= tolerance;
    }
    let passed = rows.iter().all(|r| r.pass);
    Ok(ValidationReport {
        params: *params,
        tolerance,
        draws,
        rows,
        passed,
    })
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "-".into());
        writeln!(f, "tolerance {}", sig6(self.tolerance))?;
        writeln!(
            f,
            "{:<36} {:>12} {:>12} {:>12}  result",
            "check", "analytic", "oracle", "delta"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<36} {:>12} {:>12} {:>12}  {}",
                r.check,
                opt(r.analytic),
                opt(r.oracle),
                sig6(r.delta),
                if r.pass { "pass" } else { "FAIL" }
            )?;
        }
        writeln!(f, "{}", if self.passed { "PASS" } else { "FAIL" })
    }
}
