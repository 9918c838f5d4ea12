//! Independent numerical route to the quantities in [`crate::analytic`].
//!
//! The chain is truncated at a finite SU level and solved as a plain CTMC
//! with the GTH state-reduction algorithm; equilibria are found by searching
//! instead of through the closed-form expressions.

use std::collections::{BTreeMap, BTreeSet};

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{JoiningStrategy, SystemParams};
use crate::search;

pub const MIN_TRUNCATION: u32 = 50;
/// Tail mass neglected by [`truncation_for_root`].
pub const TAIL_MASS: f64 = 1e-12;

const ROOT_TOLERANCE: f64 = 1e-9;
const ROOT_MAX_ITER: usize = 200;
const GRID_STEPS: usize = 1000;
const GOLDEN_TOLERANCE: f64 = 1e-12;
const GOLDEN_MAX_ITER: usize = 200;

/// Rate matrix of the chain truncated at SU level `truncation_level`.
///
/// State 0 is `(0, 0)` and state `n + 1` is `(n, 1)`. Only off-diagonal rates
/// are stored; the diagonal is minus the row's outflow. Arrivals at the last
/// level are suppressed so that the matrix stays conservative.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    truncation_level: u32,
    rows: Vec<Vec<(usize, f64)>>,
}

impl GeneratorMatrix {
    pub fn truncation_level(&self) -> u32 {
        self.truncation_level
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Index of state `(level, 1)`.
    pub fn level_index(level: u32) -> usize {
        level as usize + 1
    }

    pub fn off_diagonal(&self, row: usize) -> &[(usize, f64)] {
        &self.rows[row]
    }

    pub fn outflow(&self, row: usize) -> f64 {
        self.rows[row].iter().map(|&(_, r)| r).sum()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == col {
            -self.outflow(row)
        } else {
            self.rows[row]
                .iter()
                .filter(|&&(j, _)| j == col)
                .map(|&(_, r)| r)
                .sum()
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// `max_j |(pi Q)_j|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut out = 0.0;
            for &(j, r) in row {
                flow[j] += pi[i] * r;
                out += r;
            }
            flow[i] -= pi[i] * out;
        }
        flow.into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Smallest truncation level whose neglected geometric tail is below
/// [`TAIL_MASS`], and never below [`MIN_TRUNCATION`].
pub fn truncation_for_root(x: f64) -> u32 {
    if x <= 0.0 {
        return MIN_TRUNCATION;
    }
    let levels = (TAIL_MASS.ln() / x.ln()).ceil();
    if levels.is_finite() && levels < f64::from(u32::MAX - 2) {
        (levels as u32).max(MIN_TRUNCATION)
    } else {
        u32::MAX - 2
    }
}

pub fn build_generator(
    params: &SystemParams,
    q: JoiningStrategy,
    truncation: u32,
) -> Result<GeneratorMatrix> {
    if truncation < MIN_TRUNCATION {
        return Err(Error::domain(
            "truncation",
            format!("must be >= {MIN_TRUNCATION}, got {truncation}"),
        ));
    }
    let arrival = q.effective_rate(params);
    let mut rows = Vec::with_capacity(truncation as usize + 2);
    rows.push(vec![(GeneratorMatrix::level_index(0), params.eta)]);
    for level in 0..=truncation {
        let mut row = vec![(0, params.xi)];
        if level > 0 {
            row.push((GeneratorMatrix::level_index(level - 1), params.mu));
        }
        if level < truncation && arrival > 0.0 {
            row.push((GeneratorMatrix::level_index(level + 1), arrival));
        }
        rows.push(row);
    }
    Ok(GeneratorMatrix {
        truncation_level: truncation,
        rows,
    })
}

/// Stationary vector of an irreducible generator by GTH state reduction.
///
/// The reduction only adds nonnegative quantities, so it does not suffer the
/// cancellation of Gaussian elimination on `pi Q = 0`.
pub fn solve_stationary(gen: &GeneratorMatrix) -> Result<Vec<f64>> {
    let n = gen.dim();
    let mut rates: Vec<BTreeMap<usize, f64>> = gen
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut m = BTreeMap::new();
            for &(j, r) in row {
                if j != i && r != 0.0 {
                    *m.entry(j).or_insert(0.0) += r;
                }
            }
            m
        })
        .collect();
    let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rates.iter().enumerate() {
        for &j in row.keys() {
            incoming[j].insert(i);
        }
    }

    let mut pivots = vec![0.0; n];
    for k in (1..n).rev() {
        let lower: Vec<(usize, f64)> = rates[k].range(..k).map(|(&j, &r)| (j, r)).collect();
        let s: f64 = lower.iter().map(|&(_, r)| r).sum();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::Solve(format!(
                "state {k} has no path to lower-indexed states; chain is reducible"
            )));
        }
        pivots[k] = s;
        let feeders: Vec<usize> = incoming[k].range(..k).copied().collect();
        for i in feeders {
            let a_ik = rates[i][&k];
            for &(j, a_kj) in &lower {
                if j != i {
                    *rates[i].entry(j).or_insert(0.0) += a_ik * a_kj / s;
                    incoming[j].insert(i);
                }
            }
        }
    }

    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        let inflow: f64 = incoming[k].range(..k).map(|&i| pi[i] * rates[i][&k]).sum();
        pi[k] = inflow / pivots[k];
    }
    let total: f64 = pi.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Solve(format!(
            "degenerate normalisation constant {total}"
        )));
    }
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// Builds the generator with the tail-mass truncation rule and solves it.
pub fn stationary_vector(
    params: &SystemParams,
    q: JoiningStrategy,
) -> Result<(GeneratorMatrix, Vec<f64>)> {
    let x = analytic::geometric_root(params, q);
    let gen = build_generator(params, q, truncation_for_root(x))?;
    let pi = solve_stationary(&gen)?;
    Ok((gen, pi))
}

fn require_arrivals(params: &SystemParams) -> Result<()> {
    if params.lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("lambda", "must be > 0 for the joining game"))
    }
}

/// Equilibrium by bisection on `q -> Gamma(1, q)`, returning a boundary
/// strategy when the profit does not change sign on `[0, 1]`.
pub fn numeric_equilibrium(params: &SystemParams) -> Result<f64> {
    require_arrivals(params)?;
    let profit =
        |q: f64| analytic::profit_join(params, JoiningStrategy::new(q).expect("q within [0, 1]"));
    if profit(0.0) <= 0.0 {
        return Ok(0.0);
    }
    if profit(1.0) >= 0.0 {
        return Ok(1.0);
    }
    Ok(
        search::bisect(profit, 0.0, 1.0, ROOT_TOLERANCE, ROOT_MAX_ITER)
            .expect("sign change checked above"),
    )
}

fn welfare_grid(params: &SystemParams) -> Vec<f64> {
    (0..=GRID_STEPS)
        .map(|i| {
            let q = i as f64 / GRID_STEPS as f64;
            analytic::social_welfare(
                params,
                JoiningStrategy::new(q).expect("grid point within [0, 1]"),
            )
        })
        .collect()
}

/// Whether the welfare curve sampled on a `1e-3` grid rises then falls.
pub fn welfare_is_unimodal(params: &SystemParams) -> bool {
    let grid = welfare_grid(params);
    let peak = grid
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > grid[best] { i } else { best });
    let slack = 1e-12;
    grid[..=peak].windows(2).all(|w| w[1] >= w[0] - slack)
        && grid[peak..].windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Welfare-maximising strategy by grid bracketing followed by golden-section
/// refinement.
pub fn numeric_social_optimum(params: &SystemParams) -> Result<f64> {
    require_arrivals(params)?;
    let grid = welfare_grid(params);
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > grid[best] { i } else { best });
    let step = 1.0 / GRID_STEPS as f64;
    let lo = best.saturating_sub(1) as f64 * step;
    let hi = ((best + 1).min(GRID_STEPS)) as f64 * step;
    let welfare = |q: f64| {
        analytic::social_welfare(
            params,
            JoiningStrategy::new(q.clamp(0.0, 1.0)).expect("clamped"),
        )
    };
    let (q, _) = search::golden_section_max(welfare, lo, hi, GOLDEN_TOLERANCE, GOLDEN_MAX_ITER);
    Ok(q)
}
