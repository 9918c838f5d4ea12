//! Closed-form performance and game-theoretic quantities.
//!
//! Arriving SUs only see whether the base station is serving a PU. While it
//! is open to SUs the queue behaves like an M/M/1 queue with effective arrival
//! rate `lambda * q` that is wiped out by PU arrivals at rate `xi`; the
//! resulting level distribution is geometric with ratio
//! [`geometric_root`]. Everything else here is built on that root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    powu, EquilibriumResult, JoiningStrategy, Regime, StationaryDistribution, SystemParams,
};
use crate::search;

/// Bracket width at which the fee search stops.
const FEE_TOLERANCE: f64 = 1e-14;
const FEE_MAX_ITER: usize = 200;

/// One point on the welfare-vs-strategy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareCurvePoint {
    pub q: f64,
    /// Social welfare rate `S(q)`.
    pub welfare: f64,
    /// Expected profit of a joining SU, `Gamma(1, q)`.
    pub profit_join: f64,
}

/// Smaller root of `mu x^2 - (rate + mu + xi) x + rate = 0` for an effective
/// arrival rate `rate >= 0`.
///
/// Evaluated as `2 rate / (b + sqrt(b^2 - 4 rate mu))`, which is the same
/// root without the cancellation of the textbook form.
pub fn root_at_rate(params: &SystemParams, rate: f64) -> f64 {
    let b = rate + params.mu + params.xi;
    let disc = b * b - 4.0 * rate * params.mu;
    2.0 * rate / (b + disc.sqrt())
}

/// Geometric ratio `x(lambda q)` of the SU level distribution.
pub fn geometric_root(params: &SystemParams, q: JoiningStrategy) -> f64 {
    root_at_rate(params, q.effective_rate(params))
}

/// `x(lambda)`: the root when every SU joins.
pub fn kappa(params: &SystemParams) -> f64 {
    root_at_rate(params, params.lambda)
}

pub fn stationary(params: &SystemParams, q: JoiningStrategy) -> StationaryDistribution {
    StationaryDistribution {
        p00: params.pu_busy_probability(),
        root_x: geometric_root(params, q),
    }
}

fn stage_ratio(params: &SystemParams) -> f64 {
    params.mu / (params.mu + params.xi)
}

/// Probability that an SU joining behind `n` others is served before the next
/// PU arrival: `(mu / (mu + xi))^(n + 1)`.
pub fn service_probability(params: &SystemParams, n: u32) -> f64 {
    powu(stage_ratio(params), n.saturating_add(1))
}

/// Expected time in system of an SU joining behind `n` others, which is the
/// mean of `min(Gamma(n + 1, mu), Exp(xi))`.
pub fn expected_sojourn(params: &SystemParams, n: u32) -> f64 {
    (1.0 - service_probability(params, n)) / params.xi
}

/// Expected profit of an SU that knew it would join behind `n` others.
pub fn observed_profit(params: &SystemParams, n: u32) -> f64 {
    let served = service_probability(params, n);
    params.reward * served - params.cost * (1.0 - served) / params.xi
}

/// Probability that a joining SU is eventually served, averaged over the level
/// it finds on arrival.
pub fn aggregate_service_probability(params: &SystemParams, q: JoiningStrategy) -> f64 {
    service_probability_at_root(params, geometric_root(params, q))
}

fn service_probability_at_root(params: &SystemParams, x: f64) -> f64 {
    params.mu * (1.0 - x) / (params.mu + params.xi - params.mu * x)
}

fn profit_join_at(params: &SystemParams, reward: f64, x: f64) -> f64 {
    let c_over_xi = params.cost / params.xi;
    (reward + c_over_xi) * service_probability_at_root(params, x) - c_over_xi
}

/// `Gamma(1, q)`: expected profit of a tagged SU that joins while everyone
/// else joins with probability `q`.
pub fn profit_join(params: &SystemParams, q: JoiningStrategy) -> f64 {
    profit_join_at(params, params.reward, geometric_root(params, q))
}

/// `Gamma(q_tilde, q) = q_tilde * Gamma(1, q)`.
pub fn profit_mixed(params: &SystemParams, q_tilde: JoiningStrategy, q: JoiningStrategy) -> f64 {
    q_tilde.q() * profit_join(params, q)
}

fn require_arrivals(params: &SystemParams) -> Result<()> {
    if params.lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("lambda", "must be > 0 for the joining game"))
    }
}

fn equilibrium_for_reward(params: &SystemParams, reward: f64) -> EquilibriumResult {
    let (lambda, mu, xi, c) = (params.lambda, params.mu, params.xi, params.cost);
    let kappa = kappa(params);
    let low = c / mu;
    let high = c / (mu * (1.0 - kappa));
    let q = if reward >= high {
        1.0
    } else if reward > low {
        (mu * reward - c) * (c + xi * reward) / (lambda * c * reward)
    } else {
        0.0
    };
    EquilibriumResult::from_q(q, low, high, kappa)
}

/// Symmetric equilibrium joining probability `q_e`.
///
/// In the mixed regime `q_e` is the unique root of `Gamma(1, q) = 0`, at which
/// the geometric root equals `1 - C / (mu reward)`.
pub fn individual_equilibrium(params: &SystemParams) -> Result<EquilibriumResult> {
    require_arrivals(params)?;
    Ok(equilibrium_for_reward(params, params.reward))
}

/// Social welfare rate: served throughput times reward minus waiting cost
/// rate, `eta x (mu reward (1 - x) - C) / ((xi + eta)(1 - x))`.
pub fn social_welfare(params: &SystemParams, q: JoiningStrategy) -> f64 {
    welfare_at_root(params, geometric_root(params, q))
}

fn welfare_at_root(params: &SystemParams, x: f64) -> f64 {
    params.eta * x * (params.mu * params.reward * (1.0 - x) - params.cost)
        / ((params.xi + params.eta) * (1.0 - x))
}

pub fn welfare_curve_point(params: &SystemParams, q: JoiningStrategy) -> WelfareCurvePoint {
    let x = geometric_root(params, q);
    WelfareCurvePoint {
        q: q.q(),
        welfare: welfare_at_root(params, x),
        profit_join: profit_join_at(params, params.reward, x),
    }
}

/// Welfare-maximising joining probability `q_s`.
///
/// The welfare rate is unimodal in the geometric root with its peak at
/// `1 - sqrt(C / (mu reward))`; `q_s` is the strategy producing that root,
/// clipped to `[0, 1]`.
pub fn social_optimum(params: &SystemParams) -> Result<EquilibriumResult> {
    require_arrivals(params)?;
    let (lambda, mu, xi, c, reward) = (
        params.lambda,
        params.mu,
        params.xi,
        params.cost,
        params.reward,
    );
    let kappa = kappa(params);
    let low = c / mu;
    let high = c / (mu * (1.0 - kappa) * (1.0 - kappa));
    let q = if reward >= high {
        1.0
    } else if reward > low {
        let vartheta = mu * reward * c;
        let s = vartheta.sqrt();
        s * (mu * reward - s) * (xi * reward + s) / (lambda * vartheta * reward)
    } else {
        0.0
    };
    Ok(EquilibriumResult::from_q(q, low, high, kappa))
}

/// Equilibrium when every served SU pays `fee` on completion, which amounts to
/// playing the game with reward `reward - fee`.
pub fn equilibrium_with_fee(params: &SystemParams, fee: f64) -> Result<EquilibriumResult> {
    require_arrivals(params)?;
    if !(fee >= 0.0 && fee.is_finite()) {
        return Err(Error::domain(
            "fee",
            format!("must be finite and >= 0, got {fee}"),
        ));
    }
    Ok(equilibrium_for_reward(params, params.reward - fee))
}

/// Admission fee that makes the equilibrium coincide with the social optimum
/// while leaving joining SUs zero expected surplus.
///
/// Found by bisection on `fee -> Gamma(1, q_s; reward - fee)`, which is
/// strictly decreasing in the fee.
pub fn optimal_price(params: &SystemParams) -> Result<f64> {
    let social = social_optimum(params)?;
    if social.regime != Regime::Mixed {
        return Err(Error::NoInteriorOptimum {
            regime: social.regime,
            q_s: social.q_star,
        });
    }
    let x = geometric_root(params, social.strategy());
    let surplus = |fee: f64| profit_join_at(params, params.reward - fee, x);
    // surplus(0) >= 0 because q_s <= q_e; surplus(reward) < 0.
    search::bisect(surplus, 0.0, params.reward, FEE_TOLERANCE, FEE_MAX_ITER).ok_or(
        Error::NoInteriorOptimum {
            regime: social.regime,
            q_s: social.q_star,
        },
    )
}
