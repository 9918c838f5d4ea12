//! Domain types shared by the analytic, oracle and simulation layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate and economic constants of the spectrum-access queue.
///
/// SUs arrive at rate `lambda` and are served FCFS at rate `mu` while the
/// base station is free of primary traffic. A PU arrives at rate `xi`,
/// dismisses every SU in the system, and occupies the channel for an
/// exponential time with rate `eta`. A served SU earns `reward`; every SU pays
/// `cost` per unit of time spent in the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SystemParams {
    pub lambda: f64,
    pub xi: f64,
    pub mu: f64,
    pub eta: f64,
    pub cost: f64,
    pub reward: f64,
}

#[derive(Deserialize)]
struct RawParams {
    lambda: f64,
    xi: f64,
    mu: f64,
    eta: f64,
    cost: f64,
    reward: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.lambda, raw.xi, raw.mu, raw.eta, raw.cost, raw.reward)
    }
}

impl SystemParams {
    pub fn new(lambda: f64, xi: f64, mu: f64, eta: f64, cost: f64, reward: f64) -> Result<Self> {
        validate(SystemParams {
            lambda,
            xi,
            mu,
            eta,
            cost,
            reward,
        })
    }

    /// Same constants with a different service reward.
    pub fn with_reward(self, reward: f64) -> Result<Self> {
        validate(SystemParams { reward, ..self })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        validate(SystemParams { lambda, ..self })
    }

    /// Probability that the base station is serving a PU, `xi / (eta + xi)`.
    pub fn pu_busy_probability(&self) -> f64 {
        self.xi / (self.eta + self.xi)
    }

    /// Probability that the base station is open to SUs, `eta / (eta + xi)`.
    pub fn su_open_probability(&self) -> f64 {
        self.eta / (self.eta + self.xi)
    }
}

fn check(field: &'static str, value: f64, strict: bool) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::domain(field, format!("must be finite, got {value}")));
    }
    if strict && value <= 0.0 {
        return Err(Error::domain(field, format!("must be > 0, got {value}")));
    }
    if !strict && value < 0.0 {
        return Err(Error::domain(field, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

/// Returns `params` unchanged when every bound holds, otherwise a
/// [`Error::Domain`] naming the first violated field.
pub fn validate(params: SystemParams) -> Result<SystemParams> {
    check("lambda", params.lambda, false)?;
    check("xi", params.xi, true)?;
    check("mu", params.mu, true)?;
    check("eta", params.eta, true)?;
    check("cost", params.cost, true)?;
    check("reward", params.reward, false)?;
    Ok(params)
}

/// Probability that an SU joins when it finds the base station open to SUs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct JoiningStrategy(f64);

impl JoiningStrategy {
    pub const ALWAYS_JOIN: JoiningStrategy = JoiningStrategy(1.0);
    pub const ALWAYS_BALK: JoiningStrategy = JoiningStrategy(0.0);

    pub fn new(q: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&q) {
            Ok(JoiningStrategy(q))
        } else {
            Err(Error::domain("q", format!("must lie in [0, 1], got {q}")))
        }
    }

    pub fn q(self) -> f64 {
        self.0
    }

    /// Effective SU arrival rate `lambda * q`.
    pub fn effective_rate(self, params: &SystemParams) -> f64 {
        params.lambda * self.0
    }
}

impl TryFrom<f64> for JoiningStrategy {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        JoiningStrategy::new(q)
    }
}

impl From<JoiningStrategy> for f64 {
    fn from(s: JoiningStrategy) -> f64 {
        s.0
    }
}

/// Stationary law of the two-dimensional chain `(N, I)`.
///
/// State `(0, 0)` is the PU-service state; the SU-open states `(n, 1)` follow
/// a geometric law with ratio `root_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub p00: f64,
    pub root_x: f64,
}

impl StationaryDistribution {
    /// Total mass of the SU-open states.
    pub fn open_mass(&self) -> f64 {
        1.0 - self.p00
    }

    /// `p(n, 1)`.
    pub fn level_prob(&self, n: u32) -> f64 {
        self.open_mass() * self.conditional_level_prob(n)
    }

    /// `p(n, 1)` conditioned on the base station being open to SUs, which is
    /// what an arriving SU sees.
    pub fn conditional_level_prob(&self, n: u32) -> f64 {
        (1.0 - self.root_x) * powu(self.root_x, n)
    }

    /// `sum_{n > level} p(n, 1)`.
    pub fn tail_mass(&self, level: u32) -> f64 {
        self.open_mass() * powu(self.root_x, level + 1)
    }

    /// Mean number of SUs in the system, `sum_n n p(n, 1)`.
    pub fn mean_queue_length(&self) -> f64 {
        self.open_mass() * self.root_x / (1.0 - self.root_x)
    }

    /// Probability that the server is busy with an SU, `sum_{n >= 1} p(n, 1)`.
    pub fn su_busy_probability(&self) -> f64 {
        self.open_mass() * self.root_x
    }
}

pub(crate) fn powu(base: f64, exp: u32) -> f64 {
    base.powi(exp.min(i32::MAX as u32) as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    AlwaysJoin,
    Mixed,
    AlwaysBalk,
}

impl Regime {
    pub(crate) fn of(q: f64) -> Regime {
        if q >= 1.0 {
            Regime::AlwaysJoin
        } else if q <= 0.0 {
            Regime::AlwaysBalk
        } else {
            Regime::Mixed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::AlwaysJoin => "always-join",
            Regime::Mixed => "mixed",
            Regime::AlwaysBalk => "always-balk",
        }
    }
}

/// Joining probability chosen by an equilibrium or welfare criterion,
/// together with the reward thresholds that delimit its regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub q_star: f64,
    pub regime: Regime,
    /// Rewards at or below this make every SU balk.
    pub threshold_low: f64,
    /// Rewards at or above this make every SU join.
    pub threshold_high: f64,
    /// Geometric root at full arrival rate.
    pub kappa: f64,
}

impl EquilibriumResult {
    pub(crate) fn from_q(q: f64, threshold_low: f64, threshold_high: f64, kappa: f64) -> Self {
        let q_star = q.clamp(0.0, 1.0);
        EquilibriumResult {
            q_star,
            regime: Regime::of(q_star),
            threshold_low,
            threshold_high,
            kappa,
        }
    }

    pub fn strategy(&self) -> JoiningStrategy {
        JoiningStrategy(self.q_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SystemParams {
        SystemParams::new(7.0, 0.5, 3.0, 2.0, 2.0, 3.0).unwrap()
    }

    #[test]
    fn accepts_reference_parameters() {
        let p = reference();
        assert_eq!(validate(p), Ok(p));
    }

    #[test]
    fn zero_lambda_and_reward_allowed() {
        assert!(SystemParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_zero_xi() {
        match SystemParams::new(7.0, 0.0, 3.0, 2.0, 2.0, 3.0) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "xi"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn names_first_violated_field() {
        let err = SystemParams::new(-1.0, 0.0, 0.0, 2.0, 2.0, 3.0).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                field: "lambda",
                ..
            }
        ));
        let err = SystemParams::new(1.0, 1.0, 1.0, 1.0, f64::NAN, 3.0).unwrap_err();
        assert!(matches!(err, Error::Domain { field: "cost", .. }));
        let err = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0, -0.1).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                field: "reward",
                ..
            }
        ));
    }

    #[test]
    fn deserialization_validates() {
        let json = r#"{"lambda":7,"xi":0,"mu":3,"eta":2,"cost":2,"reward":3}"#;
        assert!(serde_json::from_str::<SystemParams>(json).is_err());
        let json = r#"{"lambda":7,"xi":0.5,"mu":3,"eta":2,"cost":2,"reward":3}"#;
        assert_eq!(
            serde_json::from_str::<SystemParams>(json).unwrap(),
            reference()
        );
    }

    #[test]
    fn strategy_bounds() {
        assert!(JoiningStrategy::new(-0.01).is_err());
        assert!(JoiningStrategy::new(1.01).is_err());
        assert!(JoiningStrategy::new(f64::NAN).is_err());
        assert_eq!(
            JoiningStrategy::new(0.5)
                .unwrap()
                .effective_rate(&reference()),
            3.5
        );
    }

    #[test]
    fn geometric_tail_matches_partial_sums() {
        let d = StationaryDistribution {
            p00: 0.2,
            root_x: 0.896_087_436_170_033_5,
        };
        let mut partial = d.p00;
        for n in 0..=150 {
            partial += d.level_prob(n);
            assert!((1.0 - partial - d.tail_mass(n)).abs() < 1e-12, "level {n}");
        }
    }

    #[test]
    fn regime_tags_follow_q() {
        assert_eq!(
            EquilibriumResult::from_q(1.0, 0.0, 1.0, 0.5).regime,
            Regime::AlwaysJoin
        );
        assert_eq!(
            EquilibriumResult::from_q(0.0, 0.0, 1.0, 0.5).regime,
            Regime::AlwaysBalk
        );
        assert_eq!(
            EquilibriumResult::from_q(0.3, 0.0, 1.0, 0.5).regime,
            Regime::Mixed
        );
        assert_eq!(
            EquilibriumResult::from_q(1.0 + 1e-15, 0.0, 1.0, 0.5).q_star,
            1.0
        );
    }
}
