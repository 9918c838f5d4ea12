use std::fmt;

use serde::Serialize;
use spectrum_queue::{analytic, Regime, Result, SystemParams};

use crate::format::sig6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Below or at this reward nobody joins, individually or socially.
    pub low: f64,
    /// Reward from which every SU joins in equilibrium.
    pub individual_high: f64,
    /// Reward from which full joining is socially optimal.
    pub social_high: f64,
}

/// Single-point summary of the game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub params: SystemParams,
    pub kappa: f64,
    pub thresholds: Thresholds,
    pub q_e: f64,
    pub q_e_regime: Regime,
    pub q_s: f64,
    pub q_s_regime: Regime,
    #[serde(rename = "S_qe")]
    pub s_qe: f64,
    #[serde(rename = "S_qs")]
    pub s_qs: f64,
    pub p_star: Option<f64>,
}

pub fn analytic_report(params: &SystemParams) -> Result<AnalyticReport> {
    let e = analytic::individual_equilibrium(params)?;
    let s = analytic::social_optimum(params)?;
    let p_star = if s.regime == Regime::Mixed {
        Some(analytic::optimal_price(params)?)
    } else {
        None
    };
    Ok(AnalyticReport {
        params: *params,
        kappa: e.kappa,
        thresholds: Thresholds {
            low: e.threshold_low,
            individual_high: e.threshold_high,
            social_high: s.threshold_high,
        },
        q_e: e.q_star,
        q_e_regime: e.regime,
        q_s: s.q_star,
        q_s_regime: s.regime,
        s_qe: analytic::social_welfare(params, e.strategy()),
        s_qs: analytic::social_welfare(params, s.strategy()),
        p_star,
    })
}

impl fmt::Display for AnalyticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "params      lambda={} xi={} mu={} eta={} cost={} reward={}",
            p.lambda, p.xi, p.mu, p.eta, p.cost, p.reward
        )?;
        writeln!(f, "kappa       {}", sig6(self.kappa))?;
        writeln!(
            f,
            "thresholds  low={} individual={} social={}",
            sig6(self.thresholds.low),
            sig6(self.thresholds.individual_high),
            sig6(self.thresholds.social_high)
        )?;
        writeln!(
            f,
            "q_e         {} ({})",
            sig6(self.q_e),
            self.q_e_regime.as_str()
        )?;
        writeln!(
            f,
            "q_s         {} ({})",
            sig6(self.q_s),
            self.q_s_regime.as_str()
        )?;
        writeln!(f, "S(q_e)      {}", sig6(self.s_qe))?;
        writeln!(f, "S(q_s)      {}", sig6(self.s_qs))?;
        match self.p_star {
            Some(fee) => writeln!(f, "p_star      {}", sig6(fee)),
            None => writeln!(f, "p_star      undefined (no interior social optimum)"),
        }
    }
}
