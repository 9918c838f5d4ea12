use proptest::prelude::*;
use spectrum_queue::analytic;
use spectrum_queue::oracle::{self, GeneratorMatrix};
use spectrum_queue::{JoiningStrategy, Regime, SystemParams};

fn params_strategy() -> impl Strategy<Value = SystemParams> {
    (
        0.1..10.0f64,
        0.1..10.0f64,
        0.1..10.0f64,
        0.1..10.0f64,
        0.1..20.0f64,
        0.1..20.0f64,
    )
        .prop_map(|(l, xi, mu, eta, c, w)| SystemParams::new(l, xi, mu, eta, c, w).unwrap())
}

fn q(v: f64) -> JoiningStrategy {
    JoiningStrategy::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn params_roundtrip_through_json(p in params_strategy()) {
        let json = serde_json::to_string(&p).unwrap();
        let back: SystemParams = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(p.lambda.to_bits(), back.lambda.to_bits());
        prop_assert_eq!(p.xi.to_bits(), back.xi.to_bits());
        prop_assert_eq!(p.mu.to_bits(), back.mu.to_bits());
        prop_assert_eq!(p.eta.to_bits(), back.eta.to_bits());
        prop_assert_eq!(p.cost.to_bits(), back.cost.to_bits());
        prop_assert_eq!(p.reward.to_bits(), back.reward.to_bits());
    }

    #[test]
    fn root_increases_with_joining(p in params_strategy(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (xl, xh) = (analytic::geometric_root(&p, q(lo)), analytic::geometric_root(&p, q(hi)));
        prop_assert!(xl < xh);
        prop_assert!((0.0..1.0).contains(&xh));
        prop_assert!(analytic::profit_join(&p, q(lo)) > analytic::profit_join(&p, q(hi)));
    }

    #[test]
    fn distribution_is_normalised(p in params_strategy(), s in 0.0..=1.0f64) {
        let d = analytic::stationary(&p, q(s));
        prop_assert!((d.p00 - p.xi / (p.eta + p.xi)).abs() < 1e-15);
        let partial: f64 = d.p00 + (0..=200).map(|n| d.level_prob(n)).sum::<f64>();
        prop_assert!((partial + d.tail_mass(200) - 1.0).abs() < 1e-12);
        for n in 0..50 {
            prop_assert!(d.level_prob(n) >= 0.0);
            if d.root_x > 0.0 && d.level_prob(n + 1) > 0.0 {
                prop_assert!(d.level_prob(n + 1) < d.level_prob(n));
            }
        }
    }

    #[test]
    fn thresholds_are_ordered(p in params_strategy()) {
        let e = analytic::individual_equilibrium(&p).unwrap();
        let s = analytic::social_optimum(&p).unwrap();
        prop_assert!(e.kappa > 0.0 && e.kappa < 1.0);
        prop_assert!(e.threshold_low < e.threshold_high);
        prop_assert!(e.threshold_high < s.threshold_high);
        prop_assert_eq!(e.threshold_low, s.threshold_low);
    }

    #[test]
    fn regimes_and_fixed_points(p in params_strategy()) {
        let e = analytic::individual_equilibrium(&p).unwrap();
        match e.regime {
            Regime::Mixed => {
                prop_assert!(e.q_star > 0.0 && e.q_star < 1.0);
                prop_assert!(analytic::profit_join(&p, e.strategy()).abs() < 1e-9);
            }
            Regime::AlwaysJoin => {
                prop_assert_eq!(e.q_star, 1.0);
                prop_assert!(analytic::profit_join(&p, q(1.0)) >= -1e-12);
            }
            Regime::AlwaysBalk => {
                prop_assert_eq!(e.q_star, 0.0);
                prop_assert!(analytic::profit_join(&p, q(0.0)) <= 1e-12);
            }
        }
    }

    #[test]
    fn social_optimum_dominates(p in params_strategy()) {
        let e = analytic::individual_equilibrium(&p).unwrap();
        let s = analytic::social_optimum(&p).unwrap();
        prop_assert!(s.q_star <= e.q_star);
        let best = analytic::social_welfare(&p, s.strategy());
        prop_assert!(best >= analytic::social_welfare(&p, e.strategy()) - 1e-9);
        for i in 0..=1000 {
            let w = analytic::social_welfare(&p, q(f64::from(i) / 1000.0));
            prop_assert!(best >= w - 1e-9, "S(q_s) = {} < S({}) = {}", best, i, w);
        }
        if s.regime == Regime::Mixed {
            let x1 = 1.0 - (p.mu * p.reward * p.cost).sqrt() / (p.mu * p.reward);
            prop_assert!((analytic::geometric_root(&p, s.strategy()) - x1).abs() < 1e-9);
        }
    }

    #[test]
    fn fee_aligns_equilibrium(p in params_strategy()) {
        let s = analytic::social_optimum(&p).unwrap();
        match analytic::optimal_price(&p) {
            Ok(fee) => {
                prop_assert_eq!(s.regime, Regime::Mixed);
                let aligned = analytic::equilibrium_with_fee(&p, fee).unwrap();
                prop_assert!((aligned.q_star - s.q_star).abs() < 1e-6);
                let identity = p.reward - (p.cost * p.reward / p.mu).sqrt();
                prop_assert!((fee - identity).abs() < 1e-9 * p.reward.max(1.0));
            }
            Err(_) => prop_assert_ne!(s.regime, Regime::Mixed),
        }
    }

    #[test]
    fn equilibrium_ignores_pu_service_rate(p in params_strategy()) {
        let faster = SystemParams::new(p.lambda, p.xi, p.mu, 10.0 * p.eta, p.cost, p.reward).unwrap();
        prop_assert_eq!(
            analytic::individual_equilibrium(&p).unwrap(),
            analytic::individual_equilibrium(&faster).unwrap()
        );
    }

    #[test]
    fn oracle_agrees_with_closed_forms(p in params_strategy(), s in 0.0..=1.0f64) {
        let strat = q(s);
        let (gen, pi) = oracle::stationary_vector(&p, strat).unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(gen.residual(&pi) < 1e-10);
        let d = analytic::stationary(&p, strat);
        prop_assert!((pi[0] - d.p00).abs() < 1e-7);
        for n in 0..=gen.truncation_level() {
            let delta = (pi[GeneratorMatrix::level_index(n)] - d.level_prob(n)).abs();
            prop_assert!(delta < 1e-7, "level {} delta {}", n, delta);
        }

        let qe = oracle::numeric_equilibrium(&p).unwrap();
        prop_assert!((qe - analytic::individual_equilibrium(&p).unwrap().q_star).abs() < 1e-6);
        prop_assert!(oracle::welfare_is_unimodal(&p));
        let qs = oracle::numeric_social_optimum(&p).unwrap();
        prop_assert!((qs - analytic::social_optimum(&p).unwrap().q_star).abs() < 1e-6);
    }
}

#[test]
fn characteristic_equation_residual() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(1000));
    runner
        .run(&(params_strategy(), 0.0..=1.0f64), |(p, s)| {
            let strat = q(s);
            let rate = strat.effective_rate(&p);
            let x = analytic::geometric_root(&p, strat);
            prop_assert!(((rate + p.mu + p.xi) * x - rate - p.mu * x * x).abs() < 1e-10);
            Ok(())
        })
        .unwrap();
}
