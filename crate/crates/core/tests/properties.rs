use feedrecall::bandwidth::nonbayesian_rate_marginal;
use feedrecall::pricing::{best_response, PriceKind, PricingGame};
use feedrecall::{
    asymptotic_recall, bayesian_limit, mislearning_probability, nonbayesian_rate, recall_probability, InterferenceParam,
    Population, Sender, SenderProfile, SignalModel, WorldState,
};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.95, 0.05f64..0.95)
        .prop_filter("informative", |(a, b)| (a - b).abs() > 0.02)
        .prop_map(|(a, b)| (a.max(b), a.min(b)))
}

fn population() -> impl Strategy<Value = Population<f64>> {
    prop::collection::vec((0.05f64..10.0, model(), any::<bool>()), 1..8).prop_map(|specs| {
        let senders = specs
            .into_iter()
            .enumerate()
            .map(|(i, (rate, (hi, lo), s))| {
                let m = SignalModel::new(hi, lo).unwrap();
                Sender::new(i + 1, rate, m, if s { WorldState::One } else { WorldState::Zero }).unwrap()
            })
            .collect();
        Population::new(senders, WorldState::One).unwrap()
    })
}

proptest! {
    #[test]
    fn recall_is_a_probability_monotone_in_both_counts(
        own in 0.0f64..500.0,
        other in 0.0f64..500.0,
        r in 0.0f64..10.0,
        d in 0.1f64..50.0,
    ) {
        let p = recall_probability(own, other, r).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(recall_probability(own + d, other, r).unwrap() >= p - 1e-15);
        prop_assert!(recall_probability(own, other + d, r).unwrap() <= p + 1e-15);
        if r == 0.0 && own > 0.0 {
            prop_assert_eq!(p, 1.0);
        }
    }

    #[test]
    fn asymptotic_recall_matches_long_run_counts(
        alpha in 0.1f64..5.0,
        rest in 0.1f64..20.0,
        r in 0.01f64..5.0,
        t in 1.0f64..1e6,
    ) {
        let limit = asymptotic_recall(alpha, alpha + rest, r).unwrap();
        let at_t = recall_probability(alpha * t, rest * t, r).unwrap();
        prop_assert!((limit - at_t).abs() < 1e-12);
    }

    #[test]
    fn drift_decomposes_into_sender_terms(pop in population(), r in 0.0f64..5.0) {
        let s = nonbayesian_rate(&pop, InterferenceParam::new(r).unwrap());
        let sum: f64 = s.per_sender_terms.iter().sum();
        prop_assert!((s.rate - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
        prop_assert_eq!(s.per_sender_terms.len(), pop.len());
    }

    #[test]
    fn zero_interference_means_zero_drift(pop in population()) {
        let s = nonbayesian_rate(&pop, InterferenceParam::new(0.0).unwrap());
        prop_assert!(s.per_sender_terms.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn marginal_drift_nondecreasing_in_r(pop in population(), r in 0.0f64..5.0, dr in 0.01f64..5.0) {
        let a = nonbayesian_rate_marginal(&pop, InterferenceParam::new(r).unwrap());
        let b = nonbayesian_rate_marginal(&pop, InterferenceParam::new(r + dr).unwrap());
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-12 * (1.0 + a));
    }

    #[test]
    fn single_sender_never_drifts(rate in 0.01f64..10.0, (hi, lo) in model(), r in 0.0f64..10.0) {
        let m = SignalModel::new(hi, lo).unwrap();
        let pop = Population::new(vec![Sender::new(1, rate, m, WorldState::One).unwrap()], WorldState::One).unwrap();
        prop_assert_eq!(nonbayesian_rate(&pop, InterferenceParam::new(r).unwrap()).rate, 0.0);
    }

    #[test]
    fn mislearning_masses_sum_to_one(
        specs in prop::collection::vec((0.05f64..5.0, model()), 1..9),
        r in 0.01f64..5.0,
    ) {
        let models: Vec<_> = specs.iter().map(|(_, (h, l))| SignalModel::new(*h, *l).unwrap()).collect();
        let rates: Vec<_> = specs.iter().map(|(a, _)| *a).collect();
        let m = mislearning_probability(&models, &rates, r).unwrap();
        for p in [m.p_wrong, m.p_correct, m.p_tie] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!((m.p_wrong + m.p_correct + m.p_tie - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_game_has_interior_equilibrium(n in 2usize..60, b in 0.1f64..200.0, quadratic in any::<bool>()) {
        let kind = if quadratic { PriceKind::Quadratic } else { PriceKind::Linear };
        let game = PricingGame::calibrated(n, b, kind).unwrap();
        let check = game.check(1e-12).unwrap();
        prop_assert!(check.foc_residual < 1e-9);
        prop_assert!(check.deviations_dominated);
        prop_assert!(check.abs_error < 1e-6 * b, "{:?}", check);
        let br = best_response(b, game.price(), 1e-12).unwrap();
        prop_assert!((0.0..=b).contains(&br));
    }

    #[test]
    fn f32_agrees_with_f64(pop in population(), r in 0.0f64..5.0) {
        let senders32 = pop
            .senders()
            .iter()
            .map(|s| {
                let m = SignalModel::new(s.model().p_hi() as f32, s.model().p_lo() as f32).unwrap();
                Sender::new(s.id(), s.rate() as f32, m, s.signal()).unwrap()
            })
            .collect();
        let pop32 = Population::new(senders32, WorldState::One).unwrap();
        let a = nonbayesian_rate(&pop, InterferenceParam::new(r).unwrap()).rate;
        let b = nonbayesian_rate(&pop32, InterferenceParam::new(r as f32).unwrap()).rate as f64;
        let scale: f64 = pop.senders().iter().map(|s| (s.rate() * s.signal_llr()).abs()).sum();
        prop_assert!((a - b).abs() <= 1e-5 * (1.0 + scale), "{} vs {}", a, b);
        let la = bayesian_limit(&pop);
        let lb = bayesian_limit(&pop32) as f64;
        prop_assert!((la - lb).abs() <= 1e-5 * (1.0 + la.abs()));
    }

    #[test]
    fn with_signals_round_trips(pop in population()) {
        let profiles: Vec<SenderProfile<f64>> = pop.profiles();
        let signals: Vec<_> = pop.senders().iter().map(|s| s.signal()).collect();
        let rebuilt = Population::with_signals(&profiles, &signals, pop.theta()).unwrap();
        prop_assert_eq!(rebuilt, pop);
    }
}
