use lbfp_nis::queueing::{
    estimate_level_prob, estimate_with_proposals, fit_interarrival_proposal, fit_service_proposal,
    generate_synthetic_trace, gambler_ruin_prob, run_pilot, PilotWeighting, QueueConfig, QueueMethod, QueueModel,
    TimeLaw,
};
use lbfp_nis::nis::BandwidthRule;
use lbfp_nis::rng::derive_seed;
use lbfp_nis::Error;

const MU: f64 = 0.074;
const NU: f64 = 0.147;

#[test]
fn nominal_is_reproduces_mc_path_for_path() {
    let model = QueueModel::mm1(MU, NU, 6).unwrap();
    let config = QueueConfig::new(50_000, 9);
    let mc = estimate_level_prob(&model, QueueMethod::Mc, &config).unwrap();
    let (is, se, hits) = estimate_with_proposals(
        &model,
        &model.interarrival,
        &model.service,
        config.periods,
        derive_seed(config.seed, 1),
    );
    assert_eq!(mc.estimate.to_bits(), is.to_bits());
    assert_eq!(mc.std_error.to_bits(), se.to_bits());
    assert_eq!(mc.hits, hits);
}

#[test]
fn fixed_exponential_proposals_are_unbiased() {
    let model = QueueModel::mm1(MU, NU, 10).unwrap();
    let exact = gambler_ruin_prob(MU, NU, 10);
    for (a, s) in [(0.12, 0.1), (NU, MU), (0.2, 0.2)] {
        let (m, se, _) = estimate_with_proposals(
            &model,
            &TimeLaw::exponential(a).unwrap(),
            &TimeLaw::exponential(s).unwrap(),
            300_000,
            4,
        );
        assert!((m - exact).abs() < 4.0 * se, "({a}, {s}): {m} vs {exact} (se {se})");
    }
}

#[test]
fn swapped_trial_recovers_the_optimal_tilt() {
    let model = QueueModel::mm1(MU, NU, 10).unwrap();
    let trial_t = TimeLaw::exponential(NU).unwrap();
    let trial_s = TimeLaw::exponential(MU).unwrap();
    let paths = run_pilot(&model, &trial_t, &trial_s, 100_000, 12);
    let rate = fit_interarrival_proposal(&paths, &model.interarrival, &trial_t, PilotWeighting::PathLikelihood).unwrap();
    assert!((rate / NU - 1.0).abs() < 0.1, "{rate}");
}

#[test]
fn unit_weights_give_the_plain_mle() {
    let model = QueueModel::mm1(MU, NU, 4).unwrap();
    let paths = run_pilot(&model, &model.interarrival, &model.service, 20_000, 1);
    let rate = fit_interarrival_proposal(&paths, &model.interarrival, &model.interarrival, PilotWeighting::PerDraw).unwrap();
    let xs: Vec<f64> = paths.iter().flat_map(|p| p.draws.as_ref().unwrap().interarrivals.clone()).collect();
    let mle = xs.len() as f64 / xs.iter().sum::<f64>();
    assert!((rate - mle).abs() < 1e-12 * mle);
}

#[test]
fn level_probability_falls_with_level_and_servers() {
    let config = QueueConfig::new(200_000, 5);
    let mut last = 1.0;
    for k in [3, 5, 7] {
        let exact = gambler_ruin_prob(MU, NU, k);
        assert!(exact < last);
        last = exact;
        let model = QueueModel::mm1(MU, NU, k).unwrap();
        let single = estimate_level_prob(&model, QueueMethod::Mc, &config).unwrap();
        let dual = estimate_level_prob(&model.with_servers(2).unwrap(), QueueMethod::Mc, &config).unwrap();
        assert!((single.estimate - exact).abs() < 4.0 * single.std_error);
        assert!(dual.estimate < single.estimate);
    }
}

#[test]
fn optimal_service_proposal_favours_long_services() {
    let trace = generate_synthetic_trace(22_248, 2008);
    for (servers, level) in [(1, 10), (2, 8)] {
        let model = QueueModel::from_trace(&trace, servers, level).unwrap();
        let config = QueueConfig::new(400_000, 2);
        let trial_t = TimeLaw::exponential(model.service.rate()).unwrap();
        let paths = run_pilot(&model, &trial_t, &model.service, config.pilot_periods(), 3);
        let q = fit_service_proposal(
            &paths,
            &model.service,
            &model.service,
            config.weighting,
            BandwidthRule::Reference,
        )
        .unwrap();
        assert!(q.mean() > model.service.mean(), "{} servers: {} vs {}", servers, q.mean(), model.service.mean());
    }
}

#[test]
fn mm1_service_fit_approaches_the_swapped_rate() {
    let model = QueueModel::mm1(MU, NU, 10).unwrap();
    let trial_t = TimeLaw::exponential(NU).unwrap();
    let paths = run_pilot(&model, &trial_t, &model.service, 150_000, 13);
    let q = fit_service_proposal(
        &paths,
        &model.service,
        &model.service,
        PilotWeighting::PathLikelihood,
        BandwidthRule::Reference,
    )
    .unwrap();
    assert!((q.mean() * MU - 1.0).abs() < 0.1, "{}", q.mean());
}

#[test]
fn nominal_service_fit_matches_the_hit_paths_empirical_law() {
    let trace = generate_synthetic_trace(22_248, 7);
    let model = QueueModel::from_trace(&trace, 1, 3).unwrap();
    let paths = run_pilot(&model, &model.interarrival, &model.service, 2_500_000, 8);
    let mut ys: Vec<f64> = paths.iter().flat_map(|p| p.draws.as_ref().unwrap().services.clone()).collect();
    assert!(ys.len() >= 100_000, "{} draws", ys.len());
    let q = fit_service_proposal(&paths, &model.service, &model.service, PilotWeighting::PerDraw, BandwidthRule::Reference)
        .unwrap();
    ys.sort_by(f64::total_cmp);
    // CDF of q by the trapezoid rule on a fine grid
    let top = q.upper_bound();
    let steps = 200_000;
    let dx = top / steps as f64;
    let mut cdf = vec![0.0; steps + 1];
    for i in 0..steps {
        cdf[i + 1] = cdf[i] + 0.5 * dx * (q.eval(i as f64 * dx) + q.eval((i + 1) as f64 * dx));
    }
    let n = ys.len() as f64;
    let ks = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = cdf[((y / dx) as usize).min(steps)];
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS {ks}");
}

#[test]
fn nis_without_pilot_hits_is_an_error() {
    let model = QueueModel::mm1(MU, NU, 60).unwrap();
    let mut config = QueueConfig::new(2_000, 1);
    config.pilot_fraction = 0.01;
    assert!(matches!(
        estimate_level_prob(&model, QueueMethod::Nis, &config),
        Err(Error::NoRareEventHits)
    ));
    assert!(estimate_level_prob(&model, QueueMethod::Mc, &QueueConfig::new(1, 1)).is_err());
}

#[test]
fn estimates_do_not_depend_on_the_worker_count() {
    let model = QueueModel::mm1(MU, NU, 8).unwrap().with_servers(2).unwrap();
    let config = QueueConfig::new(40_000, 6);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let run = || estimate_level_prob(&model, QueueMethod::Nis, &config).unwrap().estimate;
    assert_eq!(one.install(run).to_bits(), three.install(run).to_bits());
}

#[test]
fn is_and_nis_fit_the_rate_with_their_own_weighting() {
    let trace = generate_synthetic_trace(5_000, 4);
    let model = QueueModel::from_trace(&trace, 2, 5).unwrap();
    let config = QueueConfig::new(60_000, 11);
    let trial = TimeLaw::exponential(model.service.rate()).unwrap();
    let paths = run_pilot(&model, &trial, &model.service, config.pilot_periods(), derive_seed(config.seed, 0));
    let fit = |w| fit_interarrival_proposal(&paths, &model.interarrival, &trial, w).unwrap();
    let is = estimate_level_prob(&model, QueueMethod::Is, &config).unwrap();
    let nis = estimate_level_prob(&model, QueueMethod::Nis, &config).unwrap();
    assert_eq!(config.is_weighting, PilotWeighting::PerDraw);
    assert_eq!(config.weighting, PilotWeighting::PathLikelihood);
    assert_eq!(is.interarrival_rate, Some(fit(PilotWeighting::PerDraw)));
    assert_eq!(nis.interarrival_rate, Some(fit(PilotWeighting::PathLikelihood)));
    assert!(fit(PilotWeighting::PerDraw) < fit(PilotWeighting::PathLikelihood));
}
