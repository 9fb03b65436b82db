use rollerchain::consensus::Difficulty;
use rollerchain::node::{
    bootstrap_light, NodeConfig, NodeStore, Peer, PeerView, Request, Response,
};
use rollerchain::simnet::stats::binomial_sigma;
use rollerchain::simnet::{
    archiving_availability, bootstrap_equivalence, pow_equivalence, run_experiment,
    storage_profile, ConfigError, Experiment, SimConfig, World,
};

fn field(out: &rollerchain::simnet::ExperimentOutput, key: &str) -> f64 {
    out.report
        .get(key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

fn small() -> SimConfig {
    SimConfig {
        parties: 3,
        window: 16,
        rounds: 120,
        target: 1 << 30,
        queries: 1,
        storage_every: 20,
        ..SimConfig::default()
    }
}

#[test]
fn lone_party_with_maximal_target_grows_every_round() {
    let cfg = SimConfig {
        parties: 1,
        target: 1 << 32,
        bits: 32,
        queries: 1,
        ..small()
    };
    let mut w = World::new(&cfg).unwrap();
    w.run_rounds(50);
    assert_eq!(w.honest_height(), 50);
    assert!(w.finish().iter().all(|a| a.passed()));
    assert!(w.violations().is_empty());
}

#[test]
fn identical_seed_gives_identical_transcript() {
    let cfg = SimConfig {
        adversaries: 1,
        ..small()
    };
    let run = |c: &SimConfig| run_experiment(c).unwrap().transcript;
    let a = run(&cfg);
    assert_eq!(a, run(&cfg));
    assert!(!a.is_empty());
    let other = SimConfig { seed: 2, ..cfg };
    assert_ne!(a, run(&other));
}

#[test]
fn adversarial_network_keeps_every_chain_valid() {
    let cfg = SimConfig {
        parties: 5,
        adversaries: 2,
        withhold: 2,
        rounds: 300,
        ..small()
    };
    let mut w = World::new(&cfg).unwrap();
    w.set_tamper_payloads(true);
    w.run_rounds(cfg.rounds);
    let audits = w.finish();
    assert_eq!(audits.len(), 5);
    assert!(audits.iter().all(|a| a.passed()), "{audits:?}");
    assert!(w.violations().is_empty(), "{:?}", w.violations());
    // Every attempted rewrite was caught and the original delivered.
    assert!(w.blocked_mutations() > 0);
    assert_eq!(
        w.blocked_mutations() as usize,
        w.transcript().lines_of_kind("mutation-blocked").count()
    );
    assert!(w.transcript().lines_of_kind("mined-private").count() > 0);
}

#[test]
fn chain_growth_matches_binomial_prediction() {
    // Low per-round success so that simultaneous wins are rare.
    let cfg = SimConfig {
        parties: 4,
        queries: 2,
        target: 1 << 24,
        bits: 32,
        rounds: 3000,
        tx_rate: 1,
        storage_every: 1000,
        ..small()
    };
    let d = Difficulty::new(cfg.target, cfg.queries, cfg.bits).unwrap();
    let rho =
        1.0 - (1.0 - d.attempt_probability()).powi((cfg.queries as usize * cfg.parties) as i32);
    let mut w = World::new(&cfg).unwrap();
    w.run_rounds(cfg.rounds);
    let expected = rho * cfg.rounds as f64;
    let sigma = binomial_sigma(rho, cfg.rounds) * cfg.rounds as f64;
    let height = w.honest_height() as f64;
    assert!(
        (height - expected).abs() <= 5.0 * sigma,
        "{height} vs {expected} ± {sigma}"
    );
}

/// Forwards to a real store but claims to be someone else.
struct Spoofed<'a>(&'a NodeStore, u64);

impl Peer for Spoofed<'_> {
    fn view(&self) -> PeerView {
        self.0.view(self.1)
    }

    fn request(&self, req: &Request) -> Response {
        self.0.serve_request(req)
    }
}

#[test]
fn spoofed_peer_identities_do_not_change_light_bootstrap() {
    let mut w = World::new(&small()).unwrap();
    w.run_rounds(200);
    let params = *w.params();
    let honest: Vec<(u64, &NodeStore)> = (0..w.party_count())
        .map(|i| (i as u64, w.store(i)))
        .collect();
    let peers: Vec<&dyn Peer> = honest.iter().map(|p| p as &dyn Peer).collect();
    let spoofed: Vec<Spoofed> = (0..w.party_count())
        .map(|i| Spoofed(w.store(i), 7))
        .collect();
    let spoofed_peers: Vec<&dyn Peer> = spoofed.iter().map(|p| p as &dyn Peer).collect();

    let headers = w.store(0).headers();
    let a = bootstrap_light(
        w.genesis().clone(),
        headers,
        &peers,
        NodeConfig::verifier(params),
    )
    .unwrap();
    let b = bootstrap_light(
        w.genesis().clone(),
        headers,
        &spoofed_peers,
        NodeConfig::verifier(params),
    )
    .unwrap();
    assert_eq!(a.tip().root(), b.tip().root());
    assert_eq!(a.tip().root(), w.store(0).tip().root());
}

#[test]
fn pow_experiment_rates_agree_at_small_scale() {
    let cfg = SimConfig {
        experiment: Experiment::PowEquivalence,
        queries: 10,
        target: 42_949_673,
        bits: 32,
        snapshots: 3,
        trials: 4000,
        ..SimConfig::default()
    };
    let out = pow_equivalence(&cfg).unwrap();
    assert!(out.violations.is_empty());
    let analytic = field(&out, "analytic_rate");
    assert!((analytic - 0.095_618).abs() < 1e-6);
    for f in ["roller_deviation_sigmas", "bitcoin_deviation_sigmas"] {
        assert!(field(&out, f).abs() < 4.0, "{f}");
    }
    assert!(field(&out, "p_value") > 0.001);
    assert_eq!(field(&out, "always_zero_balanced_accuracy"), 0.5);
    assert_eq!(out.transcript.lines_of_kind("trial").count(), 4000);
    assert_eq!(
        field(&out, "roller_ticket_hashes"),
        3.0 * field(&out, "roller_lottery_queries")
    );
}

#[test]
fn zero_target_never_wins_for_either_function() {
    let cfg = SimConfig {
        experiment: Experiment::PowEquivalence,
        target: 0,
        trials: 200,
        ..SimConfig::default()
    };
    let out = pow_equivalence(&cfg).unwrap();
    assert_eq!(field(&out, "roller_successes"), 0.0);
    assert_eq!(field(&out, "bitcoin_successes"), 0.0);
    for name in ["always_zero", "majority_on_success", "bayes"] {
        assert_eq!(
            field(&out, &format!("{name}_balanced_accuracy")),
            0.5,
            "{name}"
        );
    }
}

#[test]
fn single_draw_availability_is_uniform_over_the_window() {
    let cfg = SimConfig {
        experiment: Experiment::ArchivingAvailability,
        parties: 1,
        snapshots: 1,
        window: 100,
        chain_length: 500,
        trials: 20_000,
        ..SimConfig::default()
    };
    let out = archiving_availability(&cfg).unwrap();
    // Offsets are uniform on 0..n: mean (h_c − n) + (n − 1)/2.
    let mean = field(&out, "mean_min_height");
    assert!((mean - 449.5).abs() < 1.0, "{mean}");
    assert!((field(&out, "discrete_min_height") - 449.5).abs() < 1e-9);
}

#[test]
fn unit_window_pins_every_draw() {
    let cfg = SimConfig {
        experiment: Experiment::ArchivingAvailability,
        parties: 3,
        snapshots: 1,
        window: 1,
        chain_length: 40,
        trials: 100,
        ..SimConfig::default()
    };
    let out = archiving_availability(&cfg).unwrap();
    assert_eq!(field(&out, "mean_min_height"), 39.0);
    assert_eq!(field(&out, "discrete_min_height"), 39.0);
}

#[test]
fn availability_needs_a_chain_longer_than_the_window() {
    let cfg = SimConfig {
        experiment: Experiment::ArchivingAvailability,
        window: 50,
        chain_length: 50,
        ..SimConfig::default()
    };
    assert!(matches!(run_experiment(&cfg), Err(ConfigError::Invalid(_))));
}

#[test]
fn bootstrap_experiment_small_runs() {
    let cfg = SimConfig {
        experiment: Experiment::BootstrapEquivalence,
        parties: 2,
        window: 20,
        chain_length: 60,
        rounds: 2000,
        trials: 3,
        ..small()
    };
    let out = bootstrap_equivalence(&cfg).unwrap();
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert_eq!(field(&out, "roots_equal"), 3.0);
    assert!(field(&out, "fork_attempts") >= 3.0);
    assert_eq!(field(&out, "fork_attempts"), field(&out, "fork_too_deep"));
    assert_eq!(out.report.csv_rows.len(), 3);
}

#[test]
fn storage_without_transactions_is_dominated_by_headers() {
    let cfg = SimConfig {
        experiment: Experiment::StorageProfile,
        tx_rate: 0,
        rounds: 300,
        ..small()
    };
    let out = storage_profile(&cfg).unwrap();
    assert_eq!(out.report.get("rational_headers_complete"), Some("true"));
    assert_eq!(
        out.report.get("rational_snapshots_as_dictated"),
        Some("true")
    );
    assert_eq!(out.report.get("rational_blocks_as_dictated"), Some("true"));
    assert_eq!(field(&out, "header_bytes_each"), 136.0);
    let ratio = field(&out, "measured_ratio");
    assert!(ratio >= 1.0, "{ratio}");
    assert!(field(&out, "extrapolated_ratio") > ratio);
}

#[test]
fn storage_profile_requires_one_archive_node() {
    let cfg = SimConfig {
        experiment: Experiment::StorageProfile,
        archive_nodes: 0,
        ..small()
    };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn more_snapshots_than_window_is_rejected() {
    let cfg = SimConfig {
        window: 2,
        snapshots: 3,
        ..SimConfig::default()
    };
    assert!(run_experiment(&cfg).is_err());
    assert!(World::new(&cfg).is_err());
}
