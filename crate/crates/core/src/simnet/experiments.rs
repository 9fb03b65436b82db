use rand::{Rng, RngCore};

use crate::consensus::{
    bitcoin_pow, choose_snapshots, key_admissible, roller_pow, HashMeter, PowInput,
};
use crate::hash::{hash_concat, Digest32};
use crate::ledger::{genesis_state, State, StateBox, StateSnapshot};
use crate::node::{
    bootstrap_full, bootstrap_light, ChainDump, MinerKey, NodeConfig, NodeError, NodeStore, Peer,
    Retention,
};

use super::config::{ConfigError, Experiment, SimConfig};
use super::stats::{binomial_sigma, two_proportion_z, wilson_interval};
use super::stream;
use super::transcript::{Report, Transcript};
use super::world::{party_key, World};

/// What an experiment leaves behind.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: Report,
    pub transcript: Transcript,
    /// Invariant violations; empty on a clean run.
    pub violations: Vec<String>,
    /// The chain of party 0, for experiments that run a network.
    pub chain: Option<ChainDump>,
}

/// Dispatches on `config.experiment`.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::Network => network_run(config)?,
        Experiment::PowEquivalence => pow_equivalence(config)?,
        Experiment::BootstrapEquivalence => bootstrap_equivalence(config)?,
        Experiment::ArchivingAvailability => archiving_availability(config)?,
        Experiment::StorageProfile => storage_profile(config)?,
    })
}

fn derived_seed(seed: u64, index: u64) -> u64 {
    let d = hash_concat(&[b"run", &seed.to_be_bytes(), &index.to_be_bytes()]);
    u64::from_be_bytes(d.0[..8].try_into().unwrap())
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Runs the configured network for `rounds` rounds and audits every chain.
pub fn network_run(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    let mut world = World::new(config)?;
    world.run_rounds(config.rounds);
    let audits = world.finish();

    let t = world.transcript();
    let mut report = Report::new(Experiment::Network.name());
    report
        .field("rounds", config.rounds)
        .field("parties", config.parties)
        .field("adversaries", config.adversaries)
        .field("honest_height", world.honest_height())
        .field("blocks_broadcast", t.lines_of_kind("mined").count())
        .field("blocks_private", t.lines_of_kind("mined-private").count())
        .field("adoptions", t.lines_of_kind("adopt").count())
        .field(
            "reorganisations",
            t.lines_of_kind("adopt").filter(|l| is_reorg(l)).count(),
        )
        .field("rejections", t.lines_of_kind("reject").count())
        .field(
            "audits_passed",
            audits.iter().filter(|a| a.passed()).count(),
        )
        .field("audits", audits.len())
        .field("blocked_mutations", world.blocked_mutations())
        .field("violations", world.violations().len());
    report.columns(&[
        "party",
        "honest",
        "height",
        "headers_bytes",
        "blocks_bytes",
        "states_bytes",
        "audit",
    ]);
    for a in &audits {
        let s = world.store(a.party).storage();
        report.row(vec![
            a.party.to_string(),
            world.is_honest(a.party).to_string(),
            a.height.to_string(),
            s.headers.to_string(),
            s.blocks.to_string(),
            s.states.to_string(),
            if a.passed() { "ok" } else { "fail" }.to_string(),
        ]);
    }
    Ok(ExperimentOutput {
        report,
        transcript: world.transcript().clone(),
        violations: world.violations().to_vec(),
        chain: Some(world.store(0).dump()),
    })
}

/// True when an `adopt` record switched branches rather than extending.
fn is_reorg(line: &str) -> bool {
    let field = |k: &str| -> Option<u64> {
        line.split(' ')
            .find_map(|kv| kv.strip_prefix(k)?.strip_prefix('=')?.parse().ok())
    };
    matches!((field("from"), field("fork_point")), (Some(from), Some(f)) if f < from)
}

/// States standing in for an adversary-supplied chain: genesis plus a few
/// variants with extra boxes.
fn snapshot_pool(config: &SimConfig, count: usize) -> Vec<StateSnapshot> {
    let base = genesis_state(config.genesis_boxes, config.genesis_value);
    let mut rng = stream(config.seed, 0, 0);
    (0..count)
        .map(|i| {
            let mut s = base.clone();
            for _ in 0..4 * i {
                let mut lock = [0u8; 32];
                rng.fill_bytes(&mut lock);
                let b = StateBox::new(rng.gen_range(1..1000), Digest32(lock), rng.gen());
                s.dict.insert(b.id(), b).expect("random ids are fresh");
            }
            s.height = i as u64;
            s
        })
        .collect()
}

/// The lottery indistinguishability game.
///
/// Each trial flips a coin deciding which of two miners runs the
/// snapshot-ticket PoW and which the classic one, on an input chosen by
/// the adversary; both get the full `q` queries. Outcome-based
/// distinguishers then guess the coin. Timing is not modelled.
pub fn pow_equivalence(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    let params = config.chain_params()?;
    let d = params.difficulty;
    let pk = party_key(config.seed, 0, &params);
    let pool = snapshot_pool(config, (params.snapshots + 2).max(4));
    let trials = config.trials;

    let mut transcript = Transcript::new();
    let mut violations = Vec::new();
    // (coin, outcome of miner 0, outcome of miner 1)
    let mut records: Vec<(bool, bool, bool)> = Vec::with_capacity(trials as usize);
    let (mut roller_wins, mut bitcoin_wins) = (0u64, 0u64);
    let (mut roller_queries, mut bitcoin_queries, mut ticket_hashes) = (0u64, 0u64, 0u64);
    for t in 0..trials {
        let mut rng = stream(config.seed, 1, t);
        let mut digest = || {
            let mut b = [0u8; 32];
            rng.fill_bytes(&mut b);
            Digest32(b)
        };
        let (link, txs_root, state_root) = (digest(), digest(), digest());
        let coin: bool = rng.gen();
        let mut picks: Vec<usize> = (0..pool.len()).collect();
        for i in 0..params.snapshots {
            let j = rng.gen_range(i..picks.len());
            picks.swap(i, j);
        }
        let states: Vec<&State> = picks[..params.snapshots]
            .iter()
            .map(|&i| &pool[i].dict)
            .collect();
        let x = PowInput {
            txs_root,
            state_root,
            txs: &[],
        };

        let mut m_roller = HashMeter::new(d.queries());
        let roller = roller_pow(x, link, &pk, &states, &d, &mut m_roller)
            .expect("pool states are non-empty")
            .is_some();
        let mut m_bitcoin = HashMeter::new(d.queries());
        let bitcoin = bitcoin_pow(x, link, &d, &mut m_bitcoin).is_some();
        if m_roller.used() > d.queries() || m_bitcoin.used() > d.queries() {
            violations.push(format!("trial {t} exceeded the query bound"));
        }
        roller_queries += m_roller.used();
        bitcoin_queries += m_bitcoin.used();
        ticket_hashes += m_roller.ticket_hashes();
        roller_wins += roller as u64;
        bitcoin_wins += bitcoin as u64;

        let (o0, o1) = if coin {
            (bitcoin, roller)
        } else {
            (roller, bitcoin)
        };
        transcript.record(
            t,
            "trial",
            &[
                ("coin", &(coin as u8)),
                ("o0", &(o0 as u8)),
                ("o1", &(o1 as u8)),
            ],
        );
        records.push((coin, o0, o1));
    }

    let exact = d.round_success_probability();
    let linear = d.linearized_success();
    let sigma = binomial_sigma(exact, trials);
    let (z, p_value) = two_proportion_z(roller_wins, trials, bitcoin_wins, trials);
    let roller_rate = roller_wins as f64 / trials as f64;
    let bitcoin_rate = bitcoin_wins as f64 / trials as f64;
    let (r_lo, r_hi) = wilson_interval(roller_wins, trials, 0.05);
    let (b_lo, b_hi) = wilson_interval(bitcoin_wins, trials, 0.05);

    let mut report = Report::new(Experiment::PowEquivalence.name());
    report
        .field("trials", trials)
        .field("queries", d.queries())
        .field("bits", d.bits())
        .field("target", d.target())
        .field("attempt_probability", fmt6(d.attempt_probability()))
        .field("analytic_rate", fmt6(exact))
        .field("linearized_rate", fmt6(linear))
        .field("sigma", fmt6(sigma))
        .field("roller_successes", roller_wins)
        .field("roller_rate", fmt6(roller_rate))
        .field(
            "roller_wilson95",
            format!("[{},{}]", fmt6(r_lo), fmt6(r_hi)),
        )
        .field(
            "roller_deviation_sigmas",
            fmt6((roller_rate - exact) / sigma.max(f64::MIN_POSITIVE)),
        )
        .field("bitcoin_successes", bitcoin_wins)
        .field("bitcoin_rate", fmt6(bitcoin_rate))
        .field(
            "bitcoin_wilson95",
            format!("[{},{}]", fmt6(b_lo), fmt6(b_hi)),
        )
        .field(
            "bitcoin_deviation_sigmas",
            fmt6((bitcoin_rate - exact) / sigma.max(f64::MIN_POSITIVE)),
        )
        .field("z", fmt6(z))
        .field("p_value", fmt6(p_value))
        .field("roller_lottery_queries", roller_queries)
        .field("bitcoin_lottery_queries", bitcoin_queries)
        .field("roller_ticket_hashes", ticket_hashes);

    report.columns(&["kind", "name", "successes", "trials", "rate", "lo", "hi"]);
    report.row(vec![
        "function".into(),
        "roller".into(),
        roller_wins.to_string(),
        trials.to_string(),
        fmt6(roller_rate),
        fmt6(r_lo),
        fmt6(r_hi),
    ]);
    report.row(vec![
        "function".into(),
        "bitcoin".into(),
        bitcoin_wins.to_string(),
        trials.to_string(),
        fmt6(bitcoin_rate),
        fmt6(b_lo),
        fmt6(b_hi),
    ]);

    let (train, eval) = records.split_at(records.len() / 2);
    for s in Distinguisher::ALL {
        let guess = s.fit(train);
        let correct = eval.iter().filter(|r| guess(r.1, r.2) == r.0).count() as u64;
        let n = eval.len() as u64;
        let acc = if n == 0 {
            0.5
        } else {
            correct as f64 / n as f64
        };
        let balanced = balanced_accuracy(eval, &guess);
        let (lo, hi) = wilson_interval(correct, n, 0.05);
        report
            .field(&format!("{}_accuracy", s.name()), fmt6(acc))
            .field(&format!("{}_balanced_accuracy", s.name()), fmt6(balanced))
            .field(&format!("{}_eval_trials", s.name()), n);
        report.row(vec![
            "distinguisher".into(),
            s.name().into(),
            correct.to_string(),
            n.to_string(),
            fmt6(acc),
            fmt6(lo),
            fmt6(hi),
        ]);
    }
    report.field("violations", violations.len());
    Ok(ExperimentOutput {
        report,
        transcript,
        violations,
        chain: None,
    })
}

/// Mean of per-class accuracies, so a constant guess scores exactly 1/2.
fn balanced_accuracy(eval: &[(bool, bool, bool)], guess: &dyn Fn(bool, bool) -> bool) -> f64 {
    let class = |c: bool| {
        let rows: Vec<_> = eval.iter().filter(|r| r.0 == c).collect();
        if rows.is_empty() {
            return 0.5;
        }
        rows.iter().filter(|r| guess(r.1, r.2) == c).count() as f64 / rows.len() as f64
    };
    (class(false) + class(true)) / 2.0
}

/// Outcome-only strategies for guessing which miner ran which function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distinguisher {
    /// Always answers "miner 0 ran the snapshot PoW".
    AlwaysZero,
    /// When exactly one miner succeeds, attributes the success to whichever
    /// function won lone successes more often in training.
    MajorityOnSuccess,
    /// Picks the coin value with the larger training frequency for each of
    /// the four outcome pairs.
    Bayes,
}

type Guess = Box<dyn Fn(bool, bool) -> bool>;

impl Distinguisher {
    pub const ALL: [Distinguisher; 3] = [
        Distinguisher::AlwaysZero,
        Distinguisher::MajorityOnSuccess,
        Distinguisher::Bayes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distinguisher::AlwaysZero => "always_zero",
            Distinguisher::MajorityOnSuccess => "majority_on_success",
            Distinguisher::Bayes => "bayes",
        }
    }

    /// Trains on `(coin, o0, o1)` records and returns the guessing rule.
    pub fn fit(self, train: &[(bool, bool, bool)]) -> Guess {
        match self {
            Distinguisher::AlwaysZero => Box::new(|_, _| false),
            Distinguisher::MajorityOnSuccess => {
                // Lone successes by the snapshot PoW vs the classic one.
                let (mut roller, mut classic) = (0u64, 0u64);
                for &(coin, o0, o1) in train {
                    if o0 != o1 {
                        // Miner 0 ran the snapshot PoW iff coin is false.
                        if o0 != coin {
                            roller += 1;
                        } else {
                            classic += 1;
                        }
                    }
                }
                let lone_is_roller = roller > classic;
                Box::new(move |o0, o1| {
                    if o0 != o1 {
                        o0 != lone_is_roller
                    } else {
                        false
                    }
                })
            }
            Distinguisher::Bayes => {
                let mut counts = [[0u64; 2]; 4];
                for &(coin, o0, o1) in train {
                    counts[(o0 as usize) << 1 | o1 as usize][coin as usize] += 1;
                }
                Box::new(move |o0, o1| {
                    let c = counts[(o0 as usize) << 1 | o1 as usize];
                    c[1] > c[0]
                })
            }
        }
    }
}

/// Seeded network runs comparing the light and full verifier on the same
/// chain, followed by a forced fork deeper than the window.
pub fn bootstrap_equivalence(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    if config.archive_nodes == 0 {
        return Err(ConfigError::Invalid(
            "bootstrap-equivalence needs an archive node".into(),
        ));
    }
    let params = config.chain_params()?;
    let depth = config.effective_fork_depth();
    let mut transcript = Transcript::new();
    let mut violations = Vec::new();
    let (mut equal, mut fork_attempts, mut too_deep) = (0u64, 0u64, 0u64);
    let mut total_height = 0u64;
    let mut light_base_sum = 0u64;
    let mut csv = Vec::new();

    for run in 0..config.trials {
        let mut cfg = config.clone();
        cfg.seed = derived_seed(config.seed, run);
        cfg.experiment = Experiment::Network;
        let mut world = World::new(&cfg)?;
        if config.chain_length > 0 {
            world.run_until_height(config.chain_length, config.rounds);
            // The source may trail the tallest party by one delivery.
            while world.store(0).height() < config.chain_length && world.round() < config.rounds {
                world.step();
            }
        } else {
            world.run_rounds(config.rounds);
        }
        violations.extend(world.violations().iter().map(|v| format!("run {run}: {v}")));

        let source = world.store(0);
        let genesis = world.genesis().clone();
        let full = bootstrap_full(
            genesis.clone(),
            source.blocks().map(|(_, b)| b.clone()),
            NodeConfig::verifier(params),
        );
        let stores: Vec<(u64, &NodeStore)> = (0..world.party_count())
            .map(|i| (i as u64, world.store(i)))
            .collect();
        let peers: Vec<&dyn Peer> = stores.iter().map(|p| p as &dyn Peer).collect();
        let light = bootstrap_light(
            genesis,
            source.headers(),
            &peers,
            NodeConfig::verifier(params),
        );

        let (full_root, light_root, light_base) = match (&full, &light) {
            (Ok(f), Ok(l)) => (
                f.tip().root(),
                l.tip().root(),
                l.block_range().map_or(l.height(), |r| r.0 - 1),
            ),
            _ => {
                violations.push(format!(
                    "run {run}: bootstrap failed: {:?} / {:?}",
                    full.as_ref().err(),
                    light.as_ref().err()
                ));
                (Digest32::ZERO, Digest32([1; 32]), 0)
            }
        };
        let same = full_root == light_root && full_root == source.tip().root();
        equal += same as u64;
        total_height += source.height();
        light_base_sum += light_base;

        // Forced fork `depth` blocks below the tip.
        let mut fork_results = Vec::new();
        if let (Ok(mut light), true) = (light, source.height() > depth) {
            let fork_point = source.height() - depth;
            let rival = rival_chain(source, fork_point, source.height() + 1, &cfg);
            let mut fetch = |h: u64| rival.block(h).cloned();
            fork_results.push(light.resolve_fork(rival.headers(), &mut fetch));
            for i in 1..world.party_count() {
                let s = world.store(i);
                if s.config().retention == Retention::Rational && s.headers() == source.headers() {
                    fork_results.push(s.clone().resolve_fork(rival.headers(), &mut fetch));
                }
            }
        }
        let deep = fork_results
            .iter()
            .filter(|r| matches!(r, Err(NodeError::ForkTooDeep { .. })))
            .count() as u64;
        fork_attempts += fork_results.len() as u64;
        too_deep += deep;

        transcript.record(
            run,
            "run",
            &[
                ("seed", &cfg.seed),
                ("height", &source.height()),
                ("rounds", &world.round()),
                ("light_base", &light_base),
                ("roots_equal", &same),
                ("fork_attempts", &fork_results.len()),
                ("fork_too_deep", &deep),
                ("root", &light_root.to_hex()),
            ],
        );
        csv.push(vec![
            run.to_string(),
            cfg.seed.to_string(),
            source.height().to_string(),
            light_base.to_string(),
            same.to_string(),
            fork_results.len().to_string(),
            deep.to_string(),
        ]);
    }

    let runs = config.trials;
    let mut report = Report::new(Experiment::BootstrapEquivalence.name());
    report
        .field("runs", runs)
        .field("window", params.window)
        .field("target_height", config.chain_length)
        .field("mean_height", fmt6(total_height as f64 / runs as f64))
        .field("mean_light_base", fmt6(light_base_sum as f64 / runs as f64))
        .field("roots_equal", equal)
        .field("fork_depth", depth)
        .field("fork_attempts", fork_attempts)
        .field("fork_too_deep", too_deep)
        .field("violations", violations.len());
    report.columns(&[
        "run",
        "seed",
        "height",
        "light_base",
        "roots_equal",
        "fork_attempts",
        "fork_too_deep",
    ]);
    for r in csv {
        report.row(r);
    }
    Ok(ExperimentOutput {
        report,
        transcript,
        violations,
        chain: None,
    })
}

/// A privately mined branch leaving `source` at `fork_point` and reaching
/// `length` blocks, mined by a key no party uses.
fn rival_chain(source: &NodeStore, fork_point: u64, length: u64, config: &SimConfig) -> NodeStore {
    let params = *source.params();
    let key = MinerKey {
        pk: party_key(config.seed, usize::MAX, &params),
        payout: Digest32::ZERO,
    };
    let mut rival = source
        .truncated(
            fork_point,
            NodeConfig::miner(params, key, Retention::Archive),
        )
        .expect("the source keeps every block");
    // Mining is a pure function of its input, so each attempt pays a fresh
    // lock to get a fresh coinbase.
    for attempt in 0u64.. {
        if rival.height() >= length {
            break;
        }
        rival.set_payout(hash_concat(&[b"rival", &attempt.to_be_bytes()]));
        let mut meter = HashMeter::new(params.difficulty.queries());
        if let Some(b) = rival
            .mine(&[], &mut meter)
            .expect("snapshots are non-empty")
        {
            rival.on_new_block(b).expect("own block is valid");
        }
    }
    rival
}

/// Monte Carlo over independent uniform keys: the lowest snapshot height
/// among `p` peers holding `k` snapshots each, against its closed form, and
/// the blocks one rational miner retains.
pub fn archiving_availability(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    let (p, k, n) = (config.parties as u64, config.snapshots, config.window);
    let h_c = if config.chain_length == 0 {
        2 * n
    } else {
        config.chain_length
    };
    if h_c <= n {
        return Err(ConfigError::Invalid(
            "archiving-availability needs chain_length > window".into(),
        ));
    }
    let mut transcript = Transcript::new();
    let (mut min_sum, mut retained_sum, mut retained_keys) = (0u128, 0u128, 0u64);
    for t in 0..config.trials {
        let mut rng = stream(config.seed, 2, t);
        let mut trial_min = u64::MAX;
        for _ in 0..p {
            let mut pk = [0u8; 32];
            rng.fill_bytes(&mut pk);
            let heights = choose_snapshots(h_c, &pk, n, k);
            let own_min = *heights.iter().min().expect("k >= 1");
            trial_min = trial_min.min(own_min);
            if key_admissible(&pk, n, k) {
                retained_sum += (h_c - own_min.max(1) + 1) as u128;
                retained_keys += 1;
            }
        }
        min_sum += trial_min as u128;
        if t < 1000 {
            transcript.record(t, "trial", &[("min_height", &trial_min)]);
        }
    }
    let m = (p * k as u64) as f64;
    let nf = n as f64;
    let mean_min = min_sum as f64 / config.trials as f64;
    let analytic = h_c as f64 - m * nf / (m + 1.0);
    // Exact expectation for offsets uniform on 0..n.
    let discrete = (h_c - n) as f64 + (1..n).map(|j| (1.0 - j as f64 / nf).powf(m)).sum::<f64>();
    let mean_retained = retained_sum as f64 / retained_keys.max(1) as f64;
    let retained_analytic = k as f64 * nf / (k as f64 + 1.0);

    let mut report = Report::new(Experiment::ArchivingAvailability.name());
    report
        .field("trials", config.trials)
        .field("peers", p)
        .field("snapshots", k)
        .field("window", n)
        .field("chain_length", h_c)
        .field("mean_min_height", fmt6(mean_min))
        .field("analytic_min_height", fmt6(analytic))
        .field("discrete_min_height", fmt6(discrete))
        .field(
            "relative_error",
            fmt6((mean_min - analytic).abs() / analytic),
        )
        .field("mean_retained_blocks", fmt6(mean_retained))
        .field("analytic_retained_blocks", fmt6(retained_analytic))
        .field(
            "retained_relative_error",
            fmt6((mean_retained - retained_analytic).abs() / retained_analytic),
        )
        .field("admissible_keys", retained_keys);
    report.columns(&["metric", "measured", "analytic"]);
    report.row(vec!["min_height".into(), fmt6(mean_min), fmt6(analytic)]);
    report.row(vec![
        "retained_blocks".into(),
        fmt6(mean_retained),
        fmt6(retained_analytic),
    ]);
    Ok(ExperimentOutput {
        report,
        transcript,
        violations: Vec::new(),
        chain: None,
    })
}

/// Block size the extrapolated storage ratio assumes.
pub const EXTRAPOLATED_BLOCK_BYTES: u64 = 1_000_000;

/// One archive node against one rational node on the same network.
pub fn storage_profile(config: &SimConfig) -> Result<ExperimentOutput, ConfigError> {
    if config.parties < 2 || config.archive_nodes != 1 {
        return Err(ConfigError::Invalid(
            "storage-profile needs parties >= 2 and exactly one archive node".into(),
        ));
    }
    let mut world = World::new(config)?;
    world.run_rounds(config.rounds);
    world.finish();
    let (archive, rational) = (world.store(0), world.store(1));
    let (a, r) = (archive.storage(), rational.storage());
    let blocks_of = |s: &NodeStore| s.blocks().count() as u64;
    let (a_blocks, r_blocks) = (blocks_of(archive), blocks_of(rational));

    let ext = |s: &crate::node::StorageReport, blocks: u64| {
        (s.headers + s.states) as f64 + blocks as f64 * EXTRAPOLATED_BLOCK_BYTES as f64
    };
    let ratio = a.total() as f64 / r.total() as f64;
    let ext_ratio = ext(&a, a_blocks) / ext(&r, r_blocks);

    let params = world.params();
    let pk = &rational.config().miner.as_ref().expect("parties mine").pk;
    let mut dictated = choose_snapshots(rational.height(), pk, params.window, params.snapshots);
    dictated.sort_unstable();
    dictated.dedup();
    let held: Vec<u64> = rational.snapshot_heights().collect();
    let floor = rational.retention_floor();
    let blocks_as_dictated = rational.block_range() == Some((floor, rational.height()))
        || (rational.height() == 0 && r_blocks == 0);

    // Mean retention across every rational party once the chain is past the window.
    let rational_parties: Vec<&NodeStore> =
        (1..world.party_count()).map(|i| world.store(i)).collect();
    let mean_rational_blocks = rational_parties
        .iter()
        .map(|s| blocks_of(s) as f64)
        .sum::<f64>()
        / rational_parties.len() as f64;
    let k = params.snapshots as f64;
    let expected_retained = k * params.window as f64 / (k + 1.0);

    let mut report = Report::new(Experiment::StorageProfile.name());
    report
        .field("rounds", config.rounds)
        .field("height", archive.height())
        .field("header_bytes_each", crate::consensus::HEADER_BYTES)
        .field("archive_headers_bytes", a.headers)
        .field("archive_blocks_bytes", a.blocks)
        .field("archive_states_bytes", a.states)
        .field("archive_total_bytes", a.total())
        .field("archive_blocks", a_blocks)
        .field("rational_headers_bytes", r.headers)
        .field("rational_blocks_bytes", r.blocks)
        .field("rational_states_bytes", r.states)
        .field("rational_total_bytes", r.total())
        .field("rational_blocks", r_blocks)
        .field("rational_snapshots", held.len())
        .field(
            "rational_headers_complete",
            rational.headers().len() as u64 == rational.height(),
        )
        .field("rational_snapshots_as_dictated", held == dictated)
        .field("rational_blocks_as_dictated", blocks_as_dictated)
        .field("measured_ratio", fmt6(ratio))
        .field("extrapolated_block_bytes", EXTRAPOLATED_BLOCK_BYTES)
        .field("extrapolated_ratio", fmt6(ext_ratio))
        .field("mean_rational_blocks", fmt6(mean_rational_blocks))
        .field("expected_rational_blocks", fmt6(expected_retained))
        .field("violations", world.violations().len());
    report.columns(&[
        "node",
        "headers_bytes",
        "blocks_bytes",
        "states_bytes",
        "total_bytes",
        "blocks",
        "extrapolated_bytes",
    ]);
    for (name, s, b) in [("archive", &a, a_blocks), ("rational", &r, r_blocks)] {
        report.row(vec![
            name.into(),
            s.headers.to_string(),
            s.blocks.to_string(),
            s.states.to_string(),
            s.total().to_string(),
            b.to_string(),
            format!("{:.0}", ext(s, b)),
        ]);
    }
    Ok(ExperimentOutput {
        report,
        transcript: world.transcript().clone(),
        violations: world.violations().to_vec(),
        chain: Some(world.store(0).dump()),
    })
}
