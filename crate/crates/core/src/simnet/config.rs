use std::fmt;

use thiserror::Error;

use crate::consensus::{ChainParams, Difficulty, ParamError};
use crate::ledger::{hash_lock_opens, FeeDirection, LedgerParams};

/// Which experiment a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Experiment {
    /// Plain network run with auditing.
    #[default]
    Network,
    PowEquivalence,
    BootstrapEquivalence,
    ArchivingAvailability,
    StorageProfile,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Network,
        Experiment::PowEquivalence,
        Experiment::BootstrapEquivalence,
        Experiment::ArchivingAvailability,
        Experiment::StorageProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Network => "network",
            Experiment::PowEquivalence => "pow-equivalence",
            Experiment::BootstrapEquivalence => "bootstrap-equivalence",
            Experiment::ArchivingAvailability => "archiving-availability",
            Experiment::StorageProfile => "storage-profile",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Everything a scenario can set. Fields not used by the chosen experiment
/// are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub experiment: Experiment,
    /// Parties `p`, adversarial ones included.
    pub parties: usize,
    pub adversaries: usize,
    /// Lottery queries per party per round.
    pub queries: u64,
    /// Lottery threshold `D`.
    pub target: u128,
    /// Lottery width `μ`.
    pub bits: u32,
    pub window: u64,
    pub snapshots: usize,
    pub rounds: u64,
    pub const_reward: u64,
    pub seed: u64,
    pub fee_direction: FeeDirection,
    /// Transactions the environment injects per round.
    pub tx_rate: usize,
    pub genesis_boxes: u64,
    pub genesis_value: u64,
    /// State size the environment's transactions steer towards.
    pub state_target: usize,
    /// Parties (from 0) that keep every block.
    pub archive_nodes: usize,
    /// Blocks an adversary withholds before releasing its private branch.
    pub withhold: u64,
    /// Monte Carlo trials or seeded runs, depending on the experiment.
    pub trials: u64,
    /// Chain length `h_c` to reach (bootstrap) or assume (availability).
    pub chain_length: u64,
    /// Depth of the forced fork in the bootstrap experiment; 0 means `n + 1`.
    pub fork_depth: u64,
    /// Rounds between storage records in the transcript.
    pub storage_every: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            experiment: Experiment::Network,
            parties: 4,
            adversaries: 0,
            queries: 8,
            target: 1 << 24,
            bits: 32,
            window: 64,
            snapshots: 2,
            rounds: 500,
            const_reward: 50,
            seed: 1,
            fee_direction: FeeDirection::default(),
            tx_rate: 2,
            genesis_boxes: 32,
            genesis_value: 1000,
            state_target: 48,
            archive_nodes: 1,
            withhold: 2,
            trials: 1000,
            chain_length: 0,
            fork_depth: 0,
            storage_every: 100,
        }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "parties",
    "adversaries",
    "queries",
    "target",
    "bits",
    "window",
    "snapshots",
    "rounds",
    "const_reward",
    "seed",
    "fee_direction",
    "tx_rate",
    "genesis_boxes",
    "genesis_value",
    "state_target",
    "archive_nodes",
    "withhold",
    "trials",
    "chain_length",
    "fork_depth",
    "storage_every",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl SimConfig {
    /// Parses flat `key=value` text on top of the defaults. `#` starts a
    /// comment; blank lines are skipped. The result is validated.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual form without validating the whole.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        match key {
            "experiment" => self.experiment = Experiment::parse(value).ok_or_else(bad)?,
            "parties" => self.parties = num(key, value)?,
            "adversaries" => self.adversaries = num(key, value)?,
            "queries" => self.queries = num(key, value)?,
            "target" => self.target = num(key, value)?,
            "bits" => self.bits = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "snapshots" => self.snapshots = num(key, value)?,
            "rounds" => self.rounds = num(key, value)?,
            "const_reward" => self.const_reward = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "fee_direction" => self.fee_direction = FeeDirection::parse(value).ok_or_else(bad)?,
            "tx_rate" => self.tx_rate = num(key, value)?,
            "genesis_boxes" => self.genesis_boxes = num(key, value)?,
            "genesis_value" => self.genesis_value = num(key, value)?,
            "state_target" => self.state_target = num(key, value)?,
            "archive_nodes" => self.archive_nodes = num(key, value)?,
            "withhold" => self.withhold = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "chain_length" => self.chain_length = num(key, value)?,
            "fork_depth" => self.fork_depth = num(key, value)?,
            "storage_every" => self.storage_every = num(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.parties == 0 {
            return fail("parties must be at least 1");
        }
        if self.adversaries >= self.parties {
            return fail("at least one party must be honest");
        }
        if self.archive_nodes > self.parties {
            return fail("archive_nodes exceeds parties");
        }
        if self.snapshots as u64 > self.window {
            return fail("snapshots (k) must not exceed window (n)");
        }
        if self.snapshots > 255 {
            return fail("snapshots must be at most 255");
        }
        if self.genesis_boxes == 0 || self.genesis_value == 0 {
            return fail("genesis needs at least one box of positive value");
        }
        if self.state_target < 2 || self.storage_every == 0 || self.trials == 0 {
            return fail("state_target, storage_every and trials must be positive");
        }
        self.chain_params()?;
        Ok(())
    }

    pub fn difficulty(&self) -> Result<Difficulty, ParamError> {
        Difficulty::new(self.target, self.queries, self.bits)
    }

    pub fn ledger_params(&self) -> LedgerParams {
        LedgerParams {
            const_reward: self.const_reward,
            fee_direction: self.fee_direction,
            opener: hash_lock_opens,
        }
    }

    pub fn chain_params(&self) -> Result<ChainParams, ParamError> {
        ChainParams::new(
            self.window,
            self.snapshots,
            self.difficulty()?,
            self.ledger_params(),
        )
    }

    /// Forced fork depth for the bootstrap experiment.
    pub fn effective_fork_depth(&self) -> u64 {
        if self.fork_depth == 0 {
            self.window + 1
        } else {
            self.fork_depth
        }
    }
}

impl fmt::Display for SimConfig {
    /// Renders every field in the same `key=value` form [`SimConfig::parse`] reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment={}", self.experiment.name())?;
        writeln!(f, "parties={}", self.parties)?;
        writeln!(f, "adversaries={}", self.adversaries)?;
        writeln!(f, "queries={}", self.queries)?;
        writeln!(f, "target={}", self.target)?;
        writeln!(f, "bits={}", self.bits)?;
        writeln!(f, "window={}", self.window)?;
        writeln!(f, "snapshots={}", self.snapshots)?;
        writeln!(f, "rounds={}", self.rounds)?;
        writeln!(f, "const_reward={}", self.const_reward)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "fee_direction={}", self.fee_direction.name())?;
        writeln!(f, "tx_rate={}", self.tx_rate)?;
        writeln!(f, "genesis_boxes={}", self.genesis_boxes)?;
        writeln!(f, "genesis_value={}", self.genesis_value)?;
        writeln!(f, "state_target={}", self.state_target)?;
        writeln!(f, "archive_nodes={}", self.archive_nodes)?;
        writeln!(f, "withhold={}", self.withhold)?;
        writeln!(f, "trials={}", self.trials)?;
        writeln!(f, "chain_length={}", self.chain_length)?;
        writeln!(f, "fork_depth={}", self.fork_depth)?;
        writeln!(f, "storage_every={}", self.storage_every)
    }
}
