//! Plumbing behind the `rollerchain` binary: scenario files, output files
//! and the offline chain check.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::{fs, io};

use thiserror::Error;

use rollerchain::codec::Encode;
use rollerchain::consensus::{first_invalid_header, HEADER_BYTES};
use rollerchain::ledger::genesis_state;
use rollerchain::node::{ChainDump, NodeConfig, NodeError, NodeStore};
use rollerchain::simnet::{ConfigError, ExperimentOutput, SimConfig};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// `verify-chain` found an invalid header or block.
    pub const INVALID_CHAIN: u8 = 1;
    /// Unreadable or malformed scenario, chain file or arguments.
    pub const PARSE_ERROR: u8 = 2;
    /// The run finished but broke a simulator invariant.
    pub const INVARIANT_VIOLATION: u8 = 3;
}

/// Output directory used when nothing else names one.
pub const DEFAULT_OUT: &str = "rollerchain-out";
/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "ROLLERCHAIN_OUT";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario is not valid UTF-8")]
    NotUtf8,
    #[error("override `{0}` is not KEY=VALUE")]
    Override(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A parsed scenario file: simulation settings plus an optional output
/// directory (`out=DIR`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    pub config: SimConfig,
    pub out: Option<PathBuf>,
}

impl Scenario {
    /// Parses a scenario. Never panics; any input either parses or errors.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ScenarioError> {
        let text = std::str::from_utf8(bytes).map_err(|_| ScenarioError::NotUtf8)?;
        let mut out = None;
        // Blank the `out` line rather than dropping it so reported line
        // numbers still match the file.
        let rest: Vec<&str> = text
            .lines()
            .map(|line| {
                let content = line.split('#').next().unwrap_or("");
                match content.split_once('=') {
                    Some((k, v)) if k.trim() == "out" => {
                        out = Some(PathBuf::from(v.trim()));
                        ""
                    }
                    _ => line,
                }
            })
            .collect();
        let config = SimConfig::parse(&rest.join("\n"))?;
        Ok(Scenario { config, out })
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let bytes = fs::read(path).map_err(|e| LoadError::Io(path.to_path_buf(), e))?;
        Ok(Self::from_bytes(&bytes)?)
    }

    /// Applies `KEY=VALUE` overrides in order, then revalidates.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ScenarioError> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ScenarioError::Override(o.to_string()))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "out" {
                self.out = Some(PathBuf::from(v));
            } else {
                self.config.set(k, v)?;
            }
        }
        self.config.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {1}", .0.display())]
    Io(PathBuf, io::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Output directory: flag, then scenario, then the environment, then the default.
pub fn resolve_out(
    flag: Option<PathBuf>,
    scenario: Option<PathBuf>,
    env: Option<String>,
) -> PathBuf {
    flag.or(scenario)
        .or(env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Writes transcript, report, CSV summary, resolved scenario and, when the
/// experiment produced one, the chain dump. Returns the paths written.
pub fn write_outputs(
    dir: &Path,
    config: &SimConfig,
    out: &ExperimentOutput,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put("transcript.txt", out.transcript.as_str().as_bytes())?;
    let mut report = out.report.to_kv();
    for v in &out.violations {
        writeln!(report, "violation={}", v.replace(char::is_whitespace, "_")).unwrap();
    }
    put("report.txt", report.as_bytes())?;
    put("summary.csv", out.report.to_csv().as_bytes())?;
    put("scenario.txt", config.to_string().as_bytes())?;
    if let Some(chain) = &out.chain {
        put("chain.bin", &chain.encode())?;
    }
    Ok(written)
}

/// Outcome of checking a chain dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainVerdict {
    Valid {
        height: u64,
        blocks: usize,
        /// False when blocks are missing, so state transitions went unchecked.
        content_checked: bool,
    },
    Invalid {
        height: u64,
        reason: String,
    },
}

/// Checks the header chain, then replays the full blocks in height order.
/// A complete dump is validated from genesis; a partial one only has its
/// blocks matched against their headers and committed roots.
pub fn verify_chain(dump: &ChainDump, config: &SimConfig) -> Result<ChainVerdict, ConfigError> {
    let params = config.chain_params().map_err(ConfigError::from)?;
    let len = dump.headers.len() as u64;
    if let Some(i) = first_invalid_header(&dump.headers, &params.difficulty) {
        return Ok(ChainVerdict::Invalid {
            height: i as u64 + 1,
            reason: "header breaks the link or misses the target".into(),
        });
    }
    let invalid = |height, reason: &str| ChainVerdict::Invalid {
        height,
        reason: reason.to_string(),
    };
    let complete = dump.is_complete();
    let mut store = NodeStore::new(
        genesis_state(config.genesis_boxes, config.genesis_value),
        NodeConfig::verifier(params),
    );
    for (height, block) in &dump.blocks {
        let height = *height;
        if height == 0 || height > len {
            return Ok(invalid(height, "block lies outside the header chain"));
        }
        if block.header != dump.headers[height as usize - 1] {
            return Ok(invalid(height, "block does not match its header"));
        }
        if complete {
            match store.on_new_block(block.clone()) {
                Ok(()) => {}
                Err(NodeError::InvalidBlock { height, fault }) => {
                    return Ok(invalid(height, &fault.to_string()))
                }
                Err(e) => return Ok(invalid(height, &e.to_string())),
            }
        } else {
            if rollerchain::ledger::tx_root(&block.txs) != block.header.txs_root {
                return Ok(invalid(
                    height,
                    "transactions do not match the committed root",
                ));
            }
            if block.ticket.root().ok() != Some(block.header.ticket_root) {
                return Ok(invalid(height, "ticket does not match the committed root"));
            }
        }
    }
    Ok(ChainVerdict::Valid {
        height: len,
        blocks: dump.blocks.len(),
        content_checked: complete,
    })
}

/// Resolved parameters followed by the quantities derived from them.
pub fn params_text(config: &SimConfig) -> Result<String, ConfigError> {
    let params = config.chain_params().map_err(ConfigError::from)?;
    let d = params.difficulty;
    let mut s = config.to_string();
    let per_attempt = d.attempt_probability();
    let network = 1.0 - (1.0 - per_attempt).powf(d.queries() as f64 * config.parties as f64);
    let k = params.snapshots as f64;
    writeln!(s, "attempt_probability={per_attempt:.9}").unwrap();
    writeln!(
        s,
        "party_round_success={:.9}",
        d.round_success_probability()
    )
    .unwrap();
    writeln!(
        s,
        "party_round_success_linearized={:.9}",
        d.linearized_success()
    )
    .unwrap();
    writeln!(s, "network_round_success={network:.9}").unwrap();
    writeln!(
        s,
        "expected_blocks_per_rational_miner={:.3}",
        k * params.window as f64 / (k + 1.0)
    )
    .unwrap();
    writeln!(s, "header_bytes={HEADER_BYTES}").unwrap();
    Ok(s)
}
