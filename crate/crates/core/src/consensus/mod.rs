//! The mining lottery: snapshot selection, tickets, the two proof-of-work
//! functions and header-chain verification.

mod block;
mod pow;
mod ticket;

pub use block::{BitcoinHeader, BlockHeader, FullBlock, HEADER_BYTES};
pub use pow::{
    bitcoin_pow, first_invalid_extension, first_invalid_header, roller_pow, ticket_seed,
    validate_header_chain, PowInput,
};
pub use ticket::{gen_ticket, ticket_ids, validate_ticket, Ticket, TicketEntry, TicketError};

use thiserror::Error;

use crate::hash::{hash_concat, Digest32};
use crate::ledger::LedgerParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("lottery width must be in 1..=64 bits, got {0}")]
    Width(u32),
    #[error("target {target} exceeds 2^{bits}")]
    Target { target: u128, bits: u32 },
    #[error("at least one query per round is required")]
    NoQueries,
    #[error("need window >= snapshots >= 1, got window {window}, snapshots {snapshots}")]
    Window { window: u64, snapshots: usize },
}

/// Lottery parameters: an attempt wins when the top `bits` bits of its hash,
/// read as an unsigned integer, are below `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Difficulty {
    target: u128,
    queries: u64,
    bits: u32,
}

impl Difficulty {
    /// `target` may range over `0..=2^bits`; the endpoints never and always win.
    pub fn new(target: u128, queries: u64, bits: u32) -> Result<Self, ParamError> {
        if !(1..=64).contains(&bits) {
            return Err(ParamError::Width(bits));
        }
        if target > 1u128 << bits {
            return Err(ParamError::Target { target, bits });
        }
        if queries == 0 {
            return Err(ParamError::NoQueries);
        }
        Ok(Difficulty {
            target,
            queries,
            bits,
        })
    }

    /// Target closest to a per-attempt win probability.
    pub fn from_attempt_probability(p: f64, queries: u64, bits: u32) -> Result<Self, ParamError> {
        let full = (1u128 << bits) as f64;
        let target = (p.clamp(0.0, 1.0) * full).round() as u128;
        Self::new(target, queries, bits)
    }

    pub fn target(&self) -> u128 {
        self.target
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn wins(&self, lottery: &Digest32) -> bool {
        (lottery.top_bits(self.bits) as u128) < self.target
    }

    /// `D / 2^μ`.
    pub fn attempt_probability(&self) -> f64 {
        self.target as f64 / (1u128 << self.bits) as f64
    }

    /// Chance that at least one of `q` independent attempts wins.
    pub fn round_success_probability(&self) -> f64 {
        1.0 - (1.0 - self.attempt_probability()).powf(self.queries as f64)
    }

    /// `D · q / 2^μ`, the first-order form of the round success probability.
    pub fn linearized_success(&self) -> f64 {
        self.attempt_probability() * self.queries as f64
    }
}

/// Per-round budget of lottery queries, plus a separate tally of the
/// ticket-generation hashes spent alongside them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashMeter {
    used: u64,
    limit: u64,
    ticket_hashes: u64,
}

impl HashMeter {
    pub fn new(limit: u64) -> Self {
        HashMeter {
            used: 0,
            limit,
            ticket_hashes: 0,
        }
    }

    /// Spends one lottery query; false once the budget is exhausted.
    pub fn charge(&mut self) -> bool {
        if self.used >= self.limit {
            return false;
        }
        self.used += 1;
        true
    }

    pub fn note_ticket_hashes(&mut self, n: u64) {
        self.ticket_hashes += n;
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn ticket_hashes(&self) -> u64 {
        self.ticket_hashes
    }
}

/// Everything a node needs to agree on to validate a chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainParams {
    /// Rolling window `n` of heights the network keeps collectively.
    pub window: u64,
    /// Snapshots `k` each miner must hold.
    pub snapshots: usize,
    pub difficulty: Difficulty,
    pub ledger: LedgerParams,
}

impl ChainParams {
    pub fn new(
        window: u64,
        snapshots: usize,
        difficulty: Difficulty,
        ledger: LedgerParams,
    ) -> Result<Self, ParamError> {
        if snapshots == 0 || window < snapshots as u64 {
            return Err(ParamError::Window { window, snapshots });
        }
        Ok(ChainParams {
            window,
            snapshots,
            difficulty,
            ledger,
        })
    }
}

/// `hash(pk || i) mod n` for `i` in `1..=k`: the key's window offsets.
pub fn snapshot_offsets(pk: &[u8], window: u64, snapshots: usize) -> Vec<u64> {
    (1..=snapshots as u64)
        .map(|i| hash_concat(&[pk, &i.to_be_bytes()]).mod_u64(window))
        .collect()
}

/// Heights of the states a key must hold for a chain of `chain_len` blocks.
///
/// Genesis is height 0; offsets that land at or below it select genesis.
pub fn choose_snapshots(chain_len: u64, pk: &[u8], window: u64, snapshots: usize) -> Vec<u64> {
    snapshot_offsets(pk, window, snapshots)
        .into_iter()
        .map(|off| (off + chain_len).saturating_sub(window))
        .collect()
}

fn all_distinct(xs: &[u64]) -> bool {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.windows(2).all(|w| w[0] != w[1])
}

/// True iff the selected heights are pairwise distinct.
pub fn key_eligible(pk: &[u8], chain_len: u64, window: u64, snapshots: usize) -> bool {
    all_distinct(&choose_snapshots(chain_len, pk, window, snapshots))
}

/// True iff the key's window offsets are pairwise distinct, the
/// length-independent form of [`key_eligible`]. The two agree whenever
/// `chain_len >= window`; below that, clamping to genesis makes collisions
/// unavoidable for `k >= 2` and mining eligibility uses this test instead.
pub fn key_admissible(pk: &[u8], window: u64, snapshots: usize) -> bool {
    all_distinct(&snapshot_offsets(pk, window, snapshots))
}
