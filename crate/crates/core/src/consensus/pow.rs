use crate::hash::{hash_concat, hash_framed, Digest32};
use crate::ledger::{BlockInput, State, Transaction};

use super::block::{BitcoinHeader, BlockHeader, FullBlock};
use super::ticket::{gen_ticket, TicketError};
use super::{Difficulty, HashMeter};

/// The block payload `x = (a_τ, a_S, τ)` handed to a PoW function.
#[derive(Debug, Clone, Copy)]
pub struct PowInput<'a> {
    pub txs_root: Digest32,
    pub state_root: Digest32,
    pub txs: &'a [Transaction],
}

impl<'a> From<&'a BlockInput> for PowInput<'a> {
    fn from(b: &'a BlockInput) -> Self {
        PowInput {
            txs_root: b.txs_root,
            state_root: b.state_root,
            txs: &b.txs,
        }
    }
}

/// `s_t = H(s || a_S || a_τ)`: binds ticket ids to the block being mined.
pub fn ticket_seed(link: &Digest32, state_root: &Digest32, txs_root: &Digest32) -> Digest32 {
    hash_concat(&[&link.0, &state_root.0, &txs_root.0])
}

/// Tries nonces `1..=q`, generating a fresh ticket for each, and returns the
/// first winning block. Each attempt charges one query to `meter`; the `k`
/// id hashes behind the ticket are tallied separately.
///
/// `link` is the work hash of the current tip (zero on an empty chain) and
/// `snapshots` are the key's states in selection order.
pub fn roller_pow(
    input: PowInput<'_>,
    link: Digest32,
    pk: &[u8],
    snapshots: &[&State],
    difficulty: &Difficulty,
    meter: &mut HashMeter,
) -> Result<Option<FullBlock>, TicketError> {
    let seed = ticket_seed(&link, &input.state_root, &input.txs_root);
    for ctr in 1..=difficulty.queries() {
        if !meter.charge() {
            break;
        }
        let (ticket_root, ticket) = gen_ticket(snapshots, &seed, pk, ctr)?;
        meter.note_ticket_hashes(snapshots.len() as u64);
        let header = BlockHeader {
            link,
            ticket_root,
            txs_root: input.txs_root,
            state_root: input.state_root,
            ctr,
        };
        if difficulty.wins(&header.work_hash()) {
            return Ok(Some(FullBlock {
                header,
                ticket,
                txs: input.txs.to_vec(),
            }));
        }
    }
    Ok(None)
}

/// The classic loop: the body hash is computed once and only the nonce varies.
pub fn bitcoin_pow(
    input: PowInput<'_>,
    link: Digest32,
    difficulty: &Difficulty,
    meter: &mut HashMeter,
) -> Option<BitcoinHeader> {
    let mut header = BitcoinHeader {
        link,
        txs_root: input.txs_root,
        state_root: input.state_root,
        ctr: 0,
    };
    let body = header.body_hash();
    for ctr in 1..=difficulty.queries() {
        if !meter.charge() {
            break;
        }
        let lottery = hash_framed(&[&ctr.to_be_bytes(), &body.0]);
        if difficulty.wins(&lottery) {
            header.ctr = ctr;
            return Some(header);
        }
    }
    None
}

/// Index of the first header that breaks the lottery inequality or the link
/// to its predecessor.
pub fn first_invalid_header(headers: &[BlockHeader], difficulty: &Difficulty) -> Option<usize> {
    first_invalid_extension(Digest32::ZERO, headers, difficulty)
}

/// Like [`first_invalid_header`] for headers continuing a verified chain
/// whose tip link is `link`.
pub fn first_invalid_extension(
    link: Digest32,
    headers: &[BlockHeader],
    difficulty: &Difficulty,
) -> Option<usize> {
    let mut expected_link = link;
    for (i, h) in headers.iter().enumerate() {
        let work = h.work_hash();
        if h.link != expected_link || !difficulty.wins(&work) {
            return Some(i);
        }
        expected_link = work;
    }
    None
}

pub fn validate_header_chain(headers: &[BlockHeader], difficulty: &Difficulty) -> bool {
    first_invalid_header(headers, difficulty).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::genesis_state;

    fn input() -> (Digest32, Digest32) {
        (Digest32([7; 32]), Digest32([9; 32]))
    }

    #[test]
    fn maximal_target_wins_first_nonce() {
        let g = genesis_state(4, 10);
        let (txs_root, state_root) = input();
        let x = PowInput {
            txs_root,
            state_root,
            txs: &[],
        };
        let d = Difficulty::new(1 << 32, 5, 32).unwrap();
        let mut m = HashMeter::new(5);
        let b = roller_pow(x, Digest32::ZERO, b"pk", &[&g.dict], &d, &mut m)
            .unwrap()
            .unwrap();
        assert_eq!(b.header.ctr, 1);
        assert_eq!(m.used(), 1);
        assert_eq!(m.ticket_hashes(), 1);
        let mut m = HashMeter::new(5);
        assert_eq!(bitcoin_pow(x, Digest32::ZERO, &d, &mut m).unwrap().ctr, 1);
    }

    #[test]
    fn zero_target_never_wins_and_spends_q() {
        let g = genesis_state(4, 10);
        let (txs_root, state_root) = input();
        let x = PowInput {
            txs_root,
            state_root,
            txs: &[],
        };
        let d = Difficulty::new(0, 7, 32).unwrap();
        let mut m = HashMeter::new(100);
        assert!(roller_pow(x, Digest32::ZERO, b"pk", &[&g.dict], &d, &mut m)
            .unwrap()
            .is_none());
        assert_eq!(m.used(), 7);
        let mut m = HashMeter::new(100);
        assert!(bitcoin_pow(x, Digest32::ZERO, &d, &mut m).is_none());
        assert_eq!(m.used(), 7);
    }

    #[test]
    fn seed_depends_on_both_roots() {
        let l = Digest32([1; 32]);
        let a = ticket_seed(&l, &Digest32([2; 32]), &Digest32([3; 32]));
        assert_ne!(a, ticket_seed(&l, &Digest32([2; 32]), &Digest32([4; 32])));
        assert_ne!(a, ticket_seed(&l, &Digest32([5; 32]), &Digest32([3; 32])));
    }
}
