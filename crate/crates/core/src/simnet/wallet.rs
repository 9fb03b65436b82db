use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::authdict::EntryId;
use crate::hash::Digest32;
use crate::ledger::{
    lock_for, FeeDirection, Opener, StateBox, StateSnapshot, Transaction, FAUCET_PREIMAGE,
};

/// The environment's wallet: it knows the preimage of every lock in play
/// and injects transactions that keep the state near a target size.
#[derive(Debug, Clone)]
pub struct Wallet {
    preimages: BTreeMap<Digest32, Vec<u8>>,
    locks: Vec<Digest32>,
    next_nonce: u64,
    target: usize,
    fee_direction: FeeDirection,
}

/// Nonces of wallet-created boxes start here, clear of genesis and coinbase nonces.
const NONCE_BASE: u64 = 1 << 40;

impl Wallet {
    pub fn new(target: usize, fee_direction: FeeDirection) -> Self {
        let mut w = Wallet {
            preimages: BTreeMap::new(),
            locks: Vec::new(),
            next_nonce: NONCE_BASE,
            target,
            fee_direction,
        };
        w.learn(FAUCET_PREIMAGE.to_vec());
        w
    }

    /// Registers a preimage and returns its lock.
    pub fn learn(&mut self, preimage: Vec<u8>) -> Digest32 {
        let lock = lock_for(&preimage);
        if self.preimages.insert(lock, preimage).is_none() {
            self.locks.push(lock);
        }
        lock
    }

    fn opener(&self, b: &StateBox) -> Option<Opener> {
        self.preimages.get(&b.lock()).map(|p| Opener(p.clone()))
    }

    fn fresh_box(&mut self, value: u64, rng: &mut impl Rng) -> StateBox {
        let lock = self.locks[rng.gen_range(0..self.locks.len())];
        let nonce = self.next_nonce;
        self.next_nonce += 1;
        StateBox::new(value, lock, nonce)
    }

    /// Total created for `removed` input value, paying a fee of 1 in the
    /// configured direction. `None` if the outputs would be empty.
    fn created_for(&self, removed: u64, outputs: u64) -> Option<u64> {
        let created = match self.fee_direction {
            FeeDirection::CreatedMinusRemoved => removed.checked_add(1)?,
            FeeDirection::RemovedMinusCreated => removed.checked_sub(1)?,
        };
        (created >= outputs).then_some(created)
    }

    /// Up to `count` transactions against `state`: merges two boxes into
    /// one while the state is above target, otherwise splits one into two.
    /// No two returned transactions spend the same box.
    pub fn transactions(
        &mut self,
        state: &StateSnapshot,
        count: usize,
        rng: &mut impl Rng,
    ) -> Vec<Transaction> {
        let n = state.dict.len();
        let mut used: HashSet<EntryId> = HashSet::new();
        let mut txs = Vec::with_capacity(count);
        let mut size = n;
        for _ in 0..count {
            let inputs = if size > self.target { 2 } else { 1 };
            let mut picked = Vec::with_capacity(inputs);
            for _ in 0..4 * inputs {
                if picked.len() == inputs || n == 0 {
                    break;
                }
                let (id, b) = state
                    .dict
                    .entry_at(rng.gen_range(0..n))
                    .expect("index in range");
                if used.contains(id) || picked.iter().any(|(p, _): &(EntryId, StateBox)| p == id) {
                    continue;
                }
                if self.opener(b).is_some() {
                    picked.push((*id, *b));
                }
            }
            if picked.len() < inputs {
                continue;
            }
            let removed: u64 = picked.iter().map(|(_, b)| b.value()).sum();
            let outputs = if inputs == 2 { 1 } else { 2 };
            let Some(created) = self.created_for(removed, outputs) else {
                continue;
            };
            let creations = if outputs == 1 {
                vec![self.fresh_box(created, rng)]
            } else {
                let first = rng.gen_range(1..created);
                vec![
                    self.fresh_box(first, rng),
                    self.fresh_box(created - first, rng),
                ]
            };
            let removals = picked
                .iter()
                .map(|(id, b)| (*id, self.opener(b).expect("checked above")))
                .collect();
            used.extend(picked.iter().map(|(id, _)| *id));
            size = size + outputs as usize - inputs;
            txs.push(Transaction {
                removals,
                creations,
            });
        }
        txs
    }
}
