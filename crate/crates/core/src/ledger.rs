//! Box-based transactional ledger: block validation, block application and
//! the content functions (`V`, `R`, `I`) the chain layer builds on.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::authdict::{AuthDict, EntryId, LeafValue};
use crate::codec::{put_bytes16, put_u16, put_u64, Decode, DecodeError, Encode, Reader};
use crate::hash::{hash_concat, sha256, Digest32};

/// Serialized size of a box: value, lock digest, nonce.
pub const BOX_BYTES: usize = 48;

/// Preimage opening every genesis box.
pub const FAUCET_PREIMAGE: &[u8] = b"rollerchain genesis faucet";

/// A closed box: the unit of state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateBox {
    id: EntryId,
    value: u64,
    lock: Digest32,
    nonce: u64,
}

impl StateBox {
    pub fn new(value: u64, lock: Digest32, nonce: u64) -> Self {
        let id = hash_concat(&[b"box", &value.to_be_bytes(), &lock.0, &nonce.to_be_bytes()]).into();
        StateBox {
            id,
            value,
            lock,
            nonce,
        }
    }

    pub fn id(&self) -> EntryId {
        self.id
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn lock(&self) -> Digest32 {
        self.lock
    }

    pub fn nonce(&self) -> u64 {
        self.nonce
    }
}

impl Encode for StateBox {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_u64(out, self.value);
        out.extend_from_slice(&self.lock.0);
        put_u64(out, self.nonce);
    }
}

impl Decode for StateBox {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let value = r.u64()?;
        let lock = r.digest()?;
        let nonce = r.u64()?;
        Ok(StateBox::new(value, lock, nonce))
    }
}

impl LeafValue for StateBox {
    fn intrinsic_id(&self) -> Option<EntryId> {
        Some(self.id)
    }
}

/// Witness authorizing the removal of a box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Opener(pub Vec<u8>);

/// Predicate deciding whether an opener may remove a box.
pub type OpenerCheck = fn(&StateBox, &Opener) -> bool;

/// The default opener predicate: `H(preimage) == box.lock`.
pub fn hash_lock_opens(b: &StateBox, opener: &Opener) -> bool {
    sha256(&opener.0) == b.lock
}

pub fn lock_for(preimage: &[u8]) -> Digest32 {
    sha256(preimage)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transaction {
    pub removals: Vec<(EntryId, Opener)>,
    pub creations: Vec<StateBox>,
}

impl Transaction {
    pub fn coinbase(b: StateBox) -> Self {
        Transaction {
            removals: Vec::new(),
            creations: vec![b],
        }
    }

    pub fn created_value(&self) -> u128 {
        self.creations.iter().map(|b| b.value as u128).sum()
    }

    /// Non-empty with no repeated removal or creation ids.
    pub fn is_well_formed(&self) -> bool {
        if self.removals.is_empty() && self.creations.is_empty() {
            return false;
        }
        let mut seen = HashSet::new();
        self.removals.iter().all(|(id, _)| seen.insert(*id))
            && self.creations.iter().all(|b| seen.insert(b.id))
    }
}

impl Encode for Transaction {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_u16(
            out,
            u16::try_from(self.removals.len()).expect("too many removals"),
        );
        for (id, opener) in &self.removals {
            out.extend_from_slice(&id.0);
            put_bytes16(out, &opener.0);
        }
        put_u16(
            out,
            u16::try_from(self.creations.len()).expect("too many creations"),
        );
        for b in &self.creations {
            b.encode_to(out);
        }
    }
}

impl Decode for Transaction {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let nr = r.u16()?;
        let mut removals = Vec::with_capacity(nr as usize);
        for _ in 0..nr {
            let id = EntryId(r.digest()?.0);
            removals.push((id, Opener(r.bytes16()?.to_vec())));
        }
        let nc = r.u16()?;
        let mut creations = Vec::with_capacity(nc as usize);
        for _ in 0..nc {
            creations.push(StateBox::decode_from(r)?);
        }
        Ok(Transaction {
            removals,
            creations,
        })
    }
}

/// Authenticated state: box id → box.
pub type State = AuthDict<StateBox>;

/// The transactional state after applying blocks up to `height`.
#[derive(Debug, Clone)]
pub struct StateSnapshot {
    pub height: u64,
    pub dict: State,
}

impl StateSnapshot {
    pub fn new(height: u64, dict: State) -> Self {
        StateSnapshot { height, dict }
    }

    pub fn root(&self) -> Digest32 {
        self.dict.root()
    }

    /// Wire format: entry count (4 bytes) then sorted `id || box` entries.
    pub fn encode_entries(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.dict.len() * (32 + BOX_BYTES));
        out.extend_from_slice(&(self.dict.len() as u32).to_be_bytes());
        for (id, b) in self.dict.iter() {
            out.extend_from_slice(&id.0);
            b.encode_to(&mut out);
        }
        out
    }

    /// Rebuilds a snapshot from its wire form. The caller checks the root.
    pub fn decode_entries(height: u64, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let n = r.u32()?;
        let mut entries = Vec::with_capacity((n as usize).min(r.remaining() / 80 + 1));
        for _ in 0..n {
            let id = EntryId(r.digest()?.0);
            entries.push((id, StateBox::decode_from(&mut r)?));
        }
        r.finish()?;
        let dict =
            State::from_entries(entries).map_err(|_| DecodeError::Malformed("snapshot entries"))?;
        Ok(StateSnapshot { height, dict })
    }
}

/// Genesis state of `count` faucet boxes worth `value` each.
pub fn genesis_state(count: u64, value: u64) -> StateSnapshot {
    let lock = lock_for(FAUCET_PREIMAGE);
    let dict = State::from_entries((0..count).map(|i| {
        let b = StateBox::new(value, lock, i);
        (b.id(), b)
    }))
    .expect("genesis ids are distinct");
    StateSnapshot::new(0, dict)
}

/// Sign convention for per-transaction fees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeeDirection {
    /// `fee = created − removed`, required to be non-negative.
    #[default]
    CreatedMinusRemoved,
    /// `fee = removed − created`, the usual convention.
    RemovedMinusCreated,
}

impl FeeDirection {
    pub fn name(self) -> &'static str {
        match self {
            FeeDirection::CreatedMinusRemoved => "created-minus-removed",
            FeeDirection::RemovedMinusCreated => "removed-minus-created",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "created-minus-removed" => Some(FeeDirection::CreatedMinusRemoved),
            "removed-minus-created" => Some(FeeDirection::RemovedMinusCreated),
            _ => None,
        }
    }

    fn fee(self, removed: u128, created: u128) -> i128 {
        let (removed, created) = (removed as i128, created as i128);
        match self {
            FeeDirection::CreatedMinusRemoved => created - removed,
            FeeDirection::RemovedMinusCreated => removed - created,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LedgerParams {
    pub const_reward: u64,
    pub fee_direction: FeeDirection,
    pub opener: OpenerCheck,
}

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams {
            const_reward: 50,
            fee_direction: FeeDirection::CreatedMinusRemoved,
            opener: hash_lock_opens,
        }
    }
}

/// Why a block failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockRejection {
    #[error("block has no transactions")]
    Empty,
    #[error("coinbase must create exactly one box and open none")]
    BadCoinbase,
    #[error("transaction {tx} removes absent box {id:?}")]
    MissingBox { tx: usize, id: EntryId },
    #[error("transaction {tx} has an invalid opener for {id:?}")]
    BadOpener { tx: usize, id: EntryId },
    #[error("transaction {tx} has negative fee {fee}")]
    NegativeFee { tx: usize, fee: i128 },
    #[error("transaction {tx} creates box {id:?} which already exists")]
    BoxExists { tx: usize, id: EntryId },
    #[error("coinbase value {actual}, expected {expected}")]
    CoinbaseValue { expected: i128, actual: u64 },
    #[error("state root does not match the committed value")]
    StateRoot,
    #[error("transaction root does not match the committed value")]
    TxRoot,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("box {0:?} is not in the state")]
    MissingBox(EntryId),
    #[error("box {0:?} is already in the state")]
    DuplicateBox(EntryId),
}

/// Root of a transaction sequence, keyed by position.
pub fn tx_root(txs: &[Transaction]) -> Digest32 {
    AuthDict::<Vec<u8>>::from_entries(
        txs.iter()
            .enumerate()
            .map(|(i, tx)| (EntryId::from_index(i as u64), tx.encode())),
    )
    .expect("positions are distinct")
    .root()
}

/// Working copy of a state inside one block.
struct Overlay<'a> {
    base: &'a State,
    removed: HashSet<EntryId>,
    added: HashMap<EntryId, StateBox>,
}

impl<'a> Overlay<'a> {
    fn new(base: &'a State) -> Self {
        Overlay {
            base,
            removed: HashSet::new(),
            added: HashMap::new(),
        }
    }

    fn get(&self, id: &EntryId) -> Option<&StateBox> {
        self.added.get(id).or_else(|| {
            (!self.removed.contains(id))
                .then(|| self.base.get(id))
                .flatten()
        })
    }

    fn remove(&mut self, id: &EntryId) -> Option<StateBox> {
        if let Some(b) = self.added.remove(id) {
            return Some(b);
        }
        let b = *self.get(id)?;
        self.removed.insert(*id);
        Some(b)
    }

    fn create(&mut self, b: StateBox) -> bool {
        if self.get(&b.id).is_some() {
            return false;
        }
        self.added.insert(b.id, b);
        true
    }

    fn commit(self) -> State {
        let removed: Vec<EntryId> = self.removed.into_iter().collect();
        self.base
            .batch_update(&removed, self.added)
            .expect("overlay tracks presence exactly")
    }
}

/// Runs one non-coinbase transaction against the overlay, returning its fee.
fn spend(
    overlay: &mut Overlay<'_>,
    idx: usize,
    tx: &Transaction,
    params: &LedgerParams,
) -> Result<i128, BlockRejection> {
    let mut removed: u128 = 0;
    for (id, opener) in &tx.removals {
        let b = *overlay
            .get(id)
            .ok_or(BlockRejection::MissingBox { tx: idx, id: *id })?;
        if !(params.opener)(&b, opener) {
            return Err(BlockRejection::BadOpener { tx: idx, id: *id });
        }
        removed += b.value as u128;
        overlay.remove(id);
    }
    let fee = params.fee_direction.fee(removed, tx.created_value());
    if fee < 0 {
        return Err(BlockRejection::NegativeFee { tx: idx, fee });
    }
    for b in &tx.creations {
        if !overlay.create(*b) {
            return Err(BlockRejection::BoxExists { tx: idx, id: b.id });
        }
    }
    Ok(fee)
}

/// Block validation with a reason on failure; on success returns the
/// post-block state so callers need not apply the block a second time.
///
/// Boxes created by a transaction become spendable by later transactions of
/// the same block.
pub fn check_block(
    prev: &StateSnapshot,
    state_root: &Digest32,
    txs: &[Transaction],
    txs_root: &Digest32,
    params: &LedgerParams,
) -> Result<StateSnapshot, BlockRejection> {
    let (coinbase, tail) = txs.split_first().ok_or(BlockRejection::Empty)?;
    if !coinbase.removals.is_empty() || coinbase.creations.len() != 1 {
        return Err(BlockRejection::BadCoinbase);
    }
    let coinbase_box = coinbase.creations[0];

    let mut overlay = Overlay::new(&prev.dict);
    if !overlay.create(coinbase_box) {
        return Err(BlockRejection::BoxExists {
            tx: 0,
            id: coinbase_box.id,
        });
    }
    let mut fee_total: i128 = 0;
    for (i, tx) in tail.iter().enumerate() {
        fee_total += spend(&mut overlay, i + 1, tx, params)?;
    }
    let expected = fee_total + params.const_reward as i128;
    if coinbase_box.value as i128 != expected {
        return Err(BlockRejection::CoinbaseValue {
            expected,
            actual: coinbase_box.value,
        });
    }

    let next = StateSnapshot::new(prev.height + 1, overlay.commit());
    if !next.dict.check_root(state_root) {
        return Err(BlockRejection::StateRoot);
    }
    if tx_root(txs) != *txs_root {
        return Err(BlockRejection::TxRoot);
    }
    Ok(next)
}

/// Boolean block validation against the previous state.
pub fn validate_block(
    prev: &StateSnapshot,
    state_root: &Digest32,
    txs: &[Transaction],
    txs_root: &Digest32,
    params: &LedgerParams,
) -> bool {
    check_block(prev, state_root, txs, txs_root, params).is_ok()
}

/// Block application: removes every opened box and appends every created
/// one, transaction by transaction. Openers are not re-checked.
pub fn apply_block(
    state: &StateSnapshot,
    txs: &[Transaction],
) -> Result<StateSnapshot, LedgerError> {
    let mut overlay = Overlay::new(&state.dict);
    for tx in txs {
        for (id, _) in &tx.removals {
            overlay.remove(id).ok_or(LedgerError::MissingBox(*id))?;
        }
        for b in &tx.creations {
            if !overlay.create(*b) {
                return Err(LedgerError::DuplicateBox(b.id));
            }
        }
    }
    Ok(StateSnapshot::new(state.height + 1, overlay.commit()))
}

/// The content a block contributes: `(a_S, τ, a_τ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockContent {
    pub state_root: Digest32,
    pub txs: Vec<Transaction>,
    pub txs_root: Digest32,
}

impl BlockContent {
    /// Content of the genesis position: the genesis root and no transactions.
    pub fn genesis(genesis: &StateSnapshot) -> Self {
        BlockContent {
            state_root: genesis.root(),
            txs: Vec::new(),
            txs_root: tx_root(&[]),
        }
    }
}

/// Content validation predicate `V`.
///
/// `contents[0]` is the genesis position and only has to commit to the
/// genesis root; every later element must validate against the state the
/// previous ones produced.
pub fn content_valid(
    genesis: &StateSnapshot,
    contents: &[BlockContent],
    params: &LedgerParams,
) -> bool {
    let Some((first, rest)) = contents.split_first() else {
        return true;
    };
    if first.state_root != genesis.root() {
        return false;
    }
    let mut state = genesis.clone();
    for c in rest {
        match check_block(&state, &c.state_root, &c.txs, &c.txs_root, params) {
            Ok(next) => state = next,
            Err(_) => return false,
        }
    }
    true
}

/// Chain reading function `R` over the contents of blocks mined after
/// genesis: returns them iff they are valid, `None` (undefined) otherwise.
pub fn read_chain(
    genesis: &StateSnapshot,
    blocks: Vec<BlockContent>,
    params: &LedgerParams,
) -> Option<Vec<BlockContent>> {
    if blocks.is_empty() {
        return Some(blocks);
    }
    let mut all = Vec::with_capacity(blocks.len() + 1);
    all.push(BlockContent::genesis(genesis));
    all.extend(blocks);
    if content_valid(genesis, &all, params) {
        all.remove(0);
        Some(all)
    } else {
        None
    }
}

/// Output of the input contribution function `I`.
#[derive(Debug, Clone)]
pub struct BlockInput {
    pub state_root: Digest32,
    pub txs: Vec<Transaction>,
    pub txs_root: Digest32,
    pub next_state: StateSnapshot,
}

/// Input contribution function `I`: keeps, in order, every candidate that is
/// valid against the evolving block state, then prepends a coinbase paying
/// `const_reward` plus collected fees to `miner_lock`.
pub fn build_input(
    current: &StateSnapshot,
    candidates: &[Transaction],
    miner_lock: Digest32,
    params: &LedgerParams,
) -> BlockInput {
    // Trial-run each candidate on a scratch overlay; keep the ones that pass.
    let mut kept: Vec<Transaction> = Vec::new();
    let mut fee_total: i128 = 0;
    {
        let mut overlay = Overlay::new(&current.dict);
        for tx in candidates {
            let snapshot_removed = overlay.removed.clone();
            let snapshot_added = overlay.added.clone();
            match spend(&mut overlay, kept.len() + 1, tx, params) {
                Ok(fee) => {
                    fee_total += fee;
                    kept.push(tx.clone());
                }
                Err(_) => {
                    overlay.removed = snapshot_removed;
                    overlay.added = snapshot_added;
                }
            }
        }
    }

    let value =
        u64::try_from(fee_total + params.const_reward as i128).expect("coinbase value overflow");
    let created: HashSet<EntryId> = kept
        .iter()
        .flat_map(|tx| tx.creations.iter().map(|b| b.id))
        .collect();
    let mut nonce = current.height + 1;
    let coinbase_box = loop {
        let b = StateBox::new(value, miner_lock, nonce);
        if !current.dict.contains(&b.id) && !created.contains(&b.id) {
            break b;
        }
        nonce = nonce.wrapping_add(1 << 32);
    };

    let mut txs = Vec::with_capacity(kept.len() + 1);
    txs.push(Transaction::coinbase(coinbase_box));
    txs.extend(kept);
    let next_state = apply_block(current, &txs).expect("retained transactions apply cleanly");
    BlockInput {
        state_root: next_state.root(),
        txs_root: tx_root(&txs),
        txs,
        next_state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARAMS: LedgerParams = LedgerParams {
        const_reward: 50,
        fee_direction: FeeDirection::CreatedMinusRemoved,
        opener: hash_lock_opens,
    };

    fn faucet() -> Opener {
        Opener(FAUCET_PREIMAGE.to_vec())
    }

    fn spend_tx(from: &StateBox, outputs: &[(u64, u64)]) -> Transaction {
        Transaction {
            removals: vec![(from.id(), faucet())],
            creations: outputs
                .iter()
                .map(|&(v, n)| StateBox::new(v, lock_for(FAUCET_PREIMAGE), n))
                .collect(),
        }
    }

    fn first_box(s: &StateSnapshot) -> StateBox {
        *s.dict.entry_at(0).unwrap().1
    }

    #[test]
    fn empty_block_is_invalid() {
        let g = genesis_state(4, 100);
        assert!(!validate_block(&g, &g.root(), &[], &tx_root(&[]), &PARAMS));
    }

    #[test]
    fn coinbase_only_block_is_valid() {
        let g = genesis_state(4, 100);
        let input = build_input(&g, &[], lock_for(b"miner"), &PARAMS);
        assert_eq!(input.txs.len(), 1);
        assert_eq!(input.txs[0].creations[0].value(), 50);
        assert!(validate_block(
            &g,
            &input.state_root,
            &input.txs,
            &input.txs_root,
            &PARAMS
        ));
        assert_eq!(input.next_state.height, 1);
        assert_eq!(input.next_state.dict.len(), 5);
    }

    #[test]
    fn coinbase_value_off_by_one_is_invalid() {
        let g = genesis_state(4, 100);
        let b = first_box(&g);
        let input = build_input(&g, &[spend_tx(&b, &[(103, 1000)])], lock_for(b"m"), &PARAMS);
        assert_eq!(input.txs[0].creations[0].value(), 53);
        for delta in [-1i64, 1] {
            let mut txs = input.txs.clone();
            let cb = txs[0].creations[0];
            txs[0].creations[0] =
                StateBox::new((cb.value() as i64 + delta) as u64, cb.lock(), cb.nonce());
            let next = apply_block(&g, &txs).unwrap();
            assert_eq!(
                check_block(&g, &next.root(), &txs, &tx_root(&txs), &PARAMS).unwrap_err(),
                BlockRejection::CoinbaseValue {
                    expected: 53,
                    actual: (53 + delta) as u64
                }
            );
        }
    }

    #[test]
    fn intra_block_spend_depends_on_order() {
        let g = genesis_state(2, 100);
        let b = first_box(&g);
        let t1 = spend_tx(&b, &[(100, 500)]);
        let t2 = spend_tx(&t1.creations[0], &[(100, 501)]);
        let forward = build_input(&g, &[t1.clone(), t2.clone()], lock_for(b"m"), &PARAMS);
        assert_eq!(forward.txs.len(), 3);
        assert!(validate_block(
            &g,
            &forward.state_root,
            &forward.txs,
            &forward.txs_root,
            &PARAMS
        ));

        let reversed = vec![forward.txs[0].clone(), t2, t1];
        let next = apply_block(&g, &[reversed[0].clone(), reversed[2].clone()]).unwrap();
        let root = tx_root(&reversed);
        assert!(matches!(
            check_block(&g, &next.root(), &reversed, &root, &PARAMS),
            Err(BlockRejection::MissingBox { tx: 1, .. })
        ));
    }

    #[test]
    fn conflicting_candidates_keep_the_first() {
        let g = genesis_state(3, 100);
        let b = first_box(&g);
        let a = spend_tx(&b, &[(100, 700)]);
        let c = spend_tx(&b, &[(100, 701)]);
        let input = build_input(&g, &[a.clone(), c], lock_for(b"m"), &PARAMS);
        assert_eq!(input.txs[1..], [a]);
    }

    #[test]
    fn fee_direction_changes_sign() {
        let g = genesis_state(2, 100);
        let b = first_box(&g);
        let shrink = spend_tx(&b, &[(90, 800)]);
        let as_written = build_input(&g, std::slice::from_ref(&shrink), lock_for(b"m"), &PARAMS);
        assert_eq!(
            as_written.txs.len(),
            1,
            "created < removed is a negative fee"
        );
        let standard = LedgerParams {
            fee_direction: FeeDirection::RemovedMinusCreated,
            ..PARAMS
        };
        let input = build_input(&g, &[shrink], lock_for(b"m"), &standard);
        assert_eq!(input.txs.len(), 2);
        assert_eq!(input.txs[0].creations[0].value(), 60);
        assert!(validate_block(
            &g,
            &input.state_root,
            &input.txs,
            &input.txs_root,
            &standard
        ));
    }

    #[test]
    fn apply_missing_box_errors() {
        let g = genesis_state(2, 100);
        let ghost = StateBox::new(1, lock_for(b"x"), 99);
        let txs = [
            Transaction::coinbase(StateBox::new(50, lock_for(b"m"), 1)),
            spend_tx(&ghost, &[]),
        ];
        assert_eq!(
            apply_block(&g, &txs).unwrap_err(),
            LedgerError::MissingBox(ghost.id())
        );
    }

    #[test]
    fn transaction_wire_roundtrip() {
        let g = genesis_state(2, 100);
        let tx = spend_tx(&first_box(&g), &[(40, 1), (60, 2)]);
        let bytes = tx.encode();
        assert_eq!(
            bytes.len(),
            2 + 32 + 2 + FAUCET_PREIMAGE.len() + 2 + 2 * BOX_BYTES
        );
        assert_eq!(Transaction::decode(&bytes).unwrap(), tx);
    }

    #[test]
    fn snapshot_wire_roundtrip() {
        let g = genesis_state(5, 7);
        let bytes = g.encode_entries();
        assert_eq!(bytes.len(), 4 + 5 * 80);
        let back = StateSnapshot::decode_entries(0, &bytes).unwrap();
        assert_eq!(back.root(), g.root());
    }

    #[test]
    fn read_chain_is_defined_only_on_valid_content() {
        let g = genesis_state(3, 100);
        assert_eq!(read_chain(&g, vec![], &PARAMS), Some(vec![]));
        assert!(content_valid(&g, &[BlockContent::genesis(&g)], &PARAMS));
        let input = build_input(&g, &[], lock_for(b"m"), &PARAMS);
        let good = BlockContent {
            state_root: input.state_root,
            txs: input.txs.clone(),
            txs_root: input.txs_root,
        };
        assert!(read_chain(&g, vec![good.clone()], &PARAMS).is_some());
        let mut bad = good;
        bad.state_root.0[0] ^= 1;
        assert!(read_chain(&g, vec![bad], &PARAMS).is_none());
    }
}
