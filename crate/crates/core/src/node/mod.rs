//! Full-node state machine: header and block storage with pruning, rolling
//! mining snapshots, longest-chain fork choice, request serving and the two
//! bootstrap procedures.

mod bootstrap;
mod wire;

pub use bootstrap::{bootstrap_full, bootstrap_light, Peer};
pub use wire::{ChainDump, PeerView, Request, Response};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::Encode;
use crate::consensus::{
    choose_snapshots, first_invalid_extension, first_invalid_header, key_admissible, roller_pow,
    ticket_seed, validate_ticket, BlockHeader, ChainParams, FullBlock, HashMeter, PowInput,
    TicketError, HEADER_BYTES,
};
use crate::hash::Digest32;
use crate::ledger::{
    apply_block, build_input, check_block, BlockRejection, State, StateSnapshot, Transaction,
};

/// Which full blocks a node keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    /// Every block since genesis.
    Archive,
    /// Only blocks at or above the lowest mining snapshot.
    #[default]
    Rational,
}

/// Mining identity: the public key tickets are bound to and the lock
/// coinbase outputs pay to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerKey {
    pub pk: Vec<u8>,
    pub payout: Digest32,
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub params: ChainParams,
    pub miner: Option<MinerKey>,
    pub retention: Retention,
    /// Also keep the most recent `n` full blocks for bootstrapping peers.
    pub window_server: bool,
}

impl NodeConfig {
    pub fn verifier(params: ChainParams) -> Self {
        NodeConfig {
            params,
            miner: None,
            retention: Retention::Archive,
            window_server: false,
        }
    }

    pub fn miner(params: ChainParams, key: MinerKey, retention: Retention) -> Self {
        NodeConfig {
            params,
            miner: Some(key),
            retention,
            window_server: false,
        }
    }
}

/// The check a block failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockFault {
    #[error("block does not link to the tip")]
    Link,
    #[error("header misses the difficulty target")]
    Work,
    #[error("block header differs from the announced header")]
    HeaderMismatch,
    #[error("ticket does not validate")]
    Ticket,
    #[error(transparent)]
    Content(#[from] BlockRejection),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeError {
    #[error("invalid block at height {height}: {fault}")]
    InvalidBlock { height: u64, fault: BlockFault },
    #[error("header {index} breaks the header chain")]
    InvalidHeaders { index: usize },
    #[error("fork point {fork_point} lies below every retained state")]
    ForkTooDeep { fork_point: u64 },
    #[error("no peer serves the block at height {0}")]
    BlockUnavailable(u64),
    #[error("no snapshot available within the window")]
    NoSnapshotAvailable,
    #[error("downloaded snapshot at height {height} does not match its committed root")]
    SnapshotRootMismatch { height: u64 },
}

/// Full validation of `block` as the successor of `prev`, whose chain is
/// `prefix` (so `prev.height == prefix.len()`). Returns the next state.
pub fn verify_block(
    prefix: &[BlockHeader],
    genesis_root: &Digest32,
    prev: &StateSnapshot,
    block: &FullBlock,
    params: &ChainParams,
) -> Result<StateSnapshot, BlockFault> {
    debug_assert_eq!(prev.height, prefix.len() as u64);
    let h = &block.header;
    let link = prefix
        .last()
        .map(BlockHeader::work_hash)
        .unwrap_or(Digest32::ZERO);
    if h.link != link {
        return Err(BlockFault::Link);
    }
    if !params.difficulty.wins(&h.work_hash()) {
        return Err(BlockFault::Work);
    }
    let committed: Vec<Digest32> = choose_snapshots(
        prefix.len() as u64,
        &block.ticket.miner_key,
        params.window,
        params.snapshots,
    )
    .into_iter()
    .map(|j| committed_root(prefix, genesis_root, j))
    .collect();
    let seed = ticket_seed(&h.link, &h.state_root, &h.txs_root);
    if !validate_ticket(&block.ticket, &seed, &committed, &h.ticket_root, params) {
        return Err(BlockFault::Ticket);
    }
    Ok(check_block(
        prev,
        &h.state_root,
        &block.txs,
        &h.txs_root,
        &params.ledger,
    )?)
}

fn committed_root(headers: &[BlockHeader], genesis_root: &Digest32, height: u64) -> Digest32 {
    match height {
        0 => *genesis_root,
        j => headers[j as usize - 1].state_root,
    }
}

/// Serialized bytes held by a node, by category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StorageReport {
    pub headers: usize,
    pub blocks: usize,
    /// Mining snapshots plus the tip state.
    pub states: usize,
}

impl StorageReport {
    pub fn total(&self) -> usize {
        self.headers + self.blocks + self.states
    }
}

/// One node's view of the chain.
#[derive(Debug, Clone)]
pub struct NodeStore {
    config: NodeConfig,
    genesis: StateSnapshot,
    genesis_root: Digest32,
    /// `headers[i]` is the header of the block at height `i + 1`.
    headers: Vec<BlockHeader>,
    blocks: BTreeMap<u64, FullBlock>,
    snapshots: BTreeMap<u64, StateSnapshot>,
    tip: StateSnapshot,
}

impl NodeStore {
    pub fn new(genesis: StateSnapshot, config: NodeConfig) -> Self {
        let mut store = NodeStore {
            genesis_root: genesis.root(),
            tip: genesis.clone(),
            genesis,
            config,
            headers: Vec::new(),
            blocks: BTreeMap::new(),
            snapshots: BTreeMap::new(),
        };
        store.snapshots = store
            .collect_snapshots(0, BTreeMap::new())
            .expect("genesis is always available");
        store
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn params(&self) -> &ChainParams {
        &self.config.params
    }

    pub fn genesis(&self) -> &StateSnapshot {
        &self.genesis
    }

    /// Height of the tip; genesis is 0.
    pub fn height(&self) -> u64 {
        self.headers.len() as u64
    }

    pub fn headers(&self) -> &[BlockHeader] {
        &self.headers
    }

    pub fn tip(&self) -> &StateSnapshot {
        &self.tip
    }

    /// The link the next block must carry.
    pub fn tip_link(&self) -> Digest32 {
        self.headers
            .last()
            .map(BlockHeader::work_hash)
            .unwrap_or(Digest32::ZERO)
    }

    pub fn block(&self, height: u64) -> Option<&FullBlock> {
        self.blocks.get(&height)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (u64, &FullBlock)> + '_ {
        self.blocks.iter().map(|(h, b)| (*h, b))
    }

    /// Lowest and highest retained full-block heights.
    pub fn block_range(&self) -> Option<(u64, u64)> {
        Some((
            *self.blocks.keys().next()?,
            *self.blocks.keys().next_back()?,
        ))
    }

    pub fn snapshot(&self, height: u64) -> Option<&StateSnapshot> {
        self.snapshots.get(&height)
    }

    pub fn snapshot_heights(&self) -> impl Iterator<Item = u64> + '_ {
        self.snapshots.keys().copied()
    }

    /// Committed state root at `height` (genesis root for 0).
    pub fn committed_root(&self, height: u64) -> Option<Digest32> {
        (height <= self.height()).then(|| committed_root(&self.headers, &self.genesis_root, height))
    }

    /// Distinct snapshot heights this node's key needs at chain length `len`.
    fn needed_heights(&self, len: u64) -> Vec<u64> {
        let Some(key) = &self.config.miner else {
            return Vec::new();
        };
        let p = &self.config.params;
        let mut hs = choose_snapshots(len, &key.pk, p.window, p.snapshots);
        hs.sort_unstable();
        hs.dedup();
        hs
    }

    /// Rebuilds the state at `height` from the nearest retained state below
    /// it and the stored blocks in between.
    pub fn state_at(&self, height: u64) -> Option<StateSnapshot> {
        if height == self.tip.height {
            return Some(self.tip.clone());
        }
        if height > self.tip.height {
            return None;
        }
        let base = self
            .snapshots
            .range(..=height)
            .next_back()
            .map(|(_, s)| s)
            .unwrap_or(&self.genesis);
        let mut state = base.clone();
        for h in base.height + 1..=height {
            state = apply_block(&state, &self.blocks.get(&h)?.txs).ok()?;
        }
        Some(state)
    }

    /// Snapshot set for chain length `len`, taking heights above the fork
    /// point from `fresh` and the rest from this store.
    fn collect_snapshots(
        &self,
        len: u64,
        mut fresh: BTreeMap<u64, StateSnapshot>,
    ) -> Option<BTreeMap<u64, StateSnapshot>> {
        let mut out = BTreeMap::new();
        for h in self.needed_heights(len) {
            let s = match fresh.remove(&h) {
                Some(s) => s,
                None => self.state_at(h)?,
            };
            out.insert(h, s);
        }
        Some(out)
    }

    /// Validates and appends a block extending the tip, rolling every
    /// snapshot forward and pruning. The store is unchanged on error.
    pub fn on_new_block(&mut self, block: FullBlock) -> Result<(), NodeError> {
        let height = self.height() + 1;
        let next = verify_block(
            &self.headers,
            &self.genesis_root,
            &self.tip,
            &block,
            &self.config.params,
        )
        .map_err(|fault| NodeError::InvalidBlock { height, fault })?;
        let fork_point = self.height();
        self.install(
            fork_point,
            vec![block.header],
            vec![(height, block)],
            next,
            BTreeMap::new(),
        )
    }

    /// Switches to `candidate` iff it is a strictly longer valid chain.
    ///
    /// Only blocks above the fork point are requested from `fetch`; the
    /// state at the fork point is rebuilt from this store's own data.
    pub fn resolve_fork(
        &mut self,
        candidate: &[BlockHeader],
        fetch: &mut dyn FnMut(u64) -> Option<FullBlock>,
    ) -> Result<bool, NodeError> {
        if candidate.len() <= self.headers.len() {
            return Ok(false);
        }
        let p = self.config.params;
        let fork_point = self
            .headers
            .iter()
            .zip(candidate)
            .take_while(|(a, b)| a == b)
            .count() as u64;
        // The shared prefix is already verified.
        let base_link = match fork_point {
            0 => Digest32::ZERO,
            f => self.headers[f as usize - 1].work_hash(),
        };
        if let Some(i) =
            first_invalid_extension(base_link, &candidate[fork_point as usize..], &p.difficulty)
        {
            return Err(NodeError::InvalidHeaders {
                index: fork_point as usize + i,
            });
        }
        let mut state = self
            .state_at(fork_point)
            .ok_or(NodeError::ForkTooDeep { fork_point })?;

        let len = candidate.len() as u64;
        let needed = self.needed_heights(len);
        let mut fresh = BTreeMap::new();
        let mut new_blocks = Vec::new();
        for height in fork_point + 1..=len {
            let block = fetch(height).ok_or(NodeError::BlockUnavailable(height))?;
            let invalid = |fault| NodeError::InvalidBlock { height, fault };
            if block.header != candidate[height as usize - 1] {
                return Err(invalid(BlockFault::HeaderMismatch));
            }
            state = verify_block(
                &candidate[..height as usize - 1],
                &self.genesis_root,
                &state,
                &block,
                &p,
            )
            .map_err(invalid)?;
            if needed.binary_search(&height).is_ok() {
                fresh.insert(height, state.clone());
            }
            new_blocks.push((height, block));
        }
        self.install(
            fork_point,
            candidate[fork_point as usize..].to_vec(),
            new_blocks,
            state,
            fresh,
        )?;
        Ok(true)
    }

    fn install(
        &mut self,
        fork_point: u64,
        new_headers: Vec<BlockHeader>,
        new_blocks: Vec<(u64, FullBlock)>,
        tip: StateSnapshot,
        fresh: BTreeMap<u64, StateSnapshot>,
    ) -> Result<(), NodeError> {
        // Every needed height above the fork point was captured while the
        // new blocks were applied; the rest lie on the shared prefix.
        let len = fork_point + new_headers.len() as u64;
        let snapshots = self
            .collect_snapshots(len, fresh)
            .ok_or(NodeError::ForkTooDeep { fork_point })?;

        self.headers.truncate(fork_point as usize);
        self.headers.extend(new_headers);
        self.blocks.split_off(&(fork_point + 1));
        self.blocks.extend(new_blocks);
        self.snapshots = snapshots;
        self.tip = tip;
        self.prune();
        Ok(())
    }

    /// Lowest full-block height this node must keep.
    pub fn retention_floor(&self) -> u64 {
        let tip = self.height();
        let mut floor = match self.config.retention {
            Retention::Archive => 1,
            Retention::Rational => match self.snapshots.keys().next() {
                Some(&min) if self.config.miner.is_some() => min.max(1),
                _ => tip.max(1),
            },
        };
        if self.config.window_server {
            floor = floor.min(tip.saturating_sub(self.config.params.window) + 1);
        }
        floor
    }

    /// Drops full blocks below the retention floor. Headers are never pruned.
    pub fn prune(&mut self) {
        let floor = self.retention_floor();
        self.blocks = self.blocks.split_off(&floor);
    }

    /// Mines on top of the tip with the node's key, including whichever
    /// `candidates` are valid. `None` when the node has no admissible key or
    /// no nonce wins.
    pub fn mine(
        &self,
        candidates: &[Transaction],
        meter: &mut HashMeter,
    ) -> Result<Option<FullBlock>, TicketError> {
        let Some(key) = &self.config.miner else {
            return Ok(None);
        };
        let p = &self.config.params;
        if !key_admissible(&key.pk, p.window, p.snapshots) {
            return Ok(None);
        }
        let heights = choose_snapshots(self.height(), &key.pk, p.window, p.snapshots);
        let states: Vec<&State> = heights.iter().map(|h| &self.snapshots[h].dict).collect();
        let input = build_input(&self.tip, candidates, key.payout, &p.ledger);
        roller_pow(
            PowInput::from(&input),
            self.tip_link(),
            &key.pk,
            &states,
            &p.difficulty,
            meter,
        )
    }

    /// Headers plus every retained full block, in the chain dump format.
    pub fn dump(&self) -> ChainDump {
        ChainDump {
            headers: self.headers.clone(),
            blocks: self.blocks().map(|(h, b)| (h, b.clone())).collect(),
        }
    }

    /// Redirects future coinbase outputs; a no-op for keyless nodes.
    pub fn set_payout(&mut self, lock: Digest32) {
        if let Some(key) = &mut self.config.miner {
            key.payout = lock;
        }
    }

    /// Answers a peer request from retained data only.
    pub fn serve_request(&self, req: &Request) -> Response {
        match *req {
            Request::Headers { from, to } => {
                if from == 0 || from > to || to > self.height() {
                    return Response::NotRetained;
                }
                Response::Headers(self.headers[from as usize - 1..to as usize].to_vec())
            }
            Request::Block(h) => match self.blocks.get(&h) {
                Some(b) => Response::Block(Box::new(b.clone())),
                None => Response::NotRetained,
            },
            Request::Snapshot(h) => {
                let s = if h == self.tip.height {
                    Some(&self.tip)
                } else if h == 0 {
                    Some(&self.genesis)
                } else {
                    self.snapshots.get(&h)
                };
                match s {
                    Some(s) => Response::Snapshot {
                        height: h,
                        entries: s.encode_entries(),
                    },
                    None => Response::NotRetained,
                }
            }
        }
    }

    /// What this node advertises to bootstrapping peers.
    pub fn view(&self, peer_id: u64) -> PeerView {
        let mut heights: Vec<u64> = self.snapshots.keys().copied().collect();
        heights.push(self.tip.height);
        heights.sort_unstable();
        heights.dedup();
        PeerView {
            peer_id,
            snapshot_heights: heights,
            block_range: self.block_range(),
        }
    }

    pub fn storage(&self) -> StorageReport {
        let mut states = self.tip.encode_entries().len();
        for (h, s) in &self.snapshots {
            if *h != self.tip.height {
                states += s.encode_entries().len();
            }
        }
        StorageReport {
            headers: self.headers.len() * HEADER_BYTES,
            blocks: self.blocks.values().map(|b| b.encode().len()).sum(),
            states,
        }
    }

    /// Checks the structural invariants of the store, describing the first
    /// one that fails.
    pub fn check_invariants(&self) -> Result<(), String> {
        let p = &self.config.params;
        if let Some(i) = first_invalid_header(&self.headers, &p.difficulty) {
            return Err(format!("header {i} breaks the header chain"));
        }
        if self.tip.height != self.height() {
            return Err(format!(
                "tip state at {} but chain at {}",
                self.tip.height,
                self.height()
            ));
        }
        if Some(self.tip.root()) != self.committed_root(self.height()) {
            return Err("tip state does not match the tip header".into());
        }
        for (h, s) in &self.snapshots {
            if s.height != *h || Some(s.root()) != self.committed_root(*h) {
                return Err(format!("snapshot at {h} does not match its header"));
            }
        }
        let needed = self.needed_heights(self.height());
        if needed.iter().any(|h| !self.snapshots.contains_key(h)) {
            return Err("a mining snapshot is missing".into());
        }
        let floor = self.retention_floor();
        for h in floor..=self.height() {
            match self.blocks.get(&h) {
                Some(b) if b.header == self.headers[h as usize - 1] => {}
                _ => return Err(format!("full block {h} missing or inconsistent")),
            }
        }
        Ok(())
    }

    /// Copy of this chain cut back to `height` and owned by `config`, or
    /// `None` when the blocks needed to rebuild it are not retained.
    pub fn truncated(&self, height: u64, config: NodeConfig) -> Option<NodeStore> {
        if height > self.height() {
            return None;
        }
        let mut store = NodeStore {
            config,
            genesis: self.genesis.clone(),
            genesis_root: self.genesis_root,
            headers: self.headers[..height as usize].to_vec(),
            blocks: self
                .blocks
                .range(..=height)
                .map(|(h, b)| (*h, b.clone()))
                .collect(),
            snapshots: BTreeMap::new(),
            tip: self.genesis.clone(),
        };
        let needed = store.needed_heights(height);
        let mut state = self.genesis.clone();
        let keep = |s: &StateSnapshot, out: &mut BTreeMap<u64, StateSnapshot>| {
            if needed.binary_search(&s.height).is_ok() {
                out.insert(s.height, s.clone());
            }
        };
        let mut snapshots = BTreeMap::new();
        keep(&state, &mut snapshots);
        for h in 1..=height {
            state = apply_block(&state, &store.blocks.get(&h)?.txs).ok()?;
            keep(&state, &mut snapshots);
        }
        store.snapshots = snapshots;
        store.tip = state;
        store.prune();
        Some(store)
    }

    /// Assembles a store from verified parts, then fills and prunes the
    /// snapshot set. Needed snapshots that cannot be derived are left to the
    /// caller (returned as missing heights).
    fn from_parts(
        genesis: StateSnapshot,
        config: NodeConfig,
        headers: Vec<BlockHeader>,
        blocks: BTreeMap<u64, FullBlock>,
        base: StateSnapshot,
        tip: StateSnapshot,
    ) -> (Self, Vec<u64>) {
        let mut store = NodeStore {
            genesis_root: genesis.root(),
            genesis,
            config,
            headers,
            blocks,
            snapshots: BTreeMap::from([(base.height, base)]),
            tip,
        };
        let mut snapshots = BTreeMap::new();
        let mut missing = Vec::new();
        for h in store.needed_heights(store.height()) {
            match store.state_at(h) {
                Some(s) => {
                    snapshots.insert(h, s);
                }
                None => missing.push(h),
            }
        }
        store.snapshots = snapshots;
        (store, missing)
    }

    fn add_snapshot(&mut self, s: StateSnapshot) {
        self.snapshots.insert(s.height, s);
    }
}
