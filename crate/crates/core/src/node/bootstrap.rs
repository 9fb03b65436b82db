use std::collections::{BTreeMap, BTreeSet};

use crate::consensus::{first_invalid_header, BlockHeader, FullBlock};
use crate::ledger::StateSnapshot;

use super::wire::{PeerView, Request, Response};
use super::{committed_root, verify_block, NodeConfig, NodeError, NodeStore};

/// A source of chain data for a bootstrapping node.
pub trait Peer {
    fn view(&self) -> PeerView;
    fn request(&self, req: &Request) -> Response;
}

impl Peer for (u64, &NodeStore) {
    fn view(&self) -> PeerView {
        self.1.view(self.0)
    }

    fn request(&self, req: &Request) -> Response {
        self.1.serve_request(req)
    }
}

/// Replays every block since genesis with full validation.
pub fn bootstrap_full<I>(
    genesis: StateSnapshot,
    blocks: I,
    config: NodeConfig,
) -> Result<NodeStore, NodeError>
where
    I: IntoIterator<Item = FullBlock>,
{
    let mut store = NodeStore::new(genesis, config);
    for block in blocks {
        store.on_new_block(block)?;
    }
    Ok(store)
}

/// Bootstraps from headers plus one downloaded state:
///
/// 1. checks the header chain;
/// 2. collects the snapshot heights peers advertise;
/// 3. picks the deepest one at or above `tip − n` (genesis counts when the
///    chain is no longer than the window);
/// 4. downloads it and checks it against the committed root;
/// 5. downloads and fully validates every block above it.
pub fn bootstrap_light(
    genesis: StateSnapshot,
    headers: &[BlockHeader],
    peers: &[&dyn Peer],
    config: NodeConfig,
) -> Result<NodeStore, NodeError> {
    let params = config.params;
    if let Some(index) = first_invalid_header(headers, &params.difficulty) {
        return Err(NodeError::InvalidHeaders { index });
    }
    let tip = headers.len() as u64;
    let lower = tip.saturating_sub(params.window);
    let views: Vec<PeerView> = peers.iter().map(|p| p.view()).collect();

    let mut offered: BTreeSet<u64> = views
        .iter()
        .flat_map(|v| v.snapshot_heights.iter().copied())
        .filter(|h| (lower..=tip).contains(h))
        .collect();
    if lower == 0 {
        offered.insert(0);
    }

    let genesis_root = genesis.root();
    let mut mismatch = None;
    let mut base = None;
    for h in offered {
        if h == 0 {
            base = Some(genesis.clone());
            break;
        }
        let expected = committed_root(headers, &genesis_root, h);
        match download_snapshot(peers, &views, h, &expected) {
            Ok(s) => {
                base = Some(s);
                break;
            }
            Err(e @ NodeError::SnapshotRootMismatch { .. }) => {
                mismatch.get_or_insert(e);
            }
            Err(_) => {}
        }
    }
    let base = base.ok_or_else(|| mismatch.unwrap_or(NodeError::NoSnapshotAvailable))?;

    let mut state = base.clone();
    let mut blocks = BTreeMap::new();
    for height in base.height + 1..=tip {
        let expected = &headers[height as usize - 1];
        let block = fetch_block(peers, &views, height, expected)
            .ok_or(NodeError::BlockUnavailable(height))?;
        let invalid = |fault| NodeError::InvalidBlock { height, fault };
        state = verify_block(
            &headers[..height as usize - 1],
            &genesis_root,
            &state,
            &block,
            &params,
        )
        .map_err(invalid)?;
        blocks.insert(height, block);
    }

    let (mut store, missing) =
        NodeStore::from_parts(genesis, config, headers.to_vec(), blocks, base, state);
    for h in missing {
        let expected = committed_root(headers, &genesis_root, h);
        store.add_snapshot(download_snapshot(peers, &views, h, &expected)?);
    }
    store.prune();
    Ok(store)
}

fn download_snapshot(
    peers: &[&dyn Peer],
    views: &[PeerView],
    height: u64,
    expected: &crate::hash::Digest32,
) -> Result<StateSnapshot, NodeError> {
    let mut result = Err(NodeError::NoSnapshotAvailable);
    for (peer, view) in peers.iter().zip(views) {
        if !view.snapshot_heights.contains(&height) {
            continue;
        }
        let Response::Snapshot { height: h, entries } = peer.request(&Request::Snapshot(height))
        else {
            continue;
        };
        match StateSnapshot::decode_entries(h, &entries) {
            Ok(s) if h == height && s.dict.check_root(expected) => return Ok(s),
            _ => result = Err(NodeError::SnapshotRootMismatch { height }),
        }
    }
    result
}

/// First block at `height` matching the committed header; peers on another
/// branch are skipped.
fn fetch_block(
    peers: &[&dyn Peer],
    views: &[PeerView],
    height: u64,
    expected: &BlockHeader,
) -> Option<FullBlock> {
    peers.iter().zip(views).find_map(|(peer, view)| {
        if !view.has_block(height) {
            return None;
        }
        match peer.request(&Request::Block(height)) {
            Response::Block(b) if b.header == *expected => Some(*b),
            _ => None,
        }
    })
}
