//! Frozen values computed independently with Python's hashlib.

use rollerchain::codec::Encode;
use rollerchain::consensus::{
    choose_snapshots, snapshot_offsets, ticket_ids, ticket_seed, BlockHeader, Difficulty,
    HEADER_BYTES,
};
use rollerchain::hash::Digest32;
use rollerchain::ledger::{genesis_state, lock_for, StateBox, FAUCET_PREIMAGE};

fn hex(d: &Digest32) -> String {
    d.to_hex()
}

fn header() -> BlockHeader {
    BlockHeader {
        link: Digest32([1; 32]),
        ticket_root: Digest32([2; 32]),
        txs_root: Digest32([3; 32]),
        state_root: Digest32([4; 32]),
        ctr: 42,
    }
}

#[test]
fn three_box_genesis_root() {
    let g = genesis_state(3, 100);
    assert_eq!(
        hex(&g.root()),
        "94223bc93af6352ecfd91dfeb13b9c06b57739726aa626a83c22194468852501"
    );
    let b = StateBox::new(100, lock_for(FAUCET_PREIMAGE), 0);
    assert_eq!(
        b.id().to_hex(),
        "68ff7671c8a9861f408f5d1192f22807fb290def39882c5f8d6146295c5b2979"
    );
}

#[test]
fn snapshot_heights_for_a_fixed_key() {
    assert_eq!(snapshot_offsets(b"alice", 100, 3), vec![51, 93, 58]);
    assert_eq!(
        choose_snapshots(1000, b"alice", 100, 3),
        vec![951, 993, 958]
    );
    // Short chain: two offsets fall below genesis and clamp to it.
    assert_eq!(choose_snapshots(40, b"alice", 100, 3), vec![0, 33, 0]);
}

#[test]
fn header_bytes_and_link_hash() {
    let h = header();
    let bytes = h.encode();
    assert_eq!(bytes.len(), HEADER_BYTES);
    assert_eq!(HEADER_BYTES, 136);
    assert_eq!(&bytes[128..], &[0, 0, 0, 0, 0, 0, 0, 42]);
    assert_eq!(
        hex(&h.body_hash()),
        "fb90e7cccca97613a24eba83d1292dea6c5fea48de0a470996f89b81a370c0fc"
    );
    assert_eq!(
        hex(&h.work_hash()),
        "e58d7a349541993d52e7faf4aa0f4e89edd996f79408923fe0f3cb7307ab9c2f"
    );
}

#[test]
fn ticket_seed_and_id_chain() {
    let h = header();
    let seed = ticket_seed(&h.link, &h.state_root, &h.txs_root);
    assert_eq!(
        hex(&seed),
        "d0a0c94b90dd3926bfef912355ad8a1ded46900ca814fad13d9443be1f9cf6d2"
    );
    let ids: Vec<String> = ticket_ids(&seed, b"alice", 5, 3)
        .iter()
        .map(|i| i.to_hex())
        .collect();
    assert_eq!(
        ids,
        [
            "3022c92a1be4195ac17acc3e624e4a7954384eec6d493590d7798bb8839f11b0",
            "61f45aa4e1ec39eccf686c6c751aa2bfe315374d77be97e36d3606d71c6b4649",
            "53cd5498e5aac36e30884086bc5bf7db0e8e96796b0bad71f3e95daa52c702fa",
        ]
    );
}

#[test]
fn acceptance_point_success_rate() {
    let d = Difficulty::new(42_949_673, 10, 32).unwrap();
    assert!((d.round_success_probability() - 0.095_617_925_076_273_42).abs() < 1e-12);
    assert!((d.linearized_success() - 0.1).abs() < 1e-7);
}
