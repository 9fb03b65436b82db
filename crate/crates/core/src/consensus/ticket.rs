use thiserror::Error;

use crate::authdict::{check_path, member, AuthDict, AuthDictError, EntryId, LookupProof};
use crate::codec::{put_bytes16, put_bytes32, put_u64, Decode, DecodeError, Encode, Reader};
use crate::hash::{hash_concat, sha256, Digest32};
use crate::ledger::{State, StateBox};

use super::{key_admissible, ChainParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TicketError {
    #[error("snapshot {0} is empty")]
    EmptySnapshot(usize),
    #[error("ticket ids collide")]
    DuplicateId,
}

/// One `(id_i → (a_S_i, π_i, box_i))` element of a ticket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketEntry {
    pub id: EntryId,
    pub state_root: Digest32,
    pub proof: LookupProof<StateBox>,
    pub item: StateBox,
}

/// Proof of holding `k` snapshots, bound to a nonce and a seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ticket {
    pub miner_key: Vec<u8>,
    pub ctr: u64,
    pub entries: Vec<TicketEntry>,
}

impl Ticket {
    /// `root(t)` over `pk → ctr` and every `id_i → (a_S_i, π_i, box_i)`.
    pub fn root(&self) -> Result<Digest32, TicketError> {
        let key_entry = (
            EntryId::from(sha256(&self.miner_key)),
            self.ctr.to_be_bytes().to_vec(),
        );
        let entries = self.entries.iter().map(|e| {
            let mut v = Vec::with_capacity(32 + 512);
            v.extend_from_slice(&e.state_root.0);
            e.proof.encode_to(&mut v);
            e.item.encode_to(&mut v);
            (e.id, v)
        });
        AuthDict::<Vec<u8>>::from_entries(std::iter::once(key_entry).chain(entries))
            .map(|d| d.root())
            .map_err(|_| TicketError::DuplicateId)
    }
}

/// The chained lookup ids: `id_1 = H(ctr || pk || s_t)`, `id_{i+1} = H(id_i || pk || s_t)`.
pub fn ticket_ids(seed: &Digest32, pk: &[u8], ctr: u64, count: usize) -> Vec<EntryId> {
    let mut ids = Vec::with_capacity(count);
    let first = hash_concat(&[&ctr.to_be_bytes(), pk, &seed.0]);
    ids.push(EntryId::from(first));
    for _ in 1..count {
        let prev = ids.last().unwrap().0;
        ids.push(EntryId::from(hash_concat(&[&prev, pk, &seed.0])));
    }
    ids.truncate(count);
    ids
}

/// Builds the ticket for nonce `ctr` from the key's snapshots, in
/// selection order, returning its root alongside it.
pub fn gen_ticket(
    snapshots: &[&State],
    seed: &Digest32,
    pk: &[u8],
    ctr: u64,
) -> Result<(Digest32, Ticket), TicketError> {
    let ids = ticket_ids(seed, pk, ctr, snapshots.len());
    let mut entries = Vec::with_capacity(snapshots.len());
    for (i, (state, id)) in snapshots.iter().zip(ids).enumerate() {
        let proof = state.generate(&id).map_err(|e| match e {
            AuthDictError::EmptyDictionary => TicketError::EmptySnapshot(i),
            other => unreachable!("generate only fails on empty input: {other}"),
        })?;
        let item = proof.anchors[0].value;
        entries.push(TicketEntry {
            id,
            state_root: state.root(),
            proof,
            item,
        });
    }
    let ticket = Ticket {
        miner_key: pk.to_vec(),
        ctr,
        entries,
    };
    Ok((ticket.root()?, ticket))
}

/// Replays ticket generation with the supplied proofs in place of lookups.
///
/// `committed_roots[i]` is the state root the chain committed to at the
/// height selected for index `i` of the ticket's key.
pub fn validate_ticket(
    ticket: &Ticket,
    seed: &Digest32,
    committed_roots: &[Digest32],
    ticket_root: &Digest32,
    params: &ChainParams,
) -> bool {
    let k = params.snapshots;
    if ticket.entries.len() != k || committed_roots.len() != k {
        return false;
    }
    if !key_admissible(&ticket.miner_key, params.window, k) {
        return false;
    }
    let ids = ticket_ids(seed, &ticket.miner_key, ticket.ctr, k);
    for ((entry, id), root) in ticket.entries.iter().zip(&ids).zip(committed_roots) {
        if entry.id != *id || entry.state_root != *root {
            return false;
        }
        if !check_path(root, id, &entry.proof) {
            return false;
        }
        match member(root, &entry.proof) {
            Ok(anchor) if anchor.value == entry.item => {}
            _ => return false,
        }
    }
    ticket.root().as_ref() == Ok(ticket_root)
}

impl Encode for Ticket {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_bytes16(out, &self.miner_key);
        put_u64(out, self.ctr);
        out.push(u8::try_from(self.entries.len()).expect("at most 255 ticket entries"));
        for e in &self.entries {
            out.extend_from_slice(&e.id.0);
            out.extend_from_slice(&e.state_root.0);
            put_bytes32(out, &e.proof.encode());
            e.item.encode_to(out);
        }
    }
}

impl Decode for Ticket {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let miner_key = r.bytes16()?.to_vec();
        let ctr = r.u64()?;
        let n = r.u8()?;
        let mut entries = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let id = EntryId(r.digest()?.0);
            let state_root = r.digest()?;
            let proof = LookupProof::decode(r.bytes32()?)?;
            let item = StateBox::decode_from(r)?;
            entries.push(TicketEntry {
                id,
                state_root,
                proof,
                item,
            });
        }
        Ok(Ticket {
            miner_key,
            ctr,
            entries,
        })
    }
}
