use crate::codec::{put_bytes32, put_u32, put_u64, Decode, DecodeError, Encode, Reader};
use crate::hash::{hash_framed, sha256, Digest32};
use crate::ledger::{BlockContent, Transaction};

use super::ticket::Ticket;

/// Serialized header size: four digests and an 8-byte nonce.
pub const HEADER_BYTES: usize = 136;

/// `⟨s, a_t, a_τ, a_S, ctr⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockHeader {
    /// Link to the previous header (all zero for the first block).
    pub link: Digest32,
    pub ticket_root: Digest32,
    pub txs_root: Digest32,
    pub state_root: Digest32,
    pub ctr: u64,
}

impl BlockHeader {
    /// `hash(s, a_t, a_τ, a_S)`.
    pub fn body_hash(&self) -> Digest32 {
        hash_framed(&[
            &self.link.0,
            &self.ticket_root.0,
            &self.txs_root.0,
            &self.state_root.0,
        ])
    }

    /// `hash(ctr, hash(s, a_t, a_τ, a_S))`: the lottery value of this header
    /// and the link its successor commits to.
    pub fn work_hash(&self) -> Digest32 {
        hash_framed(&[&self.ctr.to_be_bytes(), &self.body_hash().0])
    }

    /// Storage digest over the serialized header.
    pub fn digest(&self) -> Digest32 {
        sha256(&self.encode())
    }
}

impl Encode for BlockHeader {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.link.0);
        out.extend_from_slice(&self.ticket_root.0);
        out.extend_from_slice(&self.txs_root.0);
        out.extend_from_slice(&self.state_root.0);
        put_u64(out, self.ctr);
    }
}

impl Decode for BlockHeader {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(BlockHeader {
            link: r.digest()?,
            ticket_root: r.digest()?,
            txs_root: r.digest()?,
            state_root: r.digest()?,
            ctr: r.u64()?,
        })
    }
}

/// The classic header `⟨s, a_τ, a_S, ctr⟩`, used as the comparison baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitcoinHeader {
    pub link: Digest32,
    pub txs_root: Digest32,
    pub state_root: Digest32,
    pub ctr: u64,
}

impl BitcoinHeader {
    pub fn body_hash(&self) -> Digest32 {
        hash_framed(&[&self.link.0, &self.txs_root.0, &self.state_root.0])
    }

    pub fn work_hash(&self) -> Digest32 {
        hash_framed(&[&self.ctr.to_be_bytes(), &self.body_hash().0])
    }
}

/// Header plus the full ticket and transaction sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullBlock {
    pub header: BlockHeader,
    pub ticket: Ticket,
    pub txs: Vec<Transaction>,
}

impl FullBlock {
    pub fn content(&self) -> BlockContent {
        BlockContent {
            state_root: self.header.state_root,
            txs: self.txs.clone(),
            txs_root: self.header.txs_root,
        }
    }
}

impl Encode for FullBlock {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.header.encode_to(out);
        put_bytes32(out, &self.ticket.encode());
        put_u32(
            out,
            u32::try_from(self.txs.len()).expect("too many transactions"),
        );
        for tx in &self.txs {
            put_bytes32(out, &tx.encode());
        }
    }
}

impl Decode for FullBlock {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let header = BlockHeader::decode_from(r)?;
        let ticket = Ticket::decode(r.bytes32()?)?;
        let n = r.u32()? as usize;
        let mut txs = Vec::with_capacity(n.min(r.remaining() / 4));
        for _ in 0..n {
            txs.push(Transaction::decode(r.bytes32()?)?);
        }
        Ok(FullBlock {
            header,
            ticket,
            txs,
        })
    }
}
