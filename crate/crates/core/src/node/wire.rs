use crate::codec::{put_bytes32, put_u32, put_u64, Decode, DecodeError, Encode, Reader};
use crate::consensus::{BlockHeader, FullBlock};

/// What a node advertises to a bootstrapping peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerView {
    pub peer_id: u64,
    /// Heights whose full state the peer will serve, ascending.
    pub snapshot_heights: Vec<u64>,
    /// Inclusive range of retained full blocks.
    pub block_range: Option<(u64, u64)>,
}

impl PeerView {
    pub fn has_block(&self, height: u64) -> bool {
        matches!(self.block_range, Some((lo, hi)) if (lo..=hi).contains(&height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Request {
    /// Headers of heights `from..=to`.
    Headers {
        from: u64,
        to: u64,
    },
    Block(u64),
    Snapshot(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Headers(Vec<BlockHeader>),
    Block(Box<FullBlock>),
    /// Snapshot wire form, see [`crate::ledger::StateSnapshot::encode_entries`].
    Snapshot {
        height: u64,
        entries: Vec<u8>,
    },
    NotRetained,
}

const REQ_HEADERS: u8 = 0x01;
const REQ_BLOCK: u8 = 0x02;
const REQ_SNAPSHOT: u8 = 0x03;
const RESP_HEADERS: u8 = 0x81;
const RESP_BLOCK: u8 = 0x82;
const RESP_SNAPSHOT: u8 = 0x83;
const RESP_NOT_RETAINED: u8 = 0x8f;

/// Frames are `tag(1) || len(4) || payload`.
fn frame(out: &mut Vec<u8>, tag: u8, payload: &[u8]) {
    out.push(tag);
    put_bytes32(out, payload);
}

fn unframe<'a>(r: &mut Reader<'a>) -> Result<(u8, Reader<'a>), DecodeError> {
    let tag = r.u8()?;
    Ok((tag, Reader::new(r.bytes32()?)))
}

impl Encode for Request {
    fn encode_to(&self, out: &mut Vec<u8>) {
        let mut p = Vec::with_capacity(16);
        let tag = match *self {
            Request::Headers { from, to } => {
                put_u64(&mut p, from);
                put_u64(&mut p, to);
                REQ_HEADERS
            }
            Request::Block(h) => {
                put_u64(&mut p, h);
                REQ_BLOCK
            }
            Request::Snapshot(h) => {
                put_u64(&mut p, h);
                REQ_SNAPSHOT
            }
        };
        frame(out, tag, &p);
    }
}

impl Decode for Request {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let (tag, mut p) = unframe(r)?;
        let req = match tag {
            REQ_HEADERS => Request::Headers {
                from: p.u64()?,
                to: p.u64()?,
            },
            REQ_BLOCK => Request::Block(p.u64()?),
            REQ_SNAPSHOT => Request::Snapshot(p.u64()?),
            value => {
                return Err(DecodeError::InvalidTag {
                    what: "request",
                    value,
                })
            }
        };
        p.finish()?;
        Ok(req)
    }
}

impl Encode for Response {
    fn encode_to(&self, out: &mut Vec<u8>) {
        let mut p = Vec::new();
        let tag = match self {
            Response::Headers(hs) => {
                put_u32(&mut p, hs.len() as u32);
                for h in hs {
                    h.encode_to(&mut p);
                }
                RESP_HEADERS
            }
            Response::Block(b) => {
                b.encode_to(&mut p);
                RESP_BLOCK
            }
            Response::Snapshot { height, entries } => {
                put_u64(&mut p, *height);
                p.extend_from_slice(entries);
                RESP_SNAPSHOT
            }
            Response::NotRetained => RESP_NOT_RETAINED,
        };
        frame(out, tag, &p);
    }
}

impl Decode for Response {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let (tag, mut p) = unframe(r)?;
        let resp = match tag {
            RESP_HEADERS => {
                let n = p.u32()? as usize;
                let mut hs = Vec::with_capacity(n.min(p.remaining() / 136));
                for _ in 0..n {
                    hs.push(BlockHeader::decode_from(&mut p)?);
                }
                Response::Headers(hs)
            }
            RESP_BLOCK => Response::Block(Box::new(FullBlock::decode_from(&mut p)?)),
            RESP_SNAPSHOT => {
                let height = p.u64()?;
                let entries = p.take(p.remaining())?.to_vec();
                Response::Snapshot { height, entries }
            }
            RESP_NOT_RETAINED => Response::NotRetained,
            value => {
                return Err(DecodeError::InvalidTag {
                    what: "response",
                    value,
                })
            }
        };
        p.finish()?;
        Ok(resp)
    }
}

const DUMP_MAGIC: &[u8; 5] = b"RCHN1";

/// On-disk chain: every header plus whichever full blocks were retained.
///
/// Layout: `"RCHN1" || headerCount(4) || headers || blockCount(4) ||
/// (height(4) || len(4) || block)*`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainDump {
    pub headers: Vec<BlockHeader>,
    pub blocks: Vec<(u64, FullBlock)>,
}

impl ChainDump {
    /// True when every block from height 1 to the tip is present, in order.
    pub fn is_complete(&self) -> bool {
        self.blocks.len() == self.headers.len()
            && self
                .blocks
                .iter()
                .enumerate()
                .all(|(i, (h, _))| *h == i as u64 + 1)
    }
}

impl Encode for ChainDump {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(DUMP_MAGIC);
        put_u32(out, self.headers.len() as u32);
        for h in &self.headers {
            h.encode_to(out);
        }
        put_u32(out, self.blocks.len() as u32);
        for (height, b) in &self.blocks {
            put_u32(out, u32::try_from(*height).expect("height fits in 32 bits"));
            put_bytes32(out, &b.encode());
        }
    }
}

impl Decode for ChainDump {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        if r.take(DUMP_MAGIC.len())? != DUMP_MAGIC {
            return Err(DecodeError::Malformed("chain dump magic"));
        }
        let n = r.u32()? as usize;
        let mut headers = Vec::with_capacity(n.min(r.remaining() / 136));
        for _ in 0..n {
            headers.push(BlockHeader::decode_from(r)?);
        }
        let m = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(m.min(r.remaining() / 8));
        for _ in 0..m {
            let height = r.u32()? as u64;
            blocks.push((height, FullBlock::decode(r.bytes32()?)?));
        }
        Ok(ChainDump { headers, blocks })
    }
}
