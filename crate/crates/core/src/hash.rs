//! The protocol-wide 256-bit hash and its two input conventions.
//!
//! `z || w` in the protocol is plain concatenation ([`hash_concat`]); the
//! multi-argument form `hash(a, b, ...)` frames every argument with a 2-byte
//! big-endian length ([`hash_framed`]) so tuple boundaries are unambiguous.

use std::fmt;

use sha2::{Digest as _, Sha256};

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest32(pub [u8; 32]);

impl Digest32 {
    pub const ZERO: Digest32 = Digest32([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0u8; 32]
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Digest32(arr))
    }

    /// Interprets the digest as a big-endian 256-bit integer and reduces it mod `m`.
    pub fn mod_u64(&self, m: u64) -> u64 {
        assert!(m > 0, "modulus must be positive");
        let m = m as u128;
        self.0
            .iter()
            .fold(0u128, |acc, &b| ((acc << 8) | b as u128) % m) as u64
    }

    /// The top `bits` bits (1..=64) as an unsigned integer.
    pub fn top_bits(&self, bits: u32) -> u64 {
        assert!((1..=64).contains(&bits), "bit width must be in 1..=64");
        let mut head = [0u8; 8];
        head.copy_from_slice(&self.0[..8]);
        let v = u64::from_be_bytes(head);
        if bits == 64 {
            v
        } else {
            v >> (64 - bits)
        }
    }
}

impl fmt::Debug for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest32({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<[u8; 32]> for Digest32 {
    fn from(b: [u8; 32]) -> Self {
        Digest32(b)
    }
}

impl AsRef<[u8]> for Digest32 {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

pub fn sha256(data: &[u8]) -> Digest32 {
    Digest32(Sha256::digest(data).into())
}

/// `hash(p0 || p1 || ...)`.
pub fn hash_concat(parts: &[&[u8]]) -> Digest32 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest32(h.finalize().into())
}

/// `hash(p0, p1, ...)`: each argument prefixed by its 2-byte big-endian length.
pub fn hash_framed(parts: &[&[u8]]) -> Digest32 {
    let mut h = Sha256::new();
    for p in parts {
        let len = u16::try_from(p.len()).expect("framed hash argument longer than 65535 bytes");
        h.update(len.to_be_bytes());
        h.update(p);
    }
    Digest32(h.finalize().into())
}
