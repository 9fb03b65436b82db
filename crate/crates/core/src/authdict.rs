//! Authenticated dictionary over fixed-length ids.
//!
//! Entries are kept sorted by id and hashed into a binary Merkle tree whose
//! shape depends only on the number of entries: leaves are paired left to
//! right on every level and an odd trailing node is carried up unchanged.
//! The root is therefore a function of the entry set alone.
//!
//! Leaves hash as `H(0x00 || id || value)` and internal nodes as
//! `H(0x01 || left || right)`. The empty dictionary has the all-zero root.
//!
//! Lookups for absent ids produce non-membership proofs that name the
//! neighbouring member(s): two adjacent leaves bracketing the id, or the
//! extreme leaf when the id lies outside the key range. Adjacency is proven
//! structurally. The lower leaf is the rightmost leaf of the left child of
//! their common ancestor and the upper leaf is the leftmost of the right
//! child, so their sibling runs are all-`Left` and all-`Right` respectively.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::codec::{put_bytes16, put_u16, Decode, DecodeError, Encode, Reader};
use crate::hash::Digest32;

const LEAF_TAG: u8 = 0x00;
const NODE_TAG: u8 = 0x01;

/// Key of a dictionary entry.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EntryId(pub [u8; 32]);

impl EntryId {
    /// Sequence position encoded as a big-endian key, so key order is index order.
    pub fn from_index(i: u64) -> Self {
        let mut b = [0u8; 32];
        b[24..].copy_from_slice(&i.to_be_bytes());
        EntryId(b)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl From<Digest32> for EntryId {
    fn from(d: Digest32) -> Self {
        EntryId(d.0)
    }
}

impl fmt::Debug for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntryId({})", &self.to_hex()[..16])
    }
}

/// A value storable in an [`AuthDict`].
///
/// Values whose id is derived from their own content report it through
/// `intrinsic_id`; the dictionary and proof checks then refuse entries filed
/// under any other id.
pub trait LeafValue: Encode + Decode + Clone {
    fn intrinsic_id(&self) -> Option<EntryId> {
        None
    }
}

impl LeafValue for Vec<u8> {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthDictError {
    #[error("dictionary is empty; no member can anchor a proof")]
    EmptyDictionary,
    #[error("proof does not verify against the given root")]
    InvalidProof,
    #[error("removal of absent id {0:?}")]
    MissingRemoval(EntryId),
    #[error("insertion of id {0:?} which is already present")]
    DuplicateInsertion(EntryId),
    #[error("value content does not hash to its id {0:?}")]
    IdMismatch(EntryId),
}

#[derive(Debug, Clone)]
struct Entry<V> {
    id: EntryId,
    value: V,
    leaf: Digest32,
}

/// Sorted id → value map with a cached Merkle tree.
#[derive(Clone)]
pub struct AuthDict<V> {
    entries: Vec<Entry<V>>,
    levels: OnceLock<Vec<Vec<Digest32>>>,
}

impl<V> Default for AuthDict<V> {
    fn default() -> Self {
        AuthDict {
            entries: Vec::new(),
            levels: OnceLock::new(),
        }
    }
}

impl<V: fmt::Debug> fmt::Debug for AuthDict<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuthDict")
            .field("len", &self.entries.len())
            .finish_non_exhaustive()
    }
}

pub(crate) fn leaf_hash<V: Encode>(id: &EntryId, value: &V) -> Digest32 {
    let mut buf = Vec::with_capacity(1 + 32 + 64);
    buf.push(LEAF_TAG);
    buf.extend_from_slice(&id.0);
    value.encode_to(&mut buf);
    Digest32(Sha256::digest(&buf).into())
}

fn node_hash(left: &Digest32, right: &Digest32) -> Digest32 {
    let mut h = Sha256::new();
    h.update([NODE_TAG]);
    h.update(left.0);
    h.update(right.0);
    Digest32(h.finalize().into())
}

fn check_intrinsic<V: LeafValue>(id: &EntryId, value: &V) -> Result<(), AuthDictError> {
    match value.intrinsic_id() {
        Some(real) if real != *id => Err(AuthDictError::IdMismatch(*id)),
        _ => Ok(()),
    }
}

impl<V: LeafValue> AuthDict<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a dictionary from unordered entries.
    pub fn from_entries<I>(entries: I) -> Result<Self, AuthDictError>
    where
        I: IntoIterator<Item = (EntryId, V)>,
    {
        let mut es = entries
            .into_iter()
            .map(|(id, value)| {
                check_intrinsic(&id, &value)?;
                let leaf = leaf_hash(&id, &value);
                Ok(Entry { id, value, leaf })
            })
            .collect::<Result<Vec<_>, AuthDictError>>()?;
        es.sort_unstable_by_key(|e| e.id);
        if let Some(w) = es.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(AuthDictError::DuplicateInsertion(w[0].id));
        }
        Ok(AuthDict {
            entries: es,
            levels: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn position(&self, id: &EntryId) -> Result<usize, usize> {
        self.entries.binary_search_by(|e| e.id.cmp(id))
    }

    pub fn get(&self, id: &EntryId) -> Option<&V> {
        self.position(id).ok().map(|i| &self.entries[i].value)
    }

    pub fn contains(&self, id: &EntryId) -> bool {
        self.position(id).is_ok()
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&EntryId, &V)> + '_ {
        self.entries.iter().map(|e| (&e.id, &e.value))
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &EntryId> + '_ {
        self.entries.iter().map(|e| &e.id)
    }

    /// The entry at sorted position `i`.
    pub fn entry_at(&self, i: usize) -> Option<(&EntryId, &V)> {
        self.entries.get(i).map(|e| (&e.id, &e.value))
    }

    /// Inserts one entry, invalidating the cached tree.
    pub fn insert(&mut self, id: EntryId, value: V) -> Result<(), AuthDictError> {
        check_intrinsic(&id, &value)?;
        match self.position(&id) {
            Ok(_) => Err(AuthDictError::DuplicateInsertion(id)),
            Err(pos) => {
                let leaf = leaf_hash(&id, &value);
                self.entries.insert(pos, Entry { id, value, leaf });
                self.levels = OnceLock::new();
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, id: &EntryId) -> Result<V, AuthDictError> {
        match self.position(id) {
            Ok(pos) => {
                self.levels = OnceLock::new();
                Ok(self.entries.remove(pos).value)
            }
            Err(_) => Err(AuthDictError::MissingRemoval(*id)),
        }
    }

    fn levels(&self) -> &Vec<Vec<Digest32>> {
        self.levels.get_or_init(|| {
            let mut levels = vec![self.entries.iter().map(|e| e.leaf).collect::<Vec<_>>()];
            while levels.last().map_or(0, Vec::len) > 1 {
                let below = levels.last().unwrap();
                let above = below
                    .chunks(2)
                    .map(|pair| match pair {
                        [l, r] => node_hash(l, r),
                        [single] => *single,
                        _ => unreachable!(),
                    })
                    .collect();
                levels.push(above);
            }
            levels
        })
    }

    pub fn root(&self) -> Digest32 {
        if self.entries.is_empty() {
            return Digest32::ZERO;
        }
        self.levels().last().unwrap()[0]
    }

    pub fn check_root(&self, expected: &Digest32) -> bool {
        self.root() == *expected
    }

    /// Sibling path from leaf `idx` (at `level`) to the root.
    fn path_from(&self, mut idx: usize, level: usize) -> Vec<PathStep> {
        let levels = self.levels();
        let mut path = Vec::new();
        for row in &levels[level..levels.len() - 1] {
            let sib = idx ^ 1;
            if sib < row.len() {
                let side = if idx & 1 == 1 {
                    Side::Left
                } else {
                    Side::Right
                };
                path.push(PathStep {
                    side,
                    digest: row[sib],
                });
            }
            idx >>= 1;
        }
        path
    }

    fn anchor(&self, i: usize) -> Anchor<V> {
        let e = &self.entries[i];
        Anchor {
            id: e.id,
            value: e.value.clone(),
        }
    }

    /// Proof of membership or non-membership for `id`.
    pub fn generate(&self, id: &EntryId) -> Result<LookupProof<V>, AuthDictError> {
        if self.entries.is_empty() {
            return Err(AuthDictError::EmptyDictionary);
        }
        let proof = match self.position(id) {
            Ok(i) => LookupProof {
                kind: ProofKind::Membership,
                queried: *id,
                anchors: vec![self.anchor(i)],
                path: self.path_from(i, 0),
            },
            Err(0) => LookupProof {
                kind: ProofKind::BelowMin,
                queried: *id,
                anchors: vec![self.anchor(0)],
                path: self.path_from(0, 0),
            },
            Err(pos) if pos == self.entries.len() => LookupProof {
                kind: ProofKind::AboveMax,
                queried: *id,
                anchors: vec![self.anchor(pos - 1)],
                path: self.path_from(pos - 1, 0),
            },
            Err(pos) => LookupProof {
                kind: ProofKind::Between,
                queried: *id,
                anchors: vec![self.anchor(pos - 1), self.anchor(pos)],
                path: self.bracket_path(pos - 1),
            },
        };
        Ok(proof)
    }

    /// Joint path for the adjacent leaves `lo` and `lo + 1`.
    fn bracket_path(&self, lo: usize) -> Vec<PathStep> {
        let levels = self.levels();
        let (mut a, mut b) = (lo, lo + 1);
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (level, row) in levels.iter().enumerate() {
            if a >> 1 == b >> 1 {
                let mut path = lower;
                path.append(&mut upper);
                path.push(PathStep {
                    side: Side::Join,
                    digest: Digest32::ZERO,
                });
                path.extend(self.path_from(a >> 1, level + 1));
                return path;
            }
            // `a` is a right child here, `b` a left child or carried up.
            lower.push(PathStep {
                side: Side::Left,
                digest: row[a - 1],
            });
            if b + 1 < row.len() {
                upper.push(PathStep {
                    side: Side::Right,
                    digest: row[b + 1],
                });
            }
            a >>= 1;
            b >>= 1;
        }
        unreachable!("adjacent leaves always share an ancestor")
    }

    /// Applies removals then insertions as one new version.
    ///
    /// `removals` must all be present; inserted ids must be absent from the
    /// dictionary after removals and unique among themselves.
    pub fn batch_update<I>(
        &self,
        removals: &[EntryId],
        insertions: I,
    ) -> Result<Self, AuthDictError>
    where
        I: IntoIterator<Item = (EntryId, V)>,
    {
        let removed: BTreeSet<EntryId> = removals.iter().copied().collect();
        for id in &removed {
            if !self.contains(id) {
                return Err(AuthDictError::MissingRemoval(*id));
            }
        }
        let mut added = insertions
            .into_iter()
            .map(|(id, value)| {
                check_intrinsic(&id, &value)?;
                let leaf = leaf_hash(&id, &value);
                Ok(Entry { id, value, leaf })
            })
            .collect::<Result<Vec<_>, AuthDictError>>()?;
        added.sort_unstable_by_key(|e| e.id);
        if let Some(w) = added.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(AuthDictError::DuplicateInsertion(w[0].id));
        }

        let mut merged = Vec::with_capacity(self.entries.len() + added.len());
        let mut kept = self
            .entries
            .iter()
            .filter(|e| !removed.contains(&e.id))
            .peekable();
        let mut added = added.into_iter().peekable();
        loop {
            let take_kept = match (kept.peek(), added.peek()) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(k), Some(a)) => match k.id.cmp(&a.id) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => return Err(AuthDictError::DuplicateInsertion(a.id)),
                },
            };
            if take_kept {
                merged.push(kept.next().unwrap().clone());
            } else {
                merged.push(added.next().unwrap());
            }
        }
        Ok(AuthDict {
            entries: merged,
            levels: OnceLock::new(),
        })
    }

    /// Longest sibling path over all leaves; depends only on `len()`.
    pub fn max_path_len(&self) -> usize {
        max_path_len_for(self.entries.len())
    }
}

/// Longest leaf-to-root sibling path in a tree of `n` leaves.
pub fn max_path_len_for(n: usize) -> usize {
    let mut width = n;
    let mut depth = 0;
    while width > 1 {
        width = width.div_ceil(2);
        depth += 1;
    }
    depth
}

/// Which side of the running hash a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left = 0,
    Right = 1,
    /// Combines the two bracket anchors' subtrees; carries a zero digest.
    Join = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub side: Side,
    pub digest: Digest32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofKind {
    Membership = 0,
    /// Absent id strictly between two adjacent members.
    Between = 1,
    /// Absent id above the maximum key; the single anchor is the rightmost leaf.
    AboveMax = 2,
    /// Absent id below the minimum key; the single anchor is the leftmost leaf.
    BelowMin = 3,
}

impl ProofKind {
    pub fn is_membership(self) -> bool {
        self == ProofKind::Membership
    }

    fn from_byte(b: u8) -> Result<Self, DecodeError> {
        Ok(match b {
            0 => ProofKind::Membership,
            1 => ProofKind::Between,
            2 => ProofKind::AboveMax,
            3 => ProofKind::BelowMin,
            value => {
                return Err(DecodeError::InvalidTag {
                    what: "proof kind",
                    value,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor<V> {
    pub id: EntryId,
    pub value: V,
}

/// A (non-)membership proof; see the module docs for the path layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupProof<V> {
    pub kind: ProofKind,
    pub queried: EntryId,
    pub anchors: Vec<Anchor<V>>,
    pub path: Vec<PathStep>,
}

fn fold(mut acc: Digest32, steps: &[PathStep]) -> Option<Digest32> {
    for step in steps {
        acc = match step.side {
            Side::Left => node_hash(&step.digest, &acc),
            Side::Right => node_hash(&acc, &step.digest),
            Side::Join => return None,
        };
    }
    Some(acc)
}

impl<V: LeafValue> LookupProof<V> {
    fn anchor_leaf(&self, i: usize) -> Option<Digest32> {
        let a = self.anchors.get(i)?;
        check_intrinsic(&a.id, &a.value).ok()?;
        Some(leaf_hash(&a.id, &a.value))
    }

    /// Root implied by the proof, if the proof is structurally well formed.
    fn implied_root(&self) -> Option<Digest32> {
        let q = self.queried;
        match self.kind {
            ProofKind::Membership => {
                (self.anchors.len() == 1 && self.anchors[0].id == q).then_some(())?;
                fold(self.anchor_leaf(0)?, &self.path)
            }
            ProofKind::AboveMax => {
                (self.anchors.len() == 1 && self.anchors[0].id < q).then_some(())?;
                self.path
                    .iter()
                    .all(|s| s.side == Side::Left)
                    .then_some(())?;
                fold(self.anchor_leaf(0)?, &self.path)
            }
            ProofKind::BelowMin => {
                (self.anchors.len() == 1 && q < self.anchors[0].id).then_some(())?;
                self.path
                    .iter()
                    .all(|s| s.side == Side::Right)
                    .then_some(())?;
                fold(self.anchor_leaf(0)?, &self.path)
            }
            ProofKind::Between => {
                (self.anchors.len() == 2).then_some(())?;
                (self.anchors[0].id < q && q < self.anchors[1].id).then_some(())?;
                let join = self.path.iter().position(|s| s.side == Side::Join)?;
                self.path[join].digest.is_zero().then_some(())?;
                let (below, above) = (&self.path[..join], &self.path[join + 1..]);
                let split = below
                    .iter()
                    .position(|s| s.side != Side::Left)
                    .unwrap_or(below.len());
                let (lower_run, upper_run) = below.split_at(split);
                upper_run
                    .iter()
                    .all(|s| s.side == Side::Right)
                    .then_some(())?;
                let lo = fold(self.anchor_leaf(0)?, lower_run)?;
                let hi = fold(self.anchor_leaf(1)?, upper_run)?;
                fold(node_hash(&lo, &hi), above)
            }
        }
    }

    /// Per-anchor leaf-to-root path lengths.
    pub fn anchor_path_lengths(&self) -> Vec<usize> {
        match self.kind {
            ProofKind::Between => {
                let join = self
                    .path
                    .iter()
                    .position(|s| s.side == Side::Join)
                    .unwrap_or(self.path.len());
                let lower = self.path[..join]
                    .iter()
                    .filter(|s| s.side == Side::Left)
                    .count();
                let upper = join - lower;
                let common = self.path.len().saturating_sub(join + 1);
                vec![lower + 1 + common, upper + 1 + common]
            }
            _ => vec![self.path.len()],
        }
    }
}

/// Checks `proof` for `id` against a dictionary root.
pub fn check_path<V: LeafValue>(root: &Digest32, id: &EntryId, proof: &LookupProof<V>) -> bool {
    proof.queried == *id && proof.implied_root().as_ref() == Some(root)
}

/// The member a verified proof names: the anchor for membership, otherwise
/// the lower bracketing neighbour, or the only anchor at either extreme.
pub fn member<'p, V: LeafValue>(
    root: &Digest32,
    proof: &'p LookupProof<V>,
) -> Result<&'p Anchor<V>, AuthDictError> {
    if !check_path(root, &proof.queried, proof) {
        return Err(AuthDictError::InvalidProof);
    }
    Ok(&proof.anchors[0])
}

impl<V: Encode> Encode for LookupProof<V> {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.push(self.kind as u8);
        out.extend_from_slice(&self.queried.0);
        out.push(u8::try_from(self.anchors.len()).expect("at most two anchors"));
        for a in &self.anchors {
            out.extend_from_slice(&a.id.0);
            put_bytes16(out, &a.value.encode());
        }
        put_u16(out, u16::try_from(self.path.len()).expect("path too long"));
        for s in &self.path {
            out.push(s.side as u8);
            out.extend_from_slice(&s.digest.0);
        }
    }
}

impl<V: Decode> Decode for LookupProof<V> {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = ProofKind::from_byte(r.u8()?)?;
        let queried = EntryId(r.digest()?.0);
        let count = r.u8()?;
        if !(1..=2).contains(&count) {
            return Err(DecodeError::Malformed("anchor count must be 1 or 2"));
        }
        let mut anchors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let id = EntryId(r.digest()?.0);
            let value = V::decode(r.bytes16()?)?;
            anchors.push(Anchor { id, value });
        }
        let len = r.u16()? as usize;
        let mut path = Vec::with_capacity(len.min(64));
        for _ in 0..len {
            let side = match r.u8()? {
                0 => Side::Left,
                1 => Side::Right,
                2 => Side::Join,
                value => {
                    return Err(DecodeError::InvalidTag {
                        what: "path side",
                        value,
                    })
                }
            };
            path.push(PathStep {
                side,
                digest: r.digest()?,
            });
        }
        Ok(LookupProof {
            kind,
            queried,
            anchors,
            path,
        })
    }
}
