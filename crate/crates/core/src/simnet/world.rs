use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rand::Rng;

use crate::codec::{Decode, Encode};
use crate::consensus::{
    choose_snapshots, key_admissible, ticket_seed, validate_header_chain, validate_ticket,
    BlockHeader, ChainParams, FullBlock, HashMeter,
};
use crate::hash::{hash_concat, sha256, Digest32};
use crate::ledger::{content_valid, genesis_state, BlockContent, StateSnapshot};
use crate::node::{MinerKey, NodeConfig, NodeError, NodeStore, Retention};

use super::config::{ConfigError, SimConfig};
use super::transcript::Transcript;
use super::wallet::Wallet;
use super::{stream, ADVERSARY_STREAM, ENVIRONMENT_STREAM};

/// A broadcast message as the network carries it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub origin: usize,
    pub payload: Vec<u8>,
}

struct Party {
    honest: bool,
    store: NodeStore,
    /// Every block heard of, by work hash.
    pool: HashMap<Digest32, Rc<FullBlock>>,
    /// Work hash → height, for the adopted chain.
    index: HashMap<Digest32, u64>,
    hashes: Vec<Digest32>,
    /// Privately mined blocks not yet released (adversaries only).
    withheld: Vec<Rc<FullBlock>>,
    /// Longest public chain seen.
    best_public: u64,
}

impl Party {
    fn sync_index(&mut self, fork_point: u64) {
        for h in self.hashes.drain(fork_point as usize..) {
            self.index.remove(&h);
        }
        for (i, header) in self.store.headers()[fork_point as usize..]
            .iter()
            .enumerate()
        {
            let w = header.work_hash();
            self.index.insert(w, fork_point + i as u64 + 1);
            self.hashes.push(w);
        }
    }

    /// The branch ending in `tip`, walked back through the pool to the
    /// adopted chain: `(fork point, blocks above it in order)`.
    fn branch(&self, tip: &Rc<FullBlock>) -> Option<(u64, Vec<Rc<FullBlock>>)> {
        let mut chain = vec![tip.clone()];
        let fork_point = loop {
            let link = chain.last().unwrap().header.link;
            if link == Digest32::ZERO {
                break 0;
            }
            if let Some(&h) = self.index.get(&link) {
                break h;
            }
            chain.push(self.pool.get(&link)?.clone());
        };
        chain.reverse();
        Some((fork_point, chain))
    }
}

/// Outcome of auditing one adopted chain from scratch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainAudit {
    pub party: usize,
    pub height: u64,
    pub headers_ok: bool,
    pub content_ok: bool,
    pub tickets_ok: bool,
}

impl ChainAudit {
    pub fn passed(&self) -> bool {
        self.headers_ok && self.content_ok && self.tickets_ok
    }
}

/// Round-based synchronous network: messages broadcast in round `r` reach
/// every party in round `r + 1`; each party gets at most `q` lottery
/// queries per round.
pub struct World {
    config: SimConfig,
    params: ChainParams,
    genesis: StateSnapshot,
    parties: Vec<Party>,
    wallet: Wallet,
    inbox: Vec<Envelope>,
    registry: HashMap<Digest32, Rc<FullBlock>>,
    transcript: Transcript,
    violations: Vec<String>,
    round: u64,
    tamper_payloads: bool,
    blocked_mutations: u64,
}

/// Derives an admissible mining key for `party`.
pub fn party_key(seed: u64, party: usize, params: &ChainParams) -> Vec<u8> {
    (0u64..)
        .map(|attempt| {
            hash_concat(&[
                b"party-key",
                &seed.to_be_bytes(),
                &(party as u64).to_be_bytes(),
                &attempt.to_be_bytes(),
            ])
            .0
            .to_vec()
        })
        .find(|pk| key_admissible(pk, params.window, params.snapshots))
        .expect("some key is admissible")
}

impl World {
    pub fn new(config: &SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let params = config.chain_params()?;
        let genesis = genesis_state(config.genesis_boxes, config.genesis_value);
        let mut wallet = Wallet::new(config.state_target, config.fee_direction);
        let parties = (0..config.parties)
            .map(|i| {
                let payout = wallet.learn(format!("payout-{}-{i}", config.seed).into_bytes());
                let key = MinerKey {
                    pk: party_key(config.seed, i, &params),
                    payout,
                };
                let retention = if i < config.archive_nodes {
                    Retention::Archive
                } else {
                    Retention::Rational
                };
                Party {
                    honest: i < config.parties - config.adversaries,
                    store: NodeStore::new(
                        genesis.clone(),
                        NodeConfig::miner(params, key, retention),
                    ),
                    pool: HashMap::new(),
                    index: HashMap::new(),
                    hashes: Vec::new(),
                    withheld: Vec::new(),
                    best_public: 0,
                }
            })
            .collect();
        Ok(World {
            config: config.clone(),
            params,
            genesis,
            parties,
            wallet,
            inbox: Vec::new(),
            registry: HashMap::new(),
            transcript: Transcript::new(),
            violations: Vec::new(),
            round: 0,
            tamper_payloads: false,
            blocked_mutations: 0,
        })
    }

    /// Makes the adversary try to rewrite message contents; the network
    /// refuses and delivers the original bytes.
    pub fn set_tamper_payloads(&mut self, on: bool) {
        self.tamper_payloads = on;
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn genesis(&self) -> &StateSnapshot {
        &self.genesis
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    pub fn store(&self, party: usize) -> &NodeStore {
        &self.parties[party].store
    }

    pub fn is_honest(&self, party: usize) -> bool {
        self.parties[party].honest
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn blocked_mutations(&self) -> u64 {
        self.blocked_mutations
    }

    /// Height of the longest chain held by an honest party.
    pub fn honest_height(&self) -> u64 {
        self.parties
            .iter()
            .filter(|p| p.honest)
            .map(|p| p.store.height())
            .max()
            .unwrap_or(0)
    }

    /// A block by its work hash, if it was ever mined in this world.
    pub fn block_by_hash(&self, work: &Digest32) -> Option<&FullBlock> {
        self.registry.get(work).map(|b| b.as_ref())
    }

    fn violation(&mut self, what: String) {
        self.transcript
            .record(self.round, "violation", &[("what", &quote(&what))]);
        self.violations.push(what);
    }

    /// One round: deliver, read input and mine, broadcast.
    pub fn step(&mut self) {
        self.round += 1;
        let r = self.round;

        // (1) Delivery of everything broadcast last round.
        let sent = std::mem::take(&mut self.inbox);
        let mut adv_rng = stream(self.config.seed, ADVERSARY_STREAM, r);
        let mut blocks = Vec::with_capacity(sent.len());
        for env in sent {
            let delivered = self.adversary_pass(&env, &mut adv_rng);
            match FullBlock::decode(&delivered.payload) {
                Ok(b) => blocks.push(Rc::new(b)),
                Err(e) => self.violation(format!(
                    "undecodable payload from {}: {e}",
                    delivered.origin
                )),
            }
        }
        if !blocks.is_empty() {
            let deliveries = blocks.len() * self.parties.len();
            self.transcript.record(
                r,
                "deliver",
                &[("messages", &blocks.len()), ("deliveries", &deliveries)],
            );
            for p in 0..self.parties.len() {
                self.receive(p, &blocks);
            }
        }

        // (2) Input and mining.
        let reference = (0..self.parties.len())
            .filter(|&i| self.parties[i].honest)
            .max_by_key(|&i| (self.parties[i].store.height(), std::cmp::Reverse(i)))
            .expect("an honest party exists");
        let mut env_rng = stream(self.config.seed, ENVIRONMENT_STREAM, r);
        let tip = self.parties[reference].store.tip().clone();
        let candidates = self
            .wallet
            .transactions(&tip, self.config.tx_rate, &mut env_rng);

        let mut outbox = Vec::new();
        for p in 0..self.parties.len() {
            // A fresh payout lock each round keeps the coinbase, and so the
            // lottery input, from repeating when no transactions arrive.
            let payout = self
                .wallet
                .learn(format!("payout-{}-{p}-{r}", self.config.seed).into_bytes());
            self.parties[p].store.set_payout(payout);
            let mut meter = HashMeter::new(self.config.queries);
            let mined = self.parties[p].store.mine(&candidates, &mut meter);
            if meter.used() > self.config.queries {
                self.violation(format!("party {p} used {} queries", meter.used()));
            }
            let block = match mined {
                Ok(Some(b)) => Rc::new(b),
                Ok(None) => continue,
                Err(e) => {
                    self.violation(format!("party {p} could not build a ticket: {e}"));
                    continue;
                }
            };
            let party = &mut self.parties[p];
            let before = party.store.height();
            if let Err(e) = party.store.on_new_block((*block).clone()) {
                self.violation(format!("party {p} rejected its own block: {e}"));
                continue;
            }
            party.sync_index(before);
            let work = block.header.work_hash();
            party.pool.insert(work, block.clone());
            self.registry.insert(work, block.clone());
            let height = before + 1;
            if party.honest {
                outbox.push(Envelope {
                    origin: p,
                    payload: block.encode(),
                });
                self.transcript.record(
                    r,
                    "mined",
                    &[("party", &p), ("height", &height), ("block", &short(&work))],
                );
            } else {
                party.withheld.push(block);
                self.transcript.record(
                    r,
                    "mined-private",
                    &[("party", &p), ("height", &height), ("block", &short(&work))],
                );
            }
        }

        // Adversaries release their branch once far enough ahead, or as soon
        // as the public chain moves while they still lead.
        for p in 0..self.parties.len() {
            let party = &mut self.parties[p];
            if party.honest || party.withheld.is_empty() {
                continue;
            }
            let lead = party.store.height().saturating_sub(party.best_public);
            let own_pk = &party
                .store
                .config()
                .miner
                .as_ref()
                .expect("parties mine")
                .pk;
            let public_moved = blocks.iter().any(|b| b.ticket.miner_key != *own_pk);
            if lead >= self.config.withhold || public_moved || lead == 0 {
                let released = std::mem::take(&mut party.withheld);
                self.transcript
                    .record(r, "release", &[("party", &p), ("blocks", &released.len())]);
                for b in released {
                    outbox.push(Envelope {
                        origin: p,
                        payload: b.encode(),
                    });
                }
            }
        }

        // (3) Broadcast: delivered next round.
        self.inbox = outbox;

        if r.is_multiple_of(self.config.storage_every) {
            self.checkpoint();
        }
    }

    /// The adversary may rewrite the origin; any change to the payload is
    /// refused and the original bytes are delivered.
    fn adversary_pass(&mut self, env: &Envelope, rng: &mut impl Rng) -> Envelope {
        if self.config.adversaries == 0 {
            return env.clone();
        }
        let mut out = env.clone();
        out.origin = rng.gen_range(0..self.parties.len());
        if self.tamper_payloads && !out.payload.is_empty() {
            let i = rng.gen_range(0..out.payload.len());
            out.payload[i] ^= 1;
        }
        if sha256(&out.payload) != sha256(&env.payload) {
            self.blocked_mutations += 1;
            self.transcript
                .record(self.round, "mutation-blocked", &[("origin", &env.origin)]);
            out.payload = env.payload.clone();
        }
        out
    }

    fn receive(&mut self, p: usize, blocks: &[Rc<FullBlock>]) {
        let r = self.round;
        let party = &mut self.parties[p];
        for b in blocks {
            party
                .pool
                .entry(b.header.work_hash())
                .or_insert_with(|| b.clone());
        }
        let mut best: Option<(u64, u64, Vec<Rc<FullBlock>>)> = None;
        for b in blocks {
            if let Some(&h) = party.index.get(&b.header.work_hash()) {
                party.best_public = party.best_public.max(h);
                continue;
            }
            let Some((fork_point, chain)) = party.branch(b) else {
                continue;
            };
            let len = fork_point + chain.len() as u64;
            party.best_public = party.best_public.max(len);
            if len > party.store.height() && best.as_ref().is_none_or(|(l, _, _)| len > *l) {
                best = Some((len, fork_point, chain));
            }
        }
        let Some((len, fork_point, chain)) = best else {
            return;
        };

        let from = party.store.height();
        let result = if fork_point == from {
            chain
                .iter()
                .try_for_each(|b| party.store.on_new_block((**b).clone()))
        } else {
            let mut candidate: Vec<BlockHeader> =
                party.store.headers()[..fork_point as usize].to_vec();
            candidate.extend(chain.iter().map(|b| b.header));
            let mut fetch = |h: u64| {
                chain
                    .get((h - fork_point - 1) as usize)
                    .map(|b| (**b).clone())
            };
            party.store.resolve_fork(&candidate, &mut fetch).map(|_| ())
        };
        party.sync_index(fork_point);
        // A reorganisation discards private blocks that fell off the chain.
        let index = &party.index;
        party
            .withheld
            .retain(|w| index.contains_key(&w.header.work_hash()));
        match result {
            Ok(()) => {
                self.transcript.record(
                    r,
                    "adopt",
                    &[
                        ("party", &p),
                        ("from", &from),
                        ("height", &len),
                        ("fork_point", &fork_point),
                    ],
                );
            }
            Err(e) => {
                for b in &chain {
                    party.pool.remove(&b.header.work_hash());
                }
                let kind = match e {
                    NodeError::ForkTooDeep { .. } => "fork-too-deep",
                    _ => "reject",
                };
                self.transcript.record(
                    r,
                    kind,
                    &[
                        ("party", &p),
                        ("height", &len),
                        ("reason", &quote(&e.to_string())),
                    ],
                );
            }
        }
    }

    /// Storage records and store invariants for every party.
    fn checkpoint(&mut self) {
        let r = self.round;
        let mut failures = Vec::new();
        for (p, party) in self.parties.iter().enumerate() {
            let s = party.store.storage();
            self.transcript.record(
                r,
                "storage",
                &[
                    ("party", &p),
                    ("height", &party.store.height()),
                    ("headers", &s.headers),
                    ("blocks", &s.blocks),
                    ("states", &s.states),
                ],
            );
            if let Err(e) = party.store.check_invariants() {
                failures.push(format!("party {p} store: {e}"));
            }
        }
        for f in failures {
            self.violation(f);
        }
    }

    pub fn run_rounds(&mut self, rounds: u64) {
        for _ in 0..rounds {
            self.step();
        }
    }

    /// Runs until an honest party reaches `height` or `max_rounds` more
    /// rounds have passed; true if the height was reached.
    pub fn run_until_height(&mut self, height: u64, max_rounds: u64) -> bool {
        for _ in 0..max_rounds {
            if self.honest_height() >= height {
                return true;
            }
            self.step();
        }
        self.honest_height() >= height
    }

    /// Independent check of a header chain against the blocks mined in
    /// this world: lottery and links, content validity from genesis, and
    /// every ticket against the committed roots.
    pub fn audit_headers(&self, headers: &[BlockHeader]) -> (bool, bool, bool) {
        let headers_ok = validate_header_chain(headers, &self.params.difficulty);
        let blocks: Option<Vec<&FullBlock>> = headers
            .iter()
            .map(|h| {
                self.registry
                    .get(&h.work_hash())
                    .map(|b| b.as_ref())
                    .filter(|b| b.header == *h)
            })
            .collect();
        let Some(blocks) = blocks else {
            return (headers_ok, false, false);
        };
        let mut contents = vec![BlockContent::genesis(&self.genesis)];
        contents.extend(blocks.iter().map(|b| b.content()));
        let content_ok = content_valid(&self.genesis, &contents, &self.params.ledger);

        let genesis_root = self.genesis.root();
        let root_at = |j: u64| {
            if j == 0 {
                genesis_root
            } else {
                headers[j as usize - 1].state_root
            }
        };
        let tickets_ok = blocks.iter().enumerate().all(|(i, b)| {
            let h = &b.header;
            let committed: Vec<Digest32> = choose_snapshots(
                i as u64,
                &b.ticket.miner_key,
                self.params.window,
                self.params.snapshots,
            )
            .into_iter()
            .map(root_at)
            .collect();
            let seed = ticket_seed(&h.link, &h.state_root, &h.txs_root);
            validate_ticket(&b.ticket, &seed, &committed, &h.ticket_root, &self.params)
        });
        (headers_ok, content_ok, tickets_ok)
    }

    /// Audits every party's adopted chain, records the outcome and a final
    /// storage checkpoint, and returns the audits.
    pub fn finish(&mut self) -> Vec<ChainAudit> {
        self.checkpoint();
        let mut cache: BTreeMap<(u64, Digest32), (bool, bool, bool)> = BTreeMap::new();
        let mut audits = Vec::new();
        for p in 0..self.parties.len() {
            let store = &self.parties[p].store;
            let key = (store.height(), store.tip_link());
            let (headers_ok, content_ok, tickets_ok) = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = self.audit_headers(store.headers());
                    cache.insert(key, v);
                    v
                }
            };
            audits.push(ChainAudit {
                party: p,
                height: store.height(),
                headers_ok,
                content_ok,
                tickets_ok,
            });
        }
        let r = self.round;
        let mut failed = Vec::new();
        for a in &audits {
            self.transcript.record(
                r,
                "audit",
                &[
                    ("party", &a.party),
                    ("height", &a.height),
                    ("headers", &ok(a.headers_ok)),
                    ("content", &ok(a.content_ok)),
                    ("tickets", &ok(a.tickets_ok)),
                ],
            );
            if !a.passed() {
                failed.push(format!(
                    "party {} adopted a chain failing the audit",
                    a.party
                ));
            }
        }
        for f in failed {
            self.violation(f);
        }
        audits
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

fn short(d: &Digest32) -> String {
    d.to_hex()[..16].to_string()
}

fn quote(s: &str) -> String {
    s.replace(' ', "_")
}
