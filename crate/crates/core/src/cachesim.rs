//! Bit-level simulation of cache placement and XOR-coded delivery.
//!
//! Files, receivers and transmitters are indexed from 0. Receiver `q` of the
//! worst-case demand requests file `q`.

use std::collections::BTreeMap;
use std::ops::Range;

use bitvec::prelude::*;
use num::{BigInt, Integer, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::{ndt_from_ratios, ndt_upper, BoundsError};
use crate::dof::per_user_dof;
use crate::model::{
    int, subsets, validate_split, CacheStateIndex, CachePoint, NetworkConfig, Rational,
    SplitRatios, SplitViolations,
};

pub type Bits = BitVec<u8, Lsb0>;

/// Largest file size the simulator accepts, in bits.
pub const MAX_FILE_BITS: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Ratios(#[from] SplitViolations),
    #[error("split needs files of {needed} bits, above the {MAX_FILE_BITS}-bit cap")]
    FileTooLarge { needed: BigInt },
    #[error("file size {file_bits} does not give state {index} an integer subfile length")]
    NotDivisible {
        file_bits: usize,
        index: CacheStateIndex,
    },
    #[error("{node} caches {bits} bits, over its budget of {budget}")]
    BudgetExceeded {
        node: Node,
        bits: usize,
        budget: Rational,
    },
    #[error("{node} is missing subfile {key:?}")]
    MissingSubfile { node: Node, key: SubfileKey },
    #[error("transmitters disagree on subfile {0:?}")]
    InconsistentCopies(SubfileKey),
    #[error("subfiles cover {covered} of {file_bits} bits")]
    Coverage { covered: usize, file_bits: usize },
    #[error("state {0} carries no delivery (cached at every receiver or at no transmitter)")]
    NotDelivered(CacheStateIndex),
    #[error("demand must name one file per receiver, each below {n_files}")]
    BadDemand { n_files: usize },
    #[error("library has {got} files of {got_bits} bits, expected {expected} of {expected_bits}")]
    LibraryShape {
        got: usize,
        got_bits: usize,
        expected: usize,
        expected_bits: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Transmitter(usize),
    Receiver(usize),
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Node::Transmitter(p) => write!(f, "transmitter {p}"),
            Node::Receiver(q) => write!(f, "receiver {q}"),
        }
    }
}

/// Seeded random library of equally sized files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitLibrary {
    pub file_size_bits: usize,
    pub payloads: Vec<Bits>,
}

impl BitLibrary {
    pub fn random(n_files: usize, file_size_bits: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payloads = (0..n_files)
            .map(|_| (0..file_size_bits).map(|_| rng.gen::<bool>()).collect())
            .collect();
        Self {
            file_size_bits,
            payloads,
        }
    }

    pub fn n_files(&self) -> usize {
        self.payloads.len()
    }
}

/// Identifies subfile `W_{file, rx_set, tx_set}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileKey {
    pub file: usize,
    pub rx_set: Vec<usize>,
    pub tx_set: Vec<usize>,
}

/// Where one subfile of every file lives inside the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubfileSlot {
    pub state: CacheStateIndex,
    pub rx_set: Vec<usize>,
    pub tx_set: Vec<usize>,
    pub range: Range<usize>,
}

/// Contiguous bit ranges of all subfiles, ordered by `(r, t, rx_set, tx_set)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub file_size_bits: usize,
    pub slots: Vec<SubfileSlot>,
}

impl Layout {
    pub fn new(cfg: &NetworkConfig, s: &SplitRatios, file_size_bits: usize) -> Result<Self, SimError> {
        let f = int(file_size_bits as u64);
        let mut slots = Vec::new();
        let mut start = 0;
        for (state, a) in s.iter() {
            let len = a * &f;
            if !len.is_integer() {
                return Err(SimError::NotDivisible {
                    file_bits: file_size_bits,
                    index: state,
                });
            }
            let len = len.to_integer().to_usize().expect("length within file size");
            for rx_set in subsets(cfg.n_rx(), state.r) {
                for tx_set in subsets(cfg.n_tx(), state.t) {
                    slots.push(SubfileSlot {
                        state,
                        rx_set: rx_set.clone(),
                        tx_set,
                        range: start..start + len,
                    });
                    start += len;
                }
            }
        }
        if start != file_size_bits {
            return Err(SimError::Coverage {
                covered: start,
                file_bits: file_size_bits,
            });
        }
        Ok(Self {
            file_size_bits,
            slots,
        })
    }
}

/// Smallest file size giving every subfile an integer number of bits.
pub fn required_file_size(s: &SplitRatios) -> Result<usize, SimError> {
    let lcm = s
        .iter()
        .fold(BigInt::one(), |acc, (_, a)| acc.lcm(a.denom()));
    match lcm.to_usize() {
        Some(n) if n <= MAX_FILE_BITS => Ok(n),
        _ => Err(SimError::FileTooLarge { needed: lcm }),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeCache {
    pub subfiles: BTreeMap<SubfileKey, Bits>,
}

impl NodeCache {
    pub fn bits(&self) -> usize {
        self.subfiles.values().map(|b| b.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caches {
    pub tx: Vec<NodeCache>,
    pub rx: Vec<NodeCache>,
}

/// Fills every cache per the layout and checks the measured loads against
/// `mu * L * F` exactly.
pub fn place(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    layout: &Layout,
    lib: &BitLibrary,
) -> Result<Caches, SimError> {
    if lib.n_files() != cfg.n_files() || lib.file_size_bits != layout.file_size_bits {
        return Err(SimError::LibraryShape {
            got: lib.n_files(),
            got_bits: lib.file_size_bits,
            expected: cfg.n_files(),
            expected_bits: layout.file_size_bits,
        });
    }
    let mut caches = Caches {
        tx: vec![NodeCache::default(); cfg.n_tx()],
        rx: vec![NodeCache::default(); cfg.n_rx()],
    };
    for (file, payload) in lib.payloads.iter().enumerate() {
        for slot in &layout.slots {
            let key = SubfileKey {
                file,
                rx_set: slot.rx_set.clone(),
                tx_set: slot.tx_set.clone(),
            };
            let bits: Bits = payload[slot.range.clone()].to_bitvec();
            for &p in &slot.tx_set {
                caches.tx[p].subfiles.insert(key.clone(), bits.clone());
            }
            for &q in &slot.rx_set {
                caches.rx[q].subfiles.insert(key.clone(), bits.clone());
            }
        }
    }
    let total = int((cfg.n_files() * layout.file_size_bits) as u64);
    let checks = caches
        .rx
        .iter()
        .enumerate()
        .map(|(q, c)| (Node::Receiver(q), c, pt.mu_r()))
        .chain(
            caches
                .tx
                .iter()
                .enumerate()
                .map(|(p, c)| (Node::Transmitter(p), c, pt.mu_t())),
        );
    for (node, cache, mu) in checks {
        let budget = mu * &total;
        if int(cache.bits() as u64) > budget {
            return Err(SimError::BudgetExceeded {
                node,
                bits: cache.bits(),
                budget,
            });
        }
    }
    Ok(caches)
}

/// Receiver `q` requests file `q`.
pub fn worst_case_demand(cfg: &NetworkConfig) -> Vec<usize> {
    (0..cfg.n_rx()).collect()
}

/// XOR of the subfiles wanted by each member of `rx_group`, sent by `tx_group`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    pub rx_group: Vec<usize>,
    pub tx_group: Vec<usize>,
    pub bits: Bits,
}

impl CodedMessage {
    pub fn flip_bit(&mut self, i: usize) {
        let v = self.bits[i];
        self.bits.set(i, !v);
    }
}

fn without(set: &[usize], q: usize) -> Vec<usize> {
    set.iter().copied().filter(|&x| x != q).collect()
}

fn check_demand(cfg: &NetworkConfig, demand: &[usize]) -> Result<(), SimError> {
    if demand.len() != cfg.n_rx() || demand.iter().any(|&f| f >= cfg.n_files()) {
        return Err(SimError::BadDemand {
            n_files: cfg.n_files(),
        });
    }
    Ok(())
}

/// One message per (receiver group of size `r+1`, transmitter group of size `t`).
pub fn build_group_messages(
    cfg: &NetworkConfig,
    caches: &Caches,
    demand: &[usize],
    state: CacheStateIndex,
) -> Result<Vec<CodedMessage>, SimError> {
    check_demand(cfg, demand)?;
    if state.r >= cfg.n_rx() || state.t == 0 {
        return Err(SimError::NotDelivered(state));
    }
    let mut out = Vec::new();
    for rx_group in subsets(cfg.n_rx(), state.r + 1) {
        for tx_group in subsets(cfg.n_tx(), state.t) {
            let mut acc: Option<Bits> = None;
            for &q in &rx_group {
                let key = SubfileKey {
                    file: demand[q],
                    rx_set: without(&rx_group, q),
                    tx_set: tx_group.clone(),
                };
                let mut copy: Option<&Bits> = None;
                for &p in &tx_group {
                    let held = caches.tx[p].subfiles.get(&key).ok_or_else(|| SimError::MissingSubfile {
                        node: Node::Transmitter(p),
                        key: key.clone(),
                    })?;
                    match copy {
                        Some(c) if c != held => return Err(SimError::InconsistentCopies(key)),
                        _ => copy = Some(held),
                    }
                }
                let part = copy.expect("tx group is nonempty");
                acc = Some(match acc {
                    None => part.clone(),
                    Some(mut a) => {
                        a ^= part;
                        a
                    }
                });
            }
            out.push(CodedMessage {
                rx_group: rx_group.clone(),
                tx_group,
                bits: acc.expect("rx group is nonempty"),
            });
        }
    }
    Ok(out)
}

/// Why a receiver failed to recover its file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeFailure {
    /// A subfile it needs is neither cached nor delivered.
    Unrecoverable(SubfileKey),
    /// The recovered bits differ from the library at this subfile.
    Mismatch(SubfileKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverOutcome {
    pub receiver: usize,
    pub file: usize,
    pub failure: Option<DecodeFailure>,
    pub reconstructed: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    pub receivers: Vec<ReceiverOutcome>,
}

impl DecodeReport {
    pub fn all_success(&self) -> bool {
        self.receivers.iter().all(|r| r.failure.is_none())
    }
}

pub type MessagesByGroup = BTreeMap<CacheStateIndex, Vec<CodedMessage>>;

/// Every receiver strips its cached constituents from each message it is
/// part of and reassembles its demanded file.
pub fn decode_all(
    cfg: &NetworkConfig,
    layout: &Layout,
    caches: &Caches,
    messages: &MessagesByGroup,
    demand: &[usize],
    lib: &BitLibrary,
) -> Result<DecodeReport, SimError> {
    check_demand(cfg, demand)?;
    let mut receivers = Vec::with_capacity(cfg.n_rx());
    for (q, &file) in demand.iter().enumerate() {
        let cache = &caches.rx[q];
        let mut reconstructed = Bits::with_capacity(layout.file_size_bits);
        let mut failure = None;
        for slot in &layout.slots {
            let key = SubfileKey {
                file,
                rx_set: slot.rx_set.clone(),
                tx_set: slot.tx_set.clone(),
            };
            let recovered = if slot.rx_set.contains(&q) {
                cache.subfiles.get(&key).cloned()
            } else {
                recover(q, slot, demand, cache, messages)
            };
            let Some(bits) = recovered else {
                failure = Some(DecodeFailure::Unrecoverable(key));
                break;
            };
            if failure.is_none() && bits.as_bitslice() != lib.payloads[file][slot.range.clone()] {
                failure = Some(DecodeFailure::Mismatch(key));
            }
            reconstructed.extend_from_bitslice(&bits);
        }
        receivers.push(ReceiverOutcome {
            receiver: q,
            file,
            failure,
            reconstructed,
        });
    }
    Ok(DecodeReport { receivers })
}

fn recover(
    q: usize,
    slot: &SubfileSlot,
    demand: &[usize],
    cache: &NodeCache,
    messages: &MessagesByGroup,
) -> Option<Bits> {
    let mut rx_group = slot.rx_set.clone();
    rx_group.push(q);
    rx_group.sort_unstable();
    let msg = messages
        .get(&slot.state)?
        .iter()
        .find(|m| m.rx_group == rx_group && m.tx_group == slot.tx_set)?;
    let mut bits = msg.bits.clone();
    for &other in rx_group.iter().filter(|&&x| x != q) {
        let key = SubfileKey {
            file: demand[other],
            rx_set: without(&rx_group, other),
            tx_set: slot.tx_set.clone(),
        };
        bits ^= cache.subfiles.get(&key)?;
    }
    Some(bits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAccount {
    pub messages_per_receiver: usize,
    pub message_bits: usize,
    /// `messages_per_receiver * (message_bits / F) / d_{r,t}`.
    pub group_ndt: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryAccount {
    pub per_group: BTreeMap<CacheStateIndex, GroupAccount>,
    pub total_ndt: Rational,
}

/// Delivery time measured from the messages actually built.
pub fn account(cfg: &NetworkConfig, messages: &MessagesByGroup, file_size_bits: usize) -> DeliveryAccount {
    let mut per_group = BTreeMap::new();
    let mut total = Rational::zero();
    for (&state, msgs) in messages {
        let counts: Vec<usize> = (0..cfg.n_rx())
            .map(|q| msgs.iter().filter(|m| m.rx_group.contains(&q)).count())
            .collect();
        assert!(
            counts.windows(2).all(|w| w[0] == w[1]),
            "receivers are served unevenly in group {state}: {counts:?}"
        );
        let message_bits = msgs.first().map_or(0, |m| m.bits.len());
        let d = per_user_dof(cfg, state.r, state.t).expect("delivered state").per_user;
        let group_ndt = int(counts[0] as u64) * int(message_bits as u64) / int(file_size_bits as u64) / d;
        total += &group_ndt;
        per_group.insert(
            state,
            GroupAccount {
                messages_per_receiver: counts[0],
                message_bits,
                group_ndt,
            },
        );
    }
    DeliveryAccount {
        per_group,
        total_ndt: total,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub ratios: SplitRatios,
    pub file_size_bits: usize,
    /// Messages built per delivered state, over all receiver groups.
    pub message_counts: BTreeMap<CacheStateIndex, usize>,
    pub account: DeliveryAccount,
    pub decode: DecodeReport,
}

/// Place, deliver and decode with worst-case distinct demands.
pub fn simulate(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    ratios: Option<SplitRatios>,
    seed: u64,
) -> Result<Simulation, SimError> {
    simulate_demand(cfg, pt, ratios, &worst_case_demand(cfg), seed)
}

pub fn simulate_demand(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    ratios: Option<SplitRatios>,
    demand: &[usize],
    seed: u64,
) -> Result<Simulation, SimError> {
    pt.require_feasible(cfg).map_err(BoundsError::from)?;
    let ratios = match ratios {
        Some(s) => s,
        None => ndt_upper(cfg, pt)?.1,
    };
    validate_split(cfg, pt, &ratios)?;
    let f = required_file_size(&ratios)?;
    let layout = Layout::new(cfg, &ratios, f)?;
    let lib = BitLibrary::random(cfg.n_files(), f, seed);
    let caches = place(cfg, pt, &layout, &lib)?;
    let mut messages = MessagesByGroup::new();
    for (state, _) in ratios.iter() {
        if state.r < cfg.n_rx() && state.t > 0 {
            messages.insert(state, build_group_messages(cfg, &caches, demand, state)?);
        }
    }
    let decode = decode_all(cfg, &layout, &caches, &messages, demand, &lib)?;
    let account = account(cfg, &messages, f);
    debug_assert_eq!(Ok(account.total_ndt.clone()), ndt_from_ratios(cfg, &ratios));
    Ok(Simulation {
        message_counts: messages.iter().map(|(k, v)| (*k, v.len())).collect(),
        ratios,
        file_size_bits: f,
        account,
        decode,
    })
}
