//! The secure subnet auction and the root-by-root allocation driver.
//!
//! Three parties take part in a round. Bidders fold their encrypted bids into
//! the representing vectors `C_T` (all bids) and `C_z` (all bids but `z`'s),
//! the federal gateway shifts every entry by one private mask `t`, and the
//! auctioneer, holding the private key, finds the welfare-maximizing
//! allocation and the root's Clarke price from masked values only. Every
//! decryption the auctioneer performs is logged in the round transcript.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bidcode::{self, EncodedBid, EncodingError, EncodingParams};
use crate::mechanism::{
    self, Allocation, AllocationSet, BandId, BidProfile, BidderId, MechanismError,
    DEFAULT_ALLOCATION_LIMIT,
};
use crate::paillier::{Ciphertext, CryptoError, Decryptor, PrivateKey, PublicKey};
use crate::topology::{self, Award, ConflictGraph, ConflictTable, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Contribute,
    Mask,
    FindG,
    Select,
    RootPrice,
    Allocation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Init => "init",
            Stage::Contribute => "bidder contribution",
            Stage::Mask => "gateway mask",
            Stage::FindG => "find g",
            Stage::Select => "select allocation",
            Stage::RootPrice => "root price",
            Stage::Allocation => "allocation set",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("protocol aborted at {stage}: {source}")]
    Encoding {
        stage: Stage,
        #[source]
        source: EncodingError,
    },
    #[error("protocol aborted at {stage}: {reason}")]
    Abort { stage: Stage, reason: String },
    #[error("round for {root} announced α{actual_index} at {actual_price}, plaintext VCG gives α{expected_index} at {expected_price}")]
    OracleMismatch {
        root: BidderId,
        expected_index: usize,
        expected_price: u64,
        actual_index: usize,
        actual_price: u64,
    },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl ProtocolError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            ProtocolError::Encoding { stage, .. } | ProtocolError::Abort { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    fn abort(stage: Stage, reason: impl Into<String>) -> Self {
        ProtocolError::Abort { stage, reason: reason.into() }
    }
}

fn at(stage: Stage) -> impl Fn(EncodingError) -> ProtocolError {
    move |source| ProtocolError::Encoding { stage, source }
}

/// The auctioneer's key material. The public half is what goes out over the
/// pilot channel.
#[derive(Debug, Clone)]
pub struct AuctioneerKeys {
    pub public: PublicKey,
    pub private: PrivateKey,
}

impl AuctioneerKeys {
    pub fn generate<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<Self, CryptoError> {
        let (public, private) = crate::paillier::keygen(bits, rng)?;
        Ok(AuctioneerKeys { public, private })
    }
}

/// Which representing vector a ciphertext belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorTag {
    /// `C_T`, the sum of all bids.
    Total,
    /// `C_z`, the sum of all bids except bidder `z`'s.
    Excluding(BidderId),
}

impl fmt::Display for VectorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorTag::Total => write!(f, "C_T"),
            VectorTag::Excluding(z) => write!(f, "C_{z}"),
        }
    }
}

/// `C_T` and every `C_z`, one encoded entry per allocation.
#[derive(Debug, Clone)]
pub struct RepresentingVectors {
    params: EncodingParams,
    bidders: Vec<BidderId>,
    total: Vec<EncodedBid>,
    excluding: BTreeMap<BidderId, Vec<EncodedBid>>,
    contributed: BTreeSet<BidderId>,
}

impl RepresentingVectors {
    pub fn params(&self) -> &EncodingParams {
        &self.params
    }

    pub fn num_allocations(&self) -> usize {
        self.total.len()
    }

    pub fn vector(&self, tag: VectorTag) -> Option<&[EncodedBid]> {
        match tag {
            VectorTag::Total => Some(&self.total),
            VectorTag::Excluding(z) => self.excluding.get(&z).map(Vec::as_slice),
        }
    }

    pub fn tags(&self) -> Vec<VectorTag> {
        std::iter::once(VectorTag::Total)
            .chain(self.bidders.iter().map(|&z| VectorTag::Excluding(z)))
            .collect()
    }

    pub fn contributed(&self) -> &BTreeSet<BidderId> {
        &self.contributed
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for tag in self.tags() {
            for entry in self.vector(tag).unwrap_or_default() {
                for c in entry.cells() {
                    h.update(c.to_bytes_be());
                }
            }
        }
        hex::encode(h.finalize())
    }

    fn map_all(
        &self,
        mut f: impl FnMut(VectorTag, usize, &EncodedBid) -> Result<EncodedBid, EncodingError>,
    ) -> Result<(Vec<EncodedBid>, BTreeMap<BidderId, Vec<EncodedBid>>), EncodingError> {
        let total = self
            .total
            .iter()
            .enumerate()
            .map(|(a, e)| f(VectorTag::Total, a, e))
            .collect::<Result<_, _>>()?;
        let mut excluding = BTreeMap::new();
        for (&z, entries) in &self.excluding {
            let next = entries
                .iter()
                .enumerate()
                .map(|(a, e)| f(VectorTag::Excluding(z), a, e))
                .collect::<Result<_, _>>()?;
            excluding.insert(z, next);
        }
        Ok((total, excluding))
    }
}

/// Vectors after the gateway's shift; this is all the auctioneer receives.
#[derive(Debug, Clone)]
pub struct MaskedVectors {
    vectors: RepresentingVectors,
}

impl MaskedVectors {
    pub fn vectors(&self) -> &RepresentingVectors {
        &self.vectors
    }

    pub fn total(&self) -> &[EncodedBid] {
        &self.vectors.total
    }

    pub fn excluding(&self, z: BidderId) -> Option<&[EncodedBid]> {
        self.vectors.excluding.get(&z).map(Vec::as_slice)
    }
}

/// Fresh all-zero vectors: `C_T` plus one `C_z` per bidder, `|K|` entries each.
pub fn init_representing_vectors<R: RngCore + ?Sized>(
    pk: &PublicKey,
    k: &AllocationSet,
    bidders: &[BidderId],
    params: &EncodingParams,
    rng: &mut R,
) -> Result<RepresentingVectors, ProtocolError> {
    if k.is_empty() {
        return Err(ProtocolError::abort(Stage::Init, "empty allocation set"));
    }
    params
        .check_key(pk, k.len())
        .map_err(at(Stage::Init))?;
    let mut fresh = || -> Result<Vec<EncodedBid>, ProtocolError> {
        (0..k.len())
            .map(|_| bidcode::encode_zero(pk, params, rng).map_err(at(Stage::Init)))
            .collect()
    };
    let total = fresh()?;
    let mut excluding = BTreeMap::new();
    for &z in bidders {
        excluding.insert(z, fresh()?);
    }
    let mut bidders = bidders.to_vec();
    bidders.sort();
    Ok(RepresentingVectors {
        params: *params,
        bidders,
        total,
        excluding,
        contributed: BTreeSet::new(),
    })
}

/// Bidder `z` adds `b_z(α)` to every entry of `C_T` and of every `C_k`,
/// `k ≠ z`, and re-blinds `C_z` so the skipped vector is not recognizable.
pub fn bidder_contribute<R: RngCore + ?Sized>(
    pk: &PublicKey,
    vectors: &RepresentingVectors,
    z: BidderId,
    bids: &[u64],
    rng: &mut R,
) -> Result<RepresentingVectors, ProtocolError> {
    let stage = Stage::Contribute;
    if !vectors.excluding.contains_key(&z) {
        return Err(ProtocolError::abort(stage, format!("{z} is not a bidder of this round")));
    }
    if vectors.contributed.contains(&z) {
        return Err(ProtocolError::abort(stage, format!("{z} already contributed")));
    }
    if bids.len() != vectors.num_allocations() {
        return Err(ProtocolError::abort(
            stage,
            format!("{} bids for {} allocations", bids.len(), vectors.num_allocations()),
        ));
    }
    if let Some(&b) = bids.iter().find(|&&b| b > vectors.params.s) {
        return Err(ProtocolError::Encoding {
            stage,
            source: EncodingError::BidOutOfRange { value: b, max: vectors.params.s },
        });
    }
    let (total, excluding) = vectors
        .map_all(|tag, alloc, entry| {
            let delta = if tag == VectorTag::Excluding(z) { 0 } else { bids[alloc] };
            bidcode::shift_add(pk, entry, delta, rng)
        })
        .map_err(at(stage))?;
    let mut contributed = vectors.contributed.clone();
    contributed.insert(z);
    Ok(RepresentingVectors {
        params: vectors.params,
        bidders: vectors.bidders.clone(),
        total,
        excluding,
        contributed,
    })
}

/// The federal gateway. Its mask never leaves this struct except through
/// [`Gateway::mask_value`], which exists for audits and tests.
pub struct Gateway {
    t: u64,
}

impl Gateway {
    /// Draws `t` uniformly from `[1, t_max]`.
    pub fn new<R: Rng + ?Sized>(params: &EncodingParams, rng: &mut R) -> Self {
        Gateway { t: rng.gen_range(1..=params.t_max) }
    }

    pub fn with_mask(t: u64) -> Result<Self, ProtocolError> {
        if t == 0 {
            return Err(ProtocolError::abort(Stage::Mask, "mask must be at least 1"));
        }
        Ok(Gateway { t })
    }

    pub fn mask_value(&self) -> u64 {
        self.t
    }

    /// Shifts every entry of every vector by the same `t`.
    pub fn mask<R: RngCore + ?Sized>(
        &self,
        pk: &PublicKey,
        vectors: &RepresentingVectors,
        rng: &mut R,
    ) -> Result<MaskedVectors, ProtocolError> {
        let stage = Stage::Mask;
        if vectors.contributed.len() != vectors.bidders.len() {
            return Err(ProtocolError::abort(stage, "not every bidder has contributed"));
        }
        if self.t > vectors.params.t_max {
            return Err(ProtocolError::Encoding {
                stage,
                source: EncodingError::Capacity {
                    delta: self.t,
                    length: vectors.params.length,
                },
            });
        }
        let (total, excluding) = vectors
            .map_all(|_, _, entry| bidcode::shift_add(pk, entry, self.t, rng))
            .map_err(at(stage))?;
        Ok(MaskedVectors {
            vectors: RepresentingVectors {
                params: vectors.params,
                bidders: vectors.bidders.clone(),
                total,
                excluding,
                contributed: vectors.contributed.clone(),
            },
        })
    }
}

/// Draws a mask and applies it in one step.
pub fn gateway_mask<R: RngCore + ?Sized>(
    pk: &PublicKey,
    vectors: &RepresentingVectors,
    rng: &mut R,
) -> Result<(MaskedVectors, Gateway), ProtocolError> {
    let gateway = Gateway::new(&vectors.params, rng);
    let masked = gateway.mask(pk, vectors, rng)?;
    Ok((masked, gateway))
}

/// Where a decrypted ciphertext came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellOrigin {
    pub vector: VectorTag,
    /// `None` for the cell-wise product over all allocations.
    pub allocation: Option<usize>,
    /// 1-based cell index within the entry.
    pub cell: usize,
}

/// One decryption performed by the auctioneer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecryptionRecord {
    pub origin: CellOrigin,
    pub plaintext: u64,
}

struct Focus {
    vector: VectorTag,
    allocation: Option<usize>,
    cells: Vec<Ciphertext>,
}

/// The auctioneer's decryption oracle; every call is attributed and logged.
pub struct Auctioneer<'k> {
    public: &'k PublicKey,
    private: &'k PrivateKey,
    focus: RefCell<Option<Focus>>,
    log: RefCell<Vec<DecryptionRecord>>,
}

impl<'k> Auctioneer<'k> {
    pub fn new(keys: &'k AuctioneerKeys) -> Self {
        Auctioneer {
            public: &keys.public,
            private: &keys.private,
            focus: RefCell::new(None),
            log: RefCell::new(Vec::new()),
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        self.public
    }

    /// Drains the decryptions logged so far.
    pub fn take_log(&self) -> Vec<DecryptionRecord> {
        std::mem::take(&mut self.log.borrow_mut())
    }

    fn inspect<T>(
        &self,
        vector: VectorTag,
        allocation: Option<usize>,
        entry: &EncodedBid,
        f: impl FnOnce(&Self) -> T,
    ) -> T {
        *self.focus.borrow_mut() = Some(Focus {
            vector,
            allocation,
            cells: entry.cells().to_vec(),
        });
        let out = f(self);
        *self.focus.borrow_mut() = None;
        out
    }
}

impl Decryptor for Auctioneer<'_> {
    fn decrypt(&self, c: &Ciphertext) -> Result<num_bigint::BigUint, CryptoError> {
        let m = crate::paillier::decrypt(self.private, c)?;
        let focus = self.focus.borrow();
        let origin = match focus.as_ref() {
            Some(f) => CellOrigin {
                vector: f.vector,
                allocation: f.allocation,
                cell: f.cells.iter().position(|x| x == c).map_or(0, |i| i + 1),
            },
            None => CellOrigin { vector: VectorTag::Total, allocation: None, cell: 0 },
        };
        self.log.borrow_mut().push(DecryptionRecord {
            origin,
            plaintext: m.to_u64().unwrap_or(u64::MAX),
        });
        Ok(m)
    }
}

/// Maximum masked value over all entries of one vector, via the cell-wise
/// product and a top-down scan for the first non-zero cell.
fn masked_maximum(
    auctioneer: &Auctioneer<'_>,
    tag: VectorTag,
    entries: &[EncodedBid],
    stage: Stage,
) -> Result<u64, ProtocolError> {
    let product = bidcode::elementwise_product(auctioneer.public, entries).map_err(at(stage))?;
    auctioneer
        .inspect(tag, None, &product, |a| bidcode::max_encoded(a, &product))
        .map_err(at(stage))
}

/// `g = max_α (Σ_n b_n(α) + t)`.
pub fn find_g(auctioneer: &Auctioneer<'_>, masked: &MaskedVectors) -> Result<u64, ProtocolError> {
    masked_maximum(auctioneer, VectorTag::Total, masked.total(), Stage::FindG)
}

/// First allocation, in canonical order, whose `g`-th `C_T` cell is non-zero.
pub fn select_winning_allocation(
    auctioneer: &Auctioneer<'_>,
    masked: &MaskedVectors,
    g: u64,
) -> Result<usize, ProtocolError> {
    let stage = Stage::Select;
    if g == 0 {
        return Err(ProtocolError::abort(stage, "g must be at least 1"));
    }
    for (alpha, entry) in masked.total().iter().enumerate() {
        let cell = entry
            .cell(g as usize)
            .ok_or_else(|| ProtocolError::abort(stage, "g exceeds the vector length"))?;
        let m = auctioneer
            .inspect(VectorTag::Total, Some(alpha), entry, |a| a.decrypt(cell))
            .map_err(|e| at(stage)(e.into()))?;
        if !num_traits::Zero::is_zero(&m) {
            return Ok(alpha);
        }
    }
    Err(ProtocolError::abort(stage, "no allocation reaches g"))
}

/// `p_z = max_α(Σ_{n≠z} b_n(α) + t) − (Σ_{n≠z} b_n(α*) + t)`.
pub fn root_price(
    auctioneer: &Auctioneer<'_>,
    masked: &MaskedVectors,
    alpha_star: usize,
    root: BidderId,
) -> Result<u64, ProtocolError> {
    let stage = Stage::RootPrice;
    let entries = masked
        .excluding(root)
        .ok_or_else(|| ProtocolError::abort(stage, format!("no vector for root {root}")))?;
    let tag = VectorTag::Excluding(root);
    let at_star = entries
        .get(alpha_star)
        .ok_or_else(|| ProtocolError::abort(stage, "α* out of range"))?;
    let others_at_star = auctioneer
        .inspect(tag, Some(alpha_star), at_star, |a| bidcode::decode(a, at_star))
        .map_err(at(stage))?;
    let others_best = masked_maximum(auctioneer, tag, entries, stage)?;
    others_best.checked_sub(others_at_star).ok_or_else(|| {
        ProtocolError::abort(stage, "masked maximum below the value at α*")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "party", content = "id", rename_all = "snake_case")]
pub enum Party {
    Bidder(BidderId),
    Gateway,
    Auctioneer,
}

/// One message (or one local auctioneer computation) of a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub step: u32,
    pub label: String,
    pub from: Party,
    pub to: Party,
    pub payload_digest: String,
    /// Decryptions the auctioneer made while handling this entry.
    pub decrypted: Vec<DecryptionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    fn push(&mut self, step: u32, label: &str, from: Party, to: Party, digest: String) {
        self.entries.push(TranscriptEntry {
            step,
            label: label.to_string(),
            from,
            to,
            payload_digest: digest,
            decrypted: Vec::new(),
        });
    }

    fn push_local(&mut self, step: u32, label: &str, decrypted: Vec<DecryptionRecord>) {
        self.entries.push(TranscriptEntry {
            step,
            label: label.to_string(),
            from: Party::Auctioneer,
            to: Party::Auctioneer,
            payload_digest: String::new(),
            decrypted,
        });
    }

    /// Every decryption performed by the auctioneer in this round.
    pub fn decryptions(&self) -> impl Iterator<Item = &DecryptionRecord> {
        self.entries.iter().flat_map(|e| e.decrypted.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

fn digest_bytes(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubnetAuctionResult {
    pub alpha_star_index: usize,
    pub alpha_star: Allocation,
    /// Masked maximum welfare `max_α Σ b_n(α) + t`.
    pub g: u64,
    pub root_price: u64,
    pub transcript: Transcript,
}

/// Runs one secure round with caller-supplied randomness for the bidders'
/// encryptions and the gateway.
pub fn run_subnet_auction_with<R1, R2>(
    root: BidderId,
    k: &AllocationSet,
    bids: &BidProfile,
    keys: &AuctioneerKeys,
    bidder_rng: &mut R1,
    gateway_rng: &mut R2,
) -> Result<SubnetAuctionResult, ProtocolError>
where
    R1: RngCore + ?Sized,
    R2: RngCore + ?Sized,
{
    let pk = &keys.public;
    let bidders = k.bidders().to_vec();
    if !bidders.contains(&root) {
        return Err(ProtocolError::abort(Stage::Init, format!("root {root} is not a member")));
    }
    if bids.bidders() != bidders.as_slice() || bids.num_allocations() != k.len() {
        return Err(MechanismError::IndexMismatch("bids do not cover the allocation set".into()).into());
    }
    let s = bids.bound().max(1);
    let params = EncodingParams::for_round(s, s, bidders.len()).map_err(at(Stage::Init))?;
    let mut transcript = Transcript::default();

    let pk_bytes = pk.n().to_bytes_be();
    for &b in &bidders {
        transcript.push(1, "public key and x", Party::Auctioneer, Party::Bidder(b), digest_bytes(&[&pk_bytes, &params.x.to_be_bytes()]));
    }

    let mut vectors = init_representing_vectors(pk, k, &bidders, &params, bidder_rng)?;
    transcript.push(2, "initial representing vectors", Party::Auctioneer, Party::Bidder(bidders[0]), vectors.digest());
    for (i, &z) in bidders.iter().enumerate() {
        vectors = bidder_contribute(pk, &vectors, z, bids.values_of(z)?, bidder_rng)?;
        let to = bidders.get(i + 1).map_or(Party::Gateway, |&n| Party::Bidder(n));
        transcript.push(2, "representing vectors", Party::Bidder(z), to, vectors.digest());
    }

    let gateway = Gateway::new(&params, gateway_rng);
    let masked = gateway.mask(pk, &vectors, gateway_rng)?;
    transcript.push(3, "masked vectors", Party::Gateway, Party::Auctioneer, masked.vectors.digest());

    let auctioneer = Auctioneer::new(keys);
    let g = find_g(&auctioneer, &masked)?;
    transcript.push_local(4, "find g", auctioneer.take_log());
    let alpha_star = select_winning_allocation(&auctioneer, &masked, g)?;
    transcript.push_local(5, "select α*", auctioneer.take_log());
    let price = root_price(&auctioneer, &masked, alpha_star, root)?;
    transcript.push_local(8, "root price", auctioneer.take_log());

    let alloc = k.get(alpha_star).expect("index from scan").clone();
    let award = serde_json::to_vec(&(alloc.share(root), price)).expect("award serializes");
    transcript.push(8, "award", Party::Auctioneer, Party::Bidder(root), digest_bytes(&[&award]));

    Ok(SubnetAuctionResult {
        alpha_star_index: alpha_star,
        alpha_star: alloc,
        g,
        root_price: price,
        transcript,
    })
}

/// Runs one secure round; the gateway's randomness is split off `rng`.
pub fn run_subnet_auction<R: RngCore + ?Sized>(
    root: BidderId,
    k: &AllocationSet,
    bids: &BidProfile,
    keys: &AuctioneerKeys,
    rng: &mut R,
) -> Result<SubnetAuctionResult, ProtocolError> {
    let mut gateway_rng = ChaCha20Rng::seed_from_u64(rng.next_u64());
    run_subnet_auction_with(root, k, bids, keys, rng, &mut gateway_rng)
}

/// Outcome of one round as consumed by the allocation driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubnetDecision {
    pub alpha_star_index: usize,
    pub root_price: u64,
}

/// Decides a round: either the secure protocol or the plaintext oracle.
pub trait SubnetSolver {
    fn solve(
        &mut self,
        root: BidderId,
        k: &AllocationSet,
        bids: &BidProfile,
    ) -> Result<SubnetDecision, ProtocolError>;
}

/// Plaintext VCG; the reference the secure protocol must reproduce.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlaintextSolver;

impl SubnetSolver for PlaintextSolver {
    fn solve(
        &mut self,
        root: BidderId,
        k: &AllocationSet,
        bids: &BidProfile,
    ) -> Result<SubnetDecision, ProtocolError> {
        Ok(SubnetDecision {
            alpha_star_index: mechanism::optimal_allocation(bids, k, None)?,
            root_price: mechanism::clarke_payment(root, bids, k)?,
        })
    }
}

/// Recomputes a round in plaintext and rejects any announced outcome that
/// differs, such as an auctioneer overcharging the root.
pub fn audit_decision(
    root: BidderId,
    k: &AllocationSet,
    bids: &BidProfile,
    announced: &SubnetDecision,
) -> Result<(), ProtocolError> {
    let expected = PlaintextSolver.solve(root, k, bids)?;
    if &expected == announced {
        return Ok(());
    }
    Err(ProtocolError::OracleMismatch {
        root,
        expected_index: expected.alpha_star_index,
        expected_price: expected.root_price,
        actual_index: announced.alpha_star_index,
        actual_price: announced.root_price,
    })
}

/// The encrypted protocol, keeping each round's transcript when asked to.
pub struct SecureSolver {
    keys: AuctioneerKeys,
    rng: ChaCha20Rng,
    keep_transcripts: bool,
    transcripts: Vec<(BidderId, Transcript)>,
}

impl SecureSolver {
    pub fn new(keys: AuctioneerKeys, seed: u64) -> Self {
        SecureSolver {
            keys,
            rng: ChaCha20Rng::seed_from_u64(seed),
            keep_transcripts: false,
            transcripts: Vec::new(),
        }
    }

    pub fn keep_transcripts(mut self, keep: bool) -> Self {
        self.keep_transcripts = keep;
        self
    }

    pub fn transcripts(&self) -> &[(BidderId, Transcript)] {
        &self.transcripts
    }

    pub fn into_transcripts(self) -> Vec<(BidderId, Transcript)> {
        self.transcripts
    }
}

impl SubnetSolver for SecureSolver {
    fn solve(
        &mut self,
        root: BidderId,
        k: &AllocationSet,
        bids: &BidProfile,
    ) -> Result<SubnetDecision, ProtocolError> {
        let result = run_subnet_auction(root, k, bids, &self.keys, &mut self.rng)?;
        if self.keep_transcripts {
            self.transcripts.push((root, result.transcript));
        }
        Ok(SubnetDecision {
            alpha_star_index: result.alpha_star_index,
            root_price: result.root_price,
        })
    }
}

/// How a station values a set of bands.
pub trait Valuations {
    fn value(&self, station: BidderId, bands: &[BandId]) -> u64;
    /// Upper bound on any value, the encoding bound `s`.
    fn bound(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullAuctionOptions {
    /// Per-bidder band cap applied to every round's allocation set.
    pub band_cap: Option<usize>,
    pub allocation_limit: usize,
}

impl Default for FullAuctionOptions {
    fn default() -> Self {
        FullAuctionOptions { band_cap: None, allocation_limit: DEFAULT_ALLOCATION_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub root: BidderId,
    pub members: Vec<BidderId>,
    pub available_bands: Vec<BandId>,
    pub allocation_count: usize,
    /// Cap in force for this round, if any.
    pub band_cap: Option<usize>,
    /// Set when the configured allocation set was too large and a tighter
    /// cap was substituted.
    pub fallback: bool,
    pub alpha_star: Allocation,
    pub price: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FullAuctionOutcome {
    pub awards: BTreeMap<BidderId, Award>,
    pub rounds: Vec<RoundRecord>,
    pub tables: BTreeMap<BidderId, ConflictTable>,
}

impl FullAuctionOutcome {
    pub fn root_order(&self) -> Vec<BidderId> {
        self.rounds.iter().map(|r| r.root).collect()
    }

    pub fn revenue(&self) -> u64 {
        self.awards.values().map(|a| a.price).sum()
    }
}

fn round_allocations(
    members: &[BidderId],
    bands: &[BandId],
    options: &FullAuctionOptions,
) -> Result<(AllocationSet, Option<usize>, bool), ProtocolError> {
    let limit = options.allocation_limit;
    let first = match options.band_cap {
        Some(cap) => mechanism::enumerate_capped(members, bands, cap, Some(limit)),
        None => mechanism::enumerate_allocations(members, bands, Some(limit)),
    };
    match first {
        Ok(k) => Ok((k, options.band_cap, false)),
        Err(MechanismError::TooManyAllocations { .. }) => {
            let start = options.band_cap.unwrap_or(bands.len()).min(bands.len());
            let cap = (0..start)
                .rev()
                .find(|&c| mechanism::capped_count(members.len(), bands.len(), c) <= limit as u128)
                .ok_or_else(|| ProtocolError::abort(Stage::Allocation, "no band cap fits the limit"))?;
            let k = mechanism::enumerate_capped(members, bands, cap, Some(limit))?;
            Ok((k, Some(cap), true))
        }
        Err(e) => Err(e.into()),
    }
}

/// Root-by-root allocation: every station is root exactly once, in an order
/// drawn from `root_rng`; each round awards only the root's share of `α*`.
pub fn run_full_auction<S, V, R>(
    graph: &ConflictGraph,
    valuations: &V,
    bands: &[BandId],
    options: &FullAuctionOptions,
    solver: &mut S,
    root_rng: &mut R,
) -> Result<FullAuctionOutcome, ProtocolError>
where
    S: SubnetSolver + ?Sized,
    V: Valuations + ?Sized,
    R: Rng + ?Sized,
{
    let mut used = BTreeSet::new();
    let mut awards: BTreeMap<BidderId, Award> = BTreeMap::new();
    let mut tables: BTreeMap<BidderId, ConflictTable> = graph
        .ids()
        .map(|id| ConflictTable::new(graph, id).map(|t| (id, t)))
        .collect::<Result<_, _>>()?;
    let mut rounds = Vec::with_capacity(graph.len());

    while let Some(root) = topology::pick_next_root(graph, &used, root_rng) {
        let subnet = topology::subnet_of(graph, root, &used, &awards, bands)?;
        let (k, band_cap, fallback) =
            round_allocations(&subnet.members, &subnet.available_bands, options)?;
        let bids = BidProfile::from_shares(&k, valuations.bound(), |b, share| {
            valuations.value(b, share)
        })?;
        let decision = solver.solve(root, &k, &bids)?;
        let alpha_star = k
            .get(decision.alpha_star_index)
            .ok_or_else(|| ProtocolError::abort(Stage::Select, "solver returned an unknown allocation"))?
            .clone();
        let won: BTreeSet<BandId> = alpha_star.share(root).into_iter().collect();

        for (id, table) in tables.iter_mut() {
            if *id == root || table.interferers.contains(&root) {
                *table = topology::update_conflict_table(table, root, &won, decision.root_price)?;
            }
        }
        awards.insert(root, Award { bands: won, price: decision.root_price });
        used.insert(root);
        rounds.push(RoundRecord {
            root,
            members: subnet.members,
            available_bands: subnet.available_bands,
            allocation_count: k.len(),
            band_cap,
            fallback,
            alpha_star,
            price: decision.root_price,
        });
    }
    Ok(FullAuctionOutcome { awards, rounds, tables })
}

/// Adjacent stations never share a band.
pub fn awards_are_interference_free(graph: &ConflictGraph, awards: &BTreeMap<BidderId, Award>) -> bool {
    graph.edges().all(|(u, v)| match (awards.get(&u), awards.get(&v)) {
        (Some(a), Some(b)) => a.bands.is_disjoint(&b.bands),
        _ => true,
    })
}
