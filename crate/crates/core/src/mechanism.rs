//! Plaintext combinatorial VCG with Clarke pivot payments.
//!
//! An allocation assigns every band of a round to one bidder (or, for capped
//! allocation sets, possibly to nobody). Allocation sets are enumerated in a
//! fixed odometer order: bands ascending, the first band is the most
//! significant digit, and digits run over bidder ids ascending. Every argmax
//! breaks ties towards the lowest index in that order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest allocation set enumerated without an explicit limit.
pub const DEFAULT_ALLOCATION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BidderId(pub u32);

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandId(pub u32);

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MechanismError {
    #[error("no bidders")]
    NoBidders,
    #[error("duplicate bidder or band id")]
    Duplicate,
    #[error("allocation set would hold {count} allocations, above the limit of {limit}")]
    TooManyAllocations { count: u128, limit: usize },
    #[error("bid profile does not match the allocation set: {0}")]
    IndexMismatch(String),
    #[error("unknown bidder {0}")]
    UnknownBidder(BidderId),
    #[error("bid {value} of bidder {bidder} exceeds the bound {bound}")]
    BidOutOfRange { bidder: BidderId, value: u64, bound: u64 },
}

/// One assignment of the round's bands to bidders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    bands: Vec<BandId>,
    owners: Vec<Option<BidderId>>,
}

impl Allocation {
    pub fn new(bands: Vec<BandId>, owners: Vec<Option<BidderId>>) -> Self {
        assert_eq!(bands.len(), owners.len());
        Allocation { bands, owners }
    }

    pub fn bands(&self) -> &[BandId] {
        &self.bands
    }

    pub fn owner(&self, band: BandId) -> Option<BidderId> {
        self.bands
            .iter()
            .position(|&b| b == band)
            .and_then(|i| self.owners[i])
    }

    /// Bands given to `bidder`, ascending.
    pub fn share(&self, bidder: BidderId) -> Vec<BandId> {
        self.bands
            .iter()
            .zip(&self.owners)
            .filter(|(_, o)| **o == Some(bidder))
            .map(|(b, _)| *b)
            .collect()
    }

    pub fn share_size(&self, bidder: BidderId) -> usize {
        self.owners.iter().filter(|o| **o == Some(bidder)).count()
    }

    pub fn assignments(&self) -> impl Iterator<Item = (BandId, Option<BidderId>)> + '_ {
        self.bands.iter().copied().zip(self.owners.iter().copied())
    }
}

impl fmt::Display for Allocation {
    /// Shares in bidder order, e.g. `({1,2},{})`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut bidders: Vec<BidderId> = self.owners.iter().flatten().copied().collect();
        bidders.sort();
        bidders.dedup();
        write!(f, "(")?;
        for (i, b) in bidders.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let share: Vec<String> = self.share(*b).iter().map(|x| x.to_string()).collect();
            write!(f, "{}:{{{}}}", b, share.join(","))?;
        }
        write!(f, ")")
    }
}

/// The allocation set `K` of one round, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationSet {
    bidders: Vec<BidderId>,
    bands: Vec<BandId>,
    allocations: Vec<Allocation>,
}

impl AllocationSet {
    pub fn bidders(&self) -> &[BidderId] {
        &self.bidders
    }

    pub fn bands(&self) -> &[BandId] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.allocations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allocations.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Allocation> {
        self.allocations.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Allocation> {
        self.allocations.iter()
    }

    pub fn position(&self, alloc: &Allocation) -> Option<usize> {
        self.allocations.iter().position(|a| a == alloc)
    }
}

fn sorted_unique<T: Ord + Copy>(items: &[T]) -> Result<Vec<T>, MechanismError> {
    let mut v = items.to_vec();
    v.sort();
    let before = v.len();
    v.dedup();
    if v.len() != before {
        return Err(MechanismError::Duplicate);
    }
    Ok(v)
}

/// Every assignment of `bands` to `bidders`: `|bidders|^|bands|` allocations.
pub fn enumerate_allocations(
    bidders: &[BidderId],
    bands: &[BandId],
    limit: Option<usize>,
) -> Result<AllocationSet, MechanismError> {
    let limit = limit.unwrap_or(DEFAULT_ALLOCATION_LIMIT);
    let bidders = sorted_unique(bidders)?;
    let bands = sorted_unique(bands)?;
    if bidders.is_empty() {
        return Err(MechanismError::NoBidders);
    }
    let count = (bidders.len() as u128)
        .checked_pow(bands.len() as u32)
        .unwrap_or(u128::MAX);
    if count > limit as u128 {
        return Err(MechanismError::TooManyAllocations { count, limit });
    }
    let digits: Vec<Option<BidderId>> = bidders.iter().copied().map(Some).collect();
    let allocations = odometer(&bands, &digits, |_| true);
    Ok(AllocationSet { bidders, bands, allocations })
}

/// Allocations giving no bidder more than `cap` bands, where bands may stay
/// unassigned. With `cap ≥ |bands|` this is exactly [`enumerate_allocations`].
/// Unassigned is the last digit of the odometer, so the relative order of
/// complete assignments is unchanged.
pub fn enumerate_capped(
    bidders: &[BidderId],
    bands: &[BandId],
    cap: usize,
    limit: Option<usize>,
) -> Result<AllocationSet, MechanismError> {
    if cap >= bands.len() {
        return enumerate_allocations(bidders, bands, limit);
    }
    let limit = limit.unwrap_or(DEFAULT_ALLOCATION_LIMIT);
    let bidders = sorted_unique(bidders)?;
    let bands = sorted_unique(bands)?;
    if bidders.is_empty() {
        return Err(MechanismError::NoBidders);
    }
    let count = capped_count(bidders.len(), bands.len(), cap);
    if count > limit as u128 {
        return Err(MechanismError::TooManyAllocations { count, limit });
    }
    let mut digits: Vec<Option<BidderId>> = bidders.iter().copied().map(Some).collect();
    digits.push(None);
    let allocations = odometer(&bands, &digits, |owners| {
        bidders
            .iter()
            .all(|b| owners.iter().filter(|o| **o == Some(*b)).count() <= cap)
    });
    debug_assert_eq!(allocations.len() as u128, count);
    Ok(AllocationSet { bidders, bands, allocations })
}

/// Size of the capped allocation set without enumerating it.
pub fn capped_count(bidders: usize, bands: usize, cap: usize) -> u128 {
    if cap >= bands {
        return (bidders as u128).checked_pow(bands as u32).unwrap_or(u128::MAX);
    }
    let binom = binomials(bands);
    // ways[m]: ways to hand m specific labelled bands to the bidders so far.
    let mut ways = vec![0u128; bands + 1];
    ways[0] = 1;
    for _ in 0..bidders {
        let mut next = vec![0u128; bands + 1];
        for (m, slot) in next.iter_mut().enumerate() {
            for k in 0..=cap.min(m) {
                *slot = slot.saturating_add(binom[m][k].saturating_mul(ways[m - k]));
            }
        }
        ways = next;
    }
    (0..=bands).fold(0u128, |acc, m| acc.saturating_add(binom[bands][m].saturating_mul(ways[m])))
}

fn binomials(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1].saturating_add(c[i - 1][j]);
        }
    }
    c
}

fn odometer(
    bands: &[BandId],
    digits: &[Option<BidderId>],
    keep: impl Fn(&[Option<BidderId>]) -> bool,
) -> Vec<Allocation> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; bands.len()];
    loop {
        let owners: Vec<Option<BidderId>> = idx.iter().map(|&i| digits[i]).collect();
        if keep(&owners) {
            out.push(Allocation { bands: bands.to_vec(), owners });
        }
        // advance, last band fastest
        let mut pos = bands.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < digits.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Per-bidder values over an allocation set (`b_n(α)` or `v_n(α)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidProfile {
    bidders: Vec<BidderId>,
    values: Vec<Vec<u64>>,
    bound: u64,
}

impl BidProfile {
    pub fn new(
        bidders: Vec<BidderId>,
        values: Vec<Vec<u64>>,
        bound: u64,
    ) -> Result<Self, MechanismError> {
        if bidders.len() != values.len() {
            return Err(MechanismError::IndexMismatch(
                "one value vector per bidder expected".into(),
            ));
        }
        if sorted_unique(&bidders)?.len() != bidders.len() {
            return Err(MechanismError::Duplicate);
        }
        let width = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != width) {
            return Err(MechanismError::IndexMismatch("ragged value vectors".into()));
        }
        for (b, vs) in bidders.iter().zip(&values) {
            if let Some(&v) = vs.iter().find(|&&v| v > bound) {
                return Err(MechanismError::BidOutOfRange { bidder: *b, value: v, bound });
            }
        }
        Ok(BidProfile { bidders, values, bound })
    }

    /// Values derived from each bidder's own share of every allocation.
    pub fn from_shares(
        k: &AllocationSet,
        bound: u64,
        mut value: impl FnMut(BidderId, &[BandId]) -> u64,
    ) -> Result<Self, MechanismError> {
        let values = k
            .bidders
            .iter()
            .map(|&b| k.allocations.iter().map(|a| value(b, &a.share(b))).collect())
            .collect();
        Self::new(k.bidders.clone(), values, bound)
    }

    pub fn bidders(&self) -> &[BidderId] {
        &self.bidders
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn num_allocations(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn values_of(&self, bidder: BidderId) -> Result<&[u64], MechanismError> {
        self.bidders
            .iter()
            .position(|&b| b == bidder)
            .map(|i| self.values[i].as_slice())
            .ok_or(MechanismError::UnknownBidder(bidder))
    }

    pub fn value(&self, bidder: BidderId, alloc: usize) -> Result<u64, MechanismError> {
        self.values_of(bidder)?
            .get(alloc)
            .copied()
            .ok_or_else(|| MechanismError::IndexMismatch(format!("no allocation {alloc}")))
    }

    /// A copy with `bidder`'s vector replaced, e.g. a misreport.
    pub fn with_values(&self, bidder: BidderId, values: Vec<u64>) -> Result<Self, MechanismError> {
        let i = self
            .bidders
            .iter()
            .position(|&b| b == bidder)
            .ok_or(MechanismError::UnknownBidder(bidder))?;
        let mut next = self.values.clone();
        next[i] = values;
        Self::new(self.bidders.clone(), next, self.bound)
    }

    fn check_against(&self, k: &AllocationSet) -> Result<(), MechanismError> {
        if self.num_allocations() != k.len() {
            return Err(MechanismError::IndexMismatch(format!(
                "{} values per bidder for {} allocations",
                self.num_allocations(),
                k.len()
            )));
        }
        Ok(())
    }

    fn welfare_excluding(&self, alloc: usize, exclude: Option<BidderId>) -> u64 {
        self.bidders
            .iter()
            .zip(&self.values)
            .filter(|(b, _)| Some(**b) != exclude)
            .map(|(_, v)| v[alloc])
            .sum()
    }
}

/// `Σ_n b_n(α)` for the allocation at index `alloc`.
pub fn social_welfare(alloc: usize, bids: &BidProfile) -> Result<u64, MechanismError> {
    if alloc >= bids.num_allocations() {
        return Err(MechanismError::IndexMismatch(format!("no allocation {alloc}")));
    }
    Ok(bids.welfare_excluding(alloc, None))
}

/// Index of the welfare-maximizing allocation, optionally ignoring one
/// bidder's values (`α*₋ₙ`). Ties go to the lowest index.
pub fn optimal_allocation(
    bids: &BidProfile,
    k: &AllocationSet,
    exclude: Option<BidderId>,
) -> Result<usize, MechanismError> {
    bids.check_against(k)?;
    let mut best = 0;
    let mut best_welfare = None;
    for i in 0..k.len() {
        let w = bids.welfare_excluding(i, exclude);
        if best_welfare.is_none_or(|bw| w > bw) {
            best = i;
            best_welfare = Some(w);
        }
    }
    Ok(best)
}

/// `p_n = Σ_{k≠n} b_k(α*₋ₙ) − Σ_{k≠n} b_k(α*)`.
pub fn clarke_payment(
    bidder: BidderId,
    bids: &BidProfile,
    k: &AllocationSet,
) -> Result<u64, MechanismError> {
    bids.values_of(bidder)?;
    let star = optimal_allocation(bids, k, None)?;
    let star_minus = optimal_allocation(bids, k, Some(bidder))?;
    let without = bids.welfare_excluding(star_minus, Some(bidder));
    let with = bids.welfare_excluding(star, Some(bidder));
    Ok(without - with)
}

/// `U_n = v_n(α*) − p_n`.
pub fn utility(
    bidder: BidderId,
    valuations: &BidProfile,
    payment: u64,
    alpha_star: usize,
) -> Result<i64, MechanismError> {
    Ok(valuations.value(bidder, alpha_star)? as i64 - payment as i64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VcgOutcome {
    pub alpha_star_index: usize,
    pub alpha_star: Allocation,
    pub payments: BTreeMap<BidderId, u64>,
    pub utilities: BTreeMap<BidderId, i64>,
    /// `Σ_n b_n(α*)` over the reported bids.
    pub welfare: u64,
}

impl VcgOutcome {
    pub fn revenue(&self) -> u64 {
        self.payments.values().sum()
    }
}

/// Runs the mechanism on reported `bids`; utilities use the true `valuations`.
pub fn run_vcg(
    bids: &BidProfile,
    valuations: &BidProfile,
    k: &AllocationSet,
) -> Result<VcgOutcome, MechanismError> {
    let star = optimal_allocation(bids, k, None)?;
    let mut payments = BTreeMap::new();
    let mut utilities = BTreeMap::new();
    for &b in bids.bidders() {
        let p = clarke_payment(b, bids, k)?;
        payments.insert(b, p);
        utilities.insert(b, utility(b, valuations, p, star)?);
    }
    Ok(VcgOutcome {
        alpha_star_index: star,
        alpha_star: k.allocations[star].clone(),
        payments,
        utilities,
        welfare: social_welfare(star, bids)?,
    })
}

/// Truthful run: bids equal valuations.
pub fn run_truthful(bids: &BidProfile, k: &AllocationSet) -> Result<VcgOutcome, MechanismError> {
    run_vcg(bids, bids, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[u32]) -> Vec<BidderId> {
        v.iter().map(|&i| BidderId(i)).collect()
    }

    fn bands(v: &[u32]) -> Vec<BandId> {
        v.iter().map(|&i| BandId(i)).collect()
    }

    fn single_band(bids: &[u64]) -> (AllocationSet, BidProfile) {
        let bidders = ids(&(1..=bids.len() as u32).collect::<Vec<_>>());
        let k = enumerate_allocations(&bidders, &bands(&[1]), None).unwrap();
        let profile = BidProfile::from_shares(&k, 100, |b, share| {
            if share.is_empty() { 0 } else { bids[b.0 as usize - 1] }
        })
        .unwrap();
        (k, profile)
    }

    #[test]
    fn two_by_two_allocation_set_order() {
        let k = enumerate_allocations(&ids(&[1, 2]), &bands(&[1, 2]), None).unwrap();
        let shares: Vec<(Vec<BandId>, Vec<BandId>)> = k
            .iter()
            .map(|a| (a.share(BidderId(1)), a.share(BidderId(2))))
            .collect();
        assert_eq!(
            shares,
            vec![
                (bands(&[1, 2]), bands(&[])),
                (bands(&[1]), bands(&[2])),
                (bands(&[2]), bands(&[1])),
                (bands(&[]), bands(&[1, 2])),
            ]
        );
    }

    #[test]
    fn allocation_counts() {
        assert_eq!(enumerate_allocations(&ids(&[1]), &bands(&[1, 2, 3]), None).unwrap().len(), 1);
        assert_eq!(enumerate_allocations(&ids(&[1, 2, 3]), &bands(&[1, 2]), None).unwrap().len(), 9);
        // no bands: one empty allocation
        assert_eq!(enumerate_allocations(&ids(&[1, 2]), &[], None).unwrap().len(), 1);
    }

    #[test]
    fn allocation_size_guard() {
        let err = enumerate_allocations(&ids(&[1, 2, 3, 4, 5]), &bands(&[1, 2, 3, 4, 5, 6]), None)
            .unwrap_err();
        assert_eq!(err, MechanismError::TooManyAllocations { count: 15625, limit: 4096 });
        assert!(enumerate_allocations(&[], &bands(&[1]), None).is_err());
        assert_eq!(
            enumerate_allocations(&ids(&[1, 1]), &bands(&[1]), None).unwrap_err(),
            MechanismError::Duplicate
        );
    }

    #[test]
    fn capped_sets() {
        let all = enumerate_allocations(&ids(&[1, 2]), &bands(&[1, 2, 3]), None).unwrap();
        let same = enumerate_capped(&ids(&[1, 2]), &bands(&[1, 2, 3]), 3, None).unwrap();
        assert_eq!(all, same);

        let capped = enumerate_capped(&ids(&[1, 2]), &bands(&[1, 2, 3]), 1, None).unwrap();
        assert!(capped.iter().all(|a| a.share_size(BidderId(1)) <= 1 && a.share_size(BidderId(2)) <= 1));
        // brute force: 3^3 assignments over {1, 2, none}, keep ≤1 each
        let brute = (0..27)
            .filter(|x| {
                let d = [x % 3, (x / 3) % 3, x / 9];
                d.iter().filter(|&&v| v == 0).count() <= 1 && d.iter().filter(|&&v| v == 1).count() <= 1
            })
            .count();
        assert_eq!(capped.len(), brute);
        assert_eq!(capped_count(2, 3, 1), brute as u128);
        // complete assignments keep their relative order
        let complete: Vec<_> = capped.iter().filter(|a| a.assignments().all(|(_, o)| o.is_some())).collect();
        let mut sorted = complete.clone();
        sorted.sort_by_key(|a| all.position(a).unwrap());
        assert_eq!(complete, sorted);
    }

    #[test]
    fn welfare_examples() {
        let k = enumerate_allocations(&ids(&[1, 2]), &bands(&[1, 2]), None).unwrap();
        let bids = BidProfile::new(ids(&[1, 2]), vec![vec![2, 1, 1, 0], vec![0, 1, 1, 2]], 10).unwrap();
        assert_eq!(social_welfare(1, &bids).unwrap(), 2);
        assert_eq!(optimal_allocation(&bids, &k, None).unwrap(), 0);
        let zeros = BidProfile::new(ids(&[1, 2]), vec![vec![0; 4], vec![0; 4]], 10).unwrap();
        assert_eq!(social_welfare(3, &zeros).unwrap(), 0);
        assert!(social_welfare(4, &zeros).is_err());

        let solo = enumerate_allocations(&ids(&[7]), &bands(&[1, 2]), None).unwrap();
        let own = BidProfile::new(ids(&[7]), vec![vec![9]], 10).unwrap();
        assert_eq!(social_welfare(0, &own).unwrap(), 9);
        assert_eq!(solo.get(0).unwrap().share(BidderId(7)), bands(&[1, 2]));
    }

    #[test]
    fn decreasing_marginals_take_everything() {
        let k = enumerate_allocations(&ids(&[1, 2]), &bands(&[1, 2, 3]), None).unwrap();
        let marg = [5u64, 3, 1];
        let bids = BidProfile::from_shares(&k, 20, |b, s| {
            if b == BidderId(1) { marg[..s.len()].iter().sum() } else { 0 }
        })
        .unwrap();
        let star = optimal_allocation(&bids, &k, None).unwrap();
        assert_eq!(k.get(star).unwrap().share(BidderId(1)), bands(&[1, 2, 3]));
        // excluding the only positive bidder: every allocation is worth 0, first wins
        assert_eq!(optimal_allocation(&bids, &k, Some(BidderId(1))).unwrap(), 0);
    }

    #[test]
    fn second_price_on_one_band() {
        let (k, bids) = single_band(&[5, 7, 3, 8]);
        let out = run_truthful(&bids, &k).unwrap();
        assert_eq!(out.alpha_star.share(BidderId(4)), bands(&[1]));
        assert_eq!(out.payments[&BidderId(4)], 7);
        assert_eq!(out.utilities[&BidderId(4)], 1);
        for loser in [1, 2, 3] {
            assert_eq!(out.payments[&BidderId(loser)], 0);
            assert_eq!(out.utilities[&BidderId(loser)], 0);
        }

        let (k, bids) = single_band(&[4, 9]);
        assert_eq!(clarke_payment(BidderId(2), &bids, &k).unwrap(), 4);
    }

    #[test]
    fn winner_with_value_8_and_price_7_has_utility_1() {
        let (k, bids) = single_band(&[5, 7, 3, 8]);
        let star = optimal_allocation(&bids, &k, None).unwrap();
        assert_eq!(utility(BidderId(4), &bids, 7, star).unwrap(), 1);
    }

    #[test]
    fn bid_profile_validation() {
        assert!(matches!(
            BidProfile::new(ids(&[1]), vec![vec![11]], 10),
            Err(MechanismError::BidOutOfRange { .. })
        ));
        assert!(BidProfile::new(ids(&[1, 2]), vec![vec![1]], 10).is_err());
        assert!(BidProfile::new(ids(&[1, 2]), vec![vec![1], vec![1, 2]], 10).is_err());
        let k = enumerate_allocations(&ids(&[1, 2]), &bands(&[1]), None).unwrap();
        let short = BidProfile::new(ids(&[1, 2]), vec![vec![1], vec![1]], 10).unwrap();
        assert!(matches!(
            optimal_allocation(&short, &k, None),
            Err(MechanismError::IndexMismatch(_))
        ));
    }

    fn instance() -> impl Strategy<Value = (AllocationSet, BidProfile)> {
        (1usize..=3, 1usize..=2).prop_flat_map(|(n, m)| {
            let k = enumerate_allocations(
                &ids(&(1..=n as u32).collect::<Vec<_>>()),
                &bands(&(1..=m as u32).collect::<Vec<_>>()),
                None,
            )
            .unwrap();
            let len = k.len();
            prop::collection::vec(prop::collection::vec(0u64..=10, len), n).prop_map(move |vals| {
                let bids = BidProfile::new(k.bidders().to_vec(), vals, 10).unwrap();
                (k.clone(), bids)
            })
        })
    }

    proptest! {
        #[test]
        fn prop_truthful_outcome_is_rational(inst in instance()) {
            let (k, bids) = inst;
            let out = run_truthful(&bids, &k).unwrap();
            prop_assert!(out.utilities.values().all(|&u| u >= 0));
            let brute = (0..k.len()).map(|i| social_welfare(i, &bids).unwrap()).max().unwrap();
            prop_assert_eq!(out.welfare, brute);
            prop_assert_eq!(run_truthful(&bids, &k).unwrap(), out);
        }

        #[test]
        fn prop_misreport_never_helps(inst in instance(), lie in prop::collection::vec(0u64..=10, 64), who in 0usize..3) {
            let (k, truth) = inst;
            let bidder = truth.bidders()[who % truth.bidders().len()];
            let honest = run_truthful(&truth, &k).unwrap().utilities[&bidder];
            let lie: Vec<u64> = lie.into_iter().take(k.len()).collect();
            let reported = truth.with_values(bidder, lie).unwrap();
            let dishonest = run_vcg(&reported, &truth, &k).unwrap().utilities[&bidder];
            prop_assert!(honest >= dishonest);
        }
    }
}
