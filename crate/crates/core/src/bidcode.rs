//! Unary ciphertext-vector encoding of integer bids.
//!
//! A value `z` is a vector of `L` ciphertexts whose first `z` cells encrypt the
//! public element `x` and whose remaining cells encrypt `0`. Multiplying vectors
//! cell by cell yields, in cell `i`, an encryption of `γ(i)·x` where `γ(i)`
//! counts the aggregated values that are at least `i`; the largest non-zero
//! cell is the maximum. Shifting a vector right by `δ` cells (filling with
//! fresh `C(x)`) adds `δ` to the represented value without revealing it.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paillier::{self, Ciphertext, CryptoError, Decryptor, PublicKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("invalid encoding parameters: {0}")]
    InvalidParams(String),
    #[error("bid {value} exceeds the bound s = {max}")]
    BidOutOfRange { value: u64, max: u64 },
    #[error("shift by {delta} does not fit a vector of length {length}")]
    Capacity { delta: u64, length: usize },
    #[error("encoding corrupted at cell {cell}: {reason}")]
    Corruption { cell: usize, reason: String },
    #[error("vectors disagree on length or parameters")]
    Mismatch,
    #[error("no vectors to aggregate")]
    Empty,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Public parameters shared by every vector of one auction round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingParams {
    /// Upper bound on a single raw bid.
    pub s: u64,
    /// Upper bound on the gateway mask.
    pub t_max: u64,
    /// Public non-zero plaintext marking an occupied cell.
    pub x: u64,
    /// Vector length `L`.
    pub length: usize,
}

impl EncodingParams {
    pub fn new(s: u64, t_max: u64, x: u64, length: usize) -> Result<Self, EncodingError> {
        if s == 0 {
            return Err(EncodingError::InvalidParams("s must be at least 1".into()));
        }
        if t_max == 0 {
            return Err(EncodingError::InvalidParams("t_max must be at least 1".into()));
        }
        if x == 0 {
            return Err(EncodingError::InvalidParams("x must be non-zero".into()));
        }
        if (length as u64) < s {
            return Err(EncodingError::InvalidParams(format!(
                "length {length} is shorter than s = {s}"
            )));
        }
        Ok(EncodingParams { s, t_max, x, length })
    }

    /// Sized so that the sum of `bidders` bids of at most `s` plus a mask of
    /// at most `t_max` always fits: `L = bidders·s + t_max`, with `x = 1`.
    pub fn for_round(s: u64, t_max: u64, bidders: usize) -> Result<Self, EncodingError> {
        let length = (bidders.max(1) as u64)
            .checked_mul(s)
            .and_then(|v| v.checked_add(t_max))
            .ok_or_else(|| EncodingError::InvalidParams("vector length overflows".into()))?;
        Self::new(s, t_max, 1, length as usize)
    }

    /// Every cell plaintext (at most `count·x` after aggregating `count`
    /// vectors) must stay below the modulus.
    pub fn check_key(&self, pk: &PublicKey, count: usize) -> Result<(), EncodingError> {
        let top = BigUint::from(self.x) * BigUint::from(count.max(self.length) as u64);
        if &top >= pk.n() {
            return Err(EncodingError::InvalidParams(
                "modulus too small for these parameters".into(),
            ));
        }
        Ok(())
    }
}

/// An encrypted unary vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBid {
    cells: Vec<Ciphertext>,
    params: EncodingParams,
}

impl EncodedBid {
    pub fn cells(&self) -> &[Ciphertext] {
        &self.cells
    }

    pub fn params(&self) -> &EncodingParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell at 1-based position `i`.
    pub fn cell(&self, i: usize) -> Option<&Ciphertext> {
        i.checked_sub(1).and_then(|k| self.cells.get(k))
    }

    /// Rebuilds a vector from raw cells, e.g. after transport.
    pub fn from_cells(cells: Vec<Ciphertext>, params: EncodingParams) -> Result<Self, EncodingError> {
        if cells.len() != params.length {
            return Err(EncodingError::Mismatch);
        }
        Ok(EncodedBid { cells, params })
    }
}

/// Decrypted γ counts: `counts[i - 1] = γ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GammaProfile {
    pub counts: Vec<u64>,
}

impl GammaProfile {
    /// γ of plaintext values, the reference the encrypted profile must match.
    pub fn of_values(values: &[u64], length: usize) -> Self {
        let counts = (1..=length as u64)
            .map(|i| values.iter().filter(|&&z| z >= i).count() as u64)
            .collect();
        GammaProfile { counts }
    }

    /// Largest `i` with `γ(i) > 0`, or 0.
    pub fn max(&self) -> u64 {
        self.counts
            .iter()
            .rposition(|&c| c > 0)
            .map_or(0, |i| i as u64 + 1)
    }
}

pub fn encode<R: RngCore + ?Sized>(
    pk: &PublicKey,
    z: u64,
    params: &EncodingParams,
    rng: &mut R,
) -> Result<EncodedBid, EncodingError> {
    if z > params.s {
        return Err(EncodingError::BidOutOfRange { value: z, max: params.s });
    }
    let cells = (0..params.length as u64)
        .map(|i| {
            let m = if i < z { params.x } else { 0 };
            paillier::encrypt_u64(pk, m, rng)
        })
        .collect::<Result<_, _>>()?;
    Ok(EncodedBid { cells, params: *params })
}

/// An all-`C(0)` vector.
pub fn encode_zero<R: RngCore + ?Sized>(
    pk: &PublicKey,
    params: &EncodingParams,
    rng: &mut R,
) -> Result<EncodedBid, EncodingError> {
    encode(pk, 0, params, rng)
}

/// Number of cells that decrypt to a non-zero multiple of `x`.
pub fn decode<D: Decryptor + ?Sized>(dec: &D, v: &EncodedBid) -> Result<u64, EncodingError> {
    let mut count = 0;
    for (k, cell) in v.cells.iter().enumerate() {
        if decrypt_multiple(dec, cell, v.params.x, k + 1)? > 0 {
            count += 1;
        }
    }
    Ok(count)
}

/// Adds `delta` to the represented value: `delta` fresh `C(x)` cells are
/// prepended, the vector is truncated back to `L`, and every carried cell is
/// re-randomized. The caller guarantees the truncated tail encrypts zeros.
pub fn shift_add<R: RngCore + ?Sized>(
    pk: &PublicKey,
    v: &EncodedBid,
    delta: u64,
    rng: &mut R,
) -> Result<EncodedBid, EncodingError> {
    let length = v.params.length;
    if delta > length as u64 {
        return Err(EncodingError::Capacity { delta, length });
    }
    let delta = delta as usize;
    let mut cells = Vec::with_capacity(length);
    for _ in 0..delta {
        cells.push(paillier::encrypt_u64(pk, v.params.x, rng)?);
    }
    for cell in &v.cells[..length - delta] {
        cells.push(paillier::rerandomize(pk, cell, rng)?);
    }
    Ok(EncodedBid { cells, params: v.params })
}

/// Cell-wise homomorphic sum of `vs`.
pub fn elementwise_product(pk: &PublicKey, vs: &[EncodedBid]) -> Result<EncodedBid, EncodingError> {
    let (first, rest) = vs.split_first().ok_or(EncodingError::Empty)?;
    if rest.iter().any(|v| v.params != first.params || v.len() != first.len()) {
        return Err(EncodingError::Mismatch);
    }
    let mut cells = first.cells.clone();
    for v in rest {
        for (acc, c) in cells.iter_mut().zip(&v.cells) {
            *acc = paillier::hom_add(pk, acc, c)?;
        }
    }
    Ok(EncodedBid { cells, params: first.params })
}

/// Largest `i` whose cell decrypts non-zero, scanning from the top; 0 when
/// every cell is zero. The cell just below the hit is also checked so that a
/// profile that rises again is reported instead of silently accepted.
pub fn max_encoded<D: Decryptor + ?Sized>(dec: &D, q: &EncodedBid) -> Result<u64, EncodingError> {
    let x = q.params.x;
    for i in (1..=q.len()).rev() {
        let gamma = decrypt_multiple(dec, &q.cells[i - 1], x, i)?;
        if gamma > 0 {
            if i > 1 {
                let below = decrypt_multiple(dec, &q.cells[i - 2], x, i - 1)?;
                if below < gamma {
                    return Err(EncodingError::Corruption {
                        cell: i - 1,
                        reason: format!("γ({}) = {below} < γ({i}) = {gamma}", i - 1),
                    });
                }
            }
            return Ok(i as u64);
        }
    }
    Ok(0)
}

/// Decrypts every cell of a product vector into its γ profile.
pub fn gamma_profile<D: Decryptor + ?Sized>(
    dec: &D,
    q: &EncodedBid,
) -> Result<GammaProfile, EncodingError> {
    let mut counts = Vec::with_capacity(q.len());
    for (k, cell) in q.cells.iter().enumerate() {
        let gamma = decrypt_multiple(dec, cell, q.params.x, k + 1)?;
        if let Some(&prev) = counts.last() {
            if gamma > prev {
                return Err(EncodingError::Corruption {
                    cell: k + 1,
                    reason: "γ is not non-increasing".into(),
                });
            }
        }
        counts.push(gamma);
    }
    Ok(GammaProfile { counts })
}

/// Decrypts one cell and returns its plaintext divided by `x`.
fn decrypt_multiple<D: Decryptor + ?Sized>(
    dec: &D,
    cell: &Ciphertext,
    x: u64,
    position: usize,
) -> Result<u64, EncodingError> {
    let m = dec.decrypt(cell)?;
    let m = m.to_u64().ok_or_else(|| EncodingError::Corruption {
        cell: position,
        reason: "plaintext does not fit a cell counter".into(),
    })?;
    if m % x != 0 {
        return Err(EncodingError::Corruption {
            cell: position,
            reason: format!("plaintext {m} is not a multiple of x = {x}"),
        });
    }
    Ok(m / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paillier::{keygen, PrivateKey};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::OnceLock;

    fn keys() -> &'static (PublicKey, PrivateKey) {
        static KEYS: OnceLock<(PublicKey, PrivateKey)> = OnceLock::new();
        KEYS.get_or_init(|| keygen(128, &mut ChaCha20Rng::seed_from_u64(77)).unwrap())
    }

    fn plain(sk: &PrivateKey, v: &EncodedBid) -> Vec<u64> {
        v.cells()
            .iter()
            .map(|c| paillier::decrypt(sk, c).unwrap().to_u64().unwrap())
            .collect()
    }

    #[test]
    fn encode_pattern() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = EncodingParams::new(4, 4, 1, 4).unwrap();
        assert_eq!(plain(sk, &encode(pk, 2, &p, &mut rng).unwrap()), [1, 1, 0, 0]);
        assert_eq!(plain(sk, &encode(pk, 0, &p, &mut rng).unwrap()), [0, 0, 0, 0]);
        assert_eq!(plain(sk, &encode(pk, 4, &p, &mut rng).unwrap()), [1, 1, 1, 1]);
    }

    #[test]
    fn encode_rejects_bid_above_bound() {
        let (pk, _) = keys();
        let p = EncodingParams::new(4, 4, 1, 8).unwrap();
        let err = encode(pk, 5, &p, &mut ChaCha20Rng::seed_from_u64(1)).unwrap_err();
        assert_eq!(err, EncodingError::BidOutOfRange { value: 5, max: 4 });
    }

    #[test]
    fn params_validation() {
        assert!(EncodingParams::new(0, 1, 1, 4).is_err());
        assert!(EncodingParams::new(4, 0, 1, 4).is_err());
        assert!(EncodingParams::new(4, 1, 0, 4).is_err());
        assert!(EncodingParams::new(4, 1, 1, 3).is_err());
        let p = EncodingParams::for_round(16, 16, 4).unwrap();
        assert_eq!(p.length, 80);
        assert_eq!(p.x, 1);
    }

    #[test]
    fn decode_roundtrip_and_shift() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let p = EncodingParams::new(8, 8, 1, 16).unwrap();
        assert_eq!(decode(sk, &encode(pk, 7, &p, &mut rng).unwrap()).unwrap(), 7);
        let three = encode(pk, 3, &p, &mut rng).unwrap();
        assert_eq!(decode(sk, &shift_add(pk, &three, 2, &mut rng).unwrap()).unwrap(), 5);
        assert_eq!(decode(sk, &encode_zero(pk, &p, &mut rng).unwrap()).unwrap(), 0);
    }

    #[test]
    fn shift_by_zero_only_reblinds() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = EncodingParams::new(4, 4, 1, 8).unwrap();
        let v = encode(pk, 2, &p, &mut rng).unwrap();
        let w = shift_add(pk, &v, 0, &mut rng).unwrap();
        assert_eq!(decode(sk, &w).unwrap(), 2);
        assert!(v.cells().iter().zip(w.cells()).all(|(a, b)| a != b));
    }

    #[test]
    fn shift_into_longer_vector() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let p = EncodingParams::new(4, 4, 1, 8).unwrap();
        let v = encode(pk, 2, &p, &mut rng).unwrap();
        let w = shift_add(pk, &v, 3, &mut rng).unwrap();
        assert_eq!(plain(sk, &w), [1, 1, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn gateway_mask_cancels() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let p = EncodingParams::new(6, 6, 1, 12).unwrap();
        let v = encode(pk, 4, &p, &mut rng).unwrap();
        let t = 5;
        let masked = shift_add(pk, &v, t, &mut rng).unwrap();
        assert_eq!(decode(sk, &masked).unwrap() - t, decode(sk, &v).unwrap());
    }

    #[test]
    fn shift_capacity_error() {
        let (pk, _) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let p = EncodingParams::new(4, 4, 1, 4).unwrap();
        let v = encode(pk, 1, &p, &mut rng).unwrap();
        assert_eq!(
            shift_add(pk, &v, 5, &mut rng).unwrap_err(),
            EncodingError::Capacity { delta: 5, length: 4 }
        );
    }

    #[test]
    fn product_gives_gamma_counts() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let p = EncodingParams::new(4, 4, 1, 4).unwrap();
        let vs: Vec<_> = [3, 1, 2]
            .iter()
            .map(|&z| encode(pk, z, &p, &mut rng).unwrap())
            .collect();
        let q = elementwise_product(pk, &vs).unwrap();
        assert_eq!(plain(sk, &q), [3, 2, 1, 0]);
        assert_eq!(gamma_profile(sk, &q).unwrap().counts, [3, 2, 1, 0]);
        assert_eq!(max_encoded(sk, &q).unwrap(), 3);

        let mut with_zero = vs.clone();
        with_zero.push(encode_zero(pk, &p, &mut rng).unwrap());
        assert_eq!(plain(sk, &elementwise_product(pk, &with_zero).unwrap()), [3, 2, 1, 0]);

        let single = elementwise_product(pk, &vs[..1]).unwrap();
        assert_eq!(plain(sk, &single), [1, 1, 1, 0]);
    }

    #[test]
    fn max_of_zeros_and_ties() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let p = EncodingParams::new(6, 6, 1, 6).unwrap();
        let zeros: Vec<_> = (0..3).map(|_| encode_zero(pk, &p, &mut rng).unwrap()).collect();
        assert_eq!(max_encoded(sk, &elementwise_product(pk, &zeros).unwrap()).unwrap(), 0);
        let fives: Vec<_> = (0..2).map(|_| encode(pk, 5, &p, &mut rng).unwrap()).collect();
        assert_eq!(max_encoded(sk, &elementwise_product(pk, &fives).unwrap()).unwrap(), 5);
    }

    #[test]
    fn product_rejects_mismatched_vectors() {
        let (pk, _) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let a = encode(pk, 1, &EncodingParams::new(4, 4, 1, 4).unwrap(), &mut rng).unwrap();
        let b = encode(pk, 1, &EncodingParams::new(4, 4, 1, 6).unwrap(), &mut rng).unwrap();
        assert_eq!(elementwise_product(pk, &[a, b]).unwrap_err(), EncodingError::Mismatch);
        assert_eq!(elementwise_product(pk, &[]).unwrap_err(), EncodingError::Empty);
    }

    #[test]
    fn non_multiple_of_x_is_corruption() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let p = EncodingParams::new(4, 4, 3, 4).unwrap();
        let mut cells = encode(pk, 2, &p, &mut rng).unwrap().cells().to_vec();
        cells[1] = paillier::encrypt_u64(pk, 2, &mut rng).unwrap();
        let bad = EncodedBid::from_cells(cells, p).unwrap();
        assert!(matches!(
            decode(sk, &bad).unwrap_err(),
            EncodingError::Corruption { cell: 2, .. }
        ));
    }

    #[test]
    fn rising_gamma_is_corruption() {
        let (pk, sk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let p = EncodingParams::new(4, 4, 1, 4).unwrap();
        let cells: Vec<_> = [1u64, 0, 2, 0]
            .iter()
            .map(|&m| paillier::encrypt_u64(pk, m, &mut rng).unwrap())
            .collect();
        let bad = EncodedBid::from_cells(cells, p).unwrap();
        assert!(matches!(
            max_encoded(sk, &bad).unwrap_err(),
            EncodingError::Corruption { .. }
        ));
        assert!(gamma_profile(sk, &bad).is_err());
    }

    #[test]
    fn check_key_rejects_tiny_modulus() {
        let (pk, _) = crate::paillier::keypair_from_primes(&5u32.into(), &7u32.into()).unwrap();
        let p = EncodingParams::new(16, 16, 1, 48).unwrap();
        assert!(p.check_key(&pk, 3).is_err());
        assert!(EncodingParams::new(4, 4, 1, 8).unwrap().check_key(&pk, 3).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_shift_adds(z in 0u64..=8, d in 0u64..=8, seed in any::<u64>()) {
            let (pk, sk) = keys();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = EncodingParams::new(8, 8, 1, 16).unwrap();
            let v = encode(pk, z, &p, &mut rng).unwrap();
            prop_assert_eq!(decode(sk, &v).unwrap(), z);
            let w = shift_add(pk, &v, d, &mut rng).unwrap();
            let cells = plain(sk, &w);
            let expected: Vec<u64> = (0..16).map(|i| u64::from(i < z + d)).collect();
            prop_assert_eq!(cells, expected);
            prop_assert!(v.cells().iter().all(|c| !w.cells().contains(c)));
        }

        #[test]
        fn prop_product_matches_gamma(values in prop::collection::vec(0u64..=6, 1..=5), seed in any::<u64>()) {
            let (pk, sk) = keys();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = EncodingParams::new(6, 6, 1, 6).unwrap();
            let vs: Vec<_> = values.iter().map(|&z| encode(pk, z, &p, &mut rng).unwrap()).collect();
            let q = elementwise_product(pk, &vs).unwrap();
            let reference = GammaProfile::of_values(&values, 6);
            prop_assert_eq!(&gamma_profile(sk, &q).unwrap(), &reference);
            prop_assert_eq!(max_encoded(sk, &q).unwrap(), *values.iter().max().unwrap());
        }
    }
}
