//! Paillier cryptosystem with `g = n + 1`.
//!
//! Encryption is `(1 + m·n)·ρ mod n²` where `ρ` is a random n-th residue.
//! For moduli of 128 bits and up, `ρ` is drawn as `h^k` for a per-key public
//! base `h = r₀ⁿ` and a uniformly random `k` of half the modulus length, using
//! a precomputed fixed-base window table. Smaller moduli use the textbook
//! `ρ = rⁿ` with `r ∈ Z*_n`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_prime::RandPrime;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Moduli at or above this size use the fixed-base randomizer.
const FIXED_BASE_MIN_BITS: u64 = 128;
const WINDOW_BITS: usize = 8;
const MAX_KEYGEN_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("key size must be even and at least 16 bits, got {0}")]
    InvalidKeySize(u64),
    #[error("prime generation failed for a {bits}-bit modulus after {attempts} attempts")]
    PrimeGeneration { bits: u64, attempts: usize },
    #[error("invalid key material: {0}")]
    InvalidKey(String),
    #[error("plaintext is not in [0, n)")]
    PlaintextOutOfRange,
    #[error("malformed ciphertext: not a unit modulo n²")]
    MalformedCiphertext,
    #[error("ciphertext does not belong to this key's ciphertext space")]
    KeyMismatch,
}

/// A Paillier ciphertext, an element of `Z*_{n²}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext(BigUint);

impl Ciphertext {
    /// Wraps a raw residue. No validation happens until the value is used with a key.
    pub fn from_value(value: BigUint) -> Self {
        Ciphertext(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn to_bytes_be(&self) -> Vec<u8> {
        self.0.to_bytes_be()
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.0.to_str_radix(16);
        if hex.len() > 16 {
            write!(f, "Ciphertext({}…)", &hex[..16])
        } else {
            write!(f, "Ciphertext({hex})")
        }
    }
}

/// Precomputed powers `h^(d·2^(w·j))` for every window `j` and digit `d`.
struct FixedBaseTable {
    exponent_bits: u64,
    windows: Vec<Vec<BigUint>>,
}

impl FixedBaseTable {
    fn new(base: &BigUint, modulus: &BigUint, exponent_bits: u64) -> Self {
        let digits = 1usize << WINDOW_BITS;
        let count = (exponent_bits as usize).div_ceil(WINDOW_BITS);
        let mut windows = Vec::with_capacity(count);
        let mut window_base = base.clone();
        for _ in 0..count {
            let mut row = Vec::with_capacity(digits);
            row.push(BigUint::one());
            for d in 1..digits {
                let next = (&row[d - 1] * &window_base) % modulus;
                row.push(next);
            }
            // base for the next window is h^(2^w) relative to this one
            window_base = (&row[digits - 1] * &window_base) % modulus;
            windows.push(row);
        }
        FixedBaseTable {
            exponent_bits,
            windows,
        }
    }

    fn pow(&self, exponent: &BigUint, modulus: &BigUint) -> BigUint {
        let bytes = exponent.to_bytes_le();
        let mut acc = BigUint::one();
        for (j, row) in self.windows.iter().enumerate() {
            let digit = bytes.get(j).copied().unwrap_or(0) as usize;
            if digit != 0 {
                acc = (acc * &row[digit]) % modulus;
            }
        }
        acc
    }
}

/// Paillier public key. Cloning is cheap; the randomizer table is shared.
#[derive(Clone)]
pub struct PublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
    randomizer: Arc<OnceLock<FixedBaseTable>>,
}

impl PublicKey {
    /// Builds a public key from its modulus; `g` is fixed to `n + 1`.
    pub fn from_modulus(n: BigUint) -> Result<Self, CryptoError> {
        if n < BigUint::from(15u32) || n.is_even() {
            return Err(CryptoError::InvalidKey(
                "modulus must be an odd integer ≥ 15".into(),
            ));
        }
        let g = &n + 1u32;
        let n_squared = &n * &n;
        Ok(PublicKey {
            n,
            g,
            n_squared,
            randomizer: Arc::new(OnceLock::new()),
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bits(&self) -> u64 {
        self.n.bits()
    }

    fn check(&self, c: &Ciphertext) -> Result<(), CryptoError> {
        if c.0.is_zero() || c.0 >= self.n_squared {
            return Err(CryptoError::KeyMismatch);
        }
        Ok(())
    }

    fn fixed_base(&self) -> &FixedBaseTable {
        self.randomizer.get_or_init(|| {
            let base = derive_residue_base(&self.n);
            let h = base.modpow(&self.n, &self.n_squared);
            FixedBaseTable::new(&h, &self.n_squared, self.n.bits().div_ceil(2))
        })
    }

    /// A fresh random n-th residue modulo n².
    fn random_nth_residue<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        if self.n.bits() >= FIXED_BASE_MIN_BITS {
            let table = self.fixed_base();
            let k = rng.gen_biguint(table.exponent_bits);
            table.pow(&k, &self.n_squared)
        } else {
            let r = random_unit(&self.n, rng);
            r.modpow(&self.n, &self.n_squared)
        }
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for PublicKey {}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicKey")
            .field("bits", &self.n.bits())
            .field("n", &self.n.to_str_radix(16))
            .finish()
    }
}

/// Paillier private key (`λ = lcm(p−1, q−1)`, `μ = λ⁻¹ mod n`).
#[derive(Clone)]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
    n: BigUint,
    n_squared: BigUint,
}

impl PrivateKey {
    pub fn from_parts(lambda: BigUint, mu: BigUint, n: BigUint) -> Result<Self, CryptoError> {
        if n < BigUint::from(15u32) || lambda.is_zero() || mu.is_zero() || mu >= n {
            return Err(CryptoError::InvalidKey("inconsistent private key".into()));
        }
        let n_squared = &n * &n;
        Ok(PrivateKey {
            lambda,
            mu,
            n,
            n_squared,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrivateKey")
            .field("bits", &self.n.bits())
            .finish_non_exhaustive()
    }
}

/// Anything that can turn a ciphertext back into its plaintext.
///
/// Implemented by [`PrivateKey`]; wrappers use it to observe every decryption.
pub trait Decryptor {
    fn decrypt(&self, c: &Ciphertext) -> Result<BigUint, CryptoError>;
}

impl Decryptor for PrivateKey {
    fn decrypt(&self, c: &Ciphertext) -> Result<BigUint, CryptoError> {
        decrypt(self, c)
    }
}

/// Generates a keypair whose modulus has exactly `bits` bits.
pub fn keygen<R: RngCore + ?Sized>(
    bits: u64,
    mut rng: &mut R,
) -> Result<(PublicKey, PrivateKey), CryptoError> {
    if bits < 16 || bits % 2 != 0 {
        return Err(CryptoError::InvalidKeySize(bits));
    }
    let half = (bits / 2) as usize;
    for _ in 0..MAX_KEYGEN_ATTEMPTS {
        let p: BigUint = rng.gen_prime(half, None);
        let q: BigUint = rng.gen_prime(half, None);
        if p == q {
            continue;
        }
        let n = &p * &q;
        if n.bits() != bits {
            continue;
        }
        match keypair_from_primes(&p, &q) {
            Ok(pair) => return Ok(pair),
            Err(_) => continue,
        }
    }
    Err(CryptoError::PrimeGeneration {
        bits,
        attempts: MAX_KEYGEN_ATTEMPTS,
    })
}

/// Builds a keypair from caller-chosen primes. Intended for hand-checkable
/// fixtures such as `p = 5, q = 7`.
pub fn keypair_from_primes(
    p: &BigUint,
    q: &BigUint,
) -> Result<(PublicKey, PrivateKey), CryptoError> {
    let one = BigUint::one();
    if p == q || p <= &one || q <= &one {
        return Err(CryptoError::InvalidKey("p and q must be distinct primes".into()));
    }
    let n = p * q;
    let p1 = p - &one;
    let q1 = q - &one;
    if !n.gcd(&(&p1 * &q1)).is_one() {
        return Err(CryptoError::InvalidKey("gcd(n, φ(n)) ≠ 1".into()));
    }
    let lambda = p1.lcm(&q1);
    let mu = lambda
        .modinv(&n)
        .ok_or_else(|| CryptoError::InvalidKey("λ is not invertible mod n".into()))?;
    let pk = PublicKey::from_modulus(n.clone())?;
    let sk = PrivateKey::from_parts(lambda, mu, n)?;
    Ok((pk, sk))
}

pub fn encrypt<R: RngCore + ?Sized>(
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    if m >= &pk.n {
        return Err(CryptoError::PlaintextOutOfRange);
    }
    let rho = pk.random_nth_residue(rng);
    Ok(Ciphertext(encode_plaintext(pk, m) * rho % &pk.n_squared))
}

pub fn encrypt_u64<R: RngCore + ?Sized>(
    pk: &PublicKey,
    m: u64,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    encrypt(pk, &BigUint::from(m), rng)
}

/// Textbook encryption `gᵐ·rⁿ mod n²` with an explicit nonce.
pub fn encrypt_with_nonce(
    pk: &PublicKey,
    m: &BigUint,
    r: &BigUint,
) -> Result<Ciphertext, CryptoError> {
    if m >= &pk.n {
        return Err(CryptoError::PlaintextOutOfRange);
    }
    if r.is_zero() || r >= &pk.n || !r.gcd(&pk.n).is_one() {
        return Err(CryptoError::InvalidKey("nonce must be a unit modulo n".into()));
    }
    let rho = r.modpow(&pk.n, &pk.n_squared);
    Ok(Ciphertext(encode_plaintext(pk, m) * rho % &pk.n_squared))
}

pub fn decrypt(sk: &PrivateKey, c: &Ciphertext) -> Result<BigUint, CryptoError> {
    if c.0.is_zero() || c.0 >= sk.n_squared || !c.0.gcd(&sk.n_squared).is_one() {
        return Err(CryptoError::MalformedCiphertext);
    }
    let u = c.0.modpow(&sk.lambda, &sk.n_squared);
    let l = (u - 1u32) / &sk.n;
    Ok(l * &sk.mu % &sk.n)
}

/// Homomorphic addition: the product decrypts to `(m₁ + m₂) mod n`.
pub fn hom_add(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, CryptoError> {
    pk.check(c1)?;
    pk.check(c2)?;
    Ok(Ciphertext(&c1.0 * &c2.0 % &pk.n_squared))
}

/// Self-blinding: multiplies by a fresh encryption of zero.
pub fn rerandomize<R: RngCore + ?Sized>(
    pk: &PublicKey,
    c: &Ciphertext,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    pk.check(c)?;
    let rho = pk.random_nth_residue(rng);
    Ok(Ciphertext(&c.0 * rho % &pk.n_squared))
}

/// `gᵐ = 1 + m·n (mod n²)` for `g = n + 1`.
fn encode_plaintext(pk: &PublicKey, m: &BigUint) -> BigUint {
    (BigUint::one() + m * &pk.n) % &pk.n_squared
}

fn random_unit<R: RngCore + ?Sized>(n: &BigUint, rng: &mut R) -> BigUint {
    loop {
        let r = rng.gen_biguint_range(&BigUint::one(), n);
        if r.gcd(n).is_one() {
            return r;
        }
    }
}

/// Deterministic unit `r₀ ∈ Z*_n` derived from the modulus, so the randomizer
/// base needs no extra key material.
fn derive_residue_base(n: &BigUint) -> BigUint {
    let want = (n.bits() as usize + 64).div_ceil(8);
    let n_bytes = n.to_bytes_be();
    for attempt in 0u32.. {
        let mut bytes = Vec::with_capacity(want + 32);
        let mut counter = 0u32;
        while bytes.len() < want {
            let mut hasher = Sha256::new();
            hasher.update(b"mtssa/paillier/randomizer-base");
            hasher.update(attempt.to_be_bytes());
            hasher.update(counter.to_be_bytes());
            hasher.update(&n_bytes);
            bytes.extend_from_slice(&hasher.finalize());
            counter += 1;
        }
        let r = BigUint::from_bytes_be(&bytes[..want]) % n;
        if r > BigUint::one() && r.gcd(n).is_one() {
            return r;
        }
    }
    unreachable!("a unit modulo n always exists")
}

#[derive(Serialize, Deserialize)]
struct PublicKeyJson {
    n: String,
    g: String,
}

#[derive(Serialize, Deserialize)]
struct PrivateKeyJson {
    lambda: String,
    mu: String,
    n: String,
}

fn to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

fn from_hex(field: &str, s: &str) -> Result<BigUint, CryptoError> {
    BigUint::parse_bytes(s.trim_start_matches("0x").as_bytes(), 16)
        .ok_or_else(|| CryptoError::InvalidKey(format!("field `{field}` is not a hex integer")))
}

impl Serialize for PublicKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PublicKeyJson {
            n: to_hex(&self.n),
            g: to_hex(&self.g),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PublicKeyJson::deserialize(deserializer)?;
        let n = from_hex("n", &raw.n).map_err(D::Error::custom)?;
        let g = from_hex("g", &raw.g).map_err(D::Error::custom)?;
        let pk = PublicKey::from_modulus(n).map_err(D::Error::custom)?;
        if g % pk.n_squared() != pk.g {
            return Err(D::Error::custom("g must equal n + 1"));
        }
        Ok(pk)
    }
}

impl Serialize for PrivateKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PrivateKeyJson {
            lambda: to_hex(&self.lambda),
            mu: to_hex(&self.mu),
            n: to_hex(&self.n),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PrivateKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PrivateKeyJson::deserialize(deserializer)?;
        let lambda = from_hex("lambda", &raw.lambda).map_err(D::Error::custom)?;
        let mu = from_hex("mu", &raw.mu).map_err(D::Error::custom)?;
        let n = from_hex("n", &raw.n).map_err(D::Error::custom)?;
        PrivateKey::from_parts(lambda, mu, n).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> (PublicKey, PrivateKey) {
        keypair_from_primes(&BigUint::from(5u32), &BigUint::from(7u32)).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_prime_key_matches_hand_computation() {
        let (pk, sk) = toy();
        assert_eq!(pk.n(), &big(35));
        assert_eq!(pk.g(), &big(36));
        assert_eq!(sk.lambda(), &big(12));
        assert_eq!(sk.mu(), &big(3));
    }

    #[test]
    fn small_prime_fixture_ciphertext() {
        // (1 + 7·35)·11³⁵ mod 1225, computed independently.
        let (pk, sk) = toy();
        let c = encrypt_with_nonce(&pk, &big(7), &big(11)).unwrap();
        assert_eq!(c.value(), &big(471));
        assert_eq!(decrypt(&sk, &c).unwrap(), big(7));
        // textbook g^m·r^n form agrees
        let textbook = pk.g().modpow(&big(7), pk.n_squared()) * big(11).modpow(pk.n(), pk.n_squared())
            % pk.n_squared();
        assert_eq!(&textbook, c.value());
    }

    #[test]
    fn keygen_16_bits_roundtrips() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (pk, sk) = keygen(16, &mut rng).unwrap();
        assert!(pk.n() >= &big(1 << 15));
        assert_eq!(pk.bits(), 16);
        for _ in 0..100 {
            let m = rng.gen_biguint_below(pk.n());
            let c = encrypt(&pk, &m, &mut rng).unwrap();
            assert_eq!(decrypt(&sk, &c).unwrap(), m);
        }
    }

    #[test]
    fn keygen_512_bits_roundtrips() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (pk, sk) = keygen(512, &mut rng).unwrap();
        assert_eq!(pk.bits(), 512);
        let m = rng.gen_biguint_below(pk.n());
        let c = encrypt(&pk, &m, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &c).unwrap(), m);
    }

    #[test]
    fn keygen_is_deterministic_per_seed() {
        let a = keygen(64, &mut ChaCha20Rng::seed_from_u64(9)).unwrap().0;
        let b = keygen(64, &mut ChaCha20Rng::seed_from_u64(9)).unwrap().0;
        assert_eq!(a.n(), b.n());
    }

    #[test]
    fn keygen_rejects_odd_or_tiny_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(keygen(15, &mut rng).unwrap_err(), CryptoError::InvalidKeySize(15));
        assert_eq!(keygen(8, &mut rng).unwrap_err(), CryptoError::InvalidKeySize(8));
    }

    #[test]
    fn encrypting_zero_twice_gives_distinct_ciphertexts() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (pk, sk) = keygen(256, &mut rng).unwrap();
        let a = encrypt_u64(&pk, 0, &mut rng).unwrap();
        let b = encrypt_u64(&pk, 0, &mut rng).unwrap();
        assert_ne!(a, b);
        assert_eq!(decrypt(&sk, &a).unwrap(), big(0));
        assert_eq!(decrypt(&sk, &b).unwrap(), big(0));
    }

    #[test]
    fn boundary_plaintext_roundtrips() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (pk, sk) = keygen(128, &mut rng).unwrap();
        let top = pk.n() - 1u32;
        let c = encrypt(&pk, &top, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &c).unwrap(), top);
        assert_eq!(
            encrypt(&pk, pk.n(), &mut rng).unwrap_err(),
            CryptoError::PlaintextOutOfRange
        );
    }

    #[test]
    fn decrypt_rejects_non_units() {
        let (_, sk) = toy();
        // 5 divides n², so it is not a unit.
        let err = decrypt(&sk, &Ciphertext::from_value(big(5))).unwrap_err();
        assert_eq!(err, CryptoError::MalformedCiphertext);
        let err = decrypt(&sk, &Ciphertext::from_value(big(0))).unwrap_err();
        assert_eq!(err, CryptoError::MalformedCiphertext);
    }

    #[test]
    fn homomorphic_addition() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (pk, sk) = keygen(128, &mut rng).unwrap();
        let c3 = encrypt_u64(&pk, 3, &mut rng).unwrap();
        let c4 = encrypt_u64(&pk, 4, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &hom_add(&pk, &c3, &c4).unwrap()).unwrap(), big(7));

        let zero = encrypt_u64(&pk, 0, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &hom_add(&pk, &c3, &zero).unwrap()).unwrap(), big(3));

        let one = encrypt_u64(&pk, 1, &mut rng).unwrap();
        let mut acc = encrypt_u64(&pk, 0, &mut rng).unwrap();
        for _ in 0..10 {
            acc = hom_add(&pk, &acc, &one).unwrap();
        }
        assert_eq!(decrypt(&sk, &acc).unwrap(), big(10));
    }

    #[test]
    fn hom_add_wraps_mod_n() {
        let (pk, sk) = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let a = encrypt_u64(&pk, 30, &mut rng).unwrap();
        let b = encrypt_u64(&pk, 9, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &hom_add(&pk, &a, &b).unwrap()).unwrap(), big(4));
    }

    #[test]
    fn hom_add_rejects_foreign_ciphertexts() {
        let (pk, _) = toy();
        let outside = Ciphertext::from_value(big(35 * 35 + 2));
        let inside = Ciphertext::from_value(big(2));
        assert_eq!(hom_add(&pk, &outside, &inside).unwrap_err(), CryptoError::KeyMismatch);
    }

    #[test]
    fn rerandomize_preserves_plaintext() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (pk, sk) = keygen(256, &mut rng).unwrap();
        let c5 = encrypt_u64(&pk, 5, &mut rng).unwrap();
        let r5 = rerandomize(&pk, &c5, &mut rng).unwrap();
        assert_ne!(c5, r5);
        assert_eq!(decrypt(&sk, &r5).unwrap(), big(5));
        let c0 = encrypt_u64(&pk, 0, &mut rng).unwrap();
        assert_eq!(decrypt(&sk, &rerandomize(&pk, &c0, &mut rng).unwrap()).unwrap(), big(0));
    }

    #[test]
    fn hundred_rerandomizations_are_pairwise_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (pk, sk) = keygen(256, &mut rng).unwrap();
        let c = encrypt_u64(&pk, 42, &mut rng).unwrap();
        let outs: Vec<_> = (0..100)
            .map(|_| rerandomize(&pk, &c, &mut rng).unwrap())
            .collect();
        let distinct: std::collections::HashSet<_> = outs.iter().collect();
        assert_eq!(distinct.len(), 100);
        assert!(outs.iter().all(|o| decrypt(&sk, o).unwrap() == big(42)));
    }

    #[test]
    fn fixed_base_randomizer_is_an_nth_residue() {
        // an n-th residue decrypts to zero
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let (pk, sk) = keygen(192, &mut rng).unwrap();
        let rho = pk.random_nth_residue(&mut rng);
        assert_eq!(decrypt(&sk, &Ciphertext(rho)).unwrap(), big(0));
    }

    #[test]
    fn key_json_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (pk, sk) = keygen(64, &mut rng).unwrap();
        let pk2: PublicKey = serde_json::from_str(&serde_json::to_string(&pk).unwrap()).unwrap();
        let sk2: PrivateKey = serde_json::from_str(&serde_json::to_string(&sk).unwrap()).unwrap();
        assert_eq!(pk, pk2);
        let c = encrypt_u64(&pk2, 99, &mut rng).unwrap();
        assert_eq!(decrypt(&sk2, &c).unwrap(), big(99));
    }

    #[test]
    fn public_key_json_rejects_wrong_generator() {
        let err = serde_json::from_str::<PublicKey>(r#"{"n":"23","g":"5"}"#).unwrap_err();
        assert!(err.to_string().contains("g must equal n + 1"));
    }
}
