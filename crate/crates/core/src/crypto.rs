//! Diffie–Hellman key agreement with a hash commitment and short
//! authentication strings (SAS).
//!
//! The commit/open pair hides a node's `(public key, random string)` until
//! its peer has answered; the XOR of both random strings is then compared
//! over a trusted side channel, which exposes any substitution made in
//! transit.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_AUTH_BITS: usize = 10;

/// Nonce length used for fresh commitments.
pub const NONCE_LEN: usize = 16;

/// Primes just below successive powers of two, from 2^55 up to 2^64.
pub const SIMULATION_PRIMES: [u64; 10] = [
    36_028_797_018_963_913,
    72_057_594_037_927_931,
    144_115_188_075_855_859,
    288_230_376_151_711_717,
    576_460_752_303_423_433,
    1_152_921_504_606_846_883,
    2_305_843_009_213_693_951,
    4_611_686_018_427_387_847,
    9_223_372_036_854_775_783,
    18_446_744_073_709_551_557,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("modulus {0} is not prime")]
    NotPrime(BigUint),
    #[error("base must satisfy 1 < b < m")]
    BadBase,
    #[error("private key must satisfy 1 <= r < m")]
    BadPrivateKey,
    #[error("commitment nonce is empty")]
    EmptyNonce,
    #[error("opening does not match the commitment")]
    CommitmentMismatch,
    #[error("bit strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("malformed concatenation encoding")]
    Malformed,
}

/// `base^exponent mod modulus` by left-to-right square-and-multiply.
pub fn mod_pow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint, CryptoError> {
    if modulus.bits() < 2 {
        return Err(CryptoError::ModulusTooSmall);
    }
    if let Some(m) = modulus.to_u64() {
        let b = match base.to_u64() {
            Some(b) => b % m,
            None => (base % modulus).to_u64().expect("reduced below a u64 modulus"),
        };
        return Ok(BigUint::from(mod_pow_u64(b, exponent, m)));
    }
    let base = base % modulus;
    let mut acc = BigUint::one();
    for i in (0..exponent.bits()).rev() {
        acc = &acc * &acc % modulus;
        if exponent.bit(i) {
            acc = &acc * &base % modulus;
        }
    }
    Ok(acc)
}

/// Same square-and-multiply on machine words. Products of residues below
/// 2^32 fit in `u64`; larger moduli go through `u128`.
fn mod_pow_u64(base: u64, exponent: &BigUint, modulus: u64) -> u64 {
    if modulus <= u64::from(u32::MAX) {
        let mut acc = 1u64;
        for i in (0..exponent.bits()).rev() {
            acc = acc * acc % modulus;
            if exponent.bit(i) {
                acc = acc * base % modulus;
            }
        }
        return acc;
    }
    let m = modulus as u128;
    let b = base as u128;
    let mut acc: u128 = 1;
    for i in (0..exponent.bits()).rev() {
        acc = acc * acc % m;
        if exponent.bit(i) {
            acc = acc * b % m;
        }
    }
    acc as u64
}

/// Miller–Rabin with the first twelve prime bases: deterministic below
/// 3.3 * 10^24, which covers every modulus used here.
pub fn is_prime(n: &BigUint) -> bool {
    const BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for b in BASES {
        let mut x = mod_pow(&BigUint::from(b), &d, n).expect("n >= 2");
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform integer in `[low, high)`.
fn random_in<R: Rng + ?Sized>(low: &BigUint, high: &BigUint, rng: &mut R) -> BigUint {
    debug_assert!(low < high);
    let span = high - low;
    let bits = span.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess = (nbytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill(buf.as_mut_slice());
        buf[0] &= 0xffu8 >> excess;
        let v = BigUint::from_bytes_be(&buf);
        if v < span {
            return v + low;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DhParams {
    modulus: BigUint,
    base: BigUint,
}

impl DhParams {
    pub fn new(modulus: BigUint, base: BigUint) -> Result<Self, CryptoError> {
        if modulus < BigUint::from(2u32) {
            return Err(CryptoError::ModulusTooSmall);
        }
        if !is_prime(&modulus) {
            return Err(CryptoError::NotPrime(modulus));
        }
        if base <= BigUint::one() || base >= modulus {
            return Err(CryptoError::BadBase);
        }
        Ok(Self { modulus, base })
    }

    pub fn from_u64(modulus: u64, base: u64) -> Result<Self, CryptoError> {
        Self::new(BigUint::from(modulus), BigUint::from(base))
    }

    /// One modulus from [`SIMULATION_PRIMES`] and a base in `[2, m-1)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let m = SIMULATION_PRIMES[rng.random_range(0..SIMULATION_PRIMES.len())];
        let modulus = BigUint::from(m);
        let base = random_in(&BigUint::from(2u32), &(&modulus - 1u32), rng);
        Self { modulus, base }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }
}

/// Never leaves its node.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey(BigUint);

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

impl PrivateKey {
    pub fn new(r: BigUint, params: &DhParams) -> Result<Self, CryptoError> {
        if r.is_zero() || r >= params.modulus {
            return Err(CryptoError::BadPrivateKey);
        }
        Ok(Self(r))
    }

    pub fn random<R: Rng + ?Sized>(params: &DhParams, rng: &mut R) -> Self {
        Self(random_in(&BigUint::one(), &params.modulus, rng))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PublicKey(pub BigUint);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SharedKey(pub BigUint);

pub fn gen_public(params: &DhParams, private: &PrivateKey) -> PublicKey {
    PublicKey(mod_pow(&params.base, &private.0, &params.modulus).expect("validated modulus"))
}

pub fn shared_key(params: &DhParams, peer_public: &PublicKey, own_private: &PrivateKey) -> SharedKey {
    SharedKey(mod_pow(&peer_public.0, &own_private.0, &params.modulus).expect("validated modulus"))
}

/// Fixed-length bit string, most significant bit first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

pub type RandomString = BitString;
pub type AuthString = BitString;

impl BitString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// Builds from the low `len` bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Self((0..len).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Packs MSB-first into `ceil(len / 8)` bytes, zero padded at the end.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.0.len().div_ceil(8)];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, CryptoError> {
        if bytes.len() != len.div_ceil(8) {
            return Err(CryptoError::Malformed);
        }
        Ok(Self((0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl std::str::FromStr for BitString {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CryptoError::Malformed),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

/// Bitwise XOR of two random strings.
pub fn auth_string(a: &RandomString, b: &RandomString) -> Result<AuthString, CryptoError> {
    if a.len() != b.len() {
        return Err(CryptoError::LengthMismatch(a.len(), b.len()));
    }
    Ok(BitString(a.0.iter().zip(&b.0).map(|(x, y)| x ^ y).collect()))
}

/// A node's public key joined with its random string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concatenation {
    pub public_key: PublicKey,
    pub random_string: RandomString,
}

impl Concatenation {
    /// `u32 BE key length || key bytes (BE) || packed random string`.
    pub fn encode(&self) -> Vec<u8> {
        let key = self.public_key.0.to_bytes_be();
        let mut out = Vec::with_capacity(4 + key.len() + self.random_string.len().div_ceil(8));
        out.extend_from_slice(&(key.len() as u32).to_be_bytes());
        out.extend_from_slice(&key);
        out.extend_from_slice(&self.random_string.to_bytes());
        out
    }

    pub fn decode(bytes: &[u8], bits: usize) -> Result<Self, CryptoError> {
        let (len, rest) = bytes.split_first_chunk::<4>().ok_or(CryptoError::Malformed)?;
        let len = u32::from_be_bytes(*len) as usize;
        if rest.len() < len {
            return Err(CryptoError::Malformed);
        }
        let (key, tail) = rest.split_at(len);
        Ok(Self {
            public_key: PublicKey(BigUint::from_bytes_be(key)),
            random_string: BitString::from_bytes(tail, bits)?,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub digest: [u8; 32],
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment(")?;
        for b in &self.digest[..6] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

/// What the committing side later reveals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenParam {
    pub committed_message: Concatenation,
    pub nonce: Vec<u8>,
}

fn digest(msg: &Concatenation, nonce: &[u8]) -> [u8; 32] {
    let encoded = msg.encode();
    let mut h = Sha256::new();
    h.update((encoded.len() as u32).to_be_bytes());
    h.update(&encoded);
    h.update(nonce);
    h.finalize().into()
}

pub fn commit(msg: &Concatenation, nonce: &[u8]) -> Result<Commitment, CryptoError> {
    if nonce.is_empty() {
        return Err(CryptoError::EmptyNonce);
    }
    Ok(Commitment { digest: digest(msg, nonce) })
}

/// Fresh nonce plus commitment; returns the commitment and its opening.
pub fn commit_fresh<R: Rng + ?Sized>(msg: Concatenation, rng: &mut R) -> (Commitment, OpenParam) {
    let mut nonce = vec![0u8; NONCE_LEN];
    rng.fill(nonce.as_mut_slice());
    let c = commit(&msg, &nonce).expect("nonce is non-empty");
    (c, OpenParam { committed_message: msg, nonce })
}

pub fn open_verify(c: &Commitment, w: &OpenParam) -> Result<Concatenation, CryptoError> {
    if w.nonce.is_empty() || digest(&w.committed_message, &w.nonce) != c.digest {
        return Err(CryptoError::CommitmentMismatch);
    }
    Ok(w.committed_message.clone())
}
