//! The two prime-order groups the swap lives in.
//!
//! `PointQ`/`ScalarQ` are secp256k1 (order q, Bitcoin side); `PointP`/`ScalarP`
//! are the prime-order subgroup of ed25519 (order p, Monero side). A
//! [`CrossScalar`] is an integer below 2^252, which is smaller than both `p`
//! and `q`, so it denotes the same value in both scalar fields.
//!
//! Encodings are fixed width: scalars are 32 bytes little-endian, secp points
//! are 33-byte SEC1 compressed (identity is 33 zero bytes), ed points are the
//! standard 32-byte compressed Edwards y.
//!
//! Nothing here is constant time; this is simulation-grade cryptography.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use curve25519_dalek::constants::ED25519_BASEPOINT_POINT;
use curve25519_dalek::edwards::{CompressedEdwardsY, EdwardsPoint};
use curve25519_dalek::traits::{Identity, IsIdentity, VartimeMultiscalarMul};
use k256::elliptic_curve::bigint::U256;
use k256::elliptic_curve::group::GroupEncoding;
use k256::elliptic_curve::ops::{LinearCombination, Reduce};
use k256::elliptic_curve::point::BatchNormalize;
use k256::elliptic_curve::point::AffineCoordinates;
use k256::elliptic_curve::scalar::IsHigh;
use k256::elliptic_curve::{Field, PrimeField};
use k256::{AffinePoint, FieldBytes, ProjectivePoint};
use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256, Sha512};

/// Number of bits in a [`CrossScalar`].
pub const CROSS_SCALAR_BITS: usize = 252;

pub const SCALAR_LEN: usize = 32;
pub const POINT_Q_LEN: usize = 33;
pub const POINT_P_LEN: usize = 32;

/// Domain tag hashed to secp256k1 to obtain G'.
pub const AUX_TAG_Q: &[u8] = b"xswap/aux-generator/secp256k1/v1";
/// Domain tag hashed to ed25519 to obtain H'.
pub const AUX_TAG_P: &[u8] = b"xswap/aux-generator/ed25519/v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("scalar is not canonical")]
    NonCanonicalScalar,
    #[error("value does not fit in 252 bits")]
    CrossScalarOverflow,
    #[error("bytes do not encode a point in the prime-order group")]
    InvalidPoint,
}

fn fixed<const N: usize>(bytes: &[u8]) -> Result<[u8; N], GroupError> {
    bytes.try_into().map_err(|_| GroupError::Length {
        expected: N,
        actual: bytes.len(),
    })
}

/// Integer modulo the secp256k1 group order q.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct ScalarQ(pub(crate) k256::Scalar);

/// Integer modulo the ed25519 prime subgroup order p.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct ScalarP(pub(crate) curve25519_dalek::Scalar);

/// An integer in `[0, 2^252)`, valid unreduced in both scalar fields.
#[derive(Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CrossScalar([u8; 32]);

/// secp256k1 group element.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PointQ(pub(crate) ProjectivePoint);

/// Element of the prime-order subgroup of ed25519.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PointP(pub(crate) EdwardsPoint);

impl ScalarQ {
    pub const ZERO: Self = Self(k256::Scalar::ZERO);
    pub const ONE: Self = Self(k256::Scalar::ONE);

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self(k256::Scalar::random(rng))
    }

    pub fn random_nonzero<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self(k256::Scalar::from(v))
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }

    pub fn invert(&self) -> Option<Self> {
        Option::from(self.0.invert()).map(Self)
    }

    /// True when the value exceeds q/2.
    pub fn is_high(&self) -> bool {
        bool::from(self.0.is_high())
    }

    /// Reduce 32 big-endian bytes modulo q.
    pub fn reduce_be(bytes: &[u8; 32]) -> Self {
        Self(<k256::Scalar as Reduce<U256>>::reduce_bytes(&FieldBytes::from(*bytes)))
    }

    pub fn to_le_bytes(&self) -> [u8; 32] {
        let mut out: [u8; 32] = self.0.to_repr().into();
        out.reverse();
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        let mut be: [u8; 32] = fixed(bytes)?;
        be.reverse();
        Option::from(k256::Scalar::from_repr(be.into()))
            .map(Self)
            .ok_or(GroupError::NonCanonicalScalar)
    }
}

impl ScalarP {
    pub const ZERO: Self = Self(curve25519_dalek::Scalar::ZERO);
    pub const ONE: Self = Self(curve25519_dalek::Scalar::ONE);

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self(curve25519_dalek::Scalar::random(rng))
    }

    pub fn random_nonzero<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self(curve25519_dalek::Scalar::from(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0 == curve25519_dalek::Scalar::ZERO
    }

    pub fn invert(&self) -> Option<Self> {
        (!self.is_zero()).then(|| Self(self.0.invert()))
    }

    pub fn reduce_wide(bytes: &[u8; 64]) -> Self {
        Self(curve25519_dalek::Scalar::from_bytes_mod_order_wide(bytes))
    }

    pub fn to_le_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        let b: [u8; 32] = fixed(bytes)?;
        Option::from(curve25519_dalek::Scalar::from_canonical_bytes(b))
            .map(Self)
            .ok_or(GroupError::NonCanonicalScalar)
    }
}

/// Uniform sample in `[0, 2^252)`.
pub fn sample_cross_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> CrossScalar {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    bytes[31] &= 0x0f;
    CrossScalar(bytes)
}

impl CrossScalar {
    pub const ZERO: Self = Self([0u8; 32]);

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        sample_cross_scalar(rng)
    }

    /// The largest representable value, 2^252 - 1.
    pub fn max() -> Self {
        let mut bytes = [0xffu8; 32];
        bytes[31] = 0x0f;
        Self(bytes)
    }

    pub fn from_u64(v: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&v.to_le_bytes());
        Self(bytes)
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        let b: [u8; 32] = fixed(bytes)?;
        if b[31] & 0xf0 != 0 {
            return Err(GroupError::CrossScalarOverflow);
        }
        Ok(Self(b))
    }

    pub fn to_le_bytes(&self) -> [u8; 32] {
        self.0
    }

    /// Bit `i` (little-endian order), `i < 252`.
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < CROSS_SCALAR_BITS);
        (self.0[i / 8] >> (i % 8)) & 1 == 1
    }

    pub fn to_q(&self) -> ScalarQ {
        ScalarQ::from_le_bytes(&self.0).expect("252-bit value is below q")
    }

    pub fn to_p(&self) -> ScalarP {
        ScalarP::from_le_bytes(&self.0).expect("252-bit value is below p")
    }

    /// Reinterpret a secp scalar as a cross scalar if it fits in 252 bits.
    pub fn try_from_q(s: &ScalarQ) -> Option<Self> {
        Self::from_le_bytes(&s.to_le_bytes()).ok()
    }

    pub fn try_from_p(s: &ScalarP) -> Option<Self> {
        Self::from_le_bytes(&s.to_le_bytes()).ok()
    }
}

impl PointQ {
    pub fn identity() -> Self {
        Self(ProjectivePoint::IDENTITY)
    }

    pub fn generator() -> Self {
        Self(ProjectivePoint::GENERATOR)
    }

    pub fn is_identity(&self) -> bool {
        self.0 == ProjectivePoint::IDENTITY
    }

    pub fn mul_base(s: &ScalarQ) -> Self {
        Self(ProjectivePoint::GENERATOR * s.0)
    }

    pub fn double(&self) -> Self {
        Self(self.0.double())
    }

    /// Affine x-coordinate reduced modulo q (the ECDSA `r` value).
    pub fn x_scalar(&self) -> Option<ScalarQ> {
        if self.is_identity() {
            return None;
        }
        let x = self.0.to_affine().x();
        Some(ScalarQ(<k256::Scalar as Reduce<U256>>::reduce_bytes(&x)))
    }

    pub fn encode(&self) -> [u8; POINT_Q_LEN] {
        if self.is_identity() {
            return [0u8; POINT_Q_LEN];
        }
        let bytes = self.0.to_affine().to_bytes();
        let mut out = [0u8; POINT_Q_LEN];
        out.copy_from_slice(&bytes);
        out
    }

    /// `a·x + b·y` with shared doublings.
    pub fn lincomb(x: &PointQ, a: &ScalarQ, y: &PointQ, b: &ScalarQ) -> Self {
        Self(ProjectivePoint::lincomb(&x.0, &a.0, &y.0, &b.0))
    }

    /// Same bytes as [`encode`](Self::encode) on each point, with a single
    /// field inversion for the whole batch.
    pub fn encode_batch(points: &[PointQ]) -> Vec<[u8; POINT_Q_LEN]> {
        let projective: Vec<ProjectivePoint> = points.iter().map(|p| p.0).collect();
        let affine: Vec<AffinePoint> = ProjectivePoint::batch_normalize(projective.as_slice());
        affine
            .iter()
            .map(|a| {
                let mut out = [0u8; POINT_Q_LEN];
                if *a != AffinePoint::IDENTITY {
                    out.copy_from_slice(&a.to_bytes());
                }
                out
            })
            .collect()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        let b: [u8; POINT_Q_LEN] = fixed(bytes)?;
        if b == [0u8; POINT_Q_LEN] {
            return Ok(Self::identity());
        }
        let affine: Option<AffinePoint> =
            AffinePoint::from_bytes(&k256::CompressedPoint::from(b)).into();
        affine
            .map(|a| Self(ProjectivePoint::from(a)))
            .ok_or(GroupError::InvalidPoint)
    }
}

impl PointP {
    pub fn identity() -> Self {
        Self(EdwardsPoint::identity())
    }

    pub fn generator() -> Self {
        Self(ED25519_BASEPOINT_POINT)
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    pub fn mul_base(s: &ScalarP) -> Self {
        Self(EdwardsPoint::mul_base(&s.0))
    }

    pub fn double(&self) -> Self {
        Self(self.0 + self.0)
    }

    pub fn encode(&self) -> [u8; POINT_P_LEN] {
        self.0.compress().to_bytes()
    }

    /// `a·x + b·y` in variable time. Public inputs only.
    pub fn vartime_lincomb(x: &PointP, a: &ScalarP, y: &PointP, b: &ScalarP) -> Self {
        Self(EdwardsPoint::vartime_multiscalar_mul([a.0, b.0], [x.0, y.0]))
    }

    /// Decodes a canonical compressed point and rejects anything outside the
    /// prime-order subgroup.
    pub fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        let b: [u8; POINT_P_LEN] = fixed(bytes)?;
        let point = CompressedEdwardsY(b)
            .decompress()
            .ok_or(GroupError::InvalidPoint)?;
        if !point.is_torsion_free() || point.compress().to_bytes() != b {
            return Err(GroupError::InvalidPoint);
        }
        Ok(Self(point))
    }
}

pub fn mul_base_q(s: &ScalarQ) -> PointQ {
    PointQ::mul_base(s)
}

pub fn mul_base_p(s: &ScalarP) -> PointP {
    PointP::mul_base(s)
}

/// Deterministic secp256k1 point with unknown discrete log, by
/// try-and-increment over `SHA-256(tag || counter)` as an x-coordinate.
pub fn hash_to_point_q(tag: &[u8]) -> PointQ {
    for counter in 0u32.. {
        let digest = Sha256::new()
            .chain_update(tag)
            .chain_update(counter.to_le_bytes())
            .finalize();
        let mut candidate = [0u8; POINT_Q_LEN];
        candidate[0] = 0x02;
        candidate[1..].copy_from_slice(&digest);
        if let Ok(p) = PointQ::decode(&candidate) {
            if !p.is_identity() {
                return p;
            }
        }
    }
    unreachable!("counter space exhausted")
}

/// Deterministic ed25519 prime-order point with unknown discrete log, by
/// try-and-increment over `SHA-256(tag || counter)` as a compressed y,
/// cleared of torsion by multiplying with the cofactor.
pub fn hash_to_point_p(tag: &[u8]) -> PointP {
    for counter in 0u32.. {
        let digest: [u8; 32] = Sha256::new()
            .chain_update(tag)
            .chain_update(counter.to_le_bytes())
            .finalize()
            .into();
        if let Some(p) = CompressedEdwardsY(digest).decompress() {
            let p = p.mul_by_cofactor();
            if !p.is_identity() {
                return PointP(p);
            }
        }
    }
    unreachable!("counter space exhausted")
}

/// The auxiliary Pedersen generators `(G', H')`.
pub fn aux_generators() -> (PointQ, PointP) {
    use std::sync::OnceLock;
    static AUX: OnceLock<(PointQ, PointP)> = OnceLock::new();
    *AUX.get_or_init(|| (hash_to_point_q(AUX_TAG_Q), hash_to_point_p(AUX_TAG_P)))
}

/// SHA-512 of the concatenated parts, reduced into each field.
pub(crate) fn hash_to_scalar_p(parts: &[&[u8]]) -> ScalarP {
    let mut h = Sha512::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    ScalarP::reduce_wide(&h.finalize().into())
}

pub(crate) fn hash_to_scalar_q(parts: &[&[u8]]) -> ScalarQ {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    ScalarQ::reduce_be(&h.finalize().into())
}

macro_rules! impl_arith {
    ($t:ident) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                $t(self.0 + rhs.0)
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                $t(self.0 - rhs.0)
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                $t(-self.0)
            }
        }
    };
}

impl_arith!(ScalarQ);
impl_arith!(ScalarP);
impl_arith!(PointQ);
impl_arith!(PointP);

impl Mul for ScalarQ {
    type Output = ScalarQ;
    fn mul(self, rhs: ScalarQ) -> ScalarQ {
        ScalarQ(self.0 * rhs.0)
    }
}

impl Mul for ScalarP {
    type Output = ScalarP;
    fn mul(self, rhs: ScalarP) -> ScalarP {
        ScalarP(self.0 * rhs.0)
    }
}

impl Mul<ScalarQ> for PointQ {
    type Output = PointQ;
    fn mul(self, rhs: ScalarQ) -> PointQ {
        PointQ(self.0 * rhs.0)
    }
}

impl Mul<ScalarP> for PointP {
    type Output = PointP;
    fn mul(self, rhs: ScalarP) -> PointP {
        PointP(self.0 * rhs.0)
    }
}

macro_rules! impl_hex_serde_debug {
    ($t:ident, $enc:ident, $dec:path) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.$enc()))
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
                $dec(&bytes).map_err(serde::de::Error::custom)
            }
        }
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($t), hex::encode(self.$enc()))
            }
        }
    };
}

impl_hex_serde_debug!(ScalarQ, to_le_bytes, ScalarQ::from_le_bytes);
impl_hex_serde_debug!(ScalarP, to_le_bytes, ScalarP::from_le_bytes);
impl_hex_serde_debug!(CrossScalar, to_le_bytes, CrossScalar::from_le_bytes);
impl_hex_serde_debug!(PointQ, encode, PointQ::decode);
impl_hex_serde_debug!(PointP, encode, PointP::decode);

impl PartialOrd for PointQ {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PointQ {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.encode().cmp(&other.encode())
    }
}

impl PartialOrd for PointP {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PointP {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.encode().cmp(&other.encode())
    }
}
