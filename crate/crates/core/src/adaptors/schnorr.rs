//! Schnorr signatures and their adaptor variant over ed25519.
//!
//! Stand-in for the Monero-side pre-signature. Decryption is additive:
//! `s = s̃ + y`, so recovery is exact.

use super::{hex_serde, AdaptorError, SIGNATURE_LEN};
use crate::groups::{hash_to_scalar_p, CrossScalar, PointP, ScalarP};

pub const SCHNORR_ENCSIG_LEN: usize = 96;

const CHALLENGE_TAG: &[u8] = b"xswap/schnorr-challenge/v1";
const NONCE_TAG: &[u8] = b"xswap/schnorr-nonce/v1";
const ENC_NONCE_TAG: &[u8] = b"xswap/schnorr-enc-nonce/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchnorrSignature {
    pub big_r: PointP,
    pub s: ScalarP,
}

/// `s̃·H = R + c·X` where `c` commits to the final nonce `R + Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchnorrEncSig {
    pub big_r: PointP,
    pub s_tilde: ScalarP,
    pub encryption_key: PointP,
}

fn challenge(nonce_point: &PointP, pk: &PointP, m: &[u8]) -> ScalarP {
    hash_to_scalar_p(&[CHALLENGE_TAG, &nonce_point.encode(), &pk.encode(), m])
}

fn nonce(tag: &[u8], x: &ScalarP, extra: &[u8], m: &[u8]) -> ScalarP {
    hash_to_scalar_p(&[tag, &x.to_le_bytes(), extra, m])
}

pub fn schnorr_sign(x: &ScalarP, m: &[u8]) -> Result<SchnorrSignature, AdaptorError> {
    if x.is_zero() {
        return Err(AdaptorError::ZeroKey);
    }
    let pk = PointP::mul_base(x);
    let k = nonce(NONCE_TAG, x, &[], m);
    let big_r = PointP::mul_base(&k);
    let c = challenge(&big_r, &pk, m);
    Ok(SchnorrSignature {
        big_r,
        s: k + c * *x,
    })
}

pub fn schnorr_verify(pk: &PointP, m: &[u8], sig: &SchnorrSignature) -> bool {
    if pk.is_identity() {
        return false;
    }
    let c = challenge(&sig.big_r, pk, m);
    PointP::mul_base(&sig.s) == sig.big_r + *pk * c
}

pub fn schnorr_enc_sign(
    x: &ScalarP,
    enc_key: &PointP,
    m: &[u8],
) -> Result<SchnorrEncSig, AdaptorError> {
    if x.is_zero() {
        return Err(AdaptorError::ZeroKey);
    }
    if enc_key.is_identity() {
        return Err(AdaptorError::IdentityEncryptionKey);
    }
    let pk = PointP::mul_base(x);
    let k = nonce(ENC_NONCE_TAG, x, &enc_key.encode(), m);
    let big_r = PointP::mul_base(&k);
    let c = challenge(&(big_r + *enc_key), &pk, m);
    Ok(SchnorrEncSig {
        big_r,
        s_tilde: k + c * *x,
        encryption_key: *enc_key,
    })
}

pub fn schnorr_enc_verify(pk: &PointP, enc_key: &PointP, m: &[u8], es: &SchnorrEncSig) -> bool {
    if pk.is_identity() || enc_key.is_identity() || es.encryption_key != *enc_key {
        return false;
    }
    let c = challenge(&(es.big_r + *enc_key), pk, m);
    PointP::mul_base(&es.s_tilde) == es.big_r + *pk * c
}

pub fn schnorr_dec_sig(
    y: &CrossScalar,
    es: &SchnorrEncSig,
) -> Result<SchnorrSignature, AdaptorError> {
    let yp = y.to_p();
    if PointP::mul_base(&yp) != es.encryption_key || es.encryption_key.is_identity() {
        return Err(AdaptorError::DecryptionMismatch);
    }
    Ok(SchnorrSignature {
        big_r: es.big_r + es.encryption_key,
        s: es.s_tilde + yp,
    })
}

pub fn schnorr_rec_key(
    sig: &SchnorrSignature,
    es: &SchnorrEncSig,
) -> Result<CrossScalar, AdaptorError> {
    if sig.big_r != es.big_r + es.encryption_key {
        return Err(AdaptorError::RecoveryFailed);
    }
    let y = sig.s - es.s_tilde;
    if PointP::mul_base(&y) != es.encryption_key {
        return Err(AdaptorError::RecoveryFailed);
    }
    CrossScalar::try_from_p(&y).ok_or(AdaptorError::RecoveryFailed)
}

impl SchnorrSignature {
    pub fn encode(&self) -> [u8; SIGNATURE_LEN] {
        let mut out = [0u8; SIGNATURE_LEN];
        out[..32].copy_from_slice(&self.big_r.encode());
        out[32..].copy_from_slice(&self.s.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AdaptorError> {
        if bytes.len() != SIGNATURE_LEN {
            return Err(crate::groups::GroupError::Length {
                expected: SIGNATURE_LEN,
                actual: bytes.len(),
            }
            .into());
        }
        Ok(Self {
            big_r: PointP::decode(&bytes[..32])?,
            s: ScalarP::from_le_bytes(&bytes[32..])?,
        })
    }
}

/// Layout: `R` (32) ‖ `s̃` (32, LE) ‖ `Y` (32).
impl SchnorrEncSig {
    pub fn encode(&self) -> [u8; SCHNORR_ENCSIG_LEN] {
        let mut out = [0u8; SCHNORR_ENCSIG_LEN];
        out[..32].copy_from_slice(&self.big_r.encode());
        out[32..64].copy_from_slice(&self.s_tilde.to_le_bytes());
        out[64..].copy_from_slice(&self.encryption_key.encode());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AdaptorError> {
        if bytes.len() != SCHNORR_ENCSIG_LEN {
            return Err(crate::groups::GroupError::Length {
                expected: SCHNORR_ENCSIG_LEN,
                actual: bytes.len(),
            }
            .into());
        }
        Ok(Self {
            big_r: PointP::decode(&bytes[..32])?,
            s_tilde: ScalarP::from_le_bytes(&bytes[32..64])?,
            encryption_key: PointP::decode(&bytes[64..])?,
        })
    }
}

hex_serde!(SchnorrSignature);
hex_serde!(SchnorrEncSig);
