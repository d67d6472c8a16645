//! ECDSA and the one-time verifiably encrypted ECDSA signature.
//!
//! An encrypted signature under key `Y` publishes `R = k·G` and `R̂ = k·Y`
//! together with a proof that both share `k`, and uses the x-coordinate of
//! `R̂` as `r`. Then `s̃ = k⁻¹(h(m) + r·x)` verifies against `R` and
//! decrypts to `s = s̃·y⁻¹`, a standard ECDSA signature whose nonce point is
//! `R̂`. Given `s` and `s̃` anyone recovers `y = s̃·s⁻¹` up to sign.

use sha2::{Digest, Sha256};

use super::{hex_serde, AdaptorError, NonceDleqProof, SIGNATURE_LEN};
use crate::groups::{hash_to_scalar_q, CrossScalar, PointQ, ScalarQ, POINT_Q_LEN};

pub const ECDSA_ENCSIG_LEN: usize = 2 * POINT_Q_LEN + 3 * 32;

const NONCE_TAG: &[u8] = b"xswap/ecdsa-nonce/v1";
const ENC_NONCE_TAG: &[u8] = b"xswap/ecdsa-enc-nonce/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcdsaSignature {
    pub r: ScalarQ,
    pub s: ScalarQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcdsaEncSig {
    pub big_r: PointQ,
    pub big_r_hat: PointQ,
    pub s_tilde: ScalarQ,
    pub nonce_dleq: NonceDleqProof,
}

fn message_scalar(m: &[u8]) -> ScalarQ {
    ScalarQ::reduce_be(&Sha256::digest(m).into())
}

fn nonce(tag: &[u8], x: &ScalarQ, extra: &[u8], m: &[u8], counter: u32) -> ScalarQ {
    hash_to_scalar_q(&[tag, &x.to_le_bytes(), extra, m, &counter.to_le_bytes()])
}

fn low_s(s: ScalarQ) -> ScalarQ {
    if s.is_high() {
        -s
    } else {
        s
    }
}

pub fn ecdsa_sign(x: &ScalarQ, m: &[u8]) -> Result<EcdsaSignature, AdaptorError> {
    if x.is_zero() {
        return Err(AdaptorError::ZeroKey);
    }
    let e = message_scalar(m);
    for counter in 0u32.. {
        let k = nonce(NONCE_TAG, x, &[], m, counter);
        let Some(k_inv) = k.invert() else { continue };
        let Some(r) = PointQ::mul_base(&k).x_scalar() else {
            continue;
        };
        if r.is_zero() {
            continue;
        }
        let s = k_inv * (e + r * *x);
        if s.is_zero() {
            continue;
        }
        return Ok(EcdsaSignature { r, s: low_s(s) });
    }
    unreachable!("nonce counter exhausted")
}

/// Standard ECDSA verification. Both `s` and `-s` are accepted.
pub fn ecdsa_verify(pk: &PointQ, m: &[u8], sig: &EcdsaSignature) -> bool {
    if pk.is_identity() || sig.r.is_zero() {
        return false;
    }
    let Some(w) = sig.s.invert() else {
        return false;
    };
    let e = message_scalar(m);
    let point = PointQ::mul_base(&(e * w)) + *pk * (sig.r * w);
    point.x_scalar() == Some(sig.r)
}

pub fn ecdsa_enc_sign(
    x: &ScalarQ,
    enc_key: &PointQ,
    m: &[u8],
) -> Result<EcdsaEncSig, AdaptorError> {
    if x.is_zero() {
        return Err(AdaptorError::ZeroKey);
    }
    if enc_key.is_identity() {
        return Err(AdaptorError::IdentityEncryptionKey);
    }
    let e = message_scalar(m);
    for counter in 0u32.. {
        let k = nonce(ENC_NONCE_TAG, x, &enc_key.encode(), m, counter);
        let Some(k_inv) = k.invert() else { continue };
        let big_r = PointQ::mul_base(&k);
        let big_r_hat = *enc_key * k;
        let Some(r) = big_r_hat.x_scalar() else {
            continue;
        };
        if r.is_zero() {
            continue;
        }
        let s_tilde = k_inv * (e + r * *x);
        if s_tilde.is_zero() {
            continue;
        }
        let nonce_dleq = NonceDleqProof::prove(&k, &big_r, enc_key, &big_r_hat);
        return Ok(EcdsaEncSig {
            big_r,
            big_r_hat,
            s_tilde,
            nonce_dleq,
        });
    }
    unreachable!("nonce counter exhausted")
}

pub fn ecdsa_enc_verify(pk: &PointQ, enc_key: &PointQ, m: &[u8], es: &EcdsaEncSig) -> bool {
    if pk.is_identity() || enc_key.is_identity() || es.big_r.is_identity() {
        return false;
    }
    let Some(r) = es.big_r_hat.x_scalar() else {
        return false;
    };
    let Some(w) = es.s_tilde.invert() else {
        return false;
    };
    if r.is_zero() || !es.nonce_dleq.verify(&es.big_r, enc_key, &es.big_r_hat) {
        return false;
    }
    let e = message_scalar(m);
    PointQ::mul_base(&(e * w)) + *pk * (r * w) == es.big_r
}

/// Decrypt with `y`; the result is normalised to low-s.
pub fn ecdsa_dec_sig(y: &CrossScalar, es: &EcdsaEncSig) -> Result<EcdsaSignature, AdaptorError> {
    let yq = y.to_q();
    let y_inv = yq.invert().ok_or(AdaptorError::DecryptionMismatch)?;
    if es.big_r * yq != es.big_r_hat {
        return Err(AdaptorError::DecryptionMismatch);
    }
    let r = es
        .big_r_hat
        .x_scalar()
        .ok_or(AdaptorError::DecryptionMismatch)?;
    Ok(EcdsaSignature {
        r,
        s: low_s(es.s_tilde * y_inv),
    })
}

/// Recover the decryption key from a published signature. Tries both `s` and
/// `-s` since decryption may have negated it.
pub fn ecdsa_rec_key(
    sig: &EcdsaSignature,
    es: &EcdsaEncSig,
    enc_key: &PointQ,
) -> Result<CrossScalar, AdaptorError> {
    let s_inv = sig.s.invert().ok_or(AdaptorError::RecoveryFailed)?;
    let candidate = es.s_tilde * s_inv;
    let y = [candidate, -candidate]
        .into_iter()
        .find(|c| PointQ::mul_base(c) == *enc_key)
        .ok_or(AdaptorError::RecoveryFailed)?;
    CrossScalar::try_from_q(&y).ok_or(AdaptorError::RecoveryFailed)
}

impl EcdsaSignature {
    pub fn encode(&self) -> [u8; SIGNATURE_LEN] {
        let mut out = [0u8; SIGNATURE_LEN];
        out[..32].copy_from_slice(&self.r.to_le_bytes());
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
            r: ScalarQ::from_le_bytes(&bytes[..32])?,
            s: ScalarQ::from_le_bytes(&bytes[32..])?,
        })
    }
}

/// Layout: `R` (33) ‖ `R̂` (33) ‖ `s̃` (32) ‖ proof challenge (32) ‖ proof
/// response (32); scalars little-endian.
impl EcdsaEncSig {
    pub fn encode(&self) -> [u8; ECDSA_ENCSIG_LEN] {
        let mut out = [0u8; ECDSA_ENCSIG_LEN];
        out[..33].copy_from_slice(&self.big_r.encode());
        out[33..66].copy_from_slice(&self.big_r_hat.encode());
        out[66..98].copy_from_slice(&self.s_tilde.to_le_bytes());
        out[98..130].copy_from_slice(&self.nonce_dleq.challenge.to_le_bytes());
        out[130..].copy_from_slice(&self.nonce_dleq.response.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AdaptorError> {
        if bytes.len() != ECDSA_ENCSIG_LEN {
            return Err(crate::groups::GroupError::Length {
                expected: ECDSA_ENCSIG_LEN,
                actual: bytes.len(),
            }
            .into());
        }
        Ok(Self {
            big_r: PointQ::decode(&bytes[..33])?,
            big_r_hat: PointQ::decode(&bytes[33..66])?,
            s_tilde: ScalarQ::from_le_bytes(&bytes[66..98])?,
            nonce_dleq: NonceDleqProof {
                challenge: ScalarQ::from_le_bytes(&bytes[98..130])?,
                response: ScalarQ::from_le_bytes(&bytes[130..])?,
            },
        })
    }
}

hex_serde!(EcdsaSignature);
hex_serde!(EcdsaEncSig);
