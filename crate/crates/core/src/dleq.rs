//! Cross-group discrete-log equality proof.
//!
//! Proves that `S_btc = s·G` on secp256k1 and `S_xmr = s·H` on ed25519 share
//! the same `s < 2^252` without revealing it.
//!
//! The prover commits to every bit `b_i` of `s` twice, once per group:
//!
//! ```text
//! C_i = b_i·G + r_i·G'        D_i = b_i·H + t_i·H'
//! ```
//!
//! and for each bit gives a two-branch OR proof of knowledge of
//! `(r_i, t_i)` opening `(C_i − β·G, D_i − β·H)` under `(G', H')` for
//! `β ∈ {0, 1}`. Both groups in a branch answer the same challenge share, which
//! forces the committed bit to be equal on both sides. Shares satisfy
//! `c_0 ⊕ c_1 = c` with `c` the 252-bit Fiat-Shamir challenge, so they are
//! valid unreduced scalars in either field. Finally the aggregate blinders
//! `r = Σ 2^i r_i` and `t = Σ 2^i t_i` are revealed, and the verifier checks
//! `Σ 2^i C_i − r·G' = S_btc` and `Σ 2^i D_i − t·H' = S_xmr`.
//!
//! # Encoding
//!
//! A proof is exactly [`PROOF_LEN`] bytes: 252 bit records of
//! [`BIT_RECORD_LEN`] bytes, followed by the two aggregate blinders and the
//! challenge. Each bit record is
//!
//! | offset | len | field                             |
//! |-------:|----:|-----------------------------------|
//! |      0 |  33 | `C_i` (secp256k1, compressed)     |
//! |     33 |  32 | `D_i` (ed25519, compressed)       |
//! |     65 |  32 | `c_0` challenge share (LE, 252b)  |
//! |     97 |  32 | branch-0 response, secp (LE)      |
//! |    129 |  32 | branch-0 response, ed25519 (LE)   |
//! |    161 |  32 | branch-1 response, secp (LE)      |
//! |    193 |  32 | branch-1 response, ed25519 (LE)   |
//!
//! and the trailer is `r` (secp scalar, LE) ‖ `t` (ed25519 scalar, LE) ‖ `c`
//! (252-bit LE).

use merlin::Transcript;
use rand_core::{CryptoRng, RngCore};

use crate::groups::{
    aux_generators, sample_cross_scalar, CrossScalar, GroupError, PointP, PointQ, ScalarP,
    ScalarQ, CROSS_SCALAR_BITS, POINT_P_LEN, POINT_Q_LEN, SCALAR_LEN,
};
use crate::transcript::{TranscriptExt, DLEQ_DOMAIN};

pub const BIT_RECORD_LEN: usize = POINT_Q_LEN + POINT_P_LEN + 5 * SCALAR_LEN;
pub const PROOF_LEN: usize = CROSS_SCALAR_BITS * BIT_RECORD_LEN + 3 * SCALAR_LEN;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DleqError {
    #[error("malformed proof: {0}")]
    Malformed(String),
    #[error("proof does not verify")]
    Rejected,
}

impl From<GroupError> for DleqError {
    fn from(e: GroupError) -> Self {
        DleqError::Malformed(e.to_string())
    }
}

/// Commitments and OR-proof responses for one bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitProof {
    pub commitment_q: PointQ,
    pub commitment_p: PointP,
    pub challenge_zero: CrossScalar,
    pub response_zero_q: ScalarQ,
    pub response_zero_p: ScalarP,
    pub response_one_q: ScalarQ,
    pub response_one_p: ScalarP,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossGroupDleqProof {
    pub bits: Vec<BitProof>,
    pub blinder_q: ScalarQ,
    pub blinder_p: ScalarP,
    pub challenge: CrossScalar,
}

fn xor(a: &CrossScalar, b: &CrossScalar) -> CrossScalar {
    let (a, b) = (a.to_le_bytes(), b.to_le_bytes());
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = a[i] ^ b[i];
    }
    CrossScalar::from_le_bytes(&out).expect("xor of 252-bit values is 252-bit")
}

fn bit_q(b: bool) -> ScalarQ {
    if b {
        ScalarQ::ONE
    } else {
        ScalarQ::ZERO
    }
}

fn bit_p(b: bool) -> ScalarP {
    if b {
        ScalarP::ONE
    } else {
        ScalarP::ZERO
    }
}

/// Announcements for both branches of one bit, recomputed from responses.
struct Announcements {
    zero_q: PointQ,
    zero_p: PointP,
    one_q: PointQ,
    one_p: PointP,
}

fn challenge(
    s_btc: &PointQ,
    s_xmr: &PointP,
    commitments: &[(PointQ, PointP)],
    announcements: &[Announcements],
) -> CrossScalar {
    let mut q_points = Vec::with_capacity(commitments.len() + 2 * announcements.len());
    q_points.extend(commitments.iter().map(|(c, _)| *c));
    for a in announcements {
        q_points.push(a.zero_q);
        q_points.push(a.one_q);
    }
    let q_bytes = PointQ::encode_batch(&q_points);
    let (c_bytes, ann_bytes) = q_bytes.split_at(commitments.len());

    let mut t = Transcript::new(DLEQ_DOMAIN);
    t.append_point_q(b"S_btc", s_btc);
    t.append_point_p(b"S_xmr", s_xmr);
    for (c, (_, d)) in c_bytes.iter().zip(commitments) {
        t.append_message(b"C", c);
        t.append_point_p(b"D", d);
    }
    for (a, q) in announcements.iter().zip(ann_bytes.chunks_exact(2)) {
        t.append_message(b"U0q", &q[0]);
        t.append_point_p(b"U0p", &a.zero_p);
        t.append_message(b"U1q", &q[1]);
        t.append_point_p(b"U1p", &a.one_p);
    }
    CrossScalar::from_le_bytes(&t.challenge_252(b"challenge")).expect("masked to 252 bits")
}

/// Prove that `s·G` and `s·H` share the discrete log `s`.
pub fn dleq_prove<R: RngCore + CryptoRng>(
    s: &CrossScalar,
    rng: &mut R,
) -> (PointQ, PointP, CrossGroupDleqProof) {
    let (g_aux, h_aux) = aux_generators();
    let (g, h) = (PointQ::generator(), PointP::generator());
    let s_btc = PointQ::mul_base(&s.to_q());
    let s_xmr = PointP::mul_base(&s.to_p());

    struct Pending {
        bit: bool,
        blinder_q: ScalarQ,
        blinder_p: ScalarP,
        nonce_q: ScalarQ,
        nonce_p: ScalarP,
        fake_challenge: CrossScalar,
        fake_q: ScalarQ,
        fake_p: ScalarP,
    }

    let mut commitments = Vec::with_capacity(CROSS_SCALAR_BITS);
    let mut announcements = Vec::with_capacity(CROSS_SCALAR_BITS);
    let mut pending = Vec::with_capacity(CROSS_SCALAR_BITS);

    for i in 0..CROSS_SCALAR_BITS {
        let bit = s.bit(i);
        let blinder_q = ScalarQ::random(rng);
        let blinder_p = ScalarP::random(rng);
        let c_i = g * bit_q(bit) + g_aux * blinder_q;
        let d_i = h * bit_p(bit) + h_aux * blinder_p;

        // Real branch: honest announcement. Other branch: simulated from a
        // chosen challenge share and responses.
        let nonce_q = ScalarQ::random(rng);
        let nonce_p = ScalarP::random(rng);
        let fake_challenge = sample_cross_scalar(rng);
        let fake_q = ScalarQ::random(rng);
        let fake_p = ScalarP::random(rng);

        let other = !bit;
        let fake_ann_q = g_aux * fake_q - (c_i - g * bit_q(other)) * fake_challenge.to_q();
        let fake_ann_p = h_aux * fake_p - (d_i - h * bit_p(other)) * fake_challenge.to_p();
        let real_ann_q = g_aux * nonce_q;
        let real_ann_p = h_aux * nonce_p;

        let ann = if bit {
            Announcements {
                zero_q: fake_ann_q,
                zero_p: fake_ann_p,
                one_q: real_ann_q,
                one_p: real_ann_p,
            }
        } else {
            Announcements {
                zero_q: real_ann_q,
                zero_p: real_ann_p,
                one_q: fake_ann_q,
                one_p: fake_ann_p,
            }
        };

        commitments.push((c_i, d_i));
        announcements.push(ann);
        pending.push(Pending {
            bit,
            blinder_q,
            blinder_p,
            nonce_q,
            nonce_p,
            fake_challenge,
            fake_q,
            fake_p,
        });
    }

    let c = challenge(&s_btc, &s_xmr, &commitments, &announcements);

    let mut bits = Vec::with_capacity(CROSS_SCALAR_BITS);
    for (p, (c_i, d_i)) in pending.iter().zip(&commitments) {
        let real_challenge = xor(&c, &p.fake_challenge);
        let real_q = p.nonce_q + real_challenge.to_q() * p.blinder_q;
        let real_p = p.nonce_p + real_challenge.to_p() * p.blinder_p;
        let bp = if p.bit {
            BitProof {
                commitment_q: *c_i,
                commitment_p: *d_i,
                challenge_zero: p.fake_challenge,
                response_zero_q: p.fake_q,
                response_zero_p: p.fake_p,
                response_one_q: real_q,
                response_one_p: real_p,
            }
        } else {
            BitProof {
                commitment_q: *c_i,
                commitment_p: *d_i,
                challenge_zero: real_challenge,
                response_zero_q: real_q,
                response_zero_p: real_p,
                response_one_q: p.fake_q,
                response_one_p: p.fake_p,
            }
        };
        bits.push(bp);
    }

    let two_q = ScalarQ::from_u64(2);
    let two_p = ScalarP::from_u64(2);
    let (blinder_q, blinder_p) = pending.iter().rev().fold(
        (ScalarQ::ZERO, ScalarP::ZERO),
        |(aq, ap), p| (aq * two_q + p.blinder_q, ap * two_p + p.blinder_p),
    );

    (
        s_btc,
        s_xmr,
        CrossGroupDleqProof {
            bits,
            blinder_q,
            blinder_p,
            challenge: c,
        },
    )
}

impl CrossGroupDleqProof {
    /// Full verification against the claimed public keys.
    pub fn verify(&self, s_btc: &PointQ, s_xmr: &PointP) -> Result<(), DleqError> {
        if self.bits.len() != CROSS_SCALAR_BITS {
            return Err(DleqError::Malformed(format!(
                "expected {CROSS_SCALAR_BITS} bit proofs, got {}",
                self.bits.len()
            )));
        }
        let (g_aux, h_aux) = aux_generators();
        let (g, h) = (PointQ::generator(), PointP::generator());

        // The weighted commitment sums are cheap, so check them first.
        let (sum_q, sum_p) = self.bits.iter().rev().fold(
            (PointQ::identity(), PointP::identity()),
            |(aq, ap), bp| (aq.double() + bp.commitment_q, ap.double() + bp.commitment_p),
        );
        if sum_q - g_aux * self.blinder_q != *s_btc || sum_p - h_aux * self.blinder_p != *s_xmr {
            return Err(DleqError::Rejected);
        }

        let mut commitments = Vec::with_capacity(CROSS_SCALAR_BITS);
        let mut announcements = Vec::with_capacity(CROSS_SCALAR_BITS);
        for bp in &self.bits {
            let c0 = bp.challenge_zero;
            let c1 = xor(&self.challenge, &c0);
            let (cq, dp) = (bp.commitment_q, bp.commitment_p);
            announcements.push(Announcements {
                zero_q: PointQ::lincomb(&g_aux, &bp.response_zero_q, &cq, &-c0.to_q()),
                zero_p: PointP::vartime_lincomb(&h_aux, &bp.response_zero_p, &dp, &-c0.to_p()),
                one_q: PointQ::lincomb(&g_aux, &bp.response_one_q, &(cq - g), &-c1.to_q()),
                one_p: PointP::vartime_lincomb(&h_aux, &bp.response_one_p, &(dp - h), &-c1.to_p()),
            });
            commitments.push((cq, dp));
        }

        if challenge(s_btc, s_xmr, &commitments, &announcements) != self.challenge {
            return Err(DleqError::Rejected);
        }

        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PROOF_LEN);
        for bp in &self.bits {
            out.extend_from_slice(&bp.commitment_q.encode());
            out.extend_from_slice(&bp.commitment_p.encode());
            out.extend_from_slice(&bp.challenge_zero.to_le_bytes());
            out.extend_from_slice(&bp.response_zero_q.to_le_bytes());
            out.extend_from_slice(&bp.response_zero_p.to_le_bytes());
            out.extend_from_slice(&bp.response_one_q.to_le_bytes());
            out.extend_from_slice(&bp.response_one_p.to_le_bytes());
        }
        out.extend_from_slice(&self.blinder_q.to_le_bytes());
        out.extend_from_slice(&self.blinder_p.to_le_bytes());
        out.extend_from_slice(&self.challenge.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DleqError> {
        if bytes.len() != PROOF_LEN {
            return Err(DleqError::Malformed(format!(
                "expected {PROOF_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let mut bits = Vec::with_capacity(CROSS_SCALAR_BITS);
        for rec in bytes[..CROSS_SCALAR_BITS * BIT_RECORD_LEN].chunks_exact(BIT_RECORD_LEN) {
            let mut at = 0;
            let mut take = |n: usize| {
                let s = &rec[at..at + n];
                at += n;
                s
            };
            bits.push(BitProof {
                commitment_q: PointQ::decode(take(POINT_Q_LEN))?,
                commitment_p: PointP::decode(take(POINT_P_LEN))?,
                challenge_zero: CrossScalar::from_le_bytes(take(SCALAR_LEN))?,
                response_zero_q: ScalarQ::from_le_bytes(take(SCALAR_LEN))?,
                response_zero_p: ScalarP::from_le_bytes(take(SCALAR_LEN))?,
                response_one_q: ScalarQ::from_le_bytes(take(SCALAR_LEN))?,
                response_one_p: ScalarP::from_le_bytes(take(SCALAR_LEN))?,
            });
        }
        let trailer = &bytes[CROSS_SCALAR_BITS * BIT_RECORD_LEN..];
        Ok(Self {
            bits,
            blinder_q: ScalarQ::from_le_bytes(&trailer[..32])?,
            blinder_p: ScalarP::from_le_bytes(&trailer[32..64])?,
            challenge: CrossScalar::from_le_bytes(&trailer[64..])?,
        })
    }
}

pub fn dleq_verify(s_btc: &PointQ, s_xmr: &PointP, proof: &CrossGroupDleqProof) -> bool {
    proof.verify(s_btc, s_xmr).is_ok()
}

pub fn proof_encode(proof: &CrossGroupDleqProof) -> Vec<u8> {
    proof.encode()
}

pub fn proof_decode(bytes: &[u8]) -> Result<CrossGroupDleqProof, DleqError> {
    CrossGroupDleqProof::decode(bytes)
}

impl serde::Serialize for CrossGroupDleqProof {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.encode()))
    }
}

impl<'de> serde::Deserialize<'de> for CrossGroupDleqProof {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        let bytes = hex::decode(text).map_err(serde::de::Error::custom)?;
        Self::decode(&bytes).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn zero_secret_proves_identities() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let (sq, sp, proof) = dleq_prove(&CrossScalar::ZERO, &mut rng);
        assert!(sq.is_identity() && sp.is_identity());
        assert!(dleq_verify(&sq, &sp, &proof));
        let decoded = proof_decode(&proof_encode(&proof)).unwrap();
        assert!(dleq_verify(&sq, &sp, &decoded));
    }

    #[test]
    fn seeded_and_max_secrets_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let s = sample_cross_scalar(&mut rng);
        let (sq, sp, proof) = dleq_prove(&s, &mut rng);
        assert_eq!(sq, PointQ::mul_base(&s.to_q()));
        assert_eq!(sp, PointP::mul_base(&s.to_p()));
        assert!(dleq_verify(&sq, &sp, &proof));

        let (mq, mp, mproof) = dleq_prove(&CrossScalar::max(), &mut rng);
        assert!(dleq_verify(&mq, &mp, &mproof));
    }

    #[test]
    fn mismatched_keys_are_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = sample_cross_scalar(&mut rng);
        let other = sample_cross_scalar(&mut rng);
        let (sq, sp, proof) = dleq_prove(&s, &mut rng);
        let wrong_p = PointP::mul_base(&other.to_p());
        let wrong_q = PointQ::mul_base(&other.to_q());
        assert_eq!(proof.verify(&sq, &wrong_p), Err(DleqError::Rejected));
        assert_eq!(proof.verify(&wrong_q, &sp), Err(DleqError::Rejected));
    }

    #[test]
    fn wrong_bit_count_is_malformed() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (sq, sp, mut proof) = dleq_prove(&CrossScalar::from_u64(5), &mut rng);
        proof.bits.pop();
        assert!(matches!(proof.verify(&sq, &sp), Err(DleqError::Malformed(_))));
    }

    #[test]
    fn decoding_rejects_truncation_and_empty_input() {
        assert!(matches!(proof_decode(&[]), Err(DleqError::Malformed(_))));
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (_, _, proof) = dleq_prove(&CrossScalar::from_u64(9), &mut rng);
        let bytes = proof.encode();
        assert_eq!(bytes.len(), PROOF_LEN);
        assert!(matches!(
            proof_decode(&bytes[..bytes.len() - 1]),
            Err(DleqError::Malformed(_))
        ));
    }
}
