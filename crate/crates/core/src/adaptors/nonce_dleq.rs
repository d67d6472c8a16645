use merlin::Transcript;

use crate::groups::{hash_to_scalar_q, PointQ, ScalarQ};
use crate::transcript::{TranscriptExt, NONCE_DLEQ_DOMAIN};

/// Chaum-Pedersen proof that `log_G(R) = log_Y(R_hat)` on secp256k1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonceDleqProof {
    pub challenge: ScalarQ,
    pub response: ScalarQ,
}

fn challenge(r: &PointQ, y: &PointQ, r_hat: &PointQ, a1: &PointQ, a2: &PointQ) -> ScalarQ {
    let mut t = Transcript::new(NONCE_DLEQ_DOMAIN);
    t.append_point_q(b"R", r);
    t.append_point_q(b"Y", y);
    t.append_point_q(b"R_hat", r_hat);
    t.append_point_q(b"A1", a1);
    t.append_point_q(b"A2", a2);
    t.challenge_scalar_q(b"c")
}

impl NonceDleqProof {
    /// Deterministic: the commitment nonce is derived from the witness and
    /// statement.
    pub(crate) fn prove(k: &ScalarQ, r: &PointQ, y: &PointQ, r_hat: &PointQ) -> Self {
        let w = hash_to_scalar_q(&[
            b"xswap/nonce-dleq-commitment",
            &k.to_le_bytes(),
            &y.encode(),
            &r_hat.encode(),
        ]);
        let a1 = PointQ::mul_base(&w);
        let a2 = *y * w;
        let c = challenge(r, y, r_hat, &a1, &a2);
        Self {
            challenge: c,
            response: w + c * *k,
        }
    }

    pub(crate) fn verify(&self, r: &PointQ, y: &PointQ, r_hat: &PointQ) -> bool {
        let a1 = PointQ::mul_base(&self.response) - *r * self.challenge;
        let a2 = *y * self.response - *r_hat * self.challenge;
        challenge(r, y, r_hat, &a1, &a2) == self.challenge
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_proof_verifies_and_wrong_statement_fails() {
        let k = ScalarQ::from_u64(1234567);
        let y = PointQ::mul_base(&ScalarQ::from_u64(77));
        let r = PointQ::mul_base(&k);
        let r_hat = y * k;
        let proof = NonceDleqProof::prove(&k, &r, &y, &r_hat);
        assert!(proof.verify(&r, &y, &r_hat));
        assert!(!proof.verify(&r, &y, &(r_hat + PointQ::generator())));
        assert!(!proof.verify(&r, &PointQ::generator(), &r_hat));
    }
}
