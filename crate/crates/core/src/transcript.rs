//! Fiat-Shamir transcript helpers on top of `merlin`.

use merlin::Transcript;

use crate::groups::{PointP, PointQ, ScalarQ, CROSS_SCALAR_BITS};

/// Domain label of the cross-group DLEQ transcript.
pub const DLEQ_DOMAIN: &[u8] = b"xswap/cross-group-dleq/v1";
/// Domain label of the same-group nonce DLEQ used by ECDSA adaptor signatures.
pub const NONCE_DLEQ_DOMAIN: &[u8] = b"xswap/ecdsa-nonce-dleq/v1";

pub(crate) trait TranscriptExt {
    fn append_point_q(&mut self, label: &'static [u8], p: &PointQ);
    fn append_point_p(&mut self, label: &'static [u8], p: &PointP);
    fn challenge_252(&mut self, label: &'static [u8]) -> [u8; 32];
    fn challenge_scalar_q(&mut self, label: &'static [u8]) -> ScalarQ;
}

impl TranscriptExt for Transcript {
    fn append_point_q(&mut self, label: &'static [u8], p: &PointQ) {
        self.append_message(label, &p.encode());
    }

    fn append_point_p(&mut self, label: &'static [u8], p: &PointP) {
        self.append_message(label, &p.encode());
    }

    /// 32 challenge bytes with the top four bits cleared.
    fn challenge_252(&mut self, label: &'static [u8]) -> [u8; 32] {
        let mut buf = [0u8; 32];
        self.challenge_bytes(label, &mut buf);
        buf[31] &= 0x0f;
        debug_assert_eq!(CROSS_SCALAR_BITS, 252);
        buf
    }

    fn challenge_scalar_q(&mut self, label: &'static [u8]) -> ScalarQ {
        let mut buf = [0u8; 32];
        self.challenge_bytes(label, &mut buf);
        ScalarQ::reduce_be(&buf)
    }
}
