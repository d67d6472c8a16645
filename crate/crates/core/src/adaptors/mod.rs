//! Plain and verifiably encrypted ("adaptor") signatures.
//!
//! ECDSA over secp256k1 signs the Bitcoin-side transactions. Schnorr over
//! ed25519 stands in for the Monero-side pre-signatures; the real Monero ring
//! signature adaptor is not modelled, only its encrypt/decrypt/recover
//! contract.

mod ecdsa;
mod nonce_dleq;
mod schnorr;

pub use ecdsa::{
    ecdsa_dec_sig, ecdsa_enc_sign, ecdsa_enc_verify, ecdsa_rec_key, ecdsa_sign, ecdsa_verify,
    EcdsaEncSig, EcdsaSignature, ECDSA_ENCSIG_LEN,
};
pub use nonce_dleq::NonceDleqProof;
pub use schnorr::{
    schnorr_dec_sig, schnorr_enc_sign, schnorr_enc_verify, schnorr_rec_key, schnorr_sign,
    schnorr_verify, SchnorrEncSig, SchnorrSignature, SCHNORR_ENCSIG_LEN,
};

use crate::groups::GroupError;

pub const SIGNATURE_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdaptorError {
    #[error("secret key is zero")]
    ZeroKey,
    #[error("encryption key is the identity")]
    IdentityEncryptionKey,
    #[error("decryption key does not match the encrypted signature")]
    DecryptionMismatch,
    #[error("signature and encrypted signature do not reveal the encryption key")]
    RecoveryFailed,
    #[error(transparent)]
    Malformed(#[from] GroupError),
}

macro_rules! hex_serde {
    ($t:ty) => {
        impl serde::Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.encode()))
            }
        }
        impl<'de> serde::Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = <String as serde::Deserialize>::deserialize(d)?;
                let bytes = hex::decode(text).map_err(serde::de::Error::custom)?;
                <$t>::decode(&bytes).map_err(serde::de::Error::custom)
            }
        }
    };
}
pub(crate) use hex_serde;
