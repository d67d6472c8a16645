//! Bitcoin/Monero atomic swaps on simulated chains.
//!
//! The crate is layered bottom-up: [`groups`] (the two curve groups),
//! [`dleq`] (cross-group discrete-log equality), [`adaptors`] (ECDSA and
//! Schnorr adaptor signatures), [`chains`] (in-memory Bitcoin-like and
//! Monero-like ledgers), the two swap protocols [`swap_btc_xmr`] and
//! [`swap_xmr_btc`], and the scenario [`harness`] that drives them.

pub mod adaptors;
pub mod chains;
pub mod dleq;
pub mod groups;
pub mod harness;
pub mod params;
pub mod protocol;
pub mod swap_btc_xmr;
pub mod swap_xmr_btc;
pub mod transcript;
