//! Swap where Bob sells bitcoin for Alice's monero and Bob locks first.
//!
//! Setup runs over messages: both sides exchange keys with a cross-group
//! DLEQ proof binding each party's secret `s` to its Bitcoin and Monero
//! points, swap addresses, then pre-sign the cancel/refund/punish branch
//! before Bob signs the lock. Execution is driven by [`Alice`] and [`Bob`],
//! pure state machines stepped once per tick.
//!
//! ```text
//! lock ──(t1)──> cancel ──> refund        (Bob; leaks s_b to Alice)
//!   │                 └──(t2)──> punish   (Alice)
//!   └──> redeem                           (Alice; leaks s_a to Bob)
//! ```

mod alice;
mod bob;

pub use alice::{Alice, AliceTag};
pub use bob::{Bob, BobStrategy, BobTag};

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::adaptors::{ecdsa_sign, EcdsaEncSig, EcdsaSignature};
use crate::chains::{OutPoint, SimOutput, SimTransaction, SpendClause};
use crate::dleq::{dleq_prove, CrossGroupDleqProof};
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};
use crate::params::SwapParams;
use crate::protocol::{BtcTx, ProtocolMessage, XmrTx};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortReason {
    BadDleq,
    BadSignature,
    BadTransaction,
    /// Bitcoin lock seen too late for a safe redeem; Alice never locked.
    LockTooLate,
    /// The monero lock output was swept by someone else.
    XmrLockSpent,
}

impl AbortReason {
    pub fn name(&self) -> &'static str {
        match self {
            AbortReason::BadDleq => "bad-dleq",
            AbortReason::BadSignature => "bad-signature",
            AbortReason::BadTransaction => "bad-transaction",
            AbortReason::LockTooLate => "lock-too-late",
            AbortReason::XmrLockSpent => "xmr-lock-spent",
        }
    }
}

/// A party's own secrets from key generation.
#[derive(Debug, Clone)]
pub struct OwnKeys {
    /// Signing key `a` or `b` for the 2-of-2 Bitcoin outputs.
    pub dlsig: ScalarQ,
    pub dlsig_pub: PointQ,
    /// Spend-key share, valid in both groups.
    pub s: CrossScalar,
    pub s_btc: PointQ,
    pub s_xmr: PointP,
    pub view: ScalarP,
    pub view_pub: PointP,
    pub proof: CrossGroupDleqProof,
}

impl OwnKeys {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let dlsig = ScalarQ::random_nonzero(rng);
        let s = loop {
            let s = CrossScalar::random(rng);
            if s != CrossScalar::ZERO {
                break s;
            }
        };
        let (s_btc, s_xmr, proof) = dleq_prove(&s, rng);
        let view = ScalarP::random_nonzero(rng);
        Self {
            dlsig,
            dlsig_pub: PointQ::mul_base(&dlsig),
            s,
            s_btc,
            s_xmr,
            view,
            view_pub: PointP::mul_base(&view),
            proof,
        }
    }

    pub fn message(&self) -> KeyGenMsg {
        KeyGenMsg {
            dlsig: self.dlsig_pub,
            s_btc: self.s_btc,
            s_xmr: self.s_xmr,
            view: self.view,
            proof: self.proof.clone(),
        }
    }
}

/// The counterparty's public halves plus its private view key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerKeys {
    pub dlsig: PointQ,
    pub s_btc: PointQ,
    pub s_xmr: PointP,
    pub view: ScalarP,
    pub view_pub: PointP,
}

impl PeerKeys {
    /// Accept a key-generation message only if its DLEQ proof verifies.
    pub fn from_message(m: &KeyGenMsg) -> Result<Self, AbortReason> {
        if m.dlsig.is_identity() || m.s_btc.is_identity() {
            return Err(AbortReason::BadDleq);
        }
        m.proof
            .verify(&m.s_btc, &m.s_xmr)
            .map_err(|_| AbortReason::BadDleq)?;
        Ok(Self {
            dlsig: m.dlsig,
            s_btc: m.s_btc,
            s_xmr: m.s_xmr,
            view: m.view,
            view_pub: PointP::mul_base(&m.view),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PartyKeys {
    pub own: OwnKeys,
    pub peer: PeerKeys,
}

impl PartyKeys {
    /// `v_a + v_b`, the view key of the Monero lock output.
    pub fn shared_view(&self) -> ScalarP {
        self.own.view + self.peer.view
    }

    /// `S_a^xmr + S_b^xmr`, the spend key of the Monero lock output.
    pub fn shared_spend(&self) -> PointP {
        self.own.s_xmr + self.peer.s_xmr
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{side:?} rejected the counterparty's keys: {reason:?}")]
pub struct KeyGenError {
    pub side: crate::protocol::Role,
    pub reason: AbortReason,
}

/// Key generation between two fresh parties. Each side verifies the other's
/// DLEQ proof.
pub fn kgen_exchange<R1, R2>(
    alice_rng: &mut R1,
    bob_rng: &mut R2,
) -> Result<(PartyKeys, PartyKeys), KeyGenError>
where
    R1: RngCore + CryptoRng,
    R2: RngCore + CryptoRng,
{
    use crate::protocol::Role;
    let alice = OwnKeys::generate(alice_rng);
    let bob = OwnKeys::generate(bob_rng);
    let bob_view_of_alice = PeerKeys::from_message(&alice.message()).map_err(|reason| KeyGenError {
        side: Role::Bob,
        reason,
    })?;
    let alice_view_of_bob = PeerKeys::from_message(&bob.message()).map_err(|reason| KeyGenError {
        side: Role::Alice,
        reason,
    })?;
    Ok((
        PartyKeys {
            own: alice,
            peer: alice_view_of_bob,
        },
        PartyKeys {
            own: bob,
            peer: bob_view_of_alice,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyGenMsg {
    pub dlsig: PointQ,
    pub s_btc: PointQ,
    pub s_xmr: PointP,
    /// Private view key, shared so both sides can watch the Monero lock.
    pub view: ScalarP,
    pub proof: CrossGroupDleqProof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapAddresses {
    pub redeem_a: PointQ,
    pub punish_a: PointQ,
    pub refund_b: PointQ,
}

impl SwapAddresses {
    pub fn distinct(&self) -> bool {
        self.redeem_a != self.punish_a
            && self.redeem_a != self.refund_b
            && self.punish_a != self.refund_b
    }
}

/// A spendable single-key output and the key that receives change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funding {
    pub outpoint: OutPoint,
    pub amount: u64,
    pub change: PointQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmrFunding {
    pub outpoint: OutPoint,
    pub amount: u64,
    pub change: PointP,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    KeyGenA(KeyGenMsg),
    KeyGenB(KeyGenMsg),
    AddressesA {
        redeem_a: PointQ,
        punish_a: PointQ,
    },
    AddressesB {
        refund_b: PointQ,
    },
    SigningB {
        lock: BtcTx,
        funding: Funding,
        sig_cancel_b: EcdsaSignature,
        sig_punish_b: EcdsaSignature,
    },
    SigningA {
        sig_cancel_a: EcdsaSignature,
        encsig_refund: EcdsaEncSig,
    },
    EncSigRedeem {
        encsig: EcdsaEncSig,
    },
}

impl ProtocolMessage for Message {
    fn kind(&self) -> &'static str {
        match self {
            Message::KeyGenA(_) => "key_gen_a",
            Message::KeyGenB(_) => "key_gen_b",
            Message::AddressesA { .. } => "addresses_a",
            Message::AddressesB { .. } => "addresses_b",
            Message::SigningB { .. } => "signing_b",
            Message::SigningA { .. } => "signing_a",
            Message::EncSigRedeem { .. } => "enc_sig_redeem",
        }
    }
}

/// The unsigned Bitcoin transactions of one swap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxSet {
    pub lock: BtcTx,
    pub cancel: BtcTx,
    pub refund: BtcTx,
    pub punish: BtcTx,
    pub redeem: BtcTx,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("funding {have} does not cover {need}")]
    InsufficientFunding { have: u64, need: u64 },
    #[error("fee {fee} too high for amount {amount}")]
    FeeTooHigh { fee: u64, amount: u64 },
}

/// Build lock, cancel, refund, punish and redeem. Both parties call this
/// independently and compare txids.
pub fn build_transactions(
    params: &SwapParams,
    a: &PointQ,
    b: &PointQ,
    addresses: &SwapAddresses,
    funding: &Funding,
) -> Result<TxSet, BuildError> {
    let (amt, fee) = (params.amt_btc, params.fee);
    if fee.saturating_mul(2) >= amt {
        return Err(BuildError::FeeTooHigh { fee, amount: amt });
    }
    let need = amt + fee;
    if funding.amount < need {
        return Err(BuildError::InsufficientFunding {
            have: funding.amount,
            need,
        });
    }
    let both = || SpendClause::keys(vec![*a, *b]);
    let mut lock_outputs = vec![SimOutput::with_clauses(amt, vec![both()])];
    if funding.amount > need {
        lock_outputs.push(SimOutput::to_key(funding.amount - need, funding.change));
    }
    let lock = SimTransaction::spend(funding.outpoint, 0, lock_outputs, fee);
    let cancel = SimTransaction::spend(
        lock.outpoint(0),
        0,
        vec![SimOutput::with_clauses(amt - fee, vec![both()])],
        fee,
    )
    .with_timelock(params.t1);
    let refund = SimTransaction::spend(
        cancel.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - 2 * fee, addresses.refund_b)],
        fee,
    );
    let punish = SimTransaction::spend(
        cancel.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - 2 * fee, addresses.punish_a)],
        fee,
    )
    .with_timelock(params.t2);
    let redeem = SimTransaction::spend(
        lock.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - fee, addresses.redeem_a)],
        fee,
    );
    Ok(TxSet {
        lock,
        cancel,
        refund,
        punish,
        redeem,
    })
}

/// Signatures collected during setup and execution. Which fields are filled
/// depends on whose set it is.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresignedSet {
    pub sig_cancel_a: Option<EcdsaSignature>,
    pub sig_cancel_b: Option<EcdsaSignature>,
    pub sig_punish_a: Option<EcdsaSignature>,
    pub sig_punish_b: Option<EcdsaSignature>,
    pub encsig_refund: Option<EcdsaEncSig>,
    pub sig_refund_b: Option<EcdsaSignature>,
    pub encsig_redeem: Option<EcdsaEncSig>,
}

pub(crate) fn sign(tx: &BtcTx, key: &ScalarQ) -> EcdsaSignature {
    ecdsa_sign(key, &tx.sighash()).expect("signing keys are nonzero")
}

/// Attach the two signatures of an `{A, B}` clause in clause order.
pub(crate) fn with_witness(
    tx: &BtcTx,
    a: (&PointQ, EcdsaSignature),
    b: (&PointQ, EcdsaSignature),
) -> BtcTx {
    let mut tx = tx.clone();
    tx.witness.clear();
    tx.push_signature(*a.0, a.1);
    tx.push_signature(*b.0, b.1);
    tx
}

/// Alice's Monero lock: the swap amount to `S_a + S_b`, watchable with
/// `v_a + v_b`.
pub fn build_xmr_lock(
    params: &SwapParams,
    keys: &PartyKeys,
    funding: &XmrFunding,
) -> Result<XmrTx, BuildError> {
    let need = params.amt_xmr + params.xmr_fee;
    if funding.amount < need {
        return Err(BuildError::InsufficientFunding {
            have: funding.amount,
            need,
        });
    }
    let view_pub = PointP::mul_base(&keys.shared_view());
    let mut outputs =
        vec![SimOutput::to_key(params.amt_xmr, keys.shared_spend()).with_view_key(view_pub)];
    if funding.amount > need {
        outputs.push(SimOutput::to_key(funding.amount - need, funding.change));
    }
    Ok(SimTransaction::spend(
        funding.outpoint,
        0,
        outputs,
        params.xmr_fee,
    ))
}

/// Move the Monero lock output to `to`, signed with the full spend key
/// `s_a + s_b`.
pub fn build_xmr_sweep(
    params: &SwapParams,
    lock: OutPoint,
    spend_key: &ScalarP,
    to: PointP,
) -> XmrTx {
    let mut tx = SimTransaction::spend(
        lock,
        0,
        vec![SimOutput::to_key(params.amt_xmr - params.xmr_fee, to)],
        params.xmr_fee,
    );
    let sig = crate::adaptors::schnorr_sign(spend_key, &tx.sighash())
        .expect("aggregate spend key is nonzero");
    tx.push_signature(PointP::mul_base(spend_key), sig);
    tx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn addresses() -> SwapAddresses {
        let k = |n| PointQ::mul_base(&ScalarQ::from_u64(n));
        SwapAddresses {
            redeem_a: k(1001),
            punish_a: k(1002),
            refund_b: k(1003),
        }
    }

    fn funding(amount: u64) -> Funding {
        Funding {
            outpoint: OutPoint {
                txid: crate::chains::Txid([9; 32]),
                vout: 0,
            },
            amount,
            change: PointQ::mul_base(&ScalarQ::from_u64(1004)),
        }
    }

    #[test]
    fn honest_key_generation_verifies_both_ways() {
        let (alice, bob) = kgen_exchange(
            &mut ChaCha20Rng::seed_from_u64(1),
            &mut ChaCha20Rng::seed_from_u64(2),
        )
        .unwrap();
        assert_eq!(alice.peer.s_xmr, bob.own.s_xmr);
        assert_eq!(bob.peer.s_btc, alice.own.s_btc);
        assert_eq!(alice.shared_spend(), bob.shared_spend());
        assert_eq!(alice.shared_view(), bob.shared_view());
    }

    #[test]
    fn key_generation_is_deterministic_per_seed() {
        let run = || {
            kgen_exchange(
                &mut ChaCha20Rng::seed_from_u64(5),
                &mut ChaCha20Rng::seed_from_u64(6),
            )
            .unwrap()
        };
        let (a1, b1) = run();
        let (a2, b2) = run();
        assert_eq!(a1.own.s, a2.own.s);
        assert_eq!(b1.own.proof, b2.own.proof);
    }

    #[test]
    fn substituted_monero_key_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let bob = OwnKeys::generate(&mut rng);
        let mut msg = bob.message();
        msg.s_xmr = PointP::mul_base(&ScalarP::random_nonzero(&mut rng));
        assert_eq!(PeerKeys::from_message(&msg), Err(AbortReason::BadDleq));
    }

    #[test]
    fn transaction_values_follow_fee_arithmetic() {
        let p = SwapParams::default();
        let (a, b) = (
            PointQ::mul_base(&ScalarQ::from_u64(1)),
            PointQ::mul_base(&ScalarQ::from_u64(2)),
        );
        let txs = build_transactions(&p, &a, &b, &addresses(), &funding(p.amt_btc + p.fee))
            .unwrap();
        assert_eq!(txs.lock.outputs.len(), 1);
        assert_eq!(txs.lock.outputs[0].amount, 100_000);
        assert_eq!(txs.cancel.outputs[0].amount, 99_000);
        assert_eq!(txs.punish.outputs[0].amount, 98_000);
        assert_eq!(txs.refund.outputs[0].amount, 98_000);
        assert_eq!(txs.redeem.outputs[0].amount, 99_000);
        assert_eq!(txs.cancel.rel_timelock, p.t1);
        assert_eq!(txs.punish.rel_timelock, p.t2);
        assert_eq!(txs.cancel.prev(), Some(txs.lock.outpoint(0)));
        assert_eq!(txs.punish.prev(), Some(txs.cancel.outpoint(0)));

        let again = build_transactions(&p, &a, &b, &addresses(), &funding(p.amt_btc + p.fee))
            .unwrap();
        assert_eq!(again.lock.txid(), txs.lock.txid());
        assert_eq!(again.redeem.txid(), txs.redeem.txid());
    }

    #[test]
    fn construction_errors() {
        let (a, b) = (
            PointQ::mul_base(&ScalarQ::from_u64(1)),
            PointQ::mul_base(&ScalarQ::from_u64(2)),
        );
        let p = SwapParams::default();
        assert!(matches!(
            build_transactions(&p, &a, &b, &addresses(), &funding(100)),
            Err(BuildError::InsufficientFunding { .. })
        ));
        let greedy = SwapParams {
            fee: 50_000,
            ..SwapParams::default()
        };
        assert!(matches!(
            build_transactions(&greedy, &a, &b, &addresses(), &funding(1_000_000)),
            Err(BuildError::FeeTooHigh { .. })
        ));
        let with_change =
            build_transactions(&p, &a, &b, &addresses(), &funding(200_000)).unwrap();
        assert_eq!(with_change.lock.outputs[1].amount, 200_000 - 101_000);
    }

    #[test]
    fn message_json_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let keys = OwnKeys::generate(&mut rng);
        let m = Message::KeyGenA(keys.message());
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.starts_with("{\"kind\":\"key_gen_a\""));
        let back: Message = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
