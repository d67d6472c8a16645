//! Swap where Alice holds monero and moves first.
//!
//! Bob's bitcoin lock comes last, after he has seen Alice's monero lock
//! confirm, so an attacker who aborts early costs Bob nothing. The price is a
//! third Bitcoin transaction: Alice's redeem `BTC_r` moves the coins into an
//! output that Alice can only take after `t2`, during which Bob can take them
//! back if Alice also refunded her monero.
//!
//! ```text
//! XMR_l ──> XMR_r  (Bob; needs s_A, leaked by BTC_r)
//!   └─────> XMR_c  (Alice; leaks r_A)
//!
//! BTC_l ──(t1)──> BTC_c                     (Bob)
//!   └──> BTC_r ──(t2)──> BTC_t  {pk_A, pk_B} (Alice)
//!          └──────────> BTC_e  {R_A, pk_B}  (Bob, after XMR_c)
//! ```
//!
//! Every transaction pays the fixed fee of its chain out of the value it
//! spends.

mod alice;
mod bob;

pub use alice::{Alice, AliceStrategy};
pub use bob::{Bob, BobStrategy, EmergencyError};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adaptors::{EcdsaEncSig, EcdsaSignature, SchnorrEncSig};
use crate::chains::{SimOutput, SimTransaction, SpendClause};
use crate::dleq::CrossGroupDleqProof;
use crate::groups::{PointP, PointQ, ScalarP};
use crate::params::SwapParams;
use crate::protocol::{BtcTx, ProtocolMessage, XmrTx};

pub use crate::swap_btc_xmr::{AbortReason, BuildError, Funding, XmrFunding};

/// Per-party state tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapState {
    Setup,
    XmrLocked,
    BtcLocked,
    BtcRedeemPublished,
    XmrRedeemed,
    BtcTaken,
    XmrRefunded,
    BtcCancelled,
    EmergencyRefunded,
    Aborted(AbortReason),
}

impl SwapState {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            SwapState::XmrRedeemed
                | SwapState::BtcTaken
                | SwapState::XmrRefunded
                | SwapState::BtcCancelled
                | SwapState::EmergencyRefunded
                | SwapState::Aborted(_)
        )
    }
}

impl fmt::Display for SwapState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwapState::Aborted(r) => write!(f, "aborted({})", r.name()),
            other => {
                let s = serde_json::to_value(other).expect("tag serializes");
                f.write_str(s.as_str().unwrap_or("?"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    XmrKeysA {
        s_xmr: PointP,
        s_btc: PointQ,
        s_proof: CrossGroupDleqProof,
        view: ScalarP,
        funding: XmrFunding,
        refund_to: PointP,
        r_xmr: PointP,
        r_btc: PointQ,
        r_proof: CrossGroupDleqProof,
    },
    XmrKeysB {
        s_xmr: PointP,
        view: ScalarP,
    },
    /// Bob's signature on `XMR_c`, encrypted under `R_A`.
    XmrRefundEncSig {
        encsig: SchnorrEncSig,
    },
    BtcKeysA {
        pk: PointQ,
        take_to: PointQ,
    },
    BtcKeysB {
        pk: PointQ,
        funding: Funding,
        refund_to: PointQ,
    },
    BtcTakeSig {
        sig: EcdsaSignature,
    },
    BtcCancelSig {
        sig: EcdsaSignature,
    },
    /// Bob's signature on `BTC_r`, encrypted under `S_A`.
    BtcRedeemEncSig {
        encsig: EcdsaEncSig,
    },
}

impl ProtocolMessage for Message {
    fn kind(&self) -> &'static str {
        match self {
            Message::XmrKeysA { .. } => "xmr_keys_a",
            Message::XmrKeysB { .. } => "xmr_keys_b",
            Message::XmrRefundEncSig { .. } => "xmr_refund_enc_sig",
            Message::BtcKeysA { .. } => "btc_keys_a",
            Message::BtcKeysB { .. } => "btc_keys_b",
            Message::BtcTakeSig { .. } => "btc_take_sig",
            Message::BtcCancelSig { .. } => "btc_cancel_sig",
            Message::BtcRedeemEncSig { .. } => "btc_redeem_enc_sig",
        }
    }
}

/// `XMR_l` and `XMR_c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmrSide {
    pub lock: XmrTx,
    pub refund: XmrTx,
}

/// `BTC_l`, `BTC_c`, `BTC_r` and `BTC_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtcSide {
    pub lock: BtcTx,
    pub cancel: BtcTx,
    pub redeem: BtcTx,
    pub take: BtcTx,
}

/// Public inputs both sides need to build `XMR_l` and `XMR_c`.
#[derive(Debug, Clone, Copy)]
pub struct XmrTerms {
    pub s_a: PointP,
    pub s_b: PointP,
    pub view_pub: PointP,
    pub funding: XmrFunding,
    pub refund_to: PointP,
}

pub fn build_xmr_side(params: &SwapParams, terms: &XmrTerms) -> Result<XmrSide, BuildError> {
    let (amt, fee) = (params.amt_xmr, params.xmr_fee);
    let need = amt + fee;
    if terms.funding.amount < need {
        return Err(BuildError::InsufficientFunding {
            have: terms.funding.amount,
            need,
        });
    }
    let mut outputs = vec![SimOutput::with_clauses(
        amt,
        vec![SpendClause::keys(vec![terms.s_a, terms.s_b])],
    )
    .with_view_key(terms.view_pub)];
    if terms.funding.amount > need {
        outputs.push(SimOutput::to_key(
            terms.funding.amount - need,
            terms.funding.change,
        ));
    }
    let lock = SimTransaction::spend(terms.funding.outpoint, 0, outputs, fee);
    let refund = SimTransaction::spend(
        lock.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - fee, terms.refund_to)],
        fee,
    );
    Ok(XmrSide { lock, refund })
}

/// `XMR_r`: the monero lock to `to`; needs signatures under `S_A` and `S_B`.
pub fn build_xmr_redeem(params: &SwapParams, side: &XmrSide, to: PointP) -> XmrTx {
    SimTransaction::spend(
        side.lock.outpoint(0),
        0,
        vec![SimOutput::to_key(params.amt_xmr - params.xmr_fee, to)],
        params.xmr_fee,
    )
}

/// Public inputs both sides need to build the Bitcoin transactions.
#[derive(Debug, Clone, Copy)]
pub struct BtcTerms {
    pub pk_a: PointQ,
    pub pk_b: PointQ,
    pub r_a: PointQ,
    pub funding: Funding,
    pub bob_to: PointQ,
    pub alice_to: PointQ,
}

pub fn build_btc_side(params: &SwapParams, terms: &BtcTerms) -> Result<BtcSide, BuildError> {
    let (amt, fee) = (params.amt_btc, params.fee);
    if fee.saturating_mul(2) >= amt {
        return Err(BuildError::FeeTooHigh { fee, amount: amt });
    }
    let need = amt + fee;
    if terms.funding.amount < need {
        return Err(BuildError::InsufficientFunding {
            have: terms.funding.amount,
            need,
        });
    }
    let both = || SpendClause::keys(vec![terms.pk_a, terms.pk_b]);
    let mut outputs = vec![SimOutput::with_clauses(amt, vec![both()])];
    if terms.funding.amount > need {
        outputs.push(SimOutput::to_key(
            terms.funding.amount - need,
            terms.funding.change,
        ));
    }
    let lock = SimTransaction::spend(terms.funding.outpoint, 0, outputs, fee);
    let cancel = SimTransaction::spend(
        lock.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - fee, terms.bob_to)],
        fee,
    )
    .with_timelock(params.t1);
    let redeem = SimTransaction::spend(
        lock.outpoint(0),
        0,
        vec![SimOutput::with_clauses(
            amt - fee,
            vec![
                both().with_timelock(params.t2),
                SpendClause::keys(vec![terms.r_a, terms.pk_b]),
            ],
        )],
        fee,
    );
    let take = SimTransaction::spend(
        redeem.outpoint(0),
        0,
        vec![SimOutput::to_key(amt - 2 * fee, terms.alice_to)],
        fee,
    )
    .with_timelock(params.t2);
    Ok(BtcSide {
        lock,
        cancel,
        redeem,
        take,
    })
}

/// `BTC_e`: `BTC_r`'s second exit back to Bob; needs signatures under `R_A`
/// and `pk_B`.
pub fn build_btc_emergency(params: &SwapParams, side: &BtcSide, bob_to: PointQ) -> BtcTx {
    SimTransaction::spend(
        side.redeem.outpoint(0),
        1,
        vec![SimOutput::to_key(params.amt_btc - 2 * params.fee, bob_to)],
        params.fee,
    )
}
