//! Vocabulary shared by the two swap state machines and the harness.

use serde::{Deserialize, Serialize};

use crate::chains::{Bitcoin, BtcChain, Monero, SimTransaction, XmrChain};
use crate::groups::CrossScalar;

pub type BtcTx = SimTransaction<Bitcoin>;
pub type XmrTx = SimTransaction<Monero>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

/// What a broadcast transaction is for. Used for transcripts and for mining
/// priority hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxRole {
    BtcLock,
    BtcCancel,
    BtcRefund,
    BtcPunish,
    BtcRedeem,
    BtcTake,
    BtcEmergency,
    XmrLock,
    XmrSweep,
    XmrRefund,
    XmrRedeem,
}

impl TxRole {
    pub fn name(self) -> &'static str {
        match self {
            TxRole::BtcLock => "btc_lock",
            TxRole::BtcCancel => "btc_cancel",
            TxRole::BtcRefund => "btc_refund",
            TxRole::BtcPunish => "btc_punish",
            TxRole::BtcRedeem => "btc_redeem",
            TxRole::BtcTake => "btc_take",
            TxRole::BtcEmergency => "btc_emergency",
            TxRole::XmrLock => "xmr_lock",
            TxRole::XmrSweep => "xmr_sweep",
            TxRole::XmrRefund => "xmr_refund",
            TxRole::XmrRedeem => "xmr_redeem",
        }
    }

    pub fn is_btc(self) -> bool {
        !matches!(
            self,
            TxRole::XmrLock | TxRole::XmrSweep | TxRole::XmrRefund | TxRole::XmrRedeem
        )
    }
}

/// Read-only access to both chains for one step.
#[derive(Clone, Copy)]
pub struct ChainView<'a> {
    pub btc: &'a BtcChain,
    pub xmr: &'a XmrChain,
}

impl<'a> ChainView<'a> {
    pub fn new(btc: &'a BtcChain, xmr: &'a XmrChain) -> Self {
        Self { btc, xmr }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action<M> {
    Send { message: M },
    BroadcastBtc { role: TxRole, tx: BtcTx },
    BroadcastXmr { role: TxRole, tx: XmrTx },
    /// A counterparty secret learned from a published signature.
    RecoveredSecret { name: String, value: CrossScalar },
}

pub trait ProtocolMessage: Clone + Serialize {
    fn kind(&self) -> &'static str;
}

/// One party of a swap, driven one tick at a time.
pub trait SwapParty: Sized {
    type Message: ProtocolMessage;

    fn role(&self) -> Role;

    /// One deterministic transition. Consumes the state, returns the next
    /// state and the actions to apply.
    fn step(self, view: ChainView<'_>, inbox: Vec<Self::Message>)
        -> (Self, Vec<Action<Self::Message>>);

    /// State tag as written to transcripts.
    fn tag(&self) -> String;

    fn is_terminal(&self) -> bool;

    /// Keys this party fully controls on each chain, for balance accounting.
    fn btc_wallet(&self) -> Vec<crate::groups::PointQ>;
    fn xmr_wallet(&self) -> Vec<crate::groups::PointP>;
}
