use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    build_btc_emergency, build_btc_side, build_xmr_redeem, build_xmr_side, AbortReason, BtcSide,
    BtcTerms, Funding, Message, SwapState, XmrFunding, XmrSide, XmrTerms,
};
use crate::adaptors::{
    ecdsa_enc_sign, ecdsa_rec_key, ecdsa_sign, ecdsa_verify, schnorr_enc_sign, schnorr_rec_key,
    schnorr_sign, EcdsaEncSig, SchnorrEncSig,
};
use crate::chains::OutPoint;
use crate::dleq::CrossGroupDleqProof;
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};
use crate::params::SwapParams;
use crate::protocol::{Action, BtcTx, ChainView, Role, SwapParty, TxRole, XmrTx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobStrategy {
    #[default]
    Honest,
    /// Completes setup but never publishes `BTC_l`.
    NeverLock,
    /// Publishes `BTC_l`, then stops acting.
    OfflineAfterLock,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmergencyError {
    /// `BTC_r` and `XMR_c` have not both been seen.
    #[error("alice has not published both BTC_r and XMR_c")]
    NotCheating,
    /// `BTC_r` is `t2` deep; `BTC_t` is already minable.
    #[error("emergency window closed")]
    WindowClosed,
    #[error("BTC_r output already spent")]
    AlreadySpent,
    #[error("could not recover r_A from XMR_c")]
    RecoveryFailed,
}

#[derive(Debug, Clone)]
struct PeerKeys {
    s_a_xmr: PointP,
    s_a_btc: PointQ,
    view: ScalarP,
    funding: XmrFunding,
    refund_to: PointP,
    r_a_xmr: PointP,
    r_a_btc: PointQ,
}

/// Bob holds bitcoin and wants Alice's monero.
#[derive(Debug, Clone)]
pub struct Bob {
    params: SwapParams,
    strategy: BobStrategy,
    tag: SwapState,
    s_b: CrossScalar,
    view: ScalarP,
    pk_b: ScalarQ,
    btc_wallet: ScalarQ,
    xmr_wallet: ScalarP,
    funding: Option<Funding>,
    peer: Option<PeerKeys>,
    peer_btc: Option<(PointQ, PointQ)>,
    xmr: Option<XmrSide>,
    btc: Option<BtcSide>,
    refund_encsig: Option<SchnorrEncSig>,
    redeem_encsig: Option<EcdsaEncSig>,
    cancel_sig_a: Option<crate::adaptors::EcdsaSignature>,
    recovered_s_a: Option<CrossScalar>,
    recovered_r_a: Option<CrossScalar>,
    published: BTreeSet<TxRole>,
    pending: Vec<Message>,
    offline: bool,
}

impl Bob {
    pub fn new<R: RngCore + CryptoRng>(
        params: SwapParams,
        strategy: BobStrategy,
        rng: &mut R,
    ) -> Self {
        let s_b = loop {
            let s = CrossScalar::random(rng);
            if s != CrossScalar::ZERO {
                break s;
            }
        };
        Self {
            params,
            strategy,
            tag: SwapState::Setup,
            s_b,
            view: ScalarP::random_nonzero(rng),
            pk_b: ScalarQ::random_nonzero(rng),
            btc_wallet: ScalarQ::random_nonzero(rng),
            xmr_wallet: ScalarP::random_nonzero(rng),
            funding: None,
            peer: None,
            peer_btc: None,
            xmr: None,
            btc: None,
            refund_encsig: None,
            redeem_encsig: None,
            cancel_sig_a: None,
            recovered_s_a: None,
            recovered_r_a: None,
            published: BTreeSet::new(),
            pending: Vec::new(),
            offline: false,
        }
    }

    /// The funding output `tid_B`.
    pub fn fund_btc(&mut self, outpoint: OutPoint, amount: u64) {
        self.funding = Some(Funding {
            outpoint,
            amount,
            change: self.btc_wallet_pub(),
        });
    }

    pub fn state(&self) -> &SwapState {
        &self.tag
    }

    pub fn strategy(&self) -> BobStrategy {
        self.strategy
    }

    pub fn recovered_s_a(&self) -> Option<CrossScalar> {
        self.recovered_s_a
    }

    pub fn recovered_r_a(&self) -> Option<CrossScalar> {
        self.recovered_r_a
    }

    pub fn s_b(&self) -> CrossScalar {
        self.s_b
    }

    pub fn pk_b(&self) -> PointQ {
        PointQ::mul_base(&self.pk_b)
    }

    pub fn s_b_xmr(&self) -> PointP {
        PointP::mul_base(&self.s_b.to_p())
    }

    pub fn btc_wallet_pub(&self) -> PointQ {
        PointQ::mul_base(&self.btc_wallet)
    }

    pub fn xmr_wallet_pub(&self) -> PointP {
        PointP::mul_base(&self.xmr_wallet)
    }

    pub fn xmr_side(&self) -> Option<&XmrSide> {
        self.xmr.as_ref()
    }

    pub fn btc_side(&self) -> Option<&BtcSide> {
        self.btc.as_ref()
    }

    fn abort(&mut self, reason: AbortReason) {
        self.tag = SwapState::Aborted(reason);
    }

    fn handle(&mut self, msg: &Message, out: &mut Vec<Action<Message>>) -> bool {
        match msg {
            Message::XmrKeysA {
                s_xmr,
                s_btc,
                s_proof,
                view,
                funding,
                refund_to,
                r_xmr,
                r_btc,
                r_proof,
            } => {
                if self.peer.is_some() {
                    return true;
                }
                if !dleq_ok(s_btc, s_xmr, s_proof) || !dleq_ok(r_btc, r_xmr, r_proof) {
                    self.abort(AbortReason::BadDleq);
                    return true;
                }
                let peer = PeerKeys {
                    s_a_xmr: *s_xmr,
                    s_a_btc: *s_btc,
                    view: *view,
                    funding: *funding,
                    refund_to: *refund_to,
                    r_a_xmr: *r_xmr,
                    r_a_btc: *r_btc,
                };
                let terms = XmrTerms {
                    s_a: peer.s_a_xmr,
                    s_b: self.s_b_xmr(),
                    view_pub: PointP::mul_base(&(self.view + peer.view)),
                    funding: peer.funding,
                    refund_to: peer.refund_to,
                };
                let Ok(side) = build_xmr_side(&self.params, &terms) else {
                    self.abort(AbortReason::BadTransaction);
                    return true;
                };
                let encsig = schnorr_enc_sign(&self.s_b.to_p(), &peer.r_a_xmr, &side.refund.sighash())
                    .expect("nonzero key and encryption key");
                let funding = self.funding.expect("bob funded before the swap");
                out.push(Action::Send {
                    message: Message::XmrKeysB {
                        s_xmr: self.s_b_xmr(),
                        view: self.view,
                    },
                });
                out.push(Action::Send {
                    message: Message::XmrRefundEncSig { encsig },
                });
                out.push(Action::Send {
                    message: Message::BtcKeysB {
                        pk: self.pk_b(),
                        funding,
                        refund_to: self.btc_wallet_pub(),
                    },
                });
                self.refund_encsig = Some(encsig);
                self.xmr = Some(side);
                self.peer = Some(peer);
                true
            }
            Message::BtcKeysA { pk, take_to } => {
                self.peer_btc.get_or_insert((*pk, *take_to));
                true
            }
            Message::BtcCancelSig { sig } => {
                let Some(side) = &self.btc else {
                    return false;
                };
                if self.cancel_sig_a.is_some() {
                    return true;
                }
                let (pk_a, _) = self.peer_btc.expect("built after btc keys");
                if !ecdsa_verify(&pk_a, &side.cancel.sighash(), sig) {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                let s_a_btc = self.peer.as_ref().expect("built after keys").s_a_btc;
                let encsig = ecdsa_enc_sign(&self.pk_b, &s_a_btc, &side.redeem.sighash())
                    .expect("nonzero key and encryption key");
                self.cancel_sig_a = Some(*sig);
                self.redeem_encsig = Some(encsig);
                out.push(Action::Send {
                    message: Message::BtcRedeemEncSig { encsig },
                });
                true
            }
            _ => true,
        }
    }

    /// Build the Bitcoin side and sign `BTC_t` once both key sets are in.
    fn try_send_take_sig(&mut self, out: &mut Vec<Action<Message>>) {
        if self.btc.is_some() || self.tag != SwapState::Setup {
            return;
        }
        let (Some(peer), Some((pk_a, take_to))) = (&self.peer, self.peer_btc) else {
            return;
        };
        let terms = BtcTerms {
            pk_a,
            pk_b: self.pk_b(),
            r_a: peer.r_a_btc,
            funding: self.funding.expect("bob funded before the swap"),
            bob_to: self.btc_wallet_pub(),
            alice_to: take_to,
        };
        let Ok(side) = build_btc_side(&self.params, &terms) else {
            self.abort(AbortReason::BadTransaction);
            return;
        };
        let sig = ecdsa_sign(&self.pk_b, &side.take.sighash()).expect("nonzero key");
        out.push(Action::Send {
            message: Message::BtcTakeSig { sig },
        });
        self.btc = Some(side);
    }

    fn publish_btc(&mut self, role: TxRole, tx: BtcTx, out: &mut Vec<Action<Message>>) {
        if self.published.insert(role) {
            out.push(Action::BroadcastBtc { role, tx });
        }
    }

    fn publish_xmr(&mut self, role: TxRole, tx: XmrTx, out: &mut Vec<Action<Message>>) {
        if self.published.insert(role) {
            out.push(Action::BroadcastXmr { role, tx });
        }
    }

    fn signed_btc_lock(&self) -> BtcTx {
        let mut lock = self.btc.as_ref().expect("setup done").lock.clone();
        let sig = ecdsa_sign(&self.btc_wallet, &lock.sighash()).expect("nonzero key");
        lock.push_signature(self.btc_wallet_pub(), sig);
        lock
    }

    fn signed_btc_cancel(&self) -> BtcTx {
        let side = self.btc.as_ref().expect("setup done");
        let (pk_a, _) = self.peer_btc.expect("setup done");
        let mut tx = side.cancel.clone();
        let sig_b = ecdsa_sign(&self.pk_b, &tx.sighash()).expect("nonzero key");
        tx.push_signature(pk_a, self.cancel_sig_a.expect("setup done"));
        tx.push_signature(self.pk_b(), sig_b);
        tx
    }

    /// `XMR_r`, signed with the recovered `s_A` and Bob's own `s_B`.
    fn signed_xmr_redeem(&self, s_a: &CrossScalar) -> XmrTx {
        let side = self.xmr.as_ref().expect("setup done");
        let mut tx = build_xmr_redeem(&self.params, side, self.xmr_wallet_pub());
        let sighash = tx.sighash();
        let peer = self.peer.as_ref().expect("setup done");
        let sig_a = schnorr_sign(&s_a.to_p(), &sighash).expect("nonzero key");
        let sig_b = schnorr_sign(&self.s_b.to_p(), &sighash).expect("nonzero key");
        tx.push_signature(peer.s_a_xmr, sig_a);
        tx.push_signature(self.s_b_xmr(), sig_b);
        tx
    }

    /// `r_A` from an observed `XMR_c`, if Alice has published one.
    fn recover_r_a(&self, view: &ChainView<'_>) -> Option<CrossScalar> {
        let side = self.xmr.as_ref()?;
        let refund = view.xmr.find_by_id(&side.refund.txid())?;
        let sig = refund.extract_witness(&self.s_b_xmr()).ok()?;
        schnorr_rec_key(&sig, self.refund_encsig.as_ref()?).ok()
    }

    /// `s_A` from an observed `BTC_r`, if Alice has published one.
    fn recover_s_a(&self, view: &ChainView<'_>) -> Option<CrossScalar> {
        let side = self.btc.as_ref()?;
        let redeem = view.btc.find_by_id(&side.redeem.txid())?;
        let sig = redeem.extract_witness(&self.pk_b()).ok()?;
        let s_a_btc = self.peer.as_ref()?.s_a_btc;
        ecdsa_rec_key(&sig, self.redeem_encsig.as_ref()?, &s_a_btc).ok()
    }

    /// Build the emergency refund `BTC_e` once Alice has published both
    /// `BTC_r` and `XMR_c`.
    pub fn emergency_refund(&self, view: ChainView<'_>) -> Result<BtcTx, EmergencyError> {
        let side = self.btc.as_ref().ok_or(EmergencyError::NotCheating)?;
        if view.btc.find_by_id(&side.redeem.txid()).is_none() {
            return Err(EmergencyError::NotCheating);
        }
        let xmr = self.xmr.as_ref().ok_or(EmergencyError::NotCheating)?;
        if view.xmr.find_by_id(&xmr.refund.txid()).is_none() {
            return Err(EmergencyError::NotCheating);
        }
        let redeem_out = side.redeem.outpoint(0);
        if view.btc.spender_of(&redeem_out).is_some() {
            return Err(EmergencyError::AlreadySpent);
        }
        if view.btc.confirmations(&side.redeem.txid()) >= self.params.t2 as u64 {
            return Err(EmergencyError::WindowClosed);
        }
        let r_a = self.recover_r_a(&view).ok_or(EmergencyError::RecoveryFailed)?;
        let r_a_btc = self.peer.as_ref().expect("setup done").r_a_btc;
        let mut tx = build_btc_emergency(&self.params, side, self.btc_wallet_pub());
        let sighash = tx.sighash();
        let sig_r = ecdsa_sign(&r_a.to_q(), &sighash).map_err(|_| EmergencyError::RecoveryFailed)?;
        let sig_b = ecdsa_sign(&self.pk_b, &sighash).expect("nonzero key");
        tx.push_signature(r_a_btc, sig_r);
        tx.push_signature(self.pk_b(), sig_b);
        Ok(tx)
    }

    fn note_recoveries(&mut self, view: &ChainView<'_>, out: &mut Vec<Action<Message>>) {
        if self.recovered_s_a.is_none() {
            if let Some(s_a) = self.recover_s_a(view) {
                self.recovered_s_a = Some(s_a);
                out.push(Action::RecoveredSecret {
                    name: "s_A".into(),
                    value: s_a,
                });
            }
        }
        if self.recovered_r_a.is_none() {
            if let Some(r_a) = self.recover_r_a(view) {
                self.recovered_r_a = Some(r_a);
                out.push(Action::RecoveredSecret {
                    name: "r_A".into(),
                    value: r_a,
                });
            }
        }
    }

    /// Alice's monero lock, confirmed deep enough, found by view key.
    fn xmr_lock_confirmed(&self, view: &ChainView<'_>) -> bool {
        let (Some(side), Some(peer)) = (&self.xmr, &self.peer) else {
            return false;
        };
        let lock_txid = side.lock.txid();
        let found = view
            .xmr
            .scan_with_view_key(&(self.view + peer.view))
            .into_iter()
            .any(|f| f.outpoint == side.lock.outpoint(0) && f.output.amount == self.params.amt_xmr);
        found && view.xmr.confirmations(&lock_txid) >= self.params.xmr_conf_target
    }

    fn advance(&mut self, view: &ChainView<'_>, out: &mut Vec<Action<Message>>) -> bool {
        let before = (self.tag.clone(), out.len());
        let Some(btc) = self.btc.clone() else {
            return false;
        };
        if self.cancel_sig_a.is_none() {
            return false;
        }
        self.note_recoveries(view, out);
        if matches!(self.tag, SwapState::Setup | SwapState::XmrLocked) {
            let refund = &self.xmr.as_ref().expect("setup done").refund;
            if view.xmr.is_confirmed(&refund.txid()) {
                self.abort(AbortReason::XmrLockSpent);
                return true;
            }
        }
        match self.tag {
            SwapState::Setup => {
                if self.xmr_lock_confirmed(view) {
                    self.tag = SwapState::XmrLocked;
                }
            }
            SwapState::XmrLocked => {
                if self.strategy != BobStrategy::NeverLock {
                    let lock = self.signed_btc_lock();
                    self.publish_btc(TxRole::BtcLock, lock, out);
                    self.tag = SwapState::BtcLocked;
                    if self.strategy == BobStrategy::OfflineAfterLock {
                        self.offline = true;
                    }
                }
            }
            SwapState::BtcLocked | SwapState::BtcRedeemPublished => {
                if view.btc.is_confirmed(&btc.cancel.txid()) {
                    self.tag = SwapState::BtcCancelled;
                } else if self.published.contains(&TxRole::BtcEmergency)
                    && view.btc.is_confirmed(
                        &build_btc_emergency(&self.params, &btc, self.btc_wallet_pub()).txid(),
                    )
                {
                    self.tag = SwapState::EmergencyRefunded;
                } else if let Ok(tx) = self.emergency_refund(*view) {
                    self.publish_btc(TxRole::BtcEmergency, tx, out);
                    self.tag = SwapState::BtcRedeemPublished;
                } else if let Some(s_a) = self.recovered_s_a {
                    self.tag = SwapState::BtcRedeemPublished;
                    let xmr = self.xmr.as_ref().expect("setup done");
                    let xmr_refunded = view.xmr.find_by_id(&xmr.refund.txid()).is_some();
                    let redeem_tx = self.signed_xmr_redeem(&s_a);
                    if view.xmr.is_confirmed(&redeem_tx.txid()) {
                        self.tag = SwapState::XmrRedeemed;
                    } else if !xmr_refunded {
                        self.publish_xmr(TxRole::XmrRedeem, redeem_tx, out);
                    }
                } else if view.btc.confirmations(&btc.lock.txid()) >= self.params.t1 as u64 {
                    let cancel = self.signed_btc_cancel();
                    self.publish_btc(TxRole::BtcCancel, cancel, out);
                }
            }
            _ => {}
        }
        (self.tag.clone(), out.len()) != before
    }
}

fn dleq_ok(q: &PointQ, p: &PointP, proof: &CrossGroupDleqProof) -> bool {
    !q.is_identity() && proof.verify(q, p).is_ok()
}

impl SwapParty for Bob {
    type Message = Message;

    fn role(&self) -> Role {
        Role::Bob
    }

    fn step(mut self, view: ChainView<'_>, inbox: Vec<Message>) -> (Self, Vec<Action<Message>>) {
        let mut out = Vec::new();
        if self.tag.is_terminal() || self.offline {
            return (self, out);
        }
        self.pending.extend(inbox);
        loop {
            let mut progressed = false;
            for msg in std::mem::take(&mut self.pending) {
                if self.tag.is_terminal() {
                    break;
                }
                if self.handle(&msg, &mut out) {
                    progressed = true;
                } else {
                    self.pending.push(msg);
                }
                self.try_send_take_sig(&mut out);
            }
            if !progressed || self.pending.is_empty() {
                break;
            }
        }
        while !self.tag.is_terminal() && !self.offline && self.advance(&view, &mut out) {}
        (self, out)
    }

    fn tag(&self) -> String {
        self.tag.to_string()
    }

    fn is_terminal(&self) -> bool {
        self.tag.is_terminal()
    }

    fn btc_wallet(&self) -> Vec<PointQ> {
        vec![self.btc_wallet_pub()]
    }

    fn xmr_wallet(&self) -> Vec<PointP> {
        vec![self.xmr_wallet_pub()]
    }
}
