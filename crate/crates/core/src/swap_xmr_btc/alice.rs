use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    build_btc_side, build_xmr_side, AbortReason, BtcSide, BtcTerms, Funding, Message, SwapState,
    XmrFunding, XmrSide, XmrTerms,
};
use crate::adaptors::{
    ecdsa_dec_sig, ecdsa_enc_verify, ecdsa_sign, ecdsa_verify, schnorr_dec_sig,
    schnorr_enc_verify, schnorr_sign, EcdsaEncSig, EcdsaSignature, SchnorrEncSig,
};
use crate::chains::OutPoint;
use crate::dleq::{dleq_prove, CrossGroupDleqProof};
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};
use crate::params::SwapParams;
use crate::protocol::{Action, BtcTx, ChainView, Role, SwapParty, TxRole, XmrTx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceStrategy {
    #[default]
    Honest,
    /// Locks monero but never publishes `BTC_r`; refunds once it is too late.
    NeverRedeem,
    /// Publishes `BTC_r` and `XMR_c` together, trying to keep both assets.
    Cheat,
}

#[derive(Debug, Clone)]
struct PeerXmr {
    s_b: PointP,
    view: ScalarP,
}

#[derive(Debug, Clone)]
struct PeerBtc {
    pk_b: PointQ,
    funding: Funding,
    refund_to: PointQ,
}

/// Alice holds monero and wants Bob's bitcoin.
#[derive(Debug, Clone)]
pub struct Alice {
    params: SwapParams,
    strategy: AliceStrategy,
    tag: SwapState,
    s_a: CrossScalar,
    s_a_btc: PointQ,
    s_a_xmr: PointP,
    s_proof: CrossGroupDleqProof,
    r_a: CrossScalar,
    r_a_btc: PointQ,
    r_a_xmr: PointP,
    r_proof: CrossGroupDleqProof,
    view: ScalarP,
    pk_a: ScalarQ,
    btc_wallet: ScalarQ,
    xmr_wallet: ScalarP,
    funding: Option<XmrFunding>,
    peer_xmr: Option<PeerXmr>,
    peer_btc: Option<PeerBtc>,
    xmr: Option<XmrSide>,
    btc: Option<BtcSide>,
    refund_encsig: Option<SchnorrEncSig>,
    take_sig_b: Option<EcdsaSignature>,
    redeem_encsig: Option<EcdsaEncSig>,
    published: BTreeSet<TxRole>,
    pending: Vec<Message>,
    hello_sent: bool,
}

fn nonzero_cross<R: RngCore + CryptoRng>(rng: &mut R) -> CrossScalar {
    loop {
        let s = CrossScalar::random(rng);
        if s != CrossScalar::ZERO {
            return s;
        }
    }
}

impl Alice {
    pub fn new<R: RngCore + CryptoRng>(
        params: SwapParams,
        strategy: AliceStrategy,
        rng: &mut R,
    ) -> Self {
        let s_a = nonzero_cross(rng);
        let (s_a_btc, s_a_xmr, s_proof) = dleq_prove(&s_a, rng);
        let r_a = nonzero_cross(rng);
        let (r_a_btc, r_a_xmr, r_proof) = dleq_prove(&r_a, rng);
        Self {
            params,
            strategy,
            tag: SwapState::Setup,
            s_a,
            s_a_btc,
            s_a_xmr,
            s_proof,
            r_a,
            r_a_btc,
            r_a_xmr,
            r_proof,
            view: ScalarP::random_nonzero(rng),
            pk_a: ScalarQ::random_nonzero(rng),
            btc_wallet: ScalarQ::random_nonzero(rng),
            xmr_wallet: ScalarP::random_nonzero(rng),
            funding: None,
            peer_xmr: None,
            peer_btc: None,
            xmr: None,
            btc: None,
            refund_encsig: None,
            take_sig_b: None,
            redeem_encsig: None,
            published: BTreeSet::new(),
            pending: Vec::new(),
            hello_sent: false,
        }
    }

    /// The funding output `tid_A`.
    pub fn fund_xmr(&mut self, outpoint: OutPoint, amount: u64) {
        self.funding = Some(XmrFunding {
            outpoint,
            amount,
            change: self.xmr_wallet_pub(),
        });
    }

    pub fn state(&self) -> &SwapState {
        &self.tag
    }

    pub fn strategy(&self) -> AliceStrategy {
        self.strategy
    }

    pub fn s_a(&self) -> CrossScalar {
        self.s_a
    }

    pub fn r_a(&self) -> CrossScalar {
        self.r_a
    }

    /// `R_A` in both groups with the proof binding them.
    pub fn refund_point(&self) -> (PointQ, PointP, &CrossGroupDleqProof) {
        (self.r_a_btc, self.r_a_xmr, &self.r_proof)
    }

    pub fn xmr_side(&self) -> Option<&XmrSide> {
        self.xmr.as_ref()
    }

    pub fn btc_side(&self) -> Option<&BtcSide> {
        self.btc.as_ref()
    }

    pub fn refund_encsig(&self) -> Option<&SchnorrEncSig> {
        self.refund_encsig.as_ref()
    }

    pub fn redeem_encsig(&self) -> Option<&EcdsaEncSig> {
        self.redeem_encsig.as_ref()
    }

    pub fn take_sig(&self) -> Option<&EcdsaSignature> {
        self.take_sig_b.as_ref()
    }

    pub fn pk_a(&self) -> PointQ {
        PointQ::mul_base(&self.pk_a)
    }

    pub fn btc_wallet_pub(&self) -> PointQ {
        PointQ::mul_base(&self.btc_wallet)
    }

    pub fn xmr_wallet_pub(&self) -> PointP {
        PointP::mul_base(&self.xmr_wallet)
    }

    fn abort(&mut self, reason: AbortReason) {
        self.tag = SwapState::Aborted(reason);
    }

    fn handle(&mut self, msg: &Message) -> bool {
        match msg {
            Message::XmrKeysB { s_xmr, view } => {
                self.peer_xmr.get_or_insert(PeerXmr {
                    s_b: *s_xmr,
                    view: *view,
                });
                true
            }
            Message::XmrRefundEncSig { encsig } => {
                let Some(peer) = self.peer_xmr.clone() else {
                    return false;
                };
                if self.refund_encsig.is_some() {
                    return true;
                }
                let terms = XmrTerms {
                    s_a: self.s_a_xmr,
                    s_b: peer.s_b,
                    view_pub: PointP::mul_base(&(self.view + peer.view)),
                    funding: self.funding.expect("alice funded before the swap"),
                    refund_to: self.xmr_wallet_pub(),
                };
                let Ok(side) = build_xmr_side(&self.params, &terms) else {
                    self.abort(AbortReason::BadTransaction);
                    return true;
                };
                if !schnorr_enc_verify(&peer.s_b, &self.r_a_xmr, &side.refund.sighash(), encsig) {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                self.refund_encsig = Some(*encsig);
                self.xmr = Some(side);
                true
            }
            Message::BtcKeysB {
                pk,
                funding,
                refund_to,
            } => {
                self.peer_btc.get_or_insert(PeerBtc {
                    pk_b: *pk,
                    funding: *funding,
                    refund_to: *refund_to,
                });
                true
            }
            Message::BtcTakeSig { sig } => {
                let Some(peer) = self.peer_btc.clone() else {
                    return false;
                };
                if self.btc.is_some() {
                    return true;
                }
                let terms = BtcTerms {
                    pk_a: self.pk_a(),
                    pk_b: peer.pk_b,
                    r_a: self.r_a_btc,
                    funding: peer.funding,
                    bob_to: peer.refund_to,
                    alice_to: self.btc_wallet_pub(),
                };
                let Ok(side) = build_btc_side(&self.params, &terms) else {
                    self.abort(AbortReason::BadTransaction);
                    return true;
                };
                if !ecdsa_verify(&peer.pk_b, &side.take.sighash(), sig) {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                self.take_sig_b = Some(*sig);
                self.btc = Some(side);
                true
            }
            Message::BtcRedeemEncSig { encsig } => {
                let (Some(side), Some(peer)) = (&self.btc, &self.peer_btc) else {
                    return false;
                };
                if self.redeem_encsig.is_some() {
                    return true;
                }
                if !ecdsa_enc_verify(&peer.pk_b, &self.s_a_btc, &side.redeem.sighash(), encsig) {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                self.redeem_encsig = Some(*encsig);
                true
            }
            _ => true,
        }
    }

    fn hello(&self) -> Vec<Action<Message>> {
        let funding = self.funding.expect("alice funded before the swap");
        vec![
            Action::Send {
                message: Message::XmrKeysA {
                    s_xmr: self.s_a_xmr,
                    s_btc: self.s_a_btc,
                    s_proof: self.s_proof.clone(),
                    view: self.view,
                    funding,
                    refund_to: self.xmr_wallet_pub(),
                    r_xmr: self.r_a_xmr,
                    r_btc: self.r_a_btc,
                    r_proof: self.r_proof.clone(),
                },
            },
            Action::Send {
                message: Message::BtcKeysA {
                    pk: self.pk_a(),
                    take_to: self.btc_wallet_pub(),
                },
            },
        ]
    }

    fn signed_xmr_lock(&self) -> XmrTx {
        let mut lock = self.xmr.as_ref().expect("setup done").lock.clone();
        let sig = schnorr_sign(&self.xmr_wallet, &lock.sighash()).expect("nonzero key");
        lock.push_signature(self.xmr_wallet_pub(), sig);
        lock
    }

    /// `XMR_c` with Bob's decrypted adaptor signature; publishing it leaks
    /// `r_A`.
    pub fn signed_xmr_refund(&self) -> Option<XmrTx> {
        let side = self.xmr.as_ref()?;
        let peer = self.peer_xmr.as_ref()?;
        let sig_b = schnorr_dec_sig(&self.r_a, self.refund_encsig.as_ref()?).ok()?;
        let mut tx = side.refund.clone();
        let sig_a = schnorr_sign(&self.s_a.to_p(), &tx.sighash()).ok()?;
        tx.push_signature(self.s_a_xmr, sig_a);
        tx.push_signature(peer.s_b, sig_b);
        Some(tx)
    }

    /// `BTC_r` with Bob's decrypted adaptor signature; publishing it leaks
    /// `s_A`.
    pub fn signed_btc_redeem(&self) -> Option<BtcTx> {
        let side = self.btc.as_ref()?;
        let peer = self.peer_btc.as_ref()?;
        let sig_b = ecdsa_dec_sig(&self.s_a, self.redeem_encsig.as_ref()?).ok()?;
        let mut tx = side.redeem.clone();
        let sig_a = ecdsa_sign(&self.pk_a, &tx.sighash()).ok()?;
        tx.push_signature(self.pk_a(), sig_a);
        tx.push_signature(peer.pk_b, sig_b);
        Some(tx)
    }

    pub fn signed_btc_take(&self) -> Option<BtcTx> {
        let side = self.btc.as_ref()?;
        let peer = self.peer_btc.as_ref()?;
        let mut tx = side.take.clone();
        let sig_a = ecdsa_sign(&self.pk_a, &tx.sighash()).ok()?;
        tx.push_signature(self.pk_a(), sig_a);
        tx.push_signature(peer.pk_b, self.take_sig_b?);
        Some(tx)
    }

    fn publish_xmr(&mut self, role: TxRole, tx: XmrTx, out: &mut Vec<Action<Message>>) {
        if self.published.insert(role) {
            out.push(Action::BroadcastXmr { role, tx });
        }
    }

    fn publish_btc(&mut self, role: TxRole, tx: BtcTx, out: &mut Vec<Action<Message>>) {
        if self.published.insert(role) {
            out.push(Action::BroadcastBtc { role, tx });
        }
    }

    fn refund_xmr(&mut self, out: &mut Vec<Action<Message>>) {
        if let Some(tx) = self.signed_xmr_refund() {
            self.publish_xmr(TxRole::XmrRefund, tx, out);
        }
    }

    fn advance(&mut self, view: &ChainView<'_>, out: &mut Vec<Action<Message>>) -> bool {
        let before = (self.tag.clone(), out.len());
        let (Some(xmr), Some(btc)) = (self.xmr.clone(), self.btc.clone()) else {
            return false;
        };
        let refund_confirmed = view.xmr.is_confirmed(&xmr.refund.txid());
        let btc_lock_conf = view.btc.confirmations(&btc.lock.txid());
        let refunded_xmr = self.published.contains(&TxRole::XmrRefund);

        match self.tag {
            SwapState::Setup => {
                if self.redeem_encsig.is_some() && self.take_sig_b.is_some() {
                    let lock = self.signed_xmr_lock();
                    self.publish_xmr(TxRole::XmrLock, lock, out);
                    self.tag = SwapState::XmrLocked;
                }
            }
            SwapState::XmrLocked | SwapState::BtcLocked => {
                if refund_confirmed {
                    self.tag = SwapState::XmrRefunded;
                } else if self.tag == SwapState::XmrLocked
                    && btc_lock_conf >= self.params.btc_conf_target
                {
                    self.tag = SwapState::BtcLocked;
                } else if self.tag == SwapState::XmrLocked {
                    let patience = view.xmr.confirmations(&xmr.lock.txid());
                    if btc_lock_conf == 0 && patience >= self.params.t1 as u64 {
                        self.refund_xmr(out);
                    }
                } else if refunded_xmr {
                    // Waiting for the refund to confirm.
                } else if self.strategy != AliceStrategy::NeverRedeem
                    && self.params.redeem_allowed(btc_lock_conf)
                    && view.btc.is_unspent(&btc.lock.outpoint(0))
                {
                    let redeem = self.signed_btc_redeem().expect("setup verified the encsig");
                    self.publish_btc(TxRole::BtcRedeem, redeem, out);
                    if self.strategy == AliceStrategy::Cheat {
                        self.refund_xmr(out);
                    }
                    self.tag = SwapState::BtcRedeemPublished;
                } else if !self.params.redeem_allowed(btc_lock_conf) {
                    self.refund_xmr(out);
                }
            }
            SwapState::BtcRedeemPublished => {
                let redeem_out = btc.redeem.outpoint(0);
                if view.btc.is_confirmed(&btc.take.txid()) {
                    self.tag = SwapState::BtcTaken;
                } else if let Some(spender) = view.btc.spender_of(&redeem_out) {
                    if spender != btc.take.txid() && refund_confirmed {
                        self.tag = SwapState::XmrRefunded;
                    }
                } else if view.btc.confirmations(&btc.redeem.txid()) >= self.params.t2 as u64 {
                    let take = self.signed_btc_take().expect("setup verified the take signature");
                    self.publish_btc(TxRole::BtcTake, take, out);
                }
            }
            _ => {}
        }
        (self.tag.clone(), out.len()) != before
    }
}

impl SwapParty for Alice {
    type Message = Message;

    fn role(&self) -> Role {
        Role::Alice
    }

    fn step(mut self, view: ChainView<'_>, inbox: Vec<Message>) -> (Self, Vec<Action<Message>>) {
        let mut out = Vec::new();
        if self.tag.is_terminal() {
            return (self, out);
        }
        if !self.hello_sent {
            self.hello_sent = true;
            out.extend(self.hello());
        }
        self.pending.extend(inbox);
        loop {
            let mut progressed = false;
            for msg in std::mem::take(&mut self.pending) {
                if self.tag.is_terminal() {
                    break;
                }
                let had_side = self.btc.is_some();
                if self.handle(&msg) {
                    progressed = true;
                    if let (false, Some(side)) = (had_side, &self.btc) {
                        let sig = ecdsa_sign(&self.pk_a, &side.cancel.sighash())
                            .expect("nonzero key");
                        out.push(Action::Send {
                            message: Message::BtcCancelSig { sig },
                        });
                    }
                } else {
                    self.pending.push(msg);
                }
            }
            if !progressed || self.pending.is_empty() {
                break;
            }
        }
        while !self.tag.is_terminal() && self.advance(&view, &mut out) {}
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
