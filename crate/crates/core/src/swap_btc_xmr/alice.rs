use std::collections::BTreeSet;
use std::fmt;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    build_transactions, build_xmr_lock, build_xmr_sweep, sign, with_witness, AbortReason,
    Message, OwnKeys, PartyKeys, PeerKeys, PresignedSet, SwapAddresses, TxSet, XmrFunding,
};
use crate::adaptors::{
    ecdsa_dec_sig, ecdsa_enc_sign, ecdsa_enc_verify, ecdsa_rec_key, ecdsa_verify, schnorr_sign,
};
use crate::chains::OutPoint;
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};
use crate::params::SwapParams;
use crate::protocol::{Action, ChainView, Role, SwapParty, TxRole, XmrTx};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceTag {
    Started,
    KeysExchanged,
    Signed,
    BtcLockSeen,
    XmrLocked,
    EncSigReceived,
    RedeemPublished,
    Redeemed,
    CancelSeen,
    Refunded,
    Punished,
    Aborted(AbortReason),
}

impl AliceTag {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            AliceTag::Redeemed | AliceTag::Refunded | AliceTag::Punished | AliceTag::Aborted(_)
        )
    }
}

impl fmt::Display for AliceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AliceTag::Aborted(r) => write!(f, "aborted({})", r.name()),
            other => {
                let s = serde_json::to_value(other).expect("tag serializes");
                f.write_str(s.as_str().unwrap_or("?"))
            }
        }
    }
}

/// Alice holds monero and wants Bob's bitcoin.
#[derive(Debug, Clone)]
pub struct Alice {
    params: SwapParams,
    tag: AliceTag,
    own: OwnKeys,
    peer: Option<PeerKeys>,
    redeem_key: ScalarQ,
    punish_key: ScalarQ,
    xmr_wallet: ScalarP,
    xmr_funding: Option<XmrFunding>,
    refund_b: Option<PointQ>,
    txs: Option<TxSet>,
    presigned: PresignedSet,
    xmr_lock: Option<XmrTx>,
    sweep: Option<XmrTx>,
    recovered_s_b: Option<CrossScalar>,
    published: BTreeSet<TxRole>,
    pending: Vec<Message>,
    hello_sent: bool,
}

impl Alice {
    pub fn new<R: RngCore + CryptoRng>(params: SwapParams, rng: &mut R) -> Self {
        let own = OwnKeys::generate(rng);
        Self {
            params,
            tag: AliceTag::Started,
            own,
            peer: None,
            redeem_key: ScalarQ::random_nonzero(rng),
            punish_key: ScalarQ::random_nonzero(rng),
            xmr_wallet: ScalarP::random_nonzero(rng),
            xmr_funding: None,
            refund_b: None,
            txs: None,
            presigned: PresignedSet::default(),
            xmr_lock: None,
            sweep: None,
            recovered_s_b: None,
            published: BTreeSet::new(),
            pending: Vec::new(),
            hello_sent: false,
        }
    }

    /// Monero output Alice will lock from; change returns to her wallet.
    pub fn fund_xmr(&mut self, outpoint: OutPoint, amount: u64) {
        self.xmr_funding = Some(XmrFunding {
            outpoint,
            amount,
            change: self.xmr_wallet_pub(),
        });
    }

    pub fn xmr_wallet_pub(&self) -> PointP {
        PointP::mul_base(&self.xmr_wallet)
    }

    pub fn state(&self) -> &AliceTag {
        &self.tag
    }

    pub fn keys(&self) -> &OwnKeys {
        &self.own
    }

    pub fn party_keys(&self) -> Option<PartyKeys> {
        self.peer.clone().map(|peer| PartyKeys {
            own: self.own.clone(),
            peer,
        })
    }

    pub fn transactions(&self) -> Option<&TxSet> {
        self.txs.as_ref()
    }

    pub fn presigned(&self) -> &PresignedSet {
        &self.presigned
    }

    pub fn recovered_s_b(&self) -> Option<CrossScalar> {
        self.recovered_s_b
    }

    pub fn xmr_lock_outpoint(&self) -> Option<OutPoint> {
        self.xmr_lock.as_ref().map(|t| t.outpoint(0))
    }

    pub fn addresses_pub(&self) -> (PointQ, PointQ) {
        (
            PointQ::mul_base(&self.redeem_key),
            PointQ::mul_base(&self.punish_key),
        )
    }

    fn a(&self) -> PointQ {
        self.own.dlsig_pub
    }

    fn note_keys_exchanged(&mut self) {
        if self.tag == AliceTag::Started && self.peer.is_some() && self.refund_b.is_some() {
            self.tag = AliceTag::KeysExchanged;
        }
    }

    fn abort(&mut self, reason: AbortReason) {
        self.tag = AliceTag::Aborted(reason);
    }

    /// Returns false when the message must wait for earlier ones.
    fn handle(&mut self, msg: &Message, out: &mut Vec<Action<Message>>) -> bool {
        match msg {
            Message::KeyGenB(m) => {
                if self.peer.is_none() {
                    match PeerKeys::from_message(m) {
                        Ok(peer) => self.peer = Some(peer),
                        Err(reason) => self.abort(reason),
                    }
                }
                self.note_keys_exchanged();
                true
            }
            Message::AddressesB { refund_b } => {
                self.refund_b.get_or_insert(*refund_b);
                self.note_keys_exchanged();
                true
            }
            Message::SigningB {
                lock,
                funding,
                sig_cancel_b,
                sig_punish_b,
            } => {
                let (Some(peer), Some(refund_b)) = (self.peer.clone(), self.refund_b) else {
                    return false;
                };
                if self.txs.is_some() {
                    return true;
                }
                let (redeem_a, punish_a) = self.addresses_pub();
                let addresses = SwapAddresses {
                    redeem_a,
                    punish_a,
                    refund_b,
                };
                if !addresses.distinct() {
                    self.abort(AbortReason::BadTransaction);
                    return true;
                }
                let txs = match build_transactions(
                    &self.params,
                    &self.a(),
                    &peer.dlsig,
                    &addresses,
                    funding,
                ) {
                    Ok(txs) if txs.lock.txid() == lock.txid() => txs,
                    _ => {
                        self.abort(AbortReason::BadTransaction);
                        return true;
                    }
                };
                if !ecdsa_verify(&peer.dlsig, &txs.cancel.sighash(), sig_cancel_b)
                    || !ecdsa_verify(&peer.dlsig, &txs.punish.sighash(), sig_punish_b)
                {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                let sig_cancel_a = sign(&txs.cancel, &self.own.dlsig);
                let encsig_refund =
                    ecdsa_enc_sign(&self.own.dlsig, &peer.s_btc, &txs.refund.sighash())
                        .expect("nonzero key and encryption key");
                self.presigned.sig_cancel_a = Some(sig_cancel_a);
                self.presigned.sig_cancel_b = Some(*sig_cancel_b);
                self.presigned.sig_punish_a = Some(sign(&txs.punish, &self.own.dlsig));
                self.presigned.sig_punish_b = Some(*sig_punish_b);
                self.presigned.encsig_refund = Some(encsig_refund);
                self.txs = Some(txs);
                out.push(Action::Send {
                    message: Message::SigningA {
                        sig_cancel_a,
                        encsig_refund,
                    },
                });
                self.tag = AliceTag::Signed;
                true
            }
            Message::EncSigRedeem { encsig } => {
                let (Some(txs), Some(peer)) = (&self.txs, &self.peer) else {
                    return false;
                };
                if self.presigned.encsig_redeem.is_none()
                    && ecdsa_enc_verify(&peer.dlsig, &self.own.s_btc, &txs.redeem.sighash(), encsig)
                {
                    self.presigned.encsig_redeem = Some(*encsig);
                }
                true
            }
            // Messages meant for Bob or duplicates of our own.
            _ => true,
        }
    }

    fn broadcast_btc_once(
        &mut self,
        role: TxRole,
        tx: crate::protocol::BtcTx,
        out: &mut Vec<Action<Message>>,
    ) {
        if self.published.insert(role) {
            out.push(Action::BroadcastBtc { role, tx });
        }
    }

    /// One pass of chain-driven transitions. Returns true if anything changed.
    fn advance(&mut self, view: &ChainView<'_>, out: &mut Vec<Action<Message>>) -> bool {
        let before = (self.tag.clone(), out.len());
        let Some(txs) = self.txs.clone() else {
            return false;
        };
        let Some(peer) = self.peer.clone() else {
            return false;
        };
        let btc = view.btc;
        let lock_conf = btc.confirmations(&txs.lock.txid());
        let cancel_confirmed = btc.is_confirmed(&txs.cancel.txid());

        match self.tag.clone() {
            AliceTag::Signed => {
                if lock_conf >= self.params.btc_conf_target {
                    self.tag = AliceTag::BtcLockSeen;
                }
            }
            AliceTag::BtcLockSeen => {
                if cancel_confirmed {
                    self.abort(AbortReason::LockTooLate);
                } else if self.params.redeem_allowed(lock_conf) {
                    let keys = PartyKeys {
                        own: self.own.clone(),
                        peer: peer.clone(),
                    };
                    let funding = self.xmr_funding.expect("alice funded before the swap");
                    match build_xmr_lock(&self.params, &keys, &funding) {
                        Ok(mut tx) => {
                            let sig = schnorr_sign(&self.xmr_wallet, &tx.sighash())
                                .expect("wallet key is nonzero");
                            tx.push_signature(self.xmr_wallet_pub(), sig);
                            self.xmr_lock = Some(tx.clone());
                            self.published.insert(TxRole::XmrLock);
                            out.push(Action::BroadcastXmr {
                                role: TxRole::XmrLock,
                                tx,
                            });
                            self.tag = AliceTag::XmrLocked;
                        }
                        Err(_) => self.abort(AbortReason::BadTransaction),
                    }
                } else if lock_conf >= self.params.t1 as u64 {
                    self.publish_cancel(&txs, out);
                }
            }
            AliceTag::XmrLocked | AliceTag::EncSigReceived | AliceTag::RedeemPublished => {
                if self.tag == AliceTag::XmrLocked && self.presigned.encsig_redeem.is_some() {
                    self.tag = AliceTag::EncSigReceived;
                } else if btc.is_confirmed(&txs.redeem.txid()) {
                    self.tag = AliceTag::Redeemed;
                } else if cancel_confirmed {
                    self.tag = AliceTag::CancelSeen;
                } else if self.tag == AliceTag::EncSigReceived
                    && self.params.redeem_allowed(lock_conf)
                    && btc.is_unspent(&txs.lock.outpoint(0))
                {
                    let encsig = self.presigned.encsig_redeem.expect("checked above");
                    let sig_b = ecdsa_dec_sig(&self.own.s, &encsig)
                        .expect("encsig verified under our own key");
                    let sig_a = sign(&txs.redeem, &self.own.dlsig);
                    let redeem =
                        with_witness(&txs.redeem, (&self.a(), sig_a), (&peer.dlsig, sig_b));
                    self.broadcast_btc_once(TxRole::BtcRedeem, redeem, out);
                    self.tag = AliceTag::RedeemPublished;
                } else if self.tag != AliceTag::RedeemPublished
                    && lock_conf >= self.params.t1 as u64
                {
                    self.publish_cancel(&txs, out);
                }
            }
            AliceTag::CancelSeen => self.after_cancel(view, &txs, &peer, out),
            _ => {}
        }
        (self.tag.clone(), out.len()) != before
    }

    fn publish_cancel(&mut self, txs: &TxSet, out: &mut Vec<Action<Message>>) {
        let peer = self.peer.as_ref().expect("keys exchanged");
        let cancel = with_witness(
            &txs.cancel,
            (&self.own.dlsig_pub, self.presigned.sig_cancel_a.expect("signed")),
            (&peer.dlsig, self.presigned.sig_cancel_b.expect("signed")),
        );
        self.broadcast_btc_once(TxRole::BtcCancel, cancel, out);
    }

    fn after_cancel(
        &mut self,
        view: &ChainView<'_>,
        txs: &TxSet,
        peer: &PeerKeys,
        out: &mut Vec<Action<Message>>,
    ) {
        let btc = view.btc;
        if btc.is_confirmed(&txs.punish.txid()) {
            self.tag = AliceTag::Punished;
            return;
        }
        if let Some(refund) = btc.find_by_id(&txs.refund.txid()).cloned() {
            if self.recovered_s_b.is_none() {
                let encsig = self.presigned.encsig_refund.expect("signed");
                let recovered = refund
                    .extract_witness(&self.own.dlsig_pub)
                    .ok()
                    .and_then(|sig| ecdsa_rec_key(&sig, &encsig, &peer.s_btc).ok());
                if let Some(s_b) = recovered {
                    self.recovered_s_b = Some(s_b);
                    out.push(Action::RecoveredSecret {
                        name: "s_b".into(),
                        value: s_b,
                    });
                }
            }
            let Some(lock) = self.xmr_lock.as_ref() else {
                // Monero never moved; nothing to reclaim.
                if btc.is_confirmed(&txs.refund.txid()) {
                    self.tag = AliceTag::Refunded;
                }
                return;
            };
            let lock_out = lock.outpoint(0);
            if let Some(spender) = view.xmr.spender_of(&lock_out) {
                if self.sweep.as_ref().map(|t| t.txid()) == Some(spender) {
                    self.tag = AliceTag::Refunded;
                } else {
                    self.abort(AbortReason::XmrLockSpent);
                }
                return;
            }
            if let (Some(s_b), None) = (self.recovered_s_b, &self.sweep) {
                let spend_key = self.own.s.to_p() + s_b.to_p();
                let tx = build_xmr_sweep(&self.params, lock_out, &spend_key, self.xmr_wallet_pub());
                self.sweep = Some(tx.clone());
                self.published.insert(TxRole::XmrSweep);
                out.push(Action::BroadcastXmr {
                    role: TxRole::XmrSweep,
                    tx,
                });
            }
            return;
        }
        if btc.confirmations(&txs.cancel.txid()) >= self.params.t2 as u64 {
            let punish = with_witness(
                &txs.punish,
                (&self.own.dlsig_pub, self.presigned.sig_punish_a.expect("signed")),
                (&peer.dlsig, self.presigned.sig_punish_b.expect("signed")),
            );
            self.broadcast_btc_once(TxRole::BtcPunish, punish, out);
        }
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
            let (redeem_a, punish_a) = self.addresses_pub();
            out.push(Action::Send {
                message: Message::KeyGenA(self.own.message()),
            });
            out.push(Action::Send {
                message: Message::AddressesA { redeem_a, punish_a },
            });
        }
        self.pending.extend(inbox);
        // Re-scan until no buffered message can make progress.
        loop {
            let mut progressed = false;
            let pending = std::mem::take(&mut self.pending);
            for msg in pending {
                if self.tag.is_terminal() {
                    break;
                }
                if self.handle(&msg, &mut out) {
                    progressed = true;
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
        let (r, p) = self.addresses_pub();
        vec![r, p]
    }

    fn xmr_wallet(&self) -> Vec<PointP> {
        vec![self.xmr_wallet_pub()]
    }
}
