use std::collections::BTreeSet;
use std::fmt;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    build_transactions, build_xmr_sweep, sign, with_witness, AbortReason, Funding, Message,
    OwnKeys, PartyKeys, PeerKeys, PresignedSet, SwapAddresses, TxSet,
};
use crate::adaptors::{ecdsa_dec_sig, ecdsa_enc_sign, ecdsa_enc_verify, ecdsa_rec_key, ecdsa_verify};
use crate::chains::OutPoint;
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};
use crate::params::SwapParams;
use crate::protocol::{Action, BtcTx, ChainView, Role, SwapParty, TxRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobStrategy {
    #[default]
    Honest,
    /// Never sends the redeem encsig.
    WithholdEncSig,
    /// Never sends the redeem encsig and never refunds after cancel.
    SilentAfterCancel,
    /// Sends the encsig just before `t1`, then answers a mempool redeem with
    /// cancel while sweeping the monero.
    FrontRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobTag {
    Started,
    KeysExchanged,
    Signed,
    BtcLocked,
    XmrLockSeen,
    EncSigSent,
    /// Redeem observed, `s_a` recovered, monero sweep pending.
    RedeemSeen,
    Redeemed,
    CancelSeen,
    Refunded,
    Punished,
    Aborted(AbortReason),
}

impl BobTag {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            BobTag::Redeemed | BobTag::Refunded | BobTag::Punished | BobTag::Aborted(_)
        )
    }
}

impl fmt::Display for BobTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BobTag::Aborted(r) => write!(f, "aborted({})", r.name()),
            other => {
                let s = serde_json::to_value(other).expect("tag serializes");
                f.write_str(s.as_str().unwrap_or("?"))
            }
        }
    }
}

/// Bob holds bitcoin and wants Alice's monero.
#[derive(Debug, Clone)]
pub struct Bob {
    params: SwapParams,
    strategy: BobStrategy,
    tag: BobTag,
    own: OwnKeys,
    peer: Option<PeerKeys>,
    wallet: ScalarQ,
    refund_key: ScalarQ,
    xmr_wallet: ScalarP,
    funding: Option<Funding>,
    alice_addresses: Option<(PointQ, PointQ)>,
    txs: Option<TxSet>,
    presigned: PresignedSet,
    xmr_lock: Option<OutPoint>,
    sweep: Option<crate::chains::Txid>,
    recovered_s_a: Option<CrossScalar>,
    published: BTreeSet<TxRole>,
    pending: Vec<Message>,
}

impl Bob {
    pub fn new<R: RngCore + CryptoRng>(
        params: SwapParams,
        strategy: BobStrategy,
        rng: &mut R,
    ) -> Self {
        let own = OwnKeys::generate(rng);
        Self {
            params,
            strategy,
            tag: BobTag::Started,
            own,
            peer: None,
            wallet: ScalarQ::random_nonzero(rng),
            refund_key: ScalarQ::random_nonzero(rng),
            xmr_wallet: ScalarP::random_nonzero(rng),
            funding: None,
            alice_addresses: None,
            txs: None,
            presigned: PresignedSet::default(),
            xmr_lock: None,
            sweep: None,
            recovered_s_a: None,
            published: BTreeSet::new(),
            pending: Vec::new(),
        }
    }

    pub fn wallet_pub(&self) -> PointQ {
        PointQ::mul_base(&self.wallet)
    }

    /// Bitcoin output Bob will lock from; change returns to his wallet.
    pub fn fund_btc(&mut self, outpoint: OutPoint, amount: u64) {
        self.funding = Some(Funding {
            outpoint,
            amount,
            change: self.wallet_pub(),
        });
    }

    pub fn state(&self) -> &BobTag {
        &self.tag
    }

    pub fn strategy(&self) -> BobStrategy {
        self.strategy
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

    pub fn recovered_s_a(&self) -> Option<CrossScalar> {
        self.recovered_s_a
    }

    pub fn refund_address(&self) -> PointQ {
        PointQ::mul_base(&self.refund_key)
    }

    pub fn xmr_wallet_pub(&self) -> PointP {
        PointP::mul_base(&self.xmr_wallet)
    }

    /// The fully signed refund, available once the signing protocol is done.
    /// Lets tests execute the refund path without further cooperation.
    pub fn signed_refund(&self) -> Option<BtcTx> {
        let txs = self.txs.as_ref()?;
        let peer = self.peer.as_ref()?;
        let sig_a = ecdsa_dec_sig(&self.own.s, self.presigned.encsig_refund.as_ref()?).ok()?;
        Some(with_witness(
            &txs.refund,
            (&peer.dlsig, sig_a),
            (&self.own.dlsig_pub, self.presigned.sig_refund_b?),
        ))
    }

    pub fn signed_cancel(&self) -> Option<BtcTx> {
        let txs = self.txs.as_ref()?;
        let peer = self.peer.as_ref()?;
        Some(with_witness(
            &txs.cancel,
            (&peer.dlsig, self.presigned.sig_cancel_a?),
            (&self.own.dlsig_pub, self.presigned.sig_cancel_b?),
        ))
    }

    pub fn signed_lock(&self) -> Option<BtcTx> {
        let mut lock = self.txs.as_ref()?.lock.clone();
        let sig = sign(&lock, &self.wallet);
        lock.push_signature(self.wallet_pub(), sig);
        Some(lock)
    }

    fn abort(&mut self, reason: AbortReason) {
        self.tag = BobTag::Aborted(reason);
    }

    fn handle(&mut self, msg: &Message, out: &mut Vec<Action<Message>>) -> bool {
        match msg {
            Message::KeyGenA(m) => {
                if self.peer.is_none() {
                    match PeerKeys::from_message(m) {
                        Ok(peer) => {
                            self.peer = Some(peer);
                            self.tag = BobTag::KeysExchanged;
                            out.push(Action::Send {
                                message: Message::KeyGenB(self.own.message()),
                            });
                            out.push(Action::Send {
                                message: Message::AddressesB {
                                    refund_b: self.refund_address(),
                                },
                            });
                        }
                        Err(reason) => self.abort(reason),
                    }
                }
                true
            }
            Message::AddressesA { redeem_a, punish_a } => {
                self.alice_addresses.get_or_insert((*redeem_a, *punish_a));
                true
            }
            Message::SigningA {
                sig_cancel_a,
                encsig_refund,
            } => {
                let (Some(txs), Some(peer)) = (&self.txs, &self.peer) else {
                    return false;
                };
                if self.presigned.sig_cancel_a.is_some() {
                    return true;
                }
                let ok = ecdsa_verify(&peer.dlsig, &txs.cancel.sighash(), sig_cancel_a)
                    && ecdsa_enc_verify(
                        &peer.dlsig,
                        &self.own.s_btc,
                        &txs.refund.sighash(),
                        encsig_refund,
                    );
                if !ok {
                    self.abort(AbortReason::BadSignature);
                    return true;
                }
                self.presigned.sig_cancel_a = Some(*sig_cancel_a);
                self.presigned.encsig_refund = Some(*encsig_refund);
                self.presigned.sig_refund_b = Some(sign(&txs.refund, &self.own.dlsig));
                self.tag = BobTag::Signed;
                true
            }
            _ => true,
        }
    }

    /// Build and pre-sign once keys and Alice's addresses are in.
    fn try_send_signing(&mut self, out: &mut Vec<Action<Message>>) {
        if self.txs.is_some() || self.tag != BobTag::KeysExchanged {
            return;
        }
        let (Some(peer), Some((redeem_a, punish_a))) = (&self.peer, self.alice_addresses) else {
            return;
        };
        let addresses = SwapAddresses {
            redeem_a,
            punish_a,
            refund_b: self.refund_address(),
        };
        if !addresses.distinct() {
            self.abort(AbortReason::BadTransaction);
            return;
        }
        let funding = self.funding.expect("bob funded before the swap");
        let txs = match build_transactions(
            &self.params,
            &peer.dlsig,
            &self.own.dlsig_pub,
            &addresses,
            &funding,
        ) {
            Ok(txs) => txs,
            Err(_) => {
                self.abort(AbortReason::BadTransaction);
                return;
            }
        };
        let sig_cancel_b = sign(&txs.cancel, &self.own.dlsig);
        let sig_punish_b = sign(&txs.punish, &self.own.dlsig);
        self.presigned.sig_cancel_b = Some(sig_cancel_b);
        self.presigned.sig_punish_b = Some(sig_punish_b);
        out.push(Action::Send {
            message: Message::SigningB {
                lock: txs.lock.clone(),
                funding,
                sig_cancel_b,
                sig_punish_b,
            },
        });
        self.txs = Some(txs);
    }

    fn broadcast_once(&mut self, role: TxRole, tx: BtcTx, out: &mut Vec<Action<Message>>) {
        if self.published.insert(role) {
            out.push(Action::BroadcastBtc { role, tx });
        }
    }

    fn send_encsig(&mut self, out: &mut Vec<Action<Message>>) {
        let txs = self.txs.as_ref().expect("signed");
        let peer = self.peer.as_ref().expect("signed");
        let encsig = ecdsa_enc_sign(&self.own.dlsig, &peer.s_btc, &txs.redeem.sighash())
            .expect("nonzero key and encryption key");
        self.presigned.encsig_redeem = Some(encsig);
        out.push(Action::Send {
            message: Message::EncSigRedeem { encsig },
        });
        self.tag = BobTag::EncSigSent;
    }

    /// Look for the redeem (mempool or chain); on first sight recover `s_a`
    /// and sweep the monero.
    fn watch_redeem(&mut self, view: &ChainView<'_>, txs: &TxSet, out: &mut Vec<Action<Message>>) -> bool {
        if self.recovered_s_a.is_some() {
            return true;
        }
        let (Some(redeem), Some(encsig)) =
            (view.btc.find_by_id(&txs.redeem.txid()), self.presigned.encsig_redeem)
        else {
            return false;
        };
        let peer = self.peer.as_ref().expect("signed");
        let Some(s_a) = redeem
            .extract_witness(&self.own.dlsig_pub)
            .ok()
            .and_then(|sig| ecdsa_rec_key(&sig, &encsig, &peer.s_btc).ok())
        else {
            return false;
        };
        self.recovered_s_a = Some(s_a);
        out.push(Action::RecoveredSecret {
            name: "s_a".into(),
            value: s_a,
        });
        if let Some(lock) = self.xmr_lock {
            let spend_key = s_a.to_p() + self.own.s.to_p();
            let tx = build_xmr_sweep(&self.params, lock, &spend_key, self.xmr_wallet_pub());
            self.sweep = Some(tx.txid());
            self.published.insert(TxRole::XmrSweep);
            out.push(Action::BroadcastXmr {
                role: TxRole::XmrSweep,
                tx,
            });
        }
        true
    }

    fn advance(&mut self, view: &ChainView<'_>, out: &mut Vec<Action<Message>>) -> bool {
        let before = (self.tag.clone(), out.len());
        let Some(txs) = self.txs.clone() else {
            return false;
        };
        let btc = view.btc;
        let lock_conf = btc.confirmations(&txs.lock.txid());
        let t1 = self.params.t1 as u64;
        let cancel_confirmed = btc.is_confirmed(&txs.cancel.txid());

        match self.tag.clone() {
            BobTag::Signed => {
                let lock = self.signed_lock().expect("signed");
                self.broadcast_once(TxRole::BtcLock, lock, out);
                self.tag = BobTag::BtcLocked;
            }
            BobTag::BtcLocked | BobTag::XmrLockSeen | BobTag::EncSigSent => {
                let redeem_seen = self.watch_redeem(view, &txs, out);
                if cancel_confirmed {
                    self.tag = BobTag::CancelSeen;
                } else if redeem_seen {
                    let redeem_pending = !btc.is_confirmed(&txs.redeem.txid());
                    if self.strategy == BobStrategy::FrontRun && redeem_pending && lock_conf >= t1 {
                        let cancel = self.signed_cancel().expect("signed");
                        self.broadcast_once(TxRole::BtcCancel, cancel, out);
                    } else if self.strategy != BobStrategy::FrontRun || !redeem_pending {
                        self.tag = BobTag::RedeemSeen;
                    }
                } else {
                    if self.tag == BobTag::BtcLocked {
                        self.scan_xmr_lock(view);
                    }
                    if self.tag == BobTag::XmrLockSeen && self.encsig_due(lock_conf) {
                        self.send_encsig(out);
                    } else if lock_conf >= t1 {
                        let cancel = self.signed_cancel().expect("signed");
                        self.broadcast_once(TxRole::BtcCancel, cancel, out);
                    }
                }
            }
            BobTag::RedeemSeen => {
                if cancel_confirmed {
                    self.tag = BobTag::CancelSeen;
                } else if let Some(sweep) = self.sweep {
                    if view.xmr.is_confirmed(&sweep) {
                        self.tag = BobTag::Redeemed;
                    }
                }
            }
            BobTag::CancelSeen => {
                if btc.is_confirmed(&txs.refund.txid()) {
                    self.tag = BobTag::Refunded;
                } else if btc.is_confirmed(&txs.punish.txid()) {
                    self.tag = BobTag::Punished;
                } else if self.strategy != BobStrategy::SilentAfterCancel {
                    let refund = self.signed_refund().expect("signed");
                    self.broadcast_once(TxRole::BtcRefund, refund, out);
                }
            }
            _ => {}
        }
        (self.tag.clone(), out.len()) != before
    }

    fn encsig_due(&self, lock_conf: u64) -> bool {
        match self.strategy {
            BobStrategy::Honest => true,
            BobStrategy::WithholdEncSig | BobStrategy::SilentAfterCancel => false,
            BobStrategy::FrontRun => lock_conf + 1 >= self.params.t1 as u64,
        }
    }

    /// Find Alice's monero lock with the shared view key.
    fn scan_xmr_lock(&mut self, view: &ChainView<'_>) {
        let Some(keys) = self.party_keys() else { return };
        let spend = keys.shared_spend();
        let found = view
            .xmr
            .scan_with_view_key(&keys.shared_view())
            .into_iter()
            .find(|f| {
                !f.spent
                    && f.output.amount == self.params.amt_xmr
                    && f.output.clauses.len() == 1
                    && f.output.clauses[0].keys == [spend]
            });
        if let Some(f) = found {
            if view.xmr.confirmations(&f.outpoint.txid) >= self.params.xmr_conf_target {
                self.xmr_lock = Some(f.outpoint);
                self.tag = BobTag::XmrLockSeen;
            }
        }
    }
}

impl SwapParty for Bob {
    type Message = Message;

    fn role(&self) -> Role {
        Role::Bob
    }

    fn step(mut self, view: ChainView<'_>, inbox: Vec<Message>) -> (Self, Vec<Action<Message>>) {
        let mut out = Vec::new();
        if self.tag.is_terminal() {
            return (self, out);
        }
        self.pending.extend(inbox);
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
                self.try_send_signing(&mut out);
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
        vec![self.wallet_pub(), self.refund_address()]
    }

    fn xmr_wallet(&self) -> Vec<PointP> {
        vec![self.xmr_wallet_pub()]
    }
}
