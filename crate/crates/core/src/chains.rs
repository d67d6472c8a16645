//! Deterministic in-memory ledgers.
//!
//! One generic UTXO ledger, instantiated twice: [`BtcChain`] checks ECDSA
//! signatures over secp256k1 keys, [`XmrChain`] checks Schnorr signatures over
//! ed25519 keys and tags outputs with a public view key so they can be found
//! with [`Ledger::scan_with_view_key`].
//!
//! A transaction spends exactly one output through one of that output's
//! spend clauses. Relative timelocks are carried by the transaction and
//! measured in blocks since the parent's confirmation; a clause may demand a
//! minimum lock, which the transaction must declare. Transaction ids and
//! sighashes are computed over the canonical encoding without witnesses, so
//! pre-signed chains of transactions can be built before anything is signed.
//!
//! # Canonical encoding
//!
//! All integers little-endian.
//!
//! ```text
//! "XSWAPTX1" ‖ chain tag (u8: 0 = btc, 1 = xmr)
//! input:   0x00 ‖ nonce (u64)                           -- faucet
//!        | 0x01 ‖ parent txid (32) ‖ vout (u32) ‖ clause (u32)
//! rel_timelock (u32) ‖ fee (u64) ‖ output count (u32)
//! output:  amount (u64) ‖ view key flag (u8) [‖ view key (32)]
//!          ‖ clause count (u32) ‖ clause*
//! clause:  rel_timelock (u32) ‖ key count (u32) ‖ key*
//! ```
//!
//! `txid = SHA-256(encoding)`, `sighash = SHA-256("xswap/sighash/v1" ‖ txid)`.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adaptors::{
    ecdsa_verify, schnorr_verify, EcdsaSignature, SchnorrSignature,
};
use crate::groups::{PointP, PointQ, ScalarP};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Txid(pub [u8; 32]);

impl Txid {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Txid({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Txid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Txid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(text).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("txid must be 32 bytes"))?;
        Ok(Txid(arr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutPoint {
    pub txid: Txid,
    pub vout: u32,
}

/// Signature scheme and key type of one ledger.
pub trait ChainKind: Clone + fmt::Debug + Default + 'static {
    type PublicKey: Copy + Eq + Ord + fmt::Debug + Serialize + DeserializeOwned;
    type Signature: Copy + Eq + fmt::Debug + Serialize + DeserializeOwned;
    const TAG: u8;
    const NAME: &'static str;
    fn encode_key(pk: &Self::PublicKey) -> Vec<u8>;
    fn verify(pk: &Self::PublicKey, msg: &[u8], sig: &Self::Signature) -> bool;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bitcoin;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Monero;

impl ChainKind for Bitcoin {
    type PublicKey = PointQ;
    type Signature = EcdsaSignature;
    const TAG: u8 = 0;
    const NAME: &'static str = "btc";
    fn encode_key(pk: &PointQ) -> Vec<u8> {
        pk.encode().to_vec()
    }
    fn verify(pk: &PointQ, msg: &[u8], sig: &EcdsaSignature) -> bool {
        ecdsa_verify(pk, msg, sig)
    }
}

impl ChainKind for Monero {
    type PublicKey = PointP;
    type Signature = SchnorrSignature;
    const TAG: u8 = 1;
    const NAME: &'static str = "xmr";
    fn encode_key(pk: &PointP) -> Vec<u8> {
        pk.encode().to_vec()
    }
    fn verify(pk: &PointP, msg: &[u8], sig: &SchnorrSignature) -> bool {
        schnorr_verify(pk, msg, sig)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpendClause<C: ChainKind> {
    pub keys: Vec<C::PublicKey>,
    pub rel_timelock: u32,
}

impl<C: ChainKind> SpendClause<C> {
    pub fn keys(keys: Vec<C::PublicKey>) -> Self {
        Self {
            keys,
            rel_timelock: 0,
        }
    }

    pub fn single(key: C::PublicKey) -> Self {
        Self::keys(vec![key])
    }

    pub fn with_timelock(mut self, blocks: u32) -> Self {
        self.rel_timelock = blocks;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimOutput<C: ChainKind> {
    pub amount: u64,
    pub clauses: Vec<SpendClause<C>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_key: Option<PointP>,
}

impl<C: ChainKind> SimOutput<C> {
    pub fn to_key(amount: u64, key: C::PublicKey) -> Self {
        Self {
            amount,
            clauses: vec![SpendClause::single(key)],
            view_key: None,
        }
    }

    pub fn with_clauses(amount: u64, clauses: Vec<SpendClause<C>>) -> Self {
        Self {
            amount,
            clauses,
            view_key: None,
        }
    }

    pub fn with_view_key(mut self, view_key: PointP) -> Self {
        self.view_key = Some(view_key);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxInput {
    Faucet { nonce: u64 },
    Spend { prev: OutPoint, clause: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WitnessItem<C: ChainKind> {
    pub key: C::PublicKey,
    pub signature: C::Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimTransaction<C: ChainKind> {
    pub input: TxInput,
    pub rel_timelock: u32,
    pub fee: u64,
    pub outputs: Vec<SimOutput<C>>,
    pub witness: Vec<WitnessItem<C>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("no signature for the requested key")]
    KeyNotPresent,
}

impl<C: ChainKind> SimTransaction<C> {
    pub fn spend(prev: OutPoint, clause: u32, outputs: Vec<SimOutput<C>>, fee: u64) -> Self {
        Self {
            input: TxInput::Spend { prev, clause },
            rel_timelock: 0,
            fee,
            outputs,
            witness: Vec::new(),
        }
    }

    pub fn with_timelock(mut self, blocks: u32) -> Self {
        self.rel_timelock = blocks;
        self
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(128);
        out.extend_from_slice(b"XSWAPTX1");
        out.push(C::TAG);
        match self.input {
            TxInput::Faucet { nonce } => {
                out.push(0);
                out.extend_from_slice(&nonce.to_le_bytes());
            }
            TxInput::Spend { prev, clause } => {
                out.push(1);
                out.extend_from_slice(&prev.txid.0);
                out.extend_from_slice(&prev.vout.to_le_bytes());
                out.extend_from_slice(&clause.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.rel_timelock.to_le_bytes());
        out.extend_from_slice(&self.fee.to_le_bytes());
        out.extend_from_slice(&(self.outputs.len() as u32).to_le_bytes());
        for o in &self.outputs {
            out.extend_from_slice(&o.amount.to_le_bytes());
            match &o.view_key {
                Some(v) => {
                    out.push(1);
                    out.extend_from_slice(&v.encode());
                }
                None => out.push(0),
            }
            out.extend_from_slice(&(o.clauses.len() as u32).to_le_bytes());
            for c in &o.clauses {
                out.extend_from_slice(&c.rel_timelock.to_le_bytes());
                out.extend_from_slice(&(c.keys.len() as u32).to_le_bytes());
                for k in &c.keys {
                    out.extend_from_slice(&C::encode_key(k));
                }
            }
        }
        out
    }

    pub fn txid(&self) -> Txid {
        Txid(Sha256::digest(self.encode()).into())
    }

    /// The message every witness signature signs.
    pub fn sighash(&self) -> [u8; 32] {
        Sha256::new()
            .chain_update(b"xswap/sighash/v1")
            .chain_update(self.txid().0)
            .finalize()
            .into()
    }

    pub fn output_value(&self) -> u64 {
        self.outputs.iter().map(|o| o.amount).sum()
    }

    pub fn prev(&self) -> Option<OutPoint> {
        match self.input {
            TxInput::Spend { prev, .. } => Some(prev),
            TxInput::Faucet { .. } => None,
        }
    }

    pub fn outpoint(&self, vout: u32) -> OutPoint {
        OutPoint {
            txid: self.txid(),
            vout,
        }
    }

    pub fn push_signature(&mut self, key: C::PublicKey, signature: C::Signature) {
        self.witness.push(WitnessItem { key, signature });
    }

    /// The signature bound to `key` in this transaction's witness.
    pub fn extract_witness(&self, key: &C::PublicKey) -> Result<C::Signature, WitnessError> {
        self.witness
            .iter()
            .find(|w| w.key == *key)
            .map(|w| w.signature)
            .ok_or(WitnessError::KeyNotPresent)
    }
}

pub fn extract_witness<C: ChainKind>(
    tx: &SimTransaction<C>,
    key: &C::PublicKey,
) -> Result<C::Signature, WitnessError> {
    tx.extract_witness(key)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    #[error("bad signature")]
    BadSignature,
    #[error("timelock unreachable")]
    TimelockUnreachable,
    #[error("double spend")]
    DoubleSpend,
    #[error("value mismatch")]
    ValueMismatch,
    #[error("missing input")]
    MissingInput,
    #[error("malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accepted {
    New,
    AlreadyKnown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConfirmedTx<C: ChainKind> {
    pub tx: SimTransaction<C>,
    pub height: u64,
}

/// A scanned output found with a view key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoundOutput<C: ChainKind> {
    pub outpoint: OutPoint,
    pub output: SimOutput<C>,
    pub spent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantViolation {
    #[error("{chain}: output {outpoint:?} spent by two confirmed transactions")]
    DoubleSpend { chain: &'static str, outpoint: OutPoint },
    #[error("{chain}: unspent {unspent} + fees {fees} != minted {minted}")]
    Conservation {
        chain: &'static str,
        unspent: u64,
        fees: u64,
        minted: u64,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ledger<C: ChainKind> {
    confirmed: BTreeMap<Txid, ConfirmedTx<C>>,
    #[serde(with = "pairs")]
    spent: BTreeMap<OutPoint, Txid>,
    mempool: Vec<SimTransaction<C>>,
    tip_height: u64,
    faucet_nonce: u64,
    #[serde(skip)]
    _kind: PhantomData<C>,
}

pub type BtcChain = Ledger<Bitcoin>;
pub type XmrChain = Ledger<Monero>;

impl<C: ChainKind> Ledger<C> {
    pub fn new() -> Self {
        Self {
            confirmed: BTreeMap::new(),
            spent: BTreeMap::new(),
            mempool: Vec::new(),
            tip_height: 0,
            faucet_nonce: 0,
            _kind: PhantomData,
        }
    }

    pub fn tip_height(&self) -> u64 {
        self.tip_height
    }

    pub fn mempool(&self) -> &[SimTransaction<C>] {
        &self.mempool
    }

    /// Mint a confirmed output at the current tip.
    pub fn faucet(&mut self, output: SimOutput<C>) -> OutPoint {
        let tx = SimTransaction {
            input: TxInput::Faucet {
                nonce: self.faucet_nonce,
            },
            rel_timelock: 0,
            fee: 0,
            outputs: vec![output],
            witness: Vec::new(),
        };
        self.faucet_nonce += 1;
        let txid = tx.txid();
        self.confirmed.insert(
            txid,
            ConfirmedTx {
                tx,
                height: self.tip_height,
            },
        );
        OutPoint { txid, vout: 0 }
    }

    pub fn is_confirmed(&self, txid: &Txid) -> bool {
        self.confirmed.contains_key(txid)
    }

    pub fn in_mempool(&self, txid: &Txid) -> bool {
        self.mempool.iter().any(|t| t.txid() == *txid)
    }

    /// Confirmed or mempool transaction by id.
    pub fn find_by_id(&self, txid: &Txid) -> Option<&SimTransaction<C>> {
        self.confirmed
            .get(txid)
            .map(|c| &c.tx)
            .or_else(|| self.mempool.iter().find(|t| t.txid() == *txid))
    }

    /// 0 when unknown or only in the mempool, else `tip - height + 1`.
    pub fn confirmations(&self, txid: &Txid) -> u64 {
        self.confirmed
            .get(txid)
            .map_or(0, |c| self.tip_height - c.height + 1)
    }

    pub fn confirmed_height(&self, txid: &Txid) -> Option<u64> {
        self.confirmed.get(txid).map(|c| c.height)
    }

    pub fn spender_of(&self, outpoint: &OutPoint) -> Option<Txid> {
        self.spent.get(outpoint).copied()
    }

    fn output(&self, outpoint: &OutPoint) -> Option<(&SimOutput<C>, Option<u64>)> {
        if let Some(c) = self.confirmed.get(&outpoint.txid) {
            return c
                .tx
                .outputs
                .get(outpoint.vout as usize)
                .map(|o| (o, Some(c.height)));
        }
        self.mempool
            .iter()
            .find(|t| t.txid() == outpoint.txid)
            .and_then(|t| t.outputs.get(outpoint.vout as usize))
            .map(|o| (o, None))
    }

    /// Stateless validity of `tx` against its parent output.
    fn check(&self, tx: &SimTransaction<C>) -> Result<(), RejectReason> {
        let TxInput::Spend { prev, clause } = tx.input else {
            return Err(RejectReason::Malformed("faucet transactions cannot be broadcast".into()));
        };
        if tx.outputs.is_empty() {
            return Err(RejectReason::Malformed("no outputs".into()));
        }
        for o in &tx.outputs {
            if o.amount == 0 {
                return Err(RejectReason::Malformed("zero-value output".into()));
            }
            if o.clauses.is_empty() || o.clauses.iter().any(|c| c.keys.is_empty()) {
                return Err(RejectReason::Malformed("output without spend keys".into()));
            }
        }
        let (parent, _) = self.output(&prev).ok_or(RejectReason::MissingInput)?;
        if self.spent.contains_key(&prev) {
            return Err(RejectReason::DoubleSpend);
        }
        let spend_clause = parent
            .clauses
            .get(clause as usize)
            .ok_or_else(|| RejectReason::Malformed("clause index out of range".into()))?;
        if tx.output_value().checked_add(tx.fee) != Some(parent.amount) {
            return Err(RejectReason::ValueMismatch);
        }
        if tx.rel_timelock < spend_clause.rel_timelock {
            return Err(RejectReason::TimelockUnreachable);
        }
        let sighash = tx.sighash();
        let sigs_ok = tx.witness.len() == spend_clause.keys.len()
            && tx
                .witness
                .iter()
                .zip(&spend_clause.keys)
                .all(|(w, k)| w.key == *k && C::verify(k, &sighash, &w.signature));
        if !sigs_ok {
            return Err(RejectReason::BadSignature);
        }
        Ok(())
    }

    /// Validate and queue a transaction. Conflicting mempool spends coexist
    /// until one is mined.
    pub fn broadcast(&mut self, tx: SimTransaction<C>) -> Result<Accepted, RejectReason> {
        let txid = tx.txid();
        if self.find_by_id(&txid).is_some() {
            return Ok(Accepted::AlreadyKnown);
        }
        self.check(&tx)?;
        self.mempool.push(tx);
        Ok(Accepted::New)
    }

    /// Mine one block. Transactions listed in `priority` are considered first,
    /// then the rest of the mempool in broadcast order. Evicts whatever the
    /// block made invalid.
    pub fn mine_block(&mut self, priority: &[Txid]) -> Vec<Txid> {
        let height = self.tip_height + 1;
        let mut order: Vec<usize> = Vec::with_capacity(self.mempool.len());
        let ids: Vec<Txid> = self.mempool.iter().map(|t| t.txid()).collect();
        for p in priority {
            if let Some(i) = ids.iter().position(|id| id == p) {
                if !order.contains(&i) {
                    order.push(i);
                }
            }
        }
        for i in 0..ids.len() {
            if !order.contains(&i) {
                order.push(i);
            }
        }

        let mut included: Vec<usize> = Vec::new();
        let mut block_heights: BTreeMap<Txid, u64> = BTreeMap::new();
        loop {
            let mut progressed = false;
            for &i in &order {
                if included.contains(&i) {
                    continue;
                }
                let tx = &self.mempool[i];
                let Some(prev) = tx.prev() else { continue };
                if self.spent.contains_key(&prev) {
                    continue;
                }
                let parent_height = self
                    .confirmed
                    .get(&prev.txid)
                    .map(|c| c.height)
                    .or_else(|| block_heights.get(&prev.txid).copied());
                let Some(parent_height) = parent_height else {
                    continue;
                };
                if height - parent_height < tx.rel_timelock as u64 {
                    continue;
                }
                self.spent.insert(prev, ids[i]);
                block_heights.insert(ids[i], height);
                included.push(i);
                progressed = true;
            }
            if !progressed {
                break;
            }
        }

        let mut remaining = Vec::with_capacity(self.mempool.len());
        for (i, tx) in std::mem::take(&mut self.mempool).into_iter().enumerate() {
            if included.contains(&i) {
                self.confirmed.insert(ids[i], ConfirmedTx { tx, height });
            } else {
                remaining.push(tx);
            }
        }
        let mined: Vec<Txid> = included.iter().map(|&i| ids[i]).collect();
        self.mempool = remaining;
        self.tip_height = height;
        self.evict_invalid();
        mined
    }

    /// Drop mempool transactions whose input is spent or has disappeared.
    fn evict_invalid(&mut self) {
        loop {
            let before = self.mempool.len();
            let snapshot = self.mempool.clone();
            let known = |txid: &Txid| {
                self.confirmed.contains_key(txid) || snapshot.iter().any(|t| t.txid() == *txid)
            };
            let keep: Vec<bool> = snapshot
                .iter()
                .map(|t| match t.prev() {
                    Some(prev) => !self.spent.contains_key(&prev) && known(&prev.txid),
                    None => false,
                })
                .collect();
            let mut it = keep.into_iter();
            self.mempool.retain(|_| it.next().unwrap_or(false));
            if self.mempool.len() == before {
                break;
            }
        }
    }

    /// Confirmed outputs whose view key equals `v·H`.
    pub fn scan_with_view_key(&self, view_secret: &ScalarP) -> Vec<FoundOutput<C>> {
        let view_pub = PointP::mul_base(view_secret);
        let mut found = Vec::new();
        for (txid, c) in &self.confirmed {
            for (vout, o) in c.tx.outputs.iter().enumerate() {
                if o.view_key == Some(view_pub) {
                    let outpoint = OutPoint {
                        txid: *txid,
                        vout: vout as u32,
                    };
                    found.push(FoundOutput {
                        outpoint,
                        output: o.clone(),
                        spent: self.spent.contains_key(&outpoint),
                    });
                }
            }
        }
        found
    }

    pub fn is_unspent(&self, outpoint: &OutPoint) -> bool {
        self.confirmed
            .get(&outpoint.txid)
            .is_some_and(|c| (outpoint.vout as usize) < c.tx.outputs.len())
            && !self.spent.contains_key(outpoint)
    }

    pub fn unspent_outputs(&self) -> Vec<(OutPoint, &SimOutput<C>)> {
        let mut out = Vec::new();
        for (txid, c) in &self.confirmed {
            for (vout, o) in c.tx.outputs.iter().enumerate() {
                let op = OutPoint {
                    txid: *txid,
                    vout: vout as u32,
                };
                if !self.spent.contains_key(&op) {
                    out.push((op, o));
                }
            }
        }
        out
    }

    /// Value of confirmed unspent outputs that `keys` can spend without
    /// anyone else's signature.
    pub fn balance_of(&self, keys: &[C::PublicKey]) -> u64 {
        self.unspent_outputs()
            .into_iter()
            .filter(|(_, o)| {
                o.clauses
                    .iter()
                    .any(|c| c.keys.iter().all(|k| keys.contains(k)))
            })
            .map(|(_, o)| o.amount)
            .sum()
    }

    pub fn minted(&self) -> u64 {
        self.confirmed
            .values()
            .filter(|c| matches!(c.tx.input, TxInput::Faucet { .. }))
            .map(|c| c.tx.output_value())
            .sum()
    }

    pub fn fees_paid(&self) -> u64 {
        self.confirmed.values().map(|c| c.tx.fee).sum()
    }

    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let mut seen = BTreeMap::new();
        for (txid, c) in &self.confirmed {
            if let Some(prev) = c.tx.prev() {
                if seen.insert(prev, *txid).is_some() || self.spent.get(&prev) != Some(txid) {
                    return Err(InvariantViolation::DoubleSpend {
                        chain: C::NAME,
                        outpoint: prev,
                    });
                }
            }
        }
        let unspent: u64 = self.unspent_outputs().iter().map(|(_, o)| o.amount).sum();
        let (fees, minted) = (self.fees_paid(), self.minted());
        if unspent + fees != minted {
            return Err(InvariantViolation::Conservation {
                chain: C::NAME,
                unspent,
                fees,
                minted,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ledger serializes")
    }

    /// SHA-256 of the JSON state dump.
    pub fn state_digest(&self) -> [u8; 32] {
        Sha256::digest(serde_json::to_vec(self).expect("ledger serializes")).into()
    }
}

/// Maps with struct keys, as a list of `[key, value]` pairs.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}
