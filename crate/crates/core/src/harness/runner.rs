use serde::Serialize;

use super::config::{FaultEffect, ScenarioConfig};
use super::events::{EventKind, Transcript};
use crate::chains::{Accepted, BtcChain, Txid, XmrChain};
use crate::groups::CrossScalar;
use crate::protocol::{Action, ChainView, ProtocolMessage, Role, SwapParty, TxRole};

/// A transaction some party handed to a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Broadcast {
    pub tick: u64,
    pub publisher: Role,
    pub role: TxRole,
    pub txid: Txid,
    pub fee: u64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recovered {
    pub tick: u64,
    pub by: Role,
    pub name: String,
    pub value: CrossScalar,
}

/// Signed per-chain balance change of one party.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChainDelta {
    pub btc: i64,
    pub xmr: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Balances {
    pub alice: ChainDelta,
    pub bob: ChainDelta,
}

impl Balances {
    pub fn of(&self, role: Role) -> ChainDelta {
        match role {
            Role::Alice => self.alice,
            Role::Bob => self.bob,
        }
    }
}

struct InFlight<M> {
    deliver_at: u64,
    to: Role,
    msg: M,
}

/// Both parties, both chains and everything observed so far.
pub(crate) struct World<A, B>
where
    A: SwapParty,
    B: SwapParty<Message = A::Message>,
{
    pub cfg: ScenarioConfig,
    pub btc: BtcChain,
    pub xmr: XmrChain,
    alice: Option<A>,
    bob: Option<B>,
    in_flight: Vec<InFlight<A::Message>>,
    tags: [String; 2],
    start: [(u64, u64); 2],
    pub transcript: Transcript,
    pub broadcasts: Vec<Broadcast>,
    pub recovered: Vec<Recovered>,
    pub violations: Vec<String>,
    pub ticks: u64,
}

impl<A, B> World<A, B>
where
    A: SwapParty,
    B: SwapParty<Message = A::Message>,
{
    /// `transcript` may already hold setup events such as faucet payments.
    pub fn new(
        cfg: ScenarioConfig,
        btc: BtcChain,
        xmr: XmrChain,
        alice: A,
        bob: B,
        transcript: Transcript,
    ) -> Self {
        let start = [
            (btc.balance_of(&alice.btc_wallet()), xmr.balance_of(&alice.xmr_wallet())),
            (btc.balance_of(&bob.btc_wallet()), xmr.balance_of(&bob.xmr_wallet())),
        ];
        Self {
            cfg,
            btc,
            xmr,
            tags: [alice.tag(), bob.tag()],
            alice: Some(alice),
            bob: Some(bob),
            in_flight: Vec::new(),
            start,
            transcript,
            broadcasts: Vec::new(),
            recovered: Vec::new(),
            violations: Vec::new(),
            ticks: 0,
        }
    }

    pub fn alice(&self) -> &A {
        self.alice.as_ref().expect("alice present between steps")
    }

    pub fn bob(&self) -> &B {
        self.bob.as_ref().expect("bob present between steps")
    }

    pub fn run(mut self) -> Self {
        for tick in 0..self.cfg.horizon {
            self.ticks = tick + 1;
            for role in [Role::Alice, Role::Bob] {
                if self.cfg.faults.is_offline(role, tick) {
                    continue;
                }
                let inbox = self.take_inbox(role, tick);
                self.step_party(role, tick, inbox);
            }
            self.mine(tick);
            self.check_invariants(tick);
            if self.settled() {
                break;
            }
        }
        self
    }

    fn settled(&self) -> bool {
        self.alice().is_terminal()
            && self.bob().is_terminal()
            && self.in_flight.is_empty()
            && self.btc.mempool().is_empty()
            && self.xmr.mempool().is_empty()
    }

    fn take_inbox(&mut self, role: Role, tick: u64) -> Vec<A::Message> {
        let (due, rest) = std::mem::take(&mut self.in_flight)
            .into_iter()
            .partition(|m| m.to == role && m.deliver_at <= tick);
        self.in_flight = rest;
        due.into_iter().map(|m: InFlight<_>| m.msg).collect()
    }

    fn step_party(&mut self, role: Role, tick: u64, inbox: Vec<A::Message>) {
        let view = ChainView::new(&self.btc, &self.xmr);
        let (actions, tag) = match role {
            Role::Alice => {
                let (next, actions) = self.alice.take().expect("alice present").step(view, inbox);
                let tag = next.tag();
                self.alice = Some(next);
                (actions, tag)
            }
            Role::Bob => {
                let (next, actions) = self.bob.take().expect("bob present").step(view, inbox);
                let tag = next.tag();
                self.bob = Some(next);
                (actions, tag)
            }
        };
        for action in actions {
            self.apply(role, tick, action);
        }
        let slot = &mut self.tags[role as usize];
        if *slot != tag {
            let detail = format!("{slot} -> {tag}");
            self.transcript.push(
                tick,
                role.name(),
                EventKind::StateChange,
                tag.clone(),
                detail,
                tag.as_bytes(),
            );
            *slot = tag;
        }
    }

    fn apply(&mut self, who: Role, tick: u64, action: Action<A::Message>) {
        match action {
            Action::Send { message } => {
                let kind = message.kind();
                let payload = serde_json::to_vec(&message).expect("message serializes");
                let rule = self.cfg.faults.rule_for(tick, who, kind);
                let detail = match rule.map(|r| (r.effect, r.ticks)) {
                    Some((FaultEffect::Drop, _)) => "dropped".to_string(),
                    other => {
                        let delay = match other {
                            Some((FaultEffect::Delay, n)) => n,
                            _ => 0,
                        };
                        let deliver_at = tick + 1 + delay;
                        self.in_flight.push(InFlight {
                            deliver_at,
                            to: who.other(),
                            msg: message,
                        });
                        format!("to {} at tick {deliver_at}", who.other().name())
                    }
                };
                self.transcript
                    .push(tick, who.name(), EventKind::Message, kind, detail, &payload);
            }
            Action::BroadcastBtc { role, tx } => {
                let (txid, fee, payload) = (tx.txid(), tx.fee, tx.encode());
                let result = self.btc.broadcast(tx);
                self.record_broadcast(who, tick, role, txid, fee, result, &payload);
            }
            Action::BroadcastXmr { role, tx } => {
                let (txid, fee, payload) = (tx.txid(), tx.fee, tx.encode());
                let result = self.xmr.broadcast(tx);
                self.record_broadcast(who, tick, role, txid, fee, result, &payload);
            }
            Action::RecoveredSecret { name, value } => {
                self.transcript.push(
                    tick,
                    who.name(),
                    EventKind::RecoveredSecret,
                    name.clone(),
                    "",
                    &value.to_le_bytes(),
                );
                self.recovered.push(Recovered {
                    tick,
                    by: who,
                    name,
                    value,
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record_broadcast(
        &mut self,
        who: Role,
        tick: u64,
        role: TxRole,
        txid: Txid,
        fee: u64,
        result: Result<Accepted, crate::chains::RejectReason>,
        payload: &[u8],
    ) {
        let detail = match &result {
            Ok(Accepted::New) => format!("accepted {txid}"),
            Ok(Accepted::AlreadyKnown) => format!("known {txid}"),
            Err(e) => format!("rejected {txid}: {e}"),
        };
        self.transcript
            .push(tick, who.name(), EventKind::Broadcast, role.name(), detail, payload);
        if !matches!(result, Ok(Accepted::AlreadyKnown)) {
            self.broadcasts.push(Broadcast {
                tick,
                publisher: who,
                role,
                txid,
                fee,
                accepted: result.is_ok(),
            });
        }
    }

    fn priority(&self, btc: bool) -> Vec<Txid> {
        self.cfg
            .mining
            .priority
            .iter()
            .filter(|r| r.is_btc() == btc)
            .flat_map(|r| {
                self.broadcasts
                    .iter()
                    .filter(move |b| b.accepted && b.role == *r)
                    .map(|b| b.txid)
            })
            .collect()
    }

    fn label_of(&self, txid: &Txid) -> &'static str {
        self.broadcasts
            .iter()
            .find(|b| b.txid == *txid)
            .map_or("unknown", |b| b.role.name())
    }

    fn mine(&mut self, tick: u64) {
        if (tick + 1) % self.cfg.mining.btc_every == 0 {
            let prio = self.priority(true);
            for txid in self.btc.mine_block(&prio) {
                let detail = format!("height {} {txid}", self.btc.tip_height());
                let label = self.label_of(&txid);
                self.transcript
                    .push(tick, "btc", EventKind::Mined, label, detail, &txid.0);
            }
        }
        if (tick + 1) % self.cfg.mining.xmr_every == 0 {
            let prio = self.priority(false);
            for txid in self.xmr.mine_block(&prio) {
                let detail = format!("height {} {txid}", self.xmr.tip_height());
                let label = self.label_of(&txid);
                self.transcript
                    .push(tick, "xmr", EventKind::Mined, label, detail, &txid.0);
            }
        }
    }

    fn check_invariants(&mut self, tick: u64) {
        if let Err(e) = self.btc.check_invariants() {
            self.violations.push(format!("tick {tick} btc: {e}"));
        }
        if let Err(e) = self.xmr.check_invariants() {
            self.violations.push(format!("tick {tick} xmr: {e}"));
        }
    }

    pub fn tags(&self) -> (String, String) {
        (self.tags[0].clone(), self.tags[1].clone())
    }

    pub fn balances(&self) -> Balances {
        let delta = |now: u64, was: u64| now as i64 - was as i64;
        let a = self.alice();
        let b = self.bob();
        Balances {
            alice: ChainDelta {
                btc: delta(self.btc.balance_of(&a.btc_wallet()), self.start[0].0),
                xmr: delta(self.xmr.balance_of(&a.xmr_wallet()), self.start[0].1),
            },
            bob: ChainDelta {
                btc: delta(self.btc.balance_of(&b.btc_wallet()), self.start[1].0),
                xmr: delta(self.xmr.balance_of(&b.xmr_wallet()), self.start[1].1),
            },
        }
    }
}
