//! A bare two-party driver with a hook to tamper messages in flight.

#![allow(dead_code)]

use xswap_core::chains::{BtcChain, XmrChain};
use xswap_core::protocol::{Action, ChainView, Role, SwapParty, TxRole};

pub type Tamper<'a, M> = dyn FnMut(Role, &mut M) + 'a;

pub struct Sim<A: SwapParty, B: SwapParty<Message = A::Message>> {
    pub btc: BtcChain,
    pub xmr: XmrChain,
    alice: Option<A>,
    bob: Option<B>,
    to_alice: Vec<A::Message>,
    to_bob: Vec<A::Message>,
    pub broadcast: Vec<(Role, TxRole)>,
}

impl<A: SwapParty, B: SwapParty<Message = A::Message>> Sim<A, B> {
    pub fn new(btc: BtcChain, xmr: XmrChain, alice: A, bob: B) -> Self {
        Self {
            btc,
            xmr,
            alice: Some(alice),
            bob: Some(bob),
            to_alice: Vec::new(),
            to_bob: Vec::new(),
            broadcast: Vec::new(),
        }
    }

    pub fn alice(&self) -> &A {
        self.alice.as_ref().unwrap()
    }

    pub fn bob(&self) -> &B {
        self.bob.as_ref().unwrap()
    }

    fn apply(&mut self, from: Role, actions: Vec<Action<A::Message>>, tamper: &mut Tamper<'_, A::Message>) {
        for a in actions {
            match a {
                Action::Send { mut message } => {
                    tamper(from, &mut message);
                    match from {
                        Role::Alice => self.to_bob.push(message),
                        Role::Bob => self.to_alice.push(message),
                    }
                }
                Action::BroadcastBtc { role, tx } => {
                    if self.btc.broadcast(tx).is_ok() {
                        self.broadcast.push((from, role));
                    }
                }
                Action::BroadcastXmr { role, tx } => {
                    if self.xmr.broadcast(tx).is_ok() {
                        self.broadcast.push((from, role));
                    }
                }
                Action::RecoveredSecret { .. } => {}
            }
        }
    }

    /// Step Alice, then Bob, then mine one block on each chain. Messages
    /// arrive on the next tick.
    pub fn tick(&mut self, tamper: &mut Tamper<'_, A::Message>) {
        let inbox = std::mem::take(&mut self.to_alice);
        let (alice, out) = self
            .alice
            .take()
            .unwrap()
            .step(ChainView::new(&self.btc, &self.xmr), inbox);
        self.alice = Some(alice);
        self.apply(Role::Alice, out, tamper);
        let inbox = std::mem::take(&mut self.to_bob);
        let (bob, out) = self
            .bob
            .take()
            .unwrap()
            .step(ChainView::new(&self.btc, &self.xmr), inbox);
        self.bob = Some(bob);
        self.apply(Role::Bob, out, tamper);
        self.btc.mine_block(&[]);
        self.xmr.mine_block(&[]);
    }

    pub fn run(&mut self, ticks: usize, tamper: &mut Tamper<'_, A::Message>) {
        for _ in 0..ticks {
            self.tick(tamper);
        }
    }

    pub fn published(&self, who: Role, role: TxRole) -> bool {
        self.broadcast.contains(&(who, role))
    }
}

pub fn no_tamper<M>(_: Role, _: &mut M) {}
