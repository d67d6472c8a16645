//! Deterministic scenario runner.
//!
//! A run is a pure function of its [`ScenarioConfig`]. Each tick delivers
//! due messages, steps Alice then Bob (applying their actions at once), mines
//! a block on each chain whose cadence is due, and checks the chain
//! invariants. The run stops when both parties are terminal with nothing
//! pending, or at the horizon.
//!
//! Messages sent at tick `t` arrive at `t + 1` unless a fault rule drops or
//! delays them. A party inside an offline window is not stepped and its mail
//! waits.

mod config;
mod events;
mod oracle;
mod runner;
mod scenarios;
mod selftest;

use std::collections::BTreeMap;

use serde::Serialize;

pub use config::{
    default_seed, ConfigError, FaultEffect, FaultRule, Faults, MiningConfig, OfflineWindow,
    Protocol, Scenario, ScenarioConfig, DEFAULT_HORIZON, DEFAULT_SEED, SEED_ENV,
};
pub use events::{payload_digest, EventKind, EventRecord, Transcript};
pub use oracle::{expectation, Check, Expectation, OracleReport};
pub use runner::{Balances, Broadcast, ChainDelta, Recovered};
pub use scenarios::{party_rng, BTC_CHANGE, XMR_CHANGE};
pub use selftest::{selftest, SelftestOptions};

use crate::chains::{BtcChain, XmrChain};
use crate::groups::CrossScalar;
use crate::protocol::{Role, TxRole};

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub transcript: Transcript,
    pub ticks: u64,
    pub alice_state: String,
    pub bob_state: String,
    pub alice_terminal: bool,
    pub bob_terminal: bool,
    pub balances: Balances,
    pub broadcasts: Vec<Broadcast>,
    pub recovered: Vec<Recovered>,
    /// Swap secrets each party generated, by name.
    pub generated: BTreeMap<String, CrossScalar>,
    pub violations: Vec<String>,
    pub btc: BtcChain,
    pub xmr: XmrChain,
    pub oracle: OracleReport,
}

#[derive(Serialize)]
struct Summary<'a> {
    protocol: Protocol,
    scenario: Scenario,
    seed: u64,
    ticks: u64,
    alice_state: &'a str,
    bob_state: &'a str,
    balances: &'a Balances,
    transcript_digest: String,
    events: usize,
    oracle_pass: bool,
    checks: &'a [Check],
}

impl RunOutcome {
    pub fn digest(&self) -> String {
        self.transcript.digest()
    }

    pub fn passed(&self) -> bool {
        self.oracle.pass()
    }

    pub fn recovered_by(&self, by: Role, name: &str) -> Option<CrossScalar> {
        self.recovered
            .iter()
            .find(|r| r.by == by && r.name == name)
            .map(|r| r.value)
    }

    /// Sum of fees of confirmed transactions `role` published on each chain.
    pub fn fees_published(&self, role: Role) -> ChainDelta {
        let mut out = ChainDelta::default();
        for b in self.broadcasts.iter().filter(|b| b.publisher == role) {
            if b.role.is_btc() && self.btc.is_confirmed(&b.txid) {
                out.btc += b.fee as i64;
            } else if !b.role.is_btc() && self.xmr.is_confirmed(&b.txid) {
                out.xmr += b.fee as i64;
            }
        }
        out
    }

    /// Accepted broadcasts of `role` by anyone.
    pub fn broadcasts_of(&self, role: TxRole) -> impl Iterator<Item = &Broadcast> {
        self.broadcasts
            .iter()
            .filter(move |b| b.accepted && b.role == role)
    }

    pub fn confirmed(&self, role: TxRole) -> bool {
        self.broadcasts_of(role).any(|b| {
            if role.is_btc() {
                self.btc.is_confirmed(&b.txid)
            } else {
                self.xmr.is_confirmed(&b.txid)
            }
        })
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            protocol: self.config.protocol,
            scenario: self.config.scenario,
            seed: self.config.seed,
            ticks: self.ticks,
            alice_state: &self.alice_state,
            bob_state: &self.bob_state,
            balances: &self.balances,
            transcript_digest: self.digest(),
            events: self.transcript.len(),
            oracle_pass: self.passed(),
            checks: &self.oracle.checks,
        })
        .expect("summary serializes")
    }
}

/// Run one scenario to completion and evaluate its oracle.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome, ConfigError> {
    cfg.validate()?;
    Ok(match cfg.protocol {
        Protocol::BtcXmr => scenarios::run_btc_xmr(cfg.clone()),
        Protocol::XmrBtc => scenarios::run_xmr_btc(cfg.clone()),
    })
}
