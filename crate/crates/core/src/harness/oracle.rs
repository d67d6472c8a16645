use std::fmt;

use serde::Serialize;

use super::config::{Protocol, Scenario, ScenarioConfig};
use super::runner::{Balances, ChainDelta};
use crate::protocol::Role;

/// One named expectation and what was observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, expected: impl fmt::Display, actual: impl fmt::Display) -> Self {
        let (expected, actual) = (expected.to_string(), actual.to_string());
        Self {
            name: name.into(),
            pass: expected == actual,
            expected,
            actual,
        }
    }

    pub fn holds(name: impl Into<String>, pass: bool, actual: impl fmt::Display) -> Self {
        Self {
            name: name.into(),
            expected: "true".into(),
            actual: actual.to_string(),
            pass,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<Check>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Expected terminal tags and balance changes of a fault-free run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub alice_state: String,
    pub bob_state: String,
    pub balances: Balances,
}

/// The declared outcome table. `A`/`X` are the swap amounts, `f`/`xf` the
/// per-transaction fees, and every fee is carried by the value it spends.
pub fn expectation(cfg: &ScenarioConfig) -> Expectation {
    let p = &cfg.params;
    let (a, x, f, xf) = (
        p.amt_btc as i64,
        p.amt_xmr as i64,
        p.fee as i64,
        p.xmr_fee as i64,
    );
    let d = |btc, xmr| ChainDelta { btc, xmr };
    let (alice, bob, alice_d, bob_d) = match (cfg.protocol, cfg.scenario) {
        (Protocol::BtcXmr, Scenario::Happy) => {
            ("redeemed", "redeemed", d(a - f, -(x + xf)), d(-(a + f), x - xf))
        }
        (Protocol::BtcXmr, Scenario::NoEncsig) => {
            ("refunded", "refunded", d(0, -2 * xf), d(-3 * f, 0))
        }
        (Protocol::BtcXmr, Scenario::BobSilentAfterCancel) => {
            ("punished", "punished", d(a - 2 * f, -(x + xf)), d(-(a + f), 0))
        }
        // Without the margin Bob learns s_a from the pending redeem, takes the
        // monero and wins the cancel race.
        (Protocol::BtcXmr, Scenario::FrontRun) if p.redeem_safety_margin == 0 => (
            "aborted(xmr-lock-spent)",
            "refunded",
            d(0, -(x + xf)),
            d(-3 * f, x - xf),
        ),
        (Protocol::BtcXmr, Scenario::FrontRun) => {
            ("refunded", "refunded", d(0, -2 * xf), d(-3 * f, 0))
        }
        (Protocol::XmrBtc, Scenario::Happy) => (
            "btc_taken",
            "xmr_redeemed",
            d(a - 2 * f, -(x + xf)),
            d(-(a + f), x - xf),
        ),
        (Protocol::XmrBtc, Scenario::AliceNoRedeem) => {
            ("xmr_refunded", "btc_cancelled", d(0, -2 * xf), d(-2 * f, 0))
        }
        (Protocol::XmrBtc, Scenario::BobNeverLocks) => (
            "xmr_refunded",
            "aborted(xmr-lock-spent)",
            d(0, -2 * xf),
            d(0, 0),
        ),
        (Protocol::XmrBtc, Scenario::AliceCheats) => (
            "xmr_refunded",
            "emergency_refunded",
            d(0, -2 * xf),
            d(-3 * f, 0),
        ),
        (Protocol::XmrBtc, Scenario::AliceCheatsBobOffline) => (
            "btc_taken",
            "btc_locked",
            d(a - 2 * f, -2 * xf),
            d(-(a + f), 0),
        ),
        (protocol, scenario) => unreachable!("validated config: {protocol}/{scenario}"),
    };
    Expectation {
        alice_state: alice.into(),
        bob_state: bob.into(),
        balances: Balances {
            alice: alice_d,
            bob: bob_d,
        },
    }
}

/// Checks shared by every scenario: terminal tags, the four balance deltas
/// and chain invariants.
pub fn common_checks(
    cfg: &ScenarioConfig,
    tags: &(String, String),
    balances: &Balances,
    violations: &[String],
) -> Vec<Check> {
    let e = expectation(cfg);
    let mut checks = vec![
        Check::new("alice state", &e.alice_state, &tags.0),
        Check::new("bob state", &e.bob_state, &tags.1),
    ];
    for role in [Role::Alice, Role::Bob] {
        let (want, got) = (e.balances.of(role), balances.of(role));
        checks.push(Check::new(format!("{} btc delta", role.name()), want.btc, got.btc));
        checks.push(Check::new(format!("{} xmr delta", role.name()), want.xmr, got.xmr));
    }
    checks.push(Check::holds(
        "chain invariants",
        violations.is_empty(),
        violations.first().map_or("none violated", String::as_str),
    ));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_valid_pair_has_a_table_row() {
        for protocol in Protocol::ALL {
            for scenario in Scenario::for_protocol(protocol) {
                let cfg = ScenarioConfig::preset(protocol, scenario, 1).unwrap();
                let e = expectation(&cfg);
                assert!(!e.alice_state.is_empty() && !e.bob_state.is_empty());
            }
        }
    }

    #[test]
    fn happy_table_matches_hand_arithmetic() {
        let cfg = ScenarioConfig::preset(Protocol::BtcXmr, Scenario::Happy, 1).unwrap();
        let e = expectation(&cfg);
        assert_eq!(e.balances.alice.btc, 99_000);
        assert_eq!(e.balances.bob.btc, -101_000);
        assert_eq!(e.balances.bob.xmr, 4_990_000);
    }
}
