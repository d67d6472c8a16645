use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};

use super::config::{Scenario, ScenarioConfig};
use super::events::{EventKind, Transcript};
use super::oracle::{common_checks, Check, OracleReport};
use super::runner::World;
use super::RunOutcome;
use crate::chains::{BtcChain, SimOutput, XmrChain};
use crate::groups::CrossScalar;
use crate::protocol::{Role, SwapParty, TxRole};
use crate::swap_btc_xmr::{self as bx, build_xmr_sweep};
use crate::swap_xmr_btc as xb;

/// Spare value in each faucet output beyond what the lock needs.
pub const BTC_CHANGE: u64 = 50_000;
pub const XMR_CHANGE: u64 = 1_000_000;

/// Per-party RNG: ChaCha20 keyed by SHA-256 of the seed and party name.
pub fn party_rng(seed: u64, name: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"xswap/party-rng/v1");
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

struct Funded {
    btc: BtcChain,
    xmr: XmrChain,
    btc_amount: u64,
    xmr_amount: u64,
    btc_outpoint: crate::chains::OutPoint,
    xmr_outpoint: crate::chains::OutPoint,
    transcript: Transcript,
}

/// Faucet Bob's bitcoin and Alice's monero before tick 0.
fn fund(cfg: &ScenarioConfig, bob_btc: crate::groups::PointQ, alice_xmr: crate::groups::PointP) -> Funded {
    let p = &cfg.params;
    let (btc_amount, xmr_amount) = (p.amt_btc + p.fee + BTC_CHANGE, p.amt_xmr + p.xmr_fee + XMR_CHANGE);
    let mut btc = BtcChain::new();
    let mut xmr = XmrChain::new();
    let btc_outpoint = btc.faucet(SimOutput::to_key(btc_amount, bob_btc));
    let xmr_outpoint = xmr.faucet(SimOutput::to_key(xmr_amount, alice_xmr));
    let mut transcript = Transcript::new();
    transcript.push(
        0,
        "btc",
        EventKind::Mined,
        "faucet",
        format!("{btc_amount} to bob {}", btc_outpoint.txid),
        &btc_outpoint.txid.0,
    );
    transcript.push(
        0,
        "xmr",
        EventKind::Mined,
        "faucet",
        format!("{xmr_amount} to alice {}", xmr_outpoint.txid),
        &xmr_outpoint.txid.0,
    );
    Funded {
        btc,
        xmr,
        btc_amount,
        xmr_amount,
        btc_outpoint,
        xmr_outpoint,
        transcript,
    }
}

fn finish<A, B>(
    world: World<A, B>,
    generated: BTreeMap<String, CrossScalar>,
    extra: impl FnOnce(&World<A, B>) -> Vec<Check>,
) -> RunOutcome
where
    A: SwapParty,
    B: SwapParty<Message = A::Message>,
{
    let tags = world.tags();
    let balances = world.balances();
    let mut checks = common_checks(&world.cfg, &tags, &balances, &world.violations);
    for r in &world.recovered {
        let matches = generated.get(&r.name) == Some(&r.value);
        checks.push(Check::holds(
            format!("{} recovered {} exactly", r.by.name(), r.name),
            matches,
            matches,
        ));
    }
    checks.extend(extra(&world));
    let (alice_terminal, bob_terminal) = (world.alice().is_terminal(), world.bob().is_terminal());
    RunOutcome {
        config: world.cfg.clone(),
        ticks: world.ticks,
        alice_state: tags.0,
        bob_state: tags.1,
        alice_terminal,
        bob_terminal,
        balances,
        broadcasts: world.broadcasts,
        recovered: world.recovered,
        generated,
        violations: world.violations,
        btc: world.btc,
        xmr: world.xmr,
        transcript: world.transcript,
        oracle: OracleReport { checks },
    }
}

fn recovered_check<A, B>(world: &World<A, B>, by: Role, name: &str) -> Check
where
    A: SwapParty,
    B: SwapParty<Message = A::Message>,
{
    let found = world.recovered.iter().any(|r| r.by == by && r.name == name);
    Check::holds(format!("{} learned {name}", by.name()), found, found)
}

fn never_broadcast<A, B>(world: &World<A, B>, role: TxRole) -> Check
where
    A: SwapParty,
    B: SwapParty<Message = A::Message>,
{
    let n = world.broadcasts.iter().filter(|b| b.role == role).count();
    Check::new(format!("{} broadcasts", role.name()), 0, n)
}

pub(super) fn run_btc_xmr(cfg: ScenarioConfig) -> RunOutcome {
    let strategy = match cfg.scenario {
        Scenario::Happy => bx::BobStrategy::Honest,
        Scenario::NoEncsig => bx::BobStrategy::WithholdEncSig,
        Scenario::BobSilentAfterCancel => bx::BobStrategy::SilentAfterCancel,
        Scenario::FrontRun => bx::BobStrategy::FrontRun,
        other => unreachable!("validated config: btc_xmr/{other}"),
    };
    let mut alice = bx::Alice::new(cfg.params.clone(), &mut party_rng(cfg.seed, "alice"));
    let mut bob = bx::Bob::new(cfg.params.clone(), strategy, &mut party_rng(cfg.seed, "bob"));
    let f = fund(&cfg, bob.wallet_pub(), alice.xmr_wallet_pub());
    alice.fund_xmr(f.xmr_outpoint, f.xmr_amount);
    bob.fund_btc(f.btc_outpoint, f.btc_amount);
    let generated = BTreeMap::from([
        ("s_a".to_string(), alice.keys().s),
        ("s_b".to_string(), bob.keys().s),
    ]);
    let world = World::new(cfg, f.btc, f.xmr, alice, bob, f.transcript).run();
    finish(world, generated, |w| {
        let mut checks = Vec::new();
        match w.cfg.scenario {
            Scenario::Happy => checks.push(recovered_check(w, Role::Bob, "s_a")),
            Scenario::NoEncsig => checks.push(recovered_check(w, Role::Alice, "s_b")),
            Scenario::BobSilentAfterCancel => checks.extend(punish_lock_checks(w)),
            Scenario::FrontRun if w.cfg.params.redeem_safety_margin == 0 => {
                checks.push(recovered_check(w, Role::Bob, "s_a"));
                let txs = w.alice().transactions();
                let cancel_won = txs.is_some_and(|t| {
                    w.btc.is_confirmed(&t.cancel.txid()) && !w.btc.is_confirmed(&t.redeem.txid())
                });
                checks.push(Check::holds("btc_cancel beat btc_redeem", cancel_won, cancel_won));
            }
            Scenario::FrontRun => {
                checks.push(never_broadcast(w, TxRole::BtcRedeem));
                checks.push(recovered_check(w, Role::Alice, "s_b"));
            }
            _ => {}
        }
        checks
    })
}

/// After punish the monero lock stays put and neither share alone moves it.
fn punish_lock_checks(w: &World<bx::Alice, bx::Bob>) -> Vec<Check> {
    let Some(lock) = w.alice().xmr_lock_outpoint() else {
        return vec![Check::holds("xmr lock published", false, false)];
    };
    let (s_a, s_b) = (w.alice().keys().s.to_p(), w.bob().keys().s.to_p());
    let to = w.alice().xmr_wallet_pub();
    let attempt = |key| {
        let mut xmr = w.xmr.clone();
        xmr.broadcast(build_xmr_sweep(&w.cfg.params, lock, &key, to))
    };
    let unspent = w.xmr.is_unspent(&lock);
    let (only_a, only_b, joint) = (attempt(s_a), attempt(s_b), attempt(s_a + s_b));
    vec![
        Check::holds("xmr lock unspent", unspent, unspent),
        Check::holds("sweep with s_a alone rejected", only_a.is_err(), format!("{only_a:?}")),
        Check::holds("sweep with s_b alone rejected", only_b.is_err(), format!("{only_b:?}")),
        Check::holds("sweep with s_a + s_b accepted", joint.is_ok(), format!("{joint:?}")),
    ]
}

pub(super) fn run_xmr_btc(cfg: ScenarioConfig) -> RunOutcome {
    let (a_strategy, b_strategy) = match cfg.scenario {
        Scenario::Happy => (xb::AliceStrategy::Honest, xb::BobStrategy::Honest),
        Scenario::AliceNoRedeem => (xb::AliceStrategy::NeverRedeem, xb::BobStrategy::Honest),
        Scenario::BobNeverLocks => (xb::AliceStrategy::Honest, xb::BobStrategy::NeverLock),
        Scenario::AliceCheats => (xb::AliceStrategy::Cheat, xb::BobStrategy::Honest),
        Scenario::AliceCheatsBobOffline => {
            (xb::AliceStrategy::Cheat, xb::BobStrategy::OfflineAfterLock)
        }
        other => unreachable!("validated config: xmr_btc/{other}"),
    };
    let mut alice = xb::Alice::new(cfg.params.clone(), a_strategy, &mut party_rng(cfg.seed, "alice"));
    let mut bob = xb::Bob::new(cfg.params.clone(), b_strategy, &mut party_rng(cfg.seed, "bob"));
    let f = fund(&cfg, bob.btc_wallet_pub(), alice.xmr_wallet_pub());
    alice.fund_xmr(f.xmr_outpoint, f.xmr_amount);
    bob.fund_btc(f.btc_outpoint, f.btc_amount);
    let generated = BTreeMap::from([
        ("s_A".to_string(), alice.s_a()),
        ("r_A".to_string(), alice.r_a()),
        ("s_B".to_string(), bob.s_b()),
    ]);
    let world = World::new(cfg, f.btc, f.xmr, alice, bob, f.transcript).run();
    finish(world, generated, |w| {
        let mut checks = Vec::new();
        match w.cfg.scenario {
            Scenario::Happy => {
                checks.push(recovered_check(w, Role::Bob, "s_A"));
                let depth = w.alice().btc_side().and_then(|s| {
                    let r = w.btc.confirmed_height(&s.redeem.txid())?;
                    let t = w.btc.confirmed_height(&s.take.txid())?;
                    Some(t - r)
                });
                let deep = depth.is_some_and(|d| d >= w.cfg.params.t2 as u64);
                checks.push(Check::holds(
                    "btc_take at least t2 blocks after btc_redeem",
                    deep,
                    format!("{depth:?}"),
                ));
            }
            Scenario::BobNeverLocks => {
                let n = w
                    .broadcasts
                    .iter()
                    .filter(|b| b.publisher == Role::Bob && b.role.is_btc())
                    .count();
                checks.push(Check::new("bob btc broadcasts", 0, n));
            }
            Scenario::AliceCheats => {
                checks.push(recovered_check(w, Role::Bob, "r_A"));
                let confirmed = w
                    .broadcasts
                    .iter()
                    .any(|b| b.role == TxRole::BtcEmergency && w.btc.is_confirmed(&b.txid));
                checks.push(Check::holds("btc_emergency confirmed", confirmed, confirmed));
            }
            Scenario::AliceCheatsBobOffline => {
                checks.push(never_broadcast(w, TxRole::BtcEmergency));
            }
            _ => {}
        }
        checks
    })
}
