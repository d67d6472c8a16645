//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Set XSWAP_BLESS=1 to (re)write the golden digests.

use std::fmt::Debug;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use curve25519_dalek::edwards::{CompressedEdwardsY, EdwardsPoint};
use curve25519_dalek::Scalar as DalekScalar;
use k256::ecdsa::signature::hazmat::PrehashVerifier;
use k256::ecdsa::{Signature as K256Signature, VerifyingKey};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256, Sha512};

use xswap_core::adaptors::{
    ecdsa_dec_sig, ecdsa_enc_sign, ecdsa_enc_verify, ecdsa_rec_key, ecdsa_sign, schnorr_dec_sig,
    schnorr_enc_sign, schnorr_enc_verify, schnorr_rec_key,
};
use xswap_core::chains::{
    BtcChain, ChainKind, Ledger, OutPoint, SimOutput, SimTransaction, SpendClause,
};
use xswap_core::dleq::{dleq_prove, proof_decode, proof_encode, CrossGroupDleqProof, PROOF_LEN};
use xswap_core::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ, CROSS_SCALAR_BITS};
use xswap_core::harness::{run_scenario, Protocol, RunOutcome, Scenario, ScenarioConfig};
use xswap_core::protocol::{Role, TxRole};
use xswap_core::swap_btc_xmr::build_xmr_sweep;

const ADAPTOR_CASES: usize = 1000;
const DLEQ_CASES: usize = 100;
const REPEATS: usize = 5;

#[derive(Default)]
struct Crit {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Crit {
    fn check(&mut self, what: impl Into<String>, ok: bool) {
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn eq<T: PartialEq + Debug>(&mut self, what: &str, expected: T, actual: T) {
        if expected != actual {
            self.failed
                .push(format!("{what}: expected {expected:?}, got {actual:?}"));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn run(protocol: Protocol, scenario: Scenario) -> RunOutcome {
    run_cfg(ScenarioConfig::preset(protocol, scenario, 1).expect("preset"))
}

fn run_cfg(cfg: ScenarioConfig) -> RunOutcome {
    run_scenario(&cfg).expect("valid config")
}

/// First confirmed transaction of `role`, with its height and publisher.
fn confirmed<C: ChainKind>(
    o: &RunOutcome,
    chain: &Ledger<C>,
    role: TxRole,
) -> Option<(SimTransaction<C>, u64, Role)> {
    o.broadcasts_of(role).find_map(|b| {
        let h = chain.confirmed_height(&b.txid)?;
        Some((chain.find_by_id(&b.txid)?.clone(), h, b.publisher))
    })
}

fn secret(o: &RunOutcome, name: &str) -> [u8; 32] {
    o.generated[name].to_le_bytes()
}

fn recovered(o: &RunOutcome, by: Role, name: &str) -> Option<[u8; 32]> {
    o.recovered_by(by, name).map(|s| s.to_le_bytes())
}

fn nonzero_cross(rng: &mut ChaCha20Rng) -> CrossScalar {
    loop {
        let y = CrossScalar::random(rng);
        if y != CrossScalar::ZERO {
            return y;
        }
    }
}

fn be(s: &ScalarQ) -> [u8; 32] {
    let mut b = s.to_le_bytes();
    b.reverse();
    b
}

/// Plain ECDSA check by the `k256` crate, which also insists on low s.
fn k256_verifies(pk: &PointQ, m: &[u8], r: &ScalarQ, s: &ScalarQ) -> bool {
    let Ok(vk) = VerifyingKey::from_sec1_bytes(&pk.encode()) else {
        return false;
    };
    let mut rs = [0u8; 64];
    rs[..32].copy_from_slice(&be(r));
    rs[32..].copy_from_slice(&be(s));
    let Ok(sig) = K256Signature::from_slice(&rs) else {
        return false;
    };
    vk.verify_prehash(&Sha256::digest(m), &sig).is_ok()
}

/// `s·B == R + H(tag, R, P, m)·P` computed directly with dalek.
fn dalek_schnorr_verifies(pk: &PointP, m: &[u8], big_r: &PointP, s: &ScalarP) -> bool {
    let point = |b: [u8; 32]| CompressedEdwardsY(b).decompress();
    let (Some(p), Some(r)) = (point(pk.encode()), point(big_r.encode())) else {
        return false;
    };
    let Some(s) = Option::<DalekScalar>::from(DalekScalar::from_canonical_bytes(s.to_le_bytes()))
    else {
        return false;
    };
    let mut h = Sha512::new();
    for part in [
        &b"xswap/schnorr-challenge/v1"[..],
        &big_r.encode(),
        &pk.encode(),
        m,
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    let c = DalekScalar::from_bytes_mod_order_wide(&h.finalize().into());
    EdwardsPoint::mul_base(&s) == r + c * p
}

fn crypto_round_trips() -> Crit {
    let mut c = Crit::default();
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0xacce_0001);

    let (mut e_fail, mut negated) = (Vec::new(), 0);
    for i in 0..ADAPTOR_CASES {
        let x = ScalarQ::random_nonzero(&mut rng);
        let y = nonzero_cross(&mut rng);
        let (pk, enc_key) = (PointQ::mul_base(&x), PointQ::mul_base(&y.to_q()));
        let m = format!("acceptance ecdsa {i}");
        let es = ecdsa_enc_sign(&x, &enc_key, m.as_bytes()).expect("nonzero key");
        let ok_enc = ecdsa_enc_verify(&pk, &enc_key, m.as_bytes(), &es);
        let sig = ecdsa_dec_sig(&y, &es).expect("matching key");
        // r is the x-coordinate of y·R; s is s̃/y up to sign.
        let raw_s = es.s_tilde * y.to_q().invert().expect("nonzero");
        let r_ok = (es.big_r * y.to_q()).x_scalar() == Some(sig.r);
        let s_ok = sig.s == raw_s || sig.s == -raw_s;
        negated += usize::from(sig.s != raw_s);
        let ok_dec = k256_verifies(&pk, m.as_bytes(), &sig.r, &sig.s) && r_ok && s_ok;
        let ok_rec = ecdsa_rec_key(&sig, &es, &enc_key)
            .is_ok_and(|r| r.to_le_bytes() == y.to_le_bytes());
        if !(ok_enc && ok_dec && ok_rec) {
            e_fail.push(format!("ecdsa case {i}: enc {ok_enc} dec {ok_dec} rec {ok_rec}"));
        }
    }
    c.check(format!("ecdsa failures: {e_fail:?}"), e_fail.is_empty());
    c.check("ecdsa suite exercised both signs of s", negated > 0 && negated < ADAPTOR_CASES);

    let mut s_fail = Vec::new();
    for i in 0..ADAPTOR_CASES {
        let x = ScalarP::random_nonzero(&mut rng);
        let y = nonzero_cross(&mut rng);
        let (pk, enc_key) = (PointP::mul_base(&x), PointP::mul_base(&y.to_p()));
        let m = format!("acceptance schnorr {i}");
        let es = schnorr_enc_sign(&x, &enc_key, m.as_bytes()).expect("nonzero key");
        let ok_enc = schnorr_enc_verify(&pk, &enc_key, m.as_bytes(), &es);
        let sig = schnorr_dec_sig(&y, &es).expect("matching key");
        let ok_dec = dalek_schnorr_verifies(&pk, m.as_bytes(), &sig.big_r, &sig.s);
        let ok_rec = schnorr_rec_key(&sig, &es).is_ok_and(|r| r.to_le_bytes() == y.to_le_bytes());
        if !(ok_enc && ok_dec && ok_rec) {
            s_fail.push(format!("schnorr case {i}: enc {ok_enc} dec {ok_dec} rec {ok_rec}"));
        }
    }
    c.check(format!("schnorr failures: {s_fail:?}"), s_fail.is_empty());

    let elapsed = start.elapsed();
    c.check(format!("runtime {elapsed:?} under 60 s"), elapsed < Duration::from_secs(60));
    c.note(format!(
        "{ADAPTOR_CASES}+{ADAPTOR_CASES} cases, {negated} negated-s, {:.1}s",
        elapsed.as_secs_f64()
    ));
    c
}

fn bump_cross(s: &CrossScalar) -> CrossScalar {
    let mut b = s.to_le_bytes();
    b[0] ^= 1;
    CrossScalar::from_le_bytes(&b).expect("bit 0 flip stays in range")
}

/// Every single-field modification of `proof`, labelled.
fn tampered(proof: &CrossGroupDleqProof) -> impl Iterator<Item = (String, CrossGroupDleqProof)> + '_ {
    let (gq, gp) = (PointQ::generator(), PointP::generator());
    let per_bit = (0..CROSS_SCALAR_BITS).flat_map(move |i| {
        (0..7).map(move |field| {
            let mut t = proof.clone();
            let b = &mut t.bits[i];
            let name = match field {
                0 => {
                    b.commitment_q = b.commitment_q + gq;
                    "commitment_q"
                }
                1 => {
                    b.commitment_p = b.commitment_p + gp;
                    "commitment_p"
                }
                2 => {
                    b.challenge_zero = bump_cross(&b.challenge_zero);
                    "challenge_zero"
                }
                3 => {
                    b.response_zero_q = b.response_zero_q + ScalarQ::ONE;
                    "response_zero_q"
                }
                4 => {
                    b.response_zero_p = b.response_zero_p + ScalarP::ONE;
                    "response_zero_p"
                }
                5 => {
                    b.response_one_q = b.response_one_q + ScalarQ::ONE;
                    "response_one_q"
                }
                _ => {
                    b.response_one_p = b.response_one_p + ScalarP::ONE;
                    "response_one_p"
                }
            };
            (format!("bit {i} {name}"), t)
        })
    });
    let mut tail = Vec::new();
    let mut t = proof.clone();
    t.blinder_q = t.blinder_q + ScalarQ::ONE;
    tail.push(("blinder_q".to_string(), t));
    let mut t = proof.clone();
    t.blinder_p = t.blinder_p + ScalarP::ONE;
    tail.push(("blinder_p".to_string(), t));
    let mut t = proof.clone();
    t.challenge = bump_cross(&t.challenge);
    tail.push(("challenge".to_string(), t));
    per_bit.chain(tail)
}

fn cross_group_dleq() -> Crit {
    let mut c = Crit::default();
    let mut rng = ChaCha20Rng::seed_from_u64(0xacce_0002);
    let mut secrets = vec![CrossScalar::ZERO, CrossScalar::max()];
    while secrets.len() < DLEQ_CASES {
        secrets.push(CrossScalar::random(&mut rng));
    }
    let mut first = None;
    let (mut honest_ok, mut sizes) = (0, std::collections::BTreeSet::new());
    for s in &secrets {
        let (q, p, proof) = dleq_prove(s, &mut rng);
        c.check(
            format!("statement points for {:?}", s.to_le_bytes()),
            q == PointQ::mul_base(&s.to_q()) && p == PointP::mul_base(&s.to_p()),
        );
        honest_ok += usize::from(proof.verify(&q, &p).is_ok());
        let bytes = proof_encode(&proof);
        sizes.insert(bytes.len());
        c.check("encoding round trips", proof_decode(&bytes).as_ref() == Ok(&proof));
        first.get_or_insert((q, p, proof, bytes));
    }
    c.eq("honest proofs verifying", DLEQ_CASES, honest_ok);
    c.eq("distinct proof sizes", vec![PROOF_LEN], sizes.into_iter().collect());

    let (q, p, proof, bytes) = first.expect("at least one proof");
    let (mut total, mut accepted) = (0, Vec::new());
    for (name, t) in tampered(&proof) {
        total += 1;
        if t.verify(&q, &p).is_ok() {
            accepted.push(name);
        }
    }
    for (name, q2, p2) in [
        ("btc point", q + PointQ::generator(), p),
        ("xmr point", q, p + PointP::generator()),
    ] {
        total += 1;
        if proof.verify(&q2, &p2).is_ok() {
            accepted.push(name.to_string());
        }
    }
    c.eq("fields tampered", CROSS_SCALAR_BITS * 7 + 3 + 2, total);
    c.check(format!("tampered proofs accepted: {accepted:?}"), accepted.is_empty());
    for len in [PROOF_LEN - 1, PROOF_LEN + 1] {
        let mut b = bytes.clone();
        b.resize(len, 0);
        c.check(format!("{len}-byte proof rejected"), proof_decode(&b).is_err());
    }
    c.note(format!(
        "{honest_ok}/{DLEQ_CASES} honest, {}/{total} tampered rejected, {PROOF_LEN} bytes",
        total - accepted.len()
    ));
    c
}

fn btc_xmr_happy() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::BtcXmr, Scenario::Happy);
    let prm = &o.config.params;
    c.eq("states", ("redeemed", "redeemed"), (&*o.alice_state, &*o.bob_state));
    match confirmed(&o, &o.btc, TxRole::BtcRedeem) {
        Some((tx, _, by)) => {
            c.eq("btc_redeem publisher", Role::Alice, by);
            c.eq("btc_redeem output", prm.amt_btc - prm.fee, tx.output_value());
        }
        None => c.check("btc_redeem confirmed", false),
    }
    c.eq("alice btc delta", (prm.amt_btc - prm.fee) as i64, o.balances.alice.btc);
    match confirmed(&o, &o.xmr, TxRole::XmrSweep) {
        Some((tx, _, by)) => {
            c.eq("xmr sweep publisher", Role::Bob, by);
            c.eq("xmr sweep output", prm.amt_xmr - prm.xmr_fee, tx.output_value());
            let joint = o.generated["s_a"].to_p() + o.generated["s_b"].to_p();
            let signer = tx.witness.first().map(|w| w.key);
            c.eq("sweep signed by s_a + s_b", Some(PointP::mul_base(&joint)), signer);
        }
        None => c.check("xmr sweep confirmed", false),
    }
    c.eq("bob xmr delta", (prm.amt_xmr - prm.xmr_fee) as i64, o.balances.bob.xmr);
    c.eq("bob's recovered s_a", Some(secret(&o, "s_a")), recovered(&o, Role::Bob, "s_a"));
    c.note(format!(
        "alice +{} sat, bob +{} pico",
        o.balances.alice.btc, o.balances.bob.xmr
    ));
    c
}

fn btc_xmr_refund() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::BtcXmr, Scenario::NoEncsig);
    let prm = &o.config.params;
    c.eq("states", ("refunded", "refunded"), (&*o.alice_state, &*o.bob_state));
    let lock = confirmed(&o, &o.btc, TxRole::BtcLock);
    let cancel = confirmed(&o, &o.btc, TxRole::BtcCancel);
    let refund = confirmed(&o, &o.btc, TxRole::BtcRefund);
    match (lock, cancel, refund) {
        (Some((_, hl, _)), Some((ctx, hc, _)), Some((rtx, hr, _))) => {
            c.check(format!("cancel at {hc} is t1 past lock at {hl}"), hc - hl >= prm.t1 as u64);
            c.eq("cancel timelock", prm.t1, ctx.rel_timelock);
            c.check("refund after cancel", hr > hc);
            c.eq("refund to bob", prm.amt_btc - 2 * prm.fee, rtx.output_value());
        }
        _ => c.check("lock, cancel and refund all confirmed", false),
    }
    c.eq("alice's recovered s_b", Some(secret(&o, "s_b")), recovered(&o, Role::Alice, "s_b"));
    match confirmed(&o, &o.xmr, TxRole::XmrSweep) {
        Some((tx, _, by)) => {
            c.eq("xmr sweep publisher", Role::Alice, by);
            c.eq("xmr sweep output", prm.amt_xmr - prm.xmr_fee, tx.output_value());
        }
        None => c.check("alice swept the monero", false),
    }
    let (f, xf) = (prm.fee as i64, prm.xmr_fee as i64);
    c.eq("alice (btc, xmr)", (0, -2 * xf), (o.balances.alice.btc, o.balances.alice.xmr));
    c.eq("bob (btc, xmr)", (-3 * f, 0), (o.balances.bob.btc, o.balances.bob.xmr));
    c.note(format!(
        "bob refunded {} sat, alice -{} pico, bob -{} sat in fees",
        prm.amt_btc - 2 * prm.fee,
        2 * xf,
        3 * f
    ));
    c
}

fn btc_xmr_punish() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::BtcXmr, Scenario::BobSilentAfterCancel);
    let prm = &o.config.params;
    c.eq("states", ("punished", "punished"), (&*o.alice_state, &*o.bob_state));
    match (
        confirmed(&o, &o.btc, TxRole::BtcCancel),
        confirmed(&o, &o.btc, TxRole::BtcPunish),
    ) {
        (Some((_, hc, _)), Some((ptx, hp, by))) => {
            c.check(format!("punish at {hp} is t2 past cancel at {hc}"), hp - hc >= prm.t2 as u64);
            c.eq("punish publisher", Role::Alice, by);
            c.eq("punish output", prm.amt_btc - 2 * prm.fee, ptx.output_value());
        }
        _ => c.check("cancel and punish confirmed", false),
    }
    c.eq("alice btc delta", (prm.amt_btc - 2 * prm.fee) as i64, o.balances.alice.btc);
    let Some((lock_tx, _, _)) = confirmed(&o, &o.xmr, TxRole::XmrLock) else {
        c.check("xmr lock confirmed", false);
        return c;
    };
    let lock = lock_tx.outpoint(0);
    c.check("xmr lock still unspent", o.xmr.is_unspent(&lock));
    let (s_a, s_b) = (o.generated["s_a"].to_p(), o.generated["s_b"].to_p());
    let to = PointP::mul_base(&ScalarP::from_u64(7));
    let attempt = |key: ScalarP| {
        let mut xmr = o.xmr.clone();
        xmr.broadcast(build_xmr_sweep(prm, lock, &key, to)).is_ok()
    };
    c.check("sweep with alice's share alone rejected", !attempt(s_a));
    c.check("sweep with bob's share alone rejected", !attempt(s_b));
    c.check("sweep with both shares accepted", attempt(s_a + s_b));
    c.note(format!("alice +{} sat, monero lock frozen", o.balances.alice.btc));
    c
}

fn front_run() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::BtcXmr, Scenario::FrontRun);
    c.eq("margin", 0, o.config.params.redeem_safety_margin);
    c.eq("adversarial priority", vec![TxRole::BtcCancel], o.config.mining.priority.clone());
    c.check("alice broadcast btc_redeem", o.broadcasts_of(TxRole::BtcRedeem).next().is_some());
    c.check("btc_cancel confirmed", o.confirmed(TxRole::BtcCancel));
    c.check("btc_redeem never confirmed", !o.confirmed(TxRole::BtcRedeem));
    c.check("btc_refund confirmed", o.confirmed(TxRole::BtcRefund));
    let sweep = confirmed(&o, &o.xmr, TxRole::XmrSweep);
    c.check("monero lock reclaimed", sweep.is_some());
    let winner = sweep.map(|(_, _, by)| by);
    c.eq("bob's recovered s_a", Some(secret(&o, "s_a")), recovered(&o, Role::Bob, "s_a"));
    c.check("oracle", o.passed());

    let mut cfg = ScenarioConfig::preset(Protocol::BtcXmr, Scenario::FrontRun, 1).expect("preset");
    cfg.params.redeem_safety_margin = 2;
    let safe = run_cfg(cfg);
    c.eq("btc_redeem broadcasts with margin", 0, safe.broadcasts_of(TxRole::BtcRedeem).count());
    c.check("refund confirmed with margin", safe.confirmed(TxRole::BtcRefund));
    c.eq(
        "monero reclaimed by alice with margin",
        Some(Role::Alice),
        confirmed(&safe, &safe.xmr, TxRole::XmrSweep).map(|(_, _, by)| by),
    );
    c.check("oracle with margin", safe.passed());
    c.note(format!(
        "margin 0: cancel won, monero swept by {}; margin 2: {} / {}",
        winner.map_or("nobody", Role::name),
        safe.alice_state,
        safe.bob_state
    ));
    c
}

/// On a fresh chain a `t2`-locked spend confirms exactly `t2` blocks after
/// its parent.
fn timelock_depth(t2: u32) -> Option<u64> {
    let x = ScalarQ::from_u64(99);
    let key = PointQ::mul_base(&x);
    let mut chain = BtcChain::new();
    let parent = chain.faucet(SimOutput::with_clauses(
        10_000,
        vec![SpendClause::single(key).with_timelock(t2)],
    ));
    let mut tx = SimTransaction::spend(parent, 0, vec![SimOutput::to_key(9_000, key)], 1_000)
        .with_timelock(t2);
    let sig = ecdsa_sign(&x, &tx.sighash()).ok()?;
    tx.push_signature(key, sig);
    chain.broadcast(tx.clone()).ok()?;
    for _ in 0..3 * t2 {
        chain.mine_block(&[]);
    }
    Some(chain.confirmed_height(&tx.txid())? - chain.confirmed_height(&parent.txid)?)
}

fn xmr_btc_happy() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::XmrBtc, Scenario::Happy);
    let prm = &o.config.params;
    c.eq("states", ("btc_taken", "xmr_redeemed"), (&*o.alice_state, &*o.bob_state));
    match (
        confirmed(&o, &o.btc, TxRole::BtcRedeem),
        confirmed(&o, &o.btc, TxRole::BtcTake),
    ) {
        (Some((rtx, hr, _)), Some((ttx, ht, by))) => {
            c.eq("btc_take publisher", Role::Alice, by);
            c.eq("btc_take spends btc_redeem", Some(rtx.outpoint(0)), ttx.prev());
            c.eq("btc_take timelock", prm.t2, ttx.rel_timelock);
            c.eq(
                "btc_redeem take clause timelock",
                Some(prm.t2),
                rtx.outputs.first().and_then(|o| o.clauses.first()).map(|cl| cl.rel_timelock),
            );
            c.check(format!("btc_take at {ht} is t2 past btc_redeem at {hr}"), ht - hr >= prm.t2 as u64);
            c.eq("btc_take output", prm.amt_btc - 2 * prm.fee, ttx.output_value());
        }
        _ => c.check("btc_redeem and btc_take confirmed", false),
    }
    c.eq("t2 spend depth on a bare chain", Some(prm.t2 as u64), timelock_depth(prm.t2));
    c.eq("alice btc delta", (prm.amt_btc - 2 * prm.fee) as i64, o.balances.alice.btc);
    match confirmed(&o, &o.xmr, TxRole::XmrRedeem) {
        Some((tx, _, by)) => {
            c.eq("xmr_redeem publisher", Role::Bob, by);
            c.eq("xmr_redeem output", prm.amt_xmr - prm.xmr_fee, tx.output_value());
        }
        None => c.check("xmr_redeem confirmed", false),
    }
    c.eq("bob xmr delta", (prm.amt_xmr - prm.xmr_fee) as i64, o.balances.bob.xmr);
    c.eq("bob's recovered s_A", Some(secret(&o, "s_A")), recovered(&o, Role::Bob, "s_A"));
    c.note(format!(
        "alice +{} sat, bob +{} pico",
        o.balances.alice.btc, o.balances.bob.xmr
    ));
    c
}

fn draining() -> Crit {
    let mut c = Crit::default();
    let o = run(Protocol::XmrBtc, Scenario::BobNeverLocks);
    c.eq("bob btc fees", 0, o.fees_published(Role::Bob).btc);
    c.eq("bob btc delta", 0, o.balances.bob.btc);
    let bob_btc = o
        .broadcasts
        .iter()
        .filter(|b| b.publisher == Role::Bob && b.role.is_btc())
        .count();
    c.eq("bob btc broadcasts", 0, bob_btc);
    c.check("bob terminal", o.bob_terminal);
    c.note(format!(
        "bob spent 0 sat; alice paid {} pico",
        -o.balances.alice.xmr
    ));
    c
}

/// Fees of confirmed transactions descending from `root`.
fn tree_fees<C: ChainKind>(chain: &Ledger<C>, root: OutPoint) -> u64 {
    let mut stack = vec![root];
    let mut fees = 0;
    while let Some(op) = stack.pop() {
        let Some(txid) = chain.spender_of(&op) else {
            continue;
        };
        let Some(tx) = chain.find_by_id(&txid).filter(|_| chain.is_confirmed(&txid)) else {
            continue;
        };
        fees += tx.fee;
        stack.extend((0..tx.outputs.len() as u32).map(|v| tx.outpoint(v)));
    }
    fees
}

/// Balance deltas with every fee on the party's own funding added back.
fn fee_neutral(o: &RunOutcome) -> [i64; 4] {
    let btc_root = confirmed(o, &o.btc, TxRole::BtcLock).and_then(|(tx, _, _)| tx.prev());
    let xmr_root = confirmed(o, &o.xmr, TxRole::XmrLock).and_then(|(tx, _, _)| tx.prev());
    let btc_fees = btc_root.map_or(0, |r| tree_fees(&o.btc, r)) as i64;
    let xmr_fees = xmr_root.map_or(0, |r| tree_fees(&o.xmr, r)) as i64;
    let b = o.balances;
    [b.alice.btc, b.alice.xmr + xmr_fees, b.bob.btc + btc_fees, b.bob.xmr]
}

fn raw(o: &RunOutcome) -> [i64; 4] {
    let b = o.balances;
    [b.alice.btc, b.alice.xmr, b.bob.btc, b.bob.xmr]
}

fn cheat_path() -> Crit {
    let mut c = Crit::default();
    let cheat = run(Protocol::XmrBtc, Scenario::AliceCheats);
    let coop = run(Protocol::XmrBtc, Scenario::AliceNoRedeem);
    let f = cheat.config.params.fee as i64;
    c.check("alice_cheats oracle", cheat.passed());
    c.check("refund run oracle", coop.passed());
    c.check("btc_emergency confirmed", cheat.confirmed(TxRole::BtcEmergency));
    c.eq("fee-neutral balances vs refund run", fee_neutral(&coop), fee_neutral(&cheat));
    let (a, b) = (raw(&cheat), raw(&coop));
    c.eq("raw difference (one extra btc fee for bob)", [0, 0, -f, 0], [
        a[0] - b[0],
        a[1] - b[1],
        a[2] - b[2],
        a[3] - b[3],
    ]);

    let off = run(Protocol::XmrBtc, Scenario::AliceCheatsBobOffline);
    let prm = &off.config.params;
    let (amt, xf) = (prm.amt_btc as i64, prm.xmr_fee as i64);
    c.eq("offline: alice (btc, xmr)", (amt - 2 * f, -2 * xf), (off.balances.alice.btc, off.balances.alice.xmr));
    c.eq("offline: bob (btc, xmr)", (-(amt + f), 0), (off.balances.bob.btc, off.balances.bob.xmr));
    c.eq("offline: emergency broadcasts", 0, off.broadcasts_of(TxRole::BtcEmergency).count());
    c.note(format!(
        "cheat {:?} == refund {:?} fee-neutral; raw {:?} vs {:?}; offline bob loses {} sat",
        fee_neutral(&cheat),
        fee_neutral(&coop),
        a,
        b,
        -off.balances.bob.btc
    ));
    c
}

fn golden_path(p: Protocol, s: Scenario) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{p}_{s}.sha256"))
}

fn determinism() -> Crit {
    let mut c = Crit::default();
    let bless = std::env::var_os("XSWAP_BLESS").is_some();
    let mut n = 0;
    for p in Protocol::ALL {
        for s in Scenario::for_protocol(p) {
            n += 1;
            let digests: Vec<String> = (0..REPEATS).map(|_| run(p, s).digest()).collect();
            c.check(
                format!("{p}/{s} digests vary: {digests:?}"),
                digests.iter().all(|d| *d == digests[0]),
            );
            let path = golden_path(p, s);
            if bless {
                std::fs::create_dir_all(path.parent().expect("has parent")).expect("mkdir");
                std::fs::write(&path, format!("{}\n", digests[0])).expect("write golden");
            }
            match std::fs::read_to_string(&path) {
                Ok(g) => c.eq(&format!("{p}/{s} golden"), g.trim(), digests[0].as_str()),
                Err(e) => c.check(format!("{}: {e}", path.display()), false),
            }
        }
    }
    c.note(format!("{n} scenarios x {REPEATS} runs"));
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Crit); 10] = [
        ("adaptor signature round trips", crypto_round_trips),
        ("cross-group DLEQ", cross_group_dleq),
        ("btc_xmr happy path", btc_xmr_happy),
        ("btc_xmr refund path", btc_xmr_refund),
        ("btc_xmr punish path", btc_xmr_punish),
        ("btc_xmr front-run", front_run),
        ("xmr_btc happy path", xmr_btc_happy),
        ("xmr_btc draining asymmetry", draining),
        ("xmr_btc cheat path", cheat_path),
        ("transcript determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("XSWAP_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (title, f)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let crit = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Crit {
            failed: vec!["panicked".into()],
            notes: Vec::new(),
        });
        let pass = crit.failed.is_empty();
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2}  {}  {title}  [{}] ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            crit.notes.join("; "),
            start.elapsed().as_secs_f64()
        );
        for f in &crit.failed {
            println!("      - {f}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
