use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::config::{Protocol, Scenario, ScenarioConfig};
use super::oracle::Check;
use super::run_scenario;
use crate::adaptors::{
    ecdsa_dec_sig, ecdsa_enc_sign, ecdsa_enc_verify, ecdsa_rec_key, ecdsa_verify, schnorr_dec_sig,
    schnorr_enc_sign, schnorr_enc_verify, schnorr_rec_key, schnorr_verify,
};
use crate::dleq::{dleq_prove, proof_decode, proof_encode, PROOF_LEN};
use crate::groups::{CrossScalar, PointP, PointQ, ScalarP, ScalarQ};

/// How much of the property suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestOptions {
    pub adaptor_cases: usize,
    pub dleq_cases: usize,
    /// Bytes flipped per tampered proof.
    pub tamper_positions: usize,
    pub seed: u64,
}

impl SelftestOptions {
    pub fn full() -> Self {
        Self {
            adaptor_cases: 1000,
            dleq_cases: 100,
            tamper_positions: 64,
            seed: 1,
        }
    }

    pub fn quick() -> Self {
        Self {
            adaptor_cases: 50,
            dleq_cases: 4,
            tamper_positions: 8,
            seed: 1,
        }
    }
}

fn nonzero_cross(rng: &mut ChaCha20Rng) -> CrossScalar {
    loop {
        let y = CrossScalar::random(rng);
        if y != CrossScalar::ZERO {
            return y;
        }
    }
}

fn ecdsa_round_trips(n: usize, rng: &mut ChaCha20Rng) -> Check {
    let mut failures = 0;
    let mut negated = 0;
    for i in 0..n {
        let x = ScalarQ::random_nonzero(rng);
        let y = nonzero_cross(rng);
        let (pk, enc_key) = (PointQ::mul_base(&x), PointQ::mul_base(&y.to_q()));
        let m = (i as u64).to_le_bytes();
        let ok = (|| {
            let es = ecdsa_enc_sign(&x, &enc_key, &m).ok()?;
            ecdsa_enc_verify(&pk, &enc_key, &m, &es).then_some(())?;
            let sig = ecdsa_dec_sig(&y, &es).ok()?;
            ecdsa_verify(&pk, &m, &sig).then_some(())?;
            if sig.s != es.s_tilde * y.to_q().invert()? {
                negated += 1;
            }
            (ecdsa_rec_key(&sig, &es, &enc_key).ok()? == y).then_some(())
        })();
        failures += usize::from(ok.is_none());
    }
    Check::holds(
        format!("ecdsa adaptor round trips ({n})"),
        failures == 0,
        format!("{failures} failures, {negated} negated-s cases"),
    )
}

fn schnorr_round_trips(n: usize, rng: &mut ChaCha20Rng) -> Check {
    let mut failures = 0;
    for i in 0..n {
        let x = ScalarP::random_nonzero(rng);
        let y = nonzero_cross(rng);
        let (pk, enc_key) = (PointP::mul_base(&x), PointP::mul_base(&y.to_p()));
        let m = (i as u64).to_le_bytes();
        let ok = (|| {
            let es = schnorr_enc_sign(&x, &enc_key, &m).ok()?;
            schnorr_enc_verify(&pk, &enc_key, &m, &es).then_some(())?;
            let sig = schnorr_dec_sig(&y, &es).ok()?;
            schnorr_verify(&pk, &m, &sig).then_some(())?;
            (schnorr_rec_key(&sig, &es).ok()? == y).then_some(())
        })();
        failures += usize::from(ok.is_none());
    }
    Check::holds(
        format!("schnorr adaptor round trips ({n})"),
        failures == 0,
        format!("{failures} failures"),
    )
}

fn dleq_checks(opts: &SelftestOptions, rng: &mut ChaCha20Rng) -> Vec<Check> {
    let mut honest_fail = 0;
    let mut wrong_len = 0;
    let mut tamper_accepted = 0;
    let mut tampered = 0;
    for i in 0..opts.dleq_cases {
        let s = nonzero_cross(rng);
        let (q, p, proof) = dleq_prove(&s, rng);
        if proof.verify(&q, &p).is_err() {
            honest_fail += 1;
        }
        let bytes = proof_encode(&proof);
        if bytes.len() != PROOF_LEN {
            wrong_len += 1;
        }
        // Tamper the first proof thoroughly, the rest lightly.
        let positions = if i == 0 { opts.tamper_positions } else { 2 };
        for _ in 0..positions {
            let mut t = bytes.clone();
            let at = (rng.next_u32() as usize) % t.len();
            t[at] ^= 1 << (rng.next_u32() % 8);
            tampered += 1;
            if proof_decode(&t).is_ok_and(|d| d.verify(&q, &p).is_ok()) {
                tamper_accepted += 1;
            }
        }
    }
    vec![
        Check::holds(
            format!("dleq honest proofs verify ({})", opts.dleq_cases),
            honest_fail == 0,
            format!("{honest_fail} failures"),
        ),
        Check::holds(
            format!("dleq proof size is {PROOF_LEN} bytes"),
            wrong_len == 0,
            format!("{wrong_len} off-size"),
        ),
        Check::holds(
            format!("dleq tampered proofs rejected ({tampered})"),
            tamper_accepted == 0,
            format!("{tamper_accepted} accepted"),
        ),
    ]
}

fn scenario_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for protocol in Protocol::ALL {
        for scenario in Scenario::for_protocol(protocol) {
            let cfg = ScenarioConfig::preset(protocol, scenario, seed).expect("valid preset");
            let first = run_scenario(&cfg).expect("valid preset");
            let again = run_scenario(&cfg).expect("valid preset");
            let failed: Vec<_> = first.oracle.failures().map(|c| c.name.clone()).collect();
            out.push(Check::holds(
                format!("{protocol}/{scenario} oracle"),
                failed.is_empty(),
                if failed.is_empty() {
                    format!("{} / {}", first.alice_state, first.bob_state)
                } else {
                    failed.join(", ")
                },
            ));
            out.push(Check::new(
                format!("{protocol}/{scenario} replay digest"),
                first.digest(),
                again.digest(),
            ));
        }
    }
    out
}

/// Crypto round trips, DLEQ soundness spot checks and every scenario oracle.
pub fn selftest(opts: SelftestOptions) -> Vec<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut checks = vec![
        ecdsa_round_trips(opts.adaptor_cases, &mut rng),
        schnorr_round_trips(opts.adaptor_cases, &mut rng),
    ];
    checks.extend(dleq_checks(&opts, &mut rng));
    checks.extend(scenario_checks(opts.seed));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_selftest_passes() {
        let checks = selftest(SelftestOptions::quick());
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }
}
