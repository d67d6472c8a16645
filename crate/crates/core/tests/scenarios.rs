use xswap_core::harness::{run_scenario, Protocol, RunOutcome, Scenario, ScenarioConfig};

fn run(protocol: Protocol, scenario: Scenario, seed: u64) -> RunOutcome {
    let cfg = ScenarioConfig::preset(protocol, scenario, seed).unwrap();
    run_scenario(&cfg).unwrap()
}

fn assert_pass(o: &RunOutcome) {
    let failed: Vec<_> = o.oracle.failures().collect();
    assert!(
        failed.is_empty(),
        "{}/{} seed {}: {failed:#?}\nstates {} / {} after {} ticks",
        o.config.protocol,
        o.config.scenario,
        o.config.seed,
        o.alice_state,
        o.bob_state,
        o.ticks
    );
}

#[test]
fn every_scenario_meets_its_oracle() {
    for protocol in Protocol::ALL {
        for scenario in Scenario::for_protocol(protocol) {
            let o = run(protocol, scenario, 1);
            assert_pass(&o);
            assert!(o.alice_terminal || scenario == Scenario::AliceCheatsBobOffline);
        }
    }
}

#[test]
fn front_run_with_margin_stays_out_of_the_race() {
    let mut cfg = ScenarioConfig::preset(Protocol::BtcXmr, Scenario::FrontRun, 1).unwrap();
    cfg.params.redeem_safety_margin = 2;
    let o = run_scenario(&cfg).unwrap();
    assert_pass(&o);
    assert_eq!(o.alice_state, "refunded");
}

#[test]
fn other_seeds_also_pass() {
    for seed in [2, 7, 1234] {
        for protocol in Protocol::ALL {
            for scenario in Scenario::for_protocol(protocol) {
                assert_pass(&run(protocol, scenario, seed));
            }
        }
    }
}

#[test]
fn same_config_same_transcript() {
    let a = run(Protocol::XmrBtc, Scenario::AliceCheats, 5);
    let b = run(Protocol::XmrBtc, Scenario::AliceCheats, 5);
    assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
    let c = run(Protocol::XmrBtc, Scenario::AliceCheats, 6);
    assert_ne!(a.digest(), c.digest());
}
