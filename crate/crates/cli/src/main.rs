//! `xswap`: run swap scenarios, check DLEQ proofs, run the self test.
//!
//! Exit codes: 0 when every oracle passes, 2 when one fails, 1 on usage or
//! I/O errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use xswap_core::dleq::{dleq_prove, proof_decode, proof_encode};
use xswap_core::groups::{CrossScalar, PointP, PointQ};
use xswap_core::harness::{
    default_seed, run_scenario, selftest, Protocol, Scenario, ScenarioConfig, SelftestOptions,
};

const EXIT_USAGE: u8 = 1;
const EXIT_ORACLE: u8 = 2;

#[derive(Parser)]
#[command(name = "xswap", version, about = "Bitcoin/Monero atomic swaps on simulated chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and check its outcome table.
    Run {
        /// btc_xmr or xmr_btc. Inferred from the scenario when unambiguous.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
        /// Defaults to $XSWAP_SEED, then 1.
        #[arg(long)]
        seed: Option<u64>,
        /// JSON scenario config; flags given alongside override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSONL transcript here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a cross-group DLEQ proof file.
    VerifyProof { file: PathBuf },
    /// Write a fresh DLEQ proof file.
    Prove {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property suite and every scenario.
    Selftest {
        /// Fewer cases; for smoke tests.
        #[arg(long)]
        quick: bool,
    },
}

/// On-disk proof: both public points and the proof, hex encoded.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProofFile {
    btc_point: String,
    xmr_point: String,
    proof: String,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run {
            protocol,
            scenario,
            seed,
            config,
            out,
        } => run(protocol, scenario, seed, config, out),
        Command::VerifyProof { file } => verify_proof(&file),
        Command::Prove { seed, out } => prove(seed, &out),
        Command::Selftest { quick } => run_selftest(quick),
    }
}

fn build_config(
    protocol: Option<String>,
    scenario: Option<String>,
    seed: Option<u64>,
    config: Option<PathBuf>,
) -> Result<ScenarioConfig, String> {
    let protocol = protocol
        .map(|p| p.parse::<Protocol>())
        .transpose()
        .map_err(|e| e.to_string())?;
    let scenario = scenario
        .map(|s| s.parse::<Scenario>())
        .transpose()
        .map_err(|e| e.to_string())?;
    let mut cfg = match config {
        Some(path) => {
            let text =
                fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            ScenarioConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => {
            let scenario = scenario.ok_or("run needs --scenario or --config")?;
            let protocol = protocol.unwrap_or_else(|| infer_protocol(scenario));
            let seed = match seed {
                Some(s) => s,
                None => default_seed().map_err(|e| e.to_string())?,
            };
            ScenarioConfig::preset(protocol, scenario, seed).map_err(|e| e.to_string())?
        }
    };
    if let Some(p) = protocol {
        cfg.protocol = p;
    }
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// The only protocol defining `scenario`, or btc_xmr for shared names.
fn infer_protocol(scenario: Scenario) -> Protocol {
    match Protocol::ALL.into_iter().filter(|p| scenario.valid_for(*p)).collect::<Vec<_>>()[..] {
        [only] => only,
        _ => Protocol::BtcXmr,
    }
}

fn run(
    protocol: Option<String>,
    scenario: Option<String>,
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> ExitCode {
    let cfg = match build_config(protocol, scenario, seed, config) {
        Ok(cfg) => cfg,
        Err(e) => return usage(e),
    };
    let outcome = match run_scenario(&cfg) {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    if let Some(path) = out {
        if let Err(e) = fs::write(&path, outcome.transcript.to_jsonl()) {
            return usage(format!("{}: {e}", path.display()));
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.summary_json()).expect("summary serializes")
    );
    for c in outcome.oracle.failures() {
        eprintln!("oracle failed: {}: expected {}, got {}", c.name, c.expected, c.actual);
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ORACLE)
    }
}

fn verify_proof(path: &PathBuf) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage(format!("{}: {e}", path.display())),
    };
    let file: ProofFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => return usage(format!("{}: {e}", path.display())),
    };
    let checked = (|| -> Result<(), String> {
        let q = hex::decode(&file.btc_point).map_err(|e| format!("btc_point: {e}"))?;
        let p = hex::decode(&file.xmr_point).map_err(|e| format!("xmr_point: {e}"))?;
        let proof = hex::decode(&file.proof).map_err(|e| format!("proof: {e}"))?;
        let q = PointQ::decode(&q).map_err(|e| format!("btc_point: {e}"))?;
        let p = PointP::decode(&p).map_err(|e| format!("xmr_point: {e}"))?;
        let proof = proof_decode(&proof).map_err(|e| format!("proof: {e}"))?;
        proof.verify(&q, &p).map_err(|e| e.to_string())
    })();
    match checked {
        Ok(()) => {
            println!("valid");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("invalid: {e}");
            ExitCode::from(EXIT_ORACLE)
        }
    }
}

fn prove(seed: Option<u64>, out: &PathBuf) -> ExitCode {
    let seed = match seed.map_or_else(default_seed, Ok) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let s = loop {
        let s = CrossScalar::random(&mut rng);
        if s != CrossScalar::ZERO {
            break s;
        }
    };
    let (q, p, proof) = dleq_prove(&s, &mut rng);
    let file = ProofFile {
        btc_point: hex::encode(q.encode()),
        xmr_point: hex::encode(p.encode()),
        proof: hex::encode(proof_encode(&proof)),
    };
    let text = serde_json::to_string_pretty(&file).expect("proof file serializes");
    if let Err(e) = fs::write(out, text + "\n") {
        return usage(format!("{}: {e}", out.display()));
    }
    println!("{}", out.display());
    ExitCode::SUCCESS
}

fn run_selftest(quick: bool) -> ExitCode {
    let opts = if quick {
        SelftestOptions::quick()
    } else {
        SelftestOptions::full()
    };
    let checks = selftest(opts);
    for c in &checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        println!("{mark}  {}  ({})", c.name, c.actual);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ORACLE)
    }
}
