use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::params::{ParamsError, SwapParams};
use crate::protocol::{Role, TxRole};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "XSWAP_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Alice sells monero for bitcoin, Bob locks first.
    BtcXmr,
    /// Alice locks monero first and ends with the bitcoin.
    XmrBtc,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::BtcXmr, Protocol::XmrBtc];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::BtcXmr => "btc_xmr",
            Protocol::XmrBtc => "xmr_btc",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::UnknownProtocol(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Happy,
    NoEncsig,
    BobSilentAfterCancel,
    FrontRun,
    AliceNoRedeem,
    BobNeverLocks,
    AliceCheats,
    AliceCheatsBobOffline,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Happy,
        Scenario::NoEncsig,
        Scenario::BobSilentAfterCancel,
        Scenario::FrontRun,
        Scenario::AliceNoRedeem,
        Scenario::BobNeverLocks,
        Scenario::AliceCheats,
        Scenario::AliceCheatsBobOffline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Happy => "happy",
            Scenario::NoEncsig => "no_encsig",
            Scenario::BobSilentAfterCancel => "bob_silent_after_cancel",
            Scenario::FrontRun => "front_run",
            Scenario::AliceNoRedeem => "alice_no_redeem",
            Scenario::BobNeverLocks => "bob_never_locks",
            Scenario::AliceCheats => "alice_cheats",
            Scenario::AliceCheatsBobOffline => "alice_cheats_bob_offline",
        }
    }

    pub fn valid_for(self, protocol: Protocol) -> bool {
        match protocol {
            Protocol::BtcXmr => matches!(
                self,
                Scenario::Happy
                    | Scenario::NoEncsig
                    | Scenario::BobSilentAfterCancel
                    | Scenario::FrontRun
            ),
            Protocol::XmrBtc => matches!(
                self,
                Scenario::Happy
                    | Scenario::AliceNoRedeem
                    | Scenario::BobNeverLocks
                    | Scenario::AliceCheats
                    | Scenario::AliceCheatsBobOffline
            ),
        }
    }

    /// Scenarios runnable under `protocol`, in declaration order.
    pub fn for_protocol(protocol: Protocol) -> Vec<Scenario> {
        Scenario::ALL
            .into_iter()
            .filter(|s| s.valid_for(protocol))
            .collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_string()))
    }
}

/// What happens to a matching message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultEffect {
    Drop,
    /// Deliver `ticks` later than usual.
    Delay,
}

/// Drop or delay messages sent in `[from_tick, to_tick)`. Empty filters match
/// everything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultRule {
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub sender: Option<Role>,
    #[serde(default)]
    pub from_tick: u64,
    #[serde(default)]
    pub to_tick: Option<u64>,
    pub effect: FaultEffect,
    #[serde(default)]
    pub ticks: u64,
}

impl FaultRule {
    pub fn matches(&self, tick: u64, sender: Role, kind: &str) -> bool {
        self.kind.as_deref().is_none_or(|k| k == kind)
            && self.sender.is_none_or(|s| s == sender)
            && tick >= self.from_tick
            && self.to_tick.is_none_or(|t| tick < t)
    }
}

/// A party is not stepped in `[from_tick, to_tick)`; its messages wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineWindow {
    pub role: Role,
    pub from_tick: u64,
    pub to_tick: u64,
}

impl OfflineWindow {
    pub fn covers(&self, role: Role, tick: u64) -> bool {
        self.role == role && (self.from_tick..self.to_tick).contains(&tick)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Faults {
    pub rules: Vec<FaultRule>,
    pub offline: Vec<OfflineWindow>,
}

impl Faults {
    /// First matching rule wins.
    pub fn rule_for(&self, tick: u64, sender: Role, kind: &str) -> Option<&FaultRule> {
        self.rules.iter().find(|r| r.matches(tick, sender, kind))
    }

    pub fn is_offline(&self, role: Role, tick: u64) -> bool {
        self.offline.iter().any(|w| w.covers(role, tick))
    }
}

/// Block cadence per chain and the miner's ordering preference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// A Bitcoin block every `btc_every` ticks.
    pub btc_every: u64,
    pub xmr_every: u64,
    /// Transactions of these roles are mined first, in this order.
    pub priority: Vec<TxRole>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            btc_every: 1,
            xmr_every: 1,
            priority: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub scenario: Scenario,
    pub seed: u64,
    pub params: SwapParams,
    pub faults: Faults,
    pub mining: MiningConfig,
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown protocol {0:?}; valid: btc_xmr, xmr_btc")]
    UnknownProtocol(String),
    #[error("unknown scenario {:?}; valid: {}", .0, scenario_names())]
    UnknownScenario(String),
    #[error("scenario {scenario} is not defined for protocol {protocol}; valid: {}", valid_names(*protocol))]
    Mismatch {
        protocol: Protocol,
        scenario: Scenario,
    },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("bad {SEED_ENV}: {0:?}")]
    BadSeedEnv(String),
    #[error("config json: {0}")]
    Json(String),
}

fn scenario_names() -> String {
    Scenario::ALL.map(|s| s.name()).join(", ")
}

fn valid_names(protocol: Protocol) -> String {
    Scenario::for_protocol(protocol)
        .into_iter()
        .map(|s| s.name())
        .collect::<Vec<_>>()
        .join(", ")
}

/// `XSWAP_SEED` if set, else [`DEFAULT_SEED`].
pub fn default_seed() -> Result<u64, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| ConfigError::BadSeedEnv(v)),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// On-disk form. Missing sections fall back to the scenario preset.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    protocol: Protocol,
    scenario: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    params: Option<SwapParams>,
    #[serde(default)]
    faults: Option<Faults>,
    #[serde(default)]
    mining: Option<MiningConfig>,
    #[serde(default)]
    horizon: Option<u64>,
}

impl ScenarioConfig {
    /// The stock configuration of a scenario. `front_run` disables the
    /// redeem safety margin and lets the miner favour the cancel.
    pub fn preset(protocol: Protocol, scenario: Scenario, seed: u64) -> Result<Self, ConfigError> {
        if !scenario.valid_for(protocol) {
            return Err(ConfigError::Mismatch { protocol, scenario });
        }
        let mut params = SwapParams::default();
        let mut mining = MiningConfig::default();
        if scenario == Scenario::FrontRun {
            params.redeem_safety_margin = 0;
            mining.priority = vec![TxRole::BtcCancel];
        }
        Ok(Self {
            protocol,
            scenario,
            seed,
            params,
            faults: Faults::default(),
            mining,
            horizon: DEFAULT_HORIZON,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let scenario: Scenario = raw.scenario.parse()?;
        let seed = match raw.seed {
            Some(s) => s,
            None => default_seed()?,
        };
        let mut cfg = Self::preset(raw.protocol, scenario, seed)?;
        if let Some(p) = raw.params {
            cfg.params = p;
        }
        if let Some(f) = raw.faults {
            cfg.faults = f;
        }
        if let Some(m) = raw.mining {
            cfg.mining = m;
        }
        if let Some(h) = raw.horizon {
            cfg.horizon = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.scenario.valid_for(self.protocol) {
            return Err(ConfigError::Mismatch {
                protocol: self.protocol,
                scenario: self.scenario,
            });
        }
        self.params.validate()?;
        if self.mining.btc_every == 0 {
            return Err(ConfigError::NotPositive("mining.btc_every"));
        }
        if self.mining.xmr_every == 0 {
            return Err(ConfigError::NotPositive("mining.xmr_every"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::NotPositive("horizon"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_rejected_at_parse_time() {
        let err = ScenarioConfig::from_json(r#"{"protocol":"btc_xmr","scenario":"alice_cheats"}"#)
            .unwrap_err();
        assert!(matches!(err, ConfigError::Mismatch { .. }));
        let msg = err.to_string();
        assert!(msg.contains("happy") && msg.contains("front_run"), "{msg}");
    }

    #[test]
    fn unknown_scenario_lists_valid_names() {
        let err = "nonsense".parse::<Scenario>().unwrap_err();
        for s in Scenario::ALL {
            assert!(err.to_string().contains(s.name()));
        }
    }

    #[test]
    fn missing_sections_use_preset() {
        let cfg = ScenarioConfig::from_json(
            r#"{"protocol":"btc_xmr","scenario":"front_run","seed":9}"#,
        )
        .unwrap();
        assert_eq!(cfg, ScenarioConfig::preset(Protocol::BtcXmr, Scenario::FrontRun, 9).unwrap());
        assert_eq!(cfg.params.redeem_safety_margin, 0);
    }

    #[test]
    fn full_config_parses() {
        let cfg = ScenarioConfig::from_json(
            r#"{
                "protocol": "xmr_btc",
                "scenario": "happy",
                "seed": 3,
                "params": {"t1": 12, "t2": 8},
                "faults": {
                    "rules": [{"kind": "btc_take_sig", "effect": "delay", "ticks": 2}],
                    "offline": [{"role": "bob", "from_tick": 4, "to_tick": 6}]
                },
                "mining": {"xmr_every": 2, "priority": ["btc_cancel"]},
                "horizon": 300
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.params.t1, 12);
        assert_eq!(cfg.params.amt_btc, SwapParams::default().amt_btc);
        let rule = cfg.faults.rule_for(0, Role::Bob, "btc_take_sig").unwrap();
        assert_eq!((rule.effect, rule.ticks), (FaultEffect::Delay, 2));
        assert!(cfg.faults.rule_for(0, Role::Bob, "other").is_none());
        assert!(cfg.faults.is_offline(Role::Bob, 5));
        assert!(!cfg.faults.is_offline(Role::Bob, 6));
        assert_eq!(cfg.mining.btc_every, 1);
        assert_eq!(cfg.horizon, 300);
    }

    #[test]
    fn unknown_fields_and_zero_cadence_rejected() {
        assert!(ScenarioConfig::from_json(
            r#"{"protocol":"btc_xmr","scenario":"happy","bogus":1}"#
        )
        .is_err());
        assert_eq!(
            ScenarioConfig::from_json(
                r#"{"protocol":"btc_xmr","scenario":"happy","mining":{"btc_every":0}}"#
            ),
            Err(ConfigError::NotPositive("mining.btc_every"))
        );
    }
}
