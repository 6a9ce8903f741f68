//! Scenario configuration: named presets, a flat key=value config file
//! format, and command-line overrides.

use crate::party::PartyStrategy;
use crate::warden::WardenStrategy;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ScenarioKind {
    HonestFlow,
    UnilateralClose,
    ByzantineF,
    BribingAttack,
    HostageAttempt,
    CensorshipAttack,
    BaselineCensorship,
    CrashParty,
    AuditFlow,
    FeeReconciliation,
    ThresholdBoundary,
    SignAfterClose,
}

pub const SCENARIO_NAMES: &[(&str, ScenarioKind)] = &[
    ("honest-flow", ScenarioKind::HonestFlow),
    ("unilateral-close", ScenarioKind::UnilateralClose),
    ("byzantine-f", ScenarioKind::ByzantineF),
    ("bribing-attack", ScenarioKind::BribingAttack),
    ("hostage-attempt", ScenarioKind::HostageAttempt),
    ("censorship-attack", ScenarioKind::CensorshipAttack),
    ("baseline-censorship", ScenarioKind::BaselineCensorship),
    ("crash-party", ScenarioKind::CrashParty),
    ("audit-flow", ScenarioKind::AuditFlow),
    ("fee-reconciliation", ScenarioKind::FeeReconciliation),
    ("threshold-boundary", ScenarioKind::ThresholdBoundary),
    ("sign-after-close", ScenarioKind::SignAfterClose),
];

impl ScenarioKind {
    pub fn from_name(name: &str) -> Option<ScenarioKind> {
        SCENARIO_NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, k)| *k)
    }

    pub fn name(&self) -> &'static str {
        SCENARIO_NAMES
            .iter()
            .find(|(_, k)| k == self)
            .map(|(n, _)| *n)
            .unwrap()
    }
}

/// Which protocol variant the run exercises.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ModeKind {
    Brick,
    BrickPlus,
    Baseline,
}

impl ModeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModeKind::Brick => "brick",
            ModeKind::BrickPlus => "brick+",
            ModeKind::Baseline => "baseline",
        }
    }
}

/// Network/ledger adversary presets. The concrete message and transaction
/// targets are chosen by the scenario script.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum AdversaryKind {
    /// Plain delays: rtt/2 per hop plus jitter, no interference.
    HonestDelays,
    /// Seeded extra hold (reordering) on every message, up to max_hold_ms.
    Reorder { max_hold_ms: u64 },
    /// Scenario-chosen messages held for hold_ms, then delivered.
    TargetedDelay { hold_ms: u64 },
    /// Scenario-chosen transactions kept out of blocks for hold_blocks.
    CensorLedger { hold_blocks: u64 },
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub mode: ModeKind,
    /// Committee size; must be 3f+1 with n > 7 in channel modes.
    pub n: u64,
    /// Initial funding per party (v = v_a + v_b).
    pub v_a: u64,
    pub v_b: u64,
    pub closing_fee: u64,
    pub update_fee: u64,
    pub epsilon: u64,
    /// Paid updates to run after the opening state.
    pub updates: u64,
    pub rtt_ms: u64,
    pub jitter_us: u64,
    pub stagger_us: u64,
    pub adversary: AdversaryKind,
    pub party_a: PartyStrategy,
    pub party_b: PartyStrategy,
    /// Applied to the lowest-indexed wardens; the rest stay honest.
    pub deviant_wardens: u64,
    pub deviant_strategy: Option<WardenStrategy>,
    /// Bribe per warden offered in bribing scenarios.
    pub bribe: u64,
    pub confirm_depth: u64,
    /// Liveness bound L: honest transactions are included within this many
    /// blocks.
    pub liveness_bound: u64,
    pub block_interval_ms: u64,
    pub run_limit_ms: u64,
    /// Baseline dispute window t_d (blocks).
    pub dispute_window: u64,
    /// Audit runs: party A submits a doctored history.
    pub audit_tamper: bool,
}

impl ScenarioConfig {
    pub fn f(&self) -> u64 {
        (self.n - 1) / 3
    }

    pub fn t(&self) -> u64 {
        2 * self.f() + 1
    }

    pub fn v(&self) -> u64 {
        self.v_a + self.v_b
    }

    pub fn collateral(&self) -> u64 {
        self.v().div_ceil(self.f())
    }

    /// Preset for a named scenario.
    pub fn preset(kind: ScenarioKind, seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig {
            scenario: kind,
            seed,
            mode: ModeKind::Brick,
            n: 10,
            v_a: 6,
            v_b: 6,
            closing_fee: 70,
            update_fee: 1,
            epsilon: 1,
            updates: 3,
            rtt_ms: 100,
            jitter_us: 0,
            stagger_us: 2_000,
            adversary: AdversaryKind::HonestDelays,
            party_a: PartyStrategy::Honest,
            party_b: PartyStrategy::Honest,
            deviant_wardens: 0,
            deviant_strategy: None,
            bribe: 0,
            confirm_depth: 6,
            liveness_bound: 2,
            block_interval_ms: 1_000,
            run_limit_ms: 600_000,
            dispute_window: 6,
            audit_tamper: false,
        };
        match kind {
            ScenarioKind::HonestFlow => {}
            ScenarioKind::UnilateralClose => {
                cfg.party_b = PartyStrategy::Silent;
            }
            ScenarioKind::ByzantineF => {
                // f bribed wardens answer the close with a stale seq; the
                // cheating party pays just above collateral.
                cfg.deviant_wardens = cfg.f();
                cfg.bribe = cfg.collateral() + cfg.epsilon;
                cfg.deviant_strategy = Some(WardenStrategy::BribedOldClaim {
                    bribe: cfg.bribe,
                    claim_seq: 2,
                });
                cfg.party_a = PartyStrategy::StaleCloseBriber {
                    target_seq: 2,
                    bribe: cfg.bribe,
                };
            }
            ScenarioKind::BribingAttack => {
                // Offers at exactly the collateral: every rational warden
                // refuses; only the Byzantine ones comply.
                cfg.deviant_wardens = cfg.f();
                cfg.bribe = cfg.collateral();
                cfg.deviant_strategy = Some(WardenStrategy::BribedOldClaim {
                    bribe: cfg.bribe,
                    claim_seq: 2,
                });
                cfg.party_a = PartyStrategy::StaleCloseBriber {
                    target_seq: 2,
                    bribe: cfg.bribe,
                };
            }
            ScenarioKind::HostageAttempt => {
                cfg.deviant_wardens = cfg.f();
                cfg.deviant_strategy = Some(WardenStrategy::Unresponsive);
            }
            ScenarioKind::CensorshipAttack => {
                cfg.adversary = AdversaryKind::CensorLedger { hold_blocks: 10 };
                cfg.party_b = PartyStrategy::Silent;
            }
            ScenarioKind::BaselineCensorship => {
                cfg.mode = ModeKind::Baseline;
                cfg.adversary = AdversaryKind::CensorLedger { hold_blocks: 10 };
            }
            ScenarioKind::CrashParty => {
                cfg.party_a = PartyStrategy::CrashAfterCommit { seq: 3 };
            }
            ScenarioKind::AuditFlow => {
                cfg.mode = ModeKind::BrickPlus;
            }
            ScenarioKind::FeeReconciliation => {
                cfg.party_b = PartyStrategy::Silent;
            }
            ScenarioKind::ThresholdBoundary => {
                // One more update gathers exactly t-1 acks: f Byzantine
                // wardens claim the prior committed seq although they acked
                // above it, and the honest fresh claims are censored past
                // finalization, so the channel closes at the committed seq.
                cfg.deviant_wardens = cfg.f();
                cfg.deviant_strategy = Some(WardenStrategy::BribedOldClaim {
                    bribe: 0,
                    claim_seq: cfg.updates + 1,
                });
                cfg.adversary = AdversaryKind::CensorLedger { hold_blocks: 60 };
            }
            ScenarioKind::SignAfterClose => {
                // f wardens keep acking after publishing their closing
                // claims; the victim party slashes them all.
                cfg.deviant_wardens = cfg.f();
                cfg.deviant_strategy = Some(WardenStrategy::SignAfterClose);
            }
        }
        cfg
    }

    /// Structural checks shared by every run.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mode != ModeKind::Baseline {
            if self.n <= 7 || self.n % 3 != 1 {
                return Err(ConfigError::Invalid(format!(
                    "committee size {} is not 3f+1 with n > 7",
                    self.n
                )));
            }
            if self.deviant_wardens > self.n {
                return Err(ConfigError::Invalid(
                    "more deviant wardens than committee members".to_string(),
                ));
            }
        }
        if self.v_a == 0 || self.v_b == 0 {
            return Err(ConfigError::Invalid(
                "both parties must fund a positive amount".to_string(),
            ));
        }
        if self.epsilon == 0 {
            return Err(ConfigError::Invalid(
                "epsilon must be a positive integer".to_string(),
            ));
        }
        if self.block_interval_ms == 0 || self.run_limit_ms == 0 {
            return Err(ConfigError::Invalid(
                "block interval and run limit must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// Apply one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let parse_u64 = |value: &str| -> Result<u64, ConfigError> {
            value
                .parse()
                .map_err(|_| bad("expected an unsigned integer"))
        };
        match key {
            "scenario" => {
                self.scenario = ScenarioKind::from_name(value)
                    .ok_or_else(|| ConfigError::UnknownScenario(value.to_string()))?;
            }
            "seed" => self.seed = parse_u64(value)?,
            "mode" => {
                self.mode = match value {
                    "brick" => ModeKind::Brick,
                    "brick+" | "brick-plus" => ModeKind::BrickPlus,
                    "baseline" => ModeKind::Baseline,
                    _ => return Err(bad("expected brick | brick+ | baseline")),
                }
            }
            "n" | "wardens" => self.n = parse_u64(value)?,
            "v_a" | "split_a" => self.v_a = parse_u64(value)?,
            "v_b" | "split_b" => self.v_b = parse_u64(value)?,
            "closing_fee" => self.closing_fee = parse_u64(value)?,
            "update_fee" | "r" => self.update_fee = parse_u64(value)?,
            "epsilon" => self.epsilon = parse_u64(value)?,
            "updates" => self.updates = parse_u64(value)?,
            "rtt_ms" => self.rtt_ms = parse_u64(value)?,
            "jitter_us" => self.jitter_us = parse_u64(value)?,
            "stagger_us" => self.stagger_us = parse_u64(value)?,
            "adversary" => {
                self.adversary = match value {
                    "honest" | "honest-delays" => AdversaryKind::HonestDelays,
                    "reorder" => AdversaryKind::Reorder { max_hold_ms: 40 },
                    "targeted-delay" => AdversaryKind::TargetedDelay { hold_ms: 30_000 },
                    "censor-ledger" => AdversaryKind::CensorLedger { hold_blocks: 10 },
                    _ => {
                        return Err(bad(
                            "expected honest | reorder | targeted-delay | censor-ledger",
                        ))
                    }
                }
            }
            "reorder_hold_ms" => {
                self.adversary = AdversaryKind::Reorder {
                    max_hold_ms: parse_u64(value)?,
                }
            }
            "censor_hold_blocks" => {
                self.adversary = AdversaryKind::CensorLedger {
                    hold_blocks: parse_u64(value)?,
                }
            }
            "party_a" => {
                self.party_a =
                    parse_party_strategy(value).ok_or_else(|| bad("unknown party strategy"))?
            }
            "party_b" => {
                self.party_b =
                    parse_party_strategy(value).ok_or_else(|| bad("unknown party strategy"))?
            }
            "deviant_wardens" => self.deviant_wardens = parse_u64(value)?,
            "deviant_strategy" => {
                self.deviant_strategy = Some(
                    parse_warden_strategy(value).ok_or_else(|| bad("unknown warden strategy"))?,
                )
            }
            "bribe" => self.bribe = parse_u64(value)?,
            "confirm_depth" | "k" => self.confirm_depth = parse_u64(value)?,
            "liveness_bound" | "l" => self.liveness_bound = parse_u64(value)?,
            "block_interval_ms" => self.block_interval_ms = parse_u64(value)?,
            "run_limit_ms" => self.run_limit_ms = parse_u64(value)?,
            "dispute_window" | "t_d" => self.dispute_window = parse_u64(value)?,
            "audit_tamper" => {
                self.audit_tamper = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("expected true | false")),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}

/// Strategy tags accepted in config files.
pub fn parse_party_strategy(tag: &str) -> Option<PartyStrategy> {
    Some(match tag {
        "honest" => PartyStrategy::Honest,
        "withhold-countersign" => PartyStrategy::WithholdCountersign,
        "stale-close-briber" => PartyStrategy::StaleCloseBriber {
            target_seq: 2,
            bribe: 5,
        },
        "crash-after-commit" => PartyStrategy::CrashAfterCommit { seq: 3 },
        "silent" => PartyStrategy::Silent,
        _ => return None,
    })
}

pub fn parse_warden_strategy(tag: &str) -> Option<WardenStrategy> {
    Some(match tag {
        "honest" => WardenStrategy::Honest,
        "unresponsive" => WardenStrategy::Unresponsive,
        "ack-without-store" => WardenStrategy::AckWithoutStore,
        "sign-after-close" => WardenStrategy::SignAfterClose,
        "bribed-old-claim" => WardenStrategy::BribedOldClaim {
            bribe: 5,
            claim_seq: 2,
        },
        "crash" => WardenStrategy::Crash { after_events: 8 },
        _ => return None,
    })
}

/// Parse a flat config file: one `key = value` per line, `#` comments.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Invalid(format!(
                "line {}: expected `key = value`",
                lineno + 1
            )));
        };
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for (name, kind) in SCENARIO_NAMES {
            let cfg = ScenarioConfig::preset(*kind, 1);
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(ScenarioKind::from_name(name), Some(*kind));
        }
    }

    #[test]
    fn config_text_roundtrip() {
        let text = "\n# comment\nseed = 9\nupdates= 5\nmode =brick+  # trailing\n";
        let kv = parse_config_text(text).unwrap();
        let mut cfg = ScenarioConfig::preset(ScenarioKind::HonestFlow, 1);
        for (k, v) in &kv {
            cfg.set(k, v).unwrap();
        }
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.updates, 5);
        assert_eq!(cfg.mode, ModeKind::BrickPlus);
    }

    #[test]
    fn bad_keys_and_values_are_rejected() {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::HonestFlow, 1);
        assert!(matches!(
            cfg.set("nope", "1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.set("updates", "many"),
            Err(ConfigError::BadValue { .. })
        ));
        cfg.n = 9;
        assert!(cfg.validate().is_err());
    }
}
