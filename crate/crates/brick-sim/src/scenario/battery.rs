//! Seeded property batteries: run an invariant suite across many seeds in
//! parallel and list every failure with its replay seed.

use super::config::{AdversaryKind, ScenarioConfig, ScenarioKind};
use super::sim::run;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct BatteryFailure {
    pub scenario: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatterySummary {
    pub suite: String,
    pub seeds: u64,
    pub runs: u64,
    pub failures: Vec<BatteryFailure>,
}

impl BatterySummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn safety_configs(seed: u64) -> Vec<ScenarioConfig> {
    let mut configs = vec![
        ScenarioConfig::preset(ScenarioKind::ByzantineF, seed),
        ScenarioConfig::preset(ScenarioKind::BribingAttack, seed),
        ScenarioConfig::preset(ScenarioKind::CensorshipAttack, seed),
        ScenarioConfig::preset(ScenarioKind::CrashParty, seed),
        ScenarioConfig::preset(ScenarioKind::HostageAttempt, seed),
        ScenarioConfig::preset(ScenarioKind::ThresholdBoundary, seed),
    ];
    // Adversarial reordering on top of the deviant committees.
    let mut reordered = ScenarioConfig::preset(ScenarioKind::ByzantineF, seed);
    reordered.adversary = AdversaryKind::Reorder { max_hold_ms: 40 };
    configs.push(reordered);
    let mut reordered = ScenarioConfig::preset(ScenarioKind::UnilateralClose, seed);
    reordered.adversary = AdversaryKind::Reorder { max_hold_ms: 40 };
    configs.push(reordered);
    configs
}

fn liveness_configs(seed: u64) -> Vec<ScenarioConfig> {
    let mut configs = vec![
        ScenarioConfig::preset(ScenarioKind::HonestFlow, seed),
        ScenarioConfig::preset(ScenarioKind::UnilateralClose, seed),
        ScenarioConfig::preset(ScenarioKind::FeeReconciliation, seed),
        ScenarioConfig::preset(ScenarioKind::CensorshipAttack, seed),
        ScenarioConfig::preset(ScenarioKind::AuditFlow, seed),
    ];
    let mut reordered = ScenarioConfig::preset(ScenarioKind::HonestFlow, seed);
    reordered.adversary = AdversaryKind::Reorder { max_hold_ms: 40 };
    configs.push(reordered);
    // f unresponsive wardens: exactly t remain, updates and closes must
    // still complete under eventual delivery.
    configs.push(ScenarioConfig::preset(ScenarioKind::HostageAttempt, seed));
    configs
}

fn conservation_configs(seed: u64) -> Vec<ScenarioConfig> {
    let mut configs = safety_configs(seed);
    configs.extend(liveness_configs(seed));
    configs.push(ScenarioConfig::preset(
        ScenarioKind::BaselineCensorship,
        seed,
    ));
    configs
}

fn check_safety(cfg: &ScenarioConfig) -> Result<(), String> {
    let out = run(cfg).map_err(|e| e.to_string())?;
    let r = &out.report;
    if !r.safety_ok {
        return Err(format!(
            "safety violated: closed at {:?} vs freshest {}",
            r.closing_seq, r.freshest_committed_seq
        ));
    }
    if !r.violations.is_empty() {
        return Err(r.violations.join("; "));
    }
    Ok(())
}

fn check_liveness(cfg: &ScenarioConfig) -> Result<(), String> {
    let out = run(cfg).map_err(|e| e.to_string())?;
    let r = &out.report;
    if r.final_phase != "Closed" {
        return Err(format!("run ended in {} instead of Closed", r.final_phase));
    }
    // Every valid update committed (crash scenarios cap their own plan).
    if r.updates_committed < r.updates_planned && cfg.scenario != ScenarioKind::CrashParty {
        return Err(format!(
            "only {} of {} updates committed",
            r.updates_committed, r.updates_planned
        ));
    }
    if !r.violations.is_empty() {
        return Err(r.violations.join("; "));
    }
    Ok(())
}

fn check_conservation(cfg: &ScenarioConfig) -> Result<(), String> {
    let out = run(cfg).map_err(|e| e.to_string())?;
    let r = &out.report;
    if let Some(fees) = &r.fees {
        if !fees.conservation_ok || !fees.fees_ok {
            return Err("settlement reconciliation failed".to_string());
        }
    }
    let deposits: u64 = r.deposits.values().sum();
    let payouts: u64 = r.payouts.values().sum();
    if deposits != payouts {
        return Err(format!("deposits {deposits} != payouts {payouts}"));
    }
    Ok(())
}

fn check_baseline_pair(cfg: &ScenarioConfig) -> Result<(), String> {
    let out = run(cfg).map_err(|e| e.to_string())?;
    let Some(baseline) = &out.report.baseline else {
        return Err("missing baseline outcome".to_string());
    };
    if baseline.safety_ok {
        return Err("censored baseline unexpectedly stayed safe".to_string());
    }
    match baseline.paired_brick_safety_ok {
        Some(true) => Ok(()),
        other => Err(format!("paired run safety: {other:?}")),
    }
}

/// Run `suite` across `seeds` consecutive seeds starting at `base_seed`.
pub fn run_battery(suite: &str, seeds: u64, base_seed: u64) -> BatterySummary {
    let seed_list: Vec<u64> = (0..seeds).map(|i| base_seed + i).collect();
    type Check = fn(&ScenarioConfig) -> Result<(), String>;
    let per_seed = |seed: u64| -> Vec<BatteryFailure> {
        let jobs: Vec<(ScenarioConfig, Check)> = match suite {
            "safety" => safety_configs(seed)
                .into_iter()
                .map(|c| (c, check_safety as Check))
                .collect(),
            "liveness" => liveness_configs(seed)
                .into_iter()
                .map(|c| (c, check_liveness as Check))
                .collect(),
            "conservation" => conservation_configs(seed)
                .into_iter()
                .map(|c| (c, check_conservation as Check))
                .collect(),
            "baseline" => vec![(
                ScenarioConfig::preset(ScenarioKind::BaselineCensorship, seed),
                check_baseline_pair as Check,
            )],
            _ => Vec::new(),
        };
        jobs.into_iter()
            .filter_map(|(cfg, check)| {
                check(&cfg).err().map(|reason| BatteryFailure {
                    scenario: cfg.scenario.name().to_string(),
                    seed,
                    reason,
                })
            })
            .collect()
    };

    let failures: Vec<BatteryFailure> = seed_list
        .par_iter()
        .flat_map(|seed| per_seed(*seed))
        .collect();
    let runs = match suite {
        "safety" => seeds * safety_configs(0).len() as u64,
        "liveness" => seeds * liveness_configs(0).len() as u64,
        "conservation" => seeds * conservation_configs(0).len() as u64,
        "baseline" => seeds,
        _ => 0,
    };
    BatterySummary {
        suite: suite.to_string(),
        seeds,
        runs,
        failures,
    }
}

pub const SUITES: &[&str] = &["safety", "liveness", "conservation", "baseline"];
