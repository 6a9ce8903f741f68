//! The run report: one JSON document per run, deterministic for a given
//! (seed, config). Schema is versioned; exit-code policy lives with the
//! CLI.

use crate::brick_plus::AuditReport;
use crate::incentives::FeeReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Baseline-scenario outcome, including the paired run of the
/// committee-backed channel under the identical adversary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub settled_seq: u64,
    pub freshest_seq: u64,
    pub disputed: bool,
    pub safety_ok: bool,
    /// Safety verdict of the paired run under the same censorship policy.
    pub paired_brick_safety_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub mode: String,
    pub final_phase: String,
    pub close_kind: Option<String>,
    pub closing_seq: Option<u64>,
    /// Highest seq that gathered t distinct warden acks, or was settled
    /// on-chain as a both-signed state.
    pub freshest_committed_seq: u64,
    pub safety_ok: bool,
    /// Simulated time from close request to the contract reaching Closed.
    pub liveness_ms: Option<f64>,
    /// Updates that actually committed (excluding the opening state).
    pub updates_committed: u64,
    /// Distinct warden ack signatures observed per sequence number.
    pub ack_counts: BTreeMap<u64, u64>,
    pub updates_planned: u64,
    pub proofs_of_fraud: u64,
    pub slashed: Vec<String>,
    pub deposits: BTreeMap<String, u64>,
    pub payouts: BTreeMap<String, u64>,
    /// Per actor, per reason payout breakdown.
    pub payout_reasons: BTreeMap<String, BTreeMap<String, u64>>,
    /// Net run income per warden: update fees + closing fee + bribes,
    /// minus slashed collateral.
    pub warden_income: BTreeMap<String, i64>,
    pub bribes_accepted: u64,
    pub bribes_rejected: u64,
    pub fees: Option<FeeReport>,
    pub event_counts: BTreeMap<String, u64>,
    pub trace_digest: String,
    pub audit: Option<AuditReport>,
    pub baseline: Option<BaselineOutcome>,
    /// Invariant breaches; any entry fails the run.
    pub violations: Vec<String>,
}

impl RunReport {
    /// Exit-code contract: a channel-mode run fails the process on a
    /// safety violation or any internal invariant breach.
    pub fn process_ok(&self) -> bool {
        let baseline_expected = self.mode == "baseline";
        (self.safety_ok || baseline_expected) && self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
