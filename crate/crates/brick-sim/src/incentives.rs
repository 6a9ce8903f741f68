//! Closed-form payoff model of the bribing game plus a brute-force
//! strategy-space oracle, and the end-of-run settlement reconciliation.
//!
//! The bribing game: a cheating party can close collaboratively, harvest
//! proofs of fraud from Byzantine wardens, bribe rational wardens and still
//! close fresh, or bribe enough wardens to close stale. The oracle
//! enumerates the whole discrete action space rather than trusting the
//! closed forms; payoffs are evaluated exactly, with the per-warden
//! collateral kept as the rational v/f (computed in f-scaled integers), so
//! harvesting all f Byzantine collaterals is worth exactly v.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GameParams {
    /// Channel funds.
    pub v: u64,
    /// Byzantine bound; committee size is 3f+1.
    pub f: u64,
    /// The briber's balance in the freshest committed state (0..=v).
    pub c_a: u64,
    /// Marginal premium a rational warden demands over its collateral.
    pub epsilon: u64,
}

impl GameParams {
    pub fn committee_size(&self) -> u64 {
        3 * self.f + 1
    }

    pub fn threshold(&self) -> u64 {
        2 * self.f + 1
    }

    /// Collateral actually locked per warden on-chain.
    pub fn collateral(&self) -> u64 {
        self.v.div_ceil(self.f)
    }
}

/// Bribing-and-closing-fresh payoff with the configured integer collateral:
/// `c_a + x*coll - b*(coll + eps)` for x submitted proofs of fraud and b
/// bribed rational wardens.
pub fn payoff(params: &GameParams, x: u64, b: u64) -> i64 {
    let coll = params.collateral() as i64;
    params.c_a as i64 + x as i64 * coll - b as i64 * (coll + params.epsilon as i64)
}

/// Closing-in-a-stale-state payoff with the configured integer collateral:
/// `v + (m+y)*coll - (y+m+1)*(coll + eps)`, where m Byzantine and y bribed
/// rational wardens hand over proofs of fraud and m+1 bribed wardens sign
/// the stale close.
pub fn fraudulent_close_payoff(params: &GameParams, m: u64, y: u64) -> i64 {
    let coll = params.collateral() as i64;
    let eps = params.epsilon as i64;
    params.v as i64 + (m + y) as i64 * coll - (y + m + 1) as i64 * (coll + eps)
}

/// The four strategy classes available to a cheating party.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Close collaboratively with the committee; payoff c_a.
    CollaborativeClose,
    /// Submit proofs of fraud from Byzantine wardens and close fresh.
    SlashByzantine,
    /// Bribe rational wardens but the channel still closes fresh.
    BribeCloseFresh,
    /// Bribe enough wardens to close in a stale state.
    BribeCloseStale,
}

impl StrategyKind {
    pub fn index(&self) -> u8 {
        match self {
            StrategyKind::CollaborativeClose => 1,
            StrategyKind::SlashByzantine => 2,
            StrategyKind::BribeCloseFresh => 3,
            StrategyKind::BribeCloseStale => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BestResponse {
    pub strategy: StrategyKind,
    /// Exact payoff in coins; the maximum is always integral.
    pub payoff: i64,
    /// Proofs of fraud submitted at the maximum.
    pub proofs: u64,
    /// Rational wardens bribed at the maximum.
    pub bribed: u64,
}

/// Brute-force best response over the full discrete strategy space.
///
/// Payoffs are compared f-scaled so the per-warden collateral is exactly
/// v/f without rounding. Requires `epsilon >= 1`.
pub fn best_response(params: &GameParams) -> BestResponse {
    assert!(params.epsilon >= 1, "integer premium required");
    assert!(params.c_a <= params.v, "briber balance bounded by v");
    let f = params.f as i64;
    let v = params.v as i64;
    let c_a = params.c_a as i64;
    let eps = params.epsilon as i64;
    let rational = 2 * params.f + 1;

    // (scaled payoff, strategy, proofs, bribes); scaled = f * payoff.
    let mut best: Option<(i64, StrategyKind, u64, u64)> = None;
    let mut consider = |scaled: i64, kind: StrategyKind, proofs: u64, bribed: u64| {
        if best.map(|(b, ..)| scaled > b).unwrap_or(true) {
            best = Some((scaled, kind, proofs, bribed));
        }
    };

    // Strategy 1: plain collaborative close.
    consider(f * c_a, StrategyKind::CollaborativeClose, 0, 0);

    // Strategy 2: harvest x Byzantine proofs of fraud, close fresh.
    for x in 1..=params.f {
        consider(
            f * c_a + x as i64 * v,
            StrategyKind::SlashByzantine,
            x,
            0,
        );
    }

    // Strategy 3: bribe b rational wardens; x_b Byzantine plus x_r of the
    // bribed hand over proofs; the channel still closes fresh.
    for b in 1..=rational {
        for x_b in 0..=params.f {
            for x_r in 0..=b {
                let proofs = x_b + x_r;
                let scaled = f * c_a + proofs as i64 * v - b as i64 * (v + f * eps);
                consider(scaled, StrategyKind::BribeCloseFresh, proofs, b);
            }
        }
    }

    // Strategy 4: close stale. Needs f+1 closers: (f - m) Byzantine plus
    // m+1 bribed; y more bribed rational wardens sell proofs of fraud.
    // Best case the stale state hands the party the whole v.
    for m in 0..=params.f {
        let max_y = rational.saturating_sub(m + 1);
        for y in 0..=max_y {
            let bribed = y + m + 1;
            let proofs = m + y;
            let scaled = f * v + proofs as i64 * v - bribed as i64 * (v + f * eps);
            consider(scaled, StrategyKind::BribeCloseStale, proofs, bribed);
        }
    }

    let (scaled, strategy, proofs, bribed) = best.unwrap();
    debug_assert_eq!(scaled % f, 0, "maximum payoff is integral");
    BestResponse {
        strategy,
        payoff: scaled / f,
        proofs,
        bribed,
    }
}

/// Whether colluding parties can credibly hold the committee's collateral
/// hostage: only when no party's stake exceeds a warden's collateral,
/// i.e. v/2 <= v/f, which for n = 3f+1 means n <= 7.
pub fn hostage_feasible(n: u64) -> bool {
    assert_eq!(n % 3, 1, "committee size must be 3f+1");
    n <= 7
}

/// Inputs for the end-of-run settlement reconciliation.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SettlementInputs {
    /// Everything deposited into the contract, by actor label.
    pub deposits: BTreeMap<String, u64>,
    /// Everything paid out by the contract, by actor label.
    pub payouts: BTreeMap<String, u64>,
    /// Per (payer label, warden label): cumulative one-way fee payments.
    pub fee_channels: BTreeMap<(String, String), u64>,
    /// Bribes paid outside the contract, by (briber, warden).
    pub bribes: BTreeMap<(String, String), u64>,
    /// Number of paid update announcements (sequence numbers above 1).
    pub paid_updates: u64,
    /// Update fee per warden per party per update.
    pub update_fee: u64,
    /// Committee size.
    pub committee: u64,
    /// Number of parties that actually broadcast (and therefore paid).
    pub paying_parties: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeeReport {
    pub deposits_total: u64,
    pub payouts_total: u64,
    pub update_fees_total: u64,
    pub expected_update_fees: u64,
    pub bribes_total: u64,
    pub conservation_ok: bool,
    pub fees_ok: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReconciliationError {
    #[error("deposits {deposits} != payouts {payouts}")]
    ConservationMismatch { deposits: u64, payouts: u64 },
    #[error("fee channels total {actual} != expected {expected}")]
    FeeMismatch { actual: u64, expected: u64 },
}

/// Reconcile every coin of a terminal run: contract conservation is exact,
/// and the one-way fee channels carry exactly updates x fee x wardens x
/// paying parties.
pub fn settlement_audit(inputs: &SettlementInputs) -> Result<FeeReport, ReconciliationError> {
    let deposits_total: u64 = inputs.deposits.values().sum();
    let payouts_total: u64 = inputs.payouts.values().sum();
    let update_fees_total: u64 = inputs.fee_channels.values().sum();
    let expected_update_fees =
        inputs.paid_updates * inputs.update_fee * inputs.committee * inputs.paying_parties;
    let bribes_total: u64 = inputs.bribes.values().sum();

    let report = FeeReport {
        deposits_total,
        payouts_total,
        update_fees_total,
        expected_update_fees,
        bribes_total,
        conservation_ok: deposits_total == payouts_total,
        fees_ok: update_fees_total == expected_update_fees,
    };
    if !report.conservation_ok {
        return Err(ReconciliationError::ConservationMismatch {
            deposits: deposits_total,
            payouts: payouts_total,
        });
    }
    if !report.fees_ok {
        return Err(ReconciliationError::FeeMismatch {
            actual: update_fees_total,
            expected: expected_update_fees,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(v: u64, f: u64, c_a: u64, epsilon: u64) -> GameParams {
        GameParams { v, f, c_a, epsilon }
    }

    #[test]
    fn payoff_matches_the_closed_forms() {
        let p = params(12, 3, 5, 1);
        // Strategy 1: no proofs, no bribes.
        assert_eq!(payoff(&p, 0, 0), 5);
        // Strategy 2 at x = f: c_a + v.
        assert_eq!(payoff(&p, 3, 0), 5 + 12);
        // Strategy 3 bound: c_a + v - eps.
        assert_eq!(payoff(&p, 4, 1), 16);
        assert!(payoff(&p, 4, 1) <= 5 + 12 - 1);
    }

    #[test]
    fn fraudulent_close_payoff_matches_and_is_bounded() {
        let p = params(12, 3, 5, 1);
        assert_eq!(fraudulent_close_payoff(&p, 0, 0), 12 - 5);
        assert_eq!(fraudulent_close_payoff(&p, 3, 2), 12 + 20 - 30);
        // Exhaustive scan never exceeds v - coll - eps.
        let bound = 12 - 4 - 1;
        for m in 0..=p.f {
            for y in 0..=p.committee_size() {
                assert!(fraudulent_close_payoff(&p, m, y) <= bound);
            }
        }
    }

    #[test]
    fn best_response_is_always_slash_byzantine_close_fresh() {
        for (v, f, c_a, eps) in [
            (12, 3, 0, 1),
            (12, 3, 5, 1),
            (100, 3, 50, 1),
            (10, 3, 10, 2),
            (200, 5, 100, 2),
        ] {
            let br = best_response(&params(v, f, c_a, eps));
            assert_eq!(br.strategy, StrategyKind::SlashByzantine, "v={v} f={f}");
            assert_eq!(br.payoff, (c_a + v) as i64, "v={v} f={f}");
            assert_eq!(br.proofs, f);
            assert_eq!(br.bribed, 0);
        }
    }

    #[test]
    fn degenerate_briber_already_owns_everything() {
        // c_a = v: harvesting the Byzantine collateral still dominates.
        let br = best_response(&params(12, 3, 12, 1));
        assert_eq!(br.strategy, StrategyKind::SlashByzantine);
        assert_eq!(br.payoff, 24);
    }

    #[test]
    fn hostage_threshold_is_seven() {
        assert!(!hostage_feasible(10)); // v/2 > v/f for f = 3
        assert!(hostage_feasible(7)); // equality at f = 2: not strictly greater
        assert!(hostage_feasible(4)); // f = 1
        assert!(!hostage_feasible(13));
    }

    #[test]
    fn settlement_audit_reconciles_fees() {
        let mut inputs = SettlementInputs {
            paid_updates: 3,
            update_fee: 1,
            committee: 10,
            paying_parties: 2,
            ..Default::default()
        };
        inputs.deposits.insert("party_a".into(), 41);
        inputs.deposits.insert("party_b".into(), 41);
        inputs.payouts.insert("party_a".into(), 42);
        inputs.payouts.insert("party_b".into(), 40);
        for w in 0..10 {
            inputs
                .fee_channels
                .insert(("party_a".into(), format!("warden_{w}")), 3);
            inputs
                .fee_channels
                .insert(("party_b".into(), format!("warden_{w}")), 3);
        }
        let report = settlement_audit(&inputs).unwrap();
        // 3 updates, both parties pay, n=10, r=1: 60 in total.
        assert_eq!(report.update_fees_total, 60);
        assert!(report.conservation_ok && report.fees_ok);

        inputs.payouts.insert("party_a".into(), 43);
        assert_eq!(
            settlement_audit(&inputs).unwrap_err(),
            ReconciliationError::ConservationMismatch {
                deposits: 82,
                payouts: 83
            }
        );
    }

    #[test]
    fn dominance_holds_across_the_grid() {
        // v in {10..200 step 10}, f in {3,4,5}, c_a in {0, v/2, v},
        // eps in {1, 2}: brute force always lands on strategy 2 with
        // payoff exactly c_a + v.
        for v in (10..=200).step_by(10) {
            for f in [3u64, 4, 5] {
                for c_a in [0, v / 2, v] {
                    for eps in [1u64, 2] {
                        let br = best_response(&params(v, f, c_a, eps));
                        assert_eq!(
                            br.strategy,
                            StrategyKind::SlashByzantine,
                            "v={v} f={f} c_a={c_a} eps={eps}"
                        );
                        assert_eq!(br.payoff, (c_a + v) as i64);
                    }
                }
            }
        }
    }
}
