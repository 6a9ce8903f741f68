//! The per-scenario driver: a staged state machine reacting to block,
//! commit, and timer events on top of the simulation world.

use super::config::{ScenarioConfig, ScenarioKind};
use super::sim::World;
use crate::brick_plus::AuditReport;
use crate::channel::PartyRole;
use crate::ledger::{Beneficiary, CloseKind, Phase, Tx};
use crate::netsim::{ActorId, SimEvent, TimeUs, MILLISECOND};
use crate::party::{Msg, PartyStrategy};
use crate::primitives::Hash32;

pub(super) const TIMER_DO_UPDATE: u64 = 1;
pub(super) const TIMER_START_CLOSE: u64 = 2;
pub(super) const TIMER_ESCALATE: u64 = 3;
pub(super) const TIMER_AUDIT_REQUEST: u64 = 4;
pub(super) const TIMER_AUDIT_DEADLINE: u64 = 5;
pub(super) const TIMER_BOUNDARY_CLOSE: u64 = 6;
pub(super) const TIMER_BAIT_CLOSE: u64 = 7;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(super) enum Stage {
    Setup,
    Updating,
    Closing,
}

pub(super) struct ScriptState {
    pub stage: Stage,
    pub updates_done: u64,
    funded_a: bool,
    funded_b: bool,
    funded_wardens: bool,
    s1_proposed: bool,
    open_submitted: bool,
    close_started: bool,
    escalated: bool,
    boundary_proposed: bool,
    redeems_submitted: bool,
    audit_requested: bool,
    access_dispatched: usize,
    histories_requested: bool,
    audit_closing: Option<(u64, Hash32)>,
    pub audit_report: Option<AuditReport>,
    pub close_requested_at: Option<TimeUs>,
    pub closed_at: Option<TimeUs>,
    pub bribes_accepted: u64,
    pub bribes_rejected: u64,
}

impl ScriptState {
    pub fn new(_cfg: &ScenarioConfig) -> ScriptState {
        ScriptState {
            stage: Stage::Setup,
            updates_done: 0,
            funded_a: false,
            funded_b: false,
            funded_wardens: false,
            s1_proposed: false,
            open_submitted: false,
            close_started: false,
            escalated: false,
            boundary_proposed: false,
            redeems_submitted: false,
            audit_requested: false,
            access_dispatched: 0,
            histories_requested: false,
            audit_closing: None,
            audit_report: None,
            close_requested_at: None,
            closed_at: None,
            bribes_accepted: 0,
            bribes_rejected: 0,
        }
    }
}

impl World {
    fn submit_traced(&mut self, from: &str, tx: Tx) {
        self.trace.push(
            self.now(),
            "submit",
            from.to_string(),
            "chain".to_string(),
            tx.kind().to_string(),
        );
        self.ledger.submit(tx);
    }

    fn schedule_timer(&mut self, delay_ms: u64, tag: u64) {
        self.sched.push_after(
            delay_ms * MILLISECOND,
            SimEvent::Timer {
                actor: ActorId::PartyA,
                tag,
            },
        );
    }

    pub(super) fn script_on_block(&mut self) {
        let Some(contract) = self.ledger.contract(&self.channel) else {
            return;
        };
        let phase = contract.phase;
        let collateral = contract.collateral_each;
        let all_wardens_funded = contract.warden_keys.iter().all(|k| k.is_some());
        let now = self.now();

        if phase == Phase::Closed && self.script.closed_at.is_none() {
            self.script.closed_at = Some(now);
        }

        match phase {
            Phase::Deployed => {
                if !self.script.funded_a {
                    self.script.funded_a = true;
                    let tx = Tx::FundParty {
                        channel: self.channel,
                        role: PartyRole::A,
                        amount: self.cfg.v_a,
                    };
                    self.submit_traced("party_a", tx);
                }
            }
            Phase::PartyAFunded => {
                if !self.script.funded_b {
                    self.script.funded_b = true;
                    let tx = Tx::FundParty {
                        channel: self.channel,
                        role: PartyRole::B,
                        amount: self.cfg.v_b,
                    };
                    self.submit_traced("party_b", tx);
                }
            }
            Phase::BothPartiesFunded => {
                if !self.script.funded_wardens {
                    self.script.funded_wardens = true;
                    let amount = collateral.expect("collateral fixed after funding");
                    let txs: Vec<(String, Tx)> = self
                        .wardens
                        .iter()
                        .enumerate()
                        .map(|(i, w)| {
                            (
                                format!("warden_{i}"),
                                Tx::FundWarden {
                                    channel: self.channel,
                                    warden: w.public(),
                                    amount,
                                },
                            )
                        })
                        .collect();
                    for (label, tx) in txs {
                        self.submit_traced(&label, tx);
                    }
                } else if all_wardens_funded && !self.script.s1_proposed {
                    // Protocol order: broadcast the opening announcement to
                    // the committee first, publish open once it committed.
                    self.script.s1_proposed = true;
                    let salt = self.next_salt();
                    let (v_a, v_b) = (self.cfg.v_a, self.cfg.v_b);
                    match self.party_a.propose_update(v_a, v_b, salt) {
                        Ok(effects) => self.apply_party_effects(PartyRole::A, effects),
                        Err(e) => self.trace.push(
                            now,
                            "note",
                            "party_a".to_string(),
                            "-".to_string(),
                            format!("opening proposal failed: {e}"),
                        ),
                    }
                } else if all_wardens_funded
                    && self.party_a.committed_seq() >= 1
                    && !self.script.open_submitted
                {
                    self.script.open_submitted = true;
                    let tx = Tx::Open {
                        channel: self.channel,
                        caller: PartyRole::A,
                    };
                    self.submit_traced("party_a", tx);
                }
            }
            Phase::Open => {
                if self.script.stage == Stage::Setup {
                    self.script.stage = Stage::Updating;
                    if self.cfg.updates == 0 {
                        self.schedule_timer(50, TIMER_START_CLOSE);
                    } else {
                        self.schedule_timer(50, TIMER_DO_UPDATE);
                    }
                }
            }
            Phase::OptimisticPending | Phase::PessimisticPending => {}
            Phase::Closed => self.script_post_close(),
            Phase::Cancelled => {
                self.check_done();
            }
        }

        self.dispatch_access_requests();
    }

    /// Forward every newly recorded on-chain access request to the
    /// committee; honest wardens answer a valid one by closing.
    fn dispatch_access_requests(&mut self) {
        let Some(contract) = self.ledger.contract(&self.channel) else {
            return;
        };
        let requests: Vec<_> = contract
            .access_requests
            .iter()
            .skip(self.script.access_dispatched)
            .map(|(pk, _)| *pk)
            .collect();
        if requests.is_empty() {
            return;
        }
        let allowed = contract.params.auditors.clone();
        self.script.access_dispatched += requests.len();
        for auditor in requests {
            let mut claims = Vec::new();
            for warden in self.wardens.iter_mut() {
                if let Some(claim) = warden.on_access_request(&auditor, &allowed) {
                    claims.push((warden.public(), claim));
                }
            }
            for (pk, claim) in claims {
                self.oracle.note_claim(pk, claim.seq);
                self.submit_traced(
                    "warden",
                    Tx::RecordClaim {
                        channel: self.channel,
                        claim,
                    },
                );
            }
        }
    }

    fn script_post_close(&mut self) {
        let Some(contract) = self.ledger.contract(&self.channel) else {
            return;
        };
        let Some(closed) = contract.closed.clone() else {
            return;
        };
        let pessimistic = matches!(
            closed.kind,
            CloseKind::PessimisticState | CloseKind::PessimisticForfeit
        );

        if pessimistic && !self.script.redeems_submitted {
            self.script.redeems_submitted = true;
            let txs: Vec<(String, Tx)> = contract
                .warden_keys
                .iter()
                .enumerate()
                .filter_map(|(i, k)| {
                    let pk = (*k)?;
                    if contract.slashed.contains(&(i as u32)) {
                        None
                    } else {
                        Some((
                            format!("warden_{i}"),
                            Tx::RedeemWarden {
                                channel: self.channel,
                                warden: pk,
                            },
                        ))
                    }
                })
                .collect();
            for (label, tx) in txs {
                self.submit_traced(&label, tx);
            }
            return;
        }

        // Audit epilogue: once the close is final, request the history from
        // both parties and give them a fixed window to answer.
        if self.cfg.scenario == ScenarioKind::AuditFlow
            && pessimistic
            && !self.script.histories_requested
            && self.ledger.is_final(closed.height)
        {
            self.script.histories_requested = true;
            let closing_seq = closed.closing_seq.unwrap_or(0);
            let head = closed.closing_head.unwrap_or(Hash32::ZERO);
            self.script.audit_closing = Some((closing_seq, head));
            for to in [ActorId::PartyA, ActorId::PartyB] {
                self.net.send(
                    &mut self.sched,
                    ActorId::Auditor,
                    to,
                    Msg::HistoryRequest {
                        upto_seq: closing_seq,
                    },
                );
            }
            self.schedule_timer(2_000, TIMER_AUDIT_DEADLINE);
            return;
        }

        self.check_done();
    }

    fn check_done(&mut self) {
        let Some(contract) = self.ledger.contract(&self.channel) else {
            return;
        };
        let done_redeems = match contract.closed.as_ref().map(|c| c.kind) {
            Some(CloseKind::PessimisticState) | Some(CloseKind::PessimisticForfeit) => {
                let expected = contract.warden_keys.len() - contract.slashed.len();
                contract.redeemed.len() == expected
            }
            Some(CloseKind::Optimistic) => true,
            None => contract.phase == Phase::Cancelled,
        };
        let done_audit =
            self.cfg.scenario != ScenarioKind::AuditFlow || self.script.audit_report.is_some();
        if done_redeems
            && done_audit
            && self.ledger.pending_len() == 0
            && self.sched.pending_deliveries() == 0
        {
            self.done = true;
        }
    }

    pub(super) fn script_on_committed(&mut self, _role: PartyRole, seq: u64) {
        if seq == 1 || self.script.stage != Stage::Updating {
            return;
        }
        let expected = self.script.updates_done + 2;
        if seq != expected {
            return;
        }
        self.script.updates_done += 1;
        if self.script.updates_done >= self.cfg.updates {
            self.schedule_timer(100, TIMER_START_CLOSE);
        } else {
            self.schedule_timer(50, TIMER_DO_UPDATE);
        }
    }

    pub(super) fn script_on_timer(&mut self, _actor: ActorId, tag: u64) {
        match tag {
            TIMER_DO_UPDATE => self.do_update(),
            TIMER_START_CLOSE => self.start_close(),
            TIMER_ESCALATE => self.escalate(),
            TIMER_AUDIT_REQUEST => {
                if !self.script.audit_requested {
                    self.script.audit_requested = true;
                    self.script.close_requested_at = Some(self.now());
                    let tx = Tx::AccessRequest {
                        channel: self.channel,
                        auditor: self.auditor_key.public(),
                    };
                    self.submit_traced("auditor", tx);
                }
            }
            TIMER_AUDIT_DEADLINE => self.finalize_audit(),
            TIMER_BOUNDARY_CLOSE => {
                // The counterparty, which never saw the finalize message
                // and so never broadcast the boundary update, closes.
                self.script.close_requested_at = Some(self.now());
                let effects = self.party_b.request_pessimistic_close();
                self.apply_party_effects(PartyRole::B, effects);
            }
            TIMER_BAIT_CLOSE => {
                self.script.close_requested_at = Some(self.now());
                let effects = self.party_a.request_pessimistic_close();
                self.apply_party_effects(PartyRole::A, effects);
            }
            _ => {}
        }
    }

    fn do_update(&mut self) {
        if self.script.stage != Stage::Updating || self.script.close_started {
            return;
        }
        let k = self.script.updates_done + 1;
        let mut proposer = if k % 2 == 1 { PartyRole::A } else { PartyRole::B };
        if self.party(proposer).is_crashed() {
            proposer = proposer.other();
        }
        if self.party(proposer.other()).is_crashed() {
            // No counterparty to sign with: nothing left but to close.
            self.start_close();
            return;
        }
        let Some(latest) = self.party(proposer).latest_state().copied() else {
            return;
        };
        // Move one coin back and forth: odd updates toward A, even toward B.
        let (new_a, new_b) = if k % 2 == 1 {
            (latest.balance_a + 1, latest.balance_b - 1)
        } else {
            (latest.balance_a - 1, latest.balance_b + 1)
        };
        let salt = self.next_salt();
        match self.party_mut(proposer).propose_update(new_a, new_b, salt) {
            Ok(effects) => self.apply_party_effects(proposer, effects),
            Err(e) => {
                // Usually the proposer's own acks for the previous update
                // are still in flight; try again shortly.
                let now = self.now();
                self.trace.push(
                    now,
                    "note",
                    proposer.label().to_string(),
                    "-".to_string(),
                    format!("update {k} not proposed yet: {e}"),
                );
                self.schedule_timer(50, TIMER_DO_UPDATE);
            }
        }
    }

    fn start_close(&mut self) {
        if self.script.close_started {
            return;
        }
        self.script.close_started = true;
        self.script.stage = Stage::Closing;
        let now = self.now();

        match self.cfg.scenario {
            ScenarioKind::HonestFlow => {
                self.script.close_requested_at = Some(now);
                let effects = self.party_a.request_optimistic_close();
                self.apply_party_effects(PartyRole::A, effects);
            }
            ScenarioKind::UnilateralClose
            | ScenarioKind::CensorshipAttack
            | ScenarioKind::FeeReconciliation => {
                self.script.close_requested_at = Some(now);
                let effects = self.party_a.request_optimistic_close();
                self.apply_party_effects(PartyRole::A, effects);
                self.schedule_timer(5_000, TIMER_ESCALATE);
            }
            ScenarioKind::ByzantineF | ScenarioKind::BribingAttack => {
                self.script.close_requested_at = Some(now);
                let (bribe, claim_seq) = match self.cfg.party_a {
                    PartyStrategy::StaleCloseBriber { bribe, target_seq } => (bribe, target_seq),
                    _ => (self.cfg.bribe, 2),
                };
                // The byzantine-f run bribes only its co-conspirators; the
                // bribing-attack run makes everyone an offer.
                let targets: Vec<u32> = if self.cfg.scenario == ScenarioKind::BribingAttack {
                    (0..self.cfg.n as u32).collect()
                } else {
                    (0..self.cfg.deviant_wardens as u32).collect()
                };
                let effects = self.party_a.offer_bribes(&targets, bribe, claim_seq);
                self.apply_party_effects(PartyRole::A, effects);
                let effects = self.party_a.request_pessimistic_close();
                self.apply_party_effects(PartyRole::A, effects);
            }
            ScenarioKind::HostageAttempt => {
                self.script.close_requested_at = Some(now);
                let effects = self.party_a.request_pessimistic_close();
                self.apply_party_effects(PartyRole::A, effects);
            }
            ScenarioKind::CrashParty => {
                self.script.close_requested_at = Some(now);
                let effects = self.party_b.request_pessimistic_close();
                self.apply_party_effects(PartyRole::B, effects);
            }
            ScenarioKind::ThresholdBoundary => {
                if !self.script.boundary_proposed {
                    // One more update that will gather exactly t-1 acks:
                    // the top f+1 wardens receive it long after the close.
                    self.script.boundary_proposed = true;
                    let Some(latest) = self.party_a.latest_state().copied() else {
                        return;
                    };
                    let salt = self.next_salt();
                    let (new_a, new_b) = (latest.balance_a + 1, latest.balance_b - 1);
                    match self.party_a.propose_update(new_a, new_b, salt) {
                        Ok(effects) => self.apply_party_effects(PartyRole::A, effects),
                        Err(e) => self.trace.push(
                            now,
                            "note",
                            "party_a".to_string(),
                            "-".to_string(),
                            format!("boundary update failed: {e}"),
                        ),
                    }
                    self.schedule_timer(1_500, TIMER_BOUNDARY_CLOSE);
                }
            }
            ScenarioKind::SignAfterClose => {
                // Bait update: proposed right before the close request, so
                // its announcement races the closing claims.
                let Some(latest) = self.party_a.latest_state().copied() else {
                    return;
                };
                let salt = self.next_salt();
                let (new_a, new_b) = (latest.balance_a + 1, latest.balance_b - 1);
                match self.party_a.propose_update(new_a, new_b, salt) {
                    Ok(effects) => self.apply_party_effects(PartyRole::A, effects),
                    Err(e) => self.trace.push(
                        now,
                        "note",
                        "party_a".to_string(),
                        "-".to_string(),
                        format!("bait update failed: {e}"),
                    ),
                }
                self.schedule_timer(60, TIMER_BAIT_CLOSE);
            }
            ScenarioKind::AuditFlow => {
                self.schedule_timer(100, TIMER_AUDIT_REQUEST);
            }
            ScenarioKind::BaselineCensorship => {}
        }
    }

    fn escalate(&mut self) {
        if self.script.escalated {
            return;
        }
        let phase = self
            .ledger
            .contract(&self.channel)
            .map(|c| c.phase)
            .unwrap_or(Phase::Deployed);
        if phase == Phase::Closed {
            return;
        }
        self.script.escalated = true;
        let effects = self.party_a.request_pessimistic_close();
        self.apply_party_effects(PartyRole::A, effects);
    }

    fn finalize_audit(&mut self) {
        if self.script.audit_report.is_some() {
            return;
        }
        let Some((closing_seq, head)) = self.script.audit_closing else {
            return;
        };
        let report = self.auditor.verdict(closing_seq, &head);
        let now = self.now();
        self.trace.push(
            now,
            "audit-verdict",
            "auditor".to_string(),
            "-".to_string(),
            report.verdict.clone(),
        );
        self.script.audit_report = Some(report);
        self.check_done();
    }

    /// Withdraw flows are exercised at the ledger level; scenarios always
    /// run to a close. Kept here so the beneficiary mapping stays in one
    /// place for future pre-open-cancellation scripts.
    #[allow(dead_code)]
    fn withdraw_all(&mut self) {
        let actors = [Beneficiary::PartyA, Beneficiary::PartyB];
        for actor in actors {
            let tx = Tx::Withdraw {
                channel: self.channel,
                actor,
            };
            self.submit_traced(&actor.label(), tx);
        }
    }
}
