//! The simulation world: actors wired through the deterministic network
//! and the chain, plus the omniscient safety oracle and report assembly.

use super::config::{AdversaryKind, ConfigError, ModeKind, ScenarioConfig, ScenarioKind};
use super::report::{BaselineOutcome, RunReport, REPORT_SCHEMA_VERSION};
use super::script::ScriptState;
use crate::baseline::BaselineState;
use crate::brick_plus::Auditor;
use crate::channel::{ChannelId, PartyRole};
use crate::incentives::{settlement_audit, SettlementInputs};
use crate::ledger::{
    Beneficiary, ChainPolicy, ChannelMode, CloseKind, DeployParams, Ledger, Phase, Tx, TxSelector,
};
use crate::netsim::{ActorId, Net, NetAttack, Schedule, SimEvent, TimeUs, Trace, MILLISECOND};
use crate::party::{Msg, Party, PartyEffect, PartyStrategy};
use crate::primitives::{KeyPair, PublicKey};
use crate::warden::{Warden, WardenStrategy};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Everything a finished run hands back: the report plus the exportable
/// trace and chain dump.
pub struct SimOutput {
    pub report: RunReport,
    pub trace_jsonl: String,
    pub chain_json: String,
}

/// Omniscient run observer: tracks every ack signature produced and every
/// claim signed, independent of delivery, to judge safety afterwards.
#[derive(Default)]
pub(super) struct Oracle {
    pub threshold: u64,
    ack_signers: BTreeMap<u64, BTreeSet<PublicKey>>,
    claims_signed: BTreeMap<PublicKey, Vec<u64>>,
    acks_max: BTreeMap<PublicKey, u64>,
}

impl Oracle {
    pub fn note_ack(&mut self, warden: PublicKey, seq: u64) {
        self.ack_signers.entry(seq).or_default().insert(warden);
        let e = self.acks_max.entry(warden).or_insert(0);
        *e = (*e).max(seq);
    }

    pub fn note_claim(&mut self, warden: PublicKey, seq: u64) {
        self.claims_signed.entry(warden).or_default().push(seq);
    }

    /// Highest seq acknowledged by at least t distinct wardens.
    pub fn freshest_ack_committed(&self) -> u64 {
        self.ack_signers
            .iter()
            .filter(|(_, signers)| signers.len() as u64 >= self.threshold)
            .map(|(seq, _)| *seq)
            .max()
            .unwrap_or(0)
    }

    pub fn ack_counts(&self) -> BTreeMap<u64, u64> {
        self.ack_signers
            .iter()
            .map(|(seq, signers)| (*seq, signers.len() as u64))
            .collect()
    }

    /// No warden whose strategy is honest may ever have produced an ack
    /// above one of its own closing claims.
    pub fn equivocation_scan(&self, honest: &BTreeSet<PublicKey>) -> Vec<String> {
        let mut violations = Vec::new();
        for (warden, claims) in &self.claims_signed {
            if !honest.contains(warden) {
                continue;
            }
            let max_ack = self.acks_max.get(warden).copied().unwrap_or(0);
            for claim_seq in claims {
                if max_ack > *claim_seq {
                    violations.push(format!(
                        "honest warden {} acked {} above its claim {}",
                        warden.to_hex(),
                        max_ack,
                        claim_seq
                    ));
                }
            }
        }
        violations
    }
}

pub(super) struct World {
    pub cfg: ScenarioConfig,
    pub sched: Schedule<Msg>,
    pub net: Net<Msg>,
    pub ledger: Ledger,
    pub channel: ChannelId,
    pub party_a: Party,
    pub party_b: Party,
    pub wardens: Vec<Warden>,
    pub auditor_key: KeyPair,
    pub auditor: Auditor,
    pub oracle: Oracle,
    pub trace: Trace,
    pub script: ScriptState,
    pub salts: ChaCha20Rng,
    pub limit_us: TimeUs,
    pub block_interval_us: TimeUs,
    pub done: bool,
}

/// Run a scenario to completion and produce its report.
pub fn run(cfg: &ScenarioConfig) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    match cfg.mode {
        ModeKind::Baseline => run_baseline(cfg),
        _ => run_channel(cfg),
    }
}

fn channel_mode(cfg: &ScenarioConfig) -> ChannelMode {
    match cfg.mode {
        ModeKind::BrickPlus => ChannelMode::BrickPlus,
        _ => ChannelMode::Brick,
    }
}

fn seed32(rng: &mut ChaCha20Rng) -> [u8; 32] {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

impl World {
    fn setup(cfg: &ScenarioConfig) -> World {
        let mut master = ChaCha20Rng::seed_from_u64(cfg.seed);
        let key_a = KeyPair::from_seed(seed32(&mut master));
        let key_b = KeyPair::from_seed(seed32(&mut master));
        let warden_keys: Vec<KeyPair> = (0..cfg.n)
            .map(|_| KeyPair::from_seed(seed32(&mut master)))
            .collect();
        let auditor_key = KeyPair::from_seed(seed32(&mut master));
        let net_seed = master.gen::<u64>();
        let ledger_seed = master.gen::<u64>();
        let salts = ChaCha20Rng::seed_from_u64(master.gen::<u64>());

        let mode = channel_mode(cfg);
        let params = DeployParams {
            party_a: key_a.public(),
            party_b: key_b.public(),
            warden_key_hashes: warden_keys.iter().map(|k| k.public().key_hash()).collect(),
            threshold: cfg.t(),
            closing_fee: cfg.closing_fee,
            mode,
            auditors: vec![auditor_key.public()],
        };
        let channel = ChannelId::derive(0, &params.digest());

        let policy = chain_policy(cfg, &warden_keys);
        let mut ledger = Ledger::new(cfg.confirm_depth, policy, ledger_seed);
        ledger.submit(Tx::Deploy { params });

        let warden_pks: Vec<PublicKey> = warden_keys.iter().map(|k| k.public()).collect();
        let mk_party = |keys: &KeyPair, role: PartyRole, strategy: PartyStrategy| {
            Party::new(
                keys.clone(),
                role,
                channel,
                key_a.public(),
                key_b.public(),
                warden_pks.clone(),
                cfg.update_fee,
                cfg.t(),
                mode,
                strategy,
                cfg.v(),
            )
        };
        let mut party_a = mk_party(&key_a, PartyRole::A, cfg.party_a);
        let party_b = mk_party(&key_b, PartyRole::B, cfg.party_b);
        party_a.tamper_history = cfg.audit_tamper;

        let wardens: Vec<Warden> = warden_keys
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let strategy = if (i as u64) < cfg.deviant_wardens {
                    cfg.deviant_strategy.unwrap_or(WardenStrategy::Honest)
                } else {
                    WardenStrategy::Honest
                };
                Warden::new(
                    k.clone(),
                    channel,
                    key_a.public(),
                    key_b.public(),
                    cfg.update_fee,
                    mode,
                    strategy,
                )
            })
            .collect();

        let net = build_net(cfg, net_seed);
        let mut sched = Schedule::new();
        sched.push_at(
            cfg.block_interval_ms * MILLISECOND,
            SimEvent::BlockTick,
        );

        World {
            cfg: cfg.clone(),
            sched,
            net,
            ledger,
            channel,
            party_a,
            party_b,
            wardens,
            auditor_key,
            auditor: Auditor::new(),
            oracle: Oracle {
                threshold: cfg.t(),
                ..Default::default()
            },
            trace: Trace::new(),
            script: ScriptState::new(cfg),
            salts,
            limit_us: cfg.run_limit_ms * MILLISECOND,
            block_interval_us: cfg.block_interval_ms * MILLISECOND,
            done: false,
        }
    }

    pub fn party_mut(&mut self, role: PartyRole) -> &mut Party {
        match role {
            PartyRole::A => &mut self.party_a,
            PartyRole::B => &mut self.party_b,
        }
    }

    pub fn party(&self, role: PartyRole) -> &Party {
        match role {
            PartyRole::A => &self.party_a,
            PartyRole::B => &self.party_b,
        }
    }

    pub fn next_salt(&mut self) -> [u8; 32] {
        seed32(&mut self.salts)
    }

    pub fn now(&self) -> TimeUs {
        self.sched.now()
    }

    fn run_loop(&mut self) {
        while !self.done {
            let Some(ev) = self.sched.pop_until(self.limit_us) else {
                break;
            };
            match ev.event {
                SimEvent::Deliver { from, to, msg } => self.on_deliver(from, to, msg),
                SimEvent::BlockTick => self.on_block_tick(),
                SimEvent::Timer { actor, tag } => self.script_on_timer(actor, tag),
            }
        }
    }

    pub fn apply_party_effects(&mut self, role: PartyRole, effects: Vec<PartyEffect>) {
        let from = match role {
            PartyRole::A => ActorId::PartyA,
            PartyRole::B => ActorId::PartyB,
        };
        for effect in effects {
            match effect {
                PartyEffect::Send { to, msg } => {
                    self.net.send(&mut self.sched, from, to, msg);
                }
                PartyEffect::Broadcast { msgs } => {
                    self.trace.push(
                        self.now(),
                        "broadcast",
                        from.label(),
                        format!("{} wardens", msgs.len()),
                        summarize(&msgs[0].1),
                    );
                    self.net.broadcast(&mut self.sched, from, msgs);
                }
                PartyEffect::Submit(tx) => {
                    self.trace.push(
                        self.now(),
                        "submit",
                        from.label(),
                        "chain".to_string(),
                        tx.kind().to_string(),
                    );
                    self.ledger.submit(tx);
                }
                PartyEffect::Committed { seq } => {
                    self.trace.push(
                        self.now(),
                        "committed",
                        from.label(),
                        "-".to_string(),
                        format!("seq {seq}"),
                    );
                    self.script_on_committed(role, seq);
                }
                PartyEffect::Note(text) => {
                    self.trace
                        .push(self.now(), "note", from.label(), "-".to_string(), text);
                }
            }
        }
    }

    fn on_deliver(&mut self, from: ActorId, to: ActorId, msg: Msg) {
        self.trace.push(
            self.now(),
            "deliver",
            from.label(),
            to.label(),
            summarize(&msg),
        );
        match to {
            ActorId::PartyA | ActorId::PartyB => {
                let role = if to == ActorId::PartyA {
                    PartyRole::A
                } else {
                    PartyRole::B
                };
                if let Msg::BribeDecision { amount, accept } = msg {
                    if let ActorId::Warden(i) = from {
                        let pk = self.wardens[i as usize].public();
                        let effects =
                            self.party_mut(role).on_bribe_decision_from(pk, amount, accept);
                        self.apply_party_effects(role, effects);
                        if accept {
                            self.script.bribes_accepted += 1;
                        } else {
                            self.script.bribes_rejected += 1;
                        }
                    }
                    return;
                }
                let effects = self.party_mut(role).on_msg(&msg);
                self.apply_party_effects(role, effects);
            }
            ActorId::Warden(i) => self.deliver_to_warden(from, i, msg),
            ActorId::Auditor => {
                if let Msg::HistoryResponse { states } = msg {
                    let role = if from == ActorId::PartyA {
                        PartyRole::A
                    } else {
                        PartyRole::B
                    };
                    self.auditor.on_history(role, states);
                }
            }
        }
    }

    fn deliver_to_warden(&mut self, from: ActorId, index: u32, msg: Msg) {
        let role = match from {
            ActorId::PartyA => PartyRole::A,
            ActorId::PartyB => PartyRole::B,
            _ => return,
        };
        let warden = &mut self.wardens[index as usize];
        let warden_pk = warden.public();
        match msg {
            Msg::Announce { msg, fee } => match warden.on_announcement(role, &msg, fee.as_ref()) {
                Ok(ack) => {
                    self.oracle.note_ack(warden_pk, ack.seq);
                    self.net
                        .send(&mut self.sched, ActorId::Warden(index), from, Msg::Ack { ack });
                }
                Err(reason) => {
                    self.trace.push(
                        self.now(),
                        "ack-rejected",
                        ActorId::Warden(index).label(),
                        from.label(),
                        format!("seq {}: {:?}", msg.ann.seq, reason),
                    );
                }
            },
            Msg::CloseRequest => {
                if let Some(claim) = warden.on_close_request() {
                    self.oracle.note_claim(warden_pk, claim.seq);
                    self.trace.push(
                        self.now(),
                        "submit",
                        ActorId::Warden(index).label(),
                        "chain".to_string(),
                        format!("closing-claim seq {}", claim.seq),
                    );
                    self.ledger.submit(Tx::RecordClaim {
                        channel: self.channel,
                        claim,
                    });
                }
            }
            Msg::BribeOffer { amount, claim_seq } => {
                let accept = warden.on_bribe_offer(amount, self.cfg.collateral(), self.cfg.epsilon);
                self.trace.push(
                    self.now(),
                    "bribe-decision",
                    ActorId::Warden(index).label(),
                    from.label(),
                    format!("offer {amount} for seq {claim_seq}: accept={accept}"),
                );
                self.net.send(
                    &mut self.sched,
                    ActorId::Warden(index),
                    from,
                    Msg::BribeDecision { amount, accept },
                );
            }
            _ => {}
        }
    }

    fn on_block_tick(&mut self) {
        let now = self.now();
        let (height, tx_summaries): (u64, Vec<(String, bool, Option<String>)>) = {
            let block = self.ledger.advance_block();
            (
                block.height,
                block
                    .txs
                    .iter()
                    .map(|t| (t.tx.kind().to_string(), t.ok, t.error.clone()))
                    .collect(),
            )
        };
        for (kind, ok, error) in &tx_summaries {
            self.trace.push(
                now,
                "tx",
                "chain".to_string(),
                format!("block {height}"),
                match error {
                    Some(e) => format!("{kind}: rejected ({e})"),
                    None => format!("{kind}: {}", if *ok { "applied" } else { "rejected" }),
                },
            );
        }

        self.script_on_block();

        if !self.done {
            let effects = self.party_a.on_block(&self.ledger);
            self.apply_party_effects(PartyRole::A, effects);
            let effects = self.party_b.on_block(&self.ledger);
            self.apply_party_effects(PartyRole::B, effects);
            self.sched
                .push_after(self.block_interval_us, SimEvent::BlockTick);
        }
    }

    pub(super) fn honest_warden_pks(&self) -> BTreeSet<PublicKey> {
        self.wardens
            .iter()
            .filter(|w| w.strategy() == WardenStrategy::Honest)
            .map(|w| w.public())
            .collect()
    }

    fn finish(self) -> SimOutput {
        let mut violations = Vec::new();

        let contract = self.ledger.contract(&self.channel).cloned();
        let (final_phase, close_kind, closing_seq) = match &contract {
            Some(c) => (
                format!("{:?}", c.phase),
                c.closed.as_ref().map(|s| format!("{:?}", s.kind)),
                c.closed.as_ref().and_then(|s| s.closing_seq),
            ),
            None => ("NotDeployed".to_string(), None, None),
        };

        // Safety: the closing state's seq must equal the freshest committed
        // seq, where a both-signed state settled on-chain also counts as
        // committed. Cooperative closes are safe by agreement.
        let ack_committed = self.oracle.freshest_ack_committed();
        let freshest_committed = match closing_seq {
            Some(s) => ack_committed.max(s),
            None => ack_committed,
        };
        let safety_ok = match contract.as_ref().and_then(|c| c.closed.as_ref()) {
            Some(summary) => match summary.kind {
                CloseKind::Optimistic | CloseKind::PessimisticForfeit => true,
                CloseKind::PessimisticState => summary.closing_seq == Some(freshest_committed),
            },
            None => true,
        };
        if !safety_ok {
            violations.push(format!(
                "safety: closed at {:?} but freshest committed is {}",
                closing_seq, freshest_committed
            ));
        }

        violations.extend(self.oracle.equivocation_scan(&self.honest_warden_pks()));

        if self.script.close_requested_at.is_some() && self.script.closed_at.is_none() {
            violations.push("liveness: close requested but never reached Closed".to_string());
        }
        if self.sched.pending_deliveries() > 0 && self.done {
            violations.push(format!(
                "eventual delivery: {} messages still undelivered at completion",
                self.sched.pending_deliveries()
            ));
        }

        // Settlement: exact conservation plus the fee-channel totals.
        let mut deposits: BTreeMap<String, u64> = BTreeMap::new();
        let mut payouts: BTreeMap<String, u64> = BTreeMap::new();
        let mut payout_reasons: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        if let Some(c) = &contract {
            for e in &c.deposits {
                *deposits.entry(e.who.label()).or_insert(0) += e.amount;
            }
            for e in &c.payouts {
                *payouts.entry(e.who.label()).or_insert(0) += e.amount;
                *payout_reasons
                    .entry(e.who.label())
                    .or_default()
                    .entry(e.reason.clone())
                    .or_insert(0) += e.amount;
            }
        }

        let mut fee_channels: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut bribes: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (label, party) in [("party_a", &self.party_a), ("party_b", &self.party_b)] {
            for (i, w) in self.wardens.iter().enumerate() {
                let paid = party.fee_paid_to(&w.public());
                if paid > 0 {
                    fee_channels.insert((label.to_string(), format!("warden_{i}")), paid);
                }
            }
            for (pk, amount) in party.bribes_paid() {
                let windex = self.wardens.iter().position(|w| w.public() == *pk).unwrap();
                bribes.insert((label.to_string(), format!("warden_{windex}")), *amount);
            }
        }
        let inputs = SettlementInputs {
            deposits: deposits.clone(),
            payouts: payouts.clone(),
            fee_channels,
            bribes,
            paid_updates: self.party_a.announced_updates() + self.party_b.announced_updates(),
            update_fee: self.cfg.update_fee,
            committee: self.cfg.n,
            paying_parties: 1,
        };
        let terminal = matches!(
            contract.as_ref().map(|c| c.phase),
            Some(Phase::Closed) | Some(Phase::Cancelled)
        );
        let fees = match settlement_audit(&inputs) {
            Ok(report) => Some(report),
            Err(e) => {
                if terminal {
                    violations.push(format!("settlement: {e}"));
                }
                None
            }
        };

        // Per-warden run income: update fees (party-side cumulative, the
        // redeemable one-way channel totals) + closing-fee awards + bribes
        // - slashed collateral.
        let mut warden_income: BTreeMap<String, i64> = BTreeMap::new();
        if let Some(c) = &contract {
            for (i, w) in self.wardens.iter().enumerate() {
                let label = format!("warden_{i}");
                let fees_in = self.party_a.fee_paid_to(&w.public())
                    + self.party_b.fee_paid_to(&w.public());
                let paid_out: u64 = c
                    .payouts
                    .iter()
                    .filter(|e| e.who == Beneficiary::Warden(i as u32))
                    .map(|e| e.amount)
                    .sum();
                let deposited: u64 = c
                    .deposits
                    .iter()
                    .filter(|e| e.who == Beneficiary::Warden(i as u32))
                    .map(|e| e.amount)
                    .sum();
                let income = fees_in as i64 + w.bribe_income() as i64 + paid_out as i64
                    - deposited as i64;
                warden_income.insert(label, income);
            }
        }

        let slashed = contract
            .as_ref()
            .map(|c| {
                c.slashed
                    .iter()
                    .map(|i| format!("warden_{i}"))
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        let proofs_of_fraud = contract
            .as_ref()
            .and_then(|c| c.closed.as_ref())
            .map(|s| s.slashed.len() as u64)
            .unwrap_or(0);

        let liveness_ms = match (self.script.close_requested_at, self.script.closed_at) {
            (Some(start), Some(end)) => Some(crate::netsim::to_ms(end - start)),
            _ => None,
        };

        let updates_committed = ack_committed.saturating_sub(1);

        let report = RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            scenario: self.cfg.scenario.name().to_string(),
            seed: self.cfg.seed,
            mode: self.cfg.mode.name().to_string(),
            final_phase,
            close_kind,
            closing_seq,
            freshest_committed_seq: freshest_committed,
            safety_ok,
            liveness_ms,
            updates_committed,
            ack_counts: self.oracle.ack_counts(),
            updates_planned: self.cfg.updates,
            proofs_of_fraud,
            slashed,
            deposits,
            payouts,
            payout_reasons,
            warden_income,
            bribes_accepted: self.script.bribes_accepted,
            bribes_rejected: self.script.bribes_rejected,
            fees,
            event_counts: self.trace.counts_by_kind(),
            trace_digest: self.trace.digest().to_hex(),
            audit: self.script.audit_report.clone(),
            baseline: None,
            violations,
        };
        SimOutput {
            report,
            trace_jsonl: self.trace.to_jsonl(),
            chain_json: serde_json::to_string_pretty(&crate::ledger::dump_chain(&self.ledger))
                .expect("chain dump serializes"),
        }
    }
}

fn build_net(cfg: &ScenarioConfig, seed: u64) -> Net<Msg> {
    let rtt_us = cfg.rtt_ms * MILLISECOND;
    let net = Net::new(rtt_us, cfg.jitter_us, cfg.stagger_us, seed);

    // The threshold-boundary scenario defines its own delivery attack: the
    // announcement above the last committed seq is held away from the top
    // f+1 wardens until after they answered the close request, and the
    // proposer's finalize message is held away from the counterparty, so
    // only one side ever broadcasts it (and pays for it).
    if cfg.scenario == ScenarioKind::ThresholdBoundary {
        let boundary_seq = cfg.updates + 2;
        let first_delayed = 2 * cfg.f(); // wardens 2f..3f receive late
        return net.with_attack(NetAttack::TargetedDelay {
            hold_us: 30_000 * MILLISECOND,
            selector: Box::new(move |_, to, msg: &Msg| match (to, msg) {
                (ActorId::Warden(i), Msg::Announce { msg, .. }) => {
                    msg.ann.seq == boundary_seq && i as u64 >= first_delayed
                }
                (ActorId::PartyB, Msg::UpdateFinalize { seq, .. }) => *seq == boundary_seq,
                _ => false,
            }),
        });
    }

    // Sign-after-close: the bait announcement reaches the deviant wardens
    // only after they have published their closing claims.
    if cfg.scenario == ScenarioKind::SignAfterClose {
        let bait_seq = cfg.updates + 2;
        let deviants = cfg.deviant_wardens;
        return net.with_attack(NetAttack::TargetedDelay {
            hold_us: 800 * MILLISECOND,
            selector: Box::new(move |_, to, msg: &Msg| {
                matches!(
                    (to, msg),
                    (ActorId::Warden(i), Msg::Announce { msg, .. })
                        if msg.ann.seq == bait_seq && (i as u64) < deviants
                )
            }),
        });
    }

    match cfg.adversary {
        AdversaryKind::HonestDelays | AdversaryKind::CensorLedger { .. } => net,
        AdversaryKind::Reorder { max_hold_ms } => net.with_attack(NetAttack::Reorder {
            max_hold_us: max_hold_ms * MILLISECOND,
            selector: Box::new(|_, _, _| true),
        }),
        AdversaryKind::TargetedDelay { hold_ms } => {
            // Generic preset: the close-request fan-out is what the
            // adversary sits on.
            net.with_attack(NetAttack::TargetedDelay {
                hold_us: hold_ms * MILLISECOND,
                selector: Box::new(|_, _, msg: &Msg| matches!(msg, Msg::CloseRequest)),
            })
        }
    }
}

fn chain_policy(cfg: &ScenarioConfig, warden_keys: &[KeyPair]) -> ChainPolicy {
    match cfg.adversary {
        AdversaryKind::CensorLedger { hold_blocks } => match cfg.scenario {
            ScenarioKind::BaselineCensorship => ChainPolicy::Censor {
                selector: TxSelector::BaselineDisputes,
                hold_blocks,
            },
            ScenarioKind::ThresholdBoundary => ChainPolicy::Censor {
                // The honest fresh claims at the uncommitted seq stay out
                // of blocks until the close has finalized.
                selector: TxSelector::ClaimsAtSeq(cfg.updates + 2),
                hold_blocks,
            },
            _ => ChainPolicy::Censor {
                selector: TxSelector::ClaimsFromWardens(
                    warden_keys.iter().map(|k| k.public()).collect(),
                ),
                hold_blocks,
            },
        },
        _ => {
            if cfg.liveness_bound <= 1 {
                ChainPolicy::Prompt
            } else {
                ChainPolicy::UniformDelay {
                    max_extra_blocks: cfg.liveness_bound - 1,
                }
            }
        }
    }
}

fn summarize(msg: &Msg) -> String {
    match msg {
        Msg::UpdateProposal { state, .. } => format!("update-proposal seq {}", state.seq),
        Msg::UpdateAccept { seq, announce_sig, .. } => format!(
            "update-accept seq {seq}{}",
            if announce_sig.is_none() {
                " (announce sig withheld)"
            } else {
                ""
            }
        ),
        Msg::UpdateFinalize { seq, .. } => format!("update-finalize seq {seq}"),
        Msg::Announce { msg, .. } => format!("announce seq {}", msg.ann.seq),
        Msg::Ack { ack } => format!("ack seq {}", ack.seq),
        Msg::CloseRequest => "close-request".to_string(),
        Msg::OptCloseProposal { .. } => "opt-close-proposal".to_string(),
        Msg::BribeOffer { amount, claim_seq } => {
            format!("bribe-offer {amount} for seq {claim_seq}")
        }
        Msg::BribeDecision { accept, .. } => format!("bribe-decision accept={accept}"),
        Msg::HistoryRequest { upto_seq } => format!("history-request upto {upto_seq}"),
        Msg::HistoryResponse { states } => format!("history-response {} states", states.len()),
    }
}

fn run_channel(cfg: &ScenarioConfig) -> Result<SimOutput, ConfigError> {
    let mut world = World::setup(cfg);
    world.run_loop();
    Ok(world.finish())
}

/// The timeout channel under the same censorship adversary, paired with a
/// committee-backed run for the safety comparison.
fn run_baseline(cfg: &ScenarioConfig) -> Result<SimOutput, ConfigError> {
    let hold_blocks = match cfg.adversary {
        AdversaryKind::CensorLedger { hold_blocks } => hold_blocks,
        _ => 0,
    };
    let mut ledger = Ledger::new(
        cfg.confirm_depth,
        if hold_blocks > 0 {
            ChainPolicy::Censor {
                selector: TxSelector::BaselineDisputes,
                hold_blocks,
            }
        } else {
            ChainPolicy::Prompt
        },
        cfg.seed,
    );
    let mut trace = Trace::new();

    // Both-signed states 1..=updates+1 with the alternating one-coin
    // transfer pattern.
    let mut states = Vec::new();
    let (mut a, mut b) = (cfg.v_a, cfg.v_b);
    states.push(BaselineState {
        seq: 1,
        balance_a: a,
        balance_b: b,
    });
    for k in 1..=cfg.updates {
        if k % 2 == 1 {
            a += 1;
            b -= 1;
        } else {
            a -= 1;
            b += 1;
        }
        states.push(BaselineState {
            seq: k + 1,
            balance_a: a,
            balance_b: b,
        });
    }
    let freshest_seq = cfg.updates + 1;
    ledger.submit(Tx::BaselineOpen {
        id: 1,
        states: states.clone(),
        dispute_window: cfg.dispute_window,
    });

    // Block loop: the cheater closes at the revoked first state; the victim
    // disputes as soon as it sees the close on-chain.
    let mut close_seen = false;
    let mut dispute_sent = false;
    let deposits: BTreeMap<String, u64> = [
        ("party_a".to_string(), cfg.v_a),
        ("party_b".to_string(), cfg.v_b),
    ]
    .into();
    let mut settled = None;
    for _ in 0..(cfg.dispute_window + hold_blocks + 10) {
        let height = {
            let block = ledger.advance_block();
            block.height
        };
        trace.push(
            height * cfg.block_interval_ms * MILLISECOND,
            "block",
            "chain".to_string(),
            format!("height {height}"),
            String::new(),
        );
        if height == 1 {
            ledger.submit(Tx::BaselineClose { id: 1, seq: 1 });
            trace.push(
                height * cfg.block_interval_ms * MILLISECOND,
                "submit",
                "party_a".to_string(),
                "chain".to_string(),
                "baseline-close seq 1 (revoked)".to_string(),
            );
        }
        let status = ledger.baseline(1).unwrap().status;
        if !close_seen {
            if let crate::baseline::BaselineStatus::Closing { .. } = status {
                close_seen = true;
                if !dispute_sent {
                    dispute_sent = true;
                    ledger.submit(Tx::BaselineDispute {
                        id: 1,
                        disputer: PartyRole::B,
                        seq: freshest_seq,
                    });
                    trace.push(
                        height * cfg.block_interval_ms * MILLISECOND,
                        "submit",
                        "party_b".to_string(),
                        "chain".to_string(),
                        format!("baseline-dispute seq {freshest_seq}"),
                    );
                }
            }
        }
        if let crate::baseline::BaselineStatus::Settled { seq, disputed } = status {
            settled = Some((seq, disputed, height));
            if ledger.pending_len() == 0 {
                break;
            }
        }
    }

    let (settled_seq, disputed, _height) = settled.expect("baseline settles within the loop");
    let safety_ok = settled_seq == freshest_seq;
    let payouts: BTreeMap<String, u64> = {
        let (pa, pb) = ledger.baseline(1).unwrap().payouts.unwrap();
        [("party_a".to_string(), pa), ("party_b".to_string(), pb)].into()
    };

    // Paired run: the committee-backed channel under the identical
    // censorship policy.
    let paired_brick_safety_ok = {
        let mut brick_cfg = ScenarioConfig::preset(ScenarioKind::CensorshipAttack, cfg.seed);
        brick_cfg.adversary = AdversaryKind::CensorLedger {
            hold_blocks: hold_blocks.max(1),
        };
        brick_cfg.updates = cfg.updates;
        run_channel(&brick_cfg).ok().map(|o| o.report.safety_ok)
    };

    let mut violations = Vec::new();
    let deposits_total: u64 = deposits.values().sum();
    let payouts_total: u64 = payouts.values().sum();
    if deposits_total != payouts_total {
        violations.push(format!(
            "settlement: deposits {deposits_total} != payouts {payouts_total}"
        ));
    }

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        mode: cfg.mode.name().to_string(),
        final_phase: "Settled".to_string(),
        close_kind: Some(if disputed { "Disputed" } else { "TimeoutExpired" }.to_string()),
        closing_seq: Some(settled_seq),
        freshest_committed_seq: freshest_seq,
        safety_ok,
        liveness_ms: None,
        updates_committed: cfg.updates,
        ack_counts: BTreeMap::new(),
        updates_planned: cfg.updates,
        proofs_of_fraud: 0,
        slashed: Vec::new(),
        deposits,
        payouts,
        payout_reasons: BTreeMap::new(),
        warden_income: BTreeMap::new(),
        bribes_accepted: 0,
        bribes_rejected: 0,
        fees: None,
        event_counts: trace.counts_by_kind(),
        trace_digest: trace.digest().to_hex(),
        audit: None,
        baseline: Some(BaselineOutcome {
            settled_seq,
            freshest_seq,
            disputed,
            safety_ok,
            paired_brick_safety_ok,
        }),
        violations,
    };
    Ok(SimOutput {
        report,
        trace_jsonl: trace.to_jsonl(),
        chain_json: serde_json::to_string_pretty(&crate::ledger::dump_chain(&ledger))
            .expect("chain dump serializes"),
    })
}
