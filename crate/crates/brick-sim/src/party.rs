//! Channel-party state machine: update proposal and countersigning,
//! consistent-broadcast client, both close paths, claim monitoring with
//! proof-of-fraud assembly, and the rational/Byzantine party strategies.
//!
//! A party holds at most one update in flight: the next proposal waits for
//! the current announcement to commit or be abandoned. It archives the
//! highest ack it ever received from each warden, which is enough to build
//! every possible proof of fraud while keeping storage constant.

use crate::brick_plus::{extend_chain, GENESIS_PREV_HEAD};
use crate::channel::{
    announce_plaintext, commit_plaintext, fee_plaintext, Announcement, AnnouncementMsg, ChannelId,
    ChannelState, FeeTicket, HeadAttachment, PartyRole, WardenAck,
};
use crate::ledger::{ChannelMode, Ledger, Phase, ProofOfFraud, Tx};
use crate::netsim::ActorId;
use crate::primitives::{Hash32, KeyPair, PublicKey, Signature};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Simulation messages exchanged between actors.
#[derive(Clone, Debug)]
pub enum Msg {
    /// Proposer -> counterparty: new state plus the proposer's commit
    /// signature (over the blinded state, or the chain head in audited
    /// mode).
    UpdateProposal {
        state: ChannelState,
        commit_sig: Signature,
    },
    /// Counterparty -> proposer: its commit signature, and its signature on
    /// the sequence number unless it is withholding.
    UpdateAccept {
        seq: u64,
        commit_sig: Signature,
        announce_sig: Option<Signature>,
    },
    /// Proposer -> counterparty: the proposer's signature on the sequence
    /// number, completing the announcement on both sides.
    UpdateFinalize { seq: u64, announce_sig: Signature },
    /// Party -> warden: announcement, with the update fee attached.
    Announce {
        msg: AnnouncementMsg,
        fee: Option<FeeTicket>,
    },
    /// Warden -> party.
    Ack { ack: WardenAck },
    /// Party -> warden: close().
    CloseRequest,
    /// Party -> counterparty: proposed cooperative closing split.
    OptCloseProposal { balance_a: u64, balance_b: u64 },
    /// Briber -> warden.
    BribeOffer { amount: u64, claim_seq: u64 },
    /// Warden -> briber.
    BribeDecision { amount: u64, accept: bool },
    /// Auditor -> party: hand over the history up to the closing seq.
    HistoryRequest { upto_seq: u64 },
    /// Party -> auditor.
    HistoryResponse { states: Vec<ChannelState> },
}

/// What a party asks the simulation to do.
#[derive(Debug)]
pub enum PartyEffect {
    Send { to: ActorId, msg: Msg },
    /// Staggered burst, one message per destination.
    Broadcast { msgs: Vec<(ActorId, Msg)> },
    Submit(Tx),
    /// The in-flight update gathered t distinct acks.
    Committed { seq: u64 },
    Note(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PartyStrategy {
    Honest,
    /// Countersigns the state hash but never releases its signature on the
    /// sequence number: the update never becomes announceable.
    WithholdCountersign,
    /// Tries to close at an old state: bribes wardens toward `target_seq`
    /// and finalizes without submitting any proof of fraud.
    StaleCloseBriber { target_seq: u64, bribe: u64 },
    /// Goes silent right after the given sequence number commits.
    CrashAfterCommit { seq: u64 },
    /// Never responds to cooperative close proposals (or anything else
    /// optional).
    Silent,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PartyError {
    #[error("an update is already in flight")]
    UpdateInFlight,
    #[error("balances do not conserve the channel total")]
    ConservationViolation,
    #[error("commitment failed validation")]
    BadCommitment,
    #[error("update declined: this party is closing the channel")]
    RejectedByPolicy,
}

#[derive(Clone, Debug)]
struct StateRecord {
    state: ChannelState,
    digest: Hash32,
    commit_sig_a: Option<Signature>,
    commit_sig_b: Option<Signature>,
    ann_sig_a: Option<Signature>,
    ann_sig_b: Option<Signature>,
}

impl StateRecord {
    fn commit_sigs(&self) -> Option<(Signature, Signature)> {
        Some((self.commit_sig_a?, self.commit_sig_b?))
    }

    fn announcement(&self, channel: ChannelId) -> Option<Announcement> {
        Some(Announcement {
            channel,
            seq: self.state.seq,
            sig_a: self.ann_sig_a?,
            sig_b: self.ann_sig_b?,
        })
    }
}

pub struct Party {
    keys: KeyPair,
    pub role: PartyRole,
    channel: ChannelId,
    party_a: PublicKey,
    party_b: PublicKey,
    wardens: Vec<PublicKey>,
    update_fee: u64,
    threshold: u64,
    f: u64,
    mode: ChannelMode,
    strategy: PartyStrategy,
    total: u64,
    states: BTreeMap<u64, StateRecord>,
    heads: BTreeMap<u64, Hash32>,
    latest_valid: u64,
    committed: u64,
    inflight: Option<u64>,
    acks: BTreeMap<PublicKey, WardenAck>,
    fee_paid: BTreeMap<PublicKey, u64>,
    bribes_paid: BTreeMap<PublicKey, u64>,
    crashed: bool,
    closing: bool,
    close_submitted: bool,
    stale_attempted: bool,
    /// Block height at which enough final claims were first available.
    close_ready_since: Option<u64>,
    agree_submitted_at: Option<u64>,
    /// Paid announcements broadcast (sequence numbers above 1).
    announced_updates: u64,
    /// When set, history responses flip one state's balances (audit
    /// tampering knob).
    pub tamper_history: bool,
}

impl Party {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        keys: KeyPair,
        role: PartyRole,
        channel: ChannelId,
        party_a: PublicKey,
        party_b: PublicKey,
        wardens: Vec<PublicKey>,
        update_fee: u64,
        threshold: u64,
        mode: ChannelMode,
        strategy: PartyStrategy,
        total: u64,
    ) -> Party {
        let f = (wardens.len() as u64 - 1) / 3;
        let mut heads = BTreeMap::new();
        heads.insert(0, GENESIS_PREV_HEAD);
        Party {
            keys,
            role,
            channel,
            party_a,
            party_b,
            wardens,
            update_fee,
            threshold,
            f,
            mode,
            strategy,
            total,
            states: BTreeMap::new(),
            heads,
            latest_valid: 0,
            committed: 0,
            inflight: None,
            acks: BTreeMap::new(),
            fee_paid: BTreeMap::new(),
            bribes_paid: BTreeMap::new(),
            crashed: false,
            closing: false,
            close_submitted: false,
            stale_attempted: false,
            close_ready_since: None,
            agree_submitted_at: None,
            announced_updates: 0,
            tamper_history: false,
        }
    }

    pub fn public(&self) -> PublicKey {
        self.keys.public()
    }

    pub fn latest_valid_seq(&self) -> u64 {
        self.latest_valid
    }

    pub fn committed_seq(&self) -> u64 {
        self.committed
    }

    pub fn is_crashed(&self) -> bool {
        self.crashed
    }

    pub fn strategy(&self) -> PartyStrategy {
        self.strategy
    }

    pub fn fee_paid_to(&self, warden: &PublicKey) -> u64 {
        self.fee_paid.get(warden).copied().unwrap_or(0)
    }

    pub fn fee_paid_total(&self) -> u64 {
        self.fee_paid.values().sum()
    }

    pub fn bribes_paid(&self) -> &BTreeMap<PublicKey, u64> {
        &self.bribes_paid
    }

    pub fn announced_updates(&self) -> u64 {
        self.announced_updates
    }

    pub fn latest_state(&self) -> Option<&ChannelState> {
        self.states.get(&self.latest_valid).map(|r| &r.state)
    }

    pub fn archived_ack(&self, warden: &PublicKey) -> Option<&WardenAck> {
        self.acks.get(warden)
    }

    /// Distinct wardens whose archived ack is at exactly `seq`.
    pub fn ack_count_at(&self, seq: u64) -> u64 {
        self.acks.values().filter(|a| a.seq == seq).count() as u64
    }

    fn counterparty_actor(&self) -> ActorId {
        match self.role {
            PartyRole::A => ActorId::PartyB,
            PartyRole::B => ActorId::PartyA,
        }
    }

    fn my_balance(&self, state: &ChannelState) -> u64 {
        state.balance_of(self.role)
    }

    /// Commit digest for a state: the blinded state hash, or the chain head
    /// linking to the previous state in audited mode.
    fn commit_digest(&self, state: &ChannelState) -> Hash32 {
        match self.mode {
            ChannelMode::Brick => state.commitment(),
            ChannelMode::BrickPlus => {
                let prev = self.heads.get(&(state.seq - 1)).copied().unwrap_or(GENESIS_PREV_HEAD);
                extend_chain(&prev, state)
            }
        }
    }

    fn sign_commit(&self, digest: &Hash32, seq: u64) -> Signature {
        self.keys.sign(&commit_plaintext(&self.channel, digest, seq))
    }

    fn sign_announce(&self, seq: u64) -> Signature {
        self.keys.sign(&announce_plaintext(&self.channel, seq))
    }

    fn record_new_state(&mut self, state: ChannelState, digest: Hash32) {
        let mut record = StateRecord {
            state,
            digest,
            commit_sig_a: None,
            commit_sig_b: None,
            ann_sig_a: None,
            ann_sig_b: None,
        };
        let own = self.sign_commit(&digest, state.seq);
        match self.role {
            PartyRole::A => record.commit_sig_a = Some(own),
            PartyRole::B => record.commit_sig_b = Some(own),
        }
        self.heads.insert(state.seq, digest);
        self.states.insert(state.seq, record);
    }

    fn set_other_commit_sig(&mut self, seq: u64, sig: Signature) {
        let role = self.role;
        if let Some(r) = self.states.get_mut(&seq) {
            match role {
                PartyRole::A => r.commit_sig_b = Some(sig),
                PartyRole::B => r.commit_sig_a = Some(sig),
            }
            if r.commit_sigs().is_some() {
                self.latest_valid = self.latest_valid.max(seq);
            }
        }
    }

    fn set_announce_sig(&mut self, seq: u64, role: PartyRole, sig: Signature) {
        if let Some(r) = self.states.get_mut(&seq) {
            match role {
                PartyRole::A => r.ann_sig_a = Some(sig),
                PartyRole::B => r.ann_sig_b = Some(sig),
            }
        }
    }

    fn announcement_msg(&self, seq: u64) -> Option<AnnouncementMsg> {
        let record = self.states.get(&seq)?;
        let ann = record.announcement(self.channel)?;
        let head = match self.mode {
            ChannelMode::Brick => None,
            ChannelMode::BrickPlus => {
                let (sig_a, sig_b) = record.commit_sigs()?;
                Some(HeadAttachment {
                    head: record.digest,
                    sig_a,
                    sig_b,
                })
            }
        };
        Some(AnnouncementMsg { ann, head })
    }

    // ---- update path -----------------------------------------------------

    /// Start a new update at the next sequence number. `salt` comes from
    /// the run's seeded randomness source.
    pub fn propose_update(
        &mut self,
        balance_a: u64,
        balance_b: u64,
        salt: [u8; 32],
    ) -> Result<Vec<PartyEffect>, PartyError> {
        if self.crashed || self.closing {
            return Ok(vec![]);
        }
        if self.inflight.is_some() {
            return Err(PartyError::UpdateInFlight);
        }
        if balance_a + balance_b != self.total {
            return Err(PartyError::ConservationViolation);
        }
        let state = ChannelState {
            seq: self.latest_valid + 1,
            balance_a,
            balance_b,
            salt,
        };
        let digest = self.commit_digest(&state);
        self.record_new_state(state, digest);
        self.inflight = Some(state.seq);
        let commit_sig = match self.role {
            PartyRole::A => self.states[&state.seq].commit_sig_a.unwrap(),
            PartyRole::B => self.states[&state.seq].commit_sig_b.unwrap(),
        };
        Ok(vec![PartyEffect::Send {
            to: self.counterparty_actor(),
            msg: Msg::UpdateProposal { state, commit_sig },
        }])
    }

    /// Validate and countersign an incoming proposal. Returns the accept
    /// message on success; an honest party accepts any well-formed next
    /// state.
    pub fn countersign(
        &mut self,
        state: &ChannelState,
        proposer_commit_sig: &Signature,
    ) -> Result<Msg, PartyError> {
        if self.closing {
            // An honest refusal, not a fault: a closing party signs no
            // further states.
            return Err(PartyError::RejectedByPolicy);
        }
        if state.seq != self.latest_valid + 1 {
            return Err(PartyError::BadCommitment);
        }
        if state.total() != self.total {
            return Err(PartyError::ConservationViolation);
        }
        let digest = self.commit_digest(state);
        let plaintext = commit_plaintext(&self.channel, &digest, state.seq);
        let proposer_pk = match self.role {
            PartyRole::A => self.party_b,
            PartyRole::B => self.party_a,
        };
        if !crate::primitives::verify(&proposer_pk, &plaintext, proposer_commit_sig) {
            return Err(PartyError::BadCommitment);
        }
        self.record_new_state(*state, digest);
        self.set_other_commit_sig(state.seq, *proposer_commit_sig);
        self.inflight = Some(state.seq);

        let commit_sig = match self.role {
            PartyRole::A => self.states[&state.seq].commit_sig_a.unwrap(),
            PartyRole::B => self.states[&state.seq].commit_sig_b.unwrap(),
        };
        let announce_sig = if self.strategy == PartyStrategy::WithholdCountersign {
            None
        } else {
            let sig = self.sign_announce(state.seq);
            self.set_announce_sig(state.seq, self.role, sig);
            Some(sig)
        };
        Ok(Msg::UpdateAccept {
            seq: state.seq,
            commit_sig,
            announce_sig,
        })
    }

    fn on_update_proposal(
        &mut self,
        state: &ChannelState,
        commit_sig: &Signature,
    ) -> Vec<PartyEffect> {
        match self.countersign(state, commit_sig) {
            Ok(msg) => vec![PartyEffect::Send {
                to: self.counterparty_actor(),
                msg,
            }],
            Err(e) => vec![PartyEffect::Note(format!(
                "rejected proposal at seq {}: {e}",
                state.seq
            ))],
        }
    }

    fn on_update_accept(
        &mut self,
        seq: u64,
        commit_sig: &Signature,
        announce_sig: Option<&Signature>,
    ) -> Vec<PartyEffect> {
        if self.states.get(&seq).is_none() || self.inflight != Some(seq) {
            return vec![PartyEffect::Note(format!("unexpected accept for seq {seq}"))];
        }
        self.set_other_commit_sig(seq, *commit_sig);
        let Some(their_announce) = announce_sig else {
            // Withholding counterparty: the state is valid but will never
            // become announceable; the committee-assisted close remains.
            return vec![PartyEffect::Note(format!(
                "counterparty withheld its announcement signature at seq {seq}"
            ))];
        };
        self.set_announce_sig(seq, self.role.other(), *their_announce);
        let own = self.sign_announce(seq);
        self.set_announce_sig(seq, self.role, own);

        let mut effects = vec![PartyEffect::Send {
            to: self.counterparty_actor(),
            msg: Msg::UpdateFinalize {
                seq,
                announce_sig: own,
            },
        }];
        effects.extend(self.broadcast_update(seq));
        effects
    }

    fn on_update_finalize(&mut self, seq: u64, announce_sig: &Signature) -> Vec<PartyEffect> {
        if self.states.get(&seq).is_none() {
            return vec![PartyEffect::Note(format!(
                "finalize for unknown seq {seq}"
            ))];
        }
        self.set_announce_sig(seq, self.role.other(), *announce_sig);
        if self.states[&seq].announcement(self.channel).is_some() {
            self.broadcast_update(seq)
        } else {
            vec![]
        }
    }

    /// Enqueue the fully signed announcement to every warden, paying the
    /// update fee per warden. Both parties broadcast every announcement.
    pub fn broadcast_update(&mut self, seq: u64) -> Vec<PartyEffect> {
        if self.closing {
            return vec![PartyEffect::Note(format!(
                "not broadcasting seq {seq}: closing"
            ))];
        }
        let Some(msg) = self.announcement_msg(seq) else {
            return vec![PartyEffect::Note(format!(
                "announcement at seq {seq} is not fully signed"
            ))];
        };
        if seq > 1 {
            self.announced_updates += 1;
        }
        let mut sends = Vec::new();
        for (i, warden) in self.wardens.clone().iter().enumerate() {
            let fee = if seq > 1 {
                let cumulative = self.fee_paid.entry(*warden).or_insert(0);
                *cumulative += self.update_fee;
                Some(FeeTicket {
                    cumulative: *cumulative,
                    sig: self
                        .keys
                        .sign(&fee_plaintext(&self.channel, warden, *cumulative)),
                })
            } else {
                None
            };
            sends.push((ActorId::Warden(i as u32), Msg::Announce { msg, fee }));
        }
        vec![PartyEffect::Broadcast { msgs: sends }]
    }

    fn on_ack(&mut self, ack: &WardenAck) -> Vec<PartyEffect> {
        if !self.wardens.contains(&ack.warden) || ack.channel != self.channel || !ack.verify() {
            return vec![PartyEffect::Note("dropped invalid ack".to_string())];
        }
        // Archive the highest ack per warden: enough for every proof of
        // fraud and constant storage.
        let keep = self
            .acks
            .get(&ack.warden)
            .map(|prev| ack.seq > prev.seq)
            .unwrap_or(true);
        if keep {
            self.acks.insert(ack.warden, *ack);
        }
        let mut effects = Vec::new();
        if let Some(seq) = self.inflight {
            if self.ack_count_at(seq) >= self.threshold {
                self.committed = seq;
                self.inflight = None;
                effects.push(PartyEffect::Committed { seq });
                if let PartyStrategy::CrashAfterCommit { seq: crash_at } = self.strategy {
                    if seq >= crash_at {
                        self.crashed = true;
                        effects.push(PartyEffect::Note("crashed after commit".to_string()));
                    }
                }
            }
        }
        effects
    }

    // ---- close paths -------------------------------------------------------

    /// Cooperative close: claim the latest valid split on-chain and tell
    /// the counterparty directly.
    pub fn request_optimistic_close(&mut self) -> Vec<PartyEffect> {
        if self.crashed {
            return vec![];
        }
        let Some(state) = self.latest_state().copied() else {
            return vec![PartyEffect::Note("no state to close at".to_string())];
        };
        vec![
            PartyEffect::Submit(Tx::OptCloseRequest {
                channel: self.channel,
                claimant: self.role,
                claimed_balance_a: state.balance_a,
            }),
            PartyEffect::Send {
                to: self.counterparty_actor(),
                msg: Msg::OptCloseProposal {
                    balance_a: state.balance_a,
                    balance_b: state.balance_b,
                },
            },
        ]
    }

    fn on_opt_close_proposal(&mut self, balance_a: u64, balance_b: u64) -> Vec<PartyEffect> {
        if self.crashed || self.strategy == PartyStrategy::Silent {
            return vec![];
        }
        let matches = self
            .latest_state()
            .map(|s| s.balance_a == balance_a && s.balance_b == balance_b)
            .unwrap_or(false);
        if !matches {
            // Disagreement: the channel is unusable; only the
            // committee-assisted path remains.
            let mut effects = vec![PartyEffect::Note(
                "rejected cooperative close at a different state".to_string(),
            )];
            effects.extend(self.request_pessimistic_close());
            effects
        } else {
            // Agreement goes on-chain once the claim is visible there.
            vec![]
        }
    }

    /// Unilateral close: ask every warden for its on-chain claim.
    pub fn request_pessimistic_close(&mut self) -> Vec<PartyEffect> {
        if self.crashed || self.closing {
            return vec![];
        }
        self.closing = true;
        let msgs = (0..self.wardens.len())
            .map(|i| (ActorId::Warden(i as u32), Msg::CloseRequest))
            .collect();
        vec![PartyEffect::Broadcast { msgs }]
    }

    /// Offer a bribe to the given wardens to close at `claim_seq`.
    pub fn offer_bribes(
        &mut self,
        warden_indices: &[u32],
        amount: u64,
        claim_seq: u64,
    ) -> Vec<PartyEffect> {
        warden_indices
            .iter()
            .map(|i| PartyEffect::Send {
                to: ActorId::Warden(*i),
                msg: Msg::BribeOffer {
                    amount,
                    claim_seq,
                },
            })
            .collect()
    }

    fn on_bribe_decision(&mut self, warden: PublicKey, amount: u64, accept: bool) -> Vec<PartyEffect> {
        if accept {
            *self.bribes_paid.entry(warden).or_insert(0) += amount;
        }
        vec![]
    }

    /// Build the proof of fraud against a warden whose on-chain claim sits
    /// below its archived ack, if the archive has one.
    pub fn assemble_proof_of_fraud(
        &self,
        warden: &PublicKey,
        claim_seq: u64,
        claim_sig: &Signature,
    ) -> Option<ProofOfFraud> {
        let ack = self.acks.get(warden)?;
        if ack.seq <= claim_seq {
            return None;
        }
        Some(ProofOfFraud {
            warden: *warden,
            ack: *ack,
            claim_seq,
            claim_sig: *claim_sig,
        })
    }

    /// Chain monitoring: agree to matching cooperative closes, watch
    /// recorded claims once the pessimistic path is on, and finalize the
    /// close when t usable claims are final.
    pub fn on_block(&mut self, ledger: &Ledger) -> Vec<PartyEffect> {
        if self.crashed {
            return vec![];
        }
        let Some(contract) = ledger.contract(&self.channel) else {
            return vec![];
        };
        match contract.phase {
            Phase::PessimisticPending => {
                // Being closed on counts as closing.
                self.closing = true;
            }
            Phase::OptimisticPending => {
                // Agree on-chain to a matching cooperative claim; retry
                // every couple of blocks while the inclusion is pending.
                if self.strategy == PartyStrategy::Silent {
                    return vec![];
                }
                let Some((claimant, claimed_a)) = contract.optimistic else {
                    return vec![];
                };
                if claimant == self.role {
                    return vec![];
                }
                let matches = self
                    .latest_state()
                    .map(|s| s.balance_a == claimed_a)
                    .unwrap_or(false);
                if !matches {
                    return self.request_pessimistic_close();
                }
                let height = ledger.height();
                let due = self
                    .agree_submitted_at
                    .map(|h| height >= h + 2)
                    .unwrap_or(true);
                if due {
                    self.agree_submitted_at = Some(height);
                    return vec![PartyEffect::Submit(Tx::OptCloseAgree {
                        channel: self.channel,
                        caller: self.role,
                    })];
                }
                return vec![];
            }
            _ => return vec![],
        }
        if self.close_submitted {
            return vec![];
        }

        // Final (persistent-depth) claims only.
        let final_claims: Vec<_> = contract
            .claims
            .iter()
            .filter(|rc| ledger.is_final(rc.height))
            .collect();

        // A stale-closing briber first tries its target state, without
        // handing the contract any proofs; once that bounces it falls back
        // to the dominant play below.
        if let PartyStrategy::StaleCloseBriber { target_seq, .. } = self.strategy {
            if !self.stale_attempted {
                if (final_claims.len() as u64) < self.threshold {
                    return vec![];
                }
                self.stale_attempted = true;
                let Some(record) = self.states.get(&target_seq) else {
                    return vec![PartyEffect::Note(format!(
                        "missing state at target seq {target_seq}"
                    ))];
                };
                let Some((sig_a, sig_b)) = record.commit_sigs() else {
                    return vec![PartyEffect::Note("target state not fully signed".to_string())];
                };
                let prev_head = match self.mode {
                    ChannelMode::Brick => None,
                    ChannelMode::BrickPlus => Some(
                        self.heads
                            .get(&(target_seq - 1))
                            .copied()
                            .unwrap_or(GENESIS_PREV_HEAD),
                    ),
                };
                return vec![PartyEffect::Submit(Tx::PessimisticClose {
                    channel: self.channel,
                    submitter: self.role,
                    state: record.state,
                    sig_a,
                    sig_b,
                    prev_head,
                    proofs: Vec::new(),
                })];
            }
        }

        // Every archived ack above an on-chain claim is a proof of fraud.
        let proofs: Vec<ProofOfFraud> = final_claims
            .iter()
            .filter_map(|rc| {
                self.assemble_proof_of_fraud(&rc.claim.warden, rc.claim.seq, &rc.claim.warden_sig)
            })
            .collect();
        let proven: Vec<PublicKey> = proofs.iter().map(|p| p.warden).collect();

        let usable: Vec<_> = final_claims
            .iter()
            .filter(|rc| !proven.contains(&rc.claim.warden))
            .collect();

        let enough_proofs = (proofs.len() as u64) >= self.f + 1;
        let enough_claims = (usable.len() as u64) >= self.threshold;
        if !enough_proofs && !enough_claims {
            return vec![];
        }
        // A party holding proofs of fraud submits at once; one without
        // gives the counterparty a short window to bring its proofs in.
        if proofs.is_empty() {
            let height = ledger.height();
            match self.close_ready_since {
                None => {
                    self.close_ready_since = Some(height);
                    return vec![];
                }
                Some(since) if height < since + 2 => return vec![],
                Some(_) => {}
            }
        }

        let closing_seq = if enough_proofs {
            // Forfeit branch: the submitted state is not adjudicated, but
            // the transaction still carries the latest valid one.
            self.latest_valid
        } else {
            usable.iter().map(|rc| rc.claim.seq).max().unwrap()
        };
        let Some(record) = self.states.get(&closing_seq) else {
            return vec![PartyEffect::Note(format!(
                "missing state at closing seq {closing_seq}"
            ))];
        };
        let Some((sig_a, sig_b)) = record.commit_sigs() else {
            return vec![PartyEffect::Note(format!(
                "missing commit signatures at closing seq {closing_seq}"
            ))];
        };
        let prev_head = match self.mode {
            ChannelMode::Brick => None,
            ChannelMode::BrickPlus => Some(
                self.heads
                    .get(&(closing_seq - 1))
                    .copied()
                    .unwrap_or(GENESIS_PREV_HEAD),
            ),
        };
        self.close_submitted = true;
        vec![PartyEffect::Submit(Tx::PessimisticClose {
            channel: self.channel,
            submitter: self.role,
            state: record.state,
            sig_a,
            sig_b,
            prev_head,
            proofs,
        })]
    }

    /// Main message dispatch.
    pub fn on_msg(&mut self, msg: &Msg) -> Vec<PartyEffect> {
        if self.crashed {
            return vec![];
        }
        match msg {
            Msg::UpdateProposal { state, commit_sig } => self.on_update_proposal(state, commit_sig),
            Msg::UpdateAccept {
                seq,
                commit_sig,
                announce_sig,
            } => self.on_update_accept(*seq, commit_sig, announce_sig.as_ref()),
            Msg::UpdateFinalize { seq, announce_sig } => {
                self.on_update_finalize(*seq, announce_sig)
            }
            Msg::Ack { ack } => self.on_ack(ack),
            Msg::OptCloseProposal {
                balance_a,
                balance_b,
            } => self.on_opt_close_proposal(*balance_a, *balance_b),
            Msg::BribeDecision { amount, accept } => {
                // Sender identity is attached by the simulation loop via
                // `on_bribe_decision_from`.
                let _ = (amount, accept);
                vec![]
            }
            Msg::HistoryRequest { upto_seq } => self.on_history_request(*upto_seq),
            _ => vec![],
        }
    }

    /// Bribe decisions need the sender identity, which the plain message
    /// dispatch does not carry.
    pub fn on_bribe_decision_from(
        &mut self,
        warden: PublicKey,
        amount: u64,
        accept: bool,
    ) -> Vec<PartyEffect> {
        self.on_bribe_decision(warden, amount, accept)
    }

    fn on_history_request(&mut self, upto_seq: u64) -> Vec<PartyEffect> {
        if self.crashed || self.strategy == PartyStrategy::Silent {
            return vec![];
        }
        let mut states: Vec<ChannelState> = (1..=upto_seq)
            .filter_map(|s| self.states.get(&s).map(|r| r.state))
            .collect();
        if self.tamper_history && states.len() > 2 {
            // Doctor one state in the middle; the chain recomputation will
            // land on a different head.
            let idx = states.len() / 2;
            states[idx].balance_a += 1;
            states[idx].balance_b = states[idx].balance_b.saturating_sub(1);
        }
        vec![PartyEffect::Send {
            to: ActorId::Auditor,
            msg: Msg::HistoryResponse { states },
        }]
    }

    pub fn my_latest_balance(&self) -> u64 {
        self.latest_state().map(|s| self.my_balance(s)).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Fixture;

    fn make_party(fx: &Fixture, role: PartyRole, strategy: PartyStrategy) -> Party {
        let keys = match role {
            PartyRole::A => fx.key_a.clone(),
            PartyRole::B => fx.key_b.clone(),
        };
        Party::new(
            keys,
            role,
            fx.channel,
            fx.key_a.public(),
            fx.key_b.public(),
            fx.wardens.iter().map(|w| w.public()).collect(),
            1,
            fx.t,
            ChannelMode::Brick,
            strategy,
            fx.v,
        )
    }

    fn pair(fx: &Fixture) -> (Party, Party) {
        (
            make_party(fx, PartyRole::A, PartyStrategy::Honest),
            make_party(fx, PartyRole::B, PartyStrategy::Honest),
        )
    }

    fn salt(n: u8) -> [u8; 32] {
        [n; 32]
    }

    /// Run the three-message update handshake and return both parties'
    /// broadcast effects.
    fn handshake(
        a: &mut Party,
        b: &mut Party,
        balance_a: u64,
        balance_b: u64,
        s: u8,
    ) -> (Vec<PartyEffect>, Vec<PartyEffect>) {
        let fx_effects = a.propose_update(balance_a, balance_b, salt(s)).unwrap();
        let PartyEffect::Send { msg, .. } = &fx_effects[0] else {
            panic!("expected send");
        };
        let accept_effects = b.on_msg(&msg.clone());
        let PartyEffect::Send { msg: accept, .. } = &accept_effects[0] else {
            panic!("expected accept");
        };
        let a_effects = a.on_msg(&accept.clone());
        let finalize = a_effects
            .iter()
            .find_map(|e| match e {
                PartyEffect::Send { msg, .. } => Some(msg.clone()),
                _ => None,
            })
            .expect("finalize message");
        let b_effects = b.on_msg(&finalize);
        (a_effects, b_effects)
    }

    #[test]
    fn update_handshake_produces_broadcasts_on_both_sides() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        let (a_eff, b_eff) = handshake(&mut a, &mut b, 6, 6, 1);
        assert_eq!(a.latest_valid_seq(), 1);
        assert_eq!(b.latest_valid_seq(), 1);
        // Both parties broadcast the announcement to all ten wardens.
        let broadcast_len = |effects: &[PartyEffect]| {
            effects
                .iter()
                .find_map(|e| match e {
                    PartyEffect::Broadcast { msgs } => Some(msgs.len()),
                    _ => None,
                })
                .unwrap()
        };
        assert_eq!(broadcast_len(&a_eff), 10);
        assert_eq!(broadcast_len(&b_eff), 10);
    }

    #[test]
    fn propose_enforces_single_inflight_and_conservation() {
        let fx = Fixture::open_default();
        let (mut a, _) = pair(&fx);
        a.propose_update(7, 5, salt(1)).unwrap();
        assert_eq!(
            a.propose_update(6, 6, salt(2)).unwrap_err(),
            PartyError::UpdateInFlight
        );
        let (mut a2, _) = pair(&fx);
        assert_eq!(
            a2.propose_update(8, 5, salt(1)).unwrap_err(),
            PartyError::ConservationViolation
        );
    }

    #[test]
    fn countersign_rejects_gaps_and_forged_signatures() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        handshake(&mut a, &mut b, 6, 6, 1);

        // Gap: seq 3 after 1.
        let state = ChannelState {
            seq: 3,
            balance_a: 7,
            balance_b: 5,
            salt: salt(3),
        };
        let digest = state.commitment();
        let sig = fx
            .key_a
            .sign(&commit_plaintext(&fx.channel, &digest, state.seq));
        assert_eq!(
            b.countersign(&state, &sig).unwrap_err(),
            PartyError::BadCommitment
        );

        // Correct seq but a signature over something else.
        let state = ChannelState {
            seq: 2,
            balance_a: 7,
            balance_b: 5,
            salt: salt(2),
        };
        let forged = fx.key_a.sign(b"not the commitment");
        assert_eq!(
            b.countersign(&state, &forged).unwrap_err(),
            PartyError::BadCommitment
        );
    }

    #[test]
    fn commit_needs_t_distinct_acks() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        handshake(&mut a, &mut b, 6, 6, 1);
        // Six distinct acks (one duplicated) are not enough for t = 7.
        for i in 0..6 {
            let effects = a.on_msg(&Msg::Ack { ack: fx.ack(i, 1) });
            assert!(effects.is_empty());
        }
        let dup = a.on_msg(&Msg::Ack { ack: fx.ack(5, 1) });
        assert!(dup.is_empty());
        assert_eq!(a.committed_seq(), 0);
        // The seventh distinct warden commits the state.
        let effects = a.on_msg(&Msg::Ack { ack: fx.ack(6, 1) });
        assert!(matches!(effects[0], PartyEffect::Committed { seq: 1 }));
        assert_eq!(a.committed_seq(), 1);
    }

    #[test]
    fn fee_tickets_accumulate_per_warden() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        handshake(&mut a, &mut b, 6, 6, 1);
        for i in 0..7 {
            a.on_msg(&Msg::Ack { ack: fx.ack(i, 1) });
        }
        handshake(&mut a, &mut b, 7, 5, 2);
        for i in 0..7 {
            a.on_msg(&Msg::Ack { ack: fx.ack(i, 2) });
        }
        handshake(&mut a, &mut b, 5, 7, 3);
        // Seq 1 is fee-free; seqs 2 and 3 cost one fee per warden each.
        let w0 = fx.wardens[0].public();
        assert_eq!(a.fee_paid_to(&w0), 2);
        assert_eq!(a.fee_paid_total(), 20);
    }

    #[test]
    fn withholding_counterparty_blocks_the_announcement() {
        let fx = Fixture::open_default();
        let mut a = make_party(&fx, PartyRole::A, PartyStrategy::Honest);
        let mut b = make_party(&fx, PartyRole::B, PartyStrategy::WithholdCountersign);
        let effects = a.propose_update(7, 5, salt(1)).unwrap();
        let PartyEffect::Send { msg, .. } = &effects[0] else {
            panic!()
        };
        let accept_effects = b.on_msg(&msg.clone());
        let PartyEffect::Send { msg: accept, .. } = &accept_effects[0] else {
            panic!()
        };
        let a_effects = a.on_msg(&accept.clone());
        // The state became valid on both sides but nothing is broadcast.
        assert_eq!(a.latest_valid_seq(), 1);
        assert!(a_effects
            .iter()
            .all(|e| !matches!(e, PartyEffect::Broadcast { .. })));
    }

    #[test]
    fn proof_of_fraud_assembly_uses_the_ack_archive() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        handshake(&mut a, &mut b, 6, 6, 1);
        for i in 0..10 {
            a.on_msg(&Msg::Ack { ack: fx.ack(i, 1) });
        }
        handshake(&mut a, &mut b, 7, 5, 2);
        for i in 0..10 {
            a.on_msg(&Msg::Ack { ack: fx.ack(i, 2) });
        }
        // Warden 0 claims seq 1 although it acked 2.
        let claim = fx.claim(0, 1);
        let proof = a
            .assemble_proof_of_fraud(&claim.warden, claim.seq, &claim.warden_sig)
            .unwrap();
        assert!(proof.check(&fx.channel).is_ok());
        // A claim at the archived seq is no fraud.
        let honest = fx.claim(1, 2);
        assert!(a
            .assemble_proof_of_fraud(&honest.warden, honest.seq, &honest.warden_sig)
            .is_none());
    }

    #[test]
    fn silent_party_ignores_cooperative_close() {
        let fx = Fixture::open_default();
        let mut b = make_party(&fx, PartyRole::B, PartyStrategy::Silent);
        let effects = b.on_msg(&Msg::OptCloseProposal {
            balance_a: 6,
            balance_b: 6,
        });
        assert!(effects.is_empty());
    }

    #[test]
    fn disagreeing_counterparty_escalates_to_pessimistic() {
        let fx = Fixture::open_default();
        let (mut a, mut b) = pair(&fx);
        handshake(&mut a, &mut b, 6, 6, 1);
        // A proposes closing at a split B never signed.
        let effects = b.on_msg(&Msg::OptCloseProposal {
            balance_a: 9,
            balance_b: 3,
        });
        assert!(effects
            .iter()
            .any(|e| matches!(e, PartyEffect::Broadcast { .. })));
    }

    #[test]
    fn crash_after_commit_goes_silent() {
        let fx = Fixture::open_default();
        let mut a = make_party(&fx, PartyRole::A, PartyStrategy::CrashAfterCommit { seq: 1 });
        let mut b = make_party(&fx, PartyRole::B, PartyStrategy::Honest);
        handshake(&mut a, &mut b, 6, 6, 1);
        for i in 0..7 {
            a.on_msg(&Msg::Ack { ack: fx.ack(i, 1) });
        }
        assert!(a.is_crashed());
        assert!(a.propose_update(7, 5, salt(9)).unwrap().is_empty());
        assert!(a.on_msg(&Msg::HistoryRequest { upto_seq: 1 }).is_empty());
    }
}
