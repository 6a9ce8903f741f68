//! Simulated blockchain with persistence/liveness semantics, plus the
//! channel contract: funding, opening, optimistic close, warden closing
//! claims, pessimistic close with proof-of-fraud adjudication, and payout
//! settlement.
//!
//! The chain is a single logical state advanced at block boundaries; the
//! adversary controls transaction inclusion only through the configured
//! [`ChainPolicy`] (delay, never forgery). Once a transaction is
//! `confirm_depth` blocks deep it never changes.

use crate::baseline::{BaselineState, TimeoutChannel};
use crate::brick_plus::extend_chain;
use crate::channel::{
    announce_plaintext, close_plaintext, commit_plaintext, ChannelId, ChannelState, HeadAttachment,
    PartyRole, WardenAck,
};
use crate::primitives::{
    verify, ByteReader, ByteWriter, CodecError, Hash32, PublicKey, Signature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub const DEFAULT_CONFIRM_DEPTH: u64 = 6;
pub const DEFAULT_LIVENESS_BOUND: u64 = 2;

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum LedgerError {
    #[error("committee size must satisfy n = 3f+1 with n > 7")]
    BadCommitteeSize,
    #[error("threshold must equal 2f+1")]
    BadThreshold,
    #[error("party B funds only after party A")]
    OutOfOrderFunding,
    #[error("actor already funded")]
    DoubleFunding,
    #[error("collateral deposit must equal ceil(v/f)")]
    WrongCollateralAmount,
    #[error("key does not match any committed warden hash")]
    UnknownWarden,
    #[error("operation not allowed in the current phase")]
    WrongPhase,
    #[error("channel cannot open before every deposit is in")]
    NotFullyFunded,
    #[error("claimed balance exceeds the channel funds")]
    OverClaim,
    #[error("caller may not perform this operation")]
    WrongCaller,
    #[error("signature verification failed")]
    BadSignature,
    #[error("warden already has a recorded claim")]
    DuplicateClaim,
    #[error("fewer than t non-excluded claims are recorded")]
    InsufficientClaims,
    #[error("submitted state does not match the claimed closing state")]
    WrongState,
    #[error("commit signature verification failed")]
    BadCommitSignature,
    #[error("warden was slashed; nothing to redeem")]
    SlashedWarden,
    #[error("collateral already redeemed")]
    AlreadyRedeemed,
    #[error("nothing to withdraw for this actor")]
    NothingToWithdraw,
    #[error("operation not available in this channel mode")]
    WrongMode,
    #[error("unknown channel")]
    UnknownChannel,
    #[error("unknown baseline channel")]
    UnknownBaseline,
    #[error("baseline: {0}")]
    Baseline(#[from] crate::baseline::BaselineError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ChannelMode {
    Brick,
    BrickPlus,
}

/// Everyone who can hold a balance against the contract.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Beneficiary {
    PartyA,
    PartyB,
    Warden(u32),
}

impl Beneficiary {
    pub fn of(role: PartyRole) -> Beneficiary {
        match role {
            PartyRole::A => Beneficiary::PartyA,
            PartyRole::B => Beneficiary::PartyB,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Beneficiary::PartyA => "party_a".to_string(),
            Beneficiary::PartyB => "party_b".to_string(),
            Beneficiary::Warden(i) => format!("warden_{i}"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub who: Beneficiary,
    pub amount: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeployParams {
    pub party_a: PublicKey,
    pub party_b: PublicKey,
    pub warden_key_hashes: Vec<Hash32>,
    pub threshold: u64,
    pub closing_fee: u64,
    pub mode: ChannelMode,
    pub auditors: Vec<PublicKey>,
}

impl DeployParams {
    pub fn committee_size(&self) -> u64 {
        self.warden_key_hashes.len() as u64
    }

    pub fn digest(&self) -> Hash32 {
        let mut w = ByteWriter::tagged("BRICK/params");
        w.put_bytes32(self.party_a.as_bytes())
            .put_bytes32(self.party_b.as_bytes())
            .put_u64(self.committee_size());
        for h in &self.warden_key_hashes {
            w.put_bytes32(h.as_bytes());
        }
        w.put_u64(self.threshold).put_u64(self.closing_fee);
        w.put_u64(match self.mode {
            ChannelMode::Brick => 0,
            ChannelMode::BrickPlus => 1,
        });
        w.put_u64(self.auditors.len() as u64);
        for a in &self.auditors {
            w.put_bytes32(a.as_bytes());
        }
        crate::primitives::hash(&w.finish())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Phase {
    Deployed,
    PartyAFunded,
    BothPartiesFunded,
    Open,
    OptimisticPending,
    PessimisticPending,
    Closed,
    Cancelled,
}

/// A warden's on-chain "(seq, close)" declaration, carrying the party
/// signatures on the announcement it stored.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ClosingClaim {
    pub channel: ChannelId,
    pub warden: PublicKey,
    pub seq: u64,
    pub warden_sig: Signature,
    pub ann_sig_a: Signature,
    pub ann_sig_b: Signature,
    pub head: Option<HeadAttachment>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RecordedClaim {
    pub claim: ClosingClaim,
    pub warden_index: u32,
    pub height: u64,
    pub order: u32,
}

/// Conflicting signature pair: an update ack at a higher sequence number
/// than a closing claim, both by the same warden. Self-authenticating.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ProofOfFraud {
    pub warden: PublicKey,
    pub ack: WardenAck,
    pub claim_seq: u64,
    pub claim_sig: Signature,
}

impl ProofOfFraud {
    pub fn check(&self, channel: &ChannelId) -> Result<(), &'static str> {
        if self.ack.warden != self.warden {
            return Err("ack signed by a different warden");
        }
        if self.ack.channel != *channel {
            return Err("ack bound to a different channel");
        }
        if self.ack.seq <= self.claim_seq {
            return Err("ack does not exceed the claimed close seq");
        }
        if !self.ack.verify() {
            return Err("ack signature invalid");
        }
        if !verify(
            &self.warden,
            &close_plaintext(channel, self.claim_seq),
            &self.claim_sig,
        ) {
            return Err("closing signature invalid");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CloseKind {
    Optimistic,
    /// Closed at a submitted state after t claims.
    PessimisticState,
    /// At least f+1 proofs of fraud: whole balance to the counterparty.
    PessimisticForfeit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CloseSummary {
    pub kind: CloseKind,
    pub closing_seq: Option<u64>,
    pub closing_head: Option<Hash32>,
    pub submitter: Option<PartyRole>,
    pub slashed: Vec<u32>,
    pub height: u64,
}

#[derive(Clone, Debug)]
pub struct CloseOutcome {
    pub kind: CloseKind,
    pub closing_seq: Option<u64>,
    pub slashed: Vec<u32>,
    pub invalid_proofs: Vec<String>,
}

/// The on-chain channel account.
#[derive(Clone, Debug)]
pub struct ContractState {
    pub channel: ChannelId,
    pub params: DeployParams,
    pub f: u64,
    pub phase: Phase,
    pub funded_a: Option<u64>,
    pub funded_b: Option<u64>,
    /// Channel funds; known once both parties funded.
    pub total: Option<u64>,
    pub collateral_each: Option<u64>,
    pub warden_keys: Vec<Option<PublicKey>>,
    pub optimistic: Option<(PartyRole, u64)>,
    pub claims: Vec<RecordedClaim>,
    pub slashed: BTreeSet<u32>,
    pub access_requests: Vec<(PublicKey, u64)>,
    pub fee_award: BTreeMap<u32, u64>,
    pub redeemed: BTreeSet<u32>,
    pub withdrawn: BTreeSet<Beneficiary>,
    pub closed: Option<CloseSummary>,
    pub deposits: Vec<LedgerEntry>,
    pub payouts: Vec<LedgerEntry>,
}

impl ContractState {
    pub fn committee_size(&self) -> u64 {
        self.params.committee_size()
    }

    pub fn threshold(&self) -> u64 {
        self.params.threshold
    }

    /// A's share of the closing fee; B deposits the rest.
    pub fn fee_share(&self, role: PartyRole) -> u64 {
        match role {
            PartyRole::A => self.params.closing_fee.div_ceil(2),
            PartyRole::B => self.params.closing_fee / 2,
        }
    }

    pub fn warden_index(&self, key: &PublicKey) -> Option<u32> {
        self.warden_keys
            .iter()
            .position(|k| k.as_ref() == Some(key))
            .map(|i| i as u32)
    }

    fn committed_index(&self, key: &PublicKey) -> Option<u32> {
        let key_hash = key.key_hash();
        self.params
            .warden_key_hashes
            .iter()
            .position(|h| *h == key_hash)
            .map(|i| i as u32)
    }

    pub fn deposits_total(&self) -> u64 {
        self.deposits.iter().map(|e| e.amount).sum()
    }

    pub fn payouts_total(&self) -> u64 {
        self.payouts.iter().map(|e| e.amount).sum()
    }

    fn deposit(&mut self, who: Beneficiary, amount: u64, reason: &str) {
        self.deposits.push(LedgerEntry {
            who,
            amount,
            reason: reason.to_string(),
        });
    }

    fn payout(&mut self, who: Beneficiary, amount: u64, reason: &str) {
        self.payouts.push(LedgerEntry {
            who,
            amount,
            reason: reason.to_string(),
        });
    }

    /// Validity check for a closing claim; returns the committee index.
    fn check_claim(&self, claim: &ClosingClaim) -> Result<u32, LedgerError> {
        let index = self
            .warden_index(&claim.warden)
            .ok_or(LedgerError::UnknownWarden)?;
        if self.claims.iter().any(|c| c.warden_index == index) {
            return Err(LedgerError::DuplicateClaim);
        }
        if claim.seq == 0
            || !verify(
                &claim.warden,
                &close_plaintext(&self.channel, claim.seq),
                &claim.warden_sig,
            )
        {
            return Err(LedgerError::BadSignature);
        }
        let ann = announce_plaintext(&self.channel, claim.seq);
        if !verify(&self.params.party_a, &ann, &claim.ann_sig_a)
            || !verify(&self.params.party_b, &ann, &claim.ann_sig_b)
        {
            return Err(LedgerError::BadSignature);
        }
        match (self.params.mode, &claim.head) {
            (ChannelMode::Brick, None) => {}
            (ChannelMode::BrickPlus, Some(h)) => {
                if !h.verify(&self.channel, claim.seq, &self.params.party_a, &self.params.party_b) {
                    return Err(LedgerError::BadSignature);
                }
            }
            _ => return Err(LedgerError::WrongMode),
        }
        Ok(index)
    }
}

/// Which pending transactions an inclusion policy targets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxSelector {
    BaselineDisputes,
    ClaimsFromWardens(BTreeSet<PublicKey>),
    ClaimsAtSeq(u64),
}

impl TxSelector {
    fn matches(&self, tx: &Tx) -> bool {
        match (self, tx) {
            (TxSelector::BaselineDisputes, Tx::BaselineDispute { .. }) => true,
            (TxSelector::ClaimsFromWardens(set), Tx::RecordClaim { claim, .. }) => {
                set.contains(&claim.warden)
            }
            (TxSelector::ClaimsAtSeq(seq), Tx::RecordClaim { claim, .. }) => claim.seq == *seq,
            _ => false,
        }
    }
}

/// Adversarial control over transaction inclusion. Honest transactions are
/// included within the liveness bound unless a censor rule targets them;
/// holds are finite, so this models delay, not loss.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainPolicy {
    /// Every transaction lands in the next block.
    Prompt,
    /// Seeded uniform delay of up to `max_extra_blocks` beyond the next
    /// block (liveness bound L = max_extra_blocks + 1).
    UniformDelay { max_extra_blocks: u64 },
    /// Matching transactions are held `hold_blocks`; everything else is
    /// prompt.
    Censor {
        selector: TxSelector,
        hold_blocks: u64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AppliedTx {
    pub tx: Tx,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub txs: Vec<AppliedTx>,
}

#[derive(Clone, Debug)]
struct PendingTx {
    tx: Tx,
    release_height: u64,
}

/// The simulated chain plus every contract living on it.
pub struct Ledger {
    pub confirm_depth: u64,
    policy: ChainPolicy,
    blocks: Vec<Block>,
    pending: VecDeque<PendingTx>,
    contracts: BTreeMap<ChannelId, ContractState>,
    baselines: BTreeMap<u64, TimeoutChannel>,
    deploy_nonce: u64,
    rng: ChaCha20Rng,
}

impl Ledger {
    pub fn new(confirm_depth: u64, policy: ChainPolicy, seed: u64) -> Ledger {
        Ledger {
            confirm_depth,
            policy,
            blocks: Vec::new(),
            pending: VecDeque::new(),
            contracts: BTreeMap::new(),
            baselines: BTreeMap::new(),
            deploy_nonce: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn contract(&self, channel: &ChannelId) -> Option<&ContractState> {
        self.contracts.get(channel)
    }

    pub fn baseline(&self, id: u64) -> Option<&TimeoutChannel> {
        self.baselines.get(&id)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Depth-based finality: true once the block at `height` is at least
    /// `confirm_depth` blocks deep.
    pub fn is_final(&self, height: u64) -> bool {
        self.height() >= height && self.height() - height + 1 >= self.confirm_depth
    }

    fn contract_mut(&mut self, channel: &ChannelId) -> Result<&mut ContractState, LedgerError> {
        self.contracts
            .get_mut(channel)
            .ok_or(LedgerError::UnknownChannel)
    }

    // ---- contract operations -------------------------------------------------

    /// Create the channel account. The committee commitment (key hashes),
    /// threshold, and closing fee are fixed here for good.
    pub fn deploy(&mut self, params: DeployParams) -> Result<ChannelId, LedgerError> {
        let n = params.committee_size();
        if n <= 7 || n % 3 != 1 {
            return Err(LedgerError::BadCommitteeSize);
        }
        let f = (n - 1) / 3;
        if params.threshold != 2 * f + 1 {
            return Err(LedgerError::BadThreshold);
        }
        let channel = ChannelId::derive(self.deploy_nonce, &params.digest());
        self.deploy_nonce += 1;
        let warden_keys = vec![None; n as usize];
        self.contracts.insert(
            channel,
            ContractState {
                channel,
                params,
                f,
                phase: Phase::Deployed,
                funded_a: None,
                funded_b: None,
                total: None,
                collateral_each: None,
                warden_keys,
                optimistic: None,
                claims: Vec::new(),
                slashed: BTreeSet::new(),
                access_requests: Vec::new(),
                fee_award: BTreeMap::new(),
                redeemed: BTreeSet::new(),
                withdrawn: BTreeSet::new(),
                closed: None,
                deposits: Vec::new(),
                payouts: Vec::new(),
            },
        );
        Ok(channel)
    }

    /// Party A funds first; once B's deposit is in, v and the per-warden
    /// collateral are fixed. Each party also deposits its share of the
    /// closing fee.
    pub fn fund_party(
        &mut self,
        channel: &ChannelId,
        role: PartyRole,
        amount: u64,
    ) -> Result<(), LedgerError> {
        let c = self.contract_mut(channel)?;
        match (c.phase, role) {
            (Phase::Deployed, PartyRole::A) => {
                c.funded_a = Some(amount);
                let share = c.fee_share(PartyRole::A);
                c.deposit(Beneficiary::PartyA, amount + share, "funding");
                c.phase = Phase::PartyAFunded;
                Ok(())
            }
            (Phase::Deployed, PartyRole::B) => Err(LedgerError::OutOfOrderFunding),
            (Phase::PartyAFunded, PartyRole::A) => Err(LedgerError::DoubleFunding),
            (Phase::PartyAFunded, PartyRole::B) => {
                c.funded_b = Some(amount);
                let share = c.fee_share(PartyRole::B);
                c.deposit(Beneficiary::PartyB, amount + share, "funding");
                let v = c.funded_a.unwrap() + amount;
                c.total = Some(v);
                c.collateral_each = Some(v.div_ceil(c.f));
                c.phase = Phase::BothPartiesFunded;
                Ok(())
            }
            (Phase::BothPartiesFunded, _) => Err(LedgerError::DoubleFunding),
            _ => Err(LedgerError::WrongPhase),
        }
    }

    /// Wardens fund in any order once both parties have; the deposit must
    /// equal ceil(v/f) and the key must hash to a committed identity.
    pub fn fund_warden(
        &mut self,
        channel: &ChannelId,
        warden: &PublicKey,
        amount: u64,
    ) -> Result<(), LedgerError> {
        let c = self.contract_mut(channel)?;
        if c.phase != Phase::BothPartiesFunded {
            return Err(LedgerError::WrongPhase);
        }
        let index = c
            .committed_index(warden)
            .ok_or(LedgerError::UnknownWarden)?;
        if c.warden_keys[index as usize].is_some() {
            return Err(LedgerError::DoubleFunding);
        }
        if amount != c.collateral_each.unwrap() {
            return Err(LedgerError::WrongCollateralAmount);
        }
        c.warden_keys[index as usize] = Some(*warden);
        c.deposit(Beneficiary::Warden(index), amount, "collateral");
        Ok(())
    }

    /// Any funder may pull out before the channel opens; the first
    /// withdrawal cancels the channel for good and the rest withdraw their
    /// exact deposits in any order.
    pub fn withdraw_before_open(
        &mut self,
        channel: &ChannelId,
        actor: Beneficiary,
    ) -> Result<u64, LedgerError> {
        let c = self.contract_mut(channel)?;
        match c.phase {
            Phase::Deployed | Phase::PartyAFunded | Phase::BothPartiesFunded | Phase::Cancelled => {
            }
            _ => return Err(LedgerError::WrongPhase),
        }
        if c.withdrawn.contains(&actor) {
            return Err(LedgerError::NothingToWithdraw);
        }
        let refund = match actor {
            Beneficiary::PartyA => c
                .funded_a
                .map(|a| a + c.fee_share(PartyRole::A))
                .ok_or(LedgerError::NothingToWithdraw)?,
            Beneficiary::PartyB => c
                .funded_b
                .map(|b| b + c.fee_share(PartyRole::B))
                .ok_or(LedgerError::NothingToWithdraw)?,
            Beneficiary::Warden(i) => {
                if c.warden_keys
                    .get(i as usize)
                    .map(|k| k.is_some())
                    .unwrap_or(false)
                {
                    c.collateral_each.unwrap()
                } else {
                    return Err(LedgerError::NothingToWithdraw);
                }
            }
        };
        c.phase = Phase::Cancelled;
        c.withdrawn.insert(actor);
        c.payout(actor, refund, "withdraw");
        Ok(refund)
    }

    /// Open the channel once every deposit is in. The seq-1 announcement is
    /// broadcast to the committee off-chain before this is published.
    pub fn open(&mut self, channel: &ChannelId, _caller: PartyRole) -> Result<(), LedgerError> {
        let c = self.contract_mut(channel)?;
        match c.phase {
            Phase::BothPartiesFunded => {}
            Phase::Deployed | Phase::PartyAFunded => return Err(LedgerError::NotFullyFunded),
            _ => return Err(LedgerError::WrongPhase),
        }
        if c.warden_keys.iter().any(|k| k.is_none()) {
            return Err(LedgerError::NotFullyFunded);
        }
        c.phase = Phase::Open;
        Ok(())
    }

    /// A party claims a closing split; the counterparty must agree on-chain
    /// for the optimistic path to settle.
    pub fn optimistic_close_request(
        &mut self,
        channel: &ChannelId,
        claimant: PartyRole,
        claimed_balance_a: u64,
    ) -> Result<(), LedgerError> {
        let c = self.contract_mut(channel)?;
        if c.params.mode != ChannelMode::Brick {
            return Err(LedgerError::WrongMode);
        }
        if c.phase != Phase::Open {
            return Err(LedgerError::WrongPhase);
        }
        if claimed_balance_a > c.total.unwrap() {
            return Err(LedgerError::OverClaim);
        }
        c.optimistic = Some((claimant, claimed_balance_a));
        c.phase = Phase::OptimisticPending;
        Ok(())
    }

    /// Counterparty agreement: settles at the claimed split, returns every
    /// warden's collateral, and refunds the closing fee to the parties.
    pub fn optimistic_close_agree(
        &mut self,
        channel: &ChannelId,
        caller: PartyRole,
    ) -> Result<(), LedgerError> {
        let height = self.height();
        let c = self.contract_mut(channel)?;
        if c.phase != Phase::OptimisticPending {
            return Err(LedgerError::WrongPhase);
        }
        let (claimant, claimed_a) = c.optimistic.unwrap();
        if caller != claimant.other() {
            return Err(LedgerError::WrongCaller);
        }
        let v = c.total.unwrap();
        c.payout(
            Beneficiary::PartyA,
            claimed_a + c.fee_share(PartyRole::A),
            "optimistic-close",
        );
        c.payout(
            Beneficiary::PartyB,
            (v - claimed_a) + c.fee_share(PartyRole::B),
            "optimistic-close",
        );
        let coll = c.collateral_each.unwrap();
        for i in 0..c.warden_keys.len() {
            c.payout(Beneficiary::Warden(i as u32), coll, "collateral-return");
        }
        c.closed = Some(CloseSummary {
            kind: CloseKind::Optimistic,
            closing_seq: None,
            closing_head: None,
            submitter: Some(caller),
            slashed: Vec::new(),
            height,
        });
        c.phase = Phase::Closed;
        Ok(())
    }

    /// Record a warden's closing claim. The first recorded claim moves the
    /// channel to the pessimistic path and disables optimistic close.
    pub fn record_closing_claim(
        &mut self,
        channel: &ChannelId,
        claim: ClosingClaim,
    ) -> Result<(), LedgerError> {
        let height = self.height();
        let c = self.contract_mut(channel)?;
        match c.phase {
            Phase::Open | Phase::OptimisticPending | Phase::PessimisticPending => {}
            _ => return Err(LedgerError::WrongPhase),
        }
        let warden_index = c.check_claim(&claim)?;
        let order = c.claims.len() as u32;
        c.claims.push(RecordedClaim {
            claim,
            warden_index,
            height,
            order,
        });
        c.phase = Phase::PessimisticPending;
        Ok(())
    }

    /// Close the channel with the committee's help.
    ///
    /// Adjudication order: slash every valid proof of fraud (invalid ones
    /// are reported, never fatal); with at least f+1 proofs the submitter
    /// keeps only the slashed collateral and the whole balance goes to the
    /// counterparty; otherwise the channel closes at the submitted state,
    /// which must carry the maximum sequence number among the t-or-more
    /// non-excluded claims and verify against both commit signatures.
    pub fn pessimistic_close(
        &mut self,
        channel: &ChannelId,
        submitter: PartyRole,
        state: &ChannelState,
        sig_a: &Signature,
        sig_b: &Signature,
        prev_head: Option<Hash32>,
        proofs: &[ProofOfFraud],
    ) -> Result<CloseOutcome, LedgerError> {
        let height = self.height();
        let c = self.contract_mut(channel)?;
        if c.phase != Phase::PessimisticPending {
            return Err(LedgerError::WrongPhase);
        }

        // Validate everything first; nothing is applied until the close is
        // known to go through.
        let mut proven: Vec<u32> = Vec::new();
        let mut invalid: Vec<String> = Vec::new();
        for (i, proof) in proofs.iter().enumerate() {
            let index = match c.warden_index(&proof.warden) {
                Some(ix) => ix,
                None => {
                    invalid.push(format!("proof {i}: unknown warden"));
                    continue;
                }
            };
            if proven.contains(&index) {
                invalid.push(format!("proof {i}: duplicate proof for warden {index}"));
                continue;
            }
            if let Err(reason) = proof.check(channel) {
                invalid.push(format!("proof {i}: {reason}"));
                continue;
            }
            proven.push(index);
        }

        let v = c.total.unwrap();
        let coll = c.collateral_each.unwrap();
        let fee = c.params.closing_fee;
        let t = c.threshold();

        let forfeit = (proven.len() as u64) >= c.f + 1;
        let mut closing_seq = None;
        let mut closing_head = None;
        let mut awarded: Vec<u32> = Vec::new();
        if !forfeit {
            let usable: Vec<&RecordedClaim> = c
                .claims
                .iter()
                .filter(|rc| !proven.contains(&rc.warden_index))
                .collect();
            if (usable.len() as u64) < t {
                return Err(LedgerError::InsufficientClaims);
            }
            let max_seq = usable.iter().map(|rc| rc.claim.seq).max().unwrap();
            if state.seq != max_seq || state.total() != v {
                return Err(LedgerError::WrongState);
            }
            let digest = match (c.params.mode, prev_head) {
                (ChannelMode::Brick, None) => state.commitment(),
                (ChannelMode::BrickPlus, Some(prev)) => {
                    let head = extend_chain(&prev, state);
                    // The recomputed head must be the one the max-seq claim
                    // published.
                    let claimed = usable
                        .iter()
                        .filter(|rc| rc.claim.seq == max_seq)
                        .filter_map(|rc| rc.claim.head.as_ref())
                        .next()
                        .ok_or(LedgerError::WrongState)?;
                    if claimed.head != head {
                        return Err(LedgerError::WrongState);
                    }
                    head
                }
                _ => return Err(LedgerError::WrongState),
            };
            let plaintext = commit_plaintext(channel, &digest, max_seq);
            if !verify(&c.params.party_a, &plaintext, sig_a)
                || !verify(&c.params.party_b, &plaintext, sig_b)
            {
                return Err(LedgerError::BadCommitSignature);
            }
            closing_seq = Some(max_seq);
            closing_head = match c.params.mode {
                ChannelMode::BrickPlus => Some(digest),
                ChannelMode::Brick => None,
            };
            awarded = usable
                .iter()
                .take(t as usize)
                .map(|rc| rc.warden_index)
                .collect();
        }

        // Apply.
        for index in &proven {
            c.slashed.insert(*index);
            c.payout(Beneficiary::of(submitter), coll, "slashed-collateral");
        }
        if forfeit {
            c.payout(
                Beneficiary::of(submitter.other()),
                v,
                "forfeit-to-counterparty",
            );
            c.payout(
                Beneficiary::PartyA,
                c.fee_share(PartyRole::A),
                "closing-fee-refund",
            );
            c.payout(
                Beneficiary::PartyB,
                c.fee_share(PartyRole::B),
                "closing-fee-refund",
            );
        } else {
            c.payout(Beneficiary::PartyA, state.balance_a, "pessimistic-close");
            c.payout(Beneficiary::PartyB, state.balance_b, "pessimistic-close");
            for index in &awarded {
                c.fee_award.insert(*index, fee / t);
            }
            let remainder = fee - (fee / t) * t;
            if remainder > 0 {
                c.payout(
                    Beneficiary::of(submitter),
                    remainder,
                    "closing-fee-remainder",
                );
            }
        }
        let slashed: Vec<u32> = proven.clone();
        c.closed = Some(CloseSummary {
            kind: if forfeit {
                CloseKind::PessimisticForfeit
            } else {
                CloseKind::PessimisticState
            },
            closing_seq,
            closing_head,
            submitter: Some(submitter),
            slashed: slashed.clone(),
            height,
        });
        c.phase = Phase::Closed;
        Ok(CloseOutcome {
            kind: c.closed.as_ref().unwrap().kind,
            closing_seq,
            slashed,
            invalid_proofs: invalid,
        })
    }

    /// After a committee-assisted close, an unslashed warden redeems its
    /// collateral plus its closing-fee share if it was among the first t
    /// non-excluded claimants.
    pub fn redeem_warden(
        &mut self,
        channel: &ChannelId,
        warden: &PublicKey,
    ) -> Result<u64, LedgerError> {
        let c = self.contract_mut(channel)?;
        let pessimistic = matches!(
            c.closed.as_ref().map(|s| s.kind),
            Some(CloseKind::PessimisticState) | Some(CloseKind::PessimisticForfeit)
        );
        if c.phase != Phase::Closed || !pessimistic {
            return Err(LedgerError::WrongPhase);
        }
        let index = c.warden_index(warden).ok_or(LedgerError::UnknownWarden)?;
        if c.slashed.contains(&index) {
            return Err(LedgerError::SlashedWarden);
        }
        if !c.redeemed.insert(index) {
            return Err(LedgerError::AlreadyRedeemed);
        }
        let amount = c.collateral_each.unwrap() + c.fee_award.get(&index).copied().unwrap_or(0);
        c.payout(Beneficiary::Warden(index), amount, "redeem");
        Ok(amount)
    }

    /// Record an auditor's on-chain access request (audited mode only).
    /// Validity of the requester is judged by the wardens, not here.
    pub fn record_access_request(
        &mut self,
        channel: &ChannelId,
        auditor: &PublicKey,
    ) -> Result<(), LedgerError> {
        let height = self.height();
        let c = self.contract_mut(channel)?;
        if c.params.mode != ChannelMode::BrickPlus {
            return Err(LedgerError::WrongMode);
        }
        match c.phase {
            Phase::Open
            | Phase::OptimisticPending
            | Phase::PessimisticPending
            | Phase::Closed => {}
            _ => return Err(LedgerError::WrongPhase),
        }
        c.access_requests.push((*auditor, height));
        Ok(())
    }

    // ---- baseline channel ----------------------------------------------------

    pub fn baseline_open(
        &mut self,
        id: u64,
        states: Vec<BaselineState>,
        dispute_window: u64,
    ) -> Result<(), LedgerError> {
        self.baselines
            .insert(id, TimeoutChannel::new(states, dispute_window));
        Ok(())
    }

    fn baseline_mut(&mut self, id: u64) -> Result<&mut TimeoutChannel, LedgerError> {
        self.baselines.get_mut(&id).ok_or(LedgerError::UnknownBaseline)
    }

    // ---- block production ----------------------------------------------------

    /// Queue a transaction; the inclusion policy fixes the block at which
    /// it becomes eligible.
    pub fn submit(&mut self, tx: Tx) {
        let next = self.height() + 1;
        let release_height = match &self.policy {
            ChainPolicy::Prompt => next,
            ChainPolicy::UniformDelay { max_extra_blocks } => {
                next + self.rng.gen_range(0..=*max_extra_blocks)
            }
            ChainPolicy::Censor {
                selector,
                hold_blocks,
            } => {
                if selector.matches(&tx) {
                    next + hold_blocks
                } else {
                    next
                }
            }
        };
        self.pending.push_back(PendingTx { tx, release_height });
    }

    /// Produce the next block: include every eligible pending transaction
    /// in submission order and apply it.
    pub fn advance_block(&mut self) -> &Block {
        let height = self.height() + 1;
        let mut included = Vec::new();
        let mut still_pending = VecDeque::new();
        while let Some(p) = self.pending.pop_front() {
            if p.release_height <= height {
                included.push(p.tx);
            } else {
                still_pending.push_back(p);
            }
        }
        self.pending = still_pending;

        let mut txs = Vec::new();
        for tx in included {
            let result = self.apply_tx(&tx);
            txs.push(AppliedTx {
                ok: result.is_ok(),
                error: result.err().map(|e| e.to_string()),
                tx,
            });
        }
        self.blocks.push(Block { height, txs });

        for baseline in self.baselines.values_mut() {
            baseline.on_block(height);
        }
        self.blocks.last().unwrap()
    }

    fn apply_tx(&mut self, tx: &Tx) -> Result<(), LedgerError> {
        match tx {
            Tx::Deploy { params } => self.deploy(params.clone()).map(|_| ()),
            Tx::FundParty {
                channel,
                role,
                amount,
            } => self.fund_party(channel, *role, *amount),
            Tx::FundWarden {
                channel,
                warden,
                amount,
            } => self.fund_warden(channel, warden, *amount),
            Tx::Withdraw { channel, actor } => {
                self.withdraw_before_open(channel, *actor).map(|_| ())
            }
            Tx::Open { channel, caller } => self.open(channel, *caller),
            Tx::OptCloseRequest {
                channel,
                claimant,
                claimed_balance_a,
            } => self.optimistic_close_request(channel, *claimant, *claimed_balance_a),
            Tx::OptCloseAgree { channel, caller } => self.optimistic_close_agree(channel, *caller),
            Tx::RecordClaim { channel, claim } => self.record_closing_claim(channel, *claim),
            Tx::PessimisticClose {
                channel,
                submitter,
                state,
                sig_a,
                sig_b,
                prev_head,
                proofs,
            } => self
                .pessimistic_close(channel, *submitter, state, sig_a, sig_b, *prev_head, proofs)
                .map(|_| ()),
            Tx::RedeemWarden { channel, warden } => {
                self.redeem_warden(channel, warden).map(|_| ())
            }
            Tx::AccessRequest { channel, auditor } => {
                self.record_access_request(channel, auditor)
            }
            Tx::BaselineOpen {
                id,
                states,
                dispute_window,
            } => self.baseline_open(*id, states.clone(), *dispute_window),
            Tx::BaselineClose { id, seq } => {
                let height = self.height();
                self.baseline_mut(*id)?.close_at(*seq, height)?;
                Ok(())
            }
            Tx::BaselineDispute { id, disputer, seq } => {
                let height = self.height();
                self.baseline_mut(*id)?.dispute(*disputer, *seq, height)?;
                Ok(())
            }
        }
    }
}

// ---- transactions --------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Tx {
    Deploy {
        params: DeployParams,
    },
    FundParty {
        channel: ChannelId,
        role: PartyRole,
        amount: u64,
    },
    FundWarden {
        channel: ChannelId,
        warden: PublicKey,
        amount: u64,
    },
    Withdraw {
        channel: ChannelId,
        actor: Beneficiary,
    },
    Open {
        channel: ChannelId,
        caller: PartyRole,
    },
    OptCloseRequest {
        channel: ChannelId,
        claimant: PartyRole,
        claimed_balance_a: u64,
    },
    OptCloseAgree {
        channel: ChannelId,
        caller: PartyRole,
    },
    RecordClaim {
        channel: ChannelId,
        claim: ClosingClaim,
    },
    PessimisticClose {
        channel: ChannelId,
        submitter: PartyRole,
        state: ChannelState,
        sig_a: Signature,
        sig_b: Signature,
        prev_head: Option<Hash32>,
        proofs: Vec<ProofOfFraud>,
    },
    RedeemWarden {
        channel: ChannelId,
        warden: PublicKey,
    },
    AccessRequest {
        channel: ChannelId,
        auditor: PublicKey,
    },
    BaselineOpen {
        id: u64,
        states: Vec<BaselineState>,
        dispute_window: u64,
    },
    BaselineClose {
        id: u64,
        seq: u64,
    },
    BaselineDispute {
        id: u64,
        disputer: PartyRole,
        seq: u64,
    },
}

impl Tx {
    pub fn kind(&self) -> &'static str {
        match self {
            Tx::Deploy { .. } => "deploy",
            Tx::FundParty { .. } => "fund-party",
            Tx::FundWarden { .. } => "fund-warden",
            Tx::Withdraw { .. } => "withdraw",
            Tx::Open { .. } => "open",
            Tx::OptCloseRequest { .. } => "opt-close-request",
            Tx::OptCloseAgree { .. } => "opt-close-agree",
            Tx::RecordClaim { .. } => "closing-claim",
            Tx::PessimisticClose { .. } => "pessimistic-close",
            Tx::RedeemWarden { .. } => "redeem-warden",
            Tx::AccessRequest { .. } => "access-request",
            Tx::BaselineOpen { .. } => "baseline-open",
            Tx::BaselineClose { .. } => "baseline-close",
            Tx::BaselineDispute { .. } => "baseline-dispute",
        }
    }

    fn tag(&self) -> String {
        format!("BRICK/tx/{}", self.kind())
    }

    /// Canonical byte encoding (tag, then fields in declared order).
    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::tagged(&self.tag());
        fn put_role(w: &mut ByteWriter, role: PartyRole) {
            w.put_u64(match role {
                PartyRole::A => 0,
                PartyRole::B => 1,
            });
        }
        fn put_beneficiary(w: &mut ByteWriter, b: Beneficiary) {
            match b {
                Beneficiary::PartyA => w.put_u64(0),
                Beneficiary::PartyB => w.put_u64(1),
                Beneficiary::Warden(i) => w.put_u64(2).put_u64(i as u64),
            };
        }
        fn put_sig(w: &mut ByteWriter, sig: &Signature) {
            w.put_slice(&sig.0);
        }
        fn put_state(w: &mut ByteWriter, s: &ChannelState) {
            w.put_u64(s.seq)
                .put_u64(s.balance_a)
                .put_u64(s.balance_b)
                .put_bytes32(&s.salt);
        }
        fn put_claim(w: &mut ByteWriter, c: &ClosingClaim) {
            w.put_bytes32(c.channel.as_bytes())
                .put_bytes32(c.warden.as_bytes())
                .put_u64(c.seq);
            put_sig(w, &c.warden_sig);
            put_sig(w, &c.ann_sig_a);
            put_sig(w, &c.ann_sig_b);
            match &c.head {
                None => {
                    w.put_u64(0);
                }
                Some(h) => {
                    w.put_u64(1).put_bytes32(h.head.as_bytes());
                    put_sig(w, &h.sig_a);
                    put_sig(w, &h.sig_b);
                }
            }
        }
        match self {
            Tx::Deploy { params } => {
                w.put_bytes32(params.party_a.as_bytes())
                    .put_bytes32(params.party_b.as_bytes())
                    .put_u64(params.committee_size());
                for h in &params.warden_key_hashes {
                    w.put_bytes32(h.as_bytes());
                }
                w.put_u64(params.threshold).put_u64(params.closing_fee);
                w.put_u64(match params.mode {
                    ChannelMode::Brick => 0,
                    ChannelMode::BrickPlus => 1,
                });
                w.put_u64(params.auditors.len() as u64);
                for a in &params.auditors {
                    w.put_bytes32(a.as_bytes());
                }
            }
            Tx::FundParty {
                channel,
                role,
                amount,
            } => {
                w.put_bytes32(channel.as_bytes());
                put_role(&mut w, *role);
                w.put_u64(*amount);
            }
            Tx::FundWarden {
                channel,
                warden,
                amount,
            } => {
                w.put_bytes32(channel.as_bytes())
                    .put_bytes32(warden.as_bytes())
                    .put_u64(*amount);
            }
            Tx::Withdraw { channel, actor } => {
                w.put_bytes32(channel.as_bytes());
                put_beneficiary(&mut w, *actor);
            }
            Tx::Open { channel, caller } => {
                w.put_bytes32(channel.as_bytes());
                put_role(&mut w, *caller);
            }
            Tx::OptCloseRequest {
                channel,
                claimant,
                claimed_balance_a,
            } => {
                w.put_bytes32(channel.as_bytes());
                put_role(&mut w, *claimant);
                w.put_u64(*claimed_balance_a);
            }
            Tx::OptCloseAgree { channel, caller } => {
                w.put_bytes32(channel.as_bytes());
                put_role(&mut w, *caller);
            }
            Tx::RecordClaim { channel, claim } => {
                w.put_bytes32(channel.as_bytes());
                put_claim(&mut w, claim);
            }
            Tx::PessimisticClose {
                channel,
                submitter,
                state,
                sig_a,
                sig_b,
                prev_head,
                proofs,
            } => {
                w.put_bytes32(channel.as_bytes());
                put_role(&mut w, *submitter);
                put_state(&mut w, state);
                put_sig(&mut w, sig_a);
                put_sig(&mut w, sig_b);
                match prev_head {
                    None => {
                        w.put_u64(0);
                    }
                    Some(h) => {
                        w.put_u64(1).put_bytes32(h.as_bytes());
                    }
                }
                w.put_u64(proofs.len() as u64);
                for p in proofs {
                    w.put_bytes32(p.warden.as_bytes())
                        .put_bytes32(p.ack.channel.as_bytes())
                        .put_u64(p.ack.seq)
                        .put_bytes32(p.ack.warden.as_bytes());
                    put_sig(&mut w, &p.ack.sig);
                    w.put_u64(p.claim_seq);
                    put_sig(&mut w, &p.claim_sig);
                }
            }
            Tx::RedeemWarden { channel, warden } => {
                w.put_bytes32(channel.as_bytes())
                    .put_bytes32(warden.as_bytes());
            }
            Tx::AccessRequest { channel, auditor } => {
                w.put_bytes32(channel.as_bytes())
                    .put_bytes32(auditor.as_bytes());
            }
            Tx::BaselineOpen {
                id,
                states,
                dispute_window,
            } => {
                w.put_u64(*id).put_u64(states.len() as u64);
                for s in states {
                    w.put_u64(s.seq).put_u64(s.balance_a).put_u64(s.balance_b);
                }
                w.put_u64(*dispute_window);
            }
            Tx::BaselineClose { id, seq } => {
                w.put_u64(*id).put_u64(*seq);
            }
            Tx::BaselineDispute { id, disputer, seq } => {
                w.put_u64(*id);
                put_role(&mut w, *disputer);
                w.put_u64(*seq);
            }
        }
        w.finish()
    }

    /// Decode a transaction of known `kind` from its canonical bytes.
    pub fn decode(kind: &str, data: &[u8]) -> Result<Tx, CodecError> {
        let tag = format!("BRICK/tx/{kind}");
        let mut r = ByteReader::tagged(data, &tag)?;
        fn get_role(r: &mut ByteReader) -> Result<PartyRole, CodecError> {
            match r.get_u64()? {
                0 => Ok(PartyRole::A),
                1 => Ok(PartyRole::B),
                _ => Err(CodecError::Truncated),
            }
        }
        fn get_sig(r: &mut ByteReader) -> Result<Signature, CodecError> {
            let hi = r.get_bytes32()?;
            let lo = r.get_bytes32()?;
            let mut out = [0u8; 64];
            out[..32].copy_from_slice(&hi);
            out[32..].copy_from_slice(&lo);
            Ok(Signature(out))
        }
        let tx = match kind {
            "deploy" => {
                let party_a = PublicKey(r.get_bytes32()?);
                let party_b = PublicKey(r.get_bytes32()?);
                let n = r.get_u64()? as usize;
                let mut warden_key_hashes = Vec::with_capacity(n);
                for _ in 0..n {
                    warden_key_hashes.push(Hash32(r.get_bytes32()?));
                }
                let threshold = r.get_u64()?;
                let closing_fee = r.get_u64()?;
                let mode = match r.get_u64()? {
                    0 => ChannelMode::Brick,
                    _ => ChannelMode::BrickPlus,
                };
                let audit_n = r.get_u64()? as usize;
                let mut auditors = Vec::with_capacity(audit_n);
                for _ in 0..audit_n {
                    auditors.push(PublicKey(r.get_bytes32()?));
                }
                Tx::Deploy {
                    params: DeployParams {
                        party_a,
                        party_b,
                        warden_key_hashes,
                        threshold,
                        closing_fee,
                        mode,
                        auditors,
                    },
                }
            }
            "fund-party" => Tx::FundParty {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                role: get_role(&mut r)?,
                amount: r.get_u64()?,
            },
            "fund-warden" => Tx::FundWarden {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                warden: PublicKey(r.get_bytes32()?),
                amount: r.get_u64()?,
            },
            "withdraw" => {
                let channel = ChannelId(Hash32(r.get_bytes32()?));
                let actor = match r.get_u64()? {
                    0 => Beneficiary::PartyA,
                    1 => Beneficiary::PartyB,
                    _ => Beneficiary::Warden(r.get_u64()? as u32),
                };
                Tx::Withdraw { channel, actor }
            }
            "open" => Tx::Open {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                caller: get_role(&mut r)?,
            },
            "opt-close-request" => Tx::OptCloseRequest {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                claimant: get_role(&mut r)?,
                claimed_balance_a: r.get_u64()?,
            },
            "opt-close-agree" => Tx::OptCloseAgree {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                caller: get_role(&mut r)?,
            },
            "closing-claim" => {
                let channel = ChannelId(Hash32(r.get_bytes32()?));
                let claim_channel = ChannelId(Hash32(r.get_bytes32()?));
                let warden = PublicKey(r.get_bytes32()?);
                let seq = r.get_u64()?;
                let warden_sig = get_sig(&mut r)?;
                let ann_sig_a = get_sig(&mut r)?;
                let ann_sig_b = get_sig(&mut r)?;
                let head = match r.get_u64()? {
                    0 => None,
                    _ => Some(HeadAttachment {
                        head: Hash32(r.get_bytes32()?),
                        sig_a: get_sig(&mut r)?,
                        sig_b: get_sig(&mut r)?,
                    }),
                };
                Tx::RecordClaim {
                    channel,
                    claim: ClosingClaim {
                        channel: claim_channel,
                        warden,
                        seq,
                        warden_sig,
                        ann_sig_a,
                        ann_sig_b,
                        head,
                    },
                }
            }
            "pessimistic-close" => {
                let channel = ChannelId(Hash32(r.get_bytes32()?));
                let submitter = get_role(&mut r)?;
                let state = ChannelState {
                    seq: r.get_u64()?,
                    balance_a: r.get_u64()?,
                    balance_b: r.get_u64()?,
                    salt: r.get_bytes32()?,
                };
                let sig_a = get_sig(&mut r)?;
                let sig_b = get_sig(&mut r)?;
                let prev_head = match r.get_u64()? {
                    0 => None,
                    _ => Some(Hash32(r.get_bytes32()?)),
                };
                let n = r.get_u64()? as usize;
                let mut proofs = Vec::with_capacity(n);
                for _ in 0..n {
                    let warden = PublicKey(r.get_bytes32()?);
                    let ack_channel = ChannelId(Hash32(r.get_bytes32()?));
                    let ack_seq = r.get_u64()?;
                    let ack_warden = PublicKey(r.get_bytes32()?);
                    let ack_sig = get_sig(&mut r)?;
                    let claim_seq = r.get_u64()?;
                    let claim_sig = get_sig(&mut r)?;
                    proofs.push(ProofOfFraud {
                        warden,
                        ack: WardenAck {
                            channel: ack_channel,
                            seq: ack_seq,
                            warden: ack_warden,
                            sig: ack_sig,
                        },
                        claim_seq,
                        claim_sig,
                    });
                }
                Tx::PessimisticClose {
                    channel,
                    submitter,
                    state,
                    sig_a,
                    sig_b,
                    prev_head,
                    proofs,
                }
            }
            "redeem-warden" => Tx::RedeemWarden {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                warden: PublicKey(r.get_bytes32()?),
            },
            "access-request" => Tx::AccessRequest {
                channel: ChannelId(Hash32(r.get_bytes32()?)),
                auditor: PublicKey(r.get_bytes32()?),
            },
            "baseline-open" => {
                let id = r.get_u64()?;
                let n = r.get_u64()? as usize;
                let mut states = Vec::with_capacity(n);
                for _ in 0..n {
                    states.push(BaselineState {
                        seq: r.get_u64()?,
                        balance_a: r.get_u64()?,
                        balance_b: r.get_u64()?,
                    });
                }
                Tx::BaselineOpen {
                    id,
                    states,
                    dispute_window: r.get_u64()?,
                }
            }
            "baseline-close" => Tx::BaselineClose {
                id: r.get_u64()?,
                seq: r.get_u64()?,
            },
            "baseline-dispute" => Tx::BaselineDispute {
                id: r.get_u64()?,
                disputer: get_role(&mut r)?,
                seq: r.get_u64()?,
            },
            _ => return Err(CodecError::BadTag),
        };
        r.finish()?;
        Ok(tx)
    }
}

/// Chain dump entry: one block as it appears in the JSON export.
#[derive(Serialize)]
pub struct BlockDump {
    pub height: u64,
    pub txs: Vec<TxDump>,
}

#[derive(Serialize)]
pub struct TxDump {
    pub kind: &'static str,
    #[serde(rename = "payload-hex")]
    pub payload_hex: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn dump_chain(ledger: &Ledger) -> Vec<BlockDump> {
    ledger
        .blocks()
        .iter()
        .map(|b| BlockDump {
            height: b.height,
            txs: b
                .txs
                .iter()
                .map(|t| TxDump {
                    kind: t.tx.kind(),
                    payload_hex: hex::encode(t.tx.encode()),
                    ok: t.ok,
                    error: t.error.clone(),
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brick_plus::{extend_chain, GENESIS_PREV_HEAD};
    use crate::testutil::Fixture;

    fn payout_sum_for(c: &ContractState, who: Beneficiary) -> u64 {
        c.payouts
            .iter()
            .filter(|e| e.who == who)
            .map(|e| e.amount)
            .sum()
    }

    #[test]
    fn deploy_validates_committee_shape() {
        let fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        assert_eq!(fx.ledger.contract(&fx.channel).unwrap().phase, Phase::Deployed);

        // n = 7 is too small (n > 7 required), n = 10 with t = 6 is not 2f+1.
        let (ka, kb) = crate::testutil::party_keys();
        let mk = |n: usize, t: u64| DeployParams {
            party_a: ka.public(),
            party_b: kb.public(),
            warden_key_hashes: crate::testutil::warden_keys(n)
                .iter()
                .map(|w| w.public().key_hash())
                .collect(),
            threshold: t,
            closing_fee: 70,
            mode: ChannelMode::Brick,
            auditors: vec![],
        };
        let mut ledger = Ledger::new(6, ChainPolicy::Prompt, 0);
        assert_eq!(
            ledger.deploy(mk(7, 5)).unwrap_err(),
            LedgerError::BadCommitteeSize
        );
        assert_eq!(
            ledger.deploy(mk(9, 7)).unwrap_err(),
            LedgerError::BadCommitteeSize
        );
        assert_eq!(
            ledger.deploy(mk(10, 6)).unwrap_err(),
            LedgerError::BadThreshold
        );
    }

    #[test]
    fn channel_ids_are_unique_per_deploy() {
        let fx1 = Fixture::deployed(10, 70, ChannelMode::Brick);
        let mut ledger = Ledger::new(6, ChainPolicy::Prompt, 0);
        let params = fx1.ledger.contract(&fx1.channel).unwrap().params.clone();
        let id1 = ledger.deploy(params.clone()).unwrap();
        let id2 = ledger.deploy(params).unwrap();
        assert_ne!(id1, id2);
    }

    #[test]
    fn funding_order_and_amounts() {
        let mut fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        let ch = fx.channel;
        assert_eq!(
            fx.ledger.fund_party(&ch, PartyRole::B, 6).unwrap_err(),
            LedgerError::OutOfOrderFunding
        );
        fx.ledger.fund_party(&ch, PartyRole::A, 6).unwrap();
        assert_eq!(
            fx.ledger.fund_party(&ch, PartyRole::A, 6).unwrap_err(),
            LedgerError::DoubleFunding
        );
        fx.ledger.fund_party(&ch, PartyRole::B, 6).unwrap();
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.total, Some(12));
        // ceil(12 / 3) with f = 3.
        assert_eq!(c.collateral_each, Some(4));

        // Warden deposits must match exactly and the key must be committed.
        let w3 = fx.wardens[3].clone();
        assert_eq!(
            fx.ledger.fund_warden(&ch, &w3.public(), 3).unwrap_err(),
            LedgerError::WrongCollateralAmount
        );
        fx.ledger.fund_warden(&ch, &w3.public(), 4).unwrap();
        assert_eq!(
            fx.ledger.fund_warden(&ch, &w3.public(), 4).unwrap_err(),
            LedgerError::DoubleFunding
        );
        let stranger = crate::primitives::KeyPair::from_seed([0xEE; 32]);
        assert_eq!(
            fx.ledger.fund_warden(&ch, &stranger.public(), 4).unwrap_err(),
            LedgerError::UnknownWarden
        );
    }

    #[test]
    fn open_requires_every_deposit() {
        let mut fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        let ch = fx.channel;
        fx.ledger.fund_party(&ch, PartyRole::A, 6).unwrap();
        fx.ledger.fund_party(&ch, PartyRole::B, 6).unwrap();
        for w in &fx.wardens[..9] {
            fx.ledger.fund_warden(&ch, &w.public(), 4).unwrap();
        }
        assert_eq!(
            fx.ledger.open(&ch, PartyRole::A).unwrap_err(),
            LedgerError::NotFullyFunded
        );
        let w9 = fx.wardens[9].public();
        fx.ledger.fund_warden(&ch, &w9, 4).unwrap();
        fx.ledger.open(&ch, PartyRole::A).unwrap();
        assert_eq!(fx.ledger.contract(&ch).unwrap().phase, Phase::Open);
        assert_eq!(
            fx.ledger.open(&ch, PartyRole::B).unwrap_err(),
            LedgerError::WrongPhase
        );
    }

    #[test]
    fn withdraw_cancels_and_refunds_exact_deposits() {
        let mut fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        let ch = fx.channel;
        fx.ledger.fund_party(&ch, PartyRole::A, 6).unwrap();
        fx.ledger.fund_party(&ch, PartyRole::B, 6).unwrap();
        fx.ledger
            .fund_warden(&ch, &fx.wardens[2].public().clone(), 4)
            .unwrap();

        // A pulls out: channel cancelled, refund includes the fee share.
        let refund = fx
            .ledger
            .withdraw_before_open(&ch, Beneficiary::PartyA)
            .unwrap();
        assert_eq!(refund, 6 + 35);
        assert_eq!(fx.ledger.contract(&ch).unwrap().phase, Phase::Cancelled);

        // Everyone else withdraws their own deposit, in any order.
        assert_eq!(
            fx.ledger
                .withdraw_before_open(&ch, Beneficiary::Warden(2))
                .unwrap(),
            4
        );
        assert_eq!(
            fx.ledger
                .withdraw_before_open(&ch, Beneficiary::PartyB)
                .unwrap(),
            6 + 35
        );
        // Double withdraw and never-funded actors get nothing.
        assert_eq!(
            fx.ledger
                .withdraw_before_open(&ch, Beneficiary::PartyA)
                .unwrap_err(),
            LedgerError::NothingToWithdraw
        );
        assert_eq!(
            fx.ledger
                .withdraw_before_open(&ch, Beneficiary::Warden(5))
                .unwrap_err(),
            LedgerError::NothingToWithdraw
        );

        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.deposits_total(), c.payouts_total());
    }

    #[test]
    fn withdraw_is_rejected_once_open() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        assert_eq!(
            fx.ledger
                .withdraw_before_open(&ch, Beneficiary::PartyA)
                .unwrap_err(),
            LedgerError::WrongPhase
        );
    }

    #[test]
    fn optimistic_close_happy_path_conserves_funds() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.ledger
            .optimistic_close_request(&ch, PartyRole::A, 7)
            .unwrap();
        assert_eq!(
            fx.ledger.contract(&ch).unwrap().phase,
            Phase::OptimisticPending
        );
        // The claimant cannot agree with itself.
        assert_eq!(
            fx.ledger.optimistic_close_agree(&ch, PartyRole::A).unwrap_err(),
            LedgerError::WrongCaller
        );
        fx.ledger.optimistic_close_agree(&ch, PartyRole::B).unwrap();
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.phase, Phase::Closed);
        assert_eq!(payout_sum_for(c, Beneficiary::PartyA), 7 + 35);
        assert_eq!(payout_sum_for(c, Beneficiary::PartyB), 5 + 35);
        for i in 0..10 {
            assert_eq!(payout_sum_for(c, Beneficiary::Warden(i)), 4);
        }
        assert_eq!(c.deposits_total(), 12 + 70 + 40);
        assert_eq!(c.payouts_total(), 12 + 70 + 40);
    }

    #[test]
    fn optimistic_close_rejects_over_claims_and_wrong_phase() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        assert_eq!(
            fx.ledger
                .optimistic_close_request(&ch, PartyRole::A, 13)
                .unwrap_err(),
            LedgerError::OverClaim
        );
        // A recorded claim moves the channel to the pessimistic path and
        // disables optimistic close for good.
        let claim = fx.claim(0, 1);
        fx.ledger.record_closing_claim(&ch, claim).unwrap();
        assert_eq!(
            fx.ledger
                .optimistic_close_request(&ch, PartyRole::A, 7)
                .unwrap_err(),
            LedgerError::WrongPhase
        );
    }

    #[test]
    fn disputed_optimistic_claim_cannot_be_replaced() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.ledger
            .optimistic_close_request(&ch, PartyRole::A, 7)
            .unwrap();
        // B never agrees; A cannot submit a new optimistic claim.
        assert_eq!(
            fx.ledger
                .optimistic_close_request(&ch, PartyRole::A, 6)
                .unwrap_err(),
            LedgerError::WrongPhase
        );
        // Claims can still be recorded, after which agreement is impossible.
        let claim = fx.claim(0, 1);
        fx.ledger.record_closing_claim(&ch, claim).unwrap();
        assert_eq!(
            fx.ledger.optimistic_close_agree(&ch, PartyRole::B).unwrap_err(),
            LedgerError::WrongPhase
        );
    }

    #[test]
    fn closing_claims_are_verified_and_deduplicated() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        let claim = fx.claim(0, 5);
        fx.ledger.record_closing_claim(&ch, claim).unwrap();
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.phase, Phase::PessimisticPending);
        assert_eq!(c.claims[0].order, 0);
        assert_eq!(c.claims[0].warden_index, 0);

        // The same warden cannot claim twice, even at a new seq.
        let again = fx.claim(0, 6);
        assert_eq!(
            fx.ledger.record_closing_claim(&ch, again).unwrap_err(),
            LedgerError::DuplicateClaim
        );

        // Party signatures are verified on-chain.
        let mut forged = fx.claim(1, 5);
        forged.ann_sig_a = fx.wardens[1].sign(b"nonsense");
        assert_eq!(
            fx.ledger.record_closing_claim(&ch, forged).unwrap_err(),
            LedgerError::BadSignature
        );

        // Unknown warden key.
        let stranger = crate::primitives::KeyPair::from_seed([0x77; 32]);
        let mut alien = fx.claim(1, 5);
        alien.warden = stranger.public();
        assert_eq!(
            fx.ledger.record_closing_claim(&ch, alien).unwrap_err(),
            LedgerError::UnknownWarden
        );
    }

    #[test]
    fn pessimistic_close_at_max_claimed_seq() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        // 7 = t claims, one of them stale at seq 4: the contract closes at
        // the maximum, 5.
        fx.record_claims(&[(0, 5), (1, 5), (2, 5), (3, 4), (4, 5), (5, 5), (6, 5)]);
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);

        // Submitting the wrong state is rejected outright.
        let s4 = fx.state(4, 6, 6);
        let (s4a, s4b) = fx.commit_sigs(&s4);
        assert_eq!(
            fx.ledger
                .pessimistic_close(&ch, PartyRole::A, &s4, &s4a, &s4b, None, &[])
                .unwrap_err(),
            LedgerError::WrongState
        );

        // Commit signatures must verify over (commitment, seq).
        assert_eq!(
            fx.ledger
                .pessimistic_close(&ch, PartyRole::A, &s5, &s4a, &sig_b, None, &[])
                .unwrap_err(),
            LedgerError::BadCommitSignature
        );

        let outcome = fx
            .ledger
            .pessimistic_close(&ch, PartyRole::A, &s5, &sig_a, &sig_b, None, &[])
            .unwrap();
        assert_eq!(outcome.kind, CloseKind::PessimisticState);
        assert_eq!(outcome.closing_seq, Some(5));
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.phase, Phase::Closed);
        assert_eq!(payout_sum_for(c, Beneficiary::PartyA), 7);
        assert_eq!(payout_sum_for(c, Beneficiary::PartyB), 5);
    }

    #[test]
    fn insufficient_claims_keep_the_channel_pending() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.record_claims(&[(0, 5), (1, 5), (2, 5), (3, 5), (4, 5), (5, 5)]);
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        assert_eq!(
            fx.ledger
                .pessimistic_close(&ch, PartyRole::A, &s5, &sig_a, &sig_b, None, &[])
                .unwrap_err(),
            LedgerError::InsufficientClaims
        );
        assert_eq!(
            fx.ledger.contract(&ch).unwrap().phase,
            Phase::PessimisticPending
        );
    }

    #[test]
    fn proofs_of_fraud_exclude_claims_and_pay_the_submitter() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        // Wardens 0 and 1 claim an old seq 3 although they acked 5; seven
        // claims among the remaining eight wardens carry the close.
        fx.record_claims(&[
            (0, 3),
            (1, 3),
            (2, 5),
            (3, 5),
            (4, 5),
            (5, 5),
            (6, 5),
            (7, 5),
            (8, 5),
        ]);
        let proofs = vec![fx.proof(0, 5, 3), fx.proof(1, 5, 3)];
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        let outcome = fx
            .ledger
            .pessimistic_close(&ch, PartyRole::B, &s5, &sig_a, &sig_b, None, &proofs)
            .unwrap();
        assert_eq!(outcome.kind, CloseKind::PessimisticState);
        assert_eq!(outcome.slashed, vec![0, 1]);
        assert!(outcome.invalid_proofs.is_empty());

        let c = fx.ledger.contract(&ch).unwrap();
        // The submitter (B) additionally receives 2 * 4 slashed collateral.
        assert_eq!(payout_sum_for(c, Beneficiary::PartyB), 5 + 8);
        // Fee goes to the first 7 non-excluded claimants (wardens 2..=8).
        for i in 2..=8u32 {
            assert_eq!(c.fee_award.get(&i), Some(&10));
        }
        assert_eq!(c.fee_award.get(&0), None);
        assert_eq!(c.fee_award.get(&1), None);
    }

    #[test]
    fn majority_fraud_forfeits_the_channel_to_the_counterparty() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.record_claims(&[(0, 3), (1, 3), (2, 3), (3, 3)]);
        // f + 1 = 4 proofs: the submitter keeps only the collateral, the
        // whole balance goes to the counterparty.
        let proofs = vec![
            fx.proof(0, 5, 3),
            fx.proof(1, 5, 3),
            fx.proof(2, 5, 3),
            fx.proof(3, 5, 3),
        ];
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        let outcome = fx
            .ledger
            .pessimistic_close(&ch, PartyRole::A, &s5, &sig_a, &sig_b, None, &proofs)
            .unwrap();
        assert_eq!(outcome.kind, CloseKind::PessimisticForfeit);
        assert_eq!(outcome.closing_seq, None);

        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(payout_sum_for(c, Beneficiary::PartyA), 16 + 35);
        assert_eq!(payout_sum_for(c, Beneficiary::PartyB), 12 + 35);

        // Full conservation once the unslashed wardens redeem.
        for i in 4..10 {
            let w = fx.wardens[i].public();
            assert_eq!(fx.ledger.redeem_warden(&ch, &w).unwrap(), 4);
        }
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.deposits_total(), c.payouts_total());
    }

    #[test]
    fn invalid_proofs_are_reported_not_fatal() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.record_claims(&[(0, 5), (1, 5), (2, 5), (3, 5), (4, 5), (5, 5), (6, 5)]);
        // An ack at a seq not above the claim is no fraud; a proof against
        // an unknown warden is ignored too.
        let mut bogus = fx.proof(0, 3, 5);
        bogus.ack.seq = 3;
        let stranger = crate::primitives::KeyPair::from_seed([0x99; 32]);
        let mut alien = fx.proof(1, 5, 3);
        alien.warden = stranger.public();
        alien.ack.warden = stranger.public();

        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        let outcome = fx
            .ledger
            .pessimistic_close(
                &ch,
                PartyRole::A,
                &s5,
                &sig_a,
                &sig_b,
                None,
                &[bogus, alien],
            )
            .unwrap();
        assert_eq!(outcome.kind, CloseKind::PessimisticState);
        assert!(outcome.slashed.is_empty());
        assert_eq!(outcome.invalid_proofs.len(), 2);
    }

    #[test]
    fn redeem_pays_collateral_plus_fee_for_the_first_t() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        // All ten wardens claim; only the first seven earn the fee split.
        fx.record_claims(&[
            (0, 5),
            (1, 5),
            (2, 5),
            (3, 5),
            (4, 5),
            (5, 5),
            (6, 5),
            (7, 5),
            (8, 5),
            (9, 5),
        ]);
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        fx.ledger
            .pessimistic_close(&ch, PartyRole::A, &s5, &sig_a, &sig_b, None, &[])
            .unwrap();

        // Ranked 3rd of t=7: collateral 4 + fee 10.
        let w2 = fx.wardens[2].public();
        assert_eq!(fx.ledger.redeem_warden(&ch, &w2).unwrap(), 14);
        // Ranked 8th: collateral only.
        let w7 = fx.wardens[7].public();
        assert_eq!(fx.ledger.redeem_warden(&ch, &w7).unwrap(), 4);
        assert_eq!(
            fx.ledger.redeem_warden(&ch, &w7).unwrap_err(),
            LedgerError::AlreadyRedeemed
        );

        for i in [0usize, 1, 3, 4, 5, 6, 8, 9] {
            let w = fx.wardens[i].public();
            fx.ledger.redeem_warden(&ch, &w).unwrap();
        }
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.deposits_total(), c.payouts_total());
    }

    #[test]
    fn slashed_wardens_cannot_redeem() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.record_claims(&[
            (0, 3),
            (1, 5),
            (2, 5),
            (3, 5),
            (4, 5),
            (5, 5),
            (6, 5),
            (7, 5),
        ]);
        let proofs = vec![fx.proof(0, 5, 3)];
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        fx.ledger
            .pessimistic_close(&ch, PartyRole::B, &s5, &sig_a, &sig_b, None, &proofs)
            .unwrap();
        let w0 = fx.wardens[0].public();
        assert_eq!(
            fx.ledger.redeem_warden(&ch, &w0).unwrap_err(),
            LedgerError::SlashedWarden
        );
    }

    #[test]
    fn redeem_is_for_pessimistic_closes_only() {
        let mut fx = Fixture::open_default();
        let ch = fx.channel;
        fx.ledger
            .optimistic_close_request(&ch, PartyRole::A, 7)
            .unwrap();
        fx.ledger.optimistic_close_agree(&ch, PartyRole::B).unwrap();
        let w0 = fx.wardens[0].public();
        assert_eq!(
            fx.ledger.redeem_warden(&ch, &w0).unwrap_err(),
            LedgerError::WrongPhase
        );
    }

    #[test]
    fn brickplus_claims_carry_heads_and_close_checks_the_chain() {
        let mut fx = Fixture::open(10, 6, 6, 70, ChannelMode::BrickPlus);
        let ch = fx.channel;

        // Audited mode rejects the optimistic path.
        assert_eq!(
            fx.ledger
                .optimistic_close_request(&ch, PartyRole::A, 7)
                .unwrap_err(),
            LedgerError::WrongMode
        );
        // And plain claims without a head.
        let plain = fx.claim(0, 1);
        assert_eq!(
            fx.ledger.record_closing_claim(&ch, plain).unwrap_err(),
            LedgerError::WrongMode
        );

        let s1 = fx.state(1, 6, 6);
        let s2 = fx.state(2, 7, 5);
        let h1 = extend_chain(&GENESIS_PREV_HEAD, &s1);
        let h2 = extend_chain(&h1, &s2);
        for i in 0..7 {
            let claim = fx.claim_with_head(i, 2, h2);
            fx.ledger.record_closing_claim(&ch, claim).unwrap();
        }

        let (sig_a, sig_b) = fx.head_commit_sigs(&h2, 2);
        // A state that does not recompute the claimed head is rejected.
        let wrong = fx.state(2, 5, 7);
        let (wa, wb) = {
            let head = extend_chain(&h1, &wrong);
            let pt = commit_plaintext(&ch, &head, 2);
            (fx.key_a.sign(&pt), fx.key_b.sign(&pt))
        };
        assert_eq!(
            fx.ledger
                .pessimistic_close(&ch, PartyRole::A, &wrong, &wa, &wb, Some(h1), &[])
                .unwrap_err(),
            LedgerError::WrongState
        );
        // Missing prev-head cannot verify either.
        assert_eq!(
            fx.ledger
                .pessimistic_close(&ch, PartyRole::A, &s2, &sig_a, &sig_b, None, &[])
                .unwrap_err(),
            LedgerError::WrongState
        );

        let outcome = fx
            .ledger
            .pessimistic_close(&ch, PartyRole::A, &s2, &sig_a, &sig_b, Some(h1), &[])
            .unwrap();
        assert_eq!(outcome.closing_seq, Some(2));
        let c = fx.ledger.contract(&ch).unwrap();
        assert_eq!(c.closed.as_ref().unwrap().closing_head, Some(h2));
    }

    #[test]
    fn access_requests_are_recorded_in_audited_mode_only() {
        let mut fx = Fixture::open(10, 6, 6, 70, ChannelMode::BrickPlus);
        let ch = fx.channel;
        let auditor = crate::primitives::KeyPair::from_seed([0xD4; 32]).public();
        fx.ledger.record_access_request(&ch, &auditor).unwrap();
        assert_eq!(
            fx.ledger.contract(&ch).unwrap().access_requests.len(),
            1
        );

        let mut brick = Fixture::open_default();
        let bch = brick.channel;
        assert_eq!(
            brick
                .ledger
                .record_access_request(&bch, &auditor)
                .unwrap_err(),
            LedgerError::WrongMode
        );
    }

    #[test]
    fn blocks_include_pending_transactions_promptly() {
        let mut fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        let ch = fx.channel;
        fx.ledger.submit(Tx::FundParty {
            channel: ch,
            role: PartyRole::A,
            amount: 6,
        });
        // Submitted before block 1: included in block 1.
        let block = fx.ledger.advance_block();
        assert_eq!(block.height, 1);
        assert_eq!(block.txs.len(), 1);
        assert!(block.txs[0].ok);
        assert_eq!(fx.ledger.contract(&ch).unwrap().phase, Phase::PartyAFunded);

        // A failing transaction is included with its error recorded.
        fx.ledger.submit(Tx::FundParty {
            channel: ch,
            role: PartyRole::A,
            amount: 6,
        });
        let block = fx.ledger.advance_block();
        assert!(!block.txs[0].ok);
        assert!(block.txs[0].error.is_some());
    }

    #[test]
    fn censor_policy_delays_matching_transactions() {
        let mut ledger = Ledger::new(
            6,
            ChainPolicy::Censor {
                selector: TxSelector::BaselineDisputes,
                hold_blocks: 7,
            },
            0,
        );
        ledger
            .baseline_open(
                1,
                vec![
                    BaselineState {
                        seq: 1,
                        balance_a: 9,
                        balance_b: 3,
                    },
                    BaselineState {
                        seq: 2,
                        balance_a: 2,
                        balance_b: 10,
                    },
                ],
                6,
            )
            .unwrap();
        ledger.submit(Tx::BaselineClose { id: 1, seq: 1 });
        ledger.advance_block();
        // The dispute is held past the 6-block window: the stale close
        // settles and the victim loses funds.
        ledger.submit(Tx::BaselineDispute {
            id: 1,
            disputer: PartyRole::B,
            seq: 2,
        });
        for _ in 0..9 {
            ledger.advance_block();
        }
        let baseline = ledger.baseline(1).unwrap();
        assert_eq!(
            baseline.status,
            crate::baseline::BaselineStatus::Settled {
                seq: 1,
                disputed: false
            }
        );
        // The late dispute was included but bounced.
        let late = ledger
            .blocks()
            .iter()
            .flat_map(|b| &b.txs)
            .find(|t| matches!(t.tx, Tx::BaselineDispute { .. }))
            .unwrap();
        assert!(!late.ok);
    }

    #[test]
    fn persistence_reads_are_stable_at_depth() {
        let mut fx = Fixture::deployed(10, 70, ChannelMode::Brick);
        let ch = fx.channel;
        fx.ledger.submit(Tx::FundParty {
            channel: ch,
            role: PartyRole::A,
            amount: 6,
        });
        fx.ledger.advance_block();
        let first_read = fx.ledger.blocks()[0].txs[0].tx.encode();
        assert!(!fx.ledger.is_final(1));
        for _ in 0..5 {
            fx.ledger.advance_block();
        }
        assert!(fx.ledger.is_final(1));
        let second_read = fx.ledger.blocks()[0].txs[0].tx.encode();
        assert_eq!(first_read, second_read);
    }

    #[test]
    fn tx_codec_roundtrips() {
        let fx = Fixture::open_default();
        let s5 = fx.state(5, 7, 5);
        let (sig_a, sig_b) = fx.commit_sigs(&s5);
        let samples = vec![
            Tx::Deploy {
                params: fx.ledger.contract(&fx.channel).unwrap().params.clone(),
            },
            Tx::FundParty {
                channel: fx.channel,
                role: PartyRole::B,
                amount: 6,
            },
            Tx::Withdraw {
                channel: fx.channel,
                actor: Beneficiary::Warden(3),
            },
            Tx::RecordClaim {
                channel: fx.channel,
                claim: fx.claim(2, 5),
            },
            Tx::PessimisticClose {
                channel: fx.channel,
                submitter: PartyRole::A,
                state: s5,
                sig_a,
                sig_b,
                prev_head: Some(Hash32([7; 32])),
                proofs: vec![fx.proof(1, 5, 3)],
            },
            Tx::BaselineOpen {
                id: 4,
                states: vec![BaselineState {
                    seq: 1,
                    balance_a: 2,
                    balance_b: 3,
                }],
                dispute_window: 6,
            },
        ];
        for tx in samples {
            let bytes = tx.encode();
            let decoded = Tx::decode(tx.kind(), &bytes).unwrap();
            assert_eq!(decoded, tx);
        }
    }
}
