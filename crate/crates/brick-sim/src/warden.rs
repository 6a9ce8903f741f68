//! Warden state machine: consistent-broadcast receiver, closing responder,
//! and the catalog of deviant strategies used as test adversaries.
//!
//! An honest warden stores exactly one announcement (the latest accepted
//! one, or the chain head and sequence number in audited mode), acks only
//! sequence numbers exactly one higher than what it stored, and stops
//! signing for good once it has published a closing claim. Deviant
//! strategies break one of those rules each; they are behaviours, not
//! errors, so incentive runs can measure what the deviation costs.

use crate::channel::{
    close_plaintext, validate_announcement, AnnouncementMsg, ChannelId, FeeTicket, PartyRole,
    WardenAck,
};
use crate::ledger::{ChannelMode, ClosingClaim};
use crate::primitives::{KeyPair, PublicKey};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How a warden behaves. `Honest` follows the protocol exactly; the rest
/// implement one deviation each.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum WardenStrategy {
    Honest,
    /// Never replies to updates or close requests (keeps the fees it was
    /// already sent).
    Unresponsive,
    /// Acks without storing; at close it has nothing safe to claim and
    /// stays out, forfeiting the closing fee.
    AckWithoutStore,
    /// Keeps acking updates after publishing its closing claim — every
    /// later ack hands the counterparty a proof of fraud.
    SignAfterClose,
    /// Closes at an old announcement in exchange for a bribe: the classic
    /// slashable equivocation.
    BribedOldClaim { bribe: u64, claim_seq: u64 },
    /// Stops processing anything after a fixed number of events.
    Crash { after_events: u64 },
}

/// Why an announcement was not acked.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AckRejection {
    StaleOrGapSeq,
    BadSignatures,
    InsufficientFee,
    IgnoredAfterClose,
    /// Strategy decided not to respond (unresponsive or crashed).
    Unresponsive,
}

#[derive(Clone, Debug)]
struct StoredAnnouncement {
    msg: AnnouncementMsg,
}

/// One committee member.
pub struct Warden {
    keys: KeyPair,
    channel: ChannelId,
    party_a: PublicKey,
    party_b: PublicKey,
    update_fee: u64,
    mode: ChannelMode,
    strategy: WardenStrategy,
    stored: Option<StoredAnnouncement>,
    /// Everything ever seen, kept by the simulation so deviant strategies
    /// can dig up old announcements. Honest paths never read this.
    seen: Vec<StoredAnnouncement>,
    closed: bool,
    fee_income: BTreeMap<PartyRole, u64>,
    bribe_income: u64,
    acked: BTreeMap<PartyRole, u64>,
    events_processed: u64,
}

impl Warden {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        keys: KeyPair,
        channel: ChannelId,
        party_a: PublicKey,
        party_b: PublicKey,
        update_fee: u64,
        mode: ChannelMode,
        strategy: WardenStrategy,
    ) -> Warden {
        Warden {
            keys,
            channel,
            party_a,
            party_b,
            update_fee,
            mode,
            strategy,
            stored: None,
            seen: Vec::new(),
            closed: false,
            fee_income: BTreeMap::new(),
            bribe_income: 0,
            acked: BTreeMap::new(),
            events_processed: 0,
        }
    }

    pub fn public(&self) -> PublicKey {
        self.keys.public()
    }

    pub fn strategy(&self) -> WardenStrategy {
        self.strategy
    }

    pub fn stored_seq(&self) -> Option<u64> {
        self.stored.as_ref().map(|s| s.msg.ann.seq)
    }

    pub fn has_claimed(&self) -> bool {
        self.closed
    }

    pub fn fee_income_total(&self) -> u64 {
        self.fee_income.values().sum()
    }

    pub fn bribe_income(&self) -> u64 {
        self.bribe_income
    }

    pub fn receive_bribe(&mut self, amount: u64) {
        self.bribe_income += amount;
    }

    fn crashed(&self) -> bool {
        matches!(self.strategy, WardenStrategy::Crash { after_events } if self.events_processed > after_events)
    }

    /// A rational warden sells an equivocation only above its collateral;
    /// a Byzantine one needs no compensation at all.
    pub fn decide_bribe(&self, offer: u64, collateral: u64, epsilon: u64) -> bool {
        match self.strategy {
            WardenStrategy::BribedOldClaim { .. } => true,
            _ => offer >= collateral + epsilon,
        }
    }

    /// Accept or reject an offered bribe; accepted bribes are income.
    pub fn on_bribe_offer(&mut self, offer: u64, collateral: u64, epsilon: u64) -> bool {
        let accept = self.decide_bribe(offer, collateral, epsilon);
        if accept {
            self.bribe_income += offer;
        }
        accept
    }

    /// Process one announcement from `from`, who paid `fee` for the ack.
    ///
    /// The honest rules: ignore everything after publishing a closing
    /// claim; verify both party signatures; accept only the next sequence
    /// number (or re-ack the currently stored announcement for the second
    /// paying party); require a fresh fee ticket for every update past the
    /// opening announcement.
    pub fn on_announcement(
        &mut self,
        from: PartyRole,
        msg: &AnnouncementMsg,
        fee: Option<&FeeTicket>,
    ) -> Result<WardenAck, AckRejection> {
        self.events_processed += 1;
        if self.crashed() || self.strategy == WardenStrategy::Unresponsive {
            // The update fee travelled with the request; an unresponsive
            // warden keeps it without replying.
            if self.strategy == WardenStrategy::Unresponsive {
                self.take_fee(from, msg.ann.seq, fee).ok();
            }
            return Err(AckRejection::Unresponsive);
        }
        if self.closed && self.strategy != WardenStrategy::SignAfterClose {
            return Err(AckRejection::IgnoredAfterClose);
        }

        if self.strategy == WardenStrategy::AckWithoutStore {
            return self.ack_without_store(from, msg, fee);
        }

        let expected = self.stored_seq().map(|s| s + 1).unwrap_or(1);
        if msg.ann.seq == expected {
            if !validate_announcement(&msg.ann, expected, &self.party_a, &self.party_b) {
                return Err(AckRejection::BadSignatures);
            }
            if !self.head_ok(msg) {
                return Err(AckRejection::BadSignatures);
            }
            self.take_fee(from, msg.ann.seq, fee)?;
            let stored = StoredAnnouncement { msg: *msg };
            self.seen.push(stored.clone());
            self.stored = Some(stored);
            Ok(self.make_ack(from, msg.ann.seq))
        } else if Some(msg.ann.seq) == self.stored_seq()
            && self.stored.as_ref().map(|s| s.msg) == Some(*msg)
            && self.acked.get(&from).copied().unwrap_or(0) < msg.ann.seq
        {
            // Second paying party delivering the same announcement.
            self.take_fee(from, msg.ann.seq, fee)?;
            Ok(self.make_ack(from, msg.ann.seq))
        } else {
            Err(AckRejection::StaleOrGapSeq)
        }
    }

    fn ack_without_store(
        &mut self,
        from: PartyRole,
        msg: &AnnouncementMsg,
        fee: Option<&FeeTicket>,
    ) -> Result<WardenAck, AckRejection> {
        // Verifies and acks anything paid for, but only ever stores the
        // opening announcement.
        if !validate_announcement(&msg.ann, msg.ann.seq, &self.party_a, &self.party_b) {
            return Err(AckRejection::BadSignatures);
        }
        self.take_fee(from, msg.ann.seq, fee)?;
        let stored = StoredAnnouncement { msg: *msg };
        self.seen.push(stored.clone());
        if msg.ann.seq == 1 && self.stored.is_none() {
            self.stored = Some(stored);
        }
        Ok(self.make_ack(from, msg.ann.seq))
    }

    fn head_ok(&self, msg: &AnnouncementMsg) -> bool {
        match (self.mode, &msg.head) {
            (ChannelMode::Brick, None) => true,
            (ChannelMode::BrickPlus, Some(h)) => {
                h.verify(&self.channel, msg.ann.seq, &self.party_a, &self.party_b)
            }
            _ => false,
        }
    }

    fn take_fee(
        &mut self,
        from: PartyRole,
        seq: u64,
        fee: Option<&FeeTicket>,
    ) -> Result<(), AckRejection> {
        if seq <= 1 {
            // The opening announcement travels fee-free.
            return Ok(());
        }
        let ticket = fee.ok_or(AckRejection::InsufficientFee)?;
        let payer = match from {
            PartyRole::A => self.party_a,
            PartyRole::B => self.party_b,
        };
        let income = self.fee_income.entry(from).or_insert(0);
        if ticket.cumulative != *income + self.update_fee
            || !ticket.verify(&self.channel, &self.keys.public(), &payer)
        {
            return Err(AckRejection::InsufficientFee);
        }
        *income = ticket.cumulative;
        Ok(())
    }

    fn make_ack(&mut self, to: PartyRole, seq: u64) -> WardenAck {
        self.acked.insert(to, seq);
        WardenAck {
            channel: self.channel,
            seq,
            warden: self.keys.public(),
            sig: self
                .keys
                .sign(&crate::channel::ack_plaintext(&self.channel, seq)),
        }
    }

    fn claim_from(&self, stored: &StoredAnnouncement) -> ClosingClaim {
        ClosingClaim {
            channel: self.channel,
            warden: self.keys.public(),
            seq: stored.msg.ann.seq,
            warden_sig: self
                .keys
                .sign(&close_plaintext(&self.channel, stored.msg.ann.seq)),
            ann_sig_a: stored.msg.ann.sig_a,
            ann_sig_b: stored.msg.ann.sig_b,
            head: stored.msg.head,
        }
    }

    /// Answer a close request with an on-chain claim on the stored
    /// announcement, and stop signing updates. Idempotent; a warden with
    /// nothing stored reports nothing.
    pub fn on_close_request(&mut self) -> Option<ClosingClaim> {
        self.events_processed += 1;
        if self.closed || self.crashed() {
            return None;
        }
        match self.strategy {
            WardenStrategy::Unresponsive => None,
            // Its stored announcement is stale relative to what it acked;
            // claiming it would be self-incriminating, so it sits out.
            WardenStrategy::AckWithoutStore => None,
            WardenStrategy::BribedOldClaim { claim_seq, .. } => {
                let old = self
                    .seen
                    .iter()
                    .find(|s| s.msg.ann.seq == claim_seq)
                    .or_else(|| self.seen.first())?;
                let claim = self.claim_from(&old.clone());
                self.closed = true;
                Some(claim)
            }
            _ => {
                let stored = self.stored.as_ref()?;
                let claim = self.claim_from(&stored.clone());
                self.closed = true;
                Some(claim)
            }
        }
    }

    /// Audited mode: a valid on-chain access request triggers the closing
    /// flow exactly like a party's close request; invalid requests are
    /// ignored.
    pub fn on_access_request(
        &mut self,
        auditor: &PublicKey,
        allowed: &[PublicKey],
    ) -> Option<ClosingClaim> {
        if self.mode != ChannelMode::BrickPlus || !allowed.contains(auditor) {
            return None;
        }
        self.on_close_request()
    }
}
