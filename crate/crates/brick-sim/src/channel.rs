//! Pure data model of a channel: states, commitments, announcements, and
//! the construction/validation rules both parties follow when they agree on
//! a new state.
//!
//! The signed plaintext layouts defined here are consumed verbatim by the
//! contract and the wardens; every plaintext embeds the channel id so
//! signatures cannot be replayed across channels.

use crate::primitives::{
    hash, verify, ByteReader, ByteWriter, CodecError, Hash32, KeyPair, PublicKey, Signature,
};
use serde::{Deserialize, Serialize};

pub const COMMIT_TAG: &str = "BRICK/commit";
pub const ANNOUNCE_TAG: &str = "BRICK/seq";
pub const ACK_TAG: &str = "BRICK/ack";
pub const CLOSE_TAG: &str = "BRICK/close";
pub const FEE_TAG: &str = "BRICK/fee";
const STATE_TAG: &str = "BRICK/state";
const CHANNEL_ID_TAG: &str = "BRICK/channel-id";

/// Unique on-chain address of a channel contract.
#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize,
)]
pub struct ChannelId(pub Hash32);

impl ChannelId {
    /// Derived from the deploy nonce and the deploy parameter digest, so the
    /// id is unique per channel within a run and computable ahead of the
    /// deploy transaction's inclusion.
    pub fn derive(nonce: u64, params_digest: &Hash32) -> ChannelId {
        let mut w = ByteWriter::tagged(CHANNEL_ID_TAG);
        w.put_u64(nonce).put_bytes32(params_digest.as_bytes());
        ChannelId(hash(&w.finish()))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }
}

/// Which side of the channel a key belongs to.
#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize,
)]
pub enum PartyRole {
    A,
    B,
}

impl PartyRole {
    pub fn other(&self) -> PartyRole {
        match self {
            PartyRole::A => PartyRole::B,
            PartyRole::B => PartyRole::A,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PartyRole::A => "party_a",
            PartyRole::B => "party_b",
        }
    }
}

/// One off-chain channel state: balances at a sequence number, plus the
/// blinding salt that keeps the on-chain commitment hiding.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ChannelState {
    pub seq: u64,
    pub balance_a: u64,
    pub balance_b: u64,
    pub salt: [u8; 32],
}

impl ChannelState {
    pub fn total(&self) -> u64 {
        self.balance_a + self.balance_b
    }

    pub fn balance_of(&self, role: PartyRole) -> u64 {
        match role {
            PartyRole::A => self.balance_a,
            PartyRole::B => self.balance_b,
        }
    }

    /// Blinded commitment `H(s, r)`: the only thing outsiders ever see of a
    /// state before the channel closes.
    pub fn commitment(&self) -> Hash32 {
        let mut w = ByteWriter::tagged(STATE_TAG);
        w.put_u64(self.seq)
            .put_u64(self.balance_a)
            .put_u64(self.balance_b)
            .put_bytes32(&self.salt);
        hash(&w.finish())
    }
}

pub fn commit_plaintext(channel: &ChannelId, commitment: &Hash32, seq: u64) -> Vec<u8> {
    let mut w = ByteWriter::tagged(COMMIT_TAG);
    w.put_bytes32(channel.as_bytes())
        .put_bytes32(commitment.as_bytes())
        .put_u64(seq);
    w.finish()
}

pub fn announce_plaintext(channel: &ChannelId, seq: u64) -> Vec<u8> {
    let mut w = ByteWriter::tagged(ANNOUNCE_TAG);
    w.put_bytes32(channel.as_bytes()).put_u64(seq);
    w.finish()
}

pub fn ack_plaintext(channel: &ChannelId, seq: u64) -> Vec<u8> {
    let mut w = ByteWriter::tagged(ACK_TAG);
    w.put_bytes32(channel.as_bytes()).put_u64(seq);
    w.finish()
}

pub fn close_plaintext(channel: &ChannelId, seq: u64) -> Vec<u8> {
    let mut w = ByteWriter::tagged(CLOSE_TAG);
    w.put_bytes32(channel.as_bytes()).put_u64(seq);
    w.finish()
}

pub fn fee_plaintext(channel: &ChannelId, warden: &PublicKey, cumulative: u64) -> Vec<u8> {
    let mut w = ByteWriter::tagged(FEE_TAG);
    w.put_bytes32(channel.as_bytes())
        .put_bytes32(warden.as_bytes())
        .put_u64(cumulative);
    w.finish()
}

/// Decoded form of one of the tagged plaintexts; used to check that the
/// encodings stay injective and parseable.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DecodedPlaintext {
    pub channel: ChannelId,
    pub digest: Option<Hash32>,
    pub seq: u64,
}

pub fn decode_plaintext(tag: &str, data: &[u8]) -> Result<DecodedPlaintext, CodecError> {
    let mut r = ByteReader::tagged(data, tag)?;
    let channel = ChannelId(Hash32(r.get_bytes32()?));
    let digest = if tag == COMMIT_TAG {
        Some(Hash32(r.get_bytes32()?))
    } else {
        None
    };
    let seq = r.get_u64()?;
    r.finish()?;
    Ok(DecodedPlaintext {
        channel,
        digest,
        seq,
    })
}

/// Both-party-signed blinded state hash at a sequence number.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StateCommitment {
    pub channel: ChannelId,
    pub commitment: Hash32,
    pub seq: u64,
    pub sig_a: Signature,
    pub sig_b: Signature,
}

impl StateCommitment {
    pub fn verify(&self, party_a: &PublicKey, party_b: &PublicKey) -> bool {
        let plaintext = commit_plaintext(&self.channel, &self.commitment, self.seq);
        verify(party_a, &plaintext, &self.sig_a) && verify(party_b, &plaintext, &self.sig_b)
    }
}

/// Both-party-signed sequence number: the unit of consistent broadcast.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Announcement {
    pub channel: ChannelId,
    pub seq: u64,
    pub sig_a: Signature,
    pub sig_b: Signature,
}

/// Head of the state hash chain with both parties' signatures over the
/// commit-layout plaintext; attached to announcements and closing claims in
/// the audited mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HeadAttachment {
    pub head: Hash32,
    pub sig_a: Signature,
    pub sig_b: Signature,
}

impl HeadAttachment {
    pub fn verify(&self, channel: &ChannelId, seq: u64, party_a: &PublicKey, party_b: &PublicKey) -> bool {
        let plaintext = commit_plaintext(channel, &self.head, seq);
        verify(party_a, &plaintext, &self.sig_a) && verify(party_b, &plaintext, &self.sig_b)
    }
}

/// What a party actually broadcasts to the committee: the announcement, and
/// in audited mode the signed chain head that goes with it.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AnnouncementMsg {
    pub ann: Announcement,
    pub head: Option<HeadAttachment>,
}

/// One-way fee channel ticket: the party's signature over the new
/// cumulative total, worth exactly one update fee to the named warden.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FeeTicket {
    pub cumulative: u64,
    pub sig: Signature,
}

impl FeeTicket {
    pub fn verify(&self, channel: &ChannelId, warden: &PublicKey, payer: &PublicKey) -> bool {
        verify(
            payer,
            &fee_plaintext(channel, warden, self.cumulative),
            &self.sig,
        )
    }
}

/// A warden's signature acknowledging an announcement.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct WardenAck {
    pub channel: ChannelId,
    pub seq: u64,
    pub warden: PublicKey,
    pub sig: Signature,
}

impl WardenAck {
    pub fn verify(&self) -> bool {
        verify(
            &self.warden,
            &ack_plaintext(&self.channel, self.seq),
            &self.sig,
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("balances do not conserve the channel total")]
    ConservationViolation,
    #[error("sequence number is not exactly one higher than the previous")]
    NonMonotoneSeq,
    #[error("counterparty signature missing or invalid")]
    MissingCounterpartySignature,
}

/// Build a both-signed commitment for a new state.
///
/// `prev_seq` is the latest agreed sequence number and `total` the channel's
/// locked funds; the new state must conserve `total` and advance the
/// sequence by exactly one.
pub fn make_commitment(
    channel: &ChannelId,
    state: &ChannelState,
    prev_seq: u64,
    total: u64,
    key_a: &KeyPair,
    key_b: &KeyPair,
) -> Result<StateCommitment, ChannelError> {
    if state.total() != total {
        return Err(ChannelError::ConservationViolation);
    }
    if state.seq != prev_seq + 1 {
        return Err(ChannelError::NonMonotoneSeq);
    }
    let commitment = state.commitment();
    let plaintext = commit_plaintext(channel, &commitment, state.seq);
    Ok(StateCommitment {
        channel: *channel,
        commitment,
        seq: state.seq,
        sig_a: key_a.sign(&plaintext),
        sig_b: key_b.sign(&plaintext),
    })
}

/// Turn a fully signed commitment into the announcement broadcast to the
/// committee. Fails if either commit signature does not verify.
pub fn make_announcement(
    commitment: &StateCommitment,
    party_a: &PublicKey,
    party_b: &PublicKey,
    key_a: &KeyPair,
    key_b: &KeyPair,
) -> Result<Announcement, ChannelError> {
    if !commitment.verify(party_a, party_b) {
        return Err(ChannelError::MissingCounterpartySignature);
    }
    let plaintext = announce_plaintext(&commitment.channel, commitment.seq);
    Ok(Announcement {
        channel: commitment.channel,
        seq: commitment.seq,
        sig_a: key_a.sign(&plaintext),
        sig_b: key_b.sign(&plaintext),
    })
}

/// True iff both party signatures verify and the announcement carries
/// exactly the expected sequence number.
pub fn validate_announcement(
    ann: &Announcement,
    expected_seq: u64,
    party_a: &PublicKey,
    party_b: &PublicKey,
) -> bool {
    if ann.seq != expected_seq {
        return false;
    }
    let plaintext = announce_plaintext(&ann.channel, ann.seq);
    verify(party_a, &plaintext, &ann.sig_a) && verify(party_b, &plaintext, &ann.sig_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::hash;
    use proptest::prelude::*;

    fn keys() -> (KeyPair, KeyPair) {
        (KeyPair::from_seed([1; 32]), KeyPair::from_seed([2; 32]))
    }

    fn channel() -> ChannelId {
        ChannelId::derive(0, &hash(b"params"))
    }

    fn state(seq: u64, a: u64, b: u64, salt: u8) -> ChannelState {
        ChannelState {
            seq,
            balance_a: a,
            balance_b: b,
            salt: [salt; 32],
        }
    }

    #[test]
    fn commitment_construction_and_checks() {
        let (ka, kb) = keys();
        let ch = channel();
        let c = make_commitment(&ch, &state(5, 7, 5, 9), 4, 12, &ka, &kb).unwrap();
        assert!(c.verify(&ka.public(), &kb.public()));
        assert_eq!(c.seq, 5);

        assert_eq!(
            make_commitment(&ch, &state(5, 8, 5, 9), 4, 12, &ka, &kb).unwrap_err(),
            ChannelError::ConservationViolation
        );
        assert_eq!(
            make_commitment(&ch, &state(4, 7, 5, 9), 4, 12, &ka, &kb).unwrap_err(),
            ChannelError::NonMonotoneSeq
        );
    }

    #[test]
    fn commitment_recomputes_from_revealed_state() {
        let (ka, kb) = keys();
        let s = state(5, 7, 5, 9);
        let c = make_commitment(&channel(), &s, 4, 12, &ka, &kb).unwrap();
        assert_eq!(c.commitment, s.commitment());
    }

    #[test]
    fn announcement_requires_full_commitment() {
        let (ka, kb) = keys();
        let ch = channel();
        let mut c = make_commitment(&ch, &state(5, 7, 5, 9), 4, 12, &ka, &kb).unwrap();
        let ann =
            make_announcement(&c, &ka.public(), &kb.public(), &ka, &kb).unwrap();
        assert_eq!(ann.seq, 5);
        assert!(validate_announcement(&ann, 5, &ka.public(), &kb.public()));

        // Damage the counterparty signature: no announcement can be built.
        c.sig_b = ka.sign(b"wrong");
        assert_eq!(
            make_announcement(&c, &ka.public(), &kb.public(), &ka, &kb).unwrap_err(),
            ChannelError::MissingCounterpartySignature
        );
    }

    #[test]
    fn announcement_is_bound_to_its_channel() {
        let (ka, kb) = keys();
        let ch1 = channel();
        let ch2 = ChannelId::derive(1, &hash(b"params"));
        let c = make_commitment(&ch1, &state(5, 7, 5, 9), 4, 12, &ka, &kb).unwrap();
        let ann = make_announcement(&c, &ka.public(), &kb.public(), &ka, &kb).unwrap();
        // Same signatures presented for a different channel id fail.
        let replayed = Announcement {
            channel: ch2,
            ..ann
        };
        assert!(!validate_announcement(
            &replayed,
            5,
            &ka.public(),
            &kb.public()
        ));
    }

    #[test]
    fn validate_announcement_rejects_gaps_and_replays() {
        let (ka, kb) = keys();
        let ch = channel();
        let c = make_commitment(&ch, &state(5, 7, 5, 9), 4, 12, &ka, &kb).unwrap();
        let ann = make_announcement(&c, &ka.public(), &kb.public(), &ka, &kb).unwrap();
        assert!(validate_announcement(&ann, 5, &ka.public(), &kb.public()));
        // Stored seq 4 expects 5; a gap (6) or replay (4) must fail.
        assert!(!validate_announcement(&ann, 6, &ka.public(), &kb.public()));
        assert!(!validate_announcement(&ann, 4, &ka.public(), &kb.public()));
    }

    #[test]
    fn commitments_hide_balances() {
        // Different balances under different salts: unequal digests, and a
        // state with the same balances but a fresh salt is also distinct.
        let s1 = state(5, 7, 5, 1);
        let s2 = state(5, 6, 6, 2);
        let s3 = state(5, 7, 5, 3);
        assert_ne!(s1.commitment(), s2.commitment());
        assert_ne!(s1.commitment(), s3.commitment());
    }

    #[test]
    fn double_signing_same_seq_is_detectable() {
        // Two distinct commitments at one seq imply a party signed twice;
        // the digests differ, which is what misbehaviour scans key on.
        let (ka, kb) = keys();
        let ch = channel();
        let c1 = make_commitment(&ch, &state(5, 7, 5, 1), 4, 12, &ka, &kb).unwrap();
        let c2 = make_commitment(&ch, &state(5, 4, 8, 2), 4, 12, &ka, &kb).unwrap();
        assert_eq!(c1.seq, c2.seq);
        assert_ne!(c1.commitment, c2.commitment);
        assert!(c1.verify(&ka.public(), &kb.public()));
        assert!(c2.verify(&ka.public(), &kb.public()));
    }

    proptest! {
        #[test]
        fn plaintexts_roundtrip(seq in 1u64..1_000_000, digest_byte: u8, nonce: u64) {
            let ch = ChannelId::derive(nonce, &hash(b"p"));
            let digest = Hash32([digest_byte; 32]);
            let cases = [
                (COMMIT_TAG, commit_plaintext(&ch, &digest, seq)),
                (ANNOUNCE_TAG, announce_plaintext(&ch, seq)),
                (ACK_TAG, ack_plaintext(&ch, seq)),
                (CLOSE_TAG, close_plaintext(&ch, seq)),
            ];
            for (tag, bytes) in &cases {
                let decoded = decode_plaintext(tag, bytes).unwrap();
                prop_assert_eq!(decoded.channel, ch);
                prop_assert_eq!(decoded.seq, seq);
                if *tag == COMMIT_TAG {
                    prop_assert_eq!(decoded.digest, Some(digest));
                }
                // Tags are not interchangeable.
                for (other_tag, _) in &cases {
                    if other_tag != tag {
                        prop_assert!(decode_plaintext(other_tag, bytes).is_err());
                    }
                }
            }
        }

        #[test]
        fn state_commitments_are_injective_per_field(
            seq in 1u64..1000, a in 0u64..1000, b in 0u64..1000, salt: u8
        ) {
            let base = ChannelState { seq, balance_a: a, balance_b: b, salt: [salt; 32] };
            let bumped_seq = ChannelState { seq: seq + 1, ..base };
            let bumped_bal = ChannelState { balance_a: a + 1, ..base };
            prop_assert_ne!(base.commitment(), bumped_seq.commitment());
            prop_assert_ne!(base.commitment(), bumped_bal.commitment());
        }
    }
}
