//! Shared fixtures for unit tests: a funded committee with real keys and
//! helpers that produce correctly signed announcements, acks, claims, and
//! proofs of fraud.

use crate::channel::{
    ack_plaintext, announce_plaintext, close_plaintext, commit_plaintext, ChannelId, ChannelState,
    PartyRole, WardenAck,
};
use crate::channel::HeadAttachment;
use crate::ledger::{ChainPolicy, ChannelMode, ClosingClaim, DeployParams, Ledger, ProofOfFraud};
use crate::primitives::{Hash32, KeyPair, PublicKey, Signature};

pub struct Fixture {
    pub ledger: Ledger,
    pub channel: ChannelId,
    pub key_a: KeyPair,
    pub key_b: KeyPair,
    pub wardens: Vec<KeyPair>,
    pub v: u64,
    pub f: u64,
    pub t: u64,
    pub closing_fee: u64,
}

pub fn party_keys() -> (KeyPair, KeyPair) {
    (KeyPair::from_seed([0xA1; 32]), KeyPair::from_seed([0xB2; 32]))
}

pub fn warden_keys(n: usize) -> Vec<KeyPair> {
    (0..n)
        .map(|i| {
            let mut seed = [0xC3; 32];
            seed[0] = i as u8;
            KeyPair::from_seed(seed)
        })
        .collect()
}

impl Fixture {
    /// n=10 committee (f=3, t=7), v=12 split 6/6, F=70, opened and ready.
    pub fn open_default() -> Fixture {
        Fixture::open(10, 6, 6, 70, ChannelMode::Brick)
    }

    pub fn open(n: usize, fund_a: u64, fund_b: u64, closing_fee: u64, mode: ChannelMode) -> Fixture {
        let mut fx = Fixture::deployed(n, closing_fee, mode);
        fx.fund_all(fund_a, fund_b);
        fx.ledger.open(&fx.channel, PartyRole::A).unwrap();
        fx
    }

    pub fn deployed(n: usize, closing_fee: u64, mode: ChannelMode) -> Fixture {
        let (key_a, key_b) = party_keys();
        let wardens = warden_keys(n);
        let f = ((n - 1) / 3) as u64;
        let t = 2 * f + 1;
        let params = DeployParams {
            party_a: key_a.public(),
            party_b: key_b.public(),
            warden_key_hashes: wardens.iter().map(|w| w.public().key_hash()).collect(),
            threshold: t,
            closing_fee,
            mode,
            auditors: vec![KeyPair::from_seed([0xD4; 32]).public()],
        };
        let mut ledger = Ledger::new(6, ChainPolicy::Prompt, 1);
        let channel = ledger.deploy(params).unwrap();
        Fixture {
            ledger,
            channel,
            key_a,
            key_b,
            wardens,
            v: 0,
            f,
            t,
            closing_fee,
        }
    }

    pub fn fund_all(&mut self, fund_a: u64, fund_b: u64) {
        self.ledger
            .fund_party(&self.channel, PartyRole::A, fund_a)
            .unwrap();
        self.ledger
            .fund_party(&self.channel, PartyRole::B, fund_b)
            .unwrap();
        self.v = fund_a + fund_b;
        let coll = self.collateral();
        for w in &self.wardens {
            self.ledger
                .fund_warden(&self.channel, &w.public(), coll)
                .unwrap();
        }
    }

    pub fn collateral(&self) -> u64 {
        self.v.div_ceil(self.f)
    }

    pub fn party_pks(&self) -> (PublicKey, PublicKey) {
        (self.key_a.public(), self.key_b.public())
    }

    pub fn state(&self, seq: u64, balance_a: u64, balance_b: u64) -> ChannelState {
        let mut salt = [0x55u8; 32];
        salt[0] = seq as u8;
        ChannelState {
            seq,
            balance_a,
            balance_b,
            salt,
        }
    }

    pub fn announce_sigs(&self, seq: u64) -> (Signature, Signature) {
        let pt = announce_plaintext(&self.channel, seq);
        (self.key_a.sign(&pt), self.key_b.sign(&pt))
    }

    pub fn commit_sigs(&self, state: &ChannelState) -> (Signature, Signature) {
        let pt = commit_plaintext(&self.channel, &state.commitment(), state.seq);
        (self.key_a.sign(&pt), self.key_b.sign(&pt))
    }

    pub fn head_commit_sigs(&self, head: &Hash32, seq: u64) -> (Signature, Signature) {
        let pt = commit_plaintext(&self.channel, head, seq);
        (self.key_a.sign(&pt), self.key_b.sign(&pt))
    }

    pub fn claim(&self, warden_index: usize, seq: u64) -> ClosingClaim {
        let warden = &self.wardens[warden_index];
        let (ann_sig_a, ann_sig_b) = self.announce_sigs(seq);
        ClosingClaim {
            channel: self.channel,
            warden: warden.public(),
            seq,
            warden_sig: warden.sign(&close_plaintext(&self.channel, seq)),
            ann_sig_a,
            ann_sig_b,
            head: None,
        }
    }

    pub fn claim_with_head(&self, warden_index: usize, seq: u64, head: Hash32) -> ClosingClaim {
        let (sig_a, sig_b) = self.head_commit_sigs(&head, seq);
        ClosingClaim {
            head: Some(HeadAttachment { head, sig_a, sig_b }),
            ..self.claim(warden_index, seq)
        }
    }

    pub fn ack(&self, warden_index: usize, seq: u64) -> WardenAck {
        let warden = &self.wardens[warden_index];
        WardenAck {
            channel: self.channel,
            seq,
            warden: warden.public(),
            sig: warden.sign(&ack_plaintext(&self.channel, seq)),
        }
    }

    /// Proof of fraud: the warden acked `ack_seq` but claimed `claim_seq`.
    pub fn proof(&self, warden_index: usize, ack_seq: u64, claim_seq: u64) -> ProofOfFraud {
        let warden = &self.wardens[warden_index];
        ProofOfFraud {
            warden: warden.public(),
            ack: self.ack(warden_index, ack_seq),
            claim_seq,
            claim_sig: warden.sign(&close_plaintext(&self.channel, claim_seq)),
        }
    }

    /// Record claims for warden indices at the given seqs.
    pub fn record_claims(&mut self, entries: &[(usize, u64)]) {
        for (i, seq) in entries {
            let claim = self.claim(*i, *seq);
            self.ledger
                .record_closing_claim(&self.channel, claim)
                .unwrap();
        }
    }
}
