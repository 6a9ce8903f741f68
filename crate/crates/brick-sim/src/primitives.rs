//! Hashing, signatures, and canonical byte encodings shared by every other
//! module.
//!
//! All values are immutable after construction and all operations are pure,
//! so they can be shared freely between simulation actors. Signed plaintexts
//! begin with an ASCII domain-separation tag; integers are encoded as 8-byte
//! big-endian values and digests/keys as their raw 32 bytes.

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use std::fmt;

pub const DIGEST_LEN: usize = 32;
pub const SEED_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;

/// 32-byte hash value. Equality is byte equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hash32(pub [u8; DIGEST_LEN]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0u8; DIGEST_LEN]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({}..)", &self.to_hex()[..8])
    }
}

/// SHA-256 of `data`.
pub fn hash(data: &[u8]) -> Hash32 {
    let mut h = Sha256::new();
    h.update(data);
    Hash32(h.finalize().into())
}

/// Ed25519 verification key, stored as its raw 32 bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Committee commitments put `H(pk)` on-chain rather than the key itself.
    pub fn key_hash(&self) -> Hash32 {
        hash(&self.0)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}..)", &self.to_hex()[..8])
    }
}

/// Detached Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature(#[serde(with = "serde_bytes64")] pub [u8; SIGNATURE_LEN]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", &hex::encode(&self.0[..4]))
    }
}

mod serde_bytes64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 64], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected 64 bytes"))
    }
}

/// Seed-derived signing key plus its verification key.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
    public: PublicKey,
}

impl KeyPair {
    /// Deterministic: the same seed always yields the same key pair.
    pub fn from_seed(seed: [u8; SEED_LEN]) -> KeyPair {
        let signing = SigningKey::from_bytes(&seed);
        let public = PublicKey(signing.verifying_key().to_bytes());
        KeyPair { signing, public }
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyPair({}..)", &self.public.to_hex()[..8])
    }
}

/// True iff `sig` was produced over exactly `message` by the key paired
/// with `pk`. Malformed keys or signatures simply fail verification.
pub fn verify(pk: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    let Ok(vk) = VerifyingKey::from_bytes(&pk.0) else {
        return false;
    };
    let sig = ed25519_dalek::Signature::from_bytes(&sig.0);
    vk.verify(message, &sig).is_ok()
}

/// Canonical byte writer: ASCII tag first, then fields in declared order.
#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn tagged(tag: &str) -> ByteWriter {
        let mut w = ByteWriter { buf: Vec::new() };
        w.buf.extend_from_slice(tag.as_bytes());
        w
    }

    pub fn put_u64(&mut self, value: u64) -> &mut Self {
        self.buf.extend_from_slice(&value.to_be_bytes());
        self
    }

    pub fn put_bytes32(&mut self, value: &[u8; 32]) -> &mut Self {
        self.buf.extend_from_slice(value);
        self
    }

    pub fn put_slice(&mut self, value: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(value);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected tag")]
    BadTag,
    #[error("message truncated")]
    Truncated,
    #[error("trailing bytes after message")]
    TrailingBytes,
}

/// Canonical byte reader matching [`ByteWriter`].
#[derive(Debug)]
pub struct ByteReader<'a> {
    rest: &'a [u8],
}

impl<'a> ByteReader<'a> {
    pub fn tagged(data: &'a [u8], tag: &str) -> Result<ByteReader<'a>, CodecError> {
        let tag = tag.as_bytes();
        if data.len() < tag.len() || &data[..tag.len()] != tag {
            return Err(CodecError::BadTag);
        }
        Ok(ByteReader {
            rest: &data[tag.len()..],
        })
    }

    pub fn get_u64(&mut self) -> Result<u64, CodecError> {
        if self.rest.len() < 8 {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.rest.split_at(8);
        self.rest = tail;
        Ok(u64::from_be_bytes(head.try_into().unwrap()))
    }

    pub fn get_bytes32(&mut self) -> Result<[u8; 32], CodecError> {
        if self.rest.len() < 32 {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.rest.split_at(32);
        self.rest = tail;
        Ok(head.try_into().unwrap())
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seed(byte: u8) -> [u8; 32] {
        [byte; 32]
    }

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash(b"abc"), hash(b"abc"));
        assert_eq!(hash(b""), hash(b""));
    }

    #[test]
    fn hash_distinguishes_inputs() {
        assert_ne!(hash(b""), hash(b"a"));
        assert_ne!(hash(b"ab"), hash(b"ba"));
    }

    #[test]
    fn keygen_is_deterministic() {
        assert_eq!(
            KeyPair::from_seed(seed(7)).public(),
            KeyPair::from_seed(seed(7)).public()
        );
        assert_ne!(
            KeyPair::from_seed(seed(1)).public(),
            KeyPair::from_seed(seed(2)).public()
        );
    }

    #[test]
    fn distinct_seeds_give_distinct_keys() {
        // A scenario uses 10+2n seeds; scan a superset for collisions.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..64u8 {
            assert!(seen.insert(KeyPair::from_seed(seed(i)).public()));
        }
    }

    #[test]
    fn sign_verify_roundtrip() {
        let kp = KeyPair::from_seed(seed(3));
        let other = KeyPair::from_seed(seed(4));
        let sig = kp.sign(b"message");
        assert!(verify(&kp.public(), b"message", &sig));
        assert!(!verify(&kp.public(), b"messagf", &sig));
        assert!(!verify(&other.public(), b"message", &sig));
    }

    #[test]
    fn writer_reader_roundtrip() {
        let mut w = ByteWriter::tagged("T/x");
        w.put_u64(42).put_bytes32(&[9u8; 32]);
        let bytes = w.finish();
        let mut r = ByteReader::tagged(&bytes, "T/x").unwrap();
        assert_eq!(r.get_u64().unwrap(), 42);
        assert_eq!(r.get_bytes32().unwrap(), [9u8; 32]);
        r.finish().unwrap();
        assert_eq!(
            ByteReader::tagged(&bytes, "T/y").unwrap_err(),
            CodecError::BadTag
        );
    }

    proptest! {
        #[test]
        fn signature_rejects_any_bitflip(msg in proptest::collection::vec(any::<u8>(), 1..64),
                                         flip_bit in 0usize..512,
                                         flip_msg: bool) {
            let kp = KeyPair::from_seed(seed(11));
            let sig = kp.sign(&msg);
            if flip_msg {
                let mut m = msg.clone();
                let bit = flip_bit % (m.len() * 8);
                m[bit / 8] ^= 1 << (bit % 8);
                prop_assert!(!verify(&kp.public(), &m, &sig));
            } else {
                let mut s = sig.0;
                s[flip_bit % (64 * 8) / 8] ^= 1 << (flip_bit % 8);
                prop_assert!(!verify(&kp.public(), &msg, &Signature(s)));
            }
        }

        #[test]
        fn u64_roundtrip(values in proptest::collection::vec(any::<u64>(), 0..8)) {
            let mut w = ByteWriter::tagged("T/seq");
            for v in &values { w.put_u64(*v); }
            let bytes = w.finish();
            let mut r = ByteReader::tagged(&bytes, "T/seq").unwrap();
            for v in &values {
                prop_assert_eq!(r.get_u64().unwrap(), *v);
            }
            r.finish().unwrap();
        }
    }
}
