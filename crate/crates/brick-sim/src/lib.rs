//! Asynchronous payment channels backed by a warden committee, simulated
//! end to end.
//!
//! The crate models the full lifecycle of a committee-backed payment
//! channel: off-chain state updates acknowledged through consistent
//! broadcast, an on-chain contract that funds, opens, and adjudicates the
//! channel, proof-of-fraud slashing of equivocating wardens, and the
//! incentive mechanisms (update fee, closing fee, collateral) that make
//! honest behaviour the dominant strategy for rational participants.
//!
//! Everything runs inside a deterministic discrete-event simulator
//! ([`netsim`]) so that safety, liveness, and incentive claims can be
//! exercised as seeded, replayable scenarios ([`scenario`]). A minimal
//! synchronous dispute-window channel ([`baseline`]) is included for
//! side-by-side comparison under censorship adversaries, and the
//! hash-chained variant ([`brick_plus`]) adds auditability on top of the
//! base protocol.

pub mod baseline;
pub mod brick_plus;
pub mod channel;
pub mod incentives;
pub mod ledger;
pub mod netsim;
pub mod party;
pub mod primitives;
pub mod scenario;
pub mod warden;

#[cfg(test)]
pub(crate) mod testutil;
