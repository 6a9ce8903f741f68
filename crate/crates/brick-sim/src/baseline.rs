//! Minimal synchronous dispute-window channel, used only to contrast the
//! committee-backed design against the classic timeout construction under
//! the same ledger adversary.
//!
//! Only the dispute skeleton is modeled: a close at state `S_j` stands
//! unless a dispute with a fresher state lands on-chain within the dispute
//! window; a successful dispute awards the whole balance to the disputer.

use crate::channel::PartyRole;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum BaselineError {
    #[error("channel is not open")]
    NotOpen,
    #[error("no close is pending")]
    NoPendingClose,
    #[error("dispute state is not fresher than the closing state")]
    StaleDispute,
    #[error("dispute window expired; the close already settled")]
    LateDispute,
    #[error("unknown state")]
    UnknownState,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BaselineState {
    pub seq: u64,
    pub balance_a: u64,
    pub balance_b: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum BaselineStatus {
    Open,
    /// A close at `seq` was included at `close_height`; it settles
    /// unchallenged once the dispute window passes.
    Closing { seq: u64, close_height: u64 },
    Settled { seq: u64, disputed: bool },
}

/// The on-chain side of the timeout channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeoutChannel {
    pub states: Vec<BaselineState>,
    pub dispute_window: u64,
    pub status: BaselineStatus,
    /// Payouts (party_a, party_b) once settled.
    pub payouts: Option<(u64, u64)>,
}

impl TimeoutChannel {
    pub fn new(states: Vec<BaselineState>, dispute_window: u64) -> TimeoutChannel {
        TimeoutChannel {
            states,
            dispute_window,
            status: BaselineStatus::Open,
            payouts: None,
        }
    }

    pub fn total(&self) -> u64 {
        self.states
            .first()
            .map(|s| s.balance_a + s.balance_b)
            .unwrap_or(0)
    }

    fn state_at(&self, seq: u64) -> Result<BaselineState, BaselineError> {
        self.states
            .iter()
            .copied()
            .find(|s| s.seq == seq)
            .ok_or(BaselineError::UnknownState)
    }

    /// Party publishes a (possibly revoked) state to close the channel.
    pub fn close_at(&mut self, seq: u64, height: u64) -> Result<(), BaselineError> {
        if self.status != BaselineStatus::Open {
            return Err(BaselineError::NotOpen);
        }
        self.state_at(seq)?;
        self.status = BaselineStatus::Closing {
            seq,
            close_height: height,
        };
        Ok(())
    }

    /// Counterparty (or its watchtower) challenges with a fresher state.
    /// Succeeds only while the dispute window is still open; the disputer
    /// takes the whole balance.
    pub fn dispute(
        &mut self,
        disputer: PartyRole,
        seq: u64,
        height: u64,
    ) -> Result<(), BaselineError> {
        let BaselineStatus::Closing { seq: closing_seq, close_height } = self.status else {
            return Err(match self.status {
                BaselineStatus::Settled { .. } => BaselineError::LateDispute,
                _ => BaselineError::NoPendingClose,
            });
        };
        if seq <= closing_seq {
            return Err(BaselineError::StaleDispute);
        }
        self.state_at(seq)?;
        if height > close_height + self.dispute_window {
            return Err(BaselineError::LateDispute);
        }
        let v = self.total();
        self.payouts = Some(match disputer {
            PartyRole::A => (v, 0),
            PartyRole::B => (0, v),
        });
        self.status = BaselineStatus::Settled {
            seq,
            disputed: true,
        };
        Ok(())
    }

    /// Called at each block boundary: an unchallenged close settles at its
    /// claimed state once the window passes.
    pub fn on_block(&mut self, height: u64) {
        if let BaselineStatus::Closing { seq, close_height } = self.status {
            if height > close_height + self.dispute_window {
                let state = self.state_at(seq).expect("closing state exists");
                self.payouts = Some((state.balance_a, state.balance_b));
                self.status = BaselineStatus::Settled {
                    seq,
                    disputed: false,
                };
            }
        }
    }
}
