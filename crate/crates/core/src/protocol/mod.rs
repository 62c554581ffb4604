//! TTP, RSU and OBU actors exchanging revocation queries, proofs, signed 'OK'
//! answers, frequency reports, tree updates and impeachments.
//!
//! Actors are plain single-threaded state machines; they only interact through the
//! values in [`messages`]. Time is the discrete tree epoch.

pub mod messages;
mod obu;
mod rsu;
mod ttp;

use thiserror::Error;

pub use messages::{
    FrequencyReport, Impeachment, ObuId, OkResponse, ProtocolMessage, Query, RsuId,
    RsuRevocationNotice, TreeUpdate,
};
pub use obu::{Decision, ObuState, ObuStats, OkDiscardReason, ResponseOutcome};
pub use rsu::{QueryResponse, RsuBehavior, RsuState};
pub use ttp::{DismissReason, ImpeachmentOutcome, RevokeOutcome, RsuRecord, RsuStatus, TtpState};

use crate::crypto::Pseudonym;
use crate::tree::TreeError;
use crate::wire::DecodeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("unknown OBU {0}")]
    UnknownObu(ObuId),
    #[error("OBU {0} already registered")]
    DuplicateObu(ObuId),
    #[error("RSU {0} already registered")]
    DuplicateRsu(RsuId),
    #[error("pseudonym {0} is reserved or already assigned")]
    PseudonymTaken(Pseudonym),
    #[error("epoch mismatch: expected {expected}, got {got}")]
    EpochMismatch { expected: u64, got: u64 },
    #[error("tree update for epoch {got} is not newer than current epoch {current}")]
    StaleUpdate { current: u64, got: u64 },
    #[error("tree update root signature does not verify")]
    BadRootSignature,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
