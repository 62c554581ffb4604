//! Protocol messages and their canonical binary encoding: a one-byte variant tag,
//! then fields in declaration order, big-endian fixed-width integers, and
//! length-prefixed (u32 BE) byte strings.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::{IbsScheme, IbsSignature, Pseudonym};
use crate::tree::{decode_proof, encode_proof, RevocationProof};
use crate::wire::{DecodeError, Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RsuId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObuId(pub u32);

impl fmt::Display for RsuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rsu-{}", self.0)
    }
}

impl fmt::Display for ObuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obu-{}", self.0)
    }
}

impl RsuId {
    /// Identity under which this RSU signs 'OK' answers.
    pub fn identity(self) -> Pseudonym {
        Pseudonym::for_rsu(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub pseudonym: Pseudonym,
}

/// Signed statement from an RSU that `pseudonym` was not revoked at `epoch`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OkResponse {
    pub pseudonym: Pseudonym,
    pub epoch: u64,
    pub rsu_id: RsuId,
    pub rsu_signature: IbsSignature,
}

impl OkResponse {
    /// `pseudonym ‖ epoch ‖ rsu_id`, big-endian.
    pub fn signing_message(pseudonym: &Pseudonym, epoch: u64, rsu_id: RsuId) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(pseudonym.as_bytes()).u64(epoch).u32(rsu_id.0);
        w.finish()
    }

    pub fn verify(&self, scheme: &dyn IbsScheme, ttp_master_public: &[u8]) -> bool {
        let msg = Self::signing_message(&self.pseudonym, self.epoch, self.rsu_id);
        scheme.verify(
            ttp_master_public,
            &self.rsu_id.identity(),
            &msg,
            &self.rsu_signature,
        )
    }
}

/// An 'OK' paired with a revocation proof that contradicts it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Impeachment {
    pub ok: OkResponse,
    pub contradiction: RevocationProof,
}

/// Full canonical tree snapshot (`HCRT` bytes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeUpdate {
    pub snapshot: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyReport {
    pub epoch: u64,
    pub counters: BTreeMap<Pseudonym, u64>,
}

impl FrequencyReport {
    pub fn total(&self) -> u64 {
        self.counters.values().sum()
    }
}

/// TTP broadcast announcing that an RSU's key has been revoked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsuRevocationNotice {
    pub rsu_id: RsuId,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    Query(Query),
    ProofResponse(RevocationProof),
    OkResponse(OkResponse),
    Impeachment(Impeachment),
    TreeUpdate(TreeUpdate),
    FrequencyReport(FrequencyReport),
    RsuRevoked(RsuRevocationNotice),
}

pub mod tag {
    pub const QUERY: u8 = 0x01;
    pub const PROOF_RESPONSE: u8 = 0x02;
    pub const OK_RESPONSE: u8 = 0x03;
    pub const IMPEACHMENT: u8 = 0x04;
    pub const TREE_UPDATE: u8 = 0x05;
    pub const FREQUENCY_REPORT: u8 = 0x06;
    pub const RSU_REVOKED: u8 = 0x07;
}

fn write_ok(w: &mut Writer, ok: &OkResponse) {
    w.bytes(ok.pseudonym.as_bytes())
        .u64(ok.epoch)
        .u32(ok.rsu_id.0)
        .len_prefixed(&ok.rsu_signature.0);
}

fn read_ok(r: &mut Reader<'_>) -> Result<OkResponse, DecodeError> {
    Ok(OkResponse {
        pseudonym: Pseudonym::from_bytes(r.array("ok pseudonym")?),
        epoch: r.u64("ok epoch")?,
        rsu_id: RsuId(r.u32("ok rsu id")?),
        rsu_signature: IbsSignature(r.len_prefixed("ok signature")?.to_vec()),
    })
}

fn read_proof(r: &mut Reader<'_>) -> Result<RevocationProof, DecodeError> {
    decode_proof(r.len_prefixed("proof")?)
}

impl ProtocolMessage {
    pub fn tag(&self) -> u8 {
        match self {
            ProtocolMessage::Query(_) => tag::QUERY,
            ProtocolMessage::ProofResponse(_) => tag::PROOF_RESPONSE,
            ProtocolMessage::OkResponse(_) => tag::OK_RESPONSE,
            ProtocolMessage::Impeachment(_) => tag::IMPEACHMENT,
            ProtocolMessage::TreeUpdate(_) => tag::TREE_UPDATE,
            ProtocolMessage::FrequencyReport(_) => tag::FREQUENCY_REPORT,
            ProtocolMessage::RsuRevoked(_) => tag::RSU_REVOKED,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.tag());
        match self {
            ProtocolMessage::Query(q) => {
                w.bytes(q.pseudonym.as_bytes());
            }
            ProtocolMessage::ProofResponse(p) => {
                w.len_prefixed(&encode_proof(p));
            }
            ProtocolMessage::OkResponse(ok) => write_ok(&mut w, ok),
            ProtocolMessage::Impeachment(imp) => {
                write_ok(&mut w, &imp.ok);
                w.len_prefixed(&encode_proof(&imp.contradiction));
            }
            ProtocolMessage::TreeUpdate(u) => {
                w.len_prefixed(&u.snapshot);
            }
            ProtocolMessage::FrequencyReport(rep) => {
                w.u64(rep.epoch).u32(rep.counters.len() as u32);
                for (p, c) in &rep.counters {
                    w.bytes(p.as_bytes()).u64(*c);
                }
            }
            ProtocolMessage::RsuRevoked(n) => {
                w.u32(n.rsu_id.0).u64(n.epoch);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let msg = match r.u8("tag")? {
            tag::QUERY => ProtocolMessage::Query(Query {
                pseudonym: Pseudonym::from_bytes(r.array("pseudonym")?),
            }),
            tag::PROOF_RESPONSE => ProtocolMessage::ProofResponse(read_proof(&mut r)?),
            tag::OK_RESPONSE => ProtocolMessage::OkResponse(read_ok(&mut r)?),
            tag::IMPEACHMENT => {
                let ok = read_ok(&mut r)?;
                let contradiction = read_proof(&mut r)?;
                ProtocolMessage::Impeachment(Impeachment { ok, contradiction })
            }
            tag::TREE_UPDATE => ProtocolMessage::TreeUpdate(TreeUpdate {
                snapshot: r.len_prefixed("snapshot")?.to_vec(),
            }),
            tag::FREQUENCY_REPORT => {
                let epoch = r.u64("report epoch")?;
                let n = r.u32("report entries")? as usize;
                if n.saturating_mul(40) > r.remaining() {
                    return Err(DecodeError::Truncated("report entries"));
                }
                let mut counters = BTreeMap::new();
                let mut prev: Option<Pseudonym> = None;
                for _ in 0..n {
                    let p = Pseudonym::from_bytes(r.array("report pseudonym")?);
                    if prev.is_some_and(|q| q >= p) {
                        return Err(DecodeError::NonCanonical(
                            "report entries must be strictly increasing",
                        ));
                    }
                    prev = Some(p);
                    let c = r.u64("report count")?;
                    if c == 0 {
                        return Err(DecodeError::NonCanonical("zero counts are omitted"));
                    }
                    counters.insert(p, c);
                }
                ProtocolMessage::FrequencyReport(FrequencyReport { epoch, counters })
            }
            tag::RSU_REVOKED => ProtocolMessage::RsuRevoked(RsuRevocationNotice {
                rsu_id: RsuId(r.u32("rsu id")?),
                epoch: r.u64("notice epoch")?,
            }),
            other => return Err(DecodeError::UnknownTag(other)),
        };
        r.finish()?;
        Ok(msg)
    }
}
