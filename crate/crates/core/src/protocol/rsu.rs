use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::messages::{FrequencyReport, OkResponse, ProtocolMessage, Query, RsuId, TreeUpdate};
use super::ProtocolError;
use crate::crypto::{Pseudonym, PseudonymPrivateKey, SharedScheme};
use crate::tree::{decode_tree, RevocationProof, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsuBehavior {
    #[default]
    Honest,
    /// Answers 'OK' for every query, revoked or not.
    Cheater,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResponse {
    Proof(RevocationProof),
    Ok(OkResponse),
}

impl QueryResponse {
    pub fn pseudonym(&self) -> Pseudonym {
        match self {
            QueryResponse::Proof(p) => p.leaf.pseudonym,
            QueryResponse::Ok(ok) => ok.pseudonym,
        }
    }

    pub fn into_message(self) -> ProtocolMessage {
        match self {
            QueryResponse::Proof(p) => ProtocolMessage::ProofResponse(p),
            QueryResponse::Ok(ok) => ProtocolMessage::OkResponse(ok),
        }
    }
}

/// Road-side unit answering revocation queries from its copy of the signed tree.
#[derive(Debug)]
pub struct RsuState {
    id: RsuId,
    behavior: RsuBehavior,
    signing_key: PseudonymPrivateKey,
    scheme: SharedScheme,
    ttp_master_public: Vec<u8>,
    snapshot: Snapshot,
    query_counters: BTreeMap<Pseudonym, u64>,
    proofs_since_report: u64,
}

impl RsuState {
    pub fn new(
        id: RsuId,
        behavior: RsuBehavior,
        signing_key: PseudonymPrivateKey,
        scheme: SharedScheme,
        ttp_master_public: Vec<u8>,
        initial: &TreeUpdate,
    ) -> Result<Self, ProtocolError> {
        let snapshot = Self::accept_snapshot(scheme.as_ref(), &ttp_master_public, initial)?;
        Ok(Self {
            id,
            behavior,
            signing_key,
            scheme,
            ttp_master_public,
            snapshot,
            query_counters: BTreeMap::new(),
            proofs_since_report: 0,
        })
    }

    fn accept_snapshot(
        scheme: &dyn crate::crypto::IbsScheme,
        mpu: &[u8],
        update: &TreeUpdate,
    ) -> Result<Snapshot, ProtocolError> {
        let snapshot = decode_tree(&update.snapshot)?;
        if !snapshot.signed_root.verify(scheme, mpu) {
            return Err(ProtocolError::BadRootSignature);
        }
        Ok(snapshot)
    }

    pub fn id(&self) -> RsuId {
        self.id
    }

    pub fn behavior(&self) -> RsuBehavior {
        self.behavior
    }

    pub fn epoch(&self) -> u64 {
        self.snapshot.epoch()
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn query_counters(&self) -> &BTreeMap<Pseudonym, u64> {
        &self.query_counters
    }

    pub fn proofs_since_report(&self) -> u64 {
        self.proofs_since_report
    }

    /// Install a newer TTP-signed snapshot. Query counters are kept until reported.
    pub fn apply_update(&mut self, update: &TreeUpdate) -> Result<(), ProtocolError> {
        let snapshot =
            Self::accept_snapshot(self.scheme.as_ref(), &self.ttp_master_public, update)?;
        if snapshot.epoch() <= self.epoch() {
            return Err(ProtocolError::StaleUpdate {
                current: self.epoch(),
                got: snapshot.epoch(),
            });
        }
        self.snapshot = snapshot;
        Ok(())
    }

    pub fn handle_query(&mut self, query: &Query) -> QueryResponse {
        let p = query.pseudonym;
        if self.behavior == RsuBehavior::Honest {
            if let Some(proof) = self.snapshot.prove(&p) {
                *self.query_counters.entry(p).or_insert(0) += 1;
                self.proofs_since_report += 1;
                return QueryResponse::Proof(proof);
            }
        }
        QueryResponse::Ok(self.sign_ok(p))
    }

    fn sign_ok(&self, pseudonym: Pseudonym) -> OkResponse {
        let epoch = self.epoch();
        let msg = OkResponse::signing_message(&pseudonym, epoch, self.id);
        OkResponse {
            pseudonym,
            epoch,
            rsu_id: self.id,
            rsu_signature: self.scheme.sign(&self.signing_key, &msg),
        }
    }

    /// Hand over this epoch's counters and start afresh.
    pub fn report_frequencies(&mut self, epoch: u64) -> Result<FrequencyReport, ProtocolError> {
        if epoch != self.epoch() {
            return Err(ProtocolError::EpochMismatch {
                expected: self.epoch(),
                got: epoch,
            });
        }
        self.proofs_since_report = 0;
        Ok(FrequencyReport {
            epoch,
            counters: std::mem::take(&mut self.query_counters),
        })
    }
}
