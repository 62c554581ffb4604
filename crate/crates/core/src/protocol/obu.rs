use std::collections::{BTreeMap, BTreeSet};

use super::messages::{Impeachment, OkResponse, RsuId, RsuRevocationNotice};
use super::rsu::QueryResponse;
use crate::crypto::{Pseudonym, PseudonymPrivateKey, SharedScheme};
use crate::tree::{verify_proof, ProofRejection, RevocationProof};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Accept,
    MustQuery,
    /// No RSU in range; the OBU goes ahead without evidence.
    AcceptProvisionally,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OkDiscardReason {
    BadSignature,
    RevokedRsu,
    AlreadyRevoked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseOutcome {
    /// Proof accepted; the pseudonym is now cached as revoked.
    Revoked {
        impeachments: Vec<Impeachment>,
    },
    ProofRejected(ProofRejection),
    /// 'OK' recorded; trusted only momentarily until the threshold is met.
    Pending {
        distinct_rsus: usize,
    },
    Reliable,
    OkDiscarded(OkDiscardReason),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ObuStats {
    pub invalid_ok_discarded: u64,
    pub proofs_rejected: u64,
}

/// On-board unit: keeps a revoked cache and a reliable cache (always disjoint) and
/// collects 'OK' answers until enough distinct RSUs agree or a proof contradicts them.
#[derive(Debug)]
pub struct ObuState {
    id: super::ObuId,
    keys: BTreeMap<Pseudonym, PseudonymPrivateKey>,
    revoked_cache: BTreeSet<Pseudonym>,
    /// Pseudonym → epoch of the newest supporting 'OK'.
    reliable_cache: BTreeMap<Pseudonym, u64>,
    pending: BTreeMap<Pseudonym, Vec<OkResponse>>,
    trust_threshold: usize,
    scheme: SharedScheme,
    ttp_master_public: Vec<u8>,
    max_root_age: u64,
    revoked_rsus: BTreeSet<RsuId>,
    stats: ObuStats,
}

impl ObuState {
    pub fn new(
        id: super::ObuId,
        keys: Vec<PseudonymPrivateKey>,
        trust_threshold: usize,
        scheme: SharedScheme,
        ttp_master_public: Vec<u8>,
        max_root_age: u64,
    ) -> Self {
        assert!(trust_threshold >= 1, "trust threshold must be at least 1");
        Self {
            id,
            keys: keys.into_iter().map(|k| (k.pseudonym, k)).collect(),
            revoked_cache: BTreeSet::new(),
            reliable_cache: BTreeMap::new(),
            pending: BTreeMap::new(),
            trust_threshold,
            scheme,
            ttp_master_public,
            max_root_age,
            revoked_rsus: BTreeSet::new(),
            stats: ObuStats::default(),
        }
    }

    pub fn id(&self) -> super::ObuId {
        self.id
    }

    pub fn pseudonyms(&self) -> impl Iterator<Item = &Pseudonym> {
        self.keys.keys()
    }

    pub fn key(&self, p: &Pseudonym) -> Option<&PseudonymPrivateKey> {
        self.keys.get(p)
    }

    pub fn revoked_cache(&self) -> &BTreeSet<Pseudonym> {
        &self.revoked_cache
    }

    pub fn reliable_cache(&self) -> &BTreeMap<Pseudonym, u64> {
        &self.reliable_cache
    }

    pub fn pending(&self) -> &BTreeMap<Pseudonym, Vec<OkResponse>> {
        &self.pending
    }

    pub fn stats(&self) -> ObuStats {
        self.stats
    }

    pub fn caches_disjoint(&self) -> bool {
        self.reliable_cache
            .keys()
            .all(|p| !self.revoked_cache.contains(p))
    }

    /// RSUs that already vouched for `p` in the pending set.
    pub fn pending_rsus(&self, p: &Pseudonym) -> BTreeSet<RsuId> {
        self.pending
            .get(p)
            .map(|oks| oks.iter().map(|o| o.rsu_id).collect())
            .unwrap_or_default()
    }

    pub fn check(&self, p: &Pseudonym, rsu_reachable: bool) -> Decision {
        if self.revoked_cache.contains(p) {
            Decision::Reject
        } else if self.reliable_cache.contains_key(p) {
            Decision::Accept
        } else if rsu_reachable {
            Decision::MustQuery
        } else {
            Decision::AcceptProvisionally
        }
    }

    pub fn process_response(
        &mut self,
        response: &QueryResponse,
        current_epoch: u64,
    ) -> ResponseOutcome {
        match response {
            QueryResponse::Proof(proof) => self.process_proof(proof, current_epoch),
            QueryResponse::Ok(ok) => self.process_ok(ok),
        }
    }

    fn process_proof(&mut self, proof: &RevocationProof, current_epoch: u64) -> ResponseOutcome {
        let p = proof.leaf.pseudonym;
        if let Err(e) = verify_proof(
            self.scheme.as_ref(),
            proof,
            &p,
            &self.ttp_master_public,
            current_epoch,
            self.max_root_age,
        ) {
            self.stats.proofs_rejected += 1;
            return ResponseOutcome::ProofRejected(e);
        }
        let revocation_epoch = proof.leaf.revocation_epoch;
        let root_epoch = proof.signed_root.epoch;
        let impeachments = self
            .pending
            .remove(&p)
            .unwrap_or_default()
            .into_iter()
            .filter(|ok| revocation_epoch <= ok.epoch && ok.epoch <= root_epoch)
            .map(|ok| Impeachment {
                ok,
                contradiction: proof.clone(),
            })
            .collect();
        self.reliable_cache.remove(&p);
        self.revoked_cache.insert(p);
        ResponseOutcome::Revoked { impeachments }
    }

    fn process_ok(&mut self, ok: &OkResponse) -> ResponseOutcome {
        if self.revoked_rsus.contains(&ok.rsu_id) {
            return ResponseOutcome::OkDiscarded(OkDiscardReason::RevokedRsu);
        }
        if !ok.verify(self.scheme.as_ref(), &self.ttp_master_public) {
            self.stats.invalid_ok_discarded += 1;
            return ResponseOutcome::OkDiscarded(OkDiscardReason::BadSignature);
        }
        if self.revoked_cache.contains(&ok.pseudonym) {
            return ResponseOutcome::OkDiscarded(OkDiscardReason::AlreadyRevoked);
        }
        let oks = self.pending.entry(ok.pseudonym).or_default();
        oks.push(ok.clone());
        let distinct: BTreeSet<RsuId> = oks.iter().map(|o| o.rsu_id).collect();
        if distinct.len() >= self.trust_threshold {
            let newest = oks.iter().map(|o| o.epoch).max().unwrap_or(ok.epoch);
            self.pending.remove(&ok.pseudonym);
            self.reliable_cache.insert(ok.pseudonym, newest);
            ResponseOutcome::Reliable
        } else {
            ResponseOutcome::Pending {
                distinct_rsus: distinct.len(),
            }
        }
    }

    /// Drop reliable entries whose newest supporting 'OK' predates `epoch`.
    pub fn advance_epoch(&mut self, epoch: u64) {
        self.reliable_cache.retain(|_, ok_epoch| *ok_epoch >= epoch);
    }

    pub fn learn_rsu_revoked(&mut self, notice: &RsuRevocationNotice) {
        self.revoked_rsus.insert(notice.rsu_id);
        for oks in self.pending.values_mut() {
            oks.retain(|o| o.rsu_id != notice.rsu_id);
        }
        self.pending.retain(|_, oks| !oks.is_empty());
    }
}
