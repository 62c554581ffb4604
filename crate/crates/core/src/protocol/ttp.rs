use std::collections::{BTreeMap, BTreeSet};

use super::messages::{
    FrequencyReport, Impeachment, ObuId, RsuId, RsuRevocationNotice, TreeUpdate,
};
use super::ProtocolError;
use crate::crypto::{MasterKeys, Pseudonym, PseudonymPrivateKey, SharedScheme};
use crate::tree::{
    build_tree, update_tree, verify_proof, ProofRejection, RevocationSet, RevokedLeaf, Snapshot,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsuStatus {
    Active,
    Revoked,
}

#[derive(Debug, Clone)]
pub struct RsuRecord {
    pub identity: Pseudonym,
    pub status: RsuStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevokeOutcome {
    Revoked { update: TreeUpdate, added: usize },
    AlreadyRevoked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DismissReason {
    UnknownRsu(RsuId),
    BadOkSignature,
    InvalidProof(ProofRejection),
    NoContradiction {
        ok_epoch: u64,
        revocation_epoch: u64,
        root_epoch: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImpeachmentOutcome {
    RsuRevoked(RsuRevocationNotice),
    Dismissed(DismissReason),
}

/// The trusted third party: key generator, tree signer, and arbiter of impeachments.
///
/// Every change to the revoked set opens a new epoch. Newly revoked pseudonyms are
/// stamped with that epoch, so an honest 'OK' (which always names an earlier epoch's
/// tree) can never satisfy the contradiction test.
#[derive(Debug)]
pub struct TtpState {
    scheme: SharedScheme,
    master: MasterKeys,
    k: usize,
    epoch: u64,
    ewma_alpha: f64,
    frequency_prior: u64,
    obu_registry: BTreeMap<ObuId, Vec<Pseudonym>>,
    owner: BTreeMap<Pseudonym, ObuId>,
    revoked_obus: BTreeSet<ObuId>,
    rsu_registry: BTreeMap<RsuId, RsuRecord>,
    snapshot: Snapshot,
    pending_reports: BTreeMap<Pseudonym, u64>,
    reports_received: usize,
}

impl TtpState {
    /// `ewma_alpha` in (0, 1] weighs the newest reports; 1 means no smoothing.
    pub fn new(
        scheme: SharedScheme,
        seed: &[u8; 32],
        k: usize,
        ewma_alpha: f64,
    ) -> Result<Self, ProtocolError> {
        if !(2..=255).contains(&k) {
            return Err(ProtocolError::InvalidConfig(format!(
                "k = {k} out of range 2..=255"
            )));
        }
        if !(ewma_alpha > 0.0 && ewma_alpha <= 1.0) {
            return Err(ProtocolError::InvalidConfig(format!(
                "ewma alpha {ewma_alpha} not in (0, 1]"
            )));
        }
        let master = scheme.setup(seed);
        let snapshot = Snapshot::empty(scheme.as_ref(), &master, 0, k as u8);
        Ok(Self {
            scheme,
            master,
            k,
            epoch: 0,
            ewma_alpha,
            frequency_prior: 0,
            obu_registry: BTreeMap::new(),
            owner: BTreeMap::new(),
            revoked_obus: BTreeSet::new(),
            rsu_registry: BTreeMap::new(),
            snapshot,
            pending_reports: BTreeMap::new(),
            reports_received: 0,
        })
    }

    /// Pseudo-count added to every leaf's reported queries (and given to fresh leaves),
    /// so rarely queried pseudonyms are not pushed arbitrarily deep by one quiet epoch.
    pub fn with_frequency_prior(mut self, prior: u64) -> Self {
        self.frequency_prior = prior;
        self
    }

    pub fn master_public(&self) -> &[u8] {
        &self.master.master_public
    }

    pub fn scheme(&self) -> &SharedScheme {
        &self.scheme
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn current_update(&self) -> TreeUpdate {
        TreeUpdate {
            snapshot: self.snapshot.encode(),
        }
    }

    pub fn rsu_record(&self, id: RsuId) -> Option<&RsuRecord> {
        self.rsu_registry.get(&id)
    }

    pub fn active_rsus(&self) -> impl Iterator<Item = RsuId> + '_ {
        self.rsu_registry
            .iter()
            .filter(|(_, r)| r.status == RsuStatus::Active)
            .map(|(id, _)| *id)
    }

    pub fn obu_pseudonyms(&self, id: ObuId) -> Option<&[Pseudonym]> {
        self.obu_registry.get(&id).map(Vec::as_slice)
    }

    pub fn is_obu_revoked(&self, id: ObuId) -> bool {
        self.revoked_obus.contains(&id)
    }

    /// Register a vehicle and issue private keys for its pseudonyms.
    pub fn register_obu(
        &mut self,
        id: ObuId,
        pseudonyms: Vec<Pseudonym>,
    ) -> Result<Vec<PseudonymPrivateKey>, ProtocolError> {
        if self.obu_registry.contains_key(&id) {
            return Err(ProtocolError::DuplicateObu(id));
        }
        for p in &pseudonyms {
            if *p == Pseudonym::TTP || self.owner.contains_key(p) {
                return Err(ProtocolError::PseudonymTaken(*p));
            }
        }
        let keys = pseudonyms
            .iter()
            .map(|p| self.scheme.extract(&self.master, p))
            .collect();
        for p in &pseudonyms {
            self.owner.insert(*p, id);
        }
        self.obu_registry.insert(id, pseudonyms);
        Ok(keys)
    }

    /// Register a road-side unit and issue its 'OK'-signing key.
    pub fn register_rsu(&mut self, id: RsuId) -> Result<PseudonymPrivateKey, ProtocolError> {
        if self.rsu_registry.contains_key(&id) {
            return Err(ProtocolError::DuplicateRsu(id));
        }
        let identity = id.identity();
        self.rsu_registry.insert(
            id,
            RsuRecord {
                identity,
                status: RsuStatus::Active,
            },
        );
        Ok(self.scheme.extract(&self.master, &identity))
    }

    pub fn revoke_obu(&mut self, id: ObuId) -> Result<RevokeOutcome, ProtocolError> {
        self.revoke_obus(&[id])
    }

    /// Revoke every pseudonym of each listed OBU in one new epoch.
    pub fn revoke_obus(&mut self, ids: &[ObuId]) -> Result<RevokeOutcome, ProtocolError> {
        for id in ids {
            if !self.obu_registry.contains_key(id) {
                return Err(ProtocolError::UnknownObu(*id));
            }
        }
        let fresh: BTreeSet<ObuId> = ids
            .iter()
            .copied()
            .filter(|id| !self.revoked_obus.contains(id))
            .collect();
        if fresh.is_empty() {
            return Ok(RevokeOutcome::AlreadyRevoked);
        }
        let new_epoch = self.epoch + 1;
        let add: Vec<RevokedLeaf> = fresh
            .iter()
            .flat_map(|id| &self.obu_registry[id])
            .filter(|p| !self.snapshot.set.contains(p))
            .map(|p| RevokedLeaf::new(*p, new_epoch, self.frequency_prior))
            .collect();
        let added = add.len();
        self.rebuild(add, BTreeSet::new(), BTreeMap::new(), new_epoch)?;
        self.revoked_obus.extend(fresh);
        Ok(RevokeOutcome::Revoked {
            update: self.current_update(),
            added,
        })
    }

    /// Fold an RSU's per-epoch query counts into the accumulator for the next update.
    pub fn receive_report(&mut self, report: &FrequencyReport) -> Result<(), ProtocolError> {
        if report.epoch > self.epoch {
            return Err(ProtocolError::EpochMismatch {
                expected: self.epoch,
                got: report.epoch,
            });
        }
        for (p, c) in &report.counters {
            let slot = self.pending_reports.entry(*p).or_insert(0);
            *slot = slot.saturating_add(*c);
        }
        self.reports_received += 1;
        Ok(())
    }

    pub fn pending_reports(&self) -> &BTreeMap<Pseudonym, u64> {
        &self.pending_reports
    }

    /// Periodic update: drop expired pseudonyms, reweight by the reported query counts
    /// (missing reports count as zero), advance the epoch and re-sign.
    pub fn epoch_update(
        &mut self,
        expired: &BTreeSet<Pseudonym>,
    ) -> Result<TreeUpdate, ProtocolError> {
        let new_epoch = self.epoch + 1;
        let reports = std::mem::take(&mut self.pending_reports);
        let mut freqs = BTreeMap::new();
        for leaf in self.snapshot.set.leaves() {
            let reported = reports
                .get(&leaf.pseudonym)
                .copied()
                .unwrap_or(0)
                .saturating_add(self.frequency_prior);
            freqs.insert(leaf.pseudonym, self.smooth(leaf.frequency, reported));
        }
        if let Err(e) = self.rebuild(Vec::new(), expired.clone(), freqs, new_epoch) {
            self.pending_reports = reports;
            return Err(e);
        }
        self.reports_received = 0;
        Ok(self.current_update())
    }

    fn smooth(&self, old: u64, reported: u64) -> u64 {
        if self.ewma_alpha >= 1.0 {
            return reported;
        }
        let v = self.ewma_alpha * reported as f64 + (1.0 - self.ewma_alpha) * old as f64;
        v.round() as u64
    }

    fn rebuild(
        &mut self,
        add: Vec<RevokedLeaf>,
        expire: BTreeSet<Pseudonym>,
        freqs: BTreeMap<Pseudonym, u64>,
        new_epoch: u64,
    ) -> Result<(), ProtocolError> {
        let scheme = self.scheme.as_ref();
        let snapshot = match &self.snapshot.set {
            RevocationSet::Tree(tree) if tree.leaf_count() + add.len() > expire.len() => {
                let (tree, signed) =
                    update_tree(tree, add, expire, &freqs, new_epoch, scheme, &self.master)?;
                Snapshot::new(tree, signed)
            }
            set => {
                let current: BTreeSet<Pseudonym> =
                    set.leaves().iter().map(|l| l.pseudonym).collect();
                if let Some(p) = expire.iter().find(|p| !current.contains(p)) {
                    return Err(crate::tree::TreeError::NotRevoked(*p).into());
                }
                if add.is_empty() {
                    Snapshot::empty(scheme, &self.master, new_epoch, self.k as u8)
                } else {
                    let (tree, signed) = build_tree(add, self.k, new_epoch, scheme, &self.master)?;
                    Snapshot::new(tree, signed)
                }
            }
        };
        self.snapshot = snapshot;
        self.epoch = new_epoch;
        Ok(())
    }

    /// Revoke the accused RSU only if the 'OK' is genuinely signed by it, the proof is
    /// a valid TTP-signed revocation proof for the same pseudonym, and the pseudonym was
    /// in the tree at the 'OK' epoch: `revocation_epoch ≤ ok.epoch ≤ root_epoch`.
    pub fn handle_impeachment(&mut self, imp: &Impeachment) -> ImpeachmentOutcome {
        let accused = imp.ok.rsu_id;
        match self.rsu_registry.get(&accused) {
            Some(r) if r.status == RsuStatus::Active => {}
            _ => return ImpeachmentOutcome::Dismissed(DismissReason::UnknownRsu(accused)),
        }
        if !imp
            .ok
            .verify(self.scheme.as_ref(), &self.master.master_public)
        {
            return ImpeachmentOutcome::Dismissed(DismissReason::BadOkSignature);
        }
        // Historical evidence: freshness does not matter, only that the TTP signed it.
        if let Err(e) = verify_proof(
            self.scheme.as_ref(),
            &imp.contradiction,
            &imp.ok.pseudonym,
            &self.master.master_public,
            self.epoch,
            u64::MAX,
        ) {
            return ImpeachmentOutcome::Dismissed(DismissReason::InvalidProof(e));
        }
        let revocation_epoch = imp.contradiction.leaf.revocation_epoch;
        let root_epoch = imp.contradiction.signed_root.epoch;
        if !(revocation_epoch <= imp.ok.epoch && imp.ok.epoch <= root_epoch) {
            return ImpeachmentOutcome::Dismissed(DismissReason::NoContradiction {
                ok_epoch: imp.ok.epoch,
                revocation_epoch,
                root_epoch,
            });
        }
        if let Some(r) = self.rsu_registry.get_mut(&accused) {
            r.status = RsuStatus::Revoked;
        }
        ImpeachmentOutcome::RsuRevoked(RsuRevocationNotice {
            rsu_id: accused,
            epoch: self.epoch,
        })
    }
}
