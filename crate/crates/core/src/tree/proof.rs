use thiserror::Error;

use super::{internal_digest, leaf_digest, Digest, NodeKind, RevocationTree, SignedRoot, TreePath};
use crate::crypto::{IbsScheme, Pseudonym};

/// Leaf payload carried in a proof. Frequencies stay private to the TTP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProvenLeaf {
    pub pseudonym: Pseudonym,
    pub revocation_epoch: u64,
}

/// Evidence that a pseudonym is revoked: the root-to-leaf route, the `k - 1` siblings
/// at every level, and the signed root they hash up to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationProof {
    pub k: u8,
    pub leaf: ProvenLeaf,
    /// Root first.
    pub path: TreePath,
    /// One entry per level, leaf-adjacent level first; siblings in child order.
    pub siblings: Vec<Vec<Digest>>,
    pub signed_root: SignedRoot,
}

impl RevocationProof {
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn sibling_count(&self) -> usize {
        self.siblings.iter().map(Vec::len).sum()
    }

    /// Bottom-up recomputation of the root, or `None` if the shape is malformed.
    pub fn recompute_root(&self) -> Option<Digest> {
        let k = self.k as usize;
        if k < 2 || self.path.is_empty() || self.siblings.len() != self.path.len() {
            return None;
        }
        let mut current = leaf_digest(&self.leaf.pseudonym, self.leaf.revocation_epoch);
        let mut children: Vec<Digest> = Vec::with_capacity(k);
        for (level, &branch) in self.siblings.iter().zip(self.path.branches().iter().rev()) {
            if level.len() != k - 1 || branch as usize >= k {
                return None;
            }
            children.clear();
            children.extend_from_slice(&level[..branch as usize]);
            children.push(current);
            children.extend_from_slice(&level[branch as usize..]);
            current = internal_digest(&children);
        }
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofRejection {
    #[error("malformed proof: {0}")]
    Malformed(&'static str),
    #[error("proof is for a different pseudonym")]
    PseudonymMismatch,
    #[error("recomputed root does not match the signed root")]
    RootMismatch,
    #[error("TTP signature on the root does not verify")]
    BadSignature,
    #[error("stale root: age {age} epochs exceeds maximum {max_age}")]
    Stale { age: u64, max_age: u64 },
}

pub(crate) fn generate(
    tree: &RevocationTree,
    signed_root: &SignedRoot,
    pseudonym: &Pseudonym,
) -> Option<RevocationProof> {
    let path = tree.lookup_path(pseudonym)?.clone();
    let leaf = tree.leaf(pseudonym)?;
    let mut siblings = Vec::with_capacity(path.len());
    let mut at = tree.root;
    for &b in path.branches() {
        let NodeKind::Internal(children) = &tree.nodes[at].kind else {
            unreachable!("path table only holds routes through internal nodes");
        };
        let level: Vec<Digest> = children
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != b as usize)
            .map(|(_, &c)| tree.nodes[c].digest)
            .collect();
        siblings.push(level);
        at = children[b as usize];
    }
    siblings.reverse();
    Some(RevocationProof {
        k: tree.k,
        leaf: ProvenLeaf {
            pseudonym: leaf.pseudonym,
            revocation_epoch: leaf.revocation_epoch,
        },
        path,
        siblings,
        signed_root: signed_root.clone(),
    })
}

/// Accepts iff the proof names `pseudonym`, hashes up to the signed root, the root
/// carries a valid TTP signature under `ttp_master_public`, and the root is at most
/// `max_age` epochs old. The first failing check is reported.
pub fn verify_proof(
    scheme: &dyn IbsScheme,
    proof: &RevocationProof,
    pseudonym: &Pseudonym,
    ttp_master_public: &[u8],
    current_epoch: u64,
    max_age: u64,
) -> Result<(), ProofRejection> {
    let k = proof.k as usize;
    if k < 2 {
        return Err(ProofRejection::Malformed("arity below 2"));
    }
    if proof.signed_root.k != proof.k {
        return Err(ProofRejection::Malformed(
            "proof arity differs from signed root arity",
        ));
    }
    if proof.path.is_empty() {
        return Err(ProofRejection::Malformed("empty path"));
    }
    if proof.siblings.len() != proof.path.len() || proof.siblings.iter().any(|l| l.len() != k - 1) {
        return Err(ProofRejection::Malformed("wrong sibling count"));
    }
    if proof.path.branches().iter().any(|&b| b as usize >= k) {
        return Err(ProofRejection::Malformed("branch index out of range"));
    }
    if proof.leaf.revocation_epoch > proof.signed_root.epoch {
        return Err(ProofRejection::Malformed(
            "leaf revoked after its root epoch",
        ));
    }
    if proof.leaf.pseudonym != *pseudonym {
        return Err(ProofRejection::PseudonymMismatch);
    }
    let root = proof
        .recompute_root()
        .ok_or(ProofRejection::Malformed("shape"))?;
    if root != proof.signed_root.root_digest {
        return Err(ProofRejection::RootMismatch);
    }
    if !proof.signed_root.verify(scheme, ttp_master_public) {
        return Err(ProofRejection::BadSignature);
    }
    let age = current_epoch.saturating_sub(proof.signed_root.epoch);
    if age > max_age {
        return Err(ProofRejection::Stale { age, max_age });
    }
    Ok(())
}
