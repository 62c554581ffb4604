//! Frequency-ordered Huffman k-ary hash trees over revoked pseudonyms.
//!
//! Leaves are revoked pseudonyms weighted by how often they are queried. The tree is
//! built by the greedy k-ary Huffman merge, so frequently queried pseudonyms sit close
//! to the root and their revocation proofs are short. Every internal node has exactly
//! `k` children: the leaf set is padded with zero-frequency dummy leaves until
//! `(t' - 1) mod (k - 1) == 0`.
//!
//! Node digests (SHA3-256) are domain separated by a one-byte tag:
//!
//! | node     | preimage                                  |
//! |----------|-------------------------------------------|
//! | leaf     | `0x00 ‖ pseudonym ‖ revocation_epoch_be`  |
//! | internal | `0x01 ‖ child_0 ‖ … ‖ child_{k-1}`        |
//! | dummy    | `0x02 ‖ dummy_index_be32`                 |
//! | empty    | `0x03 ‖ epoch_be`                         |

mod build;
mod codec;
mod proof;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::crypto::{sha3_256, IbsScheme, IbsSignature, MasterKeys, Pseudonym};

pub use codec::{
    decode_proof, decode_tree, encode_proof, encode_tree, FORMAT_VERSION, PROOF_MAGIC,
    SNAPSHOT_MAGIC,
};
pub use proof::{verify_proof, ProofRejection, ProvenLeaf, RevocationProof};

pub type Digest = [u8; 32];

pub const LEAF_TAG: u8 = 0x00;
pub const INTERNAL_TAG: u8 = 0x01;
pub const DUMMY_TAG: u8 = 0x02;
pub const EMPTY_TAG: u8 = 0x03;

pub fn leaf_digest(pseudonym: &Pseudonym, revocation_epoch: u64) -> Digest {
    sha3_256(&[
        &[LEAF_TAG],
        pseudonym.as_bytes(),
        &revocation_epoch.to_be_bytes(),
    ])
}

pub fn dummy_digest(index: u32) -> Digest {
    sha3_256(&[&[DUMMY_TAG], &index.to_be_bytes()])
}

pub fn internal_digest<'a>(children: impl IntoIterator<Item = &'a Digest>) -> Digest {
    use sha3::{Digest as _, Sha3_256};
    let mut h = Sha3_256::new();
    h.update([INTERNAL_TAG]);
    for c in children {
        h.update(c);
    }
    h.finalize().into()
}

/// Root digest standing in for an epoch with no revoked pseudonyms.
pub fn empty_root(epoch: u64) -> Digest {
    sha3_256(&[&[EMPTY_TAG], &epoch.to_be_bytes()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RevokedLeaf {
    pub pseudonym: Pseudonym,
    pub revocation_epoch: u64,
    /// Query count used as the Huffman weight.
    pub frequency: u64,
}

impl RevokedLeaf {
    pub fn new(pseudonym: Pseudonym, revocation_epoch: u64, frequency: u64) -> Self {
        Self {
            pseudonym,
            revocation_epoch,
            frequency,
        }
    }

    pub fn digest(&self) -> Digest {
        leaf_digest(&self.pseudonym, self.revocation_epoch)
    }
}

/// Child indices from the root down to a leaf. `[1,2,2,1]` addresses node `N_01221`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TreePath(Vec<u8>);

impl TreePath {
    pub fn new(branches: Vec<u8>) -> Self {
        Self(branches)
    }

    pub fn branches(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Node label in the `N_0…` notation, root label first.
    pub fn node_label(&self) -> String {
        let mut s = String::from("N_0");
        for b in &self.0 {
            s.push_str(&b.to_string());
        }
        s
    }
}

impl fmt::Debug for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("cannot build a revocation tree from an empty leaf set")]
    EmptyLeafSet,
    #[error("arity k = {0} out of range (must be 2..=255)")]
    InvalidArity(usize),
    #[error("duplicate pseudonym {0}")]
    DuplicatePseudonym(Pseudonym),
    #[error("leaf {pseudonym} revoked at epoch {revocation_epoch}, after tree epoch {tree_epoch}")]
    RevocationInFuture {
        pseudonym: Pseudonym,
        revocation_epoch: u64,
        tree_epoch: u64,
    },
    #[error("too many leaves: {0}")]
    TooManyLeaves(usize),
    #[error("cannot expire {0}: not in the tree")]
    NotRevoked(Pseudonym),
    #[error("new epoch {new} must be greater than current epoch {current}")]
    EpochNotAdvanced { current: u64, new: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum NodeKind {
    /// Index into `RevocationTree::leaves`.
    Leaf(usize),
    Dummy(u32),
    Internal(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Node {
    pub digest: Digest,
    pub kind: NodeKind,
}

/// Immutable Huffman k-ary hash tree. Build with [`RevocationTree::build`] or
/// [`build_tree`]; edits go through [`update_tree`], which rebuilds from scratch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationTree {
    k: u8,
    epoch: u64,
    /// Sorted by pseudonym.
    leaves: Vec<RevokedLeaf>,
    nodes: Vec<Node>,
    root: usize,
    path_table: BTreeMap<Pseudonym, TreePath>,
    leaf_index: BTreeMap<Pseudonym, usize>,
    depth: usize,
    dummy_count: usize,
}

impl RevocationTree {
    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Real (non-dummy) leaves, sorted by pseudonym.
    pub fn leaves(&self) -> &[RevokedLeaf] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn dummy_count(&self) -> usize {
        self.dummy_count
    }

    pub fn root_digest(&self) -> Digest {
        self.nodes[self.root].digest
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf(&self, pseudonym: &Pseudonym) -> Option<&RevokedLeaf> {
        self.leaf_index.get(pseudonym).map(|&i| &self.leaves[i])
    }

    pub fn contains(&self, pseudonym: &Pseudonym) -> bool {
        self.leaf_index.contains_key(pseudonym)
    }

    /// Path-table lookup; `None` means the pseudonym is not revoked.
    pub fn lookup_path(&self, pseudonym: &Pseudonym) -> Option<&TreePath> {
        self.path_table.get(pseudonym)
    }

    pub fn path_table(&self) -> &BTreeMap<Pseudonym, TreePath> {
        &self.path_table
    }

    /// Digest of the node reached by following `branches` from the root.
    pub fn node_digest(&self, branches: &[u8]) -> Option<Digest> {
        self.walk(branches).map(|i| self.nodes[i].digest)
    }

    pub(crate) fn walk(&self, branches: &[u8]) -> Option<usize> {
        let mut at = self.root;
        for &b in branches {
            match &self.nodes[at].kind {
                NodeKind::Internal(children) => at = *children.get(b as usize)?,
                _ => return None,
            }
        }
        Some(at)
    }

    /// Σ frequency × depth over the real leaves (saturating).
    pub fn weighted_path_length(&self) -> u64 {
        self.leaves.iter().fold(0u64, |acc, leaf| {
            let depth = self.path_table[&leaf.pseudonym].len() as u64;
            acc.saturating_add(leaf.frequency.saturating_mul(depth))
        })
    }

    pub fn sign(&self, scheme: &dyn IbsScheme, master: &MasterKeys) -> SignedRoot {
        SignedRoot::sign(
            scheme,
            master,
            self.root_digest(),
            self.epoch,
            self.k,
            self.leaves.len() as u32,
        )
    }
}

/// The TTP's signature over a tree root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRoot {
    pub root_digest: Digest,
    pub epoch: u64,
    pub k: u8,
    pub leaf_count: u32,
    pub ttp_signature: IbsSignature,
}

impl SignedRoot {
    /// Canonical bytes covered by the TTP signature.
    pub fn signing_message(root_digest: &Digest, epoch: u64, k: u8, leaf_count: u32) -> Vec<u8> {
        let mut m = Vec::with_capacity(45);
        m.extend_from_slice(root_digest);
        m.extend_from_slice(&epoch.to_be_bytes());
        m.push(k);
        m.extend_from_slice(&leaf_count.to_be_bytes());
        m
    }

    pub fn sign(
        scheme: &dyn IbsScheme,
        master: &MasterKeys,
        root_digest: Digest,
        epoch: u64,
        k: u8,
        leaf_count: u32,
    ) -> Self {
        let msg = Self::signing_message(&root_digest, epoch, k, leaf_count);
        let ttp_signature = scheme.sign_root(master, &msg);
        Self {
            root_digest,
            epoch,
            k,
            leaf_count,
            ttp_signature,
        }
    }

    /// Signed root for an epoch with nothing revoked.
    pub fn empty(scheme: &dyn IbsScheme, master: &MasterKeys, epoch: u64, k: u8) -> Self {
        Self::sign(scheme, master, empty_root(epoch), epoch, k, 0)
    }

    pub fn verify(&self, scheme: &dyn IbsScheme, master_public: &[u8]) -> bool {
        let msg = Self::signing_message(&self.root_digest, self.epoch, self.k, self.leaf_count);
        scheme.verify_root(master_public, &msg, &self.ttp_signature)
    }
}

/// Either a real tree or the empty revocation set of one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevocationSet {
    Empty { k: u8, epoch: u64 },
    Tree(RevocationTree),
}

impl RevocationSet {
    pub fn k(&self) -> usize {
        match self {
            RevocationSet::Empty { k, .. } => *k as usize,
            RevocationSet::Tree(t) => t.k(),
        }
    }

    pub fn epoch(&self) -> u64 {
        match self {
            RevocationSet::Empty { epoch, .. } => *epoch,
            RevocationSet::Tree(t) => t.epoch(),
        }
    }

    pub fn root_digest(&self) -> Digest {
        match self {
            RevocationSet::Empty { epoch, .. } => empty_root(*epoch),
            RevocationSet::Tree(t) => t.root_digest(),
        }
    }

    pub fn leaves(&self) -> &[RevokedLeaf] {
        match self {
            RevocationSet::Empty { .. } => &[],
            RevocationSet::Tree(t) => t.leaves(),
        }
    }

    pub fn tree(&self) -> Option<&RevocationTree> {
        match self {
            RevocationSet::Empty { .. } => None,
            RevocationSet::Tree(t) => Some(t),
        }
    }

    pub fn contains(&self, pseudonym: &Pseudonym) -> bool {
        self.tree().is_some_and(|t| t.contains(pseudonym))
    }

    pub fn lookup_path(&self, pseudonym: &Pseudonym) -> Option<&TreePath> {
        self.tree().and_then(|t| t.lookup_path(pseudonym))
    }
}

/// A revocation set together with its signed root: what RSUs hold and what the
/// snapshot file format stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub set: RevocationSet,
    pub signed_root: SignedRoot,
}

impl Snapshot {
    pub fn new(tree: RevocationTree, signed_root: SignedRoot) -> Self {
        Self {
            set: RevocationSet::Tree(tree),
            signed_root,
        }
    }

    pub fn empty(scheme: &dyn IbsScheme, master: &MasterKeys, epoch: u64, k: u8) -> Self {
        Self {
            set: RevocationSet::Empty { k, epoch },
            signed_root: SignedRoot::empty(scheme, master, epoch, k),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.signed_root.epoch
    }

    pub fn prove(&self, pseudonym: &Pseudonym) -> Option<RevocationProof> {
        self.set
            .tree()
            .and_then(|t| generate_proof(t, &self.signed_root, pseudonym))
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_tree(self)
    }
}

/// Build a tree and have the TTP sign its root.
pub fn build_tree(
    leaves: impl IntoIterator<Item = RevokedLeaf>,
    k: usize,
    epoch: u64,
    scheme: &dyn IbsScheme,
    master: &MasterKeys,
) -> Result<(RevocationTree, SignedRoot), TreeError> {
    let tree = RevocationTree::build(leaves, k, epoch)?;
    let signed = tree.sign(scheme, master);
    Ok((tree, signed))
}

pub fn lookup_path<'a>(tree: &'a RevocationTree, pseudonym: &Pseudonym) -> Option<&'a TreePath> {
    tree.lookup_path(pseudonym)
}

pub fn weighted_path_length(tree: &RevocationTree) -> u64 {
    tree.weighted_path_length()
}

pub fn generate_proof(
    tree: &RevocationTree,
    signed_root: &SignedRoot,
    pseudonym: &Pseudonym,
) -> Option<RevocationProof> {
    proof::generate(tree, signed_root, pseudonym)
}

/// Apply additions, expirations and new frequencies, then rebuild and re-sign.
///
/// Frequencies of leaves absent from `new_frequencies` are carried over; entries for
/// pseudonyms that are not in the final leaf set are ignored.
pub fn update_tree(
    tree: &RevocationTree,
    add: impl IntoIterator<Item = RevokedLeaf>,
    expire: impl IntoIterator<Item = Pseudonym>,
    new_frequencies: &BTreeMap<Pseudonym, u64>,
    new_epoch: u64,
    scheme: &dyn IbsScheme,
    master: &MasterKeys,
) -> Result<(RevocationTree, SignedRoot), TreeError> {
    if new_epoch <= tree.epoch {
        return Err(TreeError::EpochNotAdvanced {
            current: tree.epoch,
            new: new_epoch,
        });
    }
    let mut leaves: BTreeMap<Pseudonym, RevokedLeaf> =
        tree.leaves.iter().map(|l| (l.pseudonym, *l)).collect();
    for p in expire {
        leaves.remove(&p).ok_or(TreeError::NotRevoked(p))?;
    }
    for leaf in add {
        if leaves.insert(leaf.pseudonym, leaf).is_some() {
            return Err(TreeError::DuplicatePseudonym(leaf.pseudonym));
        }
    }
    for (p, f) in new_frequencies {
        if let Some(leaf) = leaves.get_mut(p) {
            leaf.frequency = *f;
        }
    }
    build_tree(leaves.into_values(), tree.k(), new_epoch, scheme, master)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{Backend, HashIbs};

    pub(crate) fn pn(i: u32) -> Pseudonym {
        Pseudonym::from_bytes(sha3_256(&[b"test-pseudonym", &i.to_be_bytes()]))
    }

    fn leaves(freqs: &[u64]) -> Vec<RevokedLeaf> {
        freqs
            .iter()
            .enumerate()
            .map(|(i, &f)| RevokedLeaf::new(pn(i as u32), 0, f))
            .collect()
    }

    #[test]
    fn path_display_and_label() {
        let p = TreePath::new(vec![1, 2, 2, 1]);
        assert_eq!(p.to_string(), "[1,2,2,1]");
        assert_eq!(p.node_label(), "N_01221");
    }

    #[test]
    fn single_leaf_binary_tree_pads_one_dummy() {
        let leaf = RevokedLeaf::new(pn(0), 3, 9);
        let tree = RevocationTree::build([leaf], 2, 3).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.dummy_count(), 1);
        assert_eq!(
            tree.root_digest(),
            internal_digest(&[leaf.digest(), dummy_digest(0)])
        );
        assert_eq!(tree.weighted_path_length(), 9);
    }

    #[test]
    fn build_rejections_are_distinct() {
        assert_eq!(
            RevocationTree::build([], 2, 0),
            Err(TreeError::EmptyLeafSet)
        );
        assert_eq!(
            RevocationTree::build(leaves(&[1]), 1, 0),
            Err(TreeError::InvalidArity(1))
        );
        assert_eq!(
            RevocationTree::build(leaves(&[1]), 256, 0),
            Err(TreeError::InvalidArity(256))
        );
        let mut dup = leaves(&[1, 2]);
        dup[1].pseudonym = dup[0].pseudonym;
        assert_eq!(
            RevocationTree::build(dup.clone(), 2, 0),
            Err(TreeError::DuplicatePseudonym(dup[0].pseudonym))
        );
        let future = RevokedLeaf::new(pn(0), 5, 1);
        assert!(matches!(
            RevocationTree::build([future], 2, 4),
            Err(TreeError::RevocationInFuture { .. })
        ));
    }

    #[test]
    fn lookup_unknown_is_none() {
        let tree = RevocationTree::build(leaves(&[3, 1, 1]), 2, 0).unwrap();
        assert!(tree.lookup_path(&pn(99)).is_none());
        assert!(!tree.contains(&pn(99)));
    }

    #[test]
    fn all_zero_frequencies_give_zero_weighted_path_length() {
        let tree = RevocationTree::build(leaves(&[0; 7]), 3, 0).unwrap();
        assert_eq!(tree.weighted_path_length(), 0);
    }

    #[test]
    fn update_semantics() {
        let s = HashIbs::new();
        let m = s.setup(&[1; 32]);
        let (tree, _) = build_tree(leaves(&[4, 3, 2, 1]), 2, 1, &s, &m).unwrap();

        let (same, signed) = update_tree(&tree, [], [], &BTreeMap::new(), 2, &s, &m).unwrap();
        assert_eq!(same.root_digest(), tree.root_digest());
        assert_eq!(signed.epoch, 2);

        assert_eq!(
            update_tree(&tree, [], [], &BTreeMap::new(), 1, &s, &m),
            Err(TreeError::EpochNotAdvanced { current: 1, new: 1 })
        );
        assert_eq!(
            update_tree(&tree, [], [pn(77)], &BTreeMap::new(), 2, &s, &m),
            Err(TreeError::NotRevoked(pn(77)))
        );
        assert_eq!(
            update_tree(
                &tree,
                [RevokedLeaf::new(pn(0), 0, 1)],
                [],
                &BTreeMap::new(),
                2,
                &s,
                &m
            ),
            Err(TreeError::DuplicatePseudonym(pn(0)))
        );
        let all: Vec<_> = tree.leaves().iter().map(|l| l.pseudonym).collect();
        assert_eq!(
            update_tree(&tree, [], all, &BTreeMap::new(), 2, &s, &m),
            Err(TreeError::EmptyLeafSet)
        );

        // expire then re-add in one update is fine
        let (t2, _) = update_tree(
            &tree,
            [RevokedLeaf::new(pn(0), 2, 1)],
            [pn(0)],
            &BTreeMap::new(),
            2,
            &s,
            &m,
        )
        .unwrap();
        assert_eq!(t2.leaf(&pn(0)).unwrap().revocation_epoch, 2);
    }

    #[test]
    fn signed_root_verifies_and_binds_fields() {
        let s = Backend::Ristretto.scheme();
        let m = s.setup(&[2; 32]);
        let (_, signed) = build_tree(leaves(&[1, 2, 3]), 3, 4, s.as_ref(), &m).unwrap();
        assert!(signed.verify(s.as_ref(), &m.master_public));
        let mut bad = signed.clone();
        bad.leaf_count += 1;
        assert!(!bad.verify(s.as_ref(), &m.master_public));
        let empty = SignedRoot::empty(s.as_ref(), &m, 4, 3);
        assert_eq!(empty.root_digest, empty_root(4));
        assert!(empty.verify(s.as_ref(), &m.master_public));
    }
}
