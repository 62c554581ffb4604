use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::{
    dummy_digest, internal_digest, Node, NodeKind, RevocationTree, RevokedLeaf, TreeError, TreePath,
};

/// Number of zero-frequency dummies needed so that every internal node has exactly
/// `k` children and the root is internal.
pub(crate) fn padding_for(leaf_count: usize, k: usize) -> usize {
    let mut padded = leaf_count.max(k);
    while !(padded - 1).is_multiple_of(k - 1) {
        padded += 1;
    }
    padded - leaf_count
}

/// Merge order: weight, then subtree height, then digest, then arena index.
type HeapKey = (u128, u32, [u8; 32], usize);

impl RevocationTree {
    /// Greedy k-ary Huffman construction.
    ///
    /// Merge candidates are ordered by `(frequency, height, digest)` ascending, so equal
    /// weights merge shallow subtrees first and all-equal weights give a balanced tree.
    /// Children of a new parent keep that order, with dummy leaves moved to the end.
    pub fn build(
        leaves: impl IntoIterator<Item = RevokedLeaf>,
        k: usize,
        epoch: u64,
    ) -> Result<Self, TreeError> {
        if !(2..=255).contains(&k) {
            return Err(TreeError::InvalidArity(k));
        }
        let mut leaves: Vec<RevokedLeaf> = leaves.into_iter().collect();
        if leaves.is_empty() {
            return Err(TreeError::EmptyLeafSet);
        }
        if u32::try_from(leaves.len()).is_err() {
            return Err(TreeError::TooManyLeaves(leaves.len()));
        }
        leaves.sort_by_key(|a| a.pseudonym);
        for pair in leaves.windows(2) {
            if pair[0].pseudonym == pair[1].pseudonym {
                return Err(TreeError::DuplicatePseudonym(pair[0].pseudonym));
            }
        }
        if let Some(l) = leaves.iter().find(|l| l.revocation_epoch > epoch) {
            return Err(TreeError::RevocationInFuture {
                pseudonym: l.pseudonym,
                revocation_epoch: l.revocation_epoch,
                tree_epoch: epoch,
            });
        }

        let dummy_count = padding_for(leaves.len(), k);
        let mut nodes: Vec<Node> = Vec::with_capacity(2 * (leaves.len() + dummy_count));
        let mut weights: Vec<u128> = Vec::with_capacity(nodes.capacity());
        for (i, leaf) in leaves.iter().enumerate() {
            nodes.push(Node {
                digest: leaf.digest(),
                kind: NodeKind::Leaf(i),
            });
            weights.push(leaf.frequency as u128);
        }
        for d in 0..dummy_count as u32 {
            nodes.push(Node {
                digest: dummy_digest(d),
                kind: NodeKind::Dummy(d),
            });
            weights.push(0);
        }

        let mut heights: Vec<u32> = vec![0; nodes.len()];
        let mut heap: BinaryHeap<Reverse<HeapKey>> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Reverse((weights[i], 0, n.digest, i)))
            .collect();

        while heap.len() > 1 {
            let mut group: Vec<(u128, usize)> = Vec::with_capacity(k);
            for _ in 0..k {
                let Reverse((w, _, _, i)) = heap.pop().expect("padding guarantees full groups");
                group.push((w, i));
            }
            // stable: real children keep merge order, dummies go last
            group.sort_by_key(|&(_, i)| matches!(nodes[i].kind, NodeKind::Dummy(_)));
            let children: Vec<usize> = group.iter().map(|&(_, i)| i).collect();
            let weight: u128 = group.iter().map(|&(w, _)| w).sum();
            let height = 1 + children.iter().map(|&c| heights[c]).max().unwrap_or(0);
            let digest = internal_digest(children.iter().map(|&c| &nodes[c].digest));
            let idx = nodes.len();
            nodes.push(Node {
                digest,
                kind: NodeKind::Internal(children),
            });
            weights.push(weight);
            heights.push(height);
            heap.push(Reverse((weight, height, digest, idx)));
        }
        let root = heap.pop().expect("non-empty heap").0 .3;

        let mut path_table = BTreeMap::new();
        let mut depth = 0;
        let mut stack: Vec<(usize, Vec<u8>)> = vec![(root, Vec::new())];
        while let Some((at, path)) = stack.pop() {
            match &nodes[at].kind {
                NodeKind::Internal(children) => {
                    for (b, &c) in children.iter().enumerate() {
                        let mut p = path.clone();
                        p.push(b as u8);
                        stack.push((c, p));
                    }
                }
                NodeKind::Leaf(i) => {
                    depth = depth.max(path.len());
                    path_table.insert(leaves[*i].pseudonym, TreePath::new(path));
                }
                NodeKind::Dummy(_) => depth = depth.max(path.len()),
            }
        }
        let leaf_index = leaves
            .iter()
            .enumerate()
            .map(|(i, l)| (l.pseudonym, i))
            .collect();

        Ok(RevocationTree {
            k: k as u8,
            epoch,
            leaves,
            nodes,
            root,
            path_table,
            leaf_index,
            depth,
            dummy_count,
        })
    }
}
