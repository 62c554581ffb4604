use crate::tree::{dummy_digest, internal_digest, Digest, RevokedLeaf};

/// Balanced complete k-ary hash tree over the same leaves, in digest order. Every leaf
/// sits at the same depth, the smallest `d ≥ 1` with `k^d ≥ t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedTree {
    k: usize,
    depth: usize,
    leaf_count: usize,
    root: Digest,
}

impl BalancedTree {
    pub fn build(leaves: &[RevokedLeaf], k: usize) -> Option<Self> {
        if leaves.is_empty() || k < 2 {
            return None;
        }
        let mut level: Vec<Digest> = leaves.iter().map(RevokedLeaf::digest).collect();
        level.sort_unstable();
        let mut depth = 0;
        let mut dummies = 0u32;
        while depth == 0 || level.len() > 1 {
            while !level.len().is_multiple_of(k) {
                level.push(dummy_digest(dummies));
                dummies += 1;
            }
            level = level.chunks(k).map(internal_digest).collect();
            depth += 1;
        }
        Some(Self {
            k,
            depth,
            leaf_count: leaves.len(),
            root: level[0],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn root_digest(&self) -> Digest {
        self.root
    }
}

/// Smallest `d ≥ 1` with `k^d ≥ t`.
pub fn balanced_depth(t: usize, k: usize) -> usize {
    let mut d = 1;
    let mut cap = k;
    while cap < t {
        cap = cap.saturating_mul(k);
        d += 1;
    }
    d
}
