//! `HCRT` tree snapshots and `HPRF` proofs.
//!
//! Snapshot layout (big-endian):
//!
//! ```text
//! "HCRT" | version u8 | k u8 | epoch u64 | leaf_count u32
//! leaf_count × ( pseudonym[32] | revocation_epoch u64 | frequency u64 )   sorted by pseudonym
//! signed-root block
//! ```
//!
//! Proof layout:
//!
//! ```text
//! "HPRF" | version u8 | k u8 | path_len u16 | path[path_len]
//! path_len × (k-1) × digest[32]      leaf-adjacent level first
//! pseudonym[32] | revocation_epoch u64
//! signed-root block
//! ```
//!
//! Signed-root block: `root[32] | epoch u64 | k u8 | leaf_count u32 | sig_len u32 | sig`.
//!
//! Decoding is strict: the snapshot is rebuilt and must reproduce the stored root,
//! leaves must be strictly increasing, and no trailing bytes are allowed.

use super::{
    empty_root, Digest, ProvenLeaf, RevocationProof, RevocationSet, RevocationTree, RevokedLeaf,
    SignedRoot, Snapshot, TreeError, TreePath,
};
use crate::crypto::{IbsSignature, Pseudonym};
use crate::wire::{DecodeError, Reader, Writer};

pub const SNAPSHOT_MAGIC: &str = "HCRT";
pub const PROOF_MAGIC: &str = "HPRF";
pub const FORMAT_VERSION: u8 = 1;

pub(crate) fn write_signed_root(w: &mut Writer, sr: &SignedRoot) {
    w.bytes(&sr.root_digest)
        .u64(sr.epoch)
        .u8(sr.k)
        .u32(sr.leaf_count)
        .len_prefixed(&sr.ttp_signature.0);
}

pub(crate) fn read_signed_root(r: &mut Reader<'_>) -> Result<SignedRoot, DecodeError> {
    let root_digest = r.array::<32>("signed root digest")?;
    let epoch = r.u64("signed root epoch")?;
    let k = r.u8("signed root k")?;
    let leaf_count = r.u32("signed root leaf count")?;
    let sig = r.len_prefixed("signed root signature")?.to_vec();
    Ok(SignedRoot {
        root_digest,
        epoch,
        k,
        leaf_count,
        ttp_signature: IbsSignature(sig),
    })
}

fn read_k(r: &mut Reader<'_>) -> Result<u8, DecodeError> {
    let k = r.u8("k")?;
    if k < 2 {
        return Err(DecodeError::OutOfRange {
            field: "k",
            detail: format!("{k} < 2"),
        });
    }
    Ok(k)
}

fn read_version(r: &mut Reader<'_>) -> Result<(), DecodeError> {
    match r.u8("version")? {
        FORMAT_VERSION => Ok(()),
        v => Err(DecodeError::UnsupportedVersion(v)),
    }
}

pub fn encode_tree(snapshot: &Snapshot) -> Vec<u8> {
    let leaves = snapshot.set.leaves();
    let mut w = Writer::new();
    w.bytes(SNAPSHOT_MAGIC.as_bytes())
        .u8(FORMAT_VERSION)
        .u8(snapshot.set.k() as u8)
        .u64(snapshot.set.epoch())
        .u32(leaves.len() as u32);
    for leaf in leaves {
        w.bytes(leaf.pseudonym.as_bytes())
            .u64(leaf.revocation_epoch)
            .u64(leaf.frequency);
    }
    write_signed_root(&mut w, &snapshot.signed_root);
    w.finish()
}

pub fn decode_tree(bytes: &[u8]) -> Result<Snapshot, DecodeError> {
    let mut r = Reader::new(bytes);
    r.magic(SNAPSHOT_MAGIC)?;
    read_version(&mut r)?;
    let k = read_k(&mut r)?;
    let epoch = r.u64("epoch")?;
    let count = r.u32("leaf count")? as usize;
    if count.saturating_mul(48) > r.remaining() {
        return Err(DecodeError::Truncated("leaves"));
    }
    let mut leaves = Vec::with_capacity(count);
    let mut prev: Option<Pseudonym> = None;
    for _ in 0..count {
        let pseudonym = Pseudonym::from_bytes(r.array("leaf pseudonym")?);
        if prev.is_some_and(|p| p >= pseudonym) {
            return Err(DecodeError::NonCanonical(
                "leaves must be strictly increasing by pseudonym",
            ));
        }
        prev = Some(pseudonym);
        let revocation_epoch = r.u64("leaf revocation epoch")?;
        let frequency = r.u64("leaf frequency")?;
        leaves.push(RevokedLeaf {
            pseudonym,
            revocation_epoch,
            frequency,
        });
    }
    let signed_root = read_signed_root(&mut r)?;
    r.finish()?;

    if signed_root.epoch != epoch {
        return Err(DecodeError::OutOfRange {
            field: "signed root epoch",
            detail: format!("{} != snapshot epoch {epoch}", signed_root.epoch),
        });
    }
    if signed_root.k != k {
        return Err(DecodeError::OutOfRange {
            field: "signed root k",
            detail: format!("{} != {k}", signed_root.k),
        });
    }
    if signed_root.leaf_count as usize != count {
        return Err(DecodeError::OutOfRange {
            field: "signed root leaf count",
            detail: format!("{} != {count}", signed_root.leaf_count),
        });
    }

    let set = if count == 0 {
        if signed_root.root_digest != empty_root(epoch) {
            return Err(DecodeError::RootMismatch);
        }
        RevocationSet::Empty { k, epoch }
    } else {
        let tree = RevocationTree::build(leaves, k as usize, epoch).map_err(|e| match e {
            TreeError::RevocationInFuture { .. } => DecodeError::OutOfRange {
                field: "leaf revocation epoch",
                detail: e.to_string(),
            },
            other => DecodeError::OutOfRange {
                field: "leaves",
                detail: other.to_string(),
            },
        })?;
        if tree.root_digest() != signed_root.root_digest {
            return Err(DecodeError::RootMismatch);
        }
        RevocationSet::Tree(tree)
    };
    Ok(Snapshot { set, signed_root })
}

pub fn encode_proof(proof: &RevocationProof) -> Vec<u8> {
    let path_len = u16::try_from(proof.path.len()).expect("proof path longer than u16::MAX");
    let mut w = Writer::new();
    w.bytes(PROOF_MAGIC.as_bytes())
        .u8(FORMAT_VERSION)
        .u8(proof.k)
        .u16(path_len)
        .bytes(proof.path.branches());
    for level in &proof.siblings {
        for d in level {
            w.bytes(d);
        }
    }
    w.bytes(proof.leaf.pseudonym.as_bytes())
        .u64(proof.leaf.revocation_epoch);
    write_signed_root(&mut w, &proof.signed_root);
    w.finish()
}

pub fn decode_proof(bytes: &[u8]) -> Result<RevocationProof, DecodeError> {
    let mut r = Reader::new(bytes);
    r.magic(PROOF_MAGIC)?;
    read_version(&mut r)?;
    let k = read_k(&mut r)?;
    let path_len = r.u16("path length")? as usize;
    if path_len == 0 {
        return Err(DecodeError::OutOfRange {
            field: "path length",
            detail: "0".into(),
        });
    }
    let path = r.take(path_len, "path")?.to_vec();
    if let Some(b) = path.iter().find(|&&b| b >= k) {
        return Err(DecodeError::OutOfRange {
            field: "path branch",
            detail: format!("{b} >= k = {k}"),
        });
    }
    let per_level = k as usize - 1;
    if path_len.saturating_mul(per_level).saturating_mul(32) > r.remaining() {
        return Err(DecodeError::Truncated("sibling digests"));
    }
    let mut siblings: Vec<Vec<Digest>> = Vec::with_capacity(path_len);
    for _ in 0..path_len {
        let mut level = Vec::with_capacity(per_level);
        for _ in 0..per_level {
            level.push(r.array::<32>("sibling digest")?);
        }
        siblings.push(level);
    }
    let pseudonym = Pseudonym::from_bytes(r.array("leaf pseudonym")?);
    let revocation_epoch = r.u64("leaf revocation epoch")?;
    let signed_root = read_signed_root(&mut r)?;
    r.finish()?;
    Ok(RevocationProof {
        k,
        leaf: ProvenLeaf {
            pseudonym,
            revocation_epoch,
        },
        path: TreePath::new(path),
        siblings,
        signed_root,
    })
}
