//! Pseudonym revocation for vehicular networks with frequency-weighted Huffman k-ary
//! hash trees, identity-based signatures, and a deterministic TTP/RSU/OBU simulator.

pub mod crypto;
pub mod protocol;
pub mod sim;
pub mod tree;
pub mod wire;

pub use crypto::{
    Backend, IbsScheme, IbsSignature, MasterKeys, Pseudonym, PseudonymPrivateKey, SharedScheme,
};
pub use tree::{
    build_tree, decode_proof, decode_tree, encode_proof, encode_tree, generate_proof, update_tree,
    verify_proof, ProofRejection, RevocationProof, RevocationSet, RevocationTree, RevokedLeaf,
    SignedRoot, Snapshot, TreeError, TreePath,
};
pub use wire::DecodeError;
