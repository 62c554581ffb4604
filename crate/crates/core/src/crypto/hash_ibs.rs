use std::collections::HashMap;
use std::sync::RwLock;

use super::{sha3_256, IbsScheme, IbsSignature, MasterKeys, Pseudonym, PseudonymPrivateKey};

const SIG_LEN: usize = 64;

/// Deterministic hash-only IBS for simulation and tests.
///
/// * `master_private = H("mpr" ‖ seed)`, `master_public = H("mpu" ‖ master_private)`
/// * `key_material = H(master_private ‖ pseudonym)`
/// * `signature = H(master_private ‖ pseudonym ‖ "pub") ‖ H(key_material ‖ message)`
///
/// Verification looks the master private key up by its public key in an in-process
/// oracle that is filled by [`setup`](IbsScheme::setup) or [`register`](HashIbs::register).
/// A master public key the oracle has never seen verifies nothing.
#[derive(Debug, Default)]
pub struct HashIbs {
    oracle: RwLock<HashMap<Vec<u8>, Vec<u8>>>,
}

impl HashIbs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Make `master` known to this instance's verification oracle.
    pub fn register(&self, master: &MasterKeys) {
        self.oracle
            .write()
            .expect("oracle lock poisoned")
            .insert(master.master_public.clone(), master.master_private.clone());
    }

    fn public_tag(master_private: &[u8], pseudonym: &Pseudonym) -> [u8; 32] {
        sha3_256(&[master_private, pseudonym.as_bytes(), b"pub"])
    }
}

impl IbsScheme for HashIbs {
    fn name(&self) -> &'static str {
        "hash"
    }

    fn signature_len(&self) -> usize {
        SIG_LEN
    }

    fn setup(&self, seed: &[u8; 32]) -> MasterKeys {
        let master_private = sha3_256(&[b"revtree/hash-ibs/mpr", seed]).to_vec();
        let master_public = sha3_256(&[b"revtree/hash-ibs/mpu", &master_private]).to_vec();
        let keys = MasterKeys {
            master_public,
            master_private,
        };
        self.register(&keys);
        keys
    }

    fn extract(&self, master: &MasterKeys, pseudonym: &Pseudonym) -> PseudonymPrivateKey {
        let key = sha3_256(&[&master.master_private, pseudonym.as_bytes()]);
        // The signer needs the public tag as well; it rides along in the key blob.
        let tag = Self::public_tag(&master.master_private, pseudonym);
        PseudonymPrivateKey {
            pseudonym: *pseudonym,
            key_material: [key, tag].concat(),
        }
    }

    fn sign(&self, key: &PseudonymPrivateKey, message: &[u8]) -> IbsSignature {
        let (secret, tag) = key.key_material.split_at(32);
        let body = sha3_256(&[secret, message]);
        IbsSignature([tag, &body[..]].concat())
    }

    fn verify(
        &self,
        master_public: &[u8],
        pseudonym: &Pseudonym,
        message: &[u8],
        sig: &IbsSignature,
    ) -> bool {
        if sig.0.len() != SIG_LEN {
            return false;
        }
        let oracle = self.oracle.read().expect("oracle lock poisoned");
        let Some(master_private) = oracle.get(master_public) else {
            return false;
        };
        let secret = sha3_256(&[master_private, pseudonym.as_bytes()]);
        let tag = Self::public_tag(master_private, pseudonym);
        let body = sha3_256(&[&secret, message]);
        sig.0[..32] == tag && sig.0[32..] == body
    }
}
