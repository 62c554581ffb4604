//! Identity-based signatures where a pseudonym is the verification identity.
//!
//! Two backends implement [`IbsScheme`]:
//!
//! * [`HashIbs`] is a deterministic, hash-only test backend. It is **not publicly
//!   verifiable**: verification goes through an oracle that holds the master private
//!   key inside the process (the simulator's trust domain). Every protocol-observable
//!   behaviour (round trips, rejection of wrong identities, wrong messages, wrong master
//!   keys) is preserved, which is all the revocation protocol needs to be exercised.
//! * [`RistrettoIbs`] is a pairing-free identity-based Schnorr scheme over the
//!   Ristretto group. It is publicly verifiable from the master public key alone and
//!   is what the CLI uses for files that leave the process.
//!
//! All signatures are deterministic. The TTP signs tree roots under the reserved
//! all-zero pseudonym [`Pseudonym::TTP`].

mod hash_ibs;
mod ristretto;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Sha3_256};
use thiserror::Error;

pub use hash_ibs::HashIbs;
pub use ristretto::RistrettoIbs;

pub const PSEUDONYM_LEN: usize = 32;

/// SHA3-256 over the concatenation of `parts`.
pub fn sha3_256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha3_256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// A 32-byte opaque identity. Equality and ordering are bytewise.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pseudonym([u8; PSEUDONYM_LEN]);

impl Pseudonym {
    /// Identity the TTP uses to sign tree roots.
    pub const TTP: Pseudonym = Pseudonym([0u8; PSEUDONYM_LEN]);

    pub const fn from_bytes(bytes: [u8; PSEUDONYM_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; PSEUDONYM_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Signing identity of a road-side unit, derived from its numeric id.
    pub fn for_rsu(rsu_id: u32) -> Self {
        Self(sha3_256(&[b"revtree/rsu-identity", &rsu_id.to_be_bytes()]))
    }
}

impl fmt::Debug for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pseudonym({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParsePseudonymError {
    #[error("pseudonym must be exactly 64 hex characters, got {0}")]
    BadLength(usize),
    #[error("pseudonym is not valid hex: {0}")]
    BadHex(String),
}

impl FromStr for Pseudonym {
    type Err = ParsePseudonymError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 2 * PSEUDONYM_LEN {
            return Err(ParsePseudonymError::BadLength(s.len()));
        }
        let mut out = [0u8; PSEUDONYM_LEN];
        hex::decode_to_slice(s, &mut out)
            .map_err(|e| ParsePseudonymError::BadHex(e.to_string()))?;
        Ok(Self(out))
    }
}

/// Output of [`IbsScheme::setup`]. Only `master_public` is ever published.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKeys {
    pub master_public: Vec<u8>,
    pub master_private: Vec<u8>,
}

impl fmt::Debug for MasterKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterKeys")
            .field("master_public", &hex::encode(&self.master_public))
            .field("master_private", &"<redacted>")
            .finish()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PseudonymPrivateKey {
    pub pseudonym: Pseudonym,
    pub key_material: Vec<u8>,
}

impl fmt::Debug for PseudonymPrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PseudonymPrivateKey")
            .field("pseudonym", &self.pseudonym)
            .field("key_material", &"<redacted>")
            .finish()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IbsSignature(pub Vec<u8>);

impl IbsSignature {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for IbsSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IbsSignature({})", hex::encode(&self.0))
    }
}

/// Identity-based signature contract. Implementations must be deterministic.
pub trait IbsScheme: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Fixed signature length for this backend.
    fn signature_len(&self) -> usize;

    fn setup(&self, seed: &[u8; 32]) -> MasterKeys;

    fn extract(&self, master: &MasterKeys, pseudonym: &Pseudonym) -> PseudonymPrivateKey;

    fn sign(&self, key: &PseudonymPrivateKey, message: &[u8]) -> IbsSignature;

    /// Never panics; malformed signatures simply fail.
    fn verify(
        &self,
        master_public: &[u8],
        pseudonym: &Pseudonym,
        message: &[u8],
        sig: &IbsSignature,
    ) -> bool;

    /// Sign `root_bytes` under the TTP's reserved identity.
    fn sign_root(&self, master: &MasterKeys, root_bytes: &[u8]) -> IbsSignature {
        let key = self.extract(master, &Pseudonym::TTP);
        self.sign(&key, root_bytes)
    }

    fn verify_root(&self, master_public: &[u8], root_bytes: &[u8], sig: &IbsSignature) -> bool {
        self.verify(master_public, &Pseudonym::TTP, root_bytes, sig)
    }
}

pub type SharedScheme = Arc<dyn IbsScheme>;

/// Backend selector used by configuration files and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Hash,
    Ristretto,
}

impl Backend {
    pub fn scheme(self) -> SharedScheme {
        match self {
            Backend::Hash => Arc::new(HashIbs::new()),
            Backend::Ristretto => Arc::new(RistrettoIbs),
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hash" => Ok(Backend::Hash),
            "ristretto" => Ok(Backend::Ristretto),
            other => Err(format!(
                "unknown signature backend {other:?} (expected hash or ristretto)"
            )),
        }
    }
}
