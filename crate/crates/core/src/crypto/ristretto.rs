//! Pairing-free identity-based Schnorr signatures (Galindo–Garcia construction) over
//! the Ristretto prime-order group.
//!
//! Setup:    x ← H(seed),  X = xG                       (MP_r = x, MP_u = X)
//! Extract:  r ← H(x, id), R = rG, c = H(X, R, id), s = r + c·x   (key = R ‖ s)
//! Sign:     y ← H(s, m),  Y = yG, h = H(X, id, R, Y, m), z = y + h·s   (sig = R ‖ Y ‖ z)
//! Verify:   zG == Y + h·(R + c·X)
//!
//! Nonces are derived by hashing, so every operation is deterministic.

use curve25519_dalek::ristretto::CompressedRistretto;
use curve25519_dalek::{RistrettoPoint, Scalar};
use sha3::{Digest, Sha3_512};

use super::{IbsScheme, IbsSignature, MasterKeys, Pseudonym, PseudonymPrivateKey};

const SIG_LEN: usize = 96;

fn hash_to_scalar(tag: &[u8], parts: &[&[u8]]) -> Scalar {
    let mut h = Sha3_512::new();
    h.update(tag);
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    Scalar::from_bytes_mod_order_wide(&h.finalize().into())
}

fn scalar_from(bytes: &[u8]) -> Option<Scalar> {
    let arr: [u8; 32] = bytes.try_into().ok()?;
    Option::from(Scalar::from_canonical_bytes(arr))
}

fn point_from(bytes: &[u8]) -> Option<RistrettoPoint> {
    CompressedRistretto::from_slice(bytes).ok()?.decompress()
}

fn identity_challenge(master_public: &[u8], r: &[u8], p: &Pseudonym) -> Scalar {
    hash_to_scalar(
        b"revtree/ristretto-ibs/id",
        &[master_public, r, p.as_bytes()],
    )
}

/// Publicly verifiable IBS backend. Stateless.
#[derive(Debug, Default, Clone, Copy)]
pub struct RistrettoIbs;

impl IbsScheme for RistrettoIbs {
    fn name(&self) -> &'static str {
        "ristretto"
    }

    fn signature_len(&self) -> usize {
        SIG_LEN
    }

    fn setup(&self, seed: &[u8; 32]) -> MasterKeys {
        let x = hash_to_scalar(b"revtree/ristretto-ibs/master", &[seed]);
        let big_x = RistrettoPoint::mul_base(&x).compress();
        MasterKeys {
            master_public: big_x.as_bytes().to_vec(),
            master_private: x.to_bytes().to_vec(),
        }
    }

    fn extract(&self, master: &MasterKeys, pseudonym: &Pseudonym) -> PseudonymPrivateKey {
        let x =
            scalar_from(&master.master_private).expect("master private key is a canonical scalar");
        let r = hash_to_scalar(
            b"revtree/ristretto-ibs/extract-nonce",
            &[&master.master_private, pseudonym.as_bytes()],
        );
        let big_r = RistrettoPoint::mul_base(&r).compress();
        let c = identity_challenge(&master.master_public, big_r.as_bytes(), pseudonym);
        let s = r + c * x;
        // X travels with the key so signing can bind it into the challenge.
        let key_material = [
            big_r.as_bytes().as_slice(),
            s.as_bytes(),
            &master.master_public,
        ]
        .concat();
        PseudonymPrivateKey {
            pseudonym: *pseudonym,
            key_material,
        }
    }

    fn sign(&self, key: &PseudonymPrivateKey, message: &[u8]) -> IbsSignature {
        let big_r = &key.key_material[..32];
        let s =
            scalar_from(&key.key_material[32..64]).expect("key material holds a canonical scalar");
        let master_public = &key.key_material[64..];
        let y = hash_to_scalar(
            b"revtree/ristretto-ibs/sign-nonce",
            &[s.as_bytes(), big_r, message],
        );
        let big_y = RistrettoPoint::mul_base(&y).compress();
        let h = hash_to_scalar(
            b"revtree/ristretto-ibs/msg",
            &[
                master_public,
                key.pseudonym.as_bytes(),
                big_r,
                big_y.as_bytes(),
                message,
            ],
        );
        let z = y + h * s;
        IbsSignature([big_r, big_y.as_bytes().as_slice(), z.as_bytes()].concat())
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
        let (big_r_bytes, rest) = sig.0.split_at(32);
        let (big_y_bytes, z_bytes) = rest.split_at(32);
        let (Some(big_x), Some(big_r), Some(big_y), Some(z)) = (
            point_from(master_public),
            point_from(big_r_bytes),
            point_from(big_y_bytes),
            scalar_from(z_bytes),
        ) else {
            return false;
        };
        let c = identity_challenge(master_public, big_r_bytes, pseudonym);
        let h = hash_to_scalar(
            b"revtree/ristretto-ibs/msg",
            &[
                master_public,
                pseudonym.as_bytes(),
                big_r_bytes,
                big_y_bytes,
                message,
            ],
        );
        RistrettoPoint::mul_base(&z) == big_y + h * (big_r + c * big_x)
    }
}
