use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revtree::{Backend, Pseudonym};

fn random_message(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let len = rng.random_range(0..200);
    (0..len).map(|_| rng.random()).collect()
}

fn contract(backend: Backend, seed: u64) {
    let scheme = backend.scheme();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1 = scheme.setup(&rng.random());
    let m2 = scheme.setup(&rng.random());
    for _ in 0..100 {
        let p = Pseudonym::from_bytes(rng.random());
        let q = Pseudonym::from_bytes(rng.random());
        let msg = random_message(&mut rng);
        let mut other_msg = msg.clone();
        other_msg.push(rng.random());
        let key = scheme.extract(&m1, &p);
        let sig = scheme.sign(&key, &msg);
        assert_eq!(sig.0.len(), scheme.signature_len());
        assert!(
            scheme.verify(&m1.master_public, &p, &msg, &sig),
            "{}",
            scheme.name()
        );
        assert_eq!(scheme.sign(&key, &msg), sig, "signatures are deterministic");
        assert!(
            !scheme.verify(&m1.master_public, &q, &msg, &sig),
            "cross-pseudonym"
        );
        assert!(
            !scheme.verify(&m1.master_public, &p, &other_msg, &sig),
            "cross-message"
        );
        assert!(
            !scheme.verify(&m2.master_public, &p, &msg, &sig),
            "cross-master"
        );
        let forged_under_m2 = scheme.sign(&scheme.extract(&m2, &p), &msg);
        assert!(!scheme.verify(&m1.master_public, &p, &msg, &forged_under_m2));
    }
}

#[test]
fn hash_backend_contract() {
    contract(Backend::Hash, 70);
}

#[test]
fn ristretto_backend_contract() {
    contract(Backend::Ristretto, 71);
}

#[test]
fn ristretto_verifies_in_a_fresh_instance() {
    let signer = Backend::Ristretto.scheme();
    let master = signer.setup(&[8; 32]);
    let p = Pseudonym::from_bytes([3; 32]);
    let sig = signer.sign(&signer.extract(&master, &p), b"beacon");
    let verifier = Backend::Ristretto.scheme();
    assert!(verifier.verify(&master.master_public, &p, b"beacon", &sig));
}
