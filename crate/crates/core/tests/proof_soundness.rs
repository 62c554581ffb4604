use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revtree::crypto::sha3_256;
use revtree::{
    build_tree, decode_proof, encode_proof, verify_proof, Backend, ProofRejection, Pseudonym,
    RevokedLeaf, SharedScheme, Snapshot,
};

fn pn(i: u32) -> Pseudonym {
    Pseudonym::from_bytes(sha3_256(&[b"soundness", &i.to_be_bytes()]))
}

fn random_snapshot(
    rng: &mut ChaCha8Rng,
    scheme: &SharedScheme,
    max_t: u32,
) -> (Snapshot, Vec<u8>, u32) {
    let master = scheme.setup(&rng.random());
    let t = rng.random_range(1..=max_t);
    let k = rng.random_range(2..=5);
    let epoch = rng.random_range(0..100);
    let leaves = (0..t).map(|i| {
        RevokedLeaf::new(
            pn(i),
            rng.random_range(0..=epoch),
            rng.random_range(0..1000),
        )
    });
    let (tree, signed) = build_tree(leaves, k, epoch, scheme.as_ref(), &master).unwrap();
    (Snapshot::new(tree, signed), master.master_public, t)
}

#[test]
fn every_leaf_of_every_tree_verifies() {
    let scheme = Backend::Hash.scheme();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let (snap, mpu, t) = random_snapshot(&mut rng, &scheme, 512);
        let epoch = snap.epoch();
        for i in 0..t {
            let proof = snap.prove(&pn(i)).unwrap();
            assert_eq!(
                proof.sibling_count(),
                (proof.k as usize - 1) * proof.depth()
            );
            verify_proof(scheme.as_ref(), &proof, &pn(i), &mpu, epoch, 0).unwrap();
            let decoded = decode_proof(&encode_proof(&proof)).unwrap();
            assert_eq!(decoded, proof);
        }
        assert!(snap.prove(&pn(t + 1)).is_none());
    }
}

#[test]
fn single_bit_mutations_never_verify() {
    let scheme = Backend::Hash.scheme();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut accepted = 0;
    let mut trials = 0;
    while trials < 10_000 {
        let (snap, mpu, t) = random_snapshot(&mut rng, &scheme, 200);
        for _ in 0..100 {
            let p = pn(rng.random_range(0..t));
            let mut bytes = encode_proof(&snap.prove(&p).unwrap());
            let bit = rng.random_range(0..bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            if let Ok(proof) = decode_proof(&bytes) {
                if verify_proof(scheme.as_ref(), &proof, &p, &mpu, snap.epoch(), u64::MAX).is_ok() {
                    accepted += 1;
                }
            }
            trials += 1;
        }
    }
    assert_eq!(accepted, 0);
}

#[test]
fn rejections_name_the_first_failed_check() {
    let scheme = Backend::Ristretto.scheme();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (snap, mpu, _) = random_snapshot(&mut rng, &scheme, 30);
    let e = snap.epoch();
    let proof = snap.prove(&pn(0)).unwrap();
    let check = |proof: &revtree::RevocationProof, p: &Pseudonym, mpu: &[u8], now: u64| {
        verify_proof(scheme.as_ref(), proof, p, mpu, now, 2)
    };
    assert_eq!(check(&proof, &pn(0), &mpu, e), Ok(()));
    assert_eq!(
        check(&proof, &pn(1), &mpu, e),
        Err(ProofRejection::PseudonymMismatch)
    );
    assert_eq!(
        check(&proof, &pn(0), &mpu, e + 3),
        Err(ProofRejection::Stale { age: 3, max_age: 2 })
    );
    let other = scheme.setup(&[9; 32]).master_public;
    assert_eq!(
        check(&proof, &pn(0), &other, e),
        Err(ProofRejection::BadSignature)
    );

    let mut wrong_root = proof.clone();
    wrong_root.siblings[0][0][0] ^= 1;
    assert_eq!(
        check(&wrong_root, &pn(0), &mpu, e),
        Err(ProofRejection::RootMismatch)
    );
    let mut short = proof.clone();
    short.siblings[0].pop();
    assert!(matches!(
        check(&short, &pn(0), &mpu, e),
        Err(ProofRejection::Malformed(_))
    ));
}

#[test]
fn proof_size_grows_linearly_with_depth() {
    let scheme = Backend::Hash.scheme();
    let master = scheme.setup(&[5; 32]);
    let freqs: Vec<u64> = (0..40).map(|i| 1u64 << (i % 20)).collect();
    let leaves = freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| RevokedLeaf::new(pn(i as u32), 0, f));
    let (tree, signed) = build_tree(leaves, 3, 0, scheme.as_ref(), &master).unwrap();
    let snap = Snapshot::new(tree, signed);
    let sizes: Vec<(usize, usize)> = (0..40)
        .map(|i| {
            let proof = snap.prove(&pn(i)).unwrap();
            (proof.depth(), encode_proof(&proof).len())
        })
        .collect();
    let (d0, s0) = sizes[0];
    for &(d, s) in &sizes {
        assert_eq!(s as i64 - s0 as i64, (d as i64 - d0 as i64) * (1 + 2 * 32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_bytes_never_verify(bytes in prop::collection::vec(any::<u8>(), 0..600)) {
        let scheme = Backend::Ristretto.scheme();
        let mpu = scheme.setup(&[6; 32]).master_public;
        if let Ok(proof) = decode_proof(&bytes) {
            prop_assert!(verify_proof(scheme.as_ref(), &proof, &proof.leaf.pseudonym, &mpu, 0, u64::MAX).is_err());
        }
    }
}
