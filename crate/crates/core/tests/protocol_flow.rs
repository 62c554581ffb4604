//! One TTP, two honest RSUs and a cheater, one OBU; every message crosses the wire.

use revtree::protocol::{
    Decision, ImpeachmentOutcome, ObuId, ObuState, ProtocolMessage, Query, QueryResponse,
    ResponseOutcome, RevokeOutcome, RsuBehavior, RsuId, RsuState, TtpState,
};
use revtree::{Backend, Pseudonym};

fn p(i: u8) -> Pseudonym {
    Pseudonym::from_bytes([i; 32])
}

fn wire(msg: ProtocolMessage) -> ProtocolMessage {
    ProtocolMessage::decode(&msg.encode()).unwrap()
}

fn ask(rsu: &mut RsuState, pseudonym: Pseudonym) -> QueryResponse {
    let ProtocolMessage::Query(q) = wire(ProtocolMessage::Query(Query { pseudonym })) else {
        unreachable!()
    };
    match wire(rsu.handle_query(&q).into_message()) {
        ProtocolMessage::ProofResponse(proof) => QueryResponse::Proof(proof),
        ProtocolMessage::OkResponse(ok) => QueryResponse::Ok(ok),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn cheater_exposed_and_revoked_end_to_end() {
    let scheme = Backend::Ristretto.scheme();
    let mut ttp = TtpState::new(scheme.clone(), &[1; 32], 3, 1.0).unwrap();
    let mpu = ttp.master_public().to_vec();
    let keys = ttp.register_obu(ObuId(0), vec![p(1), p(2)]).unwrap();
    ttp.register_obu(ObuId(1), vec![p(10), p(11), p(12)])
        .unwrap();
    ttp.register_obu(ObuId(2), vec![p(20)]).unwrap();

    let initial = ttp.current_update();
    let mut rsus: Vec<RsuState> = (0..3)
        .map(|i| {
            let key = ttp.register_rsu(RsuId(i)).unwrap();
            let behavior = if i == 2 {
                RsuBehavior::Cheater
            } else {
                RsuBehavior::Honest
            };
            RsuState::new(
                RsuId(i),
                behavior,
                key,
                scheme.clone(),
                mpu.clone(),
                &initial,
            )
            .unwrap()
        })
        .collect();

    let RevokeOutcome::Revoked { update, added } = ttp.revoke_obu(ObuId(1)).unwrap() else {
        panic!()
    };
    assert_eq!(added, 3);
    let ProtocolMessage::TreeUpdate(update) = wire(ProtocolMessage::TreeUpdate(update)) else {
        unreachable!()
    };
    for rsu in &mut rsus {
        rsu.apply_update(&update).unwrap();
    }

    let mut obu = ObuState::new(ObuId(0), keys, 2, scheme.clone(), mpu, 1);
    let epoch = ttp.epoch();
    assert_eq!(obu.check(&p(11), true), Decision::MustQuery);

    // the cheater vouches for a revoked pseudonym
    let lie = ask(&mut rsus[2], p(11));
    assert_eq!(
        obu.process_response(&lie, epoch),
        ResponseOutcome::Pending { distinct_rsus: 1 }
    );
    // an honest RSU contradicts it
    let truth = ask(&mut rsus[0], p(11));
    let ResponseOutcome::Revoked { impeachments } = obu.process_response(&truth, epoch) else {
        panic!()
    };
    assert_eq!(impeachments.len(), 1);
    assert_eq!(obu.check(&p(11), true), Decision::Reject);

    let ProtocolMessage::Impeachment(imp) =
        wire(ProtocolMessage::Impeachment(impeachments[0].clone()))
    else {
        unreachable!()
    };
    let ImpeachmentOutcome::RsuRevoked(notice) = ttp.handle_impeachment(&imp) else {
        panic!()
    };
    assert_eq!(notice.rsu_id, RsuId(2));
    assert_eq!(
        ttp.active_rsus().collect::<Vec<_>>(),
        vec![RsuId(0), RsuId(1)]
    );
    let ProtocolMessage::RsuRevoked(notice) = wire(ProtocolMessage::RsuRevoked(notice)) else {
        unreachable!()
    };
    obu.learn_rsu_revoked(&notice);

    // honest 'OK's for a valid pseudonym from two distinct RSUs make it reliable
    let ok_a = ask(&mut rsus[0], p(20));
    let ok_b = ask(&mut rsus[1], p(20));
    let cheat = ask(&mut rsus[2], p(20));
    assert!(matches!(
        obu.process_response(&cheat, epoch),
        ResponseOutcome::OkDiscarded(_)
    ));
    assert_eq!(
        obu.process_response(&ok_a, epoch),
        ResponseOutcome::Pending { distinct_rsus: 1 }
    );
    assert_eq!(
        obu.process_response(&ok_b, epoch),
        ResponseOutcome::Reliable
    );
    assert_eq!(obu.check(&p(20), false), Decision::Accept);
    assert!(obu.caches_disjoint());

    // frequency reports drive the next tree
    for rsu in &mut rsus[..2] {
        let report = rsu.report_frequencies(epoch).unwrap();
        let ProtocolMessage::FrequencyReport(report) =
            wire(ProtocolMessage::FrequencyReport(report))
        else {
            unreachable!()
        };
        ttp.receive_report(&report).unwrap();
    }
    assert_eq!(ttp.pending_reports().get(&p(11)), Some(&1));
    let next = ttp.epoch_update(&Default::default()).unwrap();
    rsus[0].apply_update(&next).unwrap();
    assert_eq!(rsus[0].epoch(), epoch + 1);
    let leaf = ttp
        .snapshot()
        .set
        .leaves()
        .iter()
        .find(|l| l.pseudonym == p(11))
        .copied()
        .unwrap();
    assert_eq!(leaf.frequency, 1);
    obu.advance_epoch(ttp.epoch());
    assert_eq!(obu.check(&p(20), true), Decision::MustQuery);
}
