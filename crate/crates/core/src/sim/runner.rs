use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::baseline::BalancedTree;
use super::config::SimConfig;
use super::metrics::{EpochMetrics, MetricsReport};
use super::workload::{gen_workload, stream, Workload};
use super::SimError;
use crate::crypto::{sha3_256, Pseudonym};
use crate::protocol::{
    Decision, ImpeachmentOutcome, ObuState, ProtocolMessage, Query, QueryResponse, ResponseOutcome,
    RevokeOutcome, RsuBehavior, RsuId, RsuState, TreeUpdate, TtpState,
};
use crate::tree::encode_proof;

/// Every message is encoded and decoded on its way, so the simulator exercises the
/// same bytes a radio link would carry.
#[derive(Debug, Default)]
struct Channel {
    messages: u64,
    bytes: u64,
}

impl Channel {
    fn deliver(
        &mut self,
        msg: &ProtocolMessage,
        recipients: usize,
    ) -> Result<ProtocolMessage, SimError> {
        let bytes = msg.encode();
        self.messages += recipients as u64;
        self.bytes += (bytes.len() * recipients) as u64;
        Ok(ProtocolMessage::decode(&bytes)?)
    }
}

#[derive(Debug, Default)]
struct DepthTally {
    proofs: u64,
    huffman: u64,
    baseline: u64,
    bytes: u64,
    baseline_bytes: u64,
}

impl DepthTally {
    fn mean(sum: u64, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }
}

struct World<'a> {
    cfg: &'a SimConfig,
    workload: Workload,
    ttp: TtpState,
    rsus: BTreeMap<RsuId, RsuState>,
    obus: Vec<ObuState>,
    channel: Channel,
    routing: ChaCha8Rng,
    report: MetricsReport,
    total: DepthTally,
    epoch_tally: DepthTally,
    epoch_metrics: EpochMetrics,
    proofs_by_rsu: BTreeMap<RsuId, u64>,
    baseline_depth: usize,
    sim_epoch: usize,
}

impl<'a> World<'a> {
    fn setup(cfg: &'a SimConfig) -> Result<Self, SimError> {
        let workload = gen_workload(cfg);
        let scheme = cfg.backend.scheme();
        let seed = sha3_256(&[b"revtree/sim/ttp", &cfg.seed.to_be_bytes()]);
        let mut ttp = TtpState::new(scheme.clone(), &seed, cfg.k, cfg.ewma_alpha)?
            .with_frequency_prior(cfg.frequency_prior);
        let mpu = ttp.master_public().to_vec();

        let mut obus = Vec::with_capacity(cfg.num_obus);
        for v in &workload.vehicles {
            let keys = ttp.register_obu(v.id, v.pseudonyms.clone())?;
            if !v.revoked {
                obus.push(ObuState::new(
                    v.id,
                    keys,
                    cfg.trust_threshold,
                    scheme.clone(),
                    mpu.clone(),
                    cfg.max_root_age,
                ));
            }
        }

        let initial = ttp.current_update();
        let mut rsus = BTreeMap::new();
        for i in 0..cfg.num_rsus as u32 {
            let id = RsuId(i);
            let key = ttp.register_rsu(id)?;
            let behavior = if cfg.cheater_rsu_ids.contains(&i) {
                RsuBehavior::Cheater
            } else {
                RsuBehavior::Honest
            };
            rsus.insert(
                id,
                RsuState::new(id, behavior, key, scheme.clone(), mpu.clone(), &initial)?,
            );
        }

        let report = MetricsReport {
            seed: cfg.seed,
            k: cfg.k,
            zipf_exponent: cfg.zipf_exponent,
            num_revoked: cfg.num_revoked,
            epochs: cfg.epochs,
            ..Default::default()
        };
        let mut world = Self {
            cfg,
            workload,
            ttp,
            rsus,
            obus,
            channel: Channel::default(),
            routing: stream(cfg.seed, "routing"),
            report,
            total: DepthTally::default(),
            epoch_tally: DepthTally::default(),
            epoch_metrics: EpochMetrics::default(),
            proofs_by_rsu: BTreeMap::new(),
            baseline_depth: 0,
            sim_epoch: 0,
        };

        let ids: Vec<_> = world.workload.revoked_vehicles().map(|v| v.id).collect();
        match world.ttp.revoke_obus(&ids)? {
            RevokeOutcome::Revoked { update, .. } => world.distribute(update)?,
            RevokeOutcome::AlreadyRevoked => {
                return Err(SimError::Invariant("fresh vehicles already revoked".into()))
            }
        }
        Ok(world)
    }

    fn invariant(&self, ok: bool, what: impl FnOnce() -> String) -> Result<(), SimError> {
        if self.cfg.assert_invariants && !ok {
            Err(SimError::Invariant(what()))
        } else {
            Ok(())
        }
    }

    fn distribute(&mut self, update: TreeUpdate) -> Result<(), SimError> {
        let active: Vec<RsuId> = self.ttp.active_rsus().collect();
        let msg = self
            .channel
            .deliver(&ProtocolMessage::TreeUpdate(update), active.len())?;
        let ProtocolMessage::TreeUpdate(update) = msg else {
            return Err(SimError::Invariant(
                "tree update changed type in transit".into(),
            ));
        };
        for id in active {
            self.rsus
                .get_mut(&id)
                .expect("registered")
                .apply_update(&update)?;
        }
        Ok(())
    }

    /// Round-robin over a fresh random permutation of the active RSUs.
    fn assign(&mut self) -> Vec<Option<RsuId>> {
        let mut active: Vec<RsuId> = self.ttp.active_rsus().collect();
        if active.is_empty() {
            return vec![None; self.obus.len()];
        }
        active.shuffle(&mut self.routing);
        let offset = self.routing.random_range(0..active.len());
        let availability = self.cfg.rsu_availability;
        (0..self.obus.len())
            .map(|i| {
                let reachable = availability >= 1.0 || self.routing.random_bool(availability);
                reachable.then(|| active[(i + offset) % active.len()])
            })
            .collect()
    }

    fn run_epoch(&mut self, next_query: &mut usize) -> Result<(), SimError> {
        let snapshot = self.ttp.snapshot();
        let leaves = snapshot.set.leaves();
        self.baseline_depth = BalancedTree::build(leaves, self.cfg.k).map_or(0, |b| b.depth());
        self.epoch_metrics = EpochMetrics {
            epoch: self.sim_epoch,
            tree_epoch: snapshot.epoch(),
            leaf_count: leaves.len(),
            weighted_path_length: snapshot.set.tree().map_or(0, |t| t.weighted_path_length()),
            ..Default::default()
        };
        self.epoch_tally = DepthTally::default();
        self.proofs_by_rsu.clear();

        for round in 0..self.cfg.rounds_per_epoch {
            let assignment = self.assign();
            for (o, rsu) in assignment.iter().enumerate() {
                let Some(rsu) = *rsu else { continue };
                let obu = &self.obus[o];
                let asks: Vec<Pseudonym> = obu
                    .pending()
                    .keys()
                    .filter(|p| !obu.pending_rsus(p).contains(&rsu))
                    .copied()
                    .collect();
                for p in asks {
                    self.report.reasks += 1;
                    self.exchange(o, rsu, p)?;
                }
            }
            while let Some(&q) = self.workload.queries.get(*next_query) {
                if q.epoch != self.sim_epoch || q.round != round {
                    break;
                }
                *next_query += 1;
                self.report.queries_generated += 1;
                self.epoch_metrics.queries += 1;
                let p = self.workload.targets[q.target].pseudonym;
                match self.obus[q.obu].check(&p, assignment[q.obu].is_some()) {
                    Decision::Reject => self.report.cache_hits_revoked += 1,
                    Decision::Accept => self.report.cache_hits_reliable += 1,
                    Decision::AcceptProvisionally => self.report.unreachable_accepts += 1,
                    Decision::MustQuery => {
                        let rsu = assignment[q.obu].expect("reachable");
                        self.exchange(q.obu, rsu, p)?;
                    }
                }
            }
        }
        self.close_epoch()
    }

    fn exchange(&mut self, o: usize, rsu: RsuId, p: Pseudonym) -> Result<(), SimError> {
        let ProtocolMessage::Query(query) = self
            .channel
            .deliver(&ProtocolMessage::Query(Query { pseudonym: p }), 1)?
        else {
            return Err(SimError::Invariant("query changed type in transit".into()));
        };
        self.report.queries_sent += 1;
        let answer = self
            .rsus
            .get_mut(&rsu)
            .expect("registered")
            .handle_query(&query);
        let response = match self.channel.deliver(&answer.into_message(), 1)? {
            ProtocolMessage::ProofResponse(proof) => QueryResponse::Proof(proof),
            ProtocolMessage::OkResponse(ok) => QueryResponse::Ok(ok),
            other => {
                return Err(SimError::Invariant(format!(
                    "unexpected answer tag {}",
                    other.tag()
                )))
            }
        };
        match &response {
            QueryResponse::Proof(proof) => {
                let k = self.cfg.k as u64;
                let depth = proof.depth() as u64;
                let bytes = encode_proof(proof).len() as u64;
                let per_level = 1 + 32 * (k - 1);
                let baseline = self.baseline_depth as u64;
                let baseline_bytes =
                    (bytes + baseline * per_level).saturating_sub(depth * per_level);
                for t in [&mut self.total, &mut self.epoch_tally] {
                    t.proofs += 1;
                    t.huffman += depth;
                    t.baseline += baseline;
                    t.bytes += bytes;
                    t.baseline_bytes += baseline_bytes;
                }
                self.report.proof_responses += 1;
                self.epoch_metrics.proof_responses += 1;
                *self.proofs_by_rsu.entry(rsu).or_insert(0) += 1;
            }
            QueryResponse::Ok(_) => {
                self.report.ok_responses += 1;
                self.epoch_metrics.ok_responses += 1;
            }
        }

        let outcome = self.obus[o].process_response(&response, self.ttp.epoch());
        match outcome {
            ResponseOutcome::Revoked { impeachments } => {
                for imp in impeachments {
                    self.impeach(imp)?;
                }
            }
            ResponseOutcome::Pending { .. } => self.report.provisional_accepts += 1,
            ResponseOutcome::ProofRejected(_)
            | ResponseOutcome::Reliable
            | ResponseOutcome::OkDiscarded(_) => {}
        }
        let obu = &self.obus[o];
        self.invariant(obu.caches_disjoint(), || {
            format!("OBU {} caches overlap", obu.id().0)
        })
    }

    fn impeach(&mut self, imp: crate::protocol::Impeachment) -> Result<(), SimError> {
        self.report.impeachments_emitted += 1;
        let ProtocolMessage::Impeachment(imp) = self
            .channel
            .deliver(&ProtocolMessage::Impeachment(imp), 1)?
        else {
            return Err(SimError::Invariant(
                "impeachment changed type in transit".into(),
            ));
        };
        match self.ttp.handle_impeachment(&imp) {
            ImpeachmentOutcome::RsuRevoked(notice) => {
                self.report.impeachments_accepted += 1;
                self.epoch_metrics.impeachments_accepted += 1;
                let behavior = self.rsus[&notice.rsu_id].behavior();
                if behavior == RsuBehavior::Cheater {
                    self.report.cheaters_revoked += 1;
                    self.report
                        .first_cheater_revoked_epoch
                        .get_or_insert(self.sim_epoch);
                } else {
                    self.report.honest_rsus_revoked += 1;
                    self.invariant(false, || format!("honest RSU {} revoked", notice.rsu_id.0))?;
                }
                let msg = self
                    .channel
                    .deliver(&ProtocolMessage::RsuRevoked(notice), self.obus.len())?;
                let ProtocolMessage::RsuRevoked(notice) = msg else {
                    return Err(SimError::Invariant("notice changed type in transit".into()));
                };
                for obu in &mut self.obus {
                    obu.learn_rsu_revoked(&notice);
                }
            }
            ImpeachmentOutcome::Dismissed(_) => self.report.impeachments_dismissed += 1,
        }
        Ok(())
    }

    fn close_epoch(&mut self) -> Result<(), SimError> {
        let active: Vec<RsuId> = self.ttp.active_rsus().collect();
        for id in active {
            let rsu = self.rsus.get_mut(&id).expect("registered");
            let report = rsu.report_frequencies(rsu.epoch())?;
            let answered = self.proofs_by_rsu.get(&id).copied().unwrap_or(0);
            let total = report.total();
            self.invariant(total == answered, || {
                format!("RSU {} reported {total} proofs, sent {answered}", id.0)
            })?;
            let ProtocolMessage::FrequencyReport(report) = self
                .channel
                .deliver(&ProtocolMessage::FrequencyReport(report), 1)?
            else {
                return Err(SimError::Invariant("report changed type in transit".into()));
            };
            self.ttp.receive_report(&report)?;
        }
        let update = self.ttp.epoch_update(&BTreeSet::new())?;
        self.distribute(update)?;
        let epoch = self.ttp.epoch();
        for obu in &mut self.obus {
            obu.advance_epoch(epoch);
        }

        let t = &self.epoch_tally;
        self.epoch_metrics.huffman_mean_depth = DepthTally::mean(t.huffman, t.proofs);
        self.epoch_metrics.baseline_mean_depth = DepthTally::mean(t.baseline, t.proofs);
        self.report
            .series
            .push(std::mem::take(&mut self.epoch_metrics));
        Ok(())
    }

    fn finish(mut self) -> MetricsReport {
        let t = &self.total;
        let r = &mut self.report;
        r.weighted_mean_proof_depth = DepthTally::mean(t.huffman, t.proofs);
        r.baseline_mean_proof_depth = DepthTally::mean(t.baseline, t.proofs);
        r.depth_ratio = if t.baseline == 0 {
            0.0
        } else {
            t.huffman as f64 / t.baseline as f64
        };
        r.proof_bytes_mean = DepthTally::mean(t.bytes, t.proofs);
        r.baseline_proof_bytes_mean = DepthTally::mean(t.baseline_bytes, t.proofs);
        for obu in &self.obus {
            let s = obu.stats();
            r.invalid_ok_discarded += s.invalid_ok_discarded;
            r.proofs_rejected += s.proofs_rejected;
        }
        r.messages_sent = self.channel.messages;
        r.bytes_sent = self.channel.bytes;
        r.final_tree_epoch = self.ttp.epoch();
        self.report
    }
}

/// Run the configured number of epochs of query, answer, report and update cycles.
/// Identical configurations give identical reports.
pub fn run_simulation(cfg: &SimConfig) -> Result<MetricsReport, SimError> {
    cfg.validate()?;
    let mut world = World::setup(cfg)?;
    let mut next_query = 0;
    for e in 0..cfg.epochs {
        world.sim_epoch = e;
        world.run_epoch(&mut next_query)?;
    }
    Ok(world.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub zipf_exponent: f64,
    pub huffman_mean_depth: f64,
    pub baseline_mean_depth: f64,
    pub depth_ratio: f64,
    pub huffman_proof_bytes_mean: f64,
    pub baseline_proof_bytes_mean: f64,
}

/// Simulate every (k, s) cell of the grid on top of `base`; rows sorted by k, then s.
pub fn run_bench(base: &SimConfig, ks: &[usize], zipf: &[f64]) -> Result<Vec<BenchRow>, SimError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut ss = zipf.to_vec();
    ss.sort_by(f64::total_cmp);
    ss.dedup();
    let mut rows = Vec::with_capacity(ks.len() * ss.len());
    for &k in &ks {
        for &s in &ss {
            let cfg = SimConfig {
                k,
                zipf_exponent: s,
                ..base.clone()
            };
            let r = run_simulation(&cfg)?;
            rows.push(BenchRow {
                k,
                zipf_exponent: s,
                huffman_mean_depth: r.weighted_mean_proof_depth,
                baseline_mean_depth: r.baseline_mean_proof_depth,
                depth_ratio: r.depth_ratio,
                huffman_proof_bytes_mean: r.proof_bytes_mean,
                baseline_proof_bytes_mean: r.baseline_proof_bytes_mean,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "k,zipf_exponent,huffman_mean_depth,baseline_mean_depth,depth_ratio,huffman_proof_bytes_mean,\
         baseline_proof_bytes_mean\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.k,
            r.zipf_exponent,
            r.huffman_mean_depth,
            r.baseline_mean_depth,
            r.depth_ratio,
            r.huffman_proof_bytes_mean,
            r.baseline_proof_bytes_mean
        );
    }
    out
}
