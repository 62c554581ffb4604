use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use crate::crypto::{sha3_256, Pseudonym};
use crate::protocol::ObuId;

/// Domain labels keep the independent random streams of one seed apart.
pub(crate) fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(sha3_256(&[
        b"revtree/sim/stream/",
        label.as_bytes(),
        &seed.to_be_bytes(),
    ]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: ObuId,
    pub pseudonyms: Vec<Pseudonym>,
    pub public: bool,
    pub revoked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub pseudonym: Pseudonym,
    pub vehicle: usize,
    pub weight: f64,
}

/// One beacon check: OBU `obu` meets `target` during `round` of `epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryEvent {
    pub epoch: usize,
    pub round: usize,
    pub obu: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    /// Querying OBUs first (indices `0..num_obus`), then the revoked vehicles.
    pub vehicles: Vec<Vehicle>,
    pub targets: Vec<Target>,
    /// Sorted by (epoch, round).
    pub queries: Vec<QueryEvent>,
}

impl Workload {
    pub fn revoked_vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(|v| v.revoked)
    }
}

fn sim_pseudonym(seed: u64, vehicle: usize, index: usize) -> Pseudonym {
    Pseudonym::from_bytes(sha3_256(&[
        b"revtree/sim/pseudonym",
        &seed.to_be_bytes(),
        &(vehicle as u64).to_be_bytes(),
        &(index as u64).to_be_bytes(),
    ]))
}

/// Vehicle population and query trace.
///
/// Each pseudonym gets a random Zipf rank `r` and weight `r^-s`, multiplied for
/// pseudonyms of public vehicles. A query draws its target from those weights and its
/// sender uniformly among the querying OBUs other than the target's owner.
pub fn gen_workload(cfg: &SimConfig) -> Workload {
    let ppv = cfg.pseudonyms_per_vehicle;
    let revoked_vehicles = cfg.num_revoked.div_ceil(ppv);
    let total = cfg.num_obus + revoked_vehicles;

    let mut vehicles = Vec::with_capacity(total);
    for v in 0..total {
        let revoked = v >= cfg.num_obus;
        let count = if revoked && v == total - 1 {
            cfg.num_revoked - (revoked_vehicles - 1) * ppv
        } else {
            ppv
        };
        vehicles.push(Vehicle {
            id: ObuId(v as u32),
            pseudonyms: (0..count).map(|i| sim_pseudonym(cfg.seed, v, i)).collect(),
            public: false,
            revoked,
        });
    }

    let mut rng = stream(cfg.seed, "public");
    let public_count = ((cfg.public_vehicle_fraction * total as f64).round() as usize).min(total);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    for &v in &order[..public_count] {
        vehicles[v].public = true;
    }

    let mut targets: Vec<Target> = vehicles
        .iter()
        .enumerate()
        .flat_map(|(v, veh)| {
            veh.pseudonyms.iter().map(move |p| Target {
                pseudonym: *p,
                vehicle: v,
                weight: 0.0,
            })
        })
        .collect();
    let mut rng = stream(cfg.seed, "rank");
    let mut ranks: Vec<usize> = (0..targets.len()).collect();
    ranks.shuffle(&mut rng);
    for (rank, &t) in ranks.iter().enumerate() {
        let mult = if vehicles[targets[t].vehicle].public {
            cfg.public_query_multiplier
        } else {
            1.0
        };
        targets[t].weight = mult / ((rank + 1) as f64).powf(cfg.zipf_exponent);
    }

    let dist = WeightedIndex::new(targets.iter().map(|t| t.weight))
        .expect("weights are positive and finite");
    let mut rng = stream(cfg.seed, "trace");
    let mut queries = Vec::with_capacity(cfg.epochs * cfg.queries_per_epoch);
    for epoch in 0..cfg.epochs {
        for i in 0..cfg.queries_per_epoch {
            let round = i * cfg.rounds_per_epoch / cfg.queries_per_epoch;
            let (target, obu) = loop {
                let t = dist.sample(&mut rng);
                let owner = targets[t].vehicle;
                if owner < cfg.num_obus && cfg.num_obus == 1 {
                    continue;
                }
                let mut obu = rng.random_range(0..cfg.num_obus);
                while obu == owner {
                    obu = rng.random_range(0..cfg.num_obus);
                }
                break (t, obu);
            };
            queries.push(QueryEvent {
                epoch,
                round,
                obu,
                target,
            });
        }
    }

    Workload {
        vehicles,
        targets,
        queries,
    }
}
