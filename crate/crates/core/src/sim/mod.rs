//! Deterministic simulator: seeded workloads, synchronous rounds inside epochs, and
//! a balanced-tree baseline to compare proof depths against.

mod baseline;
mod config;
mod metrics;
mod runner;
mod workload;

use thiserror::Error;

pub use baseline::{balanced_depth, BalancedTree};
pub use config::SimConfig;
pub use metrics::{EpochMetrics, MetricsReport};
pub use runner::{bench_csv, run_bench, run_simulation, BenchRow};
pub use workload::{gen_workload, QueryEvent, Target, Vehicle, Workload};

use crate::protocol::ProtocolError;
use crate::wire::DecodeError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("message failed to decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SimConfig {
        SimConfig {
            num_obus: 40,
            num_revoked: 60,
            epochs: 3,
            queries_per_epoch: 300,
            ..SimConfig::default()
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = run_simulation(&quick()).unwrap();
        let b = run_simulation(&quick()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.series.len(), 3);
    }

    #[test]
    fn honest_network_never_impeaches() {
        let r = run_simulation(&quick()).unwrap();
        assert_eq!(r.impeachments_emitted, 0);
        assert_eq!(r.impeachments_accepted, 0);
        assert!(r.proof_responses > 0 && r.ok_responses > 0);
    }

    #[test]
    fn cheater_is_caught() {
        let cfg = SimConfig {
            cheater_rsu_ids: vec![2],
            ..quick()
        };
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.cheaters_revoked, 1);
        assert_eq!(r.honest_rsus_revoked, 0);
        assert!(r.impeachments_accepted >= 1);
    }

    #[test]
    fn unreachable_rsus_count_as_provisional() {
        let cfg = SimConfig {
            rsu_availability: 0.0,
            ..quick()
        };
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.queries_sent, 0);
        assert_eq!(r.unreachable_accepts, r.queries_generated);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SimConfig {
            num_rsus: 0,
            ..quick()
        };
        assert!(matches!(run_simulation(&cfg), Err(SimError::Config(_))));
    }
}
