use serde::{Deserialize, Serialize};

use super::SimError;
use crate::crypto::Backend;

fn default_pseudonyms_per_vehicle() -> usize {
    3
}
fn default_rounds_per_epoch() -> usize {
    4
}
fn default_alpha() -> f64 {
    1.0
}
fn default_prior() -> u64 {
    1
}
fn default_availability() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// Simulation parameters. Every random choice is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub k: usize,
    pub num_rsus: usize,
    /// Vehicles that send queries (never revoked).
    pub num_obus: usize,
    /// Revoked pseudonyms in the tree.
    pub num_revoked: usize,
    pub epochs: usize,
    pub queries_per_epoch: usize,
    /// Zipf exponent over query targets; 0 is uniform.
    pub zipf_exponent: f64,
    pub public_vehicle_fraction: f64,
    pub public_query_multiplier: f64,
    pub trust_threshold: usize,
    #[serde(default)]
    pub cheater_rsu_ids: Vec<u32>,
    pub max_root_age: u64,
    #[serde(default = "default_pseudonyms_per_vehicle")]
    pub pseudonyms_per_vehicle: usize,
    #[serde(default = "default_rounds_per_epoch")]
    pub rounds_per_epoch: usize,
    #[serde(default = "default_alpha")]
    pub ewma_alpha: f64,
    /// Pseudo-count the TTP adds to every leaf's reported frequency.
    #[serde(default = "default_prior")]
    pub frequency_prior: u64,
    /// Probability that an OBU has an RSU in range during a round.
    #[serde(default = "default_availability")]
    pub rsu_availability: f64,
    #[serde(default)]
    pub backend: Backend,
    /// Check protocol invariants after every event and fail the run on violation.
    #[serde(default = "default_true")]
    pub assert_invariants: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            k: 4,
            num_rsus: 5,
            num_obus: 400,
            num_revoked: 1000,
            epochs: 10,
            queries_per_epoch: 4000,
            zipf_exponent: 1.2,
            public_vehicle_fraction: 0.1,
            public_query_multiplier: 4.0,
            trust_threshold: 3,
            cheater_rsu_ids: Vec::new(),
            max_root_age: 1,
            pseudonyms_per_vehicle: default_pseudonyms_per_vehicle(),
            rounds_per_epoch: default_rounds_per_epoch(),
            ewma_alpha: default_alpha(),
            frequency_prior: default_prior(),
            rsu_availability: default_availability(),
            backend: Backend::Hash,
            assert_invariants: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        for (name, v) in [
            ("num_rsus", self.num_rsus),
            ("num_obus", self.num_obus),
            ("num_revoked", self.num_revoked),
            ("epochs", self.epochs),
            ("queries_per_epoch", self.queries_per_epoch),
            ("trust_threshold", self.trust_threshold),
            ("pseudonyms_per_vehicle", self.pseudonyms_per_vehicle),
            ("rounds_per_epoch", self.rounds_per_epoch),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(2..=255).contains(&self.k) {
            return bad(format!("k = {} out of range 2..=255", self.k));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad(format!(
                "zipf_exponent {} must be finite and >= 0",
                self.zipf_exponent
            ));
        }
        if !(0.0..=1.0).contains(&self.public_vehicle_fraction) {
            return bad(format!(
                "public_vehicle_fraction {} not in [0, 1]",
                self.public_vehicle_fraction
            ));
        }
        if !(self.public_query_multiplier >= 1.0 && self.public_query_multiplier.is_finite()) {
            return bad(format!(
                "public_query_multiplier {} must be >= 1",
                self.public_query_multiplier
            ));
        }
        if !(self.ewma_alpha > 0.0 && self.ewma_alpha <= 1.0) {
            return bad(format!("ewma_alpha {} not in (0, 1]", self.ewma_alpha));
        }
        if !(0.0..=1.0).contains(&self.rsu_availability) {
            return bad(format!(
                "rsu_availability {} not in [0, 1]",
                self.rsu_availability
            ));
        }
        if let Some(id) = self
            .cheater_rsu_ids
            .iter()
            .find(|&&id| id as usize >= self.num_rsus)
        {
            return bad(format!("cheater RSU id {id} >= num_rsus {}", self.num_rsus));
        }
        let mut ids = self.cheater_rsu_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.cheater_rsu_ids.len() {
            return bad("cheater_rsu_ids contains duplicates".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_fields() {
        type Mutation = Box<dyn Fn(&mut SimConfig)>;
        let cases: Vec<Mutation> = vec![
            Box::new(|c| c.num_rsus = 0),
            Box::new(|c| c.k = 1),
            Box::new(|c| c.zipf_exponent = -0.5),
            Box::new(|c| c.public_vehicle_fraction = 1.5),
            Box::new(|c| c.public_query_multiplier = 0.5),
            Box::new(|c| c.trust_threshold = 0),
            Box::new(|c| c.cheater_rsu_ids = vec![9]),
            Box::new(|c| c.cheater_rsu_ids = vec![1, 1]),
            Box::new(|c| c.ewma_alpha = 0.0),
        ];
        for mutate in cases {
            let mut c = SimConfig::default();
            mutate(&mut c);
            assert!(matches!(c.validate(), Err(SimError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            seed = 7
            k = 3
            num_rsus = 5
            num_obus = 50
            num_revoked = 100
            epochs = 3
            queries_per_epoch = 200
            zipf_exponent = 1.0
            public_vehicle_fraction = 0.2
            public_query_multiplier = 5.0
            trust_threshold = 3
            cheater_rsu_ids = [4]
            max_root_age = 1
        "#;
        let cfg = SimConfig::from_toml(text).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.cheater_rsu_ids, vec![4]);
        assert_eq!(cfg.pseudonyms_per_vehicle, 3);
        assert_eq!(cfg.backend, Backend::Hash);
        assert!(SimConfig::from_toml("seed = 1\nbogus = 2").is_err());
    }
}
