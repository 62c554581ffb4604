use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// Simulation epoch index, from 0.
    pub epoch: usize,
    /// Tree epoch the RSUs served during this simulation epoch.
    pub tree_epoch: u64,
    pub leaf_count: usize,
    pub weighted_path_length: u64,
    pub queries: u64,
    pub proof_responses: u64,
    pub ok_responses: u64,
    pub huffman_mean_depth: f64,
    pub baseline_mean_depth: f64,
    pub impeachments_accepted: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub k: usize,
    pub zipf_exponent: f64,
    pub num_revoked: usize,
    pub epochs: usize,
    pub queries_generated: u64,
    pub cache_hits_revoked: u64,
    pub cache_hits_reliable: u64,
    pub queries_sent: u64,
    pub reasks: u64,
    pub proof_responses: u64,
    pub ok_responses: u64,
    pub weighted_mean_proof_depth: f64,
    pub baseline_mean_proof_depth: f64,
    /// Huffman over baseline mean depth; below 1 means shorter proofs.
    pub depth_ratio: f64,
    pub proof_bytes_mean: f64,
    pub baseline_proof_bytes_mean: f64,
    pub impeachments_emitted: u64,
    pub impeachments_accepted: u64,
    pub impeachments_dismissed: u64,
    pub cheaters_revoked: u64,
    pub honest_rsus_revoked: u64,
    /// Simulation epoch in which the first cheater was revoked.
    pub first_cheater_revoked_epoch: Option<usize>,
    /// Unconfirmed 'OK' answers the OBU had to trust momentarily.
    pub provisional_accepts: u64,
    /// Checks made with no RSU in range.
    pub unreachable_accepts: u64,
    pub invalid_ok_discarded: u64,
    pub proofs_rejected: u64,
    pub messages_sent: u64,
    pub bytes_sent: u64,
    pub final_tree_epoch: u64,
    pub series: Vec<EpochMetrics>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

impl MetricsReport {
    /// `name<TAB>value` per line; the series is folded into one comma-separated line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |name: &str, value: String| {
            let _ = writeln!(out, "{name}\t{value}");
        };
        line("seed", self.seed.to_string());
        line("k", self.k.to_string());
        line("zipf_exponent", fmt_f64(self.zipf_exponent));
        line("num_revoked", self.num_revoked.to_string());
        line("epochs", self.epochs.to_string());
        line("queries_generated", self.queries_generated.to_string());
        line("cache_hits_revoked", self.cache_hits_revoked.to_string());
        line("cache_hits_reliable", self.cache_hits_reliable.to_string());
        line("queries_sent", self.queries_sent.to_string());
        line("reasks", self.reasks.to_string());
        line("proof_responses", self.proof_responses.to_string());
        line("ok_responses", self.ok_responses.to_string());
        line(
            "weighted_mean_proof_depth",
            fmt_f64(self.weighted_mean_proof_depth),
        );
        line(
            "baseline_mean_proof_depth",
            fmt_f64(self.baseline_mean_proof_depth),
        );
        line("depth_ratio", fmt_f64(self.depth_ratio));
        line("proof_bytes_mean", fmt_f64(self.proof_bytes_mean));
        line(
            "baseline_proof_bytes_mean",
            fmt_f64(self.baseline_proof_bytes_mean),
        );
        line(
            "impeachments_emitted",
            self.impeachments_emitted.to_string(),
        );
        line(
            "impeachments_accepted",
            self.impeachments_accepted.to_string(),
        );
        line(
            "impeachments_dismissed",
            self.impeachments_dismissed.to_string(),
        );
        line("cheaters_revoked", self.cheaters_revoked.to_string());
        line("honest_rsus_revoked", self.honest_rsus_revoked.to_string());
        line(
            "first_cheater_revoked_epoch",
            self.first_cheater_revoked_epoch
                .map_or_else(|| "none".to_string(), |e| e.to_string()),
        );
        line("provisional_accepts", self.provisional_accepts.to_string());
        line("unreachable_accepts", self.unreachable_accepts.to_string());
        line(
            "invalid_ok_discarded",
            self.invalid_ok_discarded.to_string(),
        );
        line("proofs_rejected", self.proofs_rejected.to_string());
        line("messages_sent", self.messages_sent.to_string());
        line("bytes_sent", self.bytes_sent.to_string());
        line("final_tree_epoch", self.final_tree_epoch.to_string());
        let wpl: Vec<String> = self
            .series
            .iter()
            .map(|e| e.weighted_path_length.to_string())
            .collect();
        line("weighted_path_length_series", wpl.join(","));
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from(
            "epoch,tree_epoch,leaf_count,weighted_path_length,queries,proof_responses,ok_responses,\
             huffman_mean_depth,baseline_mean_depth,impeachments_accepted\n",
        );
        for e in &self.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                e.epoch,
                e.tree_epoch,
                e.leaf_count,
                e.weighted_path_length,
                e.queries,
                e.proof_responses,
                e.ok_responses,
                fmt_f64(e.huffman_mean_depth),
                fmt_f64(e.baseline_mean_depth),
                e.impeachments_accepted
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_is_tab_separated_and_json_round_trips() {
        let report = MetricsReport {
            k: 4,
            depth_ratio: 0.5,
            series: vec![EpochMetrics {
                epoch: 0,
                weighted_path_length: 12,
                ..Default::default()
            }],
            ..Default::default()
        };
        let text = report.to_text();
        assert!(text.lines().all(|l| l.split('\t').count() == 2));
        assert!(text.contains("depth_ratio\t0.500000\n"));
        assert!(text.contains("first_cheater_revoked_epoch\tnone\n"));
        assert!(text.contains("weighted_path_length_series\t12\n"));
        let back: MetricsReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert_eq!(report.series_csv().lines().count(), 2);
    }
}
