//! Simulation outputs: per-flow records, FCT percentiles split at a byte
//! threshold, sampled downlink utilization, and the schedule-update log.

use serde::{Deserialize, Serialize};

/// One flow's fate. `completion_ns` is `None` for flows still unfinished
/// when the simulation horizon ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub size_bytes: u64,
    pub arrival_ns: u64,
    pub completion_ns: Option<u64>,
}

/// Nearest-rank percentiles over completed flows of one size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FctStats {
    pub count: u64,
    pub completed: u64,
    pub p50_ns: Option<u64>,
    pub p99_ns: Option<u64>,
}

/// Downlink utilization of one node over one sample interval (fraction
/// of `c * d_hat`, counting bytes delivered to their final destination).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilSample {
    pub time_ns: u64,
    pub node: u32,
    pub utilization: f64,
}

/// One installed schedule swap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub trigger_ns: u64,
    pub install_ns: u64,
    /// FNV-1a digest of the installed schedule's JSON form.
    pub schedule_digest: u64,
}

/// Estimation state at one round-robin phase boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSnapshot {
    pub boundary_ns: u64,
    /// Digest of each node's EWMA matrix.
    pub node_digests: Vec<u64>,
    pub all_identical: bool,
}

/// Complete simulation report. Serializes deterministically, so two runs
/// with the same config compare byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub flows: Vec<FlowRecord>,
    pub short_fct: FctStats,
    pub long_fct: FctStats,
    pub fct_split_bytes: u64,
    pub utilization: Vec<UtilSample>,
    pub mean_utilization: f64,
    pub updates: Vec<UpdateEvent>,
    pub periods: Vec<PeriodSnapshot>,
    pub injected_bytes: u64,
    pub delivered_bytes: u64,
    pub dropped_packets: u64,
}

impl SimReport {
    /// flows.csv: `id,src,dst,size_bytes,arrival_ns,completion_ns`, with
    /// -1 marking unfinished flows.
    pub fn flows_csv(&self) -> String {
        let mut out = String::from("id,src,dst,size_bytes,arrival_ns,completion_ns\n");
        for f in &self.flows {
            let completion = f
                .completion_ns
                .map_or_else(|| "-1".to_string(), |c| c.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                f.id, f.src, f.dst, f.size_bytes, f.arrival_ns, completion
            ));
        }
        out
    }

    /// utilization.csv: `time_ns,node,utilization`.
    pub fn utilization_csv(&self) -> String {
        let mut out = String::from("time_ns,node,utilization\n");
        for s in &self.utilization {
            out.push_str(&format!("{},{},{}\n", s.time_ns, s.node, s.utilization));
        }
        out
    }

    /// updates.csv: `trigger_ns,install_ns`.
    pub fn updates_csv(&self) -> String {
        let mut out = String::from("trigger_ns,install_ns\n");
        for u in &self.updates {
            out.push_str(&format!("{},{}\n", u.trigger_ns, u.install_ns));
        }
        out
    }

    /// summary.json body.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            flows_total: usize,
            flows_completed: u64,
            fct_split_bytes: u64,
            short: &'a FctStats,
            long: &'a FctStats,
            mean_utilization: f64,
            injected_bytes: u64,
            delivered_bytes: u64,
            dropped_packets: u64,
            schedule_updates: usize,
        }
        serde_json::to_string_pretty(&Summary {
            flows_total: self.flows.len(),
            flows_completed: self.short_fct.completed + self.long_fct.completed,
            fct_split_bytes: self.fct_split_bytes,
            short: &self.short_fct,
            long: &self.long_fct,
            mean_utilization: self.mean_utilization,
            injected_bytes: self.injected_bytes,
            delivered_bytes: self.delivered_bytes,
            dropped_packets: self.dropped_packets,
            schedule_updates: self.updates.len(),
        })
        .expect("summary serializes")
    }
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Computes the FCT stats of one size class from `(record, fct)` pairs.
pub fn fct_stats(records: &[FlowRecord]) -> FctStats {
    let mut fcts: Vec<u64> = records
        .iter()
        .filter_map(|r| r.completion_ns.map(|c| c - r.arrival_ns))
        .collect();
    fcts.sort_unstable();
    FctStats {
        count: records.len() as u64,
        completed: fcts.len() as u64,
        p50_ns: percentile(&fcts, 50.0),
        p99_ns: percentile(&fcts, 99.0),
    }
}
