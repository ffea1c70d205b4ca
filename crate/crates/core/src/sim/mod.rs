//! Time-slotted packet-level simulator of a periodic circuit-switched
//! fabric.
//!
//! Nodes hold per-destination virtual output queues; each slot, every
//! plane's active circuit drains packets round-robin across the flows
//! queued for the circuit's destination (direct mode) or across relay
//! and local queues (VLB mode). Transmission pauses during the
//! reconfiguration tail of every slot. All randomness flows from the
//! config seed through named sub-streams, so identical configs produce
//! byte-identical reports.

mod engine;
mod estimation;
mod report;
mod workload;

pub use estimation::{quantize_counters, EstimateArray, EstimationConfig};
pub use report::{FctStats, FlowRecord, PeriodSnapshot, SimReport, UpdateEvent, UtilSample};
pub use workload::{generate_workload, parse_cdf_file, FlowSpec, FlowTrace, SizeDist};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{MatrixError, SquareMatrix, TrafficMatrix};
use crate::schedule::{
    build_greedy_schedule, build_oblivious_schedule, build_vermilion_schedule, PeriodicSchedule,
    ScheduleError,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config:\n  {}", .issues.join("\n  "))]
    ConfigInvalid { issues: Vec<String> },
    #[error("bad flow-size distribution: {0}")]
    BadDistributionFile(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// How packets travel: directly on the source-destination circuit, or
/// via a uniformly random relay in two hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Routing {
    Direct,
    Vlb,
}

/// Destination pattern for generated flows.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    /// Uniform random destination per flow.
    Uniform,
    /// Fixed ring permutation: flows from `u` target `(u+1) mod n`.
    Permutation,
    /// Destinations sampled proportionally to the matrix row.
    Matrix(SquareMatrix),
}

/// Where the schedule comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// An explicit, already-built schedule.
    Fixed(PeriodicSchedule),
    /// Traffic-aware schedule built once from the pattern's mean demand.
    Vermilion { k: u32 },
    /// Rotation-based oblivious baseline.
    Rotornet,
    /// Greedy max-weight-matching baseline.
    Greedy { slots: u64 },
    /// Traffic-aware schedule recomputed online from gathered estimates,
    /// bootstrapped from a zero matrix. Requires estimation.
    Adaptive { k: u32 },
}

/// Full simulation configuration. Mirrors the flat key-value config file
/// accepted by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nodes: u32,
    pub degree: u32,
    /// Physical link capacity, bits/second.
    pub capacity_bps: f64,
    pub packet_bytes: u32,
    pub routing: Routing,
    /// Offered load as a fraction of `c * d_hat` per node; 0 permitted
    /// (empty workload).
    pub load: f64,
    pub flow_sizes: SizeDist,
    pub pattern: Pattern,
    pub duration_ns: u64,
    pub seed: u64,
    pub schedule: ScheduleSpec,
    pub slot_ns: u64,
    pub reconfig_ns: u64,
    pub estimation: Option<EstimationConfig>,
    /// Total relayed bytes a node may buffer before tail drop (VLB).
    pub relay_buffer_bytes: u64,
    /// Flows with at most this many bytes count as short in FCT stats.
    pub fct_split_bytes: u64,
    pub util_sample_ns: u64,
}

impl SimConfig {
    /// Usable payload per slot per circuit, in bytes.
    pub fn slot_payload_bytes(&self) -> f64 {
        self.capacity_bps * (self.slot_ns - self.reconfig_ns) as f64 * 1e-9 / 8.0
    }

    /// Validates the configuration, returning all violations found.
    pub fn check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.nodes < 2 {
            issues.push(format!("n must be at least 2, got {}", self.nodes));
        }
        if self.degree < 1 {
            issues.push("degree must be at least 1".into());
        }
        if !(self.capacity_bps > 0.0) {
            issues.push(format!("capacity_bps must be positive, got {}", self.capacity_bps));
        }
        if self.packet_bytes == 0 {
            issues.push("packet_bytes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.load) {
            issues.push(format!("load must lie in [0, 1], got {}", self.load));
        }
        if self.reconfig_ns >= self.slot_ns {
            issues.push(format!(
                "reconfig_ns {} must be shorter than slot_ns {}",
                self.reconfig_ns, self.slot_ns
            ));
        } else if (self.packet_bytes as f64) > self.slot_payload_bytes() {
            issues.push(format!(
                "packet of {} bytes does not fit the {:.0}-byte slot payload",
                self.packet_bytes,
                self.slot_payload_bytes()
            ));
        }
        if self.duration_ns < self.slot_ns {
            issues.push("duration shorter than one slot".into());
        }
        if self.util_sample_ns == 0 {
            issues.push("util_sample_ns must be positive".into());
        }
        if let Pattern::Matrix(m) = &self.pattern {
            if m.n() != self.nodes as usize {
                issues.push(format!(
                    "pattern matrix is {}x{} but n = {}",
                    m.n(),
                    m.n(),
                    self.nodes
                ));
            }
        }
        if let Some(est) = &self.estimation {
            issues.extend(est.check());
            match &self.schedule {
                ScheduleSpec::Vermilion { .. } | ScheduleSpec::Adaptive { .. } => {}
                ScheduleSpec::Fixed(s) if s.round_robin_end_slot().is_some() => {}
                _ => issues.push(
                    "estimation requires a schedule with a round-robin phase (vermilion/adaptive)"
                        .into(),
                ),
            }
            let payload = self.slot_payload_bytes();
            if 2.0 * self.nodes as f64 > payload {
                issues.push(format!(
                    "estimate row of {} bytes exceeds the slot payload {:.0}",
                    2 * self.nodes,
                    payload
                ));
            }
        }
        if matches!(self.schedule, ScheduleSpec::Adaptive { .. }) && self.estimation.is_none() {
            issues.push("adaptive schedule requires estimation".into());
        }
        if let ScheduleSpec::Fixed(s) = &self.schedule {
            let sched_issues = s.check();
            if !sched_issues.is_empty() {
                issues.push(format!("fixed schedule invalid: {}", sched_issues.join("; ")));
            }
            if s.n != self.nodes || s.degree != self.degree {
                issues.push("fixed schedule shape does not match n/degree".into());
            }
        }
        issues
    }

    fn validated(&self) -> Result<(), SimError> {
        let issues = self.check();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(SimError::ConfigInvalid { issues })
        }
    }

    /// Expected demand matrix of the workload pattern, in bits/second.
    /// Used to build the static traffic-aware and greedy schedules.
    pub fn mean_demand(&self) -> Result<TrafficMatrix, SimError> {
        let n = self.nodes as usize;
        let per_node = self.load * self.capacity_bps * self.degree as f64;
        let raw = match &self.pattern {
            Pattern::Permutation => crate::matrix::gen::ring(n, per_node),
            Pattern::Uniform => crate::matrix::gen::uniform(n, per_node / (n as f64 - 1.0)),
            Pattern::Matrix(m) => {
                let mut raw = SquareMatrix::zeros(n);
                for u in 0..n {
                    let row: f64 = (0..n).filter(|&v| v != u).map(|v| m.get(u, v)).sum();
                    if row > 0.0 {
                        for v in 0..n {
                            if v != u {
                                raw.set(u, v, per_node * m.get(u, v) / row);
                            }
                        }
                    }
                }
                raw
            }
        };
        Ok(crate::matrix::validate_hose(
            raw,
            self.capacity_bps,
            self.degree,
        )?)
    }

    /// Resolves the schedule spec into a concrete schedule, plus whether
    /// the adaptive loop should recompute it online.
    pub fn resolve_schedule(&self) -> Result<(PeriodicSchedule, bool), SimError> {
        match &self.schedule {
            ScheduleSpec::Fixed(s) => Ok((s.clone(), false)),
            ScheduleSpec::Rotornet => {
                let (s, _) = build_oblivious_schedule(
                    self.nodes as usize,
                    self.degree,
                    self.slot_ns,
                    self.reconfig_ns,
                )?;
                Ok((s, false))
            }
            ScheduleSpec::Vermilion { k } => {
                let demand = self.mean_demand()?;
                let (s, _) = build_vermilion_schedule(
                    &demand,
                    *k,
                    self.degree,
                    self.slot_ns,
                    self.reconfig_ns,
                    self.seed,
                )?;
                Ok((s, false))
            }
            ScheduleSpec::Greedy { slots } => {
                let demand = self.mean_demand()?;
                let s = build_greedy_schedule(
                    &demand,
                    self.degree,
                    *slots,
                    self.slot_ns,
                    self.reconfig_ns,
                )?;
                Ok((s, false))
            }
            ScheduleSpec::Adaptive { k } => {
                let zero = crate::matrix::NormalizedMatrix::from_raw(&SquareMatrix::zeros(
                    self.nodes as usize,
                ));
                let (s, _) = crate::schedule::vermilion_from_normalized(
                    &zero,
                    *k,
                    self.degree,
                    self.slot_ns,
                    self.reconfig_ns,
                    self.seed,
                )?;
                Ok((s, true))
            }
        }
    }
}

/// Default simulation parameters: 16 nodes of degree 4 at 25 Gb/s,
/// 1500-byte packets, slot 9x a 0.5us reconfiguration delay.
impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 16,
            degree: 4,
            capacity_bps: 25e9,
            packet_bytes: 1500,
            routing: Routing::Direct,
            load: 0.1,
            flow_sizes: SizeDist::Synthetic,
            pattern: Pattern::Permutation,
            duration_ns: 10_000_000,
            seed: 0,
            schedule: ScheduleSpec::Vermilion { k: 3 },
            slot_ns: 4500,
            reconfig_ns: 500,
            estimation: None,
            relay_buffer_bytes: 4_000_000,
            fct_split_bytes: 1_000_000,
            util_sample_ns: 10_000,
        }
    }
}

/// Parses the flat `key = value` config format. Unknown keys are
/// rejected by name. Relative file paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &std::path::Path) -> Result<SimConfig, SimError> {
    let mut cfg = SimConfig::default();
    let mut est_on = false;
    let mut est = EstimationConfig::default();
    let mut k = 3u32;
    let mut greedy_slots: Option<u64> = None;
    let mut schedule_word: String = "vermilion".into();
    let bad = |line: usize, msg: String| SimError::ConfigInvalid {
        issues: vec![format!("line {line}: {msg}")],
    };
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(idx + 1, format!("expected 'key = value', got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_num = |what: &str| -> Result<f64, SimError> {
            value
                .parse::<f64>()
                .map_err(|e| bad(idx + 1, format!("{what}: {e}")))
        };
        match key {
            "n" => cfg.nodes = parse_num("n")? as u32,
            "degree" => cfg.degree = parse_num("degree")? as u32,
            "capacity_bps" => cfg.capacity_bps = parse_num("capacity_bps")?,
            "packet_bytes" => cfg.packet_bytes = parse_num("packet_bytes")? as u32,
            "routing" => {
                cfg.routing = match value {
                    "direct" => Routing::Direct,
                    "vlb" => Routing::Vlb,
                    other => return Err(bad(idx + 1, format!("unknown routing {other:?}"))),
                }
            }
            "load" => cfg.load = parse_num("load")?,
            "flow_size" => {
                cfg.flow_sizes = if value == "synthetic" {
                    SizeDist::Synthetic
                } else if let Some(size) = value.strip_prefix("const:") {
                    SizeDist::Constant(size.parse().map_err(|e| {
                        bad(idx + 1, format!("flow_size const: {e}"))
                    })?)
                } else if let Some(path) = value.strip_prefix("cdf:") {
                    let full = resolve(base_dir, path);
                    let text = std::fs::read_to_string(&full).map_err(|e| {
                        SimError::BadDistributionFile(format!("{}: {e}", full.display()))
                    })?;
                    parse_cdf_file(&text)?
                } else {
                    return Err(bad(idx + 1, format!("unknown flow_size {value:?}")));
                }
            }
            "pattern" => {
                cfg.pattern = if value == "uniform" {
                    Pattern::Uniform
                } else if value == "permutation" {
                    Pattern::Permutation
                } else if let Some(path) = value.strip_prefix("matrix:") {
                    let full = resolve(base_dir, path);
                    let m = crate::matrix::load_traffic_matrix(&full)?;
                    Pattern::Matrix(m.entries().clone())
                } else {
                    return Err(bad(idx + 1, format!("unknown pattern {value:?}")));
                }
            }
            "duration_ns" => cfg.duration_ns = parse_num("duration_ns")? as u64,
            "seed" => cfg.seed = parse_num("seed")? as u64,
            "schedule" => schedule_word = value.to_string(),
            "k" => k = parse_num("k")? as u32,
            "slot_ns" => cfg.slot_ns = parse_num("slot_ns")? as u64,
            "reconfig_ns" => cfg.reconfig_ns = parse_num("reconfig_ns")? as u64,
            "greedy_slots" => greedy_slots = Some(parse_num("greedy_slots")? as u64),
            "estimation" => {
                est_on = match value {
                    "on" => true,
                    "off" => false,
                    other => return Err(bad(idx + 1, format!("estimation must be on/off, got {other:?}"))),
                }
            }
            "ewma_alpha" => est.ewma_alpha = parse_num("ewma_alpha")?,
            "recompute_latency_ns" => est.recompute_latency_ns = parse_num("recompute_latency_ns")? as u64,
            "counter_bits" => est.counter_bits = parse_num("counter_bits")? as u8,
            "relay_buffer_bytes" => cfg.relay_buffer_bytes = parse_num("relay_buffer_bytes")? as u64,
            "fct_split_bytes" => cfg.fct_split_bytes = parse_num("fct_split_bytes")? as u64,
            "util_sample_ns" => cfg.util_sample_ns = parse_num("util_sample_ns")? as u64,
            other => {
                return Err(bad(idx + 1, format!("unknown config key {other:?}")));
            }
        }
    }
    cfg.schedule = if schedule_word == "vermilion" {
        ScheduleSpec::Vermilion { k }
    } else if schedule_word == "rotornet" {
        ScheduleSpec::Rotornet
    } else if schedule_word == "greedy" {
        let default_slots =
            (k as u64 * cfg.nodes as u64 + cfg.degree as u64 - 1) / cfg.degree as u64;
        ScheduleSpec::Greedy {
            slots: greedy_slots.unwrap_or(default_slots),
        }
    } else if schedule_word == "adaptive" {
        ScheduleSpec::Adaptive { k }
    } else if let Some(path) = schedule_word.strip_prefix("file:") {
        let full = resolve(base_dir, path);
        let text = std::fs::read_to_string(&full).map_err(|e| SimError::ConfigInvalid {
            issues: vec![format!("schedule file {}: {e}", full.display())],
        })?;
        ScheduleSpec::Fixed(PeriodicSchedule::from_json(&text)?)
    } else {
        return Err(SimError::ConfigInvalid {
            issues: vec![format!("unknown schedule {schedule_word:?}")],
        });
    };
    cfg.estimation = est_on.then_some(est);
    Ok(cfg)
}

fn resolve(base: &std::path::Path, p: &str) -> PathBuf {
    let pb = PathBuf::from(p);
    if pb.is_absolute() {
        pb
    } else {
        base.join(pb)
    }
}

/// Generates the workload and runs the simulation.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validated()?;
    let trace = generate_workload(cfg)?;
    engine::run(cfg, &trace)
}

/// Runs the simulation on an explicit flow trace (replay or tests).
pub fn run_with_trace(cfg: &SimConfig, trace: &[FlowSpec]) -> Result<SimReport, SimError> {
    cfg.validated()?;
    engine::run(cfg, trace)
}
