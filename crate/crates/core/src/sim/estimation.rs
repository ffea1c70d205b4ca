//! Distributed traffic estimation.
//!
//! Each node counts the bytes arriving into its per-destination VOQs.
//! At the start of every round-robin phase the counters are snapshotted
//! into a quantized row and reset; during the phase each node sends its
//! snapshot row to the peer its round-robin circuit points at, so after
//! the `n-1` rotations every node holds the same n-row matrix. The
//! gathered matrix is blended into a per-node EWMA view, which feeds the
//! asynchronous schedule recompute; a finished recompute is installed at
//! the next round-robin phase boundary.

use serde::{Deserialize, Serialize};

use crate::matrix::SquareMatrix;

/// Estimation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Weight on newly gathered data in the EWMA blend.
    pub ewma_alpha: f64,
    /// Wall-clock delay between triggering a schedule recompute and its
    /// result becoming available for installation.
    pub recompute_latency_ns: u64,
    /// Bits per quantized counter entry (saturating); 16 by default.
    pub counter_bits: u8,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            ewma_alpha: 0.5,
            recompute_latency_ns: 59_000,
            counter_bits: 16,
        }
    }
}

impl EstimationConfig {
    pub fn check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.ewma_alpha > 0.0 && self.ewma_alpha <= 1.0) {
            issues.push(format!("ewma_alpha must lie in (0, 1], got {}", self.ewma_alpha));
        }
        if self.counter_bits == 0 || self.counter_bits > 16 {
            issues.push(format!("counter_bits must lie in 1..=16, got {}", self.counter_bits));
        }
        issues
    }

    pub fn max_counter(&self) -> u16 {
        if self.counter_bits >= 16 {
            u16::MAX
        } else {
            ((1u32 << self.counter_bits) - 1) as u16
        }
    }
}

/// One node's quantized demand row: per-destination saturating counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimateArray {
    pub owner: u32,
    pub entries: Vec<u16>,
}

/// Quantizes per-destination VOQ byte counts: each entry becomes
/// `floor(bits * (k-1) / (k * c * slot))`, saturating at the counter
/// maximum. Sub-slot demand quantizes to zero.
pub fn quantize_counters(
    owner: u32,
    voq_bytes: &[u64],
    k: u32,
    capacity_bps: f64,
    slot_ns: u64,
    max_value: u16,
) -> EstimateArray {
    let slot_bits = capacity_bps * slot_ns as f64 * 1e-9;
    let factor = (k as f64 - 1.0) / (k as f64 * slot_bits);
    let entries = voq_bytes
        .iter()
        .map(|&bytes| {
            let q = (bytes as f64 * 8.0 * factor).floor();
            if q >= max_value as f64 {
                max_value
            } else {
                q as u16
            }
        })
        .collect();
    EstimateArray { owner, entries }
}

/// Per-node estimation state inside the engine.
#[derive(Debug, Clone)]
pub struct EstimationState {
    pub cfg: EstimationConfig,
    /// Bytes received by each (node, dst) VOQ since the last snapshot.
    pub counters: Vec<Vec<u64>>,
    /// Rows being disseminated this phase, one per owner node.
    pub snapshot: Vec<EstimateArray>,
    /// gathered[node][owner] = row received from `owner` (None until it
    /// arrives this period).
    pub gathered: Vec<Vec<Option<EstimateArray>>>,
    /// Per-node EWMA matrices; initialized on first gather.
    pub ewma: Vec<Option<SquareMatrix>>,
}

impl EstimationState {
    pub fn new(n: usize, cfg: EstimationConfig) -> EstimationState {
        EstimationState {
            cfg,
            counters: vec![vec![0; n]; n],
            snapshot: (0..n)
                .map(|u| EstimateArray {
                    owner: u as u32,
                    entries: vec![0; n],
                })
                .collect(),
            gathered: vec![vec![None; n]; n],
            ewma: vec![None; n],
        }
    }

    pub fn record_arrival(&mut self, src: usize, dst: usize, bytes: u64) {
        self.counters[src][dst] += bytes;
    }

    /// Phase start: snapshot and reset every node's counters, and seed
    /// each node's gathered set with its own row.
    pub fn begin_phase(&mut self, k: u32, capacity_bps: f64, slot_ns: u64) {
        let n = self.counters.len();
        for u in 0..n {
            let row = quantize_counters(
                u as u32,
                &self.counters[u],
                k,
                capacity_bps,
                slot_ns,
                self.cfg.max_counter(),
            );
            self.counters[u].iter_mut().for_each(|c| *c = 0);
            self.snapshot[u] = row.clone();
            self.gathered[u] = vec![None; n];
            self.gathered[u][u] = Some(row);
        }
    }

    /// A round-robin circuit `owner -> receiver` delivers the owner's
    /// snapshot row.
    pub fn deliver_row(&mut self, owner: usize, receiver: usize) {
        self.gathered[receiver][owner] = Some(self.snapshot[owner].clone());
    }

    /// Phase end: every node folds its gathered matrix into its EWMA
    /// view. Returns per-node digests of the EWMA matrices (for the
    /// period log) and whether all nodes agree bit-for-bit.
    pub fn end_phase(&mut self) -> (Vec<u64>, bool) {
        let n = self.counters.len();
        let alpha = self.cfg.ewma_alpha;
        for node in 0..n {
            let mut gathered = SquareMatrix::zeros(n);
            for owner in 0..n {
                let row = self.gathered[node][owner]
                    .as_ref()
                    .expect("round-robin phase disseminates every row");
                for (dst, &v) in row.entries.iter().enumerate() {
                    gathered.set(owner, dst, v as f64);
                }
            }
            self.ewma[node] = Some(match self.ewma[node].take() {
                None => gathered,
                Some(prev) => {
                    let mut blended = SquareMatrix::zeros(n);
                    for i in 0..n {
                        for j in 0..n {
                            blended.set(
                                i,
                                j,
                                alpha * gathered.get(i, j) + (1.0 - alpha) * prev.get(i, j),
                            );
                        }
                    }
                    blended
                }
            });
        }
        let digests: Vec<u64> = self
            .ewma
            .iter()
            .map(|m| matrix_digest(m.as_ref().unwrap()))
            .collect();
        let identical = digests.windows(2).all(|w| w[0] == w[1]);
        (digests, identical)
    }

    /// The EWMA view schedule recomputes run from (all nodes agree for
    /// synchronized dissemination, so node 0 stands in for everyone).
    pub fn view(&self) -> Option<&SquareMatrix> {
        self.ewma[0].as_ref()
    }
}

/// FNV-1a over the exact bit patterns of the matrix entries.
pub fn matrix_digest(m: &SquareMatrix) -> u64 {
    let mut bytes = Vec::with_capacity(m.entries().len() * 8);
    for v in m.entries() {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    crate::rng::fnv1a(&bytes)
}
