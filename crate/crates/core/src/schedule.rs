//! Periodic schedule assembly.
//!
//! A periodic schedule holds `gamma` slots per period on `d_hat` parallel
//! switch planes; every (plane, slot) cell is one matching held for a
//! fixed slot duration, with transmission pausing during the
//! reconfiguration tail of each slot. Matchings are distributed over
//! planes round-robin (index mod `d_hat`), and when `d_hat` does not
//! divide the matching count the tail is padded with identity (all idle)
//! matchings, which is reported to the caller.
//!
//! Three builders are provided: the traffic-aware pipeline
//! (normalize -> scale -> round -> emulate -> decompose), a rotation-based
//! oblivious baseline, and a greedy max-weight-matching baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::decomposition::{
    decompose_structured, DecompositionError, Matching, PhaseTag, PhasedMatchings,
};
use crate::matrix::{MatrixError, NormalizedMatrix, SquareMatrix, TrafficMatrix};
use crate::rounding::{round_matrix, RoundingError};
use crate::topology::build_emulated;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("reconfiguration delay {reconfig_ns}ns must be shorter than the slot {slot_ns}ns")]
    InvalidTiming { slot_ns: u64, reconfig_ns: u64 },
    #[error("degree must be at least 1")]
    BadDegree,
    #[error("node count must be at least 2, got {0}")]
    BadNodeCount(usize),
    #[error("requested {0} slots; at least 1 required")]
    BadSlotCount(u64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("schedule file is malformed: {0}")]
    Malformed(String),
}

/// A periodic circuit-switching schedule across `d_hat` switch planes.
///
/// Serialized form matches the schedule JSON interface exactly:
/// `{"n":…, "d":…, "k":…, "slot_ns":…, "reconfig_ns":…, "seed":…,
///   "planes":[[[dst…]…]…], "phases":[["rr"|"aware"|"obl"…]…]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicSchedule {
    pub n: u32,
    #[serde(rename = "d")]
    pub degree: u32,
    /// Schedule stretch parameter; 0 for the oblivious and greedy
    /// baselines.
    pub k: u32,
    pub slot_ns: u64,
    pub reconfig_ns: u64,
    pub seed: u64,
    /// `planes[p][s]` is the matching executed by plane `p` in slot `s`.
    pub planes: Vec<Vec<Matching>>,
    /// Phase tag per (plane, slot), aligned with `planes`.
    pub phases: Vec<Vec<PhaseTag>>,
}

impl PeriodicSchedule {
    /// Slots per period.
    pub fn gamma(&self) -> usize {
        self.planes.first().map_or(0, |p| p.len())
    }

    /// Fraction of each slot usable for transmission.
    pub fn duty_cycle(&self) -> f64 {
        1.0 - self.reconfig_ns as f64 / self.slot_ns as f64
    }

    /// Total matchings in one period across planes.
    pub fn total_matchings(&self) -> usize {
        self.planes.iter().map(|p| p.len()).sum()
    }

    /// Index of the last slot carrying a round-robin tag, if any.
    pub fn round_robin_end_slot(&self) -> Option<usize> {
        let mut last = None;
        for plane in &self.phases {
            for (s, tag) in plane.iter().enumerate() {
                if *tag == PhaseTag::RoundRobin {
                    last = Some(last.map_or(s, |l: usize| l.max(s)));
                }
            }
        }
        last
    }

    /// Checks all structural invariants, returning a list of violations
    /// (empty when valid).
    pub fn check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.reconfig_ns >= self.slot_ns {
            issues.push(format!(
                "reconfig_ns {} >= slot_ns {}",
                self.reconfig_ns, self.slot_ns
            ));
        }
        if self.planes.len() != self.degree as usize {
            issues.push(format!(
                "{} planes for degree {}",
                self.planes.len(),
                self.degree
            ));
        }
        let gamma = self.gamma();
        if gamma == 0 {
            issues.push("empty schedule".into());
        }
        for (p, plane) in self.planes.iter().enumerate() {
            if plane.len() != gamma {
                issues.push(format!("plane {p} has {} slots, expected {gamma}", plane.len()));
            }
            for (s, m) in plane.iter().enumerate() {
                if m.n() != self.n as usize {
                    issues.push(format!("plane {p} slot {s} has {} nodes", m.n()));
                } else if !m.is_valid() {
                    issues.push(format!("plane {p} slot {s} is not a permutation"));
                }
            }
        }
        if self.phases.len() != self.planes.len()
            || self
                .phases
                .iter()
                .zip(&self.planes)
                .any(|(ph, pl)| ph.len() != pl.len())
        {
            issues.push("phase tags do not match plane shape".into());
        }
        issues
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    /// Parses and validates a schedule JSON document.
    pub fn from_json(text: &str) -> Result<PeriodicSchedule, ScheduleError> {
        let s: PeriodicSchedule =
            serde_json::from_str(text).map_err(|e| ScheduleError::Malformed(e.to_string()))?;
        let issues = s.check();
        if !issues.is_empty() {
            return Err(ScheduleError::Malformed(issues.join("; ")));
        }
        Ok(s)
    }
}

/// Emulated per-pair capacity in bits/second: appearance count over the
/// period, across planes, times `c * duty / gamma`. Self-loop slots
/// contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityMatrix {
    cap: SquareMatrix,
}

impl CapacityMatrix {
    pub fn n(&self) -> usize {
        self.cap.n()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.cap.get(u, v)
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.cap
    }
}

/// Computes the emulated capacity matrix of a schedule at link rate `c`.
pub fn emulated_capacities(s: &PeriodicSchedule, link_capacity: f64) -> CapacityMatrix {
    let n = s.n as usize;
    let gamma = s.gamma() as f64;
    let per_slot = link_capacity * s.duty_cycle() / gamma;
    let mut cap = SquareMatrix::zeros(n);
    for plane in &s.planes {
        for m in plane {
            for u in 0..n {
                let v = m.dst(u);
                if v != u {
                    cap.add(u, v, per_slot);
                }
            }
        }
    }
    CapacityMatrix { cap }
}

fn check_timing(slot_ns: u64, reconfig_ns: u64) -> Result<(), ScheduleError> {
    if reconfig_ns >= slot_ns || slot_ns == 0 {
        return Err(ScheduleError::InvalidTiming {
            slot_ns,
            reconfig_ns,
        });
    }
    Ok(())
}

/// Distributes matchings across `d_hat` planes (index mod `d_hat`),
/// padding with identity matchings to the next multiple. Returns the
/// plane/phase grids and the number of padding matchings added.
fn distribute(
    phased: PhasedMatchings,
    n: usize,
    d_hat: u32,
    pad_tag: PhaseTag,
) -> (Vec<Vec<Matching>>, Vec<Vec<PhaseTag>>, u32) {
    let mut matchings = phased.matchings;
    let mut tags = phased.tags;
    let d = d_hat as usize;
    let padding = (d - matchings.len() % d) % d;
    for _ in 0..padding {
        matchings.push(Matching::identity(n));
        tags.push(pad_tag);
    }
    let gamma = matchings.len() / d;
    let mut planes = vec![Vec::with_capacity(gamma); d];
    let mut phases = vec![Vec::with_capacity(gamma); d];
    for (i, (m, t)) in matchings.into_iter().zip(tags).enumerate() {
        planes[i % d].push(m);
        phases[i % d].push(t);
    }
    (planes, phases, padding as u32)
}

/// Builds the traffic-aware schedule from an already-normalized matrix.
///
/// This is the entry point the adaptive loop uses, where the demand
/// estimate carries dimensionless units and hose validation does not
/// apply. Returns the schedule and the number of identity padding slots.
pub fn vermilion_from_normalized(
    norm: &NormalizedMatrix,
    k: u32,
    d_hat: u32,
    slot_ns: u64,
    reconfig_ns: u64,
    seed: u64,
) -> Result<(PeriodicSchedule, u32), ScheduleError> {
    check_timing(slot_ns, reconfig_ns)?;
    if d_hat < 1 {
        return Err(ScheduleError::BadDegree);
    }
    let n = norm.n();
    if n < 2 {
        return Err(ScheduleError::BadNodeCount(n));
    }
    let scaled = norm.scale(k)?;
    let rounded = round_matrix(&scaled)?;
    let graph = build_emulated(&rounded, k, seed);
    let phased = decompose_structured(&graph, &rounded)?;
    let (planes, phases, padding) = distribute(phased, n, d_hat, PhaseTag::Aware);
    Ok((
        PeriodicSchedule {
            n: n as u32,
            degree: d_hat,
            k,
            slot_ns,
            reconfig_ns,
            seed,
            planes,
            phases,
        },
        padding,
    ))
}

/// Full traffic-aware pipeline from a validated traffic matrix.
pub fn build_vermilion_schedule(
    m: &TrafficMatrix,
    k: u32,
    d_hat: u32,
    slot_ns: u64,
    reconfig_ns: u64,
    seed: u64,
) -> Result<(PeriodicSchedule, u32), ScheduleError> {
    vermilion_from_normalized(&m.normalize(), k, d_hat, slot_ns, reconfig_ns, seed)
}

/// Rotation-based oblivious schedule: the `n-1` rotations
/// `dst[u] = (u + i) mod n`, each ordered pair covered exactly once per
/// period, padded to a multiple of `d_hat` with identity matchings.
pub fn build_oblivious_schedule(
    n: usize,
    d_hat: u32,
    slot_ns: u64,
    reconfig_ns: u64,
) -> Result<(PeriodicSchedule, u32), ScheduleError> {
    check_timing(slot_ns, reconfig_ns)?;
    if d_hat < 1 {
        return Err(ScheduleError::BadDegree);
    }
    if n < 2 {
        return Err(ScheduleError::BadNodeCount(n));
    }
    let matchings: Vec<Matching> = (1..n).map(|i| Matching::rotation(n, i)).collect();
    let tags = vec![PhaseTag::Oblivious; matchings.len()];
    let (planes, phases, padding) = distribute(
        PhasedMatchings { matchings, tags },
        n,
        d_hat,
        PhaseTag::Oblivious,
    );
    Ok((
        PeriodicSchedule {
            n: n as u32,
            degree: d_hat,
            k: 0,
            slot_ns,
            reconfig_ns,
            seed: 0,
            planes,
            phases,
        },
        padding,
    ))
}

/// Greedy baseline: each of `gamma_target * d_hat` matchings is a
/// max-weight perfect matching of the residual demand (zero-weight cells
/// complete the permutation), after which one slot of service,
/// `c * (slot - reconfig)` bits, is subtracted from the matched pairs.
pub fn build_greedy_schedule(
    m: &TrafficMatrix,
    d_hat: u32,
    gamma_target: u64,
    slot_ns: u64,
    reconfig_ns: u64,
) -> Result<PeriodicSchedule, ScheduleError> {
    check_timing(slot_ns, reconfig_ns)?;
    if d_hat < 1 {
        return Err(ScheduleError::BadDegree);
    }
    if gamma_target < 1 {
        return Err(ScheduleError::BadSlotCount(gamma_target));
    }
    let n = m.n();
    if n < 2 {
        return Err(ScheduleError::BadNodeCount(n));
    }
    let service_bits = m.link_capacity() * (slot_ns - reconfig_ns) as f64 * 1e-9;
    let mut residual: Vec<f64> = m.entries().entries().to_vec();
    let mut matchings = Vec::with_capacity((gamma_target * d_hat as u64) as usize);
    for _ in 0..gamma_target * d_hat as u64 {
        let dst = max_weight_assignment(&residual, n);
        for u in 0..n {
            let v = dst[u] as usize;
            if u != v {
                let r = &mut residual[u * n + v];
                *r = (*r - service_bits).max(0.0);
            }
        }
        matchings.push(Matching::new(dst).expect("assignment returns a permutation"));
    }
    let tags = vec![PhaseTag::Aware; matchings.len()];
    let (planes, phases, _) = distribute(
        PhasedMatchings { matchings, tags },
        n,
        d_hat,
        PhaseTag::Aware,
    );
    Ok(PeriodicSchedule {
        n: n as u32,
        degree: d_hat,
        k: 0,
        slot_ns,
        reconfig_ns,
        seed: 0,
        planes,
        phases,
    })
}
