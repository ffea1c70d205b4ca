//! Workload generation: per-source Poisson flow arrivals with sizes from
//! an empirical distribution and destinations from the configured
//! pattern.

use rand::Rng;

use crate::rng::stream_rng;

use super::{Pattern, SimConfig, SimError};

/// Flow-size distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum SizeDist {
    /// Every flow has exactly this many bytes.
    Constant(u64),
    /// Step CDF: `(bytes, cumulative probability)` ascending to 1.
    Cdf(Vec<(u64, f64)>),
    /// Built-in heavy-tailed default: 50% 1KB, 30% 10KB, 15% 100KB,
    /// 4% 1MB, 1% 10MB (mean 158.5KB).
    Synthetic,
}

const SYNTHETIC_CDF: [(u64, f64); 5] = [
    (1_000, 0.50),
    (10_000, 0.80),
    (100_000, 0.95),
    (1_000_000, 0.99),
    (10_000_000, 1.00),
];

impl SizeDist {
    fn table(&self) -> Option<&[(u64, f64)]> {
        match self {
            SizeDist::Constant(_) => None,
            SizeDist::Cdf(t) => Some(t),
            SizeDist::Synthetic => Some(&SYNTHETIC_CDF),
        }
    }

    pub fn mean_bytes(&self) -> f64 {
        match self {
            SizeDist::Constant(b) => *b as f64,
            _ => {
                let table = self.table().unwrap();
                let mut mean = 0.0;
                let mut prev = 0.0;
                for &(bytes, cum) in table {
                    mean += bytes as f64 * (cum - prev);
                    prev = cum;
                }
                mean
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            SizeDist::Constant(b) => *b,
            _ => {
                let table = self.table().unwrap();
                let u: f64 = rng.gen_range(0.0..1.0);
                for &(bytes, cum) in table {
                    if u <= cum {
                        return bytes;
                    }
                }
                table.last().unwrap().0
            }
        }
    }
}

/// Parses a two-column CDF file: `bytes cumulative_probability` per line
/// (whitespace or comma separated), ascending, ending at probability 1.
pub fn parse_cdf_file(text: &str) -> Result<SizeDist, SimError> {
    let mut table: Vec<(u64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(SimError::BadDistributionFile(format!(
                "line {}: expected 'bytes probability', got {line:?}",
                idx + 1
            )));
        }
        let bytes: u64 = fields[0].parse().map_err(|e| {
            SimError::BadDistributionFile(format!("line {}: bytes: {e}", idx + 1))
        })?;
        let prob: f64 = fields[1].parse().map_err(|e| {
            SimError::BadDistributionFile(format!("line {}: probability: {e}", idx + 1))
        })?;
        table.push((bytes, prob));
    }
    if table.is_empty() {
        return Err(SimError::BadDistributionFile("empty distribution".into()));
    }
    for w in table.windows(2) {
        if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
            return Err(SimError::BadDistributionFile(
                "bytes and probabilities must be strictly increasing".into(),
            ));
        }
    }
    if table[0].0 == 0 || table[0].1 <= 0.0 {
        return Err(SimError::BadDistributionFile(
            "first row must have positive bytes and probability".into(),
        ));
    }
    let last = table.last().unwrap().1;
    if (last - 1.0).abs() > 1e-9 {
        return Err(SimError::BadDistributionFile(format!(
            "distribution must end at probability 1, got {last}"
        )));
    }
    Ok(SizeDist::Cdf(table))
}

/// One generated flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub bytes: u64,
    pub arrival_ns: u64,
}

pub type FlowTrace = Vec<FlowSpec>;

/// Generates per-source Poisson arrivals at rate
/// `load * c * d_hat / (8 * mean_flow_size)` flows per second, sorted by
/// arrival time. Zero load produces an empty trace.
pub fn generate_workload(cfg: &SimConfig) -> Result<FlowTrace, SimError> {
    let mut flows: Vec<(u64, u32, u32, u64)> = Vec::new(); // (arrival, src, dst, bytes)
    if cfg.load == 0.0 {
        return Ok(Vec::new());
    }
    let n = cfg.nodes as usize;
    let mean = cfg.flow_sizes.mean_bytes();
    let rate_per_sec = cfg.load * cfg.capacity_bps * cfg.degree as f64 / (8.0 * mean);
    for u in 0..n {
        let mut rng = stream_rng(cfg.seed, &format!("workload-{u}"));
        let row: Option<Vec<f64>> = match &cfg.pattern {
            Pattern::Matrix(m) => {
                let mut row: Vec<f64> = (0..n)
                    .map(|v| if v == u { 0.0 } else { m.get(u, v) })
                    .collect();
                let total: f64 = row.iter().sum();
                if total <= 0.0 {
                    continue; // node generates no traffic
                }
                for w in row.iter_mut() {
                    *w /= total;
                }
                Some(row)
            }
            _ => None,
        };
        let mut t_ns = 0.0f64;
        loop {
            let gap: f64 = -(1.0 - rng.gen_range(0.0..1.0f64)).ln() / rate_per_sec * 1e9;
            t_ns += gap;
            if t_ns >= cfg.duration_ns as f64 {
                break;
            }
            let bytes = cfg.flow_sizes.sample(&mut rng).max(1);
            let dst = match &cfg.pattern {
                Pattern::Permutation => ((u + 1) % n) as u32,
                Pattern::Uniform => {
                    let mut d = rng.gen_range(0..n - 1);
                    if d >= u {
                        d += 1;
                    }
                    d as u32
                }
                Pattern::Matrix(_) => {
                    let row = row.as_ref().unwrap();
                    let mut x: f64 = rng.gen_range(0.0..1.0);
                    let mut pick = if u == 0 { 1 } else { 0 };
                    for (v, w) in row.iter().enumerate() {
                        if *w > 0.0 {
                            x -= w;
                            pick = v;
                            if x <= 0.0 {
                                break;
                            }
                        }
                    }
                    pick as u32
                }
            };
            flows.push((t_ns as u64, u as u32, dst, bytes));
        }
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok(flows
        .into_iter()
        .enumerate()
        .map(|(id, (arrival_ns, src, dst, bytes))| FlowSpec {
            id: id as u32,
            src,
            dst,
            bytes,
            arrival_ns,
        })
        .collect())
}
