//! Traffic matrices under the hose model: validation, normalization,
//! scaling, random generation, and file I/O.
//!
//! A traffic matrix holds nonnegative demand rates in bits/second between
//! every ordered pair of nodes, with a zero diagonal. Under the hose model
//! every row and column sum is bounded by the node port capacity
//! `c * d_hat`. The schedule pipeline first normalizes the matrix so the
//! maximum row/column sum is 1, then scales it by `(k-1) * n` ahead of
//! rounding.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack when comparing accumulated sums against the hose bound,
/// to absorb floating-point accumulation error.
pub const HOSE_SUM_TOL: f64 = 1e-9;

/// Row or column, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => write!(f, "row"),
            Axis::Col => write!(f, "column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("entry ({row},{col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row},{col}) is not finite")]
    NotFinite { row: usize, col: usize },
    #[error("diagonal entry ({node},{node}) must be zero, got {value}")]
    NonzeroDiagonal { node: usize, value: f64 },
    #[error("{axis} {node} sums to {sum:.6e}, exceeding the hose bound {limit:.6e}")]
    HoseViolation {
        node: usize,
        axis: Axis,
        sum: f64,
        limit: f64,
    },
    #[error("schedule stretch k must be at least 2, got {k}")]
    InvalidK { k: u32 },
    #[error("row {row} has {got} entries, expected {want}")]
    RaggedRow { row: usize, got: usize, want: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("link capacity must be positive and finite, got {0}")]
    BadCapacity(f64),
    #[error("node degree must be at least 1")]
    BadDegree,
    #[error("missing '{0}' metadata (expected a '# {0}=<value>' header line or a JSON field)")]
    MissingMeta(&'static str),
    #[error("line {line}: cannot parse {what}: {detail}")]
    Parse {
        what: &'static str,
        line: usize,
        detail: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense square matrix of `f64`, row major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from row vectors, rejecting ragged input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let n = rows.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::RaggedRow {
                    row: i,
                    got: row.len(),
                    want: n,
                });
            }
            data.extend(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.data[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// Largest row or column sum.
    pub fn max_axis_sum(&self) -> f64 {
        let rows = (0..self.n).map(|i| self.row_sum(i));
        let cols = (0..self.n).map(|j| self.col_sum(j));
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

/// Validated demand matrix under the hose model.
///
/// Invariants: zero diagonal, nonnegative entries, and every row and
/// column sum at most `link_capacity * degree` (within [`HOSE_SUM_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    entries: SquareMatrix,
    link_capacity: f64,
    degree: u32,
}

impl TrafficMatrix {
    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn link_capacity(&self) -> f64 {
        self.link_capacity
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Hose bound `c * d_hat`.
    pub fn port_capacity(&self) -> f64 {
        self.link_capacity * self.degree as f64
    }

    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.entries.get(u, v)
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_zero()
    }

    /// Normalizes so the maximum row/column sum is at most 1.
    ///
    /// The divisor is a single scalar, `max(max row sum, max col sum)`,
    /// which preserves relative demand. A zero matrix stays zero.
    pub fn normalize(&self) -> NormalizedMatrix {
        NormalizedMatrix::from_raw(&self.entries)
    }
}

/// Validates a raw square matrix against the hose model.
///
/// Values are preserved exactly; this only checks the invariants
/// (finite, nonnegative, zero diagonal, row/col sums within `c * d_hat`).
pub fn validate_hose(
    raw: SquareMatrix,
    link_capacity: f64,
    degree: u32,
) -> Result<TrafficMatrix, MatrixError> {
    if !(link_capacity > 0.0) || !link_capacity.is_finite() {
        return Err(MatrixError::BadCapacity(link_capacity));
    }
    if degree < 1 {
        return Err(MatrixError::BadDegree);
    }
    let n = raw.n();
    for i in 0..n {
        for j in 0..n {
            let v = raw.get(i, j);
            if !v.is_finite() {
                return Err(MatrixError::NotFinite { row: i, col: j });
            }
            if v < 0.0 {
                return Err(MatrixError::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if i == j && v != 0.0 {
                return Err(MatrixError::NonzeroDiagonal { node: i, value: v });
            }
        }
    }
    let limit = link_capacity * degree as f64;
    let tol = HOSE_SUM_TOL * limit;
    for i in 0..n {
        let s = raw.row_sum(i);
        if s > limit + tol {
            return Err(MatrixError::HoseViolation {
                node: i,
                axis: Axis::Row,
                sum: s,
                limit,
            });
        }
    }
    for j in 0..n {
        let s = raw.col_sum(j);
        if s > limit + tol {
            return Err(MatrixError::HoseViolation {
                node: j,
                axis: Axis::Col,
                sum: s,
                limit,
            });
        }
    }
    Ok(TrafficMatrix {
        entries: raw,
        link_capacity,
        degree,
    })
}

/// Demand matrix rescaled so every row and column sum is at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    entries: SquareMatrix,
}

impl NormalizedMatrix {
    /// Normalizes any nonnegative square matrix by its largest axis sum.
    ///
    /// Used directly by the adaptive loop, where estimate matrices carry
    /// dimensionless units and only relative demand matters.
    pub fn from_raw(raw: &SquareMatrix) -> NormalizedMatrix {
        let s = raw.max_axis_sum();
        let entries = if s > 0.0 {
            raw.scaled(1.0 / s)
        } else {
            raw.clone()
        };
        NormalizedMatrix { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.entries.get(u, v)
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    /// Multiplies entries by `(k - 1) * n`, the stretch applied before
    /// rounding. Requires `k >= 2`.
    pub fn scale(&self, k: u32) -> Result<ScaledMatrix, MatrixError> {
        if k < 2 {
            return Err(MatrixError::InvalidK { k });
        }
        let factor = (k as f64 - 1.0) * self.n() as f64;
        Ok(ScaledMatrix {
            entries: self.entries.scaled(factor),
            k,
        })
    }
}

/// Normalized matrix stretched by `(k - 1) * n`; every row and column sum
/// is at most `(k - 1) * n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    entries: SquareMatrix,
    k: u32,
}

impl ScaledMatrix {
    /// Wraps explicit entries after checking the invariant that every row
    /// and column sum is at most `(k - 1) * n`.
    pub fn from_entries(entries: SquareMatrix, k: u32) -> Result<ScaledMatrix, MatrixError> {
        if k < 2 {
            return Err(MatrixError::InvalidK { k });
        }
        let n = entries.n();
        let budget = (k as f64 - 1.0) * n as f64;
        let tol = HOSE_SUM_TOL * budget.max(1.0);
        for i in 0..n {
            for j in 0..n {
                let v = entries.get(i, j);
                if !v.is_finite() {
                    return Err(MatrixError::NotFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(MatrixError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let s = entries.row_sum(i);
            if s > budget + tol {
                return Err(MatrixError::HoseViolation {
                    node: i,
                    axis: Axis::Row,
                    sum: s,
                    limit: budget,
                });
            }
        }
        for j in 0..n {
            let s = entries.col_sum(j);
            if s > budget + tol {
                return Err(MatrixError::HoseViolation {
                    node: j,
                    axis: Axis::Col,
                    sum: s,
                    limit: budget,
                });
            }
        }
        Ok(ScaledMatrix { entries, k })
    }

    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.entries.get(u, v)
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }
}

// ---------------------------------------------------------------------------
// Random generation

/// Random matrices satisfying the hose bound, for sweeps and property tests.
pub mod gen {
    use super::*;

    /// Random saturated hose matrix: every row and column sums to
    /// `c * d_hat` (a doubly stochastic pattern scaled by the port
    /// capacity). Built by Sinkhorn iteration on positive off-diagonal
    /// entries, so it has full off-diagonal support.
    pub fn saturated<R: Rng>(
        n: usize,
        link_capacity: f64,
        degree: u32,
        rng: &mut R,
    ) -> TrafficMatrix {
        let ds = random_doubly_stochastic(n, rng);
        let m = ds.scaled(link_capacity * degree as f64);
        validate_hose(m, link_capacity, degree).expect("saturated generator satisfies hose bound")
    }

    /// Random sub-saturated hose matrix: rows/columns rescaled so the
    /// largest axis sum is a uniform fraction of `c * d_hat`.
    pub fn hose_random<R: Rng>(
        n: usize,
        link_capacity: f64,
        degree: u32,
        rng: &mut R,
    ) -> TrafficMatrix {
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, rng.gen_range(0.0..1.0));
                }
            }
        }
        let load: f64 = rng.gen_range(0.2..1.0);
        let s = m.max_axis_sum();
        let target = link_capacity * degree as f64 * load;
        let m = if s > 0.0 { m.scaled(target / s) } else { m };
        validate_hose(m, link_capacity, degree).expect("rescaled matrix satisfies hose bound")
    }

    /// Random doubly stochastic matrix with zero diagonal, via Sinkhorn
    /// iteration on uniform positive off-diagonal entries.
    pub fn random_doubly_stochastic<R: Rng>(n: usize, rng: &mut R) -> SquareMatrix {
        assert!(n >= 2, "doubly stochastic with zero diagonal needs n >= 2");
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, rng.gen_range(0.1..1.0));
                }
            }
        }
        // Sinkhorn converges for matrices with total support.
        for _ in 0..200 {
            for i in 0..n {
                let s = m.row_sum(i);
                for j in 0..n {
                    m.set(i, j, m.get(i, j) / s);
                }
            }
            for j in 0..n {
                let s = m.col_sum(j);
                for i in 0..n {
                    m.set(i, j, m.get(i, j) / s);
                }
            }
            let err = (0..n)
                .map(|i| (m.row_sum(i) - 1.0).abs())
                .fold(0.0, f64::max);
            if err < 1e-13 {
                break;
            }
        }
        m
    }

    /// Ring (cyclic permutation) demand with the given per-pair rate.
    pub fn ring(n: usize, rate: f64) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(n);
        for u in 0..n {
            m.set(u, (u + 1) % n, rate);
        }
        m
    }

    /// Uniform all-to-all demand with the given per-pair rate.
    pub fn uniform(n: usize, rate: f64) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(n);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    m.set(u, v, rate);
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// File I/O

/// Single-file JSON form of a traffic matrix.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    c: f64,
    d: u32,
    entries: Vec<Vec<f64>>,
}

/// Loads a traffic matrix from CSV (with `# c=` / `# d=` header comments)
/// or from single-file JSON, keyed on the `.json` extension.
pub fn load_traffic_matrix(path: &Path) -> Result<TrafficMatrix, MatrixError> {
    let text = fs::read_to_string(path)?;
    if path.extension().map_or(false, |e| e == "json") {
        parse_matrix_json(&text)
    } else {
        parse_matrix_csv(&text)
    }
}

/// Parses the JSON form `{"n":…, "c":…, "d":…, "entries":[[…]]}`.
pub fn parse_matrix_json(text: &str) -> Result<TrafficMatrix, MatrixError> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| MatrixError::Parse {
        what: "matrix JSON",
        line: e.line(),
        detail: e.to_string(),
    })?;
    let m = SquareMatrix::from_rows(file.entries)?;
    if m.n() != file.n {
        return Err(MatrixError::Parse {
            what: "matrix JSON",
            line: 0,
            detail: format!("declared n={} but entries are {}x{}", file.n, m.n(), m.n()),
        });
    }
    validate_hose(m, file.c, file.d)
}

/// Parses CSV with `# c=<bits_per_sec>` and `# d=<degree>` header comment
/// lines followed by `n` rows of `n` comma-separated decimals.
pub fn parse_matrix_csv(text: &str) -> Result<TrafficMatrix, MatrixError> {
    let (rows, meta) = parse_csv_body(text)?;
    let c = meta
        .iter()
        .find(|(k, _)| k == "c")
        .map(|(_, v)| *v)
        .ok_or(MatrixError::MissingMeta("c"))?;
    let d = meta
        .iter()
        .find(|(k, _)| k == "d")
        .map(|(_, v)| *v as u32)
        .ok_or(MatrixError::MissingMeta("d"))?;
    let m = SquareMatrix::from_rows(rows)?;
    validate_hose(m, c, d)
}

/// Parses a plain numeric CSV (comments allowed, metadata optional),
/// returning just the square matrix. Used where no hose context applies,
/// e.g. doubly stochastic inputs to the BvN decomposition.
pub fn parse_square_csv(text: &str) -> Result<SquareMatrix, MatrixError> {
    let (rows, _) = parse_csv_body(text)?;
    SquareMatrix::from_rows(rows)
}

fn parse_csv_body(text: &str) -> Result<(Vec<Vec<f64>>, Vec<(String, f64)>), MatrixError> {
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once('=') {
                if let Ok(v) = value.trim().parse::<f64>() {
                    meta.push((key.trim().to_string(), v));
                }
            }
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| MatrixError::Parse {
                what: "matrix entry",
                line: idx + 1,
                detail: format!("{field:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(MatrixError::Parse {
                    what: "matrix entry",
                    line: idx + 1,
                    detail: format!("{field:?} is not finite"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok((rows, meta))
}

/// Writes a traffic matrix as CSV with metadata header comments.
pub fn write_matrix_csv(m: &TrafficMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("# c={}\n", m.link_capacity()));
    out.push_str(&format!("# d={}\n", m.degree()));
    out.push_str(&write_square_csv(m.entries()));
    out
}

/// Writes a square matrix as plain CSV.
pub fn write_square_csv(m: &SquareMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| format!("{}", m.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn uniform_offdiag(n: usize, v: f64) -> SquareMatrix {
        gen::uniform(n, v)
    }

    #[test]
    fn saturated_boundary_is_accepted() {
        // n=4, c=1, d=1, off-diagonal 1/3: every row and column sums to 1.
        let m = uniform_offdiag(4, 1.0 / 3.0);
        let tm = validate_hose(m, 1.0, 1).unwrap();
        assert_eq!(tm.n(), 4);
        assert!((tm.entry(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hose_violation_names_the_row() {
        let m = SquareMatrix::from_rows(vec![vec![0.0, 1.5], vec![0.0, 0.0]]).unwrap();
        match validate_hose(m, 1.0, 1) {
            Err(MatrixError::HoseViolation {
                node: 0,
                axis: Axis::Row,
                ..
            }) => {}
            other => panic!("expected row-0 hose violation, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_diagonal_rejected() {
        let mut m = SquareMatrix::zeros(3);
        m.set(1, 1, 0.5);
        assert!(matches!(
            validate_hose(m, 1.0, 1),
            Err(MatrixError::NonzeroDiagonal { node: 1, .. })
        ));
    }

    #[test]
    fn generated_16_node_degree_4_matrices_validate() {
        let mut rng = stream_rng(42, "matrix-gen-test");
        for _ in 0..20 {
            let m = gen::hose_random(16, 25e9, 4, &mut rng);
            assert_eq!(m.n(), 16);
            assert!(m.entries().max_axis_sum() <= 1e11 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn normalize_zero_matrix_is_zero() {
        let tm = validate_hose(SquareMatrix::zeros(4), 1.0, 1).unwrap();
        let nm = tm.normalize();
        assert!(nm.entries().is_zero());
    }

    #[test]
    fn normalize_divides_by_max_axis_sum() {
        // Max row sum 50, max col sum 40: divisor is 50.
        let m = SquareMatrix::from_rows(vec![
            vec![0.0, 30.0, 20.0],
            vec![10.0, 0.0, 10.0],
            vec![10.0, 10.0, 0.0],
        ])
        .unwrap();
        let tm = validate_hose(m, 100.0, 1).unwrap();
        let nm = tm.normalize();
        assert!((nm.entry(0, 1) - 30.0 / 50.0).abs() < 1e-15);
        assert!((nm.entry(2, 0) - 10.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_saturated_permutation_hits_one() {
        let n = 5;
        let ring = gen::ring(n, 3.0 * 2.0); // c*d_hat with c=3, d=2
        let tm = validate_hose(ring, 3.0, 2).unwrap();
        let nm = tm.normalize();
        for u in 0..n {
            assert!((nm.entry(u, (u + 1) % n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_ring_by_k3() {
        let ring = gen::ring(4, 1.0);
        let tm = validate_hose(ring, 1.0, 1).unwrap();
        let sm = tm.normalize().scale(3).unwrap();
        for u in 0..4 {
            assert!((sm.entry(u, (u + 1) % 4) - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_uniform_16() {
        let m = uniform_offdiag(16, 1.0 / 15.0);
        let tm = validate_hose(m, 1.0, 1).unwrap();
        let sm = tm.normalize().scale(3).unwrap();
        assert!((sm.entry(0, 1) - 32.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn scale_rejects_small_k() {
        let tm = validate_hose(SquareMatrix::zeros(4), 1.0, 1).unwrap();
        assert!(matches!(
            tm.normalize().scale(1),
            Err(MatrixError::InvalidK { k: 1 })
        ));
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let mut rng = stream_rng(3, "csv-roundtrip");
        let tm = gen::hose_random(6, 10.0, 2, &mut rng);
        let text = write_matrix_csv(&tm);
        let back = parse_matrix_csv(&text).unwrap();
        assert_eq!(back.degree(), 2);
        for u in 0..6 {
            for v in 0..6 {
                assert_eq!(back.entry(u, v), tm.entry(u, v));
            }
        }
    }

    #[test]
    fn ragged_csv_rejected() {
        let text = "# c=1\n# d=1\n0,1\n0\n";
        assert!(matches!(
            parse_matrix_csv(text),
            Err(MatrixError::RaggedRow { row: 1, .. })
        ));
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"n":2,"c":5.0,"d":1,"entries":[[0.0,2.0],[1.0,0.0]]}"#;
        let tm = parse_matrix_json(text).unwrap();
        assert_eq!(tm.link_capacity(), 5.0);
        assert_eq!(tm.entry(0, 1), 2.0);
    }

    proptest! {
        /// Applying a positive scalar to the input does not change the
        /// normalized (and hence scaled) matrix.
        #[test]
        fn normalize_is_scale_invariant(seed in 0u64..1000, alpha in 0.01f64..100.0) {
            let mut rng = stream_rng(seed, "prop-homogeneous");
            let tm = gen::hose_random(6, 1e3, 2, &mut rng);
            let scaled_input = validate_hose(
                tm.entries().scaled(alpha / 1e3),
                tm.link_capacity(),
                tm.degree(),
            ).unwrap();
            let a = tm.normalize().scale(3).unwrap();
            let b = scaled_input.normalize().scale(3).unwrap();
            for u in 0..6 {
                for v in 0..6 {
                    prop_assert!((a.entry(u, v) - b.entry(u, v)).abs() < 1e-9);
                }
            }
        }

        /// validate_hose accepts exactly the matrices whose sums respect
        /// the bound: constructed just-over inputs fail on the right node.
        #[test]
        fn hose_acceptance_matches_sums(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, "prop-hose");
            let n = 5;
            let ok = gen::hose_random(n, 10.0, 1, &mut rng);
            prop_assert!(validate_hose(ok.entries().clone(), 10.0, 1).is_ok());

            let mut bad = ok.entries().clone();
            let u = (seed as usize) % n;
            let v = (u + 1) % n;
            let row = bad.row_sum(u);
            bad.set(u, v, bad.get(u, v) + (10.0 - row) + 1.0);
            prop_assert!(validate_hose(bad, 10.0, 1).is_err());
        }

        /// Saturated generator produces row and column sums equal to the
        /// port capacity.
        #[test]
        fn saturated_generator_saturates(seed in 0u64..500) {
            let mut rng = stream_rng(seed, "prop-saturated");
            let m = gen::saturated(8, 2.0, 3, &mut rng);
            for i in 0..8 {
                prop_assert!((m.entries().row_sum(i) - 6.0).abs() < 1e-9);
                prop_assert!((m.entries().col_sum(i) - 6.0).abs() < 1e-9);
            }
        }
    }
}
