//! Matching decompositions.
//!
//! A `k*n`-regular directed multigraph decomposes into exactly `k*n`
//! perfect matchings (repeated bipartite matching extraction; after each
//! extraction the remainder is one degree lower and still regular, so
//! Hall's condition keeps holding). The structured variant splits the
//! result into an oblivious round-robin block covering the residual
//! complete graph and a traffic-aware block for everything else.
//!
//! Birkhoff-von-Neumann decomposition of doubly (sub)stochastic matrices
//! is provided as a baseline, together with the fixed-slot quantization
//! that turns its variable-duration terms into a schedule and accounts
//! for the mass lost in the process.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::rounding::IntegerMatrix;
use crate::topology::Multigraph;

/// Entries at or below this are treated as zero during BvN extraction.
const ZERO_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("multigraph is not regular: node {node} has {axis} degree {got}, expected {want}")]
    NotRegular {
        node: usize,
        axis: &'static str,
        got: u64,
        want: u64,
    },
    /// Unreachable for regular inputs; signals an implementation bug.
    #[error("no perfect matching found in a regular multigraph (implementation bug)")]
    MatchingNotFound,
    #[error("matrix is not doubly substochastic: {axis} {node} sums to {sum}")]
    NotSubstochastic {
        axis: &'static str,
        node: usize,
        sum: f64,
    },
    #[error("dst array of length {n} is not a permutation (dst[{u}] = {v})")]
    NotAPermutation { n: usize, u: usize, v: usize },
}

/// One timeslot's circuit configuration: `dst[u]` is the destination of
/// `u`'s circuit. `dst[u] == u` denotes an idle self-loop slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching {
    dst: Vec<u32>,
}

impl Matching {
    /// Wraps a dst array after checking it is a permutation.
    pub fn new(dst: Vec<u32>) -> Result<Matching, DecompositionError> {
        let n = dst.len();
        let mut seen = vec![false; n];
        for (u, &v) in dst.iter().enumerate() {
            if v as usize >= n || seen[v as usize] {
                return Err(DecompositionError::NotAPermutation { n, u, v: v as usize });
            }
            seen[v as usize] = true;
        }
        Ok(Matching { dst })
    }

    /// All-self-loop matching (every port idles).
    pub fn identity(n: usize) -> Matching {
        Matching {
            dst: (0..n as u32).collect(),
        }
    }

    /// Rotation by `shift`: `dst[u] = (u + shift) mod n`.
    pub fn rotation(n: usize, shift: usize) -> Matching {
        Matching {
            dst: (0..n).map(|u| ((u + shift) % n) as u32).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.dst.len()
    }

    #[inline]
    pub fn dst(&self, u: usize) -> usize {
        self.dst[u] as usize
    }

    pub fn dst_array(&self) -> &[u32] {
        &self.dst
    }

    pub fn is_valid(&self) -> bool {
        Matching::new(self.dst.clone()).is_ok()
    }
}

/// Phase a schedule slot belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseTag {
    #[serde(rename = "rr")]
    RoundRobin,
    #[serde(rename = "aware")]
    Aware,
    #[serde(rename = "obl")]
    Oblivious,
}

/// Matchings with per-slot phase tags; the round-robin block comes first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasedMatchings {
    pub matchings: Vec<Matching>,
    pub tags: Vec<PhaseTag>,
}

/// One term of a Birkhoff-von-Neumann decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvnTerm {
    pub coefficient: f64,
    pub permutation: Matching,
}

/// Kuhn's augmenting-path perfect matching over the positive support of
/// a multiplicity matrix. Rows, columns, and arcs are scanned in
/// ascending order, so the result is deterministic.
fn perfect_matching(mult: &IntegerMatrix) -> Option<Matching> {
    let n = mult.n();
    perfect_matching_by(n, |u, v| mult.get(u, v) > 0)
}

fn perfect_matching_by<F: Fn(usize, usize) -> bool>(n: usize, has_edge: F) -> Option<Matching> {
    const FREE: usize = usize::MAX;
    let mut row_match = vec![FREE; n];
    let mut col_match = vec![FREE; n];
    for u in 0..n {
        for v in 0..n {
            if has_edge(u, v) && col_match[v] == FREE {
                row_match[u] = v;
                col_match[v] = u;
                break;
            }
        }
    }
    fn augment<F: Fn(usize, usize) -> bool>(
        u: usize,
        n: usize,
        has_edge: &F,
        visited: &mut [bool],
        row_match: &mut [usize],
        col_match: &mut [usize],
    ) -> bool {
        for v in 0..n {
            if has_edge(u, v) && !visited[v] {
                visited[v] = true;
                if col_match[v] == usize::MAX
                    || augment(col_match[v], n, has_edge, visited, row_match, col_match)
                {
                    row_match[u] = v;
                    col_match[v] = u;
                    return true;
                }
            }
        }
        false
    }
    for u in 0..n {
        if row_match[u] != FREE {
            continue;
        }
        let mut visited = vec![false; n];
        if !augment(u, n, &has_edge, &mut visited, &mut row_match, &mut col_match) {
            return None;
        }
    }
    Some(Matching {
        dst: row_match.iter().map(|&v| v as u32).collect(),
    })
}

fn check_regular(g: &Multigraph) -> Result<(), DecompositionError> {
    let want = g.degree();
    for u in 0..g.n() {
        let out = g.out_degree(u);
        if out != want {
            return Err(DecompositionError::NotRegular {
                node: u,
                axis: "out",
                got: out,
                want,
            });
        }
        let inn = g.in_degree(u);
        if inn != want {
            return Err(DecompositionError::NotRegular {
                node: u,
                axis: "in",
                got: inn,
                want,
            });
        }
    }
    Ok(())
}

/// Decomposes a `d`-regular multigraph into exactly `d` perfect matchings
/// whose edge multiset equals the graph's.
pub fn decompose_regular(g: &Multigraph) -> Result<Vec<Matching>, DecompositionError> {
    check_regular(g)?;
    let d = g.degree();
    let mut remaining = g.edge_mult().clone();
    let mut matchings = Vec::with_capacity(d as usize);
    for _ in 0..d {
        let m = perfect_matching(&remaining).ok_or(DecompositionError::MatchingNotFound)?;
        for u in 0..g.n() {
            let v = m.dst(u);
            remaining.set(u, v, remaining.get(u, v) - 1);
        }
        matchings.push(m);
    }
    debug_assert_eq!(remaining.total(), 0);
    Ok(matchings)
}

/// Decomposes an emulated multigraph into a round-robin block (the `n-1`
/// rotations, exactly covering the residual complete-graph layer) and a
/// traffic-aware block for the remaining `(k-1)*n + 1` degrees.
///
/// `rounded` must be the matrix `g` was built from; it is used to check
/// the precondition that the residual layer is present.
pub fn decompose_structured(
    g: &Multigraph,
    rounded: &IntegerMatrix,
) -> Result<PhasedMatchings, DecompositionError> {
    check_regular(g)?;
    let n = g.n();
    debug_assert!(
        (0..n).all(|u| (0..n).all(|v| u == v || g.multiplicity(u, v) >= rounded.get(u, v) + 1)),
        "multigraph lacks the rounded + residual layers it was built from"
    );
    let mut matchings = Vec::with_capacity(g.degree() as usize);
    let mut tags = Vec::with_capacity(g.degree() as usize);
    for shift in 1..n {
        matchings.push(Matching::rotation(n, shift));
        tags.push(PhaseTag::RoundRobin);
    }
    let mut aware = g.edge_mult().clone();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                aware.set(u, v, aware.get(u, v) - 1);
            }
        }
    }
    let sub = Multigraph::from_multiplicities(aware, g.degree() - (n as u64 - 1));
    for m in decompose_regular(&sub)? {
        matchings.push(m);
        tags.push(PhaseTag::Aware);
    }
    Ok(PhasedMatchings { matchings, tags })
}

/// Birkhoff-von-Neumann decomposition of a doubly substochastic matrix.
///
/// The input is padded to doubly stochastic (off-diagonal cells first, a
/// diagonal cell only when forced), then permutations are peeled off with
/// coefficient equal to the minimum entry on the extracted matching. A
/// Caratheodory reduction pass caps the term count at `n^2 - 2n + 2`.
pub fn bvn_decompose(d: &SquareMatrix, tol: f64) -> Result<Vec<BvnTerm>, DecompositionError> {
    let n = d.n();
    for i in 0..n {
        for j in 0..n {
            if d.get(i, j) < -tol {
                return Err(DecompositionError::NotSubstochastic {
                    axis: "entry",
                    node: i * n + j,
                    sum: d.get(i, j),
                });
            }
        }
        let s = d.row_sum(i);
        if s > 1.0 + tol {
            return Err(DecompositionError::NotSubstochastic {
                axis: "row",
                node: i,
                sum: s,
            });
        }
    }
    for j in 0..n {
        let s = d.col_sum(j);
        if s > 1.0 + tol {
            return Err(DecompositionError::NotSubstochastic {
                axis: "col",
                node: j,
                sum: s,
            });
        }
    }

    let mut w = pad_to_doubly_stochastic(d);
    let mut terms: Vec<BvnTerm> = Vec::new();
    loop {
        let maxv = w.entries().iter().cloned().fold(0.0, f64::max);
        if maxv <= ZERO_EPS {
            break;
        }
        let m = match perfect_matching_by(n, |u, v| w.get(u, v) > ZERO_EPS) {
            Some(m) => m,
            // Accumulated float dust can starve the support just short of
            // full mass; the remainder is below tolerance by then.
            None => break,
        };
        let lambda = (0..n).map(|u| w.get(u, m.dst(u))).fold(f64::MAX, f64::min);
        for u in 0..n {
            let v = m.dst(u);
            let left = w.get(u, v) - lambda;
            w.set(u, v, if left <= ZERO_EPS { 0.0 } else { left });
        }
        if lambda > ZERO_EPS {
            terms.push(BvnTerm {
                coefficient: lambda,
                permutation: m,
            });
        }
    }
    let bound = n * n + 2 - 2 * n;
    reduce_terms(&mut terms, n, bound.max(1));
    Ok(terms)
}

/// Greedy completion to doubly stochastic. Off-diagonal cells are filled
/// first in ascending order; at most one diagonal cell remains afterwards
/// (matching row/column deficits concentrate on a single index).
fn pad_to_doubly_stochastic(d: &SquareMatrix) -> SquareMatrix {
    let n = d.n();
    let mut w = d.clone();
    let mut row_def: Vec<f64> = (0..n).map(|i| (1.0 - w.row_sum(i)).max(0.0)).collect();
    let mut col_def: Vec<f64> = (0..n).map(|j| (1.0 - w.col_sum(j)).max(0.0)).collect();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let add = row_def[i].min(col_def[j]);
            if add > 0.0 {
                w.add(i, j, add);
                row_def[i] -= add;
                col_def[j] -= add;
            }
        }
    }
    for i in 0..n {
        let add = row_def[i].min(col_def[i]);
        if add > 0.0 {
            w.add(i, i, add);
        }
    }
    w
}

/// Caratheodory reduction: while more terms remain than the affine
/// dimension of the Birkhoff polytope allows, find an affine dependency
/// among the permutation matrices and shift mass along it until one
/// coefficient hits zero. Preserves the combination exactly.
fn reduce_terms(terms: &mut Vec<BvnTerm>, n: usize, bound: usize) {
    while terms.len() > bound {
        let mu = match affine_dependency(terms, n) {
            Some(mu) => mu,
            None => break,
        };
        // Walk in the direction that zeroes the tightest coefficient.
        let mut t = f64::MAX;
        let mut drop_idx = usize::MAX;
        for (i, term) in terms.iter().enumerate() {
            if mu[i] > 1e-12 {
                let step = term.coefficient / mu[i];
                if step < t {
                    t = step;
                    drop_idx = i;
                }
            }
        }
        if drop_idx == usize::MAX {
            break;
        }
        for (i, term) in terms.iter_mut().enumerate() {
            term.coefficient -= t * mu[i];
        }
        terms[drop_idx].coefficient = 0.0;
        terms.retain(|t| t.coefficient > ZERO_EPS);
    }
}

/// Finds `mu != 0` with `sum_i mu_i * vec(P_i) = 0` and `sum_i mu_i = 0`,
/// via Gaussian elimination; `None` when the terms are affinely
/// independent. The sign is normalized so some entry is positive.
fn affine_dependency(terms: &[BvnTerm], n: usize) -> Option<Vec<f64>> {
    let cols = terms.len();
    let rows = n * n + 1;
    let mut a = vec![vec![0.0f64; cols]; rows];
    for (i, term) in terms.iter().enumerate() {
        for u in 0..n {
            a[u * n + term.permutation.dst(u)][i] = 1.0;
        }
        a[n * n][i] = 1.0;
    }
    let mut pivot_col_of_row: Vec<usize> = Vec::new();
    let mut is_pivot_col = vec![false; cols];
    let mut r = 0;
    for c in 0..cols {
        let mut piv = r;
        for rr in r..rows {
            if a[rr][c].abs() > a[piv][c].abs() {
                piv = rr;
            }
        }
        if piv >= rows || a[piv][c].abs() < 1e-9 {
            continue;
        }
        a.swap(r, piv);
        let scale = a[r][c];
        for x in a[r].iter_mut() {
            *x /= scale;
        }
        for rr in 0..rows {
            if rr != r && a[rr][c].abs() > 0.0 {
                let f = a[rr][c];
                for cc in 0..cols {
                    a[rr][cc] -= f * a[r][cc];
                }
            }
        }
        pivot_col_of_row.push(c);
        is_pivot_col[c] = true;
        r += 1;
        if r == rows {
            break;
        }
    }
    let free = (0..cols).find(|&c| !is_pivot_col[c])?;
    let mut mu = vec![0.0; cols];
    mu[free] = 1.0;
    for (row, &pc) in pivot_col_of_row.iter().enumerate() {
        mu[pc] = -a[row][free];
    }
    if !mu.iter().any(|&x| x > 1e-12) {
        for x in mu.iter_mut() {
            *x = -*x;
        }
    }
    Some(mu)
}

/// Quantization loss report for a fixed-slot BvN schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyLossReport {
    /// Total matchings in the quantized schedule.
    pub schedule_length: usize,
    /// Sum of all input coefficients.
    pub total_mass: f64,
    /// Coefficient mass of terms whose copy count rounded to zero.
    pub dropped_mass: f64,
    /// `copies * quantum` summed over kept terms.
    pub quantized_mass: f64,
    /// Per-term `(coefficient, copies)` in input order.
    pub term_copies: Vec<(f64, usize)>,
}

/// Expands BvN terms into fixed-duration slots: each term repeats
/// `round(lambda / quantum)` times (half away from zero); terms that
/// round to zero are dropped and accounted as lost mass.
pub fn bvn_quantize(terms: &[BvnTerm], slot_quantum: f64) -> (Vec<Matching>, DutyLossReport) {
    assert!(slot_quantum > 0.0, "slot quantum must be positive");
    let mut slots = Vec::new();
    let mut dropped = 0.0;
    let mut total = 0.0;
    let mut term_copies = Vec::with_capacity(terms.len());
    for term in terms {
        total += term.coefficient;
        let copies = (term.coefficient / slot_quantum).round() as usize;
        term_copies.push((term.coefficient, copies));
        if copies == 0 {
            dropped += term.coefficient;
        } else {
            for _ in 0..copies {
                slots.push(term.permutation.clone());
            }
        }
    }
    let report = DutyLossReport {
        schedule_length: slots.len(),
        total_mass: total,
        dropped_mass: dropped,
        quantized_mass: slots.len() as f64 * slot_quantum,
        term_copies,
    };
    (slots, report)
}
