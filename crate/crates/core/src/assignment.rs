//! Maximum-weight perfect assignment on an n x n weight matrix.
//!
//! Classic Hungarian algorithm with potentials and shortest augmenting
//! paths, O(n^3). Used by the greedy-matching schedule baseline, where
//! zero-weight cells (including the diagonal, i.e. idle ports) are
//! allowed so the result is always a full permutation. Deterministic:
//! ties resolve to the lowest column index.

/// Returns `dst` such that `dst[u]` is the column assigned to row `u`,
/// maximizing the total weight. `weights` is row-major n x n.
pub(crate) fn max_weight_assignment(weights: &[f64], n: usize) -> Vec<u32> {
    assert_eq!(weights.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // Minimize cost = -weight with the e-maxx formulation (1-indexed,
    // column 0 is the virtual root).
    let inf = f64::INFINITY;
    let cost = |i: usize, j: usize| -weights[(i - 1) * n + (j - 1)];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row matched to column j
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut dst = vec![0u32; n];
    for j in 1..=n {
        if p[j] != 0 {
            dst[p[j] - 1] = (j - 1) as u32;
        }
    }
    dst
}
