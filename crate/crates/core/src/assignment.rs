//! Minimum-cost linear assignment (Hungarian / Kuhn-Munkres).
//!
//! Shortest augmenting path formulation with row and column potentials,
//! O(n^3) on the padded square matrix.

/// Optimal pairing of rows (tracks) to columns (detections).
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// (row, column) pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    /// Sum of the paired costs, accumulated in row order.
    pub total_cost: f64,
}

impl AssignmentResult {
    /// Dissolves pairs whose cost is `>= gate` into the unmatched lists.
    pub fn gated(mut self, cost: &[Vec<f64>], gate: f64) -> Self {
        let (keep, drop): (Vec<_>, Vec<_>) =
            self.pairs.iter().partition(|&&(r, c)| cost[r][c] < gate);
        for (r, c) in drop {
            self.unmatched_rows.push(r);
            self.unmatched_cols.push(c);
        }
        self.unmatched_rows.sort_unstable();
        self.unmatched_cols.sort_unstable();
        self.pairs = keep;
        self.total_cost = self.pairs.iter().map(|&(r, c)| cost[r][c]).sum();
        self
    }
}

/// Solves `min sum cost[r][c]` over one-to-one pairings. Rectangular inputs are
/// zero-padded to square; pairs landing in padding are reported as unmatched.
///
/// Entries must be finite and non-negative. All rows must have equal length.
pub fn solve_assignment(cost: &[Vec<f64>]) -> AssignmentResult {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    debug_assert!(cost.iter().all(|r| r.len() == cols), "ragged cost matrix");
    if rows == 0 || cols == 0 {
        return AssignmentResult {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
            total_cost: 0.0,
        };
    }

    let n = rows.max(cols);
    let at = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            cost[r][c]
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for r in 1..=n {
        row_of_col[0] = r;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = row_of_col[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let reduced = at(r0 - 1, c - 1) - u[r0] - v[c];
                if reduced < minv[c] {
                    minv[c] = reduced;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[row_of_col[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of_col[col0] = row_of_col[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![usize::MAX; rows];
    for c in 1..=n {
        let r = row_of_col[c];
        if r >= 1 && r - 1 < rows && c - 1 < cols {
            col_of_row[r - 1] = c - 1;
        }
    }
    let mut pairs = Vec::new();
    let mut unmatched_rows = Vec::new();
    let mut col_used = vec![false; cols];
    let mut total_cost = 0.0;
    for (r, &c) in col_of_row.iter().enumerate() {
        if c == usize::MAX {
            unmatched_rows.push(r);
        } else {
            pairs.push((r, c));
            col_used[c] = true;
            total_cost += cost[r][c];
        }
    }
    let unmatched_cols = (0..cols).filter(|&c| !col_used[c]).collect();
    AssignmentResult {
        pairs,
        unmatched_rows,
        unmatched_cols,
        total_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_prefers_anti_diagonal() {
        // brute force: 1 + 4 = 5 vs 2 + 2 = 4
        let r = solve_assignment(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(r.total_cost, 4.0);
    }

    #[test]
    fn zero_diagonal_gives_identity() {
        let c = vec![
            vec![0.0, 3.0, 2.0],
            vec![1.0, 0.0, 5.0],
            vec![4.0, 2.0, 0.0],
        ];
        let r = solve_assignment(&c);
        assert_eq!(r.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn three_by_three_matches_enumeration() {
        // all six permutations: 4+0+2=6, 4+5+2=11, 1+2+2=5, 1+5+3=9, 3+2+2=7, 3+0+3=6
        let c = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let r = solve_assignment(&c);
        assert_eq!(r.total_cost, 5.0);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn rectangular_inputs() {
        let wide = solve_assignment(&[vec![5.0, 1.0, 3.0]]);
        assert_eq!(wide.pairs, vec![(0, 1)]);
        assert_eq!(wide.unmatched_cols, vec![0, 2]);
        let tall = solve_assignment(&[vec![5.0], vec![1.0], vec![3.0]]);
        assert_eq!(tall.pairs, vec![(1, 0)]);
        assert_eq!(tall.unmatched_rows, vec![0, 2]);
    }

    #[test]
    fn empty_matrix_all_unmatched() {
        let r = solve_assignment(&[]);
        assert!(r.pairs.is_empty() && r.unmatched_rows.is_empty());
        let r = solve_assignment(&[vec![], vec![]]);
        assert_eq!(r.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn gating_dissolves_expensive_pairs() {
        let c = vec![vec![0.1, 0.9], vec![0.9, 0.8]];
        let r = solve_assignment(&c).gated(&c, 0.7);
        assert_eq!(r.pairs, vec![(0, 0)]);
        assert_eq!(r.unmatched_rows, vec![1]);
        assert_eq!(r.unmatched_cols, vec![1]);
        assert!((r.total_cost - 0.1).abs() < 1e-15);
    }
}
