//! Optimal bipartite assignment (Hungarian algorithm with potentials, O(n^2 m)).

/// Minimum-cost assignment of rows to columns. Every row of the smaller side
/// is assigned; returns, for each row, its column (if any).
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    if n > m {
        let transposed: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let cols = min_cost_assignment(&transposed);
        let mut rows = vec![None; n];
        for (j, i) in cols.into_iter().enumerate() {
            if let Some(i) = i {
                rows[i] = Some(j);
            }
        }
        return rows;
    }
    // rows 1..=n, columns 1..=m; index 0 is the virtual start column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            rows[owner[j] - 1] = Some(j - 1);
        }
    }
    rows
}

/// Matching over the allowed pairs (`Some(weight)`) that first maximizes the
/// number of pairs, then their total weight. Weights must lie in [0, 1].
pub fn max_cardinality_matching(weights: &[Vec<Option<f64>>]) -> Vec<(usize, usize)> {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    // one extra pair is worth more than any weight gain
    let bonus = (n.min(m) + 1) as f64;
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|w| w.map_or(0.0, |w| -(bonus + w))).collect())
        .collect();
    min_cost_assignment(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.filter(|&j| weights[i][j].is_some()).map(|j| (i, j)))
        .collect()
}

/// Matching over non-negative integer weights maximizing the total (zero pairs dropped).
pub fn max_weight_matching(weights: &[Vec<u64>]) -> Vec<(usize, usize)> {
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(|w| -(*w as f64)).collect())
        .collect();
    min_cost_assignment(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.filter(|&j| weights[i][j] > 0).map(|j| (i, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_min(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i][j] + rec(cost, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let m = cost[0].len();
        rec(cost, 0, &mut vec![false; m])
    }

    #[test]
    fn small_known_case() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, j)| cost[i][j.unwrap()]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn empty_inputs() {
        assert!(min_cost_assignment(&[]).is_empty());
        assert_eq!(min_cost_assignment(&[vec![], vec![]]), vec![None, None]);
        assert!(max_cardinality_matching(&[]).is_empty());
    }

    #[test]
    fn cardinality_beats_weight() {
        // a single heavy pair would block two lighter ones
        let w = vec![vec![Some(1.0), Some(0.5)], vec![Some(0.5), None]];
        let mut got = max_cardinality_matching(&w);
        got.sort();
        assert_eq!(got, vec![(0, 1), (1, 0)]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(0.0f64..10.0, 36)) {
            let cost: Vec<Vec<f64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 6 + j]).collect()).collect();
            let a = min_cost_assignment(&cost);
            let assigned: Vec<usize> = a.iter().flatten().copied().collect();
            prop_assert_eq!(assigned.len(), rows.min(cols));
            let mut uniq = assigned.clone();
            uniq.sort();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), assigned.len());
            let total: f64 = a.iter().enumerate().filter_map(|(i, j)| j.map(|j| cost[i][j])).sum();
            let expected = if rows <= cols {
                brute_min(&cost)
            } else {
                let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| cost[i][j]).collect()).collect();
                brute_min(&t)
            };
            prop_assert!((total - expected).abs() < 1e-9);
        }
    }
}
