//! Maximum-weight one-to-one assignment (Hungarian method with potentials).

/// Assigns rows to columns of a rectangular `weights` matrix maximizing the total
/// weight. Returns `assignment[row] = Some(col)`; exactly `min(rows, cols)` rows
/// are assigned.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| weights[r][c]).collect()).collect();
        let by_col = max_weight_assignment(&transposed);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        return out;
    }

    // min-cost formulation over cost = -weight, rows <= cols, 1-based with a
    // virtual column 0
    let n = rows;
    let m = cols;
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
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
            for j in 0..=m {
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

    let mut out = vec![None; rows];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

/// Total weight of an assignment.
pub fn assignment_weight(weights: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| weights[r][c]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square() {
        let w = vec![vec![1.0, 9.0, 3.0], vec![8.0, 2.0, 1.0], vec![2.0, 2.0, 7.0]];
        let a = max_weight_assignment(&w);
        assert_eq!(a, vec![Some(1), Some(0), Some(2)]);
        assert_eq!(assignment_weight(&w, &a), 24.0);
    }

    #[test]
    fn wide_and_tall() {
        let wide = vec![vec![0.1, 0.9, 0.5]];
        assert_eq!(max_weight_assignment(&wide), vec![Some(1)]);
        let tall = vec![vec![0.1], vec![0.9], vec![0.5]];
        assert_eq!(max_weight_assignment(&tall), vec![None, Some(0), None]);
    }

    #[test]
    fn empty() {
        assert!(max_weight_assignment(&[]).is_empty());
    }
}
