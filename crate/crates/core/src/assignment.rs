//! Rectangular linear assignment (Hungarian method with row/column
//! potentials), O(rows² · cols).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum-cost assignment of every row to a distinct column.
///
/// Requires `rows <= cols`. Returns `(col_of_row, total)`. Among optimal
/// solutions the search prefers lower column indices.
pub fn min_cost_assignment<T: Scalar>(cost: &[Vec<T>]) -> Result<(Vec<usize>, T)> {
    let rows = cost.len();
    if rows == 0 {
        return Ok((Vec::new(), T::zero()));
    }
    let cols = cost[0].len();
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::SizeMismatch("ragged cost matrix".into()));
    }
    if rows > cols {
        return Err(Error::SizeMismatch(format!(
            "{rows} rows cannot be assigned to {cols} columns"
        )));
    }

    // 1-based: index 0 is the virtual column used to start each augmentation.
    let mut u = vec![T::zero(); rows + 1];
    let mut v = vec![T::zero(); cols + 1];
    let mut row_of_col = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<T>> = vec![None; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1].clone() - u[i0].clone() - v[j].clone();
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| *mj < *d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("rows <= cols leaves a free column");
            for j in 0..=cols {
                if used[j] {
                    let r = row_of_col[j];
                    u[r] = u[r].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.clone() - delta.clone();
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; rows];
    for j in 1..=cols {
        if row_of_col[j] != 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    let total = col_of_row
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &j)| acc + cost[i][j].clone());
    Ok((col_of_row, total))
}
