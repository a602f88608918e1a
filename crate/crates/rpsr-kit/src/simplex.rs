//! Small dense linear programs solved by a two-phase tableau simplex with
//! Bland's rule. Sized for the witness programs the pruner poses: tens of
//! variables and constraints.

// tableau row arithmetic reads better indexed
#![allow(clippy::needless_range_loop)]

const PIVOT_TOLERANCE: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

/// Maximizes `c . x` subject to `A x = b`, `x >= 0`. Rows of `b` must be
/// non-negative (negate a row first if needed).
pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpSolution {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert!(b.len() == m);
    debug_assert!(b.iter().all(|&v| v >= 0.0));

    // columns: n structural + m artificial + rhs
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[width - 1] = b[i];
        tab.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: maximize -sum(artificials); reduced costs start as column sums
    let mut obj = vec![0.0; width];
    for j in 0..n {
        obj[j] = tab.iter().map(|row| row[j]).sum();
    }
    obj[width - 1] = b.iter().sum();
    tab.push(obj);

    if !run_simplex(&mut tab, &mut basis, n + m) {
        return LpSolution {
            status: LpStatus::Unbounded,
            objective: 0.0,
            x: vec![0.0; n],
        };
    }
    let infeasibility = tab[m][width - 1];
    if infeasibility > 1e-7 {
        return LpSolution {
            status: LpStatus::Infeasible,
            objective: 0.0,
            x: vec![0.0; n],
        };
    }

    // drive any leftover artificial out of the basis when possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab[i][j].abs() > PIVOT_TOLERANCE) {
                pivot(&mut tab, &mut basis, i, j);
            }
        }
    }

    // phase 2: real objective, artificials barred from entering
    let width = tab[0].len();
    let mrows = tab.len() - 1;
    for j in 0..width {
        tab[mrows][j] = if j < n { c[j] } else { 0.0 };
    }
    for i in 0..mrows {
        let var = basis[i];
        if var < n {
            let coef = tab[mrows][var];
            if coef != 0.0 {
                for j in 0..width {
                    tab[mrows][j] -= coef * tab[i][j];
                }
            }
        }
    }
    // the rhs cell of the objective row now holds -objective
    if !run_simplex(&mut tab, &mut basis, n) {
        return LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::INFINITY,
            x: vec![0.0; n],
        };
    }

    let mut x = vec![0.0; n];
    for i in 0..mrows {
        if basis[i] < n {
            x[basis[i]] = tab[i][width - 1];
        }
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: -tab[mrows][width - 1],
        x,
    }
}

/// Pivots until no reduced cost exceeds the tolerance. Entering and leaving
/// variables follow Bland's rule, which rules out cycling on the degenerate
/// vertices these witness programs produce. Returns false on unboundedness.
fn run_simplex(tab: &mut [Vec<f64>], basis: &mut [usize], enterable: usize) -> bool {
    let mrows = tab.len() - 1;
    let width = tab[0].len();
    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..enterable).find(|&j| tab[mrows][j] > PIVOT_TOLERANCE) else {
            return true;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..mrows {
            let coef = tab[i][enter];
            if coef > PIVOT_TOLERANCE {
                let ratio = tab[i][width - 1] / coef;
                let better = match leave {
                    None => true,
                    Some((cur, best)) => {
                        ratio < best - PIVOT_TOLERANCE
                            || (ratio < best + PIVOT_TOLERANCE && basis[i] < basis[cur])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return false;
        };
        pivot(tab, basis, row, enter);
    }
    panic!("simplex failed to terminate");
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = tab[0].len();
    let scale = tab[row][col];
    for j in 0..width {
        tab[row][j] /= scale;
    }
    tab[row][col] = 1.0;
    for i in 0..tab.len() {
        if i == row {
            continue;
        }
        let factor = tab[i][col];
        if factor != 0.0 {
            for j in 0..width {
                tab[i][j] -= factor * tab[row][j];
            }
            tab[i][col] = 0.0;
        }
    }
    basis[row] = col;
}
