//! Exact two-phase simplex for set-covering linear programs.
//!
//! Solves `min Σ x_j` subject to `M x >= 1`, `x >= 0` where `M` is a 0/1
//! incidence matrix, entirely over rationals. Bland's rule keeps the pivot
//! sequence finite and deterministic, so results are exact and reproducible.

use crate::rational::Rational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

pub(crate) struct CoverLpSolution {
    pub value: Rational,
    /// One weight per input column, in column order.
    pub weights: Vec<Rational>,
}

/// `columns[j]` lists the rows covered by column `j`. Every row must appear
/// in at least one column; the caller guarantees feasibility.
pub(crate) fn solve_covering_lp(n_rows: usize, columns: &[BTreeSet<usize>]) -> CoverLpSolution {
    let n_cols = columns.len();
    if n_rows == 0 {
        return CoverLpSolution {
            value: Rational::zero(),
            weights: vec![Rational::zero(); n_cols],
        };
    }
    // Column layout: [x_0..x_J) (sets), [J..J+n) surplus, [J+n..J+2n) artificial.
    let total = n_cols + 2 * n_rows;
    let mut t: Vec<Vec<Rational>> = vec![vec![Rational::zero(); total]; n_rows];
    let mut rhs: Vec<Rational> = vec![Rational::one(); n_rows];
    for (j, rows) in columns.iter().enumerate() {
        for &r in rows {
            assert!(r < n_rows, "column {j} covers row {r} out of {n_rows}");
            t[r][j] = Rational::one();
        }
    }
    for r in 0..n_rows {
        t[r][n_cols + r] = -Rational::one();
        t[r][n_cols + n_rows + r] = Rational::one();
    }
    let mut basis: Vec<usize> = (0..n_rows).map(|r| n_cols + n_rows + r).collect();

    // Phase 1: minimize the artificial total. With the artificial basis the
    // reduced cost of column c is -Σ_r t[r][c].
    let mut allowed: Vec<bool> = vec![true; total];
    let mut rc: Vec<Rational> = (0..total)
        .map(|c| {
            if c >= n_cols + n_rows {
                Rational::zero()
            } else {
                -t.iter().map(|row| row[c].clone()).sum::<Rational>()
            }
        })
        .collect();
    pivot_until_optimal(&mut t, &mut rhs, &mut rc, &mut basis, &allowed);
    let infeasibility: Rational = basis
        .iter()
        .zip(rhs.iter())
        .filter(|(b, _)| **b >= n_cols + n_rows)
        .map(|(_, v)| v.clone())
        .sum();
    assert!(
        infeasibility.is_zero(),
        "covering LP infeasible; some row is covered by no column"
    );

    // Drive leftover degenerate artificials out of the basis, dropping any
    // row that has become redundant.
    allowed[n_cols + n_rows..total].fill(false);
    let mut r = 0;
    while r < basis.len() {
        if basis[r] >= n_cols + n_rows {
            if let Some(c) = (0..n_cols + n_rows).find(|&c| !t[r][c].is_zero()) {
                pivot(&mut t, &mut rhs, &mut rc, r, c);
                basis[r] = c;
            } else {
                t.remove(r);
                rhs.remove(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase 2: minimize Σ x_j over set columns.
    for c in 0..total {
        let basic_cost_part: Rational = basis
            .iter()
            .enumerate()
            .filter(|(_, b)| **b < n_cols)
            .map(|(r, _)| t[r][c].clone())
            .sum();
        let own_cost = if c < n_cols { Rational::one() } else { Rational::zero() };
        rc[c] = own_cost - basic_cost_part;
    }
    pivot_until_optimal(&mut t, &mut rhs, &mut rc, &mut basis, &allowed);

    let mut weights = vec![Rational::zero(); n_cols];
    for (r, &b) in basis.iter().enumerate() {
        if b < n_cols {
            weights[b] = rhs[r].clone();
        }
    }
    let value = weights.iter().cloned().sum();
    CoverLpSolution { value, weights }
}

fn pivot_until_optimal(
    t: &mut [Vec<Rational>],
    rhs: &mut [Rational],
    rc: &mut [Rational],
    basis: &mut [usize],
    allowed: &[bool],
) {
    loop {
        // Bland: lowest-index column with negative reduced cost.
        let Some(col) = (0..rc.len()).find(|&c| allowed[c] && rc[c].is_negative()) else {
            return;
        };
        // Ratio test; ties broken by lowest basic variable index (Bland).
        let mut best: Option<(Rational, usize)> = None;
        for r in 0..t.len() {
            if t[r][col].is_positive() {
                let ratio = &rhs[r] / &t[r][col];
                let better = match &best {
                    None => true,
                    Some((cur, row)) => ratio < *cur || (ratio == *cur && basis[r] < basis[*row]),
                };
                if better {
                    best = Some((ratio, r));
                }
            }
        }
        let (_, row) = best.expect("covering objective is bounded below, pivot column must have support");
        pivot(t, rhs, rc, row, col);
        basis[row] = col;
    }
}

fn pivot(t: &mut [Vec<Rational>], rhs: &mut [Rational], rc: &mut [Rational], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v /= p.clone();
    }
    rhs[row] /= p.clone();
    for r in 0..t.len() {
        if r != row && !t[r][col].is_zero() {
            let f = t[r][col].clone();
            for c in 0..t[r].len() {
                let delta = &f * &t[row][c];
                t[r][c] -= delta;
            }
            let delta = &f * &rhs[row];
            rhs[r] -= delta;
        }
    }
    if !rc[col].is_zero() {
        let f = rc[col].clone();
        for c in 0..rc.len() {
            let delta = &f * &t[row][c];
            rc[c] -= delta;
        }
    }
}
