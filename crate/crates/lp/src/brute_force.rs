//! Exhaustive vertex enumeration for tiny bounded LPs.
//!
//! Every choice of `n` active constraints (rows or finite variable bounds)
//! is solved as a square system; the best feasible vertex is returned. Only
//! meant as a reference for models with a handful of variables whose
//! variables all have finite bounds.

use crate::model::LpModel;

const FEAS_TOL: f64 = 1e-7;

/// Minimum objective value and a minimizing vertex, or `None` if no vertex
/// is feasible.
pub fn enumerate_vertices(model: &LpModel) -> Option<(f64, Vec<f64>)> {
    let n = model.num_vars();
    let mut hyperplanes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in model.constraints() {
        let mut a = vec![0.0; n];
        for &(v, c) in &row.terms {
            a[v.index()] = c;
        }
        hyperplanes.push((a, row.rhs));
    }
    for (j, v) in model.variables().iter().enumerate() {
        for b in [v.lower, v.upper] {
            if b.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                hyperplanes.push((a, b));
            }
        }
    }
    if n == 0 {
        return model
            .constraints()
            .iter()
            .all(|r| r.violation(&[]) <= FEAS_TOL)
            .then(|| (0.0, Vec::new()));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    if hyperplanes.len() < n {
        return None;
    }
    loop {
        if let Some(x) = solve_square(&pick.iter().map(|&k| &hyperplanes[k]).collect::<Vec<_>>()) {
            let feasible = model.max_row_violation(&x) <= FEAS_TOL && model.max_bound_violation(&x) <= FEAS_TOL;
            if feasible {
                let obj = model.objective_value(&x);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
        // Next combination in lexicographic order.
        let total = hyperplanes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| m[i][c].abs().total_cmp(&m[k][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        for i in 0..n {
            if i != c {
                let f = m[i][c] / m[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        m[i][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// True when `x` satisfies every row and bound within `tol`.
pub fn satisfies(model: &LpModel, x: &[f64], tol: f64) -> bool {
    model.max_row_violation(x) <= tol && model.max_bound_violation(x) <= tol
}
