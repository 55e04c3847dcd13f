//! Light presolve: singleton rows become variable bounds and rows that can
//! never be violated under the variable bounds are dropped.

use crate::model::{LpModel, Relation};
use crate::simplex::StandardForm;

const BOUND_TOL: f64 = 1e-9;

/// Origin of a tightened variable bound: `(row, coefficient)`.
pub(crate) type BoundSource = Option<(usize, f64)>;

#[derive(Debug)]
pub(crate) struct Presolved {
    pub form: StandardForm,
    pub kept_rows: Vec<usize>,
    pub lower_src: Vec<BoundSource>,
    pub upper_src: Vec<BoundSource>,
}

pub(crate) enum Outcome {
    Reduced(Presolved),
    Infeasible,
}

fn row_range(rel: Relation, rhs: f64) -> (f64, f64) {
    match rel {
        Relation::Le => (f64::NEG_INFINITY, rhs),
        Relation::Ge => (rhs, f64::INFINITY),
        Relation::Eq => (rhs, rhs),
    }
}

pub(crate) fn presolve(model: &LpModel, enabled: bool) -> Outcome {
    let n = model.num_vars();
    let mut lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    let mut lower_src: Vec<BoundSource> = vec![None; n];
    let mut upper_src: Vec<BoundSource> = vec![None; n];
    let mut keep = vec![true; model.num_rows()];

    if enabled {
        for (r, row) in model.constraints().iter().enumerate() {
            let (lo, hi) = row_range(row.relation, row.rhs);
            match row.terms.as_slice() {
                [] => {
                    if lo > BOUND_TOL || hi < -BOUND_TOL {
                        return Outcome::Infeasible;
                    }
                    keep[r] = false;
                }
                &[(v, a)] => {
                    let j = v.index();
                    let (mut l, mut u) = (lo / a, hi / a);
                    if a < 0.0 {
                        std::mem::swap(&mut l, &mut u);
                    }
                    if l > lower[j] {
                        lower[j] = l;
                        lower_src[j] = Some((r, a));
                    }
                    if u < upper[j] {
                        upper[j] = u;
                        upper_src[j] = Some((r, a));
                    }
                    keep[r] = false;
                }
                _ => {}
            }
        }
        for j in 0..n {
            if lower[j] > upper[j] {
                if lower[j] > upper[j] + BOUND_TOL {
                    return Outcome::Infeasible;
                }
                let mid = 0.5 * (lower[j] + upper[j]);
                lower[j] = mid;
                upper[j] = mid;
            }
        }
        for (r, row) in model.constraints().iter().enumerate() {
            if !keep[r] {
                continue;
            }
            let (lo, hi) = row_range(row.relation, row.rhs);
            let (mut amin, mut amax) = (0.0, 0.0);
            for &(v, a) in &row.terms {
                let j = v.index();
                if a > 0.0 {
                    amin += a * lower[j];
                    amax += a * upper[j];
                } else {
                    amin += a * upper[j];
                    amax += a * lower[j];
                }
            }
            if amin > hi + BOUND_TOL || amax < lo - BOUND_TOL {
                return Outcome::Infeasible;
            }
            if amin >= lo && amax <= hi {
                keep[r] = false;
            }
        }
    }

    let kept_rows: Vec<usize> = (0..model.num_rows()).filter(|&r| keep[r]).collect();
    let m = kept_rows.len();
    let mut counts = vec![0usize; n + 1];
    for &r in &kept_rows {
        for &(v, _) in &model.constraints()[r].terms {
            counts[v.index() + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_start = counts.clone();
    let nnz = col_start[n];
    let mut fill = counts;
    let mut col_row = vec![0; nnz];
    let mut col_val = vec![0.0; nnz];
    for (i, &r) in kept_rows.iter().enumerate() {
        for &(v, a) in &model.constraints()[r].terms {
            let t = fill[v.index()];
            col_row[t] = i;
            col_val[t] = a;
            fill[v.index()] += 1;
        }
    }
    let mut cost: Vec<f64> = model.variables().iter().map(|v| v.cost).collect();
    cost.resize(n + m, 0.0);
    for &r in &kept_rows {
        let row = &model.constraints()[r];
        let (lo, hi) = row_range(row.relation, row.rhs);
        lower.push(lo);
        upper.push(hi);
    }
    Outcome::Reduced(Presolved {
        form: StandardForm {
            n,
            m,
            col_start,
            col_row,
            col_val,
            lower,
            upper,
            cost,
        },
        kept_rows,
        lower_src,
        upper_src,
    })
}

impl Presolved {
    /// Maps multipliers of the reduced problem back to the original rows.
    /// A reduced cost that is held by a presolve-derived bound is moved onto
    /// the singleton row that produced it.
    pub(crate) fn postsolve_duals(&self, num_rows: usize, y: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.form.n;
        let mut row_duals = vec![0.0; num_rows];
        for (i, &r) in self.kept_rows.iter().enumerate() {
            row_duals[r] = y[i];
        }
        let mut reduced = d[..n].to_vec();
        for j in 0..n {
            let dj = reduced[j];
            let src = if dj > 0.0 {
                self.lower_src[j]
            } else if dj < 0.0 {
                self.upper_src[j]
            } else {
                None
            };
            if let Some((r, a)) = src {
                row_duals[r] += dj / a;
                reduced[j] = 0.0;
            }
        }
        (row_duals, reduced)
    }
}
