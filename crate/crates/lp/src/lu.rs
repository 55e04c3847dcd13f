//! Sparse LU factorization of a simplex basis.
//!
//! The basis `B` (m x m, columns indexed by basis position) is reduced by
//! right-looking Gaussian elimination with Markowitz pivot selection and a
//! relative threshold test. Row operations are kept as a sequence of
//! elimination etas (`L`), pivot rows as `U`. Column replacements after a
//! simplex pivot are appended as product-form etas until the next
//! refactorization.

/// Entries with magnitude below this are dropped during elimination.
const DROP_TOL: f64 = 1e-14;
/// Smallest admissible pivot magnitude.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// Relative threshold: a pivot must be at least this fraction of its column max.
const REL_PIVOT_TOL: f64 = 0.1;
/// Number of candidate columns/rows examined before settling on the best pivot.
const SEARCH_LIMIT: usize = 4;

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions that received no pivot.
    pub positions: Vec<usize>,
    /// Rows that received no pivot.
    pub rows: Vec<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct BasisFactor {
    m: usize,
    l_row: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_row: Vec<usize>,
    u_col: Vec<usize>,
    u_piv: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

struct ActiveMatrix {
    col_rows: Vec<Vec<usize>>,
    col_vals: Vec<Vec<f64>>,
    row_cols: Vec<Vec<usize>>,
    col_done: Vec<bool>,
    row_done: Vec<bool>,
    col_bucket: Vec<Vec<usize>>,
    row_bucket: Vec<Vec<usize>>,
    max_count: usize,
}

impl ActiveMatrix {
    fn new(m: usize) -> Self {
        Self {
            col_rows: vec![Vec::new(); m],
            col_vals: vec![Vec::new(); m],
            row_cols: vec![Vec::new(); m],
            col_done: vec![false; m],
            row_done: vec![false; m],
            col_bucket: vec![Vec::new(); m + 2],
            row_bucket: vec![Vec::new(); m + 2],
            max_count: 0,
        }
    }

    fn push_col_bucket(&mut self, j: usize) {
        let c = self.col_rows[j].len();
        self.max_count = self.max_count.max(c);
        self.col_bucket[c].push(j);
    }

    fn push_row_bucket(&mut self, i: usize) {
        let c = self.row_cols[i].len();
        self.max_count = self.max_count.max(c);
        self.row_bucket[c].push(i);
    }

    fn find_in_col(&self, j: usize, i: usize) -> Option<usize> {
        self.col_rows[j].iter().position(|&r| r == i)
    }

    fn col_max(&self, j: usize) -> f64 {
        self.col_vals[j].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn acceptable(&self, j: usize, a: f64) -> bool {
        a.abs() > ABS_PIVOT_TOL && a.abs() >= REL_PIVOT_TOL * self.col_max(j)
    }

    /// Chooses the next pivot `(row, col, value)`.
    fn select_pivot(&mut self) -> Option<(usize, usize, f64)> {
        // Column singletons first: no fill, no threshold concerns beyond magnitude.
        while let Some(&j) = self.col_bucket[1].last() {
            self.col_bucket[1].pop();
            if self.col_done[j] || self.col_rows[j].len() != 1 {
                continue;
            }
            let a = self.col_vals[j][0];
            if a.abs() > ABS_PIVOT_TOL {
                return Some((self.col_rows[j][0], j, a));
            }
        }

        let mut best: Option<(usize, usize, usize, f64)> = None;
        let mut examined = 0;
        let consider = |best: &mut Option<(usize, usize, usize, f64)>, cost: usize, i: usize, j: usize, a: f64| {
            let better = match best {
                None => true,
                Some((bc, _, _, ba)) => cost < *bc || (cost == *bc && a.abs() > ba.abs()),
            };
            if better {
                *best = Some((cost, i, j, a));
            }
        };

        for c in 1..=self.max_count {
            if c >= 2 {
                let mut k = 0;
                while k < self.col_bucket[c].len() {
                    let j = self.col_bucket[c][k];
                    if self.col_done[j] || self.col_rows[j].len() != c {
                        self.col_bucket[c].swap_remove(k);
                        continue;
                    }
                    let cmax = self.col_max(j);
                    for (&i, &a) in self.col_rows[j].iter().zip(&self.col_vals[j]) {
                        if a.abs() > ABS_PIVOT_TOL && a.abs() >= REL_PIVOT_TOL * cmax {
                            let cost = (self.row_cols[i].len() - 1) * (c - 1);
                            consider(&mut best, cost, i, j, a);
                        }
                    }
                    examined += 1;
                    k += 1;
                    if examined >= SEARCH_LIMIT && best.is_some() {
                        break;
                    }
                }
            }
            if !(examined >= SEARCH_LIMIT && best.is_some()) {
                let mut k = 0;
                while k < self.row_bucket[c].len() {
                    let i = self.row_bucket[c][k];
                    if self.row_done[i] || self.row_cols[i].len() != c {
                        self.row_bucket[c].swap_remove(k);
                        continue;
                    }
                    for &j in &self.row_cols[i] {
                        let pos = self.find_in_col(j, i).expect("row/col pattern mismatch");
                        let a = self.col_vals[j][pos];
                        if self.acceptable(j, a) {
                            let cost = (c - 1) * (self.col_rows[j].len() - 1);
                            consider(&mut best, cost, i, j, a);
                        }
                    }
                    examined += 1;
                    k += 1;
                    if examined >= SEARCH_LIMIT && best.is_some() {
                        break;
                    }
                }
            }
            if let Some((cost, ..)) = best {
                if cost <= (c - 1) * (c - 1) || examined >= SEARCH_LIMIT {
                    break;
                }
            }
        }
        best.map(|(_, i, j, a)| (i, j, a))
    }
}

impl BasisFactor {
    /// Factorizes the m x m matrix whose column `pos` is produced by `column`.
    pub(crate) fn factorize<F>(m: usize, mut column: F) -> Result<Self, Singular>
    where
        F: FnMut(usize, &mut Vec<(usize, f64)>),
    {
        let mut act = ActiveMatrix::new(m);
        let mut buf = Vec::new();
        for j in 0..m {
            buf.clear();
            column(j, &mut buf);
            for &(i, a) in &buf {
                if a.abs() > DROP_TOL {
                    act.col_rows[j].push(i);
                    act.col_vals[j].push(a);
                    act.row_cols[i].push(j);
                }
            }
        }
        for j in 0..m {
            act.push_col_bucket(j);
        }
        for i in 0..m {
            act.push_row_bucket(i);
        }

        let mut f = BasisFactor {
            m,
            l_start: vec![0],
            u_start: vec![0],
            eta_start: vec![0],
            ..Default::default()
        };

        let mut urow: Vec<(usize, f64)> = Vec::new();
        let mut lcol: Vec<(usize, f64)> = Vec::new();
        for _ in 0..m {
            let Some((p, q, piv)) = act.select_pivot() else {
                let positions = (0..m).filter(|&j| !act.col_done[j]).collect();
                let rows = (0..m).filter(|&i| !act.row_done[i]).collect();
                return Err(Singular { positions, rows });
            };

            // Pivot row: detach from every column it touches.
            urow.clear();
            for &j in &act.row_cols[p] {
                if j == q {
                    continue;
                }
                let pos = act.find_in_col(j, p).expect("row/col pattern mismatch");
                urow.push((j, act.col_vals[j][pos]));
                act.col_rows[j].swap_remove(pos);
                act.col_vals[j].swap_remove(pos);
            }
            // Pivot column: multipliers for every other active row.
            lcol.clear();
            for (&i, &a) in act.col_rows[q].iter().zip(&act.col_vals[q]) {
                if i != p {
                    lcol.push((i, a / piv));
                }
            }
            for &(i, _) in &lcol {
                let k = act.row_cols[i].iter().position(|&c| c == q).expect("row/col pattern mismatch");
                act.row_cols[i].swap_remove(k);
            }
            act.col_rows[q].clear();
            act.col_vals[q].clear();
            act.row_cols[p].clear();
            act.col_done[q] = true;
            act.row_done[p] = true;

            // Schur complement update.
            for &(i, l) in &lcol {
                for &(j, apj) in &urow {
                    let delta = -l * apj;
                    match act.find_in_col(j, i) {
                        Some(pos) => {
                            let v = act.col_vals[j][pos] + delta;
                            if v.abs() <= DROP_TOL {
                                act.col_rows[j].swap_remove(pos);
                                act.col_vals[j].swap_remove(pos);
                                let k = act.row_cols[i].iter().position(|&c| c == j).expect("row/col pattern mismatch");
                                act.row_cols[i].swap_remove(k);
                            } else {
                                act.col_vals[j][pos] = v;
                            }
                        }
                        None => {
                            if delta.abs() > DROP_TOL {
                                act.col_rows[j].push(i);
                                act.col_vals[j].push(delta);
                                act.row_cols[i].push(j);
                            }
                        }
                    }
                }
            }
            for &(j, _) in &urow {
                act.push_col_bucket(j);
            }
            for &(i, _) in &lcol {
                act.push_row_bucket(i);
            }

            if !lcol.is_empty() {
                f.l_row.push(p);
                for &(i, l) in &lcol {
                    f.l_idx.push(i);
                    f.l_val.push(l);
                }
                f.l_start.push(f.l_idx.len());
            }
            f.u_row.push(p);
            f.u_col.push(q);
            f.u_piv.push(piv);
            for &(j, a) in &urow {
                f.u_idx.push(j);
                f.u_val.push(a);
            }
            f.u_start.push(f.u_idx.len());
        }
        Ok(f)
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    /// Solves `B x = rhs` in place: `rhs` is indexed by row on entry and by
    /// basis position on exit.
    pub(crate) fn ftran(&self, rhs: &mut [f64], work: &mut Vec<f64>) {
        debug_assert_eq!(rhs.len(), self.m);
        for k in 0..self.l_row.len() {
            let bp = rhs[self.l_row[k]];
            if bp != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    rhs[self.l_idx[t]] -= self.l_val[t] * bp;
                }
            }
        }
        work.clear();
        work.resize(self.m, 0.0);
        for k in (0..self.u_row.len()).rev() {
            let mut v = rhs[self.u_row[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                v -= self.u_val[t] * work[self.u_idx[t]];
            }
            work[self.u_col[k]] = v / self.u_piv[k];
        }
        rhs.copy_from_slice(work);
        for k in 0..self.eta_pos.len() {
            let r = self.eta_pos[k];
            let xr = rhs[r] / self.eta_piv[k];
            rhs[r] = xr;
            if xr != 0.0 {
                for t in self.eta_start[k]..self.eta_start[k + 1] {
                    rhs[self.eta_idx[t]] -= self.eta_val[t] * xr;
                }
            }
        }
    }

    /// Solves `y^T B = c^T` in place: `c` is indexed by basis position on
    /// entry and by row on exit.
    pub(crate) fn btran(&self, c: &mut [f64], work: &mut Vec<f64>) {
        debug_assert_eq!(c.len(), self.m);
        for k in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[k];
            let mut v = c[r];
            for t in self.eta_start[k]..self.eta_start[k + 1] {
                v -= self.eta_val[t] * c[self.eta_idx[t]];
            }
            c[r] = v / self.eta_piv[k];
        }
        work.clear();
        work.resize(self.m, 0.0);
        for k in 0..self.u_row.len() {
            let w = c[self.u_col[k]] / self.u_piv[k];
            work[self.u_row[k]] = w;
            if w != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[t]] -= self.u_val[t] * w;
                }
            }
        }
        for k in (0..self.l_row.len()).rev() {
            let mut v = work[self.l_row[k]];
            for t in self.l_start[k]..self.l_start[k + 1] {
                v -= self.l_val[t] * work[self.l_idx[t]];
            }
            work[self.l_row[k]] = v;
        }
        c.copy_from_slice(work);
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        self.eta_pos.push(pos);
        self.eta_piv.push(alpha[pos]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}
