//! Bounded-variable revised primal simplex.
//!
//! Every row gets a logical variable so that the working system is
//! `A x - z = 0` with bounds on both `x` and `z`. Phase 1 minimizes the sum
//! of bound violations of the basic variables, phase 2 the true objective;
//! the phase is re-derived every iteration from the current point.

use crate::lu::BasisFactor;
use crate::{LpError, LpStatus};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    Free,
}

/// Column-compressed constraint matrix plus bounds and costs for the
/// structural and logical variables.
#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    pub col_start: Vec<usize>,
    pub col_row: Vec<usize>,
    pub col_val: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
}

impl StandardForm {
    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            for t in self.col_start[j]..self.col_start[j + 1] {
                out[self.col_row[t]] = self.col_val[t];
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|t| self.col_val[t] * y[self.col_row[t]])
                .sum()
        } else {
            -y[j - self.n]
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    pub refactor_interval: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct SimplexResult {
    pub status: LpStatus,
    /// Values of all structural and logical variables.
    pub x: Vec<f64>,
    /// Row multipliers `y` with `B^T y = c_B`.
    pub y: Vec<f64>,
    /// Reduced costs of all variables.
    pub d: Vec<f64>,
    pub iterations: usize,
}

struct Simplex<'a> {
    p: &'a StandardForm,
    opts: &'a SimplexOptions,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    factor: BasisFactor,
    fresh: bool,
    work: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(p: &'a StandardForm, opts: &'a SimplexOptions) -> Self {
        let nt = p.n + p.m;
        let mut x = vec![0.0; nt];
        let mut state = vec![VarState::Basic; nt];
        for j in 0..p.n {
            let (l, u) = (p.lower[j], p.upper[j]);
            if l.is_finite() {
                x[j] = l;
                state[j] = VarState::Lower;
            } else if u.is_finite() {
                x[j] = u;
                state[j] = VarState::Upper;
            } else {
                state[j] = VarState::Free;
            }
        }
        let head = (p.n..nt).collect();
        Self {
            p,
            opts,
            x,
            state,
            head,
            factor: BasisFactor::default(),
            fresh: false,
            work: Vec::new(),
        }
    }

    fn nonbasic_at_nearest_bound(&mut self, j: usize) {
        let (l, u) = (self.p.lower[j], self.p.upper[j]);
        let v = self.x[j];
        if l.is_finite() && (!u.is_finite() || (v - l).abs() <= (u - v).abs()) {
            self.x[j] = l;
            self.state[j] = VarState::Lower;
        } else if u.is_finite() {
            self.x[j] = u;
            self.state[j] = VarState::Upper;
        } else {
            self.state[j] = VarState::Free;
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.p.m;
        for _attempt in 0..=m {
            let p = self.p;
            let head = &self.head;
            let result = BasisFactor::factorize(m, |pos, out| {
                let j = head[pos];
                if j < p.n {
                    for t in p.col_start[j]..p.col_start[j + 1] {
                        out.push((p.col_row[t], p.col_val[t]));
                    }
                } else {
                    out.push((j - p.n, -1.0));
                }
            });
            match result {
                Ok(f) => {
                    self.factor = f;
                    self.fresh = true;
                    self.recompute_basic_values();
                    return Ok(());
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let old = self.head[pos];
                        self.nonbasic_at_nearest_bound(old);
                        let logical = self.p.n + row;
                        self.head[pos] = logical;
                        self.state[logical] = VarState::Basic;
                    }
                }
            }
        }
        Err(LpError::Numerical("basis repair did not converge"))
    }

    fn recompute_basic_values(&mut self) {
        let m = self.p.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.p.n + m {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let v = self.x[j];
                if j < self.p.n {
                    for t in self.p.col_start[j]..self.p.col_start[j + 1] {
                        rhs[self.p.col_row[t]] -= self.p.col_val[t] * v;
                    }
                } else {
                    rhs[j - self.p.n] += v;
                }
            }
        }
        self.factor.ftran(&mut rhs, &mut self.work);
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        if self.x[j] < self.p.lower[j] - PRIMAL_TOL {
            -1.0
        } else if self.x[j] > self.p.upper[j] + PRIMAL_TOL {
            1.0
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, y: &[f64], phase1: bool) -> Vec<f64> {
        let nt = self.p.n + self.p.m;
        let mut d = vec![0.0; nt];
        for (j, dj) in d.iter_mut().enumerate() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.p.cost[j] };
            *dj = c - self.p.column_dot(j, y);
        }
        d
    }

    fn run(mut self) -> Result<SimplexResult, LpError> {
        let m = self.p.m;
        let nt = self.p.n + m;
        self.refactor()?;
        let bland_threshold = (5 * nt).clamp(50, 2000);
        let mut degenerate_run = 0usize;
        let mut iterations = 0usize;
        let mut alpha = vec![0.0; m];
        let mut y = vec![0.0; m];

        loop {
            if self.factor.num_updates() >= self.opts.refactor_interval {
                self.refactor()?;
            }
            let phase1 = self.head.iter().any(|&j| self.infeasibility(j) != 0.0);
            for (pos, &j) in self.head.iter().enumerate() {
                y[pos] = if phase1 { self.infeasibility(j) } else { self.p.cost[j] };
            }
            self.factor.btran(&mut y, &mut self.work);
            let d = self.reduced_costs(&y, phase1);

            let bland = degenerate_run >= bland_threshold;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..nt {
                let dj = d[j];
                let eligible = match self.state[j] {
                    VarState::Basic => false,
                    _ if self.p.lower[j] == self.p.upper[j] => false,
                    VarState::Lower => dj < -DUAL_TOL,
                    VarState::Upper => dj > DUAL_TOL,
                    VarState::Free => dj.abs() > DUAL_TOL,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, dj));
                    break;
                }
                if entering.is_none_or(|(_, best)| dj.abs() > best.abs()) {
                    entering = Some((j, dj));
                }
            }

            let Some((q, dq)) = entering else {
                if !self.fresh {
                    self.refactor()?;
                    continue;
                }
                let status = if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
                return Ok(SimplexResult { status, x: self.x, y, d, iterations });
            };

            if iterations >= self.opts.max_iterations {
                return Ok(SimplexResult {
                    status: LpStatus::IterationLimit,
                    x: self.x,
                    y,
                    d,
                    iterations,
                });
            }
            iterations += 1;

            alpha.iter_mut().for_each(|a| *a = 0.0);
            self.p.scatter_column(q, &mut alpha);
            self.factor.ftran(&mut alpha, &mut self.work);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            // Harris pass 1: relaxed step bound.
            let mut t_max = f64::INFINITY;
            let target = |s: &Self, j: usize, delta: f64| -> Option<f64> {
                let (l, u, v) = (s.p.lower[j], s.p.upper[j], s.x[j]);
                if delta < 0.0 {
                    if v > u + PRIMAL_TOL {
                        Some(u)
                    } else if v < l - PRIMAL_TOL || !l.is_finite() {
                        None
                    } else {
                        Some(l)
                    }
                } else if v < l - PRIMAL_TOL {
                    Some(l)
                } else if v > u + PRIMAL_TOL || !u.is_finite() {
                    None
                } else {
                    Some(u)
                }
            };
            for (pos, &j) in self.head.iter().enumerate() {
                let delta = -dir * alpha[pos];
                if delta.abs() < PIVOT_TOL {
                    continue;
                }
                if let Some(b) = target(&self, j, delta) {
                    let r = ((b - self.x[j]) / delta).max(0.0) + PRIMAL_TOL / delta.abs();
                    t_max = t_max.min(r);
                }
            }

            let range = self.p.upper[q] - self.p.lower[q];
            if range.is_finite() && range <= t_max {
                let t = range;
                self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                self.x[q] = if dir > 0.0 { self.p.upper[q] } else { self.p.lower[q] };
                for (pos, &j) in self.head.iter().enumerate() {
                    self.x[j] -= dir * t * alpha[pos];
                }
                degenerate_run = 0;
                self.fresh = false;
                continue;
            }
            if t_max == f64::INFINITY {
                if phase1 {
                    return Err(LpError::Numerical("unbounded phase 1 ray"));
                }
                return Ok(SimplexResult {
                    status: LpStatus::Unbounded,
                    x: self.x,
                    y,
                    d,
                    iterations,
                });
            }

            // Pass 2: among rows within the relaxed bound, take the largest pivot.
            let mut leave: Option<(usize, f64, f64)> = None;
            let mut best_ratio = f64::INFINITY;
            for (pos, &j) in self.head.iter().enumerate() {
                let delta = -dir * alpha[pos];
                if delta.abs() < PIVOT_TOL {
                    continue;
                }
                let Some(b) = target(&self, j, delta) else { continue };
                let r = (b - self.x[j]) / delta;
                if r > t_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lp, _, _)) => {
                        if bland {
                            r < best_ratio - DEGENERATE_STEP
                                || (r <= best_ratio + DEGENERATE_STEP && j < self.head[lp])
                        } else {
                            alpha[pos].abs() > alpha[lp].abs()
                        }
                    }
                };
                if better {
                    leave = Some((pos, b, r));
                    best_ratio = best_ratio.min(r);
                }
            }
            let (r_pos, bound, ratio) = leave.expect("pass 2 always finds the pass 1 minimizer");
            let t = ratio.max(0.0);

            self.x[q] += dir * t;
            for (pos, &j) in self.head.iter().enumerate() {
                self.x[j] -= dir * t * alpha[pos];
            }
            let out = self.head[r_pos];
            self.x[out] = bound;
            self.state[out] = if bound == self.p.lower[out] { VarState::Lower } else { VarState::Upper };
            if self.p.lower[out] == self.p.upper[out] {
                self.state[out] = VarState::Lower;
            }
            self.head[r_pos] = q;
            self.state[q] = VarState::Basic;
            self.factor.update(r_pos, &alpha);
            self.fresh = false;

            if t <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }
}

pub(crate) fn solve_standard(p: &StandardForm, opts: &SimplexOptions) -> Result<SimplexResult, LpError> {
    Simplex::new(p, opts).run()
}
