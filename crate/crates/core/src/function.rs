//! Epi-splines on a grid: order 0 (one value per cell) and order 1
//! (continuous piecewise-linear through node values).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Rect};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// Constant on each open cell; a point on a shared face takes the largest
    /// value of its incident closed cells.
    Zero,
    /// Continuous piecewise-linear on the Kuhn split of every cell (the main
    /// diagonal split for m = 2).
    One,
}

/// A function `S -> [0, 1]` stored on a grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid>,
    order: Order,
    values: Vec<f64>,
    monotone: bool,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.values == other.values && *self.grid == *other.grid
    }
}

const MONOTONE_TOL: f64 = 1e-12;

impl GridFunction {
    pub fn new(grid: Arc<Grid>, order: Order, values: Vec<f64>) -> Result<Self> {
        let expected = match order {
            Order::Zero => grid.num_cells(),
            Order::One => grid.num_nodes(),
        };
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("value {v} outside [0, 1]")));
        }
        let monotone = is_lattice_monotone(&grid, order, &values);
        Ok(Self {
            grid,
            order,
            values,
            monotone,
        })
    }

    /// Order-1 function from node values, clamping round-off outside `[0, 1]`.
    pub fn from_node_values_clamped(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self::new(grid, Order::One, values)
    }

    pub fn constant(grid: Arc<Grid>, order: Order, c: f64) -> Result<Self> {
        let n = match order {
            Order::Zero => grid.num_cells(),
            Order::One => grid.num_nodes(),
        };
        Self::new(grid, order, vec![c; n])
    }

    /// Order-1 function with node values `f(node)`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.num_nodes()).map(|k| f(&grid.node(k))).collect();
        Self::new(grid, Order::One, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nondecreasing along every axis (checked on the stored values, which is
    /// exact for both orders).
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.grid.domain().contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation for points already known to lie in the domain.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self.order {
            Order::Zero => self.eval_order0(x),
            Order::One => self.weights(x).iter().map(|&(k, w)| w * self.values[k]).sum(),
        }
    }

    fn eval_order0(&self, x: &[f64]) -> f64 {
        let g = &*self.grid;
        let m = g.dim();
        // Per axis, the one or two cells whose closure contains the coordinate.
        let mut choices: Vec<[usize; 2]> = Vec::with_capacity(m);
        let mut counts = Vec::with_capacity(m);
        for (i, &v) in x.iter().enumerate() {
            let k = g.axis_cell(i, v);
            let ax = g.axis(i);
            if v == ax[k] && k > 0 {
                choices.push([k - 1, k]);
                counts.push(2);
            } else {
                choices.push([k, k]);
                counts.push(1);
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut multi = vec![0; m];
        for combo in 0..1usize << m {
            if (0..m).any(|i| combo >> i & 1 == 1 && counts[i] == 1) {
                continue;
            }
            for i in 0..m {
                multi[i] = choices[i][combo >> i & 1];
            }
            best = best.max(self.values[g.cell_index(&multi)]);
        }
        best
    }

    /// Interpolation weights `(node, weight)` of an order-1 function at `x`.
    /// Inside a cell the weights follow the Kuhn simplex selected by sorting
    /// the local coordinates in decreasing order.
    pub fn weights(&self, x: &[f64]) -> Vec<(usize, f64)> {
        interpolation_weights(&self.grid, x)
    }

    /// Supremum over a closed cell.
    pub fn cell_sup(&self, rect: &Rect) -> Result<f64> {
        self.box_max(&rect.lower, &rect.upper)
    }

    /// Maximum over the closed box `[lo, hi] ∩ S`.
    pub fn box_max(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        let d = self.grid.domain();
        let lo = d.clip(lo);
        let hi = d.clip(hi);
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument("empty box".into()));
        }
        if self.monotone {
            return Ok(self.eval_unchecked(&hi));
        }
        let g = &*self.grid;
        let m = g.dim();
        let first: Vec<usize> = (0..m).map(|i| g.axis_cell(i, lo[i])).collect();
        let last: Vec<usize> = (0..m).map(|i| g.axis_cell(i, hi[i])).collect();
        // Cells whose closure meets the box.
        let first: Vec<usize> = (0..m)
            .map(|i| if first[i] > 0 && lo[i] == g.axis(i)[first[i]] { first[i] - 1 } else { first[i] })
            .collect();
        let mut best = f64::NEG_INFINITY;
        let mut multi = first.clone();
        loop {
            let k = g.cell_index(&multi);
            match self.order {
                Order::Zero => best = best.max(self.values[k]),
                Order::One => best = best.max(self.cell_box_max(k, &lo, &hi)?),
            }
            let mut i = m;
            loop {
                if i == 0 {
                    return Ok(best);
                }
                i -= 1;
                if multi[i] < last[i] {
                    multi[i] += 1;
                    break;
                }
                multi[i] = first[i];
            }
        }
    }

    /// Maximum of an order-1 function over `cell ∩ [lo, hi]`.
    fn cell_box_max(&self, k: usize, lo: &[f64], hi: &[f64]) -> Result<f64> {
        let g = &*self.grid;
        let rect = g.cell(k);
        let m = g.dim();
        let a: Vec<f64> = (0..m).map(|i| lo[i].max(rect.lower[i])).collect();
        let b: Vec<f64> = (0..m).map(|i| hi[i].min(rect.upper[i])).collect();
        if a.iter().zip(&b).any(|(x, y)| x > y) {
            return Ok(f64::NEG_INFINITY);
        }
        let corners = Rect::new(a.clone(), b.clone()).signed_vertices();
        let mut best = corners
            .iter()
            .map(|(v, _)| self.eval_unchecked(v))
            .fold(f64::NEG_INFINITY, f64::max);
        match m {
            1 => {}
            2 => {
                // Where the cell diagonal crosses the box.
                let to_local = |i: usize, v: f64| (v - rect.lower[i]) / (rect.upper[i] - rect.lower[i]);
                let s0 = to_local(0, a[0]).max(to_local(1, a[1]));
                let s1 = to_local(0, b[0]).min(to_local(1, b[1]));
                if s0 <= s1 {
                    for s in [s0, s1] {
                        let p: Vec<f64> = (0..2)
                            .map(|i| rect.lower[i] + s * (rect.upper[i] - rect.lower[i]))
                            .collect();
                        best = best.max(self.eval_unchecked(&g.domain().clip(&p)));
                    }
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "box maximum of a non-monotone order-1 function needs m <= 2".into(),
                ))
            }
        }
        Ok(best)
    }

    /// Signed corner sum Δ_A F over the rectangle `rect`.
    pub fn delta_rect(&self, rect: &Rect) -> Result<f64> {
        rect.signed_vertices()
            .iter()
            .map(|(v, s)| self.eval(v).map(|f| s * f))
            .sum()
    }

    /// Δ over grid cell `k`, read directly from node values (order 1).
    pub fn cell_delta(&self, k: usize) -> f64 {
        match self.order {
            Order::One => {
                let m = self.grid.dim();
                self.grid
                    .cell_corner_nodes(k)
                    .iter()
                    .enumerate()
                    .map(|(j, &n)| {
                        let at_lower = m - j.count_ones() as usize;
                        let s = if at_lower % 2 == 0 { 1.0 } else { -1.0 };
                        s * self.values[n]
                    })
                    .sum()
            }
            Order::Zero => self.delta_rect(&self.grid.cell(k)).expect("cell corners lie in S"),
        }
    }

    /// Probability mass per cell, clipped at zero and normalized.
    pub fn cell_masses(&self) -> Result<Vec<f64>> {
        let raw: Vec<f64> = (0..self.grid.num_cells()).map(|k| self.cell_delta(k).max(0.0)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateFunction("total cell mass is not positive".into()));
        }
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    /// Mean of the cell-mass distribution with every cell represented by its
    /// centroid.
    pub fn expected_value(&self) -> Result<Vec<f64>> {
        let masses = self.cell_masses()?;
        let mut mean = vec![0.0; self.grid.dim()];
        for (k, p) in masses.iter().enumerate() {
            if *p > 0.0 {
                for (acc, c) in mean.iter_mut().zip(self.grid.cell(k).centroid()) {
                    *acc += p * c;
                }
            }
        }
        Ok(mean)
    }

    /// Order-1 function on `grid` taking this function's values at its nodes.
    pub fn resample(&self, grid: Arc<Grid>) -> Result<Self> {
        if grid.domain() != self.grid.domain() {
            return Err(Error::InvalidArgument("resampling needs a grid on the same domain".into()));
        }
        let values = (0..grid.num_nodes()).map(|k| self.eval_unchecked(&grid.node(k))).collect();
        Self::new(grid, Order::One, values)
    }
}

fn is_lattice_monotone(grid: &Grid, order: Order, values: &[f64]) -> bool {
    match order {
        Order::One => grid
            .axis_edges()
            .iter()
            .all(|&(a, b)| values[a] <= values[b] + MONOTONE_TOL),
        Order::Zero => {
            let cells = grid.cells_per_axis();
            (0..grid.num_cells()).all(|k| {
                let multi = grid.cell_multi_index(k);
                (0..grid.dim()).all(|i| {
                    if multi[i] + 1 == cells[i] {
                        return true;
                    }
                    let mut up = multi.clone();
                    up[i] += 1;
                    values[k] <= values[grid.cell_index(&up)] + MONOTONE_TOL
                })
            })
        }
    }
}

/// Kuhn-simplex interpolation weights on `grid` at a point of its domain.
pub(crate) fn interpolation_weights(grid: &Grid, x: &[f64]) -> Vec<(usize, f64)> {
    let m = grid.dim();
    let mut multi = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for (i, &v) in x.iter().enumerate() {
        let k = grid.axis_cell(i, v);
        let ax = grid.axis(i);
        multi.push(k);
        t.push(((v - ax[k]) / (ax[k + 1] - ax[k])).clamp(0.0, 1.0));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(m + 1);
    let mut prev = 1.0;
    let mut corner = multi;
    for step in 0..=m {
        let next = if step < m { t[perm[step]] } else { 0.0 };
        let w = prev - next;
        if w != 0.0 {
            out.push((grid.node_index(&corner), w));
        }
        if step < m {
            corner[perm[step]] += 1;
        }
        prev = next;
    }
    out
}
