//! Shape-constrained CDF estimation by bisection over feasibility-slack LPs.
//!
//! For a trial `eta`, the LP looks for node values `v` of an order-1 function
//! `F` with `η⁺(F, F0) <= eta` (hard) and `η⁺(F, G0) <= delta + s` (soft),
//! minimizing the slack `s`. The smallest `eta` whose optimal slack is at most
//! the tolerance is the estimate.

use std::sync::Arc;
use std::time::Instant;

use hypodist_lp::{LpModel, LpSolver, LpStatus, PrimalSimplex, Relation, SolverOptions, VarId};
use serde::{Deserialize, Serialize};

use crate::function::{interpolation_weights, GridFunction};
use crate::grid::{Domain, Grid};
use crate::metrics::{self, Ball};
use crate::{Error, Result};

/// Shape requirements on the estimate beyond monotonicity, which is always imposed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeConstraints {
    /// `F = 0` at every node on a face through the lower corner.
    pub boundary_zero: bool,
    /// `F = 1` at the upper corner.
    pub boundary_one: bool,
    /// Nonnegative mass on every grid cell.
    pub distribution_condition: bool,
    /// Bound `L` on the slope along every edge of the simplicial split.
    pub bounded_growth: Option<f64>,
}

impl Default for ShapeConstraints {
    fn default() -> Self {
        Self {
            boundary_zero: true,
            boundary_one: true,
            distribution_condition: true,
            bounded_growth: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimationProblem {
    pub f0: GridFunction,
    pub g0: GridFunction,
    pub delta: f64,
    pub ball: Ball,
    pub shape: ShapeConstraints,
    /// Slack threshold and bisection tolerance.
    pub tol: f64,
    pub max_lp_iterations: usize,
}

impl EstimationProblem {
    /// Problem with the covering ball, default shape flags and `tol = 1e-8`.
    pub fn new(f0: GridFunction, g0: GridFunction, delta: f64) -> Result<Self> {
        let ball = Ball::covering(f0.grid().domain());
        let p = Self {
            f0,
            g0,
            delta,
            ball,
            shape: ShapeConstraints::default(),
            tol: 1e-8,
            max_lp_iterations: 1_000_000,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.f0.grid_arc()
    }

    pub fn validate(&self) -> Result<()> {
        if self.f0.grid() != self.g0.grid() {
            return Err(Error::InvalidArgument("F0 and G0 must share a grid".into()));
        }
        if !matches!(self.f0.grid().dim(), 1 | 2) {
            return Err(Error::InvalidArgument("estimation supports m = 1 and m = 2".into()));
        }
        if self.f0.order() != crate::Order::One || self.g0.order() != crate::Order::One {
            return Err(Error::InvalidArgument("F0 and G0 must be order-1 functions".into()));
        }
        if !self.f0.is_monotone() || !self.g0.is_monotone() {
            return Err(Error::InvalidArgument("F0 and G0 must be nondecreasing".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be finite and >= 0, got {}", self.delta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if let Some(l) = self.shape.bounded_growth {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!("growth bound must be finite and >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// One LP solve of the bisection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub eta: f64,
    /// Optimal slack, `None` when the LP is infeasible at this `eta`.
    pub slack: Option<f64>,
    pub lp_iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct EstimateResult {
    pub solution: GridFunction,
    pub eta: f64,
    pub slack: f64,
    pub history: Vec<StepRecord>,
    pub wall_seconds: f64,
    pub lp_variables: usize,
    pub lp_rows: usize,
}

/// The assembled LP together with its variable layout.
pub struct AssembledLp {
    pub model: LpModel,
    /// Variable of node `k` is `VarId` number `k`.
    pub nodes: Vec<VarId>,
    pub slack: VarId,
}

fn on_lower_face(domain: &Domain, x: &[f64]) -> bool {
    x.iter().zip(domain.lower()).any(|(v, a)| v == a)
}

/// Builds the feasibility-slack LP for a fixed `eta`.
pub fn assemble_lp(problem: &EstimationProblem, eta: f64) -> Result<AssembledLp> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    problem.validate()?;
    let grid = problem.grid();
    let domain = grid.domain();
    let n = grid.num_nodes();
    let rho = problem.ball.rho;
    let shape = &problem.shape;
    let mut lp = LpModel::with_capacity(n + 1, 6 * grid.num_cells());

    let beta = domain.upper().to_vec();
    let mut nodes = Vec::with_capacity(n);
    for k in 0..n {
        let x = grid.node(k);
        let (lo, hi) = if shape.boundary_one && x == beta {
            (1.0, 1.0)
        } else if shape.boundary_zero && on_lower_face(domain, &x) {
            (0.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        nodes.push(lp.add_variable(lo, hi, 0.0)?);
    }
    let slack = lp.add_variable(0.0, f64::INFINITY, 1.0)?;

    for (a, b) in grid.axis_edges() {
        lp.add_constraint([(nodes[a], 1.0), (nodes[b], -1.0)], Relation::Le, 0.0)?;
    }
    if shape.distribution_condition {
        let m = grid.dim();
        for k in 0..grid.num_cells() {
            let terms = grid.cell_corner_nodes(k).into_iter().enumerate().map(|(j, node)| {
                let at_lower = m - j.count_ones() as usize;
                (nodes[node], if at_lower % 2 == 0 { 1.0 } else { -1.0 })
            });
            lp.add_constraint(terms, Relation::Ge, 0.0)?;
        }
    }
    if let Some(l) = shape.bounded_growth {
        for (a, b) in grid.simplex_edges()? {
            let (xa, xb) = (grid.node(a), grid.node(b));
            let len = xa.iter().zip(&xb).map(|(p, q)| (q - p).abs()).fold(0.0, f64::max);
            lp.add_constraint([(nodes[b], 1.0), (nodes[a], -1.0)], Relation::Le, l * len)?;
        }
    }

    // Cell constraints of η⁺(F, H) <= radius, with the slack on the ambiguity side.
    let mut add_partition_rows = |target: &GridFunction, radius: f64, with_slack: bool| -> Result<()> {
        for k in 0..grid.num_cells() {
            let cell = grid.cell(k);
            let corners = grid.cell_corner_nodes(k);
            let upper_node = corners[corners.len() - 1];
            let p: Vec<f64> = cell
                .lower
                .iter()
                .zip(domain.upper())
                .map(|(l, b)| (l + radius).min(*b))
                .collect();
            // F(p) + radius (+ s) >= min(H(u), rho)
            let rhs = target.eval_unchecked(&cell.upper).min(rho) - radius;
            if rhs > 0.0 {
                let mut terms: Vec<(VarId, f64)> = interpolation_weights(grid, &p)
                    .into_iter()
                    .map(|(node, w)| (nodes[node], w))
                    .collect();
                if with_slack {
                    terms.push((slack, 1.0));
                }
                lp.add_constraint(terms, Relation::Ge, rhs)?;
            }
            // H(p) + radius (+ s) >= min(F(u), rho); vacuous once the constant side reaches rho or 1.
            let c = target.eval_unchecked(&p) + radius;
            if c < rho.min(1.0) {
                let mut terms = vec![(nodes[upper_node], 1.0)];
                if with_slack {
                    terms.push((slack, -1.0));
                }
                lp.add_constraint(terms, Relation::Le, c)?;
            }
        }
        Ok(())
    };
    add_partition_rows(&problem.f0, eta, false)?;
    add_partition_rows(&problem.g0, problem.delta, true)?;

    Ok(AssembledLp { model: lp, nodes, slack })
}

/// Outcome of one LP solve at fixed `eta`.
#[derive(Clone, Debug)]
pub struct SlackSolve {
    pub eta: f64,
    /// Optimal slack and the corresponding estimate; `None` if the LP is infeasible.
    pub optimum: Option<(f64, GridFunction)>,
    pub lp_iterations: usize,
    pub lp_variables: usize,
    pub lp_rows: usize,
    pub seconds: f64,
}

/// Assembles and solves the LP at `eta`.
pub fn solve_step(problem: &EstimationProblem, eta: f64) -> Result<SlackSolve> {
    let start = Instant::now();
    let lp = assemble_lp(problem, eta)?;
    let solver = PrimalSimplex::new(SolverOptions {
        max_iterations: problem.max_lp_iterations,
        ..SolverOptions::default()
    });
    let sol = solver.solve(&lp.model)?;
    let optimum = match sol.status {
        LpStatus::Optimal => {
            let values = lp.nodes.iter().map(|&v| sol.value(v)).collect();
            let f = GridFunction::from_node_values_clamped(problem.grid().clone(), values)?;
            Some((sol.value(lp.slack).max(0.0), f))
        }
        LpStatus::Infeasible => None,
        LpStatus::IterationLimit => return Err(Error::IterationLimit { eta }),
        LpStatus::Unbounded => return Err(Error::Lp(hypodist_lp::LpError::Numerical("bounded LP reported unbounded"))),
    };
    Ok(SlackSolve {
        eta,
        optimum,
        lp_iterations: sol.iterations,
        lp_variables: lp.model.num_vars(),
        lp_rows: lp.model.num_rows(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Minimal feasibility slack at `eta` and the minimizing function.
pub fn min_slack(problem: &EstimationProblem, eta: f64) -> Result<(f64, GridFunction)> {
    solve_step(problem, eta)?.optimum.ok_or(Error::ShapeInfeasible)
}

fn record(step: &SlackSolve) -> StepRecord {
    StepRecord {
        eta: step.eta,
        slack: step.optimum.as_ref().map(|o| o.0),
        lp_iterations: step.lp_iterations,
        seconds: step.seconds,
    }
}

/// Smallest `eta` (within `tol`) whose minimal slack is at most `tol`; if even
/// `eta = 1` leaves positive slack, returns `eta = 1` with that slack.
pub fn estimate(problem: &EstimationProblem) -> Result<EstimateResult> {
    let start = Instant::now();
    let tol = problem.tol;
    let mut history = Vec::new();

    let top = solve_step(problem, 1.0)?;
    history.push(record(&top));
    let (lp_variables, lp_rows) = (top.lp_variables, top.lp_rows);
    let (top_slack, top_f) = top.optimum.ok_or(Error::ShapeInfeasible)?;
    let finish = |eta, slack, solution, history| EstimateResult {
        solution,
        eta,
        slack,
        history,
        wall_seconds: start.elapsed().as_secs_f64(),
        lp_variables,
        lp_rows,
    };
    if top_slack > tol {
        return Ok(finish(1.0, top_slack, top_f, history));
    }

    let feasible = |step: &SlackSolve| step.optimum.as_ref().is_some_and(|o| o.0 <= tol);
    let bottom = solve_step(problem, 0.0)?;
    history.push(record(&bottom));
    if feasible(&bottom) {
        let (s, f) = bottom.optimum.expect("feasible step has an optimum");
        return Ok(finish(0.0, s, f, history));
    }

    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = (top_slack, top_f);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let step = solve_step(problem, mid)?;
        history.push(record(&step));
        if feasible(&step) {
            hi = mid;
            best = step.optimum.expect("feasible step has an optimum");
        } else {
            lo = mid;
        }
    }
    Ok(finish(hi, best.0, best.1, history))
}

/// One level of a refinement study.
#[derive(Clone, Debug)]
pub struct LevelReport {
    pub cells_per_axis: usize,
    pub result: EstimateResult,
    /// Hypo-distance estimate to the previous level's solution, resampled onto this grid.
    pub distance_to_previous: Option<metrics::DistanceReport>,
}

/// Runs `estimate` on uniform grids with the given cell counts; `build`
/// constructs the problem on each grid.
pub fn refinement_study(
    domain: &Domain,
    levels: &[usize],
    quad_points: usize,
    build: impl Fn(Arc<Grid>) -> Result<EstimationProblem>,
) -> Result<Vec<LevelReport>> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("a refinement study needs at least 2 levels".into()));
    }
    let mut out: Vec<LevelReport> = Vec::with_capacity(levels.len());
    for &cells in levels {
        let grid = Arc::new(Grid::with_cells(domain.clone(), cells)?);
        let result = estimate(&build(grid.clone())?)?;
        let distance_to_previous = match out.last() {
            Some(prev) => {
                let coarse = prev.result.solution.resample(grid.clone())?;
                Some(metrics::hypo_dist_estimate(&coarse, &result.solution, quad_points, 1e-6)?)
            }
            None => None,
        };
        out.push(LevelReport {
            cells_per_axis: cells,
            result,
            distance_to_previous,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::CdfSpec;

    fn line(cells: usize) -> Arc<Grid> {
        Arc::new(Grid::with_cells(Domain::unit(1), cells).unwrap())
    }

    #[test]
    fn row_count_small_1d() {
        let g = line(2);
        // F0 = G0 = identity-like ramp with values strictly inside (0, 1).
        let f0 = GridFunction::new(g.clone(), crate::Order::One, vec![0.2, 0.5, 0.8]).unwrap();
        let mut p = EstimationProblem::new(f0.clone(), f0, 0.0).unwrap();
        p.shape = ShapeConstraints {
            boundary_zero: false,
            boundary_one: false,
            distribution_condition: false,
            bounded_growth: None,
        };
        let lp = assemble_lp(&p, 0.0).unwrap();
        assert_eq!(lp.model.num_vars(), 4);
        assert_eq!(lp.model.num_rows(), 2 + 8);
    }

    #[test]
    fn boundary_flags_fix_vertices() {
        let g = line(4);
        let f0 = CdfSpec::UniformBox {
            lower: vec![0.0],
            upper: vec![1.0],
        }
        .realize(g)
        .unwrap();
        let p = EstimationProblem::new(f0.clone(), f0, 0.5).unwrap();
        let lp = assemble_lp(&p, 1.0).unwrap();
        let v = lp.model.variables();
        assert_eq!((v[0].lower, v[0].upper), (0.0, 0.0));
        assert_eq!((v[4].lower, v[4].upper), (1.0, 1.0));
    }

    #[test]
    fn zero_growth_is_shape_infeasible() {
        let g = line(4);
        let f0 = CdfSpec::UniformBox {
            lower: vec![0.0],
            upper: vec![1.0],
        }
        .realize(g)
        .unwrap();
        let mut p = EstimationProblem::new(f0.clone(), f0, 0.5).unwrap();
        p.shape.bounded_growth = Some(0.0);
        assert!(matches!(estimate(&p), Err(Error::ShapeInfeasible)));
        assert!(matches!(min_slack(&p, 1.0), Err(Error::ShapeInfeasible)));
    }

    #[test]
    fn vacuous_ambiguity_gives_zero_slack() {
        let g = line(8);
        let f0 = CdfSpec::UniformBox {
            lower: vec![0.0],
            upper: vec![0.5],
        }
        .realize(g.clone())
        .unwrap();
        let g0 = CdfSpec::UniformBox {
            lower: vec![0.5],
            upper: vec![1.0],
        }
        .realize(g)
        .unwrap();
        let p = EstimationProblem::new(f0, g0, 1.0).unwrap();
        for eta in [0.3, 1.0] {
            if let Ok((s, _)) = min_slack(&p, eta) {
                assert_eq!(s, 0.0);
            }
        }
        assert!(assemble_lp(&p, 1.5).is_err());
    }
}
