//! Linear programming for small to mid-sized sparse models.
//!
//! Models are built with [`LpModel`] and solved by any [`LpSolver`]; the
//! bundled [`PrimalSimplex`] is a sparse revised simplex with bounded
//! variables.
//!
//! ```
//! use hypodist_lp::{LpModel, Relation, LpStatus};
//!
//! let mut lp = LpModel::new();
//! let x = lp.add_variable(0.0, f64::INFINITY, -1.0).unwrap();
//! let y = lp.add_variable(0.0, f64::INFINITY, -1.0).unwrap();
//! lp.add_constraint([(x, 1.0), (y, 2.0)], Relation::Le, 4.0).unwrap();
//! lp.add_constraint([(x, 3.0), (y, 1.0)], Relation::Le, 6.0).unwrap();
//! let sol = hypodist_lp::solve(&lp).unwrap();
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective + 2.8).abs() < 1e-9);
//! ```

mod export;
mod lu;
mod model;
mod presolve;
mod simplex;

pub mod brute_force;


use std::fmt;

pub use export::{to_lp_string, write_lp};
pub use model::{Constraint, LpModel, Relation, RowId, VarId, Variable};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("invalid variable bounds [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("variable handle {0} does not belong to this model")]
    InvalidHandle(usize),
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only for [`LpStatus::Optimal`].
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// One multiplier per constraint row.
    pub row_duals: Vec<f64>,
    /// `c - A^T y` per variable.
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub trait LpSolver {
    fn solve(&self, model: &LpModel) -> Result<LpSolution, LpError>;
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub presolve: bool,
    /// Product-form updates allowed before the basis is refactorized.
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            presolve: true,
            refactor_interval: 100,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PrimalSimplex {
    pub options: SolverOptions,
}

impl PrimalSimplex {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for PrimalSimplex {
    fn solve(&self, model: &LpModel) -> Result<LpSolution, LpError> {
        let n = model.num_vars();
        let pre = match presolve::presolve(model, self.options.presolve) {
            presolve::Outcome::Reduced(p) => p,
            presolve::Outcome::Infeasible => {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    values: model.variables().iter().map(|v| clamp_start(v.lower, v.upper)).collect(),
                    objective: f64::NAN,
                    iterations: 0,
                    row_duals: vec![0.0; model.num_rows()],
                    reduced_costs: vec![0.0; n],
                });
            }
        };
        let opts = simplex::SimplexOptions {
            max_iterations: self.options.max_iterations,
            refactor_interval: self.options.refactor_interval.max(1),
        };
        let res = simplex::solve_standard(&pre.form, &opts)?;
        let values = res.x[..n].to_vec();
        let (row_duals, reduced_costs) = pre.postsolve_duals(model.num_rows(), &res.y, &res.d);
        Ok(LpSolution {
            status: res.status,
            objective: model.objective_value(&values),
            values,
            iterations: res.iterations,
            row_duals,
            reduced_costs,
        })
    }
}

fn clamp_start(lower: f64, upper: f64) -> f64 {
    0.0f64.clamp(lower, upper)
}

/// Solves `model` with a default [`PrimalSimplex`].
pub fn solve(model: &LpModel) -> Result<LpSolution, LpError> {
    PrimalSimplex::default().solve(model)
}
