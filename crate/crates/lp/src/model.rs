use std::fmt;

use crate::LpError;

/// Handle to a variable of an [`LpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    /// Handle for the `index`-th variable; models reject indices they do not own.
    pub fn from_index(index: usize) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint row of an [`LpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub(crate) usize);

impl RowId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Left-hand side evaluated at `x`.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization LP over bounded variables and sparse linear rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(vars: usize, rows: usize) -> Self {
        Self {
            vars: Vec::with_capacity(vars),
            rows: Vec::with_capacity(rows),
        }
    }

    /// Adds a variable with bounds `[lower, upper]` (infinite bounds allowed)
    /// and objective coefficient `cost`.
    pub fn add_variable(&mut self, lower: f64, upper: f64, cost: f64) -> Result<VarId, LpError> {
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { lower, upper });
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { lower, upper });
        }
        if !cost.is_finite() {
            return Err(LpError::NonFinite("objective coefficient"));
        }
        self.vars.push(Variable { lower, upper, cost });
        Ok(VarId(self.vars.len() - 1))
    }

    /// Appends the row `sum(coef * var) <relation> rhs`. Repeated variables are merged.
    pub fn add_constraint<I>(&mut self, terms: I, relation: Relation, rhs: f64) -> Result<RowId, LpError>
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        if !rhs.is_finite() {
            return Err(LpError::NonFinite("right-hand side"));
        }
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in terms {
            if v.0 >= self.vars.len() {
                return Err(LpError::InvalidHandle(v.0));
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite("constraint coefficient"));
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Constraint {
            terms: merged,
            relation,
            rhs,
        });
        Ok(RowId(self.rows.len() - 1))
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.vars[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn constraint(&self, row: RowId) -> &Constraint {
        &self.rows[row.0]
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, &xi)| v.cost * xi).sum()
    }

    /// Largest row violation at `x`.
    pub fn max_row_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max)
    }

    /// Largest bound violation at `x`.
    pub fn max_bound_violation(&self, x: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max)
    }
}
