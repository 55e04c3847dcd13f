//! Analytic and empirical distribution functions and their grid realizations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::function::{GridFunction, Order};
use crate::grid::{Domain, Grid, Rect};
use crate::par;
use crate::{Error, Result};

/// A probability distribution described by its CDF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CdfSpec {
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    DiracPoint { location: Vec<f64> },
    Mixture { weights: Vec<f64>, components: Vec<CdfSpec> },
    EmpiricalSamples(SampleSet),
}

/// Points with optional weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let s = Self { points, weights };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidArgument("sample set is empty".into()));
        }
        let m = self.points[0].len();
        if m == 0 || self.points.iter().any(|p| p.len() != m || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument("samples must be finite points of equal dimension".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.points.len() || w.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidArgument("one nonnegative weight per sample required".into()));
            }
            if (w.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidArgument("sample weights must sum to 1".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.points.len() as f64,
        }
    }

    /// Weighted fraction of samples `<= x` componentwise.
    pub fn cdf(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.iter().zip(x).all(|(a, b)| a <= b))
            .map(|(i, _)| self.weight(i))
            .sum();
        total.min(1.0)
    }

    /// Reads a headerless CSV with one point per row.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(format!("sample csv: {e}")))?;
            let p = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("sample csv line {}: {e}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(p);
        }
        Self::new(points, None)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for p in &self.points {
            w.write_record(p.iter().map(|v| v.to_string()))
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl CdfSpec {
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let m = domain.dim();
        let inside = |p: &[f64]| domain.contains(p);
        match self {
            CdfSpec::UniformBox { lower, upper } => {
                if lower.len() != m || upper.len() != m || lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    return Err(Error::InvalidArgument("uniform box needs lower < upper on every axis".into()));
                }
                if !inside(lower) || !inside(upper) {
                    return Err(Error::InvalidArgument("uniform box support leaves the domain".into()));
                }
            }
            CdfSpec::DiracPoint { location } => {
                if location.len() != m || !inside(location) {
                    return Err(Error::InvalidArgument("dirac location must lie in the domain".into()));
                }
            }
            CdfSpec::Mixture { weights, components } => {
                if weights.len() != components.len() || components.is_empty() {
                    return Err(Error::InvalidArgument("mixture needs one weight per component".into()));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidArgument("mixture weights must be nonnegative and sum to 1".into()));
                }
                for c in components {
                    c.validate(domain)?;
                }
            }
            CdfSpec::EmpiricalSamples(s) => {
                s.check()?;
                if s.dim() != m || s.points.iter().any(|p| !inside(p)) {
                    return Err(Error::InvalidArgument("samples must lie in the domain".into()));
                }
            }
        }
        Ok(())
    }

    /// Exact CDF value at `x`.
    pub fn cdf(&self, x: &[f64]) -> f64 {
        match self {
            CdfSpec::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(x)
                .map(|((a, b), v)| ((v - a) / (b - a)).clamp(0.0, 1.0))
                .product(),
            CdfSpec::DiracPoint { location } => {
                if location.iter().zip(x).all(|(c, v)| c <= v) {
                    1.0
                } else {
                    0.0
                }
            }
            CdfSpec::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            CdfSpec::EmpiricalSamples(s) => s.cdf(x),
        }
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            CdfSpec::UniformBox { lower, upper } => lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect(),
            CdfSpec::DiracPoint { location } => location.clone(),
            CdfSpec::Mixture { weights, components } => {
                let mut out = vec![0.0; components[0].mean().len()];
                for (w, c) in weights.iter().zip(components) {
                    for (o, v) in out.iter_mut().zip(c.mean()) {
                        *o += w * v;
                    }
                }
                out
            }
            CdfSpec::EmpiricalSamples(s) => {
                let mut out = vec![0.0; s.dim()];
                for (i, p) in s.points.iter().enumerate() {
                    for (o, v) in out.iter_mut().zip(p) {
                        *o += s.weight(i) * v;
                    }
                }
                out
            }
        }
    }

    /// Order-1 function with the exact CDF at every node.
    pub fn realize(&self, grid: Arc<Grid>) -> Result<GridFunction> {
        self.validate(grid.domain())?;
        let values = par::map_range(grid.num_nodes(), |k| self.cdf(&grid.node(k)));
        GridFunction::new(grid, Order::One, values)
    }
}

/// Multivariate empirical CDF at the grid nodes.
pub fn empirical_cdf(samples: &SampleSet, grid: Arc<Grid>) -> Result<GridFunction> {
    CdfSpec::EmpiricalSamples(samples.clone()).realize(grid)
}

/// A function `S -> [0, 1]` whose supremum over a closed box can be bounded.
pub trait Target: Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Supremum over the closed box `rect`; the default samples a regular
    /// lattice of `SUP_SAMPLES` points per axis, corners included.
    fn sup_over(&self, rect: &Rect) -> f64 {
        const SUP_SAMPLES: usize = 9;
        let m = rect.dim();
        let total = SUP_SAMPLES.pow(m as u32);
        (0..total)
            .map(|mut idx| {
                let p: Vec<f64> = (0..m)
                    .map(|i| {
                        let k = idx % SUP_SAMPLES;
                        idx /= SUP_SAMPLES;
                        rect.lower[i] + (rect.upper[i] - rect.lower[i]) * k as f64 / (SUP_SAMPLES - 1) as f64
                    })
                    .collect();
                self.value(&p)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Target for CdfSpec {
    fn value(&self, x: &[f64]) -> f64 {
        self.cdf(x)
    }

    fn sup_over(&self, rect: &Rect) -> f64 {
        self.cdf(&rect.upper)
    }
}

impl Target for GridFunction {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }

    fn sup_over(&self, rect: &Rect) -> f64 {
        self.cell_sup(rect).expect("cell inside the domain")
    }
}

/// Order-0 function whose value on each cell is the supremum of `target`
/// over the closed cell.
pub fn upper_envelope(target: &dyn Target, grid: Arc<Grid>) -> Result<GridFunction> {
    let values = par::map_range(grid.num_cells(), |k| target.sup_over(&grid.cell(k)).clamp(0.0, 1.0));
    GridFunction::new(grid, Order::Zero, values)
}
