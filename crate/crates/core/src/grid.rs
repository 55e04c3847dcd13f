//! Rectangular domains, box partitions and their simplicial splits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// The box `[lower, upper]` in R^m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "domain bounds must be nonempty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidArgument(format!("axis {i}: need finite bounds with {a} < {b}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[0, 1]^m`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim]).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, a), b)| a <= v && v <= b)
    }

    /// Componentwise projection onto the box.
    pub fn clip(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((v, a), b)| v.clamp(*a, *b))
            .collect()
    }

    /// Diameter in the sup-norm.
    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Point of the domain closest to the origin; the centre of all distance balls.
    pub fn anchor(&self) -> Vec<f64> {
        self.clip(&vec![0.0; self.dim()])
    }

    /// Largest sup-norm distance from the anchor to a point of the domain.
    pub fn anchor_radius(&self) -> f64 {
        let c = self.anchor();
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(&c)
            .map(|((a, b), c)| (c - a).max(b - c))
            .fold(0.0, f64::max)
    }
}

/// One closed cell `[lower, upper]` of a box partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Rect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// The 2^m corners with their signs in the corner sum Δ_A. Corner `j` takes
    /// the upper bound on axis `i` iff bit `i` of `j` is set; its sign is +1
    /// when the number of coordinates at a lower bound is even.
    pub fn signed_vertices(&self) -> Vec<(Vec<f64>, f64)> {
        let m = self.dim();
        (0..1usize << m)
            .map(|j| {
                let v: Vec<f64> = (0..m)
                    .map(|i| if j >> i & 1 == 1 { self.upper[i] } else { self.lower[i] })
                    .collect();
                let at_lower = m - j.count_ones() as usize;
                (v, if at_lower % 2 == 0 { 1.0 } else { -1.0 })
            })
            .collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, a), b)| a <= v && v <= b)
    }
}

/// A box partition given by strictly increasing node coordinates per axis.
///
/// Nodes and cells are numbered row-major with the last axis varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    domain: Domain,
    axes: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    axes: Vec<Vec<f64>>,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        let domain = Domain::new(r.lower, r.upper)?;
        if domain.dim() != r.dim {
            return Err(Error::InvalidArgument(format!(
                "dim {} does not match bounds of length {}",
                r.dim,
                domain.dim()
            )));
        }
        Grid::from_axes(domain, r.axes)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            dim: g.dim(),
            lower: g.domain.lower,
            upper: g.domain.upper,
            axes: g.axes,
        }
    }
}

impl Grid {
    /// Uniform grid with `nodes_per_axis[i]` nodes on axis `i`.
    pub fn uniform(domain: Domain, nodes_per_axis: &[usize]) -> Result<Self> {
        if nodes_per_axis.len() != domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} node counts, got {}",
                domain.dim(),
                nodes_per_axis.len()
            )));
        }
        let axes = nodes_per_axis
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if n < 2 {
                    return Err(Error::InvalidArgument(format!("axis {i} needs at least 2 nodes, got {n}")));
                }
                let (a, b) = (domain.lower[i], domain.upper[i]);
                Ok((0..n)
                    .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { domain, axes })
    }

    /// Uniform grid with the same number of cells on every axis.
    pub fn with_cells(domain: Domain, cells_per_axis: usize) -> Result<Self> {
        let m = domain.dim();
        Self::uniform(domain, &vec![cells_per_axis + 1; m])
    }

    /// Grid from explicit node coordinates; each axis must start at the lower
    /// and end at the upper domain bound.
    pub fn from_axes(domain: Domain, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} axes, got {}",
                domain.dim(),
                axes.len()
            )));
        }
        for (i, ax) in axes.iter().enumerate() {
            if ax.len() < 2 {
                return Err(Error::InvalidArgument(format!("axis {i} needs at least 2 nodes")));
            }
            if ax[0] != domain.lower[i] || ax[ax.len() - 1] != domain.upper[i] {
                return Err(Error::InvalidArgument(format!("axis {i} must span the domain exactly")));
            }
            if ax.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(format!("axis {i} is not strictly increasing")));
            }
        }
        Ok(Self { domain, axes })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 1).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    /// Splits every cell into `factor^m` cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidArgument(format!("refinement factor must be >= 2, got {factor}")));
        }
        let axes = self
            .axes
            .iter()
            .map(|ax| {
                let mut out = Vec::with_capacity((ax.len() - 1) * factor + 1);
                for w in ax.windows(2) {
                    for k in 0..factor {
                        out.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
                    }
                }
                out.push(ax[ax.len() - 1]);
                out
            })
            .collect();
        Ok(Self {
            domain: self.domain.clone(),
            axes,
        })
    }

    /// Largest cell edge length.
    pub fn mesh_size(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|ax| ax.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    pub fn node_multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].len();
            out[i] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&k, ax)| acc * ax.len() + k)
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.node_multi_index(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&k, ax)| ax[k])
            .collect()
    }

    pub fn node_at(&self, multi: &[usize]) -> Vec<f64> {
        multi.iter().zip(&self.axes).map(|(&k, ax)| ax[k]).collect()
    }

    pub fn cell_multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].len() - 1;
            out[i] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&k, ax)| acc * (ax.len() - 1) + k)
    }

    /// Cell `idx` as a rectangle.
    pub fn cell(&self, idx: usize) -> Rect {
        let c = self.cell_multi_index(idx);
        Rect::new(
            c.iter().zip(&self.axes).map(|(&k, ax)| ax[k]).collect(),
            c.iter().zip(&self.axes).map(|(&k, ax)| ax[k + 1]).collect(),
        )
    }

    /// All cells in index order.
    pub fn cells(&self) -> Vec<Rect> {
        (0..self.num_cells()).map(|k| self.cell(k)).collect()
    }

    /// Node indices of the corners of cell `idx`, corner `j` taking the upper
    /// node on axis `i` iff bit `i` of `j` is set.
    pub fn cell_corner_nodes(&self, idx: usize) -> Vec<usize> {
        let c = self.cell_multi_index(idx);
        let m = self.dim();
        (0..1usize << m)
            .map(|j| {
                let multi: Vec<usize> = (0..m).map(|i| c[i] + (j >> i & 1)).collect();
                self.node_index(&multi)
            })
            .collect()
    }

    /// Index of the cell along axis `i` containing coordinate `v`; a value on
    /// an interior node belongs to the cell above it.
    pub(crate) fn axis_cell(&self, i: usize, v: f64) -> usize {
        let ax = &self.axes[i];
        let n = ax.len();
        // First node strictly greater than v, minus one.
        let k = ax.partition_point(|&a| a <= v);
        k.saturating_sub(1).min(n - 2)
    }

    /// Containing cell and local coordinates in `[0, 1]^m`.
    pub fn locate(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        let mut multi = Vec::with_capacity(self.dim());
        let mut local = Vec::with_capacity(self.dim());
        for (i, &v) in x.iter().enumerate() {
            let k = self.axis_cell(i, v);
            let ax = &self.axes[i];
            multi.push(k);
            local.push(((v - ax[k]) / (ax[k + 1] - ax[k])).clamp(0.0, 1.0));
        }
        Ok((self.cell_index(&multi), local))
    }

    /// Triangles of the main-diagonal split of every cell (m = 2 only), as
    /// node-index triples.
    pub fn triangles(&self) -> Result<Vec<[usize; 3]>> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument("triangulation is defined for m = 2".into()));
        }
        let mut out = Vec::with_capacity(2 * self.num_cells());
        for k in 0..self.num_cells() {
            let c = self.cell_corner_nodes(k);
            // Corners: 0 = (l,l), 1 = (u,l), 2 = (l,u), 3 = (u,u).
            out.push([c[0], c[1], c[3]]);
            out.push([c[0], c[2], c[3]]);
        }
        Ok(out)
    }

    /// Pairs `(a, b)` of nodes joined by an edge of the simplicial split with
    /// `b >= a` componentwise: axis edges and cell main diagonals (m = 1, 2).
    pub fn simplex_edges(&self) -> Result<Vec<(usize, usize)>> {
        if self.dim() > 2 {
            return Err(Error::InvalidArgument("simplex edges are defined for m <= 2".into()));
        }
        let mut out = self.axis_edges();
        if self.dim() == 2 {
            for k in 0..self.num_cells() {
                let c = self.cell_corner_nodes(k);
                out.push((c[0], c[3]));
            }
        }
        Ok(out)
    }

    /// Axis-adjacent node pairs `(a, b)` with `b` one step above `a`.
    pub fn axis_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let n = self.nodes_per_axis();
        for idx in 0..self.num_nodes() {
            let multi = self.node_multi_index(idx);
            for i in 0..self.dim() {
                if multi[i] + 1 < n[i] {
                    let mut up = multi.clone();
                    up[i] += 1;
                    out.push((idx, self.node_index(&up)));
                }
            }
        }
        out
    }

    /// Hex SHA-256 of the serialized grid; identifies grids in file metadata.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("grid serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Sorted union of the node coordinates of two grids on the same domain.
    pub fn merged_axes(&self, other: &Grid) -> Vec<Vec<f64>> {
        self.axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| {
                let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect()
    }
}
