//! Grid-function persistence and plot-data emission.
//!
//! A function is stored as a headerless CSV with one row per node (order 1)
//! or cell centroid (order 0): coordinates followed by the value. A JSON
//! sidecar carries the order, monotone flag, grid and grid hash.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::function::{GridFunction, Order};
use crate::grid::Grid;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionMeta {
    pub version: u32,
    pub order: Order,
    pub monotone: bool,
    pub grid_hash: String,
    pub grid: Grid,
}

fn sample_points(f: &GridFunction) -> Vec<Vec<f64>> {
    let grid = f.grid();
    match f.order() {
        Order::One => (0..grid.num_nodes()).map(|k| grid.node(k)).collect(),
        Order::Zero => (0..grid.num_cells()).map(|k| grid.cell(k).centroid()).collect(),
    }
}

pub fn meta(f: &GridFunction) -> FunctionMeta {
    FunctionMeta {
        version: FORMAT_VERSION,
        order: f.order(),
        monotone: f.is_monotone(),
        grid_hash: f.grid().hash(),
        grid: f.grid().clone(),
    }
}

pub fn write_values_csv<W: Write>(f: &GridFunction, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for (x, v) in sample_points(f).into_iter().zip(f.values()) {
        let mut row = x;
        row.push(*v);
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Reads values written by [`write_values_csv`], checking coordinates against `meta`.
pub fn read_values_csv<R: Read>(meta: &FunctionMeta, reader: R) -> Result<GridFunction> {
    if meta.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported function format version {}", meta.version)));
    }
    if meta.grid.hash() != meta.grid_hash {
        return Err(Error::Format("grid hash does not match the stored grid".into()));
    }
    let grid = Arc::new(meta.grid.clone());
    let skeleton = GridFunction::constant(grid.clone(), meta.order, 0.0)?;
    let points = sample_points(&skeleton);
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut values = Vec::with_capacity(points.len());
    for (line, rec) in r.deserialize::<Vec<f64>>().enumerate() {
        let row = rec.map_err(csv_err)?;
        let Some(x) = points.get(line) else {
            return Err(Error::Format(format!("line {}: more rows than grid points", line + 1)));
        };
        if row.len() != x.len() + 1 || row[..x.len()] != x[..] {
            return Err(Error::Format(format!("line {}: coordinates do not match the grid", line + 1)));
        }
        values.push(row[x.len()]);
    }
    if values.len() != points.len() {
        return Err(Error::Format(format!("expected {} rows, found {}", points.len(), values.len())));
    }
    let f = GridFunction::new(grid, meta.order, values)?;
    if f.is_monotone() != meta.monotone {
        return Err(Error::Format("monotone flag does not match the values".into()));
    }
    Ok(f)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn save_function(f: &GridFunction, dir: &Path, stem: &str) -> Result<()> {
    let csv = BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?);
    write_values_csv(f, csv)?;
    let json = serde_json::to_string_pretty(&meta(f)).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

/// Loads a function from its CSV and metadata paths.
pub fn load_function(csv_path: &Path, meta_path: &Path) -> Result<GridFunction> {
    let meta: FunctionMeta = serde_json::from_reader(File::open(meta_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    read_values_csv(&meta, File::open(csv_path)?)
}

/// Gnuplot surface data: `x [y] value`, with a blank line after each scan
/// line of the first axis for `splot ... with lines`.
pub fn write_surface<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let grid = f.grid();
    let points = sample_points(f);
    let last_len = match f.order() {
        Order::One => *grid.nodes_per_axis().last().expect("dim >= 1"),
        Order::Zero => *grid.cells_per_axis().last().expect("dim >= 1"),
    };
    for (i, (x, v)) in points.iter().zip(f.values()).enumerate() {
        for c in x {
            write!(w, "{c} ")?;
        }
        writeln!(w, "{v}")?;
        if grid.dim() > 1 && (i + 1) % last_len == 0 {
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Cell-mass heat map: centroid coordinates and the cell mass `Δ F` per line.
pub fn write_heatmap<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let grid = f.grid();
    let last_len = *grid.cells_per_axis().last().expect("dim >= 1");
    for k in 0..grid.num_cells() {
        for c in grid.cell(k).centroid() {
            write!(w, "{c} ")?;
        }
        writeln!(w, "{}", f.cell_delta(k))?;
        if grid.dim() > 1 && (k + 1) % last_len == 0 {
            writeln!(w)?;
        }
    }
    Ok(())
}
