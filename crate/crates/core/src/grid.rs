//! Regular grids of value-function samples.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::report::round_sig;
use crate::solver::SolveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Closed box; nodes include both endpoints of every axis.
    Box,
    /// One-dimensional circle `[lo, hi)` with `hi` glued to `lo`.
    Ring,
}

/// An off-grid sample inserted at a region-boundary coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraNode {
    pub point: Vec<f64>,
    pub value: f64,
}

/// `V` sampled on a uniform grid over a box (or a ring).
///
/// Nodes are stored with axis 0 varying fastest. A box grid with `cells`
/// cells per axis has `cells + 1` nodes per axis; a ring grid has `cells`
/// nodes, the last cell wrapping back to the first node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    domain: BoxDomain,
    cells: usize,
    topology: Topology,
    values: Vec<f64>,
    extra_nodes: Vec<ExtraNode>,
    warnings: Vec<String>,
    config: Option<SolveConfig>,
}

impl ValueGrid {
    /// Samples `f` at every node, node-parallel, in fixed index order.
    pub fn build<F>(domain: BoxDomain, cells: usize, topology: Topology, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        if cells < 2 {
            return Err(Error::param("grid", "need at least 2 cells per axis"));
        }
        if topology == Topology::Ring && domain.dim() != 1 {
            return Err(Error::Unsupported("ring grids are one-dimensional".into()));
        }
        let mut grid = ValueGrid {
            domain,
            cells,
            topology,
            values: Vec::new(),
            extra_nodes: Vec::new(),
            warnings: Vec::new(),
            config: None,
        };
        let values: Result<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(&grid.coord(k)))
            .collect();
        grid.values = values?;
        if let Some(bad) = grid.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "value at node {:?} is not finite",
                grid.coord(bad)
            )));
        }
        Ok(grid)
    }

    /// Grid from precomputed node values (same node order as [`build`](Self::build)).
    pub fn from_values(
        domain: BoxDomain,
        cells: usize,
        topology: Topology,
        values: Vec<f64>,
    ) -> Result<Self> {
        let grid = ValueGrid {
            domain,
            cells,
            topology,
            values: Vec::new(),
            extra_nodes: Vec::new(),
            warnings: Vec::new(),
            config: None,
        };
        if cells < 2 {
            return Err(Error::param("grid", "need at least 2 cells per axis"));
        }
        if values.len() != grid.len() {
            return Err(Error::input(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("node values must be finite"));
        }
        Ok(ValueGrid { values, ..grid })
    }

    pub(crate) fn with_config(mut self, cfg: SolveConfig) -> Self {
        self.config = Some(cfg);
        self
    }

    pub(crate) fn push_extra(&mut self, node: ExtraNode) {
        self.extra_nodes.push(node);
    }

    pub(crate) fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extra_nodes(&self) -> &[ExtraNode] {
        &self.extra_nodes
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn config(&self) -> Option<&SolveConfig> {
        self.config.as_ref()
    }

    pub fn nodes_per_axis(&self) -> usize {
        match self.topology {
            Topology::Box => self.cells + 1,
            Topology::Ring => self.cells,
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.cells as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.spacing(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.nodes_per_axis();
        (0..self.dim())
            .map(|_| {
                let i = flat % m;
                flat /= m;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        idx.iter().rev().fold(0, |acc, &i| acc * m + i)
    }

    /// Coordinates of node `flat`. Interior node coordinates are computed
    /// from the index, endpoints are pinned to the exact box bounds.
    pub fn coord(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.axis_coord(axis, i))
            .collect()
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if i == self.cells {
            self.domain.hi()[axis]
        } else {
            self.domain.lo()[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Node index of the grid point closest to `x`.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let m = self.nodes_per_axis();
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let r = ((x[a] - self.domain.lo()[a]) / self.spacing(a)).round();
                (r.max(0.0) as usize).min(m - 1)
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Neighbour one step along `axis` (`+1` or `-1`); wraps on rings.
    pub fn neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        let mut idx = self.multi_index(flat);
        let m = self.nodes_per_axis() as isize;
        let j = idx[axis] as isize + step;
        let j = match self.topology {
            Topology::Ring => j.rem_euclid(m),
            Topology::Box if (0..m).contains(&j) => j,
            Topology::Box => return None,
        };
        idx[axis] = j as usize;
        Some(self.flat_index(&idx))
    }

    /// Every node of a ring is interior; box nodes need both neighbours on every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        match self.topology {
            Topology::Ring => true,
            Topology::Box => self
                .multi_index(flat)
                .iter()
                .all(|&i| i > 0 && i < self.cells),
        }
    }

    pub fn interior_count(&self) -> usize {
        match self.topology {
            Topology::Ring => self.len(),
            Topology::Box => (self.cells - 1).pow(self.dim() as u32),
        }
    }

    /// `x_1..x_n,V` rows in node order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x_{i}")).collect();
        header.push("V".into());
        out.write_record(&header)?;
        for k in 0..self.len() {
            let mut row: Vec<String> = self.coord(k).iter().map(|v| fmt_num(*v)).collect();
            row.push(fmt_num(self.values[k]));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            topology: self.topology,
            dim: self.dim(),
            cells_per_axis: self.cells,
            nodes_per_axis: self.nodes_per_axis(),
            lo: self.domain.lo().iter().map(|&v| round_sig(v)).collect(),
            hi: self.domain.hi().iter().map(|&v| round_sig(v)).collect(),
            spacing: self.spacings().into_iter().map(round_sig).collect(),
            extra_nodes: self.extra_nodes.len(),
            warnings: self.warnings.clone(),
            solve_config: self.config.clone(),
        }
    }
}

/// Grid metadata as exported next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub topology: Topology,
    pub dim: usize,
    pub cells_per_axis: usize,
    pub nodes_per_axis: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub spacing: Vec<f64>,
    pub extra_nodes: usize,
    pub warnings: Vec<String>,
    pub solve_config: Option<SolveConfig>,
}

/// 12 significant digits, shortest representation.
pub(crate) fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v))
}
