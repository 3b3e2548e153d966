//! Structured grids and nodal scalar fields.
//!
//! The domain Ω is an interval (0, L) or a rectangle (0, Lx) × (0, Ly),
//! discretized by an equispaced node lattice including the boundary. Nodes are
//! indexed row-major: in 2D, node `i = iy * nx + ix` sits at
//! `(ix * hx, iy * hy)`. Every node is either interior or boundary, never both.
//!
//! Fields serialize as `{"grid": {"dim", "counts", "extents"}, "values": [...]}`,
//! the format shared by all commands and file outputs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Sums in a fixed tree order so results do not depend on accumulation
/// chunking. All quadrature goes through this.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// An equispaced node lattice over an interval or rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    dim: usize,
    counts: Vec<usize>,
    extents: Vec<f64>,
    spacing: Vec<f64>,
    boundary: Vec<bool>,
}

/// Wire form of [`Grid`]; spacing and masks are derived on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    counts: Vec<usize>,
    extents: Vec<f64>,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        if r.counts.len() != r.dim || r.extents.len() != r.dim {
            return Err(Error::InvalidGrid(format!(
                "dim {} does not match counts/extents lengths {}/{}",
                r.dim,
                r.counts.len(),
                r.extents.len()
            )));
        }
        Grid::new(&r.counts, &r.extents)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            dim: g.dim,
            counts: g.counts,
            extents: g.extents,
        }
    }
}

impl Grid {
    /// Builds a grid with `counts[k]` nodes and physical extent `extents[k]`
    /// along axis `k`. Requires 1 or 2 axes, at least 3 nodes per axis, and
    /// positive extents.
    pub fn new(counts: &[usize], extents: &[f64]) -> Result<Self> {
        let dim = counts.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if extents.len() != dim {
            return Err(Error::InvalidGrid("counts/extents length mismatch".into()));
        }
        for (&n, &l) in counts.iter().zip(extents) {
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "need at least 3 nodes per axis, got {n}"
                )));
            }
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "extent must be positive and finite, got {l}"
                )));
            }
        }
        let spacing: Vec<f64> = counts
            .iter()
            .zip(extents)
            .map(|(&n, &l)| l / (n - 1) as f64)
            .collect();
        let mut grid = Grid {
            dim,
            counts: counts.to_vec(),
            extents: extents.to_vec(),
            spacing,
            boundary: Vec::new(),
        };
        grid.boundary = (0..grid.node_count()).map(|i| grid.classify(i)).collect();
        Ok(grid)
    }

    /// 1D convenience: `n` nodes over (0, length).
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new(&[n], &[length])
    }

    /// 2D convenience: `nx` × `ny` nodes over (0, lx) × (0, ly).
    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Domain measure |Ω|.
    pub fn measure(&self) -> f64 {
        self.extents.iter().product()
    }

    fn classify(&self, index: usize) -> bool {
        match self.dim {
            1 => index == 0 || index == self.counts[0] - 1,
            _ => {
                let (ix, iy) = (index % self.counts[0], index / self.counts[0]);
                ix == 0 || ix == self.counts[0] - 1 || iy == 0 || iy == self.counts[1] - 1
            }
        }
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        self.boundary[index]
    }

    pub fn is_interior(&self, index: usize) -> bool {
        !self.boundary[index]
    }

    /// Boundary mask, one flag per node.
    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Physical coordinates of a node; the second component is 0 in 1D.
    pub fn coord(&self, index: usize) -> [f64; 2] {
        match self.dim {
            1 => [index as f64 * self.spacing[0], 0.0],
            _ => {
                let (ix, iy) = (index % self.counts[0], index / self.counts[0]);
                [ix as f64 * self.spacing[0], iy as f64 * self.spacing[1]]
            }
        }
    }

    /// Trapezoidal quadrature weight of a node (tensorized in 2D).
    pub fn weight(&self, index: usize) -> f64 {
        let axis_weight = |i: usize, n: usize, h: f64| {
            if i == 0 || i == n - 1 {
                0.5 * h
            } else {
                h
            }
        };
        match self.dim {
            1 => axis_weight(index, self.counts[0], self.spacing[0]),
            _ => {
                let (ix, iy) = (index % self.counts[0], index / self.counts[0]);
                axis_weight(ix, self.counts[0], self.spacing[0])
                    * axis_weight(iy, self.counts[1], self.spacing[1])
            }
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// One real value per grid node. Values are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldRepr {
    grid: Grid,
    values: Vec<f64>,
}

impl TryFrom<FieldRepr> for ScalarField {
    type Error = Error;
    fn try_from(r: FieldRepr) -> Result<Self> {
        ScalarField::new(Arc::new(r.grid), r.values)
    }
}

impl From<ScalarField> for FieldRepr {
    fn from(f: ScalarField) -> Self {
        FieldRepr {
            grid: (*f.grid).clone(),
            values: f.values,
        }
    }
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidField(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidField("empty field".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value {bad}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Field with the same value at all nodes.
    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<Self> {
        let n = grid.node_count();
        Self::new(grid, vec![value; n])
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.node_count();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Evaluates `f` at every node coordinate.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.node_count()).map(|i| f(grid.coord(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True iff every value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn require_same_grid(&self, other: &ScalarField, what: &str) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(what.into()))
        }
    }

    /// Nodewise map; fails if the result is non-finite anywhere.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.require_same_grid(other, "zip_with operands")?;
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Copy with boundary nodes overwritten to zero.
    pub fn clamped_to_boundary_zero(&self) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.grid.is_boundary(i) { 0.0 } else { v })
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Loads a field from the shared JSON format.
    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes the field in the shared JSON format.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
