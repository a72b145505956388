//! Slab grid on the unit torus times `(0, d)`.
//!
//! Storage is column-major with the normal index fastest. A column is one
//! tangential cell `(i1, i2)`; in 2D the second tangential axis has a single
//! cell and in 1D both do. Along the normal axis there are `n_normal` cells
//! of width `d / n_normal` and `n_normal + 1` nodes, the first on the
//! anchoring wall `x3 = 0` and the last on the Dirichlet wall `x3 = d`.
//!
//! MAC placement: pressure and tangential velocities sit at normal cell
//! centres, the normal velocity and the director angle sit on normal nodes.
//! Tangential velocity `u_a` lives on the low `a`-face of its column.

use serde::{Deserialize, Serialize};

use crate::error::{PhanError, Result};
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// Marker-and-cell staggering with wall-inclusive angle nodes.
    MacWallNodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n_tangential: usize,
    pub n_normal: usize,
    pub d: f64,
    /// `[dx1, dx2, dx3]`; a collapsed tangential axis reports spacing 1.
    pub spacing: [f64; 3],
    pub layout: Layout,
}

pub fn make_grid(
    params: &PhysParams,
    dim: usize,
    n_tangential: usize,
    n_normal: usize,
) -> Result<Grid> {
    Grid::new(params.d, dim, n_tangential, n_normal)
}

impl Grid {
    pub fn new(d: f64, dim: usize, n_tangential: usize, n_normal: usize) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(PhanError::InvalidInput(format!(
                "dim must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(PhanError::NonPositiveParameter("d"));
        }
        if n_normal < 4 {
            return Err(PhanError::GridTooCoarse(format!(
                "n_normal = {n_normal} < 4"
            )));
        }
        if dim > 1 && n_tangential < 4 {
            return Err(PhanError::GridTooCoarse(format!(
                "n_tangential = {n_tangential} < 4"
            )));
        }
        let n_tangential = if dim == 1 { 1 } else { n_tangential };
        let dt = 1.0 / n_tangential as f64;
        let spacing = [
            if dim >= 2 { dt } else { 1.0 },
            if dim == 3 { dt } else { 1.0 },
            d / n_normal as f64,
        ];
        Ok(Grid {
            dim,
            n_tangential,
            n_normal,
            d,
            spacing,
            layout: Layout::MacWallNodes,
        })
    }

    pub fn line(d: f64, n_normal: usize) -> Result<Grid> {
        Grid::new(d, 1, 1, n_normal)
    }

    /// Cells along tangential axis `a` (0 or 1).
    pub fn n_tan(&self, a: usize) -> usize {
        match (a, self.dim) {
            (0, 2) | (0, 3) | (1, 3) => self.n_tangential,
            _ => 1,
        }
    }

    pub fn active_tangential_axes(&self) -> impl Iterator<Item = usize> {
        let dim = self.dim;
        (0..2).filter(move |&a| a + 1 < dim)
    }

    pub fn columns(&self) -> usize {
        self.n_tan(0) * self.n_tan(1)
    }

    pub fn nodes(&self) -> usize {
        self.n_normal + 1
    }

    pub fn dz(&self) -> f64 {
        self.spacing[2]
    }

    /// Tangential area of one column; the columns tile the unit torus.
    pub fn column_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    pub fn node_x3(&self, k: usize) -> f64 {
        if k == self.n_normal {
            self.d
        } else {
            k as f64 * self.dz()
        }
    }

    pub fn cell_x3(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz()
    }

    /// Trapezoid weight of normal node `k`.
    pub fn node_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_normal {
            0.5 * self.dz()
        } else {
            self.dz()
        }
    }

    pub fn column(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n_tan(1) + i2
    }

    /// Column index shifted by `s` cells along tangential axis `a`, periodically.
    pub fn shift(&self, col: usize, a: usize, s: isize) -> usize {
        let n2 = self.n_tan(1);
        let (mut i1, mut i2) = (col / n2, col % n2);
        if a == 0 {
            i1 = (i1 as isize + s).rem_euclid(self.n_tan(0) as isize) as usize;
        } else {
            i2 = (i2 as isize + s).rem_euclid(n2 as isize) as usize;
        }
        i1 * n2 + i2
    }

    /// Tangential cell centre coordinates of a column.
    pub fn column_center(&self, col: usize) -> [f64; 2] {
        let n2 = self.n_tan(1);
        [
            ((col / n2) as f64 + 0.5) * self.spacing[0],
            ((col % n2) as f64 + 0.5) * self.spacing[1],
        ]
    }

    pub fn node_index(&self, col: usize, k: usize) -> usize {
        col * self.nodes() + k
    }

    pub fn cell_index(&self, col: usize, j: usize) -> usize {
        col * self.n_normal + j
    }

    pub fn same_normal_axis(&self, other: &Grid) -> bool {
        self.n_normal == other.n_normal && self.d == other.d
    }

    /// Same grid with a different number of dimensions and tangential cells.
    pub fn with_dim(&self, dim: usize, n_tangential: usize) -> Result<Grid> {
        Grid::new(self.d, dim, n_tangential, self.n_normal)
    }
}
