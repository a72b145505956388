//! Discrete fields on a [`Grid`].

use serde::{Deserialize, Serialize};

use crate::error::{PhanError, Result};
use crate::grid::Grid;

/// Nodal values of a function of `x3` on `[0, d]`, both walls included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub d: f64,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn zeros(d: f64, n_normal: usize) -> Profile {
        Profile {
            d,
            values: vec![0.0; n_normal + 1],
        }
    }

    pub fn from_fn(d: f64, n_normal: usize, f: impl Fn(f64) -> f64) -> Profile {
        let dz = d / n_normal as f64;
        let values = (0..=n_normal)
            .map(|k| f(if k == n_normal { d } else { k as f64 * dz }))
            .collect();
        Profile { d, values }
    }

    pub fn n_normal(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dz(&self) -> f64 {
        self.d / self.n_normal() as f64
    }

    pub fn x3(&self, k: usize) -> f64 {
        if k == self.n_normal() {
            self.d
        } else {
            k as f64 * self.dz()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, c: f64) -> Profile {
        Profile {
            d: self.d,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::line(self.d, self.n_normal())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngleBoundary {
    /// `d phi/d x3 = -anchoring * sin(phi) cos(phi)` on `x3 = 0`.
    RapiniPapoular {
        anchoring: f64,
    },
    Dirichlet {
        value: f64,
    },
}

/// Director angle on wall-inclusive normal nodes of every column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub bc_bottom: AngleBoundary,
    pub bc_top: AngleBoundary,
}

impl AngleField {
    pub fn zeros(grid: &Grid, l_h: f64) -> AngleField {
        AngleField {
            grid: grid.clone(),
            values: vec![0.0; grid.columns() * grid.nodes()],
            bc_bottom: AngleBoundary::RapiniPapoular { anchoring: l_h },
            bc_top: AngleBoundary::Dirichlet { value: 0.0 },
        }
    }

    /// Field from `f(x1, x2, x3)` sampled at column centres and normal nodes.
    pub fn from_fn(grid: &Grid, l_h: f64, f: impl Fn(f64, f64, f64) -> f64) -> AngleField {
        let mut out = AngleField::zeros(grid, l_h);
        for col in 0..grid.columns() {
            let [x1, x2] = grid.column_center(col);
            for k in 0..grid.nodes() {
                out.values[grid.node_index(col, k)] = f(x1, x2, grid.node_x3(k));
            }
        }
        out
    }

    /// Tangentially constant field from a profile on the same normal axis.
    pub fn from_profile(grid: &Grid, l_h: f64, profile: &Profile) -> Result<AngleField> {
        if profile.n_normal() != grid.n_normal || profile.d != grid.d {
            return Err(PhanError::GridMismatch(format!(
                "profile has {} cells on [0, {}], grid has {} on [0, {}]",
                profile.n_normal(),
                profile.d,
                grid.n_normal,
                grid.d
            )));
        }
        let mut out = AngleField::zeros(grid, l_h);
        for col in 0..grid.columns() {
            let base = grid.node_index(col, 0);
            out.values[base..base + grid.nodes()].copy_from_slice(&profile.values);
        }
        Ok(out)
    }

    pub fn column(&self, col: usize) -> &[f64] {
        let n = self.grid.nodes();
        &self.values[col * n..(col + 1) * n]
    }

    /// Tangential average as a profile.
    pub fn mean_profile(&self) -> Profile {
        let g = &self.grid;
        let mut values = vec![0.0; g.nodes()];
        for col in 0..g.columns() {
            for (acc, v) in values.iter_mut().zip(self.column(col)) {
                *acc += v;
            }
        }
        let inv = 1.0 / g.columns() as f64;
        values.iter_mut().for_each(|v| *v *= inv);
        Profile { d: g.d, values }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Face-centred velocity. `components[a]` for a tangential axis `a` holds
/// one value per normal cell of each column (on the low `a`-face);
/// `components[2]` holds one value per normal node, zero on both walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub grid: Grid,
    pub components: [Vec<f64>; 3],
}

impl VelocityField {
    pub fn zeros(grid: &Grid) -> VelocityField {
        let cells = grid.columns() * grid.n_normal;
        let nodes = grid.columns() * grid.nodes();
        VelocityField {
            grid: grid.clone(),
            components: [vec![0.0; cells], vec![0.0; cells], vec![0.0; nodes]],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum |u|^2` with the control volume of every face.
    pub fn l2_squared(&self) -> f64 {
        let g = &self.grid;
        let vol = g.column_area() * g.dz();
        let s: f64 = self.components.iter().flatten().map(|v| v * v).sum();
        s * vol
    }

    pub fn scaled(&self, c: f64) -> VelocityField {
        let mut out = self.clone();
        out.components.iter_mut().flatten().for_each(|v| *v *= c);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub zero_mean: bool,
}

impl PressureField {
    pub fn zeros(grid: &Grid) -> PressureField {
        PressureField {
            grid: grid.clone(),
            values: vec![0.0; grid.columns() * grid.n_normal],
            zero_mean: true,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}
