//! Shared discrete calculus: difference operators, the discrete energy and
//! its exact derivative.
//!
//! The angle energy is the trapezoid-in-`x3` discretisation
//!
//! ```text
//! E_h = sum_cols A [ sum_k w_k (h^2/4)(cos 2phi_k + 1)
//!                  + 1/2 sum_k (phi_{k+1} - phi_k)^2 / dz
//!                  + 1/2 sum_a sum_k w_k ((phi - phi(shifted along a)) / dx_a)^2
//!                  + (L_H/4)(cos 2phi_0 + 1) ]
//! ```
//!
//! and every operator below that touches the angle is a derivative of it,
//! so summation by parts holds exactly on the grid.

use crate::field::{AngleBoundary, AngleField, VelocityField};
use crate::grid::Grid;
use crate::linalg::Tridiag;
use crate::params::PhysParams;

/// One-dimensional operators on the free angle nodes `0..n_normal`
/// (the Dirichlet node `n_normal` is eliminated).
#[derive(Debug, Clone)]
pub struct LineOperators {
    pub dz: f64,
    /// Stiffness matrix of `1/2 int phi'^2`.
    pub stiffness: Tridiag,
    /// Trapezoid weights.
    pub weights: Vec<f64>,
    /// `h^2 w_k` plus `L_H` on the wall node: the quadratic part of the
    /// potential, and the weight of the Rayleigh quotient denominator.
    pub mass: Vec<f64>,
}

impl LineOperators {
    pub fn new(params: &PhysParams, grid: &Grid) -> LineOperators {
        let n = grid.n_normal;
        let dz = grid.dz();
        let mut stiffness = Tridiag::zeros(n);
        for k in 0..n {
            stiffness.diag[k] = if k == 0 { 1.0 / dz } else { 2.0 / dz };
            stiffness.sub[k] = if k > 0 { -1.0 / dz } else { 0.0 };
            stiffness.sup[k] = if k + 1 < n { -1.0 / dz } else { 0.0 };
        }
        let weights: Vec<f64> = (0..n).map(|k| grid.node_weight(k)).collect();
        let mut mass: Vec<f64> = weights.iter().map(|w| params.h * params.h * w).collect();
        mass[0] += params.l_h;
        LineOperators {
            dz,
            stiffness,
            weights,
            mass,
        }
    }
}

pub fn half_sin2(x: f64) -> f64 {
    x.sin() * x.cos()
}

fn anchoring(field: &AngleField) -> f64 {
    match field.bc_bottom {
        AngleBoundary::RapiniPapoular { anchoring } => anchoring,
        AngleBoundary::Dirichlet { .. } => 0.0,
    }
}

fn top_value(field: &AngleField) -> f64 {
    match field.bc_top {
        AngleBoundary::Dirichlet { value } => value,
        AngleBoundary::RapiniPapoular { .. } => 0.0,
    }
}

/// Angle gradient on the staggered locations.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGradient {
    /// `d/dx_a` on the low `a`-face of each column, per node.
    pub tangential: [Vec<f64>; 2],
    /// `d/dx3` at the midpoint between nodes `k` and `k+1`, per column;
    /// the last midpoint uses the Dirichlet wall value.
    pub normal: Vec<f64>,
    /// `d/dx3` on the anchoring wall from the Rapini–Papoular condition.
    pub wall: Vec<f64>,
}

pub fn discrete_gradient(field: &AngleField) -> AngleGradient {
    let g = &field.grid;
    let (nk, n) = (g.nodes(), g.n_normal);
    let top = top_value(field);
    let l_h = anchoring(field);
    let mut tangential = [vec![0.0; field.values.len()], vec![0.0; field.values.len()]];
    for a in g.active_tangential_axes() {
        let inv = 1.0 / g.spacing[a];
        for col in 0..g.columns() {
            let left = g.shift(col, a, -1);
            for k in 0..nk {
                tangential[a][col * nk + k] =
                    (field.values[col * nk + k] - field.values[left * nk + k]) * inv;
            }
        }
    }
    let mut normal = vec![0.0; g.columns() * n];
    let mut wall = vec![0.0; g.columns()];
    for col in 0..g.columns() {
        let phi = field.column(col);
        for k in 0..n {
            let upper = if k + 1 == n { top } else { phi[k + 1] };
            normal[col * n + k] = (upper - phi[k]) / g.dz();
        }
        wall[col] = -l_h * half_sin2(phi[0]);
    }
    AngleGradient {
        tangential,
        normal,
        wall,
    }
}

/// MAC divergence, one value per cell.
pub fn discrete_divergence(u: &VelocityField) -> Vec<f64> {
    let g = &u.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let mut div = vec![0.0; g.columns() * n];
    for col in 0..g.columns() {
        for j in 0..n {
            div[col * n + j] =
                (u.components[2][col * nk + j + 1] - u.components[2][col * nk + j]) / g.dz();
        }
    }
    for a in g.active_tangential_axes() {
        let inv = 1.0 / g.spacing[a];
        for col in 0..g.columns() {
            let right = g.shift(col, a, 1);
            for j in 0..n {
                div[col * n + j] +=
                    (u.components[a][right * n + j] - u.components[a][col * n + j]) * inv;
            }
        }
    }
    div
}

/// Gradient of a cell-centred scalar onto the velocity faces; the normal
/// component vanishes on both walls.
pub fn cell_gradient(grid: &Grid, p: &[f64]) -> VelocityField {
    let (n, nk) = (grid.n_normal, grid.nodes());
    let mut out = VelocityField::zeros(grid);
    for a in grid.active_tangential_axes() {
        let inv = 1.0 / grid.spacing[a];
        for col in 0..grid.columns() {
            let left = grid.shift(col, a, -1);
            for j in 0..n {
                out.components[a][col * n + j] = (p[col * n + j] - p[left * n + j]) * inv;
            }
        }
    }
    for col in 0..grid.columns() {
        for k in 1..n {
            out.components[2][col * nk + k] = (p[col * n + k] - p[col * n + k - 1]) / grid.dz();
        }
    }
    out
}

/// Cell Laplacian with homogeneous Neumann walls, periodic tangentially.
pub fn cell_laplacian(grid: &Grid, p: &[f64]) -> Vec<f64> {
    let n = grid.n_normal;
    let dz2 = grid.dz() * grid.dz();
    let mut out = vec![0.0; p.len()];
    for col in 0..grid.columns() {
        for j in 0..n {
            let c = p[col * n + j];
            let mut s = 0.0;
            if j > 0 {
                s += p[col * n + j - 1] - c;
            }
            if j + 1 < n {
                s += p[col * n + j + 1] - c;
            }
            out[col * n + j] = s / dz2;
        }
    }
    for a in grid.active_tangential_axes() {
        let inv2 = 1.0 / (grid.spacing[a] * grid.spacing[a]);
        for col in 0..grid.columns() {
            let (l, r) = (grid.shift(col, a, -1), grid.shift(col, a, 1));
            for j in 0..n {
                out[col * n + j] += (p[l * n + j] - 2.0 * p[col * n + j] + p[r * n + j]) * inv2;
            }
        }
    }
    out
}

/// Viscous Laplacian of every velocity component. Tangential components
/// see a mirrored ghost across each wall (zero wall value), the normal
/// component is held at zero on the wall nodes.
pub fn velocity_laplacian(u: &VelocityField) -> VelocityField {
    let g = &u.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let dz2 = g.dz() * g.dz();
    let mut out = VelocityField::zeros(g);
    for a in g.active_tangential_axes() {
        let c = &u.components[a];
        let o = &mut out.components[a];
        for col in 0..g.columns() {
            for j in 0..n {
                let v = c[col * n + j];
                let below = if j == 0 { -v } else { c[col * n + j - 1] };
                let above = if j + 1 == n { -v } else { c[col * n + j + 1] };
                o[col * n + j] = (below - 2.0 * v + above) / dz2;
            }
        }
    }
    {
        let c = &u.components[2];
        let o = &mut out.components[2];
        for col in 0..g.columns() {
            for k in 1..n {
                o[col * nk + k] =
                    (c[col * nk + k - 1] - 2.0 * c[col * nk + k] + c[col * nk + k + 1]) / dz2;
            }
        }
    }
    for b in g.active_tangential_axes() {
        let inv2 = 1.0 / (g.spacing[b] * g.spacing[b]);
        for comp in 0..3 {
            if comp < 2 && comp + 1 >= g.dim {
                continue;
            }
            let len = if comp == 2 { nk } else { n };
            let c = &u.components[comp];
            let o = &mut out.components[comp];
            for col in 0..g.columns() {
                let (l, r) = (g.shift(col, b, -1), g.shift(col, b, 1));
                let range = if comp == 2 { 1..n } else { 0..n };
                for k in range {
                    o[col * len + k] +=
                        (c[l * len + k] - 2.0 * c[col * len + k] + c[r * len + k]) * inv2;
                }
            }
        }
    }
    out
}

/// Discrete Dirichlet energy `-<lap u, u>` of a velocity field.
pub fn velocity_dissipation(u: &VelocityField) -> f64 {
    let lap = velocity_laplacian(u);
    let g = &u.grid;
    let vol = g.column_area() * g.dz();
    let s: f64 = (0..3)
        .map(|c| {
            u.components[c]
                .iter()
                .zip(&lap.components[c])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum();
    -s * vol
}

/// The discrete director energy `E_h`.
pub fn angle_energy(field: &AngleField, params: &PhysParams) -> f64 {
    let g = &field.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let h2 = params.h * params.h;
    let l_h = anchoring(field);
    let mut total = 0.0;
    for col in 0..g.columns() {
        let phi = field.column(col);
        let mut e = 0.0;
        for k in 0..nk {
            e += g.node_weight(k) * 0.25 * h2 * ((2.0 * phi[k]).cos() + 1.0);
        }
        for k in 0..n {
            let s = phi[k + 1] - phi[k];
            e += 0.5 * s * s / g.dz();
        }
        e += 0.25 * l_h * ((2.0 * phi[0]).cos() + 1.0);
        for a in g.active_tangential_axes() {
            let other = field.column(g.shift(col, a, -1));
            let inv2 = 1.0 / (g.spacing[a] * g.spacing[a]);
            for k in 0..nk {
                let s = phi[k] - other[k];
                e += 0.5 * g.node_weight(k) * s * s * inv2;
            }
        }
        total += g.column_area() * e;
    }
    total
}

/// `dE_h / dphi` at every node; zero on the Dirichlet nodes.
pub fn angle_energy_derivative(field: &AngleField, params: &PhysParams) -> Vec<f64> {
    let g = &field.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let h2 = params.h * params.h;
    let l_h = anchoring(field);
    let dz = g.dz();
    let area = g.column_area();
    let mut out = vec![0.0; field.values.len()];
    for col in 0..g.columns() {
        let phi = field.column(col);
        let o = &mut out[col * nk..(col + 1) * nk];
        for k in 0..n {
            let w = g.node_weight(k);
            let mut stiff = (phi[k] - phi[k + 1]) / dz;
            if k > 0 {
                stiff += (phi[k] - phi[k - 1]) / dz;
            }
            o[k] = stiff - w * h2 * half_sin2(phi[k]);
        }
        o[0] -= l_h * half_sin2(phi[0]);
        for a in g.active_tangential_axes() {
            let l = field.column(g.shift(col, a, -1));
            let r = field.column(g.shift(col, a, 1));
            let inv2 = 1.0 / (g.spacing[a] * g.spacing[a]);
            for k in 0..n {
                o[k] += g.node_weight(k) * (2.0 * phi[k] - l[k] - r[k]) * inv2;
            }
        }
        o.iter_mut().for_each(|v| *v *= area);
    }
    out
}

/// Chemical potential `mu = W^{-1} dE_h/dphi`: interior nodes carry
/// `-lap phi - (h^2/2) sin 2phi`, the anchoring-wall node additionally
/// carries `-(2/dz)` times the natural boundary defect.
pub fn chemical_potential(field: &AngleField, params: &PhysParams) -> Vec<f64> {
    let g = &field.grid;
    let nk = g.nodes();
    let mut mu = angle_energy_derivative(field, params);
    let area = g.column_area();
    for col in 0..g.columns() {
        for k in 0..g.n_normal {
            mu[col * nk + k] /= area * g.node_weight(k);
        }
    }
    mu
}

/// `sum_nodes A w_k a b`, the discrete L2 pairing of nodal fields.
pub fn node_inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let nk = grid.nodes();
    let mut s = 0.0;
    for col in 0..grid.columns() {
        for k in 0..nk {
            s += grid.node_weight(k) * a[col * nk + k] * b[col * nk + k];
        }
    }
    s * grid.column_area()
}

/// `psi^T K psi` for the full (normal plus tangential) stiffness.
pub fn gradient_energy(grid: &Grid, psi: &[f64]) -> f64 {
    let nk = grid.nodes();
    let n = grid.n_normal;
    let mut grad = 0.0;
    for col in 0..grid.columns() {
        let c = &psi[col * nk..(col + 1) * nk];
        for k in 0..n {
            let s = c[k + 1] - c[k];
            grad += s * s / grid.dz();
        }
        for a in grid.active_tangential_axes() {
            let other = &psi[grid.shift(col, a, -1) * nk..];
            let inv2 = 1.0 / (grid.spacing[a] * grid.spacing[a]);
            for k in 0..nk {
                let s = c[k] - other[k];
                grad += grid.node_weight(k) * s * s * inv2;
            }
        }
    }
    grad * grid.column_area()
}

/// Discrete H1 norm `sqrt(||phi||^2 + ||grad phi||^2)` of a nodal field,
/// using the same quadrature as the energy.
pub fn node_h1_norm(grid: &Grid, phi: &[f64]) -> f64 {
    (node_inner(grid, phi, phi) + gradient_energy(grid, phi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use std::f64::consts::PI;

    fn field_1d(d: f64, n: usize, f: impl Fn(f64) -> f64) -> AngleField {
        AngleField::from_fn(&Grid::line(d, n).unwrap(), 1.0, |_, _, x| f(x))
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let g = discrete_gradient(&field_1d(1.0, 16, |_| 0.0));
        assert!(g.normal.iter().chain(&g.wall).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_exact_on_linear_profile() {
        let d = 1.3;
        let g = discrete_gradient(&field_1d(d, 20, |x| d - x));
        for v in &g.normal {
            assert!((v + 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_second_order_in_the_interior() {
        let d = 0.9;
        let err = |n: usize| {
            let f = field_1d(d, n, |x| (PI * x / (2.0 * d)).sin());
            let g = discrete_gradient(&f);
            let dz = d / n as f64;
            (0..n - 1)
                .map(|k| {
                    let x = (k as f64 + 0.5) * dz;
                    (g.normal[k] - PI / (2.0 * d) * (PI * x / (2.0 * d)).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn wall_gradient_follows_anchoring_condition() {
        let f = AngleField::from_fn(&Grid::line(1.0, 8).unwrap(), 2.0, |_, _, x| 0.4 * (1.0 - x));
        let g = discrete_gradient(&f);
        assert!((g.wall[0] + 2.0 * (0.4f64).sin() * (0.4f64).cos()).abs() < 1e-15);
    }

    fn sample_velocity(grid: &Grid) -> VelocityField {
        let mut u = VelocityField::zeros(grid);
        for (c, comp) in u.components.iter_mut().enumerate() {
            for (i, v) in comp.iter_mut().enumerate() {
                *v = ((i * 7 + c * 3) % 11) as f64 * 0.1 - 0.5;
            }
        }
        let nk = grid.nodes();
        for col in 0..grid.columns() {
            u.components[2][col * nk] = 0.0;
            u.components[2][col * nk + grid.n_normal] = 0.0;
        }
        u
    }

    #[test]
    fn divergence_of_single_face_perturbation() {
        let g = Grid::new(1.0, 2, 8, 8).unwrap();
        let mut u = VelocityField::zeros(&g);
        let eps = 1e-3;
        let col = g.column(3, 0);
        u.components[0][col * 8 + 4] = eps;
        let div = discrete_divergence(&u);
        let left = g.shift(col, 0, -1);
        assert!((div[col * 8 + 4] + eps / g.spacing[0]).abs() < 1e-15);
        assert!((div[left * 8 + 4] - eps / g.spacing[0]).abs() < 1e-15);
        let nonzero = div.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 2);
        assert!(discrete_divergence(&VelocityField::zeros(&g))
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn divergence_of_gradient_is_the_cell_laplacian() {
        for (dim, nt) in [(1, 1), (2, 6), (3, 4)] {
            let g = Grid::new(0.8, dim, nt, 7).unwrap();
            let p: Vec<f64> = (0..g.columns() * 7)
                .map(|i| ((i * 13) % 17) as f64 / 17.0)
                .collect();
            let a = discrete_divergence(&cell_gradient(&g, &p));
            let b = cell_laplacian(&g, &p);
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn velocity_dissipation_is_nonnegative_and_zero_only_for_zero() {
        let g = Grid::new(1.0, 3, 4, 6).unwrap();
        let u = sample_velocity(&g);
        assert!(velocity_dissipation(&u) > 0.0);
        assert_eq!(velocity_dissipation(&VelocityField::zeros(&g)), 0.0);
    }

    #[test]
    fn laplacian_is_symmetric_in_the_face_inner_product() {
        let g = Grid::new(1.0, 3, 4, 6).unwrap();
        let u = sample_velocity(&g);
        let mut v = sample_velocity(&g);
        v.components
            .iter_mut()
            .flatten()
            .for_each(|x| *x = (*x * 3.7).sin());
        let nk = g.nodes();
        for col in 0..g.columns() {
            v.components[2][col * nk] = 0.0;
            v.components[2][col * nk + g.n_normal] = 0.0;
        }
        let dot = |a: &VelocityField, b: &VelocityField| -> f64 {
            (0..3)
                .map(|c| {
                    a.components[c]
                        .iter()
                        .zip(&b.components[c])
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                })
                .sum()
        };
        let a = dot(&velocity_laplacian(&u), &v);
        let b = dot(&u, &velocity_laplacian(&v));
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn energy_of_zero_field() {
        let p = validate_params(2.0, 0.5, 1.0).unwrap();
        let f = AngleField::zeros(&Grid::new(1.0, 2, 4, 10).unwrap(), 0.5);
        assert!((angle_energy(&f, &p) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn energy_derivative_matches_finite_differences_in_3d() {
        let p = validate_params(1.3, 0.7, 0.9).unwrap();
        let g = Grid::new(0.9, 3, 4, 6).unwrap();
        let f = AngleField::from_fn(&g, 0.7, |x1, x2, x3| {
            (0.9 - x3) * (1.0 + 0.3 * (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos())
        });
        let eta = AngleField::from_fn(&g, 0.7, |x1, x2, x3| {
            (0.9 - x3) * (x1 + 2.0 * x2 + x3).cos()
        });
        let grad = angle_energy_derivative(&f, &p);
        let exact: f64 = grad.iter().zip(&eta.values).map(|(a, b)| a * b).sum();
        let eps = 1e-6;
        let shifted = |s: f64| {
            let mut g2 = f.clone();
            g2.values
                .iter_mut()
                .zip(&eta.values)
                .for_each(|(a, b)| *a += s * b);
            angle_energy(&g2, &p)
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        assert!((fd - exact).abs() < 1e-7 * exact.abs(), "{fd} vs {exact}");
    }
}
