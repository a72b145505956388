//! Nonlinear terms of the flow step.
//!
//! The elastic force acts on the velocity as `mu grad(phi)`, where `mu` is
//! the chemical potential; this differs from `-div(grad phi (x) grad phi)`
//! by a gradient, which the projection absorbs. The discrete force is
//! built as the exact adjoint of the discrete transport `u . grad(phi)`
//! (`<mu, T(u)>_nodes = <F(mu), u>_faces` for all `u` and `mu`), so the
//! stress work cancels the transport term in the discrete energy balance.
//! Momentum advection uses the skew-symmetric central form, which does no
//! work on any velocity field.

use crate::field::{AngleField, VelocityField};
use crate::grid::Grid;

fn d_tangential(grid: &Grid, phi: &[f64], a: usize, face: usize, k: usize) -> f64 {
    let nk = grid.nodes();
    (phi[face * nk + k] - phi[grid.shift(face, a, -1) * nk + k]) / grid.spacing[a]
}

fn d_normal(grid: &Grid, phi: &[f64], col: usize, k: usize) -> f64 {
    let nk = grid.nodes();
    (phi[col * nk + k + 1] - phi[col * nk + k - 1]) / (2.0 * grid.dz())
}

/// `u . grad(phi)` on the angle nodes (zero on the Dirichlet nodes).
pub fn transport(u: &VelocityField, phi: &AngleField) -> Vec<f64> {
    let g = &phi.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let p = &phi.values;
    let mut out = vec![0.0; p.len()];
    for a in g.active_tangential_axes() {
        let ua = &u.components[a];
        for col in 0..g.columns() {
            let faces = [col, g.shift(col, a, 1)];
            for k in 0..n {
                let mut s = 0.0;
                for &f in &faces {
                    let grad = d_tangential(g, p, a, f, k);
                    if k > 0 {
                        s += ua[f * n + k - 1] * grad;
                    }
                    s += ua[f * n + k] * grad;
                }
                out[col * nk + k] += 0.25 * g.dz() / g.node_weight(k) * s;
            }
        }
    }
    let u3 = &u.components[2];
    for col in 0..g.columns() {
        for k in 1..n {
            out[col * nk + k] += u3[col * nk + k] * d_normal(g, p, col, k);
        }
    }
    out
}

/// Elastic force `mu grad(phi)` on the velocity faces, adjoint to
/// [`transport`]. `mu` must vanish on the Dirichlet nodes.
pub fn elastic_force(mu: &[f64], phi: &AngleField) -> VelocityField {
    let g = &phi.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let p = &phi.values;
    let mut out = VelocityField::zeros(g);
    for a in g.active_tangential_axes() {
        let fa = &mut out.components[a];
        for f in 0..g.columns() {
            let left = g.shift(f, a, -1);
            for j in 0..n {
                let mut s = 0.0;
                for k in [j, j + 1] {
                    s += d_tangential(g, p, a, f, k) * (mu[left * nk + k] + mu[f * nk + k]);
                }
                fa[f * n + j] = 0.25 * s;
            }
        }
    }
    let f3 = &mut out.components[2];
    for col in 0..g.columns() {
        for k in 1..n {
            f3[col * nk + k] = mu[col * nk + k] * d_normal(g, p, col, k);
        }
    }
    out
}

/// Skew-symmetric advection `(u . grad) v` of every component of `v` by `u`.
pub fn advection(u: &VelocityField, v: &VelocityField) -> VelocityField {
    let g = &u.grid;
    let (n, nk) = (g.n_normal, g.nodes());
    let mut out = VelocityField::zeros(g);
    let axes: Vec<usize> = g.active_tangential_axes().collect();
    let dz = g.dz();

    for &a in &axes {
        let va = &v.components[a];
        let o = &mut out.components[a];
        for col in 0..g.columns() {
            let back = g.shift(col, a, -1);
            for j in 0..n {
                let mut s = 0.0;
                for &b in &axes {
                    let (up, dn) = (g.shift(col, b, 1), g.shift(col, b, -1));
                    let (adv_up, adv_dn) = if b == a {
                        let ub = &u.components[a];
                        (
                            0.5 * (ub[col * n + j] + ub[up * n + j]),
                            0.5 * (ub[dn * n + j] + ub[col * n + j]),
                        )
                    } else {
                        let ub = &u.components[b];
                        let up_back = g.shift(up, a, -1);
                        (
                            0.5 * (ub[up * n + j] + ub[up_back * n + j]),
                            0.5 * (ub[col * n + j] + ub[back * n + j]),
                        )
                    };
                    s += (adv_up * va[up * n + j] - adv_dn * va[dn * n + j]) / (2.0 * g.spacing[b]);
                }
                let u3 = &u.components[2];
                let w_up = 0.5 * (u3[col * nk + j + 1] + u3[back * nk + j + 1]);
                let w_dn = 0.5 * (u3[col * nk + j] + u3[back * nk + j]);
                let v_up = if j + 1 < n {
                    va[col * n + j + 1]
                } else {
                    -va[col * n + j]
                };
                let v_dn = if j > 0 {
                    va[col * n + j - 1]
                } else {
                    -va[col * n + j]
                };
                s += (w_up * v_up - w_dn * v_dn) / (2.0 * dz);
                o[col * n + j] = s;
            }
        }
    }

    let v3 = &v.components[2];
    let u3 = &u.components[2];
    let o = &mut out.components[2];
    for col in 0..g.columns() {
        for k in 1..n {
            let mut s = 0.0;
            for &b in &axes {
                let (up, dn) = (g.shift(col, b, 1), g.shift(col, b, -1));
                let ub = &u.components[b];
                let adv_up = 0.5 * (ub[up * n + k - 1] + ub[up * n + k]);
                let adv_dn = 0.5 * (ub[col * n + k - 1] + ub[col * n + k]);
                s += (adv_up * v3[up * nk + k] - adv_dn * v3[dn * nk + k]) / (2.0 * g.spacing[b]);
            }
            let w_up = 0.5 * (u3[col * nk + k] + u3[col * nk + k + 1]);
            let w_dn = 0.5 * (u3[col * nk + k - 1] + u3[col * nk + k]);
            s += (w_up * v3[col * nk + k + 1] - w_dn * v3[col * nk + k - 1]) / (2.0 * dz);
            o[col * nk + k] = s;
        }
    }
    out
}

/// Face inner product `sum V u v`.
pub fn face_inner(u: &VelocityField, v: &VelocityField) -> f64 {
    let g = &u.grid;
    let vol = g.column_area() * g.dz();
    let s: f64 = (0..3)
        .map(|c| {
            u.components[c]
                .iter()
                .zip(&v.components[c])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum();
    s * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::node_inner;

    fn pseudo(i: usize, salt: usize) -> f64 {
        (((i * 2654435761 + salt * 40503) % 10007) as f64 / 10007.0) - 0.5
    }

    fn velocity(g: &Grid, salt: usize) -> VelocityField {
        let mut u = VelocityField::zeros(g);
        for c in 0..3 {
            if c < 2 && c + 1 >= g.dim {
                continue;
            }
            for (i, v) in u.components[c].iter_mut().enumerate() {
                *v = pseudo(i, salt + c);
            }
        }
        let nk = g.nodes();
        for col in 0..g.columns() {
            u.components[2][col * nk] = 0.0;
            u.components[2][col * nk + g.n_normal] = 0.0;
        }
        u
    }

    #[test]
    fn advection_does_no_work() {
        for (dim, nt) in [(2, 6), (3, 4)] {
            let g = Grid::new(0.7, dim, nt, 5).unwrap();
            let u = velocity(&g, 1);
            let v = velocity(&g, 7);
            let w = face_inner(&advection(&u, &v), &v);
            assert!(w.abs() < 1e-14, "{w}");
        }
    }

    #[test]
    fn force_is_adjoint_of_transport() {
        for (dim, nt) in [(2, 6), (3, 4)] {
            let g = Grid::new(0.7, dim, nt, 5).unwrap();
            let u = velocity(&g, 3);
            let mut phi = AngleField::zeros(&g, 1.0);
            let mut mu = vec![0.0; phi.values.len()];
            let nk = g.nodes();
            for (i, v) in phi.values.iter_mut().enumerate() {
                *v = pseudo(i, 11);
                mu[i] = if i % nk == g.n_normal {
                    0.0
                } else {
                    pseudo(i, 13)
                };
            }
            let lhs = node_inner(&g, &mu, &transport(&u, &phi));
            let rhs = face_inner(&elastic_force(&mu, &phi), &u);
            assert!(
                (lhs - rhs).abs() < 1e-14 * lhs.abs().max(1.0),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn transport_of_shear_flow_across_layers_vanishes() {
        // u1(x3) carries no angle change when phi depends on x3 alone
        let g = Grid::new(1.0, 2, 8, 8).unwrap();
        let phi = AngleField::from_fn(&g, 1.0, |_, _, x3| 1.0 - x3);
        let mut u = VelocityField::zeros(&g);
        for col in 0..g.columns() {
            for j in 0..8 {
                u.components[0][col * 8 + j] = g.cell_x3(j);
            }
        }
        assert!(transport(&u, &phi).iter().all(|&t| t == 0.0));
    }
}
