//! Critical points of the director energy in one dimension: the monotone
//! iteration from `pi/2`, a semi-implicit gradient descent used as an
//! independent check, and the residual of the sine-Gordon problem
//!
//! ```text
//! -phi'' = h^2 sin(phi) cos(phi)  in (0, d),  phi(d) = 0,
//! phi'(0) = -L_H sin(phi(0)) cos(phi(0)).
//! ```
//!
//! Discretely, with stiffness `K`, trapezoid weights `W` and the
//! potential mass `M = h^2 W + L_H e_0 e_0^T` from [`LineOperators`], a
//! critical point solves `K phi = M s(phi)` with `s = sin cos`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::calculus::{
    angle_energy, angle_energy_derivative, chemical_potential, gradient_energy, half_sin2,
    LineOperators,
};
use crate::error::{PhanError, Result};
use crate::field::{AngleField, Profile};
use crate::grid::Grid;
use crate::linalg::TridiagLu;
use crate::params::PhysParams;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    MonotoneIteration,
    GradientDescent,
}

/// Which branch of equilibria a computed limit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Trivial,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub params: PhysParams,
    pub grid: Grid,
    pub profile: Profile,
    pub energy: f64,
    pub bvp_residual: f64,
    pub iterations: usize,
    pub method: Method,
    pub branch: Branch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub sup_deltas: Vec<f64>,
    pub monotone_violations: Vec<usize>,
}

impl IterationTrace {
    pub fn total_violations(&self) -> usize {
        self.monotone_violations.iter().sum()
    }
}

fn line_field(phi: &Profile, params: &PhysParams) -> AngleField {
    let grid = Grid::line(phi.d, phi.n_normal()).expect("profile has at least four cells");
    AngleField {
        values: phi.values.clone(),
        ..AngleField::zeros(&grid, params.l_h)
    }
}

fn check_grid(phi: &Profile, grid: &Grid) -> Result<()> {
    if phi.n_normal() != grid.n_normal || phi.d != grid.d {
        return Err(PhanError::GridMismatch(format!(
            "profile has {} cells on [0, {}], grid has {} on [0, {}]",
            phi.n_normal(),
            phi.d,
            grid.n_normal,
            grid.d
        )));
    }
    Ok(())
}

pub fn energy(phi: &Profile, params: &PhysParams) -> f64 {
    angle_energy(&line_field(phi, params), params)
}

/// Riesz representative of `E'` in the trapezoid `L2` pairing
/// ([`l2_pairing`]); zero on the Dirichlet node.
pub fn energy_gradient(phi: &Profile, params: &PhysParams) -> Profile {
    Profile {
        d: phi.d,
        values: chemical_potential(&line_field(phi, params), params),
    }
}

pub fn l2_pairing(a: &Profile, b: &Profile) -> f64 {
    let n = a.n_normal();
    let dz = a.dz();
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 * dz } else { dz };
            w * a.values[k] * b.values[k]
        })
        .sum()
}

/// Residual of the sine-Gordon problem on a slab field: the largest
/// interior `|lap phi + (h^2/2) sin 2phi|`, plus the largest `|phi(d)|`,
/// plus the largest anchoring defect `|d3 phi(0) + (L_H/2) sin 2phi(0)|`.
/// The wall derivative is the second-order value
/// `(phi_1 - phi_0)/dz + (dz/2)(lap_t phi_0 + (h^2/2) sin 2phi_0)`.
pub fn bvp_residual_field(field: &AngleField, params: &PhysParams) -> f64 {
    let g = &field.grid;
    let nk = g.nodes();
    let mu = chemical_potential(field, params);
    let (mut interior, mut top, mut wall) = (0.0f64, 0.0f64, 0.0f64);
    for col in 0..g.columns() {
        for k in 1..g.n_normal {
            interior = interior.max(mu[col * nk + k].abs());
        }
        top = top.max(field.values[col * nk + g.n_normal].abs());
        wall = wall.max(mu[col * nk].abs() * 0.5 * g.dz());
    }
    interior + top + wall
}

pub fn bvp_residual(phi: &Profile, params: &PhysParams) -> f64 {
    bvp_residual_field(&line_field(phi, params), params)
}

/// Factored `K + M`, the operator of the monotone map.
struct MonotoneSystem {
    ops: LineOperators,
    lu: TridiagLu,
}

impl MonotoneSystem {
    fn new(params: &PhysParams, grid: &Grid) -> Result<MonotoneSystem> {
        let ops = LineOperators::new(params, grid);
        let lu = ops.stiffness.plus_diag(1.0, &ops.mass).factor()?;
        Ok(MonotoneSystem { ops, lu })
    }

    /// Solves `(K + M) v = M g` on the free nodes, `v(d) = 0`.
    fn solve(&self, g: &[f64]) -> Vec<f64> {
        let n = self.ops.mass.len();
        let mut v: Vec<f64> = (0..n).map(|k| self.ops.mass[k] * g[k]).collect();
        self.lu.solve_in_place(&mut v);
        v.push(0.0);
        v
    }
}

/// Discrete solve of `(h^-2 v'' - v) = -g` in `(0, d)`, `v(d) = 0`,
/// `-v'(0)/L_H + v(0) = g(0)`, with nodal data `g`.
pub fn solve_monotone_system(params: &PhysParams, grid: &Grid, g: &Profile) -> Result<Profile> {
    check_grid(g, grid)?;
    let sys = MonotoneSystem::new(params, grid)?;
    Ok(Profile {
        d: grid.d,
        values: sys.solve(&g.values),
    })
}

fn monotone_source(u: f64) -> f64 {
    u + half_sin2(u)
}

/// The monotone map `v = L u` with source `g(u) = u + sin(2u)/2`.
#[allow(non_snake_case)]
pub fn apply_L(u: &Profile, params: &PhysParams, grid: &Grid) -> Result<Profile> {
    check_grid(u, grid)?;
    for (node, &value) in u.values.iter().enumerate() {
        if !(-tol::ORDER_SLACK..=FRAC_PI_2 + tol::ORDER_SLACK).contains(&value) {
            return Err(PhanError::OutOfRange { node, value });
        }
    }
    let g: Vec<f64> = u.values.iter().map(|&x| monotone_source(x)).collect();
    let sys = MonotoneSystem::new(params, grid)?;
    Ok(Profile {
        d: grid.d,
        values: sys.solve(&g),
    })
}

fn classify(phi: &Profile, tol: f64) -> Result<Branch> {
    if phi.max_abs() < 100.0 * tol {
        Ok(Branch::Trivial)
    } else if phi.values[0] > 1000.0 * tol {
        Ok(Branch::Positive)
    } else {
        Err(PhanError::AmbiguousLimit {
            amplitude: phi.max_abs(),
        })
    }
}

fn finish(
    params: &PhysParams,
    grid: &Grid,
    profile: Profile,
    iterations: usize,
    method: Method,
    branch: Branch,
) -> EquilibriumProfile {
    EquilibriumProfile {
        params: *params,
        grid: grid.clone(),
        energy: energy(&profile, params),
        bvp_residual: bvp_residual(&profile, params),
        profile,
        iterations,
        method,
        branch,
    }
}

/// Iterates `v_{k+1} = L v_k` from `v_0 = pi/2` until the sup-norm update
/// drops below `tol`. The limit is the trivial state below threshold and
/// the least-energy solution above it.
pub fn monotone_iterate(
    params: &PhysParams,
    grid: &Grid,
    tol: f64,
) -> Result<(EquilibriumProfile, IterationTrace)> {
    if grid.dim != 1 || grid.d != params.d {
        return Err(PhanError::GridMismatch(
            "monotone iteration needs the 1D grid of the film".into(),
        ));
    }
    let sys = MonotoneSystem::new(params, grid)?;
    let mut v = vec![FRAC_PI_2; grid.nodes()];
    v[grid.n_normal] = 0.0;
    let mut g = vec![0.0; grid.nodes()];
    let mut trace = IterationTrace::default();
    for it in 1..=tol::MONOTONE_CAP {
        for (gk, &vk) in g.iter_mut().zip(&v) {
            *gk = monotone_source(vk);
        }
        let next = sys.solve(&g);
        let mut delta = 0.0f64;
        let mut violations = 0;
        for (&a, &b) in next.iter().zip(&v) {
            delta = delta.max((a - b).abs());
            if a > b + tol::ORDER_SLACK
                || !(-tol::ORDER_SLACK..=FRAC_PI_2 + tol::ORDER_SLACK).contains(&a)
            {
                violations += 1;
            }
        }
        trace.sup_deltas.push(delta);
        trace.monotone_violations.push(violations);
        v = next;
        if delta < tol {
            let profile = Profile {
                d: grid.d,
                values: v,
            };
            let branch = classify(&profile, tol)?;
            return Ok((
                finish(params, grid, profile, it, Method::MonotoneIteration, branch),
                trace,
            ));
        }
    }
    Err(PhanError::NoConvergence {
        iterations: tol::MONOTONE_CAP,
    })
}

/// Step of the semi-implicit descent: the explicit part has Lipschitz
/// constant `h^2 + 2 L_H / dz` per unit weight, the stiffness is implicit.
pub fn descent_step(params: &PhysParams, grid: &Grid) -> f64 {
    0.4 / (params.h * params.h + 2.0 * params.l_h / grid.dz())
}

/// Semi-implicit gradient flow `(W + tau K) phi' = W phi + tau M s(phi)`
/// until the energy gradient is below `tol` in max norm.
pub fn gradient_descent_minimize(
    phi0: &Profile,
    params: &PhysParams,
    grid: &Grid,
    tol: f64,
) -> Result<EquilibriumProfile> {
    check_grid(phi0, grid)?;
    let ops = LineOperators::new(params, grid);
    let tau = descent_step(params, grid);
    let lu = ops
        .stiffness
        .clone()
        .plus_diag(1.0 / tau, &ops.weights)
        .factor()?;
    let n = grid.n_normal;
    let mut phi = phi0.values.clone();
    phi[n] = 0.0;
    let mut rhs = vec![0.0; n];
    for it in 0..tol::DESCENT_CAP {
        let current = Profile {
            d: grid.d,
            values: phi,
        };
        if energy_gradient(&current, params).max_abs() < tol {
            let branch = if current.max_abs() < 100.0 * tol {
                Branch::Trivial
            } else {
                Branch::Positive
            };
            return Ok(finish(
                params,
                grid,
                current,
                it,
                Method::GradientDescent,
                branch,
            ));
        }
        phi = current.values;
        for k in 0..n {
            rhs[k] = ops.weights[k] * phi[k] / tau + ops.mass[k] * half_sin2(phi[k]);
        }
        lu.solve_in_place(&mut rhs);
        phi[..n].copy_from_slice(&rhs);
    }
    Err(PhanError::NoConvergence {
        iterations: tol::DESCENT_CAP,
    })
}

/// Tangentially constant slab field carrying a 1D equilibrium.
pub fn extend_to_slab(phi1d: &EquilibriumProfile, grid3: &Grid) -> Result<AngleField> {
    AngleField::from_profile(grid3, phi1d.params.l_h, &phi1d.profile)
}

/// `<E''[phi] psi, psi>` for slab fields on the same grid.
pub fn second_variation(phi: &AngleField, psi: &AngleField, params: &PhysParams) -> f64 {
    let g = &phi.grid;
    let nk = g.nodes();
    let h2 = params.h * params.h;
    let mut potential = 0.0;
    for col in 0..g.columns() {
        for k in 0..nk {
            let i = col * nk + k;
            potential +=
                g.node_weight(k) * h2 * (2.0 * phi.values[i]).cos() * psi.values[i] * psi.values[i];
        }
        let i = col * nk;
        potential += params.l_h * (2.0 * phi.values[i]).cos() * psi.values[i] * psi.values[i];
    }
    gradient_energy(g, &psi.values) - potential * g.column_area()
}

/// Centred difference of a slab field along tangential axis `a`.
pub fn tangential_derivative(phi: &AngleField, a: usize) -> AngleField {
    let g = &phi.grid;
    let nk = g.nodes();
    let mut out = phi.clone();
    if a + 1 >= g.dim {
        out.values.iter_mut().for_each(|v| *v = 0.0);
        return out;
    }
    let inv = 0.5 / g.spacing[a];
    for col in 0..g.columns() {
        let (l, r) = (g.shift(col, a, -1), g.shift(col, a, 1));
        for k in 0..nk {
            out.values[col * nk + k] = (phi.values[r * nk + k] - phi.values[l * nk + k]) * inv;
        }
    }
    out
}

/// `E'` paired with a nodal direction through the raw derivative, for
/// slab fields; used by the finite-difference checks.
pub fn energy_directional_derivative(
    field: &AngleField,
    eta: &AngleField,
    params: &PhysParams,
) -> f64 {
    angle_energy_derivative(field, params)
        .iter()
        .zip(&eta.values)
        .map(|(a, b)| a * b)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn unit(d: f64) -> PhysParams {
        validate_params(1.0, 1.0, d).unwrap()
    }

    #[test]
    fn energy_of_zero_profile() {
        assert!((energy(&Profile::zeros(1.0, 64), &unit(1.0)) - 1.0).abs() < 1e-14);
        let p = validate_params(2.0, 0.5, 1.0).unwrap();
        assert!((energy(&Profile::zeros(1.0, 64), &p) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn gradient_vanishes_at_zero() {
        let g = energy_gradient(&Profile::zeros(1.0, 32), &unit(1.0));
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_of_zero_and_of_linear_profile() {
        assert_eq!(bvp_residual(&Profile::zeros(0.8, 16), &unit(0.8)), 0.0);
        let d = 0.8;
        let r = bvp_residual(&Profile::from_fn(d, 16, |x| x), &unit(d));
        assert!(r >= d);
    }

    #[test]
    fn monotone_map_of_zero_and_of_upper_solution() {
        let p = unit(1.2);
        let g = Grid::line(1.2, 64).unwrap();
        let zero = apply_L(&Profile::zeros(1.2, 64), &p, &g).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let mut top = Profile::from_fn(1.2, 64, |_| FRAC_PI_2);
        top.values[64] = 0.0;
        let v = apply_L(&top, &p, &g).unwrap();
        assert!(v.values.iter().all(|&x| x < FRAC_PI_2));
    }

    #[test]
    fn monotone_map_rejects_out_of_range_data() {
        let p = unit(1.0);
        let g = Grid::line(1.0, 8).unwrap();
        let mut u = Profile::zeros(1.0, 8);
        u.values[3] = 1.7;
        assert_eq!(
            apply_L(&u, &p, &g),
            Err(PhanError::OutOfRange {
                node: 3,
                value: 1.7
            })
        );
    }

    /// Manufactured solution `vbar = sin(b (d - x)) + a x (d - x)`, with `a`
    /// chosen so the interior equation and the wall condition prescribe the
    /// same data at `x = 0`.
    fn manufactured_error(n: usize) -> f64 {
        let (h, l, d, b) = (1.3, 0.7, 1.1, 2.0);
        let p = validate_params(h, l, d).unwrap();
        let a = (b * h * h * (b * d).cos() - b * b * l * (b * d).sin()) / (d * h * h + 2.0 * l);
        let vbar = |x: f64| (b * (d - x)).sin() + a * x * (d - x);
        let vbar2 = |x: f64| -b * b * (b * (d - x)).sin() - 2.0 * a;
        let data = Profile::from_fn(d, n, |x| vbar(x) - vbar2(x) / (h * h));
        let grid = Grid::line(d, n).unwrap();
        let v = solve_monotone_system(&p, &grid, &data).unwrap();
        v.max_abs_diff(&Profile::from_fn(d, n, vbar))
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let (e1, e2) = (manufactured_error(64), manufactured_error(128));
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn monotone_iteration_below_threshold_is_trivial() {
        let p = unit(0.5);
        let g = Grid::line(0.5, 128).unwrap();
        let (eq, trace) = monotone_iterate(&p, &g, 1e-10).unwrap();
        assert!(eq.profile.max_abs() < 1e-6);
        assert_eq!(eq.branch, Branch::Trivial);
        assert_eq!(trace.total_violations(), 0);
    }

    #[test]
    fn monotone_iteration_above_threshold() {
        let p = unit(1.2);
        let g = Grid::line(1.2, 256).unwrap();
        let (eq, trace) = monotone_iterate(&p, &g, 1e-10).unwrap();
        assert_eq!(eq.branch, Branch::Positive);
        assert_eq!(trace.total_violations(), 0);
        let v = &eq.profile.values;
        assert!(v[0] > 0.0 && v[0] < FRAC_PI_2);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(eq.bvp_residual < 1e-7);
        assert!(eq.energy < 1.1);
    }

    #[test]
    fn converged_fixed_point_has_small_gradient() {
        let p = unit(1.2);
        let g = Grid::line(1.2, 256).unwrap();
        let (eq, _) = monotone_iterate(&p, &g, 1e-13).unwrap();
        assert!(energy_gradient(&eq.profile, &p).max_abs() < 1e-8);
    }

    #[test]
    fn descent_from_zero_returns_immediately() {
        let p = unit(1.2);
        let g = Grid::line(1.2, 64).unwrap();
        let eq = gradient_descent_minimize(&Profile::zeros(1.2, 64), &p, &g, 1e-8).unwrap();
        assert_eq!(eq.iterations, 0);
        assert_eq!(eq.profile.max_abs(), 0.0);
    }

    #[test]
    fn descent_agrees_with_monotone_iteration() {
        let d = 1.2;
        let p = unit(d);
        let g = Grid::line(d, 128).unwrap();
        let (star, _) = monotone_iterate(&p, &g, 1e-11).unwrap();
        let phi0 = Profile::from_fn(d, 128, |x| 0.1 * (PI * (d - x) / (2.0 * d)).sin());
        let eq = gradient_descent_minimize(&phi0, &p, &g, 1e-9).unwrap();
        assert!(eq.profile.max_abs_diff(&star.profile) < 1e-6);
    }

    #[test]
    fn extension_keeps_residual() {
        let p = unit(1.2);
        let g = Grid::line(1.2, 64).unwrap();
        let (eq, _) = monotone_iterate(&p, &g, 1e-10).unwrap();
        let g3 = Grid::new(1.2, 3, 4, 64).unwrap();
        let f = extend_to_slab(&eq, &g3).unwrap();
        let r3 = bvp_residual_field(&f, &p);
        assert!((r3 - eq.bvp_residual).abs() <= 1e-12 * eq.bvp_residual.max(1e-300) + 1e-18);
        let dx = tangential_derivative(&f, 0);
        assert_eq!(second_variation(&f, &dx, &p), 0.0);
        assert!(matches!(
            extend_to_slab(&eq, &Grid::new(1.2, 2, 4, 32).unwrap()),
            Err(PhanError::GridMismatch(_))
        ));
    }

    #[test]
    fn threshold_thickness_is_sharp_for_zero_state() {
        // at d slightly below d_c the zero state is the only limit
        let p = unit(FRAC_PI_4 - 0.05);
        let g = Grid::line(p.d, 64).unwrap();
        let (eq, _) = monotone_iterate(&p, &g, 1e-10).unwrap();
        assert_eq!(eq.branch, Branch::Trivial);
    }
}
