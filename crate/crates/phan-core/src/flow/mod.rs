//! Coupled director / incompressible flow evolution.
//!
//! One step of size `dt`:
//! 1. angle: `(W + dt K) phi' = W (phi - dt u.grad phi) + dt M s(phi)`,
//!    stiffness implicit, anchoring and bulk potential explicit;
//! 2. velocity: `(I - dt lap) u* = u + dt (-(u.grad)u + mu' grad phi')`;
//! 3. Chorin projection of `u*` onto discretely divergence-free fields.
//!
//! The reported pressure is the projection potential divided by `dt`,
//! i.e. the pressure of the chemical-potential form of the force.

mod coupling;
mod init;

pub use coupling::{advection, elastic_force, face_inner, transport};
pub use init::{ramp_profile, random_admissible_state, solenoidal_from_streamfunction};

use serde::{Deserialize, Serialize};

use crate::calculus::{
    angle_energy, cell_gradient, chemical_potential, discrete_divergence, half_sin2, node_h1_norm,
    node_inner, velocity_dissipation, LineOperators,
};
use crate::error::{PhanError, Result};
use crate::field::{AngleField, PressureField, Profile, VelocityField};
use crate::grid::Grid;
use crate::linalg::Tridiag;
use crate::params::{validate_params, PhysParams};
use crate::spectral::ModalSolver;
use crate::tol::{TOL_CONV, TOL_DIV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub phi: AngleField,
    pub u: VelocityField,
    pub p: PressureField,
    pub t: f64,
}

impl FlowState {
    /// State at rest with the given angle field.
    pub fn at_rest(phi: AngleField) -> FlowState {
        let grid = phi.grid.clone();
        FlowState {
            u: VelocityField::zeros(&grid),
            p: PressureField::zeros(&grid),
            phi,
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.phi.grid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub total_energy: f64,
    pub dissipation: f64,
    pub u_l2: f64,
    pub u_linf: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub dist_to_zero: f64,
    pub dist_to_star: Option<f64>,
    pub div_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    /// Stationarity reached before `t_end`.
    Converged,
    /// Ran to `t_end` without reaching stationarity.
    Completed,
    /// Energy grew beyond round-off, or a value became non-finite.
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Record diagnostics every this many steps (and at the last one).
    pub sample_every: usize,
    /// Stationarity threshold for both the dissipation and `|dphi/dt|`.
    pub tol_conv: f64,
}

impl RunSettings {
    pub fn new(dt: f64, t_end: f64) -> RunSettings {
        RunSettings {
            dt,
            t_end,
            sample_every: 1,
            tol_conv: TOL_CONV,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Diagnostics>,
    pub status: RunStatus,
    pub final_state: FlowState,
    pub steps: usize,
    /// The initial velocity was not divergence-free and was projected.
    pub initial_projected: bool,
    /// Sum of all step-to-step energy increases.
    pub energy_increase: f64,
}

/// `E_h(phi) + 1/2 |u|^2`.
pub fn total_energy(state: &FlowState, params: &PhysParams) -> f64 {
    angle_energy(&state.phi, params) + 0.5 * state.u.l2_squared()
}

/// `|grad u|^2 + |mu|^2`, the rate at which the total energy decays.
pub fn dissipation(state: &FlowState, params: &PhysParams) -> f64 {
    let mu = chemical_potential(&state.phi, params);
    velocity_dissipation(&state.u) + node_inner(state.grid(), &mu, &mu)
}

/// Largest stable step: advective CFL, the explicit bulk potential and the
/// explicit anchoring term.
pub fn cfl_limit(state: &FlowState, params: &PhysParams) -> f64 {
    let g = state.grid();
    let h_min = g
        .active_tangential_axes()
        .map(|a| g.spacing[a])
        .fold(g.dz(), f64::min);
    let umax = state.u.max_abs();
    let advective = if umax > 0.0 {
        0.25 * h_min / umax
    } else {
        f64::INFINITY
    };
    advective
        .min(0.5 / (params.h * params.h))
        .min(g.dz() / params.l_h)
}

pub fn max_divergence(u: &VelocityField) -> f64 {
    discrete_divergence(u)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Pre-factored implicit operators for one `(grid, params, dt)`.
pub struct Stepper {
    params: PhysParams,
    grid: Grid,
    dt: f64,
    ops: LineOperators,
    angle: ModalSolver,
    viscous_tangential: Option<ModalSolver>,
    viscous_normal: Option<ModalSolver>,
    pressure: Option<ModalSolver>,
}

fn second_difference(n: usize, dz: f64, end_diag: f64) -> Tridiag {
    let inv = 1.0 / (dz * dz);
    let mut t = Tridiag::zeros(n);
    for k in 0..n {
        t.diag[k] = if k == 0 || k + 1 == n {
            end_diag * inv
        } else {
            2.0 * inv
        };
        if k > 0 {
            t.sub[k] = -inv;
        }
        if k + 1 < n {
            t.sup[k] = -inv;
        }
    }
    if n == 1 {
        // a single cell sees both walls
        t.diag[0] = (2.0 * end_diag - 2.0) * inv;
    }
    t
}

fn pressure_solver(grid: &Grid) -> Result<ModalSolver> {
    let n = grid.n_normal;
    let lap = second_difference(n, grid.dz(), 1.0);
    ModalSolver::new_pinned(grid, n, |sigma| lap.plus_diag(sigma, &vec![1.0; n]))
}

impl Stepper {
    pub fn new(grid: &Grid, params: &PhysParams, dt: f64) -> Result<Stepper> {
        validate_params(params.h, params.l_h, params.d)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PhanError::NonPositiveParameter("dt"));
        }
        let n = grid.n_normal;
        let ops = LineOperators::new(params, grid);
        let angle = {
            let (k, w) = (&ops.stiffness, &ops.weights);
            ModalSolver::new(grid, n, |sigma| {
                let mut t = k.clone();
                t.sub
                    .iter_mut()
                    .chain(t.sup.iter_mut())
                    .for_each(|v| *v *= dt);
                for i in 0..n {
                    t.diag[i] = dt * k.diag[i] + w[i] * (1.0 + dt * sigma);
                }
                t
            })?
        };
        let (mut vt, mut vn, mut pr) = (None, None, None);
        if grid.dim > 1 {
            let lap_t = second_difference(n, grid.dz(), 3.0);
            vt = Some(ModalSolver::new(grid, n, |sigma| {
                let mut t = lap_t.clone();
                t.sub
                    .iter_mut()
                    .chain(t.sup.iter_mut())
                    .for_each(|v| *v *= dt);
                t.diag.iter_mut().for_each(|v| *v = 1.0 + dt * (*v + sigma));
                t
            })?);
            if n > 1 {
                let m = n - 1;
                let lap_n = second_difference(m, grid.dz(), 2.0);
                vn = Some(ModalSolver::new(grid, m, |sigma| {
                    let mut t = lap_n.clone();
                    t.sub
                        .iter_mut()
                        .chain(t.sup.iter_mut())
                        .for_each(|v| *v *= dt);
                    t.diag.iter_mut().for_each(|v| *v = 1.0 + dt * (*v + sigma));
                    t
                })?);
            }
            pr = Some(pressure_solver(grid)?);
        }
        Ok(Stepper {
            params: *params,
            grid: grid.clone(),
            dt,
            ops,
            angle,
            viscous_tangential: vt,
            viscous_normal: vn,
            pressure: pr,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        let g = &self.grid;
        if !state.grid().same_normal_axis(g)
            || state.grid().dim != g.dim
            || state.grid().columns() != g.columns()
        {
            return Err(PhanError::GridMismatch(
                "state grid differs from stepper grid".into(),
            ));
        }
        let limit = cfl_limit(state, &self.params);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(PhanError::TimestepTooLarge { dt: self.dt, limit });
        }
        let phi = self.advance_angle(state);
        if g.dim == 1 {
            return Ok(FlowState {
                phi,
                u: state.u.clone(),
                p: state.p.clone(),
                t: state.t + self.dt,
            });
        }
        let mu = chemical_potential(&phi, &self.params);
        let force = elastic_force(&mu, &phi);
        let adv = advection(&state.u, &state.u);
        let mut rhs = state.u.clone();
        for c in 0..3 {
            for ((r, f), a) in rhs.components[c]
                .iter_mut()
                .zip(&force.components[c])
                .zip(&adv.components[c])
            {
                *r += self.dt * (f - a);
            }
        }
        let u_star = self.viscous_solve(&rhs);
        let (u, chi) = self.project_with(&u_star)?;
        let p = PressureField {
            grid: g.clone(),
            values: chi.iter().map(|c| c / self.dt).collect(),
            zero_mean: true,
        };
        Ok(FlowState {
            phi,
            u,
            p,
            t: state.t + self.dt,
        })
    }

    fn advance_angle(&self, state: &FlowState) -> AngleField {
        let g = &self.grid;
        let (n, nk) = (g.n_normal, g.nodes());
        let old = &state.phi.values;
        let tr = if g.dim > 1 {
            Some(transport(&state.u, &state.phi))
        } else {
            None
        };
        let mut rhs = vec![0.0; g.columns() * n];
        for col in 0..g.columns() {
            for k in 0..n {
                let i = col * nk + k;
                let mut v = old[i];
                if let Some(t) = &tr {
                    v -= self.dt * t[i];
                }
                rhs[col * n + k] =
                    self.ops.weights[k] * v + self.dt * self.ops.mass[k] * half_sin2(old[i]);
            }
        }
        let sol = self.angle.solve(&rhs);
        let mut phi = state.phi.clone();
        for col in 0..g.columns() {
            phi.values[col * nk..col * nk + n].copy_from_slice(&sol[col * n..(col + 1) * n]);
            phi.values[col * nk + n] = 0.0;
        }
        phi
    }

    fn viscous_solve(&self, rhs: &VelocityField) -> VelocityField {
        let g = &self.grid;
        let (n, nk) = (g.n_normal, g.nodes());
        let mut out = VelocityField::zeros(g);
        if let Some(vt) = &self.viscous_tangential {
            for a in g.active_tangential_axes() {
                out.components[a] = vt.solve(&rhs.components[a]);
            }
        }
        if let Some(vn) = &self.viscous_normal {
            let m = n - 1;
            let mut packed = vec![0.0; g.columns() * m];
            for col in 0..g.columns() {
                packed[col * m..(col + 1) * m]
                    .copy_from_slice(&rhs.components[2][col * nk + 1..col * nk + n]);
            }
            let sol = vn.solve(&packed);
            for col in 0..g.columns() {
                out.components[2][col * nk + 1..col * nk + n]
                    .copy_from_slice(&sol[col * m..(col + 1) * m]);
            }
        }
        out
    }

    fn project_with(&self, u: &VelocityField) -> Result<(VelocityField, Vec<f64>)> {
        let solver = self
            .pressure
            .as_ref()
            .ok_or(PhanError::LinearSolveFailure("pressure"))?;
        project_using(solver, u)
    }
}

fn project_using(solver: &ModalSolver, u: &VelocityField) -> Result<(VelocityField, Vec<f64>)> {
    let g = &u.grid;
    let rhs: Vec<f64> = discrete_divergence(u).iter().map(|d| -d).collect();
    let mut chi = solver.solve(&rhs);
    let mean = chi.iter().sum::<f64>() / chi.len() as f64;
    chi.iter_mut().for_each(|c| *c -= mean);
    let grad = cell_gradient(g, &chi);
    let mut out = u.clone();
    for c in 0..3 {
        for (o, gr) in out.components[c].iter_mut().zip(&grad.components[c]) {
            *o -= gr;
        }
    }
    let scale = u.max_abs().max(1.0);
    if max_divergence(&out) > TOL_DIV * scale {
        return Err(PhanError::LinearSolveFailure("pressure"));
    }
    Ok((out, chi))
}

/// Discrete Leray projection: returns the divergence-free part of `u` and
/// the zero-mean potential whose gradient was removed.
pub fn project(u: &VelocityField) -> Result<(VelocityField, PressureField)> {
    let g = &u.grid;
    if g.dim == 1 {
        return Ok((u.clone(), PressureField::zeros(g)));
    }
    let (out, chi) = project_using(&pressure_solver(g)?, u)?;
    Ok((
        out,
        PressureField {
            grid: g.clone(),
            values: chi,
            zero_mean: true,
        },
    ))
}

/// One step from `state`; see the module documentation.
pub fn step(state: &FlowState, params: &PhysParams, dt: f64) -> Result<FlowState> {
    Stepper::new(state.grid(), params, dt)?.step(state)
}

fn diagnostics(state: &FlowState, params: &PhysParams, star: Option<&AngleField>) -> Diagnostics {
    let g = state.grid();
    let (phi_min, phi_max) = state.phi.min_max();
    Diagnostics {
        t: state.t,
        total_energy: total_energy(state, params),
        dissipation: dissipation(state, params),
        u_l2: state.u.l2_squared().sqrt(),
        u_linf: state.u.max_abs(),
        phi_min,
        phi_max,
        dist_to_zero: node_h1_norm(g, &state.phi.values),
        dist_to_star: star.map(|s| {
            let diff: Vec<f64> = state
                .phi
                .values
                .iter()
                .zip(&s.values)
                .map(|(a, b)| a - b)
                .collect();
            node_h1_norm(g, &diff)
        }),
        div_residual: if g.dim > 1 {
            max_divergence(&state.u)
        } else {
            0.0
        },
    }
}

/// Integrates from `initial` until stationarity, `t_end`, or blow-up.
/// `candidate_star` is a one-dimensional profile against which the
/// distance `dist_to_star` is reported.
pub fn run(
    initial: &FlowState,
    params: &PhysParams,
    settings: &RunSettings,
    candidate_star: Option<&Profile>,
) -> Result<Trajectory> {
    let RunSettings {
        dt,
        t_end,
        sample_every,
        tol_conv,
    } = *settings;
    if !(t_end >= 0.0) {
        return Err(PhanError::NonPositiveParameter("t_end"));
    }
    if sample_every == 0 {
        return Err(PhanError::NonPositiveParameter("sample_every"));
    }
    let g = initial.grid().clone();
    let stepper = Stepper::new(&g, params, dt)?;
    let star = match candidate_star {
        Some(p) => Some(AngleField::from_profile(&g, params.l_h, p)?),
        None => None,
    };

    let mut state = initial.clone();
    let mut initial_projected = false;
    if g.dim > 1 && max_divergence(&state.u) > TOL_DIV {
        state.u = stepper.project_with(&state.u)?.0;
        initial_projected = true;
    }

    let n_steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut samples = vec![diagnostics(&state, params, star.as_ref())];
    let e0 = samples[0].total_energy;
    let budget = 1e-6 * e0.abs().max(f64::MIN_POSITIVE);
    let mut energy = e0;
    let mut energy_increase = 0.0;
    let mut status = RunStatus::Completed;
    let mut steps = 0;

    while steps < n_steps {
        let mut next = stepper.step(&state)?;
        steps += 1;
        next.t = initial.t + steps as f64 * dt;
        let e = total_energy(&next, params);
        let rate = next
            .phi
            .values
            .iter()
            .zip(&state.phi.values)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
            / dt;
        energy_increase += (e - energy).max(0.0);
        energy = e;
        state = next;

        if !e.is_finite() || energy_increase > budget {
            status = RunStatus::Diverged;
            samples.push(diagnostics(&state, params, star.as_ref()));
            break;
        }
        let stationary = rate < tol_conv && dissipation(&state, params) < tol_conv;
        if stationary {
            status = RunStatus::Converged;
        }
        if stationary || steps % sample_every == 0 || steps == n_steps {
            samples.push(diagnostics(&state, params, star.as_ref()));
        }
        if stationary {
            break;
        }
    }

    Ok(Trajectory {
        samples,
        status,
        final_state: state,
        steps,
        initial_projected,
        energy_increase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub pass: bool,
    pub min: f64,
    pub min_index: usize,
    pub max: f64,
    pub max_index: usize,
}

/// Whether every nodal angle lies in `[band.0 - tol, band.1 + tol]`.
pub fn max_principle_check(phi: &AngleField, band: (f64, f64), tol: f64) -> MaxPrincipleReport {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_index, mut max_index) = (0, 0);
    for (i, &v) in phi.values.iter().enumerate() {
        if v < min {
            min = v;
            min_index = i;
        }
        if v > max {
            max = v;
            max_index = i;
        }
    }
    let pass = min >= band.0 - tol && max <= band.1 + tol;
    MaxPrincipleReport {
        pass,
        min,
        min_index,
        max,
        max_index,
    }
}
