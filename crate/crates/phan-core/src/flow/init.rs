//! Initial data for flow runs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{AngleField, Profile, VelocityField};
use crate::grid::Grid;
use crate::params::PhysParams;

use super::FlowState;

/// `amplitude (d - x3) / d`: anchored tilt at the bottom, zero at the top.
pub fn ramp_profile(d: f64, n_normal: usize, amplitude: f64) -> Profile {
    Profile::from_fn(d, n_normal, |x| amplitude * (d - x) / d)
}

/// MAC velocity with `u_a = d3 psi_a` and `u3 = -sum_a da psi_a`, built
/// from differences of `psi(a, x1, x2, x3)` sampled at the `a`-face
/// positions on normal nodes. The result is discretely divergence-free
/// when every `psi_a` vanishes on both walls.
pub fn solenoidal_from_streamfunction(
    grid: &Grid,
    psi: impl Fn(usize, f64, f64, f64) -> f64,
) -> VelocityField {
    let (n, nk) = (grid.n_normal, grid.nodes());
    let mut u = VelocityField::zeros(grid);
    for a in grid.active_tangential_axes() {
        let mut s = vec![0.0; grid.columns() * nk];
        for col in 0..grid.columns() {
            let mut x = grid.column_center(col);
            x[a] -= 0.5 * grid.spacing[a];
            for k in 0..nk {
                s[col * nk + k] = psi(a, x[0], x[1], grid.node_x3(k));
            }
        }
        for col in 0..grid.columns() {
            for j in 0..n {
                u.components[a][col * n + j] = (s[col * nk + j + 1] - s[col * nk + j]) / grid.dz();
            }
            let right = grid.shift(col, a, 1);
            for k in 1..n {
                u.components[2][col * nk + k] -=
                    (s[right * nk + k] - s[col * nk + k]) / grid.spacing[a];
            }
        }
    }
    u
}

/// Lowest Fourier mode of every active axis with random amplitude and
/// phase, scaled so the sup norm is at most one. Higher modes would make
/// the initial layer stiff on the time-step scale.
fn random_trig(rng: &mut ChaCha8Rng, axes: usize) -> impl Fn(f64, f64) -> f64 {
    let coef: Vec<(f64, f64)> = (0..axes)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = coef
        .iter()
        .map(|c| c.0.abs() + c.1.abs())
        .sum::<f64>()
        .max(1e-300);
    move |x1, x2| {
        coef.iter()
            .zip([x1, x2])
            .map(|(&(c, s), x)| c * (2.0 * PI * x).cos() + s * (2.0 * PI * x).sin())
            .sum::<f64>()
            / norm
    }
}

/// `phi0 = phi*(x3) + eps_phi r(x) b(x3)` and a solenoidal `u0` of size
/// about `eps_u`, with `b = sin^4(pi x3 / d)`. The envelope vanishes to
/// fourth order at both walls, so `phi0` keeps the anchoring and Dirichlet
/// conditions of `phi*` to leading order and `u0` vanishes near the walls.
pub fn random_admissible_state(
    grid: &Grid,
    params: &PhysParams,
    base: &Profile,
    seed: u64,
    eps_phi: f64,
    eps_u: f64,
) -> Result<FlowState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = grid.dim - 1;
    let d = grid.d;
    let envelope = move |x3: f64| (PI * x3 / d).sin().powi(4);
    let r = random_trig(&mut rng, axes.max(1));
    let mut phi = AngleField::from_profile(grid, params.l_h, base)?;
    if axes > 0 {
        let bump = AngleField::from_fn(grid, params.l_h, |x1, x2, x3| {
            eps_phi * r(x1, x2) * envelope(x3)
        });
        phi.values
            .iter_mut()
            .zip(&bump.values)
            .for_each(|(p, b)| *p += b);
    } else {
        let bump = AngleField::from_fn(grid, params.l_h, |_, _, x3| eps_phi * envelope(x3));
        phi.values
            .iter_mut()
            .zip(&bump.values)
            .for_each(|(p, b)| *p += b);
    }
    let nk = grid.nodes();
    for col in 0..grid.columns() {
        phi.values[col * nk + grid.n_normal] = 0.0;
    }
    let mut state = FlowState::at_rest(phi);
    if axes > 0 {
        let q: Vec<_> = (0..2).map(|_| random_trig(&mut rng, axes)).collect();
        state.u = solenoidal_from_streamfunction(grid, |a, x1, x2, x3| {
            eps_u * d * q[a](x1, x2) * envelope(x3)
        });
    }
    Ok(state)
}
