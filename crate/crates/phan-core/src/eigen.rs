//! Threshold eigenvalue and linear stability.
//!
//! `lambda1` is the root of `x tan(h x d) = h / L_H` in `(0, pi/(2hd))`;
//! it equals 1 exactly at the critical thickness and decreases with `d`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::calculus::LineOperators;
use crate::equilibrium::bvp_residual;
use crate::error::{PhanError, Result};
use crate::field::Profile;
use crate::grid::Grid;
use crate::linalg::Tridiag;
use crate::params::PhysParams;
use crate::spectral::ModalSolver;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda1: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseIteration {
    pub shift: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub mu1: Option<f64>,
    pub nu1: Option<f64>,
    /// Unit norm in `h^2 ||psi||^2 + L_H psi(0)^2`, nonnegative.
    pub eigenfunction: Profile,
    pub method: InverseIteration,
    pub tol: f64,
}

fn transcendental(params: &PhysParams, x: f64) -> f64 {
    x * (params.h * x * params.d).tan() - params.h / params.l_h
}

pub fn solve_lambda1(params: &PhysParams) -> Result<EigenResult> {
    let right = FRAC_PI_2 / (params.h * params.d);
    let eps_b = 1e-9 * right;
    let bracket = (eps_b, right - eps_b);
    let (mut lo, mut hi) = bracket;
    if !(transcendental(params, lo) < 0.0 && transcendental(params, hi) > 0.0) {
        return Err(PhanError::BracketFailure { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if transcendental(params, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut x = 0.5 * (lo + hi);
    let theta = params.h * x * params.d;
    let slope = theta.tan() + x * params.h * params.d / (theta.cos() * theta.cos());
    let newton = x - transcendental(params, x) / slope;
    if newton > bracket.0 && newton < bracket.1 {
        x = newton;
    }
    // the last few ulps are decided by the evaluated residual itself
    let mut best = (transcendental(params, x).abs(), x);
    let mut probe = x;
    for _ in 0..4 {
        probe = next_down(probe);
        best = best.min_by_residual(params, probe);
    }
    probe = x;
    for _ in 0..4 {
        probe = next_up(probe);
        best = best.min_by_residual(params, probe);
    }
    Ok(EigenResult {
        lambda1: best.1,
        residual: best.0,
        bracket,
        iterations,
    })
}

trait ResidualMin {
    fn min_by_residual(self, params: &PhysParams, x: f64) -> Self;
}

impl ResidualMin for (f64, f64) {
    fn min_by_residual(self, params: &PhysParams, x: f64) -> Self {
        let r = transcendental(params, x).abs();
        if r < self.0 {
            (r, x)
        } else {
            self
        }
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

pub fn lambda1_curve(params_base: &PhysParams, d_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    d_values
        .iter()
        .map(|&d| {
            let p = params_base.with_d(d)?;
            Ok((d, solve_lambda1(&p)?.lambda1))
        })
        .collect()
}

/// `int phi'^2 / (h^2 int phi^2 + L_H phi(0)^2)` with the energy quadrature.
pub fn rayleigh_quotient(phi: &Profile, params: &PhysParams) -> Result<f64> {
    let n = phi.n_normal();
    let dz = phi.dz();
    let v = &phi.values;
    let num: f64 = (0..n).map(|k| (v[k + 1] - v[k]).powi(2) / dz).sum();
    let l2: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 * dz } else { dz };
            w * v[k] * v[k]
        })
        .sum();
    let den = params.h * params.h * l2 + params.l_h * v[0] * v[0];
    if den == 0.0 {
        return Err(PhanError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Smallest eigenpair of `A x = mu B x` with `A` symmetric tridiagonal and
/// `B` positive diagonal, by shifted inverse iteration. The shift starts at
/// `shift0` and is pushed down until `A - shift B` is positive definite.
fn smallest_eigenpair(
    a: &Tridiag,
    b: &[f64],
    shift0: f64,
) -> Result<(f64, Vec<f64>, InverseIteration)> {
    let mut shift = shift0;
    while a.plus_diag(-shift, b).negative_count() > 0 {
        shift = 2.0 * shift - 1.0;
    }
    let lu = a.plus_diag(-shift, b).factor()?;
    let n = b.len();
    let b_norm = |x: &[f64]| x.iter().zip(b).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    let mut x = vec![1.0; n];
    let s = b_norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut mu = f64::INFINITY;
    for it in 1..=tol::EIGEN_CAP {
        let mut y: Vec<f64> = x.iter().zip(b).map(|(v, w)| v * w).collect();
        lu.solve_in_place(&mut y);
        let s = b_norm(&y);
        y.iter_mut().for_each(|v| *v /= s);
        let ay = a.matvec(&y);
        let next: f64 = ay.iter().zip(&y).map(|(p, q)| p * q).sum();
        let diff: Vec<f64> = y.iter().zip(&x).map(|(p, q)| p - q).collect();
        let moved = b_norm(&diff);
        x = y;
        let settled = (next - mu).abs() <= tol::EIGEN_TOL * next.abs().max(1.0);
        mu = next;
        if settled && moved < 1e-6 {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok((
                mu,
                x,
                InverseIteration {
                    shift,
                    iterations: it,
                },
            ));
        }
    }
    Err(PhanError::NoConvergence {
        iterations: tol::EIGEN_CAP,
    })
}

fn default_shift(params: &PhysParams) -> f64 {
    -10.0 * (params.h * params.h + params.l_h / params.d)
}

fn eigenfunction_profile(grid: &Grid, ops: &LineOperators, x: &[f64]) -> Profile {
    let norm: f64 = x
        .iter()
        .zip(&ops.mass)
        .map(|(v, m)| m * v * v)
        .sum::<f64>()
        .sqrt();
    let mut values: Vec<f64> = x.iter().map(|v| v / norm).collect();
    values.push(0.0);
    Profile { d: grid.d, values }
}

fn check_line(params: &PhysParams, grid: &Grid) -> Result<()> {
    if grid.dim != 1 || grid.d != params.d {
        return Err(PhanError::GridMismatch(
            "stability problems live on the 1D grid of the film".into(),
        ));
    }
    Ok(())
}

/// Smallest eigenvalue of `-d33 - h^2` with `psi(d) = 0` and
/// `psi'(0) = -L_H psi(0)`, in the plain `L2` inner product.
pub fn linearized_spectrum_at_zero(params: &PhysParams, grid: &Grid) -> Result<StabilityResult> {
    check_line(params, grid)?;
    let ops = LineOperators::new(params, grid);
    let a = ops.stiffness.plus_diag(-1.0, &ops.mass);
    let (nu, x, method) = smallest_eigenpair(&a, &ops.weights, default_shift(params))?;
    Ok(StabilityResult {
        mu1: None,
        nu1: Some(nu),
        eigenfunction: eigenfunction_profile(grid, &ops, &x),
        method,
        tol: tol::EIGEN_TOL,
    })
}

pub fn principal_eigenvalue_mu1(
    phi_eq: &Profile,
    params: &PhysParams,
    grid: &Grid,
) -> Result<StabilityResult> {
    principal_eigenvalue_mu1_with_tol(phi_eq, params, grid, tol::TOL_EQ)
}

/// Principal eigenvalue of the second variation at `phi_eq`, in the metric
/// `h^2 ||psi||^2 + L_H psi(0)^2`.
pub fn principal_eigenvalue_mu1_with_tol(
    phi_eq: &Profile,
    params: &PhysParams,
    grid: &Grid,
    tol_eq: f64,
) -> Result<StabilityResult> {
    check_line(params, grid)?;
    if phi_eq.n_normal() != grid.n_normal || phi_eq.d != grid.d {
        return Err(PhanError::GridMismatch(
            "equilibrium profile and grid differ".into(),
        ));
    }
    let residual = bvp_residual(phi_eq, params);
    if !(residual < tol_eq) {
        return Err(PhanError::ResidualTooLarge {
            residual,
            tol: tol_eq,
        });
    }
    let ops = LineOperators::new(params, grid);
    let cos2: Vec<f64> = (0..grid.n_normal)
        .map(|k| (2.0 * phi_eq.values[k]).cos())
        .collect();
    let weighted: Vec<f64> = cos2.iter().zip(&ops.mass).map(|(c, m)| c * m).collect();
    let a = ops.stiffness.plus_diag(-1.0, &weighted);
    let (mu, x, method) = smallest_eigenpair(&a, &ops.mass, default_shift(params))?;
    Ok(StabilityResult {
        mu1: Some(mu),
        nu1: None,
        eigenfunction: eigenfunction_profile(grid, &ops, &x),
        method,
        tol: tol::EIGEN_TOL,
    })
}

/// Infimum of the discrete Rayleigh quotient over a slab grid, by inverse
/// iteration on the full quadratic form (all tangential modes coupled
/// through the Fourier solve).
pub fn slab_rayleigh_infimum(params: &PhysParams, grid: &Grid) -> Result<f64> {
    if grid.d != params.d {
        return Err(PhanError::GridMismatch(
            "grid thickness differs from d".into(),
        ));
    }
    let line = grid.with_dim(1, 4)?;
    let ops = LineOperators::new(params, &line);
    let n = grid.n_normal;
    let mut shift = default_shift(params);
    while ops.stiffness.plus_diag(-shift, &ops.mass).negative_count() > 0 {
        shift = 2.0 * shift - 1.0;
    }
    let solver = ModalSolver::new(grid, n, |sigma| {
        let mut t = ops.stiffness.plus_diag(sigma, &ops.weights);
        t.diag
            .iter_mut()
            .zip(&ops.mass)
            .for_each(|(a, m)| *a -= shift * m);
        t
    })?;
    let cols = grid.columns();
    let mass = |x: &[f64]| -> Vec<f64> { (0..cols * n).map(|i| ops.mass[i % n] * x[i]).collect() };
    let b_dot = |x: &[f64], y: &[f64]| -> f64 { mass(x).iter().zip(y).map(|(p, q)| p * q).sum() };
    // generic start with every tangential mode present
    let mut x: Vec<f64> = (0..cols * n)
        .map(|i| {
            let (col, k) = (i / n, i % n);
            (1.0 + 0.5 * ((col * 7 + 3) % 5) as f64) * (1.0 - k as f64 / n as f64)
        })
        .collect();
    let mut rq = f64::INFINITY;
    for _ in 0..tol::EIGEN_CAP {
        let y = solver.solve(&mass(&x));
        let s = b_dot(&y, &y).sqrt();
        x = y.iter().map(|v| v / s).collect();
        let mut padded = Vec::with_capacity(cols * (n + 1));
        for col in 0..cols {
            padded.extend_from_slice(&x[col * n..(col + 1) * n]);
            padded.push(0.0);
        }
        let next = crate::calculus::gradient_energy(grid, &padded) / grid.column_area();
        if (next - rq).abs() <= tol::EIGEN_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        rq = next;
    }
    Err(PhanError::NoConvergence {
        iterations: tol::EIGEN_CAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn unit(d: f64) -> PhysParams {
        validate_params(1.0, 1.0, d).unwrap()
    }

    #[test]
    fn threshold_root_is_one() {
        let r = solve_lambda1(&unit(FRAC_PI_4)).unwrap();
        assert!((r.lambda1 - 1.0).abs() < 1e-14);
        assert!(r.residual < 1e-12);
        assert!(r.bracket.0 < r.lambda1 && r.lambda1 < r.bracket.1);
    }

    #[test]
    fn root_at_half_pi_thickness() {
        // root of x tan(pi x / 2) = 1, 30-digit reference value
        let r = solve_lambda1(&unit(FRAC_PI_2)).unwrap();
        assert!(
            (r.lambda1 - 0.638_322_262_334_294_6).abs() < 1e-12,
            "{}",
            r.lambda1
        );
    }

    #[test]
    fn thin_film_root_exceeds_one() {
        assert!(solve_lambda1(&unit(FRAC_PI_8)).unwrap().lambda1 > 1.0);
    }

    #[test]
    fn curve_decreases_and_handles_edge_cases() {
        let base = unit(1.0);
        let c = lambda1_curve(&base, &[0.5, FRAC_PI_4, 1.5]).unwrap();
        assert!(c[0].1 > c[1].1 && c[1].1 > c[2].1);
        assert!((c[1].1 - 1.0).abs() < 1e-14);
        assert!(lambda1_curve(&base, &[]).unwrap().is_empty());
        let single = lambda1_curve(&base, &[0.9]).unwrap();
        assert_eq!(single[0].1, solve_lambda1(&unit(0.9)).unwrap().lambda1);
    }

    #[test]
    fn quotient_of_linear_profile() {
        let p = unit(1.0);
        let q = rayleigh_quotient(&Profile::from_fn(1.0, 1000, |x| 1.0 - x), &p).unwrap();
        assert!((q - 0.75).abs() < 1e-6);
        let q2 = rayleigh_quotient(&Profile::from_fn(1.0, 1000, |x| -3.0 * (1.0 - x)), &p).unwrap();
        assert!((q - q2).abs() < 1e-14);
        assert_eq!(
            rayleigh_quotient(&Profile::zeros(1.0, 10), &p),
            Err(PhanError::ZeroDenominator)
        );
    }

    #[test]
    fn quotient_of_principal_eigenfunction() {
        let d = 1.1;
        let (h, l) = (1.0, 1.0);
        let p = unit(d);
        let lam = solve_lambda1(&p).unwrap().lambda1;
        let err = |n: usize| {
            let psi = Profile::from_fn(d, n, |x| {
                -l * lam * (h * lam * x).sin() + h * (h * lam * x).cos()
            });
            (rayleigh_quotient(&psi, &p).unwrap() - lam * lam).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 1e-4);
        assert!((e1 / e2 - 4.0).abs() < 0.2);
    }

    #[test]
    fn zero_state_spectrum_changes_sign_at_threshold() {
        for (d, sign) in [(0.5, 1.0), (1.2, -1.0)] {
            let p = unit(d);
            let g = Grid::line(d, 256).unwrap();
            let nu = linearized_spectrum_at_zero(&p, &g).unwrap().nu1.unwrap();
            assert_eq!(nu.signum(), sign);
        }
        let p = unit(FRAC_PI_4);
        let g = Grid::line(FRAC_PI_4, 4096).unwrap();
        let nu = linearized_spectrum_at_zero(&p, &g).unwrap().nu1.unwrap();
        assert!(nu.abs() < 1e-6, "{nu}");
    }

    #[test]
    fn zero_state_decay_rate_matches_continuous_eigenvalue() {
        // continuous nu1 = k^2 - h^2 with tan(k d) = k / L_H
        // 30-digit root of tan(k / 2) = k
        let d = 0.5;
        let k = 2.331_122_370_414_422_6_f64;
        let p = unit(d);
        let nu = linearized_spectrum_at_zero(&p, &Grid::line(d, 512).unwrap())
            .unwrap()
            .nu1
            .unwrap();
        assert!((nu - (k * k - 1.0)).abs() < 1e-4, "{nu} vs {}", k * k - 1.0);
    }

    #[test]
    fn mu1_of_zero_state() {
        let p = unit(0.5);
        let g = Grid::line(0.5, 256).unwrap();
        let s = principal_eigenvalue_mu1(&Profile::zeros(0.5, 256), &p, &g).unwrap();
        let mu = s.mu1.unwrap();
        let lam = solve_lambda1(&p).unwrap().lambda1;
        assert!(mu > 0.0);
        assert!((mu - (lam * lam - 1.0)).abs() < 1e-4);
        assert!(s.eigenfunction.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mu1_rejects_non_equilibria() {
        let p = unit(1.0);
        let g = Grid::line(1.0, 32).unwrap();
        let phi = Profile::from_fn(1.0, 32, |x| 0.5 * (1.0 - x));
        assert!(matches!(
            principal_eigenvalue_mu1(&phi, &p, &g),
            Err(PhanError::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn slab_infimum_reduces_to_line() {
        let p = unit(1.0);
        let g2 = Grid::new(1.0, 2, 8, 64).unwrap();
        let slab = slab_rayleigh_infimum(&p, &g2).unwrap();
        let lam = solve_lambda1(&p).unwrap().lambda1;
        assert!((slab - lam * lam).abs() < 1e-3, "{slab} vs {}", lam * lam);
    }
}
