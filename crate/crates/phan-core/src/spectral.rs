//! Implicit solves on the slab: Fourier diagonalisation along the periodic
//! tangential axes, then one tridiagonal system along `x3` per mode.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{PhanError, Result};
use crate::grid::Grid;
use crate::linalg::{Tridiag, TridiagLu};

#[derive(Clone)]
pub struct TangentialFft {
    n: [usize; 2],
    spacing: [f64; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl TangentialFft {
    pub fn new(grid: &Grid) -> TangentialFft {
        let mut planner = FftPlanner::new();
        let n = [grid.n_tan(0), grid.n_tan(1)];
        TangentialFft {
            n,
            spacing: [grid.spacing[0], grid.spacing[1]],
            fwd: [
                planner.plan_fft_forward(n[0]),
                planner.plan_fft_forward(n[1]),
            ],
            inv: [
                planner.plan_fft_inverse(n[0]),
                planner.plan_fft_inverse(n[1]),
            ],
        }
    }

    pub fn modes(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Eigenvalue of minus the periodic second difference for mode `m`
    /// (same index layout as columns).
    pub fn symbol(&self, m: usize) -> f64 {
        let (m1, m2) = (m / self.n[1], m % self.n[1]);
        let part = |a: usize, mi: usize| {
            let s = (std::f64::consts::PI * mi as f64 / self.n[a] as f64).sin();
            4.0 * s * s / (self.spacing[a] * self.spacing[a])
        };
        part(0, m1) + part(1, m2)
    }

    fn transform(&self, data: &mut [Complex64], nk: usize, plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [n1, n2] = self.n;
        if n2 > 1 {
            let mut line = vec![Complex64::default(); n2];
            for i1 in 0..n1 {
                for k in 0..nk {
                    for i2 in 0..n2 {
                        line[i2] = data[(i1 * n2 + i2) * nk + k];
                    }
                    plans[1].process(&mut line);
                    for i2 in 0..n2 {
                        data[(i1 * n2 + i2) * nk + k] = line[i2];
                    }
                }
            }
        }
        if n1 > 1 {
            let mut line = vec![Complex64::default(); n1];
            for i2 in 0..n2 {
                for k in 0..nk {
                    for i1 in 0..n1 {
                        line[i1] = data[(i1 * n2 + i2) * nk + k];
                    }
                    plans[0].process(&mut line);
                    for i1 in 0..n1 {
                        data[(i1 * n2 + i2) * nk + k] = line[i1];
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &[f64], nk: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut out, nk, &self.fwd);
        out
    }

    pub fn inverse(&self, mut spec: Vec<Complex64>, nk: usize) -> Vec<f64> {
        self.transform(&mut spec, nk, &self.inv);
        let scale = 1.0 / self.modes() as f64;
        spec.iter().map(|z| z.re * scale).collect()
    }
}

/// Pre-factored solver for a separable operator whose restriction to the
/// tangential mode with symbol `sigma` is the tridiagonal `build(sigma)`.
#[derive(Clone)]
pub struct ModalSolver {
    fft: TangentialFft,
    nk: usize,
    lus: Vec<TridiagLu>,
    pinned_zero_mode: bool,
}

impl ModalSolver {
    pub fn new(grid: &Grid, nk: usize, build: impl Fn(f64) -> Tridiag) -> Result<ModalSolver> {
        Self::build(grid, nk, build, false)
    }

    /// For operators whose zero mode is singular with constant null vector
    /// (the Neumann Laplacian): that mode is solved with its first unknown
    /// pinned to zero, which is exact for compatible right-hand sides.
    pub fn new_pinned(
        grid: &Grid,
        nk: usize,
        build: impl Fn(f64) -> Tridiag,
    ) -> Result<ModalSolver> {
        Self::build(grid, nk, build, true)
    }

    fn build(
        grid: &Grid,
        nk: usize,
        build: impl Fn(f64) -> Tridiag,
        pinned: bool,
    ) -> Result<ModalSolver> {
        let fft = TangentialFft::new(grid);
        let mut lus = Vec::with_capacity(fft.modes());
        for m in 0..fft.modes() {
            let mut t = build(fft.symbol(m));
            if pinned && m == 0 {
                t.diag[0] = 1.0;
                t.sup[0] = 0.0;
                if t.len() > 1 {
                    t.sub[1] = 0.0;
                }
            }
            lus.push(
                t.factor()
                    .map_err(|_| PhanError::LinearSolveFailure("modal"))?,
            );
        }
        Ok(ModalSolver {
            fft,
            nk,
            lus,
            pinned_zero_mode: pinned,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let nk = self.nk;
        if self.fft.modes() == 1 {
            let mut x = rhs.to_vec();
            if self.pinned_zero_mode {
                x[0] = 0.0;
            }
            self.lus[0].solve_in_place(&mut x);
            return x;
        }
        let mut spec = self.fft.forward(rhs, nk);
        for (m, lu) in self.lus.iter().enumerate() {
            let line = &mut spec[m * nk..(m + 1) * nk];
            if self.pinned_zero_mode && m == 0 {
                line[0] = Complex64::default();
            }
            lu.solve_complex_in_place(line);
        }
        self.fft.inverse(spec, nk)
    }
}
