//! Tridiagonal systems (Thomas algorithm) and a Sturm count.

use rustfft::num_complex::Complex64;

use crate::error::{PhanError, Result};

/// `sub[i]` multiplies `x[i-1]` and `sup[i]` multiplies `x[i+1]` in row `i`;
/// `sub[0]` and `sup[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Tridiag {
        Tridiag {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `self + c * diag(m)`.
    pub fn plus_diag(&self, c: f64, m: &[f64]) -> Tridiag {
        let mut out = self.clone();
        out.diag.iter_mut().zip(m).for_each(|(a, b)| *a += c * b);
        out
    }

    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let mut piv = self.diag[i];
            if i > 0 {
                piv -= self.sub[i] * upper[i - 1];
            }
            let scale = self.diag[i].abs() + self.sub[i].abs() + self.sup[i].abs();
            if !(piv.abs() > 1e-14 * scale) || !piv.is_finite() {
                return Err(PhanError::SingularSystem { row: i, pivot: piv });
            }
            inv_pivot[i] = 1.0 / piv;
            upper[i] = if i + 1 < n {
                self.sup[i] * inv_pivot[i]
            } else {
                0.0
            };
        }
        Ok(TridiagLu {
            sub: self.sub.clone(),
            inv_pivot,
            upper,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }

    /// Number of eigenvalues of the symmetric matrix `self` strictly below 0,
    /// from the signs of the LDL^T pivots.
    pub fn negative_count(&self) -> usize {
        let mut count = 0;
        let mut prev = 1.0;
        for i in 0..self.len() {
            let mut piv = self.diag[i];
            if i > 0 {
                piv -= self.sub[i] * self.sup[i - 1] / prev;
            }
            if piv == 0.0 {
                piv = -f64::EPSILON * (self.diag[i].abs() + 1.0);
            }
            if piv < 0.0 {
                count += 1;
            }
            prev = piv;
        }
        count
    }
}

#[derive(Debug, Clone)]
pub struct TridiagLu {
    sub: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }

    pub fn solve_complex_in_place(&self, x: &mut [Complex64]) {
        let n = x.len();
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - x[i - 1] * self.sub[i]) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= x[i + 1] * self.upper[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> Tridiag {
        Tridiag {
            sub: vec![-1.0; n],
            diag: vec![2.0; n],
            sup: vec![-1.0; n],
        }
    }

    #[test]
    fn solves_against_dense_product() {
        let a = Tridiag {
            sub: vec![0.0, 1.0, -2.0, 0.5],
            diag: vec![4.0, 5.0, 6.0, 3.0],
            sup: vec![1.0, 0.3, 1.0, 0.0],
        };
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b = a.matvec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_solve_matches_real_parts() {
        let a = laplacian(6).plus_diag(0.5, &[1.0; 6]);
        let lu = a.factor().unwrap();
        let re = vec![1.0, 0.0, 2.0, -1.0, 0.5, 0.25];
        let im = vec![0.0, 3.0, -1.0, 1.0, 0.0, 2.0];
        let mut z: Vec<Complex64> = re
            .iter()
            .zip(&im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        lu.solve_complex_in_place(&mut z);
        let xr = a.solve(&re).unwrap();
        let xi = a.solve(&im).unwrap();
        for i in 0..6 {
            assert!((z[i].re - xr[i]).abs() < 1e-14 && (z[i].im - xi[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_reported() {
        let a = Tridiag {
            sub: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            sup: vec![1.0, 0.0],
        };
        assert!(matches!(
            a.factor(),
            Err(PhanError::SingularSystem { row: 1, .. })
        ));
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n + 1))
        let n = 10;
        let a = laplacian(n);
        for shift in [0.05, 0.5, 1.7, 3.9] {
            let expected = (1..=n)
                .filter(|&k| {
                    2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < shift
                })
                .count();
            assert_eq!(
                a.plus_diag(-shift, &vec![1.0; n]).negative_count(),
                expected
            );
        }
    }
}
