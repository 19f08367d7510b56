//! Small banded solvers: tridiagonal elimination and banded LU.
//! The matrices are real; right-hand sides may be complex.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Div, Mul, Sub};

use crate::error::{Error, Result};

const PIVOT_FLOOR: f64 = 1e-300;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place.
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting.
pub fn solve_tridiagonal<T>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [T]) -> Result<()>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T>,
{
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    check_pivot(0, beta)?;
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        check_pivot(i, beta)?;
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - rhs[i + 1] * c[i];
    }
    Ok(())
}

fn check_pivot(row: usize, pivot: f64) -> Result<()> {
    if !pivot.is_finite() || pivot.abs() < PIVOT_FLOOR {
        return Err(Error::SingularSystem { row, pivot });
    }
    Ok(())
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by
/// rows as `band[i][j - i + kl]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix { n, kl, ku, band: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    /// Adds `v` to `A[i][j]`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.band[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.band[s])
    }

    /// LU factorization without pivoting; intended for diagonally dominant
    /// matrices. Fill-in stays inside the band.
    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            check_pivot(k, pivot)?;
            for i in k + 1..(k + self.kl + 1).min(n) {
                let si = self.slot(i, k).unwrap_or_else(|| unreachable!());
                let l = self.band[si] / pivot;
                self.band[si] = l;
                for j in k + 1..(k + self.ku + 1).min(n) {
                    let ukj = self.get(k, j);
                    if let Some(s) = self.slot(i, j) {
                        self.band[s] -= l * ukj;
                    }
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve<T>(&self, rhs: &mut [T])
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T>,
    {
        let m = &self.m;
        let n = m.n;
        for i in 0..n {
            let mut s = rhs[i];
            for k in i.saturating_sub(m.kl)..i {
                s = s - rhs[k] * m.get(i, k);
            }
            rhs[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..(i + m.ku + 1).min(n) {
                s = s - rhs[k] * m.get(i, k);
            }
            rhs[i] = s / m.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn tridiagonal_solves() {
        let lower = [0.0, 1.0, 1.0, 1.0];
        let diag = [-2.0, -2.0, -2.0, -2.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_tridiagonal_reports() {
        let mut b = [1.0, 1.0];
        let r = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut b);
        assert!(matches!(r, Err(Error::SingularSystem { row: 0, .. })));
    }

    #[test]
    fn band_lu_pentadiagonal() {
        let n = 7;
        let mut a = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            a.add(i, i, 6.0);
            if i >= 1 {
                a.add(i, i - 1, -2.0);
                a.add(i - 1, i, -1.5);
            }
            if i >= 2 {
                a.add(i, i - 2, 1.0);
                a.add(i - 2, i, 0.5);
            }
        }
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|j| x[j] * a.get(i, j)).sum())
            .collect();
        a.lu().unwrap().solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}
