//! Grid functions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Real values on a [`Grid`]. Construction rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField { grid, values })
    }

    /// For results of operations on already validated fields.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x1, x2)` at the nodes. For disk grids the arguments are
    /// `(theta, r)`.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1() {
            let x1 = grid.x1(i1);
            for i2 in 0..grid.n2() {
                values.push(f(x1, grid.x2(i2)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.idx(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(format!(
                "grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::from_parts(self.grid, values)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Multiplies every row `x1 = const` pointwise by a profile in `x2`.
    pub fn mul_profile(&self, p: &[f64]) -> ScalarField {
        let n2 = self.grid.n2();
        debug_assert_eq!(p.len(), n2);
        let values = self.values.iter().enumerate().map(|(i, v)| v * p[i % n2]).collect();
        ScalarField::from_parts(self.grid, values)
    }

    /// Discrete `L^2` inner product with the grid quadrature.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let n2 = self.grid.n2();
        let mut acc = 0.0;
        for i2 in 0..n2 {
            let w = self.grid.weight(i2);
            let mut s = 0.0;
            for i1 in 0..self.grid.n1() {
                let k = i1 * n2 + i2;
                s += self.values[k] * other.values[k];
            }
            acc += w * s;
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Discrete `L^p` norm, `1 <= p < inf`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let n2 = self.grid.n2();
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            acc += self.grid.weight(k % n2) * libm::pow(v.abs(), p);
        }
        libm::pow(acc, 1.0 / p)
    }

    pub fn integral(&self) -> f64 {
        let n2 = self.grid.n2();
        self.values.iter().enumerate().map(|(k, v)| self.grid.weight(k % n2) * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn column(&self, i2: usize) -> Vec<f64> {
        (0..self.grid.n1()).map(|i1| self.get(i1, i2)).collect()
    }

    pub fn row(&self, i1: usize) -> &[f64] {
        let n2 = self.grid.n2();
        &self.values[i1 * n2..(i1 + 1) * n2]
    }
}

/// Two-component vector field on a channel (or torus) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelField {
    pub c1: ScalarField,
    pub c2: ScalarField,
}

impl ChannelField {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        c1.same_grid(&c2)?;
        Ok(ChannelField { c1, c2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        ChannelField { c1: ScalarField::zeros(grid), c2: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.c1.grid()
    }

    pub fn add(&self, o: &ChannelField) -> ChannelField {
        ChannelField { c1: self.c1.add(&o.c1), c2: self.c2.add(&o.c2) }
    }

    pub fn sub(&self, o: &ChannelField) -> ChannelField {
        ChannelField { c1: self.c1.sub(&o.c1), c2: self.c2.sub(&o.c2) }
    }

    pub fn scale(&self, s: f64) -> ChannelField {
        ChannelField { c1: self.c1.scale(s), c2: self.c2.scale(s) }
    }

    pub fn axpy(&mut self, s: f64, o: &ChannelField) {
        self.c1.axpy(s, &o.c1);
        self.c2.axpy(s, &o.c2);
    }

    pub fn dot(&self, o: &ChannelField) -> f64 {
        self.c1.dot(&o.c1) + self.c2.dot(&o.c2)
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.max_abs().max(self.c2.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.c1.check_finite()?;
        self.c2.check_finite()
    }

    /// Largest `|f2|` on the two walls.
    pub fn wall_normal(&self) -> f64 {
        let g = self.grid();
        let top = g.n2() - 1;
        (0..g.n1()).fold(0.0f64, |m, i1| {
            m.max(self.c2.get(i1, 0).abs()).max(self.c2.get(i1, top).abs())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn rejects_nan() {
        let g = Grid::channel(8, 9).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert_eq!(ScalarField::new(g, v), Err(Error::NonFinite { index: 5 }));
        assert!(ScalarField::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn norms_are_exact_for_low_modes() {
        let g = Grid::channel(16, 65).unwrap();
        let f = ScalarField::from_fn(g, |x1, _| libm::cos(x1)).unwrap();
        assert!((f.l2_norm() - libm::sqrt(2.0 * PI)).abs() < 1e-12);
        let one = ScalarField::from_fn(g, |_, _| 1.0).unwrap();
        assert!((one.lp_norm(3.0) - libm::pow(4.0 * PI, 1.0 / 3.0)).abs() < 1e-12);
    }
}
