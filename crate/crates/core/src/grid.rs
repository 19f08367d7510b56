//! Tensor grids. Index `(i1, i2)` is stored at `i1 * n2 + i2`, so the second
//! coordinate varies fastest.
//!
//! * `Channel`: `x1 = 2 pi i1 / n1` is periodic; `x2` runs over `n2` equally
//!   spaced nodes on `[lo, hi]`, endpoints included.
//! * `Torus`: both directions periodic with period `2 pi`.
//! * `Disk`: polar grid on the unit disk. The first coordinate is the angle
//!   `theta = 2 pi i1 / n1`; the second is the radius at cell centres
//!   `r = (i2 + 1/2) / n2`.

use alloc::format;
use core::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Channel { lo: f64, hi: f64 },
    Torus,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n1: usize,
    n2: usize,
    domain: Domain,
}

impl Grid {
    pub fn channel(n1: usize, n2: usize) -> Result<Self> {
        Self::channel_on(n1, n2, -1.0, 1.0)
    }

    pub fn channel_on(n1: usize, n2: usize, lo: f64, hi: f64) -> Result<Self> {
        check_periodic(n1, "n1")?;
        if n2 < 5 {
            return Err(Error::InvalidGrid(format!("channel needs n2 >= 5, got {n2}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("bad channel interval [{lo}, {hi}]")));
        }
        Ok(Grid { n1, n2, domain: Domain::Channel { lo, hi } })
    }

    pub fn torus(n1: usize, n2: usize) -> Result<Self> {
        check_periodic(n1, "n1")?;
        check_periodic(n2, "n2")?;
        Ok(Grid { n1, n2, domain: Domain::Torus })
    }

    pub fn disk(ntheta: usize, nr: usize) -> Result<Self> {
        check_periodic(ntheta, "ntheta")?;
        if nr < 2 {
            return Err(Error::InvalidGrid(format!("disk needs nr >= 2, got {nr}")));
        }
        Ok(Grid { n1: ntheta, n2: nr, domain: Domain::Disk })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_channel(&self) -> bool {
        matches!(self.domain, Domain::Channel { .. })
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    pub fn h1(&self) -> f64 {
        2.0 * PI / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        match self.domain {
            Domain::Channel { lo, hi } => (hi - lo) / (self.n2 - 1) as f64,
            Domain::Torus => 2.0 * PI / self.n2 as f64,
            Domain::Disk => 1.0 / self.n2 as f64,
        }
    }

    pub fn x1(&self, i1: usize) -> f64 {
        self.h1() * i1 as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        match self.domain {
            Domain::Channel { lo, hi } => {
                if i2 + 1 == self.n2 {
                    hi
                } else {
                    lo + self.h2() * i2 as f64
                }
            }
            Domain::Torus => self.h2() * i2 as f64,
            Domain::Disk => (i2 as f64 + 0.5) * self.h2(),
        }
    }

    /// Quadrature weight of the second coordinate: trapezoid on the channel,
    /// uniform on the torus and `r dr` on the disk.
    pub fn weight2(&self, i2: usize) -> f64 {
        let h = self.h2();
        match self.domain {
            Domain::Channel { .. } => {
                if i2 == 0 || i2 + 1 == self.n2 {
                    0.5 * h
                } else {
                    h
                }
            }
            Domain::Torus => h,
            Domain::Disk => self.x2(i2) * h,
        }
    }

    pub fn weight(&self, i2: usize) -> f64 {
        self.h1() * self.weight2(i2)
    }

    /// Total measure of the domain under the discrete quadrature.
    pub fn measure(&self) -> f64 {
        (0..self.n2).map(|j| self.weight(j)).sum::<f64>() * self.n1 as f64
    }

    /// Position of a node in the plane. Channel and torus nodes are returned
    /// as `(x1, x2)`; disk nodes in Cartesian coordinates.
    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        match self.domain {
            Domain::Disk => {
                let (th, r) = (self.x1(i1), self.x2(i2));
                [r * libm::cos(th), r * libm::sin(th)]
            }
            _ => [self.x1(i1), self.x2(i2)],
        }
    }
}

fn check_periodic(n: usize, name: &str) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "{name} must be even and >= 4, got {n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::channel(7, 17).is_err());
        assert!(Grid::channel(8, 3).is_err());
        assert!(Grid::torus(8, 6).is_ok());
        assert!(Grid::torus(8, 5).is_err());
        assert!(Grid::disk(16, 1).is_err());
    }

    #[test]
    fn quadrature_measures() {
        let g = Grid::channel(16, 33).unwrap();
        assert!((g.measure() - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.x2(0), -1.0);
        assert_eq!(g.x2(32), 1.0);
        let t = Grid::torus(8, 8).unwrap();
        assert!((t.measure() - 4.0 * PI * PI).abs() < 1e-12);
        let d = Grid::disk(8, 40).unwrap();
        assert!((d.measure() - PI).abs() < 1e-12);
    }
}
