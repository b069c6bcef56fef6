//! Periodic fields on the flat torus `Cᵐ/(Z + iZ)ᵐ`, sampled on a uniform
//! grid with 4th-order central differences and trapezoidal quadrature.
//!
//! Real axis `2a` is `x^a = Re z^a` and axis `2a + 1` is `y^a = Im z^a`.
//! Axes outside the active set have extent 1: fields are constant along them
//! and their derivatives vanish identically.

mod field;
mod form_field;
mod snapshot;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use field::{min_eigenvalue, MetricField, ScalarField};
pub use form_field::{exterior_d, integrate_inner, lattice_del_dagger, pointwise_del_dagger, Differential, FormField};
pub use snapshot::Snapshot;

/// Minimum points per active axis: the widest stencil reaches ±2 and
/// compositions must not alias onto themselves.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, PartialEq, Eq)]
pub struct TorusLattice {
    m: usize,
    n: usize,
    active: Vec<bool>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl TorusLattice {
    pub fn new(m: usize, n: usize, active: Vec<bool>) -> Result<Arc<Self>> {
        crate::forms::Dimension::new(m)?;
        if n < MIN_POINTS || n % 2 != 0 {
            return Err(Error::LatticeSize(n));
        }
        if active.len() != 2 * m {
            return Err(Error::Config(format!("reduction lists {} axes, expected {}", active.len(), 2 * m)));
        }
        let shape: Vec<usize> = active.iter().map(|&a| if a { n } else { 1 }).collect();
        let mut strides = vec![1usize; 2 * m];
        for r in (0..2 * m - 1).rev() {
            strides[r] = strides[r + 1] * shape[r + 1];
        }
        let len = shape.iter().product();
        Ok(Arc::new(Self { m, n, active, shape, strides, len }))
    }

    pub fn full(m: usize, n: usize) -> Result<Arc<Self>> {
        Self::new(m, n, vec![true; 2 * m])
    }

    /// Fields depend only on the listed real axes.
    pub fn reduced(m: usize, n: usize, axes: &[usize]) -> Result<Arc<Self>> {
        let mut active = vec![false; 2 * m];
        for &a in axes {
            if a >= 2 * m {
                return Err(Error::Config(format!("axis {a} out of range for m = {m}")));
            }
            active[a] = true;
        }
        Self::new(m, n, active)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.active[axis]
    }

    /// Real coordinates of a site; inactive axes sit at 0.
    pub fn coords(&self, site: usize) -> Vec<f64> {
        (0..2 * self.m).map(|r| ((site / self.strides[r]) % self.shape[r]) as f64 * self.h()).collect()
    }

    fn shift(&self, site: usize, axis: usize, k: isize) -> usize {
        let n = self.n as isize;
        let i = ((site / self.strides[axis]) % self.n) as isize;
        let j = (i + k).rem_euclid(n) as usize;
        site - i as usize * self.strides[axis] + j * self.strides[axis]
    }

    /// 4th-order `∂/∂x_axis`.
    pub fn diff(&self, v: &[Complex64], axis: usize) -> Vec<Complex64> {
        if !self.active[axis] {
            return vec![Complex64::default(); v.len()];
        }
        let c = 1.0 / (12.0 * self.h());
        (0..self.len)
            .into_par_iter()
            .map(|s| {
                let f = |k| v[self.shift(s, axis, k)];
                ((f(-2) - f(2)) + (f(1) - f(-1)) * 8.0) * c
            })
            .collect()
    }

    /// 4th-order `∂²/∂x_axis²`.
    pub fn diff2(&self, v: &[Complex64], axis: usize) -> Vec<Complex64> {
        if !self.active[axis] {
            return vec![Complex64::default(); v.len()];
        }
        let c = 1.0 / (12.0 * self.h() * self.h());
        (0..self.len)
            .into_par_iter()
            .map(|s| {
                let f = |k| v[self.shift(s, axis, k)];
                ((f(1) + f(-1)) * 16.0 - (f(2) + f(-2)) - v[s] * 30.0) * c
            })
            .collect()
    }

    /// Short description of the active axes, e.g. `x1,y1,x2`.
    pub fn reduction_label(&self) -> String {
        let names: Vec<String> =
            (0..2 * self.m).filter(|&r| self.active[r]).map(|r| format!("{}{}", if r % 2 == 0 { 'x' } else { 'y' }, r / 2 + 1)).collect();
        names.join(",")
    }

    pub fn parse_reduction(m: usize, label: &str) -> Result<Vec<usize>> {
        label
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let (kind, idx) = s.split_at(1);
                let a: usize = idx.parse().map_err(|_| Error::Config(format!("bad axis '{s}'")))?;
                if a == 0 || a > m {
                    return Err(Error::Config(format!("axis '{s}' out of range for m = {m}")));
                }
                match kind {
                    "x" => Ok(2 * (a - 1)),
                    "y" => Ok(2 * (a - 1) + 1),
                    _ => Err(Error::Config(format!("bad axis '{s}'"))),
                }
            })
            .collect()
    }
}

/// Pairwise summation: deterministic and accurate for large site counts.
pub(crate) fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusLattice::full(2, 6).is_err());
        assert!(TorusLattice::full(2, 9).is_err());
        assert!(TorusLattice::full(2, 8).is_ok());
    }

    #[test]
    fn indexing_round_trips() {
        let lat = TorusLattice::reduced(2, 8, &[0, 3]).unwrap();
        assert_eq!(lat.len(), 64);
        for s in 0..lat.len() {
            let x = lat.coords(s);
            assert_eq!(x[1], 0.0);
            assert_eq!(x[2], 0.0);
            assert_eq!(lat.shift(lat.shift(s, 3, 5), 3, -5), s);
        }
        assert_eq!(lat.reduction_label(), "x1,y2");
        assert_eq!(TorusLattice::parse_reduction(2, "x1,y2").unwrap(), vec![0, 3]);
    }

    #[test]
    fn constant_differences_vanish_exactly() {
        let lat = TorusLattice::full(1, 8).unwrap();
        let v = vec![c(0.37); lat.len()];
        for axis in 0..2 {
            assert!(lat.diff(&v, axis).iter().all(|z| *z == Complex64::default()));
            assert!(lat.diff2(&v, axis).iter().all(|z| *z == Complex64::default()));
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let lat = TorusLattice::reduced(1, n, &[0]).unwrap();
            let v: Vec<_> = (0..lat.len()).map(|s| c((2.0 * PI * lat.coords(s)[0]).sin())).collect();
            let d = lat.diff(&v, 0);
            let d2 = lat.diff2(&v, 0);
            (0..lat.len())
                .map(|s| {
                    let x = 2.0 * PI * lat.coords(s)[0];
                    (d[s].re - 2.0 * PI * x.cos()).abs().max((d2[s].re + 4.0 * PI * PI * x.sin()).abs())
                })
                .fold(0.0, f64::max)
        };
        let order = (err(16) / err(32)).log2();
        assert!((3.5..4.5).contains(&order), "order {order}");
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<_> = (0..1000).map(|i| c(i as f64)).collect();
        assert_eq!(pairwise_sum(&v), c(499500.0));
    }
}
