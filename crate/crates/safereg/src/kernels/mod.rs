//! Backstepping kernels for the controller and the observer.

pub mod bessel;
mod controller;
pub mod fh;
mod observer;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

pub use controller::{solve_controller_kernels, KernelSet};
pub use fh::{eval_fh, pi_func, FhParams};
pub use observer::{solve_observer_kernels, HurwitzPolicy, ObsKernelSet, ObserverStructure, Spectra};

/// Uniform grid of `n` nodes on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub n: usize,
    pub h: f64,
}

impl KernelGrid {
    pub fn new(n: usize) -> Self {
        KernelGrid { n, h: 1.0 / (n - 1) as f64 }
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    fn index_of(&self, x: f64) -> usize {
        (x / self.h).round() as usize
    }

    /// Node pairs nearest to `(x, y)` with `x, y` in `{0.1, ..., 0.9}` and `y < x`.
    pub fn lattice_lower(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 1..10 {
            for b in 1..a {
                out.push((self.index_of(a as f64 / 10.0), self.index_of(b as f64 / 10.0)));
            }
        }
        out
    }

    /// Transposed lattice, `x < y`.
    pub fn lattice_upper(&self) -> Vec<(usize, usize)> {
        self.lattice_lower().into_iter().map(|(i, j)| (j, i)).collect()
    }

    pub fn ddx(&self, m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        (m[(i + 1, j)] - m[(i - 1, j)]) / (2.0 * self.h)
    }

    pub fn ddy(&self, m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        (m[(i, j + 1)] - m[(i, j - 1)]) / (2.0 * self.h)
    }
}

/// Per-equation sup of absolute residuals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    pub per_equation: Vec<f64>,
}

impl ResidualReport {
    fn push(&mut self, r: Vec<f64>) {
        if self.per_equation.is_empty() {
            self.per_equation = vec![0.0; r.len()];
        }
        for (m, v) in self.per_equation.iter_mut().zip(r) {
            *m = m.max(v);
        }
    }

    pub fn max(&self) -> f64 {
        self.per_equation.iter().cloned().fold(0.0, f64::max)
    }
}

/// Observed convergence orders `log2(r_k / r_{k+1})` for grids that double.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `G^T_row P_d`: a length-`m_d` row mapped to length `n_v`.
pub(crate) fn acute(row: &DVector<f64>, p_d: &DMatrix<f64>) -> DVector<f64> {
    p_d.transpose() * row
}

/// Linear interpolation between rows of `m` sampled on a uniform `[0, 1]` grid.
pub fn interp_rows(m: &DMatrix<f64>, x: f64) -> DVector<f64> {
    let n = m.nrows() - 1;
    let s = x.clamp(0.0, 1.0) * n as f64;
    let i = (s.floor() as usize).min(n - 1);
    let fr = s - i as f64;
    (m.row(i) * (1.0 - fr) + m.row(i + 1) * fr).transpose()
}

/// Bilinear interpolation of a kernel stored on `{y <= x}`; corners above the
/// diagonal are replaced by the diagonal value in their row.
pub fn bilinear_lower(m: &DMatrix<f64>, x: f64, y: f64) -> f64 {
    let n = m.nrows() - 1;
    let sx = x.clamp(0.0, 1.0) * n as f64;
    let sy = y.clamp(0.0, 1.0) * n as f64;
    let i = (sx.floor() as usize).min(n - 1);
    let j = (sy.floor() as usize).min(n - 1);
    let (fx, fy) = (sx - i as f64, sy - j as f64);
    let at = |a: usize, b: usize| m[(a, b.min(a))];
    at(i, j) * (1.0 - fx) * (1.0 - fy) + at(i + 1, j) * fx * (1.0 - fy) + at(i, j + 1) * (1.0 - fx) * fy + at(i + 1, j + 1) * fx * fy
}

/// Same for kernels stored on `{x <= y}`.
pub fn bilinear_upper(m: &DMatrix<f64>, x: f64, y: f64) -> f64 {
    let n = m.nrows() - 1;
    let sx = x.clamp(0.0, 1.0) * n as f64;
    let sy = y.clamp(0.0, 1.0) * n as f64;
    let i = (sx.floor() as usize).min(n - 1);
    let j = (sy.floor() as usize).min(n - 1);
    let (fx, fy) = (sx - i as f64, sy - j as f64);
    let at = |a: usize, b: usize| m[(a.min(b), b)];
    at(i, j) * (1.0 - fx) * (1.0 - fy) + at(i + 1, j) * fx * (1.0 - fy) + at(i, j + 1) * (1.0 - fx) * fy + at(i + 1, j + 1) * fx * fy
}

/// Evaluates `row(i)` for `i in 0..n` on scoped worker threads.
pub(crate) fn par_rows<T: Send>(n: usize, row: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(&row).collect();
    }
    let row = &row;
    let mut parts: Vec<(usize, Result<T>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..n).step_by(workers).map(|i| (i, row(i))).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("kernel worker panicked")).collect()
    });
    parts.sort_by_key(|(i, _)| *i);
    parts.into_iter().map(|(_, r)| r).collect()
}
