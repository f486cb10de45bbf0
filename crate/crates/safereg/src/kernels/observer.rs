//! Observer kernels `K^{ij}` on `{0 <= x <= y <= 1}`, the rows `Kbar_1`, `Kbar_2`,
//! `Lambda`, `Lambda_1` and the output-injection gains.

use nalgebra::{DMatrix, DVector};

use super::fh::FhParams;
use super::{KernelGrid, ResidualReport};
use crate::error::{Error, Result};
use crate::exo_model::ExoModel;
use crate::linalg::{self, C64};
use crate::plant::Plant;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 500;

/// What to do when a closed-loop observer matrix is not Hurwitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HurwitzPolicy {
    #[default]
    Require,
    /// Keep going and report the spectra; the error envelope is then void.
    Allow,
}

/// Gain-independent part of the observer design.
#[derive(Debug, Clone)]
pub struct ObserverStructure {
    pub grid: KernelGrid,
    /// Entry `(i, j)` with `j >= i` holds `K(x_i, y_j)`.
    pub k11: DMatrix<f64>,
    pub k12: DMatrix<f64>,
    pub k21: DMatrix<f64>,
    pub k22: DMatrix<f64>,
    /// Row `i` is `Kbar_1(x_i)`.
    pub kbar1: DMatrix<f64>,
    pub kbar2: DMatrix<f64>,
    pub lam: DMatrix<f64>,
    pub lam1: DMatrix<f64>,
    /// Sup-norm change of each successive approximation of `Kbar`.
    pub fixed_point_steps: Vec<f64>,
    q1: f64,
    q2: f64,
    d1: f64,
    d2: f64,
    p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectra {
    /// Eigenvalues of `S_d - L_d Lambda(1)`.
    pub disturbance: Vec<C64>,
    /// Eigenvalues of `S_r - L_r Pbar_r`.
    pub reference: Vec<C64>,
}

impl Spectra {
    pub fn hurwitz(&self) -> bool {
        self.disturbance.iter().chain(&self.reference).all(|l| l.re < 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ObsKernelSet {
    pub structure: ObserverStructure,
    pub l_d: DVector<f64>,
    pub l_r: DVector<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub spectra: Spectra,
}

fn trapz_tail(vals: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    linalg::trapz(vals, i, n - 1, h)
}

impl ObserverStructure {
    pub fn solve(plant: &Plant, exo: &ExoModel, n_k: usize) -> Result<Self> {
        if n_k < 3 {
            return Err(Error::InvalidParameter(format!("kernel grid needs at least 3 nodes, got {n_k}")));
        }
        let grid = KernelGrid::new(n_k);
        let hk = grid.h;
        let (q1, q2, d1, d2, p) = (plant.q1, plant.q2, plant.d1, plant.d2, plant.p);
        let first = FhParams::new(q2, q1, d1, d2, p * q1 / q2)?;
        let second = FhParams::new(q1, q2, -d2, -d1, q2 / (q1 * p))?;
        let rows = super::par_rows(n_k, |i| {
            (i..n_k)
                .map(|j| {
                    let (f1, h1) = first.eval(grid.x(j), grid.x(i))?;
                    let (f2, h2) = second.eval(grid.x(j), grid.x(i))?;
                    Ok([h1, f2, f1, h2])
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut ks = [DMatrix::zeros(n_k, n_k), DMatrix::zeros(n_k, n_k), DMatrix::zeros(n_k, n_k), DMatrix::zeros(n_k, n_k)];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, vals) in row.into_iter().enumerate() {
                for (m, v) in ks.iter_mut().zip(vals) {
                    m[(i, i + off)] = v;
                }
            }
        }
        let [k11, k12, k21, k22] = ks;

        let nd = exo.n_d();
        let bar = |g: &DVector<f64>| exo.pbar_d.transpose() * g;
        let g2b: Vec<DVector<f64>> = grid.nodes().map(|x| bar(&plant.g2.eval(x))).collect();
        let g3b: Vec<DVector<f64>> = grid.nodes().map(|x| bar(&plant.g3.eval(x))).collect();
        let g4b = bar(&plant.g4);
        let g5b = bar(&plant.g5);
        let last = n_k - 1;
        let mut base1 = DMatrix::zeros(n_k, nd);
        let mut base2 = DMatrix::zeros(n_k, nd);
        for i in 0..n_k {
            base1.set_row(i, &(&g3b[i] + &g5b * (q2 * k22[(i, last)])).transpose());
            base2.set_row(i, &(&g2b[i] + &g5b * (q2 * k12[(i, last)])).transpose());
        }
        let mut kb1 = base1.clone();
        let mut kb2 = base2.clone();
        let mut steps = Vec::new();
        loop {
            let mut n1 = base1.clone();
            let mut n2 = base2.clone();
            for i in 0..n_k {
                for k in 0..nd {
                    n1[(i, k)] += trapz_tail(|j| k22[(i, j)] * kb1[(j, k)] + k21[(i, j)] * kb2[(j, k)], i, n_k, hk);
                    n2[(i, k)] += trapz_tail(|j| k11[(i, j)] * kb2[(j, k)] + k12[(i, j)] * kb1[(j, k)], i, n_k, hk);
                }
            }
            let diff = (&n1 - &kb1).amax().max((&n2 - &kb2).amax());
            kb1 = n1;
            kb2 = n2;
            steps.push(diff);
            if diff < FIXED_POINT_TOL {
                break;
            }
            if !diff.is_finite() || steps.len() >= FIXED_POINT_MAX_ITERS {
                return Err(Error::FixedPointDiverged { iters: steps.len(), residual: diff });
            }
        }

        let sdc_t = (&exo.s_d - DMatrix::identity(nd, nd) * plant.c_self).transpose();
        let mut lam1 = DMatrix::zeros(n_k, nd);
        lam1.set_row(last, &g5b.transpose());
        let back = |l: &DVector<f64>, k: &DVector<f64>| (&sdc_t * l - k) / q2;
        for i in (1..n_k).rev() {
            let l = lam1.row(i).transpose();
            let (ka, kb) = (kb1.row(i).transpose(), kb1.row(i - 1).transpose());
            let km = (&ka + &kb) * 0.5;
            let h = -hk;
            let a1 = back(&l, &ka);
            let a2 = back(&(&l + &a1 * (0.5 * h)), &km);
            let a3 = back(&(&l + &a2 * (0.5 * h)), &km);
            let a4 = back(&(&l + &a3 * h), &kb);
            lam1.set_row(i - 1, &(&l + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0)).transpose());
        }
        let mut lam = DMatrix::zeros(n_k, nd);
        lam.set_row(0, &(lam1.row(0) * p + g4b.transpose()));
        let fwd = |l: &DVector<f64>, k: &DVector<f64>| (k - &sdc_t * l) / q1;
        for i in 0..last {
            let l = lam.row(i).transpose();
            let (ka, kb) = (kb2.row(i).transpose(), kb2.row(i + 1).transpose());
            let km = (&ka + &kb) * 0.5;
            let a1 = fwd(&l, &ka);
            let a2 = fwd(&(&l + &a1 * (0.5 * hk)), &km);
            let a3 = fwd(&(&l + &a2 * (0.5 * hk)), &km);
            let a4 = fwd(&(&l + &a3 * hk), &kb);
            lam.set_row(i + 1, &(&l + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (hk / 6.0)).transpose());
        }

        Ok(ObserverStructure { grid, k11, k12, k21, k22, kbar1: kb1, kbar2: kb2, lam, lam1, fixed_point_steps: steps, q1, q2, d1, d2, p })
    }

    /// `Lambda(1)`, the output row of the disturbance error dynamics.
    pub fn lambda_at_one(&self) -> DVector<f64> {
        self.lam.row(self.grid.n - 1).transpose()
    }

    /// Places the spectra of `S_d - L_d Lambda(1)` and `S_r - L_r Pbar_r`.
    pub fn place_gains(&self, exo: &ExoModel, disturbance_poles: &[C64], reference_poles: &[C64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let l_d = linalg::place_observer(&exo.s_d, &self.lambda_at_one(), disturbance_poles)?;
        let l_r = linalg::place_observer(&exo.s_r, &exo.pbar_r, reference_poles)?;
        Ok((l_d, l_r))
    }

    pub fn with_gains(&self, exo: &ExoModel, l_d: DVector<f64>, l_r: DVector<f64>, policy: HurwitzPolicy) -> Result<ObsKernelSet> {
        if l_d.len() != exo.n_d() || l_r.len() != exo.n_r() {
            return Err(Error::Dimension(format!("L_d has {} entries (need {}), L_r has {} (need {})", l_d.len(), exo.n_d(), l_r.len(), exo.n_r())));
        }
        let a_d = &exo.s_d - &l_d * self.lambda_at_one().transpose();
        let a_r = &exo.s_r - &l_r * exo.pbar_r.transpose();
        let spectra = Spectra { disturbance: linalg::eigenvalues(&a_d), reference: linalg::eigenvalues(&a_r) };
        if policy == HurwitzPolicy::Require {
            linalg::check_hurwitz(&a_d, "S_d - L_d Lambda(1)")?;
            linalg::check_hurwitz(&a_r, "S_r - L_r Pbar_r")?;
        }
        let n = self.grid.n;
        let hk = self.grid.h;
        let p1: Vec<f64> = (0..n).map(|i| -self.lam.row(i).dot(&l_d.transpose())).collect();
        let p2: Vec<f64> = (0..n).map(|i| -self.lam1.row(i).dot(&l_d.transpose())).collect();
        let last = n - 1;
        let l1 = (0..n)
            .map(|i| {
                -p1[i] + trapz_tail(|j| self.k11[(i, j)] * p1[j] + self.k12[(i, j)] * p2[j], i, n, hk) - self.q1 * self.k11[(i, last)]
            })
            .collect();
        let l2 = (0..n)
            .map(|i| {
                -p2[i] + trapz_tail(|j| self.k21[(i, j)] * p1[j] + self.k22[(i, j)] * p2[j], i, n, hk) - self.q1 * self.k21[(i, last)]
            })
            .collect();
        Ok(ObsKernelSet { structure: self.clone(), l_d, l_r, p1, p2, l1, l2, spectra })
    }

    /// Sup of the diagonal and `x = 0` boundary condition errors.
    pub fn boundary_residual(&self) -> f64 {
        let qs = self.q1 + self.q2;
        let mut r: f64 = 0.0;
        for i in 0..self.grid.n {
            r = r.max((self.k21[(i, i)] + self.d2 / qs).abs());
            r = r.max((self.k12[(i, i)] - self.d1 / qs).abs());
            r = r.max((self.k11[(0, i)] - self.p * self.k21[(0, i)]).abs());
            r = r.max((self.k22[(0, i)] - self.k12[(0, i)] / self.p).abs());
        }
        r
    }

    /// Centered-difference residuals of the four kernel PDEs on the lattice `x < y`.
    pub fn pde_residual(&self) -> ResidualReport {
        let (q1, q2, d1, d2) = (self.q1, self.q2, self.d1, self.d2);
        let mut rep = ResidualReport::default();
        for (i, j) in self.grid.lattice_upper() {
            let dx = |m: &DMatrix<f64>| self.grid.ddx(m, i, j);
            let dy = |m: &DMatrix<f64>| self.grid.ddy(m, i, j);
            let r11 = q1 * dx(&self.k11) + q1 * dy(&self.k11) - d1 * self.k21[(i, j)];
            let r12 = q1 * dx(&self.k12) - q2 * dy(&self.k12) - d1 * self.k22[(i, j)];
            let r21 = q2 * dx(&self.k21) - q1 * dy(&self.k21) + d2 * self.k11[(i, j)];
            let r22 = q2 * dx(&self.k22) + q2 * dy(&self.k22) + d2 * self.k12[(i, j)];
            rep.push(vec![r11.abs(), r12.abs(), r21.abs(), r22.abs()]);
        }
        rep
    }
}

pub fn solve_observer_kernels(
    plant: &Plant,
    exo: &ExoModel,
    l_d: DVector<f64>,
    l_r: DVector<f64>,
    n_k: usize,
    policy: HurwitzPolicy,
) -> Result<ObsKernelSet> {
    ObserverStructure::solve(plant, exo, n_k)?.with_gains(exo, l_d, l_r, policy)
}

impl ObsKernelSet {
    pub fn grid(&self) -> KernelGrid {
        self.structure.grid
    }

    pub fn lambda_at_one(&self) -> DVector<f64> {
        self.structure.lambda_at_one()
    }
}
