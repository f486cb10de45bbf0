//! State observer and disturbance estimator, stepped alongside the plant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exo_model::ExoModel;
use crate::kernels::ObsKernelSet;
use crate::linalg;
use crate::plant::Plant;

/// Source of `w(0, t)` in the `z_hat(0)` boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// `z_hat(0) = p w_hat(0) + C Y + G4 v_hat_d`; the observer-error system then
    /// satisfies `z~(0) = p w~(0) + G4 v~_d`, which the observer kernels assume.
    #[default]
    Estimated,
    /// `z_hat(0) = p w(0) + C Y + G4 v_hat_d` with the plant's `w(0)`.
    Measured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub z_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    /// `[v_hat_r, v_hat_d]`.
    pub v_hat: DVector<f64>,
}

/// Signals available to the observer over one step.
#[derive(Debug, Clone, Copy)]
pub struct Measurements<'a> {
    /// `z(1, t)`, drives the injection.
    pub z1: f64,
    /// `r(t)`.
    pub r: f64,
    /// Plant values after the step: `Y`, `z(1)`, `w(0)`.
    pub y_next: &'a DVector<f64>,
    pub z1_next: f64,
    pub w0_next: f64,
}

/// Observer gains and disturbance maps on the simulation grid.
#[derive(Debug, Clone)]
pub struct Observer {
    pub cells: usize,
    pub mode: BoundaryMode,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l_d: DVector<f64>,
    pub l_r: DVector<f64>,
    plant: Plant,
    pbar_r: DVector<f64>,
    /// `G2(x_j) Pbar_d` as rows over `v_d`.
    g2d: Vec<DVector<f64>>,
    g3d: Vec<DVector<f64>>,
    g4d: DVector<f64>,
    g5d: DVector<f64>,
    n_r: usize,
    dt: f64,
    /// `exp(S_r dt)`, `exp(S_d dt)`: the plant side moves the exosystem exactly.
    e_r: DMatrix<f64>,
    e_d: DMatrix<f64>,
}

impl Observer {
    pub fn new(obs: &ObsKernelSet, plant: &Plant, exo: &ExoModel, cells: usize, dt: f64, mode: BoundaryMode) -> Self {
        let dx = 1.0 / cells as f64;
        let sample = |g: &[f64]| -> Vec<f64> { (0..=cells).map(|j| linalg::interp_uniform(g, j as f64 * dx)).collect() };
        let pd_t = exo.pbar_d.transpose();
        let g2d = (0..=cells).map(|j| &pd_t * plant.g2.eval(j as f64 * dx)).collect();
        let g3d = (0..=cells).map(|j| &pd_t * plant.g3.eval(j as f64 * dx)).collect();
        Observer {
            cells,
            mode,
            l1: sample(&obs.l1),
            l2: sample(&obs.l2),
            l_d: obs.l_d.clone(),
            l_r: obs.l_r.clone(),
            plant: plant.clone(),
            pbar_r: exo.pbar_r.clone(),
            g2d,
            g3d,
            g4d: &pd_t * &plant.g4,
            g5d: &pd_t * &plant.g5,
            n_r: exo.n_r(),
            dt,
            e_r: linalg::expm(&exo.s_r, dt),
            e_d: linalg::expm(&exo.s_d, dt),
        }
    }

    pub fn g5d(&self) -> &DVector<f64> {
        &self.g5d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One explicit upwind step. Interiors use time-`t` values; boundaries use
    /// the post-step measurements and estimates.
    pub fn step(&self, st: &ObserverState, meas: &Measurements, u: f64) -> Result<ObserverState> {
        let n = self.cells;
        let dt = self.dt;
        let dx = 1.0 / n as f64;
        let p = &self.plant;
        let cfl = p.q1.max(p.q2) * dt / dx;
        if !(cfl < 1.0) {
            return Err(Error::CflViolation { cfl });
        }
        let (zh, wh) = (&st.z_hat, &st.w_hat);
        let nd = self.e_d.nrows();
        let vr = st.v_hat.rows(0, self.n_r).into_owned();
        let vd = st.v_hat.rows(self.n_r, nd).into_owned();
        let inn = meas.z1 - zh[n];
        let (c1, c2) = (p.q1 * dt / dx, p.q2 * dt / dx);
        let mut zn = zh.clone();
        let mut wn = wh.clone();
        for j in 1..=n {
            let src = p.d1 * wh[j] + p.c_self * zh[j] + self.g2d[j].dot(&vd) + self.l1[j] * inn;
            zn[j] = zh[j] - c1 * (zh[j] - zh[j - 1]) + dt * src;
        }
        for j in 0..n {
            let src = p.d2 * zh[j] + p.c_self * wh[j] + self.g3d[j].dot(&vd) + self.l2[j] * inn;
            wn[j] = wh[j] + c2 * (wh[j + 1] - wh[j]) + dt * src;
        }
        let vr_n = &self.e_r * &vr + &self.l_r * ((meas.r - self.pbar_r.dot(&vr)) * dt);
        let vd_n = &self.e_d * &vd + &self.l_d * (inn * dt);
        let w0 = match self.mode {
            BoundaryMode::Estimated => wn[0],
            BoundaryMode::Measured => meas.w0_next,
        };
        zn[0] = p.p * w0 + p.c.dot(meas.y_next) + self.g4d.dot(&vd_n);
        wn[n] = p.q * meas.z1_next + u + self.g5d.dot(&vd_n);
        let mut v_hat = DVector::zeros(self.n_r + nd);
        v_hat.rows_mut(0, self.n_r).copy_from(&vr_n);
        v_hat.rows_mut(self.n_r, nd).copy_from(&vd_n);
        Ok(ObserverState { z_hat: zn, w_hat: wn, v_hat })
    }
}

pub fn observer_step(obs: &Observer, st: &ObserverState, meas: &Measurements, u: f64) -> Result<ObserverState> {
    obs.step(st, meas, u)
}

/// `||z~|| + ||w~|| + |v~|`.
pub fn error_norm(st: &ObserverState, z: &[f64], w: &[f64], v: &DVector<f64>) -> f64 {
    let dz: Vec<f64> = z.iter().zip(&st.z_hat).map(|(a, b)| a - b).collect();
    let dw: Vec<f64> = w.iter().zip(&st.w_hat).map(|(a, b)| a - b).collect();
    linalg::l2_norm(&dz) + linalg::l2_norm(&dw) + (v - &st.v_hat).norm()
}
