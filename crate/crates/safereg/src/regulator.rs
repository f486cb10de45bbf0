//! Control laws and envelope constants.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{BarrierChain, BarrierSpec, Gains, RescueBump};
use crate::chain_transform::ChainMaps;
use crate::error::{Error, Result};
use crate::exo_model::ExoModel;
use crate::kernels::ObsKernelSet;
use crate::linalg;
use crate::plant::Plant;
use crate::predictor::{p_boundary, InitBounds, PredictionInput, SampledKernels};

/// `U = -q z(1) + int Psi(1,.) z + int Phi(1,.) w + lambda(1) Y - (G5 - lambda_bar(1)) v + p(1, t)`.
#[derive(Debug, Clone)]
pub struct StateFeedback {
    pub plant: Plant,
    pub chain: ChainMaps,
    pub kernels: SampledKernels,
    pub spec: BarrierSpec,
    pub bump: RescueBump,
    pub gains: Gains,
    barrier: BarrierChain,
    psi1_w: Vec<f64>,
    phi1_w: Vec<f64>,
    lambda1: DVector<f64>,
    /// `G5 P_d - lambda_bar(1)`.
    v_row: DVector<f64>,
}

impl StateFeedback {
    pub fn new(plant: &Plant, exo: &ExoModel, chain: &ChainMaps, kernels: SampledKernels, spec: BarrierSpec, bump: RescueBump, gains: Gains) -> Result<Self> {
        if gains.k.len() != plant.n() {
            return Err(Error::Dimension(format!("{} gains for order {}", gains.k.len(), plant.n())));
        }
        let barrier = BarrierChain::new(plant.n(), &gains.k);
        let w = &kernels.weights;
        let psi1_w = kernels.psi1().iter().zip(w).map(|(a, b)| a * b).collect();
        let phi1_w = kernels.phi1().iter().zip(w).map(|(a, b)| a * b).collect();
        let lambda1 = kernels.lambda1();
        let g5a = exo.p_d().transpose() * &plant.g5;
        let v_row = g5a - kernels.lambdabar1();
        Ok(StateFeedback { plant: plant.clone(), chain: chain.clone(), kernels, spec, bump, gains, barrier, psi1_w, phi1_w, lambda1, v_row })
    }

    pub fn set_bump(&mut self, bump: RescueBump) {
        self.bump = bump;
    }

    pub fn barrier(&self) -> &BarrierChain {
        &self.barrier
    }

    /// Norms entering the exact envelope: `||Psi(1,.)||`, `||Phi(1,.)||`, `|G5 - lambda_bar(1)|`.
    pub fn boundary_norms(&self) -> (f64, f64, f64) {
        (linalg::l2_norm(&self.kernels.psi1()), linalg::l2_norm(&self.kernels.phi1()), self.v_row.norm())
    }

    /// The law without `p(1, t)`.
    pub fn nominal_part(&self, y: &DVector<f64>, z: &[f64], w: &[f64], v: &DVector<f64>) -> f64 {
        let n = z.len() - 1;
        let iz: f64 = self.psi1_w.iter().zip(z).map(|(a, b)| a * b).sum();
        let iw: f64 = self.phi1_w.iter().zip(w).map(|(a, b)| a * b).sum();
        -self.plant.q * z[n] + iz + iw + self.lambda1.dot(y) - self.v_row.dot(v)
    }

    pub fn p1(&self, y: &DVector<f64>, z: &[f64], w: &[f64], v: &DVector<f64>, t: f64) -> Result<f64> {
        let input = PredictionInput { y, v, z, w, t };
        p_boundary(&input, &self.kernels, &self.chain, &self.plant, &self.spec, &self.bump, &self.barrier)
    }

    pub fn control(&self, y: &DVector<f64>, z: &[f64], w: &[f64], v: &DVector<f64>, t: f64) -> Result<f64> {
        Ok(self.nominal_part(y, z, w, v) + self.p1(y, z, w, v, t)?)
    }
}

pub fn state_feedback(law: &StateFeedback, y: &DVector<f64>, z: &[f64], w: &[f64], v: &DVector<f64>, t: f64) -> Result<f64> {
    law.control(y, z, w, v, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBound {
    pub m_h: f64,
    pub sigma1: f64,
}

impl ExpBound {
    pub fn eval(&self, t: f64) -> f64 {
        self.m_h * (-self.sigma1 * t).exp()
    }
}

/// `||exp(A_H t)|| <= M_H exp(-sigma1 t)` with `M_H` the condition number of a
/// unit-column eigenvector matrix.
pub fn exp_bound(a_h: &DMatrix<f64>) -> Result<ExpBound> {
    let eigs = linalg::eigenvalues(a_h);
    let sigma1 = -eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !(sigma1 > 0.0) {
        return Err(Error::NotHurwitz { what: "A_H".into(), eigs: linalg::format_eigs(&eigs) });
    }
    let (_, p) = linalg::eigen_decomposition(a_h)?;
    let cond = linalg::cond2_complex(&p);
    if !(cond <= 1e8) {
        return Err(Error::Defective { cond });
    }
    Ok(ExpBound { m_h: cond, sigma1 })
}

/// Constants of the observer-error envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEnvelope {
    pub m0: f64,
    pub m1: f64,
    pub m_d: f64,
    pub m_check_d: f64,
    pub m_bar_d: f64,
    pub upsilon1: f64,
    /// Hilbert-Schmidt norm of the observer Volterra operator.
    pub kappa: f64,
    /// Bound on `sup |alpha_bar(., t0)|, sup |beta_bar(., t0)|`.
    pub alpha_beta_sup: f64,
    pub reference: ExpBound,
    pub disturbance: ExpBound,
    /// `1/q1 + 1/q2`.
    pub t_switch: f64,
}

impl ErrorEnvelope {
    pub fn rho_e1(&self, t: f64) -> f64 {
        self.upsilon1 * self.m_bar_d + (1.0 + self.upsilon1) * self.m_d + (1.0 + self.upsilon1) * self.m0 * self.reference.eval(t)
    }

    pub fn rho_e2(&self, t: f64) -> f64 {
        (1.0 + self.upsilon1) * (self.m_check_d * self.disturbance.eval(t) + self.m0 * self.reference.eval(t))
    }

    /// Bound on `||z~|| + ||w~|| + |v~|` at time `t` (measured from `t0`).
    pub fn omega_bound(&self, t: f64) -> f64 {
        if t < self.t_switch {
            self.rho_e1(t)
        } else {
            self.rho_e2(t)
        }
    }
}

/// Builds the envelope from the initial boxes and the observer's initial estimates.
///
/// `z_hat0`, `w_hat0` live on the simulation grid of the boxes; they are
/// interpolated onto the observer kernel grid, where the inverse Volterra map is
/// formed as the exact inverse of its trapezoid discretization.
pub fn error_envelope(
    bounds: &InitBounds,
    z_hat0: &[f64],
    w_hat0: &[f64],
    v_hat0: &DVector<f64>,
    obs: &ObsKernelSet,
    plant: &Plant,
    exo: &ExoModel,
) -> Result<ErrorEnvelope> {
    bounds.validate()?;
    let (nr, nd) = (exo.n_r(), exo.n_d());
    let a_r = &exo.s_r - &obs.l_r * exo.pbar_r.transpose();
    let a_d = &exo.s_d - &obs.l_d * obs.lambda_at_one().transpose();
    let reference = exp_bound(&a_r)?;
    let disturbance = exp_bound(&a_d)?;

    let width = |k: usize| bounds.v_hi[k] - bounds.v_lo[k];
    let m0 = (0..nr).map(|k| width(k).powi(2)).sum::<f64>().sqrt();
    let m1 = (nr..nr + nd).map(|k| width(k).powi(2)).sum::<f64>().sqrt();

    let s = &obs.structure;
    let g = s.grid;
    let nk = g.n;
    let hk = g.h;
    // (I - K) on the stacked grid values (alpha~, beta~) -> (z~, w~)
    let mut op = DMatrix::<f64>::identity(2 * nk, 2 * nk);
    let mut hs = 0.0;
    for i in 0..nk {
        for j in i..nk {
            let wgt = if i == nk - 1 { 0.0 } else if j == i || j == nk - 1 { 0.5 * hk } else { hk };
            let blocks = [(0, 0, &s.k11), (0, 1, &s.k12), (1, 0, &s.k21), (1, 1, &s.k22)];
            for (bi, bj, k) in blocks {
                op[(bi * nk + i, bj * nk + j)] -= wgt * k[(i, j)];
                hs += wgt * hk * k[(i, j)].powi(2);
            }
        }
    }
    let kappa = hs.sqrt();
    let t_mat = op.try_inverse().ok_or_else(|| Error::InvalidParameter("observer Volterra map is singular on the grid".into()))?;

    // error boxes on the kernel grid: center and half widths
    let interp = |v: &[f64], x: f64| linalg::interp_uniform(v, x);
    let mut center = DVector::zeros(2 * nk + nd);
    let mut radius = DVector::zeros(2 * nk + nd);
    for i in 0..nk {
        let x = g.x(i);
        let zc = 0.5 * (interp(&bounds.z_lo, x) + interp(&bounds.z_hi, x)) - interp(z_hat0, x);
        let wc = 0.5 * (interp(&bounds.w_lo, x) + interp(&bounds.w_hi, x)) - interp(w_hat0, x);
        center[i] = zc;
        center[nk + i] = wc;
        radius[i] = 0.5 * (interp(&bounds.z_hi, x) - interp(&bounds.z_lo, x));
        radius[nk + i] = 0.5 * (interp(&bounds.w_hi, x) - interp(&bounds.w_lo, x));
    }
    for k in 0..nd {
        let idx = nr + k;
        center[2 * nk + k] = 0.5 * (bounds.v_lo[idx] + bounds.v_hi[idx]) - v_hat0[idx];
        radius[2 * nk + k] = 0.5 * width(idx);
    }
    // (alpha_bar, beta_bar) = T (z~, w~) - (Lambda, Lambda1) v~_d
    let mut map = DMatrix::zeros(2 * nk, 2 * nk + nd);
    map.view_mut((0, 0), (2 * nk, 2 * nk)).copy_from(&t_mat);
    for i in 0..nk {
        for k in 0..nd {
            map[(i, 2 * nk + k)] = -s.lam[(i, k)];
            map[(nk + i, 2 * nk + k)] = -s.lam1[(i, k)];
        }
    }
    let mid = &map * &center;
    let spread = map.abs() * &radius;
    let growth = (plant.c_self.max(0.0) * (1.0 / plant.q1 + 1.0 / plant.q2)).exp();
    let tw = linalg::trapezoid_weights(nk - 1);
    let norm_bound = |off: usize| {
        let sq: f64 = (0..nk).map(|i| tw[i] * (mid[off + i].abs() + spread[off + i]).powi(2)).sum();
        sq.sqrt()
    };
    let m_bar_d = growth * (norm_bound(0) + norm_bound(nk));
    let alpha_beta_sup = growth * (0..2 * nk).map(|i| mid[i].abs() + spread[i]).fold(0.0, f64::max);

    let t_switch = 1.0 / plant.q1 + 1.0 / plant.q2;
    let sup_exp = (0..=200).map(|k| linalg::spectral_norm(&linalg::expm(&a_d, t_switch * k as f64 / 200.0))).fold(0.0, f64::max);
    let m_d = m1 * sup_exp + t_switch * obs.l_d.norm() * alpha_beta_sup * sup_exp;
    let m_check_d = m_d * linalg::spectral_norm(&linalg::expm(&a_d, t_switch));

    let lam_norm = |m: &DMatrix<f64>| (0..nk).map(|i| tw[i] * m.row(i).norm_squared()).sum::<f64>().sqrt();
    let upsilon1 = std::f64::consts::SQRT_2 * (1.0 + kappa) * (1.0 + lam_norm(&s.lam) + lam_norm(&s.lam1));

    Ok(ErrorEnvelope { m0, m1, m_d, m_check_d, m_bar_d, upsilon1, kappa, alpha_beta_sup, reference, disturbance, t_switch })
}

/// Robustness term added to the certainty-equivalence law.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeParams {
    /// `rho_c = m_c exp(-sigma_c t)`.
    Smooth { m_c: f64, sigma_c: f64 },
    /// `2 max{||Psi(1,.)||, ||Phi(1,.)||, |G5 - lambda_bar(1)|, xi_e} rho_e{1,2}(t)`.
    Exact { xi_e: f64, bound: ErrorEnvelope, norms: (f64, f64, f64) },
}

impl EnvelopeParams {
    pub fn smooth(m_c: f64, sigma_c: f64) -> Result<Self> {
        if !(m_c >= 0.0 && sigma_c > 0.0) {
            return Err(Error::InvalidParameter(format!("smooth envelope needs M_c >= 0, sigma_c > 0 (got {m_c}, {sigma_c})")));
        }
        Ok(EnvelopeParams::Smooth { m_c, sigma_c })
    }

    pub fn rho(&self, t: f64) -> f64 {
        match self {
            EnvelopeParams::Smooth { m_c, sigma_c } => m_c * (-sigma_c * t).exp(),
            EnvelopeParams::Exact { xi_e, bound, norms } => {
                let gain = 2.0 * norms.0.max(norms.1).max(norms.2).max(*xi_e);
                gain * bound.omega_bound(t)
            }
        }
    }
}

/// `rho_c >= rho_e` at the sampled times.
pub fn smooth_dominates(smooth: &EnvelopeParams, exact: &EnvelopeParams, times: &[f64]) -> bool {
    times.iter().all(|&t| smooth.rho(t) >= exact.rho(t))
}

/// `sign(u)` with `sign(0) = 1`.
pub fn sign(u: f64) -> f64 {
    if u >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `U_f = U_hat + sign_theta0 rho(t)`.
#[allow(clippy::too_many_arguments)]
pub fn output_feedback(
    law: &StateFeedback,
    envelope: &EnvelopeParams,
    y: &DVector<f64>,
    z_hat: &[f64],
    w_hat: &[f64],
    v_hat: &DVector<f64>,
    t: f64,
    sign_theta0: f64,
) -> Result<f64> {
    Ok(law.control(y, z_hat, w_hat, v_hat, t)? + sign_theta0 * envelope.rho(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_bound_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let b = exp_bound(&d).unwrap();
        assert_relative_eq!(b.m_h, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b.sigma1, 1.0, max_relative = 1e-12);
        let u = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let b = exp_bound(&u).unwrap();
        assert_relative_eq!(b.sigma1, 1.0, max_relative = 1e-12);
        // unit eigenvectors (1, 0) and (1, -1)/sqrt 2
        assert_relative_eq!(b.m_h, 1.0 + 2f64.sqrt(), max_relative = 1e-10);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(exp_bound(&rot), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn smooth_envelope_values() {
        let e = EnvelopeParams::smooth(15.0, 2.0).unwrap();
        assert_relative_eq!(e.rho(0.0), 15.0);
        assert_relative_eq!(e.rho(1.0), 15.0 * (-2f64).exp());
        assert_eq!(sign(0.0), 1.0);
    }
}
