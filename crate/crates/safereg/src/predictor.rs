//! Delay-compensating prediction of the chain state over the transport horizon `1/q2`.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{BarrierChain, BarrierSpec, RescueBump};
use crate::chain_transform::{self, ChainMaps};
use crate::error::{Error, Result};
use crate::exo_model::{evolve_exo, ExoModel};
use crate::kernels::KernelSet;
use crate::linalg;
use crate::plant::{FieldIC, Plant};

/// Controller kernels resampled onto a simulation grid of `cells` intervals,
/// with the Volterra trapezoid weights folded in.
#[derive(Debug, Clone)]
pub struct SampledKernels {
    pub cells: usize,
    pub dx: f64,
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    /// `psi_w[(j, k)] = Psi(x_j, x_k) * w_k^{(j)}` for the trapezoid over `[0, x_j]`.
    psi_w: DMatrix<f64>,
    phi_w: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub lambdabar: DMatrix<f64>,
    pub weights: Vec<f64>,
}

impl SampledKernels {
    pub fn new(k: &KernelSet, cells: usize) -> Self {
        let m = cells + 1;
        let dx = 1.0 / cells as f64;
        let n_k = k.n_k() - 1;
        let exact = n_k % cells == 0;
        let stride = n_k / cells.max(1);
        let mut psi = DMatrix::zeros(m, m);
        let mut phi = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                if exact {
                    psi[(j, i)] = k.psi[(j * stride, i * stride)];
                    phi[(j, i)] = k.phi[(j * stride, i * stride)];
                } else {
                    psi[(j, i)] = k.psi_at(j as f64 * dx, i as f64 * dx);
                    phi[(j, i)] = k.phi_at(j as f64 * dx, i as f64 * dx);
                }
            }
        }
        let mut psi_w = DMatrix::zeros(m, m);
        let mut phi_w = DMatrix::zeros(m, m);
        for j in 1..m {
            for i in 0..=j {
                let w = if i == 0 || i == j { 0.5 * dx } else { dx };
                psi_w[(j, i)] = psi[(j, i)] * w;
                phi_w[(j, i)] = phi[(j, i)] * w;
            }
        }
        let rows = |src: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(m, src.ncols());
            for j in 0..m {
                let r = if exact { src.row(j * stride).transpose() } else { crate::kernels::interp_rows(src, j as f64 * dx) };
                out.set_row(j, &r.transpose());
            }
            out
        };
        let lambda = rows(&k.lambda);
        let lambdabar = rows(&k.lambdabar);
        SampledKernels { cells, dx, psi, phi, psi_w, phi_w, lambda, lambdabar, weights: linalg::trapezoid_weights(cells) }
    }

    pub fn psi1(&self) -> Vec<f64> {
        self.psi.row(self.cells).iter().cloned().collect()
    }

    pub fn phi1(&self) -> Vec<f64> {
        self.phi.row(self.cells).iter().cloned().collect()
    }

    pub fn lambda1(&self) -> DVector<f64> {
        self.lambda.row(self.cells).transpose()
    }

    pub fn lambdabar1(&self) -> DVector<f64> {
        self.lambdabar.row(self.cells).transpose()
    }

    /// `eta(x_j) = w - int Psi z - int Phi w - lambda Y - lambda_bar v` on the grid.
    pub fn eta(&self, y: &DVector<f64>, v: &DVector<f64>, z: &[f64], w: &[f64]) -> DVector<f64> {
        let zv = DVector::from_column_slice(z);
        let wv = DVector::from_column_slice(w);
        &wv - &self.psi_w * &zv - &self.phi_w * &wv - &self.lambda * y - &self.lambdabar * v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PredictionInput<'a> {
    pub y: &'a DVector<f64>,
    pub v: &'a DVector<f64>,
    pub z: &'a [f64],
    pub w: &'a [f64],
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub z_pred: DVector<f64>,
    pub y_pred: DVector<f64>,
    pub e_pred: f64,
}

/// `e^{A_z s} Z` for the chain of integrators.
pub fn chain_exp(z: &DVector<f64>, s: f64) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        let mut fac = 1.0;
        for k in 0..n - i {
            if k > 0 {
                fac *= s / k as f64;
            }
            acc += fac * z[i + k];
        }
        acc
    })
}

/// `Z(t + a)` only.
pub fn predict_z(input: &PredictionInput, sk: &SampledKernels, chain: &ChainMaps, plant: &Plant, a: f64) -> Result<DVector<f64>> {
    let horizon = 1.0 / plant.q2;
    if a > horizon * (1.0 + 1e-12) || a < 0.0 {
        return Err(Error::OutOfHorizon { a, max: horizon });
    }
    let n = plant.n();
    let z0 = chain_transform::to_error(chain, input.y, input.v);
    let mut out = chain_exp(&z0, a);
    if a == 0.0 {
        return Ok(out);
    }
    let eta = sk.eta(input.y, input.v, input.z, input.w);
    let (q2, c, b) = (plant.q2, plant.c_self, plant.b);
    let dx = sk.dx;
    let ell_max = (a * q2).min(1.0);
    // integrand of component i at l: b (a - l/q2)^{n-1-i} / (n-1-i)! * e^{c l / q2} eta(l)
    let integrand = |l: f64, eta_l: f64, i: usize| {
        let s = a - l / q2;
        let p = n - 1 - i;
        let mut fac = 1.0;
        for k in 1..=p {
            fac *= s / k as f64;
        }
        b * fac * (c * l / q2).exp() * eta_l
    };
    let full = ((ell_max / dx) + 1e-9).floor() as usize;
    let full = full.min(sk.cells);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..full {
            let (l0, l1) = (j as f64 * dx, (j + 1) as f64 * dx);
            acc += 0.5 * dx * (integrand(l0, eta[j], i) + integrand(l1, eta[j + 1], i));
        }
        let l0 = full as f64 * dx;
        let seg = ell_max - l0;
        if seg > 1e-14 && full < sk.cells {
            let fr = seg / dx;
            let eta_end = eta[full] * (1.0 - fr) + eta[full + 1] * fr;
            acc += 0.5 * seg * (integrand(l0, eta[full], i) + integrand(ell_max, eta_end, i));
        }
        out[i] += acc / q2;
    }
    Ok(out)
}

pub fn predict(input: &PredictionInput, sk: &SampledKernels, chain: &ChainMaps, plant: &Plant, exo: &ExoModel, a: f64) -> Result<Prediction> {
    let z_pred = predict_z(input, sk, chain, plant, a)?;
    let v_a = evolve_exo(exo, input.v, a);
    let y_pred = chain_transform::from_error(chain, &z_pred, &v_a);
    let e_pred = z_pred[0];
    Ok(Prediction { z_pred, y_pred, e_pred })
}

/// Box of initial data around which the observer starts.
#[derive(Debug, Clone, PartialEq)]
pub struct InitBounds {
    pub z_lo: Vec<f64>,
    pub z_hi: Vec<f64>,
    pub w_lo: Vec<f64>,
    pub w_hi: Vec<f64>,
    pub v_lo: DVector<f64>,
    pub v_hi: DVector<f64>,
}

impl InitBounds {
    /// `estimate +- margin` componentwise.
    pub fn around(z: &[f64], w: &[f64], v: &DVector<f64>, field_margin: f64, exo_margin: f64) -> Self {
        InitBounds {
            z_lo: z.iter().map(|x| x - field_margin).collect(),
            z_hi: z.iter().map(|x| x + field_margin).collect(),
            w_lo: w.iter().map(|x| x - field_margin).collect(),
            w_hi: w.iter().map(|x| x + field_margin).collect(),
            v_lo: v.map(|x| x - exo_margin),
            v_hi: v.map(|x| x + exo_margin),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.z_lo.iter().zip(&self.z_hi).any(|(a, b)| a > b)
            || self.w_lo.iter().zip(&self.w_hi).any(|(a, b)| a > b)
            || self.v_lo.iter().zip(self.v_hi.iter()).any(|(a, b)| a > b);
        if bad {
            return Err(Error::InvalidParameter("init bounds: lower exceeds upper".into()));
        }
        Ok(())
    }

    pub fn contains(&self, z: &[f64], w: &[f64], v: &DVector<f64>) -> bool {
        let inside = |x: &f64, lo: &f64, hi: &f64| *x >= lo - 1e-12 && *x <= hi + 1e-12;
        z.iter().zip(&self.z_lo).zip(&self.z_hi).all(|((x, l), h)| inside(x, l, h))
            && w.iter().zip(&self.w_lo).zip(&self.w_hi).all(|((x, l), h)| inside(x, l, h))
            && v.iter().zip(self.v_lo.iter()).zip(self.v_hi.iter()).all(|((x, l), h)| inside(x, l, h))
    }

    pub fn z_mid(&self) -> Vec<f64> {
        self.z_lo.iter().zip(&self.z_hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn w_mid(&self) -> Vec<f64> {
        self.w_lo.iter().zip(&self.w_hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn v_mid(&self) -> DVector<f64> {
        (&self.v_lo + &self.v_hi) * 0.5
    }
}

/// Exact range of `e_pred(t0, a)` over the box, with `Y` known. The prediction
/// is affine in `(z, w, v)`, so the range is the midpoint value plus or minus
/// the absolute coefficients weighted by the half widths.
pub fn e_pred_range(y: &DVector<f64>, bounds: &InitBounds, sk: &SampledKernels, chain: &ChainMaps, plant: &Plant, a: f64) -> Result<(f64, f64)> {
    let (zm, wm, vm) = (bounds.z_mid(), bounds.w_mid(), bounds.v_mid());
    let center = predict_z(&PredictionInput { y, v: &vm, z: &zm, w: &wm, t: 0.0 }, sk, chain, plant, a)?[0];
    let zero_y = DVector::zeros(y.len());
    let m = zm.len();
    let nv = vm.len();
    let zeros = vec![0.0; m];
    let zero_v = DVector::zeros(nv);
    let mut spread = 0.0;
    let mut unit = vec![0.0; m];
    for k in 0..m {
        unit[k] = 1.0;
        let cz = predict_z(&PredictionInput { y: &zero_y, v: &zero_v, z: &unit, w: &zeros, t: 0.0 }, sk, chain, plant, a)?[0];
        let cw = predict_z(&PredictionInput { y: &zero_y, v: &zero_v, z: &zeros, w: &unit, t: 0.0 }, sk, chain, plant, a)?[0];
        unit[k] = 0.0;
        spread += cz.abs() * 0.5 * (bounds.z_hi[k] - bounds.z_lo[k]) + cw.abs() * 0.5 * (bounds.w_hi[k] - bounds.w_lo[k]);
    }
    for k in 0..nv {
        let mut ev = DVector::zeros(nv);
        ev[k] = 1.0;
        let cv = predict_z(&PredictionInput { y: &zero_y, v: &ev, z: &zeros, w: &zeros, t: 0.0 }, sk, chain, plant, a)?[0];
        spread += cv.abs() * 0.5 * (bounds.v_hi[k] - bounds.v_lo[k]);
    }
    Ok((center - spread, center + spread))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    UnsafePositiveHbar,
    UnsafeNonpositiveHbar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyCheck {
    pub verdict: Verdict,
    pub h_at_tbar0: f64,
    /// Smallest `h(e(t0 + a), t0 + a)` over the uncontrolled window.
    pub min_h: f64,
}

/// Safe-initialization check over the uncontrolled window `[t0, t0 + 1/q2]`,
/// reading the condition as `h(e(t0 + a), t0 + a) >= 0` on an `a`-grid.
pub fn initial_safety_check(
    ics: &FieldIC,
    plant: &Plant,
    exo: &ExoModel,
    sk: &SampledKernels,
    chain: &ChainMaps,
    spec: &BarrierSpec,
    t0: f64,
    samples: usize,
) -> Result<SafetyCheck> {
    let horizon = 1.0 / plant.q2;
    let input = PredictionInput { y: &ics.y0, v: &ics.v0, z: &ics.z0, w: &ics.w0, t: t0 };
    let mut min_h = f64::INFINITY;
    let mut h_end = 0.0;
    let samples = samples.max(2);
    for s in 0..samples {
        let a = horizon * s as f64 / (samples - 1) as f64;
        let e = predict(&input, sk, chain, plant, exo, a)?.e_pred;
        let h = spec.h(e, t0 + a);
        min_h = min_h.min(h);
        if s == samples - 1 {
            h_end = h;
        }
    }
    let verdict = if min_h >= 0.0 && h_end != 0.0 {
        Verdict::Safe
    } else if h_end > 0.0 {
        Verdict::UnsafePositiveHbar
    } else {
        Verdict::UnsafeNonpositiveHbar
    };
    Ok(SafetyCheck { verdict, h_at_tbar0: h_end, min_h })
}

/// `p(1, t) = e^{-c/q2} (-f / theta)` at the state predicted `1/q2` ahead.
pub fn p_boundary(
    input: &PredictionInput,
    sk: &SampledKernels,
    chain: &ChainMaps,
    plant: &Plant,
    spec: &BarrierSpec,
    bump: &RescueBump,
    barrier: &BarrierChain,
) -> Result<f64> {
    let a = 1.0 / plant.q2;
    let zp = predict_z(input, sk, chain, plant, a)?;
    let tp = input.t + a;
    let f = barrier.f(spec, bump, zp.as_slice(), tp, plant.b)?;
    let th = spec.theta(zp[0], tp);
    if th == 0.0 {
        return Err(Error::DomainError { e: zp[0], t: tp });
    }
    Ok((-plant.c_self * a).exp() * (-f / th))
}
