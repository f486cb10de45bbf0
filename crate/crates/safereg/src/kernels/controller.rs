//! Controller kernels `Psi`, `Phi` on `{0 <= y <= x <= 1}` and the rows `lambda`, `lambda_bar`.

use nalgebra::{DMatrix, DVector};

use super::fh::FhParams;
use super::{acute, bilinear_lower, KernelGrid, ResidualReport};
use crate::chain_transform::{g1_acute, ChainMaps};
use crate::error::{Error, Result};
use crate::exo_model::ExoModel;
use crate::linalg;
use crate::plant::Plant;

#[derive(Debug, Clone)]
pub struct KernelSet {
    pub grid: KernelGrid,
    pub f: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    /// Row `i` is `lambda(x_i)`.
    pub lambda: DMatrix<f64>,
    /// Row `i` is `lambda_bar(x_i)`.
    pub lambdabar: DMatrix<f64>,
    params: FhParams,
    b: f64,
}

pub fn solve_controller_kernels(plant: &Plant, exo: &ExoModel, chain: &ChainMaps, n_k: usize) -> Result<KernelSet> {
    if n_k < 3 {
        return Err(Error::InvalidParameter(format!("kernel grid needs at least 3 nodes, got {n_k}")));
    }
    let grid = KernelGrid::new(n_k);
    let hk = grid.h;
    let n = plant.n();
    let nv = exo.n_v();
    let (q1, q2, c) = (plant.q1, plant.q2, plant.c_self);
    let b = plant.b;
    let params = FhParams::new(q1, q2, plant.d1, plant.d2, plant.p)?;

    let mut f = DMatrix::zeros(n_k, n_k);
    let mut h = DMatrix::zeros(n_k, n_k);
    let vals = super::par_rows(n_k, |i| {
        (0..=i).map(|j| params.eval(grid.x(i), grid.x(j))).collect::<Result<Vec<_>>>()
    })?;
    for (i, row) in vals.into_iter().enumerate() {
        for (j, (fv, hv)) in row.into_iter().enumerate() {
            f[(i, j)] = fv;
            h[(i, j)] = hv;
        }
    }

    // F(x, 0) on the half grid for the RK4 stages
    let f0h: Vec<f64> = (0..2 * n_k - 1)
        .map(|k| params.eval(0.5 * hk * k as f64, 0.0).map(|v| v.0))
        .collect::<Result<_>>()?;

    let a_c = &plant.a - DMatrix::identity(n, n) * c;
    let c_row = plant.c.transpose();
    let mut lambda = DMatrix::zeros(n_k, n);
    lambda.set_row(0, &(-chain.k.transpose()));
    // rhs at half-grid index ih with lambda-at-stage `ls`; nodes 0..=i are known
    let rhs = |lambda: &DMatrix<f64>, ih: usize, ls: &nalgebra::RowDVector<f64>, i: usize| {
        let x_s = 0.5 * hk * ih as f64;
        let lb = |j: usize| lambda[(j, n - 1)] * b * f0h[ih - 2 * j];
        let mut conv = linalg::trapz(lb, 0, i, hk);
        let seg = x_s - grid.x(i);
        if seg > 0.0 {
            conv += 0.5 * seg * (lb(i) + ls[n - 1] * b * f0h[0]);
        }
        (ls * &a_c + &c_row * (q1 * f0h[ih]) - &c_row * (q1 / q2 * conv)) / q2
    };
    for i in 0..n_k - 1 {
        let l = lambda.row(i).into_owned();
        let k1 = rhs(&lambda, 2 * i, &l, i);
        let k2 = rhs(&lambda, 2 * i + 1, &(&l + &k1 * (0.5 * hk)), i);
        let k3 = rhs(&lambda, 2 * i + 1, &(&l + &k2 * (0.5 * hk)), i);
        let k4 = rhs(&lambda, 2 * i + 2, &(&l + &k3 * hk), i);
        let next = &l + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (hk / 6.0);
        lambda.set_row(i + 1, &next);
    }

    // L(x, y) = -lambda(x - y) B / q2, indexed by x - y
    let l_of: Vec<f64> = (0..n_k).map(|m| -lambda[(m, n - 1)] * b / q2).collect();
    let mut psi = DMatrix::zeros(n_k, n_k);
    let mut phi = DMatrix::zeros(n_k, n_k);
    for i in 0..n_k {
        for j in 0..=i {
            psi[(i, j)] = f[(i, j)] + linalg::trapz(|r| l_of[i - r] * f[(r, j)], j, i, hk);
            phi[(i, j)] = h[(i, j)] - l_of[i - j] + linalg::trapz(|r| l_of[i - r] * h[(r, j)], j, i, hk);
        }
    }

    let g1a = g1_acute(plant, exo);
    let p_d = exo.p_d();
    let g4a = acute(&plant.g4, &p_d);
    let g2a: Vec<DVector<f64>> = grid.nodes().map(|x| acute(&plant.g2.eval(x), &p_d)).collect();
    let g3a: Vec<DVector<f64>> = grid.nodes().map(|x| acute(&plant.g3.eval(x), &p_d)).collect();
    let forcing: Vec<DVector<f64>> = (0..n_k)
        .map(|i| {
            let lam_i = lambda.row(i).transpose();
            let mut fo = g1a.transpose() * lam_i - &g3a[i] + &g4a * (q1 * psi[(i, 0)]);
            for k in 0..nv {
                fo[k] += linalg::trapz(|j| phi[(i, j)] * g3a[j][k], 0, i, hk)
                    + linalg::trapz(|j| psi[(i, j)] * g2a[j][k], 0, i, hk);
            }
            fo
        })
        .collect();
    let s_c = &exo.s - DMatrix::identity(nv, nv) * c;
    let s_ct = s_c.transpose();
    let mut lambdabar = DMatrix::zeros(n_k, nv);
    lambdabar.set_row(0, &chain.gbar0_row.transpose());
    let g = |l: &DVector<f64>, fo: &DVector<f64>| (&s_ct * l + fo) / q2;
    for i in 0..n_k - 1 {
        let l = lambdabar.row(i).transpose();
        let (f0, f1) = (&forcing[i], &forcing[i + 1]);
        let fm = (f0 + f1) * 0.5;
        let a1 = g(&l, f0);
        let a2 = g(&(&l + &a1 * (0.5 * hk)), &fm);
        let a3 = g(&(&l + &a2 * (0.5 * hk)), &fm);
        let a4 = g(&(&l + &a3 * hk), f1);
        let next = &l + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (hk / 6.0);
        lambdabar.set_row(i + 1, &next.transpose());
    }

    Ok(KernelSet { grid, f, h, psi, phi, lambda, lambdabar, params, b })
}

impl KernelSet {
    pub fn n_k(&self) -> usize {
        self.grid.n
    }

    pub fn lambda_at(&self, i: usize) -> DVector<f64> {
        self.lambda.row(i).transpose()
    }

    pub fn lambdabar_at(&self, i: usize) -> DVector<f64> {
        self.lambdabar.row(i).transpose()
    }

    pub fn lambda1(&self) -> DVector<f64> {
        self.lambda_at(self.grid.n - 1)
    }

    pub fn lambdabar1(&self) -> DVector<f64> {
        self.lambdabar_at(self.grid.n - 1)
    }

    /// `Psi(1, y_j)` over the kernel grid.
    pub fn psi1(&self) -> Vec<f64> {
        self.psi.row(self.grid.n - 1).iter().cloned().collect()
    }

    pub fn phi1(&self) -> Vec<f64> {
        self.phi.row(self.grid.n - 1).iter().cloned().collect()
    }

    pub fn psi_at(&self, x: f64, y: f64) -> f64 {
        bilinear_lower(&self.psi, x, y)
    }

    pub fn phi_at(&self, x: f64, y: f64) -> f64 {
        bilinear_lower(&self.phi, x, y)
    }

    /// Row interpolation of `lambda` at `x`.
    pub fn lambda_interp(&self, x: f64) -> DVector<f64> {
        super::interp_rows(&self.lambda, x)
    }

    pub fn lambdabar_interp(&self, x: f64) -> DVector<f64> {
        super::interp_rows(&self.lambdabar, x)
    }

    /// Sup over the grid of `|Psi(x, x) + d2 / (q1 + q2)|`.
    pub fn diagonal_residual(&self) -> f64 {
        let want = -self.params.d2 / (self.params.q1 + self.params.q2);
        (0..self.grid.n).map(|i| (self.psi[(i, i)] - want).abs()).fold(0.0, f64::max)
    }

    /// Sup over the grid of `|q2 Phi(x, 0) - q1 p Psi(x, 0) - lambda(x) B|`.
    pub fn boundary_residual(&self) -> f64 {
        let FhParams { q1, q2, p, .. } = self.params;
        let n = self.lambda.ncols();
        (0..self.grid.n)
            .map(|i| (q2 * self.phi[(i, 0)] - q1 * p * self.psi[(i, 0)] - self.lambda[(i, n - 1)] * self.b).abs())
            .fold(0.0, f64::max)
    }

    /// Centered-difference residuals of `q2 Psi_x - q1 Psi_y = d2 Phi` and
    /// `q2 (Phi_x + Phi_y) = d1 Psi` on the lattice `x, y in {0.1, ..., 0.9}`, `y < x`.
    pub fn pde_residual(&self) -> ResidualReport {
        let FhParams { q1, q2, d1, d2, .. } = self.params;
        let mut rep = ResidualReport::default();
        for (i, j) in self.grid.lattice_lower() {
            let dx = |m: &DMatrix<f64>| self.grid.ddx(m, i, j);
            let dy = |m: &DMatrix<f64>| self.grid.ddy(m, i, j);
            let r1 = q2 * dx(&self.psi) - q1 * dy(&self.psi) - d2 * self.phi[(i, j)];
            let r2 = q2 * (dx(&self.phi) + dy(&self.phi)) - d1 * self.psi[(i, j)];
            rep.push(vec![r1.abs(), r2.abs()]);
        }
        rep
    }
}
