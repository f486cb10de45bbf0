//! First transformation `Z = T_z Y + T_v v` to a chain of integrators.

use nalgebra::{DMatrix, DVector};

use crate::exo_model::ExoModel;
use crate::plant::Plant;

#[derive(Debug, Clone)]
pub struct ChainMaps {
    pub t_z: DMatrix<f64>,
    pub t_v: DMatrix<f64>,
    /// Feedback row `K` (length `n`).
    pub k: DVector<f64>,
    /// `(lambda_n + P_r S^n) / b`, length `n_v`.
    pub gbar0_row: DVector<f64>,
    /// `varrho[i-1][j-1]` holds the 1-indexed constant for `j <= i`.
    pub varrho: Vec<Vec<f64>>,
    /// `lambda_rows[i]` for `i = 0..=n`.
    pub lambda_rows: Vec<DVector<f64>>,
}

/// `G1 P_d` with rows `g_j` (`n x n_v`).
pub fn g1_acute(plant: &Plant, exo: &ExoModel) -> DMatrix<f64> {
    &plant.g1 * exo.p_d()
}

pub fn build_chain(plant: &Plant, exo: &ExoModel) -> ChainMaps {
    let n = plant.n();
    let a = |i: usize, j: usize| plant.a[(i - 1, j - 1)];
    let mut rho: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 1..=n {
        let mut row = vec![0.0; i];
        if i == 1 {
            row[0] = a(1, 1);
        } else {
            let prev = &rho[i - 2];
            row[0] = a(i, 1) + (1..i).map(|j| prev[j - 1] * a(j, 1)).sum::<f64>();
            for k in 2..i {
                row[k - 1] = a(i, k) + prev[k - 2] + (k..i).map(|j| prev[j - 1] * a(j, k)).sum::<f64>();
            }
            row[i - 1] = a(i, i) + prev[i - 2];
        }
        rho.push(row);
    }

    let mut t_z = DMatrix::identity(n, n);
    for i in 1..n {
        for j in 0..i {
            t_z[(i, j)] = rho[i - 1][j];
        }
    }

    let g = g1_acute(plant, exo);
    let s = &exo.s;
    let p_r = exo.p_r();
    let nv = exo.n_v();
    let mut lambdas = vec![DVector::zeros(nv)];
    for i in 1..=n {
        let mut li = -g.row(i - 1).transpose();
        if i >= 2 {
            for j in 1..i {
                li -= g.row(j - 1).transpose() * rho[i - 2][j - 1];
            }
        }
        li += (lambdas[i - 1].transpose() * s).transpose();
        lambdas.push(li);
    }

    let mut t_v = DMatrix::zeros(n, nv);
    let mut prs = p_r.transpose();
    t_v.set_row(0, &(-&prs));
    for (i, l) in lambdas.iter().enumerate().take(n).skip(1) {
        prs = &prs * s;
        t_v.set_row(i, &(-(l.transpose() + &prs)));
    }
    let prs_n = p_r.transpose() * crate::linalg::matrix_power(s, n);
    let gbar0_row = (lambdas[n].transpose() + prs_n).transpose() / plant.b;
    let k = DVector::from_vec(rho[n - 1].clone()) / plant.b;
    ChainMaps { t_z, t_v, k, gbar0_row, varrho: rho, lambda_rows: lambdas }
}

pub fn to_error(maps: &ChainMaps, y: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    &maps.t_z * y + &maps.t_v * v
}

/// `Y = T_z^{-1}(Z - T_v v)`; `T_z` is unit lower triangular.
pub fn from_error(maps: &ChainMaps, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let rhs = z - &maps.t_v * v;
    maps.t_z.solve_lower_triangular(&rhs).expect("unit lower triangular")
}

/// `dz_n/dt` from the plant: `b w(0) + b K.Y - (lambda_n + P_r S^n) v`.
pub fn zn_dot(plant: &Plant, maps: &ChainMaps, y: &DVector<f64>, v: &DVector<f64>, w0: f64) -> f64 {
    plant.b * (w0 + maps.k.dot(y) - maps.gbar0_row.dot(v))
}
