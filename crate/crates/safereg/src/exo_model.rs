//! Marginally stable exogenous model generating the reference and the disturbances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct ExoModel {
    pub s_r: DMatrix<f64>,
    pub s_d: DMatrix<f64>,
    /// Reference output row, length `n_r`.
    pub pbar_r: DVector<f64>,
    /// Disturbance output map, `m_d x n_d`.
    pub pbar_d: DMatrix<f64>,
    /// `blockdiag(S_r, S_d)`.
    pub s: DMatrix<f64>,
    blocks: Option<Vec<Block>>,
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Zero,
    Rotation(usize, f64),
}

impl ExoModel {
    pub fn n_r(&self) -> usize {
        self.s_r.nrows()
    }
    pub fn n_d(&self) -> usize {
        self.s_d.nrows()
    }
    pub fn n_v(&self) -> usize {
        self.n_r() + self.n_d()
    }
    pub fn m_d(&self) -> usize {
        self.pbar_d.nrows()
    }

    /// `P_r = [Pbar_r, 0]` as a row of length `n_v`.
    pub fn p_r(&self) -> DVector<f64> {
        let mut p = DVector::zeros(self.n_v());
        p.rows_mut(0, self.n_r()).copy_from(&self.pbar_r);
        p
    }

    /// `P_d = [0, Pbar_d]`, `m_d x n_v`.
    pub fn p_d(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.m_d(), self.n_v());
        p.view_mut((0, self.n_r()), (self.m_d(), self.n_d())).copy_from(&self.pbar_d);
        p
    }

    pub fn v_r(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(0, self.n_r()).into_owned()
    }
    pub fn v_d(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(self.n_r(), self.n_d()).into_owned()
    }
}

pub fn validate_exo(
    s_r: DMatrix<f64>,
    s_d: DMatrix<f64>,
    pbar_r: DVector<f64>,
    pbar_d: DMatrix<f64>,
) -> Result<ExoModel> {
    let (n_r, n_d) = (s_r.nrows(), s_d.nrows());
    if s_r.ncols() != n_r || s_d.ncols() != n_d {
        return Err(Error::Dimension("S_r and S_d must be square".into()));
    }
    if pbar_r.len() != n_r {
        return Err(Error::Dimension(format!("Pbar_r has {} entries, S_r is {}x{}", pbar_r.len(), n_r, n_r)));
    }
    if pbar_d.ncols() != n_d {
        return Err(Error::Dimension(format!("Pbar_d has {} columns, S_d is {}x{}", pbar_d.ncols(), n_d, n_d)));
    }
    let n_v = n_r + n_d;
    let mut s = DMatrix::zeros(n_v, n_v);
    s.view_mut((0, 0), (n_r, n_r)).copy_from(&s_r);
    s.view_mut((n_r, n_r), (n_d, n_d)).copy_from(&s_d);

    let tol = 1e-9 * (1.0 + s.norm());
    let max_re = linalg::eigenvalues(&s).iter().map(|l| l.re.abs()).fold(0.0, f64::max);
    if max_re > tol {
        return Err(Error::SpectrumOffAxis { max_re, tol });
    }
    if n_r > 0 && linalg::numerical_rank(&linalg::observability_matrix(&s_r, &pbar_r)) < n_r {
        return Err(Error::NotObservable("(S_r, Pbar_r)".into()));
    }
    if n_v > 0 {
        let (_, p) = linalg::eigen_decomposition(&s)?;
        let cond = linalg::cond2_complex(&p);
        if cond > 1e8 {
            return Err(Error::Defective { cond });
        }
    }
    let blocks = detect_blocks(&s);
    Ok(ExoModel { s_r, s_d, pbar_r, pbar_d, s, blocks })
}

/// Recognizes a block diagonal of zero scalars and `[[0, w], [-w, 0]]` rotations.
fn detect_blocks(s: &DMatrix<f64>) -> Option<Vec<Block>> {
    let n = s.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let two = i + 1 < n && s[(i, i + 1)] != 0.0;
        let size = if two { 2 } else { 1 };
        for r in i..i + size {
            for c in 0..n {
                if (c < i || c >= i + size) && s[(r, c)] != 0.0 {
                    return None;
                }
            }
        }
        if two {
            let w = s[(i, i + 1)];
            if s[(i, i)] != 0.0 || s[(i + 1, i + 1)] != 0.0 || s[(i + 1, i)] != -w {
                return None;
            }
            blocks.push(Block::Rotation(i, w));
        } else {
            if s[(i, i)] != 0.0 {
                return None;
            }
            blocks.push(Block::Zero);
        }
        i += size;
    }
    Some(blocks)
}

/// `v(t) = exp(S t) v0`; closed form for rotation blocks, matrix exponential otherwise.
pub fn evolve_exo(model: &ExoModel, v0: &DVector<f64>, t: f64) -> DVector<f64> {
    match &model.blocks {
        Some(blocks) => {
            let mut v = v0.clone();
            for b in blocks {
                if let Block::Rotation(i, w) = *b {
                    let (sn, cs) = (w * t).sin_cos();
                    let (a, c) = (v0[i], v0[i + 1]);
                    v[i] = cs * a + sn * c;
                    v[i + 1] = -sn * a + cs * c;
                }
            }
            v
        }
        None => linalg::expm(&model.s, t) * v0,
    }
}

/// `exp(S t)` as a matrix.
pub fn exo_exp(model: &ExoModel, t: f64) -> DMatrix<f64> {
    let n = model.n_v();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        m.set_column(k, &evolve_exo(model, &e, t));
    }
    m
}

/// `(r, d) = (Pbar_r v_r, Pbar_d v_d)`.
pub fn signals(model: &ExoModel, v: &DVector<f64>) -> (f64, DVector<f64>) {
    let r = model.pbar_r.dot(&model.v_r(v));
    let d = &model.pbar_d * model.v_d(v);
    (r, d)
}

/// Exosystem of the cable-payload model: a `0.25 pi` rad/s reference
/// rotation and two wind rotations at 0.25 and 0.5 rad/s.
pub fn uav_exo() -> ExoModel {
    let wr = 0.25 * std::f64::consts::PI;
    let s_r = DMatrix::from_row_slice(2, 2, &[0.0, wr, -wr, 0.0]);
    let mut s_d = DMatrix::zeros(4, 4);
    s_d[(0, 1)] = 0.25;
    s_d[(1, 0)] = -0.25;
    s_d[(2, 3)] = 0.5;
    s_d[(3, 2)] = -0.5;
    validate_exo(s_r, s_d, DVector::from_vec(vec![1.0, 1.0]), DMatrix::identity(4, 4)).expect("uav exosystem is valid")
}

/// `v(0) = [0, 1, 0, 1, 0, 1]`: sine/cosine pairs.
pub fn uav_v0() -> DVector<f64> {
    DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unstable_reference_is_rejected() {
        let r = validate_exo(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(0, 0), DVector::from_element(1, 1.0), DMatrix::zeros(0, 0));
        assert!(matches!(r, Err(Error::SpectrumOffAxis { .. })));
    }

    #[test]
    fn constant_reference_is_valid() {
        let m = validate_exo(DMatrix::zeros(1, 1), DMatrix::zeros(0, 0), DVector::from_element(1, 1.0), DMatrix::zeros(0, 0)).unwrap();
        let v0 = DVector::from_element(1, 3.0);
        assert_abs_diff_eq!(evolve_exo(&m, &v0, 7.0)[0], 3.0);
    }

    #[test]
    fn uav_reference_is_sin_plus_cos() {
        let m = uav_exo();
        let t = 1.3;
        let v = evolve_exo(&m, &uav_v0(), t);
        let wr = 0.25 * std::f64::consts::PI;
        assert_abs_diff_eq!(v[0], (wr * t).sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], (wr * t).cos(), epsilon = 1e-14);
        let (r, d) = signals(&m, &v);
        assert_abs_diff_eq!(r, (wr * t).sin() + (wr * t).cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], (0.5 * t).sin(), epsilon = 1e-14);
    }

    #[test]
    fn unobservable_reference_pair() {
        let s_r = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let r = validate_exo(s_r, DMatrix::zeros(0, 0), DVector::from_vec(vec![0.0, 0.0]), DMatrix::zeros(0, 0));
        assert!(matches!(r, Err(Error::NotObservable(_))));
    }
}
