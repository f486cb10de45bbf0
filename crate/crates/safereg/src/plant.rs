//! Structural description of the ODE-PDE cascade and the cable-payload instance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Row-valued polynomial `G(x) = sum_k coeffs[k] x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyRow {
    pub coeffs: Vec<DVector<f64>>,
}

impl PolyRow {
    pub fn zero(m: usize) -> Self {
        PolyRow { coeffs: vec![DVector::zeros(m)] }
    }
    pub fn linear(slope: DVector<f64>) -> Self {
        let m = slope.len();
        PolyRow { coeffs: vec![DVector::zeros(m), slope] }
    }
    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.len())
    }
    pub fn eval(&self, x: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        let mut xp = 1.0;
        for c in &self.coeffs {
            out += c * xp;
            xp *= x;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b: f64,
    /// Row `C` of length `n`.
    pub c: DVector<f64>,
    pub p: f64,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub d1: f64,
    pub d2: f64,
    pub c_self: f64,
    pub g1: DMatrix<f64>,
    pub g2: PolyRow,
    pub g3: PolyRow,
    pub g4: DVector<f64>,
    pub g5: DVector<f64>,
}

impl Plant {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m_d(&self) -> usize {
        self.g1.ncols()
    }
    /// `B = [0, ..., 0, b]^T`.
    pub fn b_vec(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.n());
        v[self.n() - 1] = self.b;
        v
    }
}

/// Checks companion form, positivity and observability of `(A, C)`.
pub fn validate_plant(raw: Plant) -> Result<Plant> {
    let plant = validate_structure(raw)?;
    let n = plant.n();
    if linalg::numerical_rank(&linalg::observability_matrix(&plant.a, &plant.c)) < n {
        return Err(Error::NotObservable("(A, C)".into()));
    }
    Ok(plant)
}

/// `(A, C)` observability in the sense of the rank test.
pub fn is_observable(plant: &Plant) -> bool {
    linalg::numerical_rank(&linalg::observability_matrix(&plant.a, &plant.c)) == plant.n()
}

/// All checks of [`validate_plant`] except observability of `(A, C)`, which no
/// part of the design uses. The cable-payload model needs this: its `C = [0, 2]`
/// only sees the velocity.
pub fn validate_structure(raw: Plant) -> Result<Plant> {
    let n = raw.a.nrows();
    if n == 0 || raw.a.ncols() != n {
        return Err(Error::Dimension("A must be square and nonempty".into()));
    }
    if raw.c.len() != n {
        return Err(Error::Dimension(format!("C has {} entries, expected {}", raw.c.len(), n)));
    }
    let m = raw.g1.ncols();
    if raw.g1.nrows() != n || raw.g4.len() != m || raw.g5.len() != m || raw.g2.dim() != m || raw.g3.dim() != m {
        return Err(Error::Dimension("disturbance maps disagree on m_d".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let want = if j == i + 1 { 1.0 } else { 0.0 };
            if raw.a[(i, j)] != want {
                return Err(Error::BadCompanionForm(format!("A[{}][{}] = {} (expected {})", i, j, raw.a[(i, j)], want)));
            }
        }
    }
    if !(raw.b > 0.0) {
        return Err(Error::NonpositiveGain(raw.b));
    }
    if !(raw.q1 > 0.0 && raw.q2 > 0.0) {
        return Err(Error::NonpositiveSpeed { q1: raw.q1, q2: raw.q2 });
    }
    Ok(raw)
}

/// Rank test for the pair `(S_d, (G5 + G4) Pbar_d)`. The row is tested through
/// its Krylov sequence `r, r S_d, ...`, the only reading under which the pair
/// type-checks. Nothing in the design depends on it, so callers only warn.
pub fn disturbance_pair_full_rank(plant: &Plant, exo: &crate::exo_model::ExoModel) -> bool {
    let nd = exo.n_d();
    if nd == 0 {
        return true;
    }
    let row = exo.pbar_d.transpose() * (&plant.g5 + &plant.g4);
    linalg::numerical_rank(&linalg::observability_matrix(&exo.s_d, &row)) == nd
}

/// Physical parameters of the cable-suspended payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavParams {
    pub length: f64,
    pub rho_lin: f64,
    pub m_l: f64,
    pub g: f64,
    pub d_c: f64,
    pub d_0: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        UavParams { length: 1.0, rho_lin: 0.5, m_l: 15.0, g: 9.8, d_c: -1.0, d_0: -1.0 }
    }
}

/// Riemann-variable model of the cable with the payload ODE at `x = 0`.
///
/// Wind enters as `G1 = [[1,0,0,0],[1,1,1,1]]`, `G2(x) = [x,0,0,0]`,
/// `G3(x) = [0,x,0,0]`, `G4 = [0,1,0,1]`, `G5 = [1,0,1,0]`.
pub fn build_uav(params: UavParams) -> Result<Plant> {
    let UavParams { length, rho_lin, m_l, g, d_c, d_0 } = params;
    if !(length > 0.0 && rho_lin > 0.0 && m_l > 0.0 && g > 0.0) {
        return Err(Error::InvalidParameter("L, rho, M_L and g must be positive".into()));
    }
    if (length - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("only unit cable length is supported".into()));
    }
    let t0 = m_l * g;
    let speed = (t0 / rho_lin).sqrt();
    let coupling = -d_c / (2.0 * rho_lin);
    let root = (t0 * rho_lin).sqrt();
    let a22 = (-d_0 - root) / m_l;
    let b = root / m_l;
    let plant = Plant {
        a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, a22]),
        b,
        c: DVector::from_vec(vec![0.0, 2.0]),
        p: 1.0,
        q: 1.0,
        q1: speed,
        q2: speed,
        d1: coupling,
        d2: coupling,
        c_self: coupling,
        g1: DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]),
        g2: PolyRow::linear(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])),
        g3: PolyRow::linear(DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0])),
        g4: DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]),
        g5: DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]),
    };
    validate_structure(plant)
}

/// Riemann invariants `z = u_t - c u_x`, `w = u_t + c u_x` with `c = sqrt(T0/rho)`.
pub fn riemann(u_t: &[f64], u_x: &[f64], t0: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let c = (t0 / rho).sqrt();
    let z = u_t.iter().zip(u_x).map(|(a, b)| a - c * b).collect();
    let w = u_t.iter().zip(u_x).map(|(a, b)| a + c * b).collect();
    (z, w)
}

/// Inverse of [`riemann`].
pub fn riemann_inverse(z: &[f64], w: &[f64], t0: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let c = (t0 / rho).sqrt();
    let u_t = z.iter().zip(w).map(|(a, b)| 0.5 * (a + b)).collect();
    let u_x = z.iter().zip(w).map(|(a, b)| (b - a) / (2.0 * c)).collect();
    (u_t, u_x)
}

/// Initial data: gridded fields plus ODE and exosystem states.
#[derive(Debug, Clone)]
pub struct FieldIC {
    pub z0: Vec<f64>,
    pub w0: Vec<f64>,
    pub y0: DVector<f64>,
    pub v0: DVector<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uav_numbers() {
        let p = build_uav(UavParams::default()).unwrap();
        assert_abs_diff_eq!(p.q1, 294f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.c_self, 1.0);
        assert_abs_diff_eq!(p.a[(1, 1)], -0.504_880_939_982_741_6, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b, 0.571_547_606_649_408_3, epsilon = 1e-12);
        assert!(!is_observable(&p));
        assert!(disturbance_pair_full_rank(&p, &crate::exo_model::uav_exo()));
        assert!(matches!(validate_plant(p), Err(Error::NotObservable(_))));
    }

    #[test]
    fn companion_violation() {
        let mut p = build_uav(UavParams::default()).unwrap();
        p.a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        p.c = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        p.g1 = DMatrix::zeros(3, 4);
        assert!(matches!(validate_plant(p), Err(Error::BadCompanionForm(_))));
    }

    #[test]
    fn zero_gain() {
        let mut p = build_uav(UavParams::default()).unwrap();
        p.b = 0.0;
        assert!(matches!(validate_plant(p), Err(Error::NonpositiveGain(_))));
    }
}
