//! Small dense linear-algebra helpers shared by the design modules.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Numerical rank with threshold `1e-8 * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * smax).count()
}

/// Rows `c, cA, ..., cA^{n-1}`.
pub fn observability_matrix(a: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut o = DMatrix::zeros(n, n);
    let mut row = c.transpose();
    for k in 0..n {
        o.set_row(k, &row);
        row = &row * a;
    }
    o
}

/// Columns `b, Ab, ..., A^{n-1}b`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut k = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        k.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    k
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.clone().complex_eigenvalues().iter().cloned().collect()
}

pub fn max_real_part(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn format_eigs(eigs: &[C64]) -> String {
    let parts: Vec<String> = eigs
        .iter()
        .map(|l| {
            if l.im.abs() < 1e-12 {
                format!("{:.6}", l.re)
            } else {
                format!("{:.6}{:+.6}i", l.re, l.im)
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

/// Errors with the offending spectrum unless every eigenvalue has negative real part.
pub fn check_hurwitz(a: &DMatrix<f64>, what: &str) -> Result<()> {
    let eigs = eigenvalues(a);
    if eigs.iter().all(|l| l.re < 0.0) {
        Ok(())
    } else {
        Err(Error::NotHurwitz { what: what.to_string(), eigs: format_eigs(&eigs) })
    }
}

/// Eigenvalues with a unit-column eigenvector matrix.
///
/// Eigenvalues are grouped into clusters; each cluster's eigenvectors span the
/// numerical null space of `A - lambda I`. When the geometric multiplicity falls
/// short the matrix is reported as defective (infinite condition number).
pub fn eigen_decomposition(a: &DMatrix<f64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    let eigs = eigenvalues(a);
    let scale = 1.0 + a.norm();
    let ac: DMatrix<C64> = a.map(|x| C64::new(x, 0.0));
    let mut used = vec![false; n];
    let mut vecs: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        if used[i] {
            continue;
        }
        let cluster: Vec<usize> =
            (i..n).filter(|&j| !used[j] && (eigs[j] - eigs[i]).norm() < 1e-7 * scale).collect();
        let m = cluster.len();
        let lam: C64 = cluster.iter().map(|&j| eigs[j]).sum::<C64>() / (m as f64);
        let shifted = &ac - DMatrix::<C64>::identity(n, n) * lam;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
        let null_dim = order.iter().filter(|&&k| svd.singular_values[k] < 1e-6 * smax).count();
        if null_dim < m && m > 1 {
            return Err(Error::Defective { cond: f64::INFINITY });
        }
        for &k in order.iter().take(m) {
            let row = v_t.row(k);
            let col: DVector<C64> = DVector::from_iterator(n, row.iter().map(|z| z.conj()));
            vecs.push(col);
        }
        for &j in &cluster {
            used[j] = true;
            vals.push(eigs[j]);
        }
    }
    let p = DMatrix::from_columns(&vecs);
    Ok((vals, p))
}

pub fn cond2_complex(p: &DMatrix<C64>) -> f64 {
    let sv = p.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// `exp(A t)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let at = a * t;
    let norm = at.abs().row_sum().iter().cloned().fold(0.0, f64::max);
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = &at / 2f64.powi(s as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &scaled / (k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Monic polynomial coefficients (highest power first) with the given roots.
pub fn poly_from_roots(roots: &[C64]) -> Vec<f64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// Output-injection gain `L` placing the spectrum of `S - L c` at `poles`
/// (Ackermann's formula applied to the dual pair).
pub fn place_observer(s: &DMatrix<f64>, c: &DVector<f64>, poles: &[C64]) -> Result<DVector<f64>> {
    let n = s.nrows();
    if poles.len() != n {
        return Err(Error::Dimension(format!("{} poles for order {}", poles.len(), n)));
    }
    let o = observability_matrix(s, c);
    if numerical_rank(&o) < n {
        return Err(Error::NotObservable("observer pole placement".into()));
    }
    let coef = poly_from_roots(poles);
    let mut phi = DMatrix::<f64>::zeros(n, n);
    let mut pw = DMatrix::<f64>::identity(n, n);
    for k in 0..=n {
        phi += &pw * coef[n - k];
        pw = &pw * s;
    }
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let x = o.lu().solve(&en).ok_or_else(|| Error::NotObservable("singular observability matrix".into()))?;
    Ok(phi * x)
}

/// Trapezoid weights on a uniform grid of `n + 1` nodes over `[0, 1]`.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let dx = 1.0 / n as f64;
    let mut w = vec![dx; n + 1];
    w[0] = 0.5 * dx;
    w[n] = 0.5 * dx;
    w
}

/// Trapezoid rule for samples over nodes `lo..=hi` with spacing `h`.
pub fn trapz(vals: impl Fn(usize) -> f64, lo: usize, hi: usize, h: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut s = 0.5 * (vals(lo) + vals(hi));
    for k in lo + 1..hi {
        s += vals(k);
    }
    s * h
}

/// L2 norm of grid samples on `[0, 1]` by the trapezoid rule.
pub fn l2_norm(f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let w = trapezoid_weights(n);
    f.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b)
}

/// Linear interpolation of uniform samples on `[0, 1]`.
pub fn interp_uniform(vals: &[f64], x: f64) -> f64 {
    let n = vals.len() - 1;
    if n == 0 {
        return vals[0];
    }
    let s = (x.clamp(0.0, 1.0)) * n as f64;
    let i = (s.floor() as usize).min(n - 1);
    let fr = s - i as f64;
    vals[i] * (1.0 - fr) + vals[i + 1] * fr
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expm_of_rotation_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = expm(&a, 2.0);
        assert_abs_diff_eq!(e[(0, 0)], 2f64.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 1)], 2f64.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 0)], -2f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn placement_hits_requested_poles() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 0.785, -0.785, 0.0]);
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let poles = [C64::new(-2.0, 0.0), C64::new(-3.0, 0.0)];
        let l = place_observer(&s, &c, &poles).unwrap();
        let cl = &s - &l * c.transpose();
        let mut e: Vec<f64> = eigenvalues(&cl).iter().map(|z| z.re).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(e[0], -3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e[1], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn defective_matrix_is_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(matches!(eigen_decomposition(&a), Err(Error::Defective { .. })));
    }

    #[test]
    fn repeated_but_diagonalizable_is_fine() {
        let a = DMatrix::<f64>::identity(3, 3) * -2.0;
        let (_, p) = eigen_decomposition(&a).unwrap();
        assert_abs_diff_eq!(cond2_complex(&p), 1.0, epsilon = 1e-9);
    }
}
