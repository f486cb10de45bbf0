//! Barrier families, the nonovershooting chain `h_1..h_n`, the nonlinearity `f`
//! and the safe-gain thresholds.
//!
//! The chain is kept symbolic: every `h_i` is a linear combination of terms
//! `coef * g_{a,b}(z_1, t) * z_2^{m_2} ... z_n^{m_n}` where
//! `g_{a,b} = d^{a+b}(h + sigma) / de^a dt^b`. Differentiation in `z_j` and `t`
//! acts on the exponents, so all partials are exact once the family supplies
//! its mixed partials.

mod sigma;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub use sigma::{sigma_eval, RescueBump};

/// User-supplied mixed partials `d^{a+b} h / de^a dt^b`.
pub trait BarrierPartials: Send + Sync + fmt::Debug {
    fn partial(&self, a: usize, b: usize, e: f64, t: f64) -> f64;

    /// Lower bound of `h(., t)` over `[e_lo, e_hi]`. The default is exact for
    /// functions that are concave in `e`.
    fn lower_bound(&self, e_lo: f64, e_hi: f64, t: f64) -> f64 {
        self.partial(0, 0, e_lo, t).min(self.partial(0, 0, e_hi, t))
    }
}

#[derive(Debug, Clone)]
pub enum BarrierSpec {
    /// `h = e`.
    Affine,
    /// `h = m_delta exp(-sigma_delta t) - |e|`.
    TwoSidedDecay { m_delta: f64, sigma_delta: f64 },
    Custom(Arc<dyn BarrierPartials>),
}

impl BarrierSpec {
    pub fn two_sided_decay(m_delta: f64, sigma_delta: f64) -> Result<Self> {
        if !(m_delta > 0.0 && sigma_delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "two-sided decay needs m_delta > 0 and sigma_delta > 0 (got {m_delta}, {sigma_delta})"
            )));
        }
        Ok(BarrierSpec::TwoSidedDecay { m_delta, sigma_delta })
    }

    pub fn partial(&self, a: usize, b: usize, e: f64, t: f64) -> f64 {
        match self {
            BarrierSpec::Affine => match (a, b) {
                (0, 0) => e,
                (1, 0) => 1.0,
                _ => 0.0,
            },
            BarrierSpec::TwoSidedDecay { m_delta, sigma_delta } => match (a, b) {
                (0, b) => {
                    let d = m_delta * (-sigma_delta).powi(b as i32) * (-sigma_delta * t).exp();
                    if b == 0 {
                        d - e.abs()
                    } else {
                        d
                    }
                }
                (1, 0) => two_sided_theta(e),
                _ => 0.0,
            },
            BarrierSpec::Custom(p) => p.partial(a, b, e, t),
        }
    }

    pub fn h(&self, e: f64, t: f64) -> f64 {
        self.partial(0, 0, e, t)
    }

    /// `theta = dh/de`.
    pub fn theta(&self, e: f64, t: f64) -> f64 {
        self.partial(1, 0, e, t)
    }

    /// `delta(t)` for the two-sided family, `None` otherwise.
    pub fn delta(&self, t: f64) -> Option<f64> {
        match self {
            BarrierSpec::TwoSidedDecay { m_delta, sigma_delta } => Some(m_delta * (-sigma_delta * t).exp()),
            _ => None,
        }
    }

    pub fn lower_bound(&self, e_lo: f64, e_hi: f64, t: f64) -> f64 {
        match self {
            BarrierSpec::Affine => e_lo,
            BarrierSpec::TwoSidedDecay { .. } => {
                self.delta(t).unwrap_or(0.0) - e_lo.abs().max(e_hi.abs())
            }
            BarrierSpec::Custom(p) => p.lower_bound(e_lo, e_hi, t),
        }
    }
}

/// `-1` for `e > 0`, `+1` for `e <= 0`.
fn two_sided_theta(e: f64) -> f64 {
    if e > 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub k: Vec<f64>,
}

impl Gains {
    pub fn new(k: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = k.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::NonpositiveGain(bad));
        }
        Ok(Gains { k })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Mono {
    a: usize,
    b: usize,
    /// Exponents of `z_2..z_n`.
    m: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<Mono, f64>);

impl Poly {
    fn base(n: usize) -> Self {
        let mut p = BTreeMap::new();
        p.insert(Mono { a: 0, b: 0, m: vec![0; n.saturating_sub(1)] }, 1.0);
        Poly(p)
    }

    fn add_term(&mut self, mono: Mono, c: f64) {
        let e = self.0.entry(mono).or_insert(0.0);
        *e += c;
    }

    fn axpy(&mut self, s: f64, other: &Poly) {
        for (mono, c) in &other.0 {
            self.add_term(mono.clone(), s * c);
        }
    }

    /// `d/dz_j`, `j` one-based.
    fn d_z(&self, j: usize) -> Poly {
        let mut out = Poly::default();
        for (mono, &c) in &self.0 {
            if j == 1 {
                let mut m = mono.clone();
                m.a += 1;
                out.add_term(m, c);
            } else if mono.m[j - 2] > 0 {
                let mut m = mono.clone();
                let k = m.m[j - 2];
                m.m[j - 2] -= 1;
                out.add_term(m, c * k as f64);
            }
        }
        out
    }

    fn d_t(&self) -> Poly {
        let mut out = Poly::default();
        for (mono, &c) in &self.0 {
            let mut m = mono.clone();
            m.b += 1;
            out.add_term(m, c);
        }
        out
    }

    /// Multiplication by `z_j`, `j >= 2`.
    fn mul_z(&self, j: usize) -> Poly {
        let mut out = Poly::default();
        for (mono, &c) in &self.0 {
            let mut m = mono.clone();
            m.m[j - 2] += 1;
            out.add_term(m, c);
        }
        out
    }

    fn eval(&self, g: &GTable, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for (mono, &c) in &self.0 {
            if c == 0.0 {
                continue;
            }
            let mut term = c * g.get(mono.a, mono.b);
            for (k, &e) in mono.m.iter().enumerate() {
                if e > 0 {
                    term *= z[k + 1].powi(e as i32);
                }
            }
            s += term;
        }
        s
    }
}

/// Values of `g_{a,b}(z_1, t)` for `a, b <= n + 1`.
struct GTable {
    size: usize,
    vals: Vec<f64>,
}

impl GTable {
    fn new(spec: &BarrierSpec, bump: &RescueBump, z1: f64, t: f64, n: usize) -> Self {
        let size = n + 2;
        let mut vals = vec![0.0; size * size];
        for a in 0..size {
            for b in 0..size - a {
                let mut v = spec.partial(a, b, z1, t);
                if a == 0 {
                    v += sigma_eval(bump, t, b);
                }
                vals[a * size + b] = v;
            }
        }
        GTable { size, vals }
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        if a + b >= self.size {
            return 0.0;
        }
        self.vals[a * self.size + b]
    }
}

/// Symbolic chain for a fixed order `n` and gains `k_1..k_m`, `m <= n`.
#[derive(Debug, Clone)]
pub struct BarrierChain {
    n: usize,
    k: Vec<f64>,
    /// `h_1..h_{m+1}` (capped at `n`).
    h: Vec<Poly>,
    /// `sum_{j <= min(i, n-1)} dh_i/dz_j z_{j+1} + dh_i/dt` for each stored `h_i`.
    numer: Vec<Poly>,
    dz: Vec<Vec<Poly>>,
    dt: Vec<Poly>,
    /// `b f` as a single expanded polynomial (present when all `n` gains are given).
    bf: Option<Poly>,
}

/// Evaluated chain: `h_i`, `dh_i/dz_j` and `dh_i/dt` at one `(Z, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainValues {
    pub h: Vec<f64>,
    pub dh_dz: Vec<Vec<f64>>,
    pub dh_dt: Vec<f64>,
}

impl BarrierChain {
    pub fn new(n: usize, k: &[f64]) -> Self {
        assert!(n >= 1 && k.len() <= n);
        let mut h = vec![Poly::base(n)];
        let mut numer = Vec::new();
        let mut dz = Vec::new();
        let mut dt = Vec::new();
        loop {
            let i = h.len();
            let hi = &h[i - 1];
            let dzi: Vec<Poly> = (1..=i).map(|j| hi.d_z(j)).collect();
            let dti = hi.d_t();
            let mut num = dti.clone();
            for j in 1..=i.min(n - 1) {
                num.axpy(1.0, &dzi[j - 1].mul_z(j + 1));
            }
            dz.push(dzi);
            dt.push(dti);
            if i > k.len() || i == n {
                numer.push(num);
                break;
            }
            let mut next = num.clone();
            next.axpy(k[i - 1], hi);
            numer.push(num);
            h.push(next);
        }
        let bf = if k.len() == n {
            let mut p = numer[n - 1].clone();
            p.axpy(k[n - 1], &h[n - 1]);
            Some(p)
        } else {
            None
        };
        BarrierChain { n, k: k.to_vec(), h, numer, dz, dt, bf }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn table(&self, spec: &BarrierSpec, bump: &RescueBump, z: &[f64], t: f64) -> Result<GTable> {
        if z.len() != self.n {
            return Err(Error::Dimension(format!("Z has {} entries, chain order is {}", z.len(), self.n)));
        }
        if spec.theta(z[0], t) == 0.0 {
            return Err(Error::DomainError { e: z[0], t });
        }
        Ok(GTable::new(spec, bump, z[0], t, self.n))
    }

    pub fn eval(&self, spec: &BarrierSpec, bump: &RescueBump, z: &[f64], t: f64) -> Result<ChainValues> {
        let g = self.table(spec, bump, z, t)?;
        Ok(ChainValues {
            h: self.h.iter().map(|p| p.eval(&g, z)).collect(),
            dh_dz: self.dz.iter().map(|row| row.iter().map(|p| p.eval(&g, z)).collect()).collect(),
            dh_dt: self.dt.iter().map(|p| p.eval(&g, z)).collect(),
        })
    }

    /// `f` from the expanded polynomial `sum dh_n/dz_j z_{j+1} + dh_n/dt + k_n h_n`.
    pub fn f(&self, spec: &BarrierSpec, bump: &RescueBump, z: &[f64], t: f64, b: f64) -> Result<f64> {
        let g = self.table(spec, bump, z, t)?;
        let bf = self.bf.as_ref().ok_or_else(|| Error::Dimension("f needs all n gains".into()))?;
        Ok(bf.eval(&g, z) / b)
    }

    /// `f` with `h_n` rebuilt from the recursion out of `h_{n-1}`.
    pub fn f_dual(&self, spec: &BarrierSpec, bump: &RescueBump, z: &[f64], t: f64, b: f64) -> Result<f64> {
        if self.k.len() != self.n {
            return Err(Error::Dimension("f needs all n gains".into()));
        }
        let g = self.table(spec, bump, z, t)?;
        let n = self.n;
        let hn = if n == 1 {
            self.h[0].eval(&g, z)
        } else {
            self.numer[n - 2].eval(&g, z) + self.k[n - 2] * self.h[n - 2].eval(&g, z)
        };
        Ok((self.numer[n - 1].eval(&g, z) + self.k[n - 1] * hn) / b)
    }

    /// `(h_i, numerator_i)` at `(Z, t)` for the stored indices.
    fn h_and_numer(&self, spec: &BarrierSpec, bump: &RescueBump, z: &[f64], t: f64) -> Result<Vec<(f64, f64)>> {
        let g = self.table(spec, bump, z, t)?;
        Ok(self.h.iter().zip(&self.numer).map(|(h, m)| (h.eval(&g, z), m.eval(&g, z))).collect())
    }
}

pub fn chain_eval(spec: &BarrierSpec, bump: &RescueBump, gains: &Gains, z: &DVector<f64>, t: f64) -> Result<ChainValues> {
    BarrierChain::new(z.len(), &gains.k).eval(spec, bump, z.as_slice(), t)
}

pub fn f_eval(spec: &BarrierSpec, bump: &RescueBump, gains: &Gains, z: &DVector<f64>, t: f64, b: f64) -> Result<f64> {
    BarrierChain::new(z.len(), &gains.k).f(spec, bump, z.as_slice(), t, b)
}

/// Thresholds `kdot_1..kdot_{n-1}` at `(Z(tbar0), tbar0)`.
///
/// `kdot_i` depends on `k_1..k_{i-1}`, taken from `k`; entries of `k` past
/// `n - 2` are ignored.
pub fn min_gains(spec: &BarrierSpec, bump: &RescueBump, k: &[f64], z: &DVector<f64>, tbar0: f64) -> Result<Vec<f64>> {
    let n = z.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    if k.len() < n - 2 {
        return Err(Error::Dimension(format!("{} gains given, need {}", k.len(), n - 2)));
    }
    let chain = BarrierChain::new(n, &k[..n - 2]);
    let vals = chain.h_and_numer(spec, bump, z.as_slice(), tbar0)?;
    let mut out = Vec::with_capacity(n - 1);
    for (i, &(h, num)) in vals.iter().enumerate().take(n - 1) {
        if h == 0.0 {
            return Err(Error::ZeroBarrier { index: i + 1 });
        }
        out.push(-num / h);
    }
    Ok(out)
}

/// Largest thresholds over a set of candidate `Z(tbar0)` points.
pub fn min_gains_over(spec: &BarrierSpec, bump: &RescueBump, k: &[f64], zs: &[DVector<f64>], tbar0: f64) -> Result<Vec<f64>> {
    let mut best: Option<Vec<f64>> = None;
    for z in zs {
        let th = min_gains(spec, bump, k, z, tbar0)?;
        best = Some(match best {
            None => th,
            Some(b) => b.iter().zip(&th).map(|(x, y)| x.max(*y)).collect(),
        });
    }
    best.ok_or_else(|| Error::InvalidParameter("no candidate points".into()))
}

/// Picks `k_i = max(0, kdot_i) + margin` sequentially; `k_n = k_last`.
pub fn choose_gains(spec: &BarrierSpec, bump: &RescueBump, z: &DVector<f64>, tbar0: f64, margin: f64, k_last: f64) -> Result<Gains> {
    let n = z.len();
    let mut k = Vec::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let th = min_gains(spec, bump, &k, z, tbar0)?;
        k.push(th[i].max(0.0) + margin);
    }
    k.push(k_last);
    Gains::new(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn active_bump() -> RescueBump {
        RescueBump::for_value(-9.0, 2.0, 2.0, 0.058)
    }

    #[test]
    fn affine_case_matches_closed_form() {
        let (k1, k2, b) = (1.5, 4.0, 0.57);
        let bump = active_bump();
        let z = DVector::from_vec(vec![-0.7, 1.9]);
        let t = 0.9;
        let s = |o| sigma_eval(&bump, t, o);
        let cv = chain_eval(&BarrierSpec::Affine, &bump, &Gains::new(vec![k1, k2]).unwrap(), &z, t).unwrap();
        assert_relative_eq!(cv.h[0], z[0] + s(0), max_relative = 1e-13);
        assert_relative_eq!(cv.h[1], z[1] + s(1) + k1 * z[0] + k1 * s(0), max_relative = 1e-13);
        let f = f_eval(&BarrierSpec::Affine, &bump, &Gains::new(vec![k1, k2]).unwrap(), &z, t, b).unwrap();
        let want = ((k1 + k2) * z[1] + k1 * k2 * z[0] + s(2) + (k1 + k2) * s(1) + k1 * k2 * s(0)) / b;
        assert_relative_eq!(f, want, max_relative = 1e-13);
    }

    #[test]
    fn two_sided_case_matches_closed_form() {
        let spec = BarrierSpec::two_sided_decay(15.0, 0.5).unwrap();
        let bump = active_bump();
        let k1 = 30.0;
        let z = DVector::from_vec(vec![3.0, -2.0]);
        let t = 0.4;
        let cv = chain_eval(&spec, &bump, &Gains::new(vec![k1, 16.0]).unwrap(), &z, t).unwrap();
        let d = 15.0 * (-0.5 * t).exp();
        let want = -z[1] - 0.5 * d + sigma_eval(&bump, t, 1) - k1 * z[0].abs() + k1 * d + k1 * sigma_eval(&bump, t, 0);
        assert_relative_eq!(cv.h[1], want, max_relative = 1e-13);
    }

    #[test]
    fn zero_state_gives_zero_chain() {
        let z = DVector::zeros(3);
        let g = Gains::new(vec![1.0, 2.0, 3.0]).unwrap();
        let bump = RescueBump::inactive(0.0);
        let cv = chain_eval(&BarrierSpec::Affine, &bump, &g, &z, 1.0).unwrap();
        assert!(cv.h.iter().all(|&h| h == 0.0));
        assert_eq!(f_eval(&BarrierSpec::Affine, &bump, &g, &z, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn affine_threshold_is_ratio() {
        let bump = RescueBump::inactive(0.0);
        let z = DVector::from_vec(vec![8.0, -4.0]);
        let th = min_gains(&BarrierSpec::Affine, &bump, &[], &z, 0.0).unwrap();
        assert_relative_eq!(th[0], 0.5);
        let zero = min_gains(&BarrierSpec::Affine, &bump, &[], &DVector::from_vec(vec![8.0, 0.0]), 0.0).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn zero_barrier_is_reported() {
        let bump = RescueBump::inactive(0.0);
        let z = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(min_gains(&BarrierSpec::Affine, &bump, &[], &z, 0.0), Err(Error::ZeroBarrier { index: 1 })));
    }

    #[test]
    fn nonpositive_decay_rejected() {
        assert!(BarrierSpec::two_sided_decay(1.0, 0.0).is_err());
    }
}
