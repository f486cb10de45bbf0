//! Rescue bump `sigma(t)` that lifts an initially unsafe barrier to `epsilon`.

/// Smooth, compactly supported offset added to the barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescueBump {
    pub active: bool,
    /// `h(e(tbar0), tbar0)`, or a certified lower bound of it.
    pub h_at_tbar0: f64,
    pub epsilon: f64,
    pub t_a: f64,
    pub tbar0: f64,
}

impl RescueBump {
    pub fn inactive(tbar0: f64) -> Self {
        RescueBump { active: false, h_at_tbar0: 0.0, epsilon: 2.0, t_a: 2.0, tbar0 }
    }

    /// Active iff `h_at_tbar0 <= 0`.
    pub fn for_value(h_at_tbar0: f64, epsilon: f64, t_a: f64, tbar0: f64) -> Self {
        RescueBump { active: h_at_tbar0 <= 0.0, h_at_tbar0, epsilon, t_a, tbar0 }
    }

    pub fn end(&self) -> f64 {
        self.tbar0 + self.t_a
    }
}

/// Coefficients (in `u = 1/s`) of `R_k` with `d^k/ds^k e^{-1/s^2} = R_k(1/s) e^{-1/s^2}`.
fn bump_poly(order: usize) -> Vec<f64> {
    let mut r = vec![1.0];
    for _ in 0..order {
        // d/ds [R(u) e^{-u^2}] with du/ds = -u^2 gives -u^2 R'(u) + 2 u^3 R(u)
        let mut next = vec![0.0; r.len() + 3];
        for (i, &c) in r.iter().enumerate() {
            if i > 0 {
                next[i + 1] -= i as f64 * c;
            }
            next[i + 3] += 2.0 * c;
        }
        r = next;
    }
    r
}

/// `sigma^{(order)}(t)`.
pub fn sigma_eval(bump: &RescueBump, t: f64, order: usize) -> f64 {
    if !bump.active || t >= bump.end() {
        return 0.0;
    }
    let s = t - bump.end();
    let u = 1.0 / s;
    let u2 = u * u;
    if u2 > 740.0 {
        return 0.0;
    }
    let r = bump_poly(order);
    let mut val = 0.0;
    let mut up = 1.0;
    for c in &r {
        val += c * up;
        up *= u;
    }
    let amp = (1.0 / (bump.t_a * bump.t_a)).exp() * (bump.epsilon - bump.h_at_tbar0);
    amp * val * (-u2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn value_at_tbar0() {
        let b = RescueBump::for_value(-3.0, 2.0, 2.0, 0.058);
        assert_relative_eq!(sigma_eval(&b, 0.058, 0), 5.0, max_relative = 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = RescueBump::for_value(-1.0, 2.0, 2.0, 0.05);
        let t = 0.9;
        for k in 0..3 {
            let h = 1e-5;
            let fd = (sigma_eval(&b, t + h, k) - sigma_eval(&b, t - h, k)) / (2.0 * h);
            assert_relative_eq!(fd, sigma_eval(&b, t, k + 1), max_relative = 1e-6);
        }
    }
}
