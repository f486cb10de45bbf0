//! Modified Bessel functions of the first kind, orders 0 and 1.

const SERIES_LIMIT: f64 = 15.0;

fn series(nu: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = if nu == 0 { 1.0 } else { h };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= h2 / (k * (k + nu as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
        k += 1.0;
    }
}

/// `e^{-x} I_nu(x)` from the large-argument expansion.
fn scaled_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

pub fn i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        series(0, ax)
    } else {
        scaled_asymptotic(0, ax) * ax.exp()
    }
}

pub fn i1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT { series(1, ax) } else { scaled_asymptotic(1, ax) * ax.exp() };
    v.copysign(x)
}

/// `2 I_1(a) / a`, continuous through `a = 0` where it equals 1.
pub fn i1_ratio(a: f64) -> f64 {
    let aa = a.abs();
    if aa < SERIES_LIMIT {
        let h2 = 0.25 * aa * aa;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= h2 / (k * (k + 1.0));
            sum += term;
            if term <= 1e-17 * sum {
                return sum;
            }
            k += 1.0;
        }
    } else {
        2.0 * i1(aa) / aa
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        // scipy.special.iv
        assert_relative_eq!(i0(1.0), 1.266_065_877_752_008_4, max_relative = 1e-14);
        assert_relative_eq!(i1(1.0), 0.565_159_103_992_485, max_relative = 1e-14);
        assert_relative_eq!(i0(20.0), 43_558_282.559_553_53, max_relative = 1e-12);
        assert_relative_eq!(i1(20.0), 42_454_973.385_127_79, max_relative = 1e-12);
    }

    #[test]
    fn branches_agree_at_switch() {
        let lo = series(0, SERIES_LIMIT);
        let hi = scaled_asymptotic(0, SERIES_LIMIT) * SERIES_LIMIT.exp();
        assert_relative_eq!(lo, hi, max_relative = 1e-12);
        assert_relative_eq!(i1_ratio(14.999), 2.0 * i1(14.999) / 14.999, max_relative = 1e-13);
    }
}
