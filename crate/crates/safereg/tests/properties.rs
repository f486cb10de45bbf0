mod common;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use safereg::barrier::{min_gains, sigma_eval, BarrierChain, BarrierSpec, RescueBump};
use safereg::chain_transform::{build_chain, to_error, zn_dot, ChainMaps};
use safereg::exo_model::{evolve_exo, uav_exo};
use safereg::kernels::solve_controller_kernels;
use safereg::linalg;
use safereg::plant::{build_uav, riemann, riemann_inverse, Plant, PolyRow, UavParams};
use safereg::predictor::{predict_z, PredictionInput, SampledKernels};
use safereg::regulator::exp_bound;

struct Setup {
    plant: Plant,
    chain: ChainMaps,
    sk: SampledKernels,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let plant = build_uav(UavParams::default()).unwrap();
        let exo = uav_exo();
        let chain = build_chain(&plant, &exo);
        let k = solve_controller_kernels(&plant, &exo, &chain, 201).unwrap();
        Setup { sk: SampledKernels::new(&k, 20), plant, chain }
    })
}

fn field(a: f64, c: f64, cosine: bool) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..=20).map(|j| {
        let x = j as f64 / 20.0;
        if cosine { (a * pi * x).cos() + c } else { (a * pi * x).sin() + c }
    }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn thresholds_give_positive_chain(
        y1 in -5.0f64..10.0, y2 in -2.0f64..2.0,
        az in 0.5f64..4.0, cz in -1.0f64..1.0, aw in 0.5f64..4.0, cw in -1.0f64..1.0,
        v in proptest::collection::vec(-1.5f64..1.5, 6),
        slack in 0.01f64..5.0, k2 in 0.1f64..20.0, two_sided in any::<bool>(),
    ) {
        let s = setup();
        let spec = if two_sided { BarrierSpec::two_sided_decay(15.0, 0.5).unwrap() } else { BarrierSpec::Affine };
        let y = DVector::from_vec(vec![y1, y2]);
        let v = DVector::from_vec(v);
        let (z, w) = (field(az, cz, false), field(aw, cw, true));
        let tbar0 = 1.0 / s.plant.q2;
        let zp = predict_z(&PredictionInput { y: &y, v: &v, z: &z, w: &w, t: 0.0 }, &s.sk, &s.chain, &s.plant, tbar0).unwrap();
        let h = spec.h(zp[0], tbar0);
        prop_assume!(h != 0.0);
        let bump = if h <= 0.0 { RescueBump::for_value(h, 2.0, 2.0, tbar0) } else { RescueBump::inactive(tbar0) };
        let th = min_gains(&spec, &bump, &[], &zp, tbar0).unwrap();
        let k1 = th[0].max(0.0) + slack;
        let vals = BarrierChain::new(2, &[k1, k2]).eval(&spec, &bump, zp.as_slice(), tbar0).unwrap();
        for hi in &vals.h {
            prop_assert!(*hi > 0.0, "h = {:?}, thresholds {:?}", vals.h, th);
        }
    }
}

/// Random real matrix with prescribed spectrum: real eigenvalues and conjugate pairs.
fn hurwitz(n: usize, seed: &[f64]) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    let mut i = 0;
    let mut s = 0;
    while i < n {
        let re = -(0.05 + 3.0 * seed[s].abs());
        if i + 1 < n && seed[s + 1] > 0.0 {
            let im = 0.1 + 2.0 * seed[s + 2].abs();
            d[(i, i)] = re;
            d[(i + 1, i + 1)] = re;
            d[(i, i + 1)] = im;
            d[(i + 1, i)] = -im;
            i += 2;
        } else {
            d[(i, i)] = re * (1.0 + i as f64 * 0.37);
            i += 1;
        }
        s += 3;
    }
    let p = DMatrix::from_fn(n, n, |r, c| seed[30 + r * n + c] + if r == c { 1.5 } else { 0.0 });
    let pinv = p.clone().try_inverse().unwrap();
    p * d * pinv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exp_bound_dominates_matrix_exponential(n in 2usize..6, seed in proptest::collection::vec(-1.0f64..1.0, 60)) {
        let a = hurwitz(n, &seed);
        let b = exp_bound(&a).unwrap();
        for k in 0..50 {
            let t = 10.0 * k as f64 / 49.0;
            let lhs = linalg::spectral_norm(&linalg::expm(&a, t));
            prop_assert!(lhs <= b.eval(t) * (1.0 + 1e-9) + 1e-13, "t = {}, {} > {}", t, lhs, b.eval(t));
        }
    }
}

proptest! {
    #[test]
    fn exo_semigroup(t in 0.0f64..20.0, s in 0.0f64..20.0, v in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let m = uav_exo();
        let v = DVector::from_vec(v);
        let a = evolve_exo(&m, &v, t + s);
        let b = evolve_exo(&m, &evolve_exo(&m, &v, t), s);
        prop_assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn riemann_round_trip(ut in proptest::collection::vec(-5.0f64..5.0, 8), ux in proptest::collection::vec(-5.0f64..5.0, 8)) {
        let (z, w) = riemann(&ut, &ux, 147.0, 0.5);
        let (a, b) = riemann_inverse(&z, &w, 147.0, 0.5);
        for i in 0..8 {
            prop_assert!((a[i] - ut[i]).abs() < 1e-12 && (b[i] - ux[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn f_agrees_with_dual_path(
        z in proptest::collection::vec(-4.0f64..4.0, 3), t in 0.0f64..3.0,
        k in proptest::collection::vec(0.1f64..10.0, 3), hbar in -8.0f64..-0.1, two_sided in any::<bool>(),
    ) {
        let spec = if two_sided { BarrierSpec::two_sided_decay(15.0, 0.5).unwrap() } else { BarrierSpec::Affine };
        let bump = RescueBump::for_value(hbar, 2.0, 2.0, 0.05);
        let chain = BarrierChain::new(3, &k);
        let a = chain.f(&spec, &bump, &z, t, 0.7).unwrap();
        let b = chain.f_dual(&spec, &bump, &z, t, 0.7).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())), "{} vs {}", a, b);
    }

    #[test]
    fn chain_transform_derivative(
        n in 3usize..5, low in proptest::collection::vec(-2.0f64..2.0, 10), g in proptest::collection::vec(-1.0f64..1.0, 16),
        y in proptest::collection::vec(-3.0f64..3.0, 4), v in proptest::collection::vec(-1.0f64..1.0, 6), w0 in -2.0f64..2.0, b in 0.2f64..3.0,
    ) {
        let exo = uav_exo();
        let mut a = DMatrix::zeros(n, n);
        let mut c = 0;
        for i in 0..n {
            for j in 0..=i {
                a[(i, j)] = low[c];
                c += 1;
            }
            if i + 1 < n {
                a[(i, i + 1)] = 1.0;
            }
        }
        let plant = Plant {
            a: a.clone(),
            b,
            c: DVector::zeros(n),
            p: 1.0,
            q: 1.0,
            q1: 1.0,
            q2: 1.0,
            d1: 0.0,
            d2: 0.0,
            c_self: 0.0,
            g1: DMatrix::from_fn(n, 4, |r, k| g[r * 4 + k]),
            g2: PolyRow::zero(4),
            g3: PolyRow::zero(4),
            g4: DVector::zeros(4),
            g5: DVector::zeros(4),
        };
        let maps = build_chain(&plant, &exo);
        let y = DVector::from_vec(y[..n].to_vec());
        let v = DVector::from_vec(v);
        let zc = to_error(&maps, &y, &v);
        let ydot = &a * &y + plant.b_vec() * w0 + &plant.g1 * exo.p_d() * &v;
        let zdot = &maps.t_z * ydot + &maps.t_v * (&exo.s * &v);
        for i in 0..n - 1 {
            prop_assert!((zdot[i] - zc[i + 1]).abs() < 1e-9 * (1.0 + zc[i + 1].abs()), "row {}", i);
        }
        let last = zn_dot(&plant, &maps, &y, &v, w0);
        prop_assert!((zdot[n - 1] - last).abs() < 1e-9 * (1.0 + last.abs()));
    }
}

#[test]
fn sigma_vanishes_smoothly_at_the_end_of_the_rescue_window() {
    let bump = RescueBump::for_value(-7.0, 2.0, 2.0, 0.058);
    for order in 0..=4 {
        let mut prev = f64::INFINITY;
        for e in 2..=6 {
            let v = sigma_eval(&bump, bump.end() - 10f64.powi(-e), order).abs();
            assert!(v <= prev && v < 1e-6, "order {order}, delta 1e-{e}: {v}");
            prev = v;
        }
        assert_eq!(sigma_eval(&bump, bump.end(), order), 0.0);
    }
}
