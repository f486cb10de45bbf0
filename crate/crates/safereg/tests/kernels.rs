use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use safereg::chain_transform::build_chain;
use safereg::exo_model::uav_exo;
use safereg::kernels::{observed_orders, solve_controller_kernels, solve_observer_kernels, HurwitzPolicy, ObserverStructure};
use safereg::plant::{build_uav, UavParams};
use safereg::Error;

// Frozen from an independent NumPy/SciPy implementation at N_k = 201.
const LAMBDA1: [f64; 2] = [0.0, 0.753_255_740_383_494_4];
const LAMBDABAR1: [f64; 6] = [
    -0.970_432_660_997_861_4,
    -1.063_670_697_077_416_6,
    -1.574_269_003_466_688_6,
    -2.097_340_065_974_973,
    -1.555_701_450_414_11,
    -1.679_328_903_345_545_2,
];
const LAMBDA_OBS1: [f64; 4] = [1.227_979_214_090_659_8, 1.059_474_136_790_226_7, 1.212_665_227_308_313_8, 0.992_340_164_363_035_8];

#[test]
fn controller_kernels_match_reference() {
    let plant = build_uav(UavParams::default()).unwrap();
    let exo = uav_exo();
    let chain = build_chain(&plant, &exo);
    let k = solve_controller_kernels(&plant, &exo, &chain, 201).unwrap();
    for (a, b) in k.lambda1().iter().zip(LAMBDA1) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
    for (a, b) in k.lambdabar1().iter().zip(LAMBDABAR1) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(k.psi[(200, 0)], -0.029_229_470_849_397_747, epsilon = 1e-10);
    assert_abs_diff_eq!(k.psi[(200, 100)], -0.029_188_275_480_972_917, epsilon = 1e-10);
    assert_abs_diff_eq!(k.phi[(200, 0)], -0.004_120_946_169_947_931, epsilon = 1e-10);
    assert_abs_diff_eq!(k.phi[(150, 50)], -0.002_371_414_621_822_134, epsilon = 1e-10);
    assert!(k.diagonal_residual() < 1e-12);
    assert!(k.boundary_residual() < 1e-10);
}

#[test]
fn observer_kernels_match_reference() {
    let plant = build_uav(UavParams::default()).unwrap();
    let exo = uav_exo();
    let s = ObserverStructure::solve(&plant, &exo, 201).unwrap();
    for (a, b) in s.lambda_at_one().iter().zip(LAMBDA_OBS1) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(s.k11[(50, 150)], -0.030_023_512_623_299_96, epsilon = 1e-10);
    assert_abs_diff_eq!(s.k12[(50, 150)], 0.028_747_731_245_623_076, epsilon = 1e-10);
    assert_abs_diff_eq!(s.kbar1[(0, 0)], 0.470_143_346_147_380_96, epsilon = 1e-9);
    assert!(s.boundary_residual() < 1e-10);
    // successive approximations contract
    for w in s.fixed_point_steps.windows(2) {
        assert!(w[1] < w[0]);
    }
    let obs = s
        .with_gains(&exo, DVector::from_vec(vec![10.0, 8.0, 10.0, 8.0]), DVector::from_vec(vec![2.0, 1.0]), HurwitzPolicy::Allow)
        .unwrap();
    assert_abs_diff_eq!(obs.l1[0], 38.712_403_532_951_51, epsilon = 1e-7);
    assert_abs_diff_eq!(obs.l1[100], 39.965_014_069_927_77, epsilon = 1e-7);
    assert_abs_diff_eq!(obs.l2[0], 22.712_403_532_951_52, epsilon = 1e-7);
    assert!(!obs.spectra.hurwitz());
}

#[test]
fn literal_case_study_gains_are_not_hurwitz() {
    let plant = build_uav(UavParams::default()).unwrap();
    let exo = uav_exo();
    let r = solve_observer_kernels(
        &plant,
        &exo,
        DVector::from_vec(vec![10.0, 8.0, 10.0, 8.0]),
        DVector::from_vec(vec![2.0, 1.0]),
        51,
        HurwitzPolicy::Require,
    );
    assert!(matches!(r, Err(Error::NotHurwitz { .. })));
}

#[test]
fn residuals_converge_under_refinement() {
    let plant = build_uav(UavParams::default()).unwrap();
    let exo = uav_exo();
    let chain = build_chain(&plant, &exo);
    let mut ctrl = Vec::new();
    let mut obs = Vec::new();
    for n in [51, 101, 201] {
        ctrl.push(solve_controller_kernels(&plant, &exo, &chain, n).unwrap().pde_residual().max());
        obs.push(ObserverStructure::solve(&plant, &exo, n).unwrap().pde_residual().max());
    }
    eprintln!("controller {ctrl:?} observer {obs:?}");
    assert!(observed_orders(&ctrl).iter().all(|&o| o >= 0.9), "{ctrl:?}");
    assert!(observed_orders(&obs).iter().all(|&o| o >= 0.9), "{obs:?}");
}
