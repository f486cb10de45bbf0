use safereg_web::{kernel_slice, scenario, sigma_curve, simulate_case};

#[test]
fn case_one_state_feedback_run() {
    let run = simulate_case(1, 8.0, 1.5, 4.0, "state", "listed", 5.0, 50).map_err(|_| ()).unwrap();
    assert_eq!(run.t().len(), 101);
    assert!(!run.bump_active());
    assert_eq!(run.rescue_time(), 0.0);
    assert!(run.upper().iter().all(|u| u.is_nan()));
    assert!(run.h().iter().all(|h| *h >= -1e-2));
}

#[test]
fn two_sided_band_brackets_the_reference() {
    let run = simulate_case(2, 20.0, 30.0, 16.0, "output", "placed", 0.5, 100).map_err(|_| ()).unwrap();
    assert!(run.bump_active());
    for ((lo, hi), r) in run.lower().iter().zip(run.upper()).zip(run.r()) {
        assert!((hi - r - (r - lo)).abs() < 1e-12 && hi > *lo);
    }
}

#[test]
fn unknown_names_are_rejected() {
    assert!(scenario(3, 0.0, 1.0, 1.0, "state", "listed", 1.0).is_err());
    assert!(scenario(1, 0.0, 1.0, 1.0, "pid", "listed", 1.0).is_err());
    assert!(scenario(1, 0.0, 1.0, 1.0, "output", "tuned", 1.0).is_err());
}

#[test]
fn sigma_curve_lifts_h_and_vanishes() {
    let tbar0 = 1.0 / 294f64.sqrt();
    let c = sigma_curve(-3.0, 2.0, 2.0, tbar0, 4.0, 401);
    assert_eq!(c.len(), 3 * 401);
    // sigma(tbar0) = epsilon - h(tbar0)
    let i = (tbar0 / 0.01).round() as usize;
    assert!((c[3 * i + 1] - 5.0).abs() < 0.05);
    for k in 0..401 {
        if c[3 * k] >= tbar0 + 2.0 {
            assert_eq!(c[3 * k + 1], 0.0);
        }
    }
    assert!(sigma_curve(1.0, 2.0, 2.0, tbar0, 4.0, 11).chunks(3).all(|p| p[1] == 0.0));
}

#[test]
fn kernel_slice_starts_at_the_boundary() {
    let s = kernel_slice(1.0, 51).map_err(|_| ()).unwrap();
    assert_eq!(s.len(), 3 * 51);
    assert_eq!(s[0], 0.0);
    // diagonal value -d2 / (q1 + q2)
    let last = &s[s.len() - 3..];
    assert!((last[1] + 1.0 / (2.0 * 294f64.sqrt())).abs() < 1e-9);
}
