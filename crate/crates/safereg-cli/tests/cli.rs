use std::fs;
use std::process::Command;

use safereg_cli::commands::{self, Overrides};
use safereg_cli::config::{parse_config, FieldFamily, BUNDLED};
use safereg_cli::Failure;

fn bundled(name: &str) -> safereg_cli::config::ScenarioConfig {
    parse_config(safereg_cli::config::bundled(name).unwrap()).unwrap()
}

#[test]
fn bundled_configs_round_trip() {
    for (name, text) in BUNDLED {
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again, "{name}");
        cfg.scenario().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn case1_safe_builds_the_cable_scenario() {
    let sc = bundled("case1_safe").scenario().unwrap();
    assert_eq!(sc.ic.y0.as_slice(), &[8.0, 0.0]);
    assert_eq!(sc.gains.k, vec![1.5, 4.0]);
    assert!((sc.plant.q1 - 294f64.sqrt()).abs() < 1e-12);
    assert_eq!(sc.ic.z0.len(), 21);
    assert!((sc.ic.w0[10] - (std::f64::consts::PI).cos()).abs() < 1e-12);
}

#[test]
fn missing_gains_names_the_field() {
    let text = safereg_cli::config::bundled("case1_safe").unwrap().replace("k = [1.5, 4.0]", "");
    match parse_config(&text) {
        Err(Failure::Config(m)) => assert!(m.contains("`k`") && m.contains("gains"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cfl_violation_is_a_config_error() {
    let mut cfg = bundled("case1_safe");
    cfg.numerics.dt = 0.01;
    match cfg.scenario() {
        Err(f @ Failure::Config(_)) => {
            assert!(f.message().contains("CFL"), "{}", f.message());
            assert_eq!(f.exit_code(), 2);
        }
        other => panic!("{:?}", other.map(|_| ())),
    }
}

#[test]
fn zero_initial_data_below_positive_reference_is_unsafe() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled("case1_safe");
    cfg.initial.y0 = vec![0.0, 0.0];
    cfg.initial.z = FieldFamily::Constant { c: 0.0 };
    cfg.initial.w = FieldFamily::Constant { c: 0.0 };
    let (rep, _) = commands::check_safety(&cfg, dir.path()).unwrap();
    assert!(!rep.safe);
    assert!(rep.h_at_tbar0 < 0.0);
}

#[test]
fn uncoupled_kernels_have_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled("case1_safe");
    if let safereg_cli::config::PlantConfig::Uav { d_c, .. } = &mut cfg.plant {
        *d_c = 0.0;
    }
    cfg.numerics.kernel_nodes = 51;
    let (rep, _) = commands::kernels(&cfg, dir.path()).unwrap();
    let all = rep.controller.pde.iter().chain(&rep.observer.pde).chain([&rep.controller.diagonal, &rep.controller.boundary, &rep.observer.boundary]);
    for r in all {
        assert!(r.abs() < 1e-10, "{rep:?}");
    }
    let csv = fs::read_to_string(dir.path().join("kernels.csv")).unwrap();
    assert!(csv.starts_with("x,y,psi,phi\n"));
    assert_eq!(csv.lines().count(), 1 + 51 * 52 / 2);
}

#[test]
fn case1_unsafe_rescues_in_time() {
    let dir = tempfile::tempdir().unwrap();
    let (s, _) = commands::simulate_cmd(&bundled("case1_unsafe"), dir.path()).unwrap();
    assert!(s.acceptance.passed);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let t = m["metrics"]["rescue_time"].as_f64().unwrap();
    assert!(t > 0.0 && t <= 2.058, "{t}");
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,y1,y2,r,e,h,U,rho,err_norm,z0,z1,w0,w1\n"));
    assert!(!traj.contains('\r'));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = bundled("case2_unsafe_placed");
    cfg.numerics.t_end = 1.0;
    commands::simulate_cmd(&cfg, a.path()).unwrap();
    commands::simulate_cmd(&cfg, b.path()).unwrap();
    for f in ["trajectory.csv", "fields.csv", "metrics.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn refine_flag_scales_the_grid() {
    let mut cfg = bundled("case1_safe");
    Overrides { refine: Some(2), snapshot_stride: Some(5), ..Default::default() }.apply(&mut cfg).unwrap();
    assert_eq!(cfg.numerics.cells, 40);
    assert!((cfg.numerics.dt - 0.0005).abs() < 1e-15);
    assert_eq!(cfg.numerics.snapshot_stride, 10);
}

#[test]
fn sweep_writes_one_directory_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[sweep.parameters]\n\"gains.k\" = [[1.5, 4.0], [3.0, 4.0]]\n\"numerics.t_end\" = [0.5]\n\"initial.y0\" = [[8.0, 0.0], [6.0, 0.0]]\n",
        safereg_cli::config::bundled("case1_safe").unwrap()
    );
    let cfg = parse_config(&text).unwrap();
    let (rows, _) = commands::sweep(&cfg, &Overrides::default(), dir.path()).unwrap();
    assert_eq!(rows.len(), 4);
    let y0 = |i: usize| rows[i].cell.assignment.iter().find(|(k, _)| k == "initial.y0").unwrap().1.clone();
    assert_eq!(y0(1), toml::Value::try_from(vec![6.0, 0.0]).unwrap());
    assert_eq!(y0(2), toml::Value::try_from(vec![8.0, 0.0]).unwrap());
    for r in &rows {
        let s = r.result.as_ref().unwrap();
        assert!((s.metrics.t_end - 0.5).abs() < 1e-9);
        assert!(dir.path().join(format!("cell_{:03}", r.cell.index)).join("trajectory.csv").exists());
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_safereg");
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| Command::new(exe).args(args).arg("--out").arg(dir.path()).output().unwrap().status.code();
    assert_eq!(code(&["check-safety", "--config", "case1_safe"]), Some(0));
    assert_eq!(code(&["check-safety", "--config", "case1_unsafe"]), Some(4));
    assert_eq!(code(&["check-safety", "--config", "no/such/file.toml"]), Some(2));
    // the listed observer gains leave the error system unstable
    assert_eq!(code(&["envelope", "--config", "case1_unsafe"]), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, safereg_cli::config::bundled("case1_safe").unwrap().replace("dt = 0.001", "dt = 0.01")).unwrap();
    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), Some(2));
}
