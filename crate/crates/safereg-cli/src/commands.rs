//! Subcommands. Each one writes its files under `out` and returns a short
//! human-readable report for stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use safereg::chain_transform::build_chain;
use safereg::kernels::{observed_orders, solve_controller_kernels, HurwitzPolicy, ObserverStructure};
use safereg::predictor::Verdict;
use safereg::regulator::{error_envelope, EnvelopeParams, ErrorEnvelope};
use safereg::simkit::{fields_csv, fmt_g9, metrics, prepare, simulate, trajectory_csv, ControllerMode, Metrics, Scenario, Trajectory};

use crate::config::{parse_config, parse_value, ControllerChoice, ScenarioConfig};
use crate::Failure;

/// Flag overrides shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub controller: Option<ControllerChoice>,
    pub refine: Option<usize>,
    pub snapshot_stride: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), Failure> {
        if let Some(c) = self.controller {
            cfg.numerics.controller = c;
        }
        if let Some(s) = self.snapshot_stride {
            cfg.numerics.snapshot_stride = s;
        }
        if let Some(f) = self.refine {
            if f == 0 {
                return Err(Failure::Config("--refine must be at least 1".into()));
            }
            cfg.refine(f);
        }
        Ok(())
    }
}

fn write(out: &Path, name: &str, body: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(out)?;
    let p = out.join(name);
    fs::write(&p, body)?;
    Ok(p)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Safe => "safe",
        Verdict::UnsafePositiveHbar => "unsafe-positive-h",
        Verdict::UnsafeNonpositiveHbar => "unsafe-nonpositive-h",
    }
}

// ---------------------------------------------------------------- kernels

#[derive(Debug, Clone, Serialize)]
pub struct KernelResiduals {
    pub nodes: usize,
    pub diagonal: f64,
    pub boundary: f64,
    /// Interior centered-difference residual, one entry per kernel equation.
    pub pde: Vec<f64>,
    pub refinement_nodes: Vec<usize>,
    pub refinement_residuals: Vec<f64>,
    pub observed_orders: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObserverResiduals {
    pub nodes: usize,
    /// Diagonal and `x = 0` conditions together.
    pub boundary: f64,
    pub pde: Vec<f64>,
    pub fixed_point_steps: Vec<f64>,
    pub refinement_nodes: Vec<usize>,
    pub refinement_residuals: Vec<f64>,
    pub observed_orders: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub controller: KernelResiduals,
    pub observer: ObserverResiduals,
}

/// Coarser node counts `(N-1)/4 + 1`, `(N-1)/2 + 1` when they exist.
fn ladder(n: usize) -> Vec<usize> {
    if (n - 1) % 4 == 0 && (n - 1) / 4 >= 2 {
        vec![(n - 1) / 4 + 1, (n - 1) / 2 + 1, n]
    } else {
        vec![n]
    }
}

pub fn kernels(cfg: &ScenarioConfig, out: &Path) -> Result<(KernelReport, String), Failure> {
    let plant = cfg.plant()?;
    let (exo, _) = cfg.exo()?;
    let n_k = cfg.numerics.kernel_nodes;
    let chain = build_chain(&plant, &exo);
    let k = solve_controller_kernels(&plant, &exo, &chain, n_k)?;
    let obs = ObserverStructure::solve(&plant, &exo, n_k)?;

    let mut body = String::from("x,y,psi,phi\n");
    for i in 0..n_k {
        for j in 0..=i {
            let _ = writeln!(body, "{},{},{},{}", fmt_g9(k.grid.x(i)), fmt_g9(k.grid.x(j)), fmt_g9(k.psi[(i, j)]), fmt_g9(k.phi[(i, j)]));
        }
    }
    write(out, "kernels.csv", &body)?;

    let mut body = String::from("x");
    for c in 0..k.lambda.ncols() {
        let _ = write!(body, ",lambda{}", c + 1);
    }
    for c in 0..k.lambdabar.ncols() {
        let _ = write!(body, ",lambdabar{}", c + 1);
    }
    body.push('\n');
    for i in 0..n_k {
        body.push_str(&fmt_g9(k.grid.x(i)));
        for v in k.lambda.row(i).iter().chain(k.lambdabar.row(i).iter()) {
            body.push(',');
            body.push_str(&fmt_g9(*v));
        }
        body.push('\n');
    }
    write(out, "lambda.csv", &body)?;

    let mut body = String::from("x,y,k11,k12,k21,k22\n");
    for i in 0..n_k {
        for j in i..n_k {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{}",
                fmt_g9(obs.grid.x(i)),
                fmt_g9(obs.grid.x(j)),
                fmt_g9(obs.k11[(i, j)]),
                fmt_g9(obs.k12[(i, j)]),
                fmt_g9(obs.k21[(i, j)]),
                fmt_g9(obs.k22[(i, j)])
            );
        }
    }
    write(out, "observer_kernels.csv", &body)?;

    let mut body = String::from("x");
    for c in 0..obs.lam.ncols() {
        let _ = write!(body, ",Lambda{}", c + 1);
    }
    for c in 0..obs.lam1.ncols() {
        let _ = write!(body, ",Lambda1_{}", c + 1);
    }
    body.push('\n');
    for i in 0..n_k {
        body.push_str(&fmt_g9(obs.grid.x(i)));
        for v in obs.lam.row(i).iter().chain(obs.lam1.row(i).iter()) {
            body.push(',');
            body.push_str(&fmt_g9(*v));
        }
        body.push('\n');
    }
    write(out, "observer_lambda.csv", &body)?;

    let nodes = ladder(n_k);
    let mut ctrl_res = Vec::new();
    let mut obs_res = Vec::new();
    for &n in &nodes {
        if n == n_k {
            ctrl_res.push(k.pde_residual().max());
            obs_res.push(obs.pde_residual().max());
        } else {
            ctrl_res.push(solve_controller_kernels(&plant, &exo, &chain, n)?.pde_residual().max());
            obs_res.push(ObserverStructure::solve(&plant, &exo, n)?.pde_residual().max());
        }
    }
    let report = KernelReport {
        controller: KernelResiduals {
            nodes: n_k,
            diagonal: k.diagonal_residual(),
            boundary: k.boundary_residual(),
            pde: k.pde_residual().per_equation,
            refinement_nodes: nodes.clone(),
            observed_orders: observed_orders(&ctrl_res),
            refinement_residuals: ctrl_res,
        },
        observer: ObserverResiduals {
            nodes: n_k,
            boundary: obs.boundary_residual(),
            pde: obs.pde_residual().per_equation,
            fixed_point_steps: obs.fixed_point_steps.clone(),
            refinement_nodes: nodes,
            observed_orders: observed_orders(&obs_res),
            refinement_residuals: obs_res,
        },
    };
    write(out, "residuals.json", &json(&report))?;
    let text = format!(
        "controller kernels: diagonal {:.3e}, boundary {:.3e}, pde {:.3e}, orders {:?}\nobserver kernels: boundary {:.3e}, pde {:.3e}, orders {:?}\n",
        report.controller.diagonal,
        report.controller.boundary,
        report.controller.pde.iter().cloned().fold(0.0, f64::max),
        report.controller.observed_orders,
        report.observer.boundary,
        report.observer.pde.iter().cloned().fold(0.0, f64::max),
        report.observer.observed_orders,
    );
    Ok((report, text))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize)]
pub struct Acceptance {
    pub passed: bool,
    pub reason: String,
    /// `tbar0 + t_a`.
    pub deadline: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub controller: ControllerMode,
    pub tbar0: f64,
    pub verdict: &'static str,
    /// `h(e(tbar0), tbar0)` or, under output feedback, its lower bound over the declared box.
    pub h_low: f64,
    pub bump_active: bool,
    pub gain_thresholds: Vec<f64>,
    pub metrics: Metrics,
    pub acceptance: Acceptance,
    pub warnings: Vec<String>,
}

/// Closed loop: `h >= -tol_h` from some time no later than `tbar0 + t_a`
/// until the end, without divergence. Open-loop runs are not judged.
pub fn acceptance(traj: &Trajectory, m: &Metrics, t_a: f64, tol_h: f64) -> Acceptance {
    let deadline = traj.tbar0 + t_a;
    let fail = |reason: String| Acceptance { passed: false, reason, deadline };
    if traj.controller == ControllerMode::OpenLoop {
        return Acceptance { passed: true, reason: "open loop is not judged".into(), deadline };
    }
    if let Some(t) = m.diverged_at {
        return fail(format!("state diverged at t = {t}"));
    }
    match m.rescue_time {
        None => fail(format!("h stays below -{tol_h} at the end of the run")),
        Some(t) if t > deadline + 0.5 * traj.dt => fail(format!("h recovers only at t = {t}, after {deadline}")),
        Some(t) => Acceptance { passed: true, reason: format!("h >= -{tol_h} from t = {t}"), deadline },
    }
}

pub struct SimOutcome {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

pub fn run(cfg: &ScenarioConfig) -> Result<SimOutcome, Failure> {
    let sc = cfg.scenario()?;
    run_scenario(&cfg.name, &sc)
}

pub fn run_scenario(name: &str, sc: &Scenario) -> Result<SimOutcome, Failure> {
    let design = prepare(sc)?;
    let traj = simulate(sc, &design)?;
    let m = metrics(&traj, sc.tol_h);
    let acc = acceptance(&traj, &m, sc.t_a, sc.tol_h);
    let summary = RunSummary {
        name: name.to_string(),
        controller: sc.controller,
        tbar0: traj.tbar0,
        verdict: verdict_name(traj.verdict),
        h_low: traj.h_low,
        bump_active: traj.bump.active,
        gain_thresholds: traj.thresholds.clone(),
        metrics: m,
        acceptance: acc,
        warnings: traj.warnings.clone(),
    };
    Ok(SimOutcome { trajectory: traj, summary })
}

/// Writes `trajectory.csv`, `fields.csv`, `metrics.json`. The caller decides
/// what a failed acceptance rule means; see [`RunSummary::acceptance`].
pub fn simulate_cmd(cfg: &ScenarioConfig, out: &Path) -> Result<(RunSummary, String), Failure> {
    let o = run(cfg)?;
    write(out, "trajectory.csv", &trajectory_csv(&o.trajectory))?;
    write(out, "fields.csv", &fields_csv(&o.trajectory))?;
    write(out, "metrics.json", &json(&o.summary))?;
    let s = &o.summary;
    let mut text = format!(
        "{}: controller {:?}, bump {}, h_low {:.6}, rescue {:?}, min h after {:?}, e(T) {:.3e}\n",
        if s.name.is_empty() { "run" } else { &s.name },
        s.controller,
        if s.bump_active { "active" } else { "inactive" },
        s.h_low,
        s.metrics.rescue_time,
        s.metrics.min_h_after_rescue,
        s.metrics.final_e
    );
    for w in &s.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    if !s.acceptance.passed {
        let _ = writeln!(text, "acceptance failed: {}", s.acceptance.reason);
    }
    Ok((o.summary, text))
}

// ---------------------------------------------------------------- check-safety

#[derive(Debug, Clone, Serialize)]
pub struct SafetyReport {
    pub safe: bool,
    pub verdict: &'static str,
    pub tbar0: f64,
    /// `h(e(tbar0), tbar0)` at the true initial data.
    pub h_at_tbar0: f64,
    /// Smallest `h` over the uncontrolled window.
    pub min_h_window: f64,
    /// Lower bound over the declared box, output feedback only.
    pub h_lower_bound: Option<f64>,
    pub bump_active: bool,
    pub warnings: Vec<String>,
}

pub fn check_safety(cfg: &ScenarioConfig, out: &Path) -> Result<(SafetyReport, String), Failure> {
    let sc = cfg.scenario()?;
    let d = prepare(&sc)?;
    let rep = SafetyReport {
        safe: d.safety.verdict == Verdict::Safe,
        verdict: verdict_name(d.safety.verdict),
        tbar0: d.tbar0,
        h_at_tbar0: d.safety.h_at_tbar0,
        min_h_window: d.safety.min_h,
        h_lower_bound: (sc.controller == ControllerMode::Output).then_some(d.h_low),
        bump_active: d.bump.active,
        warnings: d.warnings.clone(),
    };
    write(out, "safety.json", &json(&rep))?;
    let mut text = format!("verdict: {}\nh(tbar0) = {}\n", rep.verdict, fmt_g9(rep.h_at_tbar0));
    if let Some(b) = rep.h_lower_bound {
        let _ = writeln!(text, "lower bound over the initial box = {}", fmt_g9(b));
    }
    Ok((rep, text))
}

// ---------------------------------------------------------------- envelope

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub m0: f64,
    pub m1: f64,
    pub m_d: f64,
    pub m_check_d: f64,
    pub m_bar_d: f64,
    pub upsilon1: f64,
    pub kappa: f64,
    pub alpha_beta_sup: f64,
    pub m_r: f64,
    pub sigma_r: f64,
    pub m_2: f64,
    pub sigma_e: f64,
    pub t_switch: f64,
    pub smooth_dominates: Option<bool>,
}

impl EnvelopeReport {
    fn new(l: &ErrorEnvelope, dominates: Option<bool>) -> Self {
        EnvelopeReport {
            m0: l.m0,
            m1: l.m1,
            m_d: l.m_d,
            m_check_d: l.m_check_d,
            m_bar_d: l.m_bar_d,
            upsilon1: l.upsilon1,
            kappa: l.kappa,
            alpha_beta_sup: l.alpha_beta_sup,
            m_r: l.reference.m_h,
            sigma_r: l.reference.sigma1,
            m_2: l.disturbance.m_h,
            sigma_e: l.disturbance.sigma1,
            t_switch: l.t_switch,
            smooth_dominates: dominates,
        }
    }
}

/// Exponential bounds of the observer error and the resulting control envelope,
/// sampled on 201 points over `[0, t_end]` into `envelope.csv`.
pub fn envelope(cfg: &ScenarioConfig, out: &Path) -> Result<(EnvelopeReport, String), Failure> {
    let mut cfg = cfg.clone();
    cfg.numerics.controller = ControllerChoice::Output;
    let sc = cfg.scenario()?;
    let setup = sc.output.as_ref().expect("scenario checks the observer table");
    let obs = ObserverStructure::solve(&sc.plant, &sc.exo, sc.kernel_nodes)?.with_gains(&sc.exo, setup.l_d.clone(), setup.l_r.clone(), HurwitzPolicy::Require)?;
    let l3 = error_envelope(&setup.bounds, &setup.estimate.z_hat, &setup.estimate.w_hat, &setup.estimate.v_hat, &obs, &sc.plant, &sc.exo)?;
    let d = prepare(&sc)?;
    let norms = d.law.boundary_norms();
    let xi_e = match d.envelope {
        Some(EnvelopeParams::Exact { xi_e, .. }) => xi_e,
        _ => 0.0,
    };
    let exact = EnvelopeParams::Exact { xi_e, bound: l3.clone(), norms };
    let smooth = match &d.envelope {
        Some(e @ EnvelopeParams::Smooth { .. }) => Some(e.clone()),
        _ => None,
    };
    let t_end = sc.sim.t_end;
    let times: Vec<f64> = (0..=200).map(|k| t_end * k as f64 / 200.0).collect();
    let dominates = smooth.as_ref().map(|s| safereg::regulator::smooth_dominates(s, &exact, &times));
    let mut body = String::from("t,omega_bound,rho_exact,rho_smooth\n");
    for &t in &times {
        let rs = smooth.as_ref().map_or(f64::NAN, |s| s.rho(t));
        let _ = writeln!(body, "{},{},{},{}", fmt_g9(t), fmt_g9(l3.omega_bound(t)), fmt_g9(exact.rho(t)), fmt_g9(rs));
    }
    write(out, "envelope.csv", &body)?;
    let rep = EnvelopeReport::new(&l3, dominates);
    write(out, "envelope.json", &json(&rep))?;
    let text = format!(
        "M0 {}  M1 {}  M_d {}  Mcheck_d {}  Mbar_d {}\nUpsilon1 {}  kappa {}\nM_r {}  sigma_r {}  M_2 {}  sigma_e {}\nsmooth envelope dominates: {}\n",
        fmt_g9(rep.m0),
        fmt_g9(rep.m1),
        fmt_g9(rep.m_d),
        fmt_g9(rep.m_check_d),
        fmt_g9(rep.m_bar_d),
        fmt_g9(rep.upsilon1),
        fmt_g9(rep.kappa),
        fmt_g9(rep.m_r),
        fmt_g9(rep.sigma_r),
        fmt_g9(rep.m_2),
        fmt_g9(rep.sigma_e),
        dominates.map_or("n/a".to_string(), |b| b.to_string()),
    );
    Ok((rep, text))
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    /// `(key path, value)` sorted by key path.
    pub assignment: Vec<(String, toml::Value)>,
}

/// Cartesian product over `[sweep.parameters]`; keys are taken in sorted order, the last varying fastest.
pub fn sweep_cells(cfg: &ScenarioConfig) -> Result<Vec<SweepCell>, Failure> {
    let params = cfg.sweep.as_ref().ok_or_else(|| Failure::Config("sweep needs a [sweep.parameters] table".into()))?;
    let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
    for (k, v) in &params.parameters {
        match v {
            toml::Value::Array(vals) if !vals.is_empty() => axes.push((k.clone(), vals.clone())),
            _ => return Err(Failure::Config(format!("sweep.parameters.\"{k}\" must be a nonempty array"))),
        }
    }
    let mut cells = vec![Vec::new()];
    for (k, vals) in &axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix: Vec<(String, toml::Value)>| {
                vals.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((k.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    Ok(cells.into_iter().enumerate().map(|(index, assignment)| SweepCell { index, assignment }).collect())
}

/// Replaces the value at a dotted key path; intermediate tables must exist.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), Failure> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| Failure::Config(format!("sweep key {path}: {part} is not inside a table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table.get_mut(*part).ok_or_else(|| Failure::Config(format!("sweep key {path}: no table {part}")))?;
    }
    unreachable!("split yields at least one part")
}

pub fn cell_config(base: &ScenarioConfig, cell: &SweepCell) -> Result<ScenarioConfig, Failure> {
    let mut base = base.clone();
    base.sweep = None;
    let mut v = toml::Value::try_from(&base).map_err(|e| Failure::Config(e.to_string()))?;
    for (k, val) in &cell.assignment {
        set_path(&mut v, k, val.clone())?;
    }
    let mut cfg = parse_value(v)?;
    cfg.name = format!("{}_cell{:03}", base.name, cell.index);
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub result: Result<RunSummary, Failure>,
}

/// Runs every cell concurrently into `out/cell_NNN/` and writes `summary.csv`.
pub fn sweep(cfg: &ScenarioConfig, overrides: &Overrides, out: &Path) -> Result<(Vec<SweepRow>, String), Failure> {
    let cells = sweep_cells(cfg)?;
    let configs: Vec<ScenarioConfig> = cells
        .iter()
        .map(|c| {
            let mut cc = cell_config(cfg, c)?;
            overrides.apply(&mut cc)?;
            Ok(cc)
        })
        .collect::<Result<_, Failure>>()?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<RunSummary, Failure>>> = vec![None; cells.len()];
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let dir = out.join(format!("cell_{i:03}"));
                let r = simulate_cmd(&configs[i], &dir).map(|(s, _)| s);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let rows: Vec<SweepRow> = cells.into_iter().zip(results).map(|(cell, r)| SweepRow { cell, result: r.expect("every cell ran") }).collect();

    let keys: Vec<String> = rows.first().map_or(Vec::new(), |r| r.cell.assignment.iter().map(|(k, _)| k.clone()).collect());
    let mut body = String::from("cell");
    for k in &keys {
        let _ = write!(body, ",{k}");
    }
    body.push_str(",status,rescue_time,min_h,min_h_after_rescue,final_e,max_abs_e\n");
    let mut text = String::new();
    for row in &rows {
        let _ = write!(body, "{}", row.cell.index);
        for (_, v) in &row.cell.assignment {
            let _ = write!(body, ",\"{}\"", v.to_string().replace('"', "'"));
        }
        match &row.result {
            Ok(s) => {
                let m = &s.metrics;
                let status = if s.acceptance.passed { "pass" } else { "unsafe" };
                let opt = |x: Option<f64>| x.map_or(String::new(), fmt_g9);
                let _ = writeln!(body, ",{status},{},{},{},{},{}", opt(m.rescue_time), fmt_g9(m.min_h), opt(m.min_h_after_rescue), fmt_g9(m.final_e), fmt_g9(m.max_abs_e));
                let _ = writeln!(text, "cell {:03}: {status}", row.cell.index);
            }
            Err(e) => {
                let _ = writeln!(body, ",{},,,,,", e.kind());
                let _ = writeln!(text, "cell {:03}: {e}", row.cell.index);
            }
        }
    }
    write(out, "summary.csv", &body)?;
    Ok((rows, text))
}

/// Parses, applies flags, and checks cross-references.
pub fn load(path: &str, overrides: &Overrides) -> Result<ScenarioConfig, Failure> {
    let text = crate::config::load_text(path)?;
    let mut cfg = parse_config(&text)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}
