//! Finite-difference closed-loop simulation and run metrics.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use crate::barrier::{min_gains, BarrierSpec, Gains, RescueBump};
use crate::chain_transform::{self, build_chain, ChainMaps};
use crate::error::{Error, Result};
use crate::exo_model::{evolve_exo, ExoModel};
use crate::kernels::{solve_controller_kernels, HurwitzPolicy, KernelSet, ObsKernelSet, ObserverStructure};
use crate::observer::{error_norm, BoundaryMode, Measurements, Observer, ObserverState};
use crate::plant::{FieldIC, Plant};
use crate::predictor::{e_pred_range, initial_safety_check, predict_z, InitBounds, PredictionInput, SampledKernels, SafetyCheck, Verdict};
use crate::regulator::{error_envelope, sign, EnvelopeParams, ErrorEnvelope, StateFeedback};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Grid intervals on `[0, 1]`.
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Field snapshot every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    /// `|Y|` above this stops the run as diverged.
    pub blowup: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { cells: 20, dt: 0.001, t_end: 20.0, snapshot_stride: 0, blowup: 1e6 }
    }
}

impl SimConfig {
    pub fn cfl(&self, plant: &Plant) -> f64 {
        plant.q1.max(plant.q2) * self.dt * self.cells as f64
    }

    pub fn validate(&self, plant: &Plant) -> Result<()> {
        if self.cells < 2 || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("bad numerics: cells {}, dt {}, t_end {}", self.cells, self.dt, self.t_end)));
        }
        let cfl = self.cfl(plant);
        if !(cfl < 1.0) {
            return Err(Error::CflViolation { cfl });
        }
        Ok(())
    }

    /// Both steps divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor.max(1);
        SimConfig { cells: self.cells * f, dt: self.dt / f as f64, snapshot_stride: self.snapshot_stride * f, ..*self }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerMode {
    #[default]
    State,
    Output,
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub y: DVector<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

/// Disturbance maps sampled on the grid.
#[derive(Debug, Clone)]
pub struct PlantGrid {
    pub cells: usize,
    g2: Vec<DVector<f64>>,
    g3: Vec<DVector<f64>>,
}

impl PlantGrid {
    pub fn new(plant: &Plant, cells: usize) -> Self {
        let dx = 1.0 / cells as f64;
        PlantGrid {
            cells,
            g2: (0..=cells).map(|j| plant.g2.eval(j as f64 * dx)).collect(),
            g3: (0..=cells).map(|j| plant.g3.eval(j as f64 * dx)).collect(),
        }
    }
}

/// Upwind/explicit-Euler step. `d` is the disturbance at `t`, `d_next` at `t + dt`.
pub fn plant_step(plant: &Plant, grid: &PlantGrid, st: &PlantState, u: f64, d: &DVector<f64>, d_next: &DVector<f64>, dt: f64) -> Result<PlantState> {
    let n = grid.cells;
    let dx = 1.0 / n as f64;
    let cfl = plant.q1.max(plant.q2) * dt / dx;
    if !(cfl < 1.0) {
        return Err(Error::CflViolation { cfl });
    }
    let (z, w) = (&st.z, &st.w);
    let (c1, c2) = (plant.q1 * dt / dx, plant.q2 * dt / dx);
    let mut zn = z.clone();
    let mut wn = w.clone();
    for j in 1..=n {
        zn[j] = z[j] - c1 * (z[j] - z[j - 1]) + dt * (plant.d1 * w[j] + plant.c_self * z[j] + grid.g2[j].dot(d));
    }
    for j in 0..n {
        wn[j] = w[j] + c2 * (w[j + 1] - w[j]) + dt * (plant.d2 * z[j] + plant.c_self * w[j] + grid.g3[j].dot(d));
    }
    let yn = &st.y + (&plant.a * &st.y + plant.b_vec() * w[0] + &plant.g1 * d) * dt;
    zn[0] = plant.p * wn[0] + plant.c.dot(&yn) + plant.g4.dot(d_next);
    wn[n] = plant.q * zn[n] + plant.g5.dot(d_next) + u;
    Ok(PlantState { y: yn, z: zn, w: wn })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeChoice {
    Smooth { m_c: f64, sigma_c: f64 },
    Exact { xi_e: f64 },
}

/// Observer gains, initial estimates and the declared initial-data box.
#[derive(Debug, Clone)]
pub struct OutputSetup {
    pub l_d: DVector<f64>,
    pub l_r: DVector<f64>,
    pub policy: HurwitzPolicy,
    pub estimate: ObserverState,
    pub bounds: InitBounds,
    pub envelope: EnvelopeChoice,
    pub boundary: BoundaryMode,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: Plant,
    pub exo: ExoModel,
    pub ic: FieldIC,
    pub spec: BarrierSpec,
    pub gains: Gains,
    pub sim: SimConfig,
    pub controller: ControllerMode,
    /// Kernel grid nodes.
    pub kernel_nodes: usize,
    pub epsilon: f64,
    pub t_a: f64,
    pub tol_h: f64,
    pub output: Option<OutputSetup>,
}

/// Everything computed before the first step.
#[derive(Debug, Clone)]
pub struct Design {
    pub chain: ChainMaps,
    pub kernels: KernelSet,
    pub law: StateFeedback,
    pub observer: Option<(ObsKernelSet, Observer)>,
    pub envelope: Option<EnvelopeParams>,
    pub error_envelope: Option<ErrorEnvelope>,
    pub safety: SafetyCheck,
    /// Lower bound of `h(e(tbar0), tbar0)` used to size the bump.
    pub h_low: f64,
    pub bump: RescueBump,
    pub thresholds: Vec<f64>,
    pub sign_theta0: f64,
    pub tbar0: f64,
    pub warnings: Vec<String>,
}

pub fn prepare(sc: &Scenario) -> Result<Design> {
    let plant = &sc.plant;
    sc.sim.validate(plant)?;
    if sc.ic.z0.len() != sc.sim.cells + 1 || sc.ic.w0.len() != sc.sim.cells + 1 {
        return Err(Error::Dimension(format!("initial fields need {} samples", sc.sim.cells + 1)));
    }
    let mut warnings = Vec::new();
    if !crate::plant::disturbance_pair_full_rank(plant, &sc.exo) {
        warnings.push("(S_d, (G5 + G4) Pbar_d) fails the rank test".into());
    }
    let chain = build_chain(plant, &sc.exo);
    let kernels = solve_controller_kernels(plant, &sc.exo, &chain, sc.kernel_nodes)?;
    let sk = SampledKernels::new(&kernels, sc.sim.cells);
    let tbar0 = 1.0 / plant.q2;
    let safety = initial_safety_check(&sc.ic, plant, &sc.exo, &sk, &chain, &sc.spec, 0.0, 101)?;

    let use_obs = sc.controller == ControllerMode::Output;
    if use_obs && sc.output.is_none() {
        return Err(Error::InvalidParameter("output feedback needs observer settings".into()));
    }
    let (h_low, z_tbar0) = match (&sc.output, use_obs) {
        (Some(out), true) => {
            if !out.bounds.contains(&sc.ic.z0, &sc.ic.w0, &sc.ic.v0) {
                warnings.push("true initial data lie outside the declared bounds".into());
            }
            if !out.bounds.contains(&out.estimate.z_hat, &out.estimate.w_hat, &out.estimate.v_hat) {
                return Err(Error::InvalidParameter("initial estimates lie outside the declared bounds".into()));
            }
            let (lo, hi) = e_pred_range(&sc.ic.y0, &out.bounds, &sk, &chain, plant, tbar0)?;
            let est = PredictionInput { y: &sc.ic.y0, v: &out.estimate.v_hat, z: &out.estimate.z_hat, w: &out.estimate.w_hat, t: 0.0 };
            (sc.spec.lower_bound(lo, hi, tbar0), predict_z(&est, &sk, &chain, plant, tbar0)?)
        }
        _ => {
            let input = PredictionInput { y: &sc.ic.y0, v: &sc.ic.v0, z: &sc.ic.z0, w: &sc.ic.w0, t: 0.0 };
            (safety.h_at_tbar0, predict_z(&input, &sk, &chain, plant, tbar0)?)
        }
    };
    let bump = if h_low <= 0.0 { RescueBump::for_value(h_low, sc.epsilon, sc.t_a, tbar0) } else { RescueBump::inactive(tbar0) };
    let thresholds = match min_gains(&sc.spec, &bump, &sc.gains.k, &z_tbar0, tbar0) {
        Ok(th) => th,
        Err(e) => {
            warnings.push(format!("gain thresholds unavailable: {e}"));
            Vec::new()
        }
    };
    for (i, th) in thresholds.iter().enumerate() {
        if sc.gains.k[i] <= *th {
            warnings.push(format!("k{} = {} does not exceed the threshold {}", i + 1, sc.gains.k[i], th));
        }
    }
    let law = StateFeedback::new(plant, &sc.exo, &chain, sk, sc.spec.clone(), bump, sc.gains.clone())?;

    let mut observer = None;
    let mut envelope = None;
    let mut error_bound = None;
    if let Some(out) = &sc.output {
        let structure = ObserverStructure::solve(plant, &sc.exo, sc.kernel_nodes)?;
        let obs = structure.with_gains(&sc.exo, out.l_d.clone(), out.l_r.clone(), out.policy)?;
        if !obs.spectra.hurwitz() {
            warnings.push("observer error dynamics are not Hurwitz with these gains".into());
        }
        let l3 = if obs.spectra.hurwitz() {
            match error_envelope(&out.bounds, &out.estimate.z_hat, &out.estimate.w_hat, &out.estimate.v_hat, &obs, plant, &sc.exo) {
                Ok(l) => Some(l),
                Err(e) => {
                    warnings.push(format!("observer-error envelope unavailable: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let env = match out.envelope {
            EnvelopeChoice::Smooth { m_c, sigma_c } => EnvelopeParams::smooth(m_c, sigma_c)?,
            EnvelopeChoice::Exact { xi_e } => {
                let l = l3.clone().ok_or_else(|| Error::InvalidParameter("exact envelope needs Hurwitz observer gains".into()))?;
                EnvelopeParams::Exact { xi_e, bound: l, norms: law.boundary_norms() }
            }
        };
        if let (EnvelopeParams::Smooth { .. }, Some(l)) = (&env, &l3) {
            let (a, b, c) = law.boundary_norms();
            let exact = EnvelopeParams::Exact { xi_e: 0.0, bound: l.clone(), norms: (a, b, c) };
            let times: Vec<f64> = (0..=200).map(|k| sc.sim.t_end * k as f64 / 200.0).collect();
            if !crate::regulator::smooth_dominates(&env, &exact, &times) {
                warnings.push("smooth envelope does not dominate the computed observer envelope".into());
            }
        }
        let ob = Observer::new(&obs, plant, &sc.exo, sc.sim.cells, sc.sim.dt, out.boundary);
        observer = Some((obs, ob));
        envelope = Some(env);
        error_bound = l3;
    }
    let e0 = sc.ic.y0[0] - sc.exo.p_r().dot(&sc.ic.v0);
    let sign_theta0 = sign(sc.spec.theta(e0, 0.0));
    Ok(Design { chain, kernels, law, observer, envelope, error_envelope: error_bound, safety, h_low, bump, thresholds, sign_theta0, tbar0, warnings })
}

/// One recorded step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub y: Vec<f64>,
    pub r: f64,
    pub e: f64,
    /// `h(e, t)` without the bump.
    pub h: f64,
    /// `h_1..h_n` with the bump.
    pub h_chain: Vec<f64>,
    pub u: f64,
    /// State-feedback law at the true state.
    pub u_state: f64,
    pub rho: f64,
    pub err_norm: f64,
    /// Computed bound on the error norm, NaN when unavailable.
    pub err_bound: f64,
    /// `e` predicted `1/q2` ahead from the data the controller uses.
    pub e_pred: f64,
    /// Target boundary residual `beta(0, t)` at the true state.
    pub beta0: f64,
    pub z0: f64,
    pub z1: f64,
    pub w0: f64,
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub cells: usize,
    pub dt: f64,
    pub tbar0: f64,
    pub bump: RescueBump,
    pub h_low: f64,
    pub verdict: Verdict,
    pub sign_theta0: f64,
    pub thresholds: Vec<f64>,
    pub warnings: Vec<String>,
    /// Time at which the divergence detector stopped the run.
    pub diverged_at: Option<f64>,
    pub controller: ControllerMode,
}

pub fn run_closed_loop(sc: &Scenario) -> Result<Trajectory> {
    let design = prepare(sc)?;
    simulate(sc, &design)
}

pub fn simulate(sc: &Scenario, design: &Design) -> Result<Trajectory> {
    let plant = &sc.plant;
    let exo = &sc.exo;
    let cfg = &sc.sim;
    let grid = PlantGrid::new(plant, cfg.cells);
    let law = &design.law;
    let sk = &law.kernels;
    let lambda0 = sk.lambda.row(0).transpose();
    let lambdabar0 = sk.lambdabar.row(0).transpose();
    let p_d = exo.p_d();
    let p_r = exo.p_r();
    let mut st = PlantState { y: sc.ic.y0.clone(), z: sc.ic.z0.clone(), w: sc.ic.w0.clone() };
    let mut est = sc.output.as_ref().map(|o| o.estimate.clone());
    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut diverged_at = None;
    let n = cfg.cells;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let v = evolve_exo(exo, &sc.ic.v0, t);
        let r = p_r.dot(&v);
        let e = st.y[0] - r;
        let zc = chain_transform::to_error(&design.chain, &st.y, &v);
        let h_chain = law.barrier().eval(&sc.spec, &design.bump, zc.as_slice(), t).map(|c| c.h).unwrap_or_default();
        let u_state = law.control(&st.y, &st.z, &st.w, &v, t)?;
        let f_now = law.barrier().f(&sc.spec, &design.bump, zc.as_slice(), t, plant.b)?;
        let beta0 = st.w[0] - lambda0.dot(&st.y) - lambdabar0.dot(&v) + f_now / sc.spec.theta(zc[0], t);
        let (u, rho, e_pred) = match (sc.controller, &est, &design.envelope) {
            (ControllerMode::Output, Some(o), Some(env)) => {
                let rho = env.rho(t);
                let uh = law.control(&st.y, &o.z_hat, &o.w_hat, &o.v_hat, t)?;
                let inp = PredictionInput { y: &st.y, v: &o.v_hat, z: &o.z_hat, w: &o.w_hat, t };
                (uh + design.sign_theta0 * rho, rho, predict_z(&inp, sk, &design.chain, plant, 1.0 / plant.q2)?[0])
            }
            (ControllerMode::OpenLoop, _, _) => {
                let inp = PredictionInput { y: &st.y, v: &v, z: &st.z, w: &st.w, t };
                (0.0, 0.0, predict_z(&inp, sk, &design.chain, plant, 1.0 / plant.q2)?[0])
            }
            _ => {
                let inp = PredictionInput { y: &st.y, v: &v, z: &st.z, w: &st.w, t };
                (u_state, 0.0, predict_z(&inp, sk, &design.chain, plant, 1.0 / plant.q2)?[0])
            }
        };
        let err_norm = est.as_ref().map_or(0.0, |o| error_norm(o, &st.z, &st.w, &v));
        let err_bound = design.error_envelope.as_ref().map_or(f64::NAN, |l| l.omega_bound(t));
        records.push(Record {
            t,
            y: st.y.iter().cloned().collect(),
            r,
            e,
            h: sc.spec.h(e, t),
            h_chain,
            u,
            u_state,
            rho,
            err_norm,
            err_bound,
            e_pred,
            beta0,
            z0: st.z[0],
            z1: st.z[n],
            w0: st.w[0],
            w1: st.w[n],
        });
        if cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0 {
            snapshots.push(Snapshot { t, z: st.z.clone(), w: st.w.clone() });
        }
        if k == steps {
            break;
        }
        let v_next = evolve_exo(exo, &sc.ic.v0, t + cfg.dt);
        let d = &p_d * &v;
        let d_next = &p_d * &v_next;
        let next = plant_step(plant, &grid, &st, u, &d, &d_next, cfg.dt)?;
        if let (Some(o), Some((_, ob))) = (&est, &design.observer) {
            let meas = Measurements { z1: st.z[n], r, y_next: &next.y, z1_next: next.z[n], w0_next: next.w[0] };
            est = Some(ob.step(o, &meas, u)?);
        }
        st = next;
        let finite = st.y.iter().chain(&st.z).chain(&st.w).all(|x| x.is_finite());
        if !finite || st.y.amax() > cfg.blowup {
            diverged_at = Some(t + cfg.dt);
            break;
        }
    }
    Ok(Trajectory {
        records,
        snapshots,
        cells: cfg.cells,
        dt: cfg.dt,
        tbar0: design.tbar0,
        bump: design.bump,
        h_low: design.h_low,
        verdict: design.safety.verdict,
        sign_theta0: design.sign_theta0,
        thresholds: design.thresholds.clone(),
        warnings: design.warnings.clone(),
        diverged_at,
        controller: sc.controller,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Earliest `t` after which `h >= -tol_h` for the rest of the run; `None` if never.
    pub rescue_time: Option<f64>,
    pub min_h: f64,
    pub min_h_after_rescue: Option<f64>,
    pub final_e: f64,
    /// `max |e|` over the last 5% of the horizon.
    pub tail_abs_e: f64,
    pub max_abs_e: f64,
    pub sup_y: f64,
    pub sup_field: f64,
    /// `err_norm(10) / err_norm(dt)` when the run is long enough.
    pub observer_decay: Option<f64>,
    /// Steps with `err_norm` above the computed bound.
    pub envelope_violations: usize,
    /// Steps with `|U_state - U_hat| > rho`.
    pub rho_violations: usize,
    pub diverged_at: Option<f64>,
    pub t_end: f64,
}

pub fn metrics(traj: &Trajectory, tol_h: f64) -> Metrics {
    let rec = &traj.records;
    let last_bad = rec.iter().rposition(|r| !(r.h >= -tol_h));
    let rescue_idx = match last_bad {
        None => Some(0),
        Some(i) if i + 1 < rec.len() => Some(i + 1),
        Some(_) => None,
    };
    let rescue_time = rescue_idx.map(|i| rec[i].t);
    let min_h_after_rescue = rescue_idx.map(|i| rec[i..].iter().map(|r| r.h).fold(f64::INFINITY, f64::min));
    let tail_start = (rec.len() as f64 * 0.95) as usize;
    let t_end = rec.last().map_or(0.0, |r| r.t);
    let decay = {
        let i10 = (10.0 / traj.dt).round() as usize;
        if rec.len() > i10 && rec.len() > 1 && rec[1].err_norm > 0.0 {
            Some(rec[i10].err_norm / rec[1].err_norm)
        } else {
            None
        }
    };
    let u_hat = |r: &Record| r.u - traj.sign_theta0 * r.rho;
    Metrics {
        rescue_time,
        min_h: rec.iter().map(|r| r.h).fold(f64::INFINITY, f64::min),
        min_h_after_rescue,
        final_e: rec.last().map_or(f64::NAN, |r| r.e),
        tail_abs_e: rec[tail_start.min(rec.len().saturating_sub(1))..].iter().map(|r| r.e.abs()).fold(0.0, f64::max),
        max_abs_e: rec.iter().map(|r| r.e.abs()).fold(0.0, f64::max),
        sup_y: rec.iter().flat_map(|r| r.y.iter()).map(|x| x.abs()).fold(0.0, f64::max),
        sup_field: rec.iter().map(|r| r.z0.abs().max(r.z1.abs()).max(r.w0.abs()).max(r.w1.abs())).fold(0.0, f64::max),
        observer_decay: decay,
        envelope_violations: rec.iter().filter(|r| r.err_bound.is_finite() && r.err_norm > r.err_bound).count(),
        rho_violations: if traj.controller == ControllerMode::Output {
            rec.iter().filter(|r| (r.u_state - u_hat(r)).abs() > r.rho).count()
        } else {
            0
        },
        diverged_at: traj.diverged_at,
        t_end,
    }
}

/// `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    fmt_g(x, 9)
}

/// C-style `%.{prec}g`.
pub fn fmt_g(x: f64, prec: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = prec.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= p as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `t,y1..yn,r,e,h,U,rho,err_norm,z0,z1,w0,w1`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.records.first().map_or(0, |r| r.y.len());
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",y{i}");
    }
    out.push_str(",r,e,h,U,rho,err_norm,z0,z1,w0,w1\n");
    for r in &traj.records {
        out.push_str(&fmt_g9(r.t));
        for y in &r.y {
            out.push(',');
            out.push_str(&fmt_g9(*y));
        }
        for v in [r.r, r.e, r.h, r.u, r.rho, r.err_norm, r.z0, r.z1, r.w0, r.w1] {
            out.push(',');
            out.push_str(&fmt_g9(v));
        }
        out.push('\n');
    }
    out
}

/// Long format `x,t,z,w`.
pub fn fields_csv(traj: &Trajectory) -> String {
    let mut out = String::from("x,t,z,w\n");
    let dx = 1.0 / traj.cells as f64;
    for s in &traj.snapshots {
        for (j, (z, w)) in s.z.iter().zip(&s.w).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", fmt_g9(j as f64 * dx), fmt_g9(s.t), fmt_g9(*z), fmt_g9(*w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        assert_eq!(fmt_g9(0.001), "0.001");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(17.146428199482248), "17.1464282");
        assert_eq!(fmt_g9(1e-7), "1e-07");
        assert_eq!(fmt_g9(-2.5e12), "-2.5e+12");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(0.0001), "0.0001");
        assert_eq!(fmt_g9(20.0), "20");
    }
}
