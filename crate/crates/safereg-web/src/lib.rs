#![allow(clippy::too_many_arguments)]

//! wasm-bindgen entry points for the browser page in `www/`.
//!
//! All functions return flat `f64` buffers so the page can plot them without
//! a serialization layer.

use nalgebra::DVector;
use wasm_bindgen::prelude::*;

use safereg::barrier::{sigma_eval, BarrierSpec, Gains, RescueBump};
use safereg::chain_transform::build_chain;
use safereg::exo_model::{uav_exo, uav_v0};
use safereg::kernels::{solve_controller_kernels, HurwitzPolicy};
use safereg::observer::{BoundaryMode, ObserverState};
use safereg::plant::{build_uav, FieldIC, UavParams};
use safereg::predictor::InitBounds;
use safereg::simkit::{metrics, run_closed_loop, ControllerMode, EnvelopeChoice, OutputSetup, Scenario, SimConfig};

const PLACED_LD: [f64; 4] = [-8.106194198199965, 104.09652060807394, -32.62502112196478, -54.18515405253338];
const PLACED_LR: [f64; 2] = [-0.927019552506764, 5.927019552506764];
const LISTED_LD: [f64; 4] = [10.0, 8.0, 10.0, 8.0];
const LISTED_LR: [f64; 2] = [2.0, 1.0];

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// One closed-loop run, decimated for plotting.
#[wasm_bindgen]
pub struct Run {
    t: Vec<f64>,
    y1: Vec<f64>,
    r: Vec<f64>,
    h: Vec<f64>,
    u: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rescue_time: f64,
    min_h_after: f64,
    final_e: f64,
    bump_active: bool,
    summary: String,
}

#[wasm_bindgen]
impl Run {
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    pub fn y1(&self) -> Vec<f64> {
        self.y1.clone()
    }
    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }
    pub fn h(&self) -> Vec<f64> {
        self.h.clone()
    }
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
    /// Lower edge of the admissible set for `y1`.
    pub fn lower(&self) -> Vec<f64> {
        self.lower.clone()
    }
    /// Upper edge, NaN for the one-sided barrier.
    pub fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }
    /// NaN when `h` never settles above `-0.01`.
    pub fn rescue_time(&self) -> f64 {
        self.rescue_time
    }
    pub fn min_h_after(&self) -> f64 {
        self.min_h_after
    }
    pub fn final_e(&self) -> f64 {
        self.final_e
    }
    pub fn bump_active(&self) -> bool {
        self.bump_active
    }
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Scenario of the cable-payload model.
///
/// `case`: 1 keeps `y1 >= r`, 2 keeps `|y1 - r| <= 15 exp(-0.5 t)`.
/// `controller`: `"state"`, `"output"` or `"open-loop"`.
/// `gains`: observer gains, `"listed"` or `"placed"`.
pub fn scenario(case: u32, y10: f64, k1: f64, k2: f64, controller: &str, gains: &str, t_end: f64) -> Result<Scenario, String> {
    let plant = build_uav(UavParams::default()).map_err(|e| e.to_string())?;
    let cells = 20;
    let pi = std::f64::consts::PI;
    let x = |j: usize| j as f64 / cells as f64;
    let z0: Vec<f64> = (0..=cells).map(|j| (3.0 * pi * x(j)).sin()).collect();
    let w0: Vec<f64> = (0..=cells).map(|j| (2.0 * pi * x(j)).cos()).collect();
    let (spec, m_c, sigma_c) = match case {
        1 => (BarrierSpec::Affine, 15.0, 2.0),
        2 => (BarrierSpec::two_sided_decay(15.0, 0.5).map_err(|e| e.to_string())?, 20.0, 1.0),
        _ => return Err(format!("unknown case {case}")),
    };
    let controller = match controller {
        "state" => ControllerMode::State,
        "output" => ControllerMode::Output,
        "open-loop" => ControllerMode::OpenLoop,
        other => return Err(format!("unknown controller {other}")),
    };
    let (l_d, l_r) = match gains {
        "listed" => (LISTED_LD, LISTED_LR),
        "placed" => (PLACED_LD, PLACED_LR),
        other => return Err(format!("unknown observer gains {other}")),
    };
    let v0 = uav_v0();
    let estimate = ObserverState {
        z_hat: z0.iter().map(|v| v + 0.5).collect(),
        w_hat: w0.iter().map(|v| v + 0.5).collect(),
        v_hat: v0.map(|v| v + 0.5),
    };
    let bounds = InitBounds::around(&estimate.z_hat, &estimate.w_hat, &estimate.v_hat, 0.5, 0.5);
    let output = (controller == ControllerMode::Output).then(|| OutputSetup {
        l_d: DVector::from_row_slice(&l_d),
        l_r: DVector::from_row_slice(&l_r),
        policy: HurwitzPolicy::Allow,
        estimate,
        bounds,
        envelope: EnvelopeChoice::Smooth { m_c, sigma_c },
        boundary: BoundaryMode::Estimated,
    });
    Ok(Scenario {
        plant,
        exo: uav_exo(),
        ic: FieldIC { z0, w0, y0: DVector::from_vec(vec![y10, 0.0]), v0 },
        spec,
        gains: Gains::new(vec![k1, k2]).map_err(|e| e.to_string())?,
        sim: SimConfig { cells, dt: 0.001, t_end, snapshot_stride: 0, blowup: 1e6 },
        controller,
        kernel_nodes: 201,
        epsilon: 2.0,
        t_a: 2.0,
        tol_h: 1e-2,
        output,
    })
}

/// Runs a case and keeps every `stride`-th record.
#[wasm_bindgen]
pub fn simulate_case(case: u32, y10: f64, k1: f64, k2: f64, controller: &str, gains: &str, t_end: f64, stride: usize) -> Result<Run, JsValue> {
    let sc = scenario(case, y10, k1, k2, controller, gains, t_end).map_err(js_err)?;
    let tr = run_closed_loop(&sc).map_err(js_err)?;
    let m = metrics(&tr, sc.tol_h);
    let keep: Vec<_> = tr.records.iter().step_by(stride.max(1)).collect();
    let delta = |t: f64| sc.spec.delta(t);
    let summary = format!(
        "bump {}; rescue {}; min h after {}; e(end) {:.3e}{}",
        if tr.bump.active { "active" } else { "inactive" },
        m.rescue_time.map_or("never".into(), |t| format!("{t:.3} s")),
        m.min_h_after_rescue.map_or("n/a".into(), |h| format!("{h:.3e}")),
        m.final_e,
        tr.diverged_at.map_or(String::new(), |t| format!("; diverged at {t:.3} s")),
    );
    Ok(Run {
        t: keep.iter().map(|r| r.t).collect(),
        y1: keep.iter().map(|r| r.y[0]).collect(),
        r: keep.iter().map(|r| r.r).collect(),
        h: keep.iter().map(|r| r.h).collect(),
        u: keep.iter().map(|r| r.u).collect(),
        lower: keep.iter().map(|r| r.r - delta(r.t).unwrap_or(0.0)).collect(),
        upper: keep.iter().map(|r| delta(r.t).map_or(f64::NAN, |d| r.r + d)).collect(),
        rescue_time: m.rescue_time.unwrap_or(f64::NAN),
        min_h_after: m.min_h_after_rescue.unwrap_or(f64::NAN),
        final_e: m.final_e,
        bump_active: tr.bump.active,
        summary,
    })
}

/// `sigma(t)` and its first derivative on `samples` points of `[0, t_end]`,
/// interleaved as `t, sigma, sigma'`.
#[wasm_bindgen]
pub fn sigma_curve(h_bar: f64, epsilon: f64, t_a: f64, tbar0: f64, t_end: f64, samples: usize) -> Vec<f64> {
    let bump = if h_bar <= 0.0 { RescueBump::for_value(h_bar, epsilon, t_a, tbar0) } else { RescueBump::inactive(tbar0) };
    let n = samples.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let t = t_end * k as f64 / (n - 1) as f64;
        out.extend([t, sigma_eval(&bump, t, 0), sigma_eval(&bump, t, 1)]);
    }
    out
}

/// `y, Psi(x, y), Phi(x, y)` for `y` on the kernel grid up to `x`, interleaved.
#[wasm_bindgen]
pub fn kernel_slice(x: f64, nodes: usize) -> Result<Vec<f64>, JsValue> {
    let plant = build_uav(UavParams::default()).map_err(js_err)?;
    let exo = uav_exo();
    let chain = build_chain(&plant, &exo);
    let k = solve_controller_kernels(&plant, &exo, &chain, nodes).map_err(js_err)?;
    let x = x.clamp(0.0, 1.0);
    let mut out = Vec::new();
    for j in 0..k.n_k() {
        let y = k.grid.x(j);
        if y > x + 1e-12 {
            break;
        }
        out.extend([y, k.psi_at(x, y), k.phi_at(x, y)]);
    }
    Ok(out)
}
