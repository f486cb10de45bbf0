#![allow(dead_code)]

use nalgebra::DVector;
use safereg::barrier::{BarrierSpec, Gains};
use safereg::exo_model::{uav_exo, uav_v0};
use safereg::kernels::HurwitzPolicy;
use safereg::observer::{BoundaryMode, ObserverState};
use safereg::plant::{build_uav, FieldIC, UavParams};
use safereg::predictor::InitBounds;
use safereg::simkit::{ControllerMode, EnvelopeChoice, OutputSetup, Scenario, SimConfig};

pub const LISTED_LD: [f64; 4] = [10.0, 8.0, 10.0, 8.0];
pub const LISTED_LR: [f64; 2] = [2.0, 1.0];
pub const PLACED_LD: [f64; 4] = [-8.106194198199965, 104.09652060807394, -32.62502112196478, -54.18515405253338];
pub const PLACED_LR: [f64; 2] = [-0.927019552506764, 5.927019552506764];

pub fn fields(cells: usize) -> (Vec<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    let x = |j: usize| j as f64 / cells as f64;
    ((0..=cells).map(|j| (3.0 * pi * x(j)).sin()).collect(), (0..=cells).map(|j| (2.0 * pi * x(j)).cos()).collect())
}

pub fn uav(case2: bool, y10: f64, k: [f64; 2], cells: usize, dt: f64, t_end: f64) -> Scenario {
    let plant = build_uav(UavParams::default()).unwrap();
    let (z0, w0) = fields(cells);
    let spec = if case2 { BarrierSpec::two_sided_decay(15.0, 0.5).unwrap() } else { BarrierSpec::Affine };
    Scenario {
        plant,
        exo: uav_exo(),
        ic: FieldIC { z0, w0, y0: DVector::from_vec(vec![y10, 0.0]), v0: uav_v0() },
        spec,
        gains: Gains::new(k.to_vec()).unwrap(),
        sim: SimConfig { cells, dt, t_end, snapshot_stride: 0, blowup: 1e6 },
        controller: ControllerMode::State,
        kernel_nodes: 201,
        epsilon: 2.0,
        t_a: 2.0,
        tol_h: 1e-2,
        output: None,
    }
}

pub fn with_observer(mut sc: Scenario, l_d: [f64; 4], l_r: [f64; 2], m_c: f64, sigma_c: f64) -> Scenario {
    let z_hat: Vec<f64> = sc.ic.z0.iter().map(|v| v + 0.5).collect();
    let w_hat: Vec<f64> = sc.ic.w0.iter().map(|v| v + 0.5).collect();
    let v_hat = sc.ic.v0.map(|v| v + 0.5);
    let bounds = InitBounds::around(&z_hat, &w_hat, &v_hat, 0.5, 0.5);
    sc.controller = ControllerMode::Output;
    sc.output = Some(OutputSetup {
        l_d: DVector::from_row_slice(&l_d),
        l_r: DVector::from_row_slice(&l_r),
        policy: HurwitzPolicy::Allow,
        estimate: ObserverState { z_hat, w_hat, v_hat },
        bounds,
        envelope: EnvelopeChoice::Smooth { m_c, sigma_c },
        boundary: BoundaryMode::Estimated,
    });
    sc
}
