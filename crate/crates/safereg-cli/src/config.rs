//! Scenario files: TOML with one table per concern.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use safereg::barrier::{BarrierSpec, Gains};
use safereg::exo_model::{uav_exo, uav_v0, validate_exo, ExoModel};
use safereg::kernels::HurwitzPolicy;
use safereg::observer::{BoundaryMode, ObserverState};
use safereg::plant::{build_uav, validate_structure, FieldIC, Plant, PolyRow, UavParams};
use safereg::predictor::InitBounds;
use safereg::simkit::{ControllerMode, EnvelopeChoice, OutputSetup, Scenario, SimConfig};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub plant: PlantConfig,
    #[serde(default)]
    pub exo: ExoConfig,
    pub barrier: BarrierConfig,
    pub gains: GainsConfig,
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlantConfig {
    Uav {
        #[serde(default = "one")]
        length: f64,
        #[serde(default = "half")]
        rho: f64,
        #[serde(default = "uav_mass")]
        m_l: f64,
        #[serde(default = "gravity")]
        g: f64,
        #[serde(default = "minus_one")]
        d_c: f64,
        #[serde(default = "minus_one")]
        d_0: f64,
        /// Overrides the in-domain self coupling of the cable model.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_self: Option<f64>,
    },
    Custom {
        a: Vec<Vec<f64>>,
        b: f64,
        c: Vec<f64>,
        p: f64,
        q: f64,
        q1: f64,
        q2: f64,
        d1: f64,
        d2: f64,
        #[serde(default)]
        c_self: f64,
        g1: Vec<Vec<f64>>,
        /// Polynomial coefficients in `x`, lowest power first.
        g2: Vec<Vec<f64>>,
        g3: Vec<Vec<f64>>,
        g4: Vec<f64>,
        g5: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn uav_mass() -> f64 {
    15.0
}
fn gravity() -> f64 {
    9.8
}
fn minus_one() -> f64 {
    -1.0
}
fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExoConfig {
    Uav {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v0: Option<Vec<f64>>,
    },
    Custom { s_r: Vec<Vec<f64>>, s_d: Vec<Vec<f64>>, pbar_r: Vec<f64>, pbar_d: Vec<Vec<f64>>, v0: Vec<f64> },
}

impl Default for ExoConfig {
    fn default() -> Self {
        ExoConfig::Uav { v0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    pub family: BarrierFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_delta: Option<f64>,
    #[serde(default = "two")]
    pub epsilon: f64,
    #[serde(default = "two")]
    pub t_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierFamily {
    Affine,
    TwoSidedDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub y0: Vec<f64>,
    pub z: FieldFamily,
    pub w: FieldFamily,
}

/// `sin(a pi x) + c`, `cos(a pi x) + c` or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldFamily {
    Sin {
        a: f64,
        #[serde(default)]
        c: f64,
    },
    Cos {
        a: f64,
        #[serde(default)]
        c: f64,
    },
    Constant {
        c: f64,
    },
}

impl FieldFamily {
    pub fn sample(&self, cells: usize) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        (0..=cells)
            .map(|j| {
                let x = j as f64 / cells as f64;
                match *self {
                    FieldFamily::Sin { a, c } => (a * pi * x).sin() + c,
                    FieldFamily::Cos { a, c } => (a * pi * x).cos() + c,
                    FieldFamily::Constant { c } => c,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub l_d: Vec<f64>,
    pub l_r: Vec<f64>,
    /// Run even when the observer error dynamics are not Hurwitz.
    #[serde(default)]
    pub allow_non_hurwitz: bool,
    #[serde(default)]
    pub boundary: BoundaryChoice,
    /// Initial estimate minus truth, for the fields.
    #[serde(default)]
    pub field_offset: f64,
    /// Initial estimate minus truth, for the exosystem state.
    #[serde(default)]
    pub exo_offset: f64,
    /// Half widths of the declared boxes around the initial estimates.
    pub field_margin: f64,
    pub exo_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryChoice {
    #[default]
    Estimated,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Smooth { m_c: f64, sigma_c: f64 },
    Exact { xi_e: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_kernel_nodes")]
    pub kernel_nodes: usize,
    #[serde(default = "default_tol_h")]
    pub tol_h: f64,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub controller: ControllerChoice,
}

fn default_cells() -> usize {
    20
}
fn default_dt() -> f64 {
    0.001
}
fn default_t_end() -> f64 {
    20.0
}
fn default_kernel_nodes() -> usize {
    201
}
fn default_tol_h() -> f64 {
    1e-2
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            cells: default_cells(),
            dt: default_dt(),
            t_end: default_t_end(),
            kernel_nodes: default_kernel_nodes(),
            tol_h: default_tol_h(),
            snapshot_stride: 0,
            controller: ControllerChoice::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerChoice {
    #[default]
    State,
    Output,
    OpenLoop,
}

impl From<ControllerChoice> for ControllerMode {
    fn from(c: ControllerChoice) -> Self {
        match c {
            ControllerChoice::State => ControllerMode::State,
            ControllerChoice::Output => ControllerMode::Output,
            ControllerChoice::OpenLoop => ControllerMode::OpenLoop,
        }
    }
}

/// Cartesian grid over dotted key paths, e.g. `"gains.k" = [[1.5, 4.0], [3.0, 4.0]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameters: toml::Table,
}

pub const BUNDLED: [(&str, &str); 7] = [
    ("case1_safe", include_str!("../configs/case1_safe.toml")),
    ("case1_unsafe", include_str!("../configs/case1_unsafe.toml")),
    ("case2_safe", include_str!("../configs/case2_safe.toml")),
    ("case2_unsafe", include_str!("../configs/case2_unsafe.toml")),
    ("case1_unsafe_placed", include_str!("../configs/case1_unsafe_placed.toml")),
    ("case2_safe_placed", include_str!("../configs/case2_safe_placed.toml")),
    ("case2_unsafe_placed", include_str!("../configs/case2_unsafe_placed.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Reads a file, or a bundled scenario by name when no such file exists.
pub fn load_text(path: &str) -> Result<String, Failure> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => bundled(path).map(str::to_string).ok_or_else(|| Failure::Config(format!("cannot read {path}: {e}"))),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, Failure> {
    toml::from_str(text).map_err(|e| Failure::Config(format!("config: {e}")))
}

pub fn parse_value(value: toml::Value) -> Result<ScenarioConfig, Failure> {
    value.try_into().map_err(|e: toml::de::Error| Failure::Config(format!("config: {e}")))
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, Failure> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Failure::Config(format!("{what}: ragged matrix")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl ScenarioConfig {
    pub fn plant(&self) -> Result<Plant, Failure> {
        match &self.plant {
            PlantConfig::Uav { length, rho, m_l, g, d_c, d_0, c_self } => {
                let mut p = build_uav(UavParams { length: *length, rho_lin: *rho, m_l: *m_l, g: *g, d_c: *d_c, d_0: *d_0 })?;
                if let Some(c) = c_self {
                    p.c_self = *c;
                }
                Ok(p)
            }
            PlantConfig::Custom { a, b, c, p, q, q1, q2, d1, d2, c_self, g1, g2, g3, g4, g5 } => {
                let poly = |rows: &Vec<Vec<f64>>| PolyRow { coeffs: rows.iter().map(|r| DVector::from_row_slice(r)).collect() };
                let raw = Plant {
                    a: matrix(a, "plant.a")?,
                    b: *b,
                    c: DVector::from_row_slice(c),
                    p: *p,
                    q: *q,
                    q1: *q1,
                    q2: *q2,
                    d1: *d1,
                    d2: *d2,
                    c_self: *c_self,
                    g1: matrix(g1, "plant.g1")?,
                    g2: poly(g2),
                    g3: poly(g3),
                    g4: DVector::from_row_slice(g4),
                    g5: DVector::from_row_slice(g5),
                };
                if raw.g2.coeffs.iter().chain(&raw.g3.coeffs).any(|c| c.len() != raw.g4.len()) {
                    return Err(Failure::Config("plant.g2/g3: coefficient rows must have m_d entries".into()));
                }
                Ok(validate_structure(raw)?)
            }
        }
    }

    pub fn exo(&self) -> Result<(ExoModel, DVector<f64>), Failure> {
        match &self.exo {
            ExoConfig::Uav { v0 } => {
                let v0 = v0.as_ref().map_or_else(uav_v0, |v| DVector::from_row_slice(v));
                Ok((uav_exo(), v0))
            }
            ExoConfig::Custom { s_r, s_d, pbar_r, pbar_d, v0 } => {
                let exo = validate_exo(matrix(s_r, "exo.s_r")?, matrix(s_d, "exo.s_d")?, DVector::from_row_slice(pbar_r), matrix(pbar_d, "exo.pbar_d")?)?;
                Ok((exo, DVector::from_row_slice(v0)))
            }
        }
    }

    pub fn barrier(&self) -> Result<BarrierSpec, Failure> {
        match self.barrier.family {
            BarrierFamily::Affine => Ok(BarrierSpec::Affine),
            BarrierFamily::TwoSidedDecay => {
                let m = self.barrier.m_delta.ok_or_else(|| Failure::Config("barrier.m_delta is required for two-sided-decay".into()))?;
                let s = self.barrier.sigma_delta.ok_or_else(|| Failure::Config("barrier.sigma_delta is required for two-sided-decay".into()))?;
                Ok(BarrierSpec::two_sided_decay(m, s)?)
            }
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let n = &self.numerics;
        SimConfig { cells: n.cells, dt: n.dt, t_end: n.t_end, snapshot_stride: n.snapshot_stride, blowup: 1e6 }
    }

    /// Applies `--refine`: cells times `factor`, dt over `factor`.
    pub fn refine(&mut self, factor: usize) {
        let f = factor.max(1);
        self.numerics.cells *= f;
        self.numerics.dt /= f as f64;
        self.numerics.snapshot_stride *= f;
    }

    pub fn scenario(&self) -> Result<Scenario, Failure> {
        let plant = self.plant()?;
        let (exo, v0) = self.exo()?;
        if v0.len() != exo.n_v() {
            return Err(Failure::Config(format!("exo.v0 has {} entries, expected {}", v0.len(), exo.n_v())));
        }
        if self.initial.y0.len() != plant.n() {
            return Err(Failure::Config(format!("initial.y0 has {} entries, expected {}", self.initial.y0.len(), plant.n())));
        }
        if self.gains.k.len() != plant.n() {
            return Err(Failure::Config(format!("gains.k has {} entries, expected {}", self.gains.k.len(), plant.n())));
        }
        let sim = self.sim_config();
        sim.validate(&plant).map_err(|e| Failure::Config(format!("numerics: {e}")))?;
        let cells = sim.cells;
        let ic = FieldIC { z0: self.initial.z.sample(cells), w0: self.initial.w.sample(cells), y0: DVector::from_row_slice(&self.initial.y0), v0 };
        let output = match &self.observer {
            None => None,
            Some(o) => {
                if o.l_d.len() != exo.n_d() || o.l_r.len() != exo.n_r() {
                    return Err(Failure::Config(format!("observer gains need {} and {} entries", exo.n_d(), exo.n_r())));
                }
                let estimate = ObserverState {
                    z_hat: ic.z0.iter().map(|v| v + o.field_offset).collect(),
                    w_hat: ic.w0.iter().map(|v| v + o.field_offset).collect(),
                    v_hat: ic.v0.map(|v| v + o.exo_offset),
                };
                let bounds = InitBounds::around(&estimate.z_hat, &estimate.w_hat, &estimate.v_hat, o.field_margin, o.exo_margin);
                let envelope = match self.envelope.as_ref().ok_or_else(|| Failure::Config("observer runs need an [envelope] table".into()))? {
                    EnvelopeConfig::Smooth { m_c, sigma_c } => EnvelopeChoice::Smooth { m_c: *m_c, sigma_c: *sigma_c },
                    EnvelopeConfig::Exact { xi_e } => EnvelopeChoice::Exact { xi_e: *xi_e },
                };
                Some(OutputSetup {
                    l_d: DVector::from_row_slice(&o.l_d),
                    l_r: DVector::from_row_slice(&o.l_r),
                    policy: if o.allow_non_hurwitz { HurwitzPolicy::Allow } else { HurwitzPolicy::Require },
                    estimate,
                    bounds,
                    envelope,
                    boundary: match o.boundary {
                        BoundaryChoice::Estimated => BoundaryMode::Estimated,
                        BoundaryChoice::Measured => BoundaryMode::Measured,
                    },
                })
            }
        };
        let controller: ControllerMode = self.numerics.controller.into();
        if controller == ControllerMode::Output && output.is_none() {
            return Err(Failure::Config("output feedback needs an [observer] table".into()));
        }
        Ok(Scenario {
            plant,
            exo,
            ic,
            spec: self.barrier()?,
            gains: Gains::new(self.gains.k.clone())?,
            sim,
            controller,
            kernel_nodes: self.numerics.kernel_nodes,
            epsilon: self.barrier.epsilon,
            t_a: self.barrier.t_a,
            tol_h: self.numerics.tol_h,
            output,
        })
    }
}
