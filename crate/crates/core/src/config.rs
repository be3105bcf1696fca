//! Run configuration, presets and validation.
//!
//! A config file is a JSON object whose `scenario` key picks a preset; every
//! other key overrides the preset value at the same path. Unknown keys are
//! rejected with their full path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ansatz::Orientation;
use crate::error::{LabError, Result};
use crate::linesolver::BumpSpec;
use crate::material::MaterialModel;
use crate::periodic::{FourierProfile, PeriodicIC, PeriodicMode};
use crate::rarefaction::RiemannEndStates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[serde(alias = "combined")]
    Default,
    PureRarefaction,
    PurePeriodic,
    Sanity,
    MirroredAnsatz,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Default,
        Scenario::PureRarefaction,
        Scenario::PurePeriodic,
        Scenario::Sanity,
        Scenario::MirroredAnsatz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Default => "default",
            Scenario::PureRarefaction => "pure-rarefaction",
            Scenario::PurePeriodic => "pure-periodic",
            Scenario::Sanity => "sanity",
            Scenario::MirroredAnsatz => "mirrored-ansatz",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "default" | "combined" => Ok(Scenario::Default),
            "pure-rarefaction" => Ok(Scenario::PureRarefaction),
            "pure-periodic" => Ok(Scenario::PurePeriodic),
            "sanity" => Ok(Scenario::Sanity),
            "mirrored-ansatz" => Ok(Scenario::MirroredAnsatz),
            other => Err(LabError::config(
                "scenario",
                format!(
                    "unknown scenario '{other}'; expected one of {}",
                    Scenario::ALL.map(|s| s.name()).join(", ")
                ),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// only "power-law" is supported
    pub family: String,
    pub gamma: f64,
    pub strain_lo: f64,
    pub strain_hi: f64,
    /// explicit E; when absent E = young_margin * E1
    pub young: Option<f64>,
    pub young_margin: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesConfig {
    pub v_l: f64,
    pub u_l: f64,
    /// wave strength |v_r - v_l|; ignored when v_r is given
    pub delta: Option<f64>,
    pub v_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    pub period: f64,
    pub epsilon: f64,
    pub phi: FourierProfile,
    pub psi: FourierProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub mode: PeriodicMode,
    pub left: SideConfig,
    pub right: SideConfig,
    /// start of the exponential-fit window
    pub transient: f64,
    pub sobolev_order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub dx: f64,
    pub horizon: f64,
    /// spacing of diagnostic snapshots in time
    pub snapshot_interval: f64,
    /// offset in steps of the neighbours used for time differences
    pub fd_offset_steps: u64,
    /// spacing of wave-form residual evaluations in time
    pub waveform_interval: f64,
    /// times of full-field CSV dumps
    pub dump_times: Vec<f64>,
    /// node stride inside a dump
    pub dump_stride: usize,
    /// distance kept from the box edges by the practical window
    pub window_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub material: bool,
    pub rarefaction: bool,
    pub periodic_decay: bool,
    pub residual_decay: bool,
    pub convergence: bool,
    pub apriori: bool,
    pub refinement: bool,
    pub waveform: bool,
    pub sobolev: bool,
    pub convergence_ratio: f64,
    pub convergence_spearman: f64,
    pub refinement_tolerance: f64,
    pub residual_decay_tolerance: f64,
    pub waveform_max: f64,
    pub sobolev_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub material: MaterialConfig,
    pub states: StatesConfig,
    pub periodic: PeriodicConfig,
    pub orientation: Orientation,
    pub bump: BumpSpec,
    pub grid: GridConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

fn side(period: f64, epsilon: f64) -> SideConfig {
    SideConfig {
        period,
        epsilon,
        phi: FourierProfile {
            cos: vec![1.0, 0.3],
            sin: vec![],
        },
        psi: FourierProfile {
            cos: vec![],
            sin: vec![0.5],
        },
    }
}

impl RunConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = RunConfig {
            scenario,
            material: MaterialConfig {
                family: "power-law".into(),
                gamma: 2.0,
                strain_lo: 0.5,
                strain_hi: 2.5,
                young: None,
                young_margin: 2.0,
                tau: 1.0,
            },
            states: StatesConfig {
                v_l: 1.0,
                u_l: 0.0,
                delta: Some(0.2),
                v_r: None,
            },
            periodic: PeriodicConfig {
                mode: PeriodicMode::Relaxation,
                left: side(5.12, 1e-3),
                right: side(2.56, 1e-3),
                transient: 20.0,
                sobolev_order: 1,
            },
            orientation: Orientation::Corrected,
            bump: BumpSpec::default(),
            grid: GridConfig {
                half_width: 200.0,
                dx: 0.02,
                horizon: 100.0,
                snapshot_interval: 0.5,
                fd_offset_steps: 4,
                waveform_interval: 10.0,
                dump_times: vec![0.0, 50.0, 100.0],
                dump_stride: 25,
                window_margin: 10.0,
            },
            diagnostics: DiagnosticsConfig {
                material: true,
                rarefaction: false,
                periodic_decay: true,
                residual_decay: true,
                convergence: true,
                apriori: true,
                refinement: true,
                waveform: true,
                sobolev: true,
                convergence_ratio: 0.2,
                convergence_spearman: -0.8,
                refinement_tolerance: 0.2,
                residual_decay_tolerance: 0.2,
                waveform_max: 1e-3,
                sobolev_samples: 100,
            },
            output: None,
            seed: 0,
        };
        match scenario {
            Scenario::Default => {}
            Scenario::MirroredAnsatz => c.orientation = Orientation::Mirrored,
            Scenario::PureRarefaction => {
                c.periodic.left.epsilon = 0.0;
                c.periodic.right.epsilon = 0.0;
                c.diagnostics.rarefaction = true;
            }
            Scenario::PurePeriodic => {
                c.states.delta = Some(0.0);
                c.periodic.right = c.periodic.left.clone();
            }
            Scenario::Sanity => {
                c.states.delta = Some(0.0);
                c.periodic.left.epsilon = 0.0;
                c.periodic.right.epsilon = 0.0;
                c.bump = BumpSpec::zero();
                c.grid.half_width = 20.0;
                c.grid.horizon = 20.0;
                c.periodic.transient = 5.0;
                c.grid.dump_times = vec![0.0, 20.0];
                c.diagnostics.refinement = false;
            }
        }
        c
    }

    /// Parses a JSON document: preset named by `scenario` (default "default")
    /// overlaid with the document's keys.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| LabError::config("", e.to_string()))?;
        let Value::Object(map) = &doc else {
            return Err(LabError::config("", "config must be a JSON object"));
        };
        let scenario = match map.get("scenario") {
            None => Scenario::Default,
            Some(Value::String(s)) => Scenario::parse(s)?,
            Some(_) => return Err(LabError::config("scenario", "expected a string")),
        };
        let mut base = serde_json::to_value(Self::preset(scenario))?;
        merge(&mut base, doc);
        let cfg: RunConfig = serde_path_to_error::deserialize(base).map_err(|e| {
            let path = e.path().to_string();
            LabError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn model(&self) -> Result<MaterialModel> {
        let m = &self.material;
        if m.family != "power-law" {
            return Err(LabError::config(
                "material.family",
                format!("unsupported family '{}'", m.family),
            ));
        }
        match m.young {
            Some(e) => MaterialModel::power_law(m.gamma, m.strain_lo, m.strain_hi, e, m.tau),
            None => MaterialModel::power_law_with_margin(m.gamma, m.strain_lo, m.strain_hi, m.young_margin, m.tau),
        }
    }

    pub fn end_states(&self, model: &MaterialModel) -> Result<RiemannEndStates> {
        let s = &self.states;
        match (s.v_r, s.delta) {
            (Some(v_r), _) => RiemannEndStates::on_rarefaction_curve(model, s.v_l, s.u_l, v_r),
            (None, Some(d)) => RiemannEndStates::with_strength(model, s.v_l, s.u_l, d),
            (None, None) => Err(LabError::config("states", "either delta or v_r is required")),
        }
    }

    /// Far-field initial data (left, right) around the end states.
    pub fn periodic_ics(&self, states: &RiemannEndStates) -> Result<(PeriodicIC, PeriodicIC)> {
        let mk = |s: &SideConfig, v: f64, u: f64| PeriodicIC::new(s.period, s.epsilon, v, u, s.phi.clone(), s.psi.clone());
        Ok((
            mk(&self.periodic.left, states.v_l, states.u_l)?,
            mk(&self.periodic.right, states.v_r, states.u_r)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model().map_err(|e| LabError::config("material", e.to_string()))?;
        if model.young <= model.e1 {
            return Err(LabError::config(
                "material.young",
                format!("E = {} must exceed the certified bound E1 = {}", model.young, model.e1),
            ));
        }
        let g = &self.grid;
        let positive = [
            ("grid.dx", g.dx),
            ("grid.half_width", g.half_width),
            ("grid.horizon", g.horizon),
            ("grid.snapshot_interval", g.snapshot_interval),
            ("grid.waveform_interval", g.waveform_interval),
            ("periodic.left.period", self.periodic.left.period),
            ("periodic.right.period", self.periodic.right.period),
        ];
        for (path, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LabError::config(path, format!("must be positive, got {v}")));
            }
        }
        if g.half_width <= g.dx {
            return Err(LabError::config("grid.half_width", "must exceed dx"));
        }
        if g.fd_offset_steps == 0 {
            return Err(LabError::config("grid.fd_offset_steps", "must be at least 1"));
        }
        if g.window_margin < 0.0 || 2.0 * g.window_margin >= 2.0 * g.half_width {
            return Err(LabError::config("grid.window_margin", "must lie in [0, L)"));
        }
        for (path, s) in [("periodic.left", &self.periodic.left), ("periodic.right", &self.periodic.right)] {
            if !(s.epsilon >= 0.0) {
                return Err(LabError::config(format!("{path}.epsilon"), "must be nonnegative"));
            }
            let cells = s.period / g.dx;
            let n = cells.round();
            if (cells - n).abs() > 1e-9 * cells || !(n as usize).is_power_of_two() || n < 64.0 {
                return Err(LabError::config(
                    format!("{path}.period"),
                    format!("period / dx = {cells} must be a power of two >= 64"),
                ));
            }
        }
        if let Some(d) = self.states.delta {
            if !(d >= 0.0) {
                return Err(LabError::config("states.delta", "must be nonnegative"));
            }
        }
        self.bump.validate().map_err(|e| LabError::config("bump", e.to_string()))?;
        let d = &self.diagnostics;
        if !(d.convergence_ratio > 0.0) || !(d.refinement_tolerance > 0.0) || !(d.residual_decay_tolerance > 0.0) || !(d.waveform_max > 0.0) {
            return Err(LabError::config("diagnostics", "tolerances must be positive"));
        }
        let states = self.end_states(&model).map_err(|e| LabError::config("states", e.to_string()))?;
        self.periodic_ics(&states).map_err(|e| LabError::config("periodic", e.to_string()))?;
        Ok(())
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
