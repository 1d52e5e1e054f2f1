//! Scenario files: a Hamiltonian, start points, integrator overrides, a task
//! list and optional plot options, all in versioned JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cplxdyn_core::model::{PoleOrder, TurningPointSearch};
use cplxdyn_core::{clit, Hamiltonian64, IntegratorConfig64, PoleInfo64, Region64, TurningPoint64, C64};

use crate::error::AppError;
use crate::expr::{parse_potential, PotentialSpec};
use crate::literal::region_from;
use crate::presets::Preset;

pub const SCENARIO_SCHEMA: &str = "cplxdyn.scenario/1";

/// Complex number as stored in data files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cx> for C64 {
    fn from(z: Cx) -> Self {
        clit(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub integrator: IntegratorOverrides,
    #[serde(default)]
    pub turning_points: TurningPointOptions,
    #[serde(default)]
    pub starts: Vec<Start>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub power: usize,
    pub potential: String,
    pub energy: Cx,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOverrides {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub t_max: Option<f64>,
    pub escape_radius: Option<f64>,
    pub pole_radius: Option<f64>,
    pub zeno_speed: Option<f64>,
    pub closure_tol: Option<f64>,
    pub max_steps: Option<usize>,
}

impl IntegratorOverrides {
    pub fn apply(&self, mut c: IntegratorConfig64) -> IntegratorConfig64 {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.rtol, self.rtol);
        set(&mut c.atol, self.atol);
        set(&mut c.t_max, self.t_max);
        set(&mut c.escape_radius, self.escape_radius);
        set(&mut c.pole_radius, self.pole_radius);
        set(&mut c.zeno_speed, self.zeno_speed);
        set(&mut c.closure_tol, self.closure_tol);
        if let Some(m) = self.max_steps {
            c.max_steps = m;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurningPointOptions {
    /// Family bound for `exp(1/x)`; ignored for rational potentials.
    pub max_count: Option<usize>,
    pub region: Option<[f64; 4]>,
}

/// A start point with its momentum branch, given either as an index or as a
/// direction the initial velocity should point along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub x0: Cx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Cx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: Cx,
    pub to: Cx,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// One CSV per start; `starts` selects by index, default all.
    Trajectory {
        #[serde(default)]
        starts: Option<Vec<usize>>,
        #[serde(default)]
        integrator: Option<IntegratorOverrides>,
    },
    /// Lines leaving simple poles. Without `angles_deg` the local law gives the
    /// directions, which needs `n = 2`.
    Separatrix {
        #[serde(default)]
        pole: Option<Cx>,
        #[serde(default)]
        angles_deg: Option<Vec<f64>>,
        #[serde(default)]
        offset: Option<f64>,
        #[serde(default)]
        integrator: Option<IntegratorOverrides>,
    },
    /// Transit times for listed points and/or evenly spaced points on a line.
    Transit {
        #[serde(default)]
        points: Vec<Cx>,
        #[serde(default)]
        line: Option<Line>,
    },
    TransitDiscontinuity {
        from: Cx,
        to: Cx,
    },
    TransitGrid {
        region: [f64; 4],
        resolution: [usize; 2],
    },
    Quadrature {
        preset: Preset,
        #[serde(default)]
        energy: Option<Cx>,
    },
    TurningPoints {},
    Probability {
        energies: Vec<f64>,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Trajectory { .. } => "trajectory",
            Task::Separatrix { .. } => "separatrix",
            Task::Transit { .. } => "transit",
            Task::TransitDiscontinuity { .. } => "transit-discontinuity",
            Task::TransitGrid { .. } => "transit-grid",
            Task::Quadrature { .. } => "quadrature",
            Task::TurningPoints {} => "turning-points",
            Task::Probability { .. } => "probability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderOptions {
    pub region: [f64; 4],
    /// Pixel width; height follows the region's aspect ratio.
    #[serde(default)]
    pub width: Option<u32>,
}

/// A scenario with its potential parsed and its Hamiltonian built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub spec: PotentialSpec,
    pub hamiltonian: Hamiltonian64,
    pub config: IntegratorConfig64,
    pub turning_points: Vec<TurningPoint64>,
    pub poles: Vec<PoleInfo64>,
}

pub fn load(path: &Path) -> Result<Scenario, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn config_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

impl Scenario {
    pub fn prepare(self) -> Result<Prepared, AppError> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(config_err(format!("unsupported schema '{}', expected '{SCENARIO_SCHEMA}'", self.schema)));
        }
        let spec = parse_potential(&self.hamiltonian.potential).map_err(|e| config_err(format!("potential: {e}")))?;
        let potential = spec.to_potential().map_err(|e| config_err(format!("potential: {e}")))?;
        let h = &self.hamiltonian;
        let hamiltonian =
            Hamiltonian64::new(h.power, potential, h.energy.into()).map_err(|e| config_err(format!("hamiltonian: {e}")))?;
        let config = self.integrator.apply(IntegratorConfig64::default());
        config.validate().map_err(|e| config_err(e.to_string()))?;

        let region = match &self.turning_points.region {
            Some(r) => Some(region_from(r).map_err(|e| config_err(format!("turning_points.region: {e}")))?),
            None => None,
        };
        let search = TurningPointSearch {
            region,
            max_count: self.turning_points.max_count.unwrap_or(TurningPointSearch::<f64>::default().max_count),
        };
        let turning_points = hamiltonian.turning_points(&search).map_err(|e| AppError::Numeric(format!("turning points: {e}")))?;
        let poles = hamiltonian.potential().poles().map_err(|e| AppError::Numeric(format!("poles: {e}")))?;

        for (k, s) in self.starts.iter().enumerate() {
            match (s.branch, s.direction) {
                (Some(b), None) if b < h.power => {}
                (Some(b), None) => return Err(config_err(format!("starts[{k}]: branch {b} out of range"))),
                (None, Some(d)) if C64::from(d).norm() > 0.0 => {}
                (None, Some(_)) => return Err(config_err(format!("starts[{k}]: direction must be nonzero"))),
                _ => return Err(config_err(format!("starts[{k}]: give exactly one of branch or direction"))),
            }
        }
        for (k, task) in self.tasks.iter().enumerate() {
            self.check_task(task, &poles).map_err(|e| config_err(format!("tasks[{k}] ({}): {e}", task.kind())))?;
        }
        if let Some(r) = &self.render {
            region_from(&r.region).map_err(|e| config_err(format!("render.region: {e}")))?;
        }
        Ok(Prepared { spec, hamiltonian, config, turning_points, poles, scenario: self })
    }

    fn check_task(&self, task: &Task, poles: &[PoleInfo64]) -> Result<(), String> {
        let n = self.hamiltonian.power;
        let overrides = |o: &Option<IntegratorOverrides>| -> Result<(), String> {
            if let Some(o) = o {
                o.apply(self.integrator.apply(IntegratorConfig64::default())).validate().map_err(|e| e.to_string())?;
            }
            Ok(())
        };
        match task {
            Task::Trajectory { starts, integrator } => {
                overrides(integrator)?;
                if let Some(bad) = starts.iter().flatten().find(|&&i| i >= self.starts.len()) {
                    return Err(format!("start index {bad} out of range"));
                }
            }
            Task::Separatrix { pole, angles_deg, offset, integrator } => {
                overrides(integrator)?;
                if angles_deg.is_none() && n != 2 {
                    return Err("angles_deg is required unless the momentum power is 2".into());
                }
                if let Some(p) = pole {
                    let at = poles.iter().find(|q| (q.location - C64::from(*p)).norm() < 1e-6);
                    match at {
                        None => return Err(format!("no pole at {} {:+}i", p.re, p.im)),
                        Some(q) if angles_deg.is_none() && q.order != PoleOrder::Finite(1) => {
                            return Err("separatrix directions are only known at simple poles".into())
                        }
                        Some(_) => {}
                    }
                }
                if let Some(o) = offset {
                    if !(1e-8..=1e-2).contains(o) {
                        return Err(format!("offset {o} outside [1e-8, 1e-2]"));
                    }
                }
            }
            Task::Transit { points, line } => {
                if n != 2 {
                    return Err("transit times need momentum power 2".into());
                }
                if let Some(l) = line {
                    if l.samples < 2 {
                        return Err("line needs at least 2 samples".into());
                    }
                }
                if points.is_empty() && line.is_none() {
                    return Err("give points or a line".into());
                }
            }
            Task::TransitDiscontinuity { .. } if n != 2 => return Err("transit times need momentum power 2".into()),
            Task::TransitGrid { region, resolution } => {
                if n != 2 {
                    return Err("transit times need momentum power 2".into());
                }
                region_from(region)?;
                if resolution.contains(&0) {
                    return Err("resolution must be positive".into());
                }
            }
            Task::Probability { energies } => {
                if let Some(e) = energies.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                    return Err(format!("energy {e} must be positive"));
                }
            }
            Task::TransitDiscontinuity { .. } | Task::Quadrature { .. } | Task::TurningPoints {} => {}
        }
        Ok(())
    }
}

impl Prepared {
    pub fn render_region(&self) -> Option<Region64> {
        self.scenario.render.as_ref().map(|r| region_from(&r.region).expect("validated"))
    }
}
