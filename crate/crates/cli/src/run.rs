//! Executes a prepared scenario into a result directory.
//!
//! Tasks expand into independent jobs that run in parallel; results come back
//! in scenario order and a single writer names and writes the files, so the
//! output is the same whatever the thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use cplxdyn_core::analysis::{
    classify_trajectory, pole_separatrix_seeds, trace_separatrix, transit_discontinuity, transit_grid, transit_time,
    BranchSide, EscapeSide, GridScanResult, SeparatrixSeed, TrajectoryLabel,
};
use cplxdyn_core::integrator::integrate;
use cplxdyn_core::model::PoleOrder;
use cplxdyn_core::{IntegratorConfig64, PoleInfo64, Termination, Trajectory64, C64};

use crate::error::AppError;
use crate::presets::{evaluate, probability_normalization, Preset};
use crate::render::{render_svg, Bundle, Curve, CurveKind, GridFile, DEFAULT_WIDTH};
use crate::scenario::{Cx, IntegratorOverrides, Prepared, Start, Task};

pub const MANIFEST_SCHEMA: &str = "cplxdyn.manifest/1";
pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "re_x", "im_x", "re_p", "im_p", "phase", "energy_error", "inv_speed"];
pub const TRANSIT_COLUMNS: [&str; 5] = ["re_x0", "im_x0", "transit_time", "closest_approach", "side"];

pub fn cx(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Shortest round-trip text, switching to exponent form for very small or large magnitudes.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory64) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRAJECTORY_COLUMNS)?;
    for s in &traj.samples {
        wr.write_record([s.t, s.x.re, s.x.im, s.p.re, s.p.im, s.phase, s.energy_error, s.speed_inverse].map(fmt_num))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn termination_json(t: &Termination<f64>) -> Value {
    match t {
        Termination::Escape { direction } => json!({ "kind": "escape", "direction": cx(*direction) }),
        Termination::ZenoCapture { turning_point } => json!({ "kind": "zeno-capture", "turning_point": cx(*turning_point) }),
        Termination::PoleEncounter { pole } => json!({ "kind": "pole-encounter", "pole": cx(*pole) }),
        Termination::Periodic { period } => json!({ "kind": "periodic", "period": period }),
        Termination::MaxTime => json!({ "kind": "max-time" }),
        Termination::MaxSteps => json!({ "kind": "max-steps" }),
        Termination::Stopped => json!({ "kind": "stopped" }),
    }
}

pub fn class_label(traj: &Trajectory64) -> &'static str {
    let c = classify_trajectory(traj);
    match (c.label, c.side) {
        (TrajectoryLabel::Escape, Some(EscapeSide::West)) => "escape-west",
        (TrajectoryLabel::Escape, _) => "escape-east",
        (TrajectoryLabel::ZenoCapture, _) => "zeno-capture",
        (TrajectoryLabel::Periodic, _) => "periodic",
        (TrajectoryLabel::PoleEncounter, _) => "pole-encounter",
        (TrajectoryLabel::Timeout, _) => "timeout",
    }
}

fn side_label(s: BranchSide) -> &'static str {
    match s {
        BranchSide::BelowSeparatrix => "below",
        BranchSide::AboveSeparatrix => "above",
        BranchSide::Unknown => "unknown",
    }
}

fn pole_json(p: &PoleInfo64) -> Value {
    let order = match p.order {
        PoleOrder::Finite(k) => json!(k),
        PoleOrder::Essential => json!("essential"),
    };
    json!({ "location": cx(p.location), "order": order, "residue": p.residue.map(cx) })
}

enum Work {
    Trajectory { index: usize, start: Start, config: IntegratorConfig64 },
    Separatrix { seed: SeparatrixSeed<f64>, config: IntegratorConfig64 },
    Transit { points: Vec<C64> },
    Discontinuity { from: C64, to: C64 },
    Grid { region: [f64; 4], resolution: (usize, usize) },
    Quadrature { preset: Preset, energy: C64 },
    TurningPoints,
    Probability { energies: Vec<f64> },
}

enum Product {
    Curve { kind: CurveKind, traj: Trajectory64, record: Map<String, Value> },
    Table { rows: Vec<[String; 5]>, record: Map<String, Value> },
    Grid { grid: GridScanResult<f64>, record: Map<String, Value> },
    Record(Map<String, Value>),
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn task_config(p: &Prepared, o: &Option<IntegratorOverrides>) -> IntegratorConfig64 {
    o.map_or(p.config, |o| o.apply(p.config))
}

/// Expands one task into jobs; an `Err` here is a task-level failure recorded
/// without running anything.
fn expand(p: &Prepared, task: &Task) -> Result<Vec<Work>, String> {
    let h = &p.hamiltonian;
    Ok(match task {
        Task::Trajectory { starts, integrator } => {
            let config = task_config(p, integrator);
            let picked: Vec<usize> = starts.clone().unwrap_or_else(|| (0..p.scenario.starts.len()).collect());
            picked.into_iter().map(|index| Work::Trajectory { index, start: p.scenario.starts[index], config }).collect()
        }
        Task::Separatrix { pole, angles_deg, offset, integrator } => {
            let config = task_config(p, integrator);
            let poles: Vec<&PoleInfo64> = p
                .poles
                .iter()
                .filter(|q| pole.is_none_or(|want| (q.location - C64::from(want)).norm() < 1e-6))
                .filter(|q| angles_deg.is_some() || q.order == PoleOrder::Finite(1))
                .filter(|q| q.order != PoleOrder::Essential)
                .collect();
            let mut jobs = Vec::new();
            for q in poles {
                match angles_deg {
                    Some(angles) => {
                        let offset = offset.unwrap_or(cplxdyn_core::analysis::DEFAULT_OFFSET);
                        jobs.extend(angles.iter().map(|a| Work::Separatrix {
                            seed: SeparatrixSeed { pole: q.location, direction_angle: a.to_radians(), offset, time_scale: 0.0 },
                            config,
                        }));
                    }
                    None => {
                        let seeds = pole_separatrix_seeds(h, q).map_err(|e| e.to_string())?;
                        let residue = q.residue.map_or(1.0, |r| r.norm());
                        jobs.extend(seeds.into_iter().map(|s| Work::Separatrix {
                            seed: offset.map_or(s, |o| s.with_offset(o, residue)),
                            config,
                        }));
                    }
                }
            }
            jobs
        }
        Task::Transit { points, line } => {
            let mut pts: Vec<C64> = points.iter().map(|&z| z.into()).collect();
            if let Some(l) = line {
                let (a, b) = (C64::from(l.from), C64::from(l.to));
                pts.extend((0..l.samples).map(|k| a + (b - a) * (k as f64 / (l.samples - 1) as f64)));
            }
            vec![Work::Transit { points: pts }]
        }
        Task::TransitDiscontinuity { from, to } => vec![Work::Discontinuity { from: (*from).into(), to: (*to).into() }],
        Task::TransitGrid { region, resolution } => {
            vec![Work::Grid { region: *region, resolution: (resolution[0], resolution[1]) }]
        }
        Task::Quadrature { preset, energy } => {
            vec![Work::Quadrature { preset: *preset, energy: energy.map_or(h.energy(), C64::from) }]
        }
        Task::TurningPoints {} => vec![Work::TurningPoints],
        Task::Probability { energies } => vec![Work::Probability { energies: energies.clone() }],
    })
}

fn curve_record(traj: &Trajectory64) -> Map<String, Value> {
    obj(json!({
        "termination": termination_json(&traj.termination),
        "class": class_label(traj),
        "end_time": traj.end_time(),
        "samples": traj.samples.len(),
        "max_energy_error": traj.max_energy_error(),
    }))
}

fn execute(p: &Prepared, work: &Work) -> Result<Product, String> {
    let h = &p.hamiltonian;
    let cfg = &p.config;
    let s = |e: &dyn std::fmt::Display| e.to_string();
    match work {
        Work::Trajectory { index, start, config } => {
            let x0 = C64::from(start.x0);
            let branch = match (start.branch, start.direction) {
                (Some(b), _) => b,
                (None, Some(d)) => h.branch_along(x0, d.into()).map_err(|e| s(&e))?,
                (None, None) => unreachable!("validated start"),
            };
            let traj = integrate(h, x0, branch, config).map_err(|e| s(&e))?;
            let mut record = obj(json!({ "start": index, "x0": cx(x0), "branch": branch, "p0": cx(traj.origin.p0) }));
            record.extend(curve_record(&traj));
            Ok(Product::Curve { kind: CurveKind::Trajectory, traj, record })
        }
        Work::Separatrix { seed, config } => {
            let traj = trace_separatrix(h, seed, config).map_err(|e| s(&e))?;
            let mut record = obj(json!({
                "pole": cx(seed.pole),
                "angle_deg": seed.direction_angle.to_degrees(),
                "offset": seed.offset,
                "x0": cx(seed.start()),
            }));
            record.extend(curve_record(&traj));
            Ok(Product::Curve { kind: CurveKind::Separatrix, traj, record })
        }
        Work::Transit { points } => {
            let results: Vec<_> = points.par_iter().map(|&x0| (x0, transit_time(h, x0, cfg))).collect();
            let mut failures = Vec::new();
            let rows = results
                .iter()
                .map(|(x0, r)| match r {
                    Ok(t) => [
                        fmt_num(x0.re),
                        fmt_num(x0.im),
                        t.transit_time.map(fmt_num).unwrap_or_default(),
                        fmt_num(t.closest_approach),
                        side_label(t.branch_side).to_string(),
                    ],
                    Err(e) => {
                        failures.push(json!({ "x0": cx(*x0), "error": e.to_string() }));
                        [fmt_num(x0.re), fmt_num(x0.im), String::new(), String::new(), "error".into()]
                    }
                })
                .collect::<Vec<_>>();
            let reached = results.iter().filter(|(_, r)| matches!(r, Ok(t) if t.transit_time.is_some())).count();
            if !failures.is_empty() {
                return Err(format!("{} of {} transits failed: {}", failures.len(), points.len(), Value::Array(failures)));
            }
            Ok(Product::Table { rows, record: obj(json!({ "points": points.len(), "reached": reached })) })
        }
        Work::Discontinuity { from, to } => {
            let d = transit_discontinuity(h, *from, *to, cfg).map_err(|e| s(&e))?;
            Ok(Product::Record(obj(json!({
                "location": cx(d.location),
                "jump": d.jump,
                "time_before": d.time_before,
                "time_after": d.time_after,
            }))))
        }
        Work::Grid { region, resolution } => {
            let r = crate::literal::region_from(region).map_err(|e| s(&e))?;
            let grid = transit_grid(h, &r, *resolution, cfg).map_err(|e| s(&e))?;
            let reached = grid.times.iter().flatten().count();
            let record = obj(json!({ "reached": reached, "boundary_points": grid.boundary_estimate.len() }));
            Ok(Product::Grid { grid, record })
        }
        Work::Quadrature { preset, energy } => {
            let q = evaluate(*preset, *energy).map_err(|e| s(&e))?;
            Ok(Product::Record(obj(json!({
                "preset": preset,
                "energy": cx(*energy),
                "value": cx(q.value),
                "reference": q.reference.map(cx),
            }))))
        }
        Work::TurningPoints => Ok(Product::Record(obj(json!({
            "turning_points": p.turning_points.iter().map(|tp| json!({ "location": cx(tp.location), "multiplicity": tp.multiplicity })).collect::<Vec<_>>(),
        })))),
        Work::Probability { energies } => {
            let norms = energies
                .iter()
                .map(|&e| probability_normalization(e).map(|n| json!({ "energy": e, "normalization": n })))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| s(&e))?;
            Ok(Product::Record(obj(json!({ "normalizations": norms }))))
        }
    }
}

pub struct RunOutcome {
    pub manifest: Value,
    pub bundle: Bundle,
    /// Any task or figure failed.
    pub failed: bool,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    std::fs::write(path, bytes).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn grid_file(g: &GridScanResult<f64>) -> GridFile {
    let r = g.region;
    GridFile {
        region: [r.re_min, r.re_max, r.im_min, r.im_max],
        resolution: [g.resolution.0, g.resolution.1],
        times: g.times.clone(),
        boundary: g.boundary_estimate.iter().map(|&z| Cx::from(z)).collect(),
    }
}

/// Runs every task and writes `manifest.json` plus per-task files into `out`.
/// `timestamp` (seconds since the epoch) is stored in its own field so runs can
/// be compared byte for byte without it.
pub fn run(p: &Prepared, out: &Path, timestamp: u64) -> Result<RunOutcome, AppError> {
    std::fs::create_dir_all(out).map_err(|e| AppError::Io(format!("{}: {e}", out.display())))?;

    let expanded: Vec<Result<Vec<Work>, String>> = p.scenario.tasks.iter().map(|t| expand(p, t)).collect();
    let jobs: Vec<(usize, &Work)> = expanded
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.as_ref().ok().map(|w| (k, w)))
        .flat_map(|(k, ws)| ws.iter().map(move |w| (k, w)))
        .collect();
    let results: Vec<Result<Product, String>> = jobs.par_iter().map(|(_, w)| execute(p, w)).collect();

    let mut bundle = Bundle {
        turning_points: p.turning_points.iter().map(|tp| tp.location).collect(),
        poles: p.poles.iter().map(|q| q.location).collect(),
        ..Bundle::default()
    };
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let mut next_name = |stem: &'static str, ext: &str| {
        let k = counters.entry(stem).or_insert(0);
        let name = format!("{stem}-{k}.{ext}");
        *k += 1;
        name
    };

    let mut items: Vec<Vec<Value>> = vec![Vec::new(); p.scenario.tasks.len()];
    let mut task_failed = vec![false; p.scenario.tasks.len()];
    for ((task, _), result) in jobs.iter().zip(results) {
        let item = match result {
            Err(e) => {
                task_failed[*task] = true;
                json!({ "status": "failed", "error": e })
            }
            Ok(Product::Curve { kind, traj, mut record }) => {
                let stem = if kind == CurveKind::Trajectory { "trajectory" } else { "separatrix" };
                let name = next_name(stem, "csv");
                let mut buf = Vec::new();
                write_trajectory_csv(&mut buf, &traj).map_err(|e| AppError::Io(e.to_string()))?;
                write_file(&out.join(&name), &buf)?;
                bundle.curves.push(Curve { kind, points: traj.positions().collect() });
                let mut m = obj(json!({ "status": "ok", "file": name }));
                m.append(&mut record);
                Value::Object(m)
            }
            Ok(Product::Table { rows, mut record }) => {
                let name = next_name("transit", "csv");
                let mut wr = csv::Writer::from_writer(Vec::new());
                wr.write_record(TRANSIT_COLUMNS).map_err(|e| AppError::Io(e.to_string()))?;
                for r in &rows {
                    wr.write_record(r).map_err(|e| AppError::Io(e.to_string()))?;
                }
                let buf = wr.into_inner().map_err(|e| AppError::Io(e.to_string()))?;
                write_file(&out.join(&name), &buf)?;
                let mut m = obj(json!({ "status": "ok", "file": name }));
                m.append(&mut record);
                Value::Object(m)
            }
            Ok(Product::Grid { grid, mut record }) => {
                let name = next_name("transit-grid", "json");
                let g = grid_file(&grid);
                let text = serde_json::to_string(&g).map_err(|e| AppError::Io(e.to_string()))?;
                write_file(&out.join(&name), text.as_bytes())?;
                bundle.grids.push(g);
                let mut m = obj(json!({ "status": "ok", "file": name }));
                m.append(&mut record);
                Value::Object(m)
            }
            Ok(Product::Record(mut record)) => {
                let mut m = obj(json!({ "status": "ok" }));
                m.append(&mut record);
                Value::Object(m)
            }
        };
        items[*task].push(item);
    }

    let tasks: Vec<Value> = p
        .scenario
        .tasks
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut m = obj(json!({ "index": k, "kind": t.kind() }));
            match &expanded[k] {
                Err(e) => {
                    task_failed[k] = true;
                    m.insert("status".into(), json!("failed"));
                    m.insert("error".into(), json!(e));
                }
                Ok(_) => {
                    m.insert("status".into(), json!(if task_failed[k] { "failed" } else { "ok" }));
                }
            }
            m.insert("items".into(), Value::Array(std::mem::take(&mut items[k])));
            Value::Object(m)
        })
        .collect();

    let mut figures = Vec::new();
    let mut figure_failed = false;
    if let (Some(opts), Some(region)) = (&p.scenario.render, p.render_region()) {
        let name = next_name("figure", "svg");
        match render_svg(&bundle, &region, opts.width.unwrap_or(DEFAULT_WIDTH)) {
            Ok(svg) => {
                write_file(&out.join(&name), svg.as_bytes())?;
                figures.push(json!({ "status": "ok", "file": name }));
            }
            Err(e) => {
                figure_failed = true;
                figures.push(json!({ "status": "failed", "error": e.to_string() }));
            }
        }
    }

    let failed = figure_failed || task_failed.iter().any(|f| *f);
    let h = &p.hamiltonian;
    let c = &p.config;
    let manifest = json!({
        "schema": MANIFEST_SCHEMA,
        "scenario": p.scenario.name,
        "status": if failed { "failed" } else { "ok" },
        "hamiltonian": { "power": h.power(), "potential": p.spec.to_string(), "energy": cx(h.energy()) },
        "integrator": {
            "rtol": c.rtol, "atol": c.atol, "t_max": c.t_max, "escape_radius": c.escape_radius,
            "pole_radius": c.pole_radius, "zeno_speed": c.zeno_speed, "closure_tol": c.closure_tol,
            "max_steps": c.max_steps,
        },
        "turning_points": p.turning_points.iter().map(|tp| json!({ "location": cx(tp.location), "multiplicity": tp.multiplicity })).collect::<Vec<_>>(),
        "poles": p.poles.iter().map(pole_json).collect::<Vec<_>>(),
        "tasks": tasks,
        "figures": figures,
        "generated_at_unix": timestamp,
    });
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| AppError::Io(e.to_string()))?;
    text.push('\n');
    write_file(&out.join("manifest.json"), text.as_bytes())?;
    Ok(RunOutcome { manifest, bundle, failed })
}
