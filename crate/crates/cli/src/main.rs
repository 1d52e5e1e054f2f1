use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use cplxdyn::error::AppError;
use cplxdyn::expr::parse_potential;
use cplxdyn::literal::{parse_complex, parse_region, parse_resolution};
use cplxdyn::presets::{evaluate, Preset};
use cplxdyn::render::{load_bundle, render_svg, DEFAULT_WIDTH};
use cplxdyn::run::{class_label, cx, run, termination_json, write_trajectory_csv};
use cplxdyn::scenario;
use cplxdyn_core::analysis::{transit_grid, transit_time};
use cplxdyn_core::integrator::integrate;
use cplxdyn_core::model::TurningPointSearch;
use cplxdyn_core::{Hamiltonian64, IntegratorConfig64, C64};

#[derive(Parser)]
#[command(name = "cplxdyn", version, about = "Complex classical trajectories for H = p^n + V(x)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file into an output directory.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turning points and poles as JSON.
    TurningPoints {
        #[arg(long, allow_hyphen_values = true)]
        potential: String,
        #[arg(long, default_value_t = 2)]
        power: usize,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        /// Family bound for exp(1/x).
        #[arg(long, default_value_t = 3)]
        max_count: usize,
    },
    /// Integrate one trajectory and write it as CSV.
    Trajectory {
        #[arg(long, allow_hyphen_values = true)]
        potential: String,
        #[arg(long, default_value_t = 2)]
        power: usize,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, conflicts_with = "dir", required_unless_present = "dir")]
        branch: Option<usize>,
        /// Initial direction of motion, e.g. `1` for east or `-1i` for south.
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<String>,
        #[arg(long, default_value_t = 50.0)]
        tmax: f64,
        /// CSV destination; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time to reach the mirror point -conj(start), moving west.
    Transit {
        #[arg(long, allow_hyphen_values = true, default_value = "i*x/(1+x^2)")]
        potential: String,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long, allow_hyphen_values = true)]
        start: String,
    },
    /// Transit times over a pixel grid, as JSON.
    TransitGrid {
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        res: String,
        #[arg(long, allow_hyphen_values = true, default_value = "i*x/(1+x^2)")]
        potential: String,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        energy: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a named contour quadrature.
    Quadrature {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        energy: String,
    },
    /// Draw a run directory as SVG.
    Render {
        bundle: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        svg: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: u32,
    },
}

fn config<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Config(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Numeric(e.to_string())
}

fn hamiltonian(potential: &str, power: usize, energy: &str) -> Result<Hamiltonian64, AppError> {
    let spec = parse_potential(potential).map_err(config)?;
    let v = spec.to_potential().map_err(config)?;
    Hamiltonian64::new(power, v, parse_complex(energy).map_err(config)?).map_err(config)
}

fn print_json(v: &serde_json::Value) -> Result<(), AppError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v).map_err(numeric)?).map_err(|e| AppError::Io(e.to_string()))
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), AppError> {
    let io = |e: std::io::Error| AppError::Io(e.to_string());
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| AppError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().lock().write_all(bytes).map_err(io),
    }
}

fn execute(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::Run { scenario: path, out } => {
            let prepared = scenario::load(&path)?.prepare()?;
            let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
            let outcome = run(&prepared, &out, now)?;
            if outcome.failed {
                return Err(AppError::Numeric(format!("some tasks failed; see {}", out.join("manifest.json").display())));
            }
            Ok(())
        }
        Command::TurningPoints { potential, power, energy, max_count } => {
            let h = hamiltonian(&potential, power, &energy)?;
            let tps = h.turning_points(&TurningPointSearch { region: None, max_count }).map_err(numeric)?;
            let poles = h.potential().poles().map_err(numeric)?;
            print_json(&json!({
                "turning_points": tps.iter().map(|t| json!({ "location": cx(t.location), "multiplicity": t.multiplicity })).collect::<Vec<_>>(),
                "poles": poles.iter().map(|p| json!({ "location": cx(p.location), "residue": p.residue.map(cx) })).collect::<Vec<_>>(),
            }))
        }
        Command::Trajectory { potential, power, energy, start, branch, dir, tmax, out } => {
            let h = hamiltonian(&potential, power, &energy)?;
            let x0 = parse_complex(&start).map_err(config)?;
            let cfg = IntegratorConfig64::default().with_t_max(tmax);
            cfg.validate().map_err(config)?;
            let branch = match (branch, dir) {
                (Some(b), _) if b < power => b,
                (Some(b), _) => return Err(AppError::Config(format!("branch {b} out of range for power {power}"))),
                (None, Some(d)) => {
                    let d = parse_complex(&d).map_err(config)?;
                    if d == C64::new(0.0, 0.0) {
                        return Err(AppError::Config("direction must be nonzero".into()));
                    }
                    h.branch_along(x0, d).map_err(numeric)?
                }
                (None, None) => unreachable!("clap requires one of --branch/--dir"),
            };
            let traj = integrate(&h, x0, branch, &cfg).map_err(numeric)?;
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj).map_err(|e| AppError::Io(e.to_string()))?;
            write_output(out.as_ref(), &buf)?;
            eprintln!("{} ({}) at t = {}", class_label(&traj), termination_json(&traj.termination), traj.end_time());
            Ok(())
        }
        Command::Transit { potential, energy, start } => {
            let h = hamiltonian(&potential, 2, &energy)?;
            let x0 = parse_complex(&start).map_err(config)?;
            let r = transit_time(&h, x0, &IntegratorConfig64::default()).map_err(numeric)?;
            print_json(&json!({
                "start": cx(r.start),
                "mirror_target": cx(r.mirror_target),
                "transit_time": r.transit_time,
                "closest_approach": r.closest_approach,
                "side": format!("{:?}", r.branch_side),
            }))
        }
        Command::TransitGrid { region, res, potential, energy, out } => {
            let h = hamiltonian(&potential, 2, &energy)?;
            let region = parse_region(&region).map_err(config)?;
            let res = parse_resolution(&res).map_err(config)?;
            let g = transit_grid(&h, &region, res, &IntegratorConfig64::default()).map_err(numeric)?;
            let v = json!({
                "region": [region.re_min, region.re_max, region.im_min, region.im_max],
                "resolution": [res.0, res.1],
                "times": g.times,
                "boundary": g.boundary_estimate.iter().map(|z| cx(*z)).collect::<Vec<_>>(),
            });
            let mut text = serde_json::to_string(&v).map_err(numeric)?;
            text.push('\n');
            write_output(out.as_ref(), text.as_bytes())
        }
        Command::Quadrature { preset, energy } => {
            let e = parse_complex(&energy).map_err(config)?;
            let q = evaluate(preset, e).map_err(numeric)?;
            print_json(&json!({ "preset": preset, "energy": cx(e), "value": cx(q.value), "reference": q.reference.map(cx) }))
        }
        Command::Render { bundle, region, svg, width } => {
            let region = parse_region(&region).map_err(config)?;
            let b = load_bundle(&bundle)?;
            let text = render_svg(&b, &region, width).map_err(config)?;
            std::fs::write(&svg, text).map_err(|e| AppError::Io(format!("{}: {e}", svg.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cplxdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
