//! Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use cplxdyn::presets::{evaluate, probability_normalization, Preset};
use cplxdyn::scenario;
use cplxdyn_core::analysis::{
    classify_trajectory, deflection_angle, separatrix_asymptotics, DeflectionProbe, EscapeSide, TrajectoryLabel,
};
use cplxdyn_core::integrator::{integrate, integrate_from, rhs, NoMonitor};
use cplxdyn_core::model::{contour_travel_time, BranchRule, TurningPointSearch};
use cplxdyn_core::{clit, Contour64, Hamiltonian64, IntegratorConfig64, Potential64, Termination, Trajectory64, C64};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cplxdyn"))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn h(n: usize, v: Potential64, e: f64) -> Hamiltonian64 {
    Hamiltonian64::new(n, v, clit(e, 0.0)).unwrap()
}

fn run_dir(h: &Hamiltonian64, x0: C64, dir: C64, cfg: &IntegratorConfig64) -> Result<Trajectory64, String> {
    let b = h.branch_along(x0, dir).map_err(|e| e.to_string())?;
    integrate(h, x0, b, cfg).map_err(|e| e.to_string())
}

fn read_json(p: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn cx(v: &Value) -> C64 {
    clit(num(&v["re"]), num(&v["im"]))
}

/// Runs every scenario file once; later criteria read the outputs.
struct Runs {
    _root: tempfile::TempDir,
    dirs: Vec<(String, PathBuf)>,
}

impl Runs {
    fn new() -> Result<Self, String> {
        let root = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut files: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut dirs = Vec::new();
        for f in files {
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            let out = root.path().join(&name);
            let st = bin().arg("run").arg(&f).arg("--out").arg(&out).output().map_err(|e| e.to_string())?;
            if !st.status.success() {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&st.stderr).trim()));
            }
            dirs.push((name, out));
        }
        Ok(Self { _root: root, dirs })
    }

    fn dir(&self, name: &str) -> Result<&Path, String> {
        self.dirs.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_path()).ok_or(format!("no run for {name}"))
    }
}

fn quadrature_eq14() -> Outcome {
    let t = Instant::now();
    let out = bin().args(["quadrature", "--preset", "eq14"]).output().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    check(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let z = cx(&v["value"]);
    check((z.re - 1.05659994).abs() <= 1e-6 && z.im.abs() <= 1e-6, format!("value {z}"))?;
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("value {:.9}", z.re))
}

fn asymptotics() -> Outcome {
    let h = h(2, Potential64::v1(), 0.5);
    let x0 = clit(0.0, 1.1);
    let cfg = IntegratorConfig64::default().with_t_max(500.0).with_escape_radius(1e4);
    let traj = run_dir(&h, x0, clit(1.0, 0.0), &cfg)?;
    check(traj.termination == Termination::MaxTime, format!("{:?}", traj.termination))?;
    let x = traj.last().x;
    check((x - clit(701.124, 3.8018)).norm() <= 0.05, format!("x(500) = {x}"))?;
    let a = separatrix_asymptotics(x0, 500.0).map_err(|e| e.to_string())?;
    check((a.x_asym - clit(701.113, 3.8073)).norm() <= 1e-3, format!("closed form {}", a.x_asym))?;
    Ok(format!("x(500) = {x:.4}, closed form {:.4}", a.x_asym))
}

fn turning_points() -> Outcome {
    let locate = |h: &Hamiltonian64, max_count: usize| -> Result<Vec<(C64, usize)>, String> {
        let tps = h.turning_points(&TurningPointSearch { region: None, max_count }).map_err(|e| e.to_string())?;
        Ok(tps.into_iter().map(|t| (t.location, t.multiplicity)).collect())
    };
    let matches = |got: &[(C64, usize)], want: &[(C64, usize)], tol: f64| {
        got.len() == want.len()
            && want.iter().all(|(w, m)| got.iter().any(|(g, k)| (g - w).norm() <= tol && k == m))
    };
    let s5 = 5f64.sqrt();
    let cases = [
        ("V1 E=1/3", h(2, Potential64::v1(), 1.0 / 3.0), vec![(clit((3.0 - s5) / 2.0, 0.0), 1), (clit((3.0 + s5) / 2.0, 0.0), 1)]),
        ("V1 E=1/2", h(2, Potential64::v1(), 0.5), vec![(clit(1.0, 0.0), 2)]),
        ("V2 E=1", h(2, Potential64::v2(), 1.0), vec![(clit(0.0, (1.0 + s5) / 2.0), 1), (clit(0.0, (1.0 - s5) / 2.0), 1)]),
        (
            "-x^4 E=1",
            h(2, Potential64::neg_quartic(), 1.0),
            (0..4).map(|k| (C64::from_polar(1.0, FRAC_PI_4 * (2 * k + 1) as f64), 1)).collect(),
        ),
    ];
    for (name, h, want) in &cases {
        let got = locate(h, 3)?;
        // the double root is only as sharp as sqrt(eps)
        let tol = if want.iter().any(|(_, m)| *m > 1) { 1e-7 } else { 1e-8 };
        check(matches(&got, want, tol), format!("{name}: {got:?}"))?;
    }
    let ess = h(2, Potential64::essential_exp(), std::f64::consts::E);
    let got = locate(&ess, 1)?;
    let x1 = got
        .iter()
        .map(|(z, _)| *z)
        .filter(|z| z.im > 0.0 && z.norm() < 0.5)
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or("no complex turning point near the origin")?;
    check((x1.norm() - 0.157177).abs() <= 1e-5 && (x1.arg() - 1.412965).abs() <= 1e-5, format!("x1 = {x1}"))?;
    check(got.iter().any(|(z, _)| (z - clit(1.0, 0.0)).norm() <= 1e-8), "x = 1 missing".into())?;
    Ok(format!("4 algebraic cases; essential r1 = {:.6}, theta1 = {:.6}", x1.norm(), x1.arg()))
}

fn discontinuity(runs: &Runs) -> Result<(f64, f64), String> {
    let m = read_json(&runs.dir("fig10")?.join("manifest.json"))?;
    let task = m["tasks"]
        .as_array()
        .and_then(|ts| ts.iter().find(|t| t["kind"] == "transit-discontinuity"))
        .ok_or("no discontinuity task")?;
    let item = &task["items"][0];
    check(item["status"] == "ok", format!("{item}"))?;
    Ok((cx(&item["location"]).re, num(&item["jump"])))
}

fn separatrix_crossing(runs: &Runs) -> Outcome {
    let (loc, _) = discontinuity(runs)?;
    check((loc - 4.735).abs() <= 0.01, format!("location {loc}"))?;
    Ok(format!("location {loc:.5}"))
}

/// The jump should equal the round trip from the pole to the turning point
/// and back, i.e. the value of the eq14 quadrature.
fn transit_jump(runs: &Runs) -> Outcome {
    let (_, jump) = discontinuity(runs)?;
    check((jump - 1.057).abs() <= 0.02, format!("jump {jump}"))?;
    let q = evaluate(Preset::Eq14, clit(1.0, 0.0)).map_err(|e| e.to_string())?.value.re;
    check((jump - q).abs() <= 0.02, format!("jump {jump} vs quadrature {q}"))?;
    Ok(format!("jump {jump:.5}, quadrature {q:.5}"))
}

fn deflection() -> Outcome {
    let cfg = IntegratorConfig64::default();
    let mut got = Vec::new();
    for (n, want) in [(2, 180.0), (3, 240.0), (4, 270.0)] {
        let h = h(n, Potential64::linear(), 1.0);
        let tp = h.turning_points(&TurningPointSearch::default()).map_err(|e| e.to_string())?[0];
        let d = deflection_angle(&h, &tp, &DeflectionProbe::default(), &cfg).map_err(|e| e.to_string())?;
        check((d - want).abs() <= 2.0, format!("n = {n}: {d}"))?;
        got.push(format!("{d:.2}"));
    }
    Ok(format!("deflections {}", got.join("/")))
}

fn quartic_orbits() -> Outcome {
    let h = h(2, Potential64::neg_quartic(), 1.0);
    let cfg = IntegratorConfig64::default();
    let mut periods = Vec::new();
    for s in [1.0, 0.5, 0.25, 0.125] {
        let x0 = clit(0.0, s);
        let traj = run_dir(&h, x0, clit(1.0, 0.0), &cfg)?;
        let Termination::Periodic { period } = traj.termination else {
            return Err(format!("{x0}: {:?}", traj.termination));
        };
        check((traj.last().x - x0).norm() <= 1e-4, format!("{x0} closes at {}", traj.last().x))?;
        periods.push(period);
    }
    // every orbit encircles the same pair of turning points
    let ring = Contour64::circle(clit(0.0, 0.5f64.sqrt()), 0.9);
    let oracle = contour_travel_time(&h, &ring, BranchRule::Index(0)).map_err(|e| e.to_string())?.re.abs();
    for p in &periods {
        check((p - periods[0]).abs() <= 1e-4, format!("periods {periods:?}"))?;
        check((p - oracle).abs() <= 1e-4, format!("period {p} vs contour {oracle}"))?;
    }
    Ok(format!("period {:.8}, contour {oracle:.8}", periods[0]))
}

fn zeno() -> Outcome {
    let h = h(2, Potential64::v1(), 0.5);
    let cfg = IntegratorConfig64::default();
    let one = clit(1.0, 0.0);
    for y in [0.0, 0.5, -0.5] {
        let x0 = clit(-2.0, y);
        let traj = run_dir(&h, x0, one, &cfg)?;
        check(classify_trajectory(&traj).label == TrajectoryLabel::ZenoCapture, format!("{x0}: {:?}", traj.termination))?;
        // captured before t = 30 and parked there
        check(traj.end_time() <= 30.0, format!("{x0}: captured at {}", traj.end_time()))?;
        check((traj.last().x - one).norm() < 0.01, format!("{x0}: ends at {}", traj.last().x))?;
    }
    for y in [1.5, -1.5] {
        let x0 = clit(-2.0, y);
        let class = classify_trajectory(&run_dir(&h, x0, one, &cfg)?);
        check(class.label == TrajectoryLabel::Escape && class.side == Some(EscapeSide::East), format!("{x0}: {class:?}"))?;
    }
    Ok("3 captured, 2 escape east".into())
}

fn probability() -> Outcome {
    for e in [0.5, 1.0, 2.0] {
        let n = probability_normalization(e).map_err(|e| e.to_string())?;
        check((n - 1.0).abs() <= 1e-6, format!("E = {e}: normalization {n}"))?;
    }
    // int_0^inf dx / (2 sqrt(1 + x^4)) = B(1/4, 1/4) / 8
    let want = statrs::function::beta::beta(0.25, 0.25) / 8.0;
    let q = evaluate(Preset::TofQuartic, clit(1.0, 0.0)).map_err(|e| e.to_string())?.value;
    check((q.re - want).abs() <= 1e-6 && q.im.abs() <= 1e-6, format!("time of flight {q} vs {want}"))?;
    Ok(format!("time of flight {:.9}", q.re))
}

fn rk4(h: &Hamiltonian64, x0: C64, p0: C64, dt: f64, steps: usize) -> Result<Vec<C64>, String> {
    let mut y = [x0, p0];
    let mut out = vec![x0];
    let add = |y: &[C64; 2], k: &[C64; 2], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
    let f = |y: &[C64; 2]| rhs(h, y).map_err(|e| e.to_string());
    for _ in 0..steps {
        let k1 = f(&y)?;
        let k2 = f(&add(&y, &k1, dt / 2.0))?;
        let k3 = f(&add(&y, &k2, dt / 2.0))?;
        let k4 = f(&add(&y, &k3, dt))?;
        for c in 0..2 {
            y[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (dt / 6.0);
        }
        out.push(y[0]);
    }
    Ok(out)
}

/// Energy, phase and branch checks on every path written by the scenario runs.
fn scenario_invariants(runs: &Runs) -> Result<usize, String> {
    let mut rows = 0;
    for (name, dir) in &runs.dirs {
        let prepared = scenario::load(&scenario_dir().join(format!("{name}.json")))
            .and_then(|s| s.prepare())
            .map_err(|e| e.to_string())?;
        let ham = &prepared.hamiltonian;
        for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let file = path.file_name().unwrap().to_string_lossy().into_owned();
            if !(file.ends_with(".csv") && (file.starts_with("trajectory-") || file.starts_with("separatrix-"))) {
                continue;
            }
            let mut rdr = csv::Reader::from_path(&path).map_err(|e| e.to_string())?;
            let mut prev_phase: Option<f64> = None;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| e.to_string())?;
                let f = |k: usize| rec[k].parse::<f64>().unwrap_or(f64::NAN);
                let (x, p, phase, err) = (clit(f(1), f(2)), clit(f(3), f(4)), f(5), f(6));
                check(err <= 1e-8, format!("{name}/{file}: energy error {err:e} at t = {}", f(0)))?;
                if let Some(q) = prev_phase {
                    check((phase - q).abs() < FRAC_PI_2, format!("{name}/{file}: phase jump at t = {}", f(0)))?;
                }
                prev_phase = Some(phase);
                // p must sit on one of the n roots, up to what the energy error
                // allows; near a turning point that is err / (n |p|^(n-1))
                let branches = ham.momentum_branches(x).map_err(|e| e.to_string())?.values;
                let off = branches.iter().map(|b| (b - p).norm()).fold(f64::INFINITY, f64::min);
                let n = ham.power() as i32;
                let allowed = (1e-6 * p.norm().max(1.0)).max(10.0 * err / (n as f64 * p.norm().powi(n - 1)));
                check(off <= allowed, format!("{name}/{file}: p off its branch by {off:e} at t = {}", f(0)))?;
                let on_sheet = (C64::from_polar(1.0, phase) - p / p.norm()).norm();
                check(p.norm() == 0.0 || on_sheet < 1e-6, format!("{name}/{file}: phase disagrees with p"))?;
                rows += 1;
            }
        }
    }
    Ok(rows)
}

fn invariants(runs: &Runs) -> Outcome {
    let rows = scenario_invariants(runs)?;
    let v1 = h(2, Potential64::v1(), 0.5);
    let v2 = h(2, Potential64::v2(), 1.0);
    let quartic = h(2, Potential64::neg_quartic(), 1.0);
    let (east, west) = (clit(1.0, 0.0), clit(-1.0, 0.0));

    let cfg = IntegratorConfig64::default().with_t_max(1.5);
    for (h, x0, dir) in [(&v1, clit(-2.0, 0.5), east), (&v2, clit(4.0, 0.3), west), (&quartic, clit(0.0, 0.25), east)] {
        let fwd = run_dir(h, x0, dir, &cfg)?;
        let end = fwd.last();
        let back = integrate_from(h, end.x, -end.p, &cfg, &mut NoMonitor).map_err(|e| e.to_string())?;
        check((back.last().x - x0).norm() <= 1e-6, format!("time reversal from {x0}: {}", back.last().x))?;
    }

    let cfg = IntegratorConfig64::default().with_t_max(4.0);
    for x0 in [clit(3.0, 0.4), clit(1.5, -0.3)] {
        let a = run_dir(&v2, x0, west, &cfg)?;
        let b = integrate_from(&v2, -x0.conj(), -a.origin.p0.conj(), &cfg, &mut NoMonitor).map_err(|e| e.to_string())?;
        for k in 1..=40 {
            let t = 0.1 * k as f64;
            let (Some(ya), Some(yb)) = (a.state_at(t), b.state_at(t)) else { break };
            check((yb[0] + ya[0].conj()).norm() <= 1e-6, format!("PT mirror of {x0} at t = {t}"))?;
        }
    }

    let (dt, steps) = (1e-5, 500_000);
    let cfg = IntegratorConfig64::default().with_t_max(5.0);
    for (h, x0, dir) in [(&v1, clit(-2.0, 1.5), east), (&quartic, clit(0.0, 0.5), east), (&v2, clit(3.0, 0.5), west)] {
        let t = run_dir(h, x0, dir, &cfg)?;
        let reference = rk4(h, x0, t.origin.p0, dt, steps)?;
        for k in (0..=steps).step_by(10_000) {
            let time = k as f64 * dt;
            let Some(y) = t.state_at(time) else { break };
            check((y[0] - reference[k]).norm() <= 1e-6, format!("{x0} at t = {time}: {} vs {}", y[0], reference[k]))?;
        }
    }
    Ok(format!("{rows} scenario samples; reversal, PT mirror, RK4 oracle"))
}

fn count(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

fn figures(runs: &Runs) -> Outcome {
    // (scenario, paths, turning-point dots, pole circles)
    let expected = [
        ("fig01", 9, 2, 2),
        ("fig03", 4, 2, 0),
        ("fig05a", 6, 1, 1),
        ("fig05b", 6, 1, 1),
        ("fig06a", 8, 2, 1),
        ("fig06b", 6, 2, 1),
        ("fig07a", 9, 3, 1),
        ("fig07b", 8, 3, 1),
        ("fig08", 14, 1, 2),
        ("fig09", 8, 2, 2),
        ("fig12", 18, 1, 2),
        ("fig16", 14, 3, 1),
    ];
    for (name, paths, dots, poles) in expected {
        let svg = std::fs::read_to_string(runs.dir(name)?.join("figure-0.svg")).map_err(|e| format!("{name}: {e}"))?;
        let got = (count(&svg, "trajectory"), count(&svg, "turning-point"), count(&svg, "pole"));
        check(got == (paths, dots, poles), format!("{name}: {got:?}, want {:?}", (paths, dots, poles)))?;
    }

    let grid = read_json(&runs.dir("fig11")?.join("transit-grid-0.json"))?;
    let region: Vec<f64> = grid["region"].as_array().ok_or("region")?.iter().map(num).collect();
    let res: Vec<f64> = grid["resolution"].as_array().ok_or("resolution")?.iter().map(num).collect();
    check(res == [64.0, 64.0], format!("resolution {res:?}"))?;
    let (dx, dy) = ((region[1] - region[0]) / res[0], (region[3] - region[2]) / res[1]);
    let boundary: Vec<C64> = grid["boundary"].as_array().ok_or("boundary")?.iter().map(cx).collect();
    check(boundary.len() >= 8, format!("only {} boundary cells", boundary.len()))?;
    for a in &boundary {
        for b in &boundary {
            check(b.im <= a.im + dy || b.re <= a.re + dx, format!("boundary rises from {a} to {b}"))?;
        }
    }
    Ok(format!("{} figures, {} boundary cells", expected.len(), boundary.len()))
}

fn report(idx: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let r = f();
    let el = t.elapsed();
    let r = match r {
        Ok(msg) if el > budget => Err(format!("{msg}; over the {budget:?} budget")),
        other => other,
    };
    let (tag, msg) = match &r {
        Ok(m) => ("PASS", m),
        Err(m) => ("FAIL", m),
    };
    println!("{tag} {idx:>2} {name} ({:.2}s): {msg}", el.as_secs_f64());
    r.is_ok()
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, "eq14 quadrature", secs(1), quadrature_eq14);
    ok &= report(2, "separatrix asymptotics", secs(10), asymptotics);
    ok &= report(3, "turning-point closed forms", secs(1), turning_points);

    let t = Instant::now();
    let runs = Runs::new();
    let setup = t.elapsed();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL    scenario runs: {e}");
            std::process::exit(1);
        }
    };
    println!("     all scenario runs ({:.2}s)", setup.as_secs_f64());
    ok &= report(4, "separatrix crossing", secs(60), || separatrix_crossing(&runs));
    ok &= report(5, "transit-time jump", secs(60), || transit_jump(&runs));
    ok &= report(6, "deflection law", secs(30), deflection);
    ok &= report(7, "quartic orbits", secs(30), quartic_orbits);
    ok &= report(8, "Zeno capture", secs(30), zeno);
    ok &= report(9, "probability density", secs(5), probability);
    ok &= report(10, "invariant suite", secs(120), || invariants(&runs));
    ok &= report(11, "figure regeneration", secs(300).saturating_sub(setup), || figures(&runs));
    if !ok {
        std::process::exit(1);
    }
}
