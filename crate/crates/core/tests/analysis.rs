use std::f64::consts::{FRAC_PI_3, PI};

use cplxdyn_core::analysis::{
    classify_trajectory, deflection_angle, pole_separatrix_seeds, radial_directions, separatrix_asymptotics,
    trace_separatrix, transit_discontinuity, transit_grid, transit_time, AnalysisError, BranchSide, DeflectionProbe,
    EscapeSide, TrajectoryLabel,
};
use cplxdyn_core::integrator::integrate;
use cplxdyn_core::model::{contour_travel_time, BranchRule, TurningPointSearch};
use cplxdyn_core::{
    clit, Contour64, Hamiltonian64, IntegratorConfig64, Potential64, Region64, Termination, Trajectory64, C64,
};

fn v1(e: f64) -> Hamiltonian64 {
    Hamiltonian64::new(2, Potential64::v1(), clit(e, 0.0)).unwrap()
}

fn v2() -> Hamiltonian64 {
    Hamiltonian64::new(2, Potential64::v2(), clit(1.0, 0.0)).unwrap()
}

fn quartic() -> Hamiltonian64 {
    Hamiltonian64::new(2, Potential64::neg_quartic(), clit(1.0, 0.0)).unwrap()
}

fn run(h: &Hamiltonian64, x0: C64, dir: C64, cfg: &IntegratorConfig64) -> Trajectory64 {
    let b = h.branch_along(x0, dir).unwrap();
    integrate(h, x0, b, cfg).unwrap()
}

fn east() -> C64 {
    clit(1.0, 0.0)
}

/// First point where the sampled path crosses `Re x = re` (or `Im x = im`),
/// linearly interpolated between samples.
fn crossing(traj: &Trajectory64, key: impl Fn(C64) -> f64, level: f64) -> Option<C64> {
    traj.samples.windows(2).find_map(|w| {
        let (a, b) = (key(w[0].x) - level, key(w[1].x) - level);
        (a * b <= 0.0 && a != b).then(|| w[0].x + (w[1].x - w[0].x) * (a / (a - b)))
    })
}

fn seed_at(h: &Hamiltonian64, pole: C64, degrees: f64) -> cplxdyn_core::analysis::SeparatrixSeed<f64> {
    let info = h.potential().poles().unwrap().into_iter().find(|p| (p.location - pole).norm() < 1e-9).unwrap();
    pole_separatrix_seeds(h, &info)
        .unwrap()
        .into_iter()
        .find(|s| (s.direction_angle.to_degrees() - degrees).abs() < 1e-6)
        .unwrap()
}

#[test]
fn quartic_orbits_share_period() {
    let h = quartic();
    let cfg = IntegratorConfig64::default();
    let mut periods = Vec::new();
    for s in [1.0, 0.5, 0.25, 0.125] {
        let traj = run(&h, clit(0.0, s), east(), &cfg);
        let Termination::Periodic { period } = traj.termination else {
            panic!("start {s}i: {:?}", traj.termination);
        };
        let last = traj.last();
        assert!((last.x - clit(0.0, s)).norm() < 1e-4);
        periods.push(period);
    }
    // closed orbits around the upper pair of turning points are homotopic, so
    // the period is the contour integral of dx/xdot around that pair
    let ring = Contour64::circle(clit(0.0, 0.5f64.sqrt()), 0.9);
    let oracle = contour_travel_time(&h, &ring, BranchRule::Index(0)).unwrap();
    assert!(oracle.im.abs() < 1e-8 * oracle.norm(), "{oracle}");
    for p in &periods {
        assert!((p - periods[0]).abs() < 1e-4, "{periods:?}");
        assert!((p - oracle.re.abs()).abs() < 1e-6, "{p} vs {oracle}");
    }
}

#[test]
fn zeno_dichotomy() {
    let h = v1(0.5);
    let cfg = IntegratorConfig64::default();
    for y in [0.0, 0.5, -0.5] {
        let x0 = clit(-2.0, y);
        let traj = run(&h, x0, east(), &cfg);
        let class = classify_trajectory(&traj);
        assert_eq!(class.label, TrajectoryLabel::ZenoCapture, "start {x0}");
        let Termination::ZenoCapture { turning_point } = traj.termination else { unreachable!() };
        assert!((turning_point - clit(1.0, 0.0)).norm() < 1e-9);
        assert!(traj.end_time() <= 30.0, "{x0}: captured at {}", traj.end_time());
        assert!((traj.last().x - clit(1.0, 0.0)).norm() < 0.01);
        // final approach is monotone
        let dist: Vec<f64> = traj.samples.iter().map(|s| (s.x - clit(1.0, 0.0)).norm()).collect();
        let tail = &dist[dist.len() * 3 / 4..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{x0}");
    }
    for y in [1.5, -1.5] {
        let x0 = clit(-2.0, y);
        let class = classify_trajectory(&run(&h, x0, east(), &cfg));
        assert_eq!(class.label, TrajectoryLabel::Escape, "start {x0}");
        assert_eq!(class.side, Some(EscapeSide::East));
    }
}

#[test]
fn upper_pole_separatrices() {
    let h = v1(0.5);
    let cfg = IntegratorConfig64::default().with_escape_radius(20.0);
    let pole = clit(0.0, 1.0);

    let down = trace_separatrix(&h, &seed_at(&h, pole, -60.0), &cfg).unwrap();
    let Termination::ZenoCapture { turning_point } = down.termination else {
        panic!("{:?}", down.termination);
    };
    assert!((turning_point - clit(1.0, 0.0)).norm() < 1e-9);

    let west = trace_separatrix(&h, &seed_at(&h, pole, 180.0), &cfg).unwrap();
    let exit = crossing(&west, |x| x.re, -2.0).unwrap();
    assert!((exit - clit(-2.0, 0.87)).norm() < 0.05, "{exit}");

    let northeast = trace_separatrix(&h, &seed_at(&h, pole, 60.0), &cfg).unwrap();
    let exit = crossing(&northeast, |x| x.re, 5.0).unwrap();
    assert!((exit - clit(5.0, 3.08)).norm() < 0.05, "{exit}");
}

#[test]
fn lower_pole_separatrices_mirror_upper() {
    let h = v1(0.5);
    let cfg = IntegratorConfig64::default().with_escape_radius(20.0);
    let up = trace_separatrix(&h, &seed_at(&h, clit(0.0, 1.0), 180.0), &cfg).unwrap();
    let down = trace_separatrix(&h, &seed_at(&h, clit(0.0, -1.0), 180.0), &cfg).unwrap();
    for t in [0.5, 1.0, 2.0, 3.0] {
        let a = up.state_at(t).unwrap()[0];
        let b = down.state_at(t).unwrap()[0];
        assert!((a.conj() - b).norm() < 1e-6, "t = {t}: {a} vs {b}");
    }
}

#[test]
fn seed_directions_align_with_shooting() {
    // away from the pole the radially moving directions drift slightly, so the
    // comparison uses a small circle
    let h = v1(0.5);
    let shot = radial_directions(&h, clit(0.0, 1.0), 1e-3, 720).unwrap();
    for want in [FRAC_PI_3, PI, -FRAC_PI_3] {
        let best = shot
            .iter()
            .map(|a| cplxdyn_core::scalar::wrap_angle(a - want).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 0.02, "{want}: {shot:?}");
    }
}

#[test]
fn cubic_momentum_pole_directions() {
    let h = Hamiltonian64::new(3, Potential64::v1(), clit(0.5, 0.0)).unwrap();
    let shot = radial_directions(&h, clit(0.0, 1.0), 1e-3, 720).unwrap();
    assert!(!shot.is_empty());
    // V1 has real coefficients and E is real: the lower pole sees the mirror set
    let low = radial_directions(&h, clit(0.0, -1.0), 1e-3, 720).unwrap();
    assert_eq!(shot.len(), low.len());
    for a in &shot {
        let hit = low.iter().any(|b| cplxdyn_core::scalar::wrap_angle(a + b).abs() < 1e-3);
        assert!(hit, "{a} has no mirror in {low:?}");
    }
}

#[test]
fn v2_upper_separatrix_meets_real_axis() {
    let h = v2();
    let cfg = IntegratorConfig64::default().with_escape_radius(20.0);
    let sep = trace_separatrix(&h, &seed_at(&h, clit(0.0, 1.0), -30.0), &cfg).unwrap();
    let hit = crossing(&sep, |x| x.im, 0.0).unwrap();
    assert!((hit.re - 4.735).abs() < 0.01, "{hit}");
}

#[test]
fn pole_separatrix_rejects_double_pole() {
    let h = Hamiltonian64::new(2, Potential64::inverse_power(1.0, 2), clit(1.0, 0.0)).unwrap();
    let pole = h.potential().poles().unwrap()[0];
    assert!(matches!(pole_separatrix_seeds(&h, &pole), Err(AnalysisError::UnsupportedOrder(_))));
}

#[test]
fn classification_examples() {
    let cfg = IntegratorConfig64::default();
    let class = classify_trajectory(&run(&quartic(), clit(0.0, 0.125), east(), &cfg));
    assert_eq!(class.label, TrajectoryLabel::Periodic);
    let class = classify_trajectory(&run(&v1(0.5), clit(5.0, 3.3), clit(-1.0, 0.0), &cfg));
    assert_eq!(class.label, TrajectoryLabel::Escape);
    let short = cfg.with_t_max(0.1);
    let class = classify_trajectory(&run(&v1(0.5), clit(-2.0, 0.0), east(), &short));
    assert_eq!(class.label, TrajectoryLabel::Timeout);
}

#[test]
fn transit_examples() {
    let free = Hamiltonian64::new(2, Potential64::free(), clit(1.0, 0.0)).unwrap();
    let cfg = IntegratorConfig64::default();
    for x0 in [0.5, 2.0, 5.0] {
        let r = transit_time(&free, clit(x0, 0.0), &cfg).unwrap();
        assert!((r.transit_time.unwrap() - x0).abs() < 1e-8);
    }

    let h = v2();
    let below = transit_time(&h, clit(4.0, 0.0), &cfg).unwrap();
    assert_eq!(below.branch_side, BranchSide::BelowSeparatrix);
    assert!(below.closest_approach <= 1e-4);
    assert_eq!(below.mirror_target, clit(-4.0, 0.0));

    // the below-side times are smooth; extrapolating them past the crossing
    // and comparing with an above-side start isolates the jump
    let t = |x: f64| transit_time(&h, clit(x, 0.0), &cfg).unwrap().transit_time.unwrap();
    let (a, b) = (t(4.5), t(4.7));
    let trend = b + (b - a) / 0.2 * 0.2;
    let above = transit_time(&h, clit(4.9, 0.0), &cfg).unwrap();
    assert_eq!(above.branch_side, BranchSide::AboveSeparatrix);
    let excess = above.transit_time.unwrap() - trend;
    assert!((excess - 1.0566).abs() < 0.05, "{excess}");
}

#[test]
fn transit_rejects_bad_starts() {
    let cfg = IntegratorConfig64::default();
    assert!(matches!(transit_time(&v2(), clit(-1.0, 0.0), &cfg), Err(AnalysisError::LeftHalfPlane)));
    let cubic = Hamiltonian64::new(3, Potential64::v2(), clit(1.0, 0.0)).unwrap();
    assert!(matches!(transit_time(&cubic, clit(1.0, 0.0), &cfg), Err(AnalysisError::UnsupportedPower(3))));
}

#[test]
fn real_axis_discontinuity() {
    let d = transit_discontinuity(&v2(), clit(4.0, 0.0), clit(5.5, 0.0), &IntegratorConfig64::default()).unwrap();
    assert!((d.location.re - 4.735).abs() < 0.01, "{:?}", d.location);
    // the jump is the extra excursion from the pole up to the upper turning
    // point and back, which is the round-trip travel time along the imaginary axis
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let path = Contour64::polyline(&[clit(0.0, 1.0), clit(0.0, phi), clit(0.0, 1.0)]);
    let excursion = contour_travel_time(&v2(), &path, BranchRule::AlongPath).unwrap();
    assert!((d.jump - 1.057).abs() < 0.02, "{}", d.jump);
    assert!((d.jump - excursion.re).abs() < 0.02, "{} vs {excursion}", d.jump);
}

#[test]
fn vertical_scan_brackets_crossing() {
    let h = v2();
    let d = transit_discontinuity(&h, clit(5.0, -0.125), clit(5.0, 0.1), &IntegratorConfig64::default()).unwrap();
    assert!(d.location.im > -0.125 && d.location.im < 0.1);
    assert!(d.jump.abs() > 0.5);
}

#[test]
fn same_side_scan_has_no_bracket() {
    let r = transit_discontinuity(&v2(), clit(3.0, 0.0), clit(4.0, 0.0), &IntegratorConfig64::default());
    assert!(matches!(r, Err(AnalysisError::NoBracket)));
}

#[test]
fn grid_boundary_is_monotone_staircase() {
    let region = Region64::new(0.0, 5.0, 0.0, 5.0);
    let g = transit_grid(&v2(), &region, (64, 64), &IntegratorConfig64::default()).unwrap();
    assert_eq!(g.times.len(), 64 * 64);
    assert!(!g.boundary_estimate.is_empty());
    let (dx, dy) = (5.0 / 64.0, 5.0 / 64.0);
    for a in &g.boundary_estimate {
        for b in &g.boundary_estimate {
            if b.im > a.im + dy {
                assert!(b.re <= a.re + dx, "{a} then {b}");
            }
        }
    }
}

#[test]
fn grid_independent_of_thread_count() {
    let region = Region64::new(3.5, 5.5, -0.5, 0.5);
    let cfg = IntegratorConfig64::default();
    let scan = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| transit_grid(&v2(), &region, (8, 6), &cfg).unwrap())
    };
    let one = scan(1);
    let many = scan(4);
    let bits = |g: &cplxdyn_core::analysis::GridScanResult<f64>| {
        g.times.iter().map(|t| t.map(f64::to_bits)).collect::<Vec<_>>()
    };
    assert_eq!(bits(&one), bits(&many));
    assert_eq!(one.boundary_estimate, many.boundary_estimate);
    assert!(!one.boundary_estimate.is_empty());
}

#[test]
fn deflection_law() {
    let cfg = IntegratorConfig64::default();
    for (n, want) in [(2, 180.0), (3, 240.0), (4, 270.0)] {
        let h = Hamiltonian64::new(n, Potential64::linear(), clit(1.0, 0.0)).unwrap();
        let tp = &h.turning_points(&TurningPointSearch::default()).unwrap()[0];
        let got = deflection_angle(&h, tp, &DeflectionProbe::default(), &cfg).unwrap();
        assert!((got - want).abs() < 2.0, "n = {n}: {got}");
    }
    let h = Hamiltonian64::new(3, Potential64::v1(), clit(1.0 / 3.0, 0.0)).unwrap();
    let right = h
        .turning_points(&TurningPointSearch::default())
        .unwrap()
        .into_iter()
        .find(|tp| (tp.location.re - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-8)
        .unwrap();
    let got = deflection_angle(&h, &right, &DeflectionProbe::default(), &cfg).unwrap();
    assert!((got - 240.0).abs() < 2.0, "{got}");
}

#[test]
fn half_turn_at_every_simple_catalog_turning_point() {
    let cfg = IntegratorConfig64::default();
    let cases = [
        Hamiltonian64::new(2, Potential64::v1(), clit(1.0 / 3.0, 0.0)).unwrap(),
        v2(),
        quartic(),
        Hamiltonian64::new(2, Potential64::harmonic(), clit(1.0, 0.0)).unwrap(),
        Hamiltonian64::new(2, Potential64::inverse_power(1.0, 1), clit(1.0, 0.0)).unwrap(),
        Hamiltonian64::new(2, Potential64::inverse_power(-1.0, 2), clit(1.0, 0.0)).unwrap(),
        Hamiltonian64::new(2, Potential64::inverse_power(1.0, 3), clit(1.0, 0.0)).unwrap(),
    ];
    for h in &cases {
        let poles: Vec<C64> = h.potential().poles().unwrap().iter().map(|p| p.location).collect();
        for tp in h.turning_points(&TurningPointSearch::default()).unwrap() {
            // a small circle keeps poles out and the potential close to linear
            let gap = poles.iter().map(|p| (p - tp.location).norm()).fold(f64::INFINITY, f64::min);
            let radius = (0.4 * gap).min(0.02);
            let probe = DeflectionProbe { impact: radius / 25.0, radius, side: 1.0 };
            let got = deflection_angle(h, &tp, &probe, &cfg).unwrap();
            assert!((got - 180.0).abs() < 2.0, "{:?} at {}: {got}", h.potential(), tp.location);
        }
    }
}

#[test]
fn separatrix_large_time_asymptotics() {
    let h = v1(0.5);
    let x0 = clit(0.0, 1.1);
    let a = separatrix_asymptotics(x0, 500.0).unwrap();
    assert!((a.x_asym - clit(701.113, 3.8073)).norm() < 1e-3, "{}", a.x_asym);

    let cfg = IntegratorConfig64::default().with_t_max(500.0).with_escape_radius(1e4);
    let traj = run(&h, x0, east(), &cfg);
    assert!(matches!(traj.termination, Termination::MaxTime));
    let x = traj.last().x;
    assert!((x - clit(701.124, 3.8018)).norm() < 0.05, "{x}");

    // along a cut-free stretch of the orbit the implicit relation is constant
    let ts: Vec<f64> = (0..20).map(|k| 100.0 + 20.0 * k as f64).collect();
    let xs: Vec<C64> = ts.iter().map(|&t| traj.state_at(t).unwrap()[0]).collect();
    let res = a.residual_along(&xs, &ts).unwrap();
    for r in &res {
        assert!((r - res[0]).norm() < 1e-6, "{r} vs {}", res[0]);
    }
}
