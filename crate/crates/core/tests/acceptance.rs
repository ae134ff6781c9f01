//! Acceptance suite: one verdict line per criterion.
//!
//! Runs without the libtest harness so every verdict is printed even when
//! everything passes. A criterion listed in `KNOWN_UNATTAINABLE` is reported
//! as `FAIL (known)` and does not fail the run; any other failure does.

use std::f64::consts::{FRAC_PI_8, PI, TAU};
use std::fs;
use std::time::{Duration, Instant};

use ldkit::analysis::{
    assess_convergence, assess_series, detect_singularities, invariance_check, neighbor_variation, transect,
    SingularFeatureReport, TransectProfile,
};
use ldkit::frames::{transform_field, transform_point, RotatingFrame};
use ldkit::systems::{SystemId, VectorField};
use ldkit::{compute_field, descriptor_at, exact_solution, integrate, time_average, GridSpec, IntegratorConfig, LDConfig, VectorFieldSpec};
use rand::{rngs::StdRng, Rng, SeedableRng};

// Pinned tolerances and budgets.
const C1_REL_TOL: f64 = 1e-4;
const C1_STEP: f64 = 1e-3;
const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_REL_TOL: f64 = 1e-4;
const C2_BAND: f64 = 0.01;
const C2_BUDGET: Duration = Duration::from_secs(5);
const KAPPA: f64 = 10.0;
const C4_SPACINGS: f64 = 2.0;
const C4_BUDGET: Duration = Duration::from_secs(30);
const C5_ARC_TOL: f64 = 1e-9;
const C5_LIMIT_TOL: f64 = 1e-3;
const C5_BUDGET: Duration = Duration::from_secs(10);
const C6_REL_TOL: f64 = 1e-4;
const C7_CONJUGACY_TOL: f64 = 1e-6;
const C7_SPACINGS: f64 = 2.0;
const WINDOW: f64 = 10.0;
const EPS: f64 = 1e-3;
const C8_CONVERGE_BY: f64 = 100.0;
const C8_BUDGET_TAU: f64 = 500.0;
const C8_INVARIANCE_CELLS: f64 = 3.0;
const C8_BUDGET: Duration = Duration::from_secs(300);
const C8_WORKERS: usize = 8;
const C10_RATIO: (f64, f64) = (12.0, 20.0);

/// Criteria that cannot be met as stated; see the decisions ledger.
const KNOWN_UNATTAINABLE: &[u32] = &[8];

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
}

struct Verdict {
    status: Status,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            status: Status::Pass,
            details: Vec::new(),
        }
    }

    /// Records one check; any failing check fails the criterion.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.details.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
        if !ok {
            self.status = Status::Fail;
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.details.push(format!("     {}", what.into()));
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

// Closed forms written out independently of the library's oracle table.

fn linear_saddle_mp(x: f64, y: f64, lambda: f64, p: f64, tau: f64) -> f64 {
    // each coordinate contributes lambda^p |c|^p int e^{+-lambda p t} dt
    let weight = lambda.powf(p) * 2.0 * (lambda * p * tau).sinh() / (lambda * p);
    (x.abs().powf(p) + y.abs().powf(p)) * weight
}

fn nonham_saddle_mp(x: f64, y: f64, lambda: f64, mu: f64, p: f64, tau: f64) -> f64 {
    let term = |c: f64, rate: f64| rate.powf(p) * c.abs().powf(p) * 2.0 * (rate * p * tau).sinh() / (rate * p);
    term(x, lambda) + term(y, mu)
}

fn global_attractor_mp(x: f64, y: f64, p: f64, tau: f64) -> f64 {
    (x.abs().powf(p) + y.abs().powf(p)) * (2.0 * (p * tau).sinh() / p)
}

fn global_attractor_arclength(x: f64, y: f64, tau: f64) -> f64 {
    2.0 * (x * x + y * y).sqrt() * tau.sinh()
}

fn horizontal_transect<F: VectorField + ?Sized>(
    field: &F,
    cfg: &LDConfig,
    y: f64,
    half_width: f64,
    n: usize,
) -> (TransectProfile, SingularFeatureReport) {
    let profile = transect(field, cfg, &[0.0, y], &[1.0, 0.0], half_width, n).unwrap();
    let report = detect_singularities(&profile, KAPPA).unwrap();
    (profile, report)
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(1);
    let points: Vec<[f64; 2]> = (0..25).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let (worst, elapsed) = timed(|| {
        let mut worst = 0.0f64;
        for p in [0.5, 1.0] {
            for tau in [1.0, 5.0] {
                let cfg = LDConfig::mp(p, tau).unwrap().with_step(C1_STEP);
                for x in &points {
                    let got = descriptor_at(&spec, x, &cfg).unwrap().value;
                    worst = worst.max(rel_err(got, linear_saddle_mp(x[0], x[1], 1.0, p, tau)));
                }
            }
        }
        worst
    });
    v.check(worst <= C1_REL_TOL, format!("max relative error {worst:.3e} <= {C1_REL_TOL:e} (100 evaluations, h = {C1_STEP})"));
    v.check(elapsed < C1_BUDGET, format!("runtime {elapsed:.2?} < {C1_BUDGET:?}"));
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    let (lambda, mu, p, tau) = (2.0, 1.0, 1.0 / 15.0, 15.0);
    let spec = VectorFieldSpec::nonham_saddle(lambda, mu).unwrap();
    let cfg = LDConfig::mp(p, tau).unwrap().with_step(1e-2);
    let mut rng = StdRng::seed_from_u64(2);
    let mut points = Vec::new();
    while points.len() < 25 {
        let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if x[0].abs() >= C2_BAND {
            points.push(x);
        }
    }
    let ((worst, partial), elapsed) = timed(|| {
        let mut worst = 0.0f64;
        let mut partial = 0;
        for x in &points {
            let got = descriptor_at(&spec, x, &cfg).unwrap();
            partial += got.partial as usize;
            worst = worst.max(rel_err(got.value, nonham_saddle_mp(x[0], x[1], lambda, mu, p, tau)));
        }
        (worst, partial)
    });
    v.check(worst <= C2_REL_TOL, format!("max relative error {worst:.3e} <= {C2_REL_TOL:e} over 25 points with |x0| >= {C2_BAND}"));
    v.check(partial == 0, format!("{partial} truncated evaluations at the default safety box"));
    v.check(elapsed < C2_BUDGET, format!("runtime {elapsed:.2?} < {C2_BUDGET:?}"));
    let small_box = cfg.with_safety_box(1e3);
    let flagged = descriptor_at(&spec, &points[0], &small_box).unwrap();
    v.check(flagged.partial, "leaving a 1e3 box flags the value as partial");
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
    let cfg = LDConfig::mp(0.5, 15.0).unwrap().with_step(1e-2);
    let (profile, report) = horizontal_transect(&spec, &cfg, 0.5, 0.5, 401);
    let h = profile.spacing();
    v.note(format!("flags at {:?}, ratios {:?}", report.flagged_offsets, report.jump_ratios));
    v.check(report.flagged_offsets.len() == 1, format!("exactly one flag (got {})", report.flagged_offsets.len()));
    v.check(
        report.flagged_offsets.iter().all(|o| o.abs() <= h),
        format!("flag within one spacing ({h}) of x = 0"),
    );
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::builtin(SystemId::RotatedSaddle);
    let ((early, late), elapsed) = timed(|| {
        let early = horizontal_transect(&spec, &LDConfig::mp(0.5, 0.005).unwrap().with_step(5e-4), 0.5, 1.0, 401);
        let late = horizontal_transect(&spec, &LDConfig::mp(0.5, 5.0).unwrap().with_step(5e-3), 0.5, 1.0, 401);
        (early, late)
    });
    let tol = C4_SPACINGS * early.0.spacing();
    let near = |offsets: &[f64], target: f64| offsets.iter().any(|o| (o - target).abs() <= tol);
    let (e, l) = (&early.1.flagged_offsets, &late.1.flagged_offsets);
    v.check(!e.is_empty() && e.iter().all(|o| o.abs() <= tol), format!("tau = 0.005 flags {e:?} within {tol} of 0"));
    v.check(
        near(l, 0.5) && near(l, -0.5) && l.iter().all(|o| (o.abs() - 0.5).abs() <= tol),
        format!("tau = 5 flags {l:?} within {tol} of +-0.5"),
    );
    v.check(!near(l, 0.0), "tau = 5 keeps no flag at x = 0");
    v.check(elapsed < C4_BUDGET, format!("runtime {elapsed:.2?} < {C4_BUDGET:?}"));
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::builtin(SystemId::HarmonicOscillator);
    let ((arc_worst, m1), elapsed) = timed(|| {
        let taus: Vec<f64> = (1..=100).map(|k| 0.5 * k as f64).collect();
        let mut worst = 0.0f64;
        for x0 in [[1.0, 0.0], [0.3, -0.4], [-1.2, 0.7]] {
            let rho = f64::hypot(x0[0], x0[1]);
            let cfg = LDConfig::arclength(50.0).unwrap().with_step(1e-2);
            let series = time_average(&spec, &x0, &cfg, &taus).unwrap();
            for avg in &series.averages {
                worst = worst.max((avg - rho).abs());
            }
        }
        let taus: Vec<f64> = (1..=2000).map(|k| 0.1 * k as f64).collect();
        let cfg = LDConfig::mp(1.0, 200.0).unwrap().with_step(1e-2);
        let raw = time_average(&spec, &[1.0, 0.0], &cfg, &taus).unwrap();
        (worst, assess_series(&raw, WINDOW, EPS).unwrap())
    });
    v.check(arc_worst <= C5_ARC_TOL, format!("arc-length average off rho0 by at most {arc_worst:.3e} <= {C5_ARC_TOL:e}"));
    let last = *m1.averages.last().unwrap();
    let limit = 4.0 / PI;
    v.check(m1.converged_by(200.0), format!("M_1 average converged at tau = {:?}", m1.tau_converged));
    v.check(
        (last - limit).abs() <= C5_LIMIT_TOL,
        format!("M_1 average {last:.6} vs 4/pi = {limit:.6} (diff {:.2e} <= {C5_LIMIT_TOL:e})", (last - limit).abs()),
    );
    v.check(elapsed < C5_BUDGET, format!("runtime {elapsed:.2?} < {C5_BUDGET:?}"));
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::builtin(SystemId::GlobalAttractor);
    let tau = 15.0;
    let mp = horizontal_transect(&spec, &LDConfig::mp(0.5, tau).unwrap().with_step(1e-2), 0.5, 1.0, 401);
    let arc = horizontal_transect(&spec, &LDConfig::arclength(tau).unwrap().with_step(1e-2), 0.5, 1.0, 401);
    let h = mp.0.spacing();
    let worst = |profile: &TransectProfile, oracle: &dyn Fn(f64, f64) -> f64| {
        (0..profile.len())
            .map(|i| {
                let x = profile.point(i);
                rel_err(profile.values[i], oracle(x[0], x[1]))
            })
            .fold(0.0f64, f64::max)
    };
    let mp_err = worst(&mp.0, &|x, y| global_attractor_mp(x, y, 0.5, tau));
    let arc_err = worst(&arc.0, &|x, y| global_attractor_arclength(x, y, tau));
    v.check(
        !mp.1.flagged_offsets.is_empty() && mp.1.flagged_offsets.iter().all(|o| o.abs() <= h),
        format!("M_0.5 flags {:?} at x = 0", mp.1.flagged_offsets),
    );
    v.check(arc.1.flagged_offsets.is_empty(), format!("arc-length flags {:?} (none expected)", arc.1.flagged_offsets));
    v.check(mp_err <= C6_REL_TOL, format!("M_0.5 closed form matched to {mp_err:.2e} <= {C6_REL_TOL:e}"));
    v.check(arc_err <= C6_REL_TOL, format!("arc-length closed form matched to {arc_err:.2e} <= {C6_REL_TOL:e}"));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();

    let cfg = IntegratorConfig::with_step(1e-3);
    let pairs = [
        ("rest -> oscillator", VectorFieldSpec::builtin(SystemId::Rest), RotatingFrame::new(1.0, 1).unwrap()),
        ("rotating -> stationary saddle", VectorFieldSpec::rotating_saddle(2.0).unwrap(), RotatingFrame::new(2.0, -1).unwrap()),
    ];
    for (label, spec, frame) in pairs {
        let image = transform_field(&spec, frame).unwrap();
        let mut worst = 0.0f64;
        for x0 in [[0.4, -0.25], [-0.8, 0.6], [0.05, 0.9]] {
            let (t0, t1) = (0.3, 3.3);
            let lab = integrate(&spec, &x0, t0, t1, &cfg).unwrap();
            let end = lab.last();
            let expect = transform_point(&frame, [end[0], end[1]], t1, false);
            let moving = integrate(&image, &transform_point(&frame, x0, t0, false), t0, t1, &cfg).unwrap();
            let got = moving.last();
            worst = worst.max((got[0] - expect[0]).hypot(got[1] - expect[1]));
        }
        v.check(worst <= C7_CONJUGACY_TOL, format!("{label}: conjugacy error {worst:.2e} <= {C7_CONJUGACY_TOL:e}"));
    }

    let grid = GridSpec::square(-1.0, 1.0, 101).unwrap();
    let rest = VectorFieldSpec::builtin(SystemId::Rest);
    let oscillator = transform_field(&rest, RotatingFrame::new(1.0, 1).unwrap()).unwrap();
    let lavd = LDConfig::lavd(10.0).unwrap().with_step(1e-2);
    for (label, field) in [
        ("rest", compute_field(&rest, &grid, &lavd).unwrap()),
        ("oscillator", compute_field(&oscillator, &grid, &lavd).unwrap()),
    ] {
        let disk: Vec<f64> = (0..grid.len())
            .filter(|&k| {
                let x = grid.node(k);
                x[0] * x[0] + x[1] * x[1] <= 1.0
            })
            .map(|k| field.values[k])
            .collect();
        let nonzero = disk.iter().filter(|&&w| w != 0.0).count();
        v.check(nonzero == 0, format!("LAVD of {label}: {nonzero} of {} disk nodes nonzero", disk.len()));
    }

    let omega = 2.0;
    let spec = VectorFieldSpec::rotating_saddle(omega).unwrap();
    let base = LDConfig::mp(0.5, 10.0).unwrap().with_step(1e-2);
    let (p0, r0) = horizontal_transect(&spec, &base, 0.5, 1.0, 401);
    let (_, r1) = horizontal_transect(&spec, &base.with_t0(FRAC_PI_8), 0.5, 1.0, 401);
    // each t = 0 flag marks a manifold line through the origin; rotate the
    // line and intersect it with the transect again
    let angle = omega * FRAC_PI_8;
    let mapped: Vec<f64> = r0
        .flagged_offsets
        .iter()
        .filter_map(|&o| {
            let d = transform_point(&RotatingFrame::new(1.0, 1).unwrap(), [o, 0.5], angle, true);
            (d[1].abs() > 1e-9).then(|| 0.5 * d[0] / d[1]).filter(|x| x.abs() <= 1.0)
        })
        .collect();
    let tol = C7_SPACINGS * p0.spacing();
    let matched = |a: &[f64], b: &[f64]| a.iter().all(|x| b.iter().any(|y| (x - y).abs() <= tol));
    v.note(format!("t = 0 flags {:?}, mapped {mapped:?}, t = pi/8 flags {:?}", r0.flagged_offsets, r1.flagged_offsets));
    v.check(
        !mapped.is_empty() && matched(&mapped, &r1.flagged_offsets) && matched(&r1.flagged_offsets, &mapped),
        format!("t = pi/8 flags match the rotated t = 0 flags within {tol}"),
    );
    v
}

fn abc() -> VectorFieldSpec {
    VectorFieldSpec::abc(1.0, (2.0f64 / 3.0).sqrt(), 3f64.sqrt() / 3.0).unwrap()
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let spec = abc();
    let started = Instant::now();
    let line: Vec<f64> = (0..24).map(|k| 3.6 + 0.1 * k as f64).collect();
    let taus: Vec<f64> = (1..=5000).map(|k| 0.1 * k as f64).collect();
    let cfg = LDConfig::mp(1.0, C8_BUDGET_TAU).unwrap().with_step(0.05);
    let converge_line = || {
        use rayon::prelude::*;
        line.par_iter()
            .map(|&z| assess_series(&time_average(&spec, &[0.0, 3.2, z], &cfg, &taus).unwrap(), WINDOW, EPS).unwrap())
            .collect::<Vec<_>>()
    };
    let (series, serial) = timed(|| pool(1).install(converge_line));

    let nearest = |target: f64| {
        line.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .unwrap()
            .0
    };
    let regular = &series[nearest(4.1)];
    let truncated: Vec<(f64, f64)> = regular.taus.iter().copied().zip(regular.averages.iter().copied()).filter(|(t, _)| *t <= C8_CONVERGE_BY + 1e-9).collect();
    let early = assess_convergence(&truncated, WINDOW, EPS).unwrap();
    let osc_at_100 = early.oscillation.last().copied().flatten().unwrap_or(f64::NAN);
    v.check(
        regular.converged_by(C8_CONVERGE_BY) && early.converged,
        format!(
            "z0 = 4.1: converged by tau = {C8_CONVERGE_BY} (measured: oscillation {osc_at_100:.2e} vs eps {EPS:e} at tau = 100; converges at tau = {:?})",
            regular.tau_converged
        ),
    );
    let chaotic = &series[nearest(3.6)];
    v.check(
        !chaotic.converged,
        format!("z0 = 3.6 (chaotic region): not converged within tau = {C8_BUDGET_TAU}"),
    );
    let verdicts: Vec<String> = line
        .iter()
        .zip(&series)
        .map(|(z, s)| format!("{z:.1}:{}", s.tau_converged.map_or("-".to_string(), |t| format!("{t:.0}"))))
        .collect();
    v.note(format!("convergence tau along the line: {}", verdicts.join(" ")));

    let grid = GridSpec::uniform(&[0.0; 3], &[TAU; 3], &[21, 21, 21]).unwrap();
    let field_cfg = LDConfig::mp(1.0, 200.0).unwrap().with_step(0.1);
    let field = pool(1).install(|| compute_field(&spec, &grid, &field_cfg).unwrap().to_average().unwrap());
    let variation = neighbor_variation(&field);
    let tol = C8_INVARIANCE_CELLS * variation;
    let report = invariance_check(&spec, &[0.0, 3.2, 4.1], 200.0, &field, tol).unwrap();
    v.check(
        report.within_tol,
        format!("invariance from (0, 3.2, 4.1): deviation {:.3e} < {C8_INVARIANCE_CELLS} x variation {variation:.3e} = {tol:.3e}", report.deviation),
    );
    let elapsed = started.elapsed();
    v.check(elapsed < C8_BUDGET, format!("single-threaded runtime {elapsed:.2?} < {C8_BUDGET:?}"));

    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = cores.min(C8_WORKERS);
    if workers < 2 {
        v.note(format!("speedup not measurable: {cores} core available (line sweep {serial:.2?} single-threaded)"));
    } else {
        let (_, parallel) = timed(|| pool(workers).install(converge_line));
        let speedup = serial.as_secs_f64() / parallel.as_secs_f64();
        v.check(speedup >= 0.7 * workers as f64, format!("speedup {speedup:.2} with {workers} workers"));
    }
    v
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str, created: Option<&str>| {
        let out = dir.path().join(format!("{name}.csv"));
        let matrix = dir.path().join(format!("{name}.dat"));
        let mut args: Vec<String> = "ldtool field --system rotated-saddle --p 0.5 --tau 2.5 --step 0.005 --grid -1..1:61 --grid -1..1:41"
            .split_whitespace()
            .map(String::from)
            .collect();
        args.extend(["--threads".into(), threads.into(), "--out".into(), out.display().to_string()]);
        args.extend(["--matrix-out".into(), matrix.display().to_string()]);
        if let Some(c) = created {
            args.extend(["--created".into(), c.into()]);
        }
        ldkit::cli::run_recorded(&args).unwrap();
        (fs::read(out).unwrap(), fs::read(matrix).unwrap())
    };
    let stamp = Some("2024-01-01T00:00:00Z");
    let one = run("one", "1", stamp);
    let eight = run("eight", "8", stamp);
    v.check(one.0 == eight.0, "field file identical for --threads 1 and --threads 8");
    v.check(one.1 == eight.1, "matrix file identical for --threads 1 and --threads 8");
    let (a, _) = run("a", "1", None);
    let (b, _) = run("b", "8", None);
    let strip = |bytes: &[u8]| {
        String::from_utf8_lossy(bytes)
            .lines()
            .filter(|l| !l.starts_with("# created="))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    v.check(strip(&a) == strip(&b), "without --created, runs differ at most in the created line");
    v
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let spec = VectorFieldSpec::linear_saddle(1.0).unwrap();
    let x0 = [0.7, -0.4];
    let exact = exact_solution(&spec, &x0, 0.0, 2.0).unwrap();
    let error = |h: f64| {
        let traj = integrate(&spec, &x0, 0.0, 2.0, &IntegratorConfig::with_step(h)).unwrap();
        let end = traj.last();
        (end[0] - exact[0]).hypot(end[1] - exact[1])
    };
    for h in [0.2, 0.1, 0.05] {
        let ratio = error(h) / error(h / 2.0);
        v.check(
            (C10_RATIO.0..=C10_RATIO.1).contains(&ratio),
            format!("h = {h}: error ratio {ratio:.3} in [{}, {}]", C10_RATIO.0, C10_RATIO.1),
        );
    }
    v
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "linear-saddle closed form", criterion_1),
        (2, "non-Hamiltonian saddle closed form", criterion_2),
        (3, "singularity placement on a saddle transect", criterion_3),
        (4, "rotated-saddle regime migration", criterion_4),
        (5, "harmonic-oscillator averages", criterion_5),
        (6, "global-attractor contrast", criterion_6),
        (7, "frame conjugacy and LAVD", criterion_7),
        (8, "ABC flow at desk scale", criterion_8),
        (9, "determinism across thread counts", criterion_9),
        (10, "RK4 order", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let (verdict, elapsed) = timed(run);
        let label = match (verdict.status, KNOWN_UNATTAINABLE.contains(&id)) {
            (Status::Pass, false) => "PASS",
            (Status::Pass, true) => "PASS (listed as unattainable; update the ledger)",
            (Status::Fail, true) => "FAIL (known: unattainable as stated, see decisions ledger)",
            (Status::Fail, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!("criterion {id:>2} [{title}]: {label} ({elapsed:.2?})");
        for line in &verdict.details {
            println!("    {line}");
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
