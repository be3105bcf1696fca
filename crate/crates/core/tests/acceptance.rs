//! Acceptance criteria at pinned tolerances, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILING` are evaluated at full strength and
//! reported as FAIL; they do not change the exit status. Any other failure
//! exits with status 1.

use std::process::ExitCode;
use std::time::Instant;

use relaxlab::ansatz::residual_numeric;
use relaxlab::config::{RunConfig, Scenario};
use relaxlab::diagnostics::fit::{decay_fit, FitModel};
use relaxlab::diagnostics::monitors::sobolev_sweep;
use relaxlab::linesolver::{step, ClosureBoundary, ConstantBoundary, FieldState, LineGrid, LineSolver, Side};
use relaxlab::material::{from_invariants, riemann_invariants, validate_hypotheses, Invariants};
use relaxlab::periodic::{base_step, PeriodicMode, SnapshotPlan};
use relaxlab::pipeline::{
    ansatz_frame, ansatz_residuals, periodic_decay, reference_rate, run_line, run_scenario, setup, solve_cells,
    LineRunOptions,
};
use relaxlab::rarefaction::{check_rarefaction_sweep, RarefactionSweepReport, RarefactionSweepOptions};
use relaxlab::{MaterialModel, Result};

/// Rarefaction sup ratio (0.169 measured) and the combined-run sup ratio
/// (0.380 measured) miss their limits; see README.
const KNOWN_FAILING: [u32; 2] = [2, 8];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn c1() -> Result<Outcome> {
    let start = Instant::now();
    let h = validate_hypotheses(&MaterialModel::default_power_law());
    let secs = start.elapsed().as_secs_f64();
    outcome(
        h.passed && h.checks.len() == 4 && h.e1 == 16.0 && secs < 1.0,
        format!("{} checks pass, E1 = {}, {secs:.3} s", h.checks.iter().filter(|c| c.passed).count(), h.e1),
    )
}

fn rarefaction_sweep() -> Result<(RarefactionSweepReport, f64)> {
    let cfg = RunConfig::preset(Scenario::Default);
    let s = setup(&cfg)?;
    let start = Instant::now();
    let r = check_rarefaction_sweep(&s.rarefaction, &RarefactionSweepOptions::default())?;
    Ok((r, start.elapsed().as_secs_f64()))
}

fn c2(r: &RarefactionSweepReport, secs: f64) -> Result<Outcome> {
    outcome(
        r.sup_ratio <= 0.10 && r.sup_monotone && secs < 30.0,
        format!("sup ratio {:.4} (limit 0.10), monotone {}, {secs:.1} s", r.sup_ratio, r.sup_monotone),
    )
}

fn c3(r: &RarefactionSweepReport) -> Result<Outcome> {
    let parts: Vec<String> = r
        .exponents
        .iter()
        .map(|e| format!("{} {:.3}/{:.3}", e.quantity, e.fitted.unwrap_or(f64::NAN), e.expected))
        .collect();
    outcome(r.exponents.len() == 6 && r.exponents.iter().all(|e| e.passed), parts.join(", "))
}

fn c4(r: &RarefactionSweepReport) -> Result<Outcome> {
    outcome(
        r.vt_positive && r.transport_passed && r.max_residual <= 1e-10,
        format!(
            "V_t > 0 {}, |V_t| / |V_x| <= {:.8} (bound {:.8}), residual {:.2e}",
            r.vt_positive, r.transport_constant, r.transport_bound, r.max_residual
        ),
    )
}

fn c5() -> Result<Outcome> {
    let cfg = RunConfig::preset(Scenario::Default);
    assert_eq!(cfg.periodic.mode, PeriodicMode::Relaxation);
    let d = periodic_decay(&cfg, true)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for sd in &d {
        let f = sd.measurement.outcome.fit();
        let g = sd.refined.as_ref().and_then(|m| m.outcome.fit());
        ok &= sd.measurement.alpha_claimed && sd.refinement_stable == Some(true);
        parts.push(format!(
            "{} alpha {:.5} (R^2 {:.4}) / refined {:.5}",
            sd.side,
            f.map_or(f64::NAN, |f| f.rate),
            f.map_or(f64::NAN, |f| f.r2),
            g.map_or(f64::NAN, |g| g.rate)
        ));
    }
    outcome(ok, parts.join("; "))
}

/// max |analytic - central difference| of (h1, h2) with frames k cell steps apart
fn residual_gap(cfg: &RunConfig, dx: f64, t: f64, k: u64) -> Result<f64> {
    let s = setup(cfg)?;
    let dt = base_step(&s.model, dx);
    let c = (t / dt).round() as u64;
    let plan = SnapshotPlan {
        stride: 0,
        extra: vec![c - k, c, c + k],
    };
    let (l, r) = solve_cells(&s.model, (&s.left, &s.right), cfg.periodic.mode, dx, (c + k) as f64 * dt, &plan)?;
    let x: Vec<f64> = (0..=4000).map(|i| -120.0 + 0.05 * i as f64).collect();
    let frame = |step: u64| ansatz_frame(cfg, &s.model, &s.rarefaction, &l, &r, &x, step as f64 * dt);
    let (prev, cur, next) = (frame(c - k)?, frame(c)?, frame(c + k)?);
    let (h1, h2) = residual_numeric(&s.model, &prev, &cur, &next)?;
    Ok((0..x.len()).fold(0.0, |m: f64, i| m.max((h1[i] - cur.h1[i]).abs()).max((h2[i] - cur.h2[i]).abs())))
}

fn c6() -> Result<Outcome> {
    let cfg = RunConfig::preset(Scenario::Default);
    let coarse = residual_gap(&cfg, 0.02, 30.0, 8)?;
    let fine = residual_gap(&cfg, 0.01, 30.0, 8)?;
    let order = (coarse / fine).log2();
    let d = periodic_decay(&cfg, false)?;
    let reference = reference_rate(cfg.periodic.mode, &d);
    let res = ansatz_residuals(&cfg, reference)?;
    let fits: Vec<String> = res
        .report
        .fits
        .iter()
        .map(|f| format!("{} {:.4}", f.name, f.outcome.fit().map_or(f64::NAN, |x| x.rate)))
        .collect();
    outcome(
        order >= 1.9 && res.report.passed,
        format!(
            "order {order:.3} ({coarse:.2e} -> {fine:.2e}); reference alpha {:.4}; {}",
            reference.unwrap_or(f64::NAN),
            fits.join(", ")
        ),
    )
}

fn smooth_profile(x: f64) -> (f64, f64, f64) {
    let g = (-(x * x) / 4.0).exp();
    (1.0 + 0.2 * g, 0.1 * g * x.sin(), 0.9 + 0.05 * (0.3 * x).cos())
}

fn field(grid: &LineGrid, f: impl Fn(f64) -> (f64, f64, f64)) -> FieldState {
    let mut s = FieldState {
        t: 0.0,
        step: 0,
        v: Vec::with_capacity(grid.n),
        u: Vec::with_capacity(grid.n),
        p: Vec::with_capacity(grid.n),
    };
    for x in grid.nodes() {
        let (v, u, p) = f(x);
        s.v.push(v);
        s.u.push(u);
        s.p.push(p);
    }
    s
}

fn c7() -> Result<Outcome> {
    let m = MaterialModel::default_power_law();

    // constant equilibrium state, checked after every step
    let grid = LineGrid::new(&m, 10.0, 0.02)?;
    let c = (1.3, -0.4, m.pressure_raw(1.3));
    let mut bc = ConstantBoundary { left: c, right: c };
    let mut state = field(&grid, |_| c);
    let mut constant: f64 = 0.0;
    for _ in 0..500 {
        state = step(&m, grid, &state, &mut bc)?;
        for i in 0..grid.n {
            constant = constant
                .max((state.v[i] - c.0).abs())
                .max((state.u[i] - c.1).abs())
                .max((state.p[i] - c.2).abs());
        }
    }

    // sourceless transport of the Riemann invariants
    let grid = LineGrid::new(&m, 30.0, 0.01)?;
    let x = grid.nodes();
    let mut solver = LineSolver::new(&m, grid, &field(&grid, smooth_profile))?;
    solver.source = false;
    let inv = |x: f64| {
        let (v, u, p) = smooth_profile(x);
        riemann_invariants(m.young, v, u, p)
    };
    let (x0, xn, dx) = (x[0], x[x.len() - 1], grid.dx);
    let mut ghosts = ClosureBoundary(|k: u64, _t: f64, side: Side| {
        let shift = k as f64 * dx;
        let (xp, xm) = match side {
            Side::Left => (x0 - dx - shift, x0 - dx + shift),
            Side::Right => (xn + dx - shift, xn + dx + shift),
        };
        Ok(from_invariants(
            m.young,
            Invariants {
                r_plus: inv(xp).r_plus,
                r_minus: inv(xm).r_minus,
                z: 0.0,
            },
        ))
    });
    solver.run(&mut ghosts, 1000, &[], |_| Ok(()))?;
    let got = solver.invariants();
    let shift = 1000.0 * dx;
    let mut transport: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        transport = transport
            .max((got.r_plus[i] - inv(xi - shift).r_plus).abs())
            .max((got.r_minus[i] - inv(xi + shift).r_minus).abs())
            .max((got.z[i] - inv(xi).z).abs());
    }

    // frozen profile: only the source acts
    let grid = LineGrid::new(&m, 1.0, 0.05)?;
    let mut frozen: f64 = 0.0;
    for (v, eta) in [(0.7, 0.3), (1.3, -0.04), (2.2, 1e-3)] {
        let c = (v, 0.1, m.pressure_raw(v) + eta);
        let mut bc = ConstantBoundary { left: c, right: c };
        let next = step(&m, grid, &field(&grid, |_| c), &mut bc)?;
        let expected = eta * (-grid.dt / m.tau).exp();
        for i in 0..grid.n {
            frozen = frozen
                .max((next.v[i] - v).abs())
                .max((next.p[i] - m.pressure_raw(next.v[i]) - expected).abs());
        }
    }
    outcome(
        constant <= 1e-13 && transport <= 1e-12 && frozen <= 1e-12,
        format!("constant {constant:.1e}, transport {transport:.1e}, frozen source {frozen:.1e}"),
    )
}

fn c8() -> Result<Outcome> {
    let cfg = RunConfig::preset(Scenario::Default);
    let dir = tempfile::tempdir()?;
    let start = Instant::now();
    let r = run_scenario(&cfg, dir.path())?;
    let secs = start.elapsed().as_secs_f64();
    let get = |name: &str| r.verdicts.iter().find(|v| v.name == name);
    let (conv, apri) = (get("convergence"), get("apriori"));
    let ok = conv.is_some_and(|v| v.passed) && apri.is_some_and(|v| v.passed) && secs <= 300.0;
    outcome(
        ok,
        format!(
            "{}; {}; {secs:.1} s",
            conv.map_or("no convergence verdict".into(), |v| v.summary.clone()),
            apri.map_or("no apriori verdict".into(), |v| v.summary.clone())
        ),
    )
}

fn waveform_max(dx: f64) -> Result<f64> {
    let mut cfg = RunConfig::preset(Scenario::Default);
    cfg.grid.half_width = 20.48;
    cfg.grid.dx = dx;
    cfg.grid.horizon = 3.0;
    cfg.grid.waveform_interval = 1.0;
    cfg.periodic.transient = 1.0;
    cfg.validate()?;
    let s = setup(&cfg)?;
    let opts = LineRunOptions {
        waveform: true,
        dump_dir: None,
    };
    let run = run_line(&cfg, &s.model, &s.rarefaction, (&s.left, &s.right), &opts)?;
    Ok(run.waveform.iter().map(|w| w.residual).fold(0.0, f64::max))
}

fn c9() -> Result<Outcome> {
    let (coarse, fine) = (waveform_max(0.02)?, waveform_max(0.01)?);
    let order = (coarse / fine).log2();

    let t: Vec<f64> = (0..60).map(|k| 0.5 * k as f64).collect();
    let (alpha, k) = (0.0734321, -0.618034);
    let e: Vec<f64> = t.iter().map(|t| 3.7 * (-alpha * t).exp()).collect();
    let p: Vec<f64> = t.iter().map(|t| 0.21 * (1.0 + t).powf(k)).collect();
    let fe = decay_fit(&t, &e, FitModel::Exponential)?;
    let fp = decay_fit(&t, &p, FitModel::Power)?;
    let rel = |got: Option<f64>, want: f64| got.map_or(f64::INFINITY, |g| ((g - want) / want).abs());
    let fit_err = rel(fe.fit().map(|f| f.rate), alpha).max(rel(fp.fit().map(|f| f.rate), k));

    let sweep = sobolev_sweep(100, 7);
    let sob = sweep.iter().filter(|v| v.passed).count();
    outcome(
        (1.7..=2.3).contains(&order) && fit_err <= 1e-6 && sob == 100,
        format!(
            "wave-form order {order:.3} ({coarse:.2e} -> {fine:.2e}); fit relative error {fit_err:.1e}; sobolev {sob}/100"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let sweep = rarefaction_sweep();
    let from_sweep = |f: &dyn Fn(&RarefactionSweepReport, f64) -> Result<Outcome>| match &sweep {
        Ok((r, secs)) => f(r, *secs),
        Err(e) => Err(relaxlab::LabError::Contract(format!("rarefaction sweep failed: {e}"))),
    };
    let results: Vec<(u32, &str, Result<Outcome>)> = vec![
        (1, "hypothesis certification", c1()),
        (2, "rarefaction convergence", from_sweep(&c2)),
        (3, "derivative decay exponents", from_sweep(&|r, _| c3(r))),
        (4, "rarefaction structure", from_sweep(&|r, _| c4(r))),
        (5, "periodic decay", c5()),
        (6, "residual fidelity", c6()),
        (7, "solver exactness", c7()),
        (8, "combined experiment", c8()),
        (9, "wave-form residual and self-tests", c9()),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (id, name, r) in &results {
        let (ok, detail) = match r {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILING.contains(id);
        if ok {
            passed += 1;
        } else if !known {
            unexpected += 1;
        }
        let tag = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id} {name}: {detail}");
    }
    println!(
        "{passed}/{} criteria pass, {unexpected} unexpected failures, {:.1} s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
