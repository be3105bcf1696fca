//! Orchestration: material, rarefaction, periodic cells, ansatz, line
//! solver and diagnostics, with artifacts written to an output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::ansatz::{assemble_frame, check_residual_decay, AnsatzFrame, DecayReport, ResidualNorms};
use crate::config::RunConfig;
use crate::diagnostics::energy::{energy_functionals, PerturbationFrame};
use crate::diagnostics::fit::FitOutcome;
use crate::diagnostics::monitors::{
    check_apriori, check_convergence, l1bv_monitor, refinement_stable, sobolev_check, sobolev_sweep, sup_difference,
    AprioriSample,
};
use crate::diagnostics::norms;
use crate::diagnostics::waveform::{wave_form_residual, WaveFormRow};
use crate::error::{LabError, Result};
use crate::linesolver::{build_initial_data, FieldState, LineGrid, LineSolver, LockStepBoundary};
use crate::material::{validate_hypotheses, HypothesisReport, MaterialModel};
use crate::periodic::{
    base_step, measure_decay, solve_periodic_cell, CellStepper, DecayMeasurement, PeriodicIC, PeriodicMode,
    PeriodicSolution, SnapshotPlan,
};
use crate::rarefaction::{check_rarefaction_sweep, RarefactionSweepOptions, RarefactionSweepReport, RiemannEndStates, SmoothRarefaction};

/// Outcome of one check; only gated verdicts enter the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub gated: bool,
    pub summary: String,
    pub detail: Value,
}

impl Verdict {
    fn gated(name: &str, passed: bool, summary: String, detail: Value) -> Self {
        Self {
            name: name.into(),
            passed,
            gated: true,
            summary,
            detail,
        }
    }

    fn report(name: &str, summary: String, detail: Value) -> Self {
        Self {
            name: name.into(),
            passed: true,
            gated: false,
            summary,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub elapsed_seconds: f64,
    pub out_dir: PathBuf,
}

/// Per-snapshot record written to diagnostics.csv.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// sup of |(v - V^r, u - U^r, p - p_R(V^r))| over the reporting window
    pub sup_window: f64,
    pub sup_full: f64,
    pub perturbation_h1_sq: f64,
    pub gradient_sq: f64,
    pub phi_x_sq: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub c7: f64,
    pub min_i5_density: f64,
    pub h1_l1: f64,
    pub h1_h1: f64,
    pub h1x_l2: f64,
    pub h2_l2: f64,
    pub h2t_l2: f64,
    pub w1_l2: f64,
    pub w2_l2: f64,
    pub expansion_gap: f64,
    pub min_v: f64,
    pub max_v: f64,
}

/// Which base steps the line run stops at.
#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub interval_steps: u64,
    pub offset: u64,
    pub centers: Vec<u64>,
    pub wave_centers: Vec<u64>,
    pub dumps: Vec<u64>,
    pub total: u64,
}

impl Schedule {
    pub fn new(cfg: &RunConfig, dt: f64, waveform: bool) -> Self {
        let g = &cfg.grid;
        let last = (g.horizon / dt - 1e-9).ceil() as u64;
        let interval_steps = ((g.snapshot_interval / dt).round() as u64).max(1);
        let mut centers: Vec<u64> = (0..).map(|k| k * interval_steps).take_while(|&s| s <= last).collect();
        if centers.last() != Some(&last) {
            centers.push(last);
        }
        let offset = g.fd_offset_steps;
        let mut wave_centers = Vec::new();
        if waveform {
            let mut j = 1u64;
            loop {
                let s = (j as f64 * g.waveform_interval / dt).round() as u64;
                if s > last {
                    break;
                }
                if s >= offset {
                    wave_centers.push(s);
                }
                j += 1;
            }
        }
        let dumps = g
            .dump_times
            .iter()
            .filter(|&&t| t >= 0.0 && t <= g.horizon + 1e-9)
            .map(|&t| ((t / dt).round() as u64).min(last))
            .collect();
        let total = last + if wave_centers.is_empty() { 0 } else { offset };
        Self {
            interval_steps,
            offset,
            centers,
            wave_centers,
            dumps,
            total,
        }
    }

    pub fn all_steps(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.centers.clone();
        for &c in &self.wave_centers {
            v.extend([c - self.offset, c, c + self.offset]);
        }
        v.extend(&self.dumps);
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Default)]
pub struct LineRunOptions {
    pub waveform: bool,
    pub dump_dir: Option<PathBuf>,
}

/// Everything measured during one line run.
#[derive(Debug, Clone)]
pub struct LineRun {
    pub grid: LineGrid,
    pub schedule: Schedule,
    pub window: (f64, f64),
    pub causal_window: Option<(f64, f64)>,
    pub rows: Vec<DiagnosticsRow>,
    pub waveform: Vec<WaveFormRow>,
    pub residuals: Vec<ResidualNorms>,
    pub apriori: Vec<AprioriSample>,
    pub initial_h1_squared: f64,
    pub final_phi: Vec<f64>,
    pub left: PeriodicSolution,
    pub right: PeriodicSolution,
    pub elapsed_seconds: f64,
}

/// Resolution of a periodic cell on a grid of spacing dx.
pub fn cell_resolution(period: f64, dx: f64) -> Result<usize> {
    let n = (period / dx).round();
    if ((period / dx) - n).abs() > 1e-9 * n || n < 1.0 {
        return Err(LabError::InvalidArgument(format!("period {period} is not a multiple of dx = {dx}")));
    }
    Ok(n as usize)
}

/// Both far-field cells, solved concurrently and kept at the given steps.
pub fn solve_cells(
    model: &MaterialModel,
    ics: (&PeriodicIC, &PeriodicIC),
    mode: PeriodicMode,
    dx: f64,
    horizon: f64,
    plan: &SnapshotPlan,
) -> Result<(PeriodicSolution, PeriodicSolution)> {
    let nl = cell_resolution(ics.0.period, dx)?;
    let nr = cell_resolution(ics.1.period, dx)?;
    let (l, r) = rayon::join(
        || solve_periodic_cell(model, ics.0, mode, horizon, nl, plan),
        || solve_periodic_cell(model, ics.1, mode, horizon, nr, plan),
    );
    Ok((l?, r?))
}

/// Ansatz on the given nodes at a stored time of both cells.
pub fn ansatz_frame(
    cfg: &RunConfig,
    model: &MaterialModel,
    rar: &SmoothRarefaction,
    left: &PeriodicSolution,
    right: &PeriodicSolution,
    x: &[f64],
    t: f64,
) -> Result<AnsatzFrame> {
    let jl = left.jet(t)?;
    let jr = right.jet(t)?;
    assemble_frame(
        model,
        cfg.orientation,
        &rar.states,
        x,
        t,
        |x| rar.eval(x, t),
        |x| jl.sample(x),
        |x| jr.sample(x),
    )
}

fn write_dump(dir: &Path, state: &FieldState, frame: &AnsatzFrame, stride: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("snapshot_t{:08.3}.csv", state.t));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "v", "u", "p", "V", "U", "P", "phi", "psi", "w"])?;
    for i in (0..frame.len()).step_by(stride.max(1)) {
        w.write_record(&[
            state.t.to_string(),
            frame.x[i].to_string(),
            state.v[i].to_string(),
            state.u[i].to_string(),
            state.p[i].to_string(),
            frame.v[i].to_string(),
            frame.u[i].to_string(),
            frame.p[i].to_string(),
            (state.v[i] - frame.v[i]).to_string(),
            (state.u[i] - frame.u[i]).to_string(),
            (state.p[i] - frame.p[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn snapshot_row(
    model: &MaterialModel,
    state: &FieldState,
    frame: &AnsatzFrame,
    window: (f64, f64),
) -> Result<(DiagnosticsRow, AprioriSample, ResidualNorms)> {
    let pf = PerturbationFrame::new(state, frame)?;
    let en = energy_functionals(model, &pf, frame)?;
    let n = frame.len();
    let dv: Vec<f64> = (0..n).map(|i| state.v[i] - frame.vr[i]).collect();
    let du: Vec<f64> = (0..n).map(|i| state.u[i] - frame.ur[i]).collect();
    let dp: Vec<f64> = (0..n).map(|i| state.p[i] - model.pressure_raw(frame.vr[i])).collect();
    let full = (f64::NEG_INFINITY, f64::INFINITY);
    let res = ResidualNorms::from_frame(frame);
    let (min_v, max_v) = state
        .v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |r, &v| (r.0.min(v), r.1.max(v)));
    let row = DiagnosticsRow {
        t: state.t,
        sup_window: sup_difference(&frame.x, &dv, &du, &dp, window)?,
        sup_full: sup_difference(&frame.x, &dv, &du, &dp, full)?,
        perturbation_h1_sq: pf.h1_squared(),
        gradient_sq: pf.gradient_squared(),
        phi_x_sq: norms::l2_squared(&pf.phi_x, pf.dx),
        i1: en.i1,
        i2: en.i2,
        i3: en.i3,
        i4: en.i4,
        i5: en.i5,
        c7: en.c7,
        min_i5_density: en.min_i5_density,
        h1_l1: res.h1_l1,
        h1_h1: res.h1_h1,
        h1x_l2: res.h1x_l2,
        h2_l2: res.h2_l2,
        h2t_l2: res.h2t_l2,
        w1_l2: res.w1_l2,
        w2_l2: res.w2_l2,
        expansion_gap: frame.expansion_gap,
        min_v,
        max_v,
    };
    let ap = AprioriSample {
        t: state.t,
        h1_squared: row.perturbation_h1_sq,
        gradient_squared: row.gradient_sq,
    };
    Ok((row, ap, res))
}

/// Solves the line problem with lock-step far-field ghosts and evaluates
/// per-snapshot diagnostics.
pub fn run_line(
    cfg: &RunConfig,
    model: &MaterialModel,
    rar: &SmoothRarefaction,
    ics: (&PeriodicIC, &PeriodicIC),
    opts: &LineRunOptions,
) -> Result<LineRun> {
    let start = Instant::now();
    let g = &cfg.grid;
    let grid = LineGrid::new(model, g.half_width, g.dx)?;
    let sched = Schedule::new(cfg, grid.dt, opts.waveform);
    let steps = sched.all_steps();
    let plan = SnapshotPlan {
        stride: sched.interval_steps,
        extra: steps.clone(),
    };
    let horizon = sched.total as f64 * grid.dt;
    let mode = cfg.periodic.mode;
    let (left, right) = solve_cells(model, ics, mode, g.dx, horizon, &plan)?;
    let x = grid.nodes();
    let causal_window = grid.causal_window(model.sqrt_young(), g.horizon, g.window_margin);
    let window = causal_window.unwrap_or((-g.half_width + g.window_margin, g.half_width - g.window_margin));

    let frame0 = ansatz_frame(cfg, model, rar, &left, &right, &x, 0.0)?;
    let init = build_initial_data(model, &grid, &frame0, &cfg.bump)?;
    let initial_h1_squared = PerturbationFrame::new(&init, &frame0)?.h1_squared();

    let nl = cell_resolution(ics.0.period, g.dx)?;
    let nr = cell_resolution(ics.1.period, g.dx)?;
    let mut boundary = LockStepBoundary::new(
        &grid,
        CellStepper::new(model, ics.0, mode, nl)?,
        CellStepper::new(model, ics.1, mode, nr)?,
    )?;
    let mut solver = LineSolver::new(model, grid, &init)?;

    let mut rows = Vec::with_capacity(sched.centers.len());
    let mut apriori = Vec::with_capacity(sched.centers.len());
    let mut residuals = Vec::with_capacity(sched.centers.len());
    let mut waveform = Vec::new();
    let mut pending: BTreeMap<u64, Vec<(FieldState, AnsatzFrame)>> = BTreeMap::new();
    let mut final_phi = Vec::new();
    let last_center = *sched.centers.last().unwrap_or(&0);
    solver.run(&mut boundary, sched.total, &steps, |state| {
        let s = state.step;
        let frame = if s == 0 {
            frame0.clone()
        } else {
            ansatz_frame(cfg, model, rar, &left, &right, &x, state.t)?
        };
        if sched.centers.binary_search(&s).is_ok() {
            let (row, ap, res) = snapshot_row(model, state, &frame, window)?;
            rows.push(row);
            apriori.push(ap);
            residuals.push(res);
            if s == last_center {
                final_phi = (0..frame.len()).map(|i| state.v[i] - frame.v[i]).collect();
            }
        }
        if sched.dumps.binary_search(&s).is_ok() {
            if let Some(dir) = &opts.dump_dir {
                write_dump(dir, state, &frame, g.dump_stride)?;
            }
        }
        for &c in &sched.wave_centers {
            if s + sched.offset == c || s == c || s == c + sched.offset {
                pending.entry(c).or_default().push((state.clone(), frame.clone()));
            }
        }
        let ready: Vec<u64> = pending.iter().filter(|(_, v)| v.len() == 3).map(|(&c, _)| c).collect();
        for c in ready {
            let trip = pending.remove(&c).unwrap_or_default();
            waveform.push(wave_form_residual(model, &trip)?);
        }
        Ok(())
    })?;
    Ok(LineRun {
        grid,
        schedule: sched,
        window,
        causal_window,
        rows,
        waveform,
        residuals,
        apriori,
        initial_h1_squared,
        final_phi,
        left,
        right,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Common inputs derived from a config.
pub struct Setup {
    pub model: MaterialModel,
    pub states: RiemannEndStates,
    pub rarefaction: SmoothRarefaction,
    pub left: PeriodicIC,
    pub right: PeriodicIC,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    let model = cfg.model()?;
    let states = cfg.end_states(&model)?;
    let rarefaction = SmoothRarefaction::new(&model, states)?;
    let (left, right) = cfg.periodic_ics(&states)?;
    Ok(Setup {
        model,
        states,
        rarefaction,
        left,
        right,
    })
}

pub fn validate_material(cfg: &RunConfig) -> Result<HypothesisReport> {
    Ok(validate_hypotheses(&cfg.model()?))
}

pub fn rarefaction_check(cfg: &RunConfig) -> Result<RarefactionSweepReport> {
    let s = setup(cfg)?;
    check_rarefaction_sweep(&s.rarefaction, &RarefactionSweepOptions::default())
}

#[derive(Debug, Clone, Serialize)]
pub struct SideDecay {
    pub side: String,
    pub measurement: DecayMeasurement,
    /// the same cell at half the spacing
    pub refined: Option<DecayMeasurement>,
    pub refinement_stable: Option<bool>,
}

fn fitted_rate(m: &DecayMeasurement) -> Option<f64> {
    m.outcome.fit().map(|f| f.rate)
}

/// Exponential decay of each far-field cell over the run horizon, with an
/// optional rerun at half the grid spacing.
pub fn periodic_decay(cfg: &RunConfig, refine: bool) -> Result<Vec<SideDecay>> {
    let s = setup(cfg)?;
    let dt = base_step(&s.model, cfg.grid.dx);
    let stride = ((cfg.grid.snapshot_interval / dt).round() as u64).max(1);
    let plan = SnapshotPlan { stride, extra: vec![] };
    let k = cfg.periodic.sobolev_order;
    let tr = cfg.periodic.transient;
    let (l, r) = solve_cells(&s.model, (&s.left, &s.right), cfg.periodic.mode, cfg.grid.dx, cfg.grid.horizon, &plan)?;
    let fine = if refine {
        let dx = 0.5 * cfg.grid.dx;
        let plan = SnapshotPlan {
            stride: 2 * stride,
            extra: vec![],
        };
        Some(solve_cells(&s.model, (&s.left, &s.right), cfg.periodic.mode, dx, cfg.grid.horizon, &plan)?)
    } else {
        None
    };
    let mut out = Vec::new();
    for (idx, (name, sol)) in [("left", &l), ("right", &r)].into_iter().enumerate() {
        let measurement = measure_decay(sol, k, tr)?;
        let refined = match &fine {
            Some(f) => Some(measure_decay(if idx == 0 { &f.0 } else { &f.1 }, k, tr)?),
            None => None,
        };
        let refinement_stable = refined.as_ref().map(|m2| match (fitted_rate(&measurement), fitted_rate(m2)) {
            (Some(a), Some(b)) => refinement_stable(b, a, cfg.diagnostics.refinement_tolerance),
            (None, None) => true,
            _ => false,
        });
        out.push(SideDecay {
            side: name.into(),
            measurement,
            refined,
            refinement_stable,
        });
    }
    Ok(out)
}

/// Reference decay rate for the residual fits: the slower relaxation cell.
pub fn reference_rate(mode: PeriodicMode, decays: &[SideDecay]) -> Option<f64> {
    if mode != PeriodicMode::Relaxation {
        return None;
    }
    decays
        .iter()
        .filter_map(|d| d.measurement.outcome.fit().filter(|f| f.rate > 0.0).map(|f| f.rate))
        .reduce(f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnsatzResiduals {
    pub series: Vec<ResidualNorms>,
    pub max_expansion_gap: f64,
    pub max_s1: f64,
    pub max_s2: f64,
    pub report: DecayReport,
}

/// Residual norms of the ansatz on the line grid at the snapshot times
/// after the transient, without solving the line problem.
pub fn ansatz_residuals(cfg: &RunConfig, reference: Option<f64>) -> Result<AnsatzResiduals> {
    let s = setup(cfg)?;
    let grid = LineGrid::new(&s.model, cfg.grid.half_width, cfg.grid.dx)?;
    let sched = Schedule::new(cfg, grid.dt, false);
    let plan = SnapshotPlan {
        stride: sched.interval_steps,
        extra: sched.centers.clone(),
    };
    let (l, r) = solve_cells(
        &s.model,
        (&s.left, &s.right),
        cfg.periodic.mode,
        cfg.grid.dx,
        sched.total as f64 * grid.dt,
        &plan,
    )?;
    let x = grid.nodes();
    let mut series = Vec::new();
    let (mut gap, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    for &c in &sched.centers {
        let t = c as f64 * grid.dt;
        if t < cfg.periodic.transient {
            continue;
        }
        let f = ansatz_frame(cfg, &s.model, &s.rarefaction, &l, &r, &x, t)?;
        gap = gap.max(f.expansion_gap);
        s1 = s1.max(f.max_s1);
        s2 = s2.max(f.max_s2);
        series.push(ResidualNorms::from_frame(&f));
    }
    let report = check_residual_decay(&series, reference, cfg.diagnostics.residual_decay_tolerance)?;
    Ok(AnsatzResiduals {
        series,
        max_expansion_gap: gap,
        max_s1: s1,
        max_s2: s2,
        report,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn fit_summary(o: &FitOutcome) -> String {
    match o {
        FitOutcome::Fitted(f) => format!("rate {:.5} (R^2 {:.4})", f.rate, f.r2),
        FitOutcome::DecayedToFloor { max_value } => format!("decayed to floor (max {max_value:.3e})"),
    }
}

/// Runs every enabled stage, writes artifacts into `out` and returns the
/// verdicts; the report passes iff every gated verdict passes.
pub fn run_scenario(cfg: &RunConfig, out: &Path) -> Result<ScenarioReport> {
    let start = Instant::now();
    fs::create_dir_all(out)?;
    let stale = out.join("error.json");
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    write_json(&out.join("config.json"), cfg)?;
    let d = &cfg.diagnostics;
    let s = setup(cfg)?;
    let mut verdicts = Vec::new();

    if d.material {
        let h = validate_hypotheses(&s.model);
        write_json(&out.join("material.json"), &h)?;
        verdicts.push(Verdict::gated(
            "material",
            h.passed,
            format!("E1 = {}, E = {}, a1 = {}, a2 = {}", h.e1, h.young, h.a1, h.a2),
            serde_json::to_value(&h.checks)?,
        ));
    }

    if d.rarefaction {
        let r = check_rarefaction_sweep(&s.rarefaction, &RarefactionSweepOptions::default())?;
        r.write_csv(fs::File::create(out.join("rarefaction_sweep.csv"))?)?;
        verdicts.push(Verdict::gated(
            "rarefaction",
            r.passed,
            format!(
                "sup ratio {:.4}, monotone {}, transport c {:.8}, residual {:.2e}",
                r.sup_ratio, r.sup_monotone, r.transport_constant, r.max_residual
            ),
            json!({
                "sup_passed": r.sup_passed,
                "exponents": r.exponents,
                "vt_positive": r.vt_positive,
                "transport_passed": r.transport_passed,
                "residual_passed": r.residual_passed,
            }),
        ));
    }

    let decays = if d.periodic_decay || d.residual_decay {
        periodic_decay(cfg, d.refinement && d.periodic_decay)?
    } else {
        Vec::new()
    };
    if d.periodic_decay {
        let mut w = csv::Writer::from_path(out.join("periodic_decay.csv"))?;
        w.write_record(["side", "t", "norm"])?;
        for sd in &decays {
            for (t, v) in sd.measurement.times.iter().zip(&sd.measurement.norms) {
                w.write_record(&[sd.side.clone(), t.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        let relax = cfg.periodic.mode == PeriodicMode::Relaxation;
        let ok = decays.iter().all(|sd| {
            let fitted_ok = match &sd.measurement.outcome {
                FitOutcome::DecayedToFloor { .. } => true,
                FitOutcome::Fitted(_) => sd.measurement.alpha_claimed,
            };
            fitted_ok && sd.refinement_stable.unwrap_or(true)
        });
        let summary = decays
            .iter()
            .map(|sd| format!("{}: {}", sd.side, fit_summary(&sd.measurement.outcome)))
            .collect::<Vec<_>>()
            .join("; ");
        let detail = serde_json::to_value(
            decays
                .iter()
                .map(|sd| {
                    json!({
                        "side": sd.side,
                        "outcome": sd.measurement.outcome,
                        "alpha_claimed": sd.measurement.alpha_claimed,
                        "refined": sd.refined.as_ref().map(|m| &m.outcome),
                        "refinement_stable": sd.refinement_stable,
                    })
                })
                .collect::<Vec<_>>(),
        )?;
        verdicts.push(if relax {
            Verdict::gated("periodic-decay", ok, summary, detail)
        } else {
            Verdict::report("periodic-decay", summary, detail)
        });
    }

    let need_line = d.convergence || d.apriori || d.waveform || d.residual_decay || d.sobolev;
    let mut metadata = json!({
        "scenario": cfg.scenario.name(),
        "model": {
            "gamma": s.model.gamma, "young": s.model.young, "e1": s.model.e1,
            "tau": s.model.tau, "strain": [s.model.strain_lo, s.model.strain_hi],
        },
        "states": s.states,
    });
    if need_line {
        let opts = LineRunOptions {
            waveform: d.waveform,
            dump_dir: Some(out.join("dumps")),
        };
        let run = run_line(cfg, &s.model, &s.rarefaction, (&s.left, &s.right), &opts)?;
        write_rows(&out.join("diagnostics.csv"), &run.rows)?;
        if !run.waveform.is_empty() {
            write_rows(&out.join("waveform.csv"), &run.waveform)?;
        }
        let delta = s.states.delta;
        let eps = cfg.periodic.left.epsilon.max(cfg.periodic.right.epsilon);

        let coarse = if d.refinement && d.apriori {
            let mut c2 = cfg.clone();
            c2.grid.dx *= 2.0;
            let r2 = run_line(&c2, &s.model, &s.rarefaction, (&s.left, &s.right), &LineRunOptions::default())?;
            write_rows(&out.join("diagnostics_coarse.csv"), &r2.rows)?;
            Some(r2)
        } else {
            None
        };

        metadata["grid"] = json!({
            "half_width": run.grid.half_width, "dx": run.grid.dx, "dt": run.grid.dt,
            "nodes": run.grid.n, "steps": run.schedule.total,
        });
        metadata["window"] = json!(run.window);
        metadata["causal_window"] = json!(run.causal_window);
        metadata["causally_clean"] = json!(run.causal_window.is_some());
        metadata["line_seconds"] = json!(run.elapsed_seconds);
        if let Some(c) = &coarse {
            metadata["coarse_line_seconds"] = json!(c.elapsed_seconds);
        }

        if d.convergence {
            let t: Vec<f64> = run.rows.iter().map(|r| r.t).collect();
            let sup: Vec<f64> = run.rows.iter().map(|r| r.sup_window).collect();
            let c = check_convergence(&t, &sup, run.window, 1.0, d.convergence_ratio, d.convergence_spearman)?;
            verdicts.push(Verdict::gated(
                "convergence",
                c.passed,
                format!(
                    "sup ratio {:.4} (limit {}), tail Spearman {:.3}, window [{}, {}]",
                    c.ratio, c.max_ratio, c.tail_spearman, c.window.0, c.window.1
                ),
                json!({
                    "reference": c.reference, "final": c.final_value,
                    "causally_clean": run.causal_window.is_some(),
                }),
            ));
        }

        if d.apriori {
            let a = check_apriori(&run.apriori, run.initial_h1_squared, delta, eps)?;
            let mut passed = a.finite && a.accounting_ok;
            let mut detail = json!({"c0": a.c0, "data_size": a.data_size, "accounting_ok": a.accounting_ok});
            let mut summary = format!("C0 = {:.5}", a.c0);
            if let Some(c) = &coarse {
                let a2 = check_apriori(&c.apriori, c.initial_h1_squared, delta, eps)?;
                let stable = refinement_stable(a.c0, a2.c0, d.refinement_tolerance);
                passed &= stable && a2.finite;
                detail["c0_coarse"] = json!(a2.c0);
                detail["refinement_stable"] = json!(stable);
                summary = format!("{summary}, coarse C0 = {:.5}", a2.c0);
            }
            verdicts.push(Verdict::gated("apriori", passed, summary, detail));
        }

        if d.waveform {
            let max = run.waveform.iter().map(|w| w.residual).fold(0.0, f64::max);
            verdicts.push(Verdict::gated(
                "waveform",
                max <= d.waveform_max,
                format!("max residual {max:.3e} (limit {:.1e})", d.waveform_max),
                serde_json::to_value(&run.waveform)?,
            ));
        }

        if d.residual_decay {
            let reference = reference_rate(cfg.periodic.mode, &decays);
            let series: Vec<ResidualNorms> =
                run.residuals.iter().filter(|r| r.t >= cfg.periodic.transient).cloned().collect();
            let rep = check_residual_decay(&series, reference, d.residual_decay_tolerance)?;
            let summary = rep
                .fits
                .iter()
                .map(|f| format!("{}: {}", f.name, fit_summary(&f.outcome)))
                .collect::<Vec<_>>()
                .join("; ");
            verdicts.push(Verdict::gated("residual-decay", rep.passed, summary, serde_json::to_value(&rep)?));
        }

        if d.sobolev {
            let sweep = sobolev_sweep(d.sobolev_samples, cfg.seed);
            let on_run = sobolev_check(&run.final_phi, run.grid.dx);
            let ok = sweep.iter().all(|v| v.passed) && on_run.passed;
            verdicts.push(Verdict::gated(
                "sobolev",
                ok,
                format!(
                    "{}/{} random functions pass; final phi sup^2 {:.3e} <= {:.3e}",
                    sweep.iter().filter(|v| v.passed).count(),
                    sweep.len(),
                    on_run.sup_squared,
                    on_run.bound
                ),
                json!({"final_phi": on_run}),
            ));
        }

        let t: Vec<f64> = run.rows.iter().map(|r| r.t).collect();
        let fx: Vec<f64> = run.rows.iter().map(|r| r.phi_x_sq).collect();
        if let Ok(m) = l1bv_monitor(&t, &fx) {
            verdicts.push(Verdict::report(
                "phi_x-l1-bv",
                format!(
                    "integral {:.3e}, variation {:.3e}, tail level {:.3}",
                    m.integral, m.total_variation, m.tail_level
                ),
                serde_json::to_value(&m)?,
            ));
        }
        let c7 = run.rows.iter().map(|r| r.c7).fold(f64::INFINITY, f64::min);
        let min_i5 = run.rows.iter().map(|r| r.min_i5_density).fold(f64::INFINITY, f64::min);
        verdicts.push(Verdict::report(
            "energy",
            format!("min coercivity c7 {c7:.4}, min I5 density {min_i5:.3e}"),
            json!({"c7": c7, "min_i5_density": min_i5}),
        ));
    }

    let elapsed = start.elapsed().as_secs_f64();
    metadata["elapsed_seconds"] = json!(elapsed);
    write_json(&out.join("metadata.json"), &metadata)?;
    let passed = verdicts.iter().filter(|v| v.gated).all(|v| v.passed);
    let report = ScenarioReport {
        scenario: cfg.scenario.name().into(),
        passed,
        verdicts,
        elapsed_seconds: elapsed,
        out_dir: out.to_path_buf(),
    };
    write_json(&out.join("verdicts.json"), &report)?;
    Ok(report)
}

/// Structured error document for failed runs.
pub fn error_json(err: &LabError) -> Value {
    json!({"error": {"kind": err.kind(), "message": err.to_string()}})
}
