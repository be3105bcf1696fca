//! Far-field periodic solutions on a single period cell.
//!
//! Relaxation mode reuses the line solver's characteristic kernel with
//! wrap-around, so a cell advanced in lock step with the line supplies
//! ghost data that is consistent with the line discretization. Equilibrium
//! mode solves the p-system pseudo-spectrally with RK4 substeps that divide
//! the same base step.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristic::{check_field, relax_field, shift_periodic, InvariantField};
use crate::diagnostics::fit::{decay_fit, FitModel, FitOutcome};
use crate::error::{LabError, Result};
use crate::material::MaterialModel;
use crate::spectral::{FourierSeries, Spectral};

/// Equilibrium-mode RK4 substeps satisfy dt * sqrt(E1) <= CFL * dx.
pub const EQUILIBRIUM_CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodicMode {
    /// p-system v_t - u_x = 0, u_t + p_R(v)_x = 0
    Equilibrium,
    /// full 3x3 relaxation system with p(x, 0) = p_R(v(x, 0))
    Relaxation,
}

/// Finite Fourier series sum_k a_k cos(2 pi k x / P) + b_k sin(2 pi k x / P), k >= 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierProfile {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierProfile {
    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    /// Value and first two derivatives.
    pub fn eval(&self, x: f64, period: f64) -> [f64; 3] {
        let base = 2.0 * std::f64::consts::PI / period;
        let mut out = [0.0; 3];
        let modes = self.cos.len().max(self.sin.len());
        for k in 0..modes {
            let kap = base * (k + 1) as f64;
            let a = self.cos.get(k).copied().unwrap_or(0.0);
            let b = self.sin.get(k).copied().unwrap_or(0.0);
            let (s, c) = (kap * x).sin_cos();
            out[0] += a * c + b * s;
            out[1] += kap * (b * c - a * s);
            out[2] -= kap * kap * (a * c + b * s);
        }
        out
    }

    /// Squared H^2 norm over one period.
    pub fn h2_squared(&self, period: f64) -> f64 {
        let base = 2.0 * std::f64::consts::PI / period;
        let modes = self.cos.len().max(self.sin.len());
        (0..modes)
            .map(|k| {
                let k2 = (base * (k + 1) as f64).powi(2);
                let a = self.cos.get(k).copied().unwrap_or(0.0);
                let b = self.sin.get(k).copied().unwrap_or(0.0);
                (1.0 + k2 + k2 * k2) * (a * a + b * b) * period / 2.0
            })
            .sum()
    }
}

/// Far-field data (v_bar + phi0, u_bar + psi0) with the profile scaled so
/// that ||(phi0, psi0)||_{H^2(cell)} = epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicIC {
    pub period: f64,
    pub epsilon: f64,
    pub v_bar: f64,
    pub u_bar: f64,
    pub phi: FourierProfile,
    pub psi: FourierProfile,
}

impl PeriodicIC {
    pub fn new(period: f64, epsilon: f64, v_bar: f64, u_bar: f64, phi: FourierProfile, psi: FourierProfile) -> Result<Self> {
        let ic = Self {
            period,
            epsilon,
            v_bar,
            u_bar,
            phi,
            psi,
        };
        ic.validate()?;
        Ok(ic)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(LabError::InvalidArgument(format!("period must be positive, got {}", self.period)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(LabError::InvalidArgument(format!("amplitude must be nonnegative, got {}", self.epsilon)));
        }
        if self.epsilon > 0.0 && self.phi.is_zero() && self.psi.is_zero() {
            return Err(LabError::InvalidArgument("positive amplitude with an all-zero profile".into()));
        }
        Ok(())
    }

    /// Multiplier applied to the raw profile coefficients.
    pub fn scale(&self) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        let raw = (self.phi.h2_squared(self.period) + self.psi.h2_squared(self.period)).sqrt();
        self.epsilon / raw
    }

    /// Scaled (phi0, psi0) with first and second derivatives.
    pub fn perturbation(&self, x: f64) -> ([f64; 3], [f64; 3]) {
        let s = self.scale();
        let a = self.phi.eval(x, self.period);
        let b = self.psi.eval(x, self.period);
        (a.map(|f| s * f), b.map(|f| s * f))
    }

    /// Same mean state, zero amplitude.
    pub fn unperturbed(&self) -> Self {
        Self {
            epsilon: 0.0,
            ..self.clone()
        }
    }
}

/// Base step of the unit-CFL characteristic scheme.
pub fn base_step(model: &MaterialModel, dx: f64) -> f64 {
    dx / model.sqrt_young()
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 64 || !n.is_power_of_two() {
        return Err(LabError::InvalidArgument(format!(
            "cell resolution must be a power of two >= 64, got {n}"
        )));
    }
    Ok(())
}

fn initial_fields(model: &MaterialModel, ic: &PeriodicIC, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dx = ic.period / n as f64;
    let mut v = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for j in 0..n {
        let (phi, psi) = ic.perturbation(j as f64 * dx);
        v.push(ic.v_bar + phi[0]);
        u.push(ic.u_bar + psi[0]);
    }
    let p = v.iter().map(|&x| model.pressure_raw(x)).collect();
    (v, u, p)
}

/// Relaxation-system cell advanced by the characteristic scheme.
#[derive(Debug, Clone)]
pub struct RelaxationCell {
    model: MaterialModel,
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    q_half: f64,
    field: InvariantField,
    pub steps: u64,
}

impl RelaxationCell {
    pub fn new(model: &MaterialModel, ic: &PeriodicIC, n: usize) -> Result<Self> {
        ic.validate()?;
        check_resolution(n)?;
        let (v, u, p) = initial_fields(model, ic, n);
        let dx = ic.period / n as f64;
        let dt = base_step(model, dx);
        let field = InvariantField::from_fields(model.young, &v, &u, &p);
        check_field(model, &field, 0.0)?;
        Ok(Self {
            model: model.clone(),
            n,
            dx,
            dt,
            q_half: (-0.5 * dt / model.tau).exp(),
            field,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Strang step: half source, shift, half source.
    pub fn step(&mut self) -> Result<(f64, f64)> {
        relax_field(&self.model, &mut self.field, self.q_half);
        shift_periodic(&mut self.field);
        relax_field(&self.model, &mut self.field, self.q_half);
        self.steps += 1;
        check_field(&self.model, &self.field, self.time())
    }

    /// State at the node with (possibly negative) global index j.
    pub fn node_state(&self, j: i64) -> (f64, f64, f64) {
        let k = j.rem_euclid(self.n as i64) as usize;
        self.field.node(self.model.young, k)
    }

    pub fn fields(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        self.field.to_fields(self.model.young)
    }
}

/// p-system cell advanced by pseudo-spectral RK4.
#[derive(Debug, Clone)]
pub struct EquilibriumCell {
    model: MaterialModel,
    spectral: Spectral,
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub substeps: usize,
    v: Vec<f64>,
    u: Vec<f64>,
    pub steps: u64,
}

impl EquilibriumCell {
    pub fn new(model: &MaterialModel, ic: &PeriodicIC, n: usize) -> Result<Self> {
        ic.validate()?;
        check_resolution(n)?;
        let (v, u, _) = initial_fields(model, ic, n);
        let dx = ic.period / n as f64;
        let dt = base_step(model, dx);
        let limit = EQUILIBRIUM_CFL * dx / model.e1.sqrt();
        let substeps = (dt / limit).ceil().max(1.0) as usize;
        Ok(Self {
            model: model.clone(),
            spectral: Spectral::new(n, ic.period),
            n,
            dx,
            dt,
            substeps,
            v,
            u,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    fn rhs(&self, v: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let flux: Vec<f64> = v.iter().map(|&x| self.model.pressure_raw(x)).collect();
        let mut fs = self.spectral.forward(&flux);
        self.spectral.dealias(&mut fs);
        let fx = self.spectral.derivative_from_spectrum(&fs, 1);
        let ux = self.spectral.derivative(u, 1);
        (ux, fx.into_iter().map(|f| -f).collect())
    }

    pub fn step(&mut self) -> Result<(f64, f64)> {
        let h = self.dt / self.substeps as f64;
        let n = self.n;
        for _ in 0..self.substeps {
            let axpy = |base: &[f64], k: &[f64], c: f64| -> Vec<f64> { base.iter().zip(k).map(|(b, k)| b + c * k).collect() };
            let (k1v, k1u) = self.rhs(&self.v, &self.u);
            let (k2v, k2u) = self.rhs(&axpy(&self.v, &k1v, 0.5 * h), &axpy(&self.u, &k1u, 0.5 * h));
            let (k3v, k3u) = self.rhs(&axpy(&self.v, &k2v, 0.5 * h), &axpy(&self.u, &k2u, 0.5 * h));
            let (k4v, k4u) = self.rhs(&axpy(&self.v, &k3v, h), &axpy(&self.u, &k3u, h));
            for j in 0..n {
                self.v[j] += h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
                self.u[j] += h / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
            }
        }
        self.steps += 1;
        let t = self.time();
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..n {
            let (v, u) = (self.v[j], self.u[j]);
            if !(v.is_finite() && u.is_finite()) {
                return Err(LabError::Instability { time: t, node: j });
            }
            if !self.model.contains(v) {
                return Err(LabError::BlowUp {
                    time: t,
                    node: j,
                    value: v,
                    lo: self.model.strain_lo,
                    hi: self.model.strain_hi,
                });
            }
            range = (range.0.min(v), range.1.max(v));
        }
        Ok(range)
    }

    pub fn node_state(&self, j: i64) -> (f64, f64, f64) {
        let k = j.rem_euclid(self.n as i64) as usize;
        (self.v[k], self.u[k], self.model.pressure_raw(self.v[k]))
    }

    pub fn fields(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.v.iter().map(|&x| self.model.pressure_raw(x)).collect();
        (self.v.clone(), self.u.clone(), p)
    }
}

/// Either cell solver behind one stepping interface.
#[derive(Debug, Clone)]
pub enum CellStepper {
    Relaxation(RelaxationCell),
    Equilibrium(EquilibriumCell),
}

impl CellStepper {
    pub fn new(model: &MaterialModel, ic: &PeriodicIC, mode: PeriodicMode, n: usize) -> Result<Self> {
        Ok(match mode {
            PeriodicMode::Relaxation => CellStepper::Relaxation(RelaxationCell::new(model, ic, n)?),
            PeriodicMode::Equilibrium => CellStepper::Equilibrium(EquilibriumCell::new(model, ic, n)?),
        })
    }

    pub fn step(&mut self) -> Result<(f64, f64)> {
        match self {
            CellStepper::Relaxation(c) => c.step(),
            CellStepper::Equilibrium(c) => c.step(),
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            CellStepper::Relaxation(c) => c.steps,
            CellStepper::Equilibrium(c) => c.steps,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            CellStepper::Relaxation(c) => c.dt,
            CellStepper::Equilibrium(c) => c.dt,
        }
    }

    pub fn node_state(&self, j: i64) -> (f64, f64, f64) {
        match self {
            CellStepper::Relaxation(c) => c.node_state(j),
            CellStepper::Equilibrium(c) => c.node_state(j),
        }
    }

    pub fn fields(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        match self {
            CellStepper::Relaxation(c) => c.fields(),
            CellStepper::Equilibrium(c) => c.fields(),
        }
    }
}

/// Which base steps to keep.
#[derive(Debug, Clone, Default)]
pub struct SnapshotPlan {
    /// keep every `stride`-th step (0 keeps only the endpoints and extras)
    pub stride: u64,
    pub extra: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub mode: PeriodicMode,
    pub period: f64,
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub ic: PeriodicIC,
    pub horizon: f64,
    pub snapshots: Vec<Snapshot>,
    /// min and max strain over all steps
    pub strain_range: (f64, f64),
    pub stride: u64,
    model: MaterialModel,
    spectral: Spectral,
}

pub fn solve_periodic_cell(
    model: &MaterialModel,
    ic: &PeriodicIC,
    mode: PeriodicMode,
    horizon: f64,
    n: usize,
    plan: &SnapshotPlan,
) -> Result<PeriodicSolution> {
    if !(horizon > 0.0) {
        return Err(LabError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let mut cell = CellStepper::new(model, ic, mode, n)?;
    let dt = cell.dt();
    let total = (horizon / dt - 1e-9).ceil() as u64;
    let mut extra = plan.extra.clone();
    extra.sort_unstable();
    extra.dedup();
    let keep = |s: u64| s == 0 || s == total || (plan.stride > 0 && s % plan.stride == 0) || extra.binary_search(&s).is_ok();
    let mut snapshots = Vec::new();
    let push = |cell: &CellStepper, snaps: &mut Vec<Snapshot>| {
        let (v, u, p) = cell.fields();
        let step = cell.steps();
        snaps.push(Snapshot {
            step,
            t: step as f64 * dt,
            v,
            u,
            p,
        });
    };
    push(&cell, &mut snapshots);
    let (v0, _, _) = cell.fields();
    let mut range = v0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |r, &v| (r.0.min(v), r.1.max(v)));
    for s in 1..=total {
        let r = cell.step()?;
        range = (range.0.min(r.0), range.1.max(r.1));
        if keep(s) {
            push(&cell, &mut snapshots);
        }
    }
    Ok(PeriodicSolution {
        mode,
        period: ic.period,
        n,
        dx: ic.period / n as f64,
        dt,
        ic: ic.clone(),
        horizon: total as f64 * dt,
        snapshots,
        strain_range: range,
        stride: plan.stride,
        model: model.clone(),
        spectral: Spectral::new(n, ic.period),
    })
}

/// Periodic fields with x-derivatives up to order 2 and time derivatives
/// from the governing equations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PeriodicSample {
    pub v: f64,
    pub u: f64,
    pub p: f64,
    pub v_x: f64,
    pub u_x: f64,
    pub p_x: f64,
    pub v_xx: f64,
    pub u_xx: f64,
    pub p_xx: f64,
    pub v_t: f64,
    pub u_t: f64,
    pub p_t: f64,
    /// v_xt = u_xx
    pub v_xt: f64,
    pub u_tt: f64,
    /// highest x-derivative order populated
    pub order: u8,
}

impl PeriodicSample {
    /// Constant state with every derivative zero.
    pub fn constant(v: f64, u: f64, p: f64) -> Self {
        Self {
            v,
            u,
            p,
            order: 2,
            ..Default::default()
        }
    }
}

/// All fields of one time level with nodal spectral derivatives.
#[derive(Debug, Clone)]
pub struct CellJet {
    pub t: f64,
    mode: PeriodicMode,
    model: MaterialModel,
    period: f64,
    dx: f64,
    n: usize,
    // [field][derivative order][node]; fields are v, u, p
    nodal: [[Vec<f64>; 3]; 3],
    series: [FourierSeries; 3],
}

impl CellJet {
    fn new(sol: &PeriodicSolution, t: f64, v: Vec<f64>, u: Vec<f64>, p: Vec<f64>) -> Self {
        let sp = &sol.spectral;
        let build = |f: Vec<f64>| -> ([Vec<f64>; 3], FourierSeries) {
            let spec: Vec<Complex64> = sp.forward(&f);
            let d1 = sp.derivative_from_spectrum(&spec, 1);
            let d2 = sp.derivative_from_spectrum(&spec, 2);
            ([f, d1, d2], FourierSeries::from_spectrum(&spec, sol.period))
        };
        let (nv, sv) = build(v);
        let (nu, su) = build(u);
        let (np, spp) = build(p);
        Self {
            t,
            mode: sol.mode,
            model: sol.model.clone(),
            period: sol.period,
            dx: sol.dx,
            n: sol.n,
            nodal: [nv, nu, np],
            series: [sv, su, spp],
        }
    }

    /// Sample at x; node-aligned positions read the nodal arrays directly.
    pub fn sample(&self, x: f64) -> PeriodicSample {
        let pos = x / self.dx;
        let j = pos.round();
        let (v, u, p) = if (pos - j).abs() < 1e-9 {
            let k = (j as i64).rem_euclid(self.n as i64) as usize;
            let g = |f: usize| [self.nodal[f][0][k], self.nodal[f][1][k], self.nodal[f][2][k]];
            (g(0), g(1), g(2))
        } else {
            let xr = x.rem_euclid(self.period);
            (self.series[0].eval(xr), self.series[1].eval(xr), self.series[2].eval(xr))
        };
        self.complete(v, u, p)
    }

    fn complete(&self, v: [f64; 3], u: [f64; 3], p: [f64; 3]) -> PeriodicSample {
        let m = &self.model;
        let p1 = m.dpressure_raw(v[0], 1);
        let p2 = m.dpressure_raw(v[0], 2);
        match self.mode {
            PeriodicMode::Relaxation => {
                let e = m.young;
                PeriodicSample {
                    v: v[0],
                    u: u[0],
                    p: p[0],
                    v_x: v[1],
                    u_x: u[1],
                    p_x: p[1],
                    v_xx: v[2],
                    u_xx: u[2],
                    p_xx: p[2],
                    v_t: u[1],
                    u_t: -p[1],
                    p_t: -e * u[1] + (m.pressure_raw(v[0]) - p[0]) / m.tau,
                    v_xt: u[2],
                    u_tt: e * u[2] - (p1 * v[1] - p[1]) / m.tau,
                    order: 2,
                }
            }
            PeriodicMode::Equilibrium => {
                let pr = m.pressure_raw(v[0]);
                PeriodicSample {
                    v: v[0],
                    u: u[0],
                    p: pr,
                    v_x: v[1],
                    u_x: u[1],
                    p_x: p1 * v[1],
                    v_xx: v[2],
                    u_xx: u[2],
                    p_xx: p2 * v[1] * v[1] + p1 * v[2],
                    v_t: u[1],
                    u_t: -p1 * v[1],
                    p_t: p1 * u[1],
                    v_xt: u[2],
                    u_tt: -(p2 * u[1] * v[1] + p1 * u[2]),
                    order: 2,
                }
            }
        }
    }
}

impl PeriodicSolution {
    pub fn model(&self) -> &MaterialModel {
        &self.model
    }

    pub fn mean_state(&self) -> (f64, f64, f64) {
        let (v, u) = (self.ic.v_bar, self.ic.u_bar);
        (v, u, self.model.pressure_raw(v))
    }

    fn locate(&self, t: f64) -> Result<(usize, usize, f64)> {
        let tol = 1e-9 * self.dt;
        if !(t >= -tol && t <= self.horizon + tol) {
            return Err(LabError::Horizon { t, horizon: self.horizon });
        }
        let idx = self.snapshots.partition_point(|s| s.t < t - tol);
        let idx = idx.min(self.snapshots.len() - 1);
        if (self.snapshots[idx].t - t).abs() <= tol || idx == 0 {
            return Ok((idx, idx, 0.0));
        }
        let (a, b) = (&self.snapshots[idx - 1], &self.snapshots[idx]);
        Ok((idx - 1, idx, (t - a.t) / (b.t - a.t)))
    }

    /// Jet at time t, blending linearly between neighbouring snapshots.
    pub fn jet(&self, t: f64) -> Result<CellJet> {
        let (a, b, theta) = self.locate(t)?;
        let (sa, sb) = (&self.snapshots[a], &self.snapshots[b]);
        let blend = |x: &[f64], y: &[f64]| -> Vec<f64> {
            if theta == 0.0 {
                x.to_vec()
            } else {
                x.iter().zip(y).map(|(x, y)| (1.0 - theta) * x + theta * y).collect()
            }
        };
        Ok(CellJet::new(self, t, blend(&sa.v, &sb.v), blend(&sa.u, &sb.u), blend(&sa.p, &sb.p)))
    }

    pub fn sample(&self, x: f64, t: f64, max_deriv: u8) -> Result<PeriodicSample> {
        let mut s = self.jet(t)?.sample(x);
        if max_deriv < 2 {
            s.v_xx = 0.0;
            s.u_xx = 0.0;
            s.p_xx = 0.0;
            s.v_xt = 0.0;
            s.u_tt = 0.0;
        }
        if max_deriv < 1 {
            s.v_x = 0.0;
            s.u_x = 0.0;
            s.p_x = 0.0;
        }
        s.order = max_deriv.min(2);
        Ok(s)
    }

    /// ||(v - v_bar, u - u_bar)||_{H^k(cell)} of a stored snapshot.
    pub fn deviation_norm(&self, snap: &Snapshot, k: u32) -> f64 {
        let dv: Vec<f64> = snap.v.iter().map(|v| v - self.ic.v_bar).collect();
        let du: Vec<f64> = snap.u.iter().map(|u| u - self.ic.u_bar).collect();
        (self.spectral.hk_norm_squared(&dv, k) + self.spectral.hk_norm_squared(&du, k)).sqrt()
    }

    /// Largest drift of the cell averages of v and u from their initial values.
    pub fn mean_drift(&self) -> (f64, f64) {
        let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
        let first = &self.snapshots[0];
        let (v0, u0) = (mean(&first.v), mean(&first.u));
        self.snapshots.iter().fold((0.0, 0.0), |acc: (f64, f64), s| {
            (acc.0.max((mean(&s.v) - v0).abs()), acc.1.max((mean(&s.u) - u0).abs()))
        })
    }

    /// t, x, v, u, p rows for every `every`-th snapshot.
    pub fn write_csv<W: std::io::Write>(&self, out: W, every: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "v", "u", "p"])?;
        for s in self.snapshots.iter().step_by(every.max(1)) {
            for j in 0..self.n {
                w.write_record(&[
                    s.t.to_string(),
                    (j as f64 * self.dx).to_string(),
                    s.v[j].to_string(),
                    s.u[j].to_string(),
                    s.p[j].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayMeasurement {
    pub sobolev_order: u32,
    pub transient: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub outcome: FitOutcome,
    /// a positive rate is claimed only with R^2 >= 0.98
    pub alpha_claimed: bool,
}

pub const MIN_R2: f64 = 0.98;

/// Exponential fit of the cell deviation over the uniformly strided
/// snapshots after `transient`.
pub fn measure_decay(sol: &PeriodicSolution, k: u32, transient: f64) -> Result<DecayMeasurement> {
    let picked: Vec<&Snapshot> = sol
        .snapshots
        .iter()
        .filter(|s| s.t >= transient && (sol.stride == 0 || s.step % sol.stride == 0))
        .collect();
    if picked.len() < crate::diagnostics::fit::MIN_SAMPLES {
        return Err(LabError::InvalidArgument(format!(
            "{} snapshots after t = {transient}; at least {} needed",
            picked.len(),
            crate::diagnostics::fit::MIN_SAMPLES
        )));
    }
    let times: Vec<f64> = picked.iter().map(|s| s.t).collect();
    let norms: Vec<f64> = picked.iter().map(|s| sol.deviation_norm(s, k)).collect();
    let outcome = decay_fit(&times, &norms, FitModel::Exponential)?;
    let alpha_claimed = outcome.fit().map(|f| f.rate > 0.0 && f.r2 >= MIN_R2).unwrap_or(false);
    Ok(DecayMeasurement {
        sobolev_order: k,
        transient,
        times,
        norms,
        outcome,
        alpha_claimed,
    })
}
