//! Relaxation system on a truncated line with far-field ghost data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzFrame;
use crate::characteristic::{check_field, relax_field, relax_invariants, shift_open, InvariantField};
use crate::error::{LabError, Result};
use crate::material::{riemann_invariants, MaterialModel};
use crate::periodic::{base_step, CellStepper, PeriodicSolution};

/// Uniform grid x_i = (i - M) dx on [-L, L] with the unit-CFL time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineGrid {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub n: usize,
    /// index of x = 0
    pub m: i64,
}

impl LineGrid {
    pub fn new(model: &MaterialModel, half_width: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !(half_width > dx) {
            return Err(LabError::InvalidArgument(format!(
                "line grid needs 0 < dx < L, got dx = {dx}, L = {half_width}"
            )));
        }
        let m = (half_width / dx).round() as i64;
        if ((m as f64) * dx - half_width).abs() > 1e-9 * half_width {
            return Err(LabError::InvalidArgument(format!("L = {half_width} is not a multiple of dx = {dx}")));
        }
        Ok(Self {
            half_width,
            dx,
            dt: base_step(model, dx),
            n: (2 * m + 1) as usize,
            m,
        })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as i64 - self.m) as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Global node index of the left ghost (x_0 - dx) and right ghost (x_{n-1} + dx).
    pub fn ghost_indices(&self) -> (i64, i64) {
        (-self.m - 1, self.m + 1)
    }

    pub fn steps_for(&self, horizon: f64) -> u64 {
        (horizon / self.dt - 1e-9).ceil() as u64
    }

    /// Window that no boundary signal can reach before `horizon`; `None`
    /// when the box is too small.
    pub fn causal_window(&self, sqrt_young: f64, horizon: f64, margin: f64) -> Option<(f64, f64)> {
        let reach = sqrt_young * horizon + margin;
        let lo = -self.half_width + reach;
        let hi = self.half_width - reach;
        (lo < hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub step: u64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// Supplies (v, u, p) at the ghost node of one side for the state at `step`.
pub trait BoundaryProvider: Send {
    fn ghost(&mut self, step: u64, t: f64, side: Side) -> Result<(f64, f64, f64)>;
}

/// Constant far-field states.
#[derive(Debug, Clone, Copy)]
pub struct ConstantBoundary {
    pub left: (f64, f64, f64),
    pub right: (f64, f64, f64),
}

impl BoundaryProvider for ConstantBoundary {
    fn ghost(&mut self, _step: u64, _t: f64, side: Side) -> Result<(f64, f64, f64)> {
        Ok(match side {
            Side::Left => self.left,
            Side::Right => self.right,
        })
    }
}

/// Periodic cells advanced in lock step with the line; the ghost value is
/// the cell state at the ghost node, so the line sees exactly the data the
/// same scheme produces for the periodic problem.
#[derive(Debug, Clone)]
pub struct LockStepBoundary {
    left: CellStepper,
    right: CellStepper,
    left_index: i64,
    right_index: i64,
}

impl LockStepBoundary {
    pub fn new(grid: &LineGrid, left: CellStepper, right: CellStepper) -> Result<Self> {
        for c in [&left, &right] {
            if (c.dt() - grid.dt).abs() > 1e-12 * grid.dt || c.steps() != 0 {
                return Err(LabError::InvalidArgument(
                    "lock-step cells must start at t = 0 with the line's time step".into(),
                ));
            }
        }
        let (li, ri) = grid.ghost_indices();
        Ok(Self {
            left,
            right,
            left_index: li,
            right_index: ri,
        })
    }
}

impl BoundaryProvider for LockStepBoundary {
    fn ghost(&mut self, step: u64, t: f64, side: Side) -> Result<(f64, f64, f64)> {
        let (cell, idx) = match side {
            Side::Left => (&mut self.left, self.left_index),
            Side::Right => (&mut self.right, self.right_index),
        };
        if cell.steps() > step {
            return Err(LabError::Horizon { t, horizon: cell.steps() as f64 * cell.dt() });
        }
        while cell.steps() < step {
            cell.step()?;
        }
        Ok(cell.node_state(idx))
    }
}

/// Ghost values interpolated from stored periodic solutions.
#[derive(Debug, Clone)]
pub struct SampledBoundary {
    pub left: Arc<PeriodicSolution>,
    pub right: Arc<PeriodicSolution>,
    pub x_left: f64,
    pub x_right: f64,
}

impl BoundaryProvider for SampledBoundary {
    fn ghost(&mut self, _step: u64, t: f64, side: Side) -> Result<(f64, f64, f64)> {
        boundary_values(&self.left, &self.right, self.x_left, self.x_right, t, side)
    }
}

/// Ghost values from an arbitrary function of (step, t, side).
pub struct ClosureBoundary<F>(pub F);

impl<F> BoundaryProvider for ClosureBoundary<F>
where
    F: FnMut(u64, f64, Side) -> Result<(f64, f64, f64)> + Send,
{
    fn ghost(&mut self, step: u64, t: f64, side: Side) -> Result<(f64, f64, f64)> {
        (self.0)(step, t, side)
    }
}

/// Periodic far-field state at a ghost position; equilibrium cells carry
/// p = p_R(v).
pub fn boundary_values(
    left: &PeriodicSolution,
    right: &PeriodicSolution,
    x_left: f64,
    x_right: f64,
    t: f64,
    side: Side,
) -> Result<(f64, f64, f64)> {
    let (sol, x) = match side {
        Side::Left => (left, x_left),
        Side::Right => (right, x_right),
    };
    let s = sol.sample(x, t, 0)?;
    Ok((s.v, s.u, s.p))
}

#[derive(Debug, Clone)]
pub struct LineSolver {
    model: MaterialModel,
    pub grid: LineGrid,
    field: InvariantField,
    pub step: u64,
    q_half: f64,
    /// when false the source is skipped and the scheme is pure transport
    pub source: bool,
}

impl LineSolver {
    pub fn new(model: &MaterialModel, grid: LineGrid, initial: &FieldState) -> Result<Self> {
        if initial.v.len() != grid.n || initial.u.len() != grid.n || initial.p.len() != grid.n {
            return Err(LabError::Shape(format!(
                "initial state has {} nodes, grid has {}",
                initial.v.len(),
                grid.n
            )));
        }
        let field = InvariantField::from_fields(model.young, &initial.v, &initial.u, &initial.p);
        check_field(model, &field, initial.t)?;
        Ok(Self {
            model: model.clone(),
            grid,
            field,
            step: initial.step,
            q_half: (-0.5 * grid.dt / model.tau).exp(),
            source: true,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.grid.dt
    }

    pub fn invariants(&self) -> &InvariantField {
        &self.field
    }

    pub fn state(&self) -> FieldState {
        let (v, u, p) = self.field.to_fields(self.model.young);
        FieldState {
            t: self.time(),
            step: self.step,
            v,
            u,
            p,
        }
    }

    /// One Strang step: half source, exact shift with ghost inflow, half source.
    pub fn advance(&mut self, boundary: &mut dyn BoundaryProvider) -> Result<()> {
        let t = self.time();
        let e = self.model.young;
        let (lv, lu, lp) = boundary.ghost(self.step, t, Side::Left)?;
        let (rv, ru, rp) = boundary.ghost(self.step, t, Side::Right)?;
        let mut gl = riemann_invariants(e, lv, lu, lp);
        let mut gr = riemann_invariants(e, rv, ru, rp);
        if self.source {
            relax_invariants(&self.model, &mut gl, self.q_half);
            relax_invariants(&self.model, &mut gr, self.q_half);
            relax_field(&self.model, &mut self.field, self.q_half);
        }
        shift_open(&mut self.field, gl.r_plus, gr.r_minus);
        if self.source {
            relax_field(&self.model, &mut self.field, self.q_half);
        }
        self.step += 1;
        check_field(&self.model, &self.field, self.time())?;
        Ok(())
    }

    /// Advances to `total_steps`, handing the state to `on_snapshot` at every
    /// step listed in `schedule` (including the starting step if listed).
    pub fn run<F>(&mut self, boundary: &mut dyn BoundaryProvider, total_steps: u64, schedule: &[u64], mut on_snapshot: F) -> Result<()>
    where
        F: FnMut(&FieldState) -> Result<()>,
    {
        let mut sched: Vec<u64> = schedule.to_vec();
        sched.sort_unstable();
        sched.dedup();
        let mut next = sched.partition_point(|&s| s < self.step);
        while next < sched.len() && sched[next] == self.step {
            on_snapshot(&self.state())?;
            next += 1;
        }
        while self.step < total_steps {
            self.advance(boundary)?;
            while next < sched.len() && sched[next] == self.step {
                on_snapshot(&self.state())?;
                next += 1;
            }
        }
        Ok(())
    }
}

/// Functional form of one step.
pub fn step(model: &MaterialModel, grid: LineGrid, state: &FieldState, boundary: &mut dyn BoundaryProvider) -> Result<FieldState> {
    let mut s = LineSolver::new(model, grid, state)?;
    s.advance(boundary)?;
    Ok(s.state())
}

/// Smooth localized perturbation added to the ansatz at t = 0:
/// (phi0, psi0, w0) = A (d_phi, d_psi, d_w) exp(-(x - c)^2 / s^2), cut off
/// beyond `cutoff` widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    /// target ||(phi0, psi0, w0)||_{H^1}
    pub h1_norm: f64,
    pub center: f64,
    pub width: f64,
    /// relative weights of the (phi, psi, w) components
    pub direction: [f64; 3],
    pub cutoff: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            h1_norm: 1e-2,
            center: 0.0,
            width: 2.0,
            direction: [1.0, 0.5, 0.25],
            cutoff: 8.0,
        }
    }
}

impl BumpSpec {
    pub fn zero() -> Self {
        Self {
            h1_norm: 0.0,
            ..Self::default()
        }
    }

    /// Closed-form H^1 norm of the untruncated unit-amplitude Gaussian:
    /// ||g||^2 = sqrt(pi/2) (s + 1/s).
    pub fn unit_h1_squared(&self) -> f64 {
        (std::f64::consts::PI / 2.0).sqrt() * (self.width + 1.0 / self.width)
    }

    /// Component amplitudes realizing the target norm.
    pub fn amplitudes(&self) -> [f64; 3] {
        let d = self.direction;
        let dn = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if self.h1_norm == 0.0 || dn == 0.0 {
            return [0.0; 3];
        }
        let a = self.h1_norm / (dn * self.unit_h1_squared().sqrt());
        [a * d[0], a * d[1], a * d[2]]
    }

    pub fn profile(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.width;
        if y.abs() > self.cutoff {
            0.0
        } else {
            (-y * y).exp()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h1_norm >= 0.0) || !(self.width > 0.0) || !(self.cutoff > 0.0) {
            return Err(LabError::InvalidArgument(
                "bump needs h1_norm >= 0, width > 0 and cutoff > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Ansatz at t = 0 plus the bump; far from the bump the data equal the
/// periodic far fields through the ansatz.
pub fn build_initial_data(model: &MaterialModel, grid: &LineGrid, ansatz0: &AnsatzFrame, bump: &BumpSpec) -> Result<FieldState> {
    bump.validate()?;
    if ansatz0.len() != grid.n {
        return Err(LabError::Shape(format!("ansatz has {} nodes, grid has {}", ansatz0.len(), grid.n)));
    }
    let amp = bump.amplitudes();
    let mut v = Vec::with_capacity(grid.n);
    let mut u = Vec::with_capacity(grid.n);
    let mut p = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let g = bump.profile(grid.x(i));
        let vi = ansatz0.v[i] + amp[0] * g;
        if !model.contains(vi) {
            return Err(LabError::Domain {
                value: vi,
                lo: model.strain_lo,
                hi: model.strain_hi,
            });
        }
        v.push(vi);
        u.push(ansatz0.u[i] + amp[1] * g);
        p.push(ansatz0.p[i] + amp[2] * g);
    }
    Ok(FieldState {
        t: 0.0,
        step: 0,
        v,
        u,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::norms;

    fn model() -> MaterialModel {
        MaterialModel::default_power_law()
    }

    fn constant_state(grid: &LineGrid, v: f64, u: f64, p: f64) -> FieldState {
        FieldState {
            t: 0.0,
            step: 0,
            v: vec![v; grid.n],
            u: vec![u; grid.n],
            p: vec![p; grid.n],
        }
    }

    #[test]
    fn grid_layout() {
        let m = model();
        let g = LineGrid::new(&m, 2.0, 0.5).unwrap();
        assert_eq!(g.n, 9);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.ghost_indices(), (-5, 5));
        assert!((g.dt * m.sqrt_young() - g.dx).abs() < 1e-16);
        assert!(LineGrid::new(&m, 2.0, 0.3).is_err());
        assert!(g.causal_window(m.sqrt_young(), 10.0, 1.0).is_none());
        let big = LineGrid::new(&m, 100.0, 0.5).unwrap();
        let (lo, hi) = big.causal_window(m.sqrt_young(), 10.0, 1.0).unwrap();
        assert!((lo + 100.0 - 10.0 * m.sqrt_young() - 1.0).abs() < 1e-12 && (hi + lo).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_state_is_fixed() {
        let m = model();
        let g = LineGrid::new(&m, 5.0, 0.1).unwrap();
        let (v, u) = (1.3, 0.2);
        let p = m.pressure_raw(v);
        let s0 = constant_state(&g, v, u, p);
        let mut bc = ConstantBoundary {
            left: (v, u, p),
            right: (v, u, p),
        };
        let s1 = step(&m, g, &s0, &mut bc).unwrap();
        for i in 0..g.n {
            assert!((s1.v[i] - v).abs() <= 1e-13 && (s1.u[i] - u).abs() <= 1e-13 && (s1.p[i] - p).abs() <= 1e-13);
        }
    }

    #[test]
    fn bump_norm_matches_closed_form() {
        let m = model();
        let g = LineGrid::new(&m, 40.0, 0.01).unwrap();
        let bump = BumpSpec {
            h1_norm: 0.01,
            width: 1.5,
            center: 3.0,
            ..BumpSpec::default()
        };
        let amp = bump.amplitudes();
        let x = g.nodes();
        let mut total = 0.0;
        for a in amp {
            let f: Vec<f64> = x.iter().map(|&x| a * bump.profile(x)).collect();
            let fx = norms::derivative(&f, g.dx);
            total += norms::l2_squared(&f, g.dx) + norms::l2_squared(&fx, g.dx);
        }
        assert!((total.sqrt() - 0.01).abs() < 1e-6);
    }

    #[test]
    fn run_schedule_hits_requested_steps() {
        let m = model();
        let g = LineGrid::new(&m, 1.0, 0.1).unwrap();
        let p = m.pressure_raw(1.0);
        let mut s = LineSolver::new(&m, g, &constant_state(&g, 1.0, 0.0, p)).unwrap();
        let mut bc = ConstantBoundary {
            left: (1.0, 0.0, p),
            right: (1.0, 0.0, p),
        };
        let mut seen = vec![];
        s.run(&mut bc, 10, &[0, 3, 3, 7, 10, 12], |st| {
            seen.push(st.step);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 3, 7, 10]);
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        let m = model();
        let g = LineGrid::new(&m, 1.0, 0.1).unwrap();
        let p = m.pressure_raw(1.0);
        let mut s = LineSolver::new(&m, g, &constant_state(&g, 1.0, 0.0, p)).unwrap();
        // ghost with a huge velocity drives the strain out of range
        let mut bc = ConstantBoundary {
            left: (1.0, 50.0, p),
            right: (1.0, 0.0, p),
        };
        let err = s.run(&mut bc, 100, &[], |_| Ok(())).unwrap_err();
        assert!(matches!(err, LabError::BlowUp { .. }));
    }
}
