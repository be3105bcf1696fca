//! Residual of the damped wave equation satisfied by psi = u - U:
//!
//! psi_tt - E psi_xx + psi_t - A_x - B_x = -h2_t - h2 + (p_R'(V) h1)_x
//!
//! with A = p_R(V) - p_R(v) and B = (E + p_R'(V)) U_x. Every term is evaluated
//! from stored snapshots (central differences) and the analytic ansatz frame.

use serde::Serialize;

use super::norms;
use crate::ansatz::AnsatzFrame;
use crate::error::{LabError, Result};
use crate::linesolver::FieldState;
use crate::material::MaterialModel;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WaveFormRow {
    pub t: f64,
    /// ||LHS - RHS||_L2 over interior nodes
    pub residual: f64,
    /// ||psi_tt||_L2, the size of the leading term
    pub scale: f64,
}

/// `snaps` holds (state, ansatz) at t - h, t, t + h on one grid.
pub fn wave_form_residual(model: &MaterialModel, snaps: &[(FieldState, AnsatzFrame)]) -> Result<WaveFormRow> {
    if snaps.len() != 3 {
        return Err(LabError::Shape(format!("wave-form residual needs 3 snapshots, got {}", snaps.len())));
    }
    let (s0, a0) = (&snaps[0].0, &snaps[0].1);
    let (s1, a1) = (&snaps[1].0, &snaps[1].1);
    let (s2, a2) = (&snaps[2].0, &snaps[2].1);
    let n = a1.len();
    if n < 3 || [s0.v.len(), s1.v.len(), s2.v.len(), a0.len(), a2.len()].iter().any(|&m| m != n) {
        return Err(LabError::Shape("wave-form snapshots are on different grids".into()));
    }
    let (h_lo, h_hi) = (s1.t - s0.t, s2.t - s1.t);
    if !(h_lo > 0.0) || (h_lo - h_hi).abs() > 1e-9 * h_lo {
        return Err(LabError::Shape(format!("wave-form snapshots are not evenly spaced ({h_lo}, {h_hi})")));
    }
    let h = 0.5 * (h_lo + h_hi);
    let dx = a1.dx;
    let e = model.young;
    let psi = |s: &FieldState, a: &AnsatzFrame, i: usize| s.u[i] - a.u[i];
    let mut res = vec![0.0; n - 2];
    let mut lead = vec![0.0; n - 2];
    for i in 1..n - 1 {
        let p_m = psi(s0, a0, i);
        let p_0 = psi(s1, a1, i);
        let p_p = psi(s2, a2, i);
        let psi_tt = (p_p - 2.0 * p_0 + p_m) / (h * h);
        let psi_t = (p_p - p_m) / (2.0 * h);
        let psi_xx = (psi(s1, a1, i + 1) - 2.0 * p_0 + psi(s1, a1, i - 1)) / (dx * dx);
        let vb = a1.v[i];
        let v = s1.v[i];
        let v_x = (s1.v[i + 1] - s1.v[i - 1]) / (2.0 * dx);
        let p1_bg = model.dpressure_raw(vb, 1);
        let p2_bg = model.dpressure_raw(vb, 2);
        let a_x = p1_bg * a1.v_x[i] - model.dpressure_raw(v, 1) * v_x;
        let b_x = p2_bg * a1.v_x[i] * a1.u_x[i] + (e + p1_bg) * a1.u_xx[i];
        let lhs = psi_tt - e * psi_xx + psi_t - a_x - b_x;
        let rhs = -a1.h2_t[i] - a1.h2[i] + p2_bg * a1.v_x[i] * a1.h1[i] + p1_bg * a1.h1_x[i];
        res[i - 1] = lhs - rhs;
        lead[i - 1] = psi_tt;
    }
    Ok(WaveFormRow {
        t: s1.t,
        residual: norms::l2(&res, dx),
        scale: norms::l2(&lead, dx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_errors() {
        let m = MaterialModel::default_power_law();
        assert!(matches!(wave_form_residual(&m, &[]), Err(LabError::Shape(_))));
    }

    #[test]
    fn zero_perturbation_constant_state() {
        let m = MaterialModel::default_power_law();
        let n = 20;
        let frame = |t: f64| {
            let a = AnsatzFrame {
                t,
                x: (0..n).map(|i| i as f64 * 0.1).collect(),
                dx: 0.1,
                v: vec![1.1; n],
                u: vec![0.3; n],
                p: vec![m.pressure_raw(1.1); n],
                v_x: vec![0.0; n],
                u_x: vec![0.0; n],
                u_xx: vec![0.0; n],
                h1: vec![0.0; n],
                h2: vec![0.0; n],
                h1_x: vec![0.0; n],
                h2_t: vec![0.0; n],
                ..Default::default()
            };
            let s = FieldState {
                t,
                step: 0,
                v: a.v.clone(),
                u: a.u.clone(),
                p: a.p.clone(),
            };
            (s, a)
        };
        let r = wave_form_residual(&m, &[frame(0.0), frame(0.1), frame(0.2)]).unwrap();
        assert_eq!(r.residual, 0.0);
    }
}
