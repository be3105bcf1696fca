//! Unit-CFL characteristic kernel shared by the cell and line solvers.
//!
//! The principal part of the relaxation system transports r+ = p + sqrt(E) u
//! right, r- = p - sqrt(E) u left, and z = p + E v not at all, each at a
//! constant speed. With dt = dx / sqrt(E) the transport is an index shift.
//! The source only moves p, so during a source substep v and u are frozen
//! and p relaxes exponentially toward p_R(v).

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::material::{from_invariants, riemann_invariants, Invariants, MaterialModel};

/// Below this many nodes the source sweep stays on the calling thread.
const PAR_THRESHOLD: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantField {
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub z: Vec<f64>,
}

impl InvariantField {
    pub fn from_fields(young: f64, v: &[f64], u: &[f64], p: &[f64]) -> Self {
        let n = v.len();
        let mut out = Self {
            r_plus: Vec::with_capacity(n),
            r_minus: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
        };
        for i in 0..n {
            let inv = riemann_invariants(young, v[i], u[i], p[i]);
            out.r_plus.push(inv.r_plus);
            out.r_minus.push(inv.r_minus);
            out.z.push(inv.z);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    #[inline]
    pub fn node(&self, young: f64, i: usize) -> (f64, f64, f64) {
        from_invariants(
            young,
            Invariants {
                r_plus: self.r_plus[i],
                r_minus: self.r_minus[i],
                z: self.z[i],
            },
        )
    }

    pub fn to_fields(&self, young: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let (mut v, mut u, mut p) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (a, b, c) = self.node(young, i);
            v.push(a);
            u.push(b);
            p.push(c);
        }
        (v, u, p)
    }
}

/// Exact source flow over a substep with decay factor `q = exp(-h / tau)`.
#[inline]
pub fn relax_invariants(model: &MaterialModel, inv: &mut Invariants, q: f64) {
    let p = 0.5 * (inv.r_plus + inv.r_minus);
    let v = (inv.z - p) / model.young;
    let pe = model.pressure_raw(v);
    let d = (pe + (p - pe) * q) - p;
    inv.r_plus += d;
    inv.r_minus += d;
    inv.z += d;
}

pub fn relax_field(model: &MaterialModel, f: &mut InvariantField, q: f64) {
    let young = model.young;
    let body = |((rp, rm), z): ((&mut f64, &mut f64), &mut f64)| {
        let p = 0.5 * (*rp + *rm);
        let v = (*z - p) / young;
        let pe = model.pressure_raw(v);
        let d = (pe + (p - pe) * q) - p;
        *rp += d;
        *rm += d;
        *z += d;
    };
    if f.len() >= PAR_THRESHOLD {
        f.r_plus
            .par_iter_mut()
            .zip(f.r_minus.par_iter_mut())
            .zip(f.z.par_iter_mut())
            .for_each(body);
    } else {
        f.r_plus
            .iter_mut()
            .zip(f.r_minus.iter_mut())
            .zip(f.z.iter_mut())
            .for_each(body);
    }
}

/// Periodic transport by one node.
pub fn shift_periodic(f: &mut InvariantField) {
    f.r_plus.rotate_right(1);
    f.r_minus.rotate_left(1);
}

/// Open-boundary transport by one node; the entering values come from ghosts
/// at x_0 - dx (r+) and x_{n-1} + dx (r-).
pub fn shift_open(f: &mut InvariantField, left_r_plus: f64, right_r_minus: f64) {
    let n = f.len();
    if n == 0 {
        return;
    }
    f.r_plus.copy_within(0..n - 1, 1);
    f.r_plus[0] = left_r_plus;
    f.r_minus.copy_within(1..n, 0);
    f.r_minus[n - 1] = right_r_minus;
}

/// Strain range of the field; errors on the first inadmissible or
/// non-finite node.
pub fn check_field(model: &MaterialModel, f: &InvariantField, time: f64) -> Result<(f64, f64)> {
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..f.len() {
        let (v, u, p) = f.node(model.young, i);
        if !(v.is_finite() && u.is_finite() && p.is_finite()) {
            return Err(LabError::Instability { time, node: i });
        }
        if !model.contains(v) {
            return Err(LabError::BlowUp {
                time,
                node: i,
                value: v,
                lo: model.strain_lo,
                hi: model.strain_hi,
            });
        }
        range = (range.0.min(v), range.1.max(v));
    }
    Ok(range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relaxation_decays_exactly() {
        let m = MaterialModel::default_power_law();
        let (v, u, eta) = (1.2, 0.3, 0.05);
        let mut inv = riemann_invariants(m.young, v, u, m.pressure_raw(v) + eta);
        let q = (-0.37f64).exp();
        relax_invariants(&m, &mut inv, q);
        let (v2, u2, p2) = from_invariants(m.young, inv);
        assert!((v2 - v).abs() < 1e-15 && (u2 - u).abs() < 1e-15);
        assert!((p2 - m.pressure_raw(v) - eta * q).abs() < 1e-15);
    }

    #[test]
    fn shifts_move_invariants() {
        let mut f = InvariantField {
            r_plus: vec![1.0, 2.0, 3.0],
            r_minus: vec![4.0, 5.0, 6.0],
            z: vec![7.0, 8.0, 9.0],
        };
        let mut g = f.clone();
        shift_periodic(&mut f);
        assert_eq!(f.r_plus, vec![3.0, 1.0, 2.0]);
        assert_eq!(f.r_minus, vec![5.0, 6.0, 4.0]);
        shift_open(&mut g, -1.0, -2.0);
        assert_eq!(g.r_plus, vec![-1.0, 1.0, 2.0]);
        assert_eq!(g.r_minus, vec![5.0, 6.0, -2.0]);
        assert_eq!(g.z, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn field_check_reports_offending_node() {
        let m = MaterialModel::default_power_law();
        let v = [1.0, 3.0];
        let f = InvariantField::from_fields(m.young, &v, &[0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(check_field(&m, &f, 2.0), Err(LabError::BlowUp { node: 1, .. })));
        let g = InvariantField::from_fields(m.young, &[1.0, f64::NAN], &[0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(check_field(&m, &g, 2.0), Err(LabError::Instability { node: 1, .. })));
    }
}
