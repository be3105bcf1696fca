//! Weighted ansatz between the two periodic far fields and its residuals
//! with respect to the p-system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::fit::{decay_fit, FitModel, FitOutcome};
use crate::diagnostics::norms;
use crate::error::{LabError, Result};
use crate::material::MaterialModel;
use crate::periodic::PeriodicSample;
use crate::rarefaction::{RarefactionPoint, RiemannEndStates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// V = v_l (1 - g1) + v_r g1: the left data dominates at -infinity
    Corrected,
    /// V = v_l g1 + v_r (1 - g1): the weights swapped, so the right data dominates at -infinity
    Mirrored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Numeric,
}

/// One weight with its derivatives up to second order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightJet {
    pub g: f64,
    pub x: f64,
    pub t: f64,
    pub xx: f64,
    pub xt: f64,
    pub tt: f64,
}

impl WeightJet {
    fn constant(g: f64) -> Self {
        Self {
            g,
            ..Default::default()
        }
    }

    fn complement(&self) -> Self {
        Self {
            g: 1.0 - self.g,
            x: -self.x,
            t: -self.t,
            xx: -self.xx,
            xt: -self.xt,
            tt: -self.tt,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightPair {
    /// (V^r - v_l) / (v_r - v_l)
    pub g1: WeightJet,
    /// (U^r - u_l) / (u_r - u_l)
    pub g2: WeightJet,
}

pub fn weights(r: &RarefactionPoint, states: &RiemannEndStates) -> Result<WeightPair> {
    let dv = states.v_r - states.v_l;
    let du = states.u_r - states.u_l;
    if dv == 0.0 || du == 0.0 {
        return Err(LabError::DegenerateWave(
            "zero wave strength; use the constant-weight ansatz".into(),
        ));
    }
    Ok(WeightPair {
        g1: WeightJet {
            g: (r.v - states.v_l) / dv,
            x: r.v_x / dv,
            t: r.v_t / dv,
            xx: r.v_xx / dv,
            xt: r.v_xt / dv,
            tt: r.v_tt / dv,
        },
        g2: WeightJet {
            g: (r.u - states.u_l) / du,
            x: r.u_x / du,
            t: r.u_t / du,
            xx: r.u_xx / du,
            xt: r.u_xt / du,
            tt: r.u_tt / du,
        },
    })
}

/// Weights used when the wave strength is zero; the two far fields are
/// averaged, which reduces to either one when they coincide.
pub fn constant_weights() -> WeightPair {
    WeightPair {
        g1: WeightJet::constant(0.5),
        g2: WeightJet::constant(0.5),
    }
}

/// Ansatz values, derivatives and residuals at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnsatzPoint {
    pub v: f64,
    pub u: f64,
    pub p: f64,
    pub v_x: f64,
    pub u_x: f64,
    pub v_t: f64,
    pub u_t: f64,
    pub v_xx: f64,
    pub u_xx: f64,
    pub v_xt: f64,
    pub u_tt: f64,
    /// residuals from the closed-form term expansion
    pub h1: f64,
    pub h2: f64,
    /// residuals from direct differentiation of the ansatz
    pub h1_direct: f64,
    pub h2_direct: f64,
    pub h1_x: f64,
    pub h2_t: f64,
    /// [p_R'(V) - p_R'(V^r)]_t V_x
    pub w1: f64,
    /// (v_r - v_l)_t g2_x
    pub w2: f64,
    pub g1: f64,
    pub g2: f64,
    /// V - V^r - [(v_l - v_l_bar)(1 - g1) + (v_r - v_r_bar) g1]
    pub s1_residual: f64,
    /// U - U^r - [(u_l - u_l_bar)(1 - g2) + (u_r - u_r_bar) g2]
    pub s2_residual: f64,
    /// |V - (v_l g1 + v_r (1 - g1))| + |U - (u_l g2 + u_r (1 - g2))|
    pub mirrored_residual: f64,
}

/// Left weights (on v_l, u_l) for the chosen orientation.
fn left_weights(w: &WeightPair, orientation: Orientation) -> (WeightJet, WeightJet) {
    match orientation {
        Orientation::Corrected => (w.g1.complement(), w.g2.complement()),
        Orientation::Mirrored => (w.g1, w.g2),
    }
}

/// f = a f_l + (1 - a) f_r and its derivatives.
struct Blend {
    f: f64,
    x: f64,
    t: f64,
    xx: f64,
    xt: f64,
    tt: f64,
}

fn blend(a: &WeightJet, l: [f64; 6], r: [f64; 6]) -> Blend {
    // l, r: value, x, t, xx, xt, tt
    let d = [l[0] - r[0], l[1] - r[1], l[2] - r[2]];
    let b = 1.0 - a.g;
    Blend {
        f: a.g * l[0] + b * r[0],
        x: a.g * l[1] + b * r[1] + a.x * d[0],
        t: a.g * l[2] + b * r[2] + a.t * d[0],
        xx: a.g * l[3] + b * r[3] + 2.0 * a.x * d[1] + a.xx * d[0],
        xt: a.g * l[4] + b * r[4] + a.x * d[2] + a.t * d[1] + a.xt * d[0],
        tt: a.g * l[5] + b * r[5] + 2.0 * a.t * d[2] + a.tt * d[0],
    }
}

/// Assembles the ansatz and evaluates its residuals at one point.
pub fn assemble_point(
    model: &MaterialModel,
    orientation: Orientation,
    states: &RiemannEndStates,
    r: &RarefactionPoint,
    w: &WeightPair,
    left: &PeriodicSample,
    right: &PeriodicSample,
) -> Result<AnsatzPoint> {
    if left.order < 2 || right.order < 2 {
        return Err(LabError::Capability(format!(
            "ansatz residuals need x-derivatives to order 2, samples carry {} and {}",
            left.order, right.order
        )));
    }
    let (lam, mu) = left_weights(w, orientation);
    // v_tt is never needed; zero placeholders keep the blend signature uniform
    let vb = blend(
        &lam,
        [left.v, left.v_x, left.v_t, left.v_xx, left.v_xt, 0.0],
        [right.v, right.v_x, right.v_t, right.v_xx, right.v_xt, 0.0],
    );
    let ub = blend(
        &mu,
        [left.u, left.u_x, left.u_t, left.u_xx, 0.0, left.u_tt],
        [right.u, right.u_x, right.u_t, right.u_xx, 0.0, right.u_tt],
    );
    let v = vb.f;
    model.check_domain(v)?;
    let p1 = model.dpressure_raw(v, 1);
    let p2 = model.dpressure_raw(v, 2);

    let h1_direct = vb.t - ub.x;
    let h2_direct = ub.t + p1 * vb.x;
    let h1_x = vb.xt - ub.xx;
    let h2_t = ub.tt + p2 * vb.t * vb.x + p1 * vb.xt;

    // closed-form expansion in terms of periodic deviations
    let (a_l, a_r) = (left.v - states.v_l, right.v - states.v_r);
    let (b_l, b_r) = (left.u - states.u_l, right.u - states.u_r);
    let pl1 = model.dpressure_raw(left.v, 1);
    let pr1 = model.dpressure_raw(right.v, 1);
    let rho_lx = left.p_x - pl1 * left.v_x;
    let rho_rx = right.p_x - pr1 * right.v_x;
    let prr1 = model.dpressure_raw(r.v, 1);
    let sign = match orientation {
        Orientation::Corrected => 1.0,
        Orientation::Mirrored => -1.0,
    };
    let h1 = (left.u_x - right.u_x) * (lam.g - mu.g) + (a_l - a_r) * lam.t - (b_l - b_r) * mu.x;
    let h2 = (p1 - pl1) * left.v_x * lam.g
        + (p1 - pr1) * right.v_x * (1.0 - lam.g)
        + (pl1 * left.v_x - pr1 * right.v_x) * (lam.g - mu.g)
        - rho_lx * mu.g
        - rho_rx * (1.0 - mu.g)
        + (b_l - b_r) * mu.t
        + p1 * (a_l - a_r) * lam.x
        + sign * (p1 - prr1) * r.v_x;

    let w1 = (p2 * vb.t - model.dpressure_raw(r.v, 2) * r.v_t) * vb.x;
    let w2 = (right.v_t - left.v_t) * w.g2.x;

    let g1 = w.g1.g;
    let g2 = w.g2.g;
    let s1_residual = v - r.v - (a_l * (1.0 - g1) + a_r * g1);
    let s2_residual = ub.f - r.u - (b_l * (1.0 - g2) + b_r * g2);
    let mirrored_residual =
        (v - (left.v * g1 + right.v * (1.0 - g1))).abs() + (ub.f - (left.u * g2 + right.u * (1.0 - g2))).abs();

    Ok(AnsatzPoint {
        v,
        u: ub.f,
        p: model.pressure_raw(v),
        v_x: vb.x,
        u_x: ub.x,
        v_t: vb.t,
        u_t: ub.t,
        v_xx: vb.xx,
        u_xx: ub.xx,
        v_xt: vb.xt,
        u_tt: ub.tt,
        h1,
        h2,
        h1_direct,
        h2_direct,
        h1_x,
        h2_t,
        w1,
        w2,
        g1,
        g2,
        s1_residual,
        s2_residual,
        mirrored_residual,
    })
}

/// Ansatz on a uniform grid at one time, stored column-wise.
#[derive(Debug, Clone, Default)]
pub struct AnsatzFrame {
    pub t: f64,
    pub x: Vec<f64>,
    pub dx: f64,
    pub provenance: Option<Provenance>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub v_x: Vec<f64>,
    pub u_x: Vec<f64>,
    pub v_t: Vec<f64>,
    pub u_t: Vec<f64>,
    pub v_xx: Vec<f64>,
    pub u_xx: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h1_x: Vec<f64>,
    pub h2_t: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// smooth rarefaction on the same grid
    pub vr: Vec<f64>,
    pub ur: Vec<f64>,
    pub vr_t: Vec<f64>,
    pub ur_x: Vec<f64>,
    /// largest |h_expansion - h_direct| over the grid
    pub expansion_gap: f64,
    pub max_s1: f64,
    pub max_s2: f64,
    pub max_mirrored: f64,
}

/// Builds one frame from point-wise evaluators of the rarefaction and the
/// left/right periodic solutions.
#[allow(clippy::too_many_arguments)]
pub fn assemble_frame<R, L, Q>(
    model: &MaterialModel,
    orientation: Orientation,
    states: &RiemannEndStates,
    x: &[f64],
    t: f64,
    rar: R,
    left: L,
    right: Q,
) -> Result<AnsatzFrame>
where
    R: Fn(f64) -> RarefactionPoint + Sync,
    L: Fn(f64) -> PeriodicSample + Sync,
    Q: Fn(f64) -> PeriodicSample + Sync,
{
    let dx = if x.len() > 1 { x[1] - x[0] } else { 0.0 };
    let degenerate = states.is_degenerate();
    let pts: Vec<(RarefactionPoint, AnsatzPoint)> = x
        .par_iter()
        .map(|&xi| {
            let r = rar(xi);
            let w = if degenerate { constant_weights() } else { weights(&r, states)? };
            let a = assemble_point(model, orientation, states, &r, &w, &left(xi), &right(xi))?;
            Ok((r, a))
        })
        .collect::<Result<_>>()?;
    let col = |f: &dyn Fn(&AnsatzPoint) -> f64| -> Vec<f64> { pts.iter().map(|(_, a)| f(a)).collect() };
    let mut frame = AnsatzFrame {
        t,
        x: x.to_vec(),
        dx,
        provenance: Some(Provenance::Analytic),
        v: col(&|a| a.v),
        u: col(&|a| a.u),
        p: col(&|a| a.p),
        v_x: col(&|a| a.v_x),
        u_x: col(&|a| a.u_x),
        v_t: col(&|a| a.v_t),
        u_t: col(&|a| a.u_t),
        v_xx: col(&|a| a.v_xx),
        u_xx: col(&|a| a.u_xx),
        h1: col(&|a| a.h1),
        h2: col(&|a| a.h2),
        h1_x: col(&|a| a.h1_x),
        h2_t: col(&|a| a.h2_t),
        w1: col(&|a| a.w1),
        w2: col(&|a| a.w2),
        g1: col(&|a| a.g1),
        g2: col(&|a| a.g2),
        vr: pts.iter().map(|(r, _)| r.v).collect(),
        ur: pts.iter().map(|(r, _)| r.u).collect(),
        vr_t: pts.iter().map(|(r, _)| r.v_t).collect(),
        ur_x: pts.iter().map(|(r, _)| r.u_x).collect(),
        ..Default::default()
    };
    for (_, a) in &pts {
        frame.expansion_gap = frame
            .expansion_gap
            .max((a.h1 - a.h1_direct).abs())
            .max((a.h2 - a.h2_direct).abs());
        frame.max_s1 = frame.max_s1.max(a.s1_residual.abs());
        frame.max_s2 = frame.max_s2.max(a.s2_residual.abs());
        frame.max_mirrored = frame.max_mirrored.max(a.mirrored_residual);
    }
    Ok(frame)
}

impl AnsatzFrame {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// t, x, V, U, P, h1, h2, h1_x, h2_t rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "V", "U", "P", "h1", "h2", "h1_x", "h2_t"])?;
        for i in 0..self.len() {
            w.write_record(&[
                self.t.to_string(),
                self.x[i].to_string(),
                self.v[i].to_string(),
                self.u[i].to_string(),
                self.p[i].to_string(),
                self.h1[i].to_string(),
                self.h2[i].to_string(),
                self.h1_x[i].to_string(),
                self.h2_t[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residuals by central time differences of three frames; x-derivatives
/// come from the middle frame.
pub fn residual_numeric(
    model: &MaterialModel,
    prev: &AnsatzFrame,
    cur: &AnsatzFrame,
    next: &AnsatzFrame,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = cur.len();
    if prev.len() != n || next.len() != n || prev.x.first() != cur.x.first() || next.x.first() != cur.x.first() {
        return Err(LabError::Shape("residual frames are on different grids".into()));
    }
    let (d1, d2) = (cur.t - prev.t, next.t - cur.t);
    if !(d1 > 0.0) || (d1 - d2).abs() > 1e-9 * d1 {
        return Err(LabError::Shape(format!("frames are not uniformly spaced in time ({d1}, {d2})")));
    }
    let inv = 1.0 / (next.t - prev.t);
    let mut h1 = Vec::with_capacity(n);
    let mut h2 = Vec::with_capacity(n);
    for i in 0..n {
        let vt = (next.v[i] - prev.v[i]) * inv;
        let ut = (next.u[i] - prev.u[i]) * inv;
        h1.push(vt - cur.u_x[i]);
        h2.push(ut + model.dpressure_raw(cur.v[i], 1) * cur.v_x[i]);
    }
    Ok((h1, h2))
}

/// Norms tracked by the residual decay check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualNorms {
    pub t: f64,
    pub h1_l1: f64,
    pub h1_h1: f64,
    pub h1x_l2: f64,
    pub h2_l2: f64,
    pub h2t_l2: f64,
    pub w1_l2: f64,
    pub w2_l2: f64,
}

impl ResidualNorms {
    pub fn from_frame(f: &AnsatzFrame) -> Self {
        let dx = f.dx;
        Self {
            t: f.t,
            h1_l1: norms::l1(&f.h1, dx),
            h1_h1: (norms::l2_squared(&f.h1, dx) + norms::l2_squared(&f.h1_x, dx)).sqrt(),
            h1x_l2: norms::l2(&f.h1_x, dx),
            h2_l2: norms::l2(&f.h2, dx),
            h2t_l2: norms::l2(&f.h2_t, dx),
            w1_l2: norms::l2(&f.w1, dx),
            w2_l2: norms::l2(&f.w2, dx),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub outcome: FitOutcome,
    /// |alpha / reference - 1|, when a reference rate was supplied
    pub relative_gap: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub fits: Vec<NamedFit>,
    pub reference_rate: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Exponential fits of the residual norms. With a reference rate each fitted
/// rate must lie within `tolerance` of it; otherwise only positivity is required.
pub fn check_residual_decay(series: &[ResidualNorms], reference_rate: Option<f64>, tolerance: f64) -> Result<DecayReport> {
    if series.len() < crate::diagnostics::fit::MIN_SAMPLES {
        return Err(LabError::InvalidArgument(format!(
            "{} residual frames; at least {} needed",
            series.len(),
            crate::diagnostics::fit::MIN_SAMPLES
        )));
    }
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let columns: [(&str, fn(&ResidualNorms) -> f64); 4] = [
        ("h1_L1", |s| s.h1_l1),
        ("h1_H1", |s| s.h1_h1),
        ("h2_L2", |s| s.h2_l2),
        ("h2t_L2", |s| s.h2t_l2),
    ];
    let mut fits = Vec::new();
    for (name, get) in columns {
        let vals: Vec<f64> = series.iter().map(get).collect();
        let outcome = decay_fit(&t, &vals, FitModel::Exponential)?;
        let (gap, passed) = match (&outcome, reference_rate) {
            (FitOutcome::Fitted(f), Some(r)) => {
                let g = (f.rate / r - 1.0).abs();
                (Some(g), f.rate > 0.0 && g <= tolerance)
            }
            (FitOutcome::Fitted(f), None) => (None, f.rate > 0.0),
            (FitOutcome::DecayedToFloor { .. }, _) => (None, true),
        };
        fits.push(NamedFit {
            name: name.to_string(),
            outcome,
            relative_gap: gap,
            passed,
        });
    }
    let passed = fits.iter().all(|f| f.passed);
    Ok(DecayReport {
        fits,
        reference_rate,
        tolerance,
        passed,
    })
}
