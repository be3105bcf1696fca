//! Burgers transport of the first eigenvalue and the smooth 1-rarefaction
//! built from it.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::fit::{decay_fit, FitModel, FitOutcome};
use crate::diagnostics::norms;
use crate::error::{LabError, Result};
use crate::material::MaterialModel;
use crate::quadrature::{gauss_kronrod_15, integrate};
use crate::roots::{newton_bisect, RootOptions};

const COMPAT_TOL: f64 = 1e-12;

/// Far-field constant states joined by a 1-rarefaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannEndStates {
    pub v_l: f64,
    pub u_l: f64,
    pub v_r: f64,
    pub u_r: f64,
    pub delta: f64,
}

/// -∫_{a}^{b} lambda_1(s) ds
pub fn velocity_jump(model: &MaterialModel, a: f64, b: f64) -> Result<f64> {
    model.check_domain(a)?;
    model.check_domain(b)?;
    let r = integrate(|s| model.lambda1_raw(s), a, b, 1e-14, 4000)?;
    Ok(-r.value)
}

impl RiemannEndStates {
    /// Validates fully specified end states. Identical states are accepted as
    /// a degenerate (delta = 0) wave.
    pub fn new(model: &MaterialModel, v_l: f64, u_l: f64, v_r: f64, u_r: f64) -> Result<Self> {
        for v in [v_l, v_r] {
            if !(v > model.strain_lo && v < model.strain_hi) {
                return Err(LabError::Domain {
                    value: v,
                    lo: model.strain_lo,
                    hi: model.strain_hi,
                });
            }
        }
        let delta = (v_r - v_l).abs() + (u_r - u_l).abs();
        if delta == 0.0 {
            return Ok(Self { v_l, u_l, v_r, u_r, delta });
        }
        if !(u_l < u_r) {
            return Err(LabError::NotRarefaction(format!("need u_l < u_r, got {u_l} >= {u_r}")));
        }
        let jump = velocity_jump(model, v_l, v_r)?;
        let mismatch = (u_r - u_l - jump).abs();
        if mismatch > 1e-9 * (1.0 + jump.abs()) {
            return Err(LabError::NotRarefaction(format!(
                "end states are not on the 1-rarefaction curve (velocity jump {}, expected {jump})",
                u_r - u_l
            )));
        }
        Ok(Self { v_l, u_l, v_r, u_r, delta })
    }

    /// Right velocity fixed by the compatibility integral.
    pub fn on_rarefaction_curve(model: &MaterialModel, v_l: f64, u_l: f64, v_r: f64) -> Result<Self> {
        if v_r < v_l {
            return Err(LabError::NotRarefaction(format!(
                "1-rarefaction needs v_r >= v_l, got {v_r} < {v_l}"
            )));
        }
        let u_r = u_l + velocity_jump(model, v_l, v_r)?;
        Self::new(model, v_l, u_l, v_r, u_r)
    }

    /// End state on the rarefaction curve from (v_l, u_l) with the given strength.
    pub fn with_strength(model: &MaterialModel, v_l: f64, u_l: f64, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return Err(LabError::InvalidArgument(format!("strength must be nonnegative, got {delta}")));
        }
        if delta == 0.0 {
            return Self::new(model, v_l, u_l, v_l, u_l);
        }
        model.check_domain(v_l)?;
        // delta(v_r) = (v_r - v_l) + jump(v_r) is increasing with slope 1 + |lambda_1|
        let hi = model.strain_hi - 1e-9;
        let f = |vr: f64| {
            let jump = velocity_jump(model, v_l, vr).unwrap_or(f64::NAN);
            ((vr - v_l) + jump - delta, 1.0 - model.lambda1_raw(vr))
        };
        let v_r = newton_bisect(
            f,
            v_l,
            hi,
            Some(v_l + delta / (1.0 - model.lambda1_raw(v_l))),
            RootOptions {
                xtol: 1e-14,
                max_iter: 200,
            },
        )
        .map_err(|_| LabError::InvalidArgument(format!("strength {delta} exceeds the admissible strain interval")))?;
        Self::on_rarefaction_curve(model, v_l, u_l, v_r)
    }

    pub fn is_degenerate(&self) -> bool {
        self.delta == 0.0
    }
}

/// Burgers solution with data w0 = w_hat + w_tilde tanh(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurgersWave {
    pub w_l: f64,
    pub w_r: f64,
    pub w_hat: f64,
    pub w_tilde: f64,
}

/// Value and derivatives of the Burgers solution at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct BurgersPoint {
    /// foot of the characteristic through (x, t)
    pub xi: f64,
    pub w: f64,
    pub w_x: f64,
    pub w_t: f64,
    pub w_xx: f64,
    pub w_xt: f64,
    pub w_tt: f64,
}

pub fn make_burgers(model: &MaterialModel, states: &RiemannEndStates) -> Result<BurgersWave> {
    let w_l = model.lambda(states.v_l, crate::material::Branch::One)?;
    let w_r = model.lambda(states.v_r, crate::material::Branch::One)?;
    if w_l > w_r {
        return Err(LabError::NotRarefaction(format!(
            "characteristic speeds decrease across the wave ({w_l} > {w_r})"
        )));
    }
    Ok(BurgersWave::new(w_l, w_r))
}

/// sech^2 without overflow for large |x|.
#[inline]
fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

impl BurgersWave {
    pub fn new(w_l: f64, w_r: f64) -> Self {
        Self {
            w_l,
            w_r,
            w_hat: 0.5 * (w_r + w_l),
            w_tilde: 0.5 * (w_r - w_l),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.w_tilde == 0.0
    }

    #[inline]
    pub fn initial(&self, x: f64) -> f64 {
        self.w_hat + self.w_tilde * x.tanh()
    }

    /// Root of xi + w0(xi) t = x, bracketed by the plateau speeds.
    pub fn foot(&self, x: f64, t: f64) -> f64 {
        if t == 0.0 || self.is_constant() {
            return x - self.w_hat * t;
        }
        let lo = x - t * self.w_r;
        let hi = x - t * self.w_l;
        // inside the fan the linearized guess is already close
        let guess = if self.w_tilde * t > 1.0 {
            let z = ((x / t - self.w_hat) / self.w_tilde).clamp(-0.999_999, 0.999_999);
            z.atanh()
        } else {
            x - t * self.w_hat
        };
        let f = |xi: f64| {
            (
                xi + t * self.initial(xi) - x,
                1.0 + t * self.w_tilde * sech2(xi),
            )
        };
        // on the plateaus the residual at the near endpoint is pure rounding
        if f(lo).0 >= 0.0 {
            return lo;
        }
        if f(hi).0 <= 0.0 {
            return hi;
        }
        newton_bisect(f, lo, hi, Some(guess.clamp(lo, hi)), RootOptions { xtol: 1e-13, max_iter: 200 })
            .expect("Burgers characteristic foot is always bracketed")
    }

    pub fn eval(&self, x: f64, t: f64) -> BurgersPoint {
        let xi = self.foot(x, t);
        let th = xi.tanh();
        let s = self.w_tilde * sech2(xi);
        let ds = -2.0 * s * th;
        let w = self.w_hat + self.w_tilde * th;
        let j = 1.0 + t * s;
        let w_x = s / j;
        let w_xx = ds / (j * j * j);
        BurgersPoint {
            xi,
            w,
            w_x,
            w_t: -w * w_x,
            w_xx,
            w_xt: -w_x * w_x - w * w_xx,
            w_tt: 2.0 * w * w_x * w_x + w * w * w_xx,
        }
    }

    /// Self-similar fan w^r(x/t).
    pub fn exact_fan(&self, ratio: f64) -> f64 {
        ratio.clamp(self.w_l, self.w_r)
    }
}

/// Smooth rarefaction and its derivatives at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct RarefactionPoint {
    pub v: f64,
    pub u: f64,
    pub v_x: f64,
    pub u_x: f64,
    pub v_t: f64,
    pub u_t: f64,
    pub v_xx: f64,
    pub u_xx: f64,
    pub v_xt: f64,
    pub u_xt: f64,
    pub v_tt: f64,
    pub u_tt: f64,
    pub burgers: BurgersPoint,
}

/// (V^r, U^r): lambda_1(V^r) = w and U^r = u_l - ∫_{v_l}^{V^r} lambda_1.
#[derive(Debug, Clone)]
pub struct SmoothRarefaction {
    pub model: MaterialModel,
    pub states: RiemannEndStates,
    pub wave: BurgersWave,
    memo_v: Vec<f64>,
    // ∫_{v_l}^{memo_v[j]} lambda_1
    memo_int: Vec<f64>,
}

const MEMO_NODES: usize = 513;

impl SmoothRarefaction {
    pub fn new(model: &MaterialModel, states: RiemannEndStates) -> Result<Self> {
        let wave = make_burgers(model, &states)?;
        let (memo_v, memo_int) = if states.v_l == states.v_r {
            (vec![states.v_l], vec![0.0])
        } else {
            let n = MEMO_NODES;
            let vs: Vec<f64> = (0..n)
                .map(|j| states.v_l + (states.v_r - states.v_l) * j as f64 / (n - 1) as f64)
                .collect();
            let mut cum = vec![0.0; n];
            for j in 1..n {
                let seg = integrate(|s| model.lambda1_raw(s), vs[j - 1], vs[j], COMPAT_TOL / n as f64, 200)?;
                cum[j] = cum[j - 1] + seg.value;
            }
            (vs, cum)
        };
        Ok(Self {
            model: model.clone(),
            states,
            wave,
            memo_v,
            memo_int,
        })
    }

    /// U^r as a function of V^r.
    pub fn u_of_v(&self, v: f64) -> f64 {
        let n = self.memo_v.len();
        if n == 1 {
            return self.states.u_l;
        }
        let h = self.memo_v[1] - self.memo_v[0];
        let j = (((v - self.memo_v[0]) / h).round().max(0.0) as usize).min(n - 1);
        let (tail, _) = gauss_kronrod_15(&|s| self.model.lambda1_raw(s), self.memo_v[j], v);
        self.states.u_l - (self.memo_int[j] + tail)
    }

    fn invert(&self, w: f64) -> f64 {
        let (lo, hi) = (self.wave.w_l, self.wave.w_r);
        if w <= lo {
            return self.states.v_l;
        }
        if w >= hi {
            return self.states.v_r;
        }
        self.model
            .invert_lambda1(w)
            .expect("Burgers values stay within the plateau speeds")
    }

    pub fn eval(&self, x: f64, t: f64) -> RarefactionPoint {
        if self.wave.is_constant() {
            return RarefactionPoint {
                v: self.states.v_l,
                u: self.states.u_l,
                burgers: BurgersPoint {
                    xi: x,
                    w: self.wave.w_l,
                    ..Default::default()
                },
                ..Default::default()
            };
        }
        let b = self.wave.eval(x, t);
        let v = self.invert(b.w);
        let (dl, ddl) = self.model.dlambda1_raw(v);
        // m = dV/dw, m' = d^2V/dw^2
        let m = 1.0 / dl;
        let dm = -ddl * m * m * m;
        let v_x = m * b.w_x;
        let v_t = m * b.w_t;
        let v_xx = dm * b.w_x * b.w_x + m * b.w_xx;
        let v_xt = dm * b.w_x * b.w_t + m * b.w_xt;
        let v_tt = dm * b.w_t * b.w_t + m * b.w_tt;
        // U_x = -lambda_1(V) V_x, with lambda_1(V) recomputed from V
        let lam = self.model.lambda1_raw(v);
        RarefactionPoint {
            v,
            u: self.u_of_v(v),
            v_x,
            u_x: -lam * v_x,
            v_t,
            u_t: -lam * v_t,
            v_xx,
            u_xx: -dl * v_x * v_x - lam * v_xx,
            v_xt,
            u_xt: -dl * v_x * v_t - lam * v_xt,
            v_tt,
            u_tt: -dl * v_t * v_t - lam * v_tt,
            burgers: b,
        }
    }

    /// Exact Riemann fan (v^r, u^r)(x/t); the initial jump at t = 0.
    pub fn exact(&self, x: f64, t: f64) -> (f64, f64) {
        let (v_l, v_r) = (self.states.v_l, self.states.v_r);
        if self.wave.is_constant() {
            return (v_l, self.states.u_l);
        }
        if t <= 0.0 {
            return if x < 0.0 {
                (v_l, self.states.u_l)
            } else {
                (v_r, self.states.u_r)
            };
        }
        let w = self.wave.exact_fan(x / t);
        let v = self.invert(w);
        let u = if w <= self.wave.w_l {
            self.states.u_l
        } else if w >= self.wave.w_r {
            self.states.u_r
        } else {
            self.u_of_v(v)
        };
        (v, u)
    }

    pub fn eval_grid(&self, x: &[f64], t: f64) -> Vec<RarefactionPoint> {
        x.par_iter().map(|&xi| self.eval(xi, t)).collect()
    }
}

/// Settings for the rarefaction property sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RarefactionSweepOptions {
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    /// times for the sup-distance to the fan
    pub sup_times: Vec<f64>,
    /// times for the derivative decay fits
    pub decay_times: Vec<f64>,
    pub sup_ratio_times: (f64, f64),
    pub sup_ratio_max: f64,
    pub monotone_from: f64,
    pub exponent_tol: f64,
    pub second_exponent_tol: f64,
    pub residual_tol: f64,
    /// distance the grid must extend beyond the fan on each side
    pub margin: f64,
}

impl Default for RarefactionSweepOptions {
    fn default() -> Self {
        let mut sup_times = vec![1.0];
        sup_times.extend((5..=100).map(f64::from));
        Self {
            x_lo: -1480.0,
            x_hi: 40.0,
            dx: 0.05,
            sup_times,
            decay_times: (1..=100).map(|k| 10.0 * k as f64).collect(),
            sup_ratio_times: (1.0, 100.0),
            sup_ratio_max: 0.10,
            monotone_from: 5.0,
            exponent_tol: 0.15,
            second_exponent_tol: 0.20,
            residual_tol: 1e-10,
            margin: 20.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RarefactionSweepRow {
    pub t: f64,
    /// sup_x |V^r - v^r| + |U^r - u^r|; absent when t is not a sup time
    pub sup_diff: Option<f64>,
    /// ||(V^r_x, U^r_x)|| in L1, L2, Linf
    pub first: [f64; 3],
    /// ||(V^r_xx, U^r_xx)|| in L1, L2, Linf
    pub second: [f64; 3],
    pub min_vt: f64,
    pub nonpositive_vt: usize,
    /// nodes where V^r_x underflows to zero, excluded from the sign test
    pub underflow_nodes: usize,
    pub transport_ratio: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentCheck {
    pub quantity: String,
    pub expected: f64,
    pub fitted: Option<f64>,
    pub r2: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RarefactionSweepReport {
    pub rows: Vec<RarefactionSweepRow>,
    pub sup_ratio: f64,
    pub sup_monotone: bool,
    pub sup_passed: bool,
    pub exponents: Vec<ExponentCheck>,
    pub vt_positive: bool,
    pub transport_constant: f64,
    pub transport_bound: f64,
    pub transport_passed: bool,
    pub max_residual: f64,
    pub residual_passed: bool,
    pub passed: bool,
}

fn combined_norms(a: &[f64], b: &[f64], dx: f64) -> [f64; 3] {
    [
        norms::l1(a, dx) + norms::l1(b, dx),
        (norms::l2_squared(a, dx) + norms::l2_squared(b, dx)).sqrt(),
        norms::linf(a).max(norms::linf(b)),
    ]
}

fn exponent_check(quantity: &str, times: &[f64], values: &[f64], expected: f64, tol: f64) -> Result<ExponentCheck> {
    // the p = 1 prediction is a zero exponent, so the tolerance is absolute there
    let allowed = if expected == 0.0 { tol } else { tol * expected.abs() };
    Ok(match decay_fit(times, values, FitModel::Power)? {
        FitOutcome::Fitted(f) => ExponentCheck {
            quantity: quantity.to_string(),
            expected,
            fitted: Some(f.rate),
            r2: Some(f.r2),
            tolerance: allowed,
            passed: (f.rate - expected).abs() <= allowed,
        },
        FitOutcome::DecayedToFloor { .. } => ExponentCheck {
            quantity: quantity.to_string(),
            expected,
            fitted: None,
            r2: None,
            tolerance: allowed,
            passed: true,
        },
    })
}

/// Sweeps the grid at every requested time and checks the rarefaction's
/// structural properties and decay rates.
pub fn check_rarefaction_sweep(rar: &SmoothRarefaction, opts: &RarefactionSweepOptions) -> Result<RarefactionSweepReport> {
    if !(opts.dx > 0.0) || !(opts.x_hi > opts.x_lo) {
        return Err(LabError::InvalidArgument("grid needs dx > 0 and x_hi > x_lo".into()));
    }
    let mut times: Vec<f64> = opts.sup_times.iter().chain(&opts.decay_times).cloned().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.is_empty() {
        return Err(LabError::InvalidArgument("no sample times".into()));
    }
    let t_max = *times.last().unwrap();
    let t_min = times[0];
    let w = &rar.wave;
    let need_lo = w.w_l * t_max - opts.margin;
    let need_hi = (w.w_r * t_min).max(w.w_r * t_max) + opts.margin;
    if opts.x_lo > need_lo || opts.x_hi < need_hi {
        return Err(LabError::Coverage(format!(
            "grid [{}, {}] does not contain the fan support [{need_lo}, {need_hi}]",
            opts.x_lo, opts.x_hi
        )));
    }
    let n = ((opts.x_hi - opts.x_lo) / opts.dx).round() as usize + 1;
    let x: Vec<f64> = (0..n).map(|i| opts.x_lo + i as f64 * opts.dx).collect();
    let transport_bound = w.w_l.abs().max(w.w_r.abs()) * (1.0 + 1e-6);

    let mut rows = Vec::with_capacity(times.len());
    for &t in &times {
        let pts = rar.eval_grid(&x, t);
        let vx: Vec<f64> = pts.iter().map(|p| p.v_x).collect();
        let ux: Vec<f64> = pts.iter().map(|p| p.u_x).collect();
        let vxx: Vec<f64> = pts.iter().map(|p| p.v_xx).collect();
        let uxx: Vec<f64> = pts.iter().map(|p| p.u_xx).collect();
        let mut min_vt = f64::INFINITY;
        let mut nonpositive = 0;
        let mut underflow = 0;
        let mut ratio: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for p in &pts {
            residual = residual.max((p.v_t - p.u_x).abs() + (p.u_t + rar.model.dpressure_raw(p.v, 1) * p.v_x).abs());
            if rar.wave.is_constant() {
                continue;
            }
            // subnormal derivatives have lost relative precision
            if p.v_x.abs() < f64::MIN_POSITIVE {
                underflow += 1;
                continue;
            }
            min_vt = min_vt.min(p.v_t);
            if !(p.v_t > 0.0) {
                nonpositive += 1;
            }
            ratio = ratio.max(p.v_t.abs() / p.v_x.abs());
        }
        let sup_diff = if opts.sup_times.contains(&t) {
            let d = pts
                .iter()
                .zip(&x)
                .map(|(p, &xi)| {
                    let (ve, ue) = rar.exact(xi, t);
                    (p.v - ve).abs() + (p.u - ue).abs()
                })
                .fold(0.0, f64::max);
            Some(d)
        } else {
            None
        };
        rows.push(RarefactionSweepRow {
            t,
            sup_diff,
            first: combined_norms(&vx, &ux, opts.dx),
            second: combined_norms(&vxx, &uxx, opts.dx),
            min_vt: if min_vt.is_finite() { min_vt } else { 0.0 },
            nonpositive_vt: nonpositive,
            underflow_nodes: underflow,
            transport_ratio: ratio,
            residual,
        });
    }

    let sup_at = |t: f64| rows.iter().find(|r| r.t == t).and_then(|r| r.sup_diff);
    let (ta, tb) = opts.sup_ratio_times;
    let (sa, sb) = (sup_at(ta).unwrap_or(0.0), sup_at(tb).unwrap_or(0.0));
    let sup_ratio = if sa > 0.0 { sb / sa } else { 0.0 };
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.t >= opts.monotone_from)
        .filter_map(|r| r.sup_diff)
        .collect();
    let sup_monotone = rar.wave.is_constant() || tail.windows(2).all(|p| p[1] < p[0]);
    let sup_passed = sup_ratio <= opts.sup_ratio_max && sup_monotone;

    let decay_rows: Vec<&RarefactionSweepRow> = rows.iter().filter(|r| opts.decay_times.contains(&r.t)).collect();
    let dt: Vec<f64> = decay_rows.iter().map(|r| r.t).collect();
    let mut exponents = Vec::new();
    for (k, (label, p)) in [("L1", 1.0), ("L2", 2.0), ("Linf", f64::INFINITY)].iter().enumerate() {
        let expected = -(1.0 - 1.0 / p);
        let first: Vec<f64> = decay_rows.iter().map(|r| r.first[k]).collect();
        exponents.push(exponent_check(&format!("d1_{label}"), &dt, &first, expected, opts.exponent_tol)?);
    }
    for (k, label) in ["L1", "L2", "Linf"].iter().enumerate() {
        let second: Vec<f64> = decay_rows.iter().map(|r| r.second[k]).collect();
        exponents.push(exponent_check(&format!("d2_{label}"), &dt, &second, -1.0, opts.second_exponent_tol)?);
    }

    let vt_positive = rows.iter().all(|r| r.nonpositive_vt == 0);
    let transport_constant = rows.iter().map(|r| r.transport_ratio).fold(0.0, f64::max);
    let transport_passed = transport_constant <= transport_bound;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let residual_passed = max_residual <= opts.residual_tol;
    let passed = sup_passed && exponents.iter().all(|e| e.passed) && vt_positive && transport_passed && residual_passed;
    Ok(RarefactionSweepReport {
        rows,
        sup_ratio,
        sup_monotone,
        sup_passed,
        exponents,
        vt_positive,
        transport_constant,
        transport_bound,
        transport_passed,
        max_residual,
        residual_passed,
        passed,
    })
}

impl RarefactionSweepReport {
    /// Long-format CSV: time, quantity, value, fitted exponent.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "quantity", "value", "fitted_exponent"])?;
        let fitted = |name: &str| {
            self.exponents
                .iter()
                .find(|e| e.quantity == name)
                .and_then(|e| e.fitted)
                .map(|f| f.to_string())
                .unwrap_or_default()
        };
        let labels = ["L1", "L2", "Linf"];
        for r in &self.rows {
            let t = r.t.to_string();
            if let Some(s) = r.sup_diff {
                w.write_record([t.as_str(), "sup_diff", &s.to_string(), ""])?;
            }
            for k in 0..3 {
                let q1 = format!("d1_{}", labels[k]);
                let q2 = format!("d2_{}", labels[k]);
                w.write_record([t.as_str(), &q1, &r.first[k].to_string(), &fitted(&q1)])?;
                w.write_record([t.as_str(), &q2, &r.second[k].to_string(), &fitted(&q2)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MaterialModel {
        MaterialModel::default_power_law()
    }

    // closed-form velocity for gamma = 2
    fn u_closed(v_l: f64, u_l: f64, v: f64) -> f64 {
        u_l + 2.0 * 2f64.sqrt() * (v_l.powf(-0.5) - v.powf(-0.5))
    }

    #[test]
    fn curve_matches_closed_form() {
        let m = model();
        let s = RiemannEndStates::on_rarefaction_curve(&m, 1.0, 0.0, 2.0).unwrap();
        assert!((s.u_r - u_closed(1.0, 0.0, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn strength_parameterization() {
        let m = model();
        let s = RiemannEndStates::with_strength(&m, 1.0, 0.0, 0.2).unwrap();
        assert!((s.delta - 0.2).abs() < 1e-12);
        assert!((s.v_r - 1.08587).abs() < 1e-4);
        assert!((s.u_r - 0.114134).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_rarefaction_states() {
        let m = model();
        assert!(matches!(
            RiemannEndStates::new(&m, 1.0, 0.1, 1.2, 0.0),
            Err(LabError::NotRarefaction(_))
        ));
        assert!(matches!(
            RiemannEndStates::on_rarefaction_curve(&m, 1.2, 0.0, 1.0),
            Err(LabError::NotRarefaction(_))
        ));
        assert!(RiemannEndStates::new(&m, 1.0, 0.0, 1.2, 0.5).is_err());
        assert!(RiemannEndStates::new(&m, 0.5, 0.0, 1.2, 0.5).is_err());
    }

    #[test]
    fn burgers_speeds() {
        let m = model();
        let s = RiemannEndStates::on_rarefaction_curve(&m, 1.0, 0.0, 2.0).unwrap();
        let w = make_burgers(&m, &s).unwrap();
        assert!((w.w_l + 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.w_r, -0.5);
        assert!((w.w_hat - (-2f64.sqrt() - 0.5) / 2.0).abs() < 1e-15);
        assert!(w.w_tilde > 0.0);
    }

    #[test]
    fn burgers_examples() {
        let w = BurgersWave::new(-1.4, -0.5);
        assert_eq!(w.eval(0.0, 0.0).w, w.w_hat);
        assert!((w.eval(-1e3, 3.0).w - w.w_l).abs() < 1e-15);
        assert!((w.eval(1e3, 3.0).w - w.w_r).abs() < 1e-15);
        assert!((w.eval(w.w_hat * 50.0, 50.0).w - w.w_hat).abs() <= 1e-10);
        for &x in &[-3.0, -0.2, 0.0, 0.7, 5.0] {
            assert!((w.eval(x, 0.0).w - w.initial(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn exact_fan_pieces() {
        let w = BurgersWave::new(-1.4, -0.5);
        assert_eq!(w.exact_fan(w.w_l - 1.0), w.w_l);
        assert_eq!(w.exact_fan(-0.95), -0.95);
        assert_eq!(w.exact_fan(0.0), w.w_r);
    }

    #[test]
    fn burgers_derivatives_match_differences() {
        let w = BurgersWave::new(-1.4, -0.5);
        let (x, t, h) = (-20.0, 17.0, 1e-4);
        let p = w.eval(x, t);
        let fx = (w.eval(x + h, t).w - w.eval(x - h, t).w) / (2.0 * h);
        let ft = (w.eval(x, t + h).w - w.eval(x, t - h).w) / (2.0 * h);
        let fxx = (w.eval(x + h, t).w_x - w.eval(x - h, t).w_x) / (2.0 * h);
        let fxt = (w.eval(x, t + h).w_x - w.eval(x, t - h).w_x) / (2.0 * h);
        let ftt = (w.eval(x, t + h).w_t - w.eval(x, t - h).w_t) / (2.0 * h);
        assert!((p.w_x - fx).abs() < 1e-8);
        assert!((p.w_t - ft).abs() < 1e-8);
        assert!((p.w_xx - fxx).abs() < 1e-8);
        assert!((p.w_xt - fxt).abs() < 1e-8);
        assert!((p.w_tt - ftt).abs() < 1e-8);
    }

    #[test]
    fn smooth_rarefaction_limits_and_identities() {
        let m = model();
        let s = RiemannEndStates::with_strength(&m, 1.0, 0.0, 0.2).unwrap();
        let r = SmoothRarefaction::new(&m, s).unwrap();
        let left = r.eval(-500.0, 3.0);
        let right = r.eval(500.0, 3.0);
        assert!((left.v - s.v_l).abs() < 1e-12 && (left.u - s.u_l).abs() < 1e-12);
        assert!((right.v - s.v_r).abs() < 1e-12 && (right.u - s.u_r).abs() < 1e-12);
        for &x in &[-30.0, -12.0, -5.0, 0.0, 4.0] {
            let p = r.eval(x, 10.0);
            assert!((p.u - u_closed(1.0, 0.0, p.v)).abs() < 1e-12);
            assert!((p.v_t - p.u_x).abs() < 1e-10);
            assert!((p.u_t + m.dpressure_raw(p.v, 1) * p.v_x).abs() < 1e-10);
            assert!((p.v_t + p.burgers.w * p.v_x).abs() < 1e-10);
        }
    }

    #[test]
    fn smooth_rarefaction_derivatives_match_differences() {
        let m = model();
        let s = RiemannEndStates::with_strength(&m, 1.0, 0.0, 0.5).unwrap();
        let r = SmoothRarefaction::new(&m, s).unwrap();
        let (x, t, h) = (-8.0, 4.0, 1e-4);
        let p = r.eval(x, t);
        let dx = |f: fn(&RarefactionPoint) -> f64| (f(&r.eval(x + h, t)) - f(&r.eval(x - h, t))) / (2.0 * h);
        let dt = |f: fn(&RarefactionPoint) -> f64| (f(&r.eval(x, t + h)) - f(&r.eval(x, t - h))) / (2.0 * h);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-7 * (1.0 + a.abs());
        assert!(close(p.v_x, dx(|q| q.v)));
        assert!(close(p.u_x, dx(|q| q.u)));
        assert!(close(p.v_t, dt(|q| q.v)));
        assert!(close(p.u_t, dt(|q| q.u)));
        assert!(close(p.v_xx, dx(|q| q.v_x)));
        assert!(close(p.u_xx, dx(|q| q.u_x)));
        assert!(close(p.v_xt, dt(|q| q.v_x)));
        assert!(close(p.u_xt, dt(|q| q.u_x)));
        assert!(close(p.v_tt, dt(|q| q.v_t)));
        assert!(close(p.u_tt, dt(|q| q.u_t)));
    }

    #[test]
    fn degenerate_wave_is_constant() {
        let m = model();
        let s = RiemannEndStates::with_strength(&m, 1.3, 0.2, 0.0).unwrap();
        let r = SmoothRarefaction::new(&m, s).unwrap();
        for &(x, t) in &[(-5.0, 0.0), (0.0, 3.0), (40.0, 100.0)] {
            let p = r.eval(x, t);
            assert_eq!((p.v, p.u, p.v_x, p.u_t), (1.3, 0.2, 0.0, 0.0));
        }
        let opts = RarefactionSweepOptions {
            x_lo: -200.0,
            x_hi: 40.0,
            dx: 0.5,
            sup_times: vec![1.0, 5.0, 10.0],
            decay_times: (1..=12).map(|k| 10.0 * k as f64).collect(),
            ..Default::default()
        };
        let rep = check_rarefaction_sweep(&r, &opts).unwrap();
        assert!(rep.passed);
        assert!(rep.rows.iter().all(|row| row.first == [0.0; 3] && row.second == [0.0; 3]));
    }

    #[test]
    fn coverage_error_for_small_grid() {
        let m = model();
        let s = RiemannEndStates::with_strength(&m, 1.0, 0.0, 0.2).unwrap();
        let r = SmoothRarefaction::new(&m, s).unwrap();
        let opts = RarefactionSweepOptions {
            x_lo: -100.0,
            ..Default::default()
        };
        assert!(matches!(check_rarefaction_sweep(&r, &opts), Err(LabError::Coverage(_))));
    }
}
