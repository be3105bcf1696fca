//! Time-series monitors: a-priori ratio, convergence to the rarefaction,
//! L1 and BV bookkeeping, and the Sobolev interpolation check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::norms;
use crate::error::{LabError, Result};

/// One sample of the a-priori bookkeeping.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AprioriSample {
    pub t: f64,
    /// ||(phi, psi, w)(t)||_1^2
    pub h1_squared: f64,
    /// ||(phi_x, psi_x, w_x)(t)||^2
    pub gradient_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub times: Vec<f64>,
    /// ||.||_1^2 + int_0^t ||grad||^2
    pub lhs: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub data_size: f64,
    pub c0: f64,
    /// the dissipation integral never decreased
    pub accounting_ok: bool,
    pub finite: bool,
}

/// Empirical constant sup_t LHS(t) / (||(phi0, psi0, w0)||_1^2 + delta + eps).
pub fn check_apriori(samples: &[AprioriSample], initial_h1_squared: f64, delta: f64, epsilon: f64) -> Result<AprioriReport> {
    if samples.is_empty() {
        return Err(LabError::Shape("a-priori check needs at least one sample".into()));
    }
    let mut diss = vec![0.0; samples.len()];
    for k in 1..samples.len() {
        let dt = samples[k].t - samples[k - 1].t;
        if !(dt > 0.0) {
            return Err(LabError::Shape("a-priori samples are not increasing in time".into()));
        }
        diss[k] = diss[k - 1] + 0.5 * dt * (samples[k].gradient_squared + samples[k - 1].gradient_squared);
    }
    let lhs: Vec<f64> = samples.iter().zip(&diss).map(|(s, d)| s.h1_squared + d).collect();
    let data_size = initial_h1_squared + delta + epsilon;
    let sup = lhs.iter().cloned().fold(0.0, f64::max);
    let c0 = if sup == 0.0 { 0.0 } else { sup / data_size };
    Ok(AprioriReport {
        times: samples.iter().map(|s| s.t).collect(),
        accounting_ok: diss.windows(2).all(|w| w[1] >= w[0]),
        finite: c0.is_finite(),
        lhs,
        dissipation: diss,
        data_size,
        c0,
    })
}

/// |c_a / c_b - 1| <= tol, with two zeros counting as stable.
pub fn refinement_stable(a: f64, b: f64, tol: f64) -> bool {
    if a == 0.0 && b == 0.0 {
        return true;
    }
    a.is_finite() && b.is_finite() && b != 0.0 && (a / b - 1.0).abs() <= tol
}

/// Spearman rank correlation; ties get average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let (a, b) = (rx[i] - mx, ry[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Largest pointwise |(dv, du, dp)| (Euclidean in the three components) over
/// nodes with x in [lo, hi].
pub fn sup_difference(x: &[f64], dv: &[f64], du: &[f64], dp: &[f64], window: (f64, f64)) -> Result<f64> {
    let mut found = false;
    let mut sup: f64 = 0.0;
    for i in 0..x.len() {
        if x[i] < window.0 || x[i] > window.1 {
            continue;
        }
        found = true;
        sup = sup.max((dv[i] * dv[i] + du[i] * du[i] + dp[i] * dp[i]).sqrt());
    }
    if !found {
        return Err(LabError::Coverage(format!(
            "window [{}, {}] contains no grid nodes",
            window.0, window.1
        )));
    }
    Ok(sup)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub sups: Vec<f64>,
    pub reference_time: f64,
    pub reference: f64,
    pub final_value: f64,
    pub ratio: f64,
    pub max_ratio: f64,
    pub tail_spearman: f64,
    pub max_spearman: f64,
    pub passed: bool,
}

/// Final sup at most `max_ratio` of the value nearest `reference_time`, and
/// Spearman rho below `max_spearman` over the later half of the series.
pub fn check_convergence(
    times: &[f64],
    sups: &[f64],
    window: (f64, f64),
    reference_time: f64,
    max_ratio: f64,
    max_spearman: f64,
) -> Result<ConvergenceReport> {
    if !(window.0 < window.1) {
        return Err(LabError::Coverage(format!("convergence window [{}, {}] is empty", window.0, window.1)));
    }
    if times.len() != sups.len() || times.len() < 3 {
        return Err(LabError::Shape(format!(
            "convergence check needs >= 3 matching samples, got {} times and {} values",
            times.len(),
            sups.len()
        )));
    }
    let k_ref = (0..times.len())
        .min_by(|&a, &b| (times[a] - reference_time).abs().total_cmp(&(times[b] - reference_time).abs()))
        .unwrap_or(0);
    let reference = sups[k_ref];
    let final_value = *sups.last().unwrap_or(&0.0);
    let ratio = if reference == 0.0 { 0.0 } else { final_value / reference };
    let half = times.len() / 2;
    let tail_spearman = spearman(&times[half..], &sups[half..]);
    let trivially_zero = sups.iter().all(|&s| s == 0.0);
    let passed = trivially_zero || (ratio <= max_ratio && tail_spearman < max_spearman);
    Ok(ConvergenceReport {
        window,
        times: times.to_vec(),
        sups: sups.to_vec(),
        reference_time: times[k_ref],
        reference,
        final_value,
        ratio,
        max_ratio,
        tail_spearman,
        max_spearman,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct L1BvReport {
    pub integral: f64,
    pub total_variation: f64,
    /// integral over the later half divided by the integral over the earlier half
    pub tail_integral_share: f64,
    /// mean over the last quarter relative to the maximum
    pub tail_level: f64,
    pub looks_l1: bool,
    pub tail_decays: bool,
}

/// Numerical proxy for f in L^1 and BV with f -> 0.
pub fn l1bv_monitor(times: &[f64], f: &[f64]) -> Result<L1BvReport> {
    if times.len() != f.len() || f.len() < 3 {
        return Err(LabError::Shape(format!(
            "L1/BV monitor needs >= 3 matching samples, got {} and {}",
            times.len(),
            f.len()
        )));
    }
    if let Some(k) = f.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(LabError::Contract(format!("monitored series is negative or non-finite at sample {k}")));
    }
    let n = f.len();
    let trap = |a: usize, b: usize| -> f64 { (a..b).map(|k| 0.5 * (times[k + 1] - times[k]) * (f[k] + f[k + 1])).sum() };
    let mid = n / 2;
    let (head, tail) = (trap(0, mid), trap(mid, n - 1));
    let integral = head + tail;
    let total_variation = f.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let max = f.iter().cloned().fold(0.0, f64::max);
    let q = (3 * n) / 4;
    let tail_mean = f[q..].iter().sum::<f64>() / (n - q) as f64;
    let tail_level = if max == 0.0 { 0.0 } else { tail_mean / max };
    let tail_integral_share = if head == 0.0 { 0.0 } else { tail / head };
    Ok(L1BvReport {
        integral,
        total_variation,
        tail_integral_share,
        tail_level,
        looks_l1: tail_integral_share <= 0.5,
        tail_decays: tail_level <= 0.1,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevVerdict {
    pub sup_squared: f64,
    pub bound: f64,
    pub passed: bool,
}

/// ||f||_inf^2 <= 2 ||f|| ||f_x|| (1 + 1e-2) with f_x by central differences.
pub fn sobolev_check(f: &[f64], dx: f64) -> SobolevVerdict {
    let fx = norms::derivative(f, dx);
    sobolev_check_with_derivative(f, &fx, dx)
}

pub fn sobolev_check_with_derivative(f: &[f64], fx: &[f64], dx: f64) -> SobolevVerdict {
    let s = norms::linf(f);
    let bound = 2.0 * norms::l2(f, dx) * norms::l2(fx, dx);
    let sup_squared = s * s;
    SobolevVerdict {
        sup_squared,
        bound,
        passed: sup_squared <= bound * (1.0 + 1e-2),
    }
}

/// Random band-limited bumps: a Gaussian window times a trigonometric
/// polynomial with at most five modes, on [-40, 40] with dx = 0.01.
pub fn sobolev_sweep(count: usize, seed: u64) -> Vec<SobolevVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = 0.01;
    let x: Vec<f64> = (0..=8000).map(|i| -40.0 + i as f64 * dx).collect();
    (0..count)
        .map(|_| {
            let width = rng.gen_range(0.5..4.0);
            let center = rng.gen_range(-5.0..5.0);
            let modes: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=5))
                .map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f: Vec<f64> = x
                .iter()
                .map(|&x| {
                    let y = x - center;
                    let trig: f64 = modes.iter().map(|&(k, a, b)| a * (k * y).cos() + b * (k * y).sin()).sum();
                    trig * (-(y * y) / (2.0 * width * width)).exp()
                })
                .collect();
            let fx: Vec<f64> = x
                .iter()
                .map(|&x| {
                    let y = x - center;
                    let g = (-(y * y) / (2.0 * width * width)).exp();
                    let (mut trig, mut dtrig) = (0.0, 0.0);
                    for &(k, a, b) in &modes {
                        let (s, c) = (k * y).sin_cos();
                        trig += a * c + b * s;
                        dtrig += k * (-a * s + b * c);
                    }
                    (dtrig - trig * y / (width * width)) * g
                })
                .collect();
            sobolev_check_with_derivative(&f, &fx, dx)
        })
        .collect()
}
