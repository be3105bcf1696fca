//! Constitutive law, eigenvalues and Riemann-invariant algebra.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::roots::{newton_bisect, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstitutiveFamily {
    /// p_R(v) = v^(-gamma)
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    One,
    Two,
}

/// Immutable material description. Bound constants are certified at
/// construction from the closed-form derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct MaterialModel {
    pub family: ConstitutiveFamily,
    pub gamma: f64,
    /// Dynamic Young's modulus E.
    pub young: f64,
    pub tau: f64,
    pub strain_lo: f64,
    pub strain_hi: f64,
    /// min of -p_R' on the interval
    pub a1: f64,
    /// max of p_R'' on the interval
    pub a2: f64,
    /// max of |p_R'| on the interval
    pub e1: f64,
    #[serde(skip)]
    int_gamma: Option<i32>,
}

impl MaterialModel {
    pub fn power_law(gamma: f64, strain_lo: f64, strain_hi: f64, young: f64, tau: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(LabError::InvalidArgument(format!("exponent must be positive, got {gamma}")));
        }
        if !(strain_lo > 0.0) || !(strain_lo < strain_hi) || !strain_hi.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "strain interval must satisfy 0 < lo < hi, got [{strain_lo}, {strain_hi}]"
            )));
        }
        if !(young > 0.0) || !young.is_finite() {
            return Err(LabError::InvalidArgument(format!("Young's modulus must be positive, got {young}")));
        }
        if !(tau > 0.0) {
            return Err(LabError::InvalidArgument(format!("relaxation time must be positive, got {tau}")));
        }
        let int_gamma = if gamma.fract() == 0.0 && gamma <= 64.0 {
            Some(gamma as i32)
        } else {
            None
        };
        let mut m = Self {
            family: ConstitutiveFamily::PowerLaw,
            gamma,
            young,
            tau,
            strain_lo,
            strain_hi,
            a1: 0.0,
            a2: 0.0,
            e1: 0.0,
            int_gamma,
        };
        // -p' and p'' are decreasing in v for the power law
        m.a1 = -m.dpressure_raw(strain_hi, 1);
        m.e1 = -m.dpressure_raw(strain_lo, 1);
        m.a2 = m.dpressure_raw(strain_lo, 2);
        Ok(m)
    }

    /// Power law whose modulus is twice the certified bound on |p_R'|.
    pub fn power_law_with_margin(gamma: f64, strain_lo: f64, strain_hi: f64, margin: f64, tau: f64) -> Result<Self> {
        let probe = Self::power_law(gamma, strain_lo, strain_hi, 1.0, tau)?;
        Self::power_law(gamma, strain_lo, strain_hi, margin * probe.e1, tau)
    }

    /// gamma = 2 on [0.5, 2.5], E = 2 E1 = 32, tau = 1.
    pub fn default_power_law() -> Self {
        Self::power_law_with_margin(2.0, 0.5, 2.5, 2.0, 1.0).expect("default material is well formed")
    }

    pub fn sqrt_young(&self) -> f64 {
        self.young.sqrt()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.strain_lo && v <= self.strain_hi
    }

    pub fn check_domain(&self, v: f64) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(LabError::Domain {
                value: v,
                lo: self.strain_lo,
                hi: self.strain_hi,
            })
        }
    }

    #[inline]
    fn pow(&self, v: f64, shift: i32) -> f64 {
        match self.int_gamma {
            Some(g) => v.powi(-g - shift),
            None => v.powf(-self.gamma - shift as f64),
        }
    }

    pub fn pressure(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        Ok(self.pressure_raw(v))
    }

    /// p_R without the domain check; for hot loops over validated states.
    #[inline]
    pub fn pressure_raw(&self, v: f64) -> f64 {
        self.pow(v, 0)
    }

    pub fn dpressure(&self, v: f64, order: u32) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(LabError::InvalidArgument(format!("derivative order must be 1, 2 or 3, got {order}")));
        }
        self.check_domain(v)?;
        Ok(self.dpressure_raw(v, order))
    }

    /// p_R^(k)(v) = (-1)^k gamma (gamma+1) ... (gamma+k-1) v^(-gamma-k)
    #[inline]
    pub fn dpressure_raw(&self, v: f64, order: u32) -> f64 {
        let g = self.gamma;
        let mut c = 1.0;
        for j in 0..order {
            c *= -(g + j as f64);
        }
        c * self.pow(v, order as i32)
    }

    /// Antiderivative of p_R, used for the closed-form potential energy.
    pub fn pressure_antiderivative(&self, v: f64) -> f64 {
        if (self.gamma - 1.0).abs() < f64::EPSILON {
            v.ln()
        } else {
            v.powf(1.0 - self.gamma) / (1.0 - self.gamma)
        }
    }

    pub fn lambda(&self, v: f64, branch: Branch) -> Result<f64> {
        self.check_domain(v)?;
        let l = self.lambda1_raw(v);
        Ok(match branch {
            Branch::One => l,
            Branch::Two => -l,
        })
    }

    #[inline]
    pub fn lambda1_raw(&self, v: f64) -> f64 {
        -(-self.dpressure_raw(v, 1)).sqrt()
    }

    /// (lambda_1', lambda_1'') at v.
    #[inline]
    pub fn dlambda1_raw(&self, v: f64) -> (f64, f64) {
        let q = -self.dpressure_raw(v, 1);
        let p2 = self.dpressure_raw(v, 2);
        let p3 = self.dpressure_raw(v, 3);
        let sq = q.sqrt();
        let d1 = p2 / (2.0 * sq);
        let d2 = p3 / (2.0 * sq) + p2 * p2 / (4.0 * q * sq);
        (d1, d2)
    }

    /// Range of lambda_1 over the admissible strains.
    pub fn lambda1_range(&self) -> (f64, f64) {
        (self.lambda1_raw(self.strain_lo), self.lambda1_raw(self.strain_hi))
    }

    /// Unique strain with lambda_1(v) = w.
    pub fn invert_lambda1(&self, w: f64) -> Result<f64> {
        let (lo, hi) = self.lambda1_range();
        if !(w >= lo && w <= hi) {
            return Err(LabError::SpeedRange { value: w, lo, hi });
        }
        if w == lo {
            return Ok(self.strain_lo);
        }
        if w == hi {
            return Ok(self.strain_hi);
        }
        // gamma v^(-gamma-1) = w^2
        let guess = (self.gamma / (w * w)).powf(1.0 / (self.gamma + 1.0));
        // the speed residual is bounded by slope * xtol, so scale xtol down by the steepest slope
        let steepest = self.dlambda1_raw(self.strain_lo).0.max(1.0);
        newton_bisect(
            |v| (self.lambda1_raw(v) - w, self.dlambda1_raw(v).0),
            self.strain_lo,
            self.strain_hi,
            Some(guess),
            RootOptions {
                xtol: (RootOptions::default().xtol / steepest).max(4.0 * f64::EPSILON * self.strain_hi),
                ..RootOptions::default()
            },
        )
    }

    pub fn validate_hypotheses(&self) -> HypothesisReport {
        validate_hypotheses(self)
    }
}

/// Riemann invariants of the relaxation system's principal part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    /// p + sqrt(E) u, moves with speed +sqrt(E)
    pub r_plus: f64,
    /// p - sqrt(E) u, moves with speed -sqrt(E)
    pub r_minus: f64,
    /// p + E v, stationary
    pub z: f64,
}

#[inline]
pub fn riemann_invariants(young: f64, v: f64, u: f64, p: f64) -> Invariants {
    let c = young.sqrt();
    Invariants {
        r_plus: p + c * u,
        r_minus: p - c * u,
        z: p + young * v,
    }
}

/// Inverse of [`riemann_invariants`]; returns (v, u, p).
#[inline]
pub fn from_invariants(young: f64, inv: Invariants) -> (f64, f64, f64) {
    let c = young.sqrt();
    let p = 0.5 * (inv.r_plus + inv.r_minus);
    let u = (inv.r_plus - inv.r_minus) / (2.0 * c);
    let v = (inv.z - p) / young;
    (v, u, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub a1: f64,
    pub a2: f64,
    pub e1: f64,
    pub young: f64,
    /// sup of |p_R^(k)| for k = 0..3
    pub derivative_bounds: [f64; 4],
    pub checks: Vec<HypothesisCheck>,
    pub passed: bool,
}

const HYPOTHESIS_SAMPLES: usize = 4001;

/// Certifies the four structural conditions on the admissible interval.
///
/// Extremes are taken over a dense sample that includes both endpoints; for
/// the power law every derivative is monotone, so the endpoint values are the
/// exact extremes and the sample only guards against a wrong closed form.
pub fn validate_hypotheses(model: &MaterialModel) -> HypothesisReport {
    let (lo, hi) = (model.strain_lo, model.strain_hi);
    let n = HYPOTHESIS_SAMPLES;
    let mut min_neg_slope = f64::INFINITY;
    let mut max_neg_slope = f64::NEG_INFINITY;
    let mut min_curv = f64::INFINITY;
    let mut max_curv = f64::NEG_INFINITY;
    let mut bounds = [0.0f64; 4];
    let mut finite = true;
    for i in 0..n {
        let v = if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        let vals = [
            model.pressure_raw(v),
            model.dpressure_raw(v, 1),
            model.dpressure_raw(v, 2),
            model.dpressure_raw(v, 3),
        ];
        for (b, x) in bounds.iter_mut().zip(vals) {
            finite &= x.is_finite();
            *b = b.max(x.abs());
        }
        min_neg_slope = min_neg_slope.min(-vals[1]);
        max_neg_slope = max_neg_slope.max(-vals[1]);
        min_curv = min_curv.min(vals[2]);
        max_curv = max_curv.max(vals[2]);
    }
    let a1 = min_neg_slope.min(model.a1);
    let e1 = max_neg_slope.max(model.e1);
    let a2 = max_curv.max(model.a2);

    let checks = vec![
        HypothesisCheck {
            name: "decreasing",
            passed: a1 > 0.0,
            detail: format!("min(-p') = {a1}"),
        },
        HypothesisCheck {
            name: "convex",
            passed: min_curv > 0.0 && a2.is_finite(),
            detail: format!("p'' in [{min_curv}, {a2}]"),
        },
        HypothesisCheck {
            name: "subcharacteristic",
            passed: e1 < model.young,
            detail: format!("max|p'| = {e1}, E = {}", model.young),
        },
        HypothesisCheck {
            name: "bounded",
            passed: finite,
            detail: format!("sup|p^(k)| = {bounds:?}"),
        },
    ];
    let passed = checks.iter().all(|c| c.passed);
    HypothesisReport {
        samples: n,
        a1,
        a2,
        e1,
        young: model.young,
        derivative_bounds: bounds,
        checks,
        passed,
    }
}
