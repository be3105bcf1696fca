//! Safeguarded Newton iteration on a bracket.
//!
//! Every scalar inversion in the crate (eigenvalue inversion, Burgers
//! characteristic feet, strengths on the rarefaction curve) targets a strictly
//! monotone function, so a sign-changing bracket always exists and bisection
//! is a valid fallback whenever a Newton step would leave it.

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the iterate.
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Finds a root of `f` inside `[lo, hi]`.
///
/// `f` returns the value and the derivative. `guess` seeds the first Newton
/// step; the bracket midpoint is used otherwise.
pub fn newton_bisect<F>(f: F, lo: f64, hi: f64, guess: Option<f64>, opts: RootOptions) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(LabError::NotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    // orient so that f(a) < 0 < f(b)
    let increasing = fa < 0.0;

    let mut x = match guess {
        Some(g) if g > a && g < b => g,
        _ => 0.5 * (a + b),
    };
    let mut last_step = b - a;
    for _ in 0..opts.max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let width = b - a;
        let next = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b && (newton - x).abs() <= 0.5 * last_step.abs() {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = next - x;
        x = next;
        last_step = step;
        if step.abs() <= opts.xtol || width <= opts.xtol {
            return Ok(x);
        }
    }
    Err(LabError::NoConvergence {
        iterations: opts.max_iter,
        last_step,
    })
}

/// Plain bisection; used as an independent cross-check in tests and for
/// targets whose derivative is expensive.
pub fn bisect<F>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(LabError::NotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let increasing = fa < 0.0;
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if b - a <= xtol || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_of_two() {
        let r = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, None, RootOptions::default()).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn decreasing_target() {
        let r = newton_bisect(|x| (1.0 - x, -1.0), -3.0, 5.0, Some(4.0), RootOptions::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // derivative reported as zero everywhere: pure bisection path
        let r = newton_bisect(|x| (x - 0.3, 0.0), 0.0, 1.0, None, RootOptions::default()).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn unbracketed_is_an_error() {
        let err = newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, None, RootOptions::default()).unwrap_err();
        assert!(matches!(err, LabError::NotBracketed { .. }));
    }

    #[test]
    fn bisection_agrees() {
        let r = bisect(|x| x.tanh() - 0.5, -5.0, 5.0, 1e-15, 200).unwrap();
        assert!((r - 0.5f64.atanh()).abs() < 1e-14);
    }
}
