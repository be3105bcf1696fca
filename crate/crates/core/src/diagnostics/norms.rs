//! Discrete norms on uniform grids (composite trapezoid rule).

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    L1,
    L2,
    Linf,
    H1,
}

fn nonempty(f: &[f64]) -> Result<()> {
    if f.is_empty() {
        Err(LabError::Shape("norm of an empty grid function".into()))
    } else {
        Ok(())
    }
}

/// Trapezoid integral of `g(f_i)` over a uniform grid.
#[inline]
pub fn trapezoid_map(f: &[f64], dx: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..n - 1].iter().map(|&x| g(x)).sum();
    dx * (inner + 0.5 * (g(f[0]) + g(f[n - 1])))
}

pub fn trapezoid(f: &[f64], dx: f64) -> f64 {
    trapezoid_map(f, dx, |x| x)
}

pub fn l1(f: &[f64], dx: f64) -> f64 {
    trapezoid_map(f, dx, f64::abs)
}

pub fn l2_squared(f: &[f64], dx: f64) -> f64 {
    trapezoid_map(f, dx, |x| x * x)
}

pub fn l2(f: &[f64], dx: f64) -> f64 {
    l2_squared(f, dx).sqrt()
}

pub fn linf(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Second-order finite-difference derivative (one-sided at the ends).
pub fn derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    d
}

pub fn h1_with_derivative(f: &[f64], fx: &[f64], dx: f64) -> Result<f64> {
    nonempty(f)?;
    if f.len() != fx.len() {
        return Err(LabError::Shape(format!("{} values but {} derivatives", f.len(), fx.len())));
    }
    Ok((l2_squared(f, dx) + l2_squared(fx, dx)).sqrt())
}

/// Norm of a grid function; H1 differentiates by finite differences.
pub fn norm(f: &[f64], dx: f64, kind: NormKind) -> Result<f64> {
    nonempty(f)?;
    Ok(match kind {
        NormKind::L1 => l1(f, dx),
        NormKind::L2 => l2(f, dx),
        NormKind::Linf => linf(f),
        NormKind::H1 => {
            let d = derivative(f, dx);
            (l2_squared(f, dx) + l2_squared(&d, dx)).sqrt()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(dx: f64, half: f64) -> Vec<f64> {
        let n = (2.0 * half / dx).round() as usize + 1;
        (0..n).map(|i| -half + i as f64 * dx).collect()
    }

    #[test]
    fn gaussian_l2() {
        let dx = 0.01;
        let f: Vec<f64> = grid(dx, 12.0).iter().map(|x| (-x * x).exp()).collect();
        let n2 = l2_squared(&f, dx);
        assert!((n2 - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn zero_function() {
        let f = vec![0.0; 17];
        for k in [NormKind::L1, NormKind::L2, NormKind::Linf, NormKind::H1] {
            assert_eq!(norm(&f, 0.1, k).unwrap(), 0.0);
        }
        assert!(norm(&[], 0.1, NormKind::L2).is_err());
    }

    #[test]
    fn second_order_convergence() {
        // non-periodic integrand so the trapezoid rule is only second order
        let sq = |dx: f64| {
            let f: Vec<f64> = grid(dx, 1.0).iter().map(|x| (x / 2.0).exp() * (x + 1.5)).collect();
            l2_squared(&f, dx)
        };
        let (a, b, c) = (sq(0.1), sq(0.05), sq(0.025));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn h1_of_sine() {
        let dx = 2.0 * std::f64::consts::PI / 4096.0;
        let x: Vec<f64> = (0..=4096).map(|i| i as f64 * dx).collect();
        let f: Vec<f64> = x.iter().map(|x| x.sin()).collect();
        let h1 = norm(&f, dx, NormKind::H1).unwrap();
        assert!((h1 - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn norm_axioms(a in prop::collection::vec(-5.0f64..5.0, 8..40), s in -3.0f64..3.0) {
            let b: Vec<f64> = a.iter().rev().cloned().collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
            for k in [NormKind::L1, NormKind::L2, NormKind::Linf, NormKind::H1] {
                let na = norm(&a, 0.1, k).unwrap();
                let nb = norm(&b, 0.1, k).unwrap();
                prop_assert!(na >= 0.0);
                prop_assert!(norm(&sum, 0.1, k).unwrap() <= na + nb + 1e-12);
                prop_assert!((norm(&scaled, 0.1, k).unwrap() - s.abs() * na).abs() <= 1e-12 * (1.0 + na));
            }
        }
    }
}
