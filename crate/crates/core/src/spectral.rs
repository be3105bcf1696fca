//! Fourier tools on a single period cell.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT plans and wavenumbers for an N-point cell of length `period`.
#[derive(Clone)]
pub struct Spectral {
    pub n: usize,
    pub period: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// signed angular wavenumbers 2 pi k / period; zero at Nyquist
    kappa: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).field("period", &self.period).finish()
    }
}

impl Spectral {
    pub fn new(n: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kappa = (0..n)
            .map(|j| {
                let k = signed_index(j, n);
                if n % 2 == 0 && j == n / 2 {
                    0.0
                } else {
                    2.0 * std::f64::consts::PI * k as f64 / period
                }
            })
            .collect();
        Self {
            n,
            period,
            fwd,
            inv,
            kappa,
        }
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        let s = 1.0 / self.n as f64;
        spec.iter().map(|c| c.re * s).collect()
    }

    /// Nodal derivative of the given order of the trigonometric interpolant.
    pub fn derivative(&self, f: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return f.to_vec();
        }
        let spec = self.forward(f);
        self.derivative_from_spectrum(&spec, order)
    }

    pub fn derivative_from_spectrum(&self, spec: &[Complex64], order: u32) -> Vec<f64> {
        let out: Vec<Complex64> = spec
            .iter()
            .zip(&self.kappa)
            .map(|(c, &k)| c * Complex64::new(0.0, k).powu(order))
            .collect();
        self.inverse_real(out)
    }

    /// Zeroes every mode with |k| > N/3.
    pub fn dealias(&self, spec: &mut [Complex64]) {
        let cut = self.n / 3;
        for (j, c) in spec.iter_mut().enumerate() {
            if signed_index(j, self.n).unsigned_abs() as usize > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Squared H^k norm over one cell by Parseval.
    pub fn hk_norm_squared(&self, f: &[f64], k: u32) -> f64 {
        let spec = self.forward(f);
        self.hk_norm_squared_spectrum(&spec, k)
    }

    pub fn hk_norm_squared_spectrum(&self, spec: &[Complex64], k: u32) -> f64 {
        let scale = self.dx() / self.n as f64;
        spec.iter()
            .enumerate()
            .map(|(j, c)| {
                // Nyquist keeps its true wavenumber for the norm weight
                let kap = 2.0 * std::f64::consts::PI * signed_index(j, self.n) as f64 / self.period;
                let k2 = kap * kap;
                let mut w = 0.0;
                let mut pow = 1.0;
                for _ in 0..=k {
                    w += pow;
                    pow *= k2;
                }
                w * c.norm_sqr()
            })
            .sum::<f64>()
            * scale
    }
}

#[inline]
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Trigonometric interpolant of one nodal field, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    period: f64,
    /// (angular wavenumber, cos coefficient, sin coefficient) for k >= 1
    modes: Vec<(f64, f64, f64)>,
    mean: f64,
}

impl FourierSeries {
    pub fn from_spectrum(spec: &[Complex64], period: f64) -> Self {
        let n = spec.len();
        let s = 1.0 / n as f64;
        let mut modes = Vec::with_capacity(n / 2);
        for k in 1..=n / 2 {
            let c = spec[k];
            let kap = 2.0 * std::f64::consts::PI * k as f64 / period;
            if 2 * k == n {
                modes.push((kap, c.re * s, 0.0));
            } else {
                modes.push((kap, 2.0 * c.re * s, -2.0 * c.im * s));
            }
        }
        Self {
            period,
            modes,
            mean: spec[0].re * s,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Value and first two derivatives at x.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let mut out = [self.mean, 0.0, 0.0];
        for &(k, a, b) in &self.modes {
            let (s, c) = (k * x).sin_cos();
            out[0] += a * c + b * s;
            out[1] += k * (-a * s + b * c);
            out[2] += -k * k * (a * c + b * s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_of_trig_polynomial() {
        let (n, p) = (64, 3.0);
        let sp = Spectral::new(n, p);
        let k = 2.0 * PI / p;
        let x: Vec<f64> = (0..n).map(|j| j as f64 * p / n as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| (3.0 * k * x).sin() + 0.5 * (k * x).cos()).collect();
        let d1 = sp.derivative(&f, 1);
        let d2 = sp.derivative(&f, 2);
        for (j, x) in x.iter().enumerate() {
            let e1 = 3.0 * k * (3.0 * k * x).cos() - 0.5 * k * (k * x).sin();
            let e2 = -9.0 * k * k * (3.0 * k * x).sin() - 0.5 * k * k * (k * x).cos();
            assert!((d1[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-10);
        }
    }

    #[test]
    fn series_reproduces_nodes_and_is_periodic() {
        let (n, p) = (32, 2.0);
        let sp = Spectral::new(n, p);
        let f: Vec<f64> = (0..n).map(|j| ((j * 7 % 5) as f64).sin()).collect();
        let s = FourierSeries::from_spectrum(&sp.forward(&f), p);
        for (j, fj) in f.iter().enumerate() {
            let x = j as f64 * p / n as f64;
            assert!((s.eval(x)[0] - fj).abs() < 1e-12);
            let a = s.eval(x + 0.013);
            let b = s.eval(x + 0.013 + p);
            assert!((a[0] - b[0]).abs() < 1e-11 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_h2() {
        let (n, p) = (128, 5.0);
        let sp = Spectral::new(n, p);
        let k = 2.0 * PI * 2.0 / p;
        let f: Vec<f64> = (0..n).map(|j| (k * j as f64 * p / n as f64).cos()).collect();
        let exact = (1.0 + k * k + k.powi(4)) * p / 2.0;
        assert!((sp.hk_norm_squared(&f, 2) - exact).abs() < 1e-10 * exact);
        assert!((sp.hk_norm_squared(&f, 0) - p / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let sp = Spectral::new(12, 1.0);
        let mut spec = vec![Complex64::new(1.0, 0.0); 12];
        sp.dealias(&mut spec);
        let kept: Vec<usize> = (0..12).filter(|&j| spec[j].re != 0.0).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 8, 9, 10, 11]);
    }
}
