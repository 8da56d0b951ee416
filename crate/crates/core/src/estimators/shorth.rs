//! Shortest interval containing at least half of the sample.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShorthFit {
    /// Interval center.
    pub m: f64,
    /// Interval half-length.
    pub r: f64,
    /// First and last order-statistic indices (0-based) of the chosen window.
    pub lo_index: usize,
    pub hi_index: usize,
}

impl ShorthFit {
    pub fn width(&self) -> f64 {
        2.0 * self.r
    }
}

/// Number of points a "half" interval must contain: `⌈n/2⌉`.
pub fn half_count(n: usize) -> usize {
    n.div_ceil(2)
}

pub fn fit_shorth(sample: &[f64]) -> Result<ShorthFit> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    fit_shorth_sorted(&sorted)
}

/// Same as [`fit_shorth`] for an already ascending sample.
pub fn fit_shorth_sorted(sorted: &[f64]) -> Result<ShorthFit> {
    let n = sorted.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "shorth needs n >= 2, got {n}"
        )));
    }
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "sample contains non-finite values".into(),
        ));
    }
    let k = half_count(n);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=n - k {
        let w = sorted[i + k - 1] - sorted[i];
        // strict: ties keep the leftmost window
        if w < best_width {
            best_width = w;
            best = i;
        }
    }
    let (lo, hi) = (sorted[best], sorted[best + k - 1]);
    Ok(ShorthFit {
        m: 0.5 * (lo + hi),
        r: 0.5 * (hi - lo),
        lo_index: best,
        hi_index: best + k - 1,
    })
}

/// Population quantities of the shorth for a symmetric unimodal density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShorthPopulation {
    pub mu: f64,
    pub rho: f64,
    /// `f(μ−ρ) + f(μ+ρ)`.
    pub c1: f64,
    /// `[f'(μ+ρ) − f'(μ−ρ)]/2`.
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShorthDensity {
    #[default]
    StandardNormal,
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn shorth_population(density: ShorthDensity) -> ShorthPopulation {
    match density {
        ShorthDensity::StandardNormal => {
            let mass = |r: f64| normal_cdf(r) - normal_cdf(-r) - 0.5;
            let (mut lo, mut hi) = (0.0f64, 2.0f64);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if mass(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let rho = 0.5 * (lo + hi);
            let f = normal_pdf(rho);
            ShorthPopulation {
                mu: 0.0,
                rho,
                c1: 2.0 * f,
                // f'(x) = -x f(x), so [f'(ρ) - f'(-ρ)]/2 = -ρ f(ρ)
                c2: -rho * f,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Enumerates every interval with endpoints at two data points and keeps the
    /// shortest one holding at least `⌈n/2⌉` points.
    fn brute_force(sample: &[f64]) -> (f64, usize) {
        let k = half_count(sample.len());
        let mut best = (f64::INFINITY, 0);
        for &a in sample {
            for &b in sample {
                if b < a {
                    continue;
                }
                let count = sample.iter().filter(|&&x| a <= x && x <= b).count();
                if count >= k && b - a < best.0 {
                    best = (b - a, count);
                }
            }
        }
        best
    }

    #[test]
    fn small_examples() {
        let f = fit_shorth(&[0.0, 1.0, 3.0, 10.0]).unwrap();
        assert_eq!((f.m, f.r), (0.5, 0.5));
        let f = fit_shorth(&[2.0, 0.0, 1.0]).unwrap();
        assert_eq!((f.m, f.r), (0.5, 0.5));
        assert_eq!((f.lo_index, f.hi_index), (0, 1));
    }

    #[test]
    fn rejects_tiny_samples() {
        assert!(fit_shorth(&[1.0]).is_err());
        assert!(fit_shorth(&[]).is_err());
        assert!(fit_shorth(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_normal_samples() {
        for seed in 0..200 {
            let mut rng = SeedStream::new(seed, 77).rng();
            let n = 200;
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let fit = fit_shorth(&x).unwrap();
            let (w, count) = brute_force(&x);
            assert_eq!(fit.width(), w, "seed {seed}");
            let mut sorted = x.clone();
            sorted.sort_by(f64::total_cmp);
            let (lo, hi) = (sorted[fit.lo_index], sorted[fit.hi_index]);
            let inside = x.iter().filter(|&&v| lo <= v && v <= hi).count();
            assert_eq!(inside, count, "seed {seed}");
        }
    }

    #[test]
    fn normal_population_constants() {
        // Φ by its Taylor series Φ(x) = 1/2 + φ-free series Σ (-1)^k x^{2k+1} / (2^k k! (2k+1)) / √(2π)
        let series_cdf = |x: f64| {
            let mut term = x;
            let mut sum = x;
            for k in 1..60 {
                term *= -x * x / (2.0 * k as f64);
                sum += term / (2 * k + 1) as f64;
            }
            0.5 + sum / (2.0 * PI).sqrt()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if series_cdf(mid) < 0.75 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let pop = shorth_population(ShorthDensity::StandardNormal);
        assert_eq!(pop.mu, 0.0);
        assert!((pop.rho - lo).abs() < 1e-11, "{} vs {lo}", pop.rho);
        assert!((pop.rho - 0.674490).abs() < 5e-7);
        let density = (-0.5 * lo * lo).exp() / (2.0 * PI).sqrt();
        assert!((pop.c1 - 2.0 * density).abs() < 1e-10, "{}", pop.c1);
        assert!((pop.c2 + lo * density).abs() < 1e-10, "{}", pop.c2);
        assert!((pop.c1 - 0.635553).abs() < 1e-6, "{}", pop.c1);
        assert!((pop.c2 + 0.214337).abs() < 1e-6, "{}", pop.c2);
        assert!(pop.c1 > 0.0 && pop.c2 < 0.0);
    }

    proptest! {
        #[test]
        fn equivariance(x in prop::collection::vec(-100.0f64..100.0, 2..60), shift in -50.0f64..50.0, scale in 0.1f64..10.0) {
            let base = fit_shorth(&x).unwrap();
            let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let s = fit_shorth(&shifted).unwrap();
            prop_assert!((s.m - base.m - shift).abs() < 1e-9);
            prop_assert!((s.r - base.r).abs() < 1e-9);
            let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let c = fit_shorth(&scaled).unwrap();
            prop_assert!((c.m - base.m * scale).abs() < 1e-9 * (1.0 + base.m.abs() * scale));
            prop_assert!((c.r - base.r * scale).abs() < 1e-9 * (1.0 + base.r * scale));
        }

        #[test]
        fn no_half_window_is_shorter(x in prop::collection::vec(-10.0f64..10.0, 2..80)) {
            let fit = fit_shorth(&x).unwrap();
            let mut s = x.clone();
            s.sort_by(f64::total_cmp);
            let k = half_count(s.len());
            for i in 0..=s.len() - k {
                prop_assert!(fit.width() <= s[i + k - 1] - s[i]);
            }
            let (lo, hi) = (s[fit.lo_index], s[fit.hi_index]);
            prop_assert_eq!(hi - lo, fit.width());
            let inside = x.iter().filter(|&&v| lo <= v && v <= hi).count();
            prop_assert!(inside >= k);
        }
    }
}
