//! Samplers for the limiting laws of the three estimators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::distributions::{
    fill_brownian, grid_half_len, sample_two_line_with, CovMatrix, GaussianSampler, Point,
};
use crate::error::{Error, Result};
use crate::estimators::kmeans::{within_ss, KmeansCoords};
use crate::optim::{grid_argmin_2d, linspace, pattern_search, PatternSearch};
use crate::rng::SeedStream;

/// Argmax of `c₂t² + √c₁ B(t)` over a two-sided Brownian motion `B`.
///
/// Expansion of the shorth criterion has a quadratic term `c₂ε²` in the center
/// offset, so the localized drift is `c₂t²`. The linear drift `c₂t` sometimes
/// written for this limit has no interior argmax for `c₂ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffConfig {
    pub c1: f64,
    pub c2: f64,
    pub horizon: f64,
    pub step: f64,
    pub paths: usize,
}

/// Largest tolerated fraction of argmaxes sitting on `±T`.
pub const MAX_BOUNDARY_FRACTION: f64 = 0.01;

impl ChernoffConfig {
    /// `T = 4 (√c₁/|c₂|)^{2/3}` and `h = T/4000`.
    pub fn with_defaults(c1: f64, c2: f64, paths: usize) -> Self {
        let horizon = 4.0 * (c1.sqrt() / c2.abs()).powf(2.0 / 3.0);
        Self {
            c1,
            c2,
            horizon,
            step: horizon / 4000.0,
            paths,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c1 must be positive, got {}",
                self.c1
            )));
        }
        if !(self.c2 < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c2 must be negative, got {}",
                self.c2
            )));
        }
        grid_half_len(self.horizon, self.step)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffDraws {
    pub draws: Vec<f64>,
    pub boundary_fraction: f64,
}

/// Grid argmax of one path; ties go to the smallest `|t|`, then to negative `t`.
fn drifted_argmax(values: &[f64], step: f64, c1: f64, c2: f64) -> (f64, bool) {
    let k = (values.len() - 1) / 2;
    let scale = c1.sqrt();
    let mut best_idx = k;
    let mut best = f64::NEG_INFINITY;
    // visit 0, -1, +1, -2, +2, ... so strict improvement implements the tie rule
    for dist in 0..=k {
        let candidates: &[usize] = if dist == 0 {
            &[k]
        } else {
            &[k - dist, k + dist]
        };
        for &i in candidates {
            let t = (i as f64 - k as f64) * step;
            let v = c2 * t * t + scale * values[i];
            if v > best {
                best = v;
                best_idx = i;
            }
        }
    }
    let t = (best_idx as f64 - k as f64) * step;
    (t, best_idx == 0 || best_idx == values.len() - 1)
}

pub fn sample_chernoff_argmax(cfg: &ChernoffConfig, stream: &SeedStream) -> Result<ChernoffDraws> {
    cfg.validate()?;
    let k = grid_half_len(cfg.horizon, cfg.step)?;
    let mut rng = stream.rng();
    let mut values = vec![0.0; 2 * k + 1];
    let mut draws = Vec::with_capacity(cfg.paths);
    let mut hits = 0usize;
    for _ in 0..cfg.paths {
        fill_brownian(&mut values, cfg.step, &mut rng);
        let (t, hit) = drifted_argmax(&values, cfg.step, cfg.c1, cfg.c2);
        hits += hit as usize;
        draws.push(t);
    }
    let boundary_fraction = if cfg.paths == 0 {
        0.0
    } else {
        hits as f64 / cfg.paths as f64
    };
    if boundary_fraction > MAX_BOUNDARY_FRACTION {
        return Err(Error::HorizonHit {
            fraction: boundary_fraction,
        });
    }
    Ok(ChernoffDraws {
        draws,
        boundary_fraction,
    })
}

/// Limit of `√n(α̂₁ − β₁)` for the bridge estimator when the second coefficient is
/// zero: `N(−λ₀/(4C₁₁), σ²/C₁₁)`.
pub fn sample_lasso_limits(
    c11: f64,
    lambda0: f64,
    sigma: f64,
    stream: &SeedStream,
    draws: usize,
) -> Result<Vec<f64>> {
    if !(c11 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C11 must be positive, got {c11}"
        )));
    }
    let mean = -lambda0 / (4.0 * c11);
    let sd = sigma / c11.sqrt();
    let mut rng = stream.rng();
    Ok((0..draws)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Scores `(Δ₁, Δ₂)` of the centered loss at the vertical configuration, in the
/// order `(δ_s, ε_d, δ_d, ε_s)`.
pub fn kmeans_scores(z: &Point) -> [f64; 4] {
    let [x, y] = *z;
    if x <= 0.0 {
        [-2.0 * (x + 1.0), -2.0 * y, -2.0 * (x + 1.0), -2.0 * y]
    } else {
        [-2.0 * (x - 1.0), 2.0 * y, 2.0 * (x - 1.0), -2.0 * y]
    }
}

/// Covariance of the k-means scores, `Σ = P ΔΔ'`.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansLimitInputs {
    pub sigma: CovMatrix,
    /// Monte Carlo standard error of each entry of `sigma`.
    pub std_errors: [[f64; 4]; 4],
    pub samples: usize,
}

/// Result of comparing finite-difference derivatives of the empirical criterion
/// with the score linearization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationCheck {
    pub finite_difference: [f64; 4],
    pub linearization: [f64; 4],
    /// `|fd − lin| / max(|lin|, √Σ_kk/√n)` per direction.
    pub relative_error: [f64; 4],
}

pub const LINEARIZATION_TOL: f64 = 1e-2;

/// Directional derivatives of `W_n` at `{(−1, 0), (1, 0)}` along each coordinate
/// of `(δ_s, ε_d, δ_d, ε_s)`, by central differences, against `P_n Δ`.
pub fn check_kmeans_linearization(sample: &[Point]) -> LinearizationCheck {
    let n = sample.len() as f64;
    let h = 1e-7;
    let mut finite_difference = [0.0; 4];
    let mut linearization = [0.0; 4];
    let mut second = [0.0; 4];
    for k in 0..4 {
        let mut plus = [0.0; 4];
        plus[k] = h;
        let mut minus = [0.0; 4];
        minus[k] = -h;
        let cp = coords_from(plus).to_centers();
        let cm = coords_from(minus).to_centers();
        let mut acc = 0.0;
        for z in sample {
            let dp = within_ss(std::slice::from_ref(z), &cp);
            let dm = within_ss(std::slice::from_ref(z), &cm);
            acc += (dp - dm) / (2.0 * h);
        }
        finite_difference[k] = acc / n;
    }
    for z in sample {
        let s = kmeans_scores(z);
        for k in 0..4 {
            linearization[k] += s[k] / n;
            second[k] += s[k] * s[k] / n;
        }
    }
    let mut relative_error = [0.0; 4];
    for k in 0..4 {
        let floor = (second[k] / n).sqrt();
        relative_error[k] =
            (finite_difference[k] - linearization[k]).abs() / linearization[k].abs().max(floor);
    }
    LinearizationCheck {
        finite_difference,
        linearization,
        relative_error,
    }
}

fn coords_from(v: [f64; 4]) -> KmeansCoords {
    KmeansCoords {
        delta_s: v[0],
        eps_d: v[1],
        delta_d: v[2],
        eps_s: v[3],
    }
}

/// Sample size of the fixed sample used by the linearization gate.
pub const LINEARIZATION_SAMPLE: usize = 100_000;

/// Monte Carlo estimate of the score covariance over the two-line law, gated by a
/// finite-difference check of the score formulas.
pub fn estimate_kmeans_cov(samples: usize, stream: &SeedStream) -> Result<KmeansLimitInputs> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let gate_sample = sample_two_line_with(LINEARIZATION_SAMPLE, &mut stream.child(&[0]).rng());
    let check = check_kmeans_linearization(&gate_sample);
    if check
        .relative_error
        .iter()
        .any(|e| !(*e <= LINEARIZATION_TOL))
    {
        return Err(Error::LinearizationCheck(format!("{check:?}")));
    }

    let mut rng = stream.child(&[1]).rng();
    let mut sum = [[0.0f64; 4]; 4];
    let mut sum_sq = [[0.0f64; 4]; 4];
    let chunk = 1 << 16;
    let mut left = samples;
    while left > 0 {
        let m = left.min(chunk);
        for z in sample_two_line_with(m, &mut rng) {
            let s = kmeans_scores(&z);
            for i in 0..4 {
                for j in 0..=i {
                    let p = s[i] * s[j];
                    sum[i][j] += p;
                    sum_sq[i][j] += p * p;
                }
            }
        }
        left -= m;
    }
    let n = samples as f64;
    let mut entries = nalgebra::DMatrix::zeros(4, 4);
    let mut std_errors = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mean = sum[i][j] / n;
            let var = (sum_sq[i][j] / n - mean * mean).max(0.0);
            entries[(i, j)] = mean;
            entries[(j, i)] = mean;
            std_errors[i][j] = (var / n).sqrt();
            std_errors[j][i] = std_errors[i][j];
        }
    }
    Ok(KmeansLimitInputs {
        sigma: CovMatrix::new(entries)?,
        std_errors,
        samples,
    })
}

/// `ψ₁(δ_s, ε_d) = (|δ_s| + |ε_d|)³/6 + ||δ_s| − |ε_d||³/6`.
pub fn psi1(delta_s: f64, eps_d: f64) -> f64 {
    let (a, b) = (delta_s.abs(), eps_d.abs());
    ((a + b).powi(3) + (a - b).abs().powi(3)) / 6.0
}

/// `ψ₂(t) + t'Z₂ + φ₁ + φ₂ + φ₃` at fixed `s`, the objective for the fast block.
pub fn fast_block_objective(s: [f64; 2], t: [f64; 2], z2: [f64; 2]) -> f64 {
    let ([ds, ed], [dd, es]) = (s, t);
    dd * dd + es * es + dd * z2[0] + es * z2[1] + ds * ds * dd + 2.0 * ds * ed * es - ed * ed * dd
}

/// Minimizer of [`fast_block_objective`] by completing the square.
pub fn fast_block_argmin(s: [f64; 2], z2: [f64; 2]) -> [f64; 2] {
    let [ds, ed] = s;
    [
        -(z2[0] + ds * ds - ed * ed) / 2.0,
        -(z2[1] + 2.0 * ds * ed) / 2.0,
    ]
}

const LIMIT_GRID: usize = 201;
const LIMIT_MAX_DOUBLINGS: usize = 2;

/// `argmin_s ψ₁(s) + s'Z₁` by grid search, two refinements and a compass polish.
pub fn slow_block_argmin(z1: [f64; 2]) -> Result<[f64; 2]> {
    let znorm = z1[0].hypot(z1[1]);
    if znorm == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let f = |a: f64, b: f64| psi1(a, b) + a * z1[0] + b * z1[1];
    let mut half = 4.0 * znorm.sqrt();
    for doubling in 0..=LIMIT_MAX_DOUBLINGS {
        let xs = linspace(-half, half, LIMIT_GRID);
        let (mut bx, mut by, _) = grid_argmin_2d(f, &xs, &xs);
        let cell = 2.0 * half / (LIMIT_GRID - 1) as f64;
        if bx.abs() > half - cell || by.abs() > half - cell {
            if doubling == LIMIT_MAX_DOUBLINGS {
                return Err(Error::SearchBoxBoundary {
                    widenings: doubling,
                });
            }
            half *= 2.0;
            continue;
        }
        let mut span = cell;
        for _ in 0..2 {
            let r = 2.5 * span;
            let xs = linspace(bx - r, bx + r, LIMIT_GRID);
            let ys = linspace(by - r, by + r, LIMIT_GRID);
            let (x, y, _) = grid_argmin_2d(f, &xs, &ys);
            bx = x;
            by = y;
            span = 2.0 * r / (LIMIT_GRID - 1) as f64;
        }
        let cfg = PatternSearch {
            initial_step: span,
            rounds: 80,
            expand: 2.0,
        };
        let (x, _) = pattern_search(|v| f(v[0], v[1]), &[bx, by], cfg);
        return Ok([x[0], x[1]]);
    }
    unreachable!("loop returns or errors on the last doubling")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmeansLimitDraw {
    /// `(δ_s*, ε_d*)`, the limit of `n^{1/4} a_n`.
    pub s: [f64; 2],
    /// `(δ_d*, ε_s*)`, the limit of `n^{1/2} b_n`.
    pub t: [f64; 2],
}

pub fn sample_kmeans_limit(
    inputs: &KmeansLimitInputs,
    stream: &SeedStream,
    draws: usize,
) -> Result<Vec<KmeansLimitDraw>> {
    if inputs.sigma.dim() != 4 {
        return Err(Error::InvalidParameter(
            "k-means limit needs a 4x4 covariance".into(),
        ));
    }
    let gauss = GaussianSampler::new(&inputs.sigma)?;
    let mut rng = stream.rng();
    (0..draws)
        .map(|_| {
            let z = gauss.sample(&mut rng);
            let s = slow_block_argmin([z[0], z[1]])?;
            let t = fast_block_argmin(s, [z[2], z[3]]);
            Ok(KmeansLimitDraw { s, t })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ks_two_sample;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, var)
    }

    #[test]
    fn strong_drift_pins_argmax_at_origin() {
        let cfg = ChernoffConfig {
            c1: 1.0,
            c2: -1e6,
            horizon: 1.0,
            step: 0.01,
            paths: 2000,
        };
        let d = sample_chernoff_argmax(&cfg, &SeedStream::new(1, 1)).unwrap();
        let near = d.draws.iter().filter(|t| t.abs() <= 0.01 + 1e-12).count();
        assert!(near as f64 >= 0.99 * 2000.0);
    }

    #[test]
    fn chernoff_law_is_symmetric_and_deterministic() {
        let cfg = ChernoffConfig::with_defaults(1.0, -1.0, 10_000);
        let s = SeedStream::new(2, 2);
        let d = sample_chernoff_argmax(&cfg, &s).unwrap();
        assert_eq!(d, sample_chernoff_argmax(&cfg, &s).unwrap());
        let (m, v) = mean_var(&d.draws);
        assert!(m.abs() <= 3.0 * v.sqrt() / 100.0, "mean {m}");
        assert!(d.boundary_fraction <= MAX_BOUNDARY_FRACTION);
    }

    #[test]
    fn chernoff_scaling_law() {
        // argmax(aB − bt²) has the law of (a/b)^{2/3} argmax(B − t²)
        let base = sample_chernoff_argmax(
            &ChernoffConfig::with_defaults(1.0, -1.0, 10_000),
            &SeedStream::new(3, 1),
        )
        .unwrap();
        for (c1, c2, seed) in [(4.0, -2.0, 2u64), (1.0, -8.0, 3)] {
            let other = sample_chernoff_argmax(
                &ChernoffConfig::with_defaults(c1, c2, 10_000),
                &SeedStream::new(3, seed),
            )
            .unwrap();
            let factor = (f64::sqrt(c1) / f64::abs(c2)).powf(2.0 / 3.0);
            let scaled: Vec<f64> = base.draws.iter().map(|t| t * factor).collect();
            let ks = ks_two_sample(&scaled, &other.draws).unwrap();
            assert!(ks <= 0.03, "({c1}, {c2}): {ks}");
        }
    }

    #[test]
    fn halving_the_grid_step_barely_moves_the_law() {
        let coarse = ChernoffConfig::with_defaults(1.0, -1.0, 10_000);
        let fine = ChernoffConfig {
            step: coarse.step / 2.0,
            ..coarse
        };
        let a = sample_chernoff_argmax(&coarse, &SeedStream::new(4, 1)).unwrap();
        let b = sample_chernoff_argmax(&fine, &SeedStream::new(4, 2)).unwrap();
        assert!(ks_two_sample(&a.draws, &b.draws).unwrap() <= 0.02);
    }

    #[test]
    fn short_horizon_is_reported() {
        let cfg = ChernoffConfig {
            c1: 1.0,
            c2: -0.01,
            horizon: 0.5,
            step: 0.005,
            paths: 500,
        };
        assert!(matches!(
            sample_chernoff_argmax(&cfg, &SeedStream::new(5, 5)),
            Err(Error::HorizonHit { .. })
        ));
        assert!(ChernoffConfig { c2: 1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn lasso_limit_moments() {
        let s = SeedStream::new(6, 6);
        let zero = sample_lasso_limits(1.0 / 3.0, 0.0, 1.0, &s, 100_000).unwrap();
        let (m, v) = mean_var(&zero);
        assert!(m.abs() < 3.0 * (3.0f64 / 1e5).sqrt());
        assert!((v - 3.0).abs() < 3.0 * 3.0 * (2.0f64 / 1e5).sqrt());

        let (c11, l0, sigma) = (1.0 / 3.0, 2.0, 1.0);
        let d = sample_lasso_limits(c11, l0, sigma, &s, 100_000).unwrap();
        let (m, v) = mean_var(&d);
        let (tm, tv) = (-l0 / (4.0 * c11), sigma * sigma / c11);
        assert!((m - tm).abs() < 3.0 * (tv / 1e5).sqrt(), "{m} vs {tm}");
        assert!(
            (v - tv).abs() < 3.0 * tv * (2.0f64 / 1e5).sqrt(),
            "{v} vs {tv}"
        );
        assert!(sample_lasso_limits(0.0, 1.0, 1.0, &s, 10).is_err());
    }

    #[test]
    fn lasso_limit_matches_localized_criterion_minimized_on_a_grid() {
        // W_n(β + u/√n) − W_n(β) with b = 0, exact penalty, n = 10⁶:
        // C₁₁u² − 2uZ + λ₀√n (|1 + u/√n|^{1/2} − 1), Z ~ N(0, σ²C₁₁).
        let (c11, l0, sigma, n) = (1.0f64 / 3.0, 2.0f64, 1.0f64, 1e6f64);
        let mut rng = SeedStream::new(7, 7).rng();
        let grid = linspace(-12.0, 12.0, 24_001);
        let mut mins = Vec::new();
        for _ in 0..4000 {
            let z: f64 = sigma * c11.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let obj = |u: f64| {
                c11 * u * u - 2.0 * u * z
                    + l0 * n.sqrt() * ((1.0 + u / n.sqrt()).abs().sqrt() - 1.0)
            };
            let best = grid
                .iter()
                .copied()
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .unwrap();
            mins.push(best);
        }
        let (m, v) = mean_var(&mins);
        let (tm, tv) = (-l0 / (4.0 * c11), sigma * sigma / c11);
        assert!((m - tm).abs() < 3.0 * (tv / 4000.0).sqrt(), "{m} vs {tm}");
        assert!(
            (v - tv).abs() < 3.0 * tv * (2.0f64 / 4000.0).sqrt(),
            "{v} vs {tv}"
        );
    }

    #[test]
    fn score_linearization_matches_finite_differences() {
        let pts = sample_two_line_with(LINEARIZATION_SAMPLE, &mut SeedStream::new(8, 8).rng());
        let check = check_kmeans_linearization(&pts);
        for e in check.relative_error {
            assert!(e <= LINEARIZATION_TOL, "{check:?}");
        }
    }

    #[test]
    fn score_covariance_matches_closed_form() {
        // Under x ~ Laplace, y = ±1: each score is ±2(|x| − 1) or ±2y, so every
        // diagonal entry is 4·E(|x| − 1)² = 4(EX² − 2E|X| + 1) = 4 or 4·Ey² = 4, and
        // every off-diagonal entry vanishes by the x ↦ −x or y ↦ −y symmetry.
        let est = estimate_kmeans_cov(1_000_000, &SeedStream::new(9, 9)).unwrap();
        for i in 0..4 {
            assert!(est.sigma.get(i, i) > 0.0);
            for j in 0..4 {
                let target = if i == j { 4.0 } else { 0.0 };
                assert!(
                    (est.sigma.get(i, j) - target).abs() <= (5.0 * est.std_errors[i][j]).max(1e-12),
                    "({i},{j}) {}",
                    est.sigma.get(i, j)
                );
            }
        }
        let bigger = estimate_kmeans_cov(4_000_000, &SeedStream::new(9, 10)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let se = est.std_errors[i][j].hypot(bigger.std_errors[i][j]);
                assert!(
                    (est.sigma.get(i, j) - bigger.sigma.get(i, j)).abs() <= 3.0 * se.max(1e-12),
                    "({i},{j})"
                );
            }
        }
    }

    /// `ψ₁ + s'Z₁` separates in `U = δ_s + ε_d`, `D = δ_s − ε_d`:
    /// `|U|³/6 + U p + |D|³/6 + D q` with `p = (Z_a + Z_b)/2`, `q = (Z_a − Z_b)/2`,
    /// minimized at `U = −sgn(p)√(2|p|)`.
    fn slow_block_closed_form(z: [f64; 2]) -> [f64; 2] {
        let root = |p: f64| -p.signum() * (2.0 * p.abs()).sqrt();
        let u = root((z[0] + z[1]) / 2.0);
        let d = root((z[0] - z[1]) / 2.0);
        [(u + d) / 2.0, (u - d) / 2.0]
    }

    #[test]
    fn slow_block_zero_noise() {
        assert_eq!(slow_block_argmin([0.0, 0.0]).unwrap(), [0.0, 0.0]);
        let inputs = KmeansLimitInputs {
            sigma: CovMatrix::from_rows(&[
                vec![0.0; 4],
                vec![0.0; 4],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ])
            .unwrap(),
            std_errors: [[0.0; 4]; 4],
            samples: 0,
        };
        let mut rng = SeedStream::new(10, 1).rng();
        let z = GaussianSampler::new(&inputs.sigma)
            .unwrap()
            .sample(&mut rng);
        let draw = sample_kmeans_limit(&inputs, &SeedStream::new(10, 1), 1).unwrap()[0];
        assert_eq!(draw.s, [0.0, 0.0]);
        assert_eq!(draw.t, [-z[2] / 2.0, -z[3] / 2.0]);
    }

    #[test]
    fn slow_block_matches_closed_form_and_is_locally_optimal() {
        let mut rng = SeedStream::new(11, 1).rng();
        for _ in 0..300 {
            let z = [
                2.0 * rng.sample::<f64, _>(StandardNormal),
                2.0 * rng.sample::<f64, _>(StandardNormal),
            ];
            let s = slow_block_argmin(z).unwrap();
            let exact = slow_block_closed_form(z);
            assert!(
                (s[0] - exact[0]).abs() < 1e-6 && (s[1] - exact[1]).abs() < 1e-6,
                "{s:?} vs {exact:?}"
            );
            let f = |a: f64, b: f64| psi1(a, b) + a * z[0] + b * z[1];
            let here = f(s[0], s[1]);
            for (dx, dy) in [(1e-6, 0.0), (-1e-6, 0.0), (0.0, 1e-6), (0.0, -1e-6)] {
                assert!(f(s[0] + dx, s[1] + dy) >= here - 1e-15 * here.abs().max(1.0));
            }
        }
    }

    #[test]
    fn slow_block_respects_sign_symmetries() {
        let mut rng = SeedStream::new(12, 1).rng();
        for _ in 0..50 {
            let z = [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            let s = slow_block_argmin(z).unwrap();
            let fx = slow_block_argmin([-z[0], z[1]]).unwrap();
            let fy = slow_block_argmin([z[0], -z[1]]).unwrap();
            assert!((fx[0] + s[0]).abs() < 1e-7 && (fx[1] - s[1]).abs() < 1e-7);
            assert!((fy[0] - s[0]).abs() < 1e-7 && (fy[1] + s[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn fast_block_closed_form_matches_numeric_minimization() {
        let mut rng = SeedStream::new(13, 1).rng();
        for _ in 0..100 {
            let g = |r: &mut crate::rng::StreamRng| rng_normal(r);
            let s = [g(&mut rng), g(&mut rng)];
            let z2 = [2.0 * g(&mut rng), 2.0 * g(&mut rng)];
            let closed = fast_block_argmin(s, z2);
            // numeric: Newton steps with central-difference gradient and Hessian
            let f = |t: [f64; 2]| fast_block_objective(s, t, z2);
            let h = 1e-2;
            let mut t = [0.0, 0.0];
            for _ in 0..4 {
                let shift = |i: usize, d: f64, mut t: [f64; 2]| {
                    t[i] += d;
                    t
                };
                let grad: Vec<f64> = (0..2)
                    .map(|i| (f(shift(i, h, t)) - f(shift(i, -h, t))) / (2.0 * h))
                    .collect();
                let mut hess = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let pp = f(shift(j, h, shift(i, h, t)));
                        let pm = f(shift(j, -h, shift(i, h, t)));
                        let mp = f(shift(j, h, shift(i, -h, t)));
                        let mm = f(shift(j, -h, shift(i, -h, t)));
                        hess[i][j] = (pp - pm - mp + mm) / (4.0 * h * h);
                    }
                }
                let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
                t[0] -= (hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det;
                t[1] -= (hess[0][0] * grad[1] - hess[1][0] * grad[0]) / det;
            }
            assert!(
                (t[0] - closed[0]).abs() < 1e-8 && (t[1] - closed[1]).abs() < 1e-8,
                "{t:?} vs {closed:?}"
            );
        }
    }

    fn rng_normal(r: &mut crate::rng::StreamRng) -> f64 {
        r.sample::<f64, _>(StandardNormal)
    }
}
