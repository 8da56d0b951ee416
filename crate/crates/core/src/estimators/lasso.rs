//! Bridge-penalized least squares, `Σ(Yᵢ − xᵢ'α)² + λ_n Σ|α_j|^γ` with
//! `λ_n = λ₀ n^{1/2}`.
//!
//! For `γ < 1` the criterion is nonconvex with cusps on the coordinate axes, so the
//! solver is a global grid search followed by an orthant-wise polish whose 1-D
//! steps return exact zeros.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{grid_argmin_2d, linspace_with_zero};
use crate::rng::SeedStream;

/// Row-major `n × d` matrix of covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if n == 0 || d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(
                "design must be a nonempty rectangular matrix".into(),
            ));
        }
        Ok(Self {
            n,
            d,
            data: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, x) in m.iter_mut().zip(r) {
                *a += x;
            }
        }
        m.iter().map(|s| s / self.n as f64).collect()
    }

    fn center(&mut self) {
        let m = self.column_means();
        for r in self.data.chunks_exact_mut(self.d) {
            for (x, mu) in r.iter_mut().zip(&m) {
                *x -= mu;
            }
        }
    }

    /// `XᵀX` (not divided by `n`).
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.d, self.d);
        for r in self.rows() {
            for j in 0..self.d {
                for k in 0..=j {
                    g[(j, k)] += r[j] * r[k];
                }
            }
        }
        for j in 0..self.d {
            for k in 0..j {
                g[(k, j)] = g[(j, k)];
            }
        }
        g
    }

    /// `C_n = XᵀX / n`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.gram() / self.n as f64
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn predict(&self, coef: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().zip(coef).map(|(x, b)| x * b).sum())
            .collect()
    }
}

const MIN_EIGEN: f64 = 1e-6;
const DESIGN_RETRIES: usize = 3;

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// I.i.d. `Uniform[-1, 1]` covariates with every column centered to mean zero.
pub fn generate_lasso_design(n: usize, d: usize, stream: &SeedStream) -> Result<Design> {
    if d == 0 || n < d + 1 {
        return Err(Error::InvalidParameter(format!(
            "need n >= d + 1, got n = {n}, d = {d}"
        )));
    }
    for attempt in 0..=DESIGN_RETRIES {
        let s = if attempt == 0 {
            *stream
        } else {
            stream.child(&[attempt as u64])
        };
        let mut rng = s.rng();
        let data = (0..n * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut design = Design { n, d, data };
        design.center();
        if min_eigenvalue(&design.second_moment()) > MIN_EIGEN {
            return Ok(design);
        }
    }
    Err(Error::SingularDesign {
        attempts: DESIGN_RETRIES + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    pub beta_true: Vec<f64>,
    /// Penalty exponent in `(0, 1]`.
    pub gamma: f64,
    pub lambda0: f64,
    pub sigma: f64,
    pub design: Design,
}

impl LassoConfig {
    pub fn new(
        beta_true: Vec<f64>,
        gamma: f64,
        lambda0: f64,
        sigma: f64,
        design: Design,
    ) -> Result<Self> {
        let cfg = Self {
            beta_true,
            gamma,
            lambda0,
            sigma,
            design,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda0 must be >= 0, got {}",
                self.lambda0
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.beta_true.len() != self.design.d() {
            return Err(Error::InvalidParameter(
                "beta_true length must equal design dimension".into(),
            ));
        }
        let scale = self.design.max_row_norm_sq().sqrt().max(1.0);
        if self
            .design
            .column_means()
            .iter()
            .any(|m| m.abs() > 1e-12 * scale)
        {
            return Err(Error::InvalidParameter(
                "design columns must be centered".into(),
            ));
        }
        if min_eigenvalue(&self.design.second_moment()) <= MIN_EIGEN {
            return Err(Error::InvalidParameter("C_n is singular".into()));
        }
        Ok(())
    }

    /// `λ_n = λ₀ n^{1/2}`.
    pub fn lambda_n(&self) -> f64 {
        self.lambda0 * (self.design.n() as f64).sqrt()
    }

    /// `Y = Xβ + σε` with Gaussian `ε`.
    pub fn simulate_responses<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.design
            .predict(&self.beta_true)
            .into_iter()
            .map(|m| m + self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// The penalized criterion evaluated from its definition.
    pub fn criterion(&self, responses: &[f64], coef: &[f64]) -> f64 {
        let rss: f64 = self
            .design
            .predict(coef)
            .iter()
            .zip(responses)
            .map(|(p, y)| (y - p).powi(2))
            .sum();
        rss + self.lambda_n() * coef.iter().map(|a| a.abs().powf(self.gamma)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoFit {
    pub alpha_hat: Vec<f64>,
    pub zero_flags: Vec<bool>,
    pub criterion_value: f64,
    /// Number of search-box widenings used.
    pub widenings: usize,
}

/// Criterion written around the OLS solution: `RSS + (α−α̂)ᵀG(α−α̂) + λΣ|α_j|^γ`.
struct Criterion {
    gram: DMatrix<f64>,
    ols: DVector<f64>,
    rss: f64,
    lambda: f64,
    gamma: f64,
}

impl Criterion {
    fn new(cfg: &LassoConfig, responses: &[f64]) -> Result<Self> {
        let design = &cfg.design;
        let gram = design.gram();
        let mut xty = DVector::zeros(design.d());
        for (r, y) in design.rows().zip(responses) {
            for (j, x) in r.iter().enumerate() {
                xty[j] += x * y;
            }
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("XᵀX is not positive definite".into()))?;
        let ols = chol.solve(&xty);
        let rss = design
            .predict(ols.as_slice())
            .iter()
            .zip(responses)
            .map(|(p, y)| (y - p).powi(2))
            .sum();
        Ok(Self {
            gram,
            ols,
            rss,
            lambda: cfg.lambda_n(),
            gamma: cfg.gamma,
        })
    }

    fn penalty(&self, a: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else {
            self.lambda * a.abs().powf(self.gamma)
        }
    }

    fn eval(&self, coef: &[f64]) -> f64 {
        let d = self.ols.len();
        let mut q = 0.0;
        for j in 0..d {
            let ej = coef[j] - self.ols[j];
            for k in 0..d {
                q += ej * self.gram[(j, k)] * (coef[k] - self.ols[k]);
            }
        }
        self.rss + q + coef.iter().map(|&a| self.penalty(a)).sum::<f64>()
    }

    /// Exact minimizer of `A u² − 2Bu + λu^γ` over `u ∈ [0, upper]`; returns 0 on ties.
    fn half_line_min(&self, a: f64, b: f64, upper: f64) -> f64 {
        let (lambda, gamma) = (self.lambda, self.gamma);
        let h = |u: f64| {
            a * u * u - 2.0 * b * u
                + if u == 0.0 {
                    0.0
                } else {
                    lambda * u.powf(gamma)
                }
        };
        if upper <= 0.0 {
            return 0.0;
        }
        let interior = if lambda == 0.0 || gamma == 1.0 {
            ((2.0 * b - lambda) / (2.0 * a)).clamp(0.0, upper)
        } else {
            // convex beyond the inflection point u₀
            let u0 = (lambda * gamma * (1.0 - gamma) / (2.0 * a)).powf(1.0 / (2.0 - gamma));
            if u0 >= upper {
                upper
            } else {
                let dh = |u: f64| 2.0 * a * u - 2.0 * b + lambda * gamma * u.powf(gamma - 1.0);
                if dh(u0) >= 0.0 {
                    u0
                } else if dh(upper) <= 0.0 {
                    upper
                } else {
                    let (mut lo, mut hi) = (u0, upper);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if dh(mid) < 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if h(lo) <= h(hi) {
                        lo
                    } else {
                        hi
                    }
                }
            }
        };
        if h(interior) < h(0.0) {
            interior
        } else {
            0.0
        }
    }

    /// Coordinate descent restricted to the closed orthant `signs` and to `|α_j| ≤ bound_j`.
    fn orthant_descent(&self, start: &[f64], signs: &[f64], bounds: &[f64]) -> Vec<f64> {
        let d = start.len();
        let mut x: Vec<f64> = (0..d)
            .map(|j| (start[j] * signs[j]).max(0.0).min(bounds[j]) * signs[j])
            .collect();
        let scale = bounds.iter().fold(1.0f64, |m, b| m.max(*b));
        for _ in 0..10_000 {
            let mut moved = 0.0f64;
            for j in 0..d {
                let a = self.gram[(j, j)];
                let mut b = a * self.ols[j];
                for k in 0..d {
                    if k != j {
                        b -= self.gram[(j, k)] * (x[k] - self.ols[k]);
                    }
                }
                let u = self.half_line_min(a, signs[j] * b, bounds[j]);
                let new = signs[j] * u;
                moved = moved.max((new - x[j]).abs());
                x[j] = new;
            }
            if moved <= 1e-15 * scale {
                break;
            }
        }
        x
    }
}

const GRID: usize = 101;
const REFINEMENTS: usize = 2;
const MAX_WIDENINGS: usize = 2;

/// Global minimizer of the bridge criterion for a two-column design.
pub fn fit_bridge_lasso(responses: &[f64], config: &LassoConfig) -> Result<LassoFit> {
    let design = &config.design;
    if responses.len() != design.n() {
        return Err(Error::InvalidParameter(format!(
            "{} responses for {} design rows",
            responses.len(),
            design.n()
        )));
    }
    if design.d() != 2 {
        return Err(Error::InvalidParameter(format!(
            "the grid solver handles d = 2 only, got d = {}",
            design.d()
        )));
    }
    config.validate()?;
    let crit = Criterion::new(config, responses)?;
    let n = design.n() as f64;
    let resid_scale = (crit.rss / (n - 2.0)).max(0.0).sqrt();
    let mut half_width = 4.0 * resid_scale.max(1.0);

    for widenings in 0..=MAX_WIDENINGS {
        let center = [crit.ols[0], crit.ols[1]];
        let lo = [center[0] - half_width, center[1] - half_width];
        let hi = [center[0] + half_width, center[1] + half_width];
        let f = |x: f64, y: f64| crit.eval(&[x, y]);

        let xs = linspace_with_zero(lo[0], hi[0], GRID);
        let ys = linspace_with_zero(lo[1], hi[1], GRID);
        let (mut bx, mut by, _) = grid_argmin_2d(f, &xs, &ys);
        let cell = 2.0 * half_width / (GRID - 1) as f64;
        let near_edge = |v: f64, j: usize| v - lo[j] < cell || hi[j] - v < cell;
        if near_edge(bx, 0) || near_edge(by, 1) {
            if widenings == MAX_WIDENINGS {
                return Err(Error::SearchBoxBoundary { widenings });
            }
            half_width *= 2.0;
            continue;
        }

        let mut span = cell;
        for _ in 0..REFINEMENTS {
            let r = 2.5 * span;
            let xs = linspace_with_zero((bx - r).max(lo[0]), (bx + r).min(hi[0]), GRID);
            let ys = linspace_with_zero((by - r).max(lo[1]), (by + r).min(hi[1]), GRID);
            let (x, y, _) = grid_argmin_2d(f, &xs, &ys);
            bx = x;
            by = y;
            span = 2.0 * r / (GRID - 1) as f64;
        }

        // polish: every closed orthant, both axes, the origin and the OLS point
        let bounds = [lo[0].abs().max(hi[0].abs()), lo[1].abs().max(hi[1].abs())];
        let incumbent = [bx, by];
        let mut candidates: Vec<Vec<f64>> = vec![
            incumbent.to_vec(),
            vec![0.0, 0.0],
            crit.ols.as_slice().to_vec(),
        ];
        for signs in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            candidates.push(crit.orthant_descent(&incumbent, &signs, &bounds));
            for axis in 0..2 {
                let mut axis_bounds = bounds;
                axis_bounds[axis] = 0.0;
                candidates.push(crit.orthant_descent(&incumbent, &signs, &axis_bounds));
            }
        }
        let zeros = |c: &[f64]| c.iter().filter(|v| **v == 0.0).count();
        let best = candidates
            .into_iter()
            .map(|c| (crit.eval(&c), c))
            .min_by(|(fa, a), (fb, b)| fa.total_cmp(fb).then(zeros(b).cmp(&zeros(a))))
            .map(|(_, c)| c)
            .expect("candidates are nonempty");

        return Ok(LassoFit {
            zero_flags: best.iter().map(|v| *v == 0.0).collect(),
            criterion_value: config.criterion(responses, &best),
            alpha_hat: best,
            widenings,
        });
    }
    unreachable!("loop returns or errors on the last widening")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, lambda0: f64, seed: u64) -> LassoConfig {
        let design = generate_lasso_design(n, 2, &SeedStream::new(seed, 1)).unwrap();
        LassoConfig::new(vec![1.0, 0.0], 0.5, lambda0, 1.0, design).unwrap()
    }

    #[test]
    fn design_is_centered_and_near_its_limit() {
        let d = generate_lasso_design(100_000, 2, &SeedStream::new(3, 3)).unwrap();
        for m in d.column_means() {
            assert!(m.abs() < 1e-12);
        }
        let c = d.second_moment();
        for j in 0..2 {
            for k in 0..2 {
                let target = if j == k { 1.0 / 3.0 } else { 0.0 };
                assert!((c[(j, k)] - target).abs() < 0.02);
            }
        }
        assert!(d.max_row_norm_sq() / 100_000.0 <= 2.0 * 4.0 / 100_000.0);
        let small = generate_lasso_design(50, 2, &SeedStream::new(3, 4)).unwrap();
        // centered entries are bounded by 2 in absolute value
        assert!(small.max_row_norm_sq() <= 8.0);
    }

    #[test]
    fn design_needs_enough_rows() {
        assert!(generate_lasso_design(2, 2, &SeedStream::new(0, 0)).is_err());
    }

    #[test]
    fn zero_penalty_gives_ols() {
        let cfg = config(400, 0.0, 1);
        let y = cfg.simulate_responses(&mut SeedStream::new(1, 2).rng());
        let fit = fit_bridge_lasso(&y, &cfg).unwrap();
        let resid: Vec<f64> = cfg
            .design
            .predict(&fit.alpha_hat)
            .iter()
            .zip(&y)
            .map(|(p, y)| y - p)
            .collect();
        let mut normal = [0.0; 2];
        for (r, e) in cfg.design.rows().zip(&resid) {
            normal[0] += r[0] * e;
            normal[1] += r[1] * e;
        }
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            (normal[0].powi(2) + normal[1].powi(2)).sqrt() <= 1e-6 * ynorm,
            "{normal:?}"
        );
        assert_eq!(fit.zero_flags, vec![false, false]);
    }

    #[test]
    fn zero_responses_give_exact_zero() {
        let cfg = config(50, 1.0, 2);
        let fit = fit_bridge_lasso(&vec![0.0; 50], &cfg).unwrap();
        assert_eq!(fit.alpha_hat, vec![0.0, 0.0]);
        assert_eq!(fit.zero_flags, vec![true, true]);
        assert_eq!(fit.criterion_value, 0.0);
    }

    #[test]
    fn matches_brute_force_grid_on_small_instances() {
        for seed in 0..50 {
            let cfg = config(6, 2.0, 100 + seed);
            let y = cfg.simulate_responses(&mut SeedStream::new(100 + seed, 2).rng());
            let fit = fit_bridge_lasso(&y, &cfg).unwrap();

            // brute force over the same box, with the zero lines included
            let crit = Criterion::new(&cfg, &y).unwrap();
            let hw = 4.0 * (crit.rss / 4.0).sqrt().max(1.0) * 2f64.powi(fit.widenings as i32);
            let xs = linspace_with_zero(crit.ols[0] - hw, crit.ols[0] + hw, 2001);
            let ys = linspace_with_zero(crit.ols[1] - hw, crit.ols[1] + hw, 2001);
            let mut brute = f64::INFINITY;
            for &a in &xs {
                for &b in &ys {
                    brute = brute.min(cfg.criterion(&y, &[a, b]));
                }
            }
            assert!(
                fit.criterion_value <= brute * (1.0 + 1e-12),
                "seed {seed}: {} > {brute}",
                fit.criterion_value
            );
            assert!((brute - fit.criterion_value) / brute <= 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn never_worse_than_ols_or_origin_and_symmetric() {
        for seed in 0..20 {
            let cfg = config(80, 1.5, 200 + seed);
            let y = cfg.simulate_responses(&mut SeedStream::new(200 + seed, 5).rng());
            let fit = fit_bridge_lasso(&y, &cfg).unwrap();
            let crit = Criterion::new(&cfg, &y).unwrap();
            assert!(fit.criterion_value <= cfg.criterion(&y, crit.ols.as_slice()) * (1.0 + 1e-12));
            assert!(fit.criterion_value <= cfg.criterion(&y, &[0.0, 0.0]) * (1.0 + 1e-12));
            assert_eq!(
                fit.zero_flags,
                fit.alpha_hat.iter().map(|v| *v == 0.0).collect::<Vec<_>>()
            );

            // swapping the design columns swaps the solution
            let swapped_rows: Vec<Vec<f64>> = cfg.design.rows().map(|r| vec![r[1], r[0]]).collect();
            let swapped = LassoConfig::new(
                vec![0.0, 1.0],
                0.5,
                1.5,
                1.0,
                Design::from_rows(&swapped_rows).unwrap(),
            )
            .unwrap();
            let sfit = fit_bridge_lasso(&y, &swapped).unwrap();
            assert!(
                (sfit.criterion_value - fit.criterion_value).abs() <= 1e-9 * fit.criterion_value
            );
            assert!((sfit.alpha_hat[0] - fit.alpha_hat[1]).abs() < 1e-6);
            assert!((sfit.alpha_hat[1] - fit.alpha_hat[0]).abs() < 1e-6);
            assert_eq!(sfit.zero_flags[0], fit.zero_flags[1]);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = config(200, 2.0, 9);
        let y = cfg.simulate_responses(&mut SeedStream::new(9, 9).rng());
        assert_eq!(
            fit_bridge_lasso(&y, &cfg).unwrap(),
            fit_bridge_lasso(&y, &cfg).unwrap()
        );
    }

    #[test]
    fn input_validation() {
        let cfg = config(20, 1.0, 4);
        assert!(fit_bridge_lasso(&[0.0; 3], &cfg).is_err());
        let mut bad = cfg.clone();
        bad.gamma = 1.5;
        assert!(bad.validate().is_err());
        let uncentered =
            Design::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]]).unwrap();
        assert!(LassoConfig::new(vec![1.0, 0.0], 0.5, 1.0, 1.0, uncentered).is_err());
    }
}
