//! Source distributions and processes used by the experiments.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// A point `(x, y)` in the plane.
pub type Point = [f64; 2];

/// One standard double-exponential draw (density `e^{-|y|}/2`) by inverse CDF.
#[inline]
pub fn laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let e = -(1.0 - u).ln();
    if rng.random::<bool>() {
        e
    } else {
        -e
    }
}

pub fn sample_laplace(n: usize, stream: &SeedStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    let mut rng = stream.rng();
    Ok((0..n).map(|_| laplace(&mut rng)).collect())
}

/// Draws from the planar law with half its mass on each of the lines `{y = -1}`
/// and `{y = 1}` and a double-exponential `x` along each line.
///
/// With this law both `{(-1, 0), (1, 0)}` and `{(0, -1), (0, 1)}` are optimal
/// 2-means configurations; the first has a vertical split line crossing both
/// lines of support where the density is positive.
pub fn sample_two_line_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = laplace(rng);
            let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
            [x, y]
        })
        .collect()
}

pub fn sample_two_line(n: usize, stream: &SeedStream) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    Ok(sample_two_line_with(n, &mut stream.rng()))
}

/// Symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
}

impl CovMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter("covariance must be square".into()));
        }
        let d = entries.nrows();
        let scale = entries.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("covariance must be square".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Symmetric square root `S` with `S S = Σ`. Eigenvalues down to `-1e-10·‖Σ‖`
    /// are treated as rounding and clipped to zero.
    pub fn sqrt(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let scale = self.entries.amax().max(f64::MIN_POSITIVE);
        let min = eig.eigenvalues.min();
        if min < -1e-10 * scale {
            return Err(Error::IndefiniteCovariance(min));
        }
        let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
    }
}

/// Reusable `N(0, Σ)` sampler holding the square-root factor.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    root: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &CovMatrix) -> Result<Self> {
        Ok(Self { root: cov.sqrt()? })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.root * z
    }
}

pub fn sample_gaussian_vector(cov: &CovMatrix, stream: &SeedStream) -> Result<Vec<f64>> {
    let sampler = GaussianSampler::new(cov)?;
    Ok(sampler.sample(&mut stream.rng()).iter().copied().collect())
}

/// Two-sided Brownian motion on the grid `{-T, -T+h, ..., T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub horizon: f64,
    pub step: f64,
    /// `values[half_len + k] = B(k·h)` for `k = -half_len..=half_len`.
    pub values: Vec<f64>,
}

impl BrownianPath {
    pub fn half_len(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn time(&self, index: usize) -> f64 {
        (index as f64 - self.half_len() as f64) * self.step
    }

    /// Value at the grid point nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = (t / self.step).round() as i64 + self.half_len() as i64;
        self.values[k.clamp(0, self.values.len() as i64 - 1) as usize]
    }
}

/// Number of grid steps on each side of the origin, validating `T/h` is integral.
pub fn grid_half_len(horizon: f64, step: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(step > 0.0 && step <= horizon) {
        return Err(Error::InvalidParameter(format!(
            "step must lie in (0, T], got h = {step} with T = {horizon}"
        )));
    }
    let ratio = horizon / step;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "T/h must be an integer, got {ratio}"
        )));
    }
    Ok(k as usize)
}

/// Fills `values` (length `2k + 1`) with a two-sided path pinned at the center.
pub fn fill_brownian<R: Rng + ?Sized>(values: &mut [f64], step: f64, rng: &mut R) {
    let k = (values.len() - 1) / 2;
    let sd = step.sqrt();
    values[k] = 0.0;
    let mut acc = 0.0;
    for v in values[k + 1..].iter_mut() {
        acc += sd * rng.sample::<f64, _>(StandardNormal);
        *v = acc;
    }
    acc = 0.0;
    for v in values[..k].iter_mut().rev() {
        acc += sd * rng.sample::<f64, _>(StandardNormal);
        *v = acc;
    }
}

pub fn sample_brownian_path_with<R: Rng + ?Sized>(
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<BrownianPath> {
    let k = grid_half_len(horizon, step)?;
    let mut values = vec![0.0; 2 * k + 1];
    fill_brownian(&mut values, step, rng);
    Ok(BrownianPath {
        horizon,
        step,
        values,
    })
}

pub fn sample_brownian_path(horizon: f64, step: f64, stream: &SeedStream) -> Result<BrownianPath> {
    sample_brownian_path_with(horizon, step, &mut stream.rng())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn cov(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (a.len() - 1) as f64
    }

    #[test]
    fn laplace_is_deterministic_and_has_the_right_moments() {
        let s = SeedStream::new(11, 0);
        let a = sample_laplace(1_000_000, &s).unwrap();
        assert_eq!(a, sample_laplace(1_000_000, &s).unwrap());
        let m = mean(&a);
        let var = a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / a.len() as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((var - 2.0).abs() < 0.05, "var {var}");
        let half = a.iter().filter(|x| x.abs() <= 2f64.ln()).count() as f64 / a.len() as f64;
        assert!((half - 0.5).abs() < 0.01, "{half}");
    }

    #[test]
    fn zero_size_is_rejected() {
        assert!(sample_laplace(0, &SeedStream::new(0, 0)).is_err());
        assert!(sample_two_line(0, &SeedStream::new(0, 0)).is_err());
    }

    #[test]
    fn two_line_support_and_tied_configurations() {
        let pts = sample_two_line(1_000_000, &SeedStream::new(5, 1)).unwrap();
        assert!(pts.iter().all(|p| p[1] == 1.0 || p[1] == -1.0));
        let upper = pts.iter().filter(|p| p[1] == 1.0).count() as f64 / pts.len() as f64;
        assert!((upper - 0.5).abs() < 0.005);
        // vertical split: centers (±1, 0)
        let w_v = pts
            .iter()
            .map(|p| (p[0].abs() - 1.0).powi(2) + 1.0)
            .sum::<f64>()
            / pts.len() as f64;
        // horizontal split: centers (0, ±1)
        let w_h = pts.iter().map(|p| p[0] * p[0]).sum::<f64>() / pts.len() as f64;
        assert!((w_v - 2.0).abs() < 0.05, "{w_v}");
        assert!((w_h - 2.0).abs() < 0.05, "{w_h}");
    }

    #[test]
    fn gaussian_vector_zero_and_identity() {
        let zero = CovMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            sample_gaussian_vector(&zero, &SeedStream::new(1, 1)).unwrap(),
            vec![0.0, 0.0]
        );

        let sampler = GaussianSampler::new(&CovMatrix::identity(3)).unwrap();
        let mut rng = SeedStream::new(2, 2).rng();
        let draws: Vec<_> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        let col = |i: usize| draws.iter().map(|d| d[i]).collect::<Vec<_>>();
        for i in 0..3 {
            assert!((cov(&col(i), &col(i)) - 1.0).abs() < 0.03);
            for j in 0..i {
                let r =
                    cov(&col(i), &col(j)) / (cov(&col(i), &col(i)) * cov(&col(j), &col(j))).sqrt();
                assert!(r.abs() < 0.02, "corr({i},{j}) = {r}");
            }
        }
    }

    #[test]
    fn gaussian_vector_general_covariance_within_standard_errors() {
        let sigma = [[2.0, -0.7], [-0.7, 0.5]];
        let cm = CovMatrix::from_rows(&[sigma[0].to_vec(), sigma[1].to_vec()]).unwrap();
        let sampler = GaussianSampler::new(&cm).unwrap();
        let mut rng = SeedStream::new(3, 9).rng();
        let n = 100_000;
        let draws: Vec<_> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for i in 0..2 {
            for j in 0..2 {
                let a: Vec<f64> = draws.iter().map(|d| d[i]).collect();
                let b: Vec<f64> = draws.iter().map(|d| d[j]).collect();
                // Gaussian fourth moments: Var(X_i X_j) = Σii Σjj + Σij²
                let se = ((sigma[i][i] * sigma[j][j] + sigma[i][j].powi(2)) / n as f64).sqrt();
                let est = cov(&a, &b);
                assert!((est - sigma[i][j]).abs() < 5.0 * se, "({i},{j}) {est}");
            }
        }
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let bad = CovMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            GaussianSampler::new(&bad),
            Err(Error::IndefiniteCovariance(_))
        ));
        assert!(CovMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn brownian_path_is_pinned_and_has_min_covariance() {
        let p = sample_brownian_path(1.0, 0.01, &SeedStream::new(4, 4)).unwrap();
        assert_eq!(p.values.len(), 201);
        assert_eq!(p.values[100], 0.0);
        assert_eq!(p.at(0.0), 0.0);

        let mut rng = SeedStream::new(4, 5).rng();
        let mut cols: [Vec<f64>; 4] = Default::default();
        for _ in 0..10_000 {
            let p = sample_brownian_path_with(1.0, 0.01, &mut rng).unwrap();
            for (c, t) in cols.iter_mut().zip([1.0, -1.0, 0.5, -0.5]) {
                c.push(p.at(t));
            }
        }
        assert!((cov(&cols[0], &cols[0]) - 1.0).abs() < 0.05);
        assert!((cov(&cols[1], &cols[1]) - 1.0).abs() < 0.05);
        assert!((cov(&cols[2], &cols[0]) - 0.5).abs() < 0.05);
        assert!(cov(&cols[3], &cols[0]).abs() < 0.05);
    }

    #[test]
    fn brownian_parameter_validation() {
        let s = SeedStream::new(0, 0);
        assert!(sample_brownian_path(0.0, 0.1, &s).is_err());
        assert!(sample_brownian_path(1.0, 2.0, &s).is_err());
        assert!(sample_brownian_path(1.0, 0.3, &s).is_err());
        assert!(sample_brownian_path(1.0, 0.25, &s).is_ok());
    }

    #[test]
    fn streams_are_uncorrelated() {
        let a = sample_laplace(100_000, &SeedStream::new(9, 1)).unwrap();
        let b = sample_laplace(100_000, &SeedStream::new(9, 2)).unwrap();
        let r = cov(&a, &b) / (cov(&a, &a) * cov(&b, &b)).sqrt();
        // 4 standard errors of a null correlation at this size
        assert!(r.abs() < 4.0 / (100_000f64).sqrt(), "{r}");
    }
}
