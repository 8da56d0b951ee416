//! Two-means clustering started from one of the two tied population configurations.

use serde::{Deserialize, Serialize};

use crate::distributions::Point;
use crate::error::{Error, Result};
use crate::optim::{pattern_search, PatternSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KmeansInit {
    /// `{(-1, 0), (1, 0)}`, vertical split line.
    Cv,
    /// `{(0, -1), (0, 1)}`, horizontal split line.
    Ch,
}

impl KmeansInit {
    pub fn name(self) -> &'static str {
        match self {
            KmeansInit::Cv => "cv",
            KmeansInit::Ch => "ch",
        }
    }

    pub fn centers(self) -> [Point; 2] {
        match self {
            KmeansInit::Cv => [[-1.0, 0.0], [1.0, 0.0]],
            KmeansInit::Ch => [[0.0, -1.0], [0.0, 1.0]],
        }
    }
}

/// Local coordinates of a center pair around its reference configuration.
///
/// `a = (δ_s, ε_d)` moves the split line (translation and tilt), `b = (δ_d, ε_s)`
/// spreads the centers and shifts them along the split line. For `Ch` the same map
/// is applied with the roles of the two axes exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmeansCoords {
    pub delta_s: f64,
    pub eps_d: f64,
    pub delta_d: f64,
    pub eps_s: f64,
}

impl KmeansCoords {
    /// Coordinates of `[c1, c2]` relative to `{(-1, 0), (1, 0)}`, with `c1` near `(-1, 0)`.
    pub fn from_centers(c: &[Point; 2]) -> Self {
        let ([c1x, c1y], [c2x, c2y]) = (c[0], c[1]);
        Self {
            delta_s: 0.5 * (c1x + c2x),
            delta_d: 1.0 + 0.5 * (c1x - c2x),
            eps_d: 0.5 * (c1y - c2y),
            eps_s: 0.5 * (c1y + c2y),
        }
    }

    pub fn to_centers(&self) -> [Point; 2] {
        [
            [self.delta_s + self.delta_d - 1.0, self.eps_s + self.eps_d],
            [self.delta_s - self.delta_d + 1.0, self.eps_s - self.eps_d],
        ]
    }

    /// `(δ_s, ε_d, δ_d, ε_s)`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.delta_s, self.eps_d, self.delta_d, self.eps_s]
    }

    pub fn a_norm(&self) -> f64 {
        self.delta_s.hypot(self.eps_d)
    }

    pub fn b_norm(&self) -> f64 {
        self.delta_d.hypot(self.eps_s)
    }
}

pub const COMPONENT_LABELS: [&str; 4] = ["delta_s", "eps_d", "delta_d", "eps_s"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmeansFit {
    pub init: KmeansInit,
    pub coords: KmeansCoords,
    pub centers: [Point; 2],
    /// `n⁻¹ Σ minⱼ ‖xᵢ − cⱼ‖²`.
    pub w_n: f64,
    pub lloyd_iterations: usize,
    /// A cluster emptied during Lloyd and was re-seeded.
    pub reseeded: bool,
    /// The solution left the Hausdorff ball of radius 1/2 around the init.
    pub left_neighborhood: bool,
}

/// Empirical within-cluster criterion; Euclidean ties go to the first center.
pub fn within_ss(sample: &[Point], centers: &[Point; 2]) -> f64 {
    let [c1, c2] = centers;
    let total: f64 = sample
        .iter()
        .map(|p| {
            let d1 = (p[0] - c1[0]).powi(2) + (p[1] - c1[1]).powi(2);
            let d2 = (p[0] - c2[0]).powi(2) + (p[1] - c2[1]).powi(2);
            d1.min(d2)
        })
        .sum();
    total / sample.len() as f64
}

fn sq_dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn hausdorff(a: &[Point; 2], b: &[Point; 2]) -> f64 {
    let directed = |x: &[Point; 2], y: &[Point; 2]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| sq_dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centers: [Point; 2],
    /// `W_n` at the start and after every center update.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub reseeded: bool,
}

pub const LLOYD_MAX_ITER: usize = 200;

pub fn lloyd(sample: &[Point], start: [Point; 2], max_iter: usize) -> LloydRun {
    let mut centers = start;
    let mut assign: Vec<bool> = Vec::new();
    let mut history = vec![within_ss(sample, &centers)];
    let mut reseeded = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        // true = second center
        let next: Vec<bool> = sample
            .iter()
            .map(|p| sq_dist(p, &centers[1]) < sq_dist(p, &centers[0]))
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        iterations += 1;
        let mut sums = [[0.0f64; 3]; 2];
        for (p, &second) in sample.iter().zip(&assign) {
            let s = &mut sums[second as usize];
            s[0] += p[0];
            s[1] += p[1];
            s[2] += 1.0;
        }
        for j in 0..2 {
            if sums[j][2] > 0.0 {
                centers[j] = [sums[j][0] / sums[j][2], sums[j][1] / sums[j][2]];
            }
        }
        for j in 0..2 {
            if sums[j][2] == 0.0 {
                let other = centers[1 - j];
                let far = sample
                    .iter()
                    .copied()
                    .max_by(|p, q| sq_dist(p, &other).total_cmp(&sq_dist(q, &other)))
                    .expect("nonempty sample");
                centers[j] = far;
                reseeded = true;
                assign.clear();
            }
        }
        history.push(within_ss(sample, &centers));
    }
    LloydRun {
        centers,
        history,
        iterations,
        reseeded,
    }
}

fn to_frame(init: KmeansInit, p: Point) -> Point {
    match init {
        KmeansInit::Cv => p,
        KmeansInit::Ch => [p[1], p[0]],
    }
}

/// Local 2-means solution from `init`: Lloyd iterations then a compass-search polish.
pub fn fit_kmeans2(sample: &[Point], init: KmeansInit) -> Result<KmeansFit> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "k-means needs n >= 4, got {n}"
        )));
    }
    if sample
        .iter()
        .any(|p| !(p[0].is_finite() && p[1].is_finite()))
    {
        return Err(Error::InvalidParameter(
            "sample contains non-finite points".into(),
        ));
    }
    let run = lloyd(sample, init.centers(), LLOYD_MAX_ITER);
    let x0 = [
        run.centers[0][0],
        run.centers[0][1],
        run.centers[1][0],
        run.centers[1][1],
    ];
    let cfg = PatternSearch {
        initial_step: 1e-3 * (n as f64).powf(-0.25),
        rounds: 40,
        expand: 2.0,
    };
    let (x, w_n) = pattern_search(
        |v| within_ss(sample, &[[v[0], v[1]], [v[2], v[3]]]),
        &x0,
        cfg,
    );
    let mut centers = [[x[0], x[1]], [x[2], x[3]]];

    // label so that the first center sits near the first reference center
    let key = |p: &Point| to_frame(init, *p)[0];
    if key(&centers[1]) < key(&centers[0]) {
        centers.swap(0, 1);
    }
    let framed = [to_frame(init, centers[0]), to_frame(init, centers[1])];
    Ok(KmeansFit {
        init,
        coords: KmeansCoords::from_centers(&framed),
        centers,
        w_n,
        lloyd_iterations: run.iterations,
        reseeded: run.reseeded,
        left_neighborhood: hausdorff(&centers, &init.centers()) > 0.5,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmeansGlobal {
    pub choice: KmeansInit,
    /// Both local criteria were exactly equal; the choice defaulted to `Cv`.
    pub tie: bool,
    pub fit_v: KmeansFit,
    pub fit_h: KmeansFit,
}

pub fn kmeans_global(sample: &[Point]) -> Result<KmeansGlobal> {
    let fit_v = fit_kmeans2(sample, KmeansInit::Cv)?;
    let fit_h = fit_kmeans2(sample, KmeansInit::Ch)?;
    let tie = fit_v.w_n == fit_h.w_n;
    let choice = if fit_h.w_n < fit_v.w_n {
        KmeansInit::Ch
    } else {
        KmeansInit::Cv
    };
    Ok(KmeansGlobal {
        choice,
        tie,
        fit_v,
        fit_h,
    })
}
