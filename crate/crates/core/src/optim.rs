//! Small derivative-free minimizers shared by the estimators and limit samplers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimizer of a unimodal `f` on `[lo, hi]`.
/// Returns `(x, f(x))`, also comparing against the two endpoints.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct PatternSearch {
    pub initial_step: f64,
    pub rounds: usize,
    /// Steps grow by this factor after a successful round.
    pub expand: f64,
}

/// Relative decrease a probe must achieve to count as an improvement; smaller
/// changes are summation rounding.
const MIN_REL_DECREASE: f64 = 1e-14;

/// Compass search: probe `±step` along each coordinate, keep strict improvements,
/// halve the step after a round with none. Never returns a worse point than `x0`.
pub fn pattern_search<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    cfg: PatternSearch,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = cfg.initial_step;
    let mut trial = x.clone();
    for _ in 0..cfg.rounds {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] += sign * step;
                let ft = f(&trial);
                if ft < fx - MIN_REL_DECREASE * fx.abs() {
                    fx = ft;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if improved {
            step *= cfg.expand;
        } else {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Index of the minimum over a 2-D grid, ties broken toward the origin and then
/// lexicographically by `(x, y)`.
pub fn grid_argmin_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    xs: &[f64],
    ys: &[f64],
) -> (f64, f64, f64) {
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for &x in xs {
        for &y in ys {
            let v = f(x, y);
            let better = v < best.2
                || (v == best.2 && {
                    let (r_new, r_old) = (x * x + y * y, best.0 * best.0 + best.1 * best.1);
                    r_new < r_old || (r_new == r_old && (x, y) < (best.0, best.1))
                });
            if better {
                best = (x, y, v);
            }
        }
    }
    best
}

/// `count` equispaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let h = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect()
}

/// Equispaced grid with the value `0.0` inserted when it lies strictly inside.
pub fn linspace_with_zero(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut v = linspace(lo, hi, count);
    if lo < 0.0 && hi > 0.0 && !v.contains(&0.0) {
        let pos = v.partition_point(|&x| x < 0.0);
        v.insert(pos, 0.0);
    }
    v
}
