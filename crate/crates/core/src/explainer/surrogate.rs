use std::cmp::Ordering;

use super::SurrogateSample;
use crate::{Error, Real, Result};

/// Linear model over the interpretable features, after top-k selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSurrogate<T> {
    /// One weight per feature; features outside `selected` are zero.
    pub weights: Vec<T>,
    pub intercept: T,
    pub l2_lambda: T,
    pub top_k_limit: usize,
    /// Retained features, by descending |weight| then ascending index.
    pub selected: Vec<usize>,
    /// Every sample had the same interpretable point.
    pub degenerate: bool,
}

impl<T: Real> LinearSurrogate<T> {
    pub fn predict(&self, z: &[bool]) -> T {
        z.iter()
            .zip(&self.weights)
            .filter(|(&on, _)| on)
            .fold(self.intercept, |acc, (_, &w)| acc + w)
    }
}

/// Unrestricted weighted ridge solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub degenerate: bool,
}

/// Minimises `sum_s pi_s (y_s - b - w.z_s)^2 + lambda |w|^2` with the
/// intercept `b` unpenalised.
///
/// Centring by the weighted means removes `b`, leaving the normal equations
/// `(Zc' P Zc + lambda I) w = Zc' P yc`, solved by Cholesky; then
/// `b = y_mean - w.z_mean`.
pub fn weighted_ridge<T: Real>(samples: &[SurrogateSample<T>], l2_lambda: T) -> Result<RidgeSolution<T>> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "surrogate fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(l2_lambda >= T::zero() && l2_lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2_lambda must be >= 0, got {l2_lambda}"
        )));
    }
    let dims = samples[0].z.dims();
    for (i, s) in samples.iter().enumerate() {
        if s.z.dims() != dims {
            return Err(Error::InvalidArgument(format!(
                "sample {i} has {} features, expected {dims}",
                s.z.dims()
            )));
        }
        if !(s.weight > T::zero() && s.weight.is_finite()) || !s.target.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sample {i} has weight {} and target {}; need a positive weight and finite target",
                s.weight, s.target
            )));
        }
    }

    let total: T = samples.iter().map(|s| s.weight).sum();
    let mut z_mean = vec![T::zero(); dims];
    let mut y_mean = T::zero();
    for s in samples {
        for f in s.z.active() {
            z_mean[f] = z_mean[f] + s.weight;
        }
        y_mean = y_mean + s.weight * s.target;
    }
    z_mean.iter_mut().for_each(|m| *m = *m / total);
    y_mean = y_mean / total;

    let degenerate = samples.iter().all(|s| s.z == samples[0].z);

    let mut gram = vec![vec![T::zero(); dims]; dims];
    let mut rhs = vec![T::zero(); dims];
    let mut centred = vec![T::zero(); dims];
    for s in samples {
        for (f, c) in centred.iter_mut().enumerate() {
            *c = if s.z.get(f) { T::one() } else { T::zero() } - z_mean[f];
        }
        let dy = s.target - y_mean;
        for a in 0..dims {
            let wa = s.weight * centred[a];
            rhs[a] = rhs[a] + wa * dy;
            for b in 0..=a {
                gram[a][b] = gram[a][b] + wa * centred[b];
            }
        }
    }
    for a in 0..dims {
        gram[a][a] = gram[a][a] + l2_lambda;
        for b in 0..a {
            gram[b][a] = gram[a][b];
        }
    }

    let weights = cholesky_solve(gram, rhs)?;
    let intercept = y_mean - weights.iter().zip(&z_mean).fold(T::zero(), |acc, (&w, &m)| acc + w * m);
    Ok(RidgeSolution {
        weights,
        intercept,
        degenerate,
    })
}

/// Solves `a x = b` for symmetric positive definite `a`.
fn cholesky_solve<T: Real>(mut a: Vec<Vec<T>>, b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(T::one(), T::max);
    let tol = T::epsilon() * T::lit(1024.0) * scale;
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - a[j][k] * a[j][k];
        }
        if d <= tol {
            return Err(Error::RankDeficient);
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    // L y = b, then L' x = y
    let mut y = b;
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - a[i][k] * y[k];
        }
        y[i] = y[i] / a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - a[k][i] * y[k];
        }
        y[i] = y[i] / a[i][i];
    }
    Ok(y)
}

/// Feature order by descending |weight|, ties to the lower index.
fn by_magnitude<T: Real>(weights: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .abs()
            .partial_cmp(&weights[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Weighted ridge fit followed by keeping the `top_k` largest |weights|.
pub fn fit_surrogate<T: Real>(
    samples: &[SurrogateSample<T>],
    l2_lambda: T,
    top_k: usize,
) -> Result<LinearSurrogate<T>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let RidgeSolution {
        mut weights,
        intercept,
        degenerate,
    } = weighted_ridge(samples, l2_lambda)?;
    let mut selected = by_magnitude(&weights);
    selected.truncate(top_k);
    let mut keep = vec![false; weights.len()];
    for &f in &selected {
        keep[f] = true;
    }
    for (w, k) in weights.iter_mut().zip(keep) {
        if !k {
            *w = T::zero();
        }
    }
    Ok(LinearSurrogate {
        weights,
        intercept,
        l2_lambda,
        top_k_limit: top_k,
        selected,
        degenerate,
    })
}
