//! Sample means, binomial errors and straight-line fits.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Mean {
    /// Mean and standard error of `xs`, summed in slice order.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as u64;
        if n == 0 {
            return Self {
                value: 0.0,
                stderr: 0.0,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            value: mean,
            stderr,
            n,
        }
    }

    pub fn of_counts(xs: &[u64]) -> Self {
        let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        Self::of(&v)
    }

    /// Proportion with the plug-in binomial standard error.
    pub fn binomial(successes: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                value: 0.0,
                stderr: 0.0,
                n,
            };
        }
        let f = successes as f64 / n as f64;
        Self {
            value: f,
            stderr: (f * (1.0 - f) / n as f64).sqrt(),
            n,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            stderr: self.stderr * c.abs(),
            n: self.n,
        }
    }
}

/// `sqrt(a^2 + b^2 + ...)`.
pub fn combine_errors(errs: &[f64]) -> f64 {
    errs.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Standard error of a product of independent estimates (delta method).
pub fn product_stderr(factors: &[Mean]) -> f64 {
    let total: f64 = factors.iter().map(|m| m.value).product();
    let rel: f64 = factors
        .iter()
        .map(|m| {
            if m.value == 0.0 {
                0.0
            } else {
                (m.stderr / m.value).powi(2)
            }
        })
        .sum();
    total.abs() * rel.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub points: usize,
}

/// Least-squares line through `(xs, ys)`.
///
/// With strictly positive `sigmas` the fit is weighted by `1/sigma^2` and
/// the slope error is the known-variance one. Otherwise ordinary least
/// squares with the residual error (zero for collinear points). `None` for
/// fewer than two points or degenerate `xs`.
pub fn fit_line(xs: &[f64], ys: &[f64], sigmas: Option<&[f64]>) -> Option<LinearFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let weights: Option<Vec<f64>> = sigmas.and_then(|s| {
        assert_eq!(s.len(), n);
        s.iter()
            .all(|&e| e > 0.0 && e.is_finite())
            .then(|| s.iter().map(|e| 1.0 / (e * e)).collect())
    });
    let w: Vec<f64> = weights.clone().unwrap_or_else(|| vec![1.0; n]);
    let sw: f64 = w.iter().sum();
    let xbar = w.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = w.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = w
        .iter()
        .zip(xs.iter().zip(ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let slope_se = if weights.is_some() {
        (1.0 / sxx).sqrt()
    } else if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
        points: n,
    })
}
