//! Streaming ensemble statistics for Monte Carlo estimators.

use num_complex::Complex64;
use serde::Serialize;

use crate::rng::RngStream;

/// Welford accumulator: numerically stable running mean and variance.
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (n - 1 denominator); 0 for fewer than 2 samples.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn sample_std(&self) -> f64 {
        self.sample_variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.sample_variance() / self.n as f64).sqrt()
        }
    }
}

/// Componentwise accumulator for complex-valued samples.
#[derive(Debug, Clone, Default)]
pub struct ComplexStats {
    re: RunningStats,
    im: RunningStats,
}

impl ComplexStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn n(&self) -> u64 {
        self.re.n()
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean(), self.im.mean())
    }

    pub fn stderr_re(&self) -> f64 {
        self.re.stderr()
    }

    pub fn stderr_im(&self) -> f64 {
        self.im.stderr()
    }
}

/// A finished Monte Carlo average with per-component standard errors and the
/// seed metadata needed to re-derive it.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub n_samples: u64,
    pub stream: RngStream,
    pub warnings: Vec<String>,
}

impl MonteCarloEstimate {
    pub fn from_stats(stats: &ComplexStats, stream: RngStream) -> Self {
        Self {
            mean: stats.mean(),
            stderr_re: stats.stderr_re(),
            stderr_im: stats.stderr_im(),
            n_samples: stats.n(),
            stream,
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, warning: String) -> Self {
        self.warnings.push(warning);
        self
    }

    /// Euclidean norm of the two component standard errors; a conservative
    /// scale for |mean - reference| comparisons.
    pub fn combined_stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }
}

/// Median by partial sort; the slice order is clobbered.
pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty slice");
    let n = xs.len();
    let (_, mid, _) = xs.select_nth_unstable_by(n / 2, f64::total_cmp);
    let hi = *mid;
    if n % 2 == 1 {
        hi
    } else {
        let (_, lo, _) = xs.select_nth_unstable_by(n / 2 - 1, f64::total_cmp);
        0.5 * (*lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn running_stats_match_two_pass_reference() {
        let xs = [2.0, -1.0, 0.5, 3.25, -0.75, 1.0, 4.0, -2.5];
        let mut acc = RunningStats::new();
        for &x in &xs {
            acc.push(x);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert_abs_diff_eq!(acc.mean(), mean, epsilon = 1e-14);
        assert_abs_diff_eq!(acc.sample_variance(), var, epsilon = 1e-14);
        assert_abs_diff_eq!(acc.stderr(), (var / n).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_counts() {
        let mut acc = RunningStats::new();
        assert_eq!(acc.stderr(), 0.0);
        acc.push(7.0);
        assert_eq!(acc.mean(), 7.0);
        assert_eq!(acc.sample_variance(), 0.0);
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_n() {
        // Deterministic alternating sequence: variance is constant, so the
        // stderr ratio between n and 4n must be exactly 2.
        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        for i in 0..400 {
            let x = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i < 100 {
                a.push(x);
            }
            b.push(x);
        }
        let ratio = a.stderr() / b.stderr();
        assert_abs_diff_eq!(ratio, 2.0, epsilon = 1e-2);
    }

    #[test]
    fn complex_components_track_independently() {
        let mut acc = ComplexStats::new();
        acc.push(Complex64::new(1.0, -2.0));
        acc.push(Complex64::new(3.0, 2.0));
        assert_abs_diff_eq!(acc.mean().re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(acc.mean().im, 0.0, epsilon = 1e-15);
        assert!(acc.stderr_re() > 0.0 && acc.stderr_im() > 0.0);
    }

    #[test]
    fn median_odd_and_even() {
        let mut odd = [3.0, 1.0, 2.0];
        assert_eq!(median(&mut odd), 2.0);
        let mut even = [4.0, 1.0, 3.0, 2.0];
        assert_abs_diff_eq!(median(&mut even), 2.5, epsilon = 1e-15);
    }
}
