//! Small statistical toolbox: compensated summation, sample moments,
//! Kolmogorov–Smirnov distances and Monte Carlo standard errors.

use statrs::distribution::{ContinuousCDF, Normal};

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Compensated sum of a slice.
pub fn ksum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    ksum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add((x - m) * (x - m));
    }
    acc.value() / (n - 1) as f64
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut acc = KahanSum::new();
    for i in 0..n {
        acc.add((xs[i] - mx) * (ys[i] - my));
    }
    acc.value() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean and standard error from streaming sums (count, sum, sum of squares).
pub fn mean_se_from_sums(n: u64, sum: f64, sumsq: f64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let m = sum / nf;
    if n == 1 {
        return (m, f64::NAN);
    }
    let var = ((sumsq - nf * m * m) / (nf - 1.0)).max(0.0);
    (m, (var / nf).sqrt())
}

pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    let mut acc = KahanSum::new();
    for &x in xs {
        let z = (x - m) / sd;
        acc.add(z * z * z);
    }
    acc.value() / n
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    let mut acc = KahanSum::new();
    for &x in xs {
        let z = (x - m) / sd;
        acc.add(z * z * z * z);
    }
    acc.value() / n - 3.0
}

/// KS distance between the empirical cdf of `samples` and Uniform(0,1).
/// Samples need not be sorted.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks_sorted_vs_cdf(&xs, |x| x.clamp(0.0, 1.0))
}

/// KS distance between the empirical cdf of `samples` and the normal fitted
/// by sample mean and standard deviation.
pub fn ks_fitted_normal(samples: &[f64]) -> f64 {
    let m = mean(samples);
    let sd = variance(samples).sqrt();
    let normal = Normal::new(m, sd).expect("degenerate sample for normal fit");
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks_sorted_vs_cdf(&xs, |x| normal.cdf(x))
}

fn ks_sorted_vs_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_cancellation() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn moments_on_known_data() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((std_error(&xs) - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_uniform_on_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&xs) < 1e-3 + 1e-12);
    }

    #[test]
    fn ks_detects_non_uniform() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64 + 0.5) / 1000.0).powi(2)).collect();
        assert!(ks_uniform(&xs) > 0.2);
    }
}
