//! Binomial confidence intervals and summary statistics.

use statrs::distribution::{Beta, ContinuousCDF};

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion at the given confidence level.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n > 0");
    let tail = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).expect("valid shape").inverse_cdf(tail) };
    let hi = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).expect("valid shape").inverse_cdf(1.0 - tail) };
    (lo, hi)
}

/// 99% interval used by every verdict.
pub fn ci99(k: usize, n: usize) -> (f64, f64) {
    clopper_pearson(k, n, 0.99)
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Smallest value `b` among the samples with empirical `P(X <= b) >= q`.
pub fn lower_quantile(xs: &[usize], q: f64) -> usize {
    let mut v = xs.to_vec();
    v.sort_unstable();
    let n = v.len();
    for (i, &b) in v.iter().enumerate() {
        if (i + 1) as f64 >= q * n as f64 - 1e-9 && (i + 1 == n || v[i + 1] != b) {
            return b;
        }
    }
    v.last().copied().unwrap_or(0)
}
