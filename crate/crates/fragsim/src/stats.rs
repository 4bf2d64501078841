//! Goodness-of-fit statistics: empirical CDFs, Kolmogorov-Smirnov
//! distances and thresholds, and pooled chi-square tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample size {0} is below the minimum of {1}")]
    TooFewSamples(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self, StatsError> {
        Ok(Self {
            sorted: sorted_finite(samples)?,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_n(x) - F(x)|`.
///
/// The supremum is taken at every distinct sample point and just below it,
/// so atoms of `cdf` located at sample values are handled exactly.
pub fn ks_stat<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, StatsError> {
    ks_core(&sorted_finite(samples)?, &cdf, f64::NEG_INFINITY)
}

/// `sup_{x >= lo} |F_n(x) - F(x)|`.
pub fn ks_stat_from<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, lo: f64) -> Result<f64, StatsError> {
    ks_core(&sorted_finite(samples)?, &cdf, lo)
}

fn ks_core(sorted: &[f64], cdf: &dyn Fn(f64) -> f64, lo: f64) -> Result<f64, StatsError> {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    if lo.is_finite() {
        let below = sorted.partition_point(|&v| v <= lo) as f64 / n;
        d = (below - cdf(lo)).abs();
    }
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        if x >= lo {
            d = d.max((j as f64 / n - cdf(x)).abs());
            if x > lo {
                d = d.max((i as f64 / n - cdf(x.next_down())).abs());
            }
        }
        i = j;
    }
    Ok(d)
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`. Values closer than
/// `tie_tol * max(1, |x|)` are treated as equal, so that the same lattice
/// point computed through different rounding paths does not register as
/// two distinct jumps.
pub fn ks_two_sample(a: &[f64], b: &[f64], tie_tol: f64) -> Result<f64, StatsError> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        let cut = x + tie_tol * x.abs().max(1.0);
        while i < a.len() && a[i] <= cut {
            i += 1;
        }
        while j < b.len() && b[j] <= cut {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Survival function of the Kolmogorov distribution,
/// `2 sum_{k >= 1} (-1)^(k-1) exp(-2 k^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // the alternating series converges slowly here and the value is 1
        // to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic Kolmogorov quantile `c(alpha)` with `P(K > c) = alpha`.
pub fn kolmogorov_quantile(alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidArgument(format!(
            "significance must be in (0, 1), got {}",
            alpha
        )));
    }
    let (mut lo, mut hi) = (0.2, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One-sample rejection threshold `c(alpha) / sqrt(n)`.
pub fn ks_threshold(n: usize, alpha: f64) -> Result<f64, StatsError> {
    if n < 50 {
        return Err(StatsError::TooFewSamples(n, 50));
    }
    Ok(kolmogorov_quantile(alpha)? / (n as f64).sqrt())
}

/// Two-sample rejection threshold `c(alpha) sqrt((n + m) / (n m))`.
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> Result<f64, StatsError> {
    if n.min(m) < 50 {
        return Err(StatsError::TooFewSamples(n.min(m), 50));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(kolmogorov_quantile(alpha)? * ((n + m) / (n * m)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Merges adjacent bins, left to right, until every expected count is at
/// least `min_expected`; a short remainder joins the last full bin.
pub fn pool_bins(observed: &[f64], expected: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= min_expected {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += o;
                *le += e;
            }
            _ => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    (obs, exp)
}

/// Pearson chi-square test of observed counts against expected counts,
/// after pooling so that every expected count is at least 5. The
/// expected counts must describe the whole distribution.
pub fn chi_square_test(observed: &[f64], expected: &[f64]) -> Result<ChiSquare, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::InvalidArgument(format!(
            "{} observed bins vs {} expected",
            observed.len(),
            expected.len()
        )));
    }
    if expected.iter().any(|&e| !(e >= 0.0)) || observed.iter().any(|&o| !(o >= 0.0)) {
        return Err(StatsError::InvalidArgument("counts must be non-negative".into()));
    }
    let (obs, exp) = pool_bins(observed, expected, 5.0);
    if obs.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "{} bin(s) left after pooling",
            obs.len()
        )));
    }
    let statistic: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = obs.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: obs.len(),
    })
}

/// Chi-square test of a histogram (`counts[k]` = occurrences of `k`)
/// against the Poisson law with mean `rate`.
pub fn poisson_pmf_test(counts: &[u64], rate: f64) -> Result<ChiSquare, StatsError> {
    let total: u64 = counts.iter().sum();
    if total < 500 {
        return Err(StatsError::InsufficientData(format!(
            "total count {} is below 500",
            total
        )));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(StatsError::InvalidArgument(format!(
            "rate must be positive, got {}",
            rate
        )));
    }
    let law = Poisson::new(rate).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    let n = total as f64;
    // enough bins to cover the data and the bulk of the law; the last bin
    // takes the whole upper tail
    let mut kmax = counts.len().max(1);
    while law.pmf(kmax as u64) * n >= 1e-3 {
        kmax += 1;
    }
    let mut observed = vec![0.0; kmax + 1];
    for (k, &c) in counts.iter().enumerate() {
        observed[k.min(kmax)] += c as f64;
    }
    let mut expected: Vec<f64> = (0..kmax).map(|k| law.pmf(k as u64) * n).collect();
    let head: f64 = expected.iter().sum();
    expected.push((n - head).max(0.0));
    chi_square_test(&observed, &expected)
}
