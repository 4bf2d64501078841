//! Small-time limit laws of a homogeneous ranked fragmentation.
//!
//! Near time zero the largest fragment is `exp(-xi(t))` for a subordinator
//! `xi` (drift `c`, jump measure `e^{-x} nu(-log s_1 in dx)`), and the
//! second fragment is asymptotically the record `R(t)` of the second pieces
//! shed by the largest one. When `nu(s_2 >= x)` is regularly varying with
//! index `-a`, `lambda_2(t) / f(1/t)` converges to the law with CDF
//! `exp(-x^-a)`, and deeper ranks follow the order-statistic laws
//! [`frechet_k_cdf`].

use rand::Rng;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::measure::{DislocationLaw, Truncated};
use crate::rng::exponential;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("normalizer f(1/t) vanishes at t = {0}")]
    DegenerateNormalizer(f64),
    #[error("invalid subordinator: {0}")]
    InvalidSubordinator(String),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
}

/// Jump (Lévy) measure of a compound-Poisson subordinator.
#[derive(Debug, Clone)]
pub enum JumpLaw<T> {
    /// `(jump size, rate)` pairs.
    Atoms(Vec<(T, T)>),
    /// Jumps `-log s_1` with `s` drawn from `source` and kept with
    /// probability `s_1`; `rate` is the resulting total rate.
    Reweighted { source: Box<Truncated<T>>, rate: T },
}

/// Where a subordinator spec came from: `(law, c, eps)`.
#[derive(Debug, Clone)]
pub struct Provenance<T> {
    pub law: DislocationLaw<T>,
    pub c: T,
    pub eps: T,
}

#[derive(Debug, Clone)]
pub struct SubordinatorSpec<T> {
    drift: T,
    killing_rate: T,
    jumps: JumpLaw<T>,
    provenance: Option<Provenance<T>>,
}

impl<T: Scalar> SubordinatorSpec<T> {
    pub fn new(
        drift: T,
        killing_rate: T,
        jumps: JumpLaw<T>,
        provenance: Option<(DislocationLaw<T>, T, T)>,
    ) -> Result<Self, AsymptoticsError> {
        if !(drift >= T::zero() && drift.is_finite()) {
            return Err(AsymptoticsError::InvalidSubordinator(format!("drift {}", drift)));
        }
        if !(killing_rate >= T::zero() && killing_rate.is_finite()) {
            return Err(AsymptoticsError::InvalidSubordinator(format!(
                "killing rate {}",
                killing_rate
            )));
        }
        match &jumps {
            JumpLaw::Atoms(atoms) => {
                for &(x, r) in atoms {
                    if !(x > T::zero() && x.is_finite() && r >= T::zero() && r.is_finite()) {
                        return Err(AsymptoticsError::InvalidSubordinator(format!(
                            "jump atom ({}, {})",
                            x, r
                        )));
                    }
                }
            }
            JumpLaw::Reweighted { rate, .. } => {
                if !(*rate >= T::zero() && rate.is_finite()) {
                    return Err(AsymptoticsError::InvalidSubordinator(format!("jump rate {}", rate)));
                }
            }
        }
        Ok(Self {
            drift,
            killing_rate,
            jumps,
            provenance: provenance.map(|(law, c, eps)| Provenance { law, c, eps }),
        })
    }

    /// Pure-drift subordinator with no jumps and no killing.
    pub fn drift_only(drift: T) -> Result<Self, AsymptoticsError> {
        Self::new(drift, T::zero(), JumpLaw::Atoms(Vec::new()), None)
    }

    pub fn drift(&self) -> T {
        self.drift
    }

    pub fn killing_rate(&self) -> T {
        self.killing_rate
    }

    pub fn jumps(&self) -> &JumpLaw<T> {
        &self.jumps
    }

    pub fn provenance(&self) -> Option<&Provenance<T>> {
        self.provenance.as_ref()
    }

    pub fn total_jump_rate(&self) -> T {
        match &self.jumps {
            JumpLaw::Atoms(atoms) => atoms.iter().fold(T::zero(), |acc, &(_, r)| acc + r),
            JumpLaw::Reweighted { rate, .. } => *rate,
        }
    }

    fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<T>) -> T {
        match &self.jumps {
            JumpLaw::Atoms(atoms) => {
                let total = self.total_jump_rate();
                let u = T::of(rng.random::<f64>()) * total;
                let mut acc = T::zero();
                for &(x, r) in atoms {
                    acc = acc + r;
                    if u < acc {
                        return x;
                    }
                }
                atoms.last().expect("positive jump rate implies atoms").0
            }
            JumpLaw::Reweighted { source, .. } => loop {
                source.sample_into(rng, buf);
                let s1 = buf.first().copied().unwrap_or_else(T::zero);
                if T::of(rng.random::<f64>()) < s1 {
                    return -s1.ln();
                }
            },
        }
    }

    /// Samples the jump and killing times on `[0, horizon]`.
    pub fn sample_path<R: Rng + ?Sized>(&self, horizon: T, rng: &mut R) -> SubordinatorPath<T> {
        let jump_rate = self.total_jump_rate();
        let total = jump_rate + self.killing_rate;
        let mut jumps = Vec::new();
        let mut killed_at = None;
        let mut buf = Vec::new();
        let mut now = T::zero();
        if total > T::zero() {
            loop {
                now = now + exponential(total, rng);
                if now > horizon {
                    break;
                }
                if T::of(rng.random::<f64>()) * total < self.killing_rate {
                    killed_at = Some(now);
                    break;
                }
                jumps.push((now, self.sample_jump(rng, &mut buf)));
            }
        }
        SubordinatorPath {
            drift: self.drift,
            jumps,
            killed_at,
        }
    }
}

/// A frozen subordinator path: jump times, sizes and optional killing time.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath<T> {
    drift: T,
    jumps: Vec<(T, T)>,
    killed_at: Option<T>,
}

impl<T: Scalar> SubordinatorPath<T> {
    /// Path value at `t`; after killing the value is frozen at the killing
    /// time.
    pub fn value_at(&self, t: T) -> T {
        let stop = match self.killed_at {
            Some(k) => t.min(k),
            None => t,
        };
        self.jumps
            .iter()
            .take_while(|&&(time, _)| time <= stop)
            .fold(self.drift * stop, |acc, &(_, x)| acc + x)
    }

    pub fn alive_at(&self, t: T) -> bool {
        self.killed_at.is_none_or(|k| k > t)
    }

    pub fn jump_count_until(&self, t: T) -> usize {
        self.jumps.iter().take_while(|&&(time, _)| time <= t).count()
    }

    pub fn killed_at(&self) -> Option<T> {
        self.killed_at
    }
}

/// Value of the subordinator at `t` and whether it is still alive.
pub fn run_subordinator<T: Scalar, R: Rng + ?Sized>(spec: &SubordinatorSpec<T>, t: T, rng: &mut R) -> (T, bool) {
    if t <= T::zero() {
        return (T::zero(), true);
    }
    let path = spec.sample_path(t, rng);
    (path.value_at(t), path.alive_at(t))
}

/// CDF of the record `R(t)` of the rank-one second-piece stream: the void
/// probability `exp(-t nu(s_2 > x))`.
pub fn record_cdf<T: Scalar>(law: &DislocationLaw<T>, t: T, x: T) -> T {
    if t <= T::zero() {
        return T::one();
    }
    (-t * law.tail_nu2_strict(x)).exp()
}

/// CDF of the `k`-th largest second piece shed by the largest fragment up
/// to time `t`: `P(Poisson(t nu(s_2 > x)) <= k - 1)`.
pub fn kth_record_cdf<T: Scalar>(law: &DislocationLaw<T>, t: T, k: usize, x: T) -> T {
    poisson_cdf(t * law.tail_nu2_strict(x), k)
}

/// `exp(-x^-a)`.
pub fn extreme_cdf<T: Scalar>(x: T, a: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    (-x.powf(-a)).exp()
}

/// `sum_{i < k} exp(-x^-a) x^(-a i) / i!`: the limit law of the `k`-th
/// largest normalized piece.
pub fn frechet_k_cdf<T: Scalar>(k: usize, a: T, x: T) -> T {
    assert!(k >= 1, "order k is 1-based");
    if x <= T::zero() {
        return T::zero();
    }
    poisson_cdf(x.powf(-a), k)
}

/// `P(N <= k - 1)` for `N ~ Poisson(mean)`, summed in log space.
fn poisson_cdf<T: Scalar>(mean: T, k: usize) -> T {
    let m = mean.as_f64();
    if m <= 0.0 {
        return T::one();
    }
    if !m.is_finite() {
        return T::zero();
    }
    let ln_m = m.ln();
    let total: f64 = (0..k)
        .map(|i| (-m + i as f64 * ln_m - ln_gamma(i as f64 + 1.0)).exp())
        .sum();
    T::of(total.min(1.0))
}

/// `value / f(1/t)` with `f` the generalized inverse of the second-piece
/// tail.
pub fn normalize_lambda2<T: Scalar>(law: &DislocationLaw<T>, t: T, value: T) -> Result<T, AsymptoticsError> {
    if !(t > T::zero()) {
        return Err(AsymptoticsError::NonPositiveTime(t.as_f64()));
    }
    let f = law.gen_inverse_f(T::one() / t);
    if !(f > T::zero()) {
        return Err(AsymptoticsError::DegenerateNormalizer(t.as_f64()));
    }
    Ok(value / f)
}
