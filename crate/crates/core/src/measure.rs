//! Dislocation measures: the jump intensity of a homogeneous ranked
//! fragmentation, with the analytic functionals the small-time theory needs.
//!
//! Three families are supported:
//!
//! * [`LawKind::FiniteAtomic`]: finitely many weighted split vectors.
//! * [`LawKind::BinaryPowerLaw`]: binary splits `(1 - x, x)` with the second
//!   piece distributed as `a x^(-a-1) dx` on `(0, 1/2]`. Infinite activity,
//!   tail `x^(-a) - 2^a`, regularly varying with index `-a` at `0+`.
//! * [`LawKind::BrennanDurrett`]: rate-one binary splits of a `Beta(p, q)`
//!   variable `V` into `(max(V, 1-V), min(V, 1-V))`.
//!
//! Simulation uses the finite restriction of a law to `{1 - s_1 >= eps}`,
//! see [`Truncated`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::distribution::{Beta as BetaCdf, ContinuousCDF};
use thiserror::Error;

use crate::asymptotics::{JumpLaw, SubordinatorSpec};
use crate::quad;
use crate::scalar::Scalar;
use crate::state::{validate_fragment_vector, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("dislocation measure does not satisfy the integrability condition: {0}")]
    DivergentMeasure(String),
    #[error("invalid measure parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid atom: {0}")]
    InvalidAtom(#[from] StateError),
    #[error("atom at the identity split (1, 0, ...) is not allowed")]
    IdentityAtom,
    #[error("truncated measure at eps = {0} has zero mass")]
    EmptyTruncation(f64),
    #[error("measure spec parse error: {0}")]
    Parse(String),
}

/// One weighted split vector of a finite atomic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T> {
    pub weight: T,
    pub split: Vec<T>,
}

impl<T: Scalar> Atom<T> {
    fn s1(&self) -> T {
        self.split.first().copied().unwrap_or_else(T::zero)
    }

    fn s2(&self) -> T {
        self.split.get(1).copied().unwrap_or_else(T::zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind<T> {
    FiniteAtomic(Vec<Atom<T>>),
    BinaryPowerLaw { a: T },
    BrennanDurrett { p: T, q: T },
}

/// A validated dislocation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DislocationLaw<T> {
    kind: LawKind<T>,
}

/// Erosion rate together with the self-similarity index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErosionAndIndex<T> {
    c: T,
    alpha: T,
}

impl<T: Scalar> ErosionAndIndex<T> {
    pub fn new(c: T, alpha: T) -> Result<Self, MeasureError> {
        if !(c >= T::zero()) {
            return Err(MeasureError::InvalidParameter(format!(
                "erosion rate must be >= 0, got {}",
                c
            )));
        }
        if !alpha.is_finite() {
            return Err(MeasureError::InvalidParameter("alpha must be finite".into()));
        }
        if c > T::zero() && alpha != T::zero() {
            return Err(MeasureError::InvalidParameter(
                "erosion is only supported for homogeneous (alpha = 0) fragmentations".into(),
            ));
        }
        Ok(Self { c, alpha })
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

impl<T: Scalar> DislocationLaw<T> {
    /// The zero measure: no dislocations ever happen.
    pub fn zero() -> Self {
        Self {
            kind: LawKind::FiniteAtomic(Vec::new()),
        }
    }

    pub fn atomic(atoms: Vec<(T, Vec<T>)>) -> Result<Self, MeasureError> {
        let mut out = Vec::with_capacity(atoms.len());
        for (weight, split) in atoms {
            if !(weight > T::zero() && weight.is_finite()) {
                return Err(MeasureError::InvalidParameter(format!(
                    "atom weight must be positive and finite, got {}",
                    weight
                )));
            }
            validate_fragment_vector(&split)?;
            let mut split: Vec<T> = split.into_iter().filter(|&x| x > T::zero()).collect();
            split.shrink_to_fit();
            if split.first().is_some_and(|&s1| s1 >= T::one()) {
                return Err(MeasureError::IdentityAtom);
            }
            out.push(Atom { weight, split });
        }
        Ok(Self {
            kind: LawKind::FiniteAtomic(out),
        })
    }

    /// Unit-weight point mass at `split`.
    pub fn dirac(split: Vec<T>) -> Result<Self, MeasureError> {
        Self::atomic(vec![(T::one(), split)])
    }

    pub fn binary_power(a: T) -> Result<Self, MeasureError> {
        if !(a > T::zero()) {
            return Err(MeasureError::InvalidParameter(format!(
                "power-law exponent must be in (0, 1), got {}",
                a
            )));
        }
        if a >= T::one() {
            return Err(MeasureError::DivergentMeasure(format!(
                "exponent a = {} >= 1 makes the integral of (1 - s1) infinite",
                a
            )));
        }
        Ok(Self {
            kind: LawKind::BinaryPowerLaw { a },
        })
    }

    pub fn brennan_durrett(p: T, q: T) -> Result<Self, MeasureError> {
        if !(p > T::zero() && q > T::zero() && p.is_finite() && q.is_finite()) {
            return Err(MeasureError::InvalidParameter(format!(
                "Beta parameters must be positive, got p = {}, q = {}",
                p, q
            )));
        }
        Ok(Self {
            kind: LawKind::BrennanDurrett { p, q },
        })
    }

    pub fn kind(&self) -> &LawKind<T> {
        &self.kind
    }

    /// True when the measure has infinitely many small dislocations per
    /// unit time, so simulation needs `eps > 0`.
    pub fn is_infinite_activity(&self) -> bool {
        matches!(self.kind, LawKind::BinaryPowerLaw { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, LawKind::FiniteAtomic(atoms) if atoms.is_empty())
    }

    /// `nu(s_2 >= x)`.
    pub fn tail_nu2(&self, x: T) -> T {
        let half = T::of(0.5);
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => atoms
                .iter()
                .filter(|at| at.s2() > T::zero() && at.s2() >= x)
                .fold(T::zero(), |acc, at| acc + at.weight),
            LawKind::BinaryPowerLaw { a } => {
                if x > half {
                    T::zero()
                } else {
                    x.powf(-*a) - T::of(2.0).powf(*a)
                }
            }
            LawKind::BrennanDurrett { p, q } => {
                if x > half {
                    T::zero()
                } else {
                    T::of(beta_min_tail(p.as_f64(), q.as_f64(), x.as_f64()))
                }
            }
        }
    }

    /// `nu(s_2 > x)`; differs from [`Self::tail_nu2`] only at atoms.
    pub fn tail_nu2_strict(&self, x: T) -> T {
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => atoms
                .iter()
                .filter(|at| at.s2() > x)
                .fold(T::zero(), |acc, at| acc + at.weight),
            _ => {
                if x <= T::zero() {
                    self.tail_nu2(T::min_positive_value())
                } else {
                    self.tail_nu2(x)
                }
            }
        }
    }

    /// `int (1 - s_1) nu(ds)`.
    pub fn dust_integral(&self) -> T {
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => atoms
                .iter()
                .fold(T::zero(), |acc, at| acc + at.weight * (T::one() - at.s1())),
            LawKind::BinaryPowerLaw { a } => *a / (T::one() - *a) * T::of(0.5).powf(T::one() - *a),
            LawKind::BrennanDurrett { p, q } => {
                let (p, q) = (p.as_f64(), q.as_f64());
                T::of(quad::integrate(|x| beta_min_tail(p, q, x), 0.0, 0.5, 1e-13))
            }
        }
    }

    /// `int_{1 - s_1 >= eps} (1 - s_1) nu(ds)`.
    pub fn truncated_dust_integral(&self, eps: T) -> T {
        let half = T::of(0.5);
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => atoms
                .iter()
                .filter(|at| T::one() - at.s1() >= eps)
                .fold(T::zero(), |acc, at| acc + at.weight * (T::one() - at.s1())),
            LawKind::BinaryPowerLaw { a } => {
                if eps > half {
                    return T::zero();
                }
                let e = eps.max(T::zero());
                *a / (T::one() - *a) * (half.powf(T::one() - *a) - e.powf(T::one() - *a))
            }
            LawKind::BrennanDurrett { p, q } => {
                if eps > half {
                    return T::zero();
                }
                let (p, q, e) = (p.as_f64(), q.as_f64(), eps.as_f64().max(0.0));
                let body = quad::integrate(|x| beta_min_tail(p, q, x), e, 0.5, 1e-13);
                T::of(e * beta_min_tail(p, q, e) + body)
            }
        }
    }

    /// `nu(1 - s_1 >= eps)`, finite for every `eps > 0`.
    pub fn truncated_mass(&self, eps: T) -> T {
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => atoms
                .iter()
                .filter(|at| T::one() - at.s1() >= eps)
                .fold(T::zero(), |acc, at| acc + at.weight),
            // binary and conservative: 1 - s_1 = s_2
            _ => {
                if eps <= T::zero() {
                    if self.is_infinite_activity() {
                        T::infinity()
                    } else {
                        T::one()
                    }
                } else {
                    self.tail_nu2(eps)
                }
            }
        }
    }

    /// Generalized inverse `f(y) = inf{x > 0 : tail_nu2(x) <= y}`.
    pub fn gen_inverse_f(&self, y: T) -> T {
        let y = y.max(T::zero());
        match &self.kind {
            LawKind::BinaryPowerLaw { a } => (y + T::of(2.0).powf(*a)).powf(-T::one() / *a),
            LawKind::FiniteAtomic(atoms) => {
                // the tail is a left-continuous step function with drops at
                // the distinct s_2 values
                let mut levels: Vec<T> = atoms.iter().map(|at| at.s2()).filter(|&v| v > T::zero()).collect();
                levels.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                levels.dedup();
                for &v in &levels {
                    if self.tail_nu2(v) > y {
                        return v;
                    }
                }
                T::zero()
            }
            LawKind::BrennanDurrett { .. } => {
                let lo = 1e-12;
                let yf = y.as_f64();
                let tail = |x: f64| self.tail_nu2(T::of(x)).as_f64();
                if tail(lo) <= yf {
                    return T::zero();
                }
                T::of(quad::bisect_threshold(|x| tail(x) <= yf, lo, 0.5, 1e-10))
            }
        }
    }

    /// Restriction to `{1 - s_1 >= eps}` ready for repeated sampling.
    pub fn truncate(&self, eps: T) -> Result<Truncated<T>, MeasureError> {
        let mass = self.truncated_mass(eps);
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(MeasureError::EmptyTruncation(eps.as_f64()));
        }
        let mut cumulative = Vec::new();
        if let LawKind::FiniteAtomic(atoms) = &self.kind {
            let mut acc = T::zero();
            for (i, at) in atoms.iter().enumerate() {
                if T::one() - at.s1() >= eps {
                    acc = acc + at.weight;
                    cumulative.push((acc, i));
                }
            }
        }
        let beta = match &self.kind {
            LawKind::BrennanDurrett { p, q } => {
                Some(Beta::new(p.as_f64(), q.as_f64()).map_err(|e| MeasureError::InvalidParameter(e.to_string()))?)
            }
            _ => None,
        };
        Ok(Truncated {
            law: self.clone(),
            eps,
            mass,
            cumulative,
            beta,
        })
    }

    /// Draws one split from the normalized restriction to `{1 - s_1 >= eps}`.
    pub fn sample_dislocation<R: Rng + ?Sized>(&self, eps: T, rng: &mut R) -> Result<Vec<T>, MeasureError> {
        let tr = self.truncate(eps)?;
        let mut out = Vec::new();
        tr.sample_into(rng, &mut out);
        Ok(out)
    }

    /// Image of the truncated measure under `s -> -log s_1`, reweighted by
    /// `s_1`, with drift `c` and killing rate equal to the dust integral.
    pub fn sub_levy_transform(&self, c: T, eps: T) -> Result<SubordinatorSpec<T>, MeasureError> {
        let truncated = self.truncate(eps)?;
        let jumps = match &self.kind {
            LawKind::FiniteAtomic(atoms) => JumpLaw::Atoms(
                atoms
                    .iter()
                    .filter(|at| T::one() - at.s1() >= eps && at.s1() > T::zero())
                    .map(|at| (-at.s1().ln(), at.weight * at.s1()))
                    .collect(),
            ),
            _ => {
                let rate = truncated.mass() - self.truncated_dust_integral(eps);
                JumpLaw::Reweighted {
                    source: Box::new(truncated),
                    rate,
                }
            }
        };
        SubordinatorSpec::new(c, self.dust_integral(), jumps, Some((self.clone(), c, eps)))
            .map_err(|e| MeasureError::InvalidParameter(e.to_string()))
    }

    /// Parses `key = value` pairs from the measure grammar.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, MeasureError> {
        let get = |k: &str| -> Result<T, MeasureError> {
            let raw = pairs
                .get(k)
                .ok_or_else(|| MeasureError::Parse(format!("missing key `{}`", k)))?;
            parse_scalar(raw)
        };
        let name = pairs
            .get("measure")
            .ok_or_else(|| MeasureError::Parse("missing key `measure`".into()))?;
        match name.as_str() {
            "atomic" => {
                let raw = pairs.get("atoms").map(String::as_str).unwrap_or("");
                Self::atomic(parse_atoms(raw)?)
            }
            "binary_power" => Self::binary_power(get("a")?),
            "brennan_durrett" => Self::brennan_durrett(get("p")?, get("q")?),
            other => Err(MeasureError::Parse(format!("unknown measure `{}`", other))),
        }
    }
}

/// Splits a `key = value; key = value` string; segments without `=` extend
/// the previous value, so `atoms = 1:0.6,0.4;2:0.9,0.1` keeps both atoms.
pub fn split_pairs(spec: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for seg in spec.split(';') {
        let seg = seg.trim();
        if seg.is_empty() {
            continue;
        }
        match seg.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(';');
                    v.push_str(seg);
                }
                None => return Err(format!("segment `{}` is not a `key = value` pair", seg)),
            },
        }
    }
    Ok(out)
}

fn parse_scalar<T: Scalar>(raw: &str) -> Result<T, MeasureError> {
    raw.trim()
        .parse::<f64>()
        .map(T::of)
        .map_err(|e| MeasureError::Parse(format!("`{}`: {}", raw, e)))
}

fn parse_atoms<T: Scalar>(raw: &str) -> Result<Vec<(T, Vec<T>)>, MeasureError> {
    let mut atoms = Vec::new();
    for item in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (w, s) = item
            .split_once(':')
            .ok_or_else(|| MeasureError::Parse(format!("atom `{}` lacks `w:`", item)))?;
        let split = s
            .split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(parse_scalar)
            .collect::<Result<Vec<T>, _>>()?;
        atoms.push((parse_scalar(w)?, split));
    }
    Ok(atoms)
}

impl<T: Scalar> FromStr for DislocationLaw<T> {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let pairs: BTreeMap<String, String> = split_pairs(s).map_err(MeasureError::Parse)?.into_iter().collect();
        Self::from_pairs(&pairs)
    }
}

impl<T: Scalar> fmt::Display for DislocationLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::FiniteAtomic(atoms) => {
                write!(f, "measure = atomic; atoms = ")?;
                for (i, at) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{}:", at.weight)?;
                    for (j, x) in at.split.iter().enumerate() {
                        if j > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{}", x)?;
                    }
                }
                Ok(())
            }
            LawKind::BinaryPowerLaw { a } => write!(f, "measure = binary_power; a = {}", a),
            LawKind::BrennanDurrett { p, q } => {
                write!(f, "measure = brennan_durrett; p = {}; q = {}", p, q)
            }
        }
    }
}

/// `P(x <= V <= 1 - x)` for `V ~ Beta(p, q)`, i.e. the tail of `min(V, 1 - V)`.
fn beta_min_tail(p: f64, q: f64, x: f64) -> f64 {
    if x > 0.5 {
        return 0.0;
    }
    if x <= 0.0 {
        return 1.0;
    }
    let d = BetaCdf::new(p, q).expect("validated Beta parameters");
    (d.cdf(1.0 - x) - d.cdf(x)).clamp(0.0, 1.0)
}

/// Finite restriction of a law to `{1 - s_1 >= eps}`.
#[derive(Debug, Clone)]
pub struct Truncated<T> {
    law: DislocationLaw<T>,
    eps: T,
    mass: T,
    cumulative: Vec<(T, usize)>,
    beta: Option<Beta<f64>>,
}

impl<T: Scalar> Truncated<T> {
    pub fn law(&self) -> &DislocationLaw<T> {
        &self.law
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// Total mass of the restriction (the event rate of a unit fragment).
    pub fn mass(&self) -> T {
        self.mass
    }

    /// Writes one normalized-restriction sample into `out` (cleared first).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<T>) {
        out.clear();
        match &self.law.kind {
            LawKind::FiniteAtomic(atoms) => {
                let u = T::of(rng.random::<f64>()) * self.mass;
                let pos = self.cumulative.partition_point(|&(c, _)| c <= u);
                let idx = self.cumulative[pos.min(self.cumulative.len() - 1)].1;
                out.extend_from_slice(&atoms[idx].split);
            }
            LawKind::BinaryPowerLaw { a } => {
                // inverse CDF of the second piece on [eps, 1/2]
                let u = T::of(rng.random::<f64>());
                let s2 = (u * self.mass + T::of(2.0).powf(*a))
                    .powf(-T::one() / *a)
                    .min(T::of(0.5));
                out.push(T::one() - s2);
                out.push(s2);
            }
            LawKind::BrennanDurrett { .. } => {
                let beta = self.beta.as_ref().expect("built with Beta sampler");
                let eps = self.eps.as_f64();
                loop {
                    let v: f64 = beta.sample(rng);
                    let lo = v.min(1.0 - v);
                    if lo >= eps && lo > 0.0 {
                        let s2 = T::of(lo);
                        out.push(T::one() - s2);
                        out.push(s2);
                        return;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn power(a: f64) -> DislocationLaw<f64> {
        DislocationLaw::binary_power(a).unwrap()
    }

    #[test]
    fn tail_examples() {
        assert_abs_diff_eq!(power(0.5).tail_nu2(0.25), 2.0 - 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(power(0.5).tail_nu2(0.25), 0.5857864, epsilon = 1e-7);
        let d = DislocationLaw::dirac(vec![0.6, 0.4]).unwrap();
        for law in [
            power(0.5),
            d.clone(),
            DislocationLaw::brennan_durrett(2.0, 3.0).unwrap(),
        ] {
            assert_eq!(law.tail_nu2(0.6), 0.0);
        }
        assert_eq!(d.tail_nu2(0.3), 1.0);
        assert_eq!(d.tail_nu2(0.5), 0.0);
        assert_eq!(d.tail_nu2(0.4), 1.0);
        assert_eq!(d.tail_nu2_strict(0.4), 0.0);
    }

    #[test]
    fn dust_integral_examples() {
        assert_abs_diff_eq!(power(0.5).dust_integral(), 0.5f64.sqrt(), epsilon = 1e-15);
        let a = DislocationLaw::dirac(vec![0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(a.dust_integral(), 0.1, epsilon = 1e-15);
        let b = DislocationLaw::atomic(vec![(2.0, vec![0.5, 0.5])]).unwrap();
        assert_abs_diff_eq!(b.dust_integral(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn divergent_and_invalid_construction() {
        assert!(matches!(
            DislocationLaw::<f64>::binary_power(1.0),
            Err(MeasureError::DivergentMeasure(_))
        ));
        assert!(matches!(
            DislocationLaw::<f64>::binary_power(1.5),
            Err(MeasureError::DivergentMeasure(_))
        ));
        assert!(DislocationLaw::<f64>::binary_power(0.0).is_err());
        assert!(matches!(
            DislocationLaw::dirac(vec![1.0]),
            Err(MeasureError::IdentityAtom)
        ));
        assert!(matches!(
            DislocationLaw::dirac(vec![0.4, 0.6]),
            Err(MeasureError::InvalidAtom(_))
        ));
        assert!(DislocationLaw::atomic(vec![(0.0, vec![0.5, 0.5])]).is_err());
        assert!(DislocationLaw::<f64>::brennan_durrett(0.0, 1.0).is_err());
    }

    #[test]
    fn truncated_mass_examples() {
        assert_abs_diff_eq!(power(0.5).truncated_mass(0.01), 10.0 - 2f64.sqrt(), epsilon = 1e-12);
        let a = DislocationLaw::dirac(vec![0.9, 0.1]).unwrap();
        assert_eq!(a.truncated_mass(0.05), 1.0);
        assert_eq!(a.truncated_mass(0.2), 0.0);
        assert_eq!(a.truncated_mass(1.5), 0.0);
        assert_eq!(power(0.5).truncated_mass(1.5), 0.0);
        assert!(matches!(a.truncate(0.2), Err(MeasureError::EmptyTruncation(_))));
    }

    #[test]
    fn gen_inverse_examples() {
        let f = power(0.5).gen_inverse_f(100.0);
        assert_abs_diff_eq!(f, (100.0 + 2f64.sqrt()).powi(-2), epsilon = 1e-18);
        assert_abs_diff_eq!(f, 9.7230e-5, epsilon = 1e-8);
        assert_abs_diff_eq!(power(0.5).gen_inverse_f(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn atomic_inverse_is_infimum_of_sublevel_set() {
        let law = DislocationLaw::atomic(vec![(1.0, vec![0.6, 0.4]), (2.0, vec![0.9, 0.1])]).unwrap();
        // tail: 3 on (0, 0.1], 1 on (0.1, 0.4], 0 above
        assert_eq!(law.gen_inverse_f(0.5), 0.4);
        assert_eq!(law.gen_inverse_f(1.0), 0.1);
        assert_eq!(law.gen_inverse_f(2.0), 0.1);
        assert_eq!(law.gen_inverse_f(3.0), 0.0);
        for y in [0.0, 0.5, 1.0, 2.5] {
            // right limit of the tail at f(y) is within the level
            assert!(law.tail_nu2_strict(law.gen_inverse_f(y)) <= y);
        }
    }

    #[test]
    fn galois_inequalities_for_continuous_laws() {
        let laws = [
            power(0.5),
            power(0.2),
            DislocationLaw::brennan_durrett(0.7, 2.0).unwrap(),
        ];
        for law in &laws {
            for i in 1..=100 {
                let x = 0.5 * i as f64 / 100.0;
                let y = law.tail_nu2(x);
                assert!(law.gen_inverse_f(y) <= x + 1e-10, "f(tail({x})) > {x}");
                let yy = 10f64.powf(-2.0 + 6.0 * i as f64 / 100.0);
                let fy = law.gen_inverse_f(yy);
                assert!(law.tail_nu2(fy.max(1e-300)) <= yy * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn brennan_durrett_tail_matches_density_quadrature() {
        // independent route: integrate the Beta density over [x, 1-x]
        let (p, q) = (2.0, 3.0);
        let law = DislocationLaw::brennan_durrett(p, q).unwrap();
        let norm = 12.0; // 1 / B(2, 3)
        for x in [0.05, 0.1, 0.25, 0.4] {
            let direct = quad::integrate(|v| norm * v * (1.0 - v).powi(2), x, 1.0 - x, 1e-13);
            assert_abs_diff_eq!(law.tail_nu2(x), direct, epsilon = 1e-10);
        }
        // E[min(V, 1 - V)] by direct quadrature
        let direct = quad::integrate(|v| norm * v * (1.0 - v).powi(2) * v.min(1.0 - v), 0.0, 1.0, 1e-13);
        assert_abs_diff_eq!(law.dust_integral(), direct, epsilon = 1e-9);
        assert_eq!(law.truncated_mass(0.0), 1.0);
    }

    #[test]
    fn binary_samples_are_conservative_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tr = power(0.5).truncate(0.01).unwrap();
        let mut buf = Vec::new();
        for _ in 0..10_000 {
            tr.sample_into(&mut rng, &mut buf);
            assert_eq!(buf[0] + buf[1], 1.0);
            assert!(buf[1] >= 0.01 - 1e-15 && buf[1] <= 0.5);
            assert!(buf[0] >= buf[1]);
        }
        let bd = DislocationLaw::brennan_durrett(0.5, 0.5)
            .unwrap()
            .truncate(0.2)
            .unwrap();
        for _ in 0..1000 {
            bd.sample_into(&mut rng, &mut buf);
            assert_eq!(buf[0] + buf[1], 1.0);
            assert!(buf[1] >= 0.2);
        }
    }

    #[test]
    fn atomic_sampling_follows_weights() {
        let law = DislocationLaw::atomic(vec![(1.0, vec![0.6, 0.4]), (3.0, vec![0.9, 0.1])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let hits = (0..n)
            .filter(|_| law.sample_dislocation(0.05, &mut rng).unwrap()[0] == 0.6)
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
        // only the (0.6, 0.4) atom survives eps = 0.2
        assert_eq!(law.sample_dislocation(0.2, &mut rng).unwrap(), vec![0.6, 0.4]);
    }

    #[test]
    fn grammar_round_trips() {
        let law: DislocationLaw<f64> = "measure = atomic; atoms = 1:0.6,0.4;0.5:0.9,0.1".parse().unwrap();
        assert_eq!(law.truncated_mass(0.05), 1.5);
        let again: DislocationLaw<f64> = law.to_string().parse().unwrap();
        assert_eq!(again, law);
        let p: DislocationLaw<f64> = "measure = binary_power; a = 0.5".parse().unwrap();
        assert_eq!(p, power(0.5));
        let bd: DislocationLaw<f64> = "measure = brennan_durrett; p = 2; q = 3".parse().unwrap();
        assert_eq!(bd, DislocationLaw::brennan_durrett(2.0, 3.0).unwrap());
        let z: DislocationLaw<f64> = "measure = atomic; atoms =".parse().unwrap();
        assert!(z.is_zero());
        assert!("measure = cantor".parse::<DislocationLaw<f64>>().is_err());
        assert!("measure = binary_power".parse::<DislocationLaw<f64>>().is_err());
        assert!("measure = atomic; atoms = 1:0.6,x"
            .parse::<DislocationLaw<f64>>()
            .is_err());
    }

    #[test]
    fn transform_of_single_atom() {
        let law = DislocationLaw::dirac(vec![0.9, 0.1]).unwrap();
        let spec = law.sub_levy_transform(0.0, 1e-3).unwrap();
        assert_eq!(spec.drift(), 0.0);
        assert_abs_diff_eq!(spec.killing_rate(), 0.1, epsilon = 1e-15);
        match spec.jumps() {
            JumpLaw::Atoms(v) => {
                assert_eq!(v.len(), 1);
                assert_abs_diff_eq!(v[0].0, 0.1053605, epsilon = 1e-7);
                assert_abs_diff_eq!(v[0].1, 0.9, epsilon = 1e-15);
            }
            other => panic!("unexpected jump law {other:?}"),
        }
        let spec = law.sub_levy_transform(2.5, 1e-3).unwrap();
        assert_eq!(spec.drift(), 2.5);
        assert!(DislocationLaw::<f64>::zero().sub_levy_transform(0.0, 1e-3).is_err());
    }

    #[test]
    fn power_law_transform_rates_add_up() {
        let law = power(0.5);
        let spec = law.sub_levy_transform(0.0, 1e-3).unwrap();
        // jump rate + truncated dust = truncated mass
        let jump_rate = spec.total_jump_rate();
        assert_abs_diff_eq!(
            jump_rate + law.truncated_dust_integral(1e-3),
            law.truncated_mass(1e-3),
            epsilon = 1e-9
        );
    }

    #[test]
    fn erosion_requires_homogeneity() {
        assert!(ErosionAndIndex::new(1.0, 0.0).is_ok());
        assert!(ErosionAndIndex::new(0.0, 1.0).is_ok());
        assert!(ErosionAndIndex::new(1.0, 1.0).is_err());
        assert!(ErosionAndIndex::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn single_precision_tail() {
        let law = DislocationLaw::<f32>::binary_power(0.5).unwrap();
        assert!((law.tail_nu2(0.25) - 0.5857864).abs() < 1e-5);
        assert!((law.dust_integral() - 0.70710677).abs() < 1e-6);
    }
}
