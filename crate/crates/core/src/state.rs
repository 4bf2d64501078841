//! Ranked mass states: finite truncations of the space of non-increasing
//! mass sequences with total at most the initial mass.
//!
//! A [`MassState`] keeps the tracked fragments in non-increasing order and a
//! separate `dust` ledger for mass that is no longer carried by a tracked
//! fragment (non-conservative splits, fragments under the mass floor, cap
//! overflow, erosion). `sum(parts) + dust` never exceeds `nominal`.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("negative mass {0}")]
    NegativeMass(f64),
    #[error("nominal mass must be positive, got {0}")]
    NonPositiveNominal(f64),
    #[error("masses sum to {total} which exceeds the budget {nominal}")]
    MassBudgetExceeded { total: f64, nominal: f64 },
    #[error("scale factor {0} outside [0, 1]")]
    ScaleOutOfRange(f64),
    #[error("rank {rank} out of range for a state with {len} fragments")]
    RankOutOfRange { rank: usize, len: usize },
    #[error("invalid fragment vector: {0}")]
    InvalidFragmentVector(String),
}

/// Relative slack on mass budgets.
pub(crate) fn budget_tol<T: Scalar>() -> T {
    T::of(1e-9).max(T::epsilon() * T::of(64.0))
}

/// Checks that `s` is a relative dislocation vector: non-negative,
/// non-increasing, total at most one.
pub fn validate_fragment_vector<T: Scalar>(s: &[T]) -> Result<(), StateError> {
    let mut total = T::zero();
    for (i, &x) in s.iter().enumerate() {
        if !(x >= T::zero()) {
            return Err(StateError::InvalidFragmentVector(format!("entry {} is {}", i, x)));
        }
        if i > 0 && x > s[i - 1] {
            return Err(StateError::InvalidFragmentVector(format!(
                "entries {} and {} are not non-increasing",
                i - 1,
                i
            )));
        }
        total = total + x;
    }
    if total > T::one() + budget_tol::<T>() {
        return Err(StateError::InvalidFragmentVector(format!(
            "entries sum to {} > 1",
            total
        )));
    }
    Ok(())
}

/// Outcome of an in-place dislocation, used by the simulator's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DislocationOutcome<T> {
    /// Mass of the fragment that was dislocated.
    pub parent_mass: T,
    /// Mass sent to dust by the split itself (deficit plus floored pieces).
    pub dusted: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassState<T> {
    parts: Vec<T>,
    dust: T,
    nominal: T,
}

impl<T: Scalar> MassState<T> {
    /// The initial state `(r, 0, 0, ...)`.
    pub fn unit(nominal: T) -> Result<Self, StateError> {
        Self::from_masses(&[nominal], T::zero(), nominal)
    }

    /// Canonicalizes arbitrary masses into a ranked state: zeros are
    /// stripped and the rest sorted non-increasing, stably on ties.
    pub fn from_masses(masses: &[T], dust: T, nominal: T) -> Result<Self, StateError> {
        if !(nominal > T::zero()) {
            return Err(StateError::NonPositiveNominal(nominal.as_f64()));
        }
        if !(dust >= T::zero()) {
            return Err(StateError::NegativeMass(dust.as_f64()));
        }
        let mut total = dust;
        for &m in masses {
            if !(m >= T::zero()) {
                return Err(StateError::NegativeMass(m.as_f64()));
            }
            total = total + m;
        }
        if total > nominal * (T::one() + budget_tol::<T>()) {
            return Err(StateError::MassBudgetExceeded {
                total: total.as_f64(),
                nominal: nominal.as_f64(),
            });
        }
        let mut parts: Vec<T> = masses.iter().copied().filter(|&m| m > T::zero()).collect();
        // `sort_by` is stable, which gives the tie rule for free.
        parts.sort_by(|a, b| b.partial_cmp(a).expect("masses are not NaN"));
        Ok(Self { parts, dust, nominal })
    }

    pub fn parts(&self) -> &[T] {
        &self.parts
    }

    pub fn dust(&self) -> T {
        self.dust
    }

    pub fn nominal(&self) -> T {
        self.nominal
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The `k`-th largest mass (1-based), zero past the tracked fragments.
    pub fn lambda(&self, k: usize) -> T {
        assert!(k >= 1, "ranks are 1-based");
        self.parts.get(k - 1).copied().unwrap_or_else(T::zero)
    }

    /// `sum(parts) + dust`.
    pub fn total(&self) -> T {
        self.parts.iter().fold(self.dust, |acc, &m| acc + m)
    }

    /// Sum of the `k` largest masses.
    pub fn prefix_mass(&self, k: usize) -> T {
        self.parts.iter().take(k).fold(T::zero(), |acc, &m| acc + m)
    }

    /// Image under `x -> l x`: every part, the dust and the nominal mass are
    /// multiplied by `l`.
    pub fn scale(&self, l: T) -> Result<Self, StateError> {
        if !(l >= T::zero() && l <= T::one()) {
            return Err(StateError::ScaleOutOfRange(l.as_f64()));
        }
        if l == T::zero() {
            // Degenerate image: nothing left, keep a positive nominal.
            return Ok(Self {
                parts: Vec::new(),
                dust: T::zero(),
                nominal: self.nominal,
            });
        }
        Ok(Self {
            parts: self.parts.iter().map(|&m| m * l).collect(),
            dust: self.dust * l,
            nominal: self.nominal * l,
        })
    }

    /// Multiplies every fragment by `factor` and books the removed mass as
    /// dust, keeping the nominal mass. This is how erosion is applied.
    pub fn erode(&self, factor: T) -> Result<Self, StateError> {
        if !(factor >= T::zero() && factor <= T::one()) {
            return Err(StateError::ScaleOutOfRange(factor.as_f64()));
        }
        let mut parts = Vec::with_capacity(self.parts.len());
        let mut lost = T::zero();
        for &m in &self.parts {
            let kept = m * factor;
            lost = lost + (m - kept);
            if kept > T::zero() {
                parts.push(kept);
            }
        }
        Ok(Self {
            parts,
            dust: self.dust + lost,
            nominal: self.nominal,
        })
    }

    /// Replaces the fragment of rank `rank` by its pieces `parent * s_i`,
    /// returning the new state.
    pub fn dislocate(&self, rank: usize, s: &[T], mass_floor: T) -> Result<Self, StateError> {
        let mut next = self.clone();
        next.dislocate_in_place(rank, s, mass_floor)?;
        Ok(next)
    }

    /// In-place variant of [`MassState::dislocate`].
    ///
    /// New pieces are placed after existing fragments of equal mass; pieces
    /// below `mass_floor` and the deficit `parent * (1 - sum(s))` go to dust.
    pub fn dislocate_in_place(
        &mut self,
        rank: usize,
        s: &[T],
        mass_floor: T,
    ) -> Result<DislocationOutcome<T>, StateError> {
        if rank == 0 || rank > self.parts.len() {
            return Err(StateError::RankOutOfRange {
                rank,
                len: self.parts.len(),
            });
        }
        validate_fragment_vector(s)?;
        let parent = self.parts.remove(rank - 1);
        let mut kept = T::zero();
        let mut floored = T::zero();
        for &rel in s {
            let piece = parent * rel;
            if piece <= T::zero() {
                continue;
            }
            if piece < mass_floor {
                floored = floored + piece;
                continue;
            }
            let at = self.parts.partition_point(|&p| p >= piece);
            self.parts.insert(at, piece);
            kept = kept + piece;
        }
        // Deficit computed from the realised pieces so parts + dust stays
        // conserved up to a single rounding.
        let deficit = (parent - kept - floored).max(T::zero());
        let dusted = deficit + floored;
        self.dust = self.dust + dusted;
        Ok(DislocationOutcome {
            parent_mass: parent,
            dusted,
        })
    }

    /// Moves the smallest fragments to dust until at most `max` remain.
    /// Returns the mass moved.
    pub fn truncate_to(&mut self, max: usize) -> T {
        let mut moved = T::zero();
        while self.parts.len() > max {
            let m = self.parts.pop().expect("len > max >= 0");
            moved = moved + m;
        }
        self.dust = self.dust + moved;
        moved
    }
}

/// Sup-norm distance between two ranked sequences, missing entries read as 0.
pub fn uniform_dist<T: Scalar>(a: &MassState<T>, b: &MassState<T>) -> T {
    let n = a.len().max(b.len());
    (1..=n)
        .map(|k| (a.lambda(k) - b.lambda(k)).abs())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn st(m: &[f64]) -> MassState<f64> {
        MassState::from_masses(m, 0.0, 1.0).unwrap()
    }

    #[test]
    fn canonicalizes() {
        let s = st(&[0.4, 0.6, 0.0]);
        assert_eq!(s.parts(), &[0.6, 0.4]);
        assert_eq!(s.dust(), 0.0);
        assert_eq!(st(&[1.0]).parts(), &[1.0]);
        let s = MassState::from_masses(&[0.5, 0.3], 0.2, 1.0).unwrap();
        assert_eq!(s.parts(), &[0.5, 0.3]);
        assert_abs_diff_eq!(s.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(matches!(
            MassState::from_masses(&[0.5, -0.1], 0.0, 1.0),
            Err(StateError::NegativeMass(_))
        ));
        assert!(matches!(
            MassState::from_masses(&[0.7, 0.6], 0.0, 1.0),
            Err(StateError::MassBudgetExceeded { .. })
        ));
        assert!(matches!(
            MassState::from_masses(&[0.5], -1e-3, 1.0),
            Err(StateError::NegativeMass(_))
        ));
        // within the 1e-9 relative slack
        assert!(MassState::from_masses(&[0.5, 0.5 + 1e-12], 0.0, 1.0).is_ok());
    }

    #[test]
    fn scale_examples() {
        assert_eq!(st(&[0.6, 0.4]).scale(1.0).unwrap().parts(), &[0.6, 0.4]);
        assert_eq!(st(&[0.6, 0.4]).scale(0.5).unwrap().parts(), &[0.3, 0.2]);
        let twice = st(&[1.0]).scale(0.5).unwrap().scale(0.5).unwrap();
        assert_eq!(twice.parts(), &[0.25]);
        assert_eq!(twice.nominal(), 0.25);
        assert!(matches!(st(&[1.0]).scale(1.5), Err(StateError::ScaleOutOfRange(_))));
    }

    #[test]
    fn dislocate_examples() {
        let s = st(&[1.0]).dislocate(1, &[0.6, 0.4], 0.0).unwrap();
        assert_eq!(s.parts(), &[0.6, 0.4]);
        let s = st(&[0.6, 0.4]).dislocate(2, &[0.6, 0.4], 0.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_abs_diff_eq!(s.parts()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.parts()[1], 0.24, epsilon = 1e-15);
        assert_abs_diff_eq!(s.parts()[2], 0.16, epsilon = 1e-15);
        let s = st(&[0.5, 0.5]).dislocate(1, &[1.0], 0.0).unwrap();
        assert_eq!(s.parts(), &[0.5, 0.5]);
    }

    #[test]
    fn dislocate_errors() {
        assert!(matches!(
            st(&[0.6, 0.4]).dislocate(3, &[0.5, 0.5], 0.0),
            Err(StateError::RankOutOfRange { rank: 3, len: 2 })
        ));
        assert!(matches!(
            st(&[1.0]).dislocate(1, &[0.3, 0.7], 0.0),
            Err(StateError::InvalidFragmentVector(_))
        ));
        assert!(matches!(
            st(&[1.0]).dislocate(1, &[0.7, 0.7], 0.0),
            Err(StateError::InvalidFragmentVector(_))
        ));
    }

    #[test]
    fn dislocate_books_deficit_and_floor() {
        let s = st(&[1.0]).dislocate(1, &[0.5, 0.3], 0.0).unwrap();
        assert_abs_diff_eq!(s.dust(), 0.2, epsilon = 1e-15);
        let s = st(&[1.0]).dislocate(1, &[0.9, 0.05, 0.05], 0.1).unwrap();
        assert_eq!(s.parts(), &[0.9]);
        assert_abs_diff_eq!(s.dust(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn new_pieces_rank_after_equal_existing_ones() {
        let mut s = st(&[0.5, 0.25]);
        s.dislocate_in_place(1, &[0.5, 0.5], 0.0).unwrap();
        assert_eq!(s.parts(), &[0.25, 0.25, 0.25]);
        // the untouched fragment keeps rank 1 among the ties: dislocating
        // rank 1 must hit the older fragment, leaving two new halves.
        let mut t = s.clone();
        t.dislocate_in_place(1, &[0.6, 0.4], 0.0).unwrap();
        assert_eq!(t.len(), 4);
        assert_abs_diff_eq!(t.parts()[0], 0.25, epsilon = 0.0);
        assert_abs_diff_eq!(t.parts()[1], 0.25, epsilon = 0.0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(uniform_dist(&st(&[0.6, 0.4]), &st(&[0.6, 0.4])), 0.0);
        assert_abs_diff_eq!(uniform_dist(&st(&[1.0]), &st(&[0.6, 0.4])), 0.4, epsilon = 1e-15);
        assert_eq!(uniform_dist(&st(&[0.5]), &st(&[])), 0.5);
    }

    #[test]
    fn prefix_examples() {
        let s = MassState::from_masses(&[0.6, 0.24, 0.16], 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.prefix_mass(2), 0.84, epsilon = 1e-15);
        assert_eq!(st(&[1.0]).prefix_mass(5), 1.0);
        assert_eq!(st(&[]).prefix_mass(3), 0.0);
    }

    #[test]
    fn erosion_keeps_nominal() {
        let e = st(&[0.6, 0.4]).erode(0.5).unwrap();
        assert_eq!(e.parts(), &[0.3, 0.2]);
        assert_abs_diff_eq!(e.dust(), 0.5, epsilon = 1e-15);
        assert_eq!(e.nominal(), 1.0);
    }

    #[test]
    fn truncation_moves_tail_to_dust() {
        let mut s = st(&[0.5, 0.3, 0.2]);
        let moved = s.truncate_to(1);
        assert_abs_diff_eq!(moved, 0.5, epsilon = 1e-15);
        assert_eq!(s.parts(), &[0.5]);
        assert_abs_diff_eq!(s.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let s = MassState::<f32>::from_masses(&[0.4, 0.6], 0.0, 1.0).unwrap();
        let d = s.dislocate(1, &[0.6, 0.4], 0.0).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d.total() - 1.0).abs() < f32::conservation_tol());
    }

    fn fragment_vector() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..6).prop_map(|raw| {
            let total: f64 = raw.iter().sum::<f64>() + 1e-3;
            let mut v: Vec<f64> = raw.iter().map(|x| x / total).collect();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        })
    }

    fn state() -> impl Strategy<Value = MassState<f64>> {
        (prop::collection::vec(0.0f64..1.0, 1..8), 0.0f64..0.3).prop_map(|(raw, dust)| {
            let total: f64 = raw.iter().sum::<f64>() + 1e-6;
            let m: Vec<f64> = raw.iter().map(|x| x * (1.0 - dust) / total).collect();
            MassState::from_masses(&m, dust, 1.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn dislocation_conserves_and_ranks(
            s in state(),
            v in fragment_vector(),
            pick in 0usize..8,
            floor in prop_oneof![Just(0.0), 0.0f64..0.05],
        ) {
            prop_assume!(!s.is_empty());
            let rank = pick % s.len() + 1;
            let d = s.dislocate(rank, &v, floor).unwrap();
            prop_assert!((d.total() - s.total()).abs() <= 1e-12 * s.nominal());
            for w in d.parts().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for k in 1..=d.len() {
                prop_assert!(d.lambda(k) <= d.nominal() / k as f64 + 1e-12);
            }
            for k in 1..=10 {
                prop_assert!(d.prefix_mass(k) <= s.prefix_mass(k) + 1e-12);
            }
        }

        #[test]
        fn identity_dislocation_is_identity(s in state(), pick in 0usize..8) {
            prop_assume!(!s.is_empty());
            let d = s.dislocate(pick % s.len() + 1, &[1.0], 0.0).unwrap();
            prop_assert_eq!(d.parts(), s.parts());
        }

        #[test]
        fn scaling_composes(s in state(), l in 0.0f64..=1.0, m in 0.0f64..=1.0) {
            let a = s.scale(l).unwrap().scale(m).unwrap();
            let b = s.scale(l * m).unwrap();
            prop_assert!(uniform_dist(&a, &b) <= 1e-15);
        }
    }
}
