//! Exchangeable partitions of finite sets of positive integers.
//!
//! Blocks are kept sorted, and ordered by their least element. The
//! partition-valued side of a fragmentation is built from three pieces:
//! paintbox sampling from a ranked mass vector, restriction to a subset,
//! and composition of per-block refinements ([`partition_step`]).

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::state::MassState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("restriction to an empty set")]
    EmptyRestriction,
    #[error("element {0} is not in the ground set")]
    NotInGroundSet(usize),
    #[error("refinements do not match the blocks: {0}")]
    RefinementMismatch(String),
    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("invalid blocks: {0}")]
    InvalidBlocks(String),
}

/// Partition of a finite set of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinitePartition {
    blocks: Vec<Vec<usize>>,
}

impl FinitePartition {
    /// Builds and canonicalizes a partition from disjoint non-empty blocks.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        let mut seen = BTreeSet::new();
        for b in &blocks {
            if b.is_empty() {
                return Err(PartitionError::InvalidBlocks("empty block".into()));
            }
            for &e in b {
                if e == 0 {
                    return Err(PartitionError::InvalidBlocks("elements are 1-based".into()));
                }
                if !seen.insert(e) {
                    return Err(PartitionError::InvalidBlocks(format!("element {} appears twice", e)));
                }
            }
        }
        Ok(Self::canonical(blocks))
    }

    fn canonical(mut blocks: Vec<Vec<usize>>) -> Self {
        blocks.retain(|b| !b.is_empty());
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Self { blocks }
    }

    /// `{{1, ..., n}}`.
    pub fn trivial(n: usize) -> Self {
        Self {
            blocks: if n == 0 { Vec::new() } else { vec![(1..=n).collect()] },
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    /// Partition of `{1, ..., labels.len()}` where `i ~ j` iff the labels
    /// agree.
    pub fn from_labels<L: Ord>(labels: &[L]) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then(a.cmp(&b)));
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if pos == 0 || labels[order[pos - 1]] != labels[i] {
                blocks.push(Vec::new());
            }
            blocks.last_mut().expect("pushed above").push(i + 1);
        }
        Self::canonical(blocks)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn ground_set(&self) -> BTreeSet<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Block sizes, largest first.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// True when every block of `self` lies inside some block of `coarser`.
    pub fn refines(&self, coarser: &FinitePartition) -> bool {
        let owner: std::collections::BTreeMap<usize, usize> = coarser
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| b.iter().map(move |&e| (e, bi)))
            .collect();
        self.blocks.iter().all(|b| {
            let first = owner.get(&b[0]);
            first.is_some() && b.iter().all(|e| owner.get(e) == first)
        })
    }

    /// Ranked block frequencies `|B| / n`: the finite-n estimator of the
    /// asymptotic frequencies.
    pub fn frequencies<T: Scalar>(&self) -> MassState<T> {
        let n = self.n();
        if n == 0 {
            return MassState::from_masses(&[], T::zero(), T::one()).expect("empty state");
        }
        let masses: Vec<T> = self
            .blocks
            .iter()
            .map(|b| T::of_usize(b.len()) / T::of_usize(n))
            .collect();
        MassState::from_masses(&masses, T::zero(), T::one()).expect("frequencies sum to one")
    }

    /// `(B_1 ∩ C, B_2 ∩ C, ...)` with empty blocks dropped; element labels
    /// are kept.
    pub fn induced(&self, subset: &[usize]) -> Result<FinitePartition, PartitionError> {
        if subset.is_empty() {
            return Err(PartitionError::EmptyRestriction);
        }
        let keep: BTreeSet<usize> = subset.iter().copied().collect();
        let ground = self.ground_set();
        if let Some(&bad) = keep.iter().find(|e| !ground.contains(e)) {
            return Err(PartitionError::NotInGroundSet(bad));
        }
        Ok(Self::canonical(
            self.blocks
                .iter()
                .map(|b| b.iter().copied().filter(|e| keep.contains(e)).collect())
                .collect(),
        ))
    }

    /// Replaces block `i` by the blocks of `refinements[i]`.
    pub fn compose(&self, refinements: &[FinitePartition]) -> Result<FinitePartition, PartitionError> {
        if refinements.len() != self.blocks.len() {
            return Err(PartitionError::RefinementMismatch(format!(
                "{} refinements for {} blocks",
                refinements.len(),
                self.blocks.len()
            )));
        }
        let mut out = Vec::new();
        for (i, (block, r)) in self.blocks.iter().zip(refinements).enumerate() {
            let elems: Vec<usize> = r.ground_set().into_iter().collect();
            if elems != *block {
                return Err(PartitionError::RefinementMismatch(format!(
                    "refinement {} covers a different element set than block {}",
                    i, i
                )));
            }
            out.extend(r.blocks.iter().cloned());
        }
        Ok(Self::canonical(out))
    }

    /// `sigma(pi)`: `i ~ j` iff `sigma(i) ~ sigma(j)` in `self`, where
    /// `sigma[i - 1]` is the image of `i`. The ground set must be `1..=n`.
    pub fn apply_permutation(&self, sigma: &[usize]) -> Result<FinitePartition, PartitionError> {
        let n = self.n();
        if sigma.len() != n {
            return Err(PartitionError::NotAPermutation(n));
        }
        let mut hit = vec![false; n];
        for &s in sigma {
            if s == 0 || s > n || std::mem::replace(&mut hit[s - 1], true) {
                return Err(PartitionError::NotAPermutation(n));
            }
        }
        let mut label = vec![usize::MAX; n];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &e in b {
                if e > n {
                    return Err(PartitionError::NotAPermutation(n));
                }
                label[e - 1] = bi;
            }
        }
        let relabeled: Vec<usize> = sigma.iter().map(|&s| label[s - 1]).collect();
        Ok(Self::from_labels(&relabeled))
    }
}

/// Paintbox partition of `{1, ..., n}` driven by the ranked masses of `s`
/// (relative to its nominal mass).
pub fn paintbox<T: Scalar, R: Rng + ?Sized>(s: &MassState<T>, n: usize, rng: &mut R) -> FinitePartition {
    let elems: Vec<usize> = (1..=n).collect();
    paintbox_over(s, &elems, rng)
}

/// Paintbox over an arbitrary element list: element `e` joins colour `k`
/// with probability `s_k`, or becomes a singleton with the remaining
/// probability. Draws are consumed in the order of `elems`.
pub fn paintbox_over<T: Scalar, R: Rng + ?Sized>(s: &MassState<T>, elems: &[usize], rng: &mut R) -> FinitePartition {
    let nominal = s.nominal().as_f64();
    let mut cumulative = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for &m in s.parts() {
        acc += m.as_f64() / nominal;
        cumulative.push(acc);
    }
    let mut coloured: Vec<Vec<usize>> = vec![Vec::new(); s.len()];
    let mut out = Vec::new();
    for &e in elems {
        let u: f64 = rng.random();
        let k = cumulative.partition_point(|&c| c <= u);
        if k < coloured.len() {
            coloured[k].push(e);
        } else {
            out.push(vec![e]);
        }
    }
    out.extend(coloured.into_iter().filter(|b| !b.is_empty()));
    FinitePartition::canonical(out)
}

/// One transition of the partition-valued fragmentation over `duration`.
///
/// Blocks are processed in order of least element. For each block `B`,
/// `kernel(|B| / n, duration, rng)` returns a relative mass vector, a
/// paintbox over the elements of `B` is drawn from it, and the refinements
/// are composed. A zero duration returns `p` without consuming randomness.
pub fn partition_step<T, R, E, K>(
    p: &FinitePartition,
    duration: T,
    mut kernel: K,
    rng: &mut R,
) -> Result<FinitePartition, E>
where
    T: Scalar,
    R: Rng + ?Sized,
    K: FnMut(T, T, &mut R) -> Result<MassState<T>, E>,
    E: From<PartitionError>,
{
    if duration <= T::zero() {
        return Ok(p.clone());
    }
    let n = T::of_usize(p.n().max(1));
    let mut refinements = Vec::with_capacity(p.blocks.len());
    for block in &p.blocks {
        let freq = T::of_usize(block.len()) / n;
        let rel = kernel(freq, duration, rng)?;
        refinements.push(paintbox_over(&rel, block, rng));
    }
    p.compose(&refinements).map_err(E::from)
}
