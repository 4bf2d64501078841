//! Event-driven simulation of a ranked fragmentation from a Poisson point
//! process of dislocations.
//!
//! Every tracked fragment of mass `m` carries an exponential clock of rate
//! `m^alpha * nu_eps(S)`, where `nu_eps` is the dislocation measure
//! restricted to `{1 - s_1 >= eps}`. Because the clocks are memoryless the
//! next event is drawn afresh after each jump: the waiting time is
//! exponential with the summed rate and the target rank is chosen in
//! proportion to the individual rates. The chosen fragment is replaced by
//! its pieces and the sequence re-ranked.
//!
//! Erosion is applied analytically: the snapshot at time `t` is the
//! erosion-free state multiplied by `exp(-c t)`.
//!
//! Alongside the state the simulator keeps the record `R(t)` of the second
//! pieces produced by rank-one dislocations, and the product `chi_t` of the
//! first pieces over rank-one and rank-two dislocations.

use rand::Rng;
use thiserror::Error;

use crate::measure::{DislocationLaw, ErosionAndIndex, MeasureError, Truncated};
use crate::partition::PartitionError;
use crate::rng::{exponential, replica_rng};
use crate::scalar::Scalar;
use crate::state::{MassState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("no fragments left to dislocate")]
    DeadState,
    #[error("fragment cap {cap} exceeded at time {time}")]
    FragmentCapExceeded { time: f64, cap: usize },
}

#[derive(Debug, Clone)]
pub struct SimConfig<T> {
    pub law: DislocationLaw<T>,
    pub alpha: T,
    pub c: T,
    pub eps: T,
    pub t_end: T,
    pub obs_times: Vec<T>,
    pub max_fragments: usize,
    pub mass_floor: T,
    pub initial_mass: T,
    pub seed: u64,
    /// Keep the full event log; the record and chi traces are always kept.
    pub record_events: bool,
    /// Return [`SimError::FragmentCapExceeded`] instead of flagging.
    pub fail_on_cap: bool,
}

impl<T: Scalar> SimConfig<T> {
    /// Homogeneous, erosion-free defaults observed once at `t_end`.
    pub fn new(law: DislocationLaw<T>, t_end: T) -> Self {
        Self {
            law,
            alpha: T::zero(),
            c: T::zero(),
            eps: T::of(1e-4),
            t_end,
            obs_times: vec![t_end],
            max_fragments: 1_000_000,
            mass_floor: T::zero(),
            initial_mass: T::one(),
            seed: 0,
            record_events: true,
            fail_on_cap: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        ErosionAndIndex::new(self.c, self.alpha)?;
        if !(self.t_end >= T::zero() && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if self.obs_times.windows(2).any(|w| !(w[0] <= w[1])) {
            return bad("obs_times must be sorted".into());
        }
        if self.obs_times.iter().any(|&t| !(t >= T::zero() && t <= self.t_end)) {
            return bad("obs_times must lie in [0, t_end]".into());
        }
        if !(self.eps >= T::zero()) || (self.law.is_infinite_activity() && !(self.eps > T::zero())) {
            return bad(format!(
                "eps must be positive for an infinite-activity measure, got {}",
                self.eps
            ));
        }
        if !(self.initial_mass > T::zero() && self.initial_mass <= T::one()) {
            return bad(format!("initial_mass must be in (0, 1], got {}", self.initial_mass));
        }
        if !(self.mass_floor >= T::zero()) {
            return bad(format!("mass_floor must be >= 0, got {}", self.mass_floor));
        }
        if self.max_fragments == 0 {
            return bad("max_fragments must be positive".into());
        }
        Ok(())
    }
}

/// One atom of the dislocation point process, as applied.
#[derive(Debug, Clone, PartialEq)]
pub struct EventAtom<T> {
    pub time: T,
    /// Rank of the dislocated fragment just before the event.
    pub target_rank: usize,
    /// Relative split vector.
    pub s: Vec<T>,
    pub parent_mass: T,
    /// The fragment cap was hit and the smallest fragments went to dust.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub time: T,
    pub state: MassState<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub snapshots: Vec<Snapshot<T>>,
    /// Empty unless [`SimConfig::record_events`] is set.
    pub events: Vec<EventAtom<T>>,
    /// `(time, R)` after every rank-one event.
    pub record_trace: Vec<(T, T)>,
    /// `(time, chi)` after every rank-one or rank-two event.
    pub chi_trace: Vec<(T, T)>,
    pub event_count: usize,
    pub cap_hit: bool,
    pub t_end: T,
}

impl<T: Scalar> Trajectory<T> {
    /// `R(t)`: largest second piece over rank-one events at times `<= t`.
    pub fn record_value(&self, t: T) -> T {
        let k = self.record_trace.partition_point(|&(time, _)| time <= t);
        if k == 0 {
            T::zero()
        } else {
            self.record_trace[k - 1].1
        }
    }

    /// `chi_t`: product of first pieces over rank-one and rank-two events
    /// at times `< t`.
    pub fn chi_value(&self, t: T) -> T {
        let k = self.chi_trace.partition_point(|&(time, _)| time < t);
        if k == 0 {
            T::one()
        } else {
            self.chi_trace[k - 1].1
        }
    }

    /// Number of rank-one events at times `<= t`.
    pub fn rank_one_events_until(&self, t: T) -> usize {
        self.record_trace.partition_point(|&(time, _)| time <= t)
    }

    /// The `k`-th largest second piece among rank-one events at times `<= t`
    /// (zero if there are fewer than `k`). Requires the event log.
    pub fn kth_rank_one_piece(&self, t: T, k: usize) -> T {
        let mut pieces: Vec<T> = self
            .events
            .iter()
            .take_while(|e| e.time <= t)
            .filter(|e| e.target_rank == 1)
            .map(|e| e.s.get(1).copied().unwrap_or_else(T::zero))
            .collect();
        pieces.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        pieces.get(k - 1).copied().unwrap_or_else(T::zero)
    }

    /// Snapshot taken at exactly `t`, if `t` was an observation time.
    pub fn snapshot_at(&self, t: T) -> Option<&MassState<T>> {
        self.snapshots.iter().find(|s| s.time == t).map(|s| &s.state)
    }
}

fn rates_denominator<T: Scalar>(state: &MassState<T>, alpha: T) -> T {
    if alpha == T::zero() {
        T::of_usize(state.len())
    } else {
        state.parts().iter().fold(T::zero(), |acc, &m| acc + m.powf(alpha))
    }
}

/// Draws the next dislocation: waiting time, target rank and split vector.
pub fn next_event_truncated<T: Scalar, R: Rng + ?Sized>(
    state: &MassState<T>,
    truncated: &Truncated<T>,
    alpha: T,
    rng: &mut R,
    split: &mut Vec<T>,
) -> Result<(T, usize), SimError> {
    if state.is_empty() {
        return Err(SimError::DeadState);
    }
    let weight = rates_denominator(state, alpha);
    let wait = exponential(weight * truncated.mass(), rng);
    let rank = if alpha == T::zero() {
        let n = state.len();
        ((rng.random::<f64>() * n as f64) as usize).min(n - 1) + 1
    } else {
        let u = T::of(rng.random::<f64>()) * weight;
        let mut acc = T::zero();
        let mut chosen = state.len();
        for (i, &m) in state.parts().iter().enumerate() {
            acc = acc + m.powf(alpha);
            if u < acc {
                chosen = i + 1;
                break;
            }
        }
        chosen
    };
    truncated.sample_into(rng, split);
    Ok((wait, rank))
}

/// [`next_event_truncated`] for an untruncated law.
pub fn next_event<T: Scalar, R: Rng + ?Sized>(
    state: &MassState<T>,
    law: &DislocationLaw<T>,
    alpha: T,
    eps: T,
    rng: &mut R,
) -> Result<(T, usize, Vec<T>), SimError> {
    if state.is_empty() {
        return Err(SimError::DeadState);
    }
    let truncated = law.truncate(eps)?;
    let mut split = Vec::new();
    let (wait, rank) = next_event_truncated(state, &truncated, alpha, rng, &mut split)?;
    Ok((wait, rank, split))
}

/// Runs replica 0 of `config`.
pub fn run<T: Scalar>(config: &SimConfig<T>) -> Result<Trajectory<T>, SimError> {
    run_replica(config, 0)
}

/// Runs the replica with stream `replica` under `config.seed`.
pub fn run_replica<T: Scalar>(config: &SimConfig<T>, replica: u64) -> Result<Trajectory<T>, SimError> {
    let mut rng = replica_rng(config.seed, replica);
    run_with_rng(config, &mut rng)
}

pub fn run_with_rng<T: Scalar, R: Rng + ?Sized>(config: &SimConfig<T>, rng: &mut R) -> Result<Trajectory<T>, SimError> {
    simulate(
        config,
        rng,
        None::<&mut fn(&EventAtom<T>, &MassState<T>, &MassState<T>)>,
    )
}

/// Like [`run_replica`], calling `observer(event, before, after)` on every
/// event with the erosion-free states around it.
pub fn run_observed<T, F>(config: &SimConfig<T>, replica: u64, mut observer: F) -> Result<Trajectory<T>, SimError>
where
    T: Scalar,
    F: FnMut(&EventAtom<T>, &MassState<T>, &MassState<T>),
{
    let mut rng = replica_rng(config.seed, replica);
    simulate(config, &mut rng, Some(&mut observer))
}

fn simulate<T, R, F>(
    config: &SimConfig<T>,
    rng: &mut R,
    mut observer: Option<&mut F>,
) -> Result<Trajectory<T>, SimError>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&EventAtom<T>, &MassState<T>, &MassState<T>),
{
    config.validate()?;
    let truncated = if config.law.is_zero() || !(config.law.truncated_mass(config.eps) > T::zero()) {
        None
    } else {
        Some(config.law.truncate(config.eps)?)
    };

    let mut state = MassState::unit(config.initial_mass)?;
    let mut traj = Trajectory {
        snapshots: Vec::with_capacity(config.obs_times.len()),
        events: Vec::new(),
        record_trace: Vec::new(),
        chi_trace: Vec::new(),
        event_count: 0,
        cap_hit: false,
        t_end: config.t_end,
    };
    let mut now = T::zero();
    let mut next_obs = 0;
    let mut record = T::zero();
    let mut chi = T::one();
    let mut split = Vec::new();

    loop {
        let (wait, rank) = match &truncated {
            Some(tr) if !state.is_empty() => next_event_truncated(&state, tr, config.alpha, rng, &mut split)?,
            _ => (T::infinity(), 0),
        };
        let t_next = now + wait;
        while next_obs < config.obs_times.len() && config.obs_times[next_obs] < t_next {
            let t_obs = config.obs_times[next_obs];
            traj.snapshots.push(Snapshot {
                time: t_obs,
                state: state.erode((-config.c * t_obs).exp())?,
            });
            next_obs += 1;
        }
        if !(t_next <= config.t_end) {
            break;
        }
        now = t_next;

        let before = observer.as_ref().map(|_| state.clone());
        let outcome = state.dislocate_in_place(rank, &split, config.mass_floor)?;
        let mut capped = false;
        if state.len() > config.max_fragments {
            if config.fail_on_cap {
                return Err(SimError::FragmentCapExceeded {
                    time: now.as_f64(),
                    cap: config.max_fragments,
                });
            }
            state.truncate_to(config.max_fragments);
            capped = true;
            traj.cap_hit = true;
        }
        traj.event_count += 1;

        let s1 = split.first().copied().unwrap_or_else(T::zero);
        let s2 = split.get(1).copied().unwrap_or_else(T::zero);
        if rank == 1 {
            record = record.max(s2);
            traj.record_trace.push((now, record));
        }
        if rank <= 2 {
            chi = chi * s1;
            traj.chi_trace.push((now, chi));
        }

        if config.record_events || observer.is_some() {
            let atom = EventAtom {
                time: now,
                target_rank: rank,
                s: split.clone(),
                parent_mass: outcome.parent_mass,
                capped,
            };
            if let (Some(obs), Some(before)) = (observer.as_mut(), before.as_ref()) {
                obs(&atom, before, &state);
            }
            if config.record_events {
                traj.events.push(atom);
            }
        }
    }
    Ok(traj)
}

/// Fragmentation kernel for [`crate::partition::partition_step`]: the
/// ranked state at time `m^alpha * t` of a unit mass, as relative masses.
pub fn ranked_kernel<T: Scalar, R: Rng + ?Sized>(
    template: &SimConfig<T>,
) -> impl FnMut(T, T, &mut R) -> Result<MassState<T>, SimError> + '_ {
    move |mass: T, duration: T, rng: &mut R| {
        let clock = if template.alpha == T::zero() {
            duration
        } else {
            mass.powf(template.alpha) * duration
        };
        let mut cfg = template.clone();
        cfg.initial_mass = T::one();
        cfg.t_end = clock;
        cfg.obs_times = vec![clock];
        cfg.record_events = false;
        let traj = run_with_rng(&cfg, rng)?;
        Ok(traj.snapshots.into_iter().next().expect("one observation time").state)
    }
}
