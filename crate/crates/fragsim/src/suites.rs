//! Verification suites: each one simulates replicas, reduces them to a
//! statistic and compares it with an analytic oracle.
//!
//! Replica `i` always runs on stream `i` of the suite seed, and results are
//! collected in replica order, so reports do not depend on the number of
//! worker threads.

use std::collections::BTreeMap;
use std::time::Instant;

use fragsim_core::rng::Stream;
use fragsim_core::{
    frechet_k_cdf, partition_step, ranked_kernel, record_cdf, replica_rng, run_observed, run_replica, run_subordinator,
    DislocationLaw, FinitePartition, LawKind, SimConfig, SimError,
};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ConfigFile};
use crate::report::{Check, Rule, SuiteReport};
use crate::stats::{
    chi_square_test, ks_stat, ks_stat_from, ks_threshold, ks_two_sample, ks_two_sample_threshold, poisson_pmf_test,
    StatsError,
};

pub const SUITES: &[&str] = &[
    "erosion",
    "conservation",
    "poisson-counts",
    "records",
    "sandwich",
    "subordinator",
    "extreme",
    "frechet-k",
    "correspondence",
    "scaling",
];

/// Significance level of the distributional checks.
pub const ALPHA: f64 = 0.01;

/// Values this close (relative) are the same lattice point.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown suite `{0}` (known: {list})", list = SUITES.join(", "))]
    UnknownSuite(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    /// Worker threads; `FRAGSIM_THREADS` is used when unset.
    pub threads: Option<usize>,
}

/// Worker count from the option or `FRAGSIM_THREADS`; `None` lets the pool
/// pick.
pub fn resolve_threads(threads: Option<usize>) -> Option<usize> {
    threads
        .or_else(|| {
            std::env::var("FRAGSIM_THREADS")
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
        })
        .filter(|&n| n > 0)
}

pub fn run_suite(name: &str, user: &ConfigFile, opts: &SuiteOptions) -> Result<SuiteReport, HarnessError> {
    let (defaults, extra_keys, body): (&str, &[&str], SuiteFn) = match name {
        "erosion" => (EROSION, &["factor_atoms", "factor_replicas"], erosion),
        "conservation" => (CONSERVATION, &["prefix_k"], conservation),
        "poisson-counts" => (POISSON, &[], poisson_counts),
        "records" => (RECORDS, &[], records),
        "sandwich" => (SANDWICH, &[], sandwich),
        "subordinator" => (SUBORDINATOR, &[], subordinator),
        "extreme" => (EXTREME, EXTREME_KEYS, extreme),
        "frechet-k" => (FRECHET_K, EXTREME_KEYS, extreme),
        "correspondence" => (CORRESPONDENCE, &["n", "u"], correspondence),
        "scaling" => (SCALING, &["r"], scaling),
        other => return Err(HarnessError::UnknownSuite(other.to_string())),
    };
    user.check_keys(extra_keys)?;
    let mut cfg = user.over(&ConfigFile::parse(defaults).expect("built-in defaults parse"));
    if let Some(seed) = opts.seed {
        cfg.set("seed", seed.to_string());
    }
    if let Some(n) = opts.replicas {
        cfg.set("replicas", n.to_string());
    }
    let seed = cfg.u64_opt("seed")?.unwrap_or(0);
    let replicas = cfg.usize_opt("replicas")?.unwrap_or(1);
    if replicas == 0 {
        return Err(ConfigError::BadValue {
            key: "replicas".into(),
            msg: "must be positive".into(),
        }
        .into());
    }
    let mut echo = cfg.entries().clone();
    echo.insert("seed".into(), seed.to_string());
    echo.insert("replicas".into(), replicas.to_string());
    let ctx = Ctx {
        suite: name,
        cfg,
        seed,
        replicas,
        echo,
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = resolve_threads(opts.threads) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| body(&ctx))
}

type SuiteFn = fn(&Ctx) -> Result<SuiteReport, HarnessError>;

struct Ctx<'a> {
    suite: &'a str,
    cfg: ConfigFile,
    seed: u64,
    replicas: usize,
    echo: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn report(&self, claim: &str) -> SuiteReport {
        SuiteReport::new(self.suite, claim, self.seed, self.replicas, self.echo.clone())
    }

    fn sim(&self) -> Result<SimConfig<f64>, HarnessError> {
        let mut sim = self.cfg.sim_config()?;
        sim.seed = self.seed;
        Ok(sim)
    }
}

/// Runs `f` on replicas `offset .. offset + n` in parallel and returns the
/// results in replica order.
fn par_replicas<R, F>(n: usize, offset: u64, f: F) -> Result<Vec<R>, HarnessError>
where
    R: Send,
    F: Fn(u64) -> Result<R, HarnessError> + Sync,
{
    (0..n as u64).into_par_iter().map(|i| f(offset + i)).collect()
}

fn single_atom(law: &DislocationLaw<f64>) -> Option<(f64, Vec<f64>)> {
    match law.kind() {
        LawKind::FiniteAtomic(atoms) if atoms.len() == 1 => Some((atoms[0].weight, atoms[0].split.clone())),
        _ => None,
    }
}

fn power_index(law: &DislocationLaw<f64>) -> Option<f64> {
    match law.kind() {
        LawKind::BinaryPowerLaw { a } => Some(*a),
        _ => None,
    }
}

fn poisson_pmf(rate: f64, m: usize) -> f64 {
    let mut log = -rate;
    for i in 1..=m {
        log += rate.ln() - (i as f64).ln();
    }
    if m > 0 && rate == 0.0 {
        return 0.0;
    }
    log.exp()
}

// ---------------------------------------------------------------- erosion

const EROSION: &str = "
measure = none
c = 1
t_end = 1
obs_times = 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0
replicas = 1
factor_atoms = 1:0.6,0.4
factor_replicas = 100
";

fn erosion(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx
        .report("pure erosion at rate c gives lambda(t) = (exp(-c t), 0, 0, ...); erosion factorizes out of any path");
    let sim = ctx.sim()?;
    if !sim.law.is_zero() {
        return Err(ConfigError::Invalid("the erosion suite needs `measure = none`".into()).into());
    }
    if sim.obs_times.is_empty() {
        return Err(ConfigError::Invalid("the erosion suite needs observation times".into()).into());
    }

    let start = Instant::now();
    let trajs = par_replicas(ctx.replicas, 0, |r| Ok(run_replica(&sim, r)?))?;
    let mut err: f64 = 0.0;
    let mut extra = 0usize;
    let mut points = 0usize;
    for traj in &trajs {
        for snap in &traj.snapshots {
            let exact = sim.initial_mass * (-sim.c * snap.time).exp();
            err = err.max((snap.state.lambda(1) - exact).abs());
            extra += snap.state.len().saturating_sub(1);
            points += 1;
        }
    }
    let wall = start.elapsed();
    report.push(Check::new("max |lambda1(t) - exp(-c t)|", err, Rule::Below, 1e-12, points).timed(wall));
    report.push(Check::new("fragments besides the first", extra as f64, Rule::AtMost, 0.0, points).timed(wall));

    let start = Instant::now();
    let atoms = ctx.cfg.get("factor_atoms").unwrap_or("1:0.6,0.4");
    let law = crate::config::parse_measure(&format!("measure = atomic; atoms = {}", atoms))?;
    let n_factor = ctx.cfg.usize_opt("factor_replicas")?.unwrap_or(100);
    let mut eroded = sim.clone();
    eroded.law = law;
    let mut plain = eroded.clone();
    plain.c = 0.0;
    let diffs = par_replicas(n_factor, 0, |r| {
        let a = run_replica(&eroded, r)?;
        let b = run_replica(&plain, r)?;
        let mut worst: f64 = 0.0;
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            let f = (-sim.c * sa.time).exp();
            if sa.state.len() != sb.state.len() {
                return Ok(f64::INFINITY);
            }
            for (x, y) in sa.state.parts().iter().zip(sb.state.parts()) {
                worst = worst.max((x - f * y).abs());
            }
        }
        Ok(worst)
    })?;
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    report.push(
        Check::new(
            "max |lambda_c(t) - exp(-c t) lambda_0(t)|",
            worst,
            Rule::Below,
            1e-12,
            n_factor,
        )
        .timed(start.elapsed()),
    );
    Ok(report)
}

// ----------------------------------------------------------- conservation

const CONSERVATION: &str = "
measure = atomic; atoms = 1:0.6,0.4
t_end = 3
replicas = 200
prefix_k = 10
";

fn conservation(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report =
        ctx.report("the ranked process is a pure-jump process that conserves mass and has non-increasing prefix sums");
    let mut sim = ctx.sim()?;
    sim.record_events = false;
    let k_max = ctx.cfg.usize_opt("prefix_k")?.unwrap_or(10);

    let start = Instant::now();
    let per = par_replicas(ctx.replicas, 0, |r| {
        let (mut events, mut mass_bad, mut prefix_bad, mut rank_bad) = (0usize, 0usize, 0usize, 0usize);
        let traj = run_observed(&sim, r, |_, before, after| {
            events += 1;
            if (after.total() - after.nominal()).abs() > 1e-9 {
                mass_bad += 1;
            }
            if (1..=k_max).any(|k| after.prefix_mass(k) > before.prefix_mass(k) + 1e-12) {
                prefix_bad += 1;
            }
            if after.parts().windows(2).any(|w| w[0] < w[1]) {
                rank_bad += 1;
            }
        })?;
        Ok((events, mass_bad, prefix_bad, rank_bad, traj.cap_hit))
    })?;
    let wall = start.elapsed();
    let events: usize = per.iter().map(|p| p.0).sum();
    let sum = |f: fn(&(usize, usize, usize, usize, bool)) -> usize| per.iter().map(f).sum::<usize>() as f64;
    report.push(Check::new("conservation violations", sum(|p| p.1), Rule::AtMost, 0.0, events).timed(wall));
    report.push(Check::new("prefix-mass increases", sum(|p| p.2), Rule::AtMost, 0.0, events).timed(wall));
    report.push(Check::new("ranking violations", sum(|p| p.3), Rule::AtMost, 0.0, events).timed(wall));
    let capped = per.iter().filter(|p| p.4).count();
    if capped > 0 {
        report.note(format!("{} replica(s) hit the fragment cap", capped));
    }
    Ok(report)
}

// --------------------------------------------------------- poisson-counts

const POISSON: &str = "
measure = atomic; atoms = 1:0.9,0.1
t_end = 0.5
replicas = 10000
";

fn poisson_counts(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx.report("dislocations of the largest fragment form a Poisson point process with intensity nu");
    let mut sim = ctx.sim()?;
    if sim.alpha != 0.0 {
        return Err(ConfigError::Invalid("rank-one counts are Poisson only for alpha = 0".into()).into());
    }
    sim.record_events = false;
    sim.obs_times = vec![sim.t_end];
    let t = sim.t_end;
    let rate = t * sim.law.truncated_mass(sim.eps);

    let start = Instant::now();
    let per = par_replicas(ctx.replicas, 0, |r| {
        let traj = run_replica(&sim, r)?;
        Ok((traj.rank_one_events_until(t), traj.snapshots[0].state.lambda(1)))
    })?;
    let wall = start.elapsed();
    let max_count = per.iter().map(|p| p.0).max().unwrap_or(0);
    let mut hist = vec![0u64; max_count + 1];
    for p in &per {
        hist[p.0] += 1;
    }
    let chi = poisson_pmf_test(&hist, rate)?;
    report.push(
        Check::new(
            "chi-square p-value, rank-one counts",
            chi.p_value,
            Rule::Above,
            ALPHA,
            ctx.replicas,
        )
        .timed(wall),
    );
    report.note(format!(
        "chi-square {:.4} on {} dof, expected rank-one count {}",
        chi.statistic, chi.dof, rate
    ));

    if let Some((_, split)) = single_atom(&sim.law) {
        let s1 = split[0];
        let n = ctx.replicas as f64;
        let mut worst_z: f64 = 0.0;
        for m in 0..=3usize {
            let level = sim.initial_mass * s1.powi(m as i32);
            let hits = per.iter().filter(|p| (p.1 - level).abs() <= TIE_TOL * level).count() as f64;
            let p = poisson_pmf(rate, m);
            let se = (p * (1.0 - p) / n).sqrt();
            worst_z = worst_z.max((hits / n - p).abs() / se);
        }
        report.push(
            Check::new(
                "max z-score of P(lambda1(t) = s1^m), m = 0..3",
                worst_z,
                Rule::Below,
                3.0,
                ctx.replicas,
            )
            .timed(wall),
        );
    }
    Ok(report)
}

// ----------------------------------------------------------------- records

const RECORDS: &str = "
measure = binary_power; a = 0.5
eps = 1e-4
t_end = 0.01
replicas = 10000
";

fn records(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report =
        ctx.report("the record R(t) of second pieces shed by the largest fragment has CDF exp(-t nu(s2 > x))");
    let mut sim = ctx.sim()?;
    sim.record_events = false;
    sim.obs_times = vec![];
    let t = sim.t_end;

    let start = Instant::now();
    let samples = par_replicas(ctx.replicas, 0, |r| Ok(run_replica(&sim, r)?.record_value(t)))?;
    let ks = ks_stat_from(&samples, |x| record_cdf(&sim.law, t, x), sim.eps)?;
    report.push(Check::new("KS on x >= eps", ks, Rule::Below, 0.02, ctx.replicas).timed(start.elapsed()));
    report.note(format!(
        "KS threshold at alpha = {}: {:.5}",
        ALPHA,
        ks_threshold(ctx.replicas.max(50), ALPHA)?
    ));
    Ok(report)
}

// ---------------------------------------------------------------- sandwich

const SANDWICH: &str = "
measure = binary_power; a = 0.5
eps = 1e-4
t_end = 0.01
replicas = 10000
";

fn sandwich(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx.report("on {lambda1(t) >= 1/2}, chi_t R(t) <= lambda2(t) <= R(t) pathwise");
    let mut sim = ctx.sim()?;
    sim.record_events = false;
    let t = sim.t_end;
    sim.obs_times = vec![t];
    let half = 0.5 * sim.initial_mass;

    let start = Instant::now();
    let per = par_replicas(ctx.replicas, 0, |r| {
        let traj = run_replica(&sim, r)?;
        let state = &traj.snapshots[0].state;
        if state.lambda(1) < half {
            return Ok(None);
        }
        let (l2, rec, chi) = (state.lambda(2), traj.record_value(t), traj.chi_value(t));
        let lower_bad = chi * rec * sim.initial_mass > l2 + 1e-12;
        let upper_bad = l2 > rec * sim.initial_mass + 1e-12;
        Ok(Some((lower_bad, upper_bad)))
    })?;
    let wall = start.elapsed();
    let eligible: Vec<_> = per.iter().flatten().collect();
    let frac = eligible.len() as f64 / ctx.replicas as f64;
    report.push(Check::new("fraction with lambda1(t) >= 1/2", frac, Rule::Above, 0.99, ctx.replicas).timed(wall));
    let lower = eligible.iter().filter(|v| v.0).count() as f64;
    let upper = eligible.iter().filter(|v| v.1).count() as f64;
    report.push(Check::new("lower-bound violations", lower, Rule::AtMost, 0.0, eligible.len()).timed(wall));
    report.push(Check::new("upper-bound violations", upper, Rule::AtMost, 0.0, eligible.len()).timed(wall));
    Ok(report)
}

// ------------------------------------------------------------ subordinator

const SUBORDINATOR: &str = "
measure = atomic; atoms = 1:0.9,0.1
t_end = 1
replicas = 10000
";

fn subordinator(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx.report(
        "-log lambda1 is driven by a subordinator with drift c, jump measure exp(-x) nu(-log s1 in dx) and killing",
    );
    let sim = ctx.sim()?;
    let (w, split) = single_atom(&sim.law)
        .ok_or_else(|| ConfigError::Invalid("the subordinator suite needs a single-atom measure".into()))?;
    let s1 = split[0];
    if !(s1 > 0.0 && s1 < 1.0) {
        return Err(ConfigError::Invalid("the atom needs 0 < s1 < 1".into()).into());
    }
    let t = sim.t_end;
    let spec = sim
        .law
        .sub_levy_transform(sim.c, sim.eps)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    // oracle from the atom alone
    let x = -s1.ln();
    let jump_rate = w * s1;
    let kill_rate = w * (1.0 - s1);
    let survival = (-kill_rate * t).exp();

    let start = Instant::now();
    let draws = par_replicas(ctx.replicas, 0, |r| {
        let mut rng: Stream = replica_rng(ctx.seed, r);
        Ok(run_subordinator(&spec, t, &mut rng))
    })?;
    let wall = start.elapsed();

    let mut off_lattice = 0usize;
    let mut killed = 0usize;
    let mut jumps: Vec<usize> = Vec::new();
    for &(value, alive) in &draws {
        if !alive {
            killed += 1;
            continue;
        }
        let m = ((value - sim.c * t) / x).round();
        if m < 0.0 || (value - sim.c * t - m * x).abs() > 1e-9 * (1.0 + value) {
            off_lattice += 1;
            continue;
        }
        jumps.push(m as usize);
    }
    let n = ctx.replicas as f64;
    let m_max = jumps.iter().copied().max().unwrap_or(0).max(8);
    let mut observed = vec![killed as f64];
    observed.extend(std::iter::repeat_n(0.0, m_max + 2));
    for &m in &jumps {
        observed[1 + m] += 1.0;
    }
    let mut expected = vec![n * (1.0 - survival)];
    let mut head = 0.0;
    for m in 0..=m_max {
        let p = survival * poisson_pmf(jump_rate * t, m);
        head += p;
        expected.push(n * p);
    }
    expected.push(n * (survival - head).max(0.0));
    let chi = chi_square_test(&observed, &expected)?;
    report.push(
        Check::new(
            "chi-square p-value over (killed, jump count)",
            chi.p_value,
            Rule::Above,
            ALPHA,
            ctx.replicas,
        )
        .timed(wall),
    );
    report.push(
        Check::new(
            "off-lattice values",
            off_lattice as f64,
            Rule::AtMost,
            0.0,
            ctx.replicas,
        )
        .timed(wall),
    );
    let alive = 1.0 - killed as f64 / n;
    let se = (survival * (1.0 - survival) / n).sqrt();
    report.push(
        Check::new(
            "|survival frequency - exp(-k t)| / SE",
            (alive - survival).abs() / se,
            Rule::Below,
            3.0,
            ctx.replicas,
        )
        .timed(wall),
    );
    report.note(format!(
        "jump size {:.7}, jump rate {}, killing rate {}, survival {:.7}",
        x, jump_rate, kill_rate, survival
    ));
    Ok(report)
}

// ------------------------------------------------------ extreme, frechet-k

const EXTREME_KEYS: &[&str] = &["t_large", "k_values", "eps_rel", "floor_rel", "directional_replicas"];

const EXTREME: &str = "
measure = binary_power; a = 0.5
eps = 1e-5
t_end = 1e-3
t_large = 1e-2
k_values = 1
eps_rel = 0.01
floor_rel = 1e-3
replicas = 10000
";

const FRECHET_K: &str = "
measure = binary_power; a = 0.5
eps = 1e-5
t_end = 1e-3
t_large = 1e-2
k_values = 2, 3
eps_rel = 0.01
floor_rel = 1e-3
replicas = 10000
directional_replicas = 200000
";

/// KS limits for the normalized `(k+1)`-th largest fragment.
fn extreme_tolerance(k: usize) -> f64 {
    if k == 1 {
        0.05
    } else {
        0.07
    }
}

/// `lambda_{k+1}(t) / f(1/t)` is compared with the `k`-th limit law
/// `F_{k,a}`; `k = 1` is `exp(-x^-a)`. The same replica streams are used at
/// both times. The tolerance checks use the first `replicas` replicas; the
/// comparison between the two times uses `directional_replicas`.
fn extreme(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx.report(
        "lambda_{k+1}(t) / f(1/t) converges in law to F_{k,a}(x) = sum_{i<k} exp(-x^-a) x^(-a i) / i! as t -> 0",
    );
    let base = ctx.sim()?;
    let a = power_index(&base.law)
        .ok_or_else(|| ConfigError::Invalid("this suite needs `measure = binary_power`".into()))?;
    let t_small = base.t_end;
    let t_large = ctx.cfg.f64_or("t_large", 10.0 * t_small)?;
    if !(t_large > t_small) {
        return Err(ConfigError::Invalid("t_large must exceed t_end".into()).into());
    }
    let ks_list: Vec<usize> = ctx
        .cfg
        .list_f64("k_values")?
        .unwrap_or_else(|| vec![1.0])
        .into_iter()
        .map(|k| k as usize)
        .collect();
    if ks_list.contains(&0) {
        return Err(ConfigError::Invalid("k_values are 1-based".into()).into());
    }
    let eps_rel = ctx.cfg.f64_or("eps_rel", 0.0)?;
    let floor_rel = ctx.cfg.f64_or("floor_rel", 0.0)?;
    let n_dir = ctx.cfg.usize_opt("directional_replicas")?.unwrap_or(ctx.replicas);
    let n_run = ctx.replicas.max(n_dir);

    let mut stats = Vec::new();
    for &t in &[t_small, t_large] {
        let f = base.law.gen_inverse_f(1.0 / t);
        if !(f > 0.0) {
            return Err(ConfigError::Invalid(format!("f(1/t) vanishes at t = {}", t)).into());
        }
        let mut sim = base.clone();
        sim.t_end = t;
        sim.obs_times = vec![t];
        sim.record_events = false;
        if eps_rel > 0.0 {
            sim.eps = eps_rel * f;
        }
        sim.mass_floor = floor_rel * f;
        sim.validate()?;
        report.note(format!(
            "t = {:e}: f(1/t) = {:.6e}, eps = {:.6e}, mass floor = {:.6e}",
            t, f, sim.eps, sim.mass_floor
        ));
        let start = Instant::now();
        let depth = ks_list.iter().copied().max().unwrap_or(1) + 1;
        let rows = par_replicas(n_run, 0, |r| {
            let traj = run_replica(&sim, r)?;
            let st = &traj.snapshots[0].state;
            Ok((2..=depth).map(|j| st.lambda(j) / f).collect::<Vec<f64>>())
        })?;
        let wall = start.elapsed();
        let mut per_k = Vec::new();
        for &k in &ks_list {
            let column = |n: usize| -> Vec<f64> { rows[..n].iter().map(|row| row[k - 1]).collect() };
            let ks = ks_stat(&column(ctx.replicas), |x| frechet_k_cdf(k, a, x))?;
            let ks_dir = ks_stat(&column(n_dir), |x| frechet_k_cdf(k, a, x))?;
            per_k.push((k, ks, ks_dir, wall));
        }
        stats.push(per_k);
    }
    for (small, large) in stats[0].iter().zip(&stats[1]) {
        let (k, ks, ks_dir, wall) = *small;
        report.push(
            Check::new(
                &format!("KS k = {} at t = {:e}", k, t_small),
                ks,
                Rule::Below,
                extreme_tolerance(k),
                ctx.replicas,
            )
            .timed(wall),
        );
        report.push(
            Check::new(
                &format!("KS k = {} at t = {:e} minus KS at t = {:e}", k, t_small, t_large),
                ks_dir - large.2,
                Rule::Below,
                0.0,
                n_dir,
            )
            .timed(wall + large.3),
        );
    }
    report.note(format!(
        "KS threshold at alpha = {}: {:.5}",
        ALPHA,
        ks_threshold(ctx.replicas.max(50), ALPHA)?
    ));
    Ok(report)
}

// ---------------------------------------------------------- correspondence

const CORRESPONDENCE: &str = "
measure = atomic; atoms = 1:0.6,0.4
t_end = 0.3
replicas = 2000
n = 1000
u = 0.15
";

fn largest_block_frequency(p: &FinitePartition) -> f64 {
    p.block_sizes().first().copied().unwrap_or(0) as f64 / p.n() as f64
}

/// Largest block frequency of a paintbox on `n` points drawn from
/// conditional binomial counts instead of per-point labels.
fn multinomial_largest(parts: &[f64], nominal: f64, n: usize, rng: &mut Stream) -> f64 {
    let mut left = n as u64;
    let mut mass_left = 1.0;
    let mut best = 0u64;
    for &m in parts {
        if left == 0 || !(mass_left > 0.0) {
            break;
        }
        let q = m / nominal;
        let p = (q / mass_left).clamp(0.0, 1.0);
        let c = Binomial::new(left, p).expect("probability in [0, 1]").sample(rng);
        best = best.max(c);
        left -= c;
        mass_left -= q;
    }
    if left > 0 {
        best = best.max(1);
    }
    best as f64 / n as f64
}

fn correspondence(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report = ctx.report(
        "paintboxes of the ranked process give an exchangeable partition-valued fragmentation with the same law, and its transitions compose",
    );
    let mut sim = ctx.sim()?;
    sim.record_events = false;
    let t = sim.t_end;
    sim.obs_times = vec![t];
    let n = ctx.cfg.usize_opt("n")?.unwrap_or(1000);
    let u = ctx.cfg.f64_or("u", 0.5 * t)?;
    if n == 0 || !(u > 0.0 && u < t) {
        return Err(ConfigError::Invalid("need n > 0 and 0 < u < t_end".into()).into());
    }
    let reps = ctx.replicas;
    let offset = |block: u64| block * reps as u64;
    let step = |p: &FinitePartition, d: f64, rng: &mut Stream| -> Result<FinitePartition, HarnessError> {
        Ok(partition_step(p, d, ranked_kernel::<f64, Stream>(&sim), rng)?)
    };

    let start = Instant::now();
    let ranked = par_replicas(reps, offset(0), |r| {
        Ok(run_replica(&sim, r)?.snapshots[0].state.lambda(1))
    })?;
    let one_step = par_replicas(reps, offset(1), |r| {
        let mut rng = replica_rng(ctx.seed, r);
        Ok(largest_block_frequency(&step(
            &FinitePartition::trivial(n),
            t,
            &mut rng,
        )?))
    })?;
    let ks = ks_two_sample(&ranked, &one_step, TIE_TOL)?;
    report.push(
        Check::new(
            "two-sample KS, lambda1 vs largest block frequency",
            ks,
            Rule::Below,
            0.05,
            reps,
        )
        .timed(start.elapsed()),
    );

    // same comparison with the finite-n sampling noise put on both sides
    let start = Instant::now();
    let oracle = par_replicas(reps, offset(3), |r| {
        let state = run_replica(&sim, r)?.snapshots.swap_remove(0).state;
        let mut rng = replica_rng(ctx.seed, r + reps as u64);
        Ok(multinomial_largest(state.parts(), state.nominal(), n, &mut rng))
    })?;
    let ks_oracle = ks_two_sample(&one_step, &oracle, TIE_TOL)?;
    report.push(
        Check::new(
            "two-sample KS, largest block frequency vs multinomial paintbox of lambda(t)",
            ks_oracle,
            Rule::Below,
            ks_two_sample_threshold(reps.max(50), reps.max(50), ALPHA)?,
            reps,
        )
        .timed(start.elapsed()),
    );

    let start = Instant::now();
    let two_step = par_replicas(reps, offset(5), |r| {
        let mut rng = replica_rng(ctx.seed, r);
        let mid = step(&FinitePartition::trivial(n), u, &mut rng)?;
        Ok(largest_block_frequency(&step(&mid, t - u, &mut rng)?))
    })?;
    let ks2 = ks_two_sample(&one_step, &two_step, TIE_TOL)?;
    report
        .push(Check::new("two-sample KS, one step vs two steps", ks2, Rule::Below, 0.05, reps).timed(start.elapsed()));
    report.note(format!(
        "two-sample KS threshold at alpha = {}: {:.5}; finite-n slack about 1/(2 sqrt(n)) = {:.5}",
        ALPHA,
        ks_two_sample_threshold(reps.max(50), reps.max(50), ALPHA)?,
        0.5 / (n as f64).sqrt()
    ));
    Ok(report)
}

// ----------------------------------------------------------------- scaling

const SCALING: &str = "
measure = atomic; atoms = 1:0.6,0.4
alpha = 1
t_end = 0.4
r = 0.5
replicas = 5000
";

fn scaling(ctx: &Ctx) -> Result<SuiteReport, HarnessError> {
    let mut report =
        ctx.report("started from mass r, the process has the law of (r lambda(r^alpha t), t >= 0) started from mass 1");
    let mut sim = ctx.sim()?;
    sim.record_events = false;
    let r = ctx.cfg.f64_or("r", 0.5)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(ConfigError::Invalid("r must be in (0, 1]".into()).into());
    }
    let t = sim.t_end;
    let mut small = sim.clone();
    small.initial_mass = r;
    small.obs_times = vec![t];
    let mut unit = sim.clone();
    unit.initial_mass = 1.0;
    unit.t_end = r.powf(sim.alpha) * t;
    unit.obs_times = vec![unit.t_end];
    small.validate()?;
    unit.validate()?;

    let reps = ctx.replicas;
    let start = Instant::now();
    let a = par_replicas(reps, 0, |i| Ok(run_replica(&small, i)?.snapshots[0].state.lambda(1)))?;
    let b = par_replicas(reps, reps as u64, |i| {
        Ok(r * run_replica(&unit, i)?.snapshots[0].state.lambda(1))
    })?;
    let ks = ks_two_sample(&a, &b, TIE_TOL)?;
    report.push(
        Check::new(
            "two-sample KS, mass r vs rescaled unit mass",
            ks,
            Rule::Below,
            0.03,
            reps,
        )
        .timed(start.elapsed()),
    );
    report.note(format!(
        "two-sample KS threshold at alpha = {}: {:.5}",
        ALPHA,
        ks_two_sample_threshold(reps.max(50), reps.max(50), ALPHA)?
    ));
    Ok(report)
}
