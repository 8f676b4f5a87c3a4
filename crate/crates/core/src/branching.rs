//! The driving locally largest chain, the size-biased spine chain with
//! killing, and the full Ulam–Harris particle system with freezing.
//!
//! A system run starts from a single particle of size `n`. At every
//! step each unfrozen particle either grows or splits; after a split
//! the particle identity follows the larger fragment and the smaller
//! one becomes a child. Children of one particle are ranked by size,
//! non-increasing, chronologically among equals. Every particle owns a
//! random stream keyed by its label, so runs are reproducible under any
//! scheduling.

use crate::exponents::ExponentError;
use crate::kernels::{FrozenKernel, Kernel, KernelError, KernelOutcome};
use crate::rng::RunRng;
use crate::scalar::Scalar;
use num_traits::{Float, One, Zero};
use crate::stats::KahanSum;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Ulam–Harris label; the root is the empty word.
pub type Label = Vec<u32>;

#[derive(Debug, Error)]
pub enum BranchingError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("size-biased chain has negative killing mass {mass} at state {state}; the freezing threshold does not certify kappa_n(p_bar) <= 0")]
    NegativeKilling { state: u64, mass: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Trajectory of the locally largest chain, stopped at the freezing
/// threshold or at the step cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainPath {
    /// Visited states; `states[0]` is the start. If absorbed, the last
    /// entry is the first state at or below the threshold.
    pub states: Vec<u64>,
    /// Step cap reached before absorption.
    pub capped: bool,
}

impl ChainPath {
    pub fn start(&self) -> u64 {
        self.states[0]
    }

    pub fn absorbed(&self) -> bool {
        !self.capped
    }

    /// Absorption index `min { k : states[k] <= B }`, when absorbed.
    pub fn lifetime(&self) -> Option<u64> {
        self.absorbed().then(|| (self.states.len() - 1) as u64)
    }

    /// State at time `k`, constant after absorption.
    pub fn state_at(&self, k: u64) -> u64 {
        let idx = (k as usize).min(self.states.len() - 1);
        self.states[idx]
    }

    /// Negative jumps `(k, drop)`: at time `k` the chain moved down by
    /// `drop`, begetting a child of that size.
    pub fn negative_jumps(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.states
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] < w[0])
            .map(|(i, w)| ((i + 1) as u64, w[0] - w[1]))
    }
}

/// Simulates the locally largest chain from `n` until absorption in
/// `{1..B}` or `step_cap` steps.
pub fn simulate_chain<K: Kernel, R: Rng + ?Sized>(
    kernel: &FrozenKernel<K>,
    n: u64,
    step_cap: u64,
    rng: &mut R,
) -> Result<ChainPath, BranchingError> {
    if n == 0 {
        return Err(BranchingError::InvalidParameter(
            "chains start from n >= 1".into(),
        ));
    }
    let mut states = vec![n];
    let mut rows = Vec::new();
    let mut state = n;
    let mut capped = false;
    while !kernel.is_frozen(state) {
        if states.len() as u64 > step_cap {
            capped = true;
            break;
        }
        match kernel.sample_step(state, &mut rows, rng)? {
            KernelOutcome::Frozen => break,
            outcome => {
                state = outcome.next_state(state);
                states.push(state);
            }
        }
    }
    Ok(ChainPath { states, capped })
}

/// How a spine trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpineOutcome {
    /// Sent to the cemetery state 0.
    Killed,
    /// Entered `{1..B}`, where the chain is stopped but alive.
    StoppedAlive,
    /// Step cap reached.
    Capped,
}

/// Trajectory of the size-biased chain; a trailing 0 marks killing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinePath {
    pub states: Vec<u64>,
    pub outcome: SpineOutcome,
}

impl SpinePath {
    /// Lifetime: index of the first 0, when killed.
    pub fn killed_at(&self) -> Option<u64> {
        (self.outcome == SpineOutcome::Killed).then(|| (self.states.len() - 1) as u64)
    }

    pub fn state_at(&self, k: u64) -> u64 {
        let idx = (k as usize).min(self.states.len() - 1);
        self.states[idx]
    }
}

/// One-step law of the size-biased chain at state `m`: kernel rows
/// reweighted by `(target/m)^p_bar` plus a killing mass.
#[derive(Debug, Clone)]
pub struct SpineMasses<S> {
    /// `(target state, mass)`, sorted by state, duplicates merged.
    pub rows: Vec<(u64, S)>,
    /// Mass of the cemetery move; equals `-kappa_m(p_bar) / a_m`.
    pub killing: S,
}

impl<S: Scalar> SpineMasses<S> {
    pub fn total(&self) -> S {
        self.rows.iter().map(|&(_, p)| p).sum::<S>() + self.killing
    }
}

/// Computes the size-biased transition masses at state `m`.
///
/// From an unfrozen state `m`, each kernel row `(j, p)` contributes a
/// move to `j` with mass `p (j/m)^p_bar` and, when it encodes a split,
/// a move to the co-fragment `m - j` with mass `p (1 - j/m)^p_bar`.
/// The deficit to total mass one is the killing probability.
pub fn spine_masses<K: Kernel>(
    kernel: &FrozenKernel<K>,
    p_bar: K::Scalar,
    m: u64,
) -> Result<SpineMasses<K::Scalar>, BranchingError> {
    type S<K> = <K as Kernel>::Scalar;
    if kernel.is_frozen(m) {
        return Ok(SpineMasses {
            rows: vec![(m, S::<K>::one())],
            killing: S::<K>::zero(),
        });
    }
    let mut rows: Vec<(u64, S<K>)> = Vec::new();
    for (j, p) in kernel.support(m)? {
        rows.push((j, p * S::<K>::state_ratio(j, m).powf(p_bar)));
        if j < m {
            rows.push((m - j, p * S::<K>::state_ratio(m - j, m).powf(p_bar)));
        }
    }
    rows.sort_by_key(|&(j, _)| j);
    rows.dedup_by(|later, first| {
        if later.0 == first.0 {
            first.1 = first.1 + later.1;
            true
        } else {
            false
        }
    });
    let total: S<K> = rows.iter().map(|&(_, p)| p).sum();
    let killing = S::<K>::one() - total;
    let kf = killing.to_f64_lossy();
    if kf < -1e-9 {
        return Err(BranchingError::NegativeKilling { state: m, mass: kf });
    }
    Ok(SpineMasses {
        rows,
        killing: killing.max(S::<K>::zero()),
    })
}

/// Simulates the size-biased chain from `n`; killed states go to the
/// cemetery 0, states at or below the threshold are stopped alive.
pub fn simulate_spine<K: Kernel, R: Rng + ?Sized>(
    kernel: &FrozenKernel<K>,
    p_bar: K::Scalar,
    n: u64,
    step_cap: u64,
    rng: &mut R,
) -> Result<SpinePath, BranchingError> {
    let mut states = vec![n];
    let mut state = n;
    loop {
        if kernel.is_frozen(state) {
            return Ok(SpinePath {
                states,
                outcome: SpineOutcome::StoppedAlive,
            });
        }
        if states.len() as u64 > step_cap {
            return Ok(SpinePath {
                states,
                outcome: SpineOutcome::Capped,
            });
        }
        let masses = spine_masses(kernel, p_bar, state)?;
        let u = K::Scalar::from_f64_lossy(rng.random::<f64>());
        let mut cum = K::Scalar::zero();
        let mut next = None;
        for &(j, mass) in &masses.rows {
            cum += mass;
            if u < cum {
                next = Some(j);
                break;
            }
        }
        match next {
            Some(j) => {
                state = j;
                states.push(j);
            }
            None => {
                // Residual mass: the killing move.
                states.push(0);
                return Ok(SpinePath {
                    states,
                    outcome: SpineOutcome::Killed,
                });
            }
        }
    }
}

/// One particle of a system run.
#[derive(Debug, Clone)]
pub struct ParticleRecord {
    pub label: Label,
    pub birth_time: u64,
    pub birth_size: u64,
    pub path: ChainPath,
}

impl ParticleRecord {
    /// Whether the particle reached the frozen zone within its cap.
    pub fn frozen(&self) -> bool {
        self.path.absorbed()
    }

    /// Children as `(rank starting at 1, birth offset, birth size)`,
    /// ranked by non-increasing size with chronological tie-break.
    pub fn ranked_children(&self) -> Vec<(u32, u64, u64)> {
        let mut jumps: Vec<(u64, u64)> = self.path.negative_jumps().collect();
        jumps.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        jumps
            .into_iter()
            .enumerate()
            .map(|(i, (k, size))| ((i + 1) as u32, k, size))
            .collect()
    }
}

/// Simulation limits for one system run.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Per-particle step cap.
    pub step_cap: u64,
    /// Total particle-step budget; exceeding it flags the run exploded.
    pub particle_budget: u64,
    /// Absolute time horizon; paths are not simulated past it.
    pub horizon: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step_cap: 1_000_000,
            particle_budget: 10_000_000,
            horizon: None,
        }
    }
}

/// A complete Ulam–Harris system run.
#[derive(Debug, Clone)]
pub struct SystemRun {
    pub start_size: u64,
    pub threshold: u64,
    pub particles: BTreeMap<Label, ParticleRecord>,
    /// Every particle frozen within the caps.
    pub extinct: bool,
    /// Particle-step budget ran out; the population was truncated.
    pub exploded: bool,
    pub particle_steps: u64,
    /// `max_u (birth_time + lifetime)` when extinct.
    pub extinction_time: Option<u64>,
}

impl SystemRun {
    /// Particle sizes present at time `k` (frozen ones included).
    pub fn snapshot_sizes(&self, k: u64) -> Vec<u64> {
        self.particles
            .values()
            .filter(|p| p.birth_time <= k)
            .map(|p| p.path.state_at(k - p.birth_time))
            .collect()
    }
}

/// Simulates the full particle system from size `n`.
pub fn simulate_system<K: Kernel>(
    kernel: &FrozenKernel<K>,
    n: u64,
    opts: &SimOptions,
    run_rng: RunRng,
) -> Result<SystemRun, BranchingError> {
    if n == 0 {
        return Err(BranchingError::InvalidParameter(
            "systems start from n >= 1".into(),
        ));
    }
    let mut particles = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((Label::new(), 0u64, n));
    let mut steps_used = 0u64;
    let mut exploded = false;
    while let Some((label, birth_time, birth_size)) = queue.pop_front() {
        let mut cap = opts.step_cap;
        if let Some(h) = opts.horizon {
            cap = cap.min(h.saturating_sub(birth_time));
        }
        cap = cap.min(opts.particle_budget.saturating_sub(steps_used));
        let mut rng = run_rng.particle(&label);
        let path = simulate_chain(kernel, birth_size, cap, &mut rng)?;
        steps_used += (path.states.len() - 1) as u64;
        if path.capped && steps_used >= opts.particle_budget {
            exploded = true;
        }
        let record = ParticleRecord {
            label: label.clone(),
            birth_time,
            birth_size,
            path,
        };
        if !exploded {
            for (rank, k, size) in record.ranked_children() {
                let mut child = label.clone();
                child.push(rank);
                queue.push_back((child, birth_time + k, size));
            }
        }
        particles.insert(label, record);
        if exploded {
            break;
        }
    }
    let extinct = !exploded && particles.values().all(|p| p.frozen());
    let extinction_time = extinct.then(|| {
        particles
            .values()
            .map(|p| p.birth_time + p.path.lifetime().expect("absorbed"))
            .max()
            .expect("at least the root")
    });
    Ok(SystemRun {
        start_size: n,
        threshold: kernel.threshold(),
        particles,
        extinct,
        exploded,
        particle_steps: steps_used,
        extinction_time,
    })
}

/// First-hitting record of one stopped line of descent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppedParticle {
    pub label: Label,
    /// Absolute hitting time `S_u`.
    pub hit_time: u64,
    /// Size at the hit, `Xi_u`.
    pub hit_size: u64,
}

/// The population stopped below `n eps`.
#[derive(Debug, Clone)]
pub struct StoppedPopulation {
    /// Effective stopping level `max(floor(n eps), B)`: below the
    /// freezing threshold stopping and freezing coincide.
    pub level: u64,
    pub records: Vec<StoppedParticle>,
    /// Some line never hit the level within its cap.
    pub incomplete: bool,
}

impl StoppedPopulation {
    /// `sum_u Xi_u^q`.
    pub fn lq_mass(&self, q: f64) -> f64 {
        self.records
            .iter()
            .map(|r| (r.hit_size as f64).powf(q))
            .collect::<KahanSum>()
            .value()
    }
}

/// Replays a run under the extra rule that a particle is stopped (no
/// further progeny) once its size is at most `n eps`. Pruning only
/// removes progeny, so the stored paths replay exactly.
pub fn stopped_population(run: &SystemRun, eps: f64) -> Result<StoppedPopulation, BranchingError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BranchingError::InvalidParameter(format!(
            "stopping fraction must lie in (0,1), got {eps}"
        )));
    }
    let level = (((run.start_size as f64) * eps).floor() as u64).max(run.threshold);
    let mut records = Vec::new();
    let mut incomplete = false;
    let mut stack = vec![Label::new()];
    while let Some(label) = stack.pop() {
        let particle = run
            .particles
            .get(&label)
            .expect("prefix-closed label set");
        let hit = particle
            .path
            .states
            .iter()
            .position(|&s| s <= level)
            .map(|j| j as u64);
        match hit {
            Some(j) => {
                records.push(StoppedParticle {
                    label: label.clone(),
                    hit_time: particle.birth_time + j,
                    hit_size: particle.path.states[j as usize],
                });
                // Children born up to (and at) the hit keep existing.
                for (rank, k, _) in particle.ranked_children() {
                    if k <= j {
                        let mut child = label.clone();
                        child.push(rank);
                        stack.push(child);
                    }
                }
            }
            None => {
                // Capped line that never reached the level.
                incomplete = true;
                for (rank, _, _) in particle.ranked_children() {
                    let mut child = label.clone();
                    child.push(rank);
                    stack.push(child);
                }
            }
        }
    }
    records.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(StoppedPopulation {
        level,
        records,
        incomplete,
    })
}

/// Labels whose whole ancestry (including themselves) was born at size
/// at least `n eps`.
pub fn good_set(run: &SystemRun, eps: f64) -> std::collections::BTreeSet<Label> {
    let threshold = run.start_size as f64 * eps;
    let mut good = std::collections::BTreeSet::new();
    for (label, particle) in &run.particles {
        if (particle.birth_size as f64) < threshold {
            continue;
        }
        if label.is_empty() {
            good.insert(label.clone());
            continue;
        }
        let parent = &label[..label.len() - 1];
        if good.contains(parent) {
            good.insert(label.clone());
        }
    }
    good
}

/// `sum_u size_u(k)^q` over particles born by `k` (frozen retained).
pub fn snapshot_lq(run: &SystemRun, k: u64, q: f64) -> f64 {
    run.particles
        .values()
        .filter(|p| p.birth_time <= k)
        .map(|p| (p.path.state_at(k - p.birth_time) as f64).powf(q))
        .collect::<KahanSum>()
        .value()
}

/// Time series `k -> sum_u size_u(k)^q` over labels selected by
/// `filter`, for `k = 0..=end`. Computed incrementally from the
/// particles' transition events.
pub fn lq_timeline(
    run: &SystemRun,
    q: f64,
    end: u64,
    filter: impl Fn(&Label) -> bool,
) -> Vec<f64> {
    let mut deltas = vec![0.0f64; end as usize + 1];
    for (label, particle) in &run.particles {
        if particle.birth_time > end || !filter(label) {
            continue;
        }
        deltas[particle.birth_time as usize] += (particle.birth_size as f64).powf(q);
        for (i, w) in particle.path.states.windows(2).enumerate() {
            let t = particle.birth_time + (i + 1) as u64;
            if t > end {
                break;
            }
            deltas[t as usize] += (w[1] as f64).powf(q) - (w[0] as f64).powf(q);
        }
    }
    let mut acc = KahanSum::new();
    deltas
        .into_iter()
        .map(|d| {
            acc.add(d);
            acc.value()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ScalingSequence;
    use crate::kernels::{DeterministicDescentKernel, RandomWalkKernel};
    use crate::rng;
    use crate::stats::mean_se;

    fn rw_frozen(p: f64, b: u64) -> FrozenKernel<RandomWalkKernel<f64>> {
        FrozenKernel::new(RandomWalkKernel::new(p).unwrap(), b).unwrap()
    }

    fn det_frozen() -> FrozenKernel<DeterministicDescentKernel> {
        FrozenKernel::new(DeterministicDescentKernel, 1).unwrap()
    }

    #[test]
    fn frozen_start_is_a_constant_path() {
        let k = rw_frozen(0.25, 3);
        let mut rng = rng::stream(0, &[1]);
        let path = simulate_chain(&k, 2, 100, &mut rng).unwrap();
        assert_eq!(path.states, vec![2]);
        assert_eq!(path.lifetime(), Some(0));
        assert_eq!(path.state_at(10), 2);
    }

    #[test]
    fn deterministic_descent_path_is_the_staircase() {
        let k = det_frozen();
        let mut rng = rng::stream(0, &[2]);
        let path = simulate_chain(&k, 5, 100, &mut rng).unwrap();
        assert_eq!(path.states, vec![5, 4, 3, 2, 1]);
        assert_eq!(path.lifetime(), Some(4));
        let jumps: Vec<_> = path.negative_jumps().collect();
        assert_eq!(jumps, vec![(1, 1), (2, 1), (3, 1), (4, 1)]);
    }

    #[test]
    fn random_walk_mean_lifetime_matches_first_step_analysis() {
        // From 2, hitting 1: E[lifetime] = 1/(1-2p) = 2 at p = 1/4.
        let k = rw_frozen(0.25, 1);
        let reps = 100_000;
        let mut lifetimes = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = rng::stream(11, &[r as u64]);
            let path = simulate_chain(&k, 2, 1_000_000, &mut rng).unwrap();
            lifetimes.push(path.lifetime().unwrap() as f64);
        }
        let (mean, se) = mean_se(&lifetimes);
        assert!(
            (mean - 2.0).abs() <= 3.0 * se,
            "mean lifetime {mean} (se {se})"
        );
    }

    #[test]
    fn spine_masses_worked_values_at_state_four() {
        let k = rw_frozen(0.25, 1);
        let masses = spine_masses(&k, 2.0, 4).unwrap();
        assert_eq!(masses.rows.len(), 3);
        let lookup = |state: u64| {
            masses
                .rows
                .iter()
                .find(|&&(j, _)| j == state)
                .map(|&(_, p)| p)
                .unwrap()
        };
        assert!((lookup(5) - 0.390625).abs() < 1e-15);
        assert!((lookup(3) - 0.421875).abs() < 1e-15);
        assert!((lookup(1) - 0.046875).abs() < 1e-15);
        assert!((masses.killing - 0.140625).abs() < 1e-15);
        assert!((masses.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spine_masses_sum_to_one_exhaustively() {
        let k = rw_frozen(0.25, 1);
        for m in 2..=10_000u64 {
            let masses = spine_masses(&k, 2.0, m).unwrap();
            assert!(
                (masses.total() - 1.0).abs() < 1e-12,
                "mass leak at state {m}"
            );
        }
    }

    #[test]
    fn spine_killing_matches_kappa_ratio() {
        let k = rw_frozen(0.25, 1);
        let scaling = ScalingSequence::power_law(1.0, 1.0).unwrap();
        for m in 2..2_000u64 {
            let masses = spine_masses(&k, 2.0, m).unwrap();
            let kappa = crate::exponents::kappa_n(&k, &scaling, m, 2.0).unwrap();
            let a_m = scaling.value(m).unwrap();
            assert!(
                (masses.killing - (-kappa / a_m)).abs() < 1e-12,
                "state {m}: killing {} vs -kappa/a {}",
                masses.killing,
                -kappa / a_m
            );
        }
    }

    #[test]
    fn spine_rejects_uncertified_threshold() {
        // p_bar = 1 gives kappa_n(1) = 0.25 > 0: negative killing mass.
        let k = rw_frozen(0.25, 1);
        let err = spine_masses(&k, 1.0, 10).unwrap_err();
        assert!(matches!(
            err,
            BranchingError::NegativeKilling { state: 10, .. }
        ));
    }

    #[test]
    fn spine_stops_alive_below_threshold() {
        let k = rw_frozen(0.25, 1);
        let mut rng = rng::stream(3, &[0]);
        let path = simulate_spine(&k, 2.0, 1, 100, &mut rng).unwrap();
        assert_eq!(path.outcome, SpineOutcome::StoppedAlive);
        assert_eq!(path.states, vec![1]);
        assert_eq!(path.killed_at(), None);
    }

    #[test]
    fn frozen_start_system_is_extinct_at_time_zero() {
        let k = rw_frozen(0.25, 3);
        let run = simulate_system(&k, 2, &SimOptions::default(), RunRng::new(5)).unwrap();
        assert!(run.extinct);
        assert_eq!(run.extinction_time, Some(0));
        assert_eq!(run.particles.len(), 1);
    }

    #[test]
    fn deterministic_descent_system_enumerated_by_hand() {
        let k = det_frozen();
        let run = simulate_system(&k, 3, &SimOptions::default(), RunRng::new(5)).unwrap();
        // Eve path 3,2,1; children of size 1 born at k = 1 and k = 2.
        assert_eq!(run.particles.len(), 3);
        let eve = &run.particles[&Label::new()];
        assert_eq!(eve.path.states, vec![3, 2, 1]);
        let c1 = &run.particles[&vec![1u32]];
        let c2 = &run.particles[&vec![2u32]];
        assert_eq!((c1.birth_time, c1.birth_size), (1, 1));
        assert_eq!((c2.birth_time, c2.birth_size), (2, 1));
        assert_eq!(run.extinction_time, Some(2));
        let mut snapshot = run.snapshot_sizes(2);
        snapshot.sort_unstable();
        assert_eq!(snapshot, vec![1, 1, 1]);
        assert_eq!(snapshot_lq(&run, 2, 2.0), 3.0);
        assert_eq!(snapshot_lq(&run, 0, 2.0), 9.0);
    }

    #[test]
    fn pure_fragmentation_conserves_snapshot_mass() {
        let k = det_frozen();
        let run = simulate_system(&k, 17, &SimOptions::default(), RunRng::new(9)).unwrap();
        for k_time in 0..=run.extinction_time.unwrap() {
            let total: u64 = run.snapshot_sizes(k_time).iter().sum();
            assert_eq!(total, 17, "mass leak at time {k_time}");
        }
    }

    #[test]
    fn same_seed_reproduces_labels_and_children_replay() {
        let k = rw_frozen(0.25, 1);
        let a = simulate_system(&k, 40, &SimOptions::default(), RunRng::new(123)).unwrap();
        let b = simulate_system(&k, 40, &SimOptions::default(), RunRng::new(123)).unwrap();
        let la: Vec<_> = a.particles.keys().cloned().collect();
        let lb: Vec<_> = b.particles.keys().cloned().collect();
        assert_eq!(la, lb);
        // Children lists replay from the stored parent paths.
        for (label, particle) in &a.particles {
            for (rank, k_time, size) in particle.ranked_children() {
                let mut child = label.clone();
                child.push(rank);
                let rec = &a.particles[&child];
                assert_eq!(rec.birth_time, particle.birth_time + k_time);
                assert_eq!(rec.birth_size, size);
            }
        }
        // Label sets are prefix-closed.
        for label in a.particles.keys() {
            if !label.is_empty() {
                assert!(a.particles.contains_key(&label[..label.len() - 1].to_vec()));
            }
        }
    }

    #[test]
    fn stopped_population_matches_hand_enumeration() {
        let k = det_frozen();
        let run = simulate_system(&k, 3, &SimOptions::default(), RunRng::new(1)).unwrap();
        // eps = 0.9: H = {1, 2}; Eve hits 2 at k = 1, its first child is
        // born at k = 1 already inside H.
        let stopped = stopped_population(&run, 0.9).unwrap();
        assert_eq!(stopped.level, 2);
        assert!(!stopped.incomplete);
        assert_eq!(
            stopped.records,
            vec![
                StoppedParticle {
                    label: vec![],
                    hit_time: 1,
                    hit_size: 2
                },
                StoppedParticle {
                    label: vec![1],
                    hit_time: 1,
                    hit_size: 1
                },
            ]
        );
    }

    #[test]
    fn stopping_inside_frozen_zone_equals_freezing() {
        let k = rw_frozen(0.25, 1);
        let run = simulate_system(&k, 12, &SimOptions::default(), RunRng::new(2)).unwrap();
        // eps small enough that floor(n eps) = 0 < B: level falls back to B.
        let stopped = stopped_population(&run, 0.05).unwrap();
        assert_eq!(stopped.level, 1);
        assert!(stopped.records.iter().all(|r| r.hit_size <= 1));
        // Every frozen line is recorded exactly once.
        assert_eq!(stopped.records.len(), run.particles.len());
    }

    #[test]
    fn stopped_mass_is_supermartingale_bounded() {
        // sum Xi^p_bar <= n^p_bar on every realization when
        // kappa_m(p_bar) <= 0 for all m (optional stopping).
        let k = rw_frozen(0.25, 1);
        let n = 50u64;
        for rep in 0..10_000u64 {
            let run =
                simulate_system(&k, n, &SimOptions::default(), RunRng::replicate(77, rep))
                    .unwrap();
            let stopped = stopped_population(&run, 0.2).unwrap();
            assert!(!stopped.incomplete);
            assert!(stopped.lq_mass(2.0) <= (n as f64).powi(2) + 1e-9);
        }
    }

    #[test]
    fn good_set_examples() {
        let k = det_frozen();
        let run = simulate_system(&k, 3, &SimOptions::default(), RunRng::new(1)).unwrap();
        // eps -> 0: all labels.
        assert_eq!(good_set(&run, 0.0).len(), run.particles.len());
        // eps > 1: root fails n >= n eps, so the set is empty.
        assert!(good_set(&run, 1.5).is_empty());
        // eps = 0.5: children born at size 1 < 1.5.
        let g = good_set(&run, 0.5);
        assert_eq!(g.len(), 1);
        assert!(g.contains(&Label::new()));
    }

    #[test]
    fn lq_timeline_agrees_with_direct_snapshots() {
        let k = rw_frozen(0.25, 1);
        let run = simulate_system(&k, 30, &SimOptions::default(), RunRng::new(31)).unwrap();
        let end = run.extinction_time.unwrap();
        let timeline = lq_timeline(&run, 2.0, end, |_| true);
        for k_time in 0..=end {
            let direct = snapshot_lq(&run, k_time, 2.0);
            assert!(
                (timeline[k_time as usize] - direct).abs() < 1e-6 * (1.0 + direct),
                "time {k_time}: {} vs {}",
                timeline[k_time as usize],
                direct
            );
        }
    }

    #[test]
    fn capped_chain_is_flagged_not_an_error() {
        // Growth-floor walk with B = 0 never freezes.
        let k = FrozenKernel::new(
            RandomWalkKernel::with_growth_floor(0.25f64).unwrap(),
            0,
        )
        .unwrap();
        let mut rng = rng::stream(1, &[7]);
        let path = simulate_chain(&k, 1, 50, &mut rng).unwrap();
        assert!(path.capped);
        assert!(path.lifetime().is_none());
    }

    #[test]
    fn explosion_budget_flags_run() {
        let k = FrozenKernel::new(
            RandomWalkKernel::with_growth_floor(0.25f64).unwrap(),
            0,
        )
        .unwrap();
        let opts = SimOptions {
            step_cap: 64,
            particle_budget: 4_000,
            horizon: Some(64),
        };
        let run = simulate_system(&k, 1, &opts, RunRng::new(4)).unwrap();
        assert!(!run.extinct);
        // Unfrozen walks never absorb, so the run is horizon/budget bound.
        assert!(run.particle_steps <= 4_000 + 64);
    }
}
