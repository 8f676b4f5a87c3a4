//! Limiting objects: finite-activity Lévy paths, the Lamperti time
//! change into a positive self-similar Markov process of index
//! `-gamma`, the self-similar cell system it drives, and the limit
//! genealogical tree.
//!
//! Everything is event-driven: jump epochs come from exponential
//! clocks, drift segments integrate in closed form through the time
//! change (`Y^gamma` is linear between jumps), so there is no
//! discretization error. The only truncation is the size floor below
//! which cells are not followed; its bias is the subject of the
//! refinement diagnostics.

use crate::branching::Label;
use crate::exponents::{ExponentError, LevyTriplet};
use crate::genealogy::GenealogyTree;
use crate::rng::RunRng;
use crate::scalar::Scalar;
use num_traits::{One, Zero};
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("process must drift to -infinity or be killed: drift + sum(rate*y) = {mean} >= 0 with zero killing")]
    NoDownwardDrift { mean: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cell budget {budget} exhausted; growth-fragmentation locally explosive at these parameters")]
    CellBudget { budget: usize },
}

/// Exponential variate by inversion; deterministic given the stream.
fn sample_exp<S: Scalar, R: Rng + ?Sized>(rate: S, rng: &mut R) -> S {
    debug_assert!(rate > S::zero());
    let u: f64 = rng.random();
    -S::from_f64_lossy(u.max(f64::MIN_POSITIVE)).ln() / rate
}

/// A finite-activity Lévy path on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct LevyPath<S> {
    pub drift: S,
    /// Jump epochs, increasing, paired with `jump_sizes`.
    pub jump_times: Vec<S>,
    pub jump_sizes: Vec<S>,
    pub horizon: S,
    /// Killing epoch, when the exponential killing clock rang first.
    pub killed_at: Option<S>,
}

impl<S: Scalar> LevyPath<S> {
    /// `xi(t)`, or `None` at or beyond the killing time.
    pub fn value(&self, t: S) -> Option<S> {
        if let Some(k) = self.killed_at {
            if t >= k {
                return None;
            }
        }
        let mut acc = self.drift * t;
        for (&s, &y) in self.jump_times.iter().zip(&self.jump_sizes) {
            if s <= t {
                acc += y;
            } else {
                break;
            }
        }
        Some(acc)
    }
}

/// Samples a Lévy path with drift between jumps, atomic jumps at
/// exponential clocks, and exponential killing.
pub fn simulate_levy<S: Scalar, R: Rng + ?Sized>(
    triplet: &LevyTriplet<S>,
    horizon: S,
    rng: &mut R,
) -> Result<LevyPath<S>, LimitError> {
    if !(horizon > S::zero()) {
        return Err(LimitError::InvalidParameter(
            "horizon must be positive".into(),
        ));
    }
    triplet.validate()?;
    let total_rate = triplet.total_jump_rate();
    let killed_at = if triplet.killing() > S::zero() {
        let k = sample_exp(triplet.killing(), rng);
        (k <= horizon).then_some(k)
    } else {
        None
    };
    let effective_horizon = killed_at.unwrap_or(horizon);
    let mut jump_times = Vec::new();
    let mut jump_sizes = Vec::new();
    if total_rate > S::zero() {
        let mut t = S::zero();
        loop {
            t += sample_exp(total_rate, rng);
            if t > effective_horizon {
                break;
            }
            // Pick the atom proportionally to its rate.
            let mut u = S::from_f64_lossy(rng.random::<f64>()) * total_rate;
            let mut chosen = triplet.jumps().len() - 1;
            for (i, &(_, r)) in triplet.jumps().iter().enumerate() {
                if u < r {
                    chosen = i;
                    break;
                }
                u -= r;
            }
            jump_times.push(t);
            jump_sizes.push(triplet.jumps()[chosen].0);
        }
    }
    Ok(LevyPath {
        drift: triplet.drift(),
        jump_times,
        jump_sizes,
        horizon,
        killed_at,
    })
}

/// Path of the pssMp `Y` with `log Y(t) = xi(time change)`: piecewise
/// segments on which `Y^gamma` is linear with slope `gamma * drift`,
/// multiplicative jumps between them.
#[derive(Debug, Clone)]
pub struct PssmpPath<S> {
    pub x0: S,
    pub gamma: S,
    pub drift: S,
    /// `(start_time, value at start)`, increasing in time.
    pub segments: Vec<(S, S)>,
    /// `(time, value_before, value_after)` of the multiplicative jumps.
    pub jumps: Vec<(S, S, S)>,
    /// Absorption time of `Y` at 0.
    pub absorption: S,
    /// True when absorption came from killing or the exact drift
    /// formula; false when the path was closed at the size floor with
    /// the drift-only tail estimate.
    pub exact_absorption: bool,
}

impl<S: Scalar> PssmpPath<S> {
    /// `Y(t)`; 0 at or beyond absorption.
    pub fn value(&self, t: S) -> S {
        if t >= self.absorption {
            return S::zero();
        }
        let idx = match self
            .segments
            .binary_search_by(|&(s, _)| s.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let (t0, y0) = self.segments[idx];
        let g = self.gamma;
        let pow = y0.powf(g) + g * self.drift * (t - t0);
        if pow <= S::zero() {
            S::zero()
        } else {
            pow.powf(S::one() / g)
        }
    }

    /// Negative jumps `(time, drop)`; each drop is a daughter size.
    pub fn negative_jumps(&self) -> impl Iterator<Item = (S, S)> + '_ {
        self.jumps
            .iter()
            .filter(|&&(_, before, after)| after < before)
            .map(|&(t, before, after)| (t, before - after))
    }

    /// Inverse Lamperti clock `tau(t) = int_0^t Y(s)^{-gamma} ds`,
    /// closed form per segment; recovers the Lévy time of `t`.
    pub fn lamperti_clock(&self, t: S) -> S {
        let g = self.gamma;
        let b = self.drift;
        let mut acc = S::zero();
        for (i, &(t0, y0)) in self.segments.iter().enumerate() {
            let t1 = self
                .segments
                .get(i + 1)
                .map(|&(s, _)| s)
                .unwrap_or(self.absorption)
                .min(t);
            if t1 <= t0 {
                break;
            }
            let c = y0.powf(g);
            let dt = t1 - t0;
            if b.is_zero() {
                acc += dt / c;
            } else {
                let gb = g * b;
                acc += ((c + gb * dt) / c).ln() / gb;
            }
            if t1 >= t {
                break;
            }
        }
        acc
    }
}

/// Event-driven Lamperti construction of the pssMp from `x0`.
///
/// Follows the process until killing, exact drift absorption (no more
/// jumps can occur), or the first passage below `floor`; in the last
/// case the remaining lifetime is closed with the drift-only tail
/// `y^gamma / (gamma |drift|)` and the path is flagged inexact.
pub fn simulate_pssmp<S: Scalar, R: Rng + ?Sized>(
    triplet: &LevyTriplet<S>,
    gamma: S,
    x0: S,
    floor: S,
    rng: &mut R,
) -> Result<PssmpPath<S>, LimitError> {
    if !(x0 > S::zero()) {
        return Err(LimitError::InvalidParameter("x0 must be positive".into()));
    }
    if !(gamma > S::zero()) {
        return Err(LimitError::InvalidParameter(
            "gamma must be positive".into(),
        ));
    }
    if !(floor >= S::zero()) || floor >= x0 {
        return Err(LimitError::InvalidParameter(
            "floor must satisfy 0 <= floor < x0".into(),
        ));
    }
    triplet.validate()?;
    let mean = triplet.drift()
        + triplet
            .jumps()
            .iter()
            .map(|&(y, r)| y * r)
            .fold(S::zero(), |a, b| a + b);
    if mean >= S::zero() && triplet.killing().is_zero() {
        return Err(LimitError::NoDownwardDrift {
            mean: mean.to_f64_lossy(),
        });
    }
    let b = triplet.drift();
    let g = gamma;
    let total_rate = triplet.total_jump_rate();
    let mut segments = vec![(S::zero(), x0)];
    let mut jumps = Vec::new();
    let mut t = S::zero();
    let mut y = x0;
    loop {
        // Next Lévy-clock event from the current segment start.
        let ds_jump = (total_rate > S::zero()).then(|| sample_exp(total_rate, rng));
        let ds_kill = (triplet.killing() > S::zero()).then(|| sample_exp(triplet.killing(), rng));
        let (ds, is_kill) = match (ds_jump, ds_kill) {
            (Some(j), Some(k)) if k < j => (Some(k), true),
            (Some(j), _) => (Some(j), false),
            (None, Some(k)) => (Some(k), true),
            (None, None) => (None, false),
        };
        let Some(ds) = ds else {
            // Drift only from here on.
            if b < S::zero() {
                let tail = y.powf(g) / (g * -b);
                return Ok(PssmpPath {
                    x0,
                    gamma,
                    drift: b,
                    segments,
                    jumps,
                    absorption: t + tail,
                    exact_absorption: true,
                });
            }
            return Err(LimitError::NoDownwardDrift {
                mean: b.to_f64_lossy(),
            });
        };
        // Y-time to run the drift for Lévy time `ds`.
        let c = y.powf(g);
        let dt = if b.is_zero() {
            c * ds
        } else {
            c * ((g * b * ds).exp() - S::one()) / (g * b)
        };
        let y_end = y * (b * ds).exp();
        // Does the drift segment cross the floor before the event?
        if b < S::zero() && y_end <= floor {
            let t_floor = (c - floor.powf(g)) / (g * -b);
            let tail = floor.powf(g) / (g * -b);
            return Ok(PssmpPath {
                x0,
                gamma,
                drift: b,
                segments,
                jumps,
                absorption: t + t_floor + tail,
                exact_absorption: false,
            });
        }
        t += dt;
        y = y_end;
        if is_kill {
            return Ok(PssmpPath {
                x0,
                gamma,
                drift: b,
                segments,
                jumps,
                absorption: t,
                exact_absorption: true,
            });
        }
        // Atom choice, proportional to rates.
        let mut u = S::from_f64_lossy(rng.random::<f64>()) * total_rate;
        let mut jump = triplet.jumps()[triplet.jumps().len() - 1].0;
        for &(yj, r) in triplet.jumps() {
            if u < r {
                jump = yj;
                break;
            }
            u -= r;
        }
        let y_after = y * jump.exp();
        jumps.push((t, y, y_after));
        y = y_after;
        segments.push((t, y));
        if y <= floor {
            let tail = if b < S::zero() {
                y.powf(g) / (g * -b)
            } else {
                S::zero()
            };
            return Ok(PssmpPath {
                x0,
                gamma,
                drift: b,
                segments,
                jumps,
                absorption: t + tail,
                exact_absorption: false,
            });
        }
    }
}

/// One cell of the limiting growth-fragmentation.
#[derive(Debug, Clone)]
pub struct Cell<S> {
    pub label: Label,
    pub birth_time: S,
    pub initial_size: S,
    pub path: PssmpPath<S>,
}

/// The self-similar cell system grown from one Eve cell.
#[derive(Debug, Clone)]
pub struct CellSystem<S> {
    pub x0: S,
    pub gamma: S,
    pub size_floor: S,
    pub cells: BTreeMap<Label, Cell<S>>,
    pub extinction_time: S,
}

impl<S: Scalar> CellSystem<S> {
    /// `sum_u Y_u(t - b_u)^q` over cells alive at `t`.
    pub fn snapshot_lq(&self, t: S, q: S) -> S {
        self.cells
            .values()
            .filter(|c| c.birth_time <= t)
            .map(|c| c.path.value(t - c.birth_time).powf(q))
            .fold(S::zero(), |a, b| a + b)
    }

    /// Candidate times where `sup_t snapshot` can be attained: births,
    /// jumps, and deaths of every cell (the snapshot is piecewise
    /// monotone between them for monotone drift segments).
    pub fn event_times(&self) -> Vec<S> {
        let mut times = vec![S::zero()];
        for c in self.cells.values() {
            times.push(c.birth_time);
            times.push(c.birth_time + c.path.absorption);
            for &(t, _, _) in &c.path.jumps {
                times.push(c.birth_time + t);
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        times.dedup();
        times
    }
}

fn cell_floor<S: Scalar>(size_floor: S, size: S) -> S {
    let half = size / (S::one() + S::one());
    if size_floor < half {
        size_floor
    } else {
        half
    }
}

/// Simulates the cell system: the Eve cell follows the pssMp from
/// `x0`; every negative jump of size at least `size_floor` begets an
/// independent daughter of that size. Daughters draw from streams
/// keyed by their Ulam–Harris label.
pub fn simulate_cell_system<S: Scalar>(
    triplet: &LevyTriplet<S>,
    gamma: S,
    x0: S,
    size_floor: S,
    cell_budget: usize,
    run: RunRng,
) -> Result<CellSystem<S>, LimitError> {
    if !(size_floor > S::zero()) {
        return Err(LimitError::InvalidParameter(
            "size_floor must be positive (it makes the system finite)".into(),
        ));
    }
    let mut cells = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((Label::new(), S::zero(), x0));
    let mut extinction = S::zero();
    while let Some((label, birth_time, size)) = queue.pop_front() {
        if cells.len() >= cell_budget {
            return Err(LimitError::CellBudget {
                budget: cell_budget,
            });
        }
        let mut rng = run.particle(&label);
        let path = simulate_pssmp(triplet, gamma, size, cell_floor(size_floor, size), &mut rng)?;
        let death = birth_time + path.absorption;
        if death > extinction {
            extinction = death;
        }
        // Rank daughters by size, non-increasing, chronological ties.
        let mut daughters: Vec<(S, S)> = path
            .negative_jumps()
            .filter(|&(_, d)| d >= size_floor)
            .collect();
        daughters.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite sizes")
                .then(a.0.partial_cmp(&b.0).expect("finite times"))
        });
        for (rank, (t, d)) in daughters.into_iter().enumerate() {
            let mut child = label.clone();
            child.push((rank + 1) as u32);
            queue.push_back((child, birth_time + t, d));
        }
        cells.insert(
            label.clone(),
            Cell {
                label,
                birth_time,
                initial_size: size,
                path,
            },
        );
    }
    Ok(CellSystem {
        x0,
        gamma,
        size_floor,
        cells,
        extinction_time: extinction,
    })
}

/// Simulates the limit genealogical tree truncated to labels in `U_h`
/// (ranks and depth at most `h`): one edge per cell with length its
/// lifetime, daughters grafted at their birth offsets.
pub fn simulate_limit_tree<S: Scalar>(
    triplet: &LevyTriplet<S>,
    gamma: S,
    x0: S,
    depth_h: u64,
    size_floor: S,
    run: RunRng,
) -> Result<GenealogyTree<f64>, LimitError> {
    if !(size_floor > S::zero()) {
        return Err(LimitError::InvalidParameter(
            "size_floor must be positive".into(),
        ));
    }
    let mut rng = run.particle(&Label::new());
    let eve = simulate_pssmp(triplet, gamma, x0, cell_floor(size_floor, x0), &mut rng)?;
    let mut tree = GenealogyTree::with_root(eve.absorption.to_f64_lossy());
    let mut stack = vec![(0usize, eve, Label::new())];
    while let Some((node, path, label)) = stack.pop() {
        if label.len() as u64 >= depth_h {
            continue;
        }
        let mut daughters: Vec<(S, S)> = path
            .negative_jumps()
            .filter(|&(_, d)| d >= size_floor)
            .collect();
        daughters.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite sizes")
                .then(a.0.partial_cmp(&b.0).expect("finite times"))
        });
        daughters.truncate(depth_h as usize);
        for (rank, (t, d)) in daughters.into_iter().enumerate() {
            let mut child_label = label.clone();
            child_label.push((rank + 1) as u32);
            let mut rng = run.particle(&child_label);
            let child_path =
                simulate_pssmp(triplet, gamma, d, cell_floor(size_floor, d), &mut rng)?;
            let idx = tree.add_child(
                node,
                (rank + 1) as u32,
                t.to_f64_lossy(),
                child_path.absorption.to_f64_lossy(),
            );
            stack.push((idx, child_path, child_label));
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::stats::{ks_two_sample, mean_se};

    fn drift_only() -> LevyTriplet<f64> {
        LevyTriplet::new(-1.0, 0.0, vec![], 0.0).unwrap()
    }

    fn jumpy() -> LevyTriplet<f64> {
        LevyTriplet::new(-1.0, 0.0, vec![(-0.3, 2.0)], 0.0).unwrap()
    }

    #[test]
    fn pure_drift_levy_path_is_linear() {
        let mut rng = rng::stream(1, &[1]);
        let path = simulate_levy(&drift_only(), 5.0, &mut rng).unwrap();
        assert!(path.jump_times.is_empty());
        assert_eq!(path.value(1.0), Some(-1.0));
        assert_eq!(path.value(3.5), Some(-3.5));
    }

    #[test]
    fn jump_counts_are_poisson() {
        let t = LevyTriplet::<f64>::new(0.0, 0.0, vec![(-0.3, 2.0), (0.1, 1.0)], 0.0).unwrap();
        let horizon = 3.0;
        let reps = 20_000;
        let counts: Vec<f64> = (0..reps)
            .map(|i| {
                let mut rng = rng::stream(7, &[i]);
                simulate_levy(&t, horizon, &mut rng)
                    .unwrap()
                    .jump_times
                    .len() as f64
            })
            .collect();
        let (mean, se) = mean_se(&counts);
        let expect = 3.0 * horizon;
        assert!((mean - expect).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn exponential_moment_matches_laplace_exponent() {
        // E[e^{q xi(1)}] = e^{lambda(q)} (no killing).
        let t = LevyTriplet::<f64>::new(0.0, 0.0, vec![(-0.3, 2.0)], 0.0).unwrap();
        let q = 1.0;
        let reps = 100_000;
        let vals: Vec<f64> = (0..reps)
            .map(|i| {
                let mut rng = rng::stream(13, &[i]);
                let path = simulate_levy(&t, 1.0, &mut rng).unwrap();
                (q * path.value(1.0).unwrap()).exp()
            })
            .collect();
        let (mean, se) = mean_se(&vals);
        let expect = t.lambda(q).exp();
        assert!(
            (mean - expect).abs() <= 3.0 * se,
            "mean {mean} expect {expect} se {se}"
        );
    }

    #[test]
    fn drift_only_pssmp_closed_form() {
        // b = -1, gamma = 1/2, x0 = 1: Y(t) = (1 - t/2)^2 on [0,2].
        let mut rng = rng::stream(2, &[0]);
        let path = simulate_pssmp(&drift_only(), 0.5, 1.0, 1e-9, &mut rng).unwrap();
        assert!(path.exact_absorption);
        assert!((path.absorption - 2.0).abs() < 1e-12);
        assert!((path.value(1.0) - 0.25).abs() < 1e-12);
        for k in 0..20 {
            let t = k as f64 * 0.1;
            let expect = (1.0 - t / 2.0).powi(2);
            assert!((path.value(t) - expect).abs() < 1e-12, "t = {t}");
        }
        assert_eq!(path.value(2.0), 0.0);
        assert_eq!(path.value(5.0), 0.0);
    }

    #[test]
    fn lamperti_inversion_recovers_levy_drift_line() {
        // At every jump epoch, log(Y/x0) computed from the path equals
        // the Lévy value reconstructed from drift * tau + earlier jumps.
        for seed in 0..50u64 {
            let mut rng = rng::stream(21, &[seed]);
            let path = simulate_pssmp(&jumpy(), 0.5, 1.0, 1e-6, &mut rng).unwrap();
            for &(t, before, _) in &path.jumps {
                let s = path.lamperti_clock(t);
                let xi_before = (before / path.x0).ln();
                let mut reconstruction = path.drift * s;
                for &(tj, bj, aj) in &path.jumps {
                    if tj < t {
                        reconstruction += (aj / bj).ln();
                    }
                }
                assert!(
                    (xi_before - reconstruction).abs() < 1e-9,
                    "seed {seed}: {xi_before} vs {reconstruction}"
                );
            }
        }
    }

    #[test]
    fn self_similarity_of_lifetimes() {
        // zeta^{(x)} =law x^gamma zeta^{(1)}.
        let gamma = 0.5;
        let x = 2.0;
        let reps = 10_000u64;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..reps {
            let mut r1 = rng::stream(31, &[i]);
            let mut r2 = rng::stream(32, &[i]);
            a.push(
                simulate_pssmp(&jumpy(), gamma, x, 1e-7, &mut r1)
                    .unwrap()
                    .absorption,
            );
            b.push(
                x.powf(gamma)
                    * simulate_pssmp(&jumpy(), gamma, 1.0, 1e-7, &mut r2)
                        .unwrap()
                        .absorption,
            );
        }
        let ks = ks_two_sample(&a, &b);
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn self_similarity_of_marginals() {
        // Y^{(x)}(t) =law x Y^{(1)}(x^{-gamma} t). The no-jump event has
        // positive probability, so both marginals carry an atom; the two
        // simulation routes place it apart by float rounding only. The
        // Lévy metric keeps that comparison meaningful where raw KS
        // would count the whole atom as displaced.
        let gamma = 0.5;
        let x = 2.0;
        let reps = 10_000u64;
        for t in [0.5, 1.0] {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for i in 0..reps {
                let mut r1 = rng::stream(41, &[i]);
                let mut r2 = rng::stream(42, &[i]);
                a.push(
                    simulate_pssmp(&jumpy(), gamma, x, 1e-7, &mut r1)
                        .unwrap()
                        .value(t),
                );
                b.push(
                    x * simulate_pssmp(&jumpy(), gamma, 1.0, 1e-7, &mut r2)
                        .unwrap()
                        .value(x.powf(-gamma) * t),
                );
            }
            let d = crate::stats::levy_distance(&a, &b);
            assert!(d < 0.02, "t = {t}: levy distance = {d}");
        }
    }

    #[test]
    fn split_conservation_is_exact() {
        let mut rng = rng::stream(51, &[0]);
        let path = simulate_pssmp(&jumpy(), 0.5, 1.0, 1e-6, &mut rng).unwrap();
        assert!(!path.jumps.is_empty());
        for &(_, before, after) in &path.jumps {
            let daughter = before - after;
            assert!((after + daughter - before).abs() <= 1e-12 * before);
        }
    }

    #[test]
    fn cell_system_without_negative_atoms_is_a_single_cell() {
        let t = LevyTriplet::<f64>::new(-1.0, 0.0, vec![], 0.0).unwrap();
        let sys = simulate_cell_system(&t, 0.5, 1.0, 1e-3, 1_000, RunRng::new(3)).unwrap();
        assert_eq!(sys.cells.len(), 1);
        let eve = &sys.cells[&Label::new()];
        assert!((sys.extinction_time - eve.path.absorption).abs() < 1e-12);
    }

    #[test]
    fn first_daughter_size_matches_first_negative_jump() {
        let sys =
            simulate_cell_system(&jumpy(), 0.5, 1.0, 1e-4, 100_000, RunRng::new(9)).unwrap();
        let eve = &sys.cells[&Label::new()];
        let mut jumps: Vec<(f64, f64)> = eve
            .path
            .negative_jumps()
            .filter(|&(_, d)| d >= sys.size_floor)
            .collect();
        jumps.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(a.0.partial_cmp(&b.0).unwrap())
        });
        if let Some(&(t, d)) = jumps.first() {
            let daughter = &sys.cells[&vec![1u32]];
            assert!((daughter.initial_size - d).abs() < 1e-12);
            assert!((daughter.birth_time - t).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_snapshot_sup_is_finite_when_kappa_negative() {
        // kappa(2) < 0 for this triplet: the l^2 functional stays finite.
        let reps = 1_000u64;
        let omega = 2.0;
        for i in 0..reps {
            let sys = simulate_cell_system(
                &jumpy(),
                0.5,
                1.0,
                1e-3,
                100_000,
                RunRng::replicate(61, i),
            )
            .unwrap();
            let sup = sys
                .event_times()
                .iter()
                .map(|&t| sys.snapshot_lq(t, omega))
                .fold(0.0f64, f64::max);
            assert!(sup.is_finite());
            assert!(sup < 50.0, "rep {i}: sup = {sup}");
        }
    }

    #[test]
    fn limit_tree_depth_zero_is_one_branch() {
        let tree = simulate_limit_tree(&jumpy(), 0.5, 1.0, 0, 1e-3, RunRng::new(71)).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(tree.height() > 0.0);
    }

    #[test]
    fn limit_tree_height_non_decreasing_in_depth() {
        // Label-keyed streams make deeper trees extensions of shallow ones.
        for seed in 0..30u64 {
            let mut prev = 0.0f64;
            for h in [0u64, 1, 2, 4, 6] {
                let tree =
                    simulate_limit_tree(&jumpy(), 0.5, 1.0, h, 1e-3, RunRng::new(100 + seed))
                        .unwrap();
                let height = tree.height();
                assert!(
                    height >= prev - 1e-12,
                    "seed {seed} h {h}: {height} < {prev}"
                );
                prev = height;
            }
        }
    }

    #[test]
    fn extinction_moment_stable_under_floor_refinement() {
        // E[height^{q/gamma}] estimates should move less than 5% when
        // the floor is halved.
        let (gamma, q) = (0.5, 1.0);
        let reps = 4_000u64;
        let estimate = |floor: f64| -> f64 {
            let vals: Vec<f64> = (0..reps)
                .map(|i| {
                    let sys = simulate_cell_system(
                        &jumpy(),
                        gamma,
                        1.0,
                        floor,
                        100_000,
                        RunRng::replicate(81, i),
                    )
                    .unwrap();
                    sys.extinction_time.powf(q / gamma)
                })
                .collect();
            mean_se(&vals).0
        };
        let coarse = estimate(2e-3);
        let fine = estimate(1e-3);
        assert!(
            (fine - coarse).abs() / coarse.abs() < 0.05,
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn killed_process_has_finite_lifetime_without_jumps() {
        let t = LevyTriplet::<f64>::new(0.5, 0.0, vec![], 1.0).unwrap();
        let mut rng = rng::stream(91, &[0]);
        let path = simulate_pssmp(&t, 1.0, 1.0, 1e-9, &mut rng).unwrap();
        assert!(path.exact_absorption);
        assert!(path.absorption.is_finite());
    }

    #[test]
    fn upward_drift_without_killing_is_rejected() {
        let t = LevyTriplet::<f64>::new(0.5, 0.0, vec![], 0.0).unwrap();
        let mut rng = rng::stream(92, &[0]);
        assert!(matches!(
            simulate_pssmp(&t, 1.0, 1.0, 1e-9, &mut rng),
            Err(LimitError::NoDownwardDrift { .. })
        ));
    }
}
