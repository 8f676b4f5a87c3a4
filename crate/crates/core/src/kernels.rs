//! Transition kernels of the driving particle.
//!
//! A kernel assigns to every state `n` a finitely supported law over
//! outcome states `m >= ceil(n/2)`:
//!
//! * `m > n` — the particle grows to size `m`;
//! * `ceil(n/2) <= m <= n-1` — the particle splits conservatively into
//!   the pair `(m, n - m)`, the chain following the larger fragment `m`;
//! * `m = n` — a lazy move (no change, no child). Lazy rows arise from
//!   the zero-drift row of the Lévy discretization and from frozen
//!   states under [`FrozenKernel`].
//!
//! Kernels expose their full enumerable support so exponent sums and
//! exhaustive enumeration oracles can iterate them exactly; sampling is
//! layered on top of the same rows.

use crate::exponents::ScalingSequence;
use crate::scalar::Scalar;
use num_traits::{One, Zero};
use crate::LevyTriplet;
use rand::Rng;
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("state {n} is below the kernel's minimal state {min_state} (and above the freezing threshold); configure a larger threshold or a table kernel")]
    BelowMinState { n: u64, min_state: u64 },
    #[error("kernel support is empty at state {n}")]
    EmptySupport { n: u64 },
    #[error("table kernel has no row for state {n}")]
    MissingState { n: u64 },
    #[error("kernel masses at state {n} sum to {total}, not 1")]
    MassNotNormalized { n: u64, total: f64 },
    #[error("illegal support row at state {n}: outcome {m} ({why})")]
    IllegalRow { n: u64, m: u64, why: &'static str },
    #[error("freezing threshold {threshold} leaves states in ({threshold}, {min_state}) undefined; need threshold >= min_state - 1")]
    ThresholdBelowMinState { threshold: u64, min_state: u64 },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
}

/// A transition kernel with enumerable support.
pub trait Kernel {
    type Scalar: Scalar;

    /// Smallest state the kernel is defined at. Queries below it (and
    /// above the freezing threshold) are configuration errors.
    fn min_state(&self) -> u64;

    /// Writes the support rows `(m, mass)` at state `n` into `out`
    /// (cleared first), ordered by increasing `m`.
    fn support_into(
        &self,
        n: u64,
        out: &mut Vec<(u64, Self::Scalar)>,
    ) -> Result<(), KernelError>;

    fn support(&self, n: u64) -> Result<Vec<(u64, Self::Scalar)>, KernelError> {
        let mut out = Vec::new();
        self.support_into(n, &mut out)?;
        Ok(out)
    }

    /// Probability mass of outcome `m` at state `n`.
    fn pmf(&self, n: u64, m: u64) -> Result<Self::Scalar, KernelError> {
        Ok(self
            .support(n)?
            .into_iter()
            .find(|&(k, _)| k == m)
            .map(|(_, p)| p)
            .unwrap_or_else(Self::Scalar::zero))
    }
}

impl<K: Kernel> Kernel for &K {
    type Scalar = K::Scalar;
    fn min_state(&self) -> u64 {
        (*self).min_state()
    }
    fn support_into(
        &self,
        n: u64,
        out: &mut Vec<(u64, Self::Scalar)>,
    ) -> Result<(), KernelError> {
        (*self).support_into(n, out)
    }
}

/// Outcome of one kernel step at state `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelOutcome {
    /// Growth to `to > n`.
    Growth { to: u64 },
    /// Conservative split into `(larger, smaller)`, `larger + smaller = n`.
    Split { larger: u64, smaller: u64 },
    /// Lazy move: the state is kept, no child is born.
    Stay,
    /// State at or below the freezing threshold; absorbing.
    Frozen,
}

impl KernelOutcome {
    /// State of the (locally largest) continuing particle from `n`.
    pub fn next_state(&self, n: u64) -> u64 {
        match *self {
            KernelOutcome::Growth { to } => to,
            KernelOutcome::Split { larger, .. } => larger,
            KernelOutcome::Stay | KernelOutcome::Frozen => n,
        }
    }
}

fn classify<S: Scalar>(n: u64, m: u64) -> KernelOutcome {
    let _ = S::zero();
    if m > n {
        KernelOutcome::Growth { to: m }
    } else if m == n {
        KernelOutcome::Stay
    } else {
        KernelOutcome::Split {
            larger: m,
            smaller: n - m,
        }
    }
}

/// A kernel stopped upon hitting `{1, ..., threshold}`.
///
/// States at or below the threshold are absorbing (`pmf(n, n) = 1`);
/// above it the inner kernel applies unchanged.
#[derive(Debug, Clone)]
pub struct FrozenKernel<K: Kernel> {
    inner: K,
    threshold: u64,
}

impl<K: Kernel> FrozenKernel<K> {
    pub fn new(inner: K, threshold: u64) -> Result<Self, KernelError> {
        if threshold + 1 < inner.min_state() {
            return Err(KernelError::ThresholdBelowMinState {
                threshold,
                min_state: inner.min_state(),
            });
        }
        Ok(Self { inner, threshold })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn inner(&self) -> &K {
        &self.inner
    }

    pub fn is_frozen(&self, n: u64) -> bool {
        n <= self.threshold
    }

    /// Draws one transition at state `n`.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        n: u64,
        rows: &mut Vec<(u64, K::Scalar)>,
        rng: &mut R,
    ) -> Result<KernelOutcome, KernelError> {
        if n == 0 {
            return Err(KernelError::InvalidParameter(
                "state 0 has no transitions".into(),
            ));
        }
        if self.is_frozen(n) {
            return Ok(KernelOutcome::Frozen);
        }
        self.support_into(n, rows)?;
        if rows.is_empty() {
            return Err(KernelError::EmptySupport { n });
        }
        let u = K::Scalar::from_f64_lossy(rng.random::<f64>());
        let mut cum = K::Scalar::zero();
        for &(m, mass) in rows.iter() {
            cum += mass;
            if u < cum {
                return Ok(classify::<K::Scalar>(n, m));
            }
        }
        // Rounding left `u` past the accumulated total; take the last row.
        let (m, _) = *rows.last().expect("non-empty support");
        Ok(classify::<K::Scalar>(n, m))
    }
}

impl<K: Kernel> Kernel for FrozenKernel<K> {
    type Scalar = K::Scalar;

    fn min_state(&self) -> u64 {
        1
    }

    fn support_into(
        &self,
        n: u64,
        out: &mut Vec<(u64, Self::Scalar)>,
    ) -> Result<(), KernelError> {
        if n <= self.threshold {
            out.clear();
            out.push((n, Self::Scalar::one()));
            return Ok(());
        }
        if n < self.inner.min_state() {
            return Err(KernelError::BelowMinState {
                n,
                min_state: self.inner.min_state(),
            });
        }
        self.inner.support_into(n, out)
    }
}

/// Nearest-neighbour random walk: grow by one with probability `p`,
/// otherwise split off a single unit (`(n-1, 1)`).
///
/// With `growth_floor` enabled the kernel is also defined at state 1,
/// where the particle grows to 2 with probability one; this is the
/// small-state closure used by the explosion demonstration.
#[derive(Debug, Clone, Copy)]
pub struct RandomWalkKernel<S> {
    p: S,
    growth_floor: bool,
}

impl<S: Scalar> RandomWalkKernel<S> {
    pub fn new(p: S) -> Result<Self, KernelError> {
        if !(p > S::zero() && p < S::from_f64_lossy(0.5)) {
            return Err(KernelError::InvalidParameter(format!(
                "random walk growth probability must lie in (0, 1/2), got {p}"
            )));
        }
        Ok(Self {
            p,
            growth_floor: false,
        })
    }

    /// Variant defined down to state 1, growing there with probability one.
    pub fn with_growth_floor(p: S) -> Result<Self, KernelError> {
        Ok(Self {
            growth_floor: true,
            ..Self::new(p)?
        })
    }

    pub fn p(&self) -> S {
        self.p
    }
}

impl<S: Scalar> Kernel for RandomWalkKernel<S> {
    type Scalar = S;

    fn min_state(&self) -> u64 {
        if self.growth_floor {
            1
        } else {
            2
        }
    }

    fn support_into(&self, n: u64, out: &mut Vec<(u64, S)>) -> Result<(), KernelError> {
        out.clear();
        if n < self.min_state() {
            return Err(KernelError::BelowMinState {
                n,
                min_state: self.min_state(),
            });
        }
        if n == 1 {
            out.push((2, S::one()));
        } else {
            out.push((n - 1, S::one() - self.p));
            out.push((n + 1, self.p));
        }
        Ok(())
    }
}

/// Deterministic descent: `pmf(n, n-1) = 1`. Closed-form baseline for
/// diagnostics (every trajectory is the staircase `n, n-1, ..., 1`).
#[derive(Debug, Clone, Copy, Default)]
pub struct DeterministicDescentKernel;

impl Kernel for DeterministicDescentKernel {
    type Scalar = f64;

    fn min_state(&self) -> u64 {
        2
    }

    fn support_into(&self, n: u64, out: &mut Vec<(u64, f64)>) -> Result<(), KernelError> {
        out.clear();
        if n < 2 {
            return Err(KernelError::BelowMinState { n, min_state: 2 });
        }
        out.push((n - 1, 1.0));
        Ok(())
    }
}

/// Row-level bookkeeping of the Lévy discretization: where rounding or
/// clamping moved an outcome away from the exact target `n e^y`.
#[derive(Debug, Clone, Copy)]
pub struct DistortionRow {
    pub n: u64,
    /// Log-jump this row discretizes (`f64::NAN` marks the drift row).
    pub jump: f64,
    pub target: f64,
    pub chosen: u64,
    pub clamped: bool,
}

/// Discretization of a finite-activity Lévy triplet into a transition
/// kernel whose exponents converge to the triplet's (`a_n`-sped, state
/// `n` mapped multiplicatively by `e^y`).
///
/// At state `n`, each jump atom `(y, rate)` receives mass `rate / a_n`
/// on `m ~ n e^y` (clamped into the legal split range for `y < 0`); the
/// residual mass carries the drift `b` through a single move
/// `m ~ n exp(b / (a_n q0))`, lazy when `b = 0`.
#[derive(Debug, Clone)]
pub struct LevyDiscKernel<S: Scalar> {
    triplet: LevyTriplet<S>,
    scaling: ScalingSequence<S>,
    min_state: u64,
}

const MIN_STATE_SCAN_CAP: u64 = 1 << 21;

impl<S: Scalar> LevyDiscKernel<S> {
    pub fn new(
        triplet: LevyTriplet<S>,
        scaling: ScalingSequence<S>,
    ) -> Result<Self, KernelError> {
        triplet
            .validate()
            .map_err(|e| KernelError::InvalidParameter(e.to_string()))?;
        if !triplet.gaussian().is_zero() {
            return Err(KernelError::InvalidParameter(
                "Gaussian component must be 0 in the discretization kernel".into(),
            ));
        }
        if !triplet.killing().is_zero() {
            return Err(KernelError::InvalidParameter(
                "killing is not representable by a transition kernel".into(),
            ));
        }
        let ln_half = -std::f64::consts::LN_2;
        for &(y, _) in triplet.jumps() {
            let y = y.to_f64_lossy();
            if y <= ln_half {
                return Err(KernelError::InvalidParameter(format!(
                    "jump atom y = {y} at or below -log 2: a locally largest fragment cannot undershoot half"
                )));
            }
        }
        let b = triplet.drift().to_f64_lossy();
        let gamma = scaling.gamma().to_f64_lossy();
        let c = scaling.c_scale().to_f64_lossy();
        if b != 0.0 && scaling.table().is_none() {
            if gamma > 1.0 {
                return Err(KernelError::InvalidParameter(
                    "gamma > 1 with nonzero drift: the per-step drift move rounds to zero at large states".into(),
                ));
            }
            if gamma == 1.0 && b.abs() / c < 0.5 {
                return Err(KernelError::InvalidParameter(format!(
                    "gamma = 1 needs |drift|/c_scale >= 1/2 to resolve the drift move; got {}",
                    b.abs() / c
                )));
            }
        }
        let mut kernel = Self {
            triplet,
            scaling,
            min_state: 2,
        };
        let mut n = 2u64;
        loop {
            if kernel.state_resolved(n) {
                break;
            }
            n += 1;
            if n > MIN_STATE_SCAN_CAP {
                return Err(KernelError::InvalidParameter(
                    "no state resolves the discretization (insufficient residual mass or drift resolution); lower rates or c_scale".into(),
                ));
            }
        }
        kernel.min_state = n;
        Ok(kernel)
    }

    pub fn triplet(&self) -> &LevyTriplet<S> {
        &self.triplet
    }

    pub fn scaling(&self) -> &ScalingSequence<S> {
        &self.scaling
    }

    fn residual_mass(&self, n: u64) -> Option<f64> {
        let a_n = self.scaling.value(n).ok()?.to_f64_lossy();
        let total: f64 = self
            .triplet
            .jumps()
            .iter()
            .map(|&(_, r)| r.to_f64_lossy() / a_n)
            .sum();
        Some(1.0 - total)
    }

    /// Whether all moves resolve to distinct legal states at `n`.
    fn state_resolved(&self, n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let Some(q0) = self.residual_mass(n) else {
            return false;
        };
        if q0 <= 1e-9 {
            return false;
        }
        let nf = n as f64;
        for &(y, _) in self.triplet.jumps() {
            let y = y.to_f64_lossy();
            if (nf * (y.exp() - 1.0)).abs() < 0.5 {
                return false;
            }
        }
        let b = self.triplet.drift().to_f64_lossy();
        if b != 0.0 {
            let a_n = match self.scaling.value(n) {
                Ok(a) => a.to_f64_lossy(),
                Err(_) => return false,
            };
            let x = b / (a_n * q0);
            if (nf * (x.exp() - 1.0)).abs() < 0.5 {
                return false;
            }
        }
        true
    }

    fn row_for_jump(n: u64, y: f64) -> (u64, bool) {
        let target = n as f64 * y.exp();
        let rounded = target.round_ties_even();
        if y < 0.0 {
            let lo = n.div_ceil(2);
            let hi = n - 1;
            let m = (rounded.max(0.0) as u64).clamp(lo, hi);
            (m, (m as f64 - rounded).abs() > 0.0)
        } else {
            let m = (rounded as u64).max(n + 1);
            (m, (m as f64 - rounded).abs() > 0.0)
        }
    }

    /// Per-row rounding/clamping report over a state grid.
    pub fn distortion(&self, states: &[u64]) -> Result<Vec<DistortionRow>, KernelError> {
        let mut rows = Vec::new();
        for &n in states {
            if n < self.min_state {
                return Err(KernelError::BelowMinState {
                    n,
                    min_state: self.min_state,
                });
            }
            let nf = n as f64;
            for &(y, _) in self.triplet.jumps() {
                let y = y.to_f64_lossy();
                let (m, clamped) = Self::row_for_jump(n, y);
                rows.push(DistortionRow {
                    n,
                    jump: y,
                    target: nf * y.exp(),
                    chosen: m,
                    clamped,
                });
            }
            let b = self.triplet.drift().to_f64_lossy();
            if b != 0.0 {
                let q0 = self.residual_mass(n).expect("resolved state");
                let a_n = self.scaling.value(n).unwrap().to_f64_lossy();
                let x = b / (a_n * q0);
                let (m, clamped) = Self::row_for_jump(n, x);
                rows.push(DistortionRow {
                    n,
                    jump: f64::NAN,
                    target: nf * x.exp(),
                    chosen: m,
                    clamped,
                });
            }
        }
        Ok(rows)
    }
}

impl<S: Scalar> Kernel for LevyDiscKernel<S> {
    type Scalar = S;

    fn min_state(&self) -> u64 {
        self.min_state
    }

    fn support_into(&self, n: u64, out: &mut Vec<(u64, S)>) -> Result<(), KernelError> {
        out.clear();
        if n < self.min_state {
            return Err(KernelError::BelowMinState {
                n,
                min_state: self.min_state,
            });
        }
        let a_n = self
            .scaling
            .value(n)
            .map_err(|e| KernelError::InvalidParameter(e.to_string()))?;
        let mut q0 = S::one();
        for &(y, rate) in self.triplet.jumps() {
            let mass = rate / a_n;
            q0 -= mass;
            let (m, _) = Self::row_for_jump(n, y.to_f64_lossy());
            out.push((m, mass));
        }
        let b = self.triplet.drift();
        let drift_m = if b.is_zero() {
            n
        } else {
            let x = (b / (a_n * q0)).to_f64_lossy();
            Self::row_for_jump(n, x).0
        };
        out.push((drift_m, q0));
        out.sort_by_key(|&(m, _)| m);
        out.dedup_by(|later, first| {
            if later.0 == first.0 {
                first.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(())
    }
}

/// Kernel read from explicit `(n, m, prob)` rows.
#[derive(Debug, Clone)]
pub struct TableKernel<S> {
    rows: BTreeMap<u64, Vec<(u64, S)>>,
}

impl<S: Scalar> TableKernel<S> {
    pub fn from_rows(
        raw: impl IntoIterator<Item = (u64, u64, S)>,
    ) -> Result<Self, KernelError> {
        let mut rows: BTreeMap<u64, Vec<(u64, S)>> = BTreeMap::new();
        for (n, m, prob) in raw {
            if n == 0 {
                return Err(KernelError::IllegalRow {
                    n,
                    m,
                    why: "states start at 1",
                });
            }
            if m < n.div_ceil(2) {
                return Err(KernelError::IllegalRow {
                    n,
                    m,
                    why: "outcome below ceil(n/2): the larger fragment cannot undershoot half",
                });
            }
            if !(prob >= S::zero() && prob <= S::one()) {
                return Err(KernelError::IllegalRow {
                    n,
                    m,
                    why: "probability outside [0, 1]",
                });
            }
            rows.entry(n).or_default().push((m, prob));
        }
        if rows.is_empty() {
            return Err(KernelError::InvalidParameter("empty kernel table".into()));
        }
        for (&n, support) in &mut rows {
            support.sort_by_key(|&(m, _)| m);
            let total: S = support.iter().map(|&(_, p)| p).sum();
            if (total - S::one()).abs().to_f64_lossy() > 1e-12 {
                return Err(KernelError::MassNotNormalized {
                    n,
                    total: total.to_f64_lossy(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Parses CSV with the exact header `n,m,prob`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, KernelError> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        {
            let headers = csv.headers()?;
            let expected = ["n", "m", "prob"];
            let got: Vec<&str> = headers.iter().map(str::trim).collect();
            if got != expected {
                return Err(KernelError::InvalidParameter(format!(
                    "table kernel csv must have header `n,m,prob`, got `{}`",
                    got.join(",")
                )));
            }
        }
        let mut raw = Vec::new();
        for record in csv.records() {
            let record = record?;
            let parse_u64 = |i: usize| -> Result<u64, KernelError> {
                record
                    .get(i)
                    .and_then(|f| f.trim().parse::<u64>().ok())
                    .ok_or_else(|| {
                        KernelError::InvalidParameter(format!(
                            "bad integer field in csv row {:?}",
                            record
                        ))
                    })
            };
            let n = parse_u64(0)?;
            let m = parse_u64(1)?;
            let prob: f64 = record
                .get(2)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| {
                    KernelError::InvalidParameter(format!("bad prob field in csv row {:?}", record))
                })?;
            raw.push((n, m, S::from_f64_lossy(prob)));
        }
        Self::from_rows(raw)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, KernelError> {
        let file = std::fs::File::open(path).map_err(|e| {
            KernelError::InvalidParameter(format!("cannot open {}: {e}", path.display()))
        })?;
        Self::from_csv_reader(file)
    }

    pub fn covered_states(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows.keys().copied()
    }
}

impl<S: Scalar> Kernel for TableKernel<S> {
    type Scalar = S;

    fn min_state(&self) -> u64 {
        *self.rows.keys().next().expect("non-empty table")
    }

    fn support_into(&self, n: u64, out: &mut Vec<(u64, S)>) -> Result<(), KernelError> {
        out.clear();
        match self.rows.get(&n) {
            Some(rows) => {
                out.extend_from_slice(rows);
                Ok(())
            }
            None => Err(KernelError::MissingState { n }),
        }
    }
}

/// Checks mass normalization and the support bound over a state range.
pub fn validate_kernel<K: Kernel>(kernel: &K, states: impl IntoIterator<Item = u64>, tol: f64) -> Result<(), KernelError> {
    let mut rows = Vec::new();
    for n in states {
        kernel.support_into(n, &mut rows)?;
        if rows.is_empty() {
            return Err(KernelError::EmptySupport { n });
        }
        let mut total = 0.0f64;
        for &(m, p) in &rows {
            if m < n.div_ceil(2) {
                return Err(KernelError::IllegalRow {
                    n,
                    m,
                    why: "outcome below ceil(n/2)",
                });
            }
            let p = p.to_f64_lossy();
            if !(0.0..=1.0 + tol).contains(&p) {
                return Err(KernelError::IllegalRow {
                    n,
                    m,
                    why: "probability outside [0, 1]",
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > tol {
            return Err(KernelError::MassNotNormalized { n, total });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn rw(p: f64) -> RandomWalkKernel<f64> {
        RandomWalkKernel::new(p).unwrap()
    }

    #[test]
    fn random_walk_support_matches_two_point_law() {
        let k = rw(0.25);
        assert_eq!(k.support(3).unwrap(), vec![(2, 0.75), (4, 0.25)]);
        assert_eq!(k.support(2).unwrap(), vec![(1, 0.75), (3, 0.25)]);
        assert!(matches!(
            k.support(1),
            Err(KernelError::BelowMinState { n: 1, .. })
        ));
    }

    #[test]
    fn random_walk_rejects_non_contracting_p() {
        assert!(RandomWalkKernel::new(0.5f64).is_err());
        assert!(RandomWalkKernel::new(0.0f64).is_err());
        assert!(RandomWalkKernel::new(-0.1f64).is_err());
        assert!(RandomWalkKernel::new(0.499f64).is_ok());
    }

    #[test]
    fn random_walk_mass_normalized_up_to_a_million() {
        let k = rw(0.25);
        let grid = (2..100).chain([1_000, 10_000, 1_000_000]);
        validate_kernel(&k, grid, 1e-12).unwrap();
    }

    #[test]
    fn frozen_kernel_absorbs_below_threshold() {
        let k = FrozenKernel::new(rw(0.25), 1).unwrap();
        assert_eq!(k.support(1).unwrap(), vec![(1, 1.0)]);
        assert_eq!(k.support(5).unwrap(), vec![(4, 0.75), (6, 0.25)]);
    }

    #[test]
    fn frozen_kernel_needs_threshold_covering_small_states() {
        // min_state 2 needs threshold >= 1.
        assert!(FrozenKernel::new(rw(0.25), 0).is_err());
        assert!(FrozenKernel::new(rw(0.25), 1).is_ok());
        // Growth-floor variant reaches down to 1, so B = 0 is fine.
        let floor = RandomWalkKernel::with_growth_floor(0.25f64).unwrap();
        assert!(FrozenKernel::new(floor, 0).is_ok());
    }

    #[test]
    fn sample_step_frozen_growth_and_split_branches() {
        let k = FrozenKernel::new(rw(0.25), 1).unwrap();
        let mut rows = Vec::new();
        let mut rng = rng::stream(1, &[0]);
        assert_eq!(
            k.sample_step(1, &mut rows, &mut rng).unwrap(),
            KernelOutcome::Frozen
        );
        // At n = 5 only two outcomes exist; sample until both were seen.
        let (mut saw_growth, mut saw_split) = (false, false);
        for _ in 0..256 {
            match k.sample_step(5, &mut rows, &mut rng).unwrap() {
                KernelOutcome::Growth { to } => {
                    assert_eq!(to, 6);
                    saw_growth = true;
                }
                KernelOutcome::Split { larger, smaller } => {
                    assert_eq!((larger, smaller), (4, 1));
                    saw_split = true;
                }
                other => panic!("unexpected outcome {other:?}"),
            }
        }
        assert!(saw_growth && saw_split);
    }

    #[test]
    fn growth_floor_state_one_grows_surely() {
        let k = RandomWalkKernel::with_growth_floor(0.25f64).unwrap();
        assert_eq!(k.support(1).unwrap(), vec![(2, 1.0)]);
        assert_eq!(k.support(2).unwrap(), vec![(1, 0.75), (3, 0.25)]);
    }

    #[test]
    fn levy_disc_atom_row_matches_worked_example() {
        // b = 0, one negative atom (-0.3, rate 2), gamma = 1/2: at n = 100,
        // a_n = 10 and the atom row lands on round(100 e^{-0.3}) = 74 with
        // mass 0.2; the residual 0.8 is a lazy row at m = n.
        let triplet = LevyTriplet::<f64>::new(0.0, 0.0, vec![(-0.3, 2.0)], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(0.5, 1.0).unwrap();
        let k = LevyDiscKernel::new(triplet, scaling).unwrap();
        let rows = k.support(100).unwrap();
        assert_eq!(rows, vec![(74, 0.2), (100, 0.8)]);
        assert!((k.pmf(100, 74).unwrap() - 0.2f64).abs() < 1e-15);
    }

    #[test]
    fn levy_disc_drift_only_descends_one_step_at_gamma_one() {
        let triplet = LevyTriplet::<f64>::new(-1.0, 0.0, vec![], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(1.0, 1.0).unwrap();
        let k = LevyDiscKernel::new(triplet, scaling).unwrap();
        for n in [2u64, 3, 10, 1_000, 65_536] {
            assert_eq!(k.support(n).unwrap(), vec![(n - 1, 1.0)]);
        }
    }

    #[test]
    fn levy_disc_rejects_undershooting_atoms() {
        let triplet =
            LevyTriplet::<f64>::new(0.0, 0.0, vec![(-(2.0f64.ln()) - 0.01, 1.0)], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(0.5, 1.0).unwrap();
        assert!(LevyDiscKernel::new(triplet, scaling).is_err());
    }

    #[test]
    fn levy_disc_min_state_guards_residual_mass() {
        // rate 2 with a_n = sqrt(n): needs sqrt(n) > 2 plus atom resolution.
        let triplet = LevyTriplet::<f64>::new(0.0, 0.0, vec![(-0.3, 2.0)], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(0.5, 1.0).unwrap();
        let k = LevyDiscKernel::new(triplet, scaling).unwrap();
        let ms = k.min_state();
        assert!(ms >= 5, "residual mass requires a_n > 2, got min_state {ms}");
        assert!(k.support(ms).is_ok());
        assert!(matches!(
            k.support(ms - 1),
            Err(KernelError::BelowMinState { .. })
        ));
        validate_kernel(&k, ms..500, 1e-12).unwrap();
    }

    #[test]
    fn levy_disc_gamma_one_small_drift_rejected() {
        let triplet = LevyTriplet::<f64>::new(-0.3, 0.0, vec![], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(1.0, 1.0).unwrap();
        assert!(LevyDiscKernel::new(triplet, scaling).is_err());
    }

    #[test]
    fn table_kernel_roundtrips_csv_and_validates_mass() {
        let csv = "n,m,prob\n2,1,0.75\n2,3,0.25\n3,2,1.0\n";
        let k: TableKernel<f64> = TableKernel::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(k.min_state(), 2);
        assert_eq!(k.support(2).unwrap(), vec![(1, 0.75), (3, 0.25)]);
        assert!(matches!(
            k.support(4),
            Err(KernelError::MissingState { n: 4 })
        ));

        let bad = "n,m,prob\n2,1,0.70\n2,3,0.25\n";
        let err = TableKernel::<f64>::from_csv_reader(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, KernelError::MassNotNormalized { n: 2, .. }));
    }

    #[test]
    fn table_kernel_rejects_undershooting_rows() {
        let err = TableKernel::<f64>::from_rows([(10, 4, 1.0)]).unwrap_err();
        assert!(matches!(err, KernelError::IllegalRow { n: 10, m: 4, .. }));
    }

    #[test]
    fn support_scan_confirms_no_undershoot() {
        let triplet = LevyTriplet::<f64>::new(-1.0, 0.0, vec![(-0.5, 1.0), (0.4, 0.5)], 0.0).unwrap();
        let scaling = ScalingSequence::power_law(0.5, 1.0).unwrap();
        let k = LevyDiscKernel::new(triplet, scaling).unwrap();
        let mut rows = Vec::new();
        for n in k.min_state()..10_000 {
            k.support_into(n, &mut rows).unwrap();
            for &(m, _) in &rows {
                assert!(m >= n.div_ceil(2), "undershoot at n={n}, m={m}");
            }
        }
    }

    #[test]
    fn works_at_f32_too() {
        let k = RandomWalkKernel::<f32>::new(0.25).unwrap();
        let rows = k.support(4).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].1 + rows[1].1 - 1.0).abs() < 1e-6);
    }
}
