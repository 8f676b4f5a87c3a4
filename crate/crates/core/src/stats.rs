//! Small statistical utilities shared by the diagnostics layer:
//! compensated summation, moment estimates, empirical-distribution
//! distances and a least-squares trend fit.

/// Neumaier-compensated accumulator. Keeps exhaustive-enumeration sums
/// honest at the 1e-12 tolerances the exact identities are checked at.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

impl<'a> std::iter::FromIterator<&'a f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = &'a f64>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    assert!(n > 0, "mean_se of empty sample");
    let mean = samples.iter().collect::<KahanSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = samples
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<KahanSum>()
        .value();
    let var = ss / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares fit `y ~ a + b x`.
#[derive(Debug, Clone, Copy)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    pub points: usize,
}

impl TrendFit {
    /// Two-sided confidence interval for the slope at the given
    /// t-quantile (pass 1.96 for a large-sample 95% band).
    pub fn slope_ci(&self, t: f64) -> (f64, f64) {
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

/// Two-sided 97.5% t-quantile for small residual degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= TABLE.len() {
        TABLE[dof - 1]
    } else {
        1.96
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> TrendFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2, "need at least two points for a trend fit");
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    assert!(sxx > 0.0, "degenerate abscissae");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| {
                let r = yi - intercept - slope * xi;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    TrendFit {
        slope,
        intercept,
        slope_se,
        points: n,
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    v
}

/// Classical two-sample Kolmogorov–Smirnov statistic
/// `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Advance through ties on both sides before comparing CDFs.
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d.max((i as f64 / na - j as f64 / nb).abs()).min(1.0)
}

/// Lévy distance between two empirical distributions:
/// `inf { eps : F_a(x - eps) - eps <= F_b(x) <= F_a(x + eps) + eps }`.
///
/// Unlike the raw KS statistic this metrizes weak convergence, so it
/// stays small for nearly coincident point masses (degenerate laws show
/// up when comparing drift-only chains with their deterministic limit).
pub fn levy_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    let cdf = |s: &[f64], x: f64| -> f64 {
        // F(x) = P(X <= x)
        let mut lo = 0usize;
        let mut hi = s.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if s[mid] <= x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo as f64 / s.len() as f64
    };
    let ok = |eps: f64| -> bool {
        // Check the sandwich at every jump point of either CDF.
        for s in [&a, &b] {
            for &x in s.iter() {
                for side in [-1.0, 1.0] {
                    let x = x + side * 1e-12 * (1.0 + x.abs());
                    if cdf(&b, x) > cdf(&a, x + eps) + eps + 1e-12
                        || cdf(&b, x) < cdf(&a, x - eps) - eps - 1e-12
                    {
                        return false;
                    }
                }
            }
        }
        true
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let span = (a[a.len() - 1] - a[0]).max(b[b.len() - 1] - b[0]).max(1.0);
    hi = hi.max(span);
    if ok(lo) {
        return 0.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_adversarial_cancellation() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-16 * 10_000.0).abs() < 1e-24);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = [0.0, 0.1];
        let b = [5.0, 6.0];
        assert!((ks_two_sample(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levy_distance_of_close_point_masses_is_small() {
        let a = vec![0.2500; 100];
        let b = vec![0.2513; 100];
        // Raw KS would be 1 here.
        assert!((ks_two_sample(&a, &b) - 1.0).abs() < 1e-12);
        let d = levy_distance(&a, &b);
        assert!(d <= 0.0014, "levy distance {d}");
    }

    #[test]
    fn levy_bounded_by_ks_for_spread_samples() {
        let a: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let b: Vec<f64> = (0..200).map(|i| (i as f64 / 200.0).powi(2)).collect();
        let ks = ks_two_sample(&a, &b);
        let lv = levy_distance(&a, &b);
        assert!(lv <= ks + 1e-9, "levy {lv} vs ks {ks}");
    }

    #[test]
    fn trend_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&x, &y);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn wilson_interval_contains_proportion() {
        let (lo, hi) = wilson_ci(50, 100, 1.96);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(lo > 0.39 && hi < 0.61);
    }
}
