//! Consistency of 4-robust schedules under distributional advice.
//!
//! The profit `l(X, z)` is a step function of `z` whose jumps sit at the
//! completion times of `X`, so `E[l(X, z)]` is an exact sum of contract lengths
//! times CDF differences. `sel_n` picks the best schedule out of the portfolio
//! `X(j/n)`, `j = 0..n`.

use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::{AdviceDistribution, PointSet, TAIL_QUANTILE};
use crate::error::{Error, Result};
use crate::schedule::GeometricSchedule;

/// Largest portfolio `sel_for_epsilon` will search.
pub const MAX_PORTFOLIO: usize = 10_000_000;

/// Default offset used by [`adversarial_discrete`] to place points just before
/// completion times.
pub const DEFAULT_ADVERSARIAL_EPS: f64 = 1e-9;

/// Samples per Monte-Carlo partition. Partition `p` draws from a generator
/// seeded with `seed ^ p`.
pub const MC_PARTITION_SIZE: usize = 1 << 16;

/// `4 ln 2`, the best consistency any 4-robust schedule can guarantee.
pub const FOUR_LN_2: f64 = 4.0 * LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitEstimate {
    pub value: f64,
    /// Bound on the profit carried by mass outside the summed window.
    pub error_bar: f64,
}

/// A schedule together with its consistency against some advice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub lambda: f64,
    pub consistency: f64,
    /// The bound this value is checked against.
    pub guarantee: f64,
    pub expected_value: f64,
    pub expected_profit: f64,
    /// Portfolio size, when produced by `sel_n`.
    pub n: Option<usize>,
}

impl ConsistencyReport {
    pub fn schedule(&self) -> GeometricSchedule {
        GeometricSchedule::new(self.lambda).expect("report holds a valid phase")
    }

    /// Portfolio index `j` with `lambda = j / n`.
    pub fn index(&self) -> Option<usize> {
        self.n.map(|n| (self.lambda * n as f64).round() as usize)
    }
}

pub fn dist_mean(mu: &AdviceDistribution) -> f64 {
    mu.mean()
}

pub fn interval_mass(mu: &AdviceDistribution, a: f64, b: f64) -> f64 {
    mu.interval_mass(a, b)
}

/// `E[l(X, z)]` for `z ~ mu`.
pub fn expected_profit(mu: &AdviceDistribution, x: &GeometricSchedule) -> f64 {
    expected_profit_with_error(mu, x).value
}

/// `E[l(X, z)]` with an error bar for mass outside the effective support.
///
/// Atoms are credited through [`GeometricSchedule::profit`], so an atom on a
/// completion time gets the completed contract. The continuous part is summed
/// interval by interval: mass on `[c_i, c_{i+1})` earns contract `i`.
pub fn expected_profit_with_error(
    mu: &AdviceDistribution,
    x: &GeometricSchedule,
) -> ProfitEstimate {
    let atomic: f64 = mu.atoms().iter().map(|&(t, w)| w * x.profit(t)).sum();

    let (mut lo, hi) = mu.effective_support();
    if !(lo > 0.0) {
        lo = mu.quantile(TAIL_QUANTILE).max(f64::MIN_POSITIVE);
    }
    let first = x.profit_index(lo);
    let mut last = x.profit_index(hi);
    if x.completion_time(last) > hi {
        last -= 1;
    }

    let mut continuous = 0.0;
    for i in first..=last.max(first) {
        let mass = mu.continuous_mass(x.completion_time(i), x.completion_time(i + 1));
        continuous += x.contract_length(i) * mass;
    }

    let below = mu.continuous_mass(0.0, x.completion_time(first));
    let above = mu.continuous_mass(x.completion_time(last.max(first) + 1), f64::INFINITY);
    let error_bar =
        below * x.contract_length(first) + above * x.contract_length(last.max(first) + 1);

    ProfitEstimate {
        value: atomic + continuous,
        error_bar,
    }
}

/// `c(X, mu) = E[z] / E[l(X, z)]`.
pub fn consistency(mu: &AdviceDistribution, x: &GeometricSchedule) -> Result<f64> {
    let profit = expected_profit(mu, x);
    if !(profit > 0.0 && profit.is_finite()) {
        return Err(Error::ZeroExpectedProfit(profit));
    }
    Ok(mu.mean() / profit)
}

fn report(
    mu: &AdviceDistribution,
    x: &GeometricSchedule,
    guarantee: f64,
    n: Option<usize>,
) -> Result<ConsistencyReport> {
    let expected_profit = expected_profit(mu, x);
    if !(expected_profit > 0.0 && expected_profit.is_finite()) {
        return Err(Error::ZeroExpectedProfit(expected_profit));
    }
    let expected_value = mu.mean();
    Ok(ConsistencyReport {
        lambda: x.lambda(),
        consistency: expected_value / expected_profit,
        guarantee,
        expected_value,
        expected_profit,
        n,
    })
}

/// Consistency report for a fixed schedule, checked against the robustness bound 4.
pub fn evaluate(mu: &AdviceDistribution, x: &GeometricSchedule) -> Result<ConsistencyReport> {
    report(mu, x, 4.0, None)
}

/// `4n (2^(1/n) - 1)`: decreasing in `n`, tends to `4 ln 2`.
pub fn bound_upper(n: usize) -> f64 {
    let n = n as f64;
    4.0 * n * (LN_2 / n).exp_m1()
}

/// The best schedule in the portfolio `{X(j/n) : j = 0..n}`. Ties go to the
/// smallest `j`.
pub fn sel_n(mu: &AdviceDistribution, n: usize) -> Result<ConsistencyReport> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "portfolio size must be at least 1".into(),
        ));
    }
    let guarantee = bound_upper(n);
    let mut best: Option<ConsistencyReport> = None;
    for j in 0..n {
        let x = GeometricSchedule::new(j as f64 / n as f64)?;
        let candidate = report(mu, &x, guarantee, Some(n))?;
        if best.is_none_or(|b| candidate.consistency < b.consistency) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("n >= 1"))
}

/// Smallest `n` with `bound_upper(n) <= 4 ln 2 + eps`.
pub fn portfolio_size_for_epsilon(eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let target = FOUR_LN_2 + eps;
    let fits = |n: usize| bound_upper(n) <= target;
    if fits(1) {
        return Ok(1);
    }
    // bound_upper is decreasing: gallop, then bisect on (lo, hi]
    let mut lo = 1;
    let mut hi = 2;
    while !fits(hi) {
        if hi >= MAX_PORTFOLIO {
            return Err(Error::PortfolioTooLarge(hi, MAX_PORTFOLIO));
        }
        lo = hi;
        hi = (hi * 2).min(MAX_PORTFOLIO);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `sel_n` with the smallest portfolio whose guarantee is within `eps` of `4 ln 2`.
pub fn sel_for_epsilon(mu: &AdviceDistribution, eps: f64) -> Result<ConsistencyReport> {
    sel_n(mu, portfolio_size_for_epsilon(eps)?)
}

/// Point masses at `2^(2 - lambda_k - eps)` with masses telescoping to 1, so that
/// every `X(lambda_k)` has the same consistency `4 (sum_k 2^(gap_k) - n)`.
pub fn adversarial_discrete(lambdas: &[f64], eps: f64) -> Result<AdviceDistribution> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("need at least one phase".into()));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 0.1), got {eps}"
        )));
    }
    if lambdas.iter().any(|l| !(0.0..1.0).contains(l)) {
        return Err(Error::InvalidParameter("phases must lie in [0, 1)".into()));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "phases must be strictly increasing".into(),
        ));
    }
    let base = lambdas[0];
    let n = lambdas.len();
    let points = (0..n)
        .map(|k| {
            let time = (2.0 - lambdas[k] - eps).exp2();
            let next = if k + 1 < n {
                (lambdas[k + 1] - base).exp2()
            } else {
                2.0
            };
            (time, next - (lambdas[k] - base).exp2())
        })
        .collect();
    // masses telescope to exactly 1 up to rounding
    Ok(AdviceDistribution::PointSet(PointSet::from_weights(
        points,
    )?))
}

pub fn adversarial_continuous(d: f64) -> Result<AdviceDistribution> {
    AdviceDistribution::adversarial_continuous(d)
}

/// Realized performance `E[z] / E[l(X, z)]` when interruptions follow `mu_actual`.
pub fn performance_under(x: &GeometricSchedule, mu_actual: &AdviceDistribution) -> Result<f64> {
    consistency(mu_actual, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Delta-method standard error of the ratio estimator.
    pub stderr: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    z: f64,
    l: f64,
    zz: f64,
    ll: f64,
    zl: f64,
}

impl Moments {
    fn add(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            z: self.z + o.z,
            l: self.l + o.l,
            zz: self.zz + o.zz,
            ll: self.ll + o.ll,
            zl: self.zl + o.zl,
        }
    }
}

/// Sampling estimate of `c(X, mu)`, independent of the CDF-difference route.
///
/// Samples are split into partitions of [`MC_PARTITION_SIZE`]; partition `p`
/// uses `ChaCha8Rng::seed_from_u64(seed ^ p)` and partitions are combined in
/// order, so the result does not depend on the number of worker threads.
pub fn monte_carlo_consistency(
    mu: &AdviceDistribution,
    x: &GeometricSchedule,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo needs at least 1000 samples, got {samples}"
        )));
    }
    let partitions = samples.div_ceil(MC_PARTITION_SIZE);
    let parts: Vec<Moments> = (0..partitions)
        .into_par_iter()
        .map(|p| {
            let count = MC_PARTITION_SIZE.min(samples - p * MC_PARTITION_SIZE);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p as u64);
            let mut m = Moments::default();
            for _ in 0..count {
                let z = mu.sample(&mut rng);
                let l = x.profit(z);
                m = m.add(Moments {
                    n: 1.0,
                    z,
                    l,
                    zz: z * z,
                    ll: l * l,
                    zl: z * l,
                });
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::add);

    let (mean_z, mean_l) = (m.z / m.n, m.l / m.n);
    if !(mean_l > 0.0) {
        return Err(Error::ZeroExpectedProfit(mean_l));
    }
    let ratio = mean_z / mean_l;
    let var_z = (m.zz / m.n - mean_z * mean_z).max(0.0);
    let var_l = (m.ll / m.n - mean_l * mean_l).max(0.0);
    let cov = m.zl / m.n - mean_z * mean_l;
    let var_ratio =
        (var_z - 2.0 * ratio * cov + ratio * ratio * var_l).max(0.0) / (mean_l * mean_l);
    Ok(MonteCarloEstimate {
        estimate: ratio,
        stderr: (var_ratio / m.n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sched(lambda: f64) -> GeometricSchedule {
        GeometricSchedule::new(lambda).unwrap()
    }

    #[test]
    fn expected_profit_examples() {
        for (d, lambda) in [(1.0, 0.0), (5.0, 0.3), (7.0, 0.6), (1e-3, 0.99)] {
            let mu = adversarial_continuous(d).unwrap();
            assert_relative_eq!(
                expected_profit(&mu, &sched(lambda)),
                d / 2.0,
                max_relative = 1e-14
            );
        }
        let p = AdviceDistribution::point(4.0).unwrap();
        assert_eq!(expected_profit(&p, &sched(0.0)), 2.0);
        let u = AdviceDistribution::uniform(2.0, 4.0).unwrap();
        assert_eq!(expected_profit(&u, &sched(0.0)), 1.0);
    }

    #[test]
    fn consistency_examples() {
        let mu = adversarial_continuous(7.0).unwrap();
        assert_relative_eq!(
            consistency(&mu, &sched(0.6)).unwrap(),
            FOUR_LN_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(FOUR_LN_2, 2.772_589, epsilon = 1e-6);
        let p = AdviceDistribution::point(4.0).unwrap();
        assert_eq!(consistency(&p, &sched(0.0)).unwrap(), 2.0);
        let p = AdviceDistribution::point(3.999).unwrap();
        assert_relative_eq!(consistency(&p, &sched(0.0)).unwrap(), 3.999);
    }

    #[test]
    fn truncated_normal_error_bar_is_tiny() {
        let mu = AdviceDistribution::truncated_normal(300.0, 15.0).unwrap();
        let est = expected_profit_with_error(&mu, &sched(0.0));
        assert!(est.error_bar < 1e-9 * est.value);
        // cross-checked against an independent Monte-Carlo run (2e6 samples)
        assert_relative_eq!(mu.mean() / est.value, 2.3457, epsilon = 1e-3);
    }

    #[test]
    fn bound_upper_examples() {
        assert_relative_eq!(bound_upper(1), 4.0, max_relative = 1e-15);
        assert_relative_eq!(
            bound_upper(4),
            16.0 * (0.25f64.exp2() - 1.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(bound_upper(4), 3.0273, epsilon = 1e-4);
        assert!((bound_upper(1_000_000) - FOUR_LN_2).abs() < 1e-5);
        for n in 1..200 {
            assert!(bound_upper(n + 1) < bound_upper(n));
        }
    }

    #[test]
    fn sel_n_respects_guarantee() {
        let mu = AdviceDistribution::truncated_normal(37.0, 2.0).unwrap();
        let r = sel_n(&mu, 1).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert!(r.consistency <= 4.0);
        for n in [2, 4, 8, 16] {
            let r = sel_n(&mu, n).unwrap();
            assert!(r.consistency <= bound_upper(n) + 1e-9);
            assert_relative_eq!(
                r.consistency,
                r.expected_value / r.expected_profit,
                max_relative = 1e-12
            );
        }
        assert!(sel_n(&mu, 0).is_err());
    }

    #[test]
    fn sel_n_breaks_ties_towards_smallest_index() {
        let mu = adversarial_continuous(3.0).unwrap();
        let r = sel_n(&mu, 8).unwrap();
        assert_eq!(r.index(), Some(0));
    }

    #[test]
    fn adversarial_discrete_tightness() {
        let eps = DEFAULT_ADVERSARIAL_EPS;
        let mu = adversarial_discrete(&[0.0], eps).unwrap();
        assert_relative_eq!(
            consistency(&mu, &sched(0.0)).unwrap(),
            4.0,
            max_relative = 1e-8
        );

        let mu = adversarial_discrete(&[0.0, 0.5], eps).unwrap();
        let AdviceDistribution::PointSet(ps) = &mu else {
            panic!()
        };
        let s2 = 2f64.sqrt();
        // points are stored by time, so the phase-0.5 point comes first
        assert_relative_eq!(ps.points()[1].1, s2 - 1.0, max_relative = 1e-14);
        assert_relative_eq!(ps.points()[0].1, 2.0 - s2, max_relative = 1e-14);
        for l in [0.0, 0.5] {
            assert_relative_eq!(
                consistency(&mu, &sched(l)).unwrap(),
                8.0 * (s2 - 1.0),
                max_relative = 1e-8
            );
        }

        let lambdas = [0.0, 0.25, 0.5, 0.75];
        let mu = adversarial_discrete(&lambdas, eps).unwrap();
        for l in lambdas {
            assert!((consistency(&mu, &sched(l)).unwrap() - bound_upper(4)).abs() < 1e-6);
        }
        assert!((sel_n(&mu, 4).unwrap().consistency - bound_upper(4)).abs() < 1e-6);
    }

    #[test]
    fn adversarial_discrete_rejects_bad_phases() {
        assert!(adversarial_discrete(&[0.5, 0.25], 1e-9).is_err());
        assert!(adversarial_discrete(&[0.25, 0.25], 1e-9).is_err());
        assert!(adversarial_discrete(&[0.0, 1.0], 1e-9).is_err());
        assert!(adversarial_discrete(&[0.0], 0.5).is_err());
        assert!(adversarial_discrete(&[], 1e-9).is_err());
    }

    #[test]
    fn portfolio_size_examples() {
        assert_eq!(portfolio_size_for_epsilon(1.3).unwrap(), 1);
        assert_eq!(portfolio_size_for_epsilon(0.3).unwrap(), 4);
        assert_eq!(portfolio_size_for_epsilon(1e9).unwrap(), 1);
        assert!(bound_upper(3) > FOUR_LN_2 + 0.3);
        assert!(portfolio_size_for_epsilon(0.0).is_err());
        let n = portfolio_size_for_epsilon(1e-6).unwrap();
        assert!(n < MAX_PORTFOLIO);
        assert!(bound_upper(n) <= FOUR_LN_2 + 1e-6 && bound_upper(n - 1) > FOUR_LN_2 + 1e-6);
    }

    #[test]
    fn sel_for_epsilon_meets_target() {
        let mu = AdviceDistribution::uniform(10.0, 13.0).unwrap();
        let r = sel_for_epsilon(&mu, 0.3).unwrap();
        assert_eq!(r.n, Some(4));
        assert!(r.consistency <= FOUR_LN_2 + 0.3);
    }

    #[test]
    fn monte_carlo_degenerate_is_exact() {
        let p = AdviceDistribution::point(4.0).unwrap();
        let est = monte_carlo_consistency(&p, &sched(0.0), 5000, 99).unwrap();
        assert_eq!(est.estimate, 2.0);
        assert!(monte_carlo_consistency(&p, &sched(0.0), 999, 0).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_analytic() {
        let x = sched(0.0);
        for mu in [
            adversarial_continuous(1.0).unwrap(),
            AdviceDistribution::uniform(2.0, 4.0).unwrap(),
        ] {
            let analytic = consistency(&mu, &x).unwrap();
            let est = monte_carlo_consistency(&mu, &x, 1_000_000, 3).unwrap();
            assert!(
                (est.estimate - analytic).abs() <= 3.0 * est.stderr,
                "{mu:?}: mc {est:?} vs {analytic}"
            );
        }
    }

    #[test]
    fn performance_under_examples() {
        let mu = AdviceDistribution::truncated_normal(50.0, 5.0).unwrap();
        let r = sel_n(&mu, 4).unwrap();
        assert_eq!(
            performance_under(&r.schedule(), &mu).unwrap(),
            r.consistency
        );

        let ac = adversarial_continuous(1.0).unwrap();
        assert_relative_eq!(
            performance_under(&sched(0.0), &ac).unwrap(),
            FOUR_LN_2,
            max_relative = 1e-14
        );

        let x = crate::schedule::single_advice_schedule(8.0).unwrap();
        let actual = AdviceDistribution::point(7.999).unwrap();
        assert_relative_eq!(performance_under(&x, &actual).unwrap(), 3.9995);
    }
}
