//! Bi-infinite geometric schedules, their profit function and robustness.
//!
//! A 4-robust schedule is identified by its phase `lambda` in `[0, 1)`: contract
//! `i` has length `2^(i - lambda)` and, since infinitely many infinitesimal
//! contracts precede it, completes at `2^(i + 1 - lambda)`. Times are handled in
//! the log2 domain; values are exponentiated only when returned.

use crate::error::{Error, Result};

/// Exponents within this many ulps of an integer snap onto it.
const SNAP_ULPS: f64 = 4.0;

/// Absolute snapping tolerance for a log2-domain quantity built from terms of
/// magnitude up to `scale`.
pub(crate) fn snap_tolerance(scale: f64) -> f64 {
    SNAP_ULPS * f64::EPSILON * scale.abs().max(1.0)
}

/// `floor(x)`, except that values within the snapping tolerance of an integer
/// land on that integer.
pub(crate) fn snapped_floor(x: f64, scale: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= snap_tolerance(scale) {
        nearest
    } else {
        x.floor()
    }
}

/// The schedule `X(lambda) = (2^(i - lambda))_{i in Z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricSchedule {
    lambda: f64,
}

impl GeometricSchedule {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidPhase(lambda));
        }
        Ok(Self { lambda })
    }

    /// The doubling schedule `X(0)`.
    pub fn doubling() -> Self {
        Self { lambda: 0.0 }
    }

    /// Builds `X(phase mod 1)`. Phases that reduce to 1 within rounding wrap to 0.
    pub fn from_phase(phase: f64) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::InvalidPhase(phase));
        }
        let mut lambda = phase.rem_euclid(1.0);
        if lambda >= 1.0 || 1.0 - lambda <= snap_tolerance(phase) {
            lambda = 0.0;
        }
        Self::new(lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn log2_contract_length(&self, i: i64) -> f64 {
        i as f64 - self.lambda
    }

    pub fn contract_length(&self, i: i64) -> f64 {
        self.log2_contract_length(i).exp2()
    }

    pub fn log2_completion_time(&self, i: i64) -> f64 {
        (i + 1) as f64 - self.lambda
    }

    /// `sum_{j <= i} 2^(j - lambda) = 2^(i + 1 - lambda)`.
    pub fn completion_time(&self, i: i64) -> f64 {
        self.log2_completion_time(i).exp2()
    }

    /// Index of the largest contract completed by the time whose log2 is `log2_t`.
    pub fn profit_index_log2(&self, log2_t: f64) -> i64 {
        let exponent = log2_t + self.lambda - 1.0;
        snapped_floor(exponent, log2_t.abs() + 2.0) as i64
    }

    /// Index of the largest contract completed by time `t > 0`; a contract ending
    /// exactly at `t` counts as completed.
    pub fn profit_index(&self, t: f64) -> i64 {
        self.profit_index_log2(t.log2())
    }

    /// `log2 l(X, T)` for `T = 2^log2_t`.
    pub fn log2_profit(&self, log2_t: f64) -> f64 {
        self.log2_contract_length(self.profit_index_log2(log2_t))
    }

    /// `l(X, T)`: length of the largest contract completed by time `t`. Returns 0
    /// for non-positive times.
    pub fn profit(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.contract_length(self.profit_index(t))
    }

    /// `T / l(X, T)`.
    pub fn ratio(&self, t: f64) -> f64 {
        t / self.profit(t)
    }

    /// Largest `T / l(X, T)` over probes taken just below the completion times of
    /// `octaves` consecutive contracts.
    ///
    /// Each probe sits one resolvable step below a completion time in the log2
    /// domain, i.e. twice the snapping tolerance, so the completing contract is
    /// not yet counted. The result approaches 4 from below.
    pub fn robustness_probe(&self, octaves: u32) -> f64 {
        let first = -(octaves as i64) / 2;
        (first..first + octaves as i64)
            .map(|i| {
                let log2_c = self.log2_completion_time(i);
                let log2_t = log2_c - 2.0 * snap_tolerance(log2_c.abs() + 2.0);
                let log2_profit = self.log2_profit(log2_t);
                (log2_t - log2_profit).exp2()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A finite prefix `(x_0, ..., x_{m-1})` of a schedule; used as a cross-check
/// for the bi-infinite formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSchedule {
    lengths: Vec<f64>,
}

impl FiniteSchedule {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = lengths.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidTime(bad));
        }
        Ok(Self { lengths })
    }

    /// The doubling schedule `(1, 2, 4, ..., 2^(m-1))`.
    pub fn doubling(m: usize) -> Self {
        Self {
            lengths: (0..m).map(|i| (i as f64).exp2()).collect(),
        }
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `max_{i >= 1} (x_0 + ... + x_i) / x_{i-1}`.
    ///
    /// On a truncation of a bi-infinite schedule this is a lower bound on its
    /// acceleration ratio, since the missing prefix only adds to each sum.
    pub fn acceleration_ratio(&self) -> Result<f64> {
        if self.lengths.len() < 2 {
            return Err(Error::TooFewContracts(self.lengths.len()));
        }
        let mut prefix = self.lengths[0];
        let mut best = f64::NEG_INFINITY;
        for w in self.lengths.windows(2) {
            prefix += w[1];
            best = best.max(prefix / w[0]);
        }
        Ok(best)
    }
}

/// The schedule with a contract completing exactly at `tau`, so that
/// `l(X, tau) = tau / 2`.
pub fn single_advice_schedule(tau: f64) -> Result<GeometricSchedule> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidTime(tau));
    }
    let log2_tau = tau.log2();
    let nearest = log2_tau.round();
    if (log2_tau - nearest).abs() <= snap_tolerance(log2_tau.abs() + 1.0) {
        return Ok(GeometricSchedule::doubling());
    }
    GeometricSchedule::from_phase(log2_tau.ceil() - log2_tau)
}

/// Interrupts the single-advice schedule for `tau` just before its key contract
/// completes: returns `(T, l(X, T))` with `T = tau - eps`, where
/// `l(X, T) = (T + eps) / 4`.
pub fn fragility_probe(tau: f64, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < tau / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "fragility probe needs 0 < eps < tau/2, got tau={tau}, eps={eps}"
        )));
    }
    let schedule = single_advice_schedule(tau)?;
    let t = tau - eps;
    Ok((t, schedule.profit(t)))
}
