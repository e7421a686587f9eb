//! Multiple advice: a finite set of candidate interruption times.
//!
//! Every `tau = 2^(i + delta)` is a point `delta` on the unit circle. The
//! schedule whose contracts complete at `2^(m + delta_j)` has consistency
//! `2^(2 - D_j)`, where `D_j` is the clockwise gap from the predecessor of
//! `delta_j`, so the best such schedule sits after the widest gap.

use crate::error::{Error, Result};
use crate::schedule::{snap_tolerance, GeometricSchedule};

/// Phases closer than this are treated as one point on the circle.
pub const PHASE_MERGE_TOLERANCE: f64 = 1e-12;

/// `(i, delta)` with `tau = 2^(i + delta)`, `delta` in `[0, 1)`. Exponents
/// within 4 ulps of an integer snap to `delta = 0`.
pub fn decompose(tau: f64) -> Result<(i64, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTime(tau));
    }
    let l = tau.log2();
    let nearest = l.round();
    if (l - nearest).abs() <= snap_tolerance(l) {
        return Ok((nearest as i64, 0.0));
    }
    let i = l.floor();
    Ok((i as i64, l - i))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    taus: Vec<f64>,
    parts: Vec<(i64, f64)>,
}

impl PredictionSet {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::EmptyPredictionSet);
        }
        let parts = taus
            .iter()
            .map(|&t| decompose(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { taus, parts })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// `(i_j, delta_j)` for each prediction, in input order.
    pub fn decomposition(&self) -> &[(i64, f64)] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.taus.len()
    }

    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.parts.iter().map(|p| p.1)
    }
}

/// The schedule with contracts completing at every `2^(m + delta)`.
pub fn schedule_for_phase(delta: f64) -> Result<GeometricSchedule> {
    GeometricSchedule::from_phase(1.0 - delta)
}

/// `max over tau in P of tau / l(X, tau)`.
pub fn consistency_multi(x: &GeometricSchedule, p: &PredictionSet) -> f64 {
    p.taus
        .iter()
        .map(|&t| x.ratio(t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Mean of `tau / l(X, tau)` over `tau in P`.
pub fn average_consistency(x: &GeometricSchedule, p: &PredictionSet) -> f64 {
    p.taus.iter().map(|&t| x.ratio(t)).sum::<f64>() / p.k() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultResult {
    pub schedule: GeometricSchedule,
    pub consistency: f64,
    /// Phase `delta` of the chosen prediction.
    pub phase: f64,
}

/// Phases sorted ascending; ties keep input order.
fn sorted_phases(p: &PredictionSet) -> Vec<f64> {
    let mut phases: Vec<f64> = p.phases().collect();
    phases.sort_by(f64::total_cmp);
    phases
}

/// Evaluates the candidate schedule of every prediction and keeps the best,
/// the first in phase order on ties. `O(k^2)`.
pub fn mult_exact(p: &PredictionSet) -> Result<MultResult> {
    let mut best: Option<MultResult> = None;
    for phase in sorted_phases(p) {
        let schedule = schedule_for_phase(phase)?;
        let consistency = consistency_multi(&schedule, p);
        if best.is_none_or(|b| consistency < b.consistency) {
            best = Some(MultResult {
                schedule,
                consistency,
                phase,
            });
        }
    }
    Ok(best.expect("prediction sets are non-empty"))
}

/// Distinct phases on the unit circle and the clockwise gap preceding each.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    phases: Vec<f64>,
    gaps: Vec<f64>,
}

impl GapProfile {
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `gaps()[j]` is the arc from the predecessor of `phases()[j]` to it; the
    /// first gap wraps around through 1.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Index of the widest gap, the first on ties.
    pub fn widest(&self) -> usize {
        let mut best = 0;
        for (j, &g) in self.gaps.iter().enumerate() {
            if g > self.gaps[best] {
                best = j;
            }
        }
        best
    }
}

pub fn gap_profile(p: &PredictionSet) -> GapProfile {
    let mut phases: Vec<f64> = Vec::with_capacity(p.k());
    for phase in sorted_phases(p) {
        match phases.last() {
            Some(&last) if phase - last <= PHASE_MERGE_TOLERANCE => {}
            _ => phases.push(phase),
        }
    }
    // the circle closes: a phase just below 1 coincides with the first
    if phases.len() > 1 && phases[0] + 1.0 - phases[phases.len() - 1] <= PHASE_MERGE_TOLERANCE {
        phases.pop();
    }
    let k = phases.len();
    let gaps = (0..k)
        .map(|j| {
            if k == 1 {
                1.0
            } else if j == 0 {
                phases[0] + 1.0 - phases[k - 1]
            } else {
                phases[j] - phases[j - 1]
            }
        })
        .collect();
    GapProfile { phases, gaps }
}

/// Schedule after the widest circle gap, reported with its exact consistency.
/// `O(k log k)`.
pub fn mult_gap(p: &PredictionSet) -> Result<MultResult> {
    let profile = gap_profile(p);
    let phase = profile.phases[profile.widest()];
    let schedule = schedule_for_phase(phase)?;
    Ok(MultResult {
        schedule,
        consistency: consistency_multi(&schedule, p),
        phase,
    })
}

/// `2^(2 - 1/k)`.
pub fn bound_multi(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::EmptyPredictionSet);
    }
    Ok((2.0 - 1.0 / k as f64).exp2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set(taus: &[f64]) -> PredictionSet {
        PredictionSet::new(taus.to_vec()).unwrap()
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(2.0).unwrap(), (1, 0.0));
        let (i, d) = decompose(3.0).unwrap();
        assert_eq!(i, 1);
        assert_relative_eq!(d, 3f64.log2() - 1.0, max_relative = 1e-15);
        let (i, d) = decompose(0.75).unwrap();
        assert_eq!(i, -1);
        assert_relative_eq!(d, 3f64.log2() - 1.0, max_relative = 1e-14);
        assert!(decompose(0.0).is_err());
        assert!(decompose(-1.0).is_err());
    }

    #[test]
    fn decomposition_reproduces_tau() {
        for &t in &[0.001, 0.75, 1.0, 3.0, 1000.0, 1023.9, 1e9] {
            let (i, d) = decompose(t).unwrap();
            assert!((0.0..1.0).contains(&d));
            // log2 rounds at the scale of |i|, so the round trip is that coarse
            let tol = (2.0 + (i as f64).abs()) * f64::EPSILON;
            assert_relative_eq!(d.exp2() * (i as f64).exp2(), t, max_relative = tol);
        }
    }

    #[test]
    fn consistency_examples() {
        let p = set(&[2.0]);
        let x = schedule_for_phase(0.0).unwrap();
        assert_eq!(consistency_multi(&x, &p), 2.0);
        assert_eq!(average_consistency(&x, &p), 2.0);

        let p = set(&[2.0, 3.0]);
        let x = schedule_for_phase(p.decomposition()[1].1).unwrap();
        assert_relative_eq!(consistency_multi(&x, &p), 8.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(average_consistency(&x, &p), 7.0 / 3.0, max_relative = 1e-14);

        let p = set(&[2.0, 4.0, 8.0, 16.0]);
        assert_eq!(consistency_multi(&GeometricSchedule::doubling(), &p), 2.0);
        assert_eq!(average_consistency(&GeometricSchedule::doubling(), &p), 2.0);
    }

    #[test]
    fn mult_examples() {
        let r = mult_exact(&set(&[2.0])).unwrap();
        assert_eq!(r.consistency, 2.0);
        assert_eq!(r.schedule.profit(2.0), 1.0);

        let p = set(&[2.0, 3.0]);
        for r in [mult_exact(&p).unwrap(), mult_gap(&p).unwrap()] {
            assert_relative_eq!(r.consistency, 8.0 / 3.0, max_relative = 1e-14);
            assert_relative_eq!(r.phase, 3f64.log2() - 1.0);
        }
        assert_relative_eq!(
            mult_gap(&set(&[5.0])).unwrap().consistency,
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn equidistant_predictions_meet_the_bound() {
        for k in 1..=16usize {
            let taus: Vec<f64> = (0..k)
                .map(|j| (10.0 + j as f64 / k as f64).exp2())
                .collect();
            let p = set(&taus);
            let bound = bound_multi(k).unwrap();
            assert_relative_eq!(
                mult_exact(&p).unwrap().consistency,
                bound,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                mult_gap(&p).unwrap().consistency,
                bound,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn gap_profile_examples() {
        let p = set(&[1.0, 2f64.powf(0.25), 2f64.powf(0.5), 2f64.powf(0.75)]);
        for g in gap_profile(&p).gaps() {
            assert_relative_eq!(*g, 0.25, max_relative = 1e-14);
        }

        let p = set(&[2.0, 3.0]);
        let g = gap_profile(&p);
        let d = 3f64.log2() - 1.0;
        assert_relative_eq!(g.gaps()[0], 1.0 - d, max_relative = 1e-14);
        assert_relative_eq!(g.gaps()[1], d, max_relative = 1e-14);
        assert_eq!(g.widest(), 1);

        let g = gap_profile(&set(&[2f64.powf(0.3)]));
        assert_eq!(g.gaps(), &[1.0]);
    }

    #[test]
    fn duplicate_phases_merge_in_the_gap_profile() {
        let p = set(&[3.0, 6.0, 12.0, 2.0]);
        let g = gap_profile(&p);
        assert_eq!(g.phases().len(), 2);
        assert_relative_eq!(g.gaps().iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            mult_gap(&p).unwrap().consistency,
            mult_exact(&p).unwrap().consistency
        );
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bound_multi(1).unwrap(), 2.0);
        assert_relative_eq!(bound_multi(10).unwrap(), 3.7321, epsilon = 1e-4);
        assert!(bound_multi(1 << 40).unwrap() < 4.0);
        assert_relative_eq!(bound_multi(1 << 40).unwrap(), 4.0, max_relative = 1e-12);
        assert!(bound_multi(0).is_err());
    }

    #[test]
    fn empty_sets_are_rejected() {
        assert!(matches!(
            PredictionSet::new(vec![]),
            Err(Error::EmptyPredictionSet)
        ));
        assert!(PredictionSet::new(vec![1.0, f64::NAN]).is_err());
    }
}
