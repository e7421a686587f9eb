//! Learning-augmented contract scheduling.
//!
//! Bi-infinite geometric schedules `X(lambda)` are 4-robust. Given advice about
//! the interruption time, either as a distribution or as a finite set of
//! candidate times, this crate finds the schedule of best consistency, builds
//! the adversarial advice that makes each schedule look bad, and measures how
//! consistency degrades when the advice is off by a given Earth Mover's
//! distance.

// negated comparisons deliberately reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advice;
pub mod distribution;
pub mod emd;
pub mod error;
pub mod multi;
mod normal;
pub mod schedule;

pub use advice::{
    adversarial_continuous, adversarial_discrete, bound_upper, consistency, evaluate,
    expected_profit, monte_carlo_consistency, performance_under, portfolio_size_for_epsilon,
    sel_for_epsilon, sel_n, ConsistencyReport, FOUR_LN_2,
};
pub use distribution::{AdviceDistribution, DistributionKind};
pub use emd::{emd, perturb_boundary, smoothness_bound, smoothness_check, EmdValue, Perturbation};
pub use error::{Error, Result};
pub use multi::{
    average_consistency, bound_multi, consistency_multi, decompose, gap_profile, mult_exact,
    mult_gap, GapProfile, MultResult, PredictionSet,
};
pub use schedule::{single_advice_schedule, FiniteSchedule, GeometricSchedule};
