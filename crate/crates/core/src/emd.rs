//! Earth Mover's Distance between interruption-time distributions and the
//! smoothness check around the adversarial continuous advice.
//!
//! On the line the optimal transport cost equals `integral |F(x) - G(x)| dx`.
//! The integral is split at the union of both distributions' breakpoints and at
//! sign changes of `F - G`, so each piece is smooth and integrated by adaptive
//! quadrature (constant pieces, as between atoms, are summed exactly).

use crate::advice::{performance_under, FOUR_LN_2};
use crate::distribution::AdviceDistribution;
use crate::error::{Error, Result};
use crate::schedule::{snap_tolerance, GeometricSchedule};

/// Relative offset placing relocated mass strictly before a completion time.
pub const BOUNDARY_OFFSET: f64 = 1e-12;

/// Slack on `ratio <= bound` in [`smoothness_check`].
pub const SMOOTHNESS_SLACK: f64 = 1e-9;

const SIGN_SAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EmdValue(f64);

impl EmdValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `EMD(mu, nu) = integral_0^inf |F_mu(x) - F_nu(x)| dx`.
pub fn emd(mu: &AdviceDistribution, nu: &AdviceDistribution) -> EmdValue {
    let lo = mu.support().0.min(nu.support().0).max(0.0);
    let hi = mu.integration_limit().max(nu.integration_limit());
    let mut knots: Vec<f64> = mu
        .breakpoints()
        .into_iter()
        .chain(nu.breakpoints())
        .chain([lo, hi])
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let total = knots
        .windows(2)
        .map(|w| segment(mu, nu, w[0], w[1]))
        .sum::<f64>();
    EmdValue(total.max(0.0))
}

/// `integral_a^b |F - G|` where neither CDF has a breakpoint inside `(a, b)`.
fn segment(mu: &AdviceDistribution, nu: &AdviceDistribution, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let h = |x: f64| mu.cdf(x) - nu.cdf(x);
    let width = b - a;

    // one-sided limits at the ends, plain evaluations inside
    let mut xs = Vec::with_capacity(SIGN_SAMPLES + 1);
    let mut hs = Vec::with_capacity(SIGN_SAMPLES + 1);
    xs.push(a);
    hs.push(h(a));
    for k in 1..SIGN_SAMPLES {
        let x = a + width * k as f64 / SIGN_SAMPLES as f64;
        xs.push(x);
        hs.push(h(x));
    }
    xs.push(b);
    hs.push(mu.cdf_left(b) - nu.cdf_left(b));

    if hs.iter().all(|v| *v == hs[0]) {
        return hs[0].abs() * width;
    }

    let mut cuts = vec![a];
    for k in 0..hs.len() - 1 {
        if hs[k] * hs[k + 1] < 0.0 {
            cuts.push(bisect_root(&h, xs[k], xs[k + 1], hs[k]));
        }
    }
    cuts.push(b);

    cuts.windows(2)
        .map(|w| {
            if w[1] <= w[0] {
                return 0.0;
            }
            let tol = 1e-15 * (w[1] - w[0]);
            quadrature::integrate(|x| h(x).abs(), w[0], w[1], tol).integral
        })
        .sum()
}

fn bisect_root(h: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, h_lo: f64) -> f64 {
    let lo_sign = h_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `mu` moved rigidly by `shift`; its distance from `mu` is `|shift|`.
pub fn rigid_shift(mu: &AdviceDistribution, shift: f64) -> Result<AdviceDistribution> {
    mu.clone().shifted(shift)
}

/// Moves a `weight` fraction of `mu` down by `shift`; its distance from `mu` is
/// `weight * shift`.
pub fn mass_split(mu: &AdviceDistribution, weight: f64, shift: f64) -> Result<AdviceDistribution> {
    if !(weight > 0.0 && weight < 1.0 && shift > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mass split needs 0 < weight < 1 and shift > 0, got weight={weight}, shift={shift}"
        )));
    }
    AdviceDistribution::mixture(vec![
        (1.0 - weight, mu.clone()),
        (weight, mu.clone().shifted(-shift)?),
    ])
}

/// The completion time of `x` inside `[d, 2d)`.
fn completion_time_in_octave(x: &GeometricSchedule, d: f64) -> f64 {
    let e = d.log2() + x.lambda();
    let nearest = e.round();
    let k = if (e - nearest).abs() <= snap_tolerance(e.abs() + 2.0) {
        nearest
    } else {
        e.ceil()
    };
    let b = (k - x.lambda()).exp2();
    if b >= 2.0 * d {
        b / 2.0
    } else {
        b
    }
}

/// `integral_s^{s+delta} (x - dest) 2D / x^2 dx`.
fn relocation_cost(d: f64, s: f64, dest: f64, delta: f64) -> f64 {
    let u = delta / s;
    // ln(1+u) - u/(1+u), which cancels badly for small u
    let curvature = if u < 1e-3 {
        (2..12)
            .map(|n| {
                let n = n as f64;
                let sign = if n as i32 % 2 == 0 { 1.0 } else { -1.0 };
                sign * (n - 1.0) / n * u.powf(n)
            })
            .sum::<f64>()
    } else {
        u.ln_1p() - u / (1.0 + u)
    };
    2.0 * d * (curvature + (s - dest) / s * u / (1.0 + u))
}

/// Worst-case downward perturbation of `mu_d` at the completion time of
/// `X(lambda)`.
///
/// The mass of `mu_d` on `[b, b + delta]` is moved to `b (1 - 1e-12)`, just
/// before the completion time `b` in `[D, 2D)`, with `delta` chosen so the
/// transport cost is exactly `eta`. If `[b, 2D]` cannot absorb that cost, the
/// previous completion time `b / 2` is used and the mass is taken from
/// `[D, D + delta]`.
pub fn perturb_boundary(
    mu_d: &AdviceDistribution,
    eta: f64,
    lambda: f64,
) -> Result<AdviceDistribution> {
    let AdviceDistribution::AdversarialContinuous(ac) = mu_d else {
        return Err(Error::InvalidParameter(
            "boundary perturbation applies to the adversarial continuous advice".into(),
        ));
    };
    let d = ac.d();
    if !(eta > 0.0 && eta < d / 512.0) {
        return Err(Error::InvalidParameter(format!(
            "boundary perturbation needs 0 < eta < D/512, got eta={eta}, D={d}"
        )));
    }
    let x = GeometricSchedule::new(lambda)?;

    let b = completion_time_in_octave(&x, d);
    let (start, dest) = {
        let dest = b * (1.0 - BOUNDARY_OFFSET);
        if relocation_cost(d, b, dest, 2.0 * d - b) > eta {
            (b, dest)
        } else {
            (d, 0.5 * b * (1.0 - BOUNDARY_OFFSET))
        }
    };

    let (mut lo, mut hi) = (0.0, 2.0 * d - start);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if relocation_cost(d, start, dest, mid) < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let end = start + 0.5 * (lo + hi);

    let mut parts = Vec::with_capacity(3);
    let before = mu_d.interval_mass(d, start);
    if before > 0.0 {
        parts.push((before, mu_d.clone().restricted(d, start)?));
    }
    parts.push((
        mu_d.interval_mass(start, end),
        AdviceDistribution::point(dest)?,
    ));
    let after = mu_d.interval_mass(end, f64::INFINITY);
    if after > 0.0 {
        parts.push((after, mu_d.clone().restricted(end, f64::INFINITY)?));
    }
    AdviceDistribution::mixture(parts)
}

/// `(4 ln 2 + 2 eta/D) / (1 - 16 sqrt(2 eta/D))`, defined for `eta < D/512`.
pub fn smoothness_bound(eta: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "D must be positive, got {d}"
        )));
    }
    if !(eta >= 0.0 && eta < d / 512.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness bound needs 0 <= eta < D/512, got eta={eta}, D={d}"
        )));
    }
    let r = eta / d;
    Ok((FOUR_LN_2 + 2.0 * r) / (1.0 - 16.0 * (2.0 * r).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessCheck {
    /// Realized `E[z] / E[l(X, z)]` under the perturbed distribution.
    pub ratio: f64,
    /// `EMD(mu_D, mu')`.
    pub eta: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Checks `X(lambda)` against the smoothness bound when the advice is `mu_D`
/// and interruptions follow `mu_prime`.
pub fn smoothness_check(
    lambda: f64,
    d: f64,
    mu_prime: &AdviceDistribution,
) -> Result<SmoothnessCheck> {
    let mu_d = AdviceDistribution::adversarial_continuous(d)?;
    let x = GeometricSchedule::new(lambda)?;
    let eta = emd(&mu_d, mu_prime).value();
    let bound = smoothness_bound(eta, d)?;
    let ratio = performance_under(&x, mu_prime)?;
    Ok(SmoothnessCheck {
        ratio,
        eta,
        bound,
        ok: ratio <= bound + SMOOTHNESS_SLACK,
    })
}

/// Perturbations of `mu_D` at a prescribed EMD `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// [`perturb_boundary`].
    BoundaryShift,
    /// Whole distribution moved up by `eta`.
    RigidShiftUp,
    /// Whole distribution moved down by `eta`.
    RigidShiftDown,
    /// A fraction `2 eta / D` of the mass moved down by `D / 2`.
    MassSplit,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [
        Perturbation::BoundaryShift,
        Perturbation::RigidShiftUp,
        Perturbation::RigidShiftDown,
        Perturbation::MassSplit,
    ];

    pub fn code(self) -> u8 {
        match self {
            Perturbation::BoundaryShift => 0,
            Perturbation::RigidShiftUp => 1,
            Perturbation::RigidShiftDown => 2,
            Perturbation::MassSplit => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::BoundaryShift => "boundary_shift",
            Perturbation::RigidShiftUp => "rigid_shift_up",
            Perturbation::RigidShiftDown => "rigid_shift_down",
            Perturbation::MassSplit => "mass_split",
        }
    }

    /// Builds `mu'` with `EMD(mu_D, mu') = eta`; `lambda` only matters for the
    /// boundary shift.
    pub fn apply(self, d: f64, eta: f64, lambda: f64) -> Result<AdviceDistribution> {
        let mu_d = AdviceDistribution::adversarial_continuous(d)?;
        match self {
            Perturbation::BoundaryShift => perturb_boundary(&mu_d, eta, lambda),
            Perturbation::RigidShiftUp => rigid_shift(&mu_d, eta),
            Perturbation::RigidShiftDown => rigid_shift(&mu_d, -eta),
            Perturbation::MassSplit => mass_split(&mu_d, 2.0 * eta / d, d / 2.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn emd_examples() {
        let u = AdviceDistribution::uniform(1.0, 3.0).unwrap();
        assert_eq!(emd(&u, &u).value(), 0.0);

        let a = AdviceDistribution::point(2.5).unwrap();
        let b = AdviceDistribution::point(7.0).unwrap();
        assert_relative_eq!(emd(&a, &b).value(), 4.5, max_relative = 1e-15);

        let u01 = AdviceDistribution::uniform(0.0, 1.0).unwrap();
        let u12 = AdviceDistribution::uniform(1.0, 2.0).unwrap();
        assert_relative_eq!(emd(&u01, &u12).value(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn emd_with_a_crossing() {
        // point at 1.5 vs uniform [1, 2]: integral of |F - G| is 2 * (1/2 * 0.5 * 0.5)
        let p = AdviceDistribution::point(1.5).unwrap();
        let u = AdviceDistribution::uniform(1.0, 2.0).unwrap();
        assert_relative_eq!(emd(&p, &u).value(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn emd_between_normals_is_the_mean_gap() {
        let a = AdviceDistribution::truncated_normal(500.0, 25.0).unwrap();
        let b = AdviceDistribution::truncated_normal(530.0, 25.0).unwrap();
        assert_relative_eq!(emd(&a, &b).value(), 30.0, max_relative = 1e-10);
    }

    #[test]
    fn relocation_cost_series_matches_closed_form() {
        let (d, s) = (1.0, 1.3);
        let dest = s * (1.0 - BOUNDARY_OFFSET);
        for delta in [1e-4, 1.2e-3, 5e-3] {
            let direct =
                2.0 * d * ((s + delta) / s).ln() + 2.0 * d * dest * (1.0 / (s + delta) - 1.0 / s);
            assert_relative_eq!(
                relocation_cost(d, s, dest, delta),
                direct,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn boundary_perturbation_hits_requested_distance() {
        let mu = AdviceDistribution::adversarial_continuous(1.0).unwrap();
        let eta = 1.0 / 1024.0;
        let p = perturb_boundary(&mu, eta, 0.0).unwrap();
        assert_relative_eq!(emd(&mu, &p).value(), eta, max_relative = 1e-9);
        let x = GeometricSchedule::doubling();
        assert!(performance_under(&x, &p).unwrap() > FOUR_LN_2);
    }

    #[test]
    fn boundary_perturbation_near_the_top_of_the_octave() {
        // completion time just below 2D leaves too little mass above it
        let d = 1.0;
        let lambda = 1.0 - (1.999f64).log2();
        let mu = AdviceDistribution::adversarial_continuous(d).unwrap();
        let eta = d / 1024.0;
        let p = perturb_boundary(&mu, eta, lambda).unwrap();
        assert_relative_eq!(emd(&mu, &p).value(), eta, max_relative = 1e-9);
        let x = GeometricSchedule::new(lambda).unwrap();
        assert!(performance_under(&x, &p).unwrap() > FOUR_LN_2);
    }

    #[test]
    fn boundary_perturbation_vanishes_with_eta() {
        let mu = AdviceDistribution::adversarial_continuous(2.0).unwrap();
        let p = perturb_boundary(&mu, 1e-12, 0.4).unwrap();
        assert!(emd(&mu, &p).value() < 1e-11);
    }

    #[test]
    fn boundary_perturbation_rejects_bad_input() {
        let mu = AdviceDistribution::adversarial_continuous(1.0).unwrap();
        assert!(perturb_boundary(&mu, 1.0 / 512.0, 0.0).is_err());
        assert!(perturb_boundary(&mu, 0.0, 0.0).is_err());
        assert!(perturb_boundary(&mu, 1e-4, 1.0).is_err());
        let u = AdviceDistribution::uniform(1.0, 2.0).unwrap();
        assert!(perturb_boundary(&u, 1e-4, 0.0).is_err());
    }

    #[test]
    fn smoothness_bound_examples() {
        assert_relative_eq!(smoothness_bound(0.0, 1.0).unwrap(), FOUR_LN_2);
        let expected = (FOUR_LN_2 + 2.0 / 2048.0) / (1.0 - 16.0 * (2.0f64 / 2048.0).sqrt());
        assert_relative_eq!(smoothness_bound(1.0 / 2048.0, 1.0).unwrap(), expected);
        assert_relative_eq!(expected, 5.5471, epsilon = 1e-4);
        assert!(smoothness_bound(1.0 / 512.0, 1.0).is_err());
        assert!(smoothness_bound(10.0 / 512.0, 10.0).is_err());
    }

    #[test]
    fn smoothness_check_examples() {
        let d = 3.0;
        let mu_d = AdviceDistribution::adversarial_continuous(d).unwrap();
        let c = smoothness_check(0.2, d, &mu_d).unwrap();
        assert_relative_eq!(c.ratio, FOUR_LN_2, max_relative = 1e-13);
        assert!(c.eta < 1e-15 && c.ok);

        let c =
            smoothness_check(0.2, d, &perturb_boundary(&mu_d, d / 4096.0, 0.2).unwrap()).unwrap();
        assert!(c.ok, "{c:?}");
        let c = smoothness_check(0.2, d, &rigid_shift(&mu_d, d / 1024.0).unwrap()).unwrap();
        assert!(c.ok, "{c:?}");
        assert_relative_eq!(c.eta, d / 1024.0, max_relative = 1e-9);
    }

    #[test]
    fn smoothness_check_rejects_distant_distributions() {
        let far = AdviceDistribution::uniform(10.0, 20.0).unwrap();
        assert!(smoothness_check(0.0, 1.0, &far).is_err());
    }

    #[test]
    fn perturbations_have_requested_distance() {
        let d = 5.0;
        let mu_d = AdviceDistribution::adversarial_continuous(d).unwrap();
        for p in Perturbation::ALL {
            let eta = d / 4096.0;
            let moved = p.apply(d, eta, 0.7).unwrap();
            assert_relative_eq!(emd(&mu_d, &moved).value(), eta, max_relative = 1e-9);
            assert_eq!(Perturbation::from_code(p.code()), Some(p));
        }
    }
}
