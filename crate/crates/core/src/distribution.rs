//! Interruption-time distributions used as advice.
//!
//! Every distribution lives on `(0, inf)` and is described by a piecewise
//! analytic CDF plus a finite set of atoms. All interval queries use the
//! half-open convention `[a, b)`: an atom at `a` is counted, an atom at `b` is not.

use rand::Rng;

use crate::error::{Error, Result};
use crate::normal;

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Quantile window used to cut unbounded supports for profit sums.
pub const TAIL_QUANTILE: f64 = 1e-12;

/// Standard deviations past the mean beyond which a normal tail is treated as
/// empty when integrating CDFs.
const NORMAL_TAIL_SIGMAS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    /// `(time, mass)` pairs, sorted by time, with distinct times.
    points: Vec<(f64, f64)>,
}

impl PointSet {
    /// Masses must lie in `(0, 1]` and sum to 1. Repeated times are merged.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("point set is empty".into()));
        }
        for &(t, w) in &points {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidTime(t));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "point mass {w} is outside (0, 1]"
                )));
            }
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "point masses sum to {total}, not 1"
            )));
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (t, w) in points {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += w,
                _ => merged.push((t, w)),
            }
        }
        Ok(Self { points: merged })
    }

    /// Normalizes arbitrary positive weights.
    pub fn from_weights(points: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        if !(total > 0.0 && total.is_finite()) || points.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::InvalidDistribution(
                "point weights must be positive".into(),
            ));
        }
        Self::new(points.into_iter().map(|(t, w)| (t, w / total)).collect())
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![(t, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.0 >= a && p.0 < b)
            .map(|p| p.1)
            .sum()
    }

    fn cdf(&self, x: f64, inclusive: bool) -> f64 {
        self.points
            .iter()
            .take_while(|p| if inclusive { p.0 <= x } else { p.0 < x })
            .map(|p| p.1)
            .sum::<f64>()
            .min(1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for &(t, w) in &self.points {
            acc += w;
            if acc >= p {
                return t;
            }
        }
        self.points[self.points.len() - 1].0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    /// Uniform on `[lo, hi]`. `lo = 0` is allowed since the point 0 carries no mass.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    fn clamp(&self, a: f64, b: f64) -> (f64, f64) {
        (a.max(self.lo), b.min(self.hi))
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = self.clamp(a, b);
        if b > a {
            (b - a) / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn partial_mean(&self, a: f64, b: f64) -> f64 {
        let (a, b) = self.clamp(a, b);
        if b > a {
            0.5 * (b - a) * (b + a) / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// A normal distribution with location `m` and scale `sigma`, conditioned on
/// being positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    m: f64,
    sigma: f64,
    /// Standardized truncation point `-m / sigma`.
    alpha: f64,
    /// `P(N(m, sigma) > 0)`.
    norm: f64,
}

impl TruncatedNormal {
    pub fn new(m: f64, sigma: f64) -> Result<Self> {
        if !(m.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal needs finite m and sigma > 0, got m={m}, sigma={sigma}"
            )));
        }
        let alpha = -m / sigma;
        let norm = normal::sf(alpha);
        if norm < 1e-300 {
            return Err(Error::InvalidDistribution(format!(
                "truncated normal with m={m}, sigma={sigma} has no mass on (0, inf)"
            )));
        }
        Ok(Self {
            m,
            sigma,
            alpha,
            norm,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn standardize(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.alpha
        } else {
            (x - self.m) / self.sigma
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        normal::mass(self.standardize(a), self.standardize(b)) / self.norm
    }

    fn partial_mean(&self, a: f64, b: f64) -> f64 {
        let (za, zb) = (self.standardize(a), self.standardize(b));
        if zb <= za {
            return 0.0;
        }
        let pa = if za.is_finite() { normal::pdf(za) } else { 0.0 };
        let pb = if zb.is_finite() { normal::pdf(zb) } else { 0.0 };
        (self.m * normal::mass(za, zb) + self.sigma * (pa - pb)) / self.norm
    }

    fn quantile(&self, p: f64) -> f64 {
        // upper-tail form unless both p and the truncation point are low
        let z = if p > 0.5 || self.alpha > 0.0 {
            normal::inverse_sf((1.0 - p) * self.norm)
        } else {
            normal::quantile(normal::cdf(self.alpha) + p * self.norm)
        };
        (self.m + self.sigma * z).max(0.0)
    }
}

/// Density `2D / x^2` on `[D, 2D]`: every 4-robust schedule has consistency
/// exactly `4 ln 2` against it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialContinuous {
    d: f64,
}

impl AdversarialContinuous {
    pub fn new(d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "D must be positive, got {d}"
            )));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    fn clamp(&self, a: f64, b: f64) -> (f64, f64) {
        (a.max(self.d), b.min(2.0 * self.d))
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = self.clamp(a, b);
        if b > a {
            2.0 * self.d * (1.0 / a - 1.0 / b)
        } else {
            0.0
        }
    }

    fn partial_mean(&self, a: f64, b: f64) -> f64 {
        let (a, b) = self.clamp(a, b);
        if b > a {
            2.0 * self.d * (b / a).ln()
        } else {
            0.0
        }
    }

    /// `F(x) = 2 - 2D/x` on `[D, 2D]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.d {
            0.0
        } else if x >= 2.0 * self.d {
            1.0
        } else {
            2.0 - 2.0 * self.d / x
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        2.0 * self.d / (2.0 - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    PointSet,
    Uniform,
    TruncatedNormal,
    AdversarialContinuous,
    Shifted,
    Restricted,
    Mixture,
}

/// A probability distribution over interruption times.
///
/// The base kinds cover the advice families used in experiments; `Shifted`,
/// `Restricted` and `Mixture` build the perturbed distributions used to probe
/// smoothness under prediction error.
#[derive(Debug, Clone, PartialEq)]
pub enum AdviceDistribution {
    PointSet(PointSet),
    Uniform(Uniform),
    TruncatedNormal(TruncatedNormal),
    AdversarialContinuous(AdversarialContinuous),
    /// `base + offset`.
    Shifted {
        base: Box<AdviceDistribution>,
        offset: f64,
    },
    /// `base` conditioned on `[lo, hi)`.
    Restricted {
        base: Box<AdviceDistribution>,
        lo: f64,
        hi: f64,
        mass: f64,
    },
    /// Convex combination; weights sum to 1.
    Mixture(Vec<(f64, AdviceDistribution)>),
}

#[derive(Clone, Copy)]
enum Part {
    All,
    Continuous,
}

impl AdviceDistribution {
    pub fn point_set(points: Vec<(f64, f64)>) -> Result<Self> {
        PointSet::new(points).map(Self::PointSet)
    }

    pub fn point(t: f64) -> Result<Self> {
        PointSet::single(t).map(Self::PointSet)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Uniform::new(lo, hi).map(Self::Uniform)
    }

    pub fn truncated_normal(m: f64, sigma: f64) -> Result<Self> {
        TruncatedNormal::new(m, sigma).map(Self::TruncatedNormal)
    }

    pub fn adversarial_continuous(d: f64) -> Result<Self> {
        AdversarialContinuous::new(d).map(Self::AdversarialContinuous)
    }

    /// The distribution of `z + offset`; the result must stay on `(0, inf)`.
    pub fn shifted(self, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "shift {offset} is not finite"
            )));
        }
        if self.support().0 + offset < 0.0 || self.atoms().iter().any(|a| a.0 + offset <= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "shift by {offset} moves mass to non-positive times"
            )));
        }
        Ok(match self {
            Self::PointSet(ps) => Self::PointSet(PointSet {
                points: ps.points.iter().map(|&(t, w)| (t + offset, w)).collect(),
            }),
            Self::Shifted {
                base,
                offset: inner,
            } => Self::Shifted {
                base,
                offset: inner + offset,
            },
            other => Self::Shifted {
                base: Box::new(other),
                offset,
            },
        })
    }

    /// The distribution conditioned on `[lo, hi)`.
    pub fn restricted(self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "restriction needs lo < hi, got [{lo}, {hi})"
            )));
        }
        let mass = self.interval_mass(lo, hi);
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "no mass on [{lo}, {hi})"
            )));
        }
        Ok(Self::Restricted {
            base: Box::new(self),
            lo,
            hi,
            mass,
        })
    }

    pub fn mixture(parts: Vec<(f64, AdviceDistribution)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidDistribution("mixture is empty".into()));
        }
        if parts.iter().any(|p| !(p.0 > 0.0)) {
            return Err(Error::InvalidDistribution(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self::Mixture(parts))
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            Self::PointSet(_) => DistributionKind::PointSet,
            Self::Uniform(_) => DistributionKind::Uniform,
            Self::TruncatedNormal(_) => DistributionKind::TruncatedNormal,
            Self::AdversarialContinuous(_) => DistributionKind::AdversarialContinuous,
            Self::Shifted { .. } => DistributionKind::Shifted,
            Self::Restricted { .. } => DistributionKind::Restricted,
            Self::Mixture(_) => DistributionKind::Mixture,
        }
    }

    /// `E[z]`.
    pub fn mean(&self) -> f64 {
        self.partial_mean(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `E[z ; a <= z < b]`.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        match self {
            Self::PointSet(ps) => ps
                .points
                .iter()
                .filter(|p| p.0 >= a && p.0 < b)
                .map(|p| p.0 * p.1)
                .sum(),
            Self::Uniform(u) => u.partial_mean(a, b),
            Self::TruncatedNormal(n) => n.partial_mean(a, b),
            Self::AdversarialContinuous(c) => c.partial_mean(a, b),
            Self::Shifted { base, offset } => {
                base.partial_mean(a - offset, b - offset)
                    + offset * base.interval_mass(a - offset, b - offset)
            }
            Self::Restricted { base, lo, hi, mass } => {
                base.partial_mean(a.max(*lo), b.min(*hi)) / mass
            }
            Self::Mixture(parts) => parts.iter().map(|(w, d)| w * d.partial_mean(a, b)).sum(),
        }
    }

    /// `P(a <= z < b)`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        self.mass(a, b, Part::All)
    }

    /// Mass of the absolutely continuous part on `[a, b)`.
    pub fn continuous_mass(&self, a: f64, b: f64) -> f64 {
        self.mass(a, b, Part::Continuous)
    }

    fn mass(&self, a: f64, b: f64, part: Part) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        match self {
            Self::PointSet(ps) => match part {
                Part::All => ps.mass(a, b),
                Part::Continuous => 0.0,
            },
            Self::Uniform(u) => u.mass(a, b),
            Self::TruncatedNormal(n) => n.mass(a, b),
            Self::AdversarialContinuous(c) => c.mass(a, b),
            Self::Shifted { base, offset } => base.mass(a - offset, b - offset, part),
            Self::Restricted { base, lo, hi, mass } => {
                base.mass(a.max(*lo), b.min(*hi), part) / mass
            }
            Self::Mixture(parts) => parts.iter().map(|(w, d)| w * d.mass(a, b, part)).sum(),
        }
    }

    /// Point masses `(time, mass)`, sorted by time.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms = match self {
            Self::PointSet(ps) => ps.points.clone(),
            Self::Uniform(_) | Self::TruncatedNormal(_) | Self::AdversarialContinuous(_) => {
                Vec::new()
            }
            Self::Shifted { base, offset } => base
                .atoms()
                .into_iter()
                .map(|(t, w)| (t + offset, w))
                .collect(),
            Self::Restricted { base, lo, hi, mass } => base
                .atoms()
                .into_iter()
                .filter(|a| a.0 >= *lo && a.0 < *hi)
                .map(|(t, w)| (t, w / mass))
                .collect(),
            Self::Mixture(parts) => parts
                .iter()
                .flat_map(|(w, d)| d.atoms().into_iter().map(move |(t, m)| (t, w * m)))
                .collect(),
        };
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    }

    /// `P(z <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_impl(x, true)
    }

    /// `P(z < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf_impl(x, false)
    }

    fn cdf_impl(&self, x: f64, inclusive: bool) -> f64 {
        match self {
            Self::PointSet(ps) => ps.cdf(x, inclusive),
            Self::Uniform(u) => u.cdf(x),
            Self::TruncatedNormal(n) => n.mass(0.0, x),
            Self::AdversarialContinuous(c) => c.cdf(x),
            Self::Shifted { base, offset } => base.cdf_impl(x - offset, inclusive),
            Self::Restricted { base, lo, hi, mass } => {
                if x < *lo || (!inclusive && x == *lo) {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    let upto = base.cdf_impl(x, inclusive) - base.cdf_left(*lo);
                    (upto / mass).clamp(0.0, 1.0)
                }
            }
            Self::Mixture(parts) => parts
                .iter()
                .map(|(w, d)| w * d.cdf_impl(x, inclusive))
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// Closed hull `(lo, hi)` of the support; `hi` may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::PointSet(ps) => (ps.points[0].0, ps.points[ps.points.len() - 1].0),
            Self::Uniform(u) => (u.lo, u.hi),
            Self::TruncatedNormal(_) => (0.0, f64::INFINITY),
            Self::AdversarialContinuous(c) => (c.d, 2.0 * c.d),
            Self::Shifted { base, offset } => {
                let (lo, hi) = base.support();
                (lo + offset, hi + offset)
            }
            Self::Restricted { base, lo, hi, .. } => {
                let (blo, bhi) = base.support();
                (blo.max(*lo), bhi.min(*hi))
            }
            Self::Mixture(parts) => hull(parts.iter().map(|p| p.1.support())),
        }
    }

    /// Support hull with unbounded tails cut at the `TAIL_QUANTILE` window.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            Self::TruncatedNormal(n) => {
                (n.quantile(TAIL_QUANTILE), n.quantile(1.0 - TAIL_QUANTILE))
            }
            Self::Shifted { base, offset } => {
                let (lo, hi) = base.effective_support();
                (lo + offset, hi + offset)
            }
            Self::Restricted { base, lo, hi, .. } => {
                let (blo, bhi) = base.effective_support();
                (blo.max(*lo), bhi.min(*hi))
            }
            Self::Mixture(parts) => hull(parts.iter().map(|p| p.1.effective_support())),
            _ => self.support(),
        }
    }

    /// A finite point beyond which the CDF equals 1 in double precision.
    pub fn integration_limit(&self) -> f64 {
        match self {
            Self::TruncatedNormal(n) => (n.m + NORMAL_TAIL_SIGMAS * n.sigma).max(0.0),
            Self::Shifted { base, offset } => base.integration_limit() + offset,
            Self::Restricted { base, hi, .. } => base.integration_limit().min(*hi),
            Self::Mixture(parts) => parts
                .iter()
                .map(|p| p.1.integration_limit())
                .fold(f64::NEG_INFINITY, f64::max),
            _ => self.support().1,
        }
    }

    /// Points where the CDF may fail to be smooth: atoms and support endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points = match self {
            Self::PointSet(ps) => ps.points.iter().map(|p| p.0).collect(),
            Self::Uniform(u) => vec![u.lo, u.hi],
            Self::TruncatedNormal(_) => vec![0.0],
            Self::AdversarialContinuous(c) => vec![c.d, 2.0 * c.d],
            Self::Shifted { base, offset } => {
                base.breakpoints().into_iter().map(|x| x + offset).collect()
            }
            Self::Restricted { base, lo, hi, .. } => {
                let mut v: Vec<f64> = base
                    .breakpoints()
                    .into_iter()
                    .filter(|x| x > lo && x < hi)
                    .collect();
                v.extend([*lo, *hi].into_iter().filter(|x| x.is_finite()));
                v
            }
            Self::Mixture(parts) => parts.iter().flat_map(|p| p.1.breakpoints()).collect(),
        };
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// Smallest `x` with `P(z <= x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Self::PointSet(ps) => ps.quantile(p),
            Self::Uniform(u) => u.lo + p * (u.hi - u.lo),
            Self::TruncatedNormal(n) => n.quantile(p),
            Self::AdversarialContinuous(c) => c.quantile(p),
            Self::Shifted { base, offset } => base.quantile(p) + offset,
            Self::Restricted { .. } | Self::Mixture(_) => self.bisect_quantile(p),
        }
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.effective_support();
        if self.cdf(lo) >= p {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Inverse-CDF sample; mixtures first pick a component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Mixture(parts) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, d) in parts {
                    acc += w;
                    if u < acc {
                        return d.sample(rng);
                    }
                }
                parts[parts.len() - 1].1.sample(rng)
            }
            Self::Shifted { base, offset } => base.sample(rng) + offset,
            _ => self.quantile(rng.random()),
        }
    }
}

fn hull(items: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    items.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
        (lo.min(a), hi.max(b))
    })
}
