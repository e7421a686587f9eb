//! Text form of advice distributions for the CLI:
//!
//! - `points:T@W,T@W,...` (weights normalized; `@W` may be omitted for equal weights)
//! - `uniform:LO,HI`
//! - `normal:M,SIGMA` (normal truncated to `[0, inf)`)
//! - `adversarial:D`
//! - `adversarial-discrete:L0,L1,...` (phases, offset 1e-9)

use contract_sched::advice::{adversarial_discrete, DEFAULT_ADVERSARIAL_EPS};
use contract_sched::distribution::{AdviceDistribution, PointSet};

use crate::error::{HarnessError, Result};

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| HarnessError::BadArgument(format!("`{p}` is not a number")))
        })
        .collect()
}

fn exactly<const N: usize>(kind: &str, s: &str) -> Result<[f64; N]> {
    numbers(s)?
        .try_into()
        .map_err(|_| HarnessError::BadArgument(format!("`{kind}` takes {N} value(s)")))
}

pub fn parse_distribution(spec: &str) -> Result<AdviceDistribution> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| HarnessError::BadArgument(format!("expected KIND:ARGS, got `{spec}`")))?;
    let dist = match kind.trim() {
        "points" => {
            let pts = args
                .split(',')
                .map(|p| match p.split_once('@') {
                    Some((t, w)) => Ok((exactly::<1>("points", t)?[0], exactly::<1>("points", w)?[0])),
                    None => Ok((exactly::<1>("points", p)?[0], 1.0)),
                })
                .collect::<Result<Vec<_>>>()?;
            AdviceDistribution::PointSet(PointSet::from_weights(pts)?)
        }
        "uniform" => {
            let [lo, hi] = exactly("uniform", args)?;
            AdviceDistribution::uniform(lo, hi)?
        }
        "normal" => {
            let [m, s] = exactly("normal", args)?;
            AdviceDistribution::truncated_normal(m, s)?
        }
        "adversarial" => {
            let [d] = exactly("adversarial", args)?;
            AdviceDistribution::adversarial_continuous(d)?
        }
        "adversarial-discrete" => adversarial_discrete(&numbers(args)?, DEFAULT_ADVERSARIAL_EPS)?,
        other => {
            return Err(HarnessError::BadArgument(format!(
                "unknown distribution `{other}`; expected points, uniform, normal, adversarial or adversarial-discrete"
            )))
        }
    };
    Ok(dist)
}
