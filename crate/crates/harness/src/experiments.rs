//! The registered experiments. Each expands its parameters into a sweep, runs
//! the points on a bounded worker pool and returns rows in sweep order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use contract_sched::advice::{performance_under, sel_n};
use contract_sched::distribution::AdviceDistribution;
use contract_sched::emd::{smoothness_check, Perturbation};
use contract_sched::multi::{average_consistency, bound_multi, mult_exact, PredictionSet};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{nearest, HarnessError, Result};
use crate::params::ParamValue;
use crate::seed::trial_rng;
use crate::spec::ExperimentSpec;
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy)]
pub struct ParamSchema {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn param(name: &'static str, default: &'static str, help: &'static str) -> ParamSchema {
    ParamSchema {
        name,
        default,
        help,
    }
}

type Rows = Result<Vec<Vec<Cell>>>;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSchema],
    pub columns: &'static [&'static str],
    /// Trials per sweep point, for experiments that draw random instances.
    pub default_trials: Option<usize>,
    run: fn(&Context) -> Rows,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Resolved parameter values handed to an experiment.
pub struct Context {
    name: &'static str,
    values: BTreeMap<&'static str, Vec<f64>>,
    seed: u64,
    trials: usize,
}

impl Context {
    fn values(&self, name: &str) -> &[f64] {
        &self.values[name]
    }

    /// Values that must be integers no smaller than `min`.
    fn ints(&self, name: &str, min: i64) -> Result<Vec<i64>> {
        self.values(name)
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v >= min as f64 && v <= i32::MAX as f64 {
                    Ok(v as i64)
                } else {
                    Err(HarnessError::BadArgument(format!(
                        "{name} must be an integer >= {min}, got {v}"
                    )))
                }
            })
            .collect()
    }

    fn single(&self, name: &str) -> Result<f64> {
        match self.values(name) {
            [v] => Ok(*v),
            _ => Err(HarnessError::BadArgument(format!(
                "{name} takes a single value"
            ))),
        }
    }

    fn text(&self) -> Cell {
        Cell::Text(self.name)
    }
}

const NORMAL_COLUMNS: &[&str] = &["experiment", "m", "sigma", "n", "lambda", "consistency"];
const UNIFORM_COLUMNS: &[&str] = &["experiment", "t", "width", "n", "lambda", "consistency"];

static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "fig_normal",
        summary: "best of n portfolio schedules under truncated normal advice, sigma = sigma_frac * m",
        params: &[
            param("m", "1:1024", "mean of the advice"),
            param("n", "1:4", "portfolio size"),
            param("sigma_frac", "0.05", "standard deviation as a fraction of m"),
        ],
        columns: NORMAL_COLUMNS,
        default_trials: None,
        run: normal_relative,
    },
    Experiment {
        name: "fig_uniform",
        summary: "best of n portfolio schedules under uniform advice on [(1-width) t, (1+width) t]",
        params: &[
            param("t", "1:1024", "centre of the advice interval"),
            param("n", "1:4", "portfolio size"),
            param("width", "0.05", "relative half-width of the interval"),
        ],
        columns: UNIFORM_COLUMNS,
        default_trials: None,
        run: uniform_sweep,
    },
    Experiment {
        name: "fig_mult",
        summary: "optimal consistency for k predictions drawn uniformly from [tau_lo, tau_hi]",
        params: &[
            param("k", "1:10", "number of predictions"),
            param("tau_lo", "1", "smallest prediction"),
            param("tau_hi", "1024", "largest prediction"),
        ],
        columns: &["experiment", "k", "worst_consistency_mean", "avg_consistency_mean", "bound"],
        default_trials: Some(1000),
        run: mult_sweep,
    },
    Experiment {
        name: "app_horizon",
        summary: "fig_normal over the longer horizon [1, 20000]",
        params: &[
            param("m", "1:20000", "mean of the advice"),
            param("n", "1:4", "portfolio size"),
            param("sigma_frac", "0.05", "standard deviation as a fraction of m"),
        ],
        columns: NORMAL_COLUMNS,
        default_trials: None,
        run: normal_relative,
    },
    Experiment {
        name: "app_horizon_uniform",
        summary: "fig_uniform over the longer horizon [1, 20000]",
        params: &[
            param("t", "1:20000", "centre of the advice interval"),
            param("n", "1:4", "portfolio size"),
            param("width", "0.05", "relative half-width of the interval"),
        ],
        columns: UNIFORM_COLUMNS,
        default_trials: None,
        run: uniform_sweep,
    },
    Experiment {
        name: "app_fixed_sigma",
        summary: "truncated normal advice with a fixed standard deviation",
        params: &[
            param("m", "1:1024", "mean of the advice"),
            param("n", "1:4", "portfolio size"),
            param("sigma", "10", "standard deviation"),
        ],
        columns: NORMAL_COLUMNS,
        default_trials: None,
        run: normal_absolute,
    },
    Experiment {
        name: "app_sigma_scale",
        summary: "fig_normal with narrower and wider relative standard deviations",
        params: &[
            param("m", "1:1024", "mean of the advice"),
            param("n", "1:4", "portfolio size"),
            param("sigma_frac", "0.01,0.2", "standard deviation as a fraction of m"),
        ],
        columns: NORMAL_COLUMNS,
        default_trials: None,
        run: normal_relative,
    },
    Experiment {
        name: "app_error",
        summary: "schedule chosen for N(m, sigma) advice, evaluated when times follow N(m_actual, sigma)",
        params: &[
            param("m", "500,700", "mean of the advice"),
            param("m_actual", "1:1500", "mean of the actual interruption time"),
            param("sigma", "25", "standard deviation of both"),
            param("n", "16", "portfolio size"),
        ],
        columns: &["experiment", "m", "m_actual", "sigma", "n", "performance", "error_free"],
        default_trials: None,
        run: error_sweep,
    },
    Experiment {
        name: "smoothness",
        summary: "ratio of X(lambda) under perturbations of the adversarial advice mu_D vs the smoothness bound",
        params: &[
            param("d", "1,1000", "scale D of mu_D"),
            param("lambda", "0:0.75:4", "phase of the schedule"),
            param("eta_frac", "0.00001,0.000244140625,0.0009765625", "EMD of the perturbation as a fraction of D"),
            param("perturbation", "0:3", "0 boundary shift, 1 rigid shift up, 2 rigid shift down, 3 mass split"),
        ],
        columns: &["experiment", "d", "lambda", "eta_frac", "perturbation", "eta", "ratio", "bound", "ok"],
        default_trials: None,
        run: smoothness_sweep,
    },
];

pub fn registry() -> &'static [Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| HarnessError::UnknownExperiment {
            name: name.to_string(),
            suggestion: nearest(name, REGISTRY.iter().map(|e| e.name)),
        })
}

/// Registry listing with parameter defaults and output columns.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in REGISTRY {
        writeln!(out, "{}\n    {}", e.name, e.summary).unwrap();
        for p in e.params {
            writeln!(
                out,
                "    {:<14} default {:<40} {}",
                p.name, p.default, p.help
            )
            .unwrap();
        }
        if let Some(t) = e.default_trials {
            writeln!(
                out,
                "    {:<14} default {:<40} random instances per sweep point",
                "trials", t
            )
            .unwrap();
        }
        writeln!(out, "    columns: {}", e.columns.join(",")).unwrap();
    }
    out
}

/// Runs `spec` on a pool of `spec.worker_threads()` workers.
pub fn run(spec: &ExperimentSpec) -> Result<Table> {
    let exp = find(&spec.name)?;
    for key in spec.params.keys() {
        if !exp.params.iter().any(|p| p.name == key) {
            let hint = nearest(key, exp.params.iter().map(|p| p.name))
                .map(|s| format!("; did you mean `{s}`?"))
                .unwrap_or_default();
            return Err(HarnessError::BadArgument(format!(
                "{} has no parameter `{key}`{hint}",
                exp.name
            )));
        }
    }
    let mut values = BTreeMap::new();
    for p in exp.params {
        let v = match spec.params.get(p.name) {
            Some(v) => v.clone(),
            None => p
                .default
                .parse::<ParamValue>()
                .expect("registry defaults parse"),
        };
        values.insert(p.name, v.values());
    }
    let trials = match (exp.default_trials, spec.trials) {
        (_, Some(0)) => return Err(HarnessError::BadArgument("trials must be positive".into())),
        (Some(d), t) => t.unwrap_or(d),
        (None, _) => 1,
    };
    let ctx = Context {
        name: exp.name,
        values,
        seed: spec.seed,
        trials,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.worker_threads()?)
        .build()
        .map_err(|e| HarnessError::BadArgument(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| (exp.run)(&ctx))?;
    Ok(Table {
        columns: exp.columns.to_vec(),
        rows,
    })
}

fn sel_rows(
    ctx: &Context,
    points: Vec<(f64, f64, i64)>,
    dist: impl Fn(f64, f64) -> contract_sched::Result<AdviceDistribution> + Sync,
) -> Rows {
    points
        .into_par_iter()
        .map(|(x, spread, n)| {
            let r = sel_n(&dist(x, spread)?, n as usize)?;
            Ok(vec![
                ctx.text(),
                Cell::Real(x),
                Cell::Real(spread),
                Cell::Int(n),
                Cell::Real(r.lambda),
                Cell::Real(r.consistency),
            ])
        })
        .collect()
}

/// Sweep order: spread outermost, then `n`, then the location.
fn sweep_points(
    outer: &[f64],
    ns: &[i64],
    inner: &[f64],
    spread: impl Fn(f64, f64) -> f64,
) -> Vec<(f64, f64, i64)> {
    let mut points = Vec::with_capacity(outer.len() * ns.len() * inner.len());
    for &s in outer {
        for &n in ns {
            for &x in inner {
                points.push((x, spread(s, x), n));
            }
        }
    }
    points
}

fn normal_relative(ctx: &Context) -> Rows {
    let points = sweep_points(
        ctx.values("sigma_frac"),
        &ctx.ints("n", 1)?,
        ctx.values("m"),
        |f, m| f * m,
    );
    sel_rows(ctx, points, AdviceDistribution::truncated_normal)
}

fn normal_absolute(ctx: &Context) -> Rows {
    let points = sweep_points(
        ctx.values("sigma"),
        &ctx.ints("n", 1)?,
        ctx.values("m"),
        |s, _| s,
    );
    sel_rows(ctx, points, AdviceDistribution::truncated_normal)
}

fn uniform_sweep(ctx: &Context) -> Rows {
    let points = sweep_points(
        ctx.values("width"),
        &ctx.ints("n", 1)?,
        ctx.values("t"),
        |w, _| w,
    );
    sel_rows(ctx, points, |t, w| {
        AdviceDistribution::uniform((1.0 - w) * t, (1.0 + w) * t)
    })
}

fn mult_sweep(ctx: &Context) -> Rows {
    let ks = ctx.ints("k", 1)?;
    let (lo, hi) = (ctx.single("tau_lo")?, ctx.single("tau_hi")?);
    if !(lo > 0.0 && hi > lo) {
        return Err(HarnessError::BadArgument(format!(
            "need 0 < tau_lo < tau_hi, got {lo} and {hi}"
        )));
    }
    let trials = u32::try_from(ctx.trials)
        .map_err(|_| HarnessError::BadArgument(format!("too many trials: {}", ctx.trials)))?;
    let tasks: Vec<(i64, u32)> = ks
        .iter()
        .flat_map(|&k| (0..trials).map(move |t| (k, t)))
        .collect();
    let results: Vec<(f64, f64)> = tasks
        .into_par_iter()
        .map(|(k, t)| {
            let mut rng = trial_rng(ctx.seed, k as u32, t);
            let taus: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
            let p = PredictionSet::new(taus)?;
            let best = mult_exact(&p)?;
            Ok((best.consistency, average_consistency(&best.schedule, &p)))
        })
        .collect::<Result<_>>()?;

    let per_k = trials as usize;
    ks.iter()
        .zip(results.chunks(per_k))
        .map(|(&k, chunk)| {
            let worst = chunk.iter().map(|r| r.0).sum::<f64>() / per_k as f64;
            let avg = chunk.iter().map(|r| r.1).sum::<f64>() / per_k as f64;
            Ok(vec![
                ctx.text(),
                Cell::Int(k),
                Cell::Real(worst),
                Cell::Real(avg),
                Cell::Real(bound_multi(k as usize)?),
            ])
        })
        .collect()
}

fn error_sweep(ctx: &Context) -> Rows {
    let sigma = ctx.single("sigma")?;
    let n = ctx.ints("n", 1)?;
    let [n] = n[..] else {
        return Err(HarnessError::BadArgument("n takes a single value".into()));
    };
    let chosen = ctx
        .values("m")
        .par_iter()
        .map(|&m| {
            Ok((
                m,
                sel_n(&AdviceDistribution::truncated_normal(m, sigma)?, n as usize)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<_> = chosen
        .iter()
        .flat_map(|c| ctx.values("m_actual").iter().map(move |&a| (c, a)))
        .collect();
    tasks
        .into_par_iter()
        .map(|((m, report), actual)| {
            let performance = performance_under(
                &report.schedule(),
                &AdviceDistribution::truncated_normal(actual, sigma)?,
            )?;
            Ok(vec![
                ctx.text(),
                Cell::Real(*m),
                Cell::Real(actual),
                Cell::Real(sigma),
                Cell::Int(n),
                Cell::Real(performance),
                Cell::Real(report.consistency),
            ])
        })
        .collect()
}

fn smoothness_sweep(ctx: &Context) -> Rows {
    let perturbations = ctx
        .ints("perturbation", 0)?
        .into_iter()
        .map(|c| {
            u8::try_from(c)
                .ok()
                .and_then(Perturbation::from_code)
                .ok_or_else(|| {
                    HarnessError::BadArgument(format!("perturbation code {c} is not in 0..=3"))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tasks = Vec::new();
    for &d in ctx.values("d") {
        for &lambda in ctx.values("lambda") {
            for &frac in ctx.values("eta_frac") {
                for &p in &perturbations {
                    tasks.push((d, lambda, frac, p));
                }
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(d, lambda, frac, p)| {
            let moved = p.apply(d, frac * d, lambda)?;
            let check = smoothness_check(lambda, d, &moved)?;
            Ok(vec![
                ctx.text(),
                Cell::Real(d),
                Cell::Real(lambda),
                Cell::Real(frac),
                Cell::Int(p.code().into()),
                Cell::Real(check.eta),
                Cell::Real(check.ratio),
                Cell::Real(check.bound),
                Cell::Int(check.ok.into()),
            ])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_defaults_parse() {
        assert!(registry().len() >= 8);
        for e in registry() {
            for p in e.params {
                assert!(
                    p.default.parse::<ParamValue>().is_ok(),
                    "{}.{}",
                    e.name,
                    p.name
                );
            }
            assert_eq!(e.columns[0], "experiment");
        }
    }

    #[test]
    fn unknown_names_suggest_the_nearest() {
        match find("fig_norml") {
            Err(HarnessError::UnknownExperiment { suggestion, .. }) => {
                assert_eq!(suggestion.as_deref(), Some("fig_normal"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn listing_shows_defaults() {
        let text = list_experiments();
        assert!(text.contains("fig_normal") && text.contains("1:1024") && text.contains("trials"));
    }
}
