//! What to run: an experiment name, parameter overrides, seed, trial count,
//! output path and worker count, from flags and/or a `key=value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::params::ParamValue;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "CONTRACT_SCHED_THREADS";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    /// `None` defers to [`THREADS_ENV`], then to the hardware parallelism.
    pub threads: Option<usize>,
}

/// Settings from one source; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecOverrides {
    pub name: Option<String>,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        HarnessError::BadArgument(format!(
            "`{key}` expects a non-negative integer, got `{value}`"
        ))
    })
}

impl SpecOverrides {
    /// Applies one `key=value` setting. Reserved keys are `experiment`, `seed`,
    /// `trials`, `out` and `threads`; everything else is an experiment parameter.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "experiment" => self.name = Some(value.trim().to_string()),
            "seed" => self.seed = Some(parse_int(key, value)?),
            "trials" => self.trials = Some(parse_int(key, value)?),
            "out" => self.output = Some(PathBuf::from(value.trim())),
            "threads" => self.threads = Some(parse_int(key, value)?),
            "" => return Err(HarnessError::BadArgument("empty key".into())),
            _ => {
                let v = value
                    .parse()
                    .map_err(|e: HarnessError| HarnessError::BadArgument(format!("{key}: {e}")))?;
                self.params.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    /// Parses `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            HarnessError::BadArgument(format!("expected key=value, got `{pair}`"))
        })?;
        self.set(k, v)
    }

    /// One `key=value` per line; blank lines and `#` comments are skipped.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            out.set_pair(line)
                .map_err(|e| HarnessError::BadArgument(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(out)
    }

    pub fn read_config(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse_config(&text)
    }

    /// `self` with every setting present in `over` replaced.
    pub fn merged(mut self, over: SpecOverrides) -> Self {
        self.name = over.name.or(self.name);
        self.params.extend(over.params);
        self.seed = over.seed.or(self.seed);
        self.trials = over.trials.or(self.trials);
        self.output = over.output.or(self.output);
        self.threads = over.threads.or(self.threads);
        self
    }

    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let name = self.name.ok_or_else(|| {
            HarnessError::BadArgument("no experiment named; pass --experiment".into())
        })?;
        Ok(ExperimentSpec {
            name,
            params: self.params,
            seed: self.seed.unwrap_or(0),
            trials: self.trials,
            output: self.output,
            threads: self.threads,
        })
    }
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: &str) -> Result<Self> {
        let mut o = SpecOverrides::default();
        o.set(key, value)?;
        self.params.extend(o.params);
        if let Some(v) = o.seed {
            self.seed = v;
        }
        self.trials = o.trials.or(self.trials);
        self.threads = o.threads.or(self.threads);
        self.output = o.output.or(self.output);
        Ok(self)
    }

    /// Worker count: the spec, then [`THREADS_ENV`], then 0 (rayon's default).
    pub fn worker_threads(&self) -> Result<usize> {
        if let Some(t) = self.threads {
            return Ok(t);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => parse_int(THREADS_ENV, &v),
            Err(_) => Ok(0),
        }
    }
}
