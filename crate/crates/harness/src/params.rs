//! Parameter values: `5`, `0.01,0.2`, `1:1024` (integer grid),
//! `0:0.75:4` (4 evenly spaced points) and `1:20000:64:log` (log spacing).

use std::fmt;
use std::str::FromStr;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
    /// Inclusive `lo..=hi` in unit steps; both ends integral.
    IntegerGrid {
        lo: i64,
        hi: i64,
    },
    /// `steps` points from `lo` to `hi` inclusive; `steps == 1` yields `lo`.
    Grid {
        lo: f64,
        hi: f64,
        steps: usize,
        log: bool,
    },
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| HarnessError::BadArgument(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(HarnessError::BadArgument(format!("`{s}` is not finite")));
    }
    Ok(v)
}

impl FromStr for ParamValue {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let bad = || HarnessError::BadArgument(format!("malformed range `{s}`"));
            let (lo, hi) = (number(parts[0])?, number(parts.get(1).ok_or_else(bad)?)?);
            if hi < lo {
                return Err(HarnessError::BadArgument(format!("range `{s}` is empty")));
            }
            return match parts.len() {
                2 => {
                    if lo.fract() != 0.0 || hi.fract() != 0.0 {
                        return Err(HarnessError::BadArgument(format!(
                            "`{s}`: a two-part range is an integer grid; give a step count for reals"
                        )));
                    }
                    Ok(ParamValue::IntegerGrid {
                        lo: lo as i64,
                        hi: hi as i64,
                    })
                }
                3 | 4 => {
                    let steps: usize = parts[2]
                        .trim()
                        .parse()
                        .ok()
                        .filter(|n| *n >= 1)
                        .ok_or_else(|| {
                            HarnessError::BadArgument(format!(
                                "`{s}`: steps must be a positive integer"
                            ))
                        })?;
                    let log = match parts.get(3).map(|p| p.trim()) {
                        None | Some("lin") => false,
                        Some("log") => true,
                        Some(other) => {
                            return Err(HarnessError::BadArgument(format!(
                                "`{s}`: unknown spacing `{other}`"
                            )))
                        }
                    };
                    if log && lo <= 0.0 {
                        return Err(HarnessError::BadArgument(format!(
                            "`{s}`: log spacing needs lo > 0"
                        )));
                    }
                    Ok(ParamValue::Grid { lo, hi, steps, log })
                }
                _ => Err(bad()),
            };
        }
        if s.contains(',') {
            return Ok(ParamValue::List(
                s.split(',').map(number).collect::<Result<_>>()?,
            ));
        }
        Ok(ParamValue::Scalar(number(s)?))
    }
}

impl ParamValue {
    /// The values in sweep order.
    pub fn values(&self) -> Vec<f64> {
        match self {
            ParamValue::Scalar(v) => vec![*v],
            ParamValue::List(v) => v.clone(),
            ParamValue::IntegerGrid { lo, hi } => (*lo..=*hi).map(|v| v as f64).collect(),
            ParamValue::Grid { lo, hi, steps, log } => {
                if *steps == 1 {
                    return vec![*lo];
                }
                let last = (*steps - 1) as f64;
                (0..*steps)
                    .map(|i| {
                        let f = i as f64 / last;
                        if i + 1 == *steps {
                            *hi
                        } else if *log {
                            (lo.ln() + f * (hi.ln() - lo.ln())).exp()
                        } else {
                            lo + f * (hi - lo)
                        }
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Scalar(v) => write!(f, "{v}"),
            ParamValue::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            ParamValue::IntegerGrid { lo, hi } => write!(f, "{lo}:{hi}"),
            ParamValue::Grid { lo, hi, steps, log } => {
                write!(f, "{lo}:{hi}:{steps}{}", if *log { ":log" } else { "" })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ParamValue {
        s.parse().unwrap()
    }

    #[test]
    fn parses_each_form() {
        assert_eq!(p("0.05").values(), vec![0.05]);
        assert_eq!(p("500,700").values(), vec![500.0, 700.0]);
        assert_eq!(p("1:4").values(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p("0:0.75:4").values(), vec![0.0, 0.25, 0.5, 0.75]);
        let log = p("1:1000:4:log").values();
        assert_eq!(log.len(), 4);
        assert!((log[1] - 10.0).abs() < 1e-12 && (log[2] - 100.0).abs() < 1e-10);
        assert_eq!(log[3], 1000.0);
    }

    #[test]
    fn single_step_yields_the_low_end() {
        assert_eq!(p("3:9:1").values(), vec![3.0]);
        assert_eq!(p("7:7").values(), vec![7.0]);
    }

    #[test]
    fn rejects_malformed_ranges() {
        for s in [
            "4:1",
            "1.5:3",
            "1:3:0",
            "0:3:4:log",
            "1:2:3:cubic",
            "x",
            "1:2:3:log:9",
            "nan",
            "1,,2",
        ] {
            assert!(s.parse::<ParamValue>().is_err(), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["0.05", "500,700", "1:1024", "1:20000:64:log", "0:0.75:4"] {
            assert_eq!(p(&p(s).to_string()), p(s));
        }
    }
}
