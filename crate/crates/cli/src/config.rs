//! Resolved run configurations. Each command echoes its configuration into
//! its JSON output, and `--config` accepts that echo back.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tvmod::design::ModelSpec;
use tvmod::selection::{Sigma0Denominator, TauGroup, TuningGrid};
use tvmod::simulate::BlazhkoParams;
use tvmod::spectral::Ar2Params;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Fit(FitConfig),
    Tune(TuneConfig),
    Spectrum(SpectrumConfig),
    Simulate(SimulateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    pub path: String,
    /// 1-based value column; time is column 1.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: InputConfig,
    pub model: ModelSpec,
    pub level: f64,
    #[serde(default)]
    pub sigma0: Sigma0Denominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub input: InputConfig,
    /// Frequencies and extra frequencies; the other fields are ignored.
    pub template: ModelSpec,
    pub grid: TuningGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub input: InputConfig,
    pub t0: f64,
    pub delta: f64,
    pub grid_tol: Option<f64>,
    pub bandwidth: f64,
    /// Whiteness band in angular frequency.
    pub band: (f64, f64),
    pub flat_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub seed: u64,
    pub simulation: Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Simulation {
    Sinusoidal { n: usize, sigma2: f64 },
    Polynomial { n: usize, sigma2: f64 },
    Demo { n: usize, sigma2: f64 },
    Blazhko { n: usize, params: BlazhkoParams },
    Ar2 {
        params: Ar2Params,
        t0: f64,
        n: usize,
        n_blocks: usize,
        keep: usize,
        block_seed: u64,
    },
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        source: e,
    })?;
    // accept either a bare configuration or a report that embeds one
    let value = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: not a number: {f:?}")))
        })
        .collect()
}

pub fn parse_usize_list(s: &str, what: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| {
            f.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{what}: not a non-negative integer: {f:?}")))
        })
        .collect()
}

/// `a-b` or `a` (1-based, inclusive); `end` may be `*` for "to the last".
fn parse_range(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("--tau: bad position range {s:?}"));
    let (a, b) = match s.split_once('-') {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let start = a.trim().parse::<usize>().map_err(|_| bad())?;
    let end = match b.trim() {
        "*" => usize::MAX,
        b => b.parse::<usize>().map_err(|_| bad())?,
    };
    if start == 0 || end < start {
        return Err(bad());
    }
    Ok((start, end))
}

/// Tau groups: `v1,v2,...` for one group over every position, or
/// `range:v1,v2;range:...` with ranges such as `1`, `2-21` or `22-*`.
pub fn parse_tau_groups(s: &str) -> CliResult<Vec<TauGroup>> {
    if !s.contains(':') {
        return Ok(vec![TauGroup {
            start: 1,
            end: usize::MAX,
            values: parse_list(s, "--tau")?,
        }]);
    }
    s.split(';')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(|g| {
            let (r, v) = g
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("--tau: group {g:?} needs the form range:values")))?;
            let (start, end) = parse_range(r)?;
            Ok(TauGroup {
                start,
                end,
                values: parse_list(v, "--tau")?,
            })
        })
        .collect()
}

/// Smoothing parameters for a model with `m = 2K + 1` of them: one value
/// for all, a full list of `m`, or single-valued groups.
pub fn parse_taus(s: &str, m: usize) -> CliResult<Vec<f64>> {
    if s.contains(':') {
        let mut taus = vec![f64::NAN; m];
        for g in parse_tau_groups(s)? {
            if g.values.len() != 1 {
                return Err(CliError::Usage(format!(
                    "--tau: group {}-{} must have one value when fitting",
                    g.start, g.end
                )));
            }
            for slot in taus.iter_mut().take(g.end.min(m)).skip(g.start - 1) {
                *slot = g.values[0];
            }
        }
        if let Some(i) = taus.iter().position(|t| t.is_nan()) {
            return Err(CliError::Usage(format!("--tau: position {} has no value", i + 1)));
        }
        return Ok(taus);
    }
    let v = parse_list(s, "--tau")?;
    match v.len() {
        1 => Ok(vec![v[0]; m]),
        n if n == m => Ok(v),
        n => Err(CliError::Usage(format!("--tau: expected 1 or {m} values, got {n}"))),
    }
}

pub fn parse_sigma0(s: &str) -> CliResult<Sigma0Denominator> {
    match s {
        "residual-dof" => Ok(Sigma0Denominator::ResidualDof),
        "observations" => Ok(Sigma0Denominator::Observations),
        _ => Err(CliError::Usage(format!(
            "--sigma0 must be residual-dof or observations, got {s:?}"
        ))),
    }
}
