//! AIC and exhaustive grid search over smoothing parameters and basis setup.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::basis_matrix;
use crate::design::{build_design, ModelSpec};
use crate::error::{Error, Result};
use crate::fit::{fit_series, fit_with_normal_equations, NormalEquations};
use crate::penalty::penalty_block;
use crate::timeseries::TimeSeries;

/// `MSE + 2 edf sigma2_0 / N`.
pub fn aic(y: &[f64], fitted: &[f64], edf: f64, sigma2_0: f64) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    rss / n + 2.0 * edf * sigma2_0 / n
}

/// Denominator of the unpenalized residual variance used in the AIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Sigma0Denominator {
    /// `N - c`, the residual degrees of freedom of the unpenalized fit.
    #[default]
    ResidualDof,
    /// `N`.
    Observations,
}

/// Residual variance of the unpenalized fit with the structure of `spec`.
pub fn unpenalized_sigma2(ts: &TimeSeries, spec: &ModelSpec, denominator: Sigma0Denominator) -> Result<f64> {
    let base = spec.with_taus(vec![0.0; spec.taus.len()])?;
    let fit = fit_series(ts, &base)?;
    let n = ts.len() as f64;
    let c = base.columns();
    let denom = match denominator {
        Sigma0Denominator::ResidualDof => n - c as f64,
        Sigma0Denominator::Observations => n,
    };
    if !(denom > 0.0) {
        return Err(Error::DegenerateDof { edf: c as f64, n: ts.len() });
    }
    Ok(fit.result.rss / denom)
}

/// Candidate values for a run of smoothing parameters that share a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauGroup {
    /// First position (1-based, objective order).
    pub start: usize,
    /// Last position, inclusive.
    pub end: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub tau_groups: Vec<TauGroup>,
    pub basis_sizes: Vec<usize>,
    pub degrees: Vec<usize>,
    pub penalty_orders: Vec<usize>,
    /// Numbers of leading template frequencies to keep.
    pub harmonics: Vec<usize>,
    #[serde(default)]
    pub sigma0: Sigma0Denominator,
}

impl TuningGrid {
    /// A grid where every smoothing parameter takes the same value.
    pub fn shared_tau(values: Vec<f64>, basis_size: usize, degree: usize, order: usize, harmonics: usize) -> Self {
        Self {
            tau_groups: vec![TauGroup {
                start: 1,
                end: usize::MAX,
                values,
            }],
            basis_sizes: vec![basis_size],
            degrees: vec![degree],
            penalty_orders: vec![order],
            harmonics: vec![harmonics],
            sigma0: Sigma0Denominator::default(),
        }
    }

    fn sorted<T: Copy + PartialOrd>(v: &[T]) -> Vec<T> {
        let mut out = v.to_vec();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
        out.dedup();
        out
    }

    fn validate(&self) -> Result<()> {
        if self.basis_sizes.is_empty() || self.degrees.is_empty() || self.penalty_orders.is_empty() || self.harmonics.is_empty() {
            return Err(Error::InvalidParameter("tuning grid has an empty axis".into()));
        }
        if self.tau_groups.is_empty() || self.tau_groups.iter().any(|g| g.values.is_empty()) {
            return Err(Error::InvalidParameter("every tau group needs at least one value".into()));
        }
        for g in &self.tau_groups {
            if g.start == 0 || g.end < g.start {
                return Err(Error::InvalidParameter(format!(
                    "tau group {}..{} is not a valid 1-based range",
                    g.start, g.end
                )));
            }
            if g.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter("tau candidates must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Groups restricted to `m = 2 K_total + 1` positions; checks they tile
    /// `1..=m` without overlap.
    fn active_groups(&self, m: usize) -> Result<Vec<(usize, usize, Vec<f64>)>> {
        let mut groups: Vec<(usize, usize, Vec<f64>)> = self
            .tau_groups
            .iter()
            .filter(|g| g.start <= m)
            .map(|g| (g.start, g.end.min(m), Self::sorted(&g.values)))
            .collect();
        groups.sort_by_key(|g| g.0);
        let mut next = 1;
        for g in &groups {
            if g.0 != next {
                return Err(Error::InvalidParameter(format!(
                    "tau groups must tile positions 1..={m}; position {next} is {}",
                    if g.0 > next { "uncovered" } else { "covered twice" }
                )));
            }
            next = g.1 + 1;
        }
        if next != m + 1 {
            return Err(Error::InvalidParameter(format!(
                "tau groups must tile positions 1..={m}; they stop at {}",
                next - 1
            )));
        }
        Ok(groups)
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub basis_size: usize,
    pub degree: usize,
    pub penalty_order: usize,
    pub harmonics: usize,
    pub taus: Vec<f64>,
    pub aic: f64,
    pub mse: f64,
    pub edf: f64,
    pub sigma2_0: f64,
    /// Failure message when the configuration could not be fitted.
    pub error: Option<String>,
}

impl Candidate {
    /// The model this configuration describes, built from `template`.
    pub fn model_spec(&self, template: &ModelSpec) -> Result<ModelSpec> {
        if self.basis_size <= self.degree {
            return Err(Error::InvalidParameter(format!(
                "basis size {} must exceed the degree {}",
                self.basis_size, self.degree
            )));
        }
        ModelSpec::new(
            template.frequencies[..self.harmonics].to_vec(),
            template.extra_frequencies.clone(),
            self.basis_size - self.degree,
            self.degree,
            self.penalty_order,
            self.taus.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best: Candidate,
    /// Every configuration in enumeration order.
    pub aic_table: Vec<Candidate>,
}

impl SelectionResult {
    /// The table sorted by AIC with the selection tie-break.
    pub fn ranked(&self) -> Vec<Candidate> {
        let mut rows = self.aic_table.clone();
        rows.sort_by(|a, b| rank(a).partial_cmp(&rank(b)).unwrap());
        rows
    }
}

fn rank(c: &Candidate) -> (f64, f64) {
    let edf = if c.edf.is_nan() { f64::INFINITY } else { c.edf };
    (c.aic, edf)
}

/// Structural part of a configuration; everything but the taus.
#[derive(Debug, Clone, Copy)]
struct Structure {
    basis_size: usize,
    degree: usize,
    order: usize,
    harmonics: usize,
}

fn failed(s: Structure, taus: Vec<f64>, err: &Error) -> Candidate {
    Candidate {
        basis_size: s.basis_size,
        degree: s.degree,
        penalty_order: s.order,
        harmonics: s.harmonics,
        taus,
        aic: f64::INFINITY,
        mse: f64::NAN,
        edf: f64::NAN,
        sigma2_0: f64::NAN,
        error: Some(err.to_string()),
    }
}

/// All tau vectors for the active groups, last group varying fastest.
fn tau_vectors(groups: &[(usize, usize, Vec<f64>)], m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]];
    for (start, end, values) in groups {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for base in &out {
            for &v in values {
                let mut t = base.clone();
                t[start - 1..*end].iter_mut().for_each(|x| *x = v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn evaluate_structure(
    ts: &TimeSeries,
    template: &ModelSpec,
    grid: &TuningGrid,
    s: Structure,
) -> Result<Vec<Candidate>> {
    let m = 2 * (s.harmonics + template.extra_frequencies.len()) + 1;
    let groups = grid.active_groups(m)?;
    let taus_list = tau_vectors(&groups, m);
    let setup = || -> Result<_> {
        if s.basis_size <= s.degree {
            return Err(Error::InvalidParameter(format!(
                "basis size {} must exceed the degree {}",
                s.basis_size, s.degree
            )));
        }
        let base = ModelSpec::new(
            template.frequencies[..s.harmonics].to_vec(),
            template.extra_frequencies.clone(),
            s.basis_size - s.degree,
            s.degree,
            s.order,
            vec![0.0; m],
        )?;
        let times = ts.times();
        let knots = base.knots(times[0], times[times.len() - 1])?;
        let basis = basis_matrix(&knots, times)?;
        let design = build_design(&basis, &base, times)?;
        let ne = NormalEquations::new(&design, ts.values())?;
        let c = design.columns();
        let zero = nalgebra::DMatrix::zeros(c, c);
        let fit0 = fit_with_normal_equations(&design, &ne, ts.values(), &zero)?;
        let n = ts.len() as f64;
        let denom = match grid.sigma0 {
            Sigma0Denominator::ResidualDof => n - c as f64,
            Sigma0Denominator::Observations => n,
        };
        if !(denom > 0.0) {
            return Err(Error::DegenerateDof { edf: c as f64, n: ts.len() });
        }
        Ok((base, design, ne, fit0.rss / denom))
    };
    let (base, design, ne, sigma2_0) = match setup() {
        Ok(v) => v,
        Err(e) => return Ok(taus_list.into_iter().map(|t| failed(s, t, &e)).collect()),
    };
    let rows = taus_list
        .into_iter()
        .map(|taus| {
            let attempt = || -> Result<Candidate> {
                let spec = base.with_taus(taus.clone())?;
                let p = penalty_block(&spec.penalty_spec()?)?;
                let fit = fit_with_normal_equations(&design, &ne, ts.values(), &p)?;
                Ok(Candidate {
                    basis_size: s.basis_size,
                    degree: s.degree,
                    penalty_order: s.order,
                    harmonics: s.harmonics,
                    taus: taus.clone(),
                    aic: aic(ts.values(), &fit.fitted, fit.edf, sigma2_0),
                    mse: fit.mse,
                    edf: fit.edf,
                    sigma2_0,
                    error: None,
                })
            };
            attempt().unwrap_or_else(|e| failed(s, taus.clone(), &e))
        })
        .collect();
    Ok(rows)
}

/// Fits every configuration of `grid` and returns the AIC minimizer.
///
/// Candidate lists are sorted before enumeration, so the table order and the
/// winner do not depend on how the grid was written down. Ties in AIC go to
/// the smaller edf, then to the earlier configuration.
pub fn grid_search(ts: &TimeSeries, grid: &TuningGrid, template: &ModelSpec, parallel: bool) -> Result<SelectionResult> {
    grid.validate()?;
    let k_max = template.frequencies.len();
    if let Some(&k) = grid.harmonics.iter().find(|&&k| k > k_max) {
        return Err(Error::InvalidParameter(format!(
            "{k} harmonics requested but the template lists {k_max} frequencies"
        )));
    }
    let mut structures = Vec::new();
    for &basis_size in &TuningGrid::sorted(&grid.basis_sizes) {
        for &degree in &TuningGrid::sorted(&grid.degrees) {
            for &order in &TuningGrid::sorted(&grid.penalty_orders) {
                for &harmonics in &TuningGrid::sorted(&grid.harmonics) {
                    structures.push(Structure {
                        basis_size,
                        degree,
                        order,
                        harmonics,
                    });
                }
            }
        }
    }
    let per_structure: Vec<Result<Vec<Candidate>>> = if parallel {
        structures
            .par_iter()
            .map(|&s| evaluate_structure(ts, template, grid, s))
            .collect()
    } else {
        structures
            .iter()
            .map(|&s| evaluate_structure(ts, template, grid, s))
            .collect()
    };
    let mut table = Vec::new();
    for rows in per_structure {
        table.extend(rows?);
    }
    let mut best: Option<&Candidate> = None;
    for c in &table {
        if c.error.is_some() || !c.aic.is_finite() {
            continue;
        }
        best = match best {
            None => Some(c),
            Some(b) if rank(c) < rank(b) => Some(c),
            keep => keep,
        };
    }
    let best = best.ok_or(Error::AllFitsFailed)?.clone();
    Ok(SelectionResult { best, aic_table: table })
}
