//! Pointwise Gaussian bands from the sandwich covariance and Monte Carlo
//! quantile bands from replicate fits.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::fit::{FitResult, NormalEquations, solve_penalized};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub times: Vec<f64>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

impl Band {
    /// Whether `values` lie inside the band at each point.
    pub fn contains(&self, values: &[f64]) -> Vec<bool> {
        values
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
            .collect()
    }
}

/// Model component addressed by a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Trend,
    /// `g_{ell,k}`: `ell = 1` cosine, `ell = 2` sine; `k` 1-based over all
    /// (ordinary then extra) frequencies.
    Amplitude { ell: usize, k: usize },
}

impl Component {
    /// Coefficient block index (0-based) in a model with `k_total` frequencies.
    pub fn block(&self, k_total: usize) -> Result<usize> {
        match *self {
            Component::Trend => Ok(0),
            Component::Amplitude { ell, k } if (1..=2).contains(&ell) && (1..=k_total).contains(&k) => {
                Ok((ell - 1) * k_total + k)
            }
            Component::Amplitude { ell, k } => Err(Error::UnknownComponent(format!(
                "g_({ell},{k}) in a model with {k_total} frequencies"
            ))),
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(level))
    }
}

/// `sigma2 X X^T` with `X = G^{-1} B^T`, mirrored so the result is exactly
/// symmetric.
pub fn covariance_from_inverse(g_inv: &DMatrix<f64>, design: &DesignMatrix, sigma2: f64) -> Result<DMatrix<f64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be non-negative, got {sigma2}")));
    }
    let c = design.columns();
    if g_inv.shape() != (c, c) {
        return Err(Error::ShapeMismatch(format!(
            "inverse is {}x{}, design has {c} columns",
            g_inv.nrows(),
            g_inv.ncols()
        )));
    }
    let x = g_inv * design.matrix.transpose();
    let mut v = &x * x.transpose();
    for i in 0..c {
        for j in 0..i {
            let s = sigma2 * v[(j, i)];
            v[(j, i)] = s;
            v[(i, j)] = s;
        }
        v[(i, i)] *= sigma2;
    }
    Ok(v)
}

/// Sandwich covariance `sigma2 G^{-1} B^T B G^{-1}`, `G = B^T B + P`.
pub fn theta_covariance(design: &DesignMatrix, p: &DMatrix<f64>, sigma2: f64) -> Result<DMatrix<f64>> {
    let ne = NormalEquations::new(design, &vec![0.0; design.rows()])?;
    let sol = solve_penalized(&ne, p)?;
    covariance_from_inverse(&sol.g_inv, design, sigma2)
}

/// Plug-in residual variance of a fit, as required by the parametric bands.
fn plug_in_sigma2(fit: &FitResult) -> Result<f64> {
    fit.sigma2.ok_or(Error::DegenerateDof {
        edf: fit.edf,
        n: fit.fitted.len(),
    })
}

/// Row-wise `sqrt(x_i^T V x_i)`.
fn row_std(rows: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
    let xv = rows * v;
    (0..rows.nrows())
        .map(|i| xv.row(i).dot(&rows.row(i)).max(0.0).sqrt())
        .collect()
}

fn symmetric_band(times: &[f64], center: Vec<f64>, sd: &[f64], level: f64) -> Band {
    let z = normal_quantile(0.5 + level / 2.0).expect("level checked");
    Band {
        times: times.to_vec(),
        lower: center.iter().zip(sd).map(|(c, s)| c - z * s).collect(),
        upper: center.iter().zip(sd).map(|(c, s)| c + z * s).collect(),
        center,
        level,
    }
}

/// Band for the fitted mean at the design rows, using the fit's plug-in
/// variance.
pub fn prediction_band(fit: &FitResult, design: &DesignMatrix, times: &[f64], level: f64) -> Result<Band> {
    check_level(level)?;
    let v = covariance_from_inverse(&fit.g_inv, design, plug_in_sigma2(fit)?)?;
    prediction_band_with_covariance(fit, design, times, &v, level)
}

pub fn prediction_band_with_covariance(
    fit: &FitResult,
    design: &DesignMatrix,
    times: &[f64],
    v: &DMatrix<f64>,
    level: f64,
) -> Result<Band> {
    check_level(level)?;
    if times.len() != design.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} times for {} design rows",
            times.len(),
            design.rows()
        )));
    }
    let sd = row_std(&design.matrix, v);
    Ok(symmetric_band(times, fit.fitted.clone(), &sd, level))
}

/// Band for one component evaluated on `basis` (N x J) at `times`.
pub fn component_band(
    theta: &nalgebra::DVector<f64>,
    v: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    times: &[f64],
    which: Component,
    level: f64,
) -> Result<Band> {
    check_level(level)?;
    let j = basis.ncols();
    if j == 0 || theta.len() % j != 0 || (theta.len() / j) % 2 == 0 {
        return Err(Error::ShapeMismatch(format!(
            "theta of length {} does not split into 2K+1 blocks of {j}",
            theta.len()
        )));
    }
    if basis.nrows() != times.len() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows for {} times",
            basis.nrows(),
            times.len()
        )));
    }
    let k_total = (theta.len() / j - 1) / 2;
    let b = which.block(k_total)?;
    let block_cov = v.view((b * j, b * j), (j, j)).clone_owned();
    let center: Vec<f64> = (basis * theta.rows(b * j, j)).iter().copied().collect();
    let sd = row_std(basis, &block_cov);
    Ok(symmetric_band(times, center, &sd, level))
}

/// Order-statistic band over `M` replicate curves (rows of `curves`).
///
/// The lower edge is the `ceil(M (1 - level) / 2)`-th smallest value and the
/// upper edge its mirror `M + 1 -` that rank; the center is the mean.
pub fn empirical_band(curves: &[Vec<f64>], times: &[f64], level: f64) -> Result<Band> {
    check_level(level)?;
    let m = curves.len();
    if m < 2 {
        return Err(Error::TooFewReplicates(m));
    }
    let n = times.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != n) {
        return Err(Error::ShapeMismatch(format!("replicate of length {} for {n} times", bad.len())));
    }
    let (lo_rank, hi_rank) = order_statistic_ranks(m, level);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut center = Vec::with_capacity(n);
    let mut column = vec![0.0; m];
    for i in 0..n {
        for (r, c) in curves.iter().enumerate() {
            column[r] = c[i];
        }
        center.push(column.iter().sum::<f64>() / m as f64);
        column.sort_by(f64::total_cmp);
        lower.push(column[lo_rank - 1]);
        upper.push(column[hi_rank - 1]);
    }
    Ok(Band {
        times: times.to_vec(),
        center,
        lower,
        upper,
        level,
    })
}

/// 1-based ranks of the lower and upper band edges for `m` replicates.
pub fn order_statistic_ranks(m: usize, level: f64) -> (usize, usize) {
    let tail = m as f64 * (1.0 - level) / 2.0;
    // guard against 200 * 0.025 landing a hair above 5
    let lo = ((tail - 1e-9).ceil() as usize).clamp(1, m);
    let hi = (m + 1 - lo).max(lo);
    (lo, hi)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse standard normal CDF: rational approximation refined by one
/// Halley step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(p));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    if p == 0.5 {
        return 0.0;
    }
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}
