//! Penalized least squares fit of the time-varying harmonic model.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bspline::{basis_matrix, KnotVector};
use crate::design::{build_design, DesignMatrix, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::penalty::penalty_block;
use crate::timeseries::TimeSeries;

/// Cross products of a design that do not depend on the penalty.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub btb: DMatrix<f64>,
    pub bty: DVector<f64>,
    pub n: usize,
}

impl NormalEquations {
    pub fn new(design: &DesignMatrix, y: &[f64]) -> Result<Self> {
        if design.rows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "design has {} rows, response has {}",
                design.rows(),
                y.len()
            )));
        }
        let b = &design.matrix;
        let yv = DVector::from_column_slice(y);
        let mut btb = b.tr_mul(b);
        symmetrize(&mut btb);
        Ok(Self {
            btb,
            bty: b.tr_mul(&yv),
            n: y.len(),
        })
    }

    pub fn columns(&self) -> usize {
        self.btb.nrows()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Solution of `(B^T B + P) theta = B^T y` with the pieces needed downstream.
#[derive(Debug, Clone)]
pub struct PenalizedSolution {
    pub theta: DVector<f64>,
    /// `(B^T B + P)^{-1}`.
    pub g_inv: DMatrix<f64>,
    pub edf: f64,
    pub jitter: f64,
}

/// Factorizes `B^T B + P` and solves for the coefficients.
pub fn solve_penalized(ne: &NormalEquations, p: &DMatrix<f64>) -> Result<PenalizedSolution> {
    let c = ne.columns();
    if p.shape() != (c, c) {
        return Err(Error::ShapeMismatch(format!(
            "penalty is {}x{}, design has {c} columns",
            p.nrows(),
            p.ncols()
        )));
    }
    if ne.n < c && p.iter().all(|&v| v == 0.0) {
        return Err(Error::Underdetermined { n: ne.n, c });
    }
    let g = &ne.btb + p;
    let chol = Cholesky::factor_with_retry(&g)?;
    let theta = chol.solve(&ne.bty);
    let g_inv = chol.inverse();
    let edf = trace_of_product(&g_inv, &ne.btb);
    Ok(PenalizedSolution {
        theta,
        g_inv,
        edf,
        jitter: chol.jitter,
    })
}

/// `tr(A B)` for symmetric `B`, without forming the product.
fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Effective degrees of freedom `tr(S) = tr[(B^T B + P)^{-1} B^T B]`.
pub fn hat_trace(design: &DesignMatrix, p: &DMatrix<f64>) -> Result<f64> {
    let ne = NormalEquations::new(design, &vec![0.0; design.rows()])?;
    Ok(solve_penalized(&ne, p)?.edf)
}

/// `sum (y - yhat)^2 / (N - edf)`.
pub fn error_variance(y: &[f64], fitted: &[f64], edf: f64) -> Result<f64> {
    if y.len() != fitted.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} observations, {} fitted values",
            y.len(),
            fitted.len()
        )));
    }
    let n = y.len();
    // edf reaching N up to roundoff leaves no residual degrees of freedom
    if !(n as f64 - edf > 1e-9 * n as f64) {
        return Err(Error::DegenerateDof { edf, n });
    }
    let rss: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(rss / (n as f64 - edf))
}

/// Trend `m = B alpha` and amplitude curves `g = B beta_k`, `B gamma_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub times: Vec<f64>,
    pub trend: Vec<f64>,
    /// `2 K_total` curves: all cosine amplitudes `g_{1,k}`, then all sine
    /// amplitudes `g_{2,k}`.
    pub amplitudes: Vec<Vec<f64>>,
    /// Reassembled mean `m + sum_k (g_{1,k} cos + g_{2,k} sin)`.
    pub mean: Vec<f64>,
}

impl Components {
    pub fn total_frequencies(&self) -> usize {
        self.amplitudes.len() / 2
    }

    /// Amplitude curve `g_{ell,k}` (`ell` in {1, 2}, `k` 1-based).
    pub fn amplitude(&self, ell: usize, k: usize) -> Option<&[f64]> {
        let kt = self.total_frequencies();
        if !(1..=2).contains(&ell) || k == 0 || k > kt {
            return None;
        }
        Some(&self.amplitudes[(ell - 1) * kt + k - 1])
    }
}

/// Splits `theta` into its blocks and evaluates each on `basis` (N x J).
pub fn extract_components(
    theta: &DVector<f64>,
    basis: &DMatrix<f64>,
    frequencies: &[f64],
    times: &[f64],
) -> Result<Components> {
    let j = basis.ncols();
    let kt = frequencies.len();
    let blocks = 2 * kt + 1;
    if theta.len() != j * blocks {
        return Err(Error::ShapeMismatch(format!(
            "theta has length {}, expected J(2K+1) = {}",
            theta.len(),
            j * blocks
        )));
    }
    if basis.nrows() != times.len() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows for {} times",
            basis.nrows(),
            times.len()
        )));
    }
    let curve = |b: usize| -> Vec<f64> { (basis * theta.rows(b * j, j)).iter().copied().collect() };
    let trend = curve(0);
    let amplitudes: Vec<Vec<f64>> = (1..blocks).map(curve).collect();
    let mean = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut mu = trend[i];
            for (k, f) in frequencies.iter().enumerate() {
                let (s, c) = (2.0 * PI * f * t).sin_cos();
                mu += amplitudes[k][i] * c + amplitudes[kt + k][i] * s;
            }
            mu
        })
        .collect();
    Ok(Components {
        times: times.to_vec(),
        trend,
        amplitudes,
        mean,
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta: DVector<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub edf: f64,
    /// `RSS / (N - edf)`; `None` when no residual degrees of freedom remain.
    pub sigma2: Option<f64>,
    pub mse: f64,
    pub rss: f64,
    pub g_inv: DMatrix<f64>,
    pub jitter: f64,
}

/// `theta = (B^T B + P)^{-1} B^T y` plus fitted values and diagnostics.
pub fn fit_pols(design: &DesignMatrix, y: &[f64], p: &DMatrix<f64>) -> Result<FitResult> {
    let ne = NormalEquations::new(design, y)?;
    fit_with_normal_equations(design, &ne, y, p)
}

/// As [`fit_pols`] but reusing precomputed cross products.
pub fn fit_with_normal_equations(
    design: &DesignMatrix,
    ne: &NormalEquations,
    y: &[f64],
    p: &DMatrix<f64>,
) -> Result<FitResult> {
    let sol = solve_penalized(ne, p)?;
    let fitted: Vec<f64> = (&design.matrix * &sol.theta).iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let n = y.len();
    let sigma2 = error_variance(y, &fitted, sol.edf).ok();
    Ok(FitResult {
        theta: sol.theta,
        fitted,
        residuals,
        edf: sol.edf,
        sigma2,
        mse: rss / n as f64,
        rss,
        g_inv: sol.g_inv,
        jitter: sol.jitter,
    })
}

/// `||y - B theta||^2 + theta^T P theta`.
pub fn objective(design: &DesignMatrix, y: &[f64], p: &DMatrix<f64>, theta: &DVector<f64>) -> f64 {
    let fitted = &design.matrix * theta;
    let rss: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    rss + (theta.transpose() * p * theta)[(0, 0)]
}

/// A fit bundled with everything needed to evaluate it at new times.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub knots: KnotVector,
    pub design: DesignMatrix,
    pub result: FitResult,
    pub components: Components,
    pub penalty: DMatrix<f64>,
}

impl FittedModel {
    /// Trend, amplitudes and mean at arbitrary times inside the knot domain.
    pub fn evaluate(&self, times: &[f64]) -> Result<Components> {
        let basis = basis_matrix(&self.knots, times)?;
        extract_components(&self.result.theta, &basis.matrix, &self.spec.all_frequencies(), times)
    }

    pub fn times(&self) -> &[f64] {
        &self.components.times
    }
}

/// Fits `spec` to a series, placing the knots on `[t_1, t_N]`.
pub fn fit_series(ts: &TimeSeries, spec: &ModelSpec) -> Result<FittedModel> {
    spec.validate()?;
    let times = ts.times();
    let t_min = times[0];
    let t_max = times[times.len() - 1];
    if !(t_max > t_min) {
        return Err(Error::DegenerateDomain { t_min, t_max });
    }
    let knots = spec.knots(t_min, t_max)?;
    let basis = basis_matrix(&knots, times)?;
    let design = build_design(&basis, spec, times)?;
    let penalty = penalty_block(&spec.penalty_spec()?)?;
    let result = fit_pols(&design, ts.values(), &penalty)?;
    let components = extract_components(&result.theta, &basis.matrix, &spec.all_frequencies(), times)?;
    Ok(FittedModel {
        spec: spec.clone(),
        knots,
        design,
        result,
        components,
        penalty,
    })
}
