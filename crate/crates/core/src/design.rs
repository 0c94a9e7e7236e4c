//! Harmonic design matrix `[B | C_1 B | ... | C_K B | S_1 B | ... | S_K B]`.
//!
//! Extra (reflection) frequencies are appended after the ordinary ones, so
//! with `K` ordinary and `K'` extra frequencies the layout is trend, `K + K'`
//! cosine blocks, then `K + K'` sine blocks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bspline::{basis_matrix, build_knots, KnotVector, SplineBasis};
use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;

/// Default constant `c` in `f'_j = 2 f_N - (c - j) f0`.
pub const DEFAULT_REFLECTION_CONSTANT: f64 = 30.0;

/// Model configuration: frequencies, spline basis and penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Ordinary frequencies in cycles per time unit.
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub extra_frequencies: Vec<f64>,
    /// Number of knot intervals `n`.
    pub intervals: usize,
    pub degree: usize,
    pub penalty_order: usize,
    /// `2 K_total + 1` smoothing parameters, objective order.
    pub taus: Vec<f64>,
}

impl ModelSpec {
    pub fn new(
        frequencies: Vec<f64>,
        extra_frequencies: Vec<f64>,
        intervals: usize,
        degree: usize,
        penalty_order: usize,
        taus: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self {
            frequencies,
            extra_frequencies,
            intervals,
            degree,
            penalty_order,
            taus,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from the basis size `J` rather than the interval count.
    pub fn with_basis_size(
        frequencies: Vec<f64>,
        basis_size: usize,
        degree: usize,
        penalty_order: usize,
        taus: Vec<f64>,
    ) -> Result<Self> {
        if basis_size <= degree {
            return Err(Error::InvalidParameter(format!(
                "basis size {basis_size} must exceed the degree {degree}"
            )));
        }
        Self::new(frequencies, Vec::new(), basis_size - degree, degree, penalty_order, taus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals == 0 {
            return Err(Error::InvalidParameter("need at least one knot interval".into()));
        }
        let all = self.all_frequencies();
        if let Some(f) = all.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidParameter(format!("frequencies must be positive, got {f}")));
        }
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) {
                return Err(Error::InvalidParameter(format!("frequency {a} listed twice")));
            }
        }
        if self.taus.len() != 2 * all.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} frequencies need {} smoothing parameters, got {}",
                all.len(),
                2 * all.len() + 1,
                self.taus.len()
            )));
        }
        self.penalty_spec().map(|_| ())
    }

    /// Ordinary followed by extra frequencies.
    pub fn all_frequencies(&self) -> Vec<f64> {
        self.frequencies
            .iter()
            .chain(&self.extra_frequencies)
            .copied()
            .collect()
    }

    pub fn total_frequencies(&self) -> usize {
        self.frequencies.len() + self.extra_frequencies.len()
    }

    pub fn basis_size(&self) -> usize {
        self.intervals + self.degree
    }

    /// Number of columns `c = J (2 K_total + 1)`.
    pub fn columns(&self) -> usize {
        self.basis_size() * (2 * self.total_frequencies() + 1)
    }

    pub fn penalty_spec(&self) -> Result<PenaltySpec> {
        PenaltySpec::new(self.penalty_order, self.taus.clone(), self.basis_size())
    }

    /// Knot vector spanning the observation window.
    pub fn knots(&self, t_min: f64, t_max: f64) -> Result<KnotVector> {
        build_knots(t_min, t_max, self.intervals, self.degree)
    }

    /// Same configuration with different smoothing parameters.
    pub fn with_taus(&self, taus: Vec<f64>) -> Result<Self> {
        let mut spec = self.clone();
        spec.taus = taus;
        spec.validate()?;
        Ok(spec)
    }
}

/// Role of one design column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnGroup {
    Trend,
    /// Cosine block of ordinary frequency `k` (1-based).
    Cos(usize),
    Sin(usize),
    /// Cosine block of extra frequency `j` (1-based).
    ExtraCos(usize),
    ExtraSin(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub group: ColumnGroup,
    /// 1-based basis function index.
    pub basis_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub column_map: Vec<ColumnInfo>,
    pub basis_size: usize,
    pub total_frequencies: usize,
}

impl DesignMatrix {
    pub fn columns(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Group of coefficient block `b` in a model with `k` ordinary and
/// `k_extra` extra frequencies.
pub fn block_group(b: usize, k: usize, k_extra: usize) -> ColumnGroup {
    let kt = k + k_extra;
    match b {
        0 => ColumnGroup::Trend,
        b if b <= k => ColumnGroup::Cos(b),
        b if b <= kt => ColumnGroup::ExtraCos(b - k),
        b if b <= kt + k => ColumnGroup::Sin(b - kt),
        b => ColumnGroup::ExtraSin(b - kt - k),
    }
}

/// Fills `dst` (N x c) from the N x J basis values and the times.
fn fill_design(basis: &DMatrix<f64>, freqs: &[f64], times: &[f64]) -> DMatrix<f64> {
    let n = basis.nrows();
    let j = basis.ncols();
    let kt = freqs.len();
    let mut m = DMatrix::<f64>::zeros(n, j * (2 * kt + 1));
    m.view_mut((0, 0), (n, j)).copy_from(basis);
    for (k, &f) in freqs.iter().enumerate() {
        let w = 2.0 * PI * f;
        for (i, &t) in times.iter().enumerate() {
            let (s, c) = (w * t).sin_cos();
            for col in 0..j {
                let b = basis[(i, col)];
                if b != 0.0 {
                    m[(i, (1 + k) * j + col)] = c * b;
                    m[(i, (1 + kt + k) * j + col)] = s * b;
                }
            }
        }
    }
    m
}

/// Assembles the design matrix from a basis evaluated at `times`.
pub fn build_design(basis: &SplineBasis, spec: &ModelSpec, times: &[f64]) -> Result<DesignMatrix> {
    let j = basis.basis_size();
    if j == 0 || basis.matrix.ncols() == 0 {
        return Err(Error::EmptyBasis);
    }
    if basis.matrix.nrows() != times.len() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows for {} times",
            basis.matrix.nrows(),
            times.len()
        )));
    }
    if j != spec.basis_size() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {j} functions, model expects {}",
            spec.basis_size()
        )));
    }
    let freqs = spec.all_frequencies();
    let matrix = fill_design(&basis.matrix, &freqs, times);
    let k = spec.frequencies.len();
    let k_extra = spec.extra_frequencies.len();
    let column_map = (0..2 * freqs.len() + 1)
        .flat_map(|b| {
            let group = block_group(b, k, k_extra);
            (1..=j).map(move |basis_index| ColumnInfo { group, basis_index })
        })
        .collect();
    Ok(DesignMatrix {
        matrix,
        column_map,
        basis_size: j,
        total_frequencies: freqs.len(),
    })
}

/// Evaluates the knots of `spec` on `[t_min, t_max]` at `times` and builds
/// the design in one go.
pub fn design_for_times(spec: &ModelSpec, times: &[f64], t_min: f64, t_max: f64) -> Result<(SplineBasis, DesignMatrix)> {
    spec.validate()?;
    let kv = spec.knots(t_min, t_max)?;
    let basis = basis_matrix(&kv, times)?;
    let design = build_design(&basis, spec, times)?;
    Ok((basis, design))
}

/// `f'_j = 2 f_N - (constant - j) f0` for each `j` in `js`.
pub fn reflection_frequencies(f0: f64, f_nyquist: f64, js: impl IntoIterator<Item = i64>, constant: f64) -> Result<Vec<f64>> {
    if !(f0 > 0.0) || !(f_nyquist > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "f0 and the Nyquist frequency must be positive, got {f0} and {f_nyquist}"
        )));
    }
    js.into_iter()
        .map(|j| {
            let value = 2.0 * f_nyquist - (constant - j as f64) * f0;
            if value > 0.0 {
                Ok(value)
            } else {
                Err(Error::NonPositiveResult { j, value })
            }
        })
        .collect()
}
