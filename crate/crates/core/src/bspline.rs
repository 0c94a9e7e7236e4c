//! Uniform knot vectors and B-spline basis evaluation.
//!
//! Indexing follows the usual textbook layout: knots are numbered from 0
//! (`xi_0 ..= xi_{n+2d}`), basis functions from 1 (`B_1 ..= B_J`, `J = n + d`),
//! and `B_{j,0}` is the indicator of the cell `[xi_{j-1}, xi_j)`. In code the
//! basis index is therefore shifted by one against the knot slice: basis `j`
//! starts at `knots[j - 1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knots `xi_0 <= ... <= xi_{n+2d}` of a degree-`d` spline on `n` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
    intervals: usize,
}

impl KnotVector {
    /// Wraps an explicit knot sequence after checking its length and that the
    /// interior knots are strictly increasing.
    pub fn from_knots(knots: Vec<f64>, degree: usize, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        let expected = intervals + 2 * degree + 1;
        if knots.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} knots for n={intervals}, d={degree}, got {}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("knots must be finite and non-decreasing".into()));
        }
        if knots[degree..=degree + intervals].windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("interior knots must be strictly increasing".into()));
        }
        Ok(Self {
            knots,
            degree,
            intervals,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of basis functions `J = n + d`.
    pub fn basis_size(&self) -> usize {
        self.intervals + self.degree
    }

    /// Evaluation domain `[xi_d, xi_{n+d}]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.degree + self.intervals])
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t >= lo && t <= hi
    }

    /// Index `s` of the interior cell `[xi_s, xi_{s+1})` holding `t`; the last
    /// cell is closed on the right.
    fn span(&self, t: f64) -> usize {
        let d = self.degree;
        let last = d + self.intervals - 1;
        let interior = &self.knots[d..=d + self.intervals];
        // first interior knot strictly greater than t
        let pos = interior.partition_point(|&k| k <= t);
        (d + pos.saturating_sub(1)).min(last)
    }
}

/// Equally spaced interior knots on `[t_min, t_max]`, extended by `d` knots on
/// each side with the same spacing.
pub fn build_knots(t_min: f64, t_max: f64, n: usize, d: usize) -> Result<KnotVector> {
    if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::DegenerateDomain { t_min, t_max });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one interval".into()));
    }
    let h = (t_max - t_min) / n as f64;
    let mut knots: Vec<f64> = (0..=n + 2 * d)
        .map(|i| t_min + (i as f64 - d as f64) * h)
        .collect();
    // pin the domain ends so the data extremes are representable exactly
    knots[d] = t_min;
    knots[d + n] = t_max;
    KnotVector::from_knots(knots, d, n)
}

/// `B_{j,d}(t)` by the Cox-de Boor recursion, `j` in `1..=J`.
pub fn eval_basis(kv: &KnotVector, j: usize, t: f64) -> Result<f64> {
    if j == 0 || j > kv.basis_size() {
        return Err(Error::InvalidParameter(format!(
            "basis index {j} outside 1..={}",
            kv.basis_size()
        )));
    }
    if !kv.contains(t) {
        let (lo, hi) = kv.domain();
        return Err(Error::OutOfDomain {
            lo,
            hi,
            count: 1,
            indices: vec![0],
        });
    }
    Ok(cox_de_boor(kv, j, kv.degree, t))
}

fn cox_de_boor(kv: &KnotVector, j: usize, d: usize, t: f64) -> f64 {
    let xi = &kv.knots;
    if d == 0 {
        let (lo, hi) = (xi[j - 1], xi[j]);
        let right_end = kv.knots[kv.degree + kv.intervals];
        // the final interior cell is closed so that t_max belongs to it
        if t == right_end {
            return if j == kv.degree + kv.intervals { 1.0 } else { 0.0 };
        }
        return if t >= lo && t < hi { 1.0 } else { 0.0 };
    }
    let left_den = xi[j + d - 1] - xi[j - 1];
    let right_den = xi[j + d] - xi[j];
    let left = if left_den == 0.0 {
        0.0
    } else {
        (t - xi[j - 1]) / left_den * cox_de_boor(kv, j, d - 1, t)
    };
    let right = if right_den == 0.0 {
        0.0
    } else {
        (xi[j + d] - t) / right_den * cox_de_boor(kv, j + 1, d - 1, t)
    };
    left + right
}

/// Evaluated basis: an `N x J` matrix with entries `B_j(t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub knots: KnotVector,
    pub matrix: DMatrix<f64>,
    pub times: Vec<f64>,
}

impl SplineBasis {
    pub fn basis_size(&self) -> usize {
        self.knots.basis_size()
    }

    /// Basis row for one instant.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }
}

/// Nonzero basis values at `t`: returns the first nonzero basis index
/// (0-based) and the `d + 1` values of `B_{s-d+1} ..= B_{s+1}` for the cell
/// `s` holding `t`.
pub(crate) fn local_basis(kv: &KnotVector, t: f64) -> (usize, Vec<f64>) {
    let d = kv.degree;
    let xi = &kv.knots;
    let s = kv.span(t);
    let mut values = vec![0.0; d + 1];
    values[0] = 1.0;
    let mut left = vec![0.0; d + 1];
    let mut right = vec![0.0; d + 1];
    for p in 1..=d {
        left[p] = t - xi[s + 1 - p];
        right[p] = xi[s + p] - t;
        let mut saved = 0.0;
        for r in 0..p {
            let den = right[r + 1] + left[p - r];
            let temp = if den == 0.0 { 0.0 } else { values[r] / den };
            values[r] = saved + right[r + 1] * temp;
            saved = left[p - r] * temp;
        }
        values[p] = saved;
    }
    (s - d, values)
}

/// Evaluates every basis function at every time.
pub fn basis_matrix(kv: &KnotVector, times: &[f64]) -> Result<SplineBasis> {
    let (lo, hi) = kv.domain();
    let bad: Vec<usize> = times
        .iter()
        .enumerate()
        .filter(|(_, &t)| !(t >= lo && t <= hi))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::OutOfDomain {
            lo,
            hi,
            count: bad.len(),
            indices: bad.into_iter().take(10).collect(),
        });
    }
    let j_total = kv.basis_size();
    let mut matrix = DMatrix::zeros(times.len(), j_total);
    for (i, &t) in times.iter().enumerate() {
        let (first, values) = local_basis(kv, t);
        for (offset, v) in values.into_iter().enumerate() {
            matrix[(i, first + offset)] = v;
        }
    }
    Ok(SplineBasis {
        knots: kv.clone(),
        matrix,
        times: times.to_vec(),
    })
}
