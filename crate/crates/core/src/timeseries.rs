//! Unequally spaced time series and their embedding on an integer grid.
//!
//! Observation instants are kept in their native unit (days) and values in
//! theirs (magnitudes). A series sampled from an underlying regular cadence
//! can be embedded on the grid `t0 + k * delta`, `k = 1, 2, ...`, which is the
//! index set the spectral estimator works with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative grid tolerance used when the caller does not supply one.
pub const DEFAULT_GRID_TOL_FACTOR: f64 = 1e-6;

/// Validated observation times and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    grid: Option<GridEmbedding>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input, length mismatches,
    /// non-finite entries and non-increasing times.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let ts = Self {
            times,
            values,
            grid: None,
        };
        ts.validate()?;
        Ok(ts)
    }

    /// Checks every invariant of the series.
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                times: self.times.len(),
                values: self.values.len(),
            });
        }
        if self.times.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, (t, v)) in self.times.iter().zip(&self.values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneTimes {
                    index: i + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        if let Some(grid) = &self.grid {
            if grid.indices.len() != self.times.len() {
                return Err(Error::ShapeMismatch(format!(
                    "grid embedding has {} indices for {} observations",
                    grid.indices.len(),
                    self.times.len()
                )));
            }
            for (i, (&t, &k)) in self.times.iter().zip(&grid.indices).enumerate() {
                let offset = (t - grid.time_of(k)).abs();
                if offset > grid.tol {
                    return Err(Error::GridMismatch {
                        index: i,
                        time: t,
                        offset,
                        tol: grid.tol,
                    });
                }
            }
        }
        Ok(())
    }

    /// Attaches a grid embedding after checking the times against it.
    pub fn with_grid(mut self, t0: f64, delta: f64, grid_tol: Option<f64>) -> Result<Self> {
        let tol = grid_tol.unwrap_or(delta * DEFAULT_GRID_TOL_FACTOR);
        self.grid = Some(embed_on_grid(&self, t0, delta, tol)?);
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&GridEmbedding> {
        self.grid.as_ref()
    }

    /// Same times, new values (e.g. residuals of a fit).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let ts = Self {
            times: self.times.clone(),
            values,
            grid: self.grid.clone(),
        };
        ts.validate()?;
        Ok(ts)
    }

    /// Time span `t_N - t_1`.
    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }
}

/// Integer indices `k_i` with `t_i = t0 + k_i * delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEmbedding {
    /// Strictly increasing positive indices, one per observation.
    pub indices: Vec<usize>,
    /// Largest index; the number of grid frequencies used downstream.
    pub n_grid: usize,
    pub t0: f64,
    pub delta: f64,
    /// Tolerance the embedding was checked against.
    pub tol: f64,
}

impl GridEmbedding {
    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.delta
    }

    /// Grid instants of the embedded observations.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.indices.iter().map(|&k| self.time_of(k)).collect()
    }

    /// True when every grid point `1..=n_grid` is observed.
    pub fn is_complete(&self) -> bool {
        self.indices.len() == self.n_grid
    }
}

/// Assigns each observation to its nearest grid index
/// `round((t_i - t0) / delta)`.
pub fn embed_on_grid(ts: &TimeSeries, t0: f64, delta: f64, grid_tol: f64) -> Result<GridEmbedding> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {delta}"
        )));
    }
    if !(grid_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid tolerance must be non-negative, got {grid_tol}"
        )));
    }
    let mut indices = Vec::with_capacity(ts.len());
    let mut prev: Option<i64> = None;
    for (i, &t) in ts.times().iter().enumerate() {
        let k = ((t - t0) / delta).round();
        let offset = (t - (t0 + k * delta)).abs();
        if offset > grid_tol {
            return Err(Error::GridMismatch {
                index: i,
                time: t,
                offset,
                tol: grid_tol,
            });
        }
        let k = k as i64;
        if k < 1 {
            return Err(Error::GridMismatch {
                index: i,
                time: t,
                offset: t - t0,
                tol: grid_tol,
            });
        }
        if let Some(p) = prev {
            if k <= p {
                return Err(Error::IndexCollision {
                    first: i - 1,
                    second: i,
                    grid_index: k,
                });
            }
        }
        prev = Some(k);
        indices.push(k as usize);
    }
    let n_grid = *indices.last().ok_or(Error::EmptySeries)?;
    Ok(GridEmbedding {
        indices,
        n_grid,
        t0,
        delta,
        tol: grid_tol,
    })
}

/// Maps times affinely onto `[0, 1]`.
pub fn rescale_time(ts: &TimeSeries) -> Result<Vec<f64>> {
    let times = ts.times();
    if times.len() < 2 {
        return Err(Error::DegenerateSpan(times[0]));
    }
    let first = times[0];
    let span = ts.span();
    if !(span > 0.0) {
        return Err(Error::DegenerateSpan(first));
    }
    let mut out: Vec<f64> = times.iter().map(|&t| (t - first) / span).collect();
    let last = out.len() - 1;
    out[0] = 0.0;
    out[last] = 1.0;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_series_passes() {
        let ts = TimeSeries::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        assert_eq!(ts.len(), 3);
    }

    #[test]
    fn duplicate_instant_rejected() {
        let err = TimeSeries::new(vec![1.0, 1.0, 3.0], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTimes { index: 1, .. }));
    }

    #[test]
    fn decreasing_instant_rejected() {
        let err = TimeSeries::new(vec![1.0, 3.0, 2.0], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTimes { index: 2, .. }));
    }

    #[test]
    fn length_mismatch_rejected() {
        let err = TimeSeries::new(vec![1.0, 2.0], vec![0.0; 3]).unwrap_err();
        assert_eq!(err, Error::LengthMismatch { times: 2, values: 3 });
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(TimeSeries::new(vec![], vec![]).unwrap_err(), Error::EmptySeries);
    }

    #[test]
    fn embeds_block_sampled_grid() {
        let ts = TimeSeries::new(vec![1.0, 1.33, 1.99], vec![0.0; 3]).unwrap();
        let g = embed_on_grid(&ts, 0.67, 0.33, 1e-9).unwrap();
        assert_eq!(g.indices, vec![1, 2, 4]);
        assert_eq!(g.n_grid, 4);
        assert!(!g.is_complete());
    }

    #[test]
    fn embeds_exact_unit_grid() {
        let ts = TimeSeries::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        let g = embed_on_grid(&ts, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(g.indices, vec![1, 2, 3]);
        assert!(g.is_complete());
    }

    #[test]
    fn off_grid_time_rejected() {
        let ts = TimeSeries::new(vec![1.0, 1.5], vec![0.0; 2]).unwrap();
        let err = embed_on_grid(&ts, 0.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::GridMismatch { index: 1, .. }));
    }

    #[test]
    fn collision_rejected() {
        let ts = TimeSeries::new(vec![1.0, 1.2], vec![0.0; 2]).unwrap();
        let err = embed_on_grid(&ts, 0.0, 1.0, 0.3).unwrap_err();
        assert!(matches!(err, Error::IndexCollision { grid_index: 1, .. }));
    }

    #[test]
    fn origin_after_first_time_rejected() {
        let ts = TimeSeries::new(vec![1.0, 2.0], vec![0.0; 2]).unwrap();
        assert!(embed_on_grid(&ts, 1.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn reconstruct_round_trips() {
        let times: Vec<f64> = [3usize, 4, 9, 12].iter().map(|&k| 0.5 + k as f64 * 0.25).collect();
        let ts = TimeSeries::new(times.clone(), vec![0.0; 4]).unwrap();
        let g = embed_on_grid(&ts, 0.5, 0.25, 1e-12).unwrap();
        for (a, b) in g.reconstruct().iter().zip(&times) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn with_grid_attaches_embedding() {
        let ts = TimeSeries::new(vec![1.0, 2.0, 4.0], vec![0.0; 3])
            .unwrap()
            .with_grid(0.0, 1.0, None)
            .unwrap();
        assert_eq!(ts.grid().unwrap().n_grid, 4);
    }

    #[test]
    fn rescale_examples() {
        let r = |t: Vec<f64>| rescale_time(&TimeSeries::new(t.clone(), vec![0.0; t.len()]).unwrap()).unwrap();
        assert_eq!(r(vec![2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(r(vec![0.0, 1.0]), vec![0.0, 1.0]);
        assert_eq!(r(vec![0.0, 1.0, 10.0]), vec![0.0, 0.1, 1.0]);
    }

    #[test]
    fn rescale_single_point_is_degenerate() {
        let ts = TimeSeries::new(vec![5.0], vec![0.0]).unwrap();
        assert_eq!(rescale_time(&ts).unwrap_err(), Error::DegenerateSpan(5.0));
    }
}
