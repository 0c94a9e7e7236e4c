//! Spectral density estimation for series observed on a subset of a regular
//! grid.
//!
//! With observations at grid indices `I` (a subset of `1..=N_I`) the
//! periodogram at the Fourier frequencies is a circular convolution of the
//! spectral density with the spectral window of the sampling pattern. The
//! deconvolution estimator divides the two discrete Fourier transforms and
//! transforms back.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{GridEmbedding, TimeSeries};

/// Relative floor below which a window-transform entry counts as zero.
pub const DECONV_FLOOR: f64 = 1e-12;
/// Largest tolerated imaginary part of the deconvolved spectrum, relative to
/// its largest real part.
pub const IMAG_TOL: f64 = 1e-6;
/// Default max/min ratio under which a spectrum counts as flat.
pub const DEFAULT_FLAT_RATIO: f64 = 3.0;

/// Fourier frequencies `lambda_j = 2 pi j / (N_I delta)`, `j = 1..=N_I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub n_grid: usize,
    pub delta: f64,
    pub lambdas: Vec<f64>,
}

impl FourierGrid {
    pub fn new(n_grid: usize, delta: f64) -> Result<Self> {
        if n_grid == 0 {
            return Err(Error::InvalidParameter("Fourier grid needs at least one point".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {delta}")));
        }
        let step = 2.0 * PI / (n_grid as f64 * delta);
        let lambdas = (1..=n_grid).map(|j| j as f64 * step).collect();
        Ok(Self { n_grid, delta, lambdas })
    }

    pub fn from_embedding(g: &GridEmbedding) -> Result<Self> {
        Self::new(g.n_grid, g.delta)
    }

    /// Ordinary frequencies `f_j = j / (N_I delta)`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l / (2.0 * PI)).collect()
    }

    /// Spacing between consecutive angular frequencies.
    pub fn step(&self) -> f64 {
        2.0 * PI / (self.n_grid as f64 * self.delta)
    }

    /// Period of the spectrum in `lambda`, `2 pi / delta`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.delta
    }
}

/// `|sum_k x_k exp(i lambda t_k)|^2`.
pub fn periodogram(values: &[f64], times: &[f64], lambda: f64) -> Result<f64> {
    if values.len() != times.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} times",
            values.len(),
            times.len()
        )));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (&x, &t) in values.iter().zip(times) {
        let (s, c) = (lambda * t).sin_cos();
        re += x * c;
        im += x * s;
    }
    Ok(re * re + im * im)
}

/// `|sum_k exp(i lambda t_k)|^2`; real and non-negative.
pub fn spectral_window(times: &[f64], lambda: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &t in times {
        let (s, c) = (lambda * t).sin_cos();
        re += c;
        im += s;
    }
    re * re + im * im
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// `h_k = sum_{j=1}^m g_j exp(-i k j 2 pi / m)`, `k = 1..=m`; slot `k - 1`
/// of the input and output holds index `k`.
pub fn dft(g: &[Complex64]) -> Vec<Complex64> {
    let m = g.len();
    if m == 0 {
        return Vec::new();
    }
    // index m is congruent to 0
    let mut a: Vec<Complex64> = (0..m).map(|r| g[(r + m - 1) % m]).collect();
    fft_in_place(&mut a, false);
    (1..=m).map(|k| a[k % m]).collect()
}

/// Inverse of [`dft`]: `g_j = m^{-1} sum_{k=1}^m h_k exp(i k j 2 pi / m)`.
pub fn idft(h: &[Complex64]) -> Vec<Complex64> {
    let m = h.len();
    if m == 0 {
        return Vec::new();
    }
    let mut a: Vec<Complex64> = (0..m).map(|r| h[(r + m - 1) % m]).collect();
    fft_in_place(&mut a, true);
    let scale = 1.0 / m as f64;
    (1..=m).map(|j| a[j % m] * scale).collect()
}

/// Periodogram and window of an embedded series on its Fourier grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramEstimate {
    pub grid: FourierGrid,
    pub values: Vec<f64>,
    pub window: Vec<f64>,
}

/// `|sum_k x_k exp(i 2 pi j k / N_I)|^2` for `j = 1..=N_I` by one FFT. The
/// grid origin only contributes a common phase and drops out of the modulus.
fn grid_power(indices: &[usize], values: &[f64], n_grid: usize) -> Vec<f64> {
    let mut a = vec![Complex64::new(0.0, 0.0); n_grid];
    for (&k, &x) in indices.iter().zip(values) {
        a[k % n_grid] += x;
    }
    fft_in_place(&mut a, true);
    (1..=n_grid).map(|j| a[j % n_grid].norm_sqr()).collect()
}

/// Periodogram and spectral window at every Fourier frequency of the
/// series' grid embedding.
pub fn grid_periodogram(ts: &TimeSeries) -> Result<PeriodogramEstimate> {
    let emb = ts.grid().ok_or_else(|| {
        Error::InvalidParameter("series has no grid embedding; supply t0 and delta".into())
    })?;
    let grid = FourierGrid::from_embedding(emb)?;
    let values = grid_power(&emb.indices, ts.values(), emb.n_grid);
    let window = grid_power(&emb.indices, &vec![1.0; emb.indices.len()], emb.n_grid);
    Ok(PeriodogramEstimate { grid, values, window })
}

/// The same quantities by direct summation over the actual times.
pub fn direct_periodogram(ts: &TimeSeries, grid: &FourierGrid) -> Result<PeriodogramEstimate> {
    let mut values = Vec::with_capacity(grid.n_grid);
    let mut window = Vec::with_capacity(grid.n_grid);
    for &l in &grid.lambdas {
        values.push(periodogram(ts.values(), ts.times(), l)?);
        window.push(spectral_window(ts.times(), l));
    }
    Ok(PeriodogramEstimate {
        grid: grid.clone(),
        values,
        window,
    })
}

/// Pointwise mean of periodograms sharing one sampling pattern.
pub fn average_periodograms(items: &[PeriodogramEstimate]) -> Result<PeriodogramEstimate> {
    let first = items.first().ok_or(Error::TooFewReplicates(0))?;
    let n = first.values.len();
    let mut mean = vec![0.0; n];
    for p in items {
        if p.grid != first.grid || p.window != first.window {
            return Err(Error::ShapeMismatch("periodograms come from different sampling patterns".into()));
        }
        for (m, v) in mean.iter_mut().zip(&p.values) {
            *m += v;
        }
    }
    let scale = 1.0 / items.len() as f64;
    mean.iter_mut().for_each(|m| *m *= scale);
    Ok(PeriodogramEstimate {
        grid: first.grid.clone(),
        values: mean,
        window: first.window.clone(),
    })
}

/// `P(lambda_j) = N_I / (2 pi) * IDFT{ DFT{I} / DFT{W} }[j]`.
pub fn deconvolve(values: &[f64], window: &[f64]) -> Result<Vec<f64>> {
    let m = values.len();
    if window.len() != m {
        return Err(Error::ShapeMismatch(format!("{m} periodogram values, {} window values", window.len())));
    }
    let to_c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    let fi = dft(&to_c(values));
    let fw = dft(&to_c(window));
    let max_w = fw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = DECONV_FLOOR * max_w;
    for (k, z) in fw.iter().enumerate() {
        if !(z.norm() >= floor) || max_w == 0.0 {
            return Err(Error::WindowTransformUnderflow {
                index: k + 1,
                modulus: z.norm(),
                floor,
            });
        }
    }
    let ratio: Vec<Complex64> = fi.iter().zip(&fw).map(|(a, b)| a / b).collect();
    let scale = m as f64 / (2.0 * PI);
    let p: Vec<Complex64> = idft(&ratio).into_iter().map(|z| z * scale).collect();
    let max_re = p.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let max_im = p.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im > IMAG_TOL * max_re {
        return Err(Error::ImaginaryResidue {
            max_imag: max_im,
            max_real: max_re,
        });
    }
    Ok(p.into_iter().map(|z| z.re).collect())
}

pub fn deconvolve_psd(perio: &PeriodogramEstimate) -> Result<Vec<f64>> {
    deconvolve(&perio.values, &perio.window)
}

/// Standard Gaussian density.
pub fn gaussian_kernel(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// Weights `c_l = dlambda * sum_n K_h(l dlambda + n * period)` for circular
/// lags `l = 0..N_I-1`, the Gaussian kernel wrapped onto one period.
fn wrapped_kernel(grid: &FourierGrid, h: f64) -> Vec<f64> {
    let m = grid.n_grid;
    let step = grid.step();
    let period = grid.period();
    let images = (10.0 * h / period).ceil() as i64 + 1;
    (0..m)
        .map(|l| {
            let d = l as f64 * step;
            let mut s = 0.0;
            for n in -images..=images {
                let x = d + n as f64 * period;
                s += gaussian_kernel(x / h) / h;
            }
            s * step
        })
        .collect()
}

/// `P~(lambda_j) = N_lambda^{-1} sum_i K_h(lambda_j - lambda_i) P(lambda_i)`.
///
/// `N_lambda = N_I delta / (2 pi)` is the number of grid points per unit of
/// `lambda`, so the weights integrate to one; distances wrap around the
/// period `2 pi / delta` of the spectrum.
pub fn smooth_psd(raw: &[f64], grid: &FourierGrid, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    let m = grid.n_grid;
    if raw.len() != m {
        return Err(Error::ShapeMismatch(format!("{} values on a grid of {m}", raw.len())));
    }
    let mut c: Vec<Complex64> = wrapped_kernel(grid, h).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let mut x: Vec<Complex64> = raw.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut c, false);
    fft_in_place(&mut x, false);
    x.iter_mut().zip(&c).for_each(|(a, b)| *a *= b);
    fft_in_place(&mut x, true);
    let scale = 1.0 / m as f64;
    Ok(x.iter().map(|v| v.re * scale).collect())
}

/// Deconvolved and smoothed spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub periodogram: PeriodogramEstimate,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub bandwidth: f64,
}

impl PsdEstimate {
    pub fn grid(&self) -> &FourierGrid {
        &self.periodogram.grid
    }
}

/// Deconvolves a (possibly replicate-averaged) periodogram and smooths the
/// result. Both steps are circular convolutions on the same grid, so this
/// equals deconvolving the smoothed periodogram.
pub fn estimate_from_periodogram(perio: PeriodogramEstimate, bandwidth: f64) -> Result<PsdEstimate> {
    let raw = deconvolve_psd(&perio)?;
    let smoothed = smooth_psd(&raw, &perio.grid, bandwidth)?;
    Ok(PsdEstimate {
        periodogram: perio,
        raw,
        smoothed,
        bandwidth,
    })
}

/// Full pipeline for one embedded series.
pub fn estimate_psd(ts: &TimeSeries, bandwidth: f64) -> Result<PsdEstimate> {
    estimate_from_periodogram(grid_periodogram(ts)?, bandwidth)
}

/// AR(2) coefficients, innovation variance and sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar2Params {
    pub phi1: f64,
    pub phi2: f64,
    pub sigma2: f64,
    pub delta: f64,
}

impl Ar2Params {
    pub fn new(phi1: f64, phi2: f64, sigma2: f64, delta: f64) -> Result<Self> {
        let p = Self { phi1, phi2, sigma2, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.phi1, self.phi2);
        if !(b.abs() < 1.0 && a + b < 1.0 && b - a < 1.0) {
            return Err(Error::NonStationary { phi1: a, phi2: b });
        }
        if !(self.sigma2 > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(2) needs positive variance and spacing, got {} and {}",
                self.sigma2, self.delta
            )));
        }
        Ok(())
    }

    /// Angular frequency of the spectral peak, when the bracket has an
    /// interior minimum.
    pub fn peak_lambda(&self) -> Option<f64> {
        if self.phi2 == 0.0 {
            return None;
        }
        let c = self.phi1 * (self.phi2 - 1.0) / (4.0 * self.phi2);
        (c.abs() <= 1.0).then(|| c.acos() / self.delta)
    }
}

/// `sigma2 / (2 pi)` over
/// `1 + phi1^2 + phi2^2 + 2 phi2 + 2 (phi1 phi2 - phi1) cos(l d) - 4 phi2 cos^2(l d)`.
pub fn ar2_psd(p: &Ar2Params, lambda: f64) -> Result<f64> {
    p.validate()?;
    let c = (lambda * p.delta).cos();
    let (a, b) = (p.phi1, p.phi2);
    let bracket = 1.0 + a * a + b * b + 2.0 * b + 2.0 * (a * b - a) * c - 4.0 * b * c * c;
    Ok(p.sigma2 / (2.0 * PI) / bracket)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenessReport {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub points: usize,
    pub ratio: f64,
    pub cv: f64,
    pub flat_ratio: f64,
    pub white: bool,
}

/// Flatness of the smoothed spectrum over `lambda_lo <= lambda <= lambda_hi`.
pub fn whiteness_check(psd: &PsdEstimate, lambda_lo: f64, lambda_hi: f64, flat_ratio: f64) -> Result<WhitenessReport> {
    if !(lambda_hi >= lambda_lo) {
        return Err(Error::BadRange { lo: lambda_lo, hi: lambda_hi });
    }
    let vals: Vec<(f64, f64)> = psd
        .grid()
        .lambdas
        .iter()
        .zip(&psd.smoothed)
        .filter(|(l, _)| **l >= lambda_lo && **l <= lambda_hi)
        .map(|(l, v)| (*l, *v))
        .collect();
    if vals.is_empty() {
        return Err(Error::EmptyBand { lo: lambda_lo, hi: lambda_hi });
    }
    if let Some(&(lambda, value)) = vals.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositivePsd { lambda, value });
    }
    let n = vals.len() as f64;
    let max = vals.iter().map(|v| v.1).fold(f64::MIN, f64::max);
    let min = vals.iter().map(|v| v.1).fold(f64::MAX, f64::min);
    let mean = vals.iter().map(|v| v.1).sum::<f64>() / n;
    let var = vals.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / n;
    let ratio = max / min;
    let cv = if max == min { 0.0 } else { var.sqrt() / mean };
    Ok(WhitenessReport {
        lambda_lo,
        lambda_hi,
        points: vals.len(),
        ratio,
        cv,
        flat_ratio,
        white: ratio <= flat_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn brute_periodogram(x: &[f64], t: &[f64], l: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..x.len() {
            for j in 0..x.len() {
                s += x[k] * x[j] * (l * (t[k] - t[j])).cos();
            }
        }
        s
    }

    fn brute_dft(g: &[Complex64], sign: f64) -> Vec<Complex64> {
        let m = g.len();
        (1..=m)
            .map(|k| {
                (1..=m)
                    .map(|j| g[j - 1] * Complex64::from_polar(1.0, sign * 2.0 * PI * (k * j) as f64 / m as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn periodogram_examples() {
        assert_eq!(periodogram(&[3.0], &[1.7], 2.0).unwrap(), 9.0);
        assert_abs_diff_eq!(periodogram(&[2.0; 5], &[0.1, 0.5, 0.9, 1.3, 2.0], 0.0).unwrap(), 100.0, epsilon = 1e-12);
        assert!(periodogram(&[1.0], &[1.0, 2.0], 1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 10.0).collect();
        let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
        for l in [0.3, 1.7, 12.0] {
            assert_abs_diff_eq!(periodogram(&x, &t, l).unwrap(), brute_periodogram(&x, &t, l), epsilon = 1e-10);
        }
    }

    #[test]
    fn window_examples() {
        assert_abs_diff_eq!(spectral_window(&[0.3, 1.1, 2.0, 2.5, 3.0, 4.4, 9.0], 0.0), 49.0, epsilon = 1e-12);
        let n = 12;
        let delta = 0.5;
        let t: Vec<f64> = (1..=n).map(|k| 0.2 + k as f64 * delta).collect();
        for m in 1..n {
            let l = 2.0 * PI * m as f64 / (n as f64 * delta);
            assert!(spectral_window(&t, l).abs() < 1e-8);
        }
        let t5 = [0.1, 0.7, 1.9, 2.2, 3.3];
        assert_abs_diff_eq!(spectral_window(&t5, 1.3), brute_periodogram(&[1.0; 5], &t5, 1.3), epsilon = 1e-10);
    }

    #[test]
    fn dft_constant_sequence() {
        let h = dft(&[Complex64::new(1.0, 0.0); 4]);
        for (k, z) in h.iter().enumerate() {
            let expected = if k == 3 { 4.0 } else { 0.0 };
            assert_abs_diff_eq!(z.re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dft_matches_direct_sum_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g: Vec<Complex64> = (0..17).map(|_| Complex64::new(rng.random::<f64>(), rng.random::<f64>())).collect();
        let h = dft(&g);
        for (a, b) in h.iter().zip(brute_dft(&g, -1.0)) {
            assert!((a - b).norm() < 1e-10);
        }
        let back = idft(&h);
        for (a, b) in back.iter().zip(&g) {
            assert!((a - b).norm() < 1e-10);
        }
        let inv_direct: Vec<Complex64> = brute_dft(&h, 1.0).into_iter().map(|z| z / 17.0).collect();
        for (a, b) in back.iter().zip(&inv_direct) {
            assert!((a - b).norm() < 1e-10);
        }
        let e_g: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        let e_h: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(e_h, 17.0 * e_g, epsilon = 1e-8);
    }

    fn embedded(indices: &[usize], values: Vec<f64>, t0: f64, delta: f64) -> TimeSeries {
        let times = indices.iter().map(|&k| t0 + k as f64 * delta).collect();
        TimeSeries::new(times, values).unwrap().with_grid(t0, delta, None).unwrap()
    }

    #[test]
    fn grid_periodogram_matches_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let indices: Vec<usize> = (1..=60).filter(|_| rng.random::<f64>() < 0.6).chain([61]).collect();
        let values = indices.iter().map(|_| rng.sample(StandardNormal)).collect();
        let ts = embedded(&indices, values, 0.67, 0.33);
        let fast = grid_periodogram(&ts).unwrap();
        let slow = direct_periodogram(&ts, &fast.grid).unwrap();
        for j in 0..fast.grid.n_grid {
            assert_abs_diff_eq!(fast.values[j], slow.values[j], epsilon = 1e-9 * (1.0 + slow.values[j]));
            assert_abs_diff_eq!(fast.window[j], slow.window[j], epsilon = 1e-9 * (1.0 + slow.window[j]));
        }
        let n = indices.len() as f64;
        assert_abs_diff_eq!(fast.window[fast.grid.n_grid - 1], n * n, epsilon = 1e-8);
    }

    #[test]
    fn full_grid_deconvolution_is_scaled_periodogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 64;
        let indices: Vec<usize> = (1..=n).collect();
        let values = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let ts = embedded(&indices, values, 0.0, 1.0);
        let perio = grid_periodogram(&ts).unwrap();
        let raw = deconvolve_psd(&perio).unwrap();
        let max = perio.values.iter().fold(0.0f64, |a, &b| a.max(b));
        for j in 0..n {
            let expected = perio.values[j] / (2.0 * PI * n as f64);
            assert!((raw[j] - expected).abs() <= 1e-8 * expected.abs() + 1e-14 * max);
        }
    }

    #[test]
    fn white_noise_full_grid_is_flat_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 32;
        let sigma2: f64 = 2.0;
        let indices: Vec<usize> = (1..=n).collect();
        let reps: Vec<PeriodogramEstimate> = (0..4000)
            .map(|_| {
                let v = (0..n).map(|_| sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
                grid_periodogram(&embedded(&indices, v, 0.0, 1.0)).unwrap()
            })
            .collect();
        let mean = average_periodograms(&reps).unwrap();
        let raw = deconvolve_psd(&mean).unwrap();
        let target = sigma2 / (2.0 * PI);
        for v in raw {
            // one replicate has relative sd 1; 4000 of them about 1.6 percent
            assert!((v / target - 1.0).abs() < 0.08, "{v} vs {target}");
        }
    }

    #[test]
    fn window_transform_underflow_detected() {
        // two observations three steps apart on a grid of 6: lag-3 structure
        // makes several window-transform entries vanish
        let ts = embedded(&[3, 6], vec![1.0, -1.0], 0.0, 1.0);
        let perio = grid_periodogram(&ts).unwrap();
        assert!(matches!(deconvolve_psd(&perio), Err(Error::WindowTransformUnderflow { .. })));
    }

    #[test]
    fn smoothing_constant_and_normalization() {
        let grid = FourierGrid::new(200, 0.33).unwrap();
        let h = 0.3;
        let flat = smooth_psd(&vec![2.5; 200], &grid, h).unwrap();
        // weights integrate to one
        flat.iter().for_each(|v| assert_abs_diff_eq!(*v, 2.5, epsilon = 1e-9));
        let raw: Vec<f64> = (0..200).map(|i| 2.0 + (0.1 * i as f64).sin() + i as f64 / 100.0).collect();
        let sm = smooth_psd(&raw, &grid, h).unwrap();
        let n_lambda = grid.n_grid as f64 * grid.delta / (2.0 * PI);
        for (j, v) in sm.iter().enumerate() {
            // direct sum with wrapped distances
            let mut s = 0.0;
            for i in 0..grid.n_grid {
                let mut d = (grid.lambdas[j] - grid.lambdas[i]).rem_euclid(grid.period());
                if d > grid.period() / 2.0 {
                    d -= grid.period();
                }
                s += gaussian_kernel(d / h) / h * raw[i];
            }
            assert_abs_diff_eq!(*v, s / n_lambda, epsilon = 1e-12);
        }
    }

    #[test]
    fn tiny_bandwidth_keeps_only_the_center_weight() {
        let grid = FourierGrid::new(50, 1.0).unwrap();
        let raw: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let h = 1e-6 * grid.step();
        let sm = smooth_psd(&raw, &grid, h).unwrap();
        let n_lambda = grid.n_grid as f64 * grid.delta / (2.0 * PI);
        for j in 0..50 {
            let expected = gaussian_kernel(0.0) / (h * n_lambda) * raw[j];
            assert_abs_diff_eq!(sm[j], expected, epsilon = 1e-12 * expected);
        }
        assert!(smooth_psd(&raw, &grid, 0.0).is_err());
        assert!(smooth_psd(&raw, &grid, 7.2).is_ok());
    }

    #[test]
    fn smoothing_commutes_with_deconvolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let indices: Vec<usize> = (1..=80).filter(|k| k % 10 < 6).collect();
        let values = indices.iter().map(|_| rng.sample(StandardNormal)).collect();
        let ts = embedded(&indices, values, 0.67, 0.33);
        let perio = grid_periodogram(&ts).unwrap();
        let a = smooth_psd(&deconvolve_psd(&perio).unwrap(), &perio.grid, 0.3).unwrap();
        let smoothed_i = smooth_psd(&perio.values, &perio.grid, 0.3).unwrap();
        let smoothed_w = perio.window.clone();
        let b = deconvolve(&smoothed_i, &smoothed_w).unwrap();
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn ar2_white_noise_and_validation() {
        let p = Ar2Params::new(0.0, 0.0, 3.0, 1.0).unwrap();
        for l in [0.1, 1.0, 3.0] {
            assert_abs_diff_eq!(ar2_psd(&p, l).unwrap(), 3.0 / (2.0 * PI), epsilon = 1e-15);
        }
        assert!(matches!(Ar2Params::new(0.5, 0.6, 1.0, 1.0), Err(Error::NonStationary { .. })));
        assert!(matches!(Ar2Params::new(0.0, -1.0, 1.0, 1.0), Err(Error::NonStationary { .. })));
    }

    #[test]
    fn ar2_peak_location() {
        let p = Ar2Params::new(1.318, -0.634, 289.2, 0.33).unwrap();
        let star = p.peak_lambda().unwrap();
        let grid: Vec<f64> = (0..200_000).map(|i| i as f64 * (PI / 0.33) / 200_000.0).collect();
        let argmax = grid
            .iter()
            .copied()
            .max_by(|a, b| ar2_psd(&p, *a).unwrap().total_cmp(&ar2_psd(&p, *b).unwrap()))
            .unwrap();
        assert_abs_diff_eq!(argmax, star, epsilon = 1e-4);
    }

    #[test]
    fn whiteness_examples() {
        let grid = FourierGrid::new(40, 1.0).unwrap();
        let mk = |smoothed: Vec<f64>| PsdEstimate {
            periodogram: PeriodogramEstimate {
                grid: grid.clone(),
                values: vec![0.0; 40],
                window: vec![0.0; 40],
            },
            raw: smoothed.clone(),
            smoothed,
            bandwidth: 1.0,
        };
        let flat = whiteness_check(&mk(vec![1.3; 40]), 0.0, PI, DEFAULT_FLAT_RATIO).unwrap();
        assert_eq!(flat.ratio, 1.0);
        assert_eq!(flat.cv, 0.0);
        assert!(flat.white);

        let p = Ar2Params::new(1.318, -0.634, 289.2, 1.0).unwrap();
        let ar: Vec<f64> = grid.lambdas.iter().map(|&l| ar2_psd(&p, l).unwrap()).collect();
        let rep = whiteness_check(&mk(ar), 0.0, 2.0 * PI, DEFAULT_FLAT_RATIO).unwrap();
        assert!(rep.ratio > 10.0 * DEFAULT_FLAT_RATIO);
        assert!(!rep.white);

        let mut bad = vec![1.0; 40];
        bad[3] = -0.1;
        assert!(matches!(whiteness_check(&mk(bad), 0.0, PI, 3.0), Err(Error::NonPositivePsd { .. })));
        assert!(matches!(whiteness_check(&mk(vec![1.0; 40]), 0.01, 0.02, 3.0), Err(Error::EmptyBand { .. })));
    }

    proptest! {
        #[test]
        fn ar2_matches_transfer_function(phi1 in -1.99f64..1.99, phi2 in -0.99f64..0.99, lambda in 0.0f64..10.0, delta in 0.05f64..2.0) {
            prop_assume!(phi1 + phi2 < 0.999 && phi2 - phi1 < 0.999);
            let p = Ar2Params::new(phi1, phi2, 1.7, delta).unwrap();
            let z = Complex64::from_polar(1.0, -lambda * delta);
            let transfer = Complex64::new(1.0, 0.0) - phi1 * z - phi2 * z * z;
            // near the unit circle both forms lose digits to cancellation
            prop_assume!(transfer.norm_sqr() >= 1e-2);
            let oracle = 1.7 / (2.0 * PI) / transfer.norm_sqr();
            let got = ar2_psd(&p, lambda).unwrap();
            prop_assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0), "{} vs {}", got, oracle);
        }

        #[test]
        fn periodogram_equals_double_sum(seed in 0u64..1000, n in 1usize..12, lambda in -20.0f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 30.0).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let a = periodogram(&x, &t, lambda).unwrap();
            prop_assert!((a - brute_periodogram(&x, &t, lambda)).abs() <= 1e-10 * (1.0 + a));
            prop_assert!(spectral_window(&t, lambda) >= 0.0);
            prop_assert!((spectral_window(&t, 0.0) - (n * n) as f64).abs() < 1e-9);
        }
    }
}
