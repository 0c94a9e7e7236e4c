//! Seeded generators for the simulation designs and modulation signals.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the caller's seed;
//! replicate `i` of a batch uses `seed + i`.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::Components;
use crate::spectral::Ar2Params;
use crate::timeseries::TimeSeries;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn deg(x: f64) -> f64 {
    x * PI / 180.0
}

/// `n` sorted draws from `U(lo, hi)`.
pub fn sample_uniform_times(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BadRange { lo, hi });
    }
    let mut r = rng(seed);
    let mut t: Vec<f64> = (0..n).map(|_| r.random_range(lo..hi)).collect();
    t.sort_by(f64::total_cmp);
    Ok(t)
}

fn gaussian_noise(r: &mut ChaCha8Rng, n: usize, sigma2: f64) -> Vec<f64> {
    let sd = sigma2.max(0.0).sqrt();
    (0..n).map(|_| sd * r.sample::<f64, _>(StandardNormal)).collect()
}

/// A simulated series with its noiseless ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub series: TimeSeries,
    pub frequencies: Vec<f64>,
    pub truth: Components,
}

/// Assembles the truth at `times` from trend and amplitude functions
/// (`amps` holds `g_{1,1..K}` then `g_{2,1..K}`).
fn truth_at(times: &[f64], freqs: &[f64], trend: impl Fn(f64) -> f64, amps: impl Fn(f64) -> Vec<f64>) -> Components {
    let k = freqs.len();
    let mut tr = Vec::with_capacity(times.len());
    let mut amplitudes = vec![Vec::with_capacity(times.len()); 2 * k];
    let mut mean = Vec::with_capacity(times.len());
    for &t in times {
        let m = trend(t);
        let g = amps(t);
        let mut mu = m;
        for (i, f) in freqs.iter().enumerate() {
            let (s, c) = (2.0 * PI * f * t).sin_cos();
            mu += g[i] * c + g[k + i] * s;
        }
        tr.push(m);
        for (row, v) in amplitudes.iter_mut().zip(&g) {
            row.push(*v);
        }
        mean.push(mu);
    }
    Components {
        times: times.to_vec(),
        trend: tr,
        amplitudes,
        mean,
    }
}

fn with_noise(truth: Components, freqs: Vec<f64>, sigma2: f64, r: &mut ChaCha8Rng) -> Result<Simulated> {
    let noise = gaussian_noise(r, truth.times.len(), sigma2);
    let y = truth.mean.iter().zip(&noise).map(|(m, e)| m + e).collect();
    Ok(Simulated {
        series: TimeSeries::new(truth.times.clone(), y)?,
        frequencies: freqs,
        truth,
    })
}

/// The two designs with known trend and amplitude curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    Sinusoidal,
    Polynomial,
}

impl Scenario {
    /// Frequencies in cycles per unit time.
    pub fn frequencies(&self) -> Vec<f64> {
        match self {
            Scenario::Sinusoidal => vec![20.0, 50.0],
            Scenario::Polynomial => vec![15.0, 20.0],
        }
    }

    pub fn trend(&self, t: f64) -> f64 {
        match self {
            Scenario::Sinusoidal => (2.0 * PI * t).sin(),
            Scenario::Polynomial => 0.2 * t - 5.0 * t * t + 5.5 * t.powi(3),
        }
    }

    /// `(g_{1,1}, g_{1,2}, g_{2,1}, g_{2,2})`.
    pub fn amplitudes(&self, t: f64) -> Vec<f64> {
        match self {
            Scenario::Sinusoidal => vec![
                (9.0 * PI * t).cos(),
                (4.0 * PI * t).cos(),
                (6.0 * PI * t).sin(),
                (7.0 * PI * t).sin(),
            ],
            Scenario::Polynomial => vec![
                4.0 * t.powi(3) - 5.0 * t * t,
                -t + t * t + 1.3 * t.powi(3),
                -0.5 - 0.5 * t + 2.5 * t * t - 0.5 * t.powi(3),
                0.5 + 2.0 * t * t - 3.0 * t.powi(3),
            ],
        }
    }

    pub fn truth(&self, times: &[f64]) -> Components {
        truth_at(times, &self.frequencies(), |t| self.trend(t), |t| self.amplitudes(t))
    }
}

/// `n` observations at `U(0, 1)` times with Gaussian noise of variance
/// `sigma2`.
pub fn gen_scenario(kind: Scenario, n: usize, sigma2: f64, seed: u64) -> Result<Simulated> {
    let mut r = rng(seed);
    let mut times: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    with_noise(kind.truth(&times), kind.frequencies(), sigma2, &mut r)
}

/// Demonstration signal with a slow linear trend and one harmonic at
/// `f = 0.1` whose amplitudes drift linearly and quadratically.
pub fn demo_truth(times: &[f64]) -> Components {
    truth_at(
        times,
        &[0.1],
        |t| -0.05 * t,
        |t| vec![0.0002 * t - 0.0003 * t * t, 1.0 - 0.0005 * t],
    )
}

/// `n` points on `U(0, 55)` with unit noise.
pub fn gen_demo(n: usize, sigma2: f64, seed: u64) -> Result<Simulated> {
    let mut r = rng(seed);
    let mut times: Vec<f64> = (0..n).map(|_| r.random_range(0.0..55.0)).collect();
    times.sort_by(f64::total_cmp);
    with_noise(demo_truth(&times), vec![0.1], sigma2, &mut r)
}

/// One carrier harmonic: frequency, amplitude and phase in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub freq: f64,
    pub amp: f64,
    pub phase_deg: f64,
}

/// Amplitude-modulated multi-harmonic light curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlazhkoParams {
    pub a0: f64,
    pub harmonics: Vec<Harmonic>,
    pub a_m: f64,
    pub f_m: f64,
    pub phi_m_deg: f64,
    /// Modulation depth `h = a_m / U_c`.
    pub h_depth: f64,
    pub sigma2: f64,
}

impl Default for BlazhkoParams {
    fn default() -> Self {
        let h = |freq, amp, phase_deg| Harmonic { freq, amp, phase_deg };
        Self {
            a0: 0.01,
            harmonics: vec![h(2.0, 0.401, 5.490), h(4.0, 0.171, 144.040), h(6.0, 0.133, 285.250), h(8.0, 0.097, 81.290)],
            a_m: 0.1,
            f_m: 0.05,
            phi_m_deg: 270.0,
            h_depth: 1.2,
            sigma2: 0.005,
        }
    }
}

/// First and last instants and size of the equally spaced base design.
pub const BLAZHKO_T_FIRST: f64 = 0.03819;
pub const BLAZHKO_T_LAST: f64 = 69.37847;
pub const BLAZHKO_BASE_POINTS: usize = 28799;

impl BlazhkoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_depth > 0.0) || !(self.a_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulation needs a_m > 0 and depth > 0, got {} and {}",
                self.a_m, self.h_depth
            )));
        }
        if self.harmonics.is_empty() || self.harmonics.iter().any(|h| !(h.freq > 0.0)) {
            return Err(Error::InvalidParameter("need at least one harmonic with positive frequency".into()));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance must be non-negative, got {}", self.sigma2)));
        }
        Ok(())
    }

    /// Carrier amplitude `U_c = a_m / h`.
    pub fn u_c(&self) -> f64 {
        self.a_m / self.h_depth
    }

    /// Modulating signal `U_m(t) = a_m sin(2 pi f_m t + phi_m)`.
    pub fn u_m(&self, t: f64) -> f64 {
        self.a_m * (2.0 * PI * self.f_m * t + deg(self.phi_m_deg)).sin()
    }

    /// `1 + U_m(t) / U_c`.
    pub fn factor(&self, t: f64) -> f64 {
        1.0 + self.u_m(t) / self.u_c()
    }

    /// `c(t) = a0 + sum_k a_k sin(2 pi f_k t + phi_k)`.
    pub fn carrier(&self, t: f64) -> f64 {
        self.a0
            + self
                .harmonics
                .iter()
                .map(|h| h.amp * (2.0 * PI * h.freq * t + deg(h.phase_deg)).sin())
                .sum::<f64>()
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.factor(t) * self.carrier(t)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.harmonics.iter().map(|h| h.freq).collect()
    }

    /// Trend and amplitude curves in the harmonic model. Since
    /// `sin(x + phi) = sin(phi) cos(x) + cos(phi) sin(x)`, the cosine
    /// amplitude carries `sin(phi_k)` and the sine amplitude `cos(phi_k)`.
    pub fn truth(&self, times: &[f64]) -> Components {
        truth_at(
            times,
            &self.frequencies(),
            |t| self.a0 * self.factor(t),
            |t| {
                let f = self.factor(t);
                let cos_amps = self.harmonics.iter().map(|h| h.amp * deg(h.phase_deg).sin() * f);
                let sin_amps = self.harmonics.iter().map(|h| h.amp * deg(h.phase_deg).cos() * f);
                cos_amps.chain(sin_amps).collect()
            },
        )
    }
}

/// `n` distinct instants drawn without replacement from the equally spaced
/// base design, sorted.
pub fn blazhko_times(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || n > BLAZHKO_BASE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "can draw between 1 and {BLAZHKO_BASE_POINTS} instants, asked for {n}"
        )));
    }
    let step = (BLAZHKO_T_LAST - BLAZHKO_T_FIRST) / (BLAZHKO_BASE_POINTS - 1) as f64;
    let mut r = rng(seed);
    let mut idx = sample(&mut r, BLAZHKO_BASE_POINTS, n).into_vec();
    idx.sort_unstable();
    Ok(idx
        .into_iter()
        .map(|i| {
            if i == BLAZHKO_BASE_POINTS - 1 {
                BLAZHKO_T_LAST
            } else {
                BLAZHKO_T_FIRST + i as f64 * step
            }
        })
        .collect())
}

/// Modulated light curve at `times` plus Gaussian noise.
pub fn gen_blazhko_am(p: &BlazhkoParams, times: &[f64], seed: u64) -> Result<Simulated> {
    p.validate()?;
    let mut r = rng(seed);
    with_noise(p.truth(times), p.frequencies(), p.sigma2, &mut r)
}

/// Sinusoidal carrier `U_c sin(2 pi f_c t + phi_c)`; phases in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub u_c: f64,
    pub f_c: f64,
    pub phi_c: f64,
}

/// Sinusoidal modulating signal `amp sin(2 pi f_m t + phi_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub amp: f64,
    pub f_m: f64,
    pub phi_m: f64,
}

impl Modulation {
    pub fn at(&self, t: f64) -> f64 {
        self.amp * (2.0 * PI * self.f_m * t + self.phi_m).sin()
    }
}

/// `[U_c + U_m(t)] sin(2 pi f_c t + phi_c)`.
pub fn gen_am(c: &Carrier, m: &Modulation, t: f64) -> f64 {
    (c.u_c + m.at(t)) * (2.0 * PI * c.f_c * t + c.phi_c).sin()
}

/// `U_c sin(2 pi f_c t + k_fm U_m / f_m sin(2 pi f_m t + phi_m) + phi_c)`.
pub fn gen_fm(c: &Carrier, k_fm: f64, m: &Modulation, t: f64) -> f64 {
    let dev = k_fm * m.amp / m.f_m * (2.0 * PI * m.f_m * t + m.phi_m).sin();
    c.u_c * (2.0 * PI * c.f_c * t + dev + c.phi_c).sin()
}

/// Simultaneous amplitude and frequency modulation.
pub fn gen_comb(c: &Carrier, am: &Modulation, k_fm: f64, fm: &Modulation, t: f64) -> f64 {
    let dev = k_fm * fm.amp / fm.f_m * (2.0 * PI * fm.f_m * t + fm.phi_m).sin();
    (c.u_c + am.at(t)) * (2.0 * PI * c.f_c * t + dev + c.phi_c).sin()
}

/// Multi-harmonic carrier `a0 + sum_k a_k sin(2 pi k f0 t + phi_k)` under
/// sinusoidal amplitude modulation, written as a product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAm {
    pub a0: f64,
    /// `(a_k, phi_k)` in radians for `k = 1..=K`.
    pub harmonics: Vec<(f64, f64)>,
    pub f0: f64,
    pub u_c: f64,
    pub modulation: Modulation,
}

impl HarmonicAm {
    pub fn product_form(&self, t: f64) -> f64 {
        let carrier: f64 = self.a0
            + self
                .harmonics
                .iter()
                .enumerate()
                .map(|(i, (a, phi))| a * (2.0 * PI * (i + 1) as f64 * self.f0 * t + phi).sin())
                .sum::<f64>();
        (1.0 + self.modulation.at(t) / self.u_c) * carrier
    }

    /// Carrier plus a modulated trend term and two sidebands per harmonic at
    /// `k f0 - f_m` and `k f0 + f_m`.
    pub fn sideband_form(&self, t: f64) -> f64 {
        let h = self.modulation.amp / self.u_c;
        let (fm, phm) = (self.modulation.f_m, self.modulation.phi_m);
        let mut s = self.a0 + self.a0 * h * (2.0 * PI * fm * t + phm).sin();
        for (i, (a, phi)) in self.harmonics.iter().enumerate() {
            let kf = (i + 1) as f64 * self.f0;
            s += a * (2.0 * PI * kf * t + phi).sin();
            s += a * h / 2.0 * (2.0 * PI * (kf - fm) * t + (phi - phm) + PI / 2.0).sin();
            s -= a * h / 2.0 * (2.0 * PI * (kf + fm) * t + (phi + phm) + PI / 2.0).sin();
        }
        s
    }
}

/// Fourier sum `sum_j a_j sin(2 pi j f_m t + phi_j)`.
fn modulating_series(terms: &[(f64, f64)], f_m: f64, t: f64) -> f64 {
    terms
        .iter()
        .enumerate()
        .map(|(j, (a, phi))| a * (2.0 * PI * (j + 1) as f64 * f_m * t + phi).sin())
        .sum()
}

/// Per-harmonic modulation terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenkoHarmonic {
    pub a: f64,
    pub phi: f64,
    /// Amplitude-modulation series `(a^A_kj, phi^A_kj)`.
    pub am: Vec<(f64, f64)>,
    /// Phase-modulation series `(a^F_kj, phi^F_kj)`.
    pub fm: Vec<(f64, f64)>,
}

/// Parametric Blazhko model with separate modulation per harmonic. Phases
/// in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenkoParams {
    pub m0: f64,
    /// Trend modulation `(b_r, phi^b_r)`.
    pub b: Vec<(f64, f64)>,
    pub f0: f64,
    pub f_m: f64,
    pub harmonics: Vec<BenkoHarmonic>,
}

/// `(u, h_1, h_2)`: trend and the cosine/sine amplitude of each harmonic.
pub type BenkoComponents = (f64, Vec<f64>, Vec<f64>);

impl BenkoParams {
    pub fn eval(&self, t: f64) -> f64 {
        let mut s = self.m0 + modulating_series(&self.b, self.f_m, t);
        for (i, h) in self.harmonics.iter().enumerate() {
            let ga = modulating_series(&h.am, self.f_m, t);
            let gf = modulating_series(&h.fm, self.f_m, t);
            s += (h.a + ga) * (2.0 * PI * (i + 1) as f64 * self.f0 * t + h.phi + gf).sin();
        }
        s
    }

    pub fn components(&self, t: f64) -> BenkoComponents {
        let u = self.m0 + modulating_series(&self.b, self.f_m, t);
        let (mut h1, mut h2) = (Vec::new(), Vec::new());
        for h in &self.harmonics {
            let amp = h.a + modulating_series(&h.am, self.f_m, t);
            let phase = h.phi + modulating_series(&h.fm, self.f_m, t);
            h1.push(amp * phase.sin());
            h2.push(amp * phase.cos());
        }
        (u, h1, h2)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.harmonics.len()).map(|k| k as f64 * self.f0).collect()
    }
}

/// Parametric Blazhko model with one amplitude and one phase modulation
/// shared by all harmonics. Phases in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenkoSharedParams {
    pub a0: f64,
    /// `a^A_0`.
    pub am0: f64,
    pub am: Vec<(f64, f64)>,
    pub fm: Vec<(f64, f64)>,
    /// `(a_k, phi_k)`.
    pub harmonics: Vec<(f64, f64)>,
    pub f0: f64,
    pub f_m: f64,
}

impl BenkoSharedParams {
    pub fn eval(&self, t: f64) -> f64 {
        let ga = modulating_series(&self.am, self.f_m, t);
        let gf = modulating_series(&self.fm, self.f_m, t);
        let mut s = self.am0 * self.a0 + self.a0 * ga;
        for (i, (a, phi)) in self.harmonics.iter().enumerate() {
            let k = (i + 1) as f64;
            s += (self.am0 * a + a * ga) * (2.0 * PI * k * self.f0 * t + phi + k * gf).sin();
        }
        s
    }

    /// `(v, w_1, w_2)`.
    pub fn components(&self, t: f64) -> BenkoComponents {
        let ga = modulating_series(&self.am, self.f_m, t);
        let gf = modulating_series(&self.fm, self.f_m, t);
        let v = self.am0 * self.a0 + self.a0 * ga;
        let (mut w1, mut w2) = (Vec::new(), Vec::new());
        for (i, (a, phi)) in self.harmonics.iter().enumerate() {
            let amp = self.am0 * a + a * ga;
            let phase = phi + (i + 1) as f64 * gf;
            w1.push(amp * phase.sin());
            w2.push(amp * phase.cos());
        }
        (v, w1, w2)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.harmonics.len()).map(|k| k as f64 * self.f0).collect()
    }
}

/// `m(t) + sum_k [g_{1,k} cos(2 pi f_k t) + g_{2,k} sin(2 pi f_k t)]`.
pub fn harmonic_model(t: f64, freqs: &[f64], c: &BenkoComponents) -> f64 {
    let (m, g1, g2) = c;
    m + freqs
        .iter()
        .zip(g1.iter().zip(g2))
        .map(|(f, (a, b))| {
            let (s, co) = (2.0 * PI * f * t).sin_cos();
            a * co + b * s
        })
        .sum::<f64>()
}

/// Stationary AR(2) path of length `n` with a 1000-step burn-in from zero.
pub fn simulate_ar2(p: &Ar2Params, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    const BURN_IN: usize = 1000;
    let mut r = rng(seed);
    let sd = p.sigma2.sqrt();
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..BURN_IN + n {
        let x = p.phi1 * x1 + p.phi2 * x2 + sd * r.sample::<f64, _>(StandardNormal);
        x2 = x1;
        x1 = x;
        if i >= BURN_IN {
            out.push(x);
        }
    }
    Ok(out)
}

/// `keep` of `n_blocks` block indices (0-based), sorted.
pub fn select_blocks(n_blocks: usize, keep: usize, seed: u64) -> Result<Vec<usize>> {
    if keep == 0 || keep > n_blocks {
        return Err(Error::BadPartition(format!("cannot keep {keep} of {n_blocks} blocks")));
    }
    let mut r = rng(seed);
    let mut b = sample(&mut r, n_blocks, keep).into_vec();
    b.sort_unstable();
    Ok(b)
}

/// Observations of `full` that fall in the chosen blocks, in time order,
/// embedded on the grid `t0 + k delta`.
pub fn subsample_blocks(full: &TimeSeries, blocks: &[usize], block_len: usize, t0: f64, delta: f64) -> Result<TimeSeries> {
    let n = full.len();
    if block_len == 0 || n % block_len != 0 {
        return Err(Error::BadPartition(format!("{n} observations do not split into blocks of {block_len}")));
    }
    let n_blocks = n / block_len;
    if let Some(b) = blocks.iter().find(|&&b| b >= n_blocks) {
        return Err(Error::BadPartition(format!("block {b} out of range for {n_blocks} blocks")));
    }
    let mut sorted = blocks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for b in sorted {
        for i in b * block_len..(b + 1) * block_len {
            t.push(full.times()[i]);
            y.push(full.values()[i]);
        }
    }
    TimeSeries::new(t, y)?.with_grid(t0, delta, None)
}

/// Equally spaced AR(2) series and its block subsample.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    pub full: TimeSeries,
    pub subsample: TimeSeries,
    pub blocks: Vec<usize>,
}

/// Equally spaced AR(2) path at `t_i = t0 + i delta`, `i = 1..=n`, cut into
/// `n_blocks` blocks of `block_len`, `keep` of which are retained. Blocks are
/// drawn from `block_seed`, the path from `seed`.
pub fn gen_ar2_blocks(
    p: &Ar2Params,
    t0: f64,
    n: usize,
    n_blocks: usize,
    block_len: usize,
    keep: usize,
    seed: u64,
    block_seed: u64,
) -> Result<BlockSample> {
    if n_blocks * block_len != n {
        return Err(Error::BadPartition(format!(
            "{n_blocks} blocks of {block_len} do not make {n} observations"
        )));
    }
    let blocks = select_blocks(n_blocks, keep, block_seed)?;
    ar2_on_blocks(p, t0, n, block_len, &blocks, seed)
}

/// As [`gen_ar2_blocks`] with a fixed block selection.
pub fn ar2_on_blocks(p: &Ar2Params, t0: f64, n: usize, block_len: usize, blocks: &[usize], seed: u64) -> Result<BlockSample> {
    let values = simulate_ar2(p, n, seed)?;
    let times: Vec<f64> = (1..=n).map(|i| t0 + i as f64 * p.delta).collect();
    let full = TimeSeries::new(times, values)?.with_grid(t0, p.delta, None)?;
    let subsample = subsample_blocks(&full, blocks, block_len, t0, p.delta)?;
    Ok(BlockSample {
        full,
        subsample,
        blocks: blocks.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::{prop_assert_eq, proptest};

    #[test]
    fn uniform_times_deterministic_and_sorted() {
        let a = sample_uniform_times(3, 0.0, 55.0, 7).unwrap();
        assert_eq!(a, sample_uniform_times(3, 0.0, 55.0, 7).unwrap());
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.iter().all(|&t| (0.0..55.0).contains(&t)));
        let big = sample_uniform_times(10_000, 0.0, 1.0, 1).unwrap();
        assert_abs_diff_eq!(big.iter().sum::<f64>() / 1e4, 0.5, epsilon = 0.02);
        assert_eq!(sample_uniform_times(3, 1.0, 1.0, 0).unwrap_err(), Error::BadRange { lo: 1.0, hi: 1.0 });
    }

    #[test]
    fn sinusoidal_at_zero() {
        let s = Scenario::Sinusoidal;
        assert_eq!(s.trend(0.0), 0.0);
        assert_eq!(s.amplitudes(0.0), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.frequencies(), vec![20.0, 50.0]);
    }

    #[test]
    fn polynomial_at_one() {
        let s = Scenario::Polynomial;
        assert_abs_diff_eq!(s.trend(1.0), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes(1.0)[3], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_scenario_is_model_mean() {
        let sim = gen_scenario(Scenario::Sinusoidal, 50, 0.0, 3).unwrap();
        for (i, &t) in sim.series.times().iter().enumerate() {
            let g = Scenario::Sinusoidal.amplitudes(t);
            let mu = t.mul_add(0.0, (2.0 * PI * t).sin())
                + g[0] * (40.0 * PI * t).cos()
                + g[2] * (40.0 * PI * t).sin()
                + g[1] * (100.0 * PI * t).cos()
                + g[3] * (100.0 * PI * t).sin();
            assert_abs_diff_eq!(sim.series.values()[i], mu, epsilon = 1e-12);
        }
    }

    #[test]
    fn demo_mean_matches_formula() {
        let t = 17.3;
        let c = demo_truth(&[t]);
        let mu = -0.05 * t - (-0.0002 * t + 0.0003 * t * t) * (0.2 * PI * t).cos() + (1.0 - 0.0005 * t) * (0.2 * PI * t).sin();
        assert_abs_diff_eq!(c.mean[0], mu, epsilon = 1e-12);
    }

    #[test]
    fn blazhko_table_row_and_reconstruction() {
        let p = BlazhkoParams::default();
        assert_eq!(p.harmonics[0], Harmonic { freq: 2.0, amp: 0.401, phase_deg: 5.490 });
        let times = blazhko_times(1000, 1).unwrap();
        assert_eq!(times.len(), 1000);
        assert!(times[0] >= BLAZHKO_T_FIRST && times[999] <= BLAZHKO_T_LAST);
        let truth = p.truth(&times);
        for (i, &t) in times.iter().enumerate() {
            assert!((truth.mean[i] - p.mean(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn blazhko_unmodulated_instant_is_carrier() {
        let p = BlazhkoParams::default();
        // U_m vanishes where 2 pi f_m t + 3 pi / 2 = 2 pi, i.e. t = 5
        let t = 5.0;
        assert!(p.u_m(t).abs() < 1e-15);
        assert_abs_diff_eq!(p.mean(t), p.carrier(t), epsilon =  1e-14);
    }

    #[test]
    fn blazhko_envelope_extreme() {
        let p = BlazhkoParams::default();
        assert_abs_diff_eq!(p.u_c(), 0.1 / 1.2, epsilon = 1e-15);
        let times: Vec<f64> = (0..=20_000).map(|i| i as f64 * 0.001).collect();
        let truth = p.truth(&times);
        let base = 0.401 * deg(5.490).sin();
        let max = truth.amplitudes[0].iter().fold(f64::MIN, |a, &b| a.max(b));
        assert_abs_diff_eq!(max / base, 2.2, epsilon = 1e-6);
    }

    #[test]
    fn blazhko_noise_is_seeded() {
        let p = BlazhkoParams::default();
        let times = blazhko_times(100, 2).unwrap();
        let a = gen_blazhko_am(&p, &times, 9).unwrap();
        let b = gen_blazhko_am(&p, &times, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.series.values(), gen_blazhko_am(&p, &times, 10).unwrap().series.values());
    }

    #[test]
    fn modulation_trivial_cases() {
        let c = Carrier { u_c: 2.0, f_c: 3.0, phi_c: 0.4 };
        let none = Modulation { amp: 0.0, f_m: 0.2, phi_m: 1.0 };
        let some = Modulation { amp: 0.7, f_m: 0.2, phi_m: 1.0 };
        for t in [0.0, 0.37, 5.1] {
            let carrier = 2.0 * (2.0 * PI * 3.0 * t + 0.4).sin();
            assert_eq!(gen_am(&c, &none, t), carrier);
            assert_abs_diff_eq!(gen_fm(&c, 0.0, &some, t), carrier, epsilon = 1e-15);
            assert_abs_diff_eq!(gen_comb(&c, &none, 0.0, &some, t), carrier, epsilon = 1e-15);
        }
    }

    #[test]
    fn am_sideband_identity() {
        let mut r = rng(4);
        for _ in 0..200 {
            let am = HarmonicAm {
                a0: r.random_range(-1.0..1.0),
                harmonics: (0..4).map(|_| (r.random_range(0.0..1.0), r.random_range(0.0..2.0 * PI))).collect(),
                f0: r.random_range(0.5..3.0),
                u_c: r.random_range(0.2..2.0),
                modulation: Modulation {
                    amp: r.random_range(0.0..1.0),
                    f_m: r.random_range(0.01..0.2),
                    phi_m: r.random_range(0.0..2.0 * PI),
                },
            };
            let t = r.random_range(0.0..100.0);
            assert!((am.product_form(t) - am.sideband_form(t)).abs() <= 1e-12);
        }
    }

    fn random_benko(r: &mut ChaCha8Rng, k: usize) -> BenkoParams {
        let series = |r: &mut ChaCha8Rng, n: usize| -> Vec<(f64, f64)> {
            (0..n).map(|_| (r.random_range(-0.3..0.3), r.random_range(0.0..2.0 * PI))).collect()
        };
        BenkoParams {
            m0: r.random_range(-1.0..1.0),
            b: series(r, 2),
            f0: r.random_range(0.5..3.0),
            f_m: r.random_range(0.01..0.1),
            harmonics: (0..k)
                .map(|_| BenkoHarmonic {
                    a: r.random_range(0.0..1.0),
                    phi: r.random_range(0.0..2.0 * PI),
                    am: series(r, 2),
                    fm: series(r, 3),
                })
                .collect(),
        }
    }

    #[test]
    fn benko_reconstruction_identity() {
        let mut r = rng(5);
        let p = random_benko(&mut r, 3);
        for _ in 0..1000 {
            let t = r.random_range(0.0..200.0);
            let lhs = p.eval(t);
            let rhs = harmonic_model(t, &p.frequencies(), &p.components(t));
            assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn benko_unmodulated_and_single_harmonic() {
        let p = BenkoParams {
            m0: 0.3,
            b: vec![],
            f0: 1.5,
            f_m: 0.05,
            harmonics: vec![BenkoHarmonic { a: 0.8, phi: 0.6, am: vec![(0.2, 0.1)], fm: vec![] }],
        };
        let t = 3.3;
        let (u, h1, h2) = p.components(t);
        assert_eq!(u, 0.3);
        let amp = 0.8 + 0.2 * (2.0 * PI * 0.05 * t + 0.1).sin();
        assert_abs_diff_eq!(h1[0], amp * 0.6f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(h2[0], amp * 0.6f64.cos(), epsilon = 1e-15);

        let plain = BenkoParams { harmonics: vec![BenkoHarmonic { a: 0.8, phi: 0.6, am: vec![], fm: vec![] }], ..p };
        assert_abs_diff_eq!(plain.eval(t), 0.3 + 0.8 * (2.0 * PI * 1.5 * t + 0.6).sin(), epsilon = 1e-15);
    }

    #[test]
    fn benko_shared_reconstruction_identity() {
        let mut r = rng(6);
        let p = BenkoSharedParams {
            a0: 0.2,
            am0: 1.1,
            am: vec![(0.1, 0.3), (0.05, 2.0)],
            fm: vec![(0.02, 1.0)],
            harmonics: vec![(0.4, 0.1), (0.2, 2.5), (0.1, 4.0)],
            f0: 1.7,
            f_m: 0.04,
        };
        for _ in 0..1000 {
            let t = r.random_range(0.0..200.0);
            assert!((p.eval(t) - harmonic_model(t, &p.frequencies(), &p.components(t))).abs() <= 1e-12);
        }
    }

    #[test]
    fn ar2_blocks_layout() {
        let p = Ar2Params::new(1.318, -0.634, 289.2, 0.33).unwrap();
        let s = gen_ar2_blocks(&p, 0.67, 500, 50, 10, 30, 1, 2).unwrap();
        assert_eq!(s.subsample.len(), 300);
        assert_eq!(s.blocks.len(), 30);
        let g = s.subsample.grid().unwrap();
        for (&k, &t) in g.indices.iter().zip(s.subsample.times()) {
            assert_abs_diff_eq!(t, 0.67 + k as f64 * 0.33, epsilon = 1e-9);
        }
        let all = gen_ar2_blocks(&p, 0.67, 500, 50, 10, 50, 1, 2).unwrap();
        assert_eq!(all.subsample.values(), all.full.values());
        assert!(matches!(gen_ar2_blocks(&p, 0.67, 500, 40, 10, 30, 1, 2), Err(Error::BadPartition(_))));
        assert!(matches!(select_blocks(5, 6, 0), Err(Error::BadPartition(_))));
    }

    #[test]
    fn ar2_lag_one_autocovariance() {
        let p = Ar2Params::new(0.5, -0.3, 2.0, 1.0).unwrap();
        let x = simulate_ar2(&p, 100_000, 8).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let g1 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n;
        // Yule-Walker
        let (a, b, s2) = (p.phi1, p.phi2, p.sigma2);
        let g0 = s2 * (1.0 - b) / ((1.0 + b) * ((1.0 - b).powi(2) - a * a));
        let oracle = a * g0 / (1.0 - b);
        assert!((g1 / oracle - 1.0).abs() < 0.02, "{g1} vs {oracle}");
    }

    proptest! {
        #[test]
        fn generators_deterministic(seed in 0u64..10_000) {
            let a = gen_scenario(Scenario::Polynomial, 20, 2.0, seed).unwrap();
            let b = gen_scenario(Scenario::Polynomial, 20, 2.0, seed).unwrap();
            prop_assert_eq!(a, b);
            let p = Ar2Params::new(1.318, -0.634, 289.2, 0.33).unwrap();
            prop_assert_eq!(simulate_ar2(&p, 30, seed).unwrap(), simulate_ar2(&p, 30, seed).unwrap());
        }
    }
}
