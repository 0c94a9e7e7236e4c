use std::path::Path;

use serde::Serialize;
use tvmod::bspline::basis_matrix;
use tvmod::fit::fit_series;
use tvmod::intervals::{component_band, covariance_from_inverse, prediction_band_with_covariance, Band, Component};
use tvmod::selection::{aic, grid_search, unpenalized_sigma2, Candidate};
use tvmod::simulate::{self, Scenario, Simulated};
use tvmod::spectral::{ar2_psd, estimate_psd, whiteness_check, FourierGrid, WhitenessReport};
use tvmod::timeseries::TimeSeries;

use crate::config::{FitConfig, RunConfig, SimulateConfig, Simulation, SpectrumConfig, TuneConfig};
use crate::error::{CliError, CliResult};
use crate::input::read_series;
use crate::output::{fmt_f64, prepare_dir, write_json, write_text, Table};

fn load_input(cfg: &crate::config::InputConfig) -> CliResult<TimeSeries> {
    read_series(Path::new(&cfg.path), cfg.column)
}

/// `g11`, `g21`, ... for fewer than ten frequencies, `g1_10` style beyond.
fn amp_name(ell: usize, k: usize, k_total: usize) -> String {
    if k_total < 10 {
        format!("g{ell}{k}")
    } else {
        format!("g{ell}_{k}")
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    n: usize,
    columns: usize,
    edf: f64,
    rss: f64,
    mse: f64,
    sigma2: Option<f64>,
    sigma2_0: Option<f64>,
    aic: Option<f64>,
    jitter: f64,
    config: &'a RunConfig,
}

fn nan_band(times: &[f64], center: Vec<f64>, level: f64) -> Band {
    Band {
        times: times.to_vec(),
        lower: vec![f64::NAN; times.len()],
        upper: vec![f64::NAN; times.len()],
        center,
        level,
    }
}

pub fn run_fit(cfg: &FitConfig, echo: &RunConfig, out: &Path) -> CliResult<()> {
    let ts = load_input(&cfg.input)?;
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(CliError::Usage(format!("--level must lie in (0, 1), got {}", cfg.level)));
    }
    let model = fit_series(&ts, &cfg.model)?;
    let r = &model.result;
    let sigma2_0 = unpenalized_sigma2(&ts, &cfg.model, cfg.sigma0).ok();
    let aic_value = sigma2_0.map(|s0| aic(ts.values(), &r.fitted, r.edf, s0));
    let times = ts.times();
    let k_total = cfg.model.total_frequencies();

    let mut components: Vec<(String, Band)> = Vec::new();
    let which: Vec<(String, Component)> = std::iter::once(("m".to_string(), Component::Trend))
        .chain((1..=k_total).flat_map(|k| {
            (1..=2).map(move |ell| (amp_name(ell, k, k_total), Component::Amplitude { ell, k }))
        }))
        .collect();
    let mean_band = match r.sigma2 {
        Some(s2) => {
            let v = covariance_from_inverse(&r.g_inv, &model.design, s2)?;
            let basis = basis_matrix(&model.knots, times)?;
            for (name, c) in &which {
                components.push((name.clone(), component_band(&r.theta, &v, &basis.matrix, times, *c, cfg.level)?));
            }
            prediction_band_with_covariance(r, &model.design, times, &v, cfg.level)?
        }
        None => {
            for (name, c) in &which {
                let center = match c {
                    Component::Trend => model.components.trend.clone(),
                    Component::Amplitude { ell, k } => model.components.amplitude(*ell, *k).expect("in range").to_vec(),
                };
                components.push((name.clone(), nan_band(times, center, cfg.level)));
            }
            nan_band(times, r.fitted.clone(), cfg.level)
        }
    };

    prepare_dir(out)?;
    let curves = Table::new()
        .comment(format!("fitted mean with {} pointwise band", cfg.level))
        .column("time", times)
        .column("y", ts.values())
        .column("fitted", &r.fitted)
        .column("lower", &mean_band.lower)
        .column("upper", &mean_band.upper)
        .column("residual", &r.residuals);
    write_text(out, "curves.csv", &curves.render())?;

    let mut comp = Table::new()
        .comment(format!("trend and amplitude estimates with {} pointwise bands", cfg.level))
        .column("time", times);
    for (name, b) in &components {
        comp = comp
            .column(format!("{name}_hat"), &b.center)
            .column(format!("{name}_lower"), &b.lower)
            .column(format!("{name}_upper"), &b.upper);
    }
    write_text(out, "components.csv", &comp.render())?;

    let summary = FitSummary {
        n: ts.len(),
        columns: cfg.model.columns(),
        edf: r.edf,
        rss: r.rss,
        mse: r.mse,
        sigma2: r.sigma2,
        sigma2_0,
        aic: aic_value,
        jitter: r.jitter,
        config: echo,
    };
    write_json(out, "summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct TuneSummary<'a> {
    best: &'a Candidate,
    candidates: usize,
    failures: Vec<&'a Candidate>,
    config: &'a RunConfig,
}

pub fn run_tune(cfg: &TuneConfig, echo: &RunConfig, threads: Option<usize>, out: &Path) -> CliResult<()> {
    let ts = load_input(&cfg.input)?;
    if cfg.grid.harmonics.iter().any(|&h| h > cfg.template.frequencies.len()) {
        return Err(CliError::Usage(format!(
            "--harmonics cannot exceed the {} supplied frequencies",
            cfg.template.frequencies.len()
        )));
    }
    let search = || grid_search(&ts, &cfg.grid, &cfg.template, true);
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?
            .install(search)?,
        None => search()?,
    };
    let ranked = result.ranked();

    prepare_dir(out)?;
    let width = ranked.iter().map(|c| c.taus.len()).max().unwrap_or(0);
    let mut csv = String::from("# configurations sorted by AIC\n");
    csv.push_str("rank,basis_size,degree,penalty_order,harmonics,aic,mse,edf,sigma2_0,status");
    for i in 1..=width {
        csv.push_str(&format!(",tau_{i}"));
    }
    csv.push('\n');
    for (i, c) in ranked.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            c.basis_size.to_string(),
            c.degree.to_string(),
            c.penalty_order.to_string(),
            c.harmonics.to_string(),
            fmt_f64(c.aic),
            fmt_f64(c.mse),
            fmt_f64(c.edf),
            fmt_f64(c.sigma2_0),
            if c.error.is_some() { "failed" } else { "ok" }.to_string(),
        ];
        row.extend((0..width).map(|j| c.taus.get(j).map_or_else(String::new, |t| fmt_f64(*t))));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_text(out, "aic_table.csv", &csv)?;
    let summary = TuneSummary {
        best: &result.best,
        candidates: ranked.len(),
        failures: ranked.iter().filter(|c| c.error.is_some()).collect(),
        config: echo,
    };
    write_json(out, "selection.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    n: usize,
    n_grid: usize,
    bandwidth: f64,
    whiteness: Option<WhitenessReport>,
    error: Option<String>,
    config: &'a RunConfig,
}

pub fn run_spectrum(cfg: &SpectrumConfig, echo: &RunConfig, out: &Path) -> CliResult<()> {
    let ts = load_input(&cfg.input)?.with_grid(cfg.t0, cfg.delta, cfg.grid_tol)?;
    let psd = estimate_psd(&ts, cfg.bandwidth)?;
    let grid = psd.grid();
    let f: Vec<f64> = grid.frequencies();

    prepare_dir(out)?;
    let table = Table::new()
        .comment(format!("N_I = {}, delta = {}, bandwidth = {}", grid.n_grid, fmt_f64(grid.delta), fmt_f64(cfg.bandwidth)))
        .column("lambda", &grid.lambdas)
        .column("f", &f)
        .column("I", &psd.periodogram.values)
        .column("W", &psd.periodogram.window)
        .column("raw", &psd.raw)
        .column("smoothed", &psd.smoothed);
    write_text(out, "psd.csv", &table.render())?;

    let check = whiteness_check(&psd, cfg.band.0, cfg.band.1, cfg.flat_ratio);
    let summary = SpectrumSummary {
        n: ts.len(),
        n_grid: grid.n_grid,
        bandwidth: cfg.bandwidth,
        whiteness: check.as_ref().ok().cloned(),
        error: check.as_ref().err().map(|e| e.to_string()),
        config: echo,
    };
    write_json(out, "whiteness.json", &summary)?;
    check?;
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    n: usize,
    frequencies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<usize>>,
    config: &'a RunConfig,
}

fn series_table(ts: &TimeSeries, what: &str) -> String {
    Table::new()
        .comment(what.to_string())
        .column("time", ts.times())
        .column("value", ts.values())
        .render()
}

fn truth_table(sim: &Simulated) -> String {
    let k = sim.frequencies.len();
    let mut t = Table::new()
        .comment(format!(
            "noiseless mean, trend and amplitudes; frequencies {}",
            sim.frequencies.iter().map(|f| fmt_f64(*f)).collect::<Vec<_>>().join(" ")
        ))
        .column("time", &sim.truth.times)
        .column("mu", &sim.truth.mean)
        .column("m", &sim.truth.trend);
    for kk in 1..=k {
        for ell in 1..=2 {
            t = t.column(amp_name(ell, kk, k), sim.truth.amplitude(ell, kk).expect("in range"));
        }
    }
    t.render()
}

pub fn run_simulate(cfg: &SimulateConfig, echo: &RunConfig, out: &Path) -> CliResult<()> {
    let seed = cfg.seed;
    let harmonic = |sim: Simulated| -> CliResult<()> {
        prepare_dir(out)?;
        write_text(out, "data.csv", &series_table(&sim.series, "simulated observations"))?;
        write_text(out, "truth.csv", &truth_table(&sim))?;
        let summary = SimulationSummary {
            n: sim.series.len(),
            frequencies: sim.frequencies.clone(),
            blocks: None,
            config: echo,
        };
        write_json(out, "simulation.json", &summary)?;
        Ok(())
    };
    match &cfg.simulation {
        Simulation::Sinusoidal { n, sigma2 } => harmonic(simulate::gen_scenario(Scenario::Sinusoidal, *n, *sigma2, seed)?),
        Simulation::Polynomial { n, sigma2 } => harmonic(simulate::gen_scenario(Scenario::Polynomial, *n, *sigma2, seed)?),
        Simulation::Demo { n, sigma2 } => harmonic(simulate::gen_demo(*n, *sigma2, seed)?),
        Simulation::Blazhko { n, params } => {
            let times = simulate::blazhko_times(*n, seed)?;
            harmonic(simulate::gen_blazhko_am(params, &times, seed.wrapping_add(1))?)
        }
        Simulation::Ar2 {
            params,
            t0,
            n,
            n_blocks,
            keep,
            block_seed,
        } => {
            if *n_blocks == 0 || n % n_blocks != 0 {
                return Err(tvmod::Error::BadPartition(format!("{n} observations do not split into {n_blocks} blocks")).into());
            }
            let s = simulate::gen_ar2_blocks(params, *t0, *n, *n_blocks, n / n_blocks, *keep, seed, *block_seed)?;
            let grid = FourierGrid::from_embedding(s.subsample.grid().expect("embedded"))?;
            let psd: Vec<f64> = grid
                .lambdas
                .iter()
                .map(|&l| ar2_psd(params, l))
                .collect::<Result<_, _>>()?;
            prepare_dir(out)?;
            write_text(out, "data.csv", &series_table(&s.subsample, "retained blocks"))?;
            write_text(out, "full.csv", &series_table(&s.full, "complete series"))?;
            let truth = Table::new()
                .comment("closed-form AR(2) spectral density on the Fourier grid of the retained blocks")
                .column("lambda", &grid.lambdas)
                .column("f", &grid.frequencies())
                .column("psd", &psd);
            write_text(out, "truth.csv", &truth.render())?;
            let summary = SimulationSummary {
                n: s.subsample.len(),
                frequencies: Vec::new(),
                blocks: Some(s.blocks.clone()),
                config: echo,
            };
            write_json(out, "simulation.json", &summary)?;
            Ok(())
        }
    }
}

pub fn run(cfg: &RunConfig, threads: Option<usize>, out: &Path) -> CliResult<()> {
    match cfg {
        RunConfig::Fit(c) => run_fit(c, cfg, out),
        RunConfig::Tune(c) => run_tune(c, cfg, threads, out),
        RunConfig::Spectrum(c) => run_spectrum(c, cfg, out),
        RunConfig::Simulate(c) => run_simulate(c, cfg, out),
    }
}
