//! Seeded end-to-end experiments: configuration, error metrics, single runs
//! and the probe-strength sweep.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{FilterModel, PosteriorTrace};
use crate::io;
use crate::markov::{HmmSpec, TruthTrajectory};
use crate::model::{default_params, DetuningGrid, ModelParams};
use crate::retro::{run_pqs, PqsRun};
use crate::truthsim::{generate, HomodyneRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub hmm: HmmSpec,
    pub duration: f64,
    pub dt: f64,
    pub seeds: Vec<u64>,
    pub beta_sweep: Vec<f64>,
    pub stride: usize,
    pub burn_in: f64,
    pub output_dir: PathBuf,
    /// Write per-run traces during sweeps (runs always write them).
    pub sweep_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: default_params(),
            hmm: HmmSpec::default(),
            duration: 2.0e4,
            dt: 0.01,
            seeds: vec![1, 2, 3, 4, 5],
            beta_sweep: vec![0.1, 0.2, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0],
            stride: 10,
            burn_in: 100.0,
            output_dir: PathBuf::from("out"),
            sweep_traces: false,
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Option<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let (mut grid_min, mut grid_max) = (-2.0, 2.0);
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let num = || -> Result<f64> {
                value
                    .parse()
                    .map_err(|_| err(format!("{key}: {value:?} is not a number")))
            };
            let int = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| err(format!("{key}: {value:?} is not an integer")))
            };
            let p = &mut cfg.params;
            match key {
                "gamma" => p.gamma = num()?,
                "g" => p.g = num()?,
                "kappa" => p.kappa = num()?,
                "kappa1" => p.kappa1 = num()?,
                "delta_r" => p.delta_r = num()?,
                "beta" | "beta_drive" => p.beta_drive = num()?,
                "eta" => p.eta = num()?,
                "phi_lo" => p.phi_lo = num()?,
                "gamma_dec" => p.gamma_dec = num()?,
                "gamma_phi" => p.gamma_phi = num()?,
                "delta_s0" => p.delta_s0 = num()?,
                "zeeman_coupling" => p.zeeman_coupling = num()?,
                "n_fleas" => cfg.hmm.n_fleas = int()?,
                "flea_rate" => cfg.hmm.flea_rate = num()?,
                "grid_min" => grid_min = num()?,
                "grid_max" => grid_max = num()?,
                "duration" => cfg.duration = num()?,
                "dt" => cfg.dt = num()?,
                "stride" => cfg.stride = int()?,
                "burn_in" => cfg.burn_in = num()?,
                "seeds" => {
                    cfg.seeds =
                        parse_list(value).ok_or_else(|| err(format!("bad seed list {value:?}")))?
                }
                "beta_sweep" => {
                    cfg.beta_sweep =
                        parse_list(value).ok_or_else(|| err(format!("bad sweep list {value:?}")))?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "sweep_traces" => {
                    cfg.sweep_traces = value
                        .parse()
                        .map_err(|_| err(format!("sweep_traces: {value:?} is not true/false")))?
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        cfg.hmm.grid = DetuningGrid::uniform(grid_min, grid_max, cfg.hmm.n_fleas + 1)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.hmm.validate()?;
        self.hmm.check_step(self.dt)?;
        let ratio = self.duration / self.dt;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(Error::InvalidParam(format!(
                "duration {} is not a whole number of steps of {}",
                self.duration, self.dt
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("at least one seed is required".into()));
        }
        if self.beta_sweep.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::InvalidParam("sweep values must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParam("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut cfg = self.clone();
        cfg.params.beta_drive = beta;
        cfg
    }
}

/// Time-averaged error statistics in detuning units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceMetrics {
    /// `sqrt(mean (delta_MAP - delta_true)^2)`
    pub rmse_map: f64,
    /// `sqrt(mean posterior variance)`
    pub mean_post_std: f64,
    pub samples: usize,
}

/// Scores a posterior trace against the truth, skipping `t < burn_in`.
///
/// Trace times must fall on the truth's step grid.
pub fn metrics(
    truth: &TruthTrajectory,
    trace: &PosteriorTrace,
    grid: &DetuningGrid,
    burn_in: f64,
) -> Result<TraceMetrics> {
    if truth.is_empty() {
        return Err(Error::GridMismatch("empty truth trajectory".into()));
    }
    let (mut sq, mut var, mut count) = (0.0, 0.0, 0usize);
    for k in 0..trace.len() {
        let t = trace.times[k];
        if t < burn_in {
            continue;
        }
        let pos = t / truth.dt;
        let step = pos.round();
        if (pos - step).abs() > 1e-6 || step as usize > truth.len() {
            return Err(Error::GridMismatch(format!(
                "trace time {t} is not on the truth grid (dt = {}, {} steps)",
                truth.dt,
                truth.len()
            )));
        }
        // The final boundary belongs to the last interval.
        let idx = (step as usize).min(truth.len() - 1);
        let err = grid[trace.map_index[k]] - grid[truth.states[idx]];
        sq += err * err;
        var += trace.var[k];
        count += 1;
    }
    if count == 0 {
        return Err(Error::GridMismatch("no samples after burn-in".into()));
    }
    Ok(TraceMetrics {
        rmse_map: (sq / count as f64).sqrt(),
        mean_post_std: (var / count as f64).sqrt(),
        samples: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub beta: f64,
    pub seed: u64,
    pub forward: TraceMetrics,
    pub pqs: TraceMetrics,
}

/// Quadratic means over seeds at one probe strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub beta: f64,
    pub seeds: usize,
    pub rmse_map_forward: f64,
    pub rmse_map_pqs: f64,
    pub mean_post_std_forward: f64,
    pub mean_post_std_pqs: f64,
    /// Sample standard deviation of the per-seed forward and smoothed RMSE.
    pub rmse_spread_forward: f64,
    pub rmse_spread_pqs: f64,
}

fn quadratic_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x * x;
        n += 1;
    }
    (s / n as f64).sqrt()
}

fn spread(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn aggregate(runs: &[RunMetrics]) -> Option<AggregateMetrics> {
    let first = runs.first()?;
    let fwd: Vec<f64> = runs.iter().map(|r| r.forward.rmse_map).collect();
    let pqs: Vec<f64> = runs.iter().map(|r| r.pqs.rmse_map).collect();
    Some(AggregateMetrics {
        beta: first.beta,
        seeds: runs.len(),
        rmse_map_forward: quadratic_mean(fwd.iter().copied()),
        rmse_map_pqs: quadratic_mean(pqs.iter().copied()),
        mean_post_std_forward: quadratic_mean(runs.iter().map(|r| r.forward.mean_post_std)),
        mean_post_std_pqs: quadratic_mean(runs.iter().map(|r| r.pqs.mean_post_std)),
        rmse_spread_forward: spread(&fwd),
        rmse_spread_pqs: spread(&pqs),
    })
}

/// Everything one seeded run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub truth: TruthTrajectory,
    pub record: HomodyneRecord,
    pub estimates: PqsRun,
}

/// Estimates from a record with both the filter and the smoother.
pub fn estimate(cfg: &ExperimentConfig, record: &HomodyneRecord) -> Result<PqsRun> {
    let model = FilterModel::new(&cfg.hmm, &cfg.params, record.dt)?;
    run_pqs(record, &model, &cfg.hmm.stationary(), cfg.stride)
}

/// generate -> filter + smoother -> metrics, optionally writing every
/// artefact into `out`.
pub fn run_one(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let generated = generate(&cfg.hmm, &cfg.params, cfg.steps(), cfg.dt, seed, cfg.stride)?;
    let estimates = estimate(cfg, &generated.record)?;
    let grid = &cfg.hmm.grid;
    let metrics = RunMetrics {
        beta: cfg.params.beta_drive,
        seed,
        forward: metrics(&generated.truth, &estimates.forward, grid, cfg.burn_in)?,
        pqs: metrics(&generated.truth, &estimates.smoothed, grid, cfg.burn_in)?,
    };
    let output = RunOutput {
        metrics,
        truth: generated.truth,
        record: generated.record,
        estimates,
    };
    if let Some(dir) = out {
        write_run(dir, cfg, &output)?;
    }
    Ok(output)
}

fn run_tag(beta: f64, seed: u64) -> String {
    format!("beta{beta}_seed{seed}")
}

pub fn write_run(dir: &Path, cfg: &ExperimentConfig, run: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tag = run_tag(run.metrics.beta, run.metrics.seed);
    let grid = &cfg.hmm.grid;
    io::write_truth_csv(
        &dir.join(format!("truth_{tag}.csv")),
        &run.truth,
        grid,
        cfg.stride,
    )?;
    io::write_record_bin(&dir.join(format!("record_{tag}.bin")), &run.record)?;
    io::write_trace_csv(
        &dir.join(format!("forward_{tag}.csv")),
        &run.estimates.forward,
        grid,
    )?;
    io::write_trace_csv(
        &dir.join(format!("pqs_{tag}.csv")),
        &run.estimates.smoothed,
        grid,
    )?;
    write_run_metrics(&dir.join(format!("metrics_{tag}.csv")), &[run.metrics])?;
    Ok(())
}

const RUN_HEADER: [&str; 6] = [
    "beta",
    "seed",
    "rmse_map_forward",
    "rmse_map_pqs",
    "mean_post_std_forward",
    "mean_post_std_pqs",
];

pub fn write_run_metrics(path: &Path, runs: &[RunMetrics]) -> Result<()> {
    let rows: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            vec![
                r.beta,
                r.seed as f64,
                r.forward.rmse_map,
                r.pqs.rmse_map,
                r.forward.mean_post_std,
                r.pqs.mean_post_std,
            ]
        })
        .collect();
    io::write_table(path, &RUN_HEADER, &rows)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<RunMetrics>,
    pub aggregates: Vec<AggregateMetrics>,
    /// `(beta, seed, error)` for runs that failed.
    pub failures: Vec<(f64, u64, String)>,
}

/// Runs every `(beta, seed)` pair on the rayon pool. Failed pairs are
/// reported and do not affect the others.
pub fn beta_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.beta_sweep.is_empty() {
        return Err(Error::InvalidParam("empty beta sweep".into()));
    }
    let pairs: Vec<(f64, u64)> = cfg
        .beta_sweep
        .iter()
        .flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let trace_dir = match (out, cfg.sweep_traces) {
        (Some(dir), true) => Some(dir.join("runs")),
        _ => None,
    };
    let results: Vec<(f64, u64, Result<RunMetrics>)> = pairs
        .par_iter()
        .map(|&(beta, seed)| {
            let res = run_one(&cfg.with_beta(beta), seed, trace_dir.as_deref()).map(|r| r.metrics);
            (beta, seed, res)
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (beta, seed, res) in results {
        match res {
            Ok(m) => runs.push(m),
            Err(e) => failures.push((beta, seed, e.to_string())),
        }
    }
    let aggregates = cfg
        .beta_sweep
        .iter()
        .filter_map(|&b| {
            let at: Vec<RunMetrics> = runs.iter().copied().filter(|r| r.beta == b).collect();
            aggregate(&at)
        })
        .collect();
    let result = SweepResult {
        runs,
        aggregates,
        failures,
    };
    if let Some(dir) = out {
        write_sweep(dir, &result)?;
    }
    Ok(result)
}

pub fn write_sweep(dir: &Path, sweep: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_run_metrics(&dir.join("sweep_runs.csv"), &sweep.runs)?;
    let rows: Vec<Vec<f64>> = sweep
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.beta,
                a.seeds as f64,
                a.rmse_map_forward,
                a.rmse_map_pqs,
                a.mean_post_std_forward,
                a.mean_post_std_pqs,
                a.rmse_spread_forward,
                a.rmse_spread_pqs,
            ]
        })
        .collect();
    io::write_table(
        &dir.join("sweep.csv"),
        &[
            "beta",
            "seeds",
            "rmse_map_forward",
            "rmse_map_pqs",
            "mean_post_std_forward",
            "mean_post_std_pqs",
            "rmse_spread_forward",
            "rmse_spread_pqs",
        ],
        &rows,
    )?;
    if !sweep.failures.is_empty() {
        let text: String = sweep
            .failures
            .iter()
            .map(|(b, s, e)| format!("{b},{s},{e}\n"))
            .collect();
        std::fs::write(dir.join("failures.csv"), format!("beta,seed,error\n{text}"))?;
    }
    std::fs::write(dir.join("sweep.gp"), SWEEP_GNUPLOT)?;
    Ok(())
}

const SWEEP_GNUPLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set xlabel 'beta / sqrt(gamma)'
set ylabel 'error / gamma'
set logscale x
plot 'sweep.csv' using 1:5 with lines title 'forward std', \\
     'sweep.csv' using 1:6 with lines title 'PQS std', \\
     'sweep.csv' using 1:3 with points pt 7 title 'forward MAP rmse', \\
     'sweep.csv' using 1:4 with points pt 5 title 'PQS MAP rmse'
";

/// Gnuplot script for a single run's forward or smoothed trace.
pub fn trace_gnuplot(trace_csv: &str, truth_csv: &str, states: usize) -> String {
    let mean_col = states + 3;
    let var_col = states + 4;
    let map_col = states + 2;
    format!(
        "set datafile separator ','\n\
         set xlabel 't gamma'\nset ylabel 'detuning / gamma'\n\
         plot '{trace_csv}' using 1:(${mean_col}-sqrt(${var_col})):(${mean_col}+sqrt(${var_col})) \
         with filledcurves fs transparent solid 0.3 title 'posterior +/- std', \\\n     \
         '{trace_csv}' using 1:{map_col} with lines lc rgb 'dark-green' title 'MAP', \\\n     \
         '{truth_csv}' using 1:3 with lines lc rgb 'red' title 'truth'\n"
    )
}

/// Re-estimates a stored record; scores it if a truth file is supplied.
pub fn replay(
    cfg: &ExperimentConfig,
    record: &HomodyneRecord,
    truth: Option<&[(f64, usize)]>,
    out: Option<&Path>,
) -> Result<(PqsRun, Option<(TraceMetrics, TraceMetrics)>)> {
    let estimates = estimate(cfg, record)?;
    let grid = &cfg.hmm.grid;
    let scored = match truth {
        Some(rows) => {
            let sampled = resample_truth(rows, record)?;
            Some((
                metrics(&sampled, &estimates.forward, grid, cfg.burn_in)?,
                metrics(&sampled, &estimates.smoothed, grid, cfg.burn_in)?,
            ))
        }
        None => None,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        io::write_trace_csv(&dir.join("replay_forward.csv"), &estimates.forward, grid)?;
        io::write_trace_csv(&dir.join("replay_pqs.csv"), &estimates.smoothed, grid)?;
        if let Some((f, s)) = scored {
            io::write_table(
                &dir.join("replay_metrics.csv"),
                &RUN_HEADER[2..],
                &[vec![
                    f.rmse_map,
                    s.rmse_map,
                    f.mean_post_std,
                    s.mean_post_std,
                ]],
            )?;
        }
    }
    Ok((estimates, scored))
}

/// Sums consecutive groups of `factor` increments: the same record seen at a
/// coarser step. A trailing partial group is dropped.
pub fn coarsen(record: &HomodyneRecord, factor: usize) -> Result<HomodyneRecord> {
    if factor == 0 {
        return Err(Error::InvalidParam(
            "coarsening factor must be at least 1".into(),
        ));
    }
    Ok(HomodyneRecord {
        dt: record.dt * factor as f64,
        increments: record
            .increments
            .chunks_exact(factor)
            .map(|c| c.iter().sum())
            .collect(),
        seed: record.seed,
    })
}

/// Expands sparse `(t, n)` truth samples to a step-resolution trajectory by
/// holding each value until the next sample.
fn resample_truth(rows: &[(f64, usize)], record: &HomodyneRecord) -> Result<TruthTrajectory> {
    if rows.is_empty() {
        return Err(Error::GridMismatch("empty truth file".into()));
    }
    let mut states = Vec::with_capacity(record.len());
    let mut j = 0;
    for k in 0..record.len() {
        let t = k as f64 * record.dt;
        while j + 1 < rows.len() && rows[j + 1].0 <= t + 1e-9 * record.dt.max(t) {
            j += 1;
        }
        states.push(rows[j].1);
    }
    Ok(TruthTrajectory {
        dt: record.dt,
        states,
    })
}
