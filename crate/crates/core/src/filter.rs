//! Forward hybrid quantum-classical filter.
//!
//! The joint state of spin and hidden chain is block diagonal, one 2x2 block
//! per hypothesis `n`. Each step applies the linear (unnormalized) homodyne
//! SME to every block with that block's operators, redistributes blocks with
//! the chain's jump terms, then rescales the whole state to unit trace. The
//! discarded scale is accumulated in `log_norm`, which is the log-likelihood
//! of the record up to a constant.

use crate::error::{Error, Result};
use crate::markov::{mix_in_place, Direction, HmmSpec};
use crate::model::{DetuningGrid, ModelParams, SpinOperators};
use crate::qmat::{Herm2, Superop};
use crate::truthsim::HomodyneRecord;

/// Traces below this are treated as a collapse of every hypothesis.
const TRACE_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub blocks: Vec<Herm2>,
    pub log_norm: f64,
}

impl BlockState {
    pub fn from_blocks(blocks: Vec<Herm2>) -> Self {
        Self {
            blocks,
            log_norm: 0.0,
        }
    }

    /// `rho_n = prior_n * I / 2`.
    pub fn from_prior(prior: &[f64]) -> Self {
        Self::from_blocks(
            prior
                .iter()
                .map(|&w| {
                    let mut b = Herm2::mixed();
                    b.scale(w);
                    b
                })
                .collect(),
        )
    }

    /// Effect boundary condition: identity in every block.
    pub fn identity(m: usize) -> Self {
        Self::from_blocks(vec![Herm2::identity(); m])
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(Herm2::trace).sum()
    }

    /// Rescales to unit total trace, folding the factor into `log_norm`.
    pub fn normalize(&mut self, step: usize) -> Result<()> {
        let total = self.total_trace();
        if !total.is_finite() {
            return Err(Error::NonFinite { step });
        }
        if total <= TRACE_FLOOR {
            return Err(Error::TraceUnderflow { step, trace: total });
        }
        let inv = 1.0 / total;
        for b in &mut self.blocks {
            b.scale(inv);
        }
        self.log_norm += total.ln();
        Ok(())
    }
}

/// Normalized block traces, `P(n) = Tr rho_n / sum_m Tr rho_m`.
pub fn posterior(state: &BlockState) -> Vec<f64> {
    let total = state.total_trace();
    state.blocks.iter().map(|b| b.trace() / total).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn map_index(prob: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in prob.iter().enumerate().skip(1) {
        if p > prob[best] {
            best = k;
        }
    }
    best
}

/// Precomputed one-step maps of a single hypothesis block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPropagator {
    /// `1 + dt L`
    pub drift: Superop,
    /// `X_phi`
    pub meas: Superop,
    /// `1 + dt L^dagger`
    pub adj_drift: Superop,
    /// `X_phi^dagger`
    pub adj_meas: Superop,
}

impl BlockPropagator {
    pub fn new(ops: &SpinOperators, dt: f64) -> Self {
        let id = Superop::identity();
        Self {
            drift: id.plus_scaled(dt, &Superop::from_map(|r| ops.lindbladian(r))),
            meas: Superop::from_map(|r| ops.measurement(r)),
            adj_drift: id.plus_scaled(dt, &Superop::from_map(|e| ops.adjoint_lindbladian(e))),
            adj_meas: Superop::from_map(|e| ops.adjoint_measurement(e)),
        }
    }

    #[inline]
    pub fn forward(&self, v: &Herm2, dy: f64) -> Herm2 {
        let mut out = self.drift.apply(v);
        out.add_scaled(dy, &self.meas.apply(v));
        out
    }

    #[inline]
    pub fn backward(&self, v: &Herm2, dy: f64) -> Herm2 {
        let mut out = self.adj_drift.apply(v);
        out.add_scaled(dy, &self.adj_meas.apply(v));
        out
    }
}

/// The extended-state model at a fixed step size: the hidden chain plus one
/// propagator per hypothesis.
#[derive(Debug, Clone)]
pub struct FilterModel {
    pub spec: HmmSpec,
    pub dt: f64,
    pub propagators: Vec<BlockPropagator>,
}

impl FilterModel {
    pub fn new(spec: &HmmSpec, p: &ModelParams, dt: f64) -> Result<Self> {
        p.validate()?;
        let ops = spec
            .grid
            .values()
            .iter()
            .map(|&d| SpinOperators::at(p, d))
            .collect();
        Self::from_operators(spec, ops, dt)
    }

    /// Builds from arbitrary per-block operators, one per hidden state.
    pub fn from_operators(spec: &HmmSpec, ops: Vec<SpinOperators>, dt: f64) -> Result<Self> {
        spec.validate()?;
        spec.check_step(dt)?;
        if ops.len() != spec.states() {
            return Err(Error::GridMismatch(format!(
                "{} operator sets for {} hidden states",
                ops.len(),
                spec.states()
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            dt,
            propagators: ops.iter().map(|o| BlockPropagator::new(o, dt)).collect(),
        })
    }

    pub fn states(&self) -> usize {
        self.spec.states()
    }

    pub fn grid(&self) -> &DetuningGrid {
        &self.spec.grid
    }

    /// Unnormalized update: blockwise SME, then jump redistribution.
    #[inline]
    pub fn forward_linear(&self, state: &mut BlockState, dy: f64) {
        for (b, prop) in state.blocks.iter_mut().zip(&self.propagators) {
            *b = prop.forward(b, dy);
        }
        mix_in_place(&mut state.blocks, &self.spec, self.dt, Direction::Forward);
    }

    /// Unnormalized adjoint update across the same interval: adjoint jump
    /// redistribution, then the blockwise adjoint SME.
    #[inline]
    pub fn backward_linear(&self, state: &mut BlockState, dy: f64) {
        mix_in_place(&mut state.blocks, &self.spec, self.dt, Direction::Backward);
        for (b, prop) in state.blocks.iter_mut().zip(&self.propagators) {
            *b = prop.backward(b, dy);
        }
    }

    /// One filter step over the interval carrying `dy`.
    pub fn forward_step(&self, state: &mut BlockState, dy: f64, step: usize) -> Result<()> {
        self.forward_linear(state, dy);
        state.normalize(step)
    }
}

/// Time-resolved posterior over the hidden states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosteriorTrace {
    pub times: Vec<f64>,
    /// Row-major, `states` entries per time.
    pub prob: Vec<f64>,
    pub states: usize,
    pub map_index: Vec<usize>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl PosteriorTrace {
    pub fn new(states: usize) -> Self {
        Self {
            states,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, prob: &[f64], grid: &DetuningGrid) {
        debug_assert_eq!(prob.len(), self.states);
        let mean: f64 = prob.iter().zip(grid.values()).map(|(w, d)| w * d).sum();
        let var: f64 = prob
            .iter()
            .zip(grid.values())
            .map(|(w, d)| w * (d - mean) * (d - mean))
            .sum();
        self.times.push(t);
        self.prob.extend_from_slice(prob);
        self.map_index.push(map_index(prob));
        self.mean.push(mean);
        self.var.push(var);
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.prob[k * self.states..(k + 1) * self.states]
    }

    pub fn map_detuning<'a>(&'a self, grid: &'a DetuningGrid) -> impl Iterator<Item = f64> + 'a {
        self.map_index.iter().map(move |&n| grid[n])
    }
}

/// Step indices at which traces are recorded: every `stride`-th step from 0,
/// plus the final step.
pub fn checkpoint_steps(len: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (0..=len).step_by(stride).collect();
    if out.last() != Some(&len) {
        out.push(len);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ForwardRun {
    pub trace: PosteriorTrace,
    /// Normalized states on the checkpoint grid (empty unless requested).
    pub checkpoints: Vec<BlockState>,
    /// Log-likelihood of the record relative to the reference Wiener measure.
    pub log_likelihood: f64,
}

fn check_prior(prior: &[f64], m: usize) -> Result<()> {
    if prior.len() != m {
        return Err(Error::GridMismatch(format!(
            "prior has {} entries, need {m}",
            prior.len()
        )));
    }
    if prior.iter().any(|&w| !(w >= 0.0)) || !(prior.iter().sum::<f64>() > 0.0) {
        return Err(Error::InvalidParam(
            "prior must be non-negative with positive mass".into(),
        ));
    }
    Ok(())
}

/// Filters a whole record from `rho_n = prior_n I/2`, recording the posterior
/// every `stride` steps.
pub fn run_forward(
    record: &HomodyneRecord,
    model: &FilterModel,
    prior: &[f64],
    stride: usize,
    keep_checkpoints: bool,
) -> Result<ForwardRun> {
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    check_record_dt(record, model)?;
    check_prior(prior, model.states())?;
    let grid = model.grid();
    let stride = stride.max(1);
    let len = record.len();

    let mut state = BlockState::from_prior(prior);
    state.normalize(0)?;
    state.log_norm = 0.0;
    let mut trace = PosteriorTrace::new(model.states());
    let mut checkpoints = Vec::new();
    let mut record_point = |k: usize, state: &BlockState| {
        trace.push(k as f64 * record.dt, &posterior(state), grid);
        if keep_checkpoints {
            checkpoints.push(state.clone());
        }
    };

    record_point(0, &state);
    for (k, &dy) in record.increments.iter().enumerate() {
        model.forward_step(&mut state, dy, k)?;
        let done = k + 1;
        if done % stride == 0 || done == len {
            record_point(done, &state);
        }
    }
    Ok(ForwardRun {
        trace,
        checkpoints,
        log_likelihood: state.log_norm,
    })
}

pub(crate) fn check_record_dt(record: &HomodyneRecord, model: &FilterModel) -> Result<()> {
    if (record.dt - model.dt).abs() > 1e-12 * model.dt {
        return Err(Error::InvalidParam(format!(
            "record dt {} differs from model dt {}",
            record.dt, model.dt
        )));
    }
    Ok(())
}
