//! Retrodiction: backward propagation of the effect matrix and its
//! combination with the forward state into smoothed hypothesis weights.
//!
//! The backward step across `[t - dt, t]` is the exact dual of the forward
//! step across the same interval and consumes the same increment, so
//! `sum_n Tr(F(rho)_n E_n) = sum_n Tr(rho_n B(E)_n)` holds to rounding.

use crate::error::{Error, Result};
use crate::filter::{
    check_record_dt, checkpoint_steps, posterior, BlockState, FilterModel, PosteriorTrace,
};
use crate::truthsim::HomodyneRecord;

/// Normalized effect states on the checkpoint grid, in increasing time.
#[derive(Debug, Clone, Default)]
pub struct EffectTrace {
    pub times: Vec<f64>,
    pub effects: Vec<BlockState>,
}

impl FilterModel {
    /// One backward step over the interval carrying `dy`, trace-normalized.
    pub fn backward_step(&self, effect: &mut BlockState, dy: f64, step: usize) -> Result<()> {
        self.backward_linear(effect, dy);
        effect.normalize(step)
    }
}

/// Smoothed weights `Tr(rho_n E_n)`, normalized.
///
/// Small negative overlaps from integration error are clamped to zero.
pub fn pqs_posterior(rho: &BlockState, effect: &BlockState) -> Result<Vec<f64>> {
    if rho.len() != effect.len() {
        return Err(Error::GridMismatch(format!(
            "{} density blocks vs {} effect blocks",
            rho.len(),
            effect.len()
        )));
    }
    let mut w: Vec<f64> = rho
        .blocks
        .iter()
        .zip(&effect.blocks)
        .map(|(r, e)| r.trace_product(e))
        .collect();
    for x in &mut w {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DesyncedPqs);
    }
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}

/// Backward pass from `E(T) = I`, keeping every `stride`-th effect state.
pub fn run_backward(
    record: &HomodyneRecord,
    model: &FilterModel,
    stride: usize,
) -> Result<EffectTrace> {
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    check_record_dt(record, model)?;
    let steps = checkpoint_steps(record.len(), stride);
    let mut effects = Vec::with_capacity(steps.len());
    let mut effect = BlockState::identity(model.states());
    effect.normalize(record.len())?;
    effect.log_norm = 0.0;

    // Position in `steps` of the most recently stored effect.
    let mut next = steps.len() - 1;
    effects.push(effect.clone());
    for k in (0..record.len()).rev() {
        model.backward_step(&mut effect, record.increments[k], k)?;
        if next > 0 && steps[next - 1] == k {
            next -= 1;
            effects.push(effect.clone());
        }
    }
    effects.reverse();
    debug_assert_eq!(effects.len(), steps.len());
    Ok(EffectTrace {
        times: steps.iter().map(|&k| k as f64 * record.dt).collect(),
        effects,
    })
}

#[derive(Debug, Clone)]
pub struct PqsRun {
    pub forward: PosteriorTrace,
    pub smoothed: PosteriorTrace,
    pub log_likelihood: f64,
}

/// Forward filter and smoother over one record.
///
/// Effects are stored on the checkpoint grid during the backward pass; the
/// forward states are recomputed on the fly and combined at each checkpoint.
pub fn run_pqs(
    record: &HomodyneRecord,
    model: &FilterModel,
    prior: &[f64],
    stride: usize,
) -> Result<PqsRun> {
    let effects = run_backward(record, model, stride)?;
    let steps = checkpoint_steps(record.len(), stride);
    if prior.len() != model.states() {
        return Err(Error::GridMismatch(format!(
            "prior has {} entries, need {}",
            prior.len(),
            model.states()
        )));
    }
    let grid = model.grid();
    let mut forward = PosteriorTrace::new(model.states());
    let mut smoothed = PosteriorTrace::new(model.states());

    let mut state = BlockState::from_prior(prior);
    state.normalize(0)?;
    state.log_norm = 0.0;
    let mut combine = |slot: usize, state: &BlockState| -> Result<()> {
        let t = effects.times[slot];
        forward.push(t, &posterior(state), grid);
        smoothed.push(t, &pqs_posterior(state, &effects.effects[slot])?, grid);
        Ok(())
    };

    combine(0, &state)?;
    let mut slot = 1;
    for (k, &dy) in record.increments.iter().enumerate() {
        model.forward_step(&mut state, dy, k)?;
        if slot < steps.len() && steps[slot] == k + 1 {
            combine(slot, &state)?;
            slot += 1;
        }
    }
    Ok(PqsRun {
        forward,
        smoothed,
        log_likelihood: state.log_norm,
    })
}
