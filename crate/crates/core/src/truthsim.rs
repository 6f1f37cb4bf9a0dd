//! Ground-truth generation: the hidden chain drives the true spin, which is
//! integrated with the normalized homodyne SME while the signal increments
//! are synthesized from the same state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::markov::{HmmSpec, TruthTrajectory};
use crate::model::{ModelParams, SpinOperators};
use crate::qmat::CMat2;

/// Signal increments `dY_k` over `[k dt, (k+1) dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneRecord {
    pub dt: f64,
    pub increments: Vec<f64>,
    pub seed: u64,
}

impl HomodyneRecord {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len() as f64
    }
}

/// One Euler-Maruyama step of the normalized SME, returning the new state and
/// the signal increment `dY = Tr[X rho] dt + dW`.
pub fn true_step<R: Rng + ?Sized>(
    rho: &CMat2,
    ops: &SpinOperators,
    dt: f64,
    rng: &mut R,
) -> Result<(CMat2, f64)> {
    let dw: f64 = rng.sample::<f64, _>(StandardNormal) * dt.sqrt();
    let x_rho = ops.measurement(*rho);
    let mean = x_rho.trace().re;
    let dy = mean * dt + dw;
    let innovation = x_rho - mean * *rho;
    let next = (*rho + dt * ops.lindbladian(*rho) + dw * innovation).hermitize();
    let tr = next.trace().re;
    if !next.is_finite() || !(tr > 0.0) {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok((next.scale_re(1.0 / tr), dy))
}

/// Everything produced by one seeded ground-truth run.
#[derive(Debug, Clone)]
pub struct GeneratedRun {
    pub truth: TruthTrajectory,
    pub record: HomodyneRecord,
    /// `(t, rho(t))` every `diag_stride` steps, starting at `t = 0`.
    pub spin_trace: Vec<(f64, CMat2)>,
}

/// Runs the hidden chain and the true spin in lock-step.
///
/// The initial hidden state is drawn from the stationary law and the spin
/// starts maximally mixed. Fully determined by `seed`.
pub fn generate(
    spec: &HmmSpec,
    p: &ModelParams,
    steps: usize,
    dt: f64,
    seed: u64,
    diag_stride: usize,
) -> Result<GeneratedRun> {
    spec.validate()?;
    spec.check_step(dt)?;
    p.validate()?;
    let ops: Vec<SpinOperators> = spec
        .grid
        .values()
        .iter()
        .map(|&d| SpinOperators::at(p, d))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = spec.sample_stationary(&mut rng);
    let mut rho = CMat2::identity().scale_re(0.5);

    let stride = diag_stride.max(1);
    let mut states = Vec::with_capacity(steps);
    let mut increments = Vec::with_capacity(steps);
    let mut spin_trace = Vec::with_capacity(steps / stride + 1);
    for k in 0..steps {
        if k % stride == 0 {
            spin_trace.push((k as f64 * dt, rho));
        }
        states.push(n);
        let (next, dy) =
            true_step(&rho, &ops[n], dt, &mut rng).map_err(|_| Error::NonFinite { step: k })?;
        rho = next;
        increments.push(dy);
        n = spec.jump(n, dt, &mut rng);
    }
    if steps.is_multiple_of(stride) {
        spin_trace.push((steps as f64 * dt, rho));
    }

    Ok(GeneratedRun {
        truth: TruthTrajectory { dt, states },
        record: HomodyneRecord {
            dt,
            increments,
            seed,
        },
        spin_trace,
    })
}
