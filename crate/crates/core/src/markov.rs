//! Ehrenfest dog-flea chain: `N` fleas each hopping at rate `p` between two
//! dogs. State `n` is the number of fleas on the first dog; it maps to the
//! detuning `grid[n]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::BlockState;
use crate::model::DetuningGrid;
use crate::qmat::Herm2;

#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    pub n_fleas: usize,
    pub flea_rate: f64,
    pub grid: DetuningGrid,
}

impl Default for HmmSpec {
    fn default() -> Self {
        Self {
            n_fleas: 24,
            flea_rate: 0.02,
            grid: DetuningGrid::reference(),
        }
    }
}

/// Which way a block state is propagated by [`mix_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Probability flow on density blocks.
    Forward,
    /// Dual flow on effect blocks (transposed rates).
    Backward,
}

/// One nonzero jump channel `|n><n| -> |n'><n'|` with its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpTerm {
    pub source: usize,
    pub target: usize,
    pub rate: f64,
}

impl HmmSpec {
    pub fn new(n_fleas: usize, flea_rate: f64, grid: DetuningGrid) -> Result<Self> {
        let spec = Self {
            n_fleas,
            flea_rate,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.n_fleas + 1 {
            return Err(Error::GridMismatch(format!(
                "{} fleas need {} grid points, got {}",
                self.n_fleas,
                self.n_fleas + 1,
                self.grid.len()
            )));
        }
        if !(self.flea_rate >= 0.0) || !self.flea_rate.is_finite() {
            return Err(Error::InvalidParam(
                "flea rate must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Number of hidden states, `N + 1`.
    pub fn states(&self) -> usize {
        self.n_fleas + 1
    }

    /// `(r_{n->n+1}, r_{n->n-1}) = (p (N - n), p n)`.
    pub fn rates(&self, n: usize) -> Result<(f64, f64)> {
        if n > self.n_fleas {
            return Err(Error::StateOutOfRange {
                index: n,
                max: self.n_fleas,
            });
        }
        Ok(self.rates_unchecked(n))
    }

    #[inline]
    fn rates_unchecked(&self, n: usize) -> (f64, f64) {
        let p = self.flea_rate;
        (p * (self.n_fleas - n) as f64, p * n as f64)
    }

    /// Largest total escape rate over all states (`p N` for this chain).
    pub fn max_total_rate(&self) -> f64 {
        (0..self.states())
            .map(|n| {
                let (u, d) = self.rates_unchecked(n);
                u + d
            })
            .fold(0.0, f64::max)
    }

    /// Binomial(N, 1/2) weights.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.n_fleas;
        // Pascal's row in log space so large N stays finite.
        let mut log_binom = vec![0.0f64; n + 1];
        for k in 1..=n {
            log_binom[k] = log_binom[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let shift = n as f64 * std::f64::consts::LN_2;
        log_binom.iter().map(|l| (l - shift).exp()).collect()
    }

    pub fn jump_op(&self, n: usize, n2: usize) -> Result<JumpTerm> {
        let max = self.n_fleas;
        for idx in [n, n2] {
            if idx > max {
                return Err(Error::StateOutOfRange { index: idx, max });
            }
        }
        let (up, down) = self.rates_unchecked(n);
        let rate = if n2 == n + 1 {
            up
        } else if n2 + 1 == n {
            down
        } else {
            return Err(Error::NotNeighbours { from: n, to: n2 });
        };
        Ok(JumpTerm {
            source: n,
            target: n2,
            rate,
        })
    }

    /// All jump channels with nonzero rate.
    pub fn jump_terms(&self) -> Vec<JumpTerm> {
        let mut out = Vec::with_capacity(2 * self.n_fleas);
        for n in 0..self.states() {
            for n2 in [n.wrapping_sub(1), n + 1] {
                if let Ok(term) = self.jump_op(n, n2) {
                    if term.rate > 0.0 {
                        out.push(term);
                    }
                }
            }
        }
        out
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (n, w) in self.stationary().into_iter().enumerate() {
            acc += w;
            if u < acc {
                return n;
            }
        }
        self.n_fleas
    }

    /// Checks that a first-order jump probability is valid at this step.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        let prob = dt * self.max_total_rate();
        if !(dt > 0.0) || prob >= 0.1 {
            return Err(Error::StepTooLarge { dt, prob });
        }
        Ok(())
    }

    /// Advances a hidden state by one step: at most one jump, with
    /// probabilities `rate * dt`.
    #[inline]
    pub fn jump<R: Rng + ?Sized>(&self, n: usize, dt: f64, rng: &mut R) -> usize {
        let (up, down) = self.rates_unchecked(n);
        let u: f64 = rng.random();
        if u < up * dt {
            n + 1
        } else if u < (up + down) * dt {
            n - 1
        } else {
            n
        }
    }

    pub fn sample_trajectory<R: Rng + ?Sized>(
        &self,
        n0: usize,
        steps: usize,
        dt: f64,
        rng: &mut R,
    ) -> Result<TruthTrajectory> {
        self.validate()?;
        self.check_step(dt)?;
        if n0 > self.n_fleas {
            return Err(Error::StateOutOfRange {
                index: n0,
                max: self.n_fleas,
            });
        }
        let mut states = Vec::with_capacity(steps);
        let mut n = n0;
        for _ in 0..steps {
            states.push(n);
            n = self.jump(n, dt, rng);
        }
        Ok(TruthTrajectory { dt, states })
    }

    /// Relabels `n -> N - n` and negates the grid.
    pub fn mirrored(&self) -> Self {
        Self {
            n_fleas: self.n_fleas,
            flea_rate: self.flea_rate,
            grid: self.grid.mirrored(),
        }
    }
}

/// Hidden state `states[k]` holds over `[k dt, (k+1) dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    pub dt: f64,
    pub states: Vec<usize>,
}

impl TruthTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn detunings<'a>(&'a self, grid: &'a DetuningGrid) -> impl Iterator<Item = f64> + 'a {
        self.states.iter().map(move |&n| grid[n])
    }
}

/// Classical redistribution among blocks over one step, in place.
pub fn mix_in_place(blocks: &mut [Herm2], spec: &HmmSpec, dt: f64, direction: Direction) {
    let m = blocks.len();
    debug_assert_eq!(m, spec.states());
    // Original value of blocks[n - 1]; blocks[n + 1] is still untouched.
    let mut prev = Herm2::zero();
    for n in 0..m {
        let old = blocks[n];
        let (up, down) = spec.rates_unchecked(n);
        let mut acc = old;
        acc.add_scaled(-dt * (up + down), &old);
        match direction {
            Direction::Forward => {
                if n > 0 {
                    let (up_prev, _) = spec.rates_unchecked(n - 1);
                    acc.add_scaled(dt * up_prev, &prev);
                }
                if n + 1 < m {
                    let (_, down_next) = spec.rates_unchecked(n + 1);
                    acc.add_scaled(dt * down_next, &blocks[n + 1]);
                }
            }
            Direction::Backward => {
                if n + 1 < m {
                    acc.add_scaled(dt * up, &blocks[n + 1]);
                }
                if n > 0 {
                    acc.add_scaled(dt * down, &prev);
                }
            }
        }
        blocks[n] = acc;
        prev = old;
    }
}

/// First-order Euler step of the jump dissipators `sum D[I (x) J_nn']`
/// (forward) or their adjoints (backward).
pub fn mix_step(state: &BlockState, spec: &HmmSpec, dt: f64, direction: Direction) -> BlockState {
    let mut out = state.clone();
    mix_in_place(&mut out.blocks, spec, dt, direction);
    out
}
