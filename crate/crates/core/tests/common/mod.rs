//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spintrack::{default_params, FilterModel, HmmSpec, HomodyneRecord, SpinOperators, C64};
use statrs::distribution::{ChiSquared, ContinuousCDF};

// Diagonal instances where the quantum filter and smoother reduce to a
// classical hidden Markov model with a state-dependent drift in the signal.
//
// With the spin decoupled from the cavity (g = 0) the output operator is a
// scalar offset, so each block's trace is multiplied by `1 + s_n dY` with
// `s_n = 2 sqrt(eta) Re(e^{-i phi} c_n)`. The oracle below is written from
// that description alone, with a dense rate matrix.

pub struct ClassicalHmm {
    /// `q[n][m]`: rate from `n` to `m`, zero diagonal.
    pub q: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub dt: f64,
}

impl ClassicalHmm {
    pub fn new(n_fleas: usize, p: f64, s: Vec<f64>, dt: f64) -> Self {
        let m = n_fleas + 1;
        let mut q = vec![vec![0.0; m]; m];
        for n in 0..m {
            if n < n_fleas {
                q[n][n + 1] = p * (n_fleas - n) as f64;
            }
            if n > 0 {
                q[n][n - 1] = p * n as f64;
            }
        }
        Self { q, s, dt }
    }

    pub fn forward(&self, prob: &[f64], dy: f64) -> Vec<f64> {
        let m = prob.len();
        let w: Vec<f64> = (0..m).map(|n| prob[n] * (1.0 + self.s[n] * dy)).collect();
        let mut out = w.clone();
        for n in 0..m {
            for k in 0..m {
                out[k] += self.dt * self.q[n][k] * w[n];
                out[n] -= self.dt * self.q[n][k] * w[n];
            }
        }
        normalized(out)
    }

    pub fn backward(&self, beta: &[f64], dy: f64) -> Vec<f64> {
        let m = beta.len();
        let mixed: Vec<f64> = (0..m)
            .map(|n| {
                beta[n]
                    + self.dt
                        * (0..m)
                            .map(|k| self.q[n][k] * (beta[k] - beta[n]))
                            .sum::<f64>()
            })
            .collect();
        normalized((0..m).map(|n| mixed[n] * (1.0 + self.s[n] * dy)).collect())
    }
}

pub fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

pub struct Instance {
    pub spec: HmmSpec,
    pub model: FilterModel,
    pub oracle: ClassicalHmm,
    pub record: HomodyneRecord,
}

pub fn instance(steps: usize, seed: u64) -> Instance {
    let dt = 0.01;
    let spec = HmmSpec::new(24, 0.05, spintrack::DetuningGrid::reference()).unwrap();
    let mut p = default_params();
    p.g = 0.0;
    p.phi_lo = 0.3;
    p.eta = 0.8;
    let mut ops = Vec::new();
    let mut s = Vec::new();
    for (n, &delta) in spec.grid.values().iter().enumerate() {
        let mut o = SpinOperators::at(&p, delta);
        o.output.offset = C64::new(0.9 * delta, 0.2 * (n % 3) as f64);
        s.push(2.0 * o.sqrt_eta * (o.lo_phase * o.output.offset).re);
        ops.push(o);
    }
    let model = FilterModel::from_operators(&spec, ops, dt).unwrap();
    let oracle = ClassicalHmm::new(spec.n_fleas, spec.flea_rate, s, dt);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = spec.sample_trajectory(12, steps, dt, &mut rng).unwrap();
    let noise = Normal::new(0.0, dt.sqrt()).unwrap();
    let increments = truth
        .states
        .iter()
        .map(|&n| oracle.s[n] * dt + noise.sample(&mut rng))
        .collect();
    let record = HomodyneRecord {
        dt,
        increments,
        seed,
    };
    Instance {
        spec,
        model,
        oracle,
        record,
    }
}

pub fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Smoothed weights on the checkpoint grid from the classical forward and
/// backward recursions, paired with the forward weights.
pub fn classical_smoother(
    inst: &Instance,
    prior: &[f64],
    stride: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let len = inst.record.len();
    let m = prior.len();
    let mut betas = vec![vec![1.0 / m as f64; m]; len + 1];
    for k in (0..len).rev() {
        betas[k] = inst
            .oracle
            .backward(&betas[k + 1], inst.record.increments[k]);
    }
    let mut alpha = prior.to_vec();
    let mut out = Vec::new();
    for (k, beta) in betas.iter().enumerate() {
        if k % stride == 0 || k == len {
            let smooth = normalized(alpha.iter().zip(beta).map(|(a, b)| a * b).collect());
            out.push((alpha.clone(), smooth));
        }
        if k < len {
            alpha = inst.oracle.forward(&alpha, inst.record.increments[k]);
        }
    }
    out
}

/// Pearson chi-square p-value of `counts` against `probs`, pooling tail bins
/// until every expected count is at least 5.
pub fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * total as f64;
        if exp >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += obs;
        last.1 += exp;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (bins.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
