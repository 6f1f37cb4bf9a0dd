//! Detuning-dependent operators of the driven spin after the bad cavity has
//! been adiabatically eliminated.
//!
//! All rates are in units of the reference rate `gamma`, energies with
//! `hbar = 1`, and the drive amplitude `beta` in units of `sqrt(gamma)`.

use crate::error::{Error, Result};
use crate::qmat::{adjoint_dissipator, commutator, dissipator, CMat2, C64};

/// Physical constants of the spin, cavity and detection chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub g: f64,
    pub kappa: f64,
    pub kappa1: f64,
    pub delta_r: f64,
    pub beta_drive: f64,
    pub eta: f64,
    pub phi_lo: f64,
    pub gamma_dec: f64,
    pub gamma_phi: f64,
    pub delta_s0: f64,
    /// Lumped Lande factor times magnetic moment. Only used to convert
    /// detunings back to field values for reporting.
    pub zeeman_coupling: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        default_params()
    }
}

/// The reference operating point: `g = 2`, `kappa = kappa1 = 10`,
/// resonant drive with `beta = 1`, `gamma_dec = gamma_phi = 1`.
///
/// The local oscillator phase is `pi/2`: with `delta_r = 0` the `phi = 0`
/// quadrature is an even function of the spin detuning and cannot tell
/// `+delta` from `-delta`.
pub fn default_params() -> ModelParams {
    ModelParams {
        gamma: 1.0,
        g: 2.0,
        kappa: 10.0,
        kappa1: 10.0,
        delta_r: 0.0,
        beta_drive: 1.0,
        eta: 1.0,
        phi_lo: std::f64::consts::FRAC_PI_2,
        gamma_dec: 1.0,
        gamma_phi: 1.0,
        delta_s0: 0.0,
        zeeman_coupling: 1.0,
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.to_string()));
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.kappa1 > 0.0) || self.kappa < self.kappa1 {
            return bad("need kappa >= kappa1 > 0");
        }
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in [0, 1]");
        }
        if self.gamma_dec < 0.0 || self.gamma_phi < 0.0 {
            return bad("decay and dephasing rates must be non-negative");
        }
        let all = [
            self.g,
            self.kappa,
            self.delta_r,
            self.beta_drive,
            self.phi_lo,
            self.delta_s0,
            self.zeeman_coupling,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("non-finite parameter");
        }
        Ok(())
    }

    /// `g / kappa`; adiabatic elimination needs this well below one.
    pub fn bad_cavity_ratio(&self) -> f64 {
        self.g / self.kappa
    }

    pub fn bad_cavity_warning(&self) -> Option<String> {
        let r = self.bad_cavity_ratio();
        (r > 0.5).then(|| format!("g/kappa = {r:.3} > 0.5: bad-cavity elimination is questionable"))
    }

    /// Field value corresponding to a detuning shift, `delta = -(zeeman/2) B`.
    pub fn field_from_detuning(&self, delta: f64) -> f64 {
        -2.0 * delta / self.zeeman_coupling
    }

    fn spin_detuning(&self, delta_n: f64) -> f64 {
        self.delta_s0 + delta_n
    }
}

/// Uniformly spaced, strictly increasing detuning values.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningGrid {
    values: Vec<f64>,
}

impl DetuningGrid {
    pub fn uniform(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) {
            return Err(Error::InvalidParam(format!(
                "detuning grid needs count >= 2 and max > min (got {count}, [{min}, {max}])"
            )));
        }
        let step = (max - min) / (count - 1) as f64;
        let values = (0..count).map(|k| min + step * k as f64).collect();
        Ok(Self { values })
    }

    /// The reference grid: 25 points on `[-2, 2]`.
    pub fn reference() -> Self {
        Self::uniform(-2.0, 2.0, 25).expect("static grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.values[1] - self.values[0]
    }

    /// Mirror image `delta -> -delta` reversed so it stays increasing.
    pub fn mirrored(&self) -> Self {
        Self {
            values: self.values.iter().rev().map(|v| -v).collect(),
        }
    }
}

impl std::ops::Index<usize> for DetuningGrid {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Coherent intracavity amplitude `sqrt(2 kappa1) beta / (kappa + i delta_r)`.
pub fn drive_alpha(p: &ModelParams) -> C64 {
    (2.0 * p.kappa1).sqrt() * p.beta_drive / C64::new(p.kappa, p.delta_r)
}

/// Purcell rate `2 g^2 kappa / (kappa^2 + (delta_r - delta_s)^2)`.
pub fn purcell_rate(p: &ModelParams, delta_s: f64) -> f64 {
    let d = p.delta_r - delta_s;
    2.0 * p.g * p.g * p.kappa / (p.kappa * p.kappa + d * d)
}

/// Cavity-induced level shift `g^2 (delta_r - delta_s) / (kappa^2 + (delta_r - delta_s)^2)`.
pub fn epsilon_s(p: &ModelParams, delta_s: f64) -> f64 {
    let d = p.delta_r - delta_s;
    p.g * p.g * d / (p.kappa * p.kappa + d * d)
}

/// Spin Hamiltonian at grid detuning `delta_n`.
pub fn hamiltonian(p: &ModelParams, delta_n: f64) -> CMat2 {
    let ds = p.spin_detuning(delta_n);
    let alpha = drive_alpha(p);
    let eps = epsilon_s(p, ds);
    let sp = CMat2::sigma_plus();
    let sm = CMat2::sigma_minus();
    (0.5 * ds) * CMat2::sigma_z() + p.g * (alpha * sp + alpha.conj() * sm) - eps * (sp * sm)
}

/// Purcell decay, free-space decay and dephasing, in that order.
pub fn lindblads(p: &ModelParams, delta_n: f64) -> [CMat2; 3] {
    let ds = p.spin_detuning(delta_n);
    [
        purcell_rate(p, ds).sqrt() * CMat2::sigma_minus(),
        p.gamma_dec.sqrt() * CMat2::sigma_minus(),
        (0.5 * p.gamma_phi).sqrt() * CMat2::sigma_z(),
    ]
}

/// Output field operator `c_out = offset + coupling * sigma_-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputOperator {
    pub offset: C64,
    pub coupling: C64,
}

impl OutputOperator {
    pub fn matrix(&self) -> CMat2 {
        self.offset * CMat2::identity() + self.coupling * CMat2::sigma_minus()
    }
}

pub fn c_out(p: &ModelParams, delta_n: f64) -> OutputOperator {
    let ds = p.spin_detuning(delta_n);
    let root = (2.0 * p.kappa1).sqrt();
    let offset = root * drive_alpha(p) - p.beta_drive;
    let coupling = C64::new(0.0, -root * p.g) / C64::new(p.kappa, p.delta_r - ds);
    OutputOperator { offset, coupling }
}

/// Homodyne back-action `sqrt(eta) (e^{-i phi} c rho + e^{i phi} rho c^dagger)`.
pub fn meas_superop(p: &ModelParams, delta_n: f64, rho: CMat2) -> CMat2 {
    SpinOperators::at(p, delta_n).measurement(rho)
}

/// Everything the block integrators need at one detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub hamiltonian: CMat2,
    pub lindblads: Vec<CMat2>,
    pub output: OutputOperator,
    pub sqrt_eta: f64,
    /// `e^{-i phi}` for the local oscillator.
    pub lo_phase: C64,
}

impl SpinOperators {
    pub fn at(p: &ModelParams, delta_n: f64) -> Self {
        Self {
            hamiltonian: hamiltonian(p, delta_n),
            lindblads: lindblads(p, delta_n).to_vec(),
            output: c_out(p, delta_n),
            sqrt_eta: p.eta.sqrt(),
            lo_phase: C64::from_polar(1.0, -p.phi_lo),
        }
    }

    /// `-i[H, rho] + sum_i D[c_i] rho`
    pub fn lindbladian(&self, rho: CMat2) -> CMat2 {
        let mut out = C64::new(0.0, -1.0) * commutator(self.hamiltonian, rho);
        for c in &self.lindblads {
            out += dissipator(*c, rho);
        }
        out
    }

    /// `i[H, E] + sum_i D^dagger[c_i] E`
    pub fn adjoint_lindbladian(&self, e: CMat2) -> CMat2 {
        let mut out = C64::new(0.0, 1.0) * commutator(self.hamiltonian, e);
        for c in &self.lindblads {
            out += adjoint_dissipator(*c, e);
        }
        out
    }

    pub fn measurement(&self, rho: CMat2) -> CMat2 {
        let c = self.lo_phase * self.output.matrix();
        (c * rho + rho * c.adjoint()).scale_re(self.sqrt_eta)
    }

    pub fn adjoint_measurement(&self, e: CMat2) -> CMat2 {
        let c = self.lo_phase * self.output.matrix();
        (e * c + c.adjoint() * e).scale_re(self.sqrt_eta)
    }

    /// Mean homodyne signal rate `Tr[X rho]` for a normalized `rho`.
    pub fn signal_mean(&self, rho: &CMat2) -> f64 {
        self.measurement(*rho).trace().re
    }
}
