//! Constructors for the clock models: quasi-ideal, Erlang chain, the
//! thermally extended light-matter clock, the heat-driven ladder clock and
//! the virtual-qubit waiting-time density.
//!
//! Units: ħ = 1, clockwork level spacing `omega0` defaults to 1, and all
//! rates are quoted in units of `omega0`.

use std::collections::BTreeMap;

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Operator, StateVector};

/// Entropy bookkeeping for one dissipator.
#[derive(Debug, Clone, PartialEq)]
pub enum BathTag {
    /// Books `-beta * tr[H_S D_j(rho)]` against a single bath; the heat is
    /// read off the system Hamiltonian.
    SystemEnergy { label: String, beta: f64 },
    /// Books `rate * sum_k beta_k * heat_k` per jump event, for jumps
    /// mediated by several baths at once. `heat` is energy flowing *into*
    /// the named bath. An empty term list means the dissipator is accounted
    /// for but produces no bath entropy (e.g. a recoverable tick photon).
    PerJump { terms: Vec<BathTerm> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathTerm {
    pub label: String,
    pub beta: f64,
    pub heat: f64,
}

/// A finite-dimensional ticking clock: Hamiltonian, tick jump operators,
/// non-tick noise operators and the initial clockwork state.
///
/// Dissipator indices used in `bath_tags` run over tick operators first,
/// then noise operators.
#[derive(Debug, Clone)]
pub struct ClockSpec {
    dim: usize,
    hamiltonian: Operator,
    tick_ops: Vec<Operator>,
    noise_ops: Vec<Operator>,
    initial_state: DensityMatrix,
    bath_tags: BTreeMap<usize, BathTag>,
    warnings: Vec<String>,
}

impl ClockSpec {
    const TRACE_TOL: f64 = 1e-10;

    pub fn new(
        hamiltonian: Operator,
        tick_ops: Vec<Operator>,
        noise_ops: Vec<Operator>,
        initial_state: DensityMatrix,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        for op in tick_ops.iter().chain(noise_ops.iter()) {
            if op.dim() != dim {
                return Err(Error::InvalidInput("clock operator dimension mismatch".into()));
            }
        }
        if initial_state.dim() != dim {
            return Err(Error::InvalidInput("initial state dimension mismatch".into()));
        }
        if (initial_state.trace() - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidInput("initial state must have unit trace".into()));
        }
        if !tick_ops.iter().any(|j| j.frobenius_norm() > 0.0) {
            return Err(Error::InvalidInput("clock needs at least one nonzero tick operator".into()));
        }
        Ok(Self {
            dim,
            hamiltonian,
            tick_ops,
            noise_ops,
            initial_state,
            bath_tags: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn with_bath_tags(mut self, tags: BTreeMap<usize, BathTag>) -> Self {
        self.bath_tags = tags;
        self
    }

    fn push_warning(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn tick_ops(&self) -> &[Operator] {
        &self.tick_ops
    }

    pub fn noise_ops(&self) -> &[Operator] {
        &self.noise_ops
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    pub fn bath_tags(&self) -> &BTreeMap<usize, BathTag> {
        &self.bath_tags
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_noise_free(&self) -> bool {
        self.noise_ops.is_empty()
    }

    /// Tick-rate operator `V = (1/2) sum_j J_j^dag J_j`.
    pub fn v_hat(&self) -> Operator {
        let mut v = Operator::zeros(self.dim).into_matrix();
        for j in &self.tick_ops {
            v = v + j.dagger().matrix().dot(j.matrix());
        }
        Operator::new(v * C64::new(0.5, 0.0)).expect("finite")
    }

    /// Dissipator by global index (ticks first, then noise).
    pub fn dissipator_op(&self, index: usize) -> Option<&Operator> {
        if index < self.tick_ops.len() {
            self.tick_ops.get(index)
        } else {
            self.noise_ops.get(index - self.tick_ops.len())
        }
    }

    pub fn dissipator_count(&self) -> usize {
        self.tick_ops.len() + self.noise_ops.len()
    }
}

/// Discrete Fourier transform of the energy basis:
/// `|t_k> = d^(-1/2) sum_j exp(-i 2 pi j k / d) |E_j>`.
pub fn fourier_basis(d: usize) -> Result<Vec<StateVector>> {
    if d == 0 {
        return Err(Error::InvalidInput("fourier_basis requires d >= 1".into()));
    }
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|k| {
            let amps = Array1::from_iter((0..d).map(|j| {
                let phase = -2.0 * std::f64::consts::PI * (j as f64) * (k as f64) / d as f64;
                C64::from_polar(norm, phase)
            }));
            StateVector::new(amps)
        })
        .collect()
}

/// Time-basis state `|t_k>` of dimension `d`.
pub fn time_state(d: usize, k: usize) -> Result<StateVector> {
    if k >= d {
        return Err(Error::InvalidInput(format!("time state index {k} out of range for d = {d}")));
    }
    Ok(fourier_basis(d)?.swap_remove(k))
}

/// Quasi-ideal clock: harmonic clockwork with rank-one tick jumps out of the
/// time basis.
#[derive(Debug, Clone)]
pub struct QuasiIdealParams {
    pub d: usize,
    pub omega0: f64,
    pub v: Vec<f64>,
    pub psi: StateVector,
}

impl QuasiIdealParams {
    pub fn new(d: usize, omega0: f64, v: Vec<f64>, psi: StateVector) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("quasi-ideal clock requires d >= 1".into()));
        }
        if v.len() != d {
            return Err(Error::InvalidInput(format!("expected {d} coupling coefficients, got {}", v.len())));
        }
        if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidInput("coupling coefficients must be finite and >= 0".into()));
        }
        if psi.dim() != d {
            return Err(Error::InvalidInput("initial state dimension mismatch".into()));
        }
        if !(omega0 > 0.0) {
            return Err(Error::InvalidInput("omega0 must be positive".into()));
        }
        Ok(Self { d, omega0, v, psi })
    }
}

/// Harmonic clockwork Hamiltonian `sum_n omega0 n |E_n><E_n|`.
pub fn harmonic_hamiltonian(d: usize, omega0: f64) -> Operator {
    let diag: Vec<C64> = (0..d).map(|n| C64::new(omega0 * n as f64, 0.0)).collect();
    Operator::from_diag(&diag)
}

/// Builds the quasi-ideal clock: `H = sum_n omega0 n |E_n><E_n|`, tick jumps
/// `J_j = sqrt(2 V_j) |psi><t_j|`, no noise operators. Zero-rate channels
/// are omitted; `sum_j J_j^dag J_j = 2 sum_j V_j |t_j><t_j|` either way.
pub fn build_quasi_ideal(params: &QuasiIdealParams) -> Result<ClockSpec> {
    let d = params.d;
    let basis = fourier_basis(d)?;
    let h = harmonic_hamiltonian(d, params.omega0);
    let mut tick_ops = Vec::new();
    for (j, &vj) in params.v.iter().enumerate() {
        if vj > 0.0 {
            let amp = C64::new((2.0 * vj).sqrt(), 0.0);
            tick_ops.push(Operator::outer(&params.psi, &basis[j]).scale(amp));
        }
    }
    ClockSpec::new(h, tick_ops, Vec::new(), DensityMatrix::from_pure(&params.psi))
}

/// Classical Erlang chain: `d` identical exponential stages at rate `gamma`,
/// ticking (and restarting at level 0) from the last stage.
pub fn build_erlang(d: usize, gamma: f64) -> Result<ClockSpec> {
    if d == 0 {
        return Err(Error::InvalidInput("erlang chain requires d >= 1".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput("erlang rate must be positive".into()));
    }
    let h = Operator::zeros(d);
    let amp = C64::new(gamma.sqrt(), 0.0);
    let mut noise_ops = Vec::new();
    for k in 0..d.saturating_sub(1) {
        let up = Operator::outer(&StateVector::basis(d, k + 1)?, &StateVector::basis(d, k)?);
        noise_ops.push(up.scale(amp));
    }
    let tick = Operator::outer(&StateVector::basis(d, 0)?, &StateVector::basis(d, d - 1)?).scale(amp);
    let init = DensityMatrix::from_pure(&StateVector::basis(d, 0)?);
    ClockSpec::new(h, vec![tick], noise_ops, init)
}

/// Mean photon occupation of a bath mode: `N = 1 / (exp(beta omega) - 1)`.
pub fn planck_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput("planck_occupation requires omega > 0".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput("planck_occupation requires beta > 0".into()));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// Isotropic-field decay coefficient in natural units (c = 1):
/// `Gamma(omega) = (2 omega^3 / 3)(1 + N)` for emission (`omega > 0`) and
/// `Gamma(-omega) = (2 omega^3 / 3) N` for the absorption branch.
pub fn gamma_coefficient(omega: f64, occupation: f64) -> Result<f64> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidInput("gamma_coefficient requires omega != 0".into()));
    }
    let w = omega.abs();
    let base = 2.0 * w.powi(3) / 3.0;
    Ok(if omega > 0.0 { base * (1.0 + occupation) } else { base * occupation })
}

/// One thermal decay channel of the extended clock.
#[derive(Debug, Clone)]
pub struct ThermalChannel {
    /// Flux-loop index selecting the time-basis mode `|t_m>` the channel
    /// couples to.
    pub m: usize,
    /// Energy gap between `|E_0>` and this channel's secondary level.
    pub omega_gap: f64,
    /// Mean bath occupation `N` at the channel frequency.
    pub occupation: f64,
}

/// Quasi-ideal clock extended by explicit secondary levels and a thermal
/// photon bath (emission plus absorption).
#[derive(Debug, Clone)]
pub struct ThermalExtensionParams {
    pub base: QuasiIdealParams,
    pub channels: Vec<ThermalChannel>,
    /// Whether photon absorption also advances the tick register.
    pub absorption_ticks: bool,
    /// Photon-bath inverse temperature used for entropy bookkeeping.
    pub beta: Option<f64>,
}

/// Builds the thermally extended clock on `d + L` levels.
///
/// Emission jumps `sqrt(2 V_m (1 + N)) |sec_m><t_m|` are always tick
/// operators; absorption jumps `sqrt(2 V_m N) |t_m><sec_m|` land in
/// `noise_ops` unless `absorption_ticks` is set.
pub fn build_thermal_extended(params: &ThermalExtensionParams) -> Result<ClockSpec> {
    let d = params.base.d;
    let l = params.channels.len();
    if l == 0 {
        return Err(Error::InvalidInput("thermal extension requires at least one channel".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for ch in &params.channels {
        if ch.m >= d {
            return Err(Error::InvalidInput(format!("flux index {} out of range for d = {d}", ch.m)));
        }
        if !seen.insert(ch.m) {
            return Err(Error::InvalidInput(format!("duplicate flux index {}", ch.m)));
        }
        if ch.occupation < 0.0 || !ch.occupation.is_finite() {
            return Err(Error::InvalidInput("occupation must be finite and >= 0".into()));
        }
    }

    let dim = d + l;
    let mut warnings = Vec::new();
    let mut diag: Vec<C64> = (0..d).map(|n| C64::new(params.base.omega0 * n as f64, 0.0)).collect();
    for ch in &params.channels {
        if ch.omega_gap < 10.0 * d as f64 * params.base.omega0 {
            warnings.push(format!(
                "channel m={} gap {} below 10*d*omega0 = {}; level separation assumption is weak",
                ch.m,
                ch.omega_gap,
                10.0 * d as f64 * params.base.omega0
            ));
        }
        diag.push(C64::new(-ch.omega_gap, 0.0));
    }
    let h = Operator::from_diag(&diag);

    let basis = fourier_basis(d)?;
    let embed = |s: &StateVector| -> StateVector {
        let mut amps = Array1::zeros(dim);
        amps.slice_mut(ndarray::s![..d]).assign(s.amplitudes());
        StateVector::new(amps).expect("embedding preserves norm")
    };

    let mut tick_ops = Vec::new();
    let mut absorption_ops = Vec::new();
    for (j, ch) in params.channels.iter().enumerate() {
        let v_m = params.base.v[ch.m];
        let sec = StateVector::basis(dim, d + j)?;
        let t_m = embed(&basis[ch.m]);
        let emit_rate = 2.0 * v_m * (1.0 + ch.occupation);
        let absorb_rate = 2.0 * v_m * ch.occupation;
        if emit_rate > 0.0 {
            tick_ops.push(Operator::outer(&sec, &t_m).scale(C64::new(emit_rate.sqrt(), 0.0)));
        }
        if absorb_rate > 0.0 {
            absorption_ops.push(Operator::outer(&t_m, &sec).scale(C64::new(absorb_rate.sqrt(), 0.0)));
        }
    }
    let mut noise_ops = Vec::new();
    if params.absorption_ticks {
        tick_ops.extend(absorption_ops);
    } else {
        noise_ops = absorption_ops;
    }

    let init = DensityMatrix::from_pure(&embed(&params.base.psi));
    let mut clock = ClockSpec::new(h, tick_ops, noise_ops, init)?;
    if let Some(beta) = params.beta {
        let mut tags = BTreeMap::new();
        for idx in 0..clock.dissipator_count() {
            tags.insert(idx, BathTag::SystemEnergy { label: "photon".into(), beta });
        }
        clock = clock.with_bath_tags(tags);
    }
    for w in warnings {
        clock.push_warning(w);
    }
    Ok(clock)
}

/// Heat-driven ladder clock parameters. The hot and cold baths thermalize
/// two qubits whose joint (virtual) inversion drives the ladder upward.
#[derive(Debug, Clone)]
pub struct LadderClockParams {
    pub d: usize,
    pub e_h: f64,
    pub e_c: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    /// Overall equilibration rate scale of the ladder-virtual-qubit coupling.
    pub coupling_rate: f64,
    /// Decay rate of the tick transition from the top of the ladder.
    pub tick_rate: f64,
}

impl LadderClockParams {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidInput("ladder requires d >= 2".into()));
        }
        if !(self.beta_c > self.beta_h && self.beta_h > 0.0) {
            return Err(Error::InvalidInput("need beta_c > beta_h > 0".into()));
        }
        if !(self.e_h > self.e_c && self.e_c > 0.0) {
            return Err(Error::InvalidInput("need E_h > E_c > 0".into()));
        }
        if !(self.coupling_rate > 0.0 && self.tick_rate > 0.0) {
            return Err(Error::InvalidInput("rates must be positive".into()));
        }
        Ok(())
    }

    /// Energy gained by the ladder per climbed rung.
    pub fn e_w(&self) -> f64 {
        self.e_h - self.e_c
    }

    /// Virtual-bath inverse temperature; negative iff the virtual qubit is
    /// population inverted (`gamma_up > gamma_down`).
    pub fn beta_v(&self) -> f64 {
        (self.beta_h * self.e_h - self.beta_c * self.e_c) / self.e_w()
    }

    /// Bath entropy booked per climbed rung.
    pub fn entropy_per_rung(&self) -> f64 {
        self.beta_c * self.e_c - self.beta_h * self.e_h
    }

    pub fn gamma_up(&self) -> f64 {
        self.coupling_rate * (-self.beta_v() * self.e_w() / 2.0).exp()
    }

    pub fn gamma_down(&self) -> f64 {
        self.coupling_rate * (self.beta_v() * self.e_w() / 2.0).exp()
    }
}

/// Builds the ladder clock as a classical birth-death Lindbladian with the
/// virtual-qubit rate ratio `gamma_up / gamma_down = exp(-beta_v E_w)`.
///
/// Up and down jumps book heat against the hot/cold pair that mediates them;
/// the tick photon is treated as recoverable and books no bath entropy.
pub fn build_ladder(params: &LadderClockParams) -> Result<ClockSpec> {
    params.validate()?;
    let d = params.d;
    let e_w = params.e_w();
    let diag: Vec<C64> = (0..d).map(|k| C64::new(k as f64 * e_w, 0.0)).collect();
    let h = Operator::from_diag(&diag);

    let up_amp = C64::new(params.gamma_up().sqrt(), 0.0);
    let down_amp = C64::new(params.gamma_down().sqrt(), 0.0);
    let mut noise_ops = Vec::new();
    let mut tags = BTreeMap::new();
    let tick = Operator::outer(&StateVector::basis(d, 0)?, &StateVector::basis(d, d - 1)?)
        .scale(C64::new(params.tick_rate.sqrt(), 0.0));
    tags.insert(0, BathTag::PerJump { terms: Vec::new() });

    let up_terms = vec![
        BathTerm { label: "hot".into(), beta: params.beta_h, heat: -params.e_h },
        BathTerm { label: "cold".into(), beta: params.beta_c, heat: params.e_c },
    ];
    let down_terms = vec![
        BathTerm { label: "hot".into(), beta: params.beta_h, heat: params.e_h },
        BathTerm { label: "cold".into(), beta: params.beta_c, heat: -params.e_c },
    ];
    for k in 0..d - 1 {
        noise_ops.push(
            Operator::outer(&StateVector::basis(d, k + 1)?, &StateVector::basis(d, k)?).scale(up_amp),
        );
        tags.insert(1 + noise_ops.len() - 1, BathTag::PerJump { terms: up_terms.clone() });
    }
    for k in 0..d - 1 {
        noise_ops.push(
            Operator::outer(&StateVector::basis(d, k)?, &StateVector::basis(d, k + 1)?).scale(down_amp),
        );
        tags.insert(1 + noise_ops.len() - 1, BathTag::PerJump { terms: down_terms.clone() });
    }

    let init = DensityMatrix::from_pure(&StateVector::basis(d, 0)?);
    let mut clock = ClockSpec::new(h, vec![tick], noise_ops, init)?.with_bath_tags(tags);
    if params.beta_v() >= 0.0 {
        clock.push_warning(
            "virtual qubit is not population inverted (beta_v >= 0); population drifts downward".into(),
        );
    }
    Ok(clock)
}

/// Virtual-qubit clock of the two-bath two-qubit model.
#[derive(Debug, Clone)]
pub struct VirtualQubitParams {
    pub c: f64,
    pub g: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    pub e_h: f64,
    pub e_c: f64,
}

impl VirtualQubitParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c, self.g, self.beta_h, self.beta_c, self.e_h, self.e_c];
        if all.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidInput("virtual qubit parameters must all be positive".into()));
        }
        Ok(())
    }

    /// Excited-population weight `exp(-beta_h E_h) / (Z_c Z_h)`.
    pub fn n_bar(&self) -> f64 {
        let z_h = 1.0 + (-self.beta_h * self.e_h).exp();
        let z_c = 1.0 + (-self.beta_c * self.e_c).exp();
        (-self.beta_h * self.e_h).exp() / (z_c * z_h)
    }
}

/// First-tick waiting-time density of the virtual-qubit clock:
/// an inhomogeneous decay at rate `c n sin^2(g t)`.
pub fn virtual_qubit_delay_density(params: &VirtualQubitParams, t: f64) -> Result<f64> {
    params.validate()?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput("time must be finite and >= 0".into()));
    }
    let n = params.n_bar();
    let c = params.c;
    let g = params.g;
    let s = (g * t).sin();
    let rate = c * n * s * s;
    // exp(-int_0^t rate ds) = exp(-(c/2) n t) exp((c/2) n sin(gt) cos(gt) / g)
    let survival = (-(c / 2.0) * n * t + (c / 2.0) * n * s * (g * t).cos() / g).exp();
    Ok(rate * survival)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fourier_basis_two_point_transform() {
        let b = fourier_basis(2).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert_abs_diff_eq!(b[0].amplitudes()[0].re, inv_sqrt2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[0].amplitudes()[1].re, inv_sqrt2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].amplitudes()[0].re, inv_sqrt2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].amplitudes()[1].re, -inv_sqrt2, epsilon = 1e-12);
    }

    #[test]
    fn fourier_basis_is_identity_for_d1() {
        let b = fourier_basis(1).unwrap();
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b[0].amplitudes()[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fourier_basis_gram_matrix_is_identity() {
        let b = fourier_basis(6).unwrap();
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                let g = bi.inner(bj);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - C64::new(expect, 0.0)).norm() < 1e-12, "gram[{i},{j}] = {g}");
            }
        }
    }

    #[test]
    fn fourier_basis_rejects_zero() {
        assert!(fourier_basis(0).is_err());
    }

    #[test]
    fn quasi_ideal_jump_rate_operator() {
        // sum_j J_j^dag J_j = 2 sum_j V_j |t_j><t_j| for arbitrary d = 3 couplings.
        let psi = time_state(3, 1).unwrap();
        let v = vec![0.3, 1.1, 0.0];
        let clock =
            build_quasi_ideal(&QuasiIdealParams::new(3, 1.0, v.clone(), psi).unwrap()).unwrap();
        let basis = fourier_basis(3).unwrap();
        let mut expected = Operator::zeros(3).into_matrix();
        for (j, &vj) in v.iter().enumerate() {
            expected = expected
                + Operator::outer(&basis[j], &basis[j]).matrix() * C64::new(vj, 0.0);
        }
        let diff = clock.v_hat().into_matrix() - expected;
        assert!(crate::linalg::frobenius_norm(&diff) < 1e-12);
    }

    #[test]
    fn quasi_ideal_rejects_negative_coupling() {
        let psi = time_state(2, 0).unwrap();
        assert!(QuasiIdealParams::new(2, 1.0, vec![-0.1, 0.2], psi).is_err());
    }

    #[test]
    fn single_level_clock_is_plain_decay() {
        let psi = StateVector::basis(1, 0).unwrap();
        let clock = build_quasi_ideal(&QuasiIdealParams::new(1, 1.0, vec![0.5], psi).unwrap()).unwrap();
        assert_eq!(clock.tick_ops().len(), 1);
        // J^dag J = 2 V_0 = Gamma_0.
        let rate = clock.tick_ops()[0].dagger().matmul(&clock.tick_ops()[0]);
        assert_abs_diff_eq!(rate.matrix()[[0, 0]].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn erlang_chain_structure() {
        let clock = build_erlang(3, 2.0).unwrap();
        assert_eq!(clock.noise_ops().len(), 2);
        assert_eq!(clock.tick_ops().len(), 1);
        assert_abs_diff_eq!(clock.tick_ops()[0].matrix()[[0, 2]].re, 2.0_f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn planck_values() {
        // beta*omega = ln 2 gives N = 1.
        assert_abs_diff_eq!(planck_occupation(2.0_f64.ln(), 1.0).unwrap(), 1.0, epsilon = 1e-12);
        // Large beta*omega limit.
        assert!(planck_occupation(1.0, 800.0).unwrap() < 1e-300);
        assert_abs_diff_eq!(
            planck_occupation(1.0, 1.0).unwrap(),
            1.0 / (std::f64::consts::E - 1.0),
            epsilon = 1e-12
        );
        assert!(planck_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_coefficient_branches() {
        assert_abs_diff_eq!(gamma_coefficient(1.0, 0.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_coefficient(-1.0, 0.0).unwrap(), 0.0, epsilon = 1e-300);
        for n in [0.1, 1.0, 7.3] {
            let ratio = gamma_coefficient(2.0, n).unwrap() / gamma_coefficient(-2.0, n).unwrap();
            assert_abs_diff_eq!(ratio, (1.0 + n) / n, epsilon = 1e-12);
        }
        assert!(gamma_coefficient(0.0, 0.0).is_err());
    }

    #[test]
    fn thermal_extension_zero_temperature_has_no_absorption() {
        let psi = time_state(2, 1).unwrap();
        let base = QuasiIdealParams::new(2, 1.0, vec![1.0 / 2.0_f64.sqrt(), 0.0], psi).unwrap();
        let clock = build_thermal_extended(&ThermalExtensionParams {
            base,
            channels: vec![ThermalChannel { m: 0, omega_gap: 40.0, occupation: 0.0 }],
            absorption_ticks: false,
            beta: None,
        })
        .unwrap();
        assert_eq!(clock.dim(), 3);
        assert!(clock.noise_ops().is_empty());
        assert_eq!(clock.tick_ops().len(), 1);
    }

    #[test]
    fn thermal_extension_operator_norms() {
        // d = 2, one channel at N = 0.1: emission rate 2V(1+N), absorption 2VN.
        let psi = time_state(2, 1).unwrap();
        let v0 = 0.6;
        let n = 0.1;
        let base = QuasiIdealParams::new(2, 1.0, vec![v0, 0.0], psi).unwrap();
        let clock = build_thermal_extended(&ThermalExtensionParams {
            base,
            channels: vec![ThermalChannel { m: 0, omega_gap: 40.0, occupation: n }],
            absorption_ticks: false,
            beta: None,
        })
        .unwrap();
        assert_eq!(clock.dim(), 3);
        let emit = &clock.tick_ops()[0];
        let absorb = &clock.noise_ops()[0];
        assert_abs_diff_eq!(emit.frobenius_norm(), (2.0 * v0 * (1.0 + n)).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(absorb.frobenius_norm(), (2.0 * v0 * n).sqrt(), epsilon = 1e-12);
        // Emission/absorption rate ratio (1+N)/N.
        let ratio = emit.frobenius_norm().powi(2) / absorb.frobenius_norm().powi(2);
        assert_abs_diff_eq!(ratio, (1.0 + n) / n, epsilon = 1e-10);
    }

    #[test]
    fn thermal_extension_rejects_duplicate_flux_indices() {
        let psi = time_state(2, 1).unwrap();
        let base = QuasiIdealParams::new(2, 1.0, vec![0.5, 0.5], psi).unwrap();
        let result = build_thermal_extended(&ThermalExtensionParams {
            base,
            channels: vec![
                ThermalChannel { m: 0, omega_gap: 40.0, occupation: 0.0 },
                ThermalChannel { m: 0, omega_gap: 60.0, occupation: 0.0 },
            ],
            absorption_ticks: false,
            beta: None,
        });
        assert!(result.is_err());
    }

    #[test]
    fn thermal_extension_warns_on_small_gap() {
        let psi = time_state(2, 1).unwrap();
        let base = QuasiIdealParams::new(2, 1.0, vec![0.5, 0.0], psi).unwrap();
        let clock = build_thermal_extended(&ThermalExtensionParams {
            base,
            channels: vec![ThermalChannel { m: 0, omega_gap: 5.0, occupation: 0.0 }],
            absorption_ticks: false,
            beta: None,
        })
        .unwrap();
        assert_eq!(clock.warnings().len(), 1);
    }

    #[test]
    fn ladder_detailed_balance_ratio() {
        let params = LadderClockParams {
            d: 4,
            e_h: 1.5,
            e_c: 0.5,
            beta_h: 0.2,
            beta_c: 2.0,
            coupling_rate: 1.0,
            tick_rate: 10.0,
        };
        let ratio = params.gamma_up() / params.gamma_down();
        assert_abs_diff_eq!(ratio, (-params.beta_v() * params.e_w()).exp(), epsilon = 1e-12);
        // Inverted virtual qubit here: beta_h E_h = 0.3 < beta_c E_c = 1.0.
        assert!(params.beta_v() < 0.0);
        assert!(params.gamma_up() > params.gamma_down());
        let clock = build_ladder(&params).unwrap();
        assert!(clock.warnings().is_empty());
        assert_eq!(clock.noise_ops().len(), 2 * (params.d - 1));
        // Entropy booked per climbed rung.
        assert_abs_diff_eq!(
            params.entropy_per_rung(),
            params.beta_c * params.e_c - params.beta_h * params.e_h,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ladder_warns_when_not_inverted() {
        let params = LadderClockParams {
            d: 3,
            e_h: 1.5,
            e_c: 0.5,
            beta_h: 1.0,
            beta_c: 1.1,
            coupling_rate: 1.0,
            tick_rate: 10.0,
        };
        // beta_h E_h = 1.5 > beta_c E_c = 0.55: no inversion.
        assert!(params.beta_v() >= 0.0);
        let clock = build_ladder(&params).unwrap();
        assert_eq!(clock.warnings().len(), 1);
    }

    #[test]
    fn virtual_qubit_density_starts_at_zero() {
        let params = VirtualQubitParams {
            c: 2.0,
            g: 0.5,
            beta_h: 0.1,
            beta_c: 10.0,
            e_h: 1.0,
            e_c: 0.5,
        };
        assert_abs_diff_eq!(virtual_qubit_delay_density(&params, 0.0).unwrap(), 0.0, epsilon = 1e-300);
        assert!(virtual_qubit_delay_density(&params, 1.0).unwrap() > 0.0);
    }
}
