//! Bath entropy produced per tick.
//!
//! Each dissipator books entropy against its tagged bath: either through the
//! system energy it moves (`-beta tr[H_S D_j(rho)]`, full dissipator) or as an
//! explicit per-jump heat list for jumps mediated by several baths at once.
//! The per-tick quantity integrates that flux along the no-tick trajectory
//! and averages over the tick time.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::clock::{BathTag, ClockSpec, QuasiIdealParams, ThermalChannel, ThermalExtensionParams};
use crate::error::{Error, Result};
use crate::integrate::Dopri5;
use crate::linalg::{dagger, trace, DensityMatrix};
use crate::stats::{flat_to_rho, precision, rho_to_flat, NoTickGenerator, TickStatistics};

/// Entropy produced per tick, with its per-bath decomposition.
#[derive(Debug, Clone)]
pub struct EntropyResult {
    pub delta_s_tick: f64,
    pub per_bath: BTreeMap<String, f64>,
    pub error_estimate: f64,
}

/// Ladder-clock comparison between the integrated flux and the rung-count
/// bookkeeping `(d-1)(beta_c E_c - beta_h E_h)`.
#[derive(Debug, Clone)]
pub struct LadderEntropyReport {
    pub delta_s_ours: f64,
    /// `beta_c Q_c - beta_h Q_h`, positive for an inverted virtual qubit.
    pub heat_reference: f64,
    pub q_h: f64,
    pub q_c: f64,
    pub e_gamma: f64,
    pub beta_v: f64,
    pub stats: TickStatistics,
}

/// One row of the precision-vs-entropy curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub d: usize,
    pub r: f64,
    pub delta_s: f64,
}

/// Per-bath flux matrices: `rate_label(rho) = Re tr(Phi_label rho)`.
struct FluxAccountant {
    labels: Vec<String>,
    flux_mats: Vec<Array2<C64>>,
}

impl FluxAccountant {
    fn new(clock: &ClockSpec) -> Result<Self> {
        let n = clock.dim();
        let h = clock.hamiltonian().matrix();
        let mut by_label: BTreeMap<String, Array2<C64>> = BTreeMap::new();
        for idx in 0..clock.dissipator_count() {
            let tag = clock.bath_tags().get(&idx).ok_or_else(|| {
                Error::Configuration(format!("dissipator {idx} has no bath tag; entropy accounting needs one per dissipator"))
            })?;
            let op = clock.dissipator_op(idx).expect("index in range").matrix();
            let k = dagger(op).dot(op);
            match tag {
                BathTag::SystemEnergy { label, beta } => {
                    // -beta * tr[H D(rho)] with D the full dissipator.
                    let w = dagger(op).dot(h).dot(op) - (h.dot(&k) + k.dot(h)) * C64::new(0.5, 0.0);
                    let entry = by_label.entry(label.clone()).or_insert_with(|| Array2::zeros((n, n)));
                    *entry = &*entry - w * C64::new(*beta, 0.0);
                }
                BathTag::PerJump { terms } => {
                    for term in terms {
                        let entry = by_label
                            .entry(term.label.clone())
                            .or_insert_with(|| Array2::zeros((n, n)));
                        *entry = &*entry + &k * C64::new(term.beta * term.heat, 0.0);
                    }
                }
            }
        }
        let (labels, flux_mats) = by_label.into_iter().unzip();
        Ok(Self { labels, flux_mats })
    }

    fn rates(&self, rho: &Array2<C64>, out: &mut [f64]) {
        for (mat, slot) in self.flux_mats.iter().zip(out.iter_mut()) {
            *slot = trace(&mat.dot(rho)).re;
        }
    }
}

/// Instantaneous bath-entropy flux at a normalized state:
/// `sum_b -beta_b tr[H_S D_b(rho)]` plus any explicit per-jump bookkeeping.
pub fn entropy_flux_rate(clock: &ClockSpec, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != clock.dim() {
        return Err(Error::InvalidInput("state dimension mismatch".into()));
    }
    let acc = FluxAccountant::new(clock)?;
    let mut rates = vec![0.0; acc.labels.len()];
    acc.rates(rho.matrix(), &mut rates);
    Ok(rates.iter().sum())
}

/// Entropy per tick
/// `dS = int_0^inf dt P_tick(t) int_0^t ds rate(rho_nt(s))`,
/// computed in one adaptive sweep that carries the inner integral along.
///
/// `t_max` caps the horizon; the sweep stops earlier once the estimated tail
/// is below `tol`.
pub fn entropy_per_tick(clock: &ClockSpec, t_max: f64, tol: f64) -> Result<EntropyResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let acc = FluxAccountant::new(clock)?;
    let gen = NoTickGenerator::new(clock);
    let n = gen.dim();
    let nl = acc.labels.len();
    let solver = Dopri5 { rtol: 1e-10, atol: 1e-13 };

    // State: [rho (2 n^2), mass, G per label, dS per label].
    let mut y = vec![0.0; 2 * n * n + 1 + 2 * nl];
    rho_to_flat(clock.initial_state().matrix(), &mut y[..2 * n * n]);
    let mut h = 0.0;
    let mut t_end = 0.0;
    let mut span: f64 = 1.0;
    let mut scratch = vec![0.0; nl];

    for _ in 0..200 {
        let span_now = span.min(t_max - t_end);
        solver.step_to(
            |t, yy, dyy| {
                let rho = flat_to_rho(&yy[..2 * n * n], n);
                let drho = gen.apply(&rho);
                rho_to_flat(&drho, &mut dyy[..2 * n * n]);
                let _ = t;
                let p = gen.tick_rate(&rho);
                let s = trace(&rho).re.max(1e-300);
                dyy[2 * n * n] = p;
                let mut rates = vec![0.0; nl];
                let base = 2 * n * n + 1;
                let rho_ref = &rho;
                let mut tmp = std::mem::take(&mut rates);
                // rate at the normalized conditioned state
                FluxAccountant::rates(&acc, rho_ref, &mut tmp);
                for l in 0..nl {
                    dyy[base + l] = tmp[l] / s;
                    dyy[base + nl + l] = p * yy[base + l];
                }
            },
            t_end,
            t_end + span_now,
            &mut y,
            &mut h,
        )?;
        t_end += span_now;
        span *= 2.0;

        let mass = y[2 * n * n];
        let deficit = (1.0 - mass).max(0.0);
        let rho = flat_to_rho(&y[..2 * n * n], n);
        let s = trace(&rho).re.max(1e-300);
        let p = gen.tick_rate(&rho);
        let hazard = (p / s).max(1e-300);
        acc.rates(&rho, &mut scratch);
        let g_total: f64 = y[2 * n * n + 1..2 * n * n + 1 + nl].iter().sum();
        let g_dot_total: f64 = scratch.iter().map(|r| r / s).sum();
        let tail = deficit * (g_total.abs() + g_dot_total.abs() / hazard);
        if deficit < 1e-9 && tail < 0.5 * tol {
            let per_bath: BTreeMap<String, f64> = acc
                .labels
                .iter()
                .cloned()
                .zip(y[2 * n * n + 1 + nl..].iter().cloned())
                .collect();
            let delta_s_tick = per_bath.values().sum();
            return Ok(EntropyResult { delta_s_tick, per_bath, error_estimate: tail });
        }
        if t_end >= t_max {
            return Err(Error::NonTickingClock { deficit, t_max });
        }
    }
    Err(Error::Accuracy("entropy sweep did not converge".into()))
}

/// Closed-form route for the two-level clock with one decay channel:
/// quadrature of `beta omega  int dtau P(tau) int_0^tau dsigma P(sigma) / (2 tr rho(sigma))`
/// with the scaled coupling `v_eff = V_1 (1 + N) / omega` and `tr rho = 2 a_0`.
pub fn entropy_d2_closed_form(v1: f64, beta: f64, omega: f64, occupation: f64) -> Result<f64> {
    if !(v1 > 0.0) || !(omega > 0.0) || occupation < 0.0 {
        return Err(Error::InvalidInput(
            "entropy_d2_closed_form requires v1 > 0, omega > 0, occupation >= 0".into(),
        ));
    }
    let v_eff = v1 * (1.0 + occupation) / omega;
    // Slowest decay rate of the survival 2 a_0.
    let kappa2 = v_eff * v_eff - 1.0;
    let lambda = if kappa2 > 0.0 { v_eff - kappa2.sqrt() } else { v_eff };
    let tau_max = 60.0 / lambda;

    let solver = Dopri5 { rtol: 1e-11, atol: 1e-14 };
    let mut y = vec![0.0_f64; 2]; // [G, dS]
    let mut h = 0.0;
    solver.step_to(
        |tau, y, dy| {
            let p = crate::d2::delay_density(v_eff, tau);
            let surv = 2.0 * crate::d2::a0(v_eff, tau);
            dy[0] = 0.5 * p / surv.max(1e-300);
            dy[1] = p * y[0];
        },
        0.0,
        tau_max,
        &mut y,
        &mut h,
    )?;
    Ok(beta * omega * y[1])
}

/// Runs the heat-driven ladder clock and compares the integrated entropy per
/// tick against the rung-count reference.
pub fn ladder_entropy_comparison(params: &crate::clock::LadderClockParams) -> Result<LadderEntropyReport> {
    let clock = crate::clock::build_ladder(params)?;
    let stats = precision(&clock)?;
    let result = entropy_per_tick(&clock, 2e4 * stats.mu, 1e-6 * (params.d as f64))?;
    let d1 = (params.d - 1) as f64;
    Ok(LadderEntropyReport {
        delta_s_ours: result.delta_s_tick,
        heat_reference: d1 * params.entropy_per_rung(),
        q_h: d1 * params.e_h,
        q_c: d1 * params.e_c,
        e_gamma: d1 * params.e_w(),
        beta_v: params.beta_v(),
        stats,
    })
}

/// Precision-vs-entropy curve over a set of optimized quasi-ideal clocks,
/// each realized thermally with every active coupling as a decay channel at
/// the common gap `channel_gap` and bath inverse temperature `beta`.
pub fn entropy_precision_curve(
    optima: &[QuasiIdealParams],
    beta: f64,
    channel_gap: f64,
) -> Result<Vec<CurvePoint>> {
    optima
        .iter()
        .map(|base| {
            let occupation = if beta * channel_gap > 700.0 {
                0.0
            } else {
                crate::clock::planck_occupation(channel_gap, beta)?
            };
            let channels: Vec<ThermalChannel> = base
                .v
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 1e-12)
                .map(|(m, _)| ThermalChannel { m, omega_gap: channel_gap, occupation })
                .collect();
            let clock = crate::clock::build_thermal_extended(&ThermalExtensionParams {
                base: base.clone(),
                channels,
                absorption_ticks: false,
                beta: Some(beta),
            })?;
            let stats = precision(&clock)?;
            let entropy = entropy_per_tick(&clock, 1e5 * stats.mu, 1e-6 * beta * channel_gap)?;
            Ok(CurvePoint { d: base.d, r: stats.r, delta_s: entropy.delta_s_tick })
        })
        .collect()
}

/// Quasi-ideal initial state embedded in the thermally extended space has
/// mean clockwork energy `<psi|H_C|psi>`; with total tick mass 1, energy
/// balance fixes `dS = beta (omega_gap + <psi|H_C|psi>)` exactly. Exposed for
/// tests and examples as the independent check on the quadrature.
pub fn thermal_energy_balance(base: &QuasiIdealParams, beta: f64, channel_gap: f64) -> f64 {
    let h = crate::clock::harmonic_hamiltonian(base.d, base.omega0);
    let e0 = base.psi.expectation(&h).re;
    beta * (channel_gap + e0)
}
