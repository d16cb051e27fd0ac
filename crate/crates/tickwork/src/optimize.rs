//! Random-restart maximization of the first-tick precision over coupling
//! coefficients and initial pure states, plus the robustness and
//! bath-occupancy sweeps built on top of it.
//!
//! For the quasi-ideal family the jump operators enter the moments only
//! through `V = sum_j V_j |t_j><t_j|`, so at fixed couplings the precision is
//! a ratio of quadratic forms in the initial state. The inner loop exploits
//! that: it solves the two Sylvester equations once per coupling vector and
//! finds the optimal state from the stationarity eigenproblem
//! `(X2 - theta X1) psi = lambda psi`, `theta = 2 <X2> / <X1>`. The outer
//! Nelder-Mead search then only walks the coupling box `0 <= V_l <= bound`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clock::{
    build_quasi_ideal, build_thermal_extended, harmonic_hamiltonian, QuasiIdealParams,
    ThermalChannel, ThermalExtensionParams,
};
use crate::error::{Error, Result};
use crate::linalg::{dagger, EffectiveGenerator, Operator, StateVector, SylvesterSolver};
use crate::stats::precision;

#[derive(Debug, Clone)]
pub struct OptimizationConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Upper bound of the coupling search box; defaults to `d`.
    pub v_bound: Option<f64>,
    /// Flux modes allowed to carry nonzero coupling; defaults to all of them.
    pub channels: Option<Vec<usize>>,
    /// Local-search convergence tolerance on the precision.
    pub tolerance: f64,
    /// Simplex iteration budget per restart.
    pub max_iters: usize,
}

impl OptimizationConfig {
    pub fn new(d: usize, seed: u64) -> Self {
        Self { restarts: 50 * d, seed, v_bound: None, channels: None, tolerance: 1e-10, max_iters: 400 }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub d: usize,
    pub omega0: f64,
    pub best_r: f64,
    pub best_v: Vec<f64>,
    pub best_psi: StateVector,
    /// Modes that were allowed to be active in the search.
    pub channels: Vec<usize>,
    /// Best precision found by each restart, in restart order.
    pub per_restart: Vec<f64>,
    pub wall_clock: std::time::Duration,
}

impl OptimizationResult {
    pub fn quasi_ideal_params(&self) -> QuasiIdealParams {
        QuasiIdealParams::new(self.d, self.omega0, self.best_v.clone(), self.best_psi.clone())
            .expect("optimizer output is a valid parameter set")
    }
}

/// Precision of a quasi-ideal clock at fixed couplings and state, straight
/// from the Hermitian moment matrices.
fn r_from_moment_matrices(x1: &Array2<C64>, x2: &Array2<C64>, psi: &Array1<C64>) -> f64 {
    let quad = |m: &Array2<C64>| -> f64 {
        let v = m.dot(psi);
        psi.iter().zip(v.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    };
    let mu = -quad(x1);
    let chi = 2.0 * quad(x2);
    let var = chi - mu * mu;
    if !(var > 0.0) || !(mu > 0.0) {
        return f64::NEG_INFINITY;
    }
    mu * mu / var
}

/// Moment matrices `X1 = M^-1(1)`, `X2 = M^-2(1)` for couplings `v`.
fn moment_matrices(d: usize, omega0: f64, v: &[f64]) -> Result<(Array2<C64>, Array2<C64>)> {
    let basis = crate::clock::fourier_basis(d)?;
    let mut v_hat = Array2::<C64>::zeros((d, d));
    for (j, &vj) in v.iter().enumerate() {
        if vj > 0.0 {
            v_hat = v_hat + Operator::outer(&basis[j], &basis[j]).matrix() * C64::new(vj, 0.0);
        }
    }
    let a = EffectiveGenerator::new(&harmonic_hamiltonian(d, omega0), &Operator::new(v_hat)?)?;
    if a.operator().matrix().iter().all(|z| z.norm() < 1e-300) {
        return Err(Error::OptimizationFailed("all couplings zero".into()));
    }
    let solver = SylvesterSolver::new(a.operator())?;
    if solver.eigenvalues().iter().any(|l| l.re > -1e-12) {
        let worst = solver.eigenvalues().iter().cloned().max_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
        return Err(Error::SingularGenerator(worst, worst, (worst + worst.conj()).norm()));
    }
    let x1 = solver.solve(&Operator::identity(d))?;
    let x2 = solver.solve(&x1)?;
    // Both solutions are Hermitian in exact arithmetic; symmetrize roundoff.
    let herm = |m: &Array2<C64>| (m + &dagger(m)) * C64::new(0.5, 0.0);
    Ok((herm(x1.matrix()), herm(x2.matrix())))
}

/// Best precision over initial pure states at fixed couplings, via the
/// self-consistent stationarity eigenproblem.
fn best_state_for_couplings(
    d: usize,
    omega0: f64,
    v: &[f64],
    warm: Option<&Array1<C64>>,
) -> Result<(f64, StateVector)> {
    crate::linalg::blas_single_thread();
    let (x1, x2) = moment_matrices(d, omega0, v)?;
    let uniform = Array1::from_elem(d, C64::new(1.0 / (d as f64).sqrt(), 0.0));
    let mut best_r = f64::NEG_INFINITY;
    let mut best_psi = uniform.clone();
    let starts: Vec<Array1<C64>> = match warm {
        Some(w) => vec![w.clone(), uniform],
        None => vec![uniform],
    };
    for start in starts {
        let mut psi = start;
        let mut r = r_from_moment_matrices(&x1, &x2, &psi);
        for _ in 0..80 {
            let quad = |m: &Array2<C64>, p: &Array1<C64>| -> f64 {
                let v = m.dot(p);
                p.iter().zip(v.iter()).map(|(a, b)| (a.conj() * b).re).sum()
            };
            let e1 = quad(&x1, &psi);
            if e1.abs() < 1e-300 {
                break;
            }
            let theta = 2.0 * quad(&x2, &psi) / e1;
            let k = &x2 - &x1 * C64::new(theta, 0.0);
            let (_, vecs) = match k.eigh(UPLO::Lower) {
                Ok(res) => res,
                Err(_) => break,
            };
            let mut improved = false;
            for col in 0..d {
                let cand = vecs.column(col).to_owned();
                let cand_r = r_from_moment_matrices(&x1, &x2, &cand);
                if cand_r > r + 1e-13 * (1.0 + r.abs()) {
                    r = cand_r;
                    psi = cand;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        if r > best_r {
            best_r = r;
            best_psi = psi;
        }
    }
    if !best_r.is_finite() {
        return Err(Error::OptimizationFailed("no feasible initial state found".into()));
    }
    Ok((best_r, StateVector::normalized(best_psi)?))
}

/// Minimal Nelder-Mead on a box-clamped objective.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (values[worst] - values[best]).abs() <= tol * (values[best].abs() + tol) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(simplex[i].iter()) {
                *c += x / n as f64;
            }
        }
        let combine = |a: f64, b: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(simplex[worst].iter())
                .map(|(c, w)| a * c + b * w)
                .collect()
        };
        let reflected = combine(2.0, -1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = combine(3.0, -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = combine(0.5, 0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                let best_point = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    simplex[i] = simplex[i]
                        .iter()
                        .zip(best_point.iter())
                        .map(|(x, b)| 0.5 * (x + b))
                        .collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best_idx = 0;
    for i in 1..=n {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx].clone(), values[best_idx])
}

struct RestartOutcome {
    r: f64,
    v: Vec<f64>,
    psi: StateVector,
}

/// Deterministic coupling starts: the optima concentrate on one or two
/// active modes (cyclic relabeling makes only the gap between them matter),
/// with magnitudes growing roughly like d/3.
fn structured_starts(d: usize, channels: &[usize], bound: f64) -> Vec<Vec<f64>> {
    let k = channels.len();
    let base = (d as f64 / 3.0).max(0.7);
    let scales = [1.0, 0.5, 2.0, 0.25];
    let mut starts = Vec::new();
    let full_set = k == d;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if full_set {
        for gap in 1..=d / 2 {
            pairs.push((0, gap % d));
        }
    } else {
        for i in 0..k {
            for j in i + 1..k {
                pairs.push((i, j));
            }
        }
        pairs.truncate(40);
    }
    for &scale in &scales {
        let amp = (scale * base).min(bound);
        for i in 0..k.min(if full_set { 1 } else { k }) {
            let mut v = vec![0.0; k];
            v[i] = amp;
            starts.push(v);
        }
        for &(i, j) in &pairs {
            let mut v = vec![0.0; k];
            v[i] = amp;
            v[j] = (0.4 * amp).min(bound);
            starts.push(v);
            let mut w = vec![0.0; k];
            w[i] = amp;
            w[j] = amp;
            starts.push(w);
        }
        // Uniform start.
        starts.push(vec![amp.min(1.0); k]);
    }
    starts
}

fn local_search(
    d: usize,
    omega0: f64,
    channels: &[usize],
    bound: f64,
    v0: &[f64],
    config: &OptimizationConfig,
) -> Option<RestartOutcome> {
    let mut warm: Option<Array1<C64>> = None;
    let mut best: Option<RestartOutcome> = None;
    let mut objective = |x: &[f64]| -> f64 {
        let mut v_full = vec![0.0; d];
        for (slot, &ch) in x.iter().zip(channels.iter()) {
            v_full[ch] = slot.clamp(0.0, bound);
        }
        match best_state_for_couplings(d, omega0, &v_full, warm.as_ref()) {
            Ok((r, psi)) => {
                warm = Some(psi.amplitudes().clone());
                if best.as_ref().map_or(true, |b| r > b.r) {
                    best = Some(RestartOutcome { r, v: v_full, psi });
                }
                -r
            }
            Err(_) => 1e9,
        }
    };

    let mut x = v0.to_vec();
    let mut scale = 0.25 * bound.min(4.0);
    let mut last = f64::INFINITY;
    for _ in 0..4 {
        let (xn, fval) = nelder_mead(&mut objective, &x, scale, config.max_iters, config.tolerance);
        x = xn;
        scale *= 0.15;
        if last - fval <= config.tolerance * (1.0 + fval.abs()) {
            break;
        }
        last = fval;
    }
    best
}

fn run_restart(
    d: usize,
    omega0: f64,
    channels: &[usize],
    bound: f64,
    restart_index: usize,
    starts: &[Vec<f64>],
    config: &OptimizationConfig,
) -> Option<RestartOutcome> {
    let k = channels.len();
    let v0 = if restart_index < starts.len() {
        starts[restart_index].clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.seed ^ (restart_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        // Sparse random starts explore channel-support patterns, dense ones
        // the interior of the box.
        let sparse = rng.gen::<bool>();
        (0..k)
            .map(|_| {
                if sparse && rng.gen::<f64>() < 0.6 {
                    0.0
                } else {
                    rng.gen::<f64>() * bound.min(d as f64)
                }
            })
            .collect()
    };
    local_search(d, omega0, channels, bound, &v0, config)
}

/// Maximizes the first-tick precision of the quasi-ideal clock over the
/// coupling box and initial pure states, with deterministic seeded restarts.
pub fn optimize_precision(d: usize, config: &OptimizationConfig) -> Result<OptimizationResult> {
    let start = std::time::Instant::now();
    if d == 0 {
        return Err(Error::InvalidInput("optimize_precision requires d >= 1".into()));
    }
    let channels: Vec<usize> = match &config.channels {
        Some(list) => {
            let mut sorted: Vec<usize> = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.is_empty() || sorted.iter().any(|&c| c >= d) {
                return Err(Error::InvalidInput("channel set must be non-empty indices below d".into()));
            }
            sorted
        }
        None => (0..d).collect(),
    };
    let bound = config.v_bound.unwrap_or(d as f64);
    if !(bound > 0.0) {
        return Err(Error::InvalidInput("coupling bound must be positive".into()));
    }

    let starts = structured_starts(d, &channels, bound);
    let total = config.restarts.max(1).max(starts.len().min(4 * config.restarts.max(1)));
    let outcomes: Vec<(usize, Option<RestartOutcome>)> = (0..total)
        .into_par_iter()
        .map(|idx| (idx, run_restart(d, config.omega0(), &channels, bound, idx, &starts, config)))
        .collect();

    let mut per_restart = vec![f64::NEG_INFINITY; outcomes.len()];
    let mut best: Option<RestartOutcome> = None;
    for (idx, outcome) in outcomes {
        if let Some(out) = outcome {
            per_restart[idx] = out.r;
            if best.as_ref().map_or(true, |b| out.r > b.r) {
                best = Some(out);
            }
        }
    }
    let best = best.ok_or_else(|| Error::OptimizationFailed("all restarts failed".into()))?;
    // Intensify around the overall winner.
    let v_active: Vec<f64> = channels.iter().map(|&c| best.v[c]).collect();
    let polished = local_search(d, config.omega0(), &channels, bound, &v_active, config);
    let best = match polished {
        Some(p) if p.r > best.r => p,
        _ => best,
    };
    Ok(OptimizationResult {
        d,
        omega0: config.omega0(),
        best_r: best.r,
        best_v: best.v,
        best_psi: best.psi,
        channels,
        per_restart,
        wall_clock: start.elapsed(),
    })
}

impl OptimizationConfig {
    fn omega0(&self) -> f64 {
        1.0
    }
}

/// Best precision with at most `k_channels` active flux modes; the search
/// also chooses which modes those are.
pub fn optimize_restricted(d: usize, k_channels: usize, config: &OptimizationConfig) -> Result<OptimizationResult> {
    if k_channels == 0 || k_channels > d {
        return Err(Error::InvalidInput("need 1 <= k_channels <= d".into()));
    }
    if k_channels == d {
        return optimize_precision(d, config);
    }
    let subsets = enumerate_subsets(d, k_channels, 300, config.seed);
    let per_subset_restarts = (config.restarts / subsets.len()).max(2);
    let start = std::time::Instant::now();
    let results: Vec<Result<OptimizationResult>> = subsets
        .par_iter()
        .enumerate()
        .map(|(i, subset)| {
            let sub_config = OptimizationConfig {
                restarts: per_subset_restarts,
                seed: config.seed.wrapping_add(1 + i as u64),
                v_bound: config.v_bound,
                channels: Some(subset.clone()),
                tolerance: config.tolerance,
                max_iters: config.max_iters,
            };
            optimize_precision(d, &sub_config)
        })
        .collect();
    let mut best: Option<OptimizationResult> = None;
    let mut per_restart = Vec::new();
    for res in results {
        match res {
            Ok(r) => {
                per_restart.extend_from_slice(&r.per_restart);
                if best.as_ref().map_or(true, |b| r.best_r > b.best_r) {
                    best = Some(r);
                }
            }
            Err(Error::OptimizationFailed(_)) | Err(Error::SingularGenerator(..)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut best = best.ok_or_else(|| Error::OptimizationFailed("all channel subsets failed".into()))?;
    best.per_restart = per_restart;
    best.wall_clock = start.elapsed();
    Ok(best)
}

fn enumerate_subsets(d: usize, k: usize, cap: usize, seed: u64) -> Vec<Vec<usize>> {
    fn count(d: usize, k: usize) -> usize {
        let mut c = 1usize;
        for i in 0..k {
            c = c.saturating_mul(d - i) / (i + 1);
        }
        c
    }
    if count(d, k) <= cap {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.clone());
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + d - k {
                    break;
                }
            }
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < cap {
        let mut pick: Vec<usize> = (0..d).collect();
        pick.shuffle(&mut rng);
        let mut subset: Vec<usize> = pick.into_iter().take(k).collect();
        subset.sort_unstable();
        seen.insert(subset);
    }
    seen.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
pub struct RobustnessConfig {
    /// Fidelity deficit `dF`; sampled states satisfy `|<psi_opt|psi>|^2 = 1 - dF`.
    pub fidelity_deficit: f64,
    /// 1-norm of the coupling perturbation.
    pub v_one_norm: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct WorstCase {
    pub r_worst: f64,
    pub samples_evaluated: usize,
}

fn perturbed_state(rng: &mut ChaCha8Rng, psi: &StateVector, deficit: f64) -> Result<StateVector> {
    if deficit == 0.0 {
        return Ok(psi.clone());
    }
    let d = psi.dim();
    if d < 2 {
        return Err(Error::InvalidInput("cannot perturb a one-dimensional state".into()));
    }
    // Haar-like direction in the orthogonal complement (Box-Muller normals).
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-16);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    loop {
        let raw = Array1::from_iter((0..d).map(|_| C64::new(normal(rng), normal(rng))));
        let overlap: C64 = psi.amplitudes().iter().zip(raw.iter()).map(|(a, b)| a.conj() * b).sum();
        let orth = &raw - &(psi.amplitudes() * overlap);
        let norm = orth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let unit = orth.mapv(|z| z / norm);
            let mixed = psi.amplitudes() * C64::new((1.0 - deficit).sqrt(), 0.0)
                + &(&unit * C64::new(deficit.sqrt(), 0.0));
            return StateVector::new(mixed);
        }
    }
}

fn perturbed_couplings(rng: &mut ChaCha8Rng, v: &[f64], budget: f64) -> Vec<f64> {
    if budget == 0.0 {
        return v.to_vec();
    }
    for _ in 0..100 {
        let mut weights: Vec<f64> = (0..v.len()).map(|_| rng.gen::<f64>().max(1e-12)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w *= budget / total);
        let signs: Vec<f64> = (0..v.len()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let cand: Vec<f64> =
            v.iter().zip(weights.iter().zip(signs.iter())).map(|(x, (w, s))| x + s * w).collect();
        if cand.iter().all(|&x| x >= 0.0) {
            return cand;
        }
    }
    // All-upward fallback keeps the exact 1-norm while staying feasible.
    let mut weights: Vec<f64> = (0..v.len()).map(|_| rng.gen::<f64>().max(1e-12)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w *= budget / total);
    v.iter().zip(weights.iter()).map(|(x, w)| x + w).collect()
}

/// Worst-case precision under an initial-state fidelity deficit and a fixed
/// 1-norm coupling perturbation, by seeded random sampling on the budget
/// sphere. Returns the sample minimum.
pub fn robustness_worst_case(optimum: &OptimizationResult, config: &RobustnessConfig) -> Result<WorstCase> {
    if !(0.0..1.0).contains(&config.fidelity_deficit) || config.v_one_norm < 0.0 {
        return Err(Error::InvalidInput("invalid robustness budgets".into()));
    }
    let indices: Vec<usize> = (0..config.samples.max(1)).collect();
    let results: Vec<Option<f64>> = indices
        .par_iter()
        .map(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (i as u64).wrapping_mul(0xD134_2543_DE82_EF95));
            let psi = perturbed_state(&mut rng, &optimum.best_psi, config.fidelity_deficit).ok()?;
            let v = perturbed_couplings(&mut rng, &optimum.best_v, config.v_one_norm);
            let params = QuasiIdealParams::new(optimum.d, optimum.omega0, v, psi).ok()?;
            let clock = build_quasi_ideal(&params).ok()?;
            precision(&clock).ok().map(|s| s.r)
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut evaluated = 0usize;
    for r in results.into_iter().flatten() {
        evaluated += 1;
        worst = worst.min(r);
    }
    if evaluated == 0 {
        return Err(Error::OptimizationFailed("no robustness sample was feasible".into()));
    }
    Ok(WorstCase { r_worst: worst, samples_evaluated: evaluated })
}

/// Worst-case precision over a budget grid, reported as the worst sample
/// *within* each budget pair (monotone by construction: a larger budget
/// admits every smaller perturbation).
pub fn robustness_grid(
    optimum: &OptimizationResult,
    fidelity_deficits: &[f64],
    v_one_norms: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut raw = vec![vec![f64::INFINITY; v_one_norms.len()]; fidelity_deficits.len()];
    for (i, &df) in fidelity_deficits.iter().enumerate() {
        for (j, &dv) in v_one_norms.iter().enumerate() {
            let config = RobustnessConfig {
                fidelity_deficit: df,
                v_one_norm: dv,
                samples,
                seed: seed.wrapping_add((i * v_one_norms.len() + j) as u64),
            };
            raw[i][j] = robustness_worst_case(optimum, &config)?.r_worst;
        }
    }
    // Running minimum over the partial order of budgets.
    let mut grid = raw.clone();
    for i in 0..grid.len() {
        for j in 0..grid[i].len() {
            if i > 0 {
                grid[i][j] = grid[i][j].min(grid[i - 1][j]);
            }
            if j > 0 {
                grid[i][j] = grid[i][j].min(grid[i][j - 1]);
            }
        }
    }
    Ok(grid)
}

/// Which register events count as ticks when the bath is warm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickConvention {
    /// Only spontaneous-emission jumps advance the register.
    EmissionOnly,
    /// Absorption jumps advance the register as well.
    AbsorptionTicks,
}

#[derive(Debug, Clone, Copy)]
pub struct TemperaturePoint {
    pub occupation: f64,
    pub r: f64,
}

/// Rebuilds the thermally extended clock at each bath occupation and returns
/// the first-tick precision under the chosen tick convention.
pub fn temperature_sweep(
    optimum: &OptimizationResult,
    occupations: &[f64],
    convention: TickConvention,
) -> Result<Vec<TemperaturePoint>> {
    let base = optimum.quasi_ideal_params();
    let gap = 20.0 * optimum.d as f64 * optimum.omega0;
    occupations
        .iter()
        .map(|&n| {
            if n < 0.0 {
                return Err(Error::InvalidInput("occupation must be >= 0".into()));
            }
            let channels: Vec<ThermalChannel> = base
                .v
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 1e-12)
                .map(|(m, _)| ThermalChannel { m, omega_gap: gap, occupation: n })
                .collect();
            let clock = build_thermal_extended(&ThermalExtensionParams {
                base: base.clone(),
                channels,
                absorption_ticks: convention == TickConvention::AbsorptionTicks,
                beta: None,
            })?;
            Ok(TemperaturePoint { occupation: n, r: precision(&clock)?.r })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_level_clock_has_unit_precision() {
        let config = OptimizationConfig::new(1, 7).with_restarts(3);
        let result = optimize_precision(1, &config).unwrap();
        assert_abs_diff_eq!(result.best_r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn two_level_optimum_reaches_four() {
        let config = OptimizationConfig::new(2, 11).with_restarts(8);
        let result = optimize_precision(2, &config).unwrap();
        assert!(result.best_r >= 4.0 - 1e-3, "R = {}", result.best_r);
        assert!(result.best_v.iter().all(|&v| (0.0..=2.0).contains(&v)));
    }

    #[test]
    fn optimizer_is_deterministic_for_fixed_seed() {
        let config = OptimizationConfig::new(3, 99).with_restarts(4);
        let a = optimize_precision(3, &config).unwrap();
        let b = optimize_precision(3, &config).unwrap();
        assert_eq!(a.best_r.to_bits(), b.best_r.to_bits());
        assert_eq!(a.best_v, b.best_v);
    }

    #[test]
    fn full_channel_beats_classical_bound() {
        for d in [3usize, 5] {
            let config = OptimizationConfig::new(d, 5).with_restarts(6);
            let result = optimize_precision(d, &config).unwrap();
            assert!(result.best_r > d as f64, "d = {d}: R = {}", result.best_r);
        }
    }

    #[test]
    fn restricted_with_all_channels_matches_full() {
        let config = OptimizationConfig::new(3, 5).with_restarts(5);
        let full = optimize_precision(3, &config).unwrap();
        let restricted = optimize_restricted(3, 3, &config).unwrap();
        assert_abs_diff_eq!(full.best_r, restricted.best_r, epsilon = 1e-6);
    }

    #[test]
    fn zero_budget_robustness_returns_optimum() {
        let config = OptimizationConfig::new(2, 3).with_restarts(5);
        let optimum = optimize_precision(2, &config).unwrap();
        let worst = robustness_worst_case(
            &optimum,
            &RobustnessConfig { fidelity_deficit: 0.0, v_one_norm: 0.0, samples: 10, seed: 1 },
        )
        .unwrap();
        assert_abs_diff_eq!(worst.r_worst, optimum.best_r, epsilon = 1e-12);
    }

    #[test]
    fn robustness_grid_is_monotone() {
        let config = OptimizationConfig::new(3, 13).with_restarts(5);
        let optimum = optimize_precision(3, &config).unwrap();
        let grid =
            robustness_grid(&optimum, &[0.0, 0.02, 0.05], &[0.0, 0.05, 0.1], 40, 5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i > 0 {
                    assert!(grid[i][j] <= grid[i - 1][j] + 1e-12);
                }
                if j > 0 {
                    assert!(grid[i][j] <= grid[i][j - 1] + 1e-12);
                }
            }
        }
        assert_abs_diff_eq!(grid[0][0], optimum.best_r, epsilon = 1e-12);
    }

    #[test]
    fn zero_occupation_sweep_reproduces_optimum() {
        let config = OptimizationConfig::new(2, 17).with_restarts(6);
        let optimum = optimize_precision(2, &config).unwrap();
        let sweep = temperature_sweep(&optimum, &[0.0, 1e-4], TickConvention::EmissionOnly).unwrap();
        assert_abs_diff_eq!(sweep[0].r, optimum.best_r, epsilon = 1e-7);
        assert!(sweep[1].r <= sweep[0].r + 1e-9);
    }

    #[test]
    fn both_tick_conventions_agree_before_the_first_tick() {
        // Absorption operators act on the secondary block only, which the
        // no-tick trajectory never reaches from a primary-block start.
        let config = OptimizationConfig::new(3, 19).with_restarts(5);
        let optimum = optimize_precision(3, &config).unwrap();
        let ns = [0.0, 1e-5, 1e-3];
        let a = temperature_sweep(&optimum, &ns, TickConvention::EmissionOnly).unwrap();
        let b = temperature_sweep(&optimum, &ns, TickConvention::AbsorptionTicks).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(x.r, y.r, epsilon = 1e-8 * (1.0 + x.r));
        }
    }
}
