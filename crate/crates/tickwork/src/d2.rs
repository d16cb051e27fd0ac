//! Closed forms for the two-level clock with a single decay channel on
//! `|t_1>` and initial state `|t_0>` (clockwork gap scaled to 1).
//!
//! The no-tick propagator `exp(-iHt - Vt)` is worked out in Pauli form; all
//! functions are analytic in `kappa^2 = V_1^2 - 1`, so the oscillatory
//! (`V_1 < 1`) and overdamped (`V_1 > 1`) regimes share one expression with a
//! series patch at the removable point `V_1 = 1`.

/// `cosh(sqrt(z))` continued through negative `z` (becomes `cos`).
fn cosh_sqrt(z: f64) -> f64 {
    if z > 1e-12 {
        z.sqrt().cosh()
    } else if z < -1e-12 {
        (-z).sqrt().cos()
    } else {
        1.0 + z / 2.0 + z * z / 24.0
    }
}

/// `sinh(sqrt(z)) / sqrt(z)` continued through negative `z` (becomes sinc).
fn sinhc_sqrt(z: f64) -> f64 {
    if z > 1e-12 {
        let s = z.sqrt();
        s.sinh() / s
    } else if z < -1e-12 {
        let s = (-z).sqrt();
        s.sin() / s
    } else {
        1.0 + z / 6.0 + z * z / 120.0
    }
}

fn pauli_components(v1: f64, t: f64) -> (f64, f64) {
    // z = (t kappa / 2)^2 with kappa^2 = v1^2 - 1.
    let z = (v1 * v1 - 1.0) * t * t / 4.0;
    let c = cosh_sqrt(z);
    // s = sinh(t kappa / 2) / kappa.
    let s = 0.5 * t * sinhc_sqrt(z);
    (c, s)
}

/// Identity component `a_0(t)` of the unnormalized no-tick state;
/// the survival trace is `2 a_0(t)` and `a_0(0) = 1/2`.
pub fn a0(v1: f64, t: f64) -> f64 {
    let (c, s) = pauli_components(v1, t);
    (-v1 * t).exp() * (0.5 * c * c + 0.5 * (1.0 + v1 * v1) * s * s + v1 * s * c)
}

/// First-tick waiting-time density
/// `P(t) = 2 V_1 e^{-V_1 t} sinh^2(t sqrt(V_1^2-1)/2) / (V_1^2-1)`,
/// evaluated through its analytic continuation across `V_1 = 1`.
pub fn delay_density(v1: f64, t: f64) -> f64 {
    let (_, s) = pauli_components(v1, t);
    2.0 * v1 * (-v1 * t).exp() * s * s
}
