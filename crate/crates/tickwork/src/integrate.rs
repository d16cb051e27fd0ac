//! Adaptive Dormand-Prince 5(4) integrator over flat real state vectors.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive embedded Runge-Kutta 5(4).
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

impl Dopri5 {
    /// Integrates `y' = rhs(t, y)` from `t0` to `t1`, landing exactly on `t1`.
    /// `h` carries the step-size guess across calls.
    pub fn step_to<F>(&self, mut rhs: F, t0: f64, t1: f64, y: &mut [f64], h: &mut f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut t = t0;
        if *h <= 0.0 || !h.is_finite() {
            *h = span / 100.0;
        }
        let min_step = span * 1e-14;
        let mut steps = 0usize;
        while t < t1 {
            if steps > 50_000_000 {
                return Err(Error::Accuracy("integrator exceeded step budget".into()));
            }
            steps += 1;
            let mut hs = h.min(t1 - t);
            loop {
                rhs(t, y, &mut k[0]);
                for s in 1..7 {
                    let (head, tail) = k.split_at_mut(s);
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (j, kj) in head.iter().enumerate() {
                            acc += A[s][j] * kj[i];
                        }
                        stage[i] = y[i] + hs * acc;
                    }
                    rhs(t + C[s] * hs, &stage, &mut tail[0]);
                }
                let mut err_sq = 0.0;
                for i in 0..n {
                    let mut v5 = 0.0;
                    let mut v4 = 0.0;
                    for s in 0..7 {
                        v5 += B5[s] * k[s][i];
                        v4 += B4[s] * k[s][i];
                    }
                    y5[i] = y[i] + hs * v5;
                    let e = hs * (v5 - v4);
                    let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                    err_sq += (e / scale) * (e / scale);
                }
                let err = (err_sq / n as f64).sqrt();
                if !err.is_finite() {
                    hs *= 0.25;
                    if hs < min_step {
                        return Err(Error::Accuracy("integrator step underflow (non-finite error)".into()));
                    }
                    continue;
                }
                if err <= 1.0 {
                    t += hs;
                    y.copy_from_slice(&y5);
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    *h = hs * factor;
                    break;
                }
                hs *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if hs < min_step {
                    return Err(Error::Accuracy(format!("integrator step underflow at t = {t:.6e}")));
                }
            }
        }
        Ok(())
    }
}
