//! Embedded Dormand–Prince 5(4) integrator for scalar complex ODEs.
//!
//! The master-equation route only ever integrates one matrix element at a
//! time (pure dephasing never couples elements), so the state is a single
//! `Complex64`. Steps are clamped so every requested output time is hit
//! exactly — no dense output involved. The right-hand side is fallible
//! because rate evaluations may involve quadrature.

use num_complex::Complex64;

use crate::{Error, Result};

// Dormand–Prince coefficients (the classic RK45 pair with FSAL).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// 5th-order solution weights equal the last row of A (FSAL); the error
// weights are b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Integrate dy/dt = rhs(t, y) from `times[0]`, returning y at every entry
/// of `times` (which must be finite and strictly increasing).
pub fn integrate_grid<F>(
    mut rhs: F,
    y0: Complex64,
    times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, Complex64) -> Result<Complex64>,
{
    if times.is_empty() {
        return Ok(Vec::new());
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!(
                "output times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".to_string()));
    }

    let mut out = Vec::with_capacity(times.len());
    out.push(y0);

    let mut t = times[0];
    let mut y = y0;
    let mut k0 = rhs(t, y)?;
    let total_span = times[times.len() - 1] - times[0];
    let mut h = (total_span / 100.0).min(0.1).max(1e-6);

    for &t_target in &times[1..] {
        while t < t_target {
            let h_step = h.min(t_target - t);
            let hit_target = h_step < h;

            // Stage evaluations; k0 carries over via FSAL.
            let mut k = [Complex64::ZERO; 7];
            k[0] = k0;
            for s in 1..7 {
                let mut acc = Complex64::ZERO;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj;
                    }
                }
                k[s] = rhs(t + C[s] * h_step, y + h_step * acc)?;
            }

            // 5th-order update is stage 7's argument (A[6] row = b).
            let mut acc = Complex64::ZERO;
            for (j, kj) in k.iter().enumerate().take(6) {
                let a = A[6][j];
                if a != 0.0 {
                    acc += a * kj;
                }
            }
            let y_new = y + h_step * acc;

            let mut err_acc = Complex64::ZERO;
            for (ej, kj) in E.iter().zip(k.iter()) {
                err_acc += *ej * kj;
            }
            let err_abs = (h_step * err_acc).norm();
            let scale = atol + rtol * y.norm().max(y_new.norm());
            let err_ratio = err_abs / scale;

            let grow = if err_ratio > 0.0 {
                (SAFETY * err_ratio.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            } else {
                MAX_SCALE
            };

            if err_ratio <= 1.0 {
                t = if hit_target { t_target } else { t + h_step };
                y = y_new;
                k0 = k[6];
                // A step clamped to land on the grid must not shrink the
                // cruising step size.
                h = if hit_target {
                    h.max(h_step * grow)
                } else {
                    h_step * grow
                };
            } else {
                h = h_step * grow;
            }

            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
        out.push(y);
    }

    Ok(out)
}
