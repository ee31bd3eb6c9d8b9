//! Adaptive explicit Runge-Kutta integration for matrix-valued flows.
//!
//! Dormand-Prince 5(4) with per-entry error control. The state is a
//! [`ComplexMatrix`]; the right-hand side must be autonomous, which is all
//! the gradient flows in this crate need.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Step-size and budget controls.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rel_tol: 1e-6, abs_tol: 1e-9, max_time: 10.0, max_steps: 100_000 }
    }
}

/// Why the integration loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The accept callback asked to stop.
    Callback,
    /// Integrated out to `max_time`.
    TimeHorizon,
    /// Ran out of the step budget or the step size underflowed.
    Budget,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub state: ComplexMatrix,
    pub time: f64,
    pub accepted_steps: usize,
    pub stop: StopReason,
}

// Dormand-Prince coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// 5th-order solution weights (also the last tableau row: first-same-as-last)
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// embedded 4th-order weights
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn combine(base: &ComplexMatrix, h: f64, stages: &[&ComplexMatrix], weights: &[f64]) -> ComplexMatrix {
    let mut out = base.clone();
    for (k, &w) in stages.iter().zip(weights.iter()) {
        if w != 0.0 {
            out.scaled_add_assign(h * w, k);
        }
    }
    out
}

/// Weighted RMS of the embedded error estimate; a value of at most one
/// means the step passes the tolerance test.
fn error_norm(err: &ComplexMatrix, y0: &ComplexMatrix, y1: &ComplexMatrix, ctrl: &StepControl) -> f64 {
    let n = err.data().len();
    let mut acc = 0.0;
    for i in 0..n {
        let scale = ctrl.abs_tol
            + ctrl.rel_tol * y0.data()[i].norm().max(y1.data()[i].norm());
        let r = err.data()[i].norm() / scale;
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

/// Integrate `dy/dt = rhs(y)` from `y0` at time zero.
///
/// `on_accept(t, y)` runs after every accepted step and stops the
/// integration early by returning `true`. A non-finite state aborts with
/// [`Error::Divergence`] (`last_error` is reported as NaN here; callers that
/// track a scalar error rewrap it).
pub fn integrate_adaptive<F, G>(
    y0: ComplexMatrix,
    rhs: F,
    ctrl: &StepControl,
    mut on_accept: G,
) -> Result<Integration>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
    G: FnMut(f64, &ComplexMatrix) -> bool,
{
    if !(ctrl.max_time > 0.0) || ctrl.max_steps == 0 || !(ctrl.rel_tol > 0.0) || !(ctrl.abs_tol > 0.0)
    {
        return Err(Error::config(
            "step control requires positive tolerances, max_time and max_steps".to_string(),
        ));
    }

    let mut y = y0;
    let mut t = 0.0;
    let mut k1 = rhs(&y);
    if !k1.is_finite() {
        return Err(Error::Divergence { last_error: f64::NAN });
    }

    // initial step from the relative magnitudes of state and derivative
    let y_scale = y.frobenius_norm().max(ctrl.abs_tol);
    let f_scale = k1.frobenius_norm();
    let mut h = if f_scale > 0.0 {
        (0.01 * y_scale / f_scale).min(ctrl.max_time / 10.0).max(1e-12)
    } else {
        ctrl.max_time / 10.0
    };

    let mut accepted = 0usize;
    let mut attempts = 0usize;

    while t < ctrl.max_time {
        if attempts >= ctrl.max_steps {
            return Ok(Integration { state: y, time: t, accepted_steps: accepted, stop: StopReason::Budget });
        }
        attempts += 1;
        h = h.min(ctrl.max_time - t);
        if h < 1e-14 * (1.0 + t.abs()) {
            return Ok(Integration { state: y, time: t, accepted_steps: accepted, stop: StopReason::Budget });
        }

        let k2 = rhs(&combine(&y, h, &[&k1], &A2));
        let k3 = rhs(&combine(&y, h, &[&k1, &k2], &A3));
        let k4 = rhs(&combine(&y, h, &[&k1, &k2, &k3], &A4));
        let k5 = rhs(&combine(&y, h, &[&k1, &k2, &k3, &k4], &A5));
        let k6 = rhs(&combine(&y, h, &[&k1, &k2, &k3, &k4, &k5], &A6));
        let stages5 = [&k1, &k2, &k3, &k4, &k5, &k6];
        let y5 = combine(&y, h, &stages5, &B5[..6]);
        let k7 = rhs(&y5);

        let all = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = ComplexMatrix::zeros(y.rows(), y.cols());
        for (k, (&b5, &b4)) in all.iter().zip(B5.iter().zip(B4.iter())) {
            let d = b5 - b4;
            if d != 0.0 {
                err.scaled_add_assign(h * d, k);
            }
        }

        if !y5.is_finite() || !k7.is_finite() {
            return Err(Error::Divergence { last_error: f64::NAN });
        }

        let en = error_norm(&err, &y, &y5, ctrl);
        if en <= 1.0 {
            t += h;
            y = y5;
            k1 = k7; // first-same-as-last
            accepted += 1;
            if on_accept(t, &y) {
                return Ok(Integration { state: y, time: t, accepted_steps: accepted, stop: StopReason::Callback });
            }
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }

    Ok(Integration { state: y, time: t, accepted_steps: accepted, stop: StopReason::TimeHorizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Complex64, ComplexMatrix};
    use num_complex::Complex;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let y0 = ComplexMatrix::new(1, 1, vec![Complex::new(1.0, 0.0)]).unwrap();
        let ctrl = StepControl { max_time: 1.0, rel_tol: 1e-9, abs_tol: 1e-12, ..Default::default() };
        let out = integrate_adaptive(y0, |y| y.scale(Complex::new(-1.0, 0.0)), &ctrl, |_, _| false)
            .unwrap();
        let expect = (-1.0f64).exp();
        assert_eq!(out.stop, StopReason::TimeHorizon);
        assert!((out.state.get(0, 0).re - expect).abs() < 1e-8);
        assert!(out.state.get(0, 0).im.abs() < 1e-12);
    }

    #[test]
    fn phase_rotation_preserves_modulus() {
        // dy/dt = i y  =>  y(t) = e^{it} y(0)
        let y0 = ComplexMatrix::new(1, 1, vec![Complex::new(1.0, 0.0)]).unwrap();
        let ctrl = StepControl { max_time: 3.0, rel_tol: 1e-10, abs_tol: 1e-12, ..Default::default() };
        let out = integrate_adaptive(y0, |y| y.scale(Complex::new(0.0, 1.0)), &ctrl, |_, _| false)
            .unwrap();
        let z: Complex64 = out.state.get(0, 0);
        assert!((z.norm() - 1.0).abs() < 1e-8);
        assert!((z.re - 3.0f64.cos()).abs() < 1e-7);
        assert!((z.im - 3.0f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn callback_stops_early() {
        let y0 = ComplexMatrix::new(1, 1, vec![Complex::new(1.0, 0.0)]).unwrap();
        let ctrl = StepControl { max_time: 50.0, ..Default::default() };
        let out = integrate_adaptive(
            y0,
            |y| y.scale(Complex::new(-1.0, 0.0)),
            &ctrl,
            |_, y| y.get(0, 0).norm() < 0.5,
        )
        .unwrap();
        assert_eq!(out.stop, StopReason::Callback);
        assert!(out.time < 1.5);
    }

    #[test]
    fn step_budget_is_respected() {
        let y0 = ComplexMatrix::new(1, 1, vec![Complex::new(1.0, 0.0)]).unwrap();
        let ctrl = StepControl { max_time: 1e9, max_steps: 10, ..Default::default() };
        let out = integrate_adaptive(y0, |y| y.scale(Complex::new(-1.0, 0.0)), &ctrl, |_, _| false)
            .unwrap();
        assert_eq!(out.stop, StopReason::Budget);
        assert!(out.accepted_steps <= 10);
    }

    #[test]
    fn divergent_rhs_reports_divergence() {
        let y0 = ComplexMatrix::new(1, 1, vec![Complex::new(1.0, 0.0)]).unwrap();
        let ctrl = StepControl::default();
        let res = integrate_adaptive(
            y0,
            |y| y.map(|z| Complex::new(z.re * f64::INFINITY, 0.0)),
            &ctrl,
            |_, _| false,
        );
        assert!(matches!(res, Err(Error::Divergence { .. })));
    }

    #[test]
    fn rejects_bad_control() {
        let y0 = ComplexMatrix::zeros(1, 1);
        let ctrl = StepControl { max_time: 0.0, ..Default::default() };
        assert!(integrate_adaptive(y0, |y| y.clone(), &ctrl, |_, _| false).is_err());
    }
}
