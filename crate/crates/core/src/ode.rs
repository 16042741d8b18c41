//! Adaptive embedded Runge-Kutta integration for small dense systems.
//!
//! One Dormand-Prince 5(4) core drives every initial-value solve in the
//! crate: the complex Rayleigh shooting problems (as a real 4-vector) and
//! the real critical-layer 4-vector system. Integration may run in either
//! direction; step-size caps are supplied by the caller as a closure so
//! that near-singular coefficients can throttle the integrator locally.

use crate::error::{Error, Result};

/// Tolerances and limits for an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct IvpOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on |h| independent of position; `None` leaves the step free.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_step: None, max_steps: 40_000_000 }
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error coefficients: b - b_hat.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += h * coef * k[i];
        }
    }
    out
}

/// Integrate dy/ds = f(s, y) from `s0` to `s1` (either direction).
///
/// `step_cap(s, y)` returns an additional positive bound on |h| near `s`;
/// return `f64::INFINITY` for no local restriction. `observer` receives
/// every accepted node including the initial and final states.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    s0: f64,
    s1: f64,
    y0: [f64; N],
    opts: &IvpOptions,
    step_cap: &dyn Fn(f64, &[f64; N]) -> f64,
    observer: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let span = s1 - s0;
    if span == 0.0 {
        observer(s0, &y0);
        return Ok(y0);
    }
    let dir = span.signum();
    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    observer(s, &y);

    let mut h_abs = (span.abs() / 100.0).min(opts.max_step.unwrap_or(f64::INFINITY));
    h_abs = h_abs.min(step_cap(s, &y)).max(1e-300);

    let mut naccept: usize = 0;
    let mut nreject: usize = 0;
    loop {
        if naccept + nreject > opts.max_steps {
            return Err(Error::IntegratorFailure { s, reason: format!("step budget {} exhausted", opts.max_steps) });
        }
        let mut cap = step_cap(s, &y);
        if let Some(m) = opts.max_step {
            cap = cap.min(m);
        }
        h_abs = h_abs.min(cap).max(1e-300);
        let remaining = (s1 - s).abs();
        let mut last = false;
        if h_abs >= remaining {
            h_abs = remaining;
            last = true;
        }
        let h = dir * h_abs;

        let k2 = f(s + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(s + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(s + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(s + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(s + h, &y_new);

        // Weighted RMS error estimate.
        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / N as f64).sqrt();

        if !err.is_finite() {
            h_abs *= 0.25;
            nreject += 1;
            if h_abs < 1e-15 * (1.0 + s.abs()) {
                return Err(Error::IntegratorFailure { s, reason: "non-finite error estimate at minimal step".into() });
            }
            continue;
        }

        if err <= 1.0 {
            s = if last { s1 } else { s + h };
            y = y_new;
            k1 = k7;
            observer(s, &y);
            naccept += 1;
            if last {
                return Ok(y);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h_abs *= factor;
        } else {
            nreject += 1;
            h_abs *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h_abs < 1e-15 * (1.0 + s.abs()) {
                return Err(Error::IntegratorFailure { s, reason: format!("step size underflow (err = {err:e})") });
            }
        }
    }
}

/// Convenience wrapper without local step caps.
pub fn integrate_plain<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    s0: f64,
    s1: f64,
    y0: [f64; N],
    opts: &IvpOptions,
) -> Result<[f64; N]> {
    integrate(f, s0, s1, y0, opts, &|_, _| f64::INFINITY, &mut |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_forward_and_backward() {
        let f = |_s: f64, y: &[f64; 1]| [y[0]];
        let opts = IvpOptions::default();
        let y = integrate_plain(&f, 0.0, 1.0, [1.0], &opts).unwrap();
        assert!((y[0] - 1.0_f64.exp()).abs() < 1e-9);
        let y = integrate_plain(&f, 1.0, 0.0, [1.0_f64.exp()], &opts).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_order() {
        // Error should drop by roughly 10^4 when rtol tightens by 10^4.
        let f = |_s: f64, y: &[f64; 2]| [y[1], -y[0]];
        let exact = (10.0_f64).cos();
        let mut errs = Vec::new();
        for rtol in [1e-6, 1e-10] {
            let opts = IvpOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
            let y = integrate_plain(&f, 0.0, 10.0, [1.0, 0.0], &opts).unwrap();
            errs.push((y[0] - exact).abs().max(1e-16));
        }
        assert!(errs[1] < errs[0] * 1e-2, "tightening tolerance did not reduce error: {errs:?}");
    }

    #[test]
    fn step_cap_is_respected() {
        let f = |_s: f64, y: &[f64; 1]| [y[0]];
        let opts = IvpOptions::default();
        let mut max_h: f64 = 0.0;
        let mut prev: Option<f64> = None;
        integrate(
            &f,
            0.0,
            1.0,
            [1.0],
            &opts,
            &|_, _| 0.01,
            &mut |s, _| {
                if let Some(p) = prev {
                    max_h = max_h.max((s - p).abs());
                }
                prev = Some(s);
            },
        )
        .unwrap();
        assert!(max_h <= 0.01 + 1e-12, "max step {max_h} exceeds cap");
    }
}
