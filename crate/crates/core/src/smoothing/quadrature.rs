//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Recursion limit; intervals are halved at most this many times.
pub const MAX_DEPTH: u32 = 40;

/// Integrand evaluations allowed per call.
pub const MAX_EVALUATIONS: usize = 5_000_000;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is accepted once the two-half Simpson estimate agrees with the
/// one-panel estimate to `15·tol` (the Richardson bound), and the accepted
/// value carries the Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut state = State {
        ok: true,
        budget: MAX_EVALUATIONS,
    };
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut state);
    if state.ok && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::QuadratureFailure { a, b, tolerance: tol })
    }
}

struct State {
    ok: bool,
    budget: usize,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut State,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // the second test stops refinement once the difference is pure round-off
    if delta.abs() <= 15.0 * tol || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
        return left + right + delta / 15.0;
    }
    state.budget = state.budget.saturating_sub(2);
    if depth == 0 || state.budget == 0 || !state.ok {
        state.ok = false;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrands() {
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|x| (-x * x).exp(), -6.0, 6.0, 1e-13).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn failure_is_reported() {
        let err = adaptive_simpson(|x| if x > 0.3 { f64::NAN } else { 1.0 }, 0.0, 1.0, 1e-9);
        assert!(matches!(err, Err(Error::QuadratureFailure { .. })));
        let err = adaptive_simpson(|x| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-14);
        assert!(err.is_err());
    }
}
