//! Bracketed scalar root finding.

use crate::error::{BilliardError, Result};

/// Safeguarded Newton iteration on a sign-changing bracket.
///
/// `fdf` returns `(f(t), f'(t))`. The bracket `[lo, hi]` must satisfy
/// `f(lo) * f(hi) <= 0`. Newton steps that leave the current bracket, or that
/// fail to halve it fast enough, are replaced by bisection. Terminates when
/// `|f| <= ftol` or the bracket shrinks below a few ulps.
pub fn safeguarded_newton<F>(mut fdf: F, lo: f64, hi: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(BilliardError::NoConvergence(format!(
            "bracket [{lo}, {hi}] does not change sign ({flo:e}, {fhi:e})"
        )));
    }
    // orient so that f(a) < 0 < f(b)
    let (mut a, mut b) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut t = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut f, mut df) = fdf(t);

    for _ in 0..200 {
        if f.abs() <= ftol {
            return Ok(t);
        }
        let newton_leaves = ((t - b) * df - f) * ((t - a) * df - f) > 0.0;
        let too_slow = (2.0 * f).abs() > (dx_old * df).abs();
        dx_old = dx;
        if newton_leaves || too_slow || df == 0.0 {
            dx = 0.5 * (b - a);
            t = a + dx;
        } else {
            dx = f / df;
            t -= dx;
        }
        if dx.abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            let (fe, _) = fdf(t);
            if fe.abs() <= ftol {
                return Ok(t);
            }
            return Err(BilliardError::NoConvergence(format!(
                "bracket collapsed at t = {t} with residual {fe:e}"
            )));
        }
        let (fv, dfv) = fdf(t);
        f = fv;
        df = dfv;
        if f < 0.0 {
            a = t;
        } else {
            b = t;
        }
    }
    Err(BilliardError::NoConvergence(format!(
        "iteration limit reached at t = {t}, residual {f:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = safeguarded_newton(|t| (t * t * t - 2.0, 3.0 * t * t), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn decreasing_bracket() {
        let r = safeguarded_newton(|t| (t.cos(), -t.sin()), 0.0, 3.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_bracket() {
        let err = safeguarded_newton(|t| (t * t + 1.0, 2.0 * t), -1.0, 1.0, 1e-12).unwrap_err();
        assert_eq!(err.name(), "NoConvergence");
    }
}
