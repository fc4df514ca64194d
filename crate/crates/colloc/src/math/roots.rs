//! Safeguarded scalar solvers: Brent root finding, geometric bracket
//! expansion and golden-section minimization.

use crate::error::{Error, Result};

/// Brent's method on a bracketing interval [a, b] with f(a) f(b) <= 0.
///
/// Stops when |f| <= ftol or the interval shrinks below xtol.
pub fn brent<F>(f: &mut F, a: f64, b: f64, ftol: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut a = a;
    let mut b = b;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::InvalidInput(format!(
            "brent: no sign change on [{a}, {b}]"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation / secant.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Expand a bracket geometrically around `start` until `f` changes sign.
///
/// Each side of the bracket doubles its distance from `start` at every
/// attempt, up to `max_doublings`, and is clamped to [lo, hi]. Sides where
/// evaluation fails stop expanding.
pub fn expand_bracket<F>(
    f: &mut F,
    start: f64,
    initial_step: f64,
    lo: f64,
    hi: f64,
    max_doublings: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(start)?;
    if f0 == 0.0 {
        return Ok((start, start));
    }
    let mut step = initial_step.abs().max(1e-12);
    let mut left = start;
    let mut right = start;
    let mut f_left = f0;
    let mut f_right = f0;
    let mut left_open = start > lo;
    let mut right_open = start < hi;
    for _ in 0..max_doublings {
        if right_open {
            let cand = (start + step).min(hi);
            match f(cand) {
                Ok(v) => {
                    if v == 0.0 {
                        return Ok((cand, cand));
                    }
                    if v * f0 < 0.0 {
                        return Ok((right, cand));
                    }
                    right = cand;
                    f_right = v;
                    if cand >= hi {
                        right_open = false;
                    }
                }
                Err(_) => right_open = false,
            }
        }
        if left_open {
            let cand = (start - step).max(lo);
            match f(cand) {
                Ok(v) => {
                    if v == 0.0 {
                        return Ok((cand, cand));
                    }
                    if v * f0 < 0.0 {
                        return Ok((cand, left));
                    }
                    left = cand;
                    f_left = v;
                    if cand <= lo {
                        left_open = false;
                    }
                }
                Err(_) => left_open = false,
            }
        }
        if !left_open && !right_open {
            break;
        }
        step *= 2.0;
    }
    let _ = (f_left, f_right);
    Err(Error::InfeasibleMartingale(format!(
        "no sign change around {start} within [{lo}, {hi}]"
    )))
}

/// Golden-section search for a minimum of `f` on [a, b].
pub fn golden_section_min<F>(
    f: &mut F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618033988749894848;
    let mut a = a;
    let mut b = b;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    if f1 <= f2 {
        Ok((x1, f1))
    } else {
        Ok((x2, f2))
    }
}
