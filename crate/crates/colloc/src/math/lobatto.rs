//! Adaptive Gauss-Lobatto quadrature.
//!
//! Four-point Lobatto rule paired with its seven-point Kronrod extension;
//! intervals whose two estimates disagree are split at the Kronrod nodes so
//! every function value is reused. The error budget is spread over
//! subintervals proportionally to their width.

use crate::error::{Error, Result};

const ALPHA: f64 = 0.816496580927726033; // sqrt(2/3)
const BETA: f64 = 0.447213595499957939; // 1/sqrt(5)

const MAX_DEPTH: usize = 40;

/// Integrate `f` over [a, b] to the requested absolute tolerance.
pub fn adaptive_lobatto<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    adaptive_lobatto_checked(&|x| Ok(f(x)), a, b, abs_tol)
}

/// Same as [`adaptive_lobatto`] for integrands that can fail.
pub fn adaptive_lobatto_checked<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a < b) {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let tol_per_len = abs_tol / (b - a);
    segment(f, a, fa, b, fb, tol_per_len, MAX_DEPTH)
}

fn segment<F>(f: &F, a: f64, fa: f64, b: f64, fb: f64, tol_per_len: f64, depth: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let x = [m - ALPHA * h, m - BETA * h, m, m + BETA * h, m + ALPHA * h];
    let mut fx = [0.0; 5];
    for (v, xi) in fx.iter_mut().zip(x.iter()) {
        *v = f(*xi)?;
    }
    let i2 = (h / 6.0) * (fa + fb + 5.0 * (fx[1] + fx[3]));
    let i1 = (h / 1470.0)
        * (77.0 * (fa + fb) + 432.0 * (fx[0] + fx[4]) + 625.0 * (fx[1] + fx[3]) + 672.0 * fx[2]);
    let err = (i1 - i2).abs();
    if err <= tol_per_len * (b - a) || m <= a || b <= m {
        if err.is_nan() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite estimate on [{a}, {b}]"
            )));
        }
        return Ok(i1);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "max subdivision depth reached on [{a}, {b}], err {err:.3e}"
        )));
    }
    let bounds = [a, x[0], x[1], x[2], x[3], x[4], b];
    let values = [fa, fx[0], fx[1], fx[2], fx[3], fx[4], fb];
    let mut total = 0.0;
    for i in 0..6 {
        total += segment(
            f,
            bounds[i],
            values[i],
            bounds[i + 1],
            values[i + 1],
            tol_per_len,
            depth - 1,
        )?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gauss::norm_pdf;

    #[test]
    fn polynomial_is_exact() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let v = adaptive_lobatto(&f, -1.0, 3.0, 1e-13).unwrap();
        // antiderivative x^4/4 - x^2 + x
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let v = adaptive_lobatto(&norm_pdf, -8.0, 8.0, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kinked_integrand() {
        // integral of max(x, 0) * phi(x) = m_1(0) = phi(0)
        let f = |x: f64| x.max(0.0) * norm_pdf(x);
        let v = adaptive_lobatto(&f, -8.0, 8.0, 1e-12).unwrap();
        assert!((v - norm_pdf(0.0)).abs() < 1e-11, "{v}");
    }

    #[test]
    fn propagates_integrand_errors() {
        let f = |x: f64| {
            if x > 0.5 {
                Err(Error::InvalidInput("boom".into()))
            } else {
                Ok(x)
            }
        };
        assert!(adaptive_lobatto_checked(&f, 0.0, 1.0, 1e-10).is_err());
    }
}
