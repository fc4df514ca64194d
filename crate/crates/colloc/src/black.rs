//! Undiscounted Black-76 prices and a safeguarded implied-volatility solver.

use crate::error::{Error, Result};
use crate::math::gauss::{norm_cdf, norm_pdf};

/// Undiscounted Black call on a forward.
pub fn black_call(forward: f64, strike: f64, vol: f64, t: f64) -> f64 {
    if strike <= 0.0 {
        return forward - strike;
    }
    let stdev = vol * t.sqrt();
    if stdev <= 0.0 {
        return (forward - strike).max(0.0);
    }
    let d1 = ((forward / strike).ln() + 0.5 * stdev * stdev) / stdev;
    let d2 = d1 - stdev;
    forward * norm_cdf(d1) - strike * norm_cdf(d2)
}

/// Undiscounted Black put via parity.
pub fn black_put(forward: f64, strike: f64, vol: f64, t: f64) -> f64 {
    black_call(forward, strike, vol, t) - forward + strike
}

/// dC/dvol.
pub fn black_vega(forward: f64, strike: f64, vol: f64, t: f64) -> f64 {
    if strike <= 0.0 {
        return 0.0;
    }
    let stdev = vol * t.sqrt();
    if stdev <= 0.0 {
        return 0.0;
    }
    let d1 = ((forward / strike).ln() + 0.5 * stdev * stdev) / stdev;
    forward * norm_pdf(d1) * t.sqrt()
}

/// Black digital -dC/dK.
pub fn black_digital(forward: f64, strike: f64, vol: f64, t: f64) -> f64 {
    let stdev = vol * t.sqrt();
    if stdev <= 0.0 || strike <= 0.0 {
        return if forward > strike { 1.0 } else { 0.0 };
    }
    let d2 = ((forward / strike).ln() - 0.5 * stdev * stdev) / stdev;
    norm_cdf(d2)
}

/// Implied Black volatility by safeguarded Newton iteration.
///
/// Reprices to |C(vol) - price| <= 1e-10 * forward (usually far better).
pub fn implied_vol(price: f64, forward: f64, strike: f64, t: f64, is_call: bool) -> Result<f64> {
    let call_price = if is_call {
        price
    } else {
        price + forward - strike
    };
    let intrinsic = (forward - strike).max(0.0);
    if !(call_price > intrinsic) || !(call_price < forward) {
        return Err(Error::PriceOutOfBounds {
            price: call_price,
            lower: intrinsic,
            upper: forward,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while black_call(forward, strike, hi, t) < call_price {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::PriceOutOfBounds {
                price: call_price,
                lower: intrinsic,
                upper: forward,
            });
        }
    }
    // Absolute cap scaled by the forward, sharpened for small prices where
    // the forward scale would be too coarse.
    let tol = (1e-14 * forward).min(1e-12 * call_price).max(1e-280);
    let mut vol = 0.5 * (lo + hi);
    for _ in 0..100 {
        let diff = black_call(forward, strike, vol, t) - call_price;
        if diff.abs() <= tol {
            return Ok(vol);
        }
        if diff > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        let vega = black_vega(forward, strike, vol, t);
        let mut next = if vega > 1e-300 { vol - diff / vega } else { vol };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - vol).abs() < 1e-16 * vol.max(1e-16) {
            return Ok(next);
        }
        vol = next;
    }
    let diff = black_call(forward, strike, vol, t) - call_price;
    if diff.abs() <= 1e-10 * forward {
        Ok(vol)
    } else {
        Err(Error::NoConvergence {
            iterations: 100,
            objective: diff.abs(),
        })
    }
}
