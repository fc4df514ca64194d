//! Closed-form undiscounted vanilla prices, first moments, survival
//! probabilities and densities for every collocation variant.
//!
//! All formulas reduce to truncated Gaussian moments. With c_K the strike in
//! driver coordinates, the plain Gaussian collocation call price is
//!
//! ```text
//! C(K) = sum_k a_k m_k(c_K) - K Phi(-c_K)
//! ```
//!
//! and each boundary variant replaces or augments pieces of that sum.

use crate::error::{Error, Result};
use crate::math::gauss::{norm_cdf, norm_pdf};
use crate::math::moments::{full_gaussian_moment, hermite_moments};
use crate::math::poly::MonotonicPolynomial;
use crate::slice::{BoundarySpec, CollocationSlice, LognormalTail};

/// Fitted exponential extrapolation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub alpha: f64,
    pub beta: f64,
}

/// Fit exp(alpha x + beta) to the polynomial at `x_cut`.
///
/// alpha = g'(x_cut)/g(x_cut), optionally capped; beta matches the level so
/// the extrapolation stays continuous even when the cap is active (slope
/// continuity then no longer holds).
pub fn fit_extrapolation(
    poly: &MonotonicPolynomial,
    x_cut: f64,
    cap: Option<f64>,
) -> Result<Extrapolation> {
    let value = poly.eval(x_cut);
    if !(value > 0.0) {
        return Err(Error::NonPositiveAtCutoff { value });
    }
    let mut alpha = poly.derivative_at(x_cut) / value;
    if let Some(c) = cap {
        alpha = alpha.min(c);
    }
    let beta = value.ln() - alpha * x_cut;
    Ok(Extrapolation { alpha, beta })
}

/// Fit the exponential tail of a lognormal collocation at Gaussian cutoff
/// `c_cut`: the asset map is g(exp(sigma_x y)) above and exp(alpha y + beta)
/// below.
pub fn fit_lognormal_tail(
    poly: &MonotonicPolynomial,
    sigma_x: f64,
    c_cut: f64,
    cap: Option<f64>,
) -> Result<LognormalTail> {
    let u = (sigma_x * c_cut).exp();
    let value = poly.eval(u);
    if !(value > 0.0) {
        return Err(Error::NonPositiveAtCutoff { value });
    }
    let mut alpha = sigma_x * u * poly.derivative_at(u) / value;
    if let Some(c) = cap {
        alpha = alpha.min(c);
    }
    let beta = value.ln() - alpha * c_cut;
    Ok(LognormalTail {
        c_cut,
        alpha,
        beta,
    })
}

/// sum_k a_k m_k(b)
fn poly_moment_sum(coeffs: &[f64], b: f64) -> f64 {
    let m = hermite_moments(b, coeffs.len() - 1);
    coeffs.iter().zip(m.values.iter()).map(|(a, v)| a * v).sum()
}

/// sum_k a_k E[X^k]
fn poly_full_moment(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a * full_gaussian_moment(k))
        .sum()
}

/// sum_k a_k exp(k^2 sigma^2 / 2), the lognormal collocation first moment.
fn lognormal_theoretical_moment(coeffs: &[f64], sigma_x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a * (0.5 * (k as f64 * sigma_x).powi(2)).exp())
        .sum()
}

impl CollocationSlice {
    fn invert_strike(&self, strike: f64) -> Result<f64> {
        let guess = if strike < self.forward { -1.0 } else { 1.0 };
        self.poly
            .invert(strike, guess)
            .map_err(|e| Error::InversionFailure(format!("strike {strike}: {e}")))
    }

    /// Gaussian driver coordinate of the extrapolation cutoff strike.
    pub fn cutoff_strike(&self) -> Option<f64> {
        match &self.boundary {
            BoundarySpec::ExpExtrapolation { x_cut, .. } => Some(self.poly.eval(*x_cut)),
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation: Some(tail),
            } => Some(self.poly.eval((sigma_x * tail.c_cut).exp())),
            _ => None,
        }
    }

    /// Model forward implied by the map, per variant.
    pub fn first_moment(&self) -> Result<f64> {
        let a = self.poly.coeffs();
        match &self.boundary {
            BoundarySpec::None => Ok(poly_full_moment(a)),
            BoundarySpec::ReflectedAbsorption { .. } => Ok(poly_full_moment(a)),
            BoundarySpec::Absorption { level } => {
                let c_l = self.invert_strike(*level)?;
                Ok(level * norm_cdf(c_l) + poly_moment_sum(a, c_l))
            }
            BoundarySpec::Reflection { level } => {
                let c_l = self.invert_strike(*level)?;
                let above = hermite_moments(c_l, a.len() - 1);
                let mirror = hermite_moments(-c_l, a.len() - 1);
                let mut sum = 2.0 * level * norm_cdf(c_l);
                for (k, ak) in a.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sum += ak * (above.get(k) - sign * mirror.get(k));
                }
                Ok(sum)
            }
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => Ok((beta + 0.5 * alpha * alpha).exp() * norm_cdf(x_cut - alpha)
                + poly_moment_sum(a, *x_cut)),
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => match extrapolation {
                None => Ok(lognormal_theoretical_moment(a, *sigma_x)),
                Some(tail) => {
                    let mut sum = (tail.beta + 0.5 * tail.alpha * tail.alpha).exp()
                        * norm_cdf(tail.c_cut - tail.alpha);
                    for (k, ak) in a.iter().enumerate() {
                        let ks = k as f64 * sigma_x;
                        sum += ak * (0.5 * ks * ks).exp() * norm_cdf(ks - tail.c_cut);
                    }
                    Ok(sum)
                }
            },
        }
    }

    /// Probability mass absorbed at the boundary level.
    pub fn absorption_probability(&self) -> Result<f64> {
        match &self.boundary {
            BoundarySpec::Absorption { level } => {
                let c_l = self.invert_strike(*level)?;
                Ok(norm_cdf(c_l))
            }
            BoundarySpec::ReflectedAbsorption { level } => {
                let c_l = self.invert_strike(*level)?;
                Ok(2.0 * norm_cdf(c_l))
            }
            other => Err(Error::WrongVariant {
                expected: "absorption or reflected_absorption",
                actual: other.name(),
            }),
        }
    }

    /// Undiscounted call price.
    pub fn price_call(&self, strike: f64) -> Result<f64> {
        let a = self.poly.coeffs();
        match &self.boundary {
            BoundarySpec::None => self.gaussian_poly_call(strike),
            BoundarySpec::Absorption { level } => {
                if strike < *level {
                    // All mass sits at or above the boundary: intrinsic value.
                    Ok(self.forward - strike)
                } else {
                    self.gaussian_poly_call(strike)
                }
            }
            BoundarySpec::ReflectedAbsorption { level } => {
                if strike <= *level {
                    return Ok(self.forward - strike);
                }
                let c_k = self.invert_strike(strike)?;
                let c_m = self.invert_strike(2.0 * level - strike)?;
                let above = hermite_moments(c_k, a.len() - 1);
                let mirror = hermite_moments(-c_m, a.len() - 1);
                let mut sum = 0.0;
                for (k, ak) in a.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sum += ak * (above.get(k) + sign * mirror.get(k));
                }
                Ok(sum - strike * norm_cdf(-c_k) - (2.0 * level - strike) * norm_cdf(c_m))
            }
            BoundarySpec::Reflection { level } => {
                if strike <= *level {
                    return Err(Error::UnsupportedStrike {
                        strike,
                        level: *level,
                    });
                }
                let c_k = self.invert_strike(strike)?;
                let c_m = self.invert_strike(2.0 * level - strike)?;
                let above = hermite_moments(c_k, a.len() - 1);
                let mirror = hermite_moments(-c_m, a.len() - 1);
                let mut sum = 0.0;
                for (k, ak) in a.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sum += ak * (above.get(k) - sign * mirror.get(k));
                }
                Ok(sum - strike * norm_cdf(-c_k) + (2.0 * level - strike) * norm_cdf(c_m))
            }
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => {
                if strike <= 0.0 {
                    return Ok(self.first_moment()? - strike);
                }
                let cutoff = self.poly.eval(*x_cut);
                if strike >= cutoff {
                    return self.gaussian_poly_call(strike);
                }
                let c_k = (strike.ln() - beta) / alpha;
                let tail = (beta + 0.5 * alpha * alpha).exp()
                    * (norm_cdf(x_cut - alpha) - norm_cdf(c_k - alpha));
                Ok(tail + poly_moment_sum(a, *x_cut) - strike * norm_cdf(-c_k))
            }
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => match extrapolation {
                None => {
                    if strike <= 0.0 {
                        return Ok(self.first_moment()? - strike);
                    }
                    let c_k = self.lognormal_strike_coord(strike, *sigma_x)?;
                    Ok(self.lognormal_poly_call(strike, *sigma_x, c_k))
                }
                Some(tail) => {
                    if strike <= 0.0 {
                        return Ok(self.first_moment()? - strike);
                    }
                    let cutoff = self.poly.eval((sigma_x * tail.c_cut).exp());
                    if strike >= cutoff {
                        let c_k = self.lognormal_strike_coord(strike, *sigma_x)?;
                        return Ok(self.lognormal_poly_call(strike, *sigma_x, c_k));
                    }
                    let c_k = (strike.ln() - tail.beta) / tail.alpha;
                    let mut sum = (tail.beta + 0.5 * tail.alpha * tail.alpha).exp()
                        * (norm_cdf(tail.c_cut - tail.alpha) - norm_cdf(c_k - tail.alpha));
                    for (k, ak) in a.iter().enumerate() {
                        let ks = k as f64 * sigma_x;
                        sum += ak * (0.5 * ks * ks).exp() * norm_cdf(ks - tail.c_cut);
                    }
                    Ok(sum - strike * norm_cdf(-c_k))
                }
            },
        }
    }

    /// Undiscounted put via put-call parity, P = C - F + K.
    pub fn price_put(&self, strike: f64) -> Result<f64> {
        Ok(self.price_call(strike)? - self.forward + strike)
    }

    /// P(S > K).
    pub fn survival(&self, strike: f64) -> Result<f64> {
        match &self.boundary {
            BoundarySpec::None => {
                let c_k = self.invert_strike(strike)?;
                Ok(norm_cdf(-c_k))
            }
            BoundarySpec::Absorption { level } => {
                if strike < *level {
                    Ok(1.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    Ok(norm_cdf(-c_k))
                }
            }
            BoundarySpec::ReflectedAbsorption { level } => {
                if strike < *level {
                    Ok(1.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    let c_m = self.invert_strike(2.0 * level - strike)?;
                    Ok(norm_cdf(-c_k) - norm_cdf(c_m))
                }
            }
            BoundarySpec::Reflection { level } => {
                if strike <= *level {
                    Ok(1.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    let c_m = self.invert_strike(2.0 * level - strike)?;
                    Ok(norm_cdf(-c_k) + norm_cdf(c_m))
                }
            }
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => {
                if strike <= 0.0 {
                    return Ok(1.0);
                }
                let cutoff = self.poly.eval(*x_cut);
                let c_k = if strike >= cutoff {
                    self.invert_strike(strike)?
                } else {
                    (strike.ln() - beta) / alpha
                };
                Ok(norm_cdf(-c_k))
            }
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => {
                if strike <= 0.0 {
                    return Ok(1.0);
                }
                let c_k = match extrapolation {
                    Some(tail) => {
                        let cutoff = self.poly.eval((sigma_x * tail.c_cut).exp());
                        if strike >= cutoff {
                            self.lognormal_strike_coord(strike, *sigma_x)?
                        } else {
                            (strike.ln() - tail.beta) / tail.alpha
                        }
                    }
                    None => self.lognormal_strike_coord(strike, *sigma_x)?,
                };
                Ok(norm_cdf(-c_k))
            }
        }
    }

    /// Continuous part of the implied density, phi(c_K) / g'(c_K) on the
    /// polynomial branch; boundary mass is reported separately by
    /// [`CollocationSlice::absorption_probability`].
    pub fn density(&self, strike: f64) -> Result<f64> {
        match &self.boundary {
            BoundarySpec::None => {
                let c_k = self.invert_strike(strike)?;
                Ok(norm_pdf(c_k) / self.poly.derivative_at(c_k))
            }
            BoundarySpec::Absorption { level } => {
                if strike < *level {
                    Ok(0.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    Ok(norm_pdf(c_k) / self.poly.derivative_at(c_k))
                }
            }
            BoundarySpec::ReflectedAbsorption { level } => {
                if strike < *level {
                    Ok(0.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    let c_m = self.invert_strike(2.0 * level - strike)?;
                    Ok(norm_pdf(c_k) / self.poly.derivative_at(c_k)
                        - norm_pdf(c_m) / self.poly.derivative_at(c_m))
                }
            }
            BoundarySpec::Reflection { level } => {
                if strike < *level {
                    Ok(0.0)
                } else {
                    let c_k = self.invert_strike(strike)?;
                    let c_m = self.invert_strike(2.0 * level - strike)?;
                    Ok(norm_pdf(c_k) / self.poly.derivative_at(c_k)
                        + norm_pdf(c_m) / self.poly.derivative_at(c_m))
                }
            }
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => {
                if strike <= 0.0 {
                    return Ok(0.0);
                }
                let cutoff = self.poly.eval(*x_cut);
                if strike >= cutoff {
                    let c_k = self.invert_strike(strike)?;
                    Ok(norm_pdf(c_k) / self.poly.derivative_at(c_k))
                } else {
                    // Lognormal tail density.
                    let c_k = (strike.ln() - beta) / alpha;
                    Ok(norm_pdf(c_k) / (alpha * strike))
                }
            }
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => {
                if strike <= 0.0 {
                    return Ok(0.0);
                }
                match extrapolation {
                    Some(tail) => {
                        let cutoff = self.poly.eval((sigma_x * tail.c_cut).exp());
                        if strike >= cutoff {
                            self.lognormal_poly_density(strike, *sigma_x)
                        } else {
                            let c_k = (strike.ln() - tail.beta) / tail.alpha;
                            Ok(norm_pdf(c_k) / (tail.alpha * strike))
                        }
                    }
                    None => {
                        if strike <= self.poly.coeffs()[0] {
                            return Ok(0.0);
                        }
                        self.lognormal_poly_density(strike, *sigma_x)
                    }
                }
            }
        }
    }

    /// Driver coordinate c_K of a strike, for variants where {S > K} is an
    /// upper set of the driver. `None` means the asset exceeds the strike
    /// almost surely.
    pub fn strike_driver_coord(&self, strike: f64) -> Result<Option<f64>> {
        match &self.boundary {
            BoundarySpec::None => Ok(Some(self.invert_strike(strike)?)),
            BoundarySpec::Absorption { level } => {
                if strike < *level {
                    Ok(None)
                } else {
                    Ok(Some(self.invert_strike(strike)?))
                }
            }
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => {
                if strike <= 0.0 {
                    return Ok(None);
                }
                let cutoff = self.poly.eval(*x_cut);
                if strike >= cutoff {
                    Ok(Some(self.invert_strike(strike)?))
                } else {
                    Ok(Some((strike.ln() - beta) / alpha))
                }
            }
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => {
                if strike <= 0.0 {
                    return Ok(None);
                }
                match extrapolation {
                    Some(tail) => {
                        let cutoff = self.poly.eval((sigma_x * tail.c_cut).exp());
                        if strike >= cutoff {
                            Ok(Some(self.lognormal_strike_coord(strike, *sigma_x)?))
                        } else {
                            Ok(Some((strike.ln() - tail.beta) / tail.alpha))
                        }
                    }
                    None => {
                        if strike <= self.poly.eval(0.0) {
                            Ok(None)
                        } else {
                            Ok(Some(self.lognormal_strike_coord(strike, *sigma_x)?))
                        }
                    }
                }
            }
            other @ (BoundarySpec::ReflectedAbsorption { .. } | BoundarySpec::Reflection { .. }) => {
                Err(Error::UnsupportedVariant {
                    op: "driver coordinate",
                    variant: other.name(),
                })
            }
        }
    }

    fn gaussian_poly_call(&self, strike: f64) -> Result<f64> {
        let c_k = self.invert_strike(strike)?;
        let a = self.poly.coeffs();
        let m = hermite_moments(c_k, a.len() - 1);
        let sum: f64 = a.iter().zip(m.values.iter()).map(|(ak, v)| ak * v).sum();
        Ok(sum - strike * m.get(0))
    }

    // Strike coordinate on the lognormal driver. When the strike falls at or
    // below g(0) the coordinate does not exist; the smallest positive normal
    // stands in for the driver value, which makes the price the zero-strike
    // limit.
    fn lognormal_strike_coord(&self, strike: f64, sigma_x: f64) -> Result<f64> {
        if strike <= self.poly.eval(0.0) {
            return Ok(f64::MIN_POSITIVE.ln() / sigma_x);
        }
        let u = self
            .poly
            .invert(strike, 1.0)
            .map_err(|e| Error::InversionFailure(format!("strike {strike}: {e}")))?;
        if u <= 0.0 {
            return Ok(f64::MIN_POSITIVE.ln() / sigma_x);
        }
        Ok(u.ln() / sigma_x)
    }

    fn lognormal_poly_call(&self, strike: f64, sigma_x: f64, c_k: f64) -> f64 {
        let mut sum = 0.0;
        for (k, ak) in self.poly.coeffs().iter().enumerate() {
            let ks = k as f64 * sigma_x;
            sum += ak * (0.5 * ks * ks).exp() * norm_cdf(ks - c_k);
        }
        sum - strike * norm_cdf(-c_k)
    }

    fn lognormal_poly_density(&self, strike: f64, sigma_x: f64) -> Result<f64> {
        let u = self
            .poly
            .invert(strike, 1.0)
            .map_err(|e| Error::InversionFailure(format!("strike {strike}: {e}")))?;
        if u <= 0.0 {
            return Ok(0.0);
        }
        let c_k = u.ln() / sigma_x;
        Ok(norm_pdf(c_k) / (sigma_x * u * self.poly.derivative_at(u)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::poly::Domain;

    fn bachelier_slice(forward: f64) -> CollocationSlice {
        let poly = MonotonicPolynomial::new(vec![forward, 1.0], Domain::RealLine).unwrap();
        CollocationSlice::with_implied_forward(1.0, poly, BoundarySpec::None).unwrap()
    }

    #[test]
    fn degree_one_is_unit_bachelier() {
        let s = bachelier_slice(100.0);
        for k in [95.0f64, 100.0, 103.5] {
            let c = s.price_call(k).unwrap();
            let d = 100.0 - k;
            let expected = norm_pdf(k - 100.0) + d * norm_cdf(d);
            assert!((c - expected).abs() < 1e-13, "K={k}: {c} vs {expected}");
        }
    }

    #[test]
    fn parity_holds_exactly() {
        let s = bachelier_slice(100.0);
        let k = 97.3;
        let c = s.price_call(k).unwrap();
        let p = s.price_put(k).unwrap();
        assert!((c - p - s.forward + k).abs() < 1e-12 * s.forward);
        let atm_c = s.price_call(s.forward).unwrap();
        let atm_p = s.price_put(s.forward).unwrap();
        assert!((atm_c - atm_p).abs() < 1e-12 * s.forward);
    }

    #[test]
    fn survival_at_forward_is_half_for_symmetric_map() {
        let s = bachelier_slice(100.0);
        assert!((s.survival(100.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn absorption_probability_at_median_boundary() {
        let poly = MonotonicPolynomial::new(vec![50.0, 10.0], Domain::RealLine).unwrap();
        // level = g(0) = 50 makes c_L = 0
        let s = CollocationSlice::with_implied_forward(
            1.0,
            poly.clone(),
            BoundarySpec::Absorption { level: 50.0 },
        )
        .unwrap();
        assert!((s.absorption_probability().unwrap() - 0.5).abs() < 1e-13);
        let s2 = CollocationSlice::with_implied_forward(
            1.0,
            poly,
            BoundarySpec::ReflectedAbsorption { level: 50.0 },
        )
        .unwrap();
        assert!((s2.absorption_probability().unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_strike_call_equals_forward() {
        let poly = MonotonicPolynomial::new(vec![50.0, 10.0, 0.0, 0.2], Domain::RealLine).unwrap();
        let ext = fit_extrapolation(&poly, -1.5, Some(2.0)).unwrap();
        let s = CollocationSlice::with_implied_forward(
            0.7,
            poly,
            BoundarySpec::ExpExtrapolation {
                x_cut: -1.5,
                alpha: ext.alpha,
                beta: ext.beta,
                cap: Some(2.0),
            },
        )
        .unwrap();
        let c0 = s.price_call(0.0).unwrap();
        assert!((c0 - s.forward).abs() < 1e-9 * s.forward);
        // put at zero strike is worthless for a positive asset
        assert!(s.price_put(0.0).unwrap().abs() < 1e-9 * s.forward);
    }

    #[test]
    fn extrapolation_fit_examples() {
        let p = MonotonicPolynomial::new(vec![1.0, 1.0], Domain::RealLine).unwrap();
        let e = fit_extrapolation(&p, 0.0, None).unwrap();
        assert!((e.alpha - 1.0).abs() < 1e-15);
        assert!(e.beta.abs() < 1e-15);

        // Steep slope hits the cap.
        let steep = MonotonicPolynomial::new(vec![0.5, 6.7], Domain::RealLine).unwrap();
        let e = fit_extrapolation(&steep, 0.0, Some(2.0)).unwrap();
        assert_eq!(e.alpha, 2.0);
        // Continuity must hold even with an active cap.
        let at_cut = (e.alpha * 0.0 + e.beta).exp();
        assert!((at_cut - steep.eval(0.0)).abs() < 1e-12 * at_cut);
    }

    #[test]
    fn reflection_below_level_unsupported() {
        let poly = MonotonicPolynomial::new(vec![50.0, 10.0], Domain::RealLine).unwrap();
        let s = CollocationSlice::with_implied_forward(
            1.0,
            poly,
            BoundarySpec::Reflection { level: 20.0 },
        )
        .unwrap();
        assert!(matches!(
            s.price_call(10.0),
            Err(Error::UnsupportedStrike { .. })
        ));
        assert!(s.price_call(25.0).is_ok());
    }
}
