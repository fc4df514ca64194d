//! Slice calibration: survival extraction from quotes, initial isotonic
//! guess, and damped least squares with the first moment enforced exactly at
//! every objective evaluation.

pub mod isotonic;

use chrono::NaiveDate;

use crate::black::{black_call, black_vega, implied_vol};
use crate::error::{Error, Result};
use crate::math::gauss::inv_norm_cdf;
use crate::math::lm::{levenberg_marquardt, require_convergence, LmOptions};
use crate::math::poly::{antiderivative, Domain, MonotonicPolynomial};
use crate::math::roots::{brent, expand_bracket, golden_section_min};
use crate::pricer::{fit_extrapolation, fit_lognormal_tail};
use crate::slice::{BoundarySpec, CollocationSlice};

pub use isotonic::{isotonic_to_coeffs, IsotonicParams};

/// One market quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub strike: f64,
    pub vol: f64,
    pub weight: f64,
}

/// Market input for one expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSlice {
    pub expiry: Option<NaiveDate>,
    /// Year fraction to expiry (ACT/365).
    pub t: f64,
    pub forward: f64,
    /// Quotes with strictly increasing strikes.
    pub quotes: Vec<Quote>,
}

impl QuoteSlice {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !(self.forward > 0.0) {
            return Err(Error::InvalidInput(format!(
                "quote slice needs positive expiry and forward, got t={} F={}",
                self.t, self.forward
            )));
        }
        if self.quotes.len() < 2 {
            return Err(Error::DegenerateQuotes(format!(
                "{} quotes, need at least 2",
                self.quotes.len()
            )));
        }
        for w in self.quotes.windows(2) {
            if !(w[1].strike > w[0].strike) {
                return Err(Error::InvalidInput(format!(
                    "strikes must be strictly increasing, got {} then {}",
                    w[0].strike, w[1].strike
                )));
            }
        }
        for q in &self.quotes {
            if !(q.strike > 0.0) || !(q.vol > 0.0) || !(q.weight >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "bad quote: strike={} vol={} weight={}",
                    q.strike, q.vol, q.weight
                )));
            }
        }
        Ok(())
    }
}

/// Which boundary treatment to calibrate.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantConfig {
    None,
    Absorption { level: f64 },
    ReflectedAbsorption { level: f64 },
    Reflection { level: f64 },
    ExpExtrapolation,
    Lognormal {
        /// Force a_0 = 0 so the asset can reach every positive value; the
        /// coefficients are then rescaled to conserve the forward.
        zero_intercept: bool,
        extrapolation: bool,
    },
}

impl VariantConfig {
    fn domain(&self) -> Domain {
        match self {
            VariantConfig::Lognormal { .. } => Domain::NonNegative,
            _ => Domain::RealLine,
        }
    }
}

/// Cutoff rule for the extrapolation strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffRule {
    /// The lowest quoted strike.
    LowestQuotedStrike,
    FixedStrike(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaXMode {
    Fixed(f64),
    /// sigma_X = min_i sigma_i * sqrt(t)
    MinTotalVol,
    /// One-dimensional search over sigma_X around the inner coefficient fit.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// Residuals scaled by 1/vega: a price-space objective that approximates
    /// the implied-volatility RMSE.
    Vega,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub degree: usize,
    pub variant: VariantConfig,
    pub cutoff: CutoffRule,
    pub alpha_cap: Option<f64>,
    pub sigma_x: SigmaXMode,
    pub weights: WeightScheme,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            degree: 5,
            variant: VariantConfig::None,
            cutoff: CutoffRule::LowestQuotedStrike,
            alpha_cap: Some(2.0),
            sigma_x: SigmaXMode::MinTotalVol,
            weights: WeightScheme::Vega,
            max_iterations: 200,
            tolerance: 1e-14,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 || self.degree > crate::math::poly::MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "degree {} outside supported range",
                self.degree
            )));
        }
        if self.degree % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "degree must be odd for a monotone bijection, got {}",
                self.degree
            )));
        }
        if let Some(cap) = self.alpha_cap {
            if !(cap > 0.0) {
                return Err(Error::InvalidInput(format!("alpha cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }
}

/// Calibration diagnostics returned next to the slice.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    /// Root mean square error in implied volatilities against the quotes.
    pub rmse_vol: f64,
    pub iterations: usize,
    /// Final value of the weighted least squares objective.
    pub objective: f64,
    /// |first_moment - forward| / forward of the returned slice.
    pub martingale_residual: f64,
    /// Lognormal driver volatility actually used, when applicable.
    pub sigma_x: Option<f64>,
}

/// Survival probabilities at the quoted strikes.
///
/// The digital is taken as a central finite difference of Black prices with
/// the quoted vol held flat across the bump, then projected onto a
/// non-increasing sequence by pool-adjacent-violators.
pub fn survival_from_quotes(q: &QuoteSlice) -> Result<Vec<(f64, f64)>> {
    q.validate()?;
    let n = q.quotes.len();
    let mut out = Vec::with_capacity(n);
    for (i, quote) in q.quotes.iter().enumerate() {
        let gap_left = if i > 0 {
            quote.strike - q.quotes[i - 1].strike
        } else {
            f64::INFINITY
        };
        let gap_right = if i + 1 < n {
            q.quotes[i + 1].strike - quote.strike
        } else {
            f64::INFINITY
        };
        let h = (1e-4 * q.forward).min(gap_left.min(gap_right) / 10.0);
        let up = black_call(q.forward, quote.strike - h, quote.vol, q.t);
        let dn = black_call(q.forward, quote.strike + h, quote.vol, q.t);
        let p = ((up - dn) / (2.0 * h)).clamp(1e-12, 1.0 - 1e-12);
        out.push((quote.strike, p));
    }
    let mut probs: Vec<f64> = out.iter().map(|(_, p)| *p).collect();
    pava_non_increasing(&mut probs);
    for ((_, p), v) in out.iter_mut().zip(probs.into_iter()) {
        *p = v.clamp(1e-12, 1.0 - 1e-12);
    }
    Ok(out)
}

/// Pool-adjacent-violators projection onto non-increasing sequences
/// (least squares with unit weights).
fn pava_non_increasing(values: &mut [f64]) {
    let n = values.len();
    // Block representation: (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 >= last.0 {
                break;
            }
            let merged = (
                (prev.0 * prev.1 as f64 + last.0 * last.1 as f64) / (prev.1 + last.1) as f64,
                prev.1 + last.1,
            );
            blocks.pop();
            blocks.pop();
            blocks.push(merged);
        }
    }
    let mut idx = 0;
    for (mean, count) in blocks {
        for _ in 0..count {
            values[idx] = mean;
            idx += 1;
        }
    }
}

fn resolve_sigma_x(q: &QuoteSlice, mode: SigmaXMode) -> f64 {
    match mode {
        SigmaXMode::Fixed(v) => v,
        SigmaXMode::MinTotalVol | SigmaXMode::Optimized => {
            let min_vol = q
                .quotes
                .iter()
                .map(|quote| quote.vol)
                .fold(f64::INFINITY, f64::min);
            min_vol * q.t.sqrt()
        }
    }
}

/// Least-squares polynomial through the survival-implied driver coordinates,
/// projected onto the isotonic parameterization.
pub fn initial_guess(q: &QuoteSlice, cfg: &CalibrationConfig) -> Result<MonotonicPolynomial> {
    let (params, a0) = initial_params(q, cfg, resolve_sigma_x(q, cfg.sigma_x))?;
    Ok(isotonic_to_coeffs(&params, a0))
}

fn initial_params(
    q: &QuoteSlice,
    cfg: &CalibrationConfig,
    sigma_x: f64,
) -> Result<(IsotonicParams, f64)> {
    cfg.validate()?;
    let survival = survival_from_quotes(q)?;
    let n = cfg.degree;
    if survival.len() < n + 1 {
        return Err(Error::DegenerateQuotes(format!(
            "{} quotes cannot pin a degree-{} map",
            survival.len(),
            n
        )));
    }
    let domain = cfg.variant.domain();
    let xs: Vec<f64> = survival
        .iter()
        .map(|(_, p)| {
            let z = inv_norm_cdf(1.0 - p);
            match domain {
                Domain::RealLine => z,
                Domain::NonNegative => (sigma_x * z).exp(),
            }
        })
        .collect();
    let ys: Vec<f64> = survival.iter().map(|(k, _)| *k).collect();
    let fit = polyfit(&xs, &ys, n)?;
    let deriv = crate::math::poly::derivative(&fit);
    let params = IsotonicParams::from_derivative(&deriv, domain)?;
    Ok((params, fit[0]))
}

/// Unweighted least-squares polynomial fit in ascending powers.
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let m = xs.len();
    let mut a = DMatrix::<f64>::zeros(m, degree + 1);
    for (i, &x) in xs.iter().enumerate() {
        let mut pow = 1.0;
        for j in 0..=degree {
            a[(i, j)] = pow;
            pow *= x;
        }
    }
    let rhs = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

// Martingale enforcement: rebuild a full slice from isotonic parameters with
// a_0 implied from the forward, per variant.
fn build_slice(
    params: &IsotonicParams,
    sigma_x: f64,
    q: &QuoteSlice,
    cfg: &CalibrationConfig,
) -> Result<CollocationSlice> {
    let deriv = params.derivative_coeffs();
    let base = antiderivative(&deriv, 0.0);
    let forward = q.forward;
    let t = q.t;
    let cutoff_strike = match cfg.cutoff {
        CutoffRule::LowestQuotedStrike => q.quotes.first().map(|qt| qt.strike).unwrap_or(0.0),
        CutoffRule::FixedStrike(k) => k,
    };

    let make = |coeffs: Vec<f64>, boundary: BoundarySpec| CollocationSlice {
        t,
        forward,
        poly: MonotonicPolynomial::new_unchecked(coeffs, params.domain()),
        boundary,
    };

    match &cfg.variant {
        VariantConfig::None => {
            let fm0 = trial_first_moment(&base, &BoundarySpec::None, params.domain())?;
            let a0 = forward - fm0;
            let mut coeffs = base;
            coeffs[0] = a0;
            Ok(make(coeffs, BoundarySpec::None))
        }
        VariantConfig::ReflectedAbsorption { level } => {
            let boundary = BoundarySpec::ReflectedAbsorption { level: *level };
            let fm0 = trial_first_moment(&base, &BoundarySpec::None, params.domain())?;
            let a0 = forward - fm0;
            let mut coeffs = base;
            coeffs[0] = a0;
            Ok(make(coeffs, boundary))
        }
        VariantConfig::Absorption { level } => {
            let lv = *level;
            solve_a0(&base, forward, t, params.domain(), move |c| {
                Ok((c.to_vec(), BoundarySpec::Absorption { level: lv }))
            })
        }
        VariantConfig::Reflection { level } => {
            let lv = *level;
            solve_a0(&base, forward, t, params.domain(), move |c| {
                Ok((c.to_vec(), BoundarySpec::Reflection { level: lv }))
            })
        }
        VariantConfig::ExpExtrapolation => {
            let cap = cfg.alpha_cap;
            solve_a0(&base, forward, t, params.domain(), move |c| {
                let poly = MonotonicPolynomial::new_unchecked(c.to_vec(), Domain::RealLine);
                let x_cut = poly
                    .invert(cutoff_strike, -1.0)
                    .map_err(|e| Error::InversionFailure(format!("cutoff: {e}")))?;
                let ext = fit_extrapolation(&poly, x_cut, cap)?;
                Ok((
                    c.to_vec(),
                    BoundarySpec::ExpExtrapolation {
                        x_cut,
                        alpha: ext.alpha,
                        beta: ext.beta,
                        cap,
                    },
                ))
            })
        }
        VariantConfig::Lognormal {
            zero_intercept,
            extrapolation,
        } => {
            if *extrapolation {
                let cap = cfg.alpha_cap;
                let boundary = BoundarySpec::Lognormal {
                    sigma_x,
                    extrapolation: Option::None,
                };
                let theo_tail = trial_first_moment(&base, &boundary, params.domain())?;
                let hi = cutoff_strike - 1e-9 * forward.max(cutoff_strike);
                let start = (forward - theo_tail).min(hi);
                return solve_a0_bounded(
                    &base,
                    forward,
                    t,
                    params.domain(),
                    start,
                    f64::NEG_INFINITY,
                    hi,
                    move |c| {
                        let poly =
                            MonotonicPolynomial::new_unchecked(c.to_vec(), Domain::NonNegative);
                        let u = poly
                            .invert(cutoff_strike, 1.0)
                            .map_err(|e| Error::InversionFailure(format!("cutoff: {e}")))?;
                        if u <= 0.0 {
                            return Err(Error::NonPositiveAtCutoff { value: u });
                        }
                        let c_cut = u.ln() / sigma_x;
                        let tail = fit_lognormal_tail(&poly, sigma_x, c_cut, cap)?;
                        Ok((
                            c.to_vec(),
                            BoundarySpec::Lognormal {
                                sigma_x,
                                extrapolation: Some(tail),
                            },
                        ))
                    },
                );
            }
            let boundary = BoundarySpec::Lognormal {
                sigma_x,
                extrapolation: Option::None,
            };
            let theo_tail = trial_first_moment(&base, &boundary, params.domain())?;
            if *zero_intercept {
                // Scale the coefficients onto the forward; a_0 stays zero and
                // the derivative stays nonnegative.
                if !(theo_tail > 0.0) {
                    return Err(Error::InfeasibleMartingale(format!(
                        "theoretical forward {theo_tail} not positive"
                    )));
                }
                let lambda = forward / theo_tail;
                let coeffs: Vec<f64> = base.iter().map(|c| c * lambda).collect();
                Ok(make(coeffs, boundary))
            } else {
                let a0 = forward - theo_tail;
                if a0 < 0.0 {
                    return Err(Error::InfeasibleMartingale(format!(
                        "implied a_0 = {a0} would make the asset negative"
                    )));
                }
                let mut coeffs = base;
                coeffs[0] = a0;
                Ok(make(coeffs, boundary))
            }
        }
    }
}

/// First moment of coefficient vector `coeffs` under `boundary`, without the
/// slice-level validation.
fn trial_first_moment(coeffs: &[f64], boundary: &BoundarySpec, domain: Domain) -> Result<f64> {
    let slice = CollocationSlice {
        t: 1.0,
        forward: 1.0,
        poly: MonotonicPolynomial::new_unchecked(coeffs.to_vec(), domain),
        boundary: boundary.clone(),
    };
    slice.first_moment()
}

fn solve_a0<Fb>(
    base: &[f64],
    forward: f64,
    t: f64,
    domain: Domain,
    boundary_of: Fb,
) -> Result<CollocationSlice>
where
    Fb: Fn(&[f64]) -> Result<(Vec<f64>, BoundarySpec)>,
{
    // The unconstrained (whole real line) moment gives the starting point.
    let start = forward - trial_first_moment(base, &BoundarySpec::None, Domain::RealLine)?;
    solve_a0_bounded(
        base,
        forward,
        t,
        domain,
        start,
        f64::NEG_INFINITY,
        f64::INFINITY,
        boundary_of,
    )
}

#[allow(clippy::too_many_arguments)]
fn solve_a0_bounded<Fb>(
    base: &[f64],
    forward: f64,
    t: f64,
    domain: Domain,
    start: f64,
    lo: f64,
    hi: f64,
    boundary_of: Fb,
) -> Result<CollocationSlice>
where
    Fb: Fn(&[f64]) -> Result<(Vec<f64>, BoundarySpec)>,
{
    let start = start.clamp(
        if lo.is_finite() { lo } else { start - 1e6 },
        if hi.is_finite() { hi } else { start + 1e6 },
    );
    let mut eval = |a0: f64| -> Result<f64> {
        let mut coeffs = base.to_vec();
        coeffs[0] = a0;
        let (coeffs, boundary) = boundary_of(&coeffs)?;
        Ok(trial_first_moment(&coeffs, &boundary, domain)? - forward)
    };
    let step = 0.05 * forward.max(1.0);
    let (bl, bh) = expand_bracket(&mut eval, start, step, lo, hi, 60)?;
    let a0 = if bl == bh {
        bl
    } else {
        brent(&mut eval, bl, bh, 1e-12 * forward, 1e-13 * (1.0 + start.abs()), 200)?
    };
    let mut coeffs = base.to_vec();
    coeffs[0] = a0;
    let (coeffs, boundary) = boundary_of(&coeffs)?;
    Ok(CollocationSlice {
        t,
        forward,
        poly: MonotonicPolynomial::new_unchecked(coeffs, domain),
        boundary,
    })
}

/// Calibrate one expiry. Returns the slice together with diagnostics.
pub fn calibrate_slice(
    q: &QuoteSlice,
    cfg: &CalibrationConfig,
) -> Result<(CollocationSlice, CalibrationReport)> {
    q.validate()?;
    cfg.validate()?;
    let is_lognormal = matches!(cfg.variant, VariantConfig::Lognormal { .. });
    if is_lognormal && cfg.sigma_x == SigmaXMode::Optimized {
        let base_sigma = resolve_sigma_x(q, SigmaXMode::MinTotalVol);
        let lo = 0.01f64;
        let hi = (2.0 * base_sigma).max(lo * 2.0);
        let mut best: Option<(f64, CollocationSlice, CalibrationReport)> = Option::None;
        let mut objective = |sigma: f64| -> Result<f64> {
            match calibrate_fixed_sigma(q, cfg, sigma) {
                Ok((slice, report)) => {
                    let obj = report.objective;
                    if best.as_ref().map_or(true, |(_, _, r)| obj < r.objective) {
                        best = Some((sigma, slice, report));
                    }
                    Ok(obj)
                }
                // An infeasible sigma should not abort the search.
                Err(_) => Ok(f64::MAX),
            }
        };
        golden_section_min(&mut objective, lo, hi, 1e-3, 60)?;
        let (sigma, slice, mut report) =
            best.ok_or_else(|| Error::InvalidInput("no feasible sigma_x".into()))?;
        report.sigma_x = Some(sigma);
        Ok((slice, report))
    } else {
        let sigma = resolve_sigma_x(q, cfg.sigma_x);
        calibrate_fixed_sigma(q, cfg, sigma)
    }
}

fn calibrate_fixed_sigma(
    q: &QuoteSlice,
    cfg: &CalibrationConfig,
    sigma_x: f64,
) -> Result<(CollocationSlice, CalibrationReport)> {
    let is_lognormal = matches!(cfg.variant, VariantConfig::Lognormal { .. });
    let (params0, _) = initial_params(q, cfg, sigma_x)?;
    let market: Vec<f64> = q
        .quotes
        .iter()
        .map(|quote| black_call(q.forward, quote.strike, quote.vol, q.t))
        .collect();
    let vega_floor = 1e-10 * q.forward;
    let multipliers: Vec<f64> = q
        .quotes
        .iter()
        .map(|quote| {
            let scheme = match cfg.weights {
                WeightScheme::Vega => {
                    1.0 / black_vega(q.forward, quote.strike, quote.vol, q.t).max(vega_floor)
                }
                WeightScheme::Uniform => 1.0,
            };
            quote.weight.sqrt() * scheme
        })
        .collect();

    let template = params0.clone();
    let mut residuals = |v: &[f64]| -> Result<Vec<f64>> {
        let params = template.from_vec(v);
        let slice = build_slice(&params, sigma_x, q, cfg)?;
        let mut out = Vec::with_capacity(q.quotes.len());
        for ((quote, mkt), w) in q.quotes.iter().zip(market.iter()).zip(multipliers.iter()) {
            let model = slice.price_call(quote.strike)?;
            out.push(w * (model - mkt));
        }
        Ok(out)
    };

    let opts = LmOptions {
        max_iterations: cfg.max_iterations,
        ftol: cfg.tolerance,
        ..LmOptions::default()
    };
    let outcome = levenberg_marquardt(&mut residuals, &params0.to_vec(), &opts)?;
    require_convergence(&outcome)?;
    let best = template.from_vec(&outcome.params);
    let slice = build_slice(&best, sigma_x, q, cfg)?;

    let fm = slice.first_moment()?;
    let martingale_residual = (fm - q.forward).abs() / q.forward;
    let rmse_vol = rmse_in_vols(&slice, q)?;
    let report = CalibrationReport {
        rmse_vol,
        iterations: outcome.iterations,
        objective: outcome.objective,
        martingale_residual,
        sigma_x: if is_lognormal { Some(sigma_x) } else { Option::None },
    };
    Ok((slice, report))
}

/// Implied-vol RMSE of the slice against its quotes.
pub fn rmse_in_vols(slice: &CollocationSlice, q: &QuoteSlice) -> Result<f64> {
    let mut sum = 0.0;
    for quote in &q.quotes {
        let model = slice.price_call(quote.strike)?;
        let intrinsic = (q.forward - quote.strike).max(0.0);
        let clamped = model
            .max(intrinsic + 1e-14 * q.forward)
            .min(q.forward * (1.0 - 1e-14));
        let iv = implied_vol(clamped, q.forward, quote.strike, q.t, true)?;
        sum += (iv - quote.vol).powi(2);
    }
    Ok((sum / q.quotes.len() as f64).sqrt())
}

/// Quotes implied by pricing a slice on a strike grid; the inverse of
/// calibration, used heavily by round-trip tests and examples.
pub fn quotes_from_slice(
    slice: &CollocationSlice,
    strikes: &[f64],
    weight: f64,
) -> Result<QuoteSlice> {
    let mut quotes = Vec::with_capacity(strikes.len());
    for &k in strikes {
        let price = slice.price_call(k)?;
        let intrinsic = (slice.forward - k).max(0.0);
        let clamped = price
            .max(intrinsic + 1e-14 * slice.forward)
            .min(slice.forward * (1.0 - 1e-14));
        let vol = implied_vol(clamped, slice.forward, k, slice.t, true)?;
        quotes.push(Quote {
            strike: k,
            vol,
            weight,
        });
    }
    Ok(QuoteSlice {
        expiry: Option::None,
        t: slice.t,
        forward: slice.forward,
        quotes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gauss::norm_cdf;

    fn flat_vol_slice() -> QuoteSlice {
        let forward = 100.0;
        let t = 0.5;
        let vol = 0.25;
        let quotes: Vec<Quote> = (0..9)
            .map(|i| Quote {
                strike: 70.0 + 7.5 * i as f64,
                vol,
                weight: 1.0,
            })
            .collect();
        QuoteSlice {
            expiry: Option::None,
            t,
            forward,
            quotes,
        }
    }

    #[test]
    fn survival_matches_black_digital_for_flat_smile() {
        let q = flat_vol_slice();
        let surv = survival_from_quotes(&q).unwrap();
        for (k, p) in surv {
            let stdev = 0.25 * q.t.sqrt();
            let d2 = ((q.forward / k).ln() - 0.5 * stdev * stdev) / stdev;
            assert!((p - norm_cdf(d2)).abs() < 1e-6, "K={k}: {p}");
        }
    }

    #[test]
    fn pava_projects_violations() {
        let mut v = vec![0.9, 0.5, 0.6, 0.2];
        pava_non_increasing(&mut v);
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
        assert!((v[1] - 0.55).abs() < 1e-15 && (v[2] - 0.55).abs() < 1e-15);
        // Already monotone input is untouched.
        let mut w = vec![0.9, 0.5, 0.3];
        pava_non_increasing(&mut w);
        assert_eq!(w, vec![0.9, 0.5, 0.3]);
    }

    #[test]
    fn two_quotes_degree_one_is_exact_interpolation() {
        let q = QuoteSlice {
            expiry: Option::None,
            t: 0.5,
            forward: 100.0,
            quotes: vec![
                Quote {
                    strike: 90.0,
                    vol: 0.3,
                    weight: 1.0,
                },
                Quote {
                    strike: 110.0,
                    vol: 0.28,
                    weight: 1.0,
                },
            ],
        };
        let cfg = CalibrationConfig {
            degree: 1,
            ..CalibrationConfig::default()
        };
        let guess = initial_guess(&q, &cfg).unwrap();
        assert!(guess.coeffs()[1] > 0.0);
        let surv = survival_from_quotes(&q).unwrap();
        for (k, p) in surv {
            let x = inv_norm_cdf(1.0 - p);
            assert!((guess.eval(x) - k).abs() < 1e-6 * k);
        }
    }
}
