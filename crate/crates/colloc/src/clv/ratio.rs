//! Closed-form conditional expectations of forward performances and their
//! calibration to deterministic forward ratios.
//!
//! With X_i = v and X_j = rho v + rhobar u (rhobar = sqrt(1 - rho^2)), the
//! ratio expectation is
//!
//! ```text
//! E[S_j / S_i] = int phi(v) / S_i(v) * E[S_j | v] dv
//! ```
//!
//! where the inner expectation over u has a closed form for every variant:
//! the polynomial part expands binomially against truncated moments
//! m_l((cut - rho v)/rhobar) and the exponential tail contributes
//! exp(beta + alpha rho v + alpha^2 rhobar^2 / 2) Phi(c(v) - alpha rhobar).
//! The outer integral runs through adaptive Gauss-Lobatto on [-8, 8].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::gauss::{norm_cdf, norm_pdf};
use crate::math::lm::{levenberg_marquardt, require_convergence, LmOptions};
use crate::math::lobatto::adaptive_lobatto_checked;
use crate::math::moments::{full_gaussian_moment, hermite_moments};
use crate::math::roots::brent;
use crate::slice::{BoundarySpec, CollocationSlice};

use super::{wiener_autocorrelation, ClvModel};

const OUTER_BOUND: f64 = 8.0;
const OUTER_TOL: f64 = 1e-9;
/// Denominators below this fraction of the forward abort the quadrature.
const SINGULAR_FRACTION: f64 = 1e-12;

/// Inner-expectation context for the numerator slice at fixed rho.
struct Inner<'a> {
    coeffs: &'a [f64],
    rho: f64,
    rhobar: f64,
    binom: Vec<Vec<f64>>,
    rhobar_pow: Vec<f64>,
    kind: InnerKind,
}

enum InnerKind {
    PlainPoly,
    Floor { level: f64, cut: f64 },
    Reflect { level: f64, cut: f64 },
    ExpTail { alpha: f64, beta: f64, cut: f64 },
    Lognormal { sigma_x: f64, tail: Option<(f64, f64, f64)> }, // (c_cut, alpha, beta)
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for k in 0..=n {
        t[k][0] = 1.0;
        for l in 1..=k {
            t[k][l] = t[k - 1][l - 1] + if l <= k - 1 { t[k - 1][l] } else { 0.0 };
        }
    }
    t
}

impl<'a> Inner<'a> {
    fn new(slice: &'a CollocationSlice, rho: f64) -> Result<Self> {
        let coeffs = slice.poly.coeffs();
        let n = coeffs.len() - 1;
        let rhobar = (1.0 - rho * rho).max(0.0).sqrt();
        let kind = match &slice.boundary {
            BoundarySpec::None => InnerKind::PlainPoly,
            BoundarySpec::Absorption { level } => InnerKind::Floor {
                level: *level,
                cut: slice.poly.invert(*level, -1.0)?,
            },
            BoundarySpec::Reflection { level } => InnerKind::Reflect {
                level: *level,
                cut: slice.poly.invert(*level, -1.0)?,
            },
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => InnerKind::ExpTail {
                alpha: *alpha,
                beta: *beta,
                cut: *x_cut,
            },
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => InnerKind::Lognormal {
                sigma_x: *sigma_x,
                tail: extrapolation.as_ref().map(|t| (t.c_cut, t.alpha, t.beta)),
            },
            BoundarySpec::ReflectedAbsorption { .. } => {
                return Err(Error::UnsupportedVariant {
                    op: "forward-ratio expectation",
                    variant: "reflected_absorption",
                })
            }
        };
        let mut rhobar_pow = vec![1.0; n + 1];
        for l in 1..=n {
            rhobar_pow[l] = rhobar_pow[l - 1] * rhobar;
        }
        Ok(Self {
            coeffs,
            rho,
            rhobar,
            binom: binomial_table(n),
            rhobar_pow,
            kind,
        })
    }

    /// sum_k a_k sum_l C(k,l) rhobar^l (rho v)^{k-l} m_l, with m the supplied
    /// moment sequence.
    fn poly_piece(&self, v: f64, m: &[f64]) -> f64 {
        let n = self.coeffs.len() - 1;
        let rv = self.rho * v;
        let mut rv_pow = vec![1.0; n + 1];
        for k in 1..=n {
            rv_pow[k] = rv_pow[k - 1] * rv;
        }
        let mut total = 0.0;
        for (k, &ak) in self.coeffs.iter().enumerate() {
            if ak == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for l in 0..=k {
                s += self.binom[k][l] * self.rhobar_pow[l] * rv_pow[k - l] * m[l];
            }
            total += ak * s;
        }
        total
    }

    fn full_moments(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(full_gaussian_moment).collect()
    }

    /// E[S_j | X_i = v].
    fn expect(&self, v: f64) -> f64 {
        let n = self.coeffs.len() - 1;
        match &self.kind {
            InnerKind::PlainPoly => self.poly_piece(v, &self.full_moments()),
            InnerKind::Floor { level, cut } => {
                let c = (cut - self.rho * v) / self.rhobar;
                let m = hermite_moments(c, n);
                level * norm_cdf(c) + self.poly_piece(v, &m.values)
            }
            InnerKind::Reflect { level, cut } => {
                let c = (cut - self.rho * v) / self.rhobar;
                let m = hermite_moments(c, n);
                2.0 * level * norm_cdf(c) + 2.0 * self.poly_piece(v, &m.values)
                    - self.poly_piece(v, &self.full_moments())
            }
            InnerKind::ExpTail { alpha, beta, cut } => {
                let c = (cut - self.rho * v) / self.rhobar;
                let m = hermite_moments(c, n);
                let ab = alpha * self.rhobar;
                let tail =
                    (beta + alpha * self.rho * v + 0.5 * ab * ab).exp() * norm_cdf(c - ab);
                tail + self.poly_piece(v, &m.values)
            }
            InnerKind::Lognormal { sigma_x, tail } => match tail {
                None => {
                    let mut s = 0.0;
                    for (k, &ak) in self.coeffs.iter().enumerate() {
                        let ks = k as f64 * sigma_x;
                        s += ak
                            * (ks * self.rho * v + 0.5 * (ks * self.rhobar).powi(2)).exp();
                    }
                    s
                }
                Some((c_cut, alpha, beta)) => {
                    let c = (c_cut - self.rho * v) / self.rhobar;
                    let ab = alpha * self.rhobar;
                    let mut s = (beta + alpha * self.rho * v + 0.5 * ab * ab).exp()
                        * norm_cdf(c - ab);
                    for (k, &ak) in self.coeffs.iter().enumerate() {
                        let ks = k as f64 * sigma_x;
                        s += ak
                            * (ks * self.rho * v + 0.5 * (ks * self.rhobar).powi(2)).exp()
                            * norm_cdf(ks * self.rhobar - c);
                    }
                    s
                }
            },
        }
    }
}

fn ratio_integral(
    s_i: &CollocationSlice,
    s_j: &CollocationSlice,
    rho: f64,
    lower: f64,
) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!(
            "autocorrelation must lie in (0, 1], got {rho}"
        )));
    }
    let den_map = s_i.driver_map()?;
    let threshold = SINGULAR_FRACTION * s_i.forward;
    let lo = lower.max(-OUTER_BOUND);
    if lo >= OUTER_BOUND {
        return Ok(0.0);
    }
    let denominator = |v: f64| -> Result<f64> {
        let den = den_map.apply(v);
        if den < threshold {
            return Err(Error::NearSingularDenominator {
                value: den,
                threshold,
            });
        }
        Ok(den)
    };
    if rho >= 1.0 - 1e-10 {
        // Degenerate correlation: the drivers coincide.
        let num_map = s_j.driver_map()?;
        let f = |v: f64| -> Result<f64> { Ok(norm_pdf(v) * num_map.apply(v) / denominator(v)?) };
        return adaptive_lobatto_checked(&f, lo, OUTER_BOUND, OUTER_TOL);
    }
    let inner = Inner::new(s_j, rho)?;
    let f = |v: f64| -> Result<f64> { Ok(norm_pdf(v) * inner.expect(v) / denominator(v)?) };
    adaptive_lobatto_checked(&f, lo, OUTER_BOUND, OUTER_TOL)
}

/// E[S_j / S_i] under driver autocorrelation `rho`.
pub fn expected_forward_ratio(
    s_i: &CollocationSlice,
    s_j: &CollocationSlice,
    rho: f64,
) -> Result<f64> {
    ratio_integral(s_i, s_j, rho, -OUTER_BOUND)
}

/// E[(S_j / S_i) 1{S_i > B}].
pub fn expected_barrier_ratio(
    s_i: &CollocationSlice,
    s_j: &CollocationSlice,
    rho: f64,
    barrier: f64,
) -> Result<f64> {
    if !(barrier >= 0.0) || !barrier.is_finite() {
        return Err(Error::BarrierBelowCutoff(format!(
            "barrier must be nonnegative and finite, got {barrier}"
        )));
    }
    match s_i.strike_driver_coord(barrier)? {
        None => expected_forward_ratio(s_i, s_j, rho),
        Some(c_b) => ratio_integral(s_i, s_j, rho, c_b),
    }
}

/// P(S_i > B) = Phi(-c_B).
pub fn barrier_probability(s_i: &CollocationSlice, barrier: f64) -> Result<f64> {
    if !(barrier >= 0.0) || !barrier.is_finite() {
        return Err(Error::BarrierBelowCutoff(format!(
            "barrier must be nonnegative and finite, got {barrier}"
        )));
    }
    match s_i.strike_driver_coord(barrier)? {
        None => Ok(1.0),
        Some(c_b) => Ok(norm_cdf(-c_b)),
    }
}

/// Result of the pairwise autocorrelation calibration.
#[derive(Debug, Clone)]
pub struct AutocorrCalibration {
    /// Symmetric matrix of calibrated autocorrelations, unit diagonal.
    pub rho: DMatrix<f64>,
    /// Residual of the ratio equation per pair (i, j).
    pub residuals: Vec<(usize, usize, f64)>,
    /// Pairs where no root existed in (0,1); these fell back to Wiener.
    pub fallbacks: Vec<(usize, usize)>,
}

/// Solve rho_{i,j} so each pairwise expected ratio equals the deterministic
/// forward ratio. Pairs without a root fall back to the Wiener value and are
/// flagged.
pub fn calibrate_autocorrelations(model: &ClvModel) -> Result<AutocorrCalibration> {
    let slices = model.slices();
    let m = slices.len();
    for s in slices {
        if !s.boundary.strictly_positive() {
            return Err(Error::UnsupportedVariant {
                op: "autocorrelation calibration",
                variant: s.boundary.name(),
            });
        }
    }
    let mut rho = DMatrix::identity(m, m);
    let mut residuals = Vec::new();
    let mut fallbacks = Vec::new();
    for j in 0..m {
        for i in 0..j {
            let target = slices[j].forward / slices[i].forward;
            let wiener = wiener_autocorrelation(slices[i].t, slices[j].t)?;
            let mut f =
                |r: f64| -> Result<f64> { Ok(expected_forward_ratio(&slices[i], &slices[j], r)? - target) };
            match solve_unit_interval(&mut f, wiener) {
                Some(root) => {
                    let res = f(root).unwrap_or(f64::NAN);
                    if res.abs() <= 1e-8 {
                        rho[(i, j)] = root;
                        rho[(j, i)] = root;
                        residuals.push((i, j, res));
                        continue;
                    }
                    rho[(i, j)] = wiener;
                    rho[(j, i)] = wiener;
                    residuals.push((i, j, res));
                    fallbacks.push((i, j));
                }
                None => {
                    rho[(i, j)] = wiener;
                    rho[(j, i)] = wiener;
                    let res = f(wiener).unwrap_or(f64::NAN);
                    residuals.push((i, j, res));
                    fallbacks.push((i, j));
                }
            }
        }
    }
    Ok(AutocorrCalibration {
        rho,
        residuals,
        fallbacks,
    })
}

// Scan (0,1) for a sign change near the initial guess, then polish by Brent.
fn solve_unit_interval<F>(f: &mut F, guess: f64) -> Option<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut probes: Vec<f64> = vec![
        1e-4, 0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.92, 0.97, 0.99, 0.999,
        0.9999,
    ];
    if guess > 0.0 && guess < 1.0 {
        probes.push(guess);
    }
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values: Vec<Option<f64>> = probes.iter().map(|&r| f(r).ok()).collect();
    let mut best: Option<(f64, f64)> = None;
    for w in 0..probes.len() - 1 {
        if let (Some(a), Some(b)) = (values[w], values[w + 1]) {
            if a == 0.0 {
                return Some(probes[w]);
            }
            if a * b < 0.0 {
                let mid = 0.5 * (probes[w] + probes[w + 1]);
                let dist = (mid - guess).abs();
                if best.map_or(true, |(d, _)| dist < d) {
                    best = Some((dist, probes[w]));
                }
            }
        }
    }
    let (_, lo) = best?;
    let idx = probes.iter().position(|&p| p == lo)?;
    let hi = probes[idx + 1];
    brent(f, lo, hi, 1e-10, 1e-12, 200).ok()
}

/// Result of the piecewise forward-volatility calibration.
#[derive(Debug, Clone)]
pub struct ForwardVolCalibration {
    /// sigma_0..sigma_{m-1}, with sigma_0 = 1 by convention.
    pub vols: Vec<f64>,
    /// Per-pair forward-ratio errors (i, j, e_{i,j}).
    pub errors: Vec<(usize, usize, f64)>,
}

/// Least-squares fit of piecewise-constant driver volatilities to all
/// pairwise deterministic forward ratios.
pub fn calibrate_forward_vols(model: &ClvModel) -> Result<ForwardVolCalibration> {
    let slices = model.slices();
    let m = slices.len();
    if m < 2 {
        return Err(Error::InvalidInput(
            "forward-volatility calibration needs at least two slices".into(),
        ));
    }
    for s in slices {
        if !s.boundary.strictly_positive() {
            return Err(Error::UnsupportedVariant {
                op: "forward-volatility calibration",
                variant: s.boundary.name(),
            });
        }
    }
    let times = model.times();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .collect();
    let targets: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| slices[j].forward / slices[i].forward)
        .collect();

    let ratios_for = |vols: &[f64]| -> Result<Vec<f64>> {
        let cum = super::cumulative_variances(&times, vols)?;
        pairs
            .iter()
            .map(|&(i, j)| {
                let rho = (cum[i] / cum[j]).sqrt();
                expected_forward_ratio(&slices[i], &slices[j], rho)
            })
            .collect()
    };

    // Optimize over log-volatilities to keep them positive.
    let mut residuals = |u: &[f64]| -> Result<Vec<f64>> {
        let mut vols = vec![1.0; m];
        for (k, &uk) in u.iter().enumerate() {
            vols[k + 1] = uk.exp();
        }
        let r = ratios_for(&vols)?;
        Ok(r
            .iter()
            .zip(targets.iter())
            .map(|(a, b)| a - b)
            .collect())
    };
    let outcome = levenberg_marquardt(
        &mut residuals,
        &vec![0.0; m - 1],
        &LmOptions {
            max_iterations: 100,
            ..LmOptions::default()
        },
    )?;
    require_convergence(&outcome)?;
    let mut vols = vec![1.0; m];
    for (k, &uk) in outcome.params.iter().enumerate() {
        vols[k + 1] = uk.exp();
    }
    let achieved = ratios_for(&vols)?;
    let errors = pairs
        .iter()
        .zip(achieved.iter().zip(targets.iter()))
        .map(|(&(i, j), (a, b))| (i, j, a - b))
        .collect();
    Ok(ForwardVolCalibration { vols, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::poly::{Domain, MonotonicPolynomial};

    fn simple_slice(scale: f64, t: f64) -> CollocationSlice {
        let poly = MonotonicPolynomial::new(
            vec![100.0 * scale, 10.0 * scale, 0.0, 0.4 * scale],
            Domain::RealLine,
        )
        .unwrap();
        let ext = crate::pricer::fit_extrapolation(&poly, -1.8, Some(2.0)).unwrap();
        CollocationSlice::with_implied_forward(
            t,
            poly,
            BoundarySpec::ExpExtrapolation {
                x_cut: -1.8,
                alpha: ext.alpha,
                beta: ext.beta,
                cap: Some(2.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn identical_slices_full_correlation_give_one() {
        let s = simple_slice(1.0, 0.5);
        let r = expected_forward_ratio(&s, &s, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn proportional_slices_full_correlation_give_scale() {
        let s1 = simple_slice(1.0, 0.5);
        let s2 = simple_slice(1.3, 1.0);
        let r = expected_forward_ratio(&s1, &s2, 1.0).unwrap();
        assert!((r - 1.3).abs() < 1e-9, "{r}");
    }

    #[test]
    fn barrier_at_zero_recovers_plain_ratio() {
        let s1 = simple_slice(1.0, 0.5);
        let s2 = simple_slice(1.1, 1.0);
        let plain = expected_forward_ratio(&s1, &s2, 0.7).unwrap();
        let barred = expected_barrier_ratio(&s1, &s2, 0.7, 0.0).unwrap();
        assert!((plain - barred).abs() < 1e-9);
        assert!((barrier_probability(&s1, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_probability_at_driver_median() {
        let s = simple_slice(1.0, 0.5);
        let b = s.poly.eval(0.0);
        let p = barrier_probability(&s, b).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "{p}");
    }
}
