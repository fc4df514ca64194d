//! Shared fixtures and independent oracles for the integration tests.
//!
//! The price oracle integrates each variant's defining payoff integral with
//! adaptive Gauss-Lobatto and never touches the closed-form code paths it is
//! used to check.

#![allow(dead_code)]

use colloc::math::{adaptive_lobatto, norm_pdf, Domain, MonotonicPolynomial};
use colloc::pricer::fit_extrapolation;
use colloc::{BoundarySpec, ClvModel, CollocationSlice, Correlation};

/// Quintic collocation coefficients of a single-stock smile calibrated at
/// one-month, seven-month and nineteen-month expiries (ACT/365 from a
/// 2018-06-15 valuation date). The published decimals round the derivative
/// slightly negative far out in the left tail, hence the unchecked
/// constructor.
pub const SAMPLE_QUINTICS: [[f64; 6]; 3] = [
    [356.64, 48.632, 0.842, -0.565, 0.0917, 0.412],
    [362.86, 117.77, -23.49, 3.970, 5.586, 0.729],
    [364.01, 216.74, -72.76, -29.51, 21.83, 7.014],
];

pub const SAMPLE_TIMES: [f64; 3] = [35.0 / 365.0, 217.0 / 365.0, 581.0 / 365.0];

pub fn sample_slice(idx: usize) -> CollocationSlice {
    let poly = MonotonicPolynomial::new_unchecked(SAMPLE_QUINTICS[idx].to_vec(), Domain::RealLine);
    CollocationSlice::with_implied_forward(SAMPLE_TIMES[idx], poly, BoundarySpec::None).unwrap()
}

pub fn sample_model() -> ClvModel {
    ClvModel::new(
        (0..3).map(sample_slice).collect(),
        Correlation::Wiener,
    )
    .unwrap()
}

/// Steeper synthetic three-slice model with capped exponential extrapolation;
/// the widening smiles make the Wiener-correlated forward ratio drift
/// visibly, like an equity smile would.
pub fn capped_extrapolation_model() -> ClvModel {
    let slices: Vec<CollocationSlice> = (0..3).map(capped_extrapolation_slice).collect();
    ClvModel::new(slices, Correlation::Wiener).unwrap()
}

pub fn capped_extrapolation_slice(idx: usize) -> CollocationSlice {
    // Smile width grows faster than sqrt(t), and the cubic term adds skew.
    let widths = [30.0, 95.0, 175.0];
    let cubics = [2.0, 12.0, 30.0];
    let t = SAMPLE_TIMES[idx];
    let poly = MonotonicPolynomial::new(
        vec![357.0, widths[idx], 0.0, cubics[idx]],
        Domain::RealLine,
    )
    .unwrap();
    let x_cut = poly.invert(150.0, -1.0).unwrap();
    let ext = fit_extrapolation(&poly, x_cut, Some(2.0)).unwrap();
    CollocationSlice::with_implied_forward(
        t,
        poly,
        BoundarySpec::ExpExtrapolation {
            x_cut,
            alpha: ext.alpha,
            beta: ext.beta,
            cap: Some(2.0),
        },
    )
    .unwrap()
}

/// Independent call-price oracle: integrate the defining payoff integral of
/// the variant on [-8, 8] in the Gaussian coordinate, absolute tolerance
/// 1e-12 (scaled by the forward).
pub fn quadrature_call_oracle(slice: &CollocationSlice, strike: f64) -> f64 {
    let tol = 1e-12 * slice.forward.max(1.0);
    match &slice.boundary {
        BoundarySpec::ReflectedAbsorption { level } => {
            // Mass 2 Phi(c_L) at the level, mirrored density subtracted above.
            let c_l = slice.poly.invert(*level, -1.0).unwrap();
            let atom = (level - strike).max(0.0)
                * 2.0
                * colloc::math::norm_cdf(c_l.min(8.0));
            let above = adaptive_lobatto(
                &|x: f64| (slice.poly.eval(x) - strike).max(0.0) * norm_pdf(x),
                c_l.max(-8.0),
                8.0,
                tol,
            )
            .unwrap();
            let mirror = adaptive_lobatto(
                &|x: f64| {
                    (2.0 * level - slice.poly.eval(x) - strike).max(0.0) * norm_pdf(x)
                },
                -8.0,
                c_l.min(8.0),
                tol,
            )
            .unwrap();
            atom + above - mirror
        }
        _ => {
            let map = slice.driver_map().unwrap();
            adaptive_lobatto(
                &|x: f64| (map.apply(x) - strike).max(0.0) * norm_pdf(x),
                -8.0,
                8.0,
                tol,
            )
            .unwrap()
        }
    }
}

/// First-moment oracle: expectation of the asset map itself.
pub fn quadrature_moment_oracle(slice: &CollocationSlice) -> f64 {
    quadrature_call_oracle(slice, 0.0)
        + match &slice.boundary {
            BoundarySpec::None => {
                // The zero-strike call misses the negative part of the range.
                let map = slice.driver_map().unwrap();
                adaptive_lobatto(
                    &|x: f64| map.apply(x).min(0.0) * norm_pdf(x),
                    -8.0,
                    8.0,
                    1e-12 * slice.forward.max(1.0),
                )
                .unwrap()
            }
            _ => 0.0,
        }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / n as f64;
        let fb = j as f64 / m as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Small deterministic generator for test data that is not under test.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}
