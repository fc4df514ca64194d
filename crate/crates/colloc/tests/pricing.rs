//! Closed-form pricing against the quadrature oracle, plus the arbitrage
//! and parity invariants every variant has to satisfy.

mod common;

use colloc::math::{
    adaptive_lobatto, eval_poly, hermite_moments, norm_cdf, norm_pdf, Domain, MonotonicPolynomial,
};
use colloc::pricer::{fit_extrapolation, fit_lognormal_tail};
use colloc::{BoundarySpec, CollocationSlice, Error, LognormalTail};
use common::{
    quadrature_call_oracle, quadrature_moment_oracle, sample_slice, TestRng, SAMPLE_QUINTICS,
    SAMPLE_TIMES,
};

fn strikes_for(slice: &CollocationSlice, n: usize, rng: &mut TestRng) -> Vec<f64> {
    // Strikes spanning the bulk of the distribution, floored for positivity
    // variants and away from levels where variants refuse strikes.
    let lo_floor = match &slice.boundary {
        BoundarySpec::Reflection { level } => level * 1.01,
        BoundarySpec::Absorption { level } | BoundarySpec::ReflectedAbsorption { level } => {
            (level * 0.2).max(1e-3)
        }
        _ => 1e-3,
    };
    let map = match &slice.boundary {
        BoundarySpec::ReflectedAbsorption { .. } => None,
        _ => Some(slice.driver_map().unwrap()),
    };
    (0..n)
        .map(|_| {
            let x = rng.uniform(-2.8, 2.8);
            let v = match &map {
                Some(m) => m.apply(x),
                None => slice.poly.eval(x),
            };
            v.max(lo_floor)
        })
        .collect()
}

fn variant_zoo() -> Vec<CollocationSlice> {
    let mut out = Vec::new();
    // The three sample quintics, plain Gaussian collocation.
    for i in 0..3 {
        out.push(sample_slice(i));
    }
    // A strictly monotone quintic for the boundary variants.
    let poly = MonotonicPolynomial::new(
        vec![300.0, 80.0, 4.0, 6.0, 0.5, 0.4],
        Domain::RealLine,
    )
    .unwrap();
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            poly.clone(),
            BoundarySpec::Absorption { level: 5.0 },
        )
        .unwrap(),
    );
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            poly.clone(),
            BoundarySpec::ReflectedAbsorption { level: 5.0 },
        )
        .unwrap(),
    );
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            poly.clone(),
            BoundarySpec::Reflection { level: 40.0 },
        )
        .unwrap(),
    );
    let x_cut = poly.invert(120.0, -1.0).unwrap();
    let ext = fit_extrapolation(&poly, x_cut, Some(2.0)).unwrap();
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            poly.clone(),
            BoundarySpec::ExpExtrapolation {
                x_cut,
                alpha: ext.alpha,
                beta: ext.beta,
                cap: Some(2.0),
            },
        )
        .unwrap(),
    );
    // Uncapped variant exercises the C1 branch.
    let ext_free = fit_extrapolation(&poly, x_cut, None).unwrap();
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            poly,
            BoundarySpec::ExpExtrapolation {
                x_cut,
                alpha: ext_free.alpha,
                beta: ext_free.beta,
                cap: None,
            },
        )
        .unwrap(),
    );
    // Lognormal collocation with and without an exponential tail.
    let log_poly = MonotonicPolynomial::new(
        vec![120.0, 150.0, 25.0, 4.0],
        Domain::NonNegative,
    )
    .unwrap();
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            log_poly.clone(),
            BoundarySpec::Lognormal {
                sigma_x: 0.4,
                extrapolation: None,
            },
        )
        .unwrap(),
    );
    let tail = fit_lognormal_tail(&log_poly, 0.4, -1.2, Some(2.0)).unwrap();
    out.push(
        CollocationSlice::with_implied_forward(
            0.6,
            log_poly,
            BoundarySpec::Lognormal {
                sigma_x: 0.4,
                extrapolation: Some(tail),
            },
        )
        .unwrap(),
    );
    out
}

#[test]
fn closed_form_matches_quadrature_for_every_variant() {
    let mut rng = TestRng::new(20180615);
    for slice in variant_zoo() {
        let strikes = strikes_for(&slice, 50, &mut rng);
        for k in strikes {
            let closed = slice.price_call(k).unwrap();
            let oracle = quadrature_call_oracle(&slice, k);
            assert!(
                (closed - oracle).abs() <= 1e-10 * slice.forward,
                "{} K={k}: closed {closed} oracle {oracle}",
                slice.boundary.name()
            );
        }
    }
}

#[test]
fn first_moment_matches_quadrature_and_forward() {
    for slice in variant_zoo() {
        let fm = slice.first_moment().unwrap();
        let oracle = quadrature_moment_oracle(&slice);
        assert!(
            (fm - oracle).abs() <= 1e-9 * slice.forward,
            "{}: {fm} vs {oracle}",
            slice.boundary.name()
        );
        assert!((fm - slice.forward).abs() <= 1e-9 * slice.forward);
        // Zero-strike call equals the first moment for positivity variants.
        if slice.boundary.strictly_positive() {
            let c0 = slice.price_call(0.0).unwrap();
            assert!((c0 - fm).abs() <= 1e-9 * slice.forward);
        }
    }
}

#[test]
fn parity_and_convexity_on_a_grid() {
    let mut rng = TestRng::new(7);
    for slice in variant_zoo() {
        let mut strikes = strikes_for(&slice, 30, &mut rng);
        strikes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        strikes.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let prices: Vec<f64> = strikes
            .iter()
            .map(|&k| slice.price_call(k).unwrap())
            .collect();
        for (&k, &c) in strikes.iter().zip(prices.iter()) {
            let p = slice.price_put(k).unwrap();
            assert!(
                (c - p - slice.forward + k).abs() <= 1e-12 * slice.forward,
                "parity broken at {k}"
            );
            assert!(c <= slice.forward * (1.0 + 1e-12));
            assert!(c >= (slice.forward - k).max(0.0) - 1e-12 * slice.forward);
        }
        // Monotone non-increasing and convex in strike.
        for w in prices.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * slice.forward);
        }
        for i in 1..strikes.len() - 1 {
            let (k0, k1, k2) = (strikes[i - 1], strikes[i], strikes[i + 1]);
            let (c0, c1, c2) = (prices[i - 1], prices[i], prices[i + 1]);
            let second = (c2 - c1) / (k2 - k1) - (c1 - c0) / (k1 - k0);
            assert!(
                second >= -1e-12 * slice.forward,
                "{}: butterfly at {k1}",
                slice.boundary.name()
            );
        }
    }
}

#[test]
fn survival_and_density_are_consistent() {
    let mut rng = TestRng::new(99);
    for slice in variant_zoo() {
        if matches!(slice.boundary, BoundarySpec::ReflectedAbsorption { .. }) {
            continue; // no pointwise driver map
        }
        let strikes = strikes_for(&slice, 12, &mut rng);
        for k in strikes {
            // survival = -dC/dK by finite differences
            let h = 1e-5 * slice.forward.max(k);
            let s = slice.survival(k).unwrap();
            let fd = (slice.price_call(k - h).unwrap() - slice.price_call(k + h).unwrap())
                / (2.0 * h);
            assert!(
                (s - fd).abs() < 1e-6,
                "{} survival at {k}: {s} vs fd {fd}",
                slice.boundary.name()
            );
            // density = dS/d(-K) by finite differences away from kinks
            let d = slice.density(k).unwrap();
            let fd2 = (slice.survival(k - h).unwrap() - slice.survival(k + h).unwrap())
                / (2.0 * h);
            assert!(
                (d - fd2).abs() < 1e-5 * (1.0 + d),
                "{} density at {k}: {d} vs fd {fd2}",
                slice.boundary.name()
            );
        }
    }
}

#[test]
fn reflected_absorption_survival_and_density() {
    // The mirrored variants have no driver map; check them against the
    // price-derivative definition directly.
    let poly = MonotonicPolynomial::new(vec![300.0, 80.0, 4.0, 6.0, 0.5, 0.4], Domain::RealLine)
        .unwrap();
    for boundary in [
        BoundarySpec::ReflectedAbsorption { level: 5.0 },
        BoundarySpec::Reflection { level: 40.0 },
    ] {
        let slice =
            CollocationSlice::with_implied_forward(0.6, poly.clone(), boundary).unwrap();
        for k in [60.0, 150.0, 300.0, 450.0] {
            let h = 1e-5 * k;
            let s = slice.survival(k).unwrap();
            let fd = (slice.price_call(k - h).unwrap() - slice.price_call(k + h).unwrap())
                / (2.0 * h);
            assert!((s - fd).abs() < 1e-6, "{k}: {s} vs {fd}");
            let d = slice.density(k).unwrap();
            let fd2 =
                (slice.survival(k - h).unwrap() - slice.survival(k + h).unwrap()) / (2.0 * h);
            assert!((d - fd2).abs() < 1e-5 * (1.0 + d), "{k}: {d} vs {fd2}");
        }
    }
}

#[test]
fn density_integrates_to_one_with_boundary_mass() {
    for slice in variant_zoo() {
        let (lo, hi, atom) = match &slice.boundary {
            BoundarySpec::None => {
                let map = slice.driver_map().unwrap();
                (map.apply(-8.0), map.apply(8.0), 0.0)
            }
            BoundarySpec::Absorption { level } | BoundarySpec::ReflectedAbsorption { level } => {
                let hi = slice.poly.eval(8.0);
                (*level, hi, slice.absorption_probability().unwrap())
            }
            BoundarySpec::Reflection { level } => (*level, slice.poly.eval(8.0), 0.0),
            BoundarySpec::ExpExtrapolation { .. } => {
                let map = slice.driver_map().unwrap();
                (map.apply(-8.0), map.apply(8.0), 0.0)
            }
            BoundarySpec::Lognormal { .. } => {
                let map = slice.driver_map().unwrap();
                (map.apply(-8.0), map.apply(8.0), 0.0)
            }
        };
        let mass = adaptive_lobatto(
            &|k: f64| slice.density(k).unwrap_or(0.0),
            lo,
            hi,
            1e-10,
        )
        .unwrap();
        assert!(
            (mass + atom - 1.0).abs() < 1e-8,
            "{}: continuous {mass} + atom {atom}",
            slice.boundary.name()
        );
    }
}

#[test]
fn polynomial_evaluation_examples() {
    // Constant term of the one-month sample map.
    assert_eq!(eval_poly(&SAMPLE_QUINTICS[0], 0.0), 356.64);
    // Coefficient sum of the nineteen-month map at x = 1.
    let sum: f64 = SAMPLE_QUINTICS[2].iter().sum();
    assert!((sum - 507.324).abs() < 1e-10);
    assert!((eval_poly(&SAMPLE_QUINTICS[2], 1.0) - 507.324).abs() < 1e-10);
}

#[test]
fn moment_recurrence_matches_quadrature() {
    let mut rng = TestRng::new(321);
    for _ in 0..40 {
        let b = rng.uniform(-5.0, 5.0);
        let m = hermite_moments(b, 10);
        for i in 0..=10 {
            let oracle = adaptive_lobatto(
                &|x: f64| x.powi(i as i32) * norm_pdf(x),
                b,
                13.0,
                1e-13,
            )
            .unwrap();
            assert!(
                (m.get(i) - oracle).abs() < 1e-11,
                "m_{i}({b}) = {} vs {oracle}",
                m.get(i)
            );
        }
    }
}

#[test]
fn inversion_examples_from_sample_maps() {
    // p(0) = a_0 on the one-month map.
    let s = sample_slice(0);
    let c = s.poly.invert(356.64, -1.0).unwrap();
    assert!(c.abs() < 1e-12);
    // Bisection oracle for the nineteen-month map at 450.
    let s2 = sample_slice(2);
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s2.poly.eval(mid) < 450.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = s2.poly.invert(450.0, 1.0).unwrap();
    assert!((c - 0.5 * (lo + hi)).abs() < 1e-9);
    assert!((s2.poly.eval(c) - 450.0).abs() < 1e-10 * 450.0);
}

#[test]
fn derivative_roots_match_grid_scan() {
    // Sign changes of the nineteen-month map's derivative on a dense grid
    // against the companion-matrix roots.
    let d = colloc::math::poly::derivative(&SAMPLE_QUINTICS[2]);
    let roots = colloc::math::companion_roots(&d).unwrap();
    let mut real_roots: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() < 1e-8 * r.re.abs().max(1.0))
        .map(|r| r.re)
        .filter(|r| (-8.0..8.0).contains(r))
        .collect();
    real_roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut scan_roots = Vec::new();
    let n = 64000;
    for i in 0..n {
        let x0 = -8.0 + 16.0 * i as f64 / n as f64;
        let x1 = -8.0 + 16.0 * (i + 1) as f64 / n as f64;
        if eval_poly(&d, x0) * eval_poly(&d, x1) < 0.0 {
            scan_roots.push(0.5 * (x0 + x1));
        }
    }
    assert_eq!(real_roots.len(), scan_roots.len());
    for (a, b) in real_roots.iter().zip(scan_roots.iter()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn absorption_probability_against_bisection() {
    let s = CollocationSlice::with_implied_forward(
        SAMPLE_TIMES[0],
        MonotonicPolynomial::new_unchecked(SAMPLE_QUINTICS[0].to_vec(), Domain::RealLine),
        BoundarySpec::Absorption { level: 1.0 },
    )
    .unwrap();
    let p = s.absorption_probability().unwrap();
    let (mut lo, mut hi) = (-10.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s.poly.eval(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((p - norm_cdf(0.5 * (lo + hi))).abs() < 1e-9);
}

#[test]
fn extrapolation_fit_keeps_continuity_even_when_capped() {
    let s2 = sample_slice(2);
    let x_cut = s2.poly.invert(150.0, -1.0).unwrap();
    let ext = fit_extrapolation(&s2.poly, x_cut, Some(2.0)).unwrap();
    // The raw slope at that cutoff is steep, so the cap binds.
    let raw = s2.poly.derivative_at(x_cut) / s2.poly.eval(x_cut);
    assert!(raw > 2.0);
    assert_eq!(ext.alpha, 2.0);
    let level = (ext.alpha * x_cut + ext.beta).exp();
    assert!((level - s2.poly.eval(x_cut)).abs() < 1e-12 * level);
    // Uncapped fit is C1.
    let free = fit_extrapolation(&s2.poly, x_cut, None).unwrap();
    let slope = free.alpha * (free.alpha * x_cut + free.beta).exp();
    assert!((slope - s2.poly.derivative_at(x_cut)).abs() < 1e-9 * slope);
    // Non-positive value at the cutoff is refused.
    let bad = MonotonicPolynomial::new(vec![-5.0, 1.0], Domain::RealLine).unwrap();
    assert!(matches!(
        fit_extrapolation(&bad, 0.0, None),
        Err(Error::NonPositiveAtCutoff { .. })
    ));
}

#[test]
fn lognormal_collocation_is_not_scale_invariant() {
    // Degree zero: prices identical across sigma_x (the formula collapses to
    // the intrinsic value of the constant).
    let price_deg0 = |a0: f64, sigma: f64, k: f64| -> f64 {
        // c_K does not exist below a_0; the zero-strike limit applies.
        if k <= a0 {
            a0 - k
        } else {
            let _ = sigma;
            0.0
        }
    };
    assert_eq!(price_deg0(100.0, 0.1, 80.0), price_deg0(100.0, 0.9, 80.0));

    // Degree >= 1 with fixed coefficients: prices at a fixed strike differ
    // across sigma_x.
    let poly =
        MonotonicPolynomial::new(vec![50.0, 100.0, 10.0], Domain::NonNegative).unwrap();
    let price = |sigma: f64| {
        let s = CollocationSlice::with_implied_forward(
            0.5,
            poly.clone(),
            BoundarySpec::Lognormal {
                sigma_x: sigma,
                extrapolation: None,
            },
        )
        .unwrap();
        // Fixed moneyness relative to the map value at the driver median.
        s.price_call(200.0).unwrap() / s.forward
    };
    let p1 = price(0.2);
    let p2 = price(0.5);
    assert!(
        (p1 - p2).abs() > 1e-6,
        "lognormal prices unexpectedly invariant: {p1} vs {p2}"
    );
}
