//! Polynomials in ascending-power coefficient form, companion-matrix root
//! finding, and the strictly monotonic polynomial used as collocation map.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Highest supported polynomial degree. The Frobenius companion matrix gets
/// increasingly ill-conditioned with the degree; beyond this a different
/// basis would be required.
pub const MAX_DEGREE: usize = 11;

/// Horner evaluation of sum a_k x^k.
#[inline]
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Value, first and second derivative in a single Horner pass.
#[inline]
pub fn eval_poly_with_derivs(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &c in coeffs.iter().rev() {
        d2 = d2 * x + d1;
        d1 = d1 * x + p;
        p = p * x + c;
    }
    (p, d1, 2.0 * d2)
}

/// Coefficients of the derivative polynomial.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Coefficient-space product of two polynomials.
pub fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Antiderivative with constant term `constant`.
pub fn antiderivative(deriv: &[f64], constant: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(deriv.len() + 1);
    out.push(constant);
    for (k, &d) in deriv.iter().enumerate() {
        out.push(d / (k + 1) as f64);
    }
    out
}

/// All complex roots of the polynomial, as eigenvalues of the balanced
/// Frobenius companion matrix, each polished by one complex Newton step.
pub fn companion_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::DegenerateLeadingCoefficient);
    }
    let lead = coeffs[n];
    if lead == 0.0 || !lead.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateLeadingCoefficient);
    }
    if n == 1 {
        return Ok(vec![Complex::new(-coeffs[0] / coeffs[1], 0.0)]);
    }
    if n == 2 {
        // Quadratic formula with the numerically stable branch.
        let (c, b, a) = (coeffs[0], coeffs[1], coeffs[2]);
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let r1 = if q != 0.0 { c / q } else { 0.0 };
            let r2 = if a != 0.0 && q != 0.0 { q / a } else { -b / (2.0 * a) };
            return Ok(vec![Complex::new(r1, 0.0), Complex::new(r2, 0.0)]);
        }
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        return Ok(vec![Complex::new(re, im), Complex::new(re, -im)]);
    }

    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i] / lead;
    }
    balance(&mut m);
    let eig = m.complex_eigenvalues();
    let mut roots: Vec<Complex<f64>> = eig.iter().copied().collect();
    for r in &mut roots {
        *r = newton_polish(coeffs, *r);
    }
    Ok(roots)
}

// Parlett-Reinsch balancing in radix-2 arithmetic; exact scaling, so the
// eigenvalues are unchanged while the norms become comparable.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut f = 1.0;
                let mut cc = c;
                let s = c + r;
                let mut g = r / RADIX;
                while cc < g {
                    f *= RADIX;
                    cc *= sqrdx;
                }
                g = r * RADIX;
                while cc > g {
                    f /= RADIX;
                    cc /= sqrdx;
                }
                if (cc + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        m[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        m[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

fn eval_complex(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut d = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d = d * z + p;
        p = p * z + Complex::new(c, 0.0);
    }
    (p, d)
}

fn newton_polish(coeffs: &[f64], z: Complex<f64>) -> Complex<f64> {
    let (p, d) = eval_complex(coeffs, z);
    if d.norm() == 0.0 {
        return z;
    }
    let step = p / d;
    if step.norm().is_finite() {
        z - step
    } else {
        z
    }
}

/// Evaluation domain of a collocation map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Gaussian collocation: the map must be a bijection of the real line.
    RealLine,
    /// Lognormal collocation: the map acts on [0, inf).
    NonNegative,
}

/// Polynomial with a strictly positive derivative on its evaluation domain.
///
/// Coefficients are in ascending powers; a_0 carries the price unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicPolynomial {
    coeffs: Vec<f64>,
    domain: Domain,
}

// Imaginary parts below this (relative) size mark an eigenvalue as real.
const REAL_ROOT_IM_TOL: f64 = 1e-8;

impl MonotonicPolynomial {
    /// Validating constructor: checks degree bounds and verifies that the
    /// derivative has no real root in the domain via companion-matrix roots.
    pub fn new(coeffs: Vec<f64>, domain: Domain) -> Result<Self> {
        let n = coeffs.len().saturating_sub(1);
        if n < 1 {
            return Err(Error::InvalidInput(
                "collocation polynomial needs degree >= 1".into(),
            ));
        }
        if n > MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "degree {n} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        let p = Self { coeffs, domain };
        p.check_increasing()?;
        Ok(p)
    }

    /// Constructor that skips the monotonicity check. Meant for callers that
    /// guarantee monotonicity on the region they evaluate, e.g. coefficient
    /// sets rounded for display whose derivative dips slightly negative far
    /// out in the tail.
    pub fn new_unchecked(coeffs: Vec<f64>, domain: Domain) -> Self {
        Self { coeffs, domain }
    }

    fn check_increasing(&self) -> Result<()> {
        let d = derivative(&self.coeffs);
        let lead = *d.last().unwrap();
        if d.len() == 1 {
            return if d[0] > 0.0 {
                Ok(())
            } else {
                Err(Error::NonMonotonicInput(format!(
                    "constant derivative {} is not positive",
                    d[0]
                )))
            };
        }
        if lead <= 0.0 {
            return Err(Error::NonMonotonicInput(
                "derivative leading coefficient not positive".into(),
            ));
        }
        if self.domain == Domain::RealLine && (d.len() - 1) % 2 != 0 {
            return Err(Error::NonMonotonicInput(
                "derivative of odd degree cannot stay positive on the real line".into(),
            ));
        }
        let scale: f64 = self.coeffs.iter().map(|c| c.abs()).sum();
        let roots = companion_roots(&d)?;
        for r in roots {
            let is_real = r.im.abs() <= REAL_ROOT_IM_TOL * r.re.abs().max(1.0);
            if !is_real {
                continue;
            }
            let in_domain = match self.domain {
                Domain::RealLine => true,
                Domain::NonNegative => r.re > 1e-9 * scale.max(1.0),
            };
            if in_domain {
                return Err(Error::NonMonotonicInput(format!(
                    "derivative has a real root at {:.6e}",
                    r.re
                )));
            }
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(&self.coeffs, x)
    }

    #[inline]
    pub fn derivative_at(&self, x: f64) -> f64 {
        let (_, d1, _) = eval_poly_with_derivs(&self.coeffs, x);
        d1
    }

    /// Solve p(c) = y by Halley's method from `guess`, falling back to the
    /// companion-matrix roots of p - y when the iteration stalls.
    ///
    /// Converges to |p(c) - y| <= 1e-13 * max(1, |y|).
    pub fn invert(&self, y: f64, guess: f64) -> Result<f64> {
        let tol = 1e-13 * y.abs().max(1.0);
        let mut c = guess;
        if self.domain == Domain::NonNegative {
            c = c.max(0.0);
        }
        for _ in 0..20 {
            let (p, d1, d2) = eval_poly_with_derivs(&self.coeffs, c);
            let f = p - y;
            if f.abs() <= tol {
                return Ok(c);
            }
            if d1 <= 0.0 || !d1.is_finite() {
                break;
            }
            let newton = f / d1;
            let halley_den = 1.0 - 0.5 * newton * d2 / d1;
            // Keep the cubic correction only while it stays contractive.
            let step = if halley_den.abs() > 0.5 {
                newton / halley_den
            } else {
                newton
            };
            if !step.is_finite() {
                break;
            }
            c -= step;
            if self.domain == Domain::NonNegative && c < 0.0 {
                c = 0.0;
            }
        }
        self.invert_by_roots(y)
    }

    fn invert_by_roots(&self, y: f64) -> Result<f64> {
        let mut shifted = self.coeffs.clone();
        shifted[0] -= y;
        let scale: f64 = shifted.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        let roots = companion_roots(&shifted)?;
        let mut real_roots: Vec<f64> = roots
            .iter()
            .filter(|r| r.im.abs() <= REAL_ROOT_IM_TOL * r.re.abs().max(1.0))
            .map(|r| r.re)
            .filter(|re| match self.domain {
                Domain::RealLine => true,
                Domain::NonNegative => *re >= -1e-9 * scale,
            })
            .collect();
        real_roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        real_roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (a.abs().max(1.0)));
        match real_roots.len() {
            0 => Err(Error::NoRealRoot { target: y }),
            1 => {
                let c = if self.domain == Domain::NonNegative {
                    real_roots[0].max(0.0)
                } else {
                    real_roots[0]
                };
                Ok(c)
            }
            _ => Err(Error::NonMonotonicInput(format!(
                "{} real roots bracket target {y}",
                real_roots.len()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_direct_sum() {
        let c = [356.64, 48.632, 0.842, -0.565, 0.0917, 0.412];
        assert_eq!(eval_poly(&c, 0.0), 356.64);
        let direct: f64 = c.iter().enumerate().map(|(k, a)| a * 1.5f64.powi(k as i32)).sum();
        assert!((eval_poly(&c, 1.5) - direct).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn derivative_pass_is_consistent() {
        let c = [1.0, -2.0, 0.5, 3.0, -0.25];
        let (p, d1, d2) = eval_poly_with_derivs(&c, 0.7);
        assert!((p - eval_poly(&c, 0.7)).abs() < 1e-14);
        assert!((d1 - eval_poly(&derivative(&c), 0.7)).abs() < 1e-14);
        assert!((d2 - eval_poly(&derivative(&derivative(&c)), 0.7)).abs() < 1e-13);
    }

    #[test]
    fn quadratic_and_known_roots() {
        let roots = companion_roots(&[-1.0, 0.0, 1.0]).unwrap();
        let mut res: Vec<f64> = roots.iter().map(|r| r.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((res[0] + 1.0).abs() < 1e-14 && (res[1] - 1.0).abs() < 1e-14);

        let roots = companion_roots(&[6.0, -5.0, 1.0]).unwrap();
        let mut res: Vec<f64> = roots.iter().map(|r| r.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((res[0] - 2.0).abs() < 1e-12 && (res[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quintic_roots_satisfy_polynomial() {
        // (x-1)(x-2)(x-3)(x^2+1) expanded.
        let c = [-6.0, 17.0, -17.0, 17.0, -6.0, 1.0];
        let roots = companion_roots(&c).unwrap();
        let scale: f64 = c.iter().map(|v| v.abs()).sum();
        for r in roots {
            let (p, _) = super::eval_complex(&c, r);
            assert!(p.norm() <= 1e-8 * scale, "residual {:e} at {r}", p.norm());
        }
    }

    #[test]
    fn degenerate_leading_coefficient() {
        assert!(matches!(
            companion_roots(&[1.0, 2.0, 0.0]),
            Err(Error::DegenerateLeadingCoefficient)
        ));
    }

    #[test]
    fn identity_inversion() {
        let p = MonotonicPolynomial::new(vec![0.0, 1.0], Domain::RealLine).unwrap();
        assert!((p.invert(2.7, 1.0).unwrap() - 2.7).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_monotone() {
        // x^3 - x has derivative 3x^2 - 1 with real roots.
        assert!(MonotonicPolynomial::new(vec![0.0, -1.0, 0.0, 1.0], Domain::RealLine).is_err());
        // x^2 is fine on [0, inf) but not on the real line.
        assert!(MonotonicPolynomial::new(vec![0.0, 0.0, 1.0], Domain::RealLine).is_err());
        assert!(MonotonicPolynomial::new(vec![0.0, 0.0, 1.0], Domain::NonNegative).is_ok());
    }

    #[test]
    fn inversion_round_trip_random_monotone() {
        // Random strictly increasing quintics from squared-derivative seeds.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..50 {
            let p1 = [next(), next(), next()];
            let p2 = [next(), next()];
            let mut d = multiply(&p1, &p1);
            for (k, v) in multiply(&p2, &p2).into_iter().enumerate() {
                d[k] += v;
            }
            d[0] += 0.05; // keep the derivative strictly positive
            let coeffs = antiderivative(&d, 10.0 * next());
            let p = MonotonicPolynomial::new(coeffs, Domain::RealLine).unwrap();
            for i in -8..=8 {
                let x = i as f64 * 0.5;
                let y = p.eval(x);
                let guess = if x < 0.0 { -1.0 } else { 1.0 };
                let back = p.invert(y, guess).unwrap();
                assert!(
                    (back - x).abs() < 1e-10 * x.abs().max(1.0),
                    "round trip {x} -> {y} -> {back}"
                );
            }
        }
    }
}
