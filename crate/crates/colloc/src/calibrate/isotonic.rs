//! Nonnegative parameterizations of the collocation derivative.
//!
//! On the real line a nonnegative polynomial is a sum of two squares,
//! g'(x) = p1(x)^2 + p2(x)^2. On [0, inf) the Murray representation
//! g'(x) = q1(x)^2 + x q2(x)^2 plays the same role. Optimizing over the
//! square roots keeps monotonicity without inequality constraints.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::math::poly::{antiderivative, companion_roots, multiply, Domain, MonotonicPolynomial};

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicParams {
    domain: Domain,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

/// Canonical coefficient counts (len1, len2) for a derivative of the given
/// degree on the given domain.
fn canonical_sizes(domain: Domain, deriv_degree: usize) -> (usize, usize) {
    match domain {
        Domain::RealLine => {
            debug_assert!(deriv_degree % 2 == 0);
            let m = deriv_degree / 2;
            (m + 1, m)
        }
        Domain::NonNegative => {
            if deriv_degree % 2 == 0 {
                let m = deriv_degree / 2;
                (m + 1, m)
            } else {
                let m = (deriv_degree - 1) / 2;
                (m + 1, m + 1)
            }
        }
    }
}

fn resize_to(mut v: Vec<f64>, len: usize) -> Result<Vec<f64>> {
    while v.len() > len {
        let tail = v.pop().unwrap();
        let scale: f64 = v.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        if tail.abs() > 1e-9 * scale {
            return Err(Error::InvalidInput(
                "sum-of-squares factor exceeds its degree bound".into(),
            ));
        }
    }
    v.resize(len, 0.0);
    Ok(v)
}

impl IsotonicParams {
    pub fn new(domain: Domain, p1: Vec<f64>, p2: Vec<f64>) -> Self {
        Self { domain, p1, p2 }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Number of free parameters.
    pub fn len(&self) -> usize {
        self.p1.len() + self.p2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.p1.clone();
        v.extend_from_slice(&self.p2);
        v
    }

    pub fn from_vec(&self, v: &[f64]) -> Self {
        let (a, b) = v.split_at(self.p1.len());
        Self {
            domain: self.domain,
            p1: a.to_vec(),
            p2: b.to_vec(),
        }
    }

    /// Coefficients of the nonnegative derivative this parameterization
    /// represents.
    pub fn derivative_coeffs(&self) -> Vec<f64> {
        let sq1 = multiply(&self.p1, &self.p1);
        let sq2 = multiply(&self.p2, &self.p2);
        let mut out = sq1;
        match self.domain {
            Domain::RealLine => {
                if out.len() < sq2.len() {
                    out.resize(sq2.len(), 0.0);
                }
                for (k, v) in sq2.into_iter().enumerate() {
                    out[k] += v;
                }
            }
            Domain::NonNegative => {
                // x * q2(x)^2
                if out.len() < sq2.len() + 1 {
                    out.resize(sq2.len() + 1, 0.0);
                }
                for (k, v) in sq2.into_iter().enumerate() {
                    out[k + 1] += v;
                }
            }
        }
        if out.is_empty() {
            out.push(0.0);
        }
        out
    }

    /// Recover a sum-of-squares representation from an unconstrained
    /// derivative fit, via the complex factorization of the polynomial.
    /// Real roots that would make the derivative change sign are projected
    /// onto complex pairs, which is the nearest representable shape.
    pub fn from_derivative(deriv: &[f64], domain: Domain) -> Result<Self> {
        let mut d = deriv.to_vec();
        while d.len() > 1 && *d.last().unwrap() == 0.0 {
            d.pop();
        }
        let degree = d.len() - 1;
        if degree == 0 {
            // Constant derivative.
            let c = d[0];
            if c <= 0.0 {
                return Err(Error::NonMonotonicInput(format!(
                    "constant derivative {c} is not positive"
                )));
            }
            return Ok(Self {
                domain,
                p1: vec![c.sqrt()],
                p2: vec![],
            });
        }
        let scale: f64 = d.iter().map(|c| c.abs()).sum();
        let mut lead = *d.last().unwrap();
        if lead <= 0.0 {
            // A decreasing tail cannot be represented; salvage the shape with
            // a small positive leading coefficient.
            lead = 1e-6 * scale.max(1.0);
            *d.last_mut().unwrap() = lead;
        }
        match domain {
            Domain::RealLine => Self::factor_real_line(&d, lead),
            Domain::NonNegative => Self::factor_half_line(&d, lead),
        }
    }

    fn factor_real_line(d: &[f64], lead: f64) -> Result<Self> {
        let degree = d.len() - 1;
        if degree % 2 != 0 {
            return Err(Error::NonMonotonicInput(
                "odd-degree derivative cannot stay positive on the real line".into(),
            ));
        }
        let roots = companion_roots(d)?;
        let uppers = pair_roots(&roots)?;
        // W(x) = prod (x - z_k); the squared modulus recovers d / lead.
        let mut w = vec![Complex::new(1.0, 0.0)];
        for z in uppers {
            w = complex_multiply(&w, z);
        }
        let s = lead.sqrt();
        let p1: Vec<f64> = w.iter().map(|c| s * c.re).collect();
        let mut p2: Vec<f64> = w.iter().map(|c| s * c.im).collect();
        while p2.len() > 1 && *p2.last().unwrap() == 0.0 {
            p2.pop();
        }
        let (l1, l2) = canonical_sizes(Domain::RealLine, degree);
        Ok(Self {
            domain: Domain::RealLine,
            p1: resize_to(p1, l1)?,
            p2: resize_to(p2, l2)?,
        })
    }

    fn factor_half_line(d: &[f64], lead: f64) -> Result<Self> {
        let degree = d.len() - 1;
        let roots = companion_roots(d)?;
        let scale: f64 = d.iter().map(|c| c.abs()).sum();
        let real_tol = 1e-7;
        let mut uppers: Vec<Complex<f64>> = Vec::new();
        let mut neg_reals: Vec<f64> = Vec::new();
        let mut pos_reals: Vec<f64> = Vec::new();
        for r in &roots {
            if r.im.abs() <= real_tol * r.re.abs().max(1.0) {
                if r.re < -1e-12 * scale.max(1.0) {
                    neg_reals.push(r.re);
                } else {
                    pos_reals.push(r.re.max(0.0));
                }
            } else if r.im > 0.0 {
                uppers.push(*r);
            }
        }
        // Positive real roots must pair up; distinct pairs are projected onto
        // a complex pair at the midpoint so the quadratic stays nonnegative.
        pos_reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if pos_reals.len() % 2 != 0 {
            // Pull the smallest one into the negative group (boundary root).
            let r = pos_reals.remove(0);
            if r > 1e-6 * scale.max(1.0) {
                return Err(Error::NonMonotonicInput(
                    "unpaired positive real root in derivative".into(),
                ));
            }
            neg_reals.push(-r.max(0.0));
        }
        for pair in pos_reals.chunks(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            let half = 0.5 * (pair[1] - pair[0]);
            uppers.push(Complex::new(mid, half));
        }

        // Build (q1, q2) as a product of atomic nonnegative factors on
        // [0, inf): (x + a) = sqrt(a)^2 + x 1^2 and
        // (x - a)^2 + b^2 = (x - |z|)^2 + x (sqrt(2(|z| - a)))^2.
        let mut q1 = vec![1.0];
        let mut q2: Vec<f64> = vec![];
        for r in neg_reals {
            let a = -r;
            (q1, q2) = combine_half_line(&q1, &q2, &[a.sqrt()], &[1.0]);
        }
        for z in uppers {
            let modulus = (z.re * z.re + z.im * z.im).sqrt();
            let c = (2.0 * (modulus - z.re)).max(0.0).sqrt();
            (q1, q2) = combine_half_line(&q1, &q2, &[-modulus, 1.0], &[c]);
        }
        let s = lead.sqrt();
        for v in q1.iter_mut().chain(q2.iter_mut()) {
            *v *= s;
        }
        let (l1, l2) = canonical_sizes(Domain::NonNegative, degree);
        Ok(Self {
            domain: Domain::NonNegative,
            p1: resize_to(q1, l1)?,
            p2: resize_to(q2, l2)?,
        })
    }
}

/// (A^2 + x B^2)(C^2 + x D^2) = (AC + x BD)^2 + x (AD - BC)^2
fn combine_half_line(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ac = multiply(a, c);
    let bd = multiply(b, d);
    let ad = multiply(a, d);
    let bc = multiply(b, c);
    let mut q1 = ac;
    if !bd.is_empty() {
        if q1.len() < bd.len() + 1 {
            q1.resize(bd.len() + 1, 0.0);
        }
        for (k, v) in bd.into_iter().enumerate() {
            q1[k + 1] += v;
        }
    }
    let mut q2 = ad;
    if !bc.is_empty() {
        if q2.len() < bc.len() {
            q2.resize(bc.len(), 0.0);
        }
        for (k, v) in bc.into_iter().enumerate() {
            q2[k] -= v;
        }
    }
    if q2.is_empty() {
        q2 = vec![0.0];
    }
    (q1, q2)
}

fn complex_multiply(w: &[Complex<f64>], root: Complex<f64>) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); w.len() + 1];
    for (k, c) in w.iter().enumerate() {
        out[k] -= c * root;
        out[k + 1] += c;
    }
    out
}

/// Pick one representative per conjugate pair, projecting stray real roots
/// (sign changes of the fit) onto complex pairs.
fn pair_roots(roots: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
    let real_tol = 1e-7;
    let mut uppers: Vec<Complex<f64>> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for r in roots {
        if r.im.abs() <= real_tol * r.re.abs().max(1.0) {
            reals.push(r.re);
        } else if r.im > 0.0 {
            uppers.push(*r);
        }
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if reals.len() % 2 != 0 {
        return Err(Error::NonMonotonicInput(
            "odd number of real derivative roots".into(),
        ));
    }
    for pair in reals.chunks(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let half = 0.5 * (pair[1] - pair[0]);
        uppers.push(Complex::new(mid, half));
    }
    Ok(uppers)
}

/// Integrate the nonnegative derivative into coefficient form with the given
/// constant term. Monotonicity holds by construction, so no root check runs.
pub fn isotonic_to_coeffs(params: &IsotonicParams, a0_seed: f64) -> MonotonicPolynomial {
    let deriv = params.derivative_coeffs();
    let coeffs = antiderivative(&deriv, a0_seed);
    MonotonicPolynomial::new_unchecked(coeffs, params.domain())
}
