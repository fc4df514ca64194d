//! Truncated Gaussian moments m_i(b) = integral of x^i phi(x) over [b, inf).
//!
//! Integration by parts gives the recurrence
//!
//! ```text
//! m_0(b) = Phi(-b),  m_1(b) = phi(b),  m_{i+2}(b) = (i+1) m_i(b) + b^{i+1} phi(b)
//! ```
//!
//! which is what turns polynomial payoffs against a Gaussian into closed
//! forms everywhere in this crate.

use super::gauss::{norm_cdf, norm_pdf};

/// Moments m_0(b)..m_n(b) of the standard normal above a lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    /// Lower integration bound b.
    pub lower: f64,
    /// values[i] = m_i(lower).
    pub values: Vec<f64>,
}

impl MomentVector {
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// Compute m_0(b)..m_n(b) by the two-term recurrence.
pub fn hermite_moments(b: f64, n: usize) -> MomentVector {
    let phi_b = norm_pdf(b);
    let mut values = vec![0.0; n + 1];
    values[0] = norm_cdf(-b);
    if n >= 1 {
        values[1] = phi_b;
    }
    let mut b_pow = b; // b^{i+1}
    for i in 0..n.saturating_sub(1) {
        values[i + 2] = (i + 1) as f64 * values[i] + b_pow * phi_b;
        b_pow *= b;
    }
    MomentVector { lower: b, values }
}

/// Full Gaussian moment: 0 for odd i, (i-1)!! for even i.
pub fn full_gaussian_moment(i: usize) -> f64 {
    if i % 2 == 1 {
        return 0.0;
    }
    let mut m = 1.0;
    let mut k = i as i64 - 1;
    while k > 1 {
        m *= k as f64;
        k -= 2;
    }
    m
}
