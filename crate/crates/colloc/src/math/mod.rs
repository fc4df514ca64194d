//! Shared numerical kernels: Gaussian special functions, truncated moments,
//! monotonic polynomials, quadrature and small-scale optimization.

pub mod gauss;
pub mod lm;
pub mod lobatto;
pub mod moments;
pub mod poly;
pub mod roots;

pub use gauss::{erfc, inv_norm_cdf, norm_cdf, norm_pdf};
pub use lobatto::{adaptive_lobatto, adaptive_lobatto_checked};
pub use moments::{full_gaussian_moment, hermite_moments, MomentVector};
pub use poly::{companion_roots, eval_poly, Domain, MonotonicPolynomial};
