//! Collocated local volatility model: an ordered set of collocation slices
//! driven through a correlated Gaussian driver, with the autocorrelation
//! structure calibrated so deterministic forward ratios are preserved.

pub mod ratio;
pub mod rng;
pub mod sim;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::slice::{BoundarySpec, CollocationSlice};

pub use ratio::{
    barrier_probability, calibrate_autocorrelations, calibrate_forward_vols,
    expected_barrier_ratio, expected_forward_ratio, AutocorrCalibration, ForwardVolCalibration,
};
pub use sim::{simulate, simulate_sweep, Contract, SimOptions, SimulationResult};

/// Autocorrelation rho_{i,j} = sqrt(t_i / t_j) of a constant-volatility
/// Brownian driver observed at 0 < t_i <= t_j.
pub fn wiener_autocorrelation(t_i: f64, t_j: f64) -> Result<f64> {
    if !(t_i > 0.0) || !(t_j >= t_i) {
        return Err(Error::NonPositiveTime { t_i, t_j });
    }
    Ok((t_i / t_j).sqrt())
}

/// Cumulative driver variances at the slice times for piecewise-constant
/// forward volatilities: cum_i = sum_{k<=i} sigma_{k-1}^2 (t_k - t_{k-1}).
pub fn cumulative_variances(times: &[f64], vols: &[f64]) -> Result<Vec<f64>> {
    if vols.len() != times.len() {
        return Err(Error::InvalidInput(format!(
            "{} forward vols for {} times",
            vols.len(),
            times.len()
        )));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut acc = 0.0;
    for (t, sigma) in times.iter().zip(vols.iter()) {
        if !(*t > prev_t) {
            return Err(Error::NonPositiveTime {
                t_i: prev_t,
                t_j: *t,
            });
        }
        if !(*sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "forward volatility must be positive, got {sigma}"
            )));
        }
        acc += sigma * sigma * (t - prev_t);
        out.push(acc);
        prev_t = *t;
    }
    Ok(out)
}

/// Generalized driver autocorrelation sqrt(cum_i / cum_j) for
/// piecewise-constant volatilities; reduces to the Wiener value when the
/// volatility is constant.
pub fn piecewise_autocorrelation(times: &[f64], vols: &[f64], i: usize, j: usize) -> Result<f64> {
    let cum = cumulative_variances(times, vols)?;
    if i > j || j >= cum.len() {
        return Err(Error::InvalidInput(format!(
            "bad index pair ({i}, {j}) for {} times",
            cum.len()
        )));
    }
    Ok((cum[i] / cum[j]).sqrt())
}

/// Correlation structure of the normalized driver coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Correlation {
    /// Constant-volatility Brownian driver, rho_{i,j} = sqrt(t_i/t_j).
    Wiener,
    /// An explicit pairwise matrix, e.g. from autocorrelation calibration.
    Explicit(DMatrix<f64>),
    /// Piecewise-constant forward volatilities, sigma_0 fixed to 1.
    PiecewiseVols(Vec<f64>),
}

/// Output of [`factorize_correlation`].
#[derive(Debug, Clone)]
pub struct Factorization {
    /// Matrix A with A A^T equal (or closest) to the input.
    pub factor: DMatrix<f64>,
    /// Max-norm reconstruction error; zero-ish for the Cholesky path.
    pub reconstruction_error: f64,
    /// True when the SVD repair path ran.
    pub repaired: bool,
}

/// Cholesky factor when the matrix is positive definite, otherwise the
/// eigenvalue-clipped square root with rows rescaled to unit norm.
pub fn factorize_correlation(c: &DMatrix<f64>) -> Result<Factorization> {
    let n = c.nrows();
    if n != c.ncols() {
        return Err(Error::InvalidInput("correlation matrix must be square".into()));
    }
    for i in 0..n {
        if (c[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "unit diagonal required, got {} at {i}",
                c[(i, i)]
            )));
        }
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidInput("correlation matrix must be symmetric".into()));
            }
        }
    }
    if let Some(chol) = nalgebra::Cholesky::new(c.clone()) {
        let factor = chol.l();
        let err = (&factor * factor.transpose() - c).abs().max();
        return Ok(Factorization {
            factor,
            reconstruction_error: err,
            repaired: false,
        });
    }
    // Clip negative eigenvalues and renormalize rows so diag(AA^T) = 1.
    let eig = nalgebra::SymmetricEigen::new(c.clone());
    let mut a = eig.eigenvectors.clone();
    for j in 0..n {
        let lam = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            a[(i, j)] *= lam;
        }
    }
    for i in 0..n {
        let norm = a.row(i).norm();
        if norm > 0.0 {
            for j in 0..n {
                a[(i, j)] /= norm;
            }
        }
    }
    let err = (&a * a.transpose() - c).abs().max();
    Ok(Factorization {
        factor: a,
        reconstruction_error: err,
        repaired: true,
    })
}

/// The assembled Monte-Carlo model.
#[derive(Debug, Clone)]
pub struct ClvModel {
    slices: Vec<CollocationSlice>,
    correlation: Correlation,
    factor: DMatrix<f64>,
    factorization_error: f64,
    repaired: bool,
}

impl ClvModel {
    pub fn new(slices: Vec<CollocationSlice>, correlation: Correlation) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidInput("model needs at least one slice".into()));
        }
        let mut prev = 0.0;
        for s in &slices {
            if !(s.t > prev) {
                return Err(Error::NonPositiveTime {
                    t_i: prev,
                    t_j: s.t,
                });
            }
            prev = s.t;
            if matches!(s.boundary, BoundarySpec::ReflectedAbsorption { .. }) {
                return Err(Error::UnsupportedVariant {
                    op: "CLV model",
                    variant: "reflected_absorption",
                });
            }
        }
        let m = slices.len();
        let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
        let corr = match &correlation {
            Correlation::Wiener => {
                let mut c = DMatrix::identity(m, m);
                for i in 0..m {
                    for j in 0..i {
                        let rho = wiener_autocorrelation(times[j], times[i])?;
                        c[(i, j)] = rho;
                        c[(j, i)] = rho;
                    }
                }
                c
            }
            Correlation::PiecewiseVols(vols) => {
                if vols.len() != m {
                    return Err(Error::InvalidInput(format!(
                        "{} forward vols for {m} slices",
                        vols.len()
                    )));
                }
                if (vols[0] - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "first forward volatility is fixed to 1, got {}",
                        vols[0]
                    )));
                }
                let cum = cumulative_variances(&times, vols)?;
                let mut c = DMatrix::identity(m, m);
                for i in 0..m {
                    for j in 0..i {
                        let rho = (cum[j] / cum[i]).sqrt();
                        c[(i, j)] = rho;
                        c[(j, i)] = rho;
                    }
                }
                c
            }
            Correlation::Explicit(c) => {
                if c.nrows() != m || c.ncols() != m {
                    return Err(Error::InvalidInput(format!(
                        "correlation is {}x{}, model has {m} slices",
                        c.nrows(),
                        c.ncols()
                    )));
                }
                for i in 0..m {
                    for j in 0..m {
                        let v = c[(i, j)];
                        if i != j && !(v > 0.0 && v <= 1.0) {
                            return Err(Error::InvalidInput(format!(
                                "correlation entry ({i},{j}) = {v} outside (0, 1]"
                            )));
                        }
                    }
                }
                c.clone()
            }
        };
        let fact = factorize_correlation(&corr)?;
        Ok(Self {
            slices,
            correlation,
            factor: fact.factor,
            factorization_error: fact.reconstruction_error,
            repaired: fact.repaired,
        })
    }

    pub fn slices(&self) -> &[CollocationSlice] {
        &self.slices
    }

    pub fn times(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    pub fn correlation(&self) -> &Correlation {
        &self.correlation
    }

    /// Factor A with A A^T reproducing the pairwise correlation matrix.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Max-norm error of the factor reconstruction; nonzero after SVD repair.
    pub fn factorization_error(&self) -> f64 {
        self.factorization_error
    }

    pub fn was_repaired(&self) -> bool {
        self.repaired
    }

    /// Replace the correlation structure, re-factorizing.
    pub fn with_correlation(mut self, correlation: Correlation) -> Result<Self> {
        let slices = std::mem::take(&mut self.slices);
        Self::new(slices, correlation)
    }

    /// Deterministic forward ratio F(0,t_j) / F(0,t_i).
    pub fn forward_ratio(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.slices.len() || j >= self.slices.len() {
            return Err(Error::InvalidInput(format!(
                "slice index out of range: ({i}, {j})"
            )));
        }
        Ok(self.slices[j].forward / self.slices[i].forward)
    }
}
