//! Per-expiry collocation slice: a monotone map from the standardized driver
//! coordinate to the asset price, plus the treatment of the left boundary.

use crate::error::{Error, Result};
use crate::math::poly::{Domain, MonotonicPolynomial};

/// Exponential tail attached below a cutoff of a lognormal collocation.
#[derive(Debug, Clone, PartialEq)]
pub struct LognormalTail {
    /// Cutoff in the standardized Gaussian coordinate of the lognormal driver.
    pub c_cut: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Positivity treatment of the collocation map.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// Plain Gaussian collocation; the asset can become negative.
    None,
    /// Probability mass below `level` accumulates at `level`.
    Absorption { level: f64 },
    /// Absorption built by the reflection method: the mirrored density is
    /// subtracted and the boundary mass doubles.
    ReflectedAbsorption { level: f64 },
    /// The asset reflects at `level`: below the boundary it takes 2L - g(x).
    Reflection { level: f64 },
    /// exp(alpha x + beta) replaces the polynomial below `x_cut`.
    ExpExtrapolation {
        x_cut: f64,
        alpha: f64,
        beta: f64,
        /// Cap that was applied to alpha at fit time, kept for reporting.
        cap: Option<f64>,
    },
    /// Collocation towards a lognormal variate of volatility `sigma_x`,
    /// optionally with an exponential tail below a cutoff.
    Lognormal {
        sigma_x: f64,
        extrapolation: Option<LognormalTail>,
    },
}

impl BoundarySpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundarySpec::None => "none",
            BoundarySpec::Absorption { .. } => "absorption",
            BoundarySpec::ReflectedAbsorption { .. } => "reflected_absorption",
            BoundarySpec::Reflection { .. } => "reflection",
            BoundarySpec::ExpExtrapolation { .. } => "exp_extrapolation",
            BoundarySpec::Lognormal { .. } => "lognormal",
        }
    }

    /// Domain on which the collocation polynomial must be monotone.
    pub fn polynomial_domain(&self) -> Domain {
        match self {
            BoundarySpec::Lognormal { .. } => Domain::NonNegative,
            _ => Domain::RealLine,
        }
    }

    /// Whether the mapped asset is guaranteed to stay strictly positive.
    pub fn strictly_positive(&self) -> bool {
        match self {
            BoundarySpec::None => false,
            BoundarySpec::Absorption { level }
            | BoundarySpec::ReflectedAbsorption { level }
            | BoundarySpec::Reflection { level } => *level > 0.0,
            BoundarySpec::ExpExtrapolation { .. } => true,
            BoundarySpec::Lognormal { extrapolation, .. } => extrapolation.is_some(),
        }
    }

    fn validate(&self, poly: &MonotonicPolynomial) -> Result<()> {
        let check_level = |level: f64| {
            if level >= 0.0 && level.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "boundary level must be >= 0, got {level}"
                )))
            }
        };
        match self {
            BoundarySpec::None => Ok(()),
            BoundarySpec::Absorption { level }
            | BoundarySpec::ReflectedAbsorption { level }
            | BoundarySpec::Reflection { level } => check_level(*level),
            BoundarySpec::ExpExtrapolation { alpha, .. } => {
                if *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "extrapolation slope must be positive, got {alpha}"
                    )))
                }
            }
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => {
                if !(*sigma_x > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "lognormal volatility must be positive, got {sigma_x}"
                    )));
                }
                match extrapolation {
                    Some(tail) if tail.alpha <= 0.0 => Err(Error::InvalidInput(format!(
                        "extrapolation slope must be positive, got {}",
                        tail.alpha
                    ))),
                    Some(_) => Ok(()),
                    Option::None => {
                        // Without a tail, positivity of the asset requires a
                        // nonnegative value at the origin of the domain.
                        if poly.coeffs()[0] >= 0.0 {
                            Ok(())
                        } else {
                            Err(Error::InvalidInput(format!(
                                "lognormal collocation without extrapolation needs a_0 >= 0, got {}",
                                poly.coeffs()[0]
                            )))
                        }
                    }
                }
            }
        }
    }
}

/// One expiry's calibrated model.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSlice {
    /// Year fraction to expiry (ACT/365).
    pub t: f64,
    /// Forward to expiry; equals the slice's first moment by construction.
    pub forward: f64,
    pub poly: MonotonicPolynomial,
    pub boundary: BoundarySpec,
}

/// Relative tolerance of the martingale check at construction.
pub const MARTINGALE_REL_TOL: f64 = 1e-9;

impl CollocationSlice {
    /// Build a slice and verify the martingale constraint
    /// |first_moment - forward| <= 1e-9 * forward.
    pub fn new(
        t: f64,
        forward: f64,
        poly: MonotonicPolynomial,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("expiry must be positive, got {t}")));
        }
        if !(forward > 0.0) || !forward.is_finite() {
            return Err(Error::InvalidInput(format!(
                "forward must be positive, got {forward}"
            )));
        }
        if poly.domain() != boundary.polynomial_domain() {
            return Err(Error::InvalidInput(format!(
                "polynomial domain does not match the {} boundary",
                boundary.name()
            )));
        }
        boundary.validate(&poly)?;
        let slice = Self {
            t,
            forward,
            poly,
            boundary,
        };
        let fm = slice.first_moment()?;
        if (fm - forward).abs() > MARTINGALE_REL_TOL * forward {
            return Err(Error::InvalidInput(format!(
                "first moment {fm} does not match forward {forward}"
            )));
        }
        Ok(slice)
    }

    /// Build a slice whose forward is defined as its own first moment, so the
    /// martingale constraint holds by construction.
    pub fn with_implied_forward(
        t: f64,
        poly: MonotonicPolynomial,
        boundary: BoundarySpec,
    ) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("expiry must be positive, got {t}")));
        }
        if poly.domain() != boundary.polynomial_domain() {
            return Err(Error::InvalidInput(format!(
                "polynomial domain does not match the {} boundary",
                boundary.name()
            )));
        }
        boundary.validate(&poly)?;
        let mut slice = Self {
            t,
            forward: 1.0,
            poly,
            boundary,
        };
        let fm = slice.first_moment()?;
        if !(fm > 0.0) || !fm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "implied forward {fm} is not positive"
            )));
        }
        slice.forward = fm;
        Ok(slice)
    }

    /// Map from the standardized driver coordinate to the asset price.
    ///
    /// Fails for reflected absorption, whose density is not the push-forward
    /// of the driver through a pointwise map.
    pub fn driver_map(&self) -> Result<DriverMap<'_>> {
        match &self.boundary {
            BoundarySpec::None => Ok(DriverMap::Direct { poly: &self.poly }),
            BoundarySpec::Absorption { level } => Ok(DriverMap::Floor {
                poly: &self.poly,
                level: *level,
            }),
            BoundarySpec::ReflectedAbsorption { .. } => Err(Error::UnsupportedVariant {
                op: "driver map",
                variant: "reflected_absorption",
            }),
            BoundarySpec::Reflection { level } => Ok(DriverMap::Reflect {
                poly: &self.poly,
                level: *level,
            }),
            BoundarySpec::ExpExtrapolation {
                x_cut, alpha, beta, ..
            } => Ok(DriverMap::ExpTail {
                poly: &self.poly,
                x_cut: *x_cut,
                alpha: *alpha,
                beta: *beta,
            }),
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => Ok(DriverMap::Lognormal {
                poly: &self.poly,
                sigma_x: *sigma_x,
                tail: extrapolation.as_ref(),
            }),
        }
    }
}

/// Pointwise asset map S = h(x) of a slice, with x the standardized driver.
#[derive(Clone, Copy)]
pub enum DriverMap<'a> {
    Direct {
        poly: &'a MonotonicPolynomial,
    },
    Floor {
        poly: &'a MonotonicPolynomial,
        level: f64,
    },
    Reflect {
        poly: &'a MonotonicPolynomial,
        level: f64,
    },
    ExpTail {
        poly: &'a MonotonicPolynomial,
        x_cut: f64,
        alpha: f64,
        beta: f64,
    },
    Lognormal {
        poly: &'a MonotonicPolynomial,
        sigma_x: f64,
        tail: Option<&'a LognormalTail>,
    },
}

impl DriverMap<'_> {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            DriverMap::Direct { poly } => poly.eval(x),
            DriverMap::Floor { poly, level } => poly.eval(x).max(*level),
            DriverMap::Reflect { poly, level } => {
                let v = poly.eval(x);
                if v < *level {
                    2.0 * *level - v
                } else {
                    v
                }
            }
            DriverMap::ExpTail {
                poly,
                x_cut,
                alpha,
                beta,
            } => {
                if x < *x_cut {
                    (alpha * x + beta).exp()
                } else {
                    poly.eval(x)
                }
            }
            DriverMap::Lognormal {
                poly,
                sigma_x,
                tail,
            } => match tail {
                Some(t) if x < t.c_cut => (t.alpha * x + t.beta).exp(),
                _ => poly.eval((sigma_x * x).exp()),
            },
        }
    }
}
