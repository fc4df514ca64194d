//! Arbitrage-free time interpolation of collocated call prices and the
//! closed-form Dupire local volatility.
//!
//! Prices between expiries blend the two bracketing slices at constant
//! forward moneyness:
//!
//! ```text
//! C(K,t) = w F(t)/F(t2) C(K F(t2)/F(t), t2) + (1-w) F(t)/F(t1) C(K F(t1)/F(t), t1)
//! ```
//!
//! with w = (t-t1)/(t2-t1). Because each slice's density is analytic, the
//! Dupire ratio needs no finite differences:
//!
//! ```text
//! sigma_L^2(K,t) = 2 (C2/K2 - C1/K1) / ((t-t1) K2 f2(K2) + (t2-t) K1 f1(K1))
//! ```
//!
//! The time derivative is taken at constant moneyness on a fixed forward, so
//! it is piecewise constant in t: sigma_L is continuous across expiries but
//! its time derivative is not.

use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::slice::CollocationSlice;

/// Ordered slices with log-linear forward interpolation between expiries.
#[derive(Debug, Clone)]
pub struct SliceTermStructure {
    slices: Vec<CollocationSlice>,
}

/// One violation of the calendar-spread condition.
#[derive(Debug, Clone, Copy)]
pub struct CalendarViolation {
    /// Index of the earlier slice of the offending pair.
    pub pair: usize,
    pub moneyness: f64,
    /// C(K1,t1)/K1 at the earlier expiry.
    pub earlier: f64,
    /// C(K2,t2)/K2 at the later expiry, which should dominate.
    pub later: f64,
}

impl SliceTermStructure {
    pub fn new(slices: Vec<CollocationSlice>) -> Result<Self> {
        if slices.len() < 2 {
            return Err(Error::InvalidInput(
                "time interpolation needs at least two slices".into(),
            ));
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
        }
        Ok(Self { slices })
    }

    pub fn slices(&self) -> &[CollocationSlice] {
        &self.slices
    }

    pub fn first_expiry(&self) -> f64 {
        self.slices[0].t
    }

    pub fn last_expiry(&self) -> f64 {
        self.slices[self.slices.len() - 1].t
    }

    /// Log-linear forward between expiries.
    pub fn forward(&self, t: f64) -> Result<f64> {
        let (i, j) = self.bracket(t)?;
        if i == j {
            return Ok(self.slices[i].forward);
        }
        let (t1, t2) = (self.slices[i].t, self.slices[j].t);
        let w = (t - t1) / (t2 - t1);
        Ok(((1.0 - w) * self.slices[i].forward.ln() + w * self.slices[j].forward.ln()).exp())
    }

    fn bracket(&self, t: f64) -> Result<(usize, usize)> {
        let first = self.first_expiry();
        let last = self.last_expiry();
        if !(t >= first && t <= last) {
            return Err(Error::OutOfTimeRange {
                t,
                first,
                last,
            });
        }
        for (k, s) in self.slices.iter().enumerate() {
            if t == s.t {
                return Ok((k, k));
            }
        }
        let j = self.slices.partition_point(|s| s.t < t);
        Ok((j - 1, j))
    }

    /// Moneyness-preserving linear blend of the bracketing slice prices.
    pub fn interp_call(&self, strike: f64, t: f64) -> Result<f64> {
        let (i, j) = self.bracket(t)?;
        if i == j {
            return self.slices[i].price_call(strike);
        }
        let (s1, s2) = (&self.slices[i], &self.slices[j]);
        let f_t = self.forward(t)?;
        let w = (t - s1.t) / (s2.t - s1.t);
        let k1 = strike * s1.forward / f_t;
        let k2 = strike * s2.forward / f_t;
        let c1 = s1.price_call(k1)?;
        let c2 = s2.price_call(k2)?;
        Ok(w * f_t / s2.forward * c2 + (1.0 - w) * f_t / s1.forward * c1)
    }

    /// Closed-form Dupire local volatility at (strike, t).
    pub fn dupire_local_vol(&self, strike: f64, t: f64) -> Result<f64> {
        let (i, j) = self.bracket(t)?;
        let (i, j) = if i == j {
            if j + 1 < self.slices.len() {
                (i, j + 1)
            } else if i > 0 {
                (i - 1, j)
            } else {
                return Err(Error::OutOfTimeRange {
                    t,
                    first: self.first_expiry(),
                    last: self.last_expiry(),
                });
            }
        } else {
            (i, j)
        };
        let (s1, s2) = (&self.slices[i], &self.slices[j]);
        let f_t = self.forward(t)?;
        let k1 = strike * s1.forward / f_t;
        let k2 = strike * s2.forward / f_t;
        let c1 = s1.price_call(k1)?;
        let c2 = s2.price_call(k2)?;
        let numerator = c2 / k2 - c1 / k1;
        if numerator < -1e-12 {
            return Err(Error::CalendarArbitrage {
                strike,
                t,
                numerator,
            });
        }
        let f1 = s1.density(k1)?;
        let f2 = s2.density(k2)?;
        let denominator = (t - s1.t) * k2 * f2 + (s2.t - t) * k1 * f1;
        if denominator < 1e-300 {
            return Err(Error::ZeroDensity { strike, t });
        }
        Ok((2.0 * numerator.max(0.0) / denominator).sqrt())
    }

    /// Check the discrete calendar-spread condition
    /// C(K2,t2)/K2 >= C(K1,t1)/K1 at constant forward moneyness for every
    /// adjacent pair, on a geometric moneyness grid. Violations are reported,
    /// never repaired.
    pub fn calendar_violations(
        &self,
        moneyness_lo: f64,
        moneyness_hi: f64,
        points: usize,
    ) -> Result<Vec<CalendarViolation>> {
        if !(moneyness_lo > 0.0 && moneyness_hi > moneyness_lo) || points < 2 {
            return Err(Error::InvalidInput("bad moneyness grid".into()));
        }
        let ratio = (moneyness_hi / moneyness_lo).powf(1.0 / (points - 1) as f64);
        let mut out = Vec::new();
        for pair in 0..self.slices.len() - 1 {
            let (s1, s2) = (&self.slices[pair], &self.slices[pair + 1]);
            let mut m = moneyness_lo;
            for _ in 0..points {
                let k1 = m * s1.forward;
                let k2 = m * s2.forward;
                let (c1, c2) = match (s1.price_call(k1), s2.price_call(k2)) {
                    (Ok(a), Ok(b)) => (a, b),
                    // Strikes outside a variant's admissible domain do not
                    // constitute evidence either way.
                    _ => {
                        m *= ratio;
                        continue;
                    }
                };
                let earlier = c1 / k1;
                let later = c2 / k2;
                if later < earlier - 1e-12 {
                    out.push(CalendarViolation {
                        pair,
                        moneyness: m,
                        earlier,
                        later,
                    });
                }
                m *= ratio;
            }
        }
        Ok(out)
    }

    /// Vectorized local volatility with per-cell error codes.
    pub fn local_vol_surface(&self, strikes: &[f64], times: &[f64]) -> Surface {
        let cells: Vec<Vec<SurfaceCell>> = times
            .par_iter()
            .map(|&t| {
                strikes
                    .iter()
                    .map(|&k| match self.dupire_local_vol(k, t) {
                        Ok(v) => SurfaceCell::Value(v),
                        Err(e) => SurfaceCell::Flagged(error_code(&e)),
                    })
                    .collect()
            })
            .collect();
        Surface {
            strikes: strikes.to_vec(),
            times: times.to_vec(),
            cells,
        }
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::OutOfTimeRange { .. } => "range",
        Error::CalendarArbitrage { .. } => "calendar",
        Error::ZeroDensity { .. } => "zero_density",
        Error::UnsupportedStrike { .. } => "strike",
        Error::InversionFailure(_) | Error::NoRealRoot { .. } => "inversion",
        _ => "error",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceCell {
    Value(f64),
    Flagged(&'static str),
}

/// Local-volatility grid with per-cell error codes.
#[derive(Debug, Clone)]
pub struct Surface {
    pub strikes: Vec<f64>,
    pub times: Vec<f64>,
    /// cells[time_index][strike_index]
    pub cells: Vec<Vec<SurfaceCell>>,
}

impl Surface {
    /// CSV: header row of strikes, first column of times, flagged cells as
    /// `NA:<code>`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "t")?;
        for k in &self.strikes {
            write!(out, ",{k}")?;
        }
        writeln!(out)?;
        for (row, t) in self.cells.iter().zip(self.times.iter()) {
            write!(out, "{t}")?;
            for cell in row {
                match cell {
                    SurfaceCell::Value(v) => write!(out, ",{v}")?,
                    SurfaceCell::Flagged(code) => write!(out, ",NA:{code}")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
