//! Model file (JSON) and quote file (CSV) formats.
//!
//! The model file persists calibrated slices plus an optional correlation
//! block and round-trips losslessly. Updates go through a
//! write-temp-then-rename so a failed run never corrupts an existing model.

use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibrate::{Quote, QuoteSlice};
use crate::clv::Correlation;
use crate::error::{Error, Result};
use crate::math::poly::MonotonicPolynomial;
use crate::slice::{BoundarySpec, CollocationSlice, LognormalTail};

pub const SCHEMA_VERSION: u32 = 1;

/// ACT/365 year fraction between two dates.
pub fn act365(valuation: NaiveDate, expiry: NaiveDate) -> f64 {
    (expiry - valuation).num_days() as f64 / 365.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub schema_version: u32,
    pub valuation_date: NaiveDate,
    pub slices: Vec<SliceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SliceRecord {
    pub expiry: NaiveDate,
    pub year_fraction: f64,
    pub forward: f64,
    /// Ascending-power collocation coefficients.
    pub coeffs: Vec<f64>,
    pub boundary: BoundaryRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BoundaryRecord {
    None,
    Absorption {
        level: f64,
    },
    ReflectedAbsorption {
        level: f64,
    },
    Reflection {
        level: f64,
    },
    ExpExtrapolation {
        x_cut: f64,
        alpha: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    Lognormal {
        sigma_x: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        extrapolation: Option<TailRecord>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TailRecord {
    pub c_cut: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CorrelationRecord {
    Wiener,
    Explicit { matrix: Vec<Vec<f64>> },
    Piecewise { vols: Vec<f64> },
}

impl From<&BoundarySpec> for BoundaryRecord {
    fn from(b: &BoundarySpec) -> Self {
        match b {
            BoundarySpec::None => BoundaryRecord::None,
            BoundarySpec::Absorption { level } => BoundaryRecord::Absorption { level: *level },
            BoundarySpec::ReflectedAbsorption { level } => {
                BoundaryRecord::ReflectedAbsorption { level: *level }
            }
            BoundarySpec::Reflection { level } => BoundaryRecord::Reflection { level: *level },
            BoundarySpec::ExpExtrapolation {
                x_cut,
                alpha,
                beta,
                cap,
            } => BoundaryRecord::ExpExtrapolation {
                x_cut: *x_cut,
                alpha: *alpha,
                beta: *beta,
                cap: *cap,
            },
            BoundarySpec::Lognormal {
                sigma_x,
                extrapolation,
            } => BoundaryRecord::Lognormal {
                sigma_x: *sigma_x,
                extrapolation: extrapolation.as_ref().map(|t| TailRecord {
                    c_cut: t.c_cut,
                    alpha: t.alpha,
                    beta: t.beta,
                }),
            },
        }
    }
}

impl From<BoundaryRecord> for BoundarySpec {
    fn from(b: BoundaryRecord) -> Self {
        match b {
            BoundaryRecord::None => BoundarySpec::None,
            BoundaryRecord::Absorption { level } => BoundarySpec::Absorption { level },
            BoundaryRecord::ReflectedAbsorption { level } => {
                BoundarySpec::ReflectedAbsorption { level }
            }
            BoundaryRecord::Reflection { level } => BoundarySpec::Reflection { level },
            BoundaryRecord::ExpExtrapolation {
                x_cut,
                alpha,
                beta,
                cap,
            } => BoundarySpec::ExpExtrapolation {
                x_cut,
                alpha,
                beta,
                cap,
            },
            BoundaryRecord::Lognormal {
                sigma_x,
                extrapolation,
            } => BoundarySpec::Lognormal {
                sigma_x,
                extrapolation: extrapolation.map(|t| LognormalTail {
                    c_cut: t.c_cut,
                    alpha: t.alpha,
                    beta: t.beta,
                }),
            },
        }
    }
}

impl ModelFile {
    pub fn from_slices(
        valuation_date: NaiveDate,
        slices: &[(NaiveDate, CollocationSlice)],
        correlation: Option<&Correlation>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            valuation_date,
            slices: slices
                .iter()
                .map(|(expiry, s)| SliceRecord {
                    expiry: *expiry,
                    year_fraction: s.t,
                    forward: s.forward,
                    coeffs: s.poly.coeffs().to_vec(),
                    boundary: (&s.boundary).into(),
                })
                .collect(),
            correlation: correlation.map(|c| match c {
                Correlation::Wiener => CorrelationRecord::Wiener,
                Correlation::Explicit(m) => CorrelationRecord::Explicit {
                    matrix: (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                        .collect(),
                },
                Correlation::PiecewiseVols(v) => CorrelationRecord::Piecewise { vols: v.clone() },
            }),
        }
    }

    /// Reconstruct the domain slices, validating each one.
    pub fn to_slices(&self) -> Result<Vec<CollocationSlice>> {
        self.slices
            .iter()
            .map(|r| {
                let boundary: BoundarySpec = r.boundary.clone().into();
                let poly =
                    MonotonicPolynomial::new(r.coeffs.clone(), boundary.polynomial_domain())?;
                CollocationSlice::new(r.year_fraction, r.forward, poly, boundary)
            })
            .collect()
    }

    pub fn correlation(&self) -> Result<Option<Correlation>> {
        match &self.correlation {
            None => Ok(None),
            Some(CorrelationRecord::Wiener) => Ok(Some(Correlation::Wiener)),
            Some(CorrelationRecord::Piecewise { vols }) => {
                Ok(Some(Correlation::PiecewiseVols(vols.clone())))
            }
            Some(CorrelationRecord::Explicit { matrix }) => {
                let n = matrix.len();
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::ModelFile("correlation matrix is not square".into()));
                }
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in matrix.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        m[(i, j)] = *v;
                    }
                }
                Ok(Some(Correlation::Explicit(m)))
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported schema version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }

    /// Atomic save: write a temporary sibling, then rename over the target.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::ModelFile(e.to_string()))?;
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        fs::write(&tmp, text.as_bytes())?;
        match fs::rename(&tmp, path) {
            Ok(()) => Ok(()),
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                Err(e.into())
            }
        }
    }
}

/// Parse a quote CSV (`expiry,forward,strike,vol,weight`) into per-expiry
/// quote slices ordered by expiry.
pub fn read_quotes<R: Read>(reader: R, valuation: NaiveDate) -> Result<Vec<QuoteSlice>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let expected = ["expiry", "forward", "strike", "vol", "weight"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {:?}, got {:?}", expected.join(","), got.join(",")),
            });
        }
    }
    struct Row {
        expiry: NaiveDate,
        forward: f64,
        quote: Quote,
    }
    let mut rows: Vec<Row> = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", record.len())));
        }
        let expiry = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad expiry '{}': {e}", &record[0])))?;
        let field = |idx: usize, name: &str| -> Result<f64> {
            record[idx]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad {name} '{}': {e}", &record[idx])))
        };
        let forward = field(1, "forward")?;
        let strike = field(2, "strike")?;
        let vol = field(3, "vol")?;
        let weight = field(4, "weight")?;
        if !(forward > 0.0) {
            return Err(parse_err(format!("forward must be positive, got {forward}")));
        }
        if !(strike > 0.0) {
            return Err(parse_err(format!("strike must be positive, got {strike}")));
        }
        if !(vol > 0.0) {
            return Err(parse_err(format!("vol must be positive, got {vol}")));
        }
        if !(weight >= 0.0) {
            return Err(parse_err(format!("weight must be nonnegative, got {weight}")));
        }
        if expiry <= valuation {
            return Err(parse_err(format!(
                "expiry {expiry} not after valuation {valuation}"
            )));
        }
        rows.push(Row {
            expiry,
            forward,
            quote: Quote {
                strike,
                vol,
                weight,
            },
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no quotes in file".into(),
        });
    }
    // Group rows by expiry, preserving in-file strike order per expiry.
    let mut slices: Vec<QuoteSlice> = Vec::new();
    for row in rows {
        let existing = slices
            .iter_mut()
            .find(|s| s.expiry == Some(row.expiry));
        match existing {
            Some(slice) => {
                if (slice.forward - row.forward).abs() > 1e-12 * slice.forward {
                    return Err(Error::InvalidInput(format!(
                        "inconsistent forwards {} and {} for expiry {}",
                        slice.forward, row.forward, row.expiry
                    )));
                }
                slice.quotes.push(row.quote);
            }
            None => slices.push(QuoteSlice {
                expiry: Some(row.expiry),
                t: act365(valuation, row.expiry),
                forward: row.forward,
                quotes: vec![row.quote],
            }),
        }
    }
    slices.sort_by(|a, b| a.expiry.cmp(&b.expiry));
    for s in &slices {
        s.validate()?;
    }
    Ok(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::poly::Domain;

    fn sample_model() -> ModelFile {
        let poly = MonotonicPolynomial::new(vec![100.0, 10.0, 0.0, 0.3], Domain::RealLine).unwrap();
        let slice =
            CollocationSlice::with_implied_forward(0.5, poly, BoundarySpec::None).unwrap();
        let expiry = NaiveDate::from_ymd_opt(2018, 12, 15).unwrap();
        ModelFile::from_slices(
            NaiveDate::from_ymd_opt(2018, 6, 15).unwrap(),
            &[(expiry, slice)],
            Some(&Correlation::Wiener),
        )
    }

    #[test]
    fn json_round_trip_is_identity() {
        let model = sample_model();
        let text = serde_json::to_string(&model).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(model, back);
        let again = serde_json::to_string(&back).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn slices_reconstruct() {
        let model = sample_model();
        let slices = model.to_slices().unwrap();
        assert_eq!(slices.len(), 1);
        assert!((slices[0].t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quote_csv_parses_and_validates() {
        let valuation = NaiveDate::from_ymd_opt(2018, 6, 15).unwrap();
        let text = "expiry,forward,strike,vol,weight\n\
                    2018-07-20,357.0,300,0.35,1\n\
                    2018-07-20,357.0,360,0.30,1\n\
                    2019-01-18,356.0,250,0.40,1\n\
                    2019-01-18,356.0,350,0.33,1\n";
        let slices = read_quotes(text.as_bytes(), valuation).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].quotes.len(), 2);
        assert!((slices[0].t - 35.0 / 365.0).abs() < 1e-15);

        let bad = "expiry,forward,strike,vol,weight\n\
                   2018-07-20,357.0,360,0.30,1\n\
                   2018-07-20,357.0,300,0.35,1\n";
        assert!(read_quotes(bad.as_bytes(), valuation).is_err());

        let neg = "expiry,forward,strike,vol,weight\n\
                   2018-07-20,357.0,300,-0.35,1\n";
        match read_quotes(neg.as_bytes(), valuation) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
