//! Bias-free Monte-Carlo simulation of the CLV model.
//!
//! Per path: draw one uniform per observation date, map through the inverse
//! normal CDF, correlate (either by the increment recursion for
//! Wiener/piecewise drivers or through the factor matrix for explicit
//! correlations — the two constructions agree in law), and push each
//! normalized coordinate through its slice's asset map. No time stepping and
//! no discretization bias.
//!
//! Paths are processed in fixed-size chunks; chunk accumulators are reduced
//! in index order, so results are bit-identical for any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::slice::DriverMap;

use super::rng::PathRng;
use super::{ClvModel, Correlation};

/// Payoffs supported by the engine. Indices are zero-based slice positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contract {
    /// S(t_i)
    Terminal { index: usize },
    /// S(t_target) / S(t_base), base earlier than target.
    Performance { base: usize, target: usize },
    /// (S(t_target) / S(t_base)) 1{S(t_base) > barrier}
    BarrierPerformance {
        base: usize,
        target: usize,
        barrier: f64,
    },
    /// 1{S(t_index) > barrier}
    Digital { index: usize, barrier: f64 },
}

impl Contract {
    fn max_index(&self) -> usize {
        match *self {
            Contract::Terminal { index } | Contract::Digital { index, .. } => index,
            Contract::Performance { base, target }
            | Contract::BarrierPerformance { base, target, .. } => base.max(target),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Contract::Terminal { index } => format!("terminal:{}", index + 1),
            Contract::Performance { base, target } => {
                format!("perf:{}:{}", base + 1, target + 1)
            }
            Contract::BarrierPerformance {
                base,
                target,
                barrier,
            } => format!("barrier-perf:{}:{}:{}", base + 1, target + 1, barrier),
            Contract::Digital { index, barrier } => format!("digital:{}:{}", index + 1, barrier),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub paths: u64,
    pub seed: u64,
    /// Keep paths whose performance denominator is not positive instead of
    /// failing. Such paths are counted in the result; this is how the
    /// non-convergence of performance contracts under the plain Gaussian
    /// collocation is demonstrated.
    pub allow_nonpositive: bool,
}

/// Monte-Carlo estimate with its sampling error.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub mean: f64,
    pub std_error: f64,
    pub paths: u64,
    pub seed: u64,
    /// Paths whose performance denominator was not positive.
    pub nonpositive_paths: u64,
}

const CHUNK: u64 = 16_384;

#[derive(Clone, Copy, Default)]
struct Accum {
    sum: f64,
    sum_sq: f64,
    nonpositive: u64,
}

/// Run the contract over `paths` paths. Deterministic given (seed, paths),
/// independent of the rayon worker count.
pub fn simulate(model: &ClvModel, contract: Contract, opts: &SimOptions) -> Result<SimulationResult> {
    let m = model.slices().len();
    if contract.max_index() >= m {
        return Err(Error::InvalidInput(format!(
            "contract references slice {} of a {m}-slice model",
            contract.max_index() + 1
        )));
    }
    if let Contract::Performance { base, target }
    | Contract::BarrierPerformance { base, target, .. } = contract
    {
        if base >= target {
            return Err(Error::InvalidInput(format!(
                "performance base {} must precede target {}",
                base + 1,
                target + 1
            )));
        }
    }
    if opts.paths < 2 {
        return Err(Error::InvalidInput("need at least 2 paths".into()));
    }
    let maps: Vec<DriverMap<'_>> = model
        .slices()
        .iter()
        .map(|s| s.driver_map())
        .collect::<Result<_>>()?;
    let times = model.times();
    // Increment construction for Wiener/piecewise drivers, factor matrix for
    // explicit correlations.
    let std_increments: Option<Vec<f64>> = match model.correlation() {
        Correlation::Wiener => {
            let mut prev = 0.0;
            Some(
                times
                    .iter()
                    .map(|t| {
                        let dt = (t - prev).sqrt();
                        prev = *t;
                        dt
                    })
                    .collect(),
            )
        }
        Correlation::PiecewiseVols(vols) => {
            let cum = super::cumulative_variances(&times, vols)?;
            let mut prev = 0.0;
            Some(
                cum.iter()
                    .map(|c| {
                        let d = (c - prev).sqrt();
                        prev = *c;
                        d
                    })
                    .collect(),
            )
        }
        Correlation::Explicit(_) => None,
    };
    let cum_sqrt: Vec<f64> = match model.correlation() {
        Correlation::Wiener => times.iter().map(|t| t.sqrt()).collect(),
        Correlation::PiecewiseVols(vols) => super::cumulative_variances(&times, vols)?
            .iter()
            .map(|c| c.sqrt())
            .collect(),
        Correlation::Explicit(_) => vec![1.0; m],
    };
    let factor = model.factor();

    let n_chunks = opts.paths.div_ceil(CHUNK);
    let accums: Vec<Accum> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = ((chunk + 1) * CHUNK).min(opts.paths);
            let mut acc = Accum::default();
            let mut z = vec![0.0f64; m];
            let mut x = vec![0.0f64; m];
            for p in start..end {
                let mut rng = PathRng::new(opts.seed, p);
                for zk in z.iter_mut() {
                    *zk = rng.next_gaussian();
                }
                match &std_increments {
                    Some(inc) => {
                        let mut level = 0.0;
                        for k in 0..m {
                            level += inc[k] * z[k];
                            x[k] = level / cum_sqrt[k];
                        }
                    }
                    None => {
                        for k in 0..m {
                            let mut s = 0.0;
                            for (l, zl) in z.iter().enumerate() {
                                s += factor[(k, l)] * zl;
                            }
                            x[k] = s;
                        }
                    }
                }
                let value = match contract {
                    Contract::Terminal { index } => maps[index].apply(x[index]),
                    Contract::Performance { base, target } => {
                        let den = maps[base].apply(x[base]);
                        if den <= 0.0 {
                            acc.nonpositive += 1;
                        }
                        maps[target].apply(x[target]) / den
                    }
                    Contract::BarrierPerformance {
                        base,
                        target,
                        barrier,
                    } => {
                        let den = maps[base].apply(x[base]);
                        if den > barrier {
                            if den <= 0.0 {
                                acc.nonpositive += 1;
                            }
                            maps[target].apply(x[target]) / den
                        } else {
                            0.0
                        }
                    }
                    Contract::Digital { index, barrier } => {
                        if maps[index].apply(x[index]) > barrier {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                acc.sum += value;
                acc.sum_sq += value * value;
            }
            acc
        })
        .collect();

    // Deterministic reduction in chunk order.
    let mut total = Accum::default();
    for a in accums {
        total.sum += a.sum;
        total.sum_sq += a.sum_sq;
        total.nonpositive += a.nonpositive;
    }
    if total.nonpositive > 0 && !opts.allow_nonpositive {
        return Err(Error::NonPositiveDenominator {
            count: total.nonpositive,
            paths: opts.paths,
        });
    }
    let n = opts.paths as f64;
    let mean = total.sum / n;
    let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(SimulationResult {
        mean,
        std_error: (var / n).sqrt(),
        paths: opts.paths,
        seed: opts.seed,
        nonpositive_paths: total.nonpositive,
    })
}

/// Convergence study: one result per path count, common seed, shared
/// substreams (smaller runs are prefixes of larger ones).
pub fn simulate_sweep(
    model: &ClvModel,
    contract: Contract,
    counts: &[u64],
    seed: u64,
    allow_nonpositive: bool,
) -> Result<Vec<SimulationResult>> {
    counts
        .iter()
        .map(|&paths| {
            simulate(
                model,
                contract,
                &SimOptions {
                    paths,
                    seed,
                    allow_nonpositive,
                },
            )
        })
        .collect()
}
