//! Monte Carlo occupation marginals against the master equation.

use super::generator::{classical_generator_with_rates, master_evolve, Boundary, HopRates};
use super::monte_carlo::{ClassicalEnsemble, ClassicalState, SampleOptions};
use crate::chain::occupied;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalRow {
    /// 1-based site.
    pub site: usize,
    pub sampled: f64,
    pub exact: f64,
    /// Binomial standard error `sqrt(p (1-p) / N)` at the exact marginal.
    pub sigma: f64,
    /// `|sampled - exact| / sigma`, zero when both agree and `sigma = 0`.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalComparison {
    pub length: usize,
    pub horizon: f64,
    pub samples: usize,
    pub rows: Vec<MarginalRow>,
}

impl MarginalComparison {
    pub fn max_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z).fold(0.0, f64::max)
    }
}

/// Site occupation probabilities at `horizon` from Gillespie trajectories
/// (one per seed) and from the master equation, closed boundary.
pub fn marginals_vs_master(
    init: &ClassicalState,
    rates: HopRates<f64>,
    horizon: f64,
    seeds: &[u64],
) -> Result<MarginalComparison> {
    if init.boundary != Boundary::Closed {
        return Err(Error::Config("marginal comparison needs a closed chain".into()));
    }
    let l = init.len();
    if seeds.len() < 2 {
        return Err(Error::Config("need at least two trajectories".into()));
    }
    let generator = classical_generator_with_rates(l, rates, Boundary::Closed)?;
    let start: usize = init
        .occupation
        .iter()
        .enumerate()
        .map(|(i, &o)| usize::from(o) << i)
        .sum();
    let mut p0 = vec![0.0; 1 << l];
    p0[start] = 1.0;
    let p = master_evolve(&generator, &p0, horizon)?;

    let options = SampleOptions {
        sample_times: vec![horizon],
        record_states: true,
        tracked_bonds: Vec::new(),
    };
    let ensemble = ClassicalEnsemble::run(l, rates, Boundary::Closed, horizon, seeds, &options, |_| {
        Ok(init.clone())
    })?;
    let n = seeds.len() as f64;
    let rows = (1..=l)
        .map(|site| {
            let exact: f64 = p
                .iter()
                .enumerate()
                .filter(|(b, _)| occupied(*b, site))
                .map(|(_, w)| w)
                .sum();
            let hits = ensemble
                .trajectories
                .iter()
                .filter(|t| t.states[0][site - 1])
                .count();
            let sampled = hits as f64 / n;
            let sigma = (exact * (1.0 - exact) / n).max(0.0).sqrt();
            let diff = (sampled - exact).abs();
            let z = if sigma > 0.0 {
                diff / sigma
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            MarginalRow {
                site,
                sampled,
                exact,
                sigma,
                z,
            }
        })
        .collect();
    Ok(MarginalComparison {
        length: l,
        horizon,
        samples: seeds.len(),
        rows,
    })
}
