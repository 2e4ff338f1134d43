//! Height-fluctuation growth and exponent fits.

use super::monte_carlo::ClassicalEnsemble;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Range(format!("need at least 3 points to fit, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|&a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Range("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_stderr = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// `n` logarithmically spaced times from `t0` to `t1` inclusive.
pub fn log_spaced_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t1],
        _ => {
            let (a, b) = (t0.ln(), t1.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthStats {
    pub times: Vec<f64>,
    pub mean_height: Vec<f64>,
    /// Ensemble variance of the integrated bond current, averaged over the
    /// tracked bonds.
    pub var_height: Vec<f64>,
    pub n_samples: usize,
    pub beta: f64,
    pub beta_stderr: f64,
    pub fit_points: usize,
}

/// Variance growth of the height (integrated bond current) and the exponent
/// `beta` from `var ~ t^(2 beta)`, fitted on log-log axes inside `window`.
pub fn height_growth_stats(ensemble: &ClassicalEnsemble, window: (f64, f64)) -> Result<GrowthStats> {
    let trajs = &ensemble.trajectories;
    let n = trajs.len();
    if n < 2 {
        return Err(Error::Range(format!("need at least 2 trajectories, got {n}")));
    }
    let bonds = ensemble.tracked_bonds.len();
    if bonds == 0 {
        return Err(Error::Range("no tracked bonds in the ensemble".into()));
    }
    let times = trajs[0].times.clone();
    if trajs.iter().any(|t| t.times != times) {
        return Err(Error::Range("trajectories were sampled at different times".into()));
    }
    let (w0, w1) = window;
    let slack = 1e-9 * w1.abs().max(1.0);
    let (first, last) = (times[0], *times.last().expect("non-empty sample times"));
    if !(w0 < w1) || w0 < first - slack || w1 > last + slack {
        return Err(Error::Range(format!(
            "fit window [{w0}, {w1}] is not inside the sampled range [{first}, {last}]"
        )));
    }

    let nf = n as f64;
    let mut mean_height = Vec::with_capacity(times.len());
    let mut var_height = Vec::with_capacity(times.len());
    for s in 0..times.len() {
        let mut mean_acc = 0.0;
        let mut var_acc = 0.0;
        for b in 0..bonds {
            let vals = trajs.iter().map(|t| t.currents[s][b] as f64);
            let mean = vals.clone().sum::<f64>() / nf;
            let var = vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            mean_acc += mean;
            var_acc += var;
        }
        mean_height.push(mean_acc / bonds as f64);
        var_height.push(var_acc / bonds as f64);
    }

    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&t, &v) in times.iter().zip(&var_height) {
        if t >= w0 - slack && t <= w1 + slack {
            if !(v > 0.0) || t <= 0.0 {
                return Err(Error::Range(format!(
                    "variance {v} at t = {t} cannot enter a log-log fit"
                )));
            }
            lx.push(t.ln());
            ly.push(v.ln());
        }
    }
    let fit = least_squares(&lx, &ly)?;
    Ok(GrowthStats {
        times,
        mean_height,
        var_height,
        n_samples: n,
        beta: fit.slope / 2.0,
        beta_stderr: fit.slope_stderr / 2.0,
        fit_points: fit.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{Boundary, ClassicalState, HopRates, SampleOptions};

    #[test]
    fn least_squares_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 2.0).collect();
        let fit = least_squares(&x, &y).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-14);
        assert!((fit.intercept + 2.0).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-12);
        assert!(least_squares(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn log_spacing_hits_both_ends() {
        let t = log_spaced_times(100.0, 1000.0, 5);
        assert!((t[0] - 100.0).abs() < 1e-9);
        assert!((t[4] - 1000.0).abs() < 1e-9);
        assert!((t[2] - 1000f64.sqrt() * 10.0).abs() < 1e-9);
    }

    fn small_ensemble(rates: HopRates<f64>) -> crate::classical::ClassicalEnsemble {
        let l = 256;
        let opts = SampleOptions {
            sample_times: log_spaced_times(1.0, 40.0, 10),
            record_states: false,
            tracked_bonds: (1..=l).step_by(8).collect(),
        };
        let seeds: Vec<u64> = (0..60).collect();
        crate::classical::ClassicalEnsemble::run(
            l,
            rates,
            Boundary::Periodic,
            40.0,
            &seeds,
            &opts,
            |rng| ClassicalState::uniform_with_count(l, l / 2, Boundary::Periodic, rng),
        )
        .unwrap()
    }

    #[test]
    fn variance_grows_and_window_is_checked() {
        let ens = small_ensemble(HopRates::asep(0.0).unwrap());
        let stats = height_growth_stats(&ens, (4.0, 40.0)).unwrap();
        assert_eq!(stats.n_samples, 60);
        assert!(stats.var_height.windows(2).all(|w| w[1] >= w[0] * 0.9));
        assert!(stats.var_height.last() > stats.var_height.first());
        assert!(stats.beta > 0.1 && stats.beta < 0.5, "beta {}", stats.beta);
        // mean current of TASEP at half filling is 1/4 per unit time
        let t_end = *stats.times.last().unwrap();
        assert!((stats.mean_height.last().unwrap() / t_end - 0.25).abs() < 0.02);
        assert!(matches!(
            height_growth_stats(&ens, (0.5, 40.0)),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            height_growth_stats(&ens, (4.0, 400.0)),
            Err(Error::Range(_))
        ));
    }
}
