//! Modified Bessel functions and the averaged Cole-Hopf propagator.
//!
//! On the infinite lattice the mean of `Z~_k = e^{mu t} Z_k` solves the
//! discrete heat equation with diffusion `D = sqrt(alpha (alpha + 1))`, whose
//! kernel is `e^{-x} I_n(x)` with `x = 2 t D`. On a finite chain the kernel is
//! only faithful while the light cone stays away from both ends.

use crate::chain::{
    cole_hopf_op, cole_hopf_params, height_value, pointer_density, Chain, OccupationConfig,
};
use crate::classical::{classical_generator, master_evolve, Boundary};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, expectation, GeneratorSpec};
use crate::real::Real;

pub const MAX_BESSEL_ORDER: u32 = 200;
pub const MAX_BESSEL_ARGUMENT: f64 = 700.0;
/// Below this argument the power series is summed directly.
const SERIES_LIMIT: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BesselMethod {
    Series,
    DownwardRecurrence,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval<T> {
    pub order: i32,
    pub x: T,
    pub value: T,
    pub method: BesselMethod,
}

fn check_bessel_args<T: Real>(n: i32, x: T) -> Result<()> {
    if n.unsigned_abs() > MAX_BESSEL_ORDER {
        return Err(Error::Domain(format!("Bessel order {n} outside |n| <= {MAX_BESSEL_ORDER}")));
    }
    if !(x >= T::zero() && x <= T::lit(MAX_BESSEL_ARGUMENT)) {
        return Err(Error::Domain(format!(
            "Bessel argument {x} outside [0, {MAX_BESSEL_ARGUMENT}]"
        )));
    }
    Ok(())
}

/// `e^{-x} I_n(x)` from the power series. Every term is positive, so the sum
/// carries no cancellation.
fn scaled_series<T: Real>(n: u32, x: T) -> T {
    if x == T::zero() {
        return if n == 0 { T::one() } else { T::zero() };
    }
    let half = x * T::half();
    // log of the leading term (x/2)^n / n!
    let mut log_lead = T::from_count(n as usize) * half.ln();
    for k in 2..=n as usize {
        log_lead = log_lead - T::from_count(k).ln();
    }
    let q = half * half;
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = 0usize;
    loop {
        k += 1;
        term = term * q / (T::from_count(k) * T::from_count(k + n as usize));
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    (log_lead - x + sum.ln()).exp()
}

/// `e^{-x} I_n(x)` for `n = 0..=nmax` by Miller's downward recurrence,
/// normalized with `e^{-x} (I_0 + 2 sum_{k>=1} I_k) = 1`.
fn scaled_recurrence<T: Real>(nmax: u32, x: T) -> Vec<T> {
    let top = nmax.max(x.to_u32().unwrap_or(u32::MAX / 4));
    let start = 2 * (top + 15 + (40.0 * top as f64).sqrt() as u32);
    let two_over_x = T::two() / x;
    let big = T::lit(1e30);
    let mut out = vec![T::zero(); nmax as usize + 1];
    let (mut above, mut current) = (T::zero(), T::lit(1e-30));
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        let below = T::from_count(k as usize) * two_over_x * current + above;
        above = current;
        current = below;
        // `above` now holds I_k, `current` holds I_{k-1}.
        if k <= nmax {
            out[k as usize] = above;
        }
        norm = norm + T::two() * above;
        if current > big {
            let s = T::one() / big;
            current = current * s;
            above = above * s;
            norm = norm * s;
            for v in out.iter_mut() {
                *v = *v * s;
            }
        }
    }
    out[0] = current;
    norm = norm + current;
    out.iter().map(|&v| v / norm).collect()
}

/// `I_n(x)` to about `1e-12` relative accuracy (values below the smallest
/// normal double flush to zero). `I_{-n} = I_n`.
pub fn bessel_i<T: Real>(n: i32, x: T) -> Result<T> {
    Ok(bessel_eval(n, x)?.value)
}

pub fn bessel_eval<T: Real>(n: i32, x: T) -> Result<BesselEval<T>> {
    check_bessel_args(n, x)?;
    let m = n.unsigned_abs();
    let (scaled, method) = if x <= T::lit(SERIES_LIMIT) {
        (scaled_series(m, x), BesselMethod::Series)
    } else {
        (scaled_recurrence(m, x)[m as usize], BesselMethod::DownwardRecurrence)
    };
    Ok(BesselEval {
        order: n,
        x,
        value: scaled * x.exp(),
        method,
    })
}

/// `e^{-x} I_n(x)` for `n = 0..=nmax`.
pub fn scaled_bessel_sequence<T: Real>(nmax: u32, x: T) -> Result<Vec<T>> {
    check_bessel_args(nmax as i32, x)?;
    if x <= T::lit(SERIES_LIMIT) {
        Ok((0..=nmax).map(|n| scaled_series(n, x)).collect())
    } else {
        Ok(scaled_recurrence(nmax, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorValue<T> {
    pub value: T,
    /// Bound on the contribution of the discarded kernel tail.
    pub truncation_bound: T,
    /// Largest `|n|` kept in the kernel.
    pub reach: usize,
}

const KERNEL_CUTOFF: f64 = 1e-14;

/// `sum_l e^{-x} I_{k-l}(x) z0(l)` with `x = 2 t sqrt(alpha (alpha + 1))`.
///
/// `z0[l - 1]` is the initial value at site `l`; outside `1..=L` the data
/// continue with the nearer boundary value. The kernel is cut where its
/// weight drops below `1e-14`.
pub fn bessel_propagator<T: Real>(alpha: T, t: T, k: usize, z0: &[T]) -> Result<PropagatorValue<T>> {
    let params = cole_hopf_params(alpha)?;
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::Domain(format!("time {t} must be finite and >= 0")));
    }
    let l = z0.len();
    if !(1..=l).contains(&k) {
        return Err(Error::Index(format!("site {k} outside 1..={l}")));
    }
    let x = T::two() * t * params.diffusion;
    // Grow the kernel until the weight and its ratio tail are both small.
    let cutoff = T::lit(KERNEL_CUTOFF);
    let mut reach = 8u32;
    let weights = loop {
        let w = scaled_bessel_sequence(reach, x)?;
        let last = w[reach as usize];
        let q = x / (T::two() * T::from_count(reach as usize + 1));
        if (last < cutoff && q < T::half()) || reach == MAX_BESSEL_ORDER {
            break w;
        }
        reach = (reach * 2).min(MAX_BESSEL_ORDER);
    };
    let mut n_keep = weights.len() - 1;
    while n_keep > 0 && weights[n_keep] < cutoff && weights[n_keep - 1] < cutoff {
        n_keep -= 1;
    }
    let at = |site: i64| -> T { z0[(site.clamp(1, l as i64) - 1) as usize] };
    let mut value = weights[0] * at(k as i64);
    for n in 1..=n_keep {
        let off = n as i64;
        value = value + weights[n] * (at(k as i64 - off) + at(k as i64 + off));
    }
    // I_{n+1}/I_n <= x / (2 (n + 1)) bounds the geometric tail.
    let q = x / (T::two() * T::from_count(n_keep + 1));
    let zmax = z0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let truncation_bound = if q < T::one() {
        T::two() * zmax * weights[n_keep] * q / (T::one() - q)
    } else {
        T::infinity()
    };
    Ok(PropagatorValue {
        value,
        truncation_bound,
        reach: n_keep,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub bessel: f64,
    pub truncation_bound: f64,
    /// `e^{mu t} E[Z_k]` from the classical master equation.
    pub classical: f64,
    /// Same quantity from the full Lindblad evolution, when it was run.
    pub quantum: Option<f64>,
    pub bessel_vs_classical: f64,
    pub quantum_vs_classical: Option<f64>,
    /// `min(k - 1, L - k) - (2 t D + 5)`; the row is asserted only if positive.
    pub light_cone_margin: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub length: usize,
    pub alpha: f64,
    pub site: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Largest Bessel-vs-classical difference over admissible rows.
    pub fn max_admissible_difference(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.admissible)
            .map(|r| r.bessel_vs_classical)
            .reduce(f64::max)
    }

    pub fn max_quantum_difference(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.quantum_vs_classical)
            .reduce(f64::max)
    }
}

/// Largest chain on which the full density-matrix path is run.
pub const FULL_QUANTUM_MAX_SITES: usize = 9;
/// Light-cone safety margin, in kernel e-foldings.
pub const LIGHT_CONE_SAFETY: f64 = 5.0;

/// Compares the Bessel propagator with the exact mean dynamics started from
/// a pointer state. The classical-sector path always runs; the full Lindblad
/// path runs as a second opinion when `full_quantum` is set and `L <= 9`.
pub fn bessel_vs_evolution(
    length: usize,
    alpha: f64,
    init: &OccupationConfig,
    k: usize,
    times: &[f64],
    full_quantum: bool,
) -> Result<ComparisonTable> {
    let chain = Chain::new(length)?;
    init.check_chain(&chain)?;
    chain.check_site(k)?;
    let params = cole_hopf_params(alpha)?;
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
        || times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Domain("comparison times must be >= 0 and strictly increasing".into()));
    }
    if full_quantum && length > FULL_QUANTUM_MAX_SITES {
        return Err(Error::Size(format!(
            "full density-matrix path is capped at {FULL_QUANTUM_MAX_SITES} sites"
        )));
    }

    let b0 = init.index();
    let z0: Vec<f64> = chain
        .sites()
        .map(|l| (params.delta * height_value::<f64>(b0, l)).exp())
        .collect();
    let zk: Vec<f64> = (0..chain.dim())
        .map(|b| (params.delta * height_value::<f64>(b, k)).exp())
        .collect();

    // classical sector
    let gen = classical_generator(length, alpha, Boundary::Closed)?;
    let mut p = vec![0.0; chain.dim()];
    p[b0] = 1.0;
    let mut t_prev = 0.0;
    let mut classical = Vec::with_capacity(times.len());
    for &t in times {
        p = master_evolve(&gen, &p, t - t_prev)?;
        t_prev = t;
        let mean: f64 = p.iter().zip(&zk).map(|(a, b)| a * b).sum();
        classical.push((params.mu * t).exp() * mean);
    }

    let quantum: Option<Vec<f64>> = if full_quantum && !times.is_empty() {
        let spec = GeneratorSpec::new(chain, alpha)?;
        let rho0 = pointer_density(&chain, init)?;
        let horizon = *times.last().expect("non-empty");
        let result = evolve(&spec, &rho0, horizon, times)?;
        let obs = cole_hopf_op(&chain, k, alpha)?;
        let mut vals = Vec::with_capacity(times.len());
        for (t, rho) in result.times.iter().zip(&result.states) {
            vals.push((params.mu * t).exp() * expectation(rho, &obs)?.re);
        }
        Some(vals)
    } else {
        None
    };

    let distance = (k - 1).min(length - k) as f64;
    let mut rows = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let prop = bessel_propagator(alpha, t, k, &z0)?;
        let reach = 2.0 * t * params.diffusion + LIGHT_CONE_SAFETY;
        let margin = distance - reach;
        let q = quantum.as_ref().map(|v| v[i]);
        rows.push(ComparisonRow {
            t,
            bessel: prop.value,
            truncation_bound: prop.truncation_bound,
            classical: classical[i],
            quantum: q,
            bessel_vs_classical: (prop.value - classical[i]).abs(),
            quantum_vs_classical: q.map(|v| (v - classical[i]).abs()),
            light_cone_margin: margin,
            admissible: margin > 0.0,
        });
        if margin <= 0.0 {
            log::info!("t = {t}: light cone reaches the boundary (margin {margin:.3}); row flagged");
        }
    }
    Ok(ComparisonTable {
        length,
        alpha,
        site: k,
        rows,
    })
}
