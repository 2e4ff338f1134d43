//! Noise-averaged dynamics of the quantum chain.
//!
//! Jump operators, per edge `j`:
//!
//! ```text
//! c_j^dagger c_{j+1}   at rate 1 + alpha   (particle moves j+1 -> j)
//! c_{j+1}^dagger c_j   at rate alpha       (particle moves j -> j+1)
//! ```
//!
//! All jumps are monomials in the occupation basis and every `L^dagger L`
//! is diagonal, so both generators act on a `dim x dim` matrix in
//! `O(dim^2)` without forming any dense product.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::chain::{left_hop_monomial, pointer_density, right_hop_monomial, Chain, OccupationConfig};
use crate::classical::{classical_generator, master_evolve, Boundary, RateMatrix};
use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::monomial::MonomialOp;
use crate::operator::OperatorMatrix;
use crate::real::Real;
use crate::state::DensityMatrix;

#[derive(Clone, Debug)]
pub struct Jump<T> {
    pub edge: usize,
    pub rate: T,
    pub op: MonomialOp<T>,
    /// Preimage map: `inverse.apply(r) = Some((b, c))` iff `op |b> = c |r>`.
    inverse: MonomialOp<T>,
    /// `(b, r, c)` for every `op |b> = c |r>`.
    domain: Vec<(usize, usize, T)>,
}

#[derive(Clone, Debug)]
pub struct GeneratorSpec<T> {
    chain: Chain,
    alpha: T,
    jumps: Vec<Jump<T>>,
    /// Diagonal of `sum rate * L^dagger L`.
    decay: Vec<T>,
}

impl<T: Real> GeneratorSpec<T> {
    pub fn new(chain: Chain, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let mut jumps = Vec::new();
        for j in chain.edges() {
            jumps.push((j, T::one() + alpha, left_hop_monomial(&chain, j)?));
            if alpha > T::zero() {
                jumps.push((j, alpha, right_hop_monomial(&chain, j)?));
            }
        }
        let mut decay = vec![T::zero(); chain.dim()];
        let jumps = jumps
            .into_iter()
            .map(|(edge, rate, op)| {
                for (d, w) in decay.iter_mut().zip(op.column_weights()) {
                    *d = *d + rate * w;
                }
                let inverse = op.adjoint();
                let domain = op.domain().collect();
                Jump {
                    edge,
                    rate,
                    op,
                    inverse,
                    domain,
                }
            })
            .collect();
        Ok(Self {
            chain,
            alpha,
            jumps,
            decay,
        })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn jumps(&self) -> &[Jump<T>] {
        &self.jumps
    }

    pub fn dim(&self) -> usize {
        self.chain.dim()
    }

    /// Upper bound on the superoperator norm: twice the largest exit rate.
    pub fn norm_bound(&self) -> T {
        self.decay.iter().copied().fold(T::zero(), T::max) * T::two()
    }
}

/// `L*(O) = sum rate (L^dagger O L - 1/2 {L^dagger L, O})`.
pub fn adjoint_generator_apply<T: Real>(
    spec: &GeneratorSpec<T>,
    op: &OperatorMatrix<T>,
) -> Result<OperatorMatrix<T>> {
    check_dim(spec.dim(), op.dim())?;
    Ok(OperatorMatrix::new(adjoint_apply_matrix(spec, op.matrix())))
}

fn adjoint_apply_matrix<T: Real>(spec: &GeneratorSpec<T>, o: &CMatrix<T>) -> CMatrix<T> {
    let n = spec.dim();
    let src = o.as_slice();
    let half = T::half();
    let mut out = CMatrix::zeros(n);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let ki = spec.decay[i];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = src[i * n + j].scale(-half * (ki + spec.decay[j]));
            }
            // (L^dagger O L)_{ij} = c_i c_j O_{r_i r_j}
            for jump in &spec.jumps {
                let Some((ri, ci)) = jump.op.apply(i) else { continue };
                let w = jump.rate * ci;
                for &(j, rj, cj) in &jump.domain {
                    row[j] = row[j] + src[ri * n + rj].scale(w * cj);
                }
            }
        });
    out
}

/// `L(rho) = sum rate (L rho L^dagger - 1/2 {L^dagger L, rho})`.
pub fn schrodinger_generator_apply<T: Real>(
    spec: &GeneratorSpec<T>,
    rho: &DensityMatrix<T>,
) -> Result<CMatrix<T>> {
    check_dim(spec.dim(), rho.dim())?;
    Ok(schrodinger_apply_matrix(spec, rho.matrix()))
}

fn schrodinger_apply_matrix<T: Real>(spec: &GeneratorSpec<T>, rho: &CMatrix<T>) -> CMatrix<T> {
    let n = spec.dim();
    let mut out = CMatrix::zeros(n);
    schrodinger_apply_into(spec, rho, &mut out);
    out
}

fn schrodinger_apply_into<T: Real>(spec: &GeneratorSpec<T>, rho: &CMatrix<T>, out: &mut CMatrix<T>) {
    let n = spec.dim();
    let src = rho.as_slice();
    let half = T::half();
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(r, row)| {
            let kr = spec.decay[r];
            for (s, slot) in row.iter_mut().enumerate() {
                *slot = src[r * n + s].scale(-half * (kr + spec.decay[s]));
            }
            // (L rho L^dagger)_{r_i r_j} = c_i c_j rho_{ij}
            for jump in &spec.jumps {
                let Some((i, ci)) = jump.inverse.apply(r) else { continue };
                let w = jump.rate * ci;
                for &(j, rs, cj) in &jump.domain {
                    row[rs] = row[rs] + src[i * n + j].scale(w * cj);
                }
            }
        });
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorStats<T> {
    pub steps: usize,
    pub max_step: T,
    pub norm_bound: T,
    /// `steps * (h ||G||)^5 / 120`, the accumulated RK4 remainder bound.
    pub error_estimate: T,
    pub max_trace_correction: T,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult<T> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub stats: IntegratorStats<T>,
}

/// Target bound on `h^4 ||G||^4 T`.
const LOCAL_ERROR_BUDGET: f64 = 1e-12;
const MAX_STEPS: usize = 5_000_000;
const TRACE_CORRECTION_LIMIT: f64 = 1e-10;

/// Classical fourth-order Runge-Kutta with a fixed a-priori step.
///
/// Returns the states at `sample_times` (all in `[0, horizon]`, strictly
/// increasing); an empty list samples only the horizon.
pub fn evolve<T: Real>(
    spec: &GeneratorSpec<T>,
    rho0: &DensityMatrix<T>,
    horizon: T,
    sample_times: &[T],
) -> Result<EvolutionResult<T>> {
    check_dim(spec.dim(), rho0.dim())?;
    if !(horizon >= T::zero() && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be finite and >= 0")));
    }
    let samples: Vec<T> = if sample_times.is_empty() {
        vec![horizon]
    } else {
        sample_times.to_vec()
    };
    for (i, &t) in samples.iter().enumerate() {
        if t < T::zero() || t > horizon || (i > 0 && t <= samples[i - 1]) {
            return Err(Error::Domain(format!(
                "sample times must increase strictly within [0, {horizon}]"
            )));
        }
    }

    let g = spec.norm_bound();
    let h_max = if g > T::zero() && horizon > T::zero() {
        let budget = T::lit(LOCAL_ERROR_BUDGET);
        let h = (budget / (horizon * g.powi(4))).powf(T::lit(0.25));
        h.min(T::lit(0.25) / g)
    } else {
        T::infinity()
    };

    let n = spec.dim();
    let mut rho = rho0.matrix().clone();
    let mut t = T::zero();
    let mut stats = IntegratorStats {
        steps: 0,
        max_step: T::zero(),
        norm_bound: g,
        error_estimate: T::zero(),
        max_trace_correction: T::zero(),
    };
    let mut ws = Workspace::new(n);
    let mut states = Vec::with_capacity(samples.len());
    for &target in &samples {
        let span = target - t;
        if span > T::zero() && g > T::zero() {
            let count = (span / h_max).ceil().to_usize().unwrap_or(usize::MAX).max(1);
            if stats.steps.saturating_add(count) > MAX_STEPS {
                return Err(Error::Integration(format!(
                    "step budget exceeded: {count} more steps of the {MAX_STEPS} cap"
                )));
            }
            let h = span / T::from_count(count);
            stats.max_step = stats.max_step.max(h);
            for _ in 0..count {
                rk4_step(spec, &mut rho, h, &mut ws);
                let correction = renormalize_trace(&mut rho);
                stats.max_trace_correction = stats.max_trace_correction.max(correction);
                if correction > T::lit(TRACE_CORRECTION_LIMIT) {
                    return Err(Error::Integration(format!(
                        "trace drifted by {correction} in one step"
                    )));
                }
            }
            stats.steps += count;
            stats.error_estimate =
                stats.error_estimate + T::from_count(count) * (h * g).powi(5) / T::lit(120.0);
        }
        t = target;
        let state = DensityMatrix::new(rho.clone()).map_err(|e| {
            Error::Integration(format!("state at t = {target} left the state space: {e}"))
        })?;
        states.push(state);
    }
    log::debug!(
        "evolve: {} steps, h <= {}, max trace correction {}",
        stats.steps,
        stats.max_step,
        stats.max_trace_correction
    );
    Ok(EvolutionResult {
        times: samples,
        states,
        stats,
    })
}

struct Workspace<T> {
    k: CMatrix<T>,
    stage: CMatrix<T>,
    acc: CMatrix<T>,
}

impl<T: Real> Workspace<T> {
    fn new(n: usize) -> Self {
        Self {
            k: CMatrix::zeros(n),
            stage: CMatrix::zeros(n),
            acc: CMatrix::zeros(n),
        }
    }
}

fn rk4_step<T: Real>(spec: &GeneratorSpec<T>, rho: &mut CMatrix<T>, h: T, ws: &mut Workspace<T>) {
    let sixth = h / T::lit(6.0);
    let weights = [sixth, sixth * T::two(), sixth * T::two(), sixth];
    let offsets = [h * T::half(), h * T::half(), h];

    ws.acc.as_mut_slice().copy_from_slice(rho.as_slice());
    ws.stage.as_mut_slice().copy_from_slice(rho.as_slice());
    for s in 0..4 {
        schrodinger_apply_into(spec, &ws.stage, &mut ws.k);
        let w = weights[s];
        for (a, &k) in ws.acc.as_mut_slice().iter_mut().zip(ws.k.as_slice()) {
            *a = *a + k.scale(w);
        }
        if s < 3 {
            let off = offsets[s];
            for ((st, &r), &k) in ws
                .stage
                .as_mut_slice()
                .iter_mut()
                .zip(rho.as_slice())
                .zip(ws.k.as_slice())
            {
                *st = r + k.scale(off);
            }
        }
    }
    std::mem::swap(rho, &mut ws.acc);
}

/// Rescales to unit trace and returns the size of the correction.
fn renormalize_trace<T: Real>(rho: &mut CMatrix<T>) -> T {
    let tr = rho.trace().re;
    let correction = (tr - T::one()).abs();
    if correction > T::zero() {
        let inv = T::one() / tr;
        for z in rho.as_mut_slice() {
            *z = z.scale(inv);
        }
    }
    correction
}

/// `tr(rho O)`. For Hermitian `O` the imaginary part is checked against
/// `1e-11` (scaled by `||O||_max`) and dropped.
pub fn expectation<T: Real>(rho: &DensityMatrix<T>, op: &OperatorMatrix<T>) -> Result<Complex<T>> {
    check_dim(rho.dim(), op.dim())?;
    let n = rho.dim();
    let r = rho.matrix();
    let mut acc: Complex<T> = Complex::zero();
    if op.is_diagonal() {
        for i in 0..n {
            acc = acc + r[(i, i)] * op.get(i, i);
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                acc = acc + r[(i, j)] * op.get(j, i);
            }
        }
    }
    if op.is_hermitian() {
        let limit = T::lit(1e-11) * op.max_abs().max(T::one());
        if acc.im.abs() > limit {
            log::warn!("expectation of a Hermitian observable has imaginary part {}", acc.im);
        } else {
            acc.im = T::zero();
        }
    }
    Ok(acc)
}

/// Restriction of the generator to diagonal matrix units: the classical
/// rate matrix with entry `(b', b)` = rate of `b -> b'`.
pub fn diagonal_restriction<T: Real>(spec: &GeneratorSpec<T>) -> Result<RateMatrix<T>> {
    let mut raw = Vec::new();
    for jump in &spec.jumps {
        for &(b, r, c) in &jump.domain {
            raw.push((b, r, jump.rate * c * c));
        }
    }
    RateMatrix::from_transitions(spec.dim(), raw)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceReport {
    pub length: usize,
    pub alpha: f64,
    pub times: Vec<f64>,
    /// Largest off-diagonal modulus of the evolved state over all times.
    pub max_off_diagonal: f64,
    /// Largest `|rho_bb(t) - p_b(t)|` against the master equation.
    pub max_population_difference: f64,
    /// Whether the diagonal restriction equals the classical generator entry
    /// by entry.
    pub restriction_matches: bool,
}

/// Lindblad evolution of a pointer state against the classical master
/// equation on a closed chain.
pub fn pointer_correspondence(
    length: usize,
    alpha: f64,
    init: &OccupationConfig,
    times: &[f64],
) -> Result<CorrespondenceReport> {
    let chain = Chain::new(length)?;
    init.check_chain(&chain)?;
    let spec = GeneratorSpec::new(chain, alpha)?;
    let restriction = diagonal_restriction(&spec)?;
    let classical = classical_generator(length, alpha, Boundary::Closed)?;
    let rho0 = pointer_density(&chain, init)?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let result = evolve(&spec, &rho0, horizon, times)?;
    let mut p0 = vec![0.0; chain.dim()];
    p0[init.index()] = 1.0;
    let mut max_off_diagonal: f64 = 0.0;
    let mut max_population_difference: f64 = 0.0;
    for (&t, rho) in times.iter().zip(&result.states) {
        max_off_diagonal = max_off_diagonal.max(rho.off_diagonal_max_abs());
        let p = master_evolve(&classical, &p0, t)?;
        for (a, b) in rho.populations().iter().zip(&p) {
            max_population_difference = max_population_difference.max((a - b).abs());
        }
    }
    Ok(CorrespondenceReport {
        length,
        alpha,
        times: times.to_vec(),
        max_off_diagonal,
        max_population_difference,
        restriction_matches: restriction == classical,
    })
}
