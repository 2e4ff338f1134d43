//! Repeated-interaction discretization of the quantum noise.
//!
//! Every step couples each edge `j` to a fresh bosonic ancilla in a truncated
//! thermal state through
//! `U_j = exp(-i sqrt(dt) (c_{j+1}^dagger c_j (x) a + c_j^dagger c_{j+1} (x) a^dagger))`
//! and traces the ancilla out. `U_j` only mixes the pairs
//! `(|10>, n) <-> (|01>, n-1)`, so its matrix elements in the ancilla Fock
//! basis are closed-form:
//!
//! ```text
//! <n|U|n>   = P_other + cos(s sqrt n) P_10 + cos(s sqrt(n+1)) P_01
//! <n-1|U|n> = -i sin(s sqrt n) A
//! <n+1|U|n> = -i sin(s sqrt(n+1)) A^dagger
//! ```
//!
//! with `s = sqrt(dt)`, `A = c_{j+1}^dagger c_j`, `P_10 = A^dagger A` and
//! `P_01 = A A^dagger`. At the top Fock level `a^dagger` is truncated to zero.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{cole_hopf_params, cole_hopf_op_with_delta, height_op, number_op, right_hop_monomial, Chain};
use crate::error::{check_dim, Error, Result};
use crate::lindblad::{evolve, expectation, GeneratorSpec};
use crate::linalg::CMatrix;
use crate::monomial::MonomialOp;
use crate::operator::OperatorMatrix;
use crate::real::Real;
use crate::state::DensityMatrix;

/// Largest thermal mass allowed above the top Fock level.
pub const TAIL_LIMIT: f64 = 1e-8;
/// `dt (L-1)` above this logs a warning.
pub const COARSE_STEP_WARNING: f64 = 0.5;
/// Cap on `steps * edges` for one channel evolution.
pub const COLLISION_BUDGET: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaSpec<T> {
    pub alpha: T,
    /// Fock levels `0..truncation`.
    pub truncation: usize,
}

impl<T: Real> AncillaSpec<T> {
    pub fn new(alpha: T, truncation: usize) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::Domain(format!("ancilla occupation must be > 0, got {alpha}")));
        }
        if truncation == 0 {
            return Err(Error::Config("ancilla truncation must be at least 1".into()));
        }
        let spec = Self { alpha, truncation };
        let tail = spec.tail_mass();
        if !(tail < T::lit(TAIL_LIMIT)) {
            return Err(Error::Config(format!(
                "thermal tail {tail} above level {truncation} exceeds {TAIL_LIMIT}"
            )));
        }
        Ok(spec)
    }

    /// `(alpha/(1+alpha))^truncation`, the weight cut off by truncation.
    pub fn tail_mass(&self) -> T {
        (self.alpha / (T::one() + self.alpha)).powi(self.truncation as i32)
    }

    /// Smallest truncation meeting the tail rule.
    pub fn minimal_truncation(alpha: T) -> Result<usize> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::Domain(format!("ancilla occupation must be > 0, got {alpha}")));
        }
        let q = (alpha / (T::one() + alpha)).ln();
        let d = (T::lit(TAIL_LIMIT).ln() / q).floor().as_f64() as usize + 1;
        Ok(d.max(1))
    }
}

/// Truncated Bose-Einstein weights `alpha^n/(1+alpha)^(n+1)`, renormalized,
/// and the mass removed by truncation.
pub fn thermal_weights<T: Real>(spec: &AncillaSpec<T>) -> (Vec<T>, T) {
    let q = spec.alpha / (T::one() + spec.alpha);
    let mut p = Vec::with_capacity(spec.truncation);
    let mut w = T::one() / (T::one() + spec.alpha);
    for _ in 0..spec.truncation {
        p.push(w);
        w = w * q;
    }
    let total: T = p.iter().copied().sum();
    let deficit = T::one() - total;
    for v in &mut p {
        *v = *v / total;
    }
    (p, deficit)
}

/// Thermal ancilla state as a diagonal density matrix.
pub fn thermal_ancilla<T: Real>(spec: &AncillaSpec<T>) -> Result<DensityMatrix<T>> {
    DensityMatrix::from_probabilities(&thermal_weights(spec).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sweep {
    /// Even edges, then odd edges.
    #[default]
    EvenOdd,
    /// Edges `1..L-1` in order.
    Sequential,
}

impl Sweep {
    pub fn edges(self, chain: &Chain) -> Vec<usize> {
        let l = chain.length();
        match self {
            Sweep::EvenOdd => (2..l).step_by(2).chain((1..l).step_by(2)).collect(),
            Sweep::Sequential => (1..l).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CollisionConfig<T> {
    pub chain: Chain,
    pub alpha: T,
    pub dt: T,
    pub sweep: Sweep,
    pub ancilla: AncillaSpec<T>,
}

impl<T: Real> CollisionConfig<T> {
    pub fn new(chain: Chain, dt: T, sweep: Sweep, ancilla: AncillaSpec<T>) -> Result<Self> {
        chain.require_dense()?;
        if !(dt >= T::zero() && dt.is_finite()) {
            return Err(Error::Config(format!("collision step dt must be >= 0, got {dt}")));
        }
        let coarse = dt.as_f64() * (chain.length() - 1) as f64;
        if coarse > COARSE_STEP_WARNING {
            log::warn!("collision step is coarse: dt (L-1) = {coarse}");
        }
        Ok(Self {
            chain,
            alpha: ancilla.alpha,
            dt,
            sweep,
            ancilla,
        })
    }

    /// Even-odd sweep with the smallest truncation meeting the tail rule.
    pub fn standard(length: usize, alpha: T, dt: T) -> Result<Self> {
        let ancilla = AncillaSpec::new(alpha, AncillaSpec::minimal_truncation(alpha)?)?;
        Self::new(Chain::new(length)?, dt, Sweep::EvenOdd, ancilla)
    }
}

/// Which side of edge `j` is occupied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pattern {
    /// `|00>` or `|11>`: the edge unitary acts trivially.
    Idle,
    /// Particle on `j`, hole on `j+1`: absorbs an ancilla quantum.
    Left,
    /// Hole on `j`, particle on `j+1`: emits an ancilla quantum.
    Right,
}

/// Precomputed single-edge channel.
#[derive(Clone, Debug)]
struct EdgeChannel<T> {
    hop: MonomialOp<T>,
    back: MonomialOp<T>,
    pattern: Vec<Pattern>,
    /// Hadamard weights of the no-transition Kraus part, indexed by pattern pair.
    stay: [[T; 3]; 3],
    /// `sum_n p_n sin^2(s sqrt n)`: weight of `A rho A^dagger`.
    absorb: T,
    /// `sum_n p_n sin^2(s sqrt(n+1))` over untruncated levels: weight of `A^dagger rho A`.
    emit: T,
}

fn pattern_slot(p: Pattern) -> usize {
    match p {
        Pattern::Idle => 0,
        Pattern::Left => 1,
        Pattern::Right => 2,
    }
}

/// Fock-level amplitudes of one collision at step `s = sqrt(dt)`.
struct Amplitudes<T> {
    /// `cos(s sqrt n)` on `|10>`.
    cos_left: Vec<T>,
    /// `cos(s sqrt(n+1))` on `|01>`, 1 at the top level.
    cos_right: Vec<T>,
    /// `sin(s sqrt n)`.
    sin_down: Vec<T>,
    /// `sin(s sqrt(n+1))`, 0 at the top level.
    sin_up: Vec<T>,
}

impl<T: Real> Amplitudes<T> {
    fn new(dt: T, levels: usize) -> Self {
        let s = dt.sqrt();
        let angle = |n: usize| s * T::from_count(n).sqrt();
        let top = levels - 1;
        Self {
            cos_left: (0..levels).map(|n| angle(n).cos()).collect(),
            cos_right: (0..levels)
                .map(|n| if n < top { angle(n + 1).cos() } else { T::one() })
                .collect(),
            sin_down: (0..levels).map(|n| angle(n).sin()).collect(),
            sin_up: (0..levels)
                .map(|n| if n < top { angle(n + 1).sin() } else { T::zero() })
                .collect(),
        }
    }

    fn diagonal(&self, n: usize, p: Pattern) -> T {
        match p {
            Pattern::Idle => T::one(),
            Pattern::Left => self.cos_left[n],
            Pattern::Right => self.cos_right[n],
        }
    }
}

impl<T: Real> EdgeChannel<T> {
    fn new(chain: &Chain, edge: usize, weights: &[T], amp: &Amplitudes<T>) -> Result<Self> {
        let hop = right_hop_monomial::<T>(chain, edge)?;
        let back = hop.adjoint();
        let pattern = (0..chain.dim())
            .map(|b| {
                if hop.apply(b).is_some() {
                    Pattern::Left
                } else if back.apply(b).is_some() {
                    Pattern::Right
                } else {
                    Pattern::Idle
                }
            })
            .collect();
        let all = [Pattern::Idle, Pattern::Left, Pattern::Right];
        let mut stay = [[T::zero(); 3]; 3];
        for a in all {
            for b in all {
                stay[pattern_slot(a)][pattern_slot(b)] = weights
                    .iter()
                    .enumerate()
                    .map(|(n, &p)| p * amp.diagonal(n, a) * amp.diagonal(n, b))
                    .sum();
            }
        }
        let absorb = weights
            .iter()
            .zip(&amp.sin_down)
            .map(|(&p, &s)| p * s * s)
            .sum();
        let emit = weights.iter().zip(&amp.sin_up).map(|(&p, &s)| p * s * s).sum();
        Ok(Self {
            hop,
            back,
            pattern,
            stay,
            absorb,
            emit,
        })
    }

    fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let n = rho.dim();
        let src = rho.as_slice();
        let mut out = CMatrix::from_fn(n, |i, j| {
            let w = self.stay[pattern_slot(self.pattern[i])][pattern_slot(self.pattern[j])];
            src[i * n + j].scale(w)
        });
        sandwich_into(&mut out, &self.hop, self.absorb, src, n);
        sandwich_into(&mut out, &self.back, self.emit, src, n);
        out
    }
}

/// `out += w M rho M^dagger` for a monomial `M`.
fn sandwich_into<T: Real>(out: &mut CMatrix<T>, m: &MonomialOp<T>, w: T, src: &[Complex<T>], n: usize) {
    if w == T::zero() {
        return;
    }
    let dom: Vec<(usize, usize, T)> = m.domain().collect();
    let dst = out.as_mut_slice();
    for &(bi, ri, ci) in &dom {
        for &(bj, rj, cj) in &dom {
            dst[ri * n + rj] = dst[ri * n + rj] + src[bi * n + bj].scale(w * ci * cj);
        }
    }
}

/// One full sweep of collisions, ready to be applied repeatedly.
#[derive(Clone, Debug)]
pub struct CollisionChannel<T> {
    config: CollisionConfig<T>,
    edges: Vec<EdgeChannel<T>>,
}

impl<T: Real> CollisionChannel<T> {
    pub fn new(config: &CollisionConfig<T>) -> Result<Self> {
        let (weights, _) = thermal_weights(&config.ancilla);
        let amp = Amplitudes::new(config.dt, config.ancilla.truncation);
        let edges = config
            .sweep
            .edges(&config.chain)
            .into_iter()
            .map(|e| EdgeChannel::new(&config.chain, e, &weights, &amp))
            .collect::<Result<_>>()?;
        Ok(Self {
            config: config.clone(),
            edges,
        })
    }

    pub fn config(&self) -> &CollisionConfig<T> {
        &self.config
    }

    fn apply_matrix(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let mut cur = rho.clone();
        for edge in &self.edges {
            cur = edge.apply(&cur);
        }
        cur
    }

    pub fn step(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        check_dim(self.config.chain.dim(), rho.dim())?;
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }

    /// `steps` sweeps; the state is validated once at the end.
    pub fn iterate(&self, rho: &DensityMatrix<T>, steps: usize) -> Result<DensityMatrix<T>> {
        check_dim(self.config.chain.dim(), rho.dim())?;
        if steps.saturating_mul(self.edges.len().max(1)) > COLLISION_BUDGET {
            return Err(Error::Config(format!(
                "{steps} collision sweeps exceed the budget of {COLLISION_BUDGET} collisions"
            )));
        }
        let mut cur = rho.matrix().clone();
        for _ in 0..steps {
            cur = self.apply_matrix(&cur);
        }
        DensityMatrix::new(cur)
    }
}

/// One sweep of the collision channel.
pub fn collision_step<T: Real>(config: &CollisionConfig<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    CollisionChannel::new(config)?.step(rho)
}

/// Number of steps of size `dt` covering `horizon` exactly.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("bad horizon {horizon} or step {dt}")));
    }
    let ratio = horizon / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Config(format!("horizon {horizon} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub steps: usize,
    /// Max over the observable set of `|collision - Lindblad|` at the horizon.
    pub error: f64,
    /// `error(previous dt) / error(this dt)`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub length: usize,
    pub alpha: f64,
    pub horizon: f64,
    pub truncation: usize,
    pub sweep: Sweep,
    pub rows: Vec<ConvergenceRow>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceOptions {
    pub truncation: usize,
    pub sweep: Sweep,
    /// Initial pointer state; the alternating configuration starting with a
    /// particle if `None`.
    pub initial: Option<usize>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            truncation: 30,
            sweep: Sweep::EvenOdd,
            initial: None,
        }
    }
}

/// `n_k` on all sites, `h_k` on all sites, `Z_k` on all sites.
pub fn observable_set(chain: &Chain, alpha: f64) -> Result<Vec<(String, OperatorMatrix<f64>)>> {
    let delta = cole_hopf_params(alpha)?.delta;
    let mut obs = Vec::new();
    for k in chain.sites() {
        obs.push((format!("n{k}"), number_op(chain, k)?));
        obs.push((format!("h{k}"), height_op(chain, k)?));
        obs.push((format!("Z{k}"), cole_hopf_op_with_delta(chain, k, delta)?));
    }
    Ok(obs)
}

/// Collision channel against Lindblad evolution at a common horizon for a
/// decreasing list of steps.
pub fn convergence_study(length: usize, alpha: f64, horizon: f64, dts: &[f64]) -> Result<ConvergenceTable> {
    convergence_study_with(length, alpha, horizon, dts, &ConvergenceOptions::default())
}

pub fn convergence_study_with(
    length: usize,
    alpha: f64,
    horizon: f64,
    dts: &[f64],
    options: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    if dts.is_empty() {
        return Err(Error::Config("no time steps given".into()));
    }
    if dts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("time steps must be strictly decreasing".into()));
    }
    let steps: Vec<usize> = dts.iter().map(|&dt| step_count(horizon, dt)).collect::<Result<_>>()?;
    let chain = Chain::new(length)?;
    chain.require_dense()?;
    let ancilla = AncillaSpec::new(alpha, options.truncation)?;
    let init = options
        .initial
        .unwrap_or_else(|| crate::chain::OccupationConfig::alternating(length, true).index());
    if init >= chain.dim() {
        return Err(Error::Index(format!("initial pointer state {init} outside the basis")));
    }
    let mut p = vec![0.0; chain.dim()];
    p[init] = 1.0;
    let rho0 = DensityMatrix::from_probabilities(&p)?;

    let spec = GeneratorSpec::new(chain, alpha)?;
    let exact = evolve(&spec, &rho0, horizon, &[horizon])?;
    let reference = exact.states.last().expect("one sample");
    let obs = observable_set(&chain, alpha)?;
    let targets: Vec<f64> = obs
        .iter()
        .map(|(_, o)| expectation(reference, o).map(|z| z.re))
        .collect::<Result<_>>()?;

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(dts.len());
    for (&dt, &n) in dts.iter().zip(&steps) {
        let config = CollisionConfig::new(chain, dt, options.sweep, ancilla)?;
        let rho = CollisionChannel::new(&config)?.iterate(&rho0, n)?;
        let mut error: f64 = 0.0;
        for ((_, o), &t) in obs.iter().zip(&targets) {
            error = error.max((expectation(&rho, o)?.re - t).abs());
        }
        let ratio = rows.last().map(|prev| prev.error / error);
        rows.push(ConvergenceRow { dt, steps: n, error, ratio });
    }
    Ok(ConvergenceTable {
        length,
        alpha,
        horizon,
        truncation: options.truncation,
        sweep: options.sweep,
        rows,
    })
}

/// Sampled pure-state trajectory. The ancilla of each collision is drawn
/// from the thermal weights and read out in the Fock basis afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct PureTrajectory<T> {
    pub seed: u64,
    pub times: Vec<T>,
    pub states: Vec<Vec<Complex<T>>>,
}

fn check_pure<T: Real>(psi: &[Complex<T>], dim: usize) -> Result<()> {
    check_dim(dim, psi.len())?;
    let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - T::one()).abs() > T::exact_tol() {
        return Err(Error::InvalidState(format!("state vector norm^2 {norm} differs from 1")));
    }
    Ok(())
}

/// `out = c M psi`.
fn monomial_apply<T: Real>(m: &MonomialOp<T>, c: Complex<T>, psi: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = vec![Complex::zero(); psi.len()];
    for (b, r, w) in m.domain() {
        out[r] = psi[b] * c.scale(w);
    }
    out
}

fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn sample_trajectory<T: Real>(
    config: &CollisionConfig<T>,
    psi0: &[Complex<T>],
    horizon: f64,
    seed: u64,
) -> Result<PureTrajectory<T>> {
    let steps = step_count(horizon, config.dt.as_f64())?;
    let channel = CollisionChannel::new(config)?;
    check_pure(psi0, config.chain.dim())?;
    let (weights, _) = thermal_weights(&config.ancilla);
    let amp = Amplitudes::new(config.dt, config.ancilla.truncation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minus_i = Complex::new(T::zero(), -T::one());

    let mut psi = psi0.to_vec();
    let mut times = vec![T::zero()];
    let mut states = vec![psi.clone()];
    for step in 1..=steps {
        for edge in &channel.edges {
            let n = draw(&weights, &mut rng);
            let stay: Vec<Complex<T>> = psi
                .iter()
                .zip(&edge.pattern)
                .map(|(z, &p)| z.scale(amp.diagonal(n, p)))
                .collect();
            let down = monomial_apply(&edge.hop, minus_i.scale(amp.sin_down[n]), &psi);
            let up = monomial_apply(&edge.back, minus_i.scale(amp.sin_up[n]), &psi);
            let probs = [norm_sqr(&stay), norm_sqr(&down), norm_sqr(&up)];
            let pick = draw(&probs, &mut rng);
            let next = match pick {
                0 => stay,
                1 => down,
                _ => up,
            };
            let norm = probs[pick].sqrt();
            psi = next.into_iter().map(|z| z.unscale(norm)).collect();
        }
        times.push(T::lit(step as f64 * config.dt.as_f64()));
        states.push(psi.clone());
    }
    Ok(PureTrajectory { seed, times, states })
}

/// Index drawn with probability proportional to `weights`.
fn draw<T: Real>(weights: &[T], rng: &mut impl Rng) -> usize {
    let total: T = weights.iter().copied().sum();
    let u = T::lit(rng.random::<f64>()) * total;
    let mut acc = T::zero();
    for (i, &w) in weights.iter().enumerate() {
        acc = acc + w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > T::zero()).unwrap_or(0)
}

/// Mean and standard error of `<psi_T|op|psi_T>` over trajectories with the
/// given seeds, run in parallel.
pub fn trajectory_mean(
    config: &CollisionConfig<f64>,
    psi0: &[Complex<f64>],
    horizon: f64,
    seeds: &[u64],
    op: &OperatorMatrix<f64>,
) -> Result<(f64, f64)> {
    check_dim(config.chain.dim(), op.dim())?;
    if seeds.len() < 2 {
        return Err(Error::Config("need at least two trajectories".into()));
    }
    let values: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            let traj = sample_trajectory(config, psi0, horizon, s)?;
            let rho = DensityMatrix::from_pure(traj.states.last().expect("initial state"))?;
            Ok(expectation(&rho, op)?.re)
        })
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{total_number_op, OccupationConfig};
    use crate::classical::{classical_generator, Boundary};
    use crate::linalg::CMatrix;

    fn pointer(l: usize, s: &str) -> DensityMatrix<f64> {
        let idx = s.parse::<OccupationConfig>().unwrap().index();
        let mut p = vec![0.0; 1 << l];
        p[idx] = 1.0;
        DensityMatrix::from_probabilities(&p).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> DensityMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(dim, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let rho = m.matmul(&m.adjoint());
        let tr = rho.trace().re;
        DensityMatrix::new(rho.scale_real(1.0 / tr)).unwrap()
    }

    #[test]
    fn thermal_weights_examples() {
        let spec = AncillaSpec::new(1.0, 30).unwrap();
        let (p, deficit) = thermal_weights(&spec);
        assert!((deficit - 0.5f64.powi(30)).abs() < 1e-15);
        assert!((deficit - 9.3e-10).abs() < 1e-11);
        assert!((p[0] / p[1] - 2.0).abs() < 1e-12);
        let mean: f64 = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        assert!((mean - 1.0).abs() < 1e-7);
        let rho = thermal_ancilla(&spec).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(matches!(AncillaSpec::new(1.0, 2), Err(Error::Config(_))));
        assert!(AncillaSpec::new(0.0, 30).is_err());
        let d = AncillaSpec::minimal_truncation(1.0).unwrap();
        assert!(AncillaSpec::new(1.0, d).is_ok() && AncillaSpec::new(1.0, d - 1).is_err());
    }

    #[test]
    fn kraus_blocks_match_the_numerical_exponential() {
        // L=2, edge 1, d_b=4: build H on system (x) ancilla and exponentiate
        let chain = Chain::new(2).unwrap();
        let db = 4;
        let dt = 0.07f64;
        let a_sys = right_hop_monomial::<f64>(&chain, 1).unwrap().to_operator();
        let big = 4 * db;
        // index = sys + 4 * fock
        let h = CMatrix::from_fn(big, |i, j| {
            let (si, ni) = (i % 4, i / 4);
            let (sj, nj) = (j % 4, j / 4);
            let mut v = Complex::zero();
            if ni + 1 == nj {
                // A (x) a
                v += a_sys.get(si, sj) * (nj as f64).sqrt();
            }
            if nj + 1 == ni {
                // A^dagger (x) a^dagger
                v += a_sys.get(sj, si).conj() * (ni as f64).sqrt();
            }
            v
        });
        let u = h.hermitian_unitary(dt.sqrt());
        let amp = Amplitudes::new(dt, db);
        let hop = right_hop_monomial::<f64>(&chain, 1).unwrap();
        let edge = EdgeChannel::new(&chain, 1, &[0.25; 4], &amp).unwrap();
        let minus_i = Complex::new(0.0, -1.0);
        for n in 0..db {
            for m in 0..db {
                let expected = |s: usize, t: usize| -> Complex<f64> {
                    if m == n {
                        if s == t {
                            Complex::from(amp.diagonal(n, edge.pattern[s]))
                        } else {
                            Complex::zero()
                        }
                    } else if m + 1 == n {
                        minus_i * amp.sin_down[n] * hop.to_operator().get(s, t)
                    } else if m == n + 1 {
                        minus_i * amp.sin_up[n] * edge.back.to_operator().get(s, t)
                    } else {
                        Complex::zero()
                    }
                };
                for s in 0..4 {
                    for t in 0..4 {
                        let got = u[(s + 4 * m, t + 4 * n)];
                        assert!((got - expected(s, t)).norm() < 1e-12, "m={m} n={n} s={s} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_step_is_the_identity() {
        let config = CollisionConfig::standard(3, 1.0, 0.0).unwrap();
        let rho = random_state(8, 3);
        let out = collision_step(&config, &rho).unwrap();
        assert_eq!(out.matrix().as_slice(), rho.matrix().as_slice());
    }

    #[test]
    fn channel_is_trace_preserving_and_conserves_number() {
        let config = CollisionConfig::standard(3, 0.7, 0.05).unwrap();
        let nt = total_number_op::<f64>(&config.chain).unwrap();
        for seed in 0..5 {
            let rho = random_state(8, seed);
            let out = collision_step(&config, &rho).unwrap();
            assert!((out.trace().re - 1.0).abs() < 1e-11);
            assert!(out.min_eigenvalue() > -1e-10);
            let before = expectation(&rho, &nt).unwrap().re;
            let after = expectation(&out, &nt).unwrap().re;
            assert!((before - after).abs() < 1e-10);
        }
    }

    #[test]
    fn single_step_matches_the_classical_generator() {
        let dt = 1e-3;
        let config = CollisionConfig::standard(2, 1.0, dt).unwrap();
        let rho = pointer(2, "01");
        let out = collision_step(&config, &rho).unwrap();
        let gen = classical_generator(2, 1.0, Boundary::Closed).unwrap();
        let p0 = rho.populations();
        let rate = gen.apply(&p0).unwrap();
        for (i, (after, before)) in out.populations().iter().zip(&p0).enumerate() {
            assert!((after - before - dt * rate[i]).abs() < 5e-6, "state {i}");
        }
    }

    #[test]
    fn first_order_convergence() {
        let table = convergence_study(3, 1.0, 1.0, &[0.1, 0.05, 0.025]).unwrap();
        assert!(table.rows.windows(2).all(|w| w[1].error < w[0].error));
        for row in &table.rows[1..] {
            let r = row.ratio.unwrap();
            assert!((1.7..=2.3).contains(&r), "ratio {r} at dt {}", row.dt);
        }
        let wide = convergence_study_with(
            3,
            1.0,
            1.0,
            &[0.1, 0.05, 0.025],
            &ConvergenceOptions {
                truncation: 60,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in table.rows.iter().zip(&wide.rows) {
            assert!((a.error - b.error).abs() < 0.01 * a.error);
        }
    }

    #[test]
    fn truncation_barely_moves_observables() {
        let rho0 = pointer(3, "101");
        let run = |d| {
            let config = CollisionConfig::new(
                Chain::new(3).unwrap(),
                0.05,
                Sweep::EvenOdd,
                AncillaSpec::new(1.0, d).unwrap(),
            )
            .unwrap();
            CollisionChannel::new(&config).unwrap().iterate(&rho0, 20).unwrap()
        };
        let (a, b) = (run(30), run(60));
        let n2 = number_op::<f64>(&Chain::new(3).unwrap(), 2).unwrap();
        let diff = expectation(&a, &n2).unwrap().re - expectation(&b, &n2).unwrap().re;
        assert!(diff.abs() < 1e-6);
    }

    #[test]
    fn sequential_sweep_also_converges() {
        let opts = ConvergenceOptions {
            sweep: Sweep::Sequential,
            ..Default::default()
        };
        let table = convergence_study_with(3, 1.0, 1.0, &[0.1, 0.05, 0.025], &opts).unwrap();
        assert!(table.rows.windows(2).all(|w| w[1].error < w[0].error));
    }

    #[test]
    fn study_rejects_bad_step_lists() {
        assert!(convergence_study(3, 1.0, 1.0, &[0.05, 0.1]).is_err());
        assert!(convergence_study(3, 1.0, 1.0, &[0.3]).is_err());
        assert!(convergence_study(3, 1.0, 1.0, &[]).is_err());
    }

    #[test]
    fn trajectories_are_normalized_and_reproducible() {
        let config = CollisionConfig::standard(3, 1.0, 0.05).unwrap();
        let mut psi = vec![Complex::zero(); 8];
        psi[OccupationConfig::alternating(3, true).index()] = Complex::new(0.6, 0.0);
        psi[OccupationConfig::alternating(3, false).index()] = Complex::new(0.0, 0.8);
        let a = sample_trajectory(&config, &psi, 1.0, 11).unwrap();
        let b = sample_trajectory(&config, &psi, 1.0, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 21);
        for s in &a.states {
            assert!((norm_sqr::<f64>(s) - 1.0).abs() < 1e-10);
        }
        let mut bad = psi.clone();
        bad[0] = Complex::new(1.0, 0.0);
        assert!(matches!(sample_trajectory(&config, &bad, 1.0, 1), Err(Error::InvalidState(_))));
    }

    #[test]
    fn trajectory_average_matches_the_channel() {
        let config = CollisionConfig::standard(2, 1.0, 0.05).unwrap();
        let mut psi = vec![Complex::zero(); 4];
        psi[1] = Complex::new(1.0, 0.0);
        let rho0 = DensityMatrix::from_pure(&psi).unwrap();
        let channel = CollisionChannel::new(&config).unwrap().iterate(&rho0, 20).unwrap();
        let n1 = number_op::<f64>(&config.chain, 1).unwrap();
        let target = expectation(&channel, &n1).unwrap().re;
        let seeds: Vec<u64> = (0..100_000).collect();
        let (mean, se) = trajectory_mean(&config, &psi, 1.0, &seeds, &n1).unwrap();
        assert!((mean - target).abs() < 4.0 * se, "mean {mean} target {target} se {se}");
    }
}
