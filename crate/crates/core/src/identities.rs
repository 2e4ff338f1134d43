//! Exact lattice identities of the quantum ASEP, checked as operator
//! equalities with Frobenius residuals.
//!
//! Every check compares an operator produced by the dynamics (the Ito engine
//! or the dual Lindblad generator) with a closed-form reference built from
//! number, height and Cole-Hopf operators. The reference can be built with a
//! different `alpha` than the dynamics (`CheckContext::reference_alpha`),
//! which turns each check into a negative control.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{
    centered_number_op, cole_hopf_op_with_delta, cole_hopf_params, current_op, height_op,
    number_op, Chain,
};
use crate::error::{Error, Result};
use crate::ito::{
    drift, edge_noise_with_delta, hamiltonian_increment, heisenberg_increment_with,
    noise_component, noise_correlator, Decoration, ItoExpression,
};
use crate::lindblad::{adjoint_generator_apply, GeneratorSpec};
use crate::linalg::CMatrix;
use crate::operator::OperatorMatrix;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub chain_length: usize,
    pub alpha: f64,
    /// Inclusive range of sites or edges checked.
    pub sites: (usize, usize),
    /// Max over checked sites and components of the Frobenius residual.
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Per-component residuals; entries starting with `info:` are reported
    /// but do not enter `residual`.
    pub details: Vec<(String, f64)>,
}

impl IdentityReport {
    fn new<T: Real>(
        name: &str,
        ctx: &CheckContext<T>,
        sites: (usize, usize),
        threshold: T,
        details: Vec<(String, T)>,
    ) -> Self {
        let residual = details
            .iter()
            .filter(|(k, _)| !k.starts_with("info:"))
            .map(|(_, v)| v.as_f64().abs())
            .fold(0.0, f64::max);
        let threshold = threshold.as_f64();
        Self {
            name: name.to_string(),
            chain_length: ctx.chain.length(),
            alpha: ctx.alpha.as_f64(),
            sites,
            residual,
            threshold,
            pass: residual < threshold,
            details: details.into_iter().map(|(k, v)| (k, v.as_f64().abs())).collect(),
        }
    }
}

/// Parameters shared by every check.
#[derive(Clone, Debug)]
pub struct CheckContext<T> {
    pub chain: Chain,
    /// Bath occupation driving the dynamics.
    pub alpha: T,
    /// Bath occupation used in the closed-form reference.
    pub reference_alpha: T,
    /// Conjugate observables and references by particle-hole exchange
    /// combined with spatial reflection.
    pub mirrored: bool,
    pub threshold: T,
}

impl<T: Real> CheckContext<T> {
    pub fn new(length: usize, alpha: T) -> Result<Self> {
        let chain = Chain::new(length)?;
        chain.require_dense()?;
        if !(alpha >= T::zero() && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self {
            chain,
            alpha,
            reference_alpha: alpha,
            mirrored: false,
            threshold: T::identity_tol(),
        })
    }

    pub fn with_reference_alpha(mut self, reference_alpha: T) -> Self {
        self.reference_alpha = reference_alpha;
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.mirrored = true;
        self
    }

    fn require_length(&self, min: usize, check: &str) -> Result<()> {
        if self.chain.length() < min {
            return Err(Error::Size(format!(
                "{check} needs L >= {min}, chain has {}",
                self.chain.length()
            )));
        }
        Ok(())
    }

    fn frame(&self, op: OperatorMatrix<T>) -> OperatorMatrix<T> {
        if self.mirrored {
            let chain = self.chain;
            op.permuted(move |b| chain.mirror_index(b))
        } else {
            op
        }
    }

    fn generator(&self) -> Result<GeneratorSpec<T>> {
        GeneratorSpec::new(self.chain, self.alpha)
    }

    fn n(&self, j: usize) -> Result<OperatorMatrix<T>> {
        number_op(&self.chain, j)
    }

    fn nt(&self, j: usize) -> Result<OperatorMatrix<T>> {
        centered_number_op(&self.chain, j)
    }

    fn h(&self, k: usize) -> Result<OperatorMatrix<T>> {
        height_op(&self.chain, k)
    }

    fn id(&self) -> OperatorMatrix<T> {
        OperatorMatrix::identity(self.chain.dim())
    }
}

/// Linear combination `sum c_i O_i`.
fn lin<T: Real>(terms: &[(T, &OperatorMatrix<T>)]) -> OperatorMatrix<T> {
    let dim = terms[0].1.dim();
    let mut acc = CMatrix::zeros(dim);
    for (c, op) in terms {
        acc.axpy(Complex::new(*c, T::zero()), op.matrix());
    }
    OperatorMatrix::new(acc)
}

fn dist<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> T {
    a.frobenius_distance(b)
}

/// Records the maximum of `value` under `key`.
fn record<T: Real>(details: &mut Vec<(String, T)>, key: &str, value: T) {
    match details.iter_mut().find(|(k, _)| k == key) {
        Some((_, v)) => *v = v.max(value),
        None => details.push((key.to_string(), value)),
    }
}

/// Dual generator on the number operator:
/// `L*(n_k) = n_{k+1}(1-n_k) - n_k(1-n_{k-1}) + alpha [(n_{k+1}-n_k) - (n_k-n_{k-1})]`
/// for interior `k`.
pub fn check_number_identity<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    check_number_identity_with(&CheckContext::new(length, alpha)?)
}

pub fn check_number_identity_with<T: Real>(ctx: &CheckContext<T>) -> Result<IdentityReport> {
    ctx.require_length(4, "number identity")?;
    let l = ctx.chain.length();
    let gen = ctx.generator()?;
    let a = ctx.reference_alpha;
    let id = ctx.id();
    let mut details = Vec::new();
    for k in 2..l {
        let (nm, n0, np) = (ctx.n(k - 1)?, ctx.n(k)?, ctx.n(k + 1)?);
        let tasep = &(&np * &(&id - &n0)) - &(&n0 * &(&id - &nm));
        let ssep = lin(&[(T::one(), &np), (-T::two(), &n0), (T::one(), &nm)]);
        let reference = ctx.frame(lin(&[(T::one(), &tasep), (a, &ssep)]));
        let got = adjoint_generator_apply(&gen, &ctx.frame(n0))?;
        record(&mut details, "dual_generator", dist(&got, &reference));
    }
    Ok(IdentityReport::new(
        "number_identity",
        ctx,
        (2, l - 1),
        ctx.threshold,
        details,
    ))
}

/// Local continuity: `dn_k = (j_k dt + dB^k) - (j_{k-1} dt + dB^{k-1})`,
/// including the closed left end where `j_0 = dB^0 = 0`.
pub fn check_continuity<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    check_continuity_with(&CheckContext::new(length, alpha)?)
}

pub fn check_continuity_with<T: Real>(ctx: &CheckContext<T>) -> Result<IdentityReport> {
    ctx.require_length(4, "continuity")?;
    let l = ctx.chain.length();
    let gen = ctx.generator()?;
    let dh = hamiltonian_increment::<T>(&ctx.chain)?;
    let a = ctx.reference_alpha;
    let mut details = Vec::new();
    for k in 1..l {
        let n = ctx.n(k)?;
        let jk = current_op(&ctx.chain, k, a)?;
        let dbk = edge_noise_with_delta(&ctx.chain, k, Decoration::Plain, T::zero())?;
        let (drift_ref, noise_ref) = if k == 1 {
            (jk, dbk)
        } else {
            let jm = current_op(&ctx.chain, k - 1, a)?;
            let dbm = edge_noise_with_delta(&ctx.chain, k - 1, Decoration::Plain, T::zero())?;
            (&jk - &jm, dbk.sub(&dbm)?)
        };
        let key = if k == 1 { "boundary" } else { "interior" };
        let l_star = adjoint_generator_apply(&gen, &n)?;
        record(&mut details, &format!("{key}_drift"), dist(&l_star, &drift_ref));
        let dn = heisenberg_increment_with(&dh, ctx.alpha, &n)?;
        record(
            &mut details,
            &format!("{key}_noise"),
            noise_component(&dn).distance(&noise_ref)?,
        );
    }
    Ok(IdentityReport::new("continuity", ctx, (1, l - 1), ctx.threshold, details))
}

/// Height dynamics
/// `dh_k = [(alpha + 1/2) Lap h_k - grad+ h_k grad- h_k + 1/4] dt + dB^k`
/// and the noise correlator
/// `dB^k dB^k' = delta_kk' [1/2 Lap h_k + (alpha + 1/2)(1/2 - 2 grad+ h_k grad- h_k)] dt`.
pub fn check_height_kpz<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    check_height_kpz_with(&CheckContext::new(length, alpha)?)
}

pub fn check_height_kpz_with<T: Real>(ctx: &CheckContext<T>) -> Result<IdentityReport> {
    ctx.require_length(5, "height equation")?;
    let l = ctx.chain.length();
    let dh = hamiltonian_increment::<T>(&ctx.chain)?;
    let a = ctx.reference_alpha;
    let half = T::half();
    let quarter = T::lit(0.25);
    let id = ctx.id();
    let interior: Vec<usize> = (2..=l - 2).collect();
    let mut details = Vec::new();
    let mut noises = Vec::with_capacity(interior.len());
    let mut local = Vec::with_capacity(interior.len());
    for &k in &interior {
        let (hm, h0, hp) = (ctx.h(k - 1)?, ctx.h(k)?, ctx.h(k + 1)?);
        let lap = lin(&[(T::one(), &hp), (-T::two(), &h0), (T::one(), &hm)]);
        let grad_plus = &hp - &h0;
        let grad_minus = &h0 - &hm;
        let gg = &grad_plus * &grad_minus;
        let drift_ref = ctx.frame(lin(&[(a + half, &lap), (-T::one(), &gg), (quarter, &id)]));
        let corr_ref = ctx.frame(lin(&[
            (half, &lap),
            ((a + half) * half, &id),
            (-(a + half) * T::two(), &gg),
        ]));
        let dhk = heisenberg_increment_with(&dh, ctx.alpha, &ctx.frame(h0))?;
        record(&mut details, "drift", dist(&drift(&dhk), &drift_ref));
        let noise = noise_component(&dhk);
        if !ctx.mirrored {
            let dbk = edge_noise_with_delta(&ctx.chain, k, Decoration::Plain, T::zero())?;
            record(&mut details, "noise", noise.distance(&dbk)?);
        }
        noises.push(noise);
        local.push(corr_ref);
    }
    for (i, e1) in noises.iter().enumerate() {
        for (j, e2) in noises.iter().enumerate() {
            let corr = noise_correlator(e1, e2, ctx.alpha)?;
            if i == j {
                record(&mut details, "correlator_same_edge", dist(&corr, &local[i]));
            } else {
                record(&mut details, "correlator_distinct_edges", corr.frobenius_norm());
            }
        }
    }
    Ok(IdentityReport::new(
        "height_kpz",
        ctx,
        (2, l - 2),
        ctx.threshold,
        details,
    ))
}

/// Cole-Hopf operator `Z_k = exp(delta h_k)`.
///
/// At any `delta` the drift is
/// `2 sinh(delta/2) [(1+alpha)(1-n_k) n_{k+1} e^{delta/2} - alpha n_k (1-n_{k+1}) e^{-delta/2}] Z_k`
/// and the noise `2 sinh(delta/2) dB^{k,(-)} Z_k`. At `delta* = ln(alpha/(1+alpha))`
/// the drift is linear, `D Lap Z_k - mu Z_k`, and the noise prefactor is `-1/D`.
/// The `info:` entry reports how far the drift at the given `delta` is from
/// that linear form.
pub fn check_cole_hopf<T: Real>(length: usize, alpha: T, delta: T) -> Result<IdentityReport> {
    check_cole_hopf_with(&CheckContext::new(length, alpha)?, delta)
}

pub fn check_cole_hopf_with<T: Real>(ctx: &CheckContext<T>, delta: T) -> Result<IdentityReport> {
    ctx.require_length(4, "Cole-Hopf identity")?;
    let own = cole_hopf_params(ctx.alpha)?;
    let reference = cole_hopf_params(ctx.reference_alpha)?;
    let a = ctx.reference_alpha;
    let l = ctx.chain.length();
    let dh = hamiltonian_increment::<T>(&ctx.chain)?;
    let id = ctx.id();
    let half = T::half();
    let mut details = Vec::new();
    for k in 2..l {
        let (n0, np) = (ctx.n(k)?, ctx.n(k + 1)?);
        let sinh2 = T::two() * (delta * half).sinh();

        // general delta
        let z = cole_hopf_op_with_delta(&ctx.chain, k, delta)?;
        let dz = heisenberg_increment_with(&dh, ctx.alpha, &z)?;
        let gain = &(&id - &n0) * &np;
        let loss = &n0 * &(&id - &np);
        let bracket = lin(&[
            ((T::one() + a) * (delta * half).exp(), &gain),
            (-a * (-delta * half).exp(), &loss),
        ]);
        let drift_ref = (&bracket * &z).scale_real(sinh2);
        record(&mut details, "general_drift", dist(&drift(&dz), &drift_ref));
        let noise_ref = edge_noise_with_delta(&ctx.chain, k, Decoration::Minus, delta)?
            .right_mul(&z)?
            .scale_real(sinh2);
        record(&mut details, "general_noise", noise_component(&dz).distance(&noise_ref)?);

        let linear = |zs: [&OperatorMatrix<T>; 3], mu: T, d: T| {
            lin(&[(d, zs[0]), (-T::two() * d - mu, zs[1]), (d, zs[2])])
        };
        let zm = cole_hopf_op_with_delta(&ctx.chain, k - 1, delta)?;
        let zp = cole_hopf_op_with_delta(&ctx.chain, k + 1, delta)?;
        record(
            &mut details,
            "info:linear_form_at_given_delta",
            dist(&drift(&dz), &linear([&zm, &z, &zp], reference.mu, reference.diffusion)),
        );

        // linearizing delta
        let ds = own.delta;
        let z = cole_hopf_op_with_delta(&ctx.chain, k, ds)?;
        let zm = cole_hopf_op_with_delta(&ctx.chain, k - 1, ds)?;
        let zp = cole_hopf_op_with_delta(&ctx.chain, k + 1, ds)?;
        let dz = heisenberg_increment_with(&dh, ctx.alpha, &z)?;
        let she = linear([&zm, &z, &zp], reference.mu, reference.diffusion);
        record(&mut details, "she_drift", dist(&drift(&dz), &she));
        let noise_ref = edge_noise_with_delta(&ctx.chain, k, Decoration::Minus, ds)?
            .right_mul(&z)?
            .scale_real(-T::one() / reference.diffusion);
        record(&mut details, "she_noise", noise_component(&dz).distance(&noise_ref)?);
    }
    Ok(IdentityReport::new("cole_hopf", ctx, (2, l - 1), ctx.threshold, details))
}

/// `Z^{1/2} dB Z^{1/2} = Z dB^{(+)} = dB^{(-)} Z` at the linearizing `delta`.
/// The `info:` entry is the plain-noise control `|Z dB - dB^{(-)} Z|`, which
/// must stay large.
pub fn check_noise_rearrangement<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    check_noise_rearrangement_with(&CheckContext::new(length, alpha)?)
}

pub fn check_noise_rearrangement_with<T: Real>(ctx: &CheckContext<T>) -> Result<IdentityReport> {
    ctx.require_length(4, "noise rearrangement")?;
    let own = cole_hopf_params(ctx.alpha)?;
    let reference = cole_hopf_params(ctx.reference_alpha)?;
    let l = ctx.chain.length();
    let mut details = Vec::new();
    for k in 2..=l - 2 {
        let z = cole_hopf_op_with_delta(&ctx.chain, k, own.delta)?;
        let root = z.map_diagonal(|v| v.sqrt());
        let plain = edge_noise_with_delta(&ctx.chain, k, Decoration::Plain, T::zero())?;
        let plus = edge_noise_with_delta(&ctx.chain, k, Decoration::Plus, reference.delta)?;
        let minus = edge_noise_with_delta(&ctx.chain, k, Decoration::Minus, reference.delta)?;
        let symmetric = plain.left_mul(&root)?.right_mul(&root)?;
        let left = plus.left_mul(&z)?;
        let right = minus.right_mul(&z)?;
        record(&mut details, "sqrt_vs_plus", symmetric.distance(&left)?);
        record(&mut details, "plus_vs_minus", left.distance(&right)?);
        record(&mut details, "sqrt_vs_minus", symmetric.distance(&right)?);
        record(
            &mut details,
            "info:plain_noise_control",
            plain.left_mul(&z)?.distance(&right)?,
        );
    }
    Ok(IdentityReport::new(
        "noise_rearrangement",
        ctx,
        (2, l - 2),
        ctx.threshold,
        details,
    ))
}

/// Burgers form for `n~_k = grad- h_k`:
/// `dn~_k + n~_k (n~_{k+1} - n~_{k-1}) dt = (alpha + 1/2) Lap n~_k dt + dB^k - dB^{k-1}`.
pub fn check_burgers<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    check_burgers_with(&CheckContext::new(length, alpha)?)
}

pub fn check_burgers_with<T: Real>(ctx: &CheckContext<T>) -> Result<IdentityReport> {
    ctx.require_length(5, "Burgers identity")?;
    let l = ctx.chain.length();
    let dh = hamiltonian_increment::<T>(&ctx.chain)?;
    let a = ctx.reference_alpha;
    let mut details = Vec::new();
    for k in 2..l {
        let (nm, n0, np) = (ctx.nt(k - 1)?, ctx.nt(k)?, ctx.nt(k + 1)?);
        let dn = heisenberg_increment_with(&dh, ctx.alpha, &n0)?;
        let advect = &n0 * &(&np - &nm);
        let lhs = &drift(&dn) + &advect;
        let rhs = lin(&[(a + T::half(), &np), (-(a + T::half()) * T::two(), &n0), (a + T::half(), &nm)]);
        record(&mut details, "drift", dist(&lhs, &rhs));
        let dbk = edge_noise_with_delta(&ctx.chain, k, Decoration::Plain, T::zero())?;
        let dbm = edge_noise_with_delta(&ctx.chain, k - 1, Decoration::Plain, T::zero())?;
        record(&mut details, "noise", noise_component(&dn).distance(&dbk.sub(&dbm)?)?);
    }
    Ok(IdentityReport::new("burgers", ctx, (2, l - 1), ctx.threshold, details))
}

/// Contact potential `V_kk = (1-n_k) n_{k+1}/(1+alpha) + n_k (1-n_{k+1})/alpha`.
pub fn contact_potential<T: Real>(chain: &Chain, k: usize, alpha: T) -> Result<OperatorMatrix<T>> {
    let (n0, np) = (number_op::<T>(chain, k)?, number_op::<T>(chain, k + 1)?);
    let id = OperatorMatrix::identity(chain.dim());
    let gain = &(&id - &n0) * &np;
    let loss = &n0 * &(&id - &np);
    Ok(lin(&[(T::one() / (T::one() + alpha), &gain), (T::one() / alpha, &loss)]))
}

/// Two-replica equation for `u = Z_{k1} Z_{k2}`:
/// `L*(u) + 2 mu u = D (Lap_1 + Lap_2) u + delta_{k1 k2} V_{k1 k1} u`.
pub fn check_replica<T: Real>(length: usize, alpha: T, k1: usize, k2: usize) -> Result<IdentityReport> {
    check_replica_with(&CheckContext::new(length, alpha)?, &[(k1, k2)])
}

/// All interior pairs `k1 <= k2`.
pub fn check_replica_all<T: Real>(length: usize, alpha: T) -> Result<IdentityReport> {
    let ctx = CheckContext::new(length, alpha)?;
    check_replica_with(&ctx, &replica_pairs(length))
}

pub fn replica_pairs(length: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for k1 in 2..length {
        for k2 in k1..length {
            pairs.push((k1, k2));
        }
    }
    pairs
}

pub fn check_replica_with<T: Real>(
    ctx: &CheckContext<T>,
    pairs: &[(usize, usize)],
) -> Result<IdentityReport> {
    ctx.require_length(4, "replica equation")?;
    let own = cole_hopf_params(ctx.alpha)?;
    let reference = cole_hopf_params(ctx.reference_alpha)?;
    let l = ctx.chain.length();
    for &(k1, k2) in pairs {
        for k in [k1, k2] {
            if !(2..l).contains(&k) {
                return Err(Error::Index(format!("replica site {k} outside 2..={}", l - 1)));
            }
        }
    }
    let gen = ctx.generator()?;
    let z = |k: usize| cole_hopf_op_with_delta::<T>(&ctx.chain, k, own.delta);
    let lap = |k: usize| -> Result<OperatorMatrix<T>> {
        Ok(lin(&[(T::one(), &z(k + 1)?), (-T::two(), &z(k)?), (T::one(), &z(k - 1)?)]))
    };
    let mut details = Vec::new();
    let (mut lo, mut hi) = (l, 0);
    for &(k1, k2) in pairs {
        lo = lo.min(k1.min(k2));
        hi = hi.max(k1.max(k2));
        let (z1, z2) = (z(k1)?, z(k2)?);
        let u = &z1 * &z2;
        let u_swapped = &z2 * &z1;
        record(&mut details, "exchange_symmetry", dist(&u, &u_swapped));
        let lhs = &adjoint_generator_apply(&gen, &u)? + &u.scale_real(T::two() * reference.mu);
        let kinetic = &(&lap(k1)? * &z2) + &(&z1 * &lap(k2)?);
        let mut rhs = kinetic.scale_real(reference.diffusion);
        let key = if k1 == k2 {
            rhs = &rhs + &(&contact_potential(&ctx.chain, k1, ctx.reference_alpha)? * &u);
            "coincident"
        } else {
            "distinct"
        };
        record(&mut details, key, dist(&lhs, &rhs));
    }
    Ok(IdentityReport::new("replica", ctx, (lo, hi), ctx.threshold, details))
}

/// Number of random observables in the engine-vs-generator comparison.
pub const EQUIVALENCE_SAMPLES: usize = 50;
pub const EQUIVALENCE_TOL: f64 = 1e-11;

/// `drift(dO)` from the Ito engine against the dual generator applied
/// directly, on random Hermitian `O`.
pub fn check_generator_equivalence<T: Real>(
    length: usize,
    alpha: T,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let ctx = CheckContext::new(length, alpha)?;
    let gen = ctx.generator()?;
    let dh = hamiltonian_increment::<T>(&ctx.chain)?;
    let dim = ctx.chain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut details = Vec::new();
    for _ in 0..samples {
        let o = random_hermitian::<T>(dim, &mut rng);
        let engine = drift(&heisenberg_increment_with(&dh, alpha, &o)?);
        let direct = adjoint_generator_apply(&gen, &o)?;
        record(&mut details, "max_residual", dist(&engine, &direct));
    }
    let threshold = T::lit(EQUIVALENCE_TOL).max(T::identity_tol());
    Ok(IdentityReport::new(
        "generator_equivalence",
        &ctx,
        (1, length),
        threshold,
        details,
    ))
}

/// Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<T: Real>(dim: usize, rng: &mut impl Rng) -> OperatorMatrix<T> {
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = Complex::new(T::lit(rng.random_range(-1.0..1.0)), T::zero());
        for j in i + 1..dim {
            let z = Complex::new(
                T::lit(rng.random_range(-1.0..1.0)),
                T::lit(rng.random_range(-1.0..1.0)),
            );
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    OperatorMatrix::new(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub alpha: f64,
    /// Uniform average over all pointer states of `<dB_k dB_k>/dt`, averaged
    /// over interior edges.
    pub average: f64,
    pub expected: f64,
    /// `average / (alpha / 2)`.
    pub ratio: f64,
    /// Largest `|average_k - expected|` over interior edges.
    pub residual: f64,
}

/// Noise strength on the uniform pointer ensemble, whose exact value is
/// `alpha/2 + 1/4`; the commuting part `alpha/2` dominates as `alpha` grows.
pub fn continuum_noise_probe(length: usize, alphas: &[f64]) -> Result<Vec<ProbeRow>> {
    let chain = Chain::new(length)?;
    chain.require_dense()?;
    if length < 5 {
        return Err(Error::Size(format!("noise probe needs L >= 5, got {length}")));
    }
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::Domain("probe alphas must be positive".into()));
    }
    let dim = chain.dim() as f64;
    let edges: Vec<usize> = (2..=length - 2).collect();
    let noises: Vec<ItoExpression<f64>> = edges
        .iter()
        .map(|&k| edge_noise_with_delta(&chain, k, Decoration::Plain, 0.0))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let expected = alpha / 2.0 + 0.25;
        let mut sum = 0.0;
        let mut residual: f64 = 0.0;
        for db in &noises {
            let corr = noise_correlator(db, db, alpha)?;
            let avg = corr.trace().re / dim;
            sum += avg;
            residual = residual.max((avg - expected).abs());
        }
        let average = sum / edges.len() as f64;
        rows.push(ProbeRow {
            alpha,
            average,
            expected,
            ratio: average / (alpha / 2.0),
            residual,
        });
    }
    Ok(rows)
}

/// Seed of the random observables used by [`run_all`].
pub const DEFAULT_EQUIVALENCE_SEED: u64 = 0x5eed;

/// The eight checks at one `(L, alpha)`, in a fixed order.
pub fn run_all(length: usize, alpha: f64) -> Result<Vec<IdentityReport>> {
    let delta = cole_hopf_params(alpha)?.delta;
    Ok(vec![
        check_number_identity(length, alpha)?,
        check_continuity(length, alpha)?,
        check_height_kpz(length, alpha)?,
        check_cole_hopf(length, alpha, delta)?,
        check_noise_rearrangement(length, alpha)?,
        check_burgers(length, alpha)?,
        check_replica_all(length, alpha)?,
        check_generator_equivalence(length, alpha, EQUIVALENCE_SAMPLES, DEFAULT_EQUIVALENCE_SEED)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: f64 = 1e-12;

    fn assert_tight(r: &IdentityReport) {
        assert!(r.pass, "{} failed: {:?}", r.name, r.details);
        assert!(r.residual < TIGHT, "{}: residual {} ({:?})", r.name, r.residual, r.details);
    }

    fn detail(r: &IdentityReport, key: &str) -> f64 {
        r.details.iter().find(|(k, _)| k == key).unwrap().1
    }

    #[test]
    fn number_identity_examples() {
        assert_tight(&check_number_identity(5, 1.0).unwrap());
        assert_tight(&check_number_identity(5, 0.0).unwrap());
        assert_tight(&check_number_identity(4, 2.7).unwrap());
        assert!(matches!(check_number_identity(3, 1.0), Err(Error::Size(_))));
    }

    #[test]
    fn continuity_examples_include_the_boundary() {
        for alpha in [1.0, 0.3, 0.0] {
            let r = check_continuity(5, alpha).unwrap();
            assert_tight(&r);
            assert!(detail(&r, "boundary_noise") < TIGHT);
            assert!(detail(&r, "boundary_drift") < TIGHT);
        }
    }

    #[test]
    fn height_kpz_examples() {
        let r = check_height_kpz(6, 1.0).unwrap();
        assert_tight(&r);
        assert_eq!(r.sites, (2, 4));
        assert_eq!(detail(&r, "correlator_distinct_edges"), 0.0);
        assert!(matches!(check_height_kpz(4, 1.0), Err(Error::Size(_))));
    }

    #[test]
    fn cole_hopf_examples() {
        let star = 0.5f64.ln();
        assert_tight(&check_cole_hopf(5, 1.0, star).unwrap());
        let off = check_cole_hopf(5, 1.0, -0.3).unwrap();
        assert_tight(&off);
        assert!(detail(&off, "general_drift") < TIGHT);
        assert!(detail(&off, "info:linear_form_at_given_delta") > 1e-3);
        let p = cole_hopf_params(0.5f64).unwrap();
        assert!((p.mu - 0.267949).abs() < 1e-6);
        assert_tight(&check_cole_hopf(5, 0.5, p.delta).unwrap());
        assert!(matches!(check_cole_hopf(5, 0.0, -0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn noise_rearrangement_examples() {
        for alpha in [1.0, 3.0] {
            let r = check_noise_rearrangement(4, alpha).unwrap();
            assert_tight(&r);
            assert!(detail(&r, "info:plain_noise_control") > 1e-3);
        }
        assert!(matches!(check_noise_rearrangement(4, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn burgers_examples() {
        assert_tight(&check_burgers(6, 1.0).unwrap());
        assert_tight(&check_burgers(6, 0.0).unwrap());
    }

    #[test]
    fn replica_examples() {
        let distinct = check_replica(6, 1.0, 2, 4).unwrap();
        assert_tight(&distinct);
        assert!(distinct.details.iter().all(|(k, _)| k != "coincident"));
        let same = check_replica(6, 1.0, 3, 3).unwrap();
        assert_tight(&same);
        assert_eq!(detail(&same, "exchange_symmetry"), 0.0);
        assert!(matches!(check_replica(6, 1.0, 1, 3), Err(Error::Index(_))));
        assert!(matches!(check_replica(6, 0.0, 2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn coincident_replicas_need_the_contact_term() {
        // dropping the potential leaves a visible residual
        let ctx = CheckContext::new(6, 1.0).unwrap();
        let p = cole_hopf_params(1.0f64).unwrap();
        let gen = ctx.generator().unwrap();
        let z = |k| cole_hopf_op_with_delta::<f64>(&ctx.chain, k, p.delta).unwrap();
        let u = &z(3) * &z(3);
        let lhs = &adjoint_generator_apply(&gen, &u).unwrap() + &u.scale_real(2.0 * p.mu);
        let lap = lin(&[(1.0, &z(4)), (-2.0, &z(3)), (1.0, &z(2))]);
        let rhs = (&(&lap * &z(3)) + &(&z(3) * &lap)).scale_real(p.diffusion);
        assert!(dist(&lhs, &rhs) > 1e-2);
    }

    #[test]
    fn generator_equivalence_on_random_observables() {
        let r = check_generator_equivalence(5, 1.3, EQUIVALENCE_SAMPLES, 7).unwrap();
        assert!(r.pass && r.residual < EQUIVALENCE_TOL, "{r:?}");
    }

    #[test]
    fn continuum_probe_examples() {
        let rows = continuum_noise_probe(6, &[1.0, 10.0, 100.0]).unwrap();
        assert!((rows[1].average - 5.25).abs() < 1e-12);
        assert!((rows[2].average - 50.25).abs() < 1e-10);
        assert!((rows[2].ratio - 1.005).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        assert!(rows.iter().all(|r| r.residual < 1e-12));
        assert!(continuum_noise_probe(6, &[0.0]).is_err());
    }

    #[test]
    fn mirror_frame_leaves_residuals_at_machine_precision() {
        for alpha in [0.3, 1.0, 2.7] {
            let ctx = CheckContext::new(6, alpha).unwrap();
            let plain = check_number_identity_with(&ctx).unwrap();
            let mirror = check_number_identity_with(&ctx.clone().mirrored()).unwrap();
            assert_tight(&plain);
            assert_tight(&mirror);
            let plain = check_height_kpz_with(&ctx).unwrap();
            let mirror = check_height_kpz_with(&ctx.clone().mirrored()).unwrap();
            assert_tight(&plain);
            assert_tight(&mirror);
        }
    }

    #[test]
    fn one_percent_perturbation_is_detected() {
        let alpha = 1.0;
        let ctx = CheckContext::new(6, alpha).unwrap().with_reference_alpha(alpha * 1.01);
        let reports = [
            check_number_identity_with(&ctx).unwrap(),
            check_continuity_with(&ctx).unwrap(),
            check_height_kpz_with(&ctx).unwrap(),
            check_cole_hopf_with(&ctx, -0.3).unwrap(),
            check_cole_hopf_with(&ctx, cole_hopf_params(alpha).unwrap().delta).unwrap(),
            check_noise_rearrangement_with(&ctx).unwrap(),
            check_burgers_with(&ctx).unwrap(),
            check_replica_with(&ctx, &replica_pairs(6)).unwrap(),
        ];
        for r in &reports {
            assert!(r.residual > 1e-4, "{} residual {}", r.name, r.residual);
            assert!(!r.pass);
        }
    }

    #[test]
    fn full_grid_passes() {
        for l in [5, 6] {
            for alpha in [0.3, 1.0, 2.7] {
                let reports = run_all(l, alpha).unwrap();
                assert_eq!(reports.len(), 8);
                for r in &reports {
                    assert!(r.pass && r.residual < 1e-10, "L={l} alpha={alpha}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn single_precision_runs_with_its_own_threshold() {
        let r = check_burgers(5, 1.0f32).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.threshold > 1e-8);
    }
}
