//! Symbolic quantum Ito calculus over system operators.
//!
//! An [`ItoExpression`] is a finite sum of system operators multiplied by
//! ordered monomials in the edge noises `dW^j`, `dWbar^j` and by `dt^0` or
//! `dt^1`. System operators commute with the noises, so products multiply
//! coefficients in order and concatenate monomials. Equal-time noise pairs
//! contract with the table
//!
//! ```text
//! dWbar^j dW^k = delta_jk alpha dt        dW^k dWbar^j = delta_jk (1 + alpha) dt
//! dW dW = dWbar dWbar = dt dW = dt^2 = 0
//! ```
//!
//! and everything of stochastic order above one vanishes. That is all the
//! machinery needed to expand `exp(i dH) O exp(-i dH)` to second order.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::chain::{cole_hopf_params, left_hop_op, right_hop_op, Chain};
use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::operator::OperatorMatrix;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoiseKind {
    /// `dW^j`, multiplies the rightward hop `c_{j+1}^dagger c_j`.
    W,
    /// `dWbar^j`, multiplies the leftward hop `c_j^dagger c_{j+1}`.
    WBar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoiseFactor {
    pub edge: usize,
    pub kind: NoiseKind,
}

impl NoiseFactor {
    pub fn w(edge: usize) -> Self {
        Self {
            edge,
            kind: NoiseKind::W,
        }
    }

    pub fn wbar(edge: usize) -> Self {
        Self {
            edge,
            kind: NoiseKind::WBar,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItoTerm<T> {
    pub coeff: OperatorMatrix<T>,
    pub noise: Vec<NoiseFactor>,
    pub dt_power: u8,
}

impl<T: Real> ItoTerm<T> {
    pub fn new(coeff: OperatorMatrix<T>, noise: Vec<NoiseFactor>, dt_power: u8) -> Self {
        Self {
            coeff,
            noise,
            dt_power,
        }
    }

    /// Twice the stochastic order: each noise counts one, `dt` counts two.
    fn doubled_order(&self) -> usize {
        self.noise.len() + 2 * self.dt_power as usize
    }
}

/// Ordering key of a normalized term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TermKey {
    dt_power: u8,
    noise: Vec<NoiseFactor>,
}

/// Contracts a noise monomial. `None` means the monomial vanishes.
fn contract<T: Real>(noise: &[NoiseFactor], dt_power: u8, alpha: T) -> Option<(T, TermKey)> {
    if noise.len() + 2 * dt_power as usize > 2 {
        return None;
    }
    match noise {
        [a, b] => {
            if a.edge != b.edge {
                return None;
            }
            let factor = match (a.kind, b.kind) {
                (NoiseKind::W, NoiseKind::WBar) => T::one() + alpha,
                (NoiseKind::WBar, NoiseKind::W) => alpha,
                _ => return None,
            };
            Some((
                factor,
                TermKey {
                    dt_power: dt_power + 1,
                    noise: Vec::new(),
                },
            ))
        }
        _ => Some((
            T::one(),
            TermKey {
                dt_power,
                noise: noise.to_vec(),
            },
        )),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItoExpression<T> {
    dim: usize,
    terms: Vec<ItoTerm<T>>,
}

impl<T: Real> ItoExpression<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    /// A plain operator (no noise, no `dt`).
    pub fn constant(op: OperatorMatrix<T>) -> Self {
        let dim = op.dim();
        Self::from_map(dim, [(TermKey { dt_power: 0, noise: Vec::new() }, op.into_matrix())])
    }

    /// `op * dt`.
    pub fn drift_term(op: OperatorMatrix<T>) -> Self {
        let dim = op.dim();
        Self::from_map(dim, [(TermKey { dt_power: 1, noise: Vec::new() }, op.into_matrix())])
    }

    /// `op * noise`.
    pub fn noise_term(op: OperatorMatrix<T>, noise: NoiseFactor) -> Self {
        let dim = op.dim();
        Self::from_map(
            dim,
            [(TermKey { dt_power: 0, noise: vec![noise] }, op.into_matrix())],
        )
    }

    /// Canonical form of an arbitrary term list: contracts noise pairs, drops
    /// stochastic orders above one, merges equal keys and prunes coefficients
    /// whose max-norm is below the prune tolerance.
    pub fn normalized(dim: usize, terms: Vec<ItoTerm<T>>, alpha: T) -> Result<Self> {
        let mut acc: BTreeMap<TermKey, CMatrix<T>> = BTreeMap::new();
        for term in terms {
            check_dim(dim, term.coeff.dim())?;
            if let Some((factor, key)) = contract(&term.noise, term.dt_power, alpha) {
                let scaled = term.coeff.matrix().scale_real(factor);
                accumulate(&mut acc, key, scaled);
            }
        }
        Ok(Self::from_map(dim, acc))
    }

    fn from_map(dim: usize, map: impl IntoIterator<Item = (TermKey, CMatrix<T>)>) -> Self {
        let prune = T::prune_tol();
        let terms = map
            .into_iter()
            .filter(|(_, m)| m.max_abs() >= prune)
            .map(|(key, m)| ItoTerm::new(OperatorMatrix::new(m), key.noise, key.dt_power))
            .collect();
        Self { dim, terms }
    }

    fn to_map(&self) -> BTreeMap<TermKey, CMatrix<T>> {
        self.terms
            .iter()
            .map(|t| {
                (
                    TermKey {
                        dt_power: t.dt_power,
                        noise: t.noise.clone(),
                    },
                    t.coeff.matrix().clone(),
                )
            })
            .collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ItoTerm<T>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a given monomial, if present.
    pub fn coefficient(&self, noise: &[NoiseFactor], dt_power: u8) -> Option<&OperatorMatrix<T>> {
        self.terms
            .iter()
            .find(|t| t.dt_power == dt_power && t.noise == noise)
            .map(|t| &t.coeff)
    }

    fn combine(&self, rhs: &Self, sign: T) -> Result<Self> {
        check_dim(self.dim, rhs.dim)?;
        let mut acc = self.to_map();
        for (key, m) in rhs.to_map() {
            accumulate(&mut acc, key, m.scale_real(sign));
        }
        Ok(Self::from_map(self.dim, acc))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, T::one())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, -T::one())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map_coeffs(|m| m.scale(s))
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map_coeffs(|m| m.scale_real(s))
    }

    /// `op * self`
    pub fn left_mul(&self, op: &OperatorMatrix<T>) -> Result<Self> {
        check_dim(self.dim, op.dim())?;
        Ok(self.map_coeffs(|m| op.matrix().matmul(m)))
    }

    /// `self * op`
    pub fn right_mul(&self, op: &OperatorMatrix<T>) -> Result<Self> {
        check_dim(self.dim, op.dim())?;
        Ok(self.map_coeffs(|m| m.matmul(op.matrix())))
    }

    /// `[self, op]`, coefficient by coefficient.
    pub fn commutator_with(&self, op: &OperatorMatrix<T>) -> Result<Self> {
        check_dim(self.dim, op.dim())?;
        Ok(self.map_coeffs(|m| m.commutator(op.matrix())))
    }

    fn map_coeffs(&self, f: impl Fn(&CMatrix<T>) -> CMatrix<T>) -> Self {
        let map = self.terms.iter().map(|t| {
            (
                TermKey {
                    dt_power: t.dt_power,
                    noise: t.noise.clone(),
                },
                f(t.coeff.matrix()),
            )
        });
        Self::from_map(self.dim, map)
    }

    /// `sqrt(sum over monomials of ||coefficient difference||_F^2)`.
    pub fn distance(&self, rhs: &Self) -> Result<T> {
        let diff = self.sub(rhs)?;
        Ok(diff
            .terms
            .iter()
            .map(|t| {
                let f = t.coeff.frobenius_norm();
                f * f
            })
            .sum::<T>()
            .sqrt())
    }

    /// Re-runs normalization; a normalized expression is a fixed point.
    pub fn renormalized(&self, alpha: T) -> Result<Self> {
        Self::normalized(self.dim, self.terms.clone(), alpha)
    }
}

fn accumulate<T: Real>(acc: &mut BTreeMap<TermKey, CMatrix<T>>, key: TermKey, m: CMatrix<T>) {
    match acc.get_mut(&key) {
        Some(existing) => *existing = existing.add(&m),
        None => {
            acc.insert(key, m);
        }
    }
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("bath occupation alpha must be >= 0, got {alpha}")))
    }
}

/// Product of two expressions under the Ito table.
pub fn ito_product<T: Real>(
    a: &ItoExpression<T>,
    b: &ItoExpression<T>,
    alpha: T,
) -> Result<ItoExpression<T>> {
    check_dim(a.dim, b.dim)?;
    check_alpha(alpha)?;
    let mut acc: BTreeMap<TermKey, CMatrix<T>> = BTreeMap::new();
    for ta in &a.terms {
        for tb in &b.terms {
            if ta.doubled_order() + tb.doubled_order() > 2 {
                continue;
            }
            let mut noise = ta.noise.clone();
            noise.extend_from_slice(&tb.noise);
            let Some((factor, key)) = contract(&noise, ta.dt_power + tb.dt_power, alpha) else {
                continue;
            };
            let product = ta.coeff.matrix().matmul(tb.coeff.matrix()).scale_real(factor);
            accumulate(&mut acc, key, product);
        }
    }
    Ok(ItoExpression::from_map(a.dim, acc))
}

/// `dH = sum_j [c_{j+1}^dagger c_j dW^j + c_j^dagger c_{j+1} dWbar^j]`.
pub fn hamiltonian_increment<T: Real>(chain: &Chain) -> Result<ItoExpression<T>> {
    let dim = chain.dim();
    let mut terms = Vec::with_capacity(2 * (chain.length() - 1));
    for j in chain.edges() {
        terms.push(ItoTerm::new(right_hop_op(chain, j)?, vec![NoiseFactor::w(j)], 0));
        terms.push(ItoTerm::new(left_hop_op(chain, j)?, vec![NoiseFactor::wbar(j)], 0));
    }
    ItoExpression::normalized(dim, terms, T::zero())
}

/// Second-order expansion of `exp(i dH) O exp(-i dH)`:
/// `dO = i[dH, O] - 1/2 [dH, [dH, O]]` under the Ito table.
pub fn heisenberg_increment<T: Real>(
    chain: &Chain,
    alpha: T,
    op: &OperatorMatrix<T>,
) -> Result<ItoExpression<T>> {
    check_dim(chain.dim(), op.dim())?;
    let dh = hamiltonian_increment::<T>(chain)?;
    heisenberg_increment_with(&dh, alpha, op)
}

/// Same as [`heisenberg_increment`] with a precomputed `dH`.
pub fn heisenberg_increment_with<T: Real>(
    dh: &ItoExpression<T>,
    alpha: T,
    op: &OperatorMatrix<T>,
) -> Result<ItoExpression<T>> {
    let inner = dh.commutator_with(op)?;
    let first = inner.scale(Complex::new(T::zero(), T::one()));
    let outer = ito_product(dh, &inner, alpha)?.sub(&ito_product(&inner, dh, alpha)?)?;
    first.sub(&outer.scale_real(T::half()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoration {
    Plain,
    Plus,
    Minus,
}

/// Edge noise `dB^k = i[c_{k+1}^dagger c_k dW^k - c_k^dagger c_{k+1} dWbar^k]`.
///
/// The decorated variants scale the `dW` term by `exp(+-delta/2)` and the
/// `dWbar` term by `exp(-+delta/2)` with the linearizing
/// `delta = ln(alpha/(1+alpha))`; they need `alpha > 0`.
pub fn edge_noise<T: Real>(
    chain: &Chain,
    k: usize,
    decoration: Decoration,
    alpha: T,
) -> Result<ItoExpression<T>> {
    let delta = match decoration {
        Decoration::Plain => {
            check_alpha(alpha)?;
            T::zero()
        }
        _ => cole_hopf_params(alpha)?.delta,
    };
    edge_noise_with_delta(chain, k, decoration, delta)
}

/// Decorated edge noise for an arbitrary exponent `delta`.
pub fn edge_noise_with_delta<T: Real>(
    chain: &Chain,
    k: usize,
    decoration: Decoration,
    delta: T,
) -> Result<ItoExpression<T>> {
    chain.check_edge(k)?;
    let half = delta * T::half();
    let (w_scale, wbar_scale) = match decoration {
        Decoration::Plain => (T::one(), T::one()),
        Decoration::Plus => (half.exp(), (-half).exp()),
        Decoration::Minus => ((-half).exp(), half.exp()),
    };
    let i = Complex::new(T::zero(), T::one());
    let terms = vec![
        ItoTerm::new(
            right_hop_op::<T>(chain, k)?.scale(i * w_scale),
            vec![NoiseFactor::w(k)],
            0,
        ),
        ItoTerm::new(
            left_hop_op::<T>(chain, k)?.scale(-i * wbar_scale),
            vec![NoiseFactor::wbar(k)],
            0,
        ),
    ];
    ItoExpression::normalized(chain.dim(), terms, T::zero())
}

/// Coefficient of `dt` with no noise.
pub fn drift<T: Real>(e: &ItoExpression<T>) -> OperatorMatrix<T> {
    e.coefficient(&[], 1)
        .cloned()
        .unwrap_or_else(|| OperatorMatrix::zeros(e.dim))
}

/// All `dt^0` terms carrying noise (the martingale part).
pub fn noise_component<T: Real>(e: &ItoExpression<T>) -> ItoExpression<T> {
    ItoExpression {
        dim: e.dim,
        terms: e
            .terms
            .iter()
            .filter(|t| t.dt_power == 0 && !t.noise.is_empty())
            .cloned()
            .collect(),
    }
}

/// `dt`-coefficient of `noise(e1) * noise(e2)`, `e1` on the left.
pub fn noise_correlator<T: Real>(
    e1: &ItoExpression<T>,
    e2: &ItoExpression<T>,
    alpha: T,
) -> Result<OperatorMatrix<T>> {
    let product = ito_product(&noise_component(e1), &noise_component(e2), alpha)?;
    Ok(drift(&product))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{centered_number_op, height_op, number_op, total_number_op};

    type Op = OperatorMatrix<f64>;

    fn chain(l: usize) -> Chain {
        Chain::new(l).unwrap()
    }

    fn random_op(dim: usize, seed: u64) -> Op {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Op::new(CMatrix::from_fn(dim, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }))
    }

    #[test]
    fn hamiltonian_increment_shape() {
        let dh = hamiltonian_increment::<f64>(&chain(2)).unwrap();
        assert_eq!(dh.len(), 2);
        let keys: Vec<_> = dh.terms().iter().map(|t| t.noise.clone()).collect();
        assert!(keys.contains(&vec![NoiseFactor::w(1)]));
        assert!(keys.contains(&vec![NoiseFactor::wbar(1)]));
        let dh5 = hamiltonian_increment::<f64>(&chain(5)).unwrap();
        assert_eq!(dh5.len(), 8);
        assert_eq!(drift(&dh5), Op::zeros(32));
    }

    #[test]
    fn ito_table_contractions() {
        let ch = chain(3);
        let a = random_op(8, 1);
        let b = random_op(8, 2);
        let alpha = 0.7;
        let aw = ItoExpression::noise_term(a.clone(), NoiseFactor::w(1));
        let bwbar = ItoExpression::noise_term(b.clone(), NoiseFactor::wbar(1));
        let prod = ito_product(&aw, &bwbar, alpha).unwrap();
        assert_eq!(prod.len(), 1);
        let want = (&a * &b).scale_real(1.0 + alpha);
        assert!(drift(&prod).frobenius_distance(&want) < 1e-13);

        let reversed = ito_product(&bwbar, &aw, alpha).unwrap();
        let want = (&b * &a).scale_real(alpha);
        assert!(drift(&reversed).frobenius_distance(&want) < 1e-13);

        let off_edge = ItoExpression::noise_term(b.clone(), NoiseFactor::w(2));
        let bwbar2 = ItoExpression::noise_term(b.clone(), NoiseFactor::wbar(2));
        assert!(ito_product(&aw, &bwbar2, alpha).unwrap().is_empty());
        assert!(ito_product(&aw, &off_edge, alpha).unwrap().is_empty());
        // dW dW = 0
        let bw = ItoExpression::noise_term(b, NoiseFactor::w(1));
        assert!(ito_product(&aw, &bw, alpha).unwrap().is_empty());
        // dt dW = 0
        let adt = ItoExpression::drift_term(a);
        assert!(ito_product(&adt, &bw, alpha).unwrap().is_empty());
        assert!(ito_product(&adt, &adt, alpha).unwrap().is_empty());
        let _ = ch;
    }

    #[test]
    fn order_matters_by_a_commutator() {
        // ito(A dW, B dWbar) - ito(B dWbar, A dW) = (1+a) AB - a BA
        let a = random_op(4, 3);
        let b = random_op(4, 4);
        let alpha = 1.3;
        let aw = ItoExpression::noise_term(a.clone(), NoiseFactor::w(1));
        let bwb = ItoExpression::noise_term(b.clone(), NoiseFactor::wbar(1));
        let lhs = &drift(&ito_product(&aw, &bwb, alpha).unwrap())
            - &drift(&ito_product(&bwb, &aw, alpha).unwrap());
        let ab = &a * &b;
        let ba = &b * &a;
        let want = &(&ab - &ba).scale_real(alpha) + &ab;
        assert!(lhs.frobenius_distance(&want) < 1e-13);
        assert!(lhs.frobenius_norm() > 1e-3);
    }

    #[test]
    fn normalization_is_idempotent_and_prunes() {
        let a = random_op(4, 5);
        let terms = vec![
            ItoTerm::new(a.clone(), vec![NoiseFactor::w(1), NoiseFactor::wbar(1)], 0),
            ItoTerm::new(a.clone(), vec![NoiseFactor::wbar(1), NoiseFactor::w(1)], 0),
            ItoTerm::new(a.clone(), vec![NoiseFactor::w(1)], 1),
            ItoTerm::new(a.scale_real(1e-16), vec![NoiseFactor::w(1)], 0),
        ];
        let e = ItoExpression::normalized(4, terms, 0.5).unwrap();
        assert_eq!(e.len(), 1);
        assert!(drift(&e).frobenius_distance(&a.scale_real(2.0)) < 1e-13);
        assert_eq!(e.renormalized(0.5).unwrap(), e);
    }

    #[test]
    fn heisenberg_of_identity_and_total_number_vanish() {
        let ch = chain(4);
        let id = Op::identity(16);
        assert!(heisenberg_increment(&ch, 0.8, &id).unwrap().is_empty());
        let n: Op = total_number_op(&ch).unwrap();
        let dn = heisenberg_increment(&ch, 0.8, &n).unwrap();
        assert!(dn.is_empty(), "total number must be conserved, got {} terms", dn.len());
    }

    #[test]
    fn number_operator_drift_matches_closed_form() {
        let ch = chain(5);
        for &alpha in &[0.0, 1.0] {
            for k in 2..=4 {
                let n = |j| number_op::<f64>(&ch, j).unwrap();
                let id = Op::identity(32);
                let tasep = &(&n(k + 1) * &(&id - &n(k))) - &(&n(k) * &(&id - &n(k - 1)));
                let ssep = &(&n(k + 1) - &n(k)) - &(&n(k) - &n(k - 1));
                let want = &tasep + &ssep.scale_real(alpha);
                let got = drift(&heisenberg_increment(&ch, alpha, &n(k)).unwrap());
                assert!(got.frobenius_distance(&want) < 1e-12);
            }
        }
    }

    #[test]
    fn edge_noise_properties() {
        let ch = chain(4);
        let db = edge_noise::<f64>(&ch, 2, Decoration::Plain, 1.0).unwrap();
        assert_eq!(drift(&db), Op::zeros(16));
        assert_eq!(db.len(), 2);

        let plus = edge_noise::<f64>(&ch, 2, Decoration::Plus, 1.0).unwrap();
        let w_plain = db.coefficient(&[NoiseFactor::w(2)], 0).unwrap();
        let w_plus = plus.coefficient(&[NoiseFactor::w(2)], 0).unwrap();
        let s = 0.5f64.sqrt();
        assert!(w_plus.frobenius_distance(&w_plain.scale_real(s)) < 1e-15);
        let wb_plain = db.coefficient(&[NoiseFactor::wbar(2)], 0).unwrap();
        let wb_plus = plus.coefficient(&[NoiseFactor::wbar(2)], 0).unwrap();
        assert!(wb_plus.frobenius_distance(&wb_plain.scale_real(1.0 / s)) < 1e-14);

        let db3 = edge_noise::<f64>(&ch, 3, Decoration::Plain, 1.0).unwrap();
        let corr = noise_correlator(&db, &db3, 1.0).unwrap();
        assert_eq!(corr.max_abs(), 0.0);
        assert!(matches!(
            edge_noise::<f64>(&ch, 2, Decoration::Minus, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            edge_noise::<f64>(&ch, 4, Decoration::Plain, 1.0),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn height_noise_is_edge_noise() {
        let ch = chain(5);
        for k in 1..=4 {
            let h: Op = height_op(&ch, k).unwrap();
            let dh = heisenberg_increment(&ch, 0.6, &h).unwrap();
            let db = edge_noise(&ch, k, Decoration::Plain, 0.6).unwrap();
            assert!(noise_component(&dh).distance(&db).unwrap() < 1e-12);
        }
    }

    #[test]
    fn contact_correlator_matches_potential() {
        let ch = chain(5);
        let alpha = 1.0;
        let k = 3;
        let plus = edge_noise::<f64>(&ch, k, Decoration::Plus, alpha).unwrap();
        let minus = edge_noise::<f64>(&ch, k, Decoration::Minus, alpha).unwrap();
        let corr = noise_correlator(&plus, &minus, alpha).unwrap();
        let n = |j| number_op::<f64>(&ch, j).unwrap();
        let id = Op::identity(32);
        let v = &(&(&id - &n(k)) * &n(k + 1)).scale_real(1.0 / (1.0 + alpha))
            + &(&n(k) * &(&id - &n(k + 1))).scale_real(1.0 / alpha);
        assert!(corr.frobenius_distance(&v.scale_real(alpha * (alpha + 1.0))) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_algebra_error() {
        let a = ItoExpression::constant(Op::identity(4));
        let b = ItoExpression::constant(Op::identity(8));
        assert!(matches!(ito_product(&a, &b, 1.0), Err(Error::Dimension { .. })));
        let ch = chain(3);
        assert!(heisenberg_increment(&ch, 1.0, &Op::identity(4)).is_err());
    }

    #[test]
    fn burgers_noise_matches_number_noise() {
        let ch = chain(4);
        let n: Op = number_op(&ch, 2).unwrap();
        let nt: Op = centered_number_op(&ch, 2).unwrap();
        let a = noise_component(&heisenberg_increment(&ch, 0.4, &n).unwrap());
        let b = noise_component(&heisenberg_increment(&ch, 0.4, &nt).unwrap());
        assert!(a.distance(&b).unwrap() < 1e-15);
    }
}
