//! Finite open chain, Jordan-Wigner fermions and the derived observables.
//!
//! Basis convention: a basis index is the occupation bitstring with site 1
//! as the least significant bit, `index = sum_j n_j 2^(j-1)`. The
//! Jordan-Wigner string of `c_j` runs over the sites `< j`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::monomial::MonomialOp;
use crate::operator::OperatorMatrix;
use crate::real::Real;
use crate::state::DensityMatrix;

/// Largest chain accepted at all (diagonal / classical-sector work).
pub const MAX_SITES: usize = 16;
/// Largest chain for which dense `2^L x 2^L` operators are materialized.
pub const MAX_DENSE_SITES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    length: usize,
}

/// Validates `L` and returns the chain descriptor.
pub fn build_chain(length: usize) -> Result<Chain> {
    Chain::new(length)
}

impl Chain {
    pub fn new(length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::Size(format!("chain length {length} < 2 has no edge")));
        }
        if length > MAX_SITES {
            return Err(Error::Size(format!(
                "chain length {length} exceeds the cap of {MAX_SITES} sites"
            )));
        }
        Ok(Self { length })
    }

    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.length
    }

    pub fn sites(&self) -> RangeInclusive<usize> {
        1..=self.length
    }

    pub fn edges(&self) -> RangeInclusive<usize> {
        1..=self.length - 1
    }

    pub fn check_site(&self, j: usize) -> Result<()> {
        if (1..=self.length).contains(&j) {
            Ok(())
        } else {
            Err(Error::Index(format!("site {j} outside 1..={}", self.length)))
        }
    }

    pub fn check_edge(&self, k: usize) -> Result<()> {
        if (1..self.length).contains(&k) {
            Ok(())
        } else {
            Err(Error::Index(format!("edge {k} outside 1..={}", self.length - 1)))
        }
    }

    pub fn require_dense(&self) -> Result<()> {
        if self.length > MAX_DENSE_SITES {
            Err(Error::Size(format!(
                "dense operators are capped at {MAX_DENSE_SITES} sites, chain has {}",
                self.length
            )))
        } else {
            Ok(())
        }
    }

    /// Particle-hole conjugation combined with spatial reflection, as a basis
    /// permutation: site `j` of the image is the complement of site `L+1-j`.
    pub fn mirror_index(&self, b: usize) -> usize {
        let l = self.length;
        let mut out = 0;
        for j in 0..l {
            if b >> j & 1 == 0 {
                out |= 1 << (l - 1 - j);
            }
        }
        out
    }
}

#[inline]
pub fn occupied(basis: usize, site: usize) -> bool {
    basis >> (site - 1) & 1 == 1
}

/// Eigenvalue of `h_k = sum_{j<=k} (n_j - 1/2)` on a basis state.
pub fn height_value<T: Real>(basis: usize, k: usize) -> T {
    let occupied_count = (basis & ((1usize << k) - 1)).count_ones() as usize;
    T::from_count(occupied_count) - T::half() * T::from_count(k)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationConfig {
    bits: Vec<bool>,
}

impl OccupationConfig {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_index(length: usize, index: usize) -> Self {
        Self {
            bits: (0..length).map(|j| index >> j & 1 == 1).collect(),
        }
    }

    /// `1010...` with site 1 occupied when `first_occupied`.
    pub fn alternating(length: usize, first_occupied: bool) -> Self {
        Self {
            bits: (0..length).map(|j| (j % 2 == 0) == first_occupied).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn occupied(&self, site: usize) -> bool {
        self.bits[site - 1]
    }

    pub fn particle_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| if b { acc | 1 << j } else { acc })
    }

    pub fn check_chain(&self, chain: &Chain) -> Result<()> {
        if self.len() == chain.length() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "configuration has {} sites, chain has {}",
                self.len(),
                chain.length()
            )))
        }
    }
}

/// Parses `"0110"`, site 1 first.
impl FromStr for OccupationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid occupation character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for OccupationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Scalars of the Cole-Hopf transform at a given bath occupation `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColeHopfParams<T> {
    pub alpha: T,
    /// `ln(alpha / (1 + alpha))`, the exponent that linearizes the drift.
    pub delta: T,
    /// `(sqrt(alpha + 1) - sqrt(alpha))^2`, the absorbed constant decay rate.
    pub mu: T,
    /// `sqrt(alpha (alpha + 1))`, the lattice diffusion constant.
    pub diffusion: T,
}

pub fn cole_hopf_params<T: Real>(alpha: T) -> Result<ColeHopfParams<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "Cole-Hopf transform needs alpha > 0, got {alpha}"
        )));
    }
    let one = T::one();
    let root = (alpha + one).sqrt() - alpha.sqrt();
    Ok(ColeHopfParams {
        alpha,
        delta: (alpha / (one + alpha)).ln(),
        mu: root * root,
        diffusion: (alpha * (alpha + one)).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Sparse Jordan-Wigner operators

/// `c_j` as a monomial operator.
pub fn annihilation_monomial<T: Real>(chain: &Chain, j: usize) -> Result<MonomialOp<T>> {
    chain.check_site(j)?;
    let bit = 1usize << (j - 1);
    let string_mask = bit - 1;
    let columns = (0..chain.dim())
        .map(|b| {
            if b & bit == 0 {
                None
            } else {
                let sign = if (b & string_mask).count_ones() % 2 == 0 {
                    T::one()
                } else {
                    -T::one()
                };
                Some((b ^ bit, sign))
            }
        })
        .collect();
    Ok(MonomialOp::from_columns(columns))
}

pub fn creation_monomial<T: Real>(chain: &Chain, j: usize) -> Result<MonomialOp<T>> {
    Ok(annihilation_monomial(chain, j)?.adjoint())
}

/// `c_{j+1}^dagger c_j`: moves a particle from site `j` to site `j+1`.
pub fn right_hop_monomial<T: Real>(chain: &Chain, edge: usize) -> Result<MonomialOp<T>> {
    chain.check_edge(edge)?;
    Ok(creation_monomial(chain, edge + 1)?.compose(&annihilation_monomial(chain, edge)?))
}

/// `c_j^dagger c_{j+1}`: moves a particle from site `j+1` to site `j`.
pub fn left_hop_monomial<T: Real>(chain: &Chain, edge: usize) -> Result<MonomialOp<T>> {
    chain.check_edge(edge)?;
    Ok(creation_monomial(chain, edge)?.compose(&annihilation_monomial(chain, edge + 1)?))
}

// ---------------------------------------------------------------------------
// Dense operators

/// Annihilation operator `c_j`; the creation operator is its adjoint.
pub fn fermion_op<T: Real>(chain: &Chain, j: usize) -> Result<OperatorMatrix<T>> {
    chain.require_dense()?;
    Ok(annihilation_monomial(chain, j)?.to_operator())
}

pub fn creation_op<T: Real>(chain: &Chain, j: usize) -> Result<OperatorMatrix<T>> {
    Ok(fermion_op(chain, j)?.adjoint())
}

pub fn right_hop_op<T: Real>(chain: &Chain, edge: usize) -> Result<OperatorMatrix<T>> {
    chain.require_dense()?;
    Ok(right_hop_monomial(chain, edge)?.to_operator())
}

pub fn left_hop_op<T: Real>(chain: &Chain, edge: usize) -> Result<OperatorMatrix<T>> {
    chain.require_dense()?;
    Ok(left_hop_monomial(chain, edge)?.to_operator())
}

fn diagonal_op<T: Real>(chain: &Chain, f: impl Fn(usize) -> T) -> Result<OperatorMatrix<T>> {
    chain.require_dense()?;
    let d: Vec<T> = (0..chain.dim()).map(f).collect();
    Ok(OperatorMatrix::from_real_diagonal(&d))
}

fn indicator<T: Real>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

pub fn number_op<T: Real>(chain: &Chain, j: usize) -> Result<OperatorMatrix<T>> {
    chain.check_site(j)?;
    diagonal_op(chain, |b| indicator(occupied(b, j)))
}

/// `n_j - 1/2`.
pub fn centered_number_op<T: Real>(chain: &Chain, j: usize) -> Result<OperatorMatrix<T>> {
    chain.check_site(j)?;
    diagonal_op(chain, |b| indicator::<T>(occupied(b, j)) - T::half())
}

/// Total particle number.
pub fn total_number_op<T: Real>(chain: &Chain) -> Result<OperatorMatrix<T>> {
    diagonal_op(chain, |b| T::from_count(b.count_ones() as usize))
}

/// Height `h_k = sum_{j<=k} (n_j - 1/2)`, with `h_0 = 0` at the left edge.
pub fn height_op<T: Real>(chain: &Chain, k: usize) -> Result<OperatorMatrix<T>> {
    if k != 0 {
        chain.check_site(k)?;
    }
    diagonal_op(chain, |b| height_value(b, k))
}

/// `Z_k = exp(delta h_k)` at the linearizing `delta = ln(alpha/(1+alpha))`.
/// `k = 0` gives the identity. The time factor `exp(mu t)` is left to callers.
pub fn cole_hopf_op<T: Real>(chain: &Chain, k: usize, alpha: T) -> Result<OperatorMatrix<T>> {
    let params = cole_hopf_params(alpha)?;
    cole_hopf_op_with_delta(chain, k, params.delta)
}

/// `exp(delta h_k)` for an arbitrary exponent.
pub fn cole_hopf_op_with_delta<T: Real>(
    chain: &Chain,
    k: usize,
    delta: T,
) -> Result<OperatorMatrix<T>> {
    if k != 0 {
        chain.check_site(k)?;
    }
    diagonal_op(chain, |b| (delta * height_value::<T>(b, k)).exp())
}

/// Current through edge `k`: `n_{k+1}(1 - n_k) + alpha (n_{k+1} - n_k)`.
/// Positive current flows from site `k+1` into site `k`.
pub fn current_op<T: Real>(chain: &Chain, k: usize, alpha: T) -> Result<OperatorMatrix<T>> {
    chain.check_edge(k)?;
    if alpha < T::zero() {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    diagonal_op(chain, |b| {
        let right: T = indicator(occupied(b, k + 1));
        let left: T = indicator(occupied(b, k));
        right * (T::one() - left) + alpha * (right - left)
    })
}

/// Rank-one projector onto the basis state of `config`.
pub fn pointer_projector<T: Real>(
    chain: &Chain,
    config: &OccupationConfig,
) -> Result<OperatorMatrix<T>> {
    config.check_chain(chain)?;
    let target = config.index();
    diagonal_op(chain, |b| indicator(b == target))
}

pub fn pointer_density<T: Real>(
    chain: &Chain,
    config: &OccupationConfig,
) -> Result<DensityMatrix<T>> {
    let p = pointer_projector::<T>(chain, config)?;
    Ok(DensityMatrix::new_unchecked(p.into_matrix()))
}

/// Whether `op` factorizes as `(something) (x) identity` on `site`.
pub fn acts_trivially_on<T: Real>(op: &OperatorMatrix<T>, site: usize) -> bool {
    let bit = 1usize << (site - 1);
    let n = op.dim();
    for r in 0..n {
        for c in 0..n {
            let v = op.get(r, c);
            if (r ^ c) & bit != 0 {
                if v.norm() != T::zero() {
                    return false;
                }
            } else if v != op.get(r ^ bit, c ^ bit) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    type Op = OperatorMatrix<f64>;

    fn chain(l: usize) -> Chain {
        Chain::new(l).unwrap()
    }

    fn diag(op: &Op) -> Vec<f64> {
        assert!(op.is_diagonal());
        op.real_diagonal()
    }

    #[test]
    fn build_chain_sizes() {
        assert_eq!(build_chain(2).unwrap().dim(), 4);
        assert_eq!(build_chain(5).unwrap().dim(), 32);
        assert!(matches!(build_chain(1), Err(Error::Size(_))));
        assert!(matches!(build_chain(MAX_SITES + 1), Err(Error::Size(_))));
        assert!(build_chain(12).is_ok());
    }

    #[test]
    fn c1_lowers_site_one() {
        let c1: Op = fermion_op(&chain(2), 1).unwrap();
        assert_eq!(c1.get(0, 1), Complex::new(1.0, 0.0));
        assert_eq!(c1.max_abs(), 1.0);
    }

    #[test]
    fn anticommutators_exact() {
        let ch = chain(3);
        let c: Vec<Op> = ch.sites().map(|j| fermion_op(&ch, j).unwrap()).collect();
        let id = Op::identity(ch.dim());
        for i in 0..3 {
            for j in 0..3 {
                let ccd = c[i].anticommutator(&c[j].adjoint());
                let want = if i == j { id.clone() } else { Op::zeros(ch.dim()) };
                assert_eq!(ccd, want, "{{c_{}, c_{}^+}}", i + 1, j + 1);
                assert_eq!(c[i].anticommutator(&c[j]), Op::zeros(ch.dim()));
            }
        }
    }

    #[test]
    fn number_operators_follow_basis_order() {
        let ch = chain(2);
        assert_eq!(diag(&number_op(&ch, 1).unwrap()), vec![0., 1., 0., 1.]);
        assert_eq!(diag(&number_op(&ch, 2).unwrap()), vec![0., 0., 1., 1.]);
        for v in diag(&centered_number_op(&ch, 2).unwrap()) {
            assert!(v == 0.5 || v == -0.5);
        }
        // n_j = c_j^+ c_j
        let c1: Op = fermion_op(&ch, 1).unwrap();
        assert_eq!(&c1.adjoint() * &c1, number_op(&ch, 1).unwrap());
    }

    #[test]
    fn height_values() {
        let ch = chain(2);
        assert_eq!(diag(&height_op(&ch, 1).unwrap()), vec![-0.5, 0.5, -0.5, 0.5]);
        assert_eq!(diag(&height_op(&ch, 2).unwrap()), vec![-1., 0., 0., 1.]);
        let ch = chain(5);
        let h5: Op = height_op(&ch, 5).unwrap();
        for (b, v) in diag(&h5).into_iter().enumerate() {
            assert_eq!(v, b.count_ones() as f64 - 2.5);
        }
        for k in 1..=5 {
            let dh = &height_op::<f64>(&ch, k).unwrap() - &height_op(&ch, k - 1).unwrap();
            assert_eq!(dh, centered_number_op(&ch, k).unwrap());
        }
    }

    #[test]
    fn cole_hopf_scalars_and_operator() {
        let p = cole_hopf_params(1.0f64).unwrap();
        assert!((p.delta - 0.5f64.ln()).abs() < 1e-15);
        assert!((p.mu - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((p.delta + 0.693147).abs() < 1e-6 && (p.mu - 0.171573).abs() < 1e-6);
        let z: Op = cole_hopf_op(&chain(2), 1, 1.0).unwrap();
        let s = 2f64.sqrt();
        for (got, want) in diag(&z).into_iter().zip([s, 1.0 / s, s, 1.0 / s]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(matches!(cole_hopf_params(0.0f64), Err(Error::Domain(_))));
        assert!(cole_hopf_op::<f64>(&chain(2), 1, -1.0).is_err());
        let p = cole_hopf_params(0.5f64).unwrap();
        assert!((p.mu - 0.267949).abs() < 1e-6);
    }

    #[test]
    fn cole_hopf_commutes_with_numbers() {
        let ch = chain(4);
        let z: Op = cole_hopf_op(&ch, 2, 0.7).unwrap();
        assert!(z.real_diagonal().iter().all(|&v| v > 0.0));
        for j in ch.sites() {
            let n = number_op(&ch, j).unwrap();
            assert_eq!(z.commutator(&n).max_abs(), 0.0);
        }
    }

    #[test]
    fn pointer_projectors() {
        let ch = chain(2);
        let cfg: OccupationConfig = "10".parse().unwrap();
        assert_eq!(cfg.index(), 1);
        let p: Op = pointer_projector(&ch, &cfg).unwrap();
        assert_eq!(diag(&p), vec![0., 1., 0., 0.]);
        assert_eq!(&p * &p, p);
        let ch = chain(3);
        let mut sum = Op::zeros(8);
        for idx in 0..8 {
            sum = &sum + &pointer_projector(&ch, &OccupationConfig::from_index(3, idx)).unwrap();
        }
        assert_eq!(sum, Op::identity(8));
        let bad: OccupationConfig = "101".parse().unwrap();
        assert!(matches!(pointer_projector::<f64>(&chain(2), &bad), Err(Error::Config(_))));
    }

    #[test]
    fn pointer_density_stationary_under_number_conjugation() {
        let ch = chain(3);
        let rho = pointer_density::<f64>(&ch, &"011".parse().unwrap()).unwrap();
        let r = rho.as_operator();
        for j in ch.sites() {
            let n = number_op(&ch, j).unwrap();
            assert_eq!(n.commutator(&r).max_abs(), 0.0);
        }
        assert_eq!(rho.trace().re, 1.0);
    }

    #[test]
    fn current_operator_values() {
        let ch = chain(2);
        assert_eq!(diag(&current_op(&ch, 1, 0.0).unwrap()), vec![0., 0., 1., 0.]);
        assert_eq!(diag(&current_op(&ch, 1, 1.0).unwrap()), vec![0., -1., 2., 0.]);
        assert!(matches!(current_op::<f64>(&ch, 2, 1.0), Err(Error::Index(_))));
    }

    #[test]
    fn index_errors() {
        let ch = chain(3);
        assert!(matches!(fermion_op::<f64>(&ch, 0), Err(Error::Index(_))));
        assert!(matches!(fermion_op::<f64>(&ch, 4), Err(Error::Index(_))));
        assert!(matches!(number_op::<f64>(&ch, 4), Err(Error::Index(_))));
        assert!(matches!(height_op::<f64>(&ch, 4), Err(Error::Index(_))));
    }

    #[test]
    fn hopping_is_local_to_its_edge() {
        let ch = chain(5);
        for j in ch.edges() {
            let hop: Op = right_hop_op(&ch, j).unwrap();
            let dense = &creation_op(&ch, j + 1).unwrap() * &fermion_op(&ch, j).unwrap();
            assert_eq!(hop, dense);
            for s in ch.sites() {
                let trivial = acts_trivially_on(&hop, s);
                assert_eq!(trivial, s != j && s != j + 1, "edge {j}, site {s}");
            }
        }
        // A single fermion operator is not local: its string touches lower sites.
        let c3: Op = fermion_op(&ch, 3).unwrap();
        assert!(!acts_trivially_on(&c3, 1));
    }

    #[test]
    fn mirror_is_an_involution() {
        let ch = chain(4);
        for b in 0..16 {
            assert_eq!(ch.mirror_index(ch.mirror_index(b)), b);
        }
        // n_1 maps to 1 - n_L
        let n1: Op = number_op(&ch, 1).unwrap();
        let image = n1.permuted(|b| ch.mirror_index(b));
        let want = &Op::identity(16) - &number_op(&ch, 4).unwrap();
        assert_eq!(image, want);
    }

    #[test]
    fn config_parsing_round_trip() {
        let cfg: OccupationConfig = "01101".parse().unwrap();
        assert_eq!(cfg.to_string(), "01101");
        assert_eq!(OccupationConfig::from_index(5, cfg.index()), cfg);
        assert!("012".parse::<OccupationConfig>().is_err());
        assert_eq!(OccupationConfig::alternating(4, true).to_string(), "1010");
    }

    #[test]
    fn f32_algebra_is_exact_too() {
        let ch = chain(3);
        let c1: OperatorMatrix<f32> = fermion_op(&ch, 1).unwrap();
        let c3: OperatorMatrix<f32> = fermion_op(&ch, 3).unwrap();
        assert_eq!(c1.anticommutator(&c3).max_abs(), 0.0);
        assert_eq!(
            c3.anticommutator(&c3.adjoint()),
            OperatorMatrix::<f32>::identity(8)
        );
    }
}
