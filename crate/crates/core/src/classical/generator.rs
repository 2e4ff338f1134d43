//! Exact master equation of the ASEP on small lattices.

use crate::chain::{occupied, MAX_SITES};
use crate::error::{check_dim, Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Closed,
    /// Adds the bond between site `L` and site `1`.
    Periodic,
}

/// Rates of a particle hop across one bond.
///
/// `toward_lower` moves a particle from site `j+1` to site `j`; this is the
/// direction favored by the TASEP part of the quantum model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopRates<T> {
    pub toward_lower: T,
    pub toward_higher: T,
}

impl<T: Real> HopRates<T> {
    /// `(1 + alpha, alpha)`, the mean dynamics of the quantum chain.
    pub fn asep(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self {
            toward_lower: T::one() + alpha,
            toward_higher: alpha,
        })
    }

    pub fn symmetric(rate: T) -> Self {
        Self {
            toward_lower: rate,
            toward_higher: rate,
        }
    }
}

/// Sparse continuous-time Markov generator on `2^L` configurations.
///
/// Entry `(b', b)` is the rate of `b -> b'`; the diagonal holds minus the
/// exit rate so every column sums to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix<T> {
    dim: usize,
    /// `(from, to, rate)`, sorted, no duplicates, strictly positive rates.
    transitions: Vec<(usize, usize, T)>,
    exit: Vec<T>,
}

impl<T: Real> RateMatrix<T> {
    /// Builds from an arbitrary list of `(from, to, rate)`; duplicates are
    /// summed, zero rates and self-loops dropped.
    pub fn from_transitions(dim: usize, mut raw: Vec<(usize, usize, T)>) -> Result<Self> {
        raw.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut transitions: Vec<(usize, usize, T)> = Vec::with_capacity(raw.len());
        for (from, to, rate) in raw {
            if from >= dim || to >= dim {
                return Err(Error::Index(format!("transition {from}->{to} outside 0..{dim}")));
            }
            if rate < T::zero() || !rate.is_finite() {
                return Err(Error::Domain(format!("rate {rate} for {from}->{to}")));
            }
            if from == to || rate == T::zero() {
                continue;
            }
            match transitions.last_mut() {
                Some(last) if last.0 == from && last.1 == to => last.2 = last.2 + rate,
                _ => transitions.push((from, to, rate)),
            }
        }
        let mut exit = vec![T::zero(); dim];
        for &(from, _, rate) in &transitions {
            exit[from] = exit[from] + rate;
        }
        Ok(Self {
            dim,
            transitions,
            exit,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transitions(&self) -> &[(usize, usize, T)] {
        &self.transitions
    }

    pub fn exit_rates(&self) -> &[T] {
        &self.exit
    }

    pub fn max_exit_rate(&self) -> T {
        self.exit.iter().copied().fold(T::zero(), T::max)
    }

    /// Matrix entry `(to, from)`.
    pub fn entry(&self, to: usize, from: usize) -> T {
        if to == from {
            return -self.exit[from];
        }
        match self
            .transitions
            .binary_search_by(|t| (t.0, t.1).cmp(&(from, to)))
        {
            Ok(i) => self.transitions[i].2,
            Err(_) => T::zero(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for b in 0..n {
            out[b * n + b] = -self.exit[b];
        }
        for &(from, to, rate) in &self.transitions {
            out[to * n + from] = rate;
        }
        out
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut sums: Vec<T> = self.exit.iter().map(|&e| -e).collect();
        for &(from, _, rate) in &self.transitions {
            sums[from] = sums[from] + rate;
        }
        sums
    }

    /// `Q p`.
    pub fn apply(&self, p: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, p.len())?;
        let mut out: Vec<T> = p.iter().zip(&self.exit).map(|(&x, &e)| -e * x).collect();
        for &(from, to, rate) in &self.transitions {
            out[to] = out[to] + rate * p[from];
        }
        Ok(out)
    }
}

/// ASEP generator with rates `(1 + alpha)` toward lower sites and `alpha`
/// toward higher sites.
pub fn classical_generator<T: Real>(
    length: usize,
    alpha: T,
    boundary: Boundary,
) -> Result<RateMatrix<T>> {
    classical_generator_with_rates(length, HopRates::asep(alpha)?, boundary)
}

pub fn classical_generator_with_rates<T: Real>(
    length: usize,
    rates: HopRates<T>,
    boundary: Boundary,
) -> Result<RateMatrix<T>> {
    if !(2..=MAX_SITES).contains(&length) {
        return Err(Error::Size(format!(
            "classical generator needs 2 <= L <= {MAX_SITES}, got {length}"
        )));
    }
    let dim = 1usize << length;
    let bonds: Vec<(usize, usize)> = {
        let mut b: Vec<_> = (1..length).map(|j| (j, j + 1)).collect();
        if boundary == Boundary::Periodic {
            b.push((length, 1));
        }
        b
    };
    let mut raw = Vec::new();
    for state in 0..dim {
        for &(lo, hi) in &bonds {
            let (lo_occ, hi_occ) = (occupied(state, lo), occupied(state, hi));
            let swapped = state ^ (1 << (lo - 1)) ^ (1 << (hi - 1));
            if hi_occ && !lo_occ {
                raw.push((state, swapped, rates.toward_lower));
            } else if lo_occ && !hi_occ {
                raw.push((state, swapped, rates.toward_higher));
            }
        }
    }
    RateMatrix::from_transitions(dim, raw)
}

fn check_distribution<T: Real>(p: &[T]) -> Result<()> {
    let tol = T::exact_tol();
    if let Some((i, &x)) = p.iter().enumerate().find(|(_, &x)| x < -tol || !x.is_finite()) {
        return Err(Error::InvalidState(format!("probability p[{i}] = {x}")));
    }
    let sum: T = p.iter().copied().sum();
    if (sum - T::one()).abs() > tol {
        return Err(Error::InvalidState(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// `exp(T Q) p0` by uniformization.
///
/// With `q >= max exit rate` and `P = I + Q/q`, `exp(tQ) = sum_n Pois(n; qt) P^n`.
/// All terms are non-negative, so the result is a probability vector up to the
/// truncated Poisson tail. The horizon is split into chunks with `q dt <= 30`
/// to keep the leading weight `exp(-q dt)` far from underflow.
pub fn master_evolve<T: Real>(generator: &RateMatrix<T>, p0: &[T], horizon: T) -> Result<Vec<T>> {
    check_dim(generator.dim(), p0.len())?;
    check_distribution(p0)?;
    if horizon < T::zero() || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon {horizon} must be finite and >= 0")));
    }
    let q = generator.max_exit_rate();
    let mut p = p0.to_vec();
    if horizon == T::zero() || q == T::zero() {
        return Ok(p);
    }
    let chunk_budget = T::lit(30.0);
    let chunks = (q * horizon / chunk_budget).ceil().to_usize().unwrap_or(1).max(1);
    let dt = horizon / T::from_count(chunks);
    let tail_tol = T::lit(1e-15).max(T::epsilon());
    for _ in 0..chunks {
        p = uniformized_step(generator, &p, q, dt, tail_tol);
    }
    Ok(p)
}

fn uniformized_step<T: Real>(g: &RateMatrix<T>, p: &[T], q: T, dt: T, tail_tol: T) -> Vec<T> {
    let lambda = q * dt;
    let mut weight = (-lambda).exp();
    let mut cumulative = weight;
    let mut term = p.to_vec();
    let mut out: Vec<T> = term.iter().map(|&x| weight * x).collect();
    let mut n = 0usize;
    let mut next = vec![T::zero(); p.len()];
    while T::one() - cumulative > tail_tol {
        n += 1;
        // term <- P term = term + Q term / q
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = term[i] - g.exit[i] / q * term[i];
        }
        for &(from, to, rate) in &g.transitions {
            next[to] = next[to] + rate / q * term[from];
        }
        std::mem::swap(&mut term, &mut next);
        weight = weight * lambda / T::from_count(n);
        cumulative = cumulative + weight;
        for (o, &x) in out.iter_mut().zip(&term) {
            *o = *o + weight * x;
        }
        if n > 10_000 {
            break;
        }
    }
    out
}
