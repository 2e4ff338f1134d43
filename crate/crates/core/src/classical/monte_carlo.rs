//! Rejection-free continuous-time Monte Carlo for the ASEP.
//!
//! Active bonds are kept in two indexed sets, one per hop direction, so an
//! event costs O(1): draw the waiting time from the total rate, pick a set
//! with probability proportional to its rate, pick a bond uniformly in it,
//! and refresh the three bonds touched by the hop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::generator::{Boundary, HopRates};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalState {
    /// `occupation[j - 1]` is site `j`.
    pub occupation: Vec<bool>,
    pub boundary: Boundary,
}

impl ClassicalState {
    pub fn new(occupation: Vec<bool>, boundary: Boundary) -> Result<Self> {
        let min = if boundary == Boundary::Periodic { 3 } else { 2 };
        if occupation.len() < min {
            return Err(Error::Size(format!(
                "{boundary:?} lattice needs at least {min} sites, got {}",
                occupation.len()
            )));
        }
        Ok(Self {
            occupation,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.occupation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupation.is_empty()
    }

    /// Bonds `1..L-1`, plus bond `L` joining site `L` to site `1` on a ring.
    pub fn bond_count(&self) -> usize {
        match self.boundary {
            Boundary::Closed => self.len() - 1,
            Boundary::Periodic => self.len(),
        }
    }

    /// Exactly `particles` particles placed uniformly at random.
    pub fn uniform_with_count(
        length: usize,
        particles: usize,
        boundary: Boundary,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if particles > length {
            return Err(Error::Domain(format!("{particles} particles on {length} sites")));
        }
        let mut occupation = vec![false; length];
        // Partial Fisher-Yates over site indices.
        let mut sites: Vec<usize> = (0..length).collect();
        for i in 0..particles {
            let j = rng.random_range(i..length);
            sites.swap(i, j);
            occupation[sites[i]] = true;
        }
        Self::new(occupation, boundary)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SampleOptions {
    /// Strictly increasing times in `[0, horizon]` at which to record.
    pub sample_times: Vec<f64>,
    pub record_states: bool,
    /// Bonds whose integrated current is recorded at every sample.
    pub tracked_bonds: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub times: Vec<f64>,
    /// Occupations at each sample time (empty unless requested).
    pub states: Vec<Vec<bool>>,
    /// `currents[s][i]`: net number of toward-lower hops across
    /// `tracked_bonds[i]` up to `times[s]`.
    pub currents: Vec<Vec<i64>>,
    pub events: u64,
}

/// Indexed set of bonds with O(1) insert, remove and uniform pick.
struct BondSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl BondSet {
    fn new(bonds: usize) -> Self {
        Self {
            items: Vec::with_capacity(bonds),
            pos: vec![ABSENT; bonds],
        }
    }

    fn set(&mut self, bond: usize, present: bool) {
        let at = self.pos[bond];
        if present && at == ABSENT {
            self.pos[bond] = self.items.len();
            self.items.push(bond);
        } else if !present && at != ABSENT {
            let last = self.items.pop().expect("non-empty set");
            if last != bond {
                self.items[at] = last;
                self.pos[last] = at;
            }
            self.pos[bond] = ABSENT;
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

struct Lattice {
    occ: Vec<bool>,
    bonds: usize,
    /// Bonds whose upper site is occupied and lower site empty.
    lower: BondSet,
    /// Bonds whose lower site is occupied and upper site empty.
    higher: BondSet,
}

impl Lattice {
    fn new(state: &ClassicalState) -> Self {
        let bonds = state.bond_count();
        let mut lattice = Self {
            occ: state.occupation.clone(),
            bonds,
            lower: BondSet::new(bonds),
            higher: BondSet::new(bonds),
        };
        for b in 0..bonds {
            lattice.refresh(b);
        }
        lattice
    }

    /// Zero-based sites joined by zero-based bond `b`.
    #[inline]
    fn ends(&self, b: usize) -> (usize, usize) {
        let l = self.occ.len();
        (b, if b + 1 == l { 0 } else { b + 1 })
    }

    fn refresh(&mut self, b: usize) {
        let (lo, hi) = self.ends(b);
        let (a, c) = (self.occ[lo], self.occ[hi]);
        self.lower.set(b, c && !a);
        self.higher.set(b, a && !c);
    }

    fn hop(&mut self, b: usize) {
        let (lo, hi) = self.ends(b);
        self.occ[lo] = !self.occ[lo];
        self.occ[hi] = !self.occ[hi];
        self.refresh(b);
        if b > 0 {
            self.refresh(b - 1);
        } else if self.bonds == self.occ.len() {
            self.refresh(self.bonds - 1);
        }
        if b + 1 < self.bonds {
            self.refresh(b + 1);
        } else if self.bonds == self.occ.len() {
            self.refresh(0);
        }
    }
}

fn check_rates(rates: &HopRates<f64>) -> Result<()> {
    let ok = |r: f64| r >= 0.0 && r.is_finite();
    if ok(rates.toward_lower) && ok(rates.toward_higher) {
        Ok(())
    } else {
        Err(Error::Domain(format!("hop rates {rates:?} must be finite and >= 0")))
    }
}

/// One trajectory of the continuous-time chain, exact in law and
/// deterministic per seed.
pub fn gillespie_sample(
    init: &ClassicalState,
    rates: HopRates<f64>,
    horizon: f64,
    seed: u64,
    options: &SampleOptions,
) -> Result<Trajectory> {
    check_rates(&rates)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be finite and >= 0")));
    }
    let times = if options.sample_times.is_empty() {
        vec![horizon]
    } else {
        options.sample_times.clone()
    };
    for (i, &t) in times.iter().enumerate() {
        if !(0.0..=horizon).contains(&t) || (i > 0 && t <= times[i - 1]) {
            return Err(Error::Domain(format!(
                "sample times must increase strictly within [0, {horizon}]"
            )));
        }
    }
    let bonds = init.bond_count();
    if let Some(&b) = options.tracked_bonds.iter().find(|&&b| b == 0 || b > bonds) {
        return Err(Error::Index(format!("tracked bond {b} outside 1..={bonds}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lattice = Lattice::new(init);
    let mut flux = vec![0i64; bonds];
    let mut out = Trajectory {
        seed,
        times: times.clone(),
        states: Vec::new(),
        currents: Vec::with_capacity(times.len()),
        events: 0,
    };
    let record = |lattice: &Lattice, flux: &[i64], out: &mut Trajectory| {
        if options.record_states {
            out.states.push(lattice.occ.clone());
        }
        out.currents
            .push(options.tracked_bonds.iter().map(|&b| flux[b - 1]).collect());
    };

    let mut t = 0.0;
    let mut next_sample = 0;
    while next_sample < times.len() {
        let r_lower = lattice.lower.len() as f64 * rates.toward_lower;
        let r_higher = lattice.higher.len() as f64 * rates.toward_higher;
        let total = r_lower + r_higher;
        let wait = if total > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let t_next = t + wait;
        while next_sample < times.len() && times[next_sample] < t_next {
            record(&lattice, &flux, &mut out);
            next_sample += 1;
        }
        if next_sample == times.len() {
            break;
        }
        t = t_next;
        let pick = rng.random::<f64>() * total;
        if pick < r_lower {
            let set = &lattice.lower;
            let b = set.items[rng.random_range(0..set.len())];
            lattice.hop(b);
            flux[b] += 1;
        } else {
            let set = &lattice.higher;
            let b = set.items[rng.random_range(0..set.len())];
            lattice.hop(b);
            flux[b] -= 1;
        }
        out.events += 1;
    }
    Ok(out)
}

/// Independent trajectories sharing model parameters.
#[derive(Clone, Debug)]
pub struct ClassicalEnsemble {
    pub length: usize,
    pub rates: HopRates<f64>,
    pub boundary: Boundary,
    pub tracked_bonds: Vec<usize>,
    pub trajectories: Vec<Trajectory>,
}

impl ClassicalEnsemble {
    /// Runs one trajectory per seed in parallel. `init` builds the initial
    /// state from a generator seeded independently of the dynamics.
    pub fn run<F>(
        length: usize,
        rates: HopRates<f64>,
        boundary: Boundary,
        horizon: f64,
        seeds: &[u64],
        options: &SampleOptions,
        init: F,
    ) -> Result<Self>
    where
        F: Fn(&mut ChaCha8Rng) -> Result<ClassicalState> + Sync,
    {
        let mut sorted = seeds.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("ensemble seeds must be distinct".into()));
        }
        let trajectories = seeds
            .par_iter()
            .map(|&seed| {
                let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
                init_rng.set_stream(1);
                let state = init(&mut init_rng)?;
                if state.len() != length || state.boundary != boundary {
                    return Err(Error::Config(
                        "initial state does not match ensemble parameters".into(),
                    ));
                }
                gillespie_sample(&state, rates, horizon, seed, options)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            length,
            rates,
            boundary,
            tracked_bonds: options.tracked_bonds.clone(),
            trajectories,
        })
    }
}
