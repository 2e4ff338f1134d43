//! Classical exclusion processes: exact master equation, kinetic Monte Carlo
//! and height-growth statistics.

mod compare;
mod generator;
mod growth;
mod monte_carlo;

pub use compare::{marginals_vs_master, MarginalComparison, MarginalRow};
pub use generator::{
    classical_generator, classical_generator_with_rates, master_evolve, Boundary, HopRates,
    RateMatrix,
};
pub use growth::{height_growth_stats, least_squares, log_spaced_times, GrowthStats, LinearFit};
pub use monte_carlo::{
    gillespie_sample, ClassicalEnsemble, ClassicalState, SampleOptions, Trajectory,
};
