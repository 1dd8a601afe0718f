//! Finite landscapes, Metropolis–Hastings generators and their dynamics.

mod evolve;
mod generator;
mod hitting;
mod landscape;
mod sample;

pub use evolve::{distribution_at_time, mixing_time, total_variation, transition_matrix, worst_case_distance};
pub use generator::{build_mh_generator, Generator, Transition};
pub use hitting::{exact_mean_hitting_birth_death, log_exact_mean_hitting_birth_death, mean_hitting_times};
pub use landscape::FiniteLandscape;
pub use sample::{hitting_time_mc, replica_rng, sample_hitting_time, simulate_ctmc, HittingStats, Trajectory, MAX_JUMPS};
