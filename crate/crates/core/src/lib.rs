//! Coalition formation for net-metered energy communities.
//!
//! The crate models prosumer coalitions ([`energy`]), approximates the
//! resulting coalition game by pairwise weights ([`isg`]), and searches for
//! good coalition structures by repeatedly splitting coalitions along a
//! negative min-cut ([`pipeline`]). Each cut is a QUBO ([`qubo`]) handed to
//! one of several interchangeable heuristics ([`solvers`]). Exact dynamic
//! programming ([`exact`]) provides reference optima, and [`bench`] runs the
//! solver comparison matrix.

pub mod bench;
pub mod coalition;
pub mod energy;
pub mod error;
pub mod exact;
pub mod isg;
mod linalg;
pub mod pipeline;
pub mod qubo;
pub mod rng;
pub mod solvers;

pub use coalition::{Coalition, Game};
pub use energy::{generate_scenario, optimize_dispatch, Scenario, ScenarioConfig, ValueOracle};
pub use error::{Error, Result};
pub use exact::{brute_force_partitions, idp_solve, CsgSolution};
pub use isg::{fit_isg, random_isg, IsgInstance};
pub use pipeline::{iterative_split, quality_ratio, structure_value, CoalitionStructure, SplitTrace};
pub use qubo::{build_split_qubo, Assignment, IsingInstance, QuboInstance};
pub use solvers::{solve, SolverParams, SolverResult};
