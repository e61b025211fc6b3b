//! Independent references for the exact solver: fixed-point iteration of
//! the waiting-time mapping on a grid, and direct simulation of the
//! recursion.

mod fixed_point;
mod monte_carlo;

pub use fixed_point::{
    fixed_point_solve, grid_sup_distance, precompute_kernel, FixedPointProblem, FixedPointResult, GridCdf,
    Mapping, MAX_GRID,
};
pub use monte_carlo::{
    ks_distance, shard_count, simulate, EmpiricalCdf, Simulation, SimulationSummary, DEFAULT_SHARDS,
    MIN_SAMPLES, THREADS_ENV,
};
