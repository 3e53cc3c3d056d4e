//! Covariance steering for discrete-time linear systems with additive and
//! multiplicative noise.

pub mod builder;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod scenarios;
pub mod simulator;
pub mod steering;

pub use model::{
    AffinePolicy, BoundaryMoments, CostWeights, ModelError, ProblemInstance,
    RandomizedAffinePolicy, StateStatistics, SteeringMode, SystemDynamics,
};
pub use moments::{
    evaluate_policy, expected_cost, propagate_covariance, propagate_mean, propagate_statistics,
};
pub use builder::{build_relaxed_program, build_step2_program, ProgramKind, VariableLayout};
pub use steering::{
    build_exact_step2_program, extract_solution, recover_policy, recover_randomized_policy,
    solve_exact_cs, solve_relaxed_cs, solve_relaxed_program, tightness_report, ExactSolution,
    GapKind, RelaxedOutcome, RelaxedSolution, Stage, SteeringError, SteeringSettings, StepGaps,
    TightnessReport, TightnessRow,
};
pub use simulator::{
    estimate_statistics, monte_carlo_cost, simulate_batch, simulate_trajectory, summarize,
    validate_terminal, CostEstimate, MonteCarloSummary, NoiseFamily, SampleStatistics, SimulationConfig, TerminalReport, Trajectory,
    TrajectoryBatch, ValidationSettings,
};
