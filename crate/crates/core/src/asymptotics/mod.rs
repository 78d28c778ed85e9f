//! The deterministic large-network limit of the cascade.

mod fixed_point;
mod functions;
mod trajectory;

pub use fixed_point::smallest_fixed_point;
pub use functions::{
    constraint_terms, evaluate_policy, h_tilde, i_of, i_prime, i_tilde, it_of, j_of, j_tilde, policy_limits, program_terms, x_threshold,
    x_threshold_exact, Multiplier, PolicyEvaluation, ProgramTerms, SINGULAR_TOL,
};
pub use trajectory::{
    closed_form, integrate_rk4, propagate_interval, ThresholdSchedule, Trajectory, TrajectoryBlock, RK4_HORIZON,
};
