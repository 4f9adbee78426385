//! Morse-theoretic solution counting for the prescribed scalar curvature
//! problem on spheres, with a finite-dimensional numerical lab for the
//! underlying variational objects.
//!
//! - [`index_calculus`]: exact signed counts `mu_p` and solution-count bounds.
//! - [`k_function`]: analytic curvature candidates `K = 1 + eps f`, their
//!   critical points and the blow-up set.
//! - [`bubble`]: bubbles, the Sobolev constant, the subcritical functional,
//!   reduced gradient flows and numerical Morse indices.
//! - [`presets`]: named parity configurations and curvature functions.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod index_calculus;
pub mod k_function;
pub mod presets;
pub mod sphere;

pub use index_calculus::{
    classify_case, euler_poincare_check, index_k, mu_closed_form, mu_direct, mu_recurrence, solution_bounds,
    CaseLabel, IndexError, IndexTable, Parity, ParityConfig, SolutionBoundReport,
};
pub use bubble::{
    eval_bubble, flow_to_critical, functional_j, i_from_j, reduced_gradient, reduced_morse_index, sobolev_constant,
    Bubble, BubbleError, BubbleSum, FlowMode, FlowOptions, FlowReport, QuadratureScheme,
};
pub use k_function::{
    admissible_epsilon, extract_k_infinity, find_critical_points, BumpTerm, CriticalPoint, KError, KFunction, KInfinity,
};
pub use num_bigint::{BigInt, Sign};
pub use sphere::Point;
