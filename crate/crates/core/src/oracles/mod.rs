//! Independent references: exhaustive optima, lower bounds, exact potential
//! comparisons and exhaustive clique search.

mod brute;
mod clique;
mod exact;

pub use brute::{brute_force_opt, opt_lower_bound_lr, BruteForce, Objective, ENUMERATION_LIMIT};
pub use clique::{exhaustive_clique, EXHAUSTIVE_CLASS_LIMIT};
pub use exact::{exact_potential_argmin, ExactArgmin, MAX_PRECISION_BITS};
