//! Stated-choice design construction and efficiency evaluation.

pub mod dominance;
pub mod efficiency;
pub mod factorial;
pub mod fedorov;
pub mod io;
pub mod types;

pub use dominance::check_dominance;
pub use efficiency::{
    d_error, db_error, evaluate_design, information_matrix, Criterion, EfficiencyReport, PriorSpec,
};
pub use factorial::{assign_continuous_levels, enumerate_choice_sets, factorial_design, full_factorial};
pub use fedorov::{fedorov_search, random_design, FedorovOptions, FedorovOutcome};
pub use types::{Alternative, AttributeKind, AttributeSpec, ChoiceSet, Design, PreferredDirection, Profile};
