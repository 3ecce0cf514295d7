//! MNL and mixed-logit estimation, Halton draws, willingness to pay.

pub mod decisions;
pub mod halton;
pub mod mmnl;
pub mod mnl;
pub mod optim;
pub mod result;
pub mod wtp;

pub use decisions::DecisionData;
pub use halton::HaltonSpec;
pub use mmnl::{fit_mmnl, mmnl_simulated_loglik, MmnlEval, MmnlOptions, SimulationDraws};
pub use mnl::{fit_mnl, mnl_loglik, MnlEval, MnlOptions};
pub use result::{EstimationResult, MixingResult, ModelKind};
pub use wtp::{wtp, Wtp};
