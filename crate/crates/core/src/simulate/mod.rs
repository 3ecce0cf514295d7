//! Random-utility choice simulation.

pub mod dataset;
pub mod gumbel;
pub mod io;
pub mod logit;
pub mod utility;

pub use dataset::{simulate_choices, ChoiceDataset, ChoiceRow, DatasetMeta, SimulationOptions};
pub use gumbel::gumbel_draw;
pub use logit::logit_probabilities;
pub use utility::{AppliesTo, Factor, UtilitySpec, UtilityTerm};
