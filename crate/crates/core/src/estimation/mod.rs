//! Parameter estimation: greedy least-squares initialisation, estimates
//! under a hard segmentation, and EM.

mod em;
mod greedy;
mod mle;

pub use em::{
    em_fit, em_fit_with_evidence, fit_from_greedy, greedy_initialisation, update_emissions,
    update_exit_probs, FitConfig, FitResult, DEGENERATE_MASS,
};
pub use greedy::greedy_ls_changepoints;
pub use mle::{
    merge_levels, mle_from_segmentation, mle_with_levels, segment_means, PARAMETER_FLOOR,
};
