//! Exact change-point inference with hidden Markov models.
//!
//! Two model families share one inference engine:
//!
//! * **level-based**: the hidden state is a distributional level, any level
//!   may follow any other, and distant stretches of the series may share a
//!   level;
//! * **segment-based**: the hidden state is the segment index, which can
//!   only stay put or move up by one, with the chain pinned to start in the
//!   first segment and end in the last. Under that evidence the posterior
//!   over paths is exactly the posterior of the classical `K`-segment
//!   change-point model with a uniform prior over segmentations.
//!
//! All recursions run in log space, so series of any practical length are
//! handled without underflow. Emissions are Poisson or normal with a shared
//! standard deviation.
//!
//! ```
//! use cphmm::{datasets, ChainSpec, EmissionModel, Lattice};
//!
//! let data = datasets::coal_mining();
//! let chain = ChainSpec::segment(3).unwrap();
//! let emissions = EmissionModel::poisson(vec![3.25, 1.15, 0.27]).unwrap();
//! let lattice = Lattice::standard(&chain, &emissions, &data).unwrap();
//! let marginals = lattice.posterior_states().unwrap();
//! assert!((marginals[0][0] - 1.0).abs() < 1e-12);
//! ```
//!
//! The level model's initial distribution defaults to uniform; pin or
//! restrict early states through [`Evidence`] when a different start is
//! wanted.

pub mod datasets;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod logsum;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use inference::{backward, forward, viterbi, ChangePointPosterior, Direction, Lattice};
pub use logsum::logsumexp;
pub use model::{
    log_joint, ChainKind, ChainSpec, EmissionModel, Evidence, Family, ObservationSeries,
};
