//! Ranking sports teams from game results: a fitness-based outcome model,
//! synthetic season generation, win-ratio and PageRank-style rankers,
//! ranking metrics, model calibration and the experiment drivers built on
//! top of them.

pub mod calibration;
pub mod dataio;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod rankers;
pub mod synth;

pub use error::{Error, Result};
pub use metrics::{GroundTruth, Metric};
pub use model::{win_probability, FitnessVector, LeagueConfig};
pub use rankers::{Method, ScoreVector};
pub use synth::{simulate_season, GameRecord, PerturbMode, ResultSet};
