//! Classical differential machinery: exact round transitions, characteristic
//! search and sampling.

pub mod round;
pub mod sampling;
pub mod search;

pub use round::{enumerate_outputs, round_dp, DpResult, OutputSpace, RoundModel};
pub use sampling::{empirical_dp, most_likely_output, Estimate, LikelyOutput};
pub use search::{
    min_weight_search, search_characteristics, trail_aggregate, trails_between, Constraint,
    SearchReport, Trail,
};
