//! Episode data model, order-free tour lengths, the constrained episode
//! generator and the JSON Lines episode dataset.

mod dataset;
mod generate;
mod tour;

pub use dataset::{parse_dataset, write_dataset, write_dataset_with_header};
pub use generate::{
    check_episode, generate_episode, pair_constraints_hold, rejection_probability,
    survives_distance_rejection, GeneratorConfig, DEFAULT_SAMPLING_BUDGET,
};
pub use tour::{min_tour_length, GoalDistances, MAX_TOUR_GOALS};
pub(crate) use dataset::{episode_from_json, episode_to_json};
pub(crate) use tour::steps_to_meters;

use crate::scene::{Heading, Point};

pub type SoundCategoryId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub position: Point,
    pub category: SoundCategoryId,
}

/// One navigation task: a start pose in a scene and the sounding goals to find.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scene_id: String,
    pub start_pos: Point,
    pub start_heading: Heading,
    pub goals: Vec<Goal>,
    /// Per-goal playback start within the 1 s loop, in `[0, 1)` seconds.
    pub playback_offsets: Vec<f64>,
    pub seed: u64,
}

impl Episode {
    pub fn n_goals(&self) -> usize {
        self.goals.len()
    }

    pub fn goal_positions(&self) -> Vec<Point> {
        self.goals.iter().map(|g| g.position).collect()
    }
}
