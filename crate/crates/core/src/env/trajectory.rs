//! Trajectory log records (one JSON object per line).

use super::{Action, EnvState, Outcome, RewardTrace};
use serde::{Deserialize, Serialize};

/// `[x, y, heading_degrees]`.
pub type PoseRecord = (f64, f64, u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub found: f64,
    pub delta_geo: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub t: u32,
    pub action: Action,
    /// Pose after the action.
    pub pose: PoseRecord,
    pub reward: RewardRecord,
    pub unreached: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub episode: usize,
    pub outcome: Outcome,
    pub n_reached: usize,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectoryRecord {
    Step(StepRecord),
    Terminal(TerminalRecord),
}

impl StepRecord {
    /// Record for the step that produced `after` (`t` is 0-based).
    pub fn new(episode: usize, action: Action, after: &EnvState, reward: &RewardTrace) -> Self {
        let p = after.pose;
        Self {
            episode,
            t: after.step_count - 1,
            action,
            pose: (p.position.x, p.position.y, p.heading.degrees()),
            reward: RewardRecord {
                found: reward.found,
                delta_geo: reward.delta_geo,
                total: reward.total,
            },
            unreached: after.unreached.clone(),
        }
    }
}

impl TerminalRecord {
    pub fn new(episode: usize, state: &EnvState) -> Self {
        Self {
            episode,
            outcome: state.outcome,
            n_reached: state.reached_order.len(),
            path_length: state.path_length,
        }
    }
}
