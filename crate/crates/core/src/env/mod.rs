//! Episode dynamics: actions, observations, rewards and termination.

mod trajectory;

pub use trajectory::{PoseRecord, RewardRecord, StepRecord, TerminalRecord, TrajectoryRecord};

use crate::audio::{compute_spectrogram, render_with_distances, CategoryLibrary, SourceState, Spectrogram};
use crate::episode::{steps_to_meters, Episode, GoalDistances};
use crate::error::{Error, Result};
use crate::scene::{Cell, Geodesic, Point, Pose, SceneGrid, CELL_SIZE};
use crate::sdm::{true_sdm_with_distances, ActionOneHot, SdmVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const MAX_STEPS: u32 = 2500;
pub const STEP_SECONDS: f64 = 0.25;
pub const FORWARD_STEP: f64 = 0.25;
/// Found succeeds for an unreached goal strictly closer than this (Euclidean).
pub const FOUND_RADIUS: f64 = 1.0;
pub const FOUND_REWARD: f64 = 5.0;
pub const STEP_PENALTY: f64 = 0.01;
pub const PATCH_SIZE: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Found,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::Found];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn one_hot(self) -> ActionOneHot {
        ActionOneHot::index(self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    InProgress,
    AllReached,
    WrongFound,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub pose: Pose,
    /// Unreached goal indices (0-based), ascending.
    pub unreached: Vec<usize>,
    pub reached_order: Vec<usize>,
    pub step_count: u32,
    pub episode_time: f64,
    pub path_length: f64,
    pub done: bool,
    pub outcome: Outcome,
    pub prev_action: Option<Action>,
    /// Shortest tour from the current pose through the unreached goals.
    pub remaining_tour: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `None` when the environment was built with audio rendering disabled.
    pub spectrogram: Option<Spectrogram>,
    /// Egocentric occupancy (1 navigable, 0 blocked), `[row][col]`; row 0 is
    /// farthest ahead and column 0 farthest to the left.
    pub local_patch: Vec<[f64; PATCH_SIZE]>,
    pub pose: Pose,
    pub prev_action: ActionOneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub found: f64,
    pub delta_geo: f64,
    pub constant: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvConfig {
    pub render_audio: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { render_audio: true }
    }
}

/// One running episode with exclusive ownership of its state.
#[derive(Debug, Clone)]
pub struct Env {
    grid: Arc<SceneGrid>,
    library: Arc<CategoryLibrary>,
    episode: Episode,
    goal_distances: GoalDistances,
    config: EnvConfig,
    state: EnvState,
}

/// Reward for the transition `before → after`.
pub fn compute_reward(before: &EnvState, after: &EnvState) -> RewardTrace {
    let found = if after.reached_order.len() > before.reached_order.len() {
        FOUND_REWARD
    } else {
        0.0
    };
    let delta_geo = after.remaining_tour - before.remaining_tour;
    RewardTrace {
        found,
        delta_geo,
        constant: -STEP_PENALTY,
        total: found - delta_geo - STEP_PENALTY,
    }
}

impl Env {
    pub fn reset(
        grid: Arc<SceneGrid>,
        library: Arc<CategoryLibrary>,
        episode: Episode,
        config: EnvConfig,
    ) -> Result<(Self, Observation)> {
        if episode.scene_id != grid.scene_id() {
            return Err(Error::UnknownScene(episode.scene_id.clone()));
        }
        let goal_cells = episode
            .goals
            .iter()
            .map(|g| grid.snap_to_cell(g.position))
            .collect::<Result<Vec<_>>>()?;
        let goal_distances = GoalDistances::new(&grid, &goal_cells);
        let pose = Pose::new(episode.start_pos, episode.start_heading);
        let unreached: Vec<usize> = (0..episode.n_goals()).collect();
        let mut env = Self {
            grid,
            library,
            episode,
            goal_distances,
            config,
            state: EnvState {
                pose,
                unreached,
                reached_order: Vec::new(),
                step_count: 0,
                episode_time: 0.0,
                path_length: 0.0,
                done: false,
                outcome: Outcome::InProgress,
                prev_action: None,
                remaining_tour: 0.0,
            },
        };
        env.state.remaining_tour = env.tour_length(&env.state.pose, &env.state.unreached)?;
        let obs = env.observe()?;
        Ok((env, obs))
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn grid(&self) -> &SceneGrid {
        &self.grid
    }

    pub fn goal_distances(&self) -> &GoalDistances {
        &self.goal_distances
    }

    /// Shortest tour (meters) from `pose` through `goals`.
    pub fn tour_length(&self, pose: &Pose, goals: &[usize]) -> Result<f64> {
        let cell = self.grid.snap_to_cell(pose.position)?;
        self.goal_distances
            .tour_steps_from(cell, goals)
            .map(steps_to_meters)
            .ok_or(Error::Unreachable)
    }

    /// Geodesic from the agent to every goal (reached ones included).
    pub fn goal_geodesics(&self) -> Result<Vec<Geodesic>> {
        let cell = self.grid.snap_to_cell(self.state.pose.position)?;
        Ok((0..self.goal_distances.len())
            .map(|g| self.goal_distances.field(g).distance_to(cell))
            .collect())
    }

    /// Sources with their activity flags as seen by the renderer.
    pub fn sources(&self) -> Vec<SourceState> {
        self.episode
            .goals
            .iter()
            .enumerate()
            .map(|(k, g)| SourceState {
                position: g.position,
                category: g.category,
                offset_s: self.episode.playback_offsets[k],
                active: self.state.unreached.contains(&k),
            })
            .collect()
    }

    /// Ground-truth SDM of the unreached sources at the current pose.
    pub fn true_sdm(&self) -> Result<SdmVector> {
        let all = self.goal_geodesics()?;
        let (points, dists): (Vec<Point>, Vec<Geodesic>) = self
            .state
            .unreached
            .iter()
            .map(|&g| (self.episode.goals[g].position, all[g]))
            .unzip();
        Ok(true_sdm_with_distances(&self.state.pose, &points, &dists))
    }

    /// Euclidean distance from the agent to each unreached goal, as `(goal, distance)`.
    pub fn unreached_euclidean(&self) -> Vec<(usize, f64)> {
        self.state
            .unreached
            .iter()
            .map(|&g| (g, self.state.pose.position.distance(&self.episode.goals[g].position)))
            .collect()
    }

    fn observe(&self) -> Result<Observation> {
        let spectrogram = if self.config.render_audio {
            let rendered = render_with_distances(
                &self.library,
                self.state.pose,
                &self.sources(),
                &self.goal_geodesics()?,
                self.state.episode_time,
            )?;
            Some(compute_spectrogram(&rendered.chunk)?)
        } else {
            None
        };
        Ok(Observation {
            spectrogram,
            local_patch: self.local_patch(),
            pose: self.state.pose,
            prev_action: self.state.prev_action.map_or(ActionOneHot::none(), Action::one_hot),
        })
    }

    fn local_patch(&self) -> Vec<[f64; PATCH_SIZE]> {
        let (hx, hy) = self.state.pose.heading.unit_vector();
        let p = self.state.pose.position;
        let half = (PATCH_SIZE / 2) as f64;
        (0..PATCH_SIZE)
            .map(|r| {
                std::array::from_fn(|c| {
                    let ahead = (half - r as f64) * CELL_SIZE;
                    let left = (half - c as f64) * CELL_SIZE;
                    let q = Point::new(p.x + ahead * hx - left * hy, p.y + ahead * hy + left * hx);
                    if self.grid.is_navigable_point(q) {
                        1.0
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    /// Applies one action; returns the next observation and the reward.
    pub fn step(&mut self, action: Action) -> Result<(Observation, RewardTrace)> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let before = self.state.clone();
        let s = &mut self.state;
        let mut wrong_found = false;
        match action {
            Action::MoveForward => {
                let (dx, dy) = s.pose.heading.unit_vector();
                let to = Point::new(s.pose.position.x + FORWARD_STEP * dx, s.pose.position.y + FORWARD_STEP * dy);
                if self.grid.is_navigable_point(to) {
                    s.pose.position = to;
                    s.path_length += FORWARD_STEP;
                }
            }
            Action::TurnLeft => s.pose.heading = s.pose.heading.turned_left(),
            Action::TurnRight => s.pose.heading = s.pose.heading.turned_right(),
            Action::Found => {
                let here = s.pose.position;
                let nearest = s
                    .unreached
                    .iter()
                    .map(|&g| (g, here.distance(&self.episode.goals[g].position)))
                    .filter(|&(_, d)| d < FOUND_RADIUS)
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                match nearest {
                    Some((g, _)) => {
                        s.unreached.retain(|&u| u != g);
                        s.reached_order.push(g);
                    }
                    None => wrong_found = true,
                }
            }
        }
        s.step_count += 1;
        s.episode_time = f64::from(s.step_count) * STEP_SECONDS;
        s.prev_action = Some(action);
        if s.unreached.is_empty() {
            s.outcome = Outcome::AllReached;
        } else if wrong_found {
            s.outcome = Outcome::WrongFound;
        } else if s.step_count >= MAX_STEPS {
            s.outcome = Outcome::StepLimit;
        }
        s.done = s.outcome != Outcome::InProgress;
        let (pose, unreached) = (s.pose, s.unreached.clone());
        self.state.remaining_tour = self.tour_length(&pose, &unreached)?;
        let reward = compute_reward(&before, &self.state);
        Ok((self.observe()?, reward))
    }

    pub fn current_cell(&self) -> Result<Cell> {
        self.grid.snap_to_cell(self.state.pose.position)
    }
}
