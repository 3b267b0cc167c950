//! Baseline policies: random, privileged shortest-path oracle and a greedy
//! agent that follows the Sound Direction Map.

use crate::env::{Action, Env, Observation, FOUND_RADIUS};
use crate::error::{Error, Result};
use crate::scene::{Cell, Heading};
use crate::sdm::{SdmVector, NUM_NODES};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Random,
    Privileged,
    GreedySdmOracle,
    GreedySdmLearned,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Random,
        AgentKind::Privileged,
        AgentKind::GreedySdmOracle,
        AgentKind::GreedySdmLearned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::Privileged => "privileged",
            AgentKind::GreedySdmOracle => "greedy-sdm-oracle",
            AgentKind::GreedySdmLearned => "greedy-sdm-learned",
        }
    }

    /// Whether the policy consumes spectrograms.
    pub fn needs_audio(self) -> bool {
        self == AgentKind::GreedySdmLearned
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown agent {s:?}")))
    }
}

/// Everything a policy may look at for one decision.
pub struct PolicyContext<'a, R: Rng> {
    pub observation: &'a Observation,
    /// Oracle or predicted SDM, for the greedy agent.
    pub sdm: Option<SdmVector>,
    /// Full simulator access, for the privileged agent and the Random
    /// agent's distance-aware Found rule.
    pub privileged: Option<&'a Env>,
    pub rng: &'a mut R,
}

/// Found when an unreached goal is within the Found radius, otherwise a
/// uniformly random motion action.
pub fn random_policy<R: Rng>(ctx: &mut PolicyContext<'_, R>) -> Result<Action> {
    let env = ctx
        .privileged
        .ok_or_else(|| Error::InvalidArgument("random policy needs goal distances".into()))?;
    if env.unreached_euclidean().iter().any(|&(_, d)| d < FOUND_RADIUS) {
        return Ok(Action::Found);
    }
    Ok([Action::MoveForward, Action::TurnLeft, Action::TurnRight][ctx.rng.random_range(0..3)])
}

/// Heading of the 4-neighbor step `from → to`.
fn cardinal_heading(from: Cell, to: Cell) -> Heading {
    let deg = match (to.i as i64 - from.i as i64, to.j as i64 - from.j as i64) {
        (1, 0) => 0,
        (0, 1) => 90,
        (-1, 0) => 180,
        (0, -1) => 270,
        d => unreachable!("not a neighbor step: {d:?}"),
    };
    Heading::new(deg).expect("cardinal heading")
}

/// Turn that reaches `target` in fewest steps; ties turn left.
fn turn_towards(current: Heading, target: Heading) -> Action {
    let left = (target.degrees() + 360 - current.degrees()) % 360;
    if left <= 180 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Walks the optimal goal order along shortest cell paths, onto the target
/// goal's cell, and emits Found there.
pub fn privileged_policy<R: Rng>(ctx: &mut PolicyContext<'_, R>) -> Result<Action> {
    let env = ctx
        .privileged
        .ok_or_else(|| Error::InvalidArgument("privileged policy needs simulator access".into()))?;
    let state = env.state();
    let grid = env.grid();
    if !grid.is_cell_center(state.pose.position) {
        return Err(Error::InvalidArgument("privileged policy requires cell-center poses".into()));
    }
    let here = env.current_cell()?;
    let dists = env.goal_distances();
    let (_, order) = dists
        .best_order_from(here, &state.unreached)
        .ok_or(Error::Unreachable)?;
    let target = order[0];
    let field = dists.field(target);
    let remaining = field.steps_to(here).ok_or(Error::Unreachable)?;
    if remaining == 0 {
        return Ok(Action::Found);
    }
    let next = grid
        .neighbors(here)
        .find(|&n| field.steps_to(n) == Some(remaining - 1))
        .ok_or(Error::Unreachable)?;
    let want = cardinal_heading(here, next);
    if state.pose.heading == want {
        Ok(Action::MoveForward)
    } else {
        Ok(turn_towards(state.pose.heading, want))
    }
}

/// Reactive SDM follower: Found on a saturated node, otherwise face and walk
/// towards the strongest sector.
pub fn greedy_sdm_action(sdm: &SdmVector) -> Action {
    let mut best = 0;
    for k in 1..NUM_NODES {
        if sdm.0[k] > sdm.0[best] {
            best = k;
        }
    }
    if sdm.0[best] >= 1.0 {
        return Action::Found;
    }
    if sdm.0[best] <= 0.0 {
        return Action::MoveForward;
    }
    match best {
        0 => Action::MoveForward,
        1..=4 => Action::TurnLeft,
        _ => Action::TurnRight,
    }
}

pub fn greedy_sdm_policy<R: Rng>(ctx: &mut PolicyContext<'_, R>) -> Result<Action> {
    let sdm = ctx
        .sdm
        .ok_or_else(|| Error::InvalidArgument("greedy policy needs an SDM".into()))?;
    Ok(greedy_sdm_action(&sdm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{CategoryLibrary, SoundSet};
    use crate::env::EnvConfig;
    use crate::episode::{Episode, Goal};
    use crate::scene::{builders, SceneGrid};
    use crate::seed::rng_from_seed;
    use std::sync::Arc;

    fn make_env(grid: SceneGrid, start: Cell, heading: u32, goals: &[Cell]) -> Env {
        let ep = Episode {
            scene_id: grid.scene_id().to_string(),
            start_pos: start.center(),
            start_heading: Heading::new(heading).unwrap(),
            goals: goals
                .iter()
                .map(|c| Goal {
                    position: c.center(),
                    category: 0,
                })
                .collect(),
            playback_offsets: vec![0.0; goals.len()],
            seed: 0,
        };
        let lib = Arc::new(CategoryLibrary::parametric(SoundSet::Default));
        Env::reset(Arc::new(grid), lib, ep, EnvConfig { render_audio: false })
            .unwrap()
            .0
    }

    fn act(env: &Env, policy: fn(&mut PolicyContext<'_, crate::seed::SimRng>) -> Result<Action>) -> Action {
        let obs = Observation {
            spectrogram: None,
            local_patch: Vec::new(),
            pose: env.state().pose,
            prev_action: crate::sdm::ActionOneHot::none(),
        };
        let mut rng = rng_from_seed(0);
        policy(&mut PolicyContext {
            observation: &obs,
            sdm: None,
            privileged: Some(env),
            rng: &mut rng,
        })
        .unwrap()
    }

    #[test]
    fn agent_names_round_trip() {
        for k in AgentKind::ALL {
            assert_eq!(k.name().parse::<AgentKind>().unwrap(), k);
        }
        assert!("walker".parse::<AgentKind>().is_err());
    }

    #[test]
    fn privileged_moves_towards_goal_ahead() {
        let env = make_env(builders::corridor(13), Cell::new(0, 0), 0, &[Cell::new(3, 0)]);
        assert_eq!(act(&env, privileged_policy), Action::MoveForward);
    }

    #[test]
    fn privileged_turns_left_nine_times() {
        let mut env = make_env(
            builders::open_room("room", 6, 6),
            Cell::new(0, 0),
            0,
            &[Cell::new(0, 5)],
        );
        for _ in 0..9 {
            let a = act(&env, privileged_policy);
            assert_eq!(a, Action::TurnLeft);
            env.step(a).unwrap();
        }
        assert_eq!(env.state().pose.heading.degrees(), 90);
        assert_eq!(act(&env, privileged_policy), Action::MoveForward);
    }

    #[test]
    fn privileged_prefers_shorter_turn_and_left_on_ties() {
        assert_eq!(turn_towards(Heading::new(10).unwrap(), Heading::new(0).unwrap()), Action::TurnRight);
        assert_eq!(turn_towards(Heading::new(0).unwrap(), Heading::new(180).unwrap()), Action::TurnLeft);
        assert_eq!(turn_towards(Heading::new(0).unwrap(), Heading::new(270).unwrap()), Action::TurnRight);
    }

    #[test]
    fn privileged_found_on_goal_cell() {
        let env = make_env(builders::corridor(13), Cell::new(3, 0), 0, &[Cell::new(3, 0)]);
        assert_eq!(act(&env, privileged_policy), Action::Found);
    }

    #[test]
    fn random_found_near_goal() {
        // 0.75 m away.
        let env = make_env(builders::corridor(13), Cell::new(0, 0), 0, &[Cell::new(3, 0)]);
        assert_eq!(act(&env, random_policy), Action::Found);
    }

    #[test]
    fn random_marginals_are_uniform() {
        let env = make_env(builders::corridor(13), Cell::new(0, 0), 0, &[Cell::new(12, 0)]);
        let obs = Observation {
            spectrogram: None,
            local_patch: Vec::new(),
            pose: env.state().pose,
            prev_action: crate::sdm::ActionOneHot::none(),
        };
        let mut rng = rng_from_seed(7);
        let mut counts = [0usize; 4];
        let draws = 30_000;
        for _ in 0..draws {
            let a = random_policy(&mut PolicyContext {
                observation: &obs,
                sdm: None,
                privileged: Some(&env),
                rng: &mut rng,
            })
            .unwrap();
            counts[a.index()] += 1;
        }
        assert_eq!(counts[Action::Found.index()], 0);
        for c in &counts[..3] {
            assert!((*c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn greedy_rules() {
        let v = |k: usize, x: f64| {
            let mut s = SdmVector::zeros();
            s.0[k] = x;
            s
        };
        assert_eq!(greedy_sdm_action(&v(0, 0.7)), Action::MoveForward);
        assert_eq!(greedy_sdm_action(&v(2, 0.4)), Action::TurnLeft);
        assert_eq!(greedy_sdm_action(&v(3, 1.0)), Action::Found);
        assert_eq!(greedy_sdm_action(&v(4, 0.3)), Action::TurnLeft);
        assert_eq!(greedy_sdm_action(&v(6, 0.3)), Action::TurnRight);
        assert_eq!(greedy_sdm_action(&SdmVector::zeros()), Action::MoveForward);
        // Ties go to the smallest index.
        let mut t = v(1, 0.5);
        t.0[7] = 0.5;
        assert_eq!(greedy_sdm_action(&t), Action::TurnLeft);
    }
}
