//! Rolling agents through episode suites and building teacher-forced SDM
//! datasets from those rollouts.

use crate::agents::{greedy_sdm_policy, privileged_policy, random_policy, AgentKind, PolicyContext};
use crate::audio::CategoryLibrary;
use crate::env::{Action, Env, EnvConfig, Observation, StepRecord, TerminalRecord, TrajectoryRecord};
use crate::episode::{generate_episode, Episode, GeneratorConfig};
use crate::error::{Error, Result};
use crate::metrics::EpisodeResult;
use crate::scene::SceneSet;
use crate::sdm::{encoder_forward, ActionOneHot, EncoderInput, EncoderParams, SdmDataset, SdmSample, SdmVector};
use crate::seed::{derive_seed, rng_from_seed, SimRng, Stream};
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub agent: AgentKind,
    pub seed: u64,
    pub workers: usize,
    /// Required for [`AgentKind::GreedySdmLearned`].
    pub params: Option<Arc<EncoderParams>>,
    pub keep_trajectory: bool,
}

impl RunOptions {
    pub fn new(agent: AgentKind, seed: u64) -> Self {
        Self {
            agent,
            seed,
            workers: 1,
            params: None,
            keep_trajectory: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    /// Step records then one terminal record; empty unless requested.
    pub trajectory: Vec<TrajectoryRecord>,
    /// Reward totals per step, in order.
    pub rewards: Vec<f64>,
    /// Shortest remaining tour at reset and at the end.
    pub initial_tour: f64,
    pub final_tour: f64,
}

/// Chooses the next action for `agent`; `prev_sdm` carries the learned
/// agent's previous prediction between calls.
fn decide(
    agent: AgentKind,
    env: &Env,
    obs: &Observation,
    params: Option<&EncoderParams>,
    prev_sdm: &mut SdmVector,
    rng: &mut SimRng,
) -> Result<Action> {
    let sdm = match agent {
        AgentKind::GreedySdmOracle => Some(env.true_sdm()?),
        AgentKind::GreedySdmLearned => {
            let params = params.ok_or_else(|| Error::InvalidArgument("greedy-sdm-learned needs --params".into()))?;
            let spectrogram = obs
                .spectrogram
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("learned SDM needs audio".into()))?;
            let pred = encoder_forward(
                params,
                &[EncoderInput {
                    spectrogram,
                    prev_action: obs.prev_action,
                    prev_sdm: *prev_sdm,
                }],
            )?[0];
            *prev_sdm = pred;
            Some(pred)
        }
        _ => None,
    };
    let mut ctx = PolicyContext {
        observation: obs,
        sdm,
        privileged: match agent {
            AgentKind::Random | AgentKind::Privileged => Some(env),
            _ => None,
        },
        rng,
    };
    match agent {
        AgentKind::Random => random_policy(&mut ctx),
        AgentKind::Privileged => privileged_policy(&mut ctx),
        AgentKind::GreedySdmOracle | AgentKind::GreedySdmLearned => greedy_sdm_policy(&mut ctx),
    }
}

/// Runs one episode to termination. `index` selects the policy RNG stream.
pub fn run_episode(
    scenes: &SceneSet,
    library: &Arc<CategoryLibrary>,
    episode: &Episode,
    index: usize,
    options: &RunOptions,
) -> Result<EpisodeRun> {
    let grid = scenes.get(&episode.scene_id)?.clone();
    let config = EnvConfig {
        render_audio: options.agent.needs_audio(),
    };
    let (mut env, mut obs) = Env::reset(grid, library.clone(), episode.clone(), config)?;
    let mut rng = rng_from_seed(derive_seed(options.seed, Stream::Policy, index as u64));
    let mut prev_sdm = SdmVector::zeros();
    let mut trajectory = Vec::new();
    let mut rewards = Vec::new();
    let initial_tour = env.state().remaining_tour;
    while !env.state().done {
        let action = decide(options.agent, &env, &obs, options.params.as_deref(), &mut prev_sdm, &mut rng)?;
        let (next, reward) = env.step(action)?;
        if options.keep_trajectory {
            trajectory.push(TrajectoryRecord::Step(StepRecord::new(index, action, env.state(), &reward)));
        }
        rewards.push(reward.total);
        obs = next;
    }
    if options.keep_trajectory {
        trajectory.push(TrajectoryRecord::Terminal(TerminalRecord::new(index, env.state())));
    }
    Ok(EpisodeRun {
        result: EpisodeResult::from_state(episode.clone(), env.state()),
        trajectory,
        rewards,
        initial_tour,
        final_tour: env.state().remaining_tour,
    })
}

/// Runs every episode on `options.workers` threads. Results come back in
/// episode order and do not depend on the worker count.
pub fn run_suite(
    scenes: &SceneSet,
    library: &Arc<CategoryLibrary>,
    episodes: &[Episode],
    options: &RunOptions,
) -> Result<Vec<EpisodeRun>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        episodes
            .par_iter()
            .enumerate()
            .map(|(k, ep)| run_episode(scenes, library, ep, k, options))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub behavior: AgentKind,
    pub seed: u64,
    /// Stop once this many samples have been collected.
    pub max_samples: usize,
    /// Truncate each rollout after this many steps.
    pub max_steps_per_episode: usize,
}

/// Teacher-forced samples `(A_t, a_{t-1}, d_{t-1}, d_t)` from rollouts of the
/// behavior policy, with zero previous action and SDM at `t = 0`.
pub fn make_dataset(
    scenes: &SceneSet,
    library: &Arc<CategoryLibrary>,
    episodes: &[Episode],
    options: &DatasetOptions,
) -> Result<SdmDataset> {
    if options.behavior == AgentKind::GreedySdmLearned {
        return Err(Error::InvalidArgument("behavior policy must not need learned params".into()));
    }
    let mut dataset = SdmDataset::default();
    for (index, episode) in episodes.iter().enumerate() {
        if dataset.samples.len() >= options.max_samples {
            break;
        }
        let grid = scenes.get(&episode.scene_id)?.clone();
        let (mut env, mut obs) = Env::reset(grid, library.clone(), episode.clone(), EnvConfig::default())?;
        let mut rng = rng_from_seed(derive_seed(options.seed, Stream::Dataset, index as u64));
        let mut prev_action = ActionOneHot::none();
        let mut prev_sdm = SdmVector::zeros();
        let mut unused = SdmVector::zeros();
        let mut steps = 0;
        while !env.state().done && steps < options.max_steps_per_episode && dataset.samples.len() < options.max_samples {
            let target = env.true_sdm()?;
            let action = decide(options.behavior, &env, &obs, None, &mut unused, &mut rng)?;
            let (next, _) = env.step(action)?;
            let spectrogram = std::mem::replace(&mut obs, next)
                .spectrogram
                .expect("audio enabled");
            dataset.samples.push(SdmSample {
                spectrogram,
                prev_action,
                prev_sdm,
                target,
            });
            prev_action = action.one_hot();
            prev_sdm = target;
            steps += 1;
        }
        if steps > 0 {
            dataset.episode_lengths.push(steps);
        }
    }
    Ok(dataset)
}

/// Generates `n_episodes` episodes, cycling through the scenes (in id order)
/// and then through `n_goals`. Episode `k` uses its own derived seed.
pub fn generate_suite(
    scenes: &SceneSet,
    n_goals: &[usize],
    n_episodes: usize,
    seed: u64,
    config: &GeneratorConfig,
) -> Result<Vec<Episode>> {
    let grids: Vec<_> = scenes.iter().collect();
    if grids.is_empty() || n_goals.is_empty() {
        return Err(Error::InvalidArgument("need at least one scene and one goal count".into()));
    }
    (0..n_episodes)
        .map(|k| {
            let grid = grids[k % grids.len()];
            let n = n_goals[(k / grids.len()) % n_goals.len()];
            let ep_seed = derive_seed(seed, Stream::Episode, k as u64);
            generate_episode(grid, n, config, ep_seed, &mut rng_from_seed(ep_seed))
        })
        .collect()
}

fn header_line(header: &serde_json::Value) -> String {
    let mut line = serde_json::json!({ "header": header }).to_string();
    line.push('\n');
    line
}

/// Trajectory JSON Lines: a header line, then every run's records in order.
pub fn trajectory_jsonl(header: &serde_json::Value, runs: &[EpisodeRun]) -> String {
    let mut out = header_line(header);
    for run in runs {
        for rec in &run.trajectory {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
    }
    out
}

/// Per-episode results as JSON Lines after a header line.
pub fn results_jsonl(header: &serde_json::Value, results: &[EpisodeResult]) -> String {
    let mut out = header_line(header);
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

/// Parses [`results_jsonl`] output, returning the header (if any) and results.
pub fn parse_results(text: &str) -> Result<(Option<serde_json::Value>, Vec<EpisodeResult>)> {
    let mut header = None;
    let mut results = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Dataset {
            line: k + 1,
            message: e.to_string(),
        })?;
        if let Some(h) = value.get("header") {
            header = Some(h.clone());
            continue;
        }
        let r: EpisodeResult = serde_json::from_value(value).map_err(|e| Error::Dataset {
            line: k + 1,
            message: e.to_string(),
        })?;
        r.validate()?;
        results.push(r);
    }
    Ok((header, results))
}
