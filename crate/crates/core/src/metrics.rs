//! SUCCESS, SPL, PROGRESS and PPL, including the order-free shortest tour
//! through the goals actually reached.

use crate::env::{EnvState, Outcome};
use crate::episode::{min_tour_length, Episode};
use crate::scene::SceneSet;
use crate::error::{Error, Result};
use crate::scene::{Point, SceneGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    #[serde(with = "episode_json")]
    pub episode: Episode,
    pub success: bool,
    pub n_reached: usize,
    /// Goal indices (0-based) in the order they were reached.
    pub reached_order: Vec<usize>,
    pub path_length: f64,
    pub outcome: Outcome,
}

mod episode_json {
    use crate::episode::Episode;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ep: &Episode, s: S) -> Result<S::Ok, S::Error> {
        crate::episode::episode_to_json(ep).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Episode, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        crate::episode::episode_from_json(v).map_err(serde::de::Error::custom)
    }
}

impl EpisodeResult {
    pub fn from_state(episode: Episode, state: &EnvState) -> Self {
        Self {
            success: state.unreached.is_empty(),
            n_reached: state.reached_order.len(),
            reached_order: state.reached_order.clone(),
            path_length: state.path_length,
            outcome: state.outcome,
            episode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.episode.n_goals();
        let bad = |m: &str| Err(Error::InconsistentResult(m.to_string()));
        if self.n_reached != self.reached_order.len() {
            return bad("n_reached differs from reached_order length");
        }
        if self.success != (self.n_reached == n) {
            return bad("success flag disagrees with goals reached");
        }
        let mut seen = vec![false; n];
        for &g in &self.reached_order {
            if g >= n || std::mem::replace(&mut seen[g], true) {
                return bad("reached_order has an invalid or repeated goal index");
            }
        }
        if !(self.path_length.is_finite() && self.path_length >= 0.0) {
            return bad("path length must be finite and non-negative");
        }
        Ok(())
    }
}

/// Shortest route from `start` visiting all `reached` points in any order.
pub fn l_mg(grid: &SceneGrid, start: Point, reached: &[Point]) -> Result<f64> {
    min_tour_length(grid, start, reached)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    pub success: f64,
    pub spl: f64,
    pub progress: f64,
    pub ppl: f64,
}

/// `l_i / max(l_a, l_i)`, with 0/0 taken as 0.
fn efficiency(optimal: f64, taken: f64) -> f64 {
    let denom = taken.max(optimal);
    if denom == 0.0 {
        0.0
    } else {
        optimal / denom
    }
}

pub fn episode_metrics(grid: &SceneGrid, result: &EpisodeResult) -> Result<EpisodeMetrics> {
    result.validate()?;
    let ep = &result.episode;
    let n = ep.n_goals() as f64;
    let l_i = min_tour_length(grid, ep.start_pos, &ep.goal_positions())?;
    let s = if result.success { 1.0 } else { 0.0 };
    let reached: Vec<Point> = result
        .reached_order
        .iter()
        .map(|&g| ep.goals[g].position)
        .collect();
    let progress = result.n_reached as f64 / n;
    let ppl = if result.n_reached == 0 {
        0.0
    } else {
        progress * efficiency(l_mg(grid, ep.start_pos, &reached)?, result.path_length)
    };
    Ok(EpisodeMetrics {
        success: s,
        spl: s * efficiency(l_i, result.path_length),
        progress,
        ppl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub success: f64,
    pub spl: f64,
    pub progress: f64,
    pub ppl: f64,
}

pub fn aggregate_metrics(per_episode: &[EpisodeMetrics]) -> Result<MetricsReport> {
    if per_episode.is_empty() {
        return Err(Error::EmptyResults);
    }
    let n = per_episode.len() as f64;
    let mean = |f: fn(&EpisodeMetrics) -> f64| per_episode.iter().map(f).sum::<f64>() / n;
    Ok(MetricsReport {
        n: per_episode.len(),
        success: mean(|m| m.success),
        spl: mean(|m| m.spl),
        progress: mean(|m| m.progress),
        ppl: mean(|m| m.ppl),
    })
}

pub fn aggregate(scenes: &SceneSet, results: &[EpisodeResult]) -> Result<MetricsReport> {
    let per = results
        .iter()
        .map(|r| episode_metrics(scenes.get(&r.episode.scene_id)?, r))
        .collect::<Result<Vec<_>>>()?;
    aggregate_metrics(&per)
}

/// Metrics rows keyed by goal count, plus an `"all"` row when the results mix
/// several goal counts.
pub fn report_by_goal_count(
    scenes: &SceneSet,
    results: &[EpisodeResult],
) -> Result<Vec<(String, MetricsReport)>> {
    let mut groups: BTreeMap<usize, Vec<EpisodeResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.episode.n_goals()).or_default().push(r.clone());
    }
    let mut rows = Vec::new();
    for (n, rs) in &groups {
        rows.push((n.to_string(), aggregate(scenes, rs)?));
    }
    if groups.len() > 1 {
        rows.push(("all".to_string(), aggregate(scenes, results)?));
    }
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    Ok(rows)
}

pub const CSV_COLUMNS: &str = "method,n_goals,SUCCESS,SPL,PROGRESS,PPL,N";

/// CSV body (after any `#` header lines) with one row per goal-count group.
pub fn metrics_csv(method: &str, rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for (n_goals, m) in rows {
        writeln!(
            out,
            "{method},{n_goals},{:.6},{:.6},{:.6},{:.6},{}",
            m.success, m.spl, m.progress, m.ppl, m.n
        )
        .expect("string write");
    }
    out
}
