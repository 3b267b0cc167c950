//! JSON Lines episode datasets.
//!
//! One episode per line. A line holding an object with a `"header"` key is
//! run metadata and is skipped on parse.

use super::{Episode, Goal};
use crate::error::{Error, Result};
use crate::scene::{Heading, Point, SceneSet};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct GoalRecord {
    pos: [f64; 2],
    category: u32,
    offset_s: f64,
}

#[derive(Serialize, Deserialize)]
struct EpisodeRecord {
    scene_id: String,
    start: [f64; 2],
    heading_deg: u32,
    goals: Vec<GoalRecord>,
    seed: u64,
}

impl From<&Episode> for EpisodeRecord {
    fn from(ep: &Episode) -> Self {
        Self {
            scene_id: ep.scene_id.clone(),
            start: [ep.start_pos.x, ep.start_pos.y],
            heading_deg: ep.start_heading.degrees(),
            goals: ep
                .goals
                .iter()
                .zip(&ep.playback_offsets)
                .map(|(g, &offset_s)| GoalRecord {
                    pos: [g.position.x, g.position.y],
                    category: g.category,
                    offset_s,
                })
                .collect(),
            seed: ep.seed,
        }
    }
}

pub(crate) fn episode_to_json(ep: &Episode) -> serde_json::Value {
    serde_json::to_value(EpisodeRecord::from(ep)).expect("episode serializes")
}

pub(crate) fn episode_from_json(value: serde_json::Value) -> Result<Episode> {
    let rec: EpisodeRecord = serde_json::from_value(value)?;
    record_to_episode(rec).map_err(|message| Error::Dataset { line: 0, message })
}

fn record_to_episode(rec: EpisodeRecord) -> std::result::Result<Episode, String> {
    let start_heading = Heading::new(rec.heading_deg)
        .ok_or_else(|| format!("invalid heading {}", rec.heading_deg))?;
    Ok(Episode {
        scene_id: rec.scene_id,
        start_pos: Point::new(rec.start[0], rec.start[1]),
        start_heading,
        playback_offsets: rec.goals.iter().map(|g| g.offset_s).collect(),
        goals: rec
            .goals
            .into_iter()
            .map(|g| Goal {
                position: Point::new(g.pos[0], g.pos[1]),
                category: g.category,
            })
            .collect(),
        seed: rec.seed,
    })
}

pub fn write_dataset(episodes: &[Episode]) -> String {
    let mut out = String::new();
    for ep in episodes {
        out.push_str(&serde_json::to_string(&EpisodeRecord::from(ep)).expect("episode serializes"));
        out.push('\n');
    }
    out
}

/// Like [`write_dataset`] with a leading `{"header": ...}` metadata line.
pub fn write_dataset_with_header(header: &serde_json::Value, episodes: &[Episode]) -> String {
    let mut out = serde_json::json!({ "header": header }).to_string();
    out.push('\n');
    out.push_str(&write_dataset(episodes));
    out
}

/// Parses and validates a dataset against the scenes it references.
pub fn parse_dataset(text: &str, scenes: &SceneSet) -> Result<Vec<Episode>> {
    let mut episodes = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |message: String| Error::Dataset {
            line: line_no,
            message,
        };
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| err(format!("malformed JSON: {e}")))?;
        if value.get("header").is_some() {
            continue;
        }
        let rec: EpisodeRecord =
            serde_json::from_value(value).map_err(|e| err(format!("bad episode record: {e}")))?;
        let grid = scenes.get(&rec.scene_id)?;
        let ep = record_to_episode(rec).map_err(err)?;
        validate(grid, &ep).map_err(err)?;
        episodes.push(ep);
    }
    Ok(episodes)
}

fn validate(grid: &crate::scene::SceneGrid, ep: &Episode) -> std::result::Result<(), String> {
    if ep.goals.is_empty() {
        return Err("episode has no goals".into());
    }
    let on_center = |p: Point, what: &str| {
        if !p.is_finite() || !grid.is_navigable_point(p) {
            Err(format!("{what} {p} is not navigable"))
        } else if !grid.is_cell_center(p) {
            Err(format!("{what} {p} is not on a cell center"))
        } else {
            Ok(())
        }
    };
    on_center(ep.start_pos, "start")?;
    for (k, g) in ep.goals.iter().enumerate() {
        on_center(g.position, &format!("goal {k}"))?;
    }
    if let Some(o) = ep.playback_offsets.iter().find(|o| !(0.0..1.0).contains(*o)) {
        return Err(format!("playback offset {o} outside [0, 1)"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{builders, Cell};

    fn scenes() -> SceneSet {
        [builders::corridor(7)].into_iter().collect()
    }

    fn episode() -> Episode {
        Episode {
            scene_id: "corridor-7".into(),
            start_pos: Cell::new(0, 0).center(),
            start_heading: Heading::new(30).unwrap(),
            goals: vec![Goal {
                position: Cell::new(5, 0).center(),
                category: 3,
            }],
            playback_offsets: vec![0.123_456_789_012_345_6],
            seed: u64::MAX - 3,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let text = write_dataset(&[episode()]);
        assert_eq!(parse_dataset(&text, &scenes()).unwrap(), vec![episode()]);
        let hdr = write_dataset_with_header(&serde_json::json!({"seed": 1}), &[episode()]);
        assert_eq!(parse_dataset(&hdr, &scenes()).unwrap(), vec![episode()]);
    }

    #[test]
    fn off_center_goal_is_rejected() {
        let mut ep = episode();
        ep.goals[0].position.x += 0.05;
        let text = write_dataset(&[ep]);
        assert!(matches!(
            parse_dataset(&text, &scenes()),
            Err(Error::Dataset { line: 1, .. })
        ));
    }

    #[test]
    fn empty_and_bad_inputs() {
        assert!(parse_dataset("", &scenes()).unwrap().is_empty());
        assert!(parse_dataset("{not json", &scenes()).is_err());
        let mut ep = episode();
        ep.scene_id = "nowhere".into();
        assert!(matches!(
            parse_dataset(&write_dataset(&[ep]), &scenes()),
            Err(Error::UnknownScene(_))
        ));
    }
}
