//! Scene grids, navigability queries and the geodesic distance engine.

pub mod builders;
mod geodesic;
mod geometry;
mod grid;

pub use geodesic::{DistanceField, Geodesic};
pub use geometry::{wrap_degrees, Heading, Point, Pose};
pub use grid::{Cell, SceneGrid, CELL_SIZE};

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

/// Scenes addressable by id.
#[derive(Debug, Clone, Default)]
pub struct SceneSet {
    scenes: BTreeMap<String, Arc<SceneGrid>>,
}

impl SceneSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, grid: SceneGrid) {
        self.scenes.insert(grid.scene_id().to_owned(), Arc::new(grid));
    }

    pub fn get(&self, scene_id: &str) -> Result<&Arc<SceneGrid>> {
        self.scenes
            .get(scene_id)
            .ok_or_else(|| Error::UnknownScene(scene_id.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<SceneGrid>> {
        self.scenes.values()
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    /// Loads scene files; directories contribute every `*.scene` file they contain.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut set = Self::new();
        for path in paths {
            let path = path.as_ref();
            if path.is_dir() {
                let mut files: Vec<_> = std::fs::read_dir(path)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e == "scene"))
                    .collect();
                files.sort();
                for f in files {
                    set.insert(SceneGrid::parse(&std::fs::read_to_string(f)?)?);
                }
            } else {
                set.insert(SceneGrid::parse(&std::fs::read_to_string(path)?)?);
            }
        }
        Ok(set)
    }
}

impl FromIterator<SceneGrid> for SceneSet {
    fn from_iter<T: IntoIterator<Item = SceneGrid>>(iter: T) -> Self {
        let mut set = Self::new();
        for g in iter {
            set.insert(g);
        }
        set
    }
}
