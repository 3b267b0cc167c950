//! Ground-truth Sound Direction Map.
//!
//! Eight egocentric 45-degree sectors, sector 0 centered dead ahead and
//! indices increasing counterclockwise. Each node holds `min(1, 1/d)` for the
//! geodesically nearest active source whose Euclidean bearing falls in the
//! sector, or 0 when the sector holds no reachable source.

use crate::error::{Error, Result};
use crate::scene::{Geodesic, Point, Pose, SceneGrid};
use serde::{Deserialize, Serialize};

pub const NUM_NODES: usize = 8;
pub const SECTOR_WIDTH_DEG: f64 = 360.0 / NUM_NODES as f64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SdmVector(pub [f64; NUM_NODES]);

impl SdmVector {
    pub fn zeros() -> Self {
        Self([0.0; NUM_NODES])
    }

    pub fn nodes(&self) -> &[f64; NUM_NODES] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Node values shifted so that `out[(k + by) mod 8] = self[k]`.
    pub fn rotated(&self, by: usize) -> Self {
        let mut out = [0.0; NUM_NODES];
        for (k, &v) in self.0.iter().enumerate() {
            out[(k + by) % NUM_NODES] = v;
        }
        Self(out)
    }

    pub fn squared_error(&self, other: &SdmVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Sector holding a relative bearing in degrees; sectors are half-open
/// `[45k - 22.5, 45k + 22.5)`.
pub fn sector_of_bearing(beta_deg: f64) -> usize {
    let k = ((beta_deg + SECTOR_WIDTH_DEG / 2.0) / SECTOR_WIDTH_DEG).floor() as i64;
    k.rem_euclid(NUM_NODES as i64) as usize
}

/// Sector of `source` in the egocentric frame of `pose`.
pub fn sector_index(pose: &Pose, source: Point) -> Result<usize> {
    if source == pose.position {
        return Err(Error::CoincidentPoints);
    }
    Ok(sector_of_bearing(pose.relative_bearing_deg(&source)))
}

/// Clipped reciprocal distance of one node.
pub fn node_value(geodesic: f64) -> f64 {
    if geodesic <= 1.0 {
        1.0
    } else {
        1.0 / geodesic
    }
}

/// True SDM for the active sources seen from `pose`.
pub fn true_sdm(grid: &SceneGrid, pose: &Pose, active_sources: &[Point]) -> Result<SdmVector> {
    let distances = active_sources
        .iter()
        .map(|&s| grid.geodesic_distance(pose.position, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(true_sdm_with_distances(pose, active_sources, &distances))
}

/// [`true_sdm`] with caller-supplied geodesic distances. A source exactly at
/// the agent position has no bearing and is assigned to sector 0.
pub fn true_sdm_with_distances(pose: &Pose, sources: &[Point], distances: &[Geodesic]) -> SdmVector {
    let mut nearest = [f64::INFINITY; NUM_NODES];
    for (&s, d) in sources.iter().zip(distances) {
        let Geodesic::Reachable(d) = *d else { continue };
        let k = sector_index(pose, s).unwrap_or(0);
        nearest[k] = nearest[k].min(d);
    }
    let mut out = [0.0; NUM_NODES];
    for (o, &d) in out.iter_mut().zip(&nearest) {
        if d.is_finite() {
            *o = node_value(d);
        }
    }
    SdmVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{builders, Cell, Heading};

    fn pose_at(cell: Cell, heading: u32) -> Pose {
        Pose::new(cell.center(), Heading::new(heading).unwrap())
    }

    #[test]
    fn sectors() {
        let p = pose_at(Cell::new(2, 2), 0);
        assert_eq!(sector_index(&p, Cell::new(4, 2).center()).unwrap(), 0);
        assert_eq!(sector_index(&p, Cell::new(2, 4).center()).unwrap(), 2);
        assert_eq!(sector_of_bearing(22.5), 1);
        assert_eq!(sector_of_bearing(22.499), 0);
        assert_eq!(sector_of_bearing(-22.5), 0);
        assert_eq!(sector_of_bearing(-180.0), 4);
        assert_eq!(sector_of_bearing(-30.0), 7);
        assert!(matches!(
            sector_index(&p, p.position),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn corridor_values() {
        let g = builders::corridor(7);
        let p = pose_at(Cell::new(0, 0), 0);
        let c = |i| Cell::new(i, 0).center();
        let sdm = true_sdm(&g, &p, &[c(6)]).unwrap();
        assert!((sdm.0[0] - 1.0 / 1.5).abs() < 1e-15);
        assert!(sdm.0[1..].iter().all(|&v| v == 0.0));
        assert_eq!(true_sdm(&g, &p, &[c(2)]).unwrap().0[0], 1.0);
        assert_eq!(true_sdm(&g, &p, &[c(5), c(6)]).unwrap().0[0], 0.8);
        assert_eq!(true_sdm(&g, &p, &[]).unwrap(), SdmVector::zeros());
    }

    #[test]
    fn unreachable_sector_stays_empty() {
        let g = builders::two_rooms();
        let p = pose_at(Cell::new(0, 0), 0);
        let sdm = true_sdm(&g, &p, &[Cell::new(6, 0).center()]).unwrap();
        assert_eq!(sdm, SdmVector::zeros());
    }

    #[test]
    fn rotation_helper() {
        let v = SdmVector([1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25]);
        assert_eq!(v.rotated(1).0, [0.25, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
