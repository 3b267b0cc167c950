//! Shortest paths on the 4-connected cell graph.
//!
//! Edge costs are counted in whole steps and converted to meters only at the
//! boundary, so every distance is an exact multiple of [`CELL_SIZE`].

use super::geometry::Point;
use super::grid::{Cell, SceneGrid, CELL_SIZE};
use crate::error::{Error, Result};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Distance between two points, or the information that none exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geodesic {
    Reachable(f64),
    Unreachable,
}

impl Geodesic {
    pub fn meters(self) -> Option<f64> {
        match self {
            Geodesic::Reachable(d) => Some(d),
            Geodesic::Unreachable => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, Geodesic::Reachable(_))
    }

    pub fn require(self) -> Result<f64> {
        self.meters().ok_or(Error::Unreachable)
    }
}

const UNREACHED: u32 = u32::MAX;

/// Single-source step counts from one origin cell to every cell of a grid.
#[derive(Debug, Clone)]
pub struct DistanceField {
    origin: Cell,
    width: usize,
    steps: Vec<u32>,
}

impl DistanceField {
    /// Runs Dijkstra from `origin` over unit-cost 4-connected edges.
    pub fn from_cell(grid: &SceneGrid, origin: Cell) -> Self {
        let mut steps = vec![UNREACHED; grid.num_cells()];
        let mut heap = BinaryHeap::new();
        let start = grid.index(origin);
        steps[start] = 0;
        heap.push(Reverse((0u32, start)));
        while let Some(Reverse((cost, idx))) = heap.pop() {
            if cost > steps[idx] {
                continue;
            }
            for nb in grid.neighbors(grid.cell_at(idx)) {
                let n = grid.index(nb);
                let next = cost + 1;
                if next < steps[n] {
                    steps[n] = next;
                    heap.push(Reverse((next, n)));
                }
            }
        }
        Self {
            origin,
            width: grid.width(),
            steps,
        }
    }

    pub fn from_point(grid: &SceneGrid, p: Point) -> Result<Self> {
        Ok(Self::from_cell(grid, grid.snap_to_cell(p)?))
    }

    pub fn origin(&self) -> Cell {
        self.origin
    }

    pub fn steps_to(&self, cell: Cell) -> Option<u32> {
        let s = self.steps[cell.j * self.width + cell.i];
        (s != UNREACHED).then_some(s)
    }

    pub fn distance_to(&self, cell: Cell) -> Geodesic {
        match self.steps_to(cell) {
            Some(s) => Geodesic::Reachable(s as f64 * CELL_SIZE),
            None => Geodesic::Unreachable,
        }
    }

    /// Distance to the cell containing `p`; errors if `p` is not navigable.
    pub fn distance_to_point(&self, grid: &SceneGrid, p: Point) -> Result<Geodesic> {
        Ok(self.distance_to(grid.snap_to_cell(p)?))
    }
}

impl SceneGrid {
    /// Length of the shortest 4-connected path between the cells containing `p` and `q`.
    pub fn geodesic_distance(&self, p: Point, q: Point) -> Result<Geodesic> {
        let from = self.snap_to_cell(p)?;
        let to = self.snap_to_cell(q)?;
        Ok(match self.steps_between(from, to) {
            Some(s) => Geodesic::Reachable(s as f64 * CELL_SIZE),
            None => Geodesic::Unreachable,
        })
    }

    /// Dijkstra with early exit once `to` is settled.
    pub fn steps_between(&self, from: Cell, to: Cell) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        let target = self.index(to);
        let mut steps = vec![UNREACHED; self.num_cells()];
        let mut heap = BinaryHeap::new();
        steps[self.index(from)] = 0;
        heap.push(Reverse((0u32, self.index(from))));
        while let Some(Reverse((cost, idx))) = heap.pop() {
            if idx == target {
                return Some(cost);
            }
            if cost > steps[idx] {
                continue;
            }
            for nb in self.neighbors(self.cell_at(idx)) {
                let n = self.index(nb);
                if cost + 1 < steps[n] {
                    steps[n] = cost + 1;
                    heap.push(Reverse((cost + 1, n)));
                }
            }
        }
        None
    }

    /// Cell-center waypoints of a shortest path from `p`'s cell to `q`'s cell,
    /// both ends included.
    pub fn shortest_cell_path(&self, p: Point, q: Point) -> Result<Vec<Point>> {
        let from = self.snap_to_cell(p)?;
        let to = self.snap_to_cell(q)?;
        let field = DistanceField::from_cell(self, to);
        Ok(self
            .descend(&field, from)
            .ok_or(Error::Unreachable)?
            .into_iter()
            .map(Cell::center)
            .collect())
    }

    /// Follows strictly decreasing step counts of `field` from `from` to its origin.
    /// Neighbours are tried in the fixed grid order, so the path is deterministic.
    pub fn descend(&self, field: &DistanceField, from: Cell) -> Option<Vec<Cell>> {
        let mut remaining = field.steps_to(from)?;
        let mut path = Vec::with_capacity(remaining as usize + 1);
        let mut cur = from;
        path.push(cur);
        while remaining > 0 {
            cur = self
                .neighbors(cur)
                .find(|&nb| field.steps_to(nb) == Some(remaining - 1))
                .expect("distance field is consistent");
            remaining -= 1;
            path.push(cur);
        }
        Some(path)
    }
}

#[cfg(test)]
mod tests {
    use super::super::builders;
    use super::*;

    #[test]
    fn corridor_end_to_end() {
        let g = builders::corridor(7);
        let d = g
            .geodesic_distance(Cell::new(0, 0).center(), Cell::new(6, 0).center())
            .unwrap();
        assert_eq!(d, Geodesic::Reachable(1.5));
        let p = Point::new(0.125, 0.125);
        assert_eq!(g.geodesic_distance(p, p).unwrap(), Geodesic::Reachable(0.0));
    }

    #[test]
    fn l_scene_corner() {
        let g = builders::l_scene();
        let a = Cell::new(0, 0).center();
        let b = Cell::new(4, 4).center();
        assert_eq!(g.geodesic_distance(a, b).unwrap(), Geodesic::Reachable(2.0));
        let path = g.shortest_cell_path(a, b).unwrap();
        assert_eq!(path.len(), 9);
        assert_eq!(path[0], a);
        assert_eq!(path[8], b);
    }

    #[test]
    fn disjoint_rooms() {
        let g = builders::two_rooms();
        let d = g
            .geodesic_distance(Cell::new(0, 0).center(), Cell::new(4, 0).center())
            .unwrap();
        assert_eq!(d, Geodesic::Unreachable);
        assert!(g
            .shortest_cell_path(Cell::new(0, 0).center(), Cell::new(4, 0).center())
            .is_err());
    }

    #[test]
    fn short_paths() {
        let g = builders::corridor(7);
        let c = |i| Cell::new(i, 0).center();
        assert_eq!(g.shortest_cell_path(c(0), c(2)).unwrap(), vec![c(0), c(1), c(2)]);
        assert_eq!(g.shortest_cell_path(c(3), c(3)).unwrap(), vec![c(3)]);
    }

    #[test]
    fn non_navigable_query_is_an_error() {
        let g = builders::corridor(7);
        assert!(g
            .geodesic_distance(Point::new(-1.0, 0.1), Point::new(0.1, 0.1))
            .is_err());
    }
}
