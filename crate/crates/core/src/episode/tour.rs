//! Order-free tour lengths: the shortest start-anchored walk through a goal
//! set, minimized over every visiting order.

use crate::error::{Error, Result};
use crate::scene::{Cell, DistanceField, Point, SceneGrid, CELL_SIZE};
use itertools::Itertools;

/// Largest goal set searched exhaustively (8! orders).
pub const MAX_TOUR_GOALS: usize = 8;

/// Minimum over visiting orders of `d(start, g1) + d(g1, g2) + ...`; 0 for no goals.
pub fn min_tour_length(grid: &SceneGrid, start: Point, goals: &[Point]) -> Result<f64> {
    if goals.len() > MAX_TOUR_GOALS {
        return Err(Error::TooManyGoals(goals.len()));
    }
    let start = grid.snap_to_cell(start)?;
    let cells = goals
        .iter()
        .map(|&g| grid.snap_to_cell(g))
        .collect::<Result<Vec<_>>>()?;
    let table = GoalDistances::new(grid, &cells);
    let all: Vec<usize> = (0..cells.len()).collect();
    table
        .tour_steps_from(start, &all)
        .map(steps_to_meters)
        .ok_or(Error::Unreachable)
}

pub(crate) fn steps_to_meters(steps: u32) -> f64 {
    steps as f64 * CELL_SIZE
}

/// Distance fields of a fixed goal set plus the goal-to-goal step matrix, so
/// that tours from many start cells can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct GoalDistances {
    fields: Vec<DistanceField>,
    pair_steps: Vec<Vec<Option<u32>>>,
}

impl GoalDistances {
    pub fn new(grid: &SceneGrid, goals: &[Cell]) -> Self {
        let fields: Vec<DistanceField> = goals
            .iter()
            .map(|&g| DistanceField::from_cell(grid, g))
            .collect();
        let pair_steps = fields
            .iter()
            .map(|f| goals.iter().map(|&g| f.steps_to(g)).collect())
            .collect();
        Self { fields, pair_steps }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, goal: usize) -> &DistanceField {
        &self.fields[goal]
    }

    /// Steps from `cell` to goal `goal`.
    pub fn steps_to_goal(&self, cell: Cell, goal: usize) -> Option<u32> {
        self.fields[goal].steps_to(cell)
    }

    pub fn pair_steps(&self, a: usize, b: usize) -> Option<u32> {
        self.pair_steps[a][b]
    }

    /// Shortest tour from `cell` through the goals listed in `subset`;
    /// `None` if any of them is unreachable.
    pub fn tour_steps_from(&self, cell: Cell, subset: &[usize]) -> Option<u32> {
        self.best_order_from(cell, subset).map(|(steps, _)| steps)
    }

    /// Optimal visiting order and its length. Among equal-length orders the
    /// lexicographically first permutation of `subset` wins.
    pub fn best_order_from(&self, cell: Cell, subset: &[usize]) -> Option<(u32, Vec<usize>)> {
        if subset.is_empty() {
            return Some((0, Vec::new()));
        }
        let first: Vec<u32> = subset
            .iter()
            .map(|&g| self.steps_to_goal(cell, g))
            .collect::<Option<_>>()?;
        let mut best: Option<(u32, Vec<usize>)> = None;
        for order in (0..subset.len()).permutations(subset.len()) {
            let mut total = first[order[0]];
            for w in order.windows(2) {
                total += self.pair_steps[subset[w[0]]][subset[w[1]]]?;
            }
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, order.iter().map(|&k| subset[k]).collect()));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::builders;

    fn c(i: usize) -> Point {
        Cell::new(i, 0).center()
    }

    #[test]
    fn corridor_tours() {
        let g = builders::corridor(7);
        assert_eq!(min_tour_length(&g, c(0), &[c(3), c(6)]).unwrap(), 1.5);
        assert_eq!(min_tour_length(&g, c(0), &[c(6), c(3)]).unwrap(), 1.5);
        assert_eq!(min_tour_length(&g, c(3), &[c(0), c(6)]).unwrap(), 2.25);
        assert_eq!(min_tour_length(&g, c(3), &[]).unwrap(), 0.0);
    }

    #[test]
    fn unreachable_goal() {
        let g = builders::two_rooms();
        assert!(matches!(
            min_tour_length(&g, c(0), &[c(1), c(5)]),
            Err(Error::Unreachable)
        ));
    }

    #[test]
    fn too_many_goals() {
        let g = builders::corridor(12);
        let goals: Vec<Point> = (1..10).map(c).collect();
        assert!(matches!(
            min_tour_length(&g, c(0), &goals),
            Err(Error::TooManyGoals(9))
        ));
    }

    #[test]
    fn best_order_prefers_near_goal() {
        let g = builders::corridor(7);
        let cells = [Cell::new(6, 0), Cell::new(3, 0)];
        let t = GoalDistances::new(&g, &cells);
        assert_eq!(t.best_order_from(Cell::new(0, 0), &[0, 1]), Some((6, vec![1, 0])));
    }
}
