//! Small procedural scenes and grid transforms used by tests, benchmarks and
//! the bundled scene files.

use super::geometry::Point;
use super::grid::{SceneGrid, CELL_SIZE};
use rand::Rng;

/// A single open row of `n` cells.
pub fn corridor(n: usize) -> SceneGrid {
    SceneGrid::from_navigable(format!("corridor-{n}"), n, 1, vec![true; n])
        .expect("non-empty corridor")
}

/// 5x5 grid whose navigable cells are `(0..=4, 0)` and `(4, 0..=4)`.
pub fn l_scene() -> SceneGrid {
    let mut nav = vec![false; 25];
    for k in 0..5 {
        nav[k] = true; // (k, 0)
        nav[k * 5 + 4] = true; // (4, k)
    }
    SceneGrid::from_navigable("l-scene", 5, 5, nav).expect("non-empty")
}

/// Two 3-cell rooms separated by a wall: `...#...`.
pub fn two_rooms() -> SceneGrid {
    SceneGrid::from_rows("two-rooms", &["...#..."]).expect("non-empty")
}

/// Open rectangle of `width` x `height` cells.
pub fn open_room(scene_id: &str, width: usize, height: usize) -> SceneGrid {
    SceneGrid::from_navigable(scene_id, width, height, vec![true; width * height])
        .expect("non-empty")
}

/// Random occupancy with each cell blocked independently with `p_blocked`.
/// At least one cell is kept navigable.
pub fn random_grid<R: Rng>(
    scene_id: &str,
    width: usize,
    height: usize,
    p_blocked: f64,
    rng: &mut R,
) -> SceneGrid {
    let mut nav: Vec<bool> = (0..width * height)
        .map(|_| !rng.random_bool(p_blocked))
        .collect();
    if !nav.iter().any(|&n| n) {
        let k = rng.random_range(0..nav.len());
        nav[k] = true;
    }
    SceneGrid::from_navigable(scene_id, width, height, nav).expect("non-empty")
}

/// Rotates the grid 90 degrees counterclockwise about the origin, then shifts
/// it back into the positive quadrant. Cell `(i, j)` maps to `(H-1-j, i)`.
pub fn rotate_ccw(grid: &SceneGrid) -> SceneGrid {
    let (w, h) = (grid.width(), grid.height());
    let mut nav = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            let (ni, nj) = (h - 1 - j, i);
            nav[nj * h + ni] = grid.is_navigable_ij(i as i64, j as i64);
        }
    }
    SceneGrid::from_navigable(format!("{}-rot", grid.scene_id()), h, w, nav)
        .expect("rotation keeps navigable cells")
        .with_flags(grid.small_scene(), grid.wide_scene())
}

/// Point transform matching [`rotate_ccw`].
pub fn rotate_point_ccw(grid: &SceneGrid, p: Point) -> Point {
    Point::new(grid.height() as f64 * CELL_SIZE - p.y, p.x)
}

/// Mirrors the grid across the horizontal line `y = H * CELL_SIZE / 2`.
pub fn mirror_y(grid: &SceneGrid) -> SceneGrid {
    let (w, h) = (grid.width(), grid.height());
    let mut nav = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            nav[(h - 1 - j) * w + i] = grid.is_navigable_ij(i as i64, j as i64);
        }
    }
    SceneGrid::from_navigable(format!("{}-mirror", grid.scene_id()), w, h, nav)
        .expect("mirror keeps navigable cells")
        .with_flags(grid.small_scene(), grid.wide_scene())
}

/// Point transform matching [`mirror_y`].
pub fn mirror_point_y(grid: &SceneGrid, p: Point) -> Point {
    Point::new(p.x, grid.height() as f64 * CELL_SIZE - p.y)
}
