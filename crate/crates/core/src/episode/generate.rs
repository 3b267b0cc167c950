use super::{Episode, Goal, SoundCategoryId};
use crate::error::{Error, Result};
use crate::scene::{Cell, DistanceField, Heading, SceneGrid, CELL_SIZE};
use rand::seq::SliceRandom;
use rand::Rng;

pub const DEFAULT_SAMPLING_BUDGET: usize = 10_000;

/// Consecutive failed draws for one goal before the whole placement restarts
/// from a fresh start cell.
const GOAL_RETRIES: usize = 200;

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Total candidate-point draws allowed per episode.
    pub budget: usize,
    /// Category ids to assign to goals.
    pub categories: Vec<SoundCategoryId>,
}

impl GeneratorConfig {
    pub fn new(categories: Vec<SoundCategoryId>) -> Self {
        Self {
            budget: DEFAULT_SAMPLING_BUDGET,
            categories,
        }
    }
}

/// Probability of rejecting a point pair `d` meters apart in wide scenes.
/// Bands are half-open: (3,4], (4,5], (5,6], (6,10], (10,inf); `d <= 3` is kept.
pub fn rejection_probability(d: f64) -> f64 {
    if d > 10.0 {
        1.0
    } else if d > 6.0 {
        0.7
    } else if d > 5.0 {
        0.6
    } else if d > 4.0 {
        0.5
    } else if d > 3.0 {
        0.4
    } else {
        0.0
    }
}

/// One Bernoulli draw of the distance-bucket rejection.
pub fn survives_distance_rejection<R: Rng>(d: f64, rng: &mut R) -> bool {
    rng.random::<f64>() >= rejection_probability(d)
}

fn thresholds(grid: &SceneGrid) -> (f64, f64) {
    if grid.small_scene() {
        (0.6, 1.001)
    } else {
        (1.0, 1.1)
    }
}

/// Deterministic pairwise constraints: minimum separation and minimum
/// geodesic-to-Euclidean ratio; for wide scenes also the certain rejection above 10 m.
pub fn pair_constraints_hold(grid: &SceneGrid, geodesic: f64, euclidean: f64) -> bool {
    let (min_sep, min_ratio) = thresholds(grid);
    if geodesic < min_sep || euclidean <= 0.0 || geodesic / euclidean <= min_ratio {
        return false;
    }
    !(grid.wide_scene() && rejection_probability(geodesic) >= 1.0)
}

/// Samples an episode with `n` goals satisfying every pairwise constraint.
pub fn generate_episode<R: Rng>(
    grid: &SceneGrid,
    n: usize,
    config: &GeneratorConfig,
    seed: u64,
    rng: &mut R,
) -> Result<Episode> {
    if n == 0 {
        return Err(Error::InvalidArgument("episodes need at least one goal".into()));
    }
    if config.categories.is_empty() {
        return Err(Error::InvalidArgument("no sound categories to assign".into()));
    }
    let cells: Vec<Cell> = grid.navigable_cells().collect();
    if cells.len() < n + 1 {
        return Err(Error::BudgetExhausted {
            budget: config.budget,
        });
    }
    let mut attempts = 0usize;
    let placed = 'outer: loop {
        if attempts >= config.budget {
            return Err(Error::BudgetExhausted {
                budget: config.budget,
            });
        }
        attempts += 1;
        let start = cells[rng.random_range(0..cells.len())];
        let mut placed = vec![start];
        let mut fields = vec![DistanceField::from_cell(grid, start)];
        for _ in 0..n {
            let mut retries = 0;
            let cand = loop {
                if attempts >= config.budget {
                    return Err(Error::BudgetExhausted {
                        budget: config.budget,
                    });
                }
                if retries >= GOAL_RETRIES {
                    continue 'outer;
                }
                attempts += 1;
                retries += 1;
                let cand = cells[rng.random_range(0..cells.len())];
                if placed.contains(&cand) {
                    continue;
                }
                if accept_candidate(grid, &placed, &fields, cand, rng) {
                    break cand;
                }
            };
            placed.push(cand);
            fields.push(DistanceField::from_cell(grid, cand));
        }
        break placed;
    };

    let start_heading = Heading::from_index(rng.random_range(0..Heading::COUNT));
    let mut pool = config.categories.clone();
    pool.shuffle(rng);
    let goals: Vec<Goal> = placed[1..]
        .iter()
        .enumerate()
        .map(|(k, c)| Goal {
            position: c.center(),
            category: if pool.len() >= n {
                pool[k]
            } else {
                pool[rng.random_range(0..pool.len())]
            },
        })
        .collect();
    let playback_offsets = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(Episode {
        scene_id: grid.scene_id().to_owned(),
        start_pos: placed[0].center(),
        start_heading,
        goals,
        playback_offsets,
        seed,
    })
}

fn accept_candidate<R: Rng>(
    grid: &SceneGrid,
    placed: &[Cell],
    fields: &[DistanceField],
    cand: Cell,
    rng: &mut R,
) -> bool {
    for (p, field) in placed.iter().zip(fields) {
        let Some(steps) = field.steps_to(cand) else {
            return false;
        };
        let geo = steps as f64 * CELL_SIZE;
        let euc = p.center().distance(&cand.center());
        if !pair_constraints_hold(grid, geo, euc) {
            return false;
        }
        if grid.wide_scene() && !survives_distance_rejection(geo, rng) {
            return false;
        }
    }
    true
}

/// Re-checks the deterministic constraints of a generated episode with fresh
/// geodesic queries.
pub fn check_episode(grid: &SceneGrid, ep: &Episode) -> std::result::Result<(), String> {
    if ep.goals.is_empty() {
        return Err("no goals".into());
    }
    if ep.playback_offsets.len() != ep.goals.len() {
        return Err("one playback offset per goal required".into());
    }
    if ep.playback_offsets.iter().any(|o| !(0.0..1.0).contains(o)) {
        return Err("playback offset outside [0, 1)".into());
    }
    let mut points = vec![ep.start_pos];
    points.extend(ep.goals.iter().map(|g| g.position));
    for p in &points {
        if !grid.is_navigable_point(*p) || !grid.is_cell_center(*p) {
            return Err(format!("{p} is not a navigable cell center"));
        }
    }
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let geo = grid
                .geodesic_distance(points[a], points[b])
                .map_err(|e| e.to_string())?
                .meters()
                .ok_or_else(|| format!("points {a} and {b} are not connected"))?;
            let euc = points[a].distance(&points[b]);
            if !pair_constraints_hold(grid, geo, euc) {
                return Err(format!(
                    "points {a} and {b} violate constraints: geodesic {geo}, euclidean {euc}"
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::builders;
    use crate::seed::rng_from_seed;

    fn config() -> GeneratorConfig {
        GeneratorConfig::new((0..4).collect())
    }

    #[test]
    fn band_edges() {
        assert_eq!(rejection_probability(3.0), 0.0);
        assert_eq!(rejection_probability(3.25), 0.4);
        assert_eq!(rejection_probability(4.0), 0.4);
        assert_eq!(rejection_probability(5.0), 0.5);
        assert_eq!(rejection_probability(6.0), 0.6);
        assert_eq!(rejection_probability(7.0), 0.7);
        assert_eq!(rejection_probability(10.0), 0.7);
        assert_eq!(rejection_probability(10.25), 1.0);
    }

    #[test]
    fn l_scene_corner_pair_is_acceptable() {
        let g = builders::l_scene();
        let geo = 2.0;
        let euc = Cell::new(0, 0).center().distance(&Cell::new(4, 4).center());
        assert!((euc - 2f64.sqrt()).abs() < 1e-12);
        assert!(pair_constraints_hold(&g, geo, euc));
    }

    #[test]
    fn straight_corridor_exhausts_budget() {
        let g = builders::corridor(7);
        let mut rng = rng_from_seed(1);
        let err = generate_episode(&g, 1, &config(), 1, &mut rng).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { budget: 10_000 }));
    }

    #[test]
    fn generated_episodes_pass_checks() {
        let g = builders::open_room("room", 12, 10);
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let ep = generate_episode(&g, 3, &config(), seed, &mut rng).unwrap();
            check_episode(&g, &ep).unwrap();
            let mut cats: Vec<_> = ep.goals.iter().map(|g| g.category).collect();
            cats.dedup();
            assert_eq!(cats.len(), 3);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = builders::open_room("room", 12, 10);
        let a = generate_episode(&g, 2, &config(), 9, &mut rng_from_seed(9)).unwrap();
        let b = generate_episode(&g, 2, &config(), 9, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_goals_rejected() {
        let g = builders::open_room("room", 4, 4);
        assert!(generate_episode(&g, 0, &config(), 0, &mut rng_from_seed(0)).is_err());
    }
}
