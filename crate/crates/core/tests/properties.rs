//! Randomized invariants for geodesics, metrics, the SDM oracle, rewards and
//! the greedy SDM policy.

use itertools::Itertools;
use proptest::prelude::*;
use sdmnav::agents::{greedy_sdm_action, AgentKind};
use sdmnav::audio::{CategoryLibrary, SoundSet};
use sdmnav::env::{Action, FOUND_REWARD, STEP_PENALTY};
use sdmnav::episode::{generate_episode, Episode, GeneratorConfig, Goal};
use sdmnav::harness::{run_episode, RunOptions};
use sdmnav::metrics::{episode_metrics, l_mg, EpisodeResult};
use sdmnav::env::Outcome;
use sdmnav::scene::{builders, Cell, Heading, Point, Pose, SceneGrid, SceneSet};
use sdmnav::sdm::{node_value, true_sdm, SdmVector, NUM_NODES};
use sdmnav::seed::{derive_seed, rng_from_seed, Stream};
use std::sync::Arc;

fn random_grid(seed: u64) -> SceneGrid {
    builders::random_grid("rand", 12, 12, 0.3, &mut rng_from_seed(seed))
}

/// Up to `n` distinct navigable cells, chosen from `picks` (indices taken modulo).
fn pick_cells(grid: &SceneGrid, picks: &[usize]) -> Vec<Cell> {
    let cells: Vec<Cell> = grid.navigable_cells().collect();
    picks.iter().map(|&k| cells[k % cells.len()]).unique().collect()
}

fn geo(grid: &SceneGrid, a: Point, b: Point) -> Option<f64> {
    grid.geodesic_distance(a, b).unwrap().meters()
}

fn metrics_episode(start: Cell, goals: &[Cell]) -> Episode {
    Episode {
        scene_id: "room".into(),
        start_pos: start.center(),
        start_heading: Heading::new(0).unwrap(),
        goals: goals
            .iter()
            .map(|c| Goal {
                position: c.center(),
                category: 0,
            })
            .collect(),
        playback_offsets: vec![0.0; goals.len()],
        seed: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn metrics_bounds_and_order_invariance(
        picks in prop::collection::vec(0usize..10_000, 2..=6),
        reached_mask in prop::collection::vec(any::<bool>(), 5),
        order_seed in any::<u64>(),
        path in 0.0f64..40.0,
    ) {
        let grid = builders::open_room("room", 10, 8);
        let cells = pick_cells(&grid, &picks);
        prop_assume!(cells.len() >= 2);
        let (start, goals) = (cells[0], &cells[1..]);
        let ep = metrics_episode(start, goals);
        let mut reached: Vec<usize> = (0..goals.len()).filter(|&g| reached_mask[g]).collect();
        let mut rng = rng_from_seed(order_seed);
        rand::seq::SliceRandom::shuffle(reached.as_mut_slice(), &mut rng);
        let make = |order: Vec<usize>| EpisodeResult {
            success: order.len() == goals.len(),
            n_reached: order.len(),
            outcome: if order.len() == goals.len() { Outcome::AllReached } else { Outcome::WrongFound },
            reached_order: order,
            path_length: path,
            episode: ep.clone(),
        };
        let m = episode_metrics(&grid, &make(reached.clone())).unwrap();
        prop_assert!(m.spl <= m.success);
        prop_assert!(m.ppl <= m.progress + 1e-15);
        prop_assert!((0.0..=1.0).contains(&m.spl) && (0.0..=1.0).contains(&m.ppl));

        let points: Vec<Point> = reached.iter().map(|&g| goals[g].center()).collect();
        let best = l_mg(&grid, start.center(), &points).unwrap();
        let mut explicit = 0.0;
        let mut at = start.center();
        for p in &points {
            explicit += geo(&grid, at, *p).unwrap();
            at = *p;
        }
        prop_assert!(best <= explicit + 1e-12);

        let mut reversed = reached.clone();
        reversed.reverse();
        let m2 = episode_metrics(&grid, &make(reversed)).unwrap();
        prop_assert_eq!(m.ppl, m2.ppl);
        prop_assert_eq!(m.spl, m2.spl);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn geodesics_are_symmetric_and_satisfy_the_triangle_inequality(
        seed in any::<u64>(),
        picks in prop::collection::vec(0usize..10_000, 3),
    ) {
        let grid = random_grid(seed);
        let cells = pick_cells(&grid, &picks);
        prop_assume!(cells.len() == 3);
        let [a, b, c] = [cells[0].center(), cells[1].center(), cells[2].center()];
        prop_assert_eq!(geo(&grid, a, b), geo(&grid, b, a));
        prop_assert_eq!(geo(&grid, a, a), Some(0.0));
        if let (Some(ab), Some(bc)) = (geo(&grid, a, b), geo(&grid, b, c)) {
            let ac = geo(&grid, a, c).expect("connected through b");
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab >= a.distance(&b) - 1e-12);
        }
    }

    #[test]
    fn sdm_shifts_by_two_sectors_per_quarter_turn(
        seed in any::<u64>(),
        picks in prop::collection::vec(0usize..10_000, 2..=5),
        heading in 0u32..36,
    ) {
        let grid = random_grid(seed);
        let cells = pick_cells(&grid, &picks);
        prop_assume!(cells.len() >= 2);
        let sources: Vec<Point> = cells[1..].iter().map(|c| c.center()).collect();
        let pose = Pose::new(cells[0].center(), Heading::new(heading * 10).unwrap());
        let turned = Pose::new(pose.position, Heading::new((heading * 10 + 90) % 360).unwrap());
        let s = true_sdm(&grid, &pose, &sources).unwrap();
        let t = true_sdm(&grid, &turned, &sources).unwrap();
        // A quarter turn left moves every source two sectors clockwise.
        prop_assert_eq!(t.rotated(2), s);

        // Rotating the whole world keeps the egocentric SDM when the heading turns with it.
        let rgrid = builders::rotate_ccw(&grid);
        let rsources: Vec<Point> = sources.iter().map(|&p| builders::rotate_point_ccw(&grid, p)).collect();
        let rpose = Pose::new(builders::rotate_point_ccw(&grid, pose.position), turned.heading);
        prop_assert_eq!(true_sdm(&rgrid, &rpose, &rsources).unwrap(), s);
    }

    #[test]
    fn sdm_is_clipped_and_keeps_only_the_nearest_source_per_sector(
        seed in any::<u64>(),
        picks in prop::collection::vec(0usize..10_000, 2..=6),
        heading in 0u32..36,
    ) {
        let grid = random_grid(seed);
        let cells = pick_cells(&grid, &picks);
        prop_assume!(cells.len() >= 2);
        let pose = Pose::new(cells[0].center(), Heading::new(heading * 10).unwrap());
        let sources: Vec<Point> = cells[1..].iter().map(|c| c.center()).collect();
        let s = true_sdm(&grid, &pose, &sources).unwrap();
        prop_assert!(s.is_valid());
        for v in s.0 {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // Each node equals the value of its nearest source alone; adding
        // the other sources never changes it.
        for k in 0..NUM_NODES {
            let best = sources
                .iter()
                .filter(|&&p| sdmnav::sdm::sector_index(&pose, p).unwrap() == k)
                .filter_map(|&p| geo(&grid, pose.position, p))
                .fold(f64::INFINITY, f64::min);
            let expect = if best.is_finite() { node_value(best) } else { 0.0 };
            prop_assert_eq!(s.0[k], expect);
        }
    }

    #[test]
    fn node_value_is_monotone_and_clipped(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(node_value(lo) >= node_value(hi));
        prop_assert!(node_value(lo) <= 1.0 && node_value(hi) > 0.0);
        if lo <= 1.0 {
            prop_assert_eq!(node_value(lo), 1.0);
        }
    }

    #[test]
    fn greedy_never_claims_found_when_every_goal_is_far(
        seed in any::<u64>(),
        picks in prop::collection::vec(0usize..10_000, 2..=5),
        heading in 0u32..36,
    ) {
        let grid = random_grid(seed);
        let cells = pick_cells(&grid, &picks);
        prop_assume!(cells.len() >= 2);
        let pose = Pose::new(cells[0].center(), Heading::new(heading * 10).unwrap());
        let far: Vec<Point> = cells[1..]
            .iter()
            .map(|c| c.center())
            .filter(|&p| geo(&grid, pose.position, p).is_none_or(|d| d > 1.0))
            .collect();
        let s = true_sdm(&grid, &pose, &far).unwrap();
        prop_assert_ne!(greedy_sdm_action(&s), Action::Found);
    }

    #[test]
    fn greedy_on_zero_map_moves_forward(k in 0usize..NUM_NODES) {
        let mut s = SdmVector::zeros();
        prop_assert_eq!(greedy_sdm_action(&s), Action::MoveForward);
        s.0[k] = 0.5;
        prop_assert_ne!(greedy_sdm_action(&s), Action::Found);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rewards_telescope_over_an_episode(seed in any::<u64>(), n in 1usize..=3) {
        let grid = builders::open_room("room", 14, 10);
        let lib = Arc::new(CategoryLibrary::parametric(SoundSet::Default));
        let cfg = GeneratorConfig::new(lib.ids());
        let ep_seed = derive_seed(seed, Stream::Episode, 0);
        let ep = generate_episode(&grid, n, &cfg, ep_seed, &mut rng_from_seed(ep_seed)).unwrap();
        let scenes: SceneSet = std::iter::once(grid).collect();
        let run = run_episode(&scenes, &lib, &ep, 0, &RunOptions::new(AgentKind::Random, seed)).unwrap();
        let total: f64 = run.rewards.iter().sum();
        let expected = FOUND_REWARD * run.result.n_reached as f64
            - (run.final_tour - run.initial_tour)
            - STEP_PENALTY * run.rewards.len() as f64;
        prop_assert!((total - expected).abs() < 1e-9, "{total} vs {expected}");
    }
}
