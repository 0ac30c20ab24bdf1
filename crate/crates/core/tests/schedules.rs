use std::sync::Mutex;

use proptest::prelude::*;
use tilesched::executor::{
    execute_merge_path_segments, execute_tile_major, imbalance, ExecutorConfig,
};
use tilesched::schedule::{
    merge_path_items_per_lane, merge_path_partition, merge_path_search, thread_mapped_tiles,
    MergePathCoord, ScheduleKind,
};
use tilesched::work::{TileCounts, TileSet};

fn tile_counts() -> impl Strategy<Value = TileCounts> {
    prop_oneof![
        1 => Just(vec![]),
        1 => (0usize..50).prop_map(|n| vec![n]),
        6 => prop::collection::vec(prop_oneof![3 => Just(0usize), 7 => 0usize..20], 0..200),
    ]
    .prop_map(|c| TileCounts::from_counts(&c))
}

/// Walks the staircase one step at a time, taking the tile boundary first
/// whenever the current atom index has reached it.
fn walk(ts: &TileCounts) -> Vec<MergePathCoord> {
    let (mut tile, mut atom) = (0, 0);
    let mut path = vec![MergePathCoord { tile, atom }];
    while tile < ts.num_tiles() || atom < ts.num_atoms() {
        if tile < ts.num_tiles() && ts.atom_offset(tile + 1) <= atom {
            tile += 1;
        } else {
            atom += 1;
        }
        path.push(MergePathCoord { tile, atom });
    }
    path
}

fn all_schedules() -> Vec<ScheduleKind> {
    vec![
        ScheduleKind::ThreadMapped,
        ScheduleKind::MergePath,
        ScheduleKind::group_mapped(1),
        ScheduleKind::group_mapped(4),
        ScheduleKind::warp_mapped(),
        ScheduleKind::group_mapped(3).with_tiles_per_block(5),
    ]
}

fn processed_pairs(ts: &TileCounts, cfg: &ExecutorConfig) -> Vec<(usize, usize)> {
    let seen = Mutex::new(Vec::new());
    match cfg.schedule {
        ScheduleKind::MergePath => execute_merge_path_segments(cfg, ts, |_, seg| {
            seen.lock()
                .unwrap()
                .extend(seg.atoms.map(|a| (seg.tile, a)));
        })
        .unwrap(),
        _ => execute_tile_major(cfg, ts, |_, tile, atoms| {
            seen.lock().unwrap().extend(atoms.map(|a| (tile, a)));
        })
        .unwrap(),
    }
    let mut v = seen.into_inner().unwrap();
    v.sort_unstable();
    v
}

proptest! {
    #[test]
    fn search_follows_the_walk(ts in tile_counts()) {
        for (d, expected) in walk(&ts).into_iter().enumerate() {
            prop_assert_eq!(merge_path_search(d, &ts).unwrap(), expected);
        }
    }

    #[test]
    fn slices_are_balanced(ts in tile_counts(), lanes in 1usize..=64) {
        let per_lane = merge_path_items_per_lane(&ts, lanes);
        let total = ts.num_tiles() + ts.num_atoms();
        prop_assert_eq!(per_lane, total.div_ceil(lanes));
        let coords = merge_path_partition(&ts, lanes).unwrap();
        prop_assert_eq!(coords.len(), lanes + 1);
        prop_assert_eq!(coords[lanes].diagonal(), total);
        for w in coords.windows(2) {
            prop_assert!(w[1].diagonal() - w[0].diagonal() <= per_lane);
        }
    }

    #[test]
    fn every_schedule_covers_each_atom_once(ts in tile_counts(), lanes in 1usize..=70) {
        let expected: Vec<_> = (0..ts.num_tiles())
            .flat_map(|t| ts.tile_atoms(t).map(move |a| (t, a)))
            .collect();
        for s in all_schedules() {
            let cfg = ExecutorConfig::new(s, 3).with_lanes(lanes);
            prop_assert_eq!(&processed_pairs(&ts, &cfg), &expected, "{}", s);
        }
    }

    #[test]
    fn imbalance_accounts_for_every_atom(ts in tile_counts(), lanes in 1usize..=64) {
        for s in all_schedules() {
            let r = imbalance(&ts, &ExecutorConfig::new(s, 1).with_lanes(lanes)).unwrap();
            prop_assert_eq!(r.per_lane_atoms.len(), lanes);
            prop_assert_eq!(r.per_lane_atoms.iter().sum::<usize>(), ts.num_atoms());
            prop_assert!(r.imbalance_factor >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn single_lane_groups_follow_thread_mapping(ts in tile_counts(), lanes in 1usize..=40) {
        let cfg = ExecutorConfig::new(ScheduleKind::group_mapped(1).with_tiles_per_block(1), 2)
            .with_lanes(lanes);
        let got = Mutex::new(Vec::new());
        execute_tile_major(&cfg, &ts, |lane, tile, _| got.lock().unwrap().push((lane, tile))).unwrap();
        let mut got = got.into_inner().unwrap();
        got.sort_unstable();
        got.dedup();
        let mut want: Vec<_> = (0..lanes)
            .flat_map(|lane| {
                thread_mapped_tiles(&ts, lane, lanes)
                    .unwrap()
                    .filter(|&t| ts.atoms_in_tile(t) > 0)
                    .map(move |t| (lane, t))
            })
            .collect();
        want.sort_unstable();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn one_giant_row() {
    let ts = TileCounts::from_counts(&[10_000]);
    let tm = imbalance(
        &ts,
        &ExecutorConfig::new(ScheduleKind::ThreadMapped, 1).with_lanes(64),
    )
    .unwrap();
    assert_eq!(tm.imbalance_factor, 64.0);
    let mp = imbalance(
        &ts,
        &ExecutorConfig::new(ScheduleKind::MergePath, 1).with_lanes(64),
    )
    .unwrap();
    assert!(mp.imbalance_factor < 1.01, "{}", mp.imbalance_factor);
}
