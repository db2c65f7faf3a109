use std::collections::BTreeSet;

use proptest::prelude::*;

use mada_core::batch::quantile;
use mada_core::dynamic::inflate;
use mada_core::fmm::{descend, distance_transform, solve, solve_labeled};
use mada_core::mission::static_margin;
use mada_core::{plan_offline, CellPos, GridMap, MissionConfig, VelocityField};

/// Bordered map with a few random wall blocks, 0.2 m cells.
fn arb_map() -> impl Strategy<Value = GridMap> {
    (14usize..34, 14usize..34, prop::collection::vec((0usize..100, 0usize..100, 1usize..4, 1usize..6), 0..5)).prop_map(
        |(w, h, blocks)| {
            let mut occ = vec![false; w * h];
            for r in 0..h {
                for c in 0..w {
                    occ[r * w + c] = r == 0 || c == 0 || r == h - 1 || c == w - 1;
                }
            }
            for (x, y, bw, bh) in blocks {
                let (x, y) = (1 + x % (w - 2), 1 + y % (h - 2));
                for r in y..(y + bh).min(h - 1) {
                    for c in x..(x + bw).min(w - 1) {
                        occ[r * w + c] = true;
                    }
                }
            }
            let text: String = (0..h)
                .map(|r| (0..w).map(|c| if occ[r * w + c] { '#' } else { '.' }).collect::<String>() + "\n")
                .collect();
            GridMap::parse(&text, 0.2).unwrap()
        },
    )
}

fn free_cells(map: &GridMap) -> Vec<CellPos> {
    (0..map.len()).filter(|&i| !map.occupancy()[i]).map(|i| map.pos(i)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn open_field_times_bracket_straight_line_distance(
        w in 5usize..40, h in 5usize..40, sc in 0usize..40, sr in 0usize..40, speed in 0.2f64..3.0,
    ) {
        let src = CellPos::new(sc % w, sr % h);
        let t = solve(&[src], &VelocityField::uniform(w, h, 0.5, speed)).unwrap();
        for r in 0..h {
            for c in 0..w {
                let d = 0.5 * ((c as f64 - src.col as f64).hypot(r as f64 - src.row as f64));
                let v = t.get(CellPos::new(c, r)) * speed;
                prop_assert!(v >= d - 1e-9, "({c},{r}): {v} < {d}");
                prop_assert!(v <= 1.09 * d + 1e-9, "({c},{r}): {v} vs {d}");
            }
        }
    }

    #[test]
    fn doubling_speed_halves_times(map in arb_map(), pick in any::<prop::sample::Index>()) {
        let free = free_cells(&map);
        let src = free[pick.index(free.len())];
        let slow = solve(&[src], &VelocityField::from_map(&map)).unwrap();
        let fast_speed = VelocityField::new(
            map.width(), map.height(), map.resolution(),
            VelocityField::from_map(&map).values().iter().map(|v| 2.0 * v).collect(),
        );
        let fast = solve(&[src], &fast_speed).unwrap();
        for (a, b) in slow.values().iter().zip(fast.values()) {
            if a.is_finite() {
                prop_assert!((a - 2.0 * b).abs() <= 1e-9 * a.max(1.0));
            } else {
                prop_assert!(!b.is_finite());
            }
        }
    }

    #[test]
    fn multi_source_field_is_the_pointwise_minimum(map in arb_map(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4)) {
        let free = free_cells(&map);
        let sources: Vec<CellPos> = picks.iter().map(|p| free[p.index(free.len())]).collect::<BTreeSet<_>>().into_iter().collect();
        let speed = VelocityField::from_map(&map);
        let joint = solve_labeled(&sources, &speed).unwrap();
        let singles: Vec<_> = sources.iter().map(|s| solve(&[*s], &speed).unwrap()).collect();
        for i in 0..map.len() {
            let best = singles.iter().map(|f| f.values()[i]).fold(f64::INFINITY, f64::min);
            let v = joint.field.values()[i];
            if !best.is_finite() {
                prop_assert!(!v.is_finite());
                continue;
            }
prop_assert!((v - best).abs() <= 1e-9, "cell {:?}: {} vs {}", map.pos(i), v, best);
        }
    }

    #[test]
    fn descent_strictly_decreases_to_the_source(map in arb_map(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let free = free_cells(&map);
        let (src, start) = (free[a.index(free.len())], free[b.index(free.len())]);
        let t = solve(&[src], &VelocityField::from_map(&map)).unwrap();
        prop_assume!(t.is_reached(start));
        let path = descend(&t, start).unwrap();
        prop_assert_eq!(path[0], start);
        prop_assert_eq!(*path.last().unwrap(), src);
        for pair in path.windows(2) {
            prop_assert!(t.get(pair[1]) < t.get(pair[0]));
            prop_assert!(pair[0].col.abs_diff(pair[1].col) <= 1 && pair[0].row.abs_diff(pair[1].row) <= 1);
            prop_assert!(map.is_free(pair[1]));
        }
    }

    #[test]
    fn clearance_is_zero_on_walls_and_one_lipschitz(map in arb_map()) {
        let d = distance_transform(&map);
        let (w, h, res) = (map.width(), map.height(), map.resolution());
        for r in 0..h {
            for c in 0..w {
                let p = CellPos::new(c, r);
                if !map.is_free(p) {
                    prop_assert_eq!(d.get(p), 0.0);
                } else {
                    prop_assert!(d.get(p) >= res - 1e-9);
                }
                if c + 1 < w {
                    prop_assert!((d.get(p) - d.get(CellPos::new(c + 1, r))).abs() <= res * 1.0001);
                }
                if r + 1 < h {
                    prop_assert!((d.get(p) - d.get(CellPos::new(c, r + 1))).abs() <= res * 1.0001);
                }
            }
        }
    }

    #[test]
    fn partitions_are_disjoint_and_consistent(map in arb_map()) {
        let cfg = MissionConfig::default();
        let plan = plan_offline(&map, static_margin(cfg.robot_radius, map.resolution()), cfg.v_max);
        prop_assume!(plan.is_ok());
        let plan = plan.unwrap();
        let parts = &plan.partitioning;
        let mut owner = vec![None; map.len()];
        for (k, p) in parts.partitions.iter().enumerate() {
            prop_assert_eq!(p.id, k);
            prop_assert!(p.members.contains(&p.seed));
            prop_assert!(p.d_min <= p.d_max);
            for &c in &p.members {
                prop_assert!(map.is_free(c));
                let i = map.index(c);
                prop_assert!(owner[i].is_none(), "cell {:?} in two partitions", c);
                owner[i] = Some(k);
                prop_assert_eq!(parts.label(c), Some(k));
            }
        }
        for (i, o) in owner.iter().enumerate() {
            prop_assert_eq!(parts.label_at(i), *o);
        }
        let g = &plan.graph;
        prop_assert_eq!(g.vertex_count, parts.len());
        for e in &g.edges {
            prop_assert!(e.a != e.b && e.a < parts.len() && e.b < parts.len());
            prop_assert!(e.cost.is_finite() && e.cost > 0.0);
            prop_assert!(g.neighbors(e.a).iter().any(|&(n, _)| n == e.b));
            prop_assert!(g.neighbors(e.b).iter().any(|&(n, _)| n == e.a));
        }
    }

    #[test]
    fn inflation_keeps_the_original_cells(map in arb_map(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..12), safety in 0.0f64..1.0) {
        let free = free_cells(&map);
        let cells: Vec<CellPos> = picks.iter().map(|p| free[p.index(free.len())]).collect();
        let grown: BTreeSet<CellPos> = inflate(&cells, &map, safety).into_iter().collect();
        for c in &cells {
            prop_assert!(grown.contains(c));
        }
        for g in &grown {
            let near = cells.iter().any(|c| {
                let d = (g.col as f64 - c.col as f64).hypot(g.row as f64 - c.row as f64) * map.resolution();
                d <= safety + 1e-9
            });
            prop_assert!(near, "{:?} is farther than {} m from every source", g, safety);
        }
    }

    #[test]
    fn quantiles_are_ordered_and_bounded(mut xs in prop::collection::vec(-1e3f64..1e3, 1..40), q in 0.0f64..=1.0) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let v = quantile(&xs, q);
        prop_assert!(v >= lo && v <= hi);
        prop_assert!(quantile(&xs, 0.25) <= quantile(&xs, 0.5) && quantile(&xs, 0.5) <= quantile(&xs, 0.75));
        prop_assert_eq!(quantile(&xs, 0.0), lo);
        prop_assert_eq!(quantile(&xs, 1.0), hi);
    }

    #[test]
    fn config_json_round_trips(o_th in 0.0f64..=1.0, safety in 0.0f64..4.0, n in 0usize..60, proj in any::<bool>()) {
        let cfg = MissionConfig { o_th, safety_factor: safety, n_obstacles: n, projections: proj, ..MissionConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(MissionConfig::from_json(&text).unwrap(), cfg);
    }
}
