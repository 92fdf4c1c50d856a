use proptest::prelude::*;
use radhars_core::assignment::solve_assignment;
use radhars_core::config::TrackingConfig;
use radhars_core::tracking::{iou_cost, parse_detections, predict_track, transition};
use radhars_core::{BBox, TrackSet, TrackState, TrackStatus};

/// Minimum over all injective row->column maps (rows <= cols) or the
/// transpose, summed in row order.
fn brute_force(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost[0].len();
    fn rec(cost: &[Vec<f64>], r: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, transpose: bool) {
        let (n_rows, n_cols) = if transpose {
            (cost[0].len(), cost.len())
        } else {
            (cost.len(), cost[0].len())
        };
        if r == n_rows {
            *best = best.min(acc);
            return;
        }
        for c in 0..n_cols {
            if !used[c] {
                used[c] = true;
                let v = if transpose { cost[c][r] } else { cost[r][c] };
                rec(cost, r + 1, used, acc + v, best, transpose);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    if rows <= cols {
        rec(cost, 0, &mut vec![false; cols], 0.0, &mut best, false);
    } else {
        rec(cost, 0, &mut vec![false; rows], 0.0, &mut best, true);
    }
    best
}

fn matrix(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u32..100, c), r))
        .prop_map(|m| m.into_iter().map(|row| row.into_iter().map(f64::from).collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn hungarian_matches_brute_force(cost in matrix(6)) {
        let res = solve_assignment(&cost);
        prop_assert_eq!(res.total_cost, brute_force(&cost));
        let mut rows: Vec<_> = res.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<_> = res.pairs.iter().map(|p| p.1).collect();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(rows.len(), res.pairs.len());
        prop_assert_eq!(cols.len(), res.pairs.len());
        prop_assert_eq!(res.pairs.len(), cost.len().min(cost[0].len()));
    }

    #[test]
    fn real_valued_costs_match(cost in (1usize..=6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n))) {
        let res = solve_assignment(&cost);
        prop_assert!((res.total_cost - brute_force(&cost)).abs() < 1e-12);
    }

    #[test]
    fn iou_cost_bounds_and_symmetry(
        a in (-50.0f64..50.0, -50.0f64..50.0, 0.5f64..40.0, 0.5f64..40.0),
        b in (-50.0f64..50.0, -50.0f64..50.0, 0.5f64..40.0, 0.5f64..40.0),
    ) {
        let a = BBox::new(a.0, a.1, a.2, a.3);
        let b = BBox::new(b.0, b.1, b.2, b.3);
        let c = iou_cost(&a, &b);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, iou_cost(&b, &a));
        prop_assert_eq!(iou_cost(&a, &a), 0.0);
    }

    #[test]
    fn transition_is_linear(
        s1 in prop::array::uniform8(-10.0f64..10.0),
        s2 in prop::array::uniform8(-10.0f64..10.0),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        dt in 0.01f64..2.0,
    ) {
        let mix: [f64; 8] = std::array::from_fn(|k| a * s1[k] + b * s2[k]);
        let lhs = transition(&mix, dt);
        let p1 = transition(&s1, dt);
        let p2 = transition(&s2, dt);
        for k in 0..8 {
            prop_assert!((lhs[k] - (a * p1[k] + b * p2[k])).abs() < 1e-9);
        }
    }
}

#[test]
fn iou_matches_rasterization() {
    let a = BBox::new(1.0, 1.0, 2.0, 2.0);
    let b = BBox::new(2.0, 2.0, 2.0, 2.0);
    // count cells of a 1/200 grid covering [-1, 4]^2
    let step = 1.0 / 200.0;
    let inside = |bx: &BBox, x: f64, y: f64| (x - bx.cx).abs() < bx.w / 2.0 && (y - bx.cy).abs() < bx.h / 2.0;
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..1000 {
        for j in 0..1000 {
            let x = -1.0 + (i as f64 + 0.5) * step;
            let y = -1.0 + (j as f64 + 0.5) * step;
            let (ia, ib) = (inside(&a, x, y), inside(&b, x, y));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    let oracle = 1.0 - inter as f64 / union as f64;
    assert!((iou_cost(&a, &b) - oracle).abs() < 1e-3);
    assert!((iou_cost(&a, &b) - 6.0 / 7.0).abs() < 1e-12);
    assert_eq!(iou_cost(&BBox::new(0.0, 0.0, 2.0, 2.0), &BBox::new(100.0, 0.0, 2.0, 2.0)), 1.0);
}

fn track(state: [f64; 8]) -> TrackState {
    TrackState {
        state,
        id: 1,
        miss_count: 0,
        hit_count: 3,
        status: TrackStatus::Confirmed,
    }
}

#[test]
fn prediction_examples() {
    let p = predict_track(&track([10.0, 20.0, 4.0, 6.0, 1.0, -2.0, 0.0, 0.0]), 1.0);
    assert_eq!(p.state, [11.0, 18.0, 4.0, 6.0, 1.0, -2.0, 0.0, 0.0]);
    let p = predict_track(&track([5.0, 5.0, 2.0, 2.0, 0.0, 0.0, -4.0, 0.0]), 1.0);
    // 8x8 product gives w = -2 before clamping
    assert_eq!(transition(&[5.0, 5.0, 2.0, 2.0, 0.0, 0.0, -4.0, 0.0], 1.0)[2], -2.0);
    assert_eq!(p.state[2], 1.0);
    let p = predict_track(&track([3.0, 4.0, 5.0, 6.0, 0.0, 0.0, 0.0, 0.0]), 7.5);
    assert_eq!(&p.state[..2], &[3.0, 4.0]);
}

#[test]
fn assignment_examples() {
    let r = solve_assignment(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
    assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
    assert_eq!(r.total_cost, 4.0);
    let r = solve_assignment(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]);
    assert_eq!(r.pairs, vec![(0, 1), (1, 0), (2, 2)]);
    assert_eq!(r.total_cost, 5.0);
    let z = vec![vec![0.0, 9.0, 9.0], vec![9.0, 0.0, 9.0], vec![9.0, 9.0, 0.0]];
    let r = solve_assignment(&z);
    assert_eq!(r.pairs, vec![(0, 0), (1, 1), (2, 2)]);
    assert_eq!(r.total_cost, 0.0);
}

fn b(cx: f64, cy: f64) -> BBox {
    BBox::new(cx, cy, 10.0, 20.0)
}

#[test]
fn confirmed_track_update() {
    let mut ts = TrackSet::default();
    ts.step(&[b(10.0, 10.0)], 1.0);
    ts.step(&[b(10.0, 10.0)], 1.0);
    ts.step(&[b(10.0, 10.0)], 1.0);
    assert_eq!(ts.tracks[0].status, TrackStatus::Confirmed);
    ts.step(&[b(11.0, 10.0)], 1.0);
    let t = &ts.tracks[0];
    assert_eq!(&t.state[..2], &[11.0, 10.0]);
    assert_eq!(&t.state[4..6], &[1.0, 0.0]);
    assert_eq!(t.miss_count, 0);
}

#[test]
fn lifecycle_confirm_then_delete() {
    let mut ts = TrackSet::new(TrackingConfig::default());
    let statuses: Vec<TrackStatus> = (0..3)
        .map(|k| {
            ts.step(&[b(10.0 + k as f64, 10.0)], 1.0);
            ts.tracks[0].status
        })
        .collect();
    assert_eq!(statuses, vec![TrackStatus::Tentative, TrackStatus::Tentative, TrackStatus::Confirmed]);
    for k in 0..6 {
        let r = ts.step(&[], 1.0);
        if k < 5 {
            assert_eq!(ts.tracks[0].status, TrackStatus::Confirmed);
        } else {
            assert_eq!(r.deleted, vec![1]);
            assert_eq!(ts.tracks[0].status, TrackStatus::Deleted);
        }
    }
    ts.step(&[], 1.0);
    assert!(ts.tracks.is_empty());
}

#[test]
fn spawn_has_zero_velocity_and_fresh_ids() {
    let mut ts = TrackSet::default();
    let r = ts.step(&[b(0.0, 0.0)], 1.0);
    assert_eq!(r.spawned, vec![1]);
    assert_eq!(ts.tracks[0].status, TrackStatus::Tentative);
    assert_eq!(&ts.tracks[0].state[4..], &[0.0; 4]);
    // far away detection: old tentative track dies, new one gets id 2
    let r = ts.step(&[b(500.0, 500.0)], 1.0);
    assert_eq!(r.spawned, vec![2]);
    assert_eq!(r.deleted, vec![1]);
}

#[test]
fn crossing_targets_keep_ids() {
    // small box moving right, large box moving left on the same row
    let mut ts = TrackSet::default();
    let mut ids_small = Vec::new();
    for k in 0..12 {
        let x = k as f64 * 4.0;
        let small = BBox::new(x, 50.0, 10.0, 10.0);
        let large = BBox::new(44.0 - x, 50.0, 30.0, 40.0);
        ts.step(&[small, large], 1.0);
        let id = ts
            .live()
            .find(|t| (t.state[2] - 10.0).abs() < 1e-9 && (t.state[0] - x).abs() < 1e-9)
            .map(|t| t.id);
        ids_small.push(id);
    }
    assert!(ids_small.iter().all(|&i| i == Some(1)), "{ids_small:?}");
}

#[test]
fn detection_parsing() {
    let f = parse_detections("# frame cx cy w h\n0 1 2 3 4\n0, 5, 6, 7, 8\n2\n").unwrap();
    assert_eq!(f.len(), 3);
    assert_eq!(f[0].len(), 2);
    assert!(f[1].is_empty() && f[2].is_empty());
    let e = parse_detections("0 1 2 3 4\n1 1 2 x 4\n").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
}
