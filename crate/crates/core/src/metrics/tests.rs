use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::voxel::{BlockGrid, BlockId, Coord};

fn add(x: i32, y: i32, z: i32, id: u16) -> (Coord, Change) {
    (Coord::new(x, y, z), Change::Add(BlockId::new(id).unwrap()))
}

fn delta(entries: &[(Coord, Change)]) -> GridDelta {
    let mut d = GridDelta::new();
    for &(c, ch) in entries {
        d.insert(c, ch);
    }
    d
}

/// Exhaustive search over every shift in the window with plain set intersection.
fn oracle(m: &GridDelta, t: &GridDelta, radius: i32) -> (Shift, usize) {
    let target: BTreeSet<(Coord, Change)> = t.iter().collect();
    let mut best: Option<(usize, i32, i32, i32)> = None;
    for dx in -radius..=radius {
        for dz in -radius..=radius {
            let n = m
                .iter()
                .filter(|(c, ch)| target.contains(&(c.shifted(dx, 0, dz), *ch)))
                .count();
            let cand = (n, dx.abs() + dz.abs(), dx, dz);
            best = match best {
                None => Some(cand),
                Some(b) => {
                    let better = cand.0 > b.0
                        || (cand.0 == b.0 && (cand.1, cand.2, cand.3) < (b.1, b.2, b.3));
                    Some(if better { cand } else { b })
                }
            };
        }
    }
    let (n, _, dx, dz) = best.unwrap();
    if n == 0 {
        ((0, 0), 0)
    } else {
        ((dx, dz), n)
    }
}

fn oracle_f1(m: &GridDelta, t: &GridDelta, radius: i32) -> f64 {
    let (_, i) = oracle(m, t, radius);
    if m.is_empty() || t.is_empty() || i == 0 {
        return 0.0;
    }
    let p = i as f64 / t.len() as f64;
    let r = i as f64 / m.len() as f64;
    2.0 * p * r / (p + r)
}

fn random_grid(rng: &mut ChaCha8Rng, density: f64) -> BlockGrid {
    let mut g = BlockGrid::new();
    for x in -2..=2 {
        for y in 0..3 {
            for z in -2..=2 {
                if rng.gen_bool(density) {
                    let id = [50, 57][rng.gen_range(0..2)];
                    g.set_raw(Coord::new(x, y, z), id).unwrap();
                }
            }
        }
    }
    g
}

#[test]
fn identity_and_idle() {
    let t = delta(&[add(0, 0, 0, 50), add(1, 0, 0, 50), add(1, 1, 0, 57)]);
    let r = grid_f1_delta(&t, &t, ShiftWindow::default());
    assert_eq!((r.f1, r.precision, r.recall), (1.0, 1.0, 1.0));
    assert_eq!(r.best_shift, (0, 0));
    assert_eq!(r.intersection, 3);

    let idle = grid_f1(&BlockGrid::new(), &BlockGrid::new(), &t, ShiftWindow::default());
    assert_eq!((idle.f1, idle.precision, idle.recall), (0.0, 0.0, 0.0));
}

#[test]
fn shifted_pair() {
    let t = delta(&[add(0, 0, 0, 50), add(1, 0, 0, 50)]);
    let m = delta(&[add(2, 0, 0, 50), add(3, 0, 0, 50)]);
    assert_eq!(argmax_intersection(&m, &t, ShiftWindow::default()), ((-2, 0), 2));
    assert_eq!(oracle(&m, &t, 10), ((-2, 0), 2));
    assert_eq!(argmax_intersection(&m, &t, ShiftWindow::NONE), ((0, 0), 0));
}

#[test]
fn color_mismatch_does_not_count() {
    let m = delta(&[add(0, 0, 0, 50)]);
    let t = delta(&[add(0, 0, 0, 57)]);
    assert_eq!(argmax_intersection(&m, &t, ShiftWindow::default()).1, 0);
}

#[test]
fn remove_never_matches_add() {
    let b = BlockId::new(50).unwrap();
    let m = delta(&[(Coord::new(0, 0, 0), Change::Remove(b))]);
    let t = delta(&[(Coord::new(0, 0, 0), Change::Add(b))]);
    assert_eq!(grid_f1_delta(&m, &t, ShiftWindow::default()).f1, 0.0);
}

#[test]
fn spurious_adds_halve_recall() {
    let t = delta(&[add(0, 0, 0, 50), add(1, 0, 0, 50), add(2, 0, 0, 50), add(3, 0, 0, 50)]);
    let mut m = t.clone();
    for z in 2..6 {
        m.insert(Coord::new(-4, 0, z), Change::Add(BlockId::new(57).unwrap()));
    }
    let r = grid_f1_delta(&m, &t, ShiftWindow::default());
    assert_eq!(r.precision, 1.0);
    assert_eq!(r.recall, 0.5);
    assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    assert!((oracle_f1(&m, &t, 10) - r.f1).abs() < 1e-12);
}

#[test]
fn tie_prefers_small_shift() {
    // Single target block, two candidate builder blocks equally far.
    let t = delta(&[add(0, 0, 0, 50)]);
    let m = delta(&[add(1, 0, 0, 50), add(-1, 0, 0, 50)]);
    // Shifts (-1,0) and (1,0) both match one; lexicographic picks (-1,0).
    assert_eq!(argmax_intersection(&m, &t, ShiftWindow::default()), ((-1, 0), 1));
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..150 {
        let g0 = random_grid(&mut rng, 0.15);
        let g = random_grid(&mut rng, 0.25);
        let target = random_grid(&mut rng, 0.25);
        let t = diff(&g0, &target);
        let m = diff(&g0, &g);
        let fast = grid_f1(&g, &g0, &t, ShiftWindow::default());
        assert_eq!(
            (fast.best_shift, fast.intersection),
            oracle(&m, &t, 10)
        );
        assert!((fast.f1 - oracle_f1(&m, &t, 10)).abs() < 1e-9);
    }
}

#[test]
fn weighted() {
    assert_eq!(weighted_average(&[(0.5, 3)]), Ok(0.5));
    assert_eq!(weighted_average(&[(1.0, 1), (0.0, 3)]), Ok(0.25));
    assert_eq!(weighted_average(&[]), Err(MetricsError::EmptyInput));
    assert_eq!(weighted_average(&[(1.0, 0)]), Err(MetricsError::BadWeight(0)));
    let many: Vec<_> = (0..192).map(|i| ((i % 2) as f64, 4)).collect();
    assert_eq!(weighted_average(&many), Ok(0.5));
}

#[test]
fn leaderboard() {
    let r = |f1: f64, n: usize, steps: u64| ScoreReport {
        f1,
        precision: f1,
        recall: f1,
        target_size: n,
        episode_length: steps,
        ..ScoreReport::default()
    };
    let row = leaderboard_row("x", &[r(1.0, 1, 10), r(0.0, 3, 30)], 1).unwrap();
    assert_eq!(row.f1, 0.25);
    assert_eq!(row.episode_length, 20.0);
    let v = serde_json::to_value(&row).unwrap();
    for k in ["agent", "f1", "precision", "recall", "episodeLength", "submissions"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}

fn outcome(p: Clarity, a: Clarity) -> BinaryOutcome {
    BinaryOutcome {
        predicted: p,
        actual: a,
    }
}

/// Per-class F1 from an explicit confusion matrix.
fn confusion_macro(outcomes: &[BinaryOutcome]) -> f64 {
    let mut m = [[0usize; 2]; 2];
    let idx = |c: Clarity| (c == Clarity::Ambiguous) as usize;
    for o in outcomes {
        m[idx(o.actual)][idx(o.predicted)] += 1;
    }
    let f = |k: usize| {
        let tp = m[k][k] as f64;
        let predicted = (m[0][k] + m[1][k]) as f64;
        let actual = (m[k][0] + m[k][1]) as f64;
        if tp == 0.0 {
            0.0
        } else {
            let p = tp / predicted;
            let r = tp / actual;
            2.0 * p * r / (p + r)
        }
    };
    (f(0) + f(1)) / 2.0
}

#[test]
fn macro_f1_cases() {
    use Clarity::*;
    let perfect = [outcome(Clear, Clear), outcome(Ambiguous, Ambiguous)];
    assert_eq!(macro_f1(&perfect), Ok(1.0));
    let all_clear: Vec<_> = [Clear, Ambiguous, Clear, Ambiguous]
        .iter()
        .map(|a| outcome(Clear, *a))
        .collect();
    let v = macro_f1(&all_clear).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-12);
    assert!((v - confusion_macro(&all_clear)).abs() < 1e-12);
    assert_eq!(macro_f1(&[]), Err(MetricsError::EmptyInput));
    // Only one class anywhere: the absent one scores 0.
    assert_eq!(macro_f1(&[outcome(Clear, Clear)]), Ok(0.5));
}

#[test]
fn mrr_cases() {
    let pool = |rank: usize| RankedPool {
        candidates: (1..=4).map(|i| format!("q{i}")).collect(),
        relevant: format!("q{rank}"),
    };
    assert_eq!(mrr(&[pool(1), pool(1)]), Ok(1.0));
    assert_eq!(mrr(&[pool(2), pool(3)]), Ok(5.0 / 12.0));
    assert_eq!(mrr(&[pool(1), pool(9)]), Err(MetricsError::RelevantMissing(1)));
    assert_eq!(mrr(&[]), Err(MetricsError::EmptyInput));
}

#[test]
fn percent_formatting() {
    assert_eq!(format_percent(17, 30), "56.67");
    assert_eq!(format_percent(13, 32), "40.62");
    assert_eq!(format_percent(19, 32), "59.38");
    assert_eq!(format_percent(6, 15), "40.00");
    assert_eq!(format_percent(1, 8), "12.50");
    assert_eq!(format_percent(0, 0), "0.00");
    assert_eq!(format_percent(1, 1), "100.00");
}

fn games(a: &str, b: &str, a_wins: usize, b_wins: usize, next: &mut usize) -> Vec<GameOutcome> {
    let mut out = Vec::new();
    for i in 0..a_wins + b_wins {
        *next += 1;
        out.push(GameOutcome {
            hit_id: format!("hit-{next}"),
            agent_a: a.into(),
            agent_b: b.into(),
            task_id: "task".into(),
            winner: if i < a_wins { Winner::AgentA } else { Winner::AgentB },
        });
    }
    out
}

#[test]
fn table_three_reconstruction() {
    let mut n = 0;
    let mut log = games("B", "MHB", 7, 6, &mut n);
    log.extend(games("B", "P", 10, 7, &mut n));
    log.extend(games("MHB", "P", 9, 6, &mut n));
    assert_eq!(log.len(), 45);
    let t = tally_human_eval(&log);
    let row = |id: &str| t.iter().find(|r| r.agent == id).unwrap();
    let b = row("B");
    assert_eq!((b.games, b.wins, b.losses), (30, 17, 13));
    assert_eq!((b.win_percent().as_str(), b.loss_percent().as_str()), ("56.67", "43.33"));
    let mhb = row("MHB");
    assert_eq!((mhb.games, mhb.wins, mhb.losses), (28, 15, 13));
    assert_eq!((mhb.win_percent().as_str(), mhb.loss_percent().as_str()), ("53.57", "46.43"));
    let p = row("P");
    assert_eq!((p.games, p.wins, p.losses), (32, 13, 19));
    assert_eq!((p.win_percent().as_str(), p.loss_percent().as_str()), ("40.62", "59.38"));
    let against: Vec<_> = b.against(&b.wins_against).collect();
    assert_eq!(
        against,
        [("MHB", 7, "53.85".to_string()), ("P", 10, "58.82".to_string())]
    );
    let text = render_tally(&t);
    assert!(text.contains("17 (56.67%)"));
    assert!(text.contains("MHB: 6 (40.00%)"));
}

#[test]
fn single_game_and_empty() {
    let mut n = 0;
    let t = tally_human_eval(&games("A", "B", 1, 0, &mut n));
    assert_eq!((t[0].agent.as_str(), t[0].games, t[0].wins, t[0].losses), ("A", 1, 1, 0));
    assert_eq!((t[1].agent.as_str(), t[1].games, t[1].wins, t[1].losses), ("B", 1, 0, 1));
    assert!(tally_human_eval(&[]).is_empty());
}

fn arb_delta() -> impl Strategy<Value = GridDelta> {
    prop::collection::vec(
        ((-2i32..=2, 0i32..3, -2i32..=2), prop::bool::ANY, prop::sample::select(vec![50u16, 57])),
        0..20,
    )
    .prop_map(|cells| {
        let mut d = GridDelta::new();
        for ((x, y, z), is_add, id) in cells {
            let b = BlockId::new(id).unwrap();
            d.insert(Coord::new(x, y, z), if is_add { Change::Add(b) } else { Change::Remove(b) });
        }
        d
    })
}

proptest! {
    #[test]
    fn argmax_equals_brute_force(m in arb_delta(), t in arb_delta(), radius in 0i32..=10) {
        let window = ShiftWindow { radius };
        prop_assert_eq!(argmax_intersection(&m, &t, window), oracle(&m, &t, radius));
    }

    #[test]
    fn score_bounds(m in arb_delta(), t in arb_delta()) {
        let r = grid_f1_delta(&m, &t, ShiftWindow::default());
        for v in [r.f1, r.precision, r.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-12);
        prop_assert!(r.intersection <= m.len().min(t.len()));
    }

    #[test]
    fn translation_is_compensated(m in arb_delta(), t in arb_delta(), dx in -5i32..=5, dz in -5i32..=5) {
        let moved: GridDelta = {
            let mut d = GridDelta::new();
            for (c, ch) in m.iter() {
                d.insert(c.shifted(dx, 0, dz), ch);
            }
            d
        };
        let a = grid_f1_delta(&m, &t, ShiftWindow::default());
        let b = grid_f1_delta(&moved, &t, ShiftWindow { radius: 15 });
        prop_assert!((a.f1 - b.f1).abs() < 1e-9);
        let strict = grid_f1_delta(&moved, &t, ShiftWindow::NONE);
        prop_assert!(strict.f1 <= b.f1 + 1e-12);
    }

    #[test]
    fn mrr_and_macro_f1_ignore_order(ranks in prop::collection::vec(1usize..6, 1..10),
                                      labels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..20),
                                      seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pools: Vec<_> = ranks.iter().map(|r| RankedPool {
            candidates: (1..=5).map(|i| i.to_string()).collect(),
            relevant: r.to_string(),
        }).collect();
        let before = mrr(&pools).unwrap();
        pools.shuffle(&mut rng);
        prop_assert!((mrr(&pools).unwrap() - before).abs() < 1e-12);

        let c = |b: bool| if b { Clarity::Clear } else { Clarity::Ambiguous };
        let mut outs: Vec<_> = labels.iter().map(|(p, a)| outcome(c(*p), c(*a))).collect();
        let before = macro_f1(&outs).unwrap();
        prop_assert!((before - confusion_macro(&outs)).abs() < 1e-12);
        outs.shuffle(&mut rng);
        prop_assert!((macro_f1(&outs).unwrap() - before).abs() < 1e-12);
    }

    #[test]
    fn tally_totals_balance(pairs in prop::collection::vec((0usize..4, 0usize..4, any::<bool>()), 0..40)) {
        let names = ["A", "B", "C", "D"];
        let log: Vec<_> = pairs.iter().filter(|(a, b, _)| a != b).enumerate().map(|(i, (a, b, w))| GameOutcome {
            hit_id: i.to_string(),
            agent_a: names[*a].into(),
            agent_b: names[*b].into(),
            task_id: "t".into(),
            winner: if *w { Winner::AgentA } else { Winner::AgentB },
        }).collect();
        let t = tally_human_eval(&log);
        prop_assert_eq!(t.iter().map(|r| r.wins).sum::<usize>(), log.len());
        prop_assert_eq!(t.iter().map(|r| r.losses).sum::<usize>(), log.len());
        prop_assert_eq!(t.iter().map(|r| r.games).sum::<usize>(), 2 * log.len());
    }
}
