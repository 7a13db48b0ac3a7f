//! Property tests over random grids, verdict matrices and DSL trees.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use verisynth::evaluator::{consistency_of_cases, Case, EvalConfig};
use verisynth::evolve::random_tree;
use verisynth::strategy::Shape;
use verisynth::{binarize, pass_counts, BoolMatrix, Builtin, PassMatrix, Verdict};
use verisynth::Strategy as Dsl;

fn grid(max: usize) -> impl Strategy<Value = BoolMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| {
        prop::collection::vec(any::<bool>(), m * n).prop_map(move |data| BoolMatrix::new(m, n, data))
    })
}

fn shuffled(len: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..len).collect::<Vec<_>>()).prop_shuffle()
}

fn grid_with_perms(max: usize) -> impl Strategy<Value = (BoolMatrix, Vec<usize>, Vec<usize>)> {
    grid(max).prop_flat_map(|g| {
        let (m, n) = (g.rows(), g.cols());
        (Just(g), shuffled(m), shuffled(n))
    })
}

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Pass), Just(Verdict::Fail), Just(Verdict::Error), Just(Verdict::Timeout)]
}

fn verdict_matrix() -> impl Strategy<Value = PassMatrix> {
    (1..=5usize, 1..=5usize).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::collection::vec(verdict(), n), m)
            .prop_map(|rows| PassMatrix::from_verdicts("p", &rows).unwrap())
    })
}

fn case(min_rows: usize) -> impl Strategy<Value = Case> {
    (min_rows..=8usize, 1..=6usize).prop_flat_map(|(m, n)| {
        (prop::collection::vec(any::<bool>(), m * n), prop::collection::vec(any::<bool>(), m))
            .prop_map(move |(data, annotated)| Case::new("c", BoolMatrix::new(m, n, data), annotated))
    })
}

fn random_strategy(seed: u64, depth: usize) -> Dsl {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sol = random_tree(Shape::Row, depth, &mut rng);
    let test = random_tree(Shape::Col, depth, &mut rng);
    Dsl::new("random", sol, test, None, serde_json::Value::Null).unwrap()
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn row_and_column_permutations_permute_scores((g, rp, cp) in grid_with_perms(6)) {
        for b in Builtin::ALL {
            let s = b.strategy();
            let base = s.score_grid(&g).unwrap();

            let rows = s.score_grid(&g.permute_rows(&rp)).unwrap();
            for (i, &src) in rp.iter().enumerate() {
                prop_assert!(same(rows.solution_scores[i], base.solution_scores[src]), "{} rows", b.name());
            }
            for (x, y) in rows.test_scores.iter().zip(&base.test_scores) {
                prop_assert!(same(*x, *y), "{} rows leave tests", b.name());
            }

            let cols = s.score_grid(&g.permute_cols(&cp)).unwrap();
            for (j, &src) in cp.iter().enumerate() {
                prop_assert!(same(cols.test_scores[j], base.test_scores[src]), "{} cols", b.name());
            }
            for (x, y) in cols.solution_scores.iter().zip(&base.solution_scores) {
                prop_assert!(same(*x, *y), "{} cols leave solutions", b.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_dsl_trees_are_total(seed in any::<u64>(), depth in 1..=5usize, g in grid(7)) {
        let s = random_strategy(seed, depth);
        // Evaluation may fault on non-finite values but must return.
        if let Ok(out) = s.score_grid(&g) {
            prop_assert_eq!(out.solution_scores.len(), g.rows());
            prop_assert_eq!(out.test_scores.len(), g.cols());
            let mut r = out.solution_ranking.clone();
            r.sort_unstable();
            prop_assert_eq!(r, (0..g.rows()).collect::<Vec<_>>());
            prop_assert!(out.solution_scores.iter().chain(&out.test_scores).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn strategy_json_round_trips(seed in any::<u64>(), depth in 1..=5usize) {
        let s = random_strategy(seed, depth);
        let back = Dsl::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back.fingerprint(), s.fingerprint());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn pass_count_totals_agree(pm in verdict_matrix()) {
        let (rows, cols) = pass_counts(&pm);
        let passes = pm.cells().iter().flatten().filter(|o| o.is_pass()).count();
        prop_assert_eq!(rows.iter().sum::<usize>(), passes);
        prop_assert_eq!(cols.iter().sum::<usize>(), passes);
    }

    #[test]
    fn binarize_is_idempotent(pm in verdict_matrix()) {
        let once = binarize(&pm);
        let twice = binarize(&PassMatrix::from_bools("p", &once));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn row_permutation_permutes_row_counts((g, rp, _) in grid_with_perms(6)) {
        let p = g.permute_rows(&rp);
        let base = g.row_counts();
        prop_assert_eq!(p.row_counts(), rp.iter().map(|&i| base[i]).collect::<Vec<_>>());
        prop_assert_eq!(p.col_counts(), g.col_counts());
    }

    #[test]
    fn consistency_is_monotone_in_k(cases in prop::collection::vec(case(8), 1..12)) {
        for b in Builtin::ALL {
            let s = b.strategy();
            let mut last = f64::INFINITY;
            for k in [1, 2, 3, 4] {
                let cfg = EvalConfig { k, use_criterion1: true };
                let report = consistency_of_cases(&s, &cases, &cfg).unwrap();
                prop_assert!(report.score <= last, "{} k={k}", b.name());
                prop_assert_eq!(report.total_exec, 4 * k as u64 * cases.len() as u64);
                last = report.score;
            }
        }
    }

    #[test]
    fn criterion1_never_raises_the_score(cases in prop::collection::vec(case(2), 1..12), k in 1..=1usize) {
        for b in Builtin::ALL {
            let s = b.strategy();
            let with = consistency_of_cases(&s, &cases, &EvalConfig { k, use_criterion1: true }).unwrap();
            let without = consistency_of_cases(&s, &cases, &EvalConfig { k, use_criterion1: false }).unwrap();
            prop_assert!(with.score <= without.score);
            prop_assert_eq!(with.total_exec, without.total_exec);
        }
    }
}

#[test]
fn pass_count_totals_on_every_small_grid() {
    for m in 1..=3 {
        for n in 1..=3 {
            for code in 0..(1u64 << (m * n)) {
                let g = BoolMatrix::from_code(m, n, code);
                let t = code.count_ones() as usize;
                assert_eq!(g.row_counts().iter().sum::<usize>(), t);
                assert_eq!(g.col_counts().iter().sum::<usize>(), t);
            }
        }
    }
}

#[test]
fn initial_and_inverse_reverse_each_other_on_distinct_columns() {
    // Column counts 3, 0, 1, 2.
    let g = BoolMatrix::from_bits(&["1011", "1001", "1000"]);
    let a = Builtin::Initial.strategy().score_grid(&g).unwrap().test_ranking;
    let mut b = Builtin::Inverse.strategy().score_grid(&g).unwrap().test_ranking;
    b.reverse();
    assert_eq!(a, b);
}
