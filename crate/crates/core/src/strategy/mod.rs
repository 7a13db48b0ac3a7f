//! Filtering strategies: a pair of scoring expressions that turn a pass grid
//! into solution scores and test scores, plus the induced rankings.

mod eval;
pub mod expr;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, StrategyFault};
use crate::matrix::{binarize, is_zero_variance, BoolMatrix, PassMatrix};

pub use expr::{Expr, ExprError, Kind, Shape, MAX_DEPTH, MAX_NODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy")]
pub struct Strategy {
    pub name: String,
    pub expr_solution: Expr,
    pub expr_test: Expr,
    /// Provenance: generation, parents, origin. Not interpreted.
    #[serde(default)]
    pub meta: Value,
    /// Secondary key for ordering solutions with equal scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_tiebreak: Option<Expr>,
}

#[derive(Deserialize)]
struct RawStrategy {
    name: String,
    expr_solution: Expr,
    expr_test: Expr,
    #[serde(default)]
    meta: Value,
    #[serde(default)]
    solution_tiebreak: Option<Expr>,
}

impl TryFrom<RawStrategy> for Strategy {
    type Error = Error;

    fn try_from(raw: RawStrategy) -> Result<Self> {
        Strategy::new(raw.name, raw.expr_solution, raw.expr_test, raw.solution_tiebreak, raw.meta)
    }
}

/// Scores and rankings for one matrix. Rankings list indices best first;
/// ties go to the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutput {
    pub solution_scores: Vec<f64>,
    pub test_scores: Vec<f64>,
    pub solution_ranking: Vec<usize>,
    pub test_ranking: Vec<usize>,
}

impl StrategyOutput {
    pub fn best_solution(&self) -> usize {
        self.solution_ranking[0]
    }

    pub fn worst_solution(&self) -> usize {
        *self.solution_ranking.last().expect("non-empty ranking")
    }

    pub fn best_test(&self) -> usize {
        self.test_ranking[0]
    }

    pub fn is_zero_variance(&self) -> bool {
        is_zero_variance(&self.test_scores).unwrap_or(true)
    }
}

/// Scores closer than this, relative to the larger magnitude (floor 1), rank
/// as ties. Exactly equal quantities can differ in the last bits depending on
/// how they were summed.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Dense tie classes, 0 for the highest scores. Neighbours in sorted order
/// within [`TIE_TOLERANCE`] share a class.
fn tie_classes(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut class = vec![0; values.len()];
    let mut current = 0;
    for w in order.windows(2) {
        let (hi, lo) = (values[w[0]], values[w[1]]);
        if hi - lo > TIE_TOLERANCE * hi.abs().max(lo.abs()).max(1.0) {
            current += 1;
        }
        class[w[1]] = current;
    }
    class
}

/// Descending by primary then secondary key, ascending index on ties.
pub fn rank_descending(primary: &[f64], secondary: Option<&[f64]>) -> Vec<usize> {
    let first = tie_classes(primary);
    let second = secondary.map(tie_classes);
    let mut order: Vec<usize> = (0..primary.len()).collect();
    order.sort_by(|&a, &b| {
        first[a]
            .cmp(&first[b])
            .then_with(|| match &second {
                Some(s) => s[a].cmp(&s[b]),
                None => Ordering::Equal,
            })
            .then(a.cmp(&b))
    });
    order
}

/// Anything that maps a pass grid to rankings.
pub trait Scorer: Sync {
    fn label(&self) -> &str;
    fn score(&self, grid: &BoolMatrix) -> Result<StrategyOutput>;
}

impl Scorer for Strategy {
    fn label(&self) -> &str {
        &self.name
    }

    fn score(&self, grid: &BoolMatrix) -> Result<StrategyOutput> {
        self.score_grid(grid)
    }
}

impl Strategy {
    pub fn new(
        name: impl Into<String>,
        expr_solution: Expr,
        expr_test: Expr,
        solution_tiebreak: Option<Expr>,
        meta: Value,
    ) -> Result<Self> {
        let strategy = Strategy {
            name: name.into(),
            expr_solution,
            expr_test,
            meta,
            solution_tiebreak,
        };
        strategy.check()?;
        Ok(strategy)
    }

    pub fn check(&self) -> Result<()> {
        let wrap = |what: &str, e: ExprError| Error::Expr(format!("{what}: {e}"));
        self.expr_solution.check(Shape::Row).map_err(|e| wrap("expr_solution", e))?;
        self.expr_test.check(Shape::Col).map_err(|e| wrap("expr_test", e))?;
        if let Some(t) = &self.solution_tiebreak {
            t.check(Shape::Row).map_err(|e| wrap("solution_tiebreak", e))?;
        }
        Ok(())
    }

    /// Total node count over all expressions.
    pub fn node_count(&self) -> usize {
        self.expr_solution.node_count()
            + self.expr_test.node_count()
            + self.solution_tiebreak.as_ref().map_or(0, Expr::node_count)
    }

    pub fn apply(&self, matrix: &PassMatrix) -> Result<StrategyOutput> {
        self.score_grid(&binarize(matrix))
    }

    pub fn score_grid(&self, grid: &BoolMatrix) -> Result<StrategyOutput> {
        let (m, n) = (grid.rows(), grid.cols());
        if m == 0 || n == 0 {
            return Err(Error::Malformed(format!("strategy needs a non-empty matrix, got {m}x{n}")));
        }
        let ctx = eval::Context::new(grid);
        let solution_scores = self.finalize(eval::eval(&self.expr_solution, &ctx).into_entries(m), "solution")?;
        let test_scores = self.finalize(eval::eval(&self.expr_test, &ctx).into_entries(n), "test")?;
        let tiebreak = match &self.solution_tiebreak {
            Some(t) => Some(self.finalize(eval::eval(t, &ctx).into_entries(m), "tiebreak")?),
            None => None,
        };
        Ok(StrategyOutput {
            solution_ranking: rank_descending(&solution_scores, tiebreak.as_deref()),
            test_ranking: rank_descending(&test_scores, None),
            solution_scores,
            test_scores,
        })
    }

    fn finalize(&self, entries: Vec<Option<f64>>, target: &'static str) -> Result<Vec<f64>> {
        entries
            .into_iter()
            .enumerate()
            .map(|(index, v)| match v {
                None => Ok(0.0),
                // Collapse -0.0 so it ties with 0.0 under total ordering.
                Some(0.0) => Ok(0.0),
                Some(x) if x.is_finite() => Ok(x),
                Some(_) => Err(Error::Strategy(StrategyFault {
                    strategy: self.name.clone(),
                    target,
                    index,
                })),
            })
            .collect()
    }

    /// Canonical JSON, the strategy file format.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("strategy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// SHA-256 over the expressions only; names and provenance do not affect it.
    pub fn fingerprint(&self) -> String {
        let body = json!({
            "expr_solution": self.expr_solution,
            "expr_test": self.expr_test,
            "solution_tiebreak": self.solution_tiebreak,
        });
        hex::encode(Sha256::digest(body.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Initial,
    Discriminative,
    Tfidf,
    Coverage,
    Inverse,
    Exclusion,
    HardnessAware,
}

impl Builtin {
    pub const ALL: [Builtin; 7] = [
        Builtin::Initial,
        Builtin::Discriminative,
        Builtin::Tfidf,
        Builtin::Coverage,
        Builtin::Inverse,
        Builtin::Exclusion,
        Builtin::HardnessAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Initial => "initial",
            Builtin::Discriminative => "discriminative",
            Builtin::Tfidf => "tfidf",
            Builtin::Coverage => "coverage",
            Builtin::Inverse => "inverse",
            Builtin::Exclusion => "exclusion",
            Builtin::HardnessAware => "hardness_aware",
        }
    }

    pub fn strategy(self) -> Strategy {
        use Expr as E;
        let normalized_gap = || {
            E::sub(
                E::mean_over_passers(E::normalize(E::RowPassCount)),
                E::mean_over_failers(E::normalize(E::RowPassCount)),
            )
        };
        let (solution, test, tiebreak) = match self {
            Builtin::Initial => (E::RowPassCount, E::ColPassCount, None),
            Builtin::Inverse => (E::RowPassCount, E::neg(E::ColPassCount), None),
            Builtin::Discriminative => (E::RowPassCount, normalized_gap(), None),
            // Sum over passed tests, written as mean times count.
            Builtin::Tfidf => (
                E::mul(E::mean_over_passers(E::IdfWeight), E::RowPassCount),
                E::IdfWeight,
                None,
            ),
            Builtin::Coverage => (
                E::RowPassCount,
                E::sub(
                    E::mean_over_passers(E::RowPassCount),
                    E::mean_over_failers(E::RowPassCount),
                ),
                None,
            ),
            Builtin::Exclusion => (E::RowPassCount, E::ExcludeSelfConsensus, None),
            Builtin::HardnessAware => (
                E::mul(E::mean_over_passers(E::StrictnessWeight), E::RowPassCount),
                E::mul(E::StrictnessWeight, normalized_gap()),
                Some(E::RowPassCount),
            ),
        };
        Strategy::new(self.name(), solution, test, tiebreak, json!({"origin": "builtin"}))
            .expect("built-in strategies type-check")
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

/// The canonical strategy for a built-in name.
pub fn builtin(name: &str) -> Result<Strategy> {
    Ok(name.parse::<Builtin>()?.strategy())
}

fn builtin_total(b: Builtin, matrix: &PassMatrix) -> StrategyOutput {
    // Built-ins only combine bounded counts, so they never fault.
    b.strategy()
        .apply(matrix)
        .expect("built-in strategies are finite on non-empty matrices")
}

/// Solutions by pass count; tests by the gap between the mean normalized
/// scores of their passers and failers.
pub fn score_discriminative(matrix: &PassMatrix) -> StrategyOutput {
    builtin_total(Builtin::Discriminative, matrix)
}

/// Tests weighted by rarity of passing; solutions by summed weight of passed tests.
pub fn score_tfidf(matrix: &PassMatrix) -> StrategyOutput {
    builtin_total(Builtin::Tfidf, matrix)
}

/// Solutions by raw pass count; tests by the raw-score gap.
pub fn score_coverage(matrix: &PassMatrix) -> StrategyOutput {
    builtin_total(Builtin::Coverage, matrix)
}

/// Tests judged only by solutions that pass every other test.
pub fn score_exclusion(matrix: &PassMatrix) -> StrategyOutput {
    builtin_total(Builtin::Exclusion, matrix)
}

/// Strictness-weighted solution scores; tests by strictness times the
/// normalized gap.
pub fn score_hardness_aware(matrix: &PassMatrix) -> StrategyOutput {
    builtin_total(Builtin::HardnessAware, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Verdict;

    fn grid(bits: &[&str]) -> PassMatrix {
        PassMatrix::from_bools("p", &BoolMatrix::from_bits(bits))
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    const A: [&str; 3] = ["111", "110", "000"];
    const B: [&str; 3] = ["11", "10", "10"];

    #[test]
    fn initial_on_three_by_two() {
        let m = PassMatrix::from_verdicts(
            "p",
            &[
                vec![Verdict::Pass, Verdict::Pass],
                vec![Verdict::Pass, Verdict::Error],
                vec![Verdict::Fail, Verdict::Fail],
            ],
        )
        .unwrap();
        let out = builtin("initial").unwrap().apply(&m).unwrap();
        assert_eq!(out.solution_scores, vec![2.0, 1.0, 0.0]);
        assert_eq!(out.test_scores, vec![2.0, 1.0]);
        assert_eq!(out.best_solution(), 0);
        assert_eq!(out.solution_ranking, vec![0, 1, 2]);
        assert_eq!(out.test_ranking, vec![0, 1]);
    }

    #[test]
    fn last_bit_differences_are_ties() {
        let third = 1.0 - 2.0 / 3.0;
        let scores = [2.0 / 3.0, third + third, 0.1];
        assert_ne!(scores[0], scores[1]);
        assert_eq!(rank_descending(&scores, None), [0, 1, 2]);
        assert_eq!(rank_descending(&scores, Some(&[1.0, 2.0, 0.0])), [1, 0, 2]);
        assert_eq!(rank_descending(&[1e12, 1e12 + 1.0], None), [0, 1]);
        assert_eq!(rank_descending(&[1.0, 1.0 + 1e-6], None), [1, 0]);
    }

    #[test]
    fn singleton_rankings() {
        for b in Builtin::ALL {
            let out = b.strategy().apply(&grid(&["1"])).unwrap();
            assert_eq!(out.solution_ranking, vec![0]);
            assert_eq!(out.test_ranking, vec![0]);
        }
    }

    #[test]
    fn constant_test_expression_is_zero_variance() {
        let s = Strategy::new("const", Expr::RowPassCount, Expr::Const(5.0), None, Value::Null).unwrap();
        let out = s.apply(&grid(&A)).unwrap();
        assert_eq!(out.test_scores, vec![5.0; 3]);
        assert!(out.is_zero_variance());
    }

    #[test]
    fn inverse_negates_counts() {
        let out = builtin("inverse").unwrap().apply(&grid(&B)).unwrap();
        assert_eq!(out.test_scores, vec![-3.0, -1.0]);
        assert_eq!(out.test_ranking, vec![1, 0]);
    }

    #[test]
    fn discriminative_reverses_initial_on_b() {
        let out = score_discriminative(&grid(&B));
        assert_eq!(out.solution_scores, vec![2.0, 1.0, 1.0]);
        assert_eq!(out.test_scores, vec![0.0, 1.0]);
        assert_eq!(out.test_ranking, vec![1, 0]);
        let init = builtin("initial").unwrap().apply(&grid(&B)).unwrap();
        assert_eq!(init.test_ranking, vec![0, 1]);
    }

    #[test]
    fn discriminative_on_a() {
        let out = score_discriminative(&grid(&A));
        assert!(close(&out.test_scores, &[5.0 / 6.0, 5.0 / 6.0, 2.0 / 3.0]), "{:?}", out.test_scores);
        assert_eq!(out.test_ranking, vec![0, 1, 2]);
    }

    #[test]
    fn discriminative_degenerate_cases() {
        assert_eq!(score_discriminative(&grid(&["11", "11"])).test_scores, vec![0.0, 0.0]);
        assert_eq!(score_discriminative(&grid(&["101"])).test_scores, vec![0.0; 3]);
    }

    #[test]
    fn tfidf_on_b() {
        let out = score_tfidf(&grid(&B));
        assert!(close(&out.test_scores, &[0.0, 2f64.ln()]));
        assert!(close(&out.solution_scores, &[2f64.ln(), 0.0, 0.0]));
        let none = score_tfidf(&grid(&["0", "0", "0"]));
        assert!(close(&none.test_scores, &[4f64.ln()]));
    }

    #[test]
    fn coverage_cases() {
        let out = score_coverage(&grid(&B));
        assert_eq!(out.solution_scores, vec![2.0, 1.0, 1.0]);
        assert_eq!(out.test_scores, vec![0.0, 1.0]);
        let all_fail = score_coverage(&grid(&["00", "00"]));
        assert_eq!(all_fail.solution_scores, vec![0.0, 0.0]);
        assert_eq!(all_fail.test_scores, vec![0.0, 0.0]);
        let single = score_coverage(&grid(&["1"]));
        assert_eq!((single.solution_scores, single.test_scores), (vec![1.0], vec![0.0]));
    }

    #[test]
    fn exclusion_cases() {
        let out = score_exclusion(&grid(&A));
        assert_eq!(out.test_scores, vec![1.0, 1.0, 0.0]);
        assert_eq!(out.test_ranking, vec![0, 1, 2]);
        assert_eq!(score_exclusion(&grid(&["111", "111"])).test_scores, vec![2.0; 3]);
        assert_eq!(score_exclusion(&grid(&["1", "0"])).test_scores, vec![0.0]);
    }

    #[test]
    fn hardness_aware_cases() {
        let out = score_hardness_aware(&grid(&B));
        assert!(close(&out.solution_scores, &[2.0 / 3.0, 0.0, 0.0]));
        assert!(close(&out.test_scores, &[0.0, 2.0 / 3.0]));
        assert_eq!(out.test_ranking, vec![1, 0]);
        // One passer out of sixteen.
        let mut rows = vec!["0"; 16];
        rows[5] = "1";
        let g = BoolMatrix::from_bits(&rows);
        let strict = {
            let ctx = eval::Context::new(&g);
            eval::eval(&Expr::StrictnessWeight, &ctx).into_entries(1)
        };
        assert_eq!(strict, vec![Some(15.0 / 16.0)]);
    }

    #[test]
    fn hardness_tiebreak_uses_pass_count() {
        // Strictness [1/4, 1/4, 1/2]; s0, s1 and s3 all score 1/2 but s1
        // passes a single test.
        let out = score_hardness_aware(&grid(&["110", "001", "111", "110"]));
        assert_eq!(out.solution_scores, vec![0.5, 0.5, 1.0, 0.5]);
        assert_eq!(out.solution_ranking, vec![2, 0, 3, 1]);
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin("nope"), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn non_finite_scores_fault() {
        let huge = Expr::mul(Expr::Const(1e300), Expr::mul(Expr::Const(1e300), Expr::ColPassCount));
        let s = Strategy::new("boom", Expr::RowPassCount, huge, None, Value::Null).unwrap();
        assert!(matches!(s.apply(&grid(&A)), Err(Error::Strategy(_))));
    }

    #[test]
    fn strategy_file_round_trip_is_byte_identical() {
        for b in Builtin::ALL {
            let text = b.strategy().to_json();
            let again = Strategy::from_json(&text).unwrap().to_json();
            assert_eq!(text, again);
        }
        let text = r#"{"name":"x","expr_solution":["RowPassCount"],"expr_test":["Neg",["Const",0.1]],"meta":{"generation":3,"parents":["a"]}}"#;
        assert_eq!(Strategy::from_json(text).unwrap().to_json(), text);
    }

    #[test]
    fn strategy_file_rejects_ill_typed() {
        let bad = r#"{"name":"x","expr_solution":["ColPassCount"],"expr_test":["ColPassCount"],"meta":{}}"#;
        assert!(Strategy::from_json(bad).is_err());
    }

    #[test]
    fn fingerprint_ignores_name() {
        let mut a = builtin("initial").unwrap();
        let fp = a.fingerprint();
        a.name = "renamed".into();
        assert_eq!(a.fingerprint(), fp);
        assert_ne!(builtin("inverse").unwrap().fingerprint(), fp);
    }
}
