//! Pass matrices and the primitives every strategy builds on.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Outcome, Verdict};

/// M×N outcome grid: every candidate solution (row) run against every
/// candidate test (column) of one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPassMatrix")]
pub struct PassMatrix {
    pub problem_id: String,
    pub solution_ids: Vec<String>,
    pub test_ids: Vec<String>,
    cells: Vec<Vec<Outcome>>,
}

#[derive(Deserialize)]
struct RawPassMatrix {
    problem_id: String,
    solution_ids: Vec<String>,
    test_ids: Vec<String>,
    cells: Vec<Vec<Outcome>>,
}

impl TryFrom<RawPassMatrix> for PassMatrix {
    type Error = Error;

    fn try_from(raw: RawPassMatrix) -> Result<Self> {
        PassMatrix::new(raw.problem_id, raw.solution_ids, raw.test_ids, raw.cells)
    }
}

pub(crate) fn check_unique<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

impl PassMatrix {
    pub fn new(
        problem_id: impl Into<String>,
        solution_ids: Vec<String>,
        test_ids: Vec<String>,
        cells: Vec<Vec<Outcome>>,
    ) -> Result<Self> {
        if cells.len() != solution_ids.len() {
            return Err(Error::Malformed(format!(
                "matrix has {} rows but {} solution ids",
                cells.len(),
                solution_ids.len()
            )));
        }
        if let Some((i, row)) = cells.iter().enumerate().find(|(_, r)| r.len() != test_ids.len()) {
            return Err(Error::Malformed(format!(
                "matrix row {i} has {} cells but {} test ids",
                row.len(),
                test_ids.len()
            )));
        }
        check_unique(solution_ids.iter().map(String::as_str))?;
        check_unique(test_ids.iter().map(String::as_str))?;
        Ok(PassMatrix {
            problem_id: problem_id.into(),
            solution_ids,
            test_ids,
            cells,
        })
    }

    /// Builds a matrix from bare verdicts with generated ids `s{i}` / `t{j}`.
    pub fn from_verdicts(problem_id: impl Into<String>, verdicts: &[Vec<Verdict>]) -> Result<Self> {
        let cols = verdicts.first().map_or(0, Vec::len);
        let cells = verdicts
            .iter()
            .map(|row| row.iter().map(|&v| Outcome::from_verdict(v, 0)).collect())
            .collect();
        PassMatrix::new(
            problem_id,
            (0..verdicts.len()).map(|i| format!("s{i}")).collect(),
            (0..cols).map(|j| format!("t{j}")).collect(),
            cells,
        )
    }

    /// Builds an all-pass/fail matrix from a boolean grid.
    pub fn from_bools(problem_id: impl Into<String>, grid: &BoolMatrix) -> Self {
        let verdicts: Vec<Vec<Verdict>> = (0..grid.rows())
            .map(|i| {
                (0..grid.cols())
                    .map(|j| if grid.get(i, j) { Verdict::Pass } else { Verdict::Fail })
                    .collect()
            })
            .collect();
        PassMatrix::from_verdicts(problem_id, &verdicts).expect("generated ids are unique")
    }

    pub fn rows(&self) -> usize {
        self.solution_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.test_ids.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Outcome {
        &self.cells[row][col]
    }

    pub fn row(&self, row: usize) -> &[Outcome] {
        &self.cells[row]
    }

    pub fn cells(&self) -> &[Vec<Outcome>] {
        &self.cells
    }

    pub fn solution_index(&self, id: &str) -> Option<usize> {
        self.solution_ids.iter().position(|s| s == id)
    }

    pub fn test_index(&self, id: &str) -> Option<usize> {
        self.test_ids.iter().position(|t| t == id)
    }

    /// Copy with every wall time zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> PassMatrix {
        PassMatrix {
            cells: self
                .cells
                .iter()
                .map(|row| row.iter().map(Outcome::without_timing).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Dense row-major boolean grid; `true` means pass.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), rows * cols, "grid data does not match {rows}x{cols}");
        BoolMatrix { rows, cols, data }
    }

    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        BoolMatrix::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        BoolMatrix::new(rows.len(), cols, data)
    }

    /// Parses rows of `0`/`1` characters, e.g. `["11", "10", "00"]`.
    pub fn from_bits(rows: &[&str]) -> Self {
        let rows: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1').collect())
            .collect();
        BoolMatrix::from_rows(&rows)
    }

    /// Decodes the low `rows*cols` bits of `code` in row-major order.
    pub fn from_code(rows: usize, cols: usize, code: u64) -> Self {
        let data = (0..rows * cols).map(|k| code >> k & 1 == 1).collect();
        BoolMatrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row_counts(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.row(i).iter().filter(|&&b| b).count()).collect()
    }

    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for i in 0..self.rows {
            for (j, &b) in self.row(i).iter().enumerate() {
                counts[j] += usize::from(b);
            }
        }
        counts
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Row `k` of the result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> BoolMatrix {
        let rows: Vec<Vec<bool>> = perm.iter().map(|&i| self.row(i).to_vec()).collect();
        if rows.is_empty() {
            return BoolMatrix::new(0, self.cols, Vec::new());
        }
        BoolMatrix::from_rows(&rows)
    }

    /// Column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_cols(&self, perm: &[usize]) -> BoolMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            data.extend(perm.iter().map(|&j| self.get(i, j)));
        }
        BoolMatrix::new(self.rows, perm.len(), data)
    }

    /// Leading `rows`×`cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> BoolMatrix {
        assert!(rows <= self.rows && cols <= self.cols);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend_from_slice(&self.row(i)[..cols]);
        }
        BoolMatrix::new(rows, cols, data)
    }
}

/// Pass/fail view of a matrix. Error and timeout collapse to fail.
pub fn binarize(matrix: &PassMatrix) -> BoolMatrix {
    let data = matrix
        .cells()
        .iter()
        .flat_map(|row| row.iter().map(Outcome::is_pass))
        .collect();
    BoolMatrix::new(matrix.rows(), matrix.cols(), data)
}

/// Per-solution and per-test pass counts of the binarized grid.
pub fn pass_counts(matrix: &PassMatrix) -> (Vec<usize>, Vec<usize>) {
    let grid = binarize(matrix);
    (grid.row_counts(), grid.col_counts())
}

/// True iff every score is identical. An empty list is a malformed instance.
pub fn is_zero_variance(scores: &[f64]) -> Result<bool> {
    let (first, rest) = scores
        .split_first()
        .ok_or_else(|| Error::Malformed("zero-variance check on an empty score list".into()))?;
    let (min, max) = rest
        .iter()
        .fold((*first, *first), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    Ok(max - min == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::*;

    fn three_by_two() -> PassMatrix {
        PassMatrix::from_verdicts("p", &[vec![Pass, Pass], vec![Pass, Error], vec![Fail, Fail]]).unwrap()
    }

    #[test]
    fn binarize_all_pass() {
        let m = PassMatrix::from_verdicts("p", &[vec![Pass, Pass], vec![Pass, Pass]]).unwrap();
        assert_eq!(binarize(&m), BoolMatrix::filled(2, 2, true));
    }

    #[test]
    fn binarize_timeout_is_false() {
        let m = PassMatrix::from_verdicts("p", &[vec![Timeout]]).unwrap();
        assert!(!binarize(&m).get(0, 0));
    }

    #[test]
    fn binarize_mixed_grid() {
        assert_eq!(binarize(&three_by_two()), BoolMatrix::from_bits(&["11", "10", "00"]));
    }

    #[test]
    fn pass_counts_examples() {
        assert_eq!(pass_counts(&three_by_two()), (vec![2, 1, 0], vec![2, 1]));
        let all_fail = PassMatrix::from_verdicts("p", &[vec![Fail, Fail], vec![Fail, Fail]]).unwrap();
        assert_eq!(pass_counts(&all_fail), (vec![0, 0], vec![0, 0]));
        let single = PassMatrix::from_verdicts("p", &[vec![Pass]]).unwrap();
        assert_eq!(pass_counts(&single), (vec![1], vec![1]));
    }

    #[test]
    fn zero_variance_examples() {
        assert!(is_zero_variance(&[3.0, 3.0, 3.0]).unwrap());
        assert!(!is_zero_variance(&[0.5, 0.5, 0.6]).unwrap());
        assert!(is_zero_variance(&[7.0]).unwrap());
        assert!(matches!(is_zero_variance(&[]), Err(crate::error::Error::Malformed(_))));
    }

    #[test]
    fn binarize_is_idempotent() {
        let grid = binarize(&three_by_two());
        let again = binarize(&PassMatrix::from_bools("p", &grid));
        assert_eq!(grid, again);
    }

    // Exhaustive over every grid with M, N <= 3.
    #[test]
    fn count_totals_agree_exhaustively() {
        for m in 1..=3 {
            for n in 1..=3 {
                for code in 0..1u64 << (m * n) {
                    let g = BoolMatrix::from_code(m, n, code);
                    let rows: usize = g.row_counts().iter().sum();
                    let cols: usize = g.col_counts().iter().sum();
                    assert_eq!(rows, cols);
                    assert_eq!(rows, code.count_ones() as usize);
                }
            }
        }
    }

    #[test]
    fn row_permutation_moves_row_counts_only() {
        let g = BoolMatrix::from_bits(&["110", "011", "000", "111"]);
        let perm = [2, 0, 3, 1];
        let p = g.permute_rows(&perm);
        let rc = g.row_counts();
        assert_eq!(p.row_counts(), perm.iter().map(|&i| rc[i]).collect::<Vec<_>>());
        assert_eq!(p.col_counts(), g.col_counts());
    }

    #[test]
    fn matrix_rejects_bad_shapes_and_duplicates() {
        let dup = PassMatrix::new("p", vec!["a".into(), "a".into()], vec!["t".into()], vec![vec![Outcome::pass(0)]; 2]);
        assert!(matches!(dup, Err(crate::error::Error::DuplicateId(_))));
        let ragged = PassMatrix::new("p", vec!["a".into()], vec!["t".into(), "u".into()], vec![vec![Outcome::pass(0)]]);
        assert!(matches!(ragged, Err(crate::error::Error::Malformed(_))));
    }

    #[test]
    fn interchange_format_is_exact() {
        let m = PassMatrix::from_verdicts("p", &[vec![Pass, Timeout]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(
            json,
            r#"{"problem_id":"p","solution_ids":["s0"],"test_ids":["t0","t1"],"cells":[[{"verdict":"pass","wall_time_ms":0},{"verdict":"timeout","wall_time_ms":0,"detail":"timeout"}]]}"#
        );
        let back: PassMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
