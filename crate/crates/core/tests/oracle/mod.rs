//! Brute-force re-implementation of every built-in strategy in exact
//! rational arithmetic. Shares no code with the DSL interpreter.
//!
//! tfidf involves logarithms, so its ranking is decided by comparing the
//! rational arguments of the logs (ln is monotone and sums of logs are logs
//! of products).
#![allow(dead_code)]

use std::cmp::Ordering;

use verisynth::matrix::BoolMatrix;
use verisynth::strategy::{Builtin, StrategyOutput};

#[derive(Debug, Clone, Copy)]
pub struct Q {
    pub num: i128,
    pub den: i128,
}

pub fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Q {
    pub fn new(num: i128, den: i128) -> Q {
        assert!(den != 0);
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Q { num: s * num / g, den: s * den / g }
    }
    pub fn int(v: i128) -> Q {
        Q::new(v, 1)
    }
    pub fn add(self, o: Q) -> Q {
        Q::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    pub fn sub(self, o: Q) -> Q {
        self.add(Q::new(-o.num, o.den))
    }
    pub fn mul(self, o: Q) -> Q {
        Q::new(self.num * o.num, self.den * o.den)
    }
    pub fn div(self, o: Q) -> Q {
        Q::new(self.num * o.den, self.den * o.num)
    }
    pub fn f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Q {
    fn eq(&self, o: &Q) -> bool {
        self.num * o.den == o.num * self.den
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, o: &Q) -> Option<Ordering> {
        (self.num * o.den).partial_cmp(&(o.num * self.den))
    }
}

/// A score as the oracle knows it: its value for comparison against the
/// implementation and an exact key for ranking.
#[derive(Debug, Clone, Copy)]
pub struct Score {
    pub value: f64,
    pub key: Q,
}

pub fn exact(q: Q) -> Score {
    Score { value: q.f64(), key: q }
}

/// Score `ln(q)`, ranked by `q`.
pub fn log_of(q: Q) -> Score {
    Score { value: q.f64().ln(), key: q }
}

pub fn rank(primary: &[Score], secondary: Option<&[Q]>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..primary.len()).collect();
    idx.sort_by(|&a, &b| {
        primary[b]
            .key
            .partial_cmp(&primary[a].key)
            .unwrap()
            .then_with(|| match secondary {
                Some(s) => s[b].partial_cmp(&s[a]).unwrap(),
                None => Ordering::Equal,
            })
            .then(a.cmp(&b))
    });
    idx
}

pub struct Expected {
    pub solution: Vec<Score>,
    pub test: Vec<Score>,
    pub tiebreak: Option<Vec<Q>>,
}

pub fn rows(g: &BoolMatrix) -> Vec<i128> {
    g.row_counts().into_iter().map(|c| c as i128).collect()
}

pub fn cols(g: &BoolMatrix) -> Vec<i128> {
    g.col_counts().into_iter().map(|c| c as i128).collect()
}

/// Mean of passers minus mean of failers of `values` on test `t`, or 0 if
/// either group is empty.
pub fn gap(g: &BoolMatrix, values: &[Q], t: usize) -> Q {
    let (mut ps, mut pn, mut fs, mut fn_) = (Q::int(0), 0, Q::int(0), 0);
    for (s, &v) in values.iter().enumerate() {
        if g.get(s, t) {
            ps = ps.add(v);
            pn += 1;
        } else {
            fs = fs.add(v);
            fn_ += 1;
        }
    }
    if pn == 0 || fn_ == 0 {
        return Q::int(0);
    }
    ps.div(Q::int(pn)).sub(fs.div(Q::int(fn_)))
}

pub fn normalized_rows(g: &BoolMatrix) -> Vec<Q> {
    let r = rows(g);
    let (lo, hi) = (*r.iter().min().unwrap(), *r.iter().max().unwrap());
    r.iter()
        .map(|&c| if hi == lo { Q::new(1, 2) } else { Q::new(c - lo, hi - lo) })
        .collect()
}

pub fn strictness(g: &BoolMatrix) -> Vec<Q> {
    let m = g.rows() as i128;
    cols(g)
        .into_iter()
        .map(|p| if p > 0 && p < m { Q::int(1).sub(Q::new(p, m)) } else { Q::int(0) })
        .collect()
}

pub fn oracle(b: Builtin, g: &BoolMatrix) -> Expected {
    let (m, n) = (g.rows(), g.cols());
    let raw: Vec<Score> = rows(g).into_iter().map(|c| exact(Q::int(c))).collect();
    match b {
        Builtin::Initial => Expected {
            solution: raw,
            test: cols(g).into_iter().map(|c| exact(Q::int(c))).collect(),
            tiebreak: None,
        },
        Builtin::Inverse => Expected {
            solution: raw,
            test: cols(g).into_iter().map(|c| exact(Q::int(-c))).collect(),
            tiebreak: None,
        },
        Builtin::Discriminative => {
            let norm = normalized_rows(g);
            Expected {
                solution: raw,
                test: (0..n).map(|t| exact(gap(g, &norm, t))).collect(),
                tiebreak: None,
            }
        }
        Builtin::Coverage => {
            let counts: Vec<Q> = rows(g).into_iter().map(Q::int).collect();
            Expected {
                solution: raw,
                test: (0..n).map(|t| exact(gap(g, &counts, t))).collect(),
                tiebreak: None,
            }
        }
        Builtin::Tfidf => {
            let m1 = m as i128 + 1;
            let ratio: Vec<Q> = cols(g).into_iter().map(|p| Q::new(m1, p + 1)).collect();
            let solution = (0..m)
                .map(|s| {
                    let product = (0..n).filter(|&t| g.get(s, t)).fold(Q::int(1), |acc, t| acc.mul(ratio[t]));
                    log_of(product)
                })
                .collect();
            Expected {
                solution,
                test: ratio.into_iter().map(log_of).collect(),
                tiebreak: None,
            }
        }
        Builtin::Exclusion => {
            let test = (0..n)
                .map(|t| {
                    if n < 2 {
                        return exact(Q::int(0));
                    }
                    let mut score = 0;
                    for s in 0..m {
                        if (0..n).filter(|&u| u != t).all(|u| g.get(s, u)) {
                            score += if g.get(s, t) { 1 } else { -1 };
                        }
                    }
                    exact(Q::int(score))
                })
                .collect();
            Expected { solution: raw, test, tiebreak: None }
        }
        Builtin::HardnessAware => {
            let st = strictness(g);
            let norm = normalized_rows(g);
            let solution = (0..m)
                .map(|s| exact((0..n).filter(|&t| g.get(s, t)).fold(Q::int(0), |acc, t| acc.add(st[t]))))
                .collect();
            Expected {
                solution,
                test: (0..n).map(|t| exact(st[t].mul(gap(g, &norm, t)))).collect(),
                tiebreak: Some(rows(g).into_iter().map(Q::int).collect()),
            }
        }
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn check(b: Builtin, g: &BoolMatrix) -> Result<(), String> {
    let out: StrategyOutput = b.strategy().score_grid(g).map_err(|e| e.to_string())?;
    let want = oracle(b, g);
    let ctx = format!("{} on {:?}", b.name(), g.to_rows());
    for (got, w) in out.solution_scores.iter().zip(&want.solution) {
        if !close(*got, w.value) {
            return Err(format!("solution score {got} vs {}: {ctx}", w.value));
        }
    }
    for (got, w) in out.test_scores.iter().zip(&want.test) {
        if !close(*got, w.value) {
            return Err(format!("test score {got} vs {}: {ctx}", w.value));
        }
    }
    if out.solution_ranking != rank(&want.solution, want.tiebreak.as_deref()) {
        return Err(format!("solution ranking: {ctx}"));
    }
    if out.test_ranking != rank(&want.test, None) {
        return Err(format!("test ranking: {ctx}"));
    }
    Ok(())
}

/// Every grid of every shape up to `max` x `max`.
pub fn all_grids(max: usize) -> impl Iterator<Item = BoolMatrix> {
    (1..=max).flat_map(move |m| {
        (1..=max).flat_map(move |n| (0..(1u64 << (m * n))).map(move |code| BoolMatrix::from_code(m, n, code)))
    })
}

