//! Expression interpreter.
//!
//! Entries are `Option<f64>`: a mean over an empty group is undefined, and
//! undefined propagates through arithmetic. Undefined entries score 0 once
//! a strategy's output is finalized, so a test without passers or without
//! failers gets a zero discriminative gap.
//!
//! Means are summed in sorted order, which makes every node exactly
//! equivariant under row and column permutations.

use crate::matrix::BoolMatrix;

use super::expr::Expr;

pub(crate) type Entries = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Value {
    Scalar(Option<f64>),
    Row(Entries),
    Col(Entries),
}

impl Value {
    /// Broadcasts to a vector of `len` entries.
    pub(crate) fn into_entries(self, len: usize) -> Entries {
        match self {
            Value::Scalar(v) => vec![v; len],
            Value::Row(v) | Value::Col(v) => v,
        }
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Value {
        let g = |v: Option<f64>| v.map(&f);
        match self {
            Value::Scalar(v) => Value::Scalar(g(v)),
            Value::Row(v) => Value::Row(v.into_iter().map(g).collect()),
            Value::Col(v) => Value::Col(v.into_iter().map(g).collect()),
        }
    }
}

pub(crate) struct Context<'a> {
    grid: &'a BoolMatrix,
    row_counts: Vec<f64>,
    col_counts: Vec<f64>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(grid: &'a BoolMatrix) -> Self {
        Context {
            grid,
            row_counts: grid.row_counts().into_iter().map(|c| c as f64).collect(),
            col_counts: grid.col_counts().into_iter().map(|c| c as f64).collect(),
        }
    }

    fn m(&self) -> usize {
        self.grid.rows()
    }

    fn n(&self) -> usize {
        self.grid.cols()
    }
}

/// Mean of a group; undefined if the group is empty or any member is.
fn group_mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut defined: Vec<f64> = values.collect::<Option<Vec<f64>>>()?;
    if defined.is_empty() {
        return None;
    }
    defined.sort_by(f64::total_cmp);
    let sum: f64 = defined.iter().sum();
    Some(sum / defined.len() as f64)
}

fn normalize(values: Entries) -> Entries {
    let defined = values.iter().flatten();
    let lo = defined.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = defined.copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .into_iter()
        .map(|v| v.map(|x| if span == 0.0 { 0.5 } else { (x - lo) / span }))
        .collect()
}

fn zip_with(a: Value, b: Value, f: impl Fn(f64, f64) -> f64) -> Value {
    let op = |x: Option<f64>, y: Option<f64>| Some(f(x?, y?));
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(op(x, y)),
        (Value::Scalar(x), Value::Row(v)) => Value::Row(v.into_iter().map(|y| op(x, y)).collect()),
        (Value::Scalar(x), Value::Col(v)) => Value::Col(v.into_iter().map(|y| op(x, y)).collect()),
        (Value::Row(v), Value::Scalar(y)) => Value::Row(v.into_iter().map(|x| op(x, y)).collect()),
        (Value::Col(v), Value::Scalar(y)) => Value::Col(v.into_iter().map(|x| op(x, y)).collect()),
        (Value::Row(v), Value::Row(w)) => Value::Row(v.into_iter().zip(w).map(|(x, y)| op(x, y)).collect()),
        (Value::Col(v), Value::Col(w)) => Value::Col(v.into_iter().zip(w).map(|(x, y)| op(x, y)).collect()),
        // Rejected by type checking; evaluate to undefined rather than panic.
        (Value::Row(v), Value::Col(_)) | (Value::Col(_), Value::Row(v)) => Value::Row(vec![None; v.len()]),
    }
}

/// Mean of `child` over the pass (`want = true`) or fail group along the
/// opposite axis.
fn mean_over(ctx: &Context<'_>, child: Value, want: bool) -> Value {
    let g = ctx.grid;
    match child {
        Value::Row(per_solution) => Value::Col(
            (0..ctx.n())
                .map(|t| group_mean((0..ctx.m()).filter(|&s| g.get(s, t) == want).map(|s| per_solution[s])))
                .collect(),
        ),
        Value::Col(per_test) => Value::Row(
            (0..ctx.m())
                .map(|s| group_mean((0..ctx.n()).filter(|&t| g.get(s, t) == want).map(|t| per_test[t])))
                .collect(),
        ),
        Value::Scalar(_) => Value::Scalar(None),
    }
}

fn exclusion(ctx: &Context<'_>) -> Entries {
    let (m, n, g) = (ctx.m(), ctx.n(), ctx.grid);
    if n < 2 {
        return vec![Some(0.0); n];
    }
    (0..n)
        .map(|t| {
            let mut score = 0i64;
            for s in 0..m {
                let passes_others = (0..n).filter(|&u| u != t).all(|u| g.get(s, u));
                if passes_others {
                    score += if g.get(s, t) { 1 } else { -1 };
                }
            }
            Some(score as f64)
        })
        .collect()
}

pub(crate) fn eval(expr: &Expr, ctx: &Context<'_>) -> Value {
    let m = ctx.m() as f64;
    match expr {
        Expr::RowPassCount => Value::Row(ctx.row_counts.iter().map(|&c| Some(c)).collect()),
        Expr::ColPassCount => Value::Col(ctx.col_counts.iter().map(|&c| Some(c)).collect()),
        Expr::Const(v) => Value::Scalar(Some(*v)),
        Expr::Normalize(c) => match eval(c, ctx) {
            Value::Scalar(v) => Value::Scalar(v.map(|_| 0.5)),
            Value::Row(v) => Value::Row(normalize(v)),
            Value::Col(v) => Value::Col(normalize(v)),
        },
        Expr::MeanOverPassers(c) => mean_over(ctx, eval(c, ctx), true),
        Expr::MeanOverFailers(c) => mean_over(ctx, eval(c, ctx), false),
        Expr::Sub(a, b) => zip_with(eval(a, ctx), eval(b, ctx), |x, y| x - y),
        Expr::Add(a, b) => zip_with(eval(a, ctx), eval(b, ctx), |x, y| x + y),
        Expr::Mul(a, b) => zip_with(eval(a, ctx), eval(b, ctx), |x, y| x * y),
        Expr::Neg(c) => eval(c, ctx).map(|x| -x),
        Expr::IdfWeight => Value::Col(
            ctx.col_counts
                .iter()
                .map(|&p| Some(((m + 1.0) / (1.0 + p)).ln()))
                .collect(),
        ),
        Expr::StrictnessWeight => Value::Col(
            ctx.col_counts
                .iter()
                .map(|&p| Some(if p > 0.0 && p < m { 1.0 - p / m } else { 0.0 }))
                .collect(),
        ),
        Expr::ExcludeSelfConsensus => Value::Col(exclusion(ctx)),
    }
}
